//! Tuning t so the restriction to 𝕋 has a prescribed rotation number.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::models::{mating_unchecked, PetersenModel};
use super::product::BlaschkeProduct;
use crate::cf_arith::ContinuedFraction;
use crate::circle_dyn::{displacement, orbit_displacement, rotation_number, RotationEstimate};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Petersen,
    Mating { nu: f64 },
}

impl Family {
    pub fn map_at(&self, t: f64) -> BlaschkeProduct {
        match *self {
            Family::Petersen => PetersenModel::new(t).map,
            Family::Mating { nu } => mating_unchecked(t, nu).map,
        }
    }

    /// Unreduced displacement at t = 0 and t = 1.
    pub fn endpoints(&self) -> (f64, f64) {
        match *self {
            Family::Petersen => (0.0, 1.0),
            Family::Mating { nu } => (-nu, -nu - 1.0),
        }
    }

    /// Integer k with θ − k inside the endpoint range.
    pub fn shift(&self, theta: f64) -> i64 {
        match *self {
            Family::Petersen => 0,
            Family::Mating { nu } => (theta + nu).floor() as i64 + 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Petersen => "petersen",
            Family::Mating { .. } => "mating",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub scan_samples: usize,
    pub probe_iters: usize,
    pub confirm_iters: usize,
    pub cf_depth: usize,
    pub bisection_steps: usize,
    /// Largest convergent denominator used by the periodic-orbit refinement; 0 disables it.
    pub refine_qmax: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            scan_samples: 512,
            probe_iters: 100_000,
            confirm_iters: 1_000_000,
            cf_depth: 5,
            bisection_steps: 40,
            refine_qmax: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    pub displacement: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub n: usize,
    pub q: u64,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub family: Family,
    pub t: f64,
    pub target: f64,
    pub brackets: Vec<(f64, f64)>,
    pub bisection_bracket: (f64, f64),
    pub refinement: Option<Refinement>,
    pub rotation: RotationEstimate,
    pub cf_prefix: Vec<u64>,
    pub scan: Vec<ScanRow>,
}

/// Finds t with ρ(family(t)|𝕋) = θ.
///
/// Scan the unreduced displacement, bisect the first bracket with Birkhoff
/// probes, then sharpen with the parameters where the critical point is
/// periodic with rotation p_n/q_n, which converge to the answer from both sides.
pub fn solve_t(theta: &ContinuedFraction, family: Family, cfg: &SolveConfig) -> Result<SolveReport> {
    let th = theta.to_f64();
    let k = family.shift(th);
    let target = th - k as f64;
    let objective = |t: f64| -> Result<f64> { Ok(displacement(&family.map_at(t), cfg.probe_iters, 0.0)? - target) };

    let n = cfg.scan_samples.max(2);
    let scan: Vec<ScanRow> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            displacement(&family.map_at(t), cfg.probe_iters, 0.0).map(|d| ScanRow { t, displacement: d })
        })
        .collect::<Result<_>>()?;

    let (d0, d1) = family.endpoints();
    let mut pts = vec![(0.0, d0 - target)];
    pts.extend(scan.iter().map(|r| (r.t, r.displacement - target)));
    pts.push((1.0, d1 - target));
    let brackets: Vec<(f64, f64)> = pts
        .windows(2)
        .filter(|w| w[0].1 == 0.0 || w[0].1.signum() != w[1].1.signum())
        .map(|w| (w[0].0, w[1].0))
        .collect();
    let Some(&(mut lo, mut hi)) = brackets.first() else {
        let table = scan.iter().map(|r| format!("{:.6} {:.9}", r.t, r.displacement)).collect::<Vec<_>>().join("\n");
        return Err(Error::Solver { message: format!("no bracket for target displacement {target}"), diagnostic: table });
    };
    let scan_bracket = (lo, hi);

    let mut f_lo = if lo == 0.0 { d0 - target } else { objective(lo)? };
    let noise = 4.0 / cfg.probe_iters as f64;
    for _ in 0..cfg.bisection_steps {
        let mid = 0.5 * (lo + hi);
        let f_mid = objective(mid)?;
        if f_mid.abs() < noise {
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let bisection_bracket = (lo, hi);
    let mut t = 0.5 * (lo + hi);

    let refinement = refine(theta, family, k, bisection_bracket, scan_bracket, cfg.refine_qmax)?;
    if let Some(r) = refinement {
        t = r.t;
    }

    let rotation = rotation_number(&family.map_at(t), cfg.confirm_iters, 0.0)?;
    let cf_prefix = rotation.cf_prefix(cfg.cf_depth.max(8));
    let want = &theta.entries()[..cfg.cf_depth.min(theta.len())];
    if cf_prefix.len() < want.len() || &cf_prefix[..want.len()] != want {
        return Err(Error::Solver {
            message: format!("confirmation at t = {t} gave CF prefix {cf_prefix:?}, wanted {want:?}"),
            diagnostic: format!("rotation estimate {rotation:?}"),
        });
    }
    Ok(SolveReport { family, t, target, brackets, bisection_bracket, refinement, rotation, cf_prefix, scan })
}

/// Zero of t ↦ ĝ_t^{q}(0) − (p − kq) for the deepest usable convergent p/q.
fn refine(
    theta: &ContinuedFraction,
    family: Family,
    k: i64,
    inner: (f64, f64),
    outer: (f64, f64),
    qmax: u64,
) -> Result<Option<Refinement>> {
    if qmax == 0 {
        return Ok(None);
    }
    let convergents = theta.convergents();
    let mut best = None;
    for (n, (p, q)) in convergents.iter().enumerate().skip(1) {
        let (Some(p), Some(q)) = (num_traits::ToPrimitive::to_u64(p), num_traits::ToPrimitive::to_u64(q)) else { break };
        if q > qmax {
            break;
        }
        best = Some((n, p, q));
    }
    let Some((n, p, q)) = best else { return Ok(None) };
    let goal = p as f64 - (k as f64) * q as f64;
    let g = |t: f64| -> Result<f64> { Ok(orbit_displacement(&family.map_at(t), q, 0.0)? - goal) };

    // widen the Birkhoff bracket until the periodic-orbit objective changes sign
    let (mut lo, mut hi) = inner;
    let mut width = (hi - lo).max(1e-9);
    let (mut g_lo, mut g_hi) = (g(lo)?, g(hi)?);
    while g_lo.signum() == g_hi.signum() {
        if lo <= outer.0 && hi >= outer.1 {
            return Ok(None);
        }
        lo = (lo - width).max(outer.0);
        hi = (hi + width).min(outer.1);
        width *= 2.0;
        g_lo = g(lo)?;
        g_hi = g(hi)?;
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if gm.signum() == g_lo.signum() {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(Some(Refinement { n, q, t: 0.5 * (lo + hi) }))
}

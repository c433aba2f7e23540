//! Rotation numbers of degree-one circle lifts and closest returns of the
//! critical orbit.

use serde::{Deserialize, Serialize};

use crate::cf_arith::ContinuedFraction;
use crate::error::{Error, Result};

/// Lift F: ℝ → ℝ of a circle map with F(x+1) = F(x) + 1.
pub trait CircleLift: Sync {
    fn lift(&self, x: f64) -> f64;

    /// Lifted position of the critical point, when there is one.
    fn critical_lift(&self) -> Option<f64> {
        None
    }
}

/// x ↦ x + θ.
#[derive(Clone, Copy, Debug)]
pub struct RigidRotation(pub f64);

impl CircleLift for RigidRotation {
    fn lift(&self, x: f64) -> f64 {
        x + self.0
    }
    fn critical_lift(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Orbit point kept as an integer part plus a fraction so long orbits do not
/// lose the fractional digits.
#[derive(Clone, Copy, Debug)]
struct Split {
    int: i64,
    frac: f64,
}

impl Split {
    fn new(x: f64) -> Self {
        let f = x.floor();
        Self { int: f as i64, frac: x - f }
    }

    fn step<L: CircleLift + ?Sized>(&mut self, lift: &L) -> Result<()> {
        let y = lift.lift(self.frac);
        if !y.is_finite() {
            return Err(Error::Numeric(format!("lift returned {y} at x = {}", self.frac)));
        }
        let f = y.floor();
        self.int += f as i64;
        self.frac = y - f;
        Ok(())
    }

    fn minus(&self, other: &Split) -> f64 {
        (self.int - other.int) as f64 + (self.frac - other.frac)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    /// (F^N(x₀) − x₀)/N, not reduced.
    pub displacement: f64,
    /// displacement mod 1.
    pub rho: f64,
    pub error_bar: f64,
    pub iters: usize,
}

impl RotationEstimate {
    /// CF entries shared by every value within the error bar of `rho`.
    pub fn cf_prefix(&self, max: usize) -> Vec<u64> {
        use num_rational::BigRational;
        let lo = BigRational::from_float((self.rho - self.error_bar).max(f64::MIN_POSITIVE)).expect("finite");
        let hi = BigRational::from_float((self.rho + self.error_bar).min(1.0 - f64::EPSILON)).expect("finite");
        ContinuedFraction::common_prefix(&lo, &hi, max)
    }
}

pub const MIN_ROTATION_ITERS: usize = 1000;

/// Birkhoff average of the displacement with error bar 2/N.
pub fn rotation_number<L: CircleLift + ?Sized>(lift: &L, iters: usize, seed: f64) -> Result<RotationEstimate> {
    if iters < MIN_ROTATION_ITERS {
        return Err(Error::Domain(format!("need at least {MIN_ROTATION_ITERS} iterates, got {iters}")));
    }
    let displacement = displacement(lift, iters, seed)?;
    Ok(RotationEstimate {
        displacement,
        rho: displacement - displacement.floor(),
        error_bar: 2.0 / iters as f64,
        iters,
    })
}

/// (F^N(x₀) − x₀)/N without the iteration-count floor of [`rotation_number`].
pub fn displacement<L: CircleLift + ?Sized>(lift: &L, iters: usize, seed: f64) -> Result<f64> {
    let start = Split::new(seed);
    let mut x = start;
    for _ in 0..iters {
        x.step(lift)?;
    }
    Ok(x.minus(&start) / iters as f64)
}

/// F^n(x₀) − x₀ exactly as the lift produces it.
pub fn orbit_displacement<L: CircleLift + ?Sized>(lift: &L, n: u64, seed: f64) -> Result<f64> {
    let start = Split::new(seed);
    let mut x = start;
    for _ in 0..n {
        x.step(lift)?;
    }
    Ok(x.minus(&start))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosestReturnTable {
    pub moments: Vec<u64>,
    /// |I_n| = circular distance from c to f^{q_n}(c), when measured.
    pub arcs: Option<Vec<f64>>,
    /// Set when the orbit came within working precision of c.
    pub truncated: bool,
}

/// q₀ … q_{M−1} from the convergent recursion.
pub fn closest_return_moments(cf: &ContinuedFraction, m: usize) -> Result<ClosestReturnTable> {
    if m > cf.len() + 1 {
        return Err(Error::Range { index: m, available: cf.len() + 1 });
    }
    Ok(ClosestReturnTable { moments: cf.denominators(m)?, arcs: None, truncated: false })
}

/// Tolerance below which an orbit point counts as equal to the critical point.
pub const RETURN_TOL: f64 = 1e-14;

fn circ_dist(x: f64) -> f64 {
    let f = x - x.floor();
    f.min(1.0 - f)
}

/// Moments n ≤ N where the critical orbit is closer to c than at any earlier
/// time (ties go to the earlier moment).
pub fn empirical_closest_returns<L: CircleLift + ?Sized>(lift: &L, n: u64) -> Result<ClosestReturnTable> {
    let c = lift.critical_lift().unwrap_or(0.0);
    let start = Split::new(c);
    let mut x = start;
    let mut best = f64::INFINITY;
    let mut moments = Vec::new();
    let mut arcs = Vec::new();
    let mut truncated = false;
    for k in 1..=n {
        x.step(lift)?;
        let d = circ_dist(x.minus(&start));
        if d < best - RETURN_TOL {
            moments.push(k);
            arcs.push(d);
            best = d;
            if d < RETURN_TOL {
                truncated = true;
                break;
            }
        }
    }
    Ok(ClosestReturnTable { moments, arcs: Some(arcs), truncated })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommensurabilityRow {
    pub level: usize,
    pub q: u64,
    pub arc: f64,
    /// |I_{n+1}|/|I_n|; absent on the last level.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommensurabilityReport {
    pub rows: Vec<CommensurabilityRow>,
    pub warning: Option<String>,
}

impl CommensurabilityReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.ratio).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,q_n,arc,ratio\n");
        for r in &self.rows {
            let ratio = r.ratio.map(|x| format!("{x:e}")).unwrap_or_default();
            s.push_str(&format!("{},{},{:e},{}\n", r.level, r.q, r.arc, ratio));
        }
        s
    }
}

/// Ratios of consecutive closest-return arcs for levels 0..=M.
pub fn commensurability_report<L: CircleLift + ?Sized>(lift: &L, levels: usize, max_orbit: u64) -> Result<CommensurabilityReport> {
    let table = empirical_closest_returns(lift, max_orbit)?;
    let arcs = table.arcs.unwrap_or_default();
    let mut warning = None;
    if arcs.len() < levels + 2 {
        warning = Some(format!("only {} closest returns within {max_orbit} iterates", arcs.len()));
    }
    if arcs.iter().any(|&a| a < 1e3 * RETURN_TOL) {
        warning = Some("closest-return arc near working precision".into());
    }
    let take = arcs.len().min(levels + 2);
    let rows = (0..take)
        .map(|i| CommensurabilityRow {
            level: i,
            q: table.moments[i],
            arc: arcs[i],
            ratio: (i + 1 < take).then(|| arcs[i + 1] / arcs[i]),
        })
        .collect();
    Ok(CommensurabilityReport { rows, warning })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 0.618_033_988_749_894_8;

    #[test]
    fn rigid_rotation_is_exact() {
        let est = rotation_number(&RigidRotation(GOLDEN), 10_000, 0.3).unwrap();
        assert!((est.rho - GOLDEN).abs() < 1e-12);
        assert!(rotation_number(&RigidRotation(GOLDEN), 10, 0.0).is_err());
    }

    #[test]
    fn seed_independence() {
        struct Arnold;
        impl CircleLift for Arnold {
            fn lift(&self, x: f64) -> f64 {
                x + 0.3 + 0.1 * (2.0 * std::f64::consts::PI * x).sin()
            }
        }
        let base = rotation_number(&Arnold, 100_000, 0.0).unwrap();
        for k in 1..10 {
            let e = rotation_number(&Arnold, 100_000, k as f64 * 0.1).unwrap();
            assert!((e.displacement - base.displacement).abs() <= base.error_bar);
        }
    }

    #[test]
    fn non_finite_lift_is_reported() {
        struct Bad;
        impl CircleLift for Bad {
            fn lift(&self, _: f64) -> f64 {
                f64::NAN
            }
        }
        assert!(matches!(rotation_number(&Bad, 1000, 0.0), Err(Error::Numeric(_))));
    }

    #[test]
    fn convergent_moments() {
        let g = closest_return_moments(&ContinuedFraction::golden(), 5).unwrap();
        assert_eq!(g.moments, vec![1, 1, 2, 3, 5]);
        let s = closest_return_moments(&ContinuedFraction::silver(), 4).unwrap();
        assert_eq!(s.moments, vec![1, 2, 5, 12]);
    }

    /// Direct scan of ‖nθ‖ for the rigid rotation, independent of the lift code.
    fn rotation_scan(theta: f64, n: u64) -> Vec<u64> {
        let mut best = f64::INFINITY;
        let mut out = Vec::new();
        for k in 1..=n {
            let x = (k as f64 * theta).fract();
            let d = x.min(1.0 - x);
            if d < best {
                best = d;
                out.push(k);
            }
        }
        out
    }

    #[test]
    fn empirical_returns_of_rigid_golden() {
        let t = empirical_closest_returns(&RigidRotation(GOLDEN), 20).unwrap();
        assert_eq!(t.moments, vec![1, 2, 3, 5, 8, 13]);
        assert_eq!(t.moments, rotation_scan(GOLDEN, 20));
        let silver = 2f64.sqrt() - 1.0;
        let t = empirical_closest_returns(&RigidRotation(silver), 100).unwrap();
        assert_eq!(t.moments, vec![1, 2, 5, 12, 29, 70]);
    }

    #[test]
    fn rational_rotation_truncates_at_period() {
        let t = empirical_closest_returns(&RigidRotation(0.4), 50).unwrap();
        assert_eq!(*t.moments.last().unwrap(), 5);
        assert!(t.truncated);
    }

    #[test]
    fn commensurability_of_rigid_golden() {
        let r = commensurability_report(&RigidRotation(GOLDEN), 10, 10_000).unwrap();
        let ratios = r.ratios();
        assert!(ratios[0].is_finite() && ratios[0] > 0.0);
        // ‖q_{n+1}θ‖/‖q_nθ‖ = θ exactly for the golden rotation
        for x in &ratios[2..] {
            assert!((x - GOLDEN).abs() < 1e-6, "{x}");
        }
        assert!(r.to_csv().starts_with("level,q_n,arc,ratio"));
    }
}

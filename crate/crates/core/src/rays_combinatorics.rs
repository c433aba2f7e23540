//! External rays of f_θ, critical and precritical angles, itineraries and the
//! pinch pairs of a mating.

use std::cmp::Ordering;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf_arith::{omega_of_theta, BigAngle, ContinuedFraction};
use crate::error::{Error, Result};
use crate::geometry::Cx;
use crate::rational_maps::{f_theta, SiegelQuadratic};

/// Bits used for ω when angles are produced from a continued fraction.
pub const ANGLE_BITS: u32 = 512;

/// (ω/2, (ω+1)/2).
pub fn critical_angles(theta: &ContinuedFraction, bits: u32) -> Result<(BigAngle, BigAngle)> {
    let omega = omega_of_theta(theta, bits)?;
    Ok(omega.halves())
}

/// Orders two angles by stored value.
fn ordered(a: BigAngle, b: BigAngle) -> (BigAngle, BigAngle) {
    if a.cmp_value(&b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

/// True when `x` lies in the open arc (lo, hi), lo < hi.
fn in_arc(x: &BigAngle, lo: &BigAngle, hi: &BigAngle) -> bool {
    x.cmp_value(lo) == Ordering::Greater && x.cmp_value(hi) == Ordering::Less
}

/// Angle pairs landing together at the precritical points of generation `k`.
///
/// Each pair pulls back to two pairs, one in each half of the circle cut by the
/// critical leaf. Pairs are returned as (smaller, larger), sorted by the first angle.
pub fn precritical_angle_pairs(theta: &ContinuedFraction, k: u32, bits: u32) -> Result<Vec<(BigAngle, BigAngle)>> {
    let (lo, hi) = critical_angles(theta, bits)?;
    let mut pairs = vec![(lo.clone(), hi.clone())];
    for _ in 0..k {
        let mut next = Vec::with_capacity(pairs.len() * 2);
        for (s, t) in &pairs {
            let (s0, s1) = s.halves();
            let (t0, t1) = t.halves();
            let s_in = if in_arc(&s0, &lo, &hi) { (s0, s1) } else { (s1, s0) };
            let t_in = if in_arc(&t0, &lo, &hi) { (t0, t1) } else { (t1, t0) };
            next.push(ordered(s_in.0, t_in.0));
            next.push(ordered(s_in.1, t_in.1));
        }
        pairs = next;
    }
    pairs.sort_by(|a, b| a.0.cmp_value(&b.0));
    Ok(pairs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Itinerary {
    /// ε₀ε₁…: ε_i is the first binary digit of 2^i·t.
    pub digits: Vec<u8>,
    /// Positions where a precritical point admits either digit.
    pub ambiguous: Vec<usize>,
}

impl Itinerary {
    pub fn shift(&self) -> Self {
        Self {
            digits: self.digits.iter().skip(1).copied().collect(),
            ambiguous: self.ambiguous.iter().filter(|&&i| i > 0).map(|i| i - 1).collect(),
        }
    }

    /// Digits of the same point read from the other side of the mating.
    pub fn complement(&self) -> Self {
        Self { digits: self.digits.iter().map(|d| 1 - d).collect(), ambiguous: self.ambiguous.clone() }
    }

    pub fn to_string_marked(&self) -> String {
        self.digits
            .iter()
            .enumerate()
            .map(|(i, d)| if self.ambiguous.contains(&i) { '*' } else { char::from(b'0' + d) })
            .collect()
    }
}

pub fn itinerary_of_angle(t: &BigAngle, n: u32) -> Result<Itinerary> {
    Ok(Itinerary { digits: t.digits(n)?, ambiguous: Vec::new() })
}

/// Common itinerary of a precritical pair, marking the digits where the two angles disagree.
pub fn pair_itinerary(s: &BigAngle, t: &BigAngle, n: u32) -> Result<Itinerary> {
    let a = s.digits(n)?;
    let b = t.digits(n)?;
    let ambiguous = (0..n as usize).filter(|&i| a[i] != b[i]).collect();
    Ok(Itinerary { digits: a, ambiguous })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayConfig {
    pub escape_radius: f64,
    /// Levels per halving of the potential.
    pub substeps: u32,
    pub eps_land: f64,
    pub stable_points: usize,
    /// Cap on square-root pullbacks.
    pub max_steps: usize,
}

impl Default for RayConfig {
    fn default() -> Self {
        Self { escape_radius: 100.0, substeps: 4, eps_land: 1e-4, stable_points: 8, max_steps: 100_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayPoint {
    pub potential: f64,
    pub z: Cx,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalRay {
    pub angle: BigAngle,
    pub polyline: Vec<RayPoint>,
    pub landing: Cx,
    pub landed: bool,
    /// Spread of the last stabilization window.
    pub landing_radius: f64,
    pub steps: usize,
}

impl ExternalRay {
    pub fn landing_point(&self) -> C {
        self.landing.into()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("potential,re,im\n");
        for p in &self.polyline {
            s.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", p.potential, p.z.re, p.z.im));
        }
        s
    }
}

/// Backward-iteration ray tracer.
///
/// Level k of the ray at angle 2^j·t sits at Green potential log(R)·2^{−k/S};
/// for k ≥ S it is the square root of level k−S at angle 2^{j+1}·t, with the
/// branch chosen nearest level k−1.
pub fn trace_ray(f: &SiegelQuadratic, t: &BigAngle, cfg: &RayConfig) -> Result<ExternalRay> {
    if cfg.escape_radius < 10.0 || cfg.substeps < 2 || cfg.stable_points < 2 {
        return Err(Error::Domain("need escape radius ≥ 10, at least 2 substeps and 2 stabilization points".into()));
    }
    let s = cfg.substeps as usize;
    let log_r = cfg.escape_radius.ln();
    let potential = |k: usize| log_r * 2f64.powf(-(k as f64) / s as f64);
    let c = f.c;

    let mut angles: Vec<f64> = Vec::new();
    let mut doubled = t.clone();
    let mut angle_at = |j: usize, angles: &mut Vec<f64>| -> Result<f64> {
        while angles.len() <= j {
            if !angles.is_empty() {
                doubled = doubled.double();
            }
            if doubled.err() > 1e-12 {
                return Err(Error::PrecisionExhausted(format!(
                    "angle needs more than {} bits to follow {} doublings",
                    t.bits(),
                    angles.len()
                )));
            }
            angles.push(doubled.to_f64());
        }
        Ok(angles[j])
    };

    let mut pts: Vec<Vec<C>> = Vec::new();
    let mut steps = 0usize;
    let mut level = 0usize;
    loop {
        // bring ray j to level `level − j·S`, deepest orbit angle first
        for j in (0..=level / s).rev() {
            let k = level - j * s;
            if pts.len() <= j {
                pts.push(Vec::new());
            }
            while pts[j].len() <= k {
                let kk = pts[j].len();
                let z = if kk < s {
                    let w = C::from_polar((potential(kk)).exp(), 2.0 * std::f64::consts::PI * angle_at(j, &mut angles)?);
                    w - c / (2.0 * w)
                } else {
                    let prev = pts[j][kk - 1];
                    let r = (pts[j + 1][kk - s] - c).sqrt();
                    let (d1, d2) = ((r - prev).norm(), (-r - prev).norm());
                    if d1.min(d2) > 0.5 * d1.max(d2) {
                        return Err(Error::Tracking {
                            parameter: potential(kk),
                            message: format!("square-root branch unclear on the ray at angle {:.6}", angles[j]),
                        });
                    }
                    steps += 1;
                    if d1 <= d2 {
                        r
                    } else {
                        -r
                    }
                };
                pts[j].push(z);
            }
        }
        let ray = &pts[0];
        let n = ray.len();
        let window = cfg.stable_points;
        let spread = if n >= window.max(s + 1) {
            let w = &ray[n - window..];
            let mut m: f64 = 0.0;
            for a in w {
                for b in w {
                    m = m.max((a - b).norm());
                }
            }
            m
        } else {
            f64::INFINITY
        };
        let landed = spread <= cfg.eps_land;
        if landed || steps >= cfg.max_steps {
            let w = &ray[n.saturating_sub(window)..];
            let centroid = w.iter().sum::<C>() / w.len() as f64;
            let polyline = ray.iter().enumerate().map(|(k, &z)| RayPoint { potential: potential(k), z: z.into() }).collect();
            return Ok(ExternalRay {
                angle: t.clone(),
                polyline,
                landing: centroid.into(),
                landed,
                landing_radius: spread,
                steps,
            });
        }
        level += 1;
    }
}

/// Traces independent rays concurrently.
pub fn trace_rays(f: &SiegelQuadratic, angles: &[BigAngle], cfg: &RayConfig) -> Result<Vec<ExternalRay>> {
    angles.par_iter().map(|t| trace_ray(f, t, cfg)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinchPair {
    pub depth: u32,
    /// ν-side angles, smaller first.
    pub s: BigAngle,
    pub t: BigAngle,
    /// θ-side landing of the ray at −s.
    pub z: Cx,
    /// θ-side landing of the ray at −t.
    pub z_prime: Cx,
    pub separation: f64,
    pub landed: bool,
    /// Midpoint of the traced f_ν landings of s and t.
    pub nu_point: Cx,
    /// Gap between those two traced landings; rays at the critical point converge
    /// too slowly for this to resolve the common landing.
    pub nu_separation: f64,
    /// Distinct θ-side landings plus the single ν-side precritical point.
    pub class_size: usize,
}

/// θ-side landing points identified by the mating through the ν-side precritical pairs.
pub fn pinch_pairs(theta: &ContinuedFraction, nu: &ContinuedFraction, depth: u32, cfg: &RayConfig) -> Result<Vec<PinchPair>> {
    let (th, nv) = (theta.to_f64(), nu.to_f64());
    if (th + nv - 1.0).abs() < 1e-12 {
        return Err(Error::Domain("θ = 1 − ν admits no mating".into()));
    }
    let f = f_theta(th);
    let g = f_theta(nv);
    // distinctness threshold for landing points
    let tol = 10.0 * cfg.eps_land;
    let mut out = Vec::new();
    for k in 0..=depth {
        let pairs = precritical_angle_pairs(nu, k, ANGLE_BITS)?;
        let rows: Vec<PinchPair> = pairs
            .par_iter()
            .map(|(s, t)| -> Result<PinchPair> {
                let a = trace_ray(&f, &s.neg(), cfg)?;
                let b = trace_ray(&f, &t.neg(), cfg)?;
                let ns = trace_ray(&g, s, cfg)?;
                let nt = trace_ray(&g, t, cfg)?;
                let separation = (a.landing_point() - b.landing_point()).norm();
                let nu_separation = (ns.landing_point() - nt.landing_point()).norm();
                let theta_points = if separation > tol { 2 } else { 1 };
                Ok(PinchPair {
                    depth: k,
                    s: s.clone(),
                    t: t.clone(),
                    z: a.landing,
                    z_prime: b.landing,
                    separation,
                    landed: a.landed && b.landed,
                    nu_point: (0.5 * (ns.landing_point() + nt.landing_point())).into(),
                    nu_separation,
                    class_size: theta_points + 1,
                })
            })
            .collect::<Result<_>>()?;
        out.extend(rows);
    }
    Ok(out)
}

pub fn pinch_csv(rows: &[PinchPair]) -> String {
    let mut s = String::from("depth,s,t,z_re,z_im,zp_re,zp_im,separation,class_size\n");
    for r in rows {
        s.push_str(&format!(
            "{},{:.15},{:.15},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e},{}\n",
            r.depth,
            r.s.to_f64(),
            r.t.to_f64(),
            r.z.re,
            r.z.im,
            r.z_prime.re,
            r.z_prime.im,
            r.separation,
            r.class_size
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> ContinuedFraction {
        ContinuedFraction::golden()
    }

    #[test]
    fn critical_angles_differ_by_half() {
        let (a, b) = critical_angles(&golden(), 256).unwrap();
        let d = b.sub(&a);
        assert!((d.to_f64() - 0.5).abs() < 1e-60);
        let om = omega_of_theta(&golden(), 256).unwrap();
        assert_eq!(a.double().cmp_value(&om), Ordering::Equal);
        assert_eq!(b.double().cmp_value(&om), Ordering::Equal);
        assert_eq!(a.digits(5).unwrap(), vec![0, 1, 0, 1, 1]);
        assert!((a.to_f64() - 0.3549).abs() < 1e-3);
    }

    #[test]
    fn pairs_double_back_to_the_critical_leaf() {
        let (lo, hi) = critical_angles(&golden(), 256).unwrap();
        for k in 0..6 {
            let pairs = precritical_angle_pairs(&golden(), k, 256).unwrap();
            assert_eq!(pairs.len(), 1 << k);
            for (s, t) in &pairs {
                let (a, b) = ordered(s.double_n(k), t.double_n(k));
                assert_eq!(a.cmp_value(&lo), Ordering::Equal);
                assert_eq!(b.cmp_value(&hi), Ordering::Equal);
            }
        }
    }

    /// Brute force: all (u, v) over the 2^k preimages of each critical angle whose
    /// forward orbits stay on the same side of the critical leaf for k steps.
    fn brute_pairs(k: u32) -> Vec<(f64, f64)> {
        let (lo, hi) = critical_angles(&golden(), 256).unwrap();
        let us = crate::cf_arith::dyadic_preimages(&lo, k);
        let vs = crate::cf_arith::dyadic_preimages(&hi, k);
        let mut out = Vec::new();
        for u in &us {
            for v in &vs {
                let same_side = (0..k).all(|i| {
                    let (a, b) = (u.double_n(i), v.double_n(i));
                    in_arc(&a, &lo, &hi) == in_arc(&b, &lo, &hi)
                });
                if same_side {
                    let (a, b) = ordered(u.clone(), v.clone());
                    out.push((a.to_f64(), b.to_f64()));
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    #[test]
    fn pairs_match_exhaustive_enumeration() {
        for k in 0..=4 {
            let got: Vec<(f64, f64)> = precritical_angle_pairs(&golden(), k, 256)
                .unwrap()
                .iter()
                .map(|(s, t)| (s.to_f64(), t.to_f64()))
                .collect();
            assert_eq!(got, brute_pairs(k), "depth {k}");
        }
    }

    #[test]
    fn itinerary_basics() {
        let half = BigAngle::from_ratio(1, 2, 16).unwrap();
        assert_eq!(itinerary_of_angle(&half, 4).unwrap().digits, vec![1, 0, 0, 0]);
        let t = BigAngle::from_ratio(5, 13, 128).unwrap();
        let it = itinerary_of_angle(&t, 40).unwrap();
        let it2 = itinerary_of_angle(&t.double(), 39).unwrap();
        assert_eq!(it.shift().digits, it2.digits);
        let c = itinerary_of_angle(&t.neg(), 40).unwrap();
        assert_eq!(c.digits, it.complement().digits);
    }

    #[test]
    fn precritical_ambiguity_is_one_block() {
        for (s, t) in precritical_angle_pairs(&golden(), 3, 256).unwrap() {
            let it = pair_itinerary(&s, &t, 20).unwrap();
            assert!(!it.ambiguous.is_empty());
            let (a, b) = (it.ambiguous[0], *it.ambiguous.last().unwrap());
            assert_eq!(b - a + 1, it.ambiguous.len());
        }
    }

    #[test]
    fn ray_zero_lands_at_beta() {
        let f = f_theta(0.618_033_988_749_894_8);
        let r = trace_ray(&f, &BigAngle::zero(64), &RayConfig::default()).unwrap();
        assert!(r.landed);
        assert!((r.landing_point() - f.beta).norm() < 1e-3);
        let r = trace_ray(&f, &BigAngle::from_ratio(1, 2, 64).unwrap(), &RayConfig::default()).unwrap();
        assert!((r.landing_point() + f.beta).norm() < 1e-3);
    }

    #[test]
    fn rejects_mating_with_complementary_angle() {
        let th = golden();
        let nu = th.complement().unwrap();
        assert!(matches!(pinch_pairs(&th, &nu, 0, &RayConfig::default()), Err(Error::Domain(_))));
    }
}

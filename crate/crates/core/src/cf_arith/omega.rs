//! The critical-value angle ω(θ), Sturmian points of the rotation set, and
//! the mod-1 relation scan.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::angle::{round_up, BigAngle};
use super::cf::{RealInterval, ThetaLike};
use crate::error::{Error, Result};

/// ω(θ) = Σ_{q≥1} ⌊qθ⌋ 2^{−q}, summed over q ≤ bits.
///
/// The count of p with 0 < p/q < θ is ⌊qθ⌋ for irrational θ, which turns the
/// double sum over fractions into one floor per q. The dropped tail is at most
/// Σ_{q>Q} q 2^{−q} = (Q+2) 2^{−Q}.
pub fn omega_of_theta<T: ThetaLike + ?Sized>(theta: &T, bits: u32) -> Result<BigAngle> {
    if bits == 0 {
        return Err(Error::Domain("bits must be positive".into()));
    }
    let iv = theta.interval();
    check_unit(&iv)?;
    let zero = RealInterval::zero();
    let mut m = BigUint::zero();
    for q in 1..=u64::from(bits) {
        let f = iv.floor_scaled(q, &zero).ok_or(Error::Precision { q })?;
        let f = f.to_biguint().expect("θ > 0");
        m += f << (u64::from(bits) - q);
    }
    let q = f64::from(bits);
    let err = round_up((q + 2.0) * 2f64.powi(-(bits as i32)));
    Ok(BigAngle::new(m, bits, err))
}

/// Σ_{k≥1} b_k 2^{−k} with b_k = ⌊kθ+φ⌋ − ⌊(k−1)θ+φ⌋.
pub fn sturmian_point<T: ThetaLike + ?Sized>(theta: &T, phi: &BigAngle, bits: u32) -> Result<BigAngle> {
    if bits == 0 {
        return Err(Error::Domain("bits must be positive".into()));
    }
    let iv = theta.interval();
    check_unit(&iv)?;
    let (plo, phi_hi) = phi.enclosure();
    let shift = RealInterval::new(plo, phi_hi);
    let mut prev = floor_shift(&shift).ok_or(Error::Precision { q: 0 })?;
    let mut m = BigUint::zero();
    for k in 1..=u64::from(bits) {
        let f = iv.floor_scaled(k, &shift).ok_or(Error::Precision { q: k })?;
        let b = &f - &prev;
        if b == BigInt::one() {
            m.set_bit(u64::from(bits) - k, true);
        } else if !b.is_zero() {
            return Err(Error::Numeric(format!("digit {b} at k = {k}")));
        }
        prev = f;
    }
    let err = round_up(2f64.powi(-(bits as i32)));
    Ok(BigAngle::new(m, bits, err))
}

fn floor_shift(shift: &RealInterval) -> Option<BigInt> {
    let f = shift.lo.floor();
    if f.clone() + BigRational::one() <= shift.hi && shift.hi != f.clone() + BigRational::one() {
        None
    } else {
        Some(f.to_integer())
    }
}

fn check_unit(iv: &RealInterval) -> Result<()> {
    if iv.lo <= BigRational::zero() || iv.hi >= BigRational::one() {
        return Err(Error::Domain("θ must lie in (0,1)".into()));
    }
    Ok(())
}

/// Frequency of the digit 1 among the first `n` binary digits.
///
/// For ω = ω(θ) this recovers θ with error O(1/n). For other ω it is only a
/// digit-frequency heuristic.
pub fn staircase_rho(omega: &BigAngle, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("need at least one digit".into()));
    }
    let d = omega.digits(n)?;
    Ok(d.iter().map(|&x| f64::from(x)).sum::<f64>() / f64::from(n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationVerdict {
    /// Every scanned distance exceeds its propagated error.
    CertifiedPositive,
    /// Some distance is within its error bound of zero.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationReport {
    pub n_max: u32,
    pub bits: u32,
    pub min_distance: f64,
    pub argmin: (u32, u32),
    /// Error bound at the minimizing pair.
    pub err_at_min: f64,
    /// Largest error bound over the whole scan.
    pub max_err: f64,
    pub verdict: RelationVerdict,
    /// Every pair that could not be separated from zero.
    pub unresolved: Vec<(u32, u32)>,
    pub table: Vec<RelationRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationRow {
    pub n: u32,
    pub m: u32,
    pub distance: f64,
}

pub const GUARD_BITS: u32 = 64;

/// Scans dist(2ⁿω(θ) + 2ᵐω(ν), ℤ) over 0 ≤ n, m ≤ N.
pub fn check_relation<T: ThetaLike + ?Sized, U: ThetaLike + ?Sized>(
    theta: &T,
    nu: &U,
    n_max: u32,
    bits: u32,
) -> Result<RelationReport> {
    if bits < n_max + GUARD_BITS {
        return Err(Error::PrecisionExhausted(format!(
            "{bits} bits cannot cover exponent {n_max} with {GUARD_BITS} guard bits"
        )));
    }
    let wt = omega_of_theta(theta, bits)?;
    let wn = omega_of_theta(nu, bits)?;
    let dt: Vec<_> = (0..=n_max).map(|n| wt.double_n(n)).collect();
    let dn: Vec<_> = (0..=n_max).map(|m| wn.double_n(m)).collect();
    let mut table = Vec::new();
    let mut best: Option<(BigRational, u32, u32, f64)> = None;
    let mut unresolved = Vec::new();
    let mut max_err: f64 = 0.0;
    for (n, a) in dt.iter().enumerate() {
        for (m, b) in dn.iter().enumerate() {
            let s = a.add(b);
            let d = s.dist_to_int_exact();
            let e = s.err();
            max_err = max_err.max(e);
            let df = d.to_f64().unwrap_or(0.0);
            if d <= BigRational::from_float(e).expect("finite") {
                unresolved.push((n as u32, m as u32));
            }
            table.push(RelationRow { n: n as u32, m: m as u32, distance: df });
            if best.as_ref().is_none_or(|(bd, ..)| d < *bd) {
                best = Some((d, n as u32, m as u32, e));
            }
        }
    }
    let (d, n, m, e) = best.expect("at least one pair");
    let verdict = if unresolved.is_empty() { RelationVerdict::CertifiedPositive } else { RelationVerdict::Inconclusive };
    Ok(RelationReport {
        n_max,
        bits,
        min_distance: d.to_f64().unwrap_or(0.0),
        argmin: (n, m),
        err_at_min: e,
        max_err,
        verdict,
        unresolved,
        table,
    })
}

impl RelationReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,m,distance\n");
        for r in &self.table {
            s.push_str(&format!("{},{},{:e}\n", r.n, r.m, r.distance));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf_arith::cf::ContinuedFraction;

    /// Literal Σ over reduced-or-not fractions 0 < p/q < θ of 2^{−q}, in f64.
    fn omega_double_sum(theta: f64, qmax: u64) -> f64 {
        let mut s = 0.0;
        for q in 1..=qmax {
            for p in 1..q {
                if (p as f64) < theta * q as f64 {
                    s += 2f64.powi(-(q as i32));
                }
            }
        }
        s
    }

    #[test]
    fn golden_omega_digits_and_cf() {
        let w = omega_of_theta(&ContinuedFraction::golden(), 256).unwrap();
        assert_eq!(w.digits(3).unwrap(), vec![1, 0, 1]);
        assert_eq!(&w.cf_prefix(6)[..], &[1, 2, 2, 4, 8, 32]);
        assert!((w.to_f64() - 0.709803).abs() < 1e-5, "{}", w.to_f64());
    }

    #[test]
    fn reduction_matches_double_sum() {
        for &theta in &[0.3819660112501051, 0.41421356237309503, 0.7236, 0.1213] {
            let w = omega_of_theta(&theta, 20).unwrap();
            let literal = omega_double_sum(theta, 20);
            assert!((w.to_f64() - literal).abs() < 1e-15, "θ={theta}");
        }
    }

    #[test]
    fn precision_error_names_q() {
        // a two-entry prefix cannot resolve many floors
        let cf = ContinuedFraction::new(vec![1, 1]).unwrap();
        match omega_of_theta(&cf, 64) {
            Err(Error::Precision { q }) => assert!(q >= 2),
            other => panic!("expected precision error, got {other:?}"),
        }
    }

    #[test]
    fn sturmian_golden_prefix_and_halving() {
        let g = ContinuedFraction::golden();
        let s = sturmian_point(&g, &BigAngle::zero(8), 256).unwrap();
        assert_eq!(s.digits(5).unwrap(), vec![0, 1, 0, 1, 1]);
        let w = omega_of_theta(&g, 256).unwrap();
        let (half, upper) = w.halves();
        assert!(s.sub(&half).dist_to_int() <= s.err() + half.err());
        let near_one = BigAngle::new((BigUint::one() << 256u32) - 1u32, 256, 0.0);
        let s1 = sturmian_point(&g, &near_one, 256).unwrap();
        assert!(s1.sub(&upper).dist_to_int() <= s1.err() + upper.err());
    }

    #[test]
    fn staircase_examples() {
        let ones = BigAngle::new((BigUint::one() << 64u32) - 1u32, 64, 0.0);
        assert_eq!(staircase_rho(&ones, 64).unwrap(), 1.0);
        let third = BigAngle::from_ratio(1, 3, 128).unwrap();
        assert_eq!(staircase_rho(&third, 100).unwrap(), 0.5);
        let w = omega_of_theta(&ContinuedFraction::golden(), 1100).unwrap();
        // brute-force digit count: θ-frequency of ones in the Sturmian word
        let r = staircase_rho(&w, 1000).unwrap();
        assert!((r - 0.618).abs() < 0.01, "{r}");
    }

    #[test]
    fn relation_examples() {
        let g = ContinuedFraction::golden();
        let rep = check_relation(&g, &g, 10, 256).unwrap();
        assert_eq!(rep.verdict, RelationVerdict::CertifiedPositive);
        assert!(rep.min_distance > 0.0);
        assert_eq!(rep.table.len(), 121);
        let c = g.complement().unwrap();
        let rep = check_relation(&g, &c, 0, 256).unwrap();
        assert_eq!(rep.argmin, (0, 0));
        assert!(rep.min_distance <= rep.err_at_min);
        assert_eq!(rep.verdict, RelationVerdict::Inconclusive);
        let rep = check_relation(&g, &g, 0, 256).unwrap();
        assert!(rep.min_distance > 0.0);
        assert!(check_relation(&g, &g, 10, 32).is_err());
    }
}

//! Continued fractions and the certified real intervals they describe.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CfOrigin {
    ExactInput,
    TruncatedFromReal,
}

/// θ = [a₁, a₂, …] = 1/(a₁ + 1/(a₂ + …)), a number in (0, 1).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    entries: Vec<u64>,
    origin: CfOrigin,
}

impl ContinuedFraction {
    pub fn new(entries: Vec<u64>) -> Result<Self> {
        Self::with_origin(entries, CfOrigin::ExactInput)
    }

    pub fn with_origin(entries: Vec<u64>, origin: CfOrigin) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("continued fraction needs at least one entry".into()));
        }
        if let Some(pos) = entries.iter().position(|&a| a == 0) {
            return Err(Error::Domain(format!("entry a_{} is zero", pos + 1)));
        }
        Ok(Self { entries, origin })
    }

    /// `n` copies of `a`.
    pub fn repeated(a: u64, n: usize) -> Result<Self> {
        Self::new(vec![a; n])
    }

    /// The golden mean (√5−1)/2 as forty ones; truncation error is below 1e-16.
    pub fn golden() -> Self {
        Self::repeated(1, 40).expect("nonzero entries")
    }

    /// √2−1 = [2, 2, 2, …] to forty entries.
    pub fn silver() -> Self {
        Self::repeated(2, 40).expect("nonzero entries")
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn origin(&self) -> CfOrigin {
        self.origin
    }

    /// Prefix of the first `n` entries.
    pub fn truncate(&self, n: usize) -> Self {
        let n = n.clamp(1, self.entries.len());
        Self { entries: self.entries[..n].to_vec(), origin: self.origin }
    }

    /// p_n / q_n with p₀ = 0, q₀ = 1.
    pub fn convergent(&self, n: usize) -> Result<(BigUint, BigUint)> {
        if n > self.entries.len() {
            return Err(Error::Range { index: n, available: self.entries.len() });
        }
        let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
        let (mut p, mut q) = (BigUint::zero(), BigUint::one());
        for &a in &self.entries[..n] {
            let a = BigUint::from(a);
            let p_next = &a * &p + &p_prev;
            let q_next = &a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, p_next);
            q_prev = std::mem::replace(&mut q, q_next);
        }
        Ok((p, q))
    }

    /// All convergents p_0/q_0 … p_N/q_N.
    pub fn convergents(&self) -> Vec<(BigUint, BigUint)> {
        (0..=self.entries.len()).map(|n| self.convergent(n).expect("in range")).collect()
    }

    /// Denominators q_0 … q_{m−1} as machine integers (saturating).
    pub fn denominators(&self, m: usize) -> Result<Vec<u64>> {
        if m > self.entries.len() + 1 {
            return Err(Error::Range { index: m, available: self.entries.len() + 1 });
        }
        let mut out = Vec::with_capacity(m);
        let (mut q_prev, mut q) = (0u64, 1u64);
        for n in 0..m {
            out.push(q);
            if n < self.entries.len() {
                let next = self.entries[n].saturating_mul(q).saturating_add(q_prev);
                q_prev = q;
                q = next;
            }
        }
        Ok(out)
    }

    /// Open interval certainly containing every irrational with this prefix.
    pub fn interval(&self) -> RealInterval {
        let n = self.entries.len();
        let (p1, q1) = self.convergent(n).expect("in range");
        let (p0, q0) = self.convergent(n - 1).expect("in range");
        let a = ratio(&p1, &q1);
        let b = ratio(&(&p1 + &p0), &(&q1 + &q0));
        RealInterval::new(a.clone().min(b.clone()), a.max(b))
    }

    pub fn to_f64(&self) -> f64 {
        let mut x = 0.0;
        for &a in self.entries.iter().rev() {
            x = 1.0 / (a as f64 + x);
        }
        x
    }

    /// Continued fraction of 1 − θ.
    pub fn complement(&self) -> Result<Self> {
        let e = &self.entries;
        let entries = if e[0] > 1 {
            let mut v = vec![1, e[0] - 1];
            v.extend_from_slice(&e[1..]);
            v
        } else if e.len() >= 2 {
            let mut v = vec![e[1] + 1];
            v.extend_from_slice(&e[2..]);
            v
        } else {
            return Err(Error::Domain("[1] alone does not determine the first entry of 1 − θ".into()));
        };
        Ok(Self { entries, origin: self.origin })
    }

    /// Euclid's algorithm on num/den, stopping after `n` entries.
    pub fn from_rational(num: &BigUint, den: &BigUint, n: usize) -> Result<Self> {
        if num.is_zero() || num >= den {
            return Err(Error::Domain("rational must lie in (0,1)".into()));
        }
        let (mut a, mut b) = (den.clone(), num.clone());
        let mut entries = Vec::new();
        while !b.is_zero() && entries.len() < n {
            let (q, r) = a.div_rem(&b);
            entries.push(q.to_u64().ok_or_else(|| Error::Numeric("entry overflow".into()))?);
            a = b;
            b = r;
        }
        Self::with_origin(entries, CfOrigin::TruncatedFromReal)
    }

    /// Longest prefix shared by the expansions of every number in [lo, hi] ⊂ (0, 1).
    pub fn common_prefix(lo: &BigRational, hi: &BigRational, max: usize) -> Vec<u64> {
        let mut out = Vec::new();
        let (mut x, mut y) = (lo.clone(), hi.clone());
        while out.len() < max && x.is_positive() && y.is_positive() {
            let (rx, ry) = (x.recip(), y.recip());
            let (fx, fy) = (rx.floor(), ry.floor());
            // x ≤ y so 1/y ≤ 1/x; an integer strictly inside splits the interval
            if fx != fy || ry.is_integer() {
                break;
            }
            let Some(a) = fx.to_integer().to_u64() else { break };
            out.push(a);
            let (nx, ny) = (rx - &fx, ry - &fy);
            x = ny;
            y = nx;
        }
        out
    }
}

/// Continued-fraction expansion of the exact binary value of `x`.
pub fn cf_expand(x: f64, n: usize) -> Result<ContinuedFraction> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("{x} is not in (0,1)")));
    }
    if n == 0 {
        return Err(Error::Domain("requested zero entries".into()));
    }
    let r = BigRational::from_float(x).expect("finite");
    let num = r.numer().to_biguint().expect("positive");
    let den = r.denom().to_biguint().expect("positive");
    ContinuedFraction::from_rational(&num, &den, n)
}

fn ratio(p: &BigUint, q: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(p.clone()), BigInt::from(q.clone()))
}

/// Open interval (lo, hi) of reals, exact rational endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct RealInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RealInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    /// The exact value of `x` widened by one ulp on each side.
    pub fn from_f64(x: f64) -> Self {
        let ulp = f64::EPSILON * x.abs().max(f64::MIN_POSITIVE);
        let c = BigRational::from_float(x).expect("finite");
        let u = BigRational::from_float(ulp).expect("finite");
        Self::new(&c - &u, &c + &u)
    }

    pub fn midpoint_f64(&self) -> f64 {
        let m = (&self.lo + &self.hi) / BigRational::from_integer(2.into());
        m.to_f64().unwrap_or(f64::NAN)
    }

    /// ⌊k·x + shift⌋ for every x in the interval, or `None` when an integer
    /// falls strictly inside the scaled interval.
    pub fn floor_scaled(&self, k: u64, shift: &RealInterval) -> Option<BigInt> {
        let kk = BigRational::from_integer(BigInt::from(k));
        let lo = &kk * &self.lo + &shift.lo;
        let hi = &kk * &self.hi + &shift.hi;
        let f = lo.floor();
        let next = &f + BigRational::one();
        if next < hi {
            None
        } else {
            Some(f.to_integer())
        }
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }
}

/// Anything that can stand in for an irrational rotation number.
pub trait ThetaLike {
    fn interval(&self) -> RealInterval;
}

impl ThetaLike for ContinuedFraction {
    fn interval(&self) -> RealInterval {
        ContinuedFraction::interval(self)
    }
}

impl ThetaLike for f64 {
    fn interval(&self) -> RealInterval {
        RealInterval::from_f64(*self)
    }
}

impl ThetaLike for RealInterval {
    fn interval(&self) -> RealInterval {
        self.clone()
    }
}

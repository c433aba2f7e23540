//! Fixed-point binary angles in [0,1) carrying an upper error bound.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::cf::ContinuedFraction;
use crate::error::{Error, Result};

/// Nudges a non-negative error bound upward past any rounding in its computation.
pub(crate) fn round_up(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE
    }
}

/// value = mantissa / 2^bits, true angle within ±err of value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigAngle {
    mantissa: BigUint,
    bits: u32,
    err: ErrBound,
}

/// Wrapper so the angle can derive `Eq` while the bound stays an `f64`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct ErrBound(f64);
impl Eq for ErrBound {}

impl BigAngle {
    /// Reduces the mantissa mod 2^bits.
    pub fn new(mantissa: BigUint, bits: u32, err: f64) -> Self {
        assert!(err >= 0.0 && err.is_finite(), "error bound must be finite and non-negative");
        let m = mantissa % (BigUint::one() << bits);
        Self { mantissa: m, bits, err: ErrBound(err) }
    }

    pub fn zero(bits: u32) -> Self {
        Self::new(BigUint::zero(), bits, 0.0)
    }

    /// Floor of p/q·2^bits, exact when q is a power of two dividing 2^bits.
    pub fn from_ratio(p: u64, q: u64, bits: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        let num = BigUint::from(p % q) << bits;
        let (m, r) = (&num / q, &num % q);
        let err = if r.is_zero() { 0.0 } else { round_up(2f64.powi(-(bits as i32))) };
        Ok(Self::new(m, bits, err))
    }

    /// Fractional part of `x`, rounded down to `bits`.
    pub fn from_f64(x: f64, bits: u32) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::Domain("non-finite angle".into()));
        }
        let f = x - x.floor();
        let r = BigRational::from_float(f).expect("finite");
        let scaled = r * BigRational::from_integer(BigInt::one() << bits);
        let fl = scaled.floor();
        let exact = fl == scaled;
        let m = fl.to_integer().to_biguint().expect("non-negative");
        let err = if exact { 0.0 } else { round_up(2f64.powi(-(bits as i32))) };
        Ok(Self::new(m, bits, err))
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn err(&self) -> f64 {
        self.err.0
    }

    pub fn with_err(mut self, err: f64) -> Self {
        assert!(err >= 0.0 && err.is_finite());
        self.err = ErrBound(err);
        self
    }

    pub fn to_f64(&self) -> f64 {
        let r = self.to_rational();
        r.to_f64().unwrap_or(0.0)
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(BigInt::from(self.mantissa.clone()), BigInt::one() << self.bits)
    }

    fn widen(&self, bits: u32) -> BigUint {
        debug_assert!(bits >= self.bits);
        &self.mantissa << (bits - self.bits)
    }

    /// Sum mod 1.
    pub fn add(&self, other: &Self) -> Self {
        let bits = self.bits.max(other.bits);
        let m = self.widen(bits) + other.widen(bits);
        Self::new(m, bits, round_up(self.err() + other.err()))
    }

    /// 1 − x mod 1.
    pub fn neg(&self) -> Self {
        let one = BigUint::one() << self.bits;
        let m = if self.mantissa.is_zero() { BigUint::zero() } else { one - &self.mantissa };
        Self::new(m, self.bits, self.err())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// 2^k·x mod 1; the error bound is scaled by 2^k.
    pub fn double_n(&self, k: u32) -> Self {
        let m = &self.mantissa << k;
        Self::new(m, self.bits, round_up(self.err() * 2f64.powi(k as i32)))
    }

    pub fn double(&self) -> Self {
        self.double_n(1)
    }

    /// (x + j)/2^k, computed exactly by growing the mantissa.
    pub fn preimage(&self, j: u64, k: u32) -> Self {
        let m = &self.mantissa + (BigUint::from(j) << self.bits);
        Self::new(m, self.bits + k, self.err() / 2f64.powi(k as i32))
    }

    /// x/2 and (x+1)/2.
    pub fn halves(&self) -> (Self, Self) {
        (self.preimage(0, 1), self.preimage(1, 1))
    }

    /// Binary digit i ≥ 1 of the stored mantissa.
    pub fn digit(&self, i: u32) -> u8 {
        if i == 0 || i > self.bits {
            return 0;
        }
        self.mantissa.bit(u64::from(self.bits - i)) as u8
    }

    /// Exact bounds [value − err, value + err] as rationals.
    pub fn enclosure(&self) -> (BigRational, BigRational) {
        let v = self.to_rational();
        let e = BigRational::from_float(self.err()).expect("finite");
        (&v - &e, &v + &e)
    }

    /// Number of leading binary digits shared by every point of the enclosure.
    pub fn reliable_digits(&self) -> u32 {
        let (lo, hi) = self.enclosure();
        if lo < BigRational::zero() || hi >= BigRational::one() {
            return 0;
        }
        if self.err() == 0.0 {
            return u32::MAX;
        }
        // shared prefix length of the binary expansions of lo and hi
        let scale = |r: &BigRational, n: u32| -> BigInt { (r * BigRational::from_integer(BigInt::one() << n)).floor().to_integer() };
        let (mut a, mut b) = (0u32, self.bits + 64);
        while a < b {
            let mid = (a + b).div_ceil(2);
            if scale(&lo, mid) == scale(&hi, mid) {
                a = mid;
            } else {
                b = mid - 1;
            }
        }
        a
    }

    /// First `n` binary digits, refusing digits the error bound leaves undetermined.
    pub fn digits(&self, n: u32) -> Result<Vec<u8>> {
        let r = self.reliable_digits();
        if n > r {
            return Err(Error::PrecisionExhausted(format!("requested {n} digits, only {r} reliable")));
        }
        Ok((1..=n).map(|i| self.digit(i)).collect())
    }

    /// Distance of the stored value to the nearest integer.
    pub fn dist_to_int(&self) -> f64 {
        self.neg().mantissa.clone().min(self.mantissa.clone()).to_f64().unwrap_or(f64::INFINITY)
            / 2f64.powi(self.bits as i32)
    }

    /// Distance to the nearest integer as an exact rational.
    pub fn dist_to_int_exact(&self) -> BigRational {
        let m = self.mantissa.clone().min(self.neg().mantissa.clone());
        BigRational::new(BigInt::from(m), BigInt::one() << self.bits)
    }

    /// Orders by stored value, ignoring error bounds.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        let bits = self.bits.max(other.bits);
        self.widen(bits).cmp(&other.widen(bits))
    }

    /// Common continued-fraction prefix of all reals in the enclosure.
    pub fn cf_prefix(&self, max: usize) -> Vec<u64> {
        let (lo, hi) = self.enclosure();
        ContinuedFraction::common_prefix(&lo, &hi, max)
    }

    pub fn to_json(&self) -> AngleJson {
        AngleJson { mantissa_hex: format!("{:x}", self.mantissa), bits: self.bits, err: self.err() }
    }

    pub fn from_json(j: &AngleJson) -> Result<Self> {
        let m = BigUint::parse_bytes(j.mantissa_hex.as_bytes(), 16)
            .ok_or_else(|| Error::Domain(format!("bad hex mantissa {}", j.mantissa_hex)))?;
        if j.err < 0.0 || !j.err.is_finite() {
            return Err(Error::Domain("bad error bound".into()));
        }
        Ok(Self::new(m, j.bits, j.err))
    }
}

/// Serialized form of a [`BigAngle`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleJson {
    pub mantissa_hex: String,
    pub bits: u32,
    pub err: f64,
}

impl Serialize for BigAngle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BigAngle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = AngleJson::deserialize(d)?;
        BigAngle::from_json(&j).map_err(serde::de::Error::custom)
    }
}

/// u = (t + j)/2^k for j = 0..2^k−1, ascending.
pub fn dyadic_preimages(t: &BigAngle, k: u32) -> Vec<BigAngle> {
    (0..1u64 << k).map(|j| t.preimage(j, k)).collect()
}

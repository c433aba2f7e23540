use std::f64::consts::PI;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::circle_dyn::CircleLift;
use crate::error::{Error, Result};
use crate::poly;

/// z ↦ λ z · (z−a)/(1−āz) · (z−b)/(1−b̄z) with |a| ≤ 1 ≤ |b|.
///
/// Covers both the Petersen map (a = 0, b = 3) and the mating model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeProduct {
    pub lambda: C,
    pub a: C,
    pub b: C,
    /// Value of the circle lift at the lifted critical point 0.
    pub lift_offset: f64,
    lift_base: f64,
}

pub(crate) fn e(x: f64) -> C {
    C::from_polar(1.0, 2.0 * PI * x)
}

impl BlaschkeProduct {
    pub fn new(lambda: C, a: C, b: C, lift_offset: f64) -> Self {
        let lift_base = (C::new(1.0, 0.0) - C::new(1.0, 0.0) / b).arg() - (C::new(1.0, 0.0) - a.conj()).arg();
        Self { lambda, a, b, lift_offset, lift_base }
    }

    pub fn eval(&self, z: C) -> C {
        let one = C::new(1.0, 0.0);
        self.lambda * z * (z - self.a) / (one - self.a.conj() * z) * (z - self.b) / (one - self.b.conj() * z)
    }

    /// 1/B(1/w), the map in the chart at ∞; equals conj(B(w̄)).
    pub fn eval_inf_chart(&self, w: C) -> C {
        self.eval(w.conj()).conj()
    }

    pub fn numerator(&self) -> Vec<C> {
        let (a, b, l) = (self.a, self.b, self.lambda);
        vec![C::new(0.0, 0.0), l * a * b, -l * (a + b), l]
    }

    pub fn denominator(&self) -> Vec<C> {
        let (a, b) = (self.a.conj(), self.b.conj());
        vec![C::new(1.0, 0.0), -(a + b), a * b]
    }

    /// B′ by the quotient rule on the numerator and denominator polynomials.
    pub fn deriv(&self, z: C) -> C {
        let (n, dn) = poly::horner(&self.numerator(), z);
        let (d, dd) = poly::horner(&self.denominator(), z);
        (dn * d - n * dd) / (d * d)
    }

    /// B′/B = 1/z + 1/(z−a) + 1/(z−b) + ā/(1−āz) + b̄/(1−b̄z).
    pub fn log_deriv(&self, z: C) -> C {
        let one = C::new(1.0, 0.0);
        let (ac, bc) = (self.a.conj(), self.b.conj());
        one / z + one / (z - self.a) + one / (z - self.b) + ac / (one - ac * z) + bc / (one - bc * z)
    }

    fn log_deriv_prime(&self, z: C) -> C {
        let one = C::new(1.0, 0.0);
        let (ac, bc) = (self.a.conj(), self.b.conj());
        let sq = |x: C| x * x;
        -one / sq(z) - one / sq(z - self.a) - one / sq(z - self.b) + sq(ac / (one - ac * z)) + sq(bc / (one - bc * z))
    }

    /// B′ from the logarithmic derivative; needs B(z) ≠ 0.
    pub fn deriv_log(&self, z: C) -> C {
        self.eval(z) * self.log_deriv(z)
    }

    /// B″ = B·(L² + L′) with L the logarithmic derivative.
    pub fn second_deriv(&self, z: C) -> C {
        let l = self.log_deriv(z);
        self.eval(z) * (l * l + self.log_deriv_prime(z))
    }

    /// Numerator coefficients of B(z) − w, ascending.
    pub fn preimage_poly(&self, w: C) -> Vec<C> {
        let d: Vec<C> = self.denominator().iter().map(|&c| c * w).collect();
        poly::sub(&self.numerator(), &d)
    }

    /// The three solutions of B(z) = w.
    pub fn preimages(&self, w: C) -> Result<Vec<C>> {
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::Numeric("preimage of a non-finite value".into()));
        }
        let r = poly::roots(&self.preimage_poly(w))?;
        if r.len() != 3 {
            return Err(Error::Degenerate(format!("B(z) = {w} has {} finite solutions", r.len())));
        }
        Ok(r)
    }

    /// Numerator of B(z) − z, a quartic with root 0.
    pub fn fixed_point_poly(&self) -> Vec<C> {
        let id = [C::new(0.0, 0.0), C::new(1.0, 0.0)];
        poly::sub(&self.numerator(), &poly::mul(&self.denominator(), &id))
    }

    /// Zeros of N′D − ND′, the finite critical points.
    pub fn critical_points(&self) -> Result<Vec<C>> {
        let (n, d) = (self.numerator(), self.denominator());
        let p = poly::sub(&poly::mul(&poly::derivative(&n), &d), &poly::mul(&n, &poly::derivative(&d)));
        poly::roots(&p)
    }

    pub fn critical_value(&self) -> C {
        self.eval(C::new(1.0, 0.0))
    }

    /// Lift of B|𝕋 normalized so that 0 ↦ `lift_offset`.
    ///
    /// Both argument terms have positive real part on 𝕋, so principal values
    /// are continuous in x and in the parameters.
    pub fn lift_value(&self, x: f64) -> f64 {
        let one = C::new(1.0, 0.0);
        let z = e(x);
        let s = (one - z / self.b).arg() - (one - self.a.conj() * z).arg() - self.lift_base;
        self.lift_offset + x + s / PI
    }
}

impl CircleLift for BlaschkeProduct {
    fn lift(&self, x: f64) -> f64 {
        self.lift_value(x)
    }
    fn critical_lift(&self) -> Option<f64> {
        Some(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BlaschkeProduct {
        let a = C::new(0.2, -0.3);
        BlaschkeProduct::new(e(0.17), a, C::new(1.0, 0.0) / a.conj() * C::new(1.3, 0.0), 0.0)
    }

    #[test]
    fn derivative_forms_agree() {
        let m = sample();
        for z in [C::new(0.4, 0.9), C::new(-1.3, 0.2), C::new(2.0, -2.0)] {
            let h = 1e-6;
            let fd = (m.eval(z + h) - m.eval(z - h)) / (2.0 * h);
            assert!((m.deriv(z) - fd).norm() < 1e-6);
            assert!((m.deriv_log(z) - m.deriv(z)).norm() < 1e-10);
            let fd2 = (m.deriv(z + h) - m.deriv(z - h)) / (2.0 * h);
            assert!((m.second_deriv(z) - fd2).norm() < 1e-5);
        }
    }

    #[test]
    fn preimages_map_back() {
        let m = sample();
        let w = C::new(0.3, 0.7);
        for z in m.preimages(w).unwrap() {
            assert!((m.eval(z) - w).norm() < 1e-12);
        }
    }

    #[test]
    fn infinity_chart_matches_reciprocal() {
        let m = sample();
        let w = C::new(0.05, -0.02);
        let direct = C::new(1.0, 0.0) / m.eval(C::new(1.0, 0.0) / w);
        assert!((m.eval_inf_chart(w) - direct).norm() < 1e-14);
    }
}

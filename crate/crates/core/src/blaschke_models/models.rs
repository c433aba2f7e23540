use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::product::{e, BlaschkeProduct};
use crate::error::{Error, Result};
use crate::poly;

/// Roots of z² + (κ̄−3)z + κ = 0 for κ = e^{2πit}, labeled |a| ≤ |b|.
pub fn solve_ab(t: f64) -> (C, C) {
    let kappa = e(t);
    if is_integer(t) {
        return (C::new(1.0, 0.0), C::new(1.0, 0.0));
    }
    let [r0, r1] = poly::quadratic(C::new(1.0, 0.0), kappa.conj() - 3.0, kappa);
    if r0.norm() <= r1.norm() {
        (r0, r1)
    } else {
        (r1, r0)
    }
}

fn is_integer(t: f64) -> bool {
    (t - t.round()).abs() < 1e-15
}

/// The mating model B_{θ,ν} at parameter t.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeCubic {
    pub t: f64,
    pub nu: f64,
    pub kappa: C,
    pub a: C,
    pub b: C,
    pub lambda: C,
    pub zeta: C,
    pub map: BlaschkeProduct,
}

/// B^t with λ = e^{−2πiν}/(ab) = e^{−2πi(ν+t)}.
pub fn build_b(t: f64, nu: f64) -> Result<BlaschkeCubic> {
    if is_integer(t) {
        return Err(Error::Degenerate(format!("t = {t} is an integer; the product collapses to degree one")));
    }
    Ok(mating_unchecked(t, nu))
}

/// Same as [`build_b`] but allows t ∈ ℤ, where the map is the rotation z ↦ e^{−2πiν}z.
pub fn mating_unchecked(t: f64, nu: f64) -> BlaschkeCubic {
    let (a, b) = solve_ab(t);
    let kappa = e(t);
    let lambda = e(-nu) / (a * b);
    BlaschkeCubic { t, nu, kappa, a, b, lambda, zeta: a + b, map: BlaschkeProduct::new(lambda, a, b, -nu - t) }
}

impl BlaschkeCubic {
    pub fn eval(&self, z: C) -> C {
        self.map.eval(z)
    }

    pub fn deriv(&self, z: C) -> C {
        self.map.deriv(z)
    }

    /// B′(0).
    pub fn multiplier_zero(&self) -> C {
        self.map.deriv(C::new(0.0, 0.0))
    }

    /// Derivative of w ↦ 1/B(1/w) at 0.
    pub fn multiplier_infinity(&self) -> C {
        self.map.deriv(C::new(0.0, 0.0)).conj()
    }
}

/// Q^t(z) = e^{2πit} z²(z−3)/(1−3z).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PetersenModel {
    pub t: f64,
    pub map: BlaschkeProduct,
}

impl PetersenModel {
    pub fn new(t: f64) -> Self {
        Self { t, map: BlaschkeProduct::new(e(t), C::new(0.0, 0.0), C::new(3.0, 0.0), t) }
    }

    pub fn eval(&self, z: C) -> C {
        self.map.eval(z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalResiduals {
    /// |B′(1)|.
    pub first: f64,
    /// |B″(1)| for the mating model; for Q the largest ||Q^n(1)| − 1| along the orbit.
    pub second: f64,
}

/// |B′(1)| and |B″(1)| from the logarithmic derivative.
pub fn critical_structure_check(model: &BlaschkeCubic) -> CriticalResiduals {
    let one = C::new(1.0, 0.0);
    CriticalResiduals { first: model.map.deriv_log(one).norm(), second: model.map.second_deriv(one).norm() }
}

/// |Q′(1)| and the drift of the first `orbit` iterates of 1 off 𝕋.
pub fn petersen_structure_check(model: &PetersenModel, orbit: usize) -> CriticalResiduals {
    let mut z = C::new(1.0, 0.0);
    let mut drift: f64 = 0.0;
    for _ in 0..orbit {
        z = model.eval(z);
        drift = drift.max((z.norm() - 1.0).abs());
        z /= z.norm();
    }
    CriticalResiduals { first: model.map.deriv_log(C::new(1.0, 0.0)).norm(), second: drift }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ab_examples() {
        assert_eq!(solve_ab(0.0), (C::new(1.0, 0.0), C::new(1.0, 0.0)));
        let (a, b) = solve_ab(0.5);
        let s5 = 5f64.sqrt();
        assert!((a - C::new(2.0 - s5, 0.0)).norm() < 1e-14);
        assert!((b - C::new(2.0 + s5, 0.0)).norm() < 1e-14);
        for k in 1..20 {
            let t = k as f64 / 20.0 + 0.013;
            let (a, b) = solve_ab(t);
            let kappa = e(t);
            assert!((a * b - kappa).norm() < 1e-13);
            assert!((a + b - (3.0 - kappa.conj())).norm() < 1e-13);
            assert!(a.norm() <= 1.0 && (b.norm() * a.norm() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn degenerate_parameter_rejected() {
        assert!(matches!(build_b(0.0, 0.3), Err(Error::Degenerate(_))));
        assert!(matches!(build_b(2.0, 0.3), Err(Error::Degenerate(_))));
    }

    #[test]
    fn multipliers_at_fixed_centers() {
        let nu = 0.381_966;
        let m = build_b(0.3, nu).unwrap();
        assert!((m.multiplier_zero() - e(-nu)).norm() < 1e-13);
        assert!((m.multiplier_infinity() - e(nu)).norm() < 1e-13);
        assert_eq!(m.eval(C::new(0.0, 0.0)), C::new(0.0, 0.0));
        assert_eq!(m.map.eval_inf_chart(C::new(0.0, 0.0)), C::new(0.0, 0.0));
        assert!((m.lambda.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn double_critical_point_for_every_t() {
        for k in 1..16 {
            let m = build_b(k as f64 / 16.0, 0.2).unwrap();
            let r = critical_structure_check(&m);
            assert!(r.first < 1e-8 && r.second < 1e-8, "t = {}: {r:?}", m.t);
        }
    }

    #[test]
    fn petersen_circle_and_critical_point() {
        for t in [0.1, 0.5, 0.613_648, 0.9] {
            let q = PetersenModel::new(t);
            let r = petersen_structure_check(&q, 1000);
            assert!(r.first < 1e-10 && r.second < 1e-12);
            let z = e(0.37);
            assert!((q.eval(z).norm() - 1.0).abs() < 1e-12);
        }
    }
}

//! The quadratic normal form F_{θ,ν}, multiplier coordinates, the Siegel
//! quadratic f_θ, the Chebyshev quotient G, and the fixed point β of a
//! Blaschke model.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::blaschke_models::{e, BlaschkeProduct};
use crate::error::{Error, Result};
use crate::poly;

/// F(z) = z(Az + B)/(Cz + D) with A = 1−e_θ, B = e_θ(1−e_ν), C = (1−e_θ)e_ν, D = 1−e_ν.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadRational {
    pub theta: f64,
    pub nu: f64,
    pub coeffs: [C; 4],
    pub mu: [C; 3],
    pub sigma: [C; 3],
}

/// Normal form with fixed points 0, 1, ∞ and multipliers e^{2πiθ}, ·, e^{2πiν}.
pub fn f_normal(theta: f64, nu: f64) -> Result<QuadRational> {
    let (et, en) = (e(theta), e(nu));
    let one = C::new(1.0, 0.0);
    if (et * en - one).norm() < 1e-12 {
        return Err(Error::Degenerate(format!("θ + ν = {} is an integer", theta + nu)));
    }
    let coeffs = [one - et, et * (one - en), (one - et) * en, one - en];
    let (s1, s2, s3, mu3) = sigma_coords(et, en)?;
    Ok(QuadRational { theta, nu, coeffs, mu: [et, en, mu3], sigma: [s1, s2, s3] })
}

impl QuadRational {
    pub fn eval(&self, z: C) -> C {
        let [a, b, c, d] = self.coeffs;
        z * (a * z + b) / (c * z + d)
    }

    pub fn deriv(&self, z: C) -> C {
        let [a, b, c, d] = self.coeffs;
        let den = c * z + d;
        ((2.0 * a * z + b) * den - c * (a * z * z + b * z)) / (den * den)
    }

    /// w ↦ 1/F(1/w) = w(C + Dw)/(A + Bw).
    pub fn eval_inf_chart(&self, w: C) -> C {
        let [a, b, c, d] = self.coeffs;
        w * (c + d * w) / (a + b * w)
    }

    pub fn deriv_inf_chart(&self, w: C) -> C {
        let [a, b, c, d] = self.coeffs;
        let den = a + b * w;
        ((c + 2.0 * d * w) * den - b * (c * w + d * w * w)) / (den * den)
    }

    /// Finite zeros of F′, from (2Az + B)(Cz + D) − C(Az² + Bz).
    pub fn critical_points(&self) -> Vec<C> {
        let [a, b, c, d] = self.coeffs;
        poly::quadratic(a * c, 2.0 * a * d, b * d).to_vec()
    }

    pub fn pole(&self) -> C {
        -self.coeffs[3] / self.coeffs[2]
    }

    /// Roots of F(z) = z after clearing denominators, plus ∞.
    pub fn fixed_points(&self) -> Vec<Option<C>> {
        let [a, b, c, d] = self.coeffs;
        // z[(A−C)z + (B−D)] = 0
        let mut out = vec![Some(C::new(0.0, 0.0)), Some((d - b) / (a - c))];
        out.push(None);
        out
    }
}

/// μ₃ = (2−μ₁−μ₂)/(1−μ₁μ₂) and the elementary symmetric functions σ₁, σ₂, σ₃.
pub fn sigma_coords(mu1: C, mu2: C) -> Result<(C, C, C, C)> {
    let one = C::new(1.0, 0.0);
    let den = one - mu1 * mu2;
    if den.norm() < 1e-14 {
        return Err(Error::Degenerate("μ₁μ₂ = 1".into()));
    }
    let mu3 = (2.0 - mu1 - mu2) / den;
    let s1 = mu1 + mu2 + mu3;
    let s2 = mu1 * mu2 + mu1 * mu3 + mu2 * mu3;
    let s3 = mu1 * mu2 * mu3;
    Ok((s1, s2, s3, mu3))
}

/// z ↦ z² + c_θ with c_θ = e^{2πiθ}/2·(1 − e^{2πiθ}/2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiegelQuadratic {
    pub theta: f64,
    pub c: C,
    pub alpha: C,
    /// Repelling fixed point 1 − e^{2πiθ}/2, found by root solving.
    pub beta: C,
    /// False when e^{2πiθ} is a root of unity of low order.
    pub siegel: bool,
}

pub fn f_theta(theta: f64) -> SiegelQuadratic {
    let et = e(theta);
    let alpha = et / 2.0;
    let c = alpha * (C::new(1.0, 0.0) - alpha);
    let [r0, r1] = poly::quadratic(C::new(1.0, 0.0), C::new(-1.0, 0.0), c);
    let beta = if (2.0 * r0).norm() > (2.0 * r1).norm() { r0 } else { r1 };
    let siegel = !(1..=64).any(|q| {
        let x = theta * q as f64;
        (x - x.round()).abs() < 1e-12
    });
    SiegelQuadratic { theta, c, alpha, beta, siegel }
}

impl SiegelQuadratic {
    pub fn eval(&self, z: C) -> C {
        z * z + self.c
    }

    pub fn deriv(&self, z: C) -> C {
        2.0 * z
    }

    pub fn critical_value(&self) -> C {
        self.c
    }
}

/// G(z) = 4z/((1+z) + e^{2πiθ}(1−z))².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevQuotient {
    pub theta: f64,
    pub et: C,
    /// Double pole, mapped to ∞ and then to the repelling fixed point 0.
    pub c1: C,
    pub c2: C,
}

pub fn chebyshev_g(theta: f64) -> ChebyshevQuotient {
    let et = e(theta);
    let one = C::new(1.0, 0.0);
    let c1 = (et + one) / (et - one);
    ChebyshevQuotient { theta, et, c1, c2: -c1 }
}

impl ChebyshevQuotient {
    fn den(&self, z: C) -> C {
        (C::new(1.0, 0.0) + z) + self.et * (C::new(1.0, 0.0) - z)
    }

    pub fn eval(&self, z: C) -> C {
        let d = self.den(z);
        4.0 * z / (d * d)
    }

    /// 1/G(z) = D(z)²/(4z).
    pub fn eval_recip(&self, z: C) -> C {
        let d = self.den(z);
        d * d / (4.0 * z)
    }

    /// G(1/w) = 4w/((w+1) + e^{2πiθ}(w−1))².
    pub fn eval_at_inf_chart(&self, w: C) -> C {
        let one = C::new(1.0, 0.0);
        let d = (w + one) + self.et * (w - one);
        4.0 * w / (d * d)
    }

    pub fn deriv(&self, z: C) -> C {
        let d = self.den(z);
        let dp = C::new(1.0, 0.0) - self.et;
        4.0 / (d * d) - 8.0 * z * dp / (d * d * d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaPoints {
    pub beta: C,
    /// 1/β̄, the fourth fixed point after 0, ∞ and β.
    pub beta_mirror: C,
    pub beta_prime: C,
    pub multiplier: C,
}

/// β: the finite fixed point outside 𝔻̄; β′: its other preimage outside 𝔻̄.
pub fn fixed_points_beta(map: &BlaschkeProduct) -> Result<BetaPoints> {
    let p = map.fixed_point_poly();
    // divide out the root at 0
    let reduced: Vec<C> = p[1..].to_vec();
    let roots = poly::roots(&reduced)?;
    let table = || format!("fixed points: {roots:?}");
    let outside: Vec<C> = roots.iter().copied().filter(|z| z.norm() > 1.0 + 1e-9).collect();
    if outside.len() != 1 {
        return Err(Error::Ambiguity(table()));
    }
    let beta = poly::newton_polish(&reduced, outside[0], 4);
    let multiplier = map.deriv(beta);
    if multiplier.norm() <= 1.0 {
        return Err(Error::Numeric(format!("β = {beta} is not repelling: |B′(β)| = {}", multiplier.norm())));
    }
    let pre = map.preimages(beta)?;
    let others: Vec<C> =
        pre.iter().copied().filter(|z| z.norm() > 1.0 + 1e-9 && (z - beta).norm() > 1e-8).collect();
    if others.len() != 1 {
        return Err(Error::Ambiguity(format!("preimages of β: {pre:?}")));
    }
    Ok(BetaPoints { beta, beta_mirror: C::new(1.0, 0.0) / beta.conj(), beta_prime: others[0], multiplier })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke_models::{build_b, PetersenModel};

    const G: f64 = 0.618_033_988_749_894_8;

    #[test]
    fn normal_form_identities() {
        let f = f_normal(0.3, 0.45).unwrap();
        let one = C::new(1.0, 0.0);
        assert_eq!(f.eval(C::new(0.0, 0.0)), C::new(0.0, 0.0));
        assert!((f.eval(one) - one).norm() < 1e-14);
        assert!(f.eval_inf_chart(C::new(0.0, 0.0)).norm() < 1e-14);
        assert!((f.deriv(C::new(0.0, 0.0)) - e(0.3)).norm() < 1e-14);
        assert!((f.deriv_inf_chart(C::new(0.0, 0.0)) - e(0.45)).norm() < 1e-14);
        assert!((f.deriv(one) - f.mu[2]).norm() < 1e-12);
        assert!((f.sigma[2] - f.sigma[0] + 2.0).norm() < 1e-12);
        assert_eq!(f.fixed_points().len(), 3);
        assert!(f_normal(0.3, 0.7).is_err());
    }

    #[test]
    fn sigma_at_zero_multipliers() {
        let z = C::new(0.0, 0.0);
        let (s1, s2, s3, mu3) = sigma_coords(z, z).unwrap();
        assert_eq!((s1, s2, s3, mu3), (C::new(2.0, 0.0), z, z, C::new(2.0, 0.0)));
    }

    #[test]
    fn golden_golden_mu3_matches_derivative() {
        let f = f_normal(G, G).unwrap();
        assert!((f.deriv(C::new(1.0, 0.0)) - f.mu[2]).norm() < 1e-9);
        assert!(f.mu[2].norm() > 1.0);
    }

    #[test]
    fn siegel_quadratic_data() {
        let f = f_theta(G);
        assert!((f.eval(f.alpha) - f.alpha).norm() < 1e-12);
        assert!((f.deriv(f.alpha) - e(G)).norm() < 1e-12);
        assert!((f.beta - (C::new(1.0, 0.0) - e(G) / 2.0)).norm() < 1e-12);
        assert!(f.siegel);
        let p = f_theta(0.5);
        assert!((p.c - C::new(-0.75, 0.0)).norm() < 1e-15);
        assert!(!p.siegel);
    }

    #[test]
    fn chebyshev_orbit_and_multiplier() {
        let g = chebyshev_g(G);
        assert!(g.eval_recip(g.c1).norm() < 1e-10);
        assert!(g.eval_at_inf_chart(C::new(0.0, 0.0)).norm() < 1e-10);
        assert!((g.deriv(C::new(1.0, 0.0)) - e(G)).norm() < 1e-10);
        assert!((g.eval(C::new(1.0, 0.0)) - C::new(1.0, 0.0)).norm() < 1e-14);
        assert!(g.deriv(g.c2).norm() < 1e-10);
        assert_eq!(g.c2, -g.c1);
    }

    #[test]
    fn beta_of_models() {
        let m = build_b(0.707_913_085_363, G).unwrap();
        let bp = fixed_points_beta(&m.map).unwrap();
        assert!(bp.multiplier.norm() > 1.0);
        // index theorem with neutral multipliers at 0 and ∞ and a 𝒯-symmetric pair β, 1/β̄
        assert!((bp.multiplier.re - 1.0).abs() < 1e-8, "{}", bp.multiplier);
        assert!((m.eval(bp.beta_prime) - bp.beta).norm() < 1e-10);
        assert!((bp.beta_prime - bp.beta).norm() > 1e-3);
        // the fixed-point set is symmetric under z ↦ 1/z̄
        assert!((m.eval(bp.beta_mirror) - bp.beta_mirror).norm() < 1e-10);
        let q = PetersenModel::new(0.613_648_638_88);
        let bq = fixed_points_beta(&q.map).unwrap();
        assert!((q.eval(bq.beta) - bq.beta).norm() < 1e-12);
    }
}

//! Complex polynomial roots: companion-matrix eigenvalues with Newton polish.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C = Complex64;

/// Evaluates Σ cₖ zᵏ (ascending coefficients) and its derivative.
pub fn horner(coeffs: &[C], z: C) -> (C, C) {
    let mut p = C::new(0.0, 0.0);
    let mut dp = C::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Up to `steps` Newton iterations, stopping when the update stops shrinking.
pub fn newton_polish(coeffs: &[C], mut z: C, steps: usize) -> C {
    let mut last = f64::INFINITY;
    for _ in 0..steps {
        let (p, dp) = horner(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let dz = p / dp;
        if !dz.re.is_finite() || !dz.im.is_finite() || dz.norm() >= last {
            break;
        }
        last = dz.norm();
        z -= dz;
        if last <= 1e-17 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// Roots of Σ cₖ zᵏ, leading zeros dropped.
pub fn roots(coeffs: &[C]) -> Result<Vec<C>> {
    let mut n = coeffs.len();
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Degenerate("zero polynomial".into()));
    }
    while n > 0 && coeffs[n - 1].norm() <= 1e-300 * scale {
        n -= 1;
    }
    let c = &coeffs[..n];
    let deg = n.saturating_sub(1);
    match deg {
        0 => Ok(vec![]),
        1 => Ok(vec![-c[0] / c[1]]),
        2 => Ok(quadratic(c[2], c[1], c[0]).to_vec()),
        _ => {
            let lead = c[deg];
            let mut m = DMatrix::<C>::zeros(deg, deg);
            for i in 1..deg {
                m[(i, i - 1)] = C::new(1.0, 0.0);
            }
            for i in 0..deg {
                m[(i, deg - 1)] = -c[i] / lead;
            }
            let eig = m
                .schur()
                .eigenvalues()
                .ok_or_else(|| Error::Numeric("companion eigenvalues did not converge".into()))?;
            Ok(eig.iter().map(|&z| newton_polish(c, z, 3)).collect())
        }
    }
}

/// Roots of a z² + b z + c with the cancellation-free formula.
pub fn quadratic(a: C, b: C, c: C) -> [C; 2] {
    let disc = (b * b - 4.0 * a * c).sqrt();
    let q = if (b.conj() * disc).re >= 0.0 { -(b + disc) / 2.0 } else { -(b - disc) / 2.0 };
    if q.norm() == 0.0 {
        let r = -b / (2.0 * a);
        return [r, r];
    }
    [q / a, c / q]
}

/// Coefficients of (z − r₀)(z − r₁)…, ascending.
pub fn from_roots(rs: &[C]) -> Vec<C> {
    let mut p = vec![C::new(1.0, 0.0)];
    for &r in rs {
        let mut q = vec![C::new(0.0, 0.0); p.len() + 1];
        for (i, &c) in p.iter().enumerate() {
            q[i + 1] += c;
            q[i] -= r * c;
        }
        p = q;
    }
    p
}

pub fn mul(p: &[C], q: &[C]) -> Vec<C> {
    let mut r = vec![C::new(0.0, 0.0); p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in q.iter().enumerate() {
            r[i + j] += a * b;
        }
    }
    r
}

pub fn sub(p: &[C], q: &[C]) -> Vec<C> {
    let n = p.len().max(q.len());
    (0..n)
        .map(|i| p.get(i).copied().unwrap_or_default() - q.get(i).copied().unwrap_or_default())
        .collect()
}

pub fn derivative(p: &[C]) -> Vec<C> {
    p.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matches(mut got: Vec<C>, want: &[C], tol: f64) {
        assert_eq!(got.len(), want.len());
        for w in want {
            let (i, d) = got
                .iter()
                .enumerate()
                .map(|(i, g)| (i, (g - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(d < tol, "root {w} missed by {d}");
            got.remove(i);
        }
    }

    #[test]
    fn quartic_from_known_roots() {
        let rs = [C::new(1.0, 0.0), C::new(-0.5, 2.0), C::new(3.0, -1.0), C::new(0.0, 0.1)];
        matches(roots(&from_roots(&rs)).unwrap(), &rs, 1e-12);
    }

    #[test]
    fn quadratic_without_cancellation() {
        let [r0, r1] = quadratic(C::new(1.0, 0.0), C::new(-1e8, 0.0), C::new(1.0, 0.0));
        let small = if r0.norm() < r1.norm() { r0 } else { r1 };
        assert!((small.re - 1e-8).abs() < 1e-20);
    }

    #[test]
    fn leading_zero_drops_degree() {
        let c = [C::new(-2.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0)];
        assert_eq!(roots(&c).unwrap(), vec![C::new(2.0, 0.0)]);
    }
}

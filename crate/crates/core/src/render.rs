//! Orbit-classification renderers with validated Siegel traps, PPM output and
//! polyline overlays.

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blaschke_models::{build_b, solve_t, BlaschkeCubic, BlaschkeProduct, Family, PetersenModel, SolveConfig};
use crate::cf_arith::ContinuedFraction;
use crate::error::{Error, Result};
use crate::geometry::Cx;
use crate::rational_maps::{chebyshev_g, f_normal, f_theta, ChebyshevQuotient, QuadRational, SiegelQuadratic};

pub const PROBES: usize = 256;
pub const PROBE_ITERS: usize = 200;
pub const DRIFT: f64 = 0.05;
pub const MIN_RADIUS: f64 = 1e-6;
pub const DEFAULT_ETA: f64 = 0.25;
pub const DEFAULT_MAX_ITER: u32 = 2000;
pub const F_ESCAPE_RADIUS: f64 = 4.0;
/// |Q(z)| > |z| once |z| ≥ 10, so this bound certifies escape.
pub const Q_ESCAPE_RADIUS: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrapCenter {
    Zero,
    Infinity,
    One,
}

/// A map together with the chart in which a trap is validated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrapMap {
    Blaschke(BlaschkeProduct),
    Rational(QuadRational),
    Chebyshev(ChebyshevQuotient),
    /// z ↦ μz, exact rotation when |μ| = 1.
    Linear(C),
}

impl TrapMap {
    fn chart(&self, center: TrapCenter, w: C) -> C {
        let one = C::new(1.0, 0.0);
        match (self, center) {
            (TrapMap::Blaschke(b), TrapCenter::Zero) => b.eval(w),
            (TrapMap::Blaschke(b), TrapCenter::Infinity) => b.eval_inf_chart(w),
            (TrapMap::Rational(f), TrapCenter::Zero) => f.eval(w),
            (TrapMap::Rational(f), TrapCenter::Infinity) => f.eval_inf_chart(w),
            (TrapMap::Chebyshev(g), TrapCenter::One) => g.eval(one + w) - one,
            (TrapMap::Linear(mu), _) => mu * w,
            _ => C::new(f64::NAN, f64::NAN),
        }
    }

    /// Distance in the chart from the center to the nearest critical point or pole.
    fn singular_distance(&self, center: TrapCenter) -> Result<f64> {
        let one = C::new(1.0, 0.0);
        let pts: Vec<C> = match (self, center) {
            (TrapMap::Blaschke(b), TrapCenter::Zero | TrapCenter::Infinity) => {
                // the ∞ chart is z ↦ conj(B(z̄)), so both charts share these distances
                let mut v = b.critical_points()?;
                for z in [b.a, b.b] {
                    if z.norm() > 0.0 {
                        v.push(one / z.conj());
                    }
                }
                v
            }
            (TrapMap::Rational(f), TrapCenter::Zero) => {
                let mut v = f.critical_points();
                v.push(f.pole());
                v
            }
            (TrapMap::Rational(f), TrapCenter::Infinity) => {
                let [a, b, _, _] = f.coeffs;
                let mut v: Vec<C> = f.critical_points().into_iter().filter(|c| c.norm() > 0.0).map(|c| one / c).collect();
                v.push(-a / b);
                v
            }
            (TrapMap::Chebyshev(g), TrapCenter::One) => vec![g.c1 - one, g.c2 - one],
            (TrapMap::Linear(_), _) => return Ok(1.0),
            _ => return Err(Error::Domain(format!("no {center:?} chart for this map"))),
        };
        pts.iter()
            .map(|z| z.norm())
            .filter(|d| d.is_finite())
            .min_by(f64::total_cmp)
            .ok_or_else(|| Error::Numeric("no finite singular points".into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapRegion {
    pub center: TrapCenter,
    /// Radius in the chart coordinate.
    pub radius: f64,
    pub validated: bool,
    /// max |g^n(p)|/r over probes and iterates.
    pub max_drift: f64,
    pub probes: usize,
    pub iterates: usize,
}

impl TrapRegion {
    pub fn contains(&self, z: C) -> bool {
        match self.center {
            TrapCenter::Zero => z.norm() < self.radius,
            TrapCenter::Infinity => !z.is_finite() || z.norm() * self.radius > 1.0,
            TrapCenter::One => (z - C::new(1.0, 0.0)).norm() < self.radius,
        }
    }
}

fn validate(map: &TrapMap, center: TrapCenter, r: f64) -> f64 {
    (0..PROBES)
        .map(|k| {
            let mut w = C::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / PROBES as f64);
            let mut worst: f64 = 1.0;
            for _ in 0..PROBE_ITERS {
                w = map.chart(center, w);
                let d = w.norm() / r;
                if !d.is_finite() {
                    return f64::INFINITY;
                }
                worst = worst.max(d);
            }
            worst
        })
        .fold(0.0, f64::max)
}

/// Radius η·(singular distance), halved until the probes stay within r(1+δ).
pub fn make_trap(map: &TrapMap, center: TrapCenter, eta: f64) -> Result<TrapRegion> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Domain(format!("trap shrink factor must be positive, got {eta}")));
    }
    let mut r = eta * map.singular_distance(center)?;
    while r >= MIN_RADIUS {
        let drift = validate(map, center, r);
        if drift <= 1.0 + DRIFT {
            return Ok(TrapRegion { center, radius: r, validated: true, max_drift: drift, probes: PROBES, iterates: PROBE_ITERS });
        }
        r *= 0.5;
    }
    Err(Error::NoTrap(format!("no radius ≥ {MIN_RADIUS:e} passed validation at {center:?}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PixelClass {
    SideA,
    SideB,
    Undecided,
    Escaped,
}

impl PixelClass {
    pub fn swapped(self) -> Self {
        match self {
            PixelClass::SideA => PixelClass::SideB,
            PixelClass::SideB => PixelClass::SideA,
            other => other,
        }
    }

    pub fn rgb(self) -> [u8; 3] {
        match self {
            PixelClass::SideA => [0, 0, 0],
            PixelClass::SideB => [128, 128, 128],
            PixelClass::Undecided | PixelClass::Escaped => [255, 255, 255],
        }
    }
}

pub const ACCENT: [u8; 3] = [255, 0, 0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BClass {
    EntersDisk,
    EntersUInf,
    Undecided,
}

/// Iterates B until the orbit enters 𝔻 or the ∞-trap.
pub fn classify_b(map: &BlaschkeProduct, trap_inf: &TrapRegion, z: C, max_iter: u32) -> (BClass, u32) {
    let mut z = z;
    for n in 0..=max_iter {
        if !z.is_finite() || trap_inf.contains(z) {
            return (BClass::EntersUInf, n);
        }
        if z.norm() < 1.0 {
            return (BClass::EntersDisk, n);
        }
        if n < max_iter {
            z = map.eval(z);
        }
    }
    (BClass::Undecided, max_iter)
}

/// Plain B with both Siegel traps; symmetric under z ↦ 1/z̄ with the sides exchanged.
pub fn classify_b_two_traps(map: &BlaschkeProduct, trap0: &TrapRegion, trap_inf: &TrapRegion, z: C, max_iter: u32) -> (PixelClass, u32) {
    two_traps(|z| map.eval(z), trap0, trap_inf, z, max_iter)
}

fn two_traps(step: impl Fn(C) -> C, a: &TrapRegion, b: &TrapRegion, z: C, max_iter: u32) -> (PixelClass, u32) {
    let mut z = z;
    for n in 0..=max_iter {
        if !z.is_finite() || b.contains(z) {
            return (PixelClass::SideB, n);
        }
        if a.contains(z) {
            return (PixelClass::SideA, n);
        }
        if n < max_iter {
            z = step(z);
        }
    }
    (PixelClass::Undecided, max_iter)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FClass {
    EntersDelta0,
    EntersDeltaInf,
    Undecided,
}

pub fn classify_f(f: &QuadRational, trap0: &TrapRegion, trap_inf: &TrapRegion, z: C, max_iter: u32) -> (FClass, u32) {
    let (c, n) = two_traps(|z| f.eval(z), trap0, trap_inf, z, max_iter);
    let c = match c {
        PixelClass::SideA => FClass::EntersDelta0,
        PixelClass::SideB => FClass::EntersDeltaInf,
        _ => FClass::Undecided,
    };
    (c, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "result")]
pub enum Escape {
    Escaped { step: u32 },
    Bounded,
}

pub fn escape_classify_f(c: C, z: C, max_iter: u32, radius: f64) -> Result<Escape> {
    if radius < 2.0 + c.norm() {
        return Err(Error::Domain(format!("escape radius {radius} is below 2 + |c|")));
    }
    let r2 = radius * radius;
    let mut z = z;
    for n in 0..=max_iter {
        if z.norm_sqr() > r2 {
            return Ok(Escape::Escaped { step: n });
        }
        z = z * z + c;
    }
    Ok(Escape::Bounded)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenderKind {
    Fjulia,
    Petersen,
    Mating,
    Fmating,
    Chebyshev,
}

impl RenderKind {
    pub fn default_viewport(self) -> Viewport {
        let v = |re0, im0, re1, im1| Viewport { re0, im0, re1, im1 };
        match self {
            RenderKind::Fjulia => v(-1.6, -1.6, 1.6, 1.6),
            RenderKind::Petersen => v(-3.0, -4.5, 6.0, 4.5),
            RenderKind::Mating => v(-4.0, -4.25, 4.5, 4.25),
            RenderKind::Fmating => v(-2.0, -2.5, 3.0, 2.5),
            RenderKind::Chebyshev => v(-2.0, -3.0, 4.0, 3.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub re0: f64,
    pub im0: f64,
    pub re1: f64,
    pub im1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pixels {
    pub w: u32,
    pub h: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub kind: RenderKind,
    pub theta_cf: Vec<u64>,
    pub nu_cf: Option<Vec<u64>>,
    pub viewport: Viewport,
    pub px: Pixels,
    pub max_iter: u32,
    pub eta: f64,
    pub overlays: Vec<String>,
}

/// The map to draw, with parameters already solved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scene {
    Fjulia(SiegelQuadratic),
    Petersen(PetersenModel),
    Mating(BlaschkeCubic),
    Fmating(QuadRational),
    Chebyshev(ChebyshevQuotient),
}

impl Scene {
    /// Builds the map for `kind`, running the parameter solver where needed.
    pub fn build(kind: RenderKind, theta: &ContinuedFraction, nu: Option<&ContinuedFraction>, solve: &SolveConfig) -> Result<Self> {
        let need_nu = || nu.ok_or_else(|| Error::Domain(format!("{kind:?} needs ν")));
        Ok(match kind {
            RenderKind::Fjulia => Scene::Fjulia(f_theta(theta.to_f64())),
            RenderKind::Petersen => {
                let r = solve_t(theta, Family::Petersen, solve)?;
                Scene::Petersen(PetersenModel::new(r.t))
            }
            RenderKind::Mating => {
                let nu = need_nu()?.to_f64();
                let r = solve_t(theta, Family::Mating { nu }, solve)?;
                Scene::Mating(build_b(r.t, nu)?)
            }
            RenderKind::Fmating => Scene::Fmating(f_normal(theta.to_f64(), need_nu()?.to_f64())?),
            RenderKind::Chebyshev => Scene::Chebyshev(chebyshev_g(theta.to_f64())),
        })
    }
}

/// A polyline drawn as 1-pixel strokes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub label: String,
    pub points: Vec<Cx>,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    pub width: u32,
    pub height: u32,
    pub viewport: Viewport,
    pub classes: Vec<PixelClass>,
    pub iters: Vec<u32>,
    pub traps: Vec<TrapRegion>,
}

impl ImageGrid {
    pub fn pixel_center(&self, i: u32, j: u32) -> C {
        pixel_center(&self.viewport, self.width, self.height, i, j)
    }

    /// Fraction of pixels whose class differs from `other`.
    pub fn churn(&self, other: &ImageGrid) -> f64 {
        assert_eq!(self.classes.len(), other.classes.len());
        let changed = self.classes.iter().zip(&other.classes).filter(|(a, b)| a != b).count();
        changed as f64 / self.classes.len().max(1) as f64
    }

    pub fn count(&self, c: PixelClass) -> usize {
        self.classes.iter().filter(|&&x| x == c).count()
    }

    pub fn to_ppm(&self, overlays: &[Overlay]) -> Vec<u8> {
        let (w, h) = (self.width as usize, self.height as usize);
        let mut rgb: Vec<u8> = self.classes.iter().flat_map(|c| c.rgb()).collect();
        for o in overlays {
            let px: Vec<(i64, i64)> = o.points.iter().map(|&z| self.to_pixel(z.into())).collect();
            let n = px.len();
            let segs = if o.closed { n } else { n.saturating_sub(1) };
            for k in 0..segs {
                line(&mut rgb, w, h, px[k], px[(k + 1) % n]);
            }
            if n == 1 {
                line(&mut rgb, w, h, px[0], px[0]);
            }
        }
        let mut out = format!("P6\n{} {}\n255\n", w, h).into_bytes();
        out.extend_from_slice(&rgb);
        out
    }

    fn to_pixel(&self, z: C) -> (i64, i64) {
        let v = &self.viewport;
        let x = (z.re - v.re0) / (v.re1 - v.re0) * self.width as f64 - 0.5;
        let y = (v.im1 - z.im) / (v.im1 - v.im0) * self.height as f64 - 0.5;
        let clamp = |t: f64| t.clamp(-1e6, 1e6).round() as i64;
        (clamp(x), clamp(y))
    }
}

fn pixel_center(v: &Viewport, w: u32, h: u32, i: u32, j: u32) -> C {
    let re = v.re0 + (i as f64 + 0.5) / w as f64 * (v.re1 - v.re0);
    let im = v.im1 - (j as f64 + 0.5) / h as f64 * (v.im1 - v.im0);
    C::new(re, im)
}

/// Bresenham; off-image pixels are skipped.
fn line(rgb: &mut [u8], w: usize, h: usize, a: (i64, i64), b: (i64, i64)) {
    let out = |p: (i64, i64)| p.0 < 0 || p.1 < 0 || p.0 >= w as i64 || p.1 >= h as i64;
    if out(a) && out(b) && ((a.0 < 0 && b.0 < 0) || (a.1 < 0 && b.1 < 0) || (a.0 >= w as i64 && b.0 >= w as i64) || (a.1 >= h as i64 && b.1 >= h as i64)) {
        return;
    }
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if !out((x, y)) {
            let k = 3 * (y as usize * w + x as usize);
            rgb[k..k + 3].copy_from_slice(&ACCENT);
        }
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Classifier for one scene, with its traps built once.
pub struct Classifier {
    scene: Scene,
    traps: Vec<TrapRegion>,
}

impl Classifier {
    pub fn new(scene: Scene, eta: f64) -> Result<Self> {
        let traps = match scene {
            Scene::Fjulia(_) | Scene::Petersen(_) => Vec::new(),
            Scene::Mating(m) => vec![make_trap(&TrapMap::Blaschke(m.map), TrapCenter::Infinity, eta)?],
            Scene::Fmating(f) => vec![
                make_trap(&TrapMap::Rational(f), TrapCenter::Zero, eta)?,
                make_trap(&TrapMap::Rational(f), TrapCenter::Infinity, eta)?,
            ],
            Scene::Chebyshev(g) => vec![make_trap(&TrapMap::Chebyshev(g), TrapCenter::One, eta)?],
        };
        Ok(Self { scene, traps })
    }

    pub fn traps(&self) -> &[TrapRegion] {
        &self.traps
    }

    pub fn classify(&self, z: C, max_iter: u32) -> (PixelClass, u32) {
        match self.scene {
            Scene::Fjulia(f) => match escape_classify_f(f.c, z, max_iter, F_ESCAPE_RADIUS).expect("radius fixed above 2 + |c|") {
                Escape::Escaped { step } => (PixelClass::Escaped, step),
                Escape::Bounded => (PixelClass::SideA, max_iter),
            },
            Scene::Petersen(q) => {
                let mut z = z;
                for n in 0..=max_iter {
                    if !z.is_finite() || z.norm() > Q_ESCAPE_RADIUS {
                        return (PixelClass::Escaped, n);
                    }
                    if z.norm() < 1.0 {
                        return (PixelClass::SideA, n);
                    }
                    if n < max_iter {
                        z = q.eval(z);
                    }
                }
                (PixelClass::Undecided, max_iter)
            }
            Scene::Mating(m) => {
                let (c, n) = classify_b(&m.map, &self.traps[0], z, max_iter);
                let c = match c {
                    BClass::EntersDisk => PixelClass::SideA,
                    BClass::EntersUInf => PixelClass::SideB,
                    BClass::Undecided => PixelClass::Undecided,
                };
                (c, n)
            }
            Scene::Fmating(f) => {
                let (c, n) = classify_f(&f, &self.traps[0], &self.traps[1], z, max_iter);
                let c = match c {
                    FClass::EntersDelta0 => PixelClass::SideA,
                    FClass::EntersDeltaInf => PixelClass::SideB,
                    FClass::Undecided => PixelClass::Undecided,
                };
                (c, n)
            }
            Scene::Chebyshev(g) => {
                let trap = &self.traps[0];
                let mut z = z;
                for n in 0..=max_iter {
                    if trap.contains(z) {
                        return (PixelClass::SideA, n);
                    }
                    if !z.is_finite() {
                        // ∞ ↦ 0, a repelling fixed point
                        return (PixelClass::Undecided, max_iter);
                    }
                    if n < max_iter {
                        z = g.eval(z);
                    }
                }
                (PixelClass::Undecided, max_iter)
            }
        }
    }
}

/// Rows are classified in parallel and assembled in order.
pub fn render(scene: Scene, viewport: Viewport, px: Pixels, max_iter: u32, eta: f64) -> Result<ImageGrid> {
    if px.w == 0 || px.h == 0 {
        return Err(Error::Domain("image must have positive size".into()));
    }
    if !(viewport.re1 > viewport.re0 && viewport.im1 > viewport.im0) {
        return Err(Error::Domain("empty viewport".into()));
    }
    let cls = Classifier::new(scene, eta)?;
    let rows: Vec<Vec<(PixelClass, u32)>> = (0..px.h)
        .into_par_iter()
        .map(|j| (0..px.w).map(|i| cls.classify(pixel_center(&viewport, px.w, px.h, i, j), max_iter)).collect())
        .collect();
    let (classes, iters) = rows.into_iter().flatten().unzip();
    Ok(ImageGrid { width: px.w, height: px.h, viewport, classes, iters, traps: cls.traps })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub samples: usize,
    /// Probes whose swapped class matches, undecided matching undecided.
    pub agree: usize,
    pub fraction: f64,
    /// Probes decided on at least one side, and how many of those agree.
    pub decided: usize,
    pub decided_agree: usize,
}

/// Probes drawn log-uniformly from the band 1/3 < |z| < 3.
fn symmetry_report(
    n: usize,
    seed: u64,
    classify: impl Fn(C) -> PixelClass + Sync,
    involution: impl Fn(C) -> C + Sync,
) -> SymmetryReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = 3f64.ln();
    let probes: Vec<C> = (0..n)
        .map(|_| {
            let r = rng.gen_range(-l..l).exp();
            C::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let rows: Vec<(bool, bool)> = probes
        .par_iter()
        .map(|&z| {
            let a = classify(z);
            let b = classify(involution(z));
            (a != PixelClass::Undecided || b != PixelClass::Undecided, a == b.swapped())
        })
        .collect();
    let agree = rows.iter().filter(|r| r.1).count();
    let decided = rows.iter().filter(|r| r.0).count();
    let decided_agree = rows.iter().filter(|r| r.0 && r.1).count();
    SymmetryReport { samples: n, agree, fraction: agree as f64 / n.max(1) as f64, decided, decided_agree }
}

/// Class of z against class of 1/z̄ with sides exchanged, for plain B with traps at 0 and ∞.
pub fn symmetry_check_b(map: &BlaschkeProduct, eta: f64, samples: usize, max_iter: u32, seed: u64) -> Result<SymmetryReport> {
    let t0 = make_trap(&TrapMap::Blaschke(*map), TrapCenter::Zero, eta)?;
    let ti = make_trap(&TrapMap::Blaschke(*map), TrapCenter::Infinity, eta)?;
    Ok(symmetry_report(samples, seed, |z| classify_b_two_traps(map, &t0, &ti, z, max_iter).0, |z| C::new(1.0, 0.0) / z.conj()))
}

/// Same check for a self-mating F_{θ,θ} under z ↦ 1/z.
pub fn symmetry_check_f(f: &QuadRational, eta: f64, samples: usize, max_iter: u32, seed: u64) -> Result<SymmetryReport> {
    let t0 = make_trap(&TrapMap::Rational(*f), TrapCenter::Zero, eta)?;
    let ti = make_trap(&TrapMap::Rational(*f), TrapCenter::Infinity, eta)?;
    Ok(symmetry_report(samples, seed, |z| classify_f_px(f, &t0, &ti, z, max_iter), |z| C::new(1.0, 0.0) / z))
}

fn classify_f_px(f: &QuadRational, t0: &TrapRegion, ti: &TrapRegion, z: C, max_iter: u32) -> PixelClass {
    match classify_f(f, t0, ti, z, max_iter).0 {
        FClass::EntersDelta0 => PixelClass::SideA,
        FClass::EntersDeltaInf => PixelClass::SideB,
        FClass::Undecided => PixelClass::Undecided,
    }
}

/// 64-bit FNV-1a, used for image regression hashes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3))
}

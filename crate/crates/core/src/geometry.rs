//! Small planar helpers: convex hulls, diameters, polyline distances, and a
//! JSON-friendly complex number.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<C> for Cx {
    fn from(z: C) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<Cx> for C {
    fn from(z: Cx) -> Self {
        C::new(z.re, z.im)
    }
}

fn cross(o: C, a: C, b: C) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Andrew's monotone chain, counter-clockwise, no repeated endpoint.
pub fn convex_hull(points: &[C]) -> Vec<C> {
    let mut p: Vec<C> = points.iter().copied().filter(|z| z.re.is_finite() && z.im.is_finite()).collect();
    p.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut hull: Vec<C> = Vec::with_capacity(2 * p.len());
    for &z in &p {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], z) <= 0.0 {
            hull.pop();
        }
        hull.push(z);
    }
    // the upper chain may not pop into the lower one
    let lower = hull.len() + 1;
    for &z in p.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], z) <= 0.0 {
            hull.pop();
        }
        hull.push(z);
    }
    hull.pop();
    hull
}

/// Largest pairwise distance, via the hull.
pub fn diameter(points: &[C]) -> f64 {
    let h = convex_hull(points);
    let mut best: f64 = 0.0;
    for i in 0..h.len() {
        for j in i + 1..h.len() {
            best = best.max((h[i] - h[j]).norm());
        }
    }
    best
}

pub fn point_segment_distance(p: C, a: C, b: C) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance from `p` to a closed polyline.
pub fn polyline_distance(p: C, poly: &[C]) -> f64 {
    let n = poly.len();
    if n == 0 {
        return f64::INFINITY;
    }
    if n == 1 {
        return (p - poly[0]).norm();
    }
    (0..n).map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n])).fold(f64::INFINITY, f64::min)
}

pub fn max_segment(poly: &[C]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| (poly[(i + 1) % n] - poly[i]).norm()).fold(0.0, f64::max)
}

/// Even-odd rule for a closed polygon.
pub fn point_in_polygon(p: C, poly: &[C]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.im > p.im) != (b.im > p.im) {
            let x = (b.re - a.re) * (p.im - a.im) / (b.im - a.im) + a.re;
            if p.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

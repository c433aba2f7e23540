//! Drops: the components of iterated preimages of 𝔻 attached to the unit
//! disk, their addresses, roots, boundaries and limb diameters.
//!
//! A drop of address ι₁…ι_k has depth n = Σιⱼ and is mapped by n iterates
//! onto 𝔻. Its boundary is the pullback of 𝕋 along the image chain
//! ι → σι → σ²ι → … → (1), seeded at the known roots of that chain.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blaschke_models::BlaschkeProduct;
use crate::error::{Error, Result};
use crate::geometry::{self, Cx};
use crate::poly;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DropAddress(pub Vec<u32>);

impl DropAddress {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn new(indices: &[u32]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::Domain("address indices must be positive".into()));
        }
        Ok(Self(indices.to_vec()))
    }

    pub fn depth(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn generation(&self) -> usize {
        self.0.len()
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(Self(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn child(&self, i: u32) -> Self {
        let mut v = self.0.clone();
        v.push(i);
        Self(v)
    }

    /// Address of the image drop: ι₁−1 when ι₁ > 1, otherwise drop the first index.
    pub fn shift(&self) -> Option<Self> {
        let first = *self.0.first()?;
        let mut v = self.0.clone();
        if first > 1 {
            v[0] -= 1;
        } else {
            v.remove(0);
        }
        Some(Self(v))
    }

    pub fn is_ancestor_of(&self, other: &Self) -> bool {
        other.0.len() > self.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl std::fmt::Display for DropAddress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        let s: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", s.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropSide {
    UnitDisk,
    Infinity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropNode {
    pub address: DropAddress,
    pub root: C,
    pub boundary: Vec<C>,
    pub parent: Option<DropAddress>,
    pub side: DropSide,
    pub diameter: f64,
    /// Largest ||B^n(p)| − 1| over boundary samples.
    pub forward_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropConfig {
    pub max_generation: usize,
    pub max_depth: u32,
    /// Samples at generation 1; halved per generation down to `min_resolution`.
    pub resolution: usize,
    pub min_resolution: usize,
    pub max_refinements: u32,
}

impl Default for DropConfig {
    fn default() -> Self {
        Self { max_generation: 3, max_depth: 8, resolution: 512, min_resolution: 64, max_refinements: 16 }
    }
}

impl DropConfig {
    pub fn resolution_for(&self, generation: usize) -> usize {
        let shift = generation.saturating_sub(1).min(30);
        (self.resolution >> shift).max(self.min_resolution)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DropTree {
    /// Model whose unit-disk family was constructed; for the infinity side this
    /// is the model with θ and ν exchanged.
    pub model: BlaschkeProduct,
    pub side: DropSide,
    pub config: DropConfig,
    /// x₁ … x_N on 𝕋 (unit-disk coordinates).
    pub circle_orbit: Vec<C>,
    pub nodes: BTreeMap<DropAddress, DropNode>,
}

/// x₁ = 1 and x_{j+1} the preimage of x_j on 𝕋.
pub fn circle_backward_orbit(map: &BlaschkeProduct, n: usize) -> Result<Vec<C>> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    out.push(C::new(1.0, 0.0));
    while out.len() < n {
        let x = *out.last().expect("non-empty");
        let roots = map.preimages(x)?;
        let (z, d) = roots
            .iter()
            .map(|&z| (z, (z.norm() - 1.0).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("three roots");
        if d > 1e-9 {
            return Err(Error::Numeric(format!("no preimage of x_{} on the circle (closest off by {d:e})", out.len())));
        }
        let z = poly::newton_polish(&map.preimage_poly(x), z, 3);
        out.push(z / z.norm());
    }
    Ok(out)
}

/// The three preimages of `w`, nearest to `guess` first.
fn preimages_sorted(map: &BlaschkeProduct, w: C, guess: C) -> Result<[C; 3]> {
    let p = map.preimage_poly(w);
    let fast = (|| {
        let mut z = guess;
        for _ in 0..40 {
            let (f, df) = poly::horner(&p, z);
            if df.norm() == 0.0 {
                return None;
            }
            let dz = f / df;
            z -= dz;
            if dz.norm() <= 1e-15 * z.norm().max(1.0) {
                break;
            }
        }
        if poly::horner(&p, z).0.norm() > 1e-12 * p.iter().map(|c| c.norm()).fold(0.0, f64::max) {
            return None;
        }
        // deflate to a quadratic
        let (a3, a2, a1) = (p[3], p[2], p[1]);
        let b2 = a3;
        let b1 = a2 + z * b2;
        let b0 = a1 + z * b1;
        let [q1, q2] = poly::quadratic(b2, b1, b0);
        let roots = [z, poly::newton_polish(&p, q1, 2), poly::newton_polish(&p, q2, 2)];
        roots.iter().all(|r| r.re.is_finite() && r.im.is_finite()).then_some(roots)
    })();
    let mut roots = match fast {
        Some(r) => r,
        None => {
            let r = poly::roots(&p)?;
            if r.len() != 3 {
                return Err(Error::Degenerate("cubic lost a root".into()));
            }
            [r[0], r[1], r[2]]
        }
    };
    roots.sort_by(|a, b| (a - guess).norm().total_cmp(&(b - guess).norm()));
    Ok(roots)
}

/// Preimage of w ∈ 𝕋 lying outside 𝔻̄: a point of ∂U₁.
fn outer_preimage(map: &BlaschkeProduct, w: C) -> Result<C> {
    let r = map.preimages(w)?;
    let z = r.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("three roots");
    Ok(poly::newton_polish(&map.preimage_poly(w), z, 2))
}

/// A chain of points P₁ … P_n with P₁ ∈ ∂U₁ and B(P_{j+1}) = P_j.
struct Chain(Vec<C>);

/// Pulls the level-one point at φ down the chain, choosing at each level the
/// preimage nearest the reference chain. `None` when a choice is unclear.
fn step_chain(map: &BlaschkeProduct, cv: C, phi: f64, reference: &Chain) -> Result<Option<Chain>> {
    let w = cv * C::from_polar(1.0, 2.0 * PI * phi);
    let mut pts = Vec::with_capacity(reference.0.len());
    pts.push(outer_preimage(map, w)?);
    for j in 1..reference.0.len() {
        let r = reference.0[j];
        let cand = preimages_sorted(map, pts[j - 1], r)?;
        let (d1, d2) = ((cand[0] - r).norm(), (cand[1] - r).norm());
        if d1 > 0.3 * d2 {
            return Ok(None);
        }
        pts.push(cand[0]);
    }
    Ok(Some(Chain(pts)))
}

fn smooth(s: f64) -> f64 {
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Boundary of the drop whose image chain has roots `seeds` (level 1 first).
fn pullback_boundary(map: &BlaschkeProduct, seeds: &[C], samples: usize, max_ref: u32) -> Result<Vec<C>> {
    let cv = map.critical_value();
    let n = seeds.len();
    let mut out = vec![seeds[n - 1]];
    let mut chain = Chain(seeds.to_vec());
    let mut phi_prev = 0.0;
    for i in 1..samples {
        let target = smooth(i as f64 / samples as f64);
        let mut stack = vec![(target, 0u32)];
        while let Some(&(phi, level)) = stack.last() {
            match step_chain(map, cv, phi, &chain)? {
                Some(next) => {
                    chain = next;
                    phi_prev = phi;
                    out.push(chain.0[n - 1]);
                    stack.pop();
                }
                None if level < max_ref => {
                    stack.push((0.5 * (phi_prev + phi), level + 1));
                }
                None => {
                    return Err(Error::Tracking {
                        parameter: phi,
                        message: format!("continuity lost after {max_ref} refinements"),
                    })
                }
            }
        }
    }
    Ok(out)
}

/// Forward residual max ||B^n(p)| − 1| over the samples.
fn forward_residual(map: &BlaschkeProduct, pts: &[C], n: u32) -> f64 {
    pts.iter()
        .map(|&p| {
            let mut z = p;
            for _ in 0..n {
                z = map.eval(z);
            }
            (z.norm() - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

impl DropTree {
    pub fn node(&self, a: &DropAddress) -> Option<&DropNode> {
        self.nodes.get(a)
    }

    /// Root in unit-disk coordinates, including x₁ = 1 for address (1).
    fn model_root(&self, a: &DropAddress) -> Option<C> {
        self.nodes.get(a).map(|n| self.to_model(n.root))
    }

    fn to_model(&self, z: C) -> C {
        match self.side {
            DropSide::UnitDisk => z,
            DropSide::Infinity => reflect(z),
        }
    }

    /// Seeds of the image chain, level 1 first.
    fn chain_seeds(&self, a: &DropAddress) -> Result<Vec<C>> {
        let mut seeds = Vec::with_capacity(a.depth() as usize);
        let mut cur = a.clone();
        while cur.generation() > 0 {
            let r = self.model_root(&cur).ok_or_else(|| Error::Domain(format!("image drop {cur} not constructed")))?;
            seeds.push(r);
            cur = cur.shift().expect("non-empty");
        }
        seeds.reverse();
        Ok(seeds)
    }

    pub fn by_depth(&self, d: u32) -> impl Iterator<Item = &DropNode> {
        self.nodes.values().filter(move |n| n.address.depth() == d)
    }

    pub fn to_json(&self) -> TreeJson {
        TreeJson {
            side: self.side,
            config: self.config.clone(),
            nodes: self
                .nodes
                .values()
                .map(|n| NodeJson {
                    address: n.address.0.clone(),
                    depth: n.address.depth(),
                    generation: n.address.generation(),
                    root: n.root.into(),
                    diameter: n.diameter,
                    forward_residual: n.forward_residual,
                })
                .collect(),
            limb_profile: limb_diameter_profile(self),
        }
    }

    /// CSV rows `address,index,re,im`.
    pub fn boundaries_csv(&self) -> String {
        let mut s = String::from("address,index,re,im\n");
        for n in self.nodes.values() {
            let a: Vec<String> = n.address.0.iter().map(u32::to_string).collect();
            for (i, z) in n.boundary.iter().enumerate() {
                s.push_str(&format!("{},{},{:.17e},{:.17e}\n", a.join("-"), i, z.re, z.im));
            }
        }
        s
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeJson {
    pub address: Vec<u32>,
    pub depth: u32,
    pub generation: usize,
    pub root: Cx,
    pub diameter: f64,
    pub forward_residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeJson {
    pub side: DropSide,
    pub config: DropConfig,
    pub nodes: Vec<NodeJson>,
    pub limb_profile: BTreeMap<u32, f64>,
}

fn reflect(z: C) -> C {
    C::new(1.0, 0.0) / z.conj()
}

/// The cubic root of B(z) = x_{σι} on the boundary of the parent drop.
pub fn child_root(tree: &DropTree, parent: &DropAddress, child_index: u32) -> Result<C> {
    if child_index == 0 {
        return Err(Error::Domain("child index must be positive".into()));
    }
    let child = parent.child(child_index);
    if parent.generation() == 0 {
        let n = child_index as usize;
        if tree.circle_orbit.len() < n {
            return Err(Error::Range { index: n, available: tree.circle_orbit.len() });
        }
        return Ok(tree.to_model(tree.circle_orbit[n - 1]));
    }
    let map = &tree.model;
    let pnode = tree.nodes.get(parent).ok_or_else(|| Error::Domain(format!("parent {parent} not constructed")))?;
    let image = child.shift().expect("non-empty");
    let target = tree.model_root(&image).ok_or_else(|| Error::Domain(format!("image drop {image} not constructed")))?;
    let boundary: Vec<C> = pnode.boundary.iter().map(|&z| tree.to_model(z)).collect();
    let tol = geometry::max_segment(&boundary) + 1e-9;
    let cands = map.preimages(target)?;
    let near: Vec<(C, f64)> = cands
        .iter()
        .map(|&z| (z, geometry::polyline_distance(z, &boundary)))
        .filter(|&(_, d)| d <= tol)
        .collect();
    match near.len() {
        1 => {
            let z = poly::newton_polish(&map.preimage_poly(target), near[0].0, 3);
            Ok(tree.to_model(z))
        }
        0 => Err(Error::Numeric(format!("no preimage of the root of {image} on the boundary of {parent}"))),
        _ => Err(Error::Ambiguity(format!(
            "{} preimages within {tol:e} of the boundary of {parent}: {near:?}",
            near.len()
        ))),
    }
}

/// Pullback of 𝕋 to the boundary of the drop at `address`.
pub fn drop_boundary(tree: &DropTree, address: &DropAddress, resolution: usize) -> Result<Vec<C>> {
    if address.generation() == 0 {
        return Ok((0..resolution).map(|i| C::from_polar(1.0, 2.0 * PI * i as f64 / resolution as f64)).collect());
    }
    let seeds = tree.chain_seeds(address)?;
    let b = pullback_boundary(&tree.model, &seeds, resolution.max(8), tree.config.max_refinements)?;
    Ok(b.into_iter().map(|z| tree.to_model(z)).collect())
}

/// Breadth-first construction by depth; siblings at one depth are built in parallel.
///
/// For [`DropSide::Infinity`], `model` must be the model with θ and ν
/// exchanged; its unit-disk family is reflected through z ↦ 1/z̄.
pub fn build_drop_tree(model: &BlaschkeProduct, side: DropSide, config: &DropConfig) -> Result<DropTree> {
    let orbit = circle_backward_orbit(model, config.max_depth as usize)?;
    let mut tree = DropTree { model: *model, side, config: config.clone(), circle_orbit: orbit, nodes: BTreeMap::new() };
    for d in 1..=config.max_depth {
        let addrs = compositions(d, config.max_generation);
        let built: Vec<DropNode> = addrs.par_iter().map(|a| build_node(&tree, a)).collect::<Result<_>>()?;
        for n in built {
            tree.nodes.insert(n.address.clone(), n);
        }
    }
    Ok(tree)
}

fn build_node(tree: &DropTree, a: &DropAddress) -> Result<DropNode> {
    let parent = a.parent().expect("non-root");
    let root = child_root(tree, &parent, *a.0.last().expect("non-root"))?;
    // the node itself is not in the tree yet, so seed from its image chain plus the new root
    let mut seeds = tree.chain_seeds(&a.shift().expect("non-root"))?;
    seeds.push(tree.to_model(root));
    let res = tree.config.resolution_for(a.generation());
    let model_boundary = pullback_boundary(&tree.model, &seeds, res, tree.config.max_refinements)?;
    let residual = forward_residual(&tree.model, &model_boundary, a.depth());
    let boundary: Vec<C> = model_boundary.into_iter().map(|z| tree.to_model(z)).collect();
    Ok(DropNode {
        address: a.clone(),
        root,
        diameter: geometry::diameter(&boundary),
        boundary,
        parent: Some(parent),
        side: tree.side,
        forward_residual: residual,
    })
}

/// All addresses of depth `d` with at most `max_gen` indices, in lexicographic order.
pub fn compositions(d: u32, max_gen: usize) -> Vec<DropAddress> {
    fn rec(rest: u32, max_gen: usize, cur: &mut Vec<u32>, out: &mut Vec<DropAddress>) {
        if rest == 0 {
            out.push(DropAddress(cur.clone()));
            return;
        }
        if cur.len() == max_gen {
            return;
        }
        for i in 1..=rest {
            cur.push(i);
            rec(rest - i, max_gen, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if d > 0 {
        rec(d, max_gen, &mut Vec::new(), &mut out);
    }
    out
}

/// Depth → largest diameter of a node together with its constructed descendants.
///
/// Descendants beyond the tree's depth are missing, so each entry is a lower
/// bound on the true limb diameter.
pub fn limb_diameter_profile(tree: &DropTree) -> BTreeMap<u32, f64> {
    let mut hulls: BTreeMap<DropAddress, Vec<C>> = BTreeMap::new();
    let mut order: Vec<&DropNode> = tree.nodes.values().collect();
    order.sort_by_key(|n| std::cmp::Reverse(n.address.generation()));
    let mut limb: BTreeMap<&DropAddress, f64> = BTreeMap::new();
    for n in order {
        let mut pts = geometry::convex_hull(&n.boundary);
        for i in 1..=tree.config.max_depth {
            if let Some(h) = hulls.get(&n.address.child(i)) {
                pts.extend_from_slice(h);
            }
        }
        let h = geometry::convex_hull(&pts);
        limb.insert(&n.address, geometry::diameter(&h));
        hulls.insert(n.address.clone(), h);
    }
    let mut profile = BTreeMap::new();
    for (a, d) in limb {
        let e = profile.entry(a.depth()).or_insert(0.0f64);
        *e = e.max(d);
    }
    profile
}

/// Limb diameter of one node (node plus stored descendants).
pub fn limb_diameter(tree: &DropTree, a: &DropAddress) -> Option<f64> {
    let node = tree.nodes.get(a)?;
    let mut pts = node.boundary.clone();
    for (b, n) in tree.nodes.range(a..) {
        if a.is_ancestor_of(b) {
            pts.extend_from_slice(&n.boundary);
        }
    }
    Some(geometry::diameter(&pts))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLanding {
    pub estimate: C,
    pub radius: f64,
}

/// Root of the deepest node of a nested chain, with its diameter as error radius.
pub fn drop_chain_landing(tree: &DropTree, chain: &[DropAddress]) -> Result<ChainLanding> {
    let last = chain.last().ok_or_else(|| Error::Domain("empty chain".into()))?;
    for w in chain.windows(2) {
        if w[1].parent().as_ref() != Some(&w[0]) {
            return Err(Error::Domain(format!("{} is not the parent of {}", w[0], w[1])));
        }
    }
    for a in chain {
        if a.generation() > 0 && !tree.nodes.contains_key(a) {
            return Err(Error::Range { index: a.depth() as usize, available: tree.config.max_depth as usize });
        }
    }
    if last.generation() == 0 {
        return Ok(ChainLanding { estimate: C::new(0.0, 0.0), radius: 1.0 });
    }
    let n = &tree.nodes[last];
    Ok(ChainLanding { estimate: n.root, radius: n.diameter })
}

/// Angle in degrees between the two boundary arcs leaving the root.
pub fn root_angle(tree: &DropTree, a: &DropAddress, eps: f64) -> Result<f64> {
    let seeds = tree.chain_seeds(a)?;
    let map = &tree.model;
    let cv = map.critical_value();
    let root = *seeds.last().expect("non-empty");
    let first = step_chain(map, cv, eps, &Chain(seeds.clone()))?
        .ok_or_else(|| Error::Tracking { parameter: eps, message: "unclear branch next to the root".into() })?;
    let last = step_chain(map, cv, 1.0 - eps, &Chain(seeds))?
        .ok_or_else(|| Error::Tracking { parameter: 1.0 - eps, message: "unclear branch next to the root".into() })?;
    let u = first.0.last().expect("non-empty") - root;
    let v = last.0.last().expect("non-empty") - root;
    Ok((u.conj() * v).arg().abs().to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke_models::PetersenModel;

    const T_GOLDEN: f64 = 0.613_648_638_881_283_4;

    fn small_tree() -> DropTree {
        let q = PetersenModel::new(T_GOLDEN);
        let cfg = DropConfig { max_generation: 3, max_depth: 5, resolution: 256, ..Default::default() };
        build_drop_tree(&q.map, DropSide::UnitDisk, &cfg).unwrap()
    }

    #[test]
    fn address_arithmetic() {
        let a = DropAddress::new(&[3, 1, 2]).unwrap();
        assert_eq!(a.depth(), 6);
        assert_eq!(a.generation(), 3);
        assert_eq!(a.shift().unwrap().0, vec![2, 1, 2]);
        assert_eq!(DropAddress::new(&[1, 4]).unwrap().shift().unwrap().0, vec![4]);
        assert_eq!(a.parent().unwrap().0, vec![3, 1]);
        assert!(DropAddress::new(&[0]).is_err());
    }

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(5, 5).len(), 16);
        for d in 2..8 {
            let g2 = compositions(d, 2).into_iter().filter(|a| a.generation() == 2).count();
            assert_eq!(g2 as u32, d - 1);
        }
    }

    #[test]
    fn circle_orbit_consistency() {
        let q = PetersenModel::new(T_GOLDEN);
        let x = circle_backward_orbit(&q.map, 30).unwrap();
        assert_eq!(x[0], C::new(1.0, 0.0));
        for j in 0..29 {
            assert!((q.eval(x[j + 1]) - x[j]).norm() < 1e-10);
        }
    }

    #[test]
    fn tree_roots_follow_dynamics() {
        let t = small_tree();
        for n in t.nodes.values() {
            let img = n.address.shift().unwrap();
            let want = if img.generation() == 0 { None } else { Some(t.nodes[&img].root) };
            if let Some(w) = want {
                assert!((t.model.eval(n.root) - w).norm() < 1e-8, "{}", n.address);
            }
            assert!(n.forward_residual < 1e-6, "{} residual {}", n.address, n.forward_residual);
        }
    }

    #[test]
    fn u1_is_attached_at_one_with_sixty_degrees() {
        let t = small_tree();
        let u1 = &t.nodes[&DropAddress(vec![1])];
        assert_eq!(u1.root, C::new(1.0, 0.0));
        assert!(u1.boundary.iter().all(|z| z.norm() >= 1.0 - 1e-12));
        let ang = root_angle(&t, &u1.address, 1e-9).unwrap();
        assert!((ang - 60.0).abs() < 5.0, "{ang}");
    }

    #[test]
    fn node_inside_its_limb() {
        let t = small_tree();
        for a in t.nodes.keys() {
            let l = limb_diameter(&t, a).unwrap();
            assert!(t.nodes[a].diameter <= l + 1e-15);
        }
        let prof = limb_diameter_profile(&t);
        assert_eq!(prof.len(), 5);
    }

    #[test]
    fn short_chain_is_its_own_root() {
        let t = small_tree();
        let c = drop_chain_landing(&t, &[DropAddress(vec![2])]).unwrap();
        assert_eq!(c.estimate, t.nodes[&DropAddress(vec![2])].root);
        assert!(drop_chain_landing(&t, &[DropAddress(vec![9])]).is_err());
    }
}

use num_bigint::BigUint;
use num_complex::Complex64 as C;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

use siegel_core::blaschke_models::{build_b, critical_structure_check, solve_ab, PetersenModel};
use siegel_core::cf_arith::{dyadic_preimages, omega_of_theta, staircase_rho, sturmian_point, BigAngle, ContinuedFraction};
use siegel_core::circle_dyn::{rotation_number, CircleLift};
use siegel_core::drops::{build_drop_tree, DropConfig, DropSide};
use siegel_core::geometry::{convex_hull, diameter};
use siegel_core::poly;
use siegel_core::rational_maps::{f_normal, f_theta};
use siegel_core::rays_combinatorics::{trace_ray, RayConfig};
use siegel_core::render::{make_trap, Classifier, PixelClass, RenderKind, Scene, TrapCenter, TrapMap, DEFAULT_ETA};

const T_PETERSEN: f64 = 0.613_648_638_881_283_4;
const T_MATING: f64 = 0.707_913_085_363_418_3;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn e(x: f64) -> C {
    C::from_polar(1.0, std::f64::consts::TAU * x)
}

fn cf_strategy() -> impl Strategy<Value = ContinuedFraction> {
    prop::collection::vec(1u64..8, 30..50).prop_map(|v| ContinuedFraction::new(v).unwrap())
}

fn exact(a: &BigAngle) -> BigRational {
    a.to_rational()
}

fn rat_dist(x: &BigRational, y: &BigRational) -> f64 {
    // circular distance on ℝ/ℤ
    let d = (x - y).to_f64().unwrap().rem_euclid(1.0);
    d.min(1.0 - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convergent_determinant(cf in cf_strategy()) {
        let conv = cf.convergents();
        for n in 3..conv.len() {
            let (p1, q1) = &conv[n];
            let (p0, q0) = &conv[n - 1];
            let lhs = num_bigint::BigInt::from(p1 * q0) - num_bigint::BigInt::from(p0 * q1);
            let prev = num_bigint::BigInt::from(&conv[n - 1].0 * &conv[n - 2].1) - num_bigint::BigInt::from(&conv[n - 2].0 * &conv[n - 1].1);
            // ±1 with alternating sign
            prop_assert_eq!(lhs.magnitude(), &BigUint::from(1u8));
            prop_assert_eq!(&lhs + &prev, num_bigint::BigInt::from(0));
        }
        let x = cf.to_f64();
        prop_assert!(x > 0.0 && x < 1.0);
    }

    #[test]
    fn angle_arithmetic_tracks_exact_values(p in 0u64..1000, q in 1001u64..5000, r in 0u64..1000, k in 0u32..40) {
        let bits = 128;
        let a = BigAngle::from_ratio(p, q, bits).unwrap();
        let b = BigAngle::from_ratio(r, q, bits).unwrap();
        let qa = BigRational::new(p.into(), q.into());
        let qb = BigRational::new(r.into(), q.into());
        for (got, want) in [
            (a.add(&b), &qa + &qb),
            (a.sub(&b), &qa - &qb),
            (a.double_n(k), &qa * BigRational::from_integer(num_bigint::BigInt::from(1u64 << k))),
        ] {
            prop_assert!(got.to_f64() >= 0.0 && got.to_f64() < 1.0);
            prop_assert!(rat_dist(&exact(&got), &want) <= got.err() + 1e-300);
        }
    }

    #[test]
    fn dyadic_preimages_are_distinct_and_double_back(p in 0u64..97, k in 0u32..7) {
        let t = BigAngle::from_ratio(p, 97, 200).unwrap();
        let pre = dyadic_preimages(&t, k);
        prop_assert_eq!(pre.len(), 1usize << k);
        for w in pre.windows(2) {
            prop_assert!(w[0].to_f64() < w[1].to_f64());
        }
        for u in &pre {
            prop_assert!(rat_dist(&exact(&u.double_n(k)), &exact(&t)) <= u.double_n(k).err() + t.err() + 1e-300);
        }
    }

    #[test]
    fn omega_matches_floor_sum(cf in cf_strategy()) {
        let th = cf.to_f64();
        // #{p : 0 < p/q < θ} = ⌊qθ⌋ for each q ≤ 20, by direct count
        for q in 1..=20u64 {
            let count = (1..q).filter(|&p| (p as f64) < th * q as f64).count() as f64;
            prop_assert_eq!(count, (q as f64 * th).floor());
        }
        let floor_sum: f64 = (1..=60).map(|q: i32| (q as f64 * th).floor() * 2f64.powi(-q)).sum();
        let w = omega_of_theta(&cf, 128).unwrap();
        prop_assert!((w.to_f64() - floor_sum).abs() < 1e-15);
    }

    #[test]
    fn omega_complement_sums_to_one(cf in cf_strategy()) {
        let a = omega_of_theta(&cf, 256).unwrap();
        let b = omega_of_theta(&cf.complement().unwrap(), 256).unwrap();
        let s = a.add(&b);
        prop_assert!(s.dist_to_int_exact() <= BigRational::from_float(s.err()).unwrap());
    }

    #[test]
    fn sturmian_zero_is_half_omega(cf in cf_strategy()) {
        let w = omega_of_theta(&cf, 256).unwrap();
        let s = sturmian_point(&cf, &BigAngle::zero(256), 256).unwrap();
        let h = w.halves().0;
        prop_assert!(s.sub(&h).dist_to_int() <= s.err() + h.err());
    }

    #[test]
    fn staircase_is_monotone(a in cf_strategy(), b in cf_strategy()) {
        let n = 400;
        let (w1, w2) = (omega_of_theta(&a, 512).unwrap(), omega_of_theta(&b, 512).unwrap());
        let (lo, hi) = if w1.to_f64() <= w2.to_f64() { (w1, w2) } else { (w2, w1) };
        prop_assert!(staircase_rho(&lo, n).unwrap() <= staircase_rho(&hi, n).unwrap() + 2.0 / n as f64);
    }

    #[test]
    fn hull_diameter_matches_all_pairs(pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..60)) {
        let pts: Vec<C> = pts.into_iter().map(|(x, y)| C::new(x, y)).collect();
        let brute = pts.iter().flat_map(|a| pts.iter().map(move |b| (a - b).norm())).fold(0.0, f64::max);
        prop_assert!((diameter(&pts) - brute).abs() < 1e-12);
        let hull = convex_hull(&pts);
        for p in &pts {
            // every point is on the inner side of every hull edge
            for i in 0..hull.len() {
                let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
                let cross = (b - a).re * (p - a).im - (b - a).im * (p - a).re;
                prop_assert!(cross >= -1e-9);
            }
        }
    }

    #[test]
    fn ab_identities(t in -3.0f64..3.0) {
        prop_assume!((t - t.round()).abs() > 1e-6);
        let (a, b) = solve_ab(t);
        let kappa = e(t);
        prop_assert!((a * b - kappa).norm() < 1e-12);
        prop_assert!((a + b - (3.0 - kappa.conj())).norm() < 1e-12);
        prop_assert!(a.norm() <= 1.0 && (a.norm() * b.norm() - 1.0).abs() < 1e-12);
        prop_assert!((a * b.conj() - 1.0).norm() > 1e-6);
        let (a1, _) = solve_ab(t + 1.0);
        prop_assert!((a1 - a).norm() < 1e-9);
    }

    #[test]
    fn blaschke_commutes_with_reflection(t in 0.01f64..0.99, nu in 0.0f64..1.0, r in 0.05f64..20.0, phi in 0.0f64..1.0) {
        let m = build_b(t, nu).unwrap();
        let z = r * e(phi);
        let lhs = m.eval(1.0 / z.conj()) * m.eval(z).conj();
        prop_assert!((lhs - 1.0).norm() < 1e-9);
        let res = critical_structure_check(&m);
        prop_assert!(res.first < 1e-8 && res.second < 1e-8);
    }

    #[test]
    fn blaschke_fixed_points_are_reflection_invariant(t in 0.01f64..0.99, nu in 0.05f64..0.95) {
        let m = build_b(t, nu).unwrap();
        let p = m.map.fixed_point_poly();
        let roots = poly::roots(&p[1..]).unwrap();
        for r in &roots {
            let mirror = 1.0 / r.conj();
            // z = 0 pairs with ∞, which the cleared polynomial drops
            let matched = roots.iter().any(|s| (s - mirror).norm() < 1e-10 * (1.0 + mirror.norm()));
            prop_assert!(matched, "{r} has no mirror in {roots:?}");
        }
    }

    #[test]
    fn normal_form_index_theorem(th in 0.0f64..1.0, nu in 0.0f64..1.0) {
        prop_assume!((th + nu - 1.0).abs() > 1e-2);
        let f = f_normal(th, nu).unwrap();
        let m3 = f.deriv(C::new(1.0, 0.0));
        // Σ 1/(1−μ) = 1 with μ₁, μ₂ on the circle forces Re 1/(1−μ₃) = 0, i.e. Re μ₃ = 1
        prop_assert!((m3.re - 1.0).abs() < 1e-9);
        prop_assert!((f.sigma[2] - f.sigma[0] + 2.0).norm() < 1e-9);
    }

    #[test]
    fn siegel_fixed_point(th in 0.0f64..1.0) {
        let f = f_theta(th);
        prop_assert!((f.eval(f.alpha) - f.alpha).norm() < 1e-12);
        prop_assert!((f.deriv(f.alpha) - e(th)).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn circle_lift_is_degree_one_and_monotone(x in 0.0f64..1.0) {
        let q = PetersenModel::new(T_PETERSEN);
        let b = build_b(T_MATING, GOLDEN).unwrap();
        for lift in [&q.map as &dyn CircleLift, &b.map] {
            prop_assert!((lift.lift(x + 1.0) - lift.lift(x) - 1.0).abs() < 1e-12);
            let grid: Vec<f64> = (0..=64).map(|i| lift.lift(x + i as f64 / 64.0)).collect();
            prop_assert!(grid.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn rotation_number_ignores_seed(seed in 0.0f64..1.0) {
        let q = PetersenModel::new(T_PETERSEN);
        let a = rotation_number(&q.map, 20_000, 0.0).unwrap();
        let b = rotation_number(&q.map, 20_000, seed).unwrap();
        prop_assert!((a.displacement - b.displacement).abs() <= a.error_bar + b.error_bar);
    }

    #[test]
    fn ray_doubling_covariance(p in 1u64..63, k in 0u32..3) {
        // angles p/63 and p/(63·2^k) are (pre)periodic and land at repelling points
        let q = 63u64 << k;
        let f = f_theta(GOLDEN);
        let cfg = RayConfig::default();
        let t = BigAngle::from_ratio(p, q, 512).unwrap();
        let r1 = trace_ray(&f, &t, &cfg).unwrap();
        let r2 = trace_ray(&f, &t.double(), &cfg).unwrap();
        prop_assume!(r1.landed && r2.landed);
        let gap = (f.eval(r1.landing_point()) - r2.landing_point()).norm();
        prop_assert!(gap <= 2.0 * cfg.eps_land * (1.0 + f.deriv(r1.landing_point()).norm()), "gap {gap}");
    }

    #[test]
    fn ray_conjugate_symmetry(p in 1u64..31) {
        let cfg = RayConfig::default();
        let t = BigAngle::from_ratio(p, 31, 512).unwrap();
        let a = trace_ray(&f_theta(GOLDEN), &t, &cfg).unwrap();
        let b = trace_ray(&f_theta(1.0 - GOLDEN), &t.neg(), &cfg).unwrap();
        prop_assert!((a.landing_point().conj() - b.landing_point()).norm() < 1e-9);
    }

    #[test]
    fn classification_is_monotone_in_iterations(x in -4.0f64..4.5, y in -4.25f64..4.25) {
        let g = ContinuedFraction::golden();
        let scene = Scene::build(RenderKind::Mating, &g, Some(&g), &fast_solve()).unwrap();
        let cls = Classifier::new(scene, DEFAULT_ETA).unwrap();
        let z = C::new(x, y);
        let (short, _) = cls.classify(z, 300);
        let (long, _) = cls.classify(z, 3000);
        if short != PixelClass::Undecided {
            prop_assert_eq!(short, long);
        }
    }
}

fn fast_solve() -> siegel_core::blaschke_models::SolveConfig {
    siegel_core::blaschke_models::SolveConfig { scan_samples: 64, probe_iters: 20_000, confirm_iters: 20_000, ..Default::default() }
}

#[test]
fn validated_traps_record_their_drift() {
    let b = build_b(T_MATING, GOLDEN).unwrap();
    let f = f_normal(GOLDEN, GOLDEN).unwrap();
    for map in [TrapMap::Blaschke(b.map), TrapMap::Rational(f)] {
        for center in [TrapCenter::Zero, TrapCenter::Infinity] {
            let t = make_trap(&map, center, DEFAULT_ETA).unwrap();
            assert!(t.validated && t.max_drift <= 1.05 && t.probes == 256 && t.iterates == 200, "{t:?}");
        }
    }
}

#[test]
fn drop_boundaries_touch_only_at_roots_and_limbs_nest() {
    let q = PetersenModel::new(T_PETERSEN);
    let cfg = DropConfig { max_generation: 2, max_depth: 5, resolution: 256, ..Default::default() };
    let tree = build_drop_tree(&q.map, DropSide::UnitDisk, &cfg).unwrap();
    let nodes: Vec<_> = tree.nodes.values().collect();
    let bbox = |pts: &[C]| {
        pts.iter().fold((f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY), |(a, b, c, d), z| {
            (a.min(z.re), b.min(z.im), c.max(z.re), d.max(z.im))
        })
    };
    let limb_points = |a: &siegel_core::drops::DropAddress| -> Vec<C> {
        tree.nodes.values().filter(|n| a.is_ancestor_of(&n.address) || n.address == *a).flat_map(|n| n.boundary.clone()).collect()
    };
    for (i, u) in nodes.iter().enumerate() {
        for v in &nodes[i + 1..] {
            let tol = 1e-6;
            let close = u.boundary.iter().filter(|z| v.boundary.iter().any(|w| (*z - w).norm() < tol)).count();
            assert!(close <= 1, "{} and {} share {close} samples", u.address, v.address);
            // limbs of siblings-or-cousins never contain one another's roots unless nested
            if !u.address.is_ancestor_of(&v.address) && !v.address.is_ancestor_of(&u.address) {
                let (a, b) = (bbox(&limb_points(&u.address)), bbox(&limb_points(&v.address)));
                let overlap_x = (a.2.min(b.2) - a.0.max(b.0)).max(0.0);
                let overlap_y = (a.3.min(b.3) - a.1.max(b.1)).max(0.0);
                let area = overlap_x * overlap_y;
                let smaller = ((a.2 - a.0) * (a.3 - a.1)).min((b.2 - b.0) * (b.3 - b.1));
                assert!(area <= 0.5 * smaller + 1e-9, "limbs {} and {} overlap", u.address, v.address);
            }
        }
    }
}

#[test]
fn infinity_tree_mirrors_swapped_unit_disk_tree() {
    // golden/golden is its own swap, so both families come from one model
    let m = build_b(T_MATING, GOLDEN).unwrap();
    let cfg = DropConfig { max_generation: 2, max_depth: 4, resolution: 128, ..Default::default() };
    let inner = build_drop_tree(&m.map, DropSide::UnitDisk, &cfg).unwrap();
    let outer = build_drop_tree(&m.map, DropSide::Infinity, &cfg).unwrap();
    assert_eq!(inner.nodes.len(), outer.nodes.len());
    for (a, n) in &inner.nodes {
        let r = outer.nodes[a].root;
        assert!((r - 1.0 / n.root.conj()).norm() < 1e-6, "{a}");
    }
}

#[test]
fn zero_rational_is_exact() {
    assert!(BigAngle::zero(64).to_rational().is_zero());
    assert_eq!(BigAngle::from_ratio(1, 2, 64).unwrap().mantissa(), &(BigUint::from(1u8) << 63u32));
}

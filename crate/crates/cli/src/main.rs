mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C;
use serde_json::{json, Value};

use siegel_core::blaschke_models::{
    build_b, critical_structure_check, petersen_structure_check, solve_t, Family, PetersenModel, SolveConfig,
    SolveReport,
};
use siegel_core::cf_arith::{check_relation, omega_of_theta, staircase_rho, sturmian_point, BigAngle, ContinuedFraction};
use siegel_core::drops::{build_drop_tree, drop_chain_landing, limb_diameter_profile, DropAddress, DropConfig, DropSide, DropTree};
use siegel_core::geometry::Cx;
use siegel_core::rational_maps::{f_theta, fixed_points_beta};
use siegel_core::rays_combinatorics::{pinch_csv, pinch_pairs, trace_rays, RayConfig, ANGLE_BITS};
use siegel_core::render::{render, Overlay, PixelClass, Pixels, RenderConfig, RenderKind, Scene, Viewport};

use output::{sidecar, Run};

#[derive(Parser)]
#[command(name = "siegel", version, about = "Siegel matings at desk scale: models, angles, drops, rays and pictures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tune t so the model has rotation number θ on the circle.
    Solve(SolveArgs),
    /// ω(θ) to a given precision.
    Omega(OmegaArgs),
    /// Sturmian point and staircase estimate of the rotation set.
    Rotset(RotsetArgs),
    /// Scan dist(2ⁿω(θ) + 2ᵐω(ν), ℤ).
    Relation(RelationArgs),
    /// Build a drop tree.
    Drops(DropsArgs),
    /// Trace external rays of f_θ.
    Rays(RaysArgs),
    /// θ-side landing points identified through ν-side precritical pairs.
    Pinch(PinchArgs),
    /// Render an orbit-classification image.
    Render(RenderArgs),
    /// Solve, ω, relation and limb profile in one bundle.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct ThetaArgs {
    /// cf:a1,a2,… or cf:KxN (exact), or a decimal.
    #[arg(long)]
    theta: Option<String>,
    /// Decimal θ, truncated to a continued fraction.
    #[arg(long)]
    theta_decimal: Option<f64>,
}

#[derive(Args, Clone)]
#[group(required = false, multiple = false)]
struct NuArgs {
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    nu_decimal: Option<f64>,
}

#[derive(Args, Clone)]
struct SolveFlags {
    #[arg(long, default_value_t = SolveConfig::default().scan_samples)]
    scan_samples: usize,
    #[arg(long, default_value_t = SolveConfig::default().probe_iters)]
    probe_iters: usize,
    #[arg(long, default_value_t = SolveConfig::default().confirm_iters)]
    confirm_iters: usize,
    #[arg(long, default_value_t = SolveConfig::default().cf_depth)]
    cf_depth: usize,
}

impl SolveFlags {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            scan_samples: self.scan_samples,
            probe_iters: self.probe_iters,
            confirm_iters: self.confirm_iters,
            cf_depth: self.cf_depth,
            ..SolveConfig::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Petersen,
    Mating,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    UnitDisk,
    Infinity,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Fjulia,
    Petersen,
    Mating,
    Fmating,
    Chebyshev,
}

impl From<KindArg> for RenderKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Fjulia => RenderKind::Fjulia,
            KindArg::Petersen => RenderKind::Petersen,
            KindArg::Mating => RenderKind::Mating,
            KindArg::Fmating => RenderKind::Fmating,
            KindArg::Chebyshev => RenderKind::Chebyshev,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OverlayArg {
    Drops,
    Rays,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[command(flatten)]
    theta: ThetaArgs,
    #[command(flatten)]
    nu: NuArgs,
    #[command(flatten)]
    solve: SolveFlags,
    #[arg(long, default_value = "params.json")]
    out: PathBuf,
}

#[derive(Args)]
struct OmegaArgs {
    #[command(flatten)]
    theta: ThetaArgs,
    #[arg(long, default_value_t = 256)]
    bits: u32,
    #[arg(long, default_value = "omega.json")]
    out: PathBuf,
}

#[derive(Args)]
struct RotsetArgs {
    #[command(flatten)]
    theta: ThetaArgs,
    /// Sturmian phase: p/q or a decimal in [0,1).
    #[arg(long, default_value = "0")]
    phi: String,
    #[arg(long, default_value_t = 1200)]
    bits: u32,
    /// Binary digits fed to the staircase estimate.
    #[arg(long, default_value_t = 1000)]
    digits: u32,
    #[arg(long, default_value = "rotset.json")]
    out: PathBuf,
}

#[derive(Args)]
struct RelationArgs {
    #[command(flatten)]
    theta: ThetaArgs,
    #[command(flatten)]
    nu: NuArgs,
    #[arg(long = "N", default_value_t = 10)]
    n_max: u32,
    #[arg(long, default_value_t = 256)]
    bits: u32,
    #[arg(long, default_value = "relation.json")]
    out: PathBuf,
}

#[derive(Args)]
struct DropsArgs {
    #[arg(long, value_enum, default_value = "petersen")]
    family: FamilyArg,
    #[command(flatten)]
    theta: ThetaArgs,
    #[command(flatten)]
    nu: NuArgs,
    #[arg(long, value_enum, default_value = "unit-disk")]
    side: SideArg,
    #[arg(long, default_value_t = DropConfig::default().max_generation)]
    max_generation: usize,
    #[arg(long, default_value_t = DropConfig::default().max_depth)]
    max_depth: u32,
    #[arg(long, default_value_t = DropConfig::default().resolution)]
    resolution: usize,
    #[command(flatten)]
    solve: SolveFlags,
    #[arg(long, default_value = "drops.json")]
    out: PathBuf,
}

#[derive(Args)]
struct RayFlags {
    #[arg(long, default_value_t = RayConfig::default().escape_radius)]
    escape_radius: f64,
    #[arg(long, default_value_t = RayConfig::default().substeps)]
    substeps: u32,
    #[arg(long, default_value_t = RayConfig::default().eps_land)]
    eps_land: f64,
    #[arg(long, default_value_t = RayConfig::default().stable_points)]
    stable_points: usize,
    #[arg(long, default_value_t = RayConfig::default().max_steps)]
    max_steps: usize,
}

impl RayFlags {
    fn config(&self) -> RayConfig {
        RayConfig {
            escape_radius: self.escape_radius,
            substeps: self.substeps,
            eps_land: self.eps_land,
            stable_points: self.stable_points,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Args)]
struct RaysArgs {
    #[command(flatten)]
    theta: ThetaArgs,
    /// p/q, decimal, omega, omega/2 or omega+1/2; repeatable.
    #[arg(long = "angle", default_values = ["0", "1/2", "omega"])]
    angles: Vec<String>,
    #[arg(long, default_value_t = ANGLE_BITS)]
    bits: u32,
    #[command(flatten)]
    ray: RayFlags,
    #[arg(long, default_value = "rays.json")]
    out: PathBuf,
}

#[derive(Args)]
struct PinchArgs {
    #[command(flatten)]
    theta: ThetaArgs,
    #[command(flatten)]
    nu: NuArgs,
    #[arg(long, default_value_t = 0)]
    depth: u32,
    #[command(flatten)]
    ray: RayFlags,
    #[arg(long, default_value = "pinch.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[command(flatten)]
    theta: ThetaArgs,
    #[command(flatten)]
    nu: NuArgs,
    #[arg(long, default_value_t = 512)]
    width: u32,
    #[arg(long, default_value_t = 512)]
    height: u32,
    #[arg(long, default_value_t = siegel_core::render::DEFAULT_MAX_ITER)]
    max_iter: u32,
    #[arg(long, default_value_t = siegel_core::render::DEFAULT_ETA)]
    eta: f64,
    /// re0,im0,re1,im1; defaults depend on the kind.
    #[arg(long, allow_hyphen_values = true)]
    viewport: Option<String>,
    #[arg(long, value_enum)]
    overlay: Vec<OverlayArg>,
    #[command(flatten)]
    solve: SolveFlags,
    #[arg(long, default_value = "image.ppm")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    theta: ThetaArgs,
    #[command(flatten)]
    nu: NuArgs,
    #[arg(long, default_value_t = 10)]
    relation_n: u32,
    #[arg(long, default_value_t = 256)]
    bits: u32,
    #[arg(long, default_value_t = 12)]
    limb_depth: u32,
    #[command(flatten)]
    solve: SolveFlags,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

fn usage_error(msg: &str) -> ! {
    Cli::command().error(clap::error::ErrorKind::MissingRequiredArgument, msg).exit()
}

impl ThetaArgs {
    fn resolve(&self, run_warnings: &mut Vec<String>) -> Result<ContinuedFraction> {
        read_angle_input(self.theta.as_deref(), self.theta_decimal, run_warnings)?
            .ok_or_else(|| anyhow::anyhow!("θ missing"))
    }
}

impl NuArgs {
    fn resolve(&self, run_warnings: &mut Vec<String>) -> Result<Option<ContinuedFraction>> {
        read_angle_input(self.nu.as_deref(), self.nu_decimal, run_warnings)
    }

    fn require(&self, run_warnings: &mut Vec<String>, what: &str) -> Result<ContinuedFraction> {
        match self.resolve(run_warnings)? {
            Some(nu) => Ok(nu),
            None => usage_error(&format!("{what} needs --nu")),
        }
    }
}

fn read_angle_input(cf: Option<&str>, dec: Option<f64>, warnings: &mut Vec<String>) -> Result<Option<ContinuedFraction>> {
    let text = match (cf, dec) {
        (Some(s), _) => s.to_string(),
        (None, Some(x)) => x.to_string(),
        (None, None) => return Ok(None),
    };
    let (value, warning) = input::parse_theta(&text)?;
    warnings.extend(warning);
    Ok(Some(value))
}

fn cx(z: C) -> Cx {
    z.into()
}

fn solve_json(family: Family, theta: &ContinuedFraction, rep: &SolveReport) -> Result<Value> {
    let mut v = json!({
        "family": family,
        "theta_cf": theta.entries(),
        "t": rep.t,
        "target_displacement": rep.target,
        "rotation": rep.rotation,
        "cf_prefix": rep.cf_prefix,
        "brackets": rep.brackets,
        "bisection_bracket": rep.bisection_bracket,
        "refinement": rep.refinement,
    });
    match family {
        Family::Petersen => {
            let q = PetersenModel::new(rep.t);
            let r = petersen_structure_check(&q, 10_000);
            v["lambda"] = json!(cx(q.map.lambda));
            v["critical_residuals"] = json!(r);
        }
        Family::Mating { nu } => {
            let m = build_b(rep.t, nu)?;
            let beta = fixed_points_beta(&m.map)?;
            v["nu"] = json!(nu);
            v["a"] = json!(cx(m.a));
            v["b"] = json!(cx(m.b));
            v["lambda"] = json!(cx(m.lambda));
            v["kappa"] = json!(cx(m.kappa));
            v["critical_residuals"] = json!(critical_structure_check(&m));
            v["beta"] = json!({
                "beta": cx(beta.beta),
                "beta_prime": cx(beta.beta_prime),
                "multiplier": cx(beta.multiplier),
            });
        }
    }
    Ok(v)
}

fn family_of(arg: FamilyArg, nu: Option<&ContinuedFraction>) -> Result<Family> {
    Ok(match arg {
        FamilyArg::Petersen => Family::Petersen,
        FamilyArg::Mating => match nu {
            Some(nu) => Family::Mating { nu: nu.to_f64() },
            None => usage_error("the mating family needs --nu"),
        },
    })
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let mut warnings = Vec::new();
    let theta = a.theta.resolve(&mut warnings)?;
    let nu = a.nu.resolve(&mut warnings)?;
    let family = family_of(a.family, nu.as_ref())?;
    let cfg = a.solve.config();
    let mut run = Run::new("solve", &a.out, json!({
        "family": family, "theta_cf": theta.entries(), "nu_cf": nu.as_ref().map(|n| n.entries().to_vec()), "solve": cfg,
    }));
    warnings.into_iter().for_each(|w| run.warn(w));
    let rep = solve_t(&theta, family, &cfg)?;
    let v = solve_json(family, &theta, &rep)?;
    println!("t = {:.12}  cf prefix {:?}", rep.t, rep.cf_prefix);
    if let (Some(a), Some(b)) = (v.get("a"), v.get("b")) {
        println!("a = {a}  b = {b}");
    }
    let out = run.primary();
    run.write_json(&out, &v)?;
    run.write(&sidecar(&out, "scan.csv"), scan_csv(&rep).as_bytes())?;
    run.finish()?;
    Ok(())
}

fn scan_csv(rep: &SolveReport) -> String {
    let mut s = String::from("t,displacement\n");
    for r in &rep.scan {
        s.push_str(&format!("{:.9},{:.12}\n", r.t, r.displacement));
    }
    s
}

fn binary_prefix(x: &BigAngle, n: u32) -> String {
    let n = n.min(x.reliable_digits());
    (1..=n).map(|i| char::from(b'0' + x.digit(i))).collect()
}

fn cmd_omega(a: &OmegaArgs) -> Result<()> {
    let mut warnings = Vec::new();
    let theta = a.theta.resolve(&mut warnings)?;
    let mut run = Run::new("omega", &a.out, json!({ "theta_cf": theta.entries(), "bits": a.bits }));
    warnings.into_iter().for_each(|w| run.warn(w));
    let w = omega_of_theta(&theta, a.bits)?;
    let prefix = binary_prefix(&w, 64);
    let cf = w.cf_prefix(12);
    println!("omega = {:.17}  binary 0.{prefix}…  cf {cf:?}", w.to_f64());
    let v = json!({
        "omega": w,
        "decimal": w.to_f64(),
        "binary_prefix": prefix,
        "reliable_digits": w.reliable_digits().min(a.bits),
        "cf_prefix": cf,
    });
    let out = run.primary();
    run.write_json(&out, &v)?;
    run.finish()?;
    Ok(())
}

fn cmd_rotset(a: &RotsetArgs) -> Result<()> {
    let mut warnings = Vec::new();
    let theta = a.theta.resolve(&mut warnings)?;
    let mut run = Run::new("rotset", &a.out, json!({
        "theta_cf": theta.entries(), "phi": a.phi, "bits": a.bits, "digits": a.digits,
    }));
    warnings.into_iter().for_each(|w| run.warn(w));
    let phi = input::parse_angle(&a.phi, &theta, a.bits)?;
    let point = sturmian_point(&theta, &phi, a.bits)?;
    let omega = omega_of_theta(&theta, a.bits)?;
    let rho = staircase_rho(&omega, a.digits)?;
    println!("sturmian point {:.17}  staircase rho {rho:.6}", point.to_f64());
    let v = json!({
        "sturmian_point": point,
        "sturmian_decimal": point.to_f64(),
        "omega": omega,
        "staircase_rho": rho,
        "theta": theta.to_f64(),
    });
    let out = run.primary();
    run.write_json(&out, &v)?;
    run.finish()?;
    Ok(())
}

fn cmd_relation(a: &RelationArgs) -> Result<()> {
    let mut warnings = Vec::new();
    let theta = a.theta.resolve(&mut warnings)?;
    let nu = a.nu.require(&mut warnings, "relation")?;
    let mut run = Run::new("relation", &a.out, json!({
        "theta_cf": theta.entries(), "nu_cf": nu.entries(), "N": a.n_max, "bits": a.bits,
    }));
    warnings.into_iter().for_each(|w| run.warn(w));
    let rep = check_relation(&theta, &nu, a.n_max, a.bits)?;
    println!("min distance {:.6e} at (n,m) = {:?}  verdict {:?}", rep.min_distance, rep.argmin, rep.verdict);
    let out = run.primary();
    run.write_json(&out, &rep)?;
    run.write(&sidecar(&out, "csv"), rep.to_csv().as_bytes())?;
    run.finish()?;
    Ok(())
}

/// Solves the model whose unit-disk family is wanted, swapping θ and ν for the infinity side.
fn drop_model(
    family: FamilyArg,
    side: SideArg,
    theta: &ContinuedFraction,
    nu: Option<&ContinuedFraction>,
    cfg: &SolveConfig,
) -> Result<(siegel_core::blaschke_models::BlaschkeProduct, f64)> {
    match (family, side) {
        (FamilyArg::Petersen, SideArg::UnitDisk) => {
            let r = solve_t(theta, Family::Petersen, cfg)?;
            Ok((PetersenModel::new(r.t).map, r.t))
        }
        (FamilyArg::Petersen, SideArg::Infinity) => bail!("the Petersen model has no infinity family"),
        (FamilyArg::Mating, side) => {
            let Some(nu) = nu else { usage_error("the mating family needs --nu") };
            let (th, other) = match side {
                SideArg::UnitDisk => (theta, nu),
                SideArg::Infinity => (nu, theta),
            };
            let r = solve_t(th, Family::Mating { nu: other.to_f64() }, cfg)?;
            Ok((build_b(r.t, other.to_f64())?.map, r.t))
        }
    }
}

fn chain(first: u32, len: usize) -> Vec<DropAddress> {
    (1..=len)
        .map(|k| {
            let mut v = vec![first];
            v.extend(std::iter::repeat_n(1, k - 1));
            DropAddress(v)
        })
        .collect()
}

fn chain_json(tree: &DropTree) -> Result<Value> {
    let beta = fixed_points_beta(&tree.model)?;
    let reflect = |z: C| match tree.side {
        DropSide::UnitDisk => z,
        DropSide::Infinity => C::new(1.0, 0.0) / z.conj(),
    };
    let len = tree.config.max_generation.min(tree.config.max_depth as usize);
    let mut rows = Vec::new();
    for (first, target, name) in [(1, beta.beta, "beta"), (2, beta.beta_prime, "beta_prime")] {
        let addrs = chain(first, len.saturating_sub((first - 1) as usize));
        if addrs.is_empty() || addrs.iter().any(|a| !tree.nodes.contains_key(a)) {
            continue;
        }
        let l = drop_chain_landing(tree, &addrs)?;
        let target = reflect(target);
        rows.push(json!({
            "target": name,
            "target_point": cx(target),
            "deepest": addrs.last().map(|a| a.0.clone()),
            "estimate": cx(l.estimate),
            "radius": l.radius,
            "distance": (l.estimate - target).norm(),
        }));
    }
    Ok(Value::Array(rows))
}

fn cmd_drops(a: &DropsArgs) -> Result<()> {
    let mut warnings = Vec::new();
    let theta = a.theta.resolve(&mut warnings)?;
    let nu = a.nu.resolve(&mut warnings)?;
    let side = match a.side {
        SideArg::UnitDisk => DropSide::UnitDisk,
        SideArg::Infinity => DropSide::Infinity,
    };
    let cfg = DropConfig {
        max_generation: a.max_generation,
        max_depth: a.max_depth,
        resolution: a.resolution,
        ..DropConfig::default()
    };
    let scfg = a.solve.config();
    let mut run = Run::new("drops", &a.out, json!({
        "family": match a.family { FamilyArg::Petersen => "petersen", FamilyArg::Mating => "mating" },
        "theta_cf": theta.entries(), "nu_cf": nu.as_ref().map(|n| n.entries().to_vec()),
        "side": side, "drops": cfg, "solve": scfg,
    }));
    warnings.into_iter().for_each(|w| run.warn(w));
    let (model, t) = drop_model(a.family, a.side, &theta, nu.as_ref(), &scfg)?;
    let tree = build_drop_tree(&model, side, &cfg)?;
    let mut v = serde_json::to_value(tree.to_json())?;
    v["t"] = json!(t);
    v["chains"] = chain_json(&tree)?;
    let profile = limb_diameter_profile(&tree);
    println!("{} drops; limb profile {:?}", tree.nodes.len(), profile);
    let out = run.primary();
    run.write_json(&out, &v)?;
    run.write(&sidecar(&out, "boundaries.csv"), tree.boundaries_csv().as_bytes())?;
    run.finish()?;
    Ok(())
}

fn cmd_rays(a: &RaysArgs) -> Result<()> {
    let mut warnings = Vec::new();
    let theta = a.theta.resolve(&mut warnings)?;
    let cfg = a.ray.config();
    let mut run = Run::new("rays", &a.out, json!({
        "theta_cf": theta.entries(), "angles": a.angles, "bits": a.bits, "ray": cfg,
    }));
    warnings.into_iter().for_each(|w| run.warn(w));
    let angles = a.angles.iter().map(|s| input::parse_angle(s, &theta, a.bits)).collect::<Result<Vec<_>>>()?;
    let f = f_theta(theta.to_f64());
    let rays = trace_rays(&f, &angles, &cfg)?;
    let mut records = Vec::new();
    let mut csv = String::from("ray,potential,re,im\n");
    for (i, (r, name)) in rays.iter().zip(&a.angles).enumerate() {
        println!("{name}: landed {} at {} (spread {:.2e})", r.landed, r.landing_point(), r.landing_radius);
        records.push(json!({
            "label": name,
            "angle": r.angle,
            "angle_decimal": r.angle.to_f64(),
            "landing": r.landing,
            "landed": r.landed,
            "landing_radius": r.landing_radius,
            "steps": r.steps,
        }));
        for p in &r.polyline {
            csv.push_str(&format!("{i},{:.17e},{:.17e},{:.17e}\n", p.potential, p.z.re, p.z.im));
        }
    }
    let v = json!({ "c": cx(f.c), "beta": cx(f.beta), "rays": records });
    let out = run.primary();
    run.write_json(&out, &v)?;
    run.write(&sidecar(&out, "csv"), csv.as_bytes())?;
    run.finish()?;
    Ok(())
}

fn cmd_pinch(a: &PinchArgs) -> Result<()> {
    let mut warnings = Vec::new();
    let theta = a.theta.resolve(&mut warnings)?;
    let nu = a.nu.require(&mut warnings, "pinch")?;
    let cfg = a.ray.config();
    let mut run = Run::new("pinch", &a.out, json!({
        "theta_cf": theta.entries(), "nu_cf": nu.entries(), "depth": a.depth, "ray": cfg,
    }));
    warnings.into_iter().for_each(|w| run.warn(w));
    let rows = pinch_pairs(&theta, &nu, a.depth, &cfg)?;
    for r in &rows {
        println!("depth {} s={:.9} t={:.9} separation {:.4e} class size {}", r.depth, r.s.to_f64(), r.t.to_f64(), r.separation, r.class_size);
    }
    let out = run.primary();
    run.write(&out, pinch_csv(&rows).as_bytes())?;
    run.write_json(&sidecar(&out, "json"), &rows)?;
    run.finish()?;
    Ok(())
}

fn drop_overlays(scene: &Scene) -> Result<Vec<Overlay>> {
    let model = match scene {
        Scene::Petersen(q) => q.map,
        Scene::Mating(m) => m.map,
        _ => bail!("drop overlays need the petersen or mating kind"),
    };
    let cfg = DropConfig { max_generation: 2, max_depth: 6, resolution: 256, ..DropConfig::default() };
    let tree = build_drop_tree(&model, DropSide::UnitDisk, &cfg)?;
    Ok(tree
        .nodes
        .values()
        .map(|n| Overlay { label: n.address.to_string(), points: n.boundary.iter().map(|&z| z.into()).collect(), closed: true })
        .collect())
}

fn ray_overlays(theta: &ContinuedFraction) -> Result<Vec<Overlay>> {
    let f = f_theta(theta.to_f64());
    let labels = ["0", "1/2", "omega", "omega/2", "omega+1/2"];
    let angles = labels.iter().map(|s| input::parse_angle(s, theta, ANGLE_BITS)).collect::<Result<Vec<_>>>()?;
    let rays = trace_rays(&f, &angles, &RayConfig::default())?;
    Ok(rays
        .iter()
        .zip(labels)
        .map(|(r, l)| Overlay { label: l.to_string(), points: r.polyline.iter().map(|p| p.z).collect(), closed: false })
        .collect())
}

fn cmd_render(a: &RenderArgs) -> Result<()> {
    let mut warnings = Vec::new();
    let theta = a.theta.resolve(&mut warnings)?;
    let nu = a.nu.resolve(&mut warnings)?;
    let kind: RenderKind = a.kind.into();
    let viewport = match &a.viewport {
        Some(s) => {
            let [re0, im0, re1, im1] = input::parse_viewport(s)?;
            Viewport { re0, im0, re1, im1 }
        }
        None => kind.default_viewport(),
    };
    let needs_nu = matches!(kind, RenderKind::Mating | RenderKind::Fmating);
    if needs_nu && nu.is_none() {
        usage_error("this kind needs --nu");
    }
    let overlay_names: Vec<String> = a
        .overlay
        .iter()
        .map(|o| match o {
            OverlayArg::Drops => "drops".to_string(),
            OverlayArg::Rays => "rays".to_string(),
        })
        .collect();
    let config = RenderConfig {
        kind,
        theta_cf: theta.entries().to_vec(),
        nu_cf: nu.as_ref().map(|n| n.entries().to_vec()),
        viewport,
        px: Pixels { w: a.width, h: a.height },
        max_iter: a.max_iter,
        eta: a.eta,
        overlays: overlay_names,
    };
    let scfg = a.solve.config();
    let mut run = Run::new("render", &a.out, json!({ "render": config, "solve": scfg }));
    warnings.into_iter().for_each(|w| run.warn(w));
    let scene = Scene::build(kind, &theta, nu.as_ref(), &scfg)?;
    let grid = render(scene, viewport, config.px, config.max_iter, config.eta)?;
    let mut overlays = Vec::new();
    for o in &a.overlay {
        match o {
            OverlayArg::Drops => overlays.extend(drop_overlays(&scene)?),
            OverlayArg::Rays => overlays.extend(ray_overlays(&theta)?),
        }
    }
    let ppm = grid.to_ppm(&overlays);
    let counts = json!({
        "side_a": grid.count(PixelClass::SideA),
        "side_b": grid.count(PixelClass::SideB),
        "undecided": grid.count(PixelClass::Undecided),
        "escaped": grid.count(PixelClass::Escaped),
    });
    println!("{}x{} {:?}: {counts}", a.width, a.height, kind);
    let out = run.primary();
    run.write(&out, &ppm)?;
    run.write_json(&sidecar(&out, "stats.json"), &json!({ "traps": grid.traps, "counts": counts }))?;
    run.finish()?;
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<()> {
    let mut warnings = Vec::new();
    let theta = a.theta.resolve(&mut warnings)?;
    let nu = a.nu.require(&mut warnings, "report")?;
    let scfg = a.solve.config();
    let dcfg = DropConfig { max_depth: a.limb_depth, ..DropConfig::default() };
    let mut run = Run::new("report", &a.out, json!({
        "theta_cf": theta.entries(), "nu_cf": nu.entries(), "relation_N": a.relation_n, "bits": a.bits,
        "drops": dcfg, "solve": scfg,
    }));
    warnings.into_iter().for_each(|w| run.warn(w));
    let family = Family::Mating { nu: nu.to_f64() };
    let rep = solve_t(&theta, family, &scfg)?;
    let solve = solve_json(family, &theta, &rep)?;
    let wt = omega_of_theta(&theta, a.bits)?;
    let wn = omega_of_theta(&nu, a.bits)?;
    let relation = check_relation(&theta, &nu, a.relation_n, a.bits.max(a.relation_n + 64))?;
    let model = build_b(rep.t, nu.to_f64())?;
    let tree = build_drop_tree(&model.map, DropSide::UnitDisk, &dcfg)?;
    let profile = limb_diameter_profile(&tree);
    let v = json!({
        "schema_version": 1,
        "solve": solve,
        "omega_theta": { "omega": wt, "decimal": wt.to_f64(), "binary_prefix": binary_prefix(&wt, 32) },
        "omega_nu": { "omega": wn, "decimal": wn.to_f64(), "binary_prefix": binary_prefix(&wn, 32) },
        "relation": {
            "N": relation.n_max,
            "min_distance": relation.min_distance,
            "argmin": relation.argmin,
            "verdict": relation.verdict,
            "unresolved": relation.unresolved,
        },
        "limb_profile": profile,
    });
    println!("t = {:.12}; relation {:?}; {} drops", rep.t, relation.verdict, tree.nodes.len());
    let out = run.primary();
    run.write_json(&out, &v)?;
    run.finish()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Omega(a) => cmd_omega(a),
        Command::Rotset(a) => cmd_rotset(a),
        Command::Relation(a) => cmd_relation(a),
        Command::Drops(a) => cmd_drops(a),
        Command::Rays(a) => cmd_rays(a),
        Command::Pinch(a) => cmd_pinch(a),
        Command::Render(a) => cmd_render(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar(Path::new("a/b/image.ppm"), "stats.json"), PathBuf::from("a/b/image.stats.json"));
        assert_eq!(sidecar(Path::new("pinch"), "json"), PathBuf::from("pinch.json"));
    }
}

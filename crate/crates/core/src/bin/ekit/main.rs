//! Command-line front end: mesh export, univalence region scans, flow
//! traces, W-volume checks, grafting tables, and the verification
//! battery.
//!
//! All artifacts are written atomically (temp file + rename) and contain
//! no timestamps, so identical configurations produce identical bytes.

use clap::{Args, Parser, Subcommand};
use epstein_kit::duality::{dual_pair_at, flow_trace_csv, normal_flow};
use epstein_kit::epstein::{epstein_mesh, Model};
use epstein_kit::field::{
    AngularProfile, Catalog, Chart, GridScalar, MetricField, ScalarField, TrigPoly, TrigTerm,
};
use epstein_kit::schwarzian::ProjectiveStructure;
use epstein_kit::univalence::region_scan;
use epstein_kit::wvolume::{self, GraftingData};
use epstein_kit::C;
use std::path::{Path, PathBuf};

mod verify_battery;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "ekit", version, about = "Conformal metrics, their surfaces and volumes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export the surface attached to a conformal metric as an OBJ mesh
    Epstein(EpsteinArgs),
    /// Univalence criterion reports and exponent-region scans
    Univalence(UnivalenceArgs),
    /// Normal-flow traces of the dual pair at a chart point
    Flow(FlowArgs),
    /// W-volume identity checks on torus metrics
    Wvol(WvolArgs),
    /// Grafting-formula bound tables
    Graft(GraftArgs),
    /// Run the verification battery and print a pass/fail table
    Verify(VerifyArgs),
}

#[derive(Args)]
struct EpsteinArgs {
    /// metric spec, e.g. hyperbolic-uhp, hyperbolic-disk, bump-disk,
    /// powercone:log-sin, csv:FILE
    #[arg(long)]
    metric: String,
    /// e^{2s} scaling applied to the metric
    #[arg(long, default_value_t = 0.0)]
    scale: f64,
    /// structure spec: identity, power:RE[,IM], power-disk:RE[,IM],
    /// moebius:a,b,c,d (complex entries RE[,IM] separated by ';'), exp
    #[arg(long, default_value = "identity")]
    structure: String,
    /// grid resolution NXxNY
    #[arg(long, default_value = "64x64")]
    grid: String,
    /// output model: ball or uhs
    #[arg(long, default_value = "ball")]
    model: String,
    /// OBJ output path
    #[arg(long)]
    out: PathBuf,
    /// sidecar CSV of per-vertex curvature data
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct UnivalenceArgs {
    /// structure spec; bare "power" scans the exponent plane
    #[arg(long, default_value = "power")]
    structure: String,
    /// metric spec (classification) or angular profile for scans:
    /// powercone:log-sin, powercone:double-log-sin
    #[arg(long, default_value = "powercone:log-sin")]
    metric: String,
    /// region CSV output
    #[arg(long)]
    out: PathBuf,
    /// region boundary SVG output
    #[arg(long)]
    svg: Option<PathBuf>,
    /// scan rectangle RE0:RE1
    #[arg(long, default_value = "0.05:2.6")]
    re: String,
    /// scan rectangle IM0:IM1
    #[arg(long, default_value = "-1.3:1.3")]
    im: String,
    /// scan resolution per axis
    #[arg(long, default_value_t = 200)]
    n: usize,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long)]
    metric: String,
    #[arg(long, default_value_t = 0.0)]
    scale: f64,
    #[arg(long, default_value = "identity")]
    structure: String,
    /// chart point RE,IM
    #[arg(long)]
    z: String,
    #[arg(long, default_value_t = -1.0)]
    t0: f64,
    #[arg(long, default_value_t = 2.0)]
    t1: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WvolArgs {
    /// TOML config of the base torus metric
    #[arg(long)]
    g0: PathBuf,
    /// TOML config of the conformal direction
    #[arg(long)]
    u: PathBuf,
    /// identity to check: pair, scaling, cocycle, dw, wmax
    #[arg(long)]
    check: String,
    /// CSV report output
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GraftArgs {
    #[arg(long)]
    chi: i32,
    #[arg(long)]
    l: f64,
    #[arg(long)]
    phi2: f64,
    #[arg(long)]
    phiinf: f64,
    #[arg(long, default_value_t = 3.0)]
    tmax: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// CSV table output (bounds header + per-t area rows)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// all, tensor, field, schwarzian, duality, epstein, univalence, wvolume
    #[arg(long, default_value = "all")]
    suite: String,
    /// write the machine-readable summary here (defaults to stdout)
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() {
    if let Ok(threads) = std::env::var("EPSTEIN_KIT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Epstein(a) => cmd_epstein(a),
        Command::Univalence(a) => cmd_univalence(a),
        Command::Flow(a) => cmd_flow(a),
        Command::Wvol(a) => cmd_wvol(a),
        Command::Graft(a) => cmd_graft(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

// ---------------------------------------------------------------------------
// Spec parsing
// ---------------------------------------------------------------------------

fn parse_complex(s: &str) -> Result<C, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let re: f64 = parts[0].trim().parse().map_err(|e| format!("bad number {s:?}: {e}"))?;
    let im: f64 = if parts.len() > 1 {
        parts[1].trim().parse().map_err(|e| format!("bad number {s:?}: {e}"))?
    } else {
        0.0
    };
    if parts.len() > 2 {
        return Err(format!("too many components in {s:?}"));
    }
    Ok(C::new(re, im))
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('x').ok_or_else(|| format!("grid spec {s:?} is not NXxNY"))?;
    Ok((
        a.parse().map_err(|e| format!("bad grid {s:?}: {e}"))?,
        b.parse().map_err(|e| format!("bad grid {s:?}: {e}"))?,
    ))
}

fn parse_profile(s: &str) -> Result<AngularProfile, String> {
    match s {
        "log-sin" => Ok(AngularProfile::LogSin),
        "double-log-sin" => Ok(AngularProfile::DoubleLogSin),
        other => Err(format!("unknown angular profile {other:?}")),
    }
}

fn parse_metric(spec: &str, grid: Option<(usize, usize)>) -> Result<MetricField, String> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let base = match name {
        "euclidean" => MetricField::catalog_default(Catalog::Euclidean),
        "hyperbolic-disk" => MetricField::catalog_default(Catalog::HyperbolicDisk),
        "hyperbolic-uhp" => MetricField::catalog_default(Catalog::HyperbolicUhp),
        "spherical" => MetricField::catalog_default(Catalog::Spherical),
        "powercone" => {
            let p = parse_profile(arg.ok_or("powercone needs a profile argument")?)?;
            MetricField::catalog_default(Catalog::PowerCone(p))
        }
        "torus-bump" => MetricField::torus_bump_default(),
        "bump-disk" => epstein_kit::field::bump_disk_metric(),
        "csv" => {
            let path = arg.ok_or("csv metric needs a file argument")?;
            let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            MetricField::from_grid(GridScalar::from_csv(&text).map_err(|e| e.to_string())?)
        }
        other => return Err(format!("unknown metric {other:?}")),
    };
    Ok(match grid {
        Some((nx, ny)) => {
            let mut m = base;
            m.chart = Chart { kind: m.chart.kind.clone(), nx, ny };
            m
        }
        None => base,
    })
}

fn parse_structure(spec: &str) -> Result<ProjectiveStructure, String> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    match name {
        "identity" => Ok(ProjectiveStructure::identity()),
        "power" => Ok(ProjectiveStructure::power(parse_complex(arg.ok_or("power needs c")?)?)),
        "power-disk" => {
            Ok(ProjectiveStructure::power_disk(parse_complex(arg.ok_or("power-disk needs c")?)?))
        }
        "exp" => Ok(ProjectiveStructure { dev: epstein_kit::schwarzian::DevelopingMap::Exp }),
        "moebius" => {
            let parts: Vec<&str> = arg.ok_or("moebius needs a;b;c;d")?.split(';').collect();
            if parts.len() != 4 {
                return Err("moebius needs four ';'-separated complex entries".into());
            }
            let v: Vec<C> = parts
                .iter()
                .map(|p| parse_complex(p))
                .collect::<Result<_, _>>()?;
            Ok(ProjectiveStructure::moebius(v[0], v[1], v[2], v[3]))
        }
        other => Err(format!("unknown structure {other:?}")),
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("range {s:?} is not A:B"))?;
    Ok((
        a.parse().map_err(|e| format!("bad range {s:?}: {e}"))?,
        b.parse().map_err(|e| format!("bad range {s:?}: {e}"))?,
    ))
}

/// Atomic write: temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<(), String> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, contents).map_err(|e| format!("{}: {e}", tmp.display()))?;
    std::fs::rename(&tmp, path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_epstein(a: EpsteinArgs) -> Result<i32, String> {
    let grid = parse_grid(&a.grid)?;
    let mut m = parse_metric(&a.metric, Some(grid))?;
    if a.scale != 0.0 {
        m = m.scaled(a.scale);
    }
    let s = parse_structure(&a.structure)?;
    let model = match a.model.as_str() {
        "ball" => Model::Ball,
        "uhs" => Model::Uhs,
        other => return Err(format!("unknown model {other:?}")),
    };
    let mesh = epstein_mesh(&m, &s, model);
    write_atomic(&a.out, &mesh.to_obj(VERSION))?;
    if let Some(csv) = &a.csv {
        write_atomic(csv, &mesh.to_csv())?;
    }
    println!(
        "mesh: {} vertices, {} faces, {} failures -> {}",
        mesh.valid_count(),
        mesh.faces().len(),
        mesh.failures.len(),
        a.out.display()
    );
    if !mesh.failures.is_empty() {
        let (z, detail) = &mesh.failures[0];
        println!("first failure at {z}: {detail}");
    }
    Ok(0)
}

fn cmd_univalence(a: UnivalenceArgs) -> Result<i32, String> {
    // scans pair the power family with an angular profile
    let profile = match a.metric.split_once(':') {
        Some(("powercone", p)) => parse_profile(p)?,
        _ => return Err(format!("region scans need --metric powercone:PROFILE, got {}", a.metric)),
    };
    if a.structure != "power" {
        // single-exponent classification report against the cone metric
        let s = parse_structure(&a.structure)?;
        let m = parse_metric(&format!("powercone:{}", profile_name(&profile)), None)?;
        let rep = epstein_kit::univalence::classify(&s, &m).map_err(|e| e.to_string())?;
        println!(
            "sup ratio {} at {}; classification: {}",
            rep.sup_ratio,
            rep.witness,
            rep.classification.label()
        );
        write_atomic(
            &a.out,
            &format!(
                "sup_ratio,witness_re,witness_im,classification\n{},{},{},{}\n",
                rep.sup_ratio,
                rep.witness.re,
                rep.witness.im,
                rep.classification.label()
            ),
        )?;
        return Ok(0);
    }
    let re = parse_range(&a.re)?;
    let im = parse_range(&a.im)?;
    let scan = region_scan(&profile, re, im, a.n, a.n);
    write_atomic(&a.out, &scan.to_csv())?;
    if let Some(svg) = &a.svg {
        write_atomic(svg, &scan.to_svg())?;
    }
    let inside = scan.mask.iter().filter(|b| **b).count();
    println!("region scan {}x{}: {} exponents satisfy the criterion -> {}", a.n, a.n, inside, a.out.display());
    Ok(0)
}

fn profile_name(p: &AngularProfile) -> &'static str {
    match p {
        AngularProfile::LogSin => "log-sin",
        AngularProfile::DoubleLogSin => "double-log-sin",
        AngularProfile::Table { .. } => "table",
    }
}

fn cmd_flow(a: FlowArgs) -> Result<i32, String> {
    let mut m = parse_metric(&a.metric, None)?;
    if a.scale != 0.0 {
        m = m.scaled(a.scale);
    }
    let s = parse_structure(&a.structure)?;
    let z = parse_complex(&a.z)?;
    let pair = dual_pair_at(&s, &m, z).map_err(|e| e.to_string())?;
    let csv = flow_trace_csv(&pair, a.t0, a.t1, a.steps).map_err(|e| e.to_string())?;
    write_atomic(&a.out, &csv)?;
    let end = normal_flow(&pair, a.t1).map_err(|e| e.to_string())?;
    let (l1, l2) = end.pair.principal_curvatures();
    println!("flow trace at {z}: final principal curvatures ({l1}, {l2}) -> {}", a.out.display());
    Ok(0)
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricConfig {
    metric: MetricSection,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricSection {
    kind: String,
    #[serde(default = "default_resolution")]
    resolution: usize,
    #[serde(default)]
    terms: Vec<TrigTerm>,
}

fn default_resolution() -> usize {
    128
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectionConfig {
    direction: DirectionSection,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectionSection {
    #[serde(default)]
    constant: f64,
    #[serde(default)]
    terms: Vec<TrigTerm>,
}

fn load_torus_metric(path: &Path) -> Result<MetricField, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg: MetricConfig =
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    match cfg.metric.kind.as_str() {
        "flat-torus" => Ok(wvolume::flat_torus(cfg.metric.resolution)),
        "torus-bump" => {
            let poly = if cfg.metric.terms.is_empty() {
                epstein_kit::field::default_bump()
            } else {
                TrigPoly::new(cfg.metric.terms)
            };
            Ok(wvolume::torus_metric(poly, cfg.metric.resolution))
        }
        other => Err(format!("metric kind {other:?} is not a torus metric")),
    }
}

fn load_direction(path: &Path) -> Result<ScalarField, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let cfg: DirectionConfig =
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let trig = ScalarField::Trig(TrigPoly::new(cfg.direction.terms));
    Ok(if cfg.direction.constant != 0.0 {
        ScalarField::Sum(Box::new(trig), Box::new(ScalarField::Const(cfg.direction.constant)))
    } else {
        trig
    })
}

fn cmd_wvol(a: WvolArgs) -> Result<i32, String> {
    let g0 = load_torus_metric(&a.g0)?;
    let u = load_direction(&a.u)?;
    let mut rows = String::from("check,value,defect\n");
    let fail = |e: epstein_kit::GeomError| e.to_string();
    match a.check.as_str() {
        "pair" => {
            let (w, err) = wvolume::w_pair_richardson(&g0, &u).map_err(fail)?;
            rows.push_str(&format!("pair,{w},{err}\n"));
            println!("W(g0, e^2u g0) = {w} (resolution difference {err})");
        }
        "scaling" => {
            let d = wvolume::w_scaling_check(&g0, &u, 0.3, -0.2).map_err(fail)?;
            rows.push_str(&format!("scaling,0.0,{d}\n"));
            println!("scaling invariance defect {d}");
        }
        "cocycle" => {
            let half = ScalarField::Scale(0.5, Box::new(u.clone()));
            let d = wvolume::w_cocycle_check(&g0, &half, &half).map_err(fail)?;
            rows.push_str(&format!("cocycle,0.0,{d}\n"));
            println!("cocycle defect {d}");
        }
        "dw" => {
            let d = wvolume::dw_conformal_check(&g0, &u, 1e-3).map_err(fail)?;
            rows.push_str(&format!("dw,0.0,{d}\n"));
            println!("first-variation defect {d}");
        }
        "wmax" => {
            let u0 = wvolume::area_preserving(&g0, &u).map_err(fail)?;
            let (w, _) = wvolume::w_pair_richardson(&g0, &u0).map_err(fail)?;
            let grad = wvolume::grad_norm_sq_total(&g0, &u0).map_err(fail)?;
            rows.push_str(&format!("wmax,{w},{}\n", w + 0.25 * grad));
            println!("W = {w}, -|grad u|^2/4 = {}", -0.25 * grad);
        }
        other => return Err(format!("unknown check {other:?}")),
    }
    write_atomic(&a.out, &rows)?;
    Ok(0)
}

fn cmd_graft(a: GraftArgs) -> Result<i32, String> {
    let d = GraftingData::new(a.chi, a.l, a.phi2, a.phiinf).map_err(|e| e.to_string())?;
    let b = wvolume::graft_bounds(&d);
    let mut out = format!(
        "# grafting bounds: T = {}, lower = {}, upper = {}, admissible = {}\n",
        b.t_threshold,
        b.lower,
        b.upper,
        wvolume::graft_admissible(&d)
    );
    out.push_str("t,a_dual_h,dual_h_valid,a_proj,a_dual_proj,a_conf_gap\n");
    for i in 0..=a.steps {
        let t = a.tmax * i as f64 / a.steps as f64;
        let areas = wvolume::graft_areas(&d, t);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t,
            areas.a_dual_h,
            u8::from(areas.dual_h_valid),
            areas.a_proj,
            areas.a_dual_proj,
            areas.a_conf_gap
        ));
    }
    write_atomic(&a.out, &out)?;
    println!(
        "bounds: {} <= W(hyperbolic, projective) <= {} (threshold T = {})",
        b.lower, b.upper, b.t_threshold
    );
    Ok(0)
}

fn cmd_verify(a: VerifyArgs) -> Result<i32, String> {
    let results = verify_battery::run_suite(&a.suite)?;
    let mut failed = 0usize;
    println!("{:<38} {:<6} detail", "check", "status");
    for r in &results {
        let status = if r.pass { "pass" } else { "FAIL" };
        if !r.pass {
            failed += 1;
        }
        println!("{:<38} {:<6} {}", r.name, status, r.detail);
    }
    println!("---\n{} checks, {} failed", results.len(), failed);
    let summary = serde_json::json!({
        "version": VERSION,
        "suite": a.suite,
        "checks": results.iter().map(|r| serde_json::json!({
            "name": r.name,
            "pass": r.pass,
            "detail": r.detail,
        })).collect::<Vec<_>>(),
        "failed": failed,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?;
    match &a.json {
        Some(path) => write_atomic(path, &text)?,
        None => println!("{text}"),
    }
    Ok(if failed == 0 { 0 } else { 1 })
}

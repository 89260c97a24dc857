use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use serde::Serialize;
use serde_json::Value;

use distmin_core::analysis::{self, Bump, Diagnosis, MapDiagnosis};
use distmin_core::functional::{self, EnergyReport, Mode, Reparametrization};
use distmin_core::geometry::parametrize;
use distmin_core::io;
use distmin_core::optimizer::{self, InitKind, SolveResult, SolverConfig};
use distmin_core::tensor::{g_contract, strain};
use distmin_core::Error;

mod svg;

#[derive(Parser)]
#[command(name = "distmin", version, about = "Minimal-distortion maps between closed planar curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy of a given map between two curves
    Energy {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// Evaluate Φ through the curves as well as Ψ
        #[arg(long)]
        full_curve: bool,
        /// Reject self-intersecting curves
        #[arg(long)]
        strict: bool,
    },
    /// Numerically minimize Ψ between two curves
    Minimize {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value = "preserve")]
        orientation: Mode,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent runs with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        multistart: usize,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        /// Start from the linear map instead of a random monotone one
        #[arg(long)]
        linear_init: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plot the map against the linear map
        #[arg(long)]
        emit_svg: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
    /// Closed-form minimizers v, w and the minimal energy
    Analytic {
        #[arg(long)]
        lm: f64,
        #[arg(long)]
        ln: f64,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long)]
        out_v: Option<PathBuf>,
        #[arg(long)]
        out_w: Option<PathBuf>,
    },
    /// Classify a length ratio, optionally checking a map
    Diagnose {
        #[arg(long, requires = "ln")]
        lm: Option<f64>,
        #[arg(long, requires = "lm")]
        ln: Option<f64>,
        #[arg(long, required_unless_present = "lm")]
        map: Option<PathBuf>,
    },
    /// Second variation of a map along a zig-zag probe field
    SecondVariation {
        #[arg(long)]
        map: PathBuf,
        /// center,radius,epsilon
        #[arg(long, value_parser = parse_probe)]
        probe: (f64, f64, f64),
        /// Flow time for the finite-difference cross-check
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
    },
    /// Energies of the zig-zag minimizing sequence as CSV
    Sequence {
        #[arg(long)]
        lm: f64,
        #[arg(long)]
        ln: f64,
        #[arg(long)]
        kmax: usize,
        #[arg(long, default_value_t = 8192)]
        grid: usize,
        #[arg(long)]
        emit_svg: Option<PathBuf>,
    },
    /// G(B, B) and strain for a tensor fixture
    Tensor {
        #[arg(long)]
        fixture: PathBuf,
    },
}

fn parse_probe(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected center,radius,epsilon".into());
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.trim().parse().map_err(|e| format!("{p:?}: {e}"))?;
    }
    Ok((v[0], v[1], v[2]))
}

enum Failure {
    Core(Error),
    NotConverged,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

/// Rounds every float to 12 significant digits.
fn round_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or_default();
            let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_numbers).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_numbers(v))).collect()),
        other => other,
    }
}

fn emit(value: &impl Serialize) -> Result<(), Error> {
    let v = serde_json::to_value(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let text = serde_json::to_string_pretty(&round_numbers(v)).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn load_curve(path: &Path, strict: bool) -> Result<distmin_core::Curve, Error> {
    let c = io::read_curve(path, strict)?;
    c.orientation()?;
    Ok(c)
}

fn check_length(what: &str, expected: f64, got: f64) -> Result<(), Error> {
    if (expected - got).abs() > 1e-6 * expected {
        return Err(Error::LengthMismatch { expected, got }).inspect_err(|_| {
            log::error!("{what} curve length {got} does not match the map ({expected})");
        });
    }
    Ok(())
}

fn energy(source: &Path, target: &Path, map: &Path, full_curve: bool, strict: bool) -> Outcome {
    let (m_curve, n_curve) = (load_curve(source, strict)?, load_curve(target, strict)?);
    let u = io::read_map(map)?;
    check_length("source", u.source_length(), m_curve.arc_length())?;
    check_length("target", u.target_length(), n_curve.arc_length())?;
    let mut report: EnergyReport = functional::energy_report(&u)?;
    if full_curve {
        let m = u.intervals();
        let (pm, pn) = (parametrize(&m_curve, m)?, parametrize(&n_curve, m)?);
        report.phi = Some(functional::phi_curves(&pm, &pn, &u)?);
    }
    emit(&report)?;
    Ok(())
}

#[derive(Serialize)]
struct MinimizeOutput {
    l_m: f64,
    l_n: f64,
    grid: usize,
    seed: u64,
    runs: usize,
    #[serde(flatten)]
    result: SolveResult,
    /// Sup-norm distance to the closed-form minimizer of the same mode, when
    /// one exists.
    distance_to_closed_form: Option<f64>,
}

fn u_plot(u: &Reparametrization, reference: Option<&Reparametrization>) -> String {
    let series = |label, r: &Reparametrization| svg::Series {
        label,
        points: r.abscissae().into_iter().zip(r.values().iter().copied()).collect(),
    };
    let mut all = vec![series("u", u)];
    if let Some(r) = reference {
        all.push(series("closed form", r));
    }
    svg::line_plot("map u(t)", "t", "u", &all)
}

#[allow(clippy::too_many_arguments)]
fn minimize(
    source: &Path,
    target: &Path,
    mode: Mode,
    cfg: SolverConfig,
    runs: usize,
    linear_init: bool,
    out: Option<&Path>,
    plot: Option<&Path>,
    strict: bool,
) -> Outcome {
    let (l_m, l_n) = (
        load_curve(source, strict)?.arc_length(),
        load_curve(target, strict)?.arc_length(),
    );
    info!("L_M = {l_m}, L_N = {l_n}, ratio {}", l_n / l_m);
    let results = if linear_init {
        let init = optimizer::initialize(l_m, l_n, mode, cfg.grid_size, InitKind::Linear)?;
        vec![optimizer::minimize_psi(l_m, l_n, mode, &cfg, Some(&init))?]
    } else {
        optimizer::minimize_multistart(l_m, l_n, mode, &cfg, runs.max(1))?
    };
    let best = optimizer::best_of(&results)
        .cloned()
        .ok_or_else(|| Error::InvalidArgument("no solver runs".into()))?;
    let reference = analysis::analytic_minimizers(l_m, l_n, cfg.grid_size).ok().map(|a| match mode {
        Mode::Preserve => a.v,
        Mode::Reverse => a.w,
    });
    let distance = reference.as_ref().map(|r| {
        r.values()
            .iter()
            .zip(best.map().values())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
    });
    if let Some(path) = out {
        io::write_map(path, best.map())?;
    }
    if let Some(path) = plot {
        io::write_string(path, &u_plot(best.map(), reference.as_ref()))?;
    }
    let converged = best.converged;
    emit(&MinimizeOutput {
        l_m,
        l_n,
        grid: cfg.grid_size,
        seed: cfg.seed,
        runs: results.len(),
        result: best,
        distance_to_closed_form: distance,
    })?;
    if converged {
        Ok(())
    } else {
        Err(Failure::NotConverged)
    }
}

#[derive(Serialize)]
struct AnalyticOutput {
    l_m: f64,
    l_n: f64,
    grid: usize,
    phi_min: f64,
    psi_v: f64,
    psi_w: f64,
}

fn analytic(l_m: f64, l_n: f64, grid: usize, out_v: Option<&Path>, out_w: Option<&Path>) -> Outcome {
    let a = analysis::analytic_minimizers(l_m, l_n, grid)?;
    if let Some(p) = out_v {
        io::write_map(p, &a.v)?;
    }
    if let Some(p) = out_w {
        io::write_map(p, &a.w)?;
    }
    emit(&AnalyticOutput {
        l_m,
        l_n,
        grid,
        phi_min: a.phi_min,
        psi_v: functional::psi(&a.v)?,
        psi_w: functional::psi(&a.w)?,
    })?;
    Ok(())
}

#[derive(Serialize)]
struct DiagnoseOutput {
    #[serde(flatten)]
    diagnosis: Diagnosis,
    map: Option<MapDiagnosis>,
}

fn diagnose(lm: Option<f64>, ln: Option<f64>, map: Option<&Path>) -> Outcome {
    let u = map.map(io::read_map).transpose()?;
    let (l_m, l_n) = match (lm, ln, &u) {
        (Some(a), Some(b), _) => (a, b),
        (_, _, Some(u)) => (u.source_length(), u.target_length()),
        _ => return Err(Error::InvalidArgument("give --lm and --ln or --map".into()).into()),
    };
    let diagnosis = analysis::diagnose(l_m, l_n)?;
    let map = u.as_ref().map(analysis::diagnose_map).transpose()?;
    emit(&DiagnoseOutput { diagnosis, map })?;
    Ok(())
}

#[derive(Serialize)]
struct SecondVariationOutput {
    center: f64,
    radius: f64,
    eps: f64,
    delta: f64,
    second_variation: f64,
    flow_check: f64,
}

fn second_variation(map: &Path, (center, radius, eps): (f64, f64, f64), delta: f64) -> Outcome {
    let u = io::read_map(map)?;
    let probe = analysis::probe_field(eps, Bump { center, radius }, u.source_length(), u.intervals())?;
    let value = analysis::second_variation_1d(&u, probe.jet())?;
    let udot = analysis::slope_interpolant(&u);
    let check = probe.flow_second_difference(&udot, delta)?;
    emit(&SecondVariationOutput {
        center,
        radius,
        eps,
        delta,
        second_variation: value,
        flow_check: check,
    })?;
    Ok(())
}

fn sequence(l_m: f64, l_n: f64, kmax: usize, grid: usize, plot: Option<&Path>) -> Outcome {
    let report = analysis::sequence_report(l_m, l_n, kmax, grid)?;
    println!("k,width,psi");
    for r in &report.rows {
        println!("{},{:.11e},{:.11e}", r.k, r.width, r.psi);
    }
    if let Some(slope) = report.loglog_slope {
        info!("log-log slope over k >= 2: {slope:.4}");
    }
    if let Some(path) = plot {
        let points = report.rows.iter().map(|r| (r.k as f64, r.psi)).collect();
        let doc = svg::line_plot(
            "zig-zag minimizing sequence",
            "k",
            "psi",
            &[svg::Series { label: "psi(phi_k)", points }],
        );
        io::write_string(path, &doc)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TensorOutput {
    dim: usize,
    g_bb: f64,
    strain: Vec<Vec<f64>>,
    g_strain: f64,
}

fn tensor(fixture: &Path) -> Outcome {
    let f = io::parse_tensor_fixture(&io::read_to_string(fixture)?)?;
    let (g, b) = f.parts()?;
    let s = strain(&b, &g)?;
    emit(&TensorOutput {
        dim: f.dim,
        g_bb: g_contract(&b, &b, &g)?,
        g_strain: g_contract(&s, &s, &g)?,
        strain: s.to_rows(),
    })?;
    Ok(())
}

fn init_logging() {
    let level = match std::env::var("DISTMIN_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Error,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Energy {
            source,
            target,
            map,
            full_curve,
            strict,
        } => energy(&source, &target, &map, full_curve, strict),
        Command::Minimize {
            source,
            target,
            orientation,
            grid,
            seed,
            multistart,
            max_iters,
            linear_init,
            out,
            emit_svg,
            strict,
        } => {
            let cfg = SolverConfig {
                grid_size: grid,
                max_iters,
                seed,
                ..SolverConfig::default()
            };
            minimize(
                &source,
                &target,
                orientation,
                cfg,
                multistart,
                linear_init,
                out.as_deref(),
                emit_svg.as_deref(),
                strict,
            )
        }
        Command::Analytic {
            lm,
            ln,
            grid,
            out_v,
            out_w,
        } => analytic(lm, ln, grid, out_v.as_deref(), out_w.as_deref()),
        Command::Diagnose { lm, ln, map } => diagnose(lm, ln, map.as_deref()),
        Command::SecondVariation { map, probe, delta } => second_variation(&map, probe, delta),
        Command::Sequence {
            lm,
            ln,
            kmax,
            grid,
            emit_svg,
        } => sequence(lm, ln, kmax, grid, emit_svg.as_deref()),
        Command::Tensor { fixture } => tensor(&fixture),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotConverged) => ExitCode::from(3),
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_regime() { 2 } else { 1 })
        }
    }
}

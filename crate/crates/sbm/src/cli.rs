//! Subcommands of the `sbm` tool.

use crate::config;
use crate::error::{CliError, CliResult};
use crate::fexpr;
use crate::formats::{self, Metadata};
use crate::mc::{self, Runner};
use crate::validate::{self, Overrides, Suite};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use sbm_core::analytic::{sup_cdf_fixed_time, sup_tail, SupBeta, SupLawQuery};
use sbm_core::fksolver::{functional_transform, solve_rq, FdOptions};
use sbm_core::localtime::{profile, Normalization};
use sbm_core::rayknight::{synthesize_profile, RkFamily};
use sbm_core::sim::{
    simulate_markov, simulate_signflip, simulate_timechange, uniform_grid, Construction,
};
use sbm_core::stats::Moments;
use sbm_core::{RandomStream, SkewParam};
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "sbm",
    version,
    about = "Skew Brownian motion: simulation, local times, Ray-Knight profiles and supremum laws",
    after_help = "Every subcommand accepts --config FILE with key=value lines; explicit flags win."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate paths and summarize the terminal values.
    Simulate(SimulateArgs),
    /// Local-time profile of one simulated path.
    Localtime(LocalTimeArgs),
    /// Local-time profile synthesized from the Ray-Knight diffusions.
    Rayknight(RayKnightArgs),
    /// Tabulate the law of the supremum of local time.
    Suplaw(SupLawArgs),
    /// Feynman-Kac transform of a functional of the local-time profile.
    Functional(FunctionalArgs),
    /// Run a validation suite and report each criterion.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// CSV output file (standard output when omitted).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Workers {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstructionArg {
    Markov,
    Timechange,
    Signflip,
}

impl From<ConstructionArg> for Construction {
    fn from(c: ConstructionArg) -> Self {
        match c {
            ConstructionArg::Markov => Construction::MarkovKernel,
            ConstructionArg::Timechange => Construction::TimeChange,
            ConstructionArg::Signflip => Construction::SignFlip,
        }
    }
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    #[arg(long)]
    pub beta: f64,
    /// Time horizon.
    #[arg(long = "T", visible_alias = "horizon", default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 1000)]
    pub paths: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "markov")]
    pub construction: ConstructionArg,
    /// Also write every path to DIR/path_NNNNNN.csv.
    #[arg(long, value_name = "DIR")]
    pub path_dir: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
    #[command(flatten)]
    pub workers: Workers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Lebesgue,
    Speed,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct LocalTimeArgs {
    #[arg(long)]
    pub beta: f64,
    /// Stop at an independent exponential time with this rate.
    #[arg(long, conflicts_with = "t", required_unless_present = "t")]
    pub lambda: Option<f64>,
    /// Stop at this fixed time.
    #[arg(long = "T", visible_alias = "horizon")]
    pub t: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    /// Window half-width of the estimator.
    #[arg(long, visible_alias = "eps", default_value_t = 0.01)]
    pub epsilon: f64,
    /// Space grid `start:stop:step` (default: the path range, step epsilon).
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, value_enum, default_value = "lebesgue")]
    pub normalization: NormalizationArg,
    #[arg(long)]
    pub seed: u64,
    /// Index of the path drawn from the seed.
    #[arg(long, default_value_t = 0)]
    pub path: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    /// Lebesgue local time, jumps at 0.
    V,
    /// Speed-measure local time, continuous.
    U,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct RayKnightArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub lambda: f64,
    /// Endpoint `W(τ) = z > 0`.
    #[arg(long)]
    pub z: f64,
    #[arg(long, value_enum, default_value = "v")]
    pub family: FamilyArg,
    /// Space grid `start:stop:step` (default: the bulk of the profile, step 0.01).
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = sbm_core::rayknight::DEFAULT_DH)]
    pub dh: f64,
    #[arg(long)]
    pub seed: u64,
    /// Index of the profile drawn from the seed.
    #[arg(long, default_value_t = 0)]
    pub index: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    ExpTime,
    FixedTime,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SupLawArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// In (0, 1]; values below 1/2 are mirrored to 1 − β.
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// A single level.
    #[arg(long)]
    pub h: Option<f64>,
    /// Levels `start:stop:step`.
    #[arg(long, conflicts_with = "h")]
    pub h_grid: Option<String>,
    /// Times `start:stop:step` at a single level (fixed time only).
    #[arg(long, conflicts_with_all = ["t", "h_grid"])]
    pub t_grid: Option<String>,
    /// Largest number of series terms.
    #[arg(long, default_value_t = SupLawQuery::DEFAULT_TERMS)]
    pub terms: usize,
    /// Absolute accuracy of the series.
    #[arg(long, default_value_t = SupLawQuery::DEFAULT_TOLERANCE)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct FunctionalArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub lambda: f64,
    /// Level, or `inf`.
    #[arg(long)]
    pub h: String,
    /// The functional, e.g. `2*v^2 + ind(1,inf)`.
    #[arg(long)]
    pub f: String,
    /// Minimum number of grid nodes.
    #[arg(long, default_value_t = 2000)]
    pub nodes: usize,
    /// Write `v,R,Q` to this file.
    #[arg(long, value_name = "FILE")]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct ValidateArgs {
    /// jump, rayknight, suplaw-mc, fk-oracles or construction-agreement.
    #[arg(long)]
    pub suite: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Restrict the suite to one β.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Paths per sample set.
    #[arg(long)]
    pub paths: Option<u64>,
    #[command(flatten)]
    pub workers: Workers,
}

/// Parses, runs and returns the exit code. Diagnostics go to standard
/// error.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let args = match config::expand_args(args) {
        Ok(a) => a,
        Err(e) => return report(e),
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let command_line = args[1..].join(" ");
    match run(cli, &command_line) {
        Ok(()) => 0,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> i32 {
    eprintln!("sbm: {e}");
    e.exit_code()
}

pub fn run(cli: Cli, command_line: &str) -> CliResult<()> {
    let meta = Metadata::new()
        .with("sbm", env!("CARGO_PKG_VERSION"))
        .with("command", command_line);
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, meta),
        Command::Localtime(a) => cmd_localtime(&a, meta),
        Command::Rayknight(a) => cmd_rayknight(&a, meta),
        Command::Suplaw(a) => cmd_suplaw(&a, meta),
        Command::Functional(a) => cmd_functional(&a, meta),
        Command::Validate(a) => cmd_validate(&a),
    }
}

fn positive(name: &str, x: f64) -> CliResult<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!(
            "--{name} must be positive, got {x}"
        )))
    }
}

fn beta_open(beta: f64) -> CliResult<SkewParam> {
    SkewParam::new(beta)
        .map_err(|_| CliError::Config(format!("--beta must lie in (0, 1), got {beta}")))
}

/// `start:stop:step`, both ends included.
pub fn parse_range(name: &str, s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Config(format!("--{name} expects start:stop:step, got '{s}'"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<_>>()?;
    let [a, b, step] = parts[..] else {
        return Err(bad());
    };
    if !(a.is_finite() && b.is_finite() && step > 0.0 && step.is_finite() && b >= a) {
        return Err(bad());
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    if n > 10_000_000 {
        return Err(CliError::Config(format!("--{name} has too many points")));
    }
    // rounding keeps printed grid points short
    Ok((0..=n)
        .map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn cmd_simulate(a: &SimulateArgs, meta: Metadata) -> CliResult<()> {
    let p = beta_open(a.beta)?;
    positive("T", a.t)?;
    positive("dt", a.dt)?;
    if a.paths == 0 {
        return Err(CliError::Config("--paths must be at least 1".into()));
    }
    let run = Runner::new(a.workers.workers)?;
    let construction = Construction::from(a.construction);
    let w = mc::terminal_values(&run, construction, &p, a.dt, a.t, a.paths, a.seed)?;
    let meta = meta
        .with("beta", a.beta)
        .with("T", a.t)
        .with("dt", a.dt)
        .with("paths", a.paths)
        .with("seed", a.seed)
        .with("construction", construction.name());
    if let Some(out) = &a.output.output {
        let rows = w.iter().enumerate().map(|(i, &x)| vec![i as f64, x]);
        formats::write_table(formats::output(Some(out))?, &meta, &["path", "w"], rows)?;
    }
    if let Some(dir) = &a.path_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let grid = uniform_grid(a.dt, a.t)?;
        for i in 0..a.paths {
            let mut r = RandomStream::for_path(a.seed, i);
            let path = match construction {
                Construction::MarkovKernel => simulate_markov(&p, &grid, 0.0, &mut r)?,
                Construction::TimeChange => simulate_timechange(&p, a.dt, a.t, &mut r)?,
                Construction::SignFlip => simulate_signflip(&p, a.dt, a.t, &mut r)?,
            };
            let file = dir.join(format!("path_{i:06}.csv"));
            formats::write_path(
                formats::output(Some(&file))?,
                &meta.clone().with("path", i),
                &path,
            )?;
        }
    }
    let mut m = Moments::default();
    w.iter().for_each(|&x| m.push(x));
    let positive_fraction = w.iter().filter(|&&x| x > 0.0).count() as f64 / w.len() as f64;
    println!(
        "paths={} mean={:.6} variance={:.6} positive_fraction={:.6}",
        w.len(),
        m.mean(),
        m.variance(),
        positive_fraction
    );
    Ok(())
}

fn cmd_localtime(a: &LocalTimeArgs, meta: Metadata) -> CliResult<()> {
    let p = beta_open(a.beta)?;
    positive("dt", a.dt)?;
    positive("epsilon", a.epsilon)?;
    let mut r = RandomStream::for_path(a.seed, a.path);
    let (t, meta) = match (a.lambda, a.t) {
        (Some(lambda), None) => {
            positive("lambda", lambda)?;
            let u: f64 = r.split(u64::MAX).random();
            let tau = -(1.0 - u).ln() / lambda;
            (tau, meta.with("lambda", lambda).with("tau", tau))
        }
        (None, Some(t)) => (positive("T", t)?, meta),
        _ => {
            return Err(CliError::Config(
                "give exactly one of --lambda and --T".into(),
            ))
        }
    };
    let path = simulate_markov(&p, &uniform_grid(a.dt, t)?, 0.0, &mut r)?;
    let xs = match &a.grid {
        Some(g) => parse_range("grid", g)?,
        None => {
            let (lo, hi) = path
                .values()
                .iter()
                .fold((0.0f64, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
            let e = a.epsilon;
            let start = ((lo / e).floor() - 2.0) * e;
            let stop = ((hi / e).ceil() + 2.0) * e;
            parse_range("grid", &format!("{start}:{stop}:{e}"))?
        }
    };
    let norm = match a.normalization {
        NormalizationArg::Lebesgue => Normalization::Lebesgue,
        NormalizationArg::Speed => Normalization::SpeedMeasure,
    };
    let prof = profile(&p, &path, &xs, a.epsilon, norm)?;
    let meta = meta
        .with("beta", a.beta)
        .with("dt", a.dt)
        .with("seed", a.seed)
        .with("path", a.path);
    formats::write_profile(formats::output(a.output.output.as_deref())?, &meta, &prof)?;
    let sup = prof.values.iter().fold(0.0f64, |m, &v| m.max(v));
    let at0 = prof.value_at(0.0);
    let summary = format!(
        "t={t:.6} sup={sup:.6} at_zero={}",
        at0.map_or("nan".into(), |v| format!("{v:.6}"))
    );
    if a.output.output.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn cmd_rayknight(a: &RayKnightArgs, meta: Metadata) -> CliResult<()> {
    let p = beta_open(a.beta)?;
    positive("lambda", a.lambda)?;
    positive("dh", a.dh)?;
    if !(a.z > 0.0 && a.z.is_finite()) {
        return Err(CliError::Config(format!(
            "--z must be positive, got {}; for z < 0 synthesize with beta -> 1 - beta and z -> -z, then mirror the grid",
            a.z
        )));
    }
    let ys = match &a.grid {
        Some(g) => parse_range("grid", g)?,
        None => {
            let reach = 6.0 / (2.0 * a.lambda).sqrt();
            let step = 0.01;
            let start = -(reach / step).ceil() * step;
            let stop = ((a.z + reach) / step).ceil() * step;
            parse_range("grid", &format!("{start}:{stop}:{step}"))?
        }
    };
    let family = match a.family {
        FamilyArg::V => RkFamily::V,
        FamilyArg::U => RkFamily::U,
    };
    let r = RandomStream::for_path(a.seed, a.index);
    let prof = synthesize_profile(family, &p, a.lambda, a.z, &ys, a.dh, &r)?;
    let meta = meta
        .with("beta", a.beta)
        .with("seed", a.seed)
        .with("index", a.index);
    formats::write_rk_profile(formats::output(a.output.output.as_deref())?, &meta, &prof)?;
    let end = |e: Option<f64>| e.map_or("none".to_string(), |x| format!("{x:.6}"));
    let summary = format!(
        "z={} v0={:.6} sup={:.6} left_end={} right_end={}",
        a.z,
        prof.v0,
        prof.sup(),
        end(prof.left_end),
        end(prof.right_end)
    );
    if a.output.output.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

fn cmd_suplaw(a: &SupLawArgs, meta: Metadata) -> CliResult<()> {
    if !(a.beta > 0.0 && a.beta <= 1.0) {
        return Err(CliError::Config(format!(
            "--beta must lie in (0, 1], got {}",
            a.beta
        )));
    }
    let beta = if a.beta < 0.5 {
        let m = 1.0 - a.beta;
        eprintln!(
            "note: beta={} mapped to {m} (the law is symmetric under beta -> 1 - beta)",
            a.beta
        );
        m
    } else {
        a.beta
    };
    let law = SupBeta::new(beta)?;
    let levels = |a: &SupLawArgs| -> CliResult<Vec<f64>> {
        match (&a.h, &a.h_grid) {
            (Some(h), None) => Ok(vec![*h]),
            (None, Some(g)) => parse_range("h-grid", g),
            _ => Err(CliError::Config("give --h or --h-grid".into())),
        }
    };
    let meta = meta.with("beta", beta);
    let out = formats::output(a.output.output.as_deref())?;
    match a.mode {
        ModeArg::ExpTime => {
            let lambda = positive(
                "lambda",
                a.lambda
                    .ok_or_else(|| CliError::Config("exp-time needs --lambda".into()))?,
            )?;
            if a.t.is_some() || a.t_grid.is_some() {
                return Err(CliError::Config("exp-time takes --lambda, not --t".into()));
            }
            let hs = levels(a)?;
            let rows = hs
                .iter()
                .map(|&h| Ok(vec![h, sup_tail(law, lambda, h)?]))
                .collect::<CliResult<Vec<_>>>()?;
            let meta = meta
                .with("mode", "exp-time")
                .with("lambda", lambda)
                .with("probability", "P(sup_y l(tau,y) > h)")
                .with("terms", 0)
                .with("tail_bound", 0);
            formats::write_table(out, &meta, &["h", "probability"], rows)
        }
        ModeArg::FixedTime => {
            if a.lambda.is_some() {
                return Err(CliError::Config(
                    "fixed-time takes --t, not --lambda".into(),
                ));
            }
            let (key, points, fixed): (&str, Vec<(f64, f64)>, _) = match (&a.t, &a.t_grid) {
                (Some(t), None) => {
                    let t = positive("t", *t)?;
                    (
                        "h",
                        levels(a)?.into_iter().map(|h| (t, h)).collect(),
                        ("t", t),
                    )
                }
                (None, Some(g)) => {
                    let h =
                        a.h.ok_or_else(|| CliError::Config("--t-grid needs a single --h".into()))?;
                    let ts = parse_range("t-grid", g)?;
                    ("t", ts.into_iter().map(|t| (t, h)).collect(), ("h", h))
                }
                _ => return Err(CliError::Config("fixed-time needs --t or --t-grid".into())),
            };
            let mut terms = 0;
            let mut bound = 0.0f64;
            let mut rows = Vec::with_capacity(points.len());
            for (t, h) in points {
                let q = SupLawQuery::fixed(law, positive("t", t)?, h)?
                    .with_terms(a.terms)
                    .with_tolerance(a.tol);
                let v = sup_cdf_fixed_time(&q)?;
                terms = terms.max(v.terms);
                bound = bound.max(v.tail_bound);
                rows.push(vec![if key == "h" { h } else { t }, v.cdf]);
            }
            let meta = meta
                .with("mode", "fixed-time")
                .with(fixed.0, fixed.1)
                .with("probability", "P(sup_y l(t,y) <= h)")
                .with("terms", terms)
                .with("tail_bound", format!("{bound:e}"));
            formats::write_table(out, &meta, &[key, "probability"], rows)
        }
    }
}

fn cmd_functional(a: &FunctionalArgs, meta: Metadata) -> CliResult<()> {
    let p = beta_open(a.beta)?;
    positive("lambda", a.lambda)?;
    let h = match a.h.trim() {
        "inf" | "infinity" => f64::INFINITY,
        s => positive(
            "h",
            s.parse()
                .map_err(|_| CliError::Config(format!("--h expects a number or inf, got '{s}'")))?,
        )?,
    };
    let expr = fexpr::parse(&a.f).map_err(|e| CliError::Config(e.to_string()))?;
    let f = expr.to_function();
    let opts = FdOptions {
        nodes: a.nodes,
        ..FdOptions::default()
    };
    let value = functional_transform(&p, a.lambda, &f, h, &opts)?;
    println!("{value}");
    if let Some(file) = &a.dump {
        let (r, q) = solve_rq(a.lambda, &f, h, &opts)?;
        let meta = meta
            .with("beta", a.beta)
            .with("lambda", a.lambda)
            .with("h", &a.h)
            .with("f", &a.f)
            .with(
                "residual_norm",
                format!("{:e}", r.residual_norm.max(q.residual_norm)),
            )
            .with("transform", value);
        let rows = r
            .grid()
            .iter()
            .zip(r.values())
            .map(|(&v, &rv)| Ok(vec![v, rv, q.value_at(v)?]))
            .collect::<CliResult<Vec<_>>>()?;
        formats::write_table(formats::output(Some(file))?, &meta, &["v", "R", "Q"], rows)?;
    }
    Ok(())
}

fn cmd_validate(a: &ValidateArgs) -> CliResult<()> {
    let suite = Suite::parse(&a.suite)?;
    if let Some(b) = a.beta {
        let ok = match suite {
            Suite::SupLawMc => b > 0.0 && b <= 1.0,
            _ => b > 0.0 && b < 1.0,
        };
        if !ok {
            return Err(CliError::Config(format!("--beta out of range: {b}")));
        }
    }
    if a.paths == Some(0) {
        return Err(CliError::Config("--paths must be at least 1".into()));
    }
    let run = Runner::new(a.workers.workers)?;
    let o = Overrides {
        seed: a.seed,
        beta: a.beta,
        paths: a.paths,
    };
    let checks = validate::run_suite(&run, suite, &o)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "suite {} (seed {})", suite.name(), a.seed)?;
    for c in &checks {
        writeln!(stdout, "{c}")?;
    }
    validate::require(&checks)
}

mod config;

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use noisy_cycles::analysis::{
    acv_formula, averaged_periodogram, kde, kurtosis, psd_formula, sample_acv, Window,
};
use noisy_cycles::fit::{fit, FitProblem, Target};
use noisy_cycles::frame::{
    build_frame, find_limit_cycle, reconstruct, reduce, simulate_reduced, CycleSearch,
};
use noisy_cycles::hopf::{
    on_cycle_start, sigma_for_nsr, simulate_hopf_exact, simulate_hopf_linear, HopfDrift,
    HopfParams, LinearOptions, SingularityPolicy,
};
use noisy_cycles::io::{
    acv_table, cycle_frame_table, density_table, phase_deviation_table, psd_table,
    trajectory_table, write_json, Table,
};
use noisy_cycles::presets::Preset;
use noisy_cycles::rng::sub_seed;
use noisy_cycles::sde::{IntegratorConfig, SdeSystem};
use noisy_cycles::validation::{self, Outcome, ValidationOptions, CRITERIA};
use noisy_cycles::{Error, Parallelism};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "noisy-cycles", version, about = "Simulate, decompose and fit noisy limit cycles")]
struct Cli {
    /// JSON object whose keys set flags of the chosen subcommand
    /// (`{"nsr": 0.1, "periods": 100}`); explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for ensemble work (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate sample paths and write trajectory CSVs.
    Simulate(SimulateArgs),
    /// Find the limit cycle of a preset ODE and write the cycle and comoving frame.
    Decompose(DecomposeArgs),
    /// Estimate ACV, PSD, density or kurtosis of a CSV column.
    Analyze(AnalyzeArgs),
    /// Evaluate the ACV or PSD template on a grid.
    Formula(FormulaArgs),
    /// Least-squares fit of the ACV or PSD template to a curve.
    Fit(FitArgs),
    /// Run the acceptance checks and print a pass/fail table.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
struct HopfArgs {
    /// Cycle radius.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Angular frequency on the cycle.
    #[arg(long, default_value_t = 2.0 * PI)]
    alpha: f64,
    /// Angular frequency near the focus (default: alpha).
    #[arg(long)]
    alpha0: Option<f64>,
    /// Radial decay rate; the cycle's Lyapunov exponent is -lambda.
    #[arg(long = "lambda", default_value_t = 2.0 * PI)]
    lambda_: f64,
    /// Noise amplitude.
    #[arg(long, conflicts_with = "nsr")]
    sigma: Option<f64>,
    /// Noise-to-signal ratio sqrt(sigma^2 / (2 lambda)) / r, instead of sigma.
    #[arg(long)]
    nsr: Option<f64>,
}

impl HopfArgs {
    fn params(&self) -> Result<HopfParams, CliError> {
        let alpha0 = self.alpha0.unwrap_or(self.alpha);
        let sigma = match (self.sigma, self.nsr) {
            (Some(s), None) => s,
            (None, Some(n)) => {
                if !(n >= 0.0) {
                    return Err(CliError::usage(format!("--nsr must be >= 0, got {n}")));
                }
                sigma_for_nsr(self.lambda_, self.r, n)
            }
            (None, None) => return Err(CliError::usage("one of --sigma or --nsr is required")),
            (Some(_), Some(_)) => {
                return Err(CliError::usage("--sigma and --nsr are mutually exclusive"))
            }
        };
        HopfParams::new(self.alpha, alpha0, self.lambda_, self.r, sigma).map_err(CliError::from)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    HopfExact,
    HopfLinear,
    HopfLeading,
    Reduced,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OnSingularity {
    Error,
    Continue,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    Hopf,
    VanDerPol,
    CoupledHopf,
    LinearSpiral,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Hopf => Preset::Hopf,
            PresetArg::VanDerPol => Preset::VanDerPol,
            PresetArg::CoupledHopf => Preset::CoupledHopf,
            PresetArg::LinearSpiral => Preset::LinearSpiral,
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[command(flatten)]
    hopf: HopfArgs,
    /// System for `--model reduced`; `hopf` uses the Hopf flags above.
    #[arg(long, value_enum, default_value = "hopf")]
    preset: PresetArg,
    /// van der Pol parameter.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Integration step (default: 1e-4 of the period 2π/alpha).
    #[arg(long)]
    dt: Option<f64>,
    /// Integration steps per written sample.
    #[arg(long, default_value_t = 100)]
    substeps: usize,
    /// Number of written samples after the initial state.
    #[arg(long, conflicts_with = "periods")]
    steps: Option<usize>,
    /// Length of the run in periods 2π/alpha.
    #[arg(long)]
    periods: Option<f64>,
    /// Number of independent paths; path k uses a seed derived from (seed, k).
    #[arg(long, default_value_t = 1)]
    paths: usize,
    #[arg(long, env = "NOISY_CYCLES_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "error")]
    on_singularity: OnSingularity,
    /// Output CSV (one path) or file stem (`<stem>_<k>.csv` for several paths).
    /// Writes to stdout when omitted and a single path is requested.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[arg(long, value_enum)]
    preset: PresetArg,
    /// van der Pol parameter.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Samples per period.
    #[arg(long, default_value_t = 1024)]
    grid_size: usize,
    /// Closure tolerance of the period search.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Starting point (comma separated); default depends on the preset.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    initial: Option<Vec<f64>>,
    /// Cycle/frame CSV (`t, L_i, T_i, speed, kappa, U_ij`).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Period, Floquet multipliers and frame diagnostics as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    Acv,
    Psd,
    Kde,
    Kurtosis,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WindowArg {
    Rectangular,
    Hann,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Input CSV; repeat to average periodograms over several paths.
    #[arg(long, short, required = true)]
    input: Vec<PathBuf>,
    /// Column to analyse (default: first column other than `t`).
    #[arg(long)]
    column: Option<String>,
    /// Sampling interval (default: from the `t` column).
    #[arg(long)]
    dt: Option<f64>,
    /// Largest ACV lag (default: a quarter of the series length).
    #[arg(long)]
    max_lag: Option<f64>,
    /// Discard samples with `t` below this value.
    #[arg(long, default_value_t = 0.0)]
    skip: f64,
    #[arg(long, value_enum, default_value = "rectangular")]
    window: WindowArg,
    /// KDE grid points.
    #[arg(long, default_value_t = 512)]
    grid_size: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Template {
    Acv,
    Psd,
}

#[derive(Args, Debug)]
struct FormulaArgs {
    #[arg(long, value_enum)]
    template: Template,
    #[command(flatten)]
    hopf: HopfArgs,
    /// Largest lag for the ACV template.
    #[arg(long, default_value_t = 5.0)]
    umax: f64,
    /// Lag step.
    #[arg(long, default_value_t = 1e-3)]
    du: f64,
    /// Largest angular frequency for the PSD template (default: 4 alpha).
    #[arg(long)]
    omega_max: Option<f64>,
    /// Number of frequency points.
    #[arg(long, default_value_t = 2001)]
    points: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    target: Target,
    /// Curve CSV: `lag,acv` or `omega,psd` as written by `analyze`.
    #[arg(long, short)]
    input: PathBuf,
    /// Grid column (default: `lag` or `omega`).
    #[arg(long)]
    grid_column: Option<String>,
    /// Value column (default: `acv` or `psd`).
    #[arg(long)]
    column: Option<String>,
    /// FitResult JSON; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Criteria to run (default: all).
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<u8>,
    /// Monthly N3.4 anomaly CSV for the El Niño criterion.
    #[arg(long, env = "NOISY_CYCLES_NINO34")]
    nino34: Option<PathBuf>,
    #[arg(long)]
    nino34_column: Option<String>,
    /// Run ensembles on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::overlay(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("usage error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("usage error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("usage error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Decompose(a) => decompose(a),
        Command::Analyze(a) => analyze(a),
        Command::Formula(a) => formula(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

fn emit(table: &Table, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(p) => table.write(p)?,
        None => match table.write_to(std::io::stdout().lock()) {
            // A closed pipe (`| head`) is not an error.
            Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(())
}

fn numbered(stem: &Path, k: usize) -> PathBuf {
    let base = stem.with_extension("");
    let name = format!(
        "{}_{k}.csv",
        base.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    );
    base.with_file_name(name)
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let params = a.hopf.params()?;
    let period = params.period();
    let dt = a.dt.unwrap_or(period * 1e-4);
    if !(dt > 0.0) || a.substeps == 0 {
        return Err(CliError::usage("--dt must be positive and --substeps at least 1"));
    }
    let steps = match (a.steps, a.periods) {
        (Some(s), _) => s,
        (None, Some(p)) if p > 0.0 => (p * period / (dt * a.substeps as f64)).round() as usize,
        (None, Some(p)) => return Err(CliError::usage(format!("--periods must be > 0, got {p}"))),
        (None, None) => return Err(CliError::usage("one of --steps or --periods is required")),
    };
    if steps == 0 {
        return Err(CliError::usage("the run must contain at least one step"));
    }
    if a.paths == 0 {
        return Err(CliError::usage("--paths must be at least 1"));
    }
    if a.paths > 1 && a.output.is_none() {
        return Err(CliError::usage("--output is required for more than one path"));
    }
    let seed_of = |k: usize| if a.paths == 1 { a.seed } else { sub_seed(a.seed, k as u64) };
    let options = LinearOptions {
        leading_order: matches!(a.model, Model::HopfLeading),
        singularity: match a.on_singularity {
            OnSingularity::Error => SingularityPolicy::Error,
            OnSingularity::Continue => SingularityPolicy::Continue,
        },
    };

    // The reduced model needs the cycle and frame once for all paths.
    let reduced = if let Model::Reduced = a.model {
        let preset: Preset = a.preset.into();
        let (system, guess) = match preset {
            Preset::Hopf => {
                let det = HopfParams { sigma: 0.0, ..params };
                let sys = SdeSystem::deterministic(Arc::new(HopfDrift(det)))?;
                (sys, on_cycle_start(&params))
            }
            p => (p.system(a.mu, 0.0)?, p.initial_guess()),
        };
        let cycle = find_limit_cycle(&system, &guess, &CycleSearch::default())?;
        let frame = build_frame(&cycle)?;
        let model = reduce(&cycle, &frame, params.sigma)?;
        Some((cycle, frame, model))
    } else {
        None
    };

    for k in 0..a.paths {
        let seed = seed_of(k);
        let table = match a.model {
            Model::HopfExact => {
                let cfg = IntegratorConfig::new(dt, steps, on_cycle_start(&params))
                    .with_substeps(a.substeps)
                    .with_seed(seed);
                trajectory_table(&simulate_hopf_exact(&params, &cfg)?)
            }
            Model::HopfLinear | Model::HopfLeading => {
                let cfg = IntegratorConfig::new(dt, steps, vec![0.0, 0.0])
                    .with_substeps(a.substeps)
                    .with_seed(seed);
                phase_deviation_table(&simulate_hopf_linear(&params, &cfg, options)?)
            }
            Model::Reduced => {
                let (cycle, frame, model) = reduced.as_ref().expect("built above");
                let init = vec![0.0; model.deviation_dim() + 1];
                let cfg = IntegratorConfig::new(dt, steps, init)
                    .with_substeps(a.substeps)
                    .with_seed(seed);
                let path = simulate_reduced(model, &cfg)?;
                let traj = reconstruct(cycle, frame, &path)?;
                let mut table = trajectory_table(&traj);
                let phase = path.to_trajectory();
                for j in 0..phase.width() {
                    table.headers.push(phase.channel_labels[j].clone());
                    table.columns.push(phase.column(j));
                }
                table
            }
        };
        let out = a
            .output
            .as_deref()
            .map(|p| if a.paths == 1 { p.to_path_buf() } else { numbered(p, k) });
        emit(&table, out.as_deref())?;
    }
    Ok(())
}

fn decompose(a: DecomposeArgs) -> Result<(), CliError> {
    let preset: Preset = a.preset.into();
    let system = preset.system(a.mu, 0.0)?;
    let guess = a.initial.unwrap_or_else(|| preset.initial_guess());
    if guess.len() != system.dimension() {
        return Err(CliError::usage(format!(
            "--initial needs {} components, got {}",
            system.dimension(),
            guess.len()
        )));
    }
    if a.grid_size < 8 || !(a.tol > 0.0) {
        return Err(CliError::usage("--grid-size must be >= 8 and --tol > 0"));
    }
    let search = CycleSearch {
        tol: a.tol,
        grid_size: a.grid_size,
        ..CycleSearch::default()
    };
    let cycle = find_limit_cycle(&system, &guess, &search)?;
    let frame = build_frame(&cycle)?;
    let model = reduce(&cycle, &frame, 0.0)?;
    let summary = serde_json::json!({
        "period": cycle.period,
        "closure_error": cycle.closure_error,
        "dimension": cycle.dimension(),
        "grid_size": cycle.grid_size(),
        "multipliers": model
            .multipliers
            .iter()
            .map(|m| [m.re, m.im])
            .collect::<Vec<_>>(),
        "spectral_radius": model.spectral_radius,
        "frame_periodic": frame.is_periodic(1e-8),
        "max_orthogonality_defect": frame.max_orthogonality_defect(),
        "max_tangent_error": frame.max_tangent_error(&cycle),
    });
    match &a.summary {
        Some(p) => write_json(p, &summary)?,
        None if a.output.is_some() => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
        }
        None => {}
    }
    let table = cycle_frame_table(&cycle, &frame);
    emit(&table, a.output.as_deref())
}

struct Series {
    dt: f64,
    values: Vec<f64>,
}

fn load_series(path: &Path, column: Option<&str>, dt: Option<f64>, skip: f64) -> Result<Series, CliError> {
    let table = Table::read(path)?;
    let name = match column {
        Some(c) => c.to_string(),
        None => table
            .headers
            .iter()
            .find(|h| h.as_str() != "t")
            .cloned()
            .ok_or_else(|| CliError::usage(format!("{}: no data column", path.display())))?,
    };
    let values = table.column(&name).ok_or_else(|| {
        CliError::usage(format!(
            "{}: no column '{name}' (have: {})",
            path.display(),
            table.headers.join(", ")
        ))
    })?;
    let t = table.column("t");
    let dt = match (dt, t) {
        (Some(d), _) if d > 0.0 => d,
        (Some(d), _) => return Err(CliError::usage(format!("--dt must be > 0, got {d}"))),
        (None, Some(t)) if t.len() >= 2 && t[1] > t[0] => t[1] - t[0],
        _ => {
            return Err(CliError::usage(format!(
                "{}: cannot infer the sampling interval; pass --dt",
                path.display()
            )))
        }
    };
    let start = match t {
        Some(t) if skip > 0.0 => t.iter().position(|&x| x >= skip).unwrap_or(t.len()),
        _ if skip > 0.0 => (skip / dt).ceil() as usize,
        _ => 0,
    };
    let values = values.get(start..).unwrap_or(&[]).to_vec();
    if values.len() < 2 {
        return Err(CliError::usage(format!("{}: fewer than 2 samples", path.display())));
    }
    Ok(Series { dt, values })
}

fn analyze(a: AnalyzeArgs) -> Result<(), CliError> {
    let series: Vec<Series> = a
        .input
        .iter()
        .map(|p| load_series(p, a.column.as_deref(), a.dt, a.skip))
        .collect::<Result<_, _>>()?;
    if !matches!(a.method, Method::Psd) && series.len() > 1 {
        return Err(CliError::usage("only --method psd accepts several inputs"));
    }
    let s = &series[0];
    match a.method {
        Method::Acv => {
            let max_lag = a.max_lag.unwrap_or(s.values.len() as f64 * s.dt / 4.0);
            let acv = sample_acv(&s.values, s.dt, max_lag)?;
            emit(&acv_table(&acv), a.output.as_deref())
        }
        Method::Psd => {
            let dt = s.dt;
            if series.iter().any(|x| (x.dt - dt).abs() > 1e-12 * dt) {
                return Err(CliError::usage("inputs have different sampling intervals"));
            }
            let paths: Vec<Vec<f64>> = series.into_iter().map(|x| x.values).collect();
            let window = match a.window {
                WindowArg::Rectangular => Window::Rectangular,
                WindowArg::Hann => Window::Hann,
            };
            let psd = averaged_periodogram(&paths, dt, window, Parallelism::Parallel)?;
            emit(&psd_table(&psd), a.output.as_deref())
        }
        Method::Kde => {
            let d = kde(&s.values, a.grid_size, Parallelism::Parallel)?;
            emit(&density_table(&d), a.output.as_deref())
        }
        Method::Kurtosis => {
            let k = kurtosis(&s.values)?;
            match &a.output {
                Some(p) => write_json(p, &serde_json::json!({ "kurtosis": k, "n": s.values.len() }))?,
                None => println!("{}", noisy_cycles::io::fmt_f64(k)),
            }
            Ok(())
        }
    }
}

fn formula(a: FormulaArgs) -> Result<(), CliError> {
    let p = a.hopf.params()?;
    let table = match a.template {
        Template::Acv => {
            if !(a.du > 0.0) || !(a.umax >= 0.0) {
                return Err(CliError::usage("--du must be > 0 and --umax >= 0"));
            }
            let n = (a.umax / a.du).round() as usize;
            let lags: Vec<f64> = (0..=n).map(|k| k as f64 * a.du).collect();
            let values = lags.iter().map(|&u| acv_formula(&p, u)).collect();
            Table::new(vec!["lag".into(), "acv".into()], vec![lags, values])?
        }
        Template::Psd => {
            let w_max = a.omega_max.unwrap_or(4.0 * p.alpha);
            if !(w_max > 0.0) || a.points < 2 {
                return Err(CliError::usage("--omega-max must be > 0 and --points >= 2"));
            }
            let omegas: Vec<f64> = (0..a.points)
                .map(|k| k as f64 * w_max / (a.points - 1) as f64)
                .collect();
            let values = omegas
                .iter()
                .map(|&w| psd_formula(&p, w))
                .collect::<Result<Vec<_>, _>>()?;
            Table::new(vec!["omega".into(), "psd".into()], vec![omegas, values])?
        }
    };
    emit(&table, a.output.as_deref())
}

fn fit_cmd(a: FitArgs) -> Result<(), CliError> {
    let table = Table::read(&a.input)?;
    let (grid_default, value_default) = match a.target {
        Target::Acv => ("lag", "acv"),
        Target::Psd => ("omega", "psd"),
    };
    let pick = |name: &str| {
        table.column(name).map(<[f64]>::to_vec).ok_or_else(|| {
            CliError::usage(format!(
                "{}: no column '{name}' (have: {})",
                a.input.display(),
                table.headers.join(", ")
            ))
        })
    };
    let grid = pick(a.grid_column.as_deref().unwrap_or(grid_default))?;
    let values = pick(a.column.as_deref().unwrap_or(value_default))?;
    let problem = FitProblem {
        target: a.target,
        grid,
        values,
        bounds: None,
        initial: None,
    };
    let result = fit(&problem)?;
    match &a.output {
        Some(p) => write_json(p, &result)?,
        None => {
            let mut out = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &result).expect("json");
            let _ = writeln!(out);
        }
    }
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<(), CliError> {
    let ids: Vec<u8> = if a.criteria.is_empty() {
        CRITERIA.iter().map(|(id, _)| *id).collect()
    } else {
        a.criteria
    };
    let opts = ValidationOptions {
        mode: if a.sequential {
            Parallelism::Sequential
        } else {
            Parallelism::Parallel
        },
        nino34: a.nino34,
        nino34_column: a.nino34_column,
    };
    let mut failed = Vec::new();
    for id in ids {
        let report = validation::run(id, &opts)?;
        println!("{report}");
        if report.outcome == Outcome::Fail {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "failed criteria: {}",
            failed.iter().map(u8::to_string).collect::<Vec<_>>().join(", ")
        )))
    }
}

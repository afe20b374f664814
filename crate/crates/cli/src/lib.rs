//! Argument parsing and command pipelines for the `thermolab` binary.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use thermolab_core::discretization::{assemble, static_solve, Grid, SemiDiscreteSystem, Variant};
use thermolab_core::dynamics::{fit_decay, initial_state, simulate, InitialData, Scheme, SimConfig};
use thermolab_core::envelope::{
    build_envelope, envelope_compare, estimate_c_lemma, validate_damping, DampingLaw, EnvelopeComparison,
};
use thermolab_core::io::{ensure_dir, fmt_f64, read_trace, write_csv, write_summary, write_trace, write_vector};
use thermolab_core::material::{check_positivity, expand_isotropic, load_params, IsotropicParams, LawKind};
use thermolab_core::modes::{resolvent_blowup_scan, BlowupTable};
use thermolab_core::observability::{from_discretization, verify_theorem_a, AbstractPair};
use thermolab_core::LabError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "thermolab", version, about = "Strain-gradient thermoelasticity laboratory")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Expand a parameter file and report positivity margins.
    CheckCoeffs(CoeffArgs),
    /// Scan the explicit mode family and report resolvent growth.
    Counterexample(CounterArgs),
    /// Time-integrate a semi-discrete system and write its energy trace.
    Simulate(SimArgs),
    /// Fit an exponential envelope to a saved trace.
    DecayFit(FitArgs),
    /// Compare saved traces with the nonlinear decay envelope.
    Envelope(EnvArgs),
    /// Check the stability/observability inequality chain on a pair.
    Observability(ObsArgs),
    /// Solve the stationary problem for a seeded right-hand side.
    StaticSolve(StaticArgs),
}

#[derive(Args, Debug)]
pub struct OutArg {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CoeffArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct CounterArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub nmax: u32,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct SystemArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// `N` (1D) or `NxN` (2D) interior nodes; defaults to 200 or 48x48.
    #[arg(long)]
    pub grid: Option<String>,
    /// kelvin-voigt, frictional or cattaneo.
    #[arg(long, default_value = "frictional")]
    pub variant: String,
}

#[derive(Args, Debug)]
pub struct SimArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Final time.
    #[arg(long = "T", default_value_t = 10.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// `zero`, `mode:N[:AMP]` or `smooth:SEED[:AMP]`; defaults to `smooth:<seed>`.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// midpoint or backward-euler.
    #[arg(long, default_value = "midpoint")]
    pub scheme: String,
    #[arg(long, default_value_t = 1)]
    pub sample_every: usize,
    /// Multiplier of the Lyapunov functional column; omitted when absent.
    #[arg(long)]
    pub lyapunov: Option<f64>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Trace CSV written by `simulate`.
    #[arg(long)]
    pub trace: PathBuf,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct EnvArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// Traces to compare against the envelope (repeatable).
    #[arg(long, required = true)]
    pub trace: Vec<PathBuf>,
    /// Traces used to calibrate the window constant (repeatable); defaults to `--trace`.
    #[arg(long)]
    pub calibrate: Vec<PathBuf>,
    /// Observation window length.
    #[arg(long = "T", default_value_t = 2.0)]
    pub window: f64,
    /// Window constant; estimated from the calibration traces when absent.
    #[arg(long)]
    pub c_lemma: Option<f64>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct ObsArgs {
    /// Parameter file of the discretized pair; ignored with `--random`.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Defaults to 30 (1D) or 6x6 (2D).
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value = "kelvin-voigt")]
    pub variant: String,
    /// Use a random pair of this dimension instead of a discretized system.
    #[arg(long)]
    pub random: Option<usize>,
    /// Rank of the random observation operator (default: full).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Keep only this many low-frequency modes.
    #[arg(long)]
    pub modes: Option<usize>,
    #[arg(long, default_value_t = 128)]
    pub trials: usize,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Args, Debug)]
pub struct StaticArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Seed of the smooth right-hand side.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flag value, missing file or invalid configuration.
    Usage(String),
    /// A check or report did not pass.
    Check(String),
    /// Numerical failure during a run.
    Run(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Check(_) | CliError::Run(_) => EXIT_CHECK,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Run(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Io { .. }
            | LabError::Parse { .. }
            | LabError::InvalidInput(_)
            | LabError::InvalidCoefficients(_)
            | LabError::SizeCapExceeded { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            e.code()
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<Vec<String>> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = cli.workers {
            if w == 0 {
                return Err(CliError::Usage("--workers must be at least 1".into()));
            }
            b = b.num_threads(w);
        }
        b.build().map_err(|e| CliError::Usage(format!("--workers: {e}")))?
    };
    pool.install(|| match cli.command {
        Command::CheckCoeffs(a) => check_coeffs(a),
        Command::Counterexample(a) => counterexample(a),
        Command::Simulate(a) => run_simulate(a),
        Command::DecayFit(a) => decay_fit(a),
        Command::Envelope(a) => envelope(a),
        Command::Observability(a) => observability(a),
        Command::StaticSolve(a) => run_static(a),
    })
}

fn params(path: &Path) -> CliResult<IsotropicParams> {
    if !path.exists() {
        return Err(CliError::Usage(format!("--params: file not found: {}", path.display())));
    }
    load_params(path).map_err(|e| CliError::Usage(format!("--params {}: {e}", path.display())))
}

fn out_dir(o: &OutArg) -> CliResult<PathBuf> {
    ensure_dir(&o.out).map_err(|e| CliError::Usage(format!("--out: {e}")))
}

fn positive(flag: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{flag} must be positive, got {v}")))
    }
}

/// `N` or `NxN`; the dimension must match the parameter file.
pub fn parse_grid(spec: Option<&str>, dim: usize, default_1d: usize, default_2d: usize) -> CliResult<Grid> {
    let bad = |m: String| CliError::Usage(format!("--grid: {m}"));
    let n = match spec {
        None => {
            if dim == 1 {
                default_1d
            } else {
                default_2d
            }
        }
        Some(s) => {
            let parts: Vec<&str> = s.split('x').collect();
            let nums: Vec<usize> = parts
                .iter()
                .map(|p| p.trim().parse::<usize>().map_err(|_| bad(format!("bad grid `{s}`"))))
                .collect::<CliResult<_>>()?;
            if nums.len() != dim {
                return Err(bad(format!("`{s}` has {} extents but the parameters are {dim}D", nums.len())));
            }
            if nums.iter().any(|&k| k != nums[0]) {
                return Err(bad(format!("`{s}` is not square")));
            }
            nums[0]
        }
    };
    if n < 2 {
        return Err(bad(format!("need at least 2 interior nodes, got {n}")));
    }
    if dim != 1 && dim != 2 {
        return Err(CliError::Usage(format!("--params: dimension {dim} not supported")));
    }
    Ok(Grid::uniform(dim, n))
}

fn parse_variant(s: &str) -> CliResult<Variant> {
    s.parse::<Variant>().map_err(|e| CliError::Usage(format!("--variant: {e}")))
}

fn build_system(a: &SystemArgs, default_1d: usize, default_2d: usize) -> CliResult<(IsotropicParams, SemiDiscreteSystem)> {
    let p = params(&a.params)?;
    let variant = parse_variant(&a.variant)?;
    let grid = parse_grid(a.grid.as_deref(), p.dim, default_1d, default_2d)?;
    let coeffs = expand_isotropic(&p)?;
    let law = (variant == Variant::Cattaneo).then(|| DampingLaw::from_params(&p));
    let sys = assemble(&grid, &coeffs, variant, law)?;
    Ok((p, sys))
}

fn rec(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn grid_label(g: &Grid) -> String {
    if g.dim == 1 {
        g.nx.to_string()
    } else {
        format!("{}x{}", g.nx, g.ny)
    }
}

fn check_coeffs(a: CoeffArgs) -> CliResult<Vec<String>> {
    let p = params(&a.params)?;
    let out = out_dir(&a.out)?;
    let c = expand_isotropic(&p)?;
    let report = check_positivity(&c);
    let mut records = vec![rec("params", a.params.display()), rec("dim", p.dim)];
    records.extend(report.records());
    records.push(rec("semidefinite_elastic", report.semidefinite_elastic()));
    let mut failures = Vec::new();
    if !report.semidefinite_elastic() {
        failures.push("elastic forms are not positive semidefinite".to_string());
    }
    if p.damping_law == LawKind::PowerSaturated || p.friction > 0.0 {
        let law = DampingLaw::from_params(&p);
        let v = validate_damping(&law);
        records.push(rec("damping_law", law.describe()));
        records.push(rec("damping_law_ok", v.passed()));
        if !v.passed() {
            failures.push(format!("damping law fails {:?}", v.failed()));
        }
    }
    let path = out.join("coeffs.txt");
    write_summary(&path, &records)?;
    if failures.is_empty() {
        Ok(vec![
            format!("alpha_joint = {}", fmt_f64(report.alpha_joint())),
            format!("alpha_gradient = {}", fmt_f64(report.alpha_gradient())),
            format!("wrote {}", path.display()),
        ])
    } else {
        Err(CliError::Check(failures.join("; ")))
    }
}

fn counterexample_records(p: &IsotropicParams, t: &BlowupTable, nmax: u32) -> Vec<(String, String)> {
    let solved: Vec<_> = t.solved().collect();
    let max_res = solved.iter().fold(0.0f64, |m, s| m.max(s.residual));
    let max_sum = solved
        .iter()
        .fold(0.0f64, |m, s| m.max((s.a + s.b - 2.0 * p.rho).norm()));
    vec![
        rec("nmax", nmax),
        rec("solved", solved.len()),
        rec("skipped", t.rows.len() - solved.len()),
        rec("max_residual", fmt_f64(max_res)),
        rec("max_sum_defect", fmt_f64(max_sum)),
        rec("monotone", t.monotone),
        rec("growth_exponent", fmt_f64(t.growth_exponent)),
    ]
}

fn counterexample(a: CounterArgs) -> CliResult<Vec<String>> {
    let p = params(&a.params)?;
    if a.nmax == 0 {
        return Err(CliError::Usage("--nmax must be at least 1".into()));
    }
    let out = out_dir(&a.out)?;
    let table = resolvent_blowup_scan(&p, a.nmax);
    write_csv(&out.join("modes.csv"), BlowupTable::CSV_HEADER, &table.csv_rows())?;
    let records = counterexample_records(&p, &table, a.nmax);
    write_summary(&out.join("counterexample.txt"), &records)?;
    let solved: Vec<_> = table.solved().collect();
    if solved.is_empty() {
        return Err(CliError::Check("no mode could be solved".into()));
    }
    if let Some(s) = solved.iter().find(|s| s.residual > 1e-10) {
        return Err(CliError::Check(format!("mode n = {} residual {:e}", s.n, s.residual)));
    }
    Ok(vec![
        format!("growth_exponent = {}", fmt_f64(table.growth_exponent)),
        format!("wrote {}", out.join("modes.csv").display()),
    ])
}

fn parse_scheme(s: &str) -> CliResult<Scheme> {
    match s {
        "midpoint" => Ok(Scheme::Midpoint),
        "backward-euler" => Ok(Scheme::BackwardEuler),
        _ => Err(CliError::Usage(format!(
            "--scheme: unknown scheme `{s}` (expected midpoint or backward-euler)"
        ))),
    }
}

fn run_simulate(a: SimArgs) -> CliResult<Vec<String>> {
    let dt = positive("--dt", a.dt)?;
    let t_final = positive("--T", a.t_final)?;
    let scheme = parse_scheme(&a.scheme)?;
    if a.sample_every == 0 {
        return Err(CliError::Usage("--sample-every must be at least 1".into()));
    }
    let init_spec = a.init.clone().unwrap_or_else(|| format!("smooth:{}", a.seed));
    let init = InitialData::parse(&init_spec).map_err(|e| CliError::Usage(format!("--init: {e}")))?;
    let (_, sys) = build_system(&a.system, 200, 48)?;
    let out = out_dir(&a.out)?;
    let x0 = initial_state(&sys, &init)?;
    let cfg = SimConfig {
        dt,
        t_final,
        scheme,
        sample_every: a.sample_every,
        lyapunov_n: a.lyapunov,
        ..SimConfig::default()
    };
    let tr = simulate(&sys, &x0, &cfg)?;
    let trace_path = out.join("trace.csv");
    write_trace(&trace_path, &tr)?;
    let e0 = tr.energy[0];
    let e1 = *tr.energy.last().unwrap();
    let records = vec![
        rec("variant", sys.variant.name()),
        rec("grid", grid_label(&sys.grid)),
        rec("scheme", &a.scheme),
        rec("init", &init_spec),
        rec("dt", fmt_f64(dt)),
        rec("T", fmt_f64(t_final)),
        rec("samples", tr.times.len()),
        rec("energy_initial", fmt_f64(e0)),
        rec("energy_final", fmt_f64(e1)),
        rec("balance_trapezoid", fmt_f64(tr.balance_trapezoid)),
        rec("balance_theta", fmt_f64(tr.balance_theta)),
        rec("max_iterations", tr.max_iterations),
    ];
    write_summary(&out.join("simulate.txt"), &records)?;
    Ok(vec![
        format!("energy {} -> {}", fmt_f64(e0), fmt_f64(e1)),
        format!("wrote {}", trace_path.display()),
    ])
}

fn load_trace(flag: &str, path: &Path) -> CliResult<thermolab_core::dynamics::EnergyTrace> {
    if !path.exists() {
        return Err(CliError::Usage(format!("{flag}: file not found: {}", path.display())));
    }
    read_trace(path).map_err(|e| CliError::Usage(format!("{flag} {}: {e}", path.display())))
}

fn decay_fit(a: FitArgs) -> CliResult<Vec<String>> {
    let tr = load_trace("--trace", &a.trace)?;
    let out = out_dir(&a.out)?;
    let fit = fit_decay(&tr.times, &tr.energy)?;
    let mut records = vec![rec("trace", a.trace.display())];
    records.extend(fit.records());
    write_summary(&out.join("decay_fit.txt"), &records)?;
    let line = format!("C = {}, c0 = {}, r2 = {:.6}", fmt_f64(fit.c), fmt_f64(fit.c0), fit.r2);
    if !fit.bound_holds() {
        return Err(CliError::Check(format!("{line}; bound ratio {:.4} > 1", fit.worst_bound_ratio)));
    }
    if !fit.is_exponential() {
        return Err(CliError::Check(format!("{line}; trace is not exponential")));
    }
    Ok(vec![line])
}

fn envelope(a: EnvArgs) -> CliResult<Vec<String>> {
    let p = params(&a.params)?;
    let window = positive("--T", a.window)?;
    let traces = a
        .trace
        .iter()
        .map(|t| load_trace("--trace", t))
        .collect::<CliResult<Vec<_>>>()?;
    let calib = if a.calibrate.is_empty() {
        traces.clone()
    } else {
        a.calibrate
            .iter()
            .map(|t| load_trace("--calibrate", t))
            .collect::<CliResult<Vec<_>>>()?
    };
    let out = out_dir(&a.out)?;
    let c_lemma = match a.c_lemma {
        Some(c) => positive("--c-lemma", c)?,
        None => estimate_c_lemma(&calib, window, None)?.c,
    };
    let coeffs = expand_isotropic(&p)?;
    let heat = (0..p.dim)
        .map(|i| coeffs.m2.get(&[i, i]))
        .fold(f64::INFINITY, f64::min);
    let law = DampingLaw::from_params(&p);
    let env = build_envelope(&law, window, PI.powi(p.dim as i32), c_lemma, heat)?;
    let mut records = env.records();
    let mut violations = 0;
    let mut margin = f64::INFINITY;
    for (k, tr) in traces.iter().enumerate() {
        let cmp: EnvelopeComparison = envelope_compare(tr, &env)?;
        write_csv(&out.join(format!("envelope_{k}.csv")), EnvelopeComparison::CSV_HEADER, &cmp.csv_rows())?;
        records.push(rec(&format!("trace_{k}"), a.trace[k].display()));
        records.push(rec(&format!("violations_{k}"), cmp.violations));
        records.push(rec(&format!("min_relative_margin_{k}"), fmt_f64(cmp.min_relative_margin)));
        violations += cmp.violations;
        margin = margin.min(cmp.min_relative_margin);
    }
    records.push(rec("violations", violations));
    records.push(rec("holds", violations == 0));
    write_summary(&out.join("envelope.txt"), &records)?;
    if violations > 0 {
        return Err(CliError::Check(format!("{violations} samples above the envelope")));
    }
    Ok(vec![format!(
        "C_lemma = {}, min relative margin = {}",
        fmt_f64(c_lemma),
        fmt_f64(margin)
    )])
}

fn observability(a: ObsArgs) -> CliResult<Vec<String>> {
    let (pair, source) = match a.random {
        Some(n) => {
            if n == 0 {
                return Err(CliError::Usage("--random must be at least 1".into()));
            }
            let rank = a.rank.unwrap_or(n);
            if rank == 0 || rank > n {
                return Err(CliError::Usage(format!("--rank must be in 1..={n}")));
            }
            (AbstractPair::random(n, rank, a.seed), format!("random:{n}:{rank}"))
        }
        None => {
            let path = a
                .params
                .clone()
                .ok_or_else(|| CliError::Usage("--params is required unless --random is given".into()))?;
            let sys_args = SystemArgs {
                params: path,
                grid: a.grid.clone(),
                variant: a.variant.clone(),
            };
            let (_, sys) = build_system(&sys_args, 30, 6)?;
            let label = format!("{}:{}", sys.variant.name(), grid_label(&sys.grid));
            (from_discretization(&sys)?, label)
        }
    };
    let pair = match a.modes {
        Some(k) => pair.truncate_modes(k)?,
        None => pair,
    };
    if let Some(dt) = a.dt {
        positive("--dt", dt)?;
    }
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let out = out_dir(&a.out)?;
    let report = verify_theorem_a(&pair, a.trials, a.seed, a.dt)?;
    let mut records = vec![rec("pair", &source), rec("seed", a.seed)];
    records.extend(report.records());
    write_summary(&out.join("observability.txt"), &records)?;
    let line = format!(
        "dim {} T0 = {} C_obs = {} passed = {}",
        report.dim,
        fmt_f64(report.t0),
        fmt_f64(report.c_obs),
        report.passed()
    );
    if report.passed() {
        Ok(vec![line])
    } else {
        Err(CliError::Check(line))
    }
}

fn run_static(a: StaticArgs) -> CliResult<Vec<String>> {
    let (_, sys) = build_system(&a.system, 200, 48)?;
    let out = out_dir(&a.out)?;
    let f = initial_state(
        &sys,
        &InitialData::Smooth {
            seed: a.seed,
            modes: 4,
            amplitude: 1.0,
            energy: None,
        },
    )?;
    let sol = static_solve(&sys, &f)?;
    write_vector(&out.join("static_rhs.txt"), &f.data)?;
    write_vector(&out.join("static_solution.txt"), &sol.state.data)?;
    let records = vec![
        rec("variant", sys.variant.name()),
        rec("grid", grid_label(&sys.grid)),
        rec("seed", a.seed),
        rec("unknowns", sol.state.data.len()),
        rec("residual", fmt_f64(sol.residual)),
    ];
    write_summary(&out.join("static_solve.txt"), &records)?;
    if sol.residual > 1e-8 {
        return Err(CliError::Check(format!("relative residual {:e}", sol.residual)));
    }
    Ok(vec![format!("residual = {}", fmt_f64(sol.residual))])
}

//! `kdimer`: phase diagrams, spectra, coherence sweeps and self-checks for
//! the bosonic Kitaev dimer.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kitaev_dimer::coherence::{coherence_sweep, dmu_study, ConvergenceGate, DmuConfig, Engine, G2Kind};
use kitaev_dimer::core_matrix::{analytic_occupation, ModeSign, PhaseRow};
use kitaev_dimer::dynamics::{diagonalize, occupation_series, quasiparticle_vacuum};
use kitaev_dimer::fock::{build_dimer_hamiltonian, fock_state, mode_operators, Truncation};
use kitaev_dimer::grid::{MuGrid, TimeGrid};
use kitaev_dimer::oracle::fundamental_spacings;
use kitaev_dimer::output::{atomic_write, csv_document, fmt_f64, meta_path, Metadata};
use kitaev_dimer::validate::{self, Level};
use kitaev_dimer::Error;

#[derive(Parser)]
#[command(name = "kdimer", version, about = "Bosonic Kitaev dimer toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Phase diagram: region, mode kinds and rates per mu.
    #[command(args_override_self = true)]
    Phase(PhaseArgs),
    /// Lowest eigenvalues of the truncated Hamiltonian.
    #[command(args_override_self = true)]
    Spectrum(SpectrumArgs),
    /// Second-order coherence series for one mu or a mu range.
    #[command(args_override_self = true)]
    G2(G2Args),
    /// D_mu curves, their minima and the finite-T extrapolation.
    #[command(args_override_self = true)]
    Dmu(DmuArgs),
    /// Occupation growth from the quasiparticle or bare vacuum.
    #[command(args_override_self = true)]
    Vacuum(VacuumArgs),
    /// Run the self-check suite and print a JSON report.
    #[command(args_override_self = true)]
    Validate(ValidateArgs),
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Flat `key = value` file with defaults for any flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parameter sweeps.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args, Clone, Debug, Serialize)]
struct MuSelect {
    /// Single chemical potential.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "mu_range")]
    mu: Option<f64>,
    /// Inclusive range `a:b:step`.
    #[arg(long = "mu-range", allow_hyphen_values = true)]
    mu_range: Option<String>,
}

impl MuSelect {
    fn grid(&self) -> Result<Option<MuGrid>, Error> {
        match (self.mu, &self.mu_range) {
            (Some(mu), _) => Ok(Some(MuGrid::single(mu)?)),
            (None, Some(r)) => Ok(Some(parse_range(r)?)),
            (None, None) => Ok(None),
        }
    }

    fn required(&self) -> Result<MuGrid, Error> {
        self.grid()?
            .ok_or_else(|| Error::Domain("one of --mu or --mu-range is required".into()))
    }
}

fn parse_range(s: &str) -> Result<MuGrid, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("mu range '{s}' must have the form a:b:step")));
    }
    let num = |p: &str| -> Result<f64, Error> {
        p.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("invalid number '{p}' in mu range")))
    };
    MuGrid::inclusive(num(parts[0])?, num(parts[1])?, num(parts[2])?)
}

fn parse_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("invalid number '{p}' in list")))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum EngineArg {
    Fock,
    Nambu,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    #[value(name = "0t")]
    #[serde(rename = "0t")]
    ZeroT,
    #[value(name = "t0")]
    #[serde(rename = "t0")]
    TZero,
}

impl From<KindArg> for G2Kind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::ZeroT => G2Kind::ZeroT,
            KindArg::TZero => G2Kind::TZero,
        }
    }
}

#[derive(Args, Clone, Debug, Serialize)]
struct FockArgs {
    /// Per-mode occupation cutoff.
    #[arg(long, default_value_t = 40)]
    nmax: usize,
    /// Width of the edge band used for leakage monitoring.
    #[arg(long, default_value_t = 2)]
    margin: usize,
}

impl FockArgs {
    fn truncation(&self) -> Result<Truncation, Error> {
        Truncation::new(self.nmax, self.margin)
    }
}

#[derive(Args, Debug)]
struct PhaseArgs {
    #[command(flatten)]
    mu: MuSelect,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[command(flatten)]
    fock: FockArgs,
    /// Number of levels to report.
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct G2Args {
    #[arg(long, value_enum, default_value = "0t")]
    kind: KindArg,
    #[command(flatten)]
    mu: MuSelect,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 20.0)]
    tmax: f64,
    #[arg(long, value_enum, default_value = "fock")]
    engine: EngineArg,
    #[command(flatten)]
    fock: FockArgs,
    /// Agreement required between n_max and n_max + 10.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Skip the cutoff-convergence gate.
    #[arg(long)]
    no_gate: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct DmuArgs {
    #[arg(long, value_enum, default_value = "0t")]
    kind: KindArg,
    /// Inclusive range `a:b:step`; must avoid the exceptional points.
    #[arg(long = "mu-range", default_value = "0.505:3.495:0.01", allow_hyphen_values = true)]
    mu_range: String,
    /// Comma-separated averaging windows.
    #[arg(long = "T", default_value = "2,4,6,8")]
    t_list: String,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, value_enum, default_value = "nambu")]
    engine: EngineArg,
    #[command(flatten)]
    fock: FockArgs,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    no_gate: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum InitialArg {
    /// Quasiparticle vacuum; observable is the minus-mode quasiparticle number.
    Vacuum,
    /// Bare vacuum |0,0>; observable is n_a.
    Bare,
}

#[derive(Args, Debug)]
struct VacuumArgs {
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long, value_enum, default_value = "vacuum")]
    initial: InitialArg,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 4.0)]
    tmax: f64,
    #[arg(long, default_value_t = 60)]
    nmax: usize,
    #[arg(long, default_value_t = 2)]
    margin: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, default_value = "quick")]
    level: String,
    /// Add a Hamiltonian with a forced Hermitian flag as a negative control.
    #[arg(long)]
    inject_corruption: bool,
    #[command(flatten)]
    common: Common,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Domain(_) | Error::Parse(_) => 2,
            Error::Truncation { .. } | Error::CutoffInadequate(_) => 4,
            Error::Io { .. } => 1,
            Error::Contract(_) | Error::Numeric(_) | Error::NearZeroDenominator { .. } | Error::Resource { .. } => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => atomic_write(p, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| Error::Io { path: "<stdout>".into(), source })
        }
    }
}

fn emit_meta<P: Serialize>(out: Option<&Path>, command: &str, params: P) -> Result<(), Error> {
    if let Some(p) = out {
        Metadata::new(command, params).write(&meta_path(p))?;
    }
    Ok(())
}

fn cmd_phase(args: &PhaseArgs) -> CmdResult {
    let grid = args.mu.required()?;
    let rows = grid
        .values()
        .into_iter()
        .map(|mu| PhaseRow::at(mu).map(|r| r.csv_line()))
        .collect::<Result<Vec<_>, _>>()?;
    let out = args.common.out.as_deref();
    emit(out, &csv_document(PhaseRow::CSV_HEADER, rows))?;
    emit_meta(out, "phase", serde_json::json!({ "mu_grid": grid }))?;
    Ok(())
}

fn cmd_spectrum(args: &SpectrumArgs) -> CmdResult {
    let tr = args.fock.truncation()?;
    let h = build_dimer_hamiltonian(args.mu, &tr)?;
    let spec = diagonalize(&h)?;
    let e = spec.eigenvalues();
    let rows = e
        .iter()
        .take(args.count)
        .enumerate()
        .map(|(k, v)| format!("{k},{}", fmt_f64(*v)));
    let out = args.common.out.as_deref();
    emit(out, &csv_document("index,energy", rows))?;
    let spacings = fundamental_spacings(&e, 2, 1e-6);
    eprintln!("fundamental spacings: {spacings:?}");
    emit_meta(
        out,
        "spectrum",
        serde_json::json!({
            "mu": args.mu, "nmax": tr.n_max(), "margin": tr.margin(),
            "residual": spec.residual(), "fundamental_spacings": spacings,
        }),
    )?;
    Ok(())
}

fn engine_of(kind: EngineArg, fock: &FockArgs, tol: f64, no_gate: bool) -> Result<Engine, Error> {
    Ok(match kind {
        EngineArg::Nambu => Engine::Nambu,
        EngineArg::Fock => {
            if !(tol > 0.0) {
                return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
            }
            Engine::Fock {
                truncation: fock.truncation()?,
                gate: (!no_gate).then_some(ConvergenceGate { tolerance: tol, step: 10 }),
            }
        }
    })
}

fn check_workers(w: usize) -> Result<(), Error> {
    if w == 0 {
        return Err(Error::Domain("--workers must be at least 1".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct SeriesMeta {
    mu: f64,
    leakage_horizon: Option<f64>,
    convergence_horizon: Option<f64>,
    denominator_floor: f64,
}

fn cmd_g2(args: &G2Args) -> CmdResult {
    let mu_grid = args.mu.required()?;
    let grid = TimeGrid::new(args.tmax, args.dt)?;
    let engine = engine_of(args.engine, &args.fock, args.tol, args.no_gate)?;
    check_workers(args.common.workers)?;
    let kind: G2Kind = args.kind.into();

    let results = coherence_sweep(kind, &mu_grid, &grid, &engine, args.common.workers)?;
    let single = mu_grid.len() == 1;
    let mut rows = Vec::new();
    let mut meta = Vec::new();
    for r in results {
        let s = r?;
        for (i, t) in grid.times().enumerate() {
            let line = format!("{},{},{}", fmt_f64(t), fmt_f64(s.values[i]), fmt_f64(s.leakage[i]));
            rows.push(if single { line } else { format!("{},{line}", fmt_f64(s.mu)) });
        }
        if let Some(h) = s.leakage_horizon {
            eprintln!("mu = {}: leakage horizon at t = {h}; later values withheld", s.mu);
        }
        if let Some(h) = s.convergence_horizon {
            eprintln!("mu = {}: cutoff convergence lost at t = {h}; later values withheld", s.mu);
        }
        meta.push(SeriesMeta {
            mu: s.mu,
            leakage_horizon: s.leakage_horizon,
            convergence_horizon: s.convergence_horizon,
            denominator_floor: s.denominator_floor,
        });
    }
    let header = if single { "t,g2,leakage" } else { "mu,t,g2,leakage" };
    let out = args.common.out.as_deref();
    emit(out, &csv_document(header, rows))?;
    emit_meta(
        out,
        "g2",
        serde_json::json!({
            "kind": kind, "mu_grid": mu_grid, "time_grid": grid, "engine": engine, "series": meta,
        }),
    )?;
    Ok(())
}

fn cmd_dmu(args: &DmuArgs) -> CmdResult {
    let mu_grid = parse_range(&args.mu_range)?;
    mu_grid.check_avoids_locus()?;
    let windows = parse_list(&args.t_list)?;
    if windows.is_empty() || windows.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain(format!("invalid window list '{}'", args.t_list)).into());
    }
    let t_max = windows.iter().cloned().fold(0.0, f64::max);
    TimeGrid::new(t_max, args.dt)?;
    let engine = engine_of(args.engine, &args.fock, args.tol, args.no_gate)?;
    check_workers(args.common.workers)?;
    let dir = args.common.out.clone().unwrap_or_else(|| PathBuf::from("dmu_out"));
    fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;

    let cfg = DmuConfig {
        kind: args.kind.into(),
        mu_grid,
        windows,
        dt: args.dt,
        engine,
        workers: args.common.workers,
    };
    let study = dmu_study(&cfg)?;

    for c in &study.curves {
        atomic_write(&dir.join(c.file_name()), c.csv().as_bytes())?;
        for (mu, why) in &c.missing {
            eprintln!("T = {}: missing mu = {mu}: {why}", c.t_window);
        }
    }
    atomic_write(&dir.join("minima.csv"), study.minima_csv().as_bytes())?;
    let fit = serde_json::json!({
        "fit": study.fit,
        "error": study.fit_error,
        "missing_points": study.curves.iter().map(|c| c.missing.len()).sum::<usize>(),
    });
    let mut text = serde_json::to_string_pretty(&fit).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    atomic_write(&dir.join("fit.json"), text.as_bytes())?;
    Metadata::new("dmu", &cfg).write(&dir.join("dmu.meta.json"))?;
    if let Some(f) = &study.fit {
        eprintln!(
            "intercept {:.6} (slope {:.6}, rms residual {:.3e}); depths deepen: {}; approaches 2: {}",
            f.intercept, f.slope, f.rms_residual, f.depths_deepen, f.approaches_two
        );
    }
    Ok(())
}

fn cmd_vacuum(args: &VacuumArgs) -> CmdResult {
    let tr = Truncation::new(args.nmax, args.margin)?;
    let grid = TimeGrid::new(args.tmax, args.dt)?;
    let h = build_dimer_hamiltonian(args.mu, &tr)?;
    let (psi0, observable, label) = match args.initial {
        InitialArg::Vacuum => {
            let vac = quasiparticle_vacuum(args.mu, &tr)?;
            let obs = vac.number_operator(ModeSign::Minus);
            (vac.state, obs, "minus-mode quasiparticle number")
        }
        InitialArg::Bare => (fock_state(0, 0, &tr)?, mode_operators(&tr)?.n_a, "n_a"),
    };
    let spec = diagonalize(&h)?;
    let series = occupation_series(&spec, &psi0, &grid, &observable)?;
    let rows = series.values.iter().enumerate().map(|(i, v)| {
        let t = series.times[i];
        let analytic = analytic_occupation(args.mu, t).unwrap_or(f64::NAN);
        format!("{},{},{},{}", fmt_f64(t), fmt_f64(*v), fmt_f64(analytic), fmt_f64(series.leakage[i]))
    });
    let out = args.common.out.as_deref();
    emit(out, &csv_document("t,occupation,analytic,leakage", rows))?;
    if let Some(h) = series.horizon {
        eprintln!("leakage horizon at t = {h}; later values withheld");
    }
    emit_meta(
        out,
        "vacuum",
        serde_json::json!({
            "mu": args.mu, "initial": args.initial, "observable": label, "nmax": tr.n_max(),
            "margin": tr.margin(), "time_grid": grid, "warning_time": series.warning_time,
            "horizon": series.horizon,
        }),
    )?;
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> CmdResult {
    let level: Level = args.level.parse()?;
    let report = validate::run(level, args.inject_corruption);
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    emit(args.common.out.as_deref(), &text)?;
    if !report.passed {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(Failure {
            code: 3,
            message: format!("validation failed: {}", failed.join(", ")),
        });
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Phase(a) => cmd_phase(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::G2(a) => cmd_g2(a),
        Command::Dmu(a) => cmd_dmu(a),
        Command::Vacuum(a) => cmd_vacuum(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let args = match config::expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            let f = Failure::from(e);
            eprintln!("error: {}", f.message);
            return ExitCode::from(if f.code == 1 { 1 } else { 2 });
        }
    };
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

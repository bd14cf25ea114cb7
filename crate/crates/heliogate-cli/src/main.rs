//! Command-line front end: experiment subcommands with CSV/JSON emitters.
//!
//! Exit codes: 0 success, 2 configuration error, 3 physics-invariant
//! violation, 4 convergence failure, 1 other I/O failure.

mod config;
mod output;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use heliogate::dynamics::is_coupled;
use heliogate::experiments::{
    decay_model, field_point, hardware_detunings, run_cnot_table, run_entangling_final_state,
    run_entangling_trajectory, run_rydberg_control_gate, run_single_qubit_average,
};
use heliogate::helium::solve_vertical_states;
use heliogate::holonomy::GateParams;
use heliogate::{BasisLabel, Error};

use config::{ConfigError, RunConfig};
use output::{Table, Value};

#[derive(Parser)]
#[command(
    name = "heliogate",
    version,
    about = "Holonomic gate simulations for an electron on liquid helium"
)]
struct Cli {
    /// Configuration file with `key = value` lines (# comments)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the fully resolved configuration and exit
    #[arg(long, global = true)]
    dump_config: bool,

    #[command(flatten)]
    flags: Flags,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Flags {
    /// Holding field, V/cm
    #[arg(long, global = true)]
    e_perp: Option<f64>,
    /// Gate pulse duration T, ns
    #[arg(long, global = true)]
    pulse_duration: Option<f64>,
    /// Pulse standard deviation σ, ns (default T/8)
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Gate angle θ, rad in [0, π]
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Gate angle φ, rad
    #[arg(long, global = true)]
    phi: Option<f64>,
    /// Delay of the spin-down drive pair, ns
    #[arg(long, global = true)]
    lag: Option<f64>,
    /// Integrator step, ns (default T/5000)
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Scale factor on every decay rate (0 disables dissipation)
    #[arg(long, global = true)]
    kappa_scale: Option<f64>,
    /// Sampling stride in integrator steps
    #[arg(long, global = true)]
    sample_stride: Option<usize>,
    /// Output format: csv or json
    #[arg(long, global = true)]
    format: Option<String>,
    /// Output path (default stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweep subcommands
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// δ13 in rad/ns, or `decoupled`
    #[arg(long, global = true)]
    delta13: Option<String>,
    /// δ23 in rad/ns, or `decoupled`
    #[arg(long, global = true)]
    delta23: Option<String>,
    /// δ12 in rad/ns, or `decoupled`
    #[arg(long, global = true)]
    delta12: Option<String>,
    /// Override κ12, 1/ns
    #[arg(long, global = true)]
    kappa12: Option<f64>,
    /// Override κ13, 1/ns
    #[arg(long, global = true)]
    kappa13: Option<f64>,
    /// Override κ23, 1/ns
    #[arg(long, global = true)]
    kappa23: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Controlled-NOT output fidelities for the five benchmark inputs
    CnotTable,
    /// Level populations and fidelity versus time for the entangling input
    Trajectory,
    /// Real and imaginary parts of the final computational-subspace state
    DensityMatrix,
    /// Entangling-gate fidelity and decay rates across holding fields
    FieldSweep {
        #[arg(long, default_value_t = 100.0)]
        e_min: f64,
        #[arg(long, default_value_t = 1000.0)]
        e_max: f64,
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
    /// Average four-drive single-qubit gate fidelities
    SingleQubit,
    /// Spin flip controlled by the Rydberg level
    RydbergControl {
        /// Drive amplitude, rad/ns
        #[arg(long)]
        rabi: Option<f64>,
        /// Drive duration, ns (default π/rabi)
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Vertical eigenstates: energies, positions, wavefunctions
    Spectrum,
    /// Two-ripplon decay rates across holding fields
    DecayRates {
        #[arg(long, default_value_t = 100.0)]
        e_min: f64,
        #[arg(long, default_value_t = 1000.0)]
        e_max: f64,
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Physics(Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "{s}"),
            CliError::Physics(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics(e) => match e {
                Error::Convergence(_) => 4,
                Error::InvariantViolation { .. }
                | Error::NotHermitian { .. }
                | Error::NotPositiveSemidefinite { .. }
                | Error::NotUnitTrace { .. }
                | Error::NonFinite(_) => 3,
                _ => 2,
            },
            CliError::Io(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Physics(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    let f = &cli.flags;
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = f.$field {
                cfg.$field = v;
            }
        };
        (opt $field:ident) => {
            if let Some(v) = f.$field {
                cfg.$field = Some(v);
            }
        };
    }
    set!(e_perp);
    set!(pulse_duration);
    set!(opt sigma);
    set!(opt theta);
    set!(opt phi);
    set!(lag);
    set!(opt step);
    set!(kappa_scale);
    set!(sample_stride);
    set!(opt kappa12);
    set!(opt kappa13);
    set!(opt kappa23);
    if let Some(v) = &f.format {
        cfg.apply_flag("format", v)?;
    }
    if let Some(v) = &f.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = f.jobs {
        cfg.jobs = v.max(1);
    }
    for (key, v) in [
        ("delta13", &f.delta13),
        ("delta23", &f.delta23),
        ("delta12", &f.delta12),
    ] {
        if let Some(v) = v {
            cfg.apply_flag(key, v)?;
        }
    }
    Ok(cfg)
}

fn gate_from(cfg: &RunConfig) -> Result<GateParams, CliError> {
    GateParams::new(cfg.theta.unwrap_or(PI / 2.0), cfg.phi.unwrap_or(0.0)).map_err(Into::into)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli)?;
    if cli.dump_config {
        print!("{}", cfg.dump());
        return Ok(());
    }
    let table = match &cli.command {
        Command::CnotTable => cmd_cnot_table(&cfg)?,
        Command::Trajectory => cmd_trajectory(&cfg)?,
        Command::DensityMatrix => cmd_density_matrix(&cfg)?,
        Command::FieldSweep {
            e_min,
            e_max,
            points,
        } => cmd_field_sweep(&cfg, *e_min, *e_max, *points)?,
        Command::SingleQubit => cmd_single_qubit(&cfg)?,
        Command::RydbergControl { rabi, duration } => {
            cmd_rydberg_control(&cfg, *rabi, *duration)?
        }
        Command::Spectrum => cmd_spectrum(&cfg)?,
        Command::DecayRates {
            e_min,
            e_max,
            points,
        } => cmd_decay_rates(&cfg, *e_min, *e_max, *points)?,
    };
    table.emit(cfg.format, cfg.out.as_deref())?;
    Ok(())
}

fn cmd_cnot_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let params = cfg.context_params()?;
    let ctx = params.build()?;
    let mut table = Table::new(&["input", "ideal_output", "fidelity"]);
    table.meta("e_perp_v_per_cm", output::fmt_num(cfg.e_perp));
    for row in run_cnot_table(&ctx)? {
        table.row(vec![
            Value::Str(row.input),
            Value::Str(row.ideal),
            Value::Num(row.fidelity),
        ]);
    }
    Ok(table)
}

fn cmd_trajectory(cfg: &RunConfig) -> Result<Table, CliError> {
    let params = cfg.context_params()?;
    let ctx = params.build()?;
    let gate = gate_from(cfg)?;
    let mut header = vec!["time_ns".to_string()];
    for label in BasisLabel::all() {
        header.push(format!("pop_{}", label.ascii_name()));
    }
    header.push("fidelity".to_string());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new(&header_refs);
    table.meta("theta_rad", output::fmt_num(gate.theta()));
    table.meta("phi_rad", output::fmt_num(gate.phi()));
    for p in run_entangling_trajectory(&ctx, gate)? {
        let mut row = vec![Value::Num(p.time)];
        row.extend(p.populations.iter().map(|&x| Value::Num(x)));
        row.push(Value::Num(p.fidelity));
        table.row(row);
    }
    Ok(table)
}

fn cmd_density_matrix(cfg: &RunConfig) -> Result<Table, CliError> {
    let params = cfg.context_params()?;
    let ctx = params.build()?;
    let gate = gate_from(cfg)?;
    let rho = run_entangling_final_state(&ctx, gate)?;
    // computational subspace {|↓,1⟩, |↓,2⟩, |↑,1⟩, |↑,2⟩}
    let comp = [0usize, 1, 3, 4];
    let names = ["down1", "down2", "up1", "up2"];
    let mut table = Table::new(&["bra", "ket", "real", "imag"]);
    table.meta("theta_rad", output::fmt_num(gate.theta()));
    table.meta("phi_rad", output::fmt_num(gate.phi()));
    for (i, &bi) in comp.iter().enumerate() {
        for (j, &bj) in comp.iter().enumerate() {
            let v = rho.operator().get(bi, bj);
            table.row(vec![
                Value::Str(names[i].into()),
                Value::Str(names[j].into()),
                Value::Num(v.re),
                Value::Num(v.im),
            ]);
        }
    }
    Ok(table)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Run `f` over `0..n` on a pool of `jobs` workers; results keep index order.
fn run_parallel<T, F>(jobs: usize, n: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize) -> Result<T, CliError> + Sync,
{
    if jobs <= 1 || n <= 1 {
        return (0..n).map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<Result<T, CliError>>>> =
        (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = f(i);
                *results[i].lock().unwrap() = Some(r);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker completed"))
        .collect()
}

fn cmd_field_sweep(cfg: &RunConfig, e_min: f64, e_max: f64, points: usize) -> Result<Table, CliError> {
    let params = cfg.context_params()?;
    let fields = linspace(e_min, e_max, points);
    let results = run_parallel(cfg.jobs, fields.len(), |i| {
        field_point(&params, fields[i]).map_err(CliError::from)
    })?;
    let mut table = Table::new(&["e_perp_v_per_cm", "kappa2_per_ns", "kappa3_per_ns", "fidelity"]);
    for p in results {
        table.row(vec![
            Value::Num(p.e_perp),
            Value::Num(p.kappa2),
            Value::Num(p.kappa3),
            Value::Num(p.fidelity),
        ]);
    }
    Ok(table)
}

fn cmd_single_qubit(cfg: &RunConfig) -> Result<Table, CliError> {
    let params = cfg.context_params()?;
    let ctx = params.build()?;
    let mut table = Table::new(&["gate", "lag_ns", "avg_fidelity"]);
    if cfg.theta.is_some() || cfg.phi.is_some() {
        let gate = gate_from(cfg)?;
        let f = run_single_qubit_average(&ctx, gate, cfg.lag)?;
        table.row(vec![
            Value::Str(format!("theta={:.6} phi={:.6}", gate.theta(), gate.phi())),
            Value::Num(cfg.lag),
            Value::Num(f),
        ]);
        return Ok(table);
    }
    let quarter = cfg.pulse_duration / 4.0;
    for (name, gate) in [("NOT", GateParams::not_gate()), ("Hadamard", GateParams::hadamard())] {
        for lag in [0.0, quarter] {
            let f = run_single_qubit_average(&ctx, gate, lag)?;
            table.row(vec![
                Value::Str(name.into()),
                Value::Num(lag),
                Value::Num(f),
            ]);
        }
    }
    Ok(table)
}

fn cmd_rydberg_control(
    cfg: &RunConfig,
    rabi_flag: Option<f64>,
    duration_flag: Option<f64>,
) -> Result<Table, CliError> {
    let params = cfg.context_params()?;
    let ctx = params.build()?;
    let rabi = rabi_flag.unwrap_or(cfg.rabi);
    if !(rabi > 0.0) {
        return Err(CliError::Config(format!("rabi must be positive, got {rabi}")));
    }
    let duration = duration_flag.or(cfg.duration).unwrap_or(PI / rabi);
    let report = run_rydberg_control_gate(&ctx, rabi, duration)?;
    let mut table = Table::new(&["case", "fidelity"]);
    table.meta("rabi_rad_per_ns", output::fmt_num(rabi));
    table.meta("duration_ns", output::fmt_num(duration));
    table.meta(
        "delta12_rad_per_ns",
        if is_coupled(ctx.det.delta12) {
            output::fmt_num(ctx.det.delta12)
        } else {
            "decoupled".into()
        },
    );
    table.row(vec![
        Value::Str("flip_down2_to_up2".into()),
        Value::Num(report.flip_fidelity),
    ]);
    table.row(vec![
        Value::Str("idle_down1".into()),
        Value::Num(report.idle_fidelity),
    ]);
    Ok(table)
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<Table, CliError> {
    let params = cfg.context_params()?;
    let sol = solve_vertical_states(cfg.e_perp, &params.grid, 3, &params.constants)?;
    let det = hardware_detunings(&params.grid, params.db_dz, &params.constants)?;
    let mut table = Table::new(&["z_nm", "psi1", "psi2", "psi3"]);
    table.meta("e_perp_v_per_cm", output::fmt_num(cfg.e_perp));
    for n in 0..3 {
        table.meta(&format!("energy_ghz_{}", n + 1), output::fmt_num(sol.energies_ghz[n]));
    }
    for n in 0..3 {
        table.meta(&format!("expected_z_nm_{}", n + 1), output::fmt_num(sol.expected_z[n]));
    }
    for n in 0..3 {
        table.meta(
            &format!("grad_element_ev_per_nm_{}", n + 1),
            output::fmt_num(sol.grad_elements[n]),
        );
    }
    table.meta("delta13_rad_per_ns", output::fmt_num(det.delta13));
    table.meta("delta23_rad_per_ns", output::fmt_num(det.delta23));
    table.meta("delta12_rad_per_ns", output::fmt_num(det.delta12));
    for w in &sol.warnings {
        table.meta("warning", format!("{w:?}"));
    }
    for (i, &z) in sol.z.iter().enumerate() {
        table.row(vec![
            Value::Num(z),
            Value::Num(sol.wavefunctions[0][i]),
            Value::Num(sol.wavefunctions[1][i]),
            Value::Num(sol.wavefunctions[2][i]),
        ]);
    }
    Ok(table)
}

fn cmd_decay_rates(cfg: &RunConfig, e_min: f64, e_max: f64, points: usize) -> Result<Table, CliError> {
    let params = cfg.context_params()?;
    let fields = linspace(e_min, e_max, points);
    let results = run_parallel(cfg.jobs, fields.len(), |i| {
        decay_model(fields[i], params.kappa_scale, &params.grid, &params.constants)
            .map(|m| (fields[i], m))
            .map_err(CliError::from)
    })?;
    let mut table = Table::new(&[
        "e_perp_v_per_cm",
        "kappa12_per_ns",
        "kappa13_per_ns",
        "kappa23_per_ns",
        "kappa2_per_ns",
        "kappa3_per_ns",
    ]);
    for (e, m) in results {
        table.row(vec![
            Value::Num(e),
            Value::Num(m.kappa12),
            Value::Num(m.kappa13),
            Value::Num(m.kappa23),
            Value::Num(m.kappa2),
            Value::Num(m.kappa3),
        ]);
    }
    Ok(table)
}

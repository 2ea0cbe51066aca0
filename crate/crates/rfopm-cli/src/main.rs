//! `opmsim`: run single points and parameter sweeps of the rf-dressed
//! magnetometer model from a TOML configuration.

use clap::{Parser, Subcommand, ValueEnum};
use rfopm::config::{QSetting, SimulationConfig};
use rfopm::output::{fom_csv, map_csv, sweep_csv, to_json};
use rfopm::sim::{
    convergence_study, map_3d, run_point, sweep_duty, sweep_pump_phase, sweep_rf_amplitude,
    sweep_static_field, SweepResult, SweepRow,
};
use rfopm::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "opmsim", version, about = "Floquet simulation of rf-dressed optically pumped magnetometers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Floquet cutoff: a positive integer or `auto`.
    #[arg(long, global = true)]
    q: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// One parameter point.
    Point,
    /// h versus static field.
    SweepBz,
    /// Static-field sweeps per duty cycle, with the FOM table.
    SweepDuty,
    /// Static-field sweeps per rf amplitude, with the FOM table.
    SweepRf,
    /// h versus pump phase.
    SweepPhase,
    /// Transverse-field map at the 3D operating point.
    Map3d,
    /// Steady-state change versus cutoff.
    Converge {
        /// Largest cutoff compared.
        #[arg(long, default_value_t = 8)]
        q_last: usize,
    },
}

enum Failure {
    Config(String),
    Solver(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) | Error::InvalidParameter(m) => Failure::Config(m),
            Error::Io(e) => Failure::Other(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("opmsim: configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("opmsim: solver failed: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("opmsim: {m}");
            ExitCode::from(1)
        }
    }
}

fn load(cli: &Cli) -> Result<SimulationConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => SimulationConfig::load(p)?,
        None => SimulationConfig::default(),
    };
    if let Some(q) = &cli.q {
        let q: QSetting = q.parse()?;
        cfg = cfg.edit(|f| f.q = q)?;
    }
    Ok(cfg)
}

fn check(res: &SweepResult) -> Result<(), Failure> {
    if res.all_failed() {
        let first = res.rows.iter().find_map(|r| r.result.as_ref().err().cloned());
        return Err(Failure::Solver(format!(
            "no point converged ({})",
            first.unwrap_or_else(|| "residual or cutoff criteria not met".into())
        )));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let s = &cfg.sweep;
    let (main, side) = match &cli.command {
        Command::Point => {
            let p = run_point(&cfg)?;
            let res = SweepResult {
                kind: "point".into(),
                axis_names: vec!["omega_dc_frac".into()],
                rows: vec![SweepRow { axis: vec![cfg.file.field.omega_dc_frac], result: Ok(p) }],
                config_hash: cfg.hash.clone(),
            };
            check(&res)?;
            emit(cli, &res, &cfg, |r| sweep_csv(r, &cfg, &[]))
        }
        Command::SweepBz => {
            let res = sweep_static_field(&cfg, &s.omega_dc_frac.values()?, cli.threads)?;
            check(&res)?;
            emit(cli, &res, &cfg, |r| sweep_csv(r, &cfg, &[]))
        }
        Command::SweepDuty | Command::SweepRf => {
            let dc = s.omega_dc_frac.values()?;
            let f = if matches!(cli.command, Command::SweepDuty) {
                sweep_duty(&cfg, &s.duty.values()?, &dc, cli.threads)?
            } else {
                sweep_rf_amplitude(&cfg, &s.omega_rf_frac.values()?, &dc, cli.threads)?
            };
            check(&f.result)?;
            match cli.format {
                Format::Json => (to_json(&f, &cfg), None),
                Format::Csv => (sweep_csv(&f.result, &cfg, &[]), Some(fom_csv(&f, &cfg))),
            }
        }
        Command::SweepPhase => {
            let res = sweep_pump_phase(&cfg, &s.phase_rad.values()?, cli.threads)?;
            check(&res)?;
            emit(cli, &res, &cfg, |r| sweep_csv(r, &cfg, &[]))
        }
        Command::Map3d => {
            let m = map_3d(
                &cfg,
                &s.ext_x_frac.values()?,
                &s.ext_y_frac.values()?,
                &s.ext_z_frac.values()?,
                s.b_res_frac,
                cli.threads,
            )?;
            check(&m.result)?;
            match cli.format {
                Format::Json => (to_json(&m, &cfg), None),
                Format::Csv => (map_csv(&m, &cfg), None),
            }
        }
        Command::Converge { q_last } => {
            let res = convergence_study(&cfg, *q_last)?;
            check(&res)?;
            emit(cli, &res, &cfg, |r| sweep_csv(r, &cfg, &[]))
        }
    };
    write(cli, &main, side.as_deref())
}

fn emit(
    cli: &Cli,
    res: &SweepResult,
    cfg: &SimulationConfig,
    csv: impl Fn(&SweepResult) -> String,
) -> (String, Option<String>) {
    match cli.format {
        Format::Json => (to_json(res, cfg), None),
        Format::Csv => (csv(res), None),
    }
}

/// Writes the main table; a FOM table goes next to it as `<stem>.fom.csv`,
/// or after a blank line on stdout.
fn write(cli: &Cli, main: &str, side: Option<&str>) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Other(e.to_string());
    match &cli.out {
        Some(p) => {
            std::fs::write(p, main).map_err(io)?;
            if let Some(side) = side {
                std::fs::write(p.with_extension("fom.csv"), side).map_err(io)?;
            }
        }
        None => {
            print!("{main}");
            if let Some(side) = side {
                print!("\n{side}");
            }
        }
    }
    Ok(())
}

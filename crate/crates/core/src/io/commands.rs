//! One command per figure-level dataset. Each writes its files into the output
//! directory and returns their paths.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::algebra::BlochVector;
use crate::design::{echo_curve, per_block_gate, rabi_curve, ramsey_curve, scan_init_tau, CurvePoint};
use crate::engine::{bloch_trace, photon_readout_mc, TrajectoryPoint};
use crate::error::{Error, Result};
use crate::optim::fit_sinusoid;
use crate::program::build_xy8_block;
use crate::spectroscopy::{fit_hyperfine, simulate_spectrum, FitBounds, FitResult};
use crate::system::{ramsey_frequencies, Branch};

use super::config::ResolvedConfig;
use super::table::{read_spectrum_csv, write_spectrum_csv, write_table, Cell};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Fit,
    Design,
    Rabi,
    Ramsey,
    Echo,
    Trace,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Spectrum,
        Command::Fit,
        Command::Design,
        Command::Rabi,
        Command::Ramsey,
        Command::Echo,
        Command::Trace,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Fit => "fit",
            Command::Design => "design",
            Command::Rabi => "rabi",
            Command::Ramsey => "ramsey",
            Command::Echo => "echo",
            Command::Trace => "trace",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config {
                path: "command".into(),
                message: format!("unknown command `{s}`"),
            })
    }
}

/// Process exit status for an error: 2 configuration, 3 non-identifiable fit,
/// 4 I/O, 1 anything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::UnknownSpin(_) | Error::InvalidProgram(_) => 2,
        Error::NonIdentifiable(_) => 3,
        Error::Io(_) | Error::Csv(_) => 4,
        _ => 1,
    }
}

/// Short machine-readable error category.
pub fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Config { .. } => "config",
        Error::InvalidParameter { .. } | Error::UnknownSpin(_) | Error::InvalidProgram(_) => "invalid_input",
        Error::NonIdentifiable(_) => "non_identifiable",
        Error::Io(_) | Error::Csv(_) => "io",
        Error::Json(_) => "json",
        _ => "numerical",
    }
}

/// Everything a command needs besides the configuration itself.
#[derive(Debug, Clone)]
pub struct RunContext<'a> {
    pub config: &'a ResolvedConfig,
    pub out_dir: &'a Path,
    pub seed: u64,
}

impl RunContext<'_> {
    fn header(&self, command: Command) -> Vec<String> {
        let mut lines = vec![
            format!("nucspin {VERSION}"),
            format!("command: {}", command.as_str()),
            format!("seed: {}", self.seed),
            format!("config: {}", self.config.to_json()),
        ];
        lines.extend(self.config.notes.iter().map(|n| format!("note: {n}")));
        lines
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write_json<T: Serialize>(&self, name: &str, command: Command, value: &T) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Document<'a, T> {
            header: Vec<String>,
            result: &'a T,
        }
        let path = self.path(name);
        let doc = Document {
            header: self.header(command),
            result: value,
        };
        fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(path)
    }
}

pub fn run_command(command: Command, ctx: &RunContext<'_>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(ctx.out_dir)?;
    match command {
        Command::Spectrum => spectrum(ctx),
        Command::Fit => fit(ctx),
        Command::Design => design(ctx),
        Command::Rabi => rabi(ctx),
        Command::Ramsey => ramsey(ctx),
        Command::Echo => echo(ctx),
        Command::Trace => trace(ctx),
    }
}

fn spectrum(ctx: &RunContext<'_>) -> Result<Vec<PathBuf>> {
    let cfg = &ctx.config.config;
    let grid = cfg.sequence.tau_grid.values();
    let mut points = simulate_spectrum(&grid, &ctx.config.system, cfg.sequence.n_pulses)?;
    if let Some(mc) = &cfg.monte_carlo {
        for (i, p) in points.iter_mut().enumerate() {
            let sample = photon_readout_mc(p.p_down.clamp(0.0, 1.0), mc.mean_bright_counts, mc.shots, ctx.seed.wrapping_add(i as u64))?;
            p.p_down = sample.p_down_estimate;
            p.sigma = Some(sample.sigma);
        }
    }
    let path = ctx.path("spectrum.csv");
    write_spectrum_csv(&path, &ctx.header(Command::Spectrum), &points)?;
    Ok(vec![path])
}

#[derive(Serialize)]
struct FitReport {
    input_csv: String,
    n_points: usize,
    n_pulses: usize,
    bounds: FitBounds,
    fit: FitResult,
}

fn fit(ctx: &RunContext<'_>) -> Result<Vec<PathBuf>> {
    let cfg = &ctx.config.config;
    let input = cfg
        .fit
        .input_csv
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| ctx.path("spectrum.csv"));
    let points = read_spectrum_csv(&input)?;
    let bounds = ctx.config.fit_bounds();
    let result = fit_hyperfine(&points, &bounds, cfg.sequence.n_pulses)?;
    let report = FitReport {
        input_csv: input.display().to_string(),
        n_points: points.len(),
        n_pulses: cfg.sequence.n_pulses,
        bounds,
        fit: result,
    };
    Ok(vec![ctx.write_json("fit.json", Command::Fit, &report)?])
}

fn design(ctx: &RunContext<'_>) -> Result<Vec<PathBuf>> {
    let seq = &ctx.config.config.sequence;
    let window = (seq.scan_window_us[0], seq.scan_window_us[1]);
    let report = scan_init_tau(window, seq.scan_steps, seq.n_init, &ctx.config.system)?;
    let rows: Vec<Vec<Cell>> = report
        .scan
        .iter()
        .map(|p| {
            vec![
                p.tau_us.into(),
                p.positive.down.into(),
                p.positive.up.into(),
                p.negative.down.into(),
                p.negative.up.into(),
                p.score().into(),
            ]
        })
        .collect();
    let csv = ctx.path("design.csv");
    write_table(
        &csv,
        &ctx.header(Command::Design),
        &["tau_us", "positive_down", "positive_up", "negative_down", "negative_up", "score"],
        &rows,
    )?;
    let json = ctx.write_json("design.json", Command::Design, &report)?;
    Ok(vec![csv, json])
}

fn rabi(ctx: &RunContext<'_>) -> Result<Vec<PathBuf>> {
    let seq = &ctx.config.config.sequence;
    let points = rabi_curve(&seq.n_prime_list, &ctx.config.timings(), &ctx.config.system)?;
    let rows: Vec<Vec<Cell>> = points
        .iter()
        .map(|p| vec![Cell::Int(p.n_prime as i64), p.p_down.into()])
        .collect();
    let path = ctx.path("rabi.csv");
    let mut header = ctx.header(Command::Rabi);
    let gate = per_block_gate(seq.tau_prime_us, &ctx.config.system)?;
    header.push(format!("per_block_phi_over_pi: {}", gate.phi / std::f64::consts::PI));
    write_table(&path, &header, &["n_prime", "p_down"], &rows)?;
    Ok(vec![path])
}

#[derive(Serialize)]
struct BranchFit {
    branch: Branch,
    predicted_mhz: f64,
    fitted_mhz: Option<f64>,
    amplitude: Option<f64>,
    offset: Option<f64>,
}

#[derive(Serialize)]
struct RamseyReport {
    branches: Vec<BranchFit>,
    /// `f_up − f_down` from the fits, an estimate of A∥.
    fitted_splitting_mhz: Option<f64>,
}

fn ramsey(ctx: &RunContext<'_>) -> Result<Vec<PathBuf>> {
    let sys = &ctx.config.system;
    let timings = ctx.config.timings();
    let grid = ctx.config.config.sequence.ramsey_grid.values();
    let up = ramsey_curve(&grid, Branch::Up, sys, &timings)?;
    let down = ramsey_curve(&grid, Branch::Down, sys, &timings)?;
    let rows: Vec<Vec<Cell>> = up
        .iter()
        .zip(&down)
        .map(|(u, d)| vec![u.t_us.into(), u.p_down.into(), d.p_down.into()])
        .collect();
    let csv = ctx.path("ramsey.csv");
    write_table(&csv, &ctx.header(Command::Ramsey), &["t_us", "p_down_up", "p_down_down"], &rows)?;

    let target = sys
        .spins()
        .first()
        .ok_or_else(|| Error::UnknownSpin("target".into()))?;
    let (f_up, f_dn) = ramsey_frequencies(sys.f_larmor, &target.hyperfine)?;
    let fit_branch = |branch: Branch, curve: &[CurvePoint], predicted: f64| {
        let x: Vec<f64> = curve.iter().map(|p| p.t_us).collect();
        let y: Vec<f64> = curve.iter().map(|p| p.p_down).collect();
        let fit = fit_sinusoid(&x, &y);
        BranchFit {
            branch,
            predicted_mhz: predicted,
            fitted_mhz: fit.map(|f| f.frequency),
            amplitude: fit.map(|f| f.amplitude),
            offset: fit.map(|f| f.offset),
        }
    };
    let branches = vec![fit_branch(Branch::Up, &up, f_up), fit_branch(Branch::Down, &down, f_dn)];
    let fitted_splitting_mhz = match (branches[0].fitted_mhz, branches[1].fitted_mhz) {
        (Some(a), Some(b)) => Some(a - b),
        _ => None,
    };
    let json = ctx.write_json(
        "ramsey_fit.json",
        Command::Ramsey,
        &RamseyReport {
            branches,
            fitted_splitting_mhz,
        },
    )?;
    Ok(vec![csv, json])
}

fn echo(ctx: &RunContext<'_>) -> Result<Vec<PathBuf>> {
    let grid = ctx.config.config.sequence.echo_grid.values();
    let points = echo_curve(&grid, &ctx.config.system, &ctx.config.timings())?;
    let rows: Vec<Vec<Cell>> = points.iter().map(|p| vec![p.t_us.into(), p.p_down.into()]).collect();
    let path = ctx.path("echo.csv");
    write_table(&path, &ctx.header(Command::Echo), &["t_us", "p_down"], &rows)?;
    Ok(vec![path])
}

fn trace(ctx: &RunContext<'_>) -> Result<Vec<PathBuf>> {
    let seq = &ctx.config.config.sequence;
    let sys = &ctx.config.system;
    let label = &sys
        .spins()
        .first()
        .ok_or_else(|| Error::UnknownSpin("target".into()))?
        .label;
    let block = build_xy8_block(seq.trace_n_pulses, seq.trace_tau_us)?;
    let initial = match seq.trace_initial {
        Branch::Up => BlochVector::UP,
        Branch::Down => BlochVector::DOWN,
    };
    let tr = bloch_trace(&block, sys, label, initial, seq.samples_per_delay)?;
    let row = |start: Branch, p: &TrajectoryPoint| {
        vec![
            Cell::Text(start.as_str().into()),
            p.time_us.into(),
            Cell::Text(p.branch.as_str().into()),
            p.bloch.x.into(),
            p.bloch.y.into(),
            p.bloch.z.into(),
        ]
    };
    let rows: Vec<Vec<Cell>> = tr
        .up
        .points
        .iter()
        .map(|p| row(Branch::Up, p))
        .chain(tr.down.points.iter().map(|p| row(Branch::Down, p)))
        .collect();
    let path = ctx.path("trace.csv");
    write_table(
        &path,
        &ctx.header(Command::Trace),
        &["electron_start", "time_us", "electron_branch", "x", "y", "z"],
        &rows,
    )?;
    Ok(vec![path])
}

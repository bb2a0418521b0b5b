//! `rabi` command-line front end.
//!
//! Every subcommand writes exactly one artifact (CSV or JSON) to `--out` or
//! standard output. Exit codes: 0 success, 1 error, 2 `verify` found
//! predicate violations.

mod config;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rabi_core::conjecture::{sweep, AttributionRule, PointStatus, PredicateVersion, Side, SweepConfig};
use rabi_core::exceptional::{find_judd_points, find_nonjuddean_points, SearchOptions, DEFAULT_GRID};
use rabi_core::gfunction::{g_eval, DEFAULT_EPS};
use rabi_core::numerics::linspace;
use rabi_core::oracle::oracle_spectrum;
use rabi_core::report::report_serialize;
use rabi_core::spectrum::{asymptotic_check, crosscheck, solve_spectrum, Classification, EigenvalueRecord, Source};
use rabi_core::{validate, ModelParams, Parity, RabiError, ScaledEnergy};

use output::{emit, json, num, Format, Table};

const UNITS: &str = "Units: energies, g and delta are in the same unit as --omega (default 1, so \
everything is in units of omega). x is the scaled energy E/omega + (g/omega)^2; baseline n sits at x = n.";

#[derive(Parser, Debug)]
#[command(name = "rabi", version, about = "Spectrum, exceptional points and interval counts of the quantum Rabi model")]
#[command(after_help = UNITS)]
pub struct Cli {
    /// key=value file supplying flag defaults; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Model {
    /// Oscillator frequency; sets the energy unit.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Qubit-oscillator coupling.
    #[arg(long)]
    g: f64,
    /// Qubit splitting (half the bare level gap).
    #[arg(long)]
    delta: f64,
}

impl Model {
    fn params(&self) -> ModelParams {
        ModelParams::new(self.omega, self.g, self.delta)
    }
}

#[derive(Args, Debug, Clone)]
struct Out {
    /// Output format; defaults to csv (json for verify).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ParityArg {
    Plus,
    Minus,
}

impl From<ParityArg> for Parity {
    fn from(p: ParityArg) -> Self {
        match p {
            ParityArg::Plus => Parity::Plus,
            ParityArg::Minus => Parity::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Left => Side::Left,
            SideArg::Right => Side::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PredicateArg {
    Classic,
    Extended,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sample G(x) on a uniform x grid (columns x,G,error_estimate).
    ///
    /// Points within 1e-6 of a pole are written as NaN.
    #[command(after_help = UNITS)]
    Gfunc {
        #[command(flatten)]
        model: Model,
        #[arg(long, value_enum, default_value = "plus")]
        parity: ParityArg,
        /// Lower end of the x grid (scaled energy).
        #[arg(long)]
        x_min: f64,
        /// Upper end of the x grid (scaled energy).
        #[arg(long)]
        x_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Eigenvalues below baseline n_max from G-function zeros plus exceptional levels.
    #[command(after_help = UNITS)]
    Spectrum {
        #[command(flatten)]
        model: Model,
        /// Number of baselines covered (levels with x < n_max).
        #[arg(long, default_value_t = 6)]
        n_max: u32,
        #[command(flatten)]
        out: Out,
    },
    /// Eigenvalues from truncated-basis diagonalization.
    #[command(after_help = UNITS)]
    Oracle {
        #[command(flatten)]
        model: Model,
        /// Levels with x < n_max are reported unless --e-max is given.
        #[arg(long, default_value_t = 6)]
        n_max: u32,
        /// Energy ceiling (same unit as omega).
        #[arg(long)]
        e_max: Option<f64>,
        /// Convergence tolerance on the reported energies.
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        #[command(flatten)]
        out: Out,
    },
    /// Couplings where baseline n carries a doubly degenerate (Juddean) level.
    #[command(after_help = UNITS)]
    Judd {
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long)]
        delta: f64,
        /// Baseline index.
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0.05)]
        g_min: f64,
        #[arg(long, default_value_t = 3.0)]
        g_max: f64,
        /// Root tolerance in g.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Scan grid size over the g range.
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Couplings where baseline n carries a single, non-degenerate level.
    #[command(after_help = UNITS)]
    Nonjuddean {
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value = "plus")]
        parity: ParityArg,
        #[arg(long, default_value_t = 0.05)]
        g_min: f64,
        #[arg(long, default_value_t = 3.0)]
        g_max: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[command(flatten)]
        out: Out,
    },
    /// Interval-count sweep over a (g, delta) grid; writes a JSON report.
    ///
    /// Exit code 2 when any grid point violates the predicate, 1 when a
    /// point errored.
    #[command(after_help = UNITS)]
    Verify {
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long)]
        g_min: f64,
        #[arg(long)]
        g_max: f64,
        /// Grid points in g, endpoints included.
        #[arg(long)]
        g_steps: usize,
        #[arg(long)]
        delta_min: f64,
        #[arg(long)]
        delta_max: f64,
        #[arg(long)]
        delta_steps: usize,
        /// Baselines covered per point.
        #[arg(long, default_value_t = 8)]
        n_max: u32,
        #[arg(long, value_enum, default_value = "extended")]
        predicate: PredicateArg,
        /// Interval receiving the plus member of a Juddean pair.
        #[arg(long, value_enum, default_value = "right")]
        juddean_plus_side: SideArg,
        /// Interval receiving a non-Juddean level.
        #[arg(long, value_enum, default_value = "right")]
        nonjuddean_side: SideArg,
        /// Worker threads; output does not depend on it.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Record wall-clock timings in the report.
        #[arg(long)]
        timestamp: bool,
        #[command(flatten)]
        out: Out,
    },
    /// Compare G-function and oracle spectra level by level.
    ///
    /// Exits 1 when the comparison fails.
    #[command(after_help = UNITS)]
    Crosscheck {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 6)]
        n_max: u32,
        /// Allowed energy deviation.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        out: Out,
    },
    /// Parity splittings s_n = |E_n+ - E_n-| at strong coupling (omega = 1).
    #[command(after_help = UNITS)]
    Asymptotic {
        #[arg(long)]
        delta: f64,
        /// Comma-separated couplings, ascending, each >= 1.5.
        #[arg(long, value_delimiter = ',', default_value = "1.5,2,2.5,3")]
        g_values: Vec<f64>,
        /// Level pairs per coupling.
        #[arg(long, default_value_t = 3)]
        n_max: u32,
        #[command(flatten)]
        out: Out,
    },
}

fn command() -> clap::Command {
    let mut cmd = Cli::command().args_override_self(true);
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        cmd = cmd.mut_subcommand(name, |s| s.args_override_self(true));
    }
    cmd
}

/// Splices config-file arguments right after the subcommand name so that
/// explicit flags, which come later, override them.
fn expand_args(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(path) = config::find_config(&args) else {
        return Ok(args);
    };
    let cmd = command();
    let Some((pos, sub)) = args.iter().enumerate().skip(1).find_map(|(i, a)| cmd.find_subcommand(a).map(|s| (i, s)))
    else {
        return Ok(args);
    };
    let extra = config::config_args(path.as_ref(), sub)?;
    let mut out = args[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

/// Parses `argv` and runs one subcommand. Returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let args = match expand_args(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            return 1;
        }
    };
    let cli = match command().try_get_matches_from(args).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    return 0;
                }
                _ => 1,
            };
            let _ = write!(stderr, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
    }
}

fn classification_str(c: Classification) -> &'static str {
    match c {
        Classification::Regular => "regular",
        Classification::ExceptionalJuddean => "juddean",
        Classification::ExceptionalNonJuddean => "nonjuddean",
    }
}

fn source_str(s: Source) -> &'static str {
    match s {
        Source::GFunction => "gfunction",
        Source::Oracle => "oracle",
    }
}

fn records_table(records: &[EigenvalueRecord]) -> Table {
    let mut t = Table::new(&["energy", "x", "parity", "classification", "interval", "source", "uncertainty"]);
    for r in records {
        t.push(vec![
            num(r.energy),
            num(r.x.0),
            r.parity.as_str().into(),
            classification_str(r.classification).into(),
            r.interval_index.to_string(),
            source_str(r.source).into(),
            num(r.uncertainty),
        ]);
    }
    t
}

fn check_range(lo: f64, hi: f64, steps: usize, what: &str) -> anyhow::Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || steps == 0 || (steps > 1 && hi <= lo) {
        bail!("{what} grid needs finite min < max and at least one step");
    }
    Ok(linspace(lo, hi, steps))
}

fn dispatch(cmd: Cmd, stdout: &mut dyn Write) -> anyhow::Result<u8> {
    let mut code = 0;
    let (bytes, out) = match cmd {
        Cmd::Gfunc { model, parity, x_min, x_max, points, out } => {
            let params = model.params();
            validate(&params)?;
            let xs = check_range(x_min, x_max, points, "x")?;
            let parity = Parity::from(parity);
            let mut rows = Vec::with_capacity(xs.len());
            for x in xs {
                let (v, e) = match g_eval(parity, ScaledEnergy(x), &params, DEFAULT_EPS) {
                    Ok(gv) => (gv.value, gv.error_estimate),
                    Err(RabiError::PoleProximity { .. }) => (f64::NAN, f64::NAN),
                    Err(e) => return Err(e).with_context(|| format!("G at x = {x}")),
                };
                rows.push((x, v, e));
            }
            let bytes = match out.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut t = Table::new(&["x", "G", "error_estimate"]);
                    for (x, v, e) in rows {
                        t.push(vec![num(x), num(v), num(e)]);
                    }
                    t.to_bytes()?
                }
                Format::Json => {
                    #[derive(serde::Serialize)]
                    struct Row {
                        x: f64,
                        #[serde(rename = "G")]
                        g: Option<f64>,
                        error_estimate: Option<f64>,
                    }
                    let rows: Vec<Row> = rows
                        .into_iter()
                        .map(|(x, v, e)| Row {
                            x,
                            g: v.is_finite().then_some(v),
                            error_estimate: e.is_finite().then_some(e),
                        })
                        .collect();
                    json(&rows)?
                }
            };
            (bytes, out)
        }
        Cmd::Spectrum { model, n_max, out } => {
            let records = solve_spectrum(&model.params(), n_max)?;
            let bytes = match out.format.unwrap_or(Format::Csv) {
                Format::Csv => records_table(&records).to_bytes()?,
                Format::Json => json(&records)?,
            };
            (bytes, out)
        }
        Cmd::Oracle { model, n_max, e_max, tol, out } => {
            let params = model.params();
            let ceiling = e_max.unwrap_or_else(|| params.baseline_energy(n_max as i64) - 1e-9 * params.omega);
            let spec = oracle_spectrum(&params, ceiling, tol)?;
            let bytes = match out.format.unwrap_or(Format::Csv) {
                Format::Csv => records_table(&spec.records).to_bytes()?,
                Format::Json => json(&spec)?,
            };
            (bytes, out)
        }
        Cmd::Judd { omega, delta, n, g_min, g_max, tol, grid, out } => {
            let opts = SearchOptions { omega, grid_points: grid };
            let found = find_judd_points(n, delta, (g_min, g_max), tol, &opts)?;
            let bytes = match out.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut t = Table::new(&["n", "g_star", "delta", "residual", "oracle_gap"]);
                    for p in &found.points {
                        t.push(vec![p.n.to_string(), num(p.g_star), num(p.delta), num(p.residual), num(p.oracle_gap)]);
                    }
                    t.to_bytes()?
                }
                Format::Json => json(&found)?,
            };
            (bytes, out)
        }
        Cmd::Nonjuddean { omega, delta, n, parity, g_min, g_max, tol, grid, out } => {
            let opts = SearchOptions { omega, grid_points: grid };
            let found = find_nonjuddean_points(n, parity.into(), delta, (g_min, g_max), tol, &opts)?;
            let bytes = match out.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut t = Table::new(&[
                        "n",
                        "parity",
                        "g_star",
                        "delta",
                        "condition_residual",
                        "oracle_gap_same_parity",
                        "oracle_gap_other_parity",
                    ]);
                    for p in &found.points {
                        t.push(vec![
                            p.n.to_string(),
                            p.parity.as_str().into(),
                            num(p.g_star),
                            num(p.delta),
                            num(p.condition_residual),
                            num(p.oracle_gap_same_parity),
                            num(p.oracle_gap_other_parity),
                        ]);
                    }
                    t.to_bytes()?
                }
                Format::Json => json(&found)?,
            };
            (bytes, out)
        }
        Cmd::Verify {
            omega,
            g_min,
            g_max,
            g_steps,
            delta_min,
            delta_max,
            delta_steps,
            n_max,
            predicate,
            juddean_plus_side,
            nonjuddean_side,
            jobs,
            timestamp,
            out,
        } => {
            let mut cfg = SweepConfig::new(
                check_range(g_min, g_max, g_steps, "g")?,
                check_range(delta_min, delta_max, delta_steps, "delta")?,
                n_max,
            );
            cfg.omega = omega;
            cfg.predicate_version = match predicate {
                PredicateArg::Classic => PredicateVersion::Classic,
                PredicateArg::Extended => PredicateVersion::Extended,
            };
            cfg.attribution = AttributionRule {
                juddean_plus_side: juddean_plus_side.into(),
                nonjuddean_side: nonjuddean_side.into(),
            };
            cfg.jobs = jobs;
            cfg.record_timing = timestamp;
            let report = sweep(&cfg)?;
            if report.points.iter().any(|p| p.status == PointStatus::Errored) {
                code = 1;
            } else if report.summary.violating_points > 0 {
                code = 2;
            }
            let bytes = match out.format.unwrap_or(Format::Json) {
                Format::Json => report_serialize(&report)?,
                Format::Csv => {
                    let mut t = Table::new(&["g", "delta", "status", "holds", "violations", "max_count"]);
                    for p in &report.points {
                        t.push(vec![
                            num(p.g),
                            num(p.delta),
                            if p.status == PointStatus::Ok { "OK" } else { "ERRORED" }.into(),
                            p.predicate.as_ref().map_or(String::new(), |r| r.holds.to_string()),
                            p.predicate.as_ref().map_or(0, |r| r.violations.len()).to_string(),
                            p.censuses.iter().map(|c| c.count).max().unwrap_or(0).to_string(),
                        ]);
                    }
                    t.to_bytes()?
                }
            };
            (bytes, out)
        }
        Cmd::Crosscheck { model, n_max, tol, out } => {
            let diff = crosscheck(&model.params(), n_max, tol)?;
            if !diff.pass {
                code = 1;
            }
            let bytes = match out.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut t = Table::new(&["parity", "gfunction", "oracle", "deviation", "classification"]);
                    for m in &diff.matches {
                        t.push(vec![
                            m.parity.as_str().into(),
                            num(m.gfunction),
                            num(m.oracle),
                            num(m.deviation),
                            classification_str(m.classification).into(),
                        ]);
                    }
                    t.to_bytes()?
                }
                Format::Json => json(&diff)?,
            };
            (bytes, out)
        }
        Cmd::Asymptotic { delta, g_values, n_max, out } => {
            let table = asymptotic_check(delta, &g_values, n_max)?;
            let bytes = match out.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let names: Vec<String> =
                        std::iter::once("g".to_string()).chain((0..n_max).map(|k| format!("s_{k}"))).collect();
                    let mut t = Table::new(&names);
                    for r in &table.rows {
                        let mut row = vec![num(r.g)];
                        row.extend((0..n_max as usize).map(|k| r.splittings.get(k).map_or(String::new(), |&s| num(s))));
                        t.push(row);
                    }
                    t.to_bytes()?
                }
                Format::Json => json(&table)?,
            };
            (bytes, out)
        }
    };
    emit(&bytes, out.out.as_deref(), stdout)?;
    Ok(code)
}

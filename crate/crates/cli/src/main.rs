//! `erasure-lab`: exponents, universal fractions, lower bounds and simulations from the
//! command line. Results go to stdout (or `--output`) as CSV or JSON.
//!
//! Exit codes: 0 on success, 1 on bad input, 2 when the solver outcome is degenerate
//! (for example every exponent is infinite).

mod family_file;
mod rows;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use erasure_core::info_math::LN2;
use erasure_core::known_exponents::{e1_bsc, e1_general, ExponentQuery};
use erasure_core::lower_bound::{gap_diagnostics, gap_thresholds, xi_lower};
use erasure_core::simulator::{estimate, DecoderMode, Method};
use erasure_core::universal_fraction::{xi_star, xi_star_bsc, DEFAULT_Q_STEP, DEFAULT_XI_STEP};
use erasure_core::{ChannelFamily, FractionResult, GridSpec, SimConfig};
use serde::Serialize;

use rows::*;

#[derive(Parser, Debug)]
#[command(
    name = "erasure-lab",
    version,
    about = "Erasure/list exponents and universal decoding fractions"
)]
struct Cli {
    /// Read and report rates, thresholds and exponents in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,

    /// Worker threads for the parallel solvers.
    #[arg(long, global = true, env = "ERASURE_LAB_THREADS")]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct Point {
    /// Coding rate.
    #[arg(long, allow_negative_numbers = true)]
    r: f64,
    /// Threshold; negative values select list decoding.
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
    /// Channel family: a JSON family file or `bsc:θ1,θ2,…`.
    #[arg(long)]
    family: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Known-channel exponents E1 and E2 of every family member.
    Exponent {
        #[command(flatten)]
        point: Point,
    },
    /// Largest universally achievable fraction.
    Xistar {
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = DEFAULT_XI_STEP)]
        xi_step: f64,
        /// Step of the q grid used by the BSC solver.
        #[arg(long, default_value_t = DEFAULT_Q_STEP)]
        q_step: f64,
        /// Use the general solver even for a uniform-input BSC grid.
        #[arg(long)]
        general: bool,
    },
    /// Random-coding lower bound on the fraction, with its saddle point.
    Xilower {
        #[command(flatten)]
        point: Point,
        /// Points per axis of the (s, rho) grid.
        #[arg(long, default_value_t = 201)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Constrained and relaxed saddle problems at one fraction.
    Gap {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        xi: f64,
        /// Also locate the largest fraction each problem admits (slow).
        #[arg(long)]
        thresholds: bool,
    },
    /// Monte-Carlo or exhaustive decoding error estimates.
    Simulate {
        #[command(flatten)]
        point: Point,
        /// Block lengths, comma separated; one output row each.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Mode::Forney)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = SimMethod::MonteCarlo)]
        method: SimMethod,
        /// Trials, or codebooks averaged by the exhaustive method.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of the universal metric; defaults to the family's largest fraction.
        #[arg(long)]
        xi: Option<f64>,
        /// Family member that carries the codewords.
        #[arg(long, default_value_t = 0)]
        channel: usize,
    },
    /// Both worked examples end to end: (R, T) = (0.05, 0.15) on the grid {0.00, 0.01, …, 1.00}
    /// and (0.4, −0.25) on {0.1, 0.15}, uniform inputs.
    ReproduceExamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Forney,
    Universal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimMethod {
    MonteCarlo,
    Exhaustive,
}

/// A solver outcome that is well defined but not useful, reported with exit code 2.
#[derive(Debug)]
struct Degenerate(String);

impl std::fmt::Display for Degenerate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "degenerate result: {}", self.0)
    }
}

impl std::error::Error for Degenerate {}

struct Ctx {
    unit: f64,
    format: Format,
}

impl Ctx {
    /// Input value in nats.
    fn nats(&self, v: f64) -> f64 {
        v * self.unit
    }

    /// Output value in the user's unit.
    fn out(&self, v: f64) -> f64 {
        v / self.unit
    }
}

fn load(point: &Point, ctx: &Ctx) -> Result<(ChannelFamily, f64, f64)> {
    let family = family_file::resolve(&point.family)?;
    Ok((family, ctx.nats(point.r), ctx.nats(point.t)))
}

fn fraction(
    family: &ChannelFamily,
    r: f64,
    t: f64,
    xi_step: f64,
    q_step: f64,
    general: bool,
) -> Result<FractionResult> {
    let table = family.exponents(r, t)?;
    Ok(if family.is_uniform_bsc() && !general {
        xi_star_bsc(family, &table, xi_step, q_step)?
    } else {
        xi_star(family, &table, xi_step)?
    })
}

fn write_rows<R: Serialize>(rows: &[R], ctx: &Ctx, out: &mut dyn Write) -> Result<()> {
    match ctx.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(k) = cli.threads {
        if k == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()?;
    }
    let ctx = Ctx {
        unit: if cli.bits { LN2 } else { 1.0 },
        format: cli.format,
    };
    let mut out: Box<dyn Write> = match &cli.output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.command {
        Command::Exponent { point } => {
            let (family, r, t) = load(&point, &ctx)?;
            let rows = (0..family.len())
                .map(|i| {
                    let e = if family.is_uniform_bsc() {
                        e1_bsc(r, t, family.thetas[i])?
                    } else {
                        e1_general(&ExponentQuery::new(
                            r,
                            t,
                            family.channels[i].clone(),
                            family.px.clone(),
                        )?)?
                    };
                    Ok(ExponentRow {
                        r: ctx.out(r),
                        t: ctx.out(t),
                        theta: family.label(i),
                        e1: ctx.out(e.e1),
                        e2: ctx.out(e.e2),
                        branch: format!("{:?}", e.branch),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            write_rows(&rows, &ctx, &mut out)?;
            out.flush()?;
            if rows.iter().all(|row| row.e1.is_infinite()) {
                return Err(Degenerate("every exponent is infinite".into()).into());
            }
        }
        Command::Xistar {
            point,
            xi_step,
            q_step,
            general,
        } => {
            let (family, r, t) = load(&point, &ctx)?;
            let f = fraction(&family, r, t, xi_step, q_step, general)?;
            let row = XiStarRow {
                r: ctx.out(r),
                t: ctx.out(t),
                xi_star: f.xi,
                active_condition: f.active_condition.to_string(),
                argmax_theta: family.label(f.argmax_theta),
                slack_a: ctx.out(f.slack_a),
                slack_b: ctx.out(f.slack_b),
            };
            write_rows(&[row], &ctx, &mut out)?;
            out.flush()?;
            if f.degenerate {
                return Err(
                    Degenerate("no fraction on the grid satisfies both conditions".into()).into(),
                );
            }
        }
        Command::Xilower { point, grid, tol } => {
            let (family, r, t) = load(&point, &ctx)?;
            let table = family.exponents(r, t)?;
            let (xl, d) = xi_lower(&family, &table, GridSpec { n: grid, tol })?;
            let row = XiLowerRow {
                r: ctx.out(r),
                t: ctx.out(t),
                xi_lower: xl,
                theta_star: family.label(d.theta_star),
                theta_dprime_star: family.label(d.theta_dprime_star),
                s_star: d.s_star,
                rho_star: d.rho_star,
            };
            write_rows(&[row], &ctx, &mut out)?;
            out.flush()?;
            if !xl.is_finite() {
                return Err(Degenerate("the lower bound is not finite".into()).into());
            }
        }
        Command::Gap {
            point,
            xi,
            thresholds,
        } => {
            let (family, r, t) = load(&point, &ctx)?;
            let table = family.exponents(r, t)?;
            let d = gap_diagnostics(&family, &table, xi)?;
            let rel = d.relaxed.clone().context("relaxed problem missing")?;
            let (xi_constrained, xi_relaxed) = if thresholds {
                let (a, b) = gap_thresholds(&family, &table)?;
                (Some(a), Some(b))
            } else {
                (None, None)
            };
            let row = GapRow {
                r: ctx.out(r),
                t: ctx.out(t),
                xi,
                constrained_value: ctx.out(d.constrained_value),
                theta_star: family.label(d.theta_star),
                theta_dprime_star: family.label(d.theta_dprime_star),
                s_star: d.s_star,
                rho_star: d.rho_star,
                relaxed_value: ctx.out(rel.value),
                relaxed_theta_star: family.label(rel.theta_star),
                relaxed_theta_prime_star: family.label(rel.theta_prime_star),
                relaxed_theta_dprime_star: family.label(rel.theta_dprime_star),
                relaxed_s: rel.s,
                relaxed_rho: rel.rho,
                constraint_active: rel.constraint_active,
                xi_constrained,
                xi_relaxed,
            };
            write_rows(&[row], &ctx, &mut out)?;
            out.flush()?;
            if !(d.constrained_value.is_finite() && rel.value.is_finite()) {
                return Err(Degenerate("a saddle value is not finite".into()).into());
            }
        }
        Command::Simulate {
            point,
            n,
            mode,
            method,
            trials,
            seed,
            xi,
            channel,
        } => {
            let (family, r, t) = load(&point, &ctx)?;
            if channel >= family.len() {
                bail!(
                    "--channel {channel} but the family has {} members",
                    family.len()
                );
            }
            let xi = match (mode, xi) {
                (Mode::Universal, None) => {
                    let f = fraction(&family, r, t, DEFAULT_XI_STEP, DEFAULT_Q_STEP, false)?;
                    eprintln!("using xi = {}", f.xi);
                    f.xi
                }
                (_, x) => x.unwrap_or(0.0),
            };
            let mut rows = Vec::with_capacity(n.len());
            for &len in &n {
                let cfg = SimConfig {
                    n: len,
                    r,
                    t,
                    channel: family.channels[channel].clone(),
                    family: (mode == Mode::Universal).then(|| family.clone()),
                    xi,
                    px: family.px.clone(),
                    trials,
                    seed,
                    mode: match mode {
                        Mode::Forney => DecoderMode::Forney,
                        Mode::Universal => DecoderMode::Universal,
                    },
                    method: match method {
                        SimMethod::MonteCarlo => Method::MonteCarlo,
                        SimMethod::Exhaustive => Method::Exhaustive,
                    },
                    codebook: None,
                };
                let rep = estimate(&cfg).with_context(|| format!("n = {len}"))?;
                rows.push(SimulateRow::from(&rep));
            }
            write_rows(&rows, &ctx, &mut out)?;
        }
        Command::ReproduceExamples => {
            let examples: [(Vec<f64>, f64, f64); 2] = [
                ((0..=100).map(|k| 0.01 * k as f64).collect(), 0.05, 0.15),
                (vec![0.1, 0.15], 0.4, -0.25),
            ];
            let mut rows = Vec::new();
            for (thetas, r, t) in examples {
                let family = ChannelFamily::bsc_grid(&thetas, vec![0.5, 0.5])?;
                let table = family.exponents(r, t)?;
                let (xl, _) = xi_lower(&family, &table, GridSpec::default())?;
                let f = xi_star_bsc(&family, &table, DEFAULT_XI_STEP, DEFAULT_Q_STEP)?;
                rows.push(ExampleRow {
                    r: round3(ctx.out(r)),
                    t: round3(ctx.out(t)),
                    xi_lower: round3(xl),
                    xi_star: round3(f.xi),
                });
            }
            write_rows(&rows, &ctx, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Degenerate>() => {
            eprintln!("erasure-lab: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("erasure-lab: {e:#}");
            ExitCode::from(1)
        }
    }
}

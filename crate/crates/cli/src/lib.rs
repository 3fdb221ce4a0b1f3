//! Command-line front end: `parse` turns argv into a serializable [`RunPlan`],
//! `render` runs a plan and returns its data output.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use perclab_core::estimators::{self, HcOptions};
use perclab_core::exact::{self, EventSpec};
use perclab_core::models::{self, DEFAULT_MAJORITY_THRESHOLD};
use perclab_core::stats::{write_csv, Estimate};
use perclab_core::validate::{self, ValidateConfig};
use perclab_core::{Event, FieldKey, ModelSpec, Rect, Seed, Vertex};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModelArg {
    Bernoulli,
    MajorityBox,
    Ising,
}

#[derive(Debug, Parser)]
#[command(name = "perclab", version, about = "Dependent site percolation lab")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output format for data.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Write data to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the parsed plan as JSON instead of running it.
    #[arg(long, global = true)]
    dump_plan: bool,
    /// Run a plan previously written with --dump-plan.
    #[arg(long, conflicts_with = "dump_plan")]
    plan: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Debug, Clone, Args)]
struct ModelArgs {
    /// Spin model.
    #[arg(long, value_enum, default_value = "bernoulli")]
    model: ModelArg,
    /// Inverse temperature (required with --model ising).
    #[arg(long)]
    beta: Option<f64>,
    /// Majority threshold t of the majority_box model.
    #[arg(long, default_value_t = DEFAULT_MAJORITY_THRESHOLD)]
    threshold: u32,
    /// Seed, decimal or 0x-hex.
    #[arg(long, default_value = "1")]
    seed: String,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Sample one window and print it as a record.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        h: f64,
        /// Box `x0:x1,y0:y1`.
        #[arg(long = "box", default_value = "0:15,0:15", allow_hyphen_values = true)]
        rect: String,
        #[arg(long, default_value_t = 0)]
        replica: u64,
    },
    /// Estimate one event probability.
    Crossing {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "H:16x16")]
        event: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        h: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Estimate an event along an h grid.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "H:16x16")]
        event: String,
        /// Grid `lo:hi:count` or a single value.
        #[arg(long, default_value = "-1:1:21", allow_hyphen_values = true)]
        h: String,
        #[arg(long, default_value_t = 2_000)]
        trials: u64,
        /// Rescale the event to each box height n (same aspect ratio).
        #[arg(long, value_delimiter = ',')]
        n_list: Vec<u32>,
    },
    /// Bisection for the crossing level 1/2 of H(n, n).
    Hc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 16)]
        n: u32,
        /// Use the dual `+*` crossing instead of H.
        #[arg(long)]
        dual: bool,
        /// Trials per probe before escalation.
        #[arg(long, default_value_t = 1_000)]
        trials: u64,
        #[arg(long, default_value_t = 0.002)]
        tol: f64,
        /// Initial bracket `lo:hi`.
        #[arg(long, default_value = "-3:3", allow_hyphen_values = true)]
        bracket: String,
    },
    /// Origin cluster-size tails in B(half).
    Tails {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        h: f64,
        #[arg(long, default_value_t = 32)]
        half: u32,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Coalescence-depth tails of the Ising sampler on an h grid.
    CftpTail {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        h: String,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value = "1")]
        seed: String,
    },
    /// Internal pivotality of field keys for H(3n, n).
    Pivotal {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 4)]
        n: u32,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        h: String,
        /// Field key `x,y,t` (repeatable). Default: keys at the box centre.
        #[arg(long = "key", allow_hyphen_values = true)]
        keys: Vec<String>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Covariance of centre spins of two boxes against their separation.
    Mixing {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        h: f64,
        #[arg(long, default_value_t = 3)]
        side: u32,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        separations: Vec<u32>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Trials for the measured determinedness constant (0 = skip).
        #[arg(long, default_value_t = 0)]
        c0_trials: u64,
    },
    /// Finite-size criterion at box size N.
    FiniteSize {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        h: f64,
        #[arg(long, default_value_t = 16)]
        n: u32,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Exact enumeration oracles (Bernoulli, boxes up to 22 vertices).
    Exact {
        #[command(subcommand)]
        op: ExactCmd,
    },
    /// Run the invariant suite and print a pass/fail table.
    Validate {
        #[arg(long, default_value = "1")]
        seed: String,
        #[arg(long, default_value_t = 20_000)]
        trials: u64,
    },
}

#[derive(Debug, Clone, Args)]
struct ExactEvent {
    /// Event; defaults to H:<nx>x<ny>.
    #[arg(long)]
    event: Option<String>,
    #[arg(long, default_value_t = 1)]
    nx: u32,
    #[arg(long, default_value_t = 1)]
    ny: u32,
}

#[derive(Debug, Subcommand)]
enum ExactCmd {
    /// P_p(A) as integer coefficients in p.
    Crossing {
        #[command(flatten)]
        event: ExactEvent,
    },
    /// Pivotal probability polynomials (one site or all).
    Pivotal {
        #[command(flatten)]
        event: ExactEvent,
        /// Site `x,y`; all sites when omitted.
        #[arg(long, allow_hyphen_values = true)]
        site: Option<String>,
    },
    /// p dP/dp against the sum of pivotal polynomials.
    Russo {
        #[command(flatten)]
        event: ExactEvent,
    },
    /// Sharp-threshold constant K(p) and the integrated check.
    Talagrand {
        #[command(flatten)]
        event: ExactEvent,
        #[arg(long, default_value = "0.05:0.95:19")]
        p: String,
        #[arg(long, default_value_t = 0.3)]
        p1: f64,
        #[arg(long, default_value_t = 0.7)]
        p2: f64,
        #[arg(long, default_value_t = 1.0)]
        k1: f64,
    },
    /// Positive association and the square-root trick.
    Fkg {
        /// Events on one box (repeatable, up to 4). Default: the one-sided
        /// connections of the 3x3 box.
        #[arg(long = "event")]
        events: Vec<String>,
        #[arg(long, default_value_t = 0.6)]
        p: f64,
    },
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub command: Command,
    pub format: Format,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    Sample {
        model: ModelSpec,
        seed: Seed,
        h: f64,
        rect: Rect,
        replica: u64,
    },
    Crossing {
        model: ModelSpec,
        seed: Seed,
        event: String,
        h: f64,
        trials: u64,
    },
    Sweep {
        model: ModelSpec,
        seed: Seed,
        event: String,
        h_grid: Vec<f64>,
        trials: u64,
        n_list: Vec<u32>,
    },
    Hc {
        model: ModelSpec,
        seed: Seed,
        event: String,
        options: HcOptions,
    },
    Tails {
        model: ModelSpec,
        seed: Seed,
        h: f64,
        half: u32,
        trials: u64,
    },
    CftpTail {
        beta: f64,
        seed: Seed,
        h_grid: Vec<f64>,
        trials: u64,
    },
    Pivotal {
        model: ModelSpec,
        seed: Seed,
        event: String,
        h_grid: Vec<f64>,
        keys: Vec<FieldKey>,
        trials: u64,
    },
    Mixing {
        model: ModelSpec,
        seed: Seed,
        h: f64,
        side: u32,
        separations: Vec<u32>,
        trials: u64,
        c0_trials: u64,
    },
    FiniteSize {
        model: ModelSpec,
        seed: Seed,
        h: f64,
        n: u32,
        eps: f64,
        trials: u64,
    },
    ExactCrossing {
        event: String,
    },
    ExactPivotal {
        event: String,
        site: Option<Vertex>,
    },
    ExactRusso {
        event: String,
    },
    ExactTalagrand {
        event: String,
        p_grid: Vec<f64>,
        p1: f64,
        p2: f64,
        k1: f64,
    },
    ExactFkg {
        events: Vec<String>,
        p: f64,
    },
    Validate {
        config: ValidateConfig,
    },
}

fn usage(kind: ErrorKind, msg: impl std::fmt::Display) -> clap::Error {
    Cli::command().error(kind, msg)
}

fn invalid(flag: &str, msg: impl std::fmt::Display) -> clap::Error {
    usage(ErrorKind::ValueValidation, format!("invalid value for {flag}: {msg}"))
}

fn seed_of(s: &str) -> Result<Seed, clap::Error> {
    s.parse().map_err(|e| invalid("--seed", e))
}

fn model_of(m: &ModelArgs) -> Result<(ModelSpec, Seed), clap::Error> {
    let spec = match m.model {
        ModelArg::Bernoulli => ModelSpec::bernoulli(),
        ModelArg::MajorityBox => ModelSpec::majority_box(m.threshold).map_err(|e| invalid("--threshold", e))?,
        ModelArg::Ising => {
            let beta = m.beta.ok_or_else(|| {
                usage(
                    ErrorKind::MissingRequiredArgument,
                    "--beta is required with --model ising",
                )
            })?;
            ModelSpec::ising(beta).map_err(|e| invalid("--beta", e))?
        }
    };
    if m.model != ModelArg::Ising && m.beta.is_some() {
        return Err(usage(ErrorKind::ArgumentConflict, "--beta only applies to --model ising"));
    }
    Ok((spec, seed_of(&m.seed)?))
}

/// `lo:hi:count` (inclusive, evenly spaced) or a single number.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    let grid = match parts.as_slice() {
        [x] => vec![num(x)?],
        [lo, hi, count] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let count: usize = count.trim().parse().map_err(|_| format!("`{count}` is not a count"))?;
            match count {
                0 => return Err("count must be >= 1".into()),
                1 => vec![lo],
                _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
            }
        }
        _ => return Err(format!("`{s}` is not `lo:hi:count`")),
    };
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(format!("`{s}` must be finite and increasing"));
    }
    Ok(grid)
}

fn grid_of(flag: &str, s: &str) -> Result<Vec<f64>, clap::Error> {
    parse_grid(s).map_err(|e| invalid(flag, e))
}

fn event_of(flag: &str, s: &str) -> Result<String, clap::Error> {
    let e: Event = s.parse().map_err(|e| invalid(flag, e))?;
    Ok(e.to_string())
}

fn exact_event(e: &ExactEvent) -> Result<String, clap::Error> {
    match &e.event {
        Some(s) => event_of("--event", s),
        None => Ok(Event::horizontal(e.nx, e.ny).to_string()),
    }
}

fn ints<const N: usize>(flag: &str, s: &str) -> Result<[i64; N], clap::Error> {
    let v: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid(flag, format!("`{s}` is not a list of {N} integers")))?;
    v.try_into().map_err(|_| invalid(flag, format!("`{s}` needs {N} integers")))
}

fn positive(flag: &str, n: u64) -> Result<u64, clap::Error> {
    if n == 0 {
        return Err(invalid(flag, "must be >= 1"));
    }
    Ok(n)
}

/// Parses a full argv (including the program name) into a validated plan.
pub fn parse<I, T>(argv: I) -> Result<RunPlan, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    if let Some(path) = &cli.plan {
        let text = std::fs::read_to_string(path).map_err(|e| invalid("--plan", e))?;
        return serde_json::from_str(&text).map_err(|e| invalid("--plan", e));
    }
    let Some(cmd) = cli.command else {
        return Err(usage(ErrorKind::MissingSubcommand, "a subcommand (or --plan) is required"));
    };
    let command = match cmd {
        Cmd::Sample {
            model,
            h,
            rect,
            replica,
        } => {
            let (model, seed) = model_of(&model)?;
            Command::Sample {
                model,
                seed,
                h,
                rect: rect.parse().map_err(|e| invalid("--box", e))?,
                replica,
            }
        }
        Cmd::Crossing {
            model,
            event,
            h,
            trials,
        } => {
            let (model, seed) = model_of(&model)?;
            Command::Crossing {
                model,
                seed,
                event: event_of("--event", &event)?,
                h,
                trials: positive("--trials", trials)?,
            }
        }
        Cmd::Sweep {
            model,
            event,
            h,
            trials,
            n_list,
        } => {
            let (model, seed) = model_of(&model)?;
            Command::Sweep {
                model,
                seed,
                event: event_of("--event", &event)?,
                h_grid: grid_of("--h", &h)?,
                trials: positive("--trials", trials)?,
                n_list,
            }
        }
        Cmd::Hc {
            model,
            n,
            dual,
            trials,
            tol,
            bracket,
        } => {
            let (model, seed) = model_of(&model)?;
            let b = bracket
                .split_once(':')
                .and_then(|(a, b)| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)))
                .filter(|(a, b)| a < b)
                .ok_or_else(|| invalid("--bracket", format!("`{bracket}` is not `lo:hi` with lo < hi")))?;
            if !(tol > 0.0) {
                return Err(invalid("--tol", "must be > 0"));
            }
            let event = if dual {
                Event::horizontal_plus_star(n, n)
            } else {
                Event::horizontal(n, n)
            };
            Command::Hc {
                model,
                seed,
                event: event.to_string(),
                options: HcOptions {
                    trials_per_probe: positive("--trials", trials)?,
                    tol,
                    bracket: b,
                    ..HcOptions::default()
                },
            }
        }
        Cmd::Tails { model, h, half, trials } => {
            let (model, seed) = model_of(&model)?;
            Command::Tails {
                model,
                seed,
                h,
                half,
                trials: positive("--trials", trials)?,
            }
        }
        Cmd::CftpTail { beta, h, trials, seed } => {
            ModelSpec::ising(beta).map_err(|e| invalid("--beta", e))?;
            Command::CftpTail {
                beta,
                seed: seed_of(&seed)?,
                h_grid: grid_of("--h", &h)?,
                trials: positive("--trials", trials)?,
            }
        }
        Cmd::Pivotal {
            model,
            n,
            h,
            keys,
            trials,
        } => {
            let (model, seed) = model_of(&model)?;
            let event = Event::horizontal(3 * n, n);
            let keys = if keys.is_empty() {
                estimators::default_pivotal_keys(&model, &event.rect)
            } else {
                keys.iter()
                    .map(|k| ints::<3>("--key", k).map(|[x, y, t]| FieldKey::new(Vertex::new(x, y), t, 0)))
                    .collect::<Result<_, _>>()?
            };
            Command::Pivotal {
                model,
                seed,
                event: event.to_string(),
                h_grid: grid_of("--h", &h)?,
                keys,
                trials: positive("--trials", trials)?,
            }
        }
        Cmd::Mixing {
            model,
            h,
            side,
            separations,
            trials,
            c0_trials,
        } => {
            let (model, seed) = model_of(&model)?;
            if side == 0 {
                return Err(invalid("--side", "must be >= 1"));
            }
            Command::Mixing {
                model,
                seed,
                h,
                side,
                separations,
                trials: positive("--trials", trials)?,
                c0_trials,
            }
        }
        Cmd::FiniteSize {
            model,
            h,
            n,
            eps,
            trials,
        } => {
            let (model, seed) = model_of(&model)?;
            if !(eps > 0.0 && eps < 1.0) {
                return Err(invalid("--eps", "must lie in (0, 1)"));
            }
            Command::FiniteSize {
                model,
                seed,
                h,
                n,
                eps,
                trials: positive("--trials", trials)?,
            }
        }
        Cmd::Exact { op } => match op {
            ExactCmd::Crossing { event } => Command::ExactCrossing {
                event: exact_event(&event)?,
            },
            ExactCmd::Pivotal { event, site } => Command::ExactPivotal {
                event: exact_event(&event)?,
                site: site
                    .map(|s| ints::<2>("--site", &s).map(|[x, y]| Vertex::new(x, y)))
                    .transpose()?,
            },
            ExactCmd::Russo { event } => Command::ExactRusso {
                event: exact_event(&event)?,
            },
            ExactCmd::Talagrand { event, p, p1, p2, k1 } => Command::ExactTalagrand {
                event: exact_event(&event)?,
                p_grid: grid_of("--p", &p)?,
                p1,
                p2,
                k1,
            },
            ExactCmd::Fkg { events, p } => Command::ExactFkg {
                events: events
                    .iter()
                    .map(|e| event_of("--event", e))
                    .collect::<Result<_, _>>()?,
                p,
            },
        },
        Cmd::Validate { seed, trials } => Command::Validate {
            config: ValidateConfig {
                seed: seed_of(&seed)?,
                oracle_trials: positive("--trials", trials)?,
                ..ValidateConfig::default()
            },
        },
    };
    Ok(RunPlan {
        command,
        format: cli.format,
        out: cli.out,
        workers: cli.workers,
    })
}

/// Whether argv asked for the plan instead of a run.
pub fn wants_plan_dump<I, T>(argv: I) -> bool
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv).is_ok_and(|c| c.dump_plan)
}

fn parsed_event(s: &str) -> anyhow::Result<Event> {
    Ok(s.parse::<Event>()?)
}

fn estimates_out(format: Format, estimates: &[Estimate]) -> anyhow::Result<String> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, estimates)?;
            Ok(String::from_utf8(buf)?)
        }
        Format::Json => json(&estimates),
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct PolyRecord<'a> {
    event: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    site: Option<Vertex>,
    polynomial: perclab_core::PolynomialInP,
}

/// Runs a plan and returns the data it writes. Deterministic in the plan.
/// Estimate tables follow `--format`; structured reports are always JSON.
pub fn render(plan: &RunPlan) -> anyhow::Result<String> {
    let fmt = plan.format;
    match &plan.command {
        Command::Sample {
            model,
            seed,
            h,
            rect,
            replica,
        } => {
            let w = models::sample_window(model, *h, rect, *seed, *replica)?;
            match fmt {
                Format::Json => json(&w.to_record(model, *h, *seed, *replica)),
                Format::Csv => {
                    let mut s = String::from("x,y,spin,meta\n");
                    for (i, v) in rect.vertices().enumerate() {
                        writeln!(s, "{},{},{},{}", v.x, v.y, w.spins()[i], w.meta()[i])?;
                    }
                    Ok(s)
                }
            }
        }
        Command::Crossing {
            model,
            seed,
            event,
            h,
            trials,
        } => {
            let e = estimators::estimate_event(model, *h, &parsed_event(event)?, *trials, *seed)?;
            estimates_out(fmt, &[e])
        }
        Command::Sweep {
            model,
            seed,
            event,
            h_grid,
            trials,
            n_list,
        } => {
            let base = parsed_event(event)?;
            let events: Vec<Event> = if n_list.is_empty() {
                vec![base]
            } else {
                n_list.iter().map(|&n| base.scaled_to(n)).collect()
            };
            let mut rows = Vec::new();
            for e in &events {
                rows.extend(estimators::sweep(model, e, h_grid, *trials, *seed)?);
            }
            estimates_out(fmt, &rows)
        }
        Command::Hc {
            model,
            seed,
            event,
            options,
        } => {
            json(&estimators::estimate_hc(model, &parsed_event(event)?, options, *seed)?)
        }
        Command::Tails {
            model,
            seed,
            h,
            half,
            trials,
        } => {
            json(&estimators::cluster_tail(model, *h, *half, *trials, *seed)?)
        }
        Command::CftpTail {
            beta,
            seed,
            h_grid,
            trials,
        } => {
            let reports = h_grid
                .iter()
                .map(|&h| estimators::coalescence_tail(*beta, h, *trials, *seed))
                .collect::<perclab_core::Result<Vec<_>>>()?;
            json(&reports)
        }
        Command::Pivotal {
            model,
            seed,
            event,
            h_grid,
            keys,
            trials,
        } => {
            let r = estimators::pivotal_epsilon(model, h_grid, &parsed_event(event)?, keys, *trials, *seed)?;
            match fmt {
                Format::Json => json(&r),
                Format::Csv => estimates_out(fmt, &r.rows.iter().map(|x| x.estimate.clone()).collect::<Vec<_>>()),
            }
        }
        Command::Mixing {
            model,
            seed,
            h,
            side,
            separations,
            trials,
            c0_trials,
        } => {
            let c0 = if *c0_trials > 0 {
                Some(estimators::measured_c0(model, *h, *c0_trials, *seed)?.measured_c0)
            } else {
                None
            };
            json(&estimators::mixing_sweep(model, *h, *side, separations, *trials, *seed, c0)?)
        }
        Command::FiniteSize {
            model,
            seed,
            h,
            n,
            eps,
            trials,
        } => {
            let r = estimators::finite_size_report(model, *h, *n, *eps, *trials, *seed)?;
            match fmt {
                Format::Json => json(&r),
                Format::Csv => estimates_out(fmt, &[r.vertical_plus, r.vertical_minus_star]),
            }
        }
        Command::ExactCrossing { event } => {
            let poly = exact::exact_probability(&EventSpec::new(&parsed_event(event)?)?);
            match fmt {
                Format::Csv => Ok(format!("{poly}\n")),
                Format::Json => json(&PolyRecord {
                    event,
                    site: None,
                    polynomial: poly,
                }),
            }
        }
        Command::ExactPivotal { event, site } => {
            let spec = EventSpec::new(&parsed_event(event)?)?;
            let sites: Vec<Vertex> = match site {
                Some(v) => vec![*v],
                None => spec.rect().vertices().collect(),
            };
            let records: Vec<PolyRecord> = sites
                .iter()
                .map(|&v| PolyRecord {
                    event,
                    site: Some(v),
                    polynomial: exact::exact_pivotal_probability(&spec, v),
                })
                .collect();
            match fmt {
                Format::Json => json(&records),
                Format::Csv => {
                    let mut s = String::from("x,y,polynomial\n");
                    for r in &records {
                        let v = r.site.unwrap();
                        writeln!(s, "{},{},\"{}\"", v.x, v.y, r.polynomial)?;
                    }
                    Ok(s)
                }
            }
        }
        Command::ExactRusso { event } => {
            json(&exact::russo_identity_check(&EventSpec::new(&parsed_event(event)?)?))
        }
        Command::ExactTalagrand {
            event,
            p_grid,
            p1,
            p2,
            k1,
        } => {
            let spec = EventSpec::new(&parsed_event(event)?)?;
            #[derive(Serialize)]
            struct Joint {
                pointwise: exact::ThresholdDiagnostic,
                integrated: exact::IntegratedThresholdReport,
            }
            json(&Joint {
                pointwise: exact::sharp_threshold_diagnostic(&spec, p_grid)?,
                integrated: exact::integrated_threshold_check(&spec, *p1, *p2, *k1)?,
            })
        }
        Command::ExactFkg { events, p } => {
            let evs: Vec<Event> = if events.is_empty() {
                exact::one_sided_connections()
            } else {
                events.iter().map(|e| parsed_event(e)).collect::<anyhow::Result<_>>()?
            };
            let specs: Vec<EventSpec> = evs.iter().map(EventSpec::new).collect::<perclab_core::Result<_>>()?;
            let refs: Vec<&EventSpec> = specs.iter().collect();
            json(&exact::fkg_and_sqrt_trick_check(&refs, *p)?)
        }
        Command::Validate { config } => {
            let checks = validate::run_suite(config)?;
            match fmt {
                Format::Csv => Ok(validate::format_table(&checks)),
                Format::Json => json(&checks),
            }
        }
    }
}

/// Runs a plan on its worker pool and writes the output. Returns whether
/// every check passed (always true except for `validate`).
pub fn execute(plan: &RunPlan) -> anyhow::Result<bool> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = plan.workers {
        if w == 0 {
            bail!("--workers must be >= 1");
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build().context("building the worker pool")?;
    let text = pool.install(|| render(plan))?;
    match &plan.out {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    let failed = matches!(plan.command, Command::Validate { .. })
        && (text.lines().any(|l| l.starts_with("FAIL")) || text.contains("\"passed\": false"));
    Ok(!failed)
}


use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use intersect_core::chain::{ChainMatrix, DistVector};
use intersect_core::chain_io::{read_chain, write_chain};
use intersect_core::config::{DEFAULT_SEED, MIXING_EPS};
use intersect_core::exact::{
    cesaro_mixing_time, exact_intersection_expectation, intersection_cdf, max_hitting_time,
    t_h_bruteforce, tv_mixing_time, ExactBudget,
};
use intersect_core::families::{generate, Family, FamilySpec};
use intersect_core::harness::{
    self, calibration_instances, complete_sweep, cycle_sweep, default_torus_plan, emit_report,
    exit_status, run_check_suite, torus_scaling, two_cliques_sweep, HarnessConfig, HarnessMode,
    ReportFormat, Suite, WindowTable,
};
use intersect_core::mc::{
    estimate_pair, estimate_pi_pi_expectation, estimate_ti, estimate_ti_star, intersection_moments,
    McConfig, StartLaw,
};
use intersect_core::spectral::{
    closed_form_spectrum, compute_q, green_table, spectrum, uniform_mixing_time,
};
use intersect_core::Error;

/// Failure with the exit code it maps to.
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Validation(_) | Error::Parse { .. } | Error::NonStochasticRow { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "intersect",
    version,
    about = "Intersection times of Markov chains"
)]
pub struct Cli {
    /// Worker threads for Monte Carlo runs; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a family member as a chain file.
    Generate {
        #[command(flatten)]
        family: FamilyArgs,
        /// Output chain file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral summary: lambda_2, t_rel, Q, t_unif and Q at t_unif.
    Spectral {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One exact quantity.
    Exact {
        #[arg(long, value_enum)]
        quantity: ExactQuantity,
        #[command(flatten)]
        source: SourceArgs,
        /// Start law for etau-i and p-it: `x,y`, `pi,pi`, `x,pi` or `pi,y`.
        #[arg(long, default_value = "0,1")]
        start: String,
        /// Horizon for p-it.
        #[arg(long, default_value_t = 1)]
        horizon: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimates. With `--horizon` estimates the moments of
    /// I_t, with `--start` the mean of tau_I, otherwise t_I, t_I* and
    /// E_{pi,pi} tau_I.
    Mc {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        mc: McArgs,
        /// `x,y`, `pi,pi`, `x,pi` or `pi,y`.
        #[arg(long)]
        start: Option<String>,
        /// Estimate the first two moments of I_t at this horizon.
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check suites, window calibration and scaling fits.
    Harness {
        #[command(subcommand)]
        action: HarnessAction,
    },
}

#[derive(Subcommand, Debug)]
pub enum HarnessAction {
    /// Evaluate every check on a suite and write reports.
    Run {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Output directory for reports.json / reports.csv.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        mc: McArgs,
        /// Largest instance (state count) to run.
        #[arg(long, default_value_t = 4096)]
        nmax: usize,
        /// Replicates for I_t moment estimates.
        #[arg(long, default_value_t = 100_000)]
        moment_samples: u64,
        /// Window table to use instead of the built-in one.
        #[arg(long)]
        windows: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        format: FormatArg,
    },
    /// Measure windows on the calibration set and write them as JSON.
    Calibrate {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Torus slopes and the complete, cycle and two-cliques sweeps.
    Scaling {
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        mc: McArgs,
        /// Highest torus dimension.
        #[arg(long, default_value_t = 5)]
        dmax: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactQuantity {
    Tmix,
    Tces,
    Thit,
    #[value(name = "tH")]
    #[serde(rename = "tH")]
    TH,
    #[value(name = "etauI")]
    #[serde(rename = "etauI")]
    ETauI,
    #[value(name = "pIt")]
    #[serde(rename = "pIt")]
    PIt,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyName {
    Cycle,
    Path,
    Complete,
    Hypercube,
    Torus,
    BalancedTree,
    RandomTree,
    WeightedTree,
    TwoCliques,
}

#[derive(Args, Debug, Clone)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    /// State count (cycle, path, complete, random/weighted tree).
    #[arg(long)]
    pub n: Option<usize>,
    /// Dimension (hypercube, torus).
    #[arg(long)]
    pub d: Option<usize>,
    /// Side length (torus).
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub branching: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Small clique size (defaults to round(sqrt(large))).
    #[arg(long)]
    pub small: Option<usize>,
    #[arg(long)]
    pub large: Option<usize>,
    /// Seed for random trees.
    #[arg(long, default_value_t = 0)]
    pub graph_seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Chain file instead of a family.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct McArgs {
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Per-replicate step cap (default 100 (n + t_rel)).
    #[arg(long)]
    pub cap: Option<u64>,
}

fn need(v: Option<usize>, flag: &str, family: &str) -> CliResult<usize> {
    v.ok_or_else(|| CliError::config(format!("--family {family} needs --{flag}")))
}

impl FamilyArgs {
    fn spec(&self) -> CliResult<Option<FamilySpec>> {
        let Some(name) = self.family else {
            return Ok(None);
        };
        let family = match name {
            FamilyName::Cycle => Family::Cycle {
                n: need(self.n, "n", "cycle")?,
            },
            FamilyName::Path => Family::Path {
                n: need(self.n, "n", "path")?,
            },
            FamilyName::Complete => Family::Complete {
                n: need(self.n, "n", "complete")?,
            },
            FamilyName::Hypercube => Family::Hypercube {
                d: need(self.d, "d", "hypercube")?,
            },
            FamilyName::Torus => Family::Torus {
                d: need(self.d, "d", "torus")?,
                l: need(self.l, "l", "torus")?,
            },
            FamilyName::BalancedTree => Family::BalancedTree {
                branching: need(self.branching, "branching", "balanced-tree")?,
                height: need(self.height, "height", "balanced-tree")?,
            },
            FamilyName::RandomTree => Family::RandomTree {
                n: need(self.n, "n", "random-tree")?,
            },
            FamilyName::WeightedTree => Family::WeightedTree {
                n: need(self.n, "n", "weighted-tree")?,
            },
            FamilyName::TwoCliques => Family::TwoCliques {
                small: self.small,
                large: need(self.large, "large", "two-cliques")?,
            },
        };
        let spec = FamilySpec::seeded(family, self.graph_seed);
        spec.validate()?;
        Ok(Some(spec))
    }
}

/// A loaded chain and, for family members, its description.
struct Source {
    id: String,
    spec: Option<FamilySpec>,
    chain: ChainMatrix,
}

impl SourceArgs {
    fn load(&self) -> CliResult<Source> {
        match (self.family.spec()?, &self.input) {
            (Some(_), Some(_)) => Err(CliError::config("give either --family or --in, not both")),
            (None, None) => Err(CliError::config(
                "a chain source is required: --family or --in",
            )),
            (Some(spec), None) => Ok(Source {
                id: spec.to_string(),
                chain: generate(&spec)?,
                spec: Some(spec),
            }),
            (None, Some(path)) => {
                let file = fs::File::open(path).map_err(|e| {
                    CliError::config(format!("cannot open {}: {e}", path.display()))
                })?;
                let chain = read_chain(BufReader::new(file))?;
                Ok(Source {
                    id: path.display().to_string(),
                    spec: None,
                    chain,
                })
            }
        }
    }
}

impl McArgs {
    fn config(&self, threads: usize) -> CliResult<McConfig> {
        if self.samples < 2 {
            return Err(CliError::config("--samples must be at least 2"));
        }
        if self.cap == Some(0) {
            return Err(CliError::config("--cap must be positive"));
        }
        Ok(McConfig {
            samples: self.samples,
            seed: self.seed,
            cap: self.cap,
            threads,
            ..McConfig::default()
        })
    }
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError {
            code: 1,
            message: format!("{}: {e}", path.display()),
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_json(out: Option<&Path>, value: &impl Serialize) -> CliResult<()> {
    write_output(out, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn parse_law(token: &str, n: usize) -> CliResult<StartLaw> {
    if token == "pi" {
        return Ok(StartLaw::Stationary);
    }
    let x: usize = token
        .parse()
        .map_err(|_| CliError::config(format!("bad start `{token}`: expected a state or `pi`")))?;
    if x >= n {
        return Err(CliError::config(format!(
            "start state {x} out of range for n = {n}"
        )));
    }
    Ok(StartLaw::State(x))
}

fn parse_start(s: &str, n: usize) -> CliResult<(StartLaw, StartLaw)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((parse_law(a, n)?, parse_law(b, n)?)),
        _ => Err(CliError::config(format!(
            "bad --start `{s}`: expected `x,y`, `pi,pi` or `x,pi`"
        ))),
    }
}

fn law_vector(law: StartLaw, chain: &ChainMatrix) -> CliResult<DistVector> {
    Ok(match law {
        StartLaw::State(x) => DistVector::point_mass(chain.n(), x),
        StartLaw::Stationary => DistVector::new(chain.pi().to_vec())?,
    })
}

fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

pub fn dispatch(cli: Cli) -> CliResult<u8> {
    let threads = cli.threads.unwrap_or_else(default_threads);
    if threads == 0 {
        return Err(CliError::config("--threads must be positive"));
    }
    match cli.command {
        Command::Generate { family, out } => {
            let spec = family
                .spec()?
                .ok_or_else(|| CliError::config("generate needs --family"))?;
            let chain = generate(&spec)?;
            log::info!("generated {spec} with {} states", chain.n());
            let mut buf = Vec::new();
            write_chain(&chain, &mut buf)?;
            write_output(out.as_deref(), &String::from_utf8_lossy(&buf))?;
            Ok(0)
        }
        Command::Spectral { source, out } => {
            let src = source.load()?;
            log::info!("spectral summary of {} ({} states)", src.id, src.chain.n());
            let spec = match src
                .spec
                .as_ref()
                .map(closed_form_spectrum)
                .transpose()?
                .flatten()
            {
                Some(s) => s,
                None => spectrum(&src.chain)?,
            };
            let q = compute_q(&spec)?;
            let t_unif = uniform_mixing_time(&src.chain).ok();
            let q_t_unif = t_unif.map(|t| {
                green_table(&src.chain, 0, t)
                    .g
                    .iter()
                    .map(|g| g * g)
                    .sum::<f64>()
            });
            write_json(
                out.as_deref(),
                &json!({
                    "instance": src.id,
                    "n": src.chain.n(),
                    "lambda2": spec.lambda2(),
                    "t_rel": q.t_rel,
                    "Q": q.q,
                    "t_unif": t_unif,
                    "Q_t_unif": q_t_unif,
                    "spectrum_source": spec.source,
                }),
            )?;
            Ok(0)
        }
        Command::Exact {
            quantity,
            source,
            start,
            horizon,
            out,
        } => {
            let src = source.load()?;
            let p = &src.chain;
            log::info!("exact {quantity:?} on {}", src.id);
            let budget = ExactBudget::default();
            let (value, method, budget_used) = match quantity {
                ExactQuantity::Tmix => (
                    tv_mixing_time(p, MIXING_EPS)? as f64,
                    "distribution evolution",
                    json!(null),
                ),
                ExactQuantity::Tces => (
                    cesaro_mixing_time(p)? as f64,
                    "cumulative average scan",
                    json!(null),
                ),
                ExactQuantity::Thit => (
                    max_hitting_time(p)?,
                    "fundamental matrix / linear solve",
                    json!(null),
                ),
                ExactQuantity::TH => {
                    let r = t_h_bruteforce(p)?;
                    (
                        r.value,
                        "subset enumeration",
                        json!({"sets_evaluated": r.sets_evaluated, "argmax_set": r.set}),
                    )
                }
                ExactQuantity::ETauI => {
                    let (x, y) = parse_start(&start, p.n())?;
                    let (StartLaw::State(x), StartLaw::State(y)) = (x, y) else {
                        return Err(CliError::config("etauI needs deterministic starts `x,y`"));
                    };
                    let v = exact_intersection_expectation(p, x, y, budget)?;
                    (
                        v,
                        "absorbing product-range chain",
                        json!({"max_n": budget.max_n}),
                    )
                }
                ExactQuantity::PIt => {
                    let (x, y) = parse_start(&start, p.n())?;
                    let cdf = intersection_cdf(
                        p,
                        &law_vector(x, p)?,
                        &law_vector(y, p)?,
                        horizon,
                        budget,
                    )?;
                    (
                        *cdf.last().unwrap(),
                        "forward product-range mass",
                        json!({"horizon": horizon, "max_n": budget.max_n}),
                    )
                }
            };
            write_json(
                out.as_deref(),
                &json!({"instance": src.id, "quantity": quantity, "value": value, "method": method, "budget_used": budget_used}),
            )?;
            Ok(0)
        }
        Command::Mc {
            source,
            mc,
            start,
            horizon,
            out,
        } => {
            let src = source.load()?;
            let p = &src.chain;
            let cfg = mc.config(threads)?;
            log::info!(
                "Monte Carlo on {} with {} samples, seed {}",
                src.id,
                cfg.samples,
                cfg.seed
            );
            let value = if let Some(t) = horizon {
                let (x, y) = parse_start(start.as_deref().unwrap_or("0,0"), p.n())?;
                json!({"instance": src.id, "horizon": t, "moments": intersection_moments(p, x, y, t, &cfg)?})
            } else if let Some(s) = start {
                let (x, y) = parse_start(&s, p.n())?;
                json!({"instance": src.id, "start": s, "tau_i": estimate_pair(p, x, y, &cfg)?})
            } else {
                json!({
                    "instance": src.id,
                    "t_i": estimate_ti(p, &cfg)?,
                    "t_i_star": estimate_ti_star(p, &cfg)?,
                    "pi_pi": estimate_pi_pi_expectation(p, &cfg)?,
                })
            };
            write_json(out.as_deref(), &value)?;
            Ok(0)
        }
        Command::Harness { action } => harness_command(action, threads),
    }
}

fn harness_command(action: HarnessAction, threads: usize) -> CliResult<u8> {
    match action {
        HarnessAction::Run {
            suite,
            out,
            mc,
            nmax,
            moment_samples,
            windows,
            format,
        } => {
            let suite: Suite = suite.parse().map_err(CliError::config)?;
            let windows = match windows {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| {
                        CliError::config(format!(
                            "cannot read windows file {}: {e}",
                            path.display()
                        ))
                    })?;
                    WindowTable::from_json(&text).map_err(|e| CliError::config(e.to_string()))?
                }
                None => WindowTable::frozen(),
            };
            if nmax == 0 || moment_samples < 2 {
                return Err(CliError::config(
                    "--nmax and --moment-samples must be positive",
                ));
            }
            let cfg = HarnessConfig {
                mc: mc.config(threads)?,
                nmax,
                moment_samples,
                windows,
                ..HarnessConfig::default()
            };
            let instances = harness::instances(suite);
            log::info!("running {} instances", instances.len());
            let reports = run_check_suite(&instances, &cfg, HarnessMode::Assert);
            let format = match format {
                FormatArg::Json => ReportFormat::Json,
                FormatArg::Csv => ReportFormat::Csv,
                FormatArg::Both => ReportFormat::Both,
            };
            let (paths, _) = emit_report(&reports, &out, format)?;
            let mut code = exit_status(&reports);
            if suite == Suite::Torus {
                let fits = torus_scaling(&default_torus_plan(3), &cfg);
                fs::write(
                    out.join("torus_scaling.json"),
                    serde_json::to_string_pretty(&fits)? + "\n",
                )?;
                if fits.iter().any(|f| f.pass == Some(false)) {
                    code = 1;
                }
            }
            for p in paths {
                log::info!("wrote {}", p.display());
            }
            Ok(code as u8)
        }
        HarnessAction::Calibrate { out, mc } => {
            let cfg = HarnessConfig {
                mc: mc.config(threads)?,
                windows: WindowTable::empty(),
                ..HarnessConfig::default()
            };
            let table = harness::calibrate_windows(&calibration_instances(), &cfg)?;
            write_output(Some(&out), &table.to_json()?)?;
            Ok(0)
        }
        HarnessAction::Scaling { out, mc, dmax } => {
            let cfg = HarnessConfig {
                mc: mc.config(threads)?,
                ..HarnessConfig::default()
            };
            let fits = torus_scaling(&default_torus_plan(dmax), &cfg);
            let complete = complete_sweep(&[64, 256, 1024, 4096], &cfg)?;
            let cycle = cycle_sweep(&[16, 32, 64, 128], &cfg)?;
            let cliques = two_cliques_sweep(&harness::two_cliques_sizes(), &cfg)?;
            let pass = fits.iter().all(|f| f.pass != Some(false))
                && complete.pass
                && cycle.pass
                && cliques.increasing;
            write_json(
                out.as_deref(),
                &json!({"torus": fits, "complete": complete, "cycle": cycle, "two_cliques": cliques, "pass": pass}),
            )?;
            Ok(if pass { 0 } else { 1 })
        }
    }
}

//! Command-line surface over `opinion-core`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use opinion_core::file::{parse_document, ScenarioFile};
use opinion_core::intersection::intersection_file;
use opinion_core::marginal::{agent_blocks, assemble_marginal_system, marginal_stationary, marginal_transient, stacked_initial};
use opinion_core::network::{
    build_marginalization, independent_initial, network_stationary, network_transient, project_marginal,
    project_table, NetworkGenerator, DEFAULT_CAPACITY,
};
use opinion_core::sim::{estimate_marginals, SimConfig, SimulationEstimate};
use opinion_core::trajectory::{uniform_grid, TrajectoryTable};
use opinion_core::{validate_scenario, Error, Model, ModelVariant, Scenario};

pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const VALIDATION: u8 = 3;
    pub const CAPACITY: u8 = 4;
    pub const TOLERANCE: u8 = 5;
}

/// Thresholds applied by `compare`.
pub mod tolerance {
    pub const TRANSIENT: f64 = 1e-6;
    pub const STATIONARY: f64 = 1e-9;
    pub const SIM_ABS: f64 = 0.01;
    pub const SIM_SE: f64 = 3.0;
}

#[derive(Debug, Parser)]
#[command(name = "markov-opinion", version, about = "Markovian opinion dynamics with attractive and repulsive groups")]
pub struct Cli {
    /// Maximum number of network states the exact solver may allocate.
    #[arg(long, global = true, env = "MARKOV_OPINION_CAP", default_value_t = DEFAULT_CAPACITY)]
    pub cap: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Isolated,
    Attract,
    Full,
}

impl From<VariantArg> for ModelVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Isolated => ModelVariant::Isolated,
            VariantArg::Attract => ModelVariant::Attract,
            VariantArg::Full => ModelVariant::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Network,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Example {
    Intersection,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and check a scenario, printing every violation found.
    Validate { file: PathBuf },

    /// Stationary per-agent distributions as `agent,state,probability`.
    Stationary {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        model: VariantArg,
        #[arg(long, value_enum, default_value = "marginal")]
        method: Method,
    },

    /// Per-agent distributions on a uniform grid as `t,agent,state,probability`.
    Transient {
        file: PathBuf,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, value_enum, default_value = "full")]
        model: VariantArg,
        #[arg(long, value_enum, default_value = "marginal")]
        method: Method,
    },

    /// Monte Carlo occupancy estimates as `agent,state,estimate,stderr`.
    Simulate {
        file: PathBuf,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[arg(long, default_value_t = 200.0)]
        horizon: f64,
        #[arg(long, default_value_t = 20.0)]
        burn_in: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "full")]
        model: VariantArg,
    },

    /// Cross-check network, marginal and simulated results.
    Compare {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        model: VariantArg,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[arg(long, default_value_t = 200.0)]
        horizon: f64,
        #[arg(long, default_value_t = 20.0)]
        burn_in: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Write a bundled scenario.
    Example {
        #[arg(value_enum)]
        name: Example,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::Io(_) => exit::PARSE,
        Error::Invalid(_) => exit::VALIDATION,
        Error::CapacityExceeded { .. } => exit::CAPACITY,
        Error::ToleranceNotMet(_) | Error::SingularSystem(_) => exit::TOLERANCE,
        _ => exit::FAILURE,
    }
}

fn load(path: &Path) -> Result<Scenario, Error> {
    let text = fs::read_to_string(path)?;
    let scenario = parse_document(&text)?.to_scenario();
    let report = validate_scenario(&scenario);
    if report.is_pass() {
        Ok(scenario)
    } else {
        Err(Error::Invalid(report))
    }
}

fn stationary_table(model: &Model, method: Method, cap: usize) -> Result<TrajectoryTable, Error> {
    let probabilities = match method {
        Method::Marginal => marginal_stationary(&assemble_marginal_system(model))?.probabilities,
        Method::Network => {
            let gen = NetworkGenerator::build(model, cap)?;
            let pi = network_stationary(&gen)?;
            project_marginal(&build_marginalization(&gen.codec), &pi)?
        }
    };
    let mut table = TrajectoryTable::new(agent_blocks(model));
    table.push(f64::INFINITY, probabilities);
    Ok(table)
}

fn transient_table(model: &Model, method: Method, times: &[f64], cap: usize) -> Result<TrajectoryTable, Error> {
    match method {
        Method::Marginal => marginal_transient(model, &assemble_marginal_system(model), &stacked_initial(model), times),
        Method::Network => {
            let gen = NetworkGenerator::build(model, cap)?;
            let p0 = independent_initial(model, &gen.codec);
            let table = network_transient(&gen, &p0, times)?;
            project_table(&build_marginalization(&gen.codec), model, &table)
        }
    }
}

pub fn write_estimate_csv<W: Write>(scenario: &Scenario, est: &SimulationEstimate, out: W) -> Result<(), Error> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    writer.write_record(["agent", "state", "estimate", "stderr"])?;
    for (r, agent) in scenario.agents.iter().enumerate() {
        for (j, label) in scenario.states.labels.iter().enumerate() {
            let (mean, se) = est.get(r, j);
            writer.write_record([agent.id.to_string(), label.clone(), mean.to_string(), se.to_string()])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Deviations reported by `compare`.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub transient: f64,
    pub stationary: f64,
    pub simulation: f64,
    /// Largest `|estimate - marginal| / stderr`.
    pub simulation_se: f64,
}

impl Comparison {
    pub fn within_tolerance(&self) -> bool {
        self.transient <= tolerance::TRANSIENT
            && self.stationary <= tolerance::STATIONARY
            && self.simulation <= tolerance::SIM_ABS
            && self.simulation_se <= tolerance::SIM_SE
    }
}

pub fn compare(model: &Model, times: &[f64], sim: &SimConfig, cap: usize) -> Result<Comparison, Error> {
    let net = transient_table(model, Method::Network, times, cap)?;
    let marg = transient_table(model, Method::Marginal, times, cap)?;
    let transient = net.max_abs_diff(&marg);

    let net_pi = stationary_table(model, Method::Network, cap)?;
    let marg_pi = stationary_table(model, Method::Marginal, cap)?;
    let stationary = net_pi.max_abs_diff(&marg_pi);

    let est = estimate_marginals(model, sim)?;
    let mut simulation = 0.0f64;
    let mut simulation_se = 0.0f64;
    for (k, &p) in marg_pi.row(0).iter().enumerate() {
        let gap = (est.mean[k] - p).abs();
        simulation = simulation.max(gap);
        let se = est.stderr[k];
        let z = if gap == 0.0 {
            0.0
        } else if se > 0.0 {
            gap / se
        } else {
            f64::INFINITY
        };
        simulation_se = simulation_se.max(z);
    }
    Ok(Comparison {
        transient,
        stationary,
        simulation,
        simulation_se,
    })
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<u8, Error> {
    match cli.command {
        Command::Validate { file } => {
            let text = fs::read_to_string(&file)?;
            let scenario = parse_document(&text)?.to_scenario();
            let report = validate_scenario(&scenario);
            if report.is_pass() {
                writeln!(
                    out,
                    "ok: {} agents, {} states, {} groups, {} repulsion edges",
                    scenario.agents.len(),
                    scenario.states.len(),
                    scenario.groups.len(),
                    scenario.repulsions.len()
                )?;
                Ok(exit::OK)
            } else {
                writeln!(out, "invalid:\n{report}")?;
                Ok(exit::VALIDATION)
            }
        }
        Command::Stationary { file, model, method } => {
            let model = Model::with_variant(load(&file)?, model.into())?;
            stationary_table(&model, method, cli.cap)?.write_final_csv(out)?;
            Ok(exit::OK)
        }
        Command::Transient {
            file,
            t_end,
            points,
            model,
            method,
        } => {
            if !(t_end >= 0.0 && t_end.is_finite()) || points == 0 {
                return Err(Error::InvalidSimConfig("need finite t-end >= 0 and points >= 1".into()));
            }
            let model = Model::with_variant(load(&file)?, model.into())?;
            transient_table(&model, method, &uniform_grid(t_end, points), cli.cap)?.write_csv(out)?;
            Ok(exit::OK)
        }
        Command::Simulate {
            file,
            replicates,
            horizon,
            burn_in,
            seed,
            model,
        } => {
            let scenario = load(&file)?;
            let model = Model::with_variant(scenario.clone(), model.into())?;
            let sim = SimConfig {
                horizon,
                replicates,
                seed,
                burn_in,
            };
            let est = estimate_marginals(&model, &sim)?;
            write_estimate_csv(&scenario, &est, out)?;
            Ok(exit::OK)
        }
        Command::Compare {
            file,
            model,
            t_end,
            points,
            replicates,
            horizon,
            burn_in,
            seed,
        } => {
            let model = Model::with_variant(load(&file)?, model.into())?;
            let sim = SimConfig {
                horizon,
                replicates,
                seed,
                burn_in,
            };
            let c = compare(&model, &uniform_grid(t_end, points), &sim, cli.cap)?;
            writeln!(out, "transient  network vs marginal  {:.3e}  (tol {:e})", c.transient, tolerance::TRANSIENT)?;
            writeln!(out, "stationary network vs marginal  {:.3e}  (tol {:e})", c.stationary, tolerance::STATIONARY)?;
            writeln!(out, "simulation vs marginal          {:.3e}  (tol {:e})", c.simulation, tolerance::SIM_ABS)?;
            writeln!(out, "simulation vs marginal in SE    {:.3}  (tol {})", c.simulation_se, tolerance::SIM_SE)?;
            if c.within_tolerance() {
                writeln!(out, "ok")?;
                Ok(exit::OK)
            } else {
                writeln!(out, "FAILED: deviation above tolerance")?;
                Ok(exit::TOLERANCE)
            }
        }
        Command::Example { name, out: path } => {
            let file: ScenarioFile = match name {
                Example::Intersection => intersection_file(),
            };
            fs::write(&path, file.to_json())?;
            Ok(exit::OK)
        }
    }
}

/// Run the CLI on `args`, writing results to `out` and diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { exit::PARSE } else { exit::OK };
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

pub fn main_exit() -> ExitCode {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    let code = run(std::env::args_os(), &mut lock);
    let _ = lock.flush();
    ExitCode::from(code)
}

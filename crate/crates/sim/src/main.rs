use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmimo_core::detection::ZsMode;
use mmimo_sim::config::parse_detectors;
use mmimo_sim::error::Result;
use mmimo_sim::output::{write_margins, write_rates};
use mmimo_sim::sweep::{assumption2_sweep, run_sweep};
use mmimo_sim::{Axis, Scenario, SimError, SweepSpec};

/// Massive MIMO uplink sweeps: Monte Carlo and large-antenna rates as CSV.
#[derive(Parser)]
#[command(name = "mmimo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo rates next to their large-antenna approximations.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Trials per sweep point; 0 skips the Monte Carlo part.
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Large-antenna approximations only.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Linear-independence margins of every pilot group.
    CheckAssumption2 {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Sweep axis, e.g. `n=32,64,128` or `sigma=0,2,4`.
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated subset of mrc, smmse, mmmse.
    #[arg(long)]
    detectors: Option<String>,
    /// plain, cov_design or los_projector.
    #[arg(long)]
    zs_mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// nats or bits.
    #[arg(long)]
    unit: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn spec(&self) -> Result<SweepSpec> {
        let mut spec = SweepSpec::from_scenario(Scenario::load(&self.config)?)?;
        if let Some(s) = &self.sweep {
            spec.axis = s.parse::<Axis>()?;
        }
        if let Some(d) = &self.detectors {
            spec.detectors = parse_detectors(d.split(','))?;
        }
        if let Some(m) = &self.zs_mode {
            spec.zs.mode = m.parse::<ZsMode>().map_err(SimError::config)?;
        }
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if let Some(u) = &self.unit {
            spec.unit = u.parse()?;
        }
        Ok(spec)
    }

    fn emit(&self, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, bytes).map_err(|e| SimError::io(path, e)),
            None => std::io::stdout().write_all(bytes).map_err(|e| SimError::io("<stdout>".as_ref(), e)),
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(SimError::config("--threads must be ≥ 1"));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| SimError::config(format!("thread pool: {e}")))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, trials } => {
            let mut spec = common.spec()?;
            if let Some(t) = trials {
                spec.trials = t;
            }
            let rows = common.pool()?.install(|| run_sweep(&spec))?;
            let mut buf = Vec::new();
            write_rates(&rows, spec.unit, &mut buf)?;
            common.emit(&buf)
        }
        Command::Analyze { common } => {
            let mut spec = common.spec()?;
            spec.trials = 0;
            let rows = common.pool()?.install(|| run_sweep(&spec))?;
            let mut buf = Vec::new();
            write_rates(&rows, spec.unit, &mut buf)?;
            common.emit(&buf)
        }
        Command::CheckAssumption2 { common } => {
            let spec = common.spec()?;
            let rows = common.pool()?.install(|| assumption2_sweep(&spec))?;
            let mut buf = Vec::new();
            write_margins(&rows, &mut buf)?;
            common.emit(&buf)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

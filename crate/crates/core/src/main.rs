use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use miso_capacity::channel::LogBase;
use miso_capacity::experiments::{self, Command, Overrides};
use miso_capacity::Result;

#[derive(Parser, Debug)]
#[command(
    name = "miso",
    version,
    about = "MISO capacity under sum, per-antenna and multiple-access power constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Channel coefficients, e.g. "0.3+0.2i,0.4-0.7i".
    #[arg(long, global = true, allow_hyphen_values = true)]
    channel: Option<String>,
    /// Per-antenna powers, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    powers: Option<Vec<f64>>,
    /// Total transmit power.
    #[arg(long, global = true)]
    power_total: Option<f64>,
    /// Noise power sigma^2.
    #[arg(long, global = true)]
    noise: Option<f64>,
    /// Logarithm base of reported rates: bits or nats.
    #[arg(long, global = true)]
    log_base: Option<LogBase>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Points in the P1 sweep.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Write the CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file with option values; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Random instances checked by `verify`.
    #[arg(long, global = true)]
    instances: Option<usize>,
    /// Oracle restarts per instance.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Largest antenna count in `figure2`.
    #[arg(long, global = true)]
    max_antennas: Option<usize>,
    /// Corrupt the optimal covariance by this relative amount (self-test of `verify`).
    #[arg(long, global = true, allow_hyphen_values = true)]
    perturb_q: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Closed-form capacities of one channel.
    Capacity,
    /// Check closed forms against numerical oracles on random instances.
    Verify,
    /// Two-antenna sweep of P1 on a constant channel.
    Figure1,
    /// Capacities for h_k = k versus the antenna count.
    Figure2,
    /// Two-antenna sweep of P1 under Rayleigh fading.
    Figure3,
    /// Ergodic capacities for one power vector.
    Ergodic,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Capacity => Command::Capacity,
            Cmd::Verify => Command::Verify,
            Cmd::Figure1 => Command::Figure1,
            Cmd::Figure2 => Command::Figure2,
            Cmd::Figure3 => Command::Figure3,
            Cmd::Ergodic => Command::Ergodic,
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let file = cli.config.as_ref().map(std::fs::read_to_string).transpose()?;
    let flags = Overrides {
        channel: cli.channel,
        powers: cli.powers,
        power_total: cli.power_total,
        noise: cli.noise,
        log_base: cli.log_base,
        seed: cli.seed,
        samples: cli.samples,
        steps: cli.steps,
        out: cli.out,
        workers: cli.workers,
        instances: cli.instances,
        restarts: cli.restarts,
        max_antennas: cli.max_antennas,
        perturb_q: cli.perturb_q,
    };
    let cfg = experiments::parse_config(cli.command.into(), flags, file.as_deref())?;
    let output = experiments::run(&cfg)?;

    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    if let Some(summary) = &output.summary {
        stdout.write_all(summary.as_bytes())?;
    }
    match &cfg.output_path {
        Some(path) => std::fs::write(path, &output.csv)?,
        None if output.summary.is_none() => stdout.write_all(output.csv.as_bytes())?,
        None => {}
    }
    stdout.flush()?;
    Ok(output.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

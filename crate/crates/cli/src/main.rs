use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frost_harness::config::{
    AgentOverrides, CoAgentOverrides, EnvOverrides, GvfOverrides, HazardOverrides, ReprOverrides,
    RunOverrides,
};
use frost_harness::Overrides;

mod commands;

#[derive(Debug, Parser)]
#[command(name = "frost", version, about = "Frost Hollow prediction and control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Prediction runs with a fixed-policy agent; writes per-step predictions and tokens.
    Nexting {
        #[command(flatten)]
        run: RunArgs,
        /// Run every representation into its own subdirectory when none is selected.
        #[arg(long)]
        all_reprs: bool,
    },
    /// Control runs, or the full sweep grid with --grid.
    Control {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        grid: bool,
    },
    /// Evaluate forward-view returns on a recorded or synthetic presence stream.
    OracleReturn(OracleArgs),
    /// Serve live play sessions.
    Serve(ServeArgs),
    /// Re-simulate a run directory from its run.json and compare the outputs.
    Replay {
        /// Directory holding run.json and summary.csv.
        dir: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML file of settings; flags override its keys.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// fixed | random | drift
    #[arg(long)]
    condition: Option<String>,
    /// short | long hazard and representation presets
    #[arg(long)]
    timescale: Option<String>,
    /// none | oracle | pavlovian
    #[arg(long)]
    coagent: Option<String>,
    /// bias | oscillator | bit_cascade | tct
    #[arg(long)]
    repr: Option<String>,
    /// accumulation | countdown
    #[arg(long)]
    gvf: Option<String>,
    #[arg(long)]
    alpha_gvf: Option<f64>,
    /// stay | responsive | expected_sarsa | sarsa | q_learning
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    heat_capacity: Option<f64>,
    #[arg(long)]
    episodes: Option<u32>,
    #[arg(long)]
    seeds: Option<u32>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// summary | full
    #[arg(long)]
    trace: Option<String>,
    #[arg(long, value_name = "DIR", default_value = "runs/latest")]
    out: PathBuf,
}

impl RunArgs {
    fn flag_overrides(&self) -> Overrides {
        Overrides {
            env: EnvOverrides {
                heat_capacity: self.heat_capacity,
                ..Default::default()
            },
            hazard: HazardOverrides {
                condition: self.condition.clone(),
                timescale: self.timescale.clone(),
                ..Default::default()
            },
            repr: ReprOverrides {
                kind: self.repr.clone(),
                ..Default::default()
            },
            gvf: GvfOverrides {
                kind: self.gvf.clone(),
                alpha: self.alpha_gvf,
                ..Default::default()
            },
            coagent: CoAgentOverrides {
                kind: self.coagent.clone(),
            },
            agent: AgentOverrides {
                kind: self.algo.clone(),
                epsilon: self.epsilon,
                ..Default::default()
            },
            run: RunOverrides {
                episodes: self.episodes,
                seeds: self.seeds,
                master_seed: self.master_seed,
                trace: self.trace.clone(),
            },
        }
    }

    /// File settings with flags layered on top.
    fn overrides(&self) -> anyhow::Result<Overrides> {
        let file = match &self.config {
            Some(path) => Overrides::load(path)?,
            None => Overrides::default(),
        };
        Ok(file.merge(self.flag_overrides()))
    }
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// CSV with a `presence` column (true/false or 1/0), such as a trace.csv.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["isi", "stim_len"])]
    input: Option<PathBuf>,
    /// Synthetic fixed cycle: interval between onsets.
    #[arg(long, default_value_t = 10)]
    isi: u32,
    /// Synthetic fixed cycle: hazard duration.
    #[arg(long, default_value_t = 2)]
    stim_len: u32,
    /// accumulation | countdown
    #[arg(long, default_value = "accumulation")]
    gvf: String,
    /// Output CSV; standard output when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Newline-delimited JSON over TCP.
    #[arg(long, value_name = "ADDR")]
    tcp: Option<SocketAddr>,
    /// WebSocket endpoint at /ws.
    #[arg(long, value_name = "ADDR")]
    ws: Option<SocketAddr>,
    #[arg(long, value_name = "DIR", default_value = "sessions")]
    trace_dir: PathBuf,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Nexting { run, all_reprs } => commands::nexting(&run, all_reprs),
        Command::Control { run, grid } => commands::control(&run, grid),
        Command::OracleReturn(args) => commands::oracle_return(&args),
        Command::Serve(args) => commands::serve(&args),
        Command::Replay { dir } => commands::replay(&dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

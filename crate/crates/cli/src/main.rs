//! `radshock`: profile construction, Evans-function stability checks and
//! nonlinear simulation for scalar radiating-gas shocks.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "radshock", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set simulate.h=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Model preset (`burgers-linear`, `burgers-cubicM`).
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Shock strength of the preset.
    #[arg(long, global = true)]
    eps: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the structural assumptions on the model and its profile.
    Verify,
    /// Build the profile and write it as CSV.
    Profile {
        /// Also build at half the step and report the largest node change.
        #[arg(long)]
        refine: bool,
    },
    /// Check the absence of unstable Evans zeros.
    Evans {
        /// Contour refinement rounds.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Run the perturbed profile and fit decay rates.
    Simulate {
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
        /// Perturbation amplitude relative to the jump.
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every stage.
    All,
}

impl Cli {
    /// Flag overrides in `key=value` form, applied after `--set`.
    fn overrides(&self) -> Vec<String> {
        let g = &self.global;
        let mut o = g.set.clone();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push(format!("{k}={v}"));
            }
        };
        push("model.preset", g.preset.as_ref().map(|p| format!("{p:?}")));
        push("model.eps", g.eps.map(|e| format!("{e:?}")));
        push("output.dir", g.out.as_ref().map(|d| format!("{:?}", d.display().to_string())));
        match &self.command {
            Command::Profile { refine: true } => push("refine", Some("true".into())),
            Command::Evans { budget } => push("condition.max_rounds", budget.map(|b| b.to_string())),
            Command::Simulate { t_final, h, amplitude, seed } => {
                push("simulate.t_final", t_final.map(|v| format!("{v:?}")));
                push("simulate.h", h.map(|v| format!("{v:?}")));
                push("simulate.amplitude", amplitude.map(|v| format!("{v:?}")));
                push("simulate.seed", seed.map(|v| v.to_string()));
            }
            _ => {}
        }
        o
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::load(cli.global.config.as_deref(), &cli.overrides()).and_then(|cfg| match cli.command {
        Command::Verify => commands::verify(&cfg),
        Command::Profile { .. } => commands::profile(&cfg),
        Command::Evans { .. } => commands::evans(&cfg),
        Command::Simulate { .. } => commands::simulate(&cfg),
        Command::All => commands::all(&cfg),
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_ERROR as u8)
        }
    }
}

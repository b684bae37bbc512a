use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bruxsense::config::RunConfig;
use bruxsense::workflow::{self, WorkflowError};

/// Radar-based teeth-grinding recognition pipeline.
#[derive(Debug, Parser)]
#[command(name = "bruxsense", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a labeled dataset of `.iq` recordings plus a manifest.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Recordings per class (defaults to the config value).
        #[arg(long)]
        n_per_class: Option<usize>,
        /// Overrides `simulation.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Extract the feature CSV from a manifest's recordings.
    Featurize {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Write per-recording power profile, phase and phase-difference tables here.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation of the random forest.
    Evaluate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Optional `feature,weight` table of averaged importances.
        #[arg(long)]
        importances: Option<PathBuf>,
        /// Overrides `evaluation.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a forest on a feature CSV and save it.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `forest.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Label every row of a feature CSV with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Write `id,label` here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    Config {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, WorkflowError> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), WorkflowError> {
    match cli.command {
        Command::Simulate {
            config,
            out_dir,
            n_per_class,
            seed,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.simulation.seed = s;
            }
            let n = n_per_class.unwrap_or(cfg.simulation.n_per_class);
            let manifest = workflow::simulate(&cfg, &out_dir, n)?;
            println!(
                "wrote {} recordings to {}",
                manifest.entries.len(),
                out_dir.display()
            );
        }
        Command::Featurize {
            manifest,
            config,
            out,
            dump_dir,
        } => {
            let cfg = load_config(config.as_deref())?;
            let rows = workflow::featurize(&manifest, &cfg, &out, dump_dir.as_deref())?;
            println!("wrote {} feature rows to {}", rows.len(), out.display());
        }
        Command::Evaluate {
            features,
            config,
            out,
            importances,
            seed,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.evaluation.seed = s;
            }
            let report = workflow::evaluate(&features, &cfg, &out, importances.as_deref())?;
            println!("pooled_accuracy {}", report.accuracy);
            for c in &report.classes {
                println!(
                    "{} precision {:.4} recall {:.4} f1 {:.4}",
                    c.label, c.precision, c.recall, c.f1
                );
            }
            println!("train_accuracy {}", report.train_accuracy);
        }
        Command::Train {
            features,
            config,
            out,
            seed,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.forest.seed = s;
            }
            let model = workflow::train(&features, &cfg, &out)?;
            println!(
                "trained {} trees on {} samples",
                model.trees.len(),
                model.n_train
            );
        }
        Command::Predict {
            model,
            features,
            out,
        } => {
            let predictions = workflow::predict(&model, &features)?;
            let mut text = String::from("id,label\n");
            for (id, label) in &predictions {
                text.push_str(&format!("{id},{}\n", label));
            }
            match out {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|source| WorkflowError::Io { path, source })?,
                None => print!("{text}"),
            }
        }
        Command::Config { config } => {
            print!("{}", load_config(config.as_deref())?.to_toml());
        }
    }
    Ok(())
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

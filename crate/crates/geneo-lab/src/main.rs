use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use geneo_lab::commands;
use geneo_lab::config::ExperimentConfig;
use geneo_lab::experiment::run_experiment;

use geneo_models::blackbox::PredictionTable;
use geneo_models::models::CnnModel;
use geneo_models::persist::{save_model, PersistedModel};

#[derive(Parser)]
#[command(
    name = "geneo-lab",
    about = "Equivariant-operator workbench: train pattern-based surrogates, measure observer-relative distances, verify the metric laws"
)]
struct Cli {
    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured model and report accuracy/fidelity CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Like `run`, on the 2x2-max rescaled perception space.
    Rescaled {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a randomized verification suite (or `all`).
    Verify {
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        instances: usize,
    },
    /// Surrogate distance between two GEOs under an observer.
    Distance {
        #[arg(long)]
        universe: PathBuf,
        #[arg(long)]
        observer: PathBuf,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        beta: String,
        /// Output metric: discrete | l1 | linfinity | cod.
        #[arg(long, default_value = "discrete")]
        metric: String,
    },
    /// Complexity of a named diagram under an assignment.
    Complexity {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        diagram: String,
        #[arg(long)]
        assignment: Option<PathBuf>,
    },
    /// Typecheck a diagram file and print words and complexities.
    CheckDiagram {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        assignment: Option<PathBuf>,
    },
    /// Sample a pattern bank per the config and persist it.
    SamplePatterns {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the configured CNN black-box and write its prediction table.
    TrainBlackbox {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore failure: the pool may already be initialized in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out_dir = out.unwrap_or_else(|| cfg.out_dir.clone());
            let outcome = run_experiment(&cfg, &out_dir)?;
            print_rows(&outcome);
            println!("reports written to {}", out_dir.display());
            Ok(if outcome.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Rescaled { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.rescale = geneo_lab::config::RescaleKind::Max2x2;
            let out_dir = out.unwrap_or_else(|| cfg.out_dir.clone());
            let outcome = run_experiment(&cfg, &out_dir)?;
            print_rows(&outcome);
            println!("reports written to {}", out_dir.display());
            Ok(if outcome.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Verify { suite, seed, instances } => {
            let passed = commands::cmd_verify(&suite, seed, instances)?;
            Ok(if passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Distance { universe, observer, alpha, beta, metric } => {
            print!("{}", commands::cmd_distance(&universe, &observer, &alpha, &beta, &metric)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Complexity { file, diagram, assignment } => {
            let c = commands::cmd_complexity(&file, &diagram, assignment.as_deref())?;
            println!("{c}");
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckDiagram { file, assignment } => {
            print!("{}", commands::cmd_check_diagram(&file, assignment.as_deref())?);
            Ok(ExitCode::SUCCESS)
        }
        Command::SamplePatterns { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out_dir = out.unwrap_or_else(|| cfg.out_dir.clone());
            let ds = geneo_lab::experiment::load_dataset(&cfg)?;
            let train_idx = ds.indices_of(geneo_models::Split::Train);
            let train: Vec<_> = train_idx.iter().map(|&i| ds.images[i].clone()).collect();
            let bank = geneo_models::sample_patterns(
                &train,
                cfg.pattern_bank.count,
                cfg.pattern_bank.w,
                cfg.pattern_bank.h,
                cfg.pattern_bank.seed,
            )?;
            // Persist through a zero-head model so the bank blob format is
            // shared with trained models.
            let model = geneo_models::models::Geo1Model::new(bank, cfg.pattern_bank.seed);
            save_model(&out_dir.join("models"), "pattern_bank", &PersistedModel::Geo1(model))?;
            println!("pattern bank written to {}", out_dir.join("models").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::TrainBlackbox { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out_dir = out.unwrap_or_else(|| cfg.out_dir.clone());
            let cnn = train_blackbox(&cfg, &out_dir)?;
            let ds = geneo_lab::experiment::load_dataset(&cfg)?;
            let predicted: Vec<u8> = geneo_models::blackbox::BlackBox::Cnn(&cnn).labels_for(&ds.images);
            let table = PredictionTable { predicted, scores: None };
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(out_dir.join("blackbox_predictions.csv"), table.to_csv())?;
            println!(
                "prediction table written to {}",
                out_dir.join("blackbox_predictions.csv").display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn train_blackbox(cfg: &ExperimentConfig, out_dir: &std::path::Path) -> Result<CnnModel> {
    use geneo_lab::config::{BlackBoxSpec, ModelSpec};
    let model_id = match &cfg.blackbox {
        BlackBoxSpec::Cnn { model_id } => model_id.clone(),
        _ => anyhow::bail!("config's blackbox is not a cnn row"),
    };
    let only_cnn: Vec<ModelSpec> =
        cfg.models.iter().filter(|m| m.id() == model_id).cloned().collect();
    let mut sub = cfg.clone();
    sub.models = only_cnn;
    let outcome = run_experiment(&sub, out_dir)?;
    outcome
        .cnn(&model_id)
        .cloned()
        .ok_or_else(|| anyhow::anyhow!("cnn '{model_id}' missing after training"))
}

fn print_rows(outcome: &geneo_lab::experiment::ExperimentOutcome) {
    println!("model_id            C1       C2      accuracy  fidelity");
    for row in &outcome.rows {
        let fidelity = row.fidelity.map(|f| format!("{f:.4}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<18} {:>8} {:>8} {:>9.4} {:>9}",
            row.model_id, row.params, row.nonlinearities, row.accuracy, fidelity
        );
    }
    for (id, err) in &outcome.failures {
        println!("{id:<18} FAILED: {err}");
    }
}

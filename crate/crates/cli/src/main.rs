use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mimalloc::MiMalloc;
use tqent::dataset::{stratified_split, Dataset};
use tqent::experiments::{
    lookup, noise_experiment, train_entry, train_hierarchical, with_noise, AnyModel, NoiseSpec,
    Task, HIERARCHICAL_NAME,
};
use tqent::features::{anova_f, featurize_dataset, FeatureOrdering};
use tqent::io::{
    execute_run, load_dataset, load_model, load_report, render_report, save_dataset, save_model,
    save_report, write_confusion, write_file, write_history, write_noise_table, write_ranking,
    ReportFormat, RunConfig,
};
use tqent::stategen::DatasetSpec;
use tqent::{Error, Result};

#[global_allocator]
static GLOBAL: MiMalloc = MiMalloc;

/// Three-qubit entanglement classification toolkit.
#[derive(Parser)]
#[command(name = "tqent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a balanced labeled dataset.
    Gen {
        #[arg(long)]
        per_class_per_pattern: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// White-noise weight mixed into every state.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Rank features by ANOVA F-value.
    Rank {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        features: FeatureOrdering,
        /// Labeling to score against: slocc (6 classes) or gme (2 classes).
        #[arg(long, default_value = "slocc")]
        labels: String,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a catalog model.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Must match the model's feature ordering when given.
        #[arg(long)]
        features: Option<FeatureOrdering>,
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Evaluate a saved model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        features: Option<FeatureOrdering>,
        #[arg(long)]
        confusion: Option<PathBuf>,
    },
    /// Train the three-stage DIAG7 cascade.
    HierTrain {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Evaluate a saved cascade.
    HierEval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        confusion: Option<PathBuf>,
    },
    /// Accuracy grid over test noise levels.
    NoiseTable {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        train_noise: f64,
        #[arg(long, value_delimiter = ',')]
        test_noises: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "GME63,GME7,SLOCC63,SLOCC7,HIER7"
        )]
        models: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Held-out test set; otherwise 20% of --dataset is held out per class.
        #[arg(long)]
        test_dataset: Option<PathBuf>,
    },
    /// Render a saved report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a JSON run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_noisy(path: &Path, noise: f64) -> Result<Dataset> {
    Ok(with_noise(&load_dataset(path)?, NoiseSpec::new(noise)?))
}

fn check_ordering(
    requested: Option<FeatureOrdering>,
    model_ordering: FeatureOrdering,
    name: &str,
) -> Result<()> {
    match requested {
        Some(r) if r != model_ordering => Err(Error::Config(format!(
            "{name} uses {model_ordering} features, not {r}"
        ))),
        _ => Ok(()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            }),
    }
}

fn evaluate_to(
    model: &AnyModel,
    data: &Dataset,
    out: &Path,
    confusion: Option<&Path>,
) -> Result<()> {
    let report = model.evaluate(data)?;
    save_report(&report, out)?;
    if let Some(path) = confusion {
        write_file(path, |w| {
            write_confusion(w, &report.confusion, &report.class_names)
        })?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            per_class_per_pattern,
            seed,
            out,
            noise,
        } => {
            let data = Dataset::generate(&DatasetSpec::balanced(per_class_per_pattern, seed))?;
            save_dataset(&with_noise(&data, NoiseSpec::new(noise)?), out)
        }
        Command::Rank {
            dataset,
            features,
            labels,
            out,
        } => {
            let task = match labels.to_ascii_lowercase().as_str() {
                "slocc" => Task::Slocc,
                "gme" => Task::Gme,
                other => {
                    return Err(Error::Config(format!(
                        "unknown labeling {other:?} (expected slocc or gme)"
                    )))
                }
            };
            let data = load_dataset(&dataset)?;
            if features == FeatureOrdering::Sv16 && data.noise > 0.0 {
                return Err(Error::Config(
                    "state-vector features need a noise-free dataset".into(),
                ));
            }
            let x = featurize_dataset(&data, features)?;
            let ids: Vec<usize> = data
                .samples
                .iter()
                .map(|s| task.class_of(s.label).expect("total labeling"))
                .collect();
            let scores = anova_f(&x, &ids)?;
            let mut buf = Vec::new();
            write_ranking(&mut buf, &scores)?;
            emit(out.as_deref(), &String::from_utf8_lossy(&buf))
        }
        Command::Train {
            dataset,
            model,
            seed,
            out,
            noise,
            features,
            history,
        } => {
            let entry = lookup(&model)?;
            check_ordering(features, entry.ordering, entry.name)?;
            let data = load_noisy(&dataset, noise)?;
            let trained = train_entry(&entry, &data, seed)?;
            if let Some(path) = history {
                write_file(path, |w| write_history(w, &trained.history))?;
            }
            save_model(&AnyModel::Flat(trained), out)
        }
        Command::Eval {
            model,
            dataset,
            out,
            noise,
            features,
            confusion,
        } => {
            let m = load_model(&model)?;
            let ordering = match &m {
                AnyModel::Flat(t) => t.ordering,
                AnyModel::Hierarchical(_) => FeatureOrdering::Diag7,
            };
            check_ordering(features, ordering, m.name())?;
            evaluate_to(
                &m,
                &load_noisy(&dataset, noise)?,
                &out,
                confusion.as_deref(),
            )
        }
        Command::HierTrain {
            dataset,
            seed,
            out,
            noise,
        } => {
            let data = load_noisy(&dataset, noise)?;
            save_model(
                &AnyModel::Hierarchical(Box::new(train_hierarchical(&data, seed)?)),
                out,
            )
        }
        Command::HierEval {
            model,
            dataset,
            out,
            noise,
            confusion,
        } => {
            let m = load_model(&model)?;
            if !matches!(m, AnyModel::Hierarchical(_)) {
                return Err(Error::Config(format!(
                    "{} holds the flat model {}, not {HIERARCHICAL_NAME}",
                    model.display(),
                    m.name()
                )));
            }
            evaluate_to(
                &m,
                &load_noisy(&dataset, noise)?,
                &out,
                confusion.as_deref(),
            )
        }
        Command::NoiseTable {
            dataset,
            train_noise,
            test_noises,
            out,
            models,
            seed,
            test_dataset,
        } => {
            let data = load_dataset(&dataset)?;
            let (train, test) = match test_dataset {
                Some(p) => (data, load_dataset(p)?),
                None => {
                    let ids: Vec<usize> = data.samples.iter().map(|s| s.label.id()).collect();
                    let (a, b) = stratified_split(&ids, 0.2, seed);
                    (data.subset(&a), data.subset(&b))
                }
            };
            let test_noises = test_noises
                .into_iter()
                .map(NoiseSpec::new)
                .collect::<Result<Vec<_>>>()?;
            if test_noises.is_empty() {
                return Err(Error::Config(
                    "--test-noises needs at least one level".into(),
                ));
            }
            let names: Vec<&str> = models.iter().map(String::as_str).collect();
            let table = noise_experiment(
                NoiseSpec::new(train_noise)?,
                &test_noises,
                &names,
                &train,
                &test,
                seed,
            )?;
            write_file(out, |w| write_noise_table(w, &table))
        }
        Command::Report { input, format, out } => {
            let report = load_report(input)?;
            emit(out.as_deref(), &render_report(&report, format)?)
        }
        Command::Run { config } => {
            let outputs = execute_run(&RunConfig::load(config)?)?;
            for f in outputs.files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            e.print().ok();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            eprintln!("tqent: {}", one_line(first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tqent: {}", one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}

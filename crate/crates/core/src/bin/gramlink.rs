use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use gramlink::dp::{LaplaceSampler, PrivacyBudget};
use gramlink::embedding::{embed_dataset, vectors_to_tsv, GramBase};
use gramlink::harness::experiment::{run_experiment, ExperimentConfig};
use gramlink::harness::metrics::{evaluate, GroundTruth};
use gramlink::harness::perturb::{perturb_dataset, PerturbationSpec};
use gramlink::harness::synth::synthetic_places;
use gramlink::mining::ptree::{build_tree, enforce_consistency, TreeConfig};
use gramlink::protocol::{mine_party, run_protocol, MatchResult, MinerKind, ProtocolConfig, Role};
use gramlink::records::{load_dataset, write_dataset, Alphabet, Dataset, Ingest};
use gramlink::{Error, Result};

#[derive(Parser)]
#[command(
    name = "gramlink",
    version,
    about = "Private record linkage over frequent-gram embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine a private gram base from one dataset.
    Mine {
        input: PathBuf,
        /// Base file to write (one gram per line); stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print noisy frequencies next to each gram.
        #[arg(long)]
        scores: bool,
        /// Write the prefix tree (without partitions) as JSON.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[command(flatten)]
        opts: Options,
    },
    /// Embed a dataset over a base.
    Embed {
        input: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: Options,
    },
    /// Run the full protocol between two datasets.
    Link {
        a: PathBuf,
        b: PathBuf,
        /// Match TSV; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Metrics JSON against id-equality ground truth.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Transcript summary JSON.
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[command(flatten)]
        opts: Options,
    },
    /// Corrupt every record with random edits.
    Perturb {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Draw the number of edits uniformly from 0..=ed.
        #[arg(long)]
        up_to: bool,
        #[command(flatten)]
        opts: Options,
    },
    /// Score a match file against id-equality ground truth.
    Evaluate {
        matches: PathBuf,
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        opts: Options,
    },
    /// Run a parameter sweep and print the JSON report.
    Bench {
        /// Dataset to sweep over; a synthetic place list is used if omitted.
        input: Option<PathBuf>,
        /// Size of the synthetic dataset.
        #[arg(long, default_value_t = 2000)]
        synthetic: usize,
        #[arg(long)]
        repetitions: Option<usize>,
        /// Comma-separated dataset sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: Options,
    },
}

#[derive(Args, Clone, Default)]
struct Options {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    qmin: Option<usize>,
    #[arg(long, global = true)]
    qmax: Option<usize>,
    #[arg(long, global = true)]
    ed: Option<usize>,
    #[arg(long, global = true)]
    hmax: Option<usize>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    miner: Option<MinerKind>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    split_budget: bool,
    /// Drop symbols outside the alphabet instead of rejecting the file.
    #[arg(long, global = true)]
    lenient: bool,
}

impl Options {
    fn load<T: DeserializeOwned + Default>(&self) -> Result<T> {
        match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                Ok(serde_json::from_str(&text)?)
            }
            None => Ok(T::default()),
        }
    }

    fn protocol(&self) -> Result<ProtocolConfig> {
        let mut c: ProtocolConfig = self.load()?;
        if let Some(v) = self.epsilon {
            c.epsilon = v;
        }
        if let Some(v) = self.k {
            c.k = v;
        }
        if let Some(v) = self.qmin {
            c.q_min = v;
        }
        if let Some(v) = self.qmax {
            c.q_max = v;
        }
        if let Some(v) = self.ed {
            c.ed = v;
        }
        if let Some(v) = self.hmax {
            c.h_max = Some(v);
        }
        if let Some(v) = self.theta {
            c.theta = Some(v);
        }
        if let Some(v) = self.miner {
            c.miner = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.split_budget |= self.split_budget;
        Ok(c)
    }

    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut c: ExperimentConfig = self.load()?;
        if let Some(v) = self.epsilon {
            c.epsilons = vec![v];
        }
        if let Some(v) = self.k {
            c.ks = vec![v];
        }
        if let Some(v) = self.qmin {
            c.q_min = v;
        }
        if let Some(v) = self.qmax {
            c.q_max = v;
        }
        if let Some(v) = self.ed {
            c.eds = vec![v];
        }
        if let Some(v) = self.hmax {
            c.h_max = Some(v);
        }
        if let Some(v) = self.theta {
            c.theta = Some(v);
        }
        if let Some(v) = self.miner {
            c.miners = vec![v];
        }
        if let Some(v) = self.seed {
            c.first_seed = v;
        }
        c.split_budget |= self.split_budget;
        Ok(c)
    }

    fn read(&self, path: &Path, alphabet: &Alphabet) -> Result<Dataset> {
        let mode = if self.lenient { Ingest::Lenient } else { Ingest::Strict };
        load_dataset(path, alphabet, mode)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => io::stdout().write_all(text.as_bytes()).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Mine {
            input,
            out,
            scores,
            tree,
            opts,
        } => {
            let config = opts.protocol()?;
            let ds = opts.read(&input, &config.alphabet).map_err(|e| e.at_stage("load"))?;
            let (grams, spent) = mine_party(&ds, &config, Role::A).map_err(|e| e.at_stage("mining"))?;
            if let Some(path) = tree {
                let strategy = config
                    .miner
                    .allocation()
                    .ok_or_else(|| Error::InvalidParameter("--tree needs a prefix-tree miner".into()))?;
                // Same seed and stream as the mining run, so this is the tree
                // the grams were read from, not a second release.
                let tc = TreeConfig {
                    epsilon: config.party_epsilon(),
                    h_max: config
                        .h_max
                        .unwrap_or_else(|| ds.average_length().round().max(1.0) as usize),
                    theta: config.theta,
                    strategy,
                    q_min: config.q_min,
                    q_max: config.q_max,
                    k: config.k,
                };
                let mut budget = PrivacyBudget::new(tc.epsilon)?;
                let mut sampler = LaplaceSampler::with_stream(config.seed, Role::A.stream());
                let t = enforce_consistency(build_tree(&ds, &config.alphabet, &tc, &mut budget, &mut sampler)?);
                emit(Some(&path), &t.to_json()?)?;
            }
            let text: String = if scores {
                grams
                    .iter()
                    .map(|g| format!("{}\t{}\n", g.gram, g.noisy_frequency))
                    .collect()
            } else {
                GramBase::from_scored(&grams)?.to_lines()
            };
            emit(out.as_deref(), &text)?;
            eprintln!("mined {} grams, epsilon spent {spent}", grams.len());
        }
        Command::Embed { input, base, out, opts } => {
            let config = opts.protocol()?;
            let ds = opts.read(&input, &config.alphabet).map_err(|e| e.at_stage("load"))?;
            let base = GramBase::read(&base).map_err(|e| e.at_stage("load"))?;
            emit(out.as_deref(), &vectors_to_tsv(&embed_dataset(&ds, &base)))?;
        }
        Command::Link {
            a,
            b,
            out,
            metrics,
            transcript,
            opts,
        } => {
            let config = opts.protocol()?;
            let da = opts.read(&a, &config.alphabet).map_err(|e| e.at_stage("load"))?;
            let db = opts.read(&b, &config.alphabet).map_err(|e| e.at_stage("load"))?;
            let result = run_protocol(&da, &db, &config)?;
            emit(out.as_deref(), &result.matches.to_tsv())?;
            let m = evaluate(&result.matches, &GroundTruth::id_equality(&da, &db));
            if let Some(path) = metrics {
                emit(Some(&path), &serde_json::to_string_pretty(&m)?)?;
            }
            if let Some(path) = transcript {
                emit(Some(&path), &result.transcript.summary_json()?)?;
            }
            eprintln!(
                "{} pairs, precision {:.4} recall {:.4} f1 {:.4}",
                result.matches.len(),
                m.precision,
                m.recall,
                m.f1
            );
        }
        Command::Perturb {
            input,
            out,
            up_to,
            opts,
        } => {
            let config = opts.protocol()?;
            let ds = opts.read(&input, &config.alphabet).map_err(|e| e.at_stage("load"))?;
            let spec = PerturbationSpec {
                ed: config.ed,
                seed: config.seed,
                exact: !up_to,
                ..PerturbationSpec::default()
            };
            let perturbed = perturb_dataset(&ds, &config.alphabet, &spec)?;
            match out {
                Some(path) => write_dataset(&path, &perturbed)?,
                None => {
                    // Ids are line numbers; stdout keeps order but not gaps.
                    let text: String = perturbed.texts().map(|t| format!("{t}\n")).collect();
                    emit(None, &text)?;
                }
            }
        }
        Command::Evaluate { matches, a, b, opts } => {
            let config = opts.protocol()?;
            let text = fs::read_to_string(&matches).map_err(|source| Error::Io {
                path: matches.clone(),
                source,
            })?;
            let result = MatchResult::from_tsv(&text)?;
            let da = opts.read(&a, &config.alphabet).map_err(|e| e.at_stage("load"))?;
            let db = opts.read(&b, &config.alphabet).map_err(|e| e.at_stage("load"))?;
            let m = evaluate(&result, &GroundTruth::id_equality(&da, &db));
            emit(None, &format!("{}\n", serde_json::to_string_pretty(&m)?))?;
        }
        Command::Bench {
            input,
            synthetic,
            repetitions,
            sizes,
            out,
            opts,
        } => {
            let mut config = opts.experiment()?;
            if let Some(r) = repetitions {
                config.repetitions = r;
            }
            if !sizes.is_empty() {
                config.sizes = sizes;
            }
            let ds = match input {
                Some(path) => opts.read(&path, &config.alphabet).map_err(|e| e.at_stage("load"))?,
                None => synthetic_places(synthetic, config.first_seed),
            };
            let report = run_experiment(&config, &ds)?;
            emit(out.as_deref(), &format!("{}\n", report.to_json()?))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

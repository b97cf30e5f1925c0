//! Command-line interface: synthetic data generation, dataset filtering and
//! splitting, training, ranking evaluation and fill-in-the-blank scoring.
//!
//! Every subcommand accepts `--config FILE` (flat `key = value` pairs, see
//! `hfgn::config`) with individual flags overriding file values. All
//! randomness derives from one `--seed` flag when given. Exit codes:
//! 0 success, 1 usage error, 2 data or runtime error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use hfgn::checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
use hfgn::config::FileConfig;
use hfgn::data::{kcore_filter, load_dataset, split_dataset, DataSplit, Dataset};
use hfgn::eval::{
    build_fitb_queries, evaluate_topk, fitb_accuracy, read_fitb_queries, write_fitb_queries,
    EvalTarget,
};
use hfgn::graph::build_category_graph;
use hfgn::model::Model;
use hfgn::train::train;

const DATA_DIR_ENV: &str = "HFGN_DATA_DIR";

#[derive(Parser)]
#[command(name = "hfgn", version, about = "Hierarchical fashion graph network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key-value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DataArg {
    /// Dataset directory (falls back to $HFGN_DATA_DIR).
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-structure synthetic dataset.
    GenSynth {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        outfits: Option<usize>,
        #[arg(long)]
        items: Option<usize>,
        #[arg(long)]
        categories: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        interactions_per_user: Option<usize>,
        #[arg(long)]
        fitb_holdout: Option<usize>,
    },
    /// Iteratively drop users and outfits below interaction thresholds.
    Filter {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArg,
        /// Output directory for the filtered dataset.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        min_user_inter: usize,
        #[arg(long, default_value_t = 10)]
        min_outfit_inter: usize,
    },
    /// Materialize the per-user train/validation/test split.
    Split {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArg,
        /// Output directory for train.tsv, val.tsv and test.tsv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        train_frac: Option<f64>,
        #[arg(long)]
        val_frac: Option<f64>,
    },
    /// Print category co-occurrence statistics as tab-separated rows.
    GraphStats {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArg,
    },
    /// Train the model and write a checkpoint plus a history log.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArg,
        /// Output directory for model.ckpt and history.tsv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Rank test candidates and report HR/NDCG/Recall/Precision.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Machine-readable metrics file.
        #[arg(long, default_value = "metrics.tsv")]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Fill-in-the-blank accuracy over the held-out outfit pool.
    Fitb {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 2000)]
        count: usize,
        /// Export the evaluated queries.
        #[arg(long)]
        queries_out: Option<PathBuf>,
        /// Evaluate previously exported queries instead of sampling.
        #[arg(long)]
        queries_in: Option<PathBuf>,
        /// Draw distractors from the masked item's category.
        #[arg(long)]
        category_matched: bool,
    },
    /// Print a checkpoint's header and array table.
    InspectCheckpoint {
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<FileConfig> {
    match path {
        Some(p) => Ok(FileConfig::load(p)?),
        None => Ok(FileConfig::empty()),
    }
}

fn resolve_data_dir(arg: &DataArg) -> anyhow::Result<PathBuf> {
    if let Some(p) = &arg.data {
        return Ok(p.clone());
    }
    if let Ok(p) = std::env::var(DATA_DIR_ENV) {
        return Ok(PathBuf::from(p));
    }
    bail!("no dataset directory: pass --data or set {DATA_DIR_ENV}");
}

/// Purpose-separated seeds. A master seed fans out with fixed offsets so
/// the synthetic, split, init, training and query streams stay distinct.
struct Seeds {
    synth: u64,
    split: u64,
    init: u64,
    train: u64,
    fitb: u64,
}

fn resolve_seeds(cfg: &FileConfig, master: Option<u64>) -> anyhow::Result<Seeds> {
    if let Some(s) = master {
        return Ok(Seeds {
            synth: s,
            split: s.wrapping_add(1),
            init: s.wrapping_add(2),
            train: s.wrapping_add(3),
            fitb: s.wrapping_add(4),
        });
    }
    let parse_u64 = |key: &str, default: u64| -> anyhow::Result<u64> {
        match cfg.get_raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .with_context(|| format!("bad value '{v}' for key '{key}'")),
        }
    };
    Ok(Seeds {
        synth: cfg.synthetic_spec()?.seed,
        split: cfg.split_spec()?.seed,
        init: cfg.model_config()?.init_seed,
        train: cfg.train_config()?.rng_seed,
        fitb: parse_u64("fitb_seed", 99)?,
    })
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::GenSynth {
            common,
            out,
            users,
            outfits,
            items,
            categories,
            noise,
            interactions_per_user,
            fitb_holdout,
        } => {
            let cfg = load_config(&common.config)?;
            let seeds = resolve_seeds(&cfg, common.seed)?;
            let mut spec = cfg.synthetic_spec()?;
            spec.seed = seeds.synth;
            if let Some(v) = users {
                spec.users = v;
            }
            if let Some(v) = outfits {
                spec.outfits = v;
            }
            if let Some(v) = items {
                spec.items = v;
            }
            if let Some(v) = categories {
                spec.categories = v;
            }
            if let Some(v) = noise {
                spec.noise = v;
            }
            if let Some(v) = interactions_per_user {
                spec.interactions_per_user = v;
            }
            if let Some(v) = fitb_holdout {
                spec.fitb_holdout = v;
            }
            let ds = hfgn::synth::generate_synthetic(&spec)?;
            ds.save(&out)?;
            println!(
                "wrote {} users, {} outfits ({} held out), {} items, {} categories, {} interactions to {}",
                ds.user_count(),
                ds.outfit_count(),
                ds.fitb_pool().len(),
                ds.item_count(),
                ds.category_count(),
                ds.interactions.len(),
                out.display()
            );
            Ok(())
        }

        Command::Filter {
            common,
            data,
            out,
            min_user_inter,
            min_outfit_inter,
        } => {
            let _ = load_config(&common.config)?;
            let dir = resolve_data_dir(&data)?;
            let ds = load_dataset(&dir)?;
            let filtered = kcore_filter(&ds, min_user_inter, min_outfit_inter)?;
            filtered.save(&out)?;
            println!(
                "filtered {} -> {} users, {} -> {} outfits, {} -> {} interactions, {} -> {} items",
                ds.user_count(),
                filtered.user_count(),
                ds.outfit_count(),
                filtered.outfit_count(),
                ds.interactions.len(),
                filtered.interactions.len(),
                ds.item_count(),
                filtered.item_count(),
            );
            Ok(())
        }

        Command::Split {
            common,
            data,
            out,
            train_frac,
            val_frac,
        } => {
            let cfg = load_config(&common.config)?;
            let seeds = resolve_seeds(&cfg, common.seed)?;
            let dir = resolve_data_dir(&data)?;
            let ds = load_dataset(&dir)?;
            let mut spec = cfg.split_spec()?;
            spec.seed = seeds.split;
            if let Some(v) = train_frac {
                spec.train_frac = v;
            }
            if let Some(v) = val_frac {
                spec.val_frac = v;
            }
            let split = split_dataset(&ds, &spec)?;
            fs::create_dir_all(&out)?;
            for (name, pairs) in [
                ("train.tsv", &split.train),
                ("val.tsv", &split.val),
                ("test.tsv", &split.test),
            ] {
                let mut f = fs::File::create(out.join(name))?;
                for &(u, o) in pairs {
                    writeln!(f, "{}\t{}", ds.index.users.name(u), ds.index.outfits.name(o))?;
                }
            }
            if !split.all_train_users.is_empty() {
                eprintln!(
                    "warning: {} users had a single interaction and were kept all-train",
                    split.all_train_users.len()
                );
            }
            println!(
                "split {} interactions into {} train / {} val / {} test",
                ds.interactions.len(),
                split.train.len(),
                split.val.len(),
                split.test.len()
            );
            Ok(())
        }

        Command::GraphStats { common, data } => {
            let _ = load_config(&common.config)?;
            let dir = resolve_data_dir(&data)?;
            let ds = load_dataset(&dir)?;
            // statistics over the outfits the model would train on
            let universe = if ds.interactions.is_empty() {
                (0..ds.outfit_count()).collect::<Vec<_>>()
            } else {
                ds.interacted_outfits()
            };
            let compositions: Vec<Vec<usize>> = universe
                .iter()
                .map(|&o| ds.outfit_items[o].clone())
                .collect();
            let cats =
                build_category_graph(&compositions, &ds.item_category, ds.category_count());
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            for c in 0..ds.category_count() {
                let mut partners: Vec<(usize, f64)> = (0..ds.category_count())
                    .map(|c2| (c2, cats.weight(c, c2)))
                    .filter(|&(_, w)| w > 0.0)
                    .collect();
                partners.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                let tops: Vec<String> = partners
                    .iter()
                    .take(5)
                    .map(|&(c2, w)| format!("{}:{:.6}", ds.index.categories.name(c2), w))
                    .collect();
                writeln!(
                    w,
                    "{}\t{}\t{}",
                    ds.index.categories.name(c),
                    cats.freq(c),
                    tops.join("\t")
                )?;
            }
            Ok(())
        }

        Command::Train {
            common,
            data,
            out,
            epochs,
        } => {
            let cfg = load_config(&common.config)?;
            let seeds = resolve_seeds(&cfg, common.seed)?;
            let dir = resolve_data_dir(&data)?;
            let ds = load_dataset(&dir)?;

            let mut split_spec = cfg.split_spec()?;
            split_spec.seed = seeds.split;
            let split = split_dataset(&ds, &split_spec)?;

            let mut model_config = cfg.model_config()?;
            model_config.init_seed = seeds.init;
            if cfg.get_raw("feature_dim").is_none() {
                model_config.feature_dim = ds.feature_dim;
            }
            let mut train_config = cfg.train_config()?;
            train_config.rng_seed = seeds.train;
            if let Some(e) = epochs {
                train_config.epochs = e;
            }

            let outcome = train(&ds, &split, &model_config, &train_config)?;
            if let Some(msg) = &outcome.diverged {
                eprintln!("warning: training diverged ({msg}); saving the last good state");
            }

            fs::create_dir_all(&out)?;
            let history_path = out.join("history.tsv");
            let mut f = fs::File::create(&history_path)?;
            for s in &outcome.history {
                writeln!(
                    f,
                    "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.3}",
                    s.epoch, s.loss_rec, s.loss_com, s.val_hr, s.val_ndcg, s.seconds
                )?;
            }

            let ckpt_path = out.join("model.ckpt");
            let meta = CheckpointMeta {
                model: model_config,
                counts: ds.index.counts(),
                epoch: outcome.best_epoch.unwrap_or(outcome.history.len()),
                rng_seed: train_config.rng_seed,
                split: split_spec,
            };
            save_checkpoint(&ckpt_path, &outcome.params, &meta)?;
            match outcome.best_epoch {
                Some(e) => println!(
                    "trained {} epochs; saved best-validation epoch {e} to {}",
                    outcome.history.len(),
                    ckpt_path.display()
                ),
                None => println!(
                    "trained {} epochs; saved final state to {}",
                    outcome.history.len(),
                    ckpt_path.display()
                ),
            }
            Ok(())
        }

        Command::Eval {
            common,
            data,
            checkpoint,
            out,
            k,
        } => {
            let _ = load_config(&common.config)?;
            let dir = resolve_data_dir(&data)?;
            let ds = load_dataset(&dir)?;
            let (model, split) = restore(&ds, &checkpoint)?;
            let graph = ds.hierarchical_graph(&split.train);
            let cats = training_category_graph(&ds, &split);
            let report = evaluate_topk(&model, &graph, &cats, &ds, &split, EvalTarget::Test, k)?;
            print!("{}", report.render_table());
            report.write_kv(&out)?;
            println!("wrote {}", out.display());
            Ok(())
        }

        Command::Fitb {
            common,
            data,
            checkpoint,
            count,
            queries_out,
            queries_in,
            category_matched,
        } => {
            let cfg = load_config(&common.config)?;
            let seeds = resolve_seeds(&cfg, common.seed)?;
            let dir = resolve_data_dir(&data)?;
            let ds = load_dataset(&dir)?;
            let (model, split) = restore(&ds, &checkpoint)?;
            let graph = ds.hierarchical_graph(&split.train);
            let cats = training_category_graph(&ds, &split);

            let queries = match &queries_in {
                Some(path) => read_fitb_queries(path, &ds)?,
                None => {
                    let pool = ds.fitb_pool();
                    build_fitb_queries(&ds, &pool, count, seeds.fitb, category_matched)?
                }
            };
            if let Some(path) = &queries_out {
                write_fitb_queries(path, &ds, &queries)?;
            }
            let accuracy = fitb_accuracy(&model, &graph, &cats, &ds, &queries)?;
            println!("queries\t{}", queries.len());
            println!("accuracy\t{accuracy:.6}");
            Ok(())
        }

        Command::InspectCheckpoint { checkpoint } => {
            let (params, meta) = load_checkpoint(&checkpoint)?;
            let m = &meta.model;
            println!("d\t{}", m.d);
            println!("feature_dim\t{}", m.feature_dim);
            println!("r_views\t{}", m.r_views);
            println!("attn_hidden\t{}", m.attn_hidden);
            println!("encoder_hidden\t{}", m.encoder_hidden);
            println!("leaky_slope\t{:?}", m.leaky_slope);
            println!("enable_item_prop\t{}", m.enable_item_prop);
            println!("enable_item_to_outfit\t{}", m.enable_item_to_outfit);
            println!("enable_outfit_to_user\t{}", m.enable_outfit_to_user);
            println!("init_seed\t{}", m.init_seed);
            println!("users\t{}", meta.counts.users);
            println!("outfits\t{}", meta.counts.outfits);
            println!("items\t{}", meta.counts.items);
            println!("categories\t{}", meta.counts.categories);
            println!("epoch\t{}", meta.epoch);
            println!("rng_seed\t{}", meta.rng_seed);
            println!("train_frac\t{:?}", meta.split.train_frac);
            println!("val_frac\t{:?}", meta.split.val_frac);
            println!("split_seed\t{}", meta.split.seed);
            let mut total = 0usize;
            for (name, t) in params.named() {
                println!("array\t{name}\t{}\t{}", t.rows(), t.cols());
                total += t.len();
            }
            println!("parameters\t{total}");
            Ok(())
        }
    }
}

/// Loads a checkpoint, validates it against the dataset, and rebuilds the
/// model and the split it was trained under.
fn restore(ds: &Dataset, checkpoint: &Path) -> anyhow::Result<(Model, DataSplit)> {
    let (params, meta) = load_checkpoint(checkpoint)?;
    let counts = ds.index.counts();
    if counts != meta.counts {
        bail!(
            "checkpoint was trained on {:?} but the dataset has {:?}",
            meta.counts,
            counts
        );
    }
    if meta.model.feature_dim != ds.feature_dim {
        bail!(
            "checkpoint feature_dim {} does not match dataset feature_dim {}",
            meta.model.feature_dim,
            ds.feature_dim
        );
    }
    let split = split_dataset(ds, &meta.split)?;
    Ok((Model::from_parts(meta.model, counts, params), split))
}

/// The category graph the trainer used: co-occurrence over the outfits
/// observed in training interactions.
fn training_category_graph(ds: &Dataset, split: &DataSplit) -> hfgn::graph::CategoryGraph {
    let mut outfits: Vec<usize> = split.train.iter().map(|&(_, o)| o).collect();
    outfits.sort_unstable();
    outfits.dedup();
    let compositions: Vec<Vec<usize>> = outfits
        .iter()
        .map(|&o| ds.outfit_items[o].clone())
        .collect();
    build_category_graph(&compositions, &ds.item_category, ds.category_count())
}

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use super::config::{ExperimentConfig, Mode};
use super::csv::{num, opt, CsvTable};
use super::{CommonArgs, EvalArgs, Split, SummarizeArgs, TrainArgs};
use crate::error::{ensure, Error, Result};
use crate::eval::{confusion, evaluate_network, MetricsTable};
use crate::fed::Federation;
use crate::models::{model_summary, Network, WSENET_REFERENCE_PARAMS, WSRNET_REFERENCE_PARAMS};
use crate::nncore::{flatten_params, load_params, read_checkpoint, write_checkpoint};
use crate::signal::{generate_dataset, read_dataset, snr_key, write_dataset, Dataset};
use crate::train::train_central as run_central;

pub const DATASET_FILE: &str = "dataset.fwsr";
pub const CHECKPOINT_FILE: &str = "model.fwsp";
pub const CENTRAL_CSV: &str = "central_metrics.csv";
pub const FED_CSV: &str = "fed_rounds.csv";

pub fn gen_data(args: &CommonArgs) -> Result<()> {
    let (cfg, out) = args.load()?;
    let ds = generate_dataset(&cfg.dataset_spec())?;
    let path = out.join(DATASET_FILE);
    let mut w = BufWriter::new(File::create(&path)?);
    write_dataset(&mut w, &ds)?;
    w.flush()?;
    println!("wrote {} samples to {}", ds.len(), path.display());
    println!("scheme,snr_db,count");
    let counts = ds.cell_counts();
    for (i, name) in ds.scheme_names.iter().enumerate() {
        for &snr in &cfg.dataset.snr_grid_db {
            let n = counts.get(&(i, snr_key(snr as f32))).copied().unwrap_or(0);
            println!("{name},{snr},{n}");
        }
    }
    Ok(())
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

/// The configured dataset, generated or read from `data`, checked against
/// the configured schemes and frame length.
fn load_dataset(cfg: &ExperimentConfig, data: Option<&Path>) -> Result<Dataset> {
    let ds = match data {
        Some(p) => read_dataset_file(p)?,
        None => generate_dataset(&cfg.dataset_spec())?,
    };
    let names: Vec<&str> = cfg.dataset.schemes.iter().map(|s| s.name()).collect();
    ensure!(
        ds.scheme_names == names,
        Format,
        "dataset classes {:?} do not match the configured schemes {names:?}",
        ds.scheme_names
    );
    ensure!(ds.frame_len == cfg.dataset.frame_len, Format, "dataset frame length {} != configured {}", ds.frame_len, cfg.dataset.frame_len);
    Ok(ds)
}

fn split(cfg: &ExperimentConfig, ds: &Dataset) -> (Dataset, Dataset) {
    ds.split_per_cell(cfg.dataset.train_per_cell)
}

fn save_checkpoint(cfg: &ExperimentConfig, net: &Network<f32>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, &cfg.network_cfg().digest(), &flatten_params(net))?;
    w.flush()?;
    Ok(())
}

pub fn train_central(args: &TrainArgs) -> Result<()> {
    let (cfg, out) = args.common.load()?;
    ensure!(matches!(cfg.mode, Mode::CentralWsr | Mode::CentralWser), Config, "train-central needs a central_* mode");
    let ds = load_dataset(&cfg, args.data.as_deref())?;
    let (train, test) = split(&cfg, &ds);
    let mut net = cfg.network_cfg().build::<f32>(cfg.seeds.model)?;
    let mut table = CsvTable::new(
        "central_metrics",
        1,
        &["epoch", "train_loss", "train_mse", "train_ce", "train_accuracy", "test_accuracy"],
    );
    let history = run_central(&mut net, &train, &test, &cfg.central_cfg()?, cfg.seeds.selection, |r| {
        eprintln!("epoch {:>3}  loss {:.5}  test acc {:.4}", r.epoch, r.train.loss, r.test_accuracy);
    })?;
    for r in &history {
        table.row(&[
            r.epoch.to_string(),
            num(r.train.loss),
            num(r.train.mse),
            num(r.train.ce),
            opt(r.train_accuracy),
            num(r.test_accuracy),
        ]);
    }
    table.write(&out.join(CENTRAL_CSV))?;
    save_checkpoint(&cfg, &net, &out.join(CHECKPOINT_FILE))?;
    if let Some(last) = history.last() {
        println!("final test accuracy {:.4} after {} epochs", last.test_accuracy, last.epoch);
    }
    Ok(())
}

pub fn train_fed(args: &TrainArgs) -> Result<()> {
    let (cfg, out) = args.common.load()?;
    ensure!(cfg.mode == Mode::Fed, Config, "train-fed needs mode = \"fed\"");
    let fed = cfg.fed_section()?;
    let ds = load_dataset(&cfg, args.data.as_deref())?;
    let (train, test) = split(&cfg, &ds);
    let shards = cfg.partition_spec()?.apply(&train.labels(), train.num_classes())?;
    let template = cfg.network_cfg().build::<f32>(cfg.seeds.model)?;
    let alg = cfg.fed_algorithm()?;
    let name = alg.kind.name();
    let k = fed.clients_per_round;
    let mut federation =
        Federation::new(template, shards, alg, k, &train, &test, cfg.seeds.selection, args.max_parallel)?;
    let mut table = CsvTable::new(
        "fed_rounds",
        1,
        &["round", "algorithm", "K", "P_global", "mean_P_k", "min_mu_k", "max_mu_k", "mean_local_loss"],
    );
    let records = federation.run(fed.rounds, |r| {
        eprintln!("round {:>3}  P_global {:.4}  mean P_k {:.4}  ({:.1}s)", r.round, r.global_performance, r.mean_performance(), r.wall_time_s);
    })?;
    for r in &records {
        let (lo, hi) = r.mu_range();
        table.row(&[
            r.round.to_string(),
            name.to_string(),
            k.to_string(),
            num(r.global_performance),
            num(r.mean_performance()),
            num(lo),
            num(hi),
            num(r.mean_local_loss()),
        ]);
    }
    table.write(&out.join(FED_CSV))?;
    let mut net = federation.template.clone();
    load_params(&mut net, &federation.server.global)?;
    save_checkpoint(&cfg, &net, &out.join(CHECKPOINT_FILE))?;
    if let Some(last) = records.last() {
        println!("final global accuracy {:.4} after {} rounds", last.global_performance, records.len());
    }
    Ok(())
}

/// Writes the per-SNR, per-class, confusion and enhancement tables.
pub fn write_metrics(
    out: &Path,
    ds: &Dataset,
    table: &MetricsTable,
    pred: &[usize],
    confusion_snr: Option<f64>,
) -> Result<()> {
    let mut t = CsvTable::new("accuracy_by_snr", 1, &["snr_db", "count", "correct", "accuracy"]);
    for r in &table.by_snr {
        let snr = r.snr_db.map_or_else(|| "ALL".to_string(), |s| num(s as f64));
        t.row(&[snr, r.count.to_string(), r.correct.to_string(), num(r.accuracy())]);
    }
    t.write(&out.join("accuracy_by_snr.csv"))?;

    let mut t = CsvTable::new("accuracy_by_class", 1, &["snr_db", "class", "scheme", "count", "correct", "accuracy"]);
    for r in &table.by_snr_class {
        let class = r.class.expect("class row");
        t.row(&[
            num(r.snr_db.expect("snr row") as f64),
            class.to_string(),
            ds.scheme_names[class].clone(),
            r.count.to_string(),
            r.correct.to_string(),
            num(r.accuracy()),
        ]);
    }
    t.write(&out.join("accuracy_by_class.csv"))?;

    let keep: Vec<usize> = match confusion_snr {
        Some(snr) => (0..ds.len()).filter(|&i| snr_key(ds.samples[i].snr_db) == snr_key(snr as f32)).collect(),
        None => (0..ds.len()).collect(),
    };
    ensure!(!keep.is_empty(), Config, "no samples at the requested confusion SNR");
    let truth: Vec<usize> = keep.iter().map(|&i| ds.samples[i].label).collect();
    let sel: Vec<usize> = keep.iter().map(|&i| pred[i]).collect();
    let cm = confusion(&sel, &truth, ds.num_classes())?;
    let mut header = vec!["true\\pred"];
    header.extend(ds.scheme_names.iter().map(String::as_str));
    let mut t = CsvTable::new("confusion", 1, &header);
    for (name, row) in ds.scheme_names.iter().zip(&cm.counts) {
        let mut cells = vec![name.clone()];
        cells.extend(row.iter().map(u64::to_string));
        t.row(&cells);
    }
    t.write(&out.join("confusion.csv"))?;

    if !table.enhancement.is_empty() {
        let mut t = CsvTable::new("enhancement", 1, &["snr_db", "count", "mse_in", "mse_out", "gain_db"]);
        for r in &table.enhancement {
            t.row(&[num(r.snr_db as f64), r.count.to_string(), num(r.mse_in), num(r.mse_out), num(r.gain_db)]);
        }
        t.write(&out.join("enhancement.csv"))?;
    }
    Ok(())
}

pub fn evaluate(args: &EvalArgs) -> Result<()> {
    let (cfg, out) = args.common.load()?;
    let net_cfg = cfg.network_cfg();
    let ckpt = read_checkpoint(BufReader::new(File::open(&args.checkpoint)?))?;
    ensure!(ckpt.digest == net_cfg.digest(), Config, "checkpoint was written for a different architecture");
    let mut net = net_cfg.build::<f32>(cfg.seeds.model)?;
    load_params(&mut net, &ckpt.params)?;
    let ds = match &args.data {
        Some(p) => load_dataset(&cfg, Some(p))?,
        None => {
            let ds = load_dataset(&cfg, None)?;
            let (train, test) = split(&cfg, &ds);
            match args.split {
                Split::Train => train,
                Split::Test => test,
                Split::All => ds,
            }
        }
    };
    let (table, pred) = evaluate_network(&mut net, &ds)?;
    write_metrics(&out, &ds, &table, &pred, args.confusion_snr)?;
    let all = table.by_snr.last().expect("ALL row");
    println!("accuracy {:.4} on {} samples", all.accuracy(), all.count);
    Ok(())
}

pub fn summarize(args: &SummarizeArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let net = cfg.network_cfg().build::<f32>(cfg.seeds.model)?;
    let summary = model_summary(&net);
    println!("{summary}");
    println!(
        "reference trainable totals for the full-width networks: enhancer {WSENET_REFERENCE_PARAMS}, recognizer {WSRNET_REFERENCE_PARAMS}"
    );
    if summary.total_params() + summary.total_buffers() != flatten_params(&net).len() {
        return Err(Error::Layout("summary totals disagree with the parameter layout".into()));
    }
    Ok(())
}

//! Subcommand implementations.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use sector::corpus::{
    generate_synthetic, load_wikisection_with, save_wikisection, split_corpus, CorpusSplit,
    Document, LoadOptions,
};
use sector::encode::{load_word_embeddings, murmur3_x64_128, EncoderKind, SentenceEncoder};
use sector::eval::{evaluate_run, DocumentPrediction, EvalReport, EvalTask};
use sector::normalize::{normalize_headings, read_headings, write_label_map, SynsetLexicon};
use sector::pipeline::predict_corpus;
use sector::segment::{deviation_bemd, deviation_emd, SegConfig};
use sector::topicnet::{load_model, save_model, train};
use sector::{Error, Result};

use crate::config::RunConfig;

fn content_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let (h1, h2) = murmur3_x64_128(&bytes, 0);
    Ok(format!("{h1:016x}{h2:016x}"))
}

fn load_documents(path: &Path, max_sentences: usize) -> Result<Vec<Document>> {
    load_wikisection_with(path, &LoadOptions { max_sentences })
}

fn resolve_split(config: &RunConfig) -> Result<(CorpusSplit, Vec<PathBuf>)> {
    let mut inputs = Vec::new();
    if let Some(corpus) = &config.paths.corpus {
        inputs.push(corpus.clone());
        let docs = load_documents(corpus, config.max_sentences)?;
        return Ok((split_corpus(docs, config.seed)?, inputs));
    }
    let train_path = config
        .paths
        .train
        .as_ref()
        .ok_or_else(|| Error::Config("missing paths.train".into()))?;
    inputs.push(train_path.clone());
    let train_docs = load_documents(train_path, config.max_sentences)?;
    let validation = match &config.paths.validation {
        Some(p) => {
            inputs.push(p.clone());
            load_documents(p, config.max_sentences)?
        }
        None => Vec::new(),
    };
    let test = match &config.paths.test {
        Some(p) => {
            inputs.push(p.clone());
            load_documents(p, config.max_sentences)?
        }
        None => Vec::new(),
    };
    Ok((
        CorpusSplit {
            train: train_docs,
            validation,
            test,
            seed: config.seed,
        },
        inputs,
    ))
}

fn fit_encoder(config: &RunConfig, train_docs: &[Document]) -> Result<SentenceEncoder> {
    let store = match (config.encoder.variant, &config.paths.embeddings) {
        (EncoderKind::Emb, Some(path)) => Some(load_word_embeddings(path)?),
        (EncoderKind::Emb, None) => {
            return Err(Error::Config(
                "encoder.variant = emb requires paths.embeddings".into(),
            ))
        }
        _ => None,
    };
    SentenceEncoder::fit(&config.encoder, train_docs, store)
}

pub fn cmd_train(config: &RunConfig) -> Result<()> {
    config.validate_paths(true)?;
    let out_dir = &config.paths.output_dir;
    std::fs::create_dir_all(out_dir)?;

    let (split, input_paths) = resolve_split(config)?;
    info!(
        "loaded {} train / {} validation / {} test documents",
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    let encoder = fit_encoder(config, &split.train)?;
    let outcome = train(&split, encoder, config.task, &config.train)?;

    let model_path = out_dir.join("model.secm");
    save_model(&outcome.model, &model_path)?;

    let log_path = out_dir.join("train_log.jsonl");
    let mut log_file = std::io::BufWriter::new(std::fs::File::create(&log_path)?);
    for entry in &outcome.log {
        serde_json::to_writer(&mut log_file, entry)?;
        log_file.write_all(b"\n")?;
    }
    log_file.flush()?;

    let mut input_hashes = BTreeMap::new();
    for path in &input_paths {
        input_hashes.insert(path.display().to_string(), content_hash(path)?);
    }
    let manifest = serde_json::json!({
        "config": config.echo,
        "inputs": input_hashes,
        "model_file": model_path.display().to_string(),
        "labels": outcome.model.labels.len(),
        "input_dim": outcome.model.encoder.dim(),
        "best_epoch": outcome.best_epoch,
        "best_val_map": outcome.best_val_map,
    });
    std::fs::write(
        out_dir.join("manifest.json"),
        format!("{}\n", serde_json::to_string_pretty(&manifest)?),
    )?;

    println!(
        "trained {} epochs (best epoch {}, validation MAP {:.4}); model written to {}",
        outcome.log.len(),
        outcome.best_epoch,
        outcome.best_val_map,
        model_path.display()
    );
    Ok(())
}

pub struct PredictArgs {
    pub model: PathBuf,
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub segment: SegConfig,
    pub max_sentences: usize,
}

fn write_json_out<T: serde::Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let text = format!("{}\n", serde_json::to_string_pretty(value)?);
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let docs = load_documents(&args.input, args.max_sentences)?;
    let predictions = predict_corpus(&model, &docs, args.segment.strategy, &args.segment)?;
    write_json_out(&predictions, args.output.as_deref())?;
    if let Some(path) = &args.output {
        println!(
            "wrote {} document predictions ({}) to {}",
            predictions.len(),
            args.segment.strategy,
            path.display()
        );
    }
    Ok(())
}

pub struct EvaluateArgs {
    pub gold: PathBuf,
    pub predictions: PathBuf,
    pub output: Option<PathBuf>,
    pub task: EvalTask,
    pub dataset: String,
    pub model_name: String,
    pub max_sentences: usize,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvalReport> {
    let gold = load_documents(&args.gold, args.max_sentences)?;
    let text = std::fs::read_to_string(&args.predictions)?;
    let predictions: Vec<DocumentPrediction> = serde_json::from_str(&text)?;

    // Fail with the full id lists on misalignment.
    let gold_ids: std::collections::BTreeSet<&str> =
        gold.iter().map(|d| d.id.as_str()).collect();
    let pred_ids: std::collections::BTreeSet<&str> =
        predictions.iter().map(|p| p.id.as_str()).collect();
    if gold_ids != pred_ids {
        let missing: Vec<&&str> = gold_ids.difference(&pred_ids).collect();
        let extra: Vec<&&str> = pred_ids.difference(&gold_ids).collect();
        return Err(Error::Eval(format!(
            "document ids do not align: missing predictions {missing:?}, unexpected predictions {extra:?}"
        )));
    }

    let mut report = evaluate_run(&gold, &predictions, args.task)?;
    report.dataset = args.dataset.clone();
    report.model = args.model_name.clone();
    report.strategy = predictions
        .first()
        .map(|p| p.strategy.clone())
        .unwrap_or_default();
    print!("{}", report.table());
    if let Some(path) = &args.output {
        std::fs::write(path, format!("{}\n", serde_json::to_string_pretty(&report)?))?;
    }
    Ok(report)
}

pub struct PlotArgs {
    pub model: PathBuf,
    pub input: PathBuf,
    pub doc_id: Option<String>,
    pub output_dir: PathBuf,
    pub segment: SegConfig,
    pub max_sentences: usize,
}

/// Deviation CSV plus a sentence x label score heatmap CSV for one document.
pub fn cmd_plot_deviation(args: &PlotArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let docs = load_documents(&args.input, args.max_sentences)?;
    let doc = match &args.doc_id {
        Some(id) => docs
            .iter()
            .find(|d| &d.id == id)
            .ok_or_else(|| Error::Eval(format!("document {id} not found in input")))?,
        None => docs
            .first()
            .ok_or_else(|| Error::Corpus("input file has no documents".into()))?,
    };
    let seg = args.segment;
    let inference = model.infer(doc)?;
    let emd = deviation_emd(&inference.embeddings.concat(), &seg)?;
    let bemd = deviation_bemd(
        &inference.embeddings.forward,
        &inference.embeddings.backward,
        &seg,
    )?;
    let prediction = sector::pipeline::predict_document(&model, doc, seg.strategy, &seg)?;
    let predicted: std::collections::BTreeSet<usize> = prediction
        .sections
        .iter()
        .skip(1)
        .map(|s| s.begin)
        .collect();
    let gold: std::collections::BTreeSet<usize> = doc
        .sections
        .iter()
        .skip(1)
        .map(|s| s.begin_sentence)
        .collect();

    std::fs::create_dir_all(&args.output_dir)?;
    let deviation_path = args.output_dir.join(format!("{}_deviation.csv", doc.id));
    let mut out = String::from("sentence_index,emd,bemd,is_predicted_boundary,gold_boundary\n");
    for k in 0..doc.len() {
        out.push_str(&format!(
            "{k},{},{},{},{}\n",
            emd[k],
            bemd[k],
            u8::from(predicted.contains(&k)),
            u8::from(gold.contains(&k))
        ));
    }
    std::fs::write(&deviation_path, out)?;

    let heatmap_path = args.output_dir.join(format!("{}_heatmap.csv", doc.id));
    let mut out = String::from("sentence_index");
    for label in &model.labels {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for (k, row) in inference.scores.iter().enumerate() {
        out.push_str(&k.to_string());
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    std::fs::write(&heatmap_path, out)?;
    println!(
        "wrote {} and {}",
        deviation_path.display(),
        heatmap_path.display()
    );
    Ok(())
}

pub struct NormalizeArgs {
    /// Either a headings TSV or a corpus to count headings from.
    pub headings: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub lexicon: PathBuf,
    pub output_dir: PathBuf,
}

pub fn cmd_normalize_headings(args: &NormalizeArgs) -> Result<()> {
    let headings = match (&args.headings, &args.corpus) {
        (Some(path), _) => {
            read_headings(std::io::BufReader::new(std::fs::File::open(path)?))?
        }
        (None, Some(corpus)) => {
            let docs = load_documents(corpus, usize::MAX)?;
            sector::normalize::heading_records_from_documents(&docs)
        }
        (None, None) => {
            return Err(Error::Config(
                "normalize-headings needs --headings or --corpus".into(),
            ))
        }
    };
    let lexicon = SynsetLexicon::from_path(&args.lexicon)?;
    let outcome = normalize_headings(&headings, &lexicon);
    std::fs::create_dir_all(&args.output_dir)?;

    let map_path = args.output_dir.join("label_map.tsv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&map_path)?);
    write_label_map(&outcome, &mut file)?;
    file.flush()?;

    let report_path = args.output_dir.join("clusters.json");
    std::fs::write(
        &report_path,
        format!("{}\n", serde_json::to_string_pretty(&outcome)?),
    )?;
    println!(
        "normalized {} headings into {} clusters (coverage {:.1}%, {} unmatched); outputs in {}",
        outcome.label_map.len(),
        outcome.clusters.len(),
        100.0 * outcome.coverage,
        outcome.unmatched.len(),
        args.output_dir.display()
    );
    Ok(())
}

pub fn cmd_synth(config: &RunConfig, output: &Path) -> Result<()> {
    let docs = generate_synthetic(&config.synth);
    save_wikisection(&docs, output)?;
    println!(
        "wrote {} synthetic documents ({} topics) to {}",
        docs.len(),
        config.synth.topics,
        output.display()
    );
    Ok(())
}

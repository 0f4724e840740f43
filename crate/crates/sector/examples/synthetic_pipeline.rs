//! Minimal library walkthrough: synthesize a corpus, train a single-label
//! model, segment the held-out documents and score them.

use sector::corpus::{generate_synthetic, split_corpus, SyntheticConfig};
use sector::encode::{EncoderConfig, SentenceEncoder};
use sector::eval::{evaluate_run, EvalTask};
use sector::pipeline::predict_corpus;
use sector::segment::{SegConfig, Strategy};
use sector::topicnet::{train, TaskKind, TrainConfig};

fn main() -> sector::Result<()> {
    let docs = generate_synthetic(&SyntheticConfig::default());
    let split = split_corpus(docs, 1)?;
    let encoder = SentenceEncoder::fit(&EncoderConfig::default(), &split.train, None)?;
    let config = TrainConfig {
        hidden: 32,
        embedding: 16,
        max_epochs: 30,
        ..Default::default()
    };
    let outcome = train(&split, encoder, TaskKind::Single, &config)?;
    let predictions = predict_corpus(
        &outcome.model,
        &split.test,
        Strategy::Bemd,
        &SegConfig::default(),
    )?;
    println!("{} documents segmented", predictions.len());
    let report = evaluate_run(&split.test, &predictions, EvalTask::Single)?;
    print!("{}", report.table());
    Ok(())
}

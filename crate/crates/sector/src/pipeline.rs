//! End-to-end glue: run a trained model over documents and produce the
//! prediction records consumed by evaluation and the CLI.

use crate::corpus::Document;
use crate::eval::{DocumentPrediction, LabelScore, PredictedSection};
use crate::segment::{segment_document, SegConfig, Strategy};
use crate::topicnet::SectorModel;
use crate::{par, Result};

/// Segment and classify one document with the given strategy.
pub fn predict_document(
    model: &SectorModel,
    doc: &Document,
    strategy: Strategy,
    config: &SegConfig,
) -> Result<DocumentPrediction> {
    let inference = model.infer(doc)?;
    let sections = segment_document(
        strategy,
        &doc.newline_marks(),
        &inference.scores,
        &inference.embeddings.forward,
        &inference.embeddings.backward,
        config,
    )?;
    Ok(DocumentPrediction {
        id: doc.id.clone(),
        strategy: strategy.to_string(),
        n_sentences: doc.len(),
        sections: sections
            .into_iter()
            .map(|s| PredictedSection {
                begin: s.begin,
                end: s.end,
                labels: s
                    .ranking
                    .iter()
                    .map(|&i| LabelScore {
                        label: model.labels[i].clone(),
                        score: s.distribution[i],
                    })
                    .collect(),
            })
            .collect(),
    })
}

/// Predict a whole corpus, in parallel across documents, output in input
/// order.
pub fn predict_corpus(
    model: &SectorModel,
    docs: &[Document],
    strategy: Strategy,
    config: &SegConfig,
) -> Result<Vec<DocumentPrediction>> {
    par::map(docs, |doc| predict_document(model, doc, strategy, config))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SyntheticConfig};
    use crate::encode::SentenceEncoder;
    use crate::rng::SplitMix64;
    use crate::topicnet::{Network, TaskKind};

    #[test]
    fn predictions_partition_every_document() {
        let docs = generate_synthetic(&SyntheticConfig {
            documents: 5,
            ..Default::default()
        });
        let model = SectorModel {
            net: Network::init(64, 6, 4, 3, TaskKind::Single, &mut SplitMix64::new(3)),
            labels: vec!["topica".into(), "topicb".into(), "other".into()],
            encoder: SentenceEncoder::Bloom { m: 64, k: 3 },
        };
        for strategy in [Strategy::Nl, Strategy::Max, Strategy::Emd, Strategy::Bemd] {
            for doc in &docs {
                let pred =
                    predict_document(&model, doc, strategy, &SegConfig::default()).unwrap();
                let mut expected = 0usize;
                for sec in &pred.sections {
                    assert_eq!(sec.begin, expected);
                    assert!(sec.end > sec.begin);
                    assert_eq!(sec.labels.len(), 3);
                    expected = sec.end;
                }
                assert_eq!(expected, doc.len());
            }
        }
    }
}

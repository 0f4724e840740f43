//! Versioned binary model container.
//!
//! Layout: magic `SECM`, format version, task tag, label names, the fitted
//! encoder state, then every parameter tensor as little-endian f32 with a
//! shape header. Save -> load -> save reproduces identical bytes.

use std::collections::HashMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::params::{LstmParams, Network, SharedParams, TaskKind, GATES};
use super::tensor::Mat;
use super::SectorModel;
use crate::encode::{SentenceEncoder, SifState, Vocabulary, WordEmbeddingStore};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"SECM";
const VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> Error {
    Error::Model(msg.into())
}

// -- primitive writers/readers ----------------------------------------------

fn write_u8(w: &mut impl Write, v: u8) -> Result<()> {
    w.write_all(&[v])?;
    Ok(())
}

fn write_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f32(w: &mut impl Write, v: f32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_string(w: &mut impl Write, s: &str) -> Result<()> {
    write_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| bad("truncated model file"))
}

fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact(r, &mut b)?;
    Ok(b[0])
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32(r: &mut impl Read) -> Result<f32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(f32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_string(r: &mut impl Read) -> Result<String> {
    let len = read_u32(r)? as usize;
    if len > 1 << 24 {
        return Err(bad("unreasonable string length"));
    }
    let mut buf = vec![0u8; len];
    read_exact(r, &mut buf)?;
    String::from_utf8(buf).map_err(|_| bad("invalid utf-8 in model file"))
}

fn write_mat(w: &mut impl Write, m: &Mat<f32>) -> Result<()> {
    write_u32(w, m.rows as u32)?;
    write_u32(w, m.cols as u32)?;
    for &v in &m.data {
        write_f32(w, v)?;
    }
    Ok(())
}

fn read_mat(r: &mut impl Read) -> Result<Mat<f32>> {
    let rows = read_u32(r)? as usize;
    let cols = read_u32(r)? as usize;
    if rows.checked_mul(cols).is_none_or(|n| n > 1 << 28) {
        return Err(bad("unreasonable tensor shape"));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(read_f32(r)?);
    }
    Ok(Mat { rows, cols, data })
}

fn write_vec32(w: &mut impl Write, v: &[f32]) -> Result<()> {
    write_u32(w, v.len() as u32)?;
    for &x in v {
        write_f32(w, x)?;
    }
    Ok(())
}

fn read_vec32(r: &mut impl Read) -> Result<Vec<f32>> {
    let len = read_u32(r)? as usize;
    if len > 1 << 28 {
        return Err(bad("unreasonable vector length"));
    }
    (0..len).map(|_| read_f32(r)).collect()
}

fn write_vec64(w: &mut impl Write, v: &[f64]) -> Result<()> {
    write_u32(w, v.len() as u32)?;
    for &x in v {
        write_f64(w, x)?;
    }
    Ok(())
}

fn read_vec64(r: &mut impl Read) -> Result<Vec<f64>> {
    let len = read_u32(r)? as usize;
    if len > 1 << 28 {
        return Err(bad("unreasonable vector length"));
    }
    (0..len).map(|_| read_f64(r)).collect()
}

// -- encoder state -----------------------------------------------------------

fn write_encoder(w: &mut impl Write, encoder: &SentenceEncoder) -> Result<()> {
    match encoder {
        SentenceEncoder::Bow(vocab) => {
            write_u8(w, 0)?;
            write_u32(w, vocab.len() as u32)?;
            for word in vocab.words() {
                write_string(w, word)?;
            }
            for i in 0..vocab.len() {
                write_f32(w, vocab.idf(i))?;
            }
            for i in 0..vocab.len() {
                write_f64(w, vocab.prob(i))?;
            }
            write_u32(w, vocab.doc_count() as u32)?;
        }
        SentenceEncoder::Bloom { m, k } => {
            write_u8(w, 1)?;
            write_u32(w, *m as u32)?;
            write_u32(w, *k as u32)?;
        }
        SentenceEncoder::Emb { store, sif } => {
            write_u8(w, 2)?;
            write_u32(w, store.dim() as u32)?;
            write_f64(w, sif.alpha)?;
            write_vec64(w, &sif.principal)?;
            write_u32(w, store.len() as u32)?;
            for (i, word) in store.words().iter().enumerate() {
                write_string(w, word)?;
                for &v in store.vector(i) {
                    write_f32(w, v)?;
                }
                write_f64(w, sif.weight(word))?;
            }
        }
    }
    Ok(())
}

fn read_encoder(r: &mut impl Read) -> Result<SentenceEncoder> {
    match read_u8(r)? {
        0 => {
            let n = read_u32(r)? as usize;
            let mut words = Vec::with_capacity(n);
            for _ in 0..n {
                words.push(read_string(r)?);
            }
            let mut idf = Vec::with_capacity(n);
            for _ in 0..n {
                idf.push(read_f32(r)?);
            }
            let mut prob = Vec::with_capacity(n);
            for _ in 0..n {
                prob.push(read_f64(r)?);
            }
            let doc_count = read_u32(r)? as usize;
            Ok(SentenceEncoder::Bow(Vocabulary::from_parts(
                words, idf, prob, doc_count,
            )))
        }
        1 => {
            let m = read_u32(r)? as usize;
            let k = read_u32(r)? as usize;
            if m < 1 || k < 1 {
                return Err(bad("invalid bloom parameters"));
            }
            Ok(SentenceEncoder::Bloom { m, k })
        }
        2 => {
            let dim = read_u32(r)? as usize;
            let alpha = read_f64(r)?;
            let principal = read_vec64(r)?;
            if principal.len() != dim {
                return Err(bad("principal direction dimension mismatch"));
            }
            let n = read_u32(r)? as usize;
            let mut store = WordEmbeddingStore::new(dim);
            let mut weights: HashMap<String, f64> = HashMap::with_capacity(n);
            for _ in 0..n {
                let word = read_string(r)?;
                let mut vector = Vec::with_capacity(dim);
                for _ in 0..dim {
                    vector.push(read_f32(r)?);
                }
                let weight = read_f64(r)?;
                store
                    .insert(&word, vector)
                    .map_err(|e| bad(format!("embedding store: {e}")))?;
                weights.insert(word, weight);
            }
            Ok(SentenceEncoder::Emb {
                store,
                sif: SifState::from_parts(weights, alpha, principal),
            })
        }
        tag => Err(bad(format!("unknown encoder tag {tag}"))),
    }
}

// -- model -------------------------------------------------------------------

pub fn write_model(model: &SectorModel, w: &mut impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    write_u32(w, VERSION)?;
    write_u8(
        w,
        match model.net.task {
            TaskKind::Single => 0,
            TaskKind::Multi => 1,
        },
    )?;
    write_u32(w, model.labels.len() as u32)?;
    for label in &model.labels {
        write_string(w, label)?;
    }
    write_encoder(w, &model.encoder)?;

    let net = &model.net;
    write_mat(w, &net.forward.w_input)?;
    write_mat(w, &net.forward.w_hidden)?;
    write_vec32(w, &net.forward.bias)?;
    write_mat(w, &net.backward.w_input)?;
    write_mat(w, &net.backward.w_hidden)?;
    write_vec32(w, &net.backward.bias)?;
    write_mat(w, &net.shared.w_embed)?;
    write_vec32(w, &net.shared.b_embed)?;
    write_mat(w, &net.shared.w_out)?;
    write_vec32(w, &net.shared.b_out)?;
    Ok(())
}

pub fn read_model(r: &mut impl Read) -> Result<SectorModel> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a model file (bad magic)"));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(bad(format!("unsupported model version {version}")));
    }
    let task = match read_u8(r)? {
        0 => TaskKind::Single,
        1 => TaskKind::Multi,
        t => return Err(bad(format!("unknown task tag {t}"))),
    };
    let n_labels = read_u32(r)? as usize;
    if n_labels > 1 << 24 {
        return Err(bad("unreasonable label count"));
    }
    let mut labels = Vec::with_capacity(n_labels);
    for _ in 0..n_labels {
        labels.push(read_string(r)?);
    }
    let encoder = read_encoder(r)?;

    let fw_input = read_mat(r)?;
    let fw_hidden = read_mat(r)?;
    let fw_bias = read_vec32(r)?;
    let bw_input = read_mat(r)?;
    let bw_hidden = read_mat(r)?;
    let bw_bias = read_vec32(r)?;
    let w_embed = read_mat(r)?;
    let b_embed = read_vec32(r)?;
    let w_out = read_mat(r)?;
    let b_out = read_vec32(r)?;

    // Shape validation before assembling the network.
    let hidden = fw_hidden.cols;
    let input_dim = fw_input.cols;
    let embedding = w_embed.rows;
    let check = |ok: bool, what: &str| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(bad(format!("inconsistent tensor shapes: {what}")))
        }
    };
    check(fw_input.rows == GATES * hidden, "forward input weights")?;
    check(fw_hidden.rows == GATES * hidden, "forward recurrent weights")?;
    check(fw_bias.len() == GATES * hidden, "forward bias")?;
    check(bw_input.rows == GATES * hidden && bw_input.cols == input_dim, "backward input weights")?;
    check(bw_hidden.rows == GATES * hidden && bw_hidden.cols == hidden, "backward recurrent weights")?;
    check(bw_bias.len() == GATES * hidden, "backward bias")?;
    check(w_embed.cols == hidden, "bottleneck weights")?;
    check(b_embed.len() == embedding, "bottleneck bias")?;
    check(w_out.rows == labels.len() && w_out.cols == embedding, "output weights")?;
    check(b_out.len() == labels.len(), "output bias")?;
    check(encoder.dim() == input_dim, "encoder dimension vs input weights")?;

    let net = Network {
        forward: LstmParams {
            w_input: fw_input,
            w_hidden: fw_hidden,
            bias: fw_bias,
            hidden,
            input_dim,
        },
        backward: LstmParams {
            w_input: bw_input,
            w_hidden: bw_hidden,
            bias: bw_bias,
            hidden,
            input_dim,
        },
        shared: SharedParams {
            w_embed,
            b_embed,
            w_out,
            b_out,
        },
        task,
    };
    Ok(SectorModel {
        net,
        labels,
        encoder,
    })
}

pub fn save_model(model: &SectorModel, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    let mut writer = BufWriter::new(file);
    write_model(model, &mut writer)?;
    writer.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SectorModel> {
    let file = std::fs::File::open(path.as_ref())?;
    read_model(&mut BufReader::new(file))
}

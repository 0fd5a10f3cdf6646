//! TF-IDF recomputed from raw counts, for comparison with the fitted model.

#![allow(dead_code)]

use std::collections::BTreeSet;

use kanhope::features::{fit_tfidf, TfidfModel};
use kanhope::Error;

/// Vocabulary, idf and dense normalized rows computed directly from counts.
pub struct Naive {
    pub vocab: Vec<String>,
    pub idf: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

pub fn grams(doc: &[String], lo: usize, hi: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in lo..=hi {
        let mut start = 0;
        while start + n <= doc.len() {
            let mut g = doc[start].clone();
            for t in &doc[start + 1..start + n] {
                g.push(' ');
                g.push_str(t);
            }
            out.push(g);
            start += 1;
        }
    }
    out
}

pub fn naive(docs: &[Vec<String>], lo: usize, hi: usize, min_df: usize) -> Option<Naive> {
    let per_doc: Vec<Vec<String>> = docs.iter().map(|d| grams(d, lo, hi)).collect();
    let all: BTreeSet<&String> = per_doc.iter().flatten().collect();
    let mut vocab = Vec::new();
    let mut idf = Vec::new();
    let n = docs.len() as f64;
    for g in all {
        let df = per_doc.iter().filter(|gs| gs.contains(g)).count();
        if df >= min_df {
            vocab.push(g.clone());
            idf.push(((1.0 + n) / (1.0 + df as f64)).ln() + 1.0);
        }
    }
    if vocab.is_empty() {
        return None;
    }
    let rows = per_doc
        .iter()
        .map(|gs| {
            let mut row: Vec<f64> = vocab
                .iter()
                .zip(&idf)
                .map(|(v, w)| gs.iter().filter(|g| *g == v).count() as f64 * w)
                .collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
            }
            row
        })
        .collect();
    Some(Naive { vocab, idf, rows })
}

pub fn check(docs: &[Vec<String>], lo: usize, hi: usize, min_df: usize) -> std::result::Result<(), String> {
    let fitted = fit_tfidf(docs, (lo, hi), min_df);
    let expected = naive(docs, lo, hi, min_df);
    let (model, want): (TfidfModel, Naive) = match (fitted, expected) {
        (Ok(m), Some(w)) => (m, w),
        (Err(Error::EmptyVocabulary { .. }), None) => return Ok(()),
        (got, want) => return Err(format!("{docs:?}: fit {got:?} vs naive vocab {:?}", want.map(|w| w.vocab))),
    };
    if model.vocabulary() != want.vocab.as_slice() {
        return Err(format!("{docs:?}: vocab {:?} vs {:?}", model.vocabulary(), want.vocab));
    }
    for (a, b) in model.idf().iter().zip(&want.idf) {
        if (a - b).abs() > 1e-12 {
            return Err(format!("{docs:?}: idf {a} vs {b}"));
        }
    }
    for (doc, row) in docs.iter().zip(&want.rows) {
        let v = model.transform(doc);
        let dense = v.to_dense(model.vocab_size());
        for (a, b) in dense.iter().zip(row) {
            if (a - b).abs() > 1e-12 {
                return Err(format!("{docs:?}: weight {a} vs {b}"));
            }
        }
        let norm = v.l2_norm();
        if !v.is_empty() && (norm - 1.0).abs() > 1e-12 {
            return Err(format!("{docs:?}: norm {norm}"));
        }
    }
    Ok(())
}

pub fn sequences(max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![vec![]];
    let mut frontier: Vec<Vec<String>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for t in ["a", "b", "c"] {
                let mut s = s.clone();
                s.push(t.to_string());
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Every multiset corpus (documents in non-decreasing index order) of
/// `1..=max_docs` documents drawn from `seqs`, passed to `visit`.
pub fn for_each_corpus(seqs: &[Vec<String>], max_docs: usize, visit: &mut impl FnMut(&[Vec<String>])) {
    fn go(seqs: &[Vec<String>], from: usize, left: usize, cur: &mut Vec<Vec<String>>, visit: &mut impl FnMut(&[Vec<String>])) {
        for i in from..seqs.len() {
            cur.push(seqs[i].clone());
            visit(cur);
            if left > 1 {
                go(seqs, i, left - 1, cur, visit);
            }
            cur.pop();
        }
    }
    go(seqs, 0, max_docs, &mut Vec::new(), visit);
}

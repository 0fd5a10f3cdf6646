//! TF-IDF against a naive recount: every multiset corpus of up to 3 documents
//! of up to 4 tokens over {a, b, c}, plus random corpora up to 5 × 5.

#[path = "oracles/tfidf.rs"]
mod oracle;

use std::collections::BTreeMap;

use kanhope::features::fit_tfidf;
use oracle::{check, for_each_corpus, sequences};
use proptest::prelude::*;

#[test]
fn matches_recount_on_all_small_corpora() {
    let seqs = sequences(4);
    assert_eq!(seqs.len(), 121);
    let settings = [(1, 5, 1), (2, 3, 1), (1, 2, 2)];
    let mut corpora = 0usize;
    for_each_corpus(&seqs, 3, &mut |docs| {
        for &(lo, hi, min_df) in &settings {
            check(docs, lo, hi, min_df).unwrap();
        }
        corpora += 1;
    });
    assert_eq!(corpora, 121 + 7381 + 302_621);
}

#[test]
fn rows_of_fitted_corpus_have_unit_norm() {
    let docs: Vec<Vec<String>> = ["a b a", "c", "b c c a"]
        .iter()
        .map(|d| d.split(' ').map(String::from).collect())
        .collect();
    let model = fit_tfidf(&docs, (1, 5), 1).unwrap();
    for d in &docs {
        assert!((model.transform(d).l2_norm() - 1.0).abs() < 1e-12);
    }
    // a document made only of unseen grams maps to the zero vector
    assert!(model.transform(&["z".to_string()]).is_empty());
    let counts: BTreeMap<&str, u32> = model
        .vocabulary()
        .iter()
        .map(String::as_str)
        .zip(model.doc_freq().iter().copied())
        .collect();
    assert_eq!(counts["a"], 2);
    assert_eq!(counts["c"], 2);
    assert_eq!(counts["b c c a"], 1);
}

fn corpus() -> impl Strategy<Value = Vec<Vec<String>>> {
    let token = prop::sample::select(vec!["a", "b", "c"]).prop_map(String::from);
    prop::collection::vec(prop::collection::vec(token, 0..=5), 1..=5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20_000))]

    #[test]
    fn matches_recount_on_random_corpora(docs in corpus(), lo in 1usize..=5, extra in 0usize..=4, min_df in 1usize..=3) {
        let hi = (lo + extra).min(5);
        prop_assert!(check(&docs, lo, hi, min_df).is_ok(), "{:?}", check(&docs, lo, hi, min_df));
    }
}

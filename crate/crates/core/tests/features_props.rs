use kanhope::features::{fit_tfidf, ngrams, tokenize};
use proptest::prelude::*;

fn corpus() -> impl Strategy<Value = Vec<Vec<String>>> {
    let token = prop::sample::select(vec!["a", "b", "c", "d", "ನಮ್ಮ", "desh"]).prop_map(String::from);
    prop::collection::vec(prop::collection::vec(token, 1..8), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn unigram_weights_ignore_token_order(docs in corpus(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let model = fit_tfidf(&docs, (1, 1), 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for doc in &docs {
            let mut shuffled = doc.clone();
            shuffled.shuffle(&mut rng);
            prop_assert_eq!(model.transform(doc), model.transform(&shuffled));
        }
    }

    #[test]
    fn fitted_rows_are_unit_and_in_range(docs in corpus(), hi in 1usize..=5) {
        let model = fit_tfidf(&docs, (1, hi), 1).unwrap();
        let v = model.vocab_size() as u32;
        for doc in &docs {
            let row = model.transform(doc);
            prop_assert!(row.entries().iter().all(|&(j, w)| j < v && w > 0.0 && w <= 1.0));
            prop_assert!((row.l2_norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn features_in_every_document_have_minimum_idf(docs in corpus()) {
        let model = fit_tfidf(&docs, (1, 2), 1).unwrap();
        let min = model.idf().iter().copied().fold(f64::INFINITY, f64::min);
        for (df, idf) in model.doc_freq().iter().zip(model.idf()) {
            if *df as usize == docs.len() {
                prop_assert_eq!(*idf, min);
                prop_assert_eq!(*idf, 1.0);
            }
        }
    }
}

#[test]
fn ngram_counts_follow_window_arithmetic() {
    let toks = tokenize("Namma desh support beku guru");
    assert_eq!(toks.len(), 5);
    let grams = ngrams(&toks, 1, 5);
    assert_eq!(grams.len(), 5 + 4 + 3 + 2 + 1);
    assert_eq!(grams.last().unwrap(), "namma desh support beku guru");
}

use kanhope::classifiers::*;
use kanhope::sparse::SparseVector;
use proptest::prelude::*;

const DIM: usize = 6;

fn training_set() -> impl Strategy<Value = (Vec<SparseVector>, Vec<usize>)> {
    let value = prop::sample::select(vec![0.0, 0.0, 0.5, 1.0, 2.0]);
    let row = prop::collection::vec(value, DIM).prop_map(|d| SparseVector::from_dense(&d).unwrap());
    prop::collection::vec((row, 0usize..2), 4..24)
        .prop_filter("both classes", |rows| {
            rows.iter().any(|r| r.1 == 0) && rows.iter().any(|r| r.1 == 1)
        })
        .prop_map(|rows| rows.into_iter().unzip())
}

fn all_models(x: &[SparseVector], y: &[usize]) -> Vec<ClassifierModel> {
    let lr = LogRegConfig {
        c: 1.0,
        max_iter: 2_000,
        ..Default::default()
    };
    let forest = ForestConfig {
        n_trees: 7,
        seed: 11,
        ..Default::default()
    };
    vec![
        ClassifierModel::Lr(fit_logreg(x, y, DIM, &lr).unwrap()),
        ClassifierModel::Nb(fit_nb(x, y, DIM, 1.0).unwrap()),
        ClassifierModel::Knn(fit_knn(x, y, DIM, 3, 2.0).unwrap()),
        ClassifierModel::Tree(fit_tree(x, y, DIM, &TreeConfig::default()).unwrap()),
        ClassifierModel::Forest(fit_forest(x, y, DIM, &forest).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn probabilities_are_distributions_and_agree_with_predict((x, y) in training_set()) {
        for model in all_models(&x, &y) {
            let proba = model.predict_proba(&x).unwrap();
            let pred = model.predict(&x).unwrap();
            for (row, &p) in proba.iter().zip(&pred) {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{} {:?}", model.kind(), row);
                prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
                prop_assert_eq!(argmax(row), p);
            }
        }
    }

    #[test]
    fn fits_are_reproducible_and_survive_json((x, y) in training_set()) {
        let a = all_models(&x, &y);
        let b = all_models(&x, &y);
        prop_assert_eq!(&a, &b);
        for m in a {
            let back = ClassifierModel::from_json(&m.to_json().unwrap()).unwrap();
            prop_assert_eq!(back.predict_proba(&x).unwrap(), m.predict_proba(&x).unwrap());
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn logistic_objective_never_increases((x, y) in training_set(), c in 0.05f64..10.0) {
        let cfg = LogRegConfig { c, max_iter: 500, ..Default::default() };
        let (_, trace) = fit_logreg_traced(&x, &y, DIM, &cfg).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn knn_over_whole_training_set_predicts_majority((x, y) in training_set(), q in prop::collection::vec(0.0f64..2.0, DIM)) {
        let knn = fit_knn(&x, &y, DIM, x.len(), 2.0).unwrap();
        let ones = y.iter().filter(|&&c| c == 1).count();
        // ties go to the lower class index
        let majority = usize::from(2 * ones > y.len());
        let query = SparseVector::from_dense(&q).unwrap();
        prop_assert_eq!(knn.predict(&[query]).unwrap(), vec![majority]);
    }

    #[test]
    fn pure_leaves_return_the_training_label((x, y) in training_set()) {
        let tree = fit_tree(&x, &y, DIM, &TreeConfig::default()).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            let counts = tree.leaf(xi);
            let pure = counts.iter().filter(|&&c| c > 0).count() == 1;
            if pure {
                prop_assert_eq!(tree.predict(std::slice::from_ref(xi)).unwrap(), vec![yi]);
            }
        }
    }
}

/// Posterior from the product form of Bayes' rule, without logarithms.
fn bayes(x: &[[u32; 4]], y: &[usize], q: &[u32; 4], alpha: f64) -> [f64; 2] {
    let mut joint = [0.0; 2];
    for (c, j) in joint.iter_mut().enumerate() {
        let docs: Vec<&[u32; 4]> = x.iter().zip(y).filter(|(_, &l)| l == c).map(|(d, _)| d).collect();
        let prior = docs.len() as f64 / x.len() as f64;
        let mut counts = [0.0; 4];
        for d in &docs {
            for f in 0..4 {
                counts[f] += d[f] as f64;
            }
        }
        let total: f64 = counts.iter().sum::<f64>() + 4.0 * alpha;
        let mut like = 1.0;
        for f in 0..4 {
            like *= ((counts[f] + alpha) / total).powi(q[f] as i32);
        }
        *j = prior * like;
    }
    let z = joint[0] + joint[1];
    [joint[0] / z, joint[1] / z]
}

fn sv(d: &[u32; 4]) -> SparseVector {
    SparseVector::from_dense(&d.map(f64::from)).unwrap()
}

#[test]
fn naive_bayes_matches_product_form_on_all_small_inputs() {
    let binary: Vec<[u32; 4]> = (0..16u32).map(|b| [b & 1, (b >> 1) & 1, (b >> 2) & 1, (b >> 3) & 1]).collect();
    let queries: Vec<[u32; 4]> = (0..81u32)
        .map(|b| [b % 3, (b / 3) % 3, (b / 9) % 3, (b / 27) % 3])
        .collect();
    let mut checked = 0usize;
    for n in 2..=3usize {
        for docs_code in 0..16usize.pow(n as u32) {
            let x: Vec<[u32; 4]> = (0..n).map(|i| binary[(docs_code >> (4 * i)) & 15]).collect();
            for labels_code in 0..(1usize << n) {
                let y: Vec<usize> = (0..n).map(|i| (labels_code >> i) & 1).collect();
                if y.iter().all(|&c| c == y[0]) {
                    continue;
                }
                let xs: Vec<SparseVector> = x.iter().map(sv).collect();
                for alpha in [1.0, 0.5] {
                    let model = fit_nb(&xs, &y, 4, alpha).unwrap();
                    for q in &queries {
                        let got = model.predict_proba_one(&sv(q)).unwrap();
                        let want = bayes(&x, &y, q, alpha);
                        assert!(
                            (got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12,
                            "{x:?} {y:?} {q:?}: {got:?} vs {want:?}"
                        );
                        checked += 1;
                    }
                }
            }
        }
    }
    assert_eq!(checked, (256 * 2 + 4096 * 6) * 2 * 81);
}

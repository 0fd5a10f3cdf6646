use kanhope::agreement::{coincidence_matrix, disagreements, krippendorff_alpha, AnnotationRecord};
use kanhope::corpus::Label;
use proptest::prelude::*;

/// Up to 4 annotators over up to 6 units; each cell may be missing.
fn table() -> impl Strategy<Value = Vec<AnnotationRecord>> {
    let cell = prop::option::weighted(0.8, 0usize..3);
    prop::collection::vec(prop::collection::vec(cell, 4), 1..=6).prop_map(|units| {
        let mut out = Vec::new();
        for (u, row) in units.iter().enumerate() {
            for (a, cell) in row.iter().enumerate() {
                if let Some(l) = cell {
                    out.push(AnnotationRecord::new(format!("u{u}"), format!("a{a}"), Label::ALL[*l]));
                }
            }
        }
        out
    })
}

fn close(a: &kanhope::Result<f64>, b: &kanhope::Result<f64>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => (x - y).abs() < 1e-12,
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn relabelling_leaves_alpha_unchanged(records in table(), perm in Just([0usize, 1, 2]).prop_shuffle()) {
        let relabelled: Vec<AnnotationRecord> = records
            .iter()
            .map(|r| {
                let i = Label::ALL.iter().position(|&l| l == r.label).unwrap();
                AnnotationRecord { label: Label::ALL[perm[i]], ..r.clone() }
            })
            .collect();
        let (a, b) = (krippendorff_alpha(&records), krippendorff_alpha(&relabelled));
        prop_assert!(close(&a, &b), "{a:?} vs {b:?}");
    }

    #[test]
    fn lone_annotation_leaves_alpha_unchanged(records in table(), l in 0usize..3) {
        let mut more = records.clone();
        more.push(AnnotationRecord::new("lonely", "a0", Label::ALL[l]));
        let (a, b) = (krippendorff_alpha(&records), krippendorff_alpha(&more));
        prop_assert!(close(&a, &b), "{a:?} vs {b:?}");
    }

    /// Observed disagreement is a per-value average and survives duplication.
    /// Expected disagreement carries the small-sample factor n/(n-1), so
    /// alpha moves by exactly 1 - a' = (1 - a)(2n - 1) / (2(n - 1)).
    #[test]
    fn duplicating_units_keeps_observed_disagreement(records in table()) {
        let mut twice = records.clone();
        twice.extend(records.iter().map(|r| AnnotationRecord {
            unit_id: format!("{}'", r.unit_id),
            ..r.clone()
        }));
        let (m1, m2) = (coincidence_matrix(&records).unwrap(), coincidence_matrix(&twice).unwrap());
        let (o1, _) = disagreements(&m1);
        let (o2, _) = disagreements(&m2);
        prop_assert!((o1 - o2).abs() < 1e-12);
        if let (Ok(a1), Ok(a2)) = (krippendorff_alpha(&records), krippendorff_alpha(&twice)) {
            let n = m1.n;
            let want = 1.0 - (1.0 - a1) * (2.0 * n - 1.0) / (2.0 * (n - 1.0));
            prop_assert!((a2 - want).abs() < 1e-12, "{a2} vs {want}");
            prop_assert_eq!(a1 == 1.0, a2 == 1.0);
        } else {
            prop_assert!(krippendorff_alpha(&records).is_err() && krippendorff_alpha(&twice).is_err());
        }
    }

    #[test]
    fn alpha_is_one_exactly_without_observed_disagreement(records in table()) {
        let (d_o, d_e) = disagreements(&coincidence_matrix(&records).unwrap());
        if let Ok(alpha) = krippendorff_alpha(&records) {
            prop_assert!(d_e > 0.0);
            prop_assert_eq!(alpha == 1.0, d_o == 0.0);
        }
    }
}

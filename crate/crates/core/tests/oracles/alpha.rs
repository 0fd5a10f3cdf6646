//! Krippendorff's alpha from its pair-counting definition in exact rational
//! arithmetic, over annotation tables of up to 3 annotators × 4 units × 3
//! labels (each cell empty or labelled).

#![allow(dead_code)]

use kanhope::agreement::{krippendorff_alpha, AnnotationRecord};
use kanhope::corpus::Label;
use num_rational::Ratio;

pub const ANNOTATORS: usize = 3;
pub const UNITS: usize = 4;
pub const CELLS: usize = ANNOTATORS * UNITS;

/// Alpha from its definition: for every unit with `m >= 2` values, each
/// ordered pair of values from different annotators that disagree adds
/// `1/(m-1)`; the expected term counts disagreeing ordered pairs among all
/// pairable values. `None` when alpha is undefined.
pub fn brute_force(table: &[Option<u8>; CELLS]) -> Option<Ratio<i64>> {
    let mut pooled: Vec<u8> = Vec::new();
    let mut observed = Ratio::from_integer(0);
    for u in 0..UNITS {
        let values: Vec<u8> = (0..ANNOTATORS).filter_map(|a| table[a * UNITS + u]).collect();
        let m = values.len() as i64;
        if m < 2 {
            continue;
        }
        let mut disagree = 0;
        for (i, a) in values.iter().enumerate() {
            for (j, b) in values.iter().enumerate() {
                if i != j && a != b {
                    disagree += 1;
                }
            }
        }
        observed += Ratio::new(disagree, m - 1);
        pooled.extend(values);
    }
    let n = pooled.len() as i64;
    if n == 0 {
        return None;
    }
    let mut expected = 0i64;
    for (i, a) in pooled.iter().enumerate() {
        for (j, b) in pooled.iter().enumerate() {
            if i != j && a != b {
                expected += 1;
            }
        }
    }
    if expected == 0 {
        return None;
    }
    Some(Ratio::from_integer(1) - observed * (n - 1) / expected)
}

pub fn records(table: &[Option<u8>; CELLS], templates: &[(String, String)]) -> Vec<AnnotationRecord> {
    table
        .iter()
        .zip(templates)
        .filter_map(|(cell, (unit, annotator))| {
            cell.map(|l| AnnotationRecord {
                unit_id: unit.clone(),
                annotator_id: annotator.clone(),
                label: Label::ALL[l as usize],
            })
        })
        .collect()
}

/// Labels are interchangeable under the nominal metric, so only tables whose
/// labels first appear in the order 0, 1, 2 are enumerated.
pub fn canonical(table: &[Option<u8>; CELLS]) -> bool {
    let mut next = 0;
    for &l in table.iter().flatten() {
        if l > next {
            return false;
        }
        if l == next {
            next += 1;
        }
    }
    true
}

/// Table number `code` in base 4: digit 0 is an empty cell, digit `l` is
/// label `l - 1`.
pub fn table(code: u32) -> [Option<u8>; CELLS] {
    let mut table = [None; CELLS];
    let mut c = code;
    for cell in table.iter_mut() {
        *cell = match c % 4 {
            0 => None,
            l => Some(l as u8 - 1),
        };
        c /= 4;
    }
    table
}

pub fn templates() -> Vec<(String, String)> {
    (0..CELLS)
        .map(|c| (format!("u{}", c % UNITS), format!("a{}", c / UNITS)))
        .collect()
}

/// Checks table `code` against the implementation. `Ok(true)` when alpha is
/// defined, `Ok(false)` when both sides agree it is undefined.
pub fn check(code: u32, templates: &[(String, String)]) -> Result<bool, String> {
    let table = table(code);
    let got = krippendorff_alpha(&records(&table, templates));
    match brute_force(&table) {
        Some(exact) => {
            let exact = *exact.numer() as f64 / *exact.denom() as f64;
            match got {
                Ok(got) if (got - exact).abs() <= 1e-12 => Ok(true),
                other => Err(format!("table {table:?}: {other:?} vs {exact}")),
            }
        }
        None => match got {
            Err(kanhope::Error::UndefinedAlpha(_)) => Ok(false),
            other => Err(format!("table {table:?}: {other:?} vs undefined")),
        },
    }
}

use std::io::Write;

use rayon::prelude::*;
use tnm_core::castling::castle_step;
use tnm_core::{big_r, classify_closed_form, classify_recursive, delta, g_max, git_dimension};
use tnm_core::{Datum, StabilityClass};

use crate::args::Check;

/// Largest grid the scanner accepts.
pub const MAX_GRID: u128 = 10_000_000;

pub const HEADER: [&str; 9] = [
    "dims",
    "m",
    "R",
    "Delta",
    "g_max",
    "class_closed_form",
    "class_recursive",
    "check",
    "agree",
];

/// Number of rows `enumerate` would produce, saturating.
pub fn grid_size(max_k: u64, max_dim: u64, max_m: u64) -> u128 {
    let n = u128::from(max_dim.saturating_sub(1));
    let mut total: u128 = 1;
    // C(n + k − 1, k) multisets of size k from the n values 2..=max_dim
    let mut c: u128 = 1;
    for k in 1..=u128::from(max_k) {
        c = match c.checked_mul(n + k - 1) {
            Some(v) => v / k,
            None => return u128::MAX,
        };
        total = total.saturating_add(c);
        if total > MAX_GRID || c == 0 {
            break;
        }
    }
    total.saturating_mul(u128::from(max_m))
}

/// Sorted dims with entries in `2..=max_dim` and at most `max_k` factors,
/// preceded by `(1)`; each for `m = 1..=max_m`.
pub fn enumerate(max_k: u64, max_dim: u64, max_m: u64) -> Vec<Datum> {
    fn rec(prefix: &mut Vec<u64>, max_k: usize, max_dim: u64, out: &mut Vec<Vec<u64>>) {
        if !prefix.is_empty() {
            out.push(prefix.clone());
        }
        if prefix.len() == max_k {
            return;
        }
        let start = prefix.last().copied().unwrap_or(2);
        for d in start..=max_dim {
            prefix.push(d);
            rec(prefix, max_k, max_dim, out);
            prefix.pop();
        }
    }
    let mut shapes = vec![vec![1]];
    rec(&mut Vec::new(), max_k as usize, max_dim, &mut shapes);
    shapes
        .into_iter()
        .flat_map(|dims| {
            (1..=max_m).map(move |m| Datum::new(dims.clone(), m).expect("valid grid datum"))
        })
        .collect()
}

fn rank(c: StabilityClass) -> u8 {
    match c {
        StabilityClass::Unstable => 0,
        StabilityClass::PolystableNotStable => 1,
        StabilityClass::Stable => 2,
    }
}

pub struct Row {
    pub fields: [String; 9],
    pub agree: bool,
}

fn run_check(d: &Datum, check: Check, closed: StabilityClass, recursive: StabilityClass) -> bool {
    match check {
        Check::Equivalence => closed == recursive,
        Check::Monotone => {
            let next = d.with_m(d.m() + 1).expect("m + 1 is positive");
            rank(closed) <= rank(classify_closed_form(&next))
                && rank(recursive) <= rank(classify_recursive(&next))
        }
        Check::Castling => match castle_step(d) {
            Err(_) => true,
            Ok(c) => {
                classify_closed_form(&c) == closed
                    && classify_recursive(&c) == recursive
                    && big_r(&c) == big_r(d)
                    && delta(&c) == delta(d)
                    && g_max(&c) == g_max(d)
                    && git_dimension(&c) == git_dimension(d)
            }
        },
    }
}

pub fn evaluate(d: &Datum, check: Check) -> Row {
    let closed = classify_closed_form(d);
    let recursive = classify_recursive(d);
    let agree = run_check(d, check, closed, recursive);
    let dims = d
        .dims()
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join("x");
    Row {
        fields: [
            dims,
            d.m().to_string(),
            big_r(d).to_string(),
            delta(d).to_string(),
            g_max(d).to_string(),
            closed.as_str().to_string(),
            recursive.as_str().to_string(),
            check.as_str().to_string(),
            agree.to_string(),
        ],
        agree,
    }
}

/// Evaluates every datum in parallel and writes rows in enumeration order.
/// Returns the number of failed checks.
pub fn scan<W: Write>(data: &[Datum], check: Check, out: W) -> csv::Result<usize> {
    let rows: Vec<Row> = data.par_iter().map(|d| evaluate(d, check)).collect();
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(HEADER)?;
    let mut failures = 0;
    for row in &rows {
        writer.write_record(&row.fields)?;
        if !row.agree {
            failures += 1;
        }
    }
    writer.flush()?;
    Ok(failures)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_size_matches_enumeration() {
        for (k, d, m) in [
            (1, 1, 1),
            (1, 5, 2),
            (3, 6, 4),
            (4, 8, 6),
            (2, 1, 3),
            (5, 3, 1),
        ] {
            assert_eq!(
                grid_size(k, d, m),
                enumerate(k, d, m).len() as u128,
                "{k} {d} {m}"
            );
        }
    }

    #[test]
    fn grid_size_saturates() {
        assert!(grid_size(16, u64::MAX, u64::MAX) > MAX_GRID);
        assert!(grid_size(10, 100, 10) > MAX_GRID);
    }

    #[test]
    fn enumeration_is_normalized_and_ordered() {
        let data = enumerate(2, 3, 2);
        let shapes: Vec<(Vec<u64>, u64)> =
            data.iter().map(|d| (d.dims().to_vec(), d.m())).collect();
        assert_eq!(
            shapes,
            vec![
                (vec![1], 1),
                (vec![1], 2),
                (vec![2], 1),
                (vec![2], 2),
                (vec![2, 2], 1),
                (vec![2, 2], 2),
                (vec![2, 3], 1),
                (vec![2, 3], 2),
                (vec![3], 1),
                (vec![3], 2),
                (vec![3, 3], 1),
                (vec![3, 3], 2),
            ]
        );
        assert!(data.iter().all(Datum::is_normalized));
    }
}

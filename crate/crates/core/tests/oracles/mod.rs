//! Independent reference implementations used to check the engine.
//!
//! None of these call into the crate's algorithms; they are deliberately
//! naive so that agreement is meaningful.

#![allow(dead_code)]

/// Brute-force extractor: enumerates every (first, last) index pair and keeps
/// those consistent with the matching rules, stated declaratively.
///
/// A pair `(i, j)` is emitted iff
/// - `elem[i]` is the start and `elem[j]` the end, `i < j`;
/// - no end element occurs strictly between them;
/// - every gap between consecutive interactions in `i..=j` is within `max_gap`;
/// - with restart: no start element occurs strictly between them;
/// - without restart: position `i` opens a candidate, i.e. no earlier opening
///   position is still live at `i` (not closed by an end, not broken by a gap).
pub fn extract_pairs(
    elems: &[&str],
    times: &[i64],
    start: &str,
    end: &str,
    restart: bool,
    max_gap: Option<i64>,
) -> Vec<(usize, usize)> {
    let n = elems.len();
    let gaps_ok = |a: usize, b: usize| -> bool {
        match max_gap {
            None => true,
            Some(g) => (a + 1..=b).all(|k| times[k] - times[k - 1] <= g),
        }
    };
    let no_end_between = |a: usize, b: usize| (a + 1..b).all(|k| elems[k] != end);

    // opens[i]: a candidate is opened at i
    let mut opens = vec![false; n];
    for i in 0..n {
        if elems[i] != start {
            continue;
        }
        opens[i] = if restart {
            true
        } else {
            // some earlier opening s is still live when i is reached
            let shadowed = (0..i).any(|s| opens[s] && no_end_between(s, i) && gaps_ok(s, i));
            !shadowed
        };
    }

    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let ok = opens[i]
                && elems[j] == end
                && no_end_between(i, j)
                && gaps_ok(i, j)
                && (!restart || (i + 1..j).all(|k| elems[k] != start));
            if ok {
                out.push((i, j));
            }
        }
    }
    out
}

/// Off-road glance time inside `[lo, hi)` by counting covered milliseconds.
pub fn grid_offroad_total(glances: &[(i64, i64, bool)], lo: i64, hi: i64) -> i64 {
    (lo..hi)
        .filter(|&t| {
            glances
                .iter()
                .any(|&(s, d, offroad)| offroad && s <= t && t < s + d)
        })
        .count() as i64
}

/// Off-road glances that cover at least one millisecond of `[lo, hi)`,
/// with the number of milliseconds covered.
pub fn grid_offroad_glances(glances: &[(i64, i64, bool)], lo: i64, hi: i64) -> Vec<i64> {
    glances
        .iter()
        .filter(|g| g.2)
        .map(|&(s, d, _)| (lo..hi).filter(|&t| s <= t && t < s + d).count() as i64)
        .filter(|&covered| covered > 0)
        .collect()
}

/// Type-7 sample quantile, computed from 1-based ranks.
pub fn reference_quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n == 1 {
        return v[0];
    }
    let rank = 1.0 + p * (n as f64 - 1.0);
    let k = rank as usize; // 1-based lower rank
    let frac = rank - k as f64;
    if k >= n {
        return v[n - 1];
    }
    (1.0 - frac) * v[k - 1] + frac * v[k]
}

pub struct ReferenceBox {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub outliers: Vec<f64>,
    pub whisker_low: f64,
    pub whisker_high: f64,
}

pub fn reference_box(values: &[f64]) -> ReferenceBox {
    let q1 = reference_quantile(values, 0.25);
    let median = reference_quantile(values, 0.5);
    let q3 = reference_quantile(values, 0.75);
    let iqr = q3 - q1;
    let lo = q1 - 1.5 * iqr;
    let hi = q3 + 1.5 * iqr;
    let mut outliers: Vec<f64> = values.iter().copied().filter(|&v| v < lo || v > hi).collect();
    outliers.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut whisker_low = q1;
    let mut whisker_high = q3;
    for &v in values {
        if v >= lo && v < whisker_low {
            whisker_low = v;
        }
        if v <= hi && v > whisker_high {
            whisker_high = v;
        }
    }
    ReferenceBox {
        q1,
        median,
        q3,
        outliers,
        whisker_low,
        whisker_high,
    }
}

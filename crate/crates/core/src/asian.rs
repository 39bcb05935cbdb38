//! Representative-average approximation on the recombining fee-adjusted asset tree.
//!
//! With `Z_i = e^{-alpha_bar i} S_i / S_0` and `y_i = sum_{h=1..i} 1/Z_h`, the
//! account satisfies `W_i = P max(Z_i (1 - y_i / N), 0)` exactly, so the
//! contract value is a function of `(i, Z_i, y_i)`. `Z` recombines; `y` does
//! not. Each node `(i, j)` (with `j` up-moves) keeps `j (i - j) + 1`
//! representative values of `y`, one per path in a chain that walks from the
//! highest path through the node to the lowest by pushing one peak down at a
//! time. Backward induction interpolates linearly in `y` between neighbouring
//! representatives.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::contract::SurrenderSchedule;
use crate::model::Model;

/// Which end of the node's path range the representative chain starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// Start at `j` ups then `i - j` downs; repeatedly lower the highest peak.
    #[default]
    HighestFirst,
    /// Start at `i - j` downs then `j` ups; repeatedly raise the lowest trough.
    LowestFirst,
}

/// Sorted representative reciprocal-sums for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeSet {
    pub step: usize,
    pub ups: usize,
    /// Strictly increasing values of `y = sum_{h=1..i} 1/Z_h`.
    pub sums: Vec<f64>,
}

/// `u e^{-alpha_bar}` and `d e^{-alpha_bar}`.
fn z_factors(m: &Model) -> (f64, f64) {
    (m.u * m.keep, m.d * m.keep)
}

/// Reciprocal-sum of the path `moves` (true = up).
fn reciprocal_sum(moves: &[bool], uz: f64, dz: f64) -> f64 {
    let mut z = 1.0;
    let mut y = 0.0;
    for &up in moves {
        z *= if up { uz } else { dz };
        y += 1.0 / z;
    }
    y
}

/// Builds the representative set of node `(i, j)`.
pub fn representative_set(model: &Model, i: usize, j: usize, orientation: Orientation) -> RepresentativeSet {
    assert!(j <= i && i <= model.steps);
    let (uz, dz) = z_factors(model);
    let swaps = j * (i - j);
    let mut sums = Vec::with_capacity(swaps + 1);
    match orientation {
        Orientation::HighestFirst => {
            let mut moves: Vec<bool> = (0..i).map(|h| h < j).collect();
            sums.push(reciprocal_sum(&moves, uz, dz));
            for _ in 0..swaps {
                // peaks: an up-move at step h followed by a down-move; pick the
                // highest, first on ties
                let mut level = 0i64;
                let mut best: Option<(usize, i64)> = None;
                for h in 0..i - 1 {
                    level += if moves[h] { 1 } else { -1 };
                    if moves[h] && !moves[h + 1] && best.map_or(true, |(_, l)| level > l) {
                        best = Some((h, level));
                    }
                }
                let (h, _) = best.expect("unsorted path has a peak");
                moves.swap(h, h + 1);
                sums.push(reciprocal_sum(&moves, uz, dz));
            }
        }
        Orientation::LowestFirst => {
            let mut moves: Vec<bool> = (0..i).map(|h| h >= i - j).collect();
            sums.push(reciprocal_sum(&moves, uz, dz));
            for _ in 0..swaps {
                let mut level = 0i64;
                let mut best: Option<(usize, i64)> = None;
                for h in 0..i - 1 {
                    level += if moves[h] { 1 } else { -1 };
                    if !moves[h] && moves[h + 1] && best.map_or(true, |(_, l)| level < l) {
                        best = Some((h, level));
                    }
                }
                let (h, _) = best.expect("unsorted path has a trough");
                moves.swap(h, h + 1);
                sums.push(reciprocal_sum(&moves, uz, dz));
            }
            sums.reverse();
        }
    }
    RepresentativeSet { step: i, ups: j, sums }
}

/// Representative sets for every node of level `i`, indexed by up-count.
pub fn build_level(model: &Model, i: usize, orientation: Orientation) -> Vec<RepresentativeSet> {
    (0..=i).into_par_iter().map(|j| representative_set(model, i, j, orientation)).collect()
}

/// Representative sets for the whole tree, `sets[i][j]`.
pub fn build_representative_sets(model: &Model, orientation: Orientation) -> Vec<Vec<RepresentativeSet>> {
    (0..=model.steps).map(|i| build_level(model, i, orientation)).collect()
}

/// Closed form of the lowest reciprocal-sum at `(i, j)`, including the `h = 0` term.
pub fn lowest_sum_closed_form(model: &Model, i: usize, j: usize) -> f64 {
    let (uz, dz) = z_factors(model);
    let head: f64 = (0..=j).map(|h| uz.powi(-(h as i32))).sum();
    let tail: f64 = (1..=i - j).map(|h| dz.powi(-(h as i32))).sum();
    head + uz.powi(-(j as i32)) * tail
}

/// Approximate contract value with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsianValue {
    pub value: f64,
    /// Number of lookups that fell outside their node's representative range.
    pub clamped: usize,
}

/// Linear interpolation of `values` over the sorted abscissae `sums` at `y`.
fn interpolate(sums: &[f64], values: &[f64], y: f64, clamped: &mut usize) -> f64 {
    let last = sums.len() - 1;
    if y <= sums[0] {
        if y < sums[0] - 1e-12 * sums[0].abs().max(1.0) {
            *clamped += 1;
        }
        return values[0];
    }
    if y >= sums[last] {
        if y > sums[last] + 1e-12 * sums[last].abs().max(1.0) {
            *clamped += 1;
        }
        return values[last];
    }
    let hi = sums.partition_point(|&s| s < y);
    if sums[hi] == y {
        return values[hi];
    }
    let lo = hi - 1;
    let t = (y - sums[lo]) / (sums[hi] - sums[lo]);
    values[lo] + t * (values[hi] - values[lo])
}

/// Contract value `V_0` by backward induction over `(i, j, representative)`.
///
/// With a schedule the policyholder may surrender at any step after the first;
/// without one the exercise branch is dropped.
pub fn approx_value(model: &Model, sched: Option<&SurrenderSchedule>, orientation: Orientation) -> AsianValue {
    let n = model.steps;
    let premium = model.premium();
    let nf = n as f64;
    let (uz, dz) = z_factors(model);
    let z = |i: usize, j: usize| uz.powi(j as i32) * dz.powi((i - j) as i32);
    let account = |zv: f64, y: f64| premium * (zv * (1.0 - y / nf)).max(0.0);

    let mut next_sets = build_level(model, n, orientation);
    let mut next_vals: Vec<Vec<f64>> = next_sets
        .iter()
        .map(|set| set.sums.iter().map(|&y| account(z(n, set.ups), y)).collect())
        .collect();
    let mut clamped = 0;

    for i in (0..n).rev() {
        let sets = build_level(model, i, orientation);
        let level: Vec<(Vec<f64>, usize)> = sets
            .par_iter()
            .map(|set| {
                let j = set.ups;
                let zu = z(i + 1, j + 1);
                let zd = z(i + 1, j);
                let zi = z(i, j);
                let mut local_clamped = 0;
                let vals = set
                    .sums
                    .iter()
                    .map(|&y| {
                        let vu = interpolate(&next_sets[j + 1].sums, &next_vals[j + 1], y + 1.0 / zu, &mut local_clamped);
                        let vd = interpolate(&next_sets[j].sums, &next_vals[j], y + 1.0 / zd, &mut local_clamped);
                        let cont = (model.withdrawal + model.p * vu + model.q * vd) * model.disc;
                        match sched {
                            Some(k) if i > 0 => cont.max(account(zi, y) * (1.0 - k.rate(i))),
                            _ => cont,
                        }
                    })
                    .collect();
                (vals, local_clamped)
            })
            .collect();
        clamped += level.iter().map(|(_, c)| c).sum::<usize>();
        next_vals = level.into_iter().map(|(v, _)| v).collect();
        next_sets = sets;
    }
    AsianValue { value: next_vals[0][0], clamped }
}

/// Diagnostic CSV `i, j, set_size, min, max` over the whole tree.
pub fn diagnostics_csv(model: &Model, orientation: Orientation) -> String {
    let mut out = String::from("i,j,set_size,min,max\n");
    for i in 0..=model.steps {
        for set in build_level(model, i, orientation) {
            let _ = writeln!(
                out,
                "{},{},{},{:.12},{:.12}",
                i,
                set.ups,
                set.sums.len(),
                set.sums[0],
                set.sums[set.sums.len() - 1]
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::model;
    use approx::assert_relative_eq;

    fn m() -> Model {
        model(100.0, 0.10, 0.0095, 0.05, 0.2, 1).unwrap()
    }

    #[test]
    fn single_path_node() {
        let m = m();
        let set = representative_set(&m, 1, 1, Orientation::HighestFirst);
        assert_eq!(set.sums.len(), 1);
        let uz = m.u * m.keep;
        assert_relative_eq!(set.sums[0] + 1.0, 1.0 + 1.0 / uz, epsilon = 1e-15);
    }

    #[test]
    fn two_path_node() {
        let m = m();
        let (uz, dz) = (m.u * m.keep, m.d * m.keep);
        let ud = 1.0 / uz + 1.0 / (uz * dz);
        let du = 1.0 / dz + 1.0 / (uz * dz);
        for o in [Orientation::HighestFirst, Orientation::LowestFirst] {
            let set = representative_set(&m, 2, 1, o);
            assert_eq!(set.sums.len(), 2);
            assert_relative_eq!(set.sums[0], ud, epsilon = 1e-14);
            assert_relative_eq!(set.sums[1], du, epsilon = 1e-14);
        }
    }

    #[test]
    fn cardinality_order_and_closed_form() {
        let m = m();
        for o in [Orientation::HighestFirst, Orientation::LowestFirst] {
            for i in 0..=10 {
                for set in build_level(&m, i, o) {
                    let j = set.ups;
                    assert_eq!(set.sums.len(), j * (i - j) + 1);
                    assert!(set.sums.windows(2).all(|w| w[0] < w[1]));
                    assert_relative_eq!(set.sums[0], lowest_sum_closed_form(&m, i, j) - 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn no_clamping_needed() {
        let m = m();
        let v = approx_value(&m, None, Orientation::HighestFirst);
        assert_eq!(v.clamped, 0);
        assert!(v.value > 0.0);
    }

    #[test]
    fn diagnostics_rows() {
        let m = model(100.0, 0.25, 0.01, 0.05, 0.2, 1).unwrap();
        let csv = diagnostics_csv(&m, Orientation::HighestFirst);
        assert_eq!(csv.lines().count(), 1 + (1 + 2 + 3 + 4 + 5));
    }
}

//! Valuation without surrenders.
//!
//! Three routes to the same numbers:
//!
//! * [`policyholder_value`] and [`rider_value`] run the backward recursion on
//!   the non-recombining account tree depth-first, so memory stays `O(N)`.
//! * [`direct_path_value`] enumerates paths grouped by their number of down
//!   moves and sums the positive part of each terminal account value.
//! * [`trigger_distribution`] propagates probability mass forward until the
//!   account first hits zero.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::Measure;
use crate::model::Model;

/// Largest remaining horizon [`direct_path_value`] will enumerate.
pub const ENUMERATION_LIMIT: usize = 30;

/// Geometric sums along the extreme paths from any node.
///
/// The account is non-decreasing in every growth factor, so the all-down path
/// bounds it from below and the all-up path from above. If the floor never
/// binds on the all-down path the terminal value is affine in `x`; if the
/// all-up path ends at zero every path does.
struct Extremes {
    down_pow: Vec<f64>,
    down_sum: Vec<f64>,
    up_pow: Vec<f64>,
    up_sum: Vec<f64>,
    /// `e^{-r_bar z} (e^{r_bar} e^{-alpha_bar})^z = e^{-alpha_bar z}`
    lin_x: Vec<f64>,
    /// `e^{-r_bar z} sum_{j<z} (e^{r_bar} e^{-alpha_bar})^j`
    lin_g: Vec<f64>,
}

impl Extremes {
    fn new(m: &Model) -> Self {
        let n = m.steps;
        let dk = m.d * m.keep;
        let uk = m.u * m.keep;
        let growth = m.keep / m.disc;
        let mut e = Extremes {
            down_pow: Vec::with_capacity(n + 1),
            down_sum: Vec::with_capacity(n + 1),
            up_pow: Vec::with_capacity(n + 1),
            up_sum: Vec::with_capacity(n + 1),
            lin_x: Vec::with_capacity(n + 1),
            lin_g: Vec::with_capacity(n + 1),
        };
        let (mut dp, mut ds, mut up, mut us, mut gp, mut gs) = (1.0, 0.0, 1.0, 0.0, 1.0, 0.0);
        for z in 0..=n {
            e.down_pow.push(dp);
            e.down_sum.push(ds);
            e.up_pow.push(up);
            e.up_sum.push(us);
            e.lin_x.push(m.keep.powi(z as i32));
            e.lin_g.push(m.disc.powi(z as i32) * gs);
            ds += dp;
            dp *= dk;
            us += up;
            up *= uk;
            gs += gp;
            gp *= growth;
        }
        e
    }

    /// Terminal account on the all-down path, without the floor.
    fn all_down(&self, z: usize, x: f64, withdrawal: f64) -> f64 {
        x * self.down_pow[z] - withdrawal * self.down_sum[z]
    }

    fn all_up(&self, z: usize, x: f64, withdrawal: f64) -> f64 {
        x * self.up_pow[z] - withdrawal * self.up_sum[z]
    }
}

/// Contract value `v(i, x)` to the policyholder at step `i` with post-withdrawal
/// account `x`: remaining guaranteed withdrawals plus the terminal account.
pub fn policyholder_value(model: &Model, i: usize, x: f64) -> f64 {
    assert!(i <= model.steps, "step {i} beyond horizon {}", model.steps);
    let ext = Extremes::new(model);
    tree_v(model, &ext, i, x)
}

fn tree_v(m: &Model, ext: &Extremes, i: usize, x: f64) -> f64 {
    let n = m.steps;
    if i == n {
        return x;
    }
    let z = n - i;
    let g = m.withdrawal;
    if x == 0.0 || ext.all_up(z, x, g) <= 0.0 {
        return g * m.annuity[z];
    }
    if ext.all_down(z, x, g) > 0.0 {
        return g * m.annuity[z] + x * ext.lin_x[z] - g * ext.lin_g[z];
    }
    let up = tree_v(m, ext, i + 1, m.w(x * m.u));
    let down = tree_v(m, ext, i + 1, m.w(x * m.d));
    (g + m.p * up + m.q * down) * m.disc
}

/// Plain backward recursion for `v`, no shortcuts. Exponential in `N - i`.
#[cfg(test)]
pub(crate) fn naive_v(m: &Model, i: usize, x: f64) -> f64 {
    if i == m.steps {
        return x;
    }
    let up = naive_v(m, i + 1, m.w(x * m.u));
    let down = naive_v(m, i + 1, m.w(x * m.d));
    (m.withdrawal + m.p * up + m.q * down) * m.disc
}

/// Rider value `u(i, x)` to the insurer: discounted claims less discounted fees.
pub fn rider_value(model: &Model, i: usize, x: f64) -> f64 {
    assert!(i <= model.steps, "step {i} beyond horizon {}", model.steps);
    rider_u(model, i, x)
}

fn rider_u(m: &Model, i: usize, x: f64) -> f64 {
    if i == m.steps {
        return 0.0;
    }
    if x == 0.0 {
        // triggered: the rider pays every remaining withdrawal, no more fees
        return m.withdrawal * m.annuity[m.steps - i];
    }
    let up = rider_u_minus(m, i + 1, x * m.u);
    let down = rider_u_minus(m, i + 1, x * m.d);
    m.disc * (m.p * up + m.q * down)
}

/// Rider value cum-fee and cum-withdrawal, given the pre-deduction account.
pub(crate) fn rider_u_minus(m: &Model, i: usize, x_pre: f64) -> f64 {
    rider_u(m, i, m.w(x_pre)) + m.claim(x_pre) - m.fee(x_pre)
}

/// `v(m, x)` by direct enumeration of the `2^(N-m)` remaining paths.
///
/// Paths are grouped by down-count `k`; within a group every permutation of
/// the moves is visited in lexicographic order. Groups are scanned from
/// `k = 0` upwards and the scan stops at the first group in which every path
/// ends with an empty account.
pub fn direct_path_value(model: &Model, m: usize, x: f64) -> Result<f64> {
    let n = model.steps;
    assert!(m <= n, "step {m} beyond horizon {n}");
    let zeta = n - m;
    if zeta > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            what: "path enumeration",
            steps: zeta,
            limit: ENUMERATION_LIMIT,
        });
    }
    let g = model.withdrawal;
    let mut expected_terminal = 0.0;
    for k in 0..=zeta {
        let (sum, all_zero) = terminal_sum_for_down_count(model, zeta, k, x);
        if all_zero {
            break;
        }
        let weight = model.p.powi((zeta - k) as i32) * model.q.powi(k as i32);
        expected_terminal += weight * sum;
    }
    Ok(g * model.annuity[zeta] + model.disc.powi(zeta as i32) * expected_terminal)
}

/// Sum over all paths with `k` downs of `W_N^+`, and whether every term was zero.
fn terminal_sum_for_down_count(m: &Model, zeta: usize, k: usize, x: f64) -> (f64, bool) {
    // 0 = up, 1 = down; ascending order is the first permutation
    let mut moves: Vec<u8> = std::iter::repeat(0u8)
        .take(zeta - k)
        .chain(std::iter::repeat(1u8).take(k))
        .collect();
    let uk = m.u * m.keep;
    let dk = m.d * m.keep;
    let g = m.withdrawal;
    let mut sum = 0.0;
    let mut all_zero = true;
    loop {
        let mut w = x;
        for &mv in &moves {
            w = w * if mv == 0 { uk } else { dk } - g;
            if w <= 0.0 {
                break;
            }
        }
        if w > 0.0 {
            sum += w;
            all_zero = false;
        }
        if !next_permutation(&mut moves) {
            break;
        }
    }
    (sum, all_zero)
}

/// Rearranges `seq` into the next lexicographically greater permutation.
/// Returns `false` (leaving `seq` sorted descending) when none exists.
pub fn next_permutation<T: Ord>(seq: &mut [T]) -> bool {
    if seq.len() < 2 {
        return false;
    }
    let mut i = seq.len() - 1;
    while i > 0 && seq[i - 1] >= seq[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = seq.len() - 1;
    while seq[j] <= seq[i - 1] {
        j -= 1;
    }
    seq.swap(i - 1, j);
    seq[i..].reverse();
    true
}

/// Probability mass of the trigger time over `{1, ..., N, never}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerDistribution {
    /// `by_step[k - 1]` is the mass at step `k`.
    pub by_step: Vec<f64>,
    /// Mass of the account surviving to maturity.
    pub never: f64,
}

impl TriggerDistribution {
    pub fn steps(&self) -> usize {
        self.by_step.len()
    }

    /// Mass at step `k` in `1..=N`.
    pub fn at(&self, k: usize) -> f64 {
        if k == 0 || k > self.by_step.len() {
            0.0
        } else {
            self.by_step[k - 1]
        }
    }

    /// Probability the guarantee is triggered before or at maturity.
    pub fn finite(&self) -> f64 {
        self.by_step.iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.finite() + self.never
    }

    /// CSV with columns `k, probability`; the `inf` row comes last.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,probability\n");
        for (idx, mass) in self.by_step.iter().enumerate() {
            let _ = writeln!(out, "{},{:.12}", idx + 1, mass);
        }
        let _ = writeln!(out, "inf,{:.12}", self.never);
        out
    }
}

/// Distribution of the first step at which the account is exhausted.
pub fn trigger_distribution(model: &Model, measure: Measure) -> Result<TriggerDistribution> {
    let m = model.under(measure)?;
    let ext = Extremes::new(&m);
    let mut dist = TriggerDistribution { by_step: vec![0.0; m.steps], never: 0.0 };
    trigger_walk(&m, &ext, 0, m.contract.premium, 1.0, &mut dist);
    Ok(dist)
}

fn trigger_walk(m: &Model, ext: &Extremes, i: usize, x: f64, mass: f64, dist: &mut TriggerDistribution) {
    let n = m.steps;
    if i == n || ext.all_down(n - i, x, m.withdrawal) > 0.0 {
        dist.never += mass;
        return;
    }
    for (factor, prob) in [(m.u, m.p), (m.d, m.q)] {
        let child = m.w(x * factor);
        let child_mass = mass * prob;
        if child == 0.0 {
            dist.by_step[i] += child_mass;
        } else {
            trigger_walk(m, ext, i + 1, child, child_mass, dist);
        }
    }
}

/// Trigger distribution by enumerating every path grouped by down-count.
///
/// Independent of [`trigger_distribution`]; only feasible for small `N`.
pub fn trigger_distribution_paths(model: &Model, measure: Measure) -> Result<TriggerDistribution> {
    let m = model.under(measure)?;
    let n = m.steps;
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit { what: "trigger enumeration", steps: n, limit: ENUMERATION_LIMIT });
    }
    let mut dist = TriggerDistribution { by_step: vec![0.0; n], never: 0.0 };
    for k in 0..=n {
        let weight = m.p.powi((n - k) as i32) * m.q.powi(k as i32);
        let mut moves: Vec<u8> = std::iter::repeat(0u8).take(n - k).chain(std::iter::repeat(1u8).take(k)).collect();
        loop {
            let mut w = m.contract.premium;
            let mut hit = None;
            for (step, &mv) in moves.iter().enumerate() {
                w = m.w(w * if mv == 0 { m.u } else { m.d });
                if w == 0.0 {
                    hit = Some(step + 1);
                    break;
                }
            }
            match hit {
                Some(t) => dist.by_step[t - 1] += weight,
                None => dist.never += weight,
            }
            if !next_permutation(&mut moves) {
                break;
            }
        }
    }
    Ok(dist)
}

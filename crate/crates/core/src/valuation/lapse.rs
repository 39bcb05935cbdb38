//! Valuation with optimal early surrender.
//!
//! At the end of every step after the first the policyholder may surrender and
//! receive the post-withdrawal account less the surrender charge `k_i`. The
//! contract value takes the larger of continuing and surrendering; the insurer's
//! rider value takes the larger of continuing and collecting `k_i x`.
//!
//! Point queries here recurse depth-first over the account tree. For whole-tree
//! quantities along paths use [`crate::valuation::surface::ValueSurface`].

use crate::contract::SurrenderSchedule;
use crate::model::Model;

/// Relative tolerance (times the premium) under which continuation and
/// exercise values count as equal. Ties are classified as surrender.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// The choice facing the policyholder at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrenderDecision {
    pub step: usize,
    pub surrender_now: bool,
    pub continuation_value: f64,
    pub exercise_value: f64,
}

/// Whether surrendering is optimal given continuation and exercise values.
pub(crate) fn prefers_surrender(step: usize, continuation: f64, exercise: f64, premium: f64) -> bool {
    step > 0 && exercise >= continuation - TIE_TOLERANCE * premium
}

/// Contract value `v(i, x)` when the policyholder surrenders optimally.
pub fn policyholder_value_lapse(model: &Model, sched: &SurrenderSchedule, i: usize, x: f64) -> f64 {
    assert!(i <= model.steps, "step {i} beyond horizon {}", model.steps);
    v_lapse(model, sched, i, x).0
}

/// Returns `(v, continuation)` at `(i, x)`.
fn v_lapse(m: &Model, k: &SurrenderSchedule, i: usize, x: f64) -> (f64, f64) {
    let n = m.steps;
    if i == n {
        return (x, x);
    }
    if x == 0.0 {
        // surrendering an empty account forfeits the guarantee
        let a = m.withdrawal * m.annuity[n - i];
        return (a, a);
    }
    let up = v_lapse(m, k, i + 1, m.w(x * m.u)).0;
    let down = v_lapse(m, k, i + 1, m.w(x * m.d)).0;
    let cont = (m.withdrawal + m.p * up + m.q * down) * m.disc;
    if i == 0 {
        return (cont, cont);
    }
    (cont.max(x * (1.0 - k.rate(i))), cont)
}

/// Continuation and exercise values at `(i, x)`.
pub fn surrender_decision(model: &Model, sched: &SurrenderSchedule, i: usize, x: f64) -> SurrenderDecision {
    let (_, cont) = v_lapse(model, sched, i, x);
    let exercise = x * (1.0 - sched.rate(i));
    SurrenderDecision {
        step: i,
        surrender_now: prefers_surrender(i, cont, exercise, model.premium()),
        continuation_value: cont,
        exercise_value: exercise,
    }
}

/// Rider value `u(i, x)` to the insurer when the policyholder surrenders optimally.
pub fn rider_value_lapse(model: &Model, sched: &SurrenderSchedule, i: usize, x: f64) -> f64 {
    assert!(i <= model.steps, "step {i} beyond horizon {}", model.steps);
    u_lapse(model, sched, i, x).0
}

/// Returns `(u, continuation)` at `(i, x)`.
pub(crate) fn u_lapse(m: &Model, k: &SurrenderSchedule, i: usize, x: f64) -> (f64, f64) {
    let n = m.steps;
    if i == n {
        return (0.0, 0.0);
    }
    if x == 0.0 {
        let a = m.withdrawal * m.annuity[n - i];
        return (a, a);
    }
    let cont = m.disc * (m.p * u_minus_lapse(m, k, i + 1, x * m.u) + m.q * u_minus_lapse(m, k, i + 1, x * m.d));
    if i == 0 {
        return (cont, cont);
    }
    (cont.max(-k.rate(i) * x), cont)
}

pub(crate) fn u_minus_lapse(m: &Model, k: &SurrenderSchedule, i: usize, x_pre: f64) -> f64 {
    u_lapse(m, k, i, m.w(x_pre)).0 + m.claim(x_pre) - m.fee(x_pre)
}

/// Value `l(i, x)` of the option to surrender: lapse rider value less no-lapse rider value.
pub fn lapse_option_value(model: &Model, sched: &SurrenderSchedule, i: usize, x: f64) -> f64 {
    assert!(i <= model.steps, "step {i} beyond horizon {}", model.steps);
    l_walk(model, sched, i, x).1
}

/// Returns `(u_nl, l)` at `(i, x)`, recursing over both together.
fn l_walk(m: &Model, k: &SurrenderSchedule, i: usize, x: f64) -> (f64, f64) {
    let n = m.steps;
    if i == n {
        return (0.0, 0.0);
    }
    if x == 0.0 {
        return (m.withdrawal * m.annuity[n - i], 0.0);
    }
    let mut u_nl = 0.0;
    let mut l_cont = 0.0;
    for (factor, prob) in [(m.u, m.p), (m.d, m.q)] {
        let x_pre = x * factor;
        let (child_u, child_l) = l_walk(m, k, i + 1, m.w(x_pre));
        u_nl += prob * (child_u + m.claim(x_pre) - m.fee(x_pre));
        l_cont += prob * child_l;
    }
    u_nl *= m.disc;
    l_cont *= m.disc;
    if i == 0 {
        return (u_nl, l_cont);
    }
    (u_nl, l_cont.max(-u_nl - k.rate(i) * x))
}

/// Consumption `c(i, x)`: how much the contract value exceeds its continuation
/// value, i.e. what the policyholder gives up by not surrendering at `(i, x)`.
pub fn consumption(model: &Model, sched: &SurrenderSchedule, i: usize, x: f64) -> f64 {
    assert!(i < model.steps, "consumption is defined before maturity only");
    let (v, cont) = v_lapse(model, sched, i, x);
    v - cont
}

/// Consumption computed from the rider value recursion instead of the contract value.
pub fn consumption_from_rider(model: &Model, sched: &SurrenderSchedule, i: usize, x: f64) -> f64 {
    assert!(i < model.steps, "consumption is defined before maturity only");
    let (u, cont) = u_lapse(model, sched, i, x);
    u - cont
}

/// One row of the surrender-region report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrenderThreshold {
    pub step: usize,
    /// Smallest account value at which surrender is optimal, if any below `x_max`.
    pub threshold: Option<f64>,
}

/// Locates, for each step `1..N`, the account value above which surrender is optimal.
///
/// Assumes the surrender region at each step is an interval `[x*, inf)` and
/// bisects on `[0, x_max]` to relative precision `1e-8`.
pub fn surrender_region(model: &Model, sched: &SurrenderSchedule, x_max: f64) -> Vec<SurrenderThreshold> {
    (1..model.steps)
        .map(|i| {
            let surrenders = |x: f64| surrender_decision(model, sched, i, x).surrender_now;
            let threshold = if !surrenders(x_max) {
                None
            } else {
                let (mut lo, mut hi) = (0.0, x_max);
                while hi - lo > 1e-8 * x_max {
                    let mid = 0.5 * (lo + hi);
                    if surrenders(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Some(hi)
            };
            SurrenderThreshold { step: i, threshold }
        })
        .collect()
}

/// CSV with columns `i, x_threshold`; steps without a threshold print `inf`.
pub fn surrender_region_csv(rows: &[SurrenderThreshold]) -> String {
    let mut out = String::from("i,x_threshold_currency\n");
    for row in rows {
        match row.threshold {
            Some(x) => out.push_str(&format!("{},{:.6}\n", row.step, x)),
            None => out.push_str(&format!("{},inf\n", row.step)),
        }
    }
    out
}

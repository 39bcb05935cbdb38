//! Fair fee: the rider fee rate at which the contract is worth its premium.
//!
//! Without surrenders `V_0` is continuous and strictly decreasing in the fee up
//! to the rate `b` at which even the all-up path exhausts the account; beyond
//! it `V_0` is the annuity of the guaranteed withdrawals, which is below the
//! premium for a positive rate. The fair fee is bracketed by `[0, b]` and
//! found by bisection.

use crate::asian::{approx_value, Orientation};
use crate::contract::SurrenderSchedule;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::valuation::{lapse, nolapse};

/// Valuation route used to evaluate `V_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Exact backward recursion on the account tree.
    Tree,
    /// Exact path enumeration; no-lapse only.
    Paths,
    /// Representative-average approximation.
    Asian(Orientation),
}

pub const MAX_ITERATIONS: usize = 200;
pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeeSolveResult {
    pub alpha_star: f64,
    pub iterations: usize,
    /// `V_0(alpha_star) - P`
    pub residual: f64,
    pub bracket: (f64, f64),
}

impl FeeSolveResult {
    pub fn bps(&self) -> f64 {
        self.alpha_star * 1e4
    }
}

/// Smallest fee at which the all-up path from `(i, x)` ends with an empty account.
///
/// Zero when even a zero fee leaves the all-up path exhausted.
pub fn fee_upper_bound(model: &Model, i: usize, x: f64) -> f64 {
    let n = model.steps();
    let g = model.withdrawal;
    let dt = model.lattice.dt;
    let u = model.lattice.u;
    let all_up_terminal = |alpha: f64| {
        let keep = (-alpha * dt).exp();
        let mut w = x;
        for _ in i..n {
            w = (w * u * keep - g).max(0.0);
        }
        w
    };
    if all_up_terminal(0.0) == 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while all_up_terminal(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if all_up_terminal(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `V_0` at the model's fee with the chosen engine.
pub fn contract_value(model: &Model, sched: Option<&SurrenderSchedule>, engine: Engine) -> Result<f64> {
    let p = model.premium();
    match (engine, sched) {
        (Engine::Tree, None) => Ok(nolapse::policyholder_value(model, 0, p)),
        (Engine::Tree, Some(k)) => Ok(lapse::policyholder_value_lapse(model, k, 0, p)),
        (Engine::Paths, None) => nolapse::direct_path_value(model, 0, p),
        (Engine::Paths, Some(_)) => {
            Err(Error::param("engine", "path enumeration values the no-lapse contract only"))
        }
        (Engine::Asian(o), k) => Ok(approx_value(model, k, o).value),
    }
}

/// Solves `V_0(alpha) = P` by bisection on `[0, b]` until `|V_0 - P| < epsilon`.
pub fn fair_fee(
    model: &Model,
    sched: Option<&SurrenderSchedule>,
    engine: Engine,
    epsilon: f64,
) -> Result<FeeSolveResult> {
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "tolerance must be positive"));
    }
    if !(model.lattice.r > 0.0) {
        return Err(Error::param("r", "fair fee is unique only for a positive rate"));
    }
    let premium = model.premium();
    let value_at = |alpha: f64| -> Result<f64> { contract_value(&model.with_alpha(alpha)?, sched, engine) };

    let upper = fee_upper_bound(&model.with_alpha(0.0)?, 0, premium);
    let f_lo = value_at(0.0)? - premium;
    if f_lo < 0.0 {
        return Err(Error::InvalidBracket(format!("V_0(0) - P = {f_lo:.6} is negative")));
    }
    let f_hi = value_at(upper)? - premium;
    if !(f_hi < 0.0) {
        return Err(Error::InvalidBracket(format!("V_0(b = {upper:.6}) - P = {f_hi:.6} is not negative")));
    }
    if f_lo < epsilon {
        return Ok(FeeSolveResult { alpha_star: 0.0, iterations: 0, residual: f_lo, bracket: (0.0, upper) });
    }

    let (mut lo, mut hi) = (0.0, upper);
    let mut residual = f_lo;
    for iteration in 1..=MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        residual = value_at(mid)? - premium;
        if residual.abs() < epsilon {
            return Ok(FeeSolveResult { alpha_star: mid, iterations: iteration, residual, bracket: (0.0, upper) });
        }
        if residual > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual })
}

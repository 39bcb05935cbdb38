//! Pathwise hedging: the replicating portfolio, the unhedged position, and the
//! insurer's discounted profit on every path.
//!
//! The insurer receives the fee and pays the shortfall claim at the end of
//! every step. Under the replicating strategy it also holds `delta` units of
//! the asset financed at the risk-free rate, and withdraws the consumption
//! whenever the policyholder passes up an optimal surrender. On surrender at
//! step `eta` the portfolio is liquidated and the surrender charge collected.
//!
//! Profit on a path is `e^{-r_bar eta} (X_eta + k_eta W_eta)` plus the
//! discounted consumption withdrawn before `eta`, with `eta = N` when the
//! policy runs to maturity. Initial capital is not subtracted.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::contract::SurrenderSchedule;
use crate::error::{Error, Result};
use crate::lattice::Measure;
use crate::model::Model;
use crate::risk::fixed;
use crate::valuation::lapse::{prefers_surrender, u_lapse, u_minus_lapse};
use crate::valuation::nolapse::{rider_u_minus, rider_value};
use crate::valuation::surface::{ValueSurface, SURFACE_LIMIT};

/// Largest horizon for sampled paths; every node on a sampled path is valued
/// by its own pruned recursion, whose cost roughly doubles with each step.
pub const SAMPLING_LIMIT: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Delta-hedge the rider and withdraw consumption.
    #[default]
    Replicate,
    /// Hold nothing; only fees in and claims out.
    None,
}

/// When the policyholder surrenders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Behaviour {
    /// At the first step where surrendering is optimal.
    #[default]
    Optimal,
    HoldToMaturity,
    /// At the given step, if the policy is still in force and the step is before maturity.
    SurrenderAt(usize),
}

/// Everything the simulator needs at one node of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathNode {
    pub step: usize,
    pub asset: f64,
    /// Account before the step's fee and withdrawal; the premium at inception.
    pub account_pre: f64,
    pub account: f64,
    pub fee: f64,
    pub claim: f64,
    pub rider: f64,
    pub rider_continuation: f64,
    /// Zero at maturity.
    pub delta: f64,
    pub consumption: f64,
    pub surrender_optimal: bool,
    /// Surrender charge rate at this step; zero without a schedule.
    pub charge: f64,
}

/// Replicating position `delta` at `(i, x)` with asset value `s`.
pub fn replicating_delta(model: &Model, sched: Option<&SurrenderSchedule>, i: usize, x: f64, s: f64) -> f64 {
    assert!(i < model.steps, "no position at maturity");
    if x == 0.0 {
        return 0.0;
    }
    let child = |y: f64| match sched {
        Some(k) => u_minus_lapse(model, k, i + 1, y),
        None => rider_u_minus(model, i + 1, y),
    };
    (child(x * model.u) - child(x * model.d)) / (s * (model.u - model.d))
}

/// Nodes along `path_id`, read off a materialized surface.
pub fn path_nodes(surface: &ValueSurface, path_id: usize) -> Vec<PathNode> {
    let m = surface.model();
    let n = surface.steps();
    (0..=n)
        .map(|i| {
            let b = surface.node_on_path(path_id, i);
            let pre = if i == 0 { m.premium() } else { surface.account_pre(i, b) };
            let (fee, claim) = if i == 0 { (0.0, 0.0) } else { (m.fee(pre), m.claim(pre)) };
            PathNode {
                step: i,
                asset: surface.asset(i, b),
                account_pre: pre,
                account: surface.account(i, b),
                fee,
                claim,
                rider: surface.rider(i, b),
                rider_continuation: surface.rider_continuation(i, b),
                delta: if i < n { surface.delta(i, b) } else { 0.0 },
                consumption: if i < n { surface.consumption(i, b) } else { 0.0 },
                surrender_optimal: surface.surrender_optimal(i, b),
                charge: surface.schedule().map_or(0.0, |k| k.rate(i)),
            }
        })
        .collect()
}

/// Nodes along an explicit path (`true` = up) from the depth-first recursions.
///
/// Costs one subtree valuation per node; no surface is built.
pub fn path_nodes_direct(model: &Model, sched: Option<&SurrenderSchedule>, path: &[bool]) -> Vec<PathNode> {
    let m = model;
    let n = m.steps;
    assert_eq!(path.len(), n, "path length must equal the horizon");
    let mut nodes = Vec::with_capacity(n + 1);
    let (mut s, mut pre, mut x) = (m.premium(), m.premium(), m.premium());
    for i in 0..=n {
        let (rider, cont) = match sched {
            Some(k) => u_lapse(m, k, i, x),
            None => {
                let u = rider_value(m, i, x);
                (u, u)
            }
        };
        let charge = sched.map_or(0.0, |k| k.rate(i));
        let surrender_optimal = match sched {
            Some(_) if i < n => prefers_surrender(i, cont + x, x * (1.0 - charge), m.premium()),
            _ => false,
        };
        let (fee, claim) = if i == 0 { (0.0, 0.0) } else { (m.fee(pre), m.claim(pre)) };
        nodes.push(PathNode {
            step: i,
            asset: s,
            account_pre: pre,
            account: x,
            fee,
            claim,
            rider,
            rider_continuation: cont,
            delta: if i < n { replicating_delta(m, sched, i, x, s) } else { 0.0 },
            consumption: rider - cont,
            surrender_optimal,
            charge,
        });
        if i < n {
            let factor = if path[i] { m.u } else { m.d };
            s *= factor;
            pre = x * factor;
            x = m.w(pre);
        }
    }
    nodes
}

/// Portfolio values along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `X_0..=X_eta`, each after the step's fee and claim and before consumption.
    pub portfolio: Vec<f64>,
    /// Consumption withdrawn at steps `0..eta`.
    pub consumption: Vec<f64>,
    pub eta: usize,
    pub tau: Option<usize>,
    pub profit: f64,
}

/// Runs `strategy` from capital `x0` along `nodes` until surrender or maturity.
pub fn simulate_portfolio(
    model: &Model,
    nodes: &[PathNode],
    strategy: Strategy,
    behaviour: Behaviour,
    x0: f64,
) -> Trajectory {
    let n = model.steps;
    assert_eq!(nodes.len(), n + 1);
    let growth = 1.0 / model.disc;
    let mut portfolio = vec![x0];
    let mut consumption = Vec::new();
    let mut withdrawn = 0.0;
    let mut tau = None;
    let mut i = 0;
    loop {
        let node = &nodes[i];
        if tau.is_none() && i > 0 && node.account == 0.0 {
            tau = Some(i);
        }
        let x = portfolio[i];
        let surrender = i > 0
            && i < n
            && match behaviour {
                Behaviour::Optimal => node.surrender_optimal,
                Behaviour::HoldToMaturity => false,
                Behaviour::SurrenderAt(j) => i == j,
            };
        if surrender || i == n {
            let profit = model.disc.powi(i as i32) * (x + node.charge * node.account) + withdrawn;
            return Trajectory { portfolio, consumption, eta: i, tau, profit };
        }
        let (delta, c) = match strategy {
            Strategy::Replicate => (node.delta, node.consumption),
            Strategy::None => (0.0, 0.0),
        };
        consumption.push(c);
        withdrawn += model.disc.powi(i as i32) * c;
        let next = &nodes[i + 1];
        let x_next = (x - delta * node.asset - c) * growth + delta * next.asset + next.fee - next.claim;
        portfolio.push(x_next);
        i += 1;
    }
}

/// One path of the profit distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    /// Moves as bits, step 1 most significant, `1` = up.
    pub path_id: u64,
    pub probability: f64,
    /// Trigger step, if the account is exhausted while the policy is in force.
    pub tau: Option<usize>,
    /// Surrender step, or `N` when the policy runs to maturity.
    pub eta: usize,
    pub profit_hedged: f64,
    pub profit_unhedged: f64,
}

impl PathOutcome {
    pub fn surrendered(&self, steps: usize) -> bool {
        self.eta < steps
    }
}

/// Stratified sample of paths: `paths` draws spread over up-counts in
/// proportion to their probability, each weighted by its stratum's share.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitOptions {
    pub measure: Measure,
    pub behaviour: Behaviour,
    /// Required above the surface limit.
    pub sampling: Option<Sampling>,
}

impl Default for ProfitOptions {
    fn default() -> Self {
        ProfitOptions { measure: Measure::RealWorld, behaviour: Behaviour::Optimal, sampling: None }
    }
}

fn path_bits(path: &[bool]) -> u64 {
    path.iter().fold(0u64, |acc, &up| (acc << 1) | up as u64)
}

fn outcome(model: &Model, nodes: &[PathNode], path_id: u64, probability: f64, behaviour: Behaviour) -> PathOutcome {
    let hedged = simulate_portfolio(model, nodes, Strategy::Replicate, behaviour, nodes[0].rider);
    let unhedged = simulate_portfolio(model, nodes, Strategy::None, behaviour, 0.0);
    PathOutcome {
        path_id,
        probability,
        tau: hedged.tau,
        eta: hedged.eta,
        profit_hedged: hedged.profit,
        profit_unhedged: unhedged.profit,
    }
}

/// Hedged and unhedged profit on every path (or a stratified sample), ordered by path id.
///
/// The replicating strategy starts from the rider value `U_0`, the unhedged
/// one from zero.
pub fn profit_distribution(
    model: &Model,
    sched: Option<&SurrenderSchedule>,
    opts: ProfitOptions,
) -> Result<Vec<PathOutcome>> {
    let n = model.steps;
    let p = model.lattice.up_prob(opts.measure)?;
    let q = 1.0 - p;
    match opts.sampling {
        None => {
            if n > SURFACE_LIMIT {
                return Err(Error::EnumerationLimit { what: "path enumeration", steps: n, limit: SURFACE_LIMIT });
            }
            let surface = ValueSurface::build(model, sched)?;
            Ok((0..surface.paths())
                .into_par_iter()
                .map(|id| {
                    let ups = id.count_ones() as i32;
                    let prob = p.powi(ups) * q.powi(n as i32 - ups);
                    outcome(model, &path_nodes(&surface, id), id as u64, prob, opts.behaviour)
                })
                .collect())
        }
        Some(s) => {
            if n > SAMPLING_LIMIT {
                return Err(Error::EnumerationLimit { what: "path sampling", steps: n, limit: SAMPLING_LIMIT });
            }
            if s.paths == 0 {
                return Err(Error::param("paths", "sample size must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            let mut draws: Vec<(Vec<bool>, f64)> = Vec::new();
            for ups in 0..=n {
                let stratum = binomial(n, ups) * p.powi(ups as i32) * q.powi((n - ups) as i32);
                if stratum == 0.0 {
                    continue;
                }
                let count = ((s.paths as f64 * stratum).round() as usize).max(1);
                for _ in 0..count {
                    let mut path: Vec<bool> = (0..n).map(|h| h < ups).collect();
                    path.shuffle(&mut rng);
                    draws.push((path, stratum / count as f64));
                }
            }
            let mut outcomes: Vec<PathOutcome> = draws
                .par_iter()
                .map(|(path, w)| outcome(model, &path_nodes_direct(model, sched, path), path_bits(path), *w, opts.behaviour))
                .collect();
            outcomes.sort_by_key(|o| o.path_id);
            Ok(outcomes)
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, h| acc * (n - h) as f64 / (h + 1) as f64)
}

/// CSV with one row per outcome; `tau` is `inf` when the account survives.
pub fn outcomes_csv(outcomes: &[PathOutcome]) -> String {
    let mut out =
        String::from("path_id,probability,tau,eta,profit_hedged_currency,profit_unhedged_currency\n");
    for o in outcomes {
        let tau = o.tau.map_or_else(|| "inf".to_string(), |t| t.to_string());
        let _ = writeln!(
            out,
            "{},{:.12e},{},{},{},{}",
            o.path_id,
            o.probability,
            tau,
            o.eta,
            fixed(o.profit_hedged, 9),
            fixed(o.profit_unhedged, 9)
        );
    }
    out
}

/// Distribution of surrender and trigger times over outcomes.
///
/// Surrendered paths count towards `surrender[eta]`; the rest towards
/// `trigger[tau]` or `never`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitDistribution {
    pub surrender: Vec<f64>,
    pub trigger: Vec<f64>,
    pub never: f64,
}

pub fn exit_distribution(outcomes: &[PathOutcome], steps: usize) -> ExitDistribution {
    let mut d = ExitDistribution { surrender: vec![0.0; steps + 1], trigger: vec![0.0; steps + 1], never: 0.0 };
    for o in outcomes {
        if o.surrendered(steps) {
            d.surrender[o.eta] += o.probability;
        } else if let Some(t) = o.tau {
            d.trigger[t] += o.probability;
        } else {
            d.never += o.probability;
        }
    }
    d
}

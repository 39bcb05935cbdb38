use proptest::prelude::*;

use gmwb::contract::SurrenderSchedule;
use gmwb::fair_fee::{fair_fee, Engine};
use gmwb::hedging::{path_nodes, simulate_portfolio, Behaviour, Strategy as Hedge};
use gmwb::lattice::Measure;
use gmwb::model::{model, Model};
use gmwb::valuation::lapse::{lapse_option_value, policyholder_value_lapse};
use gmwb::valuation::nolapse::{policyholder_value, trigger_distribution};
use gmwb::valuation::surface::ValueSurface;

const TOL: f64 = 1e-9;

/// `k_i = max(top - i%, 0)`, zero at maturity.
fn declining(m: &Model, top: f64) -> SurrenderSchedule {
    let n = m.steps();
    let per_step = (0..=n).map(|i| if i == n { 0.0 } else { (top - 0.01 * i as f64).max(0.0) }).collect();
    SurrenderSchedule::from_per_step(per_step, &m.contract).unwrap()
}

fn g_strategy() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.125, 0.2, 0.25])
}

fn solve(g: f64, r: f64, sigma: f64) -> f64 {
    fair_fee(&model(100.0, g, 0.0, r, sigma, 1).unwrap(), None, Engine::Tree, 1e-9).unwrap().alpha_star
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn value_falls_as_fee_rises(g in g_strategy(), r in 0.01..0.08f64, sigma in 0.08..0.4f64,
                                a in 0.0..0.04f64, b in 0.0..0.04f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let v_lo = policyholder_value(&model(100.0, g, lo, r, sigma, 1).unwrap(), 0, 100.0);
        let v_hi = policyholder_value(&model(100.0, g, hi, r, sigma, 1).unwrap(), 0, 100.0);
        prop_assert!(v_hi <= v_lo + TOL, "V({hi}) = {v_hi} > V({lo}) = {v_lo}");
    }

    #[test]
    fn survival_falls_as_fee_rises(g in g_strategy(), mu in 0.0..0.1f64, sigma in 0.1..0.4f64,
                                   a in 0.0..0.04f64, b in 0.0..0.04f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let never = |alpha: f64| {
            let m = model(100.0, g, alpha, 0.05, sigma, 1).unwrap();
            let m = Model::new(m.contract, m.lattice.with_drift(mu).unwrap()).unwrap();
            trigger_distribution(&m, Measure::RealWorld).unwrap().never
        };
        prop_assert!(never(hi) <= never(lo) + TOL);
    }

    #[test]
    fn lapse_option_grows_with_fee(g in g_strategy(), r in 0.02..0.08f64, sigma in 0.1..0.35f64,
                                   top in 0.01..0.1f64, a in 0.0..0.04f64, b in 0.0..0.04f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let l = |alpha: f64| {
            let m = model(100.0, g, alpha, r, sigma, 1).unwrap();
            let k = declining(&m, top);
            lapse_option_value(&m, &k, 0, 100.0)
        };
        let (l_lo, l_hi) = (l(lo), l(hi));
        prop_assert!(l_lo >= -TOL);
        prop_assert!(l_hi >= l_lo - TOL, "L({hi}) = {l_hi} < L({lo}) = {l_lo}");
    }

    #[test]
    fn surrender_right_never_hurts(g in g_strategy(), r in 0.02..0.08f64, sigma in 0.1..0.35f64,
                                   top in 0.01..0.1f64, alpha in 0.0..0.04f64) {
        let m = model(100.0, g, alpha, r, sigma, 1).unwrap();
        let k = declining(&m, top);
        prop_assert!(policyholder_value_lapse(&m, &k, 0, 100.0) >= policyholder_value(&m, 0, 100.0) - TOL);
    }

    #[test]
    fn fee_rises_with_volatility(g in g_strategy(), r in 0.02..0.08f64, s1 in 0.1..0.35f64, s2 in 0.1..0.35f64) {
        let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
        prop_assume!(hi - lo > 1e-3);
        prop_assert!(solve(g, r, hi) >= solve(g, r, lo) - 1e-7);
    }

    #[test]
    fn fee_falls_with_rate(g in g_strategy(), sigma in 0.1..0.35f64, r1 in 0.02..0.08f64, r2 in 0.02..0.08f64) {
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        prop_assume!(hi - lo > 1e-3);
        prop_assert!(solve(g, hi, sigma) <= solve(g, lo, sigma) + 1e-7);
    }

    #[test]
    fn no_consumption_before_optimal_surrender(g in g_strategy(), r in 0.02..0.08f64, sigma in 0.1..0.35f64,
                                               alpha in 0.0..0.04f64) {
        let m = model(100.0, g, alpha, r, sigma, 1).unwrap();
        let k = declining(&m, 0.09);
        let surface = ValueSurface::build(&m, Some(&k)).unwrap();
        for id in 0..surface.paths() {
            let nodes = path_nodes(&surface, id);
            let t = simulate_portfolio(&m, &nodes, Hedge::Replicate, Behaviour::Optimal, nodes[0].rider);
            prop_assert!(t.consumption.iter().all(|c| c.abs() <= TOL), "path {id}: {:?}", t.consumption);
        }
    }
}

#[test]
fn fee_rises_with_withdrawal_rate() {
    let fees: Vec<f64> = [0.05, 1.0 / 14.0, 0.1, 0.125, 0.2].iter().map(|&g| solve(g, 0.05, 0.2)).collect();
    assert!(fees.windows(2).all(|w| w[1] > w[0]), "{fees:?}");
}

#[test]
fn holding_on_consumes_where_surrender_was_optimal() {
    let m = model(100.0, 0.10, 0.0188, 0.05, 0.25, 1).unwrap();
    let k = declining(&m, 0.09);
    let surface = ValueSurface::build(&m, Some(&k)).unwrap();
    let mut positive = 0;
    for id in 0..surface.paths() {
        let nodes = path_nodes(&surface, id);
        let t = simulate_portfolio(&m, &nodes, Hedge::Replicate, Behaviour::HoldToMaturity, nodes[0].rider);
        for (i, c) in t.consumption.iter().enumerate() {
            if nodes[i].surrender_optimal {
                assert!(*c > 0.0, "path {id} step {i}");
                positive += 1;
            } else {
                assert!(c.abs() <= TOL, "path {id} step {i}: {c}");
            }
        }
    }
    assert!(positive > 0);
}

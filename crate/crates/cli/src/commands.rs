use std::fmt::Write as _;

use gmwb::continuous::{mc_fair_fee, mc_price, weekly_hedge_sim, GbmMarket, McConfig};
use gmwb::contract::{ContractParams, SurrenderSchedule};
use gmwb::fair_fee::{contract_value, fair_fee, Engine};
use gmwb::hedging::{exit_distribution, outcomes_csv, profit_distribution, ProfitOptions, Sampling};
use gmwb::lattice::{crr_params, Measure};
use gmwb::model::Model;
use gmwb::reproduce::{report, reproduce, Fixtures, Table};
use gmwb::risk::{cdf_csv, fixed, risk_metrics, RiskReport};
use gmwb::valuation::{lapse, nolapse};

use crate::config::{Detail, EngineKind, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or command/engine combination: exit 2.
    Usage(String),
    /// The inputs are well formed but the model rejects them: exit 1.
    Domain(String),
}

impl From<gmwb::Error> for CliError {
    fn from(e: gmwb::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

/// Command output: the CSV body and whether every check held.
pub struct Output {
    pub body: String,
    pub ok: bool,
}

impl Output {
    fn ok(body: String) -> Self {
        Output { body, ok: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Price,
    FairFee,
    TriggerDist,
    HedgeSim,
    LapseValue,
    McBenchmark,
    Reproduce(Table),
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Output, CliError> {
    match command {
        Command::Price => price(cfg),
        Command::FairFee => fee(cfg),
        Command::TriggerDist => trigger_dist(cfg),
        Command::HedgeSim => hedge_sim(cfg),
        Command::LapseValue => lapse_value(cfg),
        Command::McBenchmark => mc_benchmark(cfg),
        Command::Reproduce(table) => {
            let fixtures = Fixtures::bundled();
            let checks = reproduce(table, &fixtures)?;
            Ok(Output { body: report(table, &fixtures, &checks), ok: checks.iter().all(|c| c.pass) })
        }
    }
}

fn contract(cfg: &RunConfig, alpha: f64) -> Result<ContractParams, CliError> {
    Ok(ContractParams::new(cfg.premium, cfg.g, alpha, cfg.n)?)
}

fn lattice_model(cfg: &RunConfig, alpha: f64) -> Result<Model, CliError> {
    let mut lattice = crr_params(cfg.sigma, cfg.r, cfg.n)?;
    if let Some(mu) = cfg.mu {
        lattice = lattice.with_drift(mu)?;
    }
    Ok(Model::new(contract(cfg, alpha)?, lattice)?)
}

fn schedule(cfg: &RunConfig, contract: &ContractParams) -> Result<Option<SurrenderSchedule>, CliError> {
    let Some(text) = &cfg.schedule else { return Ok(None) };
    let sched = match text.strip_prefix("flat:") {
        Some(pct) => {
            let pct: f64 = pct.trim().parse().map_err(|_| CliError::Usage(format!("`schedule`: bad rate `{pct}`")))?;
            SurrenderSchedule::flat(pct / 100.0, contract)?
        }
        None => SurrenderSchedule::parse_percentages(text, contract)?,
    };
    Ok(Some(sched))
}

fn tree_engine(cfg: &RunConfig) -> Result<Engine, CliError> {
    match cfg.engine {
        EngineKind::Tree => Ok(Engine::Tree),
        EngineKind::Paths => Ok(Engine::Paths),
        EngineKind::Asian => Ok(Engine::Asian(cfg.orientation)),
        EngineKind::Mc => usage("this command needs a lattice engine: tree, paths or asian"),
    }
}

fn market(cfg: &RunConfig) -> GbmMarket {
    GbmMarket { r: cfg.r, sigma: cfg.sigma, mu: cfg.mu.unwrap_or(cfg.r) }
}

fn mc_config(cfg: &RunConfig) -> McConfig {
    McConfig {
        n_paths: cfg.paths,
        seed: cfg.seed,
        outer_paths: cfg.outer_paths,
        rebalance_per_year: cfg.rebalance_per_year,
        bump: cfg.bump,
        inner_paths: cfg.inner_paths,
        antithetic: cfg.antithetic,
        bootstrap: cfg.bootstrap,
        inner_antithetic: cfg.inner_antithetic,
    }
}

fn require_mu(cfg: &RunConfig, why: &str) -> Result<f64, CliError> {
    cfg.mu.ok_or_else(|| CliError::Usage(format!("`mu` is required: {why}")))
}

/// The configured fee, or the fair fee of the configured engine when `solve-fee` is set.
fn charged_fee(cfg: &RunConfig) -> Result<f64, CliError> {
    if !cfg.solve_fee {
        return Ok(cfg.alpha);
    }
    match cfg.engine {
        EngineKind::Mc => Ok(mc_fair_fee(&contract(cfg, 0.0)?, &market(cfg), &mc_config(cfg))?.alpha_star),
        _ => {
            let m = lattice_model(cfg, 0.0)?;
            let k = schedule(cfg, &m.contract)?;
            Ok(fair_fee(&m, k.as_ref(), tree_engine(cfg)?, cfg.epsilon)?.alpha_star)
        }
    }
}

fn price(cfg: &RunConfig) -> Result<Output, CliError> {
    let alpha = charged_fee(cfg)?;
    let mut out = String::new();
    if cfg.engine == EngineKind::Mc {
        if cfg.schedule.is_some() {
            return usage("the mc engine values the contract without surrenders");
        }
        let est = mc_price(&contract(cfg, alpha)?, &market(cfg), &mc_config(cfg))?;
        out.push_str("alpha_bps,v0_currency,u0_currency,std_error_currency,paths\n");
        let _ = writeln!(
            out,
            "{:.2},{:.6},{:.6},{:.6},{}",
            alpha * 1e4,
            est.value,
            est.value - cfg.premium,
            est.std_error,
            est.paths
        );
    } else {
        let m = lattice_model(cfg, alpha)?;
        let k = schedule(cfg, &m.contract)?;
        let v0 = contract_value(&m, k.as_ref(), tree_engine(cfg)?)?;
        out.push_str("alpha_bps,v0_currency,u0_currency\n");
        let _ = writeln!(out, "{:.2},{:.6},{:.6}", alpha * 1e4, v0, v0 - cfg.premium);
    }
    Ok(Output::ok(out))
}

fn fee(cfg: &RunConfig) -> Result<Output, CliError> {
    let mut out = String::new();
    if cfg.engine == EngineKind::Mc {
        if cfg.schedule.is_some() {
            return usage("the mc engine values the contract without surrenders");
        }
        let f = mc_fair_fee(&contract(cfg, 0.0)?, &market(cfg), &mc_config(cfg))?;
        out.push_str("alpha_star_bps,std_error_bps,v0_std_error_currency,iterations\n");
        let _ = writeln!(
            out,
            "{:.2},{:.2},{:.6},{}",
            f.alpha_star * 1e4,
            f.std_error * 1e4,
            f.value_std_error,
            f.iterations
        );
    } else {
        let m = lattice_model(cfg, 0.0)?;
        let k = schedule(cfg, &m.contract)?;
        let f = fair_fee(&m, k.as_ref(), tree_engine(cfg)?, cfg.epsilon)?;
        out.push_str("alpha_star_bps,iterations,residual_currency,bracket_upper_bps\n");
        let _ = writeln!(out, "{:.2},{},{:.6},{:.2}", f.bps(), f.iterations, f.residual, f.bracket.1 * 1e4);
    }
    Ok(Output::ok(out))
}

fn trigger_dist(cfg: &RunConfig) -> Result<Output, CliError> {
    if cfg.measure == Measure::RealWorld {
        require_mu(cfg, "the real-world trigger distribution uses the physical drift")?;
    }
    let alpha = charged_fee(cfg)?;
    let m = lattice_model(cfg, alpha)?;
    let k = schedule(cfg, &m.contract)?;
    match (cfg.engine, &k) {
        (EngineKind::Tree, None) => Ok(Output::ok(nolapse::trigger_distribution(&m, cfg.measure)?.to_csv())),
        (EngineKind::Paths, None) => Ok(Output::ok(nolapse::trigger_distribution_paths(&m, cfg.measure)?.to_csv())),
        (EngineKind::Tree, Some(k)) => {
            let opts = ProfitOptions { measure: cfg.measure, behaviour: cfg.behaviour, sampling: sampling(cfg) };
            let outcomes = profit_distribution(&m, Some(k), opts)?;
            let n = m.steps();
            let d = exit_distribution(&outcomes, n);
            let mut out = String::from("k,trigger_probability,surrender_probability\n");
            for i in 1..=n {
                let _ = writeln!(out, "{i},{:.12},{:.12}", d.trigger[i], d.surrender[i]);
            }
            let _ = writeln!(out, "inf,{:.12},{:.12}", d.never, 0.0);
            Ok(Output::ok(out))
        }
        _ => usage("trigger-dist runs on the tree engine, or the paths engine without surrenders"),
    }
}

fn sampling(cfg: &RunConfig) -> Option<Sampling> {
    cfg.sample_paths.map(|paths| Sampling { paths, seed: cfg.seed })
}

fn hedge_sim(cfg: &RunConfig) -> Result<Output, CliError> {
    require_mu(cfg, "hedge-sim simulates under the physical measure")?;
    let alpha = charged_fee(cfg)?;
    match cfg.engine {
        EngineKind::Tree => hedge_tree(cfg, alpha),
        EngineKind::Mc => hedge_mc(cfg, alpha),
        _ => usage("hedge-sim runs on the tree or mc engine"),
    }
}

fn hedge_tree(cfg: &RunConfig, alpha: f64) -> Result<Output, CliError> {
    let m = lattice_model(cfg, alpha)?;
    let k = schedule(cfg, &m.contract)?;
    let opts = ProfitOptions { measure: Measure::RealWorld, behaviour: cfg.behaviour, sampling: sampling(cfg) };
    let outcomes = profit_distribution(&m, k.as_ref(), opts)?;
    let probs: Vec<f64> = outcomes.iter().map(|o| o.probability).collect();
    let hedged: Vec<f64> = outcomes.iter().map(|o| o.profit_hedged).collect();
    let unhedged: Vec<f64> = outcomes.iter().map(|o| o.profit_unhedged).collect();
    let body = match cfg.detail {
        Detail::Summary => {
            let mut out = format!("alpha_bps,strategy,{}\n", RiskReport::CSV_HEADER);
            for (name, profits) in [("replicate", &hedged), ("none", &unhedged)] {
                let r = risk_metrics(profits, &probs, cfg.gamma)?;
                let _ = writeln!(out, "{:.2},{name},{}", alpha * 1e4, r.csv_row());
            }
            out
        }
        Detail::Paths => outcomes_csv(&outcomes),
        Detail::Cdf => cdf_csv(&unhedged, &probs),
        Detail::Region => return usage("detail=region belongs to lapse-value"),
    };
    Ok(Output::ok(body))
}

fn hedge_mc(cfg: &RunConfig, alpha: f64) -> Result<Output, CliError> {
    if cfg.schedule.is_some() {
        return usage("the mc hedge study has no surrenders");
    }
    let sim = weekly_hedge_sim(&contract(cfg, alpha)?, &market(cfg), &mc_config(cfg), cfg.gamma)?;
    let body = match cfg.detail {
        Detail::Summary => {
            let mut out = String::from(
                "alpha_bps,strategy,mean_currency,mean_se_currency,sd_currency,sd_se_currency,\
                 tvar_currency,tvar_se_currency,never_triggered_probability\n",
            );
            for (name, r, e) in [("none", &sim.no_hedge, &sim.no_hedge_errors), ("discrete", &sim.weekly, &sim.weekly_errors)]
            {
                let _ = writeln!(
                    out,
                    "{:.2},{name},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    alpha * 1e4,
                    r.mean,
                    e.mean,
                    r.sd,
                    e.sd,
                    r.tvar_gamma,
                    e.tvar_gamma,
                    sim.prob_never_triggered
                );
            }
            out
        }
        Detail::Paths => {
            let mut out = String::from("path,profit_unhedged_currency,profit_hedged_currency,triggered\n");
            for (i, p) in sim.paths.iter().enumerate() {
                let _ = writeln!(out, "{i},{},{},{}", fixed(p.profit_unhedged, 9), fixed(p.profit_hedged, 9), p.triggered);
            }
            out
        }
        Detail::Cdf => {
            let profits: Vec<f64> = sim.paths.iter().map(|p| p.profit_hedged).collect();
            let probs = vec![1.0 / profits.len() as f64; profits.len()];
            cdf_csv(&profits, &probs)
        }
        Detail::Region => return usage("detail=region belongs to lapse-value"),
    };
    Ok(Output::ok(body))
}

fn lapse_value(cfg: &RunConfig) -> Result<Output, CliError> {
    if cfg.schedule.is_none() {
        return usage("lapse-value needs a surrender `schedule`");
    }
    if cfg.engine != EngineKind::Tree {
        return usage("lapse-value runs on the tree engine");
    }
    let alpha = charged_fee(cfg)?;
    let m = lattice_model(cfg, alpha)?;
    let k = schedule(cfg, &m.contract)?.expect("checked above");
    let p = cfg.premium;
    let body = match cfg.detail {
        Detail::Summary => {
            let v0 = lapse::policyholder_value_lapse(&m, &k, 0, p);
            let u0 = lapse::rider_value_lapse(&m, &k, 0, p);
            let u0_nl = nolapse::rider_value(&m, 0, p);
            let l0 = lapse::lapse_option_value(&m, &k, 0, p);
            let v0_nl = nolapse::policyholder_value(&m, 0, p);
            let mut out = String::from(
                "alpha_bps,v0_currency,u0_currency,u0_no_lapse_currency,l0_currency,v0_no_lapse_currency\n",
            );
            let _ = writeln!(out, "{:.2},{v0:.6},{u0:.6},{u0_nl:.6},{l0:.6},{v0_nl:.6}", alpha * 1e4);
            out
        }
        Detail::Region => {
            let x_max = p * m.lattice.u.powi(m.steps() as i32);
            lapse::surrender_region_csv(&lapse::surrender_region(&m, &k, x_max))
        }
        _ => return usage("lapse-value prints detail=summary or detail=region"),
    };
    Ok(Output::ok(body))
}

fn mc_benchmark(cfg: &RunConfig) -> Result<Output, CliError> {
    if cfg.n != 1 {
        return usage("mc-benchmark compares against the annual lattice; set n=1");
    }
    if cfg.schedule.is_some() {
        return usage("mc-benchmark values the contract without surrenders");
    }
    let mc = mc_config(cfg);
    let est = mc_price(&contract(cfg, cfg.alpha)?, &market(cfg), &mc)?;
    let mc_fee = mc_fair_fee(&contract(cfg, 0.0)?, &market(cfg), &mc)?;
    let m = lattice_model(cfg, cfg.alpha)?;
    let tree_v0 = nolapse::policyholder_value(&m, 0, cfg.premium);
    let tree_fee = fair_fee(&m, None, Engine::Tree, cfg.epsilon)?;
    let mut out = String::from(
        "alpha_bps,mc_v0_currency,mc_v0_se_currency,tree_v0_currency,mc_alpha_star_bps,mc_alpha_star_se_bps,tree_alpha_star_bps,paths\n",
    );
    let _ = writeln!(
        out,
        "{:.2},{:.6},{:.6},{:.6},{:.2},{:.2},{:.2},{}",
        cfg.alpha * 1e4,
        est.value,
        est.std_error,
        tree_v0,
        mc_fee.alpha_star * 1e4,
        mc_fee.std_error * 1e4,
        tree_fee.bps(),
        est.paths
    );
    Ok(Output::ok(out))
}

//! Monte Carlo comparator in continuous time.
//!
//! The asset follows geometric Brownian motion. Fees and withdrawals are taken
//! once a year, at each anniversary, exactly as in the one-step-per-year
//! lattice, so only the path of the asset between anniversaries differs.
//!
//! Every random stream is a ChaCha8 stream selected by a counter: pricing path
//! `k` reads stream `k` of the pricing key, and the inner valuations behind a
//! hedge ratio read a stream addressed by `(outer path, rebalance index)`.
//! Normals come from the inverse normal CDF, so results depend only on the
//! seed and the configuration, never on thread scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::contract::{annuity_factor, ContractParams};
use crate::error::{Error, Result};
use crate::risk::{pairwise_sum, sample_risk_metrics, RiskReport};

const INNER_KEY: u64 = 0x9e37_79b9_7f4a_7c15;
const BOOTSTRAP_KEY: u64 = 0xd1b5_4a32_d192_ed03;

/// Market under which the annual-withdrawal contract is simulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmMarket {
    pub r: f64,
    pub sigma: f64,
    /// Physical drift used for the outer paths of the hedging study.
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Paths for pricing.
    pub n_paths: usize,
    pub seed: u64,
    /// Physical paths for the hedging study.
    pub outer_paths: usize,
    pub rebalance_per_year: usize,
    /// Account bump for the central-difference hedge ratio.
    pub bump: f64,
    /// Risk-neutral paths behind each hedge ratio.
    pub inner_paths: usize,
    pub antithetic: bool,
    /// Resamples for the bootstrap standard errors of the risk report.
    pub bootstrap: usize,
    /// Draw the inner paths in antithetic pairs.
    pub inner_antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_paths: 50_000,
            seed: 20_240_601,
            outer_paths: 500,
            rebalance_per_year: 52,
            bump: 1.0,
            inner_paths: 1000,
            antithetic: false,
            bootstrap: 200,
            inner_antithetic: false,
        }
    }
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || self.outer_paths == 0 || self.inner_paths == 0 {
            return Err(Error::param("paths", "path counts must be positive"));
        }
        if self.rebalance_per_year == 0 || self.rebalance_per_year > u16::MAX as usize / 64 {
            return Err(Error::param("rebalance_per_year", "must lie in 1..=1023"));
        }
        if !(self.bump > 0.0) {
            return Err(Error::param("bump", "must be positive"));
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return Err(Error::param("n_paths", "antithetic sampling needs an even path count"));
        }
        if self.inner_antithetic && self.inner_paths % 2 == 1 {
            return Err(Error::param("inner_paths", "antithetic sampling needs an even path count"));
        }
        Ok(())
    }
}

fn check_inputs(contract: &ContractParams, market: &GbmMarket) -> Result<()> {
    if contract.steps_per_year != 1 {
        return Err(Error::param("n", "the continuous comparator takes fees and withdrawals annually"));
    }
    if !(market.sigma >= 0.0) || !market.sigma.is_finite() {
        return Err(Error::param("sigma", "must be non-negative"));
    }
    if !market.r.is_finite() || !market.mu.is_finite() {
        return Err(Error::param("r", "rates must be finite"));
    }
    Ok(())
}

/// Standard normal stream over a ChaCha8 counter stream.
struct Normals {
    rng: ChaCha8Rng,
    dist: Normal,
}

impl Normals {
    fn new(key: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(stream);
        Normals { rng, dist: Normal::standard() }
    }

    fn next(&mut self) -> f64 {
        // uniform on the open interval (0, 1)
        let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        self.dist.inverse_cdf(u)
    }
}

/// Anniversary deduction: `(account after, fee, claim)`.
#[inline]
fn anniversary(w_pre: f64, keep: f64, withdrawal: f64) -> (f64, f64, f64) {
    let fee = w_pre * (1.0 - keep);
    let claim = (withdrawal - w_pre * keep).max(0.0);
    let w = w_pre * keep - withdrawal;
    (if w > 0.0 { w } else { 0.0 }, fee, claim)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Discounted terminal account `e^{-rT} W_T` on every pricing path (antithetic pairs averaged).
fn terminal_samples(contract: &ContractParams, market: &GbmMarket, config: &McConfig) -> Vec<f64> {
    let years = contract.steps;
    let keep = (-contract.alpha).exp();
    let drift = market.r - 0.5 * market.sigma * market.sigma;
    let disc = (-market.r * years as f64).exp();
    let roll = |zs: &[f64], sign: f64| {
        let mut w = contract.premium;
        for &z in zs {
            w *= (drift + sign * market.sigma * z).exp();
            w = anniversary(w, keep, contract.withdrawal).0;
        }
        disc * w
    };
    let draws = if config.antithetic { config.n_paths / 2 } else { config.n_paths };
    (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut normals = Normals::new(config.seed, k as u64);
            let zs: Vec<f64> = (0..years).map(|_| normals.next()).collect();
            if config.antithetic {
                0.5 * (roll(&zs, 1.0) + roll(&zs, -1.0))
            } else {
                roll(&zs, 1.0)
            }
        })
        .collect()
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = pairwise_sum(samples) / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&sq) / (n - 1.0) / n).sqrt())
}

/// Contract value `G a_N + e^{-rT} E[W_T]` under the pricing measure.
pub fn mc_price(contract: &ContractParams, market: &GbmMarket, config: &McConfig) -> Result<McEstimate> {
    check_inputs(contract, market)?;
    config.validate()?;
    let samples = terminal_samples(contract, market, config);
    let (mean, se) = mean_and_se(&samples);
    let guaranteed = contract.withdrawal * annuity_factor(contract.steps, market.r);
    Ok(McEstimate { value: guaranteed + mean, std_error: se, paths: config.n_paths })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McFairFee {
    pub alpha_star: f64,
    /// Standard error of `alpha_star`, from the value's standard error and the slope.
    pub std_error: f64,
    pub value_std_error: f64,
    pub iterations: usize,
}

/// Fair fee of the Monte Carlo price. Every evaluation reuses the same
/// normals, so the estimated value is monotone in the fee.
pub fn mc_fair_fee(contract: &ContractParams, market: &GbmMarket, config: &McConfig) -> Result<McFairFee> {
    check_inputs(contract, market)?;
    config.validate()?;
    let price = |alpha: f64| -> Result<McEstimate> { mc_price(&contract.with_alpha(alpha)?, market, config) };
    let premium = contract.premium;
    if price(0.0)?.value < premium {
        return Err(Error::InvalidBracket("value below premium at zero fee".into()));
    }
    let mut hi = 0.01;
    while price(hi)?.value >= premium {
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::InvalidBracket("no fee brings the value below the premium".into()));
        }
    }
    let mut lo = 0.0;
    let mut iterations = 0;
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if price(mid)?.value >= premium {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let alpha_star = 0.5 * (lo + hi);
    let at = price(alpha_star)?;
    let h = 1e-4;
    let slope = (price(alpha_star + h)?.value - price((alpha_star - h).max(0.0))?.value)
        / (alpha_star + h - (alpha_star - h).max(0.0));
    Ok(McFairFee {
        alpha_star,
        std_error: at.std_error / slope.abs(),
        value_std_error: at.std_error,
        iterations,
    })
}

/// `(V_t(lo), V_t(hi))` from `paths` risk-neutral paths shared by both accounts.
///
/// `t` lies in `[y, y + 1)` after the deduction of anniversary `y`, if any.
#[allow(clippy::too_many_arguments)]
fn bumped_values(
    contract: &ContractParams,
    market: &GbmMarket,
    t: f64,
    next_anniversary: usize,
    lo: f64,
    hi: f64,
    paths: usize,
    antithetic: bool,
    normals: &mut Normals,
) -> (f64, f64) {
    let years = contract.steps;
    let keep = (-contract.alpha).exp();
    let g = contract.withdrawal;
    let drift = market.r - 0.5 * market.sigma * market.sigma;
    let first = next_anniversary as f64 - t;
    let guaranteed: f64 = (next_anniversary..=years).map(|j| g * (-market.r * (j as f64 - t)).exp()).sum();
    let disc = (-market.r * (years as f64 - t)).exp();
    let (mut sum_lo, mut sum_hi) = (0.0, 0.0);
    let signs: &[f64] = if antithetic { &[1.0, -1.0] } else { &[1.0] };
    let mut zs = vec![0.0; years + 1 - next_anniversary];
    for _ in 0..paths / signs.len() {
        zs.iter_mut().for_each(|z| *z = normals.next());
        for &sign in signs {
            let (mut a, mut b) = (lo, hi);
            for (j, &z) in (next_anniversary..=years).zip(&zs) {
                let dt = if j == next_anniversary { first } else { 1.0 };
                let growth = (drift * dt + sign * market.sigma * dt.sqrt() * z).exp();
                a = anniversary(a * growth, keep, g).0;
                b = anniversary(b * growth, keep, g).0;
            }
            sum_lo += a;
            sum_hi += b;
        }
    }
    let n = paths as f64;
    (guaranteed + disc * sum_lo / n, guaranteed + disc * sum_hi / n)
}

/// Profits of one physical path under both strategies, and whether the account survived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgePath {
    pub profit_unhedged: f64,
    pub profit_hedged: f64,
    pub triggered: bool,
}

fn hedge_path(contract: &ContractParams, market: &GbmMarket, config: &McConfig, path: usize) -> HedgePath {
    let years = contract.steps;
    let per_year = config.rebalance_per_year;
    let h = 1.0 / per_year as f64;
    let keep = (-contract.alpha).exp();
    let g = contract.withdrawal;
    let step_growth = (market.r * h).exp();
    let drift = (market.mu - 0.5 * market.sigma * market.sigma) * h;
    let vol = market.sigma * h.sqrt();
    let mut outer = Normals::new(config.seed ^ INNER_KEY.rotate_left(17), path as u64);

    let (mut s, mut w) = (contract.premium, contract.premium);
    let (mut x_hedged, mut x_plain) = (0.0, 0.0);
    let mut triggered = false;
    for k in 0..years * per_year {
        let units = if w > 0.0 {
            let t = k as f64 * h;
            let next_anniversary = k / per_year + 1;
            let mut inner = Normals::new(config.seed ^ INNER_KEY, ((path as u64) << 16) | k as u64);
            let (up, down) = if w >= config.bump { (w + config.bump, w - config.bump) } else { (w + config.bump, w) };
            let (v_down, v_up) =
                bumped_values(contract, market, t, next_anniversary, down, up, config.inner_paths, config.inner_antithetic, &mut inner);
            // the rider is the contract less the account: dU/dW = dV/dW - 1
            let slope = (v_up - v_down) / (up - down) - 1.0;
            slope * w / s
        } else {
            0.0
        };
        let s_next = s * (drift + vol * outer.next()).exp();
        w *= s_next / s;
        x_hedged = (x_hedged - units * s) * step_growth + units * s_next;
        x_plain *= step_growth;
        s = s_next;
        if (k + 1) % per_year == 0 {
            let (after, fee, claim) = anniversary(w, keep, g);
            w = after;
            if w == 0.0 {
                triggered = true;
            }
            x_hedged += fee - claim;
            x_plain += fee - claim;
        }
    }
    let disc = (-market.r * years as f64).exp();
    HedgePath { profit_unhedged: disc * x_plain, profit_hedged: disc * x_hedged, triggered }
}

/// Bootstrap standard errors of a risk report's mean, SD and TVaR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskErrors {
    pub mean: f64,
    pub sd: f64,
    pub tvar_gamma: f64,
}

fn bootstrap_errors(samples: &[f64], gamma: f64, resamples: usize, key: u64) -> Result<RiskErrors> {
    if resamples < 2 {
        return Ok(RiskErrors { mean: 0.0, sd: 0.0, tvar_gamma: 0.0 });
    }
    let n = samples.len();
    let reports: Vec<RiskReport> = (0..resamples)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            rng.set_stream(b as u64);
            let draw: Vec<f64> = (0..n).map(|_| samples[(rng.next_u64() % n as u64) as usize]).collect();
            sample_risk_metrics(&draw, gamma)
        })
        .collect::<Result<_>>()?;
    let spread = |f: &dyn Fn(&RiskReport) -> f64| {
        let xs: Vec<f64> = reports.iter().map(f).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    Ok(RiskErrors { mean: spread(&|r| r.mean), sd: spread(&|r| r.sd), tvar_gamma: spread(&|r| r.tvar_gamma) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HedgeSimResult {
    pub paths: Vec<HedgePath>,
    pub no_hedge: RiskReport,
    pub no_hedge_errors: RiskErrors,
    pub weekly: RiskReport,
    pub weekly_errors: RiskErrors,
    /// Share of physical paths whose account survives to maturity.
    pub prob_never_triggered: f64,
}

/// Discrete delta hedging against no hedging on `outer_paths` physical paths.
///
/// At every rebalance the hedge holds `(W / S) dU/dW` units of the asset, with
/// `dU/dW` a central difference of inner Monte Carlo values at `W +- bump`
/// (one-sided when `W < bump`). Both strategies start from zero capital.
pub fn weekly_hedge_sim(
    contract: &ContractParams,
    market: &GbmMarket,
    config: &McConfig,
    gamma: f64,
) -> Result<HedgeSimResult> {
    check_inputs(contract, market)?;
    config.validate()?;
    let paths: Vec<HedgePath> =
        (0..config.outer_paths).into_par_iter().map(|k| hedge_path(contract, market, config, k)).collect();
    let plain: Vec<f64> = paths.iter().map(|p| p.profit_unhedged).collect();
    let hedged: Vec<f64> = paths.iter().map(|p| p.profit_hedged).collect();
    let survived = paths.iter().filter(|p| !p.triggered).count();
    Ok(HedgeSimResult {
        no_hedge: sample_risk_metrics(&plain, gamma)?,
        no_hedge_errors: bootstrap_errors(&plain, gamma, config.bootstrap, config.seed ^ BOOTSTRAP_KEY)?,
        weekly: sample_risk_metrics(&hedged, gamma)?,
        weekly_errors: bootstrap_errors(&hedged, gamma, config.bootstrap, config.seed ^ BOOTSTRAP_KEY)?,
        prob_never_triggered: survived as f64 / paths.len() as f64,
        paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn contract(alpha: f64) -> ContractParams {
        ContractParams::new(100.0, 0.10, alpha, 1).unwrap()
    }

    fn market(sigma: f64) -> GbmMarket {
        GbmMarket { r: 0.05, sigma, mu: 0.075 }
    }

    #[test]
    fn zero_volatility_is_deterministic() {
        let c = contract(0.0045);
        let cfg = McConfig { n_paths: 64, ..Default::default() };
        let est = mc_price(&c, &market(0.0), &cfg).unwrap();
        let keep = (-0.0045f64).exp();
        let mut w = 100.0;
        for _ in 0..10 {
            w = (w * 0.05f64.exp() * keep - 10.0).max(0.0);
        }
        let exact = 10.0 * annuity_factor(10, 0.05) + (-0.5f64).exp() * w;
        assert_relative_eq!(est.value, exact, epsilon = 1e-9);
        assert!(est.std_error < 1e-12);
    }

    #[test]
    fn fixed_seed_reproduces() {
        let c = contract(0.0045);
        let cfg = McConfig { n_paths: 2000, ..Default::default() };
        let a = mc_price(&c, &market(0.15), &cfg).unwrap();
        let b = mc_price(&c, &market(0.15), &cfg).unwrap();
        assert_eq!(a, b);
        let other = mc_price(&c, &market(0.15), &McConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.value, other.value);
    }

    #[test]
    fn antithetic_agrees_with_plain() {
        let c = contract(0.0045);
        let plain = mc_price(&c, &market(0.15), &McConfig { n_paths: 20_000, ..Default::default() }).unwrap();
        let anti =
            mc_price(&c, &market(0.15), &McConfig { n_paths: 20_000, antithetic: true, ..Default::default() })
                .unwrap();
        let combined = (plain.std_error.powi(2) + anti.std_error.powi(2)).sqrt();
        assert!((plain.value - anti.value).abs() < 3.0 * combined);
        assert!(anti.std_error < plain.std_error);
    }

    #[test]
    fn inner_values_shift_with_account() {
        let c = contract(0.0045);
        let mut normals = Normals::new(3, 0);
        let (lo, hi) = bumped_values(&c, &market(0.15), 2.5, 3, 60.0, 62.0, 400, false, &mut normals);
        assert!(hi > lo);
        // a unit of account is worth at most a unit of contract value
        assert!(hi - lo <= 2.0 + 1e-12);
    }

    #[test]
    fn rejects_sub_annual_contracts() {
        let c = ContractParams::new(100.0, 0.10, 0.0045, 2).unwrap();
        assert!(mc_price(&c, &market(0.15), &McConfig::default()).is_err());
        let bad = McConfig { antithetic: true, n_paths: 11, ..Default::default() };
        assert!(mc_price(&contract(0.0045), &market(0.15), &bad).is_err());
    }

    #[test]
    fn small_hedge_study_runs() {
        let cfg = McConfig { outer_paths: 6, inner_paths: 50, rebalance_per_year: 4, bootstrap: 10, ..Default::default() };
        let r = weekly_hedge_sim(&contract(0.0045), &market(0.15), &cfg, 0.1).unwrap();
        assert_eq!(r.paths.len(), 6);
        assert!(r.weekly.sd < r.no_hedge.sd);
        assert_eq!(r, weekly_hedge_sim(&contract(0.0045), &market(0.15), &cfg, 0.1).unwrap());
    }
}

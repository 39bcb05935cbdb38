//! The Cox-Ross-Rubinstein binomial market.
//!
//! Each step multiplies the asset by `u = exp(sigma * sqrt(dt))` or
//! `d = 1 / u`. Risk-neutral pricing uses `p = (exp(r dt) - d) / (u - d)`;
//! simulation under the physical measure uses a drift-matched `p_tilde`.

use crate::error::{Error, Result};

/// Which probability measure weights the up-moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    RiskNeutral,
    RealWorld,
}

/// Immutable per-step description of the binomial market.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeParams {
    pub sigma: f64,
    /// Continuously compounded risk-free rate per year.
    pub r: f64,
    /// Real-world drift per year, when a physical measure is attached.
    pub mu: Option<f64>,
    pub steps_per_year: u32,
    pub dt: f64,
    pub u: f64,
    pub d: f64,
    pub p: f64,
    pub p_tilde: Option<f64>,
}

/// Builds the CRR lattice for volatility `sigma`, rate `r` and `n` steps per year.
pub fn crr_params(sigma: f64, r: f64, n: u32) -> Result<LatticeParams> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", format!("must be positive, got {r}")));
    }
    if n == 0 {
        return Err(Error::param("n", "steps per year must be at least 1"));
    }
    let dt = 1.0 / n as f64;
    let u = (sigma * dt.sqrt()).exp();
    let d = (-sigma * dt.sqrt()).exp();
    let growth = (r * dt).exp();
    if !(0.0 < d && d < growth && growth < u) {
        return Err(Error::Arbitrage { d, growth, u });
    }
    let p = (growth - d) / (u - d);
    Ok(LatticeParams { sigma, r, mu: None, steps_per_year: n, dt, u, d, p, p_tilde: None })
}

/// Drift-matched physical up-probability `1/2 + (mu - sigma^2/2) sqrt(dt) / (2 sigma)`.
pub fn real_world_prob(mu: f64, sigma: f64, delta_t: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    if !(delta_t > 0.0) {
        return Err(Error::param("delta_t", format!("must be positive, got {delta_t}")));
    }
    let p_tilde = 0.5 + 0.5 * (mu - 0.5 * sigma * sigma) / sigma * delta_t.sqrt();
    if !(p_tilde > 0.0 && p_tilde < 1.0) {
        return Err(Error::ProbabilityOutOfRange { p_tilde });
    }
    Ok(p_tilde)
}

impl LatticeParams {
    /// Attaches a physical drift, validating the induced up-probability.
    pub fn with_drift(mut self, mu: f64) -> Result<Self> {
        let p_tilde = real_world_prob(mu, self.sigma, self.dt)?;
        self.mu = Some(mu);
        self.p_tilde = Some(p_tilde);
        Ok(self)
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// Per-step rate `r * dt`.
    pub fn r_bar(&self) -> f64 {
        self.r * self.dt
    }

    /// Up-probability under `measure`.
    pub fn up_prob(&self, measure: Measure) -> Result<f64> {
        match measure {
            Measure::RiskNeutral => Ok(self.p),
            Measure::RealWorld => self.p_tilde.ok_or_else(|| {
                Error::param("mu", "real-world measure requested but no drift was supplied")
            }),
        }
    }

    /// Asset value after `i` steps of which `j` were up-moves.
    pub fn asset_node(&self, s0: f64, horizon: usize, i: usize, j: usize) -> Result<f64> {
        if j > i || i > horizon {
            return Err(Error::IndexOutOfRange { step: i, ups: j, horizon });
        }
        Ok(s0 * self.u.powi(j as i32) * self.d.powi((i - j) as i32))
    }
}

//! Moments and tail measures of a discrete profit distribution.
//!
//! `VaR_g = -inf{x : F(x) > g}` on the step CDF. `TVaR_g` averages `-profit`
//! over the worst outcomes of total mass exactly `g`, taking only the needed
//! fraction of the atom at `-VaR_g`. The conditional mean over every atom at
//! or below `-VaR_g`, boundary atom in full, is reported alongside.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskReport {
    pub mean: f64,
    pub sd: f64,
    pub var_gamma: f64,
    pub tvar_gamma: f64,
    pub gamma: f64,
    /// `E[-profit | profit <= -VaR]`
    pub conditional_tail_loss: f64,
    /// Probability of `profit <= -VaR`.
    pub tail_mass: f64,
}

/// `x` to `decimals` places, printing values that round to zero without a sign.
pub fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

impl RiskReport {
    pub const CSV_HEADER: &'static str =
        "mean_currency,sd_currency,var_currency,tvar_currency,gamma_probability,conditional_tail_loss_currency,tail_mass_probability";

    pub fn csv_row(&self) -> String {
        [
            fixed(self.mean, 6),
            fixed(self.sd, 6),
            fixed(self.var_gamma, 6),
            fixed(self.tvar_gamma, 6),
            self.gamma.to_string(),
            fixed(self.conditional_tail_loss, 6),
            fixed(self.tail_mass, 6),
        ]
        .join(",")
    }
}

/// Sum in a fixed pairwise order, independent of how the slice was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

/// Sorted atoms `(profit, probability)` with equal profits merged.
fn atoms(profits: &[f64], probs: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = profits.iter().copied().zip(probs.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
    for (x, p) in pairs {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += p,
            _ => merged.push((x, p)),
        }
    }
    merged
}

/// Risk report of profits `profits[k]` occurring with probability `probs[k]`.
pub fn risk_metrics(profits: &[f64], probs: &[f64], gamma: f64) -> Result<RiskReport> {
    if profits.is_empty() || profits.len() != probs.len() {
        return Err(Error::InvalidDistribution);
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", format!("tail level must lie in (0, 1), got {gamma}")));
    }
    if probs.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::InvalidDistribution);
    }
    let total = pairwise_sum(probs);
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution);
    }

    let weighted: Vec<f64> = profits.iter().zip(probs).map(|(x, p)| x * p).collect();
    let mean = pairwise_sum(&weighted);
    let sq: Vec<f64> = profits.iter().zip(probs).map(|(x, p)| p * (x - mean) * (x - mean)).collect();
    let sd = pairwise_sum(&sq).sqrt();

    let atoms = atoms(profits, probs);
    let mut cumulative = 0.0;
    let mut cut = atoms.len() - 1;
    for (idx, &(_, p)) in atoms.iter().enumerate() {
        cumulative += p;
        if cumulative > gamma {
            cut = idx;
            break;
        }
    }
    let var_gamma = -atoms[cut].0;
    let below = &atoms[..cut];
    let below_mass: f64 = below.iter().map(|a| a.1).sum();
    let below_loss: f64 = below.iter().map(|a| -a.0 * a.1).sum();
    let tail_mass = below_mass + atoms[cut].1;
    let conditional_tail_loss = (below_loss + var_gamma * atoms[cut].1) / tail_mass;
    let tvar_gamma = (below_loss + var_gamma * (gamma - below_mass)) / gamma;
    Ok(RiskReport { mean, sd, var_gamma, tvar_gamma, gamma, conditional_tail_loss, tail_mass })
}

/// Risk report of equally likely samples.
pub fn sample_risk_metrics(samples: &[f64], gamma: f64) -> Result<RiskReport> {
    if samples.is_empty() {
        return Err(Error::InvalidDistribution);
    }
    let p = 1.0 / samples.len() as f64;
    let probs = vec![p; samples.len()];
    risk_metrics(samples, &probs, gamma)
}

/// Step CDF as CSV rows `x, F(x)`, one per distinct profit.
pub fn cdf_csv(profits: &[f64], probs: &[f64]) -> String {
    let mut out = String::from("x_currency,F_probability\n");
    let mut cumulative = 0.0;
    for (x, p) in atoms(profits, probs) {
        cumulative += p;
        let _ = writeln!(out, "{},{cumulative:.12}", fixed(x, 9));
    }
    out
}

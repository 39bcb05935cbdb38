//! Contract terms of a variable annuity carrying a GMWB rider.
//!
//! Each period the asset return is applied to the account, then the pro-rated
//! rider fee is deducted, then the guaranteed withdrawal `G` is paid. The
//! account is floored at zero; from then on withdrawals come from the rider.

use crate::error::{Error, Result};

/// Static withdrawal contract. Maturity is `T = 1/g` years and `N = T n` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractParams {
    pub premium: f64,
    /// Guaranteed withdrawal rate per year.
    pub g: f64,
    /// Rider fee rate per year.
    pub alpha: f64,
    pub steps_per_year: u32,
    pub maturity_years: f64,
    pub steps: usize,
    /// Per-step withdrawal `g P dt`, equal to `P / N`.
    pub withdrawal: f64,
    /// Per-step fee rate `alpha dt`.
    pub alpha_bar: f64,
}

impl ContractParams {
    pub fn new(premium: f64, g: f64, alpha: f64, steps_per_year: u32) -> Result<Self> {
        if !(premium > 0.0) || !premium.is_finite() {
            return Err(Error::param("premium", format!("must be positive, got {premium}")));
        }
        if !(g > 0.0 && g <= 1.0) {
            return Err(Error::param("g", format!("must lie in (0, 1], got {g}")));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::param("alpha", format!("must be non-negative, got {alpha}")));
        }
        if steps_per_year == 0 {
            return Err(Error::param("n", "steps per year must be at least 1"));
        }
        let maturity_years = 1.0 / g;
        let exact = maturity_years * steps_per_year as f64;
        let steps = exact.round();
        if (exact - steps).abs() > 1e-9 * steps.max(1.0) || steps < 1.0 {
            return Err(Error::NonIntegralSteps { maturity: maturity_years, steps_per_year });
        }
        let steps = steps as usize;
        let dt = 1.0 / steps_per_year as f64;
        Ok(ContractParams {
            premium,
            g,
            alpha,
            steps_per_year,
            maturity_years,
            steps,
            withdrawal: premium / steps as f64,
            alpha_bar: alpha * dt,
        })
    }

    /// Same contract with a different fee rate.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        ContractParams::new(self.premium, self.g, alpha, self.steps_per_year)
    }

    /// Fraction of the account kept after the fee, `exp(-alpha_bar)`.
    pub fn fee_keep(&self) -> f64 {
        (-self.alpha_bar).exp()
    }

    /// Account value after fee and withdrawal, `max(x e^{-alpha_bar} - G, 0)`.
    ///
    /// Returns the literal `0.0` when the floor binds, so callers may compare
    /// against zero exactly.
    pub fn post_step_account(&self, x_pre: f64) -> f64 {
        post_step(x_pre, self.fee_keep(), self.withdrawal)
    }

    /// Fee collected on a pre-deduction account value, `x (1 - e^{-alpha_bar})`.
    pub fn fee_amount(&self, x_pre: f64) -> f64 {
        x_pre * (1.0 - self.fee_keep())
    }

    /// Rider claim paid on a pre-deduction account value, `(G - x e^{-alpha_bar})^+`.
    pub fn claim_amount(&self, x_pre: f64) -> f64 {
        (self.withdrawal - x_pre * self.fee_keep()).max(0.0)
    }
}

#[inline]
pub(crate) fn post_step(x_pre: f64, keep: f64, withdrawal: f64) -> f64 {
    let w = x_pre * keep - withdrawal;
    if w > 0.0 {
        w
    } else {
        0.0
    }
}

/// Present value of `m` unit payments at the end of each of the next `m` steps,
/// `(1 - e^{-r_bar m}) / (e^{r_bar} - 1)`.
pub fn annuity_factor(m: usize, r_bar: f64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    (1.0 - (-r_bar * m as f64).exp()) / (r_bar.exp() - 1.0)
}

/// Contingent deferred sales charge, expanded to one rate per step.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrenderSchedule {
    annual: Vec<f64>,
    per_step: Vec<f64>,
}

impl SurrenderSchedule {
    /// Expands annual rates `k^a_0, k^a_1, ...` to per-step rates `k_i = k^a_{floor(i dt)}`.
    ///
    /// A list one entry short of `floor(T) + 1` is completed with a terminal zero.
    pub fn from_annual(annual: &[f64], contract: &ContractParams) -> Result<Self> {
        let years = contract.steps / contract.steps_per_year as usize;
        let mut annual = annual.to_vec();
        if annual.len() == years {
            annual.push(0.0);
        }
        if annual.len() < years + 1 {
            return Err(Error::InvalidSchedule(format!(
                "{} annual rates given, {} needed",
                annual.len(),
                years + 1
            )));
        }
        let n = contract.steps_per_year as usize;
        let per_step = (0..=contract.steps).map(|i| annual[i / n]).collect();
        let schedule = SurrenderSchedule { annual, per_step };
        schedule.validate()?;
        Ok(schedule)
    }

    /// Uses one rate per step `k_0..k_N` directly.
    pub fn from_per_step(per_step: Vec<f64>, contract: &ContractParams) -> Result<Self> {
        if per_step.len() != contract.steps + 1 {
            return Err(Error::InvalidSchedule(format!(
                "{} per-step rates given, {} needed",
                per_step.len(),
                contract.steps + 1
            )));
        }
        let schedule = SurrenderSchedule { annual: Vec::new(), per_step };
        schedule.validate()?;
        Ok(schedule)
    }

    /// Flat charge `rate` before maturity and zero at maturity.
    pub fn flat(rate: f64, contract: &ContractParams) -> Result<Self> {
        let mut per_step = vec![rate; contract.steps + 1];
        per_step[contract.steps] = 0.0;
        Self::from_per_step(per_step, contract)
    }

    /// Parses comma-separated annual percentages such as `"8,7,6,5,4,3,2,1,0,0"`.
    pub fn parse_percentages(text: &str, contract: &ContractParams) -> Result<Self> {
        let annual = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map(|pct| pct / 100.0)
                    .map_err(|e| Error::Parse(format!("surrender rate `{}`: {e}", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_annual(&annual, contract)
    }

    fn validate(&self) -> Result<()> {
        let k = &self.per_step;
        if k.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidSchedule("rates must lie in [0, 1]".into()));
        }
        if k.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidSchedule("rates must be non-increasing".into()));
        }
        if !(k[0] > 0.0) {
            return Err(Error::InvalidSchedule("initial charge must be positive".into()));
        }
        if *k.last().unwrap() != 0.0 {
            return Err(Error::InvalidSchedule("charge at maturity must be zero".into()));
        }
        Ok(())
    }

    /// Charge applied to a surrender at the end of step `i`.
    pub fn rate(&self, i: usize) -> f64 {
        self.per_step[i]
    }

    pub fn per_step(&self) -> &[f64] {
        &self.per_step
    }

    pub fn annual(&self) -> &[f64] {
        &self.annual
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn contract(alpha: f64) -> ContractParams {
        ContractParams::new(100.0, 0.10, alpha, 1).unwrap()
    }

    #[test]
    fn derived_quantities() {
        let c = ContractParams::new(100.0, 0.10, 0.0097, 4).unwrap();
        assert_eq!(c.steps, 40);
        assert_relative_eq!(c.withdrawal, 2.5);
        assert_relative_eq!(c.withdrawal * c.steps as f64, c.premium);
        assert_relative_eq!(c.alpha_bar, 0.0097 / 4.0);
        let c14 = ContractParams::new(100.0, 1.0 / 14.0, 0.004, 2).unwrap();
        assert_eq!(c14.steps, 28);
    }

    #[test]
    fn rejects_fractional_horizon() {
        assert!(matches!(
            ContractParams::new(100.0, 0.07, 0.01, 1),
            Err(Error::NonIntegralSteps { .. })
        ));
        assert!(ContractParams::new(100.0, 0.08, 0.01, 2).is_ok());
        assert!(ContractParams::new(100.0, 0.10, -0.01, 1).is_err());
    }

    #[test]
    fn post_step_values() {
        let mut c = contract(0.0);
        c.withdrawal = 10.0;
        assert_eq!(c.post_step_account(10.0), 0.0);
        assert_eq!(c.post_step_account(0.0), 0.0);
        let c = contract(0.0097);
        assert_relative_eq!(c.post_step_account(120.0), 108.841627190719, epsilon = 1e-10);
    }

    #[test]
    fn fee_values() {
        assert_eq!(contract(0.01).fee_amount(0.0), 0.0);
        assert_eq!(contract(0.0).fee_amount(123.0), 0.0);
        assert_relative_eq!(contract(0.01).fee_amount(100.0), 0.995016625083195, epsilon = 1e-12);
    }

    #[test]
    fn annuity_values() {
        assert_eq!(annuity_factor(0, 0.05), 0.0);
        assert_relative_eq!(annuity_factor(1, 0.05), (-0.05f64).exp(), epsilon = 1e-14);
        assert_relative_eq!(annuity_factor(10, 0.05), 7.67429152288160, epsilon = 1e-12);
    }

    #[test]
    fn schedule_expansion() {
        let c = ContractParams::new(100.0, 0.10, 0.01, 2).unwrap();
        let s = SurrenderSchedule::parse_percentages("8,7,6,5,4,3,2,1,0,0", &c).unwrap();
        assert_eq!(s.per_step().len(), 21);
        assert_relative_eq!(s.rate(0), 0.08);
        assert_relative_eq!(s.rate(1), 0.08);
        assert_relative_eq!(s.rate(2), 0.07);
        assert_relative_eq!(s.rate(15), 0.01);
        assert_eq!(s.rate(20), 0.0);
    }

    #[test]
    fn schedule_rejections() {
        let c = contract(0.01);
        assert!(SurrenderSchedule::parse_percentages("0,0,0,0,0,0,0,0,0,0", &c).is_err());
        assert!(SurrenderSchedule::parse_percentages("3,4,3,3,3,3,3,3,3,0", &c).is_err());
        assert!(SurrenderSchedule::parse_percentages("3,3,3,3,3,3,3,3,3,3,3", &c).is_err());
        assert!(SurrenderSchedule::parse_percentages("3,3", &c).is_err());
        assert!(SurrenderSchedule::parse_percentages("3,x,3", &c).is_err());
        let flat = SurrenderSchedule::flat(0.03, &c).unwrap();
        assert_eq!(flat.rate(9), 0.03);
        assert_eq!(flat.rate(10), 0.0);
    }

    proptest! {
        #[test]
        fn withdrawal_identity(y in 0.0f64..500.0, alpha in 0.0f64..0.2) {
            let c = contract(alpha);
            let keep = c.fee_keep();
            let lhs = c.post_step_account(y) + c.withdrawal
                - (c.withdrawal - y * keep).max(0.0)
                + y * (1.0 - keep);
            prop_assert!((lhs - y).abs() < 1e-10 * (1.0 + y));
            prop_assert!((c.fee_amount(y) + y * keep - y).abs() < 1e-12 * (1.0 + y));
        }

        #[test]
        fn post_step_monotone_lipschitz(a in 0.0f64..300.0, b in 0.0f64..300.0, alpha in 0.0f64..0.2) {
            let c = contract(alpha);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (wl, wh) = (c.post_step_account(lo), c.post_step_account(hi));
            prop_assert!(wl <= wh);
            prop_assert!(wh - wl <= (hi - lo) + 1e-12);
        }
    }
}

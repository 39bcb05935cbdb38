//! A contract priced on a lattice, with the per-step constants every engine needs.

use crate::contract::{annuity_factor, post_step, ContractParams};
use crate::error::{Error, Result};
use crate::lattice::{LatticeParams, Measure};

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub contract: ContractParams,
    pub lattice: LatticeParams,
    pub(crate) steps: usize,
    pub(crate) withdrawal: f64,
    /// `e^{-alpha_bar}`
    pub(crate) keep: f64,
    /// `e^{-r_bar}`
    pub(crate) disc: f64,
    pub(crate) u: f64,
    pub(crate) d: f64,
    pub(crate) p: f64,
    pub(crate) q: f64,
    /// `annuity[m] = a_m` for `m = 0..=N`
    pub(crate) annuity: Vec<f64>,
}

impl Model {
    pub fn new(contract: ContractParams, lattice: LatticeParams) -> Result<Self> {
        if contract.steps_per_year != lattice.steps_per_year {
            return Err(Error::param(
                "n",
                format!(
                    "contract uses {} steps/year but the lattice uses {}",
                    contract.steps_per_year, lattice.steps_per_year
                ),
            ));
        }
        let steps = contract.steps;
        let r_bar = lattice.r_bar();
        let annuity = (0..=steps).map(|m| annuity_factor(m, r_bar)).collect();
        Ok(Model {
            steps,
            withdrawal: contract.withdrawal,
            keep: contract.fee_keep(),
            disc: (-r_bar).exp(),
            u: lattice.u,
            d: lattice.d,
            p: lattice.p,
            q: lattice.q(),
            annuity,
            contract,
            lattice,
        })
    }

    /// Same model with fee rate `alpha`.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Model::new(self.contract.with_alpha(alpha)?, self.lattice.clone())
    }

    /// Same model with the up-probability replaced by the one under `measure`.
    ///
    /// Pricing identities only hold under the risk-neutral measure; this is for
    /// distributional questions such as trigger-time probabilities.
    pub(crate) fn under(&self, measure: Measure) -> Result<Self> {
        let mut m = self.clone();
        m.p = self.lattice.up_prob(measure)?;
        m.q = 1.0 - m.p;
        Ok(m)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn alpha(&self) -> f64 {
        self.contract.alpha
    }

    pub fn premium(&self) -> f64 {
        self.contract.premium
    }

    /// `w(x) = max(x e^{-alpha_bar} - G, 0)`
    #[inline]
    pub fn w(&self, x_pre: f64) -> f64 {
        post_step(x_pre, self.keep, self.withdrawal)
    }

    /// `a_m` at the per-step rate.
    #[inline]
    pub fn annuity(&self, m: usize) -> f64 {
        self.annuity[m]
    }

    pub(crate) fn claim(&self, x_pre: f64) -> f64 {
        (self.withdrawal - x_pre * self.keep).max(0.0)
    }

    pub(crate) fn fee(&self, x_pre: f64) -> f64 {
        x_pre * (1.0 - self.keep)
    }

    /// Asset value after `i` steps with `j` up-moves, starting from `S_0 = P`.
    pub fn asset_node(&self, i: usize, j: usize) -> Result<f64> {
        self.lattice.asset_node(self.contract.premium, self.steps, i, j)
    }
}

/// Builds a model from the usual scalar inputs.
pub fn model(premium: f64, g: f64, alpha: f64, r: f64, sigma: f64, n: u32) -> Result<Model> {
    let contract = ContractParams::new(premium, g, alpha, n)?;
    let lattice = crate::lattice::crr_params(sigma, r, n)?;
    Model::new(contract, lattice)
}

//! The full non-recombining tree held in memory, level by level.
//!
//! Node `b` of level `i` is the path whose first `i` moves are the bits of
//! `b`, step 1 in the most significant position, `1` for up. Its children are
//! `2b` (down) and `2b + 1` (up) at level `i + 1`. A complete path is a node
//! of level `N`, so path ids run over `0..2^N`.

use crate::contract::SurrenderSchedule;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::valuation::lapse::prefers_surrender;

/// Largest horizon the surface will materialize.
pub const SURFACE_LIMIT: usize = 20;

/// Node values for one contract, with or without a surrender schedule.
#[derive(Debug, Clone)]
pub struct ValueSurface {
    model: Model,
    schedule: Option<SurrenderSchedule>,
    /// Post-withdrawal account `W_i`.
    account: Vec<Vec<f64>>,
    /// Contract value `V_i`.
    value: Vec<Vec<f64>>,
    continuation: Vec<Vec<f64>>,
    /// Rider value `U_i` under the surrender schedule (if any).
    rider: Vec<Vec<f64>>,
    rider_continuation: Vec<Vec<f64>>,
    /// Rider value without surrenders.
    rider_no_lapse: Vec<Vec<f64>>,
    /// Value of the option to surrender.
    lapse_option: Vec<Vec<f64>>,
}

impl ValueSurface {
    pub fn build(model: &Model, schedule: Option<&SurrenderSchedule>) -> Result<Self> {
        let n = model.steps;
        if n > SURFACE_LIMIT {
            return Err(Error::EnumerationLimit { what: "value surface", steps: n, limit: SURFACE_LIMIT });
        }
        if let Some(k) = schedule {
            if k.per_step().len() != n + 1 {
                return Err(Error::InvalidSchedule(format!(
                    "schedule has {} steps, contract has {}",
                    k.per_step().len() - 1,
                    n
                )));
            }
        }
        let m = model;
        let mut account = Vec::with_capacity(n + 1);
        account.push(vec![m.premium()]);
        for i in 0..n {
            let prev: &Vec<f64> = &account[i];
            let mut next = vec![0.0; prev.len() * 2];
            for (b, &x) in prev.iter().enumerate() {
                next[2 * b] = m.w(x * m.d);
                next[2 * b + 1] = m.w(x * m.u);
            }
            account.push(next);
        }

        let mut value = vec![Vec::new(); n + 1];
        let mut continuation = vec![Vec::new(); n + 1];
        let mut rider = vec![Vec::new(); n + 1];
        let mut rider_continuation = vec![Vec::new(); n + 1];
        let mut rider_no_lapse = vec![Vec::new(); n + 1];
        let mut lapse_option = vec![Vec::new(); n + 1];
        value[n] = account[n].clone();
        continuation[n] = account[n].clone();
        rider[n] = vec![0.0; 1 << n];
        rider_continuation[n] = vec![0.0; 1 << n];
        rider_no_lapse[n] = vec![0.0; 1 << n];
        lapse_option[n] = vec![0.0; 1 << n];

        for i in (0..n).rev() {
            let width = 1usize << i;
            let (mut v, mut vc) = (vec![0.0; width], vec![0.0; width]);
            let (mut u, mut uc) = (vec![0.0; width], vec![0.0; width]);
            let (mut unl, mut l) = (vec![0.0; width], vec![0.0; width]);
            for b in 0..width {
                let x = account[i][b];
                let (down, up) = (2 * b, 2 * b + 1);
                let (xd, xu) = (x * m.d, x * m.u);
                let net_d = m.claim(xd) - m.fee(xd);
                let net_u = m.claim(xu) - m.fee(xu);
                vc[b] = (m.withdrawal + m.p * value[i + 1][up] + m.q * value[i + 1][down]) * m.disc;
                uc[b] = m.disc * (m.p * (rider[i + 1][up] + net_u) + m.q * (rider[i + 1][down] + net_d));
                unl[b] = m.disc
                    * (m.p * (rider_no_lapse[i + 1][up] + net_u) + m.q * (rider_no_lapse[i + 1][down] + net_d));
                let lc = m.disc * (m.p * lapse_option[i + 1][up] + m.q * lapse_option[i + 1][down]);
                match schedule {
                    Some(k) if i > 0 => {
                        let ki = k.rate(i);
                        v[b] = vc[b].max(x * (1.0 - ki));
                        u[b] = uc[b].max(-ki * x);
                        l[b] = lc.max(-unl[b] - ki * x);
                    }
                    _ => {
                        v[b] = vc[b];
                        u[b] = uc[b];
                        l[b] = lc;
                    }
                }
            }
            value[i] = v;
            continuation[i] = vc;
            rider[i] = u;
            rider_continuation[i] = uc;
            rider_no_lapse[i] = unl;
            lapse_option[i] = l;
        }

        Ok(ValueSurface {
            model: model.clone(),
            schedule: schedule.cloned(),
            account,
            value,
            continuation,
            rider,
            rider_continuation,
            rider_no_lapse,
            lapse_option,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn schedule(&self) -> Option<&SurrenderSchedule> {
        self.schedule.as_ref()
    }

    pub fn steps(&self) -> usize {
        self.model.steps
    }

    pub fn paths(&self) -> usize {
        1 << self.model.steps
    }

    /// Node of level `i` on the path `path_id`.
    #[inline]
    pub fn node_on_path(&self, path_id: usize, i: usize) -> usize {
        path_id >> (self.model.steps - i)
    }

    pub fn account(&self, i: usize, b: usize) -> f64 {
        self.account[i][b]
    }

    /// Account before fee and withdrawal at step `i >= 1`.
    pub fn account_pre(&self, i: usize, b: usize) -> f64 {
        assert!(i >= 1, "no deduction at inception");
        let parent = self.account[i - 1][b >> 1];
        parent * if b & 1 == 1 { self.model.u } else { self.model.d }
    }

    pub fn asset(&self, i: usize, b: usize) -> f64 {
        let ups = b.count_ones() as i32;
        self.model.premium() * self.model.u.powi(ups) * self.model.d.powi(i as i32 - ups)
    }

    pub fn value(&self, i: usize, b: usize) -> f64 {
        self.value[i][b]
    }

    pub fn continuation_value(&self, i: usize, b: usize) -> f64 {
        self.continuation[i][b]
    }

    pub fn rider(&self, i: usize, b: usize) -> f64 {
        self.rider[i][b]
    }

    pub fn rider_continuation(&self, i: usize, b: usize) -> f64 {
        self.rider_continuation[i][b]
    }

    pub fn rider_no_lapse(&self, i: usize, b: usize) -> f64 {
        self.rider_no_lapse[i][b]
    }

    pub fn lapse_option(&self, i: usize, b: usize) -> f64 {
        self.lapse_option[i][b]
    }

    /// Rider value just before the fee and withdrawal of step `i`.
    pub fn rider_pre(&self, i: usize, b: usize) -> f64 {
        let y = self.account_pre(i, b);
        self.rider[i][b] + self.model.claim(y) - self.model.fee(y)
    }

    /// Units of the asset held over step `i + 1` by the replicating portfolio.
    pub fn delta(&self, i: usize, b: usize) -> f64 {
        assert!(i < self.model.steps, "no position at maturity");
        let s = self.asset(i, b);
        (self.rider_pre(i + 1, 2 * b + 1) - self.rider_pre(i + 1, 2 * b)) / (s * (self.model.u - self.model.d))
    }

    /// Value the insurer may withdraw at `(i, b)` because the policyholder did not surrender.
    pub fn consumption(&self, i: usize, b: usize) -> f64 {
        self.rider[i][b] - self.rider_continuation[i][b]
    }

    /// Whether surrendering at `(i, b)` is optimal. Never at inception or maturity.
    pub fn surrender_optimal(&self, i: usize, b: usize) -> bool {
        match &self.schedule {
            Some(k) if i < self.model.steps => prefers_surrender(
                i,
                self.continuation[i][b],
                self.account[i][b] * (1.0 - k.rate(i)),
                self.model.premium(),
            ),
            _ => false,
        }
    }

    /// Steps along `path_id` at which surrender is optimal, followed by `N`.
    pub fn optimal_surrender_times(&self, path_id: usize) -> Vec<usize> {
        let n = self.model.steps;
        let mut times: Vec<usize> =
            (1..n).filter(|&i| self.surrender_optimal(i, self.node_on_path(path_id, i))).collect();
        times.push(n);
        times
    }

    /// First step at which the account along `path_id` is exhausted.
    pub fn trigger_time(&self, path_id: usize) -> Option<usize> {
        (1..=self.model.steps).find(|&i| self.account[i][self.node_on_path(path_id, i)] == 0.0)
    }

    /// `(i, b)` pairs of every node, level by level.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..=self.model.steps).flat_map(|i| (0..1usize << i).map(move |b| (i, b)))
    }
}

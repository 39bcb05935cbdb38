//! Reference scenarios with stored targets.
//!
//! Each table id names a fixed set of computations. Their results are
//! compared against `fixtures/targets.toml`, matched by `(table, id)`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Deserialize;

use crate::asian::Orientation;
use crate::contract::{ContractParams, SurrenderSchedule};
use crate::error::{Error, Result};
use crate::fair_fee::{contract_value, fair_fee, Engine, DEFAULT_EPSILON};
use crate::hedging::{exit_distribution, profit_distribution, ProfitOptions};
use crate::lattice::Measure;
use crate::model::{model, Model};
use crate::risk::risk_metrics;
use crate::valuation::nolapse::trigger_distribution;

pub const FIXTURES: &str = include_str!("../fixtures/targets.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Table {
    Table1,
    Table3,
    Table5,
    Table6,
    Table9,
    Table12,
    Table13,
}

impl Table {
    pub const ALL: [Table; 7] =
        [Table::Table1, Table::Table3, Table::Table5, Table::Table6, Table::Table9, Table::Table12, Table::Table13];

    pub fn id(self) -> &'static str {
        match self {
            Table::Table1 => "table1",
            Table::Table3 => "table3",
            Table::Table5 => "table5",
            Table::Table6 => "table6",
            Table::Table9 => "table9",
            Table::Table12 => "table12",
            Table::Table13 => "table13",
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Table {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Table::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| Error::Parse(format!("unknown table `{s}`; expected one of table1|3|5|6|9|12|13")))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Target {
    pub table: String,
    pub id: String,
    /// Absent when the scenario must be rejected.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub unit: String,
    pub source: String,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Fixtures {
    pub version: u32,
    #[serde(rename = "target")]
    pub targets: Vec<Target>,
}

impl Fixtures {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("fixtures: {e}")))
    }

    pub fn bundled() -> Self {
        Self::parse(FIXTURES).expect("bundled fixtures parse")
    }

    pub fn for_table(&self, table: Table) -> impl Iterator<Item = &Target> {
        self.targets.iter().filter(move |t| t.table == table.id())
    }
}

/// A computed cell: a value, or the domain error the scenario raised.
pub type Cell = std::result::Result<f64, Error>;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub target: Target,
    pub actual: Cell,
    pub pass: bool,
}

impl Check {
    fn new(target: Target, actual: Cell) -> Self {
        let pass = match (&actual, target.value) {
            (Ok(a), Some(v)) => (a - v).abs() <= target.tolerance + 1e-12,
            (Err(_), None) => true,
            _ => false,
        };
        Check { target, actual, pass }
    }

    /// One line: status, id, target, actual, difference and tolerance.
    pub fn line(&self) -> String {
        let t = &self.target;
        let status = if self.pass { "PASS" } else { "FAIL" };
        let expected = t.value.map_or_else(|| "error".to_string(), |v| format!("{v}"));
        match (&self.actual, t.value) {
            (Ok(a), Some(v)) => format!(
                "{status} {}/{} target={expected} actual={a:.4} diff={:+.4} tol={} {}",
                t.table,
                t.id,
                a - v,
                t.tolerance,
                t.unit
            ),
            (Ok(a), None) => {
                format!("{status} {}/{} target={expected} actual={a:.4} {}", t.table, t.id, t.unit)
            }
            (Err(e), _) => format!("{status} {}/{} target={expected} actual=error({e})", t.table, t.id),
        }
    }
}

/// Runs every scenario of `table` and checks it against `fixtures`.
pub fn reproduce(table: Table, fixtures: &Fixtures) -> Result<Vec<Check>> {
    let cells = compute(table)?;
    let mut checks = Vec::new();
    for target in fixtures.for_table(table) {
        let actual = cells
            .iter()
            .find(|(id, _)| *id == target.id)
            .map(|(_, c)| c.clone())
            .ok_or_else(|| Error::Parse(format!("no scenario `{}` in {table}", target.id)))?;
        checks.push(Check::new(target.clone(), actual));
    }
    Ok(checks)
}

/// Text report: one line per check, then a summary line.
pub fn report(table: Table, fixtures: &Fixtures, checks: &[Check]) -> String {
    let mut out = format!("# reproduce {table} (fixtures version {})\n", fixtures.version);
    for c in checks {
        let _ = writeln!(out, "{}", c.line());
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let _ = writeln!(out, "{table}: {passed}/{} passed", checks.len());
    out
}

fn bps(alpha: Result<f64>) -> Cell {
    alpha.map(|a| a * 1e4)
}

fn alpha_star(m: &Model, sched: Option<&SurrenderSchedule>, engine: Engine) -> Result<f64> {
    Ok(fair_fee(m, sched, engine, DEFAULT_EPSILON)?.alpha_star)
}

fn with_drift(m: &Model, mu: f64) -> Result<Model> {
    let lattice = m.lattice.clone().with_drift(mu)?;
    Model::new(m.contract.clone(), lattice)
}

/// Per-step charges `k_1..k_{N-1} = c`, `k_0 = max(c, 1%)`, `k_N = 0`.
fn flat_from_step_one(c: f64, contract: &ContractParams) -> Result<SurrenderSchedule> {
    let n = contract.steps;
    let per_step = (0..=n).map(|i| if i == 0 { c.max(0.01) } else if i == n { 0.0 } else { c }).collect();
    SurrenderSchedule::from_per_step(per_step, contract)
}

/// Per-step charges `k_i = max(top - i%, 0)` for `i >= 1`, and `k_0 = top`.
fn declining(top: f64, contract: &ContractParams) -> Result<SurrenderSchedule> {
    let per_step = (0..=contract.steps).map(|i| (top - 0.01 * i as f64).max(0.0)).collect();
    SurrenderSchedule::from_per_step(per_step, contract)
}

fn compute(table: Table) -> Result<Vec<(String, Cell)>> {
    let mut cells: Vec<(String, Cell)> = Vec::new();
    let mut push = |id: String, c: Cell| cells.push((id, c));
    match table {
        Table::Table1 => {
            for n in 1..=3 {
                let m = model(100.0, 0.10, 0.0, 0.05, 0.20, n)?;
                push(format!("alpha_star_n{n}"), bps(alpha_star(&m, None, Engine::Tree)));
            }
        }
        Table::Table3 => {
            let engine = Engine::Asian(Orientation::HighestFirst);
            for n in [1, 2, 3, 5] {
                let m = model(100.0, 0.10, 0.0, 0.05, 0.20, n)?;
                push(format!("alpha_star_n{n}"), bps(alpha_star(&m, None, engine)));
            }
            let m = model(100.0, 0.10, 0.00973, 0.05, 0.20, 1)?;
            push("v0_alpha97.3_n1".into(), contract_value(&m, None, engine));
        }
        Table::Table5 => {
            for mu in [4u32, 6, 8, 10, 12] {
                for sigma in [10u32, 15, 18, 25] {
                    for (n, dt) in [(2u32, "0.5"), (1, "1")] {
                        let cell = (|| {
                            let m = model(100.0, 1.0 / 14.0, 0.004, 0.05, sigma as f64 / 100.0, n)?;
                            let m = with_drift(&m, mu as f64 / 100.0)?;
                            Ok(trigger_distribution(&m, Measure::RealWorld)?.finite() * 100.0)
                        })();
                        push(format!("mu{mu:02}_sigma{sigma}_dt{dt}"), cell);
                    }
                }
            }
        }
        Table::Table6 => {
            for sigma in [15u32, 30] {
                let m = model(100.0, 0.10, 0.0, 0.05, sigma as f64 / 100.0, 1)?;
                let alpha = alpha_star(&m, None, Engine::Tree)?;
                let m = with_drift(&m.with_alpha(alpha)?, 0.075)?;
                let outcomes = profit_distribution(&m, None, ProfitOptions::default())?;
                let profits: Vec<f64> = outcomes.iter().map(|o| o.profit_unhedged).collect();
                let probs: Vec<f64> = outcomes.iter().map(|o| o.probability).collect();
                let r = risk_metrics(&profits, &probs, 0.10)?;
                push(format!("mean_sigma{sigma}"), Ok(r.mean));
                push(format!("sd_sigma{sigma}"), Ok(r.sd));
                push(format!("tvar10_sigma{sigma}"), Ok(r.tvar_gamma));
            }
        }
        Table::Table9 => {
            for n in [1, 2] {
                let m = model(100.0, 0.10, 0.0, 0.05, 0.20, n)?;
                let k = SurrenderSchedule::flat(0.03, &m.contract)?;
                push(format!("alpha_star_tree_n{n}"), bps(alpha_star(&m, Some(&k), Engine::Tree)));
                let engine = Engine::Asian(Orientation::HighestFirst);
                push(format!("alpha_star_asian_n{n}"), bps(alpha_star(&m, Some(&k), engine)));
            }
        }
        Table::Table12 => {
            let m = model(100.0, 0.10, 0.0, 0.05, 0.25, 1)?;
            push("alpha_star_no_lapse".into(), bps(alpha_star(&m, None, Engine::Tree)));
            for (id, c) in [("k0", 0.0), ("k1", 0.01), ("k3", 0.03), ("k5", 0.05), ("k7", 0.07), ("k8", 0.08), ("k8.38", 0.0838)]
            {
                let k = flat_from_step_one(c, &m.contract)?;
                push(format!("alpha_star_{id}"), bps(alpha_star(&m, Some(&k), Engine::Tree)));
            }
            for (id, top) in [("k10_minus_i", 0.10), ("k9_minus_i", 0.09)] {
                let k = declining(top, &m.contract)?;
                push(format!("alpha_star_{id}"), bps(alpha_star(&m, Some(&k), Engine::Tree)));
            }
        }
        Table::Table13 => {
            let base = model(100.0, 0.10, 0.0, 0.05, 0.25, 1)?;
            let k = declining(0.09, &base.contract)?;
            let n = base.steps();
            for (label, sched) in [("no_lapse", None), ("lapse", Some(&k))] {
                let alpha = alpha_star(&base, sched, Engine::Tree)?;
                let m = with_drift(&base.with_alpha(alpha)?, 0.075)?;
                let outcomes = profit_distribution(&m, sched, ProfitOptions::default())?;
                let d = exit_distribution(&outcomes, n);
                for i in 3..=n {
                    push(format!("{label}_tau{i}"), Ok(d.trigger[i] * 100.0));
                }
                push(format!("{label}_tau_inf"), Ok(d.never * 100.0));
                if sched.is_some() {
                    for i in 3..=n {
                        push(format!("{label}_eta{i}"), Ok(d.surrender[i] * 100.0));
                    }
                    let tau: f64 = d.trigger.iter().sum::<f64>() + d.never;
                    push(format!("{label}_sum_tau"), Ok(tau * 100.0));
                    push(format!("{label}_sum_eta"), Ok(d.surrender.iter().sum::<f64>() * 100.0));
                }
            }
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_cover_every_table() {
        let f = Fixtures::bundled();
        assert!(f.version >= 1);
        for t in Table::ALL {
            assert!(f.for_table(t).count() > 0, "{t} has no targets");
        }
        assert!(f.targets.iter().all(|t| t.tolerance > 0.0));
    }

    #[test]
    fn table_ids_round_trip() {
        for t in Table::ALL {
            assert_eq!(t.id().parse::<Table>().unwrap(), t);
        }
        assert!("table2".parse::<Table>().is_err());
    }

    #[test]
    fn missing_value_expects_error() {
        let target = Target {
            table: "table5".into(),
            id: "x".into(),
            value: None,
            tolerance: 0.1,
            unit: "percent".into(),
            source: "published".into(),
            note: None,
        };
        assert!(Check::new(target.clone(), Err(Error::ProbabilityOutOfRange { p_tilde: 1.1 })).pass);
        assert!(!Check::new(target, Ok(0.0)).pass);
    }
}

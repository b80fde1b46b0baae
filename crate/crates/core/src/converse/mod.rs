//! Finite-blocklength certification of the converse argument.
//!
//! Every inequality of the chain is evaluated with exact enumerated
//! quantities on a concrete system and reported as a [`Record`] with its two
//! sides and slack. The asymptotic reliability/security premises are replaced
//! by a finite-`n` surrogate: `epsilon` and `delta` are budgets that the
//! system's exact error probability and leakage must meet, and by default
//! they are set to the achieved values themselves.

mod checks;
mod tilde;
mod typical;

use std::fmt;

use serde::Serialize;

pub use checks::{
    check_entropy_bounds, check_mi_conditioning, check_probability_bounds, check_rate_key_bounds,
    check_typical_mass, rates_on_sum_line, run_all, Premises,
};
pub use tilde::{build_tilde, check_direct_law, TildeAtom, TildeEnsemble};
pub use typical::{build_typical, is_typical, TypicalSets, TYPICAL_TOL};

use crate::{Error, Result};

/// A record passes when its slack is at least `-SLACK_TOL`.
pub const SLACK_TOL: f64 = 1e-9;

/// Default cap on the admissible leakage, in bits.
pub const DEFAULT_DELTA0: f64 = 1.0;

/// Default typicality slack, in bits.
pub const DEFAULT_GAMMA: f64 = 0.2;

/// Typicality slack and the reliability/security budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypicalParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub delta0: f64,
}

impl TypicalParams {
    /// Requires `gamma > 0`, `0 <= epsilon < 1` and `0 <= delta <= delta0`.
    ///
    /// `epsilon = 0` is accepted so that error-free systems can be certified
    /// with their achieved error probability as the budget.
    pub fn new(gamma: f64, epsilon: f64, delta: f64, delta0: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::Domain(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        if !(delta >= 0.0 && delta <= delta0) {
            return Err(Error::Domain(format!(
                "delta must lie in [0, delta0 = {delta0}], got {delta}"
            )));
        }
        Ok(Self {
            gamma,
            epsilon,
            delta,
            delta0,
        })
    }
}

/// `(1/n) [delta / (1 - nu_bar) + log2 (1 / (1 - nu_bar))]` with
/// `nu_bar = nu + epsilon`.
pub fn zeta(params: &TypicalParams, n: usize, nu: f64) -> Result<f64> {
    zeta_raw(n, nu + params.epsilon, params.delta)
}

pub(crate) fn zeta_raw(n: usize, nu_bar: f64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("blocklength must be positive".into()));
    }
    if nu_bar >= 1.0 {
        return Err(Error::Undefined(format!(
            "nu + epsilon = {nu_bar} >= 1 leaves no typical-decodable mass"
        )));
    }
    let keep = 1.0 - nu_bar;
    Ok((delta / keep - keep.log2()) / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
        })
    }
}

/// One evaluated inequality `lhs (<= | >=) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub name: String,
    pub lhs: f64,
    pub relation: Relation,
    pub rhs: f64,
    /// `rhs - lhs` for `<=`, `lhs - rhs` for `>=`.
    pub slack: f64,
    pub pass: bool,
}

impl Record {
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name.into(), lhs, Relation::Le, rhs)
    }

    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name.into(), lhs, Relation::Ge, rhs)
    }

    fn new(name: String, lhs: f64, relation: Relation, rhs: f64) -> Self {
        let slack = match relation {
            Relation::Le => rhs - lhs,
            Relation::Ge => lhs - rhs,
        };
        // NaN slacks fail.
        let pass = slack >= -SLACK_TOL;
        Self {
            name,
            lhs,
            relation,
            rhs,
            slack,
            pass,
        }
    }
}

/// Evaluated inequalities plus the premise status of the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseReport {
    pub records: Vec<Record>,
    /// False when the system does not meet the premises; the records are then
    /// informational and no failure counts as a violation.
    pub premises_met: bool,
    pub notes: Vec<String>,
    /// Named scalars of the run (achieved error probability, leakage,
    /// budgets, masses), in evaluation order.
    pub quantities: Vec<(String, f64)>,
}

impl ConverseReport {
    pub fn new(records: Vec<Record>) -> Self {
        Self {
            records,
            premises_met: true,
            notes: Vec::new(),
            quantities: Vec::new(),
        }
    }

    pub fn premises_unmet(note: impl Into<String>) -> Self {
        Self {
            records: Vec::new(),
            premises_met: false,
            notes: vec![note.into()],
            quantities: Vec::new(),
        }
    }

    pub fn extend(&mut self, other: ConverseReport) {
        self.records.extend(other.records);
        self.premises_met &= other.premises_met;
        self.notes.extend(other.notes);
        self.quantities.extend(other.quantities);
    }

    pub fn quantity(&self, name: &str) -> Option<f64> {
        self.quantities
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| *v)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Record> {
        let counted = self.premises_met;
        self.records.iter().filter(move |r| counted && !r.pass)
    }

    /// True unless some record fails while the premises hold.
    pub fn pass(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn min_slack(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.slack)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn status(&self) -> &'static str {
        if !self.premises_met {
            "premises unmet"
        } else if self.pass() {
            "pass"
        } else {
            "violation"
        }
    }

    pub fn get(&self, name: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.name == name)
    }
}

impl fmt::Display for ConverseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "status: {}", self.status())?;
        for r in &self.records {
            writeln!(
                f,
                "  [{}] {}: {:.9} {} {:.9} (slack {:.3e})",
                if r.pass { "ok" } else { "FAIL" },
                r.name,
                r.lhs,
                r.relation,
                r.rhs,
                r.slack
            )?;
        }
        for note in &self.notes {
            writeln!(f, "  note: {note}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zeta_examples() {
        let p = TypicalParams::new(0.2, 0.1, 0.1, 1.0).unwrap();
        let expected = (0.1 / 0.9 + (1.0f64 / 0.9).log2()) / 10.0;
        assert_abs_diff_eq!(zeta(&p, 10, 0.0).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(zeta(&p, 10, 0.0).unwrap(), 0.026312, epsilon = 1e-6);
        assert_abs_diff_eq!(
            zeta(&p, 20, 0.0).unwrap(),
            zeta(&p, 10, 0.0).unwrap() / 2.0,
            epsilon = 1e-16
        );
        let zero = TypicalParams::new(0.2, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(zeta(&zero, 5, 0.0).unwrap(), 0.0);
        assert!(matches!(zeta(&p, 10, 0.95), Err(Error::Undefined(_))));
    }

    #[test]
    fn params_validation() {
        assert!(TypicalParams::new(0.0, 0.1, 0.1, 1.0).is_err());
        assert!(TypicalParams::new(0.2, 1.0, 0.1, 1.0).is_err());
        assert!(TypicalParams::new(0.2, 0.1, 1.5, 1.0).is_err());
        assert!(TypicalParams::new(0.2, 0.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn record_slack_signs() {
        assert!(Record::le("a", 1.0, 1.0 - 5e-10).pass);
        assert!(!Record::le("a", 1.0, 0.99).pass);
        assert_eq!(Record::ge("b", 3.0, 1.0).slack, 2.0);
        assert!(!Record::ge("c", f64::NAN, 1.0).pass);
        let mut rep = ConverseReport::new(vec![Record::le("x", 2.0, 1.0)]);
        assert!(!rep.pass());
        rep.premises_met = false;
        assert!(rep.pass());
        assert_eq!(rep.status(), "premises unmet");
    }
}

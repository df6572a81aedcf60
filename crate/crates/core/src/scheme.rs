//! Named allocation schemes behind one trait, so the simulator can run any
//! registered subset on the same channel draws.

use crate::baseline::solve_baseline;
use crate::error::{Error, Result};
use crate::inner::{Allocation, InnerOptions, InnerProblemData, KktReport};
use crate::outer::{self, OuterOptions, OuterStatus};

/// What a scheme returns for one instance.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub allocation: Allocation,
    pub outer_iterations: usize,
    pub rank_ratio: f64,
    pub kkt: KktReport,
    /// Proposed-scheme details, absent for one-shot schemes.
    pub outer: Option<outer::OuterResult>,
}

pub trait AllocationScheme: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(&self, data: &InnerProblemData) -> Result<SchemeOutcome>;
}

/// Damped-Newton outer loop with the non-linear model.
#[derive(Debug, Clone, Default)]
pub struct Proposed {
    pub opts: OuterOptions,
}

impl AllocationScheme for Proposed {
    fn name(&self) -> &'static str {
        "proposed"
    }

    fn solve(&self, data: &InnerProblemData) -> Result<SchemeOutcome> {
        let res = outer::run(data, &self.opts)?;
        if res.status != OuterStatus::Converged {
            return Err(Error::NotConverged(format!(
                "outer loop {:?} after {} iterations at |phi| = {:.3e}",
                res.status,
                res.iterations(),
                res.state.norm_inf()
            )));
        }
        res.recovery.ensure_rank_one(self.opts.inner.rank_tol)?;
        Ok(SchemeOutcome {
            allocation: res.allocation.clone(),
            outer_iterations: res.iterations(),
            rank_ratio: res.recovery.rank_ratio,
            kkt: res.kkt.clone(),
            outer: Some(res),
        })
    }
}

/// Linear-model optimum evaluated with the non-linear model.
#[derive(Debug, Clone, Default)]
pub struct Baseline {
    pub opts: InnerOptions,
}

impl AllocationScheme for Baseline {
    fn name(&self) -> &'static str {
        "baseline"
    }

    fn solve(&self, data: &InnerProblemData) -> Result<SchemeOutcome> {
        let res = solve_baseline(data, &self.opts)?;
        res.recovery.ensure_rank_one(self.opts.rank_tol)?;
        Ok(SchemeOutcome {
            allocation: res.allocation,
            outer_iterations: 0,
            rank_ratio: res.recovery.rank_ratio,
            kkt: res.kkt,
            outer: None,
        })
    }
}

pub struct SchemeRegistry {
    schemes: Vec<Box<dyn AllocationScheme>>,
}

impl SchemeRegistry {
    pub fn new() -> Self {
        Self {
            schemes: Vec::new(),
        }
    }

    /// Registers a scheme; a later scheme with the same name replaces the
    /// earlier one in place.
    pub fn register(&mut self, scheme: Box<dyn AllocationScheme>) {
        match self.schemes.iter().position(|s| s.name() == scheme.name()) {
            Some(k) => self.schemes[k] = scheme,
            None => self.schemes.push(scheme),
        }
    }

    pub fn get(&self, name: &str) -> Option<&dyn AllocationScheme> {
        self.schemes
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.schemes.iter().map(|s| s.name()).collect()
    }

    /// Schemes for a selector: a registered name, or `both` for every
    /// registered scheme in registration order.
    pub fn select(&self, selector: &str) -> Result<Vec<&dyn AllocationScheme>> {
        if selector == "both" {
            return Ok(self.schemes.iter().map(|s| s.as_ref()).collect());
        }
        self.get(selector).map(|s| vec![s]).ok_or_else(|| {
            Error::Config(format!(
                "unknown scheme {selector:?}; known: {}",
                self.names().join(", ")
            ))
        })
    }
}

impl Default for SchemeRegistry {
    /// `proposed` and `baseline`.
    fn default() -> Self {
        let mut r = Self::new();
        r.register(Box::new(Proposed::default()));
        r.register(Box::new(Baseline::default()));
        r
    }
}

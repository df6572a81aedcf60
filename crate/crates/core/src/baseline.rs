//! Linear-model baseline: maximize `sum_j eta_j Tr((W + V) G_j G_j^H)` over
//! the same relaxed set, then rebuild a rank-one beamformer with the weighted
//! received power held as a floor.

use crate::error::{Error, Result};
use crate::inner::{
    certified_recovery, solve_linear, Allocation, InnerOptions, InnerProblemData, KktReport,
    PowerFloor, Recovery, CONSTRAINT_MARGIN,
};

/// Conversion efficiency used by the baseline objective.
pub const BASELINE_ETA: f64 = 0.8;

/// Initial relative back-off of the weighted floor; the linear optimum sits
/// on the boundary of the relaxed set.
pub const FLOOR_BACKOFF: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub allocation: Allocation,
    pub relaxed: Allocation,
    /// `sum_j eta_j P_j` of the relaxed optimum.
    pub linear_objective: f64,
    pub recovery: Recovery,
    pub kkt: KktReport,
}

pub fn solve_baseline(data: &InnerProblemData, opts: &InnerOptions) -> Result<BaselineResult> {
    solve_baseline_with(data, &vec![BASELINE_ETA; data.j()], opts)
}

/// Baseline with explicit per-receiver efficiencies.
pub fn solve_baseline_with(
    data: &InnerProblemData,
    eta: &[f64],
    opts: &InnerOptions,
) -> Result<BaselineResult> {
    data.validate()?;
    if eta.len() != data.j() || eta.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::Validation(format!(
            "expected {} non-negative efficiencies",
            data.j()
        )));
    }
    let data = &data.tightened(CONSTRAINT_MARGIN);
    let relaxed = solve_linear(data, eta, opts)?;
    let linear_objective: f64 = eta.iter().zip(&relaxed.tau).map(|(e, t)| e * t).sum();
    let floor = PowerFloor::Weighted {
        weights: eta.to_vec(),
        total: linear_objective,
    };
    let (recovery, kkt) = certified_recovery(data, &floor, &relaxed, FLOOR_BACKOFF, opts)?;
    Ok(BaselineResult {
        allocation: recovery.allocation.clone(),
        relaxed,
        linear_objective,
        recovery,
        kkt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, trial_rng, ScenarioConfig};
    use crate::inner::constraint_violation;
    use crate::metrics::harvested_report;
    use crate::outer::{run, OuterOptions};

    fn scenario(seed: u64) -> InnerProblemData {
        let cfg = ScenarioConfig::default();
        let chan = sample_channel(&cfg, &mut trial_rng(seed, 0)).unwrap();
        InnerProblemData::from_scenario(&cfg, chan).unwrap()
    }

    #[test]
    fn baseline_is_feasible_and_rank_one() {
        let data = scenario(1);
        let opts = InnerOptions::default();
        let res = solve_baseline(&data, &opts).unwrap();
        assert!(res.recovery.rank_ok);
        assert!(constraint_violation(&data, &res.allocation.w_mat, &res.allocation.v) <= 1e-6);
        let got: f64 = res.allocation.tau.iter().map(|t| BASELINE_ETA * t).sum();
        assert!(got >= res.linear_objective * (1.0 - res.recovery.backoff) * (1.0 - 1e-7));
        assert!(res.recovery.backoff <= 1e-4);
    }

    #[test]
    fn dominance_in_each_own_metric() {
        let data = scenario(4);
        let opts = OuterOptions::default();
        let base = solve_baseline(&data, &opts.inner).unwrap();
        let prop = run(&data, &opts).unwrap();
        let lin = |a: &Allocation| a.tau.iter().map(|t| BASELINE_ETA * t).sum::<f64>();
        assert!(lin(&base.allocation) >= lin(&prop.allocation) * (1.0 - 1e-5));
        let nl = |a: &Allocation| harvested_report(a, &data.channel, &data.eh).total_nonlinear;
        assert!(nl(&base.allocation) <= nl(&prop.allocation) * (1.0 + 1e-4));
    }

    #[test]
    fn zero_efficiency_returns_a_feasible_point() {
        let data = scenario(2);
        let res =
            solve_baseline_with(&data, &vec![0.0; data.j()], &InnerOptions::default()).unwrap();
        assert!(constraint_violation(&data, &res.allocation.w_mat, &res.allocation.v) <= 1e-6);
        assert!(solve_baseline_with(&data, &[0.8], &InnerOptions::default()).is_err());
    }
}

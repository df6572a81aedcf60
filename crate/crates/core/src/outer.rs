//! Damped-Newton iteration on the sum-of-ratios parameters `(mu, beta)`.
//!
//! At the fixed point every ER satisfies
//!
//! ```text
//! beta_j d_j(P_j) - M_j = 0,     mu_j d_j(P_j) - 1 = 0,     d_j(p) = 1 + exp(-a_j (p - b_j))
//! ```
//!
//! with `P_j` the received power of the inner solution at `(mu, beta)`. The
//! Jacobian is taken with `P` held fixed, so it is diagonal with entries
//! `d_j(P_j) >= 1`.

use std::io::Write;

use crate::eh::{psi, EhParams};
use crate::error::{Error, Result};
use crate::inner::{
    certified_recovery, floor_backoff, solve_inner, Allocation, FwState, InnerOptions,
    InnerProblemData, KktReport, PowerFloor, Recovery, CONSTRAINT_MARGIN,
};

#[derive(Debug, Clone)]
pub struct OuterOptions {
    /// Step shrink factor of the line search.
    pub epsilon: f64,
    /// Sufficient-decrease constant.
    pub eta: f64,
    /// Line-search trials per iteration.
    pub l_max: usize,
    /// Stopping tolerance on `|phi|_inf`.
    pub outer_tol: f64,
    pub max_iter: usize,
    /// Evaluate both update signs on the first iteration and record them.
    pub record_sign_probe: bool,
    pub inner: InnerOptions,
}

impl Default for OuterOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            eta: 0.1,
            l_max: 30,
            outer_tol: 1e-8,
            max_iter: 50,
            record_sign_probe: cfg!(debug_assertions),
            inner: InnerOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterState {
    pub mu: Vec<f64>,
    pub beta: Vec<f64>,
    /// `beta` residuals first, then `mu` residuals.
    pub phi: Vec<f64>,
    pub iter: usize,
    pub p_er: Vec<f64>,
}

impl OuterState {
    pub fn new(mu: Vec<f64>, beta: Vec<f64>, p_er: Vec<f64>, eh: &[EhParams]) -> Self {
        let phi = residual(&mu, &beta, &p_er, eh);
        Self {
            mu,
            beta,
            phi,
            iter: 0,
            p_er,
        }
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.phi)
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.phi)
    }

    /// Both fixed-point identities at the current received powers:
    /// `max_j max(|beta_j - Psi_j(P_j)|, |mu_j - 1/d_j(P_j)|)`.
    pub fn closed_form_error(&self, eh: &[EhParams]) -> f64 {
        let mut e: f64 = 0.0;
        for (j, p) in eh.iter().enumerate() {
            let d = p.denominator(self.p_er[j]);
            e = e
                .max((self.beta[j] - psi(self.p_er[j], p)).abs())
                .max((self.mu[j] - 1.0 / d).abs());
        }
        e
    }
}

pub fn residual(mu: &[f64], beta: &[f64], p_er: &[f64], eh: &[EhParams]) -> Vec<f64> {
    let d: Vec<f64> = eh
        .iter()
        .zip(p_er)
        .map(|(p, &x)| p.denominator(x))
        .collect();
    let mut phi: Vec<f64> = beta
        .iter()
        .zip(&d)
        .zip(eh)
        .map(|((b, d), p)| b * d - p.m)
        .collect();
    phi.extend(mu.iter().zip(&d).map(|(m, d)| m * d - 1.0));
    phi
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Newton direction `q = -[phi']^-1 phi` with `P` fixed, split as
/// `(q_mu, q_beta)`.
pub fn newton_direction(state: &OuterState, eh: &[EhParams]) -> (Vec<f64>, Vec<f64>) {
    let j = eh.len();
    let d: Vec<f64> = eh
        .iter()
        .zip(&state.p_er)
        .map(|(p, &x)| p.denominator(x))
        .collect();
    let q_beta = (0..j).map(|k| -state.phi[k] / d[k]).collect();
    let q_mu = (0..j).map(|k| -state.phi[j + k] / d[k]).collect();
    (q_mu, q_beta)
}

/// Accepted line-search step.
#[derive(Debug, Clone)]
pub struct Step<T> {
    pub state: OuterState,
    pub zeta: f64,
    pub trials: usize,
    /// Whatever the evaluator produced at the accepted parameters.
    pub payload: T,
}

/// Damped Newton step: tries `zeta = epsilon^l`, `l = 0..l_max`, and accepts
/// the first with `|phi_new|_2 <= (1 - eta zeta) |phi|_2`. `eval` maps trial
/// parameters to received powers (usually by an inner solve) plus a payload.
pub fn newton_step<T>(
    state: &OuterState,
    eh: &[EhParams],
    opts: &OuterOptions,
    mut eval: impl FnMut(&[f64], &[f64]) -> Result<(Vec<f64>, T)>,
) -> Result<Step<T>> {
    let (q_mu, q_beta) = newton_direction(state, eh);
    let base = state.norm2();
    let mut zeta = 1.0;
    for l in 0..=opts.l_max {
        let mu: Vec<f64> = state
            .mu
            .iter()
            .zip(&q_mu)
            .map(|(m, q)| m + zeta * q)
            .collect();
        let beta: Vec<f64> = state
            .beta
            .iter()
            .zip(&q_beta)
            .map(|(b, q)| b + zeta * q)
            .collect();
        let (p_er, payload) = eval(&mu, &beta)?;
        let mut next = OuterState::new(mu, beta, p_er, eh);
        if next.norm2() <= (1.0 - opts.eta * zeta) * base {
            next.iter = state.iter + 1;
            return Ok(Step {
                state: next,
                zeta,
                trials: l + 1,
                payload,
            });
        }
        zeta *= opts.epsilon;
    }
    Err(Error::LineSearchStall {
        residual: state.norm_inf(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub iter: usize,
    pub phi_inf: f64,
    /// Step accepted to reach this iterate; zero for the starting point.
    pub zeta: f64,
    pub inner_objective: f64,
    pub oracle_calls: usize,
    /// `|phi|_2` after a full step with the descent and with the opposite
    /// sign, when the sign probe is enabled.
    pub sign_probe: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterStatus {
    Converged,
    MaxIter,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct OuterResult {
    /// Rank-one allocation after reconstruction.
    pub allocation: Allocation,
    /// Relaxed allocation of the last inner solve.
    pub relaxed: Allocation,
    pub state: OuterState,
    pub trace: Vec<OuterRecord>,
    pub status: OuterStatus,
    pub recovery: Recovery,
    pub kkt: KktReport,
    pub inner_gap: f64,
}

impl OuterResult {
    pub fn converged(&self) -> bool {
        self.status == OuterStatus::Converged
    }

    pub fn iterations(&self) -> usize {
        self.state.iter
    }
}

/// Alternates inner solves and damped Newton updates until
/// `|phi|_inf <= outer_tol`, then rebuilds a rank-one beamformer at the final
/// received powers.
pub fn run(data: &InnerProblemData, opts: &OuterOptions) -> Result<OuterResult> {
    data.validate()?;
    let data = &data.tightened(CONSTRAINT_MARGIN);
    let eh = data.eh.clone();
    let mut current = data.clone();
    let mut sol = solve_inner(&current, &opts.inner, None)?;
    let mut state = OuterState::new(
        current.mu.clone(),
        current.beta.clone(),
        sol.allocation.tau.clone(),
        &eh,
    );
    let mut trace = vec![OuterRecord {
        iter: 0,
        phi_inf: state.norm_inf(),
        zeta: 0.0,
        inner_objective: sol.objective,
        oracle_calls: sol.oracle_calls,
        sign_probe: None,
    }];

    let mut status = OuterStatus::MaxIter;
    while state.iter < opts.max_iter {
        if state.norm_inf() <= opts.outer_tol {
            status = OuterStatus::Converged;
            break;
        }
        let sign_probe = if opts.record_sign_probe && state.iter == 0 {
            Some(sign_probe(data, &state, &sol.state, opts)?)
        } else {
            None
        };
        let warm = sol.state.clone();
        let step = newton_step(&state, &eh, opts, |mu, beta| {
            let trial = current.with_params(mu, beta);
            let s = solve_inner(&trial, &opts.inner, Some(warm.clone()))?;
            Ok((s.allocation.tau.clone(), s))
        });
        let step = match step {
            Ok(s) => s,
            Err(Error::LineSearchStall { .. }) => {
                status = OuterStatus::Stalled;
                break;
            }
            Err(e) => return Err(e),
        };
        state = step.state;
        sol = step.payload;
        current = current.with_params(&state.mu, &state.beta);
        trace.push(OuterRecord {
            iter: state.iter,
            phi_inf: state.norm_inf(),
            zeta: step.zeta,
            inner_objective: sol.objective,
            oracle_calls: sol.oracle_calls,
            sign_probe,
        });
    }
    if status == OuterStatus::MaxIter && state.norm_inf() <= opts.outer_tol {
        status = OuterStatus::Converged;
    }

    let tau = sol.allocation.tau.clone();
    let backoff = floor_backoff(&current, &tau, sol.threshold);
    let floor = PowerFloor::PerReceiver(tau);
    let (recovery, kkt) =
        certified_recovery(&current, &floor, &sol.allocation, backoff, &opts.inner)?;
    Ok(OuterResult {
        allocation: recovery.allocation.clone(),
        relaxed: sol.allocation,
        state,
        trace,
        status,
        recovery,
        kkt,
        inner_gap: sol.gap,
    })
}

fn sign_probe(
    data: &InnerProblemData,
    state: &OuterState,
    warm: &FwState,
    opts: &OuterOptions,
) -> Result<(f64, f64)> {
    let (q_mu, q_beta) = newton_direction(state, &data.eh);
    let mut out = [0.0; 2];
    for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
        let mu: Vec<f64> = state
            .mu
            .iter()
            .zip(&q_mu)
            .map(|(m, q)| m + sign * q)
            .collect();
        let beta: Vec<f64> = state
            .beta
            .iter()
            .zip(&q_beta)
            .map(|(b, q)| b + sign * q)
            .collect();
        let s = solve_inner(
            &data.with_params(&mu, &beta),
            &opts.inner,
            Some(warm.clone()),
        )?;
        out[k] = OuterState::new(mu, beta, s.allocation.tau, &data.eh).norm2();
    }
    Ok((out[0], out[1]))
}

/// Writes the iteration trace as `iter,phi_inf,zeta,inner_objective`.
pub fn write_trace_csv<W: Write>(trace: &[OuterRecord], out: &mut W) -> Result<()> {
    writeln!(out, "iter,phi_inf,zeta,inner_objective")?;
    for r in trace {
        writeln!(
            out,
            "{},{:.6e},{:.6e},{:.9e}",
            r.iter, r.phi_inf, r.zeta, r.inner_objective
        )?;
    }
    Ok(())
}

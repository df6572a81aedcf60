//! Inner problem: for fixed `(mu, beta)` maximize
//! `sum_j mu_j [M_j - beta_j (1 + exp(-a_j (tau_j - b_j)))]` over the
//! relaxed beamforming set, then rebuild a rank-one beamformer.
//!
//! The feasible set of `(W, V)` is
//!
//! ```text
//! Tr(W + V) <= P_max
//! Tr(W H) / gamma >= Tr(V H) + sigma^2
//! alpha (G_j^H V G_j + sigma^2 I) - G_j^H W G_j >= 0      for all j
//! W >= 0, V >= 0
//! ```
//!
//! and `tau_j = Tr((W + V) G_j G_j^H)`. The concave objective depends on
//! `(W, V)` only through `tau`, so the conditional-gradient loop keeps every
//! linear-oracle solution as an atom and re-optimizes the convex weights of
//! the atoms between oracle calls.

use crate::channel::{ChannelRealization, ScenarioConfig};
use crate::eh::EhParams;
use crate::error::{Error, Result};
use crate::linalg::{
    eigh_desc, fro, hermitian_part, inner, max_eigenvalue, min_eigenvalue, trace_re, CMat, CVec,
};
use crate::sdp::{
    self, BlockId, Goal, LinearExpr, LmiConstraint, LmiTerm, ScalarId, SdpOptions, SdpProblem,
    SdpSolution, SdpStatus, Sense,
};

/// Data of one inner problem.
#[derive(Debug, Clone)]
pub struct InnerProblemData {
    pub channel: ChannelRealization,
    pub eh: Vec<EhParams>,
    pub p_max: f64,
    pub gamma_req: f64,
    pub alpha_er: f64,
    pub mu: Vec<f64>,
    pub beta: Vec<f64>,
}

impl InnerProblemData {
    /// Builds the data with `(mu, beta)` at their zero-power fixed-point values.
    pub fn new(
        channel: ChannelRealization,
        eh: Vec<EhParams>,
        p_max: f64,
        gamma_req: f64,
        alpha_er: f64,
    ) -> Result<Self> {
        let mu: Vec<f64> = eh.iter().map(|p| 1.0 / p.denominator(0.0)).collect();
        let beta: Vec<f64> = eh.iter().zip(&mu).map(|(p, m)| p.m * m).collect();
        let data = Self {
            channel,
            eh,
            p_max,
            gamma_req,
            alpha_er,
            mu,
            beta,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn from_scenario(config: &ScenarioConfig, channel: ChannelRealization) -> Result<Self> {
        config.validate()?;
        let eh = vec![config.eh; channel.j()];
        Self::new(
            channel,
            eh,
            config.p_max(),
            config.gamma_req(),
            config.alpha_er(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        let j = self.channel.j();
        if self.eh.len() != j || self.mu.len() != j || self.beta.len() != j {
            return Err(Error::Validation(format!(
                "expected {j} entries in eh/mu/beta, got {}/{}/{}",
                self.eh.len(),
                self.mu.len(),
                self.beta.len()
            )));
        }
        for p in &self.eh {
            p.validate()?;
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.p_max) || !positive(self.gamma_req) || !positive(self.alpha_er) {
            return Err(Error::Validation(
                "p_max, gamma_req and alpha_er must be positive".into(),
            ));
        }
        if self.mu.iter().chain(&self.beta).any(|x| !x.is_finite()) {
            return Err(Error::Validation("mu and beta must be finite".into()));
        }
        Ok(())
    }

    pub fn j(&self) -> usize {
        self.channel.j()
    }

    pub fn n_t(&self) -> usize {
        self.channel.n_t()
    }

    pub fn with_params(&self, mu: &[f64], beta: &[f64]) -> Self {
        let mut d = self.clone();
        d.mu = mu.to_vec();
        d.beta = beta.to_vec();
        d
    }

    /// Same problem with the SINR target raised, and the leakage cap and the
    /// budget lowered, by the relative margin `kappa`.
    pub fn tightened(&self, kappa: f64) -> Self {
        let mut d = self.clone();
        d.gamma_req *= 1.0 + kappa;
        d.alpha_er *= 1.0 - kappa;
        d.p_max *= 1.0 - kappa;
        d
    }

    /// `sum_j mu_j [M_j - beta_j d_j(tau_j)]`.
    pub fn objective(&self, tau: &[f64]) -> f64 {
        self.eh
            .iter()
            .zip(tau)
            .zip(self.mu.iter().zip(&self.beta))
            .map(|((p, &t), (&m, &b))| m * (p.m - b * p.denominator(t)))
            .sum()
    }

    /// Gradient of [`Self::objective`] in `tau`.
    pub fn gradient(&self, tau: &[f64]) -> Vec<f64> {
        self.eh
            .iter()
            .zip(tau)
            .zip(self.mu.iter().zip(&self.beta))
            .map(|((p, &t), (&m, &b))| m * b * p.a * p.decay(t))
            .collect()
    }

    /// Objective units per watt, `sum mu_j beta_j / sum beta_j`: at the outer
    /// fixed point `mu_j beta_j d_j = beta_j`, so a gap of `x` watts of
    /// harvested power is worth about `x` times this factor.
    fn weight_scale(&self) -> f64 {
        let num: f64 = self
            .mu
            .iter()
            .zip(&self.beta)
            .map(|(m, b)| (m * b).abs())
            .sum();
        let den: f64 = self.beta.iter().map(|b| b.abs()).sum();
        if den > 0.0 {
            num / den
        } else {
            self.mu.iter().map(|m| m.abs()).sum::<f64>() / self.mu.len() as f64
        }
    }

    pub fn received_powers(&self, w_mat: &CMat, v: &CMat) -> Vec<f64> {
        let s = w_mat + v;
        (0..self.j())
            .map(|j| inner(&self.channel.er_gram(j), &s))
            .collect()
    }
}

/// Beamforming matrix, extracted beamformer, AN covariance and received powers.
#[derive(Debug, Clone)]
pub struct Allocation {
    pub w_mat: CMat,
    pub v: CMat,
    pub w: CVec,
    pub tau: Vec<f64>,
}

impl Allocation {
    pub fn from_beamformer(w: CVec, v: CMat, chan: &ChannelRealization) -> Self {
        let w_mat = &w * w.adjoint();
        let s = &w_mat + &v;
        let tau = (0..chan.j()).map(|j| inner(&chan.er_gram(j), &s)).collect();
        Self { w_mat, v, w, tau }
    }

    /// Keeps `W` as given and extracts `w` from its principal eigenpair.
    pub fn from_matrices(w_mat: CMat, v: CMat, chan: &ChannelRealization) -> Self {
        let (vals, vecs) = eigh_desc(&w_mat);
        let w =
            vecs.column(0).into_owned() * num_complex::Complex64::new(vals[0].max(0.0).sqrt(), 0.0);
        let s = &w_mat + &v;
        let tau = (0..chan.j()).map(|j| inner(&chan.er_gram(j), &s)).collect();
        Self { w_mat, v, w, tau }
    }

    pub fn total_power(&self) -> f64 {
        trace_re(&self.w_mat) + trace_re(&self.v)
    }

    /// `lambda_2(W) / lambda_1(W)`, zero for a vanishing `W`.
    pub fn rank_ratio(&self) -> f64 {
        rank_ratio(&self.w_mat)
    }
}

pub fn rank_ratio(w: &CMat) -> f64 {
    let (vals, _) = eigh_desc(w);
    if vals.len() < 2 || vals[0] <= 0.0 {
        return 0.0;
    }
    vals[1].max(0.0) / vals[0]
}

#[derive(Debug, Clone, Copy)]
pub struct InnerOptions {
    pub tol_fw: f64,
    pub max_fw_iter: usize,
    pub max_atoms: usize,
    pub rank_tol: f64,
    pub kkt_tol: f64,
    pub sdp: SdpOptions,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol_fw: 1e-7,
            max_fw_iter: 200,
            max_atoms: 64,
            rank_tol: 1e-6,
            kkt_tol: 1e-6,
            sdp: SdpOptions::default(),
        }
    }
}

/// Substitution `W = T_W W_hat T_W^H`, `V = T_V V_hat T_V^H`, and per-ER
/// congruences `S_j` applied to the leakage LMIs, `S_j^H M_j S_j >= 0`.
#[derive(Debug, Clone)]
struct Scaling {
    t_w: CMat,
    t_v: CMat,
    /// Empty for the identity.
    lmi: Vec<CMat>,
}

impl Scaling {
    fn uniform(n: usize, s_w: f64, s_v: f64) -> Self {
        Self {
            t_w: CMat::identity(n, n).scale(s_w.sqrt()),
            t_v: CMat::identity(n, n).scale(s_v.sqrt()),
            lmi: Vec::new(),
        }
    }

    /// `V` compressed along `h`: `T_V = sqrt(s_v) U diag(eps, 1, .., 1)` with
    /// `U` unitary and `U e_1 = h / |h|`.
    fn along_ir(h: &CVec, s_w: f64, s_v: f64, eps: f64) -> Self {
        let n = h.len();
        let u = unitary_with_first_column(h);
        let mut d = CMat::identity(n, n);
        d[(0, 0)] = num_complex::Complex64::new(eps, 0.0);
        Self {
            t_w: CMat::identity(n, n).scale(s_w.sqrt()),
            t_v: (u * d).scale(s_v.sqrt()),
            lmi: Vec::new(),
        }
    }

    /// `S_j = Q_j^-1/2` with `Q_j = G_j^H V_ref G_j + sigma^2 I`, which puts
    /// every leakage LMI on the scale of `alpha I` near `V_ref`. Artificial
    /// noise makes `Q_j` badly conditioned, and without this the weak
    /// direction of `Q_j` is resolved far below the solver tolerance.
    fn with_leakage_reference(mut self, chan: &ChannelRealization, v_ref: &CMat) -> Self {
        self.lmi = chan
            .g
            .iter()
            .map(|g| inverse_sqrt(&er_noise(chan, g, v_ref)))
            .collect();
        self
    }

    fn lmi(&self, j: usize, nr: usize) -> CMat {
        self.lmi
            .get(j)
            .cloned()
            .unwrap_or_else(|| CMat::identity(nr, nr))
    }

    fn w(&self, w_hat: &CMat) -> CMat {
        hermitian_part(&(&self.t_w * w_hat * self.t_w.adjoint()))
    }

    fn v(&self, v_hat: &CMat) -> CMat {
        hermitian_part(&(&self.t_v * v_hat * self.t_v.adjoint()))
    }

    fn cw(&self, a: &CMat) -> CMat {
        hermitian_part(&(self.t_w.adjoint() * a * &self.t_w))
    }

    fn cv(&self, a: &CMat) -> CMat {
        hermitian_part(&(self.t_v.adjoint() * a * &self.t_v))
    }
}

/// `G^H V G + sigma^2 I`.
fn er_noise(chan: &ChannelRealization, g: &CMat, v: &CMat) -> CMat {
    let nr = g.ncols();
    hermitian_part(&(g.adjoint() * v * g + CMat::identity(nr, nr).scale(chan.sigma_sq)))
}

fn inverse_sqrt(q: &CMat) -> CMat {
    let (vals, vecs) = eigh_desc(q);
    let top = vals.first().copied().unwrap_or(0.0);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| {
            num_complex::Complex64::new(1.0 / l.max(1e-300_f64.max(1e-16 * top)).sqrt(), 0.0)
        }),
    ));
    hermitian_part(&(&vecs * d * vecs.adjoint()))
}

fn unitary_with_first_column(h: &CVec) -> CMat {
    let n = h.len();
    let mut m = CMat::zeros(n, n + 1);
    m.set_column(0, h);
    for k in 0..n {
        m[(k, k + 1)] = num_complex::Complex64::new(1.0, 0.0);
    }
    let q = m.qr().q();
    // Householder QR keeps the span but may flip the phase of the first column.
    let mut out = CMat::zeros(n, n);
    out.copy_from(&q.columns(0, n));
    out
}

/// Lower bounds on received power used by the rank-one reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerFloor {
    /// `Tr((W + V) G_j G_j^H) >= tau_j` for every receiver.
    PerReceiver(Vec<f64>),
    /// `sum_j weights_j Tr((W + V) G_j G_j^H) >= total`.
    Weighted { weights: Vec<f64>, total: f64 },
}

impl PowerFloor {
    fn backed_off(&self, delta: f64) -> Self {
        match self {
            PowerFloor::PerReceiver(t) => {
                PowerFloor::PerReceiver(t.iter().map(|x| x * (1.0 - delta)).collect())
            }
            PowerFloor::Weighted { weights, total } => PowerFloor::Weighted {
                weights: weights.clone(),
                total: total * (1.0 - delta),
            },
        }
    }
}

/// Indices of the pieces of an assembled problem.
#[derive(Debug, Clone)]
pub struct ConstraintHandles {
    pub w: BlockId,
    pub v: BlockId,
    pub tau: Vec<ScalarId>,
    pub power_budget: usize,
    pub ir_sinr: usize,
    /// Power-floor rows (one per receiver, or a single weighted row).
    pub er_power: Vec<usize>,
    /// LMI index per energy receiver.
    pub er_leakage: Vec<usize>,
}

enum TauMode<'a> {
    None,
    Scalars,
    Floor(&'a PowerFloor),
}

fn assemble(
    data: &InnerProblemData,
    sc: &Scaling,
    goal: Goal,
    tau_mode: TauMode<'_>,
) -> (SdpProblem, ConstraintHandles) {
    let n = data.n_t();
    let chan = &data.channel;
    let hh = chan.h_gram();
    let mut p = SdpProblem::new(goal);
    let w = p.add_block("W", n);
    let v = p.add_block("V", n);
    let eye = CMat::identity(n, n);

    let power_budget = p.constraints.len();
    p.add_constraint(
        "power_budget",
        LinearExpr::new()
            .block(w, sc.cw(&eye))
            .block(v, sc.cv(&eye)),
        Sense::Le,
        data.p_max,
    );

    let ir_sinr = p.constraints.len();
    p.add_constraint(
        "ir_sinr",
        LinearExpr::new()
            .block(w, sc.cw(&hh.unscale(data.gamma_req)))
            .block(v, sc.cv(&(-&hh))),
        Sense::Ge,
        chan.sigma_sq,
    );

    let mut tau = Vec::new();
    let mut er_power = Vec::new();
    match tau_mode {
        TauMode::None => {}
        TauMode::Scalars => {
            for j in 0..data.j() {
                let t = p.add_scalar(format!("tau_{j}"));
                let gg = chan.er_gram(j);
                er_power.push(p.constraints.len());
                p.add_constraint(
                    format!("er_power_{j}"),
                    LinearExpr::new()
                        .block(w, sc.cw(&gg))
                        .block(v, sc.cv(&gg))
                        .scalar(t, -1.0),
                    Sense::Ge,
                    0.0,
                );
                tau.push(t);
            }
        }
        TauMode::Floor(PowerFloor::PerReceiver(floor)) => {
            for (j, &f) in floor.iter().enumerate() {
                let gg = chan.er_gram(j);
                er_power.push(p.constraints.len());
                p.add_constraint(
                    format!("er_power_{j}"),
                    LinearExpr::new().block(w, sc.cw(&gg)).block(v, sc.cv(&gg)),
                    Sense::Ge,
                    f,
                );
            }
        }
        TauMode::Floor(PowerFloor::Weighted { weights, total }) => {
            let mut gg = CMat::zeros(n, n);
            for (j, &wt) in weights.iter().enumerate() {
                gg += chan.er_gram(j).scale(wt);
            }
            er_power.push(p.constraints.len());
            p.add_constraint(
                "er_power_weighted",
                LinearExpr::new().block(w, sc.cw(&gg)).block(v, sc.cv(&gg)),
                Sense::Ge,
                *total,
            );
        }
    }

    let mut er_leakage = Vec::new();
    for (j, g) in chan.g.iter().enumerate() {
        let s = sc.lmi(j, g.ncols());
        er_leakage.push(p.lmis.len());
        p.add_lmi(LmiConstraint {
            name: format!("er_leakage_{j}"),
            constant: hermitian_part(&(s.adjoint() * &s)).scale(data.alpha_er * chan.sigma_sq),
            terms: vec![
                LmiTerm {
                    block: v,
                    factor: sc.t_v.adjoint() * g * &s,
                    weight: data.alpha_er,
                },
                LmiTerm {
                    block: w,
                    factor: sc.t_w.adjoint() * g * &s,
                    weight: -1.0,
                },
            ],
            scalar_terms: vec![],
        });
    }

    (
        p,
        ConstraintHandles {
            w,
            v,
            tau,
            power_budget,
            ir_sinr,
            er_power,
            er_leakage,
        },
    )
}

/// The relaxed constraint set in physical variables, with one free received
/// power scalar `tau_j >= 0` per energy receiver bounded by
/// `Tr((W + V) G_j G_j^H) >= tau_j`. The objective is left empty.
pub fn build_constraints(data: &InnerProblemData) -> Result<(SdpProblem, ConstraintHandles)> {
    data.validate()?;
    let n = data.n_t();
    Ok(assemble(
        data,
        &Scaling::uniform(n, 1.0, 1.0),
        Goal::Maximize,
        TauMode::Scalars,
    ))
}

/// A feasible point together with the least transmit power that meets the
/// secrecy constraints.
#[derive(Debug, Clone)]
pub struct FeasiblePoint {
    pub w_mat: CMat,
    pub v: CMat,
    pub min_power: f64,
}

fn accept(sol: &SdpSolution, what: &str) -> Result<()> {
    match sol.status {
        SdpStatus::Optimal => Ok(()),
        SdpStatus::MaxIter if sol.primal_residual <= 1e-6 && sol.gap <= 1e-5 => Ok(()),
        SdpStatus::Infeasible => Err(Error::Infeasible(format!(
            "{what}: solver returned an infeasibility certificate"
        ))),
        s => Err(Error::NotConverged(format!(
            "{what}: status {s:?}, residuals {:.2e}/{:.2e}, gap {:.2e}",
            sol.primal_residual, sol.dual_residual, sol.gap
        ))),
    }
}

/// Solves `min Tr(W + V)` subject to the SINR and leakage constraints and
/// compares the result with the power budget.
pub fn find_feasible_point(data: &InnerProblemData, opts: &InnerOptions) -> Result<FeasiblePoint> {
    data.validate()?;
    let n = data.n_t();
    let chan = &data.channel;
    let s0 = data.gamma_req * chan.sigma_sq / chan.h.norm_squared();
    let sc = Scaling::uniform(n, s0, s0);
    let (mut p, hd) = assemble(data, &sc, Goal::Minimize, TauMode::None);
    // The budget row is dropped: the minimum power itself is the test.
    p.constraints.remove(hd.power_budget);
    let eye = CMat::identity(n, n);
    p.set_objective(
        LinearExpr::new()
            .block(hd.w, sc.cw(&eye))
            .block(hd.v, sc.cv(&eye)),
    );
    let sol = sdp::solve(&p, &opts.sdp)?;
    if sol.status == SdpStatus::Infeasible {
        return Err(Error::Infeasible(
            "the SINR and leakage constraints cannot be met at any transmit power".into(),
        ));
    }
    accept(&sol, "minimum-power problem")?;
    let w_mat = sc.w(&sol.primal_blocks[hd.w.0]);
    let v = sc.v(&sol.primal_blocks[hd.v.0]);
    let min_power = trace_re(&w_mat) + trace_re(&v);
    if min_power > data.p_max * (1.0 + 1e-9) {
        return Err(Error::Infeasible(format!(
            "meeting the SINR target needs {min_power:.4e} W but the budget is {:.4e} W",
            data.p_max
        )));
    }
    Ok(FeasiblePoint {
        w_mat,
        v,
        min_power,
    })
}

#[derive(Debug, Clone)]
struct Atom {
    w_mat: CMat,
    v: CMat,
    tau: Vec<f64>,
}

/// Conditional-gradient state: feasible atoms and their convex weights.
/// Reusable across inner solves with different `(mu, beta)`.
#[derive(Debug, Clone)]
pub struct FwState {
    atoms: Vec<Atom>,
    weights: Vec<f64>,
}

impl FwState {
    pub fn from_point(data: &InnerProblemData, point: &FeasiblePoint) -> Self {
        let tau = data.received_powers(&point.w_mat, &point.v);
        Self {
            atoms: vec![Atom {
                w_mat: point.w_mat.clone(),
                v: point.v.clone(),
                tau,
            }],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn tau(&self) -> Vec<f64> {
        let j = self.atoms[0].tau.len();
        let mut t = vec![0.0; j];
        for (a, &l) in self.atoms.iter().zip(&self.weights) {
            for (x, y) in t.iter_mut().zip(&a.tau) {
                *x += l * y;
            }
        }
        t
    }

    fn point(&self) -> (CMat, CMat) {
        let n = self.atoms[0].w_mat.nrows();
        let mut w = CMat::zeros(n, n);
        let mut v = CMat::zeros(n, n);
        for (a, &l) in self.atoms.iter().zip(&self.weights) {
            w += a.w_mat.scale(l);
            v += a.v.scale(l);
        }
        (w, v)
    }

    fn prune(&mut self, max_atoms: usize) {
        let mut keep: Vec<usize> = (0..self.atoms.len())
            .filter(|&k| self.weights[k] > 0.0)
            .collect();
        if keep.len() > max_atoms {
            keep.sort_by(|&a, &b| self.weights[b].total_cmp(&self.weights[a]));
            keep.truncate(max_atoms);
            keep.sort_unstable();
        }
        let total: f64 = keep.iter().map(|&k| self.weights[k]).sum();
        self.atoms = keep.iter().map(|&k| self.atoms[k].clone()).collect();
        self.weights = keep.iter().map(|&k| self.weights[k] / total).collect();
    }
}

/// Maximizes the concave `h(g) = f(tau + g d)` over `[0, g_max]` by bisection
/// on the derivative.
fn line_search(data: &InnerProblemData, tau: &[f64], d: &[f64], g_max: f64) -> f64 {
    let slope = |g: f64| -> f64 {
        let t: Vec<f64> = tau.iter().zip(d).map(|(a, b)| a + g * b).collect();
        data.gradient(&t).iter().zip(d).map(|(c, b)| c * b).sum()
    };
    if slope(g_max) >= 0.0 {
        return g_max;
    }
    if slope(0.0) <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, g_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Pairwise conditional gradient over the atom weights.
fn reoptimize_weights(data: &InnerProblemData, state: &mut FwState, tol: f64) {
    let k = state.atoms.len();
    if k < 2 {
        return;
    }
    for _ in 0..20_000 {
        let tau = state.tau();
        let g = data.gradient(&tau);
        let score: Vec<f64> = state
            .atoms
            .iter()
            .map(|a| a.tau.iter().zip(&g).map(|(x, y)| x * y).sum())
            .collect();
        let gt: f64 = tau.iter().zip(&g).map(|(x, y)| x * y).sum();
        let best = (0..k)
            .max_by(|&a, &b| score[a].total_cmp(&score[b]))
            .unwrap();
        let worst = (0..k)
            .filter(|&i| state.weights[i] > 0.0)
            .min_by(|&a, &b| score[a].total_cmp(&score[b]))
            .unwrap();
        if score[best] - gt <= tol || best == worst {
            break;
        }
        let d: Vec<f64> = state.atoms[best]
            .tau
            .iter()
            .zip(&state.atoms[worst].tau)
            .map(|(a, b)| a - b)
            .collect();
        let step = line_search(data, &tau, &d, state.weights[worst]);
        if step <= 0.0 {
            break;
        }
        state.weights[best] += step;
        state.weights[worst] -= step;
        if state.weights[worst] <= 1e-15 {
            state.weights[best] += state.weights[worst];
            state.weights[worst] = 0.0;
        }
    }
}

/// Linear oracle: `max sum_j c_j Tr((W + V) G_j G_j^H)` over the relaxed set.
/// `v_ref` sets the leakage-LMI scaling.
fn linear_oracle(
    data: &InnerProblemData,
    c: &[f64],
    opts: &InnerOptions,
) -> Result<(CMat, CMat, SdpSolution)> {
    let n = data.n_t();
    let mut gg = CMat::zeros(n, n);
    for (j, &cj) in c.iter().enumerate() {
        gg += data.channel.er_gram(j).scale(cj);
    }
    // A zero reference resolves every direction of the leakage LMIs at the
    // receiver noise level. The leakage rarely still fails there, and then
    // the problem is re-solved around the solution.
    let mut v_ref = CMat::zeros(n, n);
    let mut best: Option<(f64, (CMat, CMat, SdpSolution))> = None;
    for _ in 0..LEAKAGE_SOLVES {
        let sc = Scaling::uniform(n, data.p_max, data.p_max)
            .with_leakage_reference(&data.channel, &v_ref);
        let (mut p, hd) = assemble(data, &sc, Goal::Maximize, TauMode::None);
        p.set_objective(
            LinearExpr::new()
                .block(hd.w, sc.cw(&gg))
                .block(hd.v, sc.cv(&gg)),
        );
        let sol = sdp::solve(&p, &opts.sdp)?;
        accept(&sol, "linear oracle")?;
        let (w, v) = (
            sc.w(&sol.primal_blocks[hd.w.0]),
            sc.v(&sol.primal_blocks[hd.v.0]),
        );
        let excess = leakage_excess(data, &w, &v);
        let done = excess <= LEAKAGE_RETUNE;
        v_ref = v.clone();
        if best.as_ref().is_none_or(|(e, _)| excess < *e) {
            best = Some((excess, (w, v, sol)));
        }
        if done {
            break;
        }
    }
    Ok(best.expect("at least one solve").1)
}

/// Maximizes `sum_j c_j Tr((W + V) G_j G_j^H)` over the relaxed set.
pub fn solve_linear(data: &InnerProblemData, c: &[f64], opts: &InnerOptions) -> Result<Allocation> {
    data.validate()?;
    if c.len() != data.j() {
        return Err(Error::Validation(format!(
            "expected {} weights, got {}",
            data.j(),
            c.len()
        )));
    }
    let (w, v, _) = linear_oracle(data, c, opts)?;
    Ok(Allocation::from_matrices(w, v, &data.channel))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwRecord {
    pub objective: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    /// Relaxed optimum; `w` is only the principal component of `W`.
    pub allocation: Allocation,
    pub objective: f64,
    /// Last certified conditional-gradient gap.
    pub gap: f64,
    /// Stopping threshold the gap was compared with.
    pub threshold: f64,
    pub oracle_calls: usize,
    pub converged: bool,
    pub trace: Vec<FwRecord>,
    pub state: FwState,
}

/// Conditional-gradient solve of the inner problem. `start` carries atoms
/// from an earlier solve; without it the minimum-power point is used.
pub fn solve_inner(
    data: &InnerProblemData,
    opts: &InnerOptions,
    start: Option<FwState>,
) -> Result<InnerSolution> {
    data.validate()?;
    let mut state = match start {
        Some(s) if !s.is_empty() => s,
        _ => FwState::from_point(data, &find_feasible_point(data, opts)?),
    };
    let mut trace = Vec::new();
    let mut oracle_calls = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    let mut threshold = 0.0;
    for _ in 0..opts.max_fw_iter {
        threshold = opts.tol_fw * data.weight_scale();
        reoptimize_weights(data, &mut state, 1e-6 * threshold);
        state.prune(opts.max_atoms);
        let tau = state.tau();
        let c = data.gradient(&tau);
        threshold = opts.tol_fw * data.weight_scale();
        let objective = data.objective(&tau);
        if c.iter().all(|&x| x <= 0.0) {
            gap = 0.0;
            trace.push(FwRecord { objective, gap });
            converged = true;
            break;
        }
        let (w, v, _) = linear_oracle(data, &c, opts)?;
        oracle_calls += 1;
        let atom_tau = data.received_powers(&w, &v);
        gap = atom_tau
            .iter()
            .zip(&tau)
            .zip(&c)
            .map(|((s, t), g)| g * (s - t))
            .sum::<f64>()
            .max(0.0);
        trace.push(FwRecord { objective, gap });
        if gap <= threshold {
            converged = true;
            break;
        }
        state.atoms.push(Atom {
            w_mat: w,
            v,
            tau: atom_tau,
        });
        state.weights.push(0.0);
    }
    let tau = state.tau();
    let (w, v) = state.point();
    let mut allocation = Allocation::from_matrices(w, v, &data.channel);
    allocation.tau = tau.clone();
    Ok(InnerSolution {
        objective: data.objective(&tau),
        allocation,
        gap,
        threshold,
        oracle_calls,
        converged,
        trace,
        state,
    })
}

/// Reconstruction whose KKT certificate holds at `opts.kkt_tol` and whose
/// constraints hold within [`FEASIBILITY_TOL`]. Starting from `backoff`, the
/// floor is lowered tenfold up to [`MAX_BACKOFF`], then raised tenfold from
/// `backoff` down to the smallest back-off. A floor barely below a relaxed
/// optimum that carries solver error leaves almost no interior, and the
/// multipliers then blow up. Without a certified attempt the one with the
/// smallest residual is returned.
pub fn certified_recovery(
    data: &InnerProblemData,
    floor: &PowerFloor,
    reference: &Allocation,
    backoff: f64,
    opts: &InnerOptions,
) -> Result<(Recovery, KktReport)> {
    let start = backoff.clamp(MIN_BACKOFF, MAX_BACKOFF);
    let up = std::iter::successors(Some(start), |d| {
        (*d < MAX_BACKOFF).then(|| (d * 10.0).min(MAX_BACKOFF))
    });
    let down = std::iter::successors(Some(start / 10.0), |d| Some(d / 10.0))
        .take_while(|d| *d >= MIN_BACKOFF);
    let mut best: Option<(f64, Recovery, KktReport)> = None;
    let mut last_err = None;
    let mut tried: Vec<f64> = Vec::new();
    for delta in up.chain(down) {
        if tried
            .iter()
            .any(|t| *t >= delta * 0.999 && *t <= delta * 1.001)
        {
            continue;
        }
        tried.push(delta);
        let rec = match recover_rank_one(data, floor, reference, delta, opts) {
            Ok(rec) => rec,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        // The attempt may have backed off further than asked.
        tried.push(rec.backoff);
        let kkt = check_kkt(
            data,
            &rec.allocation,
            &rec.floor.backed_off(rec.backoff),
            &rec.duals,
        );
        let viol = constraint_violation(data, &rec.allocation.w_mat, &rec.allocation.v);
        if rec.rank_ok && kkt.passes(opts.kkt_tol) && viol <= FEASIBILITY_TOL {
            return Ok((rec, kkt));
        }
        let score = kkt
            .max_residual()
            .max(viol / FEASIBILITY_TOL * opts.kkt_tol);
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((score, rec, kkt));
        }
    }
    match best {
        Some((_, rec, kkt)) => Ok((rec, kkt)),
        None => Err(last_err
            .unwrap_or_else(|| Error::NotConverged("rank-one reconstruction failed".into()))),
    }
}

/// Physical dual variables of the reconstruction problem
/// `min Tr(W)` subject to the relaxed set and a power floor.
#[derive(Debug, Clone)]
pub struct RecoveryDuals {
    /// Power budget multiplier.
    pub lambda: f64,
    /// SINR multiplier.
    pub alpha: f64,
    /// Power-floor multipliers.
    pub rho: Vec<f64>,
    /// Leakage LMI multipliers.
    pub d: Vec<CMat>,
    /// Solver dual slack of `W` and `V` in physical coordinates.
    pub z_w: CMat,
    pub z_v: CMat,
    /// Same slacks in the solver's scaled coordinates, with the scaling.
    z_w_hat: CMat,
    z_v_hat: CMat,
    t_w: CMat,
    t_v: CMat,
}

#[derive(Debug, Clone)]
pub struct Recovery {
    pub allocation: Allocation,
    pub rank_ratio: f64,
    pub rank_ok: bool,
    pub duals: RecoveryDuals,
    pub floor: PowerFloor,
    /// Relative back-off applied to the floor.
    pub backoff: f64,
    pub status: SdpStatus,
    pub solves: usize,
}

impl Recovery {
    pub fn ensure_rank_one(&self, tol: f64) -> Result<()> {
        if self.rank_ratio > tol {
            return Err(Error::RankViolation {
                ratio: self.rank_ratio,
                tolerance: tol,
            });
        }
        Ok(())
    }
}

/// Relative leakage excess that triggers a rescaled re-solve.
const LEAKAGE_RETUNE: f64 = 1e-8;
/// Solves per linear oracle call, counting leakage re-solves.
const LEAKAGE_SOLVES: usize = 4;

/// `max_j lambda_max(Q_j^-1/2 G_j^H W G_j Q_j^-1/2) / alpha - 1`, the
/// relative excess over the leakage ceiling.
pub fn leakage_excess(data: &InnerProblemData, w_mat: &CMat, v: &CMat) -> f64 {
    let chan = &data.channel;
    chan.g
        .iter()
        .map(|g| {
            let s = inverse_sqrt(&er_noise(chan, g, v));
            max_eigenvalue(&hermitian_part(&(&s * g.adjoint() * w_mat * g * &s))) / data.alpha_er
                - 1.0
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest relative back-off of the reconstruction floor.
pub const MAX_BACKOFF: f64 = 1e-2;
/// Smallest relative back-off of the reconstruction floor.
pub const MIN_BACKOFF: f64 = 1e-8;
/// Relative constraint violation accepted for a certified reconstruction.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Relative tightening of the constraints both schemes solve against, so
/// that the accepted violation still leaves the original constraints
/// satisfied.
pub const CONSTRAINT_MARGIN: f64 = 1e-6;

/// Relative back-off for the floor so that the objective loss stays below
/// half the conditional-gradient tolerance. Near saturation the gradient is
/// tiny and the back-off grows, which keeps the floor off the boundary of the
/// attainable received powers.
pub fn floor_backoff(data: &InnerProblemData, tau: &[f64], threshold: f64) -> f64 {
    let c = data.gradient(tau);
    let lin: f64 = c.iter().zip(tau).map(|(a, b)| a * b).sum();
    if lin > 0.0 {
        (threshold / (2.0 * lin)).clamp(MIN_BACKOFF, MAX_BACKOFF)
    } else {
        MAX_BACKOFF
    }
}

/// Solves `min Tr(W)` over the relaxed set with the given received-power
/// floor and extracts `w = sqrt(lambda_1) u_1`.
pub fn recover_rank_one(
    data: &InnerProblemData,
    floor: &PowerFloor,
    reference: &Allocation,
    backoff: f64,
    opts: &InnerOptions,
) -> Result<Recovery> {
    data.validate()?;
    if let PowerFloor::PerReceiver(t) = floor {
        if t.len() != data.j() {
            return Err(Error::Validation(format!(
                "expected {} power floors, got {}",
                data.j(),
                t.len()
            )));
        }
    }
    let chan = &data.channel;
    let h2 = chan.h.norm_squared();
    let n = data.n_t();
    let leak = |v: &CMat| (chan.h.adjoint() * v * &chan.h)[(0, 0)].re.max(0.0);
    let mut s_w = (data.gamma_req * (chan.sigma_sq + leak(&reference.v)) / h2).min(data.p_max);
    let mut leak_ref = chan.sigma_sq;
    let mut v_ref = reference.v.clone();
    let mut delta = backoff;
    let mut solves = 0;
    let mut last_err = None;
    while solves < 8 {
        let eps = (leak_ref / (data.p_max * h2)).sqrt().min(1.0);
        let sc =
            Scaling::along_ir(&chan.h, s_w, data.p_max, eps).with_leakage_reference(chan, &v_ref);
        let floor_b = floor.backed_off(delta);
        let (mut p, hd) = assemble(data, &sc, Goal::Minimize, TauMode::Floor(&floor_b));
        p.set_objective(LinearExpr::new().block(hd.w, sc.cw(&CMat::identity(n, n))));
        let sol = sdp::solve(&p, &opts.sdp)?;
        solves += 1;
        if let Err(e) = accept(&sol, "rank-one reconstruction") {
            // A floor that sits exactly on the boundary of the relaxed set is
            // the usual cause; back off further and retry.
            last_err = Some(e);
            delta = (delta * 10.0).min(MAX_BACKOFF);
            continue;
        }
        let w_mat = sc.w(&sol.primal_blocks[hd.w.0]);
        let v = sc.v(&sol.primal_blocks[hd.v.0]);
        let leak_now = leak(&v).max(chan.sigma_sq);
        let w_tr = trace_re(&w_mat);
        let retune = !(1e-2..=1e2).contains(&(w_tr / s_w)) || leak_now > 1e2 * leak_ref;
        let leaky = leakage_excess(data, &w_mat, &v) > LEAKAGE_RETUNE;
        if (retune && solves < 4) || (leaky && solves < 8) {
            s_w = w_tr.max(f64::MIN_POSITIVE);
            leak_ref = leak_now;
            v_ref = v;
            continue;
        }
        let allocation = Allocation::from_matrices(w_mat, v, chan);
        let ratio = allocation.rank_ratio();
        let duals = map_duals(&sol, &hd, &sc);
        return Ok(Recovery {
            rank_ratio: ratio,
            rank_ok: ratio <= opts.rank_tol,
            allocation,
            duals,
            floor: floor.clone(),
            backoff: delta,
            status: sol.status,
            solves,
        });
    }
    Err(last_err
        .unwrap_or_else(|| Error::NotConverged("rank-one reconstruction did not settle".into())))
}

fn inverse(t: &CMat) -> CMat {
    t.clone()
        .try_inverse()
        .unwrap_or_else(|| CMat::identity(t.nrows(), t.ncols()))
}

fn map_duals(sol: &SdpSolution, hd: &ConstraintHandles, sc: &Scaling) -> RecoveryDuals {
    let z_w_hat = sol.block_duals[hd.w.0].clone();
    let z_v_hat = sol.block_duals[hd.v.0].clone();
    let tw_inv = inverse(&sc.t_w);
    let tv_inv = inverse(&sc.t_v);
    RecoveryDuals {
        lambda: -sol.dual_values[hd.power_budget],
        alpha: sol.dual_values[hd.ir_sinr],
        rho: hd.er_power.iter().map(|&i| sol.dual_values[i]).collect(),
        d: hd
            .er_leakage
            .iter()
            .enumerate()
            .map(|(j, &l)| {
                let s = sc.lmi(j, sol.lmi_duals[l].nrows());
                hermitian_part(&(&s * &sol.lmi_duals[l] * s.adjoint()))
            })
            .collect(),
        z_w: hermitian_part(&(tw_inv.adjoint() * &z_w_hat * &tw_inv)),
        z_v: hermitian_part(&(tv_inv.adjoint() * &z_v_hat * &tv_inv)),
        z_w_hat,
        z_v_hat,
        t_w: sc.t_w.clone(),
        t_v: sc.t_v.clone(),
    }
}

impl RecoveryDuals {
    /// Same multipliers multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut d = self.clone();
        d.lambda *= k;
        d.alpha *= k;
        d.rho.iter_mut().for_each(|r| *r *= k);
        d.d.iter_mut()
            .for_each(|m| *m *= num_complex::Complex64::new(k, 0.0));
        d.z_w *= num_complex::Complex64::new(k, 0.0);
        d.z_v *= num_complex::Complex64::new(k, 0.0);
        d.z_w_hat *= num_complex::Complex64::new(k, 0.0);
        d.z_v_hat *= num_complex::Complex64::new(k, 0.0);
        d
    }
}

#[derive(Debug, Clone)]
pub struct KktReport {
    /// `|R W|_F / |W|_F`.
    pub complementarity_w: f64,
    /// `|Z V|_F / |V|_F`.
    pub complementarity_v: f64,
    /// Relative mismatch between `R` built from the multipliers and the
    /// solver's dual slack of `W`, in the solver's coordinates.
    pub stationarity_w: f64,
    pub stationarity_v: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub min_rho: f64,
    pub min_eig_d: f64,
    pub min_eig_r: f64,
    pub min_eig_z: f64,
    /// Numerical rank of `R`.
    pub rank_r: usize,
    pub n_t: usize,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.complementarity_w
            .max(self.complementarity_v)
            .max(self.stationarity_w)
            .max(self.stationarity_v)
    }

    pub fn signs_ok(&self, tol: f64) -> bool {
        self.lambda >= -tol && self.alpha >= -tol && self.min_rho >= -tol && self.min_eig_d >= -tol
    }

    pub fn rank_ok(&self) -> bool {
        self.rank_r + 1 >= self.n_t
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol && self.signs_ok(tol) && self.rank_ok()
    }
}

/// KKT diagnostics of a reconstruction. With `R` and `Z` the dual slacks of
/// `W` and `V`:
///
/// ```text
/// R = (1 + lambda) I - alpha H / gamma - sum rho_j G_j G_j^H + sum G_j D_j G_j^H
/// Z = lambda I + alpha H - sum rho_j G_j G_j^H - alpha_er sum G_j D_j G_j^H
/// ```
pub fn check_kkt(
    data: &InnerProblemData,
    alloc: &Allocation,
    floor: &PowerFloor,
    duals: &RecoveryDuals,
) -> KktReport {
    let n = data.n_t();
    let chan = &data.channel;
    let hh = chan.h_gram();
    let eye = CMat::identity(n, n);
    let mut floor_gram = CMat::zeros(n, n);
    match floor {
        PowerFloor::PerReceiver(_) => {
            for (j, r) in duals.rho.iter().enumerate() {
                floor_gram += chan.er_gram(j).scale(*r);
            }
        }
        PowerFloor::Weighted { weights, .. } => {
            let r = duals.rho.first().copied().unwrap_or(0.0);
            for (j, wt) in weights.iter().enumerate() {
                floor_gram += chan.er_gram(j).scale(r * wt);
            }
        }
    }
    let mut gdg = CMat::zeros(n, n);
    for (g, d) in chan.g.iter().zip(&duals.d) {
        gdg += g * d * g.adjoint();
    }
    let r = hermitian_part(
        &(eye.scale(1.0 + duals.lambda) - hh.scale(duals.alpha / data.gamma_req) - &floor_gram
            + &gdg),
    );
    let z = hermitian_part(
        &(eye.scale(duals.lambda) + hh.scale(duals.alpha) - &floor_gram - gdg.scale(data.alpha_er)),
    );

    let rel = |num: f64, den: f64| if den > 0.0 { num / den } else { num };
    let complementarity_w = rel(fro(&(&r * &alloc.w_mat)), fro(&alloc.w_mat));
    let complementarity_v = rel(fro(&(&z * &alloc.v)), fro(&alloc.v));

    let scale_of = |t: &CMat, parts: &[CMat]| {
        parts
            .iter()
            .map(|m| fro(&(t.adjoint() * m * t)))
            .sum::<f64>()
    };
    let r_hat = t_congruence(&duals.t_w, &r);
    let z_hat = t_congruence(&duals.t_v, &z);
    let parts_w = [
        eye.scale(1.0 + duals.lambda.abs()),
        hh.scale(duals.alpha.abs() / data.gamma_req),
        floor_gram.clone(),
        gdg.clone(),
    ];
    let parts_v = [
        eye.scale(duals.lambda.abs()),
        hh.scale(duals.alpha.abs()),
        floor_gram.clone(),
        gdg.scale(data.alpha_er),
    ];
    let stationarity_w = rel(
        fro(&(&r_hat - &duals.z_w_hat)),
        scale_of(&duals.t_w, &parts_w),
    );
    let stationarity_v = rel(
        fro(&(&z_hat - &duals.z_v_hat)),
        scale_of(&duals.t_v, &parts_v),
    );

    let (r_vals, _) = eigh_desc(&r);
    let r_top = r_vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rank_r = r_vals
        .iter()
        .filter(|v| **v > 1e-9 * r_top.max(1.0))
        .count();
    KktReport {
        complementarity_w,
        complementarity_v,
        stationarity_w,
        stationarity_v,
        lambda: duals.lambda,
        alpha: duals.alpha,
        min_rho: duals.rho.iter().copied().fold(f64::INFINITY, f64::min),
        min_eig_d: duals
            .d
            .iter()
            .map(min_eigenvalue)
            .fold(f64::INFINITY, f64::min),
        min_eig_r: r_vals.last().copied().unwrap_or(0.0),
        min_eig_z: min_eigenvalue(&z),
        rank_r,
        n_t: n,
    }
}

fn t_congruence(t: &CMat, a: &CMat) -> CMat {
    hermitian_part(&(t.adjoint() * a * t))
}

/// Largest eigenvalue of `G_j G_j^H` times the budget: an upper bound on any
/// received power.
pub fn power_scale(data: &InnerProblemData) -> f64 {
    (0..data.j())
        .map(|j| max_eigenvalue(&data.channel.er_gram(j)))
        .fold(0.0, f64::max)
        * data.p_max
}

/// Relative violation of every constraint of the relaxed set at `(W, V)`,
/// each against its own scale: budget against `P_max`, SINR against
/// `Tr(H V) + sigma^2`, leakage as [`leakage_excess`] and PSD-ness against
/// the budget.
pub fn constraint_violation(data: &InnerProblemData, w_mat: &CMat, v: &CMat) -> f64 {
    let chan = &data.channel;
    let hh = chan.h_gram();
    let budget = ((trace_re(w_mat) + trace_re(v)) - data.p_max).max(0.0) / data.p_max;
    let noise = chan.sigma_sq + inner(&hh, v).max(0.0);
    let sinr = (noise - inner(&hh, w_mat) / data.gamma_req).max(0.0) / noise;
    let leak = leakage_excess(data, w_mat, v).max(0.0);
    let psd = (-min_eigenvalue(w_mat)).max(-min_eigenvalue(v)).max(0.0) / data.p_max;
    budget.max(sinr).max(leak).max(psd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, trial_rng};
    use crate::linalg::{c, outer};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn unit(n: usize, k: usize) -> CVec {
        let mut e = CVec::zeros(n);
        e[k] = c(1.0, 0.0);
        e
    }

    fn scenario(seed: u64) -> InnerProblemData {
        let cfg = ScenarioConfig::default();
        let chan = sample_channel(&cfg, &mut trial_rng(seed, 0)).unwrap();
        InnerProblemData::from_scenario(&cfg, chan).unwrap()
    }

    fn toy(alpha_er: f64) -> InnerProblemData {
        let g = CMat::from_column_slice(3, 1, &[c(0.2, 0.0), c(0.9, 0.1), c(0.0, -0.4)]);
        let chan = ChannelRealization::new(unit(3, 0), vec![g], 1.0).unwrap();
        InnerProblemData::new(chan, vec![EhParams::default()], 10.0, 1.0, alpha_er).unwrap()
    }

    #[test]
    fn sinr_row_coefficients() {
        let data = toy(1.0);
        let (p, hd) = build_constraints(&data).unwrap();
        let row = &p.constraints[hd.ir_sinr];
        assert_eq!(row.name, "ir_sinr");
        assert_eq!(row.sense, Sense::Ge);
        assert_eq!(row.rhs, 1.0);
        let e1 = outer(&unit(3, 0));
        let (_, cw) = row.expr.blocks.iter().find(|(b, _)| *b == hd.w).unwrap();
        let (_, cv) = row.expr.blocks.iter().find(|(b, _)| *b == hd.v).unwrap();
        assert!(fro(&(cw - &e1)) < 1e-15);
        assert!(fro(&(cv + &e1)) < 1e-15);
        assert_eq!(p.constraints[hd.power_budget].rhs, 10.0);
        assert_eq!(p.lmis[hd.er_leakage[0]].name, "er_leakage_0");
        assert_eq!(p.lmis[hd.er_leakage[0]].terms[0].weight, 1.0);
        assert_eq!(hd.tau.len(), 1);
        assert_eq!(p.constraints[hd.er_power[0]].name, "er_power_0");
    }

    #[test]
    fn validation_rejects_bad_data() {
        let data = toy(1.0);
        assert!(ChannelRealization::new(unit(3, 0), vec![], 1.0).is_err());
        let mut bad = data.clone();
        bad.p_max = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = data.clone();
        bad.mu = vec![];
        assert!(bad.validate().is_err());
        assert!(solve_linear(&data, &[1.0, 2.0], &InnerOptions::default()).is_err());
        let floor = PowerFloor::PerReceiver(vec![0.1, 0.1]);
        let reference =
            Allocation::from_matrices(CMat::identity(3, 3), CMat::zeros(3, 3), &data.channel);
        assert!(
            recover_rank_one(&data, &floor, &reference, 1e-6, &InnerOptions::default()).is_err()
        );
    }

    #[test]
    fn zero_weights_stop_immediately() {
        let data = toy(1.0);
        let flat = data.with_params(&[0.0], &data.beta);
        let sol = solve_inner(&flat, &InnerOptions::default(), None).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.oracle_calls, 0);
        assert_eq!(sol.gap, 0.0);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn infeasible_target_reported() {
        let mut data = toy(1.0);
        data.gamma_req = 1e6;
        assert!(matches!(
            find_feasible_point(&data, &InnerOptions::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn single_er_without_leakage_limit_uses_full_power() {
        // A huge leakage ceiling leaves only the budget and SINR rows active.
        let data = toy(1e6);
        let alloc = solve_linear(&data, &[1.0], &InnerOptions::default()).unwrap();
        let used = alloc.total_power();
        assert!((used - data.p_max).abs() <= 1e-6 * data.p_max, "{used}");
        let top = max_eigenvalue(&data.channel.er_gram(0)) * data.p_max;
        assert!(alloc.tau[0] <= top * (1.0 + 1e-6));
        assert!(constraint_violation(&data, &alloc.w_mat, &alloc.v) <= 1e-6);
    }

    #[test]
    fn conditional_gradient_is_monotone_and_tau_is_tight() {
        let data = scenario(5);
        let sol = solve_inner(&data, &InnerOptions::default(), None).unwrap();
        assert!(sol.converged);
        assert!(sol.gap <= sol.threshold);
        for pair in sol.trace.windows(2) {
            assert!(
                pair[1].objective >= pair[0].objective - 1e-12 * pair[0].objective.abs().max(1.0)
            );
        }
        let tau = data.received_powers(&sol.allocation.w_mat, &sol.allocation.v);
        for (a, b) in tau.iter().zip(&sol.allocation.tau) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
        }
        assert!(constraint_violation(&data, &sol.allocation.w_mat, &sol.allocation.v) <= 1e-6);
        // A warm start from the final atoms needs no further descent.
        let again = solve_inner(&data, &InnerOptions::default(), Some(sol.state.clone())).unwrap();
        assert!(again.objective >= sol.objective - 1e-9 * sol.objective.abs());
    }

    #[test]
    fn recovery_is_rank_one_with_valid_duals() {
        let data = scenario(2);
        let opts = InnerOptions::default();
        let sol = solve_inner(&data, &opts, None).unwrap();
        let delta = floor_backoff(&data, &sol.allocation.tau, sol.threshold);
        assert!(delta > 0.0 && delta <= MAX_BACKOFF);
        let floor = PowerFloor::PerReceiver(sol.allocation.tau.clone());
        let rec = recover_rank_one(&data, &floor, &sol.allocation, delta, &opts).unwrap();
        assert!(rec.rank_ok);
        rec.ensure_rank_one(opts.rank_tol).unwrap();
        let w = &rec.allocation.w_mat;
        assert!(fro(&(outer(&rec.allocation.w) - w)) <= 1e-5 * fro(w));
        let got = data.received_powers(w, &rec.allocation.v);
        for (g, t) in got.iter().zip(&sol.allocation.tau) {
            assert!(*g >= t * (1.0 - rec.backoff) * (1.0 - 1e-6));
        }
        let kkt = check_kkt(
            &data,
            &rec.allocation,
            &rec.floor.backed_off(rec.backoff),
            &rec.duals,
        );
        assert!(kkt.alpha > 0.0);
        assert!(kkt.signs_ok(1e-9));
        assert!(kkt.rank_ok());
        // Doubled multipliers no longer match the solver's dual slack.
        let off = check_kkt(
            &data,
            &rec.allocation,
            &rec.floor.backed_off(rec.backoff),
            &rec.duals.scaled(2.0),
        );
        assert!(off.stationarity_w.max(off.stationarity_v) > 1e-3);
    }

    #[test]
    fn rank_ratio_of_outer_product() {
        let w = CVec::from_vec(vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, 1.0)]);
        assert!(rank_ratio(&outer(&w)) < 1e-14);
        assert!((rank_ratio(&CMat::identity(3, 3)) - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn principal_component_phase_invariant(theta in 0.0f64..std::f64::consts::TAU, s in 0.1f64..10.0) {
            let data = toy(1.0);
            let w = CVec::from_vec(vec![c(0.7, -0.1), c(0.2, 0.4), c(-0.5, 0.3)]).scale(s.sqrt());
            let rot = &w * Complex64::from_polar(1.0, theta);
            let a = Allocation::from_matrices(outer(&w), CMat::zeros(3, 3), &data.channel);
            let b = Allocation::from_matrices(outer(&rot), CMat::zeros(3, 3), &data.channel);
            prop_assert!(fro(&(outer(&a.w) - outer(&w))) <= 1e-10 * s);
            prop_assert!(fro(&(outer(&a.w) - outer(&b.w))) <= 1e-10 * s);
            prop_assert!((a.tau[0] - b.tau[0]).abs() <= 1e-12 * a.tau[0].max(1e-12));
        }

        #[test]
        fn backoff_in_range(t in 0.0f64..1.0, thr in 1e-12f64..1e-3) {
            let data = toy(1.0);
            let d = floor_backoff(&data, &[t], thr);
            prop_assert!(d >= 1e-8 && d <= MAX_BACKOFF);
        }
    }
}

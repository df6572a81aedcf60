//! Linear-objective semidefinite programs over complex Hermitian blocks.
//!
//! Problems are stated with Hermitian PSD variable blocks, nonnegative
//! scalars, linear constraints of any sense and linear matrix inequalities
//! `K + sum_t w_t F_t^H X_t F_t + sum_s x_s M_s >= 0`. [`solve`] embeds
//! everything into a real symmetric standard form (one slack PSD block per
//! LMI, one slack scalar per inequality) and runs the interior-point method
//! in [`ipm`].
//!
//! Dual conventions refer to the minimization form (a maximization is solved
//! as the minimization of the negated objective):
//!
//! ```text
//! Z_b = C_b - sum_i y_i A_ib - sum_l sum_t w_t F_t D_l F_t^H,   Z_b >= 0, D_l >= 0
//! ```
//!
//! so `y_i >= 0` for `>=` rows and `y_i <= 0` for `<=` rows.

pub mod dump;
pub mod embed;
pub mod ipm;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{c, fro, inner, is_hermitian, CMat, RMat};
use embed::{embed_unchecked, unembed};
use ipm::{IpmOptions, IpmStatus, RealRow, RealSdp};

pub use embed::embed_hermitian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScalarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    Minimize,
    Maximize,
}

/// `sum_b Re tr(C_b X_b) + sum_s c_s x_s`.
#[derive(Debug, Clone, Default)]
pub struct LinearExpr {
    pub blocks: Vec<(BlockId, CMat)>,
    pub scalars: Vec<(ScalarId, f64)>,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn block(mut self, id: BlockId, coeff: CMat) -> Self {
        self.blocks.push((id, coeff));
        self
    }

    pub fn scalar(mut self, id: ScalarId, coeff: f64) -> Self {
        self.scalars.push((id, coeff));
        self
    }

    pub fn eval(&self, blocks: &[CMat], scalars: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|(b, a)| inner(a, &blocks[b.0]))
            .sum::<f64>()
            + self
                .scalars
                .iter()
                .map(|(s, a)| a * scalars[s.0])
                .sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub name: String,
    pub expr: LinearExpr,
    pub sense: Sense,
    pub rhs: f64,
}

/// `weight * F^H X_block F`.
#[derive(Debug, Clone)]
pub struct LmiTerm {
    pub block: BlockId,
    pub factor: CMat,
    pub weight: f64,
}

/// `constant + sum terms + sum_s x_s M_s >= 0`.
#[derive(Debug, Clone)]
pub struct LmiConstraint {
    pub name: String,
    pub constant: CMat,
    pub terms: Vec<LmiTerm>,
    pub scalar_terms: Vec<(ScalarId, CMat)>,
}

impl LmiConstraint {
    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn eval(&self, blocks: &[CMat], scalars: &[f64]) -> CMat {
        let mut out = self.constant.clone();
        for t in &self.terms {
            out += (t.factor.adjoint() * &blocks[t.block.0] * &t.factor).scale(t.weight);
        }
        for (s, m) in &self.scalar_terms {
            out += m.scale(scalars[s.0]);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BlockSpec {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    pub scalars: Vec<String>,
    pub goal: Goal,
    pub objective: LinearExpr,
    pub constraints: Vec<LinearConstraint>,
    pub lmis: Vec<LmiConstraint>,
}

impl SdpProblem {
    pub fn new(goal: Goal) -> Self {
        Self {
            blocks: Vec::new(),
            scalars: Vec::new(),
            goal,
            objective: LinearExpr::new(),
            constraints: Vec::new(),
            lmis: Vec::new(),
        }
    }

    pub fn add_block(&mut self, name: impl Into<String>, dim: usize) -> BlockId {
        self.blocks.push(BlockSpec {
            name: name.into(),
            dim,
        });
        BlockId(self.blocks.len() - 1)
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> ScalarId {
        self.scalars.push(name.into());
        ScalarId(self.scalars.len() - 1)
    }

    pub fn set_objective(&mut self, expr: LinearExpr) {
        self.objective = expr;
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        expr: LinearExpr,
        sense: Sense,
        rhs: f64,
    ) {
        self.constraints.push(LinearConstraint {
            name: name.into(),
            expr,
            sense,
            rhs,
        });
    }

    pub fn add_lmi(&mut self, lmi: LmiConstraint) {
        self.lmis.push(lmi);
    }

    pub fn validate(&self) -> Result<()> {
        if self.constraints.is_empty() && self.lmis.is_empty() {
            return Err(Error::Validation("problem has no constraints".into()));
        }
        let check_expr = |what: &str, e: &LinearExpr| -> Result<()> {
            for (b, a) in &e.blocks {
                let spec = self
                    .blocks
                    .get(b.0)
                    .ok_or_else(|| Error::Validation(format!("{what}: unknown block {}", b.0)))?;
                if a.nrows() != spec.dim || a.ncols() != spec.dim {
                    return Err(Error::Validation(format!(
                        "{what}: coefficient for block {} has wrong shape",
                        spec.name
                    )));
                }
                if !is_hermitian(a, 1e-12 * a.iter().map(|z| z.norm()).fold(1.0, f64::max)) {
                    return Err(Error::Validation(format!(
                        "{what}: coefficient for block {} is not Hermitian",
                        spec.name
                    )));
                }
            }
            if let Some((s, _)) = e.scalars.iter().find(|(s, _)| s.0 >= self.scalars.len()) {
                return Err(Error::Validation(format!("{what}: unknown scalar {}", s.0)));
            }
            Ok(())
        };
        check_expr("objective", &self.objective)?;
        for con in &self.constraints {
            check_expr(&con.name, &con.expr)?;
            if !con.rhs.is_finite() {
                return Err(Error::Validation(format!(
                    "{}: non-finite right-hand side",
                    con.name
                )));
            }
        }
        for lmi in &self.lmis {
            let m = lmi.dim();
            if !is_hermitian(&lmi.constant, 1e-12 * fro(&lmi.constant).max(1.0)) {
                return Err(Error::Validation(format!(
                    "{}: constant is not Hermitian",
                    lmi.name
                )));
            }
            for t in &lmi.terms {
                let spec = self
                    .blocks
                    .get(t.block.0)
                    .ok_or_else(|| Error::Validation(format!("{}: unknown block", lmi.name)))?;
                if t.factor.nrows() != spec.dim || t.factor.ncols() != m {
                    return Err(Error::Validation(format!(
                        "{}: factor for block {} has wrong shape",
                        lmi.name, spec.name
                    )));
                }
            }
            for (s, mat) in &lmi.scalar_terms {
                if s.0 >= self.scalars.len() || mat.nrows() != m || !is_hermitian(mat, 1e-12) {
                    return Err(Error::Validation(format!("{}: bad scalar term", lmi.name)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub tol_psd: f64,
    pub tol_infeas: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            tol_psd: 1e-9,
            tol_infeas: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub primal_blocks: Vec<CMat>,
    pub primal_scalars: Vec<f64>,
    /// One multiplier per linear constraint.
    pub dual_values: Vec<f64>,
    /// `Z_b` per variable block.
    pub block_duals: Vec<CMat>,
    /// Reduced cost per scalar.
    pub scalar_duals: Vec<f64>,
    /// `D_l` per LMI.
    pub lmi_duals: Vec<CMat>,
    /// Value of each LMI expression at the solution.
    pub lmi_slacks: Vec<CMat>,
    /// Primal objective in the problem's own sense.
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

/// Orthonormal basis of the `m x m` Hermitian matrices under `Re tr(A B)`.
pub(crate) fn hermitian_basis(m: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(m * m);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for p in 0..m {
        let mut e = CMat::zeros(m, m);
        e[(p, p)] = c(1.0, 0.0);
        out.push(e);
    }
    for p in 0..m {
        for q in (p + 1)..m {
            let mut e = CMat::zeros(m, m);
            e[(p, q)] = c(r, 0.0);
            e[(q, p)] = c(r, 0.0);
            out.push(e);
            let mut f = CMat::zeros(m, m);
            f[(p, q)] = c(0.0, r);
            f[(q, p)] = c(0.0, -r);
            out.push(f);
        }
    }
    out
}

/// Index bookkeeping between the complex problem and its real embedding.
#[derive(Debug, Clone)]
pub(crate) struct Embedding {
    pub real: RealSdp,
    n_blocks: usize,
    n_scalars: usize,
    /// Scale of each LMI slack block (`S_l = scale * S_hat_l`).
    lmi_scale: Vec<f64>,
    /// Objective sign applied to reach minimization form.
    sign: f64,
}

fn embed_coeff(a: &CMat) -> RMat {
    embed_unchecked(a) * 0.5
}

pub(crate) fn to_real(problem: &SdpProblem) -> Embedding {
    let nb = problem.blocks.len();
    let ns = problem.scalars.len();
    let n_ineq = problem
        .constraints
        .iter()
        .filter(|c| c.sense != Sense::Eq)
        .count();
    let mut dense_dims: Vec<usize> = problem.blocks.iter().map(|b| 2 * b.dim).collect();
    dense_dims.extend(problem.lmis.iter().map(|l| 2 * l.dim()));
    let n_lin = ns + n_ineq;
    let sign = match problem.goal {
        Goal::Minimize => 1.0,
        Goal::Maximize => -1.0,
    };

    let mut c_dense: Vec<RMat> = dense_dims.iter().map(|&n| RMat::zeros(n, n)).collect();
    let mut c_lin = DVector::zeros(n_lin);
    for (b, a) in &problem.objective.blocks {
        c_dense[b.0] += embed_coeff(a) * sign;
        #[cfg(debug_assertions)]
        debug_check_pairing(a);
    }
    for (s, a) in &problem.objective.scalars {
        c_lin[s.0] += sign * a;
    }

    let mut rows = Vec::new();
    let mut b = Vec::new();
    let mut slack = ns;
    for con in &problem.constraints {
        let mut row = RealRow::default();
        for (blk, a) in &con.expr.blocks {
            row.dense.push((blk.0, embed_coeff(a)));
        }
        row.lin
            .extend(con.expr.scalars.iter().map(|(s, a)| (s.0, *a)));
        let norm = (row.dense.iter().map(|(_, a)| a.norm_squared()).sum::<f64>()
            + row.lin.iter().map(|(_, a)| a * a).sum::<f64>())
        .sqrt()
        .max(f64::MIN_POSITIVE);
        match con.sense {
            Sense::Eq => {}
            Sense::Le => {
                row.lin.push((slack, norm));
                slack += 1;
            }
            Sense::Ge => {
                row.lin.push((slack, -norm));
                slack += 1;
            }
        }
        rows.push(row);
        b.push(con.rhs);
    }

    let mut lmi_scale = Vec::with_capacity(problem.lmis.len());
    for (l, lmi) in problem.lmis.iter().enumerate() {
        let slack_block = nb + l;
        let scale = lmi
            .terms
            .iter()
            .map(|t| t.weight.abs() * t.factor.norm_squared())
            .chain(lmi.scalar_terms.iter().map(|(_, m)| fro(m)))
            .fold(fro(&lmi.constant), f64::max)
            .max(f64::MIN_POSITIVE);
        lmi_scale.push(scale);
        for e in hermitian_basis(lmi.dim()) {
            let mut row = RealRow::default();
            row.dense.push((slack_block, embed_coeff(&e) * scale));
            for t in &lmi.terms {
                let coeff = (&t.factor * &e * t.factor.adjoint()).scale(-t.weight);
                row.dense.push((t.block.0, embed_coeff(&coeff)));
            }
            for (s, m) in &lmi.scalar_terms {
                row.lin.push((s.0, -inner(&e, m)));
            }
            rows.push(row);
            b.push(inner(&e, &lmi.constant));
        }
    }

    // Merge duplicate block entries within a row.
    for row in &mut rows {
        row.dense.sort_by_key(|(blk, _)| *blk);
        let mut merged: Vec<(usize, RMat)> = Vec::with_capacity(row.dense.len());
        for (blk, a) in row.dense.drain(..) {
            match merged.last_mut() {
                Some((last, acc)) if *last == blk => *acc += a,
                _ => merged.push((blk, a)),
            }
        }
        row.dense = merged;
    }

    Embedding {
        real: RealSdp {
            dense_dims,
            n_lin,
            c_dense,
            c_lin,
            rows,
            b: DVector::from_vec(b),
        },
        n_blocks: nb,
        n_scalars: ns,
        lmi_scale,
        sign,
    }
}

#[cfg(debug_assertions)]
fn debug_check_pairing(a: &CMat) {
    use crate::linalg::eigh_desc;
    if a.nrows() > 16 {
        return;
    }
    let (vals, _) = eigh_desc(a);
    let mut emb: Vec<f64> = nalgebra::SymmetricEigen::new(embed_unchecked(a))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    emb.sort_by(|x, y| y.total_cmp(x));
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for (k, v) in vals.iter().enumerate() {
        debug_assert!(
            (emb[2 * k] - v).abs() <= 1e-9 * scale && (emb[2 * k + 1] - v).abs() <= 1e-9 * scale
        );
    }
}

pub fn solve(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let emb = to_real(problem);
    let res = ipm::solve(
        &emb.real,
        &IpmOptions {
            tol_feas: opts.tol_feas,
            tol_gap: opts.tol_gap,
            tol_infeas: opts.tol_infeas,
            max_iter: opts.max_iter,
        },
    );
    let status = match res.status {
        IpmStatus::Optimal => SdpStatus::Optimal,
        IpmStatus::PrimalInfeasible => SdpStatus::Infeasible,
        IpmStatus::DualInfeasible => SdpStatus::Unbounded,
        IpmStatus::MaxIter => SdpStatus::MaxIter,
    };
    let nb = emb.n_blocks;
    let primal_blocks: Vec<CMat> = res.x[..nb].iter().map(unembed).collect();
    let primal_scalars: Vec<f64> = res.xl.iter().take(emb.n_scalars).copied().collect();
    let block_duals: Vec<CMat> = res.z[..nb].iter().map(|z| unembed(z).scale(2.0)).collect();
    let scalar_duals: Vec<f64> = res.zl.iter().take(emb.n_scalars).copied().collect();
    let lmi_duals: Vec<CMat> = res.z[nb..]
        .iter()
        .zip(&emb.lmi_scale)
        .map(|(z, s)| unembed(z).scale(2.0 / s))
        .collect();
    let lmi_slacks: Vec<CMat> = problem
        .lmis
        .iter()
        .map(|l| l.eval(&primal_blocks, &primal_scalars))
        .collect();
    let dual_values: Vec<f64> = res
        .y
        .iter()
        .take(problem.constraints.len())
        .copied()
        .collect();
    Ok(SdpSolution {
        status,
        objective: emb.sign * res.pobj,
        dual_objective: emb.sign * res.dobj,
        gap: res.gap,
        primal_residual: res.pinf,
        dual_residual: res.dinf,
        iterations: res.iterations,
        primal_blocks,
        primal_scalars,
        dual_values,
        block_duals,
        scalar_duals,
        lmi_duals,
        lmi_slacks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh_desc, min_eigenvalue};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        let a = CMat::from_fn(n, n, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (&a + a.adjoint()).scale(0.5)
    }

    #[test]
    fn scalar_lp_in_sdp_clothing() {
        let mut p = SdpProblem::new(Goal::Minimize);
        let x = p.add_block("X", 1);
        let one = CMat::identity(1, 1);
        p.set_objective(LinearExpr::new().block(x, one.clone()));
        p.add_constraint("tr", LinearExpr::new().block(x, one), Sense::Ge, 1.0);
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_relative_eq!(sol.objective, 1.0, epsilon = 1e-7);
        assert_relative_eq!(sol.primal_blocks[0][(0, 0)].re, 1.0, epsilon = 1e-7);
        assert!(sol.dual_values[0] > 0.0);
    }

    #[test]
    fn min_trace_product_is_min_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=6 {
            let cm = random_hermitian(&mut rng, n);
            let mut p = SdpProblem::new(Goal::Minimize);
            let x = p.add_block("X", n);
            p.set_objective(LinearExpr::new().block(x, cm.clone()));
            p.add_constraint(
                "tr",
                LinearExpr::new().block(x, CMat::identity(n, n)),
                Sense::Eq,
                1.0,
            );
            let sol = solve(&p, &SdpOptions::default()).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal);
            assert!((sol.objective - min_eigenvalue(&cm)).abs() < 1e-7);
            assert!(min_eigenvalue(&sol.primal_blocks[0]) >= -1e-9);
            assert!(min_eigenvalue(&sol.block_duals[0]) >= -1e-9);
            // Z = C - y I
            let z = &cm - CMat::identity(n, n).scale(sol.dual_values[0]);
            assert!((&z - &sol.block_duals[0]).norm() < 1e-7);
        }
    }

    #[test]
    fn maximize_reports_own_sense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cm = random_hermitian(&mut rng, 3);
        let mut p = SdpProblem::new(Goal::Maximize);
        let x = p.add_block("X", 3);
        p.set_objective(LinearExpr::new().block(x, cm.clone()));
        p.add_constraint(
            "tr",
            LinearExpr::new().block(x, CMat::identity(3, 3)),
            Sense::Le,
            2.0,
        );
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        let (vals, _) = eigh_desc(&cm);
        assert_relative_eq!(sol.objective, 2.0 * vals[0].max(0.0), epsilon = 1e-7);
    }

    #[test]
    fn lmi_constraint_bounds_eigenvalue() {
        // max tr(X) s.t. I - X >= 0 (as LMI), X >= 0, 2x2 -> value 2.
        let mut p = SdpProblem::new(Goal::Maximize);
        let x = p.add_block("X", 2);
        p.set_objective(LinearExpr::new().block(x, CMat::identity(2, 2)));
        p.add_lmi(LmiConstraint {
            name: "cap".into(),
            constant: CMat::identity(2, 2),
            terms: vec![LmiTerm {
                block: x,
                factor: CMat::identity(2, 2),
                weight: -1.0,
            }],
            scalar_terms: vec![],
        });
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_relative_eq!(sol.objective, 2.0, epsilon = 1e-7);
        assert!(min_eigenvalue(&sol.lmi_slacks[0]) > -1e-7);
        // Minimization form: Z_X = -I + D  with D = I at the optimum.
        let z = CMat::identity(2, 2).scale(-1.0) + &sol.lmi_duals[0];
        assert!((&z - &sol.block_duals[0]).norm() < 1e-6);
    }

    #[test]
    fn infeasible_problem_reported() {
        let mut p = SdpProblem::new(Goal::Minimize);
        let x = p.add_block("X", 2);
        p.set_objective(LinearExpr::new().block(x, CMat::identity(2, 2)));
        p.add_constraint(
            "neg",
            LinearExpr::new().block(x, CMat::identity(2, 2)),
            Sense::Le,
            -1.0,
        );
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn unbounded_problem_reported() {
        let mut p = SdpProblem::new(Goal::Maximize);
        let x = p.add_block("X", 2);
        let s = p.add_scalar("s");
        p.set_objective(LinearExpr::new().block(x, CMat::identity(2, 2)));
        p.add_constraint(
            "free",
            LinearExpr::new()
                .block(x, CMat::identity(2, 2))
                .scalar(s, -1.0),
            Sense::Eq,
            0.0,
        );
        let sol = solve(&p, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Unbounded);
    }

    #[test]
    fn row_scaling_does_not_move_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cm = random_hermitian(&mut rng, 3);
        let a2 = random_hermitian(&mut rng, 3);
        let build = |k: f64| {
            let mut p = SdpProblem::new(Goal::Minimize);
            let x = p.add_block("X", 3);
            p.set_objective(LinearExpr::new().block(x, cm.clone()));
            p.add_constraint(
                "tr",
                LinearExpr::new().block(x, CMat::identity(3, 3).scale(k)),
                Sense::Eq,
                k,
            );
            p.add_constraint(
                "side",
                LinearExpr::new().block(x, a2.scale(k)),
                Sense::Le,
                0.1 * k,
            );
            p
        };
        let base = solve(&build(1.0), &SdpOptions::default()).unwrap();
        for k in [1e-3, 7.0, 1e4] {
            let s = solve(&build(k), &SdpOptions::default()).unwrap();
            assert_eq!(s.status, SdpStatus::Optimal);
            assert!((&s.primal_blocks[0] - &base.primal_blocks[0]).norm() < 1e-6);
            assert_relative_eq!(s.dual_values[1] * k, base.dual_values[1], epsilon = 1e-5);
        }
    }

    #[test]
    fn weak_duality_at_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..10 {
            let cm = random_hermitian(&mut rng, 4);
            let a2 = random_hermitian(&mut rng, 4);
            let mut p = SdpProblem::new(Goal::Minimize);
            let x = p.add_block("X", 4);
            p.set_objective(LinearExpr::new().block(x, cm));
            p.add_constraint(
                "tr",
                LinearExpr::new().block(x, CMat::identity(4, 4)),
                Sense::Eq,
                1.0,
            );
            p.add_constraint("side", LinearExpr::new().block(x, a2), Sense::Ge, -0.2);
            let sol = solve(&p, &SdpOptions::default()).unwrap();
            if sol.is_optimal() {
                let scale = 1.0 + sol.objective.abs() + sol.dual_objective.abs();
                assert!(sol.objective - sol.dual_objective >= -1e-9 * scale - sol.gap * scale);
            }
        }
    }

    #[test]
    fn rejects_malformed_problems() {
        let p = SdpProblem::new(Goal::Minimize);
        assert!(solve(&p, &SdpOptions::default()).is_err());
        let mut q = SdpProblem::new(Goal::Minimize);
        let x = q.add_block("X", 2);
        q.add_constraint(
            "bad",
            LinearExpr::new().block(x, CMat::identity(3, 3)),
            Sense::Eq,
            1.0,
        );
        assert!(matches!(
            solve(&q, &SdpOptions::default()),
            Err(Error::Validation(_))
        ));
        let mut r = SdpProblem::new(Goal::Minimize);
        let x = r.add_block("X", 2);
        let mut nh = CMat::identity(2, 2);
        nh[(0, 1)] = c(0.0, 1.0);
        r.add_constraint("nh", LinearExpr::new().block(x, nh), Sense::Eq, 1.0);
        assert!(matches!(
            solve(&r, &SdpOptions::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn hermitian_basis_is_orthonormal() {
        let basis = hermitian_basis(3);
        assert_eq!(basis.len(), 9);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((inner(a, b) - expected).abs() < 1e-15);
            }
        }
    }
}

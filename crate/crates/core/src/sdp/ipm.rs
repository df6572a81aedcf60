//! Primal-dual path-following interior-point method for real standard-form
//! SDPs with dense symmetric blocks and one nonnegative orthant block.
//!
//! Primal: `min <C, X>  s.t.  <A_i, X> = b_i,  X in K`.
//! Dual:   `max b^T y   s.t.  C - sum_i y_i A_i = Z,  Z in K`.
//!
//! Search directions use Nesterov-Todd scaling with a Mehrotra
//! predictor-corrector step. The start point is `X = rho_p I`, `Z = rho_d I`
//! with `y = 0`; iterates need not be feasible.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type RMat = DMatrix<f64>;

/// One linear equality row: sparse over dense blocks, sparse over the
/// orthant variables.
#[derive(Debug, Clone, Default)]
pub struct RealRow {
    pub dense: Vec<(usize, RMat)>,
    pub lin: Vec<(usize, f64)>,
}

impl RealRow {
    fn norm_sq(&self) -> f64 {
        self.dense
            .iter()
            .map(|(_, a)| a.norm_squared())
            .sum::<f64>()
            + self.lin.iter().map(|(_, a)| a * a).sum::<f64>()
    }

    fn scale(&mut self, s: f64) {
        for (_, a) in &mut self.dense {
            *a *= s;
        }
        for (_, a) in &mut self.lin {
            *a *= s;
        }
    }
}

/// Real standard-form problem.
#[derive(Debug, Clone)]
pub struct RealSdp {
    pub dense_dims: Vec<usize>,
    pub n_lin: usize,
    pub c_dense: Vec<RMat>,
    pub c_lin: DVector<f64>,
    pub rows: Vec<RealRow>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct IpmOptions {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub tol_infeas: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpmStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct IpmResult {
    pub x: Vec<RMat>,
    pub xl: DVector<f64>,
    pub y: DVector<f64>,
    pub z: Vec<RMat>,
    pub zl: DVector<f64>,
    pub status: IpmStatus,
    pub iterations: usize,
    pub pobj: f64,
    pub dobj: f64,
    /// Relative primal residual on the normalized problem.
    pub pinf: f64,
    /// Relative dual residual on the normalized problem.
    pub dinf: f64,
    /// Relative duality gap on the normalized problem.
    pub gap: f64,
}

#[derive(Clone)]
struct Iterate {
    x: Vec<RMat>,
    xl: DVector<f64>,
    y: DVector<f64>,
    z: Vec<RMat>,
    zl: DVector<f64>,
}

/// NT scaling data of one dense block: `W = G G^T`, `G^T Z G = G^-1 X G^-T = D`.
struct DenseScaling {
    g: RMat,
    g_inv: RMat,
    w: RMat,
    d: DVector<f64>,
    chol_x: RMat,
    chol_z: RMat,
}

struct Direction {
    dx: Vec<RMat>,
    dxl: DVector<f64>,
    dy: DVector<f64>,
    dz: Vec<RMat>,
    dzl: DVector<f64>,
}

impl RealSdp {
    fn m(&self) -> usize {
        self.rows.len()
    }

    fn barrier_dim(&self) -> f64 {
        (self.dense_dims.iter().sum::<usize>() + self.n_lin) as f64
    }

    fn apply_a(&self, x: &[RMat], xl: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows.iter().map(|row| {
                row.dense.iter().map(|(b, a)| a.dot(&x[*b])).sum::<f64>()
                    + row.lin.iter().map(|(k, a)| a * xl[*k]).sum::<f64>()
            }),
        )
    }

    fn apply_at(&self, y: &DVector<f64>) -> (Vec<RMat>, DVector<f64>) {
        let mut out: Vec<RMat> = self.dense_dims.iter().map(|&n| RMat::zeros(n, n)).collect();
        let mut out_l = DVector::zeros(self.n_lin);
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for (b, a) in &row.dense {
                out[*b] += a * yi;
            }
            for (k, a) in &row.lin {
                out_l[*k] += yi * a;
            }
        }
        (out, out_l)
    }

    fn objective(&self, x: &[RMat], xl: &DVector<f64>) -> f64 {
        self.c_dense
            .iter()
            .zip(x)
            .map(|(c, x)| c.dot(x))
            .sum::<f64>()
            + self.c_lin.dot(xl)
    }

    fn c_norm(&self) -> f64 {
        (self.c_dense.iter().map(|c| c.norm_squared()).sum::<f64>() + self.c_lin.norm_squared())
            .sqrt()
    }
}

fn symmetrize(a: &mut RMat) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

fn cholesky_lower(a: &RMat) -> Option<RMat> {
    nalgebra::Cholesky::new(a.clone()).map(|c| c.l())
}

fn lower_inverse(l: &RMat) -> Option<RMat> {
    let n = l.nrows();
    l.solve_lower_triangular(&RMat::identity(n, n))
}

fn dense_scaling(x: &RMat, z: &RMat) -> Option<DenseScaling> {
    let lx = cholesky_lower(x)?;
    let lz = cholesky_lower(z)?;
    let svd = (lz.transpose() * &lx).svd(true, true);
    let v = svd.v_t.as_ref()?.transpose();
    let d = svd.singular_values.clone();
    if d.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return None;
    }
    let inv_sqrt = d.map(|s| 1.0 / s.sqrt());
    let sqrt = d.map(f64::sqrt);
    let g = &lx * &v * RMat::from_diagonal(&inv_sqrt);
    let lx_inv = lower_inverse(&lx)?;
    let g_inv = RMat::from_diagonal(&sqrt) * v.transpose() * lx_inv;
    let mut w = &g * g.transpose();
    symmetrize(&mut w);
    Some(DenseScaling {
        g,
        g_inv,
        w,
        d,
        chol_x: lx,
        chol_z: lz,
    })
}

/// Largest `alpha <= 1` with `X + alpha dX` PSD, given `X = L L^T`.
fn max_step_dense(l: &RMat, dx: &RMat) -> f64 {
    let linv = match lower_inverse(l) {
        Some(m) => m,
        None => return 0.0,
    };
    let mut m = &linv * dx * linv.transpose();
    symmetrize(&mut m);
    let lmin = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if lmin < 0.0 {
        (-1.0 / lmin).min(1.0)
    } else {
        1.0
    }
}

fn max_step_lin(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&v, &d)| -v / d)
        .fold(1.0, f64::min)
}

/// Scales rows to unit norm and the objective to unit norm. Returns the row
/// scales and the objective scale so results can be mapped back.
fn normalize(p: &mut RealSdp) -> (Vec<f64>, f64) {
    let mut row_scale = Vec::with_capacity(p.rows.len());
    for (i, row) in p.rows.iter_mut().enumerate() {
        let n = row.norm_sq().sqrt();
        let s = if n > 0.0 { 1.0 / n } else { 1.0 };
        row.scale(s);
        p.b[i] *= s;
        row_scale.push(s);
    }
    let cn = p.c_norm();
    let cs = if cn > 0.0 { 1.0 / cn } else { 1.0 };
    for c in &mut p.c_dense {
        *c *= cs;
    }
    p.c_lin *= cs;
    (row_scale, cs)
}

/// Solves `problem`. Duals and objective values refer to the problem as
/// given (before internal normalization); residuals and the gap refer to the
/// normalized problem.
pub fn solve(problem: &RealSdp, opts: &IpmOptions) -> IpmResult {
    let mut p = problem.clone();
    let (row_scale, obj_scale) = normalize(&mut p);
    let mut res = solve_normalized(&p, opts);
    // y_orig_i = y_norm_i * row_scale_i / obj_scale; Z_orig = Z_norm / obj_scale.
    for (i, s) in row_scale.iter().enumerate() {
        res.y[i] *= s / obj_scale;
    }
    for z in &mut res.z {
        *z /= obj_scale;
    }
    res.zl /= obj_scale;
    res.pobj /= obj_scale;
    res.dobj /= obj_scale;
    res
}

#[derive(Clone)]
struct Residuals {
    rp: DVector<f64>,
    rd: Vec<RMat>,
    rd_l: DVector<f64>,
    aty: Vec<RMat>,
    aty_l: DVector<f64>,
    ax_norm: f64,
    pobj: f64,
    dobj: f64,
    mu: f64,
    pinf: f64,
    dinf: f64,
    gap: f64,
}

fn residuals(p: &RealSdp, it: &Iterate, nu: f64, b_norm: f64, c_norm: f64) -> Residuals {
    let ax = p.apply_a(&it.x, &it.xl);
    let rp = &p.b - &ax;
    let (aty, aty_l) = p.apply_at(&it.y);
    let rd: Vec<RMat> = p
        .c_dense
        .iter()
        .zip(&aty)
        .zip(&it.z)
        .map(|((c, a), z)| c - a - z)
        .collect();
    let rd_l = &p.c_lin - &aty_l - &it.zl;
    let pobj = p.objective(&it.x, &it.xl);
    let dobj = p.b.dot(&it.y);
    let xz: f64 = it.x.iter().zip(&it.z).map(|(x, z)| x.dot(z)).sum::<f64>() + it.xl.dot(&it.zl);
    let rd_norm = (rd.iter().map(|r| r.norm_squared()).sum::<f64>() + rd_l.norm_squared()).sqrt();
    Residuals {
        pinf: rp.norm() / (1.0 + b_norm),
        dinf: rd_norm / (1.0 + c_norm),
        gap: xz.abs() / (1.0 + pobj.abs() + dobj.abs()),
        mu: xz / nu,
        ax_norm: ax.norm(),
        rp,
        rd,
        rd_l,
        aty,
        aty_l,
        pobj,
        dobj,
    }
}

/// Linearized KKT system at one iterate, factored once and reused for the
/// predictor, corrector and centering directions.
struct Newton<'a> {
    p: &'a RealSdp,
    scal: Vec<DenseScaling>,
    wl: DVector<f64>,
    gl: DVector<f64>,
    dl: DVector<f64>,
    schur: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    a_wrdw: DVector<f64>,
}

impl<'a> Newton<'a> {
    fn new(
        p: &'a RealSdp,
        it: &Iterate,
        res: &Residuals,
        touch: &[Vec<(usize, &RMat)>],
        lin_rows: &[Vec<(usize, f64)>],
    ) -> Option<Self> {
        let m = p.m();
        let scal: Vec<DenseScaling> =
            it.x.iter()
                .zip(&it.z)
                .map(|(x, z)| dense_scaling(x, z))
                .collect::<Option<_>>()?;
        // Orthant analog of W Z W = X and W = G G^T: w = x / z, g^2 = sqrt(w).
        let wl = it.xl.component_div(&it.zl);
        let gl = wl.map(f64::sqrt);
        let dl = it.xl.component_mul(&it.zl).map(f64::sqrt);

        // Schur complement M_ij = sum_b <A_ib, W_b A_jb W_b> + sum_l a_il w_l a_jl.
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (b, rows) in touch.iter().enumerate() {
            let w = &scal[b].w;
            for (jj, &(j, aj)) in rows.iter().enumerate() {
                let t = w * aj * w;
                for &(i, ai) in &rows[..=jj] {
                    let v = ai.dot(&t);
                    schur[(i, j)] += v;
                    if i != j {
                        schur[(j, i)] += v;
                    }
                }
            }
        }
        for (k, rows) in lin_rows.iter().enumerate() {
            for &(i, ai) in rows {
                for &(j, aj) in rows {
                    schur[(i, j)] += ai * wl[k] * aj;
                }
            }
        }
        let diag_max = schur.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let chol = nalgebra::Cholesky::new(schur.clone()).or_else(|| {
            let mut reg = schur.clone();
            for i in 0..m {
                reg[(i, i)] += 1e-14 * diag_max.max(1e-300);
            }
            nalgebra::Cholesky::new(reg)
        })?;

        // W R_d W is shared by every direction.
        let wrdw: Vec<RMat> = scal
            .iter()
            .zip(&res.rd)
            .map(|(s, r)| &s.w * r * &s.w)
            .collect();
        let wrdw_l = wl.component_mul(&res.rd_l);
        let a_wrdw = p.apply_a(&wrdw, &wrdw_l);
        Some(Self {
            p,
            scal,
            wl,
            gl,
            dl,
            schur,
            chol,
            a_wrdw,
        })
    }

    /// Direction with `dX = T - W dZ W`, `dZ = R_d - A^T dy`, `A dX = r_p`.
    fn direction(&self, res: &Residuals, t: Vec<RMat>, tl: DVector<f64>) -> Direction {
        let p = self.p;
        let rhs = &res.rp - p.apply_a(&t, &tl) + &self.a_wrdw;
        let mut dy = self.chol.solve(&rhs);
        let r = &rhs - &self.schur * &dy;
        dy += self.chol.solve(&r);
        let mut dir = self.recover(res, &t, &tl, dy);
        // Refine against the primal equations themselves, which the Schur
        // matrix only represents up to its conditioning.
        let mut err = &res.rp - p.apply_a(&dir.dx, &dir.dxl);
        for _ in 0..3 {
            let dy = &dir.dy + self.chol.solve(&err);
            let next = self.recover(res, &t, &tl, dy);
            let next_err = &res.rp - p.apply_a(&next.dx, &next.dxl);
            if next_err.norm() >= err.norm() {
                break;
            }
            dir = next;
            err = next_err;
        }
        dir
    }

    fn recover(
        &self,
        res: &Residuals,
        t: &[RMat],
        tl: &DVector<f64>,
        dy: DVector<f64>,
    ) -> Direction {
        let (atdy, atdy_l) = self.p.apply_at(&dy);
        let dz: Vec<RMat> = res.rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
        let dzl = &res.rd_l - &atdy_l;
        let dx: Vec<RMat> = t
            .iter()
            .zip(&dz)
            .zip(&self.scal)
            .map(|((t, dz), s)| {
                let mut d = t - &s.w * dz * &s.w;
                symmetrize(&mut d);
                d
            })
            .collect();
        let dxl = tl - self.wl.component_mul(&dzl);
        Direction {
            dx,
            dxl,
            dy,
            dz,
            dzl,
        }
    }

    /// Right-hand side `T` for the complementarity target `sigma_mu I`, with
    /// the second-order term of `pred` when given.
    fn target(&self, sigma_mu: f64, pred: Option<&Direction>) -> (Vec<RMat>, DVector<f64>) {
        let mut t = Vec::with_capacity(self.scal.len());
        for (b, s) in self.scal.iter().enumerate() {
            let n = s.d.len();
            let prod = pred.map(|pd| {
                let dxs = &s.g_inv * &pd.dx[b] * s.g_inv.transpose();
                let dzs = s.g.transpose() * &pd.dz[b] * &s.g;
                dxs * dzs
            });
            let mut u = RMat::zeros(n, n);
            for k in 0..n {
                for l in 0..n {
                    let mut r = match &prod {
                        Some(pr) => -(pr[(k, l)] + pr[(l, k)]),
                        None => 0.0,
                    };
                    if k == l {
                        r += 2.0 * sigma_mu - 2.0 * s.d[k] * s.d[k];
                    }
                    u[(k, l)] = r / (s.d[k] + s.d[l]);
                }
            }
            let mut tb = &s.g * u * s.g.transpose();
            symmetrize(&mut tb);
            t.push(tb);
        }
        let tl = DVector::from_fn(self.dl.len(), |k, _| {
            let second = pred.map_or(0.0, |pd| {
                (pd.dxl[k] / self.gl[k]) * (pd.dzl[k] * self.gl[k])
            });
            let r = 2.0 * sigma_mu - 2.0 * self.dl[k] * self.dl[k] - 2.0 * second;
            self.gl[k] * (r / (2.0 * self.dl[k]))
        });
        (t, tl)
    }

    fn steps(&self, it: &Iterate, dir: &Direction) -> (f64, f64) {
        let ap = self
            .scal
            .iter()
            .zip(&dir.dx)
            .map(|(s, d)| max_step_dense(&s.chol_x, d))
            .fold(max_step_lin(&it.xl, &dir.dxl), f64::min);
        let ad = self
            .scal
            .iter()
            .zip(&dir.dz)
            .map(|(s, d)| max_step_dense(&s.chol_z, d))
            .fold(max_step_lin(&it.zl, &dir.dzl), f64::min);
        (ap, ad)
    }

    /// `|D^2 - mu I| / mu` over all blocks.
    fn centrality(&self, mu: f64) -> f64 {
        let dense: f64 = self
            .scal
            .iter()
            .flat_map(|s| s.d.iter())
            .map(|d| (d * d - mu).powi(2))
            .sum();
        let lin: f64 = self.dl.iter().map(|d| (d * d - mu).powi(2)).sum();
        (dense + lin).sqrt() / mu
    }
}

/// `sum_b |X_b Z_b|_F` plus the orthant analog.
fn block_products(it: &Iterate) -> f64 {
    let dense: f64 = it.x.iter().zip(&it.z).map(|(x, z)| (x * z).norm()).sum();
    dense + it.xl.component_mul(&it.zl).norm()
}

fn take_step(it: &mut Iterate, dir: &Direction, ap: f64, ad: f64) {
    for b in 0..it.x.len() {
        it.x[b] += &dir.dx[b] * ap;
        it.z[b] += &dir.dz[b] * ad;
        symmetrize(&mut it.x[b]);
        symmetrize(&mut it.z[b]);
    }
    it.xl += &dir.dxl * ap;
    it.zl += &dir.dzl * ad;
    it.y += &dir.dy * ad;
    // Keep the orthant strictly interior against round-off.
    for v in it.xl.iter_mut().chain(it.zl.iter_mut()) {
        if *v <= 0.0 {
            *v = f64::MIN_POSITIVE;
        }
    }
}

/// One Mehrotra predictor-corrector step: direction and damped step lengths.
fn predictor_corrector(
    p: &RealSdp,
    it: &Iterate,
    res: &Residuals,
    nu: f64,
    touch: &[Vec<(usize, &RMat)>],
    lin_rows: &[Vec<(usize, f64)>],
) -> Option<(Direction, f64, f64)> {
    let kkt = Newton::new(p, it, res, touch, lin_rows)?;

    // Predictor: G U G^T with U = -D is -X.
    let pred = kkt.direction(res, it.x.iter().map(|x| -x).collect(), -&it.xl);
    let (ap_a, ad_a) = kkt.steps(it, &pred);
    let mu_aff = {
        let mut s = 0.0;
        for b in 0..it.x.len() {
            let xa = &it.x[b] + &pred.dx[b] * ap_a;
            let za = &it.z[b] + &pred.dz[b] * ad_a;
            s += xa.dot(&za);
        }
        let xa = &it.xl + &pred.dxl * ap_a;
        let za = &it.zl + &pred.dzl * ad_a;
        (s + xa.dot(&za)) / nu
    };
    let sigma = if res.mu > 0.0 {
        (mu_aff / res.mu).clamp(0.0, 1.0).powi(3)
    } else {
        0.0
    };

    let (t, tl) = kkt.target(sigma * res.mu, Some(&pred));
    let dir = kkt.direction(res, t, tl);
    let (ap, ad) = kkt.steps(it, &dir);
    let gamma = (0.9 + 0.09 * ap_a.min(ad_a)).min(0.99);
    let ap = (gamma * ap).min(1.0);
    let ad = (gamma * ad).min(1.0);
    Some((dir, ap, ad))
}

/// Extra predictor-corrector steps after convergence, stopping once the gap
/// is `POLISH_GAP` times the tolerance.
const POLISH_STEPS: usize = 30;
const POLISH_GAP: f64 = 1e-7;
/// Pure centering steps after polishing.
const CENTER_STEPS: usize = 10;

fn solve_normalized(p: &RealSdp, opts: &IpmOptions) -> IpmResult {
    let m = p.m();
    let nu = p.barrier_dim().max(1.0);
    let b_norm = p.b.norm();
    let c_norm = p.c_norm();

    let b_max = p.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let rho_p = (10.0f64).max(nu.sqrt() * (1.0 + b_max));
    let rho_d = (10.0f64).max(nu.sqrt()).max(c_norm);
    let mut it = Iterate {
        x: p.dense_dims
            .iter()
            .map(|&n| RMat::identity(n, n) * rho_p)
            .collect(),
        xl: DVector::from_element(p.n_lin, rho_p),
        y: DVector::zeros(m),
        z: p.dense_dims
            .iter()
            .map(|&n| RMat::identity(n, n) * rho_d)
            .collect(),
        zl: DVector::from_element(p.n_lin, rho_d),
    };

    // Rows touching each dense block.
    let mut touch: Vec<Vec<(usize, &RMat)>> = vec![Vec::new(); p.dense_dims.len()];
    for (i, row) in p.rows.iter().enumerate() {
        for (b, a) in &row.dense {
            touch[*b].push((i, a));
        }
    }
    let mut lin_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.n_lin];
    for (i, row) in p.rows.iter().enumerate() {
        for &(k, a) in &row.lin {
            lin_rows[k].push((i, a));
        }
    }

    let merit = |r: &Residuals| {
        (r.pinf / opts.tol_feas)
            .max(r.dinf / opts.tol_feas)
            .max(r.gap / opts.tol_gap)
    };
    let mut status = IpmStatus::MaxIter;
    let mut iterations = 0;
    let mut stalls = 0;
    let mut res = residuals(p, &it, nu, b_norm, c_norm);
    let mut best: Option<(f64, Iterate)> = None;
    loop {
        if res.pinf <= opts.tol_feas && res.dinf <= opts.tol_feas && res.gap <= opts.tol_gap {
            status = IpmStatus::Optimal;
            break;
        }
        if res.dobj > 0.0 {
            let cert = (res
                .aty
                .iter()
                .zip(&it.z)
                .map(|(a, z)| (a + z).norm_squared())
                .sum::<f64>()
                + (&res.aty_l + &it.zl).norm_squared())
            .sqrt();
            if cert / res.dobj <= opts.tol_infeas {
                status = IpmStatus::PrimalInfeasible;
                break;
            }
        }
        if res.pobj < 0.0 && res.ax_norm / (-res.pobj) <= opts.tol_infeas {
            status = IpmStatus::DualInfeasible;
            break;
        }
        let score = merit(&res);
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, it.clone()));
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let Some((dir, ap, ad)) = predictor_corrector(p, &it, &res, nu, &touch, &lin_rows) else {
            break;
        };
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        take_step(&mut it, &dir, ap, ad);
        res = residuals(p, &it, nu, b_norm, c_norm);
    }

    if status == IpmStatus::Optimal {
        let within = |r: &Residuals| {
            r.pinf <= opts.tol_feas && r.dinf <= opts.tol_feas && r.gap <= opts.tol_gap
        };
        // Push the gap further while feasibility holds, then recenter. Every
        // iterate within tolerance is a candidate; the one with the smallest
        // block products |X_b Z_b|_F wins.
        let mut best_c = (block_products(&it), it.clone(), res.clone());
        let mut cur = (it.clone(), res.clone());
        for _ in 0..POLISH_STEPS {
            if cur.1.gap <= POLISH_GAP * opts.tol_gap {
                break;
            }
            let Some((dir, ap, ad)) = predictor_corrector(p, &cur.0, &cur.1, nu, &touch, &lin_rows)
            else {
                break;
            };
            let mut trial = cur.0.clone();
            take_step(&mut trial, &dir, ap, ad);
            let tres = residuals(p, &trial, nu, b_norm, c_norm);
            if !within(&tres) {
                break;
            }
            let score = block_products(&trial);
            if score < best_c.0 {
                best_c = (score, trial.clone(), tres.clone());
            }
            cur = (trial, tres);
        }
        cur = (best_c.1.clone(), best_c.2.clone());
        for _ in 0..CENTER_STEPS {
            let Some(kkt) = Newton::new(p, &cur.0, &cur.1, &touch, &lin_rows) else {
                break;
            };
            let delta = kkt.centrality(cur.1.mu);
            if delta <= 1e-6 {
                break;
            }
            let (t, tl) = kkt.target(cur.1.mu, None);
            let dir = kkt.direction(&cur.1, t, tl);
            let (ap, ad) = kkt.steps(&cur.0, &dir);
            let mut trial = cur.0.clone();
            take_step(&mut trial, &dir, (0.99 * ap).min(1.0), (0.99 * ad).min(1.0));
            let tres = residuals(p, &trial, nu, b_norm, c_norm);
            if !within(&tres) {
                break;
            }
            let score = block_products(&trial);
            if score < best_c.0 {
                best_c = (score, trial.clone(), tres.clone());
            }
            cur = (trial, tres);
        }
        it = best_c.1;
        res = best_c.2;
    } else if status == IpmStatus::MaxIter {
        if let Some((score, b)) = best {
            if score < merit(&res) {
                it = b;
                res = residuals(p, &it, nu, b_norm, c_norm);
            }
        }
    }

    IpmResult {
        status,
        iterations,
        pobj: res.pobj,
        dobj: res.dobj,
        pinf: res.pinf,
        dinf: res.dinf,
        gap: res.gap,
        x: it.x,
        xl: it.xl,
        y: it.y,
        z: it.z,
        zl: it.zl,
    }
}

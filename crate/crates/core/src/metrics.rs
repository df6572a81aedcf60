//! Achievable rates, secrecy rate and harvested power of an allocation.

use nalgebra::Cholesky;

use crate::channel::ChannelRealization;
use crate::eh::{phi_linear, phi_nonlinear, psi, EhParams};
use crate::inner::Allocation;
use crate::linalg::{CMat, CVec};

/// `log2 det(A)` for Hermitian positive definite `A`, via Cholesky.
pub fn log2_det_hpd(a: &CMat) -> Option<f64> {
    let chol = Cholesky::new(a.clone())?;
    let l = chol.l();
    let s: f64 = (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum();
    Some(2.0 * s / std::f64::consts::LN_2)
}

pub fn ir_sinr(w: &CVec, v: &CMat, chan: &ChannelRealization) -> f64 {
    let signal = chan.h.dotc(w).norm_sqr();
    let leak = (chan.h.adjoint() * v * &chan.h)[(0, 0)].re.max(0.0);
    signal / (leak + chan.sigma_sq)
}

pub fn ir_rate(alloc: &Allocation, chan: &ChannelRealization) -> f64 {
    (1.0 + ir_sinr(&alloc.w, &alloc.v, chan)).log2()
}

fn er_noise(v: &CMat, g: &CMat, sigma_sq: f64) -> CMat {
    let n = g.ncols();
    let mut q = g.adjoint() * v * g;
    for i in 0..n {
        q[(i, i)] += sigma_sq;
    }
    crate::linalg::hermitian_part(&q)
}

/// `log2 det(I + Q^-1 G^H W G)` for a general PSD `W`.
pub fn er_rate_logdet(w_mat: &CMat, v: &CMat, chan: &ChannelRealization, j: usize) -> f64 {
    let g = &chan.g[j];
    let q = er_noise(v, g, chan.sigma_sq);
    let total = crate::linalg::hermitian_part(&(&q + g.adjoint() * w_mat * g));
    match (log2_det_hpd(&total), log2_det_hpd(&q)) {
        (Some(a), Some(b)) => (a - b).max(0.0),
        _ => f64::NAN,
    }
}

/// Eavesdropping rate of ER `j` for the beamformer `w`:
/// `log2(1 + w^H G Q^-1 G^H w)` with the quadratic form from a Cholesky solve.
pub fn er_rate(alloc: &Allocation, chan: &ChannelRealization, j: usize) -> f64 {
    let g = &chan.g[j];
    let q = er_noise(&alloc.v, g, chan.sigma_sq);
    let Some(chol) = Cholesky::new(q) else {
        return f64::NAN;
    };
    let x = chol
        .l()
        .solve_lower_triangular(&(g.adjoint() * &alloc.w))
        .unwrap_or_else(|| CVec::zeros(g.ncols()));
    (1.0 + x.norm_squared()).log2()
}

pub fn max_er_rate(alloc: &Allocation, chan: &ChannelRealization) -> f64 {
    (0..chan.j())
        .map(|j| er_rate(alloc, chan, j))
        .fold(0.0, f64::max)
}

pub fn secrecy_rate(alloc: &Allocation, chan: &ChannelRealization) -> f64 {
    (ir_rate(alloc, chan) - max_er_rate(alloc, chan)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErHarvest {
    pub p_rf: f64,
    pub linear: f64,
    pub psi: f64,
    pub nonlinear: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarvestReport {
    pub per_er: Vec<ErHarvest>,
    pub total_linear: f64,
    pub total_nonlinear: f64,
    pub total_psi: f64,
}

/// Received RF power `Tr((W + V) G G^H)` for rank-one `W = w w^H`.
pub fn received_power(w: &CVec, v: &CMat, g: &CMat) -> f64 {
    let gw = g.adjoint() * w;
    gw.norm_squared() + (g.adjoint() * v * g).trace().re
}

pub fn harvested_report(
    alloc: &Allocation,
    chan: &ChannelRealization,
    eh: &[EhParams],
) -> HarvestReport {
    let per_er: Vec<ErHarvest> = chan
        .g
        .iter()
        .zip(eh)
        .map(|(g, p)| {
            let p_rf = received_power(&alloc.w, &alloc.v, g).max(0.0);
            ErHarvest {
                p_rf,
                linear: phi_linear(p_rf, p),
                psi: psi(p_rf, p),
                nonlinear: phi_nonlinear(p_rf, p),
            }
        })
        .collect();
    HarvestReport {
        total_linear: per_er.iter().map(|e| e.linear).sum(),
        total_nonlinear: per_er.iter().map(|e| e.nonlinear).sum(),
        total_psi: per_er.iter().map(|e| e.psi).sum(),
        per_er,
    }
}

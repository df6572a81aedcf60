//! Scenario configuration and channel realizations.
//!
//! The information receiver sees Rayleigh fading, each energy receiver a
//! Rician channel whose line-of-sight part is a rank-one product of
//! half-wavelength array responses. Both are scaled by a free-space
//! (Friis) path gain.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::eh::EhParams;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};
use crate::units::{db_to_linear, dbm_to_watts, SPEED_OF_LIGHT};

/// All parameters of one simulated deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub j_ers: usize,
    /// Distance BS to information receiver (m).
    pub d_ir: f64,
    /// Distance BS to each energy receiver (m).
    pub d_er: f64,
    pub rician_k_db: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    /// Gain of each transceiver antenna; applied at both link ends.
    pub antenna_gain_db: f64,
    pub noise_dbm: f64,
    pub p_max_dbm: f64,
    pub gamma_req_db: f64,
    /// Maximum tolerable eavesdropper rate (bit/s/Hz).
    pub r_tol: f64,
    pub eh: EhParams,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// Reference deployment at desk scale (three energy receivers).
    fn default() -> Self {
        Self {
            n_t: 4,
            n_r: 2,
            j_ers: 3,
            d_ir: 50.0,
            d_er: 10.0,
            rician_k_db: 3.0,
            carrier_hz: 915e6,
            bandwidth_hz: 200e3,
            antenna_gain_db: 10.0,
            noise_dbm: -95.0,
            p_max_dbm: 36.0,
            gamma_req_db: 10.0,
            r_tol: 1.0,
            eh: EhParams::default(),
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_r == 0 || self.n_t <= self.n_r {
            return fail(format!(
                "need n_t > n_r >= 1, got n_t = {}, n_r = {}",
                self.n_t, self.n_r
            ));
        }
        if self.j_ers == 0 {
            return fail("at least one energy receiver is required".into());
        }
        for (name, v) in [
            ("d_ir", self.d_ir),
            ("d_er", self.d_er),
            ("carrier_hz", self.carrier_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("rician_k_db", self.rician_k_db),
            ("antenna_gain_db", self.antenna_gain_db),
            ("noise_dbm", self.noise_dbm),
            ("p_max_dbm", self.p_max_dbm),
            ("gamma_req_db", self.gamma_req_db),
        ] {
            if !v.is_finite() {
                return fail(format!("{name} must be finite, got {v}"));
            }
        }
        if !(self.r_tol.is_finite() && self.r_tol > 0.0) {
            return fail(format!("r_tol must be positive, got {}", self.r_tol));
        }
        if (1.0 + self.gamma_req()).log2() <= self.r_tol {
            return fail(format!(
                "log2(1 + gamma_req) = {:.4} must exceed r_tol = {}",
                (1.0 + self.gamma_req()).log2(),
                self.r_tol
            ));
        }
        self.eh.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn sigma_sq(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn p_max(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }

    pub fn gamma_req(&self) -> f64 {
        db_to_linear(self.gamma_req_db)
    }

    pub fn rician_k(&self) -> f64 {
        db_to_linear(self.rician_k_db)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// `2^r_tol - 1`.
    pub fn alpha_er(&self) -> f64 {
        self.r_tol.exp2() - 1.0
    }
}

/// One draw of the BS-to-receiver channels.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// BS to information receiver, length `n_t`.
    pub h: CVec,
    /// BS to energy receiver `j`, each `n_t x n_r`.
    pub g: Vec<CMat>,
    /// Per-antenna receiver noise power (W).
    pub sigma_sq: f64,
}

impl ChannelRealization {
    pub fn new(h: CVec, g: Vec<CMat>, sigma_sq: f64) -> Result<Self> {
        let chan = Self { h, g, sigma_sq };
        chan.validate()?;
        Ok(chan)
    }

    pub fn validate(&self) -> Result<()> {
        let n_t = self.h.len();
        if self.g.is_empty() {
            return Err(Error::Validation("no energy receivers".into()));
        }
        let n_r = self.g[0].ncols();
        if n_r == 0 || n_t <= n_r {
            return Err(Error::Validation(format!(
                "need n_t > n_r >= 1, got {n_t} and {n_r}"
            )));
        }
        if self.g.iter().any(|g| g.nrows() != n_t || g.ncols() != n_r) {
            return Err(Error::Validation(
                "energy-receiver channel shapes differ".into(),
            ));
        }
        if !(self.sigma_sq.is_finite() && self.sigma_sq > 0.0) {
            return Err(Error::Validation(format!(
                "noise power must be positive, got {}",
                self.sigma_sq
            )));
        }
        let finite = self
            .h
            .iter()
            .chain(self.g.iter().flat_map(|g| g.iter()))
            .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::Validation("channel has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn n_t(&self) -> usize {
        self.h.len()
    }

    pub fn n_r(&self) -> usize {
        self.g[0].ncols()
    }

    pub fn j(&self) -> usize {
        self.g.len()
    }

    /// `h h^H`.
    pub fn h_gram(&self) -> CMat {
        &self.h * self.h.adjoint()
    }

    /// `G_j G_j^H`.
    pub fn er_gram(&self, j: usize) -> CMat {
        &self.g[j] * self.g[j].adjoint()
    }
}

/// Free-space power gain including both antenna gains.
pub fn path_loss(distance: f64, config: &ScenarioConfig) -> f64 {
    let ratio = config.wavelength() / (4.0 * PI * distance);
    ratio * ratio * db_to_linear(2.0 * config.antenna_gain_db)
}

/// Deterministic per-trial random stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn cscg<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Direction (rad) assigned to energy receiver `j` of `count`.
pub fn er_direction(j: usize, count: usize) -> f64 {
    if count <= 1 {
        0.0
    } else {
        -PI / 3.0 + (2.0 * PI / 3.0) * j as f64 / (count - 1) as f64
    }
}

fn array_response(len: usize, angle: f64) -> CVec {
    CVec::from_fn(len, |n, _| {
        let phase = PI * n as f64 * angle.sin();
        c(phase.cos(), phase.sin())
    })
}

/// Line-of-sight component of energy receiver `j`: unit-modulus rank-one
/// `a_t a_r^H`.
pub fn los_component(n_t: usize, n_r: usize, j: usize, count: usize) -> CMat {
    let theta = er_direction(j, count);
    array_response(n_t, theta) * array_response(n_r, theta).adjoint()
}

pub fn sample_channel<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    config.validate()?;
    let (n_t, n_r, j_ers) = (config.n_t, config.n_r, config.j_ers);
    let pl_ir = path_loss(config.d_ir, config);
    let pl_er = path_loss(config.d_er, config);
    let h = CVec::from_fn(n_t, |_, _| cscg(rng)).scale(pl_ir.sqrt());
    let k = config.rician_k();
    let (w_los, w_scatter) = ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt());
    let g = (0..j_ers)
        .map(|j| {
            let scatter = CMat::from_fn(n_t, n_r, |_, _| cscg(rng));
            (los_component(n_t, n_r, j, j_ers).scale(w_los) + scatter.scale(w_scatter))
                .scale(pl_er.sqrt())
        })
        .collect();
    ChannelRealization::new(h, g, config.sigma_sq())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn path_loss_inverse_square() {
        let cfg = ScenarioConfig::default();
        assert_relative_eq!(
            path_loss(10.0, &cfg) / path_loss(20.0, &cfg),
            4.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn path_loss_identity_distance() {
        let cfg = ScenarioConfig {
            antenna_gain_db: 0.0,
            ..Default::default()
        };
        let d = cfg.wavelength() / (4.0 * PI);
        assert_relative_eq!(path_loss(d, &cfg), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn path_loss_reference_value() {
        // (lambda / (4 pi 10 m))^2 * 10^(20/10) at 915 MHz, 40-digit arithmetic.
        let cfg = ScenarioConfig::default();
        assert_relative_eq!(
            path_loss(10.0, &cfg),
            6.797_973_850_689_421e-4,
            max_relative = 1e-13
        );
    }

    #[test]
    fn noise_power_conversion() {
        let cfg = ScenarioConfig::default();
        assert_relative_eq!(
            cfg.sigma_sq(),
            10f64.powf((-95.0 - 30.0) / 10.0),
            max_relative = 1e-14
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let a = sample_channel(&cfg, &mut trial_rng(7, 3)).unwrap();
        let b = sample_channel(&cfg, &mut trial_rng(7, 3)).unwrap();
        assert_eq!(a.h, b.h);
        assert_eq!(a.g, b.g);
        let other = sample_channel(&cfg, &mut trial_rng(7, 4)).unwrap();
        assert_ne!(a.h, other.h);
    }

    #[test]
    fn rician_limit_is_line_of_sight() {
        let cfg = ScenarioConfig {
            rician_k_db: 300.0,
            ..Default::default()
        };
        let chan = sample_channel(&cfg, &mut trial_rng(1, 0)).unwrap();
        let pl = path_loss(cfg.d_er, &cfg).sqrt();
        for j in 0..cfg.j_ers {
            let los = los_component(cfg.n_t, cfg.n_r, j, cfg.j_ers).scale(pl);
            assert!((&chan.g[j] - &los).norm() <= 1e-12 * los.norm());
        }
    }

    #[test]
    fn single_receiver_los_is_all_ones() {
        let los = los_component(4, 2, 0, 1);
        assert!(los.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn scatter_has_unit_variance() {
        // Rayleigh limit: K -> 0 leaves only the scattered part.
        let cfg = ScenarioConfig {
            rician_k_db: -300.0,
            antenna_gain_db: 0.0,
            ..Default::default()
        };
        let pl = path_loss(cfg.d_er, &cfg);
        let mut rng = trial_rng(11, 0);
        let (mut sum, mut count) = (0.0, 0usize);
        while count < 10_000 {
            let chan = sample_channel(&cfg, &mut rng).unwrap();
            for g in &chan.g {
                for z in g.iter() {
                    sum += z.norm_sqr() / pl;
                    count += 1;
                }
            }
        }
        let var = sum / count as f64;
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            ScenarioConfig {
                n_t: 2,
                n_r: 2,
                ..Default::default()
            },
            ScenarioConfig {
                j_ers: 0,
                ..Default::default()
            },
            ScenarioConfig {
                d_er: 0.0,
                ..Default::default()
            },
            ScenarioConfig {
                r_tol: 0.0,
                ..Default::default()
            },
            ScenarioConfig {
                gamma_req_db: 0.0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
    }
}

//! Monte-Carlo sweeps and single-instance reports.
//!
//! Every trial samples its channel from a stream keyed by `(seed, trial)`, so
//! all sweep points and schemes see the same draws and a run is reproducible
//! regardless of how trials are scheduled.
//!
//! CSV columns, in order:
//!
//! ```text
//! point,n_t,n_r,j_ers,d_er_m,p_max_dbm,gamma_req_db,scheme,trials,feasible,infeasible,failed,
//! harvested_w_mean,harvested_w_se,harvested_dbm,secrecy_bps_hz_mean,secrecy_bps_hz_se,
//! outer_iter_mean,wall_s_mean
//! ```
//!
//! Means and standard errors are over feasible trials; `harvested_dbm` is the
//! mean in watts converted to dBm. `wall_s_mean` is empty unless timing is
//! requested. One footer row per scheme with `point = all` totals the trial
//! counts.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::channel::{sample_channel, trial_rng, ScenarioConfig};
use crate::eh::EhParams;
use crate::error::{Error, Result};
use crate::inner::{build_constraints, InnerProblemData, KktReport};
use crate::metrics::{harvested_report, max_er_rate, secrecy_rate};
use crate::scheme::AllocationScheme;
use crate::sdp::{dump::write_sdpa_sparse, LinearExpr};
use crate::units::watts_to_dbm;

pub const DEFAULT_TRIALS: usize = 50;
/// Number of energy receivers of the full-scale scenario.
pub const FULL_SCALE_ERS: usize = 10;

/// A scenario plus the number of Monte-Carlo trials per sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: ScenarioConfig,
    pub trials: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            trials: DEFAULT_TRIALS,
        }
    }
}

/// Flat on-disk form; every key is optional.
#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    n_t: usize,
    n_r: usize,
    j_ers: usize,
    d_ir: f64,
    d_er: f64,
    rician_k_db: f64,
    carrier_hz: f64,
    bandwidth_hz: f64,
    antenna_gain_db: f64,
    noise_dbm: f64,
    p_max_dbm: f64,
    gamma_req_db: f64,
    r_tol: f64,
    eh_m: f64,
    eh_a: f64,
    eh_b: f64,
    eh_eta: f64,
    seed: u64,
    trials: usize,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        Self {
            n_t: s.n_t,
            n_r: s.n_r,
            j_ers: s.j_ers,
            d_ir: s.d_ir,
            d_er: s.d_er,
            rician_k_db: s.rician_k_db,
            carrier_hz: s.carrier_hz,
            bandwidth_hz: s.bandwidth_hz,
            antenna_gain_db: s.antenna_gain_db,
            noise_dbm: s.noise_dbm,
            p_max_dbm: s.p_max_dbm,
            gamma_req_db: s.gamma_req_db,
            r_tol: s.r_tol,
            eh_m: s.eh.m,
            eh_a: s.eh.a,
            eh_b: s.eh.b,
            eh_eta: s.eh.eta,
            seed: s.seed,
            trials: DEFAULT_TRIALS,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let f: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let scenario = ScenarioConfig {
            n_t: f.n_t,
            n_r: f.n_r,
            j_ers: f.j_ers,
            d_ir: f.d_ir,
            d_er: f.d_er,
            rician_k_db: f.rician_k_db,
            carrier_hz: f.carrier_hz,
            bandwidth_hz: f.bandwidth_hz,
            antenna_gain_db: f.antenna_gain_db,
            noise_dbm: f.noise_dbm,
            p_max_dbm: f.p_max_dbm,
            gamma_req_db: f.gamma_req_db,
            r_tol: f.r_tol,
            eh: EhParams {
                m: f.eh_m,
                a: f.eh_a,
                b: f.eh_b,
                eta: f.eh_eta,
            },
            seed: f.seed,
        };
        let cfg = Self {
            scenario,
            trials: f.trials,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.scenario.validate()
    }

    /// Reference-scale receiver count.
    pub fn full_scale(mut self) -> Self {
        self.scenario.j_ers = FULL_SCALE_ERS;
        self
    }
}

/// Scenario keys a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKey {
    NT,
    NR,
    JErs,
    DEr,
    PMaxDbm,
    GammaReqDb,
}

impl SweepKey {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "n_t" => Self::NT,
            "n_r" => Self::NR,
            "j_ers" => Self::JErs,
            "d_er" => Self::DEr,
            "p_max_dbm" => Self::PMaxDbm,
            "gamma_req_db" => Self::GammaReqDb,
            _ => {
                return Err(Error::Config(format!(
                    "unknown sweep key {s:?}; expected one of n_t, n_r, j_ers, d_er, p_max_dbm, gamma_req_db"
                )))
            }
        })
    }

    fn is_integer(self) -> bool {
        matches!(self, Self::NT | Self::NR | Self::JErs)
    }

    fn apply(self, cfg: &mut ScenarioConfig, v: f64) {
        match self {
            Self::NT => cfg.n_t = v as usize,
            Self::NR => cfg.n_r = v as usize,
            Self::JErs => cfg.j_ers = v as usize,
            Self::DEr => cfg.d_er = v,
            Self::PMaxDbm => cfg.p_max_dbm = v,
            Self::GammaReqDb => cfg.gamma_req_db = v,
        }
    }
}

/// Cartesian product of value lists, first axis slowest.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepSpec {
    pub axes: Vec<(SweepKey, Vec<f64>)>,
}

impl SweepSpec {
    /// Parses `key=v1,v2,..` or `key=start:stop:step` axes joined by `;`,
    /// e.g. `n_t=4,8;gamma_req_db=5:30:5`. An empty string is a single point.
    pub fn parse(text: &str) -> Result<Self> {
        let mut axes: Vec<(SweepKey, Vec<f64>)> = Vec::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("sweep axis {part:?} needs key=values")))?;
            let key = SweepKey::parse(k.trim())?;
            if axes.iter().any(|(a, _)| *a == key) {
                return Err(Error::Config(format!("sweep key {k:?} given twice")));
            }
            let values = parse_values(v.trim())?;
            if key.is_integer() && values.iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
                return Err(Error::Config(format!(
                    "sweep key {k:?} takes non-negative integers"
                )));
            }
            axes.push((key, values));
        }
        Ok(Self { axes })
    }

    pub fn points(&self, base: &ScenarioConfig) -> Vec<ScenarioConfig> {
        let mut out = vec![base.clone()];
        for (key, values) in &self.axes {
            out = out
                .iter()
                .flat_map(|c| {
                    values.iter().map(move |&v| {
                        let mut c = c.clone();
                        key.apply(&mut c, v);
                        c
                    })
                })
                .collect();
        }
        out
    }
}

fn parse_num(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad sweep value {s:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("bad sweep value {s:?}")))
    }
}

fn parse_values(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (parse_num(start)?, parse_num(stop)?, parse_num(step)?);
            if h <= 0.0 || b < a {
                return Err(Error::Config(format!(
                    "range {s:?} needs start <= stop and step > 0"
                )));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| a + k as f64 * h).collect())
        }
        [_] => s.split(',').map(parse_num).collect(),
        _ => Err(Error::Config(format!(
            "sweep values {s:?} must be a list or start:stop:step"
        ))),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record wall time per trial and emit it in the CSV.
    pub timing: bool,
}

/// Measurements of one successful solve.
#[derive(Debug, Clone)]
pub struct TrialStats {
    pub harvested_w: f64,
    pub secrecy: f64,
    pub max_er_rate: f64,
    pub outer_iterations: usize,
    pub rank_ratio: f64,
    pub kkt: KktReport,
    pub wall_s: f64,
}

#[derive(Debug, Clone)]
pub enum TrialOutcome {
    Solved(TrialStats),
    Infeasible(String),
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub point: usize,
    pub trial: usize,
    pub scheme: &'static str,
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, Default)]
struct Moments {
    n: usize,
    values: Vec<f64>,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.values.push(x);
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.values.iter().sum::<f64>() / self.n as f64)
    }

    fn se(&self) -> Option<f64> {
        let m = self.mean()?;
        if self.n < 2 {
            return Some(0.0);
        }
        let var = self.values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (self.n - 1) as f64;
        Some((var / self.n as f64).sqrt())
    }
}

/// Aggregates of one (sweep point, scheme) pair.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub point: usize,
    pub scenario: ScenarioConfig,
    pub scheme: &'static str,
    pub trials: usize,
    pub feasible: usize,
    pub infeasible: usize,
    pub failed: usize,
    pub harvested_w_mean: Option<f64>,
    pub harvested_w_se: Option<f64>,
    pub secrecy_mean: Option<f64>,
    pub secrecy_se: Option<f64>,
    pub outer_iter_mean: Option<f64>,
    pub wall_s_mean: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub points: Vec<ScenarioConfig>,
    pub schemes: Vec<&'static str>,
    /// Every trial, ordered by point, trial, then scheme.
    pub records: Vec<TrialRecord>,
    pub rows: Vec<SummaryRow>,
    pub timing: bool,
}

impl SweepOutput {
    pub fn row(&self, point: usize, scheme: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.point == point && r.scheme == scheme)
    }

    pub fn failures(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records
            .iter()
            .filter(|r| matches!(r.outcome, TrialOutcome::Failed(_)))
    }
}

fn solve_trial(
    scenario: &ScenarioConfig,
    seed: u64,
    trial: usize,
    schemes: &[&dyn AllocationScheme],
    timing: bool,
) -> Vec<TrialOutcome> {
    let data = sample_channel(scenario, &mut trial_rng(seed, trial as u64))
        .and_then(|chan| InnerProblemData::from_scenario(scenario, chan));
    let data = match data {
        Ok(d) => d,
        Err(e) => {
            return schemes
                .iter()
                .map(|_| TrialOutcome::Failed(e.to_string()))
                .collect()
        }
    };
    schemes
        .iter()
        .map(|s| {
            let start = timing.then(Instant::now);
            match s.solve(&data) {
                Ok(out) => {
                    let wall_s = start.map(|t| t.elapsed().as_secs_f64()).unwrap_or(0.0);
                    let chan = &data.channel;
                    TrialOutcome::Solved(TrialStats {
                        harvested_w: harvested_report(&out.allocation, chan, &data.eh)
                            .total_nonlinear,
                        secrecy: secrecy_rate(&out.allocation, chan),
                        max_er_rate: max_er_rate(&out.allocation, chan),
                        outer_iterations: out.outer_iterations,
                        rank_ratio: out.rank_ratio,
                        kkt: out.kkt,
                        wall_s,
                    })
                }
                Err(Error::Infeasible(m)) => TrialOutcome::Infeasible(m),
                Err(e) => TrialOutcome::Failed(e.to_string()),
            }
        })
        .collect()
}

/// Runs every selected scheme on `trials` channel draws at every sweep point.
pub fn run_sweep(
    cfg: &SimConfig,
    sweep: &SweepSpec,
    schemes: &[&dyn AllocationScheme],
    opts: RunOptions,
) -> Result<SweepOutput> {
    cfg.validate()?;
    if schemes.is_empty() {
        return Err(Error::Config("no schemes selected".into()));
    }
    let points = sweep.points(&cfg.scenario);
    for p in &points {
        p.validate()?;
    }
    let seed = cfg.scenario.seed;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<Vec<TrialOutcome>> = jobs
        .par_iter()
        .map(|&(p, t)| solve_trial(&points[p], seed, t, schemes, opts.timing))
        .collect();

    let names: Vec<&'static str> = schemes.iter().map(|s| s.name()).collect();
    let mut records = Vec::with_capacity(jobs.len() * names.len());
    for (&(point, trial), outs) in jobs.iter().zip(outcomes) {
        for (scheme, outcome) in names.iter().zip(outs) {
            records.push(TrialRecord {
                point,
                trial,
                scheme,
                outcome,
            });
        }
    }
    let rows = summarize(&points, &names, &records, cfg.trials, opts.timing);
    Ok(SweepOutput {
        points,
        schemes: names,
        records,
        rows,
        timing: opts.timing,
    })
}

fn summarize(
    points: &[ScenarioConfig],
    names: &[&'static str],
    records: &[TrialRecord],
    trials: usize,
    timing: bool,
) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (point, scenario) in points.iter().enumerate() {
        for &scheme in names {
            let (mut h, mut s, mut it, mut wall) = (
                Moments::default(),
                Moments::default(),
                Moments::default(),
                Moments::default(),
            );
            let (mut infeasible, mut failed) = (0, 0);
            for r in records
                .iter()
                .filter(|r| r.point == point && r.scheme == scheme)
            {
                match &r.outcome {
                    TrialOutcome::Solved(t) => {
                        h.push(t.harvested_w);
                        s.push(t.secrecy);
                        it.push(t.outer_iterations as f64);
                        wall.push(t.wall_s);
                    }
                    TrialOutcome::Infeasible(_) => infeasible += 1,
                    TrialOutcome::Failed(_) => failed += 1,
                }
            }
            rows.push(SummaryRow {
                point,
                scenario: scenario.clone(),
                scheme,
                trials,
                feasible: h.n,
                infeasible,
                failed,
                harvested_w_mean: h.mean(),
                harvested_w_se: h.se(),
                secrecy_mean: s.mean(),
                secrecy_se: s.se(),
                outer_iter_mean: it.mean(),
                wall_s_mean: if timing { wall.mean() } else { None },
            });
        }
    }
    rows
}

pub const CSV_HEADER: &str = "point,n_t,n_r,j_ers,d_er_m,p_max_dbm,gamma_req_db,scheme,trials,feasible,infeasible,failed,\
harvested_w_mean,harvested_w_se,harvested_dbm,secrecy_bps_hz_mean,secrecy_bps_hz_se,outer_iter_mean,wall_s_mean";

fn opt(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.digits$e}"),
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

pub fn write_csv<W: Write>(out: &SweepOutput, w: &mut W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &out.rows {
        let c = &r.scenario;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.point,
            c.n_t,
            c.n_r,
            c.j_ers,
            c.d_er,
            c.p_max_dbm,
            c.gamma_req_db,
            r.scheme,
            r.trials,
            r.feasible,
            r.infeasible,
            r.failed,
            opt(r.harvested_w_mean, 9),
            opt(r.harvested_w_se, 9),
            opt(r.harvested_w_mean.map(watts_to_dbm), 9),
            opt(r.secrecy_mean, 9),
            opt(r.secrecy_se, 9),
            opt(r.outer_iter_mean, 6),
            opt(r.wall_s_mean, 3),
        )?;
    }
    for &scheme in &out.schemes {
        let rows = out.rows.iter().filter(|r| r.scheme == scheme);
        let (mut t, mut f, mut i, mut x) = (0, 0, 0, 0);
        for r in rows {
            t += r.trials;
            f += r.feasible;
            i += r.infeasible;
            x += r.failed;
        }
        writeln!(w, "all,,,,,,,{scheme},{t},{f},{i},{x},,,,,,,")?;
    }
    Ok(())
}

/// Text report of one instance plus whether every scheme found a solution.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub text: String,
    pub feasible: bool,
}

/// Solves trial 0 of `cfg` with each scheme and describes the run. With
/// `dump`, the final linear-oracle SDP of the first scheme is written in
/// SDPA sparse format.
pub fn solve_one(
    cfg: &SimConfig,
    schemes: &[&dyn AllocationScheme],
    dump: Option<&Path>,
) -> Result<SolveReport> {
    cfg.validate()?;
    let sc = &cfg.scenario;
    let chan = sample_channel(sc, &mut trial_rng(sc.seed, 0))?;
    let data = InnerProblemData::from_scenario(sc, chan)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "instance: n_t {} n_r {} j_ers {} p_max {} dBm gamma_req {} dB r_tol {} seed {}",
        sc.n_t, sc.n_r, sc.j_ers, sc.p_max_dbm, sc.gamma_req_db, sc.r_tol, sc.seed
    );
    let floor = (1.0 + data.gamma_req).log2() - sc.r_tol;
    let mut feasible = true;
    let mut dumped = dump.is_none();
    for s in schemes {
        let _ = writeln!(text, "\n[{}]", s.name());
        let out = match s.solve(&data) {
            Ok(o) => o,
            Err(Error::Infeasible(m)) => {
                feasible = false;
                let _ = writeln!(text, "infeasible: {m}");
                continue;
            }
            Err(e) => return Err(e),
        };
        if let Some(res) = &out.outer {
            let _ = writeln!(
                text,
                "outer: status {:?}, {} iterations",
                res.status,
                res.iterations()
            );
            for r in &res.trace {
                let _ = writeln!(
                    text,
                    "  iter {:>2} |phi| {:.3e} zeta {:.3e} inner objective {:.9e} oracle calls {}",
                    r.iter, r.phi_inf, r.zeta, r.inner_objective, r.oracle_calls
                );
            }
            let _ = writeln!(text, "inner gap {:.3e}", res.inner_gap);
        }
        let rep = harvested_report(&out.allocation, &data.channel, &data.eh);
        let sec = secrecy_rate(&out.allocation, &data.channel);
        for (j, e) in rep.per_er.iter().enumerate() {
            let _ = writeln!(
                text,
                "  er {j}: rf {:.6e} W, harvested {:.6e} W",
                e.p_rf, e.nonlinear
            );
        }
        let _ = writeln!(
            text,
            "harvested {:.6e} W ({:.3} dBm), transmit power {:.6e} W",
            rep.total_nonlinear,
            watts_to_dbm(rep.total_nonlinear),
            out.allocation.total_power()
        );
        let _ = writeln!(
            text,
            "secrecy rate {:.6} bit/s/Hz (margin {:.3e} over {:.6}), max er rate {:.6}",
            sec,
            sec - floor,
            floor,
            max_er_rate(&out.allocation, &data.channel)
        );
        let k = &out.kkt;
        let _ = writeln!(
            text,
            "rank ratio {:.3e}; kkt |RW| {:.3e} |ZV| {:.3e} stationarity {:.3e}/{:.3e} alpha {:.6e}",
            out.rank_ratio, k.complementarity_w, k.complementarity_v, k.stationarity_w, k.stationarity_v, k.alpha
        );
        if !dumped {
            if let Some(path) = dump {
                let c = match &out.outer {
                    Some(res) => data
                        .with_params(&res.state.mu, &res.state.beta)
                        .gradient(&res.relaxed.tau),
                    None => data.eh.iter().map(|p| p.eta).collect(),
                };
                let (mut p, hd) = build_constraints(&data)?;
                let mut obj = LinearExpr::new();
                for (t, cj) in hd.tau.iter().zip(&c) {
                    obj = obj.scalar(*t, *cj);
                }
                p.set_objective(obj);
                let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
                write_sdpa_sparse(&p, &mut f)?;
                f.flush()?;
                let _ = writeln!(
                    text,
                    "dumped final linear-oracle problem to {}",
                    path.display()
                );
                dumped = true;
            }
        }
    }
    Ok(SolveReport { text, feasible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::SchemeRegistry;

    #[test]
    fn config_parsing() {
        let cfg =
            SimConfig::from_toml_str("n_t = 6\ngamma_req_db = 15.0\ntrials = 3\neh_m = 0.03\n")
                .unwrap();
        assert_eq!(cfg.scenario.n_t, 6);
        assert_eq!(cfg.scenario.gamma_req_db, 15.0);
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.scenario.eh.m, 0.03);
        assert_eq!(cfg.scenario.n_r, ScenarioConfig::default().n_r);
        assert_eq!(SimConfig::from_toml_str("").unwrap(), SimConfig::default());
        assert!(matches!(
            SimConfig::from_toml_str("n_tx = 4"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            SimConfig::from_toml_str("n_t = \"four\""),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            SimConfig::from_toml_str("n_t = 2\nn_r = 2"),
            Err(Error::Config(_))
        ));
        assert_eq!(
            SimConfig::default().full_scale().scenario.j_ers,
            FULL_SCALE_ERS
        );
    }

    #[test]
    fn sweep_parsing_and_order() {
        let s = SweepSpec::parse("n_t=4,8; gamma_req_db=5:30:5").unwrap();
        let pts = s.points(&ScenarioConfig::default());
        assert_eq!(pts.len(), 12);
        assert_eq!((pts[0].n_t, pts[0].gamma_req_db), (4, 5.0));
        assert_eq!((pts[5].n_t, pts[5].gamma_req_db), (4, 30.0));
        assert_eq!((pts[6].n_t, pts[6].gamma_req_db), (8, 5.0));
        assert_eq!(
            SweepSpec::parse("")
                .unwrap()
                .points(&ScenarioConfig::default())
                .len(),
            1
        );
        for bad in [
            "n_t",
            "foo=1",
            "n_t=4.5",
            "gamma_req_db=30:5:5",
            "n_t=4;n_t=8",
            "gamma_req_db=1:2:3:4",
        ] {
            assert!(SweepSpec::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn moments() {
        let mut m = Moments::default();
        assert_eq!(m.mean(), None);
        m.push(1.0);
        assert_eq!(m.se(), Some(0.0));
        m.push(3.0);
        assert_eq!(m.mean(), Some(2.0));
        assert!((m.se().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_csv_shape_and_determinism() {
        let mut cfg = SimConfig::default();
        cfg.trials = 2;
        let reg = SchemeRegistry::default();
        let schemes = reg.select("both").unwrap();
        let sweep = SweepSpec::parse("gamma_req_db=10,15").unwrap();
        let csv = |out: &SweepOutput| {
            let mut buf = Vec::new();
            write_csv(out, &mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = run_sweep(&cfg, &sweep, &schemes, RunOptions::default()).unwrap();
        let b = run_sweep(&cfg, &sweep, &schemes, RunOptions::default()).unwrap();
        let text = csv(&a);
        assert_eq!(text, csv(&b));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4 + 2);
        assert_eq!(lines[0], CSV_HEADER);
        let cols = CSV_HEADER.split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == cols));
        assert!(lines[1].contains(",proposed,2,"));
        assert!(lines[5].starts_with("all,"));
        assert_eq!(a.records.len(), 2 * 2 * 2);
    }

    #[test]
    fn solve_one_reports_and_dumps() {
        let reg = SchemeRegistry::default();
        let schemes = reg.select("both").unwrap();
        let path = std::env::temp_dir().join(format!("swipt-dump-{}.dat-s", std::process::id()));
        let rep = solve_one(&SimConfig::default(), &schemes, Some(&path)).unwrap();
        assert!(rep.feasible);
        assert!(rep.text.contains("[proposed]") && rep.text.contains("[baseline]"));
        assert!(rep.text.contains("rank ratio"));
        let dumped = std::fs::read_to_string(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        assert!(dumped.starts_with("* swipt embedded real SDP"));

        let mut hard = SimConfig::default();
        hard.scenario.gamma_req_db = 200.0;
        let rep = solve_one(&hard, &schemes, None).unwrap();
        assert!(!rep.feasible);
        assert!(rep.text.contains("infeasible"));
    }
}

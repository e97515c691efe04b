//! Seeded scenario pipelines: configuration, initial-data generation,
//! the experiment runners and their JSON reports.
//!
//! A scenario is one [`ScenarioConfig`]; random draws come from a ChaCha8
//! generator seeded with `seed`, one stream per draw (stream 0 for natural
//! frequencies, stream 1 + k for the k-th attempt at initial data).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::integrate::{integrate, Method, Trajectory};
use crate::model::{PhaseState, SystemParams};
use crate::observables::{
    cluster_stability_check, diameter, lock_certificate, order_parameter, variance, ClusterSpec,
};
use crate::reconstruct::{
    bipolar_phases, contraction_horizon, counterexample_bipolar, determinability_threshold, pendulum_first_zero,
    reconstruct_velocity, sturm_picone_monitor, DEFAULT_MAX_ITER,
};
use crate::tikhonov::{compare_trajectories, BoundCheck, CompareOptions};

pub const THREADS_ENV: &str = "SYNC_LAB_THREADS";
const MAX_DRAWS: u64 = 64;
/// Angular tolerance used when grouping phases into clusters.
const CLASS_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Simulate,
    TikhonovSweep,
    IdenticalComparison,
    SyncCertification,
    Cluster,
    Reconstruction,
    Determinability,
    ConjectureProbe,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::TikhonovSweep => "tikhonov_sweep",
            Experiment::IdenticalComparison => "identical_comparison",
            Experiment::SyncCertification => "sync_certification",
            Experiment::Cluster => "cluster",
            Experiment::Reconstruction => "reconstruction",
            Experiment::Determinability => "determinability",
            Experiment::ConjectureProbe => "conjecture_probe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    /// Given phases; `omega` defaults to the natural frequencies.
    Explicit {
        theta: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega: Option<Vec<f64>>,
    },
    /// Uniform phases on [0, 2π) redrawn until R⁰ > r_min. Velocities are
    /// drawn with diameter `omega_spread` (default b·κ) around the mean frequency.
    Random {
        #[serde(default = "default_r_min")]
        r_min: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_spread: Option<f64>,
    },
    /// n1 oscillators at ηN₂/N and n2 at −ηN₁/N, velocities equal to ν.
    Bipolar { n1: usize, n2: usize, eta: f64 },
}

fn default_r_min() -> f64 {
    0.05
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig::Random {
            r_min: default_r_min(),
            omega_spread: None,
        }
    }
}

/// Candidate smallness constants: D(V)/κ, D(Ω⁰)/κ and mκ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Smallness {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for Smallness {
    fn default() -> Self {
        Smallness { a: 0.05, b: 0.05, c: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterKnobs {
    pub indices: Vec<usize>,
    pub lambda: f64,
    pub ell: f64,
    pub eta: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Knobs {
    pub m_list: Vec<f64>,
    pub n_max: usize,
    pub jet_times: Vec<f64>,
    pub strict: bool,
    /// defaults to 50·tol
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    pub recon_tol: f64,
    pub max_iter: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_star: Option<f64>,
    pub n1: usize,
    pub n2: usize,
    /// (m, κ) rows of the threshold table
    pub table: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterKnobs>,
    pub epsilon: f64,
    pub smallness: Smallness,
    pub lock_window: f64,
    /// Frequency-spread tolerance of the lock certificate; 1e-6·κ when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_omega: Option<f64>,
    pub eps_theta: f64,
    pub tau_max: f64,
}

impl Default for Knobs {
    fn default() -> Self {
        Knobs {
            m_list: vec![0.1, 0.05, 0.025, 0.0125],
            n_max: 5,
            jet_times: vec![0.5, 1.0, 2.0],
            strict: false,
            slack: None,
            t0: None,
            recon_tol: 1e-10,
            max_iter: DEFAULT_MAX_ITER,
            t_star: None,
            n1: 1,
            n2: 1,
            table: [0.25, 0.5, 1.0, 2.0]
                .iter()
                .flat_map(|&m| [0.5, 1.0, 2.0].map(|k| [m, k]))
                .collect(),
            cluster: None,
            epsilon: 0.05,
            smallness: Smallness::default(),
            lock_window: 0.2,
            eps_omega: None,
            eps_theta: 1e-6,
            tau_max: 3.0,
        }
    }
}

/// One scenario. Angles in radians, times in seconds, κ in 1/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: u64,
    /// Oscillator count; needed only when `nat_freq` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub inertia_m: f64,
    pub coupling_kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nat_freq: Option<Vec<f64>>,
    /// Diameter of drawn natural frequencies (default a·κ).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_spread: Option<f64>,
    #[serde(default)]
    pub init: InitConfig,
    pub horizon: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub knobs: Knobs,
}

fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub scenarios: Vec<ScenarioConfig>,
}

/// Applies `a.b.c=value` overrides to a JSON document. Values parse as JSON,
/// falling back to a plain string. Numeric segments index arrays.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<()> {
    for ov in overrides {
        let (path, raw) = ov
            .split_once('=')
            .ok_or_else(|| Error::invalid(ov.as_str(), "override must look like key=value"))?;
        let path = path.trim();
        if path.is_empty() {
            return Err(Error::invalid(ov.as_str(), "empty key"));
        }
        let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        let mut cur = &mut *doc;
        let segs: Vec<&str> = path.split('.').collect();
        for (k, seg) in segs.iter().enumerate() {
            let last = k + 1 == segs.len();
            cur = match cur {
                Value::Object(map) => {
                    if last {
                        map.insert(seg.to_string(), value.clone());
                        break;
                    }
                    map.entry(seg.to_string()).or_insert_with(|| Value::Object(Map::new()))
                }
                Value::Array(items) => {
                    let idx: usize = seg
                        .parse()
                        .map_err(|_| Error::invalid(path, format!("`{seg}` is not an array index")))?;
                    let len = items.len();
                    let slot = items
                        .get_mut(idx)
                        .ok_or_else(|| Error::invalid(path, format!("index {idx} out of range ({len} entries)")))?;
                    if last {
                        *slot = value.clone();
                        break;
                    }
                    slot
                }
                _ => return Err(Error::invalid(path, format!("`{seg}` has no parent object"))),
            };
        }
    }
    Ok(())
}

fn deserialize_doc<T: serde::de::DeserializeOwned>(doc: Value) -> Result<T> {
    serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "config".to_string() } else { path };
        Error::invalid(key, e.into_inner().to_string())
    })
}

fn parse_doc(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::invalid("config", format!("malformed JSON: {e}")))
}

/// Parses, applies overrides, checks the schema and validates invariants.
pub fn load_config_str(text: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut doc = parse_doc(text)?;
    apply_overrides(&mut doc, overrides)?;
    let cfg: ScenarioConfig = deserialize_doc(doc)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_sweep_str(text: &str, overrides: &[String]) -> Result<SweepConfig> {
    let mut doc = parse_doc(text)?;
    apply_overrides(&mut doc, overrides)?;
    let sweep: SweepConfig = deserialize_doc(doc)?;
    for (k, sc) in sweep.scenarios.iter().enumerate() {
        if sc.experiment.is_none() {
            return Err(Error::invalid(format!("scenarios[{k}].experiment"), "required in a sweep"));
        }
        sc.validate()?;
    }
    Ok(sweep)
}

fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::invalid("config", format!("cannot read {}: {e}", path.display())))
}

pub fn load_config(path: &std::path::Path, overrides: &[String]) -> Result<ScenarioConfig> {
    load_config_str(&read_file(path)?, overrides)
}

pub fn load_sweep(path: &std::path::Path, overrides: &[String]) -> Result<SweepConfig> {
    load_sweep_str(&read_file(path)?, overrides)
}

fn rescale_to_diameter(u: &mut [f64], spread: f64, center: f64) {
    let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    for x in u.iter_mut() {
        *x = if hi > lo {
            center + spread * ((*x - lo) / (hi - lo) - 0.5)
        } else {
            center
        };
    }
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Resolved scenario data.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: SystemParams,
    pub init: PhaseState,
    /// attempts used by the R⁰ filter (0 for non-random modes)
    pub draws: u64,
}

impl ScenarioConfig {
    pub fn oscillator_count(&self) -> Result<usize> {
        match (&self.nat_freq, self.n) {
            (Some(v), Some(n)) if v.len() != n => {
                Err(Error::invalid("n", format!("{n} disagrees with {} natural frequencies", v.len())))
            }
            (Some(v), _) => Ok(v.len()),
            (None, Some(n)) if n > 0 => Ok(n),
            _ => Err(Error::invalid("n", "give `nat_freq` or a positive `n`")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.oscillator_count()?;
        SystemParams::new(self.inertia_m, self.coupling_kappa, vec![0.0; n])?;
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid("horizon", format!("must be positive, got {}", self.horizon)));
        }
        if !(crate::integrate::TOL_MIN..=crate::integrate::TOL_MAX).contains(&self.tol) {
            return Err(Error::invalid("tol", format!("{} outside the supported range", self.tol)));
        }
        if let Some(s) = self.nu_spread {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::invalid("nu_spread", "must be finite and >= 0"));
            }
        }
        match &self.init {
            InitConfig::Explicit { theta, omega } => {
                if theta.len() != n {
                    return Err(Error::invalid("init.theta", format!("expected {n} entries, got {}", theta.len())));
                }
                if let Some(w) = omega {
                    if w.len() != n {
                        return Err(Error::invalid("init.omega", format!("expected {n} entries, got {}", w.len())));
                    }
                }
                if theta.iter().chain(omega.iter().flatten()).any(|x| !x.is_finite()) {
                    return Err(Error::invalid("init", "entries must be finite"));
                }
            }
            InitConfig::Random { r_min, omega_spread } => {
                if !(*r_min >= 0.0 && *r_min < 1.0) {
                    return Err(Error::invalid("init.r_min", "must lie in [0, 1)"));
                }
                if let Some(s) = omega_spread {
                    if !(*s >= 0.0) || !s.is_finite() {
                        return Err(Error::invalid("init.omega_spread", "must be finite and >= 0"));
                    }
                }
            }
            InitConfig::Bipolar { n1, n2, eta } => {
                if n1 + n2 != n || *n1 == 0 || *n2 == 0 {
                    return Err(Error::invalid("init.n1", format!("n1 + n2 must equal {n} with both positive")));
                }
                if !eta.is_finite() {
                    return Err(Error::invalid("init.eta", "must be finite"));
                }
            }
        }
        let k = &self.knobs;
        if !(k.epsilon > 0.0 && k.epsilon < 1.0) {
            return Err(Error::invalid("knobs.epsilon", "must lie in (0, 1)"));
        }
        if !(k.lock_window > 0.0 && k.lock_window < 1.0) {
            return Err(Error::invalid("knobs.lock_window", "must lie in (0, 1)"));
        }
        if !k.eps_omega.is_none_or(|e| e > 0.0) {
            return Err(Error::invalid("knobs.eps_omega", "must be > 0"));
        }
        if !(k.eps_theta > 0.0) {
            return Err(Error::invalid("knobs.eps_theta", "must be > 0"));
        }
        Ok(())
    }

    pub fn eps_omega(&self) -> f64 {
        self.knobs.eps_omega.unwrap_or(1e-6 * self.coupling_kappa)
    }

    /// Natural frequencies, initial state and parameters with `self.inertia_m`.
    pub fn scenario(&self) -> Result<Scenario> {
        self.validate()?;
        let n = self.oscillator_count()?;
        let kappa = self.coupling_kappa;
        let nu = match &self.nat_freq {
            Some(v) => v.clone(),
            None => {
                let mut rng = stream(self.seed, 0);
                let mut u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                rescale_to_diameter(&mut u, self.nu_spread.unwrap_or(self.knobs.smallness.a * kappa), 0.0);
                u
            }
        };
        let params = SystemParams::new(self.inertia_m, kappa, nu.clone())?;
        let nu_mean = nu.iter().sum::<f64>() / n as f64;
        let (init, draws) = match &self.init {
            InitConfig::Explicit { theta, omega } => {
                (PhaseState::initial(theta.clone(), omega.clone().unwrap_or(nu)), 0)
            }
            InitConfig::Bipolar { n1, n2, eta } => (PhaseState::initial(bipolar_phases(*n1, *n2, *eta), nu), 0),
            InitConfig::Random { r_min, omega_spread } => {
                let spread = omega_spread.unwrap_or(self.knobs.smallness.b * kappa);
                let mut found = None;
                for k in 0..MAX_DRAWS {
                    let mut rng = stream(self.seed, 1 + k);
                    let theta: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
                    if order_parameter(&theta) <= *r_min {
                        continue;
                    }
                    let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                    rescale_to_diameter(&mut w, spread, nu_mean);
                    found = Some((PhaseState::initial(theta, w), k + 1));
                    break;
                }
                found.ok_or_else(|| {
                    Error::Precondition(format!("no draw with R0 > {r_min} in {MAX_DRAWS} attempts"))
                })?
            }
        };
        Ok(Scenario { params, init, draws })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// limit − measured in the direction of the check (≥ 0 is good)
    #[serde(serialize_with = "ser_ext")]
    pub margin: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    pub fn le(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            pass: measured <= limit,
            margin: limit - measured,
            detail: format!("{measured:e} <= {limit:e}"),
        }
    }
    pub fn ge(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            pass: measured >= limit,
            margin: measured - limit,
            detail: format!("{measured:e} >= {limit:e}"),
        }
    }
    pub fn flag(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            margin: if pass { 0.0 } else { -1.0 },
            detail: detail.into(),
        }
    }
    pub fn from_bound(b: &BoundCheck) -> Self {
        Check {
            name: b.name.clone(),
            pass: b.pass,
            margin: b.worst_margin(),
            detail: format!("{} points, slack {:e}", b.len(), b.slack),
        }
    }
}

/// Serializes non-finite reals as "inf", "-inf" or "nan".
pub fn ext_real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn ser_ext<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    ext_real(*x).serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: Value,
    pub overrides: Vec<String>,
    pub checks: Vec<Check>,
    pub summary: Map<String, Value>,
    /// conjunction of `checks`
    pub verdict: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub non_binding: bool,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ExperimentReport>,
    pub wall_time_s: f64,
    /// trajectories for CSV export, keyed by file stem
    #[serde(skip)]
    pub trajectories: Vec<(String, Trajectory)>,
}

impl ExperimentReport {
    fn new(experiment: Experiment, config: &ScenarioConfig) -> Self {
        ExperimentReport {
            experiment: experiment.name().to_string(),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            overrides: Vec::new(),
            checks: Vec::new(),
            summary: Map::new(),
            verdict: false,
            non_binding: false,
            notes: Vec::new(),
            children: Vec::new(),
            wall_time_s: 0.0,
            trajectories: Vec::new(),
        }
    }

    fn put(&mut self, key: &str, v: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn put_real(&mut self, key: &str, x: f64) {
        self.summary.insert(key.to_string(), ext_real(x));
    }

    fn finish(mut self, start: Instant) -> Self {
        self.verdict = self.checks.iter().all(|c| c.pass);
        self.wall_time_s = start.elapsed().as_secs_f64();
        self
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn record_trajectory(rep: &mut ExperimentReport, name: &str, traj: &Trajectory) {
    let key = format!("{name}_duhamel_max");
    match traj.duhamel_max() {
        Some(d) => {
            rep.put_real(&key, d);
            rep.checks
                .push(Check::le(format!("duhamel_certificate[{name}]"), d, traj.certificate_threshold()));
        }
        None => rep.put(&key, Value::Null),
    }
    rep.put(&format!("{name}_grid_points"), traj.grid().len());
    rep.put(
        &format!("{name}_method"),
        match traj.method() {
            Method::DormandPrince => "dormand_prince",
            Method::ExponentialCollocation => "exponential_collocation",
        },
    );
}

pub fn run(experiment: Experiment, cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    match experiment {
        Experiment::Simulate => run_simulate(cfg),
        Experiment::TikhonovSweep => run_tikhonov_sweep(cfg),
        Experiment::IdenticalComparison => run_identical_comparison(cfg),
        Experiment::SyncCertification => run_sync_certification(cfg),
        Experiment::Cluster => run_cluster_experiment(cfg),
        Experiment::Reconstruction => run_reconstruction_demo(cfg),
        Experiment::Determinability => run_determinability_demo(cfg),
        Experiment::ConjectureProbe => probe_conjecture_r(cfg),
    }
}

pub fn run_simulate(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let sc = cfg.scenario()?;
    let mut rep = ExperimentReport::new(Experiment::Simulate, cfg);
    let traj = integrate(&sc.params, &sc.init, cfg.horizon, cfg.tol)?;
    rep.put_real("r_initial", order_parameter(&sc.init.theta));
    rep.put_real("r_final", order_parameter(&traj.final_state().theta));
    rep.put_real("phase_diameter_final", diameter(&traj.final_state().theta));
    rep.put("draws", sc.draws);
    record_trajectory(&mut rep, "trajectory", &traj);
    rep.trajectories.push(("trajectory".into(), traj));
    Ok(rep.finish(start))
}

fn wrap_pi(x: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let y = x.rem_euclid(t);
    if y > std::f64::consts::PI {
        y - t
    } else {
        y
    }
}

fn distinct_mod_2pi(theta: &[f64]) -> bool {
    (0..theta.len()).all(|i| (i + 1..theta.len()).all(|j| wrap_pi(theta[i] - theta[j]).abs() > 1e-12))
}

pub fn run_sync_certification(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let sc = cfg.scenario()?;
    let k = &cfg.knobs;
    let (p, init) = (&sc.params, &sc.init);
    let r0 = order_parameter(&init.theta);
    if !(r0 > 0.0) {
        return Err(Error::Precondition("initial order parameter is zero".into()));
    }
    let mut rep = ExperimentReport::new(Experiment::SyncCertification, cfg);
    let kappa = p.kappa();
    let n = p.n();
    let (a, b, c) = (diameter(p.nu()) / kappa, diameter(&init.omega) / kappa, p.m() * kappa);
    let within = a <= k.smallness.a && b <= k.smallness.b && c <= k.smallness.c;
    let (case, bound) = if n == 2 {
        ("two_oscillators", 1.0 - k.epsilon)
    } else if n == 3 || distinct_mod_2pi(&init.theta) {
        ("distinct_initial_phases", 1.0 - 2.0 / n as f64 - k.epsilon)
    } else {
        ("generic", r0 - k.epsilon)
    };
    let traj = integrate(p, init, cfg.horizon, cfg.tol)?;
    let lock = lock_certificate(&traj, k.lock_window, cfg.eps_omega(), k.eps_theta)?;
    rep.checks.push(Check::flag(
        "phase_locked",
        lock.locked,
        format!("freq spread {:e}, phase drift {:e}", lock.max_freq_spread, lock.max_phase_drift),
    ));
    rep.checks.push(Check::ge("limiting_order_parameter", lock.limiting_r_estimate, bound));
    record_trajectory(&mut rep, "trajectory", &traj);
    rep.put("case", case);
    rep.put_real("r_initial", r0);
    rep.put_real("r_final", lock.limiting_r_estimate);
    rep.put_real("r_lower_bound", bound);
    rep.put("lock", &lock);
    rep.put("draws", sc.draws);
    rep.put("smallness_measured", json!({"a": a, "b": b, "c": c}));
    rep.put("within_demonstrated_regime", within);
    rep.trajectories.push(("trajectory".into(), traj));
    let mut rep = rep.finish(start);
    if !rep.verdict && !within {
        rep.notes.push("outside demonstrated regime: measured (a, b, c) exceed the supplied candidates".into());
    }
    Ok(rep)
}

pub fn run_tikhonov_sweep(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let sc = cfg.scenario()?;
    let k = &cfg.knobs;
    let mut opts = CompareOptions::new(cfg.tol);
    if let Some(s) = k.slack {
        opts.slack = s;
    }
    opts.strict = k.strict;
    opts.jet_times = k.jet_times.clone();
    let cmp = compare_trajectories(&sc.params, &sc.init, &k.m_list, cfg.horizon, k.n_max, &opts)?;
    let mut rep = ExperimentReport::new(Experiment::TikhonovSweep, cfg);
    rep.checks.extend(cmp.checks().map(Check::from_bound));
    for (j, r) in cmp.ratios.iter().enumerate() {
        let pass = (0.4..=0.6).contains(r);
        rep.checks.push(Check {
            name: format!("linear_in_m_ratio[{}->{}]", cmp.m_list[j], cmp.m_list[j + 1]),
            pass,
            margin: (r - 0.4).min(0.6 - r),
            detail: format!("{r} in [0.4, 0.6]"),
        });
    }
    for v in &cmp.variants {
        if let Some(d) = v.duhamel_max {
            rep.checks.push(Check::le(format!("duhamel_certificate[m={}]", v.m), d, 50.0 * cfg.tol));
        }
    }
    rep.put("m_list", &cmp.m_list);
    rep.put("ratios", &cmp.ratios);
    rep.put("sup_differences", cmp.variants.iter().map(|v| v.sup_difference).collect::<Vec<_>>());
    rep.put("duhamel_max", cmp.variants.iter().map(|v| v.duhamel_max).collect::<Vec<_>>());
    rep.put("check_count", rep.checks.len());
    rep.put("strict", k.strict);
    Ok(rep.finish(start))
}

/// Groups phases relative to oscillator 0: "synchronized", "bipolar" or "unresolved".
pub fn classify_configuration(theta: &[f64]) -> (String, usize) {
    let near: usize = theta.iter().filter(|&&x| wrap_pi(x - theta[0]).abs() < CLASS_TOL).count();
    let anti: usize = theta
        .iter()
        .filter(|&&x| wrap_pi(x - theta[0]).abs() > std::f64::consts::PI - CLASS_TOL)
        .count();
    if near == theta.len() {
        ("synchronized".into(), near)
    } else if near + anti == theta.len() {
        ("bipolar".into(), near.max(anti))
    } else {
        ("unresolved".into(), near.max(anti))
    }
}

pub fn run_identical_comparison(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let sc = cfg.scenario()?;
    let k = &cfg.knobs;
    let kappa = sc.params.kappa();
    let n = sc.params.n();
    let nu_scaled: Vec<f64> = sc.params.nu().iter().map(|v| v / kappa).collect();
    let id = SystemParams::new(0.0, 1.0, vec![0.0; n])?;
    let nid = SystemParams::new(0.0, 1.0, nu_scaled.clone())?;
    let th0 = PhaseState::initial(sc.init.theta.clone(), vec![]);
    let tau_end = (kappa * cfg.horizon).max(k.tau_max);
    let t_id = integrate(&id, &th0, tau_end, cfg.tol)?;
    let t_nid = integrate(&nid, &th0, k.tau_max, cfg.tol)?;
    let dv = diameter(&nu_scaled);
    let slack = k.slack.unwrap_or(50.0 * cfg.tol);
    let (mut times, mut meas, mut bound) = (vec![], vec![], vec![]);
    for s in t_nid.states() {
        let r = t_id.dense_eval(s.t)?;
        let d: Vec<f64> = s.theta.iter().zip(&r.theta).map(|(a, b)| a - b).collect();
        times.push(s.t);
        meas.push(diameter(&d));
        bound.push(dv * (2.0 * s.t).exp_m1());
    }
    let bc = BoundCheck::new("identical_comparison", times, meas, bound, slack);
    let mut rep = ExperimentReport::new(Experiment::IdenticalComparison, cfg);
    rep.checks.push(Check::from_bound(&bc));
    let (class, majority) = classify_configuration(&t_id.final_state().theta);
    rep.put("identical_limit", class);
    rep.put("majority_size", majority);
    rep.put_real("r_identical_final", order_parameter(&t_id.final_state().theta));
    rep.put_real("tau_max", k.tau_max);
    rep.put_real("tau_identical", tau_end);
    rep.put_real("d_nu_over_kappa", dv);
    rep.put_real("worst_margin", bc.worst_margin());
    rep.trajectories.push(("identical".into(), t_id));
    rep.trajectories.push(("nonidentical".into(), t_nid));
    Ok(rep.finish(start))
}

pub fn run_cluster_experiment(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let sc = cfg.scenario()?;
    let k = &cfg.knobs;
    let ck = k
        .cluster
        .as_ref()
        .ok_or_else(|| Error::invalid("knobs.cluster", "cluster experiment needs a cluster spec"))?;
    let spec = ClusterSpec::new(sc.params.n(), ck.indices.clone(), ck.lambda, ck.ell, ck.eta)?;
    let traj = integrate(&sc.params, &sc.init, cfg.horizon, cfg.tol)?;
    let cr = cluster_stability_check(&traj, &spec, ck.t1)?;
    let lock = lock_certificate(&traj, k.lock_window, cfg.eps_omega(), k.eps_theta)?;
    let mut rep = ExperimentReport::new(Experiment::Cluster, cfg);
    rep.checks.push(Check::flag("hypotheses", cr.hypotheses_satisfied, cr.unmet.join("; ")));
    rep.checks.push(Check::flag(
        "whole_ensemble_hypothesis",
        cr.whole_ensemble_hypothesis,
        format!("xi_all = {} vs {}", cr.xi_all, cr.rhs),
    ));
    if cr.hypotheses_satisfied {
        rep.checks.push(Check::le("cluster_confined", cr.sup_diameter_after_t1, spec.ell()));
    } else {
        rep.notes.push("hypotheses not satisfied; no conclusion is claimed".into());
    }
    rep.checks.push(Check::flag(
        "phase_locked",
        lock.locked,
        format!("freq spread {:e}, phase drift {:e}", lock.max_freq_spread, lock.max_phase_drift),
    ));
    record_trajectory(&mut rep, "trajectory", &traj);
    rep.put("cluster", &cr);
    rep.put("lock", &lock);
    rep.trajectories.push(("trajectory".into(), traj));
    Ok(rep.finish(start))
}

pub fn run_reconstruction_demo(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let sc = cfg.scenario()?;
    let k = &cfg.knobs;
    let (p, init) = (&sc.params, &sc.init);
    let horizon_c = contraction_horizon(p.kappa(), p.m())?;
    let t0 = k.t0.unwrap_or(0.8 * horizon_c);
    let traj = integrate(p, init, t0, cfg.tol)?;
    let st = traj.final_state();
    let r = reconstruct_velocity(p, &init.omega, &st.theta, t0, k.recon_tol, k.max_iter)?;
    let err_w = st.omega.iter().zip(r.omega.at_t0()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let err_th = init.theta.iter().zip(&r.theta0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let truth = crate::reconstruct::GridFunction::from_trajectory(&traj, t0, r.omega.steps)?;
    let mut rep = ExperimentReport::new(Experiment::Reconstruction, cfg);
    rep.checks.push(Check::le("omega_at_t0_error", err_w, 1e-6));
    rep.checks.push(Check::le("theta0_error", err_th, 1e-6));
    rep.checks.push(Check::le("empirical_contraction", r.empirical_contraction, r.lipschitz_bound + 0.05));
    record_trajectory(&mut rep, "forward", &traj);
    rep.put_real("t0", t0);
    rep.put_real("contraction_horizon", horizon_c);
    rep.put("iterations", r.iterations);
    rep.put("grid_steps", r.omega.steps);
    rep.put_real("final_residual", r.final_residual);
    rep.put_real("empirical_contraction", r.empirical_contraction);
    rep.put_real("lipschitz_bound", r.lipschitz_bound);
    rep.put_real("history_sup_error", r.omega.dist(&truth));
    rep.put("history", &r.history);
    rep.trajectories.push(("forward".into(), traj));
    Ok(rep.finish(start))
}

pub fn run_determinability_demo(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let k = &cfg.knobs;
    let mut rep = ExperimentReport::new(Experiment::Determinability, cfg);
    let mut table = Vec::new();
    for &[m, kappa] in &k.table {
        table.push(json!({
            "m": m,
            "kappa": kappa,
            "m_kappa": m * kappa,
            "threshold": ext_real(determinability_threshold(kappa, m)?),
        }));
    }
    rep.put("threshold_table", table);

    let (m, kappa) = (cfg.inertia_m, cfg.coupling_kappa);
    let t_lin = determinability_threshold(kappa, m)?;
    rep.put_real("threshold", t_lin);
    if t_lin.is_finite() {
        let t_star = k.t_star.unwrap_or(1.25 * t_lin);
        let ce = counterexample_bipolar(k.n1, k.n2, kappa, m, t_star, cfg.tol)?;
        let r = &ce.report;
        rep.checks.push(Check::le("first_zero_matches_t_star", (r.t1_eta - t_star).abs(), 1e-8));
        rep.checks.push(Check::le("phases_agree_at_t_star", r.phase_gap, 1e-6));
        rep.checks.push(Check::ge("velocities_differ_at_t_star", r.velocity_gap_diameter, 0.01));
        rep.checks.push(Check::le("velocity_sign_pattern", r.velocity_pattern_error, 1e-6));
        rep.checks.push(Check::le("reduction_to_pendulum", r.reduction_error, 1e-6));
        let t_small = pendulum_first_zero(m, kappa, 1e-3)?.unwrap_or(f64::INFINITY);
        rep.checks.push(Check::le("small_amplitude_zero_near_threshold", (t_small - t_lin).abs(), 1e-3));
        rep.put_real("small_amplitude_first_zero", t_small);
        rep.put("counterexample", r);
    } else {
        rep.notes.push("m·kappa <= 1/4: no finite threshold, counterexample skipped".into());
    }

    // two runs from seeded phases with the same Ω⁰
    let sc = cfg.scenario()?;
    let n = sc.params.n();
    if n >= 2 && !sc.params.is_first_order() {
        let other = ScenarioConfig {
            seed: cfg.seed.wrapping_add(1),
            nat_freq: Some(sc.params.nu().to_vec()),
            ..cfg.clone()
        }
        .scenario()?;
        let init_b = PhaseState::initial(other.init.theta, sc.init.omega.clone());
        let ta = integrate(&sc.params, &sc.init, cfg.horizon, cfg.tol)?;
        let tb = integrate(&sc.params, &init_b, cfg.horizon, cfg.tol)?;
        let mon = sturm_picone_monitor(&ta, &tb, kappa, m)?;
        rep.checks.push(Check::flag(
            "mismatch_positive_before_threshold",
            mon.positive_until_threshold,
            format!("min {:e}, first zero {:?}", mon.min_before_threshold, mon.first_zero),
        ));
        rep.put("sturm_picone", &mon);
    }
    Ok(rep.finish(start))
}

/// Trailing-window R against 1 − (1/2 ± ε)·Var(V)/κ². Informational only.
pub fn probe_conjecture_r(cfg: &ScenarioConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let sc = cfg.scenario()?;
    let k = &cfg.knobs;
    let traj = integrate(&sc.params, &sc.init, cfg.horizon, cfg.tol)?;
    let from = cfg.horizon * (1.0 - k.lock_window);
    let rs: Vec<f64> = traj
        .states()
        .iter()
        .filter(|s| s.t >= from)
        .map(|s| order_parameter(&s.theta))
        .collect();
    let lo = rs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let q = variance(sc.params.nu()) / sc.params.kappa().powi(2);
    let window = [1.0 - (0.5 + k.epsilon) * q, 1.0 - (0.5 - k.epsilon) * q];
    let mut rep = ExperimentReport::new(Experiment::ConjectureProbe, cfg);
    rep.non_binding = true;
    rep.put_real("r_liminf", lo);
    rep.put_real("r_limsup", hi);
    rep.put_real("var_nu_over_kappa_sq", q);
    rep.put("conjectured_window", window);
    rep.put("inside_window", lo >= window[0] && hi <= window[1]);
    rep.notes.push("conjecture probe: informational, not a proven bound".into());
    record_trajectory(&mut rep, "trajectory", &traj);
    rep.trajectories.push(("trajectory".into(), traj));
    Ok(rep.finish(start))
}

/// Worker count from `SYNC_LAB_THREADS`, `None` for rayon's default.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::invalid(THREADS_ENV, format!("expected a positive integer, got `{s}`"))),
        },
    }
}

/// Runs scenarios concurrently; child reports keep config order.
pub fn run_sweep(sweep: &SweepConfig, threads: Option<usize>) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(THREADS_ENV, format!("cannot build thread pool: {e}")))?;
    let children = pool.install(|| {
        sweep
            .scenarios
            .par_iter()
            .map(|sc| run(sc.experiment.unwrap_or(Experiment::Simulate), sc))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rep = ExperimentReport {
        experiment: "sweep".into(),
        config: serde_json::to_value(sweep).unwrap_or(Value::Null),
        overrides: Vec::new(),
        checks: Vec::new(),
        summary: Map::new(),
        verdict: false,
        non_binding: false,
        notes: Vec::new(),
        children: Vec::new(),
        wall_time_s: 0.0,
        trajectories: Vec::new(),
    };
    for (j, c) in children.iter().enumerate() {
        rep.checks
            .push(Check::flag(format!("scenario[{j}]:{}", c.experiment), c.verdict || c.non_binding, ""));
    }
    rep.put("scenarios", children.len());
    rep.children = children;
    Ok(rep.finish(start))
}

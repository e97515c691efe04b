//! Velocity reconstruction from (Θ(t₀), Ω⁰) by Picard iteration, the
//! determinability threshold T*(κ, m) and the bipolar counterexample
//! showing that past T* the data no longer pins down the velocities.

use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::integrate::{integrate, solve_pendulum, Pendulum, ScalarTrajectory, Trajectory};
use crate::model::{coupling, PhaseState, SystemParams};
use crate::observables::{diameter, mismatch_l2, sup_norm};
use crate::quad::{phis, KernelRule};

pub const DEFAULT_MAX_ITER: usize = 200;
/// Integration tolerance for pendulum probes.
pub const PENDULUM_TOL: f64 = 1e-12;
const BRACKET_LO: f64 = 1e-4;
const BRACKET_HI: f64 = std::f64::consts::FRAC_PI_2 - 1e-4;
const BRACKET_HI_WIDE: f64 = std::f64::consts::PI - 1e-4;

/// Velocity history sampled on the uniform grid k·t0/steps, k = 0..=steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    pub t0: f64,
    pub steps: usize,
    /// `values[k][i]` = ω_i(k·t0/steps)
    pub values: Vec<Vec<f64>>,
}

impl GridFunction {
    pub fn new(t0: f64, steps: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        if !(t0 > 0.0) || !t0.is_finite() {
            return Err(Error::invalid("t0", format!("must be positive, got {t0}")));
        }
        if steps < 8 {
            return Err(Error::invalid("steps", format!("need at least 8, got {steps}")));
        }
        if values.len() != steps + 1 {
            return Err(Error::invalid("values", format!("expected {} rows, got {}", steps + 1, values.len())));
        }
        let n = values[0].len();
        if n == 0 || values.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("values", "rows must be non-empty and of equal length"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "entries must be finite"));
        }
        Ok(GridFunction { t0, steps, values })
    }

    pub fn constant(t0: f64, steps: usize, value: &[f64]) -> Result<Self> {
        GridFunction::new(t0, steps, vec![value.to_vec(); steps + 1])
    }

    /// Samples ω from a trajectory covering [0, t0].
    pub fn from_trajectory(traj: &Trajectory, t0: f64, steps: usize) -> Result<Self> {
        let values = (0..=steps)
            .map(|k| Ok(traj.dense_eval(t0 * (k as f64 / steps as f64))?.omega))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(t0, steps, values)
    }

    pub fn n(&self) -> usize {
        self.values[0].len()
    }
    pub fn h(&self) -> f64 {
        self.t0 / self.steps as f64
    }
    pub fn time(&self, k: usize) -> f64 {
        self.t0 * (k as f64 / self.steps as f64)
    }
    pub fn at_t0(&self) -> &[f64] {
        &self.values[self.steps]
    }

    /// sup over k, i of |self − other|
    pub fn dist(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().map(|r| sup_norm(r)).fold(0.0, f64::max)
    }

    fn channel(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[i]).collect()
    }
}

/// Grid size resolving the e^{−t/m} kernel on [0, t0].
pub fn default_steps(t0: f64, m: f64) -> usize {
    ((20.0 * t0 / m).ceil() as usize).max(64)
}

fn check_inputs(params: &SystemParams, omega0: &[f64], theta_star: &[f64]) -> Result<()> {
    if params.is_first_order() {
        return Err(Error::Precondition("reconstruction needs m > 0".into()));
    }
    let n = params.n();
    if omega0.len() != n {
        return Err(Error::invalid("omega0", format!("expected {n} entries, got {}", omega0.len())));
    }
    if theta_star.len() != n {
        return Err(Error::invalid("theta_star", format!("expected {n} entries, got {}", theta_star.len())));
    }
    for (k, v) in omega0.iter().chain(theta_star).enumerate() {
        ensure_finite(if k < n { "omega0" } else { "theta_star" }, *v)?;
    }
    Ok(())
}

/// Phases Θ(t_k) = Θ* − ∫_{t_k}^{t₀} Ω* on the grid, one row per time.
fn phases_from(theta_star: &[f64], omega: &GridFunction) -> Vec<Vec<f64>> {
    let rule = KernelRule::new(omega.steps + 1, omega.h(), 0.0);
    let n = omega.n();
    let mut out = vec![vec![0.0; n]; omega.steps + 1];
    for i in 0..n {
        let cum = rule.cumulative(&omega.channel(i));
        let total = cum[omega.steps];
        for (k, row) in out.iter_mut().enumerate() {
            row[i] = theta_star[i] - (total - cum[k]);
        }
    }
    out
}

/// One application of F: Ω* ↦ F(Ω*) on the grid of `omega_star`.
pub fn contraction_map(
    params: &SystemParams,
    omega0: &[f64],
    theta_star: &[f64],
    omega_star: &GridFunction,
) -> Result<GridFunction> {
    check_inputs(params, omega0, theta_star)?;
    let n = params.n();
    if omega_star.n() != n {
        return Err(Error::invalid("omega_star", format!("expected {n} channels, got {}", omega_star.n())));
    }
    let (m, h, steps) = (params.m(), omega_star.h(), omega_star.steps);
    let phases = phases_from(theta_star, omega_star);
    let forcing: Vec<Vec<f64>> = phases.iter().map(|th| coupling(params.kappa(), th)).collect();
    let outer = KernelRule::new(steps + 1, h, 1.0 / m);
    let mut values = vec![vec![0.0; n]; steps + 1];
    for i in 0..n {
        let f: Vec<f64> = forcing.iter().map(|r| r[i]).collect();
        let memory = outer.cumulative(&f);
        for (k, row) in values.iter_mut().enumerate() {
            let x = omega_star.time(k) / m;
            let one_minus_e = x * phis(1, -x)[1];
            row[i] = omega0[i] * (-x).exp() + params.nu()[i] * one_minus_e + memory[k] / m;
        }
    }
    GridFunction::new(omega_star.t0, steps, values)
}

fn positive(key: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("must be positive and finite, got {x}")))
    }
}

/// min{2κt₀, κt₀²/m}
pub fn lipschitz_constant(kappa: f64, m: f64, t0: f64) -> Result<f64> {
    positive("kappa", kappa)?;
    positive("m", m)?;
    if !(t0 >= 0.0) || !t0.is_finite() {
        return Err(Error::invalid("t0", format!("must be >= 0, got {t0}")));
    }
    Ok((2.0 * kappa * t0).min(kappa * t0 * t0 / m))
}

/// max{1/(2κ), √(m/κ)}: F contracts for t₀ below this.
pub fn contraction_horizon(kappa: f64, m: f64) -> Result<f64> {
    positive("kappa", kappa)?;
    positive("m", m)?;
    Ok((0.5 / kappa).max((m / kappa).sqrt()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionResult {
    pub omega: GridFunction,
    pub theta0: Vec<f64>,
    pub iterations: usize,
    pub final_residual: f64,
    pub empirical_contraction: f64,
    pub lipschitz_bound: f64,
    /// sup-metric step of every iteration
    pub history: Vec<f64>,
}

pub fn reconstruct_velocity(
    params: &SystemParams,
    omega0: &[f64],
    theta_star: &[f64],
    t0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ReconstructionResult> {
    check_inputs(params, omega0, theta_star)?;
    positive("t0", t0)?;
    positive("tol", tol)?;
    let (kappa, m) = (params.kappa(), params.m());
    let horizon = contraction_horizon(kappa, m)?;
    if t0 >= horizon {
        return Err(Error::Precondition(format!(
            "t0 = {t0} is not below the contraction horizon {horizon}"
        )));
    }
    let steps = default_steps(t0, m);
    let mut cur = GridFunction::constant(t0, steps, omega0)?;
    let mut history = Vec::new();
    let mut ratio: f64 = 0.0;
    for it in 1..=max_iter.max(1) {
        let next = contraction_map(params, omega0, theta_star, &cur)?;
        let step = next.dist(&cur);
        // ratios of steps at round-off level carry no information
        if let Some(&prev) = history.last() {
            if prev > 1e3 * f64::EPSILON * (1.0 + next.sup()) {
                ratio = ratio.max(step / prev);
            }
        }
        history.push(step);
        cur = next;
        if step < tol || step < 0.1 * tol * cur.sup() {
            let phases = phases_from(theta_star, &cur);
            return Ok(ReconstructionResult {
                theta0: phases[0].clone(),
                omega: cur,
                iterations: it,
                final_residual: step,
                empirical_contraction: ratio,
                lipschitz_bound: lipschitz_constant(kappa, m, t0)?,
                history,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: history.len(),
        last_step: *history.last().unwrap(),
        history,
    })
}

/// T* for a ẍ + b ẋ + c x: +∞ when 4ac ≤ b², otherwise the first zero time
/// bound πa/√(4ac−b²) + (2a/√(4ac−b²))·asin(b/(2√(ac))).
pub fn sturm_picone_threshold(a: f64, b: f64, c: f64) -> Result<f64> {
    positive("a", a)?;
    positive("b", b)?;
    positive("c", c)?;
    let disc = 4.0 * a * c - b * b;
    if disc <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let s = disc.sqrt();
    let arg = (b / (2.0 * (a * c).sqrt())).min(1.0);
    Ok(std::f64::consts::PI * a / s + 2.0 * a / s * arg.asin())
}

/// T*(κ, m) = +∞ if mκ ≤ 1/4, else πm/√(4mκ−1) + (2m/√(4mκ−1))·asin(1/√(4mκ)).
pub fn determinability_threshold(kappa: f64, m: f64) -> Result<f64> {
    positive("kappa", kappa)?;
    positive("m", m)?;
    if m * kappa <= 0.25 {
        return Ok(f64::INFINITY);
    }
    let s = (4.0 * m * kappa - 1.0).sqrt();
    Ok(std::f64::consts::PI * m / s + 2.0 * m / s * (1.0 / (4.0 * m * kappa).sqrt()).asin())
}

/// m θ̈ + θ̇ = −κ sin θ, θ(0) = η, θ̇(0) = 0, on [0, horizon].
pub fn pendulum_relative(m: f64, kappa: f64, eta: f64, horizon: f64) -> Result<ScalarTrajectory> {
    positive("m", m)?;
    positive("kappa", kappa)?;
    positive("horizon", horizon)?;
    if !(eta > 0.0 && eta < std::f64::consts::PI) {
        return Err(Error::invalid("eta", format!("must lie in (0, π), got {eta}")));
    }
    solve_pendulum(&Pendulum { m, b: 1.0, c: kappa }, eta, 0.0, horizon, PENDULUM_TOL)
}

/// First zero t₁^η of the relative pendulum, extending the horizon until it is found.
/// `None` when mκ ≤ 1/4 (no zero exists).
pub fn pendulum_first_zero(m: f64, kappa: f64, eta: f64) -> Result<Option<f64>> {
    let t_lin = determinability_threshold(kappa, m)?;
    if !t_lin.is_finite() {
        return Ok(None);
    }
    let mut horizon = 2.0 * t_lin + 10.0 * m;
    for _ in 0..16 {
        if let Some(t) = pendulum_relative(m, kappa, eta, horizon)?.first_zero()? {
            return Ok(Some(t));
        }
        horizon *= 2.0;
    }
    Err(Error::Integration {
        t: horizon,
        reason: format!("no zero of the relative pendulum found for eta = {eta}"),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub n1: usize,
    pub n2: usize,
    pub kappa: f64,
    pub m: f64,
    pub t_star: f64,
    pub threshold: f64,
    pub eta: f64,
    pub t1_eta: f64,
    pub bracket: [f64; 2],
    pub bracket_widened: bool,
    pub probes: usize,
    /// θ̇_rel(t*) from the reduced pendulum
    pub theta_rel_dot: f64,
    pub theta_at_t_star: Vec<f64>,
    pub phi_at_t_star: Vec<f64>,
    /// |Θ(t*) − Φ(t*)|∞ from the full simulation
    pub phase_gap: f64,
    /// D(Θ̇(t*) − Φ̇(t*))
    pub velocity_gap_diameter: f64,
    /// max |Θ̇(t*) − θ̇_rel·(N₂/N, …, −N₁/N)|, plus the same for Φ̇ = −Θ̇
    pub velocity_pattern_error: f64,
    /// max over the run of |θ_1 − (N₂/N)θ_rel| and |θ_N + (N₁/N)θ_rel|
    pub reduction_error: f64,
    pub sim_tol: f64,
    /// Duhamel certificates of the Θ and Φ runs
    pub duhamel_max: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub params: SystemParams,
    pub theta0: Vec<f64>,
    pub phi0: Vec<f64>,
    pub eta: f64,
    pub report: CounterexampleReport,
}

/// Θ⁰ = (ηN₂/N, … , −ηN₁/N, …): N1 oscillators at the first value, N2 at the second.
pub fn bipolar_phases(n1: usize, n2: usize, eta: f64) -> Vec<f64> {
    let n = (n1 + n2) as f64;
    let mut th = vec![eta * n2 as f64 / n; n1];
    th.extend(std::iter::repeat_n(-eta * n1 as f64 / n, n2));
    th
}

/// Two data sets with equal Ω⁰ = 0, V = 0 and Θ(t*) = Φ(t*) but different Ω(t*).
pub fn counterexample_bipolar(n1: usize, n2: usize, kappa: f64, m: f64, t_star: f64, sim_tol: f64) -> Result<Counterexample> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid("n1", "both groups need at least one oscillator"));
    }
    positive("t_star", t_star)?;
    let threshold = determinability_threshold(kappa, m)?;
    if !threshold.is_finite() {
        return Err(Error::Precondition(format!("m·kappa = {} is at most 1/4", m * kappa)));
    }
    if t_star <= threshold {
        return Err(Error::Precondition(format!("t_star = {t_star} is not above the threshold {threshold}")));
    }

    let mut probes = 0usize;
    let mut t1 = |eta: f64| -> Result<f64> {
        probes += 1;
        pendulum_first_zero(m, kappa, eta)?.ok_or(Error::Bracket { lo: BRACKET_LO, hi: eta })
    };
    let (mut lo, mut hi) = (BRACKET_LO, BRACKET_HI);
    let mut widened = false;
    if t1(hi)? < t_star {
        hi = BRACKET_HI_WIDE;
        widened = true;
    }
    if t1(lo)? > t_star || t1(hi)? < t_star {
        return Err(Error::Bracket { lo, hi });
    }
    let (mut eta, mut t_eta) = (0.5 * (lo + hi), 0.0);
    for _ in 0..200 {
        eta = 0.5 * (lo + hi);
        t_eta = t1(eta)?;
        if (t_eta - t_star).abs() < 1e-9 || hi - lo < 1e-15 {
            break;
        }
        if t_eta < t_star {
            lo = eta;
        } else {
            hi = eta;
        }
    }
    let bracket = [BRACKET_LO, if widened { BRACKET_HI_WIDE } else { BRACKET_HI }];

    let n = n1 + n2;
    let params = SystemParams::new(m, kappa, vec![0.0; n])?;
    let theta0 = bipolar_phases(n1, n2, eta);
    let phi0: Vec<f64> = theta0.iter().map(|x| -x).collect();
    let ta = integrate(&params, &PhaseState::initial(theta0.clone(), vec![0.0; n]), t_star, sim_tol)?;
    let tb = integrate(&params, &PhaseState::initial(phi0.clone(), vec![0.0; n]), t_star, sim_tol)?;
    let pend = pendulum_relative(m, kappa, eta, t_star)?;

    let (sa, sb) = (ta.final_state(), tb.final_state());
    let phase_gap = sa.theta.iter().zip(&sb.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let dv: Vec<f64> = sa.omega.iter().zip(&sb.omega).map(|(a, b)| a - b).collect();
    let (_, rel_dot) = pend.eval(t_star)?;
    let (w1, w2) = (n2 as f64 / n as f64, -(n1 as f64) / n as f64);
    let velocity_pattern_error = (0..n)
        .map(|i| {
            let expect = rel_dot * if i < n1 { w1 } else { w2 };
            (sa.omega[i] - expect).abs().max((sb.omega[i] + expect).abs())
        })
        .fold(0.0, f64::max);
    let mut reduction_error: f64 = 0.0;
    for k in 0..=400 {
        let t = t_star * (k as f64 / 400.0);
        let (rel, _) = pend.eval(t)?;
        let st = ta.dense_eval(t)?;
        reduction_error = reduction_error
            .max((st.theta[0] - w1 * rel).abs())
            .max((st.theta[n - 1] - w2 * rel).abs());
    }
    let report = CounterexampleReport {
        n1,
        n2,
        kappa,
        m,
        t_star,
        threshold,
        eta,
        t1_eta: t_eta,
        bracket,
        bracket_widened: widened,
        probes,
        theta_rel_dot: rel_dot,
        theta_at_t_star: sa.theta.clone(),
        phi_at_t_star: sb.theta.clone(),
        phase_gap,
        velocity_gap_diameter: diameter(&dv),
        velocity_pattern_error,
        reduction_error,
        sim_tol,
        duhamel_max: [ta.duhamel_max().unwrap_or(0.0), tb.duhamel_max().unwrap_or(0.0)],
    };
    Ok(Counterexample {
        params,
        theta0,
        phi0,
        eta,
        report,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SturmPiconeReport {
    /// T*(m, 1, κ)
    pub threshold: f64,
    pub horizon: f64,
    pub mismatch_initial: f64,
    /// min ℒ over sample points in [0, min(T*, horizon)]
    pub min_before_threshold: f64,
    pub min_overall: f64,
    /// first time ℒ vanishes, located on the pair gap with the largest initial mismatch
    pub first_zero: Option<f64>,
    pub positive_until_threshold: bool,
    pub samples: usize,
}

/// Watches ℒ(t) between two runs with the same parameters and Ω⁰.
pub fn sturm_picone_monitor(traj_a: &Trajectory, traj_b: &Trajectory, kappa: f64, m: f64) -> Result<SturmPiconeReport> {
    let p = traj_a.params();
    if p != traj_b.params() {
        return Err(Error::Precondition("trajectories have different parameters".into()));
    }
    if p.kappa() != kappa || p.m() != m {
        return Err(Error::Precondition("kappa and m must match the trajectories".into()));
    }
    if traj_a.initial().omega != traj_b.initial().omega {
        return Err(Error::Precondition("initial velocities differ".into()));
    }
    let l0 = mismatch_l2(&traj_a.initial().theta, &traj_b.initial().theta)?;
    if !(l0 > 0.0) {
        return Err(Error::Precondition("initial mismatch is zero".into()));
    }
    let threshold = sturm_picone_threshold(m, 1.0, kappa)?;
    let horizon = traj_a.horizon().min(traj_b.horizon());
    let gap_of = |s: &PhaseState, q: &PhaseState| -> Vec<f64> { s.theta.iter().zip(&q.theta).map(|(a, b)| a - b).collect() };

    // pair (i, j) with the largest initial |d_i − d_j|
    let d0 = gap_of(traj_a.initial(), traj_b.initial());
    let n = d0.len();
    let mut pair = (0, 1.min(n - 1));
    for i in 0..n {
        for j in i + 1..n {
            if (d0[i] - d0[j]).abs() > (d0[pair.0] - d0[pair.1]).abs() {
                pair = (i, j);
            }
        }
    }
    let pair_gap = |t: f64| -> Result<f64> {
        let d = gap_of(&traj_a.dense_eval(t)?, &traj_b.dense_eval(t)?);
        Ok(d[pair.0] - d[pair.1])
    };
    let mismatch = |t: f64| -> Result<f64> { mismatch_l2(&traj_a.dense_eval(t)?.theta, &traj_b.dense_eval(t)?.theta) };

    let samples = ((20.0 * horizon / m).ceil() as usize).clamp(400, 200_000);
    let mut min_before = f64::INFINITY;
    let mut min_all = f64::INFINITY;
    let mut first_zero = None;
    let (mut t_prev, mut g_prev) = (0.0, pair_gap(0.0)?);
    for k in 0..=samples {
        let t = horizon * (k as f64 / samples as f64);
        let l = mismatch(t)?;
        min_all = min_all.min(l);
        if t <= threshold {
            min_before = min_before.min(l);
        }
        if first_zero.is_none() && k > 0 {
            let g = pair_gap(t)?;
            if g == 0.0 || g.signum() != g_prev.signum() {
                let r = crate::integrate::find_root(pair_gap, t_prev, t, 1e-12)?;
                // ℒ vanishes only when every pair gap does
                if mismatch(r)? <= 1e-6 * l0 {
                    first_zero = Some(r);
                }
            }
            t_prev = t;
            g_prev = g;
        }
    }
    let positive_until_threshold = min_before > 0.0 && first_zero.is_none_or(|z| z >= threshold.min(horizon) - 1e-4);
    Ok(SturmPiconeReport {
        threshold,
        horizon,
        mismatch_initial: l0,
        min_before_threshold: min_before,
        min_overall: min_all,
        first_zero,
        positive_until_threshold,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lipschitz_and_horizon_examples() {
        assert_eq!(lipschitz_constant(1.0, 0.5, 0.0).unwrap(), 0.0);
        assert_eq!(lipschitz_constant(1.0, 0.5, 0.5).unwrap(), 0.5);
        assert_eq!(lipschitz_constant(1.0, 2.0, 1.0).unwrap(), 0.5);
        assert!(lipschitz_constant(0.0, 1.0, 1.0).is_err());
        assert_eq!(contraction_horizon(1.0, 1.0).unwrap(), 1.0);
        assert!((contraction_horizon(2.0, 0.02).unwrap() - 0.25).abs() < 1e-15);
        let k = 1.3;
        let h = contraction_horizon(k, 0.25 / k).unwrap();
        assert!((h - 0.5 / k).abs() < 1e-15);
    }

    #[test]
    fn threshold_closed_forms() {
        assert_eq!(determinability_threshold(1.0, 0.25).unwrap(), f64::INFINITY);
        assert_eq!(determinability_threshold(0.5, 0.5).unwrap(), f64::INFINITY);
        assert!((determinability_threshold(0.5, 1.0).unwrap() - 1.5 * PI).abs() < 1e-12);
        let t = determinability_threshold(1.0, 1.0).unwrap();
        assert!((t - 4.0 * PI / (3.0 * 3f64.sqrt())).abs() < 1e-12);
        for (k, m) in [(1.0, 1.0), (0.5, 1.0), (3.0, 0.2)] {
            assert_eq!(sturm_picone_threshold(m, 1.0, k).unwrap(), determinability_threshold(k, m).unwrap());
        }
        let m = 0.7;
        let t = determinability_threshold((0.25 + 1e-6) / m, m).unwrap();
        assert!(t > 1e3 * m);
    }

    #[test]
    fn single_oscillator_is_fixed_immediately() {
        let p = SystemParams::new(0.5, 1.0, vec![0.3]).unwrap();
        let r = reconstruct_velocity(&p, &[1.2], &[0.7], 0.4, 1e-12, 10).unwrap();
        assert!(r.iterations <= 2);
        for k in 0..=r.omega.steps {
            let t = r.omega.time(k);
            let e = (-t / 0.5).exp();
            assert!((r.omega.values[k][0] - (1.2 * e + 0.3 * (1.0 - e))).abs() < 1e-13);
        }
    }

    #[test]
    fn map_starts_at_initial_velocity() {
        let p = SystemParams::new(0.3, 1.5, vec![0.1, -0.2, 0.4]).unwrap();
        let w = GridFunction::new(0.5, 16, (0..17).map(|k| vec![k as f64 * 0.1, -0.3, 0.2]).collect()).unwrap();
        let f = contraction_map(&p, &[0.5, -0.1, 0.0], &[0.1, 1.0, 2.0], &w).unwrap();
        assert_eq!(f.values[0], vec![0.5, -0.1, 0.0]);
    }

    #[test]
    fn round_trip_four_oscillators() {
        let p = SystemParams::new(0.5, 1.0, vec![0.2, -0.1, 0.05, -0.15]).unwrap();
        let init = PhaseState::initial(vec![0.1, 0.9, -0.6, 1.7], vec![0.3, -0.2, 0.0, 0.1]);
        let t0 = 0.6;
        let tr = integrate(&p, &init, t0, 1e-12).unwrap();
        let st = tr.final_state();
        let r = reconstruct_velocity(&p, &init.omega, &st.theta, t0, 1e-12, DEFAULT_MAX_ITER).unwrap();
        let truth = GridFunction::from_trajectory(&tr, t0, r.omega.steps).unwrap();
        assert!(r.omega.dist(&truth) < 1e-8, "{}", r.omega.dist(&truth));
        for i in 0..4 {
            assert!((r.theta0[i] - init.theta[i]).abs() < 1e-8);
        }
        assert!(r.empirical_contraction <= r.lipschitz_bound + 0.05);
    }

    #[test]
    fn guards() {
        let p = SystemParams::new(0.5, 1.0, vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            reconstruct_velocity(&p, &[0.0; 2], &[0.0, 1.0], 0.8, 1e-8, 10),
            Err(Error::Precondition(_))
        ));
        assert!(reconstruct_velocity(&p, &[0.0; 3], &[0.0, 1.0], 0.3, 1e-8, 10).is_err());
        let err = reconstruct_velocity(&p, &[0.0; 2], &[0.0, 1.0], 0.6, 1e-14, 2).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { ref history, .. } if history.len() == 2));
        let t = determinability_threshold(1.0, 1.0).unwrap();
        assert!(matches!(
            counterexample_bipolar(1, 1, 1.0, 1.0, 0.9 * t, 1e-10),
            Err(Error::Precondition(_))
        ));
        assert!(pendulum_relative(1.0, 1.0, PI, 5.0).is_err());
    }

    #[test]
    fn pendulum_zero_increases_with_amplitude() {
        let t_lin = determinability_threshold(1.0, 1.0).unwrap();
        let mut prev = t_lin;
        for eta in [1e-3, 0.3, 0.8, 1.2, 1.5, 2.5, 3.1] {
            let t = pendulum_first_zero(1.0, 1.0, eta).unwrap().unwrap();
            assert!(t > prev, "eta={eta}: {t} <= {prev}");
            prev = t;
        }
        let t = pendulum_first_zero(1.0, 1.0, 1e-3).unwrap().unwrap();
        assert!((t - t_lin).abs() < 1e-3);
        assert_eq!(pendulum_first_zero(0.2, 1.0, 1.0).unwrap(), None);
    }

    #[test]
    fn bipolar_layout() {
        let th = bipolar_phases(2, 1, 0.9);
        assert_eq!(th.len(), 3);
        assert!((th[0] - 0.3).abs() < 1e-15 && (th[1] - 0.3).abs() < 1e-15);
        assert!((th[2] + 0.6).abs() < 1e-15);
        assert!((th[0] - th[2] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn monitor_rejects_identical_runs() {
        let p = SystemParams::new(1.0, 1.0, vec![0.0, 0.0]).unwrap();
        let tr = integrate(&p, &PhaseState::initial(vec![0.0, 1.0], vec![0.0, 0.0]), 2.0, 1e-9).unwrap();
        assert!(matches!(sturm_picone_monitor(&tr, &tr, 1.0, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn sampling_stays_inside_horizon() {
        // t* whose 400-point sampling rounded past t* before
        let t_star = 1.1031877220483994 * determinability_threshold(1.0, 1.0).unwrap();
        let ce = counterexample_bipolar(1, 1, 1.0, 1.0, t_star, 1e-10).unwrap();
        assert!(ce.report.phase_gap < 1e-6);
        let g = GridFunction::constant(t_star, 400, &[1.0]).unwrap();
        assert_eq!(g.time(400), t_star);
    }
}

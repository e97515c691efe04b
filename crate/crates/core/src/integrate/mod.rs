//! Certified trajectories of both systems with dense output, Taylor jets and
//! root location.
//!
//! Steppers:
//! - m > 0, m ≥ 1e-4·horizon: Dormand–Prince 5(4), step ≤ min(m/5, 0.05/κ)
//! - m > 0, m < 1e-4·horizon: exponential Lobatto collocation on the Duhamel form, step ≤ 0.05/κ
//! - m = 0: Dormand–Prince 5(4) on θ alone, step ≤ 0.05/κ

pub(crate) mod dopri;
pub(crate) mod expo;
mod roots;
mod taylor;

use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::model::{coupling_into, duhamel_profile, rhs_first_order, PhaseState, SystemParams};

pub use roots::find_root;
pub use taylor::{taylor_jet, TaylorJet, MAX_JET_ORDER};

use dopri::{DopriOptions, DopriSolution, OdeSystem};
use expo::ExpoSolution;

pub const TOL_MIN: f64 = 1e-13;
pub const TOL_MAX: f64 = 1e-3;

/// Duhamel residual allowed at grid points, in units of `tol`.
pub const CERTIFICATE_FACTOR: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DormandPrince,
    ExponentialCollocation,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    pub max_steps: usize,
    /// Compute the Duhamel certificate and fail when it exceeds 50·tol.
    pub certify: bool,
    /// Override the automatic stepper choice (m > 0 only).
    pub method: Option<Method>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            max_steps: 5_000_000,
            certify: true,
            method: None,
        }
    }
}

/// Anything that can hand out states on a time grid and in between.
pub trait DenseHistory {
    fn params(&self) -> &SystemParams;
    fn initial(&self) -> &PhaseState;
    fn grid(&self) -> &[f64];
    fn grid_state(&self, k: usize) -> PhaseState;
    fn state_at(&self, t: f64) -> Result<PhaseState>;
}

#[derive(Debug, Clone)]
enum Dense {
    Rk(DopriSolution),
    Expo(ExpoSolution),
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    params: SystemParams,
    init: PhaseState,
    grid: Vec<f64>,
    states: Vec<PhaseState>,
    dense: Dense,
    tol: f64,
    method: Method,
    local_error: f64,
    duhamel_max: Option<f64>,
}

struct Second<'a>(&'a SystemParams, std::cell::RefCell<Vec<f64>>);

impl OdeSystem for Second<'_> {
    fn dim(&self) -> usize {
        2 * self.0.n()
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let p = self.0;
        let n = p.n();
        let mut c = self.1.borrow_mut();
        coupling_into(p.kappa(), &y[..n], &mut c);
        let m = p.m();
        for i in 0..n {
            dy[i] = y[n + i];
            dy[n + i] = (p.nu()[i] - y[n + i] + c[i]) / m;
        }
    }
}

struct First<'a>(&'a SystemParams);

impl OdeSystem for First<'_> {
    fn dim(&self) -> usize {
        self.0.n()
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        coupling_into(self.0.kappa(), y, dy);
        for (d, nu) in dy.iter_mut().zip(self.0.nu()) {
            *d += nu;
        }
    }
}

/// Step cap: min(m/5, 0.05/κ) for m > 0, 0.05/κ for m = 0.
pub fn step_cap(params: &SystemParams) -> f64 {
    let c = 0.05 / params.kappa();
    if params.is_first_order() {
        c
    } else {
        c.min(params.m() / 5.0)
    }
}

/// Stepper chosen for these parameters and horizon.
pub fn select_method(params: &SystemParams, horizon: f64) -> Method {
    if !params.is_first_order() && params.m() < 1e-4 * horizon {
        Method::ExponentialCollocation
    } else {
        Method::DormandPrince
    }
}

pub fn integrate(params: &SystemParams, init: &PhaseState, horizon: f64, tol: f64) -> Result<Trajectory> {
    integrate_with(params, init, horizon, tol, &IntegrateOptions::default())
}

pub fn integrate_with(
    params: &SystemParams,
    init: &PhaseState,
    horizon: f64,
    tol: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    ensure_finite("horizon", horizon)?;
    if horizon <= 0.0 {
        return Err(Error::invalid("horizon", "must be > 0"));
    }
    if !(TOL_MIN..=TOL_MAX).contains(&tol) {
        return Err(Error::range("tol", format!("must lie in [{TOL_MIN:e}, {TOL_MAX:e}], got {tol:e}")));
    }
    let n = params.n();
    if init.theta.len() != n {
        return Err(Error::invalid("theta", format!("expected {n} entries")));
    }
    for &x in &init.theta {
        ensure_finite("theta", x)?;
    }
    let first = params.is_first_order();
    if !first {
        init.check(params)?;
    }
    let init = if first {
        PhaseState::initial(init.theta.clone(), rhs_first_order(params, &init.theta))
    } else {
        PhaseState::initial(init.theta.clone(), init.omega.clone())
    };
    let method = if first {
        Method::DormandPrince
    } else {
        opts.method.unwrap_or_else(|| select_method(params, horizon))
    };

    let (grid, states, dense, local_error) = match method {
        Method::DormandPrince => {
            let dopts = DopriOptions {
                tol,
                h_max: step_cap(params),
                max_steps: opts.max_steps,
            };
            let sol = if first {
                dopri::solve(&First(params), &init.theta, horizon, &dopts)?
            } else {
                let y0: Vec<f64> = init.theta.iter().chain(&init.omega).copied().collect();
                dopri::solve(&Second(params, vec![0.0; n].into()), &y0, horizon, &dopts)?
            };
            let states = sol
                .t
                .iter()
                .zip(&sol.y)
                .map(|(&t, y)| {
                    if first {
                        PhaseState::new(t, y.clone(), rhs_first_order(params, y))
                    } else {
                        PhaseState::new(t, y[..n].to_vec(), y[n..].to_vec())
                    }
                })
                .collect();
            let le = sol.local_error;
            (sol.t.clone(), states, Dense::Rk(sol), le)
        }
        Method::ExponentialCollocation => {
            let sol = expo::solve(
                params,
                &init.theta,
                &init.omega,
                horizon,
                tol,
                0.05 / params.kappa(),
                opts.max_steps,
            )?;
            let states = (0..sol.t.len())
                .map(|k| PhaseState::new(sol.t[k], sol.theta[k].clone(), sol.omega[k].clone()))
                .collect();
            let le = sol.local_error;
            (sol.t.clone(), states, Dense::Expo(sol), le)
        }
    };

    let mut traj = Trajectory {
        params: params.clone(),
        init,
        grid,
        states,
        dense,
        tol,
        method,
        local_error,
        duhamel_max: None,
    };
    if !first && opts.certify {
        let profile = duhamel_profile(&traj, tol)?;
        let (k, worst) = profile
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (k, &r)| if r > acc.1 { (k, r) } else { acc });
        let threshold = traj.certificate_threshold();
        if !(worst <= threshold) {
            return Err(Error::Integration {
                t: traj.grid[k],
                reason: format!("Duhamel residual {worst:e} exceeds certificate threshold {threshold:e}"),
            });
        }
        traj.duhamel_max = Some(worst);
    }
    Ok(traj)
}

impl Trajectory {
    pub fn params(&self) -> &SystemParams {
        &self.params
    }
    pub fn initial(&self) -> &PhaseState {
        &self.init
    }
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn states(&self) -> &[PhaseState] {
        &self.states
    }
    pub fn horizon(&self) -> f64 {
        *self.grid.last().unwrap()
    }
    pub fn tol(&self) -> f64 {
        self.tol
    }
    pub fn method(&self) -> Method {
        self.method
    }
    /// Largest accepted local error estimate.
    pub fn local_error(&self) -> f64 {
        self.local_error
    }
    /// max |Duhamel residual| over the grid, when certified.
    pub fn duhamel_max(&self) -> Option<f64> {
        self.duhamel_max
    }
    pub fn certificate_threshold(&self) -> f64 {
        CERTIFICATE_FACTOR * self.tol
    }
    pub fn final_state(&self) -> &PhaseState {
        self.states.last().unwrap()
    }

    pub fn dense_eval(&self, t: f64) -> Result<PhaseState> {
        let end = self.horizon();
        if !(0.0..=end).contains(&t) {
            return Err(Error::range("t", format!("{t} outside [0, {end}]")));
        }
        let k = self.grid.partition_point(|&x| x < t);
        if k < self.grid.len() && self.grid[k] == t {
            return Ok(self.states[k].clone());
        }
        let n = self.params.n();
        match &self.dense {
            Dense::Rk(sol) => {
                let mut y = vec![0.0; sol.dim];
                sol.eval_into(t, &mut y);
                if self.params.is_first_order() {
                    let w = rhs_first_order(&self.params, &y);
                    Ok(PhaseState::new(t, y, w))
                } else {
                    Ok(PhaseState::new(t, y[..n].to_vec(), y[n..].to_vec()))
                }
            }
            Dense::Expo(sol) => {
                let (mut th, mut om) = (vec![0.0; n], vec![0.0; n]);
                sol.eval_into(t, &mut th, &mut om);
                Ok(PhaseState::new(t, th, om))
            }
        }
    }

    /// States on a uniform grid of `count` points over [0, horizon].
    pub fn sample_uniform(&self, count: usize) -> Result<Vec<PhaseState>> {
        let end = self.horizon();
        let count = count.max(2);
        (0..count)
            .map(|k| {
                let t = if k + 1 == count { end } else { end * (k as f64 / (count - 1) as f64) };
                self.dense_eval(t)
            })
            .collect()
    }
}

impl DenseHistory for Trajectory {
    fn params(&self) -> &SystemParams {
        &self.params
    }
    fn initial(&self) -> &PhaseState {
        &self.init
    }
    fn grid(&self) -> &[f64] {
        &self.grid
    }
    fn grid_state(&self, k: usize) -> PhaseState {
        self.states[k].clone()
    }
    fn state_at(&self, t: f64) -> Result<PhaseState> {
        self.dense_eval(t)
    }
}

pub fn dense_eval(traj: &Trajectory, t: f64) -> Result<PhaseState> {
    traj.dense_eval(t)
}

/// Root of `signal` along the dense output inside `bracket`, to 1e-10 in time.
pub fn first_zero<F: Fn(&PhaseState) -> f64>(traj: &Trajectory, signal: F, bracket: (f64, f64)) -> Result<f64> {
    find_root(|t| Ok(signal(&traj.dense_eval(t)?)), bracket.0, bracket.1, 1e-12)
}

/// Earliest grid interval on which `signal` changes sign, refined to a root.
pub fn scan_first_zero<F: Fn(&PhaseState) -> f64>(traj: &Trajectory, signal: F, t_min: f64) -> Result<Option<f64>> {
    let states = traj.states();
    let mut prev: Option<(f64, f64)> = None;
    for st in states.iter().filter(|s| s.t >= t_min) {
        let v = signal(st);
        if let Some((tp, vp)) = prev {
            if vp == 0.0 {
                return Ok(Some(tp));
            }
            if v.signum() != vp.signum() || v == 0.0 {
                return first_zero(traj, &signal, (tp, st.t)).map(Some);
            }
        }
        prev = Some((st.t, v));
    }
    Ok(None)
}

/// Scalar pendulum-type trajectory (used by the determinability pipeline).
#[derive(Debug, Clone)]
pub struct ScalarTrajectory {
    sol: DopriSolution,
}

impl ScalarTrajectory {
    pub(crate) fn new(sol: DopriSolution) -> Self {
        ScalarTrajectory { sol }
    }
    pub fn grid(&self) -> &[f64] {
        &self.sol.t
    }
    pub fn horizon(&self) -> f64 {
        self.sol.t_end()
    }
    /// (x, ẋ) at grid point k
    pub fn grid_value(&self, k: usize) -> (f64, f64) {
        (self.sol.y[k][0], self.sol.y[k][1])
    }
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::range("t", format!("{t} outside [0, {}]", self.horizon())));
        }
        let mut y = [0.0; 2];
        self.sol.eval_into(t, &mut y);
        Ok((y[0], y[1]))
    }
    /// First time x crosses zero, if it does on the horizon.
    pub fn first_zero(&self) -> Result<Option<f64>> {
        for k in 1..self.sol.t.len() {
            let (a, b) = (self.sol.y[k - 1][0], self.sol.y[k][0]);
            if a == 0.0 && k > 1 {
                return Ok(Some(self.sol.t[k - 1]));
            }
            if a.signum() != b.signum() || b == 0.0 {
                let r = find_root(|t| Ok(self.eval(t)?.0), self.sol.t[k - 1], self.sol.t[k], 1e-13)?;
                return Ok(Some(r));
            }
        }
        Ok(None)
    }
}

/// m ẍ + b ẋ = −c sin x
pub(crate) struct Pendulum {
    pub m: f64,
    pub b: f64,
    pub c: f64,
}

impl OdeSystem for Pendulum {
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = (-self.b * y[1] - self.c * y[0].sin()) / self.m;
    }
}

pub(crate) fn solve_pendulum(p: &Pendulum, x0: f64, v0: f64, horizon: f64, tol: f64) -> Result<ScalarTrajectory> {
    let opts = DopriOptions {
        tol,
        h_max: (p.m / 5.0).min(0.05 / p.c),
        max_steps: 5_000_000,
    };
    Ok(ScalarTrajectory::new(dopri::solve(p, &[x0, v0], horizon, &opts)?))
}

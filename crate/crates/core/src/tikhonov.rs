//! Closed-form m → 0 error bounds, derivative bounds, and checks of both
//! against measured trajectory pairs Θ(m,·), Θ(0,·).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrate::{integrate, taylor_jet, Trajectory, MAX_JET_ORDER};
use crate::model::{coupling, PhaseState, SystemParams};
use crate::observables::{diameter, sup_norm};
use crate::quad::adaptive_gk;

const FACTORIALS: [f64; 22] = {
    let mut t = [1.0; 22];
    let mut k = 1;
    while k < 22 {
        t[k] = t[k - 1] * k as f64;
        k += 1;
    }
    t
};

/// Largest derivative order accepted by the bound evaluators ((n+1)! ≤ 21!).
pub const MAX_BOUND_ORDER: usize = 20;

fn fact(k: usize) -> f64 {
    FACTORIALS[k]
}

/// Named inequality measured ≤ bound sampled at `times`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub times: Vec<f64>,
    pub measured: Vec<f64>,
    pub bound: Vec<f64>,
    pub margin: Vec<f64>,
    pub pass: bool,
    pub slack: f64,
}

impl BoundCheck {
    pub fn new(name: impl Into<String>, times: Vec<f64>, measured: Vec<f64>, bound: Vec<f64>, slack: f64) -> Self {
        let margin: Vec<f64> = bound.iter().zip(&measured).map(|(b, m)| b - m).collect();
        let pass = margin.iter().all(|&g| g > -slack);
        BoundCheck {
            name: name.into(),
            times,
            measured,
            bound,
            margin,
            pass,
            slack,
        }
    }

    pub fn worst_margin(&self) -> f64 {
        self.margin.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Data-dependent constants shared by the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundData {
    pub m: f64,
    pub kappa: f64,
    /// D(V)
    pub d_nu: f64,
    /// D(Ω⁰)
    pub d_omega0: f64,
    /// D(Ω⁰ − V)
    pub d_slip: f64,
    /// ‖Ω⁰ − V‖∞
    pub slip_inf: f64,
    pub omega0_inf: f64,
    pub nu_inf: f64,
    /// (max_i(ω⁰_i − ν_i) + min_i(ω⁰_i − ν_i))/2
    pub slip_mid: f64,
}

impl BoundData {
    pub fn new(params: &SystemParams, init: &PhaseState) -> Result<Self> {
        if params.is_first_order() {
            return Err(Error::Precondition("bounds need inertia_m > 0".into()));
        }
        init.check(params)?;
        let slip: Vec<f64> = init.omega.iter().zip(params.nu()).map(|(w, v)| w - v).collect();
        let (lo, hi) = slip
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        Ok(BoundData {
            m: params.m(),
            kappa: params.kappa(),
            d_nu: diameter(params.nu()),
            d_omega0: diameter(&init.omega),
            d_slip: diameter(&slip),
            slip_inf: sup_norm(&slip),
            omega0_inf: sup_norm(&init.omega),
            nu_inf: sup_norm(params.nu()),
            slip_mid: 0.5 * (hi + lo),
        })
    }

    fn decay(&self, t: f64) -> f64 {
        (-t / self.m).exp()
    }

    fn growth(&self, t: f64) -> f64 {
        (2.0 * self.kappa * t).exp()
    }

    /// (1 + t/m)^n e^{−t/m}, evaluated in log space
    fn layer(&self, n: usize, t: f64) -> f64 {
        let r = t / self.m;
        (n as f64 * r.ln_1p() - r).exp()
    }

    fn sqrt_disc(&self) -> f64 {
        (1.0 + 8.0 * self.m * self.kappa).sqrt()
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("t", format!("must be finite and ≥ 0, got {t}")))
    }
}

fn check_order(n: usize, min: usize) -> Result<()> {
    if n < min || n > MAX_BOUND_ORDER {
        Err(Error::range("n", format!("must be in {min}..={MAX_BOUND_ORDER}, got {n}")))
    } else {
        Ok(())
    }
}

impl BoundData {
    pub fn c0_abs(&self, t: f64) -> f64 {
        self.m * self.slip_mid.abs() + 0.5 * self.m * (self.d_slip + 2.0 * self.kappa) * self.growth(t)
    }

    pub fn c0_rel(&self, t: f64) -> f64 {
        self.m * (self.d_slip + 2.0 * self.kappa) * self.growth(t)
    }

    pub fn c1_abs(&self, t: f64) -> f64 {
        let k = self.kappa;
        (self.slip_inf + k) * self.decay(t)
            + self.m * k * (self.d_nu + 2.0 * k)
            + self.m * k * (self.d_slip + 2.0 * k) * self.growth(t)
    }

    pub fn c1_rel(&self, t: f64) -> f64 {
        let k = self.kappa;
        (self.d_slip + 2.0 * k) * self.decay(t)
            + 2.0 * self.m * k * (self.d_nu + 2.0 * k)
            + 2.0 * self.m * k * (self.d_slip + 2.0 * k) * self.growth(t)
    }

    /// m(2 max|ω⁰ − ν| + κ)e^{2κt}
    pub fn c0_uniform(&self, t: f64) -> f64 {
        self.m * (2.0 * self.slip_inf + self.kappa) * self.growth(t)
    }

    /// (abs, rel) strengthened C⁰ forms.
    pub fn c0_sharp(&self, t: f64) -> (f64, f64) {
        let v = gronwall_v_raw(self.m, self.kappa, self.d_slip + 2.0 * self.kappa, t);
        let abs = self.m * self.slip_mid.abs() * -(-t / self.m).exp_m1() + 0.5 * v;
        (abs, v)
    }

    /// (abs, rel) strengthened C¹ forms.
    pub fn c1_sharp(&self, t: f64) -> (f64, f64) {
        let (m, k) = (self.m, self.kappa);
        let s = self.sqrt_disc();
        let c = self.d_slip + 2.0 * k;
        let rate = (s - 1.0) / (2.0 * m);
        let one_minus = -(-t / m).exp_m1();
        let pref = m * k * c / (s * (1.0 + s));
        let abs = (self.slip_inf + k) * self.decay(t)
            + m * k * (self.d_nu + 2.0 * k) * one_minus
            + 2.0 * pref * (rate * t).exp_m1();
        let rel = c * self.decay(t) + 2.0 * m * k * (self.d_nu + 2.0 * k) * one_minus + 4.0 * pref * (rate * t).exp();
        (abs, rel)
    }

    /// (abs, rel) bounds on Θ^{(n)}(m,t) − Θ^{(n)}(0,t), n ≥ 2.
    pub fn cn(&self, n: usize, t: f64) -> Result<(f64, f64)> {
        check_order(n, 2)?;
        let (m, k) = (self.m, self.kappa);
        let ni = n as i32;
        let layer = self.layer(n, t);
        let g = self.growth(t);
        let one_minus = -(-t / m).exp_m1();
        let inner = 2.0 * k + self.d_omega0 + self.d_nu;
        let a_abs = (2.0 * k + self.omega0_inf + self.nu_inf + 9.0 / (8.0 * m)).powi(ni);
        let a = (inner + 9.0 / (8.0 * m)).powi(ni);
        let b = inner.powi(ni);
        let abs = fact(n - 1) * a_abs * layer
            + 9.0 / 8.0 * m * k * fact(n) * g * a * layer
            + 0.75 * m * k * fact(n + 1) * g * b * one_minus;
        let rel = 2.0 * fact(n - 1) * a * layer
            + 1.5 * fact(n + 1) * m * k * g * a * layer
            + 1.5 * fact(n + 1) * m * k * g * b * one_minus;
        Ok((abs, rel))
    }

    /// Uniform-in-i bound on |θ_i^{(n)}(m,t) − θ_i^{(n)}(0,t)|, n ≥ 1.
    pub fn cn_uniform(&self, n: usize, t: f64) -> Result<f64> {
        check_order(n, 1)?;
        let (m, k) = (self.m, self.kappa);
        let base = (k + self.omega0_inf + self.nu_inf + 1.0 / m).powi(n as i32);
        let mkg = m * k * self.growth(t);
        Ok(fact(n + 1) * 2f64.powi(n as i32) * base * (self.layer(n, t) * (1.0 + mkg) + mkg))
    }

    /// Right-hand side of the slow-manifold approximant estimate.
    pub fn approximant(&self, t: f64) -> f64 {
        let (m, k) = (self.m, self.kappa);
        let e = self.decay(t);
        let one_minus = -(-t / m).exp_m1();
        k * self.d_omega0 * t * e * one_minus + m * k * (self.d_nu + 2.0 * k) * one_minus.powi(3)
    }

    /// (abs, rel) bounds on first-order jets: κ(n−1)!(D(V)+2κ)^{n−1} (n ≥ 2) and (n−1)!(D(V)+2κ)ⁿ.
    pub fn first_order_jet(&self, n: usize) -> Result<(f64, f64)> {
        check_order(n, 1)?;
        let w = self.d_nu + 2.0 * self.kappa;
        let abs = if n >= 2 {
            self.kappa * fact(n - 1) * w.powi(n as i32 - 1)
        } else {
            f64::INFINITY
        };
        Ok((abs, fact(n - 1) * w.powi(n as i32)))
    }

    /// (abs, rel) bounds on inertial jets at t = 0.
    pub fn initial_jet(&self, n: usize) -> Result<(f64, f64)> {
        check_order(n, 1)?;
        let (m, k) = (self.m, self.kappa);
        let ni = n as i32;
        let rel = 2.0 * fact(n - 1) * (k + 0.5 * (self.d_omega0 + self.d_nu) + 9.0 / (16.0 * m)).powi(ni);
        let abs = fact(n - 1) * (k + self.omega0_inf + self.nu_inf + 9.0 / (16.0 * m)).powi(ni);
        Ok((abs, rel))
    }

    /// Bound on |θ_i^{(n)} − θ_j^{(n)}| along either system at time t.
    pub fn jet_rel(&self, n: usize, t: f64) -> Result<f64> {
        check_order(n, 1)?;
        let ni = n as i32;
        let a = (2.0 * self.kappa + self.d_omega0 + self.d_nu + 9.0 / (8.0 * self.m)).powi(ni);
        let b = (2.0 * self.kappa + self.d_nu).powi(ni);
        Ok(fact(n - 1) * (a * self.layer(n, t) - b * (-t / self.m).exp_m1()))
    }
}

macro_rules! bound_fn {
    ($(#[$doc:meta])* $name:ident, $method:ident, $out:ty) => {
        $(#[$doc])*
        pub fn $name(params: &SystemParams, init: &PhaseState, t: f64) -> Result<$out> {
            check_time(t)?;
            Ok(BoundData::new(params, init)?.$method(t))
        }
    };
}

bound_fn!(
    /// m|(max(ω⁰−ν)+min(ω⁰−ν))/2| + (m/2)(D(Ω⁰−V)+2κ)e^{2κt}
    bound_c0_abs, c0_abs, f64);
bound_fn!(
    /// m(D(Ω⁰−V)+2κ)e^{2κt}
    bound_c0_rel, c0_rel, f64);
bound_fn!(bound_c1_abs, c1_abs, f64);
bound_fn!(bound_c1_rel, c1_rel, f64);
bound_fn!(bound_c0_uniform, c0_uniform, f64);
bound_fn!(
    /// (abs, rel)
    bound_c0_sharp, c0_sharp, (f64, f64));
bound_fn!(
    /// (abs, rel)
    bound_c1_sharp, c1_sharp, (f64, f64));
bound_fn!(approxaut_bound, approximant, f64);

/// (abs, rel), n ≥ 2
pub fn bound_cn(params: &SystemParams, init: &PhaseState, n: usize, t: f64) -> Result<(f64, f64)> {
    check_time(t)?;
    BoundData::new(params, init)?.cn(n, t)
}

pub fn bound_cn_uniform(params: &SystemParams, init: &PhaseState, n: usize, t: f64) -> Result<f64> {
    check_time(t)?;
    BoundData::new(params, init)?.cn_uniform(n, t)
}

fn gronwall_v_raw(m: f64, kappa: f64, c0: f64, t: f64) -> f64 {
    let s = (1.0 + 8.0 * m * kappa).sqrt();
    // e^{−t/2m}(e^{St/2m} − e^{−St/2m}) = e^{(S−1)t/2m} − e^{−(S+1)t/2m}
    let hi = (s - 1.0) * t / (2.0 * m);
    let lo = -(s + 1.0) * t / (2.0 * m);
    c0 * m / s * (hi.exp() - lo.exp())
}

/// v(t) = (c0 m/S) e^{−t/2m}(e^{St/2m} − e^{−St/2m}), S = √(1+8mκ)
pub fn gronwall_v(m: f64, kappa: f64, c0: f64, t: f64) -> Result<f64> {
    if !(m > 0.0) || !(kappa > 0.0) {
        return Err(Error::invalid("m", "m and kappa must be > 0"));
    }
    check_time(t)?;
    Ok(gronwall_v_raw(m, kappa, c0, t))
}

/// max over 41 points in [0, t_max] of |v(t) − m c0(1−e^{−t/m}) − 2κ∫_0^t v(s)(1−e^{−(t−s)/m}) ds|
pub fn gronwall_identity_residual(m: f64, kappa: f64, c0: f64, t_max: f64) -> Result<f64> {
    gronwall_v(m, kappa, c0, t_max)?;
    let mut worst: f64 = 0.0;
    for k in 0..=40 {
        let t = t_max * (k as f64 / 40.0);
        let (int, _) = adaptive_gk(
            |s| gronwall_v_raw(m, kappa, c0, s) * -(-(t - s) / m).exp_m1(),
            0.0,
            t,
            1e-14,
            1e-14,
            4000,
        );
        let r = gronwall_v_raw(m, kappa, c0, t) - m * c0 * -(-t / m).exp_m1() - 2.0 * kappa * int;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Σ over (m_1..m_n), Σ l·m_l = n, of Π α^{m_l}/(m_l! l^{m_l}), by partition enumeration.
pub fn faa_di_bruno_mass(n: usize, alpha: &BigRational) -> Result<BigRational> {
    if n == 0 || n > 20 {
        return Err(Error::range("n", format!("must be in 1..=20, got {n}")));
    }
    let mut total = BigRational::zero();
    let mut mult = vec![0usize; n + 1];
    partitions(n, n, &mut mult, alpha, &mut total);
    Ok(total)
}

/// Distribute `rest` over parts of size ≤ `max_part`.
fn partitions(rest: usize, max_part: usize, mult: &mut [usize], alpha: &BigRational, total: &mut BigRational) {
    if rest == 0 {
        let mut term = BigRational::one();
        for (l, &ml) in mult.iter().enumerate().skip(1) {
            for j in 1..=ml {
                term *= alpha.clone() / BigRational::from_integer(BigInt::from(j * l));
            }
        }
        *total += term;
        return;
    }
    if max_part == 0 {
        return;
    }
    for count in (0..=rest / max_part).rev() {
        mult[max_part] = count;
        partitions(rest - count * max_part, max_part - 1, mult, alpha, total);
    }
    mult[max_part] = 0;
}

/// α(α+1)⋯(α+n−1)/n!
pub fn rising_binomial(n: usize, alpha: &BigRational) -> BigRational {
    let mut out = BigRational::one();
    for k in 0..n {
        out *= alpha + BigRational::from_integer(BigInt::from(k));
        out /= BigRational::from_integer(BigInt::from(k + 1));
    }
    out
}

/// The three finite-propagation-speed inequalities at every grid point.
pub fn propagation_bounds_check(traj: &Trajectory, slack: f64) -> Result<Vec<BoundCheck>> {
    let p = traj.params();
    if p.is_first_order() {
        return Err(Error::Precondition("propagation bounds need inertia_m > 0".into()));
    }
    let (m, k) = (p.m(), p.kappa());
    let w0 = &traj.initial().omega;
    let nu = p.nu();
    let n = p.n();
    let dv = diameter(nu);
    let dw0 = diameter(w0);
    let states = traj.states();
    let times: Vec<f64> = states.iter().map(|s| s.t).collect();
    let (mut m1, mut b1, mut m2, mut b2, mut m3, mut b3) = (vec![], vec![], vec![], vec![], vec![], vec![]);
    for s in states {
        let e = (-s.t / m).exp();
        let one_minus = -(-s.t / m).exp_m1();
        // two-sided band around e ω⁰ + (1−e) ν with half-width (1−e) κ
        let (mut worst, mut wb) = (f64::NEG_INFINITY, 0.0);
        for i in 0..n {
            let dev = (s.omega[i] - e * w0[i] - one_minus * nu[i]).abs();
            let half = one_minus * k;
            if dev - half > worst - wb {
                worst = dev;
                wb = half;
            }
        }
        m1.push(worst);
        b1.push(wb);
        let (mut worst, mut wb) = (f64::NEG_INFINITY, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let meas = (s.omega[i] - s.omega[j]).abs();
                let bound = e * (w0[i] - w0[j]).abs() + one_minus * ((nu[i] - nu[j]).abs() + 2.0 * k);
                if meas - bound > worst - wb {
                    worst = meas;
                    wb = bound;
                }
            }
        }
        if n == 1 {
            worst = 0.0;
        }
        m2.push(worst);
        b2.push(wb);
        m3.push(diameter(&s.omega));
        b3.push(e * dw0 + one_minus * (dv + 2.0 * k));
    }
    Ok(vec![
        BoundCheck::new("propagation_speed", times.clone(), m1, b1, slack),
        BoundCheck::new("propagation_pair", times.clone(), m2, b2, slack),
        BoundCheck::new("propagation_diameter", times, m3, b3, slack),
    ])
}

/// Slow-manifold approximant of ω_i(t) against its error estimate at every grid point.
pub fn approximant_check(traj: &Trajectory, slack: f64) -> Result<BoundCheck> {
    let p = traj.params();
    let bd = BoundData::new(p, traj.initial())?;
    let w0 = &traj.initial().omega;
    let (mut times, mut meas, mut bound) = (vec![], vec![], vec![]);
    for s in traj.states() {
        let e = (-s.t / p.m()).exp();
        let one_minus = -(-s.t / p.m()).exp_m1();
        let c = coupling(p.kappa(), &s.theta);
        let worst = (0..p.n())
            .map(|i| (s.omega[i] - w0[i] * e - p.nu()[i] * one_minus - c[i] * one_minus).abs())
            .fold(0.0, f64::max);
        times.push(s.t);
        meas.push(worst);
        bound.push(bd.approximant(s.t));
    }
    Ok(BoundCheck::new("slow_manifold_approximant", times, meas, bound, slack))
}

/// Jet-based derivative checks for one inertial trajectory and the first-order one.
pub fn derivative_checks(
    traj_m: &Trajectory,
    traj_0: &Trajectory,
    n_max: usize,
    times: &[f64],
    slack: f64,
) -> Result<Vec<BoundCheck>> {
    if !(2..=MAX_JET_ORDER).contains(&n_max) {
        return Err(Error::range("n_max", format!("must be in 2..={MAX_JET_ORDER}, got {n_max}")));
    }
    let pm = traj_m.params();
    let p0 = traj_0.params();
    let bd = BoundData::new(pm, traj_m.initial())?;
    let jets_m = times
        .iter()
        .map(|&t| taylor_jet(pm, &traj_m.dense_eval(t)?, n_max))
        .collect::<Result<Vec<_>>>()?;
    let jets_0 = times
        .iter()
        .map(|&t| taylor_jet(p0, &traj_0.dense_eval(t)?, n_max))
        .collect::<Result<Vec<_>>>()?;
    let jet_init = taylor_jet(pm, traj_m.initial(), n_max)?;
    let tag = format!("m={}", pm.m());
    let mut out = Vec::new();
    for n in 1..=n_max {
        let ts = times.to_vec();
        let diff: Vec<Vec<f64>> = jets_m
            .iter()
            .zip(&jets_0)
            .map(|(a, b)| a.coeffs[n].iter().zip(&b.coeffs[n]).map(|(x, y)| x - y).collect())
            .collect();
        if n >= 2 {
            let (mut ba, mut br) = (vec![], vec![]);
            for &t in times {
                let (a, r) = bd.cn(n, t)?;
                ba.push(a);
                br.push(r);
            }
            out.push(BoundCheck::new(
                format!("jet_difference_abs[n={n},{tag}]"),
                ts.clone(),
                diff.iter().map(|d| sup_norm(d)).collect(),
                ba,
                slack,
            ));
            out.push(BoundCheck::new(
                format!("jet_difference_rel[n={n},{tag}]"),
                ts.clone(),
                diff.iter().map(|d| diameter(d)).collect(),
                br,
                slack,
            ));
        }
        out.push(BoundCheck::new(
            format!("jet_difference_uniform[n={n},{tag}]"),
            ts.clone(),
            diff.iter().map(|d| sup_norm(d)).collect(),
            times.iter().map(|&t| bd.cn_uniform(n, t)).collect::<Result<_>>()?,
            slack,
        ));

        let (fa, fr) = bd.first_order_jet(n)?;
        if n >= 2 {
            out.push(BoundCheck::new(
                format!("first_order_jet_abs[n={n}]"),
                ts.clone(),
                jets_0.iter().map(|j| sup_norm(&j.coeffs[n])).collect(),
                vec![fa; times.len()],
                slack,
            ));
        }
        out.push(BoundCheck::new(
            format!("first_order_jet_rel[n={n}]"),
            ts.clone(),
            jets_0.iter().map(|j| diameter(&j.coeffs[n])).collect(),
            vec![fr; times.len()],
            slack,
        ));
        let (ia, ir) = bd.initial_jet(n)?;
        out.push(BoundCheck::new(
            format!("initial_jet_abs[n={n},{tag}]"),
            vec![0.0],
            vec![sup_norm(&jet_init.coeffs[n])],
            vec![ia],
            slack,
        ));
        out.push(BoundCheck::new(
            format!("initial_jet_rel[n={n},{tag}]"),
            vec![0.0],
            vec![diameter(&jet_init.coeffs[n])],
            vec![ir],
            slack,
        ));
        let bj: Vec<f64> = times.iter().map(|&t| bd.jet_rel(n, t)).collect::<Result<_>>()?;
        out.push(BoundCheck::new(
            format!("inertial_jet_rel[n={n},{tag}]"),
            ts.clone(),
            jets_m.iter().map(|j| diameter(&j.coeffs[n])).collect(),
            bj.clone(),
            slack,
        ));
        out.push(BoundCheck::new(
            format!("first_order_jet_rel_timed[n={n},{tag}]"),
            ts,
            jets_0.iter().map(|j| diameter(&j.coeffs[n])).collect(),
            bj,
            slack,
        ));
    }
    Ok(out)
}

/// Integrates both systems to max(times) and runs [`derivative_checks`].
pub fn derivative_bound_suite(
    params: &SystemParams,
    init: &PhaseState,
    n_max: usize,
    times: &[f64],
    tol: f64,
) -> Result<Vec<BoundCheck>> {
    let horizon = times.iter().copied().fold(0.0, f64::max);
    if times.is_empty() || horizon <= 0.0 || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::invalid("jet_times", "need nonnegative times with a positive maximum"));
    }
    let tm = integrate(params, init, horizon, tol)?;
    let t0 = integrate(&params.with_inertia(0.0)?, init, horizon, tol)?;
    derivative_checks(&tm, &t0, n_max, times, 50.0 * tol)
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub tol: f64,
    pub slack: f64,
    /// C¹ checks use t ≥ factor·m unless `strict`.
    pub c1_t_min_factor: f64,
    pub strict: bool,
    pub jet_times: Vec<f64>,
}

impl CompareOptions {
    pub fn new(tol: f64) -> Self {
        CompareOptions {
            tol,
            slack: 50.0 * tol,
            c1_t_min_factor: 5.0,
            strict: false,
            jet_times: vec![0.5, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantReport {
    pub m: f64,
    pub sup_difference: f64,
    pub duhamel_max: Option<f64>,
    pub grid_points: usize,
    pub checks: Vec<BoundCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub m_list: Vec<f64>,
    pub variants: Vec<VariantReport>,
    /// sup-difference(m_{k+1}) / sup-difference(m_k)
    pub ratios: Vec<f64>,
    pub pass: bool,
}

impl CompareReport {
    pub fn checks(&self) -> impl Iterator<Item = &BoundCheck> {
        self.variants.iter().flat_map(|v| v.checks.iter())
    }
}

fn zeroth_order_checks(tm: &Trajectory, t0: &Trajectory, opts: &CompareOptions) -> Result<(Vec<BoundCheck>, f64)> {
    let bd = BoundData::new(tm.params(), tm.initial())?;
    let m = bd.m;
    let tag = format!("m={m}");
    let t_min = if opts.strict { 0.0 } else { opts.c1_t_min_factor * m };
    let mut cols: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = vec![(vec![], vec![], vec![]); 13];
    let mut sup: f64 = 0.0;
    for s in tm.states() {
        let t = s.t;
        let r = t0.dense_eval(t)?;
        let dth: Vec<f64> = s.theta.iter().zip(&r.theta).map(|(a, b)| a - b).collect();
        let dom: Vec<f64> = s.omega.iter().zip(&r.omega).map(|(a, b)| a - b).collect();
        let (abs0, rel0) = (sup_norm(&dth), diameter(&dth));
        let (abs1, rel1) = (sup_norm(&dom), diameter(&dom));
        sup = sup.max(abs0);
        let (sa, sr) = bd.c0_sharp(t);
        let (s1a, s1r) = bd.c1_sharp(t);
        let mut push = |k: usize, meas: f64, bound: f64| {
            cols[k].0.push(t);
            cols[k].1.push(meas);
            cols[k].2.push(bound);
        };
        push(0, abs0, bd.c0_abs(t));
        push(1, rel0, bd.c0_rel(t));
        push(2, abs0, sa);
        push(3, rel0, sr);
        push(4, sa, bd.c0_abs(t));
        push(5, sr, bd.c0_rel(t));
        push(6, abs0, bd.c0_uniform(t));
        if t >= t_min {
            push(7, abs1, bd.c1_abs(t));
            push(8, rel1, bd.c1_rel(t));
            push(9, abs1, s1a);
            push(10, rel1, s1r);
            push(11, s1a, bd.c1_abs(t));
            push(12, s1r, bd.c1_rel(t));
        }
    }
    let names = [
        "c0_abs",
        "c0_rel",
        "c0_abs_sharp",
        "c0_rel_sharp",
        "c0_abs_sharp_le_vanilla",
        "c0_rel_sharp_le_vanilla",
        "c0_uniform",
        "c1_abs",
        "c1_rel",
        "c1_abs_sharp",
        "c1_rel_sharp",
        "c1_abs_sharp_le_vanilla",
        "c1_rel_sharp_le_vanilla",
    ];
    let checks = names
        .iter()
        .zip(cols)
        .map(|(name, (t, meas, bound))| {
            // sharp ≤ vanilla compares two formulas, so no integration slack applies
            let slack = if name.ends_with("le_vanilla") { 1e-15 } else { opts.slack };
            BoundCheck::new(format!("{name}[{tag}]"), t, meas, bound, slack)
        })
        .collect();
    Ok((checks, sup))
}

/// Θ(0,·) once, Θ(m,·) per m (concurrently), and every bound check between them.
pub fn compare_trajectories(
    params_base: &SystemParams,
    init: &PhaseState,
    m_list: &[f64],
    horizon: f64,
    n_max: usize,
    opts: &CompareOptions,
) -> Result<CompareReport> {
    if m_list.is_empty() {
        return Err(Error::invalid("m_list", "must not be empty"));
    }
    if m_list.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
        return Err(Error::invalid("m_list", "entries must be finite and > 0"));
    }
    if m_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("m_list", "must be strictly descending"));
    }
    let jet_times: Vec<f64> = opts.jet_times.iter().copied().filter(|&t| t <= horizon).collect();
    let first = integrate(&params_base.with_inertia(0.0)?, init, horizon, opts.tol)?;
    let variants = m_list
        .par_iter()
        .map(|&m| -> Result<VariantReport> {
            let pm = params_base.with_inertia(m)?;
            let tm = integrate(&pm, init, horizon, opts.tol)?;
            let (mut checks, sup) = zeroth_order_checks(&tm, &first, opts)?;
            let mut prop = propagation_bounds_check(&tm, opts.slack)?;
            for c in &mut prop {
                c.name = format!("{}[m={m}]", c.name);
            }
            checks.extend(prop);
            let mut ap = approximant_check(&tm, opts.slack)?;
            ap.name = format!("{}[m={m}]", ap.name);
            checks.push(ap);
            if !jet_times.is_empty() {
                checks.extend(derivative_checks(&tm, &first, n_max, &jet_times, opts.slack)?);
            }
            Ok(VariantReport {
                m,
                sup_difference: sup,
                duhamel_max: tm.duhamel_max(),
                grid_points: tm.grid().len(),
                checks,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios = variants.windows(2).map(|w| w[1].sup_difference / w[0].sup_difference).collect();
    let pass = variants.iter().all(|v| v.checks.iter().all(|c| c.pass));
    Ok(CompareReport {
        m_list: m_list.to_vec(),
        variants,
        ratios,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn data(m: f64, kappa: f64, nu: Vec<f64>, omega0: Vec<f64>) -> (SystemParams, PhaseState) {
        let n = nu.len();
        (SystemParams::new(m, kappa, nu).unwrap(), PhaseState::initial(vec![0.0; n], omega0))
    }

    #[test]
    fn c0_examples() {
        let (p, s) = data(0.1, 1.0, vec![0.3, -0.2], vec![0.3, -0.2]);
        let t = 0.7;
        assert!((bound_c0_abs(&p, &s, t).unwrap() - 0.1 * (2.0 * t).exp()).abs() < 1e-15);
        assert!((bound_c0_rel(&p, &s, t).unwrap() - 0.2 * (2.0 * t).exp()).abs() < 1e-15);
        let (p, s) = data(0.1, 1.0, vec![0.5], vec![1.5]);
        assert!((bound_c0_abs(&p, &s, 0.0).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn single_oscillator_difference_is_below_c0() {
        let (p, s) = data(0.1, 1.0, vec![0.5], vec![1.5]);
        for k in 0..=100 {
            let t = 0.05 * k as f64;
            let diff = 0.1 * 1.0 * -(-t / 0.1f64).exp_m1();
            assert!(diff < bound_c0_abs(&p, &s, t).unwrap());
            let w = (1.5f64 - 0.5) * (-t / 0.1f64).exp();
            assert!(w <= bound_c1_abs(&p, &s, t).unwrap());
        }
    }

    #[test]
    fn c1_example_at_zero() {
        let (m, k) = (0.2, 1.3);
        let (p, s) = data(m, k, vec![0.4; 3], vec![0.4; 3]);
        let want = k + 4.0 * m * k * k;
        assert!((bound_c1_abs(&p, &s, 0.0).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn sharp_forms_below_vanilla() {
        let (p, s) = data(0.3, 0.8, vec![0.1, 0.5, -0.4], vec![1.0, -0.2, 0.3]);
        for k in 0..50 {
            let t = 0.1 * k as f64;
            let (a, r) = bound_c0_sharp(&p, &s, t).unwrap();
            assert!(a <= bound_c0_abs(&p, &s, t).unwrap());
            assert!(r <= bound_c0_rel(&p, &s, t).unwrap());
            let (a, r) = bound_c1_sharp(&p, &s, t).unwrap();
            assert!(a <= bound_c1_abs(&p, &s, t).unwrap());
            assert!(r <= bound_c1_rel(&p, &s, t).unwrap());
        }
        assert_eq!(bound_c0_sharp(&p, &s, 0.0).unwrap().1, 0.0);
    }

    #[test]
    fn cn_rejects_low_order_and_is_positive() {
        let (p, s) = data(0.3, 0.8, vec![0.1, 0.5], vec![1.0, -0.2]);
        assert!(bound_cn(&p, &s, 1, 1.0).is_err());
        assert!(bound_cn(&p, &s, 21, 1.0).is_err());
        for n in 2..=12 {
            let (a, r) = bound_cn(&p, &s, n, 0.7).unwrap();
            assert!(a.is_finite() && a > 0.0 && r.is_finite() && r > 0.0);
        }
    }

    #[test]
    fn cn_uniform_at_zero() {
        let (p, s) = data(0.5, 1.0, vec![0.25, -0.5], vec![1.0, 0.0]);
        let c = 1.0 + 1.0 + 0.5 + 2.0;
        let want = 2.0 * 2.0 * c * (1.0 + 0.5) + 4.0 * c * 0.5;
        assert!((bound_cn_uniform(&p, &s, 1, 0.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn approximant_limits() {
        let (p, s) = data(0.2, 1.5, vec![0.0, 0.6], vec![1.0, -1.0]);
        assert_eq!(approxaut_bound(&p, &s, 0.0).unwrap(), 0.0);
        let lim = 0.2 * 1.5 * (0.6 + 3.0);
        assert!((approxaut_bound(&p, &s, 200.0).unwrap() - lim).abs() < 1e-12);
    }

    #[test]
    fn gronwall_closed_form() {
        assert_eq!(gronwall_v(0.3, 1.0, 3.0, 0.0).unwrap(), 0.0);
        let h = 1e-7;
        let d = (gronwall_v(0.3, 1.0, 3.0, h).unwrap() - gronwall_v(0.3, 1.0, 3.0, 0.0).unwrap()) / h;
        assert!((d - 3.0).abs() < 1e-5);
        assert!(gronwall_identity_residual(0.3, 1.0, 3.0, 5.0).unwrap() < 1e-8);
    }

    #[test]
    fn faa_di_bruno_examples() {
        for n in 1..=10 {
            assert_eq!(faa_di_bruno_mass(n, &rat(1, 1)).unwrap(), rat(1, 1));
            assert_eq!(faa_di_bruno_mass(n, &rat(2, 1)).unwrap(), rat(n as i64 + 1, 1));
        }
        assert_eq!(faa_di_bruno_mass(3, &rat(3, 1)).unwrap(), rat(10, 1));
        assert!(faa_di_bruno_mass(21, &rat(1, 1)).is_err());
        assert_eq!(rising_binomial(3, &rat(3, 1)), rat(10, 1));
    }

    #[test]
    fn bound_check_passes_with_slack() {
        let c = BoundCheck::new("x", vec![0.0, 1.0], vec![1.0, 2.0], vec![1.0, 2.0 - 1e-9], 1e-8);
        assert!(c.pass);
        assert!((c.worst_margin() + 1e-9).abs() < 1e-15);
        let c = BoundCheck::new("x", vec![0.0], vec![1.0], vec![0.5], 1e-8);
        assert!(!c.pass);
    }
}

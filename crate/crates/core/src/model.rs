//! System parameters, states, right-hand sides, symmetry transforms,
//! mean-phase closed forms and the Duhamel residual.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::integrate::DenseHistory;
use crate::quad::{phis, KernelRule};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemParams {
    n: usize,
    inertia_m: f64,
    coupling_kappa: f64,
    nat_freq: Vec<f64>,
}

impl SystemParams {
    /// `inertia_m = 0` selects the first-order system.
    pub fn new(inertia_m: f64, coupling_kappa: f64, nat_freq: Vec<f64>) -> Result<Self> {
        let p = SystemParams {
            n: nat_freq.len(),
            inertia_m,
            coupling_kappa,
            nat_freq,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("nat_freq", "need at least one oscillator"));
        }
        ensure_finite("inertia_m", self.inertia_m)?;
        ensure_finite("coupling_kappa", self.coupling_kappa)?;
        if self.inertia_m < 0.0 {
            return Err(Error::invalid("inertia_m", "must be >= 0"));
        }
        if self.coupling_kappa <= 0.0 {
            return Err(Error::invalid("coupling_kappa", "must be > 0"));
        }
        for &v in &self.nat_freq {
            ensure_finite("nat_freq", v)?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> f64 {
        self.inertia_m
    }
    pub fn kappa(&self) -> f64 {
        self.coupling_kappa
    }
    pub fn nu(&self) -> &[f64] {
        &self.nat_freq
    }
    pub fn is_first_order(&self) -> bool {
        self.inertia_m == 0.0
    }

    /// Same κ and ν, different inertia.
    pub fn with_inertia(&self, m: f64) -> Result<Self> {
        SystemParams::new(m, self.coupling_kappa, self.nat_freq.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub t: f64,
    /// Unwrapped phases.
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
}

impl PhaseState {
    pub fn new(t: f64, theta: Vec<f64>, omega: Vec<f64>) -> Self {
        PhaseState { t, theta, omega }
    }

    pub fn initial(theta: Vec<f64>, omega: Vec<f64>) -> Self {
        PhaseState::new(0.0, theta, omega)
    }

    pub fn check(&self, params: &SystemParams) -> Result<()> {
        if self.theta.len() != params.n() {
            return Err(Error::invalid("theta", format!("expected {} entries", params.n())));
        }
        if self.omega.len() != params.n() {
            return Err(Error::invalid("omega", format!("expected {} entries", params.n())));
        }
        ensure_finite("t", self.t)?;
        for &x in self.theta.iter() {
            ensure_finite("theta", x)?;
        }
        for &x in self.omega.iter() {
            ensure_finite("omega", x)?;
        }
        Ok(())
    }
}

/// out_i = (κ/N) Σ_j sin(θ_j − θ_i)
pub fn coupling_into(kappa: f64, theta: &[f64], out: &mut [f64]) {
    let n = theta.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let s = (theta[j] - theta[i]).sin();
            out[i] += s;
            out[j] -= s;
        }
    }
    let c = kappa / n as f64;
    out.iter_mut().for_each(|o| *o *= c);
}

pub fn coupling(kappa: f64, theta: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; theta.len()];
    coupling_into(kappa, theta, &mut out);
    out
}

pub fn rhs_second_order(params: &SystemParams, state: &PhaseState) -> Result<(Vec<f64>, Vec<f64>)> {
    if params.is_first_order() {
        return Err(Error::invalid("inertia_m", "second-order right-hand side needs m > 0"));
    }
    state.check(params)?;
    let c = coupling(params.kappa(), &state.theta);
    let m = params.m();
    let domega = (0..params.n())
        .map(|i| (params.nu()[i] - state.omega[i] + c[i]) / m)
        .collect();
    Ok((state.omega.clone(), domega))
}

pub fn rhs_first_order(params: &SystemParams, theta: &[f64]) -> Vec<f64> {
    let mut c = coupling(params.kappa(), theta);
    for (ci, nu) in c.iter_mut().zip(params.nu()) {
        *ci += nu;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalileanShift {
    pub nu_shift: f64,
    pub omega_shift: f64,
    pub theta_shift: f64,
}

/// Sends a solution of the original problem to the solution of the shifted one.
#[derive(Debug, Clone, Copy)]
pub struct GalileanMap {
    shift: GalileanShift,
    m: f64,
}

impl GalileanMap {
    pub fn map_state(&self, s: &PhaseState) -> PhaseState {
        let GalileanShift {
            nu_shift: nu,
            omega_shift: om,
            theta_shift: th,
        } = self.shift;
        let x = s.t / self.m;
        let p = phis(2, -x);
        let one_minus_e = x * p[1]; // 1 − e^{−t/m}
        let drift = s.t * x * p[2]; // t − m + m e^{−t/m}
        let e = (-x).exp();
        PhaseState {
            t: s.t,
            theta: s
                .theta
                .iter()
                .map(|v| v - th - self.m * om * one_minus_e - nu * drift)
                .collect(),
            omega: s
                .omega
                .iter()
                .map(|v| v - om * e - nu * one_minus_e)
                .collect(),
        }
    }
}

pub fn apply_galilean(
    params: &SystemParams,
    init: &PhaseState,
    shift: GalileanShift,
) -> Result<(SystemParams, PhaseState, GalileanMap)> {
    if params.is_first_order() {
        return Err(Error::invalid("inertia_m", "Galilean map is stated for m > 0"));
    }
    ensure_finite("nu_shift", shift.nu_shift)?;
    ensure_finite("omega_shift", shift.omega_shift)?;
    ensure_finite("theta_shift", shift.theta_shift)?;
    init.check(params)?;
    let p = SystemParams::new(
        params.m(),
        params.kappa(),
        params.nu().iter().map(|v| v - shift.nu_shift).collect(),
    )?;
    let s = PhaseState::new(
        init.t,
        init.theta.iter().map(|v| v - shift.theta_shift).collect(),
        init.omega.iter().map(|v| v - shift.omega_shift).collect(),
    );
    Ok((p, s, GalileanMap { shift, m: params.m() }))
}

/// θ'(t) = θ(αt), ω'(t) = αω(αt).
#[derive(Debug, Clone, Copy)]
pub struct DilationMap {
    pub alpha: f64,
}

impl DilationMap {
    /// Time in the original problem matching `t_new` in the dilated one.
    pub fn original_time(&self, t_new: f64) -> f64 {
        self.alpha * t_new
    }

    /// Original state at time αt' → dilated state at t'.
    pub fn map_state(&self, original: &PhaseState) -> PhaseState {
        PhaseState {
            t: original.t / self.alpha,
            theta: original.theta.clone(),
            omega: original.omega.iter().map(|w| w * self.alpha).collect(),
        }
    }
}

pub fn apply_dilation(
    params: &SystemParams,
    init: &PhaseState,
    alpha: f64,
) -> Result<(SystemParams, PhaseState, DilationMap)> {
    ensure_finite("alpha", alpha)?;
    if alpha <= 0.0 {
        return Err(Error::invalid("alpha", "must be > 0"));
    }
    init.check(params)?;
    let p = SystemParams::new(
        params.m() / alpha,
        params.kappa() * alpha,
        params.nu().iter().map(|v| v * alpha).collect(),
    )?;
    let s = PhaseState::new(
        init.t / alpha,
        init.theta.clone(),
        init.omega.iter().map(|w| w * alpha).collect(),
    );
    Ok((p, s, DilationMap { alpha }))
}

pub fn apply_reflection(params: &SystemParams, init: &PhaseState) -> Result<(SystemParams, PhaseState)> {
    init.check(params)?;
    let p = SystemParams::new(
        params.m(),
        params.kappa(),
        params.nu().iter().map(|v| -v).collect(),
    )?;
    Ok((p, reflect_state(init)))
}

pub fn reflect_state(s: &PhaseState) -> PhaseState {
    PhaseState {
        t: s.t,
        theta: s.theta.iter().map(|v| -v).collect(),
        omega: s.omega.iter().map(|v| -v).collect(),
    }
}

pub fn validate_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::invalid("perm", format!("expected {n} entries, got {}", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::invalid("perm", "not a bijection on 0..n"));
        }
        seen[p] = true;
    }
    Ok(())
}

/// `out[perm[j]] = x[j]`, i.e. out_i = x_{perm⁻¹(i)}.
pub fn permute(x: &[f64], perm: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (j, &p) in perm.iter().enumerate() {
        out[p] = x[j];
    }
    out
}

pub fn permute_state(s: &PhaseState, perm: &[usize]) -> PhaseState {
    PhaseState {
        t: s.t,
        theta: permute(&s.theta, perm),
        omega: permute(&s.omega, perm),
    }
}

pub fn apply_permutation(
    params: &SystemParams,
    init: &PhaseState,
    perm: &[usize],
) -> Result<(SystemParams, PhaseState)> {
    validate_permutation(perm, params.n())?;
    init.check(params)?;
    let p = SystemParams::new(params.m(), params.kappa(), permute(params.nu(), perm))?;
    Ok((p, permute_state(init, perm)))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Closed-form (θ_c(t), ω_c(t)) of the ensemble means.
pub fn mean_phase_frequency(params: &SystemParams, init: &PhaseState, t: f64) -> Result<(f64, f64)> {
    if params.is_first_order() {
        return Err(Error::invalid("inertia_m", "closed form is stated for m > 0"));
    }
    init.check(params)?;
    let m = params.m();
    let (nu_c, om_c, th_c) = (mean(params.nu()), mean(&init.omega), mean(&init.theta));
    let x = t / m;
    let p = phis(2, -x);
    let one_minus_e = x * p[1];
    let theta_c = m * om_c * one_minus_e + nu_c * t * x * p[2] + th_c;
    let omega_c = om_c * (-x).exp() + nu_c * one_minus_e;
    Ok((theta_c, omega_c))
}

fn sine_sums(theta: &[f64]) -> Vec<f64> {
    coupling(theta.len() as f64, theta)
}

struct DuhamelScan<'a, H: DenseHistory + ?Sized> {
    hist: &'a H,
    j: Vec<f64>,
    t: f64,
    h_max: f64,
}

impl<'a, H: DenseHistory + ?Sized> DuhamelScan<'a, H> {
    fn new(hist: &'a H, tol: f64) -> Self {
        DuhamelScan {
            hist,
            j: vec![0.0; hist.params().n()],
            t: 0.0,
            h_max: duhamel_quad_step(hist.params().m(), tol),
        }
    }

    /// Advance the memory integrals J_i(t) = ∫_0^t e^{−(t−s)/m} Σ_l sin(θ_l − θ_i) ds to `b`.
    fn advance(&mut self, b: f64) -> Result<()> {
        let m = self.hist.params().m();
        let a = self.t;
        let width = b - a;
        if width <= 0.0 {
            return Ok(());
        }
        let n_sub = ((width / self.h_max).ceil() as usize).max(3);
        let h = width / n_sub as f64;
        let n = self.hist.params().n();
        let mut samples = vec![vec![0.0; n_sub + 1]; n];
        for k in 0..=n_sub {
            let s = if k == n_sub { b } else { a + k as f64 * h };
            let st = self.hist.state_at(s)?;
            for (i, v) in sine_sums(&st.theta).into_iter().enumerate() {
                samples[i][k] = v;
            }
        }
        let rule = KernelRule::new(n_sub + 1, h, 1.0 / m);
        let decay = (-width / m).exp();
        for i in 0..n {
            self.j[i] = decay * self.j[i] + rule.total(&samples[i]);
        }
        self.t = b;
        Ok(())
    }

    fn residual(&self, omega: &[f64]) -> Vec<f64> {
        let p = self.hist.params();
        let init = self.hist.initial();
        let m = p.m();
        let x = self.t / m;
        let e = (-x).exp();
        let one_minus_e = x * phis(1, -x)[1];
        let c = p.kappa() / (p.n() as f64 * m);
        (0..p.n())
            .map(|i| omega[i] - (init.omega[i] * e + p.nu()[i] * one_minus_e + c * self.j[i]))
            .collect()
    }
}

fn require_inertial<H: DenseHistory + ?Sized>(hist: &H) -> Result<()> {
    if hist.params().is_first_order() {
        Err(Error::invalid("inertia_m", "Duhamel residual needs m > 0"))
    } else {
        Ok(())
    }
}

/// Quadrature step for the memory integral: m/10, refined so its error stays well below `tol`.
pub fn duhamel_quad_step(m: f64, tol: f64) -> f64 {
    (0.1 * m).min(2.0 * tol.powf(0.25))
}

/// ω_i(t) minus its Duhamel representation evaluated on the dense output,
/// with the memory integral resolved for accuracy `tol`.
pub fn duhamel_residual<H: DenseHistory + ?Sized>(hist: &H, t: f64, tol: f64) -> Result<Vec<f64>> {
    require_inertial(hist)?;
    let grid = hist.grid();
    let t_end = *grid.last().unwrap();
    if !(0.0..=t_end).contains(&t) {
        return Err(Error::range("t", format!("{t} outside [0, {t_end}]")));
    }
    let mut scan = DuhamelScan::new(hist, tol);
    for &g in grid.iter().skip(1) {
        if g >= t {
            break;
        }
        scan.advance(g)?;
    }
    scan.advance(t)?;
    let st = hist.state_at(t)?;
    Ok(scan.residual(&st.omega))
}

/// max_i |Duhamel residual| at every grid point, in one cumulative pass.
pub fn duhamel_profile<H: DenseHistory + ?Sized>(hist: &H, tol: f64) -> Result<Vec<f64>> {
    require_inertial(hist)?;
    let grid = hist.grid();
    let mut scan = DuhamelScan::new(hist, tol);
    let mut out = Vec::with_capacity(grid.len());
    for (k, &g) in grid.iter().enumerate() {
        scan.advance(g)?;
        let st = hist.grid_state(k);
        out.push(scan.residual(&st.omega).iter().fold(0.0f64, |a, r| a.max(r.abs())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn rhs_examples() {
        let p = SystemParams::new(0.5, 1.0, vec![1.0]).unwrap();
        let (dt, dw) = rhs_second_order(&p, &PhaseState::initial(vec![0.0], vec![2.0])).unwrap();
        assert_eq!(dt, vec![2.0]);
        assert_eq!(dw, vec![-2.0]);

        let p = SystemParams::new(1.0, 2.0, vec![0.0, 0.0]).unwrap();
        let (_, dw) = rhs_second_order(&p, &PhaseState::initial(vec![0.0, PI / 2.0], vec![0.0, 0.0])).unwrap();
        assert!(close(&dw, &[1.0, -1.0], 1e-15));

        let p = SystemParams::new(0.3, 1.7, vec![0.2, -0.4, 0.9]).unwrap();
        let s = PhaseState::initial(vec![1.1; 3], p.nu().to_vec());
        let (_, dw) = rhs_second_order(&p, &s).unwrap();
        assert!(dw.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rhs_second_order_rejects_zero_inertia() {
        let p = SystemParams::new(0.0, 1.0, vec![0.0]).unwrap();
        let e = rhs_second_order(&p, &PhaseState::initial(vec![0.0], vec![0.0])).unwrap_err();
        assert_eq!(e.key(), Some("inertia_m"));
    }

    #[test]
    fn first_order_examples() {
        let p = SystemParams::new(0.0, 1.0, vec![0.0, 0.0]).unwrap();
        assert_eq!(rhs_first_order(&p, &[0.0, 0.0]), vec![0.0, 0.0]);
        let p = SystemParams::new(0.0, 2.0, vec![1.0, -1.0]).unwrap();
        assert!(close(&rhs_first_order(&p, &[0.0, PI]), &[1.0, -1.0], 1e-15));
        let p = SystemParams::new(0.0, 3.0, vec![0.0; 3]).unwrap();
        let splay = rhs_first_order(&p, &[0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]);
        // direct double sum, independent of the pairwise loop above
        for (i, v) in splay.iter().enumerate() {
            let th = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0];
            let direct: f64 = th.iter().map(|tj| (tj - th[i]).sin()).sum::<f64>() * 3.0 / 3.0;
            assert!((v - direct).abs() < 1e-15 && v.abs() < 1e-15);
        }
    }

    #[test]
    fn param_validation_names_keys() {
        assert_eq!(SystemParams::new(0.1, -1.0, vec![0.0]).unwrap_err().key(), Some("coupling_kappa"));
        assert_eq!(SystemParams::new(-0.1, 1.0, vec![0.0]).unwrap_err().key(), Some("inertia_m"));
        assert_eq!(SystemParams::new(0.1, 1.0, vec![]).unwrap_err().key(), Some("nat_freq"));
        assert_eq!(SystemParams::new(0.1, 1.0, vec![f64::NAN]).unwrap_err().key(), Some("nat_freq"));
    }

    #[test]
    fn galilean_zero_shift_is_identity() {
        let p = SystemParams::new(0.4, 1.0, vec![0.3, -0.1]).unwrap();
        let s = PhaseState::initial(vec![0.1, 0.5], vec![0.0, 1.0]);
        let zero = GalileanShift {
            nu_shift: 0.0,
            omega_shift: 0.0,
            theta_shift: 0.0,
        };
        let (p2, s2, map) = apply_galilean(&p, &s, zero).unwrap();
        assert_eq!(p2, p);
        assert_eq!(s2, s);
        let later = PhaseState::new(2.0, vec![3.0, 4.0], vec![0.5, 0.6]);
        assert_eq!(map.map_state(&later), later);
    }

    #[test]
    fn galilean_n1_closed_form_maps_to_zero() {
        // N = 1: θ(t) = θ⁰ + mω⁰(1−e^{−t/m}) + ν(t − m + m e^{−t/m})
        let (m, nu, w0, th0) = (0.3, 0.7, -1.2, 0.4);
        let p = SystemParams::new(m, 1.0, vec![nu]).unwrap();
        let s = PhaseState::initial(vec![th0], vec![w0]);
        let shift = GalileanShift {
            nu_shift: nu,
            omega_shift: w0,
            theta_shift: th0,
        };
        let (p2, _, map) = apply_galilean(&p, &s, shift).unwrap();
        assert_eq!(p2.nu(), &[0.0]);
        for &t in &[0.0, 0.01, 0.5, 3.0] {
            let e = (-t / m).exp();
            let theta = th0 + m * w0 * (1.0 - e) + nu * (t - m + m * e);
            let omega = w0 * e + nu * (1.0 - e);
            let mapped = map.map_state(&PhaseState::new(t, vec![theta], vec![omega]));
            assert!(mapped.theta[0].abs() < 1e-14 && mapped.omega[0].abs() < 1e-14);
        }
    }

    #[test]
    fn dilation_preserves_normalized_inertia() {
        let p = SystemParams::new(0.37, 1.3, vec![0.1, 0.2]).unwrap();
        let s = PhaseState::initial(vec![0.0, 1.0], vec![0.5, -0.5]);
        let (p1, s1, _) = apply_dilation(&p, &s, 1.0).unwrap();
        assert_eq!((p1, s1), (p.clone(), s.clone()));
        let (p2, _, _) = apply_dilation(&p, &s, 2.5).unwrap();
        assert!((p2.m() * p2.kappa() - p.m() * p.kappa()).abs() < 1e-15);
        assert!(apply_dilation(&p, &s, 0.0).is_err());
    }

    #[test]
    fn reflection_and_permutation_basics() {
        let p = SystemParams::new(0.2, 1.0, vec![0.1, 0.2, 0.3]).unwrap();
        let s = PhaseState::initial(vec![0.0, 1.0, 2.0], vec![0.5, -0.5, 0.0]);
        let (p1, s1) = apply_reflection(&p, &s).unwrap();
        let (p2, s2) = apply_reflection(&p1, &s1).unwrap();
        assert_eq!((p2, s2), (p.clone(), s.clone()));
        let (p3, s3) = apply_permutation(&p, &s, &[0, 1, 2]).unwrap();
        assert_eq!((p3, s3), (p.clone(), s.clone()));
        let (p4, _) = apply_permutation(&p, &s, &[2, 0, 1]).unwrap();
        assert_eq!(p4.nu(), &[0.2, 0.3, 0.1]);
        assert!(apply_permutation(&p, &s, &[0, 0, 1]).is_err());
        assert!(apply_permutation(&p, &s, &[0, 1]).is_err());
    }

    #[test]
    fn mean_phase_examples() {
        let p = SystemParams::new(0.5, 1.0, vec![0.3, -0.3]).unwrap();
        let s = PhaseState::initial(vec![0.2, 0.4], vec![1.0, -1.0]);
        let (th, _) = mean_phase_frequency(&p, &s, 7.0).unwrap();
        assert!((th - 0.3).abs() < 1e-15);

        let p = SystemParams::new(1.0, 1.0, vec![1.0]).unwrap();
        let s = PhaseState::initial(vec![0.0], vec![0.0]);
        for &t in &[1e-6, 0.1, 1.0, 10.0] {
            let (th, w) = mean_phase_frequency(&p, &s, t).unwrap();
            let exact = t - 1.0 + (-t).exp();
            assert!((th - exact).abs() < 1e-15 * (1.0 + t));
            assert!((w - (1.0 - (-t).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn coupling_sums_to_zero() {
        let th: Vec<f64> = (0..9).map(|k| (k as f64 * 1.37).sin() * 40.0).collect();
        let c = coupling(2.0, &th);
        assert!(c.iter().sum::<f64>().abs() < 1e-12 * 81.0);
    }
}

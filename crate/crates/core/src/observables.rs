//! Order parameter, diameters, mismatch functional, the ξ-criterion for
//! majority clusters and finite-horizon lock certificates.

use serde::Serialize;

use crate::error::{ensure_finite, Error, Result};
use crate::integrate::Trajectory;

/// R = |(1/N) Σ e^{iθ_j}|
pub fn order_parameter(theta: &[f64]) -> f64 {
    if theta.is_empty() {
        return 0.0;
    }
    let (mut c, mut s) = (0.0, 0.0);
    for &x in theta {
        c += x.cos();
        s += x.sin();
    }
    let n = theta.len() as f64;
    (c / n).hypot(s / n).min(1.0)
}

pub fn diameter(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if x.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Diameter of the entries indexed by `a` (0-based).
pub fn restricted_diameter(x: &[f64], a: &[usize]) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::invalid("indices", "empty index set"));
    }
    if let Some(&bad) = a.iter().find(|&&i| i >= x.len()) {
        return Err(Error::invalid("indices", format!("index {bad} out of range for {} entries", x.len())));
    }
    let sub: Vec<f64> = a.iter().map(|&i| x[i]).collect();
    Ok(diameter(&sub))
}

pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// ℒ = sqrt(Σ_{i<j} (θ_i − φ_i − θ_j + φ_j)²)
pub fn mismatch_l2(theta: &[f64], phi: &[f64]) -> Result<f64> {
    if theta.len() != phi.len() {
        return Err(Error::invalid("phi", format!("length {} differs from {}", phi.len(), theta.len())));
    }
    let d: Vec<f64> = theta.iter().zip(phi).map(|(a, b)| a - b).collect();
    let mut s = 0.0;
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            s += (d[i] - d[j]).powi(2);
        }
    }
    Ok(s.sqrt())
}

/// ξ(m, κ, ν_A, Ω⁰_A, η). `eta = f64::INFINITY` gives the three-term variant.
pub fn xi_functional(m: f64, kappa: f64, nu_a: &[f64], omega0_a: &[f64], eta: f64) -> Result<f64> {
    if nu_a.is_empty() || omega0_a.is_empty() {
        return Err(Error::invalid("indices", "empty restriction"));
    }
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", format!("must be > 0, got {eta}")));
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::invalid("coupling_kappa", "must be finite and > 0"));
    }
    let dv = diameter(nu_a);
    let base = m * dv + 2.0 * m * kappa + dv / (2.0 * kappa);
    if eta.is_infinite() {
        return Ok(base);
    }
    let dw = diameter(omega0_a);
    let me = eta.max(1.0);
    let tail_a = dw * m * me * (-me).exp();
    // e^{−η}/(1−e^{−η}) = 1/(e^η − 1)
    let tail_b = dw / (2.0 * kappa) / eta.exp_m1();
    Ok(base + tail_a + tail_b)
}

/// (λ/2) sin ℓ − (1−λ) sin(ℓ/2)
pub fn cluster_margin_rhs(lambda: f64, ell: f64) -> f64 {
    0.5 * lambda * ell.sin() - (1.0 - lambda) * (0.5 * ell).sin()
}

/// Upper end of the admissible ℓ interval, 2·acos(1/λ − 1).
pub fn ell_max(lambda: f64) -> f64 {
    2.0 * (1.0 / lambda - 1.0).acos()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSpec {
    indices: Vec<usize>,
    lambda: f64,
    ell: f64,
    eta: f64,
}

impl ClusterSpec {
    pub fn new(n: usize, indices: Vec<usize>, lambda: f64, ell: f64, eta: f64) -> Result<Self> {
        for (k, v) in [("lambda", lambda), ("ell", ell), ("eta", eta)] {
            ensure_finite(k, v)?;
        }
        if !(lambda > 0.5 && lambda <= 1.0) {
            return Err(Error::invalid("lambda", format!("must lie in (1/2, 1], got {lambda}")));
        }
        let top = ell_max(lambda);
        if !(ell > 0.0 && ell < top) {
            return Err(Error::invalid("ell", format!("must lie in (0, {top}), got {ell}")));
        }
        if !(eta > 0.0) {
            return Err(Error::invalid("eta", format!("must be > 0, got {eta}")));
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() || sorted.iter().any(|&i| i >= n) {
            return Err(Error::invalid("indices", format!("must be distinct indices below {n}")));
        }
        if (indices.len() as f64) < lambda * n as f64 {
            return Err(Error::invalid(
                "indices",
                format!("|A| = {} is smaller than lambda·N = {}", indices.len(), lambda * n as f64),
            ));
        }
        Ok(ClusterSpec {
            indices,
            lambda,
            ell,
            eta,
        })
    }
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn ell(&self) -> f64 {
        self.ell
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub hypotheses_satisfied: bool,
    /// Unmet hypotheses, empty when all hold.
    pub unmet: Vec<String>,
    pub xi: f64,
    pub rhs: f64,
    /// ξ(·, ∞) over all oscillators, for the B = {1, …, N} variant
    pub xi_all: f64,
    pub whole_ensemble_hypothesis: bool,
    pub t1: f64,
    pub diameter_at_t1: f64,
    pub sup_diameter_after_t1: f64,
    pub stays_within_ell: bool,
    pub terminal_diameter: f64,
    pub limsup_bound: f64,
    pub terminal_below_limsup_bound: bool,
    /// `None` when the hypotheses fail (no claim is made).
    pub conclusion_holds: Option<bool>,
}

pub fn cluster_stability_check(traj: &Trajectory, spec: &ClusterSpec, t1: f64) -> Result<ClusterReport> {
    let p = traj.params();
    if p.is_first_order() {
        return Err(Error::Precondition("cluster criterion needs inertia_m > 0".into()));
    }
    if spec.indices.iter().any(|&i| i >= p.n()) {
        return Err(Error::invalid("indices", "index out of range for this trajectory"));
    }
    let (m, kappa) = (p.m(), p.kappa());
    let a = &spec.indices;
    let nu_a: Vec<f64> = a.iter().map(|&i| p.nu()[i]).collect();
    let w0 = &traj.initial().omega;
    let w0_a: Vec<f64> = a.iter().map(|&i| w0[i]).collect();
    let xi = xi_functional(m, kappa, &nu_a, &w0_a, spec.eta)?;
    let xi_all = xi_functional(m, kappa, p.nu(), w0, f64::INFINITY)?;
    let rhs = cluster_margin_rhs(spec.lambda, spec.ell);

    let mut unmet = Vec::new();
    if t1 < spec.eta * m {
        unmet.push(format!("t1 = {t1} < eta·m = {}", spec.eta * m));
    }
    if t1 > traj.horizon() {
        return Err(Error::range("t1", format!("{t1} beyond horizon {}", traj.horizon())));
    }
    let d1 = restricted_diameter(&traj.dense_eval(t1.max(0.0))?.theta, a)?;
    if d1 > spec.ell {
        unmet.push(format!("D(Theta_A(t1)) = {d1} > ell = {}", spec.ell));
    }
    if !(xi < rhs) {
        unmet.push(format!("xi = {xi} is not below {rhs}"));
    }

    let mut sup = d1;
    for s in traj.states().iter().filter(|s| s.t >= t1) {
        sup = sup.max(restricted_diameter(&s.theta, a)?);
    }
    let terminal = restricted_diameter(&traj.final_state().theta, a)?;
    let dv = diameter(&nu_a);
    let limsup_bound = 3.0 * std::f64::consts::PI / (4.0 * (2.0 * spec.lambda - 1.0))
        * (2.0 * m * dv + 4.0 * m * kappa + dv / kappa);
    let stays = sup <= spec.ell;
    let below = terminal < limsup_bound;
    let ok = unmet.is_empty();
    Ok(ClusterReport {
        hypotheses_satisfied: ok,
        unmet,
        xi,
        rhs,
        xi_all,
        whole_ensemble_hypothesis: xi_all < rhs,
        t1,
        diameter_at_t1: d1,
        sup_diameter_after_t1: sup,
        stays_within_ell: stays,
        terminal_diameter: terminal,
        limsup_bound,
        terminal_below_limsup_bound: below,
        conclusion_holds: ok.then_some(stays),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LockCertificate {
    pub locked: bool,
    pub window: (f64, f64),
    pub max_freq_spread: f64,
    pub max_phase_drift: f64,
    pub limiting_r_estimate: f64,
}

/// Finite-horizon proxy for asymptotic phase-locking over the trailing window.
pub fn lock_certificate(traj: &Trajectory, window_fraction: f64, eps_omega: f64, eps_theta: f64) -> Result<LockCertificate> {
    if !(window_fraction > 0.0 && window_fraction < 1.0) {
        return Err(Error::invalid("window_fraction", format!("must lie in (0, 1), got {window_fraction}")));
    }
    let end = traj.horizon();
    let start = end * (1.0 - window_fraction);
    let last = traj.final_state();
    let mut spread: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let mut d = vec![0.0; last.theta.len()];
    for s in traj.states().iter().filter(|s| s.t >= start) {
        spread = spread.max(diameter(&s.omega));
        for (di, (a, b)) in d.iter_mut().zip(s.theta.iter().zip(&last.theta)) {
            *di = a - b;
        }
        // max over pairs of |Δ_ij(t) − Δ_ij(end)| is the diameter of θ(t) − θ(end)
        drift = drift.max(diameter(&d));
    }
    Ok(LockCertificate {
        locked: spread <= eps_omega && drift <= eps_theta,
        window: (start, end),
        max_freq_spread: spread,
        max_phase_drift: drift,
        limiting_r_estimate: order_parameter(&last.theta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::integrate;
    use crate::model::{PhaseState, SystemParams};
    use std::f64::consts::PI;

    #[test]
    fn order_parameter_examples() {
        assert_eq!(order_parameter(&[0.0, 0.0, 0.0]), 1.0);
        assert!(order_parameter(&[0.0, PI]) < 1e-15);
        assert!(order_parameter(&[0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0]) < 1e-15);
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(diameter(&[1.0, 4.0, 2.0]), 3.0);
        assert_eq!(diameter(&[2.5; 4]), 0.0);
        assert_eq!(restricted_diameter(&[1.0, 4.0, 2.0], &[0, 2]).unwrap(), 1.0);
        assert!(restricted_diameter(&[1.0], &[]).is_err());
    }

    #[test]
    fn variance_examples() {
        assert_eq!(variance(&[3.0; 5]), 0.0);
        assert_eq!(variance(&[0.0, 2.0]), 1.0);
    }

    #[test]
    fn mismatch_examples() {
        let th = [0.3, 1.1, -2.0];
        let ph: Vec<f64> = th.iter().map(|x| x + 0.7).collect();
        assert!(mismatch_l2(&th, &ph).unwrap() < 1e-15);
        assert_eq!(mismatch_l2(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!((mismatch_l2(&[1.0, 0.0, 0.0], &[0.0; 3]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(mismatch_l2(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn xi_examples() {
        assert!((xi_functional(0.3, 1.7, &[0.2; 3], &[0.5; 3], 2.0).unwrap() - 2.0 * 0.3 * 1.7).abs() < 1e-15);
        let v = xi_functional(0.1, 1.0, &[0.0, 0.2], &[0.0, 9.0], f64::INFINITY).unwrap();
        assert!((v - 0.32).abs() < 1e-15);
        let (m, k, dw) = (0.2, 1.5, 0.4);
        let full = xi_functional(m, k, &[0.0, 0.0], &[0.0, dw], 1.0).unwrap();
        let e1 = (-1f64).exp();
        let tails = dw * m * e1 + dw / (2.0 * k) * e1 / (1.0 - e1);
        assert!((full - 2.0 * m * k - tails).abs() < 1e-14);
        assert!(xi_functional(m, k, &[0.0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn cluster_spec_validation() {
        assert!(ClusterSpec::new(4, vec![0, 1, 2], 0.75, 1.0, 1.0).is_ok());
        assert_eq!(ClusterSpec::new(4, vec![0, 1, 2], 0.5, 1.0, 1.0).unwrap_err().key(), Some("lambda"));
        assert_eq!(ClusterSpec::new(4, vec![0, 1], 0.75, 1.0, 1.0).unwrap_err().key(), Some("indices"));
        assert_eq!(ClusterSpec::new(4, vec![0, 1, 2], 0.75, ell_max(0.75), 1.0).unwrap_err().key(), Some("ell"));
    }

    #[test]
    fn lock_certificate_cases() {
        let p = SystemParams::new(0.5, 1.0, vec![0.3]).unwrap();
        let tr = integrate(&p, &PhaseState::initial(vec![0.0], vec![0.0]), 5.0, 1e-9).unwrap();
        assert!(lock_certificate(&tr, 0.2, 1e-6, 1e-6).unwrap().locked);

        // x = θ₂ − θ₁ obeys x' = −3 − sin x, which has no rest point
        let p = SystemParams::new(0.0, 1.0, vec![1.5, -1.5]).unwrap();
        let tr = integrate(&p, &PhaseState::initial(vec![0.0, 0.5], vec![]), 60.0, 1e-9).unwrap();
        let c = lock_certificate(&tr, 0.2, 1e-6, 1e-6).unwrap();
        assert!(!c.locked && c.max_phase_drift > 1.0);
        assert!(lock_certificate(&tr, 1.0, 1e-6, 1e-6).is_err());
    }

    #[test]
    fn identical_pair_locks_near_full_coherence() {
        let p = SystemParams::new(0.1, 1.0, vec![0.4, 0.4]).unwrap();
        let tr = integrate(&p, &PhaseState::initial(vec![0.0, 2.0], vec![0.1, -0.3]), 80.0, 1e-10).unwrap();
        let c = lock_certificate(&tr, 0.2, 1e-6, 1e-6).unwrap();
        assert!(c.locked);
        assert!(c.limiting_r_estimate > 1.0 - 1e-9);
    }

    #[test]
    fn cluster_guard_reports_unmet_hypotheses() {
        let p = SystemParams::new(0.5, 1.0, vec![0.0, 2.0, -2.0]).unwrap();
        let tr = integrate(&p, &PhaseState::initial(vec![0.0, 0.1, 0.2], vec![0.0; 3]), 5.0, 1e-8).unwrap();
        let spec = ClusterSpec::new(3, vec![0, 1, 2], 1.0, 1.0, 1.0).unwrap();
        let r = cluster_stability_check(&tr, &spec, 1.0).unwrap();
        assert!(!r.hypotheses_satisfied);
        assert_eq!(r.conclusion_holds, None);
    }
}

//! Exponential stepper for small inertia.
//!
//! Over one step the Duhamel form is exact for the linear part:
//!
//! ```text
//! ω(t_n+s) = ω_n e^{−s/m} + (1/m)∫_0^s e^{−(s−σ)/m} g(σ) dσ
//! θ(t_n+s) = θ_n + mω_n(1−e^{−s/m}) + ∫_0^s (1−e^{−(s−σ)/m}) g(σ) dσ
//! ```
//!
//! with g = ν + coupling(θ). g is replaced by its cubic interpolant at the
//! four Lobatto nodes and the node phases are found by fixed-point iteration.
//! The same formulas give the dense output. The error estimate compares
//! against the quadratic interpolant on three of the nodes.

use crate::error::{Error, Result};
use crate::model::{coupling_into, SystemParams};
use crate::quad::{factorial, lagrange_coefficients, phis};

const NODES: [f64; 4] = [
    0.0,
    0.276_393_202_250_021_03, // (1 − 1/√5)/2
    0.723_606_797_749_978_97,
    1.0,
];
const LOW: [usize; 3] = [0, 1, 3];

#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    theta0: Vec<f64>,
    omega0: Vec<f64>,
    /// monomial coefficients in τ = σ/h of the interpolant of g, 4 per oscillator
    poly: Vec<[f64; 4]>,
}

#[derive(Debug, Clone)]
pub(crate) struct ExpoSolution {
    m: f64,
    pub t: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub omega: Vec<Vec<f64>>,
    segs: Vec<Segment>,
    pub local_error: f64,
}

/// θ and ω weights of a (low- or full-degree) interpolant evaluated at offset s.
struct Weights {
    e_omega: f64,
    e_theta: f64,
    /// per interpolation node
    w_omega: Vec<f64>,
    w_theta: Vec<f64>,
}

fn weights(lagr: &[Vec<f64>], h: f64, m: f64, s: f64) -> Weights {
    let z = -s / m;
    let ph = phis(lagr[0].len() + 2, z);
    let tau = s / h;
    let r = s / m;
    let mut w_omega = vec![0.0; lagr.len()];
    let mut w_theta = vec![0.0; lagr.len()];
    for (j, row) in lagr.iter().enumerate() {
        let mut tp = 1.0;
        for (p, a) in row.iter().enumerate() {
            let fp = factorial(p);
            w_omega[j] += a * tp * r * fp * ph[p + 1];
            w_theta[j] += a * tp * s * r * fp * ph[p + 2];
            tp *= tau;
        }
    }
    Weights {
        e_omega: ph[0],
        e_theta: s * ph[1],
        w_omega,
        w_theta,
    }
}

fn eval_segment(seg: &Segment, m: f64, s: f64, theta: &mut [f64], omega: &mut [f64]) {
    let z = -s / m;
    let ph = phis(5, z);
    let tau = s / seg.h;
    let r = s / m;
    let mut wo = [0.0; 4];
    let mut wt = [0.0; 4];
    let mut tp = 1.0;
    for p in 0..4 {
        let fp = factorial(p);
        wo[p] = tp * r * fp * ph[p + 1];
        wt[p] = tp * s * r * fp * ph[p + 2];
        tp *= tau;
    }
    for i in 0..theta.len() {
        let c = &seg.poly[i];
        omega[i] = seg.omega0[i] * ph[0] + (0..4).map(|p| c[p] * wo[p]).sum::<f64>();
        theta[i] = seg.theta0[i] + s * ph[1] * seg.omega0[i] + (0..4).map(|p| c[p] * wt[p]).sum::<f64>();
    }
}

fn g_at(params: &SystemParams, theta: &[f64], out: &mut [f64]) {
    coupling_into(params.kappa(), theta, out);
    for (o, nu) in out.iter_mut().zip(params.nu()) {
        *o += nu;
    }
}

pub(crate) fn solve(
    params: &SystemParams,
    theta0: &[f64],
    omega0: &[f64],
    t_end: f64,
    tol: f64,
    h_max: f64,
    max_steps: usize,
) -> Result<ExpoSolution> {
    let n = params.n();
    let m = params.m();
    let full = lagrange_coefficients(&NODES);
    let low = lagrange_coefficients(&LOW.map(|k| NODES[k]));
    let mut sol = ExpoSolution {
        m,
        t: vec![0.0],
        theta: vec![theta0.to_vec()],
        omega: vec![omega0.to_vec()],
        segs: Vec::new(),
        local_error: 0.0,
    };
    let mut t = 0.0;
    let mut th = theta0.to_vec();
    let mut om = omega0.to_vec();
    let mut g = vec![vec![0.0; n]; 4];
    g_at(params, &th, &mut g[0]);
    let mut h = h_max.min(m.max(1e-3 * h_max));
    let (safe, beta, expo1, facc1, facc2): (f64, f64, f64, f64, f64) = (0.9, 0.04, 0.25 - 0.04 * 0.75, 5.0, 0.1);
    let mut facold: f64 = 1e-4;
    let mut rejected = false;
    let mut steps = 0usize;
    let mut node_theta = vec![vec![0.0; n]; 4];

    while t < t_end {
        steps += 1;
        if steps > max_steps {
            return Err(Error::Integration {
                t,
                reason: format!("step budget of {max_steps} exhausted (tol {tol:e} unachievable)"),
            });
        }
        h = h.min(h_max);
        let mut last = false;
        if t + 1.0001 * h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration {
                t,
                reason: "step size underflow".into(),
            });
        }

        let node_w: Vec<Weights> = NODES.iter().map(|&c| weights(&full, h, m, c * h)).collect();
        for k in 1..4 {
            let gk = g[0].clone();
            g[k] = gk;
        }
        let mut converged = false;
        for _ in 0..60 {
            let mut change: f64 = 0.0;
            for k in 1..4 {
                let w = &node_w[k];
                for i in 0..n {
                    let v = th[i] + w.e_theta * om[i] + (0..4).map(|j| w.w_theta[j] * g[j][i]).sum::<f64>();
                    change = change.max((v - node_theta[k][i]).abs() / (1.0 + v.abs()));
                    node_theta[k][i] = v;
                }
            }
            for k in 1..4 {
                let (gk, tk) = (&mut g[k], &node_theta[k]);
                g_at(params, tk, gk);
            }
            if change < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            h *= 0.5;
            rejected = true;
            continue;
        }

        let wend = &node_w[3];
        let th1 = node_theta[3].clone();
        let om1: Vec<f64> = (0..n)
            .map(|i| wend.e_omega * om[i] + (0..4).map(|j| wend.w_omega[j] * g[j][i]).sum::<f64>())
            .collect();
        let wl = weights(&low, h, m, h);
        let mut acc = 0.0;
        for i in 0..n {
            let th_lo = th[i] + wl.e_theta * om[i] + (0..3).map(|j| wl.w_theta[j] * g[LOW[j]][i]).sum::<f64>();
            let om_lo = wl.e_omega * om[i] + (0..3).map(|j| wl.w_omega[j] * g[LOW[j]][i]).sum::<f64>();
            let sc_t = tol * (1.0 + th[i].abs().max(th1[i].abs()));
            let sc_w = tol * (1.0 + om[i].abs().max(om1[i].abs()));
            acc += ((th1[i] - th_lo) / sc_t).powi(2) + ((om1[i] - om_lo) / sc_w).powi(2);
        }
        let err = (acc / (2 * n) as f64).sqrt();
        if !err.is_finite() {
            h *= 0.1;
            rejected = true;
            continue;
        }
        let fac11 = err.powf(expo1);
        let fac = facc2.max(facc1.min(fac11 / facold.powf(beta) / safe));
        let mut hnew = h / fac;

        if err <= 1.0 {
            facold = err.max(1e-4);
            sol.local_error = sol.local_error.max(err * tol);
            let poly = (0..n)
                .map(|i| {
                    let mut c = [0.0; 4];
                    for (j, row) in full.iter().enumerate() {
                        for p in 0..4 {
                            c[p] += row[p] * g[j][i];
                        }
                    }
                    c
                })
                .collect();
            sol.segs.push(Segment {
                t0: t,
                h,
                theta0: th.clone(),
                omega0: om.clone(),
                poly,
            });
            t = if last { t_end } else { t + h };
            th = th1;
            om = om1;
            let g3 = g[3].clone();
            g[0] = g3;
            sol.t.push(t);
            sol.theta.push(th.clone());
            sol.omega.push(om.clone());
            if rejected {
                hnew = hnew.min(h);
            }
            rejected = false;
        } else {
            hnew = h / facc1.min(fac11 / safe);
            rejected = true;
        }
        h = hnew;
    }
    Ok(sol)
}

impl ExpoSolution {
    pub fn eval_into(&self, t: f64, theta: &mut [f64], omega: &mut [f64]) {
        let k = self.t.partition_point(|&x| x <= t).saturating_sub(1).min(self.segs.len() - 1);
        let seg = &self.segs[k];
        eval_segment(seg, self.m, t - seg.t0, theta, omega);
    }
}

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{rhs_first_order, PhaseState, SystemParams};
use crate::quad::factorial;

pub const MAX_JET_ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorJet {
    pub t: f64,
    pub order: usize,
    /// `coeffs[k][i]` = θ_i^{(k)}(t), raw derivatives
    pub coeffs: Vec<Vec<f64>>,
}

impl TaylorJet {
    /// Σ_k θ^{(k)} h^k / k!
    pub fn sum(&self, h: f64) -> Vec<f64> {
        let n = self.coeffs[0].len();
        let mut out = vec![0.0; n];
        let mut hk = 1.0;
        for (k, row) in self.coeffs.iter().enumerate() {
            let w = hk / factorial(k);
            for i in 0..n {
                out[i] += w * row[i];
            }
            hk *= h;
        }
        out
    }
}

/// θ^{(0..K)} at `state` from power-series recurrences.
///
/// For each pair the series of u = θ_b − θ_a, s = sin u and c = cos u are
/// advanced with k s_k = Σ j u_j c_{k−j} and k c_k = −Σ j u_j s_{k−j};
/// the equation of motion then yields the next phase coefficient.
pub fn taylor_jet(params: &SystemParams, state: &PhaseState, order: usize) -> Result<TaylorJet> {
    if order == 0 || order > MAX_JET_ORDER {
        return Err(Error::range("order", format!("must be in 1..={MAX_JET_ORDER}, got {order}")));
    }
    let n = params.n();
    if state.theta.len() != n {
        return Err(Error::invalid("theta", format!("expected {n} entries")));
    }
    let first = params.is_first_order();
    if !first && state.omega.len() != n {
        return Err(Error::invalid("omega", format!("expected {n} entries")));
    }
    let (m, kn) = (params.m(), params.kappa() / n as f64);
    // normalized coefficients a[k][i] = θ_i^{(k)}/k!
    let mut a = vec![vec![0.0; n]; order + 1];
    a[0] = state.theta.clone();
    a[1] = if first {
        rhs_first_order(params, &state.theta)
    } else {
        state.omega.clone()
    };
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    let mut u = vec![vec![0.0; order + 1]; pairs.len()];
    let mut s = vec![vec![0.0; order + 1]; pairs.len()];
    let mut c = vec![vec![0.0; order + 1]; pairs.len()];
    for (p, &(x, y)) in pairs.iter().enumerate() {
        u[p][0] = a[0][y] - a[0][x];
        s[p][0] = u[p][0].sin();
        c[p][0] = u[p][0].cos();
    }

    // coupling coefficient of order k needs phase coefficients up to k
    let mut couple = |k: usize, a: &Vec<Vec<f64>>| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (p, &(x, y)) in pairs.iter().enumerate() {
            if k > 0 {
                u[p][k] = a[k][y] - a[k][x];
                let (mut sk, mut ck) = (0.0, 0.0);
                for j in 1..=k {
                    let ju = j as f64 * u[p][j];
                    sk += ju * c[p][k - j];
                    ck -= ju * s[p][k - j];
                }
                s[p][k] = sk / k as f64;
                c[p][k] = ck / k as f64;
            }
            out[x] += s[p][k];
            out[y] -= s[p][k];
        }
        out.iter_mut().for_each(|v| *v *= kn);
        out
    };

    if first {
        let _ = couple(0, &a);
        for k in 1..order {
            let ck = couple(k, &a);
            for i in 0..n {
                a[k + 1][i] = ck[i] / (k + 1) as f64;
            }
        }
    } else {
        for k in 0..order.saturating_sub(1) {
            let ck = couple(k, &a);
            for i in 0..n {
                let forcing = if k == 0 { params.nu()[i] } else { 0.0 };
                a[k + 2][i] = (forcing + ck[i] - (k + 1) as f64 * a[k + 1][i]) / (m * ((k + 1) * (k + 2)) as f64);
            }
        }
    }
    let coeffs = a
        .into_iter()
        .enumerate()
        .map(|(k, row)| {
            let f = factorial(k);
            row.into_iter().map(|v| v * f).collect()
        })
        .collect();
    Ok(TaylorJet {
        t: state.t,
        order,
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rhs_second_order;

    #[test]
    fn order_one_matches_rhs() {
        let p = SystemParams::new(0.0, 1.3, vec![0.2, -0.1, 0.4]).unwrap();
        let st = PhaseState::initial(vec![0.0, 1.0, 2.0], vec![]);
        let jet = taylor_jet(&p, &st, 1).unwrap();
        assert_eq!(jet.coeffs[1], rhs_first_order(&p, &st.theta));

        let p = SystemParams::new(0.4, 1.3, vec![0.2, -0.1, 0.4]).unwrap();
        let st = PhaseState::initial(vec![0.0, 1.0, 2.0], vec![0.5, 0.0, -0.2]);
        let jet = taylor_jet(&p, &st, 2).unwrap();
        assert_eq!(jet.coeffs[1], st.omega);
        let (_, dw) = rhs_second_order(&p, &st).unwrap();
        for i in 0..3 {
            assert!((jet.coeffs[2][i] - dw[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn single_oscillator_closed_form() {
        // θ^{(k)}(0) = (−1/m)^{k−1}(ω⁰ − ν), k ≥ 2
        let (m, nu, w0) = (0.3, 0.5, 1.7);
        let p = SystemParams::new(m, 2.0, vec![nu]).unwrap();
        let jet = taylor_jet(&p, &PhaseState::initial(vec![0.4], vec![w0]), 10).unwrap();
        for k in 2..=10 {
            let exact = (-1.0 / m).powi(k as i32 - 1) * (w0 - nu);
            assert!((jet.coeffs[k][0] - exact).abs() <= 1e-12 * exact.abs(), "k={k}");
        }
    }

    #[test]
    fn order_limits() {
        let p = SystemParams::new(0.1, 1.0, vec![0.0]).unwrap();
        let st = PhaseState::initial(vec![0.0], vec![0.0]);
        assert!(taylor_jet(&p, &st, 0).is_err());
        assert!(taylor_jet(&p, &st, 13).is_err());
        assert!(taylor_jet(&p, &st, 12).is_ok());
    }

    #[test]
    fn second_derivative_against_finite_difference_of_rhs() {
        // first-order system: θ'' = J(θ) θ', compare with a central difference of θ' along θ'
        let p = SystemParams::new(0.0, 1.1, vec![0.3, -0.2, 0.1, 0.0]).unwrap();
        let th = vec![0.1, 1.4, -0.7, 2.2];
        let jet = taylor_jet(&p, &PhaseState::initial(th.clone(), vec![]), 3).unwrap();
        let v = rhs_first_order(&p, &th);
        let eps = 1e-5;
        let plus: Vec<f64> = th.iter().zip(&v).map(|(x, d)| x + eps * d).collect();
        let minus: Vec<f64> = th.iter().zip(&v).map(|(x, d)| x - eps * d).collect();
        let (fp, fm) = (rhs_first_order(&p, &plus), rhs_first_order(&p, &minus));
        for i in 0..4 {
            let fd = (fp[i] - fm[i]) / (2.0 * eps);
            let rel = (fd - jet.coeffs[2][i]).abs() / jet.coeffs[2][i].abs().max(1e-3);
            assert!(rel < 1e-6, "i={i} fd={fd} jet={}", jet.coeffs[2][i]);
        }
    }
}

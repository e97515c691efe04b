//! Dormand–Prince 5(4) with PI step control and the 4th-order continuous extension.

use crate::error::{Error, Result};

pub(crate) trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DopriOptions {
    pub tol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

/// Accepted steps plus per-step interpolation data.
#[derive(Debug, Clone)]
pub(crate) struct DopriSolution {
    pub dim: usize,
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    /// 5·dim coefficients per step
    cont: Vec<f64>,
    /// largest accepted scaled error estimate × tol
    pub local_error: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn scaled_norm(v: &[f64], y: &[f64], tol: f64) -> f64 {
    let s: f64 = v
        .iter()
        .zip(y)
        .map(|(vi, yi)| {
            let sc = tol * (1.0 + yi.abs());
            (vi / sc).powi(2)
        })
        .sum();
    (s / v.len() as f64).sqrt()
}

fn initial_step<S: OdeSystem>(sys: &S, t0: f64, y0: &[f64], f0: &[f64], opts: &DopriOptions) -> f64 {
    let d0 = scaled_norm(y0, y0, opts.tol);
    let d1 = scaled_norm(f0, y0, opts.tol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(opts.h_max);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    sys.rhs(t0 + h0, &y1, &mut f1);
    let df: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled_norm(&df, y0, opts.tol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.h_max)
}

pub(crate) fn solve<S: OdeSystem>(sys: &S, y0: &[f64], t_end: f64, opts: &DopriOptions) -> Result<DopriSolution> {
    let dim = sys.dim();
    let tol = opts.tol;
    let mut t = 0.0;
    let mut y = y0.to_vec();
    let mut sol = DopriSolution {
        dim,
        t: vec![0.0],
        y: vec![y.clone()],
        cont: Vec::new(),
        local_error: 0.0,
    };
    let mut k1 = vec![0.0; dim];
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    let mut ytmp = vec![0.0; dim];
    let mut y1 = vec![0.0; dim];
    let mut errv = vec![0.0; dim];
    sys.rhs(t, &y, &mut k1);
    let mut h = initial_step(sys, t, &y, &k1, opts);
    let (safe, beta, expo1, facc1, facc2): (f64, f64, f64, f64, f64) = (0.9, 0.04, 0.2 - 0.04 * 0.75, 5.0, 0.1);
    let mut facold: f64 = 1e-4;
    let mut rejected = false;
    let mut steps = 0usize;

    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Integration {
                t,
                reason: format!("step budget of {} exhausted (tol {tol:e} unachievable)", opts.max_steps),
            });
        }
        h = h.min(opts.h_max);
        let mut last = false;
        if t + h >= t_end || t + 1.0001 * h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration {
                t,
                reason: "step size underflow".into(),
            });
        }

        for i in 0..dim {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        sys.rhs(t + C2 * h, &ytmp, &mut k2);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * h, &ytmp, &mut k3);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * h, &ytmp, &mut k4);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * h, &ytmp, &mut k5);
        for i in 0..dim {
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.rhs(t + h, &ytmp, &mut k6);
        for i in 0..dim {
            y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.rhs(t + h, &y1, &mut k7);
        for i in 0..dim {
            errv[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            ytmp[i] = y[i].abs().max(y1[i].abs());
        }
        let err = scaled_norm(&errv, &ytmp, tol);
        if !err.is_finite() {
            h *= 0.1;
            rejected = true;
            continue;
        }
        let fac11 = err.powf(expo1);
        let mut fac = fac11 / facold.powf(beta);
        fac = facc2.max(facc1.min(fac / safe));
        let mut hnew = h / fac;

        if err <= 1.0 {
            facold = err.max(1e-4);
            sol.local_error = sol.local_error.max(err * tol);
            for i in 0..dim {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                sol.cont.push(y[i]);
                sol.cont.push(ydiff);
                sol.cont.push(bspl);
                sol.cont.push(ydiff - h * k7[i] - bspl);
                sol.cont.push(h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]));
            }
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            sol.t.push(t);
            sol.y.push(y.clone());
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

impl DopriSolution {
    pub fn t_end(&self) -> f64 {
        *self.t.last().unwrap()
    }

    /// Index k with t[k] ≤ t ≤ t[k+1].
    pub fn segment(&self, t: f64) -> usize {
        let k = self.t.partition_point(|&x| x <= t);
        k.saturating_sub(1).min(self.t.len() - 2)
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let k = self.segment(t);
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let s = (t - t0) / (t1 - t0);
        let s1 = 1.0 - s;
        let base = 5 * self.dim * k;
        for (i, o) in out.iter_mut().enumerate() {
            let r = &self.cont[base + 5 * i..base + 5 * i + 5];
            *o = r[0] + s * (r[1] + s1 * (r[2] + s * (r[3] + s1 * r[4])));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Osc;
    impl OdeSystem for Osc {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    #[test]
    fn harmonic_oscillator() {
        let opts = DopriOptions {
            tol: 1e-11,
            h_max: 1.0,
            max_steps: 100_000,
        };
        let sol = solve(&Osc, &[1.0, 0.0], 10.0, &opts).unwrap();
        let y = sol.y.last().unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-9);
        assert!((y[1] + 10f64.sin()).abs() < 1e-9);
        let mut out = [0.0; 2];
        for k in 0..200 {
            let t = 0.05 * k as f64 + 0.013;
            sol.eval_into(t, &mut out);
            assert!((out[0] - t.cos()).abs() < 1e-8, "t={t}");
        }
        assert_eq!(sol.t_end(), 10.0);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let opts = DopriOptions {
            tol: 1e-12,
            h_max: 1e-3,
            max_steps: 10,
        };
        let e = solve(&Osc, &[1.0, 0.0], 10.0, &opts).unwrap_err();
        assert!(e.is_numerical());
    }
}

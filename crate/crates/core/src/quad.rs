//! Quadrature helpers: φ-functions, exponentially weighted cumulative rules,
//! adaptive Gauss–Kronrod.

use std::sync::OnceLock;

/// φ_0(z), …, φ_kmax(z) where φ_0 = e^z and φ_{k+1}(z) = (φ_k(z) − 1/k!)/z.
///
/// Equivalently φ_k(z) = Σ_j z^j/(j+k)! = ∫_0^1 e^{(1−τ)z} τ^{k−1}/(k−1)! dτ.
pub fn phis(kmax: usize, z: f64) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if z.abs() < 1.0 {
        for (k, o) in out.iter_mut().enumerate() {
            let mut term = 1.0 / factorial(k);
            let mut sum = term;
            for j in 0..30 {
                term *= z / (j + k + 1) as f64;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            *o = sum;
        }
    } else if !(-20.0..=0.0).contains(&z) {
        // upward recurrence: no cancellation in these ranges
        out[0] = z.exp();
        for k in 0..kmax {
            out[k + 1] = (out[k] - 1.0 / factorial(k)) / z;
        }
    } else {
        out[0] = z.exp();
        let (x, w) = gauss_legendre_32();
        for k in 1..=kmax {
            let mut s = 0.0;
            for (xi, wi) in x.iter().zip(w) {
                let tau = 0.5 * (xi + 1.0);
                s += 0.5 * wi * ((1.0 - tau) * z).exp() * tau.powi(k as i32 - 1);
            }
            out[k] = s / factorial(k - 1);
        }
    }
    out
}

pub fn phi(k: usize, z: f64) -> f64 {
    phis(k, z)[k]
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

fn gauss_legendre_32() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre(32))
}

/// Nodes and weights on [−1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut r = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, r);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * r * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (r * p1 - p0) / (r * r - 1.0);
            let dr = p1 / dp;
            r -= dr;
            if dr.abs() < 1e-16 {
                break;
            }
        }
        x[i] = r;
        w[i] = 2.0 / ((1.0 - r * r) * dp * dp);
    }
    (x, w)
}

/// Monomial coefficients (in τ) of the Lagrange basis on `nodes`.
/// Row j holds ℓ_j(τ) = Σ_p `out[j][p]` τ^p.
pub fn lagrange_coefficients(nodes: &[f64]) -> Vec<Vec<f64>> {
    let d = nodes.len();
    (0..d)
        .map(|j| {
            let mut poly = vec![1.0];
            let mut denom = 1.0;
            for (i, &ri) in nodes.iter().enumerate() {
                if i == j {
                    continue;
                }
                let mut next = vec![0.0; poly.len() + 1];
                for (p, c) in poly.iter().enumerate() {
                    next[p + 1] += c;
                    next[p] -= ri * c;
                }
                poly = next;
                denom *= nodes[j] - ri;
            }
            poly.iter().map(|c| c / denom).collect()
        })
        .collect()
}

/// Running integrals J_k = ∫_{x_0}^{x_k} e^{−λ(x_k − s)} f(s) ds on a uniform grid.
///
/// Each interval integrates the cubic through four neighbouring samples
/// against the kernel exactly (fewer samples → lower degree). λ = 0 gives
/// plain cumulative integration.
#[derive(Debug, Clone)]
pub struct KernelRule {
    npts: usize,
    decay: f64,
    /// weights[o] for an interval whose window starts `o` samples before it
    weights: Vec<Vec<f64>>,
    deg: usize,
}

impl KernelRule {
    pub fn new(npts: usize, h: f64, lambda: f64) -> Self {
        assert!(npts >= 2, "need at least two samples");
        let deg = (npts - 1).min(3);
        let z = -lambda * h;
        let ph = phis(deg + 1, z);
        let n_offsets = if deg == 3 { 3 } else { deg };
        let weights = (0..n_offsets)
            .map(|o| {
                let nodes: Vec<f64> = (0..=deg).map(|j| j as f64 - o as f64).collect();
                lagrange_coefficients(&nodes)
                    .iter()
                    .map(|row| {
                        h * row
                            .iter()
                            .enumerate()
                            .map(|(p, a)| a * factorial(p) * ph[p + 1])
                            .sum::<f64>()
                    })
                    .collect()
            })
            .collect();
        KernelRule {
            npts,
            decay: (-lambda * h).exp(),
            weights,
            deg,
        }
    }

    fn window(&self, k: usize) -> (usize, usize) {
        if self.deg < 3 {
            (0, k)
        } else {
            let start = k.saturating_sub(1).min(self.npts - 4);
            (start, k - start)
        }
    }

    pub fn cumulative(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.npts);
        let mut out = vec![0.0; self.npts];
        for k in 0..self.npts - 1 {
            let (start, o) = self.window(k);
            let w = &self.weights[o];
            let local: f64 = w.iter().enumerate().map(|(j, wj)| wj * f[start + j]).sum();
            out[k + 1] = self.decay * out[k] + local;
        }
        out
    }

    /// Final value of [`cumulative`](Self::cumulative) only.
    pub fn total(&self, f: &[f64]) -> f64 {
        *self.cumulative(f).last().unwrap()
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = hw * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * hw, ((k - g) * hw).abs())
}

/// Globally adaptive G7–K15 quadrature. Returns (value, error estimate).
pub fn adaptive_gk<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) || parts.len() >= max_intervals {
            return (total, err);
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi_direct(k: usize, z: f64) -> f64 {
        // closed forms, fine away from z = 0
        match k {
            0 => z.exp(),
            1 => (z.exp() - 1.0) / z,
            2 => (z.exp() - 1.0 - z) / (z * z),
            3 => (z.exp() - 1.0 - z - z * z / 2.0) / (z * z * z),
            _ => unreachable!(),
        }
    }

    #[test]
    fn phi_matches_closed_forms() {
        for &z in &[-0.5, -1.0, -3.0, -7.5, -19.0, -25.0, -300.0, 2.0] {
            for k in 0..=3 {
                let a = phi(k, z);
                let b = phi_direct(k, z);
                assert!((a - b).abs() <= 1e-13 * b.abs().max(1e-300), "k={k} z={z}: {a} vs {b}");
            }
        }
        assert_eq!(phi(2, 0.0), 0.5);
    }

    #[test]
    fn phi_is_continuous_across_branches() {
        for &z0 in &[-1.0f64, -20.0] {
            for k in 0..6 {
                let lo = phi(k, z0 - 1e-12);
                let hi = phi(k, z0 + 1e-12);
                // φ_k' = φ_k − kφ_{k+1}
                let slope = phi(k, z0) - k as f64 * phi(k + 1, z0);
                let jump = hi - lo - 2e-12 * slope;
                assert!(jump.abs() < 1e-14 * lo.abs(), "k={k} at {z0}: jump {jump:e}");
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(32);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_rule_plain_cubic_is_exact() {
        let n = 11;
        let h = 0.1;
        let f: Vec<f64> = (0..n).map(|k| (k as f64 * h).powi(3)).collect();
        let j = KernelRule::new(n, h, 0.0).cumulative(&f);
        for (k, v) in j.iter().enumerate() {
            let x = k as f64 * h;
            assert!((v - x.powi(4) / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_rule_exponential_weight() {
        // ∫_0^x e^{−λ(x−s)} s ds = x/λ − (1 − e^{−λx})/λ²
        let (n, h, lam) = (21, 0.05, 30.0);
        let f: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
        let j = KernelRule::new(n, h, lam).cumulative(&f);
        let x = (n - 1) as f64 * h;
        let exact = x / lam - (1.0 - (-lam * x).exp()) / (lam * lam);
        assert!((j[n - 1] - exact).abs() < 1e-15);
    }

    #[test]
    fn kernel_rule_few_points() {
        let j = KernelRule::new(2, 0.5, 0.0).cumulative(&[1.0, 2.0]);
        assert!((j[1] - 0.75).abs() < 1e-15);
        let j = KernelRule::new(3, 0.5, 0.0).cumulative(&[0.0, 0.25, 1.0]);
        assert!((j[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gk_adaptive() {
        let (v, _) = adaptive_gk(|x| (-x * x).exp(), 0.0, 5.0, 1e-14, 1e-14, 200);
        let exact = 0.886226925452758 * 0.9999999999984626; // √π/2 · erf(5)
        assert!((v - exact).abs() < 1e-13);
        let (v, _) = adaptive_gk(|x| x.sqrt(), 0.0, 1.0, 1e-12, 1e-12, 500);
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
    }
}

//! Galilean shift, time dilation, reflection and relabeling map solutions to solutions.

use sync_lab::model::{
    apply_dilation, apply_galilean, apply_permutation, apply_reflection, permute_state, reflect_state, GalileanShift,
};
use sync_lab::{integrate, PhaseState, SystemParams};

fn gap(a: &PhaseState, b: &PhaseState) -> f64 {
    let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    d(&a.theta, &b.theta).max(d(&a.omega, &b.omega))
}

fn main() -> sync_lab::Result<()> {
    let tol = 1e-11;
    let t = 4.0;
    let params = SystemParams::new(0.25, 1.3, vec![0.4, -0.1, 0.2, -0.3])?;
    let init = PhaseState::initial(vec![0.0, 0.9, -0.5, 2.0], vec![0.1, 0.3, -0.2, 0.0]);
    let orig = integrate(&params, &init, t, tol)?;

    let shift = GalileanShift { nu_shift: 0.7, omega_shift: 0.2, theta_shift: 1.0 };
    let (p, s, map) = apply_galilean(&params, &init, shift)?;
    let moved = integrate(&p, &s, t, tol)?;
    println!("galilean    {:.2e}", gap(&map.map_state(orig.final_state()), moved.final_state()));

    let alpha = 2.0;
    let (p, s, map) = apply_dilation(&params, &init, alpha)?;
    let dilated = integrate(&p, &s, t / alpha, tol)?;
    println!("dilation    {:.2e}", gap(&map.map_state(&orig.dense_eval(map.original_time(t / alpha))?), dilated.final_state()));

    let (p, s) = apply_reflection(&params, &init)?;
    let reflected = integrate(&p, &s, t, tol)?;
    println!("reflection  {:.2e}", gap(&reflect_state(orig.final_state()), reflected.final_state()));

    let perm = [2, 0, 3, 1];
    let (p, s) = apply_permutation(&params, &init, &perm)?;
    let relabeled = integrate(&p, &s, t, tol)?;
    println!("permutation {:.2e}", gap(&permute_state(orig.final_state(), &perm), relabeled.final_state()));
    Ok(())
}

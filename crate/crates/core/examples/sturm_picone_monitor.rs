//! Mismatch ℒ(t) between two solutions sharing Ω⁰: no translation before T*.

use sync_lab::reconstruct::sturm_picone_monitor;
use sync_lab::{integrate, PhaseState, SystemParams};

fn main() -> sync_lab::Result<()> {
    let params = SystemParams::new(1.0, 1.0, vec![0.01, -0.01])?;
    let omega0 = vec![0.05, -0.05];
    let a = integrate(&params, &PhaseState::initial(vec![0.0, 0.2], omega0.clone()), 10.0, 1e-11)?;
    let b = integrate(&params, &PhaseState::initial(vec![0.3, -0.1], omega0), 10.0, 1e-11)?;

    let r = sturm_picone_monitor(&a, &b, params.kappa(), params.m())?;
    println!("T* = {:.6}", r.threshold);
    println!("ℒ(0) = {:.4e}", r.mismatch_initial);
    println!("min ℒ on [0, T*] = {:.4e}", r.min_before_threshold);
    println!("first zero = {:?}", r.first_zero);
    println!("positive until T*: {}", r.positive_until_threshold);
    Ok(())
}

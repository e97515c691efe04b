//! Threshold T*(κ, m) beyond which (Ω⁰, Θ(t*)) may fail to determine the solution.

use sync_lab::reconstruct::{determinability_threshold, pendulum_first_zero};

fn main() -> sync_lab::Result<()> {
    let kappas = [0.5, 1.0, 2.0];
    print!("{:>6}", "m\\κ");
    for k in kappas {
        print!("{k:>12}");
    }
    println!();
    for m in [0.25, 0.5, 1.0, 2.0] {
        print!("{m:>6}");
        for k in kappas {
            print!("{:>12.6}", determinability_threshold(k, m)?);
        }
        println!();
    }
    // nonlinear first zero approaches T* from above as the amplitude shrinks
    for eta in [1.0, 0.3, 0.1, 1e-3] {
        let t1 = pendulum_first_zero(1.0, 1.0, eta)?.expect("underdamped");
        println!("η = {eta:<6} first zero {t1:.9}");
    }
    println!("T*(1, 1) = {:.9}", determinability_threshold(1.0, 1.0)?);
    Ok(())
}

//! Two distinct solutions with the same Ω⁰ and the same phases at t* > T*.

use sync_lab::reconstruct::counterexample_bipolar;

fn main() -> sync_lab::Result<()> {
    let ce = counterexample_bipolar(2, 1, 1.0, 1.0, 3.0, 1e-10)?;
    let r = &ce.report;
    println!("T* = {:.6}, t* = {}", r.threshold, r.t_star);
    println!("η = {:.9} (bracket {:?}, {} probes)", ce.eta, r.bracket, r.probes);
    println!("Θ⁰ = {:?}", ce.theta0);
    println!("Φ⁰ = {:?}", ce.phi0);
    println!("phase gap at t*       {:.3e}", r.phase_gap);
    println!("velocity gap at t*    {:.4}", r.velocity_gap_diameter);
    println!("duhamel residuals     {:.2e} {:.2e}", r.duhamel_max[0], r.duhamel_max[1]);
    Ok(())
}

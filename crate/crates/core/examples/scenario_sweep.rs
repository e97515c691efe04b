//! Several experiments from one sweep file, run on a thread pool with results in input order.

use sync_lab::experiments::{load_sweep_str, run_sweep};

const SWEEP: &str = r#"{"scenarios": [
    {"experiment": "simulate", "seed": 1, "n": 4, "inertia_m": 0.1, "coupling_kappa": 1.0, "horizon": 5},
    {"experiment": "reconstruction", "seed": 2, "n": 3, "inertia_m": 0.2, "coupling_kappa": 1.0, "horizon": 1},
    {"experiment": "determinability", "seed": 3, "n": 2, "inertia_m": 1.0, "coupling_kappa": 1.0, "horizon": 5, "tol": 1e-10},
    {"experiment": "sync_certification", "seed": 4, "n": 2, "inertia_m": 0.01, "coupling_kappa": 1.0, "horizon": 200}
]}"#;

fn main() -> sync_lab::Result<()> {
    let rep = run_sweep(&load_sweep_str(SWEEP, &[])?, Some(4))?;
    for (j, child) in rep.children.iter().enumerate() {
        println!(
            "scenario {j}: {:<20} checks {:>3} failed {} ({:.2}s)",
            child.experiment,
            child.checks.len(),
            child.failed_checks().count(),
            child.wall_time_s
        );
    }
    println!("sweep verdict {}", rep.verdict);
    Ok(())
}

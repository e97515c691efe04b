//! Nonidentical oscillators against the identical-frequency limit, in normalized time κt.

use sync_lab::experiments::{load_config_str, run_identical_comparison};

fn main() -> sync_lab::Result<()> {
    for spread in [0.2, 0.05, 0.0125] {
        let cfg = load_config_str(
            &format!(r#"{{"seed": 5, "n": 6, "inertia_m": 0.0, "coupling_kappa": 2.0, "nu_spread": {spread}, "horizon": 30}}"#),
            &[],
        )?;
        let rep = run_identical_comparison(&cfg)?;
        println!(
            "D(ν) = {spread:<7} identical limit {} (majority {}) bound holds {}",
            rep.summary["identical_limit"], rep.summary["majority_size"], rep.verdict
        );
    }
    Ok(())
}

//! Synchronization certificate: smallness hypotheses, order-parameter bound, and phase lock.

use sync_lab::experiments::{load_config_str, run_sync_certification};

fn main() -> sync_lab::Result<()> {
    let base = r#"{"seed": 3, "n": 3, "inertia_m": 0.01, "coupling_kappa": 1.0, "horizon": 200}"#;
    for (label, overrides) in [("default", vec![]), ("outside regime", vec!["knobs.smallness.c=0.001".to_string()])] {
        let cfg = load_config_str(base, &overrides)?;
        let rep = run_sync_certification(&cfg)?;
        println!("== {label}: verdict {}", rep.verdict);
        for key in ["case", "r_final", "r_lower_bound", "within_demonstrated_regime"] {
            println!("  {key:<28} {}", rep.summary[key]);
        }
        for c in &rep.checks {
            println!("  {:<5} {} (margin {:.3e})", if c.pass { "ok" } else { "FAIL" }, c.name, c.margin);
        }
        for n in &rep.notes {
            println!("  note: {n}");
        }
    }
    Ok(())
}

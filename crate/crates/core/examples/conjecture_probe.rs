//! Informational probe of the limiting order parameter outside the proven regime.

use sync_lab::experiments::{load_config_str, probe_conjecture_r};

fn main() -> sync_lab::Result<()> {
    for m in [0.01, 0.5, 2.0] {
        let cfg = load_config_str(
            &format!(r#"{{"seed": 8, "n": 5, "inertia_m": {m}, "coupling_kappa": 1.0, "nu_spread": 0.3, "horizon": 150}}"#),
            &[],
        )?;
        let rep = probe_conjecture_r(&cfg)?;
        println!("m = {m:<5} non-binding {} summary {}", rep.non_binding, serde_json::Value::Object(rep.summary));
    }
    Ok(())
}

//! Majority cluster: ξ-criterion on a subset, confinement after t₁ while an outlier drifts.

use sync_lab::experiments::{load_config_str, run_cluster_experiment};

const CONFIG: &str = r#"{
    "n": 5,
    "inertia_m": 0.02,
    "coupling_kappa": 1.0,
    "nat_freq": [0.1, -0.05, 0.0, 0.05, -0.1],
    "init": {"mode": "explicit", "theta": [0.0, 0.4, 0.8, 1.0, 2.8], "omega": [0.05, -0.05, 0.0, 0.0, 0.0]},
    "horizon": 100,
    "knobs": {"cluster": {"indices": [0, 1, 2, 3], "lambda": 0.8, "ell": 1.5, "eta": 5.0, "t1": 0.1}}
}"#;

fn main() -> sync_lab::Result<()> {
    let rep = run_cluster_experiment(&load_config_str(CONFIG, &[])?)?;
    println!("{}", serde_json::to_string_pretty(&rep.summary["cluster"]).unwrap());
    for c in &rep.checks {
        println!("{:<5} {}", if c.pass { "ok" } else { "FAIL" }, c.name);
    }
    println!("verdict {}", rep.verdict);
    Ok(())
}

//! Higher derivatives: Taylor jets of both systems and the n-th order bounds at a few times.

use sync_lab::integrate::taylor_jet;
use sync_lab::tikhonov::derivative_bound_suite;
use sync_lab::{PhaseState, SystemParams};

fn main() -> sync_lab::Result<()> {
    let params = SystemParams::new(0.05, 1.0, vec![0.2, -0.1, 0.0])?;
    let init = PhaseState::initial(vec![0.1, -0.3, 0.5], vec![0.3, 0.0, -0.2]);

    let jet = taylor_jet(&params, &init, 5)?;
    for (k, c) in jet.coeffs.iter().enumerate() {
        println!("θ^({k})(0) = {c:.5?}");
    }

    for c in derivative_bound_suite(&params, &init, 5, &[0.5, 1.0, 2.0], 1e-10)? {
        println!("{:<28} points {} worst margin {:.3e}", c.name, c.len(), c.worst_margin());
    }
    Ok(())
}

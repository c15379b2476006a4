//! Analytic gradients of a pair's collision time against central
//! differences, including grad_V t = t grad_X t.

use ihse::jacobian_lab::{check_collision_time_gradients, random_colliding_pair, DEFAULT_STEP};
use ihse::{PairIndex, Tolerances};

fn main() -> ihse::Result<()> {
    let tol = Tolerances::default();
    for idx in 0..5 {
        let cfg = random_colliding_pair(9, idx, 2);
        let check = check_collision_time_gradients(&cfg, PairIndex::new(0, 1), &tol, DEFAULT_STEP)?;
        println!(
            "t = {:.6}  grad_x = {:.6?}  max error {:.1e}  identity {:.1e}",
            check.time, check.analytic_x, check.max_error, check.identity_residual
        );
    }
    Ok(())
}

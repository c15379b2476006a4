//! Finite-difference flow Jacobians of random single-collision
//! configurations against the analytic product of factors.

use ihse::jacobian_lab::{verify_flow_jacobian, DEFAULT_STEP};
use ihse::sampling::{random_single_collision, sample_rng, TctSampleSpec};
use ihse::ModelParams;

fn main() -> ihse::Result<()> {
    let params = ModelParams::new(0.5, 2)?;
    let tau = 2.0;
    println!("{:>3} {:>2} {:>10} {:>16} {:>16} {:>10}", "idx", "N", "kind", "analytic", "fd", "residual");
    for idx in 0..12u64 {
        let n = 2 + (idx % 3) as usize;
        let spec = TctSampleSpec::new(n, tau);
        let Some(cfg) = random_single_collision(&mut sample_rng(42, idx), &spec, &params) else {
            continue;
        };
        let rep = verify_flow_jacobian(&cfg, tau, &params, DEFAULT_STEP)?;
        println!(
            "{idx:>3} {n:>2} {:>10} {:>16.12} {:>16.12} {:>10.2e}",
            format!("{:?}", rep.kind.expect("collision")),
            rep.analytic_det.unwrap_or(f64::NAN),
            rep.fd_det,
            rep.residual.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

//! A head-on pair above the emission threshold: classify, flow across the
//! collision and print the Jacobian factors.

use ihse::tct::{analytic_flow_jacobian_det, classify_tct_domain, tct_flow};
use ihse::{Configuration, ModelParams};

fn main() -> ihse::Result<()> {
    let params = ModelParams::new(0.5, 2)?;
    let cfg = Configuration::new(2, &[vec![0.0, 0.0], vec![2.0, 0.0]], &[vec![1.0, 0.0], vec![-1.0, 0.0]])?;

    println!("class over [0, 1]: {:?}", classify_tct_domain(&cfg, 1.0, &params));
    let res = tct_flow(&cfg, 1.0, &params)?;
    let rec = res.collision_record.expect("one collision");
    println!("collision of {} at t = {} ({:?})", rec.pair, rec.t_c, rec.outcome.kind);
    for k in 0..2 {
        println!("  particle {}: x = {:?}, v = {:?}", k + 1, res.final_state.position(k), res.final_state.velocity(k));
    }
    let jac = analytic_flow_jacobian_det(&cfg, 1.0, &params)?;
    println!("det = {:.12} = {:.12} x {:.12}", jac.det, jac.prefactor, jac.det_n);
    Ok(())
}

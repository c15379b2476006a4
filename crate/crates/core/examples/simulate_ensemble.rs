//! Event-driven run of a converging five-particle cluster, with the
//! collision-count bound and energy ledger checked afterwards.

use ihse::sampling::{random_converging_configuration, sample_rng};
use ihse::simulator::{check_collision_bounds, simulate, SimOptions};
use ihse::ModelParams;

fn main() -> ihse::Result<()> {
    let params = ModelParams::new(0.1, 2)?;
    let cfg = random_converging_configuration(&mut sample_rng(2024, 0), 5, 2, 4.0, 0.5, 0.5).expect("ensemble");
    let report = simulate(&cfg, 20.0, &params, &SimOptions::default())?;
    for e in &report.events {
        println!(
            "t = {:8.5}  pair {}  {:<9}  KE {:.6} -> {:.6}",
            e.time,
            e.pair,
            format!("{:?}", e.kind),
            e.ke_before,
            e.ke_after
        );
    }
    let bounds = check_collision_bounds(&report, &params, &cfg);
    println!(
        "{} elastic, {} inelastic (bound {:?}), min gap {:.9}, ledger error {:.1e}",
        report.n_elastic, report.n_inelastic, bounds.inelastic_bound, report.min_separation, bounds.energy_ledger_error
    );
    Ok(())
}

//! A small phase-space ball carried through two emissions shrinks by the
//! product of the per-collision factors.

use ihse::measure_mc::ensemble_volume_evolution;
use ihse::sampling::double_inelastic_chain;
use ihse::ModelParams;

fn main() -> ihse::Result<()> {
    let params = ModelParams::new(0.1, 2)?;
    let cfg = double_inelastic_chain(&params)?;
    let vol = ensemble_volume_evolution(&cfg, 1e-5, 4.0, &params)?;
    for e in &vol.events {
        println!(
            "t = {:.6} pair {} |dv|^2 = {:.6} factor {:.10}",
            e.time, e.pair, e.relative_speed_sq, e.factor
        );
    }
    println!("predicted {:.10}", vol.predicted);
    println!("measured  {:.10} (signed {:.10})", vol.measured, vol.signed_det);
    Ok(())
}

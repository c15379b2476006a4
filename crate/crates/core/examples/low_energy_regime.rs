//! With total kinetic energy below two quanta, no run emits twice.

use ihse::sampling::{random_converging_configuration, sample_rng};
use ihse::simulator::{is_low_energy, simulate, SimOptions};
use ihse::system::kinetic_energy;
use ihse::ModelParams;

fn main() -> ihse::Result<()> {
    let mut histogram = [0usize; 3];
    for idx in 0..300u64 {
        let cfg = random_converging_configuration(&mut sample_rng(5, idx), 4, 2, 4.0, 0.5, 0.5).expect("ensemble");
        let eps0 = 0.51 * kinetic_energy(&cfg);
        let params = ModelParams::new(eps0, 2)?;
        assert!(is_low_energy(&cfg, &params));
        let rep = simulate(&cfg, 20.0, &params, &SimOptions::default())?;
        histogram[rep.n_inelastic.min(2)] += 1;
    }
    println!("runs with 0 / 1 / 2+ emissions: {histogram:?}");
    Ok(())
}

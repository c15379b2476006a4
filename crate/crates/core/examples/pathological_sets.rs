//! Monte Carlo measures of the near-double-contact set (quadratic in delta)
//! and of the near-threshold set (linear in mu).

use ihse::measure_mc::{estimate_pathological_measure, loglog_slope, PathologicalSetSpec};
use ihse::ModelParams;

fn main() -> ihse::Result<()> {
    let params = ModelParams::new(0.05, 2)?;
    let samples = 200_000;

    let deltas = [0.1, 0.05, 0.025];
    let mut e = Vec::new();
    for &delta in &deltas {
        let est = estimate_pathological_measure(&PathologicalSetSpec::e(3, delta, 2.0, 1.0, params), samples, 1)?;
        println!("E  delta = {delta:<6} |E| = {:9.4} +- {:.4}  ({} hits)", est.volume, est.ci95, est.hits);
        e.push(est.volume);
    }
    println!("   slope in delta: {:.3}", loglog_slope(&deltas, &e));

    let mus = [0.5, 0.25, 0.125];
    let mut p = Vec::new();
    for &mu in &mus {
        let est = estimate_pathological_measure(&PathologicalSetSpec::p(3, 0.4, mu, 2.0, 1.0, params), samples, 2)?;
        println!("P  mu = {mu:<6}    |P| = {:9.4} +- {:.4}  ({} hits)", est.volume, est.ci95, est.hits);
        p.push(est.volume);
    }
    println!("   slope in mu: {:.3}", loglog_slope(&mus, &p));
    Ok(())
}

//! Acceptance suite. Each criterion prints one `[PASS]` or `[FAIL]` line
//! with its measured metrics and runtime; the process fails if any criterion
//! fails. Run with `cargo test --release --test acceptance` for timings that
//! reflect the budgets.

use std::time::{Duration, Instant};

use ihse::jacobian_lab::{self, SamplingMode, TensorLemmaCase};
use ihse::measure_mc::{self, PathologicalSetSpec};
use ihse::sampling::{self, TctSampleSpec};
use ihse::scattering::{self, CollisionKind};
use ihse::simulator::{self, SimOptions};
use ihse::system::{conserved_quantities, kinetic_energy};
use ihse::{Configuration, Error, ModelParams, PairIndex};
use rand::Rng;
use rayon::prelude::*;

struct Verdict {
    pass: bool,
    metrics: String,
}

fn verdict(pass: bool, metrics: String) -> Verdict {
    Verdict { pass, metrics }
}

fn max(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, f64::max)
}

fn ke(vs: &[&[f64]]) -> f64 {
    0.5 * vs.iter().flat_map(|v| v.iter()).map(|x| x * x).sum::<f64>()
}

fn collision_law_ledger() -> Verdict {
    const SAMPLES: u64 = 100_000;
    let eps0 = 0.5;
    let mut lines = Vec::new();
    let mut pass = true;
    for dim in [2, 3] {
        let params = ModelParams::new(eps0, dim).unwrap();
        let errs: Vec<(f64, f64)> = (0..SAMPLES)
            .into_par_iter()
            .filter_map(|i| jacobian_lab::random_scattering_sample(1, i, &params, SamplingMode::Mixed))
            .map(|s| {
                let out = scattering::scatter(&s.v_i, &s.v_j, &s.omega, &params).unwrap();
                let p = max((0..dim).map(|k| ((s.v_i[k] + s.v_j[k]) - (out.v_i_post[k] + out.v_j_post[k])).abs()));
                let loss = ke(&[&s.v_i, &s.v_j]) - ke(&[&out.v_i_post, &out.v_j_post]);
                let expected = match out.kind {
                    CollisionKind::Inelastic => eps0,
                    CollisionKind::Elastic => 0.0,
                };
                (p, (loss - expected).abs())
            })
            .collect();
        let p = max(errs.iter().map(|e| e.0));
        let e = max(errs.iter().map(|e| e.1));
        pass &= errs.len() as u64 >= SAMPLES * 99 / 100 && p <= 1e-12 && e <= 1e-12;
        lines.push(format!("d={dim}: n={} momentum={p:.2e} energy={e:.2e}", errs.len()));
    }
    verdict(pass, lines.join("; "))
}

fn elastic_involution() -> Verdict {
    const SAMPLES: u64 = 100_000;
    let mut lines = Vec::new();
    let mut pass = true;
    for dim in [2, 3] {
        let params = ModelParams::elastic(dim);
        let errs: Vec<f64> = (0..SAMPLES)
            .into_par_iter()
            .filter_map(|i| jacobian_lab::random_scattering_sample(2, i, &params, SamplingMode::ElasticOnly))
            .map(|s| {
                let (a, b) = scattering::elastic_law(&s.v_i, &s.v_j, &s.omega);
                let (a2, b2) = scattering::elastic_law(&a, &b, &s.omega);
                max(a2.iter().zip(&s.v_i).chain(b2.iter().zip(&s.v_j)).map(|(x, y)| (x - y).abs()))
            })
            .collect();
        let e = max(errs.iter().copied());
        pass &= errs.len() as u64 >= SAMPLES * 99 / 100 && e <= 1e-12;
        lines.push(format!("d={dim}: n={} max_err={e:.2e}", errs.len()));
    }
    verdict(pass, lines.join("; "))
}

fn planar_scattering_measure() -> Verdict {
    let params = ModelParams::new(0.5, 2).unwrap();
    let outcomes = jacobian_lab::verify_scattering_measure_with(
        10_000,
        &params,
        3,
        SamplingMode::InelasticOnly,
        jacobian_lab::DEFAULT_STEP,
    );
    let reports: Vec<_> = outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect();
    let unit = max(reports.iter().map(|r| (r.fd_det.abs() - 1.0).abs()));
    let analytic = max(reports.iter().map(|r| r.analytic_det.map_or(f64::INFINITY, |a| (a - r.fd_det).abs())));
    let pass = reports.len() == outcomes.len() && unit <= 1e-6 && analytic <= 1e-8;
    verdict(
        pass,
        format!(
            "n={}/{} max||det|-1|={unit:.2e} max|det(2A)-fd|={analytic:.2e}",
            reports.len(),
            outcomes.len()
        ),
    )
}

fn tensor_lemma() -> Verdict {
    const CASES: u64 = 10_000;
    let run = |bound: f64, seed: u64| -> (f64, f64) {
        let diffs: Vec<(f64, f64)> = (0..CASES)
            .map(|i| {
                let case = TensorLemmaCase::random(&mut sampling::sample_rng(seed, i), bound);
                let (f, d) = jacobian_lab::tensor_sum_det(&case);
                ((f - d).abs(), (f - d).abs() / case.scale())
            })
            .collect();
        (max(diffs.iter().map(|d| d.0)), max(diffs.iter().map(|d| d.1)))
    };
    let (abs_unit, _) = run(1.0, 4);
    let (abs_wide, scaled_wide) = run(10.0, 5);
    verdict(
        abs_unit <= 1e-12 && scaled_wide <= 1e-12,
        format!("entries in [-1,1]: max_abs={abs_unit:.2e}; entries in [-10,10]: max_scaled={scaled_wide:.2e} (abs {abs_wide:.2e})"),
    )
}

fn tct_flow_jacobian() -> Verdict {
    let params = ModelParams::new(0.5, 2).unwrap();
    let tau = 2.0;
    let results: Vec<_> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let n = 2 + (i % 3) as usize;
            let mut spec = TctSampleSpec::new(n, tau);
            spec.kind = Some(if i % 2 == 0 {
                CollisionKind::Elastic
            } else {
                CollisionKind::Inelastic
            });
            let cfg = sampling::random_single_collision(&mut sampling::sample_rng(6, i), &spec, &params)
                .ok_or(Error::NoCollision("generator".into()))?;
            jacobian_lab::verify_flow_jacobian(&cfg, tau, &params, jacobian_lab::DEFAULT_STEP)
        })
        .collect();
    let ok: Vec<_> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let residual = max(ok.iter().map(|r| r.residual.unwrap_or(f64::INFINITY)));
    let elastic = max(ok
        .iter()
        .filter(|r| r.kind == Some(CollisionKind::Elastic))
        .map(|r| (r.fd_det.abs() - 1.0).abs()));
    let inelastic = max(ok.iter().filter(|r| r.kind == Some(CollisionKind::Inelastic)).map(|r| {
        let s2 = r.relative_speed_sq.unwrap_or(f64::NAN);
        let expected = (1.0 - 4.0 * params.epsilon0 / s2).sqrt();
        let dev = (r.fd_det.abs() - expected).abs();
        if dev.is_nan() {
            f64::INFINITY
        } else {
            dev
        }
    }));
    let n_elastic = ok.iter().filter(|r| r.kind == Some(CollisionKind::Elastic)).count();
    let pass = ok.len() == results.len() && n_elastic > 0 && n_elastic < ok.len() && residual <= 1e-5 && elastic <= 1e-6 && inelastic <= 1e-5;
    verdict(
        pass,
        format!(
            "n={}/{} (elastic {n_elastic}) max_rel_residual={residual:.2e} elastic_dev={elastic:.2e} inelastic_dev={inelastic:.2e}",
            ok.len(),
            results.len()
        ),
    )
}

fn collision_time_gradients() -> Verdict {
    let params = ModelParams::new(0.5, 2).unwrap();
    let checks: Vec<_> = (0..100u64)
        .map(|i| {
            let dim = 2 + (i % 2) as usize;
            let cfg = jacobian_lab::random_colliding_pair(7, i, dim);
            jacobian_lab::check_collision_time_gradients(&cfg, PairIndex::new(0, 1), &params.tolerances, jacobian_lab::DEFAULT_STEP)
        })
        .collect();
    let ok: Vec<_> = checks.iter().filter_map(|c| c.as_ref().ok()).collect();
    let grad = max(ok.iter().map(|c| c.max_error));
    let ident = max(ok.iter().map(|c| c.identity_residual));
    verdict(
        ok.len() == checks.len() && grad <= 1e-6 && ident <= 1e-6,
        format!("n={}/{} max_grad_err={grad:.2e} max_identity_err={ident:.2e}", ok.len(), checks.len()),
    )
}

fn spherical_map() -> Verdict {
    let eps0 = 0.5;
    let dets: Vec<_> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::sample_rng(8, i);
            let rho3 = 4.0 * eps0 + 0.1 + rng.random_range(0.0..4.0);
            let dir = sampling::unit_vector(&mut rng, 3);
            let r = f64::cbrt(rho3);
            let w = [r * dir[0], r * dir[1], r * dir[2]];
            jacobian_lab::spherical_map_fd_det(w, eps0, jacobian_lab::DEFAULT_STEP)
        })
        .collect();
    let ok: Vec<f64> = dets.iter().filter_map(|d| d.as_ref().ok().copied()).collect();
    let dev = max(ok.iter().map(|d| (d.abs() - 1.0).abs()));
    verdict(
        ok.len() == dets.len() && dev <= 1e-6,
        format!("n={}/{} max||det|-1|={dev:.2e}", ok.len(), dets.len()),
    )
}

/// Dense random ensemble for the simulator criteria.
fn ensemble(seed: u64, index: u64, n: usize, r1: f64, r2: f64) -> Configuration {
    let mut rng = sampling::sample_rng(seed, index);
    sampling::random_interior_configuration(&mut rng, n, 2, r1, r2, 1_000_000).expect("interior ensemble")
}

fn simulator_invariants() -> Verdict {
    let eps0 = 0.1;
    let params = ModelParams::new(eps0, 2).unwrap();
    let t_end = 20.0;
    let runs: Vec<_> = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let n = 3 + (i % 3) as usize;
            let mut rng = sampling::sample_rng(9, i);
            let cfg = sampling::random_converging_configuration(&mut rng, n, 2, 4.0, 0.5, 0.5).unwrap();
            let rep = simulator::simulate(&cfg, t_end, &params, &SimOptions::default()).unwrap();
            let bounds = simulator::check_collision_bounds(&rep, &params, &cfg);
            (cfg, rep, bounds)
        })
        .collect();
    let mut min_sep = f64::INFINITY;
    let mut drop_err: f64 = 0.0;
    let mut ledger: f64 = 0.0;
    let mut momentum: f64 = 0.0;
    let mut bound_violations = 0;
    let mut halted = 0;
    let mut counts: Vec<usize> = Vec::new();
    for (cfg, rep, b) in &runs {
        min_sep = min_sep.min(rep.min_separation);
        for e in &rep.events {
            let expected = match e.kind {
                CollisionKind::Inelastic => eps0,
                CollisionKind::Elastic => 0.0,
            };
            drop_err = drop_err.max((e.ke_before - e.ke_after - expected).abs());
        }
        let ke_final = kinetic_energy(&rep.final_state);
        ledger = ledger.max((ke_final - (kinetic_energy(cfg) - rep.n_inelastic as f64 * eps0)).abs());
        ledger = ledger.max(b.energy_ledger_error);
        let p0 = conserved_quantities(cfg).momentum;
        let p1 = conserved_quantities(&rep.final_state).momentum;
        momentum = momentum.max(max(p0.iter().zip(&p1).map(|(a, b)| (a - b).abs())));
        if !b.inelastic_ok {
            bound_violations += 1;
        }
        if rep.halted.is_some() {
            halted += 1;
        }
        counts.push(rep.events.len());
    }
    counts.sort_unstable();
    let median = counts[counts.len() / 2];
    let pass = min_sep >= 1.0 - 1e-9 && drop_err <= 1e-9 && ledger <= 1e-9 && momentum <= 1e-9 && bound_violations == 0 && median >= 3;
    verdict(
        pass,
        format!(
            "runs=500 median_events={median} min_sep={min_sep:.12} max_drop_err={drop_err:.2e} ledger_err={ledger:.2e} momentum_err={momentum:.2e} bound_violations={bound_violations} halted={halted}"
        ),
    )
}

fn low_energy_regime() -> Verdict {
    let runs: Vec<(usize, bool)> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let n = 2 + (i % 4) as usize;
            let cfg = ensemble(10, i, n, 2.6, 3.0);
            // Choose eps0 so the total energy sits just below 2 eps0.
            let mut rng = sampling::sample_rng(11, i);
            let eps0 = kinetic_energy(&cfg) / (2.0 * rng.random_range(0.6..0.999));
            let params = ModelParams::new(eps0, 2).unwrap();
            assert!(simulator::is_low_energy(&cfg, &params));
            let rep = simulator::simulate(&cfg, 20.0, &params, &SimOptions::default()).unwrap();
            (rep.n_inelastic, rep.halted.is_some())
        })
        .collect();
    let violations = runs.iter().filter(|r| r.0 > 1).count();
    let emitted = runs.iter().filter(|r| r.0 == 1).count();
    verdict(
        violations == 0 && emitted > 0,
        format!("runs=1000 violations={violations} runs_with_one_emission={emitted}"),
    )
}

fn pathological_scalings() -> Verdict {
    const SAMPLES: u64 = 1_000_000;
    let params = ModelParams::new(0.05, 2).unwrap();
    let deltas = [0.1, 0.05, 0.025];
    let e: Vec<f64> = deltas
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let spec = PathologicalSetSpec::e(3, d, 2.0, 1.0, params);
            measure_mc::estimate_pathological_measure(&spec, SAMPLES, 20 + k as u64).unwrap().volume
        })
        .collect();
    let mus = [0.5, 0.25, 0.125];
    let p: Vec<f64> = mus
        .iter()
        .enumerate()
        .map(|(k, &mu)| {
            let spec = PathologicalSetSpec::p(3, 0.4, mu, 2.0, 1.0, params);
            measure_mc::estimate_pathological_measure(&spec, SAMPLES, 30 + k as u64).unwrap().volume
        })
        .collect();
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ");
    let se = measure_mc::loglog_slope(&deltas, &e);
    let sp = measure_mc::loglog_slope(&mus, &p);
    verdict(
        (se - 2.0).abs() <= 0.3 && (sp - 1.0).abs() <= 0.2,
        format!("E slope in delta={se:.3} (volumes {}); P slope in mu={sp:.3} (volumes {})", list(&e), list(&p)),
    )
}

fn composed_volume_evolution() -> Verdict {
    let params = ModelParams::new(0.1, 2).unwrap();
    let chain = sampling::double_inelastic_chain(&params).unwrap();
    let vol = measure_mc::ensemble_volume_evolution(&chain, 1e-5, 4.0, &params).unwrap();
    let chain_ok = vol.events.len() == 2
        && vol.events.iter().all(|e| e.kind == CollisionKind::Inelastic)
        && (vol.measured - vol.predicted).abs() <= 1e-4;

    let elastic = ModelParams::elastic(2);
    let trials: Vec<_> = (0..200u64)
        .into_par_iter()
        .filter_map(|i| {
            let n = 3 + (i % 3) as usize;
            let cfg = ensemble(12, i, n, 2.6, 2.0);
            // Elastic multi-collision flows amplify perturbations, so the
            // stencil is tighter than for the chain to keep truncation small.
            match measure_mc::ensemble_volume_evolution(&cfg, 1e-6, 5.0, &elastic) {
                Ok(v) if v.events.len() >= 2 => Some(Ok(v.measured)),
                Ok(_) => None,
                Err(Error::BranchCrossing { .. }) | Err(Error::Unsupported(_)) => None,
                Err(e) => Some(Err(e)),
            }
        })
        .collect();
    let errors = trials.iter().filter(|t| t.is_err()).count();
    let dev = max(trials.iter().filter_map(|t| t.as_ref().ok()).map(|m| (m - 1.0).abs()));
    let used = trials.len() - errors;
    verdict(
        chain_ok && errors == 0 && used >= 20 && dev <= 1e-6,
        format!(
            "chain predicted={:.8} measured={:.8} diff={:.2e}; elastic multi-collision n={used} max|det-1|={dev:.2e}",
            vol.predicted,
            vol.measured,
            (vol.measured - vol.predicted).abs()
        ),
    )
}

/// Name, check and runtime budget.
type Criterion = (&'static str, fn() -> Verdict, Duration);

fn main() {
    let criteria: [Criterion; 11] = [
        ("collision-law ledger", collision_law_ledger, Duration::from_secs(5)),
        ("elastic involution", elastic_involution, Duration::from_secs(5)),
        ("planar scattering preserves measure", planar_scattering_measure, Duration::from_secs(30)),
        ("tensor-sum determinant identity", tensor_lemma, Duration::from_secs(1)),
        ("single-collision flow Jacobian", tct_flow_jacobian, Duration::from_secs(120)),
        ("collision-time gradients", collision_time_gradients, Duration::from_secs(5)),
        ("spherical emission map volume", spherical_map, Duration::from_secs(10)),
        ("simulator invariants", simulator_invariants, Duration::from_secs(60)),
        ("low-energy regime", low_energy_regime, Duration::from_secs(30)),
        ("pathological set scalings", pathological_scalings, Duration::from_secs(300)),
        ("composed volume evolution", composed_volume_evolution, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let over = if elapsed > *budget { " over budget" } else { "" };
        println!(
            "[{tag}] {:>2} {name}: {} ({:.2}s of {}s{over})",
            k + 1,
            v.metrics,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !v.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Cross-checks of the closed-form pieces against independent brute-force
//! computations.

use ihse::collision::{first_collision, pair_collision_time};
use ihse::sampling::{random_interior_configuration, sample_rng};
use ihse::system::free_transport;
use ihse::{Configuration, ModelParams, PairIndex, Tolerances};

/// First time the pair gap reaches 1, by scanning then bisecting.
fn brute_force_contact(cfg: &Configuration, pair: PairIndex, horizon: f64) -> Option<f64> {
    let gap = |t: f64| free_transport(cfg, t).separation(pair) - 1.0;
    let steps = 20_000;
    let dt = horizon / steps as f64;
    let mut lo = 0.0;
    for k in 1..=steps {
        let hi = k as f64 * dt;
        if gap(hi) <= 0.0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if gap(m) > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        lo = hi;
    }
    None
}

#[test]
fn collision_time_matches_bisection() {
    let tol = Tolerances::default();
    let mut compared = 0;
    for seed in 0..300 {
        let cfg = random_interior_configuration(&mut sample_rng(seed, 0), 2, 2, 3.0, 2.0, 10_000).unwrap();
        let pair = PairIndex::new(0, 1);
        let exact = pair_collision_time(&cfg, pair, &tol);
        let brute = brute_force_contact(&cfg, pair, 10.0);
        match (exact, brute) {
            (Some(t), Some(b)) if t <= 10.0 => {
                assert!((t - b).abs() < 1e-9, "seed {seed}: {t} vs {b}");
                compared += 1;
            }
            (Some(t), None) => assert!(t > 10.0 - 1e-3, "seed {seed}: missed contact at {t}"),
            (None, Some(b)) => panic!("seed {seed}: bisection found contact at {b}"),
            _ => {}
        }
    }
    assert!(compared > 30, "only {compared} colliding samples");
}

#[test]
fn first_collision_is_the_earliest_pair_contact() {
    let tol = Tolerances::default();
    for seed in 0..100 {
        let cfg = random_interior_configuration(&mut sample_rng(seed, 1), 4, 2, 3.0, 2.0, 100_000).unwrap();
        let brute = PairIndex::all(4)
            .filter_map(|p| brute_force_contact(&cfg, p, 8.0).map(|t| (t, p)))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match (first_collision(&cfg, 8.0, &tol), brute) {
            (Some(fc), Some((t, p))) => {
                assert!((fc.time - t).abs() < 1e-9);
                assert!(fc.pair == p || !fc.unique);
            }
            (None, None) => {}
            (a, b) => panic!("seed {seed}: {a:?} vs {b:?}"),
        }
    }
}

#[test]
fn energy_loss_per_emission_is_the_quantum() {
    // Head-on pair with |v_i - v_j|^2 = 4: the emission keeps 4 - 4 eps0.
    for eps0 in [0.1, 0.25, 0.5, 0.9] {
        let params = ModelParams::new(eps0, 2).unwrap();
        let cfg = Configuration::new(2, &[vec![0.0, 0.0], vec![2.0, 0.0]], &[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let rep = ihse::simulator::simulate(&cfg, 2.0, &params, &Default::default()).unwrap();
        assert_eq!(rep.n_inelastic, 1);
        let post = rep.final_state.velocity(1)[0] - rep.final_state.velocity(0)[0];
        assert!((post * post - (4.0 - 4.0 * eps0)).abs() < 1e-12);
    }
}

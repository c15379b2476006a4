//! Deterministic random sampling.
//!
//! Every sample draws from its own ChaCha stream keyed by `(seed, index)`, so
//! serial and parallel runs see identical inputs regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scattering::{scatter, CollisionKind};
use crate::system::{Configuration, ModelParams};
use crate::tct::{classify_tct_domain, TctDomainClass};
use crate::vecops;

/// Generator for sample `index` of the run keyed by `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = vecops::norm(&g);
        if n > 1e-12 {
            return vecops::scale(&g, 1.0 / n);
        }
    }
}

/// Uniform point in the Euclidean ball of the given radius.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let dir = unit_vector(rng, dim);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    vecops::scale(&dir, r)
}

/// Positions uniform in the stacked ball `|X| <= r1`, rejected until every
/// pair is separated beyond contact, and velocities uniform in `|V| <= r2`.
pub fn random_interior_configuration<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    dim: usize,
    r1: f64,
    r2: f64,
    max_tries: usize,
) -> Option<Configuration> {
    for _ in 0..max_tries {
        let x = uniform_in_ball(rng, n * dim, r1);
        let v = uniform_in_ball(rng, n * dim, r2);
        let cfg = Configuration::from_flat(dim, x, v).ok()?;
        if cfg.min_separation() > 1.0 + 1e-6 {
            return Some(cfg);
        }
    }
    None
}

/// Interior configuration whose particles drift towards the origin, so the
/// flow sees several collisions before the cluster disperses. Positions are
/// drawn as in [`random_interior_configuration`] and each velocity component
/// is `-pull * x + U(-jitter, jitter)`.
pub fn random_converging_configuration<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    dim: usize,
    r1: f64,
    pull: f64,
    jitter: f64,
) -> Option<Configuration> {
    let base = random_interior_configuration(rng, n, dim, r1, 1.0, 1_000_000)?;
    let x = base.positions().to_vec();
    let v = x.iter().map(|xi| -pull * xi + rng.random_range(-jitter..=jitter)).collect();
    Configuration::from_flat(dim, x, v).ok()
}

/// Shape of a generated single-collision configuration.
#[derive(Debug, Clone, Copy)]
pub struct TctSampleSpec {
    pub n_particles: usize,
    pub tau: f64,
    /// Requested collision law; `None` picks either with equal odds.
    pub kind: Option<CollisionKind>,
    /// Minimum `|cos|` between relative velocity and contact normal.
    pub min_normal_cos: f64,
    /// Minimum relative distance of `|v_i - v_j|^2` from `4 eps0`.
    pub critical_margin: f64,
}

impl TctSampleSpec {
    pub fn new(n_particles: usize, tau: f64) -> Self {
        TctSampleSpec {
            n_particles,
            tau,
            kind: None,
            min_normal_cos: 0.2,
            critical_margin: 0.2,
        }
    }
}

/// Builds a configuration whose flow on `[0, tau]` has exactly one collision,
/// between particles 1 and 2, at a time in `[tau/4, 3 tau/4]`. Spectator
/// particles are parked far away. Returns `None` after too many rejections.
pub fn random_single_collision<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &TctSampleSpec,
    params: &ModelParams,
) -> Option<Configuration> {
    let d = params.dim;
    let tau = spec.tau;
    for _ in 0..1000 {
        let kind = spec.kind.unwrap_or(if rng.random::<bool>() {
            CollisionKind::Inelastic
        } else {
            CollisionKind::Elastic
        });
        let threshold = params.threshold();
        let rel_sq = match kind {
            CollisionKind::Inelastic if threshold.is_finite() => {
                threshold * rng.random_range(1.0 + spec.critical_margin..4.0)
            }
            CollisionKind::Inelastic => continue,
            CollisionKind::Elastic if threshold.is_finite() => {
                threshold * rng.random_range(0.1..1.0 - spec.critical_margin)
            }
            CollisionKind::Elastic => rng.random_range(0.5..4.0),
        };
        let s = rel_sq.sqrt();
        let omega = unit_vector(rng, d);
        // w = v_j - v_i with w.omega = -s * cos < 0.
        let cos = rng.random_range(spec.min_normal_cos..1.0);
        let mut tangent = unit_vector(rng, d);
        let proj = vecops::dot(&tangent, &omega);
        tangent = tangent.iter().zip(&omega).map(|(t, o)| t - proj * o).collect();
        let tn = vecops::norm(&tangent);
        if tn < 1e-6 {
            continue;
        }
        let sin = (1.0 - cos * cos).sqrt();
        let w: Vec<f64> = (0..d)
            .map(|k| s * (-cos * omega[k] + sin * tangent[k] / tn))
            .collect();
        let m = uniform_in_ball(rng, d, 0.5);
        let v_i: Vec<f64> = (0..d).map(|k| m[k] - 0.5 * w[k]).collect();
        let v_j: Vec<f64> = (0..d).map(|k| m[k] + 0.5 * w[k]).collect();
        let t_c = rng.random_range(0.25 * tau..0.75 * tau);
        let x_i: Vec<f64> = (0..d).map(|k| -t_c * v_i[k]).collect();
        let x_j: Vec<f64> = (0..d).map(|k| omega[k] - t_c * v_j[k]).collect();

        let mut xs = vec![x_i, x_j];
        let mut vs = vec![v_i, v_j];
        let reach = 4.0 + 2.0 * tau * (s + 1.0);
        for k in 2..spec.n_particles {
            let dir = unit_vector(rng, d);
            let r = reach * (k as f64);
            xs.push(vecops::scale(&dir, r));
            vs.push(uniform_in_ball(rng, d, 0.3));
        }
        let cfg = Configuration::new(d, &xs, &vs).ok()?;
        if cfg.min_separation() <= 1.0 + 1e-6 {
            continue;
        }
        if let TctDomainClass::SingleCollision { kind: got, .. } = classify_tct_domain(&cfg, tau, params) {
            if got == kind {
                return Some(cfg);
            }
        }
    }
    None
}

/// Three planar particles where particle 2 strikes particle 1 and then
/// particle 3, both times above the emission threshold.
///
/// Particle 2 starts at the origin moving along `x` with speed 2 and meets
/// particle 1 off-centre. Particle 3 is then placed one time unit down the
/// post-collisional path of particle 2, at unit distance from it and 25
/// degrees off that path, so the second contact happens exactly there.
pub fn double_inelastic_chain(params: &ModelParams) -> Result<Configuration> {
    let x2 = [0.0, 0.0];
    let v2 = [2.0, 0.0];
    let x1 = [2.5, 0.4];
    let v1 = [0.0, 0.0];
    // |x2 + t v2 - x1| = 1 at the first contact.
    let t1 = (2.5 - (1.0f64 - 0.16).sqrt()) / 2.0;
    let c2 = [x2[0] + t1 * v2[0], x2[1] + t1 * v2[1]];
    let omega = vecops::sub(&x1, &c2);
    let out = scatter(&v2, &v1, &omega, params)?;
    if out.kind != CollisionKind::Inelastic {
        return Err(Error::InvalidParameter("eps0 too large for the first emission".into()));
    }
    let u = out.v_i_post;
    let speed = vecops::norm(&u);
    let (cos, sin) = (25f64.to_radians().cos(), 25f64.to_radians().sin());
    let dir = [u[0] / speed, u[1] / speed];
    let off = [cos * dir[0] - sin * dir[1], sin * dir[0] + cos * dir[1]];
    let x3 = [c2[0] + u[0] + off[0], c2[1] + u[1] + off[1]];
    Configuration::new(
        2,
        &[x1.to_vec(), x2.to_vec(), x3.to_vec()],
        &[v1.to_vec(), v2.to_vec(), vec![0.0, 0.0]],
    )
}

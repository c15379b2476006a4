//! Pair collision prediction.
//!
//! For a pair `(i, j)` write `r = x_i - x_j`, `w = v_i - v_j`. Contact happens
//! when `|r + t w|^2 = 1`, i.e. `a t^2 + 2 b t + c = 0` with `a = |w|^2`,
//! `b = r.w`, `c = |r|^2 - 1`. The reduced discriminant `b^2 - a c` is the
//! grazing discriminant; it vanishes exactly for tangential contact.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::{Configuration, PairIndex, Tolerances};
use crate::vecops;

/// Roots at or below this time are ignored for a pair that has just scattered.
pub const RECENT_PAIR_MIN_TIME: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionPrediction {
    pub pair: PairIndex,
    #[serde(rename = "delta")]
    pub discriminant: f64,
    #[serde(rename = "tau")]
    pub time: Option<f64>,
    pub grazing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstCollision {
    pub time: f64,
    pub pair: PairIndex,
    /// `false` when another pair collides within the simultaneity tolerance.
    pub unique: bool,
}

/// A tangential contact (`|Delta| <= grazing tolerance`) of an approaching pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrazingContact {
    pub pair: PairIndex,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionGradients {
    pub pair: PairIndex,
    pub time: f64,
    /// Unit contact direction `(x_j - x_i)/|x_j - x_i|` at the collision time.
    pub omega: Vec<f64>,
    /// Gradient of the collision time with respect to the stacked positions.
    pub grad_x: Vec<f64>,
    /// Gradient of the collision time with respect to the stacked velocities.
    pub grad_v: Vec<f64>,
}

struct Quadratic {
    a: f64,
    b: f64,
    c: f64,
}

impl Quadratic {
    fn of(cfg: &Configuration, pair: PairIndex) -> Self {
        let r = vecops::sub(cfg.position(pair.i), cfg.position(pair.j));
        let w = vecops::sub(cfg.velocity(pair.i), cfg.velocity(pair.j));
        Quadratic {
            a: vecops::norm_sq(&w),
            b: vecops::dot(&r, &w),
            c: vecops::norm_sq(&r) - 1.0,
        }
    }

    fn discriminant(&self) -> f64 {
        self.b * self.b - self.a * self.c
    }

    /// Entry root of an approaching pair. `q = -b + sqrt(Delta)` has no
    /// cancellation for `b < 0`; the roots are `q / a` and `c / q`.
    fn entry_root(&self, disc: f64) -> Option<f64> {
        if self.b >= 0.0 || self.a == 0.0 {
            return None;
        }
        let q = -self.b + disc.sqrt();
        let t = self.c / q;
        (t > 0.0).then_some(t)
    }
}

pub fn grazing_discriminant(cfg: &Configuration, pair: PairIndex) -> f64 {
    Quadratic::of(cfg, pair).discriminant()
}

/// Smallest positive contact time of the pair, or `None` when the pair is
/// receding, grazing, at rest relative to each other, or already in contact.
pub fn pair_collision_time(cfg: &Configuration, pair: PairIndex, tol: &Tolerances) -> Option<f64> {
    let q = Quadratic::of(cfg, pair);
    let disc = q.discriminant();
    if disc <= tol.grazing {
        return None;
    }
    q.entry_root(disc)
}

pub fn predict_pair(cfg: &Configuration, pair: PairIndex, tol: &Tolerances) -> CollisionPrediction {
    let q = Quadratic::of(cfg, pair);
    let disc = q.discriminant();
    CollisionPrediction {
        pair,
        discriminant: disc,
        time: if disc <= tol.grazing {
            None
        } else {
            q.entry_root(disc)
        },
        grazing: disc.abs() <= tol.grazing,
    }
}

pub fn predict_all(cfg: &Configuration, tol: &Tolerances) -> Vec<CollisionPrediction> {
    PairIndex::all(cfg.n_particles())
        .map(|p| predict_pair(cfg, p, tol))
        .collect()
}

/// Earliest collision within `horizon`, if any.
pub fn first_collision(cfg: &Configuration, horizon: f64, tol: &Tolerances) -> Option<FirstCollision> {
    first_collision_excluding(cfg, horizon, tol, None)
}

/// As [`first_collision`], ignoring roots `<= RECENT_PAIR_MIN_TIME` of the
/// pair that has just scattered.
pub fn first_collision_excluding(
    cfg: &Configuration,
    horizon: f64,
    tol: &Tolerances,
    recent: Option<PairIndex>,
) -> Option<FirstCollision> {
    let times: Vec<(PairIndex, f64)> = PairIndex::all(cfg.n_particles())
        .filter_map(|p| {
            let t = pair_collision_time(cfg, p, tol)?;
            if Some(p) == recent && t <= RECENT_PAIR_MIN_TIME {
                return None;
            }
            Some((p, t))
        })
        .collect();
    // Lexicographic pair order breaks exact ties.
    let (pair, time) = times
        .iter()
        .copied()
        .fold(None::<(PairIndex, f64)>, |best, (p, t)| match best {
            Some((_, bt)) if bt <= t => best,
            _ => Some((p, t)),
        })?;
    if time > horizon {
        return None;
    }
    let unique = !times
        .iter()
        .any(|&(p, t)| p != pair && (t - time).abs() <= tol.simultaneity);
    Some(FirstCollision { time, pair, unique })
}

/// Earliest tangential contact within `horizon`.
pub fn first_grazing_contact(
    cfg: &Configuration,
    horizon: f64,
    tol: &Tolerances,
) -> Option<GrazingContact> {
    PairIndex::all(cfg.n_particles())
        .filter_map(|pair| {
            let q = Quadratic::of(cfg, pair);
            if q.discriminant().abs() > tol.grazing || q.b >= 0.0 || q.a == 0.0 {
                return None;
            }
            let time = -q.b / q.a;
            (time > 0.0 && time <= horizon).then_some(GrazingContact { pair, time })
        })
        .min_by(|a, b| a.time.total_cmp(&b.time))
}

/// Unit vector from particle `i` to particle `j`.
pub fn contact_normal(cfg: &Configuration, pair: PairIndex) -> Vec<f64> {
    let d = vecops::sub(cfg.position(pair.j), cfg.position(pair.i));
    let n = vecops::norm(&d);
    vecops::scale(&d, 1.0 / n)
}

/// Analytic gradients of the pair's collision time.
///
/// `grad_{x_i} t = -omega / ((v_i - v_j).omega)`, `grad_{x_j} t = -grad_{x_i} t`,
/// zero for every other particle, and `grad_V t = t * grad_X t`. Both
/// expressions are unchanged under `omega -> -omega`.
pub fn collision_time_gradients(
    cfg: &Configuration,
    pair: PairIndex,
    tol: &Tolerances,
) -> Result<CollisionGradients> {
    let q = Quadratic::of(cfg, pair);
    if q.discriminant().abs() <= tol.grazing {
        return Err(Error::Grazing(pair.to_string()));
    }
    let time = pair_collision_time(cfg, pair, tol).ok_or_else(|| Error::NoCollision(pair.to_string()))?;
    let d = cfg.dim();
    let xi = cfg.position(pair.i);
    let xj = cfg.position(pair.j);
    let vi = cfg.velocity(pair.i);
    let vj = cfg.velocity(pair.j);
    let sep: Vec<f64> = (0..d)
        .map(|k| (xj[k] + time * vj[k]) - (xi[k] + time * vi[k]))
        .collect();
    let omega = vecops::scale(&sep, 1.0 / vecops::norm(&sep));
    let rel = vecops::sub(vi, vj);
    let denom = vecops::dot(&rel, &omega);
    if denom.abs() <= f64::EPSILON * vecops::norm(&rel) {
        return Err(Error::Grazing(pair.to_string()));
    }
    let n = cfg.n_particles();
    let mut grad_x = vec![0.0; n * d];
    for k in 0..d {
        grad_x[pair.i * d + k] = -omega[k] / denom;
        grad_x[pair.j * d + k] = omega[k] / denom;
    }
    let grad_v = vecops::scale(&grad_x, time);
    Ok(CollisionGradients {
        pair,
        time,
        omega,
        grad_x,
        grad_v,
    })
}

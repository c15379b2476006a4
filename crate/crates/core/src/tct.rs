//! Transport, collision, transport: the flow on `[0, tau]` with at most one
//! collision.
//!
//! A configuration either flows freely, or meets exactly one well-separated,
//! non-grazing, non-critical collision and nothing else, or is excluded with
//! the first reason found. The explicit flow and its Jacobian determinant are
//! only defined on the first two classes.

use serde::Serialize;

use crate::collision::{self, CollisionGradients};
use crate::error::{Error, Result};
use crate::scattering::{scatter, CollisionKind, EmissionJacobian, ScatteringOutcome};
use crate::system::{free_transport, validate_configuration, Configuration, DomainStatus, ModelParams, PairIndex};
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// Some pair touches tangentially, or the colliding pair has a vanishing
    /// discriminant.
    Grazing,
    /// Another pair also collides within the horizon.
    Simultaneous,
    /// The colliding pair sits in the band around `|v_i - v_j|^2 = 4 eps0`.
    CriticalEnergy,
    /// A second collision follows the first one before `tau`.
    Recollision,
    /// The initial configuration is on or inside the contact boundary.
    BoundaryStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TctDomainClass {
    Free,
    SingleCollision {
        pair: PairIndex,
        t_c: f64,
        kind: CollisionKind,
    },
    Excluded {
        reason: ExclusionReason,
    },
}

impl TctDomainClass {
    pub fn is_excluded(&self) -> bool {
        matches!(self, TctDomainClass::Excluded { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionRecord {
    pub pair: PairIndex,
    pub t_c: f64,
    pub outcome: ScatteringOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TctResult {
    #[serde(rename = "final")]
    pub final_state: Configuration,
    pub classification: TctDomainClass,
    pub collision_record: Option<CollisionRecord>,
}

/// The two factors of the flow Jacobian determinant and their product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowJacobian {
    pub det: f64,
    /// `1 + grad_X t_c . (V - V')`.
    pub prefactor: f64,
    /// Determinant of the velocity scattering map.
    pub det_n: f64,
}

struct Analysis {
    class: TctDomainClass,
    record: Option<CollisionRecord>,
}

fn excluded(reason: ExclusionReason) -> Analysis {
    Analysis {
        class: TctDomainClass::Excluded { reason },
        record: None,
    }
}

fn analyze(cfg: &Configuration, tau: f64, params: &ModelParams) -> Analysis {
    use ExclusionReason::*;
    let tol = &params.tolerances;
    match validate_configuration(cfg, tol.contact) {
        Ok(DomainStatus::Interior) => {}
        _ => return excluded(BoundaryStart),
    }
    let grazing = collision::first_grazing_contact(cfg, tau, tol);
    let Some(first) = collision::first_collision(cfg, tau, tol) else {
        return match grazing {
            Some(_) => excluded(Grazing),
            None => Analysis {
                class: TctDomainClass::Free,
                record: None,
            },
        };
    };
    if grazing.is_some() {
        return excluded(Grazing);
    }
    if !first.unique {
        return excluded(Simultaneous);
    }
    let pair = first.pair;
    // Every other pair must stay clear for the whole horizon in free flight.
    let other_hit = PairIndex::all(cfg.n_particles())
        .filter(|&p| p != pair)
        .any(|p| collision::pair_collision_time(cfg, p, tol).is_some_and(|t| t <= tau));
    if other_hit {
        return excluded(Simultaneous);
    }

    let t_c = first.time;
    let contact = free_transport(cfg, t_c);
    let omega = collision::contact_normal(&contact, pair);
    let outcome = match scatter(contact.velocity(pair.i), contact.velocity(pair.j), &omega, params) {
        Ok(o) => o,
        Err(Error::CriticalEnergy { .. }) => return excluded(CriticalEnergy),
        Err(_) => return excluded(Grazing),
    };

    let mut post = contact;
    post.set_velocity(pair.i, &outcome.v_i_post);
    post.set_velocity(pair.j, &outcome.v_j_post);
    let remaining = tau - t_c;
    if collision::first_collision_excluding(&post, remaining, tol, Some(pair)).is_some() {
        return excluded(Recollision);
    }
    if collision::first_grazing_contact(&post, remaining, tol).is_some() {
        return excluded(Grazing);
    }
    Analysis {
        class: TctDomainClass::SingleCollision {
            pair,
            t_c,
            kind: outcome.kind,
        },
        record: Some(CollisionRecord { pair, t_c, outcome }),
    }
}

/// Classifies `cfg` against the free and single-collision domains on
/// `[0, tau]`. Exclusion is a classification, never an error.
pub fn classify_tct_domain(cfg: &Configuration, tau: f64, params: &ModelParams) -> TctDomainClass {
    analyze(cfg, tau, params).class
}

/// Runs the flow to time `tau`.
///
/// With a collision at `t_c` the final state is
/// `(X + t_c V + (tau - t_c) V', V')`.
pub fn tct_flow(cfg: &Configuration, tau: f64, params: &ModelParams) -> Result<TctResult> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be positive and finite, got {tau}")));
    }
    let Analysis { class, record } = analyze(cfg, tau, params);
    let final_state = match (&class, &record) {
        (TctDomainClass::Excluded { reason }, _) => return Err(Error::ExcludedConfiguration(*reason)),
        (TctDomainClass::Free, _) => free_transport(cfg, tau),
        (TctDomainClass::SingleCollision { .. }, Some(rec)) => {
            let mut mid = free_transport(cfg, rec.t_c);
            mid.set_velocity(rec.pair.i, &rec.outcome.v_i_post);
            mid.set_velocity(rec.pair.j, &rec.outcome.v_j_post);
            free_transport(&mid, tau - rec.t_c)
        }
        (TctDomainClass::SingleCollision { .. }, None) => unreachable!("single collision always records"),
    };
    Ok(TctResult {
        final_state,
        classification: class,
        collision_record: record,
    })
}

/// `1 + grad_X t_c . (V - V')` from the analytic collision-time gradient.
pub fn flow_prefactor(grads: &CollisionGradients, pre: &Configuration, rec: &CollisionRecord) -> f64 {
    let d = pre.dim();
    let pair = rec.pair;
    let dv_i = vecops::sub(pre.velocity(pair.i), &rec.outcome.v_i_post);
    let dv_j = vecops::sub(pre.velocity(pair.j), &rec.outcome.v_j_post);
    let gi = &grads.grad_x[pair.i * d..(pair.i + 1) * d];
    let gj = &grads.grad_x[pair.j * d..(pair.j + 1) * d];
    1.0 + vecops::dot(gi, &dv_i) + vecops::dot(gj, &dv_j)
}

/// Closed-form flow Jacobian determinant with both factors exposed.
///
/// Free flow gives 1. An elastic collision gives prefactor `-1` and
/// `det N = -1` (a reflection). An inelastic collision in the plane gives
/// prefactor `-sqrt(1 - 4 eps0 / s^2)` and `det N = -1`. Inelastic collisions
/// in other dimensions have no closed form here.
pub fn analytic_flow_jacobian_det(cfg: &Configuration, tau: f64, params: &ModelParams) -> Result<FlowJacobian> {
    let Analysis { class, record } = analyze(cfg, tau, params);
    let rec = match (class, record) {
        (TctDomainClass::Excluded { reason }, _) => return Err(Error::ExcludedConfiguration(reason)),
        (TctDomainClass::Free, _) => {
            return Ok(FlowJacobian {
                det: 1.0,
                prefactor: 1.0,
                det_n: 1.0,
            })
        }
        (_, Some(rec)) => rec,
        (_, None) => unreachable!("single collision always records"),
    };
    let pair = rec.pair;
    let grads = collision::collision_time_gradients(cfg, pair, &params.tolerances)?;
    let prefactor = flow_prefactor(&grads, cfg, &rec);
    let det_n = match rec.outcome.kind {
        CollisionKind::Elastic => -1.0,
        CollisionKind::Inelastic if cfg.dim() == 2 => {
            EmissionJacobian::new(cfg.velocity(pair.i), cfg.velocity(pair.j), &rec.outcome.omega, params.epsilon0)?
                .det_2a_2d()?
        }
        CollisionKind::Inelastic => {
            return Err(Error::Unsupported(format!(
                "closed-form inelastic flow Jacobian in dimension {}",
                cfg.dim()
            )))
        }
    };
    Ok(FlowJacobian {
        det: prefactor * det_n,
        prefactor,
        det_n,
    })
}

/// `-sqrt(1 - 4 eps0 / s^2)`, the inelastic prefactor as a function of the
/// pre-collisional relative speed squared.
pub fn inelastic_prefactor(rel_sq: f64, epsilon0: f64) -> f64 {
    -(1.0 - 4.0 * epsilon0 / rel_sq).sqrt()
}

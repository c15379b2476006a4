//! Event-driven flow with any number of collisions.
//!
//! The trajectory is advanced exactly from one collision to the next. A run
//! stops early, with the reason reported in the result rather than as an
//! error, when it meets a configuration the dynamics leaves undefined: two
//! collisions at once, a tangential contact, a relative speed on the emission
//! threshold, or more events than the caller allowed.

use serde::{Deserialize, Serialize};

use crate::collision::{self, FirstCollision};
use crate::error::{Error, Result};
use crate::scattering::{scatter, CollisionKind};
use crate::system::{
    conserved_quantities, free_transport, kinetic_energy, validate_configuration, Configuration, DomainStatus,
    ModelParams, PairIndex,
};
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    pub max_events: usize,
    /// Number of evenly spaced times in `(0, T]` at which the minimum pair
    /// separation is sampled in addition to every event.
    pub checkpoints: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            max_events: 1_000_000,
            checkpoints: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEvent {
    pub time: f64,
    pub pair: PairIndex,
    pub kind: CollisionKind,
    pub ke_before: f64,
    pub ke_after: f64,
    pub relative_speed_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathologyKind {
    Simultaneous,
    Grazing,
    CriticalEnergy,
    EventOverflow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pathology {
    pub reason: PathologyKind,
    pub time: f64,
    pub pairs: Vec<PairIndex>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub events: Vec<SimEvent>,
    /// State at `final_time`: `T` for a completed run, the halt time otherwise.
    #[serde(rename = "final")]
    pub final_state: Configuration,
    pub final_time: f64,
    pub n_elastic: usize,
    pub n_inelastic: usize,
    /// Minimum pair gap over all events and checkpoints.
    pub min_separation: f64,
    pub halted: Option<Pathology>,
    pub initial_kinetic_energy: f64,
    pub final_kinetic_energy: f64,
    pub max_events: usize,
}

impl SimReport {
    pub fn total_events(&self) -> usize {
        self.events.len()
    }
}

struct Checkpoints {
    times: Vec<f64>,
    next: usize,
    min_sep: f64,
}

impl Checkpoints {
    fn new(t_end: f64, count: usize, initial: &Configuration) -> Self {
        Checkpoints {
            times: (1..=count).map(|k| t_end * k as f64 / count as f64).collect(),
            next: 0,
            min_sep: initial.min_separation(),
        }
    }

    /// Records checkpoints in `(t0, t1]` while `state` (taken at `t0`) flies
    /// freely.
    fn sweep(&mut self, state: &Configuration, t0: f64, t1: f64) {
        while self.next < self.times.len() && self.times[self.next] <= t1 {
            let t = self.times[self.next];
            if t > t0 {
                self.observe(&free_transport(state, t - t0));
            }
            self.next += 1;
        }
    }

    fn observe(&mut self, cfg: &Configuration) {
        self.min_sep = self.min_sep.min(cfg.min_separation());
    }
}

/// Pairs other than `recent` that are touching and still approaching.
fn approaching_contacts(cfg: &Configuration, recent: PairIndex, contact_tol: f64) -> Vec<PairIndex> {
    PairIndex::all(cfg.n_particles())
        .filter(|&p| p != recent)
        .filter(|&p| {
            let r = vecops::sub(cfg.position(p.i), cfg.position(p.j));
            let w = vecops::sub(cfg.velocity(p.i), cfg.velocity(p.j));
            vecops::norm(&r) - 1.0 <= contact_tol && vecops::dot(&r, &w) < 0.0
        })
        .collect()
}

fn tied_pairs(cfg: &Configuration, first: &FirstCollision, params: &ModelParams, recent: Option<PairIndex>) -> Vec<PairIndex> {
    let tol = &params.tolerances;
    PairIndex::all(cfg.n_particles())
        .filter(|&p| {
            collision::pair_collision_time(cfg, p, tol).is_some_and(|t| {
                !(Some(p) == recent && t <= collision::RECENT_PAIR_MIN_TIME)
                    && (t - first.time).abs() <= tol.simultaneity
            })
        })
        .collect()
}

/// Runs the dynamics on `[0, t_end]`.
pub fn simulate(cfg: &Configuration, t_end: f64, params: &ModelParams, opts: &SimOptions) -> Result<SimReport> {
    params.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("end time must be positive and finite, got {t_end}")));
    }
    if cfg.dim() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            found: cfg.dim(),
        });
    }
    let tol = &params.tolerances;
    if validate_configuration(cfg, tol.contact)? != DomainStatus::Interior {
        return Err(Error::InvalidParameter("initial configuration is not in the interior of the phase space".into()));
    }

    let initial_ke = kinetic_energy(cfg);
    let mut state = cfg.clone();
    let mut t = 0.0;
    let mut recent: Option<PairIndex> = None;
    let mut events = Vec::new();
    let mut checkpoints = Checkpoints::new(t_end, opts.checkpoints, cfg);
    let mut halted = None;

    loop {
        let remaining = t_end - t;
        let next = collision::first_collision_excluding(&state, remaining, tol, recent);
        let horizon = next.map_or(remaining, |n| n.time);
        if let Some(g) = collision::first_grazing_contact(&state, horizon, tol) {
            checkpoints.sweep(&state, t, t + g.time);
            state = free_transport(&state, g.time);
            t += g.time;
            halted = Some(Pathology {
                reason: PathologyKind::Grazing,
                time: t,
                pairs: vec![g.pair],
            });
            break;
        }
        let Some(first) = next else {
            checkpoints.sweep(&state, t, t_end);
            state = free_transport(&state, remaining);
            t = t_end;
            break;
        };
        if !first.unique {
            halted = Some(Pathology {
                reason: PathologyKind::Simultaneous,
                time: t + first.time,
                pairs: tied_pairs(&state, &first, params, recent),
            });
            checkpoints.sweep(&state, t, t + first.time);
            state = free_transport(&state, first.time);
            t += first.time;
            break;
        }
        if events.len() >= opts.max_events {
            halted = Some(Pathology {
                reason: PathologyKind::EventOverflow,
                time: t,
                pairs: vec![],
            });
            break;
        }

        checkpoints.sweep(&state, t, t + first.time);
        state = free_transport(&state, first.time);
        t += first.time;
        checkpoints.observe(&state);

        let pair = first.pair;
        let omega = collision::contact_normal(&state, pair);
        let outcome = match scatter(state.velocity(pair.i), state.velocity(pair.j), &omega, params) {
            Ok(o) => o,
            Err(e) => {
                let reason = match e {
                    Error::CriticalEnergy { .. } => PathologyKind::CriticalEnergy,
                    _ => PathologyKind::Grazing,
                };
                halted = Some(Pathology {
                    reason,
                    time: t,
                    pairs: vec![pair],
                });
                break;
            }
        };
        let ke_before = kinetic_energy(&state);
        state.set_velocity(pair.i, &outcome.v_i_post);
        state.set_velocity(pair.j, &outcome.v_j_post);
        events.push(SimEvent {
            time: t,
            pair,
            kind: outcome.kind,
            ke_before,
            ke_after: kinetic_energy(&state),
            relative_speed_sq: outcome.relative_speed_sq,
        });
        recent = Some(pair);

        // A third sphere touching the pair at the same instant would be
        // missed by the root finder, which only reports future entries.
        let touching = approaching_contacts(&state, pair, tol.contact);
        if !touching.is_empty() {
            let mut pairs = vec![pair];
            pairs.extend(touching);
            halted = Some(Pathology {
                reason: PathologyKind::Simultaneous,
                time: t,
                pairs,
            });
            break;
        }
    }

    checkpoints.observe(&state);
    let n_inelastic = events.iter().filter(|e| e.kind == CollisionKind::Inelastic).count();
    Ok(SimReport {
        n_elastic: events.len() - n_inelastic,
        n_inelastic,
        min_separation: checkpoints.min_sep,
        halted,
        initial_kinetic_energy: initial_ke,
        final_kinetic_energy: kinetic_energy(&state),
        final_time: t,
        final_state: state,
        events,
        max_events: opts.max_events,
    })
}

/// Collision-count bounds checked against a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    /// `floor(KE_0 / eps0)`, absent for purely elastic dynamics.
    pub inelastic_bound: Option<usize>,
    pub n_inelastic: usize,
    pub inelastic_margin: Option<usize>,
    pub inelastic_ok: bool,
    pub total_events: usize,
    pub max_events: usize,
    pub events_margin: usize,
    /// The run finished without exhausting its event budget.
    pub finite_ok: bool,
    /// Largest `|KE_final - (KE_0 - n_inelastic eps0)|`.
    pub energy_ledger_error: f64,
    /// Largest momentum component drift.
    pub momentum_error: f64,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.inelastic_ok && self.finite_ok
    }
}

pub fn check_collision_bounds(report: &SimReport, params: &ModelParams, initial: &Configuration) -> BoundCheck {
    let ke0 = kinetic_energy(initial);
    let inelastic_bound = params
        .epsilon0
        .is_finite()
        .then(|| (ke0 / params.epsilon0).floor() as usize);
    let n_inelastic = report.n_inelastic;
    let inelastic_ok = inelastic_bound.is_none_or(|b| n_inelastic <= b);
    let loss = if n_inelastic > 0 {
        n_inelastic as f64 * params.epsilon0
    } else {
        0.0
    };
    let p0 = conserved_quantities(initial).momentum;
    let p1 = conserved_quantities(&report.final_state).momentum;
    let total_events = report.events.len();
    let overflow = matches!(
        report.halted,
        Some(Pathology {
            reason: PathologyKind::EventOverflow,
            ..
        })
    );
    BoundCheck {
        inelastic_bound,
        n_inelastic,
        inelastic_margin: inelastic_bound.map(|b| b.saturating_sub(n_inelastic)),
        inelastic_ok,
        total_events,
        max_events: report.max_events,
        events_margin: report.max_events.saturating_sub(total_events),
        finite_ok: !overflow && total_events <= report.max_events,
        energy_ledger_error: (report.final_kinetic_energy - (ke0 - loss)).abs(),
        momentum_error: p0.iter().zip(&p1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
    }
}

/// Total kinetic energy below `2 eps0`: at most one inelastic collision can
/// happen, since the first one leaves less than `eps0` in the whole system.
pub fn is_low_energy(cfg: &Configuration, params: &ModelParams) -> bool {
    kinetic_energy(cfg) < 2.0 * params.epsilon0
}

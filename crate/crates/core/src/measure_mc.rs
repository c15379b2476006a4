//! Monte Carlo measure of near-pathological initial data, and the local
//! phase-space volume change along multi-collision trajectories.
//!
//! Two families are estimated. `E` collects configurations where at least
//! two distinct pairs are nearly touching, the seed of simultaneous
//! collisions; its measure scales like `delta^2`. `P` collects
//! configurations with one nearly touching pair whose relative speed sits
//! just above the emission threshold, where the flow contracts volume
//! sharply; its measure scales like `delta * mu`.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobian_lab::{determinant, fd_jacobian_branched};
use crate::sampling::{sample_rng, uniform_in_ball};
use crate::scattering::CollisionKind;
use crate::simulator::{simulate, SimOptions};
use crate::system::{validate_configuration, Configuration, DomainStatus, ModelParams, PairIndex};
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    E,
    P,
}

/// Which description of the near-threshold velocity band to use for `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PBandForm {
    /// `2 sqrt(eps0) <= |v_i - v_j| <= 2 sqrt(eps0) (1 + (sqrt 2 - 1) mu)`.
    #[default]
    Definition,
    /// `4 eps0 <= |v_i - v_j|^2 <= 4 eps0 / (1 - mu)`.
    CutOff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathologicalSetSpec {
    pub family: Family,
    pub n_particles: usize,
    pub k: u32,
    pub delta: f64,
    pub mu: Option<f64>,
    pub r1: f64,
    pub r2: f64,
    pub params: ModelParams,
    pub band: PBandForm,
}

impl PathologicalSetSpec {
    pub fn e(n_particles: usize, delta: f64, r1: f64, r2: f64, params: ModelParams) -> Self {
        PathologicalSetSpec {
            family: Family::E,
            n_particles,
            k: 0,
            delta,
            mu: None,
            r1,
            r2,
            params,
            band: PBandForm::Definition,
        }
    }

    pub fn p(n_particles: usize, delta: f64, mu: f64, r1: f64, r2: f64, params: ModelParams) -> Self {
        PathologicalSetSpec {
            family: Family::P,
            mu: Some(mu),
            ..Self::e(n_particles, delta, r1, r2, params)
        }
    }

    /// Checks the hypotheses under which the measure bounds are stated:
    /// `delta <= 1`, `delta <= 2 / (3 sqrt(2) R2)` and `0 < mu <= 1/2`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        self.params.validate()?;
        if self.params.dim != 2 {
            return bad(format!("pathological-set estimates are planar, got d = {}", self.params.dim));
        }
        if self.n_particles < 2 {
            return bad("at least two particles are needed".into());
        }
        if !(self.r1 > 0.0 && self.r2 > 0.0 && self.r1.is_finite() && self.r2.is_finite()) {
            return bad(format!("radii must be positive, got R1 = {}, R2 = {}", self.r1, self.r2));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        let cap = 2.0 / (3.0 * SQRT_2 * self.r2);
        if self.delta > cap {
            return bad(format!("delta = {} exceeds 2/(3 sqrt(2) R2) = {cap}", self.delta));
        }
        match (self.family, self.mu) {
            (Family::P, None) => bad("family P needs mu".into()),
            (Family::P, Some(mu)) if !(mu > 0.0 && mu <= 0.5) => bad(format!("mu must lie in (0, 1/2], got {mu}")),
            (Family::P, _) if !self.params.epsilon0.is_finite() => bad("family P needs a finite eps0".into()),
            _ => Ok(()),
        }
    }

    /// Radius of the position ball, `R1 + k delta R2`.
    pub fn position_radius(&self) -> f64 {
        self.r1 + self.k as f64 * self.delta * self.r2
    }

    /// Lebesgue measure of the sampling domain.
    pub fn box_volume(&self) -> f64 {
        let n = self.n_particles * self.params.dim;
        ball_volume(n, self.position_radius()) * ball_volume(n, self.r2)
    }

    /// Exact membership test for an interior configuration.
    pub fn contains(&self, cfg: &Configuration) -> bool {
        let dr = self.delta * self.r2;
        match self.family {
            Family::E => {
                let reach = 1.0 + 1.5 * SQRT_2 * dr;
                PairIndex::all(cfg.n_particles())
                    .filter(|&p| cfg.separation(p) <= reach)
                    .nth(1)
                    .is_some()
            }
            Family::P => {
                let reach = 1.0 + SQRT_2 * dr;
                let mu = self.mu.unwrap_or(0.5);
                let eps0 = self.params.epsilon0;
                PairIndex::all(cfg.n_particles()).any(|p| {
                    cfg.separation(p) <= reach && {
                        let rel_sq = vecops::dist_sq(cfg.velocity(p.i), cfg.velocity(p.j));
                        match self.band {
                            PBandForm::Definition => {
                                let s = rel_sq.sqrt();
                                let lo = 2.0 * eps0.sqrt();
                                lo <= s && s <= lo * (1.0 + (SQRT_2 - 1.0) * mu)
                            }
                            PBandForm::CutOff => 4.0 * eps0 <= rel_sq && rel_sq <= 4.0 * eps0 / (1.0 - mu),
                        }
                    }
                })
            }
        }
    }
}

/// Volume of the Euclidean ball of radius `r` in `R^n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    // V_n = pi^(n/2) / Gamma(n/2 + 1), built up by the two-step recursion.
    let mut v = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut m = if n.is_multiple_of(2) { 0 } else { 1 };
    while m < n {
        m += 2;
        v *= 2.0 * PI / m as f64;
    }
    v * r.powi(n as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub spec: PathologicalSetSpec,
    pub n_samples: u64,
    pub hits: u64,
    pub fraction: f64,
    pub volume: f64,
    pub ci95: f64,
}

/// Hit-or-miss estimate of the measure of the set described by `spec`.
///
/// Positions are uniform in the stacked ball of radius `R1 + k delta R2` and
/// velocities in the stacked ball of radius `R2`. Samples outside the
/// interior of the phase space count as misses, so the estimate measures the
/// set intersected with the admissible configurations.
pub fn estimate_pathological_measure(spec: &PathologicalSetSpec, n_samples: u64, seed: u64) -> Result<MeasureEstimate> {
    spec.validate()?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let n = spec.n_particles;
    let d = spec.params.dim;
    let rx = spec.position_radius();
    let contact = spec.params.tolerances.contact;
    let hits = (0..n_samples)
        .into_par_iter()
        .filter(|&index| {
            let mut rng = sample_rng(seed, index);
            let x = uniform_in_ball(&mut rng, n * d, rx);
            let v = uniform_in_ball(&mut rng, n * d, spec.r2);
            let cfg = Configuration::from_flat(d, x, v).expect("sampled values are finite");
            matches!(validate_configuration(&cfg, contact), Ok(DomainStatus::Interior)) && spec.contains(&cfg)
        })
        .count() as u64;
    let p = hits as f64 / n_samples as f64;
    let box_volume = spec.box_volume();
    Ok(MeasureEstimate {
        spec: *spec,
        n_samples,
        hits,
        fraction: p,
        volume: p * box_volume,
        ci95: 1.96 * (p * (1.0 - p) / n_samples as f64).sqrt() * box_volume,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// One collision along the centre trajectory and its volume factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventFactor {
    pub time: f64,
    pub pair: PairIndex,
    pub kind: CollisionKind,
    pub relative_speed_sq: f64,
    /// `sqrt(1 - 4 eps0 / s^2)` for an emission, 1 for an elastic collision.
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeEvolution {
    pub predicted: f64,
    pub measured: f64,
    /// Signed finite-difference determinant.
    pub signed_det: f64,
    pub events: Vec<EventFactor>,
    pub step: f64,
}

type EventSignature = Vec<(PairIndex, CollisionKind)>;

fn flow_with_signature(dim: usize, tau: f64, params: &ModelParams) -> impl Fn(&[f64]) -> Result<(Vec<f64>, EventSignature)> + '_ {
    move |z| {
        let cfg = Configuration::from_phase_vector(dim, z)?;
        let rep = simulate(&cfg, tau, params, &SimOptions::default())?;
        if let Some(h) = rep.halted {
            return Err(Error::Unsupported(format!("trajectory halted: {:?}", h.reason)));
        }
        let sig = rep.events.iter().map(|e| (e.pair, e.kind)).collect();
        Ok((rep.final_state.phase_vector(), sig))
    }
}

/// Predicted and measured local volume factor of the flow over `[0, tau]`
/// around `center`.
///
/// The prediction multiplies the per-collision factors recorded along the
/// centre trajectory. The measurement is `|det|` of a central-difference
/// Jacobian of the whole flow with step `radius / 10`. Every stencil point,
/// and a deterministic set of points on the sphere of the given radius, must
/// reproduce the centre's sequence of colliding pairs and laws; otherwise
/// the call fails with [`Error::BranchCrossing`] and the caller should shrink
/// the radius.
pub fn ensemble_volume_evolution(
    center: &Configuration,
    radius: f64,
    tau: f64,
    params: &ModelParams,
) -> Result<VolumeEvolution> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let rep = simulate(center, tau, params, &SimOptions::default())?;
    if let Some(h) = &rep.halted {
        return Err(Error::Unsupported(format!("centre trajectory halted: {:?}", h.reason)));
    }
    let eps0 = params.epsilon0;
    let events: Vec<EventFactor> = rep
        .events
        .iter()
        .map(|e| EventFactor {
            time: e.time,
            pair: e.pair,
            kind: e.kind,
            relative_speed_sq: e.relative_speed_sq,
            factor: match e.kind {
                CollisionKind::Elastic => 1.0,
                CollisionKind::Inelastic => (1.0 - 4.0 * eps0 / e.relative_speed_sq).sqrt(),
            },
        })
        .collect();
    if center.dim() != 2 && events.iter().any(|e| e.kind == CollisionKind::Inelastic) {
        return Err(Error::Unsupported(format!(
            "volume factor of emitting collisions in dimension {}",
            center.dim()
        )));
    }
    let predicted = events.iter().map(|e| e.factor).product();

    let map = flow_with_signature(center.dim(), tau, params);
    let z0 = center.phase_vector();
    let signature: EventSignature = events.iter().map(|e| (e.pair, e.kind)).collect();
    let mut rng = sample_rng(0x5eed_ba11, z0.len() as u64);
    for probe in 0..2 * z0.len() {
        let dir = uniform_in_ball(&mut rng, z0.len(), 1.0);
        let scale = radius / vecops::norm(&dir).max(f64::MIN_POSITIVE);
        let z: Vec<f64> = z0.iter().zip(&dir).map(|(a, b)| a + scale * b).collect();
        match map(&z) {
            Ok((_, sig)) if sig == signature => {}
            _ => return Err(Error::BranchCrossing { coordinate: probe % z0.len() }),
        }
    }
    let step = radius / 10.0;
    let signed_det = determinant(&fd_jacobian_branched(&map, &z0, step)?);
    Ok(VolumeEvolution {
        predicted,
        measured: signed_det.abs(),
        signed_det,
        events,
        step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::double_inelastic_chain;

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(1, 1.0) - 2.0).abs() < 1e-15);
        assert!((ball_volume(2, 2.0) - 4.0 * PI).abs() < 1e-12);
        assert!((ball_volume(3, 1.0) - 4.0 / 3.0 * PI).abs() < 1e-12);
        assert!((ball_volume(6, 1.0) - PI.powi(3) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn hypotheses_are_enforced() {
        let params = ModelParams::new(0.05, 2).unwrap();
        assert!(PathologicalSetSpec::e(3, 0.5, 2.0, 1.0, params).validate().is_err());
        assert!(PathologicalSetSpec::e(3, 0.1, 2.0, 1.0, params).validate().is_ok());
        assert!(PathologicalSetSpec::p(3, 0.1, 0.6, 2.0, 1.0, params).validate().is_err());
        let mut no_mu = PathologicalSetSpec::p(3, 0.1, 0.5, 2.0, 1.0, params);
        no_mu.mu = None;
        assert!(no_mu.validate().is_err());
        let planar_only = PathologicalSetSpec::e(3, 0.1, 2.0, 1.0, ModelParams::new(0.05, 3).unwrap());
        assert!(planar_only.validate().is_err());
    }

    #[test]
    fn membership_predicates() {
        let params = ModelParams::new(0.25, 2).unwrap();
        let cfg = Configuration::new(
            2,
            &[vec![0.0, 0.0], vec![1.05, 0.0], vec![-1.05, 0.0]],
            &[vec![0.0, 0.0], vec![1.05, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        // Gaps 1.05, 1.05 and 2.1; the E band reaches 1 + 2.12 delta.
        assert!(PathologicalSetSpec::e(3, 0.1, 3.0, 1.0, params).contains(&cfg));
        assert!(!PathologicalSetSpec::e(3, 0.01, 3.0, 1.0, params).contains(&cfg));
        // Pair (1,2) has |v_i - v_j| = 1.05, just above 2 sqrt(eps0) = 1.
        assert!(PathologicalSetSpec::p(3, 0.1, 0.5, 3.0, 1.0, params).contains(&cfg));
        assert!(!PathologicalSetSpec::p(3, 0.1, 0.05, 3.0, 1.0, params).contains(&cfg));
        let mut cut = PathologicalSetSpec::p(3, 0.1, 0.1, 3.0, 1.0, params);
        cut.band = PBandForm::CutOff;
        assert!(cut.contains(&cfg));
    }

    #[test]
    fn tiny_delta_misses_everything() {
        let params = ModelParams::new(0.05, 2).unwrap();
        let est = estimate_pathological_measure(&PathologicalSetSpec::e(3, 1e-9, 2.0, 1.0, params), 20_000, 1).unwrap();
        assert_eq!(est.hits, 0);
        assert_eq!(est.volume, 0.0);
    }

    #[test]
    fn estimates_are_deterministic_and_ci_scales() {
        let params = ModelParams::new(0.05, 2).unwrap();
        let spec = PathologicalSetSpec::e(3, 0.1, 2.0, 1.0, params);
        let a = estimate_pathological_measure(&spec, 20_000, 9).unwrap();
        let b = estimate_pathological_measure(&spec, 20_000, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.hits > 0 && a.hits < a.n_samples);
        let p = a.fraction;
        let half = 1.96 * (p * (1.0 - p) / 40_000.0).sqrt() * spec.box_volume();
        assert!((a.ci95 / half - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn loglog_slope_recovers_power() {
        let xs = [0.1, 0.05, 0.025];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((loglog_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn free_centre_has_unit_volume_factor() {
        let params = ModelParams::new(0.75, 2).unwrap();
        let cfg = Configuration::new(2, &[vec![0.0, 0.0], vec![3.0, 0.0]], &[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let vol = ensemble_volume_evolution(&cfg, 1e-5, 3.0, &params).unwrap();
        assert_eq!(vol.predicted, 1.0);
        assert!((vol.measured - 1.0).abs() < 1e-8);
    }

    #[test]
    fn single_emission_halves_volume() {
        let params = ModelParams::new(0.75, 2).unwrap();
        let cfg = Configuration::new(2, &[vec![0.0, 0.0], vec![3.0, 0.3]], &[vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let vol = ensemble_volume_evolution(&cfg, 1e-5, 3.0, &params).unwrap();
        assert!((vol.predicted - 0.5).abs() < 1e-12);
        assert!((vol.measured - 0.5).abs() < 1e-5, "{vol:?}");
    }

    #[test]
    fn double_chain_composes_factors() {
        let params = ModelParams::new(0.1, 2).unwrap();
        let cfg = double_inelastic_chain(&params).unwrap();
        let vol = ensemble_volume_evolution(&cfg, 1e-5, 4.0, &params).unwrap();
        assert_eq!(vol.events.len(), 2);
        assert!(vol.events.iter().all(|e| e.kind == CollisionKind::Inelastic));
        assert!((vol.measured - vol.predicted).abs() < 1e-4, "{vol:?}");
        assert!(vol.measured <= 1.0 + 1e-6);
    }

    #[test]
    fn large_radius_is_rejected() {
        let params = ModelParams::new(0.75, 2).unwrap();
        let cfg = Configuration::new(2, &[vec![0.0, 0.0], vec![3.0, 0.3]], &[vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            ensemble_volume_evolution(&cfg, 2.0, 3.0, &params),
            Err(Error::BranchCrossing { .. })
        ));
    }
}

//! Finite-difference oracles for every determinant the crate claims in
//! closed form.
//!
//! Nothing here reuses the analytic formulas to produce the numerical side:
//! the maps are evaluated as black boxes and differentiated with central
//! differences, then compared against [`crate::tct`] and
//! [`crate::scattering`].

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collision::{self, pair_collision_time};
use crate::error::{Error, Result};
use crate::sampling::{sample_rng, uniform_in_ball, unit_vector};
use crate::scattering::{self, velocity_map, CollisionKind, EmissionJacobian};
use crate::system::{Configuration, ModelParams, PairIndex, Tolerances};
use crate::tct::{self, TctDomainClass};
use crate::vecops;

/// Default absolute finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-6;

/// Central-difference Jacobian of `map` at `point`; rows index outputs.
pub fn fd_jacobian<F>(map: F, point: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    fd_jacobian_branched(|z| Ok((map(z), ())), point, h)
}

/// Central-difference Jacobian of a piecewise map.
///
/// `map` returns its value together with a branch label. Every stencil point
/// must report the same label as the centre, otherwise the difference
/// quotient would straddle a discontinuity and the call fails with
/// [`Error::BranchCrossing`]. A stencil point where `map` fails counts as a
/// crossing too.
pub fn fd_jacobian_branched<F, B>(map: F, point: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<(Vec<f64>, B)>,
    B: PartialEq,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let (center, branch) = map(point)?;
    if center.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("map value"));
    }
    let n = point.len();
    let m = center.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut z = point.to_vec();
    for k in 0..n {
        let mut eval = |delta: f64| -> Result<Vec<f64>> {
            z[k] = point[k] + delta;
            let out = map(&z);
            z[k] = point[k];
            match out {
                Ok((value, b)) if b == branch => Ok(value),
                _ => Err(Error::BranchCrossing { coordinate: k }),
            }
        };
        let plus = eval(h)?;
        let minus = eval(-h)?;
        for r in 0..m {
            let q = (plus[r] - minus[r]) / (2.0 * h);
            if !q.is_finite() {
                return Err(Error::NonFinite("difference quotient"));
            }
            jac[(r, k)] = q;
        }
    }
    Ok(jac)
}

/// LU determinant of a square matrix.
pub fn determinant(m: &DMatrix<f64>) -> f64 {
    m.clone().determinant()
}

/// Determinant at step `h`, with the Richardson estimate `4/3 |D(h) - D(h/2)|`
/// of its truncation error.
fn det_with_estimate<F, B>(map: F, point: &[f64], h: f64) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> Result<(Vec<f64>, B)>,
    B: PartialEq,
{
    let coarse = determinant(&fd_jacobian_branched(&map, point, h)?);
    let fine = determinant(&fd_jacobian_branched(&map, point, 0.5 * h)?);
    Ok((coarse, 4.0 / 3.0 * (coarse - fine).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobianReport {
    pub analytic_det: Option<f64>,
    pub fd_det: f64,
    pub prefactor: Option<f64>,
    pub det_n_fd: Option<f64>,
    /// `|analytic - fd| / max(1, |fd|)`, present with the analytic value.
    pub residual: Option<f64>,
    pub step: f64,
    pub kind: Option<CollisionKind>,
    /// Squared pre-collisional relative speed of the colliding pair.
    pub relative_speed_sq: Option<f64>,
    pub truncation_estimate: f64,
}

fn residual(analytic: Option<f64>, fd: f64) -> Option<f64> {
    analytic.map(|a| (a - fd).abs() / fd.abs().max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensorLemmaCase {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub u: [f64; 2],
    pub omega: [f64; 2],
}

impl TensorLemmaCase {
    /// Entries uniform in `[-bound, bound]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> Self {
        let mut x = || rng.random_range(-bound..=bound);
        TensorLemmaCase {
            lambda: x(),
            mu: x(),
            nu: x(),
            u: [x(), x()],
            omega: [x(), x()],
        }
    }

    /// Sum of the magnitudes of the formula's terms, the natural scale for
    /// the rounding error of either side.
    pub fn scale(&self) -> f64 {
        let [ux, uy] = self.u;
        let [wx, wy] = self.omega;
        let cross = ux * wy - uy * wx;
        1.0 + (self.lambda * (ux * ux + uy * uy)).abs()
            + (self.mu * (ux * wx + uy * wy)).abs()
            + (self.nu * (wx * wx + wy * wy)).abs()
            + (self.lambda * self.nu * cross * cross).abs()
    }
}

/// `(formula, direct)` for `det(I + lambda u(x)u + mu u(x)omega + nu omega(x)omega)`.
pub fn tensor_sum_det(case: &TensorLemmaCase) -> (f64, f64) {
    let formula = scattering::tensor_sum_det_formula(case.lambda, case.mu, case.nu, case.u, case.omega);
    let (u, w) = (case.u, case.omega);
    let entry = |r: usize, c: usize| {
        let id = if r == c { 1.0 } else { 0.0 };
        id + case.lambda * u[r] * u[c] + case.mu * u[r] * w[c] + case.nu * w[r] * w[c]
    };
    let direct = entry(0, 0) * entry(1, 1) - entry(0, 1) * entry(1, 0);
    (formula, direct)
}

/// Which collision law the random scattering samples exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    Mixed,
    InelasticOnly,
    ElasticOnly,
}

/// One random pre-collisional scattering input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringSample {
    pub v_i: Vec<f64>,
    pub v_j: Vec<f64>,
    pub omega: Vec<f64>,
    pub kind: CollisionKind,
}

/// Draws sample `index`: the relative speed keeps at least 10% away from the
/// threshold and `|cos(w, omega)| >= 0.05`. Returns `None` only when an
/// inelastic sample is requested from purely elastic dynamics.
pub fn random_scattering_sample(
    seed: u64,
    index: u64,
    params: &ModelParams,
    mode: SamplingMode,
) -> Option<ScatteringSample> {
    let mut rng = sample_rng(seed, index);
    let d = params.dim;
    let threshold = params.threshold();
    let kind = match mode {
        SamplingMode::InelasticOnly => CollisionKind::Inelastic,
        SamplingMode::ElasticOnly => CollisionKind::Elastic,
        SamplingMode::Mixed if rng.random::<bool>() => CollisionKind::Inelastic,
        SamplingMode::Mixed => CollisionKind::Elastic,
    };
    let rel_sq = match (kind, threshold.is_finite()) {
        (CollisionKind::Inelastic, true) => threshold * rng.random_range(1.1..4.0),
        (CollisionKind::Inelastic, false) => return None,
        (CollisionKind::Elastic, true) => threshold * rng.random_range(0.05..0.9),
        (CollisionKind::Elastic, false) => rng.random_range(0.25..4.0),
    };
    let omega = unit_vector(&mut rng, d);
    let cos: f64 = rng.random_range(0.05..1.0);
    let (tangent, tn) = loop {
        let raw = unit_vector(&mut rng, d);
        let p = vecops::dot(&raw, &omega);
        let tangent: Vec<f64> = raw.iter().zip(&omega).map(|(r, o)| r - p * o).collect();
        let tn = vecops::norm(&tangent);
        if tn >= 1e-3 {
            break (tangent, tn);
        }
    };
    let s = rel_sq.sqrt();
    let sin = (1.0 - cos * cos).sqrt();
    let w: Vec<f64> = (0..d)
        .map(|k| s * (-cos * omega[k] + sin * tangent[k] / tn))
        .collect();
    let m = uniform_in_ball(&mut rng, d, 1.0);
    Some(ScatteringSample {
        v_i: (0..d).map(|k| m[k] - 0.5 * w[k]).collect(),
        v_j: (0..d).map(|k| m[k] + 0.5 * w[k]).collect(),
        omega,
        kind,
    })
}

/// Finite-difference determinant of `(v_i, v_j) -> (v_i', v_j')` at fixed
/// `omega`.
pub fn scattering_fd_det(v_i: &[f64], v_j: &[f64], omega: &[f64], epsilon0: f64, h: f64) -> Result<f64> {
    let z = [v_i, v_j].concat();
    let jac = fd_jacobian_branched(|z| Ok(velocity_map(z, omega, epsilon0)), &z, h)?;
    Ok(determinant(&jac))
}

/// Report for a single scattering input. In the plane the analytic value is
/// `det(2A)` from the emission Jacobian (or `-1` for the elastic
/// reflection); inelastic inputs in higher dimension carry no analytic value.
pub fn scattering_report(sample: &ScatteringSample, params: &ModelParams, h: f64) -> Result<JacobianReport> {
    let z = [sample.v_i.as_slice(), sample.v_j.as_slice()].concat();
    let omega = &sample.omega;
    let eps0 = params.epsilon0;
    let (fd_det, truncation_estimate) = det_with_estimate(|z| Ok(velocity_map(z, omega, eps0)), &z, h)?;
    let analytic_det = match sample.kind {
        CollisionKind::Elastic => Some(-1.0),
        CollisionKind::Inelastic if params.dim == 2 => {
            Some(EmissionJacobian::new(&sample.v_i, &sample.v_j, omega, eps0)?.det_2a_2d()?)
        }
        CollisionKind::Inelastic => None,
    };
    Ok(JacobianReport {
        analytic_det,
        fd_det,
        prefactor: None,
        det_n_fd: Some(fd_det),
        residual: residual(analytic_det, fd_det),
        step: h,
        kind: Some(sample.kind),
        relative_speed_sq: Some(vecops::dist_sq(&sample.v_i, &sample.v_j)),
        truncation_estimate,
    })
}

/// Per-sample outcome of a batch; failures do not abort the batch.
#[derive(Debug)]
pub struct SampleOutcome {
    pub index: u64,
    pub result: Result<JacobianReport>,
}

/// Scattering determinants for `samples` random inputs of either law.
pub fn verify_scattering_measure(samples: usize, params: &ModelParams, seed: u64) -> Vec<SampleOutcome> {
    verify_scattering_measure_with(samples, params, seed, SamplingMode::Mixed, DEFAULT_STEP)
}

/// As [`verify_scattering_measure`] with an explicit law selection and step.
/// Results are ordered by sample index regardless of thread scheduling.
pub fn verify_scattering_measure_with(
    samples: usize,
    params: &ModelParams,
    seed: u64,
    mode: SamplingMode,
    h: f64,
) -> Vec<SampleOutcome> {
    (0..samples as u64)
        .into_par_iter()
        .map(|index| {
            let result = random_scattering_sample(seed, index, params, mode)
                .ok_or_else(|| Error::InvalidParameter(format!("sample {index} could not be drawn")))
                .and_then(|s| scattering_report(&s, params, h));
            SampleOutcome { index, result }
        })
        .collect()
}

/// Branch label of a flow evaluation: the colliding pair and law, if any.
pub(crate) type FlowBranch = Option<(PairIndex, CollisionKind)>;

pub(crate) fn flow_branch(class: &TctDomainClass) -> FlowBranch {
    match class {
        TctDomainClass::SingleCollision { pair, kind, .. } => Some((*pair, *kind)),
        _ => None,
    }
}

/// The single-collision flow as a map of the stacked phase vector.
pub fn flow_map(dim: usize, tau: f64, params: &ModelParams) -> impl Fn(&[f64]) -> Result<(Vec<f64>, FlowBranch)> + '_ {
    move |z| {
        let cfg = Configuration::from_phase_vector(dim, z)?;
        let res = tct::tct_flow(&cfg, tau, params)?;
        Ok((res.final_state.phase_vector(), flow_branch(&res.classification)))
    }
}

/// Compares the closed-form flow determinant with finite differences of the
/// full `2dN`-dimensional flow map.
pub fn verify_flow_jacobian(cfg: &Configuration, tau: f64, params: &ModelParams, h: f64) -> Result<JacobianReport> {
    let res = tct::tct_flow(cfg, tau, params)?;
    let z = cfg.phase_vector();
    let (fd_det, truncation_estimate) = det_with_estimate(flow_map(cfg.dim(), tau, params), &z, h)?;
    let (analytic_det, prefactor) = match tct::analytic_flow_jacobian_det(cfg, tau, params) {
        Ok(j) => (Some(j.det), Some(j.prefactor)),
        Err(Error::Unsupported(_)) => (None, None),
        Err(e) => return Err(e),
    };
    let (det_n_fd, kind, relative_speed_sq) = match &res.collision_record {
        Some(rec) => {
            let contact = crate::system::free_transport(cfg, rec.t_c);
            let (vi, vj) = (contact.velocity(rec.pair.i), contact.velocity(rec.pair.j));
            let det_n = scattering_fd_det(vi, vj, &rec.outcome.omega, params.epsilon0, h)?;
            (Some(det_n), Some(rec.outcome.kind), Some(rec.outcome.relative_speed_sq))
        }
        None => (None, None, None),
    };
    Ok(JacobianReport {
        analytic_det,
        fd_det,
        prefactor,
        det_n_fd,
        residual: residual(analytic_det, fd_det),
        step: h,
        kind,
        relative_speed_sq,
        truncation_estimate,
    })
}

/// Analytic against finite-difference gradients of one pair's collision time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientCheck {
    pub pair: PairIndex,
    pub time: f64,
    pub analytic_x: Vec<f64>,
    pub analytic_v: Vec<f64>,
    pub fd_x: Vec<f64>,
    pub fd_v: Vec<f64>,
    /// Largest `|analytic - fd| / max(1, |analytic|)` over both gradients.
    pub max_error: f64,
    /// Largest deviation of the finite-difference `grad_V t - t grad_X t`.
    pub identity_residual: f64,
}

pub fn check_collision_time_gradients(
    cfg: &Configuration,
    pair: PairIndex,
    tol: &Tolerances,
    h: f64,
) -> Result<GradientCheck> {
    let grads = collision::collision_time_gradients(cfg, pair, tol)?;
    let dim = cfg.dim();
    let time_of = |z: &[f64]| -> Result<(Vec<f64>, ())> {
        let c = Configuration::from_phase_vector(dim, z)?;
        let t = pair_collision_time(&c, pair, tol).ok_or_else(|| Error::NoCollision(pair.to_string()))?;
        Ok((vec![t], ()))
    };
    let jac = fd_jacobian_branched(time_of, &cfg.phase_vector(), h)?;
    let half = cfg.positions().len();
    let fd_x: Vec<f64> = (0..half).map(|k| jac[(0, k)]).collect();
    let fd_v: Vec<f64> = (0..half).map(|k| jac[(0, half + k)]).collect();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1.0);
    let max_error = grads
        .grad_x
        .iter()
        .zip(&fd_x)
        .chain(grads.grad_v.iter().zip(&fd_v))
        .map(|(&a, &b)| rel(a, b))
        .fold(0.0, f64::max);
    let identity_residual = fd_v
        .iter()
        .zip(&fd_x)
        .map(|(&gv, &gx)| (gv - grads.time * gx).abs() / gv.abs().max(1.0))
        .fold(0.0, f64::max);
    Ok(GradientCheck {
        pair,
        time: grads.time,
        analytic_x: grads.grad_x,
        analytic_v: grads.grad_v,
        fd_x,
        fd_v,
        max_error,
        identity_residual,
    })
}

/// Random two-particle configuration colliding head-on-ish within time 3,
/// with `|cos|` between approach direction and contact normal at least 0.2.
pub fn random_colliding_pair(seed: u64, index: u64, dim: usize) -> Configuration {
    let mut rng = sample_rng(seed, index);
    loop {
        let omega = unit_vector(&mut rng, dim);
        let t = rng.random_range(0.5..3.0);
        let v_i = uniform_in_ball(&mut rng, dim, 1.5);
        let v_j = uniform_in_ball(&mut rng, dim, 1.5);
        let w = vecops::sub(&v_j, &v_i);
        let s = vecops::norm(&w);
        if s < 0.2 || vecops::dot(&w, &omega) > -0.2 * s {
            continue;
        }
        let x_i: Vec<f64> = (0..dim).map(|k| -t * v_i[k]).collect();
        let x_j: Vec<f64> = (0..dim).map(|k| omega[k] - t * v_j[k]).collect();
        let cfg = Configuration::new(dim, &[x_i, x_j], &[v_i, v_j]).expect("finite sample");
        if cfg.min_separation() > 1.0 + 1e-3 {
            return cfg;
        }
    }
}

/// Cartesian Jacobian determinant of the three-dimensional spherical
/// emission map, by finite differences.
pub fn spherical_map_fd_det(w: [f64; 3], epsilon0: f64, h: f64) -> Result<f64> {
    let map = |z: &[f64]| -> Result<(Vec<f64>, ())> {
        let out = scattering::spherical_emission_cartesian([z[0], z[1], z[2]], epsilon0)?;
        Ok((out.to_vec(), ()))
    };
    Ok(determinant(&fd_jacobian_branched(map, &w, h)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::free_transport;
    use proptest::prelude::*;

    #[test]
    fn identity_and_linear_maps() {
        let p = [0.3, -1.2, 2.0];
        let id = fd_jacobian(|z| z.to_vec(), &p, 1e-6).unwrap();
        assert!((id - DMatrix::identity(3, 3)).abs().max() < 1e-10);
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, -1.0, 0.0, 3.0, 4.0, 1.0, -2.0]);
        let lin = fd_jacobian(
            |z| (&a * DMatrix::from_column_slice(3, 1, z)).as_slice().to_vec(),
            &p,
            1e-6,
        )
        .unwrap();
        assert!((lin - &a).abs().max() < 1e-9);
    }

    #[test]
    fn free_transport_jacobian_is_unipotent() {
        let cfg = Configuration::new(2, &[vec![0.0, 0.0], vec![3.0, 1.0]], &[vec![0.5, 0.1], vec![-0.2, 0.3]]).unwrap();
        let t = 1.7;
        let jac = fd_jacobian(
            |z| free_transport(&Configuration::from_phase_vector(2, z).unwrap(), t).phase_vector(),
            &cfg.phase_vector(),
            1e-6,
        )
        .unwrap();
        let mut expected = DMatrix::identity(8, 8);
        for k in 0..4 {
            expected[(k, 4 + k)] = t;
        }
        assert!((&jac - expected).abs().max() < 1e-8);
        assert!((determinant(&jac) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn branch_crossing_is_detected() {
        let step = |z: &[f64]| -> Result<(Vec<f64>, bool)> { Ok((vec![z[0].abs()], z[0] > 0.0)) };
        let err = fd_jacobian_branched(step, &[1e-8], 1e-6).unwrap_err();
        assert!(matches!(err, Error::BranchCrossing { coordinate: 0 }));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        assert!(matches!(
            fd_jacobian(|_| vec![f64::NAN], &[0.0], 1e-6),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn tensor_lemma_examples() {
        let case = TensorLemmaCase {
            lambda: 1.0,
            mu: 1.0,
            nu: 1.0,
            u: [1.0, 0.0],
            omega: [0.0, 1.0],
        };
        assert_eq!(tensor_sum_det(&case), (4.0, 4.0));
        let zero = TensorLemmaCase {
            lambda: 0.0,
            mu: 0.0,
            nu: 0.0,
            ..case
        };
        assert_eq!(tensor_sum_det(&zero), (1.0, 1.0));
        let single = TensorLemmaCase {
            lambda: 0.0,
            mu: 2.5,
            nu: 0.0,
            u: [0.3, -1.0],
            omega: [2.0, 0.7],
        };
        let (f, d) = tensor_sum_det(&single);
        let expected = 1.0 + 2.5 * (0.3 * 2.0 - 0.7);
        assert!((f - expected).abs() < 1e-14 && (d - expected).abs() < 1e-14);
    }

    #[test]
    fn planar_scattering_preserves_measure() {
        let params = ModelParams::new(0.75, 2).unwrap();
        for out in verify_scattering_measure(100, &params, 3) {
            let r = out.result.unwrap();
            assert!((r.fd_det.abs() - 1.0).abs() <= 1e-6, "{r:?}");
            assert!(r.residual.unwrap() <= 1e-8, "{r:?}");
        }
        // The reflection is linear, so a wide step carries no truncation
        // error and keeps rounding well below the tolerance.
        for out in verify_scattering_measure_with(50, &params, 4, SamplingMode::ElasticOnly, 1e-3) {
            let r = out.result.unwrap();
            assert!((r.fd_det.abs() - 1.0).abs() <= 1e-10, "{r:?}");
        }
    }

    #[test]
    fn spatial_emission_contracts_measure() {
        // Pinned value of the finite-difference oracle for this input.
        let det = scattering_fd_det(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0], &[0.6, 0.8, 0.0], 0.75, DEFAULT_STEP).unwrap();
        assert!((det + 0.5).abs() < 1e-6, "{det}");
    }

    #[test]
    fn flow_jacobian_examples() {
        let params = ModelParams::new(0.75, 2).unwrap();
        let elastic = Configuration::new(2, &[vec![0.0, 0.0], vec![3.0, 0.0]], &[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let r = verify_flow_jacobian(&elastic, 3.0, &params, DEFAULT_STEP).unwrap();
        assert!(r.residual.unwrap() <= 1e-6, "{r:?}");
        assert!((r.fd_det.abs() - 1.0).abs() <= 1e-6);

        let inelastic = Configuration::new(2, &[vec![0.0, 0.0], vec![3.0, 0.3]], &[vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let r = verify_flow_jacobian(&inelastic, 3.0, &params, DEFAULT_STEP).unwrap();
        assert!((r.fd_det.abs() - 0.5).abs() <= 1e-6, "{r:?}");

        let free = Configuration::new(2, &[vec![0.0, 0.0], vec![3.0, 0.0]], &[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let r = verify_flow_jacobian(&free, 3.0, &params, DEFAULT_STEP).unwrap();
        assert!((r.fd_det - 1.0).abs() <= 1e-8);
        assert_eq!(r.analytic_det, Some(1.0));
    }

    #[test]
    fn spherical_map_preserves_volume() {
        let det = spherical_map_fd_det([1.2, -0.4, 0.9], 0.2, DEFAULT_STEP).unwrap();
        assert!((det.abs() - 1.0).abs() <= 1e-6, "{det}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn tensor_lemma_holds(seed in any::<u64>()) {
            let case = TensorLemmaCase::random(&mut sample_rng(seed, 0), 10.0);
            let (f, d) = tensor_sum_det(&case);
            prop_assert!((f - d).abs() <= 1e-12 * case.scale());
        }

        #[test]
        fn collision_time_gradients_match_differences(seed in any::<u64>(), dim in 2usize..4) {
            let cfg = random_colliding_pair(seed, 0, dim);
            let chk = check_collision_time_gradients(&cfg, PairIndex::new(0, 1), &Tolerances::default(), DEFAULT_STEP).unwrap();
            prop_assert!(chk.max_error <= 1e-6, "{:?}", chk);
            prop_assert!(chk.identity_residual <= 1e-6, "{:?}", chk);
        }
    }
}

//! Configurations of `N` unit-diameter spheres, phase-space membership and
//! free transport.
//!
//! A configuration stores positions and velocities as flat row-major buffers
//! (`N * d` entries each). The phase-space vector used by the Jacobian
//! machinery stacks all positions first and all velocities second,
//! `Z = (x_1, .., x_N, v_1, .., v_N)`.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::vecops;

/// Numerical slack used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute slack on the contact condition `|x_i - x_j| = 1`.
    pub contact: f64,
    /// Absolute band on the grazing discriminant.
    pub grazing: f64,
    /// Two distinct pairs colliding within this time of each other are
    /// reported as simultaneous.
    pub simultaneity: f64,
    /// Half-width of the excluded band around `|v_i - v_j|^2 = 4 * epsilon0`.
    pub critical: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            contact: 1e-9,
            grazing: 1e-12,
            simultaneity: 1e-10,
            critical: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("contact", self.contact),
            ("grazing", self.grazing),
            ("simultaneity", self.simultaneity),
            ("critical", self.critical),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "tolerance {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Model constants. The particle diameter is fixed at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Kinetic energy radiated by one inelastic collision. `f64::INFINITY`
    /// disables the inelastic branch (pure elastic hard spheres).
    pub epsilon0: f64,
    pub dim: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ModelParams {
    pub const DIAMETER: f64 = 1.0;

    pub fn new(epsilon0: f64, dim: usize) -> Result<Self> {
        let p = ModelParams {
            epsilon0,
            dim,
            tolerances: Tolerances::default(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Elastic hard spheres: the emission threshold is never reached.
    pub fn elastic(dim: usize) -> Self {
        ModelParams {
            epsilon0: f64::INFINITY,
            dim,
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon0.is_nan() || self.epsilon0 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon0 must be > 0, got {}",
                self.epsilon0
            )));
        }
        if self.dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be >= 2, got {}",
                self.dim
            )));
        }
        self.tolerances.validate()
    }

    /// Squared relative speed at which the emission law switches on.
    pub fn threshold(&self) -> f64 {
        4.0 * self.epsilon0
    }
}

/// An ordered pair `i < j` of particle indices.
///
/// Stored 0-based; displayed and serialized 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairIndex {
    pub i: usize,
    pub j: usize,
}

impl PairIndex {
    /// Panics unless `i < j`.
    pub fn new(i: usize, j: usize) -> Self {
        assert!(i < j, "pair index requires i < j (got {i}, {j})");
        PairIndex { i, j }
    }

    /// Builds the pair from 1-based labels.
    pub fn from_one_based(i: usize, j: usize) -> Result<Self> {
        if i == 0 || i >= j {
            return Err(Error::InvalidParameter(format!(
                "pair ({i},{j}) is not 1-based with i < j"
            )));
        }
        Ok(PairIndex { i: i - 1, j: j - 1 })
    }

    pub fn one_based(&self) -> [usize; 2] {
        [self.i + 1, self.j + 1]
    }

    pub fn involves(&self, k: usize) -> bool {
        self.i == k || self.j == k
    }

    /// All pairs of `n` particles in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = PairIndex> {
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| PairIndex { i, j }))
    }
}

impl fmt::Display for PairIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i + 1, self.j + 1)
    }
}

impl Serialize for PairIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PairIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [i, j] = <[usize; 2]>::deserialize(d)?;
        PairIndex::from_one_based(i, j).map_err(serde::de::Error::custom)
    }
}

/// Positions and velocities of `N` spheres in `R^d`.
///
/// Serialized as `{"d": 2, "particles": [{"x": [..], "v": [..]}, ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigurationRepr", into = "ConfigurationRepr")]
pub struct Configuration {
    dim: usize,
    positions: Vec<f64>,
    velocities: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParticleRepr {
    x: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConfigurationRepr {
    d: usize,
    particles: Vec<ParticleRepr>,
}

impl TryFrom<ConfigurationRepr> for Configuration {
    type Error = Error;

    fn try_from(repr: ConfigurationRepr) -> Result<Self> {
        let (xs, vs): (Vec<_>, Vec<_>) = repr.particles.into_iter().map(|p| (p.x, p.v)).unzip();
        Configuration::new(repr.d, &xs, &vs)
    }
}

impl From<Configuration> for ConfigurationRepr {
    fn from(cfg: Configuration) -> Self {
        let particles = (0..cfg.n_particles())
            .map(|k| ParticleRepr {
                x: cfg.position(k).to_vec(),
                v: cfg.velocity(k).to_vec(),
            })
            .collect();
        ConfigurationRepr { d: cfg.dim, particles }
    }
}

impl Configuration {
    /// Builds a configuration from per-particle vectors.
    pub fn new(dim: usize, positions: &[Vec<f64>], velocities: &[Vec<f64>]) -> Result<Self> {
        if positions.len() != velocities.len() {
            return Err(Error::InvalidParameter(format!(
                "{} positions but {} velocities",
                positions.len(),
                velocities.len()
            )));
        }
        for p in positions.iter().chain(velocities) {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
        }
        Self::from_flat(
            dim,
            positions.concat(),
            velocities.concat(),
        )
    }

    /// Builds a configuration from flat row-major buffers.
    pub fn from_flat(dim: usize, positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be >= 2, got {dim}"
            )));
        }
        if positions.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        if !positions.len().is_multiple_of(dim) || velocities.len() != positions.len() {
            return Err(Error::DimensionMismatch {
                expected: positions.len(),
                found: velocities.len(),
            });
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("positions"));
        }
        if velocities.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("velocities"));
        }
        Ok(Configuration {
            dim,
            positions,
            velocities,
        })
    }

    /// Rebuilds a configuration from a stacked phase-space vector `(X, V)`.
    pub fn from_phase_vector(dim: usize, z: &[f64]) -> Result<Self> {
        if !z.len().is_multiple_of(2 * dim) {
            return Err(Error::DimensionMismatch {
                expected: 2 * dim,
                found: z.len(),
            });
        }
        let half = z.len() / 2;
        Self::from_flat(dim, z[..half].to_vec(), z[half..].to_vec())
    }

    pub fn phase_vector(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(2 * self.positions.len());
        z.extend_from_slice(&self.positions);
        z.extend_from_slice(&self.velocities);
        z
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_particles(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn velocity(&self, k: usize) -> &[f64] {
        &self.velocities[k * self.dim..(k + 1) * self.dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn set_velocity(&mut self, k: usize, v: &[f64]) {
        assert_eq!(v.len(), self.dim);
        self.velocities[k * self.dim..(k + 1) * self.dim].copy_from_slice(v);
    }

    pub fn separation(&self, pair: PairIndex) -> f64 {
        vecops::dist_sq(self.position(pair.i), self.position(pair.j)).sqrt()
    }

    /// Smallest pair separation, `+inf` for a single particle.
    pub fn min_separation(&self) -> f64 {
        PairIndex::all(self.n_particles())
            .map(|p| self.separation(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Copy with every velocity negated.
    pub fn reversed(&self) -> Configuration {
        Configuration {
            dim: self.dim,
            positions: self.positions.clone(),
            velocities: self.velocities.iter().map(|v| -v).collect(),
        }
    }
}

/// Membership of a configuration in the closed phase space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "pairs")]
pub enum DomainStatus {
    /// Every pair strictly separated beyond contact.
    Interior,
    /// At least one pair at contact (within tolerance), none overlapping.
    Boundary(Vec<PairIndex>),
    /// At least one pair overlapping.
    Invalid(Vec<PairIndex>),
}

pub fn validate_configuration(cfg: &Configuration, tol: f64) -> Result<DomainStatus> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "contact tolerance must be >= 0, got {tol}"
        )));
    }
    let mut contact = Vec::new();
    let mut overlap = Vec::new();
    for pair in PairIndex::all(cfg.n_particles()) {
        let r = cfg.separation(pair);
        if (r - ModelParams::DIAMETER).abs() <= tol {
            contact.push(pair);
        } else if r < ModelParams::DIAMETER - tol {
            overlap.push(pair);
        }
    }
    Ok(if !overlap.is_empty() {
        DomainStatus::Invalid(overlap)
    } else if !contact.is_empty() {
        DomainStatus::Boundary(contact)
    } else {
        DomainStatus::Interior
    })
}

/// Straight-line motion `x_i + t v_i`. No collision check is made.
pub fn free_transport(cfg: &Configuration, t: f64) -> Configuration {
    let positions = cfg
        .positions
        .iter()
        .zip(&cfg.velocities)
        .map(|(x, v)| x + t * v)
        .collect();
    Configuration {
        dim: cfg.dim,
        positions,
        velocities: cfg.velocities.clone(),
    }
}

/// Total momentum (unit masses) and kinetic energy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservedQuantities {
    pub momentum: Vec<f64>,
    pub kinetic_energy: f64,
}

pub fn conserved_quantities(cfg: &Configuration) -> ConservedQuantities {
    let mut momentum = vec![0.0; cfg.dim];
    for k in 0..cfg.n_particles() {
        for (m, v) in momentum.iter_mut().zip(cfg.velocity(k)) {
            *m += v;
        }
    }
    ConservedQuantities {
        momentum,
        kinetic_energy: kinetic_energy(cfg),
    }
}

pub fn kinetic_energy(cfg: &Configuration) -> f64 {
    0.5 * vecops::norm_sq(&cfg.velocities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two(x2: [f64; 2]) -> Configuration {
        Configuration::new(2, &[vec![0.0, 0.0], x2.to_vec()], &[vec![1.0, 0.0], vec![0.0, 0.0]])
            .unwrap()
    }

    #[test]
    fn domain_status_examples() {
        assert_eq!(validate_configuration(&two([3.0, 0.0]), 1e-9).unwrap(), DomainStatus::Interior);
        assert_eq!(
            validate_configuration(&two([1.0, 0.0]), 1e-9).unwrap(),
            DomainStatus::Boundary(vec![PairIndex::new(0, 1)])
        );
        assert_eq!(
            validate_configuration(&two([0.5, 0.0]), 1e-9).unwrap(),
            DomainStatus::Invalid(vec![PairIndex::new(0, 1)])
        );
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(matches!(
            Configuration::new(2, &[], &[]),
            Err(Error::EmptyConfiguration)
        ));
        assert!(matches!(
            Configuration::new(2, &[vec![0.0, 0.0, 0.0]], &[vec![0.0, 0.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Configuration::new(2, &[vec![f64::NAN, 0.0]], &[vec![0.0, 0.0]]).is_err());
        assert!(validate_configuration(&two([3.0, 0.0]), -1.0).is_err());
    }

    #[test]
    fn transport_examples() {
        let c = Configuration::new(2, &[vec![0.0, 0.0]], &[vec![1.0, 0.0]]).unwrap();
        assert_eq!(free_transport(&c, 2.0).position(0), &[2.0, 0.0]);
        let c = two([3.0, 0.5]);
        assert_eq!(free_transport(&c, 0.0), c);
    }

    #[test]
    fn conserved_examples() {
        let c = Configuration::new(
            2,
            &[vec![0.0, 0.0], vec![3.0, 0.0]],
            &[vec![1.0, 0.0], vec![-1.0, 0.0]],
        )
        .unwrap();
        let q = conserved_quantities(&c);
        assert_eq!(q.momentum, vec![0.0, 0.0]);
        assert_eq!(q.kinetic_energy, 1.0);

        let c = Configuration::new(2, &[vec![0.0, 0.0]], &[vec![3.0, 4.0]]).unwrap();
        let q = conserved_quantities(&c);
        assert_eq!(q.momentum, vec![3.0, 4.0]);
        assert_eq!(q.kinetic_energy, 12.5);

        let c = Configuration::new(2, &[vec![0.0, 0.0]], &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(conserved_quantities(&c).kinetic_energy, 0.0);
    }

    #[test]
    fn pair_labels_are_one_based() {
        let p = PairIndex::new(0, 3);
        assert_eq!(p.to_string(), "(1,4)");
        assert_eq!(serde_json::to_string(&p).unwrap(), "[1,4]");
        let back: PairIndex = serde_json::from_str("[1,4]").unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<PairIndex>("[2,1]").is_err());
        assert_eq!(PairIndex::all(4).count(), 6);
    }

    fn config_strategy() -> impl Strategy<Value = Configuration> {
        (1usize..5, 2usize..4).prop_flat_map(|(n, d)| {
            (
                prop::collection::vec(-10.0f64..10.0, n * d),
                prop::collection::vec(-5.0f64..5.0, n * d),
            )
                .prop_map(move |(x, v)| Configuration::from_flat(d, x, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn transport_is_invertible(cfg in config_strategy(), t in -20.0f64..20.0) {
            let back = free_transport(&free_transport(&cfg, t), -t);
            prop_assert_eq!(back.velocities(), cfg.velocities());
            for (a, b) in back.positions().iter().zip(cfg.positions()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs() + t.abs() * 5.0));
            }
        }

        #[test]
        fn transport_keeps_conserved_quantities(cfg in config_strategy(), t in -20.0f64..20.0) {
            prop_assert_eq!(conserved_quantities(&free_transport(&cfg, t)), conserved_quantities(&cfg));
        }

        #[test]
        fn validation_monotone_in_tolerance(cfg in config_strategy(), t1 in 0.0f64..0.5, t2 in 0.0f64..0.5) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let pairs_at = |tol: f64| -> (Vec<PairIndex>, Vec<PairIndex>) {
                let mut contact = Vec::new();
                let mut overlap = Vec::new();
                for p in PairIndex::all(cfg.n_particles()) {
                    let r = cfg.separation(p);
                    if (r - 1.0).abs() <= tol { contact.push(p) } else if r < 1.0 - tol { overlap.push(p) }
                }
                (contact, overlap)
            };
            let (c_lo, o_lo) = pairs_at(lo);
            let (c_hi, o_hi) = pairs_at(hi);
            prop_assert!(c_lo.iter().all(|p| c_hi.contains(p)));
            prop_assert!(o_hi.iter().all(|p| o_lo.contains(p)));
            if validate_configuration(&cfg, hi).unwrap() == DomainStatus::Interior {
                prop_assert_eq!(validate_configuration(&cfg, lo).unwrap(), DomainStatus::Interior);
            }
        }
    }
}

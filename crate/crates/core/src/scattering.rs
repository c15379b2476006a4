//! Collision laws.
//!
//! With `w = v_j - v_i`, `s = |w|` and the contact direction `omega` pointing
//! from `i` to `j`:
//!
//! - `s^2 > 4 eps0` (emission): `v_i' = m - sigma kappa`, `v_j' = m + sigma kappa`
//!   where `m = (v_i + v_j)/2`, `kappa = sqrt(s^2/4 - eps0)` and `sigma` is
//!   `w/s` reflected through the hyperplane orthogonal to `omega`.
//! - `s^2 <= 4 eps0` (elastic): the normal components are exchanged.
//!
//! Both laws conserve momentum; the emission law removes exactly `eps0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::ModelParams;
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionKind {
    Elastic,
    Inelastic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringOutcome {
    pub kind: CollisionKind,
    pub omega: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
    pub kappa: Option<f64>,
    pub v_i_post: Vec<f64>,
    pub v_j_post: Vec<f64>,
    /// Kinetic energy before minus after, computed from the velocities.
    pub energy_loss: f64,
    /// `|v_i - v_j|^2` before the collision.
    pub relative_speed_sq: f64,
}

const MIN_RELATIVE_SPEED: f64 = 1e-14;

/// Reflection of the normalized relative velocity through `omega^perp`.
pub fn sigma_direction(v_i: &[f64], v_j: &[f64], omega: &[f64]) -> Result<Vec<f64>> {
    let w = vecops::sub(v_j, v_i);
    let s = vecops::norm(&w);
    if s < MIN_RELATIVE_SPEED {
        return Err(Error::ZeroRelativeVelocity);
    }
    let u = vecops::scale(&w, 1.0 / s);
    let c = vecops::dot(&u, omega);
    Ok(u.iter().zip(omega).map(|(uk, ok)| uk - 2.0 * c * ok).collect())
}

/// Elastic exchange of normal components. Linear and an involution at fixed `omega`.
pub fn elastic_law(v_i: &[f64], v_j: &[f64], omega: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = vecops::dot(&vecops::sub(v_i, v_j), omega);
    (
        v_i.iter().zip(omega).map(|(v, o)| v - a * o).collect(),
        v_j.iter().zip(omega).map(|(v, o)| v + a * o).collect(),
    )
}

/// Post-collisional `v_i'`, `v_j'`, the direction `sigma` and the speed `kappa`.
pub type EmissionParts = (Vec<f64>, Vec<f64>, Vec<f64>, f64);

/// Emission law. Returns post-collisional velocities, `sigma` and `kappa`.
pub fn emission_law(
    v_i: &[f64],
    v_j: &[f64],
    omega: &[f64],
    epsilon0: f64,
) -> Result<EmissionParts> {
    let rel_sq = vecops::dist_sq(v_j, v_i);
    if rel_sq <= 4.0 * epsilon0 {
        return Err(Error::BelowThreshold);
    }
    let sigma = sigma_direction(v_i, v_j, omega)?;
    let kappa = (rel_sq / 4.0 - epsilon0).sqrt();
    let mut vi_post = Vec::with_capacity(v_i.len());
    let mut vj_post = Vec::with_capacity(v_i.len());
    for k in 0..v_i.len() {
        let m = 0.5 * (v_i[k] + v_j[k]);
        vi_post.push(m - sigma[k] * kappa);
        vj_post.push(m + sigma[k] * kappa);
    }
    Ok((vi_post, vj_post, sigma, kappa))
}

/// Which law applies at squared relative speed `rel_sq`, refusing the
/// critical band around the threshold.
pub fn collision_kind(rel_sq: f64, params: &ModelParams) -> Result<CollisionKind> {
    let threshold = params.threshold();
    if (rel_sq - threshold).abs() <= params.tolerances.critical {
        return Err(Error::CriticalEnergy { rel_sq, threshold });
    }
    Ok(if rel_sq > threshold {
        CollisionKind::Inelastic
    } else {
        CollisionKind::Elastic
    })
}

/// Applies the model's collision law to a pre-collisional pair.
pub fn scatter(
    v_i: &[f64],
    v_j: &[f64],
    omega: &[f64],
    params: &ModelParams,
) -> Result<ScatteringOutcome> {
    let w = vecops::sub(v_j, v_i);
    let s = vecops::norm(&w);
    let normal = vecops::dot(&w, omega);
    if normal.abs() < params.tolerances.grazing * s {
        return Err(Error::Grazing("scattering input".into()));
    }
    if normal >= 0.0 {
        return Err(Error::NotPreCollisional(normal));
    }
    let rel_sq = s * s;
    let kind = collision_kind(rel_sq, params)?;
    let (v_i_post, v_j_post, sigma, kappa) = match kind {
        CollisionKind::Inelastic => {
            let (a, b, sigma, kappa) = emission_law(v_i, v_j, omega, params.epsilon0)?;
            (a, b, Some(sigma), Some(kappa))
        }
        CollisionKind::Elastic => {
            let (a, b) = elastic_law(v_i, v_j, omega);
            (a, b, None, None)
        }
    };
    let ke_pre = 0.5 * (vecops::norm_sq(v_i) + vecops::norm_sq(v_j));
    let ke_post = 0.5 * (vecops::norm_sq(&v_i_post) + vecops::norm_sq(&v_j_post));
    Ok(ScatteringOutcome {
        kind,
        omega: omega.to_vec(),
        sigma,
        kappa,
        v_i_post,
        v_j_post,
        energy_loss: ke_pre - ke_post,
        relative_speed_sq: rel_sq,
    })
}

/// Velocity-only scattering map `(v_i, v_j) -> (v_i', v_j')` at fixed
/// `omega`, without the pre-collisional and critical-band checks. Returns
/// the branch that was taken so callers can detect branch crossings.
pub fn velocity_map(z: &[f64], omega: &[f64], epsilon0: f64) -> (Vec<f64>, CollisionKind) {
    let d = omega.len();
    let (v_i, v_j) = z.split_at(d);
    let rel_sq = vecops::dist_sq(v_j, v_i);
    if rel_sq > 4.0 * epsilon0 {
        if let Ok((a, b, _, _)) = emission_law(v_i, v_j, omega, epsilon0) {
            return ([a, b].concat(), CollisionKind::Inelastic);
        }
    }
    let (a, b) = elastic_law(v_i, v_j, omega);
    ([a, b].concat(), CollisionKind::Elastic)
}

/// `det(I_2 + lambda u(x)u + mu u(x)omega + nu omega(x)omega)` in closed form,
/// where `a(x)b` maps `x` to `(b.x) a`.
pub fn tensor_sum_det_formula(lambda: f64, mu: f64, nu: f64, u: [f64; 2], omega: [f64; 2]) -> f64 {
    let uu = u[0] * u[0] + u[1] * u[1];
    let uo = u[0] * omega[0] + u[1] * omega[1];
    let oo = omega[0] * omega[0] + omega[1] * omega[1];
    let cross = u[0] * omega[1] - u[1] * omega[0];
    1.0 + lambda * uu + mu * uo + nu * oo + lambda * nu * cross * cross
}

/// Structure of the emission-law Jacobian.
///
/// The Jacobian of `(v_i, v_j) -> (v_i', v_j')` has the block form
/// `[[I/2 + A, I/2 - A], [I/2 - A, I/2 + A]]`, whose determinant is
/// `det(2A)`, with
///
/// `2A = scale * (I + lambda u(x)u + mu omega(x)u + nu omega(x)omega)`,
/// `scale = 2 kappa / s`, `lambda = s^2/(4 kappa^2) - 1`,
/// `mu = 2 (u.omega)(1 - s^2/(4 kappa^2))`, `nu = -2`, `u = (v_j - v_i)/s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmissionJacobian {
    pub scale: f64,
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub u: Vec<f64>,
    pub omega: Vec<f64>,
}

impl EmissionJacobian {
    pub fn new(v_i: &[f64], v_j: &[f64], omega: &[f64], epsilon0: f64) -> Result<Self> {
        let w = vecops::sub(v_j, v_i);
        let s2 = vecops::norm_sq(&w);
        if s2 <= 4.0 * epsilon0 {
            return Err(Error::BelowThreshold);
        }
        let s = s2.sqrt();
        let kappa2 = s2 / 4.0 - epsilon0;
        let r = s2 / (4.0 * kappa2);
        let u = vecops::scale(&w, 1.0 / s);
        let c = vecops::dot(&u, omega);
        Ok(EmissionJacobian {
            scale: 2.0 * kappa2.sqrt() / s,
            lambda: r - 1.0,
            mu: 2.0 * c * (1.0 - r),
            nu: -2.0,
            u,
            omega: omega.to_vec(),
        })
    }

    /// The matrix `A` (row-major, `d x d`).
    pub fn a_matrix(&self) -> Vec<f64> {
        let d = self.u.len();
        let mut a = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                let id = if r == c { 1.0 } else { 0.0 };
                let m = id
                    + self.lambda * self.u[r] * self.u[c]
                    + self.mu * self.omega[r] * self.u[c]
                    + self.nu * self.omega[r] * self.omega[c];
                a[r * d + c] = 0.5 * self.scale * m;
            }
        }
        a
    }

    /// `det(2A)` through the two-dimensional tensor-sum identity. The
    /// transpose of `omega(x)u` is `u(x)omega`, which leaves the determinant
    /// unchanged.
    pub fn det_2a_2d(&self) -> Result<f64> {
        if self.u.len() != 2 {
            return Err(Error::Unsupported(
                "closed-form det(2A) is two-dimensional".into(),
            ));
        }
        let u = [self.u[0], self.u[1]];
        let o = [self.omega[0], self.omega[1]];
        Ok(self.scale.powi(2) * tensor_sum_det_formula(self.lambda, self.mu, self.nu, u, o))
    }
}

/// Polar or spherical coordinates of the relative velocity in the
/// centre-of-mass frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "lowercase")]
pub enum RadialCoordinates {
    Polar { rho: f64, theta: f64 },
    /// `theta` is the latitude in `[-pi/2, pi/2]`, `phi` the longitude in `[0, 2 pi)`.
    Spherical { rho: f64, theta: f64, phi: f64 },
}

/// Radius update with angle reflection:
/// `(rho, theta) -> (sqrt(rho^2 - 4 eps0), -theta)` in two dimensions and
/// `(rho, theta, phi) -> ((rho^3 - 4 eps0)^(1/3), -theta, phi)` in three.
pub fn radial_emission_map(coords: RadialCoordinates, epsilon0: f64) -> Result<RadialCoordinates> {
    match coords {
        RadialCoordinates::Polar { rho, theta } => {
            let r2 = rho * rho - 4.0 * epsilon0;
            if !(rho > 0.0 && r2 > 0.0) {
                return Err(Error::BelowThreshold);
            }
            Ok(RadialCoordinates::Polar {
                rho: r2.sqrt(),
                theta: -theta,
            })
        }
        RadialCoordinates::Spherical { rho, theta, phi } => {
            let r3 = rho.powi(3) - 4.0 * epsilon0;
            if !(rho > 0.0 && r3 > 0.0) {
                return Err(Error::BelowThreshold);
            }
            Ok(RadialCoordinates::Spherical {
                rho: r3.cbrt(),
                theta: -theta,
                phi,
            })
        }
    }
}

/// Orthonormal frame `(t, omega)` with `t` a quarter turn clockwise from `omega`.
fn polar_frame(omega: &[f64]) -> [f64; 2] {
    [omega[1], -omega[0]]
}

/// Centre-of-mass velocity `m` and polar coordinates of `w = v_j - v_i` in
/// the frame whose first axis is orthogonal to `omega` (`d = 2`).
pub fn center_of_mass_polar(
    v_i: &[f64],
    v_j: &[f64],
    omega: &[f64],
) -> Result<([f64; 2], RadialCoordinates)> {
    if v_i.len() != 2 {
        return Err(Error::Unsupported("polar frame requires d = 2".into()));
    }
    let m = [0.5 * (v_i[0] + v_j[0]), 0.5 * (v_i[1] + v_j[1])];
    let w = [v_j[0] - v_i[0], v_j[1] - v_i[1]];
    let t = polar_frame(omega);
    let a = w[0] * t[0] + w[1] * t[1];
    let b = w[0] * omega[0] + w[1] * omega[1];
    Ok((
        m,
        RadialCoordinates::Polar {
            rho: a.hypot(b),
            theta: b.atan2(a),
        },
    ))
}

/// Inverse of [`center_of_mass_polar`].
pub fn from_center_of_mass_polar(
    m: [f64; 2],
    coords: RadialCoordinates,
    omega: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let RadialCoordinates::Polar { rho, theta } = coords else {
        return Err(Error::Unsupported("expected polar coordinates".into()));
    };
    let t = polar_frame(omega);
    let (sn, cs) = theta.sin_cos();
    let w = [
        rho * (cs * t[0] + sn * omega[0]),
        rho * (cs * t[1] + sn * omega[1]),
    ];
    Ok((
        vec![m[0] - 0.5 * w[0], m[1] - 0.5 * w[1]],
        vec![m[0] + 0.5 * w[0], m[1] + 0.5 * w[1]],
    ))
}

/// Spherical coordinates with `z` as the polar axis.
pub fn spherical_from_cartesian(w: [f64; 3]) -> RadialCoordinates {
    let rho = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let theta = (w[2] / rho).clamp(-1.0, 1.0).asin();
    let mut phi = w[1].atan2(w[0]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    RadialCoordinates::Spherical { rho, theta, phi }
}

pub fn cartesian_from_spherical(coords: RadialCoordinates) -> Result<[f64; 3]> {
    let RadialCoordinates::Spherical { rho, theta, phi } = coords else {
        return Err(Error::Unsupported("expected spherical coordinates".into()));
    };
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Ok([rho * ct * cp, rho * ct * sp, rho * st])
}

/// The three-dimensional spherical emission map acting on Cartesian vectors.
pub fn spherical_emission_cartesian(w: [f64; 3], epsilon0: f64) -> Result<[f64; 3]> {
    cartesian_from_spherical(radial_emission_map(spherical_from_cartesian(w), epsilon0)?)
}

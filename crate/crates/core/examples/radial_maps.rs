//! The emission acts radially on the relative velocity. In the plane it
//! sends (rho, theta) to (sqrt(rho^2 - 4 eps0), -theta); in space
//! rho^3 drops by 4 eps0. Both are volume preserving in Cartesian
//! coordinates.

use ihse::jacobian_lab::{spherical_map_fd_det, DEFAULT_STEP};
use ihse::scattering::{center_of_mass_polar, radial_emission_map, spherical_emission_cartesian};

fn main() -> ihse::Result<()> {
    let eps0 = 0.2;
    let (m, polar) = center_of_mass_polar(&[1.0, 0.2], &[-0.5, -0.4], &[0.6, 0.8])?;
    println!("centre of mass {m:?}, relative {polar:?}");
    println!("after emission  {:?}", radial_emission_map(polar, eps0)?);

    for w in [[1.5, 0.2, -0.7], [0.3, -1.1, 0.9], [0.0, 0.4, 1.6]] {
        let out = spherical_emission_cartesian(w, eps0)?;
        let det = spherical_map_fd_det(w, eps0, DEFAULT_STEP)?;
        println!("w = {w:?} -> {out:.6?}, det = {det:.9}");
    }
    Ok(())
}

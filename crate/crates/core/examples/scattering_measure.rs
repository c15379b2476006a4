//! Finite-difference determinants of the velocity scattering map at fixed
//! contact normal. In the plane both laws preserve Lebesgue measure. In three
//! dimensions an emission contracts velocity space by sqrt(1 - 4 eps0 / s^2);
//! the volume-preserving description there is the spherical map shown in
//! `radial_maps`.

use ihse::jacobian_lab::{verify_scattering_measure, JacobianReport};
use ihse::scattering::CollisionKind;
use ihse::ModelParams;

fn main() -> ihse::Result<()> {
    let eps0 = 0.25;
    for dim in [2, 3] {
        let params = ModelParams::new(eps0, dim)?;
        let outcomes = verify_scattering_measure(2000, &params, 1);
        let reports: Vec<&JacobianReport> = outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect();
        let deviation = |kind: CollisionKind, expected: &dyn Fn(f64) -> f64| {
            reports
                .iter()
                .filter(|r| r.kind == Some(kind))
                .map(|r| (r.fd_det.abs() - expected(r.relative_speed_sq.unwrap_or(f64::NAN))).abs())
                .fold(0.0, f64::max)
        };
        let elastic = deviation(CollisionKind::Elastic, &|_| 1.0);
        let inelastic = if dim == 2 {
            deviation(CollisionKind::Inelastic, &|_| 1.0)
        } else {
            deviation(CollisionKind::Inelastic, &|s2| (1.0 - 4.0 * eps0 / s2).sqrt())
        };
        let expected = if dim == 2 { "1" } else { "sqrt(1 - 4 eps0 / s^2)" };
        println!("d = {dim}: {} samples", reports.len());
        println!("  elastic:  |det| against 1, max deviation {elastic:.2e}");
        println!("  emission: |det| against {expected}, max deviation {inelastic:.2e}");
    }
    Ok(())
}

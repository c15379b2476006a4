//! Elastic reflection against emission for the same incoming pair, with the
//! momentum and energy bookkeeping of each.

use ihse::scattering::scatter;
use ihse::system::ModelParams;

fn energy(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().chain(b).map(|x| x * x).sum::<f64>()
}

fn main() -> ihse::Result<()> {
    let v_i: [f64; 2] = [0.9, 0.3];
    let v_j: [f64; 2] = [-0.6, 0.1];
    let omega = [0.8, 0.6];
    let rel_sq: f64 = (v_j[0] - v_i[0]).powi(2) + (v_j[1] - v_i[1]).powi(2);
    println!("|v_i - v_j|^2 = {rel_sq:.4}");

    // Threshold 4 eps0 on either side of the relative speed.
    for eps0 in [0.7, 0.3] {
        let params = ModelParams::new(eps0, 2)?;
        let out = scatter(&v_i, &v_j, &omega, &params)?;
        let p_in = [v_i[0] + v_j[0], v_i[1] + v_j[1]];
        let p_out = [out.v_i_post[0] + out.v_j_post[0], out.v_i_post[1] + out.v_j_post[1]];
        println!("eps0 = {eps0}: {:?}", out.kind);
        println!("  v_i' = {:?}, v_j' = {:?}", out.v_i_post, out.v_j_post);
        println!("  momentum in {p_in:?}, out {p_out:?}");
        println!(
            "  energy lost {:.15} (recorded {:.15})",
            energy(&v_i, &v_j) - energy(&out.v_i_post, &out.v_j_post),
            out.energy_loss
        );
    }
    Ok(())
}

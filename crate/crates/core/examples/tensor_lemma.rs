//! Closed form of det(lambda I + mu u(x)w + nu w(x)w) in the plane against the
//! direct 2x2 determinant.

use ihse::jacobian_lab::{tensor_sum_det, TensorLemmaCase};
use ihse::sampling::sample_rng;

fn main() {
    for bound in [1.0, 10.0] {
        let (mut abs, mut scaled) = (0.0f64, 0.0f64);
        for i in 0..10_000 {
            let case = TensorLemmaCase::random(&mut sample_rng(3, i), bound);
            let (formula, direct) = tensor_sum_det(&case);
            abs = abs.max((formula - direct).abs());
            scaled = scaled.max((formula - direct).abs() / case.scale());
        }
        println!("entries in [-{bound}, {bound}]: max |diff| = {abs:.2e}, relative to term sizes = {scaled:.2e}");
    }
}

//! Seeded random draws of tensors, rotations and states.
//!
//! All ensembles are built from per-index ChaCha streams, so sample `k` of a
//! given seed is the same no matter how the ensemble is split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::{deviatoric_from_coords, SkewTensor3, SymTensor3, Tensor3};

/// Independent generator for sample `index` of the ensemble keyed by `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Trace-free symmetric tensor drawn uniformly on the unit sphere of
/// deviators (five i.i.d. normals in an orthonormal deviatoric basis).
pub fn unit_deviator<R: Rng + ?Sized>(rng: &mut R) -> SymTensor3 {
    loop {
        let c: [f64; 5] = std::array::from_fn(|_| normal(rng));
        let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return deviatoric_from_coords(c.map(|x| x / n));
        }
    }
}

/// Skew tensor with unit Frobenius norm and isotropically distributed axis.
pub fn unit_skew<R: Rng + ?Sized>(rng: &mut R) -> SkewTensor3 {
    loop {
        let w: [f64; 3] = std::array::from_fn(|_| normal(rng));
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            // ‖W‖_F = √2 |w|
            let k = 1.0 / (n * 2.0_f64.sqrt());
            return SkewTensor3::from_axial(w.map(|x| x * k));
        }
    }
}

/// Uniformly distributed rotation (Haar measure) built from a random unit
/// quaternion.
pub fn rotation<R: Rng + ?Sized>(rng: &mut R) -> Tensor3 {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| normal(rng));
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            return rotation_from_quaternion(q.map(|x| x / n));
        }
    }
}

/// Rotation matrix of the unit quaternion `(w, x, y, z)`.
pub fn rotation_from_quaternion(q: [f64; 4]) -> Tensor3 {
    let [w, x, y, z] = q;
    Tensor3([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])
}

/// Rotation by `angle` about a unit `axis` (Rodrigues).
pub fn rotation_about(axis: [f64; 3], angle: f64) -> Tensor3 {
    let n = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (s, c) = (angle / 2.0).sin_cos();
    rotation_from_quaternion([c, s * axis[0] / n, s * axis[1] / n, s * axis[2] / n])
}

/// Unit-norm state `(S, Ω)`: trace-free `S` and `Ω` both of unit Frobenius norm.
pub fn unit_state<R: Rng + ?Sized>(rng: &mut R) -> (SymTensor3, SkewTensor3) {
    (unit_deviator(rng), unit_skew(rng))
}

/// `n` unit-norm states, sample `k` drawn from stream `k` of `seed`.
pub fn unit_states(n: usize, seed: u64) -> Vec<(SymTensor3, SkewTensor3)> {
    (0..n)
        .map(|k| unit_state(&mut stream_rng(seed, k as u64)))
        .collect()
}

/// State with unit-norm `S` and `|Ω| = ratio`, where `ratio` is uniform in
/// `[0, max_ratio]`.
pub fn state_with_ratio<R: Rng + ?Sized>(rng: &mut R, max_ratio: f64) -> (SymTensor3, SkewTensor3) {
    let s = unit_deviator(rng);
    let w = unit_skew(rng);
    let ratio = rng.random::<f64>() * max_ratio;
    (s, w.scale(ratio))
}

//! Scalar invariants of the pair `(S, Ω)`.
//!
//! The six primitive invariants
//!
//! ```text
//! I1 = tr(S²)   I2 = tr(S³)   B1 = tr(S²Ω²)
//! B2 = tr(Ω²)   B3 = tr(SΩ²)  B4 = tr(S²Ω²SΩ)
//! ```
//!
//! and the five scale-free combinations `v1 = I2/|S|³`, `v2 = B1/|S|⁴`,
//! `v3 = B2/|S|²`, `v4 = B3/|S|³`, `v5 = B4/|S|⁶`, which are unchanged when
//! `S` and `Ω` are multiplied by the same positive factor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::{stream_rng, unit_deviator};
use crate::tensor::{SkewTensor3, SymTensor3};

/// Relative threshold below which `|S|` is treated as zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
#[error(
    "singular state: |S| = {s_norm:e} is below {threshold:e}; divergent: {divergent:?}, indeterminate: {indeterminate:?}"
)]
pub struct SingularState {
    pub s_norm: f64,
    pub threshold: f64,
    /// Scaled invariants whose numerator is non-zero, so they blow up.
    pub divergent: Vec<&'static str>,
    /// Scaled invariants of the form 0/0.
    pub indeterminate: Vec<&'static str>,
}

/// What to do when `|S|` vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SingularityPolicy {
    /// Fail when `|S| < 1e-12 · reference_scale`.
    Error { reference_scale: f64 },
    /// Replace `|S|` by `√(|S|² + ε²)` everywhere it is used as a scale.
    Regularize { epsilon: f64 },
}

impl Default for SingularityPolicy {
    fn default() -> Self {
        SingularityPolicy::Error { reference_scale: 1.0 }
    }
}

impl SingularityPolicy {
    /// Regularization with `ε = 1e-12 · reference_scale`.
    pub fn regularize_relative(reference_scale: f64) -> Self {
        SingularityPolicy::Regularize { epsilon: SINGULAR_THRESHOLD * reference_scale }
    }

    /// The value of `|S|` to divide by, given `I1 = |S|²`.
    pub fn effective_norm(&self, prim: &PrimitiveInvariants) -> Result<f64, SingularState> {
        match *self {
            SingularityPolicy::Error { reference_scale } => {
                let s_norm = prim.i1.max(0.0).sqrt();
                let threshold = SINGULAR_THRESHOLD * reference_scale;
                if s_norm < threshold || s_norm == 0.0 {
                    Err(prim.singular_report(s_norm, threshold))
                } else {
                    Ok(s_norm)
                }
            }
            SingularityPolicy::Regularize { epsilon } => Ok((prim.i1.max(0.0) + epsilon * epsilon).sqrt()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PrimitiveInvariants {
    pub i1: f64,
    pub i2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
}

impl PrimitiveInvariants {
    pub fn as_array(&self) -> [f64; 6] {
        [self.i1, self.i2, self.b1, self.b2, self.b3, self.b4]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        PrimitiveInvariants { i1: a[0], i2: a[1], b1: a[2], b2: a[3], b3: a[4], b4: a[5] }
    }

    fn singular_report(&self, s_norm: f64, threshold: f64) -> SingularState {
        let numerators = [("v1", self.i2), ("v2", self.b1), ("v3", self.b2), ("v4", self.b3), ("v5", self.b4)];
        let mut divergent = Vec::new();
        let mut indeterminate = Vec::new();
        for (name, num) in numerators {
            if num != 0.0 {
                divergent.push(name);
            } else {
                indeterminate.push(name);
            }
        }
        SingularState { s_norm, threshold, divergent, indeterminate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScaledInvariants {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub v4: f64,
    pub v5: f64,
}

impl ScaledInvariants {
    pub fn as_array(&self) -> [f64; 5] {
        [self.v1, self.v2, self.v3, self.v4, self.v5]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        ScaledInvariants { v1: a[0], v2: a[1], v3: a[2], v4: a[3], v5: a[4] }
    }
}

/// Primitive and scaled invariants of one state, with the `|S|` used to scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSet {
    pub primitive: PrimitiveInvariants,
    pub scaled: ScaledInvariants,
    pub s_norm: f64,
}

/// `(I1, I2, B1, B2, B3, B4)`; products are taken left to right.
pub fn primitive_invariants(s: &SymTensor3, omega: &SkewTensor3) -> PrimitiveInvariants {
    let s = s.t();
    let w = omega.t();
    let s2 = s * s;
    let w2 = w * w;
    let s2w2 = s2 * w2;
    PrimitiveInvariants {
        i1: s2.trace(),
        i2: (s2 * s).trace(),
        b1: s2w2.trace(),
        b2: w2.trace(),
        b3: (s * w2).trace(),
        b4: (s * s * w * w * s * w).trace(),
    }
}

/// `v_k` from the primitive invariants and a (possibly regularized) `|S|`.
pub fn scaled_from_norm(prim: &PrimitiveInvariants, s_norm: f64) -> ScaledInvariants {
    let n2 = s_norm * s_norm;
    let n3 = n2 * s_norm;
    ScaledInvariants {
        v1: prim.i2 / n3,
        v2: prim.b1 / (n2 * n2),
        v3: prim.b2 / n2,
        v4: prim.b3 / n3,
        v5: prim.b4 / (n3 * n3),
    }
}

/// Scaled invariants with an explicit `|S|`, failing when it is below the
/// singular threshold.
pub fn scaled_invariants(prim: &PrimitiveInvariants, s_norm: f64) -> Result<ScaledInvariants, SingularState> {
    if !(s_norm >= SINGULAR_THRESHOLD) {
        return Err(prim.singular_report(s_norm, SINGULAR_THRESHOLD));
    }
    Ok(scaled_from_norm(prim, s_norm))
}

/// Full invariant set under the given singularity policy.
pub fn invariant_set(
    s: &SymTensor3,
    omega: &SkewTensor3,
    policy: &SingularityPolicy,
) -> Result<InvariantSet, SingularState> {
    let primitive = primitive_invariants(s, omega);
    let s_norm = policy.effective_norm(&primitive)?;
    Ok(InvariantSet { primitive, scaled: scaled_from_norm(&primitive, s_norm), s_norm })
}

/// `v1 = tr(S³)/|S|³` of a symmetric tensor (zero for `S = 0`).
pub fn v1_of(s: &SymTensor3) -> f64 {
    let st = s.t();
    let s2 = st * st;
    let i1 = s2.trace();
    if i1 == 0.0 {
        return 0.0;
    }
    (s2 * st).trace() / i1.powf(1.5)
}

/// A candidate value for the supremum of `|v1|` over trace-free `S`, checked
/// against a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub label: String,
    pub value: f64,
    /// The scanned maximum does not exceed `value` (with `1e-9` slack).
    pub respected: bool,
    /// The scanned maximum is within `1e-6` of `value`.
    pub attained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct V1Scan {
    pub max_abs_v1: f64,
    pub argmax: SymTensor3,
    pub samples: usize,
    pub polished: bool,
    /// Candidate constants tested against the scan, `1/(3√6)` and `1/√6`.
    pub candidate_bounds: Vec<BoundCheck>,
}

/// Exact supremum of `|v1|` over trace-free symmetric tensors, attained at
/// eigenvalues proportional to `(2, −1, −1)`.
pub fn v1_supremum() -> f64 {
    1.0 / 6.0_f64.sqrt()
}

fn candidate_bounds(max_abs_v1: f64) -> Vec<BoundCheck> {
    [("1/(3*sqrt(6))", 1.0 / (3.0 * 6.0_f64.sqrt())), ("1/sqrt(6)", v1_supremum())]
        .into_iter()
        .map(|(label, value)| BoundCheck {
            label: label.to_string(),
            value,
            respected: max_abs_v1 <= value + 1e-9,
            attained: (max_abs_v1 - value).abs() <= 1e-6,
        })
        .collect()
}

/// Projected gradient ascent of `|v1|` on the unit sphere of deviators.
fn polish(start: &SymTensor3) -> SymTensor3 {
    let mut s = start.deviator();
    let n = s.norm();
    if n == 0.0 {
        return s;
    }
    s = s.scale(1.0 / n);
    let sign = if v1_of(&s) >= 0.0 { 1.0 } else { -1.0 };
    let mut best = s;
    let mut best_val = v1_of(&s).abs();
    for _ in 0..500 {
        let v1 = v1_of(&s);
        // tangential part of ∂v1/∂S at unit |S|, up to the factor 3
        let grad = s.square().deviator() - s.scale(v1);
        let next = s + grad.scale(0.5 * sign);
        let nn = next.norm();
        if nn == 0.0 {
            break;
        }
        s = next.scale(1.0 / nn);
        let val = v1_of(&s).abs();
        if val > best_val {
            best_val = val;
            best = s;
        }
    }
    best
}

/// Maximum of `|v1|` over the given tensors (projected to deviators), with an
/// optional local ascent from the best sample.
pub fn v1_extremal_over(samples: &[SymTensor3], polish_best: bool) -> V1Scan {
    let mut best = SymTensor3::ZERO;
    let mut best_val = 0.0_f64;
    for s in samples {
        let d = s.deviator();
        let val = v1_of(&d).abs();
        if val > best_val {
            best_val = val;
            best = d;
        }
    }
    if polish_best && best_val > 0.0 {
        let p = polish(&best);
        let val = v1_of(&p).abs();
        if val > best_val {
            best_val = val;
            best = p;
        }
    }
    V1Scan {
        max_abs_v1: best_val,
        argmax: best,
        samples: samples.len(),
        polished: polish_best,
        candidate_bounds: candidate_bounds(best_val),
    }
}

/// Random scan of `|v1|` over `sample_count` unit deviators followed by a local
/// polish. Deterministic for a fixed seed regardless of thread count.
pub fn v1_extremal_scan(sample_count: usize, seed: u64) -> V1Scan {
    let sample_count = sample_count.max(1);
    let (idx, _) = (0..sample_count)
        .into_par_iter()
        .map(|k| {
            let s = unit_deviator(&mut stream_rng(seed, k as u64));
            (k, v1_of(&s).abs())
        })
        .reduce(
            || (usize::MAX, -1.0),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let best = unit_deviator(&mut stream_rng(seed, idx as u64));
    let mut scan = v1_extremal_over(&[best], true);
    scan.samples = sample_count;
    scan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{decompose, Tensor3};

    fn plane_shear() -> (SymTensor3, SkewTensor3) {
        let d = decompose(&Tensor3::new([[0.0, 1.0, 0.0], [0.0; 3], [0.0; 3]]).unwrap()).unwrap();
        (d.s, d.omega)
    }

    #[test]
    fn primitive_examples() {
        let p = primitive_invariants(&SymTensor3::diag(1.0, -1.0, 0.0), &SkewTensor3::ZERO);
        assert_eq!(p.as_array(), [2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

        let (s, w) = plane_shear();
        let p = primitive_invariants(&s, &w);
        assert_eq!(p.as_array(), [0.5, 0.0, -0.125, -0.5, 0.0, 0.0]);

        let rot = SkewTensor3::new([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0; 3]]).unwrap();
        let p = primitive_invariants(&SymTensor3::ZERO, &rot);
        assert_eq!(p.as_array(), [0.0, 0.0, 0.0, -2.0, 0.0, 0.0]);
    }

    #[test]
    fn scaled_examples() {
        let (s, w) = plane_shear();
        let p = primitive_invariants(&s, &w);
        let v = scaled_invariants(&p, s.norm()).unwrap();
        let expect = [0.0, -0.5, -1.0, 0.0, 0.0];
        for (a, b) in v.as_array().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }

        let r6 = 6.0_f64.sqrt();
        let s = SymTensor3::diag(2.0 / r6, -1.0 / r6, -1.0 / r6);
        let set = invariant_set(&s, &SkewTensor3::ZERO, &SingularityPolicy::default()).unwrap();
        assert!((set.scaled.v1 - 1.0 / r6).abs() < 1e-15);
        assert_eq!(&set.scaled.as_array()[1..], &[0.0; 4]);
    }

    #[test]
    fn scaled_are_scale_free() {
        let (s, w) = plane_shear();
        let base = invariant_set(&s, &w, &SingularityPolicy::default()).unwrap().scaled;
        for lambda in [1e-3, 1.0, 1e3] {
            let v = invariant_set(&s.scale(lambda), &w.scale(lambda), &SingularityPolicy::default())
                .unwrap()
                .scaled;
            for (a, b) in v.as_array().iter().zip(base.as_array()) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn singular_state_is_reported() {
        let rot = SkewTensor3::new([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0; 3]]).unwrap();
        let err = invariant_set(&SymTensor3::ZERO, &rot, &SingularityPolicy::default()).unwrap_err();
        assert_eq!(err.divergent, vec!["v3"]);
        assert_eq!(err.indeterminate, vec!["v1", "v2", "v4", "v5"]);

        let p = primitive_invariants(&SymTensor3::ZERO, &rot);
        assert!(scaled_invariants(&p, 0.0).is_err());

        let reg = invariant_set(&SymTensor3::ZERO, &rot, &SingularityPolicy::Regularize { epsilon: 1e-3 }).unwrap();
        assert!((reg.s_norm - 1e-3).abs() < 1e-18);
        assert!((reg.scaled.v3 - (-2.0 / 1e-6)).abs() < 1e-6);
    }

    #[test]
    fn v1_scan_examples() {
        let r6 = 6.0_f64.sqrt();
        let extremal = SymTensor3::diag(2.0 / r6, -1.0 / r6, -1.0 / r6);
        let scan = v1_extremal_over(&[SymTensor3::diag(1.0, -1.0, 0.0), extremal], false);
        assert!((scan.max_abs_v1 - 1.0 / r6).abs() < 1e-15);

        let (s, _) = plane_shear();
        let scan = v1_extremal_over(&[s, s.scale(3.0)], true);
        assert_eq!(scan.max_abs_v1, 0.0);

        let single = SymTensor3::diag(1.0, -1.0, 0.0).scale(std::f64::consts::FRAC_1_SQRT_2);
        assert_eq!(v1_extremal_over(&[single], false).max_abs_v1, 0.0);
    }

    #[test]
    fn v1_scan_reaches_supremum() {
        let scan = v1_extremal_scan(2000, 5);
        assert!(scan.max_abs_v1 <= v1_supremum() + 1e-12);
        assert!(scan.max_abs_v1 > 0.408);
        assert!(!scan.candidate_bounds[0].respected);
        assert!(scan.candidate_bounds[1].respected && scan.candidate_bounds[1].attained);
        assert_eq!(scan, v1_extremal_scan(2000, 5));
    }
}

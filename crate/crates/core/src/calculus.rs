//! Derivatives of the invariants with respect to `S` and finite-difference
//! oracles.
//!
//! Gradients use the pairing `⟨B, H⟩ = tr(BH)` over symmetric `H`: the
//! derivative of `f` at `S` is the unique symmetric `B` with
//! `f(S + H) = f(S) + tr(BH) + o(H)`. Under that convention `∂I1/∂S = 2S`
//! holds literally and off-diagonal components need no factor-of-two fixups.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invariants::primitive_invariants;
use crate::models::{ClosureModel, ModelError};
use crate::tensor::{deviatoric_basis, symmetric_basis, SkewTensor3, SymTensor3};

/// Relative step used by the central-difference oracles.
pub const FD_RELATIVE_STEP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum CalculusError {
    #[error("non-finite function value {value} at offset {offset:+e} along the probe direction")]
    NonFinite { value: f64, offset: f64 },
    #[error("step must be positive, got {0}")]
    BadStep(f64),
    #[error("closure evaluation failed at S = {s:?}: {source}")]
    Model {
        s: SymTensor3,
        #[source]
        source: ModelError,
    },
}

/// The six primitive invariants as differentiable functions of `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Invariant {
    I1,
    I2,
    B1,
    B2,
    B3,
    B4,
}

impl Invariant {
    pub const ALL: [Invariant; 6] = [
        Invariant::I1,
        Invariant::I2,
        Invariant::B1,
        Invariant::B2,
        Invariant::B3,
        Invariant::B4,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Invariant::I1 => "I1",
            Invariant::I2 => "I2",
            Invariant::B1 => "B1",
            Invariant::B2 => "B2",
            Invariant::B3 => "B3",
            Invariant::B4 => "B4",
        }
    }

    pub fn value(&self, s: &SymTensor3, omega: &SkewTensor3) -> f64 {
        primitive_invariants(s, omega).as_array()[*self as usize]
    }

    pub fn gradient(&self, s: &SymTensor3, omega: &SkewTensor3) -> SymTensor3 {
        match self {
            Invariant::I1 => grad_i1(s),
            Invariant::I2 => grad_i2(s),
            Invariant::B1 => grad_b1(s, omega),
            Invariant::B2 => grad_b2(),
            Invariant::B3 => grad_b3(omega),
            Invariant::B4 => grad_b4(s, omega),
        }
    }
}

/// `∂I1/∂S = 2S`.
pub fn grad_i1(s: &SymTensor3) -> SymTensor3 {
    s.scale(2.0)
}

/// `∂I2/∂S = 3S²`.
pub fn grad_i2(s: &SymTensor3) -> SymTensor3 {
    s.square().scale(3.0)
}

/// `∂B1/∂S = SΩ² + Ω²S`.
pub fn grad_b1(s: &SymTensor3, omega: &SkewTensor3) -> SymTensor3 {
    let w2 = omega.square().t();
    (s.t() * w2 + w2 * s.t()).sym_part()
}

/// `B2 = tr(Ω²)` does not depend on `S`.
pub fn grad_b2() -> SymTensor3 {
    SymTensor3::ZERO
}

/// `∂B3/∂S = Ω²`.
pub fn grad_b3(omega: &SkewTensor3) -> SymTensor3 {
    omega.square()
}

/// `∂B4/∂S`: symmetric part of `C = SΩ²SΩ + Ω²SΩS + ΩS²Ω²`, i.e.
/// `½(SΩ²SΩ − ΩSΩ²S + Ω²SΩS − SΩSΩ² + ΩS²Ω² − Ω²S²Ω)`.
pub fn grad_b4(s: &SymTensor3, omega: &SkewTensor3) -> SymTensor3 {
    let s = s.t();
    let w = omega.t();
    let w2 = w * w;
    let c = s * w2 * s * w + w2 * s * w * s + w * s * s * w2;
    c.sym_part()
}

/// Perturbation direction and step for a directional difference.
#[derive(Debug, Clone, Copy)]
pub struct SymDirection {
    pub h: SymTensor3,
    pub step: f64,
}

impl SymDirection {
    pub fn new(h: SymTensor3, step: f64) -> Result<Self, CalculusError> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(CalculusError::BadStep(step));
        }
        Ok(SymDirection { h, step })
    }
}

/// Step `1e-5 · max(|S|, reference_scale)`.
pub fn default_step(s: &SymTensor3, reference_scale: f64) -> f64 {
    FD_RELATIVE_STEP * s.norm().max(reference_scale)
}

/// Central difference `(f(S + εH) − f(S − εH)) / 2ε`.
pub fn fd_directional<F>(f: F, s: &SymTensor3, dir: &SymDirection) -> Result<f64, CalculusError>
where
    F: Fn(&SymTensor3) -> f64,
{
    let hp = dir.h.scale(dir.step);
    let plus = f(&(*s + hp));
    if !plus.is_finite() {
        return Err(CalculusError::NonFinite { value: plus, offset: dir.step });
    }
    let minus = f(&(*s - hp));
    if !minus.is_finite() {
        return Err(CalculusError::NonFinite { value: minus, offset: -dir.step });
    }
    Ok((plus - minus) / (2.0 * dir.step))
}

/// Gradient assembled from central differences along the orthonormal
/// symmetric basis.
pub fn fd_gradient<F>(f: F, s: &SymTensor3, step: f64) -> Result<SymTensor3, CalculusError>
where
    F: Fn(&SymTensor3) -> f64,
{
    let mut g = SymTensor3::ZERO;
    for e in symmetric_basis() {
        let d = fd_directional(&f, s, &SymDirection::new(e, step)?)?;
        g += e.scale(d);
    }
    Ok(g)
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(analytic: &SymTensor3, numeric: &SymTensor3) -> f64 {
    let scale = analytic.norm().max(numeric.norm());
    if scale == 0.0 {
        return 0.0;
    }
    (*analytic - *numeric).norm() / scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckEntry {
    pub invariant: Invariant,
    pub max_relative_error: f64,
    pub worst_state: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub states: usize,
    pub tolerance: f64,
    pub entries: Vec<GradCheckEntry>,
    pub passed: bool,
}

/// Compares every closed-form invariant gradient with the central-difference
/// oracle over the given states.
pub fn gradcheck(states: &[(SymTensor3, SkewTensor3)], tolerance: f64) -> Result<GradCheckReport, CalculusError> {
    let mut entries = Vec::new();
    for inv in Invariant::ALL {
        let mut worst = 0.0_f64;
        let mut worst_state = 0;
        for (k, (s, w)) in states.iter().enumerate() {
            let step = default_step(s, 1.0);
            let fd = fd_gradient(|x| inv.value(x, w), s, step)?;
            let err = relative_error(&inv.gradient(s, w), &fd);
            if err > worst {
                worst = err;
                worst_state = k;
            }
        }
        entries.push(GradCheckEntry {
            invariant: inv,
            max_relative_error: worst,
            worst_state,
            passed: worst <= tolerance,
        });
    }
    let passed = entries.iter().all(|e| e.passed);
    Ok(GradCheckReport { states: states.len(), tolerance, entries, passed })
}

/// Matrix of the tangent map `H ↦ D_S τ^d[H]` in the orthonormal deviatoric
/// basis, with its relative asymmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentSymmetryReport {
    pub matrix: [[f64; 5]; 5],
    /// `‖M − Mᵀ‖ / ‖M‖` (Frobenius).
    pub asymmetry: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Central-difference tangent matrix of a stress map restricted to trace-free
/// perturbations. A stress that is the deviatoric part of `∂φ/∂S` has a
/// symmetric tangent matrix.
pub fn tangent_symmetry<F>(
    stress: F,
    s: &SymTensor3,
    step: f64,
    tolerance: f64,
) -> Result<TangentSymmetryReport, CalculusError>
where
    F: Fn(&SymTensor3) -> Result<SymTensor3, CalculusError>,
{
    if !(step > 0.0) {
        return Err(CalculusError::BadStep(step));
    }
    let basis = deviatoric_basis();
    let mut m = [[0.0; 5]; 5];
    for (j, ej) in basis.iter().enumerate() {
        let hp = ej.scale(step);
        let plus = stress(&(*s + hp))?;
        let minus = stress(&(*s - hp))?;
        let d = (plus - minus).scale(1.0 / (2.0 * step));
        for (i, ei) in basis.iter().enumerate() {
            m[i][j] = ei.contract(&d);
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            num += (m[i][j] - m[j][i]).powi(2);
            den += m[i][j] * m[i][j];
        }
    }
    let asymmetry = if den == 0.0 { 0.0 } else { (num / den).sqrt() };
    Ok(TangentSymmetryReport { matrix: m, asymmetry, tolerance, passed: asymmetry <= tolerance })
}

/// Self-adjointness test of a closure's `S`-derivative at `(S, Ω)`: passes
/// when the model behaves as the derivative of a scalar potential.
pub fn hessian_symmetry_check(
    model: &ClosureModel,
    s: &SymTensor3,
    omega: &SkewTensor3,
    tolerance: f64,
) -> Result<TangentSymmetryReport, CalculusError> {
    let step = default_step(s, 1e-300);
    tangent_symmetry(
        |x| {
            model
                .evaluate(x, omega)
                .map(|r| r.tau_dev)
                .map_err(|source| CalculusError::Model { s: *x, source })
        },
        s,
        step,
        tolerance,
    )
}

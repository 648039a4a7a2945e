//! Closure evaluation.
//!
//! Every model is written in the seven-term tensor basis
//!
//! ```text
//! S^d, (S²)^d, (Ω²)^d, (ΩSΩ)^d, [S,Ω], [S²,Ω], [ΩSΩ,Ω]
//! ```
//!
//! and differs only in how the seven scalar coefficients are produced:
//!
//! - [`GeneralAlpha`]: arbitrary functions of `(I1, I2, B1, B2, B3, B4)`.
//! - [`ScaledAlpha`]: functions `α_k⁰` of `(v1, …, v5)`, divided by the power of
//!   `|S|` that makes the stress scale like `|S|` itself.
//! - [`PotentialModel`]: coefficients derived from a single generator
//!   `g(v1, v3, v4)`; the stress is the deviatoric `S`-derivative of `I1·g`.
//! - [`ReferenceModel`]: literature closures (see [`crate::zoo`]).
//!
//! Only the deviatoric part of the stress is modeled; the isotropic part is
//! absorbed into the pressure. The first basis term is `S^d` rather than `S`,
//! which is the same tensor for incompressible states.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gfunc::{GFunction, PolynomialG};
use crate::invariants::{
    primitive_invariants, scaled_from_norm, InvariantSet, PrimitiveInvariants, SingularState, SingularityPolicy,
};
use crate::tensor::{commutator, SkewTensor3, SymTensor3};
use crate::zoo::ReferenceModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Singular(#[from] SingularState),
    #[error("coefficient {index} is not finite ({value}) at arguments {arguments:?}")]
    Coefficient { index: usize, value: f64, arguments: Vec<f64> },
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// A scalar coefficient function of the invariant vector.
#[derive(Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientFn {
    Constant(f64),
    /// `constant + Σ linear[k] · x[k]`; missing trailing entries are zero.
    Affine { constant: f64, linear: Vec<f64> },
    #[serde(skip)]
    Custom(CustomCoefficient),
}

/// Named callable coefficient. Not serializable.
#[derive(Clone)]
pub struct CustomCoefficient {
    pub name: String,
    pub f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl fmt::Debug for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientFn::Constant(c) => write!(f, "Constant({c})"),
            CoefficientFn::Affine { constant, linear } => {
                f.debug_struct("Affine").field("constant", constant).field("linear", linear).finish()
            }
            CoefficientFn::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

impl Default for CoefficientFn {
    fn default() -> Self {
        CoefficientFn::Constant(0.0)
    }
}

impl CoefficientFn {
    pub fn custom<F>(name: &str, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        CoefficientFn::Custom(CustomCoefficient { name: name.to_string(), f: Arc::new(f) })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            CoefficientFn::Constant(c) => *c,
            CoefficientFn::Affine { constant, linear } => {
                constant + linear.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            }
            CoefficientFn::Custom(c) => (c.f)(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            CoefficientFn::Constant(c) => *c == 0.0,
            CoefficientFn::Affine { constant, linear } => *constant == 0.0 && linear.iter().all(|a| *a == 0.0),
            CoefficientFn::Custom(_) => false,
        }
    }
}

fn eval_all(alpha: &[CoefficientFn; 7], x: &[f64]) -> Result<[f64; 7], ModelError> {
    let mut out = [0.0; 7];
    for (k, a) in alpha.iter().enumerate() {
        let v = a.eval(x);
        if !v.is_finite() {
            return Err(ModelError::Coefficient { index: k + 1, value: v, arguments: x.to_vec() });
        }
        out[k] = v;
    }
    Ok(out)
}

/// Power of `|S|` dividing `α_k⁰` in the scale-invariant form.
pub const SCALED_NORM_POWERS: [i32; 7] = [0, 1, 1, 2, 1, 2, 3];

/// `α_1 … α_7` as functions of `[I1, I2, B1, B2, B3, B4]`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GeneralAlpha {
    pub alpha: [CoefficientFn; 7],
}

/// `α_1⁰ … α_7⁰` as functions of `[v1, v2, v3, v4, v5]`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScaledAlpha {
    pub alpha: [CoefficientFn; 7],
}

/// Potential-derived closure generated by `g(v1, v3, v4)`.
#[derive(Debug, Clone)]
pub struct PotentialModel {
    pub g: GFunction,
}

impl PotentialModel {
    /// `(α1⁰, α2⁰, α3⁰) = (2g − 3v1 g₁ − 2v3 g₃ − 3v4 g₄, 3g₁, g₄)`.
    pub fn scaled_coefficients(&self, v1: f64, v3: f64, v4: f64) -> [f64; 3] {
        let g = self.g.eval(v1, v3, v4);
        [
            2.0 * g.value - 3.0 * v1 * g.d_v1 - 2.0 * v3 * g.d_v3 - 3.0 * v4 * g.d_v4,
            3.0 * g.d_v1,
            g.d_v4,
        ]
    }

    /// The same model as a [`ScaledAlpha`] with `α4⁰ … α7⁰ = 0`.
    pub fn to_scaled(&self) -> ScaledAlpha {
        let mk = |k: usize, g: GFunction| {
            let p = PotentialModel { g };
            CoefficientFn::custom(&format!("potential_alpha{}", k + 1), move |v: &[f64]| {
                p.scaled_coefficients(v[0], v[2], v[3])[k]
            })
        };
        ScaledAlpha {
            alpha: [
                mk(0, self.g.clone()),
                mk(1, self.g.clone()),
                mk(2, self.g.clone()),
                CoefficientFn::Constant(0.0),
                CoefficientFn::Constant(0.0),
                CoefficientFn::Constant(0.0),
                CoefficientFn::Constant(0.0),
            ],
        }
    }
}

impl ScaledAlpha {
    /// The same model as a [`GeneralAlpha`], with `α_k = I1^{−p_k/2} α_k⁰(v)`.
    pub fn to_general(&self) -> GeneralAlpha {
        let alpha = std::array::from_fn(|k| {
            let inner = self.alpha[k].clone();
            let power = SCALED_NORM_POWERS[k];
            CoefficientFn::custom(&format!("scaled_alpha{}", k + 1), move |x: &[f64]| {
                let prim = PrimitiveInvariants::from_array([x[0], x[1], x[2], x[3], x[4], x[5]]);
                let n = prim.i1.sqrt();
                let v = scaled_from_norm(&prim, n);
                prim.i1.powf(-(power as f64) / 2.0) * inner.eval(&v.as_array())
            })
        });
        GeneralAlpha { alpha }
    }
}

#[derive(Debug, Clone)]
pub enum ClosureForm {
    General(GeneralAlpha),
    Scaled(ScaledAlpha),
    Potential(PotentialModel),
    Reference(ReferenceModel),
}

/// A closure model with its singularity policy.
#[derive(Debug, Clone)]
pub struct ClosureModel {
    pub form: ClosureForm,
    pub policy: SingularityPolicy,
}

/// The seven basis tensors at one state.
pub fn basis_terms(s: &SymTensor3, omega: &SkewTensor3) -> [SymTensor3; 7] {
    let st = s.t();
    let w = omega.t();
    let s2 = st * st;
    let w2 = w * w;
    let wsw = w * st * w;
    [
        s.deviator(),
        s2.deviator().sym_part(),
        w2.deviator().sym_part(),
        wsw.deviator().sym_part(),
        commutator(&st, &w).sym_part(),
        commutator(&s2, &w).sym_part(),
        commutator(&wsw, &w).sym_part(),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressResult {
    pub tau_dev: SymTensor3,
    /// Effective coefficients multiplying each basis tensor.
    pub coefficients: [f64; 7],
    pub basis_terms: [SymTensor3; 7],
}

impl StressResult {
    pub fn assemble(coefficients: [f64; 7], basis_terms: [SymTensor3; 7]) -> Self {
        let tau_dev = coefficients
            .iter()
            .zip(basis_terms.iter())
            .fold(SymTensor3::ZERO, |acc, (c, b)| acc + b.scale(*c));
        StressResult { tau_dev, coefficients, basis_terms }
    }
}

impl ClosureModel {
    pub fn new(form: ClosureForm) -> Self {
        ClosureModel { form, policy: SingularityPolicy::default() }
    }

    pub fn with_policy(mut self, policy: SingularityPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn general(alpha: [CoefficientFn; 7]) -> Self {
        Self::new(ClosureForm::General(GeneralAlpha { alpha }))
    }

    pub fn scaled(alpha: [CoefficientFn; 7]) -> Self {
        Self::new(ClosureForm::Scaled(ScaledAlpha { alpha }))
    }

    pub fn potential(g: GFunction) -> Self {
        Self::new(ClosureForm::Potential(PotentialModel { g }))
    }

    pub fn polynomial_potential(p: PolynomialG) -> Self {
        Self::potential(GFunction::Polynomial(p))
    }

    pub fn reference(m: ReferenceModel) -> Self {
        Self::new(ClosureForm::Reference(m))
    }

    /// `τ = 0`.
    pub fn zero() -> Self {
        Self::general(Default::default())
    }

    /// `τ^d = 2ν S`, the viscous stress written as a closure.
    pub fn viscous(nu: f64) -> Self {
        let mut alpha: [CoefficientFn; 7] = Default::default();
        alpha[0] = CoefficientFn::Constant(2.0 * nu);
        Self::general(alpha)
    }

    /// True when every coefficient is identically zero.
    pub fn is_zero(&self) -> bool {
        matches!(&self.form, ClosureForm::General(m) if m.alpha.iter().all(CoefficientFn::is_zero))
    }

    /// Scales as `|S|` under `(S, Ω) → (λS, λΩ)`.
    pub fn is_scale_invariant(&self) -> bool {
        match &self.form {
            ClosureForm::Scaled(_) | ClosureForm::Potential(_) => true,
            ClosureForm::General(_) => false,
            ClosureForm::Reference(r) => r.is_scale_invariant(),
        }
    }

    pub fn label(&self) -> String {
        match &self.form {
            ClosureForm::General(_) => "general".into(),
            ClosureForm::Scaled(_) => "scaled".into(),
            ClosureForm::Potential(p) => format!("potential({})", p.g.name()),
            ClosureForm::Reference(r) => r.name().into(),
        }
    }

    /// Effective basis coefficients at a state.
    pub fn coefficients(&self, s: &SymTensor3, omega: &SkewTensor3) -> Result<[f64; 7], ModelError> {
        let prim = primitive_invariants(s, omega);
        match &self.form {
            ClosureForm::General(m) => eval_all(&m.alpha, &prim.as_array()),
            ClosureForm::Scaled(m) => {
                let n = self.policy.effective_norm(&prim)?;
                let v = scaled_from_norm(&prim, n);
                let a0 = eval_all(&m.alpha, &v.as_array())?;
                Ok(std::array::from_fn(|k| a0[k] / n.powi(SCALED_NORM_POWERS[k])))
            }
            ClosureForm::Potential(m) => {
                let n = self.policy.effective_norm(&prim)?;
                let v = scaled_from_norm(&prim, n);
                let [a1, a2, a3] = m.scaled_coefficients(v.v1, v.v3, v.v4);
                let out = [a1, a2 / n, a3 / n, 0.0, 0.0, 0.0, 0.0];
                if let Some(k) = out.iter().position(|c| !c.is_finite()) {
                    return Err(ModelError::Coefficient { index: k + 1, value: out[k], arguments: v.as_array().to_vec() });
                }
                Ok(out)
            }
            ClosureForm::Reference(r) => r.coefficients(&prim, &self.policy),
        }
    }

    /// Deviatoric subgrid stress at `(S, Ω)`.
    pub fn evaluate(&self, s: &SymTensor3, omega: &SkewTensor3) -> Result<StressResult, ModelError> {
        let c = self.coefficients(s, omega)?;
        Ok(StressResult::assemble(c, basis_terms(s, omega)))
    }

    /// Invariants used by the model at this state, under its policy.
    pub fn invariants(&self, s: &SymTensor3, omega: &SkewTensor3) -> Result<InvariantSet, SingularState> {
        crate::invariants::invariant_set(s, omega, &self.policy)
    }
}

/// Stress-only evaluation; the basis terms are not kept. Used in solver loops.
pub fn evaluate_tau(model: &ClosureModel, s: &SymTensor3, omega: &SkewTensor3) -> Result<SymTensor3, ModelError> {
    model.evaluate(s, omega).map(|r| r.tau_dev)
}

/// `Φ_T = tr((2νS − τ) S)`.
pub fn total_dissipation(model: &ClosureModel, nu: f64, s: &SymTensor3, omega: &SkewTensor3) -> Result<f64, ModelError> {
    let tau = model.evaluate(s, omega)?.tau_dev;
    Ok(2.0 * nu * s.contract(s) - tau.contract(s))
}

/// One row of a stress batch.
#[derive(Debug, Clone, PartialEq)]
pub struct StressRow {
    pub id: usize,
    pub result: StressResult,
    pub dissipation: f64,
}

/// Evaluates a batch of states in parallel; output order follows input order.
pub fn evaluate_batch(
    model: &ClosureModel,
    nu: f64,
    states: &[(SymTensor3, SkewTensor3)],
) -> Vec<Result<StressRow, ModelError>> {
    states
        .par_iter()
        .enumerate()
        .map(|(id, (s, w))| {
            let result = model.evaluate(s, w)?;
            let dissipation = 2.0 * nu * s.contract(s) - result.tau_dev.contract(s);
            Ok(StressRow { id, result, dissipation })
        })
        .collect()
}

/// Columnar CSV: id, six stress components, seven coefficients, `Φ_T`.
pub fn write_stress_csv<W: Write>(mut w: W, rows: &[StressRow]) -> io::Result<()> {
    writeln!(
        w,
        "id,tau_xx,tau_yy,tau_zz,tau_xy,tau_yz,tau_xz,c1,c2,c3,c4,c5,c6,c7,phi_total"
    )?;
    for row in rows {
        write!(w, "{}", row.id)?;
        for c in row.result.tau_dev.components() {
            write!(w, ",{c:?}")?;
        }
        for c in row.result.coefficients {
            write!(w, ",{c:?}")?;
        }
        writeln!(w, ",{:?}", row.dissipation)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfunc::make_polynomial_g;
    use crate::sampling::unit_states;
    use crate::tensor::{decompose, Tensor3};

    fn plane_shear() -> (SymTensor3, SkewTensor3) {
        let d = decompose(&Tensor3::new([[0.0, 1.0, 0.0], [0.0; 3], [0.0; 3]]).unwrap()).unwrap();
        (d.s, d.omega)
    }

    fn only(k: usize, f: CoefficientFn) -> [CoefficientFn; 7] {
        let mut a: [CoefficientFn; 7] = Default::default();
        a[k] = f;
        a
    }

    fn close(a: &SymTensor3, b: &SymTensor3, tol: f64) -> bool {
        (a.t() - b.t()).max_abs() <= tol
    }

    #[test]
    fn general_examples() {
        let (s, w) = plane_shear();
        let m = ClosureModel::general(only(0, CoefficientFn::Constant(-0.2)));
        assert!(close(&m.evaluate(&s, &w).unwrap().tau_dev, &s.scale(-0.2), 1e-16));

        let m = ClosureModel::general(only(2, CoefficientFn::Constant(1.0)));
        let tau = m.evaluate(&s, &w).unwrap().tau_dev;
        assert!(close(&tau, &SymTensor3::diag(-1.0 / 12.0, -1.0 / 12.0, 1.0 / 6.0), 1e-16));

        let s = SymTensor3::diag(0.3, -0.1, -0.2);
        let m = ClosureModel::general(only(1, CoefficientFn::Constant(1.0)));
        let tau = m.evaluate(&s, &SkewTensor3::ZERO).unwrap().tau_dev;
        assert!(close(&tau, &s.square().deviator(), 0.0));
    }

    #[test]
    fn scaled_examples() {
        let (s, w) = plane_shear();
        let m = ClosureModel::scaled(only(0, CoefficientFn::Constant(-0.3)));
        let tau = m.evaluate(&s, &w).unwrap().tau_dev;
        assert!(close(&tau, &s.scale(-0.3), 1e-16));
        let scaled = m.evaluate(&s.scale(4.0), &w.scale(4.0)).unwrap().tau_dev;
        assert!(close(&scaled, &tau.scale(4.0), 1e-15));

        // α7⁰ = 1 at plane shear: [ΩSΩ, Ω] / |S|³ by direct arithmetic
        let m = ClosureModel::scaled(only(6, CoefficientFn::Constant(1.0)));
        let tau = m.evaluate(&s, &w).unwrap().tau_dev;
        let (st, wt) = (s.t(), w.t());
        let wsw = wt * st * wt;
        let direct = (wsw * wt - wt * wsw).scale(1.0 / 0.5_f64.powf(1.5));
        assert!((tau.t() - direct).max_abs() < 1e-15);
    }

    #[test]
    fn scaled_singular_policy() {
        let w = SkewTensor3::from_axial([0.0, 0.0, 1.0]);
        let m = ClosureModel::scaled(only(1, CoefficientFn::Constant(1.0)));
        assert!(matches!(m.evaluate(&SymTensor3::ZERO, &w), Err(ModelError::Singular(_))));
        let m = m.with_policy(SingularityPolicy::Regularize { epsilon: 1e-8 });
        assert!(m.evaluate(&SymTensor3::ZERO, &w).is_ok());
    }

    #[test]
    fn potential_examples() {
        let nu = 0.02;
        let (s, w) = plane_shear();
        let m = ClosureModel::polynomial_potential(PolynomialG::constant(nu));
        assert!(close(&m.evaluate(&s, &w).unwrap().tau_dev, &s.scale(2.0 * nu), 1e-17));

        for (s, w) in unit_states(20, 4) {
            let n = s.norm();
            let inv = m.invariants(&s, &w).unwrap().scaled;

            let g_v1 = ClosureModel::polynomial_potential(PolynomialG { c1: nu, ..Default::default() });
            let expect = s.scale(-nu * inv.v1) + s.square().deviator().scale(3.0 * nu / n);
            assert!(close(&g_v1.evaluate(&s, &w).unwrap().tau_dev, &expect, 1e-15));
            let mut alt = only(0, CoefficientFn::Affine { constant: 0.0, linear: vec![-nu] });
            alt[1] = CoefficientFn::Constant(3.0 * nu);
            let alt = ClosureModel::scaled(alt).evaluate(&s, &w).unwrap().tau_dev;
            assert!(close(&alt, &expect, 1e-15));

            let g_v4 = ClosureModel::polynomial_potential(PolynomialG { l4: nu, ..Default::default() });
            let expect = s.scale(-nu * inv.v4) + w.square().deviator().scale(nu / n);
            assert!(close(&g_v4.evaluate(&s, &w).unwrap().tau_dev, &expect, 1e-15));
        }
    }

    #[test]
    fn dissipation_examples() {
        let nu = 0.01;
        let (s, w) = plane_shear();
        assert_eq!(total_dissipation(&ClosureModel::zero(), nu, &s, &w).unwrap(), 2.0 * nu * 0.5);
        let g = make_polynomial_g(PolynomialG::constant(2.0 * nu)).unwrap();
        let phi = total_dissipation(&ClosureModel::potential(g), nu, &s, &w).unwrap();
        assert!((phi + nu).abs() < 1e-17);
    }

    #[test]
    fn commutator_terms_do_not_dissipate() {
        // tr([A, Ω] S) for the three commutator terms, evaluated per state
        for (s, w) in unit_states(200, 6) {
            let b = basis_terms(&s, &w);
            for t in &b[4..] {
                assert!(t.contract(&s).abs() < 1e-15, "{}", t.contract(&s));
            }
        }
    }

    #[test]
    fn result_is_weighted_sum_of_basis() {
        let mut alpha: [CoefficientFn; 7] = Default::default();
        for (k, a) in alpha.iter_mut().enumerate() {
            *a = CoefficientFn::Affine { constant: 0.1 * k as f64, linear: vec![0.2, -0.1, 0.05] };
        }
        let m = ClosureModel::scaled(alpha);
        for (s, w) in unit_states(50, 7) {
            let r = m.evaluate(&s, &w).unwrap();
            let sum = r
                .coefficients
                .iter()
                .zip(r.basis_terms.iter())
                .fold(SymTensor3::ZERO, |acc, (c, b)| acc + b.scale(*c));
            assert_eq!(sum, r.tau_dev);
            assert!(r.tau_dev.trace().abs() <= 1e-12 * r.tau_dev.norm());
        }
    }

    #[test]
    fn coefficient_failure_carries_arguments() {
        let m = ClosureModel::general(only(3, CoefficientFn::custom("log_i1", |x| x[0].ln())));
        let err = m.evaluate(&SymTensor3::ZERO, &SkewTensor3::ZERO).unwrap_err();
        match err {
            ModelError::Coefficient { index, arguments, .. } => {
                assert_eq!(index, 4);
                assert_eq!(arguments.len(), 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stress_csv_layout() {
        let (s, w) = plane_shear();
        let rows: Vec<StressRow> = evaluate_batch(&ClosureModel::viscous(0.5), 0.0, &[(s, w)])
            .into_iter()
            .collect::<Result<_, _>>()
            .unwrap();
        let mut buf = Vec::new();
        write_stress_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].split(',').count(), 15);
        assert!(lines[1].starts_with("0,0.0,0.0,0.0,0.5,"));
    }
}

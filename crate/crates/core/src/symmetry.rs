//! Finite symmetry transformations of the incompressible Navier–Stokes
//! equations and equivariance checks for closures.
//!
//! Five groups act on `(t, x, u, p)`:
//!
//! | group          | map                                                        |
//! |----------------|------------------------------------------------------------|
//! | time shift     | `(t + ε, x, u, p)`                                         |
//! | Galilean       | `(t, x + α(t), u + α̇(t), p − ρ α̈(t)·x)`                    |
//! | rotation       | `(t, R x, R u, p)`                                          |
//! | pressure shift | `(t, x, u, p + ξ(t))`                                      |
//! | scaling        | `(e^{2ε} t, e^{ε} x, e^{−ε} u, e^{−2ε} p)`                  |
//!
//! The infinite-dimensional groups are sampled with polynomial `α(t)` and
//! `ξ(t)`. A closure is equivariant when `τ` at the transformed state equals
//! the transformation law applied to `τ`: `R τ Rᵀ` for rotations, `e^{−2ε} τ`
//! for scaling and `τ` for the rest.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::models::{ClosureModel, ModelError};
use crate::sampling::{rotation, rotation_about, stream_rng, unit_states};
use crate::tensor::{decompose, SkewTensor3, SymTensor3, Tensor3};

/// Denominator floor for relative defects.
pub const DEFECT_FLOOR: f64 = 1e-300;

/// Polynomial `c0 + c1 t + c2 t² + …`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly((0..n).map(|k| self.0.get(k).unwrap_or(&0.0) + other.0.get(k).unwrap_or(&0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    fn random<R: Rng + ?Sized>(rng: &mut R, degree: usize, amplitude: f64) -> Poly {
        Poly((0..=degree).map(|_| amplitude * rng.random_range(-1.0..1.0)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    TimeShift,
    Galilean,
    Rotation,
    PressureShift,
    Scaling,
}

impl GroupKind {
    pub const ALL: [GroupKind; 5] = [
        GroupKind::TimeShift,
        GroupKind::Galilean,
        GroupKind::Rotation,
        GroupKind::PressureShift,
        GroupKind::Scaling,
    ];

    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "time_shift" | "time-shift" | "gt" | "g_t" => Some(GroupKind::TimeShift),
            "galilean" | "gal" => Some(GroupKind::Galilean),
            "rotation" | "so3" | "so(3)" => Some(GroupKind::Rotation),
            "pressure_shift" | "pressure-shift" | "gp" | "g_p" => Some(GroupKind::PressureShift),
            "scaling" | "gs" | "g_s" => Some(GroupKind::Scaling),
            _ => None,
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GroupKind::TimeShift => "time_shift",
            GroupKind::Galilean => "galilean",
            GroupKind::Rotation => "rotation",
            GroupKind::PressureShift => "pressure_shift",
            GroupKind::Scaling => "scaling",
        };
        f.write_str(s)
    }
}

/// One element of one of the five groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupElement {
    TimeShift(f64),
    /// Frame displacement `α(t)`, one polynomial per component.
    Galilean([Poly; 3]),
    Rotation(Tensor3),
    PressureShift(Poly),
    Scaling(f64),
}

/// How `τ` must transform for the closure to respect a group element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauLaw {
    Identity,
    Conjugate(Tensor3),
    Scale(f64),
}

impl TauLaw {
    pub fn apply(&self, tau: &SymTensor3) -> SymTensor3 {
        match self {
            TauLaw::Identity => *tau,
            TauLaw::Conjugate(r) => tau.conjugate(r),
            TauLaw::Scale(f) => tau.scale(*f),
        }
    }
}

impl GroupElement {
    /// Rotation element; `r` must be orthogonal to `1e-12` with positive
    /// determinant.
    pub fn rotation(r: Tensor3) -> Result<Self, String> {
        let defect = (r.matmul(&r.transpose()) - Tensor3::IDENTITY).frobenius_norm();
        if defect > 1e-12 || r.determinant() <= 0.0 {
            return Err(format!("not a proper rotation: |RRᵀ − I| = {defect:e}, det = {}", r.determinant()));
        }
        Ok(GroupElement::Rotation(r))
    }

    pub fn kind(&self) -> GroupKind {
        match self {
            GroupElement::TimeShift(_) => GroupKind::TimeShift,
            GroupElement::Galilean(_) => GroupKind::Galilean,
            GroupElement::Rotation(_) => GroupKind::Rotation,
            GroupElement::PressureShift(_) => GroupKind::PressureShift,
            GroupElement::Scaling(_) => GroupKind::Scaling,
        }
    }

    /// Random element with size parameter `amplitude`: the shift or scaling
    /// exponent, the rotation angle, or the polynomial coefficient range
    /// (quartic `α`, `ξ`).
    pub fn random<R: Rng + ?Sized>(kind: GroupKind, amplitude: f64, rng: &mut R) -> Self {
        match kind {
            GroupKind::TimeShift => GroupElement::TimeShift(amplitude),
            GroupKind::Scaling => GroupElement::Scaling(amplitude),
            GroupKind::Galilean => GroupElement::Galilean(std::array::from_fn(|_| Poly::random(rng, 4, amplitude))),
            GroupKind::PressureShift => GroupElement::PressureShift(Poly::random(rng, 4, amplitude)),
            GroupKind::Rotation => {
                if amplitude == 0.0 {
                    GroupElement::Rotation(rotation(rng))
                } else {
                    let axis: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                    GroupElement::Rotation(rotation_about(axis, amplitude))
                }
            }
        }
    }

    /// Image of the space-time point `(t, x)`.
    pub fn map_point(&self, t: f64, x: [f64; 3]) -> (f64, [f64; 3]) {
        match self {
            GroupElement::TimeShift(e) => (t + e, x),
            GroupElement::Galilean(a) => (t, [x[0] + a[0].eval(t), x[1] + a[1].eval(t), x[2] + a[2].eval(t)]),
            GroupElement::Rotation(r) => (t, r.apply(x)),
            GroupElement::PressureShift(_) => (t, x),
            GroupElement::Scaling(e) => ((2.0 * e).exp() * t, x.map(|c| e.exp() * c)),
        }
    }

    /// Preimage of the space-time point `(t̂, x̂)`.
    pub fn inverse_point(&self, t: f64, x: [f64; 3]) -> (f64, [f64; 3]) {
        match self {
            GroupElement::TimeShift(e) => (t - e, x),
            GroupElement::Galilean(a) => (t, [x[0] - a[0].eval(t), x[1] - a[1].eval(t), x[2] - a[2].eval(t)]),
            GroupElement::Rotation(r) => (t, r.transpose().apply(x)),
            GroupElement::PressureShift(_) => (t, x),
            GroupElement::Scaling(e) => ((-2.0 * e).exp() * t, x.map(|c| (-e).exp() * c)),
        }
    }

    /// `g2 ∘ g1` (apply `self` first, then `other`) for elements of the same
    /// group. For Galilean elements the result matches the composition up to
    /// a pressure shift `−ρ α̈₂(t)·α₁(t)`.
    pub fn then(&self, other: &GroupElement) -> Option<GroupElement> {
        use GroupElement::*;
        match (self, other) {
            (TimeShift(a), TimeShift(b)) => Some(TimeShift(a + b)),
            (Scaling(a), Scaling(b)) => Some(Scaling(a + b)),
            (Rotation(r1), Rotation(r2)) => Some(Rotation(r2.matmul(r1))),
            (PressureShift(a), PressureShift(b)) => Some(PressureShift(a.add(b))),
            (Galilean(a), Galilean(b)) => Some(Galilean(std::array::from_fn(|k| a[k].add(&b[k])))),
            _ => None,
        }
    }
}

/// A velocity/pressure field with an exact velocity gradient.
pub trait AnalyticField: Send + Sync {
    fn velocity(&self, t: f64, x: [f64; 3]) -> [f64; 3];
    /// `grad[i][j] = ∂u_i/∂x_j`.
    fn gradient(&self, t: f64, x: [f64; 3]) -> Tensor3;
    fn pressure(&self, t: f64, x: [f64; 3]) -> f64;
    fn divergence_free(&self) -> bool;
    fn name(&self) -> String;
    /// Volumetric mass density, used only by the Galilean pressure term.
    fn density(&self) -> f64 {
        1.0
    }
}

pub type FieldRef = Arc<dyn AnalyticField>;

/// `u = (rate · x₂, 0, 0)`.
#[derive(Debug, Clone, Copy)]
pub struct PlaneShear {
    pub rate: f64,
}

impl AnalyticField for PlaneShear {
    fn velocity(&self, _t: f64, x: [f64; 3]) -> [f64; 3] {
        [self.rate * x[1], 0.0, 0.0]
    }
    fn gradient(&self, _t: f64, _x: [f64; 3]) -> Tensor3 {
        Tensor3([[0.0, self.rate, 0.0], [0.0; 3], [0.0; 3]])
    }
    fn pressure(&self, _t: f64, _x: [f64; 3]) -> f64 {
        0.0
    }
    fn divergence_free(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        "plane_shear".into()
    }
}

/// Rigid rotation about `x₃` with angular velocity `omega`.
#[derive(Debug, Clone, Copy)]
pub struct SolidRotation {
    pub omega: f64,
}

impl AnalyticField for SolidRotation {
    fn velocity(&self, _t: f64, x: [f64; 3]) -> [f64; 3] {
        [-self.omega * x[1], self.omega * x[0], 0.0]
    }
    fn gradient(&self, _t: f64, _x: [f64; 3]) -> Tensor3 {
        Tensor3([[0.0, -self.omega, 0.0], [self.omega, 0.0, 0.0], [0.0; 3]])
    }
    fn pressure(&self, _t: f64, x: [f64; 3]) -> f64 {
        0.5 * self.omega * self.omega * (x[0] * x[0] + x[1] * x[1])
    }
    fn divergence_free(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        "solid_rotation".into()
    }
}

/// Decaying Taylor–Green vortex with wavenumber `k`.
#[derive(Debug, Clone, Copy)]
pub struct TaylorGreen {
    pub amplitude: f64,
    pub k: f64,
    pub nu: f64,
}

impl TaylorGreen {
    fn decay(&self, t: f64) -> f64 {
        self.amplitude * (-3.0 * self.nu * self.k * self.k * t).exp()
    }
}

impl AnalyticField for TaylorGreen {
    fn velocity(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let a = self.decay(t);
        let (sx, cx) = (self.k * x[0]).sin_cos();
        let (sy, cy) = (self.k * x[1]).sin_cos();
        let cz = (self.k * x[2]).cos();
        [a * sx * cy * cz, -a * cx * sy * cz, 0.0]
    }
    fn gradient(&self, t: f64, x: [f64; 3]) -> Tensor3 {
        let a = self.decay(t) * self.k;
        let (sx, cx) = (self.k * x[0]).sin_cos();
        let (sy, cy) = (self.k * x[1]).sin_cos();
        let (sz, cz) = (self.k * x[2]).sin_cos();
        Tensor3([
            [a * cx * cy * cz, -a * sx * sy * cz, -a * sx * cy * sz],
            [a * sx * sy * cz, -a * cx * cy * cz, a * cx * sy * sz],
            [0.0; 3],
        ])
    }
    fn pressure(&self, t: f64, x: [f64; 3]) -> f64 {
        let a = self.decay(t);
        let k2 = 2.0 * self.k;
        a * a / 16.0 * ((k2 * x[0]).cos() + (k2 * x[1]).cos()) * ((k2 * x[2]).cos() + 2.0)
    }
    fn divergence_free(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        "taylor_green".into()
    }
}

/// Arnold–Beltrami–Childress flow.
#[derive(Debug, Clone, Copy)]
pub struct Abc {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AnalyticField for Abc {
    fn velocity(&self, _t: f64, x: [f64; 3]) -> [f64; 3] {
        [
            self.a * x[2].sin() + self.c * x[1].cos(),
            self.b * x[0].sin() + self.a * x[2].cos(),
            self.c * x[1].sin() + self.b * x[0].cos(),
        ]
    }
    fn gradient(&self, _t: f64, x: [f64; 3]) -> Tensor3 {
        Tensor3([
            [0.0, -self.c * x[1].sin(), self.a * x[2].cos()],
            [self.b * x[0].cos(), 0.0, -self.a * x[2].sin()],
            [-self.b * x[0].sin(), self.c * x[1].cos(), 0.0],
        ])
    }
    fn pressure(&self, t: f64, x: [f64; 3]) -> f64 {
        let u = self.velocity(t, x);
        -0.5 * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
    }
    fn divergence_free(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        "abc".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TrigMode {
    k: [f64; 3],
    a: [f64; 3],
    b: [f64; 3],
    freq: f64,
    p: f64,
}

/// Random solenoidal trigonometric polynomial
/// `u = Σ a_m cos(k_m·x + ω_m t) + b_m sin(k_m·x + ω_m t)` with `a_m, b_m ⊥ k_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomTrig {
    modes: Vec<TrigMode>,
    seed: u64,
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl RandomTrig {
    pub fn new(modes: usize, seed: u64) -> Self {
        let mut rng = stream_rng(seed, 0xF1E1D);
        let project = |v: [f64; 3], k: [f64; 3]| {
            let f = dot(v, k) / dot(k, k);
            [v[0] - f * k[0], v[1] - f * k[1], v[2] - f * k[2]]
        };
        let modes = (0..modes)
            .map(|_| {
                let k: [f64; 3] = loop {
                    let k: [f64; 3] = std::array::from_fn(|_| rng.random_range(-3..=3) as f64);
                    if dot(k, k) > 0.0 {
                        break k;
                    }
                };
                let a = project(std::array::from_fn(|_| rng.random_range(-1.0..1.0)), k);
                let b = project(std::array::from_fn(|_| rng.random_range(-1.0..1.0)), k);
                TrigMode { k, a, b, freq: rng.random_range(-2.0..2.0), p: rng.random_range(-1.0..1.0) }
            })
            .collect();
        RandomTrig { modes, seed }
    }
}

impl AnalyticField for RandomTrig {
    fn velocity(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let mut u = [0.0; 3];
        for m in &self.modes {
            let (s, c) = (dot(m.k, x) + m.freq * t).sin_cos();
            for i in 0..3 {
                u[i] += m.a[i] * c + m.b[i] * s;
            }
        }
        u
    }
    fn gradient(&self, t: f64, x: [f64; 3]) -> Tensor3 {
        let mut g = [[0.0; 3]; 3];
        for m in &self.modes {
            let (s, c) = (dot(m.k, x) + m.freq * t).sin_cos();
            for i in 0..3 {
                let amp = -m.a[i] * s + m.b[i] * c;
                for j in 0..3 {
                    g[i][j] += amp * m.k[j];
                }
            }
        }
        Tensor3(g)
    }
    fn pressure(&self, t: f64, x: [f64; 3]) -> f64 {
        self.modes.iter().map(|m| m.p * (dot(m.k, x) + m.freq * t).cos()).sum()
    }
    fn divergence_free(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("random_trig_{}", self.seed)
    }
}

/// A field seen through a group element.
pub struct TransformedField {
    pub element: GroupElement,
    pub inner: FieldRef,
    d_alpha: [Poly; 3],
    dd_alpha: [Poly; 3],
}

impl AnalyticField for TransformedField {
    fn velocity(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let (t0, x0) = self.element.inverse_point(t, x);
        let u = self.inner.velocity(t0, x0);
        match &self.element {
            GroupElement::Galilean(_) => std::array::from_fn(|k| u[k] + self.d_alpha[k].eval(t0)),
            GroupElement::Rotation(r) => r.apply(u),
            GroupElement::Scaling(e) => u.map(|c| (-e).exp() * c),
            GroupElement::TimeShift(_) | GroupElement::PressureShift(_) => u,
        }
    }

    fn gradient(&self, t: f64, x: [f64; 3]) -> Tensor3 {
        let (t0, x0) = self.element.inverse_point(t, x);
        let g = self.inner.gradient(t0, x0);
        match &self.element {
            GroupElement::Rotation(r) => g.conjugate(r),
            // ∂û/∂x̂ = e^{−ε} ∂u/∂x · e^{−ε}
            GroupElement::Scaling(e) => g.scale((-2.0 * e).exp()),
            _ => g,
        }
    }

    fn pressure(&self, t: f64, x: [f64; 3]) -> f64 {
        let (t0, x0) = self.element.inverse_point(t, x);
        let p = self.inner.pressure(t0, x0);
        match &self.element {
            GroupElement::Galilean(_) => {
                let acc: [f64; 3] = std::array::from_fn(|k| self.dd_alpha[k].eval(t0));
                p - self.inner.density() * dot(acc, x0)
            }
            GroupElement::PressureShift(xi) => p + xi.eval(t0),
            GroupElement::Scaling(e) => (-2.0 * e).exp() * p,
            _ => p,
        }
    }

    fn divergence_free(&self) -> bool {
        self.inner.divergence_free()
    }

    fn name(&self) -> String {
        format!("{}∘{}", self.element.kind(), self.inner.name())
    }

    fn density(&self) -> f64 {
        self.inner.density()
    }
}

/// The transformed solution `ĝ·f`, evaluated in transformed coordinates.
pub fn act_on_field(g: &GroupElement, f: FieldRef) -> FieldRef {
    let (d_alpha, dd_alpha) = match g {
        GroupElement::Galilean(a) => {
            let d: [Poly; 3] = std::array::from_fn(|k| a[k].derivative());
            let dd: [Poly; 3] = std::array::from_fn(|k| d[k].derivative());
            (d, dd)
        }
        _ => Default::default(),
    };
    Arc::new(TransformedField { element: g.clone(), inner: f, d_alpha, dd_alpha })
}

/// Transformed `(S, Ω)` and the law `τ` must obey.
pub fn induced_state_transform(g: &GroupElement, s: &SymTensor3, omega: &SkewTensor3) -> (SymTensor3, SkewTensor3, TauLaw) {
    match g {
        GroupElement::Rotation(r) => (s.conjugate(r), omega.conjugate(r), TauLaw::Conjugate(*r)),
        GroupElement::Scaling(e) => {
            let f = (-2.0 * e).exp();
            (s.scale(f), omega.scale(f), TauLaw::Scale(f))
        }
        _ => (*s, *omega, TauLaw::Identity),
    }
}

/// Largest relative mismatch between a field's gradient and central
/// differences of its velocity at the given points.
pub fn gradient_consistency(f: &dyn AnalyticField, points: &[(f64, [f64; 3])]) -> f64 {
    let h = 1e-5;
    let mut worst = 0.0_f64;
    for &(t, x) in points {
        let g = f.gradient(t, x);
        let mut fd = [[0.0; 3]; 3];
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let (up, um) = (f.velocity(t, xp), f.velocity(t, xm));
            for i in 0..3 {
                fd[i][j] = (up[i] - um[i]) / (2.0 * h);
            }
        }
        let scale = g.frobenius_norm().max(1.0);
        worst = worst.max((g - Tensor3(fd)).frobenius_norm() / scale);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DefectStats {
    pub max: f64,
    pub mean: f64,
    pub min: f64,
    pub count: usize,
    /// Probes skipped because the model was singular there.
    pub skipped: usize,
}

impl DefectStats {
    fn from_values(values: &[f64], skipped: usize) -> Self {
        if values.is_empty() {
            return DefectStats { skipped, ..Default::default() };
        }
        DefectStats {
            max: values.iter().cloned().fold(0.0, f64::max),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            count: values.len(),
            skipped,
        }
    }

    fn merge(parts: &[DefectStats]) -> Self {
        let count: usize = parts.iter().map(|p| p.count).sum();
        let skipped = parts.iter().map(|p| p.skipped).sum();
        if count == 0 {
            return DefectStats { skipped, ..Default::default() };
        }
        DefectStats {
            max: parts.iter().filter(|p| p.count > 0).map(|p| p.max).fold(0.0, f64::max),
            mean: parts.iter().map(|p| p.mean * p.count as f64).sum::<f64>() / count as f64,
            min: parts.iter().filter(|p| p.count > 0).map(|p| p.min).fold(f64::INFINITY, f64::min),
            count,
            skipped,
        }
    }
}

fn relative_defect(actual: &SymTensor3, expected: &SymTensor3, reference: &SymTensor3) -> f64 {
    let num = (*actual - *expected).norm();
    if num == 0.0 {
        0.0
    } else {
        num / reference.norm().max(DEFECT_FLOOR)
    }
}

fn singular_or<T>(r: Result<T, ModelError>, skipped: &mut usize) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(ModelError::Singular(_)) => {
            *skipped += 1;
            None
        }
        Err(_) => {
            *skipped += 1;
            None
        }
    }
}

/// State-level equivariance defect
/// `‖τ(ĝ·state) − law(τ(state))‖ / ‖τ(state)‖` over an ensemble.
pub fn equivariance_defect(model: &ClosureModel, g: &GroupElement, states: &[(SymTensor3, SkewTensor3)]) -> DefectStats {
    let mut values = Vec::with_capacity(states.len());
    let mut skipped = 0;
    for (s, w) in states {
        let Some(tau) = singular_or(model.evaluate(s, w), &mut skipped) else { continue };
        let (s2, w2, law) = induced_state_transform(g, s, w);
        let Some(tau2) = singular_or(model.evaluate(&s2, &w2), &mut skipped) else { continue };
        values.push(relative_defect(&tau2.tau_dev, &law.apply(&tau.tau_dev), &tau.tau_dev));
    }
    DefectStats::from_values(&values, skipped)
}

/// Field-level result: the defect measured after transforming the field and
/// recomputing gradients, and the agreement with the state-level path.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldDefect {
    pub defect: DefectStats,
    /// Largest relative difference between `τ` from the transformed field and
    /// `τ` from the transformed state.
    pub path_disagreement: f64,
    /// Largest `|∇·û|` of the transformed field at the probe points.
    pub max_divergence: f64,
}

/// Field-level equivariance: transform each field, recompute the gradient at
/// the image of each probe point and compare `τ` there with the law applied
/// to `τ` at the original point.
pub fn equivariance_defect_fields(
    model: &ClosureModel,
    g: &GroupElement,
    fields: &[FieldRef],
    points: &[(f64, [f64; 3])],
) -> FieldDefect {
    let mut values = Vec::new();
    let mut skipped = 0;
    let mut path = 0.0_f64;
    let mut max_div = 0.0_f64;
    for f in fields {
        let tf = act_on_field(g, f.clone());
        for &(t, x) in points {
            let grad = f.gradient(t, x);
            let (t2, x2) = g.map_point(t, x);
            let grad2 = tf.gradient(t2, x2);
            if tf.divergence_free() {
                max_div = max_div.max(grad2.trace().abs());
            }
            let d = decompose(&grad).expect("finite analytic gradient");
            let d2 = decompose(&grad2).expect("finite analytic gradient");
            let Some(tau) = singular_or(model.evaluate(&d.s, &d.omega), &mut skipped) else { continue };
            let Some(tau_field) = singular_or(model.evaluate(&d2.s, &d2.omega), &mut skipped) else { continue };
            let (s3, w3, law) = induced_state_transform(g, &d.s, &d.omega);
            let expected = law.apply(&tau.tau_dev);
            values.push(relative_defect(&tau_field.tau_dev, &expected, &tau.tau_dev));
            if let Ok(tau_state) = model.evaluate(&s3, &w3) {
                path = path.max(relative_defect(&tau_field.tau_dev, &tau_state.tau_dev, &tau.tau_dev));
            }
        }
    }
    FieldDefect { defect: DefectStats::from_values(&values, skipped), path_disagreement: path, max_divergence: max_div }
}

/// Fixed probe fields: plane shear, solid rotation, Taylor–Green, ABC and two
/// random solenoidal trigonometric fields.
pub fn probe_fields(seed: u64) -> Vec<FieldRef> {
    vec![
        Arc::new(PlaneShear { rate: 1.0 }),
        Arc::new(SolidRotation { omega: 1.0 }),
        Arc::new(TaylorGreen { amplitude: 1.0, k: 1.0, nu: 0.05 }),
        Arc::new(Abc { a: 1.0, b: 0.7, c: 0.4 }),
        Arc::new(RandomTrig::new(4, seed)),
        Arc::new(RandomTrig::new(6, seed.wrapping_add(1))),
    ]
}

/// Space-time probe points `t ∈ [0, 1]`, `x ∈ [0, 2π]³`.
pub fn probe_points(n: usize, seed: u64) -> Vec<(f64, [f64; 3])> {
    (0..n)
        .map(|k| {
            let mut rng = stream_rng(seed ^ 0x5EE_D0FF_1E1D, k as u64);
            (rng.random_range(0.0..1.0), std::array::from_fn(|_| rng.random_range(0.0..2.0 * PI)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsDefect {
    pub eps: f64,
    pub state: DefectStats,
    pub field: DefectStats,
}

/// Defects of one model under one group over several elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSweep {
    pub group: GroupKind,
    pub elements: usize,
    pub state: DefectStats,
    pub field: DefectStats,
    pub path_disagreement: f64,
    pub max_divergence: f64,
    pub per_eps: Vec<EpsDefect>,
    pub tolerance: f64,
    pub preserved: bool,
}

/// Runs state- and field-level checks for each element.
pub fn group_sweep(
    model: &ClosureModel,
    kind: GroupKind,
    elements: &[(f64, GroupElement)],
    states: &[(SymTensor3, SkewTensor3)],
    fields: &[FieldRef],
    points: &[(f64, [f64; 3])],
    tolerance: f64,
) -> GroupSweep {
    let mut per_eps = Vec::new();
    let mut path = 0.0_f64;
    let mut max_div = 0.0_f64;
    for (eps, g) in elements {
        let state = equivariance_defect(model, g, states);
        let fd = equivariance_defect_fields(model, g, fields, points);
        path = path.max(fd.path_disagreement);
        max_div = max_div.max(fd.max_divergence);
        per_eps.push(EpsDefect { eps: *eps, state, field: fd.defect });
    }
    let state = DefectStats::merge(&per_eps.iter().map(|e| e.state).collect::<Vec<_>>());
    let field = DefectStats::merge(&per_eps.iter().map(|e| e.field).collect::<Vec<_>>());
    let preserved = state.max <= tolerance && field.max <= tolerance;
    GroupSweep {
        group: kind,
        elements: elements.len(),
        state,
        field,
        path_disagreement: path,
        max_divergence: max_div,
        per_eps,
        tolerance,
        preserved,
    }
}

/// Elements of `kind` parameterized by the `ε` grid (shift/scaling exponent,
/// rotation angle, or polynomial amplitude), seeded per index.
pub fn elements_for(kind: GroupKind, eps_grid: &[f64], seed: u64) -> Vec<(f64, GroupElement)> {
    eps_grid
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let mut rng = stream_rng(seed ^ 0xE1E_u64, (kind as u64) << 32 | k as u64);
            (eps, GroupElement::random(kind, eps, &mut rng))
        })
        .collect()
}

/// Random elements: `ε = ±U[0.25, 1]` for shifts and scalings, Haar rotations,
/// quartic polynomials with unit coefficient range.
pub fn random_elements(kind: GroupKind, count: usize, seed: u64) -> Vec<(f64, GroupElement)> {
    (0..count)
        .map(|k| {
            let mut rng = stream_rng(seed ^ 0xA11_u64, (kind as u64) << 32 | k as u64);
            let amp = match kind {
                GroupKind::Rotation => 0.0,
                GroupKind::Galilean | GroupKind::PressureShift => 1.0,
                _ => {
                    let m = rng.random_range(0.25..=1.0);
                    if rng.random::<bool>() {
                        m
                    } else {
                        -m
                    }
                }
            };
            (amp, GroupElement::random(kind, amp, &mut rng))
        })
        .collect()
}

/// Sweep over the `ε` grid with a seeded probe ensemble.
pub fn breakage_sweep(
    model: &ClosureModel,
    kind: GroupKind,
    eps_grid: &[f64],
    probes: usize,
    seed: u64,
    tolerance: f64,
) -> GroupSweep {
    let states = unit_states(probes, seed);
    let fields = probe_fields(seed);
    let points = probe_points(probes.div_ceil(fields.len()).max(1), seed);
    group_sweep(model, kind, &elements_for(kind, eps_grid, seed), &states, &fields, &points, tolerance)
}

/// Equivariance report over several groups with random elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub model: String,
    pub seed: u64,
    pub probes: usize,
    pub groups: Vec<GroupSweep>,
    pub passed: bool,
}

/// Checks the model against `elements_per_group` random elements of each
/// group, on `probes` random states plus probe-field points.
pub fn check_symmetries(
    model: &ClosureModel,
    groups: &[GroupKind],
    elements_per_group: usize,
    probes: usize,
    seed: u64,
    tolerance: f64,
) -> SymmetryReport {
    let states = unit_states(probes, seed);
    let fields = probe_fields(seed);
    let points = probe_points(probes.div_ceil(fields.len()).max(1), seed);
    let sweeps: Vec<GroupSweep> = groups
        .iter()
        .map(|&kind| {
            let elements = random_elements(kind, elements_per_group, seed);
            group_sweep(model, kind, &elements, &states, &fields, &points, tolerance)
        })
        .collect();
    let passed = sweeps.iter().all(|s| s.preserved);
    SymmetryReport { model: model.label(), seed, probes, groups: sweeps, passed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::CoefficientFn;
    use crate::zoo::ReferenceModel;

    fn pts() -> Vec<(f64, [f64; 3])> {
        probe_points(20, 3)
    }

    fn close3(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    #[test]
    fn poly_eval_and_derivative() {
        let p = Poly(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.eval(2.0), 17.0);
        assert_eq!(p.derivative(), Poly(vec![2.0, 6.0]));
        assert_eq!(p.derivative().derivative().derivative(), Poly(vec![]));
    }

    #[test]
    fn probe_gradients_match_differences() {
        for f in probe_fields(1) {
            assert!(gradient_consistency(f.as_ref(), &pts()) < 1e-7, "{}", f.name());
            for &(t, x) in &pts() {
                assert!(f.gradient(t, x).trace().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transformed_gradients_match_differences() {
        let mut rng = stream_rng(4, 0);
        for kind in GroupKind::ALL {
            let g = GroupElement::random(kind, 0.5, &mut rng);
            for f in probe_fields(2) {
                let tf = act_on_field(&g, f);
                assert!(gradient_consistency(tf.as_ref(), &pts()) < 1e-7, "{kind} {}", tf.name());
            }
        }
    }

    #[test]
    fn time_shift_on_steady_field_is_identity() {
        let f: FieldRef = Arc::new(Abc { a: 1.0, b: 0.5, c: 0.3 });
        let tf = act_on_field(&GroupElement::TimeShift(0.7), f.clone());
        for (t, x) in pts() {
            assert_eq!(tf.velocity(t, x), f.velocity(t, x));
            assert_eq!(tf.gradient(t, x), f.gradient(t, x));
        }
    }

    #[test]
    fn constant_boost_shifts_velocity() {
        let c = [0.3, -0.2, 0.5];
        let alpha = std::array::from_fn(|k| Poly(vec![0.0, c[k]]));
        let f: FieldRef = Arc::new(TaylorGreen { amplitude: 1.0, k: 1.0, nu: 0.1 });
        let g = GroupElement::Galilean(alpha);
        let tf = act_on_field(&g, f.clone());
        for (t, x) in pts() {
            let (t2, x2) = g.map_point(t, x);
            let u = f.velocity(t, x);
            assert!(close3(tf.velocity(t2, x2), [u[0] + c[0], u[1] + c[1], u[2] + c[2]], 1e-14));
            assert!((tf.gradient(t2, x2) - f.gradient(t, x)).max_abs() < 1e-14);
        }
    }

    #[test]
    fn scaling_plane_shear() {
        let eps = 0.5;
        let f: FieldRef = Arc::new(PlaneShear { rate: 1.0 });
        let tf = act_on_field(&GroupElement::Scaling(eps), f.clone());
        for (t, x) in pts() {
            let expect = (-eps).exp() * (-eps).exp() * x[1];
            assert!((tf.velocity(t, x)[0] - expect).abs() < 1e-15);
            assert!((tf.gradient(t, x) - f.gradient(t, x).scale((-2.0 * eps).exp())).max_abs() < 1e-16);
        }
    }

    #[test]
    fn rotation_conjugates_plane_shear() {
        let r = rotation_about([0.0, 0.0, 1.0], PI / 2.0);
        let s = SymTensor3::from_components([0.0, 0.0, 0.0, 0.5, 0.0, 0.0]);
        let (s2, _, _) = induced_state_transform(&GroupElement::rotation(r).unwrap(), &s, &SkewTensor3::ZERO);
        // x₁ → x₂, x₂ → −x₁: the off-diagonal shear flips sign
        assert!((s2.t() - s.scale(-1.0).t()).max_abs() < 1e-15);
    }

    #[test]
    fn pressure_shift_leaves_state() {
        let s = SymTensor3::diag(1.0, -0.5, -0.5);
        let w = SkewTensor3::from_axial([0.1, 0.2, 0.3]);
        let (s2, w2, law) = induced_state_transform(&GroupElement::PressureShift(Poly(vec![1.0, 2.0])), &s, &w);
        assert_eq!((s2, w2), (s, w));
        assert_eq!(law, TauLaw::Identity);
    }

    #[test]
    fn rejects_improper_rotation() {
        assert!(GroupElement::rotation(Tensor3::diag(1.0, 1.0, -1.0)).is_err());
        assert!(GroupElement::rotation(Tensor3::diag(1.0, 1.0, 1.1)).is_err());
    }

    #[test]
    fn same_kind_composition() {
        let f: FieldRef = Arc::new(RandomTrig::new(5, 9));
        for kind in GroupKind::ALL {
            let mut rng = stream_rng(21, kind as u64);
            let g1 = GroupElement::random(kind, 0.4, &mut rng);
            let g2 = GroupElement::random(kind, 0.7, &mut rng);
            let seq = act_on_field(&g2, act_on_field(&g1, f.clone()));
            let comp = act_on_field(&g1.then(&g2).unwrap(), f.clone());
            let mut pressure_offsets = Vec::new();
            for (t, x) in pts() {
                assert!(close3(seq.velocity(t, x), comp.velocity(t, x), 1e-12), "{kind}");
                assert!((seq.gradient(t, x) - comp.gradient(t, x)).max_abs() < 1e-12, "{kind}");
                pressure_offsets.push((t, seq.pressure(t, x) - comp.pressure(t, x)));
            }
            if let (GroupElement::Galilean(a1), GroupElement::Galilean(a2)) = (&g1, &g2) {
                for (t, off) in pressure_offsets {
                    let corr: f64 = (0..3).map(|k| a2[k].derivative().derivative().eval(t) * a1[k].eval(t)).sum();
                    assert!((off + corr).abs() < 1e-11, "{off} vs {corr}");
                }
            } else {
                for (_, off) in pressure_offsets {
                    assert!(off.abs() < 1e-12, "{kind}: {off}");
                }
            }
        }
    }

    #[test]
    fn actions_preserve_divergence_free() {
        let mut rng = stream_rng(5, 1);
        for kind in GroupKind::ALL {
            let g = GroupElement::random(kind, 0.8, &mut rng);
            for f in probe_fields(3) {
                let tf = act_on_field(&g, f);
                for (t, x) in pts() {
                    assert!(tf.gradient(t, x).trace().abs() < 1e-10);
                }
            }
        }
    }

    fn scaled_model() -> ClosureModel {
        let mut a: [CoefficientFn; 7] = Default::default();
        for (k, c) in a.iter_mut().enumerate() {
            *c = CoefficientFn::Affine { constant: 0.3 - 0.1 * k as f64, linear: vec![0.2, 0.1, -0.05, 0.3, 0.1] };
        }
        ClosureModel::scaled(a)
    }

    #[test]
    fn scaled_model_is_fully_equivariant() {
        let report = check_symmetries(&scaled_model(), &GroupKind::ALL, 3, 100, 7, 1e-11);
        for g in &report.groups {
            assert!(g.preserved, "{:?}", g);
            assert!(g.path_disagreement <= 1e-9);
        }
        assert!(report.passed);
    }

    #[test]
    fn smagorinsky_breaks_scaling() {
        let smag = ClosureModel::reference(ReferenceModel::smagorinsky(0.17, 1.0).unwrap());
        let states = unit_states(50, 1);
        let stats = equivariance_defect(&smag, &GroupElement::Scaling(0.3), &states);
        // |e^{-4ε} − e^{-2ε}| / 1 relative to τ, times the ratio ‖τ‖ normalization
        let expect = ((-1.2_f64).exp() - (-0.6_f64).exp()).abs();
        assert!((stats.max - expect).abs() < 1e-12 && (stats.min - expect).abs() < 1e-12);
        assert!(stats.min > 0.1);
        let rot = equivariance_defect(&smag, &GroupElement::Rotation(rotation(&mut stream_rng(1, 1))), &states);
        assert!(rot.max <= 1e-11);
    }

    #[test]
    fn dimensionally_inconsistent_general_model() {
        let mut a: [CoefficientFn; 7] = Default::default();
        a[0] = CoefficientFn::Affine { constant: 0.0, linear: vec![1.0] };
        let m = ClosureModel::general(a);
        let states = unit_states(50, 2);
        assert!(equivariance_defect(&m, &GroupElement::Scaling(0.4), &states).min > 0.1);
        let r = GroupElement::Rotation(rotation(&mut stream_rng(2, 2)));
        assert!(equivariance_defect(&m, &r, &states).max <= 1e-12);
    }

    #[test]
    fn singular_probes_are_counted() {
        // solid rotation has S = 0 everywhere
        let m = scaled_model();
        let fields: Vec<FieldRef> = vec![Arc::new(SolidRotation { omega: 1.0 })];
        let fd = equivariance_defect_fields(&m, &GroupElement::Scaling(0.2), &fields, &pts());
        assert_eq!(fd.defect.count, 0);
        assert_eq!(fd.defect.skipped, pts().len());
    }
}

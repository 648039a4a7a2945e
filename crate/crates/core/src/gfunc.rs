//! Scalar generators `g(v1, v3, v4)` of potential-derived closures and the
//! positivity certificate for the total dissipation.
//!
//! `g` carries units of kinematic viscosity. A generator certifies positive
//! total dissipation when, for every admissible `v1`, the map
//! `(v3, v4) ↦ g(v1, v3, v4)` is convex and `g(v1, 0, 0) ≤ ν`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::invariants::primitive_invariants;
use crate::sampling::{state_with_ratio, stream_rng};

/// Value and first partials of `g` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GValue {
    pub value: f64,
    pub d_v1: f64,
    pub d_v3: f64,
    pub d_v4: f64,
}

/// `g = c0 + c1·v1 + c2·v1² + l3·v3 + l4·v4 + q33·v3² + q34·v3·v4 + q44·v4²`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolynomialG {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub l3: f64,
    pub l4: f64,
    pub q33: f64,
    pub q34: f64,
    pub q44: f64,
}

impl PolynomialG {
    pub fn constant(c0: f64) -> Self {
        PolynomialG { c0, ..Default::default() }
    }

    pub fn coefficients(&self) -> [f64; 8] {
        [self.c0, self.c1, self.c2, self.l3, self.l4, self.q33, self.q34, self.q44]
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients().iter().all(|c| c.is_finite())
    }

    /// True when `g` depends on `v1` only.
    pub fn is_v1_only(&self) -> bool {
        self.l3 == 0.0 && self.l4 == 0.0 && self.q33 == 0.0 && self.q34 == 0.0 && self.q44 == 0.0
    }

    pub fn eval(&self, v1: f64, v3: f64, v4: f64) -> GValue {
        GValue {
            value: self.c0
                + self.c1 * v1
                + self.c2 * v1 * v1
                + self.l3 * v3
                + self.l4 * v4
                + self.q33 * v3 * v3
                + self.q34 * v3 * v4
                + self.q44 * v4 * v4,
            d_v1: self.c1 + 2.0 * self.c2 * v1,
            d_v3: self.l3 + 2.0 * self.q33 * v3 + self.q34 * v4,
            d_v4: self.l4 + self.q34 * v3 + 2.0 * self.q44 * v4,
        }
    }

    /// Smallest eigenvalue of the constant `(v3, v4)` Hessian
    /// `[[2 q33, q34], [q34, 2 q44]]`.
    pub fn hessian_min_eigenvalue(&self) -> f64 {
        min_eig_2x2(2.0 * self.q33, self.q34, 2.0 * self.q44)
    }

    /// `max_{|v1| ≤ v*} (c0 + c1 v1 + c2 v1²)` in closed form.
    pub fn boundary_max(&self, v_star: f64) -> f64 {
        let f = |v: f64| self.c0 + self.c1 * v + self.c2 * v * v;
        let mut m = f(-v_star).max(f(v_star));
        if self.c2 != 0.0 {
            let vertex = -self.c1 / (2.0 * self.c2);
            if vertex.abs() <= v_star {
                m = m.max(f(vertex));
            }
        }
        m
    }
}

fn min_eig_2x2(a: f64, b: f64, d: f64) -> f64 {
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    mean - r
}

/// Callable generator with caller-supplied partials.
pub type GCallable = dyn Fn(f64, f64, f64) -> GValue + Send + Sync;

#[derive(Clone)]
pub struct CustomG {
    pub name: String,
    pub f: Arc<GCallable>,
}

impl fmt::Debug for CustomG {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomG").field("name", &self.name).finish_non_exhaustive()
    }
}

/// A generator `g(v1, v3, v4)`.
#[derive(Debug, Clone)]
pub enum GFunction {
    Polynomial(PolynomialG),
    Custom(CustomG),
}

impl GFunction {
    pub fn eval(&self, v1: f64, v3: f64, v4: f64) -> GValue {
        match self {
            GFunction::Polynomial(p) => p.eval(v1, v3, v4),
            GFunction::Custom(c) => (c.f)(v1, v3, v4),
        }
    }

    pub fn custom<F>(name: &str, f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> GValue + Send + Sync + 'static,
    {
        GFunction::Custom(CustomG { name: name.to_string(), f: Arc::new(f) })
    }

    pub fn name(&self) -> String {
        match self {
            GFunction::Polynomial(_) => "polynomial".to_string(),
            GFunction::Custom(c) => c.name.clone(),
        }
    }
}

/// Builds the polynomial generator; partials are exact.
pub fn make_polynomial_g(coeffs: PolynomialG) -> Result<GFunction, String> {
    if !coeffs.is_finite() {
        return Err(format!("non-finite polynomial coefficients: {coeffs:?}"));
    }
    Ok(GFunction::Polynomial(coeffs))
}

/// Largest relative mismatch between supplied partials and central
/// differences of the value, over the given points.
pub fn partials_consistency(g: &GFunction, points: &[[f64; 3]]) -> f64 {
    let mut worst = 0.0_f64;
    for &[v1, v3, v4] in points {
        let gv = g.eval(v1, v3, v4);
        let h = |x: f64| 1e-5 * (1.0 + x.abs());
        let (h1, h3, h4) = (h(v1), h(v3), h(v4));
        let d1 = (g.eval(v1 + h1, v3, v4).value - g.eval(v1 - h1, v3, v4).value) / (2.0 * h1);
        let d3 = (g.eval(v1, v3 + h3, v4).value - g.eval(v1, v3 - h3, v4).value) / (2.0 * h3);
        let d4 = (g.eval(v1, v3, v4 + h4).value - g.eval(v1, v3, v4 - h4).value) / (2.0 * h4);
        let scale = gv.d_v1.abs().max(gv.d_v3.abs()).max(gv.d_v4.abs()).max(gv.value.abs()).max(1e-300);
        let err = (d1 - gv.d_v1).abs().max((d3 - gv.d_v3).abs()).max((d4 - gv.d_v4).abs()) / scale;
        worst = worst.max(err);
    }
    worst
}

/// Box in `(v3, v4)` covering the values reached by sampled states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub v3_min: f64,
    pub v4_max: f64,
    /// Largest `|Ω|/|S|` in the probing ensemble.
    pub max_ratio: f64,
}

/// Measures the `(v3, v4)` range attained by states with unit `S` and
/// `|Ω|/|S|` uniform in `[0, max_ratio]`. `v4` is symmetric about zero
/// (`S → −S` flips it), so only its magnitude is recorded.
pub fn admissible_envelope(max_ratio: f64, samples: usize, seed: u64) -> Envelope {
    let mut v3_min = 0.0_f64;
    let mut v4_max = 0.0_f64;
    for k in 0..samples {
        let (s, w) = state_with_ratio(&mut stream_rng(seed, k as u64), max_ratio);
        let p = primitive_invariants(&s, &w);
        let n = p.i1.sqrt();
        v3_min = v3_min.min(p.b2 / p.i1);
        v4_max = v4_max.max((p.b3 / (p.i1 * n)).abs());
    }
    Envelope { v3_min, v4_max, max_ratio }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMethod {
    /// Exact conclusions (state-independent Hessian, closed-form boundary).
    Analytic,
    /// Heuristic conclusions from sampled points; not a proof.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityCertificate {
    pub convex_in_v3v4: bool,
    pub boundary_bound_ok: bool,
    pub method: CertificateMethod,
    /// Smallest margin over both conditions: the minimum `(v3, v4)` Hessian
    /// eigenvalue and `ν − max g(v1, 0, 0)`. Negative when a condition fails.
    pub worst_violation: f64,
    pub min_hessian_eigenvalue: f64,
    pub max_boundary_value: f64,
    pub samples: usize,
    pub nu: f64,
    pub v_star: f64,
}

impl PositivityCertificate {
    pub fn certified(&self) -> bool {
        self.convex_in_v3v4 && self.boundary_bound_ok
    }
}

/// Default probing ratio `|Ω|/|S|` for the sampled envelope.
pub const DEFAULT_ENVELOPE_RATIO: f64 = 4.0;

/// Checks the two sufficient conditions for positive total dissipation.
///
/// `v_star` is the bound on `|v1|`; pass the measured value from
/// [`crate::invariants::v1_extremal_scan`] or [`crate::invariants::v1_supremum`].
pub fn certify_positivity(g: &GFunction, nu: f64, v_star: f64, samples: usize, seed: u64) -> PositivityCertificate {
    let env = admissible_envelope(DEFAULT_ENVELOPE_RATIO, samples.clamp(1, 10_000), seed);
    certify_positivity_in(g, nu, v_star, samples, seed, &env)
}

/// As [`certify_positivity`] with an explicit `(v3, v4)` envelope for the
/// sampled path.
pub fn certify_positivity_in(
    g: &GFunction,
    nu: f64,
    v_star: f64,
    samples: usize,
    seed: u64,
    env: &Envelope,
) -> PositivityCertificate {
    match g {
        GFunction::Polynomial(p) => {
            let min_eig = p.hessian_min_eigenvalue();
            let max_b = p.boundary_max(v_star);
            PositivityCertificate {
                convex_in_v3v4: min_eig >= 0.0,
                boundary_bound_ok: max_b <= nu,
                method: CertificateMethod::Analytic,
                worst_violation: min_eig.min(nu - max_b),
                min_hessian_eigenvalue: min_eig,
                max_boundary_value: max_b,
                samples: 0,
                nu,
                v_star,
            }
        }
        GFunction::Custom(_) => certify_sampled(g, nu, v_star, samples, seed, env),
    }
}

fn certify_sampled(
    g: &GFunction,
    nu: f64,
    v_star: f64,
    samples: usize,
    seed: u64,
    env: &Envelope,
) -> PositivityCertificate {
    use rand::Rng;
    let samples = samples.max(2);
    let mut min_eig = f64::INFINITY;
    let mut max_b = f64::NEG_INFINITY;
    for k in 0..samples {
        let mut rng = stream_rng(seed ^ 0x9e37_79b9_7f4a_7c15, k as u64);
        let v1 = if k == 0 {
            -v_star
        } else if k == 1 {
            v_star
        } else {
            rng.random_range(-v_star..=v_star)
        };
        let v3 = rng.random_range(env.v3_min..=0.0);
        let v4 = rng.random_range(-env.v4_max..=env.v4_max);
        max_b = max_b.max(g.eval(v1, 0.0, 0.0).value);

        let h3 = 1e-4 * (1.0 + v3.abs());
        let h4 = 1e-4 * (1.0 + v4.abs());
        let p3 = g.eval(v1, v3 + h3, v4);
        let m3 = g.eval(v1, v3 - h3, v4);
        let p4 = g.eval(v1, v3, v4 + h4);
        let m4 = g.eval(v1, v3, v4 - h4);
        let a = (p3.d_v3 - m3.d_v3) / (2.0 * h3);
        let d = (p4.d_v4 - m4.d_v4) / (2.0 * h4);
        let b = 0.5 * ((p3.d_v4 - m3.d_v4) / (2.0 * h3) + (p4.d_v3 - m4.d_v3) / (2.0 * h4));
        min_eig = min_eig.min(min_eig_2x2(a, b, d));
    }
    // finite-difference noise allowance on the Hessian eigenvalue
    let noise = 1e-6 * nu.abs();
    PositivityCertificate {
        convex_in_v3v4: min_eig >= -noise,
        boundary_bound_ok: max_b <= nu,
        method: CertificateMethod::Sampled,
        worst_violation: min_eig.min(nu - max_b),
        min_hessian_eigenvalue: min_eig,
        max_boundary_value: max_b,
        samples,
        nu,
        v_star,
    }
}

/// Total dissipation per unit `I1` predicted for a potential model:
/// `2 (ν − g + v3 ∂g/∂v3 + v4 ∂g/∂v4)`.
pub fn dissipation_factor(g: &GFunction, nu: f64, v1: f64, v3: f64, v4: f64) -> f64 {
    let gv = g.eval(v1, v3, v4);
    2.0 * (nu - gv.value + v3 * gv.d_v3 + v4 * gv.d_v4)
}

//! Reference closures from the literature, written in the same seven-term
//! basis as the invariant family so they can be compared term by term.
//!
//! The filter width `Δ` is a fixed model parameter that group actions leave
//! untouched. Models that carry `Δ` therefore scale like `|S|²` rather than
//! `|S|`, which is exactly how they fail the scaling symmetry.

use serde::{Deserialize, Serialize};

use crate::gfunc::PolynomialG;
use crate::invariants::{scaled_from_norm, PrimitiveInvariants, SingularityPolicy};
use crate::models::{ClosureModel, ModelError};
use crate::symmetry::{breakage_sweep, GroupKind, GroupSweep};
use crate::tensor::{SkewTensor3, SymTensor3};

/// Conventional Smagorinsky constant.
pub const DEFAULT_CS: f64 = 0.17;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceModel {
    /// `τ^d = −2 (Cs Δ)² |S| S`.
    Smagorinsky { cs: f64, delta: f64 },
    /// `τ^d = C1|S|Δ²S + C2Δ²(S²)^d + C3Δ²(Ω²)^d + C4Δ²[S,Ω] + (C5/|S|)Δ²[S²,Ω]`.
    LundNovikov { c: [f64; 5], delta: f64 },
    /// Lund–Novikov with `C3 = C5 = 0`.
    Kosovic { c1: f64, c2: f64, c4: f64, delta: f64 },
    /// `τ^d = ν(2g − 3v1 g′) S + (3ν/|S|) g′ (S²)^d` with `g = g(v1)`
    /// dimensionless.
    Rdh05 { g: PolynomialG, nu: f64 },
}

impl ReferenceModel {
    pub fn smagorinsky(cs: f64, delta: f64) -> Result<Self, ModelError> {
        Self::Smagorinsky { cs, delta }.validated()
    }

    pub fn lund_novikov(c: [f64; 5], delta: f64) -> Result<Self, ModelError> {
        Self::LundNovikov { c, delta }.validated()
    }

    pub fn kosovic(c1: f64, c2: f64, c4: f64, delta: f64) -> Result<Self, ModelError> {
        Self::Kosovic { c1, c2, c4, delta }.validated()
    }

    pub fn rdh05(g: PolynomialG, nu: f64) -> Result<Self, ModelError> {
        Self::Rdh05 { g, nu }.validated()
    }

    pub fn validated(self) -> Result<Self, ModelError> {
        let delta = match &self {
            ReferenceModel::Smagorinsky { delta, .. }
            | ReferenceModel::LundNovikov { delta, .. }
            | ReferenceModel::Kosovic { delta, .. } => Some(*delta),
            ReferenceModel::Rdh05 { g, nu } => {
                if !g.is_v1_only() {
                    return Err(ModelError::Invalid("rdh05 generator must depend on v1 only".into()));
                }
                if !nu.is_finite() || !g.is_finite() {
                    return Err(ModelError::Invalid("rdh05 parameters must be finite".into()));
                }
                None
            }
        };
        if let Some(d) = delta {
            if !(d > 0.0) || !d.is_finite() {
                return Err(ModelError::Invalid(format!("filter width must be positive, got {d}")));
            }
        }
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReferenceModel::Smagorinsky { .. } => "smagorinsky",
            ReferenceModel::LundNovikov { .. } => "lund_novikov",
            ReferenceModel::Kosovic { .. } => "kosovic",
            ReferenceModel::Rdh05 { .. } => "rdh05",
        }
    }

    pub fn is_scale_invariant(&self) -> bool {
        matches!(self, ReferenceModel::Rdh05 { .. })
    }

    /// Lund–Novikov constants equivalent to this model, when it is one of the
    /// `Δ`-based closures.
    pub fn as_lund_novikov(&self) -> Option<([f64; 5], f64)> {
        match *self {
            ReferenceModel::Smagorinsky { cs, delta } => Some(([-2.0 * cs * cs, 0.0, 0.0, 0.0, 0.0], delta)),
            ReferenceModel::LundNovikov { c, delta } => Some((c, delta)),
            ReferenceModel::Kosovic { c1, c2, c4, delta } => Some(([c1, c2, 0.0, c4, 0.0], delta)),
            ReferenceModel::Rdh05 { .. } => None,
        }
    }

    pub fn coefficients(&self, prim: &PrimitiveInvariants, policy: &SingularityPolicy) -> Result<[f64; 7], ModelError> {
        match self {
            ReferenceModel::Rdh05 { g, nu } => {
                let n = policy.effective_norm(prim)?;
                let v = scaled_from_norm(prim, n);
                let gv = g.eval(v.v1, 0.0, 0.0);
                Ok([nu * (2.0 * gv.value - 3.0 * v.v1 * gv.d_v1), 3.0 * nu * gv.d_v1 / n, 0.0, 0.0, 0.0, 0.0, 0.0])
            }
            _ => {
                let (c, delta) = self.as_lund_novikov().expect("delta-based model");
                let d2 = delta * delta;
                let s_norm = prim.i1.max(0.0).sqrt();
                let c5_term = if c[4] != 0.0 { c[4] * d2 / policy.effective_norm(prim)? } else { 0.0 };
                Ok([c[0] * s_norm * d2, c[1] * d2, c[2] * d2, 0.0, c[3] * d2, c5_term, 0.0])
            }
        }
    }
}

/// Evaluates a reference model at one state.
pub fn eval_reference(
    m: &ReferenceModel,
    s: &SymTensor3,
    omega: &SkewTensor3,
) -> Result<crate::models::StressResult, ModelError> {
    ClosureModel::reference(m.clone()).evaluate(s, omega)
}

/// Per-group symmetry-breakage statistics for a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakageReport {
    pub model: String,
    pub groups: Vec<GroupSweep>,
    /// Groups whose maximum defect exceeds the tolerance.
    pub broken: Vec<GroupKind>,
    pub tolerance: f64,
}

/// Default `ε` grid for one-parameter groups.
pub const DEFAULT_EPS_GRID: [f64; 6] = [-1.0, -0.5, -0.25, 0.25, 0.5, 1.0];

/// Quantifies, per group, how far the model is from its expected
/// transformation law on a seeded probe ensemble.
pub fn breakage_report(
    model: &ClosureModel,
    groups: &[GroupKind],
    eps_grid: &[f64],
    probes: usize,
    seed: u64,
    tolerance: f64,
) -> BreakageReport {
    let sweeps: Vec<GroupSweep> = groups
        .iter()
        .map(|&kind| breakage_sweep(model, kind, eps_grid, probes, seed, tolerance))
        .collect();
    let broken = sweeps.iter().filter(|s| !s.preserved).map(|s| s.group).collect();
    BreakageReport { model: model.label(), groups: sweeps, broken, tolerance }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ClosureModel;
    use crate::tensor::{decompose, Tensor3};

    fn plane_shear() -> (SymTensor3, SkewTensor3) {
        let d = decompose(&Tensor3::new([[0.0, 1.0, 0.0], [0.0; 3], [0.0; 3]]).unwrap()).unwrap();
        (d.s, d.omega)
    }

    #[test]
    fn smagorinsky_at_plane_shear() {
        let (s, w) = plane_shear();
        let r = eval_reference(&ReferenceModel::smagorinsky(DEFAULT_CS, 1.0).unwrap(), &s, &w).unwrap();
        let expect = s.scale(-2.0 * 0.0289 * std::f64::consts::FRAC_1_SQRT_2);
        assert!((r.tau_dev.t() - expect.t()).max_abs() < 1e-16);
    }

    #[test]
    fn lund_novikov_reduces_to_smagorinsky() {
        let cs = 0.2;
        let smag = ClosureModel::reference(ReferenceModel::smagorinsky(cs, 0.5).unwrap());
        let ln = ClosureModel::reference(ReferenceModel::lund_novikov([-2.0 * cs * cs, 0.0, 0.0, 0.0, 0.0], 0.5).unwrap());
        for (s, w) in crate::sampling::unit_states(20, 2) {
            assert_eq!(smag.evaluate(&s, &w).unwrap().tau_dev, ln.evaluate(&s, &w).unwrap().tau_dev);
        }
    }

    #[test]
    fn kosovic_is_lund_novikov_without_c3_c5() {
        let k = ReferenceModel::kosovic(-0.1, 0.2, 0.3, 1.5).unwrap();
        assert_eq!(k.as_lund_novikov(), Some(([-0.1, 0.2, 0.0, 0.3, 0.0], 1.5)));
    }

    #[test]
    fn rdh05_constant_g_is_viscous() {
        let nu = 0.03;
        let (s, w) = plane_shear();
        let r = eval_reference(&ReferenceModel::rdh05(PolynomialG::constant(1.0), nu).unwrap(), &s, &w).unwrap();
        assert!((r.tau_dev.t() - s.scale(2.0 * nu).t()).max_abs() < 1e-17);
    }

    #[test]
    fn rdh05_matches_v1_only_potential() {
        let nu = 0.02;
        let g = PolynomialG { c0: 0.4, c1: -0.7, c2: 1.3, ..Default::default() };
        let rdh = ClosureModel::reference(ReferenceModel::rdh05(g, nu).unwrap());
        let scaled_g = PolynomialG { c0: nu * g.c0, c1: nu * g.c1, c2: nu * g.c2, ..Default::default() };
        let pot = ClosureModel::polynomial_potential(scaled_g);
        for (s, w) in crate::sampling::unit_states(50, 3) {
            let a = rdh.evaluate(&s, &w).unwrap().tau_dev;
            let b = pot.evaluate(&s, &w).unwrap().tau_dev;
            assert!((a.t() - b.t()).max_abs() <= 1e-15 * a.norm().max(1e-3));
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ReferenceModel::smagorinsky(0.17, 0.0).is_err());
        assert!(ReferenceModel::lund_novikov([0.0; 5], -1.0).is_err());
        assert!(ReferenceModel::rdh05(PolynomialG { l3: 1.0, ..Default::default() }, 0.01).is_err());
    }

    #[test]
    fn c5_term_is_singular_at_zero_strain() {
        let ln = ClosureModel::reference(ReferenceModel::lund_novikov([0.1, 0.1, 0.1, 0.1, 0.1], 1.0).unwrap());
        let w = SkewTensor3::from_axial([0.0, 0.0, 1.0]);
        assert!(matches!(ln.evaluate(&SymTensor3::ZERO, &w), Err(ModelError::Singular(_))));
        let no_c5 = ClosureModel::reference(ReferenceModel::lund_novikov([0.1, 0.1, 0.1, 0.1, 0.0], 1.0).unwrap());
        assert!(no_c5.evaluate(&SymTensor3::ZERO, &w).is_ok());
    }
}

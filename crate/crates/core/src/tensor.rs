//! Dense 3×3 tensor algebra.
//!
//! Three storage types share the same row-major `[[f64; 3]; 3]` layout:
//!
//! - [`Tensor3`]: a general second-order tensor (velocity gradients, products).
//! - [`SymTensor3`]: a symmetric tensor (strain rate `S`, stresses).
//! - [`SkewTensor3`]: an antisymmetric tensor (vorticity tensor `Ω`).
//!
//! Gradients follow the convention `grad[i][j] = ∂u_i/∂x_j`. Units are by
//! convention (1/time for velocity gradients) and are not tracked by the types.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative asymmetry accepted by the symmetric/skew constructors before they
/// reject their input.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("tensor is not symmetric: relative asymmetry {asymmetry:e} exceeds {tolerance:e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },
    #[error("tensor is not antisymmetric: relative defect {defect:e} exceeds {tolerance:e}")]
    NotSkew { defect: f64, tolerance: f64 },
}

fn check_finite(m: &[[f64; 3]; 3]) -> Result<(), TensorError> {
    for (row, r) in m.iter().enumerate() {
        for (col, &value) in r.iter().enumerate() {
            if !value.is_finite() {
                return Err(TensorError::NonFinite { row, col, value });
            }
        }
    }
    Ok(())
}

fn max_abs(m: &[[f64; 3]; 3]) -> f64 {
    m.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// General 3×3 real tensor.
#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tensor3(pub(crate) [[f64; 3]; 3]);

impl fmt::Debug for Tensor3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor3{:?}", self.0)
    }
}

impl Tensor3 {
    pub const ZERO: Tensor3 = Tensor3([[0.0; 3]; 3]);
    pub const IDENTITY: Tensor3 = Tensor3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    /// Builds a tensor from rows, rejecting NaN and infinities.
    pub fn new(entries: [[f64; 3]; 3]) -> Result<Self, TensorError> {
        check_finite(&entries)?;
        Ok(Tensor3(entries))
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Tensor3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Tensor3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.0;
        out.iter_mut().flatten().for_each(|v| *v *= a);
        Tensor3(out)
    }

    pub fn matmul(&self, rhs: &Tensor3) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Tensor3(out)
    }

    /// Applies the tensor to a vector.
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// `Q^d = Q − (1/3) tr(Q) Id`.
    pub fn deviator(&self) -> Self {
        let third = self.trace() / 3.0;
        let mut out = self.0;
        for (i, row) in out.iter_mut().enumerate() {
            row[i] -= third;
        }
        Tensor3(out)
    }

    /// Frobenius inner product `Σ a_ij b_ij`, i.e. `tr(Aᵀ B)`.
    pub fn contract(&self, rhs: &Tensor3) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(rhs.0.iter().flatten())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.contract(self).sqrt()
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Symmetric part `(A + Aᵀ)/2`.
    pub fn sym_part(&self) -> SymTensor3 {
        let t = self.transpose();
        SymTensor3((*self + t).scale(0.5).0)
    }

    /// Antisymmetric part `(A − Aᵀ)/2`.
    pub fn skew_part(&self) -> SkewTensor3 {
        let t = self.transpose();
        let mut m = (*self - t).scale(0.5).0;
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        SkewTensor3(m)
    }

    /// Conjugation `R A Rᵀ`.
    pub fn conjugate(&self, r: &Tensor3) -> Self {
        r.matmul(self).matmul(&r.transpose())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }
}

impl Add for Tensor3 {
    type Output = Tensor3;
    fn add(self, rhs: Tensor3) -> Tensor3 {
        let mut out = self.0;
        for (o, r) in out.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *o += r;
        }
        Tensor3(out)
    }
}

impl AddAssign for Tensor3 {
    fn add_assign(&mut self, rhs: Tensor3) {
        *self = *self + rhs;
    }
}

impl Sub for Tensor3 {
    type Output = Tensor3;
    fn sub(self, rhs: Tensor3) -> Tensor3 {
        self + rhs.scale(-1.0)
    }
}

impl Neg for Tensor3 {
    type Output = Tensor3;
    fn neg(self) -> Tensor3 {
        self.scale(-1.0)
    }
}

impl Mul for Tensor3 {
    type Output = Tensor3;
    fn mul(self, rhs: Tensor3) -> Tensor3 {
        self.matmul(&rhs)
    }
}

impl Mul<Tensor3> for f64 {
    type Output = Tensor3;
    fn mul(self, rhs: Tensor3) -> Tensor3 {
        rhs.scale(self)
    }
}

/// `[P, Q] = PQ − QP`.
pub fn commutator(p: &Tensor3, q: &Tensor3) -> Tensor3 {
    p.matmul(q) - q.matmul(p)
}

/// `Q^d = Q − (1/3) tr(Q) Id`.
pub fn deviator(q: &Tensor3) -> Tensor3 {
    q.deviator()
}

/// Symmetric 3×3 tensor. Entries satisfy `m[i][j] == m[j][i]` exactly.
#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymTensor3(pub(crate) [[f64; 3]; 3]);

impl fmt::Debug for SymTensor3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymTensor3{:?}", self.0)
    }
}

impl SymTensor3 {
    pub const ZERO: SymTensor3 = SymTensor3([[0.0; 3]; 3]);

    /// Builds a symmetric tensor. Input whose relative asymmetry is within
    /// [`SYMMETRY_TOLERANCE`] is symmetrized; anything larger is rejected.
    pub fn new(entries: [[f64; 3]; 3]) -> Result<Self, TensorError> {
        check_finite(&entries)?;
        let scale = max_abs(&entries);
        let mut asym = 0.0_f64;
        for i in 0..3 {
            for j in (i + 1)..3 {
                asym = asym.max((entries[i][j] - entries[j][i]).abs());
            }
        }
        if scale > 0.0 && asym > SYMMETRY_TOLERANCE * scale {
            return Err(TensorError::NotSymmetric {
                asymmetry: asym / scale,
                tolerance: SYMMETRY_TOLERANCE,
            });
        }
        Ok(Tensor3(entries).sym_part())
    }

    /// Symmetric tensor from its six independent components
    /// `(xx, yy, zz, xy, yz, xz)`.
    pub fn from_components(c: [f64; 6]) -> Self {
        SymTensor3([[c[0], c[3], c[5]], [c[3], c[1], c[4]], [c[5], c[4], c[2]]])
    }

    /// Components in the order `(xx, yy, zz, xy, yz, xz)`.
    pub fn components(&self) -> [f64; 6] {
        let m = &self.0;
        [m[0][0], m[1][1], m[2][2], m[0][1], m[1][2], m[0][2]]
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        SymTensor3(Tensor3::diag(a, b, c).0)
    }

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn t(&self) -> Tensor3 {
        Tensor3(self.0)
    }

    pub fn trace(&self) -> f64 {
        self.t().trace()
    }

    pub fn scale(&self, a: f64) -> Self {
        SymTensor3(self.t().scale(a).0)
    }

    pub fn deviator(&self) -> Self {
        SymTensor3(self.t().deviator().0)
    }

    /// `√tr(S²)`, which for a symmetric tensor is the Frobenius norm.
    pub fn norm(&self) -> f64 {
        frobenius_norm_s(self)
    }

    pub fn square(&self) -> Self {
        SymTensor3(self.t().matmul(&self.t()).0).resymmetrize()
    }

    /// Conjugation `R S Rᵀ`, kept exactly symmetric.
    pub fn conjugate(&self, r: &Tensor3) -> Self {
        self.t().conjugate(r).sym_part()
    }

    /// Frobenius inner product, equal to `tr(A B)` for symmetric arguments.
    pub fn contract(&self, rhs: &SymTensor3) -> f64 {
        self.t().contract(&rhs.t())
    }

    fn resymmetrize(self) -> Self {
        self.t().sym_part()
    }
}

impl Add for SymTensor3 {
    type Output = SymTensor3;
    fn add(self, rhs: SymTensor3) -> SymTensor3 {
        SymTensor3((self.t() + rhs.t()).0)
    }
}

impl AddAssign for SymTensor3 {
    fn add_assign(&mut self, rhs: SymTensor3) {
        *self = *self + rhs;
    }
}

impl Sub for SymTensor3 {
    type Output = SymTensor3;
    fn sub(self, rhs: SymTensor3) -> SymTensor3 {
        SymTensor3((self.t() - rhs.t()).0)
    }
}

impl Neg for SymTensor3 {
    type Output = SymTensor3;
    fn neg(self) -> SymTensor3 {
        self.scale(-1.0)
    }
}

impl Mul<SymTensor3> for f64 {
    type Output = SymTensor3;
    fn mul(self, rhs: SymTensor3) -> SymTensor3 {
        rhs.scale(self)
    }
}

impl From<SymTensor3> for Tensor3 {
    fn from(s: SymTensor3) -> Tensor3 {
        s.t()
    }
}

/// Antisymmetric 3×3 tensor with zero diagonal.
#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SkewTensor3(pub(crate) [[f64; 3]; 3]);

impl fmt::Debug for SkewTensor3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SkewTensor3{:?}", self.0)
    }
}

impl SkewTensor3 {
    pub const ZERO: SkewTensor3 = SkewTensor3([[0.0; 3]; 3]);

    /// Builds an antisymmetric tensor, rejecting input whose symmetric part
    /// exceeds [`SYMMETRY_TOLERANCE`] relative to the largest entry.
    pub fn new(entries: [[f64; 3]; 3]) -> Result<Self, TensorError> {
        check_finite(&entries)?;
        let scale = max_abs(&entries);
        let mut defect = 0.0_f64;
        for i in 0..3 {
            for j in i..3 {
                defect = defect.max((entries[i][j] + entries[j][i]).abs());
            }
        }
        if scale > 0.0 && defect > SYMMETRY_TOLERANCE * scale {
            return Err(TensorError::NotSkew {
                defect: defect / scale,
                tolerance: SYMMETRY_TOLERANCE,
            });
        }
        Ok(Tensor3(entries).skew_part())
    }

    /// Skew tensor `W` with `W v = w × v` for the axial vector `w`.
    pub fn from_axial(w: [f64; 3]) -> Self {
        SkewTensor3([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    }

    pub fn axial(&self) -> [f64; 3] {
        [self.0[2][1], self.0[0][2], self.0[1][0]]
    }

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn t(&self) -> Tensor3 {
        Tensor3(self.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        SkewTensor3(self.t().scale(a).0)
    }

    /// `Ω²`, symmetric and negative semidefinite.
    pub fn square(&self) -> SymTensor3 {
        self.t().matmul(&self.t()).sym_part()
    }

    pub fn conjugate(&self, r: &Tensor3) -> Self {
        self.t().conjugate(r).skew_part()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.t().frobenius_norm()
    }
}

impl Add for SkewTensor3 {
    type Output = SkewTensor3;
    fn add(self, rhs: SkewTensor3) -> SkewTensor3 {
        SkewTensor3((self.t() + rhs.t()).0)
    }
}

impl From<SkewTensor3> for Tensor3 {
    fn from(w: SkewTensor3) -> Tensor3 {
        w.t()
    }
}

/// Split of a velocity gradient into strain rate and vorticity tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelGradDecomposition {
    pub grad: Tensor3,
    pub s: SymTensor3,
    pub omega: SkewTensor3,
}

/// `S = (∇u + ∇uᵀ)/2`, `Ω = (∇u − ∇uᵀ)/2`.
pub fn decompose(grad: &Tensor3) -> Result<VelGradDecomposition, TensorError> {
    check_finite(&grad.0)?;
    Ok(VelGradDecomposition {
        grad: *grad,
        s: grad.sym_part(),
        omega: grad.skew_part(),
    })
}

/// `|S| = √tr(S²)`.
pub fn frobenius_norm_s(s: &SymTensor3) -> f64 {
    s.t().frobenius_norm()
}

/// Orthonormal basis of symmetric tensors under `⟨A, B⟩ = tr(AB)`:
/// `e_11, e_22, e_33, (e_12+e_21)/√2, (e_23+e_32)/√2, (e_13+e_31)/√2`.
pub fn symmetric_basis() -> [SymTensor3; 6] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [
        SymTensor3::from_components([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        SymTensor3::from_components([0.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
        SymTensor3::from_components([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
        SymTensor3::from_components([0.0, 0.0, 0.0, r, 0.0, 0.0]),
        SymTensor3::from_components([0.0, 0.0, 0.0, 0.0, r, 0.0]),
        SymTensor3::from_components([0.0, 0.0, 0.0, 0.0, 0.0, r]),
    ]
}

/// Orthonormal basis of the five-dimensional space of trace-free symmetric
/// tensors.
pub fn deviatoric_basis() -> [SymTensor3; 5] {
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let r6 = 1.0 / 6.0_f64.sqrt();
    [
        SymTensor3::diag(r2, -r2, 0.0),
        SymTensor3::diag(r6, r6, -2.0 * r6),
        SymTensor3::from_components([0.0, 0.0, 0.0, r2, 0.0, 0.0]),
        SymTensor3::from_components([0.0, 0.0, 0.0, 0.0, r2, 0.0]),
        SymTensor3::from_components([0.0, 0.0, 0.0, 0.0, 0.0, r2]),
    ]
}

/// Trace-free symmetric tensor `Σ c_k E_k` in the [`deviatoric_basis`].
pub fn deviatoric_from_coords(c: [f64; 5]) -> SymTensor3 {
    deviatoric_basis()
        .iter()
        .zip(c)
        .fold(SymTensor3::ZERO, |acc, (e, ck)| acc + e.scale(ck))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Tensor3, b: &Tensor3, tol: f64) -> bool {
        (*a - *b).max_abs() <= tol
    }

    fn shear() -> Tensor3 {
        Tensor3::new([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]).unwrap()
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&Tensor3::diag(1.0, -1.0, 0.0)).unwrap();
        assert_eq!(d.s, SymTensor3::diag(1.0, -1.0, 0.0));
        assert_eq!(d.omega, SkewTensor3::ZERO);

        let d = decompose(&shear()).unwrap();
        assert_eq!(d.s.entries(), &[[0.0, 0.5, 0.0], [0.5, 0.0, 0.0], [0.0; 3]]);
        assert_eq!(d.omega.entries(), &[[0.0, 0.5, 0.0], [-0.5, 0.0, 0.0], [0.0; 3]]);
        assert_eq!(d.s.t() + d.omega.t(), d.grad);

        let rot = Tensor3::new([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0; 3]]).unwrap();
        let d = decompose(&rot).unwrap();
        assert_eq!(d.s, SymTensor3::ZERO);
        assert_eq!(d.omega.t(), rot);
    }

    #[test]
    fn decompose_rejects_non_finite() {
        let mut m = [[0.0; 3]; 3];
        m[1][2] = f64::NAN;
        assert!(matches!(Tensor3::new(m), Err(TensorError::NonFinite { row: 1, col: 2, .. })));
        let bad = Tensor3(m);
        assert!(decompose(&bad).is_err());
    }

    #[test]
    fn deviator_examples() {
        assert_eq!(deviator(&Tensor3::IDENTITY), Tensor3::ZERO);
        assert_eq!(deviator(&Tensor3::diag(1.0, -1.0, 0.0)), Tensor3::diag(1.0, -1.0, 0.0));
        assert_eq!(deviator(&Tensor3::diag(3.0, 0.0, 0.0)), Tensor3::diag(2.0, -1.0, -1.0));
    }

    #[test]
    fn commutator_examples() {
        let q = Tensor3::new([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 10.0]]).unwrap();
        assert_eq!(commutator(&Tensor3::IDENTITY, &q), Tensor3::ZERO);
        assert_eq!(
            commutator(&Tensor3::diag(1.0, 2.0, 3.0), &Tensor3::diag(4.0, 5.0, 6.0)),
            Tensor3::ZERO
        );
        let d = decompose(&shear()).unwrap();
        let s_omega = d.s.t() * d.omega.t();
        assert!(close(&s_omega, &Tensor3::diag(-0.25, 0.25, 0.0), 0.0));
        let c = commutator(&d.s.t(), &d.omega.t());
        assert!(close(&c, &Tensor3::diag(-0.5, 0.5, 0.0), 0.0));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(frobenius_norm_s(&SymTensor3::ZERO), 0.0);
        assert_eq!(frobenius_norm_s(&SymTensor3::diag(1.0, -1.0, 0.0)), 2.0_f64.sqrt());
        let s = decompose(&shear()).unwrap().s;
        assert!((frobenius_norm_s(&s) - 0.5_f64.sqrt()).abs() < 1e-16);
    }

    #[test]
    fn constructors_symmetrize_or_reject() {
        let nearly = [[1.0, 2.0 + 1e-14, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let s = SymTensor3::new(nearly).unwrap();
        assert_eq!(s.entries()[0][1], s.entries()[1][0]);

        let far = [[1.0, 2.0 + 1e-9, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(SymTensor3::new(far), Err(TensorError::NotSymmetric { .. })));

        let w = SkewTensor3::new([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0; 3]]).unwrap();
        assert_eq!(w.axial(), [0.0, 0.0, -1.0]);
        assert!(SkewTensor3::new([[1.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0; 3]]).is_err());
    }

    #[test]
    fn deviatoric_basis_is_orthonormal_and_trace_free() {
        let b = deviatoric_basis();
        for (i, e) in b.iter().enumerate() {
            assert!(e.trace().abs() < 1e-15);
            for (j, f) in b.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((e.contract(f) - expect).abs() < 1e-15);
            }
        }
        let sb = symmetric_basis();
        for (i, e) in sb.iter().enumerate() {
            for (j, f) in sb.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((e.contract(f) - expect).abs() < 1e-15);
            }
        }
    }
}

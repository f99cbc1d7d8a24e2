//! Liouvillian superoperators and their steady states.
//!
//! Vectorization is column stacking: `vec(ρ)[c·D + r] = ρ[r, c]`, so that
//! `vec(AρB) = (Bᵀ ⊗ A)·vec(ρ)`.

mod gmres;
mod steady;

pub use steady::{steady_state, steady_state_with, SolveMethod, SolverOptions, SolverStats, SteadyStateResult};

use crate::error::{Error, Result};
use crate::hilbert::{Operator, Space};
use crate::sparse::CsrMatrix;
use crate::C64;

/// A Lindblad channel `rate · D[op]`.
#[derive(Clone, Debug)]
pub struct Jump {
    pub rate: f64,
    pub op: Operator,
}

impl Jump {
    pub fn new(rate: f64, op: Operator) -> Self {
        Jump { rate, op }
    }
}

/// Linear map on vectorized operators of a given space.
///
/// `charges`, when present, assigns an integer label to each Hilbert-space
/// basis state; coherences whose labels differ are "fast" and the
/// steady-state solver may treat them with a cheaper preconditioner.
#[derive(Clone, Debug)]
pub struct Superoperator {
    space: Space,
    mat: CsrMatrix,
    charges: Option<Vec<i32>>,
}

impl Superoperator {
    pub fn new(space: Space, mat: CsrMatrix) -> Self {
        let d2 = space.dim() * space.dim();
        assert_eq!((mat.nrows(), mat.ncols()), (d2, d2), "superoperator size");
        Superoperator { space, mat, charges: None }
    }

    pub fn zeros(space: Space) -> Self {
        let d2 = space.dim() * space.dim();
        Superoperator::new(space, CsrMatrix::zeros(d2, d2))
    }

    pub fn identity(space: Space) -> Self {
        let d2 = space.dim() * space.dim();
        Superoperator::new(space, CsrMatrix::identity(d2))
    }

    pub fn with_charges(mut self, charges: Vec<i32>) -> Self {
        assert_eq!(charges.len(), self.space.dim());
        self.charges = Some(charges);
        self
    }

    pub fn charges(&self) -> Option<&[i32]> {
        self.charges.as_deref()
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    /// Hilbert-space dimension D (the matrix is D² × D²).
    pub fn hilbert_dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.mat
    }

    pub fn try_add(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.space != other.space {
            return Err(Error::BasisMismatch(self.space.to_string(), other.space.to_string()));
        }
        Ok(Superoperator {
            space: self.space.clone(),
            mat: self.mat.add_scaled(&other.mat, C64::new(1.0, 0.0)),
            charges: self.charges.clone().or_else(|| other.charges.clone()),
        })
    }

    /// Applies the map to an operator.
    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        if *rho.space() != self.space {
            return Err(Error::BasisMismatch(self.space.to_string(), rho.space().to_string()));
        }
        let v = self.mat.mul_vec(&vectorize(rho));
        Ok(unvectorize(&self.space, &v))
    }

    /// max over columns of |Σ_diag-rows L|, i.e. the defect of vec(I)†·L,
    /// relative to max |L|.
    pub fn trace_defect(&self) -> f64 {
        let d = self.space.dim();
        let mut col_sums = vec![C64::new(0.0, 0.0); self.mat.ncols()];
        for r in 0..d {
            for (c, v) in self.mat.row(r * d + r) {
                col_sums[c] += v;
            }
        }
        let scale = self.mat.max_abs().max(f64::MIN_POSITIVE);
        col_sums.iter().map(|v| v.norm()).fold(0.0, f64::max) / scale
    }
}

pub fn vectorize(rho: &Operator) -> Vec<C64> {
    let d = rho.dim();
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    for (r, c, x) in rho.matrix().iter() {
        v[c * d + r] = x;
    }
    v
}

pub fn unvectorize(space: &Space, v: &[C64]) -> Operator {
    let d = space.dim();
    assert_eq!(v.len(), d * d);
    let trips = v
        .iter()
        .enumerate()
        .filter(|(_, x)| **x != C64::new(0.0, 0.0))
        .map(|(k, &x)| (k % d, k / d, x));
    Operator::new(space.clone(), CsrMatrix::from_triplets(d, d, trips))
}

/// Superoperator of ρ ↦ coeff·AρB, i.e. `coeff·(Bᵀ ⊗ A)`.
pub fn sandwich_term(coeff: C64, a: &Operator, b: &Operator) -> Result<Superoperator> {
    if a.space() != b.space() {
        return Err(Error::BasisMismatch(a.space().to_string(), b.space().to_string()));
    }
    let mat = b.matrix().transpose().kron(a.matrix()).scale(coeff);
    Ok(Superoperator::new(a.space().clone(), mat))
}

/// `−i[H, ·] + Σ_k r_k D[L_k]`.
pub fn liouvillian(h: &Operator, jumps: &[Jump]) -> Result<Superoperator> {
    let defect = h.hermiticity_defect();
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    for j in jumps {
        if !(j.rate >= 0.0) {
            return Err(Error::NegativeRate(j.rate));
        }
        if j.op.space() != h.space() {
            return Err(Error::BasisMismatch(h.space().to_string(), j.op.space().to_string()));
        }
    }
    let d = h.dim();
    let id = CsrMatrix::identity(d);
    let minus_i = C64::new(0.0, -1.0);
    let mut mat = id
        .kron(h.matrix())
        .add_scaled(&h.matrix().transpose().kron(&id), C64::new(-1.0, 0.0))
        .scale(minus_i);
    for j in jumps.iter().filter(|j| j.rate > 0.0) {
        let l = j.op.matrix();
        let ldl = l.adjoint().matmul(l);
        let r = C64::new(j.rate, 0.0);
        mat = mat
            .add_scaled(&l.conj().kron(l), r)
            .add_scaled(&id.kron(&ldl), -0.5 * r)
            .add_scaled(&ldl.transpose().kron(&id), -0.5 * r);
    }
    Ok(Superoperator::new(h.space().clone(), mat))
}

/// `rate · D[L]` written with [`sandwich_term`]s.
pub fn dissipator(rate: f64, l: &Operator) -> Result<Superoperator> {
    let id = Operator::identity(l.space().clone());
    let ldl = l.adjoint().try_mul(l)?;
    let r = C64::new(rate, 0.0);
    sandwich_term(r, l, &l.adjoint())?
        .try_add(&sandwich_term(-0.5 * r, &ldl, &id)?)?
        .try_add(&sandwich_term(-0.5 * r, &id, &ldl)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{destroy, pauli, DensityMatrix, Pauli};

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn vectorization_identity() {
        let a = &destroy(3).unwrap() + &destroy(3).unwrap().adjoint().scale(C64::new(0.0, 0.5));
        let b = &destroy(3).unwrap().adjoint() + &Operator::identity(Space::phonon(3)).scale(0.2);
        let rho = DensityMatrix::pure(Space::phonon(3), &[re(0.3), C64::new(0.1, 0.4), re(0.8)]).unwrap();
        let direct = &(&a * &rho) * &b;
        let via = sandwich_term(re(1.0), &a, &b).unwrap().apply(&rho).unwrap();
        assert!(direct.max_diff(&via).unwrap() < 1e-14);
    }

    #[test]
    fn sandwich_identity_is_identity_superoperator() {
        let id = Operator::identity(Space::phonon(3));
        let s = sandwich_term(re(1.0), &id, &id).unwrap();
        assert_eq!(s.matrix(), Superoperator::identity(Space::phonon(3)).matrix());
    }

    #[test]
    fn dissipator_matches_liouvillian_without_hamiltonian() {
        let a = destroy(4).unwrap();
        let zero = Operator::zeros(Space::phonon(4));
        let l = liouvillian(&zero, &[Jump::new(0.7, a.clone())]).unwrap();
        let d = dissipator(0.7, &a).unwrap();
        let diff = l.matrix().add_scaled(d.matrix(), re(-1.0));
        assert!(diff.max_abs() < 1e-14);
    }

    #[test]
    fn vacuum_is_dark_for_pure_damping() {
        let a = destroy(5).unwrap();
        let l = liouvillian(&Operator::zeros(Space::phonon(5)), &[Jump::new(1.0, a)]).unwrap();
        let vac = DensityMatrix::basis_state(Space::phonon(5), 0);
        assert_eq!(l.apply(&vac).unwrap().matrix().max_abs(), 0.0);
    }

    #[test]
    fn spin_decay_is_trace_preserving() {
        let l = liouvillian(
            &Operator::zeros(Space::spin()),
            &[Jump::new(1.0, pauli(Pauli::Minus))],
        )
        .unwrap();
        assert!(l.trace_defect() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = destroy(3).unwrap();
        assert!(matches!(liouvillian(&a, &[]), Err(Error::NotHermitian(_))));
        let h = Operator::zeros(Space::phonon(3));
        assert_eq!(
            liouvillian(&h, &[Jump::new(-1.0, a.clone())]).unwrap_err(),
            Error::NegativeRate(-1.0)
        );
        assert!(matches!(
            sandwich_term(re(1.0), &a, &destroy(4).unwrap()),
            Err(Error::BasisMismatch(..))
        ));
    }
}

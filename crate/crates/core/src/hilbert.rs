//! Composite spin ⊗ Fock spaces and the operator algebra on them.
//!
//! Single-ion local index is `s * N + n` with `s = 0` for |↓⟩ and `s = 1`
//! for |↑⟩; two-ion global index is `i1 * 2N + i2` (ion 1 outermost).
//! σ_z is −1 on |↓⟩ and σ⁻ = |↓⟩⟨↑|.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ion {
    First,
    Second,
}

impl Ion {
    pub fn number(self) -> usize {
        match self {
            Ion::First => 1,
            Ion::Second => 2,
        }
    }

    pub fn from_number(n: usize) -> Result<Ion> {
        match n {
            1 => Ok(Ion::First),
            2 => Ok(Ion::Second),
            other => Err(Error::UnsupportedIonCount(other)),
        }
    }

    pub fn other(self) -> Ion {
        match self {
            Ion::First => Ion::Second,
            Ion::Second => Ion::First,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FactorKind {
    Spin,
    Phonon,
}

/// Identifies one tensor factor of a [`Space`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FactorId {
    pub kind: FactorKind,
    pub ion: Ion,
}

impl FactorId {
    pub fn spin(ion: Ion) -> Self {
        FactorId { kind: FactorKind::Spin, ion }
    }

    pub fn phonon(ion: Ion) -> Self {
        FactorId { kind: FactorKind::Phonon, ion }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub id: FactorId,
    pub dim: usize,
}

/// Ordered list of tensor factors; the last factor varies fastest.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Space {
    factors: Vec<Factor>,
}

impl Space {
    pub fn new(factors: Vec<Factor>) -> Self {
        Space { factors }
    }

    pub fn spin() -> Self {
        Space::new(vec![Factor { id: FactorId::spin(Ion::First), dim: 2 }])
    }

    pub fn phonon(cutoff: usize) -> Self {
        Space::new(vec![Factor { id: FactorId::phonon(Ion::First), dim: cutoff }])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn position(&self, id: FactorId) -> Option<usize> {
        self.factors.iter().position(|f| f.id == id)
    }

    /// Concatenation, `self` outermost.
    pub fn tensor(&self, other: &Space) -> Space {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Space { factors }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|fac| {
                let tag = match fac.id.kind {
                    FactorKind::Spin => "spin",
                    FactorKind::Phonon => "phonon",
                };
                format!("{}{}[{}]", tag, fac.id.ion.number(), fac.dim)
            })
            .collect();
        write!(f, "{}", parts.join("⊗"))
    }
}

/// Basis of one or two ions, each a spin ⊗ truncated Fock space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    n_ions: usize,
    cutoff: usize,
}

impl BasisSpec {
    pub fn new(n_ions: usize, cutoff: usize) -> Result<Self> {
        if !(1..=2).contains(&n_ions) {
            return Err(Error::UnsupportedIonCount(n_ions));
        }
        if cutoff < 2 {
            return Err(Error::InvalidCutoff(cutoff));
        }
        Ok(BasisSpec { n_ions, cutoff })
    }

    pub fn single(cutoff: usize) -> Result<Self> {
        Self::new(1, cutoff)
    }

    pub fn pair(cutoff: usize) -> Result<Self> {
        Self::new(2, cutoff)
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn ions(&self) -> impl Iterator<Item = Ion> {
        [Ion::First, Ion::Second].into_iter().take(self.n_ions)
    }

    pub fn dim(&self) -> usize {
        (2 * self.cutoff).pow(self.n_ions as u32)
    }

    pub fn space(&self) -> Space {
        let mut factors = Vec::with_capacity(2 * self.n_ions);
        for ion in self.ions() {
            factors.push(Factor { id: FactorId::spin(ion), dim: 2 });
            factors.push(Factor { id: FactorId::phonon(ion), dim: self.cutoff });
        }
        Space::new(factors)
    }

    /// Phonon-only space obtained by tracing out every spin.
    pub fn phonon_space(&self) -> Space {
        Space::new(
            self.ions()
                .map(|ion| Factor { id: FactorId::phonon(ion), dim: self.cutoff })
                .collect(),
        )
    }

    /// `(s, n)` per ion for a global index.
    pub fn decompose(&self, index: usize) -> Vec<(usize, usize)> {
        let local = 2 * self.cutoff;
        let mut out = vec![(0, 0); self.n_ions];
        let mut rest = index;
        for slot in out.iter_mut().rev() {
            let i = rest % local;
            rest /= local;
            *slot = (i / self.cutoff, i % self.cutoff);
        }
        out
    }

    pub fn compose(&self, levels: &[(usize, usize)]) -> usize {
        levels
            .iter()
            .fold(0, |acc, &(s, n)| acc * 2 * self.cutoff + s * self.cutoff + n)
    }

    /// Excitation label Σ_j (n_j − s_j) of each basis state. The drive and
    /// hopping terms of the rotating-wave model conserve it.
    pub fn excitation_labels(&self) -> Vec<i32> {
        (0..self.dim())
            .map(|g| {
                self.decompose(g)
                    .iter()
                    .map(|&(s, n)| n as i32 - s as i32)
                    .sum()
            })
            .collect()
    }

    /// Index permutation exchanging the two ions (identity for one ion).
    pub fn swap_permutation(&self) -> Vec<usize> {
        (0..self.dim())
            .map(|g| {
                let mut levels = self.decompose(g);
                levels.reverse();
                self.compose(&levels)
            })
            .collect()
    }
}

/// Sparse complex operator tagged with the space it acts on.
///
/// The arithmetic operator impls panic when spaces differ; the `try_*`
/// methods return [`Error::BasisMismatch`] instead.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: Space,
    mat: CsrMatrix,
}

impl Operator {
    pub fn new(space: Space, mat: CsrMatrix) -> Self {
        assert_eq!(mat.nrows(), space.dim(), "matrix does not match space {space}");
        assert_eq!(mat.ncols(), space.dim(), "matrix does not match space {space}");
        Operator { space, mat }
    }

    pub fn identity(space: Space) -> Self {
        let d = space.dim();
        Operator::new(space, CsrMatrix::identity(d))
    }

    pub fn zeros(space: Space) -> Self {
        let d = space.dim();
        Operator::new(space, CsrMatrix::zeros(d, d))
    }

    /// |ψ⟩⟨ψ| for a state vector (not normalized here).
    pub fn projector(space: Space, psi: &[C64]) -> Self {
        assert_eq!(psi.len(), space.dim());
        let nz: Vec<(usize, C64)> = psi
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, v)| *v != C64::new(0.0, 0.0))
            .collect();
        let trips = nz
            .iter()
            .flat_map(|&(i, a)| nz.iter().map(move |&(j, b)| (i, j, a * b.conj())));
        let d = space.dim();
        Operator::new(space, CsrMatrix::from_triplets(d, d, trips))
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.mat.get(r, c)
    }

    pub fn adjoint(&self) -> Operator {
        Operator { space: self.space.clone(), mat: self.mat.adjoint() }
    }

    pub fn transpose(&self) -> Operator {
        Operator { space: self.space.clone(), mat: self.mat.transpose() }
    }

    pub fn scale(&self, s: impl Into<C64>) -> Operator {
        Operator { space: self.space.clone(), mat: self.mat.scale(s.into()) }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    fn check_space(&self, other: &Operator) -> Result<()> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(Error::BasisMismatch(self.space.to_string(), other.space.to_string()))
        }
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Operator> {
        self.check_space(other)?;
        Ok(Operator { space: self.space.clone(), mat: self.mat.matmul(&other.mat) })
    }

    pub fn try_add(&self, other: &Operator) -> Result<Operator> {
        self.check_space(other)?;
        Ok(Operator {
            space: self.space.clone(),
            mat: self.mat.add_scaled(&other.mat, C64::new(1.0, 0.0)),
        })
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Operator> {
        self.check_space(other)?;
        Ok(Operator {
            space: self.space.clone(),
            mat: self.mat.add_scaled(&other.mat, C64::new(-1.0, 0.0)),
        })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    /// `self ⊗ other` on the concatenated space.
    pub fn tensor(&self, other: &Operator) -> Operator {
        Operator {
            space: self.space.tensor(&other.space),
            mat: self.mat.kron(&other.mat),
        }
    }

    /// max |A − A†| over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.mat
            .add_scaled(&self.mat.adjoint(), C64::new(-1.0, 0.0))
            .max_abs()
    }

    pub fn hermitized(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            mat: self
                .mat
                .add_scaled(&self.mat.adjoint(), C64::new(1.0, 0.0))
                .scale(C64::new(0.5, 0.0)),
        }
    }

    /// Re-indexes rows and columns: entry (i, j) moves to (perm[i], perm[j]).
    pub fn permuted(&self, perm: &[usize]) -> Operator {
        let d = self.dim();
        Operator {
            space: self.space.clone(),
            mat: CsrMatrix::from_triplets(
                d,
                d,
                self.mat.iter().map(|(r, c, v)| (perm[r], perm[c], v)),
            ),
        }
    }

    /// Entrywise max |A − B|.
    pub fn max_diff(&self, other: &Operator) -> Result<f64> {
        Ok(self.try_sub(other)?.mat.max_abs())
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let d = self.dim();
        let mut m = Mat::<C64>::zeros(d, d);
        for (r, c, v) in self.mat.iter() {
            m[(r, c)] = v;
        }
        m
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator addition")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.try_sub(rhs).expect("operator subtraction")
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator product")
    }
}

impl Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale(self)
    }
}

impl Mul<&Operator> for C64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale(self)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

/// Hermitian, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    const TRACE_TOL: f64 = 1e-10;

    /// Validates trace and Hermiticity, then hermitizes.
    pub fn new(op: Operator) -> Result<Self> {
        let tr = op.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > Self::TRACE_TOL {
            return Err(Error::NonUnitTrace(tr.re));
        }
        let defect = op.hermiticity_defect();
        if defect > Self::TRACE_TOL {
            return Err(Error::NotHermitian(defect));
        }
        Ok(DensityMatrix(op.hermitized()))
    }

    /// Divides by the trace and hermitizes; no positivity check.
    pub fn normalized(op: Operator) -> Result<Self> {
        let tr = op.trace();
        if tr.norm() < 1e-300 {
            return Err(Error::ZeroTrace);
        }
        Ok(DensityMatrix(op.scale(tr.inv()).hermitized()))
    }

    pub fn pure(space: Space, psi: &[C64]) -> Result<Self> {
        Self::normalized(Operator::projector(space, psi))
    }

    pub fn basis_state(space: Space, index: usize) -> Self {
        let mut psi = vec![C64::new(0.0, 0.0); space.dim()];
        psi[index] = C64::new(1.0, 0.0);
        DensityMatrix(Operator::projector(space, &psi))
    }

    pub fn maximally_mixed(space: Space) -> Self {
        let d = space.dim() as f64;
        DensityMatrix(Operator::identity(space).scale(1.0 / d))
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(self.0.tensor(&other.0))
    }

    pub fn as_operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    /// Smallest eigenvalue from a dense Hermitian eigensolve.
    pub fn min_eigenvalue(&self) -> f64 {
        let dense = self.0.to_dense();
        match dense.self_adjoint_eigenvalues(Side::Lower) {
            Ok(ev) => ev.into_iter().fold(f64::INFINITY, f64::min),
            Err(_) => f64::NAN,
        }
    }
}

impl std::ops::Deref for DensityMatrix {
    type Target = Operator;
    fn deref(&self) -> &Operator {
        &self.0
    }
}

/// Truncated annihilation operator on a single Fock factor.
pub fn destroy(cutoff: usize) -> Result<Operator> {
    if cutoff < 2 {
        return Err(Error::InvalidCutoff(cutoff));
    }
    let mat = CsrMatrix::from_triplets(
        cutoff,
        cutoff,
        (1..cutoff).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))),
    );
    Ok(Operator::new(Space::phonon(cutoff), mat))
}

pub fn number(cutoff: usize) -> Result<Operator> {
    let a = destroy(cutoff)?;
    Ok(&a.adjoint() * &a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Pauli matrix in the (|↓⟩, |↑⟩) basis.
pub fn pauli(axis: Pauli) -> Operator {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let dense = match axis {
        Pauli::X => [z, one, one, z],
        Pauli::Y => [z, i, -i, z],
        Pauli::Z => [-one, z, z, one],
        Pauli::Plus => [z, z, one, z],
        Pauli::Minus => [z, one, z, z],
    };
    Operator::new(Space::spin(), CsrMatrix::from_dense(2, 2, &dense))
}

/// Places a local operator on one factor of `basis`, identities elsewhere.
pub fn embed(op: &Operator, ion: Ion, kind: FactorKind, basis: &BasisSpec) -> Result<Operator> {
    let space = basis.space();
    let id = FactorId { kind, ion };
    let pos = space
        .position(id)
        .ok_or_else(|| Error::MissingFactor(format!("{id:?} in {space}")))?;
    embed_at(op, pos, &space)
}

/// Embeds `op` at factor position `pos` of an arbitrary space.
pub fn embed_at(op: &Operator, pos: usize, space: &Space) -> Result<Operator> {
    let dims = space.dims();
    if op.dim() != dims[pos] {
        return Err(Error::Embedding { expected: dims[pos], got: op.dim() });
    }
    let before: usize = dims[..pos].iter().product();
    let after: usize = dims[pos + 1..].iter().product();
    let mat = CsrMatrix::identity(before)
        .kron(op.matrix())
        .kron(&CsrMatrix::identity(after));
    Ok(Operator::new(space.clone(), mat))
}

/// Traces out every factor not listed in `keep`. Linear and trace
/// preserving on arbitrary operators.
pub fn partial_trace(op: &Operator, keep: &[FactorId]) -> Result<Operator> {
    if keep.is_empty() {
        return Err(Error::EmptyKeep);
    }
    let space = op.space();
    let mut kept = vec![false; space.factors().len()];
    for id in keep {
        let pos = space
            .position(*id)
            .ok_or_else(|| Error::MissingFactor(format!("{id:?} in {space}")))?;
        kept[pos] = true;
    }
    let dims = space.dims();
    let out_space = Space::new(
        space
            .factors()
            .iter()
            .zip(&kept)
            .filter(|(_, k)| **k)
            .map(|(f, _)| *f)
            .collect(),
    );
    let split = |mut idx: usize| {
        let mut kept_idx = 0usize;
        let mut kept_stride = 1usize;
        let mut traced = 0usize;
        let mut traced_stride = 1usize;
        for (d, k) in dims.iter().zip(&kept).rev() {
            let digit = idx % d;
            idx /= d;
            if *k {
                kept_idx += digit * kept_stride;
                kept_stride *= d;
            } else {
                traced += digit * traced_stride;
                traced_stride *= d;
            }
        }
        (kept_idx, traced)
    };
    let trips = op.matrix().iter().filter_map(|(r, c, v)| {
        let (rk, rt) = split(r);
        let (ck, ct) = split(c);
        (rt == ct).then_some((rk, ck, v))
    });
    let d = out_space.dim();
    Ok(Operator::new(out_space, CsrMatrix::from_triplets(d, d, trips)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpinAxis {
    X,
    Y,
    Z,
}

impl SpinAxis {
    pub fn pauli(self) -> Pauli {
        match self {
            SpinAxis::X => Pauli::X,
            SpinAxis::Y => Pauli::Y,
            SpinAxis::Z => Pauli::Z,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Tr_s[P ρ] with P = (1 ± σ^α)/2 on the given ion's spin; all spins are
/// traced out, leaving an unnormalized operator on the phonon factors.
pub fn spin_project(rho: &Operator, ion: Ion, axis: SpinAxis, sign: Sign) -> Result<Operator> {
    let space = rho.space();
    let pos = space
        .position(FactorId::spin(ion))
        .ok_or_else(|| Error::MissingFactor(format!("spin{} in {space}", ion.number())))?;
    let local = &(0.5 * &Operator::identity(Space::spin())) + &(0.5 * sign.value() * &pauli(axis.pauli()));
    let projector = embed_at(&local, pos, space)?;
    let phonons: Vec<FactorId> = space
        .factors()
        .iter()
        .filter(|f| f.id.kind == FactorKind::Phonon)
        .map(|f| f.id)
        .collect();
    partial_trace(&projector.try_mul(rho)?, &phonons)
}

/// Tr[ρ X].
pub fn expectation(rho: &Operator, x: &Operator) -> Result<C64> {
    rho.check_space(x)?;
    let mut acc = C64::new(0.0, 0.0);
    for (r, c, v) in rho.matrix().iter() {
        acc += v * x.get(c, r);
    }
    Ok(acc)
}

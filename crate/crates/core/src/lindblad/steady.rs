//! Steady states of Liouvillians.
//!
//! The solver restricts the problem to the connected block of the sparsity
//! graph that contains the populations, replaces one population equation by
//! the trace condition and factors the result with a sparse LU. Blocks that
//! are too large for a direct factorization fall back to GMRES when the
//! superoperator carries charge labels.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use serde::Serialize;

use super::gmres::gmres;
use super::{unvectorize, Superoperator};
use crate::error::{Error, Result};
use crate::hilbert::DensityMatrix;
use crate::sparse::CsrMatrix;
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Largest block factored directly.
    pub direct_limit: usize,
    /// Largest block attempted at all.
    pub max_unknowns: usize,
    /// Relative smallest-singular-value estimate below which the trace-fixed
    /// system counts as singular.
    pub degeneracy_tol: f64,
    pub gmres_tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            direct_limit: 60_000,
            max_unknowns: 1_000_000,
            degeneracy_tol: 1e-6,
            gmres_tol: 1e-13,
            restart: 60,
            max_iter: 3000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    DirectLu,
    ShiftInvert,
    PreconditionedGmres,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverStats {
    pub method: SolveMethod,
    /// Size of the full vectorized problem (D²).
    pub full_size: usize,
    /// Size of the block actually solved.
    pub unknowns: usize,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct SteadyStateResult {
    pub rho: DensityMatrix,
    /// ‖L vec ρ‖₂ for the returned (normalized) state.
    pub residual: f64,
    pub min_eig: f64,
    pub stats: SolverStats,
}

pub fn steady_state(l: &Superoperator) -> Result<SteadyStateResult> {
    steady_state_with(l, &SolverOptions::default())
}

static SEQUENTIAL: Once = Once::new();

pub fn steady_state_with(l: &Superoperator, opts: &SolverOptions) -> Result<SteadyStateResult> {
    // sweeps parallelize over points, not inside the factorization
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));

    let d = l.hilbert_dim();
    let n = d * d;
    let mat = l.matrix();

    let defect = l.trace_defect();
    if defect > 1e-10 {
        return Err(Error::NotTracePreserving(defect));
    }

    let comp = population_block(mat, d)?;
    if comp.len() > opts.max_unknowns {
        return Err(Error::MemoryBudget { needed: comp.len(), budget: opts.max_unknowns });
    }
    let mut local = vec![usize::MAX; n];
    for (i, &g) in comp.iter().enumerate() {
        local[g] = i;
    }
    let trace_row: Vec<(usize, C64)> =
        (0..d).map(|k| (local[k * d + k], C64::new(1.0, 0.0))).collect();
    let block = mat.submatrix(&comp, &comp);
    let t = local[0];
    let fixed = block.with_row_replaced(t, &trace_row);
    let mut rhs = vec![C64::new(0.0, 0.0); comp.len()];
    rhs[t] = C64::new(1.0, 0.0);

    let (x, method, iterations) = if comp.len() <= opts.direct_limit {
        match factor(&fixed) {
            Ok(lu) => {
                let x = lu_solve(&lu, &rhs);
                if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(Error::Degenerate("LU produced non-finite values".into()));
                }
                check_nonsingular(&fixed, &lu, opts.degeneracy_tol)?;
                (x, SolveMethod::DirectLu, 0)
            }
            Err(_) => {
                let (x, it) = shift_invert(&block, &trace_row)?;
                (x, SolveMethod::ShiftInvert, it)
            }
        }
    } else if let Some(q) = l.charges() {
        let (x, it) = block_gmres(&fixed, &comp, d, q, &rhs, opts)?;
        (x, SolveMethod::PreconditionedGmres, it)
    } else {
        return Err(Error::MemoryBudget { needed: comp.len(), budget: opts.direct_limit });
    };

    let mut full = vec![C64::new(0.0, 0.0); n];
    for (i, &g) in comp.iter().enumerate() {
        full[g] = x[i];
    }
    let rho = DensityMatrix::normalized(unvectorize(l.space(), &full))?;
    let residual = norm(&mat.mul_vec(&super::vectorize(&rho)));
    let bound = 1e-9 * mat.frobenius_norm() / d as f64;
    if !(residual <= bound) {
        return Err(Error::NoConvergence(format!(
            "steady-state residual {residual:e} exceeds {bound:e}"
        )));
    }
    let min_eig = rho.min_eigenvalue();
    Ok(SteadyStateResult {
        rho,
        residual,
        min_eig,
        stats: SolverStats { method, full_size: n, unknowns: comp.len(), iterations },
    })
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Sorted indices of the connected block holding every population; an error
/// if the populations are split, since each piece then conserves its own
/// partial trace.
fn population_block(mat: &CsrMatrix, d: usize) -> Result<Vec<usize>> {
    let n = mat.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    for (r, c, _) in mat.iter() {
        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let root = find(&mut parent, 0);
    for k in 1..d {
        if find(&mut parent, k * d + k) != root {
            return Err(Error::Degenerate(format!(
                "population {k} is decoupled from population 0"
            )));
        }
    }
    Ok((0..n).filter(|&i| find(&mut parent, i) == root).collect())
}

fn factor(a: &CsrMatrix) -> Result<Lu<usize, C64>> {
    let trips: Vec<Triplet<usize, usize, C64>> =
        a.iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
    let m = SparseColMat::<usize, C64>::try_new_from_triplets(a.nrows(), a.ncols(), &trips)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;
    m.sp_lu().map_err(|e| Error::Factorization(format!("{e:?}")))
}

fn lu_solve(lu: &Lu<usize, C64>, rhs: &[C64]) -> Vec<C64> {
    let b = Mat::<C64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    (0..rhs.len()).map(|i| x[(i, 0)]).collect()
}

/// A few steps of inverse iteration estimate the smallest singular value of
/// the trace-fixed matrix; a tiny value means a second stationary state.
fn check_nonsingular(a: &CsrMatrix, lu: &Lu<usize, C64>, tol: f64) -> Result<()> {
    let n = a.nrows();
    let mut z: Vec<C64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 1.0) * 0.618_033_988_7;
            C64::new((t * 7.3).sin(), (t * 3.1).cos())
        })
        .collect();
    for _ in 0..4 {
        z = lu_solve(lu, &z);
        let s = norm(&z);
        if !s.is_finite() || s == 0.0 {
            return Err(Error::Degenerate("inverse iteration blew up".into()));
        }
        z.iter_mut().for_each(|v| *v /= s);
    }
    let scale = (a.norm_one() * a.norm_inf()).sqrt();
    let ratio = norm(&a.mul_vec(&z)) / scale;
    if ratio < tol {
        return Err(Error::Degenerate(format!(
            "trace-fixed generator is numerically singular (relative σ_min ≈ {ratio:e})"
        )));
    }
    Ok(())
}

/// Inverse iteration on `L − σ` with a small negative shift, used when the
/// trace-fixed matrix is structurally singular.
fn shift_invert(block: &CsrMatrix, trace_row: &[(usize, C64)]) -> Result<(Vec<C64>, usize)> {
    let n = block.nrows();
    let sigma = -1e-8 * block.max_abs().max(1.0);
    let shifted = block.add_scaled(&CsrMatrix::identity(n), C64::new(-sigma, 0.0));
    let lu = factor(&shifted)?;
    let mut v = vec![C64::new(0.0, 0.0); n];
    let start = (trace_row.len() as f64).sqrt().recip();
    for &(i, _) in trace_row {
        v[i] = C64::new(start, 0.0);
    }
    let mut iterations = 0;
    for _ in 0..50 {
        iterations += 1;
        let w = lu_solve(&lu, &v);
        let s = norm(&w);
        if !s.is_finite() || s == 0.0 {
            return Err(Error::Factorization("shift-invert iteration broke down".into()));
        }
        let next: Vec<C64> = w.iter().map(|x| x / s).collect();
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        v = next;
        if change < 1e-13 {
            break;
        }
    }
    let tr: C64 = trace_row.iter().map(|&(i, _)| v[i]).sum();
    if tr.norm() < 1e-300 {
        return Err(Error::ZeroTrace);
    }
    Ok((v.iter().map(|x| x / tr).collect(), iterations))
}

/// GMRES with a block Gauss-Seidel preconditioner: exact LU on coherences
/// between equal charges, diagonal scaling on the rest.
fn block_gmres(
    a: &CsrMatrix,
    comp: &[usize],
    d: usize,
    charges: &[i32],
    rhs: &[C64],
    opts: &SolverOptions,
) -> Result<(Vec<C64>, usize)> {
    let (slow, fast): (Vec<usize>, Vec<usize>) = (0..comp.len()).partition(|&i| {
        let (r, c) = (comp[i] % d, comp[i] / d);
        charges[r] == charges[c]
    });
    if slow.len() > opts.direct_limit {
        return Err(Error::MemoryBudget { needed: slow.len(), budget: opts.direct_limit });
    }
    let a_ss = a.submatrix(&slow, &slow);
    let a_fs = a.submatrix(&fast, &slow);
    let lu = factor(&a_ss)?;
    let inv_diag: Vec<C64> = fast
        .iter()
        .map(|&i| {
            let v = a.get(i, i);
            if v.norm() > 0.0 {
                v.inv()
            } else {
                C64::new(1.0, 0.0)
            }
        })
        .collect();

    let precond = |r: &[C64]| -> Vec<C64> {
        let rs: Vec<C64> = slow.iter().map(|&i| r[i]).collect();
        let xs = lu_solve(&lu, &rs);
        let coupling = a_fs.mul_vec(&xs);
        let mut out = vec![C64::new(0.0, 0.0); r.len()];
        for (k, &i) in slow.iter().enumerate() {
            out[i] = xs[k];
        }
        for (k, &i) in fast.iter().enumerate() {
            out[i] = (r[i] - coupling[k]) * inv_diag[k];
        }
        out
    };
    let out = gmres(|v| a.mul_vec(v), precond, rhs, opts.gmres_tol, opts.restart, opts.max_iter);
    if !(out.rel_residual <= opts.gmres_tol * 100.0) {
        return Err(Error::NoConvergence(format!(
            "GMRES stopped at relative residual {:e} after {} iterations",
            out.rel_residual, out.iterations
        )));
    }
    Ok((out.x, out.iterations))
}

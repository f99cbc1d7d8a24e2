//! Number statistics, correlators and Wigner functions of steady states.

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    destroy, embed_at, expectation, number, partial_trace, pauli, spin_project, FactorId, Ion, Operator, Sign,
    SpinAxis,
};
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumberStats {
    pub mean_n: f64,
    pub mode_n: usize,
    pub mandel_q: f64,
    pub pn: Vec<f64>,
}

fn single_mode_cutoff(rho: &Operator) -> Result<usize> {
    match rho.space().factors() {
        [f] => Ok(f.dim),
        _ => Err(Error::ModeCount { expected: 1 }),
    }
}

/// Phonon-number distribution of a single-mode operator, normalized by its
/// trace.
pub fn number_stats(rho_phonon: &Operator) -> Result<NumberStats> {
    let cut = single_mode_cutoff(rho_phonon)?;
    let tr = rho_phonon.trace().re;
    if tr.abs() < 1e-300 {
        return Err(Error::ZeroTrace);
    }
    let pn: Vec<f64> = (0..cut).map(|n| rho_phonon.get(n, n).re / tr).collect();
    let mean: f64 = pn.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let second: f64 = pn.iter().enumerate().map(|(n, p)| (n * n) as f64 * p).sum();
    let mut mode = 0;
    for (n, &p) in pn.iter().enumerate() {
        if p > pn[mode] {
            mode = n;
        }
    }
    let mandel_q = if mean < 1e-12 { 0.0 } else { (second - mean * mean) / mean - 1.0 };
    Ok(NumberStats { mean_n: mean, mode_n: mode, mandel_q, pn })
}

/// C(X, Y) = ⟨XY⟩ − ⟨X⟩⟨Y⟩.
pub fn correlator(rho: &Operator, x: &Operator, y: &Operator) -> Result<C64> {
    let xy = x.try_mul(y)?;
    Ok(expectation(rho, &xy)? - expectation(rho, x)? * expectation(rho, y)?)
}

/// W(x, p) sampled on a rectangular grid; `values[i][j]` is at
/// `(x_axis[i], p_axis[j])`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

pub const MIN_GRID_POINTS: usize = 16;

pub fn uniform_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// 121 points on [−4.5, 4.5].
pub fn default_axis() -> Vec<f64> {
    uniform_axis(-4.5, 4.5, 121)
}

impl WignerGrid {
    /// Riemann sum of W with measure d²α = dx dp / 4.
    pub fn normalization(&self) -> f64 {
        let step = |a: &[f64]| if a.len() > 1 { a[1] - a[0] } else { 0.0 };
        let cell = step(&self.x_axis) * step(&self.p_axis) / 4.0;
        self.values.iter().flatten().sum::<f64>() * cell
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at the grid point nearest to (x, p).
    pub fn nearest(&self, x: f64, p: f64) -> f64 {
        let idx = |axis: &[f64], v: f64| {
            (0..axis.len())
                .min_by(|&a, &b| (axis[a] - v).abs().total_cmp(&(axis[b] - v).abs()))
                .unwrap_or(0)
        };
        self.values[idx(&self.x_axis, x)][idx(&self.p_axis, p)]
    }
}

/// exp(r(a† − a)) through one eigendecomposition of the Hermitian i(a† − a).
struct DisplacementKernel {
    vecs: Mat<C64>,
    vals: Vec<f64>,
}

impl DisplacementKernel {
    fn new(dim: usize) -> Result<Self> {
        let a = destroy(dim)?;
        let gen = a.adjoint().try_sub(&a)?.scale(C64::new(0.0, 1.0));
        let eig = gen
            .to_dense()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let vals = (0..dim).map(|i| eig.S().column_vector()[i].re).collect();
        Ok(DisplacementKernel { vecs: eig.U().to_owned(), vals })
    }

    /// Dense exp(r(a† − a)) = V exp(−irΛ) V†.
    fn real_displacement(&self, r: f64) -> Mat<C64> {
        let m = self.vals.len();
        let phases: Vec<C64> = self.vals.iter().map(|&l| C64::from_polar(1.0, -r * l)).collect();
        let mut scaled = self.vecs.clone();
        for j in 0..m {
            for i in 0..m {
                scaled[(i, j)] *= phases[j];
            }
        }
        &scaled * self.vecs.adjoint()
    }
}

/// Wigner function at α = (x + ip)/2 from the displaced parity
/// (2/π)·Tr[D(−α) ρ D(α) (−1)^n], with D(α) built at cutoff N + 10.
pub fn wigner(rho_phonon: &Operator, x_axis: &[f64], p_axis: &[f64]) -> Result<WignerGrid> {
    let n = single_mode_cutoff(rho_phonon)?;
    if x_axis.len() < MIN_GRID_POINTS || p_axis.len() < MIN_GRID_POINTS {
        return Err(Error::GridTooCoarse(format!(
            "{}×{} points; at least {MIN_GRID_POINTS} per axis required",
            x_axis.len(),
            p_axis.len()
        )));
    }
    let m = n + 10;
    let kernel = DisplacementKernel::new(m)?;
    let entries: Vec<(usize, usize, C64)> = rho_phonon.matrix().iter().collect();

    let values: Vec<Vec<f64>> = x_axis
        .par_iter()
        .map(|&x| {
            p_axis
                .iter()
                .map(|&p| {
                    let alpha = C64::new(x, p) / 2.0;
                    let (r, theta) = alpha.to_polar();
                    let e = kernel.real_displacement(r);
                    let mut acc = 0.0;
                    for col in 0..m {
                        // column `col` of D restricted to the support of ρ:
                        // D_{k,col} = e^{iθ(k − col)} E_{k,col}
                        let v = |k: usize| e[(k, col)] * C64::from_polar(1.0, theta * (k as f64 - col as f64));
                        let mut quad = C64::new(0.0, 0.0);
                        for &(j, k, val) in &entries {
                            quad += v(j).conj() * val * v(k);
                        }
                        let parity = if col % 2 == 0 { 1.0 } else { -1.0 };
                        acc += parity * quad.re;
                    }
                    2.0 / std::f64::consts::PI * acc
                })
                .collect()
        })
        .collect();
    Ok(WignerGrid { x_axis: x_axis.to_vec(), p_axis: p_axis.to_vec(), values })
}

fn spin_op(rho: &Operator, ion: Ion, axis: SpinAxis) -> Result<Operator> {
    let space = rho.space();
    let pos = space
        .position(FactorId::spin(ion))
        .ok_or_else(|| Error::MissingFactor(format!("spin{}", ion.number())))?;
    embed_at(&pauli(axis.pauli()), pos, space)
}

fn phonon_op(rho: &Operator, ion: Ion, op: &Operator) -> Result<Operator> {
    let space = rho.space();
    let pos = space
        .position(FactorId::phonon(ion))
        .ok_or_else(|| Error::MissingFactor(format!("phonon{}", ion.number())))?;
    embed_at(op, pos, space)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectedWigner {
    pub axis: SpinAxis,
    pub sign: Sign,
    /// Probability of the projection outcome.
    pub weight: f64,
    pub grid: WignerGrid,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpinPhononProfile {
    pub ion: Ion,
    /// C(σ^α, a) for α = x, y, z.
    pub with_amplitude: [C64; 3],
    /// C(σ^α, n) for α = x, y, z.
    pub with_number: [C64; 3],
    pub projected: Vec<ProjectedWigner>,
}

pub const SPIN_AXES: [SpinAxis; 3] = [SpinAxis::X, SpinAxis::Y, SpinAxis::Z];

/// Spin-phonon correlators of one ion and the Wigner functions of its
/// phonon mode after projecting its spin on each Pauli eigenstate. Other
/// factors are traced out.
pub fn spin_phonon_profile(
    rho: &Operator,
    ion: Ion,
    x_axis: &[f64],
    p_axis: &[f64],
) -> Result<SpinPhononProfile> {
    let cut = rho
        .space()
        .factors()
        .iter()
        .find(|f| f.id == FactorId::phonon(ion))
        .map(|f| f.dim)
        .ok_or_else(|| Error::MissingFactor(format!("phonon{}", ion.number())))?;
    let a = phonon_op(rho, ion, &destroy(cut)?)?;
    let n = phonon_op(rho, ion, &number(cut)?)?;
    let mut with_amplitude = [C64::new(0.0, 0.0); 3];
    let mut with_number = [C64::new(0.0, 0.0); 3];
    let mut projected = Vec::with_capacity(6);
    for (k, &axis) in SPIN_AXES.iter().enumerate() {
        let s = spin_op(rho, ion, axis)?;
        with_amplitude[k] = correlator(rho, &s, &a)?;
        with_number[k] = correlator(rho, &s, &n)?;
        for sign in [Sign::Plus, Sign::Minus] {
            let phonons = spin_project(rho, ion, axis, sign)?;
            let own = partial_trace(&phonons, &[FactorId::phonon(ion)])?;
            let weight = own.trace().re;
            let grid = wigner(&own, x_axis, p_axis)?;
            projected.push(ProjectedWigner { axis, sign, weight, grid });
        }
    }
    Ok(SpinPhononProfile { ion, with_amplitude, with_number, projected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{DensityMatrix, Space};

    fn fock(n: usize, cut: usize) -> DensityMatrix {
        DensityMatrix::basis_state(Space::phonon(cut), n)
    }

    fn coherent(alpha: C64, cut: usize) -> DensityMatrix {
        // amplitudes e^{−|α|²/2} αⁿ/√n!
        let mut psi = Vec::with_capacity(cut);
        let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..cut {
            if n > 0 {
                c = c * alpha / (n as f64).sqrt();
            }
            psi.push(c);
        }
        DensityMatrix::pure(Space::phonon(cut), &psi).unwrap()
    }

    #[test]
    fn fock_state_statistics() {
        let s = number_stats(&fock(3, 6)).unwrap();
        assert!((s.mean_n - 3.0).abs() < 1e-14);
        assert_eq!(s.mode_n, 3);
        assert!((s.mandel_q + 1.0).abs() < 1e-14);
    }

    #[test]
    fn coherent_state_is_poissonian() {
        let s = number_stats(&coherent(C64::new(2f64.sqrt(), 0.0), 30)).unwrap();
        assert!((s.mean_n - 2.0).abs() < 1e-6);
        assert!(s.mandel_q.abs() < 1e-3);
    }

    #[test]
    fn vacuum_has_zero_q_and_rejects_empty() {
        assert_eq!(number_stats(&fock(0, 4)).unwrap().mandel_q, 0.0);
        assert_eq!(number_stats(&Operator::zeros(Space::phonon(4))), Err(Error::ZeroTrace));
    }

    #[test]
    fn mode_prefers_smallest_index_on_ties() {
        let mix = &fock(1, 4).scale(0.5) + &fock(2, 4).scale(0.5);
        assert_eq!(number_stats(&mix).unwrap().mode_n, 1);
    }

    #[test]
    fn wigner_of_vacuum_and_one_phonon() {
        let axis = uniform_axis(-1.0, 1.0, 17);
        let w0 = wigner(&fock(0, 5), &axis, &axis).unwrap();
        assert!((w0.nearest(0.0, 0.0) - 2.0 / std::f64::consts::PI).abs() < 1e-6);
        let w1 = wigner(&fock(1, 5), &axis, &axis).unwrap();
        assert!((w1.nearest(0.0, 0.0) + 2.0 / std::f64::consts::PI).abs() < 1e-4);
    }

    #[test]
    fn wigner_vacuum_is_gaussian() {
        // W = (2/π) exp(−2|α|²) with α = (x + ip)/2
        let axis = uniform_axis(-3.0, 3.0, 25);
        let w = wigner(&fock(0, 20), &axis, &axis).unwrap();
        for (i, &x) in axis.iter().enumerate() {
            for (j, &p) in axis.iter().enumerate() {
                let expect = 2.0 / std::f64::consts::PI * (-(x * x + p * p) / 2.0).exp();
                assert!((w.values[i][j] - expect).abs() < 1e-9, "{x} {p}");
            }
        }
    }

    #[test]
    fn coherent_state_peaks_at_q_expectation() {
        // ⟨q⟩ = 2 Re α
        let alpha = C64::new(1.0, 0.0);
        let axis = uniform_axis(-4.0, 4.0, 41);
        let w = wigner(&coherent(alpha, 20), &axis, &axis).unwrap();
        let peak = w.nearest(2.0, 0.0);
        assert!((peak - w.max()).abs() < 1e-12);
        assert!((w.normalization() - 1.0).abs() < 0.03);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let axis = uniform_axis(-1.0, 1.0, 15);
        assert!(matches!(wigner(&fock(0, 3), &axis, &axis), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn correlator_of_product_state_vanishes() {
        let a = DensityMatrix::pure(Space::spin(), &[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let b = coherent(C64::new(0.5, 0.3), 6);
        let rho = a.tensor(&b);
        let space = rho.space().clone();
        let x = embed_at(&pauli(crate::hilbert::Pauli::Y), 0, &space).unwrap();
        let y = embed_at(&destroy(6).unwrap(), 1, &space).unwrap();
        assert!(correlator(&rho, &x, &y).unwrap().norm() < 1e-12);
        let var = correlator(&rho, &x, &x).unwrap();
        assert!(var.im.abs() < 1e-12 && var.re >= -1e-10);
    }
}

//! Relative-phase distribution of two phonon modes.
//!
//! P(φ) = Σ_k p_k e^{ikφ} with p_k = (1/2π) Σ ⟨n₁,n₂|ρ|m₁,m₂⟩ over pairs
//! with n₁ + n₂ = m₁ + m₂ and k = m₁ − n₁; φ is the phase of mode 1 minus
//! the phase of mode 2.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::Operator;
use crate::C64;

/// Grid size used for S and peak detection.
pub const PHASE_GRID: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseSpectrum {
    cutoff: usize,
    /// p_k for k = −(N−1) ..= N−1.
    coeffs: Vec<C64>,
}

impl PhaseSpectrum {
    /// Builds a spectrum from p_0 ..= p_{N−1}; negative orders follow by
    /// conjugation.
    pub fn from_nonnegative(coeffs: &[C64]) -> Self {
        let cutoff = coeffs.len();
        let mut all = vec![C64::new(0.0, 0.0); 2 * cutoff - 1];
        for (k, &c) in coeffs.iter().enumerate() {
            all[cutoff - 1 + k] = c;
            all[cutoff - 1 - k] = c.conj();
        }
        all[cutoff - 1] = coeffs[0];
        PhaseSpectrum { cutoff, coeffs: all }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn max_order(&self) -> i64 {
        self.cutoff as i64 - 1
    }

    /// p_k, zero outside the band.
    pub fn coeff(&self, k: i64) -> C64 {
        let idx = k + self.max_order();
        if idx < 0 || idx as usize >= self.coeffs.len() {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Default grid size for this band limit.
    pub fn grid_size(&self) -> usize {
        PHASE_GRID.max(8 * self.cutoff)
    }

    /// max_k |p_k| over odd k.
    pub fn odd_magnitude(&self) -> f64 {
        (1..=self.max_order())
            .step_by(2)
            .flat_map(|k| [self.coeff(k).norm(), self.coeff(-k).norm()])
            .fold(0.0, f64::max)
    }

    pub fn value_at(&self, phi: f64) -> f64 {
        let mut acc = self.coeff(0).re;
        for k in 1..=self.max_order() {
            // p_{−k} = conj(p_k) up to rounding; use both as stored
            let e = C64::from_polar(1.0, k as f64 * phi);
            acc += (self.coeff(k) * e + self.coeff(-k) * e.conj()).re;
        }
        acc
    }
}

/// Fourier coefficients of P(φ) for a two-mode phonon operator of unit
/// trace.
pub fn phase_spectrum(rho_p: &Operator) -> Result<PhaseSpectrum> {
    let n = match rho_p.space().factors() {
        [a, b] if a.dim == b.dim => a.dim,
        _ => return Err(Error::ModeCount { expected: 2 }),
    };
    let tr = rho_p.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::NonUnitTrace(tr.re));
    }
    let mut coeffs = vec![C64::new(0.0, 0.0); 2 * n - 1];
    for (r, c, v) in rho_p.matrix().iter() {
        let (n1, n2) = (r / n, r % n);
        let (m1, m2) = (c / n, c % n);
        if n1 + n2 == m1 + m2 {
            let k = m1 as i64 - n1 as i64;
            coeffs[(k + n as i64 - 1) as usize] += v;
        }
    }
    coeffs.iter_mut().for_each(|c| *c /= 2.0 * PI);
    Ok(PhaseSpectrum { cutoff: n, coeffs })
}

/// P on `m` uniform points φ_j = 2πj/m.
pub fn eval_phase(spec: &PhaseSpectrum, m: usize) -> Result<Vec<f64>> {
    if m < 8 * spec.cutoff {
        return Err(Error::GridTooCoarse(format!(
            "{m} phase points for cutoff {}; need at least {}",
            spec.cutoff,
            8 * spec.cutoff
        )));
    }
    Ok((0..m).map(|j| spec.value_at(2.0 * PI * j as f64 / m as f64)).collect())
}

pub fn phase_grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect()
}

fn default_values(spec: &PhaseSpectrum) -> Vec<f64> {
    eval_phase(spec, spec.grid_size()).expect("default grid satisfies the band limit")
}

/// S = 2π max P − 1.
pub fn sync_measure(spec: &PhaseSpectrum) -> f64 {
    let max = default_values(spec).into_iter().fold(f64::NEG_INFINITY, f64::max);
    2.0 * PI * max - 1.0
}

/// (Φ_c, Φ_s) = (∫cos φ P, −∫sin φ P) = 2π (Re p₁, Im p₁).
pub fn phase_moments(spec: &PhaseSpectrum) -> (f64, f64) {
    let p1 = spec.coeff(1);
    (2.0 * PI * p1.re, 2.0 * PI * p1.im)
}

/// max_φ |P − 1/2π| on the default grid.
pub fn flatness(spec: &PhaseSpectrum) -> f64 {
    let flat = 1.0 / (2.0 * PI);
    default_values(spec).into_iter().map(|v| (v - flat).abs()).fold(0.0, f64::max)
}

/// Indices of strict cyclic local maxima whose height above 1/2π exceeds
/// ten times `floor`.
pub fn significant_peaks(values: &[f64], floor: f64) -> Vec<usize> {
    let m = values.len();
    let flat = 1.0 / (2.0 * PI);
    (0..m)
        .filter(|&i| {
            let (prev, next) = (values[(i + m - 1) % m], values[(i + 1) % m]);
            values[i] > prev && values[i] > next && values[i] - flat > 10.0 * floor
        })
        .collect()
}

/// Number of significant peaks of P on the default grid.
pub fn peak_count(spec: &PhaseSpectrum, floor: f64) -> usize {
    significant_peaks(&default_values(spec), floor).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{DensityMatrix, Factor, FactorId, Ion, Space};

    fn two_modes(n: usize) -> Space {
        Space::new(vec![
            Factor { id: FactorId::phonon(Ion::First), dim: n },
            Factor { id: FactorId::phonon(Ion::Second), dim: n },
        ])
    }

    fn bell(n: usize) -> DensityMatrix {
        // (|0,1⟩ + |1,0⟩)/√2
        let mut psi = vec![C64::new(0.0, 0.0); n * n];
        psi[1] = C64::new(1.0, 0.0);
        psi[n] = C64::new(1.0, 0.0);
        DensityMatrix::pure(two_modes(n), &psi).unwrap()
    }

    #[test]
    fn fock_product_is_flat() {
        let rho = DensityMatrix::basis_state(two_modes(4), 2 * 4 + 3);
        let spec = phase_spectrum(&rho).unwrap();
        assert!((spec.coeff(0).re - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(flatness(&spec) < 1e-15);
        assert!(sync_measure(&spec).abs() < 1e-14);
        assert_eq!(phase_moments(&spec), (0.0, 0.0));
    }

    #[test]
    fn bell_state_oracle() {
        // P(φ) = (1 + cos φ)/2π, p_{±1} = 1/4π
        let spec = phase_spectrum(&bell(3)).unwrap();
        let quarter = 1.0 / (4.0 * PI);
        assert!((spec.coeff(1) - C64::new(quarter, 0.0)).norm() < 1e-15);
        assert!((spec.coeff(-1) - C64::new(quarter, 0.0)).norm() < 1e-15);
        let vals = eval_phase(&spec, 1024).unwrap();
        assert!((vals[0] - 1.0 / PI).abs() < 1e-14);
        assert!(vals[512].abs() < 1e-14);
        assert!((sync_measure(&spec) - 1.0).abs() < 1e-13);
        let (c, s) = phase_moments(&spec);
        assert!((c - 0.5).abs() < 1e-14 && s.abs() < 1e-14);
        let sum: f64 = vals.iter().sum::<f64>() * 2.0 * PI / 1024.0;
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moments_match_quadrature() {
        let spec = PhaseSpectrum::from_nonnegative(&[
            C64::new(1.0 / (2.0 * PI), 0.0),
            C64::new(0.03, -0.02),
            C64::new(0.01, 0.04),
        ]);
        let m = 1024;
        let vals = eval_phase(&spec, m).unwrap();
        let dphi = 2.0 * PI / m as f64;
        let c: f64 = phase_grid(m).iter().zip(&vals).map(|(p, v)| p.cos() * v).sum::<f64>() * dphi;
        let s: f64 = -phase_grid(m).iter().zip(&vals).map(|(p, v)| p.sin() * v).sum::<f64>() * dphi;
        let (pc, ps) = phase_moments(&spec);
        assert!((c - pc).abs() < 1e-10 && (s - ps).abs() < 1e-10);
    }

    #[test]
    fn grid_size_is_checked() {
        let spec = phase_spectrum(&bell(5)).unwrap();
        assert!(eval_phase(&spec, 39).is_err());
        assert!(eval_phase(&spec, 40).is_ok());
    }

    #[test]
    fn wrong_inputs_rejected() {
        let one = DensityMatrix::basis_state(Space::phonon(3), 0);
        assert_eq!(phase_spectrum(&one), Err(Error::ModeCount { expected: 2 }));
        let half = bell(3).scale(0.5);
        assert!(matches!(phase_spectrum(&half), Err(Error::NonUnitTrace(_))));
    }

    #[test]
    fn peaks_of_bimodal_and_unimodal_distributions() {
        let flat = 1.0 / (2.0 * PI);
        let two = PhaseSpectrum::from_nonnegative(&[C64::new(flat, 0.0), C64::new(0.0, 0.0), C64::new(0.05, 0.0)]);
        assert_eq!(peak_count(&two, 1e-12), 2);
        let one = PhaseSpectrum::from_nonnegative(&[C64::new(flat, 0.0), C64::new(0.05, 0.0)]);
        assert_eq!(peak_count(&one, 1e-12), 1);
        // a peak below the significance level is ignored
        assert_eq!(peak_count(&one, 0.02), 0);
    }
}

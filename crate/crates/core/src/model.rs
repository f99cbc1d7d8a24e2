//! Master equations for one or two ion phonon lasers.
//!
//! All rates are in units of the spin decay rate γ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{destroy, embed, number, pauli, BasisSpec, FactorKind, Ion, Operator, Pauli};
use crate::lindblad::{liouvillian, sandwich_term, Jump, Superoperator};
use crate::C64;

pub const DEFAULT_SINGLE_CUTOFF: usize = 15;
pub const DEFAULT_PAIR_CUTOFF: usize = 12;
pub const DEFAULT_VALIDATION_CUTOFF: usize = 10;

/// Physical parameters in units of γ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub gamma: f64,
    #[serde(rename = "Gamma")]
    pub damping: f64,
    #[serde(rename = "Omega1")]
    pub omega1: f64,
    #[serde(rename = "Omega2")]
    pub omega2: f64,
    /// Δ = ω₂ − ω₁.
    #[serde(rename = "Delta")]
    pub detuning: f64,
    #[serde(rename = "J")]
    pub coupling: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_mean: Option<f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::working_point()
    }
}

impl ModelParams {
    /// Ω₁ = Ω₂ = γ, Γ = γ/3, J = γ/10, Δ = 0.
    pub fn working_point() -> Self {
        ModelParams {
            gamma: 1.0,
            damping: 1.0 / 3.0,
            omega1: 1.0,
            omega2: 1.0,
            detuning: 0.0,
            coupling: 0.1,
            eta: None,
            omega_mean: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("gamma", self.gamma),
            ("Gamma", self.damping),
            ("Omega1", self.omega1),
            ("Omega2", self.omega2),
            ("J", self.coupling),
        ];
        for (name, v) in named {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if !self.detuning.is_finite() {
            return Err(Error::InvalidParams(format!("Delta must be finite, got {}", self.detuning)));
        }
        Ok(())
    }

    /// Checks the extra conditions of the lab-frame model and returns (η, ω̄).
    pub fn validate_lab_frame(&self) -> Result<(f64, f64)> {
        self.validate()?;
        let eta = self.eta.ok_or_else(|| Error::InvalidParams("eta is required".into()))?;
        let wbar = self
            .omega_mean
            .ok_or_else(|| Error::InvalidParams("omega_mean is required".into()))?;
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidParams(format!("eta must lie in (0, 1), got {eta}")));
        }
        let scale = [self.gamma, self.damping, self.detuning.abs(), self.omega1, self.omega2]
            .into_iter()
            .fold(0.0, f64::max);
        if !(wbar >= 50.0 * scale) {
            return Err(Error::InvalidParams(format!(
                "omega_mean = {wbar} must be at least 50 × {scale}"
            )));
        }
        Ok((eta, wbar))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rwa,
    Validation,
}

/// Hamiltonian, Lindblad channels and an optional extra superoperator.
#[derive(Clone, Debug)]
pub struct MasterEquation {
    pub basis: BasisSpec,
    pub hamiltonian: Operator,
    pub jumps: Vec<Jump>,
    pub extra: Option<Superoperator>,
}

impl MasterEquation {
    /// Full generator, labelled with the excitation number Σ(n − s) of each
    /// basis state.
    pub fn liouvillian(&self) -> Result<Superoperator> {
        let mut l = liouvillian(&self.hamiltonian, &self.jumps)?;
        if let Some(extra) = &self.extra {
            l = l.try_add(extra)?;
        }
        Ok(l.with_charges(self.basis.excitation_labels()))
    }
}

pub fn build(kind: ModelKind, params: &ModelParams, basis: &BasisSpec) -> Result<MasterEquation> {
    match kind {
        ModelKind::Rwa => build_rwa(params, basis),
        ModelKind::Validation => build_validation(params, basis),
    }
}

struct IonOps {
    a: Operator,
    n: Operator,
    sz: Operator,
    sx: Operator,
    sp: Operator,
    sm: Operator,
}

fn ion_ops(ion: Ion, basis: &BasisSpec) -> Result<IonOps> {
    let cut = basis.cutoff();
    let spin = |p| embed(&pauli(p), ion, FactorKind::Spin, basis);
    Ok(IonOps {
        a: embed(&destroy(cut)?, ion, FactorKind::Phonon, basis)?,
        n: embed(&number(cut)?, ion, FactorKind::Phonon, basis)?,
        sz: spin(Pauli::Z)?,
        sx: spin(Pauli::X)?,
        sp: spin(Pauli::Plus)?,
        sm: spin(Pauli::Minus)?,
    })
}

fn drive(params: &ModelParams, ion: Ion) -> f64 {
    match ion {
        Ion::First => params.omega1,
        Ion::Second => params.omega2,
    }
}

/// Rotating-wave, Lamb-Dicke model. For one ion the detuning and hopping
/// terms are absent.
pub fn build_rwa(params: &ModelParams, basis: &BasisSpec) -> Result<MasterEquation> {
    params.validate()?;
    let space = basis.space();
    let mut h = Operator::zeros(space);
    let mut jumps = Vec::new();
    let mut phonons = Vec::new();
    for ion in basis.ions() {
        let o = ion_ops(ion, basis)?;
        let sign = if ion == Ion::First { -1.0 } else { 1.0 };
        if basis.n_ions() == 2 && params.detuning != 0.0 {
            let free = &(2.0 * &o.n) - &o.sz;
            h = &h + &(0.25 * sign * params.detuning * &free);
        }
        let blue = &(&o.a.adjoint() * &o.sp) + &(&o.a * &o.sm);
        h = &h + &(0.5 * drive(params, ion) * &blue);
        jumps.push(Jump::new(params.gamma, o.sm.clone()));
        jumps.push(Jump::new(params.damping, o.a.clone()));
        phonons.push(o.a);
    }
    if basis.n_ions() == 2 && params.coupling != 0.0 {
        let hop = &(&phonons[1].adjoint() * &phonons[0]) + &(&phonons[0].adjoint() * &phonons[1]);
        h = &h + &(params.coupling * &hop);
    }
    Ok(MasterEquation { basis: *basis, hamiltonian: h.hermitized(), jumps, extra: None })
}

/// Lab-frame model with the sideband drive expanded to third order in η
/// and the recoil of spontaneous emission to second order.
pub fn build_validation(params: &ModelParams, basis: &BasisSpec) -> Result<MasterEquation> {
    let (eta, wbar) = params.validate_lab_frame()?;
    let space = basis.space();
    let mut h = Operator::zeros(space.clone());
    let mut jumps = Vec::new();
    let mut extra = Superoperator::zeros(space);
    let mut positions = Vec::new();
    // emission recoil: (γη²/5)(2qXq − q²X − Xq²), X = σ⁻ρσ⁺
    let c = params.gamma * eta * eta * angular_moment(2) / 4.0;
    for ion in basis.ions() {
        let o = ion_ops(ion, basis)?;
        let freq = if basis.n_ions() == 1 {
            wbar
        } else if ion == Ion::First {
            wbar - params.detuning / 2.0
        } else {
            wbar + params.detuning / 2.0
        };
        let q = &o.a + &o.a.adjoint();
        let q2 = &q * &q;
        let q3 = &q2 * &q;
        let free = &(2.0 * &o.n) - &o.sz;
        let motion = &q - &((eta * eta / 6.0) * &q3);
        h = &h + &(0.5 * freq * &free);
        h = &h + &(0.5 * drive(params, ion) * &(&o.sx * &motion));
        jumps.push(Jump::new(params.gamma, o.sm.clone()));
        jumps.push(Jump::new(params.damping, o.a.clone()));

        let re = |x: f64| C64::new(x, 0.0);
        extra = extra
            .try_add(&sandwich_term(re(2.0 * c), &(&q * &o.sm), &(&o.sp * &q))?)?
            .try_add(&sandwich_term(re(-c), &(&q2 * &o.sm), &o.sp)?)?
            .try_add(&sandwich_term(re(-c), &o.sm, &(&o.sp * &q2))?)?;
        positions.push(q);
    }
    if basis.n_ions() == 2 && params.coupling != 0.0 {
        h = &h + &(params.coupling * &(&positions[0] * &positions[1]));
    }
    Ok(MasterEquation { basis: *basis, hamiltonian: h.hermitized(), jumps, extra: Some(extra) })
}

/// ∫₋₁¹ zᵏ W(z) dz for the dipole pattern W(z) = ¾(1 + z²).
pub fn angular_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let k = k as f64;
    0.75 * (2.0 / (k + 1.0) + 2.0 / (k + 3.0))
}

/// Semiclassical limit-cycle occupation γ/2Γ − γ²/2Ω₁², floored at zero.
pub fn mean_field_n(params: &ModelParams) -> Result<f64> {
    if params.damping == 0.0 || params.omega1 == 0.0 {
        return Err(Error::InvalidParams("mean-field occupation needs Gamma > 0 and Omega1 > 0".into()));
    }
    let g = params.gamma;
    let n = g / (2.0 * params.damping) - g * g / (2.0 * params.omega1 * params.omega1);
    Ok(n.max(0.0))
}

/// Ω₁² > γΓ.
pub fn lasing_threshold(params: &ModelParams) -> bool {
    params.omega1 * params.omega1 > params.gamma * params.damping
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::DensityMatrix;
    use crate::lindblad::steady_state;

    fn single(omega: f64, damping: f64) -> ModelParams {
        ModelParams { omega1: omega, damping, coupling: 0.0, ..ModelParams::working_point() }
    }

    #[test]
    fn moments_of_dipole_pattern() {
        assert!((angular_moment(0) - 2.0).abs() < 1e-15);
        assert!((angular_moment(2) - 0.8).abs() < 1e-15);
        assert_eq!(angular_moment(3), 0.0);
        // γη²/5 coefficient
        assert!((angular_moment(2) / 4.0 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn mean_field_values() {
        assert!((mean_field_n(&single(1.0, 1.0 / 3.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((mean_field_n(&single(1.0, 0.1)).unwrap() - 4.5).abs() < 1e-12);
        let at = single(1.0, 1.0);
        assert_eq!(mean_field_n(&at).unwrap(), 0.0);
        assert!(mean_field_n(&single(0.0, 0.3)).is_err());
        assert!(mean_field_n(&single(1.0, 0.0)).is_err());
    }

    #[test]
    fn threshold_values() {
        assert!(lasing_threshold(&single(1.0, 1.0 / 3.0)));
        assert!(!lasing_threshold(&single(1.0, 1.0)));
        assert!(lasing_threshold(&single(0.5, 0.2)));
    }

    #[test]
    fn rwa_pair_is_hermitian_and_swap_symmetric() {
        let basis = BasisSpec::pair(4).unwrap();
        let p = ModelParams { coupling: 0.3, ..ModelParams::working_point() };
        let me = build_rwa(&p, &basis).unwrap();
        assert!(me.hamiltonian.hermiticity_defect() < 1e-12);
        let swapped = me.hamiltonian.permuted(&basis.swap_permutation());
        assert!(swapped.max_diff(&me.hamiltonian).unwrap() < 1e-14);
        assert_eq!(me.jumps.len(), 4);
    }

    #[test]
    fn undriven_pair_relaxes_to_ground() {
        let basis = BasisSpec::pair(3).unwrap();
        let p = ModelParams { omega1: 0.0, omega2: 0.0, coupling: 0.0, ..ModelParams::working_point() };
        let me = build_rwa(&p, &basis).unwrap();
        assert_eq!(me.hamiltonian.matrix().nnz(), 0);
        let ss = steady_state(&me.liouvillian().unwrap()).unwrap();
        let ground = DensityMatrix::basis_state(basis.space(), 0);
        assert!(ss.rho.max_diff(&ground).unwrap() < 1e-12);
    }

    #[test]
    fn validation_requires_lab_parameters() {
        let basis = BasisSpec::single(4).unwrap();
        let p = ModelParams::working_point();
        assert!(build_validation(&p, &basis).is_err());
        let low = ModelParams { eta: Some(0.1), omega_mean: Some(10.0), ..p.clone() };
        assert!(build_validation(&low, &basis).is_err());
        let bad_eta = ModelParams { eta: Some(1.5), omega_mean: Some(500.0), ..p };
        assert!(build_validation(&bad_eta, &basis).is_err());
    }

    #[test]
    fn validation_generator_preserves_trace_and_hermiticity() {
        let basis = BasisSpec::pair(3).unwrap();
        let p = ModelParams { eta: Some(0.2), omega_mean: Some(100.0), ..ModelParams::working_point() };
        let me = build_validation(&p, &basis).unwrap();
        let l = me.liouvillian().unwrap();
        assert!(l.trace_defect() < 1e-12);
        let extra = me.extra.as_ref().unwrap();
        assert!(extra.trace_defect() < 1e-12);
        let rho = DensityMatrix::maximally_mixed(basis.space());
        let out = l.apply(&rho).unwrap();
        assert!(out.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn negative_rates_rejected() {
        let p = ModelParams { damping: -0.1, ..ModelParams::working_point() };
        assert!(build_rwa(&p, &BasisSpec::single(3).unwrap()).is_err());
    }
}

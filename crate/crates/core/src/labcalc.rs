//! Laboratory rates for a pair of ⁴⁰Ca⁺ ions and the dimensionless ratios
//! they imply.
//!
//! Every frequency is an angular frequency in rad/s.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ATOMIC_MASS: f64 = 1.660_539_066_60e-27;

/// 2π × `hz`.
pub fn two_pi(hz: f64) -> f64 {
    2.0 * PI * hz
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoolingSource {
    /// The cooling formula evaluated with the listed laser parameters.
    Direct,
    /// The published rate of 2π × 5.6 kHz.
    Quoted,
}

pub const QUOTED_COOLING_RATE_HZ: f64 = 5.6e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabParams {
    pub omega_d: f64,
    pub delta_d: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub omega_c: f64,
    pub delta_c: f64,
    pub gamma_c: f64,
    pub eta: f64,
    pub omega_trap: f64,
    pub wavelength: f64,
    pub ion_mass: f64,
    /// Phonon hopping rate J.
    pub coupling: f64,
    pub cooling_source: CoolingSource,
}

impl Default for LabParams {
    fn default() -> Self {
        Self::ca40()
    }
}

impl LabParams {
    /// Dressing on 854 nm, cooling on the S–P₁/₂ line, 729 nm sideband drive.
    /// Δ_D is taken as an angular frequency of 2π × 42 MHz.
    pub fn ca40() -> Self {
        let gamma_c = two_pi(129.9e6);
        LabParams {
            omega_d: two_pi(1.8e6),
            delta_d: two_pi(42e6),
            gamma_1: two_pi(135.1e6),
            gamma_2: two_pi(9.9e6),
            omega_c: gamma_c,
            delta_c: two_pi(-100e6),
            gamma_c,
            eta: 1.0 / 30.0,
            omega_trap: two_pi(8.4e6),
            wavelength: 729e-9,
            ion_mass: 39.96 * ATOMIC_MASS,
            coupling: two_pi(1.68e3),
            cooling_source: CoolingSource::Direct,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_d", self.omega_d),
            ("gamma_1", self.gamma_1),
            ("gamma_2", self.gamma_2),
            ("omega_c", self.omega_c),
            ("gamma_c", self.gamma_c),
            ("omega_trap", self.omega_trap),
            ("wavelength", self.wavelength),
            ("ion_mass", self.ion_mass),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.coupling >= 0.0) {
            return Err(Error::InvalidParams(format!("coupling must be non-negative, got {}", self.coupling)));
        }
        if !(self.delta_d.is_finite() && self.delta_c.is_finite()) {
            return Err(Error::InvalidParams("detunings must be finite".into()));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidParams(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        Ok(())
    }
}

/// γ = Ω_D²(Γ₁+Γ₂) / ((Γ₁+Γ₂)² + 4Δ_D²).
pub fn dressed_gamma(p: &LabParams) -> f64 {
    let g = p.gamma_1 + p.gamma_2;
    p.omega_d * p.omega_d * g / (g * g + 4.0 * p.delta_d * p.delta_d)
}

/// Γ = η²Γ_c[P(Δ_c + ω) − P(Δ_c − ω)], P(x) = Ω_c² / (4x² + 4Γ_c²).
/// Negative values mean heating.
pub fn cooling_rate(p: &LabParams) -> f64 {
    let lorentz = |x: f64| p.omega_c * p.omega_c / (4.0 * x * x + 4.0 * p.gamma_c * p.gamma_c);
    p.eta * p.eta * p.gamma_c * (lorentz(p.delta_c + p.omega_trap) - lorentz(p.delta_c - p.omega_trap))
}

/// ω = ħk²/(2mη²) with k = 2π/λ.
pub fn trap_freq_for_eta(p: &LabParams) -> f64 {
    let k = 2.0 * PI / p.wavelength;
    HBAR * k * k / (2.0 * p.ion_mass * p.eta * p.eta)
}

/// An angular frequency reported both in rad/s and as ω/2π in Hz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rate {
    pub rad_per_s: f64,
    pub hz: f64,
}

impl From<f64> for Rate {
    fn from(w: f64) -> Self {
        Rate { rad_per_s: w, hz: w / (2.0 * PI) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabReport {
    pub params: LabParams,
    pub gamma: Rate,
    pub cooling_direct: Rate,
    pub cooling_quoted: Rate,
    pub cooling_used: Rate,
    /// quoted / direct.
    pub cooling_discrepancy: f64,
    pub trap_freq_for_eta: Rate,
    /// ω/γ with ω from `trap_freq_for_eta`.
    pub omega_over_gamma: f64,
    /// ω/γ with the configured trap frequency.
    pub omega_trap_over_gamma: f64,
    pub damping_over_gamma: f64,
    pub gamma_over_damping: f64,
    pub coupling_over_gamma: f64,
    pub delta_d_convention: &'static str,
    pub notes: Vec<String>,
}

pub fn lab_report(p: &LabParams) -> Result<LabReport> {
    p.validate()?;
    let gamma = dressed_gamma(p);
    let direct = cooling_rate(p);
    let quoted = two_pi(QUOTED_COOLING_RATE_HZ);
    let used = match p.cooling_source {
        CoolingSource::Direct => direct,
        CoolingSource::Quoted => quoted,
    };
    let omega = trap_freq_for_eta(p);
    let discrepancy = quoted / direct;
    let mut notes = Vec::new();
    if (discrepancy - 1.0).abs() > 0.05 {
        notes.push(format!(
            "cooling formula gives 2π×{:.3} kHz but the quoted rate is 2π×{:.1} kHz (ratio {:.3}); downstream ratios use the {} value",
            direct / two_pi(1e3),
            QUOTED_COOLING_RATE_HZ / 1e3,
            discrepancy,
            match p.cooling_source {
                CoolingSource::Direct => "direct",
                CoolingSource::Quoted => "quoted",
            }
        ));
    }
    if used <= 0.0 {
        notes.push("cooling laser detuning heats the motion".into());
    }
    Ok(LabReport {
        params: p.clone(),
        gamma: gamma.into(),
        cooling_direct: direct.into(),
        cooling_quoted: quoted.into(),
        cooling_used: used.into(),
        cooling_discrepancy: discrepancy,
        trap_freq_for_eta: omega.into(),
        omega_over_gamma: omega / gamma,
        omega_trap_over_gamma: p.omega_trap / gamma,
        damping_over_gamma: used / gamma,
        gamma_over_damping: gamma / used,
        coupling_over_gamma: p.coupling / gamma,
        delta_d_convention: "angular: delta_d = 2π × 42 MHz",
        notes,
    })
}

/// Parses an angular frequency. Accepted forms: a plain number (rad/s),
/// `<number> rad/s`, `2π×<number><unit>` (also `2pi*`, `2*pi*`) and
/// `<number><unit>` with unit Hz, kHz, MHz or GHz; a Hz unit always means a
/// cyclic frequency and is multiplied by 2π.
pub fn parse_frequency(text: &str) -> Result<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    match s.strip_prefix('-') {
        Some(rest) => Ok(-parse_unsigned(rest, text)?),
        None => parse_unsigned(&s, text),
    }
}

fn parse_unsigned(s: &str, text: &str) -> Result<f64> {
    let bad = || Error::InvalidParams(format!("cannot parse frequency {text:?}"));
    let mut s = s.to_string();
    for prefix in ["2π×", "2π*", "2π", "2pi×", "2pi*", "2*pi*", "2*π*", "2×π×"] {
        if let Some(rest) = s.strip_prefix(prefix) {
            s = rest.to_string();
            break;
        }
    }
    if let Some(num) = s.strip_suffix("rad/s") {
        return num.parse::<f64>().map_err(|_| bad());
    }
    let units = [("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)];
    for (unit, scale) in units {
        if let Some(num) = s.strip_suffix(unit) {
            let v: f64 = num.parse().map_err(|_| bad())?;
            return Ok(two_pi(v * scale));
        }
    }
    if text.contains('π') || text.contains("pi") {
        // 2π×<number> without a unit: number in Hz
        return s.parse::<f64>().map(two_pi).map_err(|_| bad());
    }
    s.parse::<f64>().map_err(|_| bad())
}

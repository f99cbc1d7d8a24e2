//! Parameter sweeps with a Fock-cutoff convergence gate.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{embed, partial_trace, pauli, BasisSpec, FactorId, FactorKind, Ion, Operator, Pauli};
use crate::lindblad::{steady_state_with, SolverOptions, SteadyStateResult};
use crate::model::{build, ModelKind, ModelParams};
use crate::observables::{correlator, number_stats};
use crate::phase::{flatness, peak_count, phase_moments, phase_spectrum, sync_measure, PhaseSpectrum};

/// Swept parameter. `InverseDamping` sets Γ = γ / value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "Gamma")]
    Damping,
    #[serde(rename = "gamma_over_Gamma")]
    InverseDamping,
    #[serde(rename = "Delta")]
    Detuning,
    #[serde(rename = "Omega1")]
    Omega1,
    #[serde(rename = "J")]
    Coupling,
}

impl Axis {
    pub const ALL: [Axis; 5] = [Axis::Damping, Axis::InverseDamping, Axis::Detuning, Axis::Omega1, Axis::Coupling];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Damping => "Gamma",
            Axis::InverseDamping => "gamma_over_Gamma",
            Axis::Detuning => "Delta",
            Axis::Omega1 => "Omega1",
            Axis::Coupling => "J",
        }
    }

    pub fn apply(self, base: &ModelParams, value: f64) -> ModelParams {
        let mut p = base.clone();
        match self {
            Axis::Damping => p.damping = value,
            Axis::InverseDamping => p.damping = p.gamma / value,
            Axis::Detuning => p.detuning = value,
            Axis::Omega1 => p.omega1 = value,
            Axis::Coupling => p.coupling = value,
        }
        p
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown axis {s:?}; expected one of Gamma, gamma_over_Gamma, Delta, Omega1, J")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    MeanN,
    ModeN,
    MandelQ,
    #[serde(rename = "S")]
    Sync,
    PhiC,
    PhiS,
    Czz,
    Cxx,
    Cxy,
    Cyx,
    Peaks,
}

impl Observable {
    pub const ALL: [Observable; 11] = [
        Observable::MeanN,
        Observable::ModeN,
        Observable::MandelQ,
        Observable::Sync,
        Observable::PhiC,
        Observable::PhiS,
        Observable::Czz,
        Observable::Cxx,
        Observable::Cxy,
        Observable::Cyx,
        Observable::Peaks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::MeanN => "mean_n",
            Observable::ModeN => "mode_n",
            Observable::MandelQ => "mandel_q",
            Observable::Sync => "S",
            Observable::PhiC => "phi_c",
            Observable::PhiS => "phi_s",
            Observable::Czz => "czz",
            Observable::Cxx => "cxx",
            Observable::Cxy => "cxy",
            Observable::Cyx => "cyx",
            Observable::Peaks => "peaks",
        }
    }

    /// Needs two ions.
    pub fn is_pair(self) -> bool {
        !matches!(self, Observable::MeanN | Observable::ModeN | Observable::MandelQ)
    }

    fn needs_spectrum(self) -> bool {
        matches!(self, Observable::Sync | Observable::PhiC | Observable::PhiS | Observable::Peaks)
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL.into_iter().find(|o| o.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Observable::ALL.iter().map(|o| o.name()).collect();
            Error::InvalidParams(format!("unknown observable {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

pub const DEFAULT_CONVERGENCE_STEP: usize = 3;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-4;

pub fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    crate::observables::uniform_axis(lo, hi, n)
}

/// 17 points on Δ/γ ∈ [0, 3].
pub fn detuning_axis() -> Vec<f64> {
    uniform(0.0, 3.0, 17)
}

/// 11 points on Ω₁/Ω₂ ∈ [1, 2].
pub fn drive_ratio_axis() -> Vec<f64> {
    uniform(1.0, 2.0, 11)
}

/// 17 points on γ/Γ ∈ [1, 9].
pub fn inverse_damping_axis() -> Vec<f64> {
    uniform(1.0, 9.0, 17)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub model: ModelKind,
    pub ions: usize,
    pub base: ModelParams,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub observables: Vec<Observable>,
    pub cutoff: usize,
    pub convergence_step: usize,
    pub convergence_tol: f64,
    /// Run the enlarged-cutoff comparison at every point.
    pub gate: bool,
    /// Keep P(φ) coefficients in each record.
    pub keep_spectra: bool,
    pub workers: usize,
    #[serde(skip)]
    pub solver: SolverOptions,
}

impl SweepSpec {
    pub fn new(model: ModelKind, ions: usize, base: ModelParams, axis: Axis, values: Vec<f64>, observables: Vec<Observable>, cutoff: usize) -> Self {
        SweepSpec {
            model,
            ions,
            base,
            axis,
            values,
            observables,
            cutoff,
            convergence_step: DEFAULT_CONVERGENCE_STEP,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            gate: true,
            keep_spectra: false,
            workers: 1,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("sweep values must be finite and non-empty".into()));
        }
        if self.observables.is_empty() {
            return Err(Error::InvalidParams("at least one observable is required".into()));
        }
        BasisSpec::new(self.ions, self.cutoff)?;
        if self.ions == 1 {
            if let Some(o) = self.observables.iter().find(|o| o.is_pair()) {
                return Err(Error::InvalidParams(format!("observable {o} needs two ions")));
            }
        }
        for &v in &self.values {
            self.axis.apply(&self.base, v).validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointRecord {
    pub value: f64,
    /// Aligned with `SweepSpec::observables`; NaN on failure.
    pub observables: Vec<f64>,
    pub residual: f64,
    pub min_eig: f64,
    pub cutoff_used: usize,
    pub converged: bool,
    /// Largest observable change under the cutoff increase.
    pub gate_delta: Option<f64>,
    pub note: Option<String>,
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<PhaseSpectrum>,
}

impl PointRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn get(&self, spec: &SweepSpec, o: Observable) -> Option<f64> {
        spec.observables.iter().position(|&x| x == o).map(|i| self.observables[i])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub flatness_floor: Option<f64>,
    pub records: Vec<PointRecord>,
}

impl SweepResult {
    pub fn column(&self, o: Observable) -> Option<Vec<f64>> {
        let i = self.spec.observables.iter().position(|&x| x == o)?;
        Some(self.records.iter().map(|r| r.observables[i]).collect())
    }

    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged && !r.failed())
    }
}

/// A solved state with its basis.
#[derive(Clone, Debug)]
pub struct Solution {
    pub basis: BasisSpec,
    pub steady: SteadyStateResult,
}

impl Solution {
    pub fn rho(&self) -> &Operator {
        self.steady.rho.as_operator()
    }

    /// Reduced state of one phonon mode.
    pub fn phonon(&self, ion: Ion) -> Result<Operator> {
        partial_trace(self.rho(), &[FactorId::phonon(ion)])
    }

    /// Both phonon modes, spins traced out.
    pub fn phonons(&self) -> Result<Operator> {
        let keep: Vec<FactorId> = self.basis.ions().map(FactorId::phonon).collect();
        partial_trace(self.rho(), &keep)
    }

    pub fn spectrum(&self) -> Result<PhaseSpectrum> {
        phase_spectrum(&self.phonons()?)
    }

    fn spin(&self, ion: Ion, p: Pauli) -> Result<Operator> {
        embed(&pauli(p), ion, FactorKind::Spin, &self.basis)
    }

    /// Re C(σ₁^a, σ₂^b).
    pub fn spin_correlator(&self, a: Pauli, b: Pauli) -> Result<f64> {
        let x = self.spin(Ion::First, a)?;
        let y = self.spin(Ion::Second, b)?;
        Ok(correlator(self.rho(), &x, &y)?.re)
    }
}

pub fn solve(kind: ModelKind, params: &ModelParams, basis: BasisSpec, opts: &SolverOptions) -> Result<Solution> {
    let me = build(kind, params, &basis)?;
    let steady = steady_state_with(&me.liouvillian()?, opts)?;
    Ok(Solution { basis, steady })
}

/// Observable values in the requested order.
pub fn evaluate(sol: &Solution, observables: &[Observable], floor: f64) -> Result<(Vec<f64>, Option<PhaseSpectrum>)> {
    let stats = if observables.iter().any(|o| !o.is_pair()) {
        Some(number_stats(&sol.phonon(Ion::First)?)?)
    } else {
        None
    };
    let spectrum = if observables.iter().any(|o| o.needs_spectrum()) {
        Some(sol.spectrum()?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(observables.len());
    for o in observables {
        let v = match o {
            Observable::MeanN => stats.as_ref().map(|s| s.mean_n).unwrap_or(f64::NAN),
            Observable::ModeN => stats.as_ref().map(|s| s.mode_n as f64).unwrap_or(f64::NAN),
            Observable::MandelQ => stats.as_ref().map(|s| s.mandel_q).unwrap_or(f64::NAN),
            Observable::Sync => sync_measure(spectrum.as_ref().unwrap()),
            Observable::PhiC => phase_moments(spectrum.as_ref().unwrap()).0,
            Observable::PhiS => phase_moments(spectrum.as_ref().unwrap()).1,
            Observable::Peaks => peak_count(spectrum.as_ref().unwrap(), floor) as f64,
            Observable::Czz => sol.spin_correlator(Pauli::Z, Pauli::Z)?,
            Observable::Cxx => sol.spin_correlator(Pauli::X, Pauli::X)?,
            Observable::Cxy => sol.spin_correlator(Pauli::X, Pauli::Y)?,
            Observable::Cyx => sol.spin_correlator(Pauli::Y, Pauli::X)?,
        };
        out.push(v);
    }
    Ok((out, spectrum))
}

/// max_φ |P − 1/2π| of the uncoupled pair at the sweep's base point.
pub fn flatness_floor(spec: &SweepSpec) -> Result<f64> {
    let uncoupled = ModelParams { coupling: 0.0, ..spec.base.clone() };
    let sol = solve(spec.model, &uncoupled, BasisSpec::pair(spec.cutoff)?, &spec.solver)?;
    Ok(flatness(&sol.spectrum()?))
}

/// Outcome of comparing observables at N and N + step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateOutcome {
    pub converged: bool,
    pub max_delta: Option<f64>,
    pub reason: Option<String>,
}

pub fn convergence_gate(spec: &SweepSpec, value: f64, at_cutoff: &[f64], floor: f64) -> GateOutcome {
    let params = spec.axis.apply(&spec.base, value);
    let bigger = spec.cutoff + spec.convergence_step;
    let attempt = BasisSpec::new(spec.ions, bigger)
        .and_then(|b| solve(spec.model, &params, b, &spec.solver))
        .and_then(|sol| evaluate(&sol, &spec.observables, floor));
    match attempt {
        Ok((vals, _)) => {
            let delta = at_cutoff
                .iter()
                .zip(&vals)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, |m: f64, d| if d.is_nan() { f64::INFINITY } else { m.max(d) });
            GateOutcome {
                converged: delta < spec.convergence_tol,
                max_delta: Some(delta),
                reason: (delta >= spec.convergence_tol)
                    .then(|| format!("observables moved by {delta:e} from N={} to N={bigger}", spec.cutoff)),
            }
        }
        Err(Error::MemoryBudget { needed, budget }) => GateOutcome {
            converged: false,
            max_delta: None,
            reason: Some(format!("cutoff {bigger} needs {needed} unknowns, budget is {budget}")),
        },
        Err(e) => GateOutcome { converged: false, max_delta: None, reason: Some(format!("gate solve failed: {e}")) },
    }
}

/// One point of a sweep, keeping the solved state for further analysis.
/// Solver failures end up in the record, not in the return value.
pub fn solve_point(spec: &SweepSpec, value: f64, floor: f64) -> (PointRecord, Option<Solution>) {
    let n_obs = spec.observables.len();
    let failed = |e: Error| PointRecord {
        value,
        observables: vec![f64::NAN; n_obs],
        residual: f64::NAN,
        min_eig: f64::NAN,
        cutoff_used: spec.cutoff,
        converged: false,
        gate_delta: None,
        note: None,
        error: Some(e.to_string()),
        spectrum: None,
    };
    let params = spec.axis.apply(&spec.base, value);
    let sol = match BasisSpec::new(spec.ions, spec.cutoff).and_then(|b| solve(spec.model, &params, b, &spec.solver)) {
        Ok(s) => s,
        Err(e) => return (failed(e), None),
    };
    let (vals, spectrum) = match evaluate(&sol, &spec.observables, floor) {
        Ok(v) => v,
        Err(e) => return (failed(e), Some(sol)),
    };
    let gate = if spec.gate {
        convergence_gate(spec, value, &vals, floor)
    } else {
        GateOutcome { converged: true, max_delta: None, reason: Some("convergence gate disabled".into()) }
    };
    let record = PointRecord {
        value,
        observables: vals,
        residual: sol.steady.residual,
        min_eig: sol.steady.min_eig,
        cutoff_used: spec.cutoff,
        converged: gate.converged,
        gate_delta: gate.max_delta,
        note: gate.reason,
        error: None,
        spectrum: if spec.keep_spectra { spectrum } else { None },
    };
    (record, Some(sol))
}

fn sweep_floor(spec: &SweepSpec) -> Result<Option<f64>> {
    let needs_floor = spec.ions == 2 && spec.observables.iter().any(|o| o.needs_spectrum());
    if needs_floor {
        flatness_floor(spec).map(Some)
    } else {
        Ok(None)
    }
}

/// A one-point sweep at `spec.values[0]` together with its state.
pub fn run_single_point(spec: &SweepSpec) -> Result<(SweepResult, Option<Solution>)> {
    spec.validate()?;
    let floor = sweep_floor(spec)?;
    let (record, sol) = solve_point(spec, spec.values[0], floor.unwrap_or(0.0));
    Ok((SweepResult { spec: spec.clone(), flatness_floor: floor, records: vec![record] }, sol))
}

/// One steady-state solve per axis value (two with the gate), evaluated in
/// parallel on at most `spec.workers` threads and returned in axis order.
/// Failed points are recorded, not propagated.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let floor = sweep_floor(spec)?;
    let f = floor.unwrap_or(0.0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    let records = pool.install(|| spec.values.par_iter().map(|&v| solve_point(spec, v, f).0).collect());
    Ok(SweepResult { spec: spec.clone(), flatness_floor: floor, records })
}

pub const FIG4_OBSERVABLES: [Observable; 6] = [
    Observable::Czz,
    Observable::Cxx,
    Observable::Cxy,
    Observable::PhiC,
    Observable::PhiS,
    Observable::Sync,
];

pub const VALIDATION_OBSERVABLES: [Observable; 3] = [Observable::Czz, Observable::Cxx, Observable::Cxy];

/// Lamb-Dicke parameter and mean trap frequency of the validation overlay.
pub const VALIDATION_ETA: f64 = 1.0 / 30.0;
pub const VALIDATION_OMEGA_MEAN: f64 = 500.0;

#[derive(Clone, Debug)]
pub struct Fig4Options {
    pub cutoff: usize,
    pub validation_cutoff: usize,
    pub values: Vec<f64>,
    pub gate: bool,
    pub with_validation: bool,
    pub workers: usize,
    pub solver: SolverOptions,
}

impl Default for Fig4Options {
    fn default() -> Self {
        Fig4Options {
            cutoff: crate::model::DEFAULT_PAIR_CUTOFF,
            validation_cutoff: crate::model::DEFAULT_VALIDATION_CUTOFF,
            values: detuning_axis(),
            gate: true,
            with_validation: true,
            workers: 1,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Fig4Result {
    pub balanced: bool,
    pub rwa: SweepResult,
    pub validation: Option<SweepResult>,
}

/// Correlators, phase moments and S against Δ at the working point, with
/// Ω₁ = 5/4 unless `balanced`; optionally overlaid with the lab-frame model.
pub fn run_fig4(balanced: bool, opts: &Fig4Options) -> Result<Fig4Result> {
    let base = ModelParams {
        omega1: if balanced { 1.0 } else { 1.25 },
        ..ModelParams::working_point()
    };
    let mut spec = SweepSpec::new(
        ModelKind::Rwa,
        2,
        base.clone(),
        Axis::Detuning,
        opts.values.clone(),
        FIG4_OBSERVABLES.to_vec(),
        opts.cutoff,
    );
    spec.gate = opts.gate;
    spec.workers = opts.workers;
    spec.solver = opts.solver.clone();
    let rwa = run_sweep(&spec)?;
    let validation = if opts.with_validation {
        let lab = ModelParams { eta: Some(VALIDATION_ETA), omega_mean: Some(VALIDATION_OMEGA_MEAN), ..base };
        let mut vspec = SweepSpec::new(
            ModelKind::Validation,
            2,
            lab,
            Axis::Detuning,
            opts.values.clone(),
            VALIDATION_OBSERVABLES.to_vec(),
            opts.validation_cutoff,
        );
        vspec.gate = true;
        vspec.workers = opts.workers;
        vspec.solver = opts.solver.clone();
        Some(run_sweep(&vspec)?)
    } else {
        None
    };
    Ok(Fig4Result { balanced, rwa, validation })
}

//! One function per subcommand: build the computation from the merged
//! parameters, run it and hand the results to the emitter.

use ionsync::hilbert::{partial_trace, BasisSpec, spin_project, FactorId, Ion, Sign, SpinAxis};
use ionsync::labcalc::{lab_report, parse_frequency, CoolingSource, LabParams, ATOMIC_MASS};
use ionsync::model::{ModelKind, ModelParams, DEFAULT_PAIR_CUTOFF, DEFAULT_SINGLE_CUTOFF, DEFAULT_VALIDATION_CUTOFF};
use ionsync::observables::{default_axis, spin_phonon_profile, uniform_axis, wigner, MIN_GRID_POINTS};
use ionsync::sweeps::{
    detuning_axis, drive_ratio_axis, inverse_damping_axis, run_fig4, run_single_point, run_sweep, uniform, Axis,
    Fig4Options, Observable, SweepResult, SweepSpec, DEFAULT_CONVERGENCE_STEP, DEFAULT_CONVERGENCE_TOL,
    VALIDATION_ETA, VALIDATION_OBSERVABLES, VALIDATION_OMEGA_MEAN,
};
use serde_json::json;

use crate::config::{Params, RunConfig, Subcommand};
use crate::emit::{num, Emitter};

const SINGLE_OBSERVABLES: [Observable; 3] = [Observable::MeanN, Observable::ModeN, Observable::MandelQ];
const PAIR_OBSERVABLES: [Observable; 8] = [
    Observable::Sync,
    Observable::Peaks,
    Observable::PhiC,
    Observable::PhiS,
    Observable::Czz,
    Observable::Cxx,
    Observable::Cxy,
    Observable::Cyx,
];

/// Runs the configured subcommand. Returns whether every requested point
/// was solved and passed its convergence check.
pub fn run(cfg: &RunConfig) -> anyhow::Result<bool> {
    let mut out = Emitter::new(&cfg.output, cfg.format)?;
    let p = Params::new(cfg);
    match cfg.subcommand {
        Subcommand::Single => single(&p, &mut out)?,
        Subcommand::Pair => pair(&p, &mut out)?,
        Subcommand::Sweep => sweep(&p, &mut out)?,
        Subcommand::Fig2 => fig2(&p, &mut out)?,
        Subcommand::Fig3 => fig3(&p, &mut out)?,
        Subcommand::Fig4 => fig4(&p, &mut out)?,
        Subcommand::Validate => validate(&p, &mut out)?,
        Subcommand::Wigner => wigner_run(&p, &mut out)?,
        Subcommand::Lab => lab(&p, &mut out)?,
    }
    let ok = out.all_converged();
    out.finish(cfg)?;
    Ok(ok)
}

fn model_kind(p: &Params) -> anyhow::Result<ModelKind> {
    match p.text("model").unwrap_or("rwa") {
        "rwa" => Ok(ModelKind::Rwa),
        "validation" => Ok(ModelKind::Validation),
        other => Err(p.invalid(format!("model must be rwa or validation, got {other:?}"))),
    }
}

/// Model parameters in units of γ, starting from the working point.
fn model_params(p: &Params, kind: ModelKind) -> anyhow::Result<ModelParams> {
    let mut m = shared_params(p)?;
    if kind == ModelKind::Validation {
        m.eta = Some(p.number("eta", VALIDATION_ETA));
        m.omega_mean = Some(p.number("omega-mean", VALIDATION_OMEGA_MEAN));
    } else if p.has("eta") || p.has("omega-mean") {
        return Err(p.invalid("eta and omega-mean apply only to the validation model"));
    }
    m.validate()?;
    Ok(m)
}

fn shared_params(p: &Params) -> anyhow::Result<ModelParams> {
    let mut m = ModelParams::working_point();
    m.omega1 = p.number("omega1", m.omega1);
    m.omega2 = p.number("omega2", m.omega2);
    m.detuning = p.number("delta", m.detuning);
    m.coupling = p.number("j", m.coupling);
    match (p.opt_number("damping"), p.opt_number("gamma-ratio")) {
        (Some(_), Some(_)) => return Err(p.invalid("give either damping or gamma-ratio, not both")),
        (Some(d), None) => m.damping = d,
        (None, Some(r)) if r > 0.0 => m.damping = m.gamma / r,
        (None, Some(r)) => return Err(p.invalid(format!("gamma-ratio must be positive, got {r}"))),
        (None, None) => {}
    }
    Ok(m)
}

fn base_spec(p: &Params, kind: ModelKind, ions: usize, base: ModelParams, axis: Axis, values: Vec<f64>, obs: Vec<Observable>, default_cutoff: usize) -> SweepSpec {
    let mut spec = SweepSpec::new(kind, ions, base, axis, values, obs, p.integer("cutoff", default_cutoff));
    spec.gate = p.flag("gate", true);
    spec.workers = p.integer("workers", 1).max(1);
    spec.convergence_step = p.integer("convergence-step", DEFAULT_CONVERGENCE_STEP);
    spec.convergence_tol = p.number("convergence-tol", DEFAULT_CONVERGENCE_TOL);
    spec
}

fn wigner_axes(p: &Params) -> anyhow::Result<Vec<f64>> {
    if !p.has("grid-points") && !p.has("extent") {
        return Ok(default_axis());
    }
    let n = p.integer("grid-points", 121);
    let extent = p.number("extent", 4.5);
    if n < MIN_GRID_POINTS || !(extent > 0.0) {
        return Err(p.invalid(format!("Wigner grid needs at least {MIN_GRID_POINTS} points and a positive extent")));
    }
    Ok(uniform_axis(-extent, extent, n))
}

fn log(msg: impl AsRef<str>) {
    eprintln!("ionsync: {}", msg.as_ref());
}

fn single(p: &Params, out: &mut Emitter) -> anyhow::Result<()> {
    let base = model_params(p, ModelKind::Rwa)?;
    let spec = base_spec(p, ModelKind::Rwa, 1, base.clone(), Axis::Omega1, vec![base.omega1], SINGLE_OBSERVABLES.to_vec(), DEFAULT_SINGLE_CUTOFF);
    let (result, sol) = run_single_point(&spec)?;
    report(&result);
    out.sweep("single", &result)?;
    if let Some(sol) = sol {
        let stats = ionsync::observables::number_stats(&sol.phonon(Ion::First)?)?;
        let rows: Vec<Vec<String>> = stats.pn.iter().enumerate().map(|(n, &pn)| vec![n.to_string(), num(pn)]).collect();
        out.csv("pn.csv", &["n", "p"], rows)?;
        if p.has("grid-points") || p.has("extent") {
            let axis = wigner_axes(p)?;
            out.wigner("wigner.csv", &wigner(&sol.phonon(Ion::First)?, &axis, &axis)?)?;
        }
    }
    Ok(())
}

fn pair(p: &Params, out: &mut Emitter) -> anyhow::Result<()> {
    let kind = model_kind(p)?;
    let base = model_params(p, kind)?;
    let obs = match kind {
        ModelKind::Rwa => PAIR_OBSERVABLES.to_vec(),
        ModelKind::Validation => VALIDATION_OBSERVABLES.to_vec(),
    };
    let default_cutoff = match kind {
        ModelKind::Rwa => DEFAULT_PAIR_CUTOFF,
        ModelKind::Validation => DEFAULT_VALIDATION_CUTOFF,
    };
    let mut spec = base_spec(p, kind, 2, base.clone(), Axis::Detuning, vec![base.detuning], obs, default_cutoff);
    spec.keep_spectra = kind == ModelKind::Rwa;
    let (mut result, _) = run_single_point(&spec)?;
    report(&result);
    if let Some(s) = result.records[0].spectrum.take() {
        out.phase("phase.csv", &s)?;
    }
    out.sweep("pair", &result)?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(p: &Params, key: &str, text: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| p.invalid(format!("{key}: {e}"))))
        .collect()
}

fn sweep(p: &Params, out: &mut Emitter) -> anyhow::Result<()> {
    let kind = model_kind(p)?;
    let ions = p.integer("ions", 2);
    let axis: Axis = p.text("axis").ok_or_else(|| p.invalid("axis is required"))?.parse().map_err(|e| p.invalid(e))?;
    let values = match (p.text("values"), p.opt_number("from"), p.opt_number("to")) {
        (Some(v), None, None) => parse_list::<f64>(p, "values", v)?,
        (None, Some(a), Some(b)) => uniform(a, b, p.integer("points", 17)),
        _ => return Err(p.invalid("give either values or from, to (and optionally points)")),
    };
    let default_obs = if ions == 1 { SINGLE_OBSERVABLES.to_vec() } else { PAIR_OBSERVABLES.to_vec() };
    let obs = match p.text("observables") {
        Some(t) => parse_list::<Observable>(p, "observables", t)?,
        None => default_obs,
    };
    let default_cutoff = match (kind, ions) {
        (ModelKind::Validation, _) => DEFAULT_VALIDATION_CUTOFF,
        (_, 1) => DEFAULT_SINGLE_CUTOFF,
        _ => DEFAULT_PAIR_CUTOFF,
    };
    let mut spec = base_spec(p, kind, ions, model_params(p, kind)?, axis, values, obs, default_cutoff);
    spec.keep_spectra = p.flag("spectra", false);
    spec.validate().map_err(|e| p.invalid(e))?;
    let result = run_sweep(&spec)?;
    report(&result);
    out.sweep("sweep", &result)
}

fn fig2(p: &Params, out: &mut Emitter) -> anyhow::Result<()> {
    let base = model_params(p, ModelKind::Rwa)?;
    let values = match p.opt_number("points") {
        Some(_) => uniform(1.0, 9.0, p.integer("points", 17)),
        None => inverse_damping_axis(),
    };
    let spec = base_spec(p, ModelKind::Rwa, 1, base.clone(), Axis::InverseDamping, values, SINGLE_OBSERVABLES.to_vec(), DEFAULT_SINGLE_CUTOFF);
    let result = run_sweep(&spec)?;
    report(&result);
    out.sweep("fig2a", &result)?;

    let wp = BasisSpec::single(spec.cutoff)?;
    let sol = ionsync::sweeps::solve(ModelKind::Rwa, &base, wp, &spec.solver)?;
    let axis = wigner_axes(p)?;
    let phonon = sol.phonon(Ion::First)?;
    out.wigner("fig2b_wigner.csv", &wigner(&phonon, &axis, &axis)?)?;

    let profile = spin_phonon_profile(sol.rho(), Ion::First, &axis, &axis)?;
    let rows: Vec<Vec<String>> = ["x", "y", "z"]
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let (a, n) = (profile.with_amplitude[k], profile.with_number[k]);
            vec![name.to_string(), num(a.re), num(a.im), num(n.re), num(n.im)]
        })
        .collect();
    out.csv("fig2c_correlators.csv", &["spin", "re_C_a", "im_C_a", "re_C_n", "im_C_n"], rows)?;
    let mut weights = serde_json::Map::new();
    for proj in &profile.projected {
        let tag = projection_tag(proj.axis, proj.sign);
        out.wigner(&format!("fig2c_wigner_{tag}.csv"), &proj.grid)?;
        weights.insert(tag, json!(proj.weight));
    }
    out.summary("projection_weights", weights.into());
    out.summary("working_point_residual", json!(sol.steady.residual));
    Ok(())
}

fn projection_tag(axis: SpinAxis, sign: Sign) -> String {
    let a = match axis {
        SpinAxis::X => 'x',
        SpinAxis::Y => 'y',
        SpinAxis::Z => 'z',
    };
    let s = match sign {
        Sign::Plus => '+',
        Sign::Minus => '-',
    };
    format!("{a}{s}")
}

fn parse_projection(p: &Params, text: &str) -> anyhow::Result<Option<(SpinAxis, Sign)>> {
    if text == "none" {
        return Ok(None);
    }
    let mut chars = text.chars();
    let axis = match chars.next() {
        Some('x') => SpinAxis::X,
        Some('y') => SpinAxis::Y,
        Some('z') => SpinAxis::Z,
        _ => return Err(p.invalid(format!("projection {text:?}: expected none or one of x+, x-, y+, y-, z+, z-"))),
    };
    let sign = match (chars.next(), chars.next()) {
        (Some('+'), None) => Sign::Plus,
        (Some('-'), None) => Sign::Minus,
        _ => return Err(p.invalid(format!("projection {text:?}: expected none or one of x+, x-, y+, y-, z+, z-"))),
    };
    Ok(Some((axis, sign)))
}

fn fig3(p: &Params, out: &mut Emitter) -> anyhow::Result<()> {
    let panel = p.text("panel").unwrap_or("all");
    let panels: &[&str] = match panel {
        "all" => &["a", "b", "c", "d", "e"],
        "a" => &["a"],
        "b" => &["b"],
        "c" => &["c"],
        "d" => &["d"],
        "e" => &["e"],
        other => return Err(p.invalid(format!("panel must be all, a, b, c, d or e, got {other:?}"))),
    };
    let mut base = model_params(p, ModelKind::Rwa)?;
    base.omega1 = base.omega2;
    base.detuning = 0.0;
    let phases = vec![Observable::Sync, Observable::Peaks];
    let spec_for = |axis: Axis, values: Vec<f64>, spectra: bool| {
        let mut s = base_spec(p, ModelKind::Rwa, 2, base.clone(), axis, values, phases.clone(), DEFAULT_PAIR_CUTOFF);
        s.keep_spectra = spectra;
        s
    };
    for &panel in panels {
        let (name, spec) = match panel {
            "a" => ("fig3a", spec_for(Axis::Detuning, vec![0.0], true)),
            "b" => ("fig3b", spec_for(Axis::Detuning, vec![0.0, 0.5, 1.0, 2.0], true)),
            "c" => {
                let ratios = [1.0, 1.25, 1.5, 2.0];
                ("fig3c", spec_for(Axis::Omega1, ratios.iter().map(|r| r * base.omega2).collect(), true))
            }
            "d" => ("S_vs_delta", spec_for(Axis::Detuning, detuning_axis(), false)),
            _ => (
                "S_vs_ratio",
                spec_for(Axis::Omega1, drive_ratio_axis().iter().map(|r| r * base.omega2).collect(), true),
            ),
        };
        log(format!("fig3 panel {panel}: {} points at N={}", spec.values.len(), spec.cutoff));
        let result = run_sweep(&spec)?;
        report(&result);
        out.sweep(name, &result)?;
    }
    Ok(())
}

fn fig4(p: &Params, out: &mut Emitter) -> anyhow::Result<()> {
    let which: &[bool] = match p.text("balanced").unwrap_or("both") {
        "true" => &[true],
        "false" => &[false],
        "both" => &[true, false],
        other => return Err(p.invalid(format!("balanced must be true, false or both, got {other:?}"))),
    };
    let mut opts = Fig4Options {
        cutoff: p.integer("cutoff", DEFAULT_PAIR_CUTOFF),
        validation_cutoff: p.integer("validation-cutoff", DEFAULT_VALIDATION_CUTOFF),
        gate: p.flag("gate", true),
        with_validation: p.flag("validation", true),
        workers: p.integer("workers", 1).max(1),
        ..Fig4Options::default()
    };
    if p.has("points") {
        opts.values = uniform(0.0, 3.0, p.integer("points", 17));
    }
    for &balanced in which {
        let tag = if balanced { "balanced" } else { "unbalanced" };
        log(format!("fig4 {tag}: {} points at N={}", opts.values.len(), opts.cutoff));
        let r = run_fig4(balanced, &opts)?;
        report(&r.rwa);
        out.sweep(&format!("fig4_{tag}"), &r.rwa)?;
        if let Some(v) = &r.validation {
            report(v);
            out.sweep(&format!("fig4_{tag}_validation"), v)?;
        }
    }
    Ok(())
}

fn validate(p: &Params, out: &mut Emitter) -> anyhow::Result<()> {
    let rwa_base = shared_params(p)?;
    rwa_base.validate()?;
    let lab_base = model_params(p, ModelKind::Validation)?;
    let obs = VALIDATION_OBSERVABLES.to_vec();
    let rwa_spec = base_spec(p, ModelKind::Rwa, 2, rwa_base.clone(), Axis::Detuning, vec![rwa_base.detuning], obs.clone(), DEFAULT_PAIR_CUTOFF);
    let mut lab_spec = base_spec(p, ModelKind::Validation, 2, lab_base, Axis::Detuning, vec![rwa_base.detuning], obs.clone(), DEFAULT_VALIDATION_CUTOFF);
    lab_spec.cutoff = p.integer("validation-cutoff", DEFAULT_VALIDATION_CUTOFF);
    let (rwa, _) = run_single_point(&rwa_spec)?;
    let (labr, _) = run_single_point(&lab_spec)?;
    report(&rwa);
    report(&labr);
    out.sweep("validate_rwa", &rwa)?;
    out.sweep("validate_lab", &labr)?;
    let mut rows = Vec::new();
    let mut all_agree = true;
    for (i, o) in obs.iter().enumerate() {
        let (a, b) = (rwa.records[0].observables[i], labr.records[0].observables[i]);
        let tol = (0.1 * a.abs()).max(2e-4);
        let agree = (a - b).abs() <= tol;
        all_agree &= agree;
        rows.push(vec![o.name().to_string(), num(a), num(b), num((a - b).abs()), num(tol), agree.to_string()]);
    }
    out.csv("validate.csv", &["observable", "rwa", "validation", "abs_diff", "tolerance", "agree"], rows)?;
    out.summary("agree", json!(all_agree));
    Ok(())
}

fn wigner_run(p: &Params, out: &mut Emitter) -> anyhow::Result<()> {
    let base = model_params(p, ModelKind::Rwa)?;
    let cutoff = p.integer("cutoff", DEFAULT_SINGLE_CUTOFF);
    let basis = BasisSpec::single(cutoff).map_err(|e| p.invalid(e))?;
    let projection = parse_projection(p, p.text("project").unwrap_or("none"))?;
    let axis = wigner_axes(p)?;
    let sol = ionsync::sweeps::solve(ModelKind::Rwa, &base, basis, &Default::default())?;
    let (phonon, weight) = match projection {
        None => (sol.phonon(Ion::First)?, 1.0),
        Some((a, s)) => {
            let projected = spin_project(sol.rho(), Ion::First, a, s)?;
            let own = partial_trace(&projected, &[FactorId::phonon(Ion::First)])?;
            let w = own.trace().re;
            (own, w)
        }
    };
    let grid = wigner(&phonon, &axis, &axis)?;
    out.wigner("wigner.csv", &grid)?;
    out.summary("weight", json!(weight));
    out.summary("normalization", json!(grid.normalization()));
    out.summary("min", json!(grid.min()));
    out.summary("residual", json!(sol.steady.residual));
    Ok(())
}

fn lab(p: &Params, out: &mut Emitter) -> anyhow::Result<()> {
    let mut lp = LabParams::ca40();
    let freq = |key: &str, slot: &mut f64| -> anyhow::Result<()> {
        if let Some(t) = p.text(key) {
            *slot = parse_frequency(t).map_err(|e| p.invalid(format!("{key}: {e}")))?;
        }
        Ok(())
    };
    freq("omega-d", &mut lp.omega_d)?;
    freq("delta-d", &mut lp.delta_d)?;
    freq("gamma-1", &mut lp.gamma_1)?;
    freq("gamma-2", &mut lp.gamma_2)?;
    freq("omega-c", &mut lp.omega_c)?;
    freq("delta-c", &mut lp.delta_c)?;
    freq("gamma-c", &mut lp.gamma_c)?;
    freq("omega-trap", &mut lp.omega_trap)?;
    freq("j", &mut lp.coupling)?;
    lp.eta = p.number("eta", lp.eta);
    lp.wavelength = p.number("wavelength", lp.wavelength);
    if let Some(m) = p.opt_number("ion-mass") {
        lp.ion_mass = m * ATOMIC_MASS;
    }
    lp.cooling_source = match p.text("cooling-source").unwrap_or("direct") {
        "direct" => CoolingSource::Direct,
        "quoted" => CoolingSource::Quoted,
        other => return Err(p.invalid(format!("cooling-source must be direct or quoted, got {other:?}"))),
    };
    let report = lab_report(&lp).map_err(|e| p.invalid(e))?;
    for note in &report.notes {
        log(note);
    }
    out.json("lab.json", &report)
}

fn report(r: &SweepResult) {
    let failed = r.records.iter().filter(|x| x.failed()).count();
    let unconverged = r.records.iter().filter(|x| !x.failed() && !x.converged).count();
    log(format!(
        "{} {} points on {}: {failed} failed, {unconverged} unconverged",
        r.records.len(),
        match r.spec.model {
            ModelKind::Rwa => "rwa",
            ModelKind::Validation => "validation",
        },
        r.spec.axis.name()
    ));
    for rec in &r.records {
        if let Some(e) = &rec.error {
            log(format!("  {}={}: {e}", r.spec.axis.name(), rec.value));
        } else if !rec.converged {
            if let Some(n) = &rec.note {
                log(format!("  {}={}: {n}", r.spec.axis.name(), rec.value));
            }
        }
    }
}

use ionsync::hilbert::{partial_trace, spin_project, BasisSpec, FactorId, Ion, Operator, Sign, Space, SpinAxis};
use ionsync::labcalc::{dressed_gamma, parse_frequency, trap_freq_for_eta, LabParams};
use ionsync::lindblad::{liouvillian, steady_state, Jump};
use ionsync::model::{build, ModelKind, ModelParams};
use ionsync::phase::{eval_phase, phase_spectrum, sync_measure};
use ionsync::sparse::CsrMatrix;
use ionsync::C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b)), n)
}

fn op_on(space: Space, vals: &[C64]) -> Operator {
    let d = space.dim();
    Operator::new(space, CsrMatrix::from_dense(d, d, vals))
}

/// A A† / Tr(A A†).
fn density(space: Space, vals: &[C64]) -> Operator {
    let a = op_on(space, vals);
    let p = a.try_mul(&a.adjoint()).unwrap();
    let tr = p.trace().re;
    p.scale(1.0 / tr)
}

fn params() -> impl Strategy<Value = ModelParams> {
    (0.0..2.0f64, 0.0..2.0f64, 0.05..1.0f64, -3.0..3.0f64, 0.0..0.5f64).prop_map(|(o1, o2, damping, delta, j)| ModelParams {
        omega1: o1,
        omega2: o2,
        damping,
        detuning: delta,
        coupling: j,
        ..ModelParams::working_point()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn model_generators_preserve_trace(p in params(), n in 2usize..5, eta in 0.01..0.2f64) {
        for ions in [1, 2] {
            let basis = BasisSpec::new(ions, n).unwrap();
            let l = build(ModelKind::Rwa, &p, &basis).unwrap().liouvillian().unwrap();
            prop_assert!(l.trace_defect() < 1e-10);
            let lab = ModelParams { eta: Some(eta), omega_mean: Some(200.0), ..p.clone() };
            let l = build(ModelKind::Validation, &lab, &basis).unwrap().liouvillian().unwrap();
            prop_assert!(l.trace_defect() < 1e-10);
        }
    }

    #[test]
    fn generators_map_hermitian_to_hermitian(h in complex_vec(9), l in complex_vec(9), r in complex_vec(9), rate in 0.0..3.0f64) {
        let space = Space::phonon(3);
        let h = op_on(space.clone(), &h).hermitized();
        let gen = liouvillian(&h, &[Jump::new(rate, op_on(space.clone(), &l))]).unwrap();
        prop_assert!(gen.trace_defect() < 1e-10);
        let out = gen.apply(&density(space, &r)).unwrap();
        prop_assert!(out.hermiticity_defect() < 1e-12);
        prop_assert!(out.trace().norm() < 1e-12);
    }

    #[test]
    fn adjoint_reverses_products(a in complex_vec(16), b in complex_vec(16)) {
        let (a, b) = (op_on(Space::phonon(4), &a), op_on(Space::phonon(4), &b));
        let lhs = a.try_mul(&b).unwrap().adjoint();
        let rhs = b.adjoint().try_mul(&a.adjoint()).unwrap();
        prop_assert!(lhs.max_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn partial_trace_is_linear(x in complex_vec(256), y in complex_vec(256), s in -2.0..2.0f64) {
        let space = BasisSpec::pair(2).unwrap().space();
        let (x, y) = (op_on(space.clone(), &x), op_on(space, &y));
        let combo = x.try_add(&y.scale(s)).unwrap();
        for keep in [vec![FactorId::phonon(Ion::First)], vec![FactorId::spin(Ion::Second), FactorId::phonon(Ion::First)]] {
            let lhs = partial_trace(&combo, &keep).unwrap();
            let rhs = partial_trace(&x, &keep).unwrap().try_add(&partial_trace(&y, &keep).unwrap().scale(s)).unwrap();
            prop_assert!(lhs.max_diff(&rhs).unwrap() < 1e-12);
        }
        let full = partial_trace(&combo, &[FactorId::spin(Ion::First)]).unwrap().trace();
        prop_assert!((full - combo.trace()).norm() < 1e-12);
    }

    #[test]
    fn spin_projections_resolve_the_identity(vals in complex_vec(256), ion in 0usize..2, axis in 0usize..3) {
        let basis = BasisSpec::pair(2).unwrap();
        let rho = density(basis.space(), &vals);
        let ion = if ion == 0 { Ion::First } else { Ion::Second };
        let axis = [SpinAxis::X, SpinAxis::Y, SpinAxis::Z][axis];
        let plus = spin_project(&rho, ion, axis, Sign::Plus).unwrap();
        let minus = spin_project(&rho, ion, axis, Sign::Minus).unwrap();
        let phonons = partial_trace(&rho, &[FactorId::phonon(Ion::First), FactorId::phonon(Ion::Second)]).unwrap();
        prop_assert!(plus.try_add(&minus).unwrap().max_diff(&phonons).unwrap() < 1e-12);
        prop_assert!(plus.trace().re >= -1e-12 && minus.trace().re >= -1e-12);
    }

    #[test]
    fn phase_distribution_is_normalized_and_real(vals in complex_vec(81)) {
        let rho = density(BasisSpec::pair(3).unwrap().phonon_space(), &vals);
        let spec = phase_spectrum(&rho).unwrap();
        prop_assert!((spec.coeff(0).re - 1.0 / (2.0 * PI)).abs() < 1e-12);
        prop_assert!(spec.coeff(0).im.abs() < 1e-12);
        for k in 1..=spec.max_order() {
            prop_assert!((spec.coeff(-k) - spec.coeff(k).conj()).norm() < 1e-14);
        }
        let values = eval_phase(&spec, spec.grid_size()).unwrap();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        prop_assert!((mean - 1.0 / (2.0 * PI)).abs() < 1e-12);
        prop_assert!(values.iter().all(|&p| p > -1e-12));
        prop_assert!(sync_measure(&spec) >= -1e-8);
    }

    #[test]
    fn dressed_rate_grows_with_drive(scale in 0.1..10.0f64) {
        let base = LabParams::ca40();
        let stronger = LabParams { omega_d: base.omega_d * (1.0 + scale), ..base.clone() };
        prop_assert!(dressed_gamma(&stronger) > dressed_gamma(&base));
        let ratio = dressed_gamma(&stronger) / dressed_gamma(&base);
        prop_assert!((ratio - (1.0 + scale).powi(2)).abs() < 1e-9 * ratio);
    }

    #[test]
    fn trap_frequency_falls_with_eta(a in 0.01..0.5f64, b in 0.01..0.5f64) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let p = LabParams::ca40();
        let w_lo = trap_freq_for_eta(&LabParams { eta: lo, ..p.clone() });
        let w_hi = trap_freq_for_eta(&LabParams { eta: hi, ..p });
        prop_assert!(w_lo > w_hi);
    }

    #[test]
    fn frequency_parsing_is_odd(v in 0.001..1000.0f64, unit in 0usize..5) {
        let unit = ["", "Hz", "kHz", "MHz", "rad/s"][unit];
        let text = format!("{v}{unit}");
        let pos = parse_frequency(&text).unwrap();
        let neg = parse_frequency(&format!("-{text}")).unwrap();
        prop_assert_eq!(pos, -neg);
        prop_assert!(pos > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn steady_states_are_physical(p in params(), n in 2usize..4) {
        let basis = BasisSpec::pair(n).unwrap();
        let l = build(ModelKind::Rwa, &p, &basis).unwrap().liouvillian().unwrap();
        let ss = steady_state(&l).unwrap();
        prop_assert!(ss.rho.hermiticity_defect() < 1e-12);
        prop_assert!((ss.rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(ss.min_eig >= -1e-8);
        let spec = phase_spectrum(&partial_trace(&ss.rho, &[FactorId::phonon(Ion::First), FactorId::phonon(Ion::Second)]).unwrap()).unwrap();
        prop_assert!((spec.coeff(0).re - 1.0 / (2.0 * PI)).abs() < 1e-12);
        prop_assert!(sync_measure(&spec) >= -1e-8);
    }
}

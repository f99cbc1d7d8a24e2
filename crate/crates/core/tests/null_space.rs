//! Sparse steady states against a dense SVD null space on every small
//! instance the builders can produce, plus random generators.

use ionsync::hilbert::{BasisSpec, Operator, Space};
use ionsync::lindblad::{liouvillian, steady_state, Jump, Superoperator};
use ionsync::model::{build, ModelKind, ModelParams};
use ionsync::sparse::CsrMatrix;
use ionsync::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Right singular vector of the smallest singular value, reshaped with
/// column stacking and scaled to unit trace.
fn dense_steady_state(l: &Superoperator) -> DMatrix<C64> {
    let d = l.hilbert_dim();
    let n = d * d;
    let mut m = DMatrix::<C64>::zeros(n, n);
    for (r, c, v) in l.matrix().iter() {
        m[(r, c)] = v;
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let null: Vec<C64> = v_t.row(k).iter().map(|x| x.conj()).collect();
    let mut rho = DMatrix::<C64>::from_fn(d, d, |r, c| null[c * d + r]);
    let tr: C64 = (0..d).map(|i| rho[(i, i)]).sum();
    rho /= tr;
    rho
}

fn max_entry_diff(l: &Superoperator) -> f64 {
    let sparse = steady_state(l).expect("unique steady state");
    let dense = dense_steady_state(l);
    let d = l.hilbert_dim();
    let mut worst: f64 = 0.0;
    for r in 0..d {
        for c in 0..d {
            worst = worst.max((sparse.rho.get(r, c) - dense[(r, c)]).norm());
        }
    }
    worst
}

fn model_instances() -> Vec<(String, Superoperator)> {
    let mut out = Vec::new();
    let wp = ModelParams::working_point();
    for n in 2..=8 {
        for (omega, damping) in [(1.0, 1.0 / 3.0), (0.4, 0.5), (2.0, 0.1)] {
            let p = ModelParams { omega1: omega, damping, ..wp.clone() };
            let me = build(ModelKind::Rwa, &p, &BasisSpec::single(n).unwrap()).unwrap();
            out.push((format!("single N={n} Ω={omega} Γ={damping}"), me.liouvillian().unwrap()));
        }
        let lab = ModelParams { eta: Some(0.1), omega_mean: Some(60.0), ..wp.clone() };
        let me = build(ModelKind::Validation, &lab, &BasisSpec::single(n).unwrap()).unwrap();
        out.push((format!("single lab-frame N={n}"), me.liouvillian().unwrap()));
    }
    for (o1, delta, j) in [(1.0, 0.0, 0.1), (1.25, 1.0, 0.1), (0.7, -0.5, 0.3)] {
        let p = ModelParams { omega1: o1, detuning: delta, coupling: j, ..wp.clone() };
        let me = build(ModelKind::Rwa, &p, &BasisSpec::pair(2).unwrap()).unwrap();
        out.push((format!("pair N=2 Ω₁={o1} Δ={delta} J={j}"), me.liouvillian().unwrap()));
    }
    let lab = ModelParams { eta: Some(0.1), omega_mean: Some(60.0), detuning: 0.5, ..wp };
    let me = build(ModelKind::Validation, &lab, &BasisSpec::pair(2).unwrap()).unwrap();
    out.push(("pair lab-frame N=2".into(), me.liouvillian().unwrap()));
    out
}

#[test]
fn model_generators_match_dense_null_space() {
    for (name, l) in model_instances() {
        assert!(l.hilbert_dim() <= 16);
        let diff = max_entry_diff(&l);
        assert!(diff < 1e-8, "{name}: {diff:e}");
    }
}

fn dense_op(d: usize, entries: &[(f64, f64)]) -> Operator {
    let vals: Vec<C64> = entries.iter().map(|&(re, im)| C64::new(re, im)).collect();
    Operator::new(Space::phonon(d), CsrMatrix::from_dense(d, d, &vals))
}

prop_compose! {
    fn random_generator()(d in 2usize..=4)
        (h in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d),
         l1 in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d),
         l2 in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d),
         rates in (0.1..2.0f64, 0.1..2.0f64),
         d in Just(d)) -> Superoperator {
        let h = dense_op(d, &h).hermitized();
        let jumps = vec![Jump::new(rates.0, dense_op(d, &l1)), Jump::new(rates.1, dense_op(d, &l2))];
        liouvillian(&h, &jumps).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_generators_match_dense_null_space(l in random_generator()) {
        let diff = max_entry_diff(&l);
        prop_assert!(diff < 1e-8, "{:e}", diff);
    }
}

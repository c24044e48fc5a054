//! Degenerate and hyperbolic examples where every hypothesis but one holds.

use nalgebra::DVector;
use qw_core::witness::{hoermander_witness_traced, SearchConfig};
use qw_core::{
    check_heisenberg, heisenberg_bracket_matrix, hoermander_witness, is_non_dissipative, is_symplectic_subspace,
    joint_kernel, linear_independence, transversal_point, Branch, CheckConfig, Dissipativity, OperatorSpec, Pencil,
    PoissonStructure, SymmetricForm, ToleranceConfig, VerdictKind,
};

// Coordinates (x1, x2, x3, y1, y2, y3).
const X1: usize = 0;
const X2: usize = 1;
const X3: usize = 2;
const Y1: usize = 3;
const Y2: usize = 4;
const Y3: usize = 5;

fn mono(n: usize, terms: &[(usize, usize, f64)]) -> SymmetricForm {
    SymmetricForm::from_monomials(n, terms).unwrap()
}

fn b_fixture() -> (SymmetricForm, SymmetricForm) {
    (mono(6, &[(X1, X1, 1.0), (Y1, Y1, -1.0), (Y2, Y2, -1.0), (X2, X2, -1.0)]), mono(6, &[(X1, X3, 1.0)]))
}

fn c_fixture() -> (SymmetricForm, SymmetricForm) {
    (
        mono(6, &[(X1, X1, 1.0), (Y1, Y1, -1.0), (Y2, Y2, -1.0), (Y3, Y3, -1.0), (X2, X2, -1.0)]),
        mono(6, &[(X1, X3, 1.0)]),
    )
}

fn cosine(p: &SymmetricForm, q: &SymmetricForm) -> f64 {
    p.matrix().dot(q.matrix()) / (p.frobenius_norm() * q.frobenius_norm())
}

fn assert_q_c_vanishes_on_variety(a: &SymmetricForm, b: &SymmetricForm, c: &SymmetricForm) {
    let (outcome, trace) = hoermander_witness_traced(a, b, c, &SearchConfig::default()).unwrap();
    assert!(!outcome.is_found());
    let on_variety: Vec<_> = trace.iter().filter(|p| p.residual_a <= 1e-10 && p.residual_b <= 1e-10).collect();
    assert!(!on_variety.is_empty());
    let worst = on_variety.iter().map(|p| p.qc_value.abs() / p.x.norm_squared()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "|Q_C| reached {worst:e} on the variety");
}

#[test]
fn fixture_b_bracket_is_multiple_of_y1_x3() {
    let (a, b) = b_fixture();
    let c = heisenberg_bracket_matrix(&a, &b, 3).unwrap();
    assert!((cosine(&c, &mono(6, &[(Y1, X3, 1.0)])).abs() - 1.0).abs() < 1e-14);
    // The general bracket with S = J is four times the Heisenberg one.
    let general = qw_core::poisson_bracket_forms(&a, &b, &PoissonStructure::canonical(3).unwrap()).unwrap();
    assert_eq!(general.matrix(), &(c.matrix() * 4.0));
}

#[test]
fn fixture_b_is_degenerate_but_non_dissipative() {
    let cfg = ToleranceConfig::default();
    let (a, b) = b_fixture();
    let pencil = Pencil::new(a.clone(), b.clone(), &cfg).unwrap();
    assert_eq!(is_non_dissipative(&pencil, &cfg).verdict, Dissipativity::NonDissipative);
    let kernel = joint_kernel(&pencil, &cfg);
    assert_eq!(kernel.ncols(), 1);
    assert!(kernel[(Y3, 0)].abs() > 1.0 - 1e-12);
    let w = PoissonStructure::canonical(3).unwrap().symplectic_form();
    assert!(!is_symplectic_subspace(&kernel, &w, cfg.rank_rel_tol).unwrap());
    let c = heisenberg_bracket_matrix(&a, &b, 3).unwrap();
    assert!(linear_independence(&[&a, &b, &c], cfg.rank_rel_tol).unwrap());
    assert_q_c_vanishes_on_variety(&a, &b, &c);
}

/// Here `Q_C` is an arbitrary third form `y_j x3`, not the bracket.
#[test]
fn fixture_c_third_form_vanishes_on_variety() {
    let cfg = ToleranceConfig::default();
    let (a, b) = c_fixture();
    let pencil = Pencil::new(a.clone(), b.clone(), &cfg).unwrap();
    assert_eq!(is_non_dissipative(&pencil, &cfg).verdict, Dissipativity::NonDissipative);
    assert_eq!(joint_kernel(&pencil, &cfg).ncols(), 0);
    for y in [Y1, Y2, Y3] {
        let c = mono(6, &[(y, X3, 1.0)]);
        assert!(linear_independence(&[&a, &b, &c], cfg.rank_rel_tol).unwrap());
        assert_q_c_vanishes_on_variety(&a, &b, &c);
    }
    // With x3^2 added to the negative part the variety lies inside {x3 = 0}.
    let a2 = a.combine(1.0, &mono(6, &[(X3, X3, -1.0)]), 1.0).unwrap();
    assert_q_c_vanishes_on_variety(&a2, &b, &mono(6, &[(Y1, X3, 1.0)]));
    let verdict = check_heisenberg(3, &OperatorSpec::new(a, b).unwrap(), &CheckConfig::default()).unwrap();
    assert_eq!(verdict.kind, VerdictKind::Inconclusive);
    assert_eq!(verdict.report.cond_c.unwrap().branch, Branch::Fail);
}

#[test]
fn hyperbolic_plane_pair_has_no_transversal_point() {
    let cfg = ToleranceConfig::default();
    let pencil = Pencil::new(mono(2, &[(0, 0, 1.0), (1, 1, -1.0)]), mono(2, &[(0, 1, 1.0)]), &cfg).unwrap();
    let outcome = transversal_point(&pencil, &SearchConfig::default()).unwrap();
    assert!(!outcome.is_found());
    assert_eq!(outcome.stats().converged, 0);
}

fn cone_instance() -> (SymmetricForm, SymmetricForm, SymmetricForm) {
    (
        mono(3, &[(0, 0, 1.0), (1, 1, -1.0)]),
        mono(3, &[(0, 0, 1.0), (0, 2, 1.0), (1, 1, -1.0), (1, 2, -1.0)]),
        mono(3, &[(2, 2, 1.0), (0, 1, 0.3)]),
    )
}

#[test]
fn witnesses_re_evaluate_within_bounds() {
    let (a, b, c) = cone_instance();
    let cfg = SearchConfig::default();
    let w = hoermander_witness(&a, &b, &c, &cfg).unwrap().witness().cloned().unwrap();
    assert!((w.x.norm() - 1.0).abs() < 1e-14);
    let scale = |q: &SymmetricForm| q.frobenius_norm();
    assert!(a.evaluate(&w.x).unwrap().abs() <= cfg.residual_tol * scale(&a));
    assert!(b.evaluate(&w.x).unwrap().abs() <= cfg.residual_tol * scale(&b));
    let qc = c.evaluate(&w.x).unwrap();
    assert_eq!(Some(qc), w.qc_value);
    assert!(qc.abs() >= cfg.qc_floor * scale(&c));
}

#[test]
fn searches_are_deterministic_and_scale_invariant() {
    let (a, b, c) = cone_instance();
    let cfg = SearchConfig { seed: 7, ..SearchConfig::default() };
    let first = hoermander_witness(&a, &b, &c, &cfg).unwrap();
    assert_eq!(first, hoermander_witness(&a, &b, &c, &cfg).unwrap());
    let x = first.witness().unwrap().x.clone();
    let scaled = hoermander_witness(&a.scaled(4.0), &b.scaled(0.5), &c.scaled(-8.0), &cfg).unwrap();
    let w = scaled.witness().unwrap();
    assert_eq!(w.x, x);
    assert_eq!(w.qc_value.unwrap(), -8.0 * first.witness().unwrap().qc_value.unwrap());
    let odd = hoermander_witness(&a.scaled(3.0), &b.scaled(-0.7), &c.scaled(1.9), &cfg).unwrap();
    let wx: &DVector<f64> = &odd.witness().unwrap().x;
    assert!(a.evaluate(wx).unwrap().abs() < 1e-9 && b.evaluate(wx).unwrap().abs() < 1e-9);
}

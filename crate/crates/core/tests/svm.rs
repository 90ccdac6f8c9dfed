mod common;

use common::{oracle_csvm, oracle_nusvm_objective, q_matrix, random_dataset, ref_decision, rng, Dataset, RefKernel};
use patchsvm::svm::{
    check_kkt, max_feasible_nu, read_model, train_csvm, train_nusvm, write_model, Formulation, Gamma, KernelSpec, SolverConfig,
    SvmModel,
};
use patchsvm::{Error, Label, Matrix};
use rand::Rng;

fn tight() -> SolverConfig {
    SolverConfig { kkt_tolerance: 1e-10, ..SolverConfig::default() }
}

fn to_lib(ds: &Dataset) -> (Matrix<f64>, Vec<Label>) {
    (Matrix::from_rows(&ds.x).unwrap(), ds.y.iter().map(|&s| Label::from_sign(s)).collect())
}

fn to_spec(k: RefKernel) -> KernelSpec<f64> {
    match k {
        RefKernel::Rbf(g) => KernelSpec::Rbf { gamma: Gamma::Value(g) },
        RefKernel::Linear => KernelSpec::Linear,
        RefKernel::Poly(d, g, c) => KernelSpec::Polynomial { degree: d, gamma: Gamma::Value(g), coef0: c },
        RefKernel::Sigmoid(g, c) => KernelSpec::Sigmoid { gamma: Gamma::Value(g), coef0: c },
    }
}

fn two_points() -> (Matrix<f64>, Vec<Label>) {
    (Matrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap(), vec![Label::Mass, Label::NonMass])
}

#[test]
fn two_point_csvm_is_analytic() {
    let (x, y) = two_points();
    let m = train_csvm(&x, &y, 10.0, &KernelSpec::Linear, &tight()).unwrap();
    assert_eq!(m.dual_coefs.len(), 2);
    assert!((m.dual_coefs[0] - 0.5).abs() < 1e-9 && (m.dual_coefs[1] + 0.5).abs() < 1e-9);
    assert!(m.bias.abs() < 1e-9);
    assert!((m.decision_function(&[2.0, 0.0]).unwrap() - 2.0).abs() < 1e-9);
    assert!(m.decision_function(&[0.0, 0.0]).unwrap().abs() < 1e-9);
    assert!(check_kkt(&m, &x, &y) <= 1e-9);
}

#[test]
fn two_point_nusvm_boundary_at_origin() {
    let (x, y) = two_points();
    let m = train_nusvm(&x, &y, 0.5, &KernelSpec::Linear, &tight()).unwrap();
    assert_eq!(m.n_support(), 2);
    assert!(m.decision_function(&[0.0, 3.0]).unwrap().abs() < 1e-9);
    assert!(m.decision_function(&[1.0, 0.0]).unwrap() > 0.0);
    assert!(m.decision_function(&[-1.0, 0.0]).unwrap() < 0.0);
}

#[test]
fn zero_coefficients_give_constant_bias() {
    let m = SvmModel {
        support_vectors: Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap(),
        dual_coefs: vec![0.0],
        bias: 0.25,
        kernel: KernelSpec::rbf(1.0),
        formulation: Formulation::CSvm { c: 1.0 },
        rho_margin: 0.0,
        sv_indices: vec![],
        iterations: 0,
    };
    assert_eq!(m.decision_function(&[5.0, -1.0]).unwrap(), 0.25);
    assert!(matches!(m.decision_function(&[1.0]), Err(Error::Shape(_))));
}

#[test]
fn matches_projected_gradient_oracle() {
    let mut r = rng(11);
    let kernels = |r: &mut rand_chacha::ChaCha8Rng, d: usize| {
        [
            RefKernel::Rbf(r.random_range(0.1..2.0) / d as f64),
            RefKernel::Linear,
            RefKernel::Poly(r.random_range(1..=3), r.random_range(0.2..1.0), r.random_range(0.0..1.0)),
            RefKernel::Sigmoid(r.random_range(0.01..0.1), r.random_range(-1.0..0.0)),
        ]
    };
    let mut cases = 0;
    while cases < 24 {
        let n = r.random_range(4..=20);
        let d = r.random_range(1..=5);
        let sep = r.random_range(0.0..1.5);
        let ds = random_dataset(&mut r, n, d, sep);
        let k = kernels(&mut r, d)[cases % 4];
        if common::min_eigenvalue(&q_matrix(&ds, k)) < -1e-12 {
            continue;
        }
        let c = [0.1, 1.0, 10.0][cases % 3];
        cases += 1;
        let (x, y) = to_lib(&ds);
        let m = train_csvm(&x, &y, c, &to_spec(k), &tight()).unwrap();
        let oracle = oracle_csvm(&ds, k, c);
        assert!((m.dual_objective() - oracle.objective).abs() < 1e-6, "{} vs {}", m.dual_objective(), oracle.objective);
        assert!(check_kkt(&m, &x, &y) <= 1e-3);
        for _ in 0..10 {
            let t: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..3.0)).collect();
            let f = m.decision_function(&t).unwrap();
            let g = ref_decision(&ds, k, &oracle, &t);
            assert_eq!(f > 0.0, g > 0.0, "prediction disagreement {f} vs {g}");
        }
    }
}

#[test]
fn nusvm_matches_oracle_and_nu_property() {
    let mut r = rng(5);
    for case in 0..30 {
        let n = r.random_range(6..=20);
        let d = r.random_range(1..=4);
        let sep = r.random_range(0.0..1.5);
        let ds = random_dataset(&mut r, n, d, sep);
        let (x, y) = to_lib(&ds);
        let max = max_feasible_nu(&y);
        let nu = r.random_range(0.05..1.0) * max;
        let k = RefKernel::Rbf(0.5);
        let cfg = SolverConfig { kkt_tolerance: 1e-8, ..SolverConfig::default() };
        let m = train_nusvm(&x, &y, nu, &to_spec(k), &cfg).unwrap();
        let oracle = oracle_nusvm_objective(&ds, k, nu);
        assert!((m.dual_objective() - oracle).abs() < 1e-6, "case {case}");
        let slack = 1e-9;
        let me = m.margin_error_fraction(&x, &y, slack).unwrap();
        let sv = m.n_support() as f64 / n as f64;
        assert!(me <= nu + 1e-12 && nu <= sv + 1e-12, "case {case}: {me} <= {nu} <= {sv}");
        let sum: f64 = m.dual_coefs.iter().sum();
        assert!(sum.abs() < 1e-9);
        assert!(m.dual_coefs.iter().all(|c| c.abs() <= 1.0 / n as f64 + 1e-12));
    }
}

#[test]
fn nu_at_bound_makes_every_point_a_support_vector() {
    let mut r = rng(9);
    let mut ds = random_dataset(&mut r, 12, 3, 1.0);
    for i in 0..12 {
        ds.y[i] = if i % 2 == 0 { 1.0 } else { -1.0 };
    }
    let (x, y) = to_lib(&ds);
    assert_eq!(max_feasible_nu(&y), 1.0);
    let m = train_nusvm(&x, &y, 1.0, &KernelSpec::rbf(0.3), &tight()).unwrap();
    assert_eq!(m.n_support(), 12);
    assert!(m.dual_coefs.iter().all(|c| (c.abs() - 1.0 / 12.0).abs() < 1e-12));
}

#[test]
fn infeasible_nu_is_named() {
    let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
    let y = vec![Label::Mass, Label::NonMass, Label::NonMass, Label::NonMass];
    let err = train_nusvm(&x, &y, 0.6, &KernelSpec::Linear, &tight()).unwrap_err();
    assert!(matches!(err, Error::InfeasibleNu { max, .. } if max == 0.5));
}

#[test]
fn single_class_is_domain_error() {
    let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
    let err = train_csvm(&x, &[Label::Mass, Label::Mass], 1.0, &KernelSpec::Linear, &tight()).unwrap_err();
    assert!(matches!(err, Error::Domain(_)));
}

#[test]
fn duplicated_dataset_keeps_decision_function() {
    let mut r = rng(21);
    let ds = random_dataset(&mut r, 16, 2, 2.5);
    let (x, y) = to_lib(&ds);
    let mut rows = ds.x.clone();
    rows.extend(ds.x.iter().cloned());
    let x2 = Matrix::from_rows(&rows).unwrap();
    let y2: Vec<Label> = y.iter().chain(&y).copied().collect();
    let a = train_csvm(&x, &y, 1e3, &KernelSpec::Linear, &tight()).unwrap();
    let b = train_csvm(&x2, &y2, 1e3, &KernelSpec::Linear, &tight()).unwrap();
    for _ in 0..20 {
        let t = [r.random_range(-4.0..4.0), r.random_range(-4.0..4.0)];
        assert!((a.decision_function(&t).unwrap() - b.decision_function(&t).unwrap()).abs() < 1e-6);
    }
}

#[test]
fn perturbed_bias_breaks_kkt() {
    let mut r = rng(3);
    let ds = random_dataset(&mut r, 20, 3, 0.7);
    let (x, y) = to_lib(&ds);
    let cfg = SolverConfig::default();
    let mut m = train_csvm(&x, &y, 1.0, &KernelSpec::rbf(0.5), &cfg).unwrap();
    assert!(check_kkt(&m, &x, &y) <= cfg.kkt_tolerance);
    m.bias += 0.5;
    assert!(check_kkt(&m, &x, &y) > cfg.kkt_tolerance);
}

#[test]
fn empty_support_set_residual_is_one() {
    let x = Matrix::from_rows(&[vec![1.0], vec![-1.0], vec![2.0], vec![-2.0]]).unwrap();
    let y = vec![Label::Mass, Label::NonMass, Label::NonMass, Label::Mass];
    let m = SvmModel {
        support_vectors: Matrix::empty(1),
        dual_coefs: vec![],
        bias: 0.0,
        kernel: KernelSpec::Linear,
        formulation: Formulation::CSvm { c: 1.0 },
        rho_margin: 0.0,
        sv_indices: vec![],
        iterations: 0,
    };
    // at alpha = 0 the dual gradient is 1 everywhere
    assert_eq!(check_kkt(&m, &x, &y), 1.0);
}

#[test]
fn cache_size_does_not_change_result() {
    let mut r = rng(8);
    let ds = random_dataset(&mut r, 20, 4, 0.5);
    let (x, y) = to_lib(&ds);
    let none = SolverConfig { cache_size: 0, ..tight() };
    let all = SolverConfig { cache_size: usize::MAX, ..tight() };
    let small = SolverConfig { cache_size: 2, ..tight() };
    let a = train_csvm(&x, &y, 1.0, &KernelSpec::rbf(0.4), &none).unwrap();
    let b = train_csvm(&x, &y, 1.0, &KernelSpec::rbf(0.4), &all).unwrap();
    let c = train_csvm(&x, &y, 1.0, &KernelSpec::rbf(0.4), &small).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn objective_is_monotone() {
    let mut r = rng(13);
    for _ in 0..10 {
        let ds = random_dataset(&mut r, 20, 3, 0.3);
        let (x, y) = to_lib(&ds);
        let cfg = SolverConfig { monitor_objective: true, ..tight() };
        train_csvm(&x, &y, 5.0, &KernelSpec::rbf(1.0), &cfg).unwrap();
        train_nusvm(&x, &y, 0.5 * max_feasible_nu(&y), &KernelSpec::rbf(1.0), &cfg).unwrap();
    }
}

#[test]
fn conflicting_duplicates_converge() {
    let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, 1.0]]).unwrap();
    let y = vec![Label::Mass, Label::NonMass, Label::Mass, Label::NonMass, Label::NonMass];
    for c in [0.1, 1.0, 100.0] {
        let m = train_csvm(&x, &y, c, &KernelSpec::rbf(1.0), &SolverConfig::default()).unwrap();
        assert!(check_kkt(&m, &x, &y) <= 1e-3);
    }
    let m = train_nusvm(&x, &y, 0.5, &KernelSpec::Linear, &SolverConfig::default()).unwrap();
    assert!(check_kkt(&m, &x, &y) <= 1e-3);
}

#[test]
fn iteration_budget_reports_convergence_error() {
    let mut r = rng(4);
    let ds = random_dataset(&mut r, 20, 3, 0.2);
    let (x, y) = to_lib(&ds);
    let cfg = SolverConfig { max_iterations: 2, ..tight() };
    match train_csvm(&x, &y, 10.0, &KernelSpec::rbf(1.0), &cfg) {
        Err(Error::Convergence { iterations, residual, alpha }) => {
            assert_eq!(iterations, 2);
            assert!(residual > 1e-10);
            assert_eq!(alpha.len(), 20);
        }
        other => panic!("expected convergence error, got {other:?}"),
    }
}

#[test]
fn permutation_invariant_predictions() {
    let mut r = rng(17);
    let ds = random_dataset(&mut r, 20, 3, 0.8);
    let (x, y) = to_lib(&ds);
    let mut order: Vec<usize> = (0..20).collect();
    order.reverse();
    order.swap(3, 11);
    let xp = x.select_rows(&order);
    let yp: Vec<Label> = order.iter().map(|&i| y[i]).collect();
    let k = KernelSpec::rbf(0.7);
    let cfg = SolverConfig { kkt_tolerance: 1e-12, ..SolverConfig::default() };
    let a = train_csvm(&x, &y, 2.0, &k, &cfg).unwrap();
    let b = train_csvm(&xp, &yp, 2.0, &k, &cfg).unwrap();
    for _ in 0..20 {
        let t: Vec<f64> = (0..3).map(|_| r.random_range(-3.0..3.0)).collect();
        assert!((a.decision_function(&t).unwrap() - b.decision_function(&t).unwrap()).abs() < 1e-8);
    }
}

fn label_grid() -> Vec<Vec<f64>> {
    (0..15).flat_map(|i| (0..15).map(move |j| vec![-3.0 + 6.0 * i as f64 / 14.0, -3.0 + 6.0 * j as f64 / 14.0])).collect()
}

#[test]
fn implied_c_reproduces_nu_decision() {
    let mut r = rng(29);
    let ds = random_dataset(&mut r, 20, 2, 0.6);
    let (x, y) = to_lib(&ds);
    let k = KernelSpec::rbf(0.5);
    let nu = train_nusvm(&x, &y, 0.4, &k, &tight()).unwrap();
    // alpha / rho solves the C-SVM with C = 1 / (n rho)
    let c = 1.0 / (20.0 * nu.rho_margin);
    let m = train_csvm(&x, &y, c, &k, &tight()).unwrap();
    for t in label_grid() {
        let (a, b) = (nu.decision_function(&t).unwrap() / nu.rho_margin, m.decision_function(&t).unwrap());
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn some_grid_c_reproduces_nu_labels() {
    let mut r = rng(31);
    let ds = random_dataset(&mut r, 20, 2, 1.6);
    let (x, y) = to_lib(&ds);
    let k = KernelSpec::rbf(0.5);
    let nu = train_nusvm(&x, &y, 0.2, &k, &tight()).unwrap();
    let grid = label_grid();
    let want: Vec<Label> = grid.iter().map(|t| nu.predict(t).unwrap()).collect();
    let found = (-10..=10).any(|e| {
        let m = train_csvm(&x, &y, 2f64.powi(e), &k, &tight()).unwrap();
        grid.iter().zip(&want).all(|(t, &l)| m.predict(t).unwrap() == l)
    });
    assert!(found);
}

#[test]
fn model_file_round_trip() {
    let mut r = rng(2);
    let ds = random_dataset(&mut r, 15, 3, 0.8);
    let (x, y) = to_lib(&ds);
    let m = train_nusvm(&x, &y, 0.3, &KernelSpec::rbf_scale(), &SolverConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.svmm");
    write_model(&path, &m).unwrap();
    let back: SvmModel<f64> = read_model(&path).unwrap();
    assert_eq!(back.kernel, m.kernel);
    assert_eq!(back.formulation, m.formulation);
    assert_eq!(back.dual_coefs, m.dual_coefs);
    assert_eq!(back.bias, m.bias);
    // support vectors are stored as f32
    for i in 0..x.rows() {
        let (a, b) = (m.decision_function(x.row(i)).unwrap(), back.decision_function(x.row(i)).unwrap());
        assert!((a - b).abs() < 1e-5);
    }
    assert!(check_kkt(&back, &x.map(|v| f64::from(v as f32)), &y) < 1e-2);
    std::fs::write(&path, b"SVMM\x01\x00").unwrap();
    assert!(matches!(read_model::<f64>(&path), Err(Error::Format(_))));
}

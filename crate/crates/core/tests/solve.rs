use fraclap::norms::loglog_slope;
use fraclap::solve::relative_residual;
use fraclap::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(n: usize, seed: u64) -> SymmetricMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut a = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..n).map(|k| b[i][k] * b[j][k]).sum();
            a.set(i, j, v + if i == j { n as f64 * 0.1 } else { 0.0 });
        }
    }
    a
}

#[test]
fn identity_returns_the_load() {
    let b = LoadVector { values: vec![0.3, -2.0, 7.5] };
    let u = solve_spd(&SymmetricMatrix::identity(3), &b).unwrap();
    assert_eq!(u, b.values);
}

#[test]
fn two_by_two_hand_solve() {
    let a = SymmetricMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
    let u = solve_spd(&a, &LoadVector { values: vec![3.0, 3.0] }).unwrap();
    assert!((u[0] - 1.0).abs() < 1e-15 && (u[1] - 1.0).abs() < 1e-15, "{u:?}");
}

#[test]
fn random_spd_residual() {
    let a = random_spd(50, 17);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u = solve_spd(&a, &LoadVector { values: b.clone() }).unwrap();
    let res = relative_residual(&a, &u, &b);
    assert!(res <= 1e-10, "residual {res:e}");
}

#[test]
fn indefinite_matrix_is_rejected() {
    let a = SymmetricMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    let err = solve_spd(&a, &LoadVector { values: vec![1.0, 1.0] }).unwrap_err();
    assert!(matches!(err, Error::Factorization { pivot: 1, .. }), "{err:?}");
}

#[test]
fn dimension_mismatch_is_an_argument_error() {
    let err = solve_spd(&SymmetricMatrix::identity(2), &LoadVector { values: vec![1.0] }).unwrap_err();
    assert!(matches!(err, Error::Argument(_)));
}

#[test]
fn log_det_of_diagonal() {
    let mut a = SymmetricMatrix::zeros(3);
    for (i, d) in [2.0, 3.0, 5.0].into_iter().enumerate() {
        a.set(i, i, d);
    }
    assert!((cholesky(&a).unwrap().log_det() - 30f64.ln()).abs() < 1e-14);
}

#[test]
fn condition_of_simple_matrices() {
    let k = condition_estimate(&SymmetricMatrix::identity(5)).unwrap();
    assert!((k - 1.0).abs() < 1e-3, "{k}");
    let mut d = SymmetricMatrix::zeros(2);
    d.set(0, 0, 1.0);
    d.set(1, 1, 10.0);
    let k = condition_estimate(&d).unwrap();
    assert!((k - 10.0).abs() < 1e-2, "{k}");
}

#[test]
fn condition_matches_dense_eigenvalues_of_a_random_matrix() {
    // Jacobi eigenvalue sweeps on the dense copy give the reference spectrum
    let a = random_spd(12, 5);
    let mut m = a.to_dense();
    let n = m.len();
    for _ in 0..100 {
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    let reference = eig.iter().cloned().fold(f64::MIN, f64::max) / eig.iter().cloned().fold(f64::MAX, f64::min);
    let k = condition_estimate(&a).unwrap();
    assert!((k - reference).abs() <= 2e-3 * reference, "{k} vs {reference}");
}

#[test]
fn condition_grows_like_dofs_to_the_2s() {
    let s = 0.75;
    let mut dofs = Vec::new();
    let mut kappa = Vec::new();
    for n in [32, 64, 128, 256] {
        let mesh = build_uniform_1d(n).unwrap();
        let a = assemble_stiffness(&mesh, s).unwrap();
        dofs.push(mesh.num_dofs() as f64);
        kappa.push(condition_estimate(&a).unwrap());
    }
    let slope = loglog_slope(&dofs, &kappa).unwrap();
    assert!((slope - 1.5).abs() <= 0.2, "slope {slope}, kappa {kappa:?}");
}

#[test]
fn galerkin_orthogonality_on_a_fractional_system() {
    let mesh = build_graded_1d(20, 2.0).unwrap();
    let spec = ProblemSpec::new(Domain::Interval, 0.7, 1).unwrap();
    let a = assemble_stiffness(&mesh, spec.s).unwrap();
    let b = assemble_load(&mesh, &spec).unwrap();
    let u = solve_spd(&a, &b).unwrap();
    let energy = a.quadratic_form(&u);
    assert!((b.dot(&u) - energy).abs() <= 1e-9 * energy);
}

#[test]
fn conjugate_gradient_agrees_with_cholesky() {
    let mesh = build_uniform_1d(60).unwrap();
    let spec = ProblemSpec::new(Domain::Interval, 0.8, 0).unwrap();
    let a = assemble_stiffness(&mesh, spec.s).unwrap();
    let b = assemble_load(&mesh, &spec).unwrap();
    let direct = solve_spd(&a, &b).unwrap();
    let cg = conjugate_gradient(&a, &b.values, 1e-12, 1000).unwrap();
    assert!(cg.relative_residual <= 1e-12);
    for (x, y) in cg.solution.iter().zip(&direct) {
        assert!((x - y).abs() <= 1e-9 * direct.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
}

#[test]
fn conjugate_gradient_reports_non_convergence() {
    let a = random_spd(30, 9);
    let b = vec![1.0; 30];
    let err = conjugate_gradient(&a, &b, 1e-14, 2).unwrap_err();
    assert!(matches!(err, Error::NotConverged { iterations: 2, .. }), "{err:?}");
}

#[test]
fn discrete_solution_gradients() {
    let mesh = build_uniform_1d(5).unwrap();
    let sol = DiscreteSolution::new(&mesh, vec![0.0, 1.0, 0.0]).unwrap();
    // hat at x = 0 with h = 0.5
    let g: Vec<f64> = (0..mesh.num_elements()).map(|e| sol.gradient_in(e)[0]).collect();
    assert_eq!(g, vec![0.0, 2.0, -2.0, 0.0]);
    assert!(DiscreteSolution::new(&mesh, vec![1.0]).is_err());

    let disk = build_disk_mesh(0.5, 1.0).unwrap();
    let affine = DiscreteSolution::interpolate(&disk, |x| 2.0 * x[0] - 3.0 * x[1]);
    for e in 0..disk.num_elements() {
        if disk.element(e).iter().all(|&v| !disk.is_boundary(v)) {
            let g = affine.gradient_in(e);
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 3.0).abs() < 1e-12);
        }
    }
}

use fraclap::norms::{
    energy_error_from, energy_error_squared, h1_distance, h1_error_with, l2_distance, l2_error_with, load_against_exact,
    loglog_slope,
};
use fraclap::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn galerkin<'m>(mesh: &'m Mesh, spec: &ProblemSpec) -> (SymmetricMatrix, LoadVector, DiscreteSolution<'m>) {
    let a = assemble_stiffness(mesh, spec.s).unwrap();
    let b = assemble_load(mesh, spec).unwrap();
    let u = solve_spd(&a, &b).unwrap();
    (a, b, DiscreteSolution::new(mesh, u).unwrap())
}

fn record(s: f64, mesh: &Mesh, h1: f64) -> ConvergenceRecord {
    ConvergenceRecord {
        s,
        mu: mesh.mu(),
        dofs: mesh.num_dofs(),
        h: mesh.h_param(),
        h_min: mesh.h_min(),
        l2: 0.0,
        h1,
        energy: 0.0,
        kappa: None,
        wall_time_seconds: None,
    }
}

#[test]
fn tent_interpolant_has_no_error() {
    let mesh = build_uniform_1d(9).unwrap();
    let sol = DiscreteSolution::interpolate(&mesh, |x| 1.0 - x[0].abs());
    let cfg = QuadratureConfig::default();
    let l2 = l2_distance(&sol, 0.75, &cfg, |x, _| 1.0 - x[0].abs());
    let h1 = h1_distance(&sol, 0.75, &cfg, |x, _| [-x[0].signum(), 0.0]);
    assert!(l2 < 1e-13, "{l2}");
    assert!(h1 < 1e-10, "{h1}");
}

#[test]
fn disk_hat_interpolant_has_no_error() {
    let mesh = build_disk_mesh(0.25, 1.0).unwrap();
    let mut coefficients = vec![0.0; mesh.num_dofs()];
    coefficients[0] = 1.0;
    let hat = DiscreteSolution::new(&mesh, coefficients).unwrap();
    let cfg = QuadratureConfig::default();
    // the field is the hat itself, evaluated in the element that contains the point most deeply
    let locate = |x: [f64; 2]| -> (f64, [f64; 2]) {
        let mut best = (f64::NEG_INFINITY, 0, [0.0; 3]);
        for e in 0..mesh.num_elements() {
            let v = mesh.element(e);
            let p: Vec<[f64; 2]> = v.iter().map(|&i| mesh.point(i)).collect();
            let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
            let l1 = ((x[0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (x[1] - p[0][1])) / det;
            let l2 = ((p[1][0] - p[0][0]) * (x[1] - p[0][1]) - (x[0] - p[0][0]) * (p[1][1] - p[0][1])) / det;
            let bary = [1.0 - l1 - l2, l1, l2];
            let depth = bary.iter().cloned().fold(f64::INFINITY, f64::min);
            if depth > best.0 {
                best = (depth, e, bary);
            }
        }
        (hat.value_in(best.1, &best.2), hat.gradient_in(best.1))
    };
    let l2 = l2_distance(&hat, 0.7, &cfg, |x, _| locate(x).0);
    let h1 = h1_distance(&hat, 0.7, &cfg, |x, _| locate(x).1);
    assert!(l2 < 1e-13 && h1 < 1e-10, "{l2} {h1}");
}

#[test]
fn single_hat_discrete_seminorm() {
    let mesh = build_uniform_1d(5).unwrap();
    let sol = DiscreteSolution::new(&mesh, vec![0.0, 1.0, 0.0]).unwrap();
    let h = 0.5f64;
    assert!((h1_seminorm_discrete(&sol) - (2.0 / h).sqrt()).abs() < 1e-14);
    let zero = DiscreteSolution::new(&mesh, vec![0.0; 3]).unwrap();
    assert_eq!(h1_seminorm_discrete(&zero), 0.0);
}

#[test]
fn errors_match_refined_quadrature() {
    let spec = ProblemSpec::new(Domain::Interval, 0.75, 0).unwrap();
    let mesh = build_uniform_1d(7).unwrap();
    let (_, _, sol) = galerkin(&mesh, &spec);
    let cfg = QuadratureConfig::default();
    let fine = cfg.refined();
    let (l2, l2f) = (l2_error_with(&sol, &spec, &cfg).unwrap(), l2_error_with(&sol, &spec, &fine).unwrap());
    assert!((l2 - l2f).abs() <= 1e-8 * l2f, "{l2} {l2f}");
    let (h1, h1f) = (h1_error_with(&sol, &spec, &cfg).unwrap(), h1_error_with(&sol, &spec, &fine).unwrap());
    assert!((h1 - h1f).abs() <= 1e-6 * h1f, "{h1} {h1f}");

    let spec2 = ProblemSpec::new(Domain::UnitDisk, 0.6, 1).unwrap();
    let disk = build_disk_mesh(0.5, 2.0).unwrap();
    let sol2 = DiscreteSolution::interpolate(&disk, |x| exact_solution(&spec2, x).unwrap());
    let (h1, h1f) = (h1_error_with(&sol2, &spec2, &cfg).unwrap(), h1_error_with(&sol2, &spec2, &fine).unwrap());
    assert!((h1 - h1f).abs() <= 1e-6 * h1f, "{h1} {h1f}");
}

#[test]
fn exact_load_pairing_matches_closed_form() {
    // k = 0 in 1D: ∫ (1 - x²)^s dx = √π Γ(s+1) / Γ(s+3/2), times the solution constant
    let s = 0.7;
    let spec = ProblemSpec::new(Domain::Interval, s, 0).unwrap();
    let mesh = build_graded_1d(8, 2.0).unwrap();
    let fu = load_against_exact(&mesh, &spec, &QuadratureConfig::default()).unwrap();
    let scale = ExactSolution::new(spec).unwrap().scale();
    let integral = std::f64::consts::PI.sqrt() * gamma_fn(s + 1.0).unwrap() / gamma_fn(s + 1.5).unwrap();
    assert!((fu - scale * integral).abs() <= 1e-12 * fu, "{fu} vs {}", scale * integral);
}

#[test]
fn energy_identity_and_best_approximation() {
    let spec = ProblemSpec::new(Domain::Interval, 0.8, 1).unwrap();
    let mesh = build_uniform_1d(41).unwrap();
    let (a, b, sol) = galerkin(&mesh, &spec);
    let fu = load_against_exact(&mesh, &spec, &QuadratureConfig::default()).unwrap();
    let full = energy_error_squared(&a, &b, fu, &sol.coefficients).unwrap();
    let collapsed = fu - b.dot(&sol.coefficients);
    assert!((full - collapsed).abs() <= 1e-9 * fu.abs().max(1.0), "{full} vs {collapsed}");

    let best = energy_error(&a, &b, &sol, &spec).unwrap();
    assert!(best > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let mut c = sol.coefficients.clone();
        let k = rng.gen_range(0..c.len());
        c[k] += if rng.gen::<bool>() { 1e-3 } else { -1e-3 };
        assert!(energy_error_from(&a, &b, fu, &c).unwrap() > best);
    }
}

#[test]
fn energy_rejects_mismatched_dimensions() {
    let a = SymmetricMatrix::identity(3);
    let b = LoadVector { values: vec![1.0; 2] };
    assert!(matches!(energy_error_squared(&a, &b, 1.0, &[0.0; 3]), Err(Error::Argument(_))));
}

#[test]
fn errors_decrease_under_uniform_refinement() {
    let spec = ProblemSpec::new(Domain::Interval, 0.75, 0).unwrap();
    let mut last = [f64::INFINITY; 3];
    for n in [33, 65, 129, 257] {
        let mesh = build_uniform_1d(n).unwrap();
        let (a, b, sol) = galerkin(&mesh, &spec);
        let r = error_report(&a, &b, &sol, &spec).unwrap();
        let now = [r.l2, r.h1_semi, r.energy];
        for k in 0..3 {
            assert!(now[k] < last[k], "n={n}: {now:?} after {last:?}");
        }
        last = now;
    }
}

#[test]
fn energy_order_is_about_one_half_in_h() {
    let spec = ProblemSpec::new(Domain::Interval, 0.75, 0).unwrap();
    let (mut h, mut e) = (Vec::new(), Vec::new());
    for n in [251, 501, 1001] {
        let mesh = build_uniform_1d(n).unwrap();
        let (a, b, sol) = galerkin(&mesh, &spec);
        h.push(mesh.h_param());
        e.push(energy_error(&a, &b, &sol, &spec).unwrap());
    }
    let order = loglog_slope(&h, &e).unwrap();
    // h^{1/2} |log h| reads as slightly less than one half at these sizes
    assert!((order - 0.5).abs() <= 0.1, "{order}");
}

#[test]
fn h1_order_for_s_09_between_two_meshes() {
    let spec = ProblemSpec::new(Domain::Interval, 0.9, 0).unwrap();
    let mut err = Vec::new();
    let mut n_nodes = Vec::new();
    for n in [1000, 2000] {
        let mesh = build_uniform_1d(n).unwrap();
        let (_, _, sol) = galerkin(&mesh, &spec);
        err.push(h1_error(&sol, &spec).unwrap());
        n_nodes.push(n as f64);
    }
    let order = (err[0] / err[1]).ln() / (n_nodes[1] / n_nodes[0]).ln();
    assert!((order - 0.4).abs() <= 0.08, "{order}");
}

#[test]
fn errors_do_not_depend_on_node_labels() {
    let spec = ProblemSpec::new(Domain::UnitDisk, 0.7, 0).unwrap();
    let mesh = build_disk_mesh(0.5, 1.0).unwrap();
    let n = mesh.num_nodes();
    let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    assert!(n % 7 != 0);
    let other = mesh.relabeled(&perm).unwrap();
    let (_, _, s1) = galerkin(&mesh, &spec);
    let (_, _, s2) = galerkin(&other, &spec);
    let (a, b) = (h1_error(&s1, &spec).unwrap(), h1_error(&s2, &spec).unwrap());
    assert!((a - b).abs() <= 1e-10 * a, "{a} {b}");
    let (a, b) = (l2_error(&s1, &spec).unwrap(), l2_error(&s2, &spec).unwrap());
    assert!((a - b).abs() <= 1e-10 * a, "{a} {b}");
}

#[test]
fn fit_order_examples() {
    let mesh = build_uniform_1d(5).unwrap();
    let mut recs: Vec<ConvergenceRecord> = [1.0, 0.5, 0.25].iter().map(|&e| record(0.7, &mesh, e)).collect();
    for (r, d) in recs.iter_mut().zip([100, 400, 1600]) {
        r.dofs = d;
    }
    assert!((fit_order(&recs, XField::Dofs).unwrap() - 0.5).abs() < 1e-14);
    for r in recs.iter_mut() {
        r.h1 = 1.0;
    }
    assert_eq!(fit_order(&recs, XField::Dofs).unwrap(), 0.0);
    assert!(fit_order(&recs[..2], XField::Dofs).is_err());
    for (r, h) in recs.iter_mut().zip([0.1, 0.05, 0.025]) {
        r.h = h;
        r.h1 = h * h;
    }
    assert!((fit_order(&recs, XField::H).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn order_fit_rejects_bad_data() {
    assert!(loglog_slope(&[1.0, 2.0, 3.0], &[1.0, 0.0, 1.0]).is_err());
    assert!(loglog_slope(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    assert!(loglog_slope(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
}

#[test]
fn zero_solution_on_disk_recovers_full_norms() {
    // the mesh covers only an inscribed polygon, so these checks need the segments up to the circle
    let s = 0.6;
    let spec = ProblemSpec::new(Domain::UnitDisk, s, 0).unwrap();
    let mesh = build_disk_mesh(0.25, 1.0).unwrap();
    let zero = DiscreteSolution::new(&mesh, vec![0.0; mesh.num_dofs()]).unwrap();
    let cfg = QuadratureConfig::default();
    let c = ExactSolution::new(spec).unwrap().scale();
    let pi = std::f64::consts::PI;

    let h1 = (pi * (2.0 * s * c).powi(2) * (1.0 / (2.0 * s - 1.0) - 1.0 / (2.0 * s))).sqrt();
    let l2 = (pi * c * c / (2.0 * s + 1.0)).sqrt();
    let fu = pi * c / (s + 1.0);
    let got = h1_error_with(&zero, &spec, &cfg).unwrap();
    assert!((got - h1).abs() <= 1e-6 * h1, "{got} vs {h1}");
    let got = l2_error_with(&zero, &spec, &cfg).unwrap();
    assert!((got - l2).abs() <= 1e-9 * l2, "{got} vs {l2}");
    let got = load_against_exact(&mesh, &spec, &cfg).unwrap();
    assert!((got - fu).abs() <= 1e-9 * fu, "{got} vs {fu}");
    // without the segments the seminorm falls well short
    let inside = h1_distance(&zero, s, &cfg, |x, q| {
        let g = ExactSolution::new(spec).unwrap().gradient_factor(x[0] * x[0] + x[1] * x[1], q);
        [g * x[0], g * x[1]]
    });
    assert!(inside < 0.9 * h1, "{inside} vs {h1}");
}

#[test]
fn uniform_disk_interpolant_is_preasymptotic() {
    // (s - 1/2)/2 = 0.2 in dofs is only reached far beyond a few thousand dofs
    let spec = ProblemSpec::new(Domain::UnitDisk, 0.9, 0).unwrap();
    let cfg = QuadratureConfig::default();
    let mut recs = Vec::new();
    for h in [0.0625, 0.04375, 0.03125, 0.025, 0.015625, 0.0078125] {
        let mesh = build_disk_mesh(h, 1.0).unwrap();
        let sol = DiscreteSolution::interpolate(&mesh, |x| exact_solution(&spec, x).unwrap());
        recs.push(record(0.9, &mesh, h1_error_with(&sol, &spec, &cfg).unwrap()));
    }
    let desk = fit_order(&recs[..4], XField::Dofs).unwrap();
    assert!(desk > 0.3, "{desk}");
    let (mid, fine) = (fit_order(&recs[2..5], XField::Dofs).unwrap(), fit_order(&recs[3..], XField::Dofs).unwrap());
    assert!(fine < mid && mid < desk, "{desk} {mid} {fine}");
}

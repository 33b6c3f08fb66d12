use fraclap::oracle::brute_force_matrix;
use fraclap::*;

fn max_rel_entry_gap(a: &SymmetricMatrix, dense: &[Vec<f64>]) -> f64 {
    let scale = (0..a.dim()).map(|i| a.get(i, i)).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            let rel = (a.get(i, j) - dense[i][j]).abs() / dense[i][j].abs().max(1e-3 * scale);
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn interval_stiffness_matches_oracle_entrywise() {
    let mesh = build_uniform_1d(5).unwrap();
    let a = assemble_stiffness(&mesh, 0.75).unwrap();
    let o = brute_force_matrix(&mesh, 0.75, 13).unwrap();
    let gap = max_rel_entry_gap(&a, &o);
    assert!(gap < 1e-6, "{gap:e}");
}

#[test]
fn graded_interval_stiffness_matches_oracle() {
    let mesh = build_graded_1d(4, 2.0).unwrap();
    for s in [0.2, 0.6] {
        let a = assemble_stiffness(&mesh, s).unwrap();
        let o = brute_force_matrix(&mesh, s, 12).unwrap();
        assert!(max_rel_entry_gap(&a, &o) < 1e-6, "s={s}");
    }
}

#[test]
fn stiffness_is_symmetric_with_positive_diagonal() {
    let mesh = build_disk_mesh(0.5, 1.0).unwrap();
    let a = assemble_stiffness(&mesh, 0.4).unwrap();
    let dense = a.to_dense();
    for i in 0..a.dim() {
        assert!(dense[i][i] > 0.0);
        for j in 0..a.dim() {
            assert_eq!(dense[i][j], dense[j][i]);
        }
    }
}

#[test]
fn far_disjoint_supports_give_negative_entries() {
    let mesh = build_uniform_1d(11).unwrap();
    let a = assemble_stiffness(&mesh, 0.5).unwrap();
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            if i.abs_diff(j) >= 2 {
                assert!(a.get(i, j) < 0.0, "({i},{j})");
            }
        }
    }
}

#[test]
fn assembly_is_independent_of_thread_count() {
    let mesh = build_disk_mesh(0.25, 1.5).unwrap();
    let run = |threads: usize, batch: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let opts = AssemblyOptions { batch, check_integrity: false, ..AssemblyOptions::default() };
        pool.install(|| assemble_stiffness_with(&mesh, 0.7, &opts).unwrap())
    };
    let serial = run(1, 1);
    let parallel = run(4, 32);
    assert_eq!(serial.packed_data(), parallel.packed_data());
}

#[test]
fn doubling_orders_changes_entries_little() {
    // about fifty degrees of freedom
    let mesh = build_disk_mesh(0.2, 1.5).unwrap();
    assert!((40..=80).contains(&mesh.num_dofs()), "{}", mesh.num_dofs());
    for s in [0.6] {
        let base = AssemblyOptions { check_integrity: false, ..AssemblyOptions::default() };
        let fine = AssemblyOptions { quadrature: base.quadrature.refined(), ..base };
        let a = assemble_stiffness_with(&mesh, s, &base).unwrap();
        let b = assemble_stiffness_with(&mesh, s, &fine).unwrap();
        let scale = a.diagonal().iter().copied().fold(0.0, f64::max);
        for (x, y) in a.packed_data().iter().zip(b.packed_data()) {
            assert!((x - y).abs() <= 1e-6 * y.abs().max(1e-3 * scale), "s={s}: {x} vs {y}");
        }
    }
}

#[test]
fn unit_load_on_uniform_mesh_is_the_hat_area() {
    // k = 0 gives f = 1
    let mesh = build_uniform_1d(11).unwrap();
    let spec = ProblemSpec::new(Domain::Interval, 0.5, 0).unwrap();
    let b = assemble_load(&mesh, &spec).unwrap();
    for v in &b.values {
        assert!((v - 0.2).abs() < 1e-14);
    }
}

#[test]
fn unit_load_sums_to_the_interior_hat_mass() {
    let mesh = build_graded_1d(5, 2.0).unwrap();
    let spec = ProblemSpec::new(Domain::Interval, 0.3, 0).unwrap();
    let b = assemble_load(&mesh, &spec).unwrap();
    let total: f64 = b.values.iter().sum();
    let ne = mesh.num_elements();
    let expected = 2.0 - 0.5 * (mesh.measure(0) + mesh.measure(ne - 1));
    assert!((total - expected).abs() < 1e-13);
}

#[test]
fn polynomial_load_matches_refined_quadrature() {
    let mesh = build_disk_mesh(0.25, 1.0).unwrap();
    for k in 0..=2 {
        let spec = ProblemSpec::new(Domain::UnitDisk, 0.6, k).unwrap();
        let b = assemble_load(&mesh, &spec).unwrap();
        let fine = QuadratureConfig { load_order: 24, ..QuadratureConfig::default() };
        let c = assemble_load_with(&mesh, &spec, &fine).unwrap();
        for (x, y) in b.values.iter().zip(&c.values) {
            assert!((x - y).abs() < 1e-12 * y.abs().max(1e-3), "k={k}");
        }
    }
}

#[test]
fn load_rejects_dimension_mismatch() {
    let mesh = build_uniform_1d(5).unwrap();
    let spec = ProblemSpec::new(Domain::UnitDisk, 0.5, 0).unwrap();
    assert!(matches!(assemble_load(&mesh, &spec), Err(Error::Argument(_))));
}

#[test]
fn stiffness_rejects_bad_index() {
    let mesh = build_uniform_1d(5).unwrap();
    assert!(matches!(assemble_stiffness(&mesh, 1.2), Err(Error::Domain(_))));
}

#[test]
fn binary_dump_round_trips() {
    let mesh = build_uniform_1d(7).unwrap();
    let a = assemble_stiffness(&mesh, 0.5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.bin");
    a.save_binary(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 8 + 8 * a.dim() * (a.dim() + 1) / 2);
    assert_eq!(u64::from_le_bytes(bytes[..8].try_into().unwrap()), a.dim() as u64);
    assert_eq!(SymmetricMatrix::load_binary(&path).unwrap(), a);
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(SymmetricMatrix::load_binary(&path), Err(Error::Format(_))));
}

use magnon::dispersion::DirichletModes;
use magnon::fock::*;
use magnon::lattice::LatticeSpec;
use magnon::linalg::SparseMatrix;

fn specs() -> Vec<LatticeSpec> {
    vec![
        LatticeSpec::dirichlet(1, 3).unwrap(),
        LatticeSpec::dirichlet(2, 2).unwrap(),
        LatticeSpec::periodic(1, 3).unwrap(),
    ]
}

fn commutator(a: &SparseMatrix, b: &SparseMatrix) -> f64 {
    a.matmul(b).add(&b.matmul(a), -1.0).max_abs()
}

#[test]
fn expansion_reconstructs_hamiltonian() {
    for spec in specs() {
        for two_s in [2u32, 3, 4] {
            let basis = FockBasis::build(&spec, two_s as usize).unwrap();
            let s = two_s as f64 / 2.0;
            let terms = expansion_terms(&basis, two_s).unwrap();
            let h = hp_hamiltonian(&basis, two_s).unwrap().scaled(1.0 / s);
            let sum = terms.t.add(&terms.i, 1.0).add(&terms.j, 1.0).add(terms.r_tilde().unwrap(), 1.0);
            assert!(h.max_abs_diff(&sum) < 1e-12);
            // the exact remainder R = H/S − T − I from its closed-form kernel
            let r = remainder_r(&basis, two_s);
            assert!(h.add(&terms.t, -1.0).add(&terms.i, -1.0).max_abs_diff(&r) < 1e-12, "{spec:?} 2S={two_s}");
            assert!(r.add(&terms.j, -1.0).max_abs_diff(terms.r_tilde().unwrap()) < 1e-12);
        }
    }
}

#[test]
fn r_tilde_needs_physical_cutoff() {
    let spec = LatticeSpec::dirichlet(1, 2).unwrap();
    let basis = FockBasis::build(&spec, 3).unwrap();
    assert!(expansion_terms(&basis, 2).unwrap().r_tilde().is_err());
}

#[test]
fn every_term_conserves_particle_number() {
    for spec in specs() {
        let basis = FockBasis::build(&spec, 3).unwrap();
        let n = number_operator(&basis);
        let terms = expansion_terms(&basis, 3).unwrap();
        let mut ops = vec![&terms.t, &terms.i, &terms.j, terms.r_tilde().unwrap()];
        if let Some(td) = &terms.t_d {
            ops.push(td);
        }
        for op in ops {
            assert_eq!(commutator(op, &n), 0.0);
            for idx in basis.sectors().values() {
                assert_eq!(op.leakage(idx), 0.0);
            }
            assert!(op.symmetry_defect() < 1e-14);
        }
    }
}

#[test]
fn vacuum_energy_is_zero() {
    for spec in specs() {
        let basis = FockBasis::build(&spec, 2).unwrap();
        let vac = basis.index_of(&vec![0u8; basis.num_sites()]).unwrap();
        let terms = expansion_terms(&basis, 2).unwrap();
        let mut ops = vec![&terms.t, &terms.i, &terms.j, terms.r_tilde().unwrap()];
        if let Some(td) = &terms.t_d {
            ops.push(td);
        }
        for op in ops {
            for (_, v) in op.row(vac) {
                assert_eq!(v, 0.0);
            }
        }
    }
}

#[test]
fn one_particle_sector_is_the_hopping_matrix() {
    for spec in specs() {
        let basis = FockBasis::build(&spec, 2).unwrap();
        let n = spec.num_sites();
        let h1 = spec.one_particle_matrix();
        let t = match spec.boundary() {
            magnon::Boundary::Dirichlet => kinetic_dirichlet(&basis).unwrap(),
            magnon::Boundary::Periodic => kinetic(&basis),
        };
        let idx = |x: usize| {
            let mut occ = vec![0u8; n];
            occ[x] = 1;
            basis.index_of(&occ).unwrap()
        };
        for x in 0..n {
            for y in 0..n {
                assert!((t.get(idx(x), idx(y)) - h1[x * n + y]).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn free_boson_partition_function() {
    // log tr e^{−β̃T^D} = −Σ_k log(1 − e^{−β̃ε(k)}) up to truncation
    let spec = LatticeSpec::dirichlet(2, 2).unwrap();
    for bt in [2.0, 3.0] {
        let basis = thermal_basis(&spec, 14, bt, 1e-14).unwrap();
        let td = kinetic_dirichlet(&basis).unwrap();
        let g = SectorSpectrum::new(&basis, &td, false).unwrap();
        let modes = DirichletModes::new(&spec, bt).unwrap();
        let want: f64 = modes.eps.iter().map(|e| -(-(-bt * e).exp()).ln_1p()).sum();
        assert!((g.log_partition(bt) - want).abs() < 1e-9, "bt {bt}: {} {want}", g.log_partition(bt));
    }
}

#[test]
fn projector_keeps_physical_states() {
    let spec = LatticeSpec::dirichlet(1, 3).unwrap();
    let basis = FockBasis::build(&spec, 4).unwrap();
    let p = projector_diag(&basis, 2);
    let kept = p.iter().filter(|&&v| v == 1.0).count();
    assert_eq!(kept, 27);
    assert_eq!(p.len(), 125);
}

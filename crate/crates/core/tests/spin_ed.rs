use magnon::dispersion::epsilon;
use magnon::fock::{number_operator, FockBasis};
use magnon::lattice::LatticeSpec;
use magnon::spin_ed::*;

fn cases() -> Vec<(LatticeSpec, u32)> {
    vec![
        (LatticeSpec::dirichlet(1, 3).unwrap(), 1),
        (LatticeSpec::dirichlet(1, 3).unwrap(), 2),
        (LatticeSpec::dirichlet(2, 2).unwrap(), 1),
        (LatticeSpec::periodic(1, 4).unwrap(), 1),
        (LatticeSpec::periodic(1, 3).unwrap(), 3),
    ]
}

#[test]
fn total_s3_commutes_with_h() {
    for (spec, two_s) in cases() {
        let basis = FockBasis::build(&spec, two_s as usize).unwrap();
        let n = number_operator(&basis);
        for h in [heisenberg_sparse(&spec, two_s).unwrap()]
            .into_iter()
            .chain((spec.boundary() == magnon::Boundary::Dirichlet).then(|| dirichlet_sparse(&spec, two_s).unwrap()))
        {
            let c = h.matmul(&n).add(&n.matmul(&h), -1.0);
            assert_eq!(c.max_abs(), 0.0);
        }
    }
}

#[test]
fn sector_dimensions_are_multinomial() {
    for (spec, two_s) in cases() {
        let sites = spec.num_sites();
        let q = two_s as usize + 1;
        let mut count = vec![0usize; sites * two_s as usize + 1];
        for code in 0..q.pow(sites as u32) {
            let (mut c, mut tot) = (code, 0);
            for _ in 0..sites {
                tot += c % q;
                c /= q;
            }
            count[tot] += 1;
        }
        let sp = sector_spectrum(&spec, two_s, false).unwrap();
        let dims: Vec<usize> = sp.blocks.iter().map(|b| b.values.len()).collect();
        assert_eq!(dims, count);
    }
}

#[test]
fn holstein_primakoff_equivalence() {
    for (spec, two_s) in cases() {
        assert!(hp_equivalence_check(&spec, two_s).unwrap() < 1e-10, "{spec:?} 2S={two_s}");
    }
}

#[test]
fn free_energy_rises_to_zero() {
    let spec = LatticeSpec::dirichlet(2, 2).unwrap();
    let eig = sector_spectrum(&spec, 1, false).unwrap().eigenvalues();
    let h = heisenberg_hamiltonian(&spec, 1).unwrap();
    assert!(eig[0].abs() < 1e-12);
    let mut prev = f64::NEG_INFINITY;
    for beta in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let f = free_energy_from_spectrum(&eig, beta, 4).unwrap();
        assert!(f < 0.0 && f > prev, "beta {beta}: {f}");
        assert!((exact_free_energy(&h, beta, 4).unwrap() - f).abs() < 1e-12);
        prev = f;
    }
    // the ground space is the 5-fold S = 2 multiplet: f → −log 5/(4β)
    let beta = 200.0;
    let f = free_energy_from_spectrum(&eig, beta, 4).unwrap();
    assert!((f + 5f64.ln() / (4.0 * beta)).abs() < 1e-12);
}

#[test]
fn magnons_are_eigenstates() {
    for (d, ell, two_s) in [(1, 5, 3), (2, 3, 1), (1, 6, 2)] {
        let spec = LatticeSpec::periodic(d, ell).unwrap();
        for m in spec.modes() {
            assert!(magnon_check(&spec, two_s, &m.momentum).unwrap() < 1e-10);
        }
    }
}

#[test]
fn one_magnon_sector_spectrum() {
    let spec = LatticeSpec::periodic(1, 5).unwrap();
    let two_s = 2;
    let sp = sector_spectrum(&spec, two_s, false).unwrap();
    let mut got = sp.blocks[1].values.clone();
    let mut want: Vec<f64> = spec.modes().iter().map(|m| epsilon(&m.momentum.0)).collect();
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn magnon_residual_detects_wrong_energy() {
    let spec = LatticeSpec::periodic(1, 4).unwrap();
    let m = &spec.modes()[1];
    let e = 0.5 * epsilon(&m.momentum.0);
    assert!(magnon_residual(&spec, 1, &m.momentum, e).unwrap() < 1e-12);
    assert!(magnon_residual(&spec, 1, &m.momentum, e + 1e-6).unwrap() > 1e-7);
    assert!(magnon_check(&LatticeSpec::dirichlet(1, 4).unwrap(), 1, &m.momentum).is_err());
}

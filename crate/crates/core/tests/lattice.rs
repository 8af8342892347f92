use magnon::dispersion::epsilon_of;
use magnon::lattice::LatticeSpec;
use proptest::prelude::*;

fn mode_matrix(spec: &LatticeSpec) -> Vec<Vec<f64>> {
    let sites = spec.sites();
    spec.modes().iter().map(|m| sites.iter().map(|x| spec.eigenfunction(&m.momentum, x).unwrap()).collect()).collect()
}

#[test]
fn eigenfunction_matrix_is_orthogonal() {
    for (d, ell) in [(1, 9), (2, 5), (3, 4)] {
        let spec = LatticeSpec::dirichlet(d, ell).unwrap();
        let phi = mode_matrix(&spec);
        let n = phi.len();
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|x| phi[a][x] * phi[b][x]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12, "d {d} ell {ell}: ({a},{b}) {dot}");
                // rows orthonormal too: the matrix is square
                let dot_t: f64 = (0..n).map(|k| phi[k][a] * phi[k][b]).sum();
                assert!((dot_t - want).abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigenfunctions_diagonalize_dirichlet_hopping(d in 1usize..=3, ell in 1usize..=6, pick in 0usize..10_000) {
        let spec = LatticeSpec::dirichlet(d, ell).unwrap();
        let n = spec.num_sites();
        let h = spec.one_particle_matrix();
        let modes = spec.modes();
        let m = &modes[pick % n];
        let sites = spec.sites();
        let phi: Vec<f64> = sites.iter().map(|x| spec.eigenfunction(&m.momentum, x).unwrap()).collect();
        let e = epsilon_of(&m.momentum);
        for x in 0..n {
            let hx: f64 = (0..n).map(|y| h[x * n + y] * phi[y]).sum();
            prop_assert!((hx - e * phi[x]).abs() < 1e-12);
        }
    }
}

#[test]
fn hopping_matrix_from_neighbour_rule() {
    // independent construction: diagonal = 2d, off-diagonal −1 for |x − y|₁ = 1
    for (d, ell) in [(1, 5), (2, 4), (3, 3)] {
        let spec = LatticeSpec::dirichlet(d, ell).unwrap();
        let sites = spec.sites();
        let n = sites.len();
        let h = spec.one_particle_matrix();
        for x in 0..n {
            for y in 0..n {
                let dist: usize = sites[x].0.iter().zip(&sites[y].0).map(|(a, b)| a.abs_diff(*b)).sum();
                let want = match dist {
                    0 => 2.0 * d as f64,
                    1 => -1.0,
                    _ => 0.0,
                };
                assert_eq!(h[x * n + y], want, "d {d} ell {ell} ({x},{y})");
            }
        }
    }
}

#[test]
fn nn_pairs_match_brute_force_adjacency() {
    for d in 1..=3 {
        for ell in 1..=6usize {
            let spec = LatticeSpec::dirichlet(d, ell).unwrap();
            let sites = spec.sites();
            let mut brute = 0;
            for (i, x) in sites.iter().enumerate() {
                for y in &sites[i + 1..] {
                    let dist: usize = x.0.iter().zip(&y.0).map(|(a, b)| a.abs_diff(*b)).sum();
                    brute += (dist == 1) as usize;
                }
            }
            assert_eq!(spec.nn_pairs().len(), brute);
            if ell >= 3 {
                // each site has 2d periodic neighbours, every bond counted twice
                assert_eq!(LatticeSpec::periodic(d, ell).unwrap().nn_pairs().len(), d * ell.pow(d as u32));
            }
        }
        for ell in 1..=16usize {
            let spec = LatticeSpec::dirichlet(d, ell).unwrap();
            assert_eq!(spec.nn_pairs().len(), d * ell.pow(d as u32 - 1) * (ell - 1));
        }
    }
}

#[test]
fn boundary_multiplicity_counts_missing_neighbours() {
    let spec = LatticeSpec::dirichlet(3, 4).unwrap();
    let m = spec.boundary_multiplicity().unwrap();
    let total: usize = m.iter().sum();
    // 2d faces of ℓ^{d−1} sites each
    assert_eq!(total, 6 * 16);
    let bonds = spec.bonds().len();
    assert_eq!(2 * bonds + total, 6 * spec.num_sites());
}

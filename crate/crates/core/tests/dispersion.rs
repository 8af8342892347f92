use std::f64::consts::PI;

use magnon::dispersion::*;
use magnon::lattice::{LatticeSpec, Site};
use magnon::linalg::{eigh, OperatorMatrix};
use magnon::quadrature::cubature::integrate;
use magnon::quadrature::{riemann_lower_sum_check, Cell, CubatureOptions};
use proptest::prelude::*;

#[test]
fn two_point_table_matches_dense_bose_function() {
    // ρ = (e^{β̃h} − 1)^{−1} from the eigendecomposition of the one-particle matrix
    for (d, ell, bt) in [(1, 7, 0.7), (2, 4, 1.5), (3, 3, 3.0)] {
        let spec = LatticeSpec::dirichlet(d, ell).unwrap();
        let n = spec.num_sites();
        let h = OperatorMatrix::from_row_major(n, spec.one_particle_matrix()).unwrap();
        let e = eigh(&h).unwrap();
        let table = TwoPointTable::build(&spec, bt).unwrap();
        for x in 0..n {
            for y in 0..n {
                let want: f64 = e.values.iter().zip(&e.vectors).map(|(l, v)| v[x] * v[y] / (bt * l).exp_m1()).sum();
                assert!((table.get(x, y) - want).abs() < 1e-12 * (1.0 + want.abs()), "{x},{y}");
            }
        }
    }
}

#[test]
fn table_is_symmetric_and_cauchy_schwarz() {
    for (d, ell, bt) in [(2, 5, 1.0), (3, 4, 0.5), (3, 5, 4.0)] {
        let spec = LatticeSpec::dirichlet(d, ell).unwrap();
        let t = TwoPointTable::build(&spec, bt).unwrap();
        let n = t.num_sites();
        for x in 0..n {
            assert!(t.density(x) > 0.0);
            for y in 0..n {
                assert_eq!(t.get(x, y), t.get(y, x));
                assert!(t.get(x, y).abs() <= (t.density(x) * t.density(y)).sqrt() * (1.0 + 1e-12));
            }
        }
        let diag = site_densities(&spec, bt).unwrap();
        for (a, b) in diag.iter().zip(t.densities()) {
            assert!((a - b).abs() < 1e-13 * b);
        }
    }
}

#[test]
fn density_bound_holds_on_grid() {
    for d in [2, 3] {
        for bt in [1.0, 2.0, 4.0, 8.0] {
            for ell in [4, 8, 16] {
                let bound = match rho_upper_bound(d, bt, ell) {
                    Ok(b) => b,
                    Err(_) => {
                        assert!(d == 2 && !(2.0 * bt > 1.0 && 1.0 > 2.0 * bt / (ell + 1) as f64));
                        continue;
                    }
                };
                let sup = site_densities(&LatticeSpec::dirichlet(d, ell).unwrap(), bt).unwrap();
                let sup = sup.into_iter().fold(0.0, f64::max);
                assert!(sup <= bound, "d {d} bt {bt} ell {ell}: {sup} > {bound}");
            }
        }
    }
    for bt in [0.125, 0.25, 0.5, 1.0] {
        for ell in [4, 8, 16] {
            let sup = site_densities(&LatticeSpec::dirichlet(3, ell).unwrap(), bt).unwrap();
            assert!(sup.into_iter().fold(0.0, f64::max) <= rho_small_beta_bound(bt));
        }
    }
}

/// `∫_{[0,π]³} f dk` for the Bose factor, singular like `1/|k|²` at the origin.
fn bose_octant_integral(bt: f64) -> f64 {
    let f = |k: &[f64]| {
        let e: f64 = k.iter().map(|x| 4.0 * (0.5 * x).sin().powi(2)).sum();
        1.0 / (bt * e).exp_m1()
    };
    let opts = CubatureOptions { rel_tol: 1e-7, abs_tol: 0.0, ..Default::default() };
    integrate(&f, 3, &[Cell { lo: [0.0; 3], hi: [PI; 3] }], &opts).unwrap().value
}

#[test]
fn riemann_sum_of_bose_factor_is_below_integral() {
    // the Bose factor decreases in every |k_j|, so the upper-corner Riemann sum underestimates
    for bt in [1.0, 4.0] {
        let integral = bose_octant_integral(bt);
        for ell in 1..=16usize {
            let h = PI / (ell + 1) as f64;
            let modes = DirichletModes::new(&LatticeSpec::dirichlet(3, ell).unwrap(), bt).unwrap();
            let lhs = h.powi(3) * modes.f.iter().sum::<f64>();
            assert!(lhs <= integral, "bt {bt} ell {ell}: {lhs} > {integral}");
        }
    }
}

#[test]
fn riemann_lower_sum_margin() {
    let bt = 4.0;
    let g = |k: &[f64]| {
        let e = epsilon(k);
        e / (bt * e).exp_m1()
    };
    for ell in [4, 8, 16] {
        let r = riemann_lower_sum_check(&g, ell, 3, 1.0 / bt, 3f64.sqrt()).unwrap();
        assert!(r.margin >= 0.0, "ell {ell}: {r:?}");
        assert!(r.lhs <= r.integral + 1e-12);
    }
}

#[test]
fn interior_density_approaches_bulk() {
    let bt = 2.0;
    // continuum ρ = ∫ f dk/(2π)³
    let bulk = bose_octant_integral(bt) / PI.powi(3);
    let mut prev = f64::INFINITY;
    for ell in [9, 17, 33] {
        let spec = LatticeSpec::dirichlet(3, ell).unwrap();
        let c = spec.index_of(&Site(vec![ell.div_ceil(2); 3])).unwrap();
        let rho = site_densities(&spec, bt).unwrap()[c];
        let gap = (bulk - rho).abs();
        assert!(rho < bulk, "ell {ell}");
        if ell > 9 {
            // the wall suppresses the centre density by O(1/ℓ)
            let r = gap / prev;
            assert!((0.4..0.6).contains(&r), "ell {ell}: ratio {r}");
        }
        prev = gap;
    }
}

proptest! {
    #[test]
    fn bose_is_positive_and_decreasing(x in 1e-6f64..50.0, dx in 1e-6f64..1.0) {
        let b = bose(x);
        prop_assert!(b > 0.0);
        prop_assert!(bose(x + dx) < b);
        // x·f(x) ≤ 1
        prop_assert!(x * b <= 1.0 + 1e-15);
    }

    #[test]
    fn epsilon_is_reflection_invariant(k in prop::array::uniform3(-PI..PI), axis in 0usize..3) {
        let mut r = k;
        r[axis] = -r[axis];
        prop_assert!((epsilon(&k) - epsilon(&r)).abs() < 1e-14);
        prop_assert!(epsilon(&k) >= 0.0 && epsilon(&k) <= 12.0);
    }
}

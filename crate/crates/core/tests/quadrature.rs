use std::f64::consts::PI;

use magnon::quadrature::cubature::integrate;
use magnon::quadrature::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn octant_and_full_zone_agree() {
    for d in 1..=3 {
        for bt in [0.5, 2.0, 8.0] {
            let a = correction_integral_with(d, bt, 1e-12, Domain::Octant).unwrap().value;
            let b = correction_integral_with(d, bt, 1e-12, Domain::Full).unwrap().value;
            assert!(rel(a, b) < 1e-10, "correction d {d} bt {bt}: {a} {b}");
            let a = leading_free_energy_with(d, bt, 1e-10, Domain::Octant).unwrap().value;
            let b = leading_free_energy_with(d, bt, 1e-10, Domain::Full).unwrap().value;
            assert!(rel(a, b) < 1e-10, "leading d {d} bt {bt}: {a} {b}");
        }
    }
}

#[test]
fn halving_the_mesh_stays_within_error_estimate() {
    let bt = 2.0;
    let g = |k: &[f64]| {
        let e: f64 = k.iter().map(|x| 2.0 * (1.0 - x.cos())).sum();
        if e == 0.0 {
            1.0 / bt
        } else {
            e / (bt * e).exp_m1()
        }
    };
    let opts = CubatureOptions { rel_tol: 1e-6, ..Default::default() };
    for d in 1..=3usize {
        let coarse = integrate(&g, d, &[Cell { lo: [0.0; 3], hi: [PI; 3] }], &opts).unwrap();
        let halves: Vec<Cell> = (0..1usize << d)
            .map(|mask| {
                let mut lo = [0.0; 3];
                let mut hi = [PI; 3];
                for j in 0..d {
                    if mask >> j & 1 == 1 {
                        lo[j] = PI / 2.0;
                    } else {
                        hi[j] = PI / 2.0;
                    }
                }
                Cell { lo, hi }
            })
            .collect();
        let fine = integrate(&g, d, &halves, &opts).unwrap();
        assert!(
            (coarse.value - fine.value).abs() <= coarse.error_estimate.max(fine.error_estimate),
            "d {d}: {} vs {} (est {})",
            coarse.value,
            fine.value,
            coarse.error_estimate
        );
    }
}

#[test]
fn small_beta_limits() {
    // f ≈ 1/(β̃ε): ∫εf → 1/β̃ and β̃·leading → ∫ log(β̃ε)
    for d in 1..=3 {
        let bt = 1e-4;
        let c = correction_integral(d, bt).unwrap().value;
        assert!(rel(c * bt, 1.0) < 1e-3);
        let l = leading_free_energy(d, bt).unwrap().value;
        let want = bt.ln() + log_epsilon_mean(d).unwrap().value;
        assert!(((l * bt) - want).abs() < 1e-3 * want.abs());
    }
    // one dimension: ∫ log(2 − 2cos k) dk/π = 0
    assert!(log_epsilon_mean(1).unwrap().value.abs() < 1e-10);
}

#[test]
fn large_beta_constants() {
    let bt: f64 = 400.0;
    let c = correction_integral(3, bt).unwrap().value * bt.powf(2.5);
    assert!(rel(c, correction_asymptotic_constant()) < 0.01);
    let l = leading_free_energy(3, bt).unwrap().value * bt.powf(2.5);
    assert!(rel(l, leading_asymptotic_constant()) < 0.01);
}

#[test]
fn dyson_coefficient_by_extrapolation() {
    let betas = [16.0, 32.0, 64.0, 128.0];
    let y: Vec<f64> = betas
        .iter()
        .map(|&b: &f64| {
            let c = correction_integral(3, b).unwrap().value;
            b.powi(5) * c * c / 12.0
        })
        .collect();
    let (c0, _) = richardson_first_order(&betas, &y).unwrap();
    assert!(rel(c0, 1.70038e-4) < 0.01, "{c0}");
    assert!(rel(dyson_coefficient(), 1.70038e-4) < 1e-5);
}

#[test]
fn zeta_values() {
    assert!(rel(zeta(2.0).unwrap(), PI * PI / 6.0) < 1e-13);
    assert!(rel(zeta(1.5).unwrap(), 2.612375348685488) < 1e-13);
    assert!(rel(zeta(2.5).unwrap(), 1.341487257250917) < 1e-13);
    assert!(zeta(1.0).is_err());
}

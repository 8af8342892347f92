//! Brillouin-zone integrals of the free magnon gas, their large-β̃ constants,
//! the lattice-sum versus integral comparison, and the Riemann zeta function.

pub mod cubature;
mod gauss;
mod zeta;

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

pub use cubature::{Cell, CubatureOptions};
pub use gauss::gauss_legendre;
pub use zeta::zeta;

use crate::error::{ensure, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
}

/// Integration region: the positive octant `[0,π]^d` (using reflection symmetry)
/// or the full zone `[−π,π]^d` split into `2^d` octants meeting at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Octant,
    Full,
}

/// Relative tolerance used when none is given.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

fn cells(d: usize, domain: Domain) -> Vec<Cell> {
    match domain {
        Domain::Octant => vec![Cell { lo: [0.0; 3], hi: [PI; 3] }],
        Domain::Full => (0..1usize << d)
            .map(|mask| {
                let mut lo = [0.0; 3];
                let mut hi = [PI; 3];
                for j in 0..d {
                    if mask >> j & 1 == 1 {
                        lo[j] = -PI;
                        hi[j] = 0.0;
                    }
                }
                Cell { lo, hi }
            })
            .collect(),
    }
}

fn measure(d: usize, domain: Domain) -> f64 {
    match domain {
        Domain::Octant => PI.powi(d as i32),
        Domain::Full => (2.0 * PI).powi(d as i32),
    }
}

/// `ε(k)` written as `Σ 4 sin²(k_j/2)` to keep relative accuracy near the origin.
#[inline]
fn eps(k: &[f64]) -> f64 {
    k.iter()
        .map(|&x| {
            let s = (0.5 * x).sin();
            4.0 * s * s
        })
        .sum()
}

fn check_args(d: usize, beta_tilde: f64) -> Result<()> {
    ensure((1..=3).contains(&d), || format!("dimension {d} not in 1..=3"))?;
    ensure(beta_tilde > 0.0 && beta_tilde.is_finite(), || {
        format!("beta_tilde = {beta_tilde} must be positive and finite")
    })
}

/// Zone average of `g`, normalized by the measure of the domain.
fn zone_average<F>(g: &F, d: usize, domain: Domain, rel_tol: f64) -> Result<QuadratureResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let opts = CubatureOptions { rel_tol, ..Default::default() };
    let r = cubature::integrate(g, d, &cells(d, domain), &opts)?;
    let m = measure(d, domain);
    Ok(QuadratureResult { value: r.value / m, error_estimate: r.error_estimate / m, evaluations: r.evaluations })
}

/// `∫ log ε(k) dk/π^d` over `[0,π]^d`.
pub fn log_epsilon_mean(d: usize) -> Result<QuadratureResult> {
    static CACHE: [OnceLock<QuadratureResult>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    ensure((1..=3).contains(&d), || format!("dimension {d} not in 1..=3"))?;
    if let Some(r) = CACHE[d - 1].get() {
        return Ok(*r);
    }
    let r = zone_average(&|k: &[f64]| eps(k).ln(), d, Domain::Octant, 1e-14)?;
    Ok(*CACHE[d - 1].get_or_init(|| r))
}

/// `log((1 − e^{−x})/x)`, smooth on `[0, ∞)`.
#[inline]
fn log_bose_ratio(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (-(-x).exp_m1() / x).ln()
    }
}

/// `(1/β̃) ∫ log(1 − e^{−β̃ε(k)}) dk/(2π)^d`.
pub fn leading_free_energy(d: usize, beta_tilde: f64) -> Result<QuadratureResult> {
    leading_free_energy_with(d, beta_tilde, DEFAULT_REL_TOL, Domain::Octant)
}

/// As [`leading_free_energy`] with an explicit relative tolerance and domain.
///
/// The integrand is split as `log(β̃ε) + log((1 − e^{−β̃ε})/(β̃ε))`; the first
/// part contributes `log β̃ + ∫ log ε`, the second is smooth.
pub fn leading_free_energy_with(d: usize, beta_tilde: f64, rel_tol: f64, domain: Domain) -> Result<QuadratureResult> {
    check_args(d, beta_tilde)?;
    let log_eps = match domain {
        Domain::Octant => log_epsilon_mean(d)?,
        Domain::Full => zone_average(&|k: &[f64]| eps(k).ln(), d, Domain::Full, 1e-13)?,
    };
    let smooth = |k: &[f64]| log_bose_ratio(beta_tilde * eps(k));
    let mut piece_tol = 1e-10;
    loop {
        let s = zone_average(&smooth, d, domain, piece_tol)?;
        let value = (beta_tilde.ln() + log_eps.value + s.value) / beta_tilde;
        let err = (log_eps.error_estimate + s.error_estimate) / beta_tilde;
        let evaluations = log_eps.evaluations + s.evaluations;
        if err <= rel_tol * value.abs() {
            return Ok(QuadratureResult { value, error_estimate: err, evaluations });
        }
        if piece_tol < 1e-14 {
            return Err(Error::NonConvergence(format!(
                "leading free energy at beta_tilde = {beta_tilde}: error {err:.3e} above tolerance"
            )));
        }
        piece_tol /= 100.0;
    }
}

/// `∫ ε(k)/(e^{β̃ε(k)} − 1) dk/(2π)^d`, the integrand taking the value `1/β̃` at `k = 0`.
pub fn correction_integral(d: usize, beta_tilde: f64) -> Result<QuadratureResult> {
    correction_integral_with(d, beta_tilde, DEFAULT_REL_TOL, Domain::Octant)
}

pub fn correction_integral_with(d: usize, beta_tilde: f64, rel_tol: f64, domain: Domain) -> Result<QuadratureResult> {
    check_args(d, beta_tilde)?;
    let g = |k: &[f64]| {
        let e = eps(k);
        if e == 0.0 {
            1.0 / beta_tilde
        } else {
            e / (beta_tilde * e).exp_m1()
        }
    };
    zone_average(&g, d, domain, rel_tol)
}

/// `3 ζ(5/2)² / (128 (2π)³)`.
pub fn dyson_coefficient() -> f64 {
    let z = zeta(2.5).expect("zeta(5/2) is defined");
    3.0 * z * z / (128.0 * (2.0 * PI).powi(3))
}

/// `lim β̃^{5/2} ∫ εf dk/(2π)³ = (3π^{3/2}/2) ζ(5/2)/(2π)³` in three dimensions.
pub fn correction_asymptotic_constant() -> f64 {
    1.5 * PI.powf(1.5) * zeta(2.5).expect("zeta(5/2) is defined") / (2.0 * PI).powi(3)
}

/// `lim β̃^{5/2} × leading_free_energy(3, β̃) = ∫_{R³} log(1 − e^{−k²}) d³k/(2π)³ = −ζ(5/2)/(8π^{3/2})`.
pub fn leading_asymptotic_constant() -> f64 {
    -zeta(2.5).expect("zeta(5/2) is defined") / (8.0 * PI.powf(1.5))
}

/// Least-squares fit of `y = c0 + c1/x`; returns `(c0, c1)`.
pub fn richardson_first_order(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    ensure(x.len() == y.len() && x.len() >= 2, || "need at least two points".into())?;
    let n = x.len() as f64;
    let u: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
    let mu = u.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|a| (a - mu) * (a - mu)).sum();
    let suy: f64 = u.iter().zip(y).map(|(a, b)| (a - mu) * (b - my)).sum();
    ensure(suu > 0.0, || "abscissae must be distinct".into())?;
    let c1 = suy / suu;
    Ok((my - c1 * mu, c1))
}

/// Both sides of the lattice-sum lower bound
/// `(π/(ℓ+1))^n Σ_{k∈Λ*} g(k) ≥ ∫_{[0,π]^n} g − (n π^n D1 + π^{n+1} √n (ℓ/(ℓ+1))^n D2)/(ℓ+1)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RiemannCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub integral: f64,
    pub bound_constant_d1: f64,
    pub lipschitz_constant_d2: f64,
}

pub fn riemann_lower_sum_check<G>(g: &G, ell: usize, n: usize, d1: f64, d2: f64) -> Result<RiemannCheck>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    ensure((1..=3).contains(&n), || format!("dimension {n} not in 1..=3"))?;
    ensure(ell >= 1, || "ell must be positive".into())?;
    let h = PI / (ell + 1) as f64;
    let count = ell.pow(n as u32);
    let sum = crate::sum::par_sum(count, |i| {
        let c = crate::tensor::unflatten(i, ell, n);
        let k: Vec<f64> = c.iter().map(|&m| h * (m + 1) as f64).collect();
        g(&k)
    });
    let lhs = h.powi(n as i32) * sum;
    let integral = cubature::integrate(
        g,
        n,
        &cells(n, Domain::Octant),
        &CubatureOptions { rel_tol: 1e-10, abs_tol: 1e-14, ..Default::default() },
    )?
    .value;
    let nf = n as f64;
    let c1 = nf * PI.powi(n as i32);
    let c2 = PI.powi(n as i32 + 1) * nf.sqrt() * (ell as f64 / (ell + 1) as f64).powi(n as i32);
    let rhs = integral - (c1 * d1 + c2 * d2) / (ell + 1) as f64;
    Ok(RiemannCheck { lhs, rhs, margin: lhs - rhs, integral, bound_constant_d1: c1, lipschitz_constant_d2: c2 })
}

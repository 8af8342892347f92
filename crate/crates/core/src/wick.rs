//! Expectations in the quasi-free state `e^{−β̃T^D}/tr e^{−β̃T^D}` via Wick's
//! theorem, and the moment and remainder bounds built on them.

use crate::dispersion::{one_minus_p_geometric, TwoPointTable};
use crate::error::{ensure, Error, Result};
use crate::fock::{
    kinetic_dirichlet, projector_diag, quartic_i, remainder_r, thermal_basis, FockBasis, SectorSpectrum,
};
use crate::lattice::{sine_table, LatticeSpec};
use crate::linalg::SparseMatrix;
use crate::tensor::kron_apply;

/// Ordered product of ladder operators, `(site, is_creator)` read left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WickMonomial {
    pub factors: Vec<(usize, bool)>,
}

impl WickMonomial {
    pub fn new(factors: Vec<(usize, bool)>) -> Self {
        Self { factors }
    }

    /// `a*_{x_1} ⋯ a*_{x_n} a_{y_1} ⋯ a_{y_n}`.
    pub fn normal(creators: &[usize], annihilators: &[usize]) -> Self {
        let mut factors: Vec<(usize, bool)> = creators.iter().map(|&x| (x, true)).collect();
        factors.extend(annihilators.iter().map(|&y| (y, false)));
        Self { factors }
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn is_balanced(&self) -> bool {
        let c = self.factors.iter().filter(|f| f.1).count();
        2 * c == self.factors.len()
    }
}

/// Sum over creator–annihilator matchings of products of ordered contractions:
/// `⟨a*_y a_x⟩ = ρ(x,y)` and `⟨a_x a*_y⟩ = δ_{xy} + ρ(x,y)`. Unbalanced monomials give 0.
pub fn wick_expectation_with(m: &WickMonomial, rho: &impl Fn(usize, usize) -> f64) -> f64 {
    if !m.is_balanced() {
        return 0.0;
    }
    let creators: Vec<(usize, usize)> =
        m.factors.iter().enumerate().filter(|(_, f)| f.1).map(|(p, f)| (p, f.0)).collect();
    let annihilators: Vec<(usize, usize)> =
        m.factors.iter().enumerate().filter(|(_, f)| !f.1).map(|(p, f)| (p, f.0)).collect();
    let n = creators.len();
    let mut w = vec![0.0; n * n];
    for (i, &(pc, y)) in creators.iter().enumerate() {
        for (j, &(pa, x)) in annihilators.iter().enumerate() {
            let delta = if pa < pc && x == y { 1.0 } else { 0.0 };
            w[i * n + j] = delta + rho(x, y);
        }
    }
    permanent_by_expansion(&w, n)
}

pub fn wick_expectation(m: &WickMonomial, table: &TwoPointTable) -> f64 {
    wick_expectation_with(m, &|x, y| table.get(x, y))
}

/// Number of matchings enumerated for a balanced monomial of degree `2n`: `n!`.
pub fn matching_count(m: &WickMonomial) -> usize {
    if !m.is_balanced() {
        return 0;
    }
    (1..=m.degree() / 2).product()
}

fn permanent_by_expansion(w: &[f64], n: usize) -> f64 {
    fn go(w: &[f64], n: usize, row: usize, used: &mut Vec<bool>) -> f64 {
        if row == n {
            return 1.0;
        }
        let mut s = 0.0;
        for j in 0..n {
            if !used[j] {
                let v = w[row * n + j];
                if v != 0.0 {
                    used[j] = true;
                    s += v * go(w, n, row + 1, used);
                    used[j] = false;
                }
            }
        }
        s
    }
    go(w, n, 0, &mut vec![false; n])
}

/// `⟨I_Λ⟩ = (1/S) Σ_⟨xy⟩ ((ρ(x)+ρ(y)) ρ(x,y) − ρ(x)ρ(y) − ρ(x,y)²)`, summed in the
/// factored form `−(ρ(x) − ρ(x,y))(ρ(y) − ρ(x,y))`, which loses far fewer digits at low
/// temperature.
pub fn expectation_i_position(spec: &LatticeSpec, two_s: u32, beta_tilde: f64) -> Result<f64> {
    let table = TwoPointTable::build(spec, beta_tilde)?;
    Ok(expectation_i_from_table(&table, two_s))
}

pub fn expectation_i_from_table(table: &TwoPointTable, two_s: u32) -> f64 {
    let s = two_s as f64 / 2.0;
    let mut acc = crate::sum::CompensatedSum::new();
    for (x, y) in table.spec().bonds() {
        let (rx, ry, rxy) = (table.density(x), table.density(y), table.get(x, y));
        acc.add(-(rx - rxy) * (ry - rxy));
    }
    acc.value() / s
}

/// `⟨e^{λ n_x}⟩ = 1/(1 − (e^λ − 1) ρ(x))`.
pub fn expectation_exp_lambda_n(x: usize, lambda: f64, table: &TwoPointTable) -> Result<f64> {
    let g = lambda.exp_m1() * table.density(x);
    if g >= 1.0 {
        return Err(Error::InvalidParameter(format!("(e^λ − 1)ρ(x) = {g} ≥ 1")));
    }
    Ok(1.0 / (1.0 - g))
}

/// Largest lattice for which [`expectation_p_exact`] is attempted.
pub const EXACT_P_MAX_SITES: usize = 16;

/// `⟨P⟩` for `2S = 1` in the Gibbs state of `T^D`: `det(1−Q)·perm(1+Q)` with
/// `Q = e^{−β̃h}`, `h` the one-particle matrix of `T^D`.
pub fn expectation_p_exact(spec: &LatticeSpec, beta_tilde: f64) -> Result<f64> {
    if spec.boundary() != crate::lattice::Boundary::Dirichlet {
        return Err(Error::WrongBoundary { expected: "Dirichlet" });
    }
    let n = spec.num_sites();
    if n > EXACT_P_MAX_SITES {
        return Err(Error::DimensionCap { dim: n, cap: EXACT_P_MAX_SITES });
    }
    let ell = spec.ell();
    let d = spec.d();
    let st = sine_table(ell);
    let e1 = crate::dispersion::dirichlet_energies_1d(ell);
    // Q1 = S diag(e^{−β̃ε}) S, Q = Q1^{⊗d}
    let q1: Vec<f64> = (0..ell * ell)
        .map(|idx| {
            let (a, b) = (idx / ell, idx % ell);
            (0..ell).map(|m| st[a * ell + m] * st[b * ell + m] * (-beta_tilde * e1[m]).exp()).sum()
        })
        .collect();
    let mats: Vec<&[f64]> = vec![&q1; d];
    let mut q = vec![0.0; n * n];
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let c = kron_apply(&e, ell, &mats);
        for row in 0..n {
            q[row * n + col] = c[row];
        }
    }
    let modes = crate::dispersion::DirichletModes::new(spec, beta_tilde)?;
    let log_det: f64 = modes.eps.iter().map(|&e| (-(-beta_tilde * e).exp()).ln_1p()).sum();
    for i in 0..n {
        q[i * n + i] += 1.0;
    }
    Ok((log_det + ryser(&q, n).ln()).exp())
}

/// Permanent by Ryser's formula with Gray-code updates.
pub fn ryser(a: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut rowsum = vec![0.0; n];
    let mut total = crate::sum::CompensatedSum::new();
    let mut gray_prev = 0usize;
    for k in 1..(1usize << n) {
        let gray = k ^ (k >> 1);
        let j = (gray ^ gray_prev).trailing_zeros() as usize;
        let sign = if gray & (1 << j) != 0 { 1.0 } else { -1.0 };
        for (i, r) in rowsum.iter_mut().enumerate() {
            *r += sign * a[i * n + j];
        }
        gray_prev = gray;
        let prod: f64 = rowsum.iter().product();
        let parity = if (n - gray.count_ones() as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
        total.add(parity * prod);
    }
    total.value()
}

/// `sup_x ρ(x)`, the composed constant and the right-hand side of the moment bound
/// `|⟨H₀(1−P) + (1−P)H₀P⟩|/(Sℓ^d) ≤ C ⟨1−P⟩^{1/2} sup (ρ+1)^{3/2} ρ^{1/2}`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct MomentBound {
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub one_minus_p: f64,
    pub rho_sup: f64,
}

/// `C = 2 (M [N_p (8 + 24/S²) + 2 n_b m²])^{1/2} / ℓ^d` with `N_p` ordered pairs,
/// `n_b` boundary sites, `m` the largest boundary multiplicity and `M = 2N_p + n_b`.
///
/// Cauchy–Schwarz over the `M` summands of `H₀/S`, then per-summand moments
/// bounded through `|ρ(x,y)| ≤ sup ρ`.
pub fn moment_bound_constant(spec: &LatticeSpec, two_s: u32) -> Result<f64> {
    let s = two_s as f64 / 2.0;
    let np = 2.0 * spec.bonds().len() as f64;
    let mult = spec.boundary_multiplicity()?;
    let nb = mult.iter().filter(|&&m| m > 0).count() as f64;
    let m = *mult.iter().max().unwrap_or(&0) as f64;
    let big_m = 2.0 * np + nb;
    let inner = np * (8.0 + 24.0 / (s * s)) + 2.0 * nb * m * m;
    Ok(2.0 * (big_m * inner).sqrt() / spec.num_sites() as f64)
}

pub fn moment_bound_rhs(spec: &LatticeSpec, two_s: u32, one_minus_p: f64, rho_sup: f64) -> Result<f64> {
    let c = moment_bound_constant(spec, two_s)?;
    Ok(c * one_minus_p.max(0.0).sqrt() * (rho_sup + 1.0).powf(1.5) * rho_sup.sqrt())
}

/// Both sides of the moment bound; the left side by brute force in a truncated Fock
/// space with per-site cutoff `cutoff`, the right side with the exact `⟨1−P⟩` of that space.
pub fn projector_moment_bound(spec: &LatticeSpec, beta_tilde: f64, two_s: u32, cutoff: usize) -> Result<MomentBound> {
    ensure(cutoff > two_s as usize, || format!("cutoff {cutoff} must exceed 2S = {two_s}"))?;
    let basis = thermal_basis(spec, cutoff, beta_tilde, 1e-14)?;
    let td = kinetic_dirichlet(&basis)?;
    let gibbs = SectorSpectrum::new(&basis, &td, true)?;
    let s = two_s as f64 / 2.0;
    let h0 = td.add(&quartic_i(&basis, two_s), 1.0).scaled(s);
    let p = projector_diag(&basis, two_s);
    let pm = SparseMatrix::diagonal_matrix(&p);
    let q = SparseMatrix::diagonal_matrix(&p.iter().map(|v| 1.0 - v).collect::<Vec<_>>());
    let op = h0.matmul(&q).add(&q.matmul(&h0).matmul(&pm), 1.0);
    let lhs = (gibbs.expectation(beta_tilde, &op)? / (s * spec.num_sites() as f64)).abs();
    let one_minus_p = gibbs.expectation(beta_tilde, &q)?;
    let table = TwoPointTable::build(spec, beta_tilde)?;
    let rho_sup = table.max_density();
    let constant = moment_bound_constant(spec, two_s)?;
    let rhs = moment_bound_rhs(spec, two_s, one_minus_p, rho_sup)?;
    Ok(MomentBound { lhs, rhs, constant, one_minus_p, rho_sup })
}

/// `|⟨R⟩_P|/ℓ^d ≤ N_P (N_p/ℓ^d) (3ρ̄ + 1) ρ̄² / (2S²)`, `N_p` the number of ordered
/// pairs, from `A_{xy} ≤ (n_x² + n_y²)/8S²` and `⟨n(n−1)² + n n'²⟩ ≤ 4ρ̄²(3ρ̄+1)`.
pub fn remainder_bound_rhs(spec: &LatticeSpec, two_s: u32, n_p: f64, rho_sup: f64) -> f64 {
    let s = two_s as f64 / 2.0;
    let np = 2.0 * spec.bonds().len() as f64;
    n_p * np / spec.num_sites() as f64 * (3.0 * rho_sup + 1.0) * rho_sup * rho_sup / (2.0 * s * s)
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct RemainderBound {
    /// `⟨R⟩_P/ℓ^d` in the trial state.
    pub lhs: f64,
    pub rhs: f64,
    /// `N_P = 1/⟨P⟩` in the truncated space.
    pub n_p: f64,
    pub rho_sup: f64,
}

/// `⟨R⟩_P/ℓ^d` by brute force against its bound. `R` is exact on the `P`-subspace.
pub fn remainder_bound(spec: &LatticeSpec, beta_tilde: f64, two_s: u32, cutoff: usize) -> Result<RemainderBound> {
    ensure(cutoff > two_s as usize, || format!("cutoff {cutoff} must exceed 2S = {two_s}"))?;
    let basis = thermal_basis(spec, cutoff, beta_tilde, 1e-14)?;
    let td = kinetic_dirichlet(&basis)?;
    let gibbs = SectorSpectrum::new(&basis, &td, true)?;
    let p = projector_diag(&basis, two_s);
    let r = remainder_r(&basis, two_s);
    let p_mean = gibbs.expectation(beta_tilde, &SparseMatrix::diagonal_matrix(&p))?;
    let lhs = gibbs.masked_trace(beta_tilde, &r, &p)? / p_mean / spec.num_sites() as f64;
    let n_p = 1.0 / p_mean;
    let rho_sup = TwoPointTable::build(spec, beta_tilde)?.max_density();
    Ok(RemainderBound { lhs, rhs: remainder_bound_rhs(spec, two_s, n_p, rho_sup), n_p, rho_sup })
}

/// Rigorous upper bound on `⟨1−P⟩`: exact for `2S = 1` on small boxes, otherwise
/// the union bound `Σ_x (ρ(x)/(1+ρ(x)))^{2S+1}`.
pub fn one_minus_p_upper(
    spec: &LatticeSpec,
    table: &TwoPointTable,
    beta_tilde: f64,
    two_s: u32,
) -> Result<(f64, bool)> {
    if two_s == 1 && spec.num_sites() <= EXACT_P_MAX_SITES {
        let p = expectation_p_exact(spec, beta_tilde)?;
        return Ok(((1.0 - p).max(0.0), true));
    }
    Ok((one_minus_p_geometric(&table.densities(), two_s), false))
}

/// The Fock basis used by brute-force oracles in this module.
pub fn oracle_basis(spec: &LatticeSpec, cutoff: usize, beta_tilde: f64) -> Result<FockBasis> {
    thermal_basis(spec, cutoff, beta_tilde, 1e-14)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho_const(r: f64) -> impl Fn(usize, usize) -> f64 {
        move |x, y| if x == y { r } else { 0.3 * r }
    }

    #[test]
    fn elementary_contractions() {
        let rho = rho_const(0.7);
        let m = WickMonomial::normal(&[0], &[0]);
        assert!((wick_expectation_with(&m, &rho) - 0.7).abs() < 1e-15);
        let m = WickMonomial::normal(&[0, 0], &[0, 0]);
        assert!((wick_expectation_with(&m, &rho) - 2.0 * 0.49).abs() < 1e-15);
        let m = WickMonomial::new(vec![(0, false), (0, true)]);
        assert!((wick_expectation_with(&m, &rho) - 1.7).abs() < 1e-15);
        let m = WickMonomial::new(vec![(0, true), (1, false), (1, false)]);
        assert_eq!(wick_expectation_with(&m, &rho), 0.0);
    }

    #[test]
    fn matchings() {
        assert_eq!(matching_count(&WickMonomial::normal(&[0, 0, 0], &[0, 0, 0])), 6);
        let m = WickMonomial::normal(&[2, 2, 2], &[2, 2, 2]);
        let v = wick_expectation_with(&m, &|_, _| 1.0);
        assert_eq!(v, 6.0);
    }

    #[test]
    fn ryser_small() {
        assert_eq!(ryser(&[1.0, 2.0, 3.0, 4.0], 2), 10.0);
        let ones = vec![1.0; 16];
        assert!((ryser(&ones, 4) - 24.0).abs() < 1e-12);
    }
}

//! Second-order perturbation theory for the three-dimensional periodic magnon gas:
//! the normal-ordered sextic term `⟨J⟩`, its dominant `β̃^{−3}` piece, the two
//! connected diagrams with two quartic vertices, and the cancellation between the
//! dominant piece and the left diagram.
//!
//! Momenta live on the `(2π/ℓ)`-grid. The zero mode has `ε = 0` and an infinite
//! Bose factor, so every sum skips terms in which a zero momentum carries an
//! occupation factor `f` or `1 + f`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::sum::{par_sum_vec, CompensatedSum};

/// Largest `ℓ` accepted by the `ℓ⁹` triple sums without an explicit override.
pub const DIRECT_ELL_CAP: usize = 10;

/// Energy differences with `|Δ|` below this are treated as exactly degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Below `|β̃Δ|` of this size the bracket is evaluated by its Taylor series.
pub const TAYLOR_SEAM: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroModePolicy {
    Exclude,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    ExpectationJ,
    JRemainder,
    BiggestError,
    LeftDiagram,
    LeftF1F2,
    Combined,
    RightDiagram,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiagramValue {
    pub value: f64,
    pub beta_tilde: f64,
    pub ell: usize,
    pub zero_mode_policy: ZeroModePolicy,
    pub term: Term,
}

#[inline]
fn eps3(k: &[f64; 3]) -> f64 {
    k.iter()
        .map(|&x| {
            let s = (0.5 * x).sin();
            4.0 * s * s
        })
        .sum()
}

/// The symmetrized quartic vertex
/// `ε₄₋₂ − ε₄ − ε₁ + ε₄₋₁ − ε₂ + ε₃₋₂ + ε₃₋₁ − ε₃`.
pub fn vertex_nu(k1: &[f64; 3], k2: &[f64; 3], k3: &[f64; 3], k4: &[f64; 3]) -> f64 {
    let d = |a: &[f64; 3], b: &[f64; 3]| eps3(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]]);
    d(k4, k2) - eps3(k4) - eps3(k1) + d(k4, k1) - eps3(k2) + d(k3, k2) + d(k3, k1) - eps3(k3)
}

/// `B(Δ) = −β̃/Δ + (e^{β̃Δ} − 1)/Δ²`, an entire function of `Δ` with `B(0) = β̃²/2`.
pub fn bracket_b(beta_tilde: f64, delta: f64) -> f64 {
    let x = beta_tilde * delta;
    let b2 = beta_tilde * beta_tilde;
    if x.abs() < TAYLOR_SEAM {
        b2 * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x * (1.0 / 120.0 + x / 720.0))))
    } else {
        b2 * (x.exp_m1() - x) / (x * x)
    }
}

/// The bracket as written, without the series branch.
pub fn bracket_b_direct(beta_tilde: f64, delta: f64) -> f64 {
    -beta_tilde / delta + (beta_tilde * delta).exp_m1() / (delta * delta)
}

/// `e^{−β̃E₁₂} B(E₁₂ − E₃₄)` without overflow for large positive `β̃Δ`.
fn weighted_bracket(beta_tilde: f64, e12: f64, e34: f64) -> f64 {
    let delta = e12 - e34;
    let x = beta_tilde * delta;
    if x > 1.0 {
        let a = (-beta_tilde * e34).exp() - (-beta_tilde * e12).exp() * (1.0 + x);
        a / (delta * delta)
    } else {
        (-beta_tilde * e12).exp() * bracket_b(beta_tilde, delta)
    }
}

/// The periodic momentum grid `(2π/ℓ){0,…,ℓ−1}³`, first axis fastest.
#[derive(Debug)]
pub struct PeriodicGrid {
    ell: usize,
    force: bool,
    coords: Vec<[usize; 3]>,
    eps: Vec<f64>,
    cos: Vec<f64>,
    diff: OnceLock<Vec<u32>>,
}

impl PeriodicGrid {
    pub fn new(ell: usize) -> Result<Self> {
        ensure(ell >= 2, || format!("ell = {ell} must be at least 2"))?;
        ensure(ell <= 1024, || format!("ell = {ell} exceeds 1024"))?;
        let cos: Vec<f64> = (0..ell).map(|m| (2.0 * PI * m as f64 / ell as f64).cos()).collect();
        let n = ell * ell * ell;
        let mut coords = Vec::with_capacity(n);
        let mut eps = Vec::with_capacity(n);
        for i in 0..n {
            let c = [i % ell, (i / ell) % ell, i / (ell * ell)];
            eps.push(c.iter().map(|&m| 2.0 * (1.0 - cos[m])).sum());
            coords.push(c);
        }
        Ok(Self { ell, force: false, coords, eps, cos, diff: OnceLock::new() })
    }

    /// Lifts the [`DIRECT_ELL_CAP`] limit on the triple sums.
    pub fn with_force(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn momentum(&self, i: usize) -> [f64; 3] {
        let h = 2.0 * PI / self.ell as f64;
        self.coords[i].map(|m| h * m as f64)
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        let l = self.ell;
        c[0] % l + l * (c[1] % l) + l * l * (c[2] % l)
    }

    pub fn add(&self, i: usize, j: usize) -> usize {
        let (a, b) = (self.coords[i], self.coords[j]);
        self.index([a[0] + b[0], a[1] + b[1], a[2] + b[2]])
    }

    pub fn sub(&self, i: usize, j: usize) -> usize {
        let (a, b, l) = (self.coords[i], self.coords[j], self.ell);
        self.index([a[0] + l - b[0], a[1] + l - b[1], a[2] + l - b[2]])
    }

    pub fn neg(&self, i: usize) -> usize {
        self.sub(0, i)
    }

    /// `cos k_axis` of mode `i`.
    pub fn cos_axis(&self, i: usize, axis: usize) -> f64 {
        self.cos[self.coords[i][axis]]
    }

    /// `f(k) = 1/(e^{β̃ε(k)} − 1)` with the zero mode set to 0 (excluded).
    pub fn bose(&self, beta_tilde: f64) -> Vec<f64> {
        self.eps.iter().map(|&e| if e == 0.0 { 0.0 } else { 1.0 / (beta_tilde * e).exp_m1() }).collect()
    }

    fn require_direct(&self) -> Result<()> {
        if self.ell > DIRECT_ELL_CAP && !self.force {
            return Err(Error::InvalidParameter(format!(
                "ell = {} exceeds the cap {DIRECT_ELL_CAP} for triple momentum sums; force to override",
                self.ell
            )));
        }
        Ok(())
    }

    /// Table of `index(k_i − k_j)`, built on first use.
    fn diff(&self) -> &[u32] {
        self.diff.get_or_init(|| {
            let n = self.len();
            let mut t = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    t.push(self.sub(i, j) as u32);
                }
            }
            t
        })
    }

    /// `ν` for grid indices with `k₄ = k₁ + k₂ − k₃`: `2ε₁₋₃ + 2ε₂₋₃ − ε₁ − ε₂ − ε₃ − ε₄`.
    fn nu_idx(&self, diff: &[u32], i1: usize, i2: usize, i3: usize, i4: usize) -> f64 {
        let n = self.len();
        let e = &self.eps;
        2.0 * e[diff[i1 * n + i3] as usize] + 2.0 * e[diff[i2 * n + i3] as usize] - e[i1] - e[i2] - e[i3] - e[i4]
    }
}

fn check_inputs(beta_tilde: f64, two_s: u32) -> Result<()> {
    ensure(beta_tilde > 0.0 && beta_tilde.is_finite(), || format!("beta_tilde = {beta_tilde} must be positive"))?;
    ensure(two_s >= 1, || "2S must be at least 1".into())
}

fn value(grid: &PeriodicGrid, beta_tilde: f64, term: Term, v: f64) -> DiagramValue {
    DiagramValue { value: v, beta_tilde, ell: grid.ell, zero_mode_policy: ZeroModePolicy::Exclude, term }
}

fn s_squared(two_s: u32) -> f64 {
    let s = two_s as f64 / 2.0;
    s * s
}

/// `ρ = ℓ^{−3}Σ f` and `F_i = ℓ^{−3}Σ f cos k_i`.
fn one_body_moments(grid: &PeriodicGrid, f: &[f64]) -> (f64, [f64; 3]) {
    let n = grid.len() as f64;
    let rho: CompensatedSum = f.iter().copied().collect();
    let fi: [f64; 3] = std::array::from_fn(|a| {
        let s: CompensatedSum = f.iter().enumerate().map(|(i, v)| v * grid.cos_axis(i, a)).collect();
        s.value() / n
    });
    (rho.value() / n, fi)
}

/// `⟨J⟩/ℓ³ = (1/4S²)Σ_i[(ρ+ρ²)F_i − ℓ^{−9}Σ f₁f₂f₃ cos(k₁ᵢ − k₂ᵢ + k₃ᵢ)]`.
///
/// `f` is even, so the triple sum factorizes into `F_i³`.
pub fn expectation_j(grid: &PeriodicGrid, beta_tilde: f64, two_s: u32) -> Result<DiagramValue> {
    check_inputs(beta_tilde, two_s)?;
    let (rho, fi) = one_body_moments(grid, &grid.bose(beta_tilde));
    let v: f64 = fi.iter().map(|&x| (rho + rho * rho) * x - x * x * x).sum();
    Ok(value(grid, beta_tilde, Term::ExpectationJ, v / (4.0 * s_squared(two_s))))
}

/// [`expectation_j`] with the triple sum done by explicit loops.
pub fn expectation_j_direct(grid: &PeriodicGrid, beta_tilde: f64, two_s: u32) -> Result<DiagramValue> {
    check_inputs(beta_tilde, two_s)?;
    grid.require_direct()?;
    let f = grid.bose(beta_tilde);
    let n = grid.len();
    let h = 2.0 * PI / grid.ell as f64;
    let triple = par_sum_vec(n, 1, |i1, acc| {
        if f[i1] == 0.0 {
            return;
        }
        for i2 in 0..n {
            for i3 in 0..n {
                let w = f[i1] * f[i2] * f[i3];
                if w == 0.0 {
                    continue;
                }
                let (a, b, c) = (grid.coords[i1], grid.coords[i2], grid.coords[i3]);
                let s: f64 = (0..3).map(|ax| (h * (a[ax] as f64 - b[ax] as f64 + c[ax] as f64)).cos()).sum();
                acc[0].add(w * s);
            }
        }
    })[0];
    let nf = n as f64;
    let (rho, fi) = one_body_moments(grid, &f);
    let first: f64 = fi.iter().map(|&x| (rho + rho * rho) * x).sum();
    let v = (first - triple / (nf * nf * nf)) / (4.0 * s_squared(two_s));
    Ok(value(grid, beta_tilde, Term::ExpectationJ, v))
}

/// `(ρ/4S²) Σ_i F_i = (1/16S²ℓ⁶) Σ_{k₁,k₂} f₁f₂[12 − ε₁ − ε₂]`, of order `β̃^{−3}`.
pub fn biggest_error_term(grid: &PeriodicGrid, beta_tilde: f64, two_s: u32) -> Result<DiagramValue> {
    check_inputs(beta_tilde, two_s)?;
    let f = grid.bose(beta_tilde);
    let n = grid.len() as f64;
    let sf: CompensatedSum = f.iter().copied().collect();
    let se: CompensatedSum = f.iter().zip(&grid.eps).map(|(a, e)| a * e).collect();
    let (sf, se) = (sf.value(), se.value());
    let v = (12.0 * sf * sf - 2.0 * sf * se) / (16.0 * s_squared(two_s) * n * n);
    Ok(value(grid, beta_tilde, Term::BiggestError, v))
}

/// `⟨J⟩/ℓ³` minus [`biggest_error_term`]: `(1/4S²)Σ_i(ρ²F_i − F_i³)`, of order `β̃^{−11/2}`.
pub fn j_remainder(grid: &PeriodicGrid, beta_tilde: f64, two_s: u32) -> Result<DiagramValue> {
    check_inputs(beta_tilde, two_s)?;
    let (rho, fi) = one_body_moments(grid, &grid.bose(beta_tilde));
    let v: f64 = fi.iter().map(|&x| x * (rho - x) * (rho + x)).sum();
    Ok(value(grid, beta_tilde, Term::JRemainder, v / (4.0 * s_squared(two_s))))
}

/// Pieces of the left diagram, each with its prefactor, summed over
/// `k₁ + k₂ = k₃ + k₄` with all four momenta nonzero.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LeftParts {
    /// `−(1/16β̃S²ℓ⁹) Σ ν² B(Δ) f₁f₂(1+f₃)(1+f₄)`.
    pub total: f64,
    /// The `Δ = 0` part of `total`, where `B = β̃²/2`.
    pub degenerate: f64,
    pub nondegenerate: f64,
    /// The `(e^{β̃Δ} − 1)/Δ²` half of the bracket on `Δ ≠ 0`; odd under `(k₁,k₂) ↔ (k₃,k₄)`.
    pub antisymmetric: f64,
    /// `Σ|·|` of the summands of `antisymmetric`, its natural scale.
    pub antisymmetric_scale: f64,
    /// `(1/16S²ℓ⁹) Σ_{Δ≠0} ν²/Δ · f₁f₂`.
    pub reduced_f1f2: f64,
    /// `(1/16S²ℓ⁹) Σ_{Δ≠0} ν²/Δ · 2f₁f₂f₃`.
    pub reduced_f1f2f3: f64,
    /// `(1/16S²ℓ⁹) Σ_{Δ≠0} ν²/Δ · f₁f₂f₃f₄`; vanishes by antisymmetry.
    pub reduced_f1f2f3f4: f64,
}

pub fn left_diagram_parts(grid: &PeriodicGrid, beta_tilde: f64, two_s: u32) -> Result<LeftParts> {
    check_inputs(beta_tilde, two_s)?;
    grid.require_direct()?;
    let n = grid.len();
    let diff = grid.diff();
    let e = &grid.eps;
    let f = grid.bose(beta_tilde);
    // g = 1/(1 − e^{−β̃ε}) = 1 + f
    let g: Vec<f64> = f.iter().map(|v| 1.0 + v).collect();
    let boltz: Vec<f64> = e.iter().map(|&x| (-beta_tilde * x).exp()).collect();
    let s = par_sum_vec(n, 7, |i1, acc| {
        if i1 == 0 {
            return;
        }
        for i2 in 1..n {
            for i3 in 1..n {
                let i4 = diff[i1 * n + diff[i3 * n + i2] as usize] as usize;
                if i4 == 0 {
                    continue;
                }
                let nu = grid.nu_idx(diff, i1, i2, i3, i4);
                let nu2 = nu * nu;
                let (e12, e34) = (e[i1] + e[i2], e[i3] + e[i4]);
                let delta = e12 - e34;
                let gg = g[i1] * g[i2] * g[i3] * g[i4];
                let full = nu2 * weighted_bracket(beta_tilde, e12, e34) * gg;
                if delta.abs() < DEGENERACY_TOL {
                    acc[0].add(full);
                    acc[1].add(full);
                    continue;
                }
                acc[0].add(full);
                let anti = nu2 * (boltz[i3] * boltz[i4] - boltz[i1] * boltz[i2]) / (delta * delta) * gg;
                acc[2].add(anti);
                acc[3].add(anti.abs());
                let r = nu2 / delta * f[i1] * f[i2];
                acc[4].add(r);
                acc[5].add(2.0 * r * f[i3]);
                acc[6].add(r * f[i3] * f[i4]);
            }
        }
    });
    let n9 = (n as f64).powi(3);
    let pre = 1.0 / (16.0 * s_squared(two_s) * n9);
    let dm = -pre / beta_tilde;
    Ok(LeftParts {
        total: dm * s[0],
        degenerate: dm * s[1],
        nondegenerate: dm * (s[0] - s[1]),
        antisymmetric: dm * s[2],
        antisymmetric_scale: -dm * s[3],
        reduced_f1f2: pre * s[4],
        reduced_f1f2f3: pre * s[5],
        reduced_f1f2f3f4: pre * s[6],
    })
}

/// The full left diagram, degenerate denominators included through `B(Δ)`.
pub fn left_diagram(grid: &PeriodicGrid, beta_tilde: f64, two_s: u32) -> Result<DiagramValue> {
    let p = left_diagram_parts(grid, beta_tilde, two_s)?;
    Ok(value(grid, beta_tilde, Term::LeftDiagram, p.total))
}

/// The `f₁f₂` part of the left diagram as `β̃`-independent kernels over `(k₁,k₂)`:
/// `W = Σ_{k₃: Δ≠0} ν²/Δ` and `D = Σ_{k₃: Δ=0} ν²`, so that the part equals
/// `(1/16S²ℓ⁹) Σ f₁f₂ [W − (β̃/2) D]`. `k₃` and `k₄` carry no occupation factor
/// here and range over the whole grid.
#[derive(Debug)]
pub struct LeftKernel {
    ell: usize,
    w: Vec<f64>,
    dg: Vec<f64>,
    /// Largest relative residual of the `k₃`-sum identity over all `(k₁,k₂)`.
    pub identity_residual: f64,
}

impl LeftKernel {
    pub fn new(grid: &PeriodicGrid) -> Result<Self> {
        grid.require_direct()?;
        let n = grid.len();
        let diff = grid.diff();
        let e = &grid.eps;
        let mut w = vec![0.0; n * n];
        let mut dg = vec![0.0; n * n];
        let mut res = vec![0.0; n * n];
        let rows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = {
            use rayon::prelude::*;
            (0..n)
                .into_par_iter()
                .map(|i1| {
                    let mut wr = vec![0.0; n];
                    let mut dr = vec![0.0; n];
                    let mut rr = vec![0.0; n];
                    for i2 in 0..n {
                        let (mut sw, mut sd, mut id, mut scale) =
                            (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new(), 0.0);
                        for i3 in 0..n {
                            let i4 = diff[i1 * n + diff[i3 * n + i2] as usize] as usize;
                            let nu = grid.nu_idx(diff, i1, i2, i3, i4);
                            let delta = e[i1] + e[i2] - e[i3] - e[i4];
                            if delta.abs() < DEGENERACY_TOL {
                                sd.add(nu * nu);
                            } else {
                                sw.add(nu * nu / delta);
                            }
                            let (e13, e23) = (e[diff[i1 * n + i3] as usize], e[diff[i2 * n + i3] as usize]);
                            let t = [12.0, 3.0 * e[i3], 3.0 * e[i4], -4.0 * e23, -4.0 * e13];
                            for v in t {
                                id.add(v);
                                scale += v.abs();
                            }
                        }
                        wr[i2] = sw.value();
                        dr[i2] = sd.value();
                        rr[i2] = id.value().abs() / scale;
                    }
                    (wr, dr, rr)
                })
                .collect()
        };
        for (i1, (wr, dr, rr)) in rows.into_iter().enumerate() {
            w[i1 * n..(i1 + 1) * n].copy_from_slice(&wr);
            dg[i1 * n..(i1 + 1) * n].copy_from_slice(&dr);
            res[i1 * n..(i1 + 1) * n].copy_from_slice(&rr);
        }
        let identity_residual = res.iter().copied().fold(0.0, f64::max);
        Ok(Self { ell: grid.ell, w, dg, identity_residual })
    }

    /// The `f₁f₂` part at inverse temperature `β̃`, `O(ℓ⁶)`.
    pub fn f1f2(&self, grid: &PeriodicGrid, beta_tilde: f64, two_s: u32) -> Result<DiagramValue> {
        check_inputs(beta_tilde, two_s)?;
        ensure(grid.ell == self.ell, || "kernel built for a different grid".into())?;
        let n = grid.len();
        let f = grid.bose(beta_tilde);
        let s = crate::sum::par_sum(n, |i1| {
            if f[i1] == 0.0 {
                return 0.0;
            }
            let row: CompensatedSum =
                (1..n).map(|i2| f[i2] * (self.w[i1 * n + i2] - 0.5 * beta_tilde * self.dg[i1 * n + i2])).collect();
            f[i1] * row.value()
        });
        let v = s / (16.0 * s_squared(two_s) * (n as f64).powi(3));
        Ok(value(grid, beta_tilde, Term::LeftF1F2, v))
    }
}

/// Relative residual of `Σ_{k₃}[12 + 3ε₃ + 3ε₁₊₂₋₃ − 4ε₂₋₃ − 4ε₁₋₃]` for one `(k₁,k₂)`.
pub fn k3_identity_residual(grid: &PeriodicGrid, i1: usize, i2: usize) -> f64 {
    let e = &grid.eps;
    let (mut s, mut scale) = (CompensatedSum::new(), 0.0);
    for i3 in 0..grid.len() {
        let i4 = grid.sub(grid.add(i1, i2), i3);
        for v in [12.0, 3.0 * e[i3], 3.0 * e[i4], -4.0 * e[grid.sub(i2, i3)], -4.0 * e[grid.sub(i1, i3)]] {
            s.add(v);
            scale += v.abs();
        }
    }
    s.value().abs() / scale
}

/// `−(β̃/2S²ℓ⁹) Σ (ε₂₋₃ − ε₃ − ε₂)(ε₂₋₁ − ε₁ − ε₂) f₁f₂(1+f₂)f₃`.
///
/// Since `ε₂₋₃ − ε₃ − ε₂ = −2Σ_j[(1−cos k₂ⱼ)(1−cos k₃ⱼ) + sin k₂ⱼ sin k₃ⱼ]` and `f` is
/// even, the `k₁` and `k₃` sums both reduce to `G(k₂) = −2Σ_j(1−cos k₂ⱼ)A_j`
/// with `A_j = Σ_k f(k)(1 − cos k_j)`.
pub fn right_diagram(grid: &PeriodicGrid, beta_tilde: f64, two_s: u32) -> Result<DiagramValue> {
    check_inputs(beta_tilde, two_s)?;
    let f = grid.bose(beta_tilde);
    let n = grid.len();
    let a: [f64; 3] = std::array::from_fn(|ax| {
        let s: CompensatedSum = f.iter().enumerate().map(|(i, v)| v * (1.0 - grid.cos_axis(i, ax))).collect();
        s.value()
    });
    let s: CompensatedSum = (1..n)
        .map(|i2| {
            let gk: f64 = -2.0 * (0..3).map(|ax| (1.0 - grid.cos_axis(i2, ax)) * a[ax]).sum::<f64>();
            f[i2] * (1.0 + f[i2]) * gk * gk
        })
        .collect();
    let v = -beta_tilde * s.value() / (2.0 * s_squared(two_s) * (n as f64).powi(3));
    Ok(value(grid, beta_tilde, Term::RightDiagram, v))
}

/// [`right_diagram`] by explicit triple loops.
pub fn right_diagram_direct(grid: &PeriodicGrid, beta_tilde: f64, two_s: u32) -> Result<DiagramValue> {
    check_inputs(beta_tilde, two_s)?;
    grid.require_direct()?;
    let n = grid.len();
    let diff = grid.diff();
    let e = &grid.eps;
    let f = grid.bose(beta_tilde);
    let s = par_sum_vec(n, 1, |i2, acc| {
        if i2 == 0 {
            return;
        }
        let w2 = f[i2] * (1.0 + f[i2]);
        for i1 in 1..n {
            let a = e[diff[i2 * n + i1] as usize] - e[i1] - e[i2];
            for i3 in 1..n {
                let b = e[diff[i2 * n + i3] as usize] - e[i3] - e[i2];
                acc[0].add(a * b * f[i1] * w2 * f[i3]);
            }
        }
    })[0];
    let v = -beta_tilde * s / (2.0 * s_squared(two_s) * (n as f64).powi(3));
    Ok(value(grid, beta_tilde, Term::RightDiagram, v))
}

/// Least-squares line through `(log x, log |y|)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PowerLaw {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerLaw> {
    ensure(x.len() == y.len() && x.len() >= 2, || "need at least two points".into())?;
    ensure(x.iter().all(|&v| v > 0.0), || "abscissae must be positive".into())?;
    ensure(y.iter().all(|&v| v != 0.0 && v.is_finite()), || "values must be finite and nonzero".into())?;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    ensure(sxx > 0.0, || "abscissae must be distinct".into())?;
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(PowerLaw { slope, intercept: my - slope * mx, r_squared })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanRow {
    pub beta_tilde: f64,
    pub biggest_error: f64,
    pub left_f1f2: f64,
    pub combined: f64,
    pub right_diagram: f64,
    pub j_remainder: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanSlopes {
    pub biggest_error: PowerLaw,
    pub left_f1f2: PowerLaw,
    pub combined: PowerLaw,
    pub right_diagram: PowerLaw,
    pub j_remainder: PowerLaw,
}

#[derive(Clone, Debug, Serialize)]
pub struct CancellationScan {
    pub ell: usize,
    pub two_s: u32,
    pub zero_mode_policy: ZeroModePolicy,
    pub rows: Vec<ScanRow>,
    /// Fitted only with at least four temperatures.
    pub slopes: Option<ScanSlopes>,
    pub k3_identity_max_residual: f64,
}

pub const MIN_FIT_POINTS: usize = 4;

/// Dominant first-order term, left-diagram `f₁f₂` part and their sum over a list of `β̃`.
pub fn cancellation_scan(grid: &PeriodicGrid, two_s: u32, betas: &[f64]) -> Result<CancellationScan> {
    ensure(!betas.is_empty(), || "empty beta_tilde list".into())?;
    let kernel = LeftKernel::new(grid)?;
    let mut rows = Vec::with_capacity(betas.len());
    for &bt in betas {
        let big = biggest_error_term(grid, bt, two_s)?.value;
        let left = kernel.f1f2(grid, bt, two_s)?.value;
        rows.push(ScanRow {
            beta_tilde: bt,
            biggest_error: big,
            left_f1f2: left,
            combined: big + left,
            right_diagram: right_diagram(grid, bt, two_s)?.value,
            j_remainder: j_remainder(grid, bt, two_s)?.value,
        });
    }
    let slopes = if rows.len() >= MIN_FIT_POINTS {
        let fit = |sel: fn(&ScanRow) -> f64| {
            let y: Vec<f64> = rows.iter().map(sel).collect();
            fit_power_law(betas, &y)
        };
        Some(ScanSlopes {
            biggest_error: fit(|r| r.biggest_error)?,
            left_f1f2: fit(|r| r.left_f1f2)?,
            combined: fit(|r| r.combined)?,
            right_diagram: fit(|r| r.right_diagram)?,
            j_remainder: fit(|r| r.j_remainder)?,
        })
    } else {
        None
    };
    Ok(CancellationScan {
        ell: grid.ell,
        two_s,
        zero_mode_policy: ZeroModePolicy::Exclude,
        rows,
        slopes,
        k3_identity_max_residual: kernel.identity_residual,
    })
}

impl CancellationScan {
    pub fn to_csv(&self) -> String {
        use crate::format::sci;
        let mut out = String::from("beta_tilde,biggest_error,left_f1f2,combined,right_diagram,j_remainder\n");
        for r in &self.rows {
            let cols = [r.beta_tilde, r.biggest_error, r.left_f1f2, r.combined, r.right_diagram, r.j_remainder];
            out.push_str(&cols.map(sci).join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_arithmetic() {
        let g = PeriodicGrid::new(4).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.add(i, g.neg(i)), 0);
            for j in [0, 5, 17, 63] {
                assert_eq!(g.sub(g.add(i, j), j), i);
            }
        }
        assert_eq!(g.eps()[0], 0.0);
        assert_eq!(g.bose(2.0)[0], 0.0);
    }

    #[test]
    fn bracket_limits() {
        assert!((bracket_b(3.0, 0.0) - 4.5).abs() < 1e-15);
        let (bt, d) = (2.0, 0.7);
        assert!((bracket_b(bt, d) / bracket_b_direct(bt, d) - 1.0).abs() < 1e-14);
        // e^{−β̃E₁₂}B stays finite when β̃Δ is far beyond the exp range
        let w = weighted_bracket(50.0, 24.0, 0.1);
        assert!(w.is_finite() && w > 0.0);
    }

    #[test]
    fn cap_is_enforced() {
        let g = PeriodicGrid::new(12).unwrap();
        assert!(left_diagram(&g, 4.0, 2).is_err());
        assert!(right_diagram(&g, 4.0, 2).is_ok());
    }

    #[test]
    fn power_law_fit() {
        let x = [4.0, 8.0, 16.0];
        let y: Vec<f64> = x.iter().map(|b: &f64| -3.0 * b.powf(-2.5)).collect();
        let p = fit_power_law(&x, &y).unwrap();
        assert!((p.slope + 2.5).abs() < 1e-12 && (p.r_squared - 1.0).abs() < 1e-12);
    }
}

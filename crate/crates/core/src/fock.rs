//! Truncated bosonic Fock space on a finite lattice, the Holstein–Primakoff
//! Hamiltonian and its expansion into kinetic, quartic and sextic pieces, and
//! a number-sector Gibbs oracle.

use std::collections::{BTreeMap, HashMap};

use crate::error::{ensure, Error, Result};
use crate::lattice::{Boundary, LatticeSpec, Site};
use crate::linalg::{eigh, eigvalsh, log_partition, OperatorMatrix, SparseMatrix, DENSE_CAP};

/// Largest basis dimension that will be enumerated.
pub const BASIS_CAP: usize = 1 << 20;

/// Occupation basis with at most `n_max` bosons per site and, optionally, at most
/// `total_cap` bosons in total. States are ordered by their mixed-radix code
/// `Σ_x n_x (n_max+1)^x` (site 0 least significant).
#[derive(Clone, Debug)]
pub struct FockBasis {
    spec: LatticeSpec,
    n_max: usize,
    total_cap: Option<usize>,
    sites: usize,
    occ: Vec<u8>,
    lookup: HashMap<u128, usize>,
}

impl FockBasis {
    pub fn build(spec: &LatticeSpec, n_max: usize) -> Result<Self> {
        Self::build_capped(spec, n_max, None)
    }

    /// Basis restricted to total boson number `≤ total_cap`.
    pub fn with_total_cap(spec: &LatticeSpec, n_max: usize, total_cap: usize) -> Result<Self> {
        Self::build_capped(spec, n_max, Some(total_cap))
    }

    fn build_capped(spec: &LatticeSpec, n_max: usize, total_cap: Option<usize>) -> Result<Self> {
        ensure((1..=255).contains(&n_max), || format!("n_max = {n_max} must be in 1..=255"))?;
        let sites = spec.num_sites();
        let radix = (n_max + 1) as u128;
        if (sites as f64) * ((n_max + 1) as f64).log2() > 126.0 {
            return Err(Error::DimensionCap { dim: usize::MAX, cap: BASIS_CAP });
        }
        let dim = count_states(sites, n_max, total_cap.unwrap_or(usize::MAX));
        if dim > BASIS_CAP as u128 {
            return Err(Error::DimensionCap { dim: dim.min(usize::MAX as u128) as usize, cap: BASIS_CAP });
        }
        let mut states: Vec<(u128, Vec<u8>)> = Vec::with_capacity(dim as usize);
        let mut cur = vec![0u8; sites];
        enumerate(&mut cur, sites, n_max, total_cap.unwrap_or(usize::MAX), &mut |s| {
            let code = s.iter().rev().fold(0u128, |acc, &n| acc * radix + n as u128);
            states.push((code, s.to_vec()));
        });
        states.sort_by_key(|(c, _)| *c);
        let mut occ = Vec::with_capacity(states.len() * sites);
        let mut lookup = HashMap::with_capacity(states.len());
        for (i, (code, s)) in states.into_iter().enumerate() {
            occ.extend_from_slice(&s);
            lookup.insert(code, i);
        }
        Ok(Self { spec: *spec, n_max, total_cap, sites, occ, lookup })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn total_cap(&self) -> Option<usize> {
        self.total_cap
    }

    pub fn num_sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.occ.len() / self.sites
    }

    pub fn occupations(&self, i: usize) -> &[u8] {
        &self.occ[i * self.sites..(i + 1) * self.sites]
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        if occ.len() != self.sites || occ.iter().any(|&n| n as usize > self.n_max) {
            return None;
        }
        let radix = (self.n_max + 1) as u128;
        let code = occ.iter().rev().fold(0u128, |acc, &n| acc * radix + n as u128);
        self.lookup.get(&code).copied()
    }

    pub fn total_number(&self, i: usize) -> usize {
        self.occupations(i).iter().map(|&n| n as usize).sum()
    }

    /// Basis indices grouped by total boson number, in ascending order.
    pub fn sectors(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.dim() {
            out.entry(self.total_number(i)).or_default().push(i);
        }
        out
    }

    /// Diagonal operator from a function of the occupation tuple.
    pub fn diagonal(&self, f: impl Fn(&[u8]) -> f64) -> SparseMatrix {
        let d: Vec<f64> = (0..self.dim()).map(|i| f(self.occupations(i))).collect();
        SparseMatrix::diagonal_matrix(&d)
    }
}

fn count_states(sites: usize, n_max: usize, cap: usize) -> u128 {
    // ways[n] = number of tuples over the sites seen so far with total n
    let cap = cap.min(sites * n_max);
    let mut ways = vec![0u128; cap + 1];
    ways[0] = 1;
    for _ in 0..sites {
        let mut next = vec![0u128; cap + 1];
        for (t, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for n in 0..=n_max {
                if t + n > cap {
                    break;
                }
                next[t + n] = next[t + n].saturating_add(w);
            }
        }
        ways = next;
    }
    ways.iter().fold(0u128, |a, &b| a.saturating_add(b))
}

fn enumerate(cur: &mut [u8], k: usize, n_max: usize, budget: usize, out: &mut impl FnMut(&[u8])) {
    if k == 0 {
        out(cur);
        return;
    }
    for n in 0..=n_max.min(budget) {
        cur[k - 1] = n as u8;
        enumerate(cur, k - 1, n_max, budget - n, out);
    }
    cur[k - 1] = 0;
}

/// A creation or annihilation operator on a site index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// Product of ladder operators, applied right to left.
pub type Word = Vec<Ladder>;

/// Applies a word to an occupation tuple in place and returns the amplitude.
/// Raising a site above `n_max` annihilates the state.
pub fn apply_word(occ: &mut [u8], word: &[Ladder], n_max: usize) -> f64 {
    let mut amp = 1.0;
    for op in word.iter().rev() {
        match *op {
            Ladder::Create(x) => {
                let n = occ[x] as usize;
                if n >= n_max {
                    return 0.0;
                }
                amp *= ((n + 1) as f64).sqrt();
                occ[x] += 1;
            }
            Ladder::Annihilate(x) => {
                let n = occ[x] as usize;
                if n == 0 {
                    return 0.0;
                }
                amp *= (n as f64).sqrt();
                occ[x] -= 1;
            }
        }
    }
    amp
}

/// `Σ_t c_t W_t` as a sparse matrix. Images outside the basis (total cap) are dropped.
pub fn build_operator(basis: &FockBasis, terms: &[(f64, Word)]) -> SparseMatrix {
    let dim = basis.dim();
    let mut trips = Vec::new();
    let mut buf = vec![0u8; basis.num_sites()];
    for j in 0..dim {
        for (c, w) in terms {
            buf.copy_from_slice(basis.occupations(j));
            let amp = apply_word(&mut buf, w, basis.n_max());
            if amp == 0.0 {
                continue;
            }
            if let Some(i) = basis.index_of(&buf) {
                trips.push((i, j, c * amp));
            }
        }
    }
    SparseMatrix::from_triplets(dim, dim, trips)
}

use Ladder::{Annihilate as A, Create as C};

/// `(a*_x, a_x, n_x)`.
pub fn ladder_matrices(basis: &FockBasis, x: &Site) -> Result<(SparseMatrix, SparseMatrix, SparseMatrix)> {
    let i = basis.spec().index_of(x)?;
    Ok((
        build_operator(basis, &[(1.0, vec![C(i)])]),
        build_operator(basis, &[(1.0, vec![A(i)])]),
        basis.diagonal(|o| o[i] as f64),
    ))
}

/// Total number operator.
pub fn number_operator(basis: &FockBasis) -> SparseMatrix {
    basis.diagonal(|o| o.iter().map(|&n| n as f64).sum())
}

fn bonds(basis: &FockBasis) -> Vec<(usize, usize)> {
    basis.spec().bonds()
}

fn ordered_pairs(basis: &FockBasis) -> Vec<(usize, usize)> {
    bonds(basis).into_iter().flat_map(|(x, y)| [(x, y), (y, x)]).collect()
}

/// `T = Σ_⟨xy⟩ (a*_x − a*_y)(a_x − a_y)`.
pub fn kinetic(basis: &FockBasis) -> SparseMatrix {
    let mut terms = Vec::new();
    for (x, y) in bonds(basis) {
        terms.push((1.0, vec![C(x), A(x)]));
        terms.push((1.0, vec![C(y), A(y)]));
        terms.push((-1.0, vec![C(x), A(y)]));
        terms.push((-1.0, vec![C(y), A(x)]));
    }
    build_operator(basis, &terms)
}

/// `T^D = T + Σ_x m_x n_x`, `m_x` the number of missing neighbours.
pub fn kinetic_dirichlet(basis: &FockBasis) -> Result<SparseMatrix> {
    let m = basis.spec().boundary_multiplicity()?;
    let b = basis.diagonal(|o| o.iter().zip(&m).map(|(&n, &mx)| (n as usize * mx) as f64).sum());
    Ok(kinetic(basis).add(&b, 1.0))
}

/// Quartic term `(1/4S) Σ_⟨xy⟩ (a*_x a*_x a_x a_y + a*_x a*_y a_y a_y + h.c. − 4 a*_x a*_y a_x a_y)`.
pub fn quartic_i(basis: &FockBasis, two_s: u32) -> SparseMatrix {
    let c = 1.0 / (2.0 * two_s as f64);
    let mut terms = Vec::new();
    for (x, y) in bonds(basis) {
        terms.push((c, vec![C(x), C(x), A(x), A(y)]));
        terms.push((c, vec![C(x), C(y), A(y), A(y)]));
        terms.push((c, vec![C(y), C(x), A(x), A(x)]));
        terms.push((c, vec![C(y), C(y), A(y), A(x)]));
        terms.push((-4.0 * c, vec![C(x), C(y), A(x), A(y)]));
    }
    build_operator(basis, &terms)
}

/// Sextic term `(1/32S²) Σ_(x,y)` over ordered pairs, in normal order.
pub fn sextic_j(basis: &FockBasis, two_s: u32) -> SparseMatrix {
    let s = two_s as f64 / 2.0;
    let c = 1.0 / (32.0 * s * s);
    let mut terms = Vec::new();
    for (x, y) in ordered_pairs(basis) {
        terms.push((c, vec![C(x), C(y), C(y), A(y), A(y), A(y)]));
        terms.push((c, vec![C(x), C(y), A(y), A(y)]));
        terms.push((-2.0 * c, vec![C(x), C(x), C(y), A(x), A(y), A(y)]));
        terms.push((c, vec![C(x), C(x), C(x), A(x), A(x), A(y)]));
        terms.push((c, vec![C(x), C(x), A(x), A(y)]));
    }
    build_operator(basis, &terms)
}

/// `A_{xy} = 1 − n_x/4S − n_y/4S − √(1 − n_x/2S) √(1 − n_y/2S)`.
pub fn a_xy(n_x: usize, n_y: usize, two_s: u32) -> f64 {
    let ts = two_s as f64;
    let tx = n_x as f64 / ts;
    let ty = n_y as f64 / ts;
    1.0 - 0.5 * (tx + ty) - ((1.0 - tx) * (1.0 - ty)).sqrt()
}

/// Hopping with a diagonal weight `g(n_x, n_y)` evaluated between `a*_x` and `a_y`:
/// `Σ_(x,y) a*_x g(n_x, n_y) a_y`. Weights are only evaluated for occupations `≤ 2S`;
/// matrix elements leaving that range are dropped.
fn weighted_hopping(basis: &FockBasis, two_s: u32, g: impl Fn(usize, usize) -> f64) -> SparseMatrix {
    let dim = basis.dim();
    let ts = two_s as usize;
    let mut trips = Vec::new();
    let mut buf = vec![0u8; basis.num_sites()];
    for j in 0..dim {
        for (x, y) in ordered_pairs(basis) {
            buf.copy_from_slice(basis.occupations(j));
            let ny = buf[y] as usize;
            if ny == 0 {
                continue;
            }
            let mut amp = (ny as f64).sqrt();
            buf[y] -= 1;
            let nx = buf[x] as usize;
            if nx >= basis.n_max() || nx > ts || ny - 1 > ts {
                continue;
            }
            amp *= g(nx, ny - 1) * ((nx + 1) as f64).sqrt();
            buf[x] += 1;
            if amp == 0.0 {
                continue;
            }
            if let Some(i) = basis.index_of(&buf) {
                trips.push((i, j, amp));
            }
        }
    }
    SparseMatrix::from_triplets(dim, dim, trips)
}

/// Holstein–Primakoff Hamiltonian
/// `S Σ_⟨xy⟩ (−a*_x √(1−n_x/2S) √(1−n_y/2S) a_y − h.c. + n_x + n_y − n_x n_y/S)`.
pub fn hp_hamiltonian(basis: &FockBasis, two_s: u32) -> Result<SparseMatrix> {
    ensure(basis.n_max() <= two_s as usize, || format!("n_max = {} exceeds 2S = {two_s}", basis.n_max()))?;
    let ts = two_s as f64;
    let s = ts / 2.0;
    let hop = weighted_hopping(basis, two_s, |nx, ny| -((1.0 - nx as f64 / ts) * (1.0 - ny as f64 / ts)).sqrt());
    let b = bonds(basis);
    let diag = basis.diagonal(|o| {
        b.iter()
            .map(|&(x, y)| {
                let (nx, ny) = (o[x] as f64, o[y] as f64);
                nx + ny - nx * ny / s
            })
            .sum()
    });
    Ok(hop.add(&diag, 1.0).scaled(s))
}

/// `H^D = H + S Σ_x m_x n_x` for a Dirichlet box.
pub fn hp_dirichlet_hamiltonian(basis: &FockBasis, two_s: u32) -> Result<SparseMatrix> {
    let h = hp_hamiltonian(basis, two_s)?;
    let m = basis.spec().boundary_multiplicity()?;
    let s = two_s as f64 / 2.0;
    let b = basis.diagonal(|o| s * o.iter().zip(&m).map(|(&n, &mx)| (n as usize * mx) as f64).sum::<f64>());
    Ok(h.add(&b, 1.0))
}

/// `R = Σ_(x,y) a*_x A_{xy} a_y`, the exact remainder `H/S − T − I` on the
/// subspace with at most `2S` bosons per site.
pub fn remainder_r(basis: &FockBasis, two_s: u32) -> SparseMatrix {
    weighted_hopping(basis, two_s, |nx, ny| a_xy(nx, ny, two_s))
}

#[derive(Clone, Debug)]
pub struct ExpansionTerms {
    pub t: SparseMatrix,
    pub t_d: Option<SparseMatrix>,
    pub i: SparseMatrix,
    pub j: SparseMatrix,
    r_tilde: Option<SparseMatrix>,
}

impl ExpansionTerms {
    /// `R̃ = H/S − T − I − J`, available when `n_max ≤ 2S`.
    pub fn r_tilde(&self) -> Result<&SparseMatrix> {
        self.r_tilde.as_ref().ok_or_else(|| Error::InvalidParameter("R̃ needs n_max ≤ 2S".into()))
    }
}

/// `T`, `T^D` (Dirichlet boxes only), `I`, `J` and, when `n_max ≤ 2S`, `R̃`.
pub fn expansion_terms(basis: &FockBasis, two_s: u32) -> Result<ExpansionTerms> {
    let t = kinetic(basis);
    let t_d = match basis.spec().boundary() {
        Boundary::Dirichlet => Some(kinetic_dirichlet(basis)?),
        Boundary::Periodic => None,
    };
    let i = quartic_i(basis, two_s);
    let j = sextic_j(basis, two_s);
    let r_tilde = if basis.n_max() <= two_s as usize {
        let s = two_s as f64 / 2.0;
        let h = hp_hamiltonian(basis, two_s)?;
        Some(h.scaled(1.0 / s).add(&t, -1.0).add(&i, -1.0).add(&j, -1.0))
    } else {
        None
    };
    Ok(ExpansionTerms { t, t_d, i, j, r_tilde })
}

/// `P = Π_x 1(n_x ≤ 2S)` as a 0/1 vector over the basis.
pub fn projector_diag(basis: &FockBasis, two_s: u32) -> Vec<f64> {
    (0..basis.dim()).map(|i| if basis.occupations(i).iter().all(|&n| n as u32 <= two_s) { 1.0 } else { 0.0 }).collect()
}

pub fn projector_p(basis: &FockBasis, two_s: u32) -> SparseMatrix {
    SparseMatrix::diagonal_matrix(&projector_diag(basis, two_s))
}

/// Eigensystem of a number-conserving operator, one dense block per sector.
#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub blocks: Vec<SectorBlock>,
}

#[derive(Clone, Debug)]
pub struct SectorBlock {
    pub number: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub vectors: Option<Vec<Vec<f64>>>,
}

impl SectorSpectrum {
    /// Diagonalizes `h` sector by sector. Fails if `h` couples different sectors.
    pub fn new(basis: &FockBasis, h: &SparseMatrix, want_vectors: bool) -> Result<Self> {
        let mut blocks = Vec::new();
        for (number, indices) in basis.sectors() {
            let leak = h.leakage(&indices);
            if leak > 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "operator does not conserve particle number (leak {leak:.3e})"
                )));
            }
            if indices.len() > DENSE_CAP {
                return Err(Error::DimensionCap { dim: indices.len(), cap: DENSE_CAP });
            }
            let m = h.block(&indices)?;
            let (values, vectors) = if want_vectors {
                let e = eigh(&m)?;
                (e.values, Some(e.vectors))
            } else {
                (eigvalsh(&m)?, None)
            };
            blocks.push(SectorBlock { number, indices, values, vectors });
        }
        Ok(Self { blocks })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn log_partition(&self, beta: f64) -> f64 {
        log_partition(&self.eigenvalues(), beta)
    }

    /// `tr(A e^{−βH})/tr e^{−βH}` using the sector-diagonal part of `A`
    /// (off-sector parts have zero expectation).
    pub fn expectation(&self, beta: f64, a: &SparseMatrix) -> Result<f64> {
        self.weighted_trace(beta, a, None)
    }

    /// `tr(Q A Q e^{−βH})/tr(Q e^{−βH})` for a diagonal 0/1 mask `Q` commuting with `H`
    /// is not generally available; this computes `tr(Q A Q e^{−βH})/tr e^{−βH}`.
    pub fn masked_trace(&self, beta: f64, a: &SparseMatrix, mask: &[f64]) -> Result<f64> {
        self.weighted_trace(beta, a, Some(mask))
    }

    fn weighted_trace(&self, beta: f64, a: &SparseMatrix, mask: Option<&[f64]>) -> Result<f64> {
        let lz = self.log_partition(beta);
        let mut acc = crate::sum::CompensatedSum::new();
        for b in &self.blocks {
            let vecs = b
                .vectors
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("sector spectrum was built without eigenvectors".into()))?;
            let pos: HashMap<usize, usize> = b.indices.iter().enumerate().map(|(l, &g)| (g, l)).collect();
            let mut local = Vec::new();
            for (l, &g) in b.indices.iter().enumerate() {
                let mg = mask.map_or(1.0, |m| m[g]);
                if mg == 0.0 {
                    continue;
                }
                for (col, v) in a.row(g) {
                    if let Some(&lc) = pos.get(&col) {
                        let mc = mask.map_or(1.0, |m| m[col]);
                        if mc != 0.0 {
                            local.push((l, lc, v * mg * mc));
                        }
                    }
                }
            }
            for (e, v) in b.values.iter().zip(vecs) {
                let w = (-beta * e - lz).exp();
                if w == 0.0 {
                    continue;
                }
                let q: f64 = local.iter().map(|&(i, j, x)| x * v[i] * v[j]).sum();
                acc.add(w * q);
            }
        }
        Ok(acc.value())
    }

    /// Dense `e^{−βH}` restricted by a diagonal mask and normalized to unit trace.
    pub fn masked_gibbs_state(&self, dim: usize, beta: f64, mask: &[f64]) -> Result<OperatorMatrix> {
        if dim > DENSE_CAP {
            return Err(Error::DimensionCap { dim, cap: DENSE_CAP });
        }
        let lz = self.log_partition(beta);
        let mut g = OperatorMatrix::zeros(dim);
        for b in &self.blocks {
            let vecs = b
                .vectors
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("sector spectrum was built without eigenvectors".into()))?;
            for (e, v) in b.values.iter().zip(vecs) {
                let w = (-beta * e - lz).exp();
                if w == 0.0 {
                    continue;
                }
                for (li, &gi) in b.indices.iter().enumerate() {
                    if mask[gi] == 0.0 {
                        continue;
                    }
                    for (lj, &gj) in b.indices.iter().enumerate() {
                        if mask[gj] == 0.0 {
                            continue;
                        }
                        let cur = g.get(gi, gj);
                        g.set(gi, gj, cur + w * v[li] * v[lj]);
                    }
                }
            }
        }
        let tr = g.trace();
        if !(tr > 0.0) {
            return Err(Error::Numerical("masked Gibbs state has zero trace".into()));
        }
        Ok(g.scaled(1.0 / tr))
    }
}

/// `Γ = P e^{−β̃T^D} P / tr(e^{−β̃T^D} P)` as a dense matrix.
pub fn trial_state(basis: &FockBasis, two_s: u32, beta_tilde: f64) -> Result<OperatorMatrix> {
    ensure(beta_tilde > 0.0, || format!("beta_tilde = {beta_tilde} must be positive"))?;
    let td = kinetic_dirichlet(basis)?;
    let spec = SectorSpectrum::new(basis, &td, true)?;
    spec.masked_gibbs_state(basis.dim(), beta_tilde, &projector_diag(basis, two_s))
}

/// Smallest total-number cap for which the neglected Gibbs weight of a quadratic
/// Hamiltonian with gap `gap` is below `tol`, using `Z_N ≤ dim_N e^{−β gap N}` and `Z ≥ 1`.
pub fn number_cap_for(sites: usize, n_max: usize, beta_gap: f64, tol: f64) -> usize {
    let mut tail = 0.0;
    let max_n = sites * n_max;
    let mut cap = max_n;
    for n in (0..=max_n).rev() {
        let dim_n = (count_states(sites, n_max, n) - if n > 0 { count_states(sites, n_max, n - 1) } else { 0 }) as f64;
        tail += dim_n * (-beta_gap * n as f64).exp();
        if tail > tol {
            cap = n;
            break;
        }
    }
    cap.min(max_n)
}

/// Basis with per-site cutoff `n_max` and a total-number cap chosen so that the
/// neglected weight of `e^{−β̃T^D}` is below `tol` (see [`number_cap_for`]).
pub fn thermal_basis(spec: &LatticeSpec, n_max: usize, beta_tilde: f64, tol: f64) -> Result<FockBasis> {
    ensure(beta_tilde > 0.0, || format!("beta_tilde = {beta_tilde} must be positive"))?;
    let gap = match spec.boundary() {
        Boundary::Dirichlet => spec.d() as f64 * 2.0 * (1.0 - (std::f64::consts::PI / (spec.ell() as f64 + 1.0)).cos()),
        Boundary::Periodic => 0.0,
    };
    ensure(gap > 0.0, || "thermal basis needs a gapped (Dirichlet) kinetic term".into())?;
    let cap = number_cap_for(spec.num_sites(), n_max, beta_tilde * gap, tol);
    FockBasis::with_total_cap(spec, n_max, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;

    #[test]
    fn basis_dimensions() {
        let one = LatticeSpec::dirichlet(1, 1).unwrap();
        assert_eq!(FockBasis::build(&one, 2).unwrap().dim(), 3);
        let four = LatticeSpec::dirichlet(1, 4).unwrap();
        assert_eq!(FockBasis::build(&four, 1).unwrap().dim(), 16);
        let sq = LatticeSpec::dirichlet(2, 2).unwrap();
        assert_eq!(FockBasis::build(&sq, 3).unwrap().dim(), 256);
        let big = LatticeSpec::dirichlet(2, 5).unwrap();
        assert!(matches!(FockBasis::build(&big, 3), Err(Error::DimensionCap { .. })));
        assert_eq!(FockBasis::with_total_cap(&sq, 3, 2).unwrap().dim(), 15);
    }

    #[test]
    fn mixed_radix_order() {
        let s = LatticeSpec::dirichlet(1, 2).unwrap();
        let b = FockBasis::build(&s, 2).unwrap();
        assert_eq!(b.occupations(1), &[1, 0]);
        assert_eq!(b.occupations(3), &[0, 1]);
        for i in 0..b.dim() {
            assert_eq!(b.index_of(b.occupations(i)), Some(i));
        }
    }

    #[test]
    fn ladder_elements() {
        let s = LatticeSpec::dirichlet(1, 1).unwrap();
        let b = FockBasis::build(&s, 4).unwrap();
        let (ad, a, n) = ladder_matrices(&b, &Site(vec![1])).unwrap();
        assert_eq!(ad.get(1, 0), 1.0);
        for k in 0..=4 {
            assert_eq!(n.get(k, k), k as f64);
        }
        assert!(ad.matmul(&a).max_abs_diff(&n) < 1e-14);
        let comm = a.matmul(&ad).add(&ad.matmul(&a), -1.0);
        for k in 0..=4 {
            let want = if k < 4 { 1.0 } else { -4.0 };
            assert!((comm.get(k, k) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn projector_examples() {
        let s = LatticeSpec::dirichlet(1, 1).unwrap();
        let b = FockBasis::build(&s, 3).unwrap();
        assert_eq!(projector_diag(&b, 1), vec![1.0, 1.0, 0.0, 0.0]);
        let b = FockBasis::build(&s, 2).unwrap();
        assert_eq!(projector_diag(&b, 2), vec![1.0; 3]);
    }

    #[test]
    fn a_xy_is_bounded() {
        for two_s in 1..=8u32 {
            let s = two_s as f64 / 2.0;
            for nx in 0..=two_s as usize {
                for ny in 0..=two_s as usize {
                    let a = a_xy(nx, ny, two_s);
                    assert!(a >= -1e-15);
                    assert!(a <= ((nx * nx + ny * ny) as f64) / (8.0 * s * s) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn number_cap_is_monotone() {
        let a = number_cap_for(4, 12, 4.0, 1e-13);
        let b = number_cap_for(4, 12, 8.0, 1e-13);
        assert!(b <= a && a < 48);
    }
}

//! Exact diagonalization of the spin-S Heisenberg ferromagnet in the product
//! `S³` basis. Basis state index `n` on a site corresponds to `S³ = n − S`, so the
//! many-site basis coincides with [`FockBasis`] at `n_max = 2S`.

use crate::error::{ensure, Error, Result};
use crate::fock::{hp_dirichlet_hamiltonian, hp_hamiltonian, FockBasis, SectorSpectrum};
use crate::format::sci;
use crate::lattice::{Boundary, LatticeSpec, Momentum};
use crate::linalg::{eigvalsh, log_partition, OperatorMatrix, SparseMatrix, DENSE_CAP};

/// Single-site spin matrices. `S²` is purely imaginary and stored as `M` with `S² = iM`.
#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub two_s: u32,
    pub s1: OperatorMatrix,
    pub s2_imag: OperatorMatrix,
    pub s3: OperatorMatrix,
    pub s_plus: OperatorMatrix,
    pub s_minus: OperatorMatrix,
}

/// `⟨m+1|S⁺|m⟩ = √(S(S+1) − m(m+1))` for the state with index `n = m + S`.
pub fn raising_element(two_s: u32, n: usize) -> f64 {
    let s = two_s as f64 / 2.0;
    let m = n as f64 - s;
    (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

impl SpinMatrices {
    pub fn new(two_s: u32) -> Result<Self> {
        ensure(two_s >= 1, || "2S must be at least 1".into())?;
        let dim = two_s as usize + 1;
        let s = two_s as f64 / 2.0;
        let s_plus = OperatorMatrix::from_fn(dim, |i, j| if i == j + 1 { raising_element(two_s, j) } else { 0.0 });
        let s_minus = s_plus.transpose();
        let s1 = s_plus.add(&s_minus, 1.0).scaled(0.5);
        let s2_imag = s_minus.add(&s_plus, -1.0).scaled(0.5);
        let s3 = OperatorMatrix::from_fn(dim, |i, j| if i == j { i as f64 - s } else { 0.0 });
        Ok(Self { two_s, s1, s2_imag, s3, s_plus, s_minus })
    }

    /// Max deviation in `[S¹,S²] = iS³`, i.e. `[S¹,M] = S³`.
    pub fn commutator_defect(&self) -> f64 {
        let c = self.s1.matmul(&self.s2_imag).add(&self.s2_imag.matmul(&self.s1), -1.0);
        c.max_abs_diff(&self.s3)
    }

    /// Max deviation in `S¹S¹ + S²S² + S³S³ = S(S+1)`.
    pub fn casimir_defect(&self) -> f64 {
        let s = self.two_s as f64 / 2.0;
        let c =
            self.s1.matmul(&self.s1).add(&self.s2_imag.matmul(&self.s2_imag), -1.0).add(&self.s3.matmul(&self.s3), 1.0);
        c.max_abs_diff(&OperatorMatrix::identity(self.s1.dim()).scaled(s * (s + 1.0)))
    }
}

fn spin_basis(spec: &LatticeSpec, two_s: u32) -> Result<FockBasis> {
    ensure(two_s >= 1, || "2S must be at least 1".into())?;
    FockBasis::build(spec, two_s as usize)
}

/// `Σ_⟨xy⟩ (S² − S³_x S³_y − (S⁺_x S⁻_y + S⁻_x S⁺_y)/2)` as a sparse matrix.
pub fn heisenberg_sparse(spec: &LatticeSpec, two_s: u32) -> Result<SparseMatrix> {
    let basis = spin_basis(spec, two_s)?;
    Ok(heisenberg_on(&basis, two_s))
}

fn heisenberg_on(basis: &FockBasis, two_s: u32) -> SparseMatrix {
    let s = two_s as f64 / 2.0;
    let bonds = basis.spec().bonds();
    let mut trips = Vec::new();
    let mut buf = vec![0u8; basis.num_sites()];
    for j in 0..basis.dim() {
        let occ = basis.occupations(j);
        let diag: f64 = bonds.iter().map(|&(x, y)| s * s - (occ[x] as f64 - s) * (occ[y] as f64 - s)).sum();
        if diag != 0.0 {
            trips.push((j, j, diag));
        }
        for &(x, y) in &bonds {
            for (up, down) in [(x, y), (y, x)] {
                let (nu, nd) = (occ[up] as usize, occ[down] as usize);
                if nu >= two_s as usize || nd == 0 {
                    continue;
                }
                let amp = raising_element(two_s, nu) * raising_element(two_s, nd - 1);
                buf.copy_from_slice(occ);
                buf[up] += 1;
                buf[down] -= 1;
                let i = basis.index_of(&buf).expect("spin basis is closed under flips");
                trips.push((i, j, -0.5 * amp));
            }
        }
    }
    SparseMatrix::from_triplets(basis.dim(), basis.dim(), trips)
}

fn boundary_term(basis: &FockBasis, two_s: u32) -> Result<SparseMatrix> {
    let s = two_s as f64 / 2.0;
    let m = basis.spec().boundary_multiplicity()?;
    // m_x (S² + S S³_x) with S³_x = n_x − S
    Ok(basis.diagonal(|o| o.iter().zip(&m).map(|(&n, &mx)| mx as f64 * (s * s + s * (n as f64 - s))).sum()))
}

/// `H^D = H + Σ_x m_x (S² + S S³_x)`, `m_x` the number of missing neighbours.
pub fn dirichlet_sparse(spec: &LatticeSpec, two_s: u32) -> Result<SparseMatrix> {
    ensure(spec.boundary() == Boundary::Dirichlet, || "H^D needs a Dirichlet box".into())
        .map_err(|_| Error::WrongBoundary { expected: "Dirichlet" })?;
    let basis = spin_basis(spec, two_s)?;
    Ok(heisenberg_on(&basis, two_s).add(&boundary_term(&basis, two_s)?, 1.0))
}

fn dense_capped(m: SparseMatrix) -> Result<OperatorMatrix> {
    if m.nrows() > DENSE_CAP {
        return Err(Error::DimensionCap { dim: m.nrows(), cap: DENSE_CAP });
    }
    m.to_dense()
}

fn check_dim(spec: &LatticeSpec, two_s: u32) -> Result<()> {
    let dim = (two_s as f64 + 1.0).powi(spec.num_sites() as i32);
    if dim > DENSE_CAP as f64 {
        return Err(Error::DimensionCap { dim: dim.min(usize::MAX as f64) as usize, cap: DENSE_CAP });
    }
    Ok(())
}

pub fn heisenberg_hamiltonian(spec: &LatticeSpec, two_s: u32) -> Result<OperatorMatrix> {
    check_dim(spec, two_s)?;
    dense_capped(heisenberg_sparse(spec, two_s)?)
}

pub fn dirichlet_hamiltonian(spec: &LatticeSpec, two_s: u32) -> Result<OperatorMatrix> {
    check_dim(spec, two_s)?;
    dense_capped(dirichlet_sparse(spec, two_s)?)
}

/// Spectrum blocked by total `S³` (equivalently total boson number).
pub fn sector_spectrum(spec: &LatticeSpec, two_s: u32, dirichlet: bool) -> Result<SectorSpectrum> {
    let basis = spin_basis(spec, two_s)?;
    let mut h = heisenberg_on(&basis, two_s);
    if dirichlet {
        if spec.boundary() != Boundary::Dirichlet {
            return Err(Error::WrongBoundary { expected: "Dirichlet" });
        }
        h = h.add(&boundary_term(&basis, two_s)?, 1.0);
    }
    SectorSpectrum::new(&basis, &h, false)
}

/// `−(1/(β N)) log tr e^{−βH}` for a dense Hamiltonian on `sites` sites.
pub fn exact_free_energy(h: &OperatorMatrix, beta: f64, sites: usize) -> Result<f64> {
    free_energy_from_spectrum(&eigvalsh(h)?, beta, sites)
}

pub fn free_energy_from_spectrum(eigenvalues: &[f64], beta: f64, sites: usize) -> Result<f64> {
    ensure(beta > 0.0 && beta.is_finite(), || format!("beta = {beta} must be positive"))?;
    ensure(sites > 0, || "no sites".into())?;
    Ok(-log_partition(eigenvalues, beta) / (beta * sites as f64))
}

/// Residual `max(‖H c − Sε c‖, ‖H s − Sε s‖)` for the real and imaginary parts of
/// the one-magnon state `ℓ^{−d/2} Σ_x e^{ik·x} |x⟩`, `|x⟩` one flip at `x`.
pub fn magnon_check(spec: &LatticeSpec, two_s: u32, k: &Momentum) -> Result<f64> {
    let e = two_s as f64 / 2.0 * crate::dispersion::epsilon(&k.0);
    magnon_residual(spec, two_s, k, e)
}

/// As [`magnon_check`] but against an arbitrary trial eigenvalue `e`.
pub fn magnon_residual(spec: &LatticeSpec, two_s: u32, k: &Momentum, e: f64) -> Result<f64> {
    if spec.boundary() != Boundary::Periodic {
        return Err(Error::WrongBoundary { expected: "periodic" });
    }
    ensure(k.0.len() == spec.d(), || "momentum dimension mismatch".into())?;
    let basis = spin_basis(spec, two_s)?;
    let h = heisenberg_on(&basis, two_s);
    let norm = (spec.num_sites() as f64).powf(-0.5);
    let mut cos_v = vec![0.0; basis.dim()];
    let mut sin_v = vec![0.0; basis.dim()];
    let mut occ = vec![0u8; basis.num_sites()];
    for (xi, x) in spec.sites().iter().enumerate() {
        let phase: f64 = x.0.iter().zip(&k.0).map(|(&c, &kc)| c as f64 * kc).sum();
        occ[xi] = 1;
        let idx = basis.index_of(&occ).expect("single flip is in the basis");
        occ[xi] = 0;
        cos_v[idx] = norm * phase.cos();
        sin_v[idx] = norm * phase.sin();
    }
    let residual = |v: &[f64]| {
        let hv = h.matvec(v);
        hv.iter().zip(v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt()
    };
    Ok(residual(&cos_v).max(residual(&sin_v)))
}

/// `max |H_spin − H_HP|` elementwise under `|n_x⟩ ↔ |−S + n_x⟩`.
pub fn hp_equivalence_check(spec: &LatticeSpec, two_s: u32) -> Result<f64> {
    let basis = spin_basis(spec, two_s)?;
    let mut spin = heisenberg_on(&basis, two_s);
    let hp = match spec.boundary() {
        Boundary::Dirichlet => {
            spin = spin.add(&boundary_term(&basis, two_s)?, 1.0);
            hp_dirichlet_hamiltonian(&basis, two_s)?
        }
        Boundary::Periodic => hp_hamiltonian(&basis, two_s)?,
    };
    Ok(spin.max_abs_diff(&hp))
}

/// CSV with header `index,eigenvalue`, eigenvalues ascending.
pub fn spectrum_csv(eigenvalues: &[f64]) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (i, e) in eigenvalues.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", sci(*e)));
    }
    out
}

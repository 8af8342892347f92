use magnon::diagrams::{cancellation_scan, PeriodicGrid};
use magnon::fock::{kinetic_dirichlet, quartic_i, SectorSpectrum};
use magnon::format::sci;
use magnon::quadrature::{correction_integral_with, Domain};
use magnon::spin_ed::{free_energy_from_spectrum, sector_spectrum};
use magnon::spinwave::{
    discrete_correction_bulk, discrete_correction_exact, preliminary_bound, theorem_upper_bound, BoundReport,
};
use magnon::wick::{expectation_i_position, oracle_basis};
use magnon::{Boundary, LatticeSpec};
use serde_json::{json, Value};

use crate::config::{BoundKind, RunConfig};
use crate::{CliError, Outcome};

/// Margin below which the exact free energy is reported as exceeding the bound.
pub const VARIATIONAL_TOL: f64 = 1e-10;
/// Relative agreement required between the mode-space and position-space forms.
pub const WICK_TOL: f64 = 1e-10;
/// Relative agreement required of the truncated Fock trace.
pub const FOCK_TOL: f64 = 1e-5;
/// Largest lattice on which `wick-verify` runs the Fock trace.
pub const FOCK_MAX_SITES: usize = 4;

pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn dirichlet_box(cfg: &RunConfig) -> Result<LatticeSpec, CliError> {
    if cfg.boundary != Boundary::Dirichlet {
        return Err(CliError::Usage("this command needs boundary=dirichlet".into()));
    }
    Ok(LatticeSpec::dirichlet(cfg.require_d()?, cfg.require_ell()?)?)
}

fn csv(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

pub fn free_energy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let betas = cfg.require_betas()?;
    let (d, two_s) = (cfg.require_d()?, cfg.require_two_s()?);
    let reports: Vec<BoundReport> = match cfg.bound {
        BoundKind::Theorem => betas
            .iter()
            .map(|&b| theorem_upper_bound(d, two_s, b, &cfg.constants, cfg.regime))
            .collect::<Result<_, _>>()?,
        BoundKind::Preliminary => {
            let spec = dirichlet_box(cfg)?;
            betas.iter().map(|&b| preliminary_bound(&spec, two_s, b, &cfg.constants)).collect::<Result<_, _>>()?
        }
    };
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                sci(r.beta_tilde),
                r.ell.to_string(),
                sci(r.leading),
                sci(r.correction),
                sci(r.error_total),
                sci(r.total_upper_bound),
                r.error_terms.r_d_over_s2.map(sci).unwrap_or_default(),
                r.hypothesis_satisfied.to_string(),
            ]
        })
        .collect();
    Ok(Outcome {
        results: serde_json::to_value(&reports).expect("reports serialize"),
        csv: csv(
            "beta_tilde,ell,leading,correction,error_total,total_upper_bound,r_d_over_s2,hypothesis_satisfied",
            &rows,
        ),
        summary: None,
        failed: false,
    })
}

pub fn correction(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = dirichlet_box(cfg)?;
    let (d, two_s) = (spec.d(), cfg.require_two_s()?);
    let s = two_s as f64 / 2.0;
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for &b in cfg.require_betas()? {
        let exact = discrete_correction_exact(&spec, two_s, b)?;
        let bulk = discrete_correction_bulk(&spec, two_s, b)?;
        let c = correction_integral_with(d, b, cfg.quad_tolerance, Domain::Octant)?.value;
        let continuum = -c * c / (4.0 * d as f64 * s);
        results.push(json!({
            "beta_tilde": b,
            "exact": exact,
            "bulk": bulk,
            "continuum": continuum,
            "exact_minus_continuum": exact - continuum,
        }));
        rows.push(vec![sci(b), sci(exact), sci(bulk), sci(continuum), sci(exact - continuum)]);
    }
    Ok(Outcome {
        results: Value::Array(results),
        csv: csv("beta_tilde,exact,bulk,continuum,exact_minus_continuum", &rows),
        summary: None,
        failed: false,
    })
}

pub fn ed_compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = dirichlet_box(cfg)?;
    let two_s = cfg.require_two_s()?;
    let s = two_s as f64 / 2.0;
    let spectrum = sector_spectrum(&spec, two_s, true)?.eigenvalues();
    let mut results = Vec::new();
    let mut rows = Vec::new();
    let mut failed = false;
    for &b in cfg.require_betas()? {
        let exact = free_energy_from_spectrum(&spectrum, b / s, spec.num_sites())? / s;
        let bound = preliminary_bound(&spec, two_s, b, &cfg.constants)?;
        let margin = bound.total_upper_bound - exact;
        let pass = margin >= -VARIATIONAL_TOL;
        failed |= !pass;
        results.push(json!({
            "beta_tilde": b,
            "exact_free_energy_over_s": exact,
            "bound": bound,
            "margin": margin,
            "tolerance": VARIATIONAL_TOL,
            "pass": pass,
        }));
        rows.push(vec![sci(b), sci(exact), sci(bound.total_upper_bound), sci(margin), pass.to_string()]);
    }
    Ok(Outcome {
        results: Value::Array(results),
        csv: csv("beta_tilde,exact_free_energy_over_s,total_upper_bound,margin,pass", &rows),
        summary: None,
        failed,
    })
}

/// Per-site `⟨I⟩` from the truncated Fock trace in the Gibbs state of `T^D`.
pub fn fock_expectation_i(spec: &LatticeSpec, two_s: u32, beta_tilde: f64, cutoff: usize) -> Result<f64, CliError> {
    let basis = oracle_basis(spec, cutoff, beta_tilde)?;
    let td = kinetic_dirichlet(&basis)?;
    let g = SectorSpectrum::new(&basis, &td, true)?;
    Ok(g.expectation(beta_tilde, &quartic_i(&basis, two_s))? / spec.num_sites() as f64)
}

pub fn wick_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = dirichlet_box(cfg)?;
    let two_s = cfg.require_two_s()?;
    let n = spec.num_sites() as f64;
    let with_fock = spec.num_sites() <= FOCK_MAX_SITES;
    let mut results = Vec::new();
    let mut rows = Vec::new();
    let mut failed = false;
    for &b in cfg.require_betas()? {
        let mode = discrete_correction_exact(&spec, two_s, b)?;
        let position = expectation_i_position(&spec, two_s, b)? / n;
        let wick_ok = rel_diff(mode, position) <= WICK_TOL;
        let fock = if with_fock { Some(fock_expectation_i(&spec, two_s, b, cfg.n_max)?) } else { None };
        let fock_ok = fock.is_none_or(|f| rel_diff(f, mode) <= FOCK_TOL);
        failed |= !(wick_ok && fock_ok);
        results.push(json!({
            "beta_tilde": b,
            "mode_space": mode,
            "position_space": position,
            "fock": fock,
            "wick_rel_diff": rel_diff(mode, position),
            "wick_tolerance": WICK_TOL,
            "fock_rel_diff": fock.map(|f| rel_diff(f, mode)),
            "fock_tolerance": FOCK_TOL,
            "pass": wick_ok && fock_ok,
        }));
        rows.push(vec![
            sci(b),
            sci(mode),
            sci(position),
            fock.map(sci).unwrap_or_default(),
            (wick_ok && fock_ok).to_string(),
        ]);
    }
    Ok(Outcome {
        results: Value::Array(results),
        csv: csv("beta_tilde,mode_space,position_space,fock,pass", &rows),
        summary: None,
        failed,
    })
}

pub fn diagrams(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.require_d()? != 3 {
        return Err(CliError::Usage("diagrams are evaluated in d = 3 only".into()));
    }
    let grid = PeriodicGrid::new(cfg.require_ell()?)?.with_force(cfg.force);
    let scan = cancellation_scan(&grid, cfg.require_two_s()?, cfg.require_betas()?)?;
    let summary = json!({
        "ell": scan.ell,
        "two_s": scan.two_s,
        "zero_mode_policy": scan.zero_mode_policy,
        "slopes": scan.slopes,
        "k3_identity_max_residual": scan.k3_identity_max_residual,
    });
    Ok(Outcome {
        results: serde_json::to_value(&scan.rows).expect("rows serialize"),
        csv: scan.to_csv(),
        summary: Some(summary),
        failed: false,
    })
}

//! Desk-scale pass/fail suite over the module invariants.

use std::time::Instant;

use magnon::dispersion::{epsilon, rho_small_beta_bound, rho_upper_bound, site_densities};
use magnon::format::sci;
use magnon::lattice::dirichlet_momentum;
use magnon::quadrature::riemann_lower_sum_check;
use magnon::spin_ed::{free_energy_from_spectrum, hp_equivalence_check, magnon_residual, sector_spectrum};
use magnon::spinwave::{discrete_correction_exact, preliminary_bound, quartic_closed_forms, quartic_sine_sums};
use magnon::wick::expectation_i_position;
use magnon::LatticeSpec;
use serde_json::{json, Value};

use crate::commands::{fock_expectation_i, rel_diff, FOCK_TOL, VARIATIONAL_TOL, WICK_TOL};
use crate::config::RunConfig;
use crate::{CliError, Outcome};

pub const SUITES: &[&str] = &["hp", "magnon", "trig", "wick", "rho", "riemann", "variational"];

struct Check {
    suite: &'static str,
    name: String,
    value: f64,
    tolerance: f64,
    /// `value ≤ tolerance` when true, `value ≥ tolerance` otherwise.
    upper: bool,
}

impl Check {
    fn pass(&self) -> bool {
        if self.upper {
            self.value <= self.tolerance
        } else {
            self.value >= self.tolerance
        }
    }
}

fn upper(suite: &'static str, name: String, value: f64, tolerance: f64) -> Check {
    Check { suite, name, value, tolerance, upper: true }
}

fn hp() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let mut cases = Vec::new();
    for ell in 2..=3 {
        for two_s in 1..=2 {
            cases.push((LatticeSpec::dirichlet(1, ell)?, two_s));
            if ell >= 3 {
                cases.push((LatticeSpec::periodic(1, ell)?, two_s));
            }
        }
    }
    cases.push((LatticeSpec::dirichlet(2, 2)?, 1));
    for (spec, two_s) in cases {
        let r = hp_equivalence_check(&spec, two_s)?;
        out.push(upper("hp", format!("{:?} d={} ell={} 2S={two_s}", spec.boundary(), spec.d(), spec.ell()), r, 1e-10));
    }
    Ok(out)
}

fn magnon(perturb: f64) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let mut cases = Vec::new();
    for ell in 4..=6 {
        for two_s in 1..=2 {
            cases.push((1, ell, two_s));
        }
    }
    cases.push((2, 3, 1));
    for (d, ell, two_s) in cases {
        let spec = LatticeSpec::periodic(d, ell)?;
        let s = two_s as f64 / 2.0;
        let mut worst: f64 = 0.0;
        for m in spec.modes() {
            let e = s * (epsilon(&m.momentum.0) + perturb);
            worst = worst.max(magnon_residual(&spec, two_s, &m.momentum, e)?);
        }
        out.push(upper("magnon", format!("d={d} ell={ell} 2S={two_s} max over k"), worst, 1e-10));
    }
    Ok(out)
}

fn trig() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for ell in 1..=16 {
        let mut worst: f64 = 0.0;
        for n in 1..=ell {
            for np in 1..=ell {
                let (k, kp) = (dirichlet_momentum(n, ell), dirichlet_momentum(np, ell));
                let a = quartic_sine_sums(ell, k, kp)?;
                let b = quartic_closed_forms(ell, k, kp)?;
                for (x, y) in [(a.mixed, b.mixed), (a.sin_sin, b.sin_sin), (a.sin_cos, b.sin_cos), (a.cross, b.cross)] {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        out.push(upper("trig", format!("ell={ell} all (k,k')"), worst, 1e-12));
    }
    Ok(out)
}

fn wick(n_max: usize) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for (d, ell) in [(1, 8), (2, 4), (3, 3)] {
        let spec = LatticeSpec::dirichlet(d, ell)?;
        for bt in [1.0, 2.0, 4.0] {
            let a = discrete_correction_exact(&spec, 2, bt)?;
            let b = expectation_i_position(&spec, 2, bt)? / spec.num_sites() as f64;
            out.push(upper("wick", format!("mode vs position d={d} ell={ell} bt={bt}"), rel_diff(a, b), WICK_TOL));
        }
    }
    let spec = LatticeSpec::dirichlet(2, 2)?;
    for bt in [2.0, 4.0] {
        let a = discrete_correction_exact(&spec, 2, bt)?;
        let f = fock_expectation_i(&spec, 2, bt, n_max)?;
        out.push(upper("wick", format!("fock cutoff {n_max} vs mode 2x2 bt={bt}"), rel_diff(f, a), FOCK_TOL));
    }
    Ok(out)
}

fn rho() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for d in [2, 3] {
        for bt in [1.0, 2.0, 4.0, 8.0] {
            for ell in [4, 8, 16] {
                // the two-dimensional bound needs 2β̃ > 1 > 2β̃/(ℓ+1)
                let Ok(bound) = rho_upper_bound(d, bt, ell) else { continue };
                let sup = site_densities(&LatticeSpec::dirichlet(d, ell)?, bt)?.into_iter().fold(0.0, f64::max);
                out.push(upper("rho", format!("max rho / bound d={d} bt={bt} ell={ell}"), sup / bound, 1.0));
            }
        }
    }
    for bt in [0.25, 0.5, 1.0] {
        for ell in [4, 8] {
            let sup = site_densities(&LatticeSpec::dirichlet(3, ell)?, bt)?.into_iter().fold(0.0, f64::max);
            out.push(upper(
                "rho",
                format!("max rho / (8 pi/bt) d=3 bt={bt} ell={ell}"),
                sup / rho_small_beta_bound(bt),
                1.0,
            ));
        }
    }
    Ok(out)
}

fn riemann() -> Result<Vec<Check>, CliError> {
    let bt = 4.0;
    let g = |k: &[f64]| {
        let e = epsilon(k);
        if e == 0.0 {
            1.0 / bt
        } else {
            e / (bt * e).exp_m1()
        }
    };
    let mut out = Vec::new();
    for ell in [4, 8, 16] {
        let r = riemann_lower_sum_check(&g, ell, 3, 1.0 / bt, 3f64.sqrt())?;
        out.push(Check {
            suite: "riemann",
            name: format!("margin g=eps f d=3 bt={bt} ell={ell}"),
            value: r.margin,
            tolerance: 0.0,
            upper: false,
        });
    }
    Ok(out)
}

fn variational() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let mut specs = vec![LatticeSpec::dirichlet(2, 2)?];
    for ell in [4, 6, 8, 10] {
        specs.push(LatticeSpec::dirichlet(1, ell)?);
    }
    for spec in specs {
        let eig = sector_spectrum(&spec, 1, true)?.eigenvalues();
        for bt in [2.0, 4.0, 8.0] {
            let exact = free_energy_from_spectrum(&eig, bt / 0.5, spec.num_sites())? / 0.5;
            let bound = preliminary_bound(&spec, 1, bt, &Default::default())?.total_upper_bound;
            out.push(Check {
                suite: "variational",
                name: format!("bound - f^D/S d={} ell={} bt={bt}", spec.d(), spec.ell()),
                value: bound - exact,
                tolerance: -VARIATIONAL_TOL,
                upper: false,
            });
        }
    }
    Ok(out)
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let selected: Vec<&str> = if cfg.only.is_empty() {
        SUITES.to_vec()
    } else {
        for s in &cfg.only {
            if !SUITES.contains(&s.as_str()) {
                return Err(CliError::Usage(format!("unknown suite {s:?}; known: {}", SUITES.join(", "))));
            }
        }
        SUITES.iter().copied().filter(|s| cfg.only.iter().any(|o| o == s)).collect()
    };
    let mut checks = Vec::new();
    for suite in &selected {
        let start = Instant::now();
        let got = match *suite {
            "hp" => hp()?,
            "magnon" => magnon(cfg.perturb_epsilon)?,
            "trig" => trig()?,
            "wick" => wick(cfg.n_max)?,
            "rho" => rho()?,
            "riemann" => riemann()?,
            _ => variational()?,
        };
        for c in &got {
            let op = if c.upper { "<=" } else { ">=" };
            println!(
                "{} {}: {}  value={} {op} tol={}",
                if c.pass() { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                sci(c.value),
                sci(c.tolerance)
            );
        }
        eprintln!("suite {suite}: {} checks in {:.2} s", got.len(), start.elapsed().as_secs_f64());
        checks.extend(got);
    }
    let failures = checks.iter().filter(|c| !c.pass()).count();
    println!("{} checks, {failures} failed", checks.len());

    let results: Vec<Value> = checks
        .iter()
        .map(|c| {
            json!({
                "suite": c.suite,
                "name": c.name,
                "value": c.value,
                "tolerance": c.tolerance,
                "comparison": if c.upper { "<=" } else { ">=" },
                "pass": c.pass(),
            })
        })
        .collect();
    let mut csv = String::from("suite,name,value,comparison,tolerance,pass\n");
    for c in &checks {
        csv.push_str(&format!(
            "{},\"{}\",{},{},{},{}\n",
            c.suite,
            c.name,
            sci(c.value),
            if c.upper { "<=" } else { ">=" },
            sci(c.tolerance),
            c.pass()
        ));
    }
    Ok(Outcome { results: Value::Array(results), csv, summary: None, failed: failures > 0 })
}

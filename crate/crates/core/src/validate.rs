//! Self-check suites with a machine-readable report.

use serde::Serialize;

use crate::core_matrix::{ep_locus, normal_mode_form, ExceptionalPoint, ModeSign};
use crate::dynamics::{diagonalize, normal_mode_annihilator, quasiparticle_vacuum};
use crate::error::Result;
use crate::fock::{
    build_dimer_hamiltonian, build_dpm_operators, chain_projection, initial_state, mode_operators, BosonOperator,
    Truncation,
};
use crate::nambu::{BareState, NambuEngine};
use crate::oracle::{fundamental_spacings, g2_equivalence_trials};
use crate::output::version_string;
use crate::sparse::{inner, CsrMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl std::str::FromStr for Level {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(crate::error::Error::Parse(format!("unknown level '{other}', expected quick or full"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((p, d)) => Check::new(name, p, d),
            Err(e) => Check::new(name, false, format!("error: {e}")),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub level: Level,
    pub version: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// `Σ_ρ α d_ρ†d_ρ + (β/2)(d_ρ² + d_ρ†²) + β/2` assembled from the `d±`
/// matrices.
pub fn normal_form_hamiltonian(mu: f64, tr: &Truncation) -> Result<BosonOperator> {
    let dpm = build_dpm_operators(tr)?;
    let id = BosonOperator::general(*tr, CsrMatrix::identity(tr.dim()));
    let mut total = BosonOperator::general(*tr, CsrMatrix::zeros(tr.dim()));
    for rho in ModeSign::BOTH {
        let f = normal_mode_form(mu, rho)?;
        let d = dpm.for_sign(rho.value());
        let dd = d.adjoint();
        let term = dd
            .mul(d)
            .scale(f.alpha)
            .add(&d.mul(d).add(&dd.mul(&dd)).scale(f.beta / 2.0))
            .add(&id.scale(f.offset));
        total = total.add(&term);
    }
    Ok(total)
}

/// `max |x − y|` over entries whose row and column lie outside the edge band.
pub fn interior_defect(x: &BosonOperator, y: &BosonOperator, tr: &Truncation) -> f64 {
    let idx = tr.indexer();
    let inside = |i: usize| {
        let (m, n) = idx.occupations(i).expect("index in range");
        !tr.in_edge_band(m, n)
    };
    x.matrix().sub(y.matrix()).restrict(inside).max_abs()
}

/// Hermiticity and parity checks of a Hamiltonian candidate.
pub fn hamiltonian_checks(label: &str, h: &BosonOperator) -> Vec<Check> {
    let herm = match h.verify_hermitian() {
        Ok(()) => Check::new(&format!("hermiticity[{label}]"), true, format!("defect {:.3e}", h.matrix().hermiticity_defect())),
        Err(e) => Check::new(&format!("hermiticity[{label}]"), false, e.to_string()),
    };
    let parity = match mode_operators(h.truncation()) {
        Ok(ops) => {
            let c = h.commutator_norm(&ops.parity);
            Check::new(&format!("parity[{label}]"), c <= 1e-12, format!("max |[H, P]| = {c:.3e}"))
        }
        Err(e) => Check::new(&format!("parity[{label}]"), false, e.to_string()),
    };
    vec![herm, parity]
}

/// Hamiltonian whose Hermitian flag is forced on an asymmetric matrix; a
/// negative control for the structural checks.
pub fn corrupted_hamiltonian(tr: &Truncation) -> Result<BosonOperator> {
    let h = build_dimer_hamiltonian(1.0, tr)?;
    let idx = tr.indexer();
    let (i, j) = (idx.index(0, 0).unwrap(), idx.index(0, 1).unwrap());
    let bad = h.matrix().add(&CsrMatrix::from_triplets(tr.dim(), [(i, j, C64::new(0.5, 0.0))]));
    Ok(BosonOperator::assume_hermitian_unchecked(*tr, bad))
}

pub fn run(level: Level, corrupt: bool) -> Report {
    let mut checks = Vec::new();
    let full = level == Level::Full;

    let tr10 = Truncation::with_n_max(10).expect("valid cutoff");
    for mu in [-3.0, -1.0, 0.5, 1.0, 3.0] {
        match build_dimer_hamiltonian(mu, &tr10) {
            Ok(h) => checks.extend(hamiltonian_checks(&format!("mu={mu}"), &h)),
            Err(e) => checks.push(Check::new("hamiltonian", false, e.to_string())),
        }
    }
    if corrupt {
        match corrupted_hamiltonian(&tr10) {
            Ok(h) => checks.extend(hamiltonian_checks("corrupted", &h)),
            Err(e) => checks.push(Check::new("hamiltonian[corrupted]", false, e.to_string())),
        }
    }

    checks.push(Check::from_result("ep_locus", (|| {
        let locus = ep_locus();
        let expect = [
            ExceptionalPoint { mu: 0.0, rho: ModeSign::Plus },
            ExceptionalPoint { mu: 0.0, rho: ModeSign::Minus },
            ExceptionalPoint { mu: -2.0, rho: ModeSign::Plus },
            ExceptionalPoint { mu: 2.0, rho: ModeSign::Minus },
        ];
        let ok = locus.len() == 4 && expect.iter().all(|e| locus.contains(e));
        Ok((ok, format!("{} points", locus.len())))
    })()));

    checks.push(Check::from_result("normal_form", (|| {
        let tr = Truncation::with_n_max(20)?;
        let mut worst: f64 = 0.0;
        for mu in [-3.0, -1.0, 0.5, 1.0, 1.5, 3.0] {
            let h = build_dimer_hamiltonian(mu, &tr)?;
            worst = worst.max(interior_defect(&h, &normal_form_hamiltonian(mu, &tr)?, &tr));
        }
        Ok((worst <= 1e-10, format!("interior max-norm {worst:.3e}")))
    })()));

    checks.push(Check::from_result("bogoliubov", (|| {
        let tr = Truncation::with_n_max(20)?;
        let mu = 3.0;
        let h = build_dimer_hamiltonian(mu, &tr)?;
        let idx = tr.indexer();
        let mut worst: f64 = 0.0;
        for rho in ModeSign::BOTH {
            let omega = normal_mode_form(mu, rho)?.signed_frequency().unwrap_or(f64::NAN);
            let g = normal_mode_annihilator(mu, rho, &tr)?;
            let defect = g.matrix().commutator(h.matrix()).sub(&g.matrix().scale_real(omega));
            let low = defect.restrict(|i| {
                let (m, n) = idx.occupations(i).unwrap();
                m + n < tr.n_max() / 2
            });
            worst = worst.max(low.max_abs());
        }
        Ok((worst <= 1e-6, format!("max |[g, H] - w g| = {worst:.3e}")))
    })()));

    checks.push(Check::from_result("mirror_spectrum", (|| {
        let tr = Truncation::with_n_max(if full { 30 } else { 12 })?;
        let e = diagonalize(&build_dimer_hamiltonian(1.3, &tr)?)?.eigenvalues();
        let m = diagonalize(&build_dimer_hamiltonian(-1.3, &tr)?)?.eigenvalues();
        let worst = e.iter().zip(m.iter().rev()).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
        Ok((worst <= 1e-9, format!("max |E(mu) + E(-mu)| = {worst:.3e}")))
    })()));

    checks.push(Check::from_result("chain_projection", (|| {
        let tr = Truncation::with_n_max(22)?;
        let mut ok = true;
        for mu in [0.0, 1.5] {
            let c = chain_projection(mu, 20, &tr)?;
            ok &= c.diagonal.iter().enumerate().all(|(l, &d)| d == 2.0 * mu * l as f64);
            ok &= c.off_diagonal.iter().enumerate().all(|(l, &o)| o == (l + 1) as f64);
        }
        Ok((ok, "diag 2 mu l, off-diag l + 1".into()))
    })()));

    checks.push(Check::from_result("g2_literal_equivalence", (|| {
        let trials = g2_equivalence_trials(if full { 100 } else { 20 }, 7)?;
        let worst = trials.iter().map(|t| t.abs_diff()).fold(0.0, f64::max);
        Ok((worst <= 1e-10, format!("{} trials, max diff {worst:.3e}", trials.len())))
    })()));

    checks.push(Check::from_result("unitarity_energy", (|| {
        let tr = Truncation::with_n_max(15)?;
        let h = build_dimer_hamiltonian(3.0, &tr)?;
        let spec = diagonalize(&h)?;
        let psi0 = initial_state(&tr)?;
        let e0 = h.expectation(&psi0).re;
        let mut worst_norm: f64 = 0.0;
        let mut worst_e: f64 = 0.0;
        for t in [0.5, 3.0, 10.0] {
            let raw = spec.propagate(psi0.amplitudes(), t)?;
            worst_norm = worst_norm.max((inner(&raw, &raw).re.sqrt() - 1.0).abs());
            worst_e = worst_e.max((inner(&raw, &h.apply(&raw)).re - e0).abs());
        }
        Ok((worst_norm <= 1e-10 && worst_e <= 1e-9, format!("norm {worst_norm:.3e}, energy {worst_e:.3e}")))
    })()));

    checks.push(Check::from_result("exact_vs_truncated_g2", (|| {
        let tr = Truncation::with_n_max(30)?;
        let spec = diagonalize(&build_dimer_hamiltonian(3.0, &tr)?)?;
        let x = crate::coherence::g2(&spec, &initial_state(&tr)?, 0.4, 0.9)?;
        let y = NambuEngine::new(3.0, BareState::SymmetricSingle)?.g2(0.4, 0.9)?;
        Ok(((x - y).abs() <= 1e-9, format!("|diff| = {:.3e}", (x - y).abs())))
    })()));

    checks.push(Check::from_result("quasiparticle_vacuum", (|| {
        let tr = Truncation::with_n_max(30)?;
        let v = quasiparticle_vacuum(3.0, &tr)?;
        Ok((v.residual_occupation <= 1e-8, format!("residual {:.3e}", v.residual_occupation)))
    })()));

    if full {
        checks.push(Check::from_result("cutoff_convergence", (|| {
            let mut vals = Vec::new();
            for n in [30, 40] {
                let tr = Truncation::with_n_max(n)?;
                let spec = diagonalize(&build_dimer_hamiltonian(1.0, &tr)?)?;
                vals.push(crate::coherence::g2(&spec, &initial_state(&tr)?, 0.0, 0.5)?);
            }
            let d = (vals[0] - vals[1]).abs();
            Ok((d <= 1e-8, format!("|g2(n=30) - g2(n=40)| = {d:.3e}")))
        })()));

        checks.push(Check::from_result("level_spacings", (|| {
            let tr = Truncation::with_n_max(40)?;
            let e = diagonalize(&build_dimer_hamiltonian(3.0, &tr)?)?.eigenvalues();
            let s = fundamental_spacings(&e, 2, 1e-6);
            let target = [3f64.sqrt(), 15f64.sqrt()];
            let ok = s.len() == 2 && s.iter().zip(&target).all(|(x, y)| (x - y).abs() <= 1e-4);
            Ok((ok, format!("spacings {s:?}")))
        })()));
    }

    let passed = checks.iter().all(|c| c.passed);
    Report {
        level,
        version: version_string(),
        passed,
        checks,
    }
}

//! Closed-form analytics of the 2×2 core matrices.
//!
//! In the modes `d± = (a ± b)/√2` the dimer Hamiltonian splits into two
//! commuting single-mode pieces
//!
//! ```text
//! H^ρ = α d_ρ†d_ρ + (β/2)(d_ρ² + d_ρ†²) + β/2,   α = μ + ρ,  β = ρ,
//! ```
//!
//! whose Nambu core matrix is `h^ρ = ½[[α, β], [−β, −α]]`. The discriminant
//! `μ² + 2ρμ = α² − β²` decides whether a mode is an oscillator (elliptic),
//! an inverted oscillator (hyperbolic), or sits on an exceptional point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::C64;

/// Absolute tolerance for recognizing an exceptional point.
pub const EP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeSign {
    Plus,
    Minus,
}

impl ModeSign {
    pub const BOTH: [ModeSign; 2] = [ModeSign::Plus, ModeSign::Minus];

    pub fn value(self) -> f64 {
        match self {
            ModeSign::Plus => 1.0,
            ModeSign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            ModeSign::Plus => "+",
            ModeSign::Minus => "-",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoreMatrix {
    pub mu: f64,
    pub rho: ModeSign,
    pub entries: [[f64; 2]; 2],
}

impl CoreMatrix {
    pub fn trace(&self) -> f64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn determinant(&self) -> f64 {
        self.entries[0][0] * self.entries[1][1] - self.entries[0][1] * self.entries[1][0]
    }

    /// `μ² + 2ρμ`; zero exactly on the exceptional-point locus.
    pub fn discriminant(&self) -> f64 {
        discriminant(self.mu, self.rho)
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let e = &self.entries;
        [e[0][0] * v[0] + e[0][1] * v[1], e[1][0] * v[0] + e[1][1] * v[1]]
    }
}

fn discriminant(mu: f64, rho: ModeSign) -> f64 {
    mu * (mu + 2.0 * rho.value())
}

fn check_mu(mu: f64) -> Result<()> {
    if !mu.is_finite() {
        return Err(Error::Domain(format!("mu must be finite, got {mu}")));
    }
    Ok(())
}

/// `h^ρ = ((μ+ρ)/2) σ_z + (ρ/2) iσ_y`.
pub fn core_matrix(mu: f64, rho: ModeSign) -> Result<CoreMatrix> {
    check_mu(mu)?;
    let r = rho.value();
    let p = (mu + r) / 2.0;
    let q = r / 2.0;
    Ok(CoreMatrix {
        mu,
        rho,
        entries: [[p, q], [-q, -p]],
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoreEigenSystem {
    pub lambda: [C64; 2],
    /// Unit-normalized eigenvectors, `phi[k]` belongs to `lambda[k]`.
    pub phi: [[C64; 2]; 2],
    /// Sine of the angle between the two eigenvectors: 1 for orthogonal
    /// vectors, 0 when they coalesce. Vanishes like `√|μ − μ_EP|`.
    pub coalescence: f64,
}

/// Eigenvalues `∓½√(μ² + 2ρμ)` and eigenvectors of `h^ρ` by direct solve.
///
/// With `h = [[p, q], [−q, −p]]` and `q = ρ/2 ≠ 0`, the first row gives the
/// eigenvector `(q, λ − p)` for every λ, including the defective point.
pub fn core_spectrum(mu: f64, rho: ModeSign) -> Result<CoreEigenSystem> {
    let h = core_matrix(mu, rho)?;
    let disc = h.discriminant();
    let root = if disc >= 0.0 {
        C64::new(disc.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-disc).sqrt())
    };
    let lambda = [-0.5 * root, 0.5 * root];
    let p = h.entries[0][0];
    let q = h.entries[0][1];
    let vec_for = |l: C64| {
        let v = [C64::new(q, 0.0), l - p];
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        [v[0] / n, v[1] / n]
    };
    let phi = [vec_for(lambda[0]), vec_for(lambda[1])];
    // |u1 v2 − u2 v1| equals sqrt(1 − |⟨u, v⟩|²) for unit 2-vectors
    let coalescence = (phi[0][0] * phi[1][1] - phi[0][1] * phi[1][0]).norm().min(1.0);
    Ok(CoreEigenSystem {
        lambda,
        phi,
        coalescence,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalPoint {
    pub mu: f64,
    pub rho: ModeSign,
}

/// Roots of `μ² + 2ρμ = 0` for both core matrices.
pub fn ep_locus() -> Vec<ExceptionalPoint> {
    vec![
        ExceptionalPoint { mu: 0.0, rho: ModeSign::Plus },
        ExceptionalPoint { mu: 0.0, rho: ModeSign::Minus },
        ExceptionalPoint { mu: -2.0, rho: ModeSign::Plus },
        ExceptionalPoint { mu: 2.0, rho: ModeSign::Minus },
    ]
}

pub fn ep_locus_for(rho: ModeSign) -> Vec<f64> {
    let mut mus: Vec<f64> = ep_locus().into_iter().filter(|ep| ep.rho == rho).map(|ep| ep.mu).collect();
    mus.sort_by(f64::total_cmp);
    mus
}

/// Distinct μ values of the locus, ascending.
pub fn phase_boundaries() -> Vec<f64> {
    let mut mus: Vec<f64> = ep_locus().into_iter().map(|ep| ep.mu).collect();
    mus.sort_by(f64::total_cmp);
    mus.dedup();
    mus
}

pub fn is_exceptional(mu: f64, rho: ModeSign) -> bool {
    ep_locus_for(rho).into_iter().any(|p| (mu - p).abs() < EP_TOLERANCE)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PhaseRegion {
    /// μ < −2: both modes oscillate.
    OscillatorsBelow,
    /// −2 < μ < 0: the `+` mode is inverted.
    InvertedPlus,
    /// 0 < μ < 2: the `−` mode is inverted.
    InvertedMinus,
    /// μ > 2: both modes oscillate.
    OscillatorsAbove,
    /// On an exceptional point.
    Boundary { mu: f64 },
}

impl PhaseRegion {
    pub fn label(&self) -> &'static str {
        match self {
            PhaseRegion::OscillatorsBelow | PhaseRegion::OscillatorsAbove => "HO+HO",
            PhaseRegion::InvertedPlus => "IHO(+)+HO(-)",
            PhaseRegion::InvertedMinus => "HO(+)+IHO(-)",
            PhaseRegion::Boundary { .. } => "boundary",
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, PhaseRegion::Boundary { .. })
    }

    /// True when exactly one mode is an inverted oscillator.
    pub fn is_mixed(&self) -> bool {
        matches!(self, PhaseRegion::InvertedPlus | PhaseRegion::InvertedMinus)
    }
}

pub fn classify(mu: f64) -> Result<PhaseRegion> {
    check_mu(mu)?;
    if let Some(&p) = phase_boundaries().iter().find(|&&p| (mu - p).abs() < EP_TOLERANCE) {
        return Ok(PhaseRegion::Boundary { mu: p });
    }
    Ok(if mu < -2.0 {
        PhaseRegion::OscillatorsBelow
    } else if mu < 0.0 {
        PhaseRegion::InvertedPlus
    } else if mu < 2.0 {
        PhaseRegion::InvertedMinus
    } else {
        PhaseRegion::OscillatorsAbove
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModeKind {
    /// Oscillator: `H^ρ = sign(α)·ω(γ†γ + ½) + const` with
    /// `γ = cosh r·d + sinh r·d†`, `tanh 2r = β/α`.
    Elliptic { omega: f64, r: f64 },
    /// Inverted oscillator: `H^ρ = sign(α+β)·(c/2)(A² + A†²) + const` with
    /// `A = cosh s·d + sinh s·d†`, `tanh 2s = α/β`.
    Hyperbolic { c: f64, s: f64 },
    Parabolic,
}

impl ModeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModeKind::Elliptic { .. } => "elliptic",
            ModeKind::Hyperbolic { .. } => "hyperbolic",
            ModeKind::Parabolic => "parabolic",
        }
    }

    /// ω for an oscillator, c for an inverted oscillator, 0 at an EP.
    pub fn rate(&self) -> f64 {
        match *self {
            ModeKind::Elliptic { omega, .. } => omega,
            ModeKind::Hyperbolic { c, .. } => c,
            ModeKind::Parabolic => 0.0,
        }
    }

    /// Mixing angle of the normal-mode annihilator `cosh θ·d + sinh θ·d†`.
    pub fn mixing_angle(&self) -> Option<f64> {
        match *self {
            ModeKind::Elliptic { r, .. } => Some(r),
            ModeKind::Hyperbolic { s, .. } => Some(s),
            ModeKind::Parabolic => None,
        }
    }
}

/// Which normalization of the mode frequency to report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrequencyConvention {
    /// `ω = √(μ² + 2ρμ)`, the level spacing of the truncated Hamiltonian.
    #[default]
    LevelSpacing,
    /// `½√(μ² + 2ρμ)`, the eigenvalue magnitude of the core matrix.
    CoreEigenvalue,
}

impl FrequencyConvention {
    pub fn factor(self) -> f64 {
        match self {
            FrequencyConvention::LevelSpacing => 1.0,
            FrequencyConvention::CoreEigenvalue => 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalModeForm {
    pub rho: ModeSign,
    pub alpha: f64,
    pub beta: f64,
    pub kind: ModeKind,
    pub offset: f64,
}

impl NormalModeForm {
    /// `sign(α)·ω` for oscillators: `[γ, H] = signed_frequency · γ`.
    pub fn signed_frequency(&self) -> Option<f64> {
        match self.kind {
            ModeKind::Elliptic { omega, .. } => Some(self.alpha.signum() * omega),
            _ => None,
        }
    }

    /// `sign(α+β)·c` for inverted oscillators: `[A, H] = signed_rate · A†`.
    pub fn signed_rate(&self) -> Option<f64> {
        match self.kind {
            ModeKind::Hyperbolic { c, .. } => Some((self.alpha + self.beta).signum() * c),
            _ => None,
        }
    }

    pub fn frequency(&self, convention: FrequencyConvention) -> f64 {
        self.kind.rate() * convention.factor()
    }
}

pub fn normal_mode_form(mu: f64, rho: ModeSign) -> Result<NormalModeForm> {
    check_mu(mu)?;
    let alpha = mu + rho.value();
    let beta = rho.value();
    let disc = discriminant(mu, rho);
    let kind = if is_exceptional(mu, rho) {
        ModeKind::Parabolic
    } else if disc > 0.0 {
        ModeKind::Elliptic {
            omega: disc.sqrt(),
            r: 0.5 * (beta / alpha).atanh(),
        }
    } else {
        ModeKind::Hyperbolic {
            c: (-disc).sqrt(),
            s: 0.5 * (alpha / beta).atanh(),
        }
    };
    Ok(NormalModeForm {
        rho,
        alpha,
        beta,
        kind,
        offset: beta / 2.0,
    })
}

fn inverted_rate(mu: f64) -> Result<f64> {
    check_mu(mu)?;
    let m = mu.abs();
    if !(m > 0.0 && m < 2.0) {
        return Err(Error::Domain(format!(
            "mu = {mu} is outside the inverted-oscillator regions 0 < |mu| < 2"
        )));
    }
    Ok((2.0 * m - m * m).sqrt())
}

/// Occupation of the inverted mode grown from its vacuum,
/// `sinh²(√(2|μ| − μ²)·t)`.
pub fn analytic_occupation(mu: f64, t: f64) -> Result<f64> {
    let c = inverted_rate(mu)?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be non-negative, got {t}")));
    }
    Ok((c * t).sinh().powi(2))
}

/// The same occupation written as `1/(|tanh(ct)|⁻² − 1)`. Loses precision
/// once `tanh` saturates; kept for cross-checking the closed form.
pub fn analytic_occupation_tanh_form(mu: f64, t: f64) -> Result<f64> {
    let c = inverted_rate(mu)?;
    Ok(1.0 / ((c * t).tanh().abs().powi(-2) - 1.0))
}

/// Asymptotic exponential rate `2√(2|μ| − μ²)` of the inverted-mode occupation.
pub fn growth_rate(mu: f64) -> Result<f64> {
    Ok(2.0 * inverted_rate(mu)?)
}

/// One row of the phase-diagram table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub mu: f64,
    pub region: PhaseRegion,
    pub plus: NormalModeForm,
    pub minus: NormalModeForm,
}

impl PhaseRow {
    pub fn at(mu: f64) -> Result<Self> {
        Ok(PhaseRow {
            mu,
            region: classify(mu)?,
            plus: normal_mode_form(mu, ModeSign::Plus)?,
            minus: normal_mode_form(mu, ModeSign::Minus)?,
        })
    }

    pub const CSV_HEADER: &'static str =
        "mu,region,omega_plus_or_c_plus,omega_minus_or_c_minus,kind_plus,kind_minus";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.mu,
            self.region.label(),
            self.plus.kind.rate(),
            self.minus.kind.rate(),
            self.plus.kind.name(),
            self.minus.kind.name()
        )
    }
}

/// Propagator of a mode pair `(d_ρ, d_ρ†)` in the Heisenberg picture.
///
/// The equations of motion `i d/dt (d, d†)ᵀ = K (d, d†)ᵀ` are generated by
/// `K = 2h^ρ`, and `K² = (μ² + 2ρμ)·1`, so the propagator is
/// `cos(ωt)·1 − i·sin(ωt)/ω·K`, continued analytically through ω² ≤ 0.
pub fn mode_propagator(mu: f64, rho: ModeSign, t: f64) -> Result<[[C64; 2]; 2]> {
    let h = core_matrix(mu, rho)?;
    let z = h.discriminant();
    let (cos_part, sinc_part) = cos_sinc(z, t);
    let k = [[2.0 * h.entries[0][0], 2.0 * h.entries[0][1]], [2.0 * h.entries[1][0], 2.0 * h.entries[1][1]]];
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { cos_part } else { 0.0 };
            m[i][j] = C64::new(id, -sinc_part * k[i][j]);
        }
    }
    Ok(m)
}

/// `(cos(√z·t), sin(√z·t)/√z)` for any real `z`, smooth through `z = 0`.
fn cos_sinc(z: f64, t: f64) -> (f64, f64) {
    let x = z * t * t;
    if x.abs() < 1e-6 {
        // Taylor to fourth order in √z·t
        let c = 1.0 - x / 2.0 + x * x / 24.0;
        let s = t * (1.0 - x / 6.0 + x * x / 120.0);
        (c, s)
    } else if z > 0.0 {
        let w = z.sqrt();
        ((w * t).cos(), (w * t).sin() / w)
    } else {
        let w = (-z).sqrt();
        ((w * t).cosh(), (w * t).sinh() / w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn core_matrix_entries() {
        let h = core_matrix(2.0, ModeSign::Minus).unwrap();
        assert_eq!(h.entries, [[0.5, -0.5], [0.5, -0.5]]);
        let h = core_matrix(0.0, ModeSign::Plus).unwrap();
        assert_eq!(h.entries, [[0.5, 0.5], [-0.5, -0.5]]);
        for mu in [-3.3, -1.0, 0.2, 4.0] {
            for rho in ModeSign::BOTH {
                let h = core_matrix(mu, rho).unwrap();
                assert_eq!(h.trace(), 0.0);
                assert!(close(h.determinant(), -(mu * mu + 2.0 * rho.value() * mu) / 4.0, 1e-14));
            }
        }
        assert!(core_matrix(f64::INFINITY, ModeSign::Plus).is_err());
    }

    /// Independent 2×2 oracle: roots of the characteristic polynomial.
    fn char_poly_roots(h: &CoreMatrix) -> (C64, C64) {
        let tr = h.trace();
        let det = h.determinant();
        let disc = C64::new(tr * tr - 4.0 * det, 0.0).sqrt();
        ((C64::new(tr, 0.0) - disc) / 2.0, (C64::new(tr, 0.0) + disc) / 2.0)
    }

    #[test]
    fn spectrum_examples() {
        let s = core_spectrum(4.0, ModeSign::Plus).unwrap();
        let (r1, r2) = char_poly_roots(&core_matrix(4.0, ModeSign::Plus).unwrap());
        assert!(close(s.lambda[1].re, 2.449_489_742_783_178, 1e-12));
        assert!((s.lambda[0] - r1).norm() < 1e-12 && (s.lambda[1] - r2).norm() < 1e-12);

        let s = core_spectrum(2.0, ModeSign::Minus).unwrap();
        assert_eq!(s.lambda[0], s.lambda[1]);
        assert!(s.lambda[0].norm() == 0.0);
        assert!(s.coalescence <= 1e-12);

        let s = core_spectrum(1.0, ModeSign::Minus).unwrap();
        assert!(close(s.lambda[0].re, 0.0, 0.0) && close(s.lambda[0].im, -0.5, 1e-15));
        assert!(close(s.lambda[1].im, 0.5, 1e-15));
    }

    #[test]
    fn eigenpairs_satisfy_the_eigen_equation() {
        for mu in [-5.0, -2.0, -1.2, -1e-3, 0.0, 0.7, 1.9, 2.0, 3.0, 8.0] {
            for rho in ModeSign::BOTH {
                let h = core_matrix(mu, rho).unwrap();
                let s = core_spectrum(mu, rho).unwrap();
                assert!((s.lambda[0] + s.lambda[1]).norm() < 1e-15);
                assert!(close((s.lambda[0] * s.lambda[1]).re, h.determinant(), 1e-12));
                for k in 0..2 {
                    let hv = h.apply(s.phi[k]);
                    for i in 0..2 {
                        assert!((hv[i] - s.lambda[k] * s.phi[k][i]).norm() < 1e-12);
                    }
                    let n: f64 = s.phi[k].iter().map(|z| z.norm_sqr()).sum();
                    assert!(close(n, 1.0, 1e-14));
                }
                // wedge form agrees with the overlap definition away from the EP
                let ov: C64 = s.phi[0][0].conj() * s.phi[1][0] + s.phi[0][1].conj() * s.phi[1][1];
                let via_overlap = (1.0 - ov.norm_sqr()).max(0.0).sqrt();
                assert!(close(s.coalescence, via_overlap, 1e-7));
                assert_eq!(s.coalescence == 0.0, h.discriminant() == 0.0);
            }
        }
    }

    #[test]
    fn eigenvalues_are_real_outside_and_imaginary_inside() {
        for k in 1..400 {
            let mu = -1.0 + k as f64 * 0.01;
            let s = core_spectrum(mu, ModeSign::Minus).unwrap();
            let inside = mu > 0.0 && mu < 2.0;
            if inside {
                assert_eq!(s.lambda[1].re, 0.0);
                assert!(s.lambda[1].im > 0.0);
            } else if !is_exceptional(mu, ModeSign::Minus) {
                assert_eq!(s.lambda[1].im, 0.0);
            }
        }
    }

    #[test]
    fn locus_and_classification() {
        assert_eq!(ep_locus_for(ModeSign::Minus), vec![0.0, 2.0]);
        assert_eq!(ep_locus_for(ModeSign::Plus), vec![-2.0, 0.0]);
        assert_eq!(phase_boundaries(), vec![-2.0, 0.0, 2.0]);
        for ep in ep_locus() {
            assert_eq!(discriminant(ep.mu, ep.rho), 0.0);
        }
        assert_eq!(classify(3.0).unwrap(), PhaseRegion::OscillatorsAbove);
        assert_eq!(classify(1.0).unwrap(), PhaseRegion::InvertedMinus);
        assert_eq!(classify(-1.0).unwrap(), PhaseRegion::InvertedPlus);
        assert_eq!(classify(-3.0).unwrap(), PhaseRegion::OscillatorsBelow);
        assert!(classify(2.0 + 1e-13).unwrap().is_boundary());
        assert!(!classify(2.0 + 1e-9).unwrap().is_boundary());
    }

    #[test]
    fn classification_changes_only_at_the_locus() {
        let mut prev = classify(-4.0).unwrap();
        let bounds = phase_boundaries();
        for k in 1..=8000 {
            let mu = -4.0 + k as f64 * 1e-3;
            let cur = classify(mu).unwrap();
            if cur.is_boundary() {
                continue;
            }
            if std::mem::discriminant(&cur) != std::mem::discriminant(&prev) {
                let crossed = bounds.iter().any(|&p| p <= mu && p > mu - 2e-3);
                assert!(crossed, "region changed at {mu} away from the locus");
            }
            prev = cur;
        }
    }

    #[test]
    fn normal_form_examples() {
        let f = normal_mode_form(3.0, ModeSign::Minus).unwrap();
        match f.kind {
            ModeKind::Elliptic { omega, r } => {
                assert!(close(omega, 3f64.sqrt(), 1e-15));
                assert!(close((2.0 * r).tanh(), f.beta / f.alpha, 1e-15));
                assert!(close((2.0 * r).tanh(), -0.5, 1e-15));
            }
            other => panic!("expected elliptic, got {other:?}"),
        }
        assert_eq!(f.offset, -0.5);
        let f = normal_mode_form(1.0, ModeSign::Minus).unwrap();
        assert_eq!(f.kind, ModeKind::Hyperbolic { c: 1.0, s: 0.0 });
        assert_eq!(f.signed_rate(), Some(-1.0));
        assert_eq!(normal_mode_form(2.0, ModeSign::Minus).unwrap().kind, ModeKind::Parabolic);
        assert_eq!(normal_mode_form(-2.0, ModeSign::Plus).unwrap().kind, ModeKind::Parabolic);
        assert_eq!(normal_mode_form(-3.0, ModeSign::Plus).unwrap().signed_frequency().map(f64::signum), Some(-1.0));

        let f = normal_mode_form(3.0, ModeSign::Plus).unwrap();
        assert!(close(f.frequency(FrequencyConvention::LevelSpacing), 15f64.sqrt(), 1e-15));
        assert!(close(f.frequency(FrequencyConvention::CoreEigenvalue), 0.5 * 15f64.sqrt(), 1e-15));
    }

    #[test]
    fn hyperbolic_squeeze_parameter() {
        // tanh 2s = α/β stays inside (−1, 1) throughout the inverted region
        for k in 1..200 {
            let mu = k as f64 * 0.01;
            let f = normal_mode_form(mu, ModeSign::Minus).unwrap();
            match f.kind {
                ModeKind::Hyperbolic { c, s } => {
                    assert!(close((2.0 * s).tanh(), f.alpha / f.beta, 1e-12));
                    assert!(close(c, (2.0 * mu - mu * mu).sqrt(), 1e-15));
                }
                other => panic!("mu = {mu}: expected hyperbolic, got {other:?}"),
            }
        }
    }

    #[test]
    fn occupation_and_growth() {
        assert_eq!(analytic_occupation(1.0, 0.0).unwrap(), 0.0);
        assert!(close(analytic_occupation(1.0, 1.0).unwrap(), 1.381_097_845_541_816_3, 1e-12));
        assert!(analytic_occupation(2.0 - 1e-14, 3.0).unwrap() < 1e-10);
        assert!(analytic_occupation(2.5, 1.0).is_err());
        assert!(analytic_occupation(0.0, 1.0).is_err());
        assert!(close(analytic_occupation(-0.5, 1.3).unwrap(), analytic_occupation(0.5, 1.3).unwrap(), 0.0));
        for &(mu, t) in &[(1.0, 0.3), (0.5, 1.0), (1.7, 2.0), (-0.8, 0.9)] {
            let a = analytic_occupation(mu, t).unwrap();
            let b = analytic_occupation_tanh_form(mu, t).unwrap();
            assert!(close(a, b, 1e-10 * a.max(1.0)));
        }

        assert_eq!(growth_rate(1.0).unwrap(), 2.0);
        assert!(close(growth_rate(0.5).unwrap(), 1.732_050_807_568_877_2, 1e-15));
        assert!(growth_rate(2.0 - 1e-12).unwrap() < 1e-5);
        assert!(growth_rate(3.0).is_err());

        // log-slope oracle at late times
        for mu in [1.0, 0.5] {
            let (t1, t2) = (20.0, 21.0);
            let slope = analytic_occupation(mu, t2).unwrap().ln() - analytic_occupation(mu, t1).unwrap().ln();
            assert!(close(slope, growth_rate(mu).unwrap(), 1e-9));
        }
    }

    #[test]
    fn propagator_solves_the_equations_of_motion() {
        // finite-difference check of i dM/dt = K M and M(0) = 1
        for &(mu, rho) in &[(3.0, ModeSign::Minus), (1.0, ModeSign::Minus), (2.0, ModeSign::Minus), (-0.7, ModeSign::Plus), (0.3, ModeSign::Plus)] {
            let h = core_matrix(mu, rho).unwrap();
            let m0 = mode_propagator(mu, rho, 0.0).unwrap();
            assert_eq!(m0, [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]]);
            let t = 0.8;
            let eps = 1e-5;
            let mp = mode_propagator(mu, rho, t + eps).unwrap();
            let mm = mode_propagator(mu, rho, t - eps).unwrap();
            let m = mode_propagator(mu, rho, t).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let deriv = (mp[i][j] - mm[i][j]) / (2.0 * eps);
                    let km: C64 = (0..2).map(|k| 2.0 * h.entries[i][k] * m[k][j]).sum();
                    assert!((C64::new(0.0, 1.0) * deriv - km).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn propagator_is_continuous_through_the_ep() {
        let at = mode_propagator(2.0, ModeSign::Minus, 3.0).unwrap();
        for eps in [1e-9, -1e-9] {
            let near = mode_propagator(2.0 + eps, ModeSign::Minus, 3.0).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!((near[i][j] - at[i][j]).norm() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn phase_rows() {
        let row = PhaseRow::at(1.0).unwrap();
        assert_eq!(row.csv_line(), "1,HO(+)+IHO(-),1.7320508075688772,1,elliptic,hyperbolic");
        assert!(PhaseRow::at(2.0).unwrap().region.is_boundary());
    }
}

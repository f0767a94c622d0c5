//! Exact dynamics through the core matrices.
//!
//! For a quadratic Hamiltonian every ladder operator evolves linearly,
//! `a(t) = u_a a + u_b b + v_a a† + v_b b†`, with coefficients given by the
//! 2×2 mode propagators. A correlator that applies `k` such operators to a
//! state with at most `q` quanta never leaves the sector with `q + k` quanta,
//! so it is evaluated exactly on a Fock space with that cutoff. This gives
//! truncation-free values at any time, including deep in the
//! inverted-oscillator regions where the occupation grows without bound.

use crate::coherence::check_denominators;
use crate::core_matrix::{mode_propagator, ModeSign};
use crate::error::{Error, Result};
use crate::fock::{fock_state, initial_state, mode_operators, Mode, ModeOperators, StateVector, Truncation};
use crate::sparse::{norm_sqr, C64};

/// `c_a·a + c_b·b + c_ad·a† + c_bd·b†`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearLadder {
    pub a: C64,
    pub b: C64,
    pub a_dag: C64,
    pub b_dag: C64,
}

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

impl LinearLadder {
    pub fn lowering(mode: Mode) -> Self {
        match mode {
            Mode::A => LinearLadder { a: ONE, b: ZERO, a_dag: ZERO, b_dag: ZERO },
            Mode::B => LinearLadder { a: ZERO, b: ONE, a_dag: ZERO, b_dag: ZERO },
        }
    }

    /// `cosh θ·d_ρ + sinh θ·d_ρ†` with `d_ρ = (a + ρb)/√2`.
    pub fn rotated_mode(rho: ModeSign, theta: f64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = rho.value();
        let (ch, sh) = (theta.cosh() * s, theta.sinh() * s);
        LinearLadder {
            a: C64::new(ch, 0.0),
            b: C64::new(r * ch, 0.0),
            a_dag: C64::new(sh, 0.0),
            b_dag: C64::new(r * sh, 0.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        LinearLadder {
            a: self.a_dag.conj(),
            b: self.b_dag.conj(),
            a_dag: self.a.conj(),
            b_dag: self.b.conj(),
        }
    }

    fn scaled_add(&self, other: &Self, s: C64) -> Self {
        LinearLadder {
            a: self.a + s * other.a,
            b: self.b + s * other.b,
            a_dag: self.a_dag + s * other.a_dag,
            b_dag: self.b_dag + s * other.b_dag,
        }
    }

    /// Heisenberg-picture operator `e^{iHt} O e^{−iHt}` under `H(μ)`.
    pub fn evolved(&self, mu: f64, t: f64) -> Result<Self> {
        let a_t = heisenberg_lowering(mu, Mode::A, t)?;
        let b_t = heisenberg_lowering(mu, Mode::B, t)?;
        let zero = LinearLadder { a: ZERO, b: ZERO, a_dag: ZERO, b_dag: ZERO };
        Ok(zero
            .scaled_add(&a_t, self.a)
            .scaled_add(&b_t, self.b)
            .scaled_add(&a_t.adjoint(), self.a_dag)
            .scaled_add(&b_t.adjoint(), self.b_dag))
    }

    pub fn apply(&self, ops: &ModeOperators, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; psi.len()];
        for (coef, op) in [(self.a, &ops.a), (self.b, &ops.b), (self.a_dag, &ops.a_dag), (self.b_dag, &ops.b_dag)] {
            if coef == ZERO {
                continue;
            }
            for (o, v) in out.iter_mut().zip(op.apply(psi)) {
                *o += coef * v;
            }
        }
        out
    }
}

/// `a(t)` or `b(t)` expanded in Schrödinger-picture ladder operators.
pub fn heisenberg_lowering(mu: f64, mode: Mode, t: f64) -> Result<LinearLadder> {
    let mut out = LinearLadder { a: ZERO, b: ZERO, a_dag: ZERO, b_dag: ZERO };
    for rho in ModeSign::BOTH {
        let r = rho.value();
        // a = (d₊ + d₋)/√2, b = (d₊ − d₋)/√2
        let weight = match mode {
            Mode::A => 0.5,
            Mode::B => 0.5 * r,
        };
        let m = mode_propagator(mu, rho, t)?;
        // d_ρ(t) = m00 d_ρ + m01 d_ρ†
        out.a += weight * m[0][0];
        out.b += weight * r * m[0][0];
        out.a_dag += weight * m[0][1];
        out.b_dag += weight * r * m[0][1];
    }
    Ok(out)
}

/// Initial states supported by the exact evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BareState {
    /// `(|1,0⟩ + |0,1⟩)/√2`.
    SymmetricSingle,
    /// `|m, n⟩`.
    Fock(usize, usize),
}

impl BareState {
    fn quanta(&self) -> usize {
        match *self {
            BareState::SymmetricSingle => 1,
            BareState::Fock(m, n) => m + n,
        }
    }
}

/// Exact correlator evaluator for one value of μ.
#[derive(Clone, Debug)]
pub struct NambuEngine {
    mu: f64,
    ops: ModeOperators,
    psi0: StateVector,
}

/// Maximum number of ladder operators applied in one correlator.
const MAX_APPLICATIONS: usize = 2;

impl NambuEngine {
    pub fn new(mu: f64, state: BareState) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::Domain(format!("mu must be finite, got {mu}")));
        }
        let n_max = (state.quanta() + MAX_APPLICATIONS).max(2);
        let truncation = Truncation::new(n_max, 1)?;
        let psi0 = match state {
            BareState::SymmetricSingle => initial_state(&truncation)?,
            BareState::Fock(m, n) => fock_state(m, n, &truncation)?,
        };
        Ok(NambuEngine {
            mu,
            ops: mode_operators(&truncation)?,
            psi0,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `⟨ψ₀| O(t)† O(t) |ψ₀⟩` for a linear ladder combination `O`.
    pub fn occupation(&self, op: &LinearLadder, t: f64) -> Result<f64> {
        let o_t = op.evolved(self.mu, t)?;
        Ok(norm_sqr(&o_t.apply(&self.ops, self.psi0.amplitudes())))
    }

    /// `g²(t₁, t₂)` of mode `a` for the engine's initial state.
    pub fn g2(&self, t1: f64, t2: f64) -> Result<f64> {
        self.g2_parts(t1, t2)?.checked()
    }

    pub(crate) fn g2_parts(&self, t1: f64, t2: f64) -> Result<G2Parts> {
        if !(t1 >= 0.0 && t2 >= 0.0) {
            return Err(Error::Domain(format!("times must be non-negative, got ({t1}, {t2})")));
        }
        let a_early = heisenberg_lowering(self.mu, Mode::A, t2)?;
        let a_late = heisenberg_lowering(self.mu, Mode::A, t1 + t2)?;
        let psi = self.psi0.amplitudes();
        let x = a_early.apply(&self.ops, psi);
        let numerator = norm_sqr(&a_late.apply(&self.ops, &x));
        let d1 = norm_sqr(&a_late.apply(&self.ops, psi));
        let d2 = norm_sqr(&x);
        Ok(G2Parts { numerator, d1, d2 })
    }
}

/// Numerator and the two denominator factors of a `g²` evaluation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct G2Parts {
    pub numerator: f64,
    pub d1: f64,
    pub d2: f64,
}

impl G2Parts {
    pub fn checked(self) -> Result<f64> {
        check_denominators(self.d1, self.d2)?;
        Ok(self.value())
    }

    pub fn value(self) -> f64 {
        self.numerator / (self.d1 * self.d2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowering_at_time_zero_is_identity() {
        let l = heisenberg_lowering(1.3, Mode::A, 0.0).unwrap();
        assert_eq!(l, LinearLadder::lowering(Mode::A));
        let l = heisenberg_lowering(-0.4, Mode::B, 0.0).unwrap();
        assert!((l.b - ONE).norm() < 1e-15 && l.a.norm() < 1e-15);
    }

    #[test]
    fn canonical_commutator_is_preserved() {
        // [a(t), a(t)†] = |u_a|² + |u_b|² − |v_a|² − |v_b|² = 1 for a Bogoliubov map
        for mu in [-2.5, -1.0, 0.5, 2.0, 3.0] {
            for t in [0.3, 1.7, 6.0] {
                let l = heisenberg_lowering(mu, Mode::A, t).unwrap();
                let c = l.a.norm_sqr() + l.b.norm_sqr() - l.a_dag.norm_sqr() - l.b_dag.norm_sqr();
                assert!((c - 1.0).abs() < 1e-9 * l.a_dag.norm_sqr().max(1.0), "mu {mu} t {t}: {c}");
            }
        }
    }

    #[test]
    fn coincident_g2_vanishes_for_one_quantum() {
        let e = NambuEngine::new(1.0, BareState::SymmetricSingle).unwrap();
        let parts = e.g2_parts(0.0, 0.0).unwrap();
        assert_eq!(parts.numerator, 0.0);
        assert!((parts.d1 * parts.d2 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn vacuum_occupation_of_the_inverted_mode() {
        // μ = 1: d₋ is a pure squeezer with rate 1, starting from its vacuum
        let e = NambuEngine::new(1.0, BareState::Fock(0, 0)).unwrap();
        let d_minus = LinearLadder::rotated_mode(ModeSign::Minus, 0.0);
        for t in [0.5, 2.0, 5.0] {
            let n = e.occupation(&d_minus, t).unwrap();
            let expect = (t as f64).sinh().powi(2);
            assert!((n / expect - 1.0).abs() < 1e-12);
        }
    }
}

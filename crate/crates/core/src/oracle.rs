//! Independent reference computations used to check the main code paths.
//!
//! Everything here is dense and slow on purpose: propagators come from a
//! scaled Taylor series instead of the eigendecomposition, and `g²` is
//! evaluated from the literal four-operator expectation value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coherence::g2_truncated_model;
use crate::dynamics::diagonalize;
use crate::error::Result;
use crate::fock::{build_dimer_hamiltonian, initial_state, mode_operators, StateVector, Truncation};
use crate::sparse::{CsrMatrix, C64};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_sparse(s: &CsrMatrix) -> Self {
        let mut m = Self::zeros(s.dim());
        for (r, c, v) in s.iter() {
            m.data[r * m.n + c] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.n + c]
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.data[i * n + k];
                if x == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += x * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.data[i * self.n + j] * v[j]).sum())
            .collect()
    }

    /// Max row sum of absolute values.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.data[i * self.n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// `exp(−iHt)` by scaling and squaring a Taylor series.
pub fn dense_propagator(h: &CsrMatrix, t: f64) -> DenseMatrix {
    let gen = DenseMatrix::from_sparse(h).scale(C64::new(0.0, -t));
    let norm = gen.norm_inf();
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let x = gen.scale(C64::new(0.5f64.powi(squarings as i32), 0.0));
    let mut sum = DenseMatrix::identity(h.dim());
    let mut term = DenseMatrix::identity(h.dim());
    for k in 1..=24 {
        term = term.mul(&x).scale(C64::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
    }
    for _ in 0..squarings {
        sum = sum.mul(&sum);
    }
    sum
}

/// `g²(t₁, t₂) = ⟨a† a†(t₁) a(t₁) a⟩ / (⟨a†(t₁) a(t₁)⟩ ⟨a† a⟩)` in `ψ(t₂)`,
/// with every Heisenberg operator formed as a dense matrix.
pub fn literal_g2(h: &CsrMatrix, a: &CsrMatrix, psi0: &[C64], t1: f64, t2: f64) -> f64 {
    let a = DenseMatrix::from_sparse(a);
    let ad = a.adjoint();
    let u1 = dense_propagator(h, t1);
    let a_t1 = u1.adjoint().mul(&a).mul(&u1);
    let ad_t1 = a_t1.adjoint();
    let psi = dense_propagator(h, t2).matvec(psi0);
    let expect = |m: &DenseMatrix| -> f64 {
        let mv = m.matvec(&psi);
        psi.iter().zip(&mv).map(|(x, y)| x.conj() * y).sum::<C64>().re
    };
    let four = ad.mul(&ad_t1).mul(&a_t1).mul(&a);
    expect(&four) / (expect(&ad_t1.mul(&a_t1)) * expect(&ad.mul(&a)))
}

/// One randomized factorized-vs-literal comparison.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct G2Trial {
    pub n_max: usize,
    pub mu: f64,
    pub t1: f64,
    pub t2: f64,
    pub factorized: f64,
    pub literal: f64,
}

impl G2Trial {
    pub fn abs_diff(&self) -> f64 {
        (self.factorized - self.literal).abs()
    }
}

/// Random instances with `n_max ∈ [3, 8]`, `μ ∈ [−3, 3]`, `t₁, t₂ ∈ [0, 2]`.
pub fn g2_equivalence_trials(count: usize, seed: u64) -> Result<Vec<G2Trial>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let n_max = rng.gen_range(3..=8);
        let mu = rng.gen_range(-3.0..=3.0);
        let t1 = rng.gen_range(0.0..=2.0);
        let t2 = rng.gen_range(0.0..=2.0);
        let tr = Truncation::with_n_max(n_max)?;
        let h = build_dimer_hamiltonian(mu, &tr)?;
        let spec = diagonalize(&h)?;
        let a = mode_operators(&tr)?.a;
        let psi0 = initial_state(&tr)?;
        let factorized = g2_truncated_model(&spec, &a, &psi0, t1, t2)?;
        let literal = literal_g2(h.matrix(), a.matrix(), psi0.amplitudes(), t1, t2);
        out.push(G2Trial {
            n_max,
            mu,
            t1,
            t2,
            factorized,
            literal,
        });
    }
    Ok(out)
}

/// Fundamental frequencies in a spectrum: the lowest excitation, then each
/// next-lowest excitation that is not a non-negative integer combination of
/// those already found (within `tol`).
pub fn fundamental_spacings(eigenvalues: &[f64], count: usize, tol: f64) -> Vec<f64> {
    let Some(&e0) = eigenvalues.first() else { return vec![] };
    let mut found: Vec<f64> = Vec::new();
    for &e in &eigenvalues[1..] {
        if found.len() == count {
            break;
        }
        let gap = e - e0;
        if gap <= tol || is_combination(gap, &found, tol) {
            continue;
        }
        found.push(gap);
    }
    found
}

fn is_combination(x: f64, basis: &[f64], tol: f64) -> bool {
    match basis.split_first() {
        None => x.abs() <= tol,
        Some((&w, rest)) => {
            let mut k = 0.0;
            while k * w <= x + tol {
                if is_combination(x - k * w, rest, tol) {
                    return true;
                }
                k += 1.0;
            }
            false
        }
    }
}

/// Least-squares slope of `ln y` against `t`.
pub fn log_slope(t: &[f64], y: &[f64]) -> f64 {
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(t, &ly).1
}

/// Least-squares exponent `p` of `y ∝ x^p`.
pub fn power_law_exponent(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).1
}

/// `(intercept, slope)` of an ordinary least-squares line.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    (ym - slope * xm, slope)
}

/// `⟨ψ|O|ψ⟩` with a dense operator.
pub fn dense_expectation(m: &DenseMatrix, psi: &StateVector) -> C64 {
    let v = m.matvec(psi.amplitudes());
    psi.amplitudes().iter().zip(&v).map(|(x, y)| x.conj() * y).sum()
}

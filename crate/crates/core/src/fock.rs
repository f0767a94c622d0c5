//! Truncated two-mode bosonic Fock space.
//!
//! States `|m, n⟩` (mode `a` holds `m` quanta, mode `b` holds `n`) with
//! `m, n ≤ n_max` are laid out row-major with mode `a` outer:
//! `index(m, n) = m·(n_max + 1) + n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{inner, norm_sqr, CsrMatrix, C64};

/// Edge-band probability above which a warning is logged.
pub const LEAKAGE_WARN: f64 = 1e-8;
/// Edge-band probability above which results are withheld.
pub const LEAKAGE_ERROR: f64 = 1e-4;

/// Default dense-allocation budget: 2^28 entries (2 GiB of `f64`).
pub const DEFAULT_DENSE_BUDGET: u128 = 1 << 28;

const HERMITIAN_TOL: f64 = 1e-12;

/// Per-mode occupation cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    n_max: usize,
    margin: usize,
    dense_budget: u128,
}

impl Truncation {
    pub fn new(n_max: usize, margin: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::Domain("n_max must be at least 1".into()));
        }
        if margin < 1 || margin >= n_max {
            return Err(Error::Domain(format!(
                "margin must satisfy 1 <= margin < n_max, got margin = {margin}, n_max = {n_max}"
            )));
        }
        Ok(Truncation {
            n_max,
            margin,
            dense_budget: DEFAULT_DENSE_BUDGET,
        })
    }

    /// Cutoff with the default edge band of two levels (one level when
    /// `n_max` is too small for two).
    pub fn with_n_max(n_max: usize) -> Result<Self> {
        let margin = if n_max > 2 { 2 } else { 1 };
        if n_max == 1 {
            // margin < n_max cannot hold; a one-level edge band is the whole space
            return Err(Error::Domain("n_max = 1 needs an explicit margin; use Truncation::minimal".into()));
        }
        Self::new(n_max, margin)
    }

    /// The `n_max = 1` space, which has no interior. Leakage is always 1 for
    /// excited states here; use only for matrix-element checks.
    pub fn minimal() -> Self {
        Truncation {
            n_max: 1,
            margin: 1,
            dense_budget: DEFAULT_DENSE_BUDGET,
        }
    }

    pub fn with_dense_budget(mut self, entries: u128) -> Self {
        self.dense_budget = entries;
        self
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn dense_budget(&self) -> u128 {
        self.dense_budget
    }

    pub fn local_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        self.local_dim() * self.local_dim()
    }

    pub fn indexer(&self) -> FockIndexer {
        FockIndexer { truncation: *self }
    }

    /// Fails with a resource error when a dense `dim × dim` matrix would not
    /// fit in the budget.
    pub fn check_dense_budget(&self) -> Result<()> {
        let entries = (self.dim() as u128) * (self.dim() as u128);
        if entries > self.dense_budget {
            return Err(Error::Resource {
                entries,
                budget: self.dense_budget,
            });
        }
        Ok(())
    }

    /// True when `|m, n⟩` sits inside the edge band.
    pub fn in_edge_band(&self, m: usize, n: usize) -> bool {
        let lo = self.n_max - self.margin;
        m >= lo || n >= lo
    }
}

/// Bijection between occupations `(m, n)` and flat indices.
#[derive(Clone, Copy, Debug)]
pub struct FockIndexer {
    truncation: Truncation,
}

impl FockIndexer {
    pub fn index(&self, m: usize, n: usize) -> Option<usize> {
        let d = self.truncation.local_dim();
        (m < d && n < d).then_some(m * d + n)
    }

    pub fn occupations(&self, i: usize) -> Option<(usize, usize)> {
        let d = self.truncation.local_dim();
        (i < d * d).then_some((i / d, i % d))
    }

    pub fn dim(&self) -> usize {
        self.truncation.dim()
    }
}

#[inline]
fn occupations(tr: &Truncation, i: usize) -> (usize, usize) {
    (i / tr.local_dim(), i % tr.local_dim())
}

/// How an operator acts on the eigenspaces of the number parity
/// `Π = (−1)^(n_a + n_b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParityAction {
    Preserving,
    Flipping,
    Mixed,
}

/// A sparse operator on a truncated two-mode space.
#[derive(Clone, Debug)]
pub struct BosonOperator {
    truncation: Truncation,
    matrix: CsrMatrix,
    hermitian: bool,
    parity: ParityAction,
}

impl BosonOperator {
    /// Wraps a matrix without any Hermiticity claim.
    pub fn general(truncation: Truncation, matrix: CsrMatrix) -> Self {
        assert_eq!(matrix.dim(), truncation.dim());
        let parity = parity_action(&truncation, &matrix);
        BosonOperator {
            truncation,
            matrix,
            hermitian: false,
            parity,
        }
    }

    /// Wraps a matrix and sets the Hermitian flag after checking
    /// `max |M − M†| ≤ 1e−12`.
    pub fn hermitian(truncation: Truncation, matrix: CsrMatrix) -> Result<Self> {
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::Contract(format!(
                "matrix is not Hermitian: max |M - M^dag| = {defect:.3e}"
            )));
        }
        let mut op = Self::general(truncation, matrix);
        op.hermitian = true;
        Ok(op)
    }

    /// Sets the Hermitian flag without checking it. Downstream consumers
    /// re-verify the flag; this exists to build negative controls.
    pub fn assume_hermitian_unchecked(truncation: Truncation, matrix: CsrMatrix) -> Self {
        let mut op = Self::general(truncation, matrix);
        op.hermitian = true;
        op
    }

    pub fn truncation(&self) -> &Truncation {
        &self.truncation
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn parity(&self) -> ParityAction {
        self.parity
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        self.matrix.matvec(psi)
    }

    pub fn adjoint(&self) -> Self {
        let mut op = Self::general(self.truncation, self.matrix.adjoint());
        op.hermitian = self.hermitian;
        op
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::general(self.truncation, self.matrix.mul(&other.matrix))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut op = Self::general(self.truncation, self.matrix.add(&other.matrix));
        op.hermitian = self.hermitian && other.hermitian;
        op
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut op = Self::general(self.truncation, self.matrix.scale_real(s));
        op.hermitian = self.hermitian;
        op
    }

    /// `O†O`, Hermitian by construction.
    pub fn gram(&self) -> Self {
        let mut op = self.adjoint().mul(self);
        op.hermitian = true;
        op
    }

    /// Re-checks the Hermitian flag against the stored entries.
    pub fn verify_hermitian(&self) -> Result<()> {
        if !self.hermitian {
            return Err(Error::Contract("operator is not flagged Hermitian".into()));
        }
        let defect = self.matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::Contract(format!(
                "operator flagged Hermitian but max |M - M^dag| = {defect:.3e}"
            )));
        }
        Ok(())
    }

    /// Max-norm of `[self, other]`.
    pub fn commutator_norm(&self, other: &Self) -> f64 {
        self.matrix.commutator(&other.matrix).max_abs()
    }

    pub fn expectation(&self, psi: &StateVector) -> C64 {
        inner(psi.amplitudes(), &self.apply(psi.amplitudes()))
    }
}

fn parity_action(tr: &Truncation, m: &CsrMatrix) -> ParityAction {
    let mut preserving = false;
    let mut flipping = false;
    for (r, c, _) in m.iter() {
        let (mr, nr) = occupations(tr, r);
        let (mc, nc) = occupations(tr, c);
        if (mr + nr) % 2 == (mc + nc) % 2 {
            preserving = true;
        } else {
            flipping = true;
        }
    }
    match (preserving, flipping) {
        (_, false) => ParityAction::Preserving,
        (false, true) => ParityAction::Flipping,
        (true, true) => ParityAction::Mixed,
    }
}

/// Ladder, number and parity operators of both modes.
#[derive(Clone, Debug)]
pub struct ModeOperators {
    pub a: BosonOperator,
    pub a_dag: BosonOperator,
    pub b: BosonOperator,
    pub b_dag: BosonOperator,
    pub n_a: BosonOperator,
    pub n_b: BosonOperator,
    pub parity: BosonOperator,
}

/// Which of the two physical modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

fn lowering(tr: &Truncation, mode: Mode) -> CsrMatrix {
    let idx = tr.indexer();
    let d = tr.local_dim();
    let mut triplets = Vec::with_capacity(d * d);
    for m in 0..d {
        for n in 0..d {
            let col = idx.index(m, n).unwrap();
            match mode {
                Mode::A if m > 0 => {
                    triplets.push((idx.index(m - 1, n).unwrap(), col, C64::new((m as f64).sqrt(), 0.0)))
                }
                Mode::B if n > 0 => {
                    triplets.push((idx.index(m, n - 1).unwrap(), col, C64::new((n as f64).sqrt(), 0.0)))
                }
                _ => {}
            }
        }
    }
    CsrMatrix::from_triplets(tr.dim(), triplets)
}

fn diagonal(tr: &Truncation, f: impl Fn(usize, usize) -> f64) -> CsrMatrix {
    let idx = tr.indexer();
    let d = tr.local_dim();
    let mut triplets = Vec::with_capacity(d * d);
    for m in 0..d {
        for n in 0..d {
            let i = idx.index(m, n).unwrap();
            triplets.push((i, i, C64::new(f(m, n), 0.0)));
        }
    }
    CsrMatrix::from_triplets(tr.dim(), triplets)
}

/// Truncated ladder operators. `a|m, n⟩ = √m |m−1, n⟩`; `a†` annihilates
/// the `m = n_max` sector, so `[a, a†] = 1` holds everywhere except there.
pub fn mode_operators(tr: &Truncation) -> Result<ModeOperators> {
    tr.check_dense_budget()?;
    let a = BosonOperator::general(*tr, lowering(tr, Mode::A));
    let b = BosonOperator::general(*tr, lowering(tr, Mode::B));
    let a_dag = a.adjoint();
    let b_dag = b.adjoint();
    let n_a = BosonOperator::hermitian(*tr, diagonal(tr, |m, _| m as f64))?;
    let n_b = BosonOperator::hermitian(*tr, diagonal(tr, |_, n| n as f64))?;
    let parity = BosonOperator::hermitian(
        *tr,
        diagonal(tr, |m, n| if (m + n) % 2 == 0 { 1.0 } else { -1.0 }),
    )?;
    Ok(ModeOperators {
        a,
        a_dag,
        b,
        b_dag,
        n_a,
        n_b,
        parity,
    })
}

impl ModeOperators {
    pub fn lowering(&self, mode: Mode) -> &BosonOperator {
        match mode {
            Mode::A => &self.a,
            Mode::B => &self.b,
        }
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if !mu.is_finite() {
        return Err(Error::Domain(format!("mu must be finite, got {mu}")));
    }
    Ok(())
}

/// `H = (a† + a)(b† + b) + μ(a†a + b†b)`, assembled from its matrix elements.
pub fn build_dimer_hamiltonian(mu: f64, tr: &Truncation) -> Result<BosonOperator> {
    check_mu(mu)?;
    tr.check_dense_budget()?;
    let idx = tr.indexer();
    let d = tr.local_dim() as isize;
    let mut triplets = Vec::with_capacity(5 * tr.dim());
    for m in 0..d {
        for n in 0..d {
            let col = idx.index(m as usize, n as usize).unwrap();
            triplets.push((col, col, C64::new(mu * (m + n) as f64, 0.0)));
            for dm in [-1isize, 1] {
                for dn in [-1isize, 1] {
                    let (m2, n2) = (m + dm, n + dn);
                    if m2 < 0 || n2 < 0 || m2 >= d || n2 >= d {
                        continue;
                    }
                    // ⟨m2|x|m⟩ = √max(m, m2) for |m2 − m| = 1
                    let amp = (m.max(m2) as f64).sqrt() * (n.max(n2) as f64).sqrt();
                    let row = idx.index(m2 as usize, n2 as usize).unwrap();
                    triplets.push((row, col, C64::new(amp, 0.0)));
                }
            }
        }
    }
    BosonOperator::hermitian(*tr, CsrMatrix::from_triplets(tr.dim(), triplets))
}

/// `H₀ = a†b† + ab + μ(a†a + b†b)`: the pairing-only variant.
pub fn build_pairing_hamiltonian(mu: f64, tr: &Truncation) -> Result<BosonOperator> {
    check_mu(mu)?;
    tr.check_dense_budget()?;
    let idx = tr.indexer();
    let d = tr.local_dim();
    let mut triplets = Vec::with_capacity(3 * tr.dim());
    for m in 0..d {
        for n in 0..d {
            let col = idx.index(m, n).unwrap();
            triplets.push((col, col, C64::new(mu * (m + n) as f64, 0.0)));
            if m + 1 < d && n + 1 < d {
                let amp = (((m + 1) * (n + 1)) as f64).sqrt();
                triplets.push((idx.index(m + 1, n + 1).unwrap(), col, C64::new(amp, 0.0)));
            }
            if m > 0 && n > 0 {
                let amp = ((m * n) as f64).sqrt();
                triplets.push((idx.index(m - 1, n - 1).unwrap(), col, C64::new(amp, 0.0)));
            }
        }
    }
    BosonOperator::hermitian(*tr, CsrMatrix::from_triplets(tr.dim(), triplets))
}

/// Symmetric and antisymmetric modes `d± = (a ± b)/√2`.
#[derive(Clone, Debug)]
pub struct DpmOperators {
    pub d_plus: BosonOperator,
    pub d_minus: BosonOperator,
}

impl DpmOperators {
    /// `d_ρ` for `ρ = +1` or `−1`.
    pub fn for_sign(&self, rho: f64) -> &BosonOperator {
        if rho > 0.0 {
            &self.d_plus
        } else {
            &self.d_minus
        }
    }
}

pub fn build_dpm_operators(tr: &Truncation) -> Result<DpmOperators> {
    let ops = mode_operators(tr)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(DpmOperators {
        d_plus: ops.a.add(&ops.b).scale(s),
        d_minus: ops.a.add(&ops.b.scale(-1.0)).scale(s),
    })
}

/// A normalized state on a truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    norm: f64,
}

impl StateVector {
    /// Normalizes `amplitudes`; fails for the zero vector.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = norm_sqr(&amplitudes).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        let amplitudes: Vec<C64> = amplitudes.into_iter().map(|z| z / norm).collect();
        let norm = norm_sqr(&amplitudes).sqrt();
        Ok(StateVector { amplitudes, norm })
    }

    /// Wraps amplitudes already known to be normalized, checking the
    /// `|‖ψ‖ − 1| ≤ 1e−10` contract.
    pub fn from_normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = norm_sqr(&amplitudes).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Numeric(format!("state norm drifted to {norm}")));
        }
        Ok(StateVector { amplitudes, norm })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn overlap(&self, other: &StateVector) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }
}

pub fn fock_state(m: usize, n: usize, tr: &Truncation) -> Result<StateVector> {
    let i = tr.indexer().index(m, n).ok_or_else(|| {
        Error::Domain(format!("occupation ({m}, {n}) exceeds n_max = {}", tr.n_max()))
    })?;
    let mut amps = vec![C64::new(0.0, 0.0); tr.dim()];
    amps[i] = C64::new(1.0, 0.0);
    StateVector::from_normalized(amps)
}

/// `(|1, 0⟩ + |0, 1⟩)/√2`, one quantum in the symmetric mode.
pub fn initial_state(tr: &Truncation) -> Result<StateVector> {
    let idx = tr.indexer();
    let mut amps = vec![C64::new(0.0, 0.0); tr.dim()];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    amps[idx.index(1, 0).unwrap()] = C64::new(s, 0.0);
    amps[idx.index(0, 1).unwrap()] = C64::new(s, 0.0);
    StateVector::from_normalized(amps)
}

/// Symmetric tridiagonal matrix of `H₀` restricted to `span{|l, l⟩}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainMatrix {
    /// `⟨l|H₀|l⟩`, length `L + 1`.
    pub diagonal: Vec<f64>,
    /// `⟨l+1|H₀|l⟩`, length `L`.
    pub off_diagonal: Vec<f64>,
}

impl ChainMatrix {
    pub fn size(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut out = vec![vec![0.0; n]; n];
        for l in 0..n {
            out[l][l] = self.diagonal[l];
        }
        for (l, &v) in self.off_diagonal.iter().enumerate() {
            out[l + 1][l] = v;
            out[l][l + 1] = v;
        }
        out
    }
}

/// Projects the pairing Hamiltonian onto the pair states `|l⟩ = |l, l⟩`,
/// `l = 0..=L`, by reading matrix elements of the assembled sparse operator.
///
/// Fails if the projected block is not tridiagonal.
pub fn chain_projection(mu: f64, chain_len: usize, tr: &Truncation) -> Result<ChainMatrix> {
    if chain_len >= tr.n_max() {
        return Err(Error::Domain(format!(
            "chain length L = {chain_len} must be below n_max = {}",
            tr.n_max()
        )));
    }
    let h0 = build_pairing_hamiltonian(mu, tr)?;
    let idx = tr.indexer();
    let pair = |l: usize| idx.index(l, l).unwrap();
    let n = chain_len + 1;
    let mut diagonal = Vec::with_capacity(n);
    let mut off_diagonal = Vec::with_capacity(chain_len);
    for l in 0..n {
        for lp in 0..n {
            let v = h0.matrix().get(pair(lp), pair(l));
            if v.im != 0.0 {
                return Err(Error::Numeric("complex chain element".into()));
            }
            match lp as isize - l as isize {
                0 => diagonal.push(v.re),
                1 => off_diagonal.push(v.re),
                -1 => {}
                _ if v.re != 0.0 => {
                    return Err(Error::Numeric(format!(
                        "projection not tridiagonal at ({lp}, {l})"
                    )))
                }
                _ => {}
            }
        }
    }
    Ok(ChainMatrix {
        diagonal,
        off_diagonal,
    })
}

/// Probability carried by states with `m ≥ n_max − margin` or
/// `n ≥ n_max − margin`, relative to the state's squared norm.
pub fn leakage_of(amplitudes: &[C64], tr: &Truncation) -> f64 {
    let total = norm_sqr(amplitudes);
    if total == 0.0 {
        return 0.0;
    }
    let edge: f64 = amplitudes
        .iter()
        .enumerate()
        .filter(|&(i, _)| {
            let (m, n) = occupations(tr, i);
            tr.in_edge_band(m, n)
        })
        .map(|(_, z)| z.norm_sqr())
        .sum();
    (edge / total).clamp(0.0, 1.0)
}

pub fn leakage(state: &StateVector, tr: &Truncation) -> f64 {
    leakage_of(state.amplitudes(), tr)
}

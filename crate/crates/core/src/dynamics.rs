//! Exact diagonalization and unitary evolution on the truncated space.
//!
//! The Hamiltonian conserves number parity, so it is diagonalized one parity
//! block at a time. All dimer operators are real, and so is every
//! eigenbasis; complex amplitudes are propagated as two real vectors.

use faer::{Col, Mat, Side};
use serde::{Deserialize, Serialize};

use crate::core_matrix::{classify, normal_mode_form, ModeSign};
use crate::error::{Error, Result};
use crate::fock::{
    build_dpm_operators, leakage_of, BosonOperator, ParityAction, StateVector, Truncation, LEAKAGE_ERROR,
    LEAKAGE_WARN,
};
use crate::grid::TimeGrid;
use crate::sparse::{inner, norm_sqr, C64};

/// Accuracy contract of a decomposition, relative to `‖H‖_max·dim`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Allowed deviation of `VᵀV` from the identity.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
/// Allowed deviation of the evolved norm from one.
pub const NORM_TOL: f64 = 1e-10;
/// Largest residual occupation accepted for a quasiparticle vacuum.
pub const VACUUM_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
struct Block {
    /// Global basis indices of this block.
    indices: Vec<usize>,
    energies: Vec<f64>,
    vectors: Mat<f64>,
}

/// Eigen-decomposition of a Hermitian operator, stored per parity block.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    truncation: Truncation,
    dim: usize,
    blocks: Vec<Block>,
    /// Ascending eigenvalues with their `(block, column)` location.
    order: Vec<(f64, usize, usize)>,
    residual: f64,
    orthonormality: f64,
    scale: f64,
}

/// Diagonalizes a Hermitian operator with real matrix elements.
///
/// Eigenvalues come out ascending; degenerate levels are ordered by parity
/// block (even first) and then by solver column. Each eigenvector is signed
/// so that its largest-magnitude component is positive.
pub fn diagonalize(h: &BosonOperator) -> Result<SpectralDecomposition> {
    h.verify_hermitian()?;
    let imag = h.matrix().max_imag();
    if imag > 0.0 {
        return Err(Error::Contract(format!(
            "complex matrix elements (max |Im| = {imag:.3e}) are not supported"
        )));
    }
    let tr = *h.truncation();
    tr.check_dense_budget()?;
    let dim = h.dim();
    let indexer = tr.indexer();

    let sectors: Vec<Vec<usize>> = match h.parity() {
        ParityAction::Preserving => {
            let mut even = Vec::new();
            let mut odd = Vec::new();
            for i in 0..dim {
                let (m, n) = indexer.occupations(i).expect("index in range");
                if (m + n) % 2 == 0 {
                    even.push(i);
                } else {
                    odd.push(i);
                }
            }
            vec![even, odd]
        }
        _ => vec![(0..dim).collect()],
    };

    let scale = h.matrix().max_abs();
    let mut blocks = Vec::with_capacity(sectors.len());
    let mut residual: f64 = 0.0;
    let mut orthonormality: f64 = 0.0;
    let mut local = vec![usize::MAX; dim];
    for indices in sectors.into_iter().filter(|s| !s.is_empty()) {
        for (k, &g) in indices.iter().enumerate() {
            local[g] = k;
        }
        let n = indices.len();
        // block entries as (local row, local col, value)
        let mut entries = Vec::new();
        for (k, &g) in indices.iter().enumerate() {
            for (c, v) in h.matrix().row(g) {
                let lc = local[c];
                if lc == usize::MAX {
                    return Err(Error::Contract("operator couples parity sectors".into()));
                }
                entries.push((k, lc, v.re));
            }
        }
        let mut dense = Mat::<f64>::zeros(n, n);
        for &(r, c, v) in &entries {
            dense[(r, c)] = v;
        }
        let evd = dense
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numeric(format!("eigensolver failed on a block of size {n}: {e:?}")))?;
        let energies: Vec<f64> = evd.S().column_vector().iter().copied().collect();
        let mut vectors = evd.U().to_owned();
        fix_signs(&mut vectors);

        residual = residual.max(block_residual(&entries, &energies, &vectors));
        orthonormality = orthonormality.max(orthonormality_defect(&vectors));
        for &g in &indices {
            local[g] = usize::MAX;
        }
        blocks.push(Block {
            indices,
            energies,
            vectors,
        });
    }

    let mut order: Vec<(f64, usize, usize)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, blk)| blk.energies.iter().enumerate().map(move |(k, &e)| (e, b, k)))
        .collect();
    order.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let spec = SpectralDecomposition {
        truncation: tr,
        dim,
        blocks,
        order,
        residual,
        orthonormality,
        scale,
    };
    spec.check_contract()?;
    Ok(spec)
}

fn fix_signs(v: &mut Mat<f64>) {
    for j in 0..v.ncols() {
        let mut best = 0.0f64;
        let mut sign = 1.0;
        for i in 0..v.nrows() {
            let x = v[(i, j)];
            // first index wins among equal magnitudes
            if x.abs() > best {
                best = x.abs();
                sign = x.signum();
            }
        }
        if sign < 0.0 {
            for i in 0..v.nrows() {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
}

fn block_residual(entries: &[(usize, usize, f64)], energies: &[f64], v: &Mat<f64>) -> f64 {
    let n = energies.len();
    let mut worst: f64 = 0.0;
    let mut hv = vec![0.0; n];
    for k in 0..n {
        hv.iter_mut().for_each(|x| *x = 0.0);
        for &(r, c, val) in entries {
            hv[r] += val * v[(c, k)];
        }
        let r2: f64 = (0..n).map(|i| (hv[i] - energies[k] * v[(i, k)]).powi(2)).sum();
        worst = worst.max(r2.sqrt());
    }
    worst
}

fn orthonormality_defect(v: &Mat<f64>) -> f64 {
    let g = v.transpose() * v;
    let mut worst: f64 = 0.0;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Expansion of a state in the eigenbasis, split into real and imaginary parts.
#[derive(Clone, Debug)]
pub struct ModalState {
    parts: Vec<(Col<f64>, Col<f64>)>,
}

impl SpectralDecomposition {
    fn check_contract(&self) -> Result<()> {
        let bound = RESIDUAL_TOL * self.scale.max(f64::MIN_POSITIVE) * self.dim as f64;
        if self.residual > bound {
            return Err(Error::Numeric(format!(
                "eigen-residual {:.3e} exceeds {bound:.3e}",
                self.residual
            )));
        }
        if self.orthonormality > ORTHONORMALITY_TOL {
            return Err(Error::Numeric(format!(
                "eigenvectors deviate from orthonormality by {:.3e}",
                self.orthonormality
            )));
        }
        Ok(())
    }

    pub fn truncation(&self) -> &Truncation {
        &self.truncation
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.order.iter().map(|o| o.0).collect()
    }

    /// The `k`-th eigenvector in ascending order, in the full basis.
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let (_, b, j) = self.order[k];
        let blk = &self.blocks[b];
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for (i, &g) in blk.indices.iter().enumerate() {
            out[g] = C64::new(blk.vectors[(i, j)], 0.0);
        }
        out
    }

    /// `max_k ‖H v_k − λ_k v_k‖`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `max |VᵀV − 1|`.
    pub fn orthonormality(&self) -> f64 {
        self.orthonormality
    }

    /// `max |V Λ Vᵀ − H|` against the operator that was diagonalized.
    pub fn reconstruction_defect(&self, h: &BosonOperator) -> f64 {
        let mut worst: f64 = 0.0;
        let mut covered = 0usize;
        for blk in &self.blocks {
            let mut vl = blk.vectors.clone();
            for j in 0..vl.ncols() {
                for i in 0..vl.nrows() {
                    vl[(i, j)] *= blk.energies[j];
                }
            }
            let rec = &vl * blk.vectors.transpose();
            for (r, &gr) in blk.indices.iter().enumerate() {
                for (c, &gc) in blk.indices.iter().enumerate() {
                    worst = worst.max((rec[(r, c)] - h.matrix().get(gr, gc).re).abs());
                }
            }
            covered += blk.indices.len() * blk.indices.len();
        }
        // entries outside the blocks are zero in the reconstruction
        if covered < self.dim * self.dim {
            let mut block_of = vec![0usize; self.dim];
            for (b, blk) in self.blocks.iter().enumerate() {
                for &g in &blk.indices {
                    block_of[g] = b;
                }
            }
            for (r, c, v) in h.matrix().iter() {
                if block_of[r] != block_of[c] {
                    worst = worst.max(v.norm());
                }
            }
        }
        worst
    }

    pub fn project(&self, psi: &[C64]) -> Result<ModalState> {
        self.check_dim(psi.len())?;
        let parts = self
            .blocks
            .iter()
            .map(|blk| {
                let re = Col::from_fn(blk.indices.len(), |i| psi[blk.indices[i]].re);
                let im = Col::from_fn(blk.indices.len(), |i| psi[blk.indices[i]].im);
                (blk.vectors.transpose() * &re, blk.vectors.transpose() * &im)
            })
            .collect();
        Ok(ModalState { parts })
    }

    /// `V e^{−iΛt} c` in the full basis.
    pub fn reconstruct(&self, modal: &ModalState, t: f64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for (blk, (cre, cim)) in self.blocks.iter().zip(&modal.parts) {
            let n = blk.indices.len();
            let mut pre = Col::<f64>::zeros(n);
            let mut pim = Col::<f64>::zeros(n);
            for k in 0..n {
                let (s, c) = (blk.energies[k] * t).sin_cos();
                // (x + iy)(c − is)
                pre[k] = cre[k] * c + cim[k] * s;
                pim[k] = cim[k] * c - cre[k] * s;
            }
            let re = &blk.vectors * &pre;
            let im = &blk.vectors * &pim;
            for (i, &g) in blk.indices.iter().enumerate() {
                out[g] = C64::new(re[i], im[i]);
            }
        }
        out
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(Error::Contract(format!(
                "state dimension {n} does not match operator dimension {}",
                self.dim
            )));
        }
        Ok(())
    }

    /// `e^{−iHt} ψ` without normalization or leakage checks.
    pub fn propagate(&self, psi: &[C64], t: f64) -> Result<Vec<C64>> {
        let modal = self.project(psi)?;
        Ok(self.reconstruct(&modal, t))
    }

    /// `e^{−iHt} ψ₀` with norm and leakage monitoring.
    pub fn evolve(&self, psi0: &StateVector, t: f64) -> Result<StateVector> {
        let modal = self.project(psi0.amplitudes())?;
        let psi = self.reconstruct(&modal, t);
        self.monitor(&modal, &psi, t)?;
        check_norm(&psi, t)?;
        StateVector::from_amplitudes(psi)
    }

    /// Leakage check of an evolved state; on failure scans for the last
    /// time before the hard threshold was crossed.
    fn monitor(&self, modal: &ModalState, psi: &[C64], t: f64) -> Result<f64> {
        let leak = leakage_of(psi, &self.truncation);
        if leak > LEAKAGE_ERROR {
            return Err(Error::Truncation {
                time: t,
                leakage: leak,
                safe_horizon: self.safe_horizon(modal, t),
            });
        }
        if leak > LEAKAGE_WARN {
            log::warn!("edge-band probability {leak:.3e} at t = {t}");
        }
        Ok(leak)
    }

    fn safe_horizon(&self, modal: &ModalState, t: f64) -> f64 {
        const STEPS: usize = 256;
        let mut last = 0.0;
        for i in 1..=STEPS {
            let s = t * i as f64 / STEPS as f64;
            if leakage_of(&self.reconstruct(modal, s), &self.truncation) > LEAKAGE_ERROR {
                break;
            }
            last = s;
        }
        last
    }

    /// `e^{iHt} O e^{−iHt} ψ`, applied as three matrix-vector stages.
    pub fn heisenberg_apply(&self, op: &BosonOperator, t: f64, psi: &StateVector) -> Result<Vec<C64>> {
        self.check_dim(op.dim())?;
        let modal = self.project(psi.amplitudes())?;
        let forward = self.reconstruct(&modal, t);
        self.monitor(&modal, &forward, t)?;
        let applied = op.apply(&forward);
        let back = self.project(&applied)?;
        Ok(self.reconstruct(&back, -t))
    }
}

fn check_norm(psi: &[C64], t: f64) -> Result<()> {
    let norm = norm_sqr(psi).sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Numeric(format!("norm drifted to {norm} at t = {t}")));
    }
    Ok(())
}

/// Common ground state of the two normal-mode annihilators.
#[derive(Clone, Debug)]
pub struct QuasiparticleVacuum {
    pub state: StateVector,
    /// `⟨Γ₊†Γ₊ + Γ₋†Γ₋⟩` in `state`.
    pub residual_occupation: f64,
    /// `[Γ₊, Γ₋]`.
    pub annihilators: [BosonOperator; 2],
}

impl QuasiparticleVacuum {
    /// `Γ_ρ†Γ_ρ`.
    pub fn number_operator(&self, rho: ModeSign) -> BosonOperator {
        match rho {
            ModeSign::Plus => self.annihilators[0].gram(),
            ModeSign::Minus => self.annihilators[1].gram(),
        }
    }
}

/// `cosh θ·d_ρ + sinh θ·d_ρ†` with the Bogoliubov angle of mode `ρ` at μ.
pub fn normal_mode_annihilator(mu: f64, rho: ModeSign, tr: &Truncation) -> Result<BosonOperator> {
    let form = normal_mode_form(mu, rho)?;
    let theta = form.kind.mixing_angle().ok_or_else(|| {
        Error::Domain(format!("mode {} is parabolic at mu = {mu}", rho.symbol()))
    })?;
    let dpm = build_dpm_operators(tr)?;
    let d = dpm.for_sign(rho.value());
    Ok(d.scale(theta.cosh()).add(&d.adjoint().scale(theta.sinh())))
}

/// Lowest eigenvector of `Q = Γ₊†Γ₊ + Γ₋†Γ₋`.
pub fn quasiparticle_vacuum(mu: f64, tr: &Truncation) -> Result<QuasiparticleVacuum> {
    let region = classify(mu)?;
    if region.is_boundary() {
        return Err(Error::Domain(format!("mu = {mu} is an exceptional point")));
    }
    let gp = normal_mode_annihilator(mu, ModeSign::Plus, tr)?;
    let gm = normal_mode_annihilator(mu, ModeSign::Minus, tr)?;
    let q = gp.gram().add(&gm.gram());
    let spec = diagonalize(&q)?;
    let state = StateVector::from_amplitudes(spec.eigenvector(0))?;
    let residual_occupation = q.expectation(&state).re;
    if !(residual_occupation <= VACUUM_TOL) {
        return Err(Error::CutoffInadequate(format!(
            "vacuum residual occupation {residual_occupation:.3e} at mu = {mu}, n_max = {}",
            tr.n_max()
        )));
    }
    Ok(QuasiparticleVacuum {
        state,
        residual_occupation: residual_occupation.max(0.0),
        annihilators: [gp, gm],
    })
}

/// Expectation values along a time grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OccupationSeries {
    pub times: Vec<f64>,
    /// One value per time before the horizon.
    pub values: Vec<f64>,
    /// Edge-band probability per reported time.
    pub leakage: Vec<f64>,
    /// First time with leakage above the warning threshold.
    pub warning_time: Option<f64>,
    /// First time with leakage above the hard threshold; values from there on are withheld.
    pub horizon: Option<f64>,
}

impl OccupationSeries {
    /// Longest prefix of the reported points whose leakage stays below `limit`.
    pub fn below_leakage(&self, limit: f64) -> usize {
        self.leakage.iter().take_while(|&&l| l < limit).count()
    }
}

/// `⟨ψ(t)|O|ψ(t)⟩` on a time grid.
pub fn occupation_series(
    spec: &SpectralDecomposition,
    psi0: &StateVector,
    grid: &TimeGrid,
    observable: &BosonOperator,
) -> Result<OccupationSeries> {
    spec.check_dim(observable.dim())?;
    let modal = spec.project(psi0.amplitudes())?;
    let tr = spec.truncation();
    let times: Vec<f64> = grid.times().collect();
    let mut values = Vec::with_capacity(times.len());
    let mut leakage = Vec::with_capacity(times.len());
    let mut warning_time = None;
    let mut horizon = None;
    for &t in &times {
        let psi = spec.reconstruct(&modal, t);
        let leak = leakage_of(&psi, tr);
        if leak > LEAKAGE_ERROR {
            horizon = Some(t);
            break;
        }
        if leak > LEAKAGE_WARN && warning_time.is_none() {
            warning_time = Some(t);
            log::warn!("edge-band probability {leak:.3e} at t = {t}");
        }
        check_norm(&psi, t)?;
        values.push(inner(&psi, &observable.apply(&psi)).re);
        leakage.push(leak);
    }
    Ok(OccupationSeries {
        times,
        values,
        leakage,
        warning_time,
        horizon,
    })
}

//! Second-order coherence of mode `a`, its time averages and the μ-derivative
//! witness `D_μ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{diagonalize, SpectralDecomposition};
use crate::error::{Error, Result};
use crate::fock::{build_dimer_hamiltonian, initial_state, leakage_of, mode_operators, BosonOperator, StateVector, Truncation, LEAKAGE_ERROR};
use crate::grid::{MuGrid, TimeGrid};
use crate::nambu::{BareState, NambuEngine};
use crate::output::{csv_document, fmt_f64, fmt_opt};
use crate::sparse::norm_sqr;

/// Smallest accepted product of the two denominator factors.
pub const DENOMINATOR_EPS: f64 = 1e-12;

pub(crate) fn check_denominators(d1: f64, d2: f64) -> Result<()> {
    if d1 * d2 < DENOMINATOR_EPS {
        let (factor, value) = if d1 <= d2 { ("D1", d1) } else { ("D2", d2) };
        return Err(Error::NearZeroDenominator { factor, value });
    }
    Ok(())
}

/// `g²(t₁, t₂) = N / (D₁·D₂)` with
/// `N = ‖a U(t₁) a ψ(t₂)‖²`, `D₁ = ‖a U(t₁) ψ(t₂)‖²`, `D₂ = ‖a ψ(t₂)‖²`.
pub fn g2(spec: &SpectralDecomposition, psi0: &StateVector, t1: f64, t2: f64) -> Result<f64> {
    let a = mode_operators(spec.truncation())?.a;
    g2_with(spec, &a, psi0, t1, t2)
}

/// As [`g2`] with a prebuilt annihilator of mode `a`.
pub fn g2_with(spec: &SpectralDecomposition, a: &BosonOperator, psi0: &StateVector, t1: f64, t2: f64) -> Result<f64> {
    let (n, d1, d2, leak) = factorized_parts(spec, a, psi0, t1, t2)?;
    if leak > LEAKAGE_ERROR {
        // re-run the monitored evolution for the safe horizon
        spec.evolve(psi0, t1 + t2)?;
        return Err(Error::Truncation {
            time: t1 + t2,
            leakage: leak,
            safe_horizon: 0.0,
        });
    }
    check_denominators(d1, d2)?;
    Ok(n / (d1 * d2))
}

/// `g²` of the truncated model itself, ignoring the edge band. Used to
/// compare evaluation schemes on tiny cutoffs.
pub fn g2_truncated_model(spec: &SpectralDecomposition, a: &BosonOperator, psi0: &StateVector, t1: f64, t2: f64) -> Result<f64> {
    let (n, d1, d2, _) = factorized_parts(spec, a, psi0, t1, t2)?;
    check_denominators(d1, d2)?;
    Ok(n / (d1 * d2))
}

fn factorized_parts(spec: &SpectralDecomposition, a: &BosonOperator, psi0: &StateVector, t1: f64, t2: f64) -> Result<(f64, f64, f64, f64)> {
    if !(t1 >= 0.0 && t2 >= 0.0) {
        return Err(Error::Domain(format!("times must be non-negative, got ({t1}, {t2})")));
    }
    let tr = spec.truncation();
    let psi_t2 = spec.propagate(psi0.amplitudes(), t2)?;
    let x = a.apply(&psi_t2);
    let d2 = norm_sqr(&x);
    let z = spec.propagate(&psi_t2, t1)?;
    let d1 = norm_sqr(&a.apply(&z));
    let y = spec.propagate(&x, t1)?;
    let n = norm_sqr(&a.apply(&y));
    let leak = leakage_of(&psi_t2, tr).max(leakage_of(&z, tr)).max(leakage_of(&y, tr));
    Ok((n, d1, d2, leak))
}

/// The two one-parameter sections of `g²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum G2Kind {
    /// `g²(0, t)`: delay zero, state evolved for `t`.
    #[serde(rename = "0t")]
    ZeroT,
    /// `g²(t, 0)`: delay `t` from the initial state.
    #[serde(rename = "t0")]
    TZero,
}

impl G2Kind {
    pub const BOTH: [G2Kind; 2] = [G2Kind::ZeroT, G2Kind::TZero];

    pub fn label(self) -> &'static str {
        match self {
            G2Kind::ZeroT => "0t",
            G2Kind::TZero => "t0",
        }
    }

    pub fn times(self, t: f64) -> (f64, f64) {
        match self {
            G2Kind::ZeroT => (0.0, t),
            G2Kind::TZero => (t, 0.0),
        }
    }
}

impl std::str::FromStr for G2Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0t" | "g2_0t" => Ok(G2Kind::ZeroT),
            "t0" | "g2_t0" => Ok(G2Kind::TZero),
            other => Err(Error::Parse(format!("unknown g2 kind '{other}', expected 0t or t0"))),
        }
    }
}

/// Requires agreement between `n_max` and `n_max + step` before a value is
/// accepted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceGate {
    pub tolerance: f64,
    pub step: usize,
}

impl Default for ConvergenceGate {
    fn default() -> Self {
        ConvergenceGate {
            tolerance: 1e-6,
            step: 10,
        }
    }
}

/// How correlators are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "lowercase")]
pub enum Engine {
    /// Exact diagonalization on a truncated Fock space.
    Fock {
        truncation: Truncation,
        gate: Option<ConvergenceGate>,
    },
    /// Exact linear propagation of ladder operators; no cutoff.
    Nambu,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Fock { .. } => "fock",
            Engine::Nambu => "nambu",
        }
    }
}

/// `g²` along one section for a fixed μ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoherenceSeries {
    pub kind: G2Kind,
    pub mu: f64,
    pub grid: TimeGrid,
    /// One entry per grid point; `NaN` where a value is withheld.
    pub values: Vec<f64>,
    /// Edge-band probability per grid point; `NaN` past the horizon.
    pub leakage: Vec<f64>,
    /// Smallest `D₁·D₂` encountered.
    pub denominator_floor: f64,
    /// First time with leakage above the hard threshold.
    pub leakage_horizon: Option<f64>,
    /// First time where the convergence gate rejected a value.
    pub convergence_horizon: Option<f64>,
}

impl CoherenceSeries {
    /// Last time up to which every value is present.
    pub fn valid_until(&self) -> Option<f64> {
        let n = self.values.iter().take_while(|v| v.is_finite()).count();
        if n == 0 {
            None
        } else {
            Some(self.grid.time(n - 1))
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times().collect()
    }
}

/// `g²(0, t)` with the truncated Fock engine.
pub fn g2_0t_series(mu: f64, grid: &TimeGrid, tr: &Truncation) -> Result<CoherenceSeries> {
    fock_series(G2Kind::ZeroT, mu, grid, tr)
}

/// `g²(t, 0)` with the truncated Fock engine.
pub fn g2_t0_series(mu: f64, grid: &TimeGrid, tr: &Truncation) -> Result<CoherenceSeries> {
    fock_series(G2Kind::TZero, mu, grid, tr)
}

/// One section of `g²` for the symmetric single-quantum initial state.
pub fn coherence_series(kind: G2Kind, mu: f64, grid: &TimeGrid, engine: &Engine) -> Result<CoherenceSeries> {
    match engine {
        Engine::Nambu => nambu_series(kind, mu, grid),
        Engine::Fock { truncation, gate: None } => fock_series(kind, mu, grid, truncation),
        Engine::Fock {
            truncation,
            gate: Some(gate),
        } => {
            let mut base = fock_series(kind, mu, grid, truncation)?;
            let larger = Truncation::new(truncation.n_max() + gate.step, truncation.margin())?
                .with_dense_budget(truncation.dense_budget());
            let check = fock_series(kind, mu, grid, &larger)?;
            let bad = base
                .values
                .iter()
                .zip(&check.values)
                .position(|(x, y)| !(x.is_finite() && y.is_finite() && (x - y).abs() <= gate.tolerance));
            if let Some(i) = bad {
                if base.values[i].is_finite() {
                    base.convergence_horizon = Some(grid.time(i));
                }
                for v in &mut base.values[i..] {
                    *v = f64::NAN;
                }
            }
            Ok(base)
        }
    }
}

fn nambu_series(kind: G2Kind, mu: f64, grid: &TimeGrid) -> Result<CoherenceSeries> {
    let engine = NambuEngine::new(mu, BareState::SymmetricSingle)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut floor = f64::INFINITY;
    for t in grid.times() {
        let (t1, t2) = kind.times(t);
        let parts = engine.g2_parts(t1, t2)?;
        let den = parts.d1 * parts.d2;
        floor = floor.min(den);
        values.push(if den >= DENOMINATOR_EPS { parts.value() } else { f64::NAN });
    }
    Ok(CoherenceSeries {
        kind,
        mu,
        grid: *grid,
        leakage: vec![0.0; values.len()],
        values,
        denominator_floor: floor,
        leakage_horizon: None,
        convergence_horizon: None,
    })
}

fn fock_series(kind: G2Kind, mu: f64, grid: &TimeGrid, tr: &Truncation) -> Result<CoherenceSeries> {
    let h = build_dimer_hamiltonian(mu, tr)?;
    let spec = diagonalize(&h)?;
    let a = mode_operators(tr)?.a;
    let psi0 = initial_state(tr)?;
    let modal = spec.project(psi0.amplitudes())?;
    // a ψ₀ propagated for the delayed section
    let a_psi0 = a.apply(psi0.amplitudes());
    let modal_a = spec.project(&a_psi0)?;
    let d2_fixed = norm_sqr(&a_psi0);

    let n = grid.len();
    let mut values = vec![f64::NAN; n];
    let mut leakage = vec![f64::NAN; n];
    let mut floor = f64::INFINITY;
    let mut horizon = None;
    for (i, t) in grid.times().enumerate() {
        let psi = spec.reconstruct(&modal, t);
        let mut leak = leakage_of(&psi, tr);
        let (num, d1, d2) = match kind {
            G2Kind::ZeroT => {
                let x = a.apply(&psi);
                let d = norm_sqr(&x);
                (norm_sqr(&a.apply(&x)), d, d)
            }
            G2Kind::TZero => {
                let y = spec.reconstruct(&modal_a, t);
                leak = leak.max(leakage_of(&y, tr));
                (norm_sqr(&a.apply(&y)), norm_sqr(&a.apply(&psi)), d2_fixed)
            }
        };
        if leak > LEAKAGE_ERROR {
            horizon = Some(t);
            break;
        }
        leakage[i] = leak;
        let den = d1 * d2;
        floor = floor.min(den);
        if den >= DENOMINATOR_EPS {
            values[i] = num / den;
        }
    }
    Ok(CoherenceSeries {
        kind,
        mu,
        grid: *grid,
        values,
        leakage,
        denominator_floor: floor,
        leakage_horizon: horizon,
        convergence_horizon: None,
    })
}

/// Trapezoidal average `(1/T) ∫₀ᵀ v dt`; a final partial interval is
/// interpolated linearly.
pub fn time_average(series: &CoherenceSeries, t_window: f64) -> Result<f64> {
    let dt = series.grid.dt();
    if !(t_window > 0.0) {
        return Err(Error::Domain(format!("averaging window must be positive, got {t_window}")));
    }
    let valid_until = series.valid_until().unwrap_or(-1.0);
    if t_window > valid_until + 1e-9 * dt.max(1.0) {
        return Err(Error::Domain(format!(
            "averaging window {t_window} exceeds the series horizon {valid_until}"
        )));
    }
    let v = &series.values;
    let full = ((t_window / dt) + 1e-9).floor() as usize;
    let mut integral = 0.0;
    for i in 0..full {
        integral += 0.5 * (v[i] + v[i + 1]) * dt;
    }
    let rest = t_window - full as f64 * dt;
    if rest > 1e-12 * dt {
        let end = v[full] + (v[full + 1] - v[full]) * rest / dt;
        integral += 0.5 * (v[full] + end) * rest;
    }
    Ok(integral / t_window)
}

/// Location and depth of a `D_μ` minimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub mu_star: f64,
    pub d_star: f64,
    /// Index of the discrete minimum on the μ grid.
    pub index: usize,
}

/// `D_μ = ∂_μ ⟨g²⟩_T` on a μ grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DmuCurve {
    pub kind: G2Kind,
    #[serde(rename = "T")]
    pub t_window: f64,
    pub mu_grid: MuGrid,
    /// Time averages per grid point; `None` where the series failed.
    pub averages: Vec<Option<f64>>,
    /// Central differences; `None` at the endpoints and next to missing points.
    pub values: Vec<Option<f64>>,
    pub minimum: Option<Minimum>,
    /// μ values whose series could not be averaged, with the reason.
    pub missing: Vec<(f64, String)>,
}

impl DmuCurve {
    pub fn from_averages(kind: G2Kind, t_window: f64, mu_grid: MuGrid, averages: Vec<Option<f64>>, missing: Vec<(f64, String)>) -> Self {
        let n = averages.len();
        let h = mu_grid.step();
        let mut values = vec![None; n];
        for k in 1..n.saturating_sub(1) {
            if let (Some(lo), Some(hi)) = (averages[k - 1], averages[k + 1]) {
                values[k] = Some((hi - lo) / (2.0 * h));
            }
        }
        let minimum = locate_minimum(&mu_grid, &values);
        DmuCurve {
            kind,
            t_window,
            mu_grid,
            averages,
            values,
            minimum,
            missing,
        }
    }

    /// `mu, D_mu` rows for the interior grid points.
    pub fn csv(&self) -> String {
        let rows = (1..self.values.len().saturating_sub(1))
            .map(|k| format!("{},{}", fmt_f64(self.mu_grid.get(k)), fmt_opt(self.values[k])));
        csv_document("mu,D_mu", rows)
    }

    /// File name used for this curve in output directories.
    pub fn file_name(&self) -> String {
        format!("dmu_T{}.csv", fmt_f64(self.t_window))
    }

    /// Indices of strict discrete local minima.
    pub fn local_minima(&self) -> Vec<usize> {
        let v = &self.values;
        (1..v.len().saturating_sub(1))
            .filter(|&k| match (v[k - 1], v[k], v[k + 1]) {
                (Some(a), Some(b), Some(c)) => b < a && b < c,
                _ => false,
            })
            .collect()
    }

    /// True when the global minimum lies strictly inside `(lo, hi)` and no
    /// other grid value ties with it.
    pub fn has_unique_minimum_in(&self, lo: f64, hi: f64) -> bool {
        let Some(m) = self.minimum else { return false };
        let x = self.mu_grid.get(m.index);
        if !(x > lo && x < hi) {
            return false;
        }
        let best = self.values[m.index].unwrap_or(f64::NAN);
        self.values
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != m.index)
            .all(|(_, v)| v.map_or(true, |v| v > best))
    }
}

fn locate_minimum(grid: &MuGrid, values: &[Option<f64>]) -> Option<Minimum> {
    let (k, dk) = values
        .iter()
        .enumerate()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let h = grid.step();
    let x = grid.get(k);
    let refined = match (k.checked_sub(1).and_then(|j| values[j]), values.get(k + 1).copied().flatten()) {
        (Some(l), Some(r)) => {
            let curv = l - 2.0 * dk + r;
            if curv > 0.0 {
                let shift = 0.5 * (l - r) / curv;
                Some((x + shift * h, dk - (l - r).powi(2) / (8.0 * curv)))
            } else {
                None
            }
        }
        _ => None,
    };
    let (mu_star, d_star) = refined.unwrap_or((x, dk));
    Some(Minimum { mu_star, d_star, index: k })
}

/// One (T, μ*, D*) point of a finite-window scaling study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimumSample {
    #[serde(rename = "T")]
    pub t_window: f64,
    pub mu_star: f64,
    pub d_star: f64,
}

/// Least-squares fit `μ*(T) = intercept + slope / T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationFit {
    pub samples: Vec<MinimumSample>,
    pub intercept: f64,
    pub slope: f64,
    /// `μ*_i − fit(T_i)` in sample order.
    pub residuals: Vec<f64>,
    pub rms_residual: f64,
    /// `D*` strictly decreases as T increases.
    pub depths_deepen: bool,
    /// `|μ* − 2|` strictly decreases as T increases.
    pub approaches_two: bool,
}

pub fn extrapolate_t(samples: &[MinimumSample]) -> Result<ExtrapolationFit> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.t_window.total_cmp(&b.t_window));
    if sorted.iter().any(|s| !(s.t_window > 0.0) || !s.mu_star.is_finite()) {
        return Err(Error::Domain("samples need positive T and finite mu*".into()));
    }
    let mut distinct: Vec<f64> = sorted.iter().map(|s| s.t_window).collect();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::Domain(format!(
            "extrapolation needs at least 3 distinct T values, got {}",
            distinct.len()
        )));
    }
    let n = sorted.len() as f64;
    let xs: Vec<f64> = sorted.iter().map(|s| 1.0 / s.t_window).collect();
    let ys: Vec<f64> = sorted.iter().map(|s| s.mu_star).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    let rms_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    let depths_deepen = sorted.windows(2).all(|w| w[1].d_star < w[0].d_star);
    let approaches_two = sorted
        .windows(2)
        .all(|w| (w[1].mu_star - 2.0).abs() < (w[0].mu_star - 2.0).abs());
    Ok(ExtrapolationFit {
        samples: sorted,
        intercept,
        slope,
        residuals,
        rms_residual,
        depths_deepen,
        approaches_two,
    })
}

/// Parameters of a `D_μ` study over several windows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DmuConfig {
    pub kind: G2Kind,
    pub mu_grid: MuGrid,
    #[serde(rename = "T")]
    pub windows: Vec<f64>,
    pub dt: f64,
    pub engine: Engine,
    pub workers: usize,
}

/// Curves, minima and the scaling fit of a `D_μ` study.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DmuStudy {
    pub curves: Vec<DmuCurve>,
    pub fit: Option<ExtrapolationFit>,
    pub fit_error: Option<String>,
}

impl DmuStudy {
    /// `minima.csv`: one `T, mu_star, d_star` row per curve.
    pub fn minima_csv(&self) -> String {
        let rows = self.curves.iter().map(|c| match c.minimum {
            Some(m) => format!("{},{},{}", fmt_f64(c.t_window), fmt_f64(m.mu_star), fmt_f64(m.d_star)),
            None => format!("{},nan,nan", fmt_f64(c.t_window)),
        });
        csv_document("T,mu_star,d_star", rows)
    }

    pub fn samples(&self) -> Vec<MinimumSample> {
        self.curves
            .iter()
            .filter_map(|c| {
                c.minimum.map(|m| MinimumSample {
                    t_window: c.t_window,
                    mu_star: m.mu_star,
                    d_star: m.d_star,
                })
            })
            .collect()
    }
}

/// Runs `f` over `items` on a pool of `workers` threads and returns results
/// in input order.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

/// Series for every μ of a grid, in grid order.
pub fn coherence_sweep(kind: G2Kind, mu_grid: &MuGrid, grid: &TimeGrid, engine: &Engine, workers: usize) -> Result<Vec<Result<CoherenceSeries>>> {
    parallel_map(&mu_grid.values(), workers, |&mu| coherence_series(kind, mu, grid, engine))
}

pub fn dmu_study(cfg: &DmuConfig) -> Result<DmuStudy> {
    if cfg.windows.is_empty() {
        return Err(Error::Domain("no averaging windows given".into()));
    }
    cfg.mu_grid.check_avoids_locus()?;
    let t_max = cfg.windows.iter().cloned().fold(0.0, f64::max);
    let grid = TimeGrid::new(t_max, cfg.dt)?;
    let series = coherence_sweep(cfg.kind, &cfg.mu_grid, &grid, &cfg.engine, cfg.workers)?;
    let mus = cfg.mu_grid.values();

    let curves = cfg
        .windows
        .iter()
        .map(|&tw| {
            let mut missing = Vec::new();
            let averages = series
                .iter()
                .zip(&mus)
                .map(|(s, &mu)| match s.as_ref().map_err(|e| e.to_string()).and_then(|s| time_average(s, tw).map_err(|e| e.to_string())) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        missing.push((mu, e));
                        None
                    }
                })
                .collect();
            DmuCurve::from_averages(cfg.kind, tw, cfg.mu_grid, averages, missing)
        })
        .collect::<Vec<_>>();

    let samples: Vec<MinimumSample> = curves
        .iter()
        .filter_map(|c| {
            c.minimum.map(|m| MinimumSample {
                t_window: c.t_window,
                mu_star: m.mu_star,
                d_star: m.d_star,
            })
        })
        .collect();
    let (fit, fit_error) = match extrapolate_t(&samples) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(DmuStudy { curves, fit, fit_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_series(values: Vec<f64>, dt: f64) -> CoherenceSeries {
        let t_max = dt * (values.len() - 1) as f64;
        CoherenceSeries {
            kind: G2Kind::ZeroT,
            mu: 0.0,
            grid: TimeGrid::new(t_max, dt).unwrap(),
            leakage: vec![0.0; values.len()],
            values,
            denominator_floor: 1.0,
            leakage_horizon: None,
            convergence_horizon: None,
        }
    }

    #[test]
    fn averages_of_simple_series() {
        let s = constant_series(vec![0.7; 201], 0.01);
        assert!((time_average(&s, 2.0).unwrap() - 0.7).abs() < 1e-14);
        let ramp = constant_series((0..=400).map(|i| i as f64 * 0.01).collect(), 0.01);
        assert!((time_average(&ramp, 4.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((time_average(&ramp, 3.005).unwrap() - 1.5025).abs() < 1e-12);
        assert!(time_average(&ramp, 4.5).is_err());
    }

    #[test]
    fn synthetic_extrapolations() {
        let mk = |f: &dyn Fn(f64) -> f64| -> Vec<MinimumSample> {
            [2.0, 4.0, 6.0, 8.0]
                .iter()
                .map(|&t| MinimumSample { t_window: t, mu_star: f(t), d_star: -t })
                .collect()
        };
        let fit = extrapolate_t(&mk(&|t| 2.0 + 1.0 / t)).unwrap();
        assert!((fit.intercept - 2.0).abs() < 1e-10);
        assert!(fit.depths_deepen && fit.approaches_two);
        let fit = extrapolate_t(&mk(&|_| 2.0)).unwrap();
        assert!((fit.intercept - 2.0).abs() < 1e-12 && fit.slope.abs() < 1e-12);
        let few = &mk(&|_| 2.0)[..2];
        assert!(extrapolate_t(few).is_err());
        let mut dup = mk(&|_| 2.0);
        dup[2].t_window = 2.0;
        dup[3].t_window = 4.0;
        assert!(extrapolate_t(&dup).is_err());
    }

    #[test]
    fn parabolic_refinement_recovers_a_vertex() {
        let grid = MuGrid::new(0.0, 0.1, 21).unwrap();
        let averages: Vec<Option<f64>> = grid.values().iter().map(|&x| Some((x - 1.03).powi(3) / 3.0 - 0.2 * x)).collect();
        // D = (x − 1.03)² − 0.2 up to O(h²) from central differences
        let curve = DmuCurve::from_averages(G2Kind::ZeroT, 1.0, grid, averages, vec![]);
        let m = curve.minimum.unwrap();
        assert!((m.mu_star - 1.03).abs() < 1e-9);
        assert!(curve.values[0].is_none() && curve.values[20].is_none());
        assert!(curve.has_unique_minimum_in(0.5, 1.5));
        assert!(!curve.has_unique_minimum_in(1.5, 2.5));
    }

    #[test]
    fn kinds_parse_and_start_at_zero() {
        assert_eq!("0t".parse::<G2Kind>().unwrap(), G2Kind::ZeroT);
        assert!("x".parse::<G2Kind>().is_err());
        let grid = TimeGrid::new(0.5, 0.01).unwrap();
        for kind in G2Kind::BOTH {
            let s = coherence_series(kind, 1.0, &grid, &Engine::Nambu).unwrap();
            assert_eq!(s.values[0], 0.0);
        }
    }

    #[test]
    fn denominators_name_the_small_factor() {
        match check_denominators(1e-14, 0.5) {
            Err(Error::NearZeroDenominator { factor, .. }) => assert_eq!(factor, "D1"),
            other => panic!("{other:?}"),
        }
        assert!(check_denominators(0.5, 0.5).is_ok());
    }

    #[test]
    fn fock_and_nambu_series_agree_early() {
        let grid = TimeGrid::new(0.5, 0.01).unwrap();
        let tr = Truncation::with_n_max(30).unwrap();
        for kind in G2Kind::BOTH {
            let f = coherence_series(kind, 1.0, &grid, &Engine::Fock { truncation: tr, gate: None }).unwrap();
            let n = coherence_series(kind, 1.0, &grid, &Engine::Nambu).unwrap();
            for (x, y) in f.values.iter().zip(&n.values).skip(1) {
                assert!((x - y).abs() < 1e-8, "{kind:?}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn g2_free_function_matches_series() {
        let tr = Truncation::with_n_max(30).unwrap();
        let spec = diagonalize(&build_dimer_hamiltonian(3.0, &tr).unwrap()).unwrap();
        let psi0 = initial_state(&tr).unwrap();
        assert!(g2(&spec, &psi0, 0.0, 0.0).unwrap().abs() < 1e-20);
        let e = NambuEngine::new(3.0, BareState::SymmetricSingle).unwrap();
        let x = g2(&spec, &psi0, 0.4, 0.9).unwrap();
        assert!((x - e.g2(0.4, 0.9).unwrap()).abs() < 1e-9);
    }
}

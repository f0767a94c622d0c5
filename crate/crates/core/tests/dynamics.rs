use std::f64::consts::PI;

use kitaev_dimer::coherence::{coherence_series, time_average, Engine, G2Kind};
use kitaev_dimer::core_matrix::ModeSign;
use kitaev_dimer::dynamics::{diagonalize, occupation_series};
use kitaev_dimer::fock::{build_dimer_hamiltonian, build_dpm_operators, fock_state, mode_operators, Mode, Truncation};
use kitaev_dimer::grid::TimeGrid;
use kitaev_dimer::nambu::{BareState, LinearLadder, NambuEngine};

fn bare_n_a(mu: f64, n_max: usize, t_max: f64) -> Vec<f64> {
    let tr = Truncation::with_n_max(n_max).unwrap();
    let spec = diagonalize(&build_dimer_hamiltonian(mu, &tr).unwrap()).unwrap();
    let psi0 = fock_state(0, 0, &tr).unwrap();
    let grid = TimeGrid::new(t_max, 0.01).unwrap();
    let s = occupation_series(&spec, &psi0, &grid, &mode_operators(&tr).unwrap().n_a).unwrap();
    assert!(s.horizon.is_none());
    s.values
}

#[test]
fn oscillator_region_stays_bounded_at_two_cutoffs() {
    let lo = bare_n_a(3.0, 20, 10.0);
    let hi = bare_n_a(3.0, 30, 10.0);
    let diff = lo.iter().zip(&hi).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-6, "cutoff dependence {diff}");
    let peak = hi.iter().cloned().fold(0.0, f64::max);
    assert!(peak > 0.0 && peak < 1.0, "peak {peak}");
}

#[test]
fn inverted_region_grows_and_converges_early() {
    let lo = bare_n_a(1.0, 30, 1.0);
    let hi = bare_n_a(1.0, 40, 1.0);
    // edge reflections are already visible at the 1e-6 level by t = 1
    let diff = lo.iter().zip(&hi).map(|(x, y)| (x - y).abs() / y.max(1e-12)).fold(0.0, f64::max);
    assert!(diff < 1e-5, "cutoff dependence {diff}");
    assert!(hi[100] > 2.0 * hi[50]);

    let exact = NambuEngine::new(1.0, BareState::Fock(0, 0)).unwrap();
    let n_a = LinearLadder::lowering(Mode::A);
    let late = exact.occupation(&n_a, 5.0).unwrap();
    assert!(late > 1e3 * hi[50], "{late}");
}

#[test]
fn normal_mode_occupations_are_periodic() {
    let mu = 3.0;
    let exact = NambuEngine::new(mu, BareState::Fock(0, 0)).unwrap();
    for (rho, omega) in [(ModeSign::Minus, 3f64.sqrt()), (ModeSign::Plus, 15f64.sqrt())] {
        let d = LinearLadder::rotated_mode(rho, 0.0);
        for t in [0.13, 0.71, 1.9] {
            let x = exact.occupation(&d, t).unwrap();
            let y = exact.occupation(&d, t + PI / omega).unwrap();
            assert!((x - y).abs() < 1e-12, "{rho:?} at {t}: {x} vs {y}");
        }
        assert!(exact.occupation(&d, PI / omega).unwrap().abs() < 1e-12);
    }

    // ED sees the same return of the slow mode
    let tr = Truncation::with_n_max(30).unwrap();
    let spec = diagonalize(&build_dimer_hamiltonian(mu, &tr).unwrap()).unwrap();
    let ops = build_dpm_operators(&tr).unwrap();
    let n_minus = ops.d_minus.adjoint().mul(&ops.d_minus);
    let psi0 = fock_state(0, 0, &tr).unwrap();
    let back = spec.evolve(&psi0, PI / 3f64.sqrt()).unwrap();
    assert!(n_minus.expectation(&back).re.abs() < 1e-10);
}

#[test]
fn engines_agree_on_coherence_in_oscillator_region() {
    let grid = TimeGrid::new(5.0, 0.01).unwrap();
    let fock = Engine::Fock { truncation: Truncation::with_n_max(30).unwrap(), gate: None };
    for kind in G2Kind::BOTH {
        let a = coherence_series(kind, 3.0, &grid, &fock).unwrap();
        let b = coherence_series(kind, 3.0, &grid, &Engine::Nambu).unwrap();
        let diff = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{kind:?}: {diff}");
    }
}

#[test]
fn refining_the_time_grid_keeps_shared_samples() {
    let coarse = coherence_series(G2Kind::ZeroT, 2.5, &TimeGrid::new(3.0, 0.01).unwrap(), &Engine::Nambu).unwrap();
    let fine = coherence_series(G2Kind::ZeroT, 2.5, &TimeGrid::new(3.0, 0.005).unwrap(), &Engine::Nambu).unwrap();
    assert_eq!(fine.values.len(), 2 * coarse.values.len() - 1);
    for (i, v) in coarse.values.iter().enumerate() {
        assert!((v - fine.values[2 * i]).abs() <= 1e-12 * v.abs().max(1.0));
    }
}

#[test]
fn time_average_converges_under_refinement() {
    let avg = |dt: f64| {
        let s = coherence_series(G2Kind::ZeroT, 1.0, &TimeGrid::new(4.0, dt).unwrap(), &Engine::Nambu).unwrap();
        time_average(&s, 4.0).unwrap()
    };
    let (a, b) = (avg(0.01), avg(0.005));
    assert!((a - b).abs() < 1e-5, "{a} vs {b}");
}

#[test]
fn partial_window_interpolates() {
    let s = coherence_series(G2Kind::TZero, 3.0, &TimeGrid::new(2.0, 0.01).unwrap(), &Engine::Nambu).unwrap();
    let full = time_average(&s, 1.0).unwrap();
    let partial = time_average(&s, 1.005).unwrap();
    assert!((full - partial).abs() < 1e-2);
    assert!(time_average(&s, 2.5).is_err());
    assert!(time_average(&s, 0.0).is_err());
}

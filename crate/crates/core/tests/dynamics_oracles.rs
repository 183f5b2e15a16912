mod common;

use common::{
    bloch_excited_population, random_density, rk4_propagate, rng, thermal_moments, Trajectories,
};
use ndarray::{array, Array1, Array2};
use num_complex::Complex64 as C64;
use photocorr::dynamics::{
    emission_modes, evolve_vec, expval, g2_tau_unfiltered, propagation_method, spectrum_qrt,
    steady_state, two_time_correlator, DensityMatrix, Propagation,
};
use photocorr::models::{rf_model, thermal_mode, RFParams};
use photocorr::ops::{
    liouvillian, sigma_lower, vectorize, Collapse, LindbladModel, Operator, SpaceLayout,
};
use photocorr::Error;
use rand::Rng;

fn rf(rabi: f64) -> LindbladModel {
    rf_model(&RFParams::resonant(rabi)).unwrap()
}

fn excited_population(m: &LindbladModel, rho: &DensityMatrix) -> f64 {
    let s = m.emission();
    expval(rho, &s.adjoint().dot(s)).unwrap().re
}

#[test]
fn bloch_oracle_closed_form() {
    // P = Ω²/4 / (Δ² + 1/4 + Ω²/2)
    for (rabi, det) in [(1.0, 0.0), (3.0, 0.7), (0.2, -2.0)] {
        let expected = rabi * rabi / 4.0 / (det * det + 0.25 + rabi * rabi / 2.0);
        assert!((bloch_excited_population(rabi, det) - expected).abs() < 1e-14);
    }
}

#[test]
fn steady_state_matches_optical_bloch_solution() {
    for (rabi, det) in [(1.0, 0.0), (2.5, 1.3), (0.4, -0.8)] {
        let m = rf_model(&RFParams {
            rabi,
            detuning: det,
        })
        .unwrap();
        let l = liouvillian(&m);
        let rho = steady_state(&l).unwrap();
        let got = excited_population(&m, &rho);
        assert!(
            (got - bloch_excited_population(rabi, det)).abs() < 1e-12,
            "{rabi} {det}: {got}"
        );
        let residual = l
            .apply(&rho.vectorized())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(residual < 1e-9);
    }
    let m = rf(1.0);
    let p = excited_population(&m, &steady_state(&liouvillian(&m)).unwrap());
    assert!((p - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn strong_drive_saturates_at_one_half() {
    let m = rf(1e3);
    let p = excited_population(&m, &steady_state(&liouvillian(&m)).unwrap());
    assert!((p - 0.5).abs() < 1e-3);
}

#[test]
fn pure_decay_relaxes_to_ground() {
    let m = rf(0.0);
    let rho = steady_state(&liouvillian(&m)).unwrap();
    assert!((rho.matrix()[[0, 0]] - 1.0).norm() < 1e-12);
    assert!(excited_population(&m, &rho).abs() < 1e-12);
}

#[test]
fn density_matrix_invariants_hold_for_steady_states() {
    for m in [rf(0.5), rf(20.0), thermal_mode(8, 0.1, 1.0).unwrap()] {
        let rho = steady_state(&liouvillian(&m)).unwrap();
        let d = rho.matrix().nrows();
        let tr: C64 = (0..d).map(|i| rho.matrix()[[i, i]]).sum();
        assert!((tr - 1.0).norm() < 1e-10);
        // reconstructing validates hermiticity and positivity
        DensityMatrix::new(rho.layout().clone(), rho.matrix().clone()).unwrap();
    }
}

#[test]
fn expval_equals_dense_trace() {
    let mut r = rng(11);
    let layout = SpaceLayout::new([("a", 2), ("b", 3)]).unwrap();
    for _ in 0..10 {
        let rho_m = random_density(&mut r, 6);
        let op_m = common::random_complex(&mut r, 6);
        let rho = DensityMatrix::new(layout.clone(), rho_m.clone()).unwrap();
        let op = Operator::new(layout.clone(), op_m.clone()).unwrap();
        let dense: C64 = (0..6)
            .flat_map(|i| (0..6).map(move |k| (i, k)))
            .map(|(i, k)| op_m[[i, k]] * rho_m[[k, i]])
            .sum();
        assert!((expval(&rho, &op).unwrap() - dense).norm() < 1e-12);
        assert!((expval(&rho, &Operator::identity(&layout)).unwrap() - 1.0).norm() < 1e-12);
    }
    let m = rf(0.0);
    let g = DensityMatrix::basis(m.layout(), 0).unwrap();
    assert_eq!(excited_population(&m, &g), 0.0);
}

#[test]
fn evolve_vec_agrees_with_runge_kutta() {
    let m = rf_model(&RFParams {
        rabi: 6.0,
        detuning: 0.8,
    })
    .unwrap();
    let l = liouvillian(&m);
    assert_eq!(propagation_method(&l).unwrap(), Propagation::Spectral);
    let v0 = vectorize(&array![
        [C64::new(0.3, 0.0), C64::new(0.1, 0.2)],
        [C64::new(0.1, -0.2), C64::new(0.7, 0.0)]
    ]);
    let taus = [0.0, 0.1, 0.5, 1.3, 3.0];
    let fast = evolve_vec(&l, &v0, &taus).unwrap();
    let reference = rk4_propagate(l.matrix(), &v0, &taus, 1e-4);
    for (a, b) in fast.iter().zip(&reference) {
        let dev = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-7, "{dev}");
    }
    assert_eq!(fast[0], v0);
}

#[test]
fn evolve_vec_pure_decay_is_exponential() {
    let l = liouvillian(&rf(0.0));
    let v0 = vectorize(&array![
        [C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
    ]);
    let taus: Vec<f64> = (0..10).map(|k| 0.4 * k as f64).collect();
    let out = evolve_vec(&l, &v0, &taus).unwrap();
    for (t, v) in taus.iter().zip(&out) {
        assert!((v[3].re - (-t).exp()).abs() < 1e-12);
    }
    assert!(matches!(
        evolve_vec(&l, &v0, &[1.0, 0.5]),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn correlator_algebra() {
    let m = rf(3.0);
    let l = liouvillian(&m);
    let rho = steady_state(&l).unwrap();
    let s = m.emission();
    let sd = s.adjoint();
    let n = sd.dot(s);
    let taus: Vec<f64> = (0..40).map(|k| 0.25 * k as f64).collect();
    let g = two_time_correlator(&l, &rho, s, &sd, &n, &taus).unwrap();
    // σ² = 0: no two excitations at equal times
    assert!(g[0].norm() < 1e-15);
    let id = Operator::identity(m.layout());
    let flat = two_time_correlator(&l, &rho, s, &sd, &id, &taus).unwrap();
    for v in &flat {
        assert!((v - flat[0]).norm() < 1e-9);
    }
    let p = excited_population(&m, &rho);
    assert!((flat[0].re - p).abs() < 1e-12);
}

#[test]
fn antibunching_and_long_delay_limit() {
    let taus: Vec<f64> = (0..=500).map(|k| 0.1 * k as f64).collect();
    let g = g2_tau_unfiltered(&rf(5.0), &taus).unwrap();
    assert!(g.values[0].abs() < 1e-10);
    assert!(g.tail_deviation() < 0.01);
    assert!(g.values.iter().all(|&v| v >= -1e-9));
}

#[test]
fn undriven_emitter_has_zero_population_error() {
    assert!(matches!(
        g2_tau_unfiltered(&rf(0.0), &[0.0]),
        Err(Error::ZeroPopulation { .. })
    ));
}

/// After a photon the emitter is in |g>; `g2(τ)` is the conditional excited
/// population over the stationary one.
#[test]
fn g2_tau_matches_quantum_jump_estimate() {
    let rabi = 3.0;
    let m = rf(rabi);
    let h = m.hamiltonian().matrix().clone();
    let traj = Trajectories::new(&h, &[(1.0, sigma_lower())]);
    let ground = |_: &mut rand_chacha::ChaCha8Rng| array![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let projector: Array2<C64> = array![
        [C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
    ];
    let taus = [0.5, 1.0, 2.0];
    let samples = traj.expectation(&ground, &projector, &taus, 4000, 1e-3, 2024);
    let p_ss = bloch_excited_population(rabi, 0.0);
    let g = g2_tau_unfiltered(&m, &taus).unwrap();
    for ((mean, se), exact) in samples.iter().zip(&g.values) {
        let (est, err) = (mean / p_ss, se / p_ss);
        assert!(
            (est - exact).abs() < 3.0 * err,
            "mc {est} ± {err}, qrt {exact}"
        );
    }
}

#[test]
fn thermal_mode_moments() {
    let (dim, pump, decay) = (8, 0.1, 1.0);
    let m = thermal_mode(dim, pump, decay).unwrap();
    let [n1, n2, _] = thermal_moments(dim, pump, decay);
    let g = g2_tau_unfiltered(&m, &[0.0]).unwrap();
    assert!((g.values[0] - n2 / (n1 * n1)).abs() < 1e-9);
    assert!((g.values[0] - 2.0).abs() < 1e-3);
}

#[test]
fn triplet_spectrum_is_symmetric_and_nonnegative() {
    let grid: Vec<f64> = (0..=400).map(|k| -40.0 + 0.2 * k as f64).collect();
    let s = spectrum_qrt(&rf(20.0), &grid).unwrap();
    let n = grid.len();
    for k in 0..n {
        assert!(s.values[k] >= -1e-12);
        assert!((s.values[k] - s.values[n - 1 - k]).abs() < 1e-8);
    }
    assert_eq!(s.local_maxima().len(), 3);
    assert!((s.area() - 1.0).abs() < 1e-3);
}

#[test]
fn incoherently_pumped_emitter_is_single_lorentzian() {
    let pump = 0.01;
    let layout = SpaceLayout::single("2LS", 2).unwrap();
    let s = Operator::new(layout.clone(), sigma_lower()).unwrap();
    let m = LindbladModel::new(
        Operator::zeros(&layout),
        vec![
            Collapse {
                rate: 1.0,
                op: s.clone(),
            },
            Collapse {
                rate: pump,
                op: s.adjoint(),
            },
        ],
        s,
    )
    .unwrap();
    let grid: Vec<f64> = (0..=20000).map(|k| -10.0 + 1e-3 * k as f64).collect();
    let spec = spectrum_qrt(&m, &grid).unwrap();
    assert_eq!(spec.local_maxima(), vec![10000]);
    let half = spec.values[10000] / 2.0;
    let right = (10000..grid.len())
        .find(|&k| spec.values[k] < half)
        .unwrap();
    let hwhm = grid[right];
    // total decay of the coherence is (γ + P) / 2
    assert!((hwhm - (1.0 + pump) / 2.0).abs() < 2e-3, "{hwhm}");
    let modes = emission_modes(&m).unwrap();
    assert!(modes.coherent < 1e-20);
}

#[test]
fn degenerate_steady_state_is_reported() {
    let layout = SpaceLayout::single("2LS", 2).unwrap();
    let s = Operator::new(layout.clone(), sigma_lower()).unwrap();
    let m = LindbladModel::new(Operator::zeros(&layout), vec![], s).unwrap();
    assert!(matches!(
        steady_state(&liouvillian(&m)),
        Err(Error::DegenerateSteadyState { .. })
    ));
}

#[test]
fn random_initial_operators_propagate_consistently() {
    // propagating in two legs equals one leg
    let m = rf(4.0);
    let l = liouvillian(&m);
    let mut r = rng(5);
    let v0: Array1<C64> = vectorize(&random_density(&mut r, 2));
    let t1: f64 = r.random_range(0.1..1.0);
    let t2: f64 = r.random_range(0.1..1.0);
    let mid = evolve_vec(&l, &v0, &[t1]).unwrap().remove(0);
    let two = evolve_vec(&l, &mid, &[t2]).unwrap().remove(0);
    let one = evolve_vec(&l, &v0, &[t1 + t2]).unwrap().remove(0);
    let dev = two
        .iter()
        .zip(&one)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(dev < 1e-12);
}

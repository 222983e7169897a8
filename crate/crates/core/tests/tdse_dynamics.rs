use gaugelink_core::contact::SpinContactCouplings;
use gaugelink_core::doublewell::{eval_wavefunction, DoubleWellParams};
use gaugelink_core::fourlevel::{r_minus, FourLevelModel, Tuning};
use gaugelink_core::ode::{self, OdeOptions};
use gaugelink_core::quad::{integrate, QuadOptions};
use gaugelink_core::tdse::{propagate, ImpurityMode, Propagator, Scenario, TdseModel, TdseOptions};
use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use proptest::prelude::*;

fn tight() -> TdseOptions {
    TdseOptions {
        rtol: 1e-12,
        atol: 1e-14,
        dt_out: 5.0,
        ..Default::default()
    }
}

#[test]
fn two_levels_reproduce_four_level_amplitudes() {
    let mut sc = Scenario::static_reference();
    sc.n_particle_basis = 2;
    let four = FourLevelModel::build(&sc.evolve_well, &sc.couplings, 0.0).unwrap().tuned(Tuning::Shifted);
    sc.omega_r = four.omega_r;
    let model = TdseModel::new(&sc).unwrap();
    let (psi, completeness) = model.initial_state().unwrap();
    assert_eq!(completeness, 1.0);
    let init = r_minus();
    for (a, b) in psi.iter().zip(&init) {
        assert!((a - b).norm() < 1e-15);
    }
    let tr = propagate(&model, &psi, 200.0, &tight()).unwrap();
    let reference = four.evolve(&init, 200.0, 5.0).unwrap();
    for (x, y) in tr.states.iter().zip(&reference.amplitudes) {
        for k in 0..4 {
            assert!((x[k] - y[k]).norm() < 1e-8, "{} vs {}", x[k], y[k]);
        }
    }
}

#[test]
fn decoupled_generator_spectrum() {
    let mut sc = Scenario::static_reference();
    sc.couplings = SpinContactCouplings::zero();
    sc.n_particle_basis = 5;
    let model = TdseModel::new(&sc).unwrap();
    let h = model.generator(0.0);
    let mut got: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    got.sort_by(f64::total_cmp);
    let mut want: Vec<f64> = model
        .particle_energies
        .iter()
        .flat_map(|e| [e - 0.5 * model.omega_r, e + 0.5 * model.omega_r])
        .collect();
    want.sort_by(f64::total_cmp);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn zero_couplings_keep_correlation_zero_and_flip_spin() {
    let mut sc = Scenario::static_reference();
    sc.couplings = SpinContactCouplings::zero();
    let model = TdseModel::new(&sc).unwrap();
    let (mut psi, _) = model.initial_state().unwrap();
    // start in |R, down> so the drive flips the spin
    psi.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    psi[model.index(0, 1, 0)] = Complex64::new(1.0, 0.0);
    let t_flip = std::f64::consts::PI / model.omega_r;
    let opts = TdseOptions {
        dt_out: t_flip / 4.0,
        ..tight()
    };
    let tr = propagate(&model, &psi, 4.0 * t_flip, &opts).unwrap();
    let obs = model.observables(&tr);
    for c in &obs.correlation {
        assert!(c.abs() < 1e-9);
    }
    let up = |s: &[Complex64]| (0..model.n_particle()).map(|n| s[model.index(1, n, 0)].norm_sqr()).sum::<f64>();
    assert!((up(&tr.states[4]) - 1.0).abs() < 1e-9);
    assert!(up(&tr.states[8]).abs() < 1e-9);
}

#[test]
fn left_projector_matches_direct_quadrature() {
    let model = TdseModel::new(&Scenario::static_reference()).unwrap();
    let p = &model.left_projector;
    assert!((p - p.transpose()).amax() < 1e-15);
    let eig = SymmetricEigen::new(p.clone());
    assert!(eig.eigenvalues.iter().all(|&e| e > -1e-12 && e < 1.0 + 1e-12));
    let well = model.scenario.evolve_well;
    let (a, b) = (model.states[0], model.states[3]);
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_intervals: 2000,
    };
    let direct = integrate(
        |x| eval_wavefunction(&a, &well, x).unwrap().value * eval_wavefunction(&b, &well, x).unwrap().value,
        -well.extent(),
        0.0,
        opts,
    )
    .unwrap()
    .value;
    assert!((direct - p[(0, 3)]).abs() < 1e-10);
    assert!(p[(0, 0)] > 0.99 && p[(1, 1)] < 0.02, "{} {}", p[(0, 0)], p[(1, 1)]);
}

#[test]
fn quench_initial_state_is_captured() {
    let mut sc = Scenario::static_reference();
    sc.initial_well = DoubleWellParams::from_geometry(2.0, 1.4, 0.49).unwrap();
    let model = TdseModel::new(&sc).unwrap();
    let (psi, completeness) = model.initial_state().unwrap();
    assert!(completeness >= 0.999 && completeness <= 1.0 + 1e-12, "{completeness}");
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    assert!((norm - 1.0).abs() < 1e-14);
    let o = model.observe(&psi);
    assert!(o.o_r_minus > 0.95 && o.o_l_plus < 0.05);
}

#[test]
fn static_reference_conserves_norm_energy_and_gauge() {
    let model = TdseModel::new(&Scenario::static_reference()).unwrap();
    let (psi, _) = model.initial_state().unwrap();
    let opts = TdseOptions {
        dt_out: 1.0,
        ..Default::default()
    };
    let tr = propagate(&model, &psi, 200.0, &opts).unwrap();
    let e0 = model.energy(0.0, &psi);
    for s in &tr.states {
        let n: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() <= 1e-7);
        assert!((model.energy(0.0, s) - e0).abs() <= 1e-7 * e0.abs());
    }
    let obs = model.observables(&tr);
    for (t, g) in obs.times.iter().zip(&obs.g_l) {
        if *t <= 150.0 {
            assert!((g - 0.5).abs() <= 0.1, "t={t}: {g}");
        }
    }
    // eigen propagation agrees
    let ex = propagate(
        &model,
        &psi,
        200.0,
        &TdseOptions {
            propagator: Propagator::Eigen,
            ..opts
        },
    )
    .unwrap();
    for (a, b) in tr.states.iter().zip(&ex.states) {
        let d = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(d < 1e-6, "{d}");
    }
}

#[test]
fn tightly_trapped_impurity_follows_static_result() {
    let stat = TdseModel::new(&Scenario::static_reference()).unwrap();
    let mut sc = Scenario::static_reference();
    sc.impurity = ImpurityMode::Harmonic { omega_i: 100.0 };
    sc.n_impurity_basis = 8;
    let trap = TdseModel::new(&sc).unwrap();
    let opts = TdseOptions {
        dt_out: 1.0,
        ..Default::default()
    };
    let run = |m: &TdseModel| {
        let (psi, _) = m.initial_state().unwrap();
        let tr = propagate(m, &psi, 150.0, &opts).unwrap();
        let e0 = m.energy(0.0, &psi);
        let e1 = m.energy(150.0, tr.states.last().unwrap());
        assert!((e1 - e0).abs() <= 1e-7 * e0.abs());
        m.observables(&tr).o_l_plus
    };
    let (a, b) = (run(&stat), run(&trap));
    let dev = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(dev <= 0.02, "{dev}");
}

#[test]
fn paul_trap_interaction_picture_matches_direct_integration() {
    let mut sc = Scenario::static_reference();
    sc.impurity = ImpurityMode::default_paul();
    sc.n_particle_basis = 3;
    sc.n_impurity_basis = 4;
    let model = TdseModel::new(&sc).unwrap();
    let (psi, _) = model.initial_state().unwrap();
    let t_final = 0.05;
    let opts = TdseOptions {
        rtol: 1e-11,
        atol: 1e-13,
        dt_out: t_final,
        ..Default::default()
    };
    let tr = propagate(&model, &psi, t_final, &opts).unwrap();
    assert!(matches!(
        propagate(&model, &psi, t_final, &TdseOptions { propagator: Propagator::Eigen, ..opts }),
        Err(_)
    ));
    let mut direct = Vec::new();
    let d = psi.len();
    ode::integrate(
        |t, y, dy| {
            let h = model.generator(t);
            for i in 0..d {
                let mut s = Complex64::new(0.0, 0.0);
                for j in 0..d {
                    s += y[j] * h[(i, j)];
                }
                dy[i] = Complex64::new(s.im, -s.re);
            }
        },
        0.0,
        &psi,
        &[t_final],
        &OdeOptions {
            rtol: 1e-12,
            atol: 1e-14,
            h_max: 1e-5,
            ..Default::default()
        },
        |_, _, y| direct = y.to_vec(),
    )
    .unwrap();
    let last = tr.states.last().unwrap();
    let dev = last.iter().zip(&direct).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(dev < 1e-7, "{dev}");
    let n: f64 = last.iter().map(|z| z.norm_sqr()).sum();
    assert!((n - 1.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generator_is_symmetric(t in 0.0f64..1.0, g_e in -2.0f64..2.0, g_o in -0.5f64..0.5) {
        let mut sc = Scenario::static_reference();
        sc.couplings = SpinContactCouplings::opposite(g_e, g_o);
        sc.impurity = ImpurityMode::default_paul();
        sc.n_particle_basis = 3;
        sc.n_impurity_basis = 3;
        let model = TdseModel::new(&sc).unwrap();
        let h = model.generator(t);
        prop_assert!((&h - h.transpose()).amax() <= 1e-12 * h.amax());
    }
}

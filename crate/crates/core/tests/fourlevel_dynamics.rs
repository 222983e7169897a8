use gaugelink_core::contact::SpinContactCouplings;
use gaugelink_core::doublewell::DoubleWellParams;
use gaugelink_core::fourlevel::{
    green_couplings, observables, r_minus, reference_well, same_sign_couplings, FourLevelModel, Tuning,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn green() -> FourLevelModel {
    FourLevelModel::build(&reference_well(), &green_couplings(), 0.0).unwrap().tuned(Tuning::Shifted)
}

/// `pi / (2 |J^z_LR|)` with `J^z = (J^up - J^down) / 2`.
fn rwa_transfer_time(m: &FourLevelModel) -> f64 {
    let jz = 0.5 * (m.j[1][0][1] - m.j[0][0][1]);
    std::f64::consts::PI / (2.0 * jz.abs())
}

#[test]
fn green_scenario_exchanges_r_minus_and_l_plus() {
    let m = green();
    assert!((m.resonant_rabi() - m.detuning()).abs() < 1e-15);
    let t_star = rwa_transfer_time(&m);
    let traj = m.evolve(&r_minus(), 2.5 * t_star, 0.05).unwrap();
    let obs = observables(&traj);
    let first_period: Vec<usize> = (0..obs.times.len()).filter(|&i| obs.times[i] <= 1.2 * t_star).collect();
    let max_o = first_period.iter().map(|&i| obs.o_l_plus[i]).fold(0.0, f64::max);
    assert!(max_o >= 0.99, "{max_o}");
    let (t_peak, _) = obs.first_peak(0.9).unwrap();
    assert!((t_peak - t_star).abs() <= 0.15 * t_star, "{t_peak} vs {t_star}");
    let max_c = first_period.iter().map(|&i| obs.correlation[i].abs()).fold(0.0, f64::max);
    assert!(max_c >= 0.9, "{max_c}");
    let drift = first_period.iter().map(|&i| (obs.g_l[i] - obs.g_l[0]).abs()).fold(0.0, f64::max);
    assert!(drift <= 0.05, "{drift}");
    // the exchange is periodic: back to |R,-> after a full cycle
    let back = obs
        .times
        .iter()
        .zip(&obs.o_r_minus)
        .filter(|(t, _)| (**t - 2.0 * t_star).abs() < 0.2 * t_star)
        .map(|(_, o)| *o)
        .fold(0.0, f64::max);
    assert!(back > 0.98, "{back}");
}

#[test]
fn shifted_resonance_beats_bare_tuning() {
    let base = FourLevelModel::build(&reference_well(), &same_sign_couplings(), 0.0).unwrap();
    assert!((base.resonant_rabi() - base.detuning()).abs() > 1e-3);
    let run = |tuning| {
        let m = base.tuned(tuning);
        observables(&m.evolve(&r_minus(), 600.0, 0.1).unwrap()).max_o_l_plus()
    };
    let (blue, magenta) = (run(Tuning::Bare), run(Tuning::Shifted));
    assert!(blue < magenta, "{blue} vs {magenta}");
}

#[test]
fn decoupled_blocks() {
    let m = FourLevelModel::build(&reference_well(), &SpinContactCouplings::zero(), 0.0).unwrap();
    let m = m.tuned(Tuning::Bare);
    let traj = m.evolve(&r_minus(), 50.0, 0.25).unwrap();
    let obs = observables(&traj);
    for i in 0..obs.times.len() {
        let c = &traj.amplitudes[i];
        let right = c[1].norm_sqr() + c[3].norm_sqr();
        assert!((right - 1.0).abs() < 1e-12);
        assert!(obs.correlation[i].abs() < 1e-12);
    }
    // |R,-> is a sigma_x eigenstate, so flip |R,down> instead
    let mut down = [Complex64::new(0.0, 0.0); 4];
    down[1] = Complex64::new(1.0, 0.0);
    let t_flip = std::f64::consts::PI / m.omega_r;
    let traj = m.evolve(&down, t_flip, t_flip).unwrap();
    assert!((traj.amplitudes[1][3].norm_sqr() - 1.0).abs() < 1e-12);
}

#[test]
fn no_rabi_drive_freezes_spin() {
    let m = FourLevelModel::build(&reference_well(), &green_couplings(), 0.0).unwrap();
    let traj = m.evolve(&r_minus(), 100.0, 1.0).unwrap();
    for c in &traj.amplitudes {
        let up = c[2].norm_sqr() + c[3].norm_sqr();
        assert!((up - 0.5).abs() < 1e-12);
    }
}

fn coupling() -> impl Strategy<Value = f64> {
    -2.0f64..2.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn unitary_and_energy_conserving(
        g in proptest::array::uniform4(coupling()),
        omega in 0.0f64..1.0,
        delta in 0.0f64..1.0,
    ) {
        let p = DoubleWellParams::from_geometry(2.0, 1.0, delta).unwrap();
        let c = SpinContactCouplings { g_e_up: g[0], g_e_down: g[1], g_o_up: g[2], g_o_down: g[3] };
        let m = FourLevelModel::build(&p, &c, omega).unwrap();
        let h = m.matrix();
        prop_assert_eq!(h, h.transpose());
        let init = r_minus();
        let e0 = m.energy(&init);
        let traj = m.evolve(&init, 500.0, 25.0).unwrap();
        for a in &traj.amplitudes {
            let n: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((n - 1.0).abs() < 1e-9);
            prop_assert!((m.energy(a) - e0).abs() < 1e-9);
        }
    }

    #[test]
    fn rwa_transfer_time_and_gauge_robustness(g_e in 0.5f64..1.5, g_o in 0.0f64..0.2) {
        let m = FourLevelModel::build(&reference_well(), &SpinContactCouplings::opposite(g_e, g_o), 0.0)
            .unwrap()
            .tuned(Tuning::Shifted);
        // separation of scales: {Delta, Omega} vs the largest coupling element
        let jmax = m.j.iter().flatten().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
        prop_assume!(m.detuning() >= 20.0 * jmax);
        let t_star = rwa_transfer_time(&m);
        let obs = observables(&m.evolve(&r_minus(), 1.3 * t_star, 0.05).unwrap());
        let (t_peak, _) = obs.first_peak(0.5).unwrap();
        prop_assert!((t_peak - t_star).abs() <= 0.15 * t_star);
        prop_assert!(obs.max_o_l_plus() >= 0.99);
        let drift = obs.g_l.iter().map(|g| (g - obs.g_l[0]).abs()).fold(0.0, f64::max);
        prop_assert!(drift <= 0.05);
    }
}

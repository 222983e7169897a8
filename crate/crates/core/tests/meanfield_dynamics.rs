use gaugelink_core::contact::{Spin, SpinContactCouplings};
use gaugelink_core::doublewell::{eval_wavefunction, solve_noninteracting, DoubleWellParams};
use gaugelink_core::fourlevel::Observables;
use gaugelink_core::meanfield::*;
use num_complex::Complex64;
use proptest::prelude::*;

type C64 = Complex64;

fn reference() -> MeanFieldConfig {
    MeanFieldConfig::condensate_reference()
}

fn coarse() -> MeanFieldConfig {
    let mut c = reference();
    c.grid.n_points = 256;
    c
}

/// `g int |psi|^4` from the lowest two modes of a fine finite-difference grid.
fn grid_interaction_energies(c: &MeanFieldConfig) -> (f64, f64) {
    let cfg = MeanFieldConfig {
        couplings: SpinContactCouplings::zero(),
        grid: GridSpec { x_max: 10.0, n_points: 1024 },
        ..c.clone()
    };
    let grid = Grid::new(&cfg).unwrap();
    let eig = nalgebra::SymmetricEigen::new(grid.linear_matrix(0));
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let u = |k: usize| {
        let v = eig.eigenvectors.column(order[k]);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>() * grid.dx;
        c.g * v.iter().map(|x| (x * x / norm).powi(2)).sum::<f64>() * grid.dx
    };
    (u(0), u(1))
}

#[test]
fn interaction_energies_match_grid_quadrature() {
    let c = reference();
    let m = well_mode_energies(&c).unwrap();
    let (u_l, u_r) = grid_interaction_energies(&c);
    assert!((m.u_l - u_l).abs() < 2e-5 * u_l, "{} vs {u_l}", m.u_l);
    assert!((m.u_r - u_r).abs() < 2e-5 * u_r, "{} vs {u_r}", m.u_r);
    // frozen from the analytic modes
    assert!((m.u_l - 0.0832523).abs() < 1e-6);
    assert!((m.u_r - 0.0815378).abs() < 1e-6);
    assert!((m.e_l0 - 0.4987474).abs() < 1e-6 && (m.e_r0 - 0.9955396).abs() < 1e-6);
}

#[test]
fn interaction_energies_vanish_and_mirror() {
    let mut c = reference();
    c.g = 0.0;
    let m = well_mode_energies(&c).unwrap();
    assert_eq!((m.u_l, m.u_r), (0.0, 0.0));
    let mut c = reference();
    c.well = DoubleWellParams::from_geometry(2.0, 1.0, 0.0).unwrap();
    let m = well_mode_energies(&c).unwrap();
    assert!((m.u_l - m.u_r).abs() < 1e-9 * m.u_l);
}

#[test]
fn compensating_pulse_examples() {
    let free = ModeEnergies { e_l0: 0.5, e_r0: 1.0, u_l: 0.0, u_r: 0.0 };
    for t in [0.0, 1.3, 40.0] {
        assert_eq!(compensating_pulse(&free, t, PulseSign::Verbatim), -0.5);
        assert_eq!(compensating_pulse(&free, t, PulseSign::Magnitude), 0.5);
    }
    let sym = ModeEnergies { u_l: 0.08, u_r: 0.08, ..free };
    for t in [0.0, 2.0, 7.5] {
        let want = -0.5 + 0.08 * (0.5f64 * t).cos();
        assert!((compensating_pulse(&sym, t, PulseSign::Verbatim) - want).abs() < 1e-15);
    }
    let m = well_mode_energies(&reference()).unwrap();
    let at0 = m.e_l0 - m.e_r0 + (m.u_l - m.u_r) + 0.5 * (m.u_l + m.u_r);
    assert!((compensating_pulse(&m, 0.0, PulseSign::Verbatim) - at0).abs() < 1e-15);
    assert!((at0 - (-0.4126826)).abs() < 1e-6, "{at0}");
}

#[test]
fn linear_orbital_converges_to_the_bare_mode() {
    let dev = |n: usize| {
        let mut c = reference();
        c.g = 0.0;
        c.grid.n_points = n;
        let grid = Grid::new(&c).unwrap();
        let phi = right_well_orbital(&c, &grid).unwrap();
        let r = solve_noninteracting(&c.well, 2).unwrap()[1];
        let sign = eval_wavefunction(&r, &c.well, c.well.d_r).unwrap().value.signum();
        grid.x
            .iter()
            .zip(&phi)
            .map(|(&x, p)| (p - sign * eval_wavefunction(&r, &c.well, x).unwrap().value).abs())
            .fold(0.0, f64::max)
    };
    let (a, b) = (dev(256), dev(512));
    assert!(b < 1e-4, "{b}");
    // second order: the potential has a kink at the origin
    assert!(a / b > 3.5, "{a} / {b}");
}

#[test]
fn initial_state_observables() {
    let c = reference();
    let (grid, st) = initial_state(&c).unwrap();
    assert!((st.norm(&grid) - 1.0).abs() < 1e-13);
    let o = observe(&grid, &c, &st).unwrap();
    assert!((o.sigma_x + 1.0).abs() < 1e-12);
    assert!(o.o_l < 0.02, "{}", o.o_l);
    assert!((o.g_l - 0.5).abs() < 0.02);
    assert!(o.o_l_plus.abs() < 1e-12 && o.correlation.abs() < 1e-12);
}

#[test]
fn interacting_orbital_stays_in_the_right_well() {
    let c = reference();
    let grid = Grid::new(&c).unwrap();
    let phi = right_well_orbital(&c, &grid).unwrap();
    let left: f64 = grid.x.iter().zip(&phi).filter(|(x, _)| **x < 0.0).map(|(_, p)| p * p).sum::<f64>() * grid.dx;
    assert!(left < 0.02, "{left}");
    // repulsion spreads the orbital: lower peak than the bare mode
    let bare = right_well_orbital(&MeanFieldConfig { g: 0.0, ..c.clone() }, &grid).unwrap();
    let peak = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    assert!(peak(&phi) < peak(&bare));
}

#[test]
fn undriven_spin_populations_are_constant() {
    let c = MeanFieldConfig {
        couplings: SpinContactCouplings::opposite(1.0, 0.0),
        ..coarse()
    };
    let (grid, st) = initial_state(&c).unwrap();
    let tr = propagate(&c, &grid, &st, &Pulse::Off, 5.0, 1.0).unwrap();
    for s in &tr.states {
        for a in 0..2 {
            assert!((s.coefficient(&grid, a).norm_sqr() - 0.5).abs() < 1e-9);
        }
        assert!((s.norm(&grid) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn equal_couplings_keep_correlation_zero() {
    let c = MeanFieldConfig {
        couplings: SpinContactCouplings { g_e_up: 1.0, g_e_down: 1.0, g_o_up: 0.0, g_o_down: 0.0 },
        ..coarse()
    };
    let (grid, st) = initial_state(&c).unwrap();
    let pulse = Pulse::Compensating { sign: PulseSign::Verbatim };
    let tr = propagate(&c, &grid, &st, &pulse, 5.0, 0.5).unwrap();
    let s = mf_observables(&tr, &grid, &c).unwrap();
    for o in &s.samples {
        assert!(o.correlation.abs() < 1e-9, "{}", o.correlation);
    }
    assert!(s.max_norm_drift() < 1e-8);
}

#[test]
fn split_and_single_system_agree() {
    let c = MeanFieldConfig { tol: 1e-10, ..coarse() };
    let (grid, st) = initial_state(&c).unwrap();
    let pulse = Pulse::Compensating { sign: PulseSign::Verbatim };
    let a = mf_observables(&propagate(&c, &grid, &st, &pulse, 10.0, 1.0).unwrap(), &grid, &c).unwrap();
    let b = mf_observables(&propagate_split(&c, &grid, &st, &pulse, 10.0, 1.0).unwrap(), &grid, &c).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        for (p, q) in [
            (x.o_l, y.o_l),
            (x.o_l_plus, y.o_l_plus),
            (x.correlation, y.correlation),
            (x.g_l, y.g_l),
            (x.sigma_x, y.sigma_x),
        ] {
            assert!((p - q).abs() < 1e-6, "{p} vs {q}");
        }
    }
    assert!(a.max_norm_drift() < 1e-8 && b.max_norm_drift() < 1e-8);
}

#[test]
fn invalid_configurations_are_rejected() {
    let bad = [
        MeanFieldConfig { n_particles: 0, ..reference() },
        MeanFieldConfig { grid: GridSpec { x_max: 10.0, n_points: 300 }, ..reference() },
        MeanFieldConfig { grid: GridSpec { x_max: 5.0, n_points: 512 }, ..reference() },
        MeanFieldConfig { tol: 0.0, ..reference() },
    ];
    for c in bad {
        assert!(c.validate().is_err(), "{c:?}");
    }
}

fn localized_pair(grid: &Grid) -> (Vec<C64>, Vec<C64>) {
    let bump = |c: f64, side: f64| -> Vec<C64> {
        let v: Vec<f64> = grid
            .x
            .iter()
            .map(|&x| if side * x > 0.0 { (-(x - c).powi(2)).exp() } else { 0.0 })
            .collect();
        let n = (v.iter().map(|x| x * x).sum::<f64>() * grid.dx).sqrt();
        v.iter().map(|x| C64::new(x / n, 0.0)).collect()
    };
    (bump(-2.2, -1.0), bump(2.0, 1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn single_particle_observables_reduce_to_two_body(raw in prop::array::uniform8(-1.0f64..1.0)) {
        let c = MeanFieldConfig { n_particles: 1, g: 0.0, ..coarse() };
        let grid = Grid::new(&c).unwrap();
        let (l, r) = localized_pair(&grid);
        // amps[well][spin] with spin 0 = up
        let z: Vec<C64> = raw.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
        let norm = z.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 0.1);
        let amps = [[z[0] / norm, z[1] / norm], [z[2] / norm, z[3] / norm]];
        prop_assume!((amps[0][0].norm_sqr() + amps[1][0].norm_sqr()).sqrt() > 1e-3);
        prop_assume!((amps[0][1].norm_sqr() + amps[1][1].norm_sqr()).sqrt() > 1e-3);
        let psi = |spin: usize| -> Vec<C64> {
            l.iter().zip(&r).map(|(a, b)| amps[0][spin] * a + amps[1][spin] * b).collect()
        };
        let st = MeanFieldState { psi: [psi(0), psi(1)], phase: [C64::new(1.0, 0.0); 2] };
        let o = observe(&grid, &c, &st).unwrap();
        let (d, u) = (Spin::Down.index(), Spin::Up.index());
        let mut w = [[C64::new(0.0, 0.0); 2]; 2];
        for well in 0..2 {
            w[well][d] = amps[well][1];
            w[well][u] = amps[well][0];
        }
        let want = Observables::from_amplitudes(w);
        prop_assert!((o.o_l_plus - want.o_l_plus).abs() < 1e-12);
        prop_assert!((o.o_r_minus - want.o_r_minus).abs() < 1e-12);
        prop_assert!((o.correlation - want.correlation).abs() < 1e-12);
        prop_assert!((o.g_l - want.g_l).abs() < 1e-12);
    }

    #[test]
    fn pulse_sign_only_flips_the_leading_term(t in 0.0f64..200.0, ul in 0.0f64..0.2, ur in 0.0f64..0.2) {
        let m = ModeEnergies { e_l0: 0.4987, e_r0: 0.9955, u_l: ul, u_r: ur };
        let v = compensating_pulse(&m, t, PulseSign::Verbatim);
        let g = compensating_pulse(&m, t, PulseSign::Magnitude);
        prop_assert!((g - v - 2.0 * (m.e_r0 - m.e_l0)).abs() < 1e-12);
    }
}

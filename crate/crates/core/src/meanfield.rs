//! Condensate of N bosons in the double well coupled to a static two-level impurity,
//! in the product-state mean-field ansatz `sum_a C_a phi_a^(x)N |a>`.
//!
//! Spin component 0 is the impurity's up state, component 1 its down state, so the
//! initial `(|0> - |1>) / sqrt 2` is the same `|->` as in the two-body modules.
//! The drive is `(Omega_R / 2) sigma_x`, as in the two-body Hamiltonians.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contact::SpinContactCouplings;
use crate::doublewell::{eval_wavefunction, solve_noninteracting, DoubleWellParams};
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, OdeStats};
use crate::quad::{integrate_pieces, QuadOptions};

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
/// Smallest spin-component norm before the orbitals become undefined.
/// Bare right-well modes spanning the orbital relaxation.
const RIGHT_MODES: usize = 40;

pub const COEFFICIENT_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            x_max: 10.0,
            n_points: 512,
        }
    }
}

/// How the phase of `C_a` is fixed when only `psi_a = C_a phi_a` is propagated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseConvention {
    /// The phase of `C_a` is propagated alongside `psi_a`; exact for every N.
    #[default]
    Tracked,
    /// `phi_a = psi_a / |psi_a|`, i.e. `C_a` real and positive.
    Modulus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldConfig {
    pub n_particles: usize,
    /// boson-boson coupling
    pub g: f64,
    pub well: DoubleWellParams,
    /// Only the even-wave strengths enter.
    pub couplings: SpinContactCouplings,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub phase: PhaseConvention,
}

fn default_tol() -> f64 {
    1e-9
}

impl MeanFieldConfig {
    /// Ten bosons with `g = 0.21` in the reference well, impurity couplings `g_e = +-1`.
    pub fn condensate_reference() -> Self {
        MeanFieldConfig {
            n_particles: 10,
            g: 0.21,
            well: crate::fourlevel::reference_well(),
            couplings: SpinContactCouplings::opposite(1.0, 0.0),
            grid: GridSpec::default(),
            tol: 1e-9,
            phase: PhaseConvention::Tracked,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::Parameter("n_particles must be >= 1".into()));
        }
        let n = self.grid.n_points;
        if n < 256 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!("n_points = {n} must be a power of two >= 256")));
        }
        let reach = self.well.d_l.max(self.well.d_r) + 6.0;
        if !(self.grid.x_max >= reach) {
            return Err(Error::Parameter(format!("x_max = {} must be >= {reach}", self.grid.x_max)));
        }
        if !(self.g.is_finite() && self.couplings.is_finite() && self.tol > 0.0 && self.tol < 1e-3) {
            return Err(Error::Parameter("g, couplings and tol must be finite (tol in (0, 1e-3))".into()));
        }
        Ok(())
    }
}

/// Uniform grid `x_j = -x_max + j dx`, `dx = 2 x_max / n`, with zero values past both ends.
#[derive(Clone, Debug)]
pub struct Grid {
    pub x: Vec<f64>,
    pub dx: f64,
    /// external potential plus each component's contact term
    pub potential: [Vec<f64>; 2],
    left: Vec<f64>,
    right: Vec<f64>,
}

impl Grid {
    pub fn new(config: &MeanFieldConfig) -> Result<Self> {
        config.validate()?;
        let n = config.grid.n_points;
        let dx = 2.0 * config.grid.x_max / n as f64;
        let x: Vec<f64> = (0..n).map(|j| -config.grid.x_max + j as f64 * dx).collect();
        let base: Vec<f64> = x.iter().map(|&x| config.well.potential(x)).collect();
        let c = &config.couplings;
        let mut potential = [base.clone(), base];
        // discrete delta, split linearly when the origin is not a node
        let p = config.grid.x_max / dx;
        let j = p.floor() as usize;
        let frac = p - j as f64;
        for (a, g_e) in [c.g_e_up, c.g_e_down].into_iter().enumerate() {
            potential[a][j] += g_e * (1.0 - frac) / dx;
            if frac > 0.0 {
                potential[a][j + 1] += g_e * frac / dx;
            }
        }
        let left: Vec<f64> = x
            .iter()
            .map(|&x| if x < 0.0 { dx } else if x == 0.0 { 0.5 * dx } else { 0.0 })
            .collect();
        let right = left.iter().map(|w| dx - w).collect();
        Ok(Grid {
            x,
            dx,
            potential,
            left,
            right,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `out = (-1/2 d^2/dx^2 + V_a) psi` with the fourth-order stencil.
    fn apply_linear(&self, a: usize, psi: &[C64], out: &mut [C64]) {
        let n = psi.len();
        let c = -0.5 / (12.0 * self.dx * self.dx);
        let v = &self.potential[a];
        let at = |k: isize| if k < 0 || k >= n as isize { ZERO } else { psi[k as usize] };
        for j in (0..2).chain(n - 2..n) {
            let k = j as isize;
            let lap = -at(k - 2) + 16.0 * at(k - 1) - 30.0 * psi[j] + 16.0 * at(k + 1) - at(k + 2);
            out[j] = lap * c + psi[j] * v[j];
        }
        for j in 2..n - 2 {
            let lap = (psi[j - 1] + psi[j + 1]) * 16.0 - (psi[j - 2] + psi[j + 2]) - psi[j] * 30.0;
            out[j] = lap * c + psi[j] * v[j];
        }
    }

    pub fn linear_matrix(&self, a: usize) -> DMatrix<f64> {
        let n = self.len();
        let c = -0.5 / (12.0 * self.dx * self.dx);
        DMatrix::from_fn(n, n, |i, j| {
            let d = i.abs_diff(j);
            let stencil = match d {
                0 => -30.0,
                1 => 16.0,
                2 => -1.0,
                _ => 0.0,
            };
            c * stencil + if d == 0 { self.potential[a][i] } else { 0.0 }
        })
    }

    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() * self.dx
    }

    fn weighted(&self, w: &[f64], a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).zip(w).map(|((x, y), w)| x.conj() * y * *w).sum()
    }

    pub fn norm_sqr(&self, a: &[C64]) -> f64 {
        a.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeEnergies {
    pub e_l0: f64,
    pub e_r0: f64,
    pub u_l: f64,
    pub u_r: f64,
}

/// Bare energies of the left and right well modes and `U = g int |psi|^4` of each.
pub fn well_mode_energies(config: &MeanFieldConfig) -> Result<ModeEnergies> {
    let p = config.well;
    let states = solve_noninteracting(&p, 2)?;
    let ext = p.extent();
    let opts = QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    let integral = |f: &dyn Fn(f64, f64) -> f64| -> Result<f64> {
        let mut failed = None;
        let v = integrate_pieces(
            |x| match (eval_wavefunction(&states[0], &p, x), eval_wavefunction(&states[1], &p, x)) {
                (Ok(a), Ok(b)) => f(a.value, b.value),
                (Err(e), _) | (_, Err(e)) => {
                    failed = Some(e);
                    0.0
                }
            },
            &[-ext, -p.d_l, 0.0, p.d_r, ext],
            opts,
        )?
        .value;
        failed.map_or(Ok(v), Err)
    };
    if p.is_symmetric() {
        // eigenstates are parity combinations; the wells hold (psi_0 +- psi_1) / sqrt 2
        let u = 0.25 * config.g * integral(&|a, b| a.powi(4) + 6.0 * a * a * b * b + b.powi(4))?;
        let e = 0.5 * (states[0].energy + states[1].energy);
        return Ok(ModeEnergies { e_l0: e, e_r0: e, u_l: u, u_r: u });
    }
    let left = integrate_pieces(
        |x| eval_wavefunction(&states[0], &p, x).map_or(0.0, |w| w.value * w.value),
        &[-ext, -p.d_l, 0.0],
        opts,
    )?
    .value;
    let (l, r) = if left >= 0.5 { (0, 1) } else { (1, 0) };
    let quartic = [integral(&|a, _| a.powi(4))?, integral(&|_, b| b.powi(4))?];
    Ok(ModeEnergies {
        e_l0: states[l].energy,
        e_r0: states[r].energy,
        u_l: config.g * quartic[l],
        u_r: config.g * quartic[r],
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseSign {
    /// leading term `E_L - E_R`, negative for the usual well ordering
    #[default]
    Verbatim,
    /// leading term `|E_R - E_L|`
    Magnitude,
}

/// `E_L - E_R + dU + U cos(J t)` with `J = E_R - E_L`, `dU = U_L - U_R`, `U = (U_L + U_R) / 2`.
pub fn compensating_pulse(m: &ModeEnergies, t: f64, sign: PulseSign) -> f64 {
    let j = m.e_r0 - m.e_l0;
    let lead = match sign {
        PulseSign::Verbatim => m.e_l0 - m.e_r0,
        PulseSign::Magnitude => j.abs(),
    };
    lead + (m.u_l - m.u_r) + 0.5 * (m.u_l + m.u_r) * (j * t).cos()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Pulse {
    Off,
    Constant { omega: f64 },
    Compensating {
        #[serde(default)]
        sign: PulseSign,
    },
}

impl Pulse {
    pub fn at(&self, modes: &ModeEnergies, t: f64) -> f64 {
        match *self {
            Pulse::Off => 0.0,
            Pulse::Constant { omega } => omega,
            Pulse::Compensating { sign } => compensating_pulse(modes, t, sign),
        }
    }
}

/// `psi_a = C_a phi_a` on the grid plus the unit phase of each `C_a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanFieldState {
    pub psi: [Vec<C64>; 2],
    pub phase: [C64; 2],
}

impl MeanFieldState {
    pub fn norm(&self, grid: &Grid) -> f64 {
        grid.norm_sqr(&self.psi[0]) + grid.norm_sqr(&self.psi[1])
    }

    pub fn coefficient(&self, grid: &Grid, a: usize) -> C64 {
        self.phase[a] * grid.norm_sqr(&self.psi[a]).sqrt()
    }

    /// Normalized orbital `phi_a`.
    pub fn orbital(&self, grid: &Grid, a: usize) -> Result<Vec<C64>> {
        let n = grid.norm_sqr(&self.psi[a]).sqrt();
        if n < COEFFICIENT_FLOOR {
            return Err(Error::Numerical(format!("|C_{a}| = {n:e} fell below the floor")));
        }
        let s = self.phase[a].conj() / n;
        Ok(self.psi[a].iter().map(|z| z * s).collect())
    }
}

/// Self-consistent stationary orbital continued from the bare right-well mode.
///
/// The relaxation is restricted to bare eigenmodes that live mostly at `x > 0`: the
/// interacting right-well level sits close to excited left-well levels, and an
/// unrestricted iteration hybridizes with them. Each step diagonalizes
/// `H = -1/2 d^2 + V + g (N - 1) rho` in that subspace with a damped density and keeps
/// the eigenvector closest to the previous orbital.
pub fn right_well_orbital(config: &MeanFieldConfig, grid: &Grid) -> Result<Vec<f64>> {
    let n = grid.len();
    let bare_cfg = MeanFieldConfig {
        couplings: SpinContactCouplings::zero(),
        ..config.clone()
    };
    let bare = Grid::new(&bare_cfg)?;
    let eig = nalgebra::SymmetricEigen::new(bare.linear_matrix(0));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let right_weight = |k: usize| eig.eigenvectors.column(k).iter().zip(&grid.right).map(|(v, w)| v * v * w).sum::<f64>() / grid.dx;
    let modes: Vec<usize> = order.iter().copied().filter(|&k| right_weight(k) > 0.5).take(RIGHT_MODES).collect();
    if modes.is_empty() {
        return Err(Error::Numerical("no bare mode is localized in the right well".into()));
    }
    let basis = DMatrix::from_fn(n, modes.len(), |j, c| eig.eigenvectors[(j, modes[c])]);
    let energies: Vec<f64> = modes.iter().map(|&k| eig.eigenvalues[k]).collect();
    let normalize = |v: &mut Vec<f64>| {
        let s = (v.iter().map(|x| x * x).sum::<f64>() * grid.dx).sqrt();
        let peak = v.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
        let sign = if v[peak] < 0.0 { -1.0 } else { 1.0 };
        v.iter_mut().for_each(|x| *x *= sign / s);
    };
    let mut phi: Vec<f64> = basis.column(0).iter().copied().collect();
    normalize(&mut phi);
    let nonlinear = config.g * (config.n_particles as f64 - 1.0);
    if nonlinear == 0.0 {
        return Ok(phi);
    }
    let m = modes.len();
    let mut coeff = DVector::from_element(m, 0.0);
    coeff[0] = 1.0;
    let mut rho: Vec<f64> = phi.iter().map(|x| x * x).collect();
    for _ in 0..400 {
        let weighted = DMatrix::from_fn(n, m, |j, c| basis[(j, c)] * nonlinear * rho[j]);
        let mut h = basis.transpose() * weighted;
        for c in 0..m {
            h[(c, c)] += energies[c];
        }
        let sub = nalgebra::SymmetricEigen::new(h);
        let overlaps = sub.eigenvectors.transpose() * &coeff;
        let (best, _) = overlaps.abs().argmax();
        let mut next_coeff: DVector<f64> = sub.eigenvectors.column(best).into();
        if overlaps[best] < 0.0 {
            next_coeff = -next_coeff;
        }
        let change = (&next_coeff - &coeff).amax();
        coeff = next_coeff;
        let mut next: Vec<f64> = (&basis * &coeff).iter().copied().collect();
        normalize(&mut next);
        phi = next;
        rho.iter_mut().zip(&phi).for_each(|(r, p)| *r = 0.5 * *r + 0.5 * p * p);
        if change < 1e-11 {
            return Ok(phi);
        }
    }
    Err(Error::Numerical("orbital relaxation did not converge in 400 steps".into()))
}

/// Both spin components in the right-well orbital with impurity state `|->`.
pub fn initial_state(config: &MeanFieldConfig) -> Result<(Grid, MeanFieldState)> {
    let grid = Grid::new(config)?;
    let phi = right_well_orbital(config, &grid)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let up: Vec<C64> = phi.iter().map(|&p| C64::new(h * p, 0.0)).collect();
    let down: Vec<C64> = phi.iter().map(|&p| C64::new(-h * p, 0.0)).collect();
    let phase = match config.phase {
        PhaseConvention::Tracked => [C64::new(1.0, 0.0), C64::new(-1.0, 0.0)],
        PhaseConvention::Modulus => [C64::new(1.0, 0.0); 2],
    };
    Ok((grid, MeanFieldState { psi: [up, down], phase }))
}

#[derive(Clone, Debug, Serialize)]
pub struct MeanFieldTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
    pub pulse: Vec<f64>,
    pub stats: OdeStats,
}

fn check_initial(grid: &Grid, state: &MeanFieldState) -> Result<()> {
    let n = grid.len();
    if state.psi.iter().any(|p| p.len() != n) {
        return Err(Error::Parameter("state does not live on the configured grid".into()));
    }
    let norm = state.norm(grid);
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Parameter(format!("initial norm {norm} is not 1")));
    }
    Ok(())
}

fn output_times(t_final: f64, dt_out: f64) -> Result<Vec<f64>> {
    if !(t_final >= 0.0 && dt_out > 0.0 && t_final.is_finite()) {
        return Err(Error::Parameter(format!("t_final = {t_final}, dt_out = {dt_out}")));
    }
    let samples = (t_final / dt_out + 1e-9).floor() as usize + 1;
    Ok((0..samples).map(|i| i as f64 * dt_out).collect())
}

/// Propagates `psi_a` (and the phases of `C_a`) under the single coupled system
/// `i psi_a' = H_gp[phi_a] psi_a + (Omega/2) <phi_a|phi_b>^(N-1) psi_b - (g/2)(N-1) <|phi_a|^2> psi_a`.
pub fn propagate(
    config: &MeanFieldConfig,
    grid: &Grid,
    state: &MeanFieldState,
    pulse: &Pulse,
    t_final: f64,
    dt_out: f64,
) -> Result<MeanFieldTrajectory> {
    check_initial(grid, state)?;
    let modes = well_mode_energies(config)?;
    let n = grid.len();
    let np = config.n_particles as u32;
    let nl = config.g * (np as f64 - 1.0);
    let tracked = config.phase == PhaseConvention::Tracked;
    let mut y: Vec<C64> = state.psi[0].iter().chain(&state.psi[1]).copied().collect();
    y.push(state.phase[0]);
    y.push(state.phase[1]);
    let floor_hit = Cell::new(false);
    let mut lin = vec![ZERO; n];
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let omega = pulse.at(&modes, t);
        let psi = [&y[..n], &y[n..2 * n]];
        let norms = [grid.norm_sqr(psi[0]).sqrt(), grid.norm_sqr(psi[1]).sqrt()];
        if norms[0] < COEFFICIENT_FLOOR || norms[1] < COEFFICIENT_FLOOR {
            floor_hit.set(true);
            dy.iter_mut().for_each(|z| *z = ZERO);
            return;
        }
        let unit = if tracked {
            [y[2 * n] / y[2 * n].norm(), y[2 * n + 1] / y[2 * n + 1].norm()]
        } else {
            [C64::new(1.0, 0.0); 2]
        };
        let s01 = grid.inner(psi[0], psi[1]) * unit[0] * unit[1].conj() / (norms[0] * norms[1]);
        let overlap = [s01, s01.conj()];
        for a in 0..2 {
            let b = 1 - a;
            let inv = 1.0 / (norms[a] * norms[a]);
            let quartic: f64 = psi[a].iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * grid.dx * inv * inv;
            grid.apply_linear(a, psi[a], &mut lin);
            let coupling = overlap[a].powu(np - 1) * (0.5 * omega);
            let out = &mut dy[a * n..(a + 1) * n];
            for j in 0..n {
                let rho = psi[a][j].norm_sqr() * inv;
                let h = lin[j] + psi[a][j] * (nl * rho - 0.5 * nl * quartic) + coupling * psi[b][j];
                out[j] = C64::new(h.im, -h.re);
            }
            dy[2 * n + a] = if tracked {
                let c = y[2 * n + b] * overlap[a].powu(np) * (0.5 * omega);
                C64::new(c.im, -c.re)
            } else {
                ZERO
            };
        }
    };
    let to_state = |y: &[C64]| MeanFieldState {
        psi: [y[..n].to_vec(), y[n..2 * n].to_vec()],
        phase: if tracked {
            [y[2 * n] / y[2 * n].norm(), y[2 * n + 1] / y[2 * n + 1].norm()]
        } else {
            [C64::new(1.0, 0.0); 2]
        },
    };
    let traj = run(config, &y, rhs, to_state, &modes, pulse, t_final, dt_out);
    finish(grid, traj, floor_hit.get())
}

/// Propagates `C_a` and the orbitals `phi_a` as separate unknowns:
/// `i C_a' = C_b (Omega/2) <phi_a|phi_b>^N` with the matching orbital equation.
pub fn propagate_split(
    config: &MeanFieldConfig,
    grid: &Grid,
    state: &MeanFieldState,
    pulse: &Pulse,
    t_final: f64,
    dt_out: f64,
) -> Result<MeanFieldTrajectory> {
    check_initial(grid, state)?;
    let modes = well_mode_energies(config)?;
    let n = grid.len();
    let np = config.n_particles as u32;
    let nl = config.g * (np as f64 - 1.0);
    let mut y: Vec<C64> = Vec::with_capacity(2 * n + 2);
    let mut coeffs = [ZERO; 2];
    for a in 0..2 {
        y.extend(state.orbital(grid, a)?);
        coeffs[a] = state.coefficient(grid, a);
    }
    y.extend(coeffs);
    let floor_hit = Cell::new(false);
    let mut lin = vec![ZERO; n];
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let omega = pulse.at(&modes, t);
        let phi = [&y[..n], &y[n..2 * n]];
        let c = [y[2 * n], y[2 * n + 1]];
        if c[0].norm() < COEFFICIENT_FLOOR || c[1].norm() < COEFFICIENT_FLOOR {
            floor_hit.set(true);
            dy.iter_mut().for_each(|z| *z = ZERO);
            return;
        }
        let s01 = grid.inner(phi[0], phi[1]);
        let overlap = [s01, s01.conj()];
        for a in 0..2 {
            let b = 1 - a;
            let quartic: f64 = phi[a].iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * grid.dx;
            let ratio = c[a].conj() * c[b] / c[a].norm_sqr();
            let s_n1 = overlap[a].powu(np - 1);
            let s_n = s_n1 * overlap[a];
            let shift = 0.5 * nl * quartic + ratio * s_n * (0.5 * omega);
            let cross = ratio * s_n1 * (0.5 * omega);
            grid.apply_linear(a, phi[a], &mut lin);
            let out = &mut dy[a * n..(a + 1) * n];
            for j in 0..n {
                let rho = phi[a][j].norm_sqr();
                let h = lin[j] + phi[a][j] * (nl * rho - shift) + cross * phi[b][j];
                out[j] = C64::new(h.im, -h.re);
            }
            let dc = c[b] * s_n * (0.5 * omega);
            dy[2 * n + a] = C64::new(dc.im, -dc.re);
        }
    };
    let to_state = |y: &[C64]| {
        let c = [y[2 * n], y[2 * n + 1]];
        MeanFieldState {
            psi: [
                y[..n].iter().map(|z| z * c[0]).collect(),
                y[n..2 * n].iter().map(|z| z * c[1]).collect(),
            ],
            phase: [c[0] / c[0].norm(), c[1] / c[1].norm()],
        }
    };
    let traj = run(config, &y, rhs, to_state, &modes, pulse, t_final, dt_out);
    finish(grid, traj, floor_hit.get())
}

#[allow(clippy::too_many_arguments)]
fn run<F, S>(
    config: &MeanFieldConfig,
    y0: &[C64],
    rhs: F,
    to_state: S,
    modes: &ModeEnergies,
    pulse: &Pulse,
    t_final: f64,
    dt_out: f64,
) -> Result<MeanFieldTrajectory>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    S: Fn(&[C64]) -> MeanFieldState,
{
    let times = output_times(t_final, dt_out)?;
    let mut states = Vec::with_capacity(times.len());
    let opts = OdeOptions {
        rtol: config.tol,
        atol: config.tol * 1e-2,
        ..Default::default()
    };
    let stats = ode::integrate(rhs, 0.0, y0, &times, &opts, |_, _, y| states.push(to_state(y)))?;
    let pulse = times.iter().map(|&t| pulse.at(modes, t)).collect();
    Ok(MeanFieldTrajectory {
        times,
        states,
        pulse,
        stats,
    })
}

fn finish(grid: &Grid, traj: Result<MeanFieldTrajectory>, floor_hit: bool) -> Result<MeanFieldTrajectory> {
    if floor_hit {
        return Err(Error::Numerical(format!("a spin component fell below |C| = {COEFFICIENT_FLOOR:e}")));
    }
    let traj = traj?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let drift = (s.norm(grid) - 1.0).abs();
        if drift > 1e-6 {
            return Err(Error::Numerical(format!("norm drift {drift:e} at t = {t}")));
        }
    }
    Ok(traj)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MeanFieldObservables {
    /// per-particle population left of the origin
    pub o_l: f64,
    pub o_r: f64,
    pub o_l_plus: f64,
    pub o_r_minus: f64,
    pub correlation: f64,
    pub g_l: f64,
    pub sigma_x: f64,
    pub norm: f64,
}

pub fn observe(grid: &Grid, config: &MeanFieldConfig, s: &MeanFieldState) -> Result<MeanFieldObservables> {
    let np = config.n_particles as u32;
    let phi = [s.orbital(grid, 0)?, s.orbital(grid, 1)?];
    let c = [s.coefficient(grid, 0), s.coefficient(grid, 1)];
    let overlap = grid.inner(&phi[0], &phi[1]);
    let pref = c[0].conj() * c[1] * overlap.powu(np - 1);
    let sigma_x = 2.0 * (pref * overlap).re;
    let p_l = grid.weighted(&grid.left, &s.psi[0], &s.psi[0]).re + grid.weighted(&grid.left, &s.psi[1], &s.psi[1]).re;
    let p_r = grid.weighted(&grid.right, &s.psi[0], &s.psi[0]).re + grid.weighted(&grid.right, &s.psi[1], &s.psi[1]).re;
    let cross_l = grid.weighted(&grid.left, &phi[0], &phi[1]);
    let cross_r = grid.weighted(&grid.right, &phi[0], &phi[1]);
    Ok(MeanFieldObservables {
        o_l: p_l,
        o_r: p_r,
        o_l_plus: 0.5 * (p_l + 2.0 * (pref * cross_l).re),
        o_r_minus: 0.5 * (p_r - 2.0 * (pref * cross_r).re),
        correlation: 2.0 * (pref * (cross_l - cross_r)).re - (p_l - p_r) * sigma_x,
        g_l: p_l - 0.5 * sigma_x,
        sigma_x,
        norm: p_l + p_r,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MeanFieldSeries {
    pub times: Vec<f64>,
    pub pulse: Vec<f64>,
    pub samples: Vec<MeanFieldObservables>,
}

impl MeanFieldSeries {
    pub fn max_o_l(&self) -> f64 {
        self.samples.iter().map(|o| o.o_l).fold(0.0, f64::max)
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.samples.iter().map(|o| (o.norm - 1.0).abs()).fold(0.0, f64::max)
    }
}

pub fn mf_observables(traj: &MeanFieldTrajectory, grid: &Grid, config: &MeanFieldConfig) -> Result<MeanFieldSeries> {
    Ok(MeanFieldSeries {
        times: traj.times.clone(),
        pulse: traj.pulse.clone(),
        samples: traj.states.iter().map(|s| observe(grid, config, s)).collect::<Result<_>>()?,
    })
}

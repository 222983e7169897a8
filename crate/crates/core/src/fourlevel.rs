//! Two motional levels times two impurity spin states, with a static impurity.
//!
//! Basis order: `|L,down>, |R,down>, |L,up>, |R,up>` (index = 2 * spin + well).

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contact::{j_matrix_element, Spin, SpinContactCouplings};
use crate::doublewell::{origin_values, solve_noninteracting, DoubleWellParams};
use crate::error::{Error, Result};

type C64 = Complex64;

pub const L: usize = 0;
pub const R: usize = 1;

pub fn index(well: usize, spin: Spin) -> usize {
    2 * spin.index() + well
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourLevelModel {
    pub e_l: f64,
    pub e_r: f64,
    /// `j[spin][N][M]` with N, M in {L, R}
    pub j: [[[f64; 2]; 2]; 2],
    pub omega_r: f64,
}

impl FourLevelModel {
    /// Lowest two levels of `params` with the static contact elements for each spin.
    pub fn build(params: &DoubleWellParams, couplings: &SpinContactCouplings, omega_r: f64) -> Result<Self> {
        if !couplings.is_finite() || !omega_r.is_finite() {
            return Err(Error::Parameter("couplings and Rabi frequency must be finite".into()));
        }
        let states = solve_noninteracting(params, 2)?;
        let o = [origin_values(&states[0], params)?, origin_values(&states[1], params)?];
        let mut j = [[[0.0; 2]; 2]; 2];
        for spin in [Spin::Down, Spin::Up] {
            let (g_e, g_o) = couplings.channel(spin);
            for n in 0..2 {
                for m in 0..2 {
                    j[spin.index()][n][m] = j_matrix_element(&o[n], &o[m], g_e, g_o);
                }
            }
            // exact symmetry of the bilinear form
            let s = &mut j[spin.index()];
            let avg = 0.5 * (s[L][R] + s[R][L]);
            s[L][R] = avg;
            s[R][L] = avg;
        }
        Ok(FourLevelModel {
            e_l: states[0].energy,
            e_r: states[1].energy,
            j,
            omega_r,
        })
    }

    pub fn with_omega(mut self, omega_r: f64) -> Self {
        self.omega_r = omega_r;
        self
    }

    pub fn detuning(&self) -> f64 {
        self.e_r - self.e_l
    }

    /// `E_R - E_L + (J^down_RR + J^up_RR - J^down_LL - J^up_LL) / 2`
    pub fn resonant_rabi(&self) -> f64 {
        let [d, u] = self.j;
        self.e_r - self.e_l + 0.5 * (d[R][R] + u[R][R] - d[L][L] - u[L][L])
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        let mut h = Matrix4::zeros();
        for spin in [Spin::Down, Spin::Up] {
            let s = spin.index();
            let e = [self.e_l, self.e_r];
            for n in 0..2 {
                for m in 0..2 {
                    h[(2 * s + n, 2 * s + m)] = self.j[s][n][m] + if n == m { e[n] } else { 0.0 };
                }
            }
        }
        for n in 0..2 {
            h[(n, 2 + n)] = 0.5 * self.omega_r;
            h[(2 + n, n)] = 0.5 * self.omega_r;
        }
        h
    }

    /// Exact propagation by eigendecomposition, sampled at `0, dt_out, ...` up to `t_final`.
    pub fn evolve(&self, initial: &[C64; 4], t_final: f64, dt_out: f64) -> Result<FourLevelTrajectory> {
        if !(t_final >= 0.0 && dt_out > 0.0 && t_final.is_finite()) {
            return Err(Error::Parameter(format!("t_final = {t_final}, dt_out = {dt_out}")));
        }
        let norm: f64 = initial.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!("initial state has norm^2 {norm}")));
        }
        let eig = SymmetricEigen::new(self.matrix());
        let v = eig.eigenvectors;
        // projections onto eigenvectors
        let proj: Vec<C64> = (0..4)
            .map(|k| (0..4).map(|i| initial[i] * v[(i, k)]).sum())
            .collect();
        let samples = (t_final / dt_out + 1e-9).floor() as usize + 1;
        let mut times = Vec::with_capacity(samples);
        let mut amplitudes = Vec::with_capacity(samples);
        for s in 0..samples {
            let t = s as f64 * dt_out;
            let phased: Vec<C64> = (0..4)
                .map(|k| proj[k] * C64::from_polar(1.0, -eig.eigenvalues[k] * t))
                .collect();
            let mut c = [C64::new(0.0, 0.0); 4];
            for (i, ci) in c.iter_mut().enumerate() {
                *ci = (0..4).map(|k| phased[k] * v[(i, k)]).sum();
            }
            times.push(t);
            amplitudes.push(c);
        }
        Ok(FourLevelTrajectory { times, amplitudes })
    }

    pub fn energy(&self, c: &[C64; 4]) -> f64 {
        let h = self.matrix();
        let re = Vector4::from_fn(|i, _| c[i].re);
        let im = Vector4::from_fn(|i, _| c[i].im);
        re.dot(&(h * re)) + im.dot(&(h * im))
    }
}

/// `(|R,up> - |R,down>) / sqrt(2)`
pub fn r_minus() -> [C64; 4] {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let mut c = [C64::new(0.0, 0.0); 4];
    c[index(R, Spin::Up)] = C64::new(a, 0.0);
    c[index(R, Spin::Down)] = C64::new(-a, 0.0);
    c
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourLevelTrajectory {
    pub times: Vec<f64>,
    pub amplitudes: Vec<[C64; 4]>,
}

/// Single-sample observables of a particle-impurity state in the two-level basis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Observables {
    pub o_l_plus: f64,
    pub o_r_minus: f64,
    pub correlation: f64,
    pub g_l: f64,
    pub g_r: f64,
}

impl Observables {
    /// From the amplitudes `c[well][spin]`.
    pub fn from_amplitudes(c: [[C64; 2]; 2]) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (d, u) = (Spin::Down.index(), Spin::Up.index());
        let o_l_plus = ((c[L][u] + c[L][d]) * h).norm_sqr();
        let o_r_minus = ((c[R][u] - c[R][d]) * h).norm_sqr();
        let n = [c[L][d].norm_sqr() + c[L][u].norm_sqr(), c[R][d].norm_sqr() + c[R][u].norm_sqr()];
        // <sigma_x> restricted to each well
        let sx = [2.0 * (c[L][u].conj() * c[L][d]).re, 2.0 * (c[R][u].conj() * c[R][d]).re];
        let sx_total = sx[0] + sx[1];
        let correlation = (sx[0] - sx[1]) - (n[0] - n[1]) * sx_total;
        Observables {
            o_l_plus,
            o_r_minus,
            correlation,
            g_l: n[0] - 0.5 * sx_total,
            g_r: n[1] + 0.5 * sx_total,
        }
    }
}

fn wells(c: &[C64; 4]) -> [[C64; 2]; 2] {
    let mut w = [[C64::new(0.0, 0.0); 2]; 2];
    for well in [L, R] {
        for spin in [Spin::Down, Spin::Up] {
            w[well][spin.index()] = c[index(well, spin)];
        }
    }
    w
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub o_l_plus: Vec<f64>,
    pub o_r_minus: Vec<f64>,
    pub correlation: Vec<f64>,
    pub g_l: Vec<f64>,
    pub g_r: Vec<f64>,
}

impl ObservableSeries {
    pub fn push(&mut self, t: f64, o: Observables) {
        self.times.push(t);
        self.o_l_plus.push(o.o_l_plus);
        self.o_r_minus.push(o.o_r_minus);
        self.correlation.push(o.correlation);
        self.g_l.push(o.g_l);
        self.g_r.push(o.g_r);
    }

    pub fn max_o_l_plus(&self) -> f64 {
        self.o_l_plus.iter().copied().fold(0.0, f64::max)
    }

    /// Time of the first local maximum of `O_L^+` above `threshold`.
    pub fn first_peak(&self, threshold: f64) -> Option<(f64, f64)> {
        let o = &self.o_l_plus;
        (1..o.len().saturating_sub(1))
            .find(|&i| o[i] >= threshold && o[i] >= o[i - 1] && o[i] >= o[i + 1])
            .map(|i| (self.times[i], o[i]))
    }
}

pub fn observables(traj: &FourLevelTrajectory) -> ObservableSeries {
    let mut s = ObservableSeries::default();
    for (t, c) in traj.times.iter().zip(&traj.amplitudes) {
        s.push(*t, Observables::from_amplitudes(wells(c)));
    }
    s
}

/// The overlap exactly as printed, `|C_{L,up} + C_{R,down}|^2 / 2`. Diagnostic only.
pub fn o_l_plus_literal(c: &[C64; 4]) -> f64 {
    (c[index(L, Spin::Up)] + c[index(R, Spin::Down)]).norm_sqr() / 2.0
}

/// How the Rabi frequency is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tuning {
    /// `E_R - E_L`
    Bare,
    /// [`FourLevelModel::resonant_rabi`]
    Shifted,
    Fixed(f64),
}

impl FourLevelModel {
    pub fn tuned(self, tuning: Tuning) -> Self {
        let w = match tuning {
            Tuning::Bare => self.detuning(),
            Tuning::Shifted => self.resonant_rabi(),
            Tuning::Fixed(w) => w,
        };
        self.with_omega(w)
    }
}

/// Opposite-equal couplings `g_e = +-1`, `g_o = +-0.1`.
pub fn green_couplings() -> SpinContactCouplings {
    SpinContactCouplings::opposite(1.0, 0.1)
}

/// Same-sign couplings with the up channel ten times weaker.
pub fn same_sign_couplings() -> SpinContactCouplings {
    SpinContactCouplings {
        g_e_up: 1.0,
        g_e_down: 10.0,
        g_o_up: 0.1,
        g_o_down: 1.0,
    }
}

/// The double well used throughout: `d_R = 2`, `r = 1`, `delta = 1/2` (so `d_L = sqrt 5`).
pub fn reference_well() -> DoubleWellParams {
    DoubleWellParams::from_geometry(2.0, 1.0, 0.5).expect("valid reference geometry")
}

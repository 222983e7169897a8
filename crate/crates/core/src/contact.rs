//! Spin-dependent even/odd contact interactions between the particle and the
//! impurity, and their matrix elements.
//!
//! The basis functions used here are smooth, so the regularized delta and
//! derivative operators act as the ordinary ones; the regularization only
//! matters for the interacting eigenproblem in [`crate::doublewell`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::doublewell::{eval_wavefunction, DoubleWellParams, EigenState, OriginValues};
use crate::error::{Error, Result};
use crate::quad::{composite_gauss_legendre, integrate_pieces, QuadOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    /// Basis index: down = 0, up = 1.
    pub fn index(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinContactCouplings {
    pub g_e_up: f64,
    pub g_e_down: f64,
    pub g_o_up: f64,
    pub g_o_down: f64,
}

impl SpinContactCouplings {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `g^up = g`, `g^down = -g` for both waves.
    pub fn opposite(g_e: f64, g_o: f64) -> Self {
        SpinContactCouplings {
            g_e_up: g_e,
            g_e_down: -g_e,
            g_o_up: g_o,
            g_o_down: -g_o,
        }
    }

    /// `(g_e, g_o)` felt by the particle when the impurity is in `spin`.
    pub fn channel(&self, spin: Spin) -> (f64, f64) {
        match spin {
            Spin::Up => (self.g_e_up, self.g_o_up),
            Spin::Down => (self.g_e_down, self.g_o_down),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.g_e_up, self.g_e_down, self.g_o_up, self.g_o_down].iter().all(|g| g.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassConfig {
    /// `m_p / m_i`
    pub mass_ratio: f64,
    /// `m_p m_i / (m_p + m_i)` in units of `m_p`
    pub reduced_mass: f64,
}

impl MassConfig {
    pub fn new(mass_ratio: f64) -> Result<Self> {
        if !(mass_ratio > 0.0 && mass_ratio.is_finite()) {
            return Err(Error::Parameter(format!("mass ratio {mass_ratio} must be positive")));
        }
        Ok(MassConfig {
            mass_ratio,
            reduced_mass: 1.0 / (1.0 + mass_ratio),
        })
    }

    pub fn impurity_mass(&self) -> f64 {
        1.0 / self.mass_ratio
    }
}

/// `g_e = -1/(mu a_e)`, `g_o = -a_o/mu` in units with hbar = m_p = 1.
pub fn couplings_from_scattering_lengths(a_e: f64, a_o: f64, mass: &MassConfig) -> Result<(f64, f64)> {
    if a_e == 0.0 {
        return Err(Error::SingularCoupling("a_e = 0 gives an infinite even coupling".into()));
    }
    let mu = mass.reduced_mass;
    let g_e = if a_e.is_infinite() { 0.0 } else { -1.0 / (mu * a_e) };
    let g_o = -a_o / mu;
    Ok((g_e, g_o + 0.0))
}

/// `g_e N(0) [M(0+) + M(0-)]/2 - g_o N'(0) [M'(0+) + M'(0-)]/2`, with the
/// bra's origin values also averaged over both sides.
pub fn j_matrix_element(n: &OriginValues, m: &OriginValues, g_e: f64, g_o: f64) -> f64 {
    g_e * n.mean_value() * m.mean_value() - g_o * n.mean_derivative() * m.mean_derivative()
}

/// Eigenfunctions of a harmonic oscillator of mass `mass` and frequency `omega`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicBasis {
    pub mass: f64,
    pub omega: f64,
    pub size: usize,
}

impl HarmonicBasis {
    pub fn new(mass: f64, omega: f64, size: usize) -> Result<Self> {
        if !(mass > 0.0 && omega > 0.0 && size > 0) {
            return Err(Error::Parameter(format!(
                "oscillator basis needs mass > 0, omega > 0, size > 0 (got {mass}, {omega}, {size})"
            )));
        }
        Ok(HarmonicBasis { mass, omega, size })
    }

    pub fn length(&self) -> f64 {
        1.0 / (self.mass * self.omega).sqrt()
    }

    pub fn energy(&self, m: usize) -> f64 {
        self.omega * (m as f64 + 0.5)
    }

    /// Half-width outside which every basis function is below ~1e-16.
    pub fn extent(&self) -> f64 {
        self.length() * ((2.0 * self.size as f64 + 1.0).sqrt() + 9.0)
    }

    /// Values and first derivatives of all basis functions at `x`.
    pub fn eval(&self, x: f64, values: &mut [f64], derivs: &mut [f64]) {
        let l = self.length();
        let xi = x / l;
        let norm = 1.0 / l.sqrt();
        // normalised Hermite functions, one past the end for the derivative
        let mut h = vec![0.0; self.size + 1];
        h[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * xi * xi).exp();
        if self.size >= 1 {
            h[1] = 2f64.sqrt() * xi * h[0];
        }
        for k in 1..self.size {
            let kf = k as f64;
            h[k + 1] = (2.0 / (kf + 1.0)).sqrt() * xi * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
        }
        for k in 0..self.size {
            let kf = k as f64;
            let lower = if k == 0 { 0.0 } else { (kf / 2.0).sqrt() * h[k - 1] };
            values[k] = norm * h[k];
            derivs[k] = norm / l * (lower - ((kf + 1.0) / 2.0).sqrt() * h[k + 1]);
        }
    }

    /// Matrix of `x^2` in this basis.
    pub fn x2_matrix(&self) -> DMatrix<f64> {
        let l2 = self.length().powi(2);
        DMatrix::from_fn(self.size, self.size, |i, j| {
            let (m, n) = (i.min(j) as f64, i.max(j));
            if i == j {
                0.5 * l2 * (2.0 * m + 1.0)
            } else if n == i.min(j) + 2 {
                0.5 * l2 * ((m + 1.0) * (m + 2.0)).sqrt()
            } else {
                0.0
            }
        })
    }
}

/// Which derivative the odd-wave term applies to a product `psi(x_p) phi(x_i)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OddDerivative {
    /// `(m_i d/dx_p - m_p d/dx_i) / (m_p + m_i)`, the relative-coordinate derivative.
    Relative,
    /// `d/dx_p` only; the heavy-impurity limit of `Relative`.
    #[default]
    Particle,
}

impl OddDerivative {
    /// Weights `(a, b)` such that `D(psi phi) = a psi' phi + b psi phi'`.
    fn weights(self, mass: &MassConfig) -> (f64, f64) {
        match self {
            OddDerivative::Particle => (1.0, 0.0),
            OddDerivative::Relative => {
                let m_i = mass.impurity_mass();
                let total = 1.0 + m_i;
                (m_i / total, -1.0 / total)
            }
        }
    }
}

/// A real basis function returning `(value, derivative)`.
pub type BasisFn<'a> = &'a dyn Fn(f64) -> (f64, f64);

/// `g_e int psi_n phi_m psi_n' phi_m' dy - g_o int D(psi_n phi_m) D(psi_n' phi_m') dy`
/// along the contact line `x_p = x_i = y`, integrated adaptively over `[-half_width, half_width]`.
#[allow(clippy::too_many_arguments)]
pub fn two_body_matrix_element(
    psi_n: BasisFn,
    phi_m: BasisFn,
    psi_np: BasisFn,
    phi_mp: BasisFn,
    g_e: f64,
    g_o: f64,
    mass: &MassConfig,
    odd: OddDerivative,
    half_width: f64,
) -> Result<f64> {
    if g_e == 0.0 && g_o == 0.0 {
        return Ok(0.0);
    }
    let (a, b) = odd.weights(mass);
    let f = |y: f64| {
        let (p1, dp1) = psi_n(y);
        let (f1, df1) = phi_m(y);
        let (p2, dp2) = psi_np(y);
        let (f2, df2) = phi_mp(y);
        let even = p1 * f1 * p2 * f2;
        let d1 = a * dp1 * f1 + b * p1 * df1;
        let d2 = a * dp2 * f2 + b * p2 * df2;
        g_e * even - g_o * d1 * d2
    };
    let opts = QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    integrate_pieces(f, &[-half_width, 0.0, half_width], opts).map(|r| r.value)
}

/// Particle and impurity basis functions tabulated on a quadrature rule along
/// the contact line.
pub struct ContactTables {
    pub weights: Vec<f64>,
    /// `[node][n]`
    pub psi: Vec<Vec<f64>>,
    pub dpsi: Vec<Vec<f64>>,
    /// `[node][m]`
    pub phi: Vec<Vec<f64>>,
    pub dphi: Vec<Vec<f64>>,
}

impl ContactTables {
    pub fn build(
        states: &[EigenState],
        well: &DoubleWellParams,
        imp: &HarmonicBasis,
        panels_per_side: usize,
        order: usize,
    ) -> Result<Self> {
        let half = well.extent().min(imp.extent());
        let (mut nodes, mut weights) = composite_gauss_legendre(-half, 0.0, panels_per_side, order);
        let (n2, w2) = composite_gauss_legendre(0.0, half, panels_per_side, order);
        nodes.extend(n2);
        weights.extend(w2);
        let mut psi = Vec::with_capacity(nodes.len());
        let mut dpsi = Vec::with_capacity(nodes.len());
        let mut phi = Vec::with_capacity(nodes.len());
        let mut dphi = Vec::with_capacity(nodes.len());
        for &y in &nodes {
            let mut v = Vec::with_capacity(states.len());
            let mut d = Vec::with_capacity(states.len());
            for s in states {
                let w = eval_wavefunction(s, well, y)?;
                v.push(w.value);
                d.push(w.derivative);
            }
            psi.push(v);
            dpsi.push(d);
            let mut fv = vec![0.0; imp.size];
            let mut fd = vec![0.0; imp.size];
            imp.eval(y, &mut fv, &mut fd);
            phi.push(fv);
            dphi.push(fd);
        }
        Ok(ContactTables {
            weights,
            psi,
            dpsi,
            phi,
            dphi,
        })
    }

    /// Interaction matrix for one spin channel on the product index `n * M + m`.
    pub fn matrix(&self, g_e: f64, g_o: f64, mass: &MassConfig, odd: OddDerivative) -> DMatrix<f64> {
        let nn = self.psi.first().map_or(0, |v| v.len());
        let mm = self.phi.first().map_or(0, |v| v.len());
        let dim = nn * mm;
        let q = self.weights.len();
        let (a, b) = odd.weights(mass);
        let mut even = DMatrix::<f64>::zeros(q, dim);
        let mut oddm = DMatrix::<f64>::zeros(q, dim);
        for k in 0..q {
            let sw = self.weights[k].sqrt();
            for n in 0..nn {
                for m in 0..mm {
                    let col = n * mm + m;
                    even[(k, col)] = sw * self.psi[k][n] * self.phi[k][m];
                    oddm[(k, col)] = sw * (a * self.dpsi[k][n] * self.phi[k][m] + b * self.psi[k][n] * self.dphi[k][m]);
                }
            }
        }
        let mut v = DMatrix::<f64>::zeros(dim, dim);
        if g_e != 0.0 {
            v += even.transpose() * &even * g_e;
        }
        if g_o != 0.0 {
            v -= oddm.transpose() * &oddm * g_o;
        }
        // exact symmetry regardless of summation order
        let vt = v.transpose();
        (v + vt) * 0.5
    }
}

/// Assembled interaction matrices for both spin channels, with the panel count
/// doubled until successive results agree.
pub fn interaction_matrices(
    states: &[EigenState],
    well: &DoubleWellParams,
    imp: &HarmonicBasis,
    couplings: &SpinContactCouplings,
    mass: &MassConfig,
    odd: OddDerivative,
) -> Result<[DMatrix<f64>; 2]> {
    const ORDER: usize = 16;
    let half = well.extent().min(imp.extent());
    let scale = imp.length().min(1.0);
    let mut panels = ((half / scale).ceil() as usize).max(4);
    let build = |panels: usize| -> Result<[DMatrix<f64>; 2]> {
        let t = ContactTables::build(states, well, imp, panels, ORDER)?;
        let (ed, od) = couplings.channel(Spin::Down);
        let (eu, ou) = couplings.channel(Spin::Up);
        Ok([t.matrix(ed, od, mass, odd), t.matrix(eu, ou, mass, odd)])
    };
    let mut prev = build(panels)?;
    for _ in 0..6 {
        panels *= 2;
        let next = build(panels)?;
        let diff = (0..2).map(|s| (&next[s] - &prev[s]).amax()).fold(0.0, f64::max);
        let size = (0..2).map(|s| next[s].amax()).fold(0.0, f64::max);
        prev = next;
        if diff <= 1e-12 * size.max(1.0) {
            return Ok(prev);
        }
    }
    Err(Error::Numerical("interaction matrix quadrature did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scattering_length_conversion() {
        let half = MassConfig::new(1.0).unwrap();
        assert_eq!(half.reduced_mass, 0.5);
        assert_eq!(couplings_from_scattering_lengths(-1.0, 0.0, &half).unwrap(), (2.0, 0.0));
        assert_eq!(couplings_from_scattering_lengths(f64::INFINITY, 0.0, &half).unwrap().0, 0.0);
        assert_eq!(couplings_from_scattering_lengths(-0.5, 0.25, &half).unwrap(), (4.0, -0.5));
        assert!(matches!(
            couplings_from_scattering_lengths(0.0, 0.0, &half),
            Err(Error::SingularCoupling(_))
        ));
    }

    #[test]
    fn oscillator_functions_are_orthonormal() {
        let b = HarmonicBasis::new(2.0, 3.0, 10).unwrap();
        let ext = b.extent();
        let (x, w) = composite_gauss_legendre(-ext, ext, 40, 16);
        let mut g = DMatrix::<f64>::zeros(10, 10);
        let mut x2 = DMatrix::<f64>::zeros(10, 10);
        let mut v = vec![0.0; 10];
        let mut d = vec![0.0; 10];
        for (xi, wi) in x.iter().zip(&w) {
            b.eval(*xi, &mut v, &mut d);
            for i in 0..10 {
                for j in 0..10 {
                    g[(i, j)] += wi * v[i] * v[j];
                    x2[(i, j)] += wi * v[i] * v[j] * xi * xi;
                }
            }
        }
        assert!((g - DMatrix::identity(10, 10)).amax() < 1e-12);
        assert!((x2 - b.x2_matrix()).amax() < 1e-12);
    }

    #[test]
    fn oscillator_derivative_matches_finite_difference() {
        let b = HarmonicBasis::new(1.0, 1.0, 6).unwrap();
        let (mut v1, mut v2, mut v, mut d) = (vec![0.0; 6], vec![0.0; 6], vec![0.0; 6], vec![0.0; 6]);
        let h = 1e-6;
        b.eval(0.7 + h, &mut v1, &mut d);
        b.eval(0.7 - h, &mut v2, &mut d);
        b.eval(0.7, &mut v, &mut d);
        for k in 0..6 {
            assert!(((v1[k] - v2[k]) / (2.0 * h) - d[k]).abs() < 1e-8);
        }
    }
}

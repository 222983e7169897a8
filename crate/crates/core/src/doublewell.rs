//! Exact eigenstates of the piecewise double-harmonic well
//! `V(x) = (x + d_L)^2 / 2` for `x < 0` and `r^2 (x - d_R)^2 / 2 + delta` for `x >= 0`,
//! optionally with a point interaction at the origin.
//!
//! On each side the solution is a parabolic cylinder function,
//! `c1 D_nu1(-sqrt(2) (x + d_L))` on the left and `c2 D_nu2(sqrt(2r) (x - d_R))`
//! on the right, with a shared energy `nu1 + 1/2 = r (nu2 + 1/2) + delta`.
//! The two matching conditions at `x = 0` form a 2x2 linear system in
//! `(c1, c2)`; its determinant, with rows and columns scaled to unit length,
//! is a bounded function of `nu2` whose zeros are the eigenvalues.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate_pieces, QuadOptions};
use crate::specfun::{self, log_gamma, pcf_eval};

pub const MAX_LEVELS: usize = 40;
const SCAN_STEP: f64 = 0.01;
const ROOT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellParams {
    pub r: f64,
    pub d_r: f64,
    pub d_l: f64,
    pub delta: f64,
}

impl DoubleWellParams {
    /// Fixes `d_L` by continuity of the potential at the origin.
    pub fn from_geometry(d_r: f64, r: f64, delta: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Geometry(format!("frequency ratio r = {r} must be positive")));
        }
        if !(d_r >= 0.0 && d_r.is_finite() && delta.is_finite()) {
            return Err(Error::Geometry(format!("d_R = {d_r}, delta = {delta}")));
        }
        let radicand = r * r * d_r * d_r + 2.0 * delta;
        if radicand < 0.0 {
            return Err(Error::Geometry(format!(
                "r^2 d_R^2 + 2 delta = {radicand} is negative"
            )));
        }
        Ok(DoubleWellParams {
            r,
            d_r,
            d_l: radicand.sqrt(),
            delta,
        })
    }

    pub fn potential(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.5 * (x + self.d_l).powi(2)
        } else {
            0.5 * self.r * self.r * (x - self.d_r).powi(2) + self.delta
        }
    }

    pub fn barrier_height(&self) -> f64 {
        0.5 * self.d_l * self.d_l
    }

    /// Half-width beyond which every bound state is negligible.
    pub fn extent(&self) -> f64 {
        self.d_l.max(self.d_r) + 12.0 / self.r.min(1.0).sqrt()
    }

    pub fn is_symmetric(&self) -> bool {
        (self.r - 1.0).abs() < 1e-12 && self.delta.abs() < 1e-12 && (self.d_l - self.d_r).abs() < 1e-12
    }

    fn nu1(&self, nu2: f64) -> f64 {
        self.r * (nu2 + 0.5) + self.delta - 0.5
    }

    fn nu2_of_energy(&self, e: f64) -> f64 {
        (e - self.delta) / self.r - 0.5
    }
}

pub fn potential_value(params: &DoubleWellParams, x: f64) -> f64 {
    params.potential(x)
}

/// Point interaction at the origin in terms of 1D scattering lengths:
/// `psi'(0+) - psi'(0-) = -(1/a_e) [psi(0+) + psi(0-)]` and
/// `psi(0+) - psi(0-) = -a_o [psi'(0+) + psi'(0-)]`.
/// `a_e = inf` switches the even part off, `a_o = 0` the odd part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelInteraction {
    pub a_e: f64,
    pub a_o: f64,
}

impl ChannelInteraction {
    pub fn none() -> Self {
        ChannelInteraction {
            a_e: f64::INFINITY,
            a_o: 0.0,
        }
    }

    /// A static impurity of infinite mass, so the reduced mass is the particle mass:
    /// `a_e = -1/g_e`, `a_o = -g_o`.
    pub fn from_static_couplings(g_e: f64, g_o: f64) -> Self {
        ChannelInteraction {
            a_e: -1.0 / g_e,
            a_o: -g_o,
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.a_e.is_nan() && self.a_o.is_finite()
    }

    /// `(1/a_e, 1)` scaled to unit length.
    fn even_row(&self) -> (f64, f64) {
        let k = 1.0 / self.a_e;
        if k.is_infinite() {
            (k.signum(), 0.0)
        } else {
            let n = (1.0 + k * k).sqrt();
            (k / n, 1.0 / n)
        }
    }

    /// `(1, a_o)` scaled to unit length.
    fn odd_row(&self) -> (f64, f64) {
        let n = (1.0 + self.a_o * self.a_o).sqrt();
        (1.0 / n, self.a_o / n)
    }

    /// Lower bound on the free-space binding energy the interaction can add.
    fn binding_bound(&self) -> f64 {
        let k = 1.0 / self.a_e;
        let even = if k.is_finite() && k > 0.0 { k * k } else { 0.0 };
        let odd = if self.a_o > 0.0 { 1.0 / (self.a_o * self.a_o) } else { 0.0 };
        even + odd
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenState {
    pub nu1: f64,
    pub nu2: f64,
    pub energy: f64,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveValue {
    pub value: f64,
    pub derivative: f64,
}

/// One-sided values at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OriginValues {
    pub minus: WaveValue,
    pub plus: WaveValue,
}

impl OriginValues {
    pub fn mean_value(&self) -> f64 {
        0.5 * (self.minus.value + self.plus.value)
    }

    pub fn mean_derivative(&self) -> f64 {
        0.5 * (self.minus.derivative + self.plus.derivative)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// `(psi(0-), psi'(0-), psi(0+), psi'(0+))` for `c1 = c2 = 1`.
#[derive(Clone, Copy, Debug)]
struct Matching {
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
}

fn matching(p: &DoubleWellParams, nu2: f64) -> Result<Matching> {
    let sr = (2.0 * p.r).sqrt();
    let e1 = pcf_eval(p.nu1(nu2), -SQRT_2 * p.d_l)?;
    let e2 = pcf_eval(nu2, -sr * p.d_r)?;
    Ok(Matching {
        a1: e1.value,
        b1: -SQRT_2 * e1.derivative,
        a2: e2.value,
        b2: sr * e2.derivative,
    })
}

/// Rows of the matching system acting on `(c1, c2)`.
fn system(m: &Matching, chan: &ChannelInteraction) -> [[f64; 2]; 2] {
    let (k, s) = chan.even_row();
    let (t, o) = chan.odd_row();
    [[k * m.a1 - s * m.b1, k * m.a2 + s * m.b2], [-t * m.a1 + o * m.b1, t * m.a2 + o * m.b2]]
}

fn scaled_determinant(p: &DoubleWellParams, chan: &ChannelInteraction, nu2: f64) -> Result<f64> {
    let m = matching(p, nu2)?;
    let s = system(&m, chan);
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let n1 = m.a1.hypot(m.b1);
    let n2 = m.a2.hypot(m.b2);
    Ok(det / (n1 * n2))
}

/// The function whose zeros are the eigenvalues of `solve_interacting`, as a function of `nu2`.
pub fn matching_function(p: &DoubleWellParams, chan: &ChannelInteraction, nu2: f64) -> Result<f64> {
    scaled_determinant(p, chan, nu2)
}

fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, mut lo: f64, mut hi: f64, mut flo: f64) -> Result<(f64, f64, f64)> {
    let (a0, b0) = (lo, hi);
    let mut fhi = f(hi)?;
    for _ in 0..200 {
        if hi - lo <= ROOT_TOL {
            return Ok((0.5 * (lo + hi), flo, fhi));
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok((mid, 0.0, 0.0));
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    Err(Error::RootNotConverged {
        lo: a0,
        hi: b0,
        reason: "bisection exhausted its iteration budget".into(),
    })
}

/// Minimise `sign * f` on `[a, b]` by golden-section search.
fn golden_min<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64, sign: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = sign * f(c)?;
    let mut fd = sign * f(d)?;
    for _ in 0..80 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = sign * f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = sign * f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Zeros of `f` on `[lo, ...)` found by scanning with `SCAN_STEP`, until
/// `count` zeros are found or `hi` is reached.
fn scan_roots<F: FnMut(f64) -> Result<f64>>(mut f: F, lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    let mut xs = vec![lo];
    let mut fs = vec![f(lo)?];
    let mut k = 1usize;
    loop {
        let x = lo + k as f64 * SCAN_STEP;
        if x > hi {
            break;
        }
        let fx = f(x)?;
        let (xp, fp) = (xs[xs.len() - 1], fs[fs.len() - 1]);
        if fx == 0.0 {
            roots.push(x);
        } else if fp != 0.0 && (fx < 0.0) != (fp < 0.0) {
            let (root, fa, fb) = bisect(&mut f, xp, x, fp)?;
            // A sign change through a pole leaves large values on both sides.
            if fa.abs() + fb.abs() < 1e-6 {
                roots.push(root);
            } else {
                log::debug!("discarding pole-like sign change near nu2 = {root}");
            }
        } else if xs.len() >= 2 {
            // Look for a pair of zeros hiding inside one scan cell around a
            // local minimum of |f|.
            let (xpp, fpp) = (xs[xs.len() - 2], fs[fs.len() - 2]);
            if (fpp < 0.0) == (fp < 0.0) && (fx < 0.0) == (fp < 0.0) && fp.abs() < 1e-2 && fp.abs() <= fpp.abs() && fp.abs() <= fx.abs() {
                let sign = fp.signum();
                let (xm, fm) = golden_min(&mut f, xpp, x, sign)?;
                if (fm < 0.0) != (fp < 0.0) && fm != 0.0 {
                    let (r1, _, _) = bisect(&mut f, xpp, xm, fpp)?;
                    let (r2, _, _) = bisect(&mut f, xm, x, fm)?;
                    roots.retain(|&r| r < xpp);
                    roots.push(r1);
                    roots.push(r2);
                } else if fm.abs() < 1e-9 {
                    return Err(Error::NearDegenerate { nu2: xm, residual: fm.abs() });
                }
            }
        }
        xs.push(x);
        fs.push(fx);
        if xs.len() > 3 {
            xs.remove(0);
            fs.remove(0);
        }
        if roots.len() >= count {
            break;
        }
        k += 1;
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    Ok(roots)
}

fn nu2_bounds(p: &DoubleWellParams, chan: &ChannelInteraction) -> (f64, f64) {
    let e_lo = p.delta.min(0.0) - chan.binding_bound() - 1e-3;
    let lo = (-0.49f64).min(p.nu2_of_energy(e_lo));
    // keep both orders inside the special-function range
    let lo_from_nu1 = (specfun::NU_MIN + 0.5 + 0.5 - p.delta) / p.r - 0.5;
    let lo = lo.max(specfun::NU_MIN + 0.5).max(lo_from_nu1);
    let hi_from_nu1 = (specfun::NU_MAX - 0.5 + 0.5 - p.delta) / p.r - 0.5;
    let hi = (specfun::NU_MAX - 0.5).min(hi_from_nu1);
    (lo, hi)
}

fn check_levels(n: usize) -> Result<()> {
    if n == 0 || n > MAX_LEVELS {
        return Err(Error::Parameter(format!("n_levels = {n} must be in 1..={MAX_LEVELS}")));
    }
    Ok(())
}

pub fn solve_noninteracting(p: &DoubleWellParams, n_levels: usize) -> Result<Vec<EigenState>> {
    solve_interacting(p, &ChannelInteraction::none(), n_levels)
}

pub fn solve_interacting(p: &DoubleWellParams, chan: &ChannelInteraction, n_levels: usize) -> Result<Vec<EigenState>> {
    check_levels(n_levels)?;
    if !chan.is_valid() {
        return Err(Error::Parameter(format!("invalid channel interaction {chan:?}")));
    }
    let (lo, hi) = nu2_bounds(p, chan);
    let roots = scan_roots(|nu| scaled_determinant(p, chan, nu), lo, hi, n_levels)?;
    if roots.len() < n_levels {
        return Err(Error::RootNotConverged {
            lo,
            hi,
            reason: format!("found {} of {n_levels} levels", roots.len()),
        });
    }
    roots
        .iter()
        .take(n_levels)
        .map(|&nu2| {
            let m = matching(p, nu2)?;
            let s = system(&m, chan);
            let row = if s[0][0].hypot(s[0][1]) >= s[1][0].hypot(s[1][1]) { s[0] } else { s[1] };
            build_state(p, nu2, row[1], -row[0])
        })
        .collect()
}

/// States of one parity in a symmetric well, where the matching reduces to a
/// single condition at `0+`.
pub fn solve_symmetric_channel(
    p: &DoubleWellParams,
    chan: &ChannelInteraction,
    parity: Parity,
    n_levels: usize,
) -> Result<Vec<EigenState>> {
    check_levels(n_levels)?;
    if !p.is_symmetric() {
        return Err(Error::Geometry("parity-resolved solve needs r = 1, delta = 0, d_L = d_R".into()));
    }
    let f = |nu2: f64| -> Result<f64> {
        let m = matching(p, nu2)?;
        let n = m.a2.hypot(m.b2);
        Ok(match parity {
            // psi'(0+) = -(1/a_e) psi(0+)
            Parity::Even => {
                let (k, s) = chan.even_row();
                (k * m.a2 + s * m.b2) / n
            }
            // psi(0+) = -a_o psi'(0+)
            Parity::Odd => {
                let (t, o) = chan.odd_row();
                (t * m.a2 + o * m.b2) / n
            }
        })
    };
    let (lo, hi) = nu2_bounds(p, chan);
    let roots = scan_roots(f, lo, hi, n_levels)?;
    if roots.len() < n_levels {
        return Err(Error::RootNotConverged {
            lo,
            hi,
            reason: format!("found {} of {n_levels} {parity:?} levels", roots.len()),
        });
    }
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    roots.iter().take(n_levels).map(|&nu2| build_state(p, nu2, sign, 1.0)).collect()
}

fn build_state(p: &DoubleWellParams, nu2: f64, c1: f64, c2: f64) -> Result<EigenState> {
    let nu1 = p.nu1(nu2);
    let mut st = EigenState {
        nu1,
        nu2,
        energy: nu1 + 0.5,
        c1,
        c2,
    };
    let norm2 = integrate_pieces(
        |x| {
            let v = eval_wavefunction(&st, p, x).map(|w| w.value).unwrap_or(f64::NAN);
            v * v
        },
        &[-p.extent(), 0.0, p.extent()],
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-13,
            max_intervals: 4000,
        },
    )?
    .value;
    if !(norm2 > 0.0 && norm2.is_finite()) {
        return Err(Error::Numerical(format!("state at nu2 = {nu2} has norm^2 = {norm2}")));
    }
    let mut n = norm2.sqrt();
    if st.c1 < 0.0 || (st.c1 == 0.0 && st.c2 < 0.0) {
        n = -n;
    }
    st.c1 /= n;
    st.c2 /= n;
    Ok(st)
}

pub fn eval_wavefunction(st: &EigenState, p: &DoubleWellParams, x: f64) -> Result<WaveValue> {
    if x < 0.0 {
        let e = pcf_eval(st.nu1, -SQRT_2 * (x + p.d_l))?;
        Ok(WaveValue {
            value: st.c1 * e.value,
            derivative: -SQRT_2 * st.c1 * e.derivative,
        })
    } else {
        let sr = (2.0 * p.r).sqrt();
        let e = pcf_eval(st.nu2, sr * (x - p.d_r))?;
        Ok(WaveValue {
            value: st.c2 * e.value,
            derivative: sr * st.c2 * e.derivative,
        })
    }
}

pub fn origin_values(st: &EigenState, p: &DoubleWellParams) -> Result<OriginValues> {
    let sr = (2.0 * p.r).sqrt();
    let e1 = pcf_eval(st.nu1, -SQRT_2 * p.d_l)?;
    let e2 = pcf_eval(st.nu2, -sr * p.d_r)?;
    Ok(OriginValues {
        minus: WaveValue {
            value: st.c1 * e1.value,
            derivative: -SQRT_2 * st.c1 * e1.derivative,
        },
        plus: WaveValue {
            value: st.c2 * e2.value,
            derivative: sr * st.c2 * e2.derivative,
        },
    })
}

/// `Gamma(a) / Gamma(b)`; a pole of the numerator is an error, one of the
/// denominator gives zero.
fn gamma_ratio(a: f64, b: f64) -> Result<f64> {
    let ga = log_gamma(a)?;
    match log_gamma(b) {
        Ok(gb) => Ok(ga.sign * gb.sign * (ga.ln_abs - gb.ln_abs).exp()),
        Err(Error::Pole(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// `-1/g_e - Gamma(-E/2 + 1/4) / (2 Gamma(-E/2 + 3/4))`: zero at the even
/// levels of a harmonic trap with a central delta of strength `g_e`.
pub fn busch_relation_residual(energy: f64, g_e: f64) -> Result<f64> {
    Ok(-1.0 / g_e - 0.5 * gamma_ratio(-0.5 * energy + 0.25, -0.5 * energy + 0.75)?)
}

/// `-1/g_o - 2 Gamma(-E/2 + 3/4) / Gamma(-E/2 + 1/4)`: the odd-wave counterpart.
pub fn busch_odd_relation_residual(energy: f64, g_o: f64) -> Result<f64> {
    Ok(-1.0 / g_o - 2.0 * gamma_ratio(-0.5 * energy + 0.75, -0.5 * energy + 0.25)?)
}

//! Dormand-Prince 5(4) integrator for complex linear and nonlinear systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C64 = Complex64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            h_max: f64::INFINITY,
            h_init: None,
            max_steps: 100_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

fn error_norm(y: &[C64], ynew: &[C64], err: &[C64], opts: &OdeOptions) -> f64 {
    let mut s = 0.0;
    for ((a, b), e) in y.iter().zip(ynew).zip(err) {
        let sr = opts.atol + opts.rtol * a.re.abs().max(b.re.abs());
        let si = opts.atol + opts.rtol * a.im.abs().max(b.im.abs());
        s += (e.re / sr).powi(2) + (e.im / si).powi(2);
    }
    (s / (2 * y.len()).max(1) as f64).sqrt()
}

/// Integrate `y' = f(t, y)` from `t0`, calling `observer(i, t, y)` at each of the
/// increasing output times `t_out[i]` (which must not precede `t0`). Steps are
/// clipped to land exactly on the output times.
pub fn integrate<F, O>(
    mut rhs: F,
    t0: f64,
    y0: &[C64],
    t_out: &[f64],
    opts: &OdeOptions,
    mut observer: O,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(usize, f64, &[C64]),
{
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let zero = C64::new(0.0, 0.0);
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut ytmp = vec![zero; n];
    let mut ynew = vec![zero; n];
    let mut err = vec![zero; n];

    rhs(t, &y, &mut k1);
    stats.evaluations += 1;

    let mut h = match opts.h_init {
        Some(h) => h,
        None => initial_step(&mut rhs, t, &y, &k1, opts, &mut stats),
    }
    .min(opts.h_max);
    let mut last_rejected = false;

    for (i, &target) in t_out.iter().enumerate() {
        if target < t {
            return Err(Error::Parameter(format!("output time {target} precedes t = {t}")));
        }
        while t < target {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Numerical(format!(
                    "step budget of {} exhausted at t = {t}",
                    opts.max_steps
                )));
            }
            let remaining = target - t;
            let clipped = h >= remaining;
            let hs = if clipped { remaining } else { h };
            if hs <= 1e-14 * t.abs().max(1.0) && !clipped {
                return Err(Error::Stiffness {
                    t,
                    h: hs,
                    steps: stats.accepted,
                });
            }

            for j in 0..n {
                ytmp[j] = y[j] + k1[j] * (hs * A21);
            }
            rhs(t + C2 * hs, &ytmp, &mut k2);
            for j in 0..n {
                ytmp[j] = y[j] + (k1[j] * A31 + k2[j] * A32) * hs;
            }
            rhs(t + C3 * hs, &ytmp, &mut k3);
            for j in 0..n {
                ytmp[j] = y[j] + (k1[j] * A41 + k2[j] * A42 + k3[j] * A43) * hs;
            }
            rhs(t + C4 * hs, &ytmp, &mut k4);
            for j in 0..n {
                ytmp[j] = y[j] + (k1[j] * A51 + k2[j] * A52 + k3[j] * A53 + k4[j] * A54) * hs;
            }
            rhs(t + C5 * hs, &ytmp, &mut k5);
            for j in 0..n {
                ytmp[j] = y[j] + (k1[j] * A61 + k2[j] * A62 + k3[j] * A63 + k4[j] * A64 + k5[j] * A65) * hs;
            }
            rhs(t + hs, &ytmp, &mut k6);
            for j in 0..n {
                ynew[j] = y[j] + (k1[j] * A71 + k3[j] * A73 + k4[j] * A74 + k5[j] * A75 + k6[j] * A76) * hs;
            }
            rhs(t + hs, &ynew, &mut k7);
            stats.evaluations += 6;
            for j in 0..n {
                err[j] = (k1[j] * E1 + k3[j] * E3 + k4[j] * E4 + k5[j] * E5 + k6[j] * E6 + k7[j] * E7) * hs;
            }
            let e = error_norm(&y, &ynew, &err, opts);
            if !e.is_finite() {
                return Err(Error::Numerical(format!("non-finite state at t = {t}")));
            }
            if e <= 1.0 {
                stats.accepted += 1;
                t = if clipped { target } else { t + hs };
                std::mem::swap(&mut y, &mut ynew);
                std::mem::swap(&mut k1, &mut k7);
                let mut fac = 0.9 * e.max(1e-10).powf(-0.2);
                fac = fac.clamp(0.2, if last_rejected { 1.0 } else { 10.0 });
                // A clipped step says nothing about the natural step length.
                if !clipped || hs * fac > h {
                    h = (hs * fac).min(opts.h_max);
                }
                last_rejected = false;
            } else {
                stats.rejected += 1;
                h = hs * (0.9 * e.powf(-0.2)).max(0.2);
                last_rejected = true;
            }
        }
        observer(i, t, &y);
    }
    Ok(stats)
}

fn initial_step<F>(rhs: &mut F, t: f64, y: &[C64], f0: &[C64], opts: &OdeOptions, stats: &mut OdeStats) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let sc = |v: &C64| opts.atol + opts.rtol * v.norm();
    let d0 = (y.iter().map(|v| (v.norm() / sc(v)).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let d1 = (y.iter().zip(f0).map(|(v, f)| (f.norm() / sc(v)).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(opts.h_max);
    let y1: Vec<C64> = y.iter().zip(f0).map(|(v, f)| v + f * h0).collect();
    let mut f1 = vec![C64::new(0.0, 0.0); y.len()];
    rhs(t + h0, &y1, &mut f1);
    stats.evaluations += 1;
    let d2 = (y
        .iter()
        .zip(f0.iter().zip(&f1))
        .map(|(v, (a, b))| ((b - a).norm() / sc(v)).powi(2))
        .sum::<f64>()
        / y.len() as f64)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

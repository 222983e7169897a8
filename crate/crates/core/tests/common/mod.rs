#![allow(dead_code)]

use gaugelink_core::doublewell::DoubleWellParams;

/// Second-order finite differences on a uniform grid with hard walls.
pub struct Grid {
    pub x: Vec<f64>,
    pub h: f64,
    pub diag: Vec<f64>,
    pub off: f64,
}

impl Grid {
    /// Points `-l + (i + shift) h`; `shift = 0.5` puts the origin between two points.
    pub fn new(p: &DoubleWellParams, l: f64, h: f64, shift: f64, g_e: f64) -> Grid {
        let cells = ((2.0 * l) / h).round() as usize;
        let x: Vec<f64> = if shift == 0.0 {
            (1..cells).map(|i| -l + i as f64 * h).collect()
        } else {
            (0..cells).map(|i| -l + (i as f64 + shift) * h).collect()
        };
        let mut diag: Vec<f64> = x.iter().map(|&x| 1.0 / (h * h) + p.potential(x)).collect();
        if g_e != 0.0 {
            for (i, &xi) in x.iter().enumerate() {
                if (xi.abs() - 0.5 * h).abs() < 1e-9 {
                    diag[i] += g_e / (2.0 * h);
                }
            }
        }
        Grid {
            x,
            h,
            diag,
            off: -0.5 / (h * h),
        }
    }

    /// Number of eigenvalues below `lam` (Sturm sequence).
    pub fn count_below(&self, lam: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for (i, d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - lam } else { d - lam - self.off * self.off / q };
            if q == 0.0 {
                q = 1e-300;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = (-50.0, 200.0);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Inverse iteration at a converged eigenvalue; normalised to unit L2 norm.
    pub fn eigenvector(&self, lam: f64) -> Vec<f64> {
        let n = self.diag.len();
        let mut v = vec![1.0; n];
        for _ in 0..3 {
            // Thomas algorithm for (H - lam') v_new = v with a tiny shift
            let shift = lam + 1e-10;
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 0..n {
                let b = self.diag[i] - shift;
                let denom = if i == 0 { b } else { b - self.off * c[i - 1] };
                c[i] = self.off / denom;
                d[i] = if i == 0 { v[i] / denom } else { (v[i] - self.off * d[i - 1]) / denom };
            }
            for i in (0..n).rev() {
                v[i] = if i == n - 1 { d[i] } else { d[i] - c[i] * v[i + 1] };
            }
            let norm = (v.iter().map(|a| a * a).sum::<f64>() * self.h).sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
        }
        v
    }
}

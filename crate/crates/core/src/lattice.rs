//! U(1) quantum link chain with bosonic matter, restricted to the Gauss-law sector.
//!
//! Sites are 0-based here; site `i` is "even" when `i + 1` is even, so the staggered
//! mass is `-m` on sites 0, 2, ... and the background charge sits on sites 1, 3, ...
//! Link `k` joins sites `k` and `k + 1` (mod L for periodic chains); spins are the
//! sigma^x eigenvalues `+1` / `-1`.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{self, LanczosOptions};

type C64 = Complex64;

pub const MAX_SITES: usize = 14;
/// Largest sector handled by dense diagonalization.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub sites: usize,
    #[serde(default = "yes")]
    pub periodic: bool,
    #[serde(default = "one")]
    pub hopping: f64,
    #[serde(default)]
    pub mass: f64,
    #[serde(default = "one_usize")]
    pub n_max: u8,
    /// Defaults to half filling.
    #[serde(default)]
    pub n_particles: Option<usize>,
    /// `g` in the field energy `(g^2 / 2) sum E^2` with `E = sigma^x / 2`.
    #[serde(default)]
    pub electric_coupling: f64,
}

fn yes() -> bool {
    true
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> u8 {
    1
}

impl LatticeConfig {
    pub fn new(sites: usize, periodic: bool, hopping: f64, mass: f64) -> Self {
        LatticeConfig {
            sites,
            periodic,
            hopping,
            mass,
            n_max: 1,
            n_particles: None,
            electric_coupling: 0.0,
        }
    }

    pub fn links(&self) -> usize {
        if self.periodic {
            self.sites
        } else {
            self.sites - 1
        }
    }

    pub fn particles(&self) -> usize {
        self.n_particles.unwrap_or(self.sites / 2)
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.sites;
        if l < 2 || l % 2 != 0 {
            return Err(Error::Lattice(format!("sites = {l} must be even and >= 2")));
        }
        if l > MAX_SITES {
            return Err(Error::Lattice(format!("sites = {l} exceeds {MAX_SITES}")));
        }
        if self.n_max == 0 {
            return Err(Error::Lattice("n_max must be >= 1".into()));
        }
        if self.particles() > l * self.n_max as usize {
            return Err(Error::Lattice(format!(
                "{} particles do not fit {l} sites with n_max = {}",
                self.particles(),
                self.n_max
            )));
        }
        if ![self.hopping, self.mass, self.electric_coupling].iter().all(|v| v.is_finite()) {
            return Err(Error::Lattice("couplings must be finite".into()));
        }
        Ok(())
    }

    fn link_sites(&self, k: usize) -> (usize, usize) {
        (k, (k + 1) % self.sites)
    }

    fn stagger(i: usize) -> f64 {
        if i % 2 == 0 {
            -1.0
        } else {
            1.0
        }
    }

    fn background(i: usize) -> i32 {
        (i % 2) as i32
    }

    fn diagonal(&self, c: &Configuration) -> f64 {
        let mass: f64 = c.occupations.iter().enumerate().map(|(i, &n)| Self::stagger(i) * n as f64).sum();
        let g = self.electric_coupling;
        self.mass * mass + 0.125 * g * g * self.links() as f64
    }

    /// Off-diagonal images of `c` under the hopping term.
    fn hops(&self, c: &Configuration, mut emit: impl FnMut(Configuration, f64)) {
        let nmax = self.n_max;
        for k in 0..self.links() {
            let (a, b) = self.link_sites(k);
            let (na, nb) = (c.occupations[a], c.occupations[b]);
            // b_a^dag sigma+ b_b: particle b -> a, link - -> +
            if c.links[k] == -1 && nb >= 1 && na < nmax {
                let mut d = c.clone();
                d.occupations[a] += 1;
                d.occupations[b] -= 1;
                d.links[k] = 1;
                emit(d, -self.hopping * ((na as f64 + 1.0) * nb as f64).sqrt());
            }
            if c.links[k] == 1 && na >= 1 && nb < nmax {
                let mut d = c.clone();
                d.occupations[b] += 1;
                d.occupations[a] -= 1;
                d.links[k] = -1;
                emit(d, -self.hopping * ((nb as f64 + 1.0) * na as f64).sqrt());
            }
        }
    }

    /// `G_i` for every site. Open ends use a zero outer field.
    pub fn gauss_values(&self, c: &Configuration) -> Vec<f64> {
        let l = self.sites;
        (0..l)
            .map(|i| {
                let right = if i < self.links() { c.links[i] as f64 } else { 0.0 };
                let left = if i > 0 {
                    c.links[i - 1] as f64
                } else if self.periodic {
                    c.links[l - 1] as f64
                } else {
                    0.0
                };
                0.5 * (right - left) - (c.occupations[i] as i32 - Self::background(i)) as f64
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Configuration {
    pub occupations: Vec<u8>,
    pub links: Vec<i8>,
}

impl Configuration {
    pub fn flux(&self) -> f64 {
        self.links.iter().map(|&s| s as f64).sum::<f64>() / self.links.len() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// disordered vacuum, zero flux
    Zero,
    Plus,
    Minus,
}

pub fn reference_configuration(config: &LatticeConfig, which: Reference) -> Configuration {
    let l = config.sites;
    let filled = |i: usize| match which {
        Reference::Zero => i % 2 == 0,
        _ => i % 2 == 1,
    };
    let occupations = (0..l).map(|i| filled(i) as u8).collect();
    let links = (0..config.links())
        .map(|k| match which {
            Reference::Zero => {
                if k % 2 == 0 {
                    1
                } else {
                    -1
                }
            }
            Reference::Plus => 1,
            Reference::Minus => -1,
        })
        .collect();
    Configuration { occupations, links }
}

#[derive(Clone, Debug)]
pub struct GaugeSectorBasis {
    pub configurations: Vec<Configuration>,
    index: HashMap<Configuration, usize>,
}

impl GaugeSectorBasis {
    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    pub fn find(&self, c: &Configuration) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn reference(&self, config: &LatticeConfig, which: Reference) -> Option<usize> {
        self.find(&reference_configuration(config, which))
    }
}

/// Every configuration obeying `G_i = 0` at the requested filling, sorted.
///
/// Given the link spins the Gauss law fixes every occupation, so the enumeration runs
/// over link configurations only. Open chains also range over the two outer fields.
pub fn enumerate_gauge_sector(config: &LatticeConfig) -> Result<GaugeSectorBasis> {
    config.validate()?;
    let l = config.sites;
    let nl = config.links();
    // spins on a ring of L fields; open chains add outer fields at both ends
    let fields = if config.periodic { l } else { l + 1 };
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << fields) {
        let s = |k: usize| if mask >> k & 1 == 1 { 1i32 } else { -1 };
        let mut occ = Vec::with_capacity(l);
        let mut ok = true;
        for i in 0..l {
            // right field of site i and its left field
            let (right, left) = if config.periodic {
                (s(i), s((i + l - 1) % l))
            } else {
                (s(i + 1), s(i))
            };
            let n = (right - left) / 2 + LatticeConfig::background(i);
            if n < 0 || n > config.n_max as i32 {
                ok = false;
                break;
            }
            occ.push(n as u8);
        }
        if !ok || occ.iter().map(|&n| n as usize).sum::<usize>() != config.particles() {
            continue;
        }
        let links = if config.periodic {
            (0..nl).map(|k| s(k) as i8).collect()
        } else {
            (0..nl).map(|k| s(k + 1) as i8).collect()
        };
        out.push(Configuration { occupations: occ, links });
    }
    if out.is_empty() {
        return Err(Error::Lattice(format!(
            "empty gauge sector for {} sites and {} particles",
            l,
            config.particles()
        )));
    }
    out.sort();
    let index = out.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    Ok(GaugeSectorBasis {
        configurations: out,
        index,
    })
}

/// Sector Hamiltonian. A hop leaving the sector is reported as a gauge violation.
pub fn build_hamiltonian(config: &LatticeConfig, basis: &GaugeSectorBasis) -> Result<CsrMatrix<f64>> {
    let n = basis.len();
    let mut coo = CooMatrix::new(n, n);
    for (i, c) in basis.configurations.iter().enumerate() {
        coo.push(i, i, config.diagonal(c));
        let mut leak = None;
        config.hops(c, |d, amp| match basis.find(&d) {
            Some(j) => coo.push(j, i, amp),
            None => leak = Some(d),
        });
        if let Some(d) = leak {
            return Err(Error::Lattice(format!("gauge violation: {c:?} -> {d:?}")));
        }
    }
    Ok(CsrMatrix::from(&coo))
}

/// Every occupation/link assignment, in mixed-radix order.
pub fn full_space(config: &LatticeConfig) -> Vec<Configuration> {
    let l = config.sites;
    let base = config.n_max as usize + 1;
    let nl = config.links();
    let total = base.pow(l as u32) << nl;
    (0..total)
        .map(|mut x| {
            let links = (0..nl)
                .map(|_| {
                    let s = if x & 1 == 1 { 1 } else { -1 };
                    x >>= 1;
                    s
                })
                .collect();
            let occupations = (0..l)
                .map(|_| {
                    let n = (x % base) as u8;
                    x /= base;
                    n
                })
                .collect();
            Configuration { occupations, links }
        })
        .collect()
}

/// Hamiltonian on the unconstrained space, all fillings included.
pub fn full_hamiltonian(config: &LatticeConfig) -> (Vec<Configuration>, CsrMatrix<f64>) {
    let states = full_space(config);
    let index: HashMap<&Configuration, usize> = states.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let n = states.len();
    let mut coo = CooMatrix::new(n, n);
    for (i, c) in states.iter().enumerate() {
        coo.push(i, i, config.diagonal(c));
        config.hops(c, |d, amp| coo.push(index[&d], i, amp));
    }
    (states, CsrMatrix::from(&coo))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussReport {
    /// `max_k ||[H, G_k]||_max` on the unconstrained space
    pub commutator: f64,
    /// `max_k |<G_k>|` over the sector basis
    pub sector_residual: f64,
    /// sector basis states mapped outside the sector by H
    pub leaks: usize,
}

pub fn gauss_residuals(config: &LatticeConfig) -> Result<GaussReport> {
    config.validate()?;
    if config.sites > 6 {
        return Err(Error::Lattice("the unconstrained check is limited to 6 sites".into()));
    }
    let (states, h) = full_hamiltonian(config);
    let g: Vec<Vec<f64>> = states.iter().map(|c| config.gauss_values(c)).collect();
    // G is diagonal, so [H, G_k]_ij = H_ij (G_k(j) - G_k(i))
    let mut commutator = 0.0f64;
    for (i, row) in h.row_iter().enumerate() {
        for (&j, v) in row.col_indices().iter().zip(row.values()) {
            for k in 0..config.sites {
                commutator = commutator.max((v * (g[j][k] - g[i][k])).abs());
            }
        }
    }
    let basis = enumerate_gauge_sector(config)?;
    let sector_residual = basis
        .configurations
        .iter()
        .flat_map(|c| {
            let g = config.gauss_values(c);
            // open ends carry a free outer field
            let (lo, hi) = if config.periodic { (0, g.len()) } else { (1, g.len() - 1) };
            g[lo..hi].to_vec()
        })
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let mut leaks = 0;
    for c in &basis.configurations {
        let mut out = false;
        config.hops(c, |d, _| out |= basis.find(&d).is_none());
        leaks += out as usize;
    }
    Ok(GaussReport {
        commutator,
        sector_residual,
        leaks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    #[serde(skip)]
    pub vectors: Option<DMatrix<f64>>,
    /// Indices into `values` grouped by degeneracy.
    pub groups: Vec<Vec<usize>>,
    pub dimension: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Auto,
    Dense,
    Krylov,
}

impl Solver {
    fn dense(self, dim: usize) -> bool {
        match self {
            Solver::Auto => dim <= DENSE_LIMIT,
            Solver::Dense => true,
            Solver::Krylov => false,
        }
    }
}

/// Relative grouping tolerance for degenerate eigenvalues.
pub const DEGENERACY_TOL: f64 = 1e-8;

fn group(values: &[f64], spread: f64) -> Vec<Vec<usize>> {
    let tol = DEGENERACY_TOL * spread;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if v - values[*g.last().unwrap()] <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

pub fn spectrum(config: &LatticeConfig, k_lowest: usize, vectors: bool, solver: Solver) -> Result<Spectrum> {
    let basis = enumerate_gauge_sector(config)?;
    let h = build_hamiltonian(config, &basis)?;
    let dim = basis.len();
    let k = k_lowest.min(dim);
    if solver.dense(dim) {
        let eig = SymmetricEigen::new(DMatrix::from(&h));
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let spread = eig.eigenvalues[order[dim - 1]] - eig.eigenvalues[order[0]];
        let values: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = vectors.then(|| DMatrix::from_fn(dim, k, |r, c| eig.eigenvectors[(r, order[c])]));
        Ok(Spectrum {
            groups: group(&values, spread),
            values,
            vectors: vecs,
            dimension: dim,
        })
    } else {
        let (values, vecs, top) = krylov::lowest_eigenpairs(&h, k, &LanczosOptions::default())?;
        let spread = top - values[0];
        let vecs = vectors.then(|| DMatrix::from_fn(dim, k, |r, c| vecs[c][r]));
        Ok(Spectrum {
            groups: group(&values, spread),
            values,
            vectors: vecs,
            dimension: dim,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapPoint {
    pub mass: f64,
    pub energies: [f64; 3],
    /// `(E1 - E0) / (E2 - E1)`
    pub ratio: f64,
}

/// Three lowest levels over a mass scan, computed concurrently.
pub fn gap_scan(config: &LatticeConfig, masses: &[f64]) -> Result<Vec<GapPoint>> {
    masses
        .par_iter()
        .map(|&m| {
            let c = LatticeConfig { mass: m, ..config.clone() };
            let s = spectrum(&c, 3, false, Solver::Auto)?;
            if s.values.len() < 3 {
                return Err(Error::Lattice("sector has fewer than three states".into()));
            }
            let e = [s.values[0], s.values[1], s.values[2]];
            Ok(GapPoint {
                mass: m,
                energies: e,
                ratio: (e[1] - e[0]) / (e[2] - e[1]),
            })
        })
        .collect()
}

/// Mass at which the gap ratio first reaches 1 coming from the quasi-degenerate
/// (negative mass) side, by linear interpolation. `points` must be sorted by mass.
pub fn degeneracy_crossover(points: &[GapPoint]) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        (a.ratio < 1.0 && b.ratio >= 1.0).then(|| a.mass + (1.0 - a.ratio) * (b.mass - a.mass) / (b.ratio - a.ratio))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    GPlus,
    GMinus,
    GZero,
    /// Amplitudes in sector basis order.
    #[serde(skip)]
    Custom(Vec<C64>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct QuenchResult {
    pub times: Vec<f64>,
    pub flux_density: Vec<f64>,
    pub p_zero: Vec<f64>,
    pub p_plus: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub energy: Vec<f64>,
}

pub fn quench_evolve(config: &LatticeConfig, initial: &InitialState, times: &[f64], solver: Solver) -> Result<QuenchResult> {
    let basis = enumerate_gauge_sector(config)?;
    let h = build_hamiltonian(config, &basis)?;
    let dim = basis.len();
    let refs = [Reference::Zero, Reference::Plus, Reference::Minus].map(|r| basis.reference(config, r));
    let pick = |r: Reference, slot: usize| -> Result<Vec<C64>> {
        let i = refs[slot].ok_or_else(|| Error::Lattice(format!("{r:?} reference state is outside the sector")))?;
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[i] = C64::new(1.0, 0.0);
        Ok(v)
    };
    let psi0 = match initial {
        InitialState::GZero => pick(Reference::Zero, 0)?,
        InitialState::GPlus => pick(Reference::Plus, 1)?,
        InitialState::GMinus => pick(Reference::Minus, 2)?,
        InitialState::Custom(v) => {
            if v.len() != dim {
                return Err(Error::Lattice(format!("custom state has {} amplitudes, sector has {dim}", v.len())));
            }
            let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.iter().map(|z| z / n).collect()
        }
    };
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Parameter("quench times must be non-negative and sorted".into()));
    }
    let flux: Vec<f64> = basis.configurations.iter().map(Configuration::flux).collect();
    let mut res = QuenchResult::default();
    let record = |t: f64, psi: &[C64], res: &mut QuenchResult| {
        let mut hpsi = vec![C64::new(0.0, 0.0); dim];
        krylov::csr_apply_complex(&h, psi, &mut hpsi);
        res.times.push(t);
        res.flux_density.push(psi.iter().zip(&flux).map(|(z, f)| z.norm_sqr() * f).sum());
        let p = |slot: usize| refs[slot].map_or(0.0, |i| psi[i].norm_sqr());
        res.p_zero.push(p(0));
        res.p_plus.push(p(1));
        res.p_minus.push(p(2));
        res.energy.push(psi.iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re).sum());
    };
    if solver.dense(dim) {
        let eig = SymmetricEigen::new(DMatrix::from(&h));
        let v = &eig.eigenvectors;
        let proj: Vec<C64> = (0..dim).map(|k| (0..dim).map(|i| psi0[i] * v[(i, k)]).sum()).collect();
        let mut psi = vec![C64::new(0.0, 0.0); dim];
        for &t in times {
            if t == 0.0 {
                record(t, &psi0, &mut res);
                continue;
            }
            let phased: Vec<C64> = (0..dim)
                .map(|k| proj[k] * C64::from_polar(1.0, -eig.eigenvalues[k] * t))
                .collect();
            for (i, p) in psi.iter_mut().enumerate() {
                *p = (0..dim).map(|k| phased[k] * v[(i, k)]).sum();
            }
            record(t, &psi, &mut res);
        }
    } else {
        let mut psi = psi0;
        let mut t_now = 0.0;
        for &t in times {
            psi = krylov::expm_apply(&h, &psi, t - t_now, 30, 1e-10)?;
            t_now = t;
            record(t, &psi, &mut res);
        }
    }
    Ok(res)
}

/// Running time average of `values` sampled on the uniform grid `times`
/// (trapezoid rule); element `i` averages over `[times[0], times[i]]`.
pub fn running_average(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        if i == 0 {
            out.push(values[0]);
            continue;
        }
        acc += 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
        out.push(acc / (times[i] - times[0]));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

/// Two-mode state `|N, theta> (x) |chi(theta)>` in the basis `|n_L> (x) {|+>, |->}`,
/// with `n_L = 0..=N` and the left mode carrying phase `exp(i theta)` per particle
/// relative to the right mode.
pub fn josephson_state(n: usize, theta: f64, branch: Branch) -> Vec<C64> {
    let ln_fact = |k: usize| (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
    let sign = match branch {
        Branch::Plus => 1.0,
        Branch::Minus => -1.0,
    };
    // eigenvectors of e^{-i theta} sigma+ + e^{i theta} sigma- : (1, +-e^{i theta}) / sqrt 2
    let chi = [C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0), C64::from_polar(sign * std::f64::consts::FRAC_1_SQRT_2, theta)];
    let mut out = Vec::with_capacity(2 * (n + 1));
    for nl in 0..=n {
        let ln_mag = 0.5 * (ln_fact(n) - ln_fact(nl) - ln_fact(n - nl)) - 0.5 * n as f64 * std::f64::consts::LN_2;
        let a = C64::from_polar(ln_mag.exp(), theta * nl as f64);
        out.push(a * chi[0]);
        out.push(a * chi[1]);
    }
    out
}

/// `J_z (b_L^dag sigma+ b_R + h.c.)` applied in the basis of [`josephson_state`].
pub fn josephson_apply(n: usize, j_z: f64, psi: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); psi.len()];
    let (plus, minus) = (0, 1);
    for nl in 0..n {
        // b_L^dag b_R : n_L -> n_L + 1, sigma+ : - -> +
        let amp = j_z * ((nl as f64 + 1.0) * (n - nl) as f64).sqrt();
        out[2 * (nl + 1) + plus] += amp * psi[2 * nl + minus];
        out[2 * nl + minus] += amp * psi[2 * (nl + 1) + plus];
    }
    out
}

/// Relative residual of the two-mode product state as an eigenvector with eigenvalue
/// `+- J_z N / 2`.
pub fn josephson_residual(n: usize, theta: f64, j_z: f64, branch: Branch) -> Result<f64> {
    if n == 0 || n % 2 != 0 || n > 128 {
        return Err(Error::Parameter(format!("N = {n} must be even and in 2..=128")));
    }
    if j_z == 0.0 || !j_z.is_finite() || !theta.is_finite() {
        return Err(Error::Parameter("J_z must be finite and non-zero".into()));
    }
    let psi = josephson_state(n, theta, branch);
    let h = josephson_apply(n, j_z, &psi);
    let target = match branch {
        Branch::Plus => 0.5 * j_z * n as f64,
        Branch::Minus => -0.5 * j_z * n as f64,
    };
    let r: f64 = h.iter().zip(&psi).map(|(a, b)| (a - target * b).norm_sqr()).sum::<f64>().sqrt();
    Ok(r / (0.5 * j_z.abs() * n as f64))
}

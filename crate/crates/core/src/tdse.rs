//! Coupled-channel propagation of particle x impurity motion x impurity spin.
//!
//! State layout: `idx = p * (N * M) + n * M + m` with spin `p` (down = 0),
//! particle level `n` and impurity level `m`. With a static impurity `M = 1`
//! and the layout coincides with [`crate::fourlevel`] for `N = 2`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contact::{interaction_matrices, j_matrix_element, HarmonicBasis, MassConfig, OddDerivative, Spin, SpinContactCouplings};
use crate::doublewell::{eval_wavefunction, origin_values, solve_noninteracting, DoubleWellParams, EigenState};
use crate::error::{Error, Result};
use crate::fourlevel::{ObservableSeries, Observables};
use crate::ode::{self, OdeOptions, OdeStats};
use crate::quad::composite_gauss_legendre;

type C64 = Complex64;
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImpurityMode {
    Static,
    Harmonic { omega_i: f64 },
    PaulTrap { omega_rf: f64, a: f64, q: f64 },
}

/// `(omega_rf / 2) sqrt(a + q^2 / 2)`
pub fn secular_frequency(omega_rf: f64, a: f64, q: f64) -> Result<f64> {
    let rad = a + 0.5 * q * q;
    if !(rad > 0.0) || !(omega_rf > 0.0) {
        return Err(Error::TrapStability(rad));
    }
    Ok(0.5 * omega_rf * rad.sqrt())
}

/// The `a` parameter giving secular frequency `omega_i` at drive `omega_rf` and given `q`.
pub fn paul_a_for(omega_rf: f64, omega_i: f64, q: f64) -> f64 {
    (2.0 * omega_i / omega_rf).powi(2) - 0.5 * q * q
}

impl ImpurityMode {
    /// Default Paul trap: drive 2500, secular frequency 100, `q = 0.2`.
    pub fn default_paul() -> Self {
        ImpurityMode::PaulTrap {
            omega_rf: 2500.0,
            a: paul_a_for(2500.0, 100.0, 0.2),
            q: 0.2,
        }
    }

    /// Trap frequency of the impurity basis, `None` for a static impurity.
    pub fn basis_frequency(&self) -> Result<Option<f64>> {
        match *self {
            ImpurityMode::Static => Ok(None),
            ImpurityMode::Harmonic { omega_i } => {
                if omega_i > 0.0 && omega_i.is_finite() {
                    Ok(Some(omega_i))
                } else {
                    Err(Error::Parameter(format!("omega_i = {omega_i} must be positive")))
                }
            }
            ImpurityMode::PaulTrap { omega_rf, a, q } => {
                if a.abs() >= q.abs() || q.abs() >= 1.0 {
                    log::warn!("Paul trap outside |a| << |q| < 1: a = {a}, q = {q}");
                }
                secular_frequency(omega_rf, a, q).map(Some)
            }
        }
    }

    /// `Omega(t)^2 / (4 omega_i^2) - 1` for the Paul trap, zero otherwise.
    pub fn drive_coefficient(&self, t: f64) -> f64 {
        match *self {
            ImpurityMode::PaulTrap { omega_rf, a, q } => (a + 2.0 * q * (omega_rf * t).cos()) / (a + 0.5 * q * q) - 1.0,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub initial_well: DoubleWellParams,
    pub evolve_well: DoubleWellParams,
    pub couplings: SpinContactCouplings,
    pub mass_ratio: f64,
    pub impurity: ImpurityMode,
    pub omega_r: f64,
    pub n_particle_basis: usize,
    pub n_impurity_basis: usize,
    #[serde(default)]
    pub odd_derivative: OddDerivative,
}

impl Scenario {
    /// Static impurity in the reference double well with opposite-equal couplings, on resonance.
    pub fn static_reference() -> Self {
        let well = crate::fourlevel::reference_well();
        Scenario {
            initial_well: well,
            evolve_well: well,
            couplings: SpinContactCouplings::opposite(1.0, 0.1),
            mass_ratio: 1.0,
            impurity: ImpurityMode::Static,
            omega_r: f64::NAN,
            n_particle_basis: 12,
            n_impurity_basis: 1,
            odd_derivative: OddDerivative::Particle,
        }
    }
}

/// Precomputed bases and operator blocks for one scenario.
pub struct TdseModel {
    pub scenario: Scenario,
    pub states: Vec<EigenState>,
    pub particle_energies: Vec<f64>,
    pub impurity: Option<HarmonicBasis>,
    pub impurity_energies: Vec<f64>,
    /// Interaction per spin on the `n * M + m` index.
    pub interaction: [DMatrix<f64>; 2],
    /// `m_i omega_i^2 x^2 / 2` on the impurity basis (Paul drive).
    pub trap_quadratic: DMatrix<f64>,
    /// `int_{x<0} psi_n psi_n'`
    pub left_projector: DMatrix<f64>,
    pub omega_r: f64,
}

impl TdseModel {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let sc = scenario.clone();
        let n = sc.n_particle_basis;
        if n < 2 {
            return Err(Error::Basis(format!("particle truncation {n} < 2")));
        }
        if !sc.couplings.is_finite() {
            return Err(Error::Parameter("couplings must be finite".into()));
        }
        let mass = MassConfig::new(sc.mass_ratio)?;
        let states = solve_noninteracting(&sc.evolve_well, n)?;
        let particle_energies: Vec<f64> = states.iter().map(|s| s.energy).collect();
        let omega_r = if sc.omega_r.is_nan() {
            particle_energies[1] - particle_energies[0]
        } else {
            sc.omega_r
        };
        let (impurity, impurity_energies, interaction, trap_quadratic) = match sc.impurity.basis_frequency()? {
            None => {
                if sc.n_impurity_basis != 1 {
                    return Err(Error::Basis("a static impurity has one motional state".into()));
                }
                let o = states
                    .iter()
                    .map(|s| origin_values(s, &sc.evolve_well))
                    .collect::<Result<Vec<_>>>()?;
                let block = |spin| {
                    let (g_e, g_o) = sc.couplings.channel(spin);
                    let m = DMatrix::from_fn(n, n, |a, b| j_matrix_element(&o[a], &o[b], g_e, g_o));
                    (&m + m.transpose()) * 0.5
                };
                (None, vec![0.0], [block(Spin::Down), block(Spin::Up)], DMatrix::zeros(1, 1))
            }
            Some(omega_i) => {
                let m_count = sc.n_impurity_basis;
                if m_count < 2 {
                    return Err(Error::Basis(format!("impurity truncation {m_count} < 2")));
                }
                let hb = HarmonicBasis::new(mass.impurity_mass(), omega_i, m_count)?;
                let v = interaction_matrices(&states, &sc.evolve_well, &hb, &sc.couplings, &mass, sc.odd_derivative)?;
                let k = hb.x2_matrix() * (0.5 * hb.mass * omega_i * omega_i);
                let e = (0..m_count).map(|m| hb.energy(m)).collect();
                (Some(hb), e, v, k)
            }
        };
        let left_projector = left_projector(&states, &sc.evolve_well)?;
        let model = TdseModel {
            scenario: sc,
            states,
            particle_energies,
            impurity,
            impurity_energies,
            interaction,
            trap_quadratic,
            left_projector,
            omega_r,
        };
        model.check_truncation();
        Ok(model)
    }

    pub fn n_particle(&self) -> usize {
        self.particle_energies.len()
    }

    pub fn n_impurity(&self) -> usize {
        self.impurity_energies.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.n_particle() * self.n_impurity()
    }

    pub fn index(&self, spin: usize, n: usize, m: usize) -> usize {
        let mm = self.n_impurity();
        spin * self.n_particle() * mm + n * mm + m
    }

    /// `E_n - omega_R / 2`, the detuning of the Rabi drive from the lowest transition.
    pub fn resonance_mismatch(&self) -> f64 {
        self.particle_energies[1] - self.particle_energies[0] - self.omega_r
    }

    fn check_truncation(&self) {
        let (nn, mm) = (self.n_particle(), self.n_impurity());
        for v in &self.interaction {
            let total = v.norm();
            if total == 0.0 {
                continue;
            }
            let mut edge = 0.0;
            for r in 0..v.nrows() {
                if r / mm == nn - 1 || (mm > 1 && r % mm == mm - 1) {
                    edge += v.row(r).norm_squared();
                }
            }
            if edge.sqrt() > 0.5 * total {
                log::warn!("interaction weight concentrated in the highest retained levels; enlarge the basis");
            }
        }
    }

    /// Full real-symmetric generator at time `t`.
    pub fn generator(&self, t: f64) -> DMatrix<f64> {
        let (nn, mm) = (self.n_particle(), self.n_impurity());
        let block = nn * mm;
        let c = self.scenario.impurity.drive_coefficient(t);
        let mut h = DMatrix::<f64>::zeros(2 * block, 2 * block);
        for p in 0..2 {
            let off = p * block;
            h.view_mut((off, off), (block, block)).copy_from(&self.interaction[p]);
            for n in 0..nn {
                for m in 0..mm {
                    let i = off + n * mm + m;
                    h[(i, i)] += self.particle_energies[n] + self.impurity_energies[m];
                    if c != 0.0 {
                        for m2 in 0..mm {
                            h[(i, off + n * mm + m2)] += c * self.trap_quadratic[(m, m2)];
                        }
                    }
                }
            }
        }
        for i in 0..block {
            h[(i, block + i)] = 0.5 * self.omega_r;
            h[(block + i, i)] = 0.5 * self.omega_r;
        }
        h
    }

    /// Particle in the second level of the initial well, impurity in its ground
    /// state, spin `(|up> - |down>)/sqrt 2`. Returns the state and the fraction of
    /// the particle state captured by the evolve basis.
    pub fn initial_state(&self) -> Result<(Vec<C64>, f64)> {
        let sc = &self.scenario;
        let nn = self.n_particle();
        let mut amp = vec![0.0; nn];
        let completeness = if sc.initial_well == sc.evolve_well {
            amp[1] = 1.0;
            1.0
        } else {
            let init = solve_noninteracting(&sc.initial_well, 2)?;
            let r = &init[1];
            let half = sc.initial_well.extent().max(sc.evolve_well.extent());
            let (mut x, mut w) = composite_gauss_legendre(-half, 0.0, 200, 16);
            let (x2, w2) = composite_gauss_legendre(0.0, half, 200, 16);
            x.extend(x2);
            w.extend(w2);
            for (xi, wi) in x.iter().zip(&w) {
                let f = eval_wavefunction(r, &sc.initial_well, *xi)?.value;
                for (n, s) in self.states.iter().enumerate() {
                    amp[n] += wi * f * eval_wavefunction(s, &sc.evolve_well, *xi)?.value;
                }
            }
            let c: f64 = amp.iter().map(|a| a * a).sum();
            if c < 0.999 {
                return Err(Error::Basis(format!("initial state captured to {c:.6} < 0.999")));
            }
            let norm = c.sqrt();
            amp.iter_mut().for_each(|a| *a /= norm);
            c
        };
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = vec![ZERO; self.dim()];
        for (n, a) in amp.iter().enumerate() {
            psi[self.index(Spin::Up.index(), n, 0)] = C64::new(h * a, 0.0);
            psi[self.index(Spin::Down.index(), n, 0)] = C64::new(-h * a, 0.0);
        }
        Ok((psi, completeness))
    }

    /// Observables at one sample.
    pub fn observe(&self, psi: &[C64]) -> Observables {
        let (nn, mm) = (self.n_particle(), self.n_impurity());
        let pl = &self.left_projector;
        let (d, u) = (Spin::Down.index(), Spin::Up.index());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (mut o_lp, mut o_rm, mut n_l, mut sx, mut sx_l) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut norm = 0.0;
        for m in 0..mm {
            let get = |p: usize, n: usize| psi[self.index(p, n, m)];
            let plus: Vec<C64> = (0..nn).map(|n| (get(u, n) + get(d, n)) * h).collect();
            let minus: Vec<C64> = (0..nn).map(|n| (get(u, n) - get(d, n)) * h).collect();
            // <a| P^L |b>
            let left = |a: &dyn Fn(usize) -> C64, b: &dyn Fn(usize) -> C64| -> C64 {
                let mut s = ZERO;
                for i in 0..nn {
                    let mut row = ZERO;
                    for j in 0..nn {
                        row += b(j) * pl[(i, j)];
                    }
                    s += a(i).conj() * row;
                }
                s
            };
            o_lp += left(&|i| plus[i], &|i| plus[i]).re;
            let m_sq: f64 = minus.iter().map(|z| z.norm_sqr()).sum();
            o_rm += m_sq - left(&|i| minus[i], &|i| minus[i]).re;
            n_l += left(&|i| get(d, i), &|i| get(d, i)).re + left(&|i| get(u, i), &|i| get(u, i)).re;
            let cross: C64 = (0..nn).map(|i| get(u, i).conj() * get(d, i)).sum();
            sx += 2.0 * cross.re;
            sx_l += 2.0 * left(&|i| get(u, i), &|i| get(d, i)).re;
            norm += (0..nn).map(|i| get(d, i).norm_sqr() + get(u, i).norm_sqr()).sum::<f64>();
        }
        let n_r = norm - n_l;
        // (n_L - n_R) sigma_x = (2 P^L - 1) sigma_x
        let corr_first = 2.0 * sx_l - sx;
        Observables {
            o_l_plus: o_lp,
            o_r_minus: o_rm,
            correlation: corr_first - (n_l - n_r) * sx,
            g_l: n_l - 0.5 * sx,
            g_r: n_r + 0.5 * sx,
        }
    }

    pub fn observables(&self, traj: &Propagation) -> ObservableSeries {
        let mut s = ObservableSeries::default();
        for (t, psi) in traj.times.iter().zip(&traj.states) {
            s.push(*t, self.observe(psi));
        }
        s
    }

    pub fn energy(&self, t: f64, psi: &[C64]) -> f64 {
        let h = self.generator(t);
        let mut e = 0.0;
        for i in 0..psi.len() {
            let mut row = ZERO;
            for j in 0..psi.len() {
                row += psi[j] * h[(i, j)];
            }
            e += (psi[i].conj() * row).re;
        }
        e
    }
}

fn left_projector(states: &[EigenState], well: &DoubleWellParams) -> Result<DMatrix<f64>> {
    let n = states.len();
    let (x, w) = composite_gauss_legendre(-well.extent(), 0.0, 160, 16);
    let mut vals = DMatrix::<f64>::zeros(x.len(), n);
    for (k, xi) in x.iter().enumerate() {
        for (j, s) in states.iter().enumerate() {
            vals[(k, j)] = w[k].sqrt() * eval_wavefunction(s, well, *xi)?.value;
        }
    }
    let p = vals.transpose() * &vals;
    Ok((&p + p.transpose()) * 0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    /// Adaptive Runge-Kutta in the interaction picture of the uncoupled motion.
    #[default]
    RungeKutta,
    /// Exact eigendecomposition; time-independent generators only.
    Eigen,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TdseOptions {
    pub rtol: f64,
    pub atol: f64,
    pub dt_out: f64,
    pub propagator: Propagator,
    /// Nodes per rf period in the tabulated impurity propagator.
    pub floquet_nodes: usize,
}

impl Default for TdseOptions {
    fn default() -> Self {
        TdseOptions {
            rtol: 1e-9,
            atol: 1e-12,
            dt_out: 0.5,
            propagator: Propagator::RungeKutta,
            floquet_nodes: 4096,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Propagation {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    pub stats: OdeStats,
}

fn output_times(t_final: f64, dt_out: f64) -> Result<Vec<f64>> {
    if !(t_final >= 0.0 && t_final.is_finite() && dt_out > 0.0) {
        return Err(Error::Parameter(format!("t_final = {t_final}, dt_out = {dt_out}")));
    }
    let count = (t_final / dt_out + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| k as f64 * dt_out).collect())
}

pub fn propagate(model: &TdseModel, initial: &[C64], t_final: f64, opts: &TdseOptions) -> Result<Propagation> {
    if initial.len() != model.dim() {
        return Err(Error::Parameter(format!("state length {} != {}", initial.len(), model.dim())));
    }
    let times = output_times(t_final, opts.dt_out)?;
    match opts.propagator {
        Propagator::Eigen => {
            if matches!(model.scenario.impurity, ImpurityMode::PaulTrap { .. }) {
                return Err(Error::Parameter("eigen propagation needs a time-independent generator".into()));
            }
            propagate_eigen(model, initial, &times)
        }
        Propagator::RungeKutta => propagate_interaction(model, initial, &times, opts),
    }
}

fn propagate_eigen(model: &TdseModel, initial: &[C64], times: &[f64]) -> Result<Propagation> {
    let eig = SymmetricEigen::new(model.generator(0.0));
    let v = &eig.eigenvectors;
    let d = initial.len();
    let proj: Vec<C64> = (0..d).map(|k| (0..d).map(|i| initial[i] * v[(i, k)]).sum()).collect();
    let mut out = Propagation::default();
    for &t in times {
        let ph: Vec<C64> = (0..d).map(|k| proj[k] * C64::from_polar(1.0, -eig.eigenvalues[k] * t)).collect();
        let psi = (0..d).map(|i| (0..d).map(|k| ph[k] * v[(i, k)]).sum()).collect();
        out.times.push(t);
        out.states.push(psi);
    }
    Ok(out)
}

/// Impurity-only propagator `U_i(t)` on the motional basis.
enum ImpurityPropagator {
    Diagonal(Vec<f64>),
    Floquet(FloquetTable),
}

/// `U_i` tabulated over one drive period, with whole periods applied as powers.
struct FloquetTable {
    period: f64,
    m: usize,
    /// values and time derivatives at `k * period / nodes`, row-major `m x m`
    u: Vec<Vec<C64>>,
    du: Vec<Vec<C64>>,
    /// cached `(k, U_T^k)`
    powers: Vec<(u64, Vec<C64>)>,
}

fn matmul(a: &[C64], b: &[C64], m: usize) -> Vec<C64> {
    let mut c = vec![ZERO; m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == ZERO {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    c
}

impl FloquetTable {
    fn build(model: &TdseModel, omega_rf: f64, nodes: usize) -> Result<Self> {
        let m = model.n_impurity();
        let period = 2.0 * std::f64::consts::PI / omega_rf;
        let e = model.impurity_energies.clone();
        let k = model.trap_quadratic.clone();
        let mode = model.scenario.impurity;
        let hmat = |t: f64| {
            let c = mode.drive_coefficient(t);
            let mut h = &k * c;
            for i in 0..m {
                h[(i, i)] += e[i];
            }
            h
        };
        let mut y0 = vec![ZERO; m * m];
        for i in 0..m {
            y0[i * m + i] = C64::new(1.0, 0.0);
        }
        let t_out: Vec<f64> = (0..=nodes).map(|j| period * j as f64 / nodes as f64).collect();
        let opts = OdeOptions {
            rtol: 1e-13,
            atol: 1e-15,
            h_max: period / 64.0,
            ..Default::default()
        };
        let mut u = Vec::with_capacity(nodes + 1);
        let mut du = Vec::with_capacity(nodes + 1);
        ode::integrate(
            |t, y, dy| {
                let h = hmat(t);
                for i in 0..m {
                    for j in 0..m {
                        let mut s = ZERO;
                        for l in 0..m {
                            s += y[l * m + j] * h[(i, l)];
                        }
                        dy[i * m + j] = C64::new(s.im, -s.re);
                    }
                }
            },
            0.0,
            &y0,
            &t_out,
            &opts,
            |j, _t, y| {
                let h = hmat(t_out[j]);
                let mut d = vec![ZERO; m * m];
                for i in 0..m {
                    for jj in 0..m {
                        let mut s = ZERO;
                        for l in 0..m {
                            s += y[l * m + jj] * h[(i, l)];
                        }
                        d[i * m + jj] = C64::new(s.im, -s.re);
                    }
                }
                u.push(y.to_vec());
                du.push(d);
            },
        )?;
        let one = y0;
        Ok(FloquetTable {
            period,
            m,
            u,
            du,
            powers: vec![(0, one)],
        })
    }

    fn power(&mut self, k: u64) -> Vec<C64> {
        if let Some((_, p)) = self.powers.iter().find(|(j, _)| *j == k) {
            return p.clone();
        }
        let nodes = self.u.len() - 1;
        let ut = self.u[nodes].clone();
        let (mut j, mut p) = self
            .powers
            .iter()
            .filter(|(j, _)| *j <= k)
            .max_by_key(|(j, _)| *j)
            .map(|(j, p)| (*j, p.clone()))
            .unwrap_or((0, self.powers[0].1.clone()));
        while j < k {
            p = matmul(&ut, &p, self.m);
            j += 1;
        }
        self.powers.push((k, p.clone()));
        if self.powers.len() > 4 {
            // keep the identity and the most recent powers
            let keep_from = self.powers.len() - 3;
            let mut kept = vec![self.powers[0].clone()];
            kept.extend(self.powers.drain(keep_from..));
            self.powers = kept;
        }
        p
    }

    fn eval(&mut self, t: f64) -> Vec<C64> {
        let k = (t / self.period).floor().max(0.0);
        let s = t - k * self.period;
        let nodes = self.u.len() - 1;
        let hnode = self.period / nodes as f64;
        let j = ((s / hnode).floor() as usize).min(nodes - 1);
        let tau = (s - j as f64 * hnode) / hnode;
        let (t2, t3) = (tau * tau, tau * tau * tau);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + tau;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let mm = self.m * self.m;
        let us: Vec<C64> = (0..mm)
            .map(|i| {
                self.u[j][i] * h00 + self.du[j][i] * (h10 * hnode) + self.u[j + 1][i] * h01 + self.du[j + 1][i] * (h11 * hnode)
            })
            .collect();
        let p = self.power(k as u64);
        matmul(&us, &p, self.m)
    }
}

impl ImpurityPropagator {
    fn eval(&mut self, t: f64, out: &mut Vec<C64>) {
        match self {
            ImpurityPropagator::Diagonal(e) => {
                out.clear();
                out.extend(e.iter().map(|&x| C64::from_polar(1.0, -x * t)));
            }
            ImpurityPropagator::Floquet(f) => {
                let u = f.eval(t);
                let m = f.m;
                out.clear();
                out.extend_from_slice(&u);
                for i in 0..m {
                    for j in 0..m {
                        out.push(u[j * m + i].conj());
                    }
                }
            }
        }
    }
}

/// Interaction picture with respect to particle energies, impurity motion and
/// the Rabi drive; only the contact interaction remains in the equations.
fn propagate_interaction(model: &TdseModel, initial: &[C64], times: &[f64], opts: &TdseOptions) -> Result<Propagation> {
    let (nn, mm) = (model.n_particle(), model.n_impurity());
    let block = nn * mm;
    let mut imp = match model.scenario.impurity {
        ImpurityMode::PaulTrap { omega_rf, .. } => ImpurityPropagator::Floquet(FloquetTable::build(model, omega_rf, opts.floquet_nodes)?),
        _ => ImpurityPropagator::Diagonal(model.impurity_energies.clone()),
    };
    let diagonal_imp = matches!(imp, ImpurityPropagator::Diagonal(_));
    let h_max = match model.scenario.impurity {
        ImpurityMode::PaulTrap { omega_rf, .. } => 2.0 * std::f64::consts::PI / (20.0 * omega_rf),
        _ => f64::INFINITY,
    };
    let omega = model.omega_r;
    let e = &model.particle_energies;
    let v = &model.interaction;

    let mut ui = Vec::new();
    let mut c = vec![ZERO; 2 * block];
    let mut w = vec![ZERO; 2 * block];
    let mut tmp = vec![ZERO; mm];
    let mut xs = DMatrix::<f64>::zeros(block, 2);
    let mut ws = DMatrix::<f64>::zeros(block, 2);

    // apply U_0(t) (forward = true) or U_0(t)^dagger to x in place
    let apply_u0 = |x: &mut [C64], t: f64, forward: bool, ui: &[C64], tmp: &mut [C64]| {
        let sgn = if forward { 1.0 } else { -1.0 };
        for p in 0..2 {
            for n in 0..nn {
                let ph = C64::from_polar(1.0, -sgn * e[n] * t);
                let base = p * block + n * mm;
                let seg = &mut x[base..base + mm];
                if diagonal_imp {
                    for (m, z) in seg.iter_mut().enumerate() {
                        let u = if forward { ui[m] } else { ui[m].conj() };
                        *z *= ph * u;
                    }
                } else {
                    // ui holds U row-major followed by U^dagger row-major
                    let u = if forward { &ui[..mm * mm] } else { &ui[mm * mm..] };
                    for (i, out) in tmp.iter_mut().enumerate() {
                        let row = &u[i * mm..(i + 1) * mm];
                        let mut acc = ZERO;
                        for (a, b) in row.iter().zip(seg.iter()) {
                            acc += a * b;
                        }
                        *out = acc * ph;
                    }
                    seg.copy_from_slice(&tmp[..mm]);
                }
            }
        }
        // exp(-i sgn omega t sigma_x / 2)
        let (cs, sn) = ((0.5 * omega * t).cos(), (0.5 * omega * t).sin() * sgn);
        for i in 0..block {
            let (a, b) = (x[i], x[block + i]);
            x[i] = a * cs + C64::new(0.0, -sn) * b;
            x[block + i] = b * cs + C64::new(0.0, -sn) * a;
        }
    };

    let rhs = |t: f64, b: &[C64], db: &mut [C64]| {
        imp.eval(t, &mut ui);
        c.copy_from_slice(b);
        apply_u0(&mut c, t, true, &ui, &mut tmp);
        for p in 0..2 {
            let off = p * block;
            for i in 0..block {
                xs[(i, 0)] = c[off + i].re;
                xs[(i, 1)] = c[off + i].im;
            }
            ws.gemm(1.0, &v[p], &xs, 0.0);
            for i in 0..block {
                w[off + i] = C64::new(ws[(i, 0)], ws[(i, 1)]);
            }
        }
        apply_u0(&mut w, t, false, &ui, &mut tmp);
        for (d, x) in db.iter_mut().zip(&w) {
            *d = C64::new(x.im, -x.re);
        }
    };

    let mut states = Vec::with_capacity(times.len());
    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h_max,
        ..Default::default()
    };
    let mut raw = Vec::with_capacity(times.len());
    let stats = ode::integrate(rhs, 0.0, initial, times, &ode_opts, |_, t, y| raw.push((t, y.to_vec())))?;
    // back to the Schroedinger picture
    let mut imp2 = match model.scenario.impurity {
        ImpurityMode::PaulTrap { omega_rf, .. } => ImpurityPropagator::Floquet(FloquetTable::build(model, omega_rf, opts.floquet_nodes)?),
        _ => ImpurityPropagator::Diagonal(model.impurity_energies.clone()),
    };
    let mut ui = Vec::new();
    let mut tmp = vec![ZERO; mm];
    for (t, mut y) in raw {
        imp2.eval(t, &mut ui);
        apply_u0(&mut y, t, true, &ui, &mut tmp);
        states.push(y);
    }
    Ok(Propagation {
        times: times.to_vec(),
        states,
        stats,
    })
}

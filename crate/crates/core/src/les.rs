//! Periodic-box large-eddy solver with a pluggable closure.
//!
//! Second-order central differences on a collocated grid, advection in
//! skew-symmetric form, the stress `2νS − τ` evaluated pointwise from the
//! discrete gradient, and a spectral projection whose symbol is the central
//! difference operator itself (`sin(k h)/h`), so that the projected field is
//! divergence-free to round-off under the same discrete divergence.
//!
//! With these choices the semi-discrete energy satisfies
//! `dE/dt = −h³ Σ tr((2νS − τ)S)` exactly: advection and pressure do no work.

use std::f64::consts::PI;
use std::io::{self, Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::invariants::SingularityPolicy;
use crate::models::{ClosureModel, ModelError};
use crate::tensor::{SkewTensor3, SymTensor3, Tensor3};

#[derive(Debug, Error)]
pub enum LesError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("non-finite value in {field} at step {step}")]
    NonFinite { step: usize, field: &'static str },
    #[error("closure failed at step {step}, point {point:?}: {source}")]
    Closure {
        step: usize,
        point: [usize; 3],
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad field dump: {0}")]
    Dump(String),
}

/// Uniform periodic grid with `n³` points on `[0, L)³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub length: f64,
    pub h: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self, LesError> {
        if n < 8 || !n.is_multiple_of(2) || n > 64 {
            return Err(LesError::Grid(format!("n must be even and in 8..=64, got {n}")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(LesError::Grid(format!("box length must be positive, got {length}")));
        }
        Ok(Grid { n, length, h: length / n as f64 })
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Flat index, `x` slowest and `z` fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    fn wrap(&self, i: usize, d: isize) -> usize {
        (i as isize + d).rem_euclid(self.n as isize) as usize
    }

    pub fn coords(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [i as f64 * self.h, j as f64 * self.h, k as f64 * self.h]
    }

    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    /// Central-difference symbol `sin(2π m / n)/h` for index `m`; exactly zero
    /// at `m = 0` and at the Nyquist index.
    fn symbol(&self, m: usize) -> f64 {
        if m == 0 || 2 * m == self.n {
            return 0.0;
        }
        let signed = if 2 * m < self.n { m as f64 } else { m as f64 - self.n as f64 };
        (2.0 * PI * signed / self.n as f64).sin() / self.h
    }
}

/// Velocity and pressure on the grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub grid: Grid,
    pub u: [Vec<f64>; 3],
    pub p: Vec<f64>,
    pub t: f64,
    pub nu: f64,
}

impl FlowState {
    pub fn zeros(grid: Grid, nu: f64) -> Self {
        let z = vec![0.0; grid.len()];
        FlowState { grid, u: [z.clone(), z.clone(), z.clone()], p: z, t: 0.0, nu }
    }

    /// Samples `f(x)` at the grid points. The result is not projected.
    pub fn from_fn<F: Fn([f64; 3]) -> [f64; 3]>(grid: Grid, nu: f64, f: F) -> Self {
        let mut s = Self::zeros(grid, nu);
        for i in 0..grid.n {
            for j in 0..grid.n {
                for k in 0..grid.n {
                    let v = f(grid.coords(i, j, k));
                    let id = grid.idx(i, j, k);
                    for c in 0..3 {
                        s.u[c][id] = v[c];
                    }
                }
            }
        }
        s
    }

    /// `u = U (sin x cos y cos z, −cos x sin y cos z, 0)` with `x` measured in
    /// units of `L/2π`.
    pub fn taylor_green(grid: Grid, nu: f64, amplitude: f64) -> Self {
        let k = 2.0 * PI / grid.length;
        Self::from_fn(grid, nu, |x| {
            let (sx, cx) = (k * x[0]).sin_cos();
            let (sy, cy) = (k * x[1]).sin_cos();
            let cz = (k * x[2]).cos();
            [amplitude * sx * cy * cz, -amplitude * cx * sy * cz, 0.0]
        })
    }

    /// `E = ½ Σ |u|² h³`.
    pub fn energy(&self) -> f64 {
        let sum: f64 = (0..self.grid.len())
            .map(|id| self.u[0][id].powi(2) + self.u[1][id].powi(2) + self.u[2][id].powi(2))
            .sum();
        0.5 * sum * self.grid.cell_volume()
    }

    pub fn max_speed(&self) -> f64 {
        (0..self.grid.len())
            .map(|id| (self.u[0][id].powi(2) + self.u[1][id].powi(2) + self.u[2][id].powi(2)).sqrt())
            .fold(0.0, f64::max)
    }

    /// Root-mean-square speed.
    pub fn rms_speed(&self) -> f64 {
        (2.0 * self.energy() / self.grid.length.powi(3)).sqrt()
    }

    pub fn gradient_at(&self, i: usize, j: usize, k: usize) -> Tensor3 {
        central_gradient(&self.grid, &self.u, i, j, k)
    }

    /// Largest `|δ_j u_j|` over the grid.
    pub fn max_divergence(&self) -> f64 {
        let g = &self.grid;
        let mut m = 0.0_f64;
        for i in 0..g.n {
            for j in 0..g.n {
                for k in 0..g.n {
                    m = m.max(self.gradient_at(i, j, k).trace().abs());
                }
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }
}

#[inline]
fn central_gradient(g: &Grid, u: &[Vec<f64>; 3], i: usize, j: usize, k: usize) -> Tensor3 {
    let inv = 0.5 / g.h;
    let xp = g.idx(g.wrap(i, 1), j, k);
    let xm = g.idx(g.wrap(i, -1), j, k);
    let yp = g.idx(i, g.wrap(j, 1), k);
    let ym = g.idx(i, g.wrap(j, -1), k);
    let zp = g.idx(i, j, g.wrap(k, 1));
    let zm = g.idx(i, j, g.wrap(k, -1));
    let mut m = [[0.0; 3]; 3];
    for a in 0..3 {
        m[a][0] = (u[a][xp] - u[a][xm]) * inv;
        m[a][1] = (u[a][yp] - u[a][ym]) * inv;
        m[a][2] = (u[a][zp] - u[a][zm]) * inv;
    }
    Tensor3(m)
}

/// Spectral projection onto discretely divergence-free fields.
pub struct Projector {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    symbol: Vec<f64>,
}

impl std::fmt::Debug for Projector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Projector").field("grid", &self.grid).finish()
    }
}

impl Projector {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n);
        let inverse = planner.plan_fft_inverse(grid.n);
        let symbol = (0..grid.n).map(|m| grid.symbol(m)).collect();
        Projector { grid, forward, inverse, symbol }
    }

    fn fft3(&self, data: &mut [Complex<f64>], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n;
        // z lines are contiguous
        for line in data.chunks_mut(n) {
            fft.process(line);
        }
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    buf[j] = data[(i * n + j) * n + k];
                }
                fft.process(&mut buf);
                for j in 0..n {
                    data[(i * n + j) * n + k] = buf[j];
                }
            }
        }
        for j in 0..n {
            for k in 0..n {
                for i in 0..n {
                    buf[i] = data[(i * n + j) * n + k];
                }
                fft.process(&mut buf);
                for i in 0..n {
                    data[(i * n + j) * n + k] = buf[i];
                }
            }
        }
    }

    /// Projects `f` in place and returns the pressure `p` with `f ← f − δp`.
    pub fn project(&self, f: &mut [Vec<f64>; 3]) -> Vec<f64> {
        let g = self.grid;
        let n = g.n;
        let mut hat: [Vec<Complex<f64>>; 3] =
            std::array::from_fn(|c| f[c].iter().map(|&v| Complex::new(v, 0.0)).collect());
        for h in hat.iter_mut() {
            self.fft3(h, &self.forward);
        }
        let mut p_hat = vec![Complex::new(0.0, 0.0); g.len()];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let s = [self.symbol[i], self.symbol[j], self.symbol[k]];
                    let s2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
                    if s2 == 0.0 {
                        continue;
                    }
                    let id = g.idx(i, j, k);
                    let sf = hat[0][id] * s[0] + hat[1][id] * s[1] + hat[2][id] * s[2];
                    for c in 0..3 {
                        hat[c][id] -= sf * (s[c] / s2);
                    }
                    // δp has symbol i s p̂ and must equal s (s·f̂)/|s|²
                    p_hat[id] = Complex::new(0.0, -1.0) * sf / s2;
                }
            }
        }
        let scale = 1.0 / g.len() as f64;
        for (c, h) in hat.iter_mut().enumerate() {
            self.fft3(h, &self.inverse);
            for (dst, v) in f[c].iter_mut().zip(h.iter()) {
                *dst = v.re * scale;
            }
        }
        self.fft3(&mut p_hat, &self.inverse);
        p_hat.iter().map(|v| v.re * scale).collect()
    }
}

/// Volume integrals at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Dissipation {
    /// `h³ Σ 2ν S:S`.
    pub viscous: f64,
    /// `−h³ Σ τ:S`; positive when the closure removes energy.
    pub subgrid: f64,
    /// Largest `|τ:S| / (2 S:S)` over points with nonzero strain.
    pub max_eddy_viscosity: f64,
}

impl Dissipation {
    pub fn total(&self) -> f64 {
        self.viscous + self.subgrid
    }
}

/// Right-hand side `−N(u) + δ·(2νS − τ)`, unprojected, plus the dissipation
/// integrals of the state it was evaluated at.
pub fn rhs(state: &FlowState, model: &ClosureModel, step: usize) -> Result<([Vec<f64>; 3], Dissipation), LesError> {
    let g = state.grid;
    let n = g.n;
    let nu = state.nu;
    let skip_model = model.is_zero();

    // pointwise stress σ = 2νS − τ, stored as six components
    type Slab = (Vec<[f64; 6]>, f64, f64, f64);
    let slabs: Vec<Result<Slab, LesError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut sig = Vec::with_capacity(n * n);
            let (mut visc, mut sgs, mut eddy) = (0.0, 0.0, 0.0_f64);
            for j in 0..n {
                for k in 0..n {
                    let grad = central_gradient(&g, &state.u, i, j, k);
                    let s = grad.sym_part();
                    let w: SkewTensor3 = grad.skew_part();
                    let ss = s.contract(&s);
                    let tau = if skip_model {
                        SymTensor3::ZERO
                    } else {
                        model
                            .evaluate(&s, &w)
                            .map_err(|source| LesError::Closure { step, point: [i, j, k], source })?
                            .tau_dev
                    };
                    let ts = tau.contract(&s);
                    visc += 2.0 * nu * ss;
                    sgs -= ts;
                    if ss > 0.0 {
                        eddy = eddy.max(ts.abs() / (2.0 * ss));
                    }
                    let sigma = s.scale(2.0 * nu) - tau;
                    sig.push(sigma.components());
                }
            }
            Ok((sig, visc, sgs, eddy))
        })
        .collect();

    let mut sigma = Vec::with_capacity(g.len());
    let mut diss = Dissipation::default();
    for slab in slabs {
        let (s, v, sg, e) = slab?;
        sigma.extend(s);
        diss.viscous += v;
        diss.subgrid += sg;
        diss.max_eddy_viscosity = diss.max_eddy_viscosity.max(e);
    }
    let vol = g.cell_volume();
    diss.viscous *= vol;
    diss.subgrid *= vol;

    // components order [xx, yy, zz, xy, yz, xz]
    const SIG: [[usize; 3]; 3] = [[0, 3, 5], [3, 1, 4], [5, 4, 2]];
    let inv = 0.5 / g.h;
    let u = &state.u;
    let rows: Vec<[f64; 3]> = (0..g.len())
        .into_par_iter()
        .map(|id| {
            let (i, j, k) = (id / (n * n), (id / n) % n, id % n);
            let nb = [
                [g.idx(g.wrap(i, 1), j, k), g.idx(g.wrap(i, -1), j, k)],
                [g.idx(i, g.wrap(j, 1), k), g.idx(i, g.wrap(j, -1), k)],
                [g.idx(i, j, g.wrap(k, 1)), g.idx(i, j, g.wrap(k, -1))],
            ];
            let mut out = [0.0; 3];
            for a in 0..3 {
                let mut adv = 0.0;
                let mut div_sigma = 0.0;
                for b in 0..3 {
                    let [p, m] = nb[b];
                    // ½ [u_b δ_b u_a + δ_b (u_b u_a)]
                    adv += 0.5 * (u[b][id] * (u[a][p] - u[a][m]) + (u[b][p] * u[a][p] - u[b][m] * u[a][m])) * inv;
                    div_sigma += (sigma[p][SIG[a][b]] - sigma[m][SIG[a][b]]) * inv;
                }
                out[a] = div_sigma - adv;
            }
            out
        })
        .collect();
    let mut f: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(g.len()));
    for r in rows {
        for a in 0..3 {
            f[a].push(r[a]);
        }
    }
    if f.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
        return Err(LesError::NonFinite { step, field: "rhs" });
    }
    Ok((f, diss))
}

/// Low-storage three-stage Runge–Kutta coefficients.
pub const RK3_A: [f64; 3] = [0.0, -5.0 / 9.0, -153.0 / 128.0];
pub const RK3_B: [f64; 3] = [1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0];

/// Advances one step of size `dt`. Each stage right-hand side is projected
/// before it is accumulated. Returns the dissipation at the start of the step.
pub fn step(
    state: &mut FlowState,
    model: &ClosureModel,
    projector: &Projector,
    dt: f64,
    step_index: usize,
) -> Result<Dissipation, LesError> {
    let first = rhs(state, model, step_index)?;
    step_from(state, model, projector, dt, step_index, first)
}

/// As [`step`], reusing an already evaluated first-stage right-hand side.
pub fn step_from(
    state: &mut FlowState,
    model: &ClosureModel,
    projector: &Projector,
    dt: f64,
    step_index: usize,
    first: ([Vec<f64>; 3], Dissipation),
) -> Result<Dissipation, LesError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(LesError::Params(format!("time step must be positive, got {dt}")));
    }
    let len = state.grid.len();
    let mut q: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; len]);
    let diss0 = first.1;
    let mut stage_rhs = Some(first.0);
    for stage in 0..3 {
        let mut f = match stage_rhs.take() {
            Some(f) => f,
            None => rhs(state, model, step_index)?.0,
        };
        state.p = projector.project(&mut f);
        for c in 0..3 {
            for id in 0..len {
                q[c][id] = RK3_A[stage] * q[c][id] + dt * f[c][id];
                state.u[c][id] += RK3_B[stage] * q[c][id];
            }
        }
    }
    projector.project(&mut state.u);
    state.t += dt;
    if !state.is_finite() {
        return Err(LesError::NonFinite { step: step_index, field: "velocity" });
    }
    Ok(diss0)
}

/// Time-step policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum DtPolicy {
    Fixed { dt: f64 },
    /// `dt = min(cfl·h/max|u|, diffusive·h²/(ν + max eddy viscosity))`.
    Adaptive { cfl: f64, diffusive: f64 },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Adaptive { cfl: 0.3, diffusive: 0.2 }
    }
}

impl DtPolicy {
    pub fn dt(&self, grid: &Grid, nu: f64, max_speed: f64, diss: &Dissipation) -> f64 {
        match *self {
            DtPolicy::Fixed { dt } => dt,
            DtPolicy::Adaptive { cfl, diffusive } => {
                let adv = if max_speed > 0.0 { cfl * grid.h / max_speed } else { f64::INFINITY };
                let visc = nu + diss.max_eddy_viscosity;
                let dif = if visc > 0.0 { diffusive * grid.h * grid.h / visc } else { f64::INFINITY };
                let dt = adv.min(dif);
                if dt.is_finite() {
                    dt
                } else {
                    diffusive * grid.h * grid.h
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    TaylorGreen { amplitude: f64 },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::TaylorGreen { amplitude: 1.0 }
    }
}

/// Simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub n: usize,
    pub length: f64,
    pub nu: f64,
    pub steps: usize,
    pub dt: DtPolicy,
    pub initial: InitialCondition,
    /// Stop when `E` exceeds this multiple of the initial energy.
    pub blowup_factor: f64,
    /// Per-step relative growth of `E` that is flagged.
    pub energy_tolerance: f64,
    /// Closure regularization `ε` in units of `U/L`.
    pub regularization: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            n: 16,
            length: 2.0 * PI,
            nu: 0.02,
            steps: 500,
            dt: DtPolicy::default(),
            initial: InitialCondition::default(),
            blowup_factor: 10.0,
            energy_tolerance: 1e-3,
            regularization: 1e-8,
        }
    }
}

/// One row of the energy budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub t: f64,
    pub energy: f64,
    pub phi_visc: f64,
    pub phi_sgs: f64,
    pub max_u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowUp { step: usize, energy: f64, initial_energy: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub rows: Vec<BudgetRow>,
    /// Steps where `E` grew by more than the tolerance.
    pub growth_steps: Vec<usize>,
    pub energy_tolerance: f64,
}

impl EnergyBudget {
    pub fn max_relative_growth(&self) -> f64 {
        self.rows.windows(2).map(|w| (w[1].energy - w[0].energy) / w[0].energy).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_phi_sgs(&self) -> f64 {
        self.rows.iter().map(|r| r.phi_sgs).fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,E,phi_visc,phi_sgs,max_u")?;
        for r in &self.rows {
            writeln!(w, "{:?},{:?},{:?},{:?},{:?}", r.t, r.energy, r.phi_visc, r.phi_sgs, r.max_u)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub budget: EnergyBudget,
    pub state: FlowState,
    pub status: RunStatus,
    pub steps_taken: usize,
    pub max_divergence: f64,
}

impl RunOutput {
    /// Completed with no flagged energy growth.
    pub fn energy_bounded(&self) -> bool {
        self.status == RunStatus::Completed && self.budget.growth_steps.is_empty()
    }
}

pub fn initial_state(params: &SimParams) -> Result<FlowState, LesError> {
    let grid = Grid::new(params.n, params.length)?;
    if !(params.nu >= 0.0) || !params.nu.is_finite() {
        return Err(LesError::Params(format!("viscosity must be non-negative, got {}", params.nu)));
    }
    Ok(match params.initial {
        InitialCondition::Zero => FlowState::zeros(grid, params.nu),
        InitialCondition::TaylorGreen { amplitude } => FlowState::taylor_green(grid, params.nu, amplitude),
    })
}

/// Runs the configured simulation. The model's singularity policy is replaced
/// by regularization with `ε = regularization · U/L`, `U` the initial
/// maximum speed (1 if the flow starts at rest).
pub fn run(params: &SimParams, model: &ClosureModel) -> Result<RunOutput, LesError> {
    let mut state = initial_state(params)?;
    let projector = Projector::new(state.grid);
    projector.project(&mut state.u);
    let u_ref = if state.max_speed() > 0.0 { state.max_speed() } else { 1.0 };
    let eps = params.regularization * u_ref / params.length;
    let model = model.clone().with_policy(SingularityPolicy::Regularize { epsilon: eps });

    let e0 = state.energy();
    let mut rows = Vec::with_capacity(params.steps + 1);
    let mut growth = Vec::new();
    let mut status = RunStatus::Completed;
    let mut max_div = state.max_divergence();
    let mut steps_taken = 0;
    let mut current = rhs(&state, &model, 0)?;
    for n in 0..params.steps {
        let e = state.energy();
        let max_u = state.max_speed();
        let diss = current.1;
        rows.push(BudgetRow { t: state.t, energy: e, phi_visc: diss.viscous, phi_sgs: diss.subgrid, max_u });
        let dt = params.dt.dt(&state.grid, state.nu, max_u, &diss);
        step_from(&mut state, &model, &projector, dt, n, current)?;
        steps_taken += 1;
        max_div = max_div.max(state.max_divergence());
        let e_new = state.energy();
        if e > 0.0 && (e_new - e) / e > params.energy_tolerance {
            growth.push(n);
        }
        current = rhs(&state, &model, n + 1)?;
        if e_new > params.blowup_factor * e0 && e0 > 0.0 {
            status = RunStatus::BlowUp { step: n, energy: e_new, initial_energy: e0 };
            break;
        }
    }
    let diss = current.1;
    rows.push(BudgetRow {
        t: state.t,
        energy: state.energy(),
        phi_visc: diss.viscous,
        phi_sgs: diss.subgrid,
        max_u: state.max_speed(),
    });
    let mut f = current.0;
    state.p = projector.project(&mut f);
    Ok(RunOutput {
        budget: EnergyBudget { rows, growth_steps: growth, energy_tolerance: params.energy_tolerance },
        state,
        status,
        steps_taken,
        max_divergence: max_div,
    })
}

const DUMP_MAGIC: &[u8; 8] = b"SGSFLD01";
const DUMP_COMPONENTS: [&str; 4] = ["u_x", "u_y", "u_z", "p"];

/// Writes the final fields as little-endian `f64`.
///
/// Layout: magic `SGSFLD01`; `n` as `u64`; `L`, `t`, `ν` as `f64`; component
/// count as `u64`; one 8-byte NUL-padded name per component (`u_x u_y u_z p`);
/// then each component as `n³` values, index `(i n + j) n + k` with `i` along
/// `x`.
pub fn write_field_dump<W: Write>(mut w: W, state: &FlowState) -> io::Result<()> {
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&(state.grid.n as u64).to_le_bytes())?;
    for v in [state.grid.length, state.t, state.nu] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(DUMP_COMPONENTS.len() as u64).to_le_bytes())?;
    for name in DUMP_COMPONENTS {
        let mut b = [0u8; 8];
        b[..name.len()].copy_from_slice(name.as_bytes());
        w.write_all(&b)?;
    }
    for comp in state.u.iter().chain(std::iter::once(&state.p)) {
        for v in comp {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a dump written by [`write_field_dump`].
pub fn read_field_dump<R: Read>(mut r: R) -> Result<FlowState, LesError> {
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    if &b8 != DUMP_MAGIC {
        return Err(LesError::Dump("bad magic".into()));
    }
    let mut u64_ = |r: &mut R| -> io::Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let n = u64_(&mut r)? as usize;
    let length = f64::from_bits(u64_(&mut r)?);
    let t = f64::from_bits(u64_(&mut r)?);
    let nu = f64::from_bits(u64_(&mut r)?);
    let ncomp = u64_(&mut r)? as usize;
    if ncomp != DUMP_COMPONENTS.len() {
        return Err(LesError::Dump(format!("expected 4 components, found {ncomp}")));
    }
    for name in DUMP_COMPONENTS {
        r.read_exact(&mut b8)?;
        let stored = std::str::from_utf8(&b8).map_err(|e| LesError::Dump(e.to_string()))?.trim_end_matches('\0');
        if stored != name {
            return Err(LesError::Dump(format!("expected component {name}, found {stored}")));
        }
    }
    let grid = Grid::new(n, length)?;
    let mut state = FlowState::zeros(grid, nu);
    state.t = t;
    for comp in state.u.iter_mut().chain(std::iter::once(&mut state.p)) {
        for v in comp.iter_mut() {
            r.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfunc::PolynomialG;

    fn tg(n: usize, nu: f64) -> (FlowState, Projector) {
        let grid = Grid::new(n, 2.0 * PI).unwrap();
        let mut s = FlowState::taylor_green(grid, nu, 1.0);
        let p = Projector::new(grid);
        p.project(&mut s.u);
        (s, p)
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(7, 1.0).is_err());
        assert!(Grid::new(6, 1.0).is_err());
        assert!(Grid::new(8, 0.0).is_err());
        assert!(Grid::new(66, 1.0).is_err());
        assert!(Grid::new(64, 1.0).is_ok());
        assert_eq!(Grid::new(8, 2.0).unwrap().h, 0.25);
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let grid = Grid::new(8, 1.0).unwrap();
        let mut s = FlowState::zeros(grid, 0.1);
        let p = Projector::new(grid);
        let m = ClosureModel::polynomial_potential(PolynomialG::constant(0.01))
            .with_policy(SingularityPolicy::Regularize { epsilon: 1e-8 });
        for n in 0..3 {
            step(&mut s, &m, &p, 0.01, n).unwrap();
        }
        assert!(s.u.iter().all(|c| c.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn projection_removes_divergence() {
        let grid = Grid::new(16, 2.0 * PI).unwrap();
        let mut s = FlowState::from_fn(grid, 0.0, |x| [x[1].sin() + x[0].cos(), (x[2] + x[0]).cos(), x[1].sin() * x[2].cos()]);
        assert!(s.max_divergence() > 0.1);
        let p = Projector::new(grid);
        p.project(&mut s.u);
        assert!(s.max_divergence() <= 1e-10 * s.max_speed() / grid.length);
        // idempotent
        let before = s.u.clone();
        p.project(&mut s.u);
        for c in 0..3 {
            for (a, b) in before[c].iter().zip(&s.u[c]) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn taylor_green_decay_rate() {
        let nu = 0.05;
        let (mut s, p) = tg(16, nu);
        let m = ClosureModel::zero();
        let e0 = s.energy();
        let dt = 0.005;
        for n in 0..20 {
            step(&mut s, &m, &p, dt, n).unwrap();
        }
        let rate = -(s.energy() / e0).ln() / s.t;
        // single mode k² = 3 seen through the central-difference symbol
        let h = s.grid.h;
        let expect = 2.0 * nu * 3.0 * (h.sin() / h).powi(2);
        assert!((rate - expect).abs() < 0.02 * expect, "rate {rate} expected {expect}");
    }

    #[test]
    fn energy_identity_converges() {
        let nu = 0.05;
        let m = ClosureModel::polynomial_potential(PolynomialG { c0: 0.3 * nu, c1: 0.5 * nu, ..Default::default() })
            .with_policy(SingularityPolicy::Regularize { epsilon: 1e-8 });
        let mismatch = |dt: f64, steps: usize| {
            let (mut s, p) = tg(8, nu);
            let mut worst = 0.0_f64;
            let mut phi0 = rhs(&s, &m, 0).unwrap().1.total();
            for n in 0..steps {
                let e0 = s.energy();
                step(&mut s, &m, &p, dt, n).unwrap();
                let phi1 = rhs(&s, &m, n).unwrap().1.total();
                let predicted = -0.5 * dt * (phi0 + phi1);
                worst = worst.max(((s.energy() - e0) - predicted).abs());
                phi0 = phi1;
            }
            worst
        };
        let coarse = mismatch(0.04, 10);
        let fine = mismatch(0.02, 20);
        assert!(coarse / fine > 3.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn dump_round_trip() {
        let (s, _) = tg(8, 0.1);
        let mut buf = Vec::new();
        write_field_dump(&mut buf, &s).unwrap();
        assert_eq!(buf.len(), 8 * 6 + 32 + 4 * 8 * 512);
        let back = read_field_dump(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        buf[0] = b'X';
        assert!(read_field_dump(buf.as_slice()).is_err());
    }

    #[test]
    fn bound_violating_g_has_negative_subgrid_dissipation() {
        let params = SimParams { n: 8, steps: 20, ..Default::default() };
        let bad = ClosureModel::polynomial_potential(PolynomialG::constant(2.0 * params.nu));
        let out = run(&params, &bad).unwrap();
        assert!(out.budget.rows.iter().all(|r| r.phi_sgs < 0.0));
        assert!(out.budget.rows.iter().all(|r| (r.phi_sgs + 2.0 * r.phi_visc).abs() <= 1e-9 * r.phi_visc));
    }

    #[test]
    fn nonpositive_g_dissipates_at_least_viscous() {
        let params = SimParams { n: 8, steps: 40, ..Default::default() };
        let nu = params.nu;
        let model = ClosureModel::polynomial_potential(PolynomialG { c0: -0.5 * nu, c1: 0.2 * nu, ..Default::default() });
        let with = run(&params, &model).unwrap();
        let without = run(&SimParams { dt: DtPolicy::Fixed { dt: 0.05 }, ..params.clone() }, &ClosureModel::zero()).unwrap();
        let with_fixed = run(&SimParams { dt: DtPolicy::Fixed { dt: 0.05 }, ..params }, &model).unwrap();
        assert!(with.budget.rows.iter().all(|r| r.phi_sgs >= 0.0));
        for (a, b) in with_fixed.budget.rows.iter().zip(&without.budget.rows) {
            assert!(a.energy <= b.energy * (1.0 + 1e-12));
        }
    }

    #[test]
    fn nan_is_reported_with_step() {
        let (mut s, p) = tg(8, 0.1);
        s.u[0][5] = f64::NAN;
        let err = step(&mut s, &ClosureModel::zero(), &p, 0.01, 7).unwrap_err();
        assert!(matches!(err, LesError::NonFinite { step: 7, .. }), "{err}");
    }
}

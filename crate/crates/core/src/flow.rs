//! Explicit RK4 integration of the regularised spinorial heat flow
//!
//! ```text
//! ∂t ψ = -D²_{g(ψ)} ψ - ε Δ₀ ψ + [gauge] ∇⁰_W ψ,   W = ∇⁰ log ρ
//! ```
//!
//! with a CFL rule driven by the diffusion coefficient `ρ⁻²`.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clifford::EvenSpinor;
use crate::diagnostics::{
    rho_residual, energy_identity_gap, nodal_stats, weighted_norms,
    weighted_square_integral, DiagnosticsRow, DEFAULT_ALPHA,
};
use crate::dirac::{clamp_rho, conformal_factor, dirac_conformal_with, CovarianceForm, DEFAULT_RHO_FLOOR};
use crate::error::FlowError;
use crate::grid::{gradient_flat, laplacian_flat, Field, FieldValue, Grid, ScalarField, SpinorField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    Cfl { safety: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Constant,
    GaussianBump,
    NodalRing,
    RandomSmooth,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Constant => "constant",
            Preset::GaussianBump => "gaussian_bump",
            Preset::NodalRing => "nodal_ring",
            Preset::RandomSmooth => "random_smooth",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = FlowError;

    fn from_str(s: &str) -> Result<Preset, FlowError> {
        match s {
            "constant" => Ok(Preset::Constant),
            "gaussian_bump" => Ok(Preset::GaussianBump),
            "nodal_ring" => Ok(Preset::NodalRing),
            "random_smooth" => Ok(Preset::RandomSmooth),
            other => Err(FlowError::UnknownPreset(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitSpec {
    pub preset: Preset,
    /// Ring radius for `nodal_ring`.
    pub r0: f64,
    /// Overall amplitude (the constant value for `constant`).
    pub amp: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec {
            preset: Preset::GaussianBump,
            r0: 1.0,
            amp: 1.0,
        }
    }
}

/// Which metric the operator sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MetricMode {
    /// `g(ψ)` recomputed at every evaluation.
    #[default]
    Dynamic,
    /// Geometry of the initial data, held fixed.
    FrozenInitial,
    /// `ρ ≡ 1`, the linear flat flow.
    FrozenFlat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    pub n: Vec<usize>,
    pub length: Vec<f64>,
    pub t_end: f64,
    pub dt_policy: DtPolicy,
    pub epsilon: f64,
    pub rho_floor: f64,
    pub gauge: bool,
    pub alpha: f64,
    pub init: InitSpec,
    pub seed: u64,
    pub snapshot_every: u64,
    pub outdir: PathBuf,
    pub metric: MetricMode,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            n: vec![16; 3],
            length: vec![2.0; 3],
            t_end: 0.01,
            dt_policy: DtPolicy::Cfl { safety: 0.5 },
            epsilon: 0.0,
            rho_floor: DEFAULT_RHO_FLOOR,
            gauge: false,
            alpha: DEFAULT_ALPHA,
            init: InitSpec::default(),
            seed: 0,
            snapshot_every: 0,
            outdir: PathBuf::from("out"),
            metric: MetricMode::Dynamic,
        }
    }
}

impl FlowConfig {
    pub fn grid(&self) -> Result<Grid, FlowError> {
        Ok(Grid::new(&self.n, &self.length)?)
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        self.grid()?;
        let bad = |m: &str| Err(FlowError::Config(m.to_string()));
        if !(self.t_end > 0.0) {
            return bad("t_end must be > 0");
        }
        match self.dt_policy {
            DtPolicy::Fixed(dt) if !(dt > 0.0) => return bad("dt must be > 0"),
            DtPolicy::Cfl { safety } if !(safety > 0.0 && safety <= 1.0) => {
                return bad("cfl_safety must lie in (0, 1]")
            }
            _ => {}
        }
        if !(self.epsilon >= 0.0) {
            return bad("epsilon must be >= 0");
        }
        if !(self.rho_floor > 0.0 && self.rho_floor < 1.0) {
            return bad("rho_floor must lie in (0, 1)");
        }
        if !(self.alpha >= 0.0) {
            return bad("alpha must be >= 0");
        }
        Ok(())
    }
}

/// Initial spinor field for a preset; positions are measured from the
/// domain centre.
pub fn initial_data(init: &InitSpec, grid: Grid, seed: u64) -> SpinorField {
    let amp = init.amp;
    match init.preset {
        Preset::Constant => SpinorField::constant(grid, EvenSpinor::scalar(amp)),
        Preset::GaussianBump => SpinorField::from_fn(grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            EvenSpinor::scalar(amp * (-r2).exp())
        }),
        Preset::NodalRing => {
            let r0sq = init.r0 * init.r0;
            SpinorField::from_fn(grid, |x| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                EvenSpinor::scalar(amp * (r2 - r0sq) * (-r2).exp())
            })
        }
        Preset::RandomSmooth => random_smooth(grid, seed, amp),
    }
}

/// `amp · (1 + p₀(x), p₁(x), p₂(x), p₃(x))` with each `p_c` a random
/// trigonometric polynomial in the modes 0..=2 per axis, scaled so that
/// `|p_c| ≤ 1/4`. The scalar part therefore stays above `3/4 · amp`.
fn random_smooth(grid: Grid, seed: u64, amp: f64) -> SpinorField {
    let dim = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for m in 0..3usize.pow(dim as u32) {
        let mut wave = [0.0; 3];
        let mut r = m;
        for (axis, w) in wave.iter_mut().enumerate().take(dim) {
            *w = (r % 3) as f64 * 2.0 * std::f64::consts::PI / grid.length(axis);
            r /= 3;
        }
        modes.push(wave);
    }
    let coeffs: Vec<[(f64, f64); 4]> = modes
        .iter()
        .map(|_| std::array::from_fn(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    let mut scale = [0.0f64; 4];
    for c in &coeffs {
        for comp in 0..4 {
            scale[comp] += c[comp].0.abs() + c[comp].1.abs();
        }
    }
    let norm = scale.map(|s| if s > 0.0 { 0.25 / s } else { 0.0 });
    SpinorField::from_fn(grid, |x| {
        let mut out = [0.0; 4];
        for (wave, c) in modes.iter().zip(&coeffs) {
            let phase = wave[0] * x[0] + wave[1] * x[1] + wave[2] * x[2];
            let (s, co) = phase.sin_cos();
            for comp in 0..4 {
                out[comp] += norm[comp] * (c[comp].0 * co + c[comp].1 * s);
            }
        }
        out[0] += 1.0;
        EvenSpinor::from_array(out.map(|v| v * amp))
    })
}

/// Right-hand side evaluator with its metric treatment fixed.
#[derive(Clone, Debug)]
pub struct FlowOperator {
    pub epsilon: f64,
    pub rho_floor: f64,
    pub gauge: bool,
    /// Clamped ρ the operator uses instead of `ρ(ψ)`, if pinned.
    pub pinned_rho: Option<ScalarField>,
}

/// Intermediate fields from one evaluation, reused by the diagnostics.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub rho_c: ScalarField,
    /// `D_g ψ`
    pub first: SpinorField,
    /// `D_g² ψ`
    pub second: SpinorField,
    pub rhs: SpinorField,
}

impl FlowOperator {
    pub fn new(cfg: &FlowConfig, psi0: &SpinorField) -> FlowOperator {
        let pinned_rho = match cfg.metric {
            MetricMode::Dynamic => None,
            MetricMode::FrozenInitial => Some(clamp_rho(&conformal_factor(psi0), cfg.rho_floor)),
            MetricMode::FrozenFlat => Some(ScalarField::constant(*psi0.grid(), 1.0)),
        };
        FlowOperator {
            epsilon: cfg.epsilon,
            rho_floor: cfg.rho_floor,
            gauge: cfg.gauge,
            pinned_rho,
        }
    }

    pub fn rho_c(&self, psi: &SpinorField) -> ScalarField {
        match &self.pinned_rho {
            Some(r) => r.clone(),
            None => clamp_rho(&conformal_factor(psi), self.rho_floor),
        }
    }

    pub fn evaluate(&self, psi: &SpinorField) -> Evaluation {
        let rho_c = self.rho_c(psi);
        let first = dirac_conformal_with(&rho_c, psi, CovarianceForm::A);
        let second = dirac_conformal_with(&rho_c, &first, CovarianceForm::A);
        let mut rhs = second.scale(-1.0);
        if self.epsilon > 0.0 {
            rhs = rhs.axpy(-self.epsilon, &laplacian_flat(psi));
        }
        if self.gauge {
            rhs = rhs.zip_map(&gauge_term(&rho_c, psi), |a, b| a + b);
        }
        Evaluation {
            rho_c,
            first,
            second,
            rhs,
        }
    }

    pub fn rhs(&self, psi: &SpinorField) -> SpinorField {
        self.evaluate(psi).rhs
    }
}

/// `Σ_k W_k ∂_k ψ` with `W = ∇⁰ log ρc`.
pub fn gauge_term(rho_c: &ScalarField, psi: &SpinorField) -> SpinorField {
    let g = *psi.grid();
    let w = gradient_flat(&rho_c.map(f64::ln));
    let (wv, pv) = (w.values(), psi.values());
    let values = g.build(|idx, c| {
        let mut acc = EvenSpinor::ZERO;
        for axis in 0..g.dim() {
            let (p, m) = g.adjacent(idx, c, axis);
            let d = pv[p] - pv[m];
            acc += d * (wv[idx].0[axis] * 0.5 / g.h(axis));
        }
        acc
    });
    Field::from_values(g, values).expect("same grid")
}

/// Flow right-hand side for a configuration (metric from ψ unless pinned).
pub fn rhs(psi: &SpinorField, cfg: &FlowConfig) -> SpinorField {
    FlowOperator::new(cfg, psi).rhs(psi)
}

/// `safety · min h² / (2 · dim · (ρ_min⁻² + ε))` with the clamped ρ.
pub fn cfl_dt_for(rho_c: &ScalarField, grid: &Grid, safety: f64, epsilon: f64) -> f64 {
    let rho_min = rho_c.min();
    let h = grid.min_h();
    safety * h * h / (2.0 * grid.dim() as f64 * (1.0 / (rho_min * rho_min) + epsilon))
}

pub fn cfl_dt(psi: &SpinorField, cfg: &FlowConfig) -> f64 {
    let safety = match cfg.dt_policy {
        DtPolicy::Cfl { safety } => safety,
        DtPolicy::Fixed(_) => 1.0,
    };
    let op = FlowOperator::new(cfg, psi);
    cfl_dt_for(&op.rho_c(psi), psi.grid(), safety, cfg.epsilon)
}

/// Classical RK4 step for any autonomous field equation.
pub fn rk4_step<T, F>(u: &Field<T>, dt: f64, rhs: F) -> Field<T>
where
    T: FieldValue,
    F: Fn(&Field<T>) -> Field<T>,
{
    let k1 = rhs(u);
    rk4_finish(u, dt, k1, rhs)
}

/// RK4 with the first stage already evaluated.
pub fn rk4_finish<T, F>(u: &Field<T>, dt: f64, k1: Field<T>, rhs: F) -> Field<T>
where
    T: FieldValue,
    F: Fn(&Field<T>) -> Field<T>,
{
    let k2 = rhs(&u.axpy(0.5 * dt, &k1));
    let k3 = rhs(&u.axpy(0.5 * dt, &k2));
    let k4 = rhs(&u.axpy(dt, &k3));
    let (v1, v2, v3, v4) = (k1.values(), k2.values(), k3.values(), k4.values());
    let g = *u.grid();
    let uv = u.values();
    let w = dt / 6.0;
    let values = g.build(|idx, _| uv[idx] + (v1[idx] + (v2[idx] + v3[idx]) * 2.0 + v4[idx]) * w);
    Field::from_values(g, values).expect("same grid")
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub step: u64,
    pub psi: SpinorField,
    /// Raw amplitude of `psi`.
    pub rho: ScalarField,
}

impl FlowState {
    pub fn new(psi: SpinorField) -> FlowState {
        FlowState {
            t: 0.0,
            step: 0,
            rho: conformal_factor(&psi),
            psi,
        }
    }
}

/// Time step the policy asks for at this state.
pub fn policy_dt(state: &FlowState, op: &FlowOperator, cfg: &FlowConfig) -> f64 {
    match cfg.dt_policy {
        DtPolicy::Fixed(dt) => dt,
        DtPolicy::Cfl { safety } => cfl_dt_for(&op.rho_c(&state.psi), state.psi.grid(), safety, cfg.epsilon),
    }
}

/// One RK4 step of size `dt`.
pub fn step_with(state: &FlowState, op: &FlowOperator, dt: f64) -> Result<FlowState, FlowError> {
    let psi = rk4_step(&state.psi, dt, |p| op.rhs(p));
    advance(state, psi, dt)
}

fn advance(state: &FlowState, psi: SpinorField, dt: f64) -> Result<FlowState, FlowError> {
    let step = state.step + 1;
    if let Some(node) = psi.first_non_finite() {
        return Err(FlowError::Diverged { step, node });
    }
    Ok(FlowState {
        t: state.t + dt,
        step,
        rho: conformal_factor(&psi),
        psi,
    })
}

/// One step with the configured time-step policy.
pub fn step(state: &FlowState, cfg: &FlowConfig) -> Result<FlowState, FlowError> {
    let op = FlowOperator::new(cfg, &state.psi);
    let dt = policy_dt(state, &op, cfg);
    step_with(state, &op, dt)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Completed,
    Diverged { step: u64, node: usize },
    /// The raw amplitude fell below `rho_floor` at this step.
    FloorDominated { step: u64 },
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Completed => write!(f, "completed"),
            Termination::Diverged { step, .. } => write!(f, "diverged({step})"),
            Termination::FloorDominated { step } => write!(f, "floor-dominated({step})"),
        }
    }
}

/// Receives finalised diagnostics rows and snapshot requests during a run.
pub trait RunObserver {
    fn row(&mut self, row: &DiagnosticsRow) -> Result<(), FlowError>;
    fn snapshot(&mut self, step: u64, psi: &SpinorField) -> Result<(), FlowError>;
}

/// Keeps rows in memory and drops snapshots.
#[derive(Default)]
pub struct Collect {
    pub rows: Vec<DiagnosticsRow>,
}

impl RunObserver for Collect {
    fn row(&mut self, row: &DiagnosticsRow) -> Result<(), FlowError> {
        self.rows.push(row.clone());
        Ok(())
    }

    fn snapshot(&mut self, _: u64, _: &SpinorField) -> Result<(), FlowError> {
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: FlowState,
    pub termination: Termination,
    pub rows: Vec<DiagnosticsRow>,
    /// Largest finite `weighted_rate` seen (NaN when none was measurable).
    pub sup_weighted_rate: f64,
}

/// Samples every monitored quantity at a state.
pub fn sample_row(state: &FlowState, dt: f64, op: &FlowOperator, cfg: &FlowConfig, eval: &Evaluation) -> DiagnosticsRow {
    let dim = state.psi.grid().dim() as i32;
    let volume_weight = match &op.pinned_rho {
        Some(r) => r.map(|x| x.powi(dim)),
        None => state.rho.map(|x| x.powi(dim)),
    };
    let (weighted_l2, weighted_h1) = weighted_norms(&state.psi, cfg.alpha);
    let residual = rho_residual(&state.psi, &eval.rhs, cfg.rho_floor);
    let nodal = nodal_stats(&state.rho, 10.0 * cfg.rho_floor);
    DiagnosticsRow {
        step: state.step,
        t: state.t,
        dt,
        energy: weighted_square_integral(&eval.first, &volume_weight),
        weighted_l2,
        weighted_h1,
        min_rho: state.rho.min(),
        max_rho: state.rho.max(),
        nodal_fraction: nodal.fraction,
        res_a_l2: residual.l2,
        res_a_linf: residual.linf,
        energy_gap: f64::NAN,
        monotonicity_flag: true,
        dissipation: weighted_square_integral(&eval.second, &volume_weight),
        weighted_rate: f64::NAN,
    }
}

/// Fills the centred quantities of `window[1]` from its neighbours.
fn finalize_middle(window: &mut [DiagnosticsRow; 3]) {
    let gap = energy_identity_gap(&window[..]).unwrap_or(f64::NAN);
    let (a, c) = (&window[0], &window[2]);
    let dl2 = (c.weighted_l2 - a.weighted_l2) / (c.t - a.t);
    let b = &mut window[1];
    b.energy_gap = gap;
    b.weighted_rate = if b.weighted_l2 > 0.0 {
        (dl2 + b.weighted_h1) / b.weighted_l2
    } else {
        0.0
    };
}

/// Integrates to `t_end`, streaming each finalised row to `observer`.
///
/// A row is finalised once its successor exists (the centred gap needs it);
/// the last row keeps NaN in the centred columns.
pub fn run(cfg: &FlowConfig, observer: &mut dyn RunObserver) -> Result<RunOutcome, FlowError> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let psi0 = initial_data(&cfg.init, grid, cfg.seed);
    run_from(cfg, psi0, observer)
}

/// As [`run`], from explicit initial data.
pub fn run_from(cfg: &FlowConfig, psi0: SpinorField, observer: &mut dyn RunObserver) -> Result<RunOutcome, FlowError> {
    let op = FlowOperator::new(cfg, &psi0);
    let mut state = FlowState::new(psi0);
    let mut rows: Vec<DiagnosticsRow> = Vec::new();
    let mut sup_rate = f64::NAN;
    let floor_check = op.pinned_rho.is_none();

    let emit = |rows: &mut Vec<DiagnosticsRow>, observer: &mut dyn RunObserver, sup: &mut f64| -> Result<(), FlowError> {
        let n = rows.len();
        if n >= 3 {
            let mut w = [rows[n - 3].clone(), rows[n - 2].clone(), rows[n - 1].clone()];
            finalize_middle(&mut w);
            rows[n - 2] = w[1].clone();
            let prev = rows[n - 3].energy;
            rows[n - 2].monotonicity_flag = rows[n - 2].energy <= prev;
            if rows[n - 2].weighted_rate.is_finite() {
                *sup = if sup.is_nan() { rows[n - 2].weighted_rate } else { sup.max(rows[n - 2].weighted_rate) };
            }
        }
        if n >= 2 {
            observer.row(&rows[n - 2])?;
        }
        Ok(())
    };

    let mut eval = op.evaluate(&state.psi);
    rows.push(sample_row(&state, 0.0, &op, cfg, &eval));
    emit(&mut rows, observer, &mut sup_rate)?;
    if cfg.snapshot_every > 0 {
        observer.snapshot(0, &state.psi)?;
    }

    let mut termination = Termination::Completed;
    if floor_check && state.rho.min() < cfg.rho_floor {
        termination = Termination::FloorDominated { step: 0 };
    }
    let t_tol = 1e-12 * cfg.t_end;
    while termination == Termination::Completed && state.t < cfg.t_end - t_tol {
        let dt = policy_dt(&state, &op, cfg).min(cfg.t_end - state.t);
        let next_psi = rk4_finish(&state.psi, dt, eval.rhs.clone(), |p| op.rhs(p));
        state = match advance(&state, next_psi, dt) {
            Ok(s) => s,
            Err(FlowError::Diverged { step, node }) => {
                termination = Termination::Diverged { step, node };
                break;
            }
            Err(e) => return Err(e),
        };
        eval = op.evaluate(&state.psi);
        rows.push(sample_row(&state, dt, &op, cfg, &eval));
        emit(&mut rows, observer, &mut sup_rate)?;
        if cfg.snapshot_every > 0 && state.step % cfg.snapshot_every == 0 {
            observer.snapshot(state.step, &state.psi)?;
        }
        if floor_check && state.rho.min() < cfg.rho_floor {
            termination = Termination::FloorDominated { step: state.step };
        }
    }
    if let Some(last) = rows.last() {
        observer.row(last)?;
    }
    Ok(RunOutcome {
        state,
        termination,
        rows,
        sup_weighted_rate: sup_rate,
    })
}

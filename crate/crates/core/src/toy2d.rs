//! Scalar toy model: a Gaussian under the plain heat equation on `[-L, L]²`,
//! compared against its heat-kernel solution. With the conformal reading
//! `g = u² g₀` in two dimensions the metric determinant is `u⁴`.

use crate::error::FlowError;
use crate::flow::{rk4_step, DtPolicy};
use crate::grid::{integrate, laplacian_flat, norms, Field, FieldValue, Grid, ScalarField};

/// Smallest admissible half-width.
pub const MIN_HALF_WIDTH: f64 = 6.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ToyConfig {
    pub n: usize,
    /// Half-width: the domain is `[-L, L]²`.
    pub half_width: f64,
    pub t_end: f64,
    pub dt_policy: DtPolicy,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            n: 128,
            half_width: MIN_HALF_WIDTH,
            t_end: 0.5,
            dt_policy: DtPolicy::Cfl { safety: 0.5 },
        }
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::Config(m.to_string()));
        if !(self.half_width >= MIN_HALF_WIDTH) {
            return bad("L must be >= 6");
        }
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
        self.grid()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, FlowError> {
        Ok(Grid::uniform(2, self.n, 2.0 * self.half_width)?)
    }

    /// Requested step: fixed, or `safety · h² / 4` (diffusion coefficient 1).
    pub fn dt(&self, grid: &Grid) -> f64 {
        match self.dt_policy {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl { safety } => {
                let h = grid.min_h();
                safety * h * h / (2.0 * grid.dim() as f64)
            }
        }
    }
}

/// `(4t+1)⁻¹ exp(-(x²+y²)/(4t+1))`
pub fn exact_u(x: f64, y: f64, t: f64) -> f64 {
    let s = 4.0 * t + 1.0;
    (-(x * x + y * y) / s).exp() / s
}

pub fn exact_field(grid: Grid, t: f64) -> ScalarField {
    ScalarField::from_fn(grid, |p| exact_u(p[0], p[1], t))
}

/// `(min u⁴, max u⁴)`
pub fn detg_monitor(u: &ScalarField) -> (f64, f64) {
    u.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        let d = v.powi(4);
        (lo.min(d), hi.max(d))
    })
}

/// Heat flow right-hand side, shared by scalar and spinor fields.
pub fn heat_rhs<T: FieldValue>(u: &Field<T>) -> Field<T> {
    laplacian_flat(u).scale(-1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyRow {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    pub linf_err: f64,
    pub l2_err: f64,
    pub mass: f64,
    pub detg_min: f64,
    pub detg_max: f64,
}

#[derive(Clone, Debug)]
pub struct ToyOutcome {
    pub u: ScalarField,
    pub t: f64,
    pub rows: Vec<ToyRow>,
}

fn toy_row(step: u64, t: f64, dt: f64, u: &ScalarField) -> ToyRow {
    let err = u.zip_map(&exact_field(*u.grid(), t), |a, b| a - b);
    let (l2_err, linf_err) = norms(&err, None).expect("unweighted");
    let (detg_min, detg_max) = detg_monitor(u);
    ToyRow {
        step,
        t,
        dt,
        linf_err,
        l2_err,
        mass: integrate(u),
        detg_min,
        detg_max,
    }
}

/// Integrates from `u₀ = exp(-r²)` to `t_end`, one row per step (the last
/// step is shortened to land on `t_end`).
pub fn toy_run(cfg: &ToyConfig) -> Result<ToyOutcome, FlowError> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let dt_nominal = cfg.dt(&grid);
    let mut u = exact_field(grid, 0.0);
    let mut t = 0.0;
    let mut step = 0u64;
    let mut rows = vec![toy_row(0, 0.0, 0.0, &u)];
    let t_tol = 1e-12 * cfg.t_end;
    while t < cfg.t_end - t_tol {
        let dt = dt_nominal.min(cfg.t_end - t);
        u = rk4_step(&u, dt, heat_rhs);
        step += 1;
        t = if cfg.t_end - (t + dt) <= t_tol { cfg.t_end } else { t + dt };
        if let Some(node) = u.first_non_finite() {
            return Err(FlowError::Diverged { step, node });
        }
        rows.push(toy_row(step, t, dt, &u));
    }
    Ok(ToyOutcome { u, t, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::EvenSpinor;

    fn cfg(n: usize, t_end: f64) -> ToyConfig {
        ToyConfig {
            n,
            t_end,
            ..ToyConfig::default()
        }
    }

    #[test]
    fn exact_solution_values() {
        assert_eq!(exact_u(0.0, 0.0, 0.0), 1.0);
        assert!((exact_u(0.0, 0.0, 0.5) - 1.0 / 3.0).abs() < 1e-15);
        assert!((exact_u(1.0, 1.0, 0.0) - 0.135335283236613).abs() < 1e-12);
    }

    #[test]
    fn detg_examples() {
        let g = Grid::uniform(2, 16, 12.0).unwrap();
        assert_eq!(detg_monitor(&ScalarField::constant(g, 1.0)), (1.0, 1.0));
        let g = Grid::uniform(2, 128, 12.0).unwrap();
        let u = exact_field(g, 0.5);
        let centre = u.values()[g.index([64, 64, 0])];
        assert!((centre.powi(4) - 1.0 / 81.0).abs() < 1e-15);
        // corner node (-6, -6): exp(-72/3) / 3, to the fourth
        let corner = exact_u(-6.0, -6.0, 0.5).powi(4);
        assert_eq!(detg_monitor(&u).0, corner);
        assert!((corner - (-96.0f64).exp() / 81.0).abs() < 1e-50);
    }

    #[test]
    fn config_constraints() {
        assert!(ToyConfig { half_width: 5.0, ..ToyConfig::default() }.validate().is_err());
        assert!(ToyConfig { t_end: 0.0, ..ToyConfig::default() }.validate().is_err());
        assert!(ToyConfig { n: 4, ..ToyConfig::default() }.validate().is_err());
        assert!(ToyConfig::default().validate().is_ok());
    }

    #[test]
    fn initial_error_is_zero_and_mass_is_pi() {
        let out = toy_run(&cfg(128, 0.05)).unwrap();
        assert_eq!(out.rows[0].linf_err, 0.0);
        assert_eq!(out.rows[0].l2_err, 0.0);
        for r in &out.rows {
            assert!((r.mass - std::f64::consts::PI).abs() < 1e-6);
        }
        assert_eq!(out.rows.last().unwrap().t, 0.05);
    }

    #[test]
    fn positive_and_bounded() {
        let out = toy_run(&cfg(64, 0.5)).unwrap();
        assert!(out.u.min() > 0.0 && out.u.max() <= 1.0);
        let mut centre = f64::INFINITY;
        for r in &out.rows {
            let d = exact_u(0.0, 0.0, r.t).powi(4);
            assert!(d <= centre);
            centre = d;
        }
    }

    #[test]
    fn second_order_in_space() {
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| toy_run(&cfg(n, 0.5)).unwrap().rows.last().unwrap().linf_err)
            .collect();
        for w in errs.windows(2) {
            let r = w[0] / w[1];
            assert!((3.5..=4.6).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn fourth_order_in_time() {
        let run = |dt: f64| {
            toy_run(&ToyConfig {
                n: 32,
                t_end: 0.48,
                dt_policy: DtPolicy::Fixed(dt),
                ..ToyConfig::default()
            })
            .unwrap()
            .u
        };
        let reference = run(0.04 / 64.0);
        let errs: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&dt| run(dt).axpy(-1.0, &reference).max_norm())
            .collect();
        for w in errs.windows(2) {
            let r = w[0] / w[1];
            assert!((13.0..=19.0).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn spinor_embedding_matches_scalar() {
        let g = Grid::uniform(2, 32, 12.0).unwrap();
        let u = exact_field(g, 0.0);
        let psi = u.map(EvenSpinor::scalar);
        let (mut a, mut b) = (u, psi);
        for _ in 0..5 {
            a = rk4_step(&a, 0.01, heat_rhs);
            b = rk4_step(&b, 0.01, heat_rhs);
        }
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| *x == y.s && y.b12 == 0.0));
    }
}

//! Monitored quantities along a flow: Dirichlet energy, ρ^α-weighted norms,
//! the energy-identity gap, the conformal-factor evolution residual and
//! nodal-set statistics.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::dirac::{conformal_laplacian_scalar, scalar_curvature, ConformalGeometry};
use crate::error::DiagnosticsError;
use crate::grid::{diff_central, pairwise_sum, Field, Grid, ScalarField, SpinorField};

/// Default exponent for the ρ^α weights.
pub const DEFAULT_ALPHA: f64 = 2.0;

/// One time sample of everything monitored during a run.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    /// `∫ |D_g ψ|² ρ^dim dV₀`
    pub energy: f64,
    /// `∫ ρ^α |ψ|² dV₀`
    pub weighted_l2: f64,
    /// `∫ ρ^α |∇⁰ψ|² dV₀`
    pub weighted_h1: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub nodal_fraction: f64,
    pub res_a_l2: f64,
    pub res_a_linf: f64,
    /// Centred `dE/dt + 2 ∫|D²ψ|² ρ^dim dV₀`; NaN until both neighbours exist.
    pub energy_gap: f64,
    /// Energy did not increase relative to the previous row.
    pub monotonicity_flag: bool,
    /// `∫ |D² ψ|² ρ^dim dV₀`
    pub dissipation: f64,
    /// `(d/dt weighted_l2 + weighted_h1) / weighted_l2`, centred; NaN at the ends.
    pub weighted_rate: f64,
}

/// Pointwise `|D_g ψ|²` weighted by `ρ^dim`, integrated.
pub fn weighted_square_integral(f: &SpinorField, weight: &ScalarField) -> f64 {
    let density: Vec<f64> = f
        .values()
        .par_iter()
        .zip(weight.values().par_iter())
        .map(|(v, &w)| w * v.norm_sq())
        .collect();
    pairwise_sum(&density) * f.grid().cell_volume()
}

/// Spinorial Dirichlet energy, operator with clamped ρ, volume with raw ρ.
pub fn energy(psi: &SpinorField, rho_floor: f64) -> f64 {
    let geo = ConformalGeometry::from_spinor(psi, rho_floor);
    let d = crate::dirac::dirac_conformal_with(&geo.rho_clamped, psi, crate::dirac::CovarianceForm::A);
    weighted_square_integral(&d, &geo.volume_weight)
}

/// `(∫ ρ^α |ψ|² dV₀, ∫ ρ^α |∇⁰ψ|² dV₀)` with the raw amplitude.
pub fn weighted_norms(psi: &SpinorField, alpha: f64) -> (f64, f64) {
    let g = *psi.grid();
    let weight = psi.map(|p| {
        if alpha == 0.0 {
            1.0
        } else {
            p.norm_sq().sqrt().powf(alpha)
        }
    });
    let l2 = weighted_square_integral(psi, &weight);
    let mut grad_sq = ScalarField::zeros(g);
    for axis in 0..g.dim() {
        let d = diff_central(psi, axis);
        grad_sq = grad_sq.zip_map(&d, |acc, v| acc + v.norm_sq());
    }
    let density = grad_sq.zip_map(&weight, |a, w| a * w);
    let h1 = pairwise_sum(density.values()) * g.cell_volume();
    (l2, h1)
}

/// Centred energy-identity gap over three consecutive rows.
pub fn energy_identity_gap(window: &[DiagnosticsRow]) -> Result<f64, DiagnosticsError> {
    if window.len() < 3 {
        return Err(DiagnosticsError::InsufficientWindow(window.len()));
    }
    let (a, b, c) = (&window[0], &window[1], &window[2]);
    Ok((c.energy - a.energy) / (c.t - a.t) + 2.0 * b.dissipation)
}

/// Norms of the conformal-factor evolution residual.
#[derive(Clone, Debug)]
pub struct Residual {
    pub field: ScalarField,
    /// Nodes where the raw ρ exceeds `10 · rho_floor`.
    pub mask: Vec<bool>,
    pub l2: f64,
    pub linf: f64,
}

/// Bracketed right-hand side `Δ_g(ρ²) + 2 ρ⁻² |∇⁰ψ|² - ½ R_g ρ²`.
pub fn rho_evolution_bracket(psi: &SpinorField, rho_floor: f64) -> ScalarField {
    let g = *psi.grid();
    let geo = ConformalGeometry::from_spinor(psi, rho_floor);
    let rho_sq = psi.map(|p| p.norm_sq());
    let lap = conformal_laplacian_scalar(&geo.rho_clamped, &rho_sq);
    let curvature = scalar_curvature(&geo.rho_clamped);
    let mut grad_sq = ScalarField::zeros(g);
    for axis in 0..g.dim() {
        let d = diff_central(psi, axis);
        grad_sq = grad_sq.zip_map(&d, |acc, v| acc + v.norm_sq());
    }
    let (lv, rv, cv, gv, sv) = (
        lap.values(),
        geo.rho_clamped.values(),
        curvature.values(),
        grad_sq.values(),
        rho_sq.values(),
    );
    let values = g.build(|idx, _| {
        let r = rv[idx];
        lv[idx] + 2.0 * gv[idx] / (r * r) - 0.5 * cv[idx] * sv[idx]
    });
    Field::from_values(g, values).expect("same grid")
}

/// `r = 2 <∂tψ, ψ> - [Δ_g(ρ²) + 2 ρ⁻² |∇⁰ψ|² - ½ R_g ρ²]`, normed on the
/// region where the raw ρ exceeds `10 · rho_floor`.
pub fn rho_residual(psi: &SpinorField, rhs_value: &SpinorField, rho_floor: f64) -> Residual {
    let g = *psi.grid();
    let bracket = rho_evolution_bracket(psi, rho_floor);
    let dt_rho_sq = rhs_value.zip_map(psi, |d, p| 2.0 * d.dot(p));
    let field = dt_rho_sq.zip_map(&bracket, |a, b| a - b);
    let threshold = 10.0 * rho_floor;
    let mask: Vec<bool> = psi.values().iter().map(|p| p.norm_sq().sqrt() > threshold).collect();
    let masked: Vec<f64> = field
        .values()
        .iter()
        .zip(&mask)
        .map(|(&r, &m)| if m { r * r } else { 0.0 })
        .collect();
    let l2 = (pairwise_sum(&masked) * g.cell_volume()).sqrt();
    let linf = field
        .values()
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .fold(0.0f64, |acc, (&r, _)| acc.max(r.abs()));
    Residual { field, mask, l2, linf }
}

/// `∂t g_ij / g_ij` computed from `∂t(ρ²)/ρ²` and from the bracket.
pub fn metric_evolution_factors(
    psi: &SpinorField,
    rhs_value: &SpinorField,
    rho_floor: f64,
) -> (ScalarField, ScalarField) {
    let rho_sq = psi.map(|p| p.norm_sq().max(rho_floor * rho_floor));
    let from_time = rhs_value
        .zip_map(psi, |d, p| 2.0 * d.dot(p))
        .zip_map(&rho_sq, |a, r2| a / r2);
    let from_bracket = rho_evolution_bracket(psi, rho_floor).zip_map(&rho_sq, |b, r2| b / r2);
    (from_time, from_bracket)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodalStats {
    pub mask: Vec<bool>,
    pub fraction: f64,
    pub components: usize,
}

/// Nodes with raw `ρ < threshold`, grouped into face-connected components on
/// the periodic grid.
pub fn nodal_stats(rho: &ScalarField, threshold: f64) -> NodalStats {
    let g = *rho.grid();
    let mask: Vec<bool> = rho.values().iter().map(|&r| r < threshold).collect();
    let count = mask.iter().filter(|&&m| m).count();
    NodalStats {
        components: count_components(&g, &mask),
        fraction: count as f64 / g.len() as f64,
        mask,
    }
}

fn count_components(g: &Grid, mask: &[bool]) -> usize {
    let mut seen = vec![false; mask.len()];
    let mut queue = VecDeque::new();
    let mut components = 0;
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            let c = g.coords(idx);
            for axis in 0..g.dim() {
                for off in [-1, 1] {
                    let nb = g.neighbor(c, axis, off);
                    if mask[nb] && !seen[nb] {
                        seen[nb] = true;
                        queue.push_back(nb);
                    }
                }
            }
        }
    }
    components
}

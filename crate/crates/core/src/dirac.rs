//! Flat and conformal Dirac operators on periodic spinor fields, plus the
//! conformal geometry (`g = ρ² g₀`) induced by a spinor field.
//!
//! Every division by ρ goes through the clamped amplitude `max(ρ, rho_floor)`;
//! the raw amplitude is kept alongside for diagnostics.

use crate::clifford::{amplitude, axis_action, clifford_action, polar_decompose, EvenSpinor, Vector};
use crate::error::DiracError;
use crate::grid::{gradient_flat, laplacian_flat, norms, Field, ScalarField, SpinorField, VectorField};

/// Default lower clamp for ρ.
pub const DEFAULT_RHO_FLOOR: f64 = 1e-6;

/// Which algebraic route [`dirac_conformal`] takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovarianceForm {
    /// `ρ⁻² D₀(ρ φ)`
    A,
    /// `ρ⁻¹ D₀φ + ρ⁻² c(∇ρ) φ`
    B,
}

/// Geometry induced by a spinor field through `g = ρ² g₀`.
#[derive(Clone, Debug)]
pub struct ConformalGeometry {
    /// Raw amplitude of ψ.
    pub rho: ScalarField,
    /// `max(ρ, rho_floor)`.
    pub rho_clamped: ScalarField,
    pub log_rho: ScalarField,
    pub grad_rho: VectorField,
    pub scalar_curvature: ScalarField,
    /// `ρ^dim` from the raw amplitude.
    pub volume_weight: ScalarField,
    pub rho_floor: f64,
}

impl ConformalGeometry {
    pub fn from_spinor(psi: &SpinorField, rho_floor: f64) -> ConformalGeometry {
        ConformalGeometry::from_rho(conformal_factor(psi), rho_floor)
    }

    pub fn from_rho(rho: ScalarField, rho_floor: f64) -> ConformalGeometry {
        let dim = rho.grid().dim() as i32;
        let rho_clamped = clamp_rho(&rho, rho_floor);
        let log_rho = rho_clamped.map(f64::ln);
        let grad_rho = gradient_flat(&rho_clamped);
        let scalar_curvature = scalar_curvature(&rho_clamped);
        let volume_weight = rho.map(|r| r.powi(dim));
        ConformalGeometry {
            rho,
            rho_clamped,
            log_rho,
            grad_rho,
            scalar_curvature,
            volume_weight,
            rho_floor,
        }
    }

    /// Flat geometry, `ρ ≡ 1`.
    pub fn flat(grid: crate::grid::Grid, rho_floor: f64) -> ConformalGeometry {
        ConformalGeometry::from_rho(ScalarField::constant(grid, 1.0), rho_floor)
    }
}

pub fn clamp_rho(rho: &ScalarField, rho_floor: f64) -> ScalarField {
    rho.map(|r| r.max(rho_floor))
}

/// Pointwise amplitude of ψ.
pub fn conformal_factor(psi: &SpinorField) -> ScalarField {
    psi.map(amplitude)
}

/// Induced frame vector `e_k = ρ R E_k R̃`, so `<e_i, e_j> = ρ² δ_ij`.
pub fn frame(psi: &SpinorField, k: usize) -> Result<VectorField, DiracError> {
    let axis = Vector::axis(k);
    let values = psi
        .values()
        .iter()
        .enumerate()
        .map(|(node, &p)| {
            let (rho, r) = polar_decompose(p).map_err(|_| DiracError::FrameUndefined { node })?;
            Ok(r.rotate(axis).scale(rho))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Field::from_values(*psi.grid(), values).expect("same grid"))
}

/// `D₀φ = Σ_k c(E_k) ∂_k φ` with central differences.
pub fn dirac_flat(phi: &SpinorField) -> SpinorField {
    let g = *phi.grid();
    let v = phi.values();
    let values = g.build(|idx, c| {
        let mut acc = EvenSpinor::ZERO;
        for axis in 0..g.dim() {
            let (p, m) = g.adjacent(idx, c, axis);
            let d = v[p] - v[m];
            acc += axis_action(axis, 0.5 / g.h(axis), d);
        }
        acc
    });
    Field::from_values(g, values).expect("same grid")
}

/// Conformal Dirac operator for the metric `ρc² g₀`, given the clamped ρ.
pub fn dirac_conformal_with(rho_c: &ScalarField, phi: &SpinorField, form: CovarianceForm) -> SpinorField {
    match form {
        CovarianceForm::A => {
            let weighted = phi.zip_map(rho_c, |p, r| p * r);
            dirac_flat(&weighted).zip_map(rho_c, |d, r| d * (1.0 / (r * r)))
        }
        CovarianceForm::B => {
            let grad = gradient_flat(rho_c);
            let d0 = dirac_flat(phi);
            let g = *phi.grid();
            let (dv, pv, gv, rv) = (d0.values(), phi.values(), grad.values(), rho_c.values());
            let values = g.build(|idx, _| {
                let inv = 1.0 / rv[idx];
                dv[idx] * inv + clifford_action(gv[idx], pv[idx]) * (inv * inv)
            });
            Field::from_values(g, values).expect("same grid")
        }
    }
}

/// `D_{g(ψ_metric)} φ` with `ρc = max(ρ(ψ_metric), rho_floor)`.
pub fn dirac_conformal(
    psi_metric: &SpinorField,
    phi: &SpinorField,
    form: CovarianceForm,
    rho_floor: f64,
) -> SpinorField {
    let rho_c = clamp_rho(&conformal_factor(psi_metric), rho_floor);
    dirac_conformal_with(&rho_c, phi, form)
}

/// `D_g(D_g ψ)` with the metric frozen at the clamped ρ passed in.
pub fn dirac_squared_with(rho_c: &ScalarField, psi: &SpinorField) -> SpinorField {
    let once = dirac_conformal_with(rho_c, psi, CovarianceForm::A);
    dirac_conformal_with(rho_c, &once, CovarianceForm::A)
}

/// `D²_{g(ψ)} ψ`, the metric taken from ψ itself at call time.
pub fn dirac_squared(psi: &SpinorField, rho_floor: f64) -> SpinorField {
    let rho_c = clamp_rho(&conformal_factor(psi), rho_floor);
    dirac_squared_with(&rho_c, psi)
}

/// Scalar curvature of `ρ² g₀` over a flat torus (ρ already clamped).
///
/// 3-d: `R = ρ⁻² (4 Δ₀ log ρ - 2 |∇ log ρ|²)`; 2-d: `R = 2 ρ⁻² Δ₀ log ρ`,
/// with Δ₀ the nonnegative Laplacian.
pub fn scalar_curvature(rho_c: &ScalarField) -> ScalarField {
    let w = rho_c.map(f64::ln);
    let lap = laplacian_flat(&w);
    let g = *rho_c.grid();
    if g.dim() == 2 {
        return lap.zip_map(rho_c, |l, r| 2.0 * l / (r * r));
    }
    let grad = gradient_flat(&w);
    let (lv, gv, rv) = (lap.values(), grad.values(), rho_c.values());
    let values = g.build(|idx, _| {
        let r = rv[idx];
        (4.0 * lv[idx] - 2.0 * gv[idx].dot(gv[idx])) / (r * r)
    });
    Field::from_values(g, values).expect("same grid")
}

/// Nonnegative Laplace–Beltrami operator of `ρ² g₀` on scalars:
/// `ρ⁻² (Δ₀ f - (dim - 2) <∇ log ρ, ∇ f>)`.
pub fn conformal_laplacian_scalar(rho_c: &ScalarField, f: &ScalarField) -> ScalarField {
    let g = *rho_c.grid();
    let drift = g.dim() as f64 - 2.0;
    let lap = laplacian_flat(f);
    let grad_f = gradient_flat(f);
    let grad_w = gradient_flat(&rho_c.map(f64::ln));
    let (lv, fv, wv, rv) = (lap.values(), grad_f.values(), grad_w.values(), rho_c.values());
    let values = g.build(|idx, _| {
        let r = rv[idx];
        (lv[idx] - drift * wv[idx].dot(fv[idx])) / (r * r)
    });
    Field::from_values(g, values).expect("same grid")
}

/// Wide-stencil discrete symbol `Σ (sin(k_i h_i) / h_i)²`.
pub fn wide_symbol(grid: &crate::grid::Grid, k: [f64; 3]) -> f64 {
    (0..grid.dim())
        .map(|axis| {
            let h = grid.h(axis);
            let s = (k[axis] * h).sin() / h;
            s * s
        })
        .sum()
}

/// One point of a principal-symbol sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolSample {
    pub k: [f64; 3],
    pub lambda_h: f64,
    /// `‖D² ψ_k‖ / ‖ρ⁻² λ_h ψ_k‖`.
    pub ratio: f64,
}

impl SymbolSample {
    pub fn deviation(&self) -> f64 {
        (self.ratio - 1.0).abs()
    }
}

/// Probes `D²` (metric `ρc² g₀`) with the plane wave `sin(k·x)·1`.
pub fn symbol_ratio(rho_c: &ScalarField, k: [f64; 3]) -> SymbolSample {
    let g = *rho_c.grid();
    let probe = SpinorField::from_fn(g, |x| {
        EvenSpinor::scalar((k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).sin())
    });
    let lambda_h = wide_symbol(&g, k);
    let d2 = dirac_squared_with(rho_c, &probe);
    let principal = probe.zip_map(rho_c, |p, r| p * (lambda_h / (r * r)));
    let (num, _) = norms(&d2, None).expect("unweighted");
    let (den, _) = norms(&principal, None).expect("unweighted");
    SymbolSample {
        k,
        lambda_h,
        ratio: num / den,
    }
}

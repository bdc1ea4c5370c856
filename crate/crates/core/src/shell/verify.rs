//! Named property checks run by `spinflow verify`.
//!
//! Each check prints one line; the report text depends only on the build,
//! never on timing or thread count.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clifford::{clifford_action, geometric_product, EvenSpinor, Multivector, Vector};
use crate::diagnostics::rho_residual;
use crate::dirac::{
    dirac_conformal_with, dirac_flat, scalar_curvature, symbol_ratio, CovarianceForm, DEFAULT_RHO_FLOOR,
};
use crate::flow::{
    self, initial_data, Collect, DtPolicy, FlowConfig, FlowOperator, InitSpec, MetricMode, Preset, Termination,
};
use crate::grid::{laplacian_wide, norms, Grid, ScalarField, SpinorField};
use crate::toy2d::{exact_u, toy_run, ToyConfig};

pub type Product = fn(Multivector, Multivector) -> Multivector;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Clone, Copy)]
pub struct VerifyOptions {
    /// Product under test for the algebra checks.
    pub product: Product,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            product: geometric_product,
        }
    }
}

type CheckFn = fn(&VerifyOptions) -> (bool, String);

const CHECKS: &[(&str, CheckFn)] = &[
    ("clifford.structure_table", structure_table),
    ("clifford.anticommutators", anticommutators),
    ("clifford.module_anticommutators", module_anticommutators),
    ("dirac.flat_identity", flat_identity),
    ("dirac.covariance_order", covariance_order),
    ("dirac.principal_symbol", principal_symbol),
    ("dirac.curvature_constant", curvature_constant),
    ("flow.stationarity", stationarity),
    ("flow.linear_decay", linear_decay),
    ("flow.nodal_robustness", nodal_robustness),
    ("diagnostics.frozen_energy_gap", frozen_energy_gap),
    ("diagnostics.residual_constant", residual_constant),
    ("diagnostics.weighted_rate_finite", weighted_rate_finite),
    ("toy2d.convergence", toy_convergence),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

/// Runs every check whose name starts with one of `only` (all if empty).
pub fn verify_suite(opts: &VerifyOptions, only: &[String]) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .filter(|(name, _)| only.is_empty() || only.iter().any(|p| name.starts_with(p.as_str())))
        .map(|(name, f)| {
            let (passed, detail) = f(opts);
            CheckResult { name, passed, detail }
        })
        .collect()
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

/// Blade bitmasks in storage order: 1, e1, e2, e3, e12, e13, e23, e123.
const BLADE_BITS: [u8; 8] = [0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111];

fn word(bits: u8) -> Vec<u8> {
    (0..3).filter(|i| bits & (1 << i) != 0).collect()
}

/// Sorts a generator word using `e_i e_j = -e_j e_i` and `e_i e_i = 1`.
fn reduce_word(mut w: Vec<u8>) -> (f64, Vec<u8>) {
    let mut sign = 1.0;
    loop {
        let mut changed = false;
        let mut i = 0;
        while i + 1 < w.len() {
            if w[i] == w[i + 1] {
                w.drain(i..i + 2);
                changed = true;
            } else if w[i] > w[i + 1] {
                w.swap(i, i + 1);
                sign = -sign;
                changed = true;
                i += 1;
            } else {
                i += 1;
            }
        }
        if !changed {
            return (sign, w);
        }
    }
}

fn symbolic_product(a: usize, b: usize) -> Multivector {
    let mut w = word(BLADE_BITS[a]);
    w.extend(word(BLADE_BITS[b]));
    let (sign, reduced) = reduce_word(w);
    let bits = reduced.iter().fold(0u8, |acc, &g| acc | (1 << g));
    let slot = BLADE_BITS.iter().position(|&x| x == bits).expect("blade");
    Multivector::basis(slot) * sign
}

fn structure_table(o: &VerifyOptions) -> (bool, String) {
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for a in 0..8 {
        for b in 0..8 {
            let d = ((o.product)(Multivector::basis(a), Multivector::basis(b)) - symbolic_product(a, b)).max_abs();
            worst = worst.max(d);
            if d > 1e-12 {
                mismatches += 1;
            }
        }
    }
    (mismatches == 0, format!("{mismatches}/64 mismatched, max diff {}", sci(worst)))
}

fn anticommutators(o: &VerifyOptions) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for i in 1..=3 {
        for j in 1..=3 {
            let (ei, ej) = (Multivector::basis(i), Multivector::basis(j));
            let anti = (o.product)(ei, ej) + (o.product)(ej, ei);
            let expect = Multivector::scalar(if i == j { 2.0 } else { 0.0 });
            worst = worst.max((anti - expect).max_abs());
        }
    }
    (worst <= 1e-12, format!("max |E_iE_j + E_jE_i - 2δ_ij| = {}", sci(worst)))
}

fn module_anticommutators(o: &VerifyOptions) -> (bool, String) {
    let act = |v: Vector, psi: EvenSpinor| -> Multivector {
        let iv = (o.product)(Multivector::E123, Multivector::vector(v));
        (o.product)(iv, psi.to_multivector())
    };
    let basis = [EvenSpinor::ONE, EvenSpinor::E12, EvenSpinor::E13, EvenSpinor::E23];
    let mut worst: f64 = 0.0;
    for psi in basis {
        for i in 0..3 {
            for j in 0..3 {
                let (vi, vj) = (Vector::axis(i), Vector::axis(j));
                let lhs = act(vi, act(vj, psi).even_part()) + act(vj, act(vi, psi).even_part());
                let expect = psi.to_multivector() * if i == j { -2.0 } else { 0.0 };
                worst = worst.max((lhs - expect).max_abs());
                worst = worst.max((act(vi, psi) - clifford_action(vi, psi).to_multivector()).max_abs());
            }
        }
    }
    (worst <= 1e-12, format!("max deviation {} on 4 basis spinors", sci(worst)))
}

fn random_spinor_field(g: Grid, seed: u64) -> SpinorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..g.len())
        .map(|_| EvenSpinor::from_array(std::array::from_fn(|_| rng.gen_range(-1.0..1.0))))
        .collect();
    SpinorField::from_values(g, values).expect("sized")
}

fn flat_identity(_: &VerifyOptions) -> (bool, String) {
    let g = Grid::uniform(3, 32, 2.0 * PI).expect("grid");
    let psi = random_spinor_field(g, 1);
    let d = dirac_flat(&dirac_flat(&psi)).axpy(-1.0, &laplacian_wide(&psi)).max_norm();
    (d <= 1e-12, format!("32^3 max |D0 D0 psi - wide Laplacian| = {}", sci(d)))
}

/// L² gaps between the two covariance forms on 32², 64², 128².
pub fn covariance_gaps() -> Vec<f64> {
    [32, 64, 128]
        .iter()
        .map(|&n| {
            let g = Grid::uniform(2, n, 2.0).expect("grid");
            let w = PI;
            let rho = ScalarField::from_fn(g, |x| 1.0 + 0.3 * (w * (x[0] + x[1])).sin());
            let phi = SpinorField::from_fn(g, |x| {
                EvenSpinor::new((w * (x[0] + x[1])).cos(), 0.5 * (w * x[1]).sin(), 0.0, 0.2)
            });
            let a = dirac_conformal_with(&rho, &phi, CovarianceForm::A);
            let b = dirac_conformal_with(&rho, &phi, CovarianceForm::B);
            norms(&a.axpy(-1.0, &b), None).expect("unweighted").0
        })
        .collect()
}

fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[0] / w[1]).collect()
}

fn in_band(r: &[f64], lo: f64, hi: f64) -> bool {
    r.iter().all(|x| (lo..=hi).contains(x))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ")
}

fn covariance_order(_: &VerifyOptions) -> (bool, String) {
    let r = ratios(&covariance_gaps());
    (in_band(&r, 3.5, 4.6), format!("gap ratios [{}], band [3.5, 4.6]", fmt_list(&r)))
}

/// Symbol-ratio deviations at k = 8, 16, 32 on 256² with ρ ∈ [0.75, 1.75].
pub fn symbol_deviations() -> Vec<f64> {
    let g = Grid::uniform(2, 256, 2.0 * PI).expect("grid");
    let rho = ScalarField::from_fn(g, |x| 1.25 + 0.5 * x[0].sin() * x[1].cos());
    [8.0, 16.0, 32.0]
        .iter()
        .map(|&k| symbol_ratio(&rho, [k, 0.0, 0.0]).deviation())
        .collect()
}

fn principal_symbol(_: &VerifyOptions) -> (bool, String) {
    let d = symbol_deviations();
    let ok = d[0] > d[1] && d[1] > d[2] && d[2] <= 0.1;
    (ok, format!("deviations [{}] over k = 8, 16, 32", fmt_list(&d)))
}

fn curvature_constant(_: &VerifyOptions) -> (bool, String) {
    let g = Grid::uniform(3, 8, 1.0).expect("grid");
    let flat = scalar_curvature(&ScalarField::constant(g, 0.7)).max_norm();
    let rho = ScalarField::from_fn(g, |x| 1.0 + 0.2 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[2]).cos());
    let shift = [3, 1, 5];
    let commutes = scalar_curvature(&rho.shifted(shift)) == scalar_curvature(&rho).shifted(shift);
    (flat == 0.0 && commutes, format!("R(const) = {}, shift-equivariant: {commutes}", sci(flat)))
}

fn stationarity(_: &VerifyOptions) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for gauge in [false, true] {
        for epsilon in [0.0, 0.5] {
            let cfg = FlowConfig {
                n: vec![16; 3],
                length: vec![1.0; 3],
                dt_policy: DtPolicy::Fixed(1e-4),
                t_end: 1e-2,
                gauge,
                epsilon,
                ..FlowConfig::default()
            };
            let psi0 = SpinorField::constant(cfg.grid().expect("grid"), EvenSpinor::new(0.6, 0.3, -0.2, 0.5));
            let op = FlowOperator::new(&cfg, &psi0);
            let mut state = flow::FlowState::new(psi0.clone());
            for _ in 0..100 {
                state = match flow::step_with(&state, &op, 1e-4) {
                    Ok(s) => s,
                    Err(e) => return (false, e.to_string()),
                };
                worst = worst.max(state.psi.axpy(-1.0, &psi0).max_norm());
            }
        }
    }
    (worst <= 1e-12, format!("16^3, 100 steps x 4 settings, max drift {}", sci(worst)))
}

fn linear_decay(_: &VerifyOptions) -> (bool, String) {
    let g = Grid::uniform(2, 32, 2.0 * PI).expect("grid");
    let k = 3.0;
    let dt = 1e-3;
    let cfg = FlowConfig {
        n: vec![32; 2],
        length: vec![2.0 * PI; 2],
        metric: MetricMode::FrozenFlat,
        ..FlowConfig::default()
    };
    let psi = SpinorField::from_fn(g, |x| EvenSpinor::new((k * x[0]).sin(), 0.0, 0.0, 0.0));
    let op = FlowOperator::new(&cfg, &psi);
    let lambda = (k * g.h(0)).sin().powi(2) / (g.h(0) * g.h(0));
    let z = lambda * dt;
    let factor = 1.0 - z + z * z / 2.0 - z.powi(3) / 6.0 + z.powi(4) / 24.0;
    let mut state = flow::FlowState::new(psi.clone());
    let mut worst: f64 = 0.0;
    let mut amp = 1.0;
    for _ in 0..10 {
        state = flow::step_with(&state, &op, dt).expect("finite");
        amp *= factor;
        worst = worst.max(state.psi.axpy(-amp, &psi).max_norm());
    }
    (worst <= 1e-10, format!("10 steps, max deviation from RK4 factor {}", sci(worst)))
}

/// The 128² nodal-ring run to `t = 0.05` with the default time-step rule.
pub fn nodal_ring_config() -> FlowConfig {
    FlowConfig {
        n: vec![128; 2],
        length: vec![3.0; 2],
        t_end: 0.05,
        rho_floor: DEFAULT_RHO_FLOOR,
        init: InitSpec {
            preset: Preset::NodalRing,
            r0: 1.0,
            amp: 1.0,
        },
        ..FlowConfig::default()
    }
}

fn nodal_robustness(_: &VerifyOptions) -> (bool, String) {
    let cfg = nodal_ring_config();
    let psi0 = initial_data(&cfg.init, cfg.grid().expect("grid"), cfg.seed);
    let max0 = psi0.max_norm();
    let mut sink = Collect::default();
    match flow::run_from(&cfg, psi0, &mut sink) {
        Ok(out) => {
            let max = out.state.psi.max_norm();
            let ok = out.termination == Termination::Completed && max <= 2.0 * max0;
            (
                ok,
                format!(
                    "{} after {} steps at t = {}, max|psi| {} (initial {})",
                    out.termination,
                    out.state.step,
                    sci(out.state.t),
                    sci(max),
                    sci(max0)
                ),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

/// Centred energy gap for the frozen flat flow on n², with `dt ∝ h²`.
pub fn frozen_gap(n: usize) -> f64 {
    let l = 2.0 * PI;
    let g = Grid::uniform(2, n, l).expect("grid");
    let h = g.h(0);
    let cfg = FlowConfig {
        n: vec![n; 2],
        length: vec![l; 2],
        metric: MetricMode::FrozenFlat,
        dt_policy: DtPolicy::Fixed(0.5 * h * h / 4.0),
        t_end: 2.0 * 0.5 * h * h / 4.0,
        ..FlowConfig::default()
    };
    let psi = SpinorField::from_fn(g, |x| {
        EvenSpinor::new(x[0].sin() * (2.0 * x[1]).cos(), 0.0, 0.5 * x[1].cos(), 0.0)
    });
    let mut sink = Collect::default();
    flow::run_from(&cfg, psi, &mut sink).expect("finite");
    sink.rows[1].energy_gap
}

fn frozen_energy_gap(_: &VerifyOptions) -> (bool, String) {
    let gaps: Vec<f64> = [16, 32, 64].iter().map(|&n| frozen_gap(n).abs()).collect();
    let orders: Vec<f64> = ratios(&gaps).iter().map(|r| r.log2()).collect();
    let ok = orders.iter().all(|&p| p >= 2.0);
    (ok, format!("|gap| [{}], orders [{}]", gaps.iter().map(|g| sci(*g)).collect::<Vec<_>>().join(", "), fmt_list(&orders)))
}

fn residual_constant(_: &VerifyOptions) -> (bool, String) {
    let g = Grid::uniform(3, 16, 1.0).expect("grid");
    let psi = SpinorField::constant(g, EvenSpinor::new(0.7, 0.2, -0.1, 0.3));
    let cfg = FlowConfig::default();
    let rhs = FlowOperator::new(&cfg, &psi).rhs(&psi);
    let r = rho_residual(&psi, &rhs, DEFAULT_RHO_FLOOR);
    let ok = r.l2 <= 1e-10 && r.linf <= 1e-10;
    (ok, format!("l2 {}, linf {}", sci(r.l2), sci(r.linf)))
}

/// Desk-scale runs for the weighted-rate constant: 32² on `[-1.5, 1.5]²`.
/// The constant state takes CFL steps larger than the short horizon, so it
/// gets a longer one to produce interior rows.
pub fn weighted_rate_config(preset: Preset) -> FlowConfig {
    FlowConfig {
        n: vec![32; 2],
        length: vec![3.0; 2],
        t_end: if preset == Preset::Constant { 1e-2 } else { 1e-4 },
        init: InitSpec {
            preset,
            ..InitSpec::default()
        },
        ..FlowConfig::default()
    }
}

fn weighted_rate_finite(_: &VerifyOptions) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for preset in [Preset::Constant, Preset::GaussianBump, Preset::NodalRing] {
        let cfg = weighted_rate_config(preset);
        let mut sink = Collect::default();
        match flow::run(&cfg, &mut sink) {
            Ok(out) => {
                let n = sink.rows.len();
                let interior_finite = n >= 3 && sink.rows[1..n - 1].iter().all(|r| r.weighted_rate.is_finite());
                let done = out.termination == Termination::Completed;
                let nodal_ok = preset != Preset::Constant || sink.rows.iter().all(|r| r.nodal_fraction == 0.0);
                ok &= interior_finite && done && nodal_ok;
                parts.push(format!("{} sup C = {}", preset.name(), sci(out.sup_weighted_rate)));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{}: {e}", preset.name()));
            }
        }
    }
    (ok, parts.join("; "))
}

fn toy_convergence(_: &VerifyOptions) -> (bool, String) {
    let mut errs = Vec::new();
    let mut mass_dev: f64 = 0.0;
    let mut centre_dev = f64::NAN;
    for n in [64, 128, 256] {
        let out = match toy_run(&ToyConfig {
            n,
            ..ToyConfig::default()
        }) {
            Ok(o) => o,
            Err(e) => return (false, e.to_string()),
        };
        errs.push(out.rows.last().expect("rows").linf_err);
        for r in &out.rows {
            mass_dev = mass_dev.max((r.mass - PI).abs());
        }
        if n == 128 {
            let g = *out.u.grid();
            centre_dev = (out.u.values()[g.index([64, 64, 0])] - exact_u(0.0, 0.0, 0.5)).abs();
        }
    }
    let r = ratios(&errs);
    let ok = in_band(&r, 3.5, 4.6) && mass_dev <= 1e-6 && centre_dev <= 1e-3;
    (
        ok,
        format!(
            "ratios [{}], |u(0,0,0.5) - 1/3| {}, mass drift {}",
            fmt_list(&r),
            sci(centre_dev),
            sci(mass_dev)
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Product with the sign of the `e2 e1` term in the `e12` slot flipped.
    fn flipped(a: Multivector, b: Multivector) -> Multivector {
        let mut p = geometric_product(a, b);
        p.c12 += 2.0 * a.c2 * b.c1;
        p
    }

    #[test]
    fn word_reduction() {
        assert_eq!(reduce_word(vec![1, 0]), (-1.0, vec![0, 1]));
        assert_eq!(reduce_word(vec![0, 1, 0]), (-1.0, vec![1]));
        assert_eq!(reduce_word(vec![2, 1, 0, 2, 1, 0]), (-1.0, vec![]));
        assert_eq!(symbolic_product(7, 7), Multivector::scalar(-1.0));
    }

    #[test]
    fn algebra_checks_pass() {
        let results = verify_suite(&VerifyOptions::default(), &["clifford".into()]);
        assert_eq!(results.len(), 3);
        assert!(all_passed(&results), "{results:?}");
    }

    #[test]
    fn flipped_sign_fails_by_name() {
        let opts = VerifyOptions { product: flipped };
        let results = verify_suite(&opts, &["clifford.anticommutators".into()]);
        assert_eq!(results.len(), 1);
        assert!(!results[0].passed);
        assert!(results[0].to_string().starts_with("FAIL clifford.anticommutators:"));
    }

    #[test]
    fn filter_by_prefix() {
        let names: Vec<_> = verify_suite(&VerifyOptions::default(), &["diagnostics.residual".into()])
            .into_iter()
            .map(|r| r.name)
            .collect();
        assert_eq!(names, vec!["diagnostics.residual_constant"]);
        assert_eq!(check_names().len(), CHECKS.len());
    }
}

//! Acceptance suite. Each property prints one `PASS`/`FAIL` line; the process
//! exits non-zero if any of them fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinflow::clifford::{clifford_action, geometric_product, EvenSpinor, Multivector, Vector};
use spinflow::diagnostics::rho_residual;
use spinflow::dirac::{dirac_conformal_with, dirac_flat, symbol_ratio, CovarianceForm};
use spinflow::flow::{
    self, initial_data, Collect, DtPolicy, FlowConfig, FlowOperator, FlowState, InitSpec, MetricMode, Preset,
    Termination,
};
use spinflow::grid::{norms, Grid, ScalarField, SpinorField};
use spinflow::shell::config::parse_config;
use spinflow::shell::run::{execute, DIAGNOSTICS_FILE, MANIFEST_FILE};
use spinflow::toy2d::{toy_run, ToyConfig};

type Outcome = (bool, String);

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn list(v: &[f64], f: fn(f64) -> String) -> String {
    v.iter().map(|x| f(*x)).collect::<Vec<_>>().join(", ")
}

fn fixed3(x: f64) -> String {
    format!("{x:.3}")
}

fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[0] / w[1]).collect()
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let elapsed = start.elapsed();
    match limit {
        Some(max) => {
            let in_time = elapsed < max;
            (
                ok && in_time,
                format!("{detail}; {:.2} s (limit {} s)", elapsed.as_secs_f64(), max.as_secs()),
            )
        }
        None => (ok, format!("{detail}; {:.2} s", elapsed.as_secs_f64())),
    }
}

// Blade bitmasks in storage order: 1, e1, e2, e3, e12, e13, e23, e123.
const MASKS: [u8; 8] = [0, 1, 2, 4, 3, 5, 6, 7];

/// `e_A e_B = sign · e_{A xor B}` for orthonormal generators, sign from the
/// number of transpositions needed to sort the concatenated word.
fn blade_product(a: u8, b: u8) -> (f64, u8) {
    let mut swaps = 0;
    for j in 0..3 {
        if b & (1 << j) != 0 {
            swaps += (a >> (j + 1)).count_ones();
        }
    }
    (if swaps % 2 == 0 { 1.0 } else { -1.0 }, a ^ b)
}

fn clifford_core() -> Outcome {
    let mut mismatched = 0;
    for i in 0..8 {
        for j in 0..8 {
            let (sign, mask) = blade_product(MASKS[i], MASKS[j]);
            let k = MASKS.iter().position(|&m| m == mask).unwrap();
            let expected = Multivector::basis(k).scale(sign);
            if geometric_product(Multivector::basis(i), Multivector::basis(j)) != expected {
                mismatched += 1;
            }
        }
    }
    let gens = [Multivector::E1, Multivector::E2, Multivector::E3];
    let mut anti: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let s = gens[i] * gens[j] + gens[j] * gens[i];
            let delta = if i == j { 2.0 } else { 0.0 };
            anti = anti.max((s - Multivector::scalar(delta)).max_abs());
        }
    }
    let basis = [EvenSpinor::ONE, EvenSpinor::E12, EvenSpinor::E13, EvenSpinor::E23];
    let mut module: f64 = 0.0;
    for psi in basis {
        for i in 0..3 {
            for j in 0..3 {
                let (vi, vj) = (Vector::axis(i), Vector::axis(j));
                let s = clifford_action(vi, clifford_action(vj, psi)) + clifford_action(vj, clifford_action(vi, psi));
                let delta = if i == j { -2.0 } else { 0.0 };
                module = module.max((s - psi * delta).max_abs());
            }
        }
    }
    (
        mismatched == 0 && anti <= 1e-12 && module <= 1e-12,
        format!("{mismatched}/64 products off, anticommutator dev {}, module dev {}", sci(anti), sci(module)),
    )
}

fn flat_identity() -> Outcome {
    let g = Grid::new(&[32, 32, 32], &[1.0, 1.3, 0.8]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let values: Vec<EvenSpinor> = (0..g.len())
        .map(|_| EvenSpinor::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let psi = SpinorField::from_values(g, values).unwrap();
    let dd = dirac_flat(&dirac_flat(&psi));
    let v = psi.values();
    let mut worst: f64 = 0.0;
    for idx in 0..g.len() {
        let c = g.coords(idx);
        let mut lap = EvenSpinor::ZERO;
        for axis in 0..3 {
            let h = g.h(axis);
            let (p, m) = (g.neighbor(c, axis, 2), g.neighbor(c, axis, -2));
            lap -= (v[p] + v[m] - v[idx] * 2.0) * (1.0 / (4.0 * h * h));
        }
        worst = worst.max((dd.values()[idx] - lap).max_abs());
    }
    (worst <= 1e-12, format!("32^3 max |D0 D0 psi - wide Laplacian| = {}", sci(worst)))
}

fn covariance_order() -> Outcome {
    let gaps: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let g = Grid::uniform(2, n, 2.0).unwrap();
            let rho = ScalarField::from_fn(g, |x| 1.2 + 0.4 * (PI * x[0]).cos() * (PI * x[1]).sin());
            let phi = SpinorField::from_fn(g, |x| {
                EvenSpinor::new((PI * x[1]).sin(), 0.3, (PI * (x[0] - x[1])).cos(), 0.7 * (PI * x[0]).sin())
            });
            let a = dirac_conformal_with(&rho, &phi, CovarianceForm::A);
            let b = dirac_conformal_with(&rho, &phi, CovarianceForm::B);
            norms(&a.axpy(-1.0, &b), None).unwrap().0
        })
        .collect();
    let r = ratios(&gaps);
    let ok = r.iter().all(|x| (3.5..=4.6).contains(x));
    (ok, format!("L2 gaps [{}], ratios [{}]", list(&gaps, sci), list(&r, fixed3)))
}

fn toy_convergence() -> Outcome {
    let exact = |x: f64, y: f64| (-(x * x + y * y) / 3.0).exp() / 3.0;
    let mut errs = Vec::new();
    let mut mass_dev: f64 = 0.0;
    let mut centre_dev = f64::NAN;
    for n in [64, 128, 256] {
        let out = toy_run(&ToyConfig {
            n,
            t_end: 0.5,
            ..ToyConfig::default()
        })
        .unwrap();
        if out.t != 0.5 {
            return (false, format!("n = {n} stopped at t = {}", out.t));
        }
        let g = *out.u.grid();
        let mut err: f64 = 0.0;
        for (idx, &u) in out.u.values().iter().enumerate() {
            let p = g.centered_position(idx);
            err = err.max((u - exact(p[0], p[1])).abs());
        }
        errs.push(err);
        for r in &out.rows {
            mass_dev = mass_dev.max((r.mass - PI).abs());
        }
        if n == 128 {
            centre_dev = (out.u.values()[g.index([64, 64, 0])] - 1.0 / 3.0).abs();
        }
    }
    let r = ratios(&errs);
    let ok = r.iter().all(|x| (3.5..=4.6).contains(x)) && centre_dev <= 1e-3 && mass_dev <= 1e-6;
    (
        ok,
        format!(
            "Linf errors [{}], ratios [{}], |u(0,0,0.5) - 1/3| {}, max mass drift {}",
            list(&errs, sci),
            list(&r, fixed3),
            sci(centre_dev),
            sci(mass_dev)
        ),
    )
}

fn principal_symbol() -> Outcome {
    let g = Grid::uniform(2, 256, 2.0 * PI).unwrap();
    let rho = ScalarField::from_fn(g, |x| 1.25 + 0.75 * x[0].sin() * x[1].cos());
    let range = (rho.min(), rho.max());
    let dev: Vec<f64> = [8.0, 16.0, 32.0]
        .iter()
        .map(|&k| symbol_ratio(&rho, [k, 0.0, 0.0]).deviation())
        .collect();
    let ok = range.0 >= 0.5 && range.1 <= 2.0 && dev[0] > dev[1] && dev[1] > dev[2] && dev[2] <= 0.1;
    (
        ok,
        format!(
            "rho in [{:.3}, {:.3}], deviations [{}] at k = 8, 16, 32",
            range.0,
            range.1,
            list(&dev, fixed3)
        ),
    )
}

fn stationarity() -> Outcome {
    let c = EvenSpinor::new(-0.4, 0.8, 0.1, 0.35);
    let mut worst: f64 = 0.0;
    let mut settings = 0;
    for gauge in [false, true] {
        for epsilon in [0.0, 0.1, 1.0, 10.0] {
            let cfg = FlowConfig {
                n: vec![16; 3],
                length: vec![2.0, 1.0, 1.5],
                gauge,
                epsilon,
                t_end: 1.0,
                ..FlowConfig::default()
            };
            let psi0 = SpinorField::constant(cfg.grid().unwrap(), c);
            let mut state = FlowState::new(psi0.clone());
            for _ in 0..100 {
                state = match flow::step(&state, &cfg) {
                    Ok(s) => s,
                    Err(e) => return (false, e.to_string()),
                };
            }
            worst = worst.max(state.psi.axpy(-1.0, &psi0).max_norm());
            settings += 1;
        }
    }
    (worst <= 1e-12, format!("16^3, 100 steps x {settings} settings, max drift {}", sci(worst)))
}

fn frozen_energy_identity() -> Outcome {
    let gaps: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let g = Grid::uniform(2, n, 2.0 * PI).unwrap();
            let h = g.h(0);
            let dt = 0.4 * h * h / 4.0;
            let cfg = FlowConfig {
                n: vec![n; 2],
                length: vec![2.0 * PI; 2],
                metric: MetricMode::FrozenFlat,
                dt_policy: DtPolicy::Fixed(dt),
                t_end: 2.0 * dt,
                ..FlowConfig::default()
            };
            let psi = SpinorField::from_fn(g, |x| {
                EvenSpinor::new((x[0] + x[1]).cos(), 0.2, 0.3 * (2.0 * x[0]).sin(), 0.0)
            });
            let mut sink = Collect::default();
            flow::run_from(&cfg, psi, &mut sink).unwrap();
            sink.rows[1].energy_gap.abs()
        })
        .collect();
    let orders: Vec<f64> = ratios(&gaps).iter().map(|r| r.log2()).collect();
    let ok = gaps.iter().all(|g| g.is_finite()) && orders.iter().all(|&p| p >= 2.0);
    (ok, format!("|gap| [{}], orders [{}]", list(&gaps, sci), list(&orders, fixed3)))
}

fn residual_report() -> Outcome {
    let g = Grid::uniform(3, 16, 1.0).unwrap();
    let psi = SpinorField::constant(g, EvenSpinor::new(0.3, -0.5, 0.6, 0.2));
    let cfg = FlowConfig::default();
    let rhs = FlowOperator::new(&cfg, &psi).rhs(&psi);
    let constant = rho_residual(&psi, &rhs, cfg.rho_floor);
    let mut ok = constant.l2 <= 1e-10 && constant.linf <= 1e-10;
    let mut parts = vec![format!("constant l2 {} linf {}", sci(constant.l2), sci(constant.linf))];
    for preset in [Preset::NodalRing, Preset::GaussianBump] {
        let mut finals = Vec::new();
        for n in [16, 32] {
            let cfg = FlowConfig {
                n: vec![n; 2],
                length: vec![3.0; 2],
                t_end: 1e-5,
                init: InitSpec {
                    preset,
                    ..InitSpec::default()
                },
                ..FlowConfig::default()
            };
            let mut sink = Collect::default();
            let out = flow::run(&cfg, &mut sink).unwrap();
            let finite = sink.rows.iter().all(|r| r.res_a_l2.is_finite() && r.res_a_linf.is_finite());
            ok &= finite && out.termination == Termination::Completed;
            finals.push(sink.rows.last().unwrap().res_a_l2);
        }
        parts.push(format!(
            "{} l2 16^2 {} 32^2 {} (ratio {:.3})",
            preset.name(),
            sci(finals[0]),
            sci(finals[1]),
            finals[0] / finals[1]
        ));
    }
    (ok, parts.join("; "))
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let col = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

fn manifest_value(dir: &Path, key: &str) -> Option<String> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE)).ok()?;
    let prefix = format!("{key} = ");
    text.lines().find_map(|l| l.strip_prefix(prefix.as_str())).map(str::to_string)
}

fn nodal_robustness() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "init = nodal_ring\nnx = 128\nny = 128\nnz = 0\nL = 1.5\nrho_floor = 1e-6\nt_end = 0.05\noutdir = {}",
        dir.path().display()
    );
    let cfg = parse_config(&text).unwrap();
    let spinflow::shell::config::RunConfig::Flow(fc) = &cfg.run else {
        return (false, "not a flow configuration".into());
    };
    let max0 = initial_data(&fc.init, fc.grid().unwrap(), fc.seed).max_norm();
    let mut sink = Collect::default();
    let out = flow::run(fc, &mut sink).unwrap();
    let report = execute(&cfg).unwrap();
    let csv = std::fs::read_to_string(dir.path().join(DIAGNOSTICS_FILE)).unwrap();
    let nodal = csv_column(&csv, "nodal_fraction");
    let complete = nodal.len() as u64 == report.steps + 1 && nodal.iter().all(|v| v.is_finite());
    let max = out.state.psi.max_norm();
    let ok = out.termination == Termination::Completed && out.state.t == 0.05 && max <= 2.0 * max0 && complete;
    (
        ok,
        format!(
            "{} after {} steps at t = {}, max|psi| {} (initial {}), {} CSV rows",
            out.termination,
            out.state.step,
            sci(out.state.t),
            sci(max),
            sci(max0),
            nodal.len()
        ),
    )
}

fn weighted_estimates() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (preset, t_end) in [("constant", 1e-2), ("gaussian_bump", 1e-4), ("nodal_ring", 1e-4)] {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "init = {preset}\nn = 32\nnz = 0\nL = 1.5\nalpha = 2\nt_end = {t_end}\noutdir = {}",
            dir.path().display()
        );
        let cfg = parse_config(&text).unwrap();
        let spinflow::shell::config::RunConfig::Flow(fc) = &cfg.run else {
            return (false, "not a flow configuration".into());
        };
        let mut sink = Collect::default();
        let out = flow::run(fc, &mut sink).unwrap();
        let n = sink.rows.len();
        let finite = n >= 3 && sink.rows[1..n - 1].iter().all(|r| r.weighted_rate.is_finite());
        let report = execute(&cfg).unwrap();
        let sup: f64 = manifest_value(dir.path(), "sup_weighted_rate")
            .and_then(|v| v.parse().ok())
            .unwrap_or(f64::NAN);
        let agrees = sup == out.sup_weighted_rate;
        ok &= finite && sup.is_finite() && agrees && report.succeeded();
        parts.push(format!("{preset} {} rows, sup C = {}", n, sci(sup)));
    }
    (ok, parts.join("; "))
}

fn run_threads(threads: &str, dir: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_spinflow"))
        .env("SPINFLOW_THREADS", threads)
        .args([
            "flow",
            "init=random_smooth",
            "seed=31",
            "n=16",
            "L=1",
            "t_end=2e-2",
            "snapshot_every=4",
        ])
        .arg(format!("outdir={}", dir.display()))
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("{threads} threads: {}", String::from_utf8_lossy(&status.stderr)));
    }
    Ok(())
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (t, d) in [("1", a.path()), ("8", b.path())] {
        if let Err(e) = run_threads(t, d) {
            return (false, e);
        }
    }
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n == DIAGNOSTICS_FILE || n.ends_with(".sghf"))
        .collect();
    names.sort();
    let snaps = names.iter().filter(|n| n.ends_with(".sghf")).count();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(a.path().join(n)).ok() != std::fs::read(b.path().join(n)).ok())
        .collect();
    let ok = names.contains(&DIAGNOSTICS_FILE.to_string()) && snaps >= 2 && differing.is_empty();
    (ok, format!("{} files compared ({snaps} snapshots), {} differ", names.len(), differing.len()))
}

fn main() {
    let secs = Duration::from_secs;
    let checks: Vec<(&str, Option<Duration>, fn() -> Outcome)> = vec![
        ("clifford_core", Some(secs(1)), clifford_core),
        ("flat_identity", Some(secs(5)), flat_identity),
        ("conformal_covariance", Some(secs(30)), covariance_order),
        ("toy_model", Some(secs(120)), toy_convergence),
        ("principal_symbol", Some(secs(30)), principal_symbol),
        ("parallel_stationarity", None, stationarity),
        ("frozen_energy_identity", None, frozen_energy_identity),
        ("rho_residual", None, residual_report),
        ("nodal_robustness", None, nodal_robustness),
        ("weighted_estimates", None, weighted_estimates),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (name, limit, f) in checks {
        let (ok, detail) = timed(limit, f);
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

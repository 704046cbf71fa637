//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::{Duration, Instant};

use common::{f_oracle, random_aux_in_r, random_kernel, random_simplex, Quad, Rows};
use dhtbound::bounds::{
    ac_lower_bound, addsub_upper_bound, addsub_upper_bound_warm, centralized_bound, corollary1_bound_warm,
    j_augmented_bound, rw_bound_warm, AuxiliaryReceiver, DiscreteScenario, TerminalBound,
};
use dhtbound::gaussian::{centralized_gaussian, exponent_from_sigma, new_gaussian, rw_gaussian, sigma_hat_sq, GaussianScenario};
use dhtbound::inner::{f_max, thm2_cap, ChannelQuad, FSolver};
use dhtbound::optim::OptimizerConfig;
use dhtbound::prob::{Axis, JointTable, Kernel, SimplexVector};
use dhtbound_cli::config::RunConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `n` evenly spaced `rho0` values strictly inside `(rho1, 1)`.
fn open_grid(rho1: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| rho1 + (1.0 - rho1) * i as f64 / (n + 1) as f64).collect()
}

/// Both Gaussian bounds written out directly from their formulas.
fn closed_forms(rho0: f64, rho1: f64, rate: f64) -> (f64, f64) {
    let rho = (rho0 - rho1) / (1.0 - rho1);
    let r2 = rho * rho;
    let rw = 0.5 * (1.0 / (1.0 - r2 + r2 * (-2.0 * rate).exp())).ln();
    let k = (1.0 - rho) * (1.0 + rho0);
    let delta = k / (((2.0 * rate).exp() - 1.0) + k);
    let new = 0.5 * (1.0 / (1.0 - r2 + r2 * delta)).ln();
    (new.min(rw), rw)
}

fn c1_reduction() -> Outcome {
    let (rho1, rate) = (0.7, 0.5);
    let mut equal = 0;
    for rho0 in open_grid(rho1, 60) {
        let scn = GaussianScenario::new(rho0, rho1, rate).map_err(|e| e.to_string())?;
        let (new, rw) = (new_gaussian(&scn).value, rw_gaussian(&scn));
        ensure(new <= rw + 1e-12, || format!("rho0 = {rho0}: new {new} > rw {rw}"))?;
        if rho0 >= rho1.sqrt() {
            ensure((new - rw).abs() <= 1e-12, || format!("rho0 = {rho0}: new {new} != rw {rw}"))?;
            equal += 1;
        }
        let (on, orw) = closed_forms(rho0, rho1, rate);
        ensure((on - new).abs() <= 1e-12 && (orw - rw).abs() <= 1e-12, || format!("rho0 = {rho0}: formula mismatch"))?;
    }
    Ok(format!("60 points, {equal} at or above sqrt(0.7) coincide"))
}

fn c2_below_centralized() -> Outcome {
    let rate = 0.5;
    let mut n = 0;
    let mut worst = f64::NEG_INFINITY;
    for k in 1..=9 {
        let rho1 = 0.1 * k as f64;
        for rho0 in open_grid(rho1, 60) {
            let scn = GaussianScenario::new(rho0, rho1, rate).map_err(|e| e.to_string())?;
            let new = new_gaussian(&scn).value;
            let cen = centralized_gaussian(rho0, rho1).map_err(|e| e.to_string())?;
            worst = worst.max(new - cen);
            ensure(new <= cen + 1e-12, || format!("({rho0}, {rho1}): new {new} > centralized {cen}"))?;
            n += 1;
        }
    }
    Ok(format!("{n} points, largest new - centralized {worst:.3e}"))
}

fn c3_strict_point() -> Outcome {
    let scn = GaussianScenario::new(0.75, 0.7, 0.5).map_err(|e| e.to_string())?;
    let (new, rw) = (new_gaussian(&scn).value, rw_gaussian(&scn));
    let (on, orw) = closed_forms(0.75, 0.7, 0.5);
    ensure((new - on).abs() <= 1e-12 && (rw - orw).abs() <= 1e-12, || "library differs from the formulas".into())?;
    ensure((new - 0.007570).abs() <= 1e-5, || format!("new = {new}"))?;
    ensure((rw - 0.008858).abs() <= 1e-5, || format!("rw = {rw}"))?;
    ensure(new < rw, || "no strict improvement".into())?;
    Ok(format!("new = {new:.6}, rw = {rw:.6}"))
}

fn c4_two_forms() -> Outcome {
    let n = 200;
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in 0..n {
        let rho1 = i as f64 / n as f64;
        for j in 1..=n {
            let rho0 = rho1 + (1.0 - rho1) * j as f64 / (n + 1) as f64;
            for k in 1..=20 {
                let rate = 0.1 * k as f64;
                let scn = GaussianScenario::new(rho0, rho1, rate).map_err(|e| e.to_string())?;
                let (s, _) = sigma_hat_sq(&scn);
                let via = exponent_from_sigma(&scn, s).map_err(|e| e.to_string())?;
                let d = (new_gaussian(&scn).value - via).abs();
                worst = worst.max(d);
                ensure(d <= 1e-10, || format!("({rho0}, {rho1}, {rate}): gap {d:.3e}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} points, largest gap {worst:.3e}"))
}

fn lib_quad(q: &Quad) -> Result<ChannelQuad, String> {
    let k = |r: &Rows| Kernel::from_rows(r.clone()).map_err(|e| e.to_string());
    ChannelQuad::new(k(&q.py)?, k(&q.pz)?, k(&q.qy)?, k(&q.qz)?).map_err(|e| e.to_string())
}

fn simplex(v: &[f64]) -> Result<SimplexVector, String> {
    SimplexVector::new(v.to_vec()).map_err(|e| e.to_string())
}

fn c5_inner_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let cfg = OptimizerConfig::default();
    let mut worst = 0.0f64;
    for (nx, count, m) in [(2usize, 100usize, 1000usize), (3, 30, 600)] {
        for i in 0..count {
            let ny = rng.random_range(2..=3);
            let nz = rng.random_range(2..=3);
            let quad = Quad {
                py: random_kernel(&mut rng, nx, ny),
                pz: random_kernel(&mut rng, nx, nz),
                qy: random_kernel(&mut rng, nx, ny),
                qz: random_kernel(&mut rng, nx, nz),
            };
            let p_x = random_simplex(&mut rng, nx);
            let q_x = random_simplex(&mut rng, nx);
            let oracle = f_oracle(&quad, &p_x, &q_x, m);
            let got = f_max(&simplex(&p_x)?, &lib_quad(&quad)?, &simplex(&q_x)?, &cfg)
                .map_err(|e| e.to_string())?
                .value
                .to_f64();
            let d = (got - oracle).abs();
            worst = worst.max(d);
            ensure(d <= 1e-4, || format!("|X| = {nx} #{i}: library {got} vs oracle {oracle}"))?;
        }
    }
    Ok(format!("130 instances, largest gap {worst:.3e} nats"))
}

fn c6_cap() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    let cfg = OptimizerConfig::default();
    let mut min_margin = f64::INFINITY;
    for i in 0..50 {
        let nx = rng.random_range(2..=3);
        let ny = rng.random_range(2..=3);
        let nz = rng.random_range(2..=3);
        let nu = rng.random_range(2..=4);
        // P_{YZ|X} arbitrary; Q_{YZ|X} = Q_{Z|X} Q_{Y|Z}
        let p_yz = random_kernel(&mut rng, nx, ny * nz);
        let py: Rows = p_yz.iter().map(|r| (0..ny).map(|y| (0..nz).map(|z| r[y * nz + z]).sum()).collect()).collect();
        let pz: Rows = p_yz.iter().map(|r| (0..nz).map(|z| (0..ny).map(|y| r[y * nz + z]).sum()).collect()).collect();
        let qz = random_kernel(&mut rng, nx, nz);
        let q_y_given_z = random_kernel(&mut rng, nz, ny);
        let qy = common::compose(&qz, &q_y_given_z);
        let quad = lib_quad(&Quad { py, pz, qy, qz })?;
        let q_x = simplex(&random_simplex(&mut rng, nx))?;
        let p_ux = random_simplex(&mut rng, nu * nx);

        let solver = FSolver::new(&quad, &q_x, &cfg).map_err(|e| e.to_string())?;
        let mut mix = 0.0;
        let mut data = Vec::with_capacity(nu * nx * ny * nz);
        for u in 0..nu {
            let row = &p_ux[u * nx..(u + 1) * nx];
            let pu: f64 = row.iter().sum();
            let post: Vec<f64> = row.iter().map(|v| v / pu).collect();
            mix += pu * solver.solve_slice(&post).map_err(|e| e.to_string())?.value.to_f64();
            for (px, yz) in row.iter().zip(&p_yz) {
                data.extend(yz.iter().map(|v| px * v));
            }
        }
        let axes = vec![Axis::new("U", nu), Axis::new("X", nx), Axis::new("Y", ny), Axis::new("Z", nz)];
        let joint = JointTable::new(axes, data).map_err(|e| e.to_string())?;
        let cap = thm2_cap(&joint, &Kernel::from_rows(q_y_given_z).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?
            .to_f64();
        min_margin = min_margin.min(cap - mix);
        ensure(mix <= cap + 1e-6, || format!("#{i}: mixture {mix} exceeds cap {cap}"))?;
    }
    Ok(format!("50 instances, smallest cap - mixture {min_margin:.3e}"))
}

fn c7_sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(701);
    let cfg = OptimizerConfig::default();
    let tol = 1e-6;
    let mut min_gap = f64::INFINITY;
    for i in 0..30 {
        let nz = rng.random_range(2..=3);
        let a = random_aux_in_r(&mut rng, 2, 2, nz);
        let rate = rng.random_range(0.05..0.6);
        let scn = DiscreteScenario::from_rows(a.p_xy.clone(), a.q_xy.clone(), rate).map_err(|e| e.to_string())?;
        let k = |r: &Rows| Kernel::from_rows(r.clone()).map_err(|e| e.to_string());
        let aux = AuxiliaryReceiver::new(k(&a.p_z_given_xy)?, k(&a.q_z_given_xy)?).map_err(|e| e.to_string())?;
        let err = |what: &'static str| move |e: dhtbound::Error| format!("#{i} {what}: {e}");

        let ac = ac_lower_bound(&scn, &cfg).map_err(err("ac"))?;
        let warm: Vec<Kernel> = ac.witness_u_channel.clone().into_iter().collect();
        let cor = corollary1_bound_warm(&scn, &aux, &cfg, &warm).map_err(err("corollary1"))?;
        let mut warm_rw = warm.clone();
        warm_rw.extend(cor.witness_u_channel.clone());
        let rw = rw_bound_warm(&scn, &aux, &cfg, &warm_rw).map_err(err("rw"))?;
        let add = addsub_upper_bound_warm(&scn, &aux, TerminalBound::Centralized, &cfg, &warm).map_err(err("addsub"))?;

        let (ac, cor, rw, add) = (ac.value.to_f64(), cor.value.to_f64(), rw.value.to_f64(), add.value.to_f64());
        ensure(ac <= cor + tol, || format!("#{i}: ac {ac} > corollary1 {cor}"))?;
        ensure(cor <= rw + tol, || format!("#{i}: corollary1 {cor} > rw {rw}"))?;
        ensure(ac <= add + tol, || format!("#{i}: ac {ac} > addsub {add}"))?;
        min_gap = min_gap.min((cor - ac).min(rw - cor).min(add - ac));
    }
    Ok(format!("30 scenarios, smallest ordered gap {min_gap:.3e}"))
}

fn c8_endpoints() -> Outcome {
    // X uniform; Y = BSC(0.1)(X) under P, BSC(0.2)(X) under Q; Z = BSC(0.3)(X) under both
    let bsc = |p: f64| vec![vec![1.0 - p, p], vec![p, 1.0 - p]];
    let half = |k: Rows| -> Rows { k.into_iter().map(|r| r.into_iter().map(|v| 0.5 * v).collect()).collect() };
    let scn = DiscreteScenario::from_rows(half(bsc(0.1)), half(bsc(0.2)), 0.2).map_err(|e| e.to_string())?;
    let z = Kernel::from_rows(bsc(0.3)).map_err(|e| e.to_string())?;
    let aux = AuxiliaryReceiver::from_x_kernels(&z, &z, 2).map_err(|e| e.to_string())?;
    let cfg = OptimizerConfig::default();
    let s = |e: dhtbound::Error| e.to_string();
    let base = addsub_upper_bound(&scn, &aux, TerminalBound::Centralized, &cfg).map_err(s)?.value.to_f64();
    // rows indexed (x, y, z)
    let rows = 8;
    let constant = Kernel::from_rows(vec![vec![1.0]; rows]).map_err(s)?;
    let with_const = j_augmented_bound(&scn, &aux, &constant, &constant, TerminalBound::Centralized, &cfg)
        .map_err(s)?
        .value
        .to_f64();
    let copy_x = Kernel::deterministic(rows, 2, |r| r / 4);
    let with_x = j_augmented_bound(&scn, &aux, &copy_x, &copy_x, TerminalBound::Centralized, &cfg)
        .map_err(s)?
        .value
        .to_f64();
    let cen = centralized_bound(&scn).to_f64();
    ensure((with_const - base).abs() <= 1e-6, || format!("constant J {with_const} vs addsub {base}"))?;
    ensure((with_x - cen).abs() <= 1e-6, || format!("J = X {with_x} vs centralized {cen}"))?;
    Ok(format!("constant J = {with_const:.9}, J = X = {with_x:.9}"))
}

fn preset_csv(name: &str) -> Result<Vec<u8>, String> {
    let cfg = RunConfig::from_preset(name).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    dhtbound_cli::run(&cfg, &mut out, &mut std::io::sink()).map_err(|e| e.to_string())?;
    Ok(out)
}

fn c9_determinism() -> Outcome {
    let a = preset_csv("fig2")?;
    let b = preset_csv("fig2")?;
    ensure(a == b, || "two fig2 runs differ".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

fn c10_figure_scope() -> Outcome {
    // only the rw, new and centralized curves are produced; check the caption orderings on both presets
    for name in ["fig2", "fig3"] {
        let text = String::from_utf8(preset_csv(name)?).map_err(|e| e.to_string())?;
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let h = rd.headers().map_err(|e| e.to_string())?.clone();
        let col = |n: &str| h.iter().position(|c| c == n).ok_or_else(|| format!("{name}: no {n} column"));
        let (rw, new, cen) = (col("rw_bound")?, col("new_bound")?, col("centralized")?);
        for r in rd.records() {
            let r = r.map_err(|e| e.to_string())?;
            let v = |i: usize| -> Result<f64, String> { r[i].parse().map_err(|_| format!("{name}: bad cell {}", &r[i])) };
            ensure(v(new)? <= v(rw)? + 1e-12, || format!("{name}: new above rw"))?;
            ensure(v(new)? <= v(cen)? + 1e-12, || format!("{name}: new above centralized"))?;
        }
    }
    Ok("figure curves limited to rw, new and centralized; the other two published curves are out of scope".into())
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "Gaussian reduction above sqrt(rho1)", limit: Some(Duration::from_millis(100)), check: c1_reduction },
        Criterion { id: 2, name: "new bound below centralized", limit: Some(Duration::from_secs(1)), check: c2_below_centralized },
        Criterion { id: 3, name: "strict improvement at (0.75, 0.7, 0.5)", limit: None, check: c3_strict_point },
        Criterion { id: 4, name: "closed form equals sigma form", limit: Some(Duration::from_secs(10)), check: c4_two_forms },
        Criterion { id: 5, name: "inner objective vs grid oracle", limit: Some(Duration::from_secs(60)), check: c5_inner_oracle },
        Criterion { id: 6, name: "coupling cap dominates the mixture", limit: Some(Duration::from_secs(120)), check: c6_cap },
        Criterion { id: 7, name: "sandwich ordering", limit: Some(Duration::from_secs(600)), check: c7_sandwich },
        Criterion { id: 8, name: "J augmentation endpoints", limit: Some(Duration::from_secs(120)), check: c8_endpoints },
        Criterion { id: 9, name: "fig2 preset determinism", limit: Some(Duration::from_secs(1)), check: c9_determinism },
        Criterion { id: 10, name: "figure scope and caption ordering", limit: None, check: c10_figure_scope },
    ];
    let mut failed = 0;
    for c in &criteria {
        let t = Instant::now();
        let mut outcome = (c.check)();
        let dt = t.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, c.limit) {
            if dt > limit {
                outcome = Err(format!("took {dt:.2?}, limit {limit:.2?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} ({}) [{dt:.2?}]: {detail}", c.id, c.name),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({}) [{dt:.2?}]: {detail}", c.id, c.name);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

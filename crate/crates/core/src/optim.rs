//! Multi-start search over test channels `P_{U|X}` under rate constraints.
//!
//! The channel is parametrised by per-row logits, so every iterate is a valid
//! kernel. Rate constraints `r_i(W) <= R` enter through an augmented
//! Lagrangian: after each BFGS ascent the multipliers are updated, and the
//! penalty weight grows by 10x whenever the violation fails to shrink by 4x.
//! Stages stop once the violation is below [`OptimizerConfig::slack_tol`];
//! whatever violation remains is removed by bisecting towards the channel with
//! the same output marginal but no dependence on the input, where every rate
//! functional used here vanishes. Gradients are central finite differences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::{Error, Result};

/// Tuning knobs shared by the inner and outer optimisers.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Root seed for every random start.
    pub seed: u64,
    /// Number of outer starts (deterministic starts included).
    pub starts: usize,
    /// Iteration cap per penalty stage.
    pub max_iters: usize,
    /// Central-difference step on the logits.
    pub fd_step: f64,
    /// Interior margin for reference laws `Q̂_X`.
    pub eta: f64,
    /// Override of the inner grid spacing; `None` picks it from `|X|`.
    pub grid_step: Option<f64>,
    /// Local ascents launched from the best grid points of the inner problem.
    pub inner_starts: usize,
    /// Agreement required between the inner optimiser and a grid scan.
    pub oracle_tol: f64,
    /// Largest tolerated rate violation of a returned channel.
    pub slack_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            seed: 0,
            starts: 32,
            max_iters: 150,
            fd_step: 1e-6,
            eta: 1e-9,
            grid_step: None,
            inner_starts: 3,
            oracle_tol: 1e-4,
            slack_tol: 1e-9,
        }
    }
}

/// A maximisation over channels `W(u|x)`, stored row-major by input symbol.
pub trait ChannelProblem: Sync {
    fn input_law(&self) -> &[f64];
    fn output_len(&self) -> usize;
    fn objective(&self, w: &[f64]) -> Result<f64>;
    /// Rate functionals, each constrained to be at most the rate.
    fn rates(&self, w: &[f64]) -> Vec<f64>;
}

const STAGES: usize = 10;

/// Summary of one optimiser run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizerTrace {
    pub starts: usize,
    pub best_start: usize,
    pub evaluations: usize,
    /// Largest penalty weight reached by the winning start.
    pub final_penalty: f64,
    /// Starts whose end point needed the feasibility projection.
    pub projected_starts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOptimum {
    pub value: f64,
    /// `W(u|x)` row-major, `|X|` rows of length `|U|`.
    pub channel: Vec<f64>,
    pub rates: Vec<f64>,
    pub trace: OptimizerTrace,
}

struct Candidate {
    value: f64,
    channel: Vec<f64>,
    rates: Vec<f64>,
    evaluations: usize,
    penalty: f64,
    projected: bool,
}

fn softmax_rows(theta: &[f64], nu: usize) -> Vec<f64> {
    let mut w = vec![0.0; theta.len()];
    for (t, o) in theta.chunks(nu).zip(w.chunks_mut(nu)) {
        let m = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for (oi, ti) in o.iter_mut().zip(t) {
            *oi = (ti - m).exp();
            s += *oi;
        }
        o.iter_mut().for_each(|v| *v /= s);
    }
    w
}

fn logits_of(w: &[f64]) -> Vec<f64> {
    w.iter().map(|&v| v.max(1e-12).ln()).collect()
}

/// Output marginal of `w` under the problem's input law.
pub fn output_marginal(input: &[f64], w: &[f64], nu: usize) -> Vec<f64> {
    let mut pu = vec![0.0; nu];
    for (px, row) in input.iter().zip(w.chunks(nu)) {
        for (p, v) in pu.iter_mut().zip(row) {
            *p += px * v;
        }
    }
    pu
}

fn violation(rates: &[f64], rate: f64) -> f64 {
    rates.iter().map(|r| (r - rate).max(0.0)).sum()
}

/// Augmented Lagrangian `obj - (1/2mu) Σ [max(0, λ_i + mu c_i)^2 - λ_i^2]`
/// with `c_i = r_i - R`.
struct Penalised<'a, P: ChannelProblem> {
    problem: &'a P,
    rate: f64,
    mu: f64,
    multipliers: Vec<f64>,
    evaluations: usize,
}

impl<P: ChannelProblem> Penalised<'_, P> {
    fn eval(&mut self, theta: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let w = softmax_rows(theta, self.problem.output_len());
        let obj = self.problem.objective(&w)?;
        let rates = self.problem.rates(&w);
        if self.multipliers.len() != rates.len() {
            self.multipliers = vec![0.0; rates.len()];
        }
        let mut pen = 0.0;
        for (r, &l) in rates.iter().zip(&self.multipliers) {
            let a = (l + self.mu * (r - self.rate)).max(0.0);
            pen += a * a - l * l;
        }
        Ok(obj - pen / (2.0 * self.mu))
    }

    fn update_multipliers(&mut self, rates: &[f64]) {
        for (l, r) in self.multipliers.iter_mut().zip(rates) {
            *l = (*l + self.mu * (r - self.rate)).max(0.0);
        }
    }

    fn gradient(&mut self, theta: &[f64], h: f64) -> Result<Vec<f64>> {
        let mut g = vec![0.0; theta.len()];
        let mut probe = theta.to_vec();
        for i in 0..theta.len() {
            probe[i] = theta[i] + h;
            let up = self.eval(&probe)?;
            probe[i] = theta[i] - h;
            let down = self.eval(&probe)?;
            probe[i] = theta[i];
            g[i] = (up - down) / (2.0 * h);
        }
        Ok(g)
    }

    /// BFGS ascent with Armijo backtracking; returns the final penalised value.
    fn ascend(&mut self, theta: &mut [f64], max_iters: usize, h: f64) -> Result<f64> {
        let n = theta.len();
        let identity = |m: &mut Vec<f64>| {
            m.iter_mut().for_each(|v| *v = 0.0);
            (0..n).for_each(|i| m[i * n + i] = 1.0);
        };
        let mut hinv = vec![0.0; n * n];
        identity(&mut hinv);
        let mut fresh = true;
        let mut phi = self.eval(theta)?;
        let mut g = self.gradient(theta, h)?;
        let mut trial = vec![0.0; n];
        let mut small_gains = 0;
        for _ in 0..max_iters {
            if g.iter().fold(0.0f64, |a, v| a.max(v.abs())) < 1e-10 {
                break;
            }
            let mut d: Vec<f64> = (0..n).map(|i| (0..n).map(|j| hinv[i * n + j] * g[j]).sum()).collect();
            let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
            if slope <= 0.0 {
                identity(&mut hinv);
                fresh = true;
                d = g.clone();
                slope = g.iter().map(|v| v * v).sum();
            }
            // cap the largest logit move so one step cannot saturate a row
            let dmax = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let mut t = if dmax > 4.0 { 4.0 / dmax } else { 1.0 };
            let mut accepted = None;
            while t > 1e-12 {
                for i in 0..n {
                    trial[i] = theta[i] + t * d[i];
                }
                let cand = self.eval(&trial)?;
                if cand >= phi + 1e-4 * t * slope {
                    accepted = Some(cand);
                    break;
                }
                t *= 0.5;
            }
            let Some(cand) = accepted else {
                if fresh {
                    break;
                }
                identity(&mut hinv);
                fresh = true;
                continue;
            };
            let gain = cand - phi;
            let s: Vec<f64> = (0..n).map(|i| trial[i] - theta[i]).collect();
            theta.copy_from_slice(&trial);
            phi = cand;
            let g_new = self.gradient(theta, h)?;
            // curvature pair of the minimisation of -phi
            let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            if sy > 1e-14 {
                let rho = 1.0 / sy;
                let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| hinv[i * n + j] * y[j]).sum()).collect();
                let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
                for i in 0..n {
                    for j in 0..n {
                        hinv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                    }
                }
                fresh = false;
            }
            g = g_new;
            if gain <= 1e-13 * (1.0 + phi.abs()) {
                small_gains += 1;
                if small_gains >= 3 {
                    break;
                }
            } else {
                small_gains = 0;
            }
        }
        Ok(phi)
    }
}

fn feasible(rates: &[f64], rate: f64) -> bool {
    rates.iter().all(|&r| r <= rate + 1e-12)
}

/// Pull `w` towards the input-independent channel until every rate fits.
fn project_feasible<P: ChannelProblem>(problem: &P, w: Vec<f64>, rate: f64) -> Result<(Vec<f64>, bool)> {
    let rates = problem.rates(&w);
    if feasible(&rates, rate) {
        return Ok((w, false));
    }
    let nu = problem.output_len();
    let pu = output_marginal(problem.input_law(), &w, nu);
    let indep: Vec<f64> = (0..w.len()).map(|i| pu[i % nu]).collect();
    let mix = |t: f64| -> Vec<f64> { w.iter().zip(&indep).map(|(a, b)| (1.0 - t) * a + t * b).collect() };
    if !feasible(&problem.rates(&indep), rate) {
        return Err(Error::Evaluation(
            "rate functionals do not vanish on the independent channel".into(),
        ));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(&problem.rates(&mix(mid)), rate) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((mix(hi), true))
}

fn run_start<P: ChannelProblem>(
    problem: &P,
    rate: f64,
    cfg: &OptimizerConfig,
    mut theta: Vec<f64>,
) -> Result<Candidate> {
    let mut pen = Penalised {
        problem,
        rate,
        mu: 10.0,
        multipliers: Vec::new(),
        evaluations: 0,
    };
    let mut last = f64::INFINITY;
    for _stage in 0..STAGES {
        pen.ascend(&mut theta, cfg.max_iters, cfg.fd_step)?;
        let rates = problem.rates(&softmax_rows(&theta, problem.output_len()));
        let v = violation(&rates, rate);
        if v <= cfg.slack_tol {
            break;
        }
        pen.update_multipliers(&rates);
        if v > 0.25 * last {
            pen.mu *= 10.0;
        }
        last = v;
    }
    let w = softmax_rows(&theta, problem.output_len());
    let (w, projected) = project_feasible(problem, w, rate)?;
    finish(problem, w, pen.evaluations, pen.mu, projected)
}

fn finish<P: ChannelProblem>(
    problem: &P,
    w: Vec<f64>,
    evaluations: usize,
    penalty: f64,
    projected: bool,
) -> Result<Candidate> {
    let value = problem.objective(&w)?;
    let rates = problem.rates(&w);
    Ok(Candidate {
        value,
        channel: w,
        rates,
        evaluations: evaluations + 1,
        penalty,
        projected,
    })
}

enum Start {
    Logits(Vec<f64>),
    Channel(Vec<f64>),
}

fn build_starts(nx: usize, nu: usize, cfg: &OptimizerConfig, warm: &[Vec<f64>]) -> Vec<Start> {
    let n = nx * nu;
    let mut starts = vec![Start::Logits(vec![0.0; n])];
    let mut diag = vec![0.0; n];
    for x in 0..nx {
        diag[x * nu + x % nu] = 3.0;
    }
    starts.push(Start::Logits(diag));
    for w in warm {
        starts.push(Start::Channel(w.clone()));
    }
    let normal = Normal::new(0.0, 2.0).expect("valid normal");
    let mut k = 0u64;
    while starts.len() < cfg.starts.max(2) + warm.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k);
        starts.push(Start::Logits((0..n).map(|_| normal.sample(&mut rng)).collect()));
        k += 1;
    }
    starts
}

/// Maximise `problem.objective` over channels whose rates stay below `rate`.
///
/// `warm` channels are evaluated as given (after projection) and also used as
/// extra starting points. Ties between starts go to the lowest start index.
pub fn maximize_channel<P: ChannelProblem>(
    problem: &P,
    rate: f64,
    cfg: &OptimizerConfig,
    warm: &[Vec<f64>],
) -> Result<ChannelOptimum> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::Input(format!("rate must be finite and non-negative, got {rate}")));
    }
    let nx = problem.input_law().len();
    let nu = problem.output_len();
    for w in warm {
        if w.len() != nx * nu {
            return Err(Error::dim("warm-start channel", nx * nu, w.len()));
        }
    }
    let starts = build_starts(nx, nu, cfg, warm);
    let results: Vec<Result<Vec<Candidate>>> = starts
        .into_par_iter()
        .map(|s| match s {
            Start::Logits(theta) => run_start(problem, rate, cfg, theta).map(|c| vec![c]),
            Start::Channel(w) => {
                let (pw, projected) = project_feasible(problem, w.clone(), rate)?;
                let as_given = finish(problem, pw, 0, 0.0, projected)?;
                let refined = run_start(problem, rate, cfg, logits_of(&w))?;
                Ok(vec![as_given, refined])
            }
        })
        .collect();

    let mut best: Option<(usize, Candidate)> = None;
    let mut trace = OptimizerTrace {
        starts: results.len(),
        ..Default::default()
    };
    for (i, r) in results.into_iter().enumerate() {
        for c in r? {
            trace.evaluations += c.evaluations;
            trace.projected_starts += c.projected as usize;
            let better = match &best {
                None => true,
                Some((_, b)) => c.value > b.value,
            };
            if better {
                best = Some((i, c));
            }
        }
    }
    let (idx, c) = best.expect("at least two starts");
    trace.best_start = idx;
    trace.final_penalty = c.penalty;
    Ok(ChannelOptimum {
        value: c.value,
        channel: c.channel,
        rates: c.rates,
        trace,
    })
}

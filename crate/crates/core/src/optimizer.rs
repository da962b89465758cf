//! Multistart bounded Nelder–Mead search for the largest Hardy ratio.
//!
//! The objective oscillates quickly (the fast phase rate gives a period of about 0.025 in each
//! time), so the search is gradient-free and restarted from many seeded points. Points whose
//! denominator falls below `den_min` are infeasible: they never win against a feasible point
//! and are ranked among themselves by how close their denominator is to the threshold, which
//! lets a simplex that starts in the infeasible region walk out of it.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{evaluate, BellResult, BellTimes};
use crate::error::{Error, Result};
use crate::oscillation::{MixingMatrix, OscillationParams};
use crate::sampling::substream;

const DIM: usize = 4;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalSearchConfig {
    pub max_iter: usize,
    /// Converged once the spread of `h` across the simplex drops below this.
    pub tol: f64,
    /// Initial simplex edge as a fraction of each box width.
    pub initial_step: f64,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        LocalSearchConfig {
            max_iter: 500,
            tol: 1e-8,
            initial_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// `[lo, hi]` for `l1, l2, r1, r2`. `lo == hi` pins that time.
    pub bounds: [(f64, f64); DIM],
    pub den_min: f64,
    pub n_starts: usize,
    pub seed: u64,
    pub local: LocalSearchConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            bounds: [(1e-5, 0.6); DIM],
            den_min: 0.1,
            n_starts: 256,
            seed: 0x5eed_2007,
            local: LocalSearchConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        for &(lo, hi) in &self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
                return Err(Error::config(format!("bad bounds [{lo}, {hi}]")));
            }
        }
        if !(self.den_min > 0.0) {
            return Err(Error::config("den_min must be positive"));
        }
        if self.n_starts == 0 {
            return Err(Error::config("n_starts must be at least 1"));
        }
        if !(self.local.tol >= 0.0) || !(self.local.initial_step > 0.0) {
            return Err(Error::config(
                "local search needs tol >= 0 and initial_step > 0",
            ));
        }
        Ok(())
    }

    fn contains(&self, bt: &BellTimes) -> bool {
        bt.to_array()
            .iter()
            .zip(&self.bounds)
            .all(|(t, &(lo, hi))| *t >= lo && *t <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StartSummary {
    pub start_index: usize,
    pub start: BellTimes,
    /// `None` when the start never reached a feasible point.
    pub best_h: Option<f64>,
    pub n_evals: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerResult {
    pub best_times: BellTimes,
    pub best: BellResult,
    pub n_evals: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub starts: Vec<StartSummary>,
    /// Best-so-far `h` after each local iteration (`refine_local` only); `-inf` while no
    /// feasible point has been seen.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    feasible: bool,
    /// `h` when feasible, the denominator otherwise.
    value: f64,
}

impl Score {
    fn of(r: &BellResult, den_min: f64) -> Self {
        match r.h {
            Some(h) if r.h_denominator >= den_min && h.is_finite() => Score {
                feasible: true,
                value: h,
            },
            _ => Score {
                feasible: false,
                value: if r.h_denominator.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    r.h_denominator
                },
            },
        }
    }

    fn better_than(&self, other: &Score) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (false, true) => false,
            _ => self.value > other.value,
        }
    }

    fn h(&self) -> f64 {
        if self.feasible {
            self.value
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Maps normalized coordinates of the free dimensions to times and evaluates them.
struct Objective<'a> {
    cfg: &'a OptimizerConfig,
    p: &'a OscillationParams,
    m: &'a MixingMatrix,
    free: Vec<usize>,
    n_evals: u64,
    best: Option<(Score, BellTimes, BellResult)>,
}

impl<'a> Objective<'a> {
    fn new(cfg: &'a OptimizerConfig, p: &'a OscillationParams, m: &'a MixingMatrix) -> Self {
        let free = (0..DIM)
            .filter(|&d| cfg.bounds[d].1 > cfg.bounds[d].0)
            .collect();
        Objective {
            cfg,
            p,
            m,
            free,
            n_evals: 0,
            best: None,
        }
    }

    fn to_times(&self, x: &[f64]) -> BellTimes {
        let mut t = self.cfg.bounds.map(|(lo, _)| lo);
        for (k, &d) in self.free.iter().enumerate() {
            let (lo, hi) = self.cfg.bounds[d];
            t[d] = (lo + x[k].clamp(0.0, 1.0) * (hi - lo)).clamp(lo, hi);
        }
        BellTimes::from_array(t)
    }

    fn to_unit(&self, bt: &BellTimes) -> Vec<f64> {
        let t = bt.to_array();
        self.free
            .iter()
            .map(|&d| {
                let (lo, hi) = self.cfg.bounds[d];
                ((t[d] - lo) / (hi - lo)).clamp(0.0, 1.0)
            })
            .collect()
    }

    fn eval(&mut self, x: &[f64]) -> Score {
        let bt = self.to_times(x);
        let r = evaluate(&bt, self.p, self.m);
        self.n_evals += 1;
        let s = Score::of(&r, self.cfg.den_min);
        if self.best.as_ref().is_none_or(|(b, _, _)| s.better_than(b)) {
            self.best = Some((s, bt, r));
        }
        s
    }

    fn best_score(&self) -> Score {
        self.best.map_or(
            Score {
                feasible: false,
                value: f64::NEG_INFINITY,
            },
            |b| b.0,
        )
    }
}

fn project(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

fn combine(a: &[f64], b: &[f64], coeff: f64) -> Vec<f64> {
    // a + coeff·(a − b), projected into the unit box
    let mut out: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(ai, bi)| ai + coeff * (ai - bi))
        .collect();
    project(&mut out);
    out
}

/// One Nelder–Mead descent from `x0`, restarted around the incumbent after each convergence
/// until a restart stops improving or the iteration budget is spent.
fn nelder_mead(obj: &mut Objective<'_>, x0: Vec<f64>, trace: &mut Vec<f64>) {
    let n = x0.len();
    if n == 0 {
        obj.eval(&x0);
        trace.push(obj.best_score().h());
        return;
    }
    let local = obj.cfg.local;
    let mut iter = 0;
    let mut centre = x0;
    let mut step = local.initial_step;

    loop {
        let restart_from = obj.best_score();
        let mut simplex: Vec<(Vec<f64>, Score)> = Vec::with_capacity(n + 1);
        let s0 = obj.eval(&centre);
        simplex.push((centre.clone(), s0));
        for i in 0..n {
            let mut v = centre.clone();
            v[i] = if v[i] + step <= 1.0 {
                v[i] + step
            } else {
                v[i] - step
            };
            let s = obj.eval(&v);
            simplex.push((v, s));
        }

        let mut converged = false;
        while iter < local.max_iter {
            iter += 1;
            simplex.sort_by(|a, b| {
                if a.1.better_than(&b.1) {
                    std::cmp::Ordering::Less
                } else if b.1.better_than(&a.1) {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            });

            let (best, worst) = (simplex[0].1, simplex[n].1);
            let spread_ok =
                best.feasible && worst.feasible && (best.value - worst.value).abs() <= local.tol;
            let size = simplex[1..]
                .iter()
                .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if spread_ok || size < 1e-12 {
                trace.push(obj.best_score().h());
                converged = true;
                break;
            }

            let mut centroid = vec![0.0; n];
            for (v, _) in &simplex[..n] {
                for (c, vi) in centroid.iter_mut().zip(v) {
                    *c += vi / n as f64;
                }
            }
            let worst_pt = simplex[n].0.clone();
            let second_worst = simplex[n - 1].1;

            let xr = combine(&centroid, &worst_pt, REFLECT);
            let sr = obj.eval(&xr);
            if sr.better_than(&best) {
                let xe = combine(&centroid, &worst_pt, EXPAND);
                let se = obj.eval(&xe);
                simplex[n] = if se.better_than(&sr) {
                    (xe, se)
                } else {
                    (xr, sr)
                };
            } else if sr.better_than(&second_worst) {
                simplex[n] = (xr, sr);
            } else {
                let (xc, sc) = if sr.better_than(&worst) {
                    let xc = combine(&centroid, &worst_pt, CONTRACT * REFLECT);
                    let sc = obj.eval(&xc);
                    (xc, sc)
                } else {
                    let xc = combine(&centroid, &worst_pt, -CONTRACT);
                    let sc = obj.eval(&xc);
                    (xc, sc)
                };
                if sc.better_than(&worst) || sc == worst && sr == worst {
                    simplex[n] = (xc, sc);
                } else {
                    let anchor = simplex[0].0.clone();
                    for item in simplex.iter_mut().skip(1) {
                        let v: Vec<f64> = anchor
                            .iter()
                            .zip(&item.0)
                            .map(|(a, b)| a + SHRINK * (b - a))
                            .collect();
                        let s = obj.eval(&v);
                        *item = (v, s);
                    }
                }
            }
            trace.push(obj.best_score().h());
        }

        let now = obj.best_score();
        let improved = now.better_than(&restart_from)
            && !(now.feasible
                && restart_from.feasible
                && now.value - restart_from.value <= local.tol);
        if !converged || iter >= local.max_iter || !improved {
            break;
        }
        centre = obj
            .best
            .as_ref()
            .map(|b| obj.to_unit(&b.1))
            .unwrap_or(centre);
        step *= 0.5;
    }
}

struct LocalOutcome {
    start: BellTimes,
    best: Option<(Score, BellTimes, BellResult)>,
    n_evals: u64,
    trace: Vec<f64>,
}

fn run_local(
    start: &BellTimes,
    cfg: &OptimizerConfig,
    p: &OscillationParams,
    m: &MixingMatrix,
    keep_trace: bool,
) -> LocalOutcome {
    let mut obj = Objective::new(cfg, p, m);
    let x0 = obj.to_unit(start);
    let mut trace = Vec::new();
    nelder_mead(&mut obj, x0, &mut trace);
    if !keep_trace {
        trace = Vec::new();
    }
    LocalOutcome {
        start: *start,
        best: obj.best,
        n_evals: obj.n_evals,
        trace,
    }
}

fn finish(outcome: LocalOutcome, cfg: &OptimizerConfig) -> Result<OptimizerResult> {
    match outcome.best {
        Some((s, bt, r)) if s.feasible => Ok(OptimizerResult {
            best_times: bt,
            best: r,
            n_evals: outcome.n_evals,
            starts: Vec::new(),
            trace: outcome.trace,
        }),
        _ => Err(Error::NoFeasiblePoint {
            den_min: cfg.den_min,
        }),
    }
}

/// Single local search from `start`; the returned trace is the best-so-far `h` per iteration.
pub fn refine_local(
    start: &BellTimes,
    cfg: &OptimizerConfig,
    p: &OscillationParams,
    m: &MixingMatrix,
) -> Result<OptimizerResult> {
    cfg.validate()?;
    start.validate()?;
    if !cfg.contains(start) {
        return Err(Error::config(format!(
            "start {start:?} lies outside the bounds"
        )));
    }
    finish(run_local(start, cfg, p, m, true), cfg)
}

/// Uniform start point for start `index`; depends only on `(seed, index)`.
fn start_point(cfg: &OptimizerConfig, index: usize) -> BellTimes {
    let mut rng = substream(cfg.seed, index as u64);
    BellTimes::from_array(
        cfg.bounds
            .map(|(lo, hi)| lo + rng.random::<f64>() * (hi - lo)),
    )
}

/// Runs `n_starts` independent local searches and keeps the best feasible result, preferring
/// the lowest start index on ties. The result does not depend on the thread count.
pub fn maximize_h(
    cfg: &OptimizerConfig,
    p: &OscillationParams,
    m: &MixingMatrix,
) -> Result<OptimizerResult> {
    cfg.validate()?;
    let outcomes: Vec<LocalOutcome> = (0..cfg.n_starts)
        .into_par_iter()
        .map(|i| run_local(&start_point(cfg, i), cfg, p, m, false))
        .collect();

    let n_evals = outcomes.iter().map(|o| o.n_evals).sum();
    let starts = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| StartSummary {
            start_index: i,
            start: o.start,
            best_h: o.best.filter(|b| b.0.feasible).map(|b| b.0.value),
            n_evals: o.n_evals,
        })
        .collect();

    let mut winner: Option<(Score, BellTimes, BellResult)> = None;
    for o in &outcomes {
        if let Some(b) = o.best.filter(|b| b.0.feasible) {
            if winner.as_ref().is_none_or(|w| b.0.better_than(&w.0)) {
                winner = Some(b);
            }
        }
    }
    let (_, best_times, best) = winner.ok_or(Error::NoFeasiblePoint {
        den_min: cfg.den_min,
    })?;
    Ok(OptimizerResult {
        best_times,
        best,
        n_evals,
        starts,
        trace: Vec::new(),
    })
}

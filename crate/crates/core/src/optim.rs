//! Limited-memory BFGS for smooth unconstrained problems.
//!
//! Steps are chosen by a bracketing/zoom line search that enforces the strong
//! Wolfe conditions. An accepted step is refined once by a secant estimate of
//! the line minimizer, which makes the search exact on quadratics.

use std::collections::VecDeque;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, invalid_input, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Stop when the max-norm of the gradient drops to this value.
    pub gradient_tolerance: f64,
    pub max_evaluations: usize,
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub sufficient_decrease: f64,
    pub curvature: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { gradient_tolerance: 1e-6, max_evaluations: 1000, memory: 10, sufficient_decrease: 1e-4, curvature: 0.9 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0) || self.max_evaluations == 0 || self.memory == 0 {
            return Err(invalid_config("solver tolerance, budget and memory must be positive"));
        }
        if !(0.0 < self.sufficient_decrease && self.sufficient_decrease < self.curvature && self.curvature < 1.0) {
            return Err(invalid_config("line search constants must satisfy 0 < c1 < c2 < 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    BudgetExhausted,
    LineSearchFailed,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub status: SolverStatus,
    pub iterations: usize,
    pub evaluations: usize,
    /// Objective value at every accepted iterate, starting with `x0`.
    pub values: Vec<f64>,
}

impl Minimum {
    pub fn converged(&self) -> bool {
        self.status == SolverStatus::Converged
    }
}

struct Point {
    x: DVector<f64>,
    f: f64,
    g: DVector<f64>,
}

enum Search {
    Accepted(Point),
    Failed,
    Budget,
    NonFinite,
}

struct Evaluator<'a, F> {
    objective: &'a mut F,
    evaluations: usize,
    budget: usize,
}

impl<F: FnMut(&DVector<f64>) -> (f64, DVector<f64>)> Evaluator<'_, F> {
    fn eval(&mut self, x: DVector<f64>) -> Option<Point> {
        self.evaluations += 1;
        let (f, g) = (self.objective)(&x);
        if f.is_finite() && g.iter().all(|v| v.is_finite()) {
            Some(Point { x, f, g })
        } else {
            None
        }
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }
}

/// Minimizes `objective`, which returns the value and gradient at a point.
pub fn minimize<F>(mut objective: F, x0: DVector<f64>, config: &SolverConfig) -> Result<Minimum>
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    config.validate()?;
    let n = x0.len();
    let mut ev = Evaluator { objective: &mut objective, evaluations: 0, budget: config.max_evaluations };
    let Some(mut cur) = ev.eval(x0) else {
        return Err(invalid_input("objective is not finite at the starting point"));
    };
    if cur.g.len() != n {
        return Err(invalid_input("gradient dimension differs from parameter dimension"));
    }
    let mut history: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::new();
    let mut values = vec![cur.f];
    let mut iterations = 0;

    let status = loop {
        if cur.g.amax() <= config.gradient_tolerance {
            break SolverStatus::Converged;
        }
        if ev.exhausted() {
            break SolverStatus::BudgetExhausted;
        }
        let mut d = two_loop(&cur.g, &history);
        let mut slope = cur.g.dot(&d);
        if !(slope < 0.0) {
            history.clear();
            d = -&cur.g;
            slope = cur.g.dot(&d);
        }
        let alpha0 = if history.is_empty() { (1.0 / d.norm()).min(1.0) } else { 1.0 };
        match line_search(&mut ev, &cur, &d, slope, alpha0, config) {
            Search::Accepted(next) => {
                let s = &next.x - &cur.x;
                let y = &next.g - &cur.g;
                let sy = s.dot(&y);
                if sy > 1e-12 * s.norm() * y.norm() {
                    if history.len() == config.memory {
                        history.pop_front();
                    }
                    history.push_back((s, y, 1.0 / sy));
                }
                cur = next;
                values.push(cur.f);
                iterations += 1;
            }
            Search::Failed => break SolverStatus::LineSearchFailed,
            Search::Budget => break SolverStatus::BudgetExhausted,
            Search::NonFinite => break SolverStatus::NumericalFailure,
        }
    };
    Ok(Minimum { x: cur.x, value: cur.f, gradient: cur.g, status, iterations, evaluations: ev.evaluations, values })
}

/// `−H_k g` from the stored curvature pairs.
fn two_loop(g: &DVector<f64>, history: &VecDeque<(DVector<f64>, DVector<f64>, f64)>) -> DVector<f64> {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * s.dot(&q);
        q.axpy(-a, y, 1.0);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        q *= s.dot(y) / y.dot(y);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q.axpy(a - b, s, 1.0);
    }
    -q
}

/// A trial step: `(alpha, φ(alpha), φ'(alpha), point)`; `point` is `None` at 0.
struct Trial {
    alpha: f64,
    f: f64,
    dphi: f64,
    point: Option<Point>,
}

fn line_search<F>(
    ev: &mut Evaluator<'_, F>,
    cur: &Point,
    d: &DVector<f64>,
    slope0: f64,
    alpha0: f64,
    config: &SolverConfig,
) -> Search
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    const MAX_STEPS: usize = 40;
    let (c1, c2) = (config.sufficient_decrease, config.curvature);
    let f0 = cur.f;
    let armijo = |alpha: f64, f: f64| f <= f0 + c1 * alpha * slope0;
    let curvature_ok = |dphi: f64| dphi.abs() <= -c2 * slope0;

    let trial = |ev: &mut Evaluator<'_, F>, alpha: f64| -> std::result::Result<Trial, Search> {
        if ev.exhausted() {
            return Err(Search::Budget);
        }
        let p = ev.eval(&cur.x + d * alpha).ok_or(Search::NonFinite)?;
        Ok(Trial { alpha, f: p.f, dphi: p.g.dot(d), point: Some(p) })
    };

    // bracketing phase
    let mut prev = Trial { alpha: 0.0, f: f0, dphi: slope0, point: None };
    let mut alpha = alpha0;
    let (mut lo, mut hi) = 'bracket: {
        for i in 0..MAX_STEPS {
            let t = match trial(ev, alpha) {
                Ok(t) => t,
                Err(s) => return s,
            };
            if !armijo(t.alpha, t.f) || (i > 0 && t.f >= prev.f) {
                break 'bracket (prev, t);
            }
            if curvature_ok(t.dphi) {
                return refine(ev, cur, d, slope0, t, armijo, curvature_ok);
            }
            if t.dphi >= 0.0 {
                break 'bracket (t, prev);
            }
            alpha *= 2.0;
            prev = t;
        }
        return Search::Failed;
    };

    // zoom phase: `lo` always satisfies sufficient decrease
    for _ in 0..MAX_STEPS {
        let (a, b) = if lo.alpha < hi.alpha { (lo.alpha, hi.alpha) } else { (hi.alpha, lo.alpha) };
        if b - a <= f64::EPSILON * b.max(1.0) {
            break;
        }
        let guess = cubic_min(lo.alpha, lo.f, lo.dphi, hi.alpha, hi.f, hi.dphi);
        let alpha = guess.clamp(a + 0.1 * (b - a), b - 0.1 * (b - a));
        let t = match trial(ev, alpha) {
            Ok(t) => t,
            Err(s) => return s,
        };
        if !armijo(t.alpha, t.f) || t.f >= lo.f {
            hi = t;
        } else {
            if curvature_ok(t.dphi) {
                return refine(ev, cur, d, slope0, t, armijo, curvature_ok);
            }
            if t.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = t;
        }
    }
    match lo.point {
        Some(p) => Search::Accepted(p),
        None => Search::Failed,
    }
}

/// One secant step towards the exact line minimizer; kept only if it is
/// lower and still satisfies the strong Wolfe conditions.
fn refine<F>(
    ev: &mut Evaluator<'_, F>,
    cur: &Point,
    d: &DVector<f64>,
    slope0: f64,
    t: Trial,
    armijo: impl Fn(f64, f64) -> bool,
    curvature_ok: impl Fn(f64) -> bool,
) -> Search
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let p = t.point.expect("accepted trial has a point");
    let curvature = t.dphi - slope0;
    if curvature > 0.0 && !ev.exhausted() {
        // zero of the linear interpolant of φ' through (0, slope0) and (alpha, dphi)
        let a_q = -t.alpha * slope0 / curvature;
        if a_q > 0.0 && (a_q - t.alpha).abs() > 1e-12 * t.alpha {
            if let Some(q) = ev.eval(&cur.x + d * a_q) {
                if q.f <= p.f && armijo(a_q, q.f) && curvature_ok(q.g.dot(d)) {
                    return Search::Accepted(q);
                }
            }
        }
    }
    Search::Accepted(p)
}

/// Minimizer of the cubic interpolating values and slopes at `a` and `b`.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 || !disc.is_finite() {
        return 0.5 * (a + b);
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    if t.is_finite() {
        t
    } else {
        0.5 * (a + b)
    }
}

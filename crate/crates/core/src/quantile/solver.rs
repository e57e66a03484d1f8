use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::{default_dimension, reconstruct, Basis, Coefficients, Curve, FunctionalSample};
use crate::linalg::{dot, norm2, sym_eigen_desc};
use crate::quantile::objective::{hessian_raw, objective_raw};
use crate::quantile::{DirectionU, ProjectedSample};
use crate::spatial::is_zero;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Gradient-norm tolerance.
    pub tol: f64,
    /// Relative step size below which the iteration counts as stalled.
    pub step_tol: f64,
    pub max_iter: usize,
    /// Hessians with a larger condition number trigger a Weiszfeld step.
    pub max_condition: f64,
    /// Center by the mean curve before solving and add it back afterwards.
    pub center: bool,
    /// Keep the objective value of every iterate.
    pub record_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            step_tol: 1e-12,
            max_iter: 500,
            max_condition: 1e12,
            center: true,
            record_trace: false,
        }
    }
}

/// Minimizer in coefficient space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectedSolution {
    pub q: Vec<f64>,
    pub iterations: usize,
    /// Gradient norm at `q`; for an anchored solution, the reduced gradient norm.
    pub grad_norm: f64,
    pub objective: f64,
    pub converged: bool,
    pub anchored_at_datum: Option<usize>,
    /// The data were collinear (or identical) and the direction lay along the line.
    pub degenerate: bool,
    pub newton_steps: usize,
    pub fallback_steps: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

/// Sample spatial quantile as a curve, with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSolution {
    /// Coordinates of the solution of the (possibly centered) problem.
    pub coefficients: Coefficients,
    /// `center + sum_k coefficients_k phi_k`.
    pub curve: Curve,
    /// Mean curve added back after solving, when centering was on.
    pub center: Option<Curve>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub objective: f64,
    pub converged: bool,
    pub anchored_at_datum: Option<usize>,
    pub degenerate: bool,
}

struct LocalState {
    grad: Vec<f64>,
    coincident: Option<usize>,
    multiplicity: usize,
    dists: Vec<f64>,
}

/// Gradient with coincident data left out of the sum.
fn local_state(q: &[f64], sample: &ProjectedSample, u: &[f64]) -> LocalState {
    let n = sample.n();
    let qn = norm2(q);
    let mut grad = vec![0.0; q.len()];
    let mut diff = vec![0.0; q.len()];
    let mut dists = Vec::with_capacity(n);
    let mut coincident = None;
    let mut multiplicity = 0;
    for (i, row) in sample.rows().enumerate() {
        diff.iter_mut().zip(q.iter().zip(row)).for_each(|(d, (a, b))| *d = a - b);
        let r = norm2(&diff);
        dists.push(r);
        if is_zero(r, qn.max(norm2(row))) {
            coincident.get_or_insert(i);
            multiplicity += 1;
            continue;
        }
        grad.iter_mut().zip(&diff).for_each(|(g, d)| *g += d / r);
    }
    let inv = 1.0 / n as f64;
    grad.iter_mut().zip(u).for_each(|(g, ui)| *g = *g * inv - ui);
    LocalState { grad, coincident, multiplicity, dists }
}

fn slack(f: f64) -> f64 {
    1e-14 * (1.0 + f.abs())
}

fn coordinatewise_median(sample: &ProjectedSample) -> Vec<f64> {
    (0..sample.dim())
        .map(|k| {
            let col: Vec<f64> = sample.rows().map(|r| r[k]).collect();
            crate::stats::median(&col)
        })
        .collect()
}

/// Newton direction, or `None` when the Hessian is too ill-conditioned.
fn newton_direction(q: &[f64], sample: &ProjectedSample, grad: &[f64], max_condition: f64) -> Option<Vec<f64>> {
    let h = hessian_raw(q, sample);
    let (vals, vecs) = sym_eigen_desc(h);
    let max = vals[0];
    let min = *vals.last()?;
    if !(min > 0.0) || max / min > max_condition {
        return None;
    }
    let g = DVector::from_column_slice(grad);
    let coords = vecs.transpose() * g;
    let scaled = DVector::from_fn(coords.len(), |i, _| -coords[i] / vals[i]);
    let p = vecs * scaled;
    Some(p.iter().copied().collect())
}

/// Majorize-minimize step `(sum X_i / r_i + n u) / sum 1 / r_i`.
fn weiszfeld_step(sample: &ProjectedSample, u: &[f64], dists: &[f64]) -> Vec<f64> {
    let n = sample.n() as f64;
    let mut num: Vec<f64> = u.iter().map(|v| v * n).collect();
    let mut den = 0.0;
    for (row, r) in sample.rows().zip(dists) {
        let w = 1.0 / r;
        den += w;
        num.iter_mut().zip(row).for_each(|(a, b)| *a += w * b);
    }
    num.iter().map(|v| v / den).collect()
}

/// Collinear or identical data with `u` along the line: the objective is flat
/// across the line's Hessian and the minimum sits at an order statistic.
fn degenerate_solve(sample: &ProjectedSample, u: &[f64]) -> Option<ProjectedSolution> {
    let n = sample.n();
    let d = sample.dim();
    let mean = sample.mean();
    let centered: Vec<Vec<f64>> = sample
        .rows()
        .map(|r| r.iter().zip(&mean).map(|(a, b)| a - b).collect())
        .collect();
    let spread = centered.iter().map(|c| norm2(c)).fold(0.0, f64::max);
    let anchored = |index: usize| {
        let q = sample.row(index).to_vec();
        let st = local_state(&q, sample, u);
        ProjectedSolution {
            objective: objective_raw(&q, sample, u),
            grad_norm: norm2(&st.grad),
            q,
            iterations: 0,
            converged: true,
            anchored_at_datum: Some(index),
            degenerate: true,
            newton_steps: 0,
            fallback_steps: 0,
            trace: Vec::new(),
        }
    };
    if is_zero(spread, norm2(&mean)) {
        return Some(anchored(0));
    }
    // leading direction of the scatter
    let scatter = nalgebra::DMatrix::from_fn(d, d, |i, j| centered.iter().map(|c| c[i] * c[j]).sum::<f64>());
    let (_, vecs) = sym_eigen_desc(scatter);
    let e: Vec<f64> = vecs.column(0).iter().copied().collect();
    let off_line = centered
        .iter()
        .map(|c| {
            let s = dot(c, &e);
            norm2(&c.iter().zip(&e).map(|(a, b)| a - s * b).collect::<Vec<_>>())
        })
        .fold(0.0, f64::max);
    if off_line > 1e-10 * spread {
        return None;
    }
    let ue = dot(u, &e);
    let u_perp = norm2(&u.iter().zip(&e).map(|(a, b)| a - ue * b).collect::<Vec<_>>());
    if u_perp > 1e-12 {
        return None;
    }
    let mut order: Vec<(f64, usize)> = centered.iter().enumerate().map(|(i, c)| (dot(c, &e), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let nf = n as f64;
    let tie = 1e-12 * spread;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && order[end].0 - order[start].0 <= tie {
            end += 1;
        }
        let below = start as f64;
        let above = (n - end) as f64;
        let mult = (end - start) as f64;
        // subdifferential at this value contains zero
        if ((below - above) / nf - ue).abs() <= mult / nf + 1e-15 {
            return Some(anchored(order[start].1));
        }
        start = end;
    }
    // unreachable for |ue| < 1; fall back to the general solver
    None
}

/// Minimizes the quantile objective over coefficient space.
///
/// Damped Newton with Armijo backtracking; a Weiszfeld step replaces Newton
/// when the Hessian condition number exceeds `max_condition` or the line
/// search fails. An iterate landing on a datum is kept there when the
/// reduced gradient passes the datum-optimality test, otherwise the iteration
/// steps off along the negative reduced gradient.
pub fn solve_projected(
    sample: &ProjectedSample,
    u: &DirectionU,
    opts: &SolveOptions,
) -> Result<ProjectedSolution> {
    let n = sample.n();
    let nf = n as f64;
    let u = u.truncated(sample.dim());
    if let Some(sol) = degenerate_solve(sample, &u) {
        return Ok(sol);
    }
    let mut q = coordinatewise_median(sample);
    let mut f = objective_raw(&q, sample, &u);
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(f);
    }
    let mut newton_steps = 0;
    let mut fallback_steps = 0;
    let mut last_grad_norm = f64::INFINITY;

    for iter in 0..opts.max_iter {
        let st = local_state(&q, sample, &u);
        let gn = norm2(&st.grad);
        last_grad_norm = gn;
        let finish = |q: Vec<f64>, f: f64, gn: f64, anchored: Option<usize>, trace: Vec<f64>, steps: (usize, usize)| {
            ProjectedSolution {
                q,
                iterations: iter,
                grad_norm: gn,
                objective: f,
                converged: true,
                anchored_at_datum: anchored,
                degenerate: false,
                newton_steps: steps.0,
                fallback_steps: steps.1,
                trace,
            }
        };

        if let Some(j) = st.coincident {
            if gn <= st.multiplicity as f64 / nf + 1e-15 {
                return Ok(finish(q, f, gn, Some(j), trace, (newton_steps, fallback_steps)));
            }
            // step off the datum along the negative reduced gradient
            let p: Vec<f64> = st.grad.iter().map(|g| -g / gn).collect();
            let positive: Vec<f64> = st.dists.iter().copied().filter(|r| *r > 0.0).collect();
            let mut t = if positive.is_empty() { 1.0 } else { crate::stats::median(&positive) };
            let floor = opts.step_tol * (1.0 + norm2(&q));
            loop {
                let trial: Vec<f64> = q.iter().zip(&p).map(|(a, b)| a + t * b).collect();
                let ft = objective_raw(&trial, sample, &u);
                if ft < f {
                    q = trial;
                    f = ft;
                    break;
                }
                t *= 0.5;
                if t < floor {
                    return Err(Error::NonConvergence { iterations: iter, grad_norm: gn, last_iterate: q });
                }
            }
            fallback_steps += 1;
            if opts.record_trace {
                trace.push(f);
            }
            continue;
        }

        if gn <= opts.tol {
            return Ok(finish(q, f, gn, None, trace, (newton_steps, fallback_steps)));
        }

        let mut next: Option<(Vec<f64>, f64)> = None;
        if let Some(p) = newton_direction(&q, sample, &st.grad, opts.max_condition) {
            let slope = dot(&st.grad, &p);
            if slope < 0.0 {
                let mut t = 1.0;
                for _ in 0..60 {
                    let trial: Vec<f64> = q.iter().zip(&p).map(|(a, b)| a + t * b).collect();
                    let ft = objective_raw(&trial, sample, &u);
                    if ft <= f + 1e-4 * t * slope + slack(f) {
                        next = Some((trial, ft));
                        newton_steps += 1;
                        break;
                    }
                    t *= 0.5;
                }
            }
        }
        if next.is_none() {
            let trial = weiszfeld_step(sample, &u, &st.dists);
            let ft = objective_raw(&trial, sample, &u);
            if ft <= f + slack(f) {
                next = Some((trial, ft));
                fallback_steps += 1;
            }
        }
        let Some((trial, ft)) = next else {
            return Err(Error::NonConvergence { iterations: iter, grad_norm: gn, last_iterate: q });
        };
        let step: f64 = norm2(&trial.iter().zip(&q).map(|(a, b)| a - b).collect::<Vec<_>>());
        let stalled = step <= opts.step_tol * (1.0 + norm2(&q));
        q = trial;
        f = ft;
        if opts.record_trace {
            trace.push(f);
        }
        if stalled {
            let st = local_state(&q, sample, &u);
            let gn = norm2(&st.grad);
            let ok = gn <= opts.tol
                || st.coincident.is_some() && gn <= st.multiplicity as f64 / nf + 1e-15;
            if ok {
                return Ok(finish(q, f, gn, st.coincident, trace, (newton_steps, fallback_steps)));
            }
            return Err(Error::NonConvergence { iterations: iter + 1, grad_norm: gn, last_iterate: q });
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, grad_norm: last_grad_norm, last_iterate: q })
}

/// Sample spatial `u`-quantile over the span of the first `d` basis functions.
///
/// `d` defaults to `floor(sqrt(n))`, capped at the basis size. With
/// `opts.center` the sample is centered by its mean curve first and the mean
/// is added back to the solution.
pub fn solve_quantile(
    sample: &FunctionalSample,
    u: &DirectionU,
    basis: &Arc<Basis>,
    d: Option<usize>,
    opts: &SolveOptions,
) -> Result<QuantileSolution> {
    let d = d.unwrap_or_else(|| default_dimension(sample.n()).min(basis.size()));
    if d == 0 || d > basis.size() {
        return Err(Error::DimensionOutOfRange { d, max: basis.size() });
    }
    let center = if opts.center { Some(sample.mean_curve()) } else { None };
    let projected = match &center {
        Some(m) => ProjectedSample::new(&sample.shifted(m)?, basis, d)?,
        None => ProjectedSample::new(sample, basis, d)?,
    };
    let sol = solve_projected(&projected, u, opts)?;
    let coefficients = Coefficients::new(sol.q, basis.clone())?;
    let mut curve = reconstruct(&coefficients);
    if let Some(m) = &center {
        curve = curve.add(m)?;
    }
    Ok(QuantileSolution {
        coefficients,
        curve,
        center,
        iterations: sol.iterations,
        grad_norm: sol.grad_norm,
        objective: sol.objective,
        converged: sol.converged,
        anchored_at_datum: sol.anchored_at_datum,
        degenerate: sol.degenerate,
    })
}

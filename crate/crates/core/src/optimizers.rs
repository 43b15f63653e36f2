//! Classical optimizers with exact cost-evaluation accounting.
//!
//! Every routine wraps the caller's cost in a [`Counted`] adaptor and reports
//! the number of calls in [`OptResult::n_evals`]; no other call path exists.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub n_evals: usize,
    pub converged: bool,
}

/// Counts every call of the wrapped cost.
pub struct Counted<F> {
    cost: F,
    count: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    pub fn new(cost: F) -> Self {
        Self { cost, count: 0 }
    }

    pub fn eval(&mut self, x: &[f64]) -> f64 {
        self.count += 1;
        (self.cost)(x)
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Axis-aligned box `[lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::invalid("every lower bound must not exceed its upper bound"));
        }
        Ok(Self { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clip(&self, x: &mut [f64]) {
        for ((v, &l), &u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(l, u);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| l <= v && v <= u)
    }
}

// ---------------------------------------------------------------------------
// Finite differences

fn fd_step(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}

/// Central differences with step `1e-6 * max(1, |x_i|)`, falling back to a
/// one-sided stencil that stays inside the box near a bound.
fn fd_gradient<F: FnMut(&[f64]) -> f64>(cost: &mut Counted<F>, x: &[f64], fx: f64, bounds: &Bounds) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        let (lo, hi) = (bounds.lower[i], bounds.upper[i]);
        let xi = x[i];
        g[i] = if xi - h >= lo && xi + h <= hi {
            probe[i] = xi + h;
            let fp = cost.eval(&probe);
            probe[i] = xi - h;
            let fm = cost.eval(&probe);
            (fp - fm) / (2.0 * h)
        } else if xi + h <= hi {
            probe[i] = xi + h;
            (cost.eval(&probe) - fx) / h
        } else {
            probe[i] = xi - h;
            (fx - cost.eval(&probe)) / h
        };
        probe[i] = xi;
    }
    g
}

// ---------------------------------------------------------------------------
// Bounded quasi-Newton

#[derive(Debug, Clone, Copy)]
pub struct QuasiNewtonSettings {
    pub max_iter: usize,
    /// Stop when the projected gradient's max-norm falls below this.
    pub gtol: f64,
    /// Stop when `(f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1)` falls below this.
    pub ftol: f64,
}

impl Default for QuasiNewtonSettings {
    fn default() -> Self {
        Self { max_iter: 200, gtol: 1e-8, ftol: 1e-12 }
    }
}

fn projected_gradient(x: &[f64], g: &[f64], bounds: &Bounds) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|((&xi, &gi), (&lo, &hi))| {
            if (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0) {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Projected BFGS with finite-difference gradients and a backtracking Armijo
/// search along the projected path `clip(x + t d)`.
///
/// Variables sitting on a bound with the gradient pushing outward are frozen
/// for the step; the inverse-Hessian update is skipped whenever the curvature
/// condition `s.y > 0` fails.
pub fn quasi_newton_minimize<F: FnMut(&[f64]) -> f64>(
    cost: F,
    x0: &[f64],
    bounds: &Bounds,
    settings: QuasiNewtonSettings,
) -> Result<OptResult> {
    let n = x0.len();
    if bounds.dim() != n {
        return Err(Error::DimensionMismatch { expected: bounds.dim(), found: n });
    }
    let mut cost = Counted::new(cost);
    let mut x = x0.to_vec();
    bounds.clip(&mut x);
    let mut f = cost.eval(&x);
    let mut g = fd_gradient(&mut cost, &x, f, bounds);
    let mut h = Matrix::identity(n);
    let mut fresh = true;
    let mut converged = false;

    for _ in 0..settings.max_iter {
        let pg = projected_gradient(&x, &g, bounds);
        if max_norm(&pg) <= settings.gtol {
            converged = true;
            break;
        }
        let free: Vec<bool> = pg.iter().zip(&g).map(|(p, gi)| *p != 0.0 || *gi == 0.0).collect();
        let mut d = vec![0.0; n];
        for i in 0..n {
            if free[i] {
                d[i] = -(0..n).filter(|&j| free[j]).map(|j| h[(i, j)] * g[j]).sum::<f64>();
            }
        }
        if dot(&d, &g) >= 0.0 {
            h = Matrix::identity(n);
            fresh = true;
            d = pg.iter().map(|v| -v).collect();
        }
        let mut t = if fresh { (1.0 / max_norm(&d)).min(1.0) } else { 1.0 };

        let mut accepted = None;
        for _ in 0..50 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            bounds.clip(&mut trial);
            let step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            if max_norm(&step) == 0.0 {
                break;
            }
            let ft = cost.eval(&trial);
            if ft <= f + 1e-4 * dot(&g, &step) {
                accepted = Some((trial, ft, step));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new, s)) = accepted else {
            // No descent left at working precision.
            converged = max_norm(&pg) <= 1e-4;
            break;
        };
        let g_new = fd_gradient(&mut cost, &x_new, f_new, bounds);
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                h = Matrix::identity(n).scaled(scale);
                fresh = false;
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
        let rel = (f - f_new) / f.abs().max(f_new.abs()).max(1.0);
        x = x_new;
        f = f_new;
        g = g_new;
        if rel <= settings.ftol {
            converged = true;
            break;
        }
    }
    Ok(OptResult { x, f, n_evals: cost.count(), converged })
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`.
fn bfgs_update(h: &mut Matrix, s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[(i, j)] * y[j]).sum()).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

// ---------------------------------------------------------------------------
// Grid scan + quasi-Newton

/// Cost values on a regular `N_beta x N_gamma` grid over a half-open box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScan {
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Entry `(i, j)` holds `cost(betas[i], gammas[j])`.
    pub values: Matrix,
    /// Lexicographically smallest index attaining the minimum.
    pub argmin: (usize, usize),
    pub min: f64,
}

/// Grid nodes `lo + k (hi - lo) / N`, `k = 0..N` (upper end excluded).
pub fn grid_nodes(range: (f64, f64), n: usize) -> Vec<f64> {
    let (lo, hi) = range;
    (0..n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

pub fn grid_scan<F: FnMut(&[f64]) -> f64>(
    mut cost: F,
    beta_range: (f64, f64),
    gamma_range: (f64, f64),
    grid_n: usize,
) -> Result<GridScan> {
    if grid_n < 2 {
        return Err(Error::invalid("grid needs at least 2 points per axis"));
    }
    if !(beta_range.1 > beta_range.0 && gamma_range.1 > gamma_range.0) {
        return Err(Error::invalid("grid ranges must be non-empty"));
    }
    let betas = grid_nodes(beta_range, grid_n);
    let gammas = grid_nodes(gamma_range, grid_n);
    let mut values = Matrix::zeros(grid_n, grid_n);
    let mut argmin = (0, 0);
    let mut min = f64::INFINITY;
    for (i, &b) in betas.iter().enumerate() {
        for (j, &g) in gammas.iter().enumerate() {
            let v = cost(&[b, g]);
            if !v.is_finite() {
                return Err(Error::NonFiniteCost { row: i, col: j, point: vec![b, g] });
            }
            values[(i, j)] = v;
            if v < min {
                min = v;
                argmin = (i, j);
            }
        }
    }
    Ok(GridScan { betas, gammas, values, argmin, min })
}

/// Scans a `grid_n x grid_n` grid and polishes the best node with the
/// bounded quasi-Newton method over the closed box of the two ranges.
pub fn grid_seeded_minimize<F: FnMut(&[f64]) -> f64>(
    cost: F,
    beta_range: (f64, f64),
    gamma_range: (f64, f64),
    grid_n: usize,
) -> Result<OptResult> {
    let mut counted = Counted::new(cost);
    let scan = grid_scan(|x| counted.eval(x), beta_range, gamma_range, grid_n)?;
    let seed = [scan.betas[scan.argmin.0], scan.gammas[scan.argmin.1]];
    let bounds = Bounds::new(vec![beta_range.0, gamma_range.0], vec![beta_range.1, gamma_range.1])?;
    let mut local = quasi_newton_minimize(|x| counted.eval(x), &seed, &bounds, QuasiNewtonSettings::default())?;
    if local.f > scan.min {
        local.x = seed.to_vec();
        local.f = scan.min;
    }
    local.n_evals = counted.count();
    Ok(local)
}

// ---------------------------------------------------------------------------
// Direction-set (Powell) minimization in a box

#[derive(Debug, Clone, Copy)]
pub struct DirectionSetSettings {
    /// Stop when a full cycle improves the cost by less than this.
    pub ftol: f64,
    pub max_cycles: usize,
    /// Absolute tolerance of the bracketed line searches.
    pub line_tol: f64,
}

impl Default for DirectionSetSettings {
    fn default() -> Self {
        Self { ftol: 1e-8, max_cycles: 200, line_tol: 1e-8 }
    }
}

/// Brent minimization of a scalar function on `[a, b]`, golden-section steps
/// mixed with parabolic interpolation. Returns `(t, f(t))`.
fn brent_bounded(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, xatol: f64, max_evals: usize) -> (f64, f64) {
    let sqrt_eps = f64::EPSILON.sqrt();
    let golden = 0.5 * (3.0 - 5f64.sqrt());
    let mut fulc = a + golden * (b - a);
    let mut nfc = fulc;
    let mut xf = fulc;
    let mut rat: f64 = 0.0;
    let mut e: f64 = 0.0;
    let mut fx = f(xf);
    let mut evals = 1;
    let mut ffulc = fx;
    let mut fnfc = fx;
    let mut xm = 0.5 * (a + b);
    let mut tol1 = sqrt_eps * xf.abs() + xatol / 3.0;
    let mut tol2 = 2.0 * tol1;

    while (xf - xm).abs() > tol2 - 0.5 * (b - a) && evals < max_evals {
        let mut use_golden = true;
        if e.abs() > tol1 {
            let mut r = (xf - nfc) * (fx - ffulc);
            let mut q = (xf - fulc) * (fx - fnfc);
            let mut p = (xf - fulc) * q - (xf - nfc) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            r = e;
            e = rat;
            if p.abs() < (0.5 * q * r).abs() && p > q * (a - xf) && p < q * (b - xf) {
                rat = p / q;
                let x = xf + rat;
                use_golden = false;
                if (x - a) < tol2 || (b - x) < tol2 {
                    rat = if xm - xf >= 0.0 { tol1 } else { -tol1 };
                }
            }
        }
        if use_golden {
            e = if xf >= xm { a - xf } else { b - xf };
            rat = golden * e;
        }
        let si = if rat >= 0.0 { 1.0 } else { -1.0 };
        let x = xf + si * rat.abs().max(tol1);
        let fu = f(x);
        evals += 1;
        if fu <= fx {
            if x >= xf {
                a = xf;
            } else {
                b = xf;
            }
            fulc = nfc;
            ffulc = fnfc;
            nfc = xf;
            fnfc = fx;
            xf = x;
            fx = fu;
        } else {
            if x < xf {
                a = x;
            } else {
                b = x;
            }
            if fu <= fnfc || nfc == xf {
                fulc = nfc;
                ffulc = fnfc;
                nfc = x;
                fnfc = fu;
            } else if fu <= ffulc || fulc == xf || fulc == nfc {
                fulc = x;
                ffulc = fu;
            }
        }
        xm = 0.5 * (a + b);
        tol1 = sqrt_eps * xf.abs() + xatol / 3.0;
        tol2 = 2.0 * tol1;
    }
    (xf, fx)
}

/// Step interval `[t_lo, t_hi]` keeping `x + t d` inside the box.
fn feasible_interval(x: &[f64], d: &[f64], bounds: &Bounds) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..x.len() {
        if d[i] > 0.0 {
            hi = hi.min((bounds.upper[i] - x[i]) / d[i]);
            lo = lo.max((bounds.lower[i] - x[i]) / d[i]);
        } else if d[i] < 0.0 {
            hi = hi.min((bounds.lower[i] - x[i]) / d[i]);
            lo = lo.max((bounds.upper[i] - x[i]) / d[i]);
        }
    }
    (lo.min(0.0), hi.max(0.0))
}

/// Minimizes along `d` within the box; never returns a worse point.
fn line_minimize<F: FnMut(&[f64]) -> f64>(
    cost: &mut Counted<F>,
    x: &[f64],
    fx: f64,
    d: &[f64],
    bounds: &Bounds,
    tol: f64,
) -> (Vec<f64>, f64) {
    let (t_lo, t_hi) = feasible_interval(x, d, bounds);
    if t_hi - t_lo <= tol {
        return (x.to_vec(), fx);
    }
    let point = |t: f64| {
        let mut p: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + t * di).collect();
        bounds.clip(&mut p);
        p
    };
    let (mut t_best, mut f_best) = brent_bounded(|t| cost.eval(&point(t)), t_lo, t_hi, tol, 500);
    // Brent approaches an end point only to within its tolerance.
    for end in [t_lo, t_hi] {
        if (t_best - end).abs() <= 4.0 * (tol + f64::EPSILON.sqrt() * end.abs()) && t_best != end {
            let fe = cost.eval(&point(end));
            if fe < f_best {
                t_best = end;
                f_best = fe;
            }
        }
    }
    if f_best < fx {
        (point(t_best), f_best)
    } else {
        (x.to_vec(), fx)
    }
}

/// Powell's conjugate-direction method restricted to a box.
///
/// Each cycle line-minimizes along every stored direction, then tries the
/// net displacement of the cycle as a new direction, replacing the direction
/// of largest decrease when Powell's acceptance test passes.
pub fn direction_set_minimize<F: FnMut(&[f64]) -> f64>(
    cost: F,
    x0: &[f64],
    bounds: &Bounds,
    settings: DirectionSetSettings,
) -> Result<OptResult> {
    let n = x0.len();
    if bounds.dim() != n {
        return Err(Error::DimensionMismatch { expected: bounds.dim(), found: n });
    }
    if !bounds.contains(x0) {
        return Err(Error::invalid("direction-set start point lies outside the box"));
    }
    let mut cost = Counted::new(cost);
    let mut x = x0.to_vec();
    let mut f = cost.eval(&x);
    let mut dirs: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut converged = false;

    for _ in 0..settings.max_cycles {
        let x_start = x.clone();
        let f_start = f;
        let mut biggest_drop = 0.0;
        let mut biggest_idx = 0;
        for (i, d) in dirs.iter().enumerate() {
            let f_before = f;
            (x, f) = line_minimize(&mut cost, &x, f, d, bounds, settings.line_tol);
            if f_before - f > biggest_drop {
                biggest_drop = f_before - f;
                biggest_idx = i;
            }
        }
        if f_start - f < settings.ftol {
            converged = true;
            break;
        }
        let shift: Vec<f64> = x.iter().zip(&x_start).map(|(a, b)| a - b).collect();
        let len = shift.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len == 0.0 {
            continue;
        }
        let mut extrapolated: Vec<f64> = x.iter().zip(&shift).map(|(a, s)| a + s).collect();
        bounds.clip(&mut extrapolated);
        let f_ext = cost.eval(&extrapolated);
        if f_ext < f_start {
            let t = 2.0 * (f_start - 2.0 * f + f_ext) * (f_start - f - biggest_drop).powi(2)
                - biggest_drop * (f_start - f_ext).powi(2);
            if t < 0.0 {
                let unit: Vec<f64> = shift.iter().map(|v| v / len).collect();
                (x, f) = line_minimize(&mut cost, &x, f, &unit, bounds, settings.line_tol);
                dirs[biggest_idx] = dirs[n - 1].clone();
                dirs[n - 1] = unit;
            }
        }
    }
    Ok(OptResult { x, f, n_evals: cost.count(), converged })
}

// ---------------------------------------------------------------------------
// Masked scalar maximization

/// Value a scalar objective returns to mark an infeasible point.
pub const INFEASIBLE: f64 = -1.0;

#[derive(Debug, Clone, Copy)]
pub struct ScalarSearchSettings {
    pub lower: f64,
    pub upper: f64,
    pub initial_radius: f64,
    /// The search stops once the radius shrinks below this.
    pub min_radius: f64,
    /// Cap on objective evaluations.
    pub max_evals: usize,
}

impl Default for ScalarSearchSettings {
    fn default() -> Self {
        Self { lower: 0.01, upper: 1.0, initial_radius: 0.2, min_radius: 0.01, max_evals: 50 }
    }
}

/// Derivative-free maximization on `[lower, upper]` with a shrinking trust
/// radius.
///
/// From the incumbent `a` the search probes `a + r` then `a - r` (clipped to
/// the interval). The first probe that strictly improves on the incumbent is
/// accepted and the radius kept; otherwise the radius halves. Infeasible
/// values ([`INFEASIBLE`]) never count as improvements, and any feasible
/// value improves on an infeasible incumbent. Repeated points are served from
/// a cache and not re-evaluated.
///
/// When every probe was infeasible the start point is returned with
/// `converged = false`.
pub fn scalar_maximize<F: FnMut(f64) -> f64>(f: F, alpha0: f64, settings: ScalarSearchSettings) -> Result<OptResult> {
    if !(settings.lower > 0.0 && settings.lower < settings.upper) {
        return Err(Error::invalid("scalar search interval must satisfy 0 < lower < upper"));
    }
    if !(alpha0 > 0.0 && alpha0 <= settings.upper) {
        return Err(Error::invalid(format!("start point {alpha0} lies outside (0, {}]", settings.upper)));
    }
    let mut f = f;
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut evals = 0usize;
    let mut probe = |a: f64, evals: &mut usize| -> Option<f64> {
        if let Some(&v) = cache.get(&a.to_bits()) {
            return Some(v);
        }
        if *evals >= settings.max_evals {
            return None;
        }
        *evals += 1;
        let v = f(a);
        cache.insert(a.to_bits(), v);
        Some(v)
    };
    let better = |cand: f64, inc: f64| cand != INFEASIBLE && (inc == INFEASIBLE || cand > inc);

    let mut best_a = alpha0;
    let mut best_f = probe(alpha0, &mut evals).unwrap_or(INFEASIBLE);
    let mut radius = settings.initial_radius;
    'search: while radius >= settings.min_radius {
        let mut moved = false;
        for cand in [best_a + radius, best_a - radius] {
            let cand = cand.clamp(settings.lower, settings.upper);
            if cand == best_a {
                continue;
            }
            let Some(v) = probe(cand, &mut evals) else { break 'search };
            if better(v, best_f) {
                best_a = cand;
                best_f = v;
                moved = true;
                break;
            }
        }
        if !moved {
            radius *= 0.5;
        }
    }
    let feasible = best_f != INFEASIBLE;
    Ok(OptResult {
        x: vec![if feasible { best_a } else { alpha0 }],
        f: best_f,
        n_evals: evals,
        converged: feasible,
    })
}

//! Matrix-free Krylov solvers with Jacobi preconditioning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce::{dot, norm2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    Symmetric,
    General,
}

/// A square linear map applied without assembling a matrix.
pub trait LinearOperator {
    fn len(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn symmetry(&self) -> Symmetry;
    /// Exact diagonal, if cheaply available.
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

/// Diagonal of a five-point operator on an `nx x ny` layout, by probing nine colour classes.
pub fn probe_diagonal(op: &dyn LinearOperator, nx: usize, ny: usize) -> Vec<f64> {
    let n = op.len();
    assert_eq!(n, nx * ny);
    let mut diag = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut y = vec![0.0; n];
    for ci in 0..3 {
        for cj in 0..3 {
            e.fill(0.0);
            for j in (cj..ny).step_by(3) {
                for i in (ci..nx).step_by(3) {
                    e[j * nx + i] = 1.0;
                }
            }
            op.apply(&e, &mut y);
            for j in (cj..ny).step_by(3) {
                for i in (ci..nx).step_by(3) {
                    diag[j * nx + i] = y[j * nx + i];
                }
            }
        }
    }
    diag
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Cg,
    BiCgStab,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    Breakdown,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// True residual `|b - A x| / |b|` of the returned iterate.
    pub final_residual: f64,
    pub status: SolveStatus,
    pub method: Method,
    /// Monitored relative residual after each iteration.
    pub history: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol: f64,
    /// Defaults to `10 sqrt(n)` when unset.
    pub max_iter: Option<usize>,
    pub precondition: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: None, precondition: true }
    }
}

impl SolverSettings {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn iteration_cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| ((10.0 * (n as f64).sqrt()).ceil() as usize).max(20))
    }
}

fn jacobi(op: &dyn LinearOperator, settings: &SolverSettings) -> Vec<f64> {
    let n = op.len();
    if !settings.precondition {
        return vec![1.0; n];
    }
    match op.diagonal() {
        Some(d) => d.iter().map(|v| if *v != 0.0 && v.is_finite() { 1.0 / v } else { 1.0 }).collect(),
        None => vec![1.0; n],
    }
}

fn true_residual(op: &dyn LinearOperator, b: &[f64], x: &[f64], scratch: &mut [f64]) -> f64 {
    op.apply(x, scratch);
    let s = crate::reduce::sum_by(0, b.len(), |i| (b[i] - scratch[i]) * (b[i] - scratch[i]));
    s.sqrt()
}

/// Preconditioned conjugate gradients with minimal-residual smoothing.
///
/// The smoothed sequence has a nonincreasing residual norm; it is the one
/// returned and monitored.
pub fn cg(op: &dyn LinearOperator, b: &[f64], x0: &[f64], settings: &SolverSettings) -> (Vec<f64>, SolveReport) {
    let n = op.len();
    let minv = jacobi(op, settings);
    let cap = settings.iteration_cap(n);
    let bnorm = norm2(b);
    let mut report =
        SolveReport { iterations: 0, final_residual: 0.0, status: SolveStatus::Converged, method: Method::Cg, history: vec![] };
    if bnorm == 0.0 {
        return (vec![0.0; n], report);
    }
    let target = settings.tol * bnorm;

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut s = x.clone();
    let mut rho_s = r.clone();
    let mut z: Vec<f64> = (0..n).map(|i| minv[i] * r[i]).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut dr = vec![0.0; n];

    let mut smoothed = norm2(&rho_s);
    if smoothed <= target {
        report.final_residual = smoothed / bnorm;
        return (x, report);
    }
    let mut status = SolveStatus::MaxIter;
    let mut it = 0;
    while it < cap {
        it += 1;
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            status = SolveStatus::Breakdown;
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        // Minimal residual smoothing.
        for i in 0..n {
            dr[i] = r[i] - rho_s[i];
        }
        let dd = dot(&dr, &dr);
        if dd > 0.0 {
            let eta = -dot(&rho_s, &dr) / dd;
            for i in 0..n {
                s[i] += eta * (x[i] - s[i]);
                rho_s[i] += eta * dr[i];
            }
        }
        smoothed = norm2(&rho_s);
        report.history.push(smoothed / bnorm);
        if smoothed <= target {
            status = SolveStatus::Converged;
            break;
        }
        for i in 0..n {
            z[i] = minv[i] * r[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    report.iterations = it;
    report.status = status;
    report.final_residual = true_residual(op, b, &s, &mut ap) / bnorm;
    (s, report)
}

/// Right-preconditioned BiCGSTAB.
pub fn bicgstab(op: &dyn LinearOperator, b: &[f64], x0: &[f64], settings: &SolverSettings) -> (Vec<f64>, SolveReport) {
    let n = op.len();
    let minv = jacobi(op, settings);
    let cap = settings.iteration_cap(n);
    let bnorm = norm2(b);
    let mut report =
        SolveReport { iterations: 0, final_residual: 0.0, status: SolveStatus::Converged, method: Method::BiCgStab, history: vec![] };
    if bnorm == 0.0 {
        return (vec![0.0; n], report);
    }
    let target = settings.tol * bnorm;
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    if norm2(&r) <= target {
        report.final_residual = norm2(&r) / bnorm;
        return (x, report);
    }
    let r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut sv = vec![0.0; n];
    let mut sh = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut status = SolveStatus::MaxIter;
    let mut it = 0;
    let tiny = f64::EPSILON * f64::EPSILON;
    while it < cap {
        it += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < tiny * bnorm * bnorm || omega == 0.0 {
            status = SolveStatus::Breakdown;
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            ph[i] = minv[i] * p[i];
        }
        op.apply(&ph, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 || !rv.is_finite() {
            status = SolveStatus::Breakdown;
            break;
        }
        alpha = rho / rv;
        for i in 0..n {
            sv[i] = r[i] - alpha * v[i];
        }
        if norm2(&sv) <= target {
            for i in 0..n {
                x[i] += alpha * ph[i];
            }
            report.history.push(norm2(&sv) / bnorm);
            status = SolveStatus::Converged;
            break;
        }
        for i in 0..n {
            sh[i] = minv[i] * sv[i];
        }
        op.apply(&sh, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            status = SolveStatus::Breakdown;
            break;
        }
        omega = dot(&t, &sv) / tt;
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = sv[i] - omega * t[i];
        }
        let rn = norm2(&r);
        report.history.push(rn / bnorm);
        if rn <= target {
            status = SolveStatus::Converged;
            break;
        }
    }
    report.iterations = it;
    report.status = status;
    report.final_residual = true_residual(op, b, &x, &mut t) / bnorm;
    (x, report)
}

/// CG for symmetric operators, BiCGSTAB otherwise or after a CG breakdown.
pub fn solve(op: &dyn LinearOperator, b: &[f64], x0: &[f64], settings: &SolverSettings) -> (Vec<f64>, SolveReport) {
    if op.symmetry() == Symmetry::Symmetric {
        let (x, rep) = cg(op, b, x0, settings);
        if rep.status != SolveStatus::Breakdown {
            return (x, rep);
        }
        log::debug!("CG breakdown after {} iterations, retrying with BiCGSTAB", rep.iterations);
        let (x2, mut rep2) = bicgstab(op, b, x0, settings);
        rep2.iterations += rep.iterations;
        return (x2, rep2);
    }
    bicgstab(op, b, x0, settings)
}

/// [`solve`], turning non-convergence into [`Error::SolverDivergence`].
pub fn solve_checked(op: &dyn LinearOperator, b: &[f64], x0: &[f64], settings: &SolverSettings) -> Result<(Vec<f64>, SolveReport)> {
    let (x, rep) = solve(op, b, x0, settings);
    if rep.status != SolveStatus::Converged {
        return Err(Error::SolverDivergence { iterations: rep.iterations, residual: rep.final_residual });
    }
    Ok((x, rep))
}

/// Dense matrix wrapper, mainly for tests and tiny problems.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub n: usize,
    pub a: Vec<f64>,
    pub symmetric: bool,
}

impl LinearOperator for DenseOperator {
    fn len(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            y[i] = dot(&self.a[i * self.n..(i + 1) * self.n], x);
        }
    }
    fn symmetry(&self) -> Symmetry {
        if self.symmetric {
            Symmetry::Symmetric
        } else {
            Symmetry::General
        }
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        Some((0..self.n).map(|i| self.a[i * self.n + i]).collect())
    }
}

//! Robust location and scatter: median/MAD, geometric median, FastMCD,
//! robust Mahalanobis distances and the Hardin–Rocke F cutoff.

use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::error::{FdError, Result};
use crate::rng::RandomSource;
use crate::stats;

/// Normal-consistency constant for the MAD.
pub const MAD_CONSTANT: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustLocationScale {
    pub median: f64,
    /// Scaled by [`MAD_CONSTANT`].
    pub mad: f64,
}

pub fn median_mad(xs: &[f64]) -> Result<RobustLocationScale> {
    if xs.is_empty() {
        return Err(FdError::EmptyInput);
    }
    let median = stats::median(xs);
    let deviations: Vec<f64> = xs.iter().map(|x| (x - median).abs()).collect();
    Ok(RobustLocationScale {
        median,
        mad: MAD_CONSTANT * stats::median(&deviations),
    })
}

pub const GEOMETRIC_MEDIAN_TOL: f64 = 1e-10;
pub const GEOMETRIC_MEDIAN_MAX_ITER: usize = 1000;

/// Spatial (L1) median of the rows of `points` by Weiszfeld iteration with
/// the Vardi–Zhang modification for iterates that land on a data point.
///
/// Converges when the step is at most `tol` relative to max(1, ‖y‖).
pub fn geometric_median(points: ArrayView2<'_, f64>, tol: f64) -> Result<Vec<f64>> {
    let (m, d) = points.dim();
    if m == 0 || d == 0 {
        return Err(FdError::EmptyInput);
    }
    let mut y: Vec<f64> = (0..d)
        .map(|k| stats::median(&points.column(k).to_vec()))
        .collect();
    let mut delta = vec![0.0; d];
    for iter in 0..GEOMETRIC_MEDIAN_MAX_ITER {
        // Iterates approach an optimal data point only sublinearly.
        if iter >= 20 && iter % 10 == 0 {
            match nearest_point(points, &y) {
                NearestPoint::Optimal(x) => return Ok(x),
                NearestPoint::Jump(x) if objective(points, &x) < objective(points, &y) => y = x,
                _ => {}
            }
            // Off the data points the objective is smooth; Newton finishes
            // what Weiszfeld does linearly.
            if let Some(x) = newton_step(points, &y) {
                y = x;
            }
        }
        let mut weight_sum = 0.0;
        let mut weighted = vec![0.0; d];
        let mut coincident = 0usize;
        for row in points.rows() {
            let dist = row
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if dist <= tol.max(f64::EPSILON) * (1.0 + norm(&y)) {
                coincident += 1;
                continue;
            }
            let w = 1.0 / dist;
            weight_sum += w;
            for (acc, x) in weighted.iter_mut().zip(row.iter()) {
                *acc += w * x;
            }
        }
        if weight_sum == 0.0 {
            return Ok(y);
        }
        let target: Vec<f64> = weighted.iter().map(|v| v / weight_sum).collect();
        let next: Vec<f64> = if coincident == 0 {
            target
        } else {
            // R = Σ (x_i − y)/‖x_i − y‖ = weight_sum·(T − y).
            for k in 0..d {
                delta[k] = weight_sum * (target[k] - y[k]);
            }
            let r = norm(&delta);
            let eta = coincident as f64;
            if r <= eta {
                return Ok(y);
            }
            let keep = eta / r;
            (0..d)
                .map(|k| (1.0 - keep) * target[k] + keep * y[k])
                .collect()
        };
        let step = next.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        y = next;
        if step <= tol * norm(&y).max(1.0) {
            return Ok(y);
        }
    }
    Err(FdError::NonConvergence {
        iterations: GEOMETRIC_MEDIAN_MAX_ITER,
    })
}

enum NearestPoint {
    Optimal(Vec<f64>),
    /// First-order estimate of an optimum lying close to a data point.
    Jump(Vec<f64>),
    Neither,
}

/// Checks the data point x_j nearest `y` against the optimality condition
/// ‖R_j‖ ≤ #{i : x_i = x_j}, R_j = Σ_{x_i ≠ x_j} (x_i − x_j)/‖x_i − x_j‖.
/// When it fails narrowly the optimum sits at x_j + r·R_j/‖R_j‖ with
/// r ≈ (‖R_j‖ − mult)/(uᵀHu), H the Hessian of the remaining terms.
fn nearest_point(points: ArrayView2<'_, f64>, y: &[f64]) -> NearestPoint {
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    let rows: Vec<Vec<f64>> = points.rows().into_iter().map(|r| r.to_vec()).collect();
    let Some(nearest) = rows.iter().min_by(|a, b| dist(a, y).total_cmp(&dist(b, y))) else {
        return NearestPoint::Neither;
    };
    let mut pull = vec![0.0; y.len()];
    let mut multiplicity = 0.0;
    for x in &rows {
        let r = dist(x, nearest);
        if r == 0.0 {
            multiplicity += 1.0;
            continue;
        }
        for (acc, (a, b)) in pull.iter_mut().zip(x.iter().zip(nearest)) {
            *acc += (a - b) / r;
        }
    }
    let strength = norm(&pull);
    if strength <= multiplicity {
        return NearestPoint::Optimal(nearest.clone());
    }
    let u: Vec<f64> = pull.iter().map(|v| v / strength).collect();
    let mut curvature = 0.0;
    let mut gap = f64::INFINITY;
    for x in &rows {
        let r = dist(x, nearest);
        if r == 0.0 {
            continue;
        }
        gap = gap.min(r);
        let along: f64 = x.iter().zip(nearest).zip(&u).map(|((a, b), c)| (a - b) / r * c).sum();
        curvature += (1.0 - along * along) / r;
    }
    let step = (strength - multiplicity) / curvature;
    if !(step.is_finite() && step > 0.0) || step >= 0.5 * gap {
        return NearestPoint::Neither;
    }
    NearestPoint::Jump(nearest.iter().zip(&u).map(|(a, c)| a + step * c).collect())
}

/// Damped Newton step on Σ‖x_i − y‖, or `None` if `y` sits on a data point,
/// the Hessian is singular or no step length lowers the objective.
fn newton_step(points: ArrayView2<'_, f64>, y: &[f64]) -> Option<Vec<f64>> {
    let d = y.len();
    let mut grad = DVector::<f64>::zeros(d);
    let mut hess = DMatrix::<f64>::zeros(d, d);
    for row in points.rows() {
        let diff: Vec<f64> = y.iter().zip(row.iter()).map(|(a, b)| a - b).collect();
        let r = norm(&diff);
        if r == 0.0 {
            return None;
        }
        for a in 0..d {
            grad[a] += diff[a] / r;
            for b in 0..d {
                let identity = if a == b { 1.0 } else { 0.0 };
                hess[(a, b)] += (identity - diff[a] * diff[b] / (r * r)) / r;
            }
        }
    }
    let step = hess.cholesky()?.solve(&grad);
    let start = objective(points, y);
    let mut scale = 1.0;
    for _ in 0..30 {
        let x: Vec<f64> = (0..d).map(|k| y[k] - scale * step[k]).collect();
        if objective(points, &x) < start {
            return Some(x);
        }
        scale *= 0.5;
    }
    None
}

fn objective(points: ArrayView2<'_, f64>, y: &[f64]) -> f64 {
    points
        .rows()
        .into_iter()
        .map(|r| r.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Raw (unreweighted) MCD fit.
#[derive(Debug, Clone, PartialEq)]
pub struct McdFit {
    pub center: DVector<f64>,
    /// h-subset covariance multiplied by the χ² consistency factor when
    /// `consistency_corrected` is set.
    pub covariance: DMatrix<f64>,
    /// Sorted indices of the optimal h-subset.
    pub subset_indices: Vec<usize>,
    pub coverage_fraction: f64,
    pub consistency_corrected: bool,
    /// Log-determinant of the uncorrected h-subset covariance.
    pub log_det: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McdConfig {
    /// Fraction of points in the subset; `None` gives ⌊(m + d + 1)/2⌋/m.
    pub coverage: Option<f64>,
    pub n_trials: usize,
    pub initial_csteps: usize,
    pub n_best: usize,
    pub max_csteps: usize,
}

impl Default for McdConfig {
    fn default() -> Self {
        Self {
            coverage: None,
            n_trials: 500,
            initial_csteps: 2,
            n_best: 10,
            max_csteps: 100,
        }
    }
}

/// Subset size for `m` points in `d` dimensions.
pub fn subset_size(m: usize, d: usize, coverage: Option<f64>) -> Result<usize> {
    let min_h = (m + d + 1) / 2;
    match coverage {
        None => Ok(min_h.min(m)),
        Some(c) if (0.5..=1.0).contains(&c) => {
            Ok(((c * m as f64).ceil() as usize).clamp(min_h.min(m), m))
        }
        Some(c) => Err(FdError::InvalidCoverage(c)),
    }
}

fn to_dmatrix(points: ArrayView2<'_, f64>) -> DMatrix<f64> {
    let (m, d) = points.dim();
    DMatrix::from_fn(m, d, |i, k| points[[i, k]])
}

struct Estimate {
    center: DVector<f64>,
    cov: DMatrix<f64>,
    log_det: f64,
    chol_l: DMatrix<f64>,
}

/// Mean and divisor-|subset| covariance; `None` when the covariance is
/// numerically singular (correlation determinant below 1e-12).
fn estimate(x: &DMatrix<f64>, subset: &[usize]) -> Option<Estimate> {
    let d = x.ncols();
    let k = subset.len() as f64;
    let mut center = DVector::zeros(d);
    for &i in subset {
        center += x.row(i).transpose();
    }
    center /= k;
    let mut cov = DMatrix::zeros(d, d);
    for &i in subset {
        let r = x.row(i).transpose() - &center;
        cov += &r * r.transpose();
    }
    cov /= k;
    let log_diag: f64 = (0..d)
        .map(|j| cov[(j, j)])
        .map(|v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
        .sum();
    if !log_diag.is_finite() {
        return None;
    }
    let chol = cov.clone().cholesky()?;
    let l = chol.l();
    let log_det = 2.0 * (0..d).map(|j| l[(j, j)].ln()).sum::<f64>();
    if !log_det.is_finite() || log_det - log_diag < (1e-12f64).ln() {
        return None;
    }
    Some(Estimate {
        center,
        cov,
        log_det,
        chol_l: l,
    })
}

fn squared_distances_chol(x: &DMatrix<f64>, center: &DVector<f64>, l: &DMatrix<f64>) -> Vec<f64> {
    (0..x.nrows())
        .map(|i| {
            let r = x.row(i).transpose() - center;
            let z = l
                .solve_lower_triangular(&r)
                .expect("cholesky factor has a positive diagonal");
            z.norm_squared()
        })
        .collect()
}

/// Indices of the h smallest distances, ties broken by index, sorted.
fn smallest_h(dist: &[f64], h: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    idx.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    idx.truncate(h);
    idx.sort_unstable();
    idx
}

struct Candidate {
    subset: Vec<usize>,
    est: Estimate,
}

fn c_step(x: &DMatrix<f64>, est: &Estimate, h: usize) -> Vec<usize> {
    smallest_h(&squared_distances_chol(x, &est.center, &est.chol_l), h)
}

fn run_trial(x: &DMatrix<f64>, h: usize, csteps: usize, rng: &mut RandomSource) -> Option<Candidate> {
    let (m, d) = x.shape();
    let mut start = rng.sample_indices(m, d + 1);
    let initial = loop {
        if let Some(e) = estimate(x, &start) {
            break e;
        }
        if start.len() >= h {
            return None;
        }
        let extra = loop {
            let j = rng.below(m);
            if !start.contains(&j) {
                break j;
            }
        };
        start.push(extra);
    };
    let mut subset = c_step(x, &initial, h);
    let mut est = estimate(x, &subset)?;
    for _ in 0..csteps {
        subset = c_step(x, &est, h);
        est = estimate(x, &subset)?;
    }
    Some(Candidate { subset, est })
}

fn refine(x: &DMatrix<f64>, mut cand: Candidate, h: usize, max_steps: usize) -> Candidate {
    for _ in 0..max_steps {
        let next = c_step(x, &cand.est, h);
        if next == cand.subset {
            break;
        }
        match estimate(x, &next) {
            Some(est) if est.log_det <= cand.est.log_det => {
                cand = Candidate { subset: next, est };
            }
            _ => break,
        }
    }
    cand
}

/// χ² consistency factor for an h-of-m subset covariance in d dimensions.
pub fn mcd_consistency_factor(m: usize, h: usize, d: usize) -> f64 {
    if h >= m {
        return 1.0;
    }
    let alpha = h as f64 / m as f64;
    let q = ChiSquared::new(d as f64).expect("d > 0").inverse_cdf(alpha);
    alpha / ChiSquared::new(d as f64 + 2.0).expect("d > 0").cdf(q)
}

/// FastMCD with default settings and the given coverage.
pub fn fast_mcd(points: ArrayView2<'_, f64>, coverage: Option<f64>, rng: &mut RandomSource) -> Result<McdFit> {
    let config = McdConfig {
        coverage,
        ..McdConfig::default()
    };
    fast_mcd_with(points, &config, rng)
}

/// FastMCD: random (d+1)-subsets grown until non-singular, a few
/// concentration steps each, then the best candidates iterated to
/// convergence. Trials draw from child sources forked up front, so the result
/// does not depend on the rayon thread count.
pub fn fast_mcd_with(points: ArrayView2<'_, f64>, config: &McdConfig, rng: &mut RandomSource) -> Result<McdFit> {
    let (m, d) = points.dim();
    if d == 0 || m <= 2 * d {
        return Err(FdError::TooFewCurves {
            required: 2 * d + 1,
            found: m,
        });
    }
    for v in points.iter() {
        if !v.is_finite() {
            return Err(FdError::InvalidParameter("non-finite point passed to MCD".into()));
        }
    }
    let h = subset_size(m, d, config.coverage)?;
    let x = to_dmatrix(points);

    let best = if h == m {
        let all: Vec<usize> = (0..m).collect();
        let est = estimate(&x, &all).ok_or(FdError::SingularSubsets)?;
        Candidate { subset: all, est }
    } else {
        let sources: Vec<RandomSource> = (0..config.n_trials).map(|_| rng.fork()).collect();
        let trials: Vec<Option<Candidate>> = sources
            .into_par_iter()
            .map(|mut r| run_trial(&x, h, config.initial_csteps, &mut r))
            .collect();
        let mut ranked: Vec<(usize, Candidate)> = trials
            .into_iter()
            .enumerate()
            .filter_map(|(k, c)| c.map(|c| (k, c)))
            .collect();
        if ranked.is_empty() {
            return Err(FdError::SingularSubsets);
        }
        ranked.sort_by(|a, b| a.1.est.log_det.total_cmp(&b.1.est.log_det).then(a.0.cmp(&b.0)));
        ranked.truncate(config.n_best);
        let refined: Vec<Candidate> = ranked
            .into_par_iter()
            .map(|(_, c)| refine(&x, c, h, config.max_csteps))
            .collect();
        refined
            .into_iter()
            .reduce(|a, b| if b.est.log_det < a.est.log_det { b } else { a })
            .expect("at least one candidate")
    };

    let factor = mcd_consistency_factor(m, h, d);
    Ok(McdFit {
        center: best.est.center,
        covariance: best.est.cov * factor,
        subset_indices: best.subset,
        coverage_fraction: h as f64 / m as f64,
        consistency_corrected: true,
        log_det: best.est.log_det,
    })
}

/// Squared Mahalanobis distances of the rows of `points`.
///
/// When the Cholesky factorization fails, 1e-12·trace/d is added to the
/// diagonal once before giving up with `SingularCovariance`.
pub fn mahalanobis_squared(
    points: ArrayView2<'_, f64>,
    center: &DVector<f64>,
    covariance: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let d = covariance.nrows();
    if points.ncols() != d || center.len() != d || covariance.ncols() != d {
        return Err(FdError::InvalidParameter("dimension mismatch in distance computation".into()));
    }
    let chol = match covariance.clone().cholesky() {
        Some(c) => c,
        None => {
            let ridge = 1e-12 * covariance.trace() / d as f64;
            let mut reg = covariance.clone();
            for j in 0..d {
                reg[(j, j)] += ridge;
            }
            reg.cholesky().ok_or(FdError::SingularCovariance)?
        }
    };
    let l = chol.l();
    if (0..d).any(|j| l[(j, j)] <= 0.0 || !l[(j, j)].is_finite()) {
        return Err(FdError::SingularCovariance);
    }
    Ok(squared_distances_chol(&to_dmatrix(points), center, &l))
}

pub fn robust_distances(points: ArrayView2<'_, f64>, fit: &McdFit) -> Result<Vec<f64>> {
    mahalanobis_squared(points, &fit.center, &fit.covariance)
}

/// F-approximation threshold for squared MCD distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FCutoff {
    pub level: f64,
    pub dof1: f64,
    pub dof2: f64,
    /// Multiplier turning the F quantile into squared-distance units.
    pub scale: f64,
    pub threshold: f64,
}

/// Hardin–Rocke cutoff for squared distances computed from a
/// consistency-corrected raw MCD covariance: the estimated Wishart degrees of
/// freedom `m_pred` follow the Croux–Haesbroeck asymptotics adjusted by the
/// Hardin–Rocke small-sample regression, and
/// threshold = d·m_pred/(m_pred − d + 1) · F⁻¹(1 − level; d, m_pred − d + 1).
pub fn hardin_rocke_cutoff(m: usize, d: usize, coverage: Option<f64>, level: f64) -> Result<FCutoff> {
    if !(level > 0.0 && level < 1.0) {
        return Err(FdError::InvalidLevel(level));
    }
    if d == 0 || m <= d + 1 {
        return Err(FdError::TooFewCurves {
            required: d + 2,
            found: m,
        });
    }
    let h = subset_size(m, d, coverage)?;
    if h >= m {
        return Err(FdError::InvalidCoverage(coverage.unwrap_or(1.0)));
    }
    let (mf, df) = (m as f64, d as f64);
    let alpha = (m - h) as f64 / mf;
    let chi = |k: f64| ChiSquared::new(k).expect("positive dof");
    let q_alpha = chi(df).inverse_cdf(1.0 - alpha);
    let p2 = chi(df + 2.0).cdf(q_alpha);
    let p4 = chi(df + 4.0).cdf(q_alpha);
    let c_alpha = (1.0 - alpha) / p2;
    let c2 = -0.5 * p2;
    let c3 = -0.5 * p4;
    let c4 = 3.0 * c3;
    let b1 = c_alpha * (c3 - c4) / (1.0 - alpha);
    let b2 = 0.5 + c_alpha / (1.0 - alpha) * (c3 - q_alpha / df * (c2 + (1.0 - alpha) / 2.0));
    let v1 = (1.0 - alpha) * b1 * b1 * (alpha * (c_alpha * q_alpha / df - 1.0).powi(2) - 1.0)
        - 2.0 * c3 * c_alpha * c_alpha
            * (3.0 * (b1 - df * b2).powi(2) + (df + 2.0) * b2 * (2.0 * b1 - df * b2));
    let v2 = mf * (b1 * (b1 - df * b2) * (1.0 - alpha)).powi(2) * c_alpha * c_alpha;
    let v = v1 / v2;
    let m_asy = 2.0 / (c_alpha * c_alpha * v);
    let m_pred = m_asy * (0.725 - 0.00663 * df - 0.0780 * mf.ln()).exp();
    let dof2 = m_pred - df + 1.0;
    if !(dof2 > 0.0) || !dof2.is_finite() {
        return Err(FdError::InvalidParameter(format!(
            "Hardin-Rocke degrees of freedom {dof2} not positive (m = {m}, d = {d})"
        )));
    }
    let scale = df * m_pred / dof2;
    let f = FisherSnedecor::new(df, dof2)
        .map_err(|e| FdError::InvalidParameter(format!("F distribution: {e}")))?;
    let threshold = scale * f.inverse_cdf(1.0 - level);
    Ok(FCutoff {
        level,
        dof1: df,
        dof2,
        scale,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn median_mad_fixtures() {
        let r = median_mad(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(r.median, 3.0);
        assert!((r.mad - 1.4826).abs() < 1e-15);
        let c = median_mad(&[2.5; 3]).unwrap();
        assert_eq!((c.median, c.mad), (2.5, 0.0));
        assert_eq!(median_mad(&[1.0, 2.0, 3.0, 4.0]).unwrap().median, 2.5);
        assert_eq!(median_mad(&[]), Err(FdError::EmptyInput));
    }

    #[test]
    fn geometric_median_of_square() {
        let pts = array![[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]];
        let g = geometric_median(pts.view(), GEOMETRIC_MEDIAN_TOL).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-8 && (g[1] - 1.0).abs() < 1e-8);
        let same = array![[3.0, -1.0], [3.0, -1.0], [3.0, -1.0]];
        assert_eq!(geometric_median(same.view(), 1e-10).unwrap(), vec![3.0, -1.0]);
    }

    #[test]
    fn geometric_median_beats_coordinatewise_median() {
        let objective = |pts: &Array2<f64>, y: &[f64]| -> f64 {
            pts.rows()
                .into_iter()
                .map(|r| ((r[0] - y[0]).powi(2) + (r[1] - y[1]).powi(2)).sqrt())
                .sum()
        };
        for seed in 0..20 {
            let mut rng = RandomSource::new(seed);
            let pts = Array2::from_shape_vec((5, 2), rng.standard_normals(10)).unwrap();
            let g = geometric_median(pts.view(), GEOMETRIC_MEDIAN_TOL).unwrap();
            let cw = [
                stats::median(&pts.column(0).to_vec()),
                stats::median(&pts.column(1).to_vec()),
            ];
            assert!(objective(&pts, &g) <= objective(&pts, &cw) + 1e-9);
        }
    }

    #[test]
    fn geometric_median_at_data_point() {
        // The middle point of a collinear triple is the spatial median.
        let pts = array![[0.0, 0.0], [1.0, 1.0], [5.0, 5.0]];
        let g = geometric_median(pts.view(), 1e-12).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-9 && (g[1] - 1.0).abs() < 1e-9);
    }

    /// Σ (y − x_i)/‖y − x_i‖ at an off-data optimum.
    fn gradient_norm(points: &Array2<f64>, y: &[f64]) -> f64 {
        let mut g = vec![0.0; y.len()];
        for row in points.rows() {
            let r = row.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            for k in 0..y.len() {
                g[k] += (y[k] - row[k]) / r;
            }
        }
        norm(&g)
    }

    #[test]
    fn geometric_median_just_off_a_data_point() {
        // Optimum 0.0016 from the second point, where Weiszfeld crawls.
        let pts = array![
            [0.18182476870530115, -0.29462131123680235],
            [0.16582643889532417, 0.004674751003557898],
            [-0.10577838583956536, 1.6625529909054548],
            [0.4949514854537128, 1.2569128321083478],
            [0.41085152280759935, 0.8167776944395247],
            [-0.4306368769642776, 1.4468121002313323],
            [-1.075732536971396, 0.8656079151697833],
            [-0.48853372301969633, -0.9847042482457375],
            [1.020007361987438, -1.057375116555095],
            [0.19877641976108623, -0.41253023193024657]
        ];
        let g = geometric_median(pts.view(), GEOMETRIC_MEDIAN_TOL).unwrap();
        assert!(gradient_norm(&pts, &g) < 1e-6);
        assert!((g[0] - 0.16483761).abs() < 1e-7 && (g[1] - 0.00597197).abs() < 1e-7);
    }

    #[test]
    fn geometric_median_converges_on_random_clouds() {
        let mut rng = RandomSource::new(31);
        for _ in 0..400 {
            let m = 3 + rng.below(30);
            let d = 2 + rng.below(3);
            let pts = Array2::from_shape_vec((m, d), rng.standard_normals(m * d)).unwrap();
            let g = geometric_median(pts.view(), GEOMETRIC_MEDIAN_TOL).unwrap();
            let f = |y: &[f64]| objective(pts.view(), y);
            for row in pts.rows() {
                assert!(f(&g) <= f(row.as_slice().unwrap()) + 1e-9);
            }
        }
    }

    fn shifted_cloud(seed: u64) -> Array2<f64> {
        let mut rng = RandomSource::new(seed);
        let mut x = Array2::from_shape_vec((200, 2), rng.standard_normals(400)).unwrap();
        for i in 180..200 {
            x[[i, 0]] += 10.0;
            x[[i, 1]] += 10.0;
        }
        x
    }

    #[test]
    fn mcd_excludes_planted_cluster() {
        let x = shifted_cloud(11);
        let fit = fast_mcd(x.view(), None, &mut RandomSource::new(1)).unwrap();
        assert_eq!(fit.subset_indices.len(), (200 + 2 + 1) / 2);
        assert!(fit.subset_indices.iter().all(|&i| i < 180));
        let cov = &fit.covariance;
        assert!((cov[(0, 1)] - cov[(1, 0)]).abs() < 1e-12);
        let eig = cov.clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&e| e >= -1e-10));
    }

    #[test]
    fn mcd_on_a_line_is_singular() {
        let x = Array2::from_shape_fn((30, 2), |(i, k)| if k == 0 { i as f64 } else { 2.0 * i as f64 + 1.0 });
        assert_eq!(
            fast_mcd(x.view(), None, &mut RandomSource::new(3)).unwrap_err(),
            FdError::SingularSubsets
        );
    }

    #[test]
    fn mcd_univariate_variance_close_to_classical() {
        let mut rng = RandomSource::new(77);
        let v = rng.standard_normals(100);
        let x = Array2::from_shape_vec((100, 1), v.clone()).unwrap();
        let fit = fast_mcd(x.view(), None, &mut RandomSource::new(5)).unwrap();
        let mean = stats::mean(&v);
        let classical = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 99.0;
        let ratio = fit.covariance[(0, 0)] / classical;
        assert!((0.8..=1.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn mcd_deterministic() {
        let x = shifted_cloud(2);
        let a = fast_mcd(x.view(), None, &mut RandomSource::new(9)).unwrap();
        let b = fast_mcd(x.view(), None, &mut RandomSource::new(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mcd_too_few_points() {
        let x = Array2::<f64>::zeros((4, 2));
        assert!(matches!(
            fast_mcd(x.view(), None, &mut RandomSource::new(0)),
            Err(FdError::TooFewCurves { .. })
        ));
        assert!(matches!(
            fast_mcd(shifted_cloud(0).view(), Some(0.3), &mut RandomSource::new(0)),
            Err(FdError::InvalidCoverage(_))
        ));
    }

    #[test]
    fn distance_identities() {
        let center = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let cov = DMatrix::identity(3, 3);
        let pts = array![[1.0, 2.0, 3.0], [2.0, 2.0, 3.0], [1.0, 2.0, 2.0]];
        assert_eq!(mahalanobis_squared(pts.view(), &center, &cov).unwrap(), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn distances_match_linear_solve() {
        let mut rng = RandomSource::new(21);
        let pts = Array2::from_shape_vec((50, 3), rng.standard_normals(150)).unwrap();
        let a = DMatrix::from_vec(3, 3, rng.standard_normals(9));
        let cov = &a * a.transpose() + DMatrix::identity(3, 3) * 0.5;
        let center = DVector::from_vec(rng.standard_normals(3));
        let got = mahalanobis_squared(pts.view(), &center, &cov).unwrap();
        let inv = cov.clone().try_inverse().unwrap();
        for (i, g) in got.iter().enumerate() {
            let r = DVector::from_vec(pts.row(i).to_vec()) - &center;
            let want = (r.transpose() * &inv * &r)[(0, 0)];
            assert!((g - want).abs() <= 1e-10 * want.max(1.0));
        }
    }

    #[test]
    fn singular_covariance_detected() {
        let pts = array![[0.0, 1.0]];
        let center = DVector::zeros(2);
        // Rank one: the ridge makes it invertible.
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(mahalanobis_squared(pts.view(), &center, &cov).is_ok());
        let cov = DMatrix::<f64>::zeros(2, 2);
        assert_eq!(
            mahalanobis_squared(pts.view(), &center, &cov).unwrap_err(),
            FdError::SingularCovariance
        );
    }

    #[test]
    fn cutoff_monotone_in_level() {
        let levels = [0.001, 0.01, 0.05, 0.1, 0.5];
        let t: Vec<f64> = levels
            .iter()
            .map(|&l| hardin_rocke_cutoff(100, 2, None, l).unwrap().threshold)
            .collect();
        assert!(t.windows(2).all(|w| w[0] > w[1]));
        assert!(matches!(hardin_rocke_cutoff(100, 2, None, 1.0), Err(FdError::InvalidLevel(_))));
    }

    #[test]
    fn cutoff_approaches_chi_square() {
        let c = hardin_rocke_cutoff(10_000, 1, None, 0.05).unwrap();
        let chi = ChiSquared::new(1.0).unwrap().inverse_cdf(0.95);
        assert!((c.threshold / chi - 1.0).abs() < 0.15, "{} vs {}", c.threshold, chi);
        assert!(c.threshold > 0.0 && c.dof2 > 0.0);
    }
}

//! Pointwise directional outlyingness and its mean/variation summaries.
//!
//! At each grid point the outlyingness of Y(t) is its Stahel–Donoho
//! outlyingness times the unit vector pointing from the pointwise median to
//! Y(t). For d = 1 this is (y − median)/MAD. For d ≥ 2 the median is the
//! spatial (geometric) median and the projection-pursuit supremum is
//! approximated over a fixed set of random unit directions, drawn once and
//! shared by every grid point.
//!
//! A column whose MAD is zero yields 0 for curves at the median and an
//! infinite sentinel for every other curve.

use ndarray::{Array2, Array3, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{FdError, Result};
use crate::rng::RandomSource;
use crate::robust::{self, median_mad};
use crate::sample::MultiCurveSample;

pub const DEFAULT_N_DIRECTIONS: usize = 500;

/// O(Y(t)) per curve, grid point and dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalOutlyingnessField {
    pub values: Array3<f64>,
}

impl DirectionalOutlyingnessField {
    pub fn n(&self) -> usize {
        self.values.dim().0
    }

    pub fn p(&self) -> usize {
        self.values.dim().1
    }

    pub fn dims(&self) -> usize {
        self.values.dim().2
    }

    /// Pointwise Euclidean norm ‖O_i(t)‖.
    pub fn magnitudes(&self) -> Array2<f64> {
        self.values.map_axis(Axis(2), |v| {
            if v.iter().any(|x| x.is_infinite()) {
                f64::INFINITY
            } else {
                v.iter().map(|x| x * x).sum::<f64>().sqrt()
            }
        })
    }
}

/// Mean (MO), variation (VO) and total (FO) directional outlyingness.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlyingnessDecomposition {
    /// n × d.
    pub mo: Array2<f64>,
    pub vo: Vec<f64>,
    pub fo: Vec<f64>,
}

impl OutlyingnessDecomposition {
    /// ‖MO_i‖ per curve.
    pub fn mo_norms(&self) -> Vec<f64> {
        self.mo
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }
}

fn require_curves(n: usize) -> Result<()> {
    if n < 3 {
        return Err(FdError::TooFewCurves { required: 3, found: n });
    }
    Ok(())
}

fn scaled_deviation(deviation: f64, mad: f64) -> f64 {
    if mad > 0.0 {
        deviation / mad
    } else if deviation == 0.0 {
        0.0
    } else {
        deviation.signum() * f64::INFINITY
    }
}

/// Random unit directions in ℝ^d, one per row.
pub fn random_directions(d: usize, count: usize, rng: &mut RandomSource) -> Array2<f64> {
    let mut dirs = Array2::zeros((count, d));
    for mut row in dirs.rows_mut() {
        loop {
            for x in row.iter_mut() {
                *x = rng.standard_normal();
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                row.mapv_inplace(|x| x / norm);
                break;
            }
        }
    }
    dirs
}

/// Projection-pursuit SDO of each row of `points` over the given directions.
fn sdo_over_directions(points: ArrayView2<'_, f64>, directions: ArrayView2<'_, f64>) -> Vec<f64> {
    let n = points.nrows();
    let mut best = vec![0.0f64; n];
    let mut proj = vec![0.0; n];
    for u in directions.rows() {
        for (i, row) in points.rows().into_iter().enumerate() {
            proj[i] = row.dot(&u);
        }
        let rls = median_mad(&proj).expect("n >= 3");
        for i in 0..n {
            let s = scaled_deviation((proj[i] - rls.median).abs(), rls.mad);
            if s > best[i] {
                best[i] = s;
            }
        }
    }
    best
}

/// n × p matrix of pointwise Stahel–Donoho outlyingness.
pub fn pointwise_sdo(
    sample: &MultiCurveSample,
    n_directions: usize,
    rng: &mut RandomSource,
) -> Result<Array2<f64>> {
    require_curves(sample.n())?;
    let (n, p, d) = sample.values().dim();
    if d == 1 {
        let mut out = Array2::zeros((n, p));
        for t in 0..p {
            let col = sample.values().slice(ndarray::s![.., t, 0]).to_vec();
            let rls = median_mad(&col)?;
            for i in 0..n {
                out[[i, t]] = scaled_deviation((col[i] - rls.median).abs(), rls.mad);
            }
        }
        return Ok(out);
    }
    if n_directions == 0 {
        return Err(FdError::InvalidParameter("n_directions must be positive".into()));
    }
    let dirs = random_directions(d, n_directions, rng);
    let columns: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|t| {
            let pts = sample.values().index_axis(Axis(1), t);
            sdo_over_directions(pts, dirs.view())
        })
        .collect();
    let mut out = Array2::zeros((n, p));
    for (t, col) in columns.into_iter().enumerate() {
        for i in 0..n {
            out[[i, t]] = col[i];
        }
    }
    Ok(out)
}

/// Directional outlyingness field O(t) = SDO(t)·v(t).
pub fn directional_outlyingness(
    sample: &MultiCurveSample,
    n_directions: usize,
    rng: &mut RandomSource,
) -> Result<DirectionalOutlyingnessField> {
    require_curves(sample.n())?;
    let (n, p, d) = sample.values().dim();
    let mut values = Array3::zeros((n, p, d));
    if d == 1 {
        for t in 0..p {
            let col = sample.values().slice(ndarray::s![.., t, 0]).to_vec();
            let rls = median_mad(&col)?;
            for i in 0..n {
                values[[i, t, 0]] = scaled_deviation(col[i] - rls.median, rls.mad);
            }
        }
        return Ok(DirectionalOutlyingnessField { values });
    }
    let sdo = pointwise_sdo(sample, n_directions, rng)?;
    let centers: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|t| {
            robust::geometric_median(
                sample.values().index_axis(Axis(1), t),
                robust::GEOMETRIC_MEDIAN_TOL,
            )
        })
        .collect::<Result<_>>()?;
    for t in 0..p {
        let z = &centers[t];
        for i in 0..n {
            let y = sample.values().slice(ndarray::s![i, t, ..]);
            let diff: Vec<f64> = y.iter().zip(z).map(|(a, b)| a - b).collect();
            let norm = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let s = sdo[[i, t]];
            for k in 0..d {
                let v = diff[k] / norm;
                values[[i, t, k]] = if v == 0.0 { 0.0 } else { s * v };
            }
        }
    }
    Ok(DirectionalOutlyingnessField { values })
}

/// MO_i = Σ_t O_i(t) w(t), VO_i = Σ_t ‖O_i(t) − MO_i‖² w(t),
/// FO_i = ‖MO_i‖² + VO_i. Weights default to 1/p and must be nonnegative
/// and sum to one. Curves with an infinite sentinel cell get VO = FO = ∞.
pub fn decompose(
    field: &DirectionalOutlyingnessField,
    weights: Option<&[f64]>,
) -> Result<OutlyingnessDecomposition> {
    let (n, p, d) = field.values.dim();
    let uniform;
    let w: &[f64] = match weights {
        Some(w) => {
            if w.len() != p {
                return Err(FdError::BadWeights(format!("{} weights for {p} grid points", w.len())));
            }
            if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(FdError::BadWeights("weights must be finite and nonnegative".into()));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(FdError::BadWeights(format!("weights sum to {total}, not 1")));
            }
            w
        }
        None => {
            uniform = vec![1.0 / p as f64; p];
            &uniform
        }
    };
    let mut mo = Array2::<f64>::zeros((n, d));
    let mut vo = vec![0.0; n];
    let mut fo = vec![0.0; n];
    for i in 0..n {
        let curve = field.values.index_axis(Axis(0), i);
        for k in 0..d {
            mo[[i, k]] = (0..p).map(|t| curve[[t, k]] * w[t]).sum();
        }
        if curve.iter().any(|x| !x.is_finite()) {
            vo[i] = f64::INFINITY;
            fo[i] = f64::INFINITY;
            continue;
        }
        vo[i] = (0..p)
            .map(|t| {
                let sq: f64 = (0..d).map(|k| { let e: f64 = curve[[t, k]] - mo[[i, k]]; e * e }).sum();
                sq * w[t]
            })
            .sum();
        let mo_sq: f64 = (0..d).map(|k| mo[[i, k]].powi(2)).sum();
        fo[i] = mo_sq + vo[i];
    }
    Ok(OutlyingnessDecomposition { mo, vo, fo })
}

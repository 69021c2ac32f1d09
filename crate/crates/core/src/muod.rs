//! Massive unsupervised outlier detection (MUOD).
//!
//! Each curve is compared with every curve in the sample (itself included)
//! through the Pearson correlation, the regression slope and the regression
//! intercept of its observed points on the other curve's points. Averaging
//! gives a shape, an amplitude and a magnitude index per curve; large indices
//! are outlying and are cut with either a boxplot or the tangent heuristic.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FdError, Result};
use crate::sample::CurveSample;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuodIndices {
    /// I_S = |mean ρ̂ − 1|.
    pub shape: Vec<f64>,
    /// I_M = |mean α̂|.
    pub magnitude: Vec<f64>,
    /// I_A = |mean β̂ − 1|.
    pub amplitude: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutMethod {
    Tangent,
    #[default]
    Boxplot,
}

impl CutMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CutMethod::Tangent => "tangent",
            CutMethod::Boxplot => "boxplot",
        }
    }
}

impl fmt::Display for CutMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CutMethod {
    type Err = FdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tangent" => Ok(CutMethod::Tangent),
            "boxplot" => Ok(CutMethod::Boxplot),
            other => Err(FdError::InvalidParameter(format!("unknown cut method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuodOutliers {
    pub shape: Vec<usize>,
    pub magnitude: Vec<usize>,
    pub amplitude: Vec<usize>,
    pub cut_method: CutMethod,
}

/// Shape, magnitude and amplitude indices.
///
/// Covariances use the (p − 1) denominator. A pair whose partner has zero
/// variance is skipped in every mean; correlations also skip pairs where the
/// curve itself is constant, so a constant curve has I_S = 1.
pub fn muod_indices(sample: &CurveSample) -> Result<MuodIndices> {
    let values = sample.values();
    let (n, p) = values.dim();
    if n < 3 {
        return Err(FdError::TooFewCurves { required: 3, found: n });
    }
    if p < 3 {
        return Err(FdError::TooFewPoints { required: 3, found: p });
    }
    let means: Vec<f64> = values.rows().into_iter().map(|r| r.sum() / p as f64).collect();
    let centered = Array2::from_shape_fn((n, p), |(i, t)| values[[i, t]] - means[i]);
    let cov = centered.dot(&centered.t()) / (p - 1) as f64;
    let var: Vec<f64> = (0..n).map(|i| cov[[i, i]]).collect();
    if var.iter().all(|&v| v == 0.0) {
        return Err(FdError::AllDegenerate);
    }
    let rows: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let cov_i = cov.row(i);
            let (mut rho, mut rho_count) = (0.0, 0usize);
            let (mut beta, mut alpha, mut count) = (0.0, 0.0, 0usize);
            for j in 0..n {
                if var[j] == 0.0 {
                    continue;
                }
                let b = cov_i[j] / var[j];
                beta += b;
                alpha += means[i] - b * means[j];
                count += 1;
                if var[i] > 0.0 {
                    rho += cov_i[j] / (var[i].sqrt() * var[j].sqrt());
                    rho_count += 1;
                }
            }
            let rho_mean = if rho_count > 0 { rho / rho_count as f64 } else { 0.0 };
            let c = count as f64;
            ((rho_mean - 1.0).abs(), (alpha / c).abs(), (beta / c - 1.0).abs())
        })
        .collect();
    Ok(MuodIndices {
        shape: rows.iter().map(|r| r.0).collect(),
        magnitude: rows.iter().map(|r| r.1).collect(),
        amplitude: rows.iter().map(|r| r.2).collect(),
    })
}

/// Indices above Q3 + 1.5 IQR.
pub fn muod_cutoff_boxplot(indices: &[f64]) -> Result<Vec<usize>> {
    if indices.len() < 5 {
        return Err(FdError::TooFewCurves {
            required: 5,
            found: indices.len(),
        });
    }
    let (_, upper) = stats::tukey_fences(indices, 1.5);
    Ok((0..indices.len()).filter(|&i| indices[i] > upper).collect())
}

/// Tangent cutoff on the sorted indices g(1) ≤ … ≤ g(n).
///
/// The terminal slope is a least-squares fit over the last max(3, ⌈0.02 n⌉)
/// points; the tangent through (n, g(n)) meets the x-axis at k*, and the
/// cutoff is g(⌈k*⌉) with the position clamped to [1, n]. A nonpositive
/// slope flags nothing.
pub fn muod_cutoff_tangent(indices: &[f64]) -> Result<Vec<usize>> {
    let n = indices.len();
    if n < 10 {
        return Err(FdError::TooFewCurves { required: 10, found: n });
    }
    let g = stats::sorted(indices);
    let window = 3usize.max((0.02 * n as f64).ceil() as usize).min(n);
    let xs: Vec<f64> = (n - window + 1..=n).map(|k| k as f64).collect();
    let ys = &g[n - window..];
    let x_bar = stats::mean(&xs);
    let y_bar = stats::mean(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - x_bar) * (x - x_bar)).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Ok(Vec::new());
    }
    let intercept = n as f64 - g[n - 1] / slope;
    let position = if intercept.is_finite() {
        (intercept.ceil().max(1.0) as usize).min(n)
    } else {
        1
    };
    let cutoff = g[position - 1];
    Ok((0..n).filter(|&i| indices[i] > cutoff).collect())
}

pub fn muod_cutoff(indices: &[f64], method: CutMethod) -> Result<Vec<usize>> {
    match method {
        CutMethod::Tangent => muod_cutoff_tangent(indices),
        CutMethod::Boxplot => muod_cutoff_boxplot(indices),
    }
}

/// Indices plus the cutoff applied to each of them independently.
pub fn muod(sample: &CurveSample, cut_method: CutMethod) -> Result<(MuodOutliers, MuodIndices)> {
    let indices = muod_indices(sample)?;
    let outliers = MuodOutliers {
        shape: muod_cutoff(&indices.shape, cut_method)?,
        magnitude: muod_cutoff(&indices.magnitude, cut_method)?,
        amplitude: muod_cutoff(&indices.amplitude, cut_method)?,
        cut_method,
    };
    Ok((outliers, indices))
}

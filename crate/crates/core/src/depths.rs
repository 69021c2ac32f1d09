//! Curve orderings used by functional boxplots and sequential
//! transformations.
//!
//! Rank-based measures share the [`PointwiseRanks`] kernel: per column, the
//! number of curves lying weakly below and weakly above each curve (the curve
//! itself included). All integer comparisons are exact, so ties are handled
//! without floating point fuzz.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FdError, Result};
use crate::sample::CurveSample;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthDirection {
    DeeperIsLarger,
    OutlyingIsLarger,
}

/// Per-curve depth or outlyingness scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthVector {
    pub scores: Vec<f64>,
    pub direction: DepthDirection,
    pub method: String,
}

impl DepthVector {
    pub fn new(scores: Vec<f64>, direction: DepthDirection, method: impl Into<String>) -> Self {
        Self {
            scores,
            direction,
            method: method.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Scores oriented so that larger means deeper (outlyingness is negated).
    pub fn deeper_is_larger(&self) -> Vec<f64> {
        match self.direction {
            DepthDirection::DeeperIsLarger => self.scores.clone(),
            DepthDirection::OutlyingIsLarger => self.scores.iter().map(|s| -s).collect(),
        }
    }

    /// Curve indices from deepest to most outlying; ties keep index order.
    pub fn order_deepest_first(&self) -> Vec<usize> {
        let d = self.deeper_is_larger();
        let mut idx: Vec<usize> = (0..d.len()).collect();
        idx.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
        idx
    }
}

/// Which tail of the pointwise ranks counts as extreme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErldType {
    #[default]
    TwoSided,
    OneSidedRight,
    OneSidedLeft,
}

impl ErldType {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErldType::TwoSided => "two_sided",
            ErldType::OneSidedRight => "one_sided_right",
            ErldType::OneSidedLeft => "one_sided_left",
        }
    }
}

impl FromStr for ErldType {
    type Err = FdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_sided" => Ok(ErldType::TwoSided),
            "one_sided_right" => Ok(ErldType::OneSidedRight),
            "one_sided_left" => Ok(ErldType::OneSidedLeft),
            other => Err(FdError::InvalidParameter(format!("unknown erld type {other:?}"))),
        }
    }
}

impl fmt::Display for ErldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordering measures accepted by the functional boxplot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMethod {
    Bd,
    Mbd,
    Erld(ErldType),
    Dq,
    Linf,
    Extremal,
    Tvd,
    /// Robust Mahalanobis distance of the (MO, VO) pair.
    Rmd,
}

impl DepthMethod {
    pub fn label(&self) -> &'static str {
        match self {
            DepthMethod::Bd => "bd",
            DepthMethod::Mbd => "mbd",
            DepthMethod::Erld(_) => "erld",
            DepthMethod::Dq => "dq",
            DepthMethod::Linf => "linf",
            DepthMethod::Extremal => "ed",
            DepthMethod::Tvd => "tvd",
            DepthMethod::Rmd => "rmd",
        }
    }
}

impl FromStr for DepthMethod {
    type Err = FdError;

    /// `erld` parses to the two-sided variant.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bd" => DepthMethod::Bd,
            "mbd" => DepthMethod::Mbd,
            "erld" => DepthMethod::Erld(ErldType::TwoSided),
            "dq" => DepthMethod::Dq,
            "linf" | "linfinity" => DepthMethod::Linf,
            "ed" | "extremal" => DepthMethod::Extremal,
            "tvd" => DepthMethod::Tvd,
            "rmd" => DepthMethod::Rmd,
            other => return Err(FdError::UnknownDepthMethod(other.to_string())),
        })
    }
}

impl fmt::Display for DepthMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Per (curve, grid point): `below` = #{j : Y_j(t) ≤ Y_i(t)},
/// `above` = #{j : Y_j(t) ≥ Y_i(t)}.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseRanks {
    pub below: Array2<u32>,
    pub above: Array2<u32>,
}

impl PointwiseRanks {
    pub fn compute(sample: &CurveSample) -> Self {
        let values = sample.values();
        let (n, p) = values.dim();
        let columns: Vec<(Vec<u32>, Vec<u32>)> = (0..p)
            .into_par_iter()
            .map(|t| {
                let col = values.column(t);
                let sorted = stats::sorted(&col.to_vec());
                let mut below = Vec::with_capacity(n);
                let mut above = Vec::with_capacity(n);
                for &y in col.iter() {
                    let le = sorted.partition_point(|&v| v <= y);
                    let lt = sorted.partition_point(|&v| v < y);
                    below.push(le as u32);
                    above.push((n - lt) as u32);
                }
                (below, above)
            })
            .collect();
        let mut below = Array2::zeros((n, p));
        let mut above = Array2::zeros((n, p));
        for (t, (b, a)) in columns.into_iter().enumerate() {
            for i in 0..n {
                below[[i, t]] = b[i];
                above[[i, t]] = a[i];
            }
        }
        Self { below, above }
    }

    pub fn n(&self) -> usize {
        self.below.nrows()
    }
}

fn require_curves(sample: &CurveSample, required: usize) -> Result<()> {
    if sample.n() < required {
        return Err(FdError::TooFewCurves {
            required,
            found: sample.n(),
        });
    }
    Ok(())
}

fn choose2(k: u64) -> u64 {
    k * k.saturating_sub(1) / 2
}

/// Band depth with bands of two curves: the fraction of curve pairs whose
/// inclusive pointwise envelope contains the whole curve.
pub fn band_depth(sample: &CurveSample) -> Result<DepthVector> {
    require_curves(sample, 3)?;
    let values = sample.values();
    let (n, p) = values.dim();
    let words = p.div_ceil(64);
    let pairs = choose2(n as u64) as f64;

    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            // Bitsets of grid points where curve j is strictly above / below i.
            let mut above = vec![0u64; n * words];
            let mut below = vec![0u64; n * words];
            for j in 0..n {
                for t in 0..p {
                    let (yj, yi) = (values[[j, t]], values[[i, t]]);
                    let bit = 1u64 << (t % 64);
                    if yj > yi {
                        above[j * words + t / 64] |= bit;
                    } else if yj < yi {
                        below[j * words + t / 64] |= bit;
                    }
                }
            }
            let mut count = 0u64;
            for j in 0..n {
                let (aj, bj) = (&above[j * words..][..words], &below[j * words..][..words]);
                for k in (j + 1)..n {
                    let (ak, bk) = (&above[k * words..][..words], &below[k * words..][..words]);
                    let escapes = (0..words).any(|w| aj[w] & ak[w] != 0 || bj[w] & bk[w] != 0);
                    if !escapes {
                        count += 1;
                    }
                }
            }
            count as f64 / pairs
        })
        .collect();
    Ok(DepthVector::new(scores, DepthDirection::DeeperIsLarger, "bd"))
}

/// Modified band depth: average over curve pairs of the fraction of grid
/// points where the curve lies inside the pair's inclusive envelope.
pub fn modified_band_depth(sample: &CurveSample) -> Result<DepthVector> {
    require_curves(sample, 3)?;
    let ranks = PointwiseRanks::compute(sample);
    Ok(modified_band_depth_from_ranks(&ranks))
}

pub(crate) fn modified_band_depth_from_ranks(ranks: &PointwiseRanks) -> DepthVector {
    let (n, p) = ranks.below.dim();
    let nn = n as u64;
    let pairs = choose2(nn);
    let scores = ranks
        .below
        .axis_iter(Axis(0))
        .zip(ranks.above.axis_iter(Axis(0)))
        .map(|(below, above)| {
            // Pairs containing y(t) = all pairs minus those strictly above or
            // strictly below it.
            let total: u64 = below
                .iter()
                .zip(above.iter())
                .map(|(&b, &a)| pairs - choose2(nn - b as u64) - choose2(nn - a as u64))
                .sum();
            total as f64 / (pairs as f64 * p as f64)
        })
        .collect();
    DepthVector::new(scores, DepthDirection::DeeperIsLarger, "mbd")
}

/// Scores curves by the lexicographic order of their ascending-sorted key
/// vectors (smaller key = more extreme): the fraction of curves whose key is
/// lexicographically ≤ the curve's own key.
fn weakly_more_extreme_fraction(keys: &[Vec<u32>]) -> Vec<f64> {
    let n = keys.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
    let mut scores = vec![0.0; n];
    let mut pos = 0;
    while pos < n {
        let mut end = pos + 1;
        while end < n && keys[order[end]] == keys[order[pos]] {
            end += 1;
        }
        let score = end as f64 / n as f64;
        for &i in &order[pos..end] {
            scores[i] = score;
        }
        pos = end;
    }
    scores
}

/// Extreme rank length depth (two- or one-sided).
pub fn extreme_rank_length(sample: &CurveSample, kind: ErldType) -> Result<DepthVector> {
    require_curves(sample, 2)?;
    let ranks = PointwiseRanks::compute(sample);
    let keys: Vec<Vec<u32>> = ranks
        .below
        .axis_iter(Axis(0))
        .zip(ranks.above.axis_iter(Axis(0)))
        .map(|(below, above)| {
            let mut key: Vec<u32> = below
                .iter()
                .zip(above.iter())
                .map(|(&b, &a)| match kind {
                    ErldType::TwoSided => b.min(a),
                    ErldType::OneSidedRight => a,
                    ErldType::OneSidedLeft => b,
                })
                .collect();
            key.sort_unstable();
            key
        })
        .collect();
    Ok(DepthVector::new(
        weakly_more_extreme_fraction(&keys),
        DepthDirection::DeeperIsLarger,
        format!("erld_{}", kind.as_str()),
    ))
}

/// Default tail probability for [`directional_quantile`].
pub const DEFAULT_DQ_TAIL: f64 = 0.025;
const DQ_DENOMINATOR_FLOOR: f64 = 1e-12;

/// Directional quantile outlyingness: the largest excursion from the
/// pointwise median scaled by the distance from the median to the matching
/// tail quantile.
pub fn directional_quantile(sample: &CurveSample, tail: f64) -> Result<DepthVector> {
    require_curves(sample, 5)?;
    if !(tail > 0.0 && tail < 0.5) {
        return Err(FdError::InvalidTail(tail));
    }
    let values = sample.values();
    let (n, p) = values.dim();
    let bands: Vec<(f64, f64, f64)> = (0..p)
        .into_par_iter()
        .map(|t| {
            let s = stats::sorted(&values.column(t).to_vec());
            (
                stats::quantile_sorted(&s, tail),
                stats::quantile_sorted(&s, 0.5),
                stats::quantile_sorted(&s, 1.0 - tail),
            )
        })
        .collect();
    let scores = (0..n)
        .map(|i| {
            bands
                .iter()
                .enumerate()
                .map(|(t, &(lo, med, hi))| {
                    let y = values[[i, t]];
                    let up = (y - med) / (hi - med).max(DQ_DENOMINATOR_FLOOR);
                    let down = (med - y) / (med - lo).max(DQ_DENOMINATOR_FLOOR);
                    up.max(down)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(DepthVector::new(scores, DepthDirection::OutlyingIsLarger, "dq"))
}

/// L∞ depth: 1 / (1 + mean sup-distance to all curves, self included).
pub fn linfinity_depth(sample: &CurveSample) -> Result<DepthVector> {
    require_curves(sample, 2)?;
    let values = sample.values();
    let n = values.nrows();
    let scores = (0..n)
        .into_par_iter()
        .map(|i| {
            let yi = values.row(i);
            let total: f64 = (0..n)
                .map(|j| {
                    yi.iter()
                        .zip(values.row(j).iter())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .sum();
            1.0 / (1.0 + total / n as f64)
        })
        .collect();
    Ok(DepthVector::new(scores, DepthDirection::DeeperIsLarger, "linf"))
}

/// Extremal depth: curves are compared through the distribution of their
/// pointwise depths 1 − |#below − #above| / n, starting from the lowest
/// depth level.
pub fn extremal_depth(sample: &CurveSample) -> Result<DepthVector> {
    require_curves(sample, 2)?;
    let ranks = PointwiseRanks::compute(sample);
    let n = ranks.n() as i64;
    // Integer pointwise depth n·d(t) = n − |#{<} − #{>}| = n − |below − above|.
    let keys: Vec<Vec<u32>> = ranks
        .below
        .axis_iter(Axis(0))
        .zip(ranks.above.axis_iter(Axis(0)))
        .map(|(below, above)| {
            let mut key: Vec<u32> = below
                .iter()
                .zip(above.iter())
                .map(|(&b, &a)| (n - (b as i64 - a as i64).abs()) as u32)
                .collect();
            key.sort_unstable();
            key
        })
        .collect();
    Ok(DepthVector::new(
        weakly_more_extreme_fraction(&keys),
        DepthDirection::DeeperIsLarger,
        "ed",
    ))
}

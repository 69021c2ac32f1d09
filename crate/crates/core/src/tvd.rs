//! Total variation depth (TVD) and the modified shape similarity index (MSS).
//!
//! For a curve y the indicator process is R_y(t) = 1{Y(t) ≤ y(t)}, estimated
//! by the sample (ties count, the curve itself counts). TVD averages the
//! pointwise variance p̂(1 − p̂) over the grid. MSS splits the variance of
//! R at t into the part explained by R at the previous lag (the shape
//! component) and averages the explained fraction, weighted by the curve's
//! absolute increments, after shifting the pair (y(t − Δ), y(t)) to the
//! pointwise median at t.
//!
//! Both kernels run in O(n p log n): every count is a binary search in a
//! sorted column.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FdError, Result};
use crate::sample::CurveSample;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvdResult {
    pub tvd: Vec<f64>,
    pub mss: Vec<f64>,
}

/// Law-of-total-variance split of var(R_t) given R_s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceDecomposition {
    /// var(R_t).
    pub total: f64,
    /// var[E(R_t | R_s)].
    pub shape: f64,
    /// E[var(R_t | R_s)].
    pub magnitude: f64,
}

/// Empirical decomposition from the joint frequencies p_s = P̂(R_s = 1),
/// p_t = P̂(R_t = 1), p_st = P̂(R_s = 1, R_t = 1). Conditional means whose
/// conditioning event is empty are taken as 0.
pub fn decompose_frequencies(p_s: f64, p_t: f64, p_st: f64) -> VarianceDecomposition {
    let a = if p_s > 0.0 { p_st / p_s } else { 0.0 };
    let b = if p_s < 1.0 { (p_t - p_st) / (1.0 - p_s) } else { 0.0 };
    VarianceDecomposition {
        total: p_t * (1.0 - p_t),
        shape: p_s * (1.0 - p_s) * (a - b) * (a - b),
        magnitude: p_s * a * (1.0 - a) + (1.0 - p_s) * b * (1.0 - b),
    }
}

/// Decomposition of two indicator vectors observed on the same curves.
pub fn indicator_variance_decomposition(r_s: &[bool], r_t: &[bool]) -> VarianceDecomposition {
    assert_eq!(r_s.len(), r_t.len());
    let n = r_s.len() as f64;
    let count = |f: &dyn Fn(usize) -> bool| (0..r_s.len()).filter(|&j| f(j)).count() as f64 / n;
    decompose_frequencies(count(&|j| r_s[j]), count(&|j| r_t[j]), count(&|j| r_s[j] && r_t[j]))
}

/// S = var[E(R_t|R_s)] / var(R_t), or 1 when var(R_t) = 0.
fn shape_ratio(count_s: usize, count_t: usize, count_st: usize, n: usize) -> f64 {
    if count_t == 0 || count_t == n {
        return 1.0;
    }
    let nf = n as f64;
    let dec = decompose_frequencies(count_s as f64 / nf, count_t as f64 / nf, count_st as f64 / nf);
    dec.shape / dec.total
}

fn require(sample: &CurveSample, curves: usize, points: usize) -> Result<()> {
    if sample.n() < curves {
        return Err(FdError::TooFewCurves {
            required: curves,
            found: sample.n(),
        });
    }
    if sample.p() < points {
        return Err(FdError::TooFewPoints {
            required: points,
            found: sample.p(),
        });
    }
    Ok(())
}

/// TVD_i = (1/p) Σ_t p̂_i(t)(1 − p̂_i(t)), p̂_i(t) = #{j : Y_j(t) ≤ Y_i(t)}/n.
pub fn total_variation_depth(sample: &CurveSample) -> Result<Vec<f64>> {
    require(sample, 2, 1)?;
    let values = sample.values();
    let (n, p) = values.dim();
    let columns: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|t| {
            let col = values.column(t).to_vec();
            let sorted = stats::sorted(&col);
            col.iter()
                .map(|&y| {
                    let prob = sorted.partition_point(|&v| v <= y) as f64 / n as f64;
                    prob * (1.0 - prob)
                })
                .collect()
        })
        .collect();
    Ok((0..n)
        .map(|i| columns.iter().map(|c| c[i]).sum::<f64>() / p as f64)
        .collect())
}

pub const DEFAULT_LAG: usize = 1;

/// MSS with a lag of one grid step.
pub fn modified_shape_similarity(sample: &CurveSample) -> Result<Vec<f64>> {
    modified_shape_similarity_lag(sample, DEFAULT_LAG)
}

/// MSS with a lag of `lag` grid steps.
pub fn modified_shape_similarity_lag(sample: &CurveSample, lag: usize) -> Result<Vec<f64>> {
    require(sample, 2, 2)?;
    let values = sample.values();
    let (n, p) = values.dim();
    if lag == 0 || lag >= p {
        return Err(FdError::InvalidParameter(format!("lag {lag} must lie in 1..{p}")));
    }
    // ratios[k - lag][i] = S for curve i between t_{k-lag} and t_k.
    let ratios: Vec<Vec<f64>> = (lag..p)
        .into_par_iter()
        .map(|k| {
            let s = k - lag;
            let col_t = values.column(k).to_vec();
            let col_s = values.column(s).to_vec();
            let median_t = stats::median(&col_t);
            let count_t = col_t.iter().filter(|&&v| v <= median_t).count();
            let sorted_s = stats::sorted(&col_s);
            let sorted_s_below: Vec<f64> = stats::sorted(
                &(0..n)
                    .filter(|&j| col_t[j] <= median_t)
                    .map(|j| col_s[j])
                    .collect::<Vec<_>>(),
            );
            (0..n)
                .map(|i| {
                    let shifted_s = col_s[i] - col_t[i] + median_t;
                    let count_s = sorted_s.partition_point(|&v| v <= shifted_s);
                    let count_st = sorted_s_below.partition_point(|&v| v <= shifted_s);
                    shape_ratio(count_s, count_t, count_st, n)
                })
                .collect()
        })
        .collect();
    let steps = p - lag;
    Ok((0..n)
        .map(|i| {
            let row = values.row(i);
            let increments: Vec<f64> = (lag..p).map(|k| (row[k] - row[k - lag]).abs()).collect();
            let total: f64 = increments.iter().sum();
            (0..steps)
                .map(|k| {
                    let w = if total > 0.0 { increments[k] / total } else { 1.0 / steps as f64 };
                    ratios[k][i] * w
                })
                .sum()
        })
        .collect())
}

/// Both indices on one sample.
pub fn tvd_mss(sample: &CurveSample) -> Result<TvdResult> {
    Ok(TvdResult {
        tvd: total_variation_depth(sample)?,
        mss: modified_shape_similarity(sample)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;
    use ndarray::Array2;

    fn sample_from(values: Array2<f64>) -> CurveSample {
        CurveSample::on_unit_interval(values).unwrap()
    }

    fn random_sample(seed: u64, n: usize, p: usize) -> CurveSample {
        let mut rng = RandomSource::new(seed);
        sample_from(Array2::from_shape_vec((n, p), rng.standard_normals(n * p)).unwrap())
    }

    fn naive_tvd(s: &CurveSample) -> Vec<f64> {
        let v = s.values();
        let (n, p) = v.dim();
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for t in 0..p {
                    let mut le = 0.0;
                    for j in 0..n {
                        if v[[j, t]] <= v[[i, t]] {
                            le += 1.0;
                        }
                    }
                    let ph = le / n as f64;
                    acc += ph * (1.0 - ph);
                }
                acc / p as f64
            })
            .collect()
    }

    fn naive_mss(s: &CurveSample) -> Vec<f64> {
        let v = s.values();
        let (n, p) = v.dim();
        let nf = n as f64;
        let mut out = Vec::new();
        for i in 0..n {
            let incs: Vec<f64> = (1..p).map(|k| (v[[i, k]] - v[[i, k - 1]]).abs()).collect();
            let tot: f64 = incs.iter().sum();
            let mut mss = 0.0;
            for k in 1..p {
                let mut col: Vec<f64> = (0..n).map(|j| v[[j, k]]).collect();
                col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let med = if n % 2 == 1 { col[n / 2] } else { 0.5 * (col[n / 2 - 1] + col[n / 2]) };
                let ys = v[[i, k - 1]] - v[[i, k]] + med;
                let (mut cs, mut ct, mut cst) = (0.0, 0.0, 0.0);
                for j in 0..n {
                    let rs = v[[j, k - 1]] <= ys;
                    let rt = v[[j, k]] <= med;
                    cs += rs as u8 as f64;
                    ct += rt as u8 as f64;
                    cst += (rs && rt) as u8 as f64;
                }
                let (ps, pt, pst) = (cs / nf, ct / nf, cst / nf);
                let d = pt * (1.0 - pt);
                let s_ratio = if d == 0.0 {
                    1.0
                } else {
                    // var of E(R_t | R_s) by explicit second moments
                    let e1 = if cs > 0.0 { cst / cs } else { 0.0 };
                    let e0 = if cs < nf { (ct - cst) / (nf - cs) } else { 0.0 };
                    let mean = ps * e1 + (1.0 - ps) * e0;
                    let var = ps * (e1 - mean).powi(2) + (1.0 - ps) * (e0 - mean).powi(2);
                    let _ = pst;
                    var / d
                };
                let w = if tot > 0.0 { incs[k - 1] / tot } else { 1.0 / (p - 1) as f64 };
                mss += s_ratio * w;
            }
            out.push(mss);
        }
        out
    }

    #[test]
    fn constant_fixture() {
        let s = sample_from(Array2::from_shape_fn((3, 4), |(i, _)| i as f64));
        let tvd = total_variation_depth(&s).unwrap();
        assert!((tvd[0] - 2.0 / 9.0).abs() < 1e-15);
        assert!((tvd[1] - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(tvd[2], 0.0);
    }

    #[test]
    fn identical_curves_have_unit_mss() {
        let s = sample_from(Array2::from_shape_fn((6, 5), |(_, t)| (t as f64).sin()));
        assert!(modified_shape_similarity(&s).unwrap().iter().all(|&m| m == 1.0));
    }

    #[test]
    fn kernels_match_naive() {
        for seed in 0..20 {
            let s = random_sample(seed, 15, 10);
            for (a, b) in total_variation_depth(&s).unwrap().iter().zip(naive_tvd(&s)) {
                assert!((a - b).abs() <= 1e-14);
            }
            for (a, b) in modified_shape_similarity(&s).unwrap().iter().zip(naive_mss(&s)) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn kernels_match_naive_with_ties() {
        for seed in 0..10 {
            let mut rng = RandomSource::new(seed);
            let s = sample_from(Array2::from_shape_fn((12, 8), |_| rng.below(3) as f64));
            for (a, b) in modified_shape_similarity(&s).unwrap().iter().zip(naive_mss(&s)) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn law_of_total_variance() {
        let mut rng = RandomSource::new(12);
        for _ in 0..200 {
            let n = 2 + rng.below(20);
            let rs: Vec<bool> = (0..n).map(|_| rng.bernoulli(0.4)).collect();
            let rt: Vec<bool> = (0..n).map(|_| rng.bernoulli(0.6)).collect();
            let d = indicator_variance_decomposition(&rs, &rt);
            assert!((d.total - d.shape - d.magnitude).abs() < 1e-12);
        }
    }

    #[test]
    fn tvd_rank_invariance() {
        let s = random_sample(5, 10, 6);
        let e = sample_from(s.values().mapv(f64::exp));
        assert_eq!(total_variation_depth(&s).unwrap(), total_variation_depth(&e).unwrap());
    }

    #[test]
    fn mss_bounds_and_errors() {
        let s = random_sample(9, 20, 12);
        assert!(modified_shape_similarity(&s).unwrap().iter().all(|&m| (0.0..=1.0 + 1e-12).contains(&m)));
        let one_point = CurveSample::new(
            Array2::zeros((4, 2)),
            crate::sample::Grid::uniform(2, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(modified_shape_similarity(&one_point).is_ok());
        assert!(matches!(
            total_variation_depth(&random_sample(1, 1, 5)),
            Err(FdError::TooFewCurves { .. })
        ));
        assert!(matches!(
            modified_shape_similarity_lag(&s, 12),
            Err(FdError::InvalidParameter(_))
        ));
    }

    #[test]
    fn oscillating_increments_lower_similarity() {
        // Smooth increasing family plus one copy with reversed increments.
        let p = 20;
        let n = 15;
        let mut v = Array2::from_shape_fn((n, p), |(i, t)| {
            let x = t as f64 / (p - 1) as f64;
            3.0 * x + 0.2 * i as f64
        });
        let reference = 7;
        for t in 0..p {
            let x = t as f64 / (p - 1) as f64;
            v[[n - 1, t]] = v[[reference, 0]] - 3.0 * x + 3.0 * 0.5;
        }
        let mss = modified_shape_similarity(&sample_from(v)).unwrap();
        assert!(mss[reference] >= mss[n - 1]);
    }
}

//! Brute-force reference implementations used by integration tests.
#![allow(dead_code)]

use fdout_core::{CurveSample, RandomSource};
use ndarray::Array2;

pub fn gaussian_sample(seed: u64, n: usize, p: usize) -> CurveSample {
    let mut rng = RandomSource::new(seed);
    CurveSample::on_unit_interval(Array2::from_shape_vec((n, p), rng.standard_normals(n * p)).unwrap())
        .unwrap()
}

/// Values from {0, …, levels − 1} so that ties are common.
pub fn tied_sample(seed: u64, n: usize, p: usize, levels: usize) -> CurveSample {
    let mut rng = RandomSource::new(seed);
    CurveSample::on_unit_interval(Array2::from_shape_fn((n, p), |_| rng.below(levels) as f64)).unwrap()
}

fn inside(v: &Array2<f64>, i: usize, j: usize, k: usize, t: usize) -> bool {
    let lo = v[[j, t]].min(v[[k, t]]);
    let hi = v[[j, t]].max(v[[k, t]]);
    lo <= v[[i, t]] && v[[i, t]] <= hi
}

pub fn band_depth(s: &CurveSample) -> Vec<f64> {
    let v = s.values();
    let (n, p) = v.dim();
    let pairs = (n * (n - 1) / 2) as f64;
    (0..n)
        .map(|i| {
            let mut c = 0.0;
            for j in 0..n {
                for k in j + 1..n {
                    if (0..p).all(|t| inside(v, i, j, k, t)) {
                        c += 1.0;
                    }
                }
            }
            c / pairs
        })
        .collect()
}

pub fn modified_band_depth(s: &CurveSample) -> Vec<f64> {
    let v = s.values();
    let (n, p) = v.dim();
    let pairs = (n * (n - 1) / 2) as f64;
    (0..n)
        .map(|i| {
            let mut c = 0.0;
            for j in 0..n {
                for k in j + 1..n {
                    c += (0..p).filter(|&t| inside(v, i, j, k, t)).count() as f64 / p as f64;
                }
            }
            c / pairs
        })
        .collect()
}

pub fn total_variation_depth(s: &CurveSample) -> Vec<f64> {
    let v = s.values();
    let (n, p) = v.dim();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for t in 0..p {
                let le = (0..n).filter(|&j| v[[j, t]] <= v[[i, t]]).count() as f64 / n as f64;
                acc += le * (1.0 - le);
            }
            acc / p as f64
        })
        .collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Shape ratio from explicit conditional means of the indicator pair.
fn shape_ratio(rs: &[bool], rt: &[bool]) -> f64 {
    let n = rs.len() as f64;
    let pt = rt.iter().filter(|&&b| b).count() as f64 / n;
    let total = pt * (1.0 - pt);
    if total == 0.0 {
        return 1.0;
    }
    let mean_given = |flag: bool| {
        let idx: Vec<usize> = (0..rs.len()).filter(|&j| rs[j] == flag).collect();
        if idx.is_empty() {
            (0.0, 0.0)
        } else {
            let m = idx.iter().filter(|&&j| rt[j]).count() as f64 / idx.len() as f64;
            (m, idx.len() as f64 / n)
        }
    };
    let (m1, w1) = mean_given(true);
    let (m0, w0) = mean_given(false);
    let grand = w1 * m1 + w0 * m0;
    (w1 * (m1 - grand).powi(2) + w0 * (m0 - grand).powi(2)) / total
}

pub fn modified_shape_similarity(s: &CurveSample) -> Vec<f64> {
    let v = s.values();
    let (n, p) = v.dim();
    (0..n)
        .map(|i| {
            let incs: Vec<f64> = (1..p).map(|k| (v[[i, k]] - v[[i, k - 1]]).abs()).collect();
            let total: f64 = incs.iter().sum();
            (1..p)
                .map(|k| {
                    let med = median((0..n).map(|j| v[[j, k]]).collect());
                    let shifted = v[[i, k - 1]] - v[[i, k]] + med;
                    let rs: Vec<bool> = (0..n).map(|j| v[[j, k - 1]] <= shifted).collect();
                    let rt: Vec<bool> = (0..n).map(|j| v[[j, k]] <= med).collect();
                    let w = if total > 0.0 { incs[k - 1] / total } else { 1.0 / (p - 1) as f64 };
                    shape_ratio(&rs, &rt) * w
                })
                .sum()
        })
        .collect()
}

/// (shape, magnitude, amplitude) from explicit per-pair loops.
pub fn muod_indices(s: &CurveSample) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let v = s.values();
    let (n, p) = v.dim();
    let mean = |i: usize| (0..p).map(|t| v[[i, t]]).sum::<f64>() / p as f64;
    let cov = |i: usize, j: usize| {
        let (mi, mj) = (mean(i), mean(j));
        (0..p).map(|t| (v[[i, t]] - mi) * (v[[j, t]] - mj)).sum::<f64>() / (p - 1) as f64
    };
    let (mut shape, mut magnitude, mut amplitude) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        let (mut rho, mut nr, mut beta, mut alpha, mut nb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 0..n {
            let vj = cov(j, j);
            if vj == 0.0 {
                continue;
            }
            let c = cov(i, j);
            let b = c / vj;
            beta += b;
            alpha += mean(i) - b * mean(j);
            nb += 1.0;
            let vi = cov(i, i);
            if vi > 0.0 {
                rho += c / (vi.sqrt() * vj.sqrt());
                nr += 1.0;
            }
        }
        let r = if nr > 0.0 { rho / nr } else { 0.0 };
        shape.push((r - 1.0).abs());
        magnitude.push((alpha / nb).abs());
        amplitude.push((beta / nb - 1.0).abs());
    }
    (shape, magnitude, amplitude)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

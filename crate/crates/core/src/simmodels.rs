//! Seedable contamination models.
//!
//! Every model draws a base sample on a uniform grid over [0, 1] and
//! replaces a subset of rows with contaminated curves. Three independent
//! random streams are derived from the seed: row selection, base noise and
//! contamination, so the base rows of a given seed do not depend on which
//! rows end up contaminated.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{FdError, Result};
use crate::rng::RandomSource;
use crate::sample::{CurveSample, Grid};

/// Mean function of a Gaussian process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanFunction {
    Zero,
    /// intercept + slope·t
    Linear { intercept: f64, slope: f64 },
    /// amplitude·sin(2π·frequency·(t + phase))
    Sine { amplitude: f64, frequency: f64, phase: f64 },
}

impl MeanFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            MeanFunction::Zero => 0.0,
            MeanFunction::Linear { intercept, slope } => intercept + slope * t,
            MeanFunction::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (2.0 * PI * frequency * (t + phase)).sin(),
        }
    }
}

/// Gaussian process with covariance γ(s, t) = α exp(−β |s − t|^ν).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProcessSpec {
    pub mean: MeanFunction,
    pub amplitude: f64,
    pub range: f64,
    pub exponent: f64,
}

impl GaussianProcessSpec {
    pub fn new(mean: MeanFunction, amplitude: f64, range: f64, exponent: f64) -> Result<Self> {
        let spec = Self {
            mean,
            amplitude,
            range,
            exponent,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(FdError::InvalidParameter(format!("amplitude {} must be positive", self.amplitude)));
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(FdError::InvalidParameter(format!("range {} must be positive", self.range)));
        }
        if !(self.exponent > 0.0 && self.exponent <= 2.0) {
            return Err(FdError::InvalidParameter(format!("exponent {} must lie in (0, 2]", self.exponent)));
        }
        Ok(())
    }

    pub fn covariance(&self, s: f64, t: f64) -> f64 {
        self.amplitude * (-self.range * (s - t).abs().powf(self.exponent)).exp()
    }
}

/// Lower Cholesky factor of the process covariance on `grid`, retrying once
/// with 1e-10 added to the diagonal.
fn covariance_factor(spec: &GaussianProcessSpec, grid: &Grid) -> Result<DMatrix<f64>> {
    let pts = grid.points();
    let p = pts.len();
    let cov = DMatrix::from_fn(p, p, |a, b| spec.covariance(pts[a], pts[b]));
    if let Some(c) = cov.clone().cholesky() {
        return Ok(c.l());
    }
    let jittered = cov + DMatrix::identity(p, p) * 1e-10;
    jittered.cholesky().map(|c| c.l()).ok_or(FdError::CovarianceNotPD)
}

fn draw_paths(spec: &GaussianProcessSpec, l: &DMatrix<f64>, grid: &Grid, n: usize, rng: &mut RandomSource) -> Array2<f64> {
    let pts = grid.points();
    let p = pts.len();
    let mut out = Array2::zeros((n, p));
    for i in 0..n {
        let z = rng.standard_normals(p);
        for a in 0..p {
            let mut acc = spec.mean.eval(pts[a]);
            for (b, zb) in z.iter().enumerate().take(a + 1) {
                acc += l[(a, b)] * zb;
            }
            out[[i, a]] = acc;
        }
    }
    out
}

/// n paths mean + L z.
pub fn gp_sample(spec: &GaussianProcessSpec, grid: &Grid, n: usize, rng: &mut RandomSource) -> Result<CurveSample> {
    if n == 0 {
        return Err(FdError::EmptySample);
    }
    spec.validate()?;
    let l = covariance_factor(spec, grid)?;
    CurveSample::new(draw_paths(spec, &l, grid, n, rng), grid.clone())
}

/// Tunable constants of the nine models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    /// Slope of the base mean 4t (models 1–6, 9).
    pub trend: f64,
    /// Base noise covariance α exp(−β|s − t|^ν).
    pub noise_amplitude: f64,
    pub noise_range: f64,
    pub noise_exponent: f64,
    /// Magnitude shift size for models 1–3.
    pub shift: f64,
    /// Spike width for model 2.
    pub spike_length: f64,
    /// Onset range for model 3.
    pub onset_min: f64,
    pub onset_max: f64,
    /// Outlier noise covariance for model 5.
    pub shape_amplitude: f64,
    pub shape_range: f64,
    pub shape_exponent: f64,
    /// Amplitude of 2 sin(4πt) in model 6.
    pub drift_amplitude: f64,
    /// Sine amplitude of models 7 and 8.
    pub wave_amplitude: f64,
    /// Phase shift of model 7 outliers.
    pub phase_shift: f64,
    /// Scale range of model 8 outliers.
    pub scale_min: f64,
    pub scale_max: f64,
    /// Local oscillation of model 9: amplitude·sin(2π·frequency·t) on a window.
    pub local_amplitude: f64,
    pub local_frequency: f64,
    pub local_length: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            trend: 4.0,
            noise_amplitude: 1.0,
            noise_range: 1.0,
            noise_exponent: 1.0,
            shift: 8.0,
            spike_length: 0.04,
            onset_min: 0.2,
            onset_max: 0.8,
            shape_amplitude: 8.0,
            shape_range: 2.0,
            shape_exponent: 0.5,
            drift_amplitude: 2.0,
            wave_amplitude: 4.0,
            phase_shift: 0.15,
            scale_min: 1.5,
            scale_max: 2.0,
            local_amplitude: 2.0,
            local_frequency: 20.0,
            local_length: 0.2,
        }
    }
}

/// Everything needed to regenerate a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub model: usize,
    pub n: usize,
    pub p: usize,
    pub outlier_rate: f64,
    pub deterministic: bool,
    pub seed: u64,
    pub overrides: ModelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub data: CurveSample,
    /// Sorted 0-based contaminated rows.
    pub true_outliers: Vec<usize>,
    pub model_id: usize,
    pub params: SimulationParams,
}

pub const MODELS: std::ops::RangeInclusive<usize> = 1..=9;

/// Rows to contaminate: Bernoulli(rate) per row, or exactly ⌈n·rate⌉ rows at
/// positions ⌊(2j + 1) n / 2k⌋ when `deterministic` is set.
pub fn select_outliers(n: usize, rate: f64, deterministic: bool, rng: &mut RandomSource) -> Vec<usize> {
    if deterministic {
        let k = ((n as f64 * rate) - 1e-9).ceil().max(0.0) as usize;
        let k = k.min(n);
        (0..k).map(|j| (2 * j + 1) * n / (2 * k)).collect()
    } else {
        (0..n).filter(|_| rng.bernoulli(rate)).collect()
    }
}

fn window(rng: &mut RandomSource, length: f64) -> (f64, f64) {
    let start = rng.uniform_range(0.0, (1.0 - length).max(0.0));
    (start, start + length)
}

/// Draws model `k` with `n` curves on `p` uniform points of [0, 1].
pub fn simulation_model(
    k: usize,
    n: usize,
    p: usize,
    outlier_rate: f64,
    deterministic: bool,
    seed: u64,
    overrides: &ModelParams,
) -> Result<SimulationOutput> {
    if !MODELS.contains(&k) {
        return Err(FdError::BadModel(k));
    }
    if !(0.0..=1.0).contains(&outlier_rate) {
        return Err(FdError::BadRate(outlier_rate));
    }
    if n == 0 {
        return Err(FdError::EmptySample);
    }
    let m = overrides;
    let grid = Grid::uniform(p, 0.0, 1.0)?;
    let ts = grid.points().to_vec();

    let mut selection = RandomSource::stream(seed, 0);
    let mut base_stream = RandomSource::stream(seed, 1);
    let mut contamination = RandomSource::stream(seed, 2);

    let outliers = select_outliers(n, outlier_rate, deterministic, &mut selection);
    let noise_spec = GaussianProcessSpec::new(MeanFunction::Zero, m.noise_amplitude, m.noise_range, m.noise_exponent)?;
    let noise = gp_sample(&noise_spec, &grid, n, &mut base_stream)?.into_parts().0;

    let wave = |t: f64, phase: f64| m.wave_amplitude * (2.0 * PI * (t + phase)).sin();
    let base_mean = |t: f64| match k {
        7 | 8 => wave(t, 0.0),
        _ => m.trend * t,
    };
    let mut values = Array2::from_shape_fn((n, p), |(i, a)| base_mean(ts[a]) + noise[[i, a]]);

    let shape_noise = if k == 5 && !outliers.is_empty() {
        let spec = GaussianProcessSpec::new(MeanFunction::Zero, m.shape_amplitude, m.shape_range, m.shape_exponent)?;
        Some(gp_sample(&spec, &grid, outliers.len(), &mut contamination)?.into_parts().0)
    } else {
        None
    };

    for (r, &i) in outliers.iter().enumerate() {
        let mut row = values.row_mut(i);
        match k {
            1 => {
                let kappa = contamination.sign();
                row.mapv_inplace(|v| v + m.shift * kappa);
            }
            2 => {
                let kappa = contamination.sign();
                let (lo, hi) = window(&mut contamination, m.spike_length);
                for a in 0..p {
                    if ts[a] >= lo && ts[a] <= hi {
                        row[a] += m.shift * kappa;
                    }
                }
            }
            3 => {
                let kappa = contamination.sign();
                let onset = contamination.uniform_range(m.onset_min, m.onset_max);
                for a in 0..p {
                    if ts[a] >= onset {
                        row[a] += m.shift * kappa;
                    }
                }
            }
            4 => {
                for a in 0..p {
                    row[a] = m.trend * (1.0 - ts[a]) + noise[[i, a]];
                }
            }
            5 => {
                let e = shape_noise.as_ref().expect("drawn above");
                for a in 0..p {
                    row[a] = m.trend * ts[a] + e[[r, a]];
                }
            }
            6 => {
                for a in 0..p {
                    row[a] += m.drift_amplitude * (4.0 * PI * ts[a]).sin();
                }
            }
            7 => {
                let kappa = contamination.sign();
                for a in 0..p {
                    row[a] = wave(ts[a], kappa * m.phase_shift) + noise[[i, a]];
                }
            }
            8 => {
                let theta = contamination.uniform_range(m.scale_min, m.scale_max);
                for a in 0..p {
                    row[a] = theta * wave(ts[a], 0.0) + noise[[i, a]];
                }
            }
            9 => {
                let (lo, hi) = window(&mut contamination, m.local_length);
                for a in 0..p {
                    if ts[a] >= lo && ts[a] <= hi {
                        row[a] += m.local_amplitude * (2.0 * PI * m.local_frequency * ts[a]).sin();
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    Ok(SimulationOutput {
        data: CurveSample::new(values, grid)?,
        true_outliers: outliers,
        model_id: k,
        params: SimulationParams {
            model: k,
            n,
            p,
            outlier_rate,
            deterministic,
            seed,
            overrides: overrides.clone(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_spec(amplitude: f64) -> GaussianProcessSpec {
        GaussianProcessSpec::new(MeanFunction::Linear { intercept: 1.0, slope: 4.0 }, amplitude, 1.0, 1.0).unwrap()
    }

    #[test]
    fn vanishing_noise_returns_mean() {
        let grid = Grid::uniform(20, 0.0, 1.0).unwrap();
        let s = gp_sample(&exp_spec(1e-16), &grid, 5, &mut RandomSource::new(1)).unwrap();
        for row in s.values().rows() {
            for (a, v) in row.iter().enumerate() {
                assert!((v - (1.0 + 4.0 * grid.points()[a])).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn empirical_covariance_matches_kernel() {
        let grid = Grid::uniform(10, 0.0, 1.0).unwrap();
        let spec = GaussianProcessSpec::new(MeanFunction::Zero, 2.0, 1.5, 1.0).unwrap();
        let s = gp_sample(&spec, &grid, 10_000, &mut RandomSource::new(2)).unwrap();
        let (a, b) = (1, 6);
        let n = s.n() as f64;
        let xa = s.values().column(a);
        let xb = s.values().column(b);
        let (ma, mb) = (xa.sum() / n, xb.sum() / n);
        let cov: f64 = xa.iter().zip(xb.iter()).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0);
        let want = spec.covariance(grid.points()[a], grid.points()[b]);
        assert!((cov - want).abs() < 0.05 * want, "{cov} vs {want}");
    }

    #[test]
    fn gp_is_deterministic() {
        let grid = Grid::uniform(8, 0.0, 1.0).unwrap();
        let a = gp_sample(&exp_spec(1.0), &grid, 4, &mut RandomSource::new(3)).unwrap();
        let b = gp_sample(&exp_spec(1.0), &grid, 4, &mut RandomSource::new(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spec_validation() {
        assert!(GaussianProcessSpec::new(MeanFunction::Zero, 0.0, 1.0, 1.0).is_err());
        assert!(GaussianProcessSpec::new(MeanFunction::Zero, 1.0, 1.0, 2.5).is_err());
        assert!(GaussianProcessSpec::new(MeanFunction::Zero, 1.0, 1.0, 2.0).is_ok());
    }

    #[test]
    fn rate_and_model_validation() {
        let d = ModelParams::default();
        assert_eq!(simulation_model(0, 10, 5, 0.1, true, 1, &d).unwrap_err(), FdError::BadModel(0));
        assert_eq!(simulation_model(10, 10, 5, 0.1, true, 1, &d).unwrap_err(), FdError::BadModel(10));
        assert_eq!(simulation_model(1, 10, 5, 1.5, true, 1, &d).unwrap_err(), FdError::BadRate(1.5));
        assert!(matches!(simulation_model(1, 10, 5, f64::NAN, true, 1, &d), Err(FdError::BadRate(_))));
    }

    #[test]
    fn forced_counts() {
        let d = ModelParams::default();
        for k in MODELS {
            let out = simulation_model(k, 100, 30, 0.1, true, 7, &d).unwrap();
            assert_eq!(out.true_outliers.len(), 10);
            assert_eq!(out.data.values().dim(), (100, 30));
            assert!(out.true_outliers.windows(2).all(|w| w[0] < w[1]));
            let clean = simulation_model(k, 20, 30, 0.0, false, 7, &d).unwrap();
            assert!(clean.true_outliers.is_empty());
        }
    }

    #[test]
    fn base_rows_do_not_depend_on_contamination() {
        let d = ModelParams::default();
        let clean = simulation_model(1, 50, 20, 0.0, true, 11, &d).unwrap();
        let dirty = simulation_model(1, 50, 20, 0.2, true, 11, &d).unwrap();
        for i in 0..50 {
            if !dirty.true_outliers.contains(&i) {
                assert_eq!(clean.data.curve(i), dirty.data.curve(i));
            }
        }
    }

    #[test]
    fn model1_shift_size() {
        let d = ModelParams::default();
        let mut gaps = Vec::new();
        for seed in 0..20 {
            let out = simulation_model(1, 100, 50, 0.1, true, seed, &d).unwrap();
            let means: Vec<f64> = out.data.values().rows().into_iter().map(|r| r.sum() / 50.0).collect();
            let bulk: Vec<f64> = (0..100).filter(|i| !out.true_outliers.contains(i)).map(|i| means[i]).collect();
            let bulk_mean = crate::stats::mean(&bulk);
            for &i in &out.true_outliers {
                assert!(((means[i] - bulk_mean).abs() - 8.0).abs() < 3.0);
                gaps.push((means[i] - bulk_mean).abs());
            }
        }
        assert!((crate::stats::mean(&gaps) - 8.0).abs() < 1.0);
    }
}

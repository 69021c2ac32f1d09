//! Detectors: functional boxplot, MS-Plot, TVD/MSS, the O transform and
//! sequential transformations.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::depths::{self, DepthDirection, DepthMethod, DepthVector};
use crate::dirout::{self, OutlyingnessDecomposition};
use crate::error::{FdError, Result};
use crate::rng::RandomSource;
use crate::robust::{self, FCutoff, McdFit};
use crate::sample::{CurveSample, MultiCurveSample, SampleData};
use crate::stats;
use crate::tvd;

pub const DEFAULT_CENTRAL_REGION: f64 = 0.5;
pub const DEFAULT_FENCE_FACTOR: f64 = 1.5;
pub const DEFAULT_LEVEL: f64 = 0.05;

/// Number of curves in a central region, ⌈n·fraction⌉ guarded against
/// representation error in the product.
fn central_count(n: usize, fraction: f64) -> usize {
    (((n as f64) * fraction - 1e-9).ceil().max(1.0) as usize).min(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalBoxplotResult {
    pub depth: DepthVector,
    pub central_indices: Vec<usize>,
    pub envelope_lower: Vec<f64>,
    pub envelope_upper: Vec<f64>,
    pub fence_lower: Vec<f64>,
    pub fence_upper: Vec<f64>,
    pub outliers: Vec<usize>,
}

/// Functional boxplot with the central region formed by the ⌈n·central_region⌉
/// deepest curves. Outlying-is-larger scores are negated before ordering.
pub fn functional_boxplot(
    sample: &CurveSample,
    depth: &DepthVector,
    central_region: f64,
    factor: f64,
) -> Result<FunctionalBoxplotResult> {
    if !(central_region > 0.0 && central_region < 1.0) {
        return Err(FdError::BadCentralRegion(central_region));
    }
    boxplot_with_count(sample, depth, central_count(sample.n(), central_region), factor)
}

fn boxplot_with_count(
    sample: &CurveSample,
    depth: &DepthVector,
    count: usize,
    factor: f64,
) -> Result<FunctionalBoxplotResult> {
    let n = sample.n();
    if depth.len() != n {
        return Err(FdError::InvalidParameter(format!(
            "{} depth values for {n} curves",
            depth.len()
        )));
    }
    if !(factor > 0.0) {
        return Err(FdError::InvalidParameter(format!("fence factor {factor} must be positive")));
    }
    let order = depth.order_deepest_first();
    let mut central: Vec<usize> = order[..count.min(n)].to_vec();
    central.sort_unstable();
    let values = sample.values();
    let p = sample.p();
    let mut lower = vec![f64::INFINITY; p];
    let mut upper = vec![f64::NEG_INFINITY; p];
    for &i in &central {
        for t in 0..p {
            lower[t] = lower[t].min(values[[i, t]]);
            upper[t] = upper[t].max(values[[i, t]]);
        }
    }
    let mut fence_lower = lower.clone();
    let mut fence_upper = upper.clone();
    for t in 0..p {
        let range = upper[t] - lower[t];
        if range > 0.0 {
            fence_lower[t] = lower[t] - factor * range;
            fence_upper[t] = upper[t] + factor * range;
        }
    }
    let outliers = (0..n)
        .filter(|&i| (0..p).any(|t| values[[i, t]] < fence_lower[t] || values[[i, t]] > fence_upper[t]))
        .collect();
    Ok(FunctionalBoxplotResult {
        depth: depth.clone(),
        central_indices: central,
        envelope_lower: lower,
        envelope_upper: upper,
        fence_lower,
        fence_upper,
        outliers,
    })
}

/// Settings shared by the MS-Plot and the robust-distance ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsplotConfig {
    /// Tail probability of the F cutoff.
    pub level: f64,
    /// MCD coverage; `None` is the maximal-breakdown subset.
    pub coverage: Option<f64>,
    /// Projection directions for the Stahel–Donoho outlyingness (d ≥ 2).
    pub n_directions: usize,
}

impl Default for MsplotConfig {
    fn default() -> Self {
        Self {
            level: DEFAULT_LEVEL,
            coverage: None,
            n_directions: dirout::DEFAULT_N_DIRECTIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsplotResult {
    pub outliers: Vec<usize>,
    /// n × d.
    pub mo: Array2<f64>,
    pub vo: Vec<f64>,
    /// Squared robust distances of (MO, VO).
    pub distances: Vec<f64>,
    pub cutoff: FCutoff,
    pub fit: McdFit,
}

struct MsDistances {
    decomposition: OutlyingnessDecomposition,
    distances: Vec<f64>,
    fit: McdFit,
    /// Number of curves the MCD was fitted on.
    fitted: usize,
}

/// Robust squared distances of (MO, VO). Curves with a non-finite MO or VO
/// (zero pointwise MAD with a deviating value) get +∞ and are left out of
/// the MCD fit.
fn ms_distances(sample: &MultiCurveSample, config: &MsplotConfig, rng: &mut RandomSource) -> Result<MsDistances> {
    let (n, _, d) = sample.values().dim();
    let required = 2 * (d + 1) + 3;
    if n < required {
        return Err(FdError::TooFewCurves { required, found: n });
    }
    let field = dirout::directional_outlyingness(sample, config.n_directions, rng)?;
    let decomposition = dirout::decompose(&field, None)?;
    let points = Array2::from_shape_fn((n, d + 1), |(i, k)| {
        if k < d {
            decomposition.mo[[i, k]]
        } else {
            decomposition.vo[i]
        }
    });
    let finite: Vec<usize> = (0..n)
        .filter(|&i| points.row(i).iter().all(|x| x.is_finite()))
        .collect();
    if finite.len() < required {
        return Err(FdError::TooFewCurves {
            required,
            found: finite.len(),
        });
    }
    let fit_points = points.select(Axis(0), &finite);
    let fit = robust::fast_mcd(fit_points.view(), config.coverage, rng)?;
    let finite_distances = robust::robust_distances(fit_points.view(), &fit)?;
    let mut distances = vec![f64::INFINITY; n];
    for (&i, dist) in finite.iter().zip(finite_distances) {
        distances[i] = dist;
    }
    Ok(MsDistances {
        decomposition,
        distances,
        fit,
        fitted: finite.len(),
    })
}

/// Magnitude–shape plot detector.
pub fn msplot(sample: &MultiCurveSample, config: &MsplotConfig, rng: &mut RandomSource) -> Result<MsplotResult> {
    let d = sample.dims();
    let ms = ms_distances(sample, config, rng)?;
    let cutoff = robust::hardin_rocke_cutoff(ms.fitted, d + 1, config.coverage, config.level)?;
    let outliers = (0..sample.n())
        .filter(|&i| ms.distances[i] > cutoff.threshold)
        .collect();
    Ok(MsplotResult {
        outliers,
        mo: ms.decomposition.mo,
        vo: ms.decomposition.vo,
        distances: ms.distances,
        cutoff,
        fit: ms.fit,
    })
}

pub fn msplot_univariate(sample: &CurveSample, config: &MsplotConfig, rng: &mut RandomSource) -> Result<MsplotResult> {
    msplot(&sample.to_multi(), config, rng)
}

/// Robust Mahalanobis distance of (MO, VO) as an outlying-is-larger ordering.
pub fn robust_distance_ordering(
    sample: &MultiCurveSample,
    config: &MsplotConfig,
    rng: &mut RandomSource,
) -> Result<DepthVector> {
    let ms = ms_distances(sample, config, rng)?;
    Ok(DepthVector::new(ms.distances, DepthDirection::OutlyingIsLarger, "rmd"))
}

/// Ordering of `sample` by `method`. Only the robust-distance ordering draws
/// random numbers.
pub fn compute_depth(sample: &CurveSample, method: DepthMethod, rng: &mut RandomSource) -> Result<DepthVector> {
    match method {
        DepthMethod::Bd => depths::band_depth(sample),
        DepthMethod::Mbd => depths::modified_band_depth(sample),
        DepthMethod::Erld(kind) => depths::extreme_rank_length(sample, kind),
        DepthMethod::Dq => depths::directional_quantile(sample, depths::DEFAULT_DQ_TAIL),
        DepthMethod::Linf => depths::linfinity_depth(sample),
        DepthMethod::Extremal => depths::extremal_depth(sample),
        DepthMethod::Tvd => Ok(DepthVector::new(
            tvd::total_variation_depth(sample)?,
            DepthDirection::DeeperIsLarger,
            "tvd",
        )),
        DepthMethod::Rmd => robust_distance_ordering(&sample.to_multi(), &MsplotConfig::default(), rng),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvdmssConfig {
    pub emp_factor_mss: f64,
    pub emp_factor_tvd: f64,
    pub central_region_tvd: f64,
}

impl Default for TvdmssConfig {
    fn default() -> Self {
        Self {
            emp_factor_mss: DEFAULT_FENCE_FACTOR,
            emp_factor_tvd: DEFAULT_FENCE_FACTOR,
            central_region_tvd: DEFAULT_CENTRAL_REGION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvdmssResult {
    pub shape_outliers: Vec<usize>,
    pub magnitude_outliers: Vec<usize>,
    pub outliers: Vec<usize>,
    pub tvd: Vec<f64>,
    pub mss: Vec<f64>,
}

/// Shape outliers from a lower-side boxplot on MSS, then a TVD-ordered
/// functional boxplot on the remaining curves whose central region holds
/// ⌈n·central_region_tvd⌉ curves of the original sample.
pub fn tvdmss(sample: &CurveSample, config: &TvdmssConfig) -> Result<TvdmssResult> {
    let n = sample.n();
    if n < 5 {
        return Err(FdError::TooFewCurves { required: 5, found: n });
    }
    if !(config.central_region_tvd > 0.0 && config.central_region_tvd < 1.0) {
        return Err(FdError::BadCentralRegion(config.central_region_tvd));
    }
    for f in [config.emp_factor_mss, config.emp_factor_tvd] {
        if !(f > 0.0) {
            return Err(FdError::InvalidParameter(format!("fence factor {f} must be positive")));
        }
    }
    let scores = tvd::tvd_mss(sample)?;
    let (mss_fence, _) = stats::tukey_fences(&scores.mss, config.emp_factor_mss);
    let shape: Vec<usize> = (0..n).filter(|&i| scores.mss[i] < mss_fence).collect();
    let remaining: Vec<usize> = (0..n).filter(|i| !shape.contains(i)).collect();
    let magnitude = if remaining.is_empty() {
        Vec::new()
    } else {
        let rest = sample.select(&remaining)?;
        let depth = DepthVector::new(
            remaining.iter().map(|&i| scores.tvd[i]).collect(),
            DepthDirection::DeeperIsLarger,
            "tvd",
        );
        let count = central_count(n, config.central_region_tvd).min(remaining.len());
        boxplot_with_count(&rest, &depth, count, config.emp_factor_tvd)?
            .outliers
            .into_iter()
            .map(|k| remaining[k])
            .collect()
    };
    let outliers: BTreeSet<usize> = shape.iter().chain(&magnitude).copied().collect();
    Ok(TvdmssResult {
        shape_outliers: shape,
        magnitude_outliers: magnitude,
        outliers: outliers.into_iter().collect(),
        tvd: scores.tvd,
        mss: scores.mss,
    })
}

/// Pointwise Stahel–Donoho outlyingness magnitudes as a univariate sample.
/// Cells where the pointwise MAD vanishes but the curve deviates carry an
/// infinite sentinel; they are replaced by 2·(largest finite value) + 1 so
/// the output stays finite and keeps those cells the most extreme.
pub fn o_transform(sample: &MultiCurveSample, n_directions: usize, rng: &mut RandomSource) -> Result<CurveSample> {
    if sample.n() < 3 {
        return Err(FdError::TooFewCurves {
            required: 3,
            found: sample.n(),
        });
    }
    let mut sdo = dirout::pointwise_sdo(sample, n_directions, rng)?;
    let max_finite = sdo.iter().filter(|x| x.is_finite()).fold(0.0f64, |a, &b| a.max(b));
    sdo.mapv_inplace(|x| if x.is_finite() { x } else { 2.0 * max_finite + 1.0 });
    CurveSample::new(sdo, sample.grid().clone())
}

/// One step of a sequential transformation pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    T0,
    D0,
    T1,
    T2,
    D1,
    D2,
    O,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::T0 => "T0",
            Stage::D0 => "D0",
            Stage::T1 => "T1",
            Stage::T2 => "T2",
            Stage::D1 => "D1",
            Stage::D2 => "D2",
            Stage::O => "O",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = FdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "T0" => Ok(Stage::T0),
            "D0" => Ok(Stage::D0),
            "T1" => Ok(Stage::T1),
            "T2" => Ok(Stage::T2),
            "D1" => Ok(Stage::D1),
            "D2" => Ok(Stage::D2),
            "O" => Ok(Stage::O),
            _ => Err(FdError::UnknownStage(s.to_string())),
        }
    }
}

/// Parses a comma-separated stage list such as "T0,T1,T2".
pub fn parse_sequence(s: &str) -> Result<Vec<Stage>> {
    if s.trim().is_empty() {
        return Err(FdError::EmptySequence);
    }
    s.split(',').map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub label: String,
    pub stage: Stage,
    pub outliers: Vec<usize>,
    pub data: Option<CurveSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeqTransformResult {
    pub stages: Vec<StageResult>,
    pub warnings: Vec<String>,
}

impl SeqTransformResult {
    /// Per stage, the curves flagged there but not at the previous stage.
    pub fn new_outliers(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::with_capacity(self.stages.len());
        let mut previous: &[usize] = &[];
        for s in &self.stages {
            let fresh = s.outliers.iter().filter(|i| !previous.contains(i)).copied().collect();
            out.push((s.label.clone(), fresh));
            previous = &s.outliers;
        }
        out
    }

    /// Union of every stage's flags.
    pub fn all_outliers(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.stages.iter().flat_map(|s| s.outliers.iter().copied()).collect();
        set.into_iter().collect()
    }
}

/// Curves flagged in `later` but not in `earlier`.
pub fn set_difference(later: &[usize], earlier: &[usize]) -> Vec<usize> {
    later.iter().filter(|i| !earlier.contains(i)).copied().collect()
}

/// Each curve minus its own grid mean.
pub fn center_curves(sample: &CurveSample) -> Result<CurveSample> {
    let means = sample.values().mean_axis(Axis(1)).expect("p ≥ 2");
    let centered = sample.values() - &means.insert_axis(Axis(1));
    CurveSample::new(centered, sample.grid().clone())
}

/// Each centered curve divided by its root-mean-square; returns the indices
/// of zero rows, which are left as zeros.
pub fn normalize_curves(sample: &CurveSample) -> Result<(CurveSample, Vec<usize>)> {
    let centered = center_curves(sample)?;
    let (mut values, grid) = centered.into_parts();
    let p = values.ncols() as f64;
    let mut degenerate = Vec::new();
    for (i, mut row) in values.rows_mut().into_iter().enumerate() {
        let rms = (row.iter().map(|x| x * x).sum::<f64>() / p).sqrt();
        if rms > 0.0 {
            row.mapv_inplace(|x| x / rms);
        } else {
            degenerate.push(i);
        }
    }
    Ok((CurveSample::new(values, grid)?, degenerate))
}

/// Lag-one differences, dropping the first grid point.
pub fn difference_curves(sample: &CurveSample) -> Result<CurveSample> {
    let values = sample.values();
    let p = sample.p();
    if p < 3 {
        return Err(FdError::TooFewPoints { required: 3, found: p });
    }
    let diff = Array2::from_shape_fn((sample.n(), p - 1), |(i, t)| values[[i, t + 1]] - values[[i, t]]);
    CurveSample::new(diff, sample.grid().drop_first()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqConfig {
    pub depth: DepthMethod,
    pub central_region: f64,
    pub factor: f64,
    pub n_directions: usize,
    pub save_data: bool,
}

impl Default for SeqConfig {
    fn default() -> Self {
        Self {
            depth: DepthMethod::Mbd,
            central_region: DEFAULT_CENTRAL_REGION,
            factor: DEFAULT_FENCE_FACTOR,
            n_directions: dirout::DEFAULT_N_DIRECTIONS,
            save_data: false,
        }
    }
}

/// Sequential transformations: each stage transforms the current data and
/// flags outliers with a functional boxplot under the configured ordering.
/// All curves are kept in every stage.
pub fn seq_transform(
    sample: &SampleData,
    sequence: &[Stage],
    config: &SeqConfig,
    rng: &mut RandomSource,
) -> Result<SeqTransformResult> {
    if sequence.is_empty() {
        return Err(FdError::EmptySequence);
    }
    // Validate the whole pipeline before computing anything.
    let mut multivariate = matches!(sample, SampleData::Multivariate(_));
    for stage in sequence {
        match (stage, multivariate) {
            (Stage::O, true) => multivariate = false,
            (Stage::O, false) => return Err(FdError::OOnUnivariate),
            (other, true) => {
                return Err(FdError::MultivariateStage(other.as_str().to_string()));
            }
            _ => {}
        }
    }

    let mut warnings = Vec::new();
    let mut seen: HashMap<Stage, usize> = HashMap::new();
    let duplicated: BTreeSet<Stage> = sequence
        .iter()
        .filter(|s| sequence.iter().filter(|t| t == s).count() > 1)
        .copied()
        .collect();
    for s in &duplicated {
        warnings.push(format!("stage {s} appears more than once; labels get numeric suffixes"));
    }

    let mut current: Option<CurveSample> = match sample {
        SampleData::Univariate(s) => Some(s.clone()),
        SampleData::Multivariate(_) => None,
    };
    let mut stages = Vec::with_capacity(sequence.len());
    for &stage in sequence {
        let data = match stage {
            Stage::O => {
                let SampleData::Multivariate(m) = sample else {
                    unreachable!("validated above")
                };
                o_transform(m, config.n_directions, rng)?
            }
            _ => {
                let cur = current.as_ref().expect("validated above");
                match stage {
                    Stage::T0 | Stage::D0 => cur.clone(),
                    Stage::T1 => center_curves(cur)?,
                    Stage::T2 => {
                        let (normalized, degenerate) = normalize_curves(cur)?;
                        if !degenerate.is_empty() {
                            warnings.push(format!(
                                "T2: {} constant curve(s) left as zero rows",
                                degenerate.len()
                            ));
                        }
                        normalized
                    }
                    Stage::D1 | Stage::D2 => difference_curves(cur)?,
                    Stage::O => unreachable!(),
                }
            }
        };
        let depth = compute_depth(&data, config.depth, rng)?;
        let fb = functional_boxplot(&data, &depth, config.central_region, config.factor)?;
        let label = if duplicated.contains(&stage) {
            let k = seen.entry(stage).or_insert(0);
            *k += 1;
            format!("{stage}_{k}")
        } else {
            stage.to_string()
        };
        stages.push(StageResult {
            label,
            stage,
            outliers: fb.outliers,
            data: config.save_data.then(|| data.clone()),
        });
        current = Some(data);
    }
    Ok(SeqTransformResult { stages, warnings })
}

/// Column means of a sample, used by callers that summarize stage data.
pub fn grid_means(sample: &CurveSample) -> Array1<f64> {
    sample.values().mean_axis(Axis(1)).expect("p ≥ 2")
}

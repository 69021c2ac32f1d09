//! Grid-sampled functional data.
//!
//! All curves of a sample share one evaluation grid. Functional integrals
//! are approximated by the plain average over grid points, so a non-uniform
//! grid is accepted but flagged through [`Grid::is_uniform`].

use ndarray::{Array2, Array3, ArrayView1, Axis};

use crate::error::{FdError, Result};

/// Strictly increasing evaluation points.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(FdError::TooFewPoints {
                required: 2,
                found: points.len(),
            });
        }
        for (col, x) in points.iter().enumerate() {
            if !x.is_finite() {
                return Err(FdError::NonFiniteValue { row: 0, col });
            }
        }
        for index in 1..points.len() {
            if points[index] <= points[index - 1] {
                return Err(FdError::NonIncreasingGrid { index });
            }
        }
        Ok(Self { points })
    }

    /// `p` equally spaced points from `a` to `b` inclusive.
    pub fn uniform(p: usize, a: f64, b: f64) -> Result<Self> {
        if p < 2 || !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(FdError::DegenerateInterval { a, b, points: p });
        }
        let step = (b - a) / (p - 1) as f64;
        let mut points: Vec<f64> = (0..p).map(|k| a + step * k as f64).collect();
        points[p - 1] = b;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// λ(I) = last − first.
    pub fn interval_length(&self) -> f64 {
        self.points[self.points.len() - 1] - self.points[0]
    }

    /// True when consecutive spacings agree to 1e-9 relative to the interval.
    pub fn is_uniform(&self) -> bool {
        let step = self.interval_length() / (self.len() - 1) as f64;
        let tol = 1e-9 * self.interval_length();
        self.points
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= tol)
    }

    /// Grid with the first point removed (used by lag-1 differencing).
    pub fn drop_first(&self) -> Result<Self> {
        Grid::new(self.points[1..].to_vec())
    }
}

/// Free-function form of [`Grid::uniform`].
pub fn uniform_grid(p: usize, a: f64, b: f64) -> Result<Grid> {
    Grid::uniform(p, a, b)
}

/// n × p univariate functional sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    values: Array2<f64>,
    grid: Grid,
    ids: Option<Vec<String>>,
}

impl CurveSample {
    pub fn new(values: Array2<f64>, grid: Grid) -> Result<Self> {
        check_matrix(&values, &grid)?;
        Ok(Self {
            values,
            grid,
            ids: None,
        })
    }

    /// Sample on the uniform grid over [0, 1].
    pub fn on_unit_interval(values: Array2<f64>) -> Result<Self> {
        let grid = Grid::uniform(values.ncols().max(2), 0.0, 1.0)?;
        Self::new(values, grid)
    }

    /// Builds a sample from row vectors, reporting ragged rows.
    pub fn from_rows(rows: &[Vec<f64>], grid: Grid) -> Result<Self> {
        let p = grid.len();
        if rows.is_empty() {
            return Err(FdError::EmptySample);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(FdError::RaggedRows {
                    row,
                    expected: p,
                    found: r.len(),
                });
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), p), flat)
            .expect("row lengths were checked");
        Self::new(values, grid)
    }

    pub fn with_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.n() {
            return Err(FdError::InvalidParameter(format!(
                "{} ids for {} curves",
                ids.len(),
                self.n()
            )));
        }
        self.ids = Some(ids);
        Ok(self)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn curve(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn into_parts(self) -> (Array2<f64>, Grid) {
        (self.values, self.grid)
    }

    /// Keeps the listed rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(FdError::EmptySample);
        }
        let values = self.values.select(Axis(0), rows);
        let mut out = Self::new(values, self.grid.clone())?;
        if let Some(ids) = &self.ids {
            out.ids = Some(rows.iter().map(|&r| ids[r].clone()).collect());
        }
        Ok(out)
    }

    pub fn to_multi(&self) -> MultiCurveSample {
        let (n, p) = self.values.dim();
        let values = self
            .values
            .clone()
            .into_shape_with_order((n, p, 1))
            .expect("same element count");
        MultiCurveSample {
            values,
            grid: self.grid.clone(),
        }
    }
}

/// n × p × d multivariate functional sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiCurveSample {
    values: Array3<f64>,
    grid: Grid,
}

impl MultiCurveSample {
    pub fn new(values: Array3<f64>, grid: Grid) -> Result<Self> {
        let (n, p, d) = values.dim();
        if n == 0 || d == 0 {
            return Err(FdError::EmptySample);
        }
        if p != grid.len() {
            return Err(FdError::GridMismatch {
                values: p,
                grid: grid.len(),
            });
        }
        for ((row, col, _), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(FdError::NonFiniteValue { row, col });
            }
        }
        Ok(Self { values, grid })
    }

    /// Stacks d univariate samples on a common grid.
    pub fn from_components(components: &[CurveSample]) -> Result<Self> {
        let first = components.first().ok_or(FdError::EmptySample)?;
        let (n, p) = first.values.dim();
        let d = components.len();
        let mut values = Array3::zeros((n, p, d));
        for (k, c) in components.iter().enumerate() {
            if c.values.dim() != (n, p) {
                return Err(FdError::InvalidParameter(format!(
                    "component {k} has shape {:?}, expected {:?}",
                    c.values.dim(),
                    (n, p)
                )));
            }
            values.index_axis_mut(Axis(2), k).assign(&c.values);
        }
        Self::new(values, first.grid.clone())
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.values.dim().0
    }

    pub fn p(&self) -> usize {
        self.values.dim().1
    }

    pub fn dims(&self) -> usize {
        self.values.dim().2
    }

    /// The d = 1 slice as a univariate sample.
    pub fn to_univariate(&self) -> Result<CurveSample> {
        if self.dims() != 1 {
            return Err(FdError::InvalidParameter(format!(
                "cannot view a {}-dimensional sample as univariate",
                self.dims()
            )));
        }
        let values = self.values.index_axis(Axis(2), 0).to_owned();
        CurveSample::new(values, self.grid.clone())
    }

    pub fn component(&self, k: usize) -> Result<CurveSample> {
        if k >= self.dims() {
            return Err(FdError::InvalidParameter(format!("no component {k}")));
        }
        CurveSample::new(
            self.values.index_axis(Axis(2), k).to_owned(),
            self.grid.clone(),
        )
    }
}

impl From<&CurveSample> for MultiCurveSample {
    fn from(s: &CurveSample) -> Self {
        s.to_multi()
    }
}

fn check_matrix(values: &Array2<f64>, grid: &Grid) -> Result<()> {
    if values.nrows() == 0 {
        return Err(FdError::EmptySample);
    }
    if values.ncols() != grid.len() {
        return Err(FdError::GridMismatch {
            values: values.ncols(),
            grid: grid.len(),
        });
    }
    for ((row, col), v) in values.indexed_iter() {
        if !v.is_finite() {
            return Err(FdError::NonFiniteValue { row, col });
        }
    }
    Ok(())
}

/// Either kind of sample.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleData {
    Univariate(CurveSample),
    Multivariate(MultiCurveSample),
}

impl SampleData {
    pub fn n(&self) -> usize {
        match self {
            SampleData::Univariate(s) => s.n(),
            SampleData::Multivariate(s) => s.n(),
        }
    }

    pub fn p(&self) -> usize {
        match self {
            SampleData::Univariate(s) => s.p(),
            SampleData::Multivariate(s) => s.p(),
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            SampleData::Univariate(_) => 1,
            SampleData::Multivariate(s) => s.dims(),
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            SampleData::Univariate(s) => s.grid(),
            SampleData::Multivariate(s) => s.grid(),
        }
    }
}

/// Checks raw rows against a grid without building a sample. The first
/// violation is reported with its 0-based location.
pub fn validate_sample(rows: &[Vec<f64>], grid_points: &[f64]) -> Result<()> {
    let grid = Grid::new(grid_points.to_vec())?;
    CurveSample::from_rows(rows, grid).map(|_| ())
}

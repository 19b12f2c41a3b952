//! Outlier detection in linear regression as a sparse recovery problem.
//!
//! With `y = Xβ + g + w` and `g` sparse, projecting onto the orthogonal
//! complement of `span(X)` removes `β`: `(I - XX†)y = (I - XX†)g + (I - XX†)w`.
//! The columns of `I - XX†` act as the design, and the support RRT picks
//! from it is the set of outlying rows.

use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, normalize_columns};
use crate::lsq::LsState;
use crate::omp::{omp_run, StopRule};
use crate::rrt::{rrt_select, AlphaInfo, AlphaRule};

/// Projected columns shorter than this are never candidates.
pub const MIN_PROJECTED_NORM: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub name: String,
    /// Predictor names, `"(intercept)"` first when present.
    pub columns: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    /// 1-based row numbers reported in the robust-regression literature.
    pub known_outliers: Option<Vec<usize>>,
}

impl RegressionDataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadOptions {
    /// Prepend a column of ones.
    pub intercept: bool,
    /// Defaults to the last column.
    pub response_column: Option<String>,
    /// Take natural logs of every value.
    pub log: bool,
}

/// Parses a CSV document (header row, numeric cells).
pub fn parse_dataset(name: &str, text: &str, opts: &LoadOptions) -> Result<RegressionDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.len() < 2 {
        return Err(Error::Data(format!(
            "{name}: need a response and at least one predictor"
        )));
    }
    let response = match &opts.response_column {
        Some(col) => headers.iter().position(|h| h == col).ok_or_else(|| {
            Error::Data(format!(
                "{name}: no column named {col:?}; available columns: {}",
                headers.join(", ")
            ))
        })?,
        None => headers.len() - 1,
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    path: name.to_string(),
                    row: i + 1,
                    column: j + 1,
                    message: format!("{:?} is not a number", cell),
                })?;
                let v = if opts.log { v.ln() } else { v };
                if !v.is_finite() {
                    return Err(Error::Parse {
                        path: name.to_string(),
                        row: i + 1,
                        column: j + 1,
                        message: format!("{cell} is not a finite value"),
                    });
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{name}: no data rows")));
    }

    let predictors: Vec<usize> = (0..headers.len()).filter(|&j| j != response).collect();
    let offset = opts.intercept as usize;
    let x = DMatrix::from_fn(rows.len(), predictors.len() + offset, |i, j| {
        if j < offset {
            1.0
        } else {
            rows[i][predictors[j - offset]]
        }
    });
    let mut columns: Vec<String> = predictors.iter().map(|&j| headers[j].clone()).collect();
    if opts.intercept {
        columns.insert(0, "(intercept)".into());
    }
    Ok(RegressionDataset {
        name: name.to_string(),
        columns,
        x,
        y: rows.iter().map(|r| r[response]).collect(),
        known_outliers: None,
    })
}

pub fn load_dataset_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<RegressionDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&path.display().to_string(), &text, opts)
}

/// Regression data sets shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bundled {
    StackLoss,
    Stars,
    BrainBody,
}

impl Bundled {
    pub const ALL: [Bundled; 3] = [Bundled::StackLoss, Bundled::Stars, Bundled::BrainBody];

    pub fn name(&self) -> &'static str {
        match self {
            Bundled::StackLoss => "stackloss",
            Bundled::Stars => "stars",
            Bundled::BrainBody => "brain_body",
        }
    }

    pub fn csv(&self) -> &'static str {
        match self {
            Bundled::StackLoss => include_str!("../../data/stackloss.csv"),
            Bundled::Stars => include_str!("../../data/stars.csv"),
            Bundled::BrainBody => include_str!("../../data/brain_body.csv"),
        }
    }

    /// Stars is fitted through the origin; brain/body weights on a log scale.
    pub fn default_options(&self) -> LoadOptions {
        LoadOptions {
            intercept: !matches!(self, Bundled::Stars),
            response_column: None,
            log: matches!(self, Bundled::BrainBody),
        }
    }

    pub fn known_outliers(&self) -> Option<Vec<usize>> {
        match self {
            Bundled::StackLoss => Some(vec![1, 3, 4, 21]),
            Bundled::Stars => Some(vec![11, 20, 30, 34]),
            Bundled::BrainBody => None,
        }
    }

    pub fn load(&self) -> Result<RegressionDataset> {
        self.load_with(&self.default_options())
    }

    pub fn load_with(&self, opts: &LoadOptions) -> Result<RegressionDataset> {
        let mut ds = parse_dataset(self.name(), self.csv(), opts)?;
        ds.known_outliers = self.known_outliers();
        Ok(ds)
    }
}

impl FromStr for Bundled {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Bundled::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown bundled data set {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    /// 1-based, sorted.
    pub outliers: Vec<usize>,
    pub k_selected: usize,
    pub k_max: usize,
    pub candidates: usize,
    /// Absent when the fit is exact and nothing is left to explain.
    pub alpha: Option<AlphaInfo>,
}

/// Flags outlying rows of `ds` with OMP + RRT on the projected model.
pub fn outlier_detect(ds: &RegressionDataset, alpha_rule: AlphaRule) -> Result<OutlierReport> {
    let (n, p) = (ds.n(), ds.p());
    if ds.x.nrows() != n {
        return Err(Error::Dimension(format!(
            "{}: X has {} rows, y has {n}",
            ds.name,
            ds.x.nrows()
        )));
    }
    if n <= p {
        return Err(Error::Data(format!(
            "{}: need n > p, got n={n}, p={p}",
            ds.name
        )));
    }

    let mut basis = LsState::new(&ds.y);
    for (j, col) in ds.x.column_iter().enumerate() {
        let col: Vec<f64> = col.iter().copied().collect();
        match basis.extend_with(j, &col) {
            Ok(()) => {}
            Err(Error::DegenerateColumn { .. }) => {
                return Err(Error::RankDeficient(format!(
                    "{}: predictor column {} ({}) is linearly dependent on the others",
                    ds.name,
                    j + 1,
                    ds.columns.get(j).map(String::as_str).unwrap_or("?")
                )))
            }
            Err(e) => return Err(e),
        }
    }

    let projected_y = basis.residual().to_vec();
    let k_max = (n - p).div_ceil(2);
    let alpha = alpha_rule.resolve(n)?;
    if norm(&projected_y) <= 1e-12 * norm(&ds.y) {
        return Ok(OutlierReport {
            outliers: Vec::new(),
            k_selected: 0,
            k_max,
            candidates: n,
            alpha: None,
        });
    }

    let mut candidates = Vec::new();
    let mut cols = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let c = basis.project_out(&e);
        if norm(&c) >= MIN_PROJECTED_NORM {
            candidates.push(i);
            cols.push(c);
        }
    }
    let design = normalize_columns(DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]))?;
    let k_max = k_max.min(candidates.len());

    let trace = omp_run(&design, &projected_y, k_max, StopRule::None)?;
    let est = rrt_select(&trace, n, candidates.len(), alpha)?;
    let mut outliers: Vec<usize> = est.support.iter().map(|&j| candidates[j] + 1).collect();
    outliers.sort_unstable();
    Ok(OutlierReport {
        outliers,
        k_selected: est.k_selected,
        k_max,
        candidates: candidates.len(),
        alpha: est.alpha,
    })
}

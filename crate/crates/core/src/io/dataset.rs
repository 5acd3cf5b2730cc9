use std::path::PathBuf;

use nalgebra::DMatrix;

use crate::error::{KppcaError, Result};

use super::{load_csv, load_mnist_idx};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    Csv(PathBuf),
    Idx { images: PathBuf, labels: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalize {
    #[default]
    None,
    /// Affinely rescale each input coordinate to `[0, 1]`; constant
    /// coordinates map to 0.
    UnitRange,
}

/// What to load and how to subset it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHandle {
    pub source: DataSource,
    /// Labels to keep; IDX sources only.
    pub filter: Option<Vec<u8>>,
    pub limit: Option<usize>,
    pub normalize: Normalize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `d×N`, one sample per column.
    pub points: DMatrix<f64>,
    pub labels: Option<Vec<u8>>,
}

impl DatasetHandle {
    pub fn csv(path: impl Into<PathBuf>) -> Self {
        DatasetHandle {
            source: DataSource::Csv(path.into()),
            filter: None,
            limit: None,
            normalize: Normalize::None,
        }
    }

    pub fn idx(images: impl Into<PathBuf>, labels: impl Into<PathBuf>) -> Self {
        DatasetHandle {
            source: DataSource::Idx {
                images: images.into(),
                labels: labels.into(),
            },
            filter: None,
            limit: None,
            normalize: Normalize::None,
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        if self.limit == Some(0) {
            return Err(KppcaError::InvalidArgument(
                "limit must be at least 1".into(),
            ));
        }
        let mut ds = match &self.source {
            DataSource::Csv(path) => {
                if self.filter.is_some() {
                    return Err(KppcaError::InvalidArgument(
                        "label filters need a labelled (IDX) source".into(),
                    ));
                }
                let mut points = load_csv(path)?;
                if let Some(limit) = self.limit {
                    if points.ncols() > limit {
                        points = points.columns(0, limit).into_owned();
                    }
                }
                Dataset {
                    points,
                    labels: None,
                }
            }
            DataSource::Idx { images, labels } => {
                let (points, labels) =
                    load_mnist_idx(images, labels, self.filter.as_deref(), self.limit)?;
                Dataset {
                    points,
                    labels: Some(labels),
                }
            }
        };
        if self.normalize == Normalize::UnitRange {
            unit_range(&mut ds.points);
        }
        Ok(ds)
    }
}

fn unit_range(points: &mut DMatrix<f64>) {
    for mut row in points.row_iter_mut() {
        let lo = row.min();
        let span = row.max() - lo;
        for v in row.iter_mut() {
            *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
        }
    }
}

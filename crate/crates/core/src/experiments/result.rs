use serde::{Deserialize, Serialize};

use super::{KernelCheckSpec, NelderMeadOptions, RandomFeatureSpec, ScanSpec};
use crate::{Error, Result};

/// Parameters of whichever study produced a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    Convergence {
        scan: ScanSpec,
    },
    CrossTerms {
        scan: ScanSpec,
    },
    Sparsity {
        scan: ScanSpec,
        n_list: Vec<usize>,
        s_list: Vec<f64>,
    },
    DeepSizes {
        scan: ScanSpec,
        budget: u64,
        n1_list: Vec<usize>,
    },
    OptimizeDeepSizes {
        scan: ScanSpec,
        budget: u64,
        layers: usize,
        options: NelderMeadOptions,
    },
    SparseRf(RandomFeatureSpec),
    KernelCheck(KernelCheckSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValues {
    Numeric(Vec<f64>),
    Labels(Vec<String>),
}

impl AxisValues {
    pub fn len(&self) -> usize {
        match self {
            AxisValues::Numeric(v) => v.len(),
            AxisValues::Labels(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Coordinate of every row along one axis (long format: one entry per grid
/// point, not per distinct value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: AxisValues,
}

impl Axis {
    pub fn numeric(name: &str, values: Vec<f64>) -> Self {
        Axis {
            name: name.into(),
            values: AxisValues::Numeric(values),
        }
    }

    pub fn labels(name: &str, values: Vec<String>) -> Self {
        Axis {
            name: name.into(),
            values: AxisValues::Labels(values),
        }
    }
}

/// One value per row; NaN marks a flagged point and is written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(with = "nan_as_null")]
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        Column { name: name.into(), values }
    }
}

/// Labelled table of study outputs with full provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub axes: Vec<Axis>,
    pub values: Vec<Column>,
    pub diverged_fraction: Vec<f64>,
    /// Per-repetition seeds.
    pub seeds: Vec<u64>,
}

impl ExperimentResult {
    pub fn rows(&self) -> usize {
        self.diverged_fraction.len()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.values.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    pub fn axis(&self, name: &str) -> Option<&AxisValues> {
        self.axes.iter().find(|a| a.name == name).map(|a| &a.values)
    }

    pub fn numeric_axis(&self, name: &str) -> Option<&[f64]> {
        match self.axis(name)? {
            AxisValues::Numeric(v) => Some(v),
            AxisValues::Labels(_) => None,
        }
    }

    /// Shape and range checks required before emitting.
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::Shape("result has no axes".into()));
        }
        let rows = self.rows();
        if rows == 0 {
            return Err(Error::Shape("result has no rows".into()));
        }
        for a in &self.axes {
            if a.values.len() != rows {
                return Err(Error::Shape(format!("axis {} has {} entries for {rows} rows", a.name, a.values.len())));
            }
        }
        for c in &self.values {
            if c.values.len() != rows {
                return Err(Error::Shape(format!("column {} has {} entries for {rows} rows", c.name, c.values.len())));
            }
            if c.values.iter().any(|v| *v < 0.0 || v.is_infinite()) {
                return Err(Error::Domain(format!("column {} holds negative or infinite values", c.name)));
            }
        }
        if self.diverged_fraction.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Domain("diverged fraction outside [0, 1]".into()));
        }
        Ok(())
    }
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(|v| if v.is_nan() { None } else { Some(*v) }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
    }
}

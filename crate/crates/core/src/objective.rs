//! Target metric `P(m)`: an aggregation operator applied to a numeric column.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Dataset};
use crate::stats::descriptive::quantile_sorted;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "op", content = "q")]
pub enum Aggregate {
    Mean,
    Sum,
    /// Percentile `q` in `(0, 100)`, linearly interpolated.
    Percentile(f64),
}

impl Aggregate {
    /// Applies the operator to a non-empty slice. The slice is reordered for
    /// percentiles.
    pub fn apply(&self, values: &mut [f64]) -> Result<f64> {
        if values.is_empty() {
            return Err(Error::EmptySelection);
        }
        Ok(match self {
            Aggregate::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregate::Sum => values.iter().sum(),
            Aggregate::Percentile(q) => {
                values.sort_by(f64::total_cmp);
                quantile_sorted(values, q / 100.0)
            }
        })
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregate::Mean => f.write_str("mean"),
            Aggregate::Sum => f.write_str("sum"),
            Aggregate::Percentile(q) => write!(f, "p{q}"),
        }
    }
}

/// Accepts `mean`, `sum`, `pNN`, `percentile:NN` and `percentile(NN)`.
impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::InvalidArgument(format!("unknown operator `{s}`"));
        match s.as_str() {
            "mean" | "avg" | "average" => return Ok(Aggregate::Mean),
            "sum" => return Ok(Aggregate::Sum),
            "median" => return Ok(Aggregate::Percentile(50.0)),
            _ => {}
        }
        let q = if let Some(rest) = s.strip_prefix("percentile") {
            rest.trim_start_matches([':', '(', '='])
                .trim_end_matches(')')
                .trim()
                .to_string()
        } else if let Some(rest) = s.strip_prefix('p') {
            rest.to_string()
        } else {
            return Err(bad());
        };
        let q: f64 = q.parse().map_err(|_| bad())?;
        Ok(Aggregate::Percentile(q))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

impl Direction {
    /// Maps a metric value to the minimization frame.
    pub fn to_min(self, v: f64) -> f64 {
        match self {
            Direction::Minimize => v,
            Direction::Maximize => -v,
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        self.to_min(a) < self.to_min(b)
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "min" | "minimize" => Ok(Direction::Minimize),
            "max" | "maximize" => Ok(Direction::Maximize),
            other => Err(Error::InvalidArgument(format!("unknown direction `{other}`"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Minimize => "minimize",
            Direction::Maximize => "maximize",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub metric: String,
    pub operator: Aggregate,
    #[serde(default)]
    pub direction: Direction,
}

impl ObjectiveSpec {
    pub fn new(metric: impl Into<String>, operator: Aggregate, direction: Direction) -> Self {
        Self {
            metric: metric.into(),
            operator,
            direction,
        }
    }

    /// Checks the metric column exists and is numeric and that any percentile
    /// lies strictly inside `(0, 100)`.
    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        if let Aggregate::Percentile(q) = self.operator {
            if !(q > 0.0 && q < 100.0) {
                return Err(Error::InvalidArgument(format!("percentile must be in (0, 100), got {q}")));
            }
        }
        let col = dataset.column(&self.metric)?;
        if col.kind() != ColumnKind::Numeric {
            return Err(Error::NotNumeric(self.metric.clone()));
        }
        Ok(())
    }

    fn metric_cells<'a>(&self, dataset: &'a Dataset) -> Result<&'a [Option<f64>]> {
        self.validate(dataset)?;
        Ok(dataset
            .column(&self.metric)?
            .numeric()
            .expect("validated numeric"))
    }
}

/// `P(m)` over every row of the dataset, skipping missing metric cells.
pub fn eval_metric(dataset: &Dataset, objective: &ObjectiveSpec) -> Result<f64> {
    let mut values: Vec<f64> = objective.metric_cells(dataset)?.iter().flatten().copied().collect();
    objective.operator.apply(&mut values)
}

/// `P(m)` over a multiset of row indices, skipping missing metric cells.
pub fn eval_metric_rows(dataset: &Dataset, rows: &[usize], objective: &ObjectiveSpec) -> Result<f64> {
    let cells = objective.metric_cells(dataset)?;
    let mut values = gather(cells, rows);
    objective.operator.apply(&mut values)
}

pub(crate) fn gather(cells: &[Option<f64>], rows: &[usize]) -> Vec<f64> {
    rows.iter().filter_map(|&r| cells[r]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::TypedCells;
    use alloc::vec;

    fn ds(values: &[Option<f64>]) -> Dataset {
        Dataset::from_columns(vec![
            ("m".to_string(), TypedCells::Numeric(values.to_vec())),
            ("c".to_string(), TypedCells::Categorical(values.iter().map(|_| Some("a".to_string())).collect())),
        ])
        .unwrap()
    }

    #[test]
    fn mean_sum_percentile() {
        let d = ds(&[Some(1.0), Some(2.0), Some(3.0)]);
        let mean = ObjectiveSpec::new("m", Aggregate::Mean, Direction::Minimize);
        let sum = ObjectiveSpec::new("m", Aggregate::Sum, Direction::Minimize);
        assert_eq!(eval_metric(&d, &mean).unwrap(), 2.0);
        assert_eq!(eval_metric(&d, &sum).unwrap(), 6.0);
        let d = ds(&[Some(10.0), Some(20.0), Some(30.0), Some(40.0)]);
        let med = ObjectiveSpec::new("m", Aggregate::Percentile(50.0), Direction::Minimize);
        assert_eq!(eval_metric(&d, &med).unwrap(), 25.0);
    }

    #[test]
    fn skips_missing_and_uses_row_multiset() {
        let d = ds(&[Some(1.0), None, Some(5.0)]);
        let mean = ObjectiveSpec::new("m", Aggregate::Mean, Direction::Minimize);
        assert_eq!(eval_metric(&d, &mean).unwrap(), 3.0);
        assert_eq!(eval_metric_rows(&d, &[2, 2, 0, 1], &mean).unwrap(), 11.0 / 3.0);
        assert_eq!(eval_metric_rows(&d, &[1, 1], &mean), Err(Error::EmptySelection));
    }

    #[test]
    fn validation() {
        let d = ds(&[Some(1.0)]);
        let bad_q = ObjectiveSpec::new("m", Aggregate::Percentile(100.0), Direction::Minimize);
        assert!(matches!(bad_q.validate(&d), Err(Error::InvalidArgument(_))));
        let cat = ObjectiveSpec::new("c", Aggregate::Mean, Direction::Minimize);
        assert_eq!(cat.validate(&d), Err(Error::NotNumeric("c".into())));
        let unknown = ObjectiveSpec::new("zz", Aggregate::Mean, Direction::Minimize);
        assert_eq!(unknown.validate(&d), Err(Error::UnknownColumn("zz".into())));
    }

    #[test]
    fn parse_operators() {
        assert_eq!("mean".parse::<Aggregate>().unwrap(), Aggregate::Mean);
        assert_eq!("SUM".parse::<Aggregate>().unwrap(), Aggregate::Sum);
        assert_eq!("p95".parse::<Aggregate>().unwrap(), Aggregate::Percentile(95.0));
        assert_eq!("percentile:90".parse::<Aggregate>().unwrap(), Aggregate::Percentile(90.0));
        assert_eq!("percentile(12.5)".parse::<Aggregate>().unwrap(), Aggregate::Percentile(12.5));
        assert!("mode".parse::<Aggregate>().is_err());
        assert_eq!("max".parse::<Direction>().unwrap(), Direction::Maximize);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `C x C` counts with rows indexed by ground truth and columns by
/// prediction (both 0-based class indices).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let classes = rows.len();
        if rows.iter().any(|r| r.len() != classes) {
            return Err(Error::Contract("confusion matrix must be square".into()));
        }
        Ok(Self {
            classes,
            counts: rows.concat(),
        })
    }

    /// Records one prediction for 1-based labels.
    pub fn record(&mut self, truth: u16, predicted: u16) -> Result<()> {
        let c = self.classes;
        if truth == 0 || predicted == 0 || truth as usize > c || predicted as usize > c {
            return Err(Error::Contract(format!(
                "labels ({truth}, {predicted}) outside 1..={c}"
            )));
        }
        self.counts[(truth as usize - 1) * c + predicted as usize - 1] += 1;
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.classes.max(1))
            .map(<[u64]>::to_vec)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn trace(&self) -> u64 {
        (0..self.classes).map(|i| self.get(i, i)).sum()
    }

    fn row_sum(&self, i: usize) -> u64 {
        (0..self.classes).map(|j| self.get(i, j)).sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        (0..self.classes).map(|i| self.get(i, j)).sum()
    }

    /// `trace / total`; zero for an empty matrix.
    pub fn overall_accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.trace() as f64 / total as f64
    }

    /// Recall of every class; `None` for classes without test samples.
    pub fn per_class(&self) -> Vec<Option<f64>> {
        (0..self.classes)
            .map(|i| {
                let row = self.row_sum(i);
                (row > 0).then(|| self.get(i, i) as f64 / row as f64)
            })
            .collect()
    }

    /// Mean recall over the classes that have test samples.
    pub fn average_accuracy(&self) -> f64 {
        let present: Vec<f64> = self.per_class().into_iter().flatten().collect();
        if present.is_empty() {
            return 0.0;
        }
        present.iter().sum::<f64>() / present.len() as f64
    }

    /// Cohen's kappa `(p_o - p_e) / (1 - p_e)` with chance agreement
    /// `p_e = sum_c row_c * col_c / total^2`. A diagonal matrix (where
    /// `p_e` may reach 1) scores exactly 1.
    pub fn kappa(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let trace = self.trace();
        if trace == total {
            return 1.0;
        }
        let n = total as f64;
        let po = trace as f64 / n;
        let pe = (0..self.classes)
            .map(|c| self.row_sum(c) as f64 * self.col_sum(c) as f64)
            .sum::<f64>()
            / (n * n);
        (po - pe) / (1.0 - pe)
    }

    pub fn report(&self) -> MetricsReport {
        let per_class = self.per_class();
        for (i, acc) in per_class.iter().enumerate() {
            if acc.is_none() {
                log::warn!("class {} has no test samples; excluded from AA", i + 1);
            }
        }
        MetricsReport {
            oa: self.overall_accuracy(),
            aa: self.average_accuracy(),
            kappa: self.kappa(),
            per_class,
            total: self.total(),
            confusion: self.rows(),
        }
    }
}

/// Accuracy summary written as the `eval` JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
    /// Per-class recall; `null` for classes without test samples.
    pub per_class: Vec<Option<f64>>,
    pub total: u64,
    pub confusion: Vec<Vec<u64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_kappa() {
        let m = ConfusionMatrix::from_rows(&[vec![2, 0], vec![1, 1]]).unwrap();
        assert_eq!(m.overall_accuracy(), 0.75);
        // rows (2, 2), cols (3, 1): p_e = (6 + 2) / 16
        assert_eq!(m.kappa(), 0.5);
        assert_eq!(m.average_accuracy(), 0.75);
        assert_eq!(m.per_class(), vec![Some(1.0), Some(0.5)]);
    }

    #[test]
    fn perfect_predictions() {
        let m = ConfusionMatrix::from_rows(&[vec![3, 0, 0], vec![0, 1, 0], vec![0, 0, 5]]).unwrap();
        assert_eq!(
            (m.overall_accuracy(), m.average_accuracy(), m.kappa()),
            (1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn single_class_diagonal_is_perfect() {
        let m = ConfusionMatrix::from_rows(&[vec![4, 0], vec![0, 0]]).unwrap();
        assert_eq!(m.kappa(), 1.0);
        assert_eq!(m.per_class(), vec![Some(1.0), None]);
        assert_eq!(m.average_accuracy(), 1.0);
    }

    #[test]
    fn record_checks_label_range() {
        let mut m = ConfusionMatrix::new(2);
        m.record(1, 2).unwrap();
        assert_eq!(m.get(0, 1), 1);
        assert!(m.record(0, 1).is_err());
        assert!(m.record(1, 3).is_err());
    }

    #[test]
    fn report_serializes_missing_classes_as_null() {
        let m = ConfusionMatrix::from_rows(&[vec![1, 0], vec![0, 0]]).unwrap();
        let json = serde_json::to_value(m.report()).unwrap();
        assert_eq!(json["per_class"][1], serde_json::Value::Null);
        assert_eq!(json["oa"], 1.0);
    }

    proptest! {
        #[test]
        fn metric_ranges_and_kappa_identity(cells in proptest::collection::vec(0u64..20, 9)) {
            let rows: Vec<Vec<u64>> = cells.chunks(3).map(<[u64]>::to_vec).collect();
            let m = ConfusionMatrix::from_rows(&rows).unwrap();
            prop_assume!(m.total() > 0);
            let (oa, aa, k) = (m.overall_accuracy(), m.average_accuracy(), m.kappa());
            prop_assert!((0.0..=1.0).contains(&oa));
            prop_assert!((0.0..=1.0).contains(&aa));
            prop_assert!(k <= 1.0);
            let diagonal = (0..3).all(|i| (0..3).all(|j| i == j || m.get(i, j) == 0));
            prop_assert_eq!(k == 1.0, diagonal);
        }
    }
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, io_err, Result};

/// Hex SHA-256 of a canonical config rendering.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// What one confusion-matrix count stands for ("sequence" or "grasp").
    pub unit: String,
    pub class_names: Vec<String>,
    /// Rows are true classes, columns predictions.
    pub confusion: Vec<Vec<usize>>,
    /// `None` for classes absent from the evaluation set.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub overall_accuracy: f64,
    pub config_hash: String,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn from_predictions(
        experiment: &str,
        unit: &str,
        class_names: &[String],
        truth: &[usize],
        pred: &[usize],
        config_hash: &str,
        seed: u64,
    ) -> Result<Self> {
        let k = class_names.len();
        if truth.len() != pred.len() || truth.is_empty() {
            return Err(invalid("need equally many truths and predictions, at least one"));
        }
        let mut confusion = vec![vec![0usize; k]; k];
        for (&t, &p) in truth.iter().zip(pred) {
            if t >= k || p >= k {
                return Err(invalid(format!("label {} outside {k} classes", t.max(p))));
            }
            confusion[t][p] += 1;
        }
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| row[i] as f64 / n as f64)
            })
            .collect();
        let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
        Ok(Self {
            experiment: experiment.into(),
            unit: unit.into(),
            class_names: class_names.to_vec(),
            confusion,
            per_class_accuracy,
            overall_accuracy: correct as f64 / truth.len() as f64,
            config_hash: config_hash.into(),
            seed,
            metrics: BTreeMap::new(),
        })
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Fraction of class `truth` predicted as `pred`.
    pub fn rate(&self, truth: usize, pred: usize) -> Option<f64> {
        let row = self.confusion.get(truth)?;
        let n: usize = row.iter().sum();
        (n > 0).then(|| row[pred] as f64 / n as f64)
    }

    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for n in &self.class_names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.confusion) {
            s.push_str(name);
            for c in row {
                let _ = write!(s, ",{c}");
            }
            s.push('\n');
        }
        s
    }

    /// Row-normalised rates; rows for absent classes read `NA`.
    pub fn rates_csv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for n in &self.class_names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for (i, name) in self.class_names.iter().enumerate() {
            s.push_str(name);
            for j in 0..self.class_names.len() {
                match self.rate(i, j) {
                    Some(r) => {
                        let _ = write!(s, ",{r:.4}");
                    }
                    None => s.push_str(",NA"),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} ({} {}s, seed {}): accuracy {:.4}\n",
            self.experiment,
            self.total(),
            self.unit,
            self.seed,
            self.overall_accuracy
        );
        for (name, acc) in self.class_names.iter().zip(&self.per_class_accuracy) {
            match acc {
                Some(a) => {
                    let _ = writeln!(s, "  {name:<16} {a:.4}");
                }
                None => {
                    let _ = writeln!(s, "  {name:<16} absent");
                }
            }
        }
        for (k, v) in &self.metrics {
            let _ = writeln!(s, "  {k} = {v:.4}");
        }
        s
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            r[o] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; `None` when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn confusion_rows_sum_to_class_counts() {
        let truth = [0, 0, 1, 1, 1, 2];
        let pred = [0, 1, 1, 1, 0, 2];
        let r = ExperimentReport::from_predictions("t", "sequence", &names(3), &truth, &pred, "h", 1).unwrap();
        assert_eq!(r.confusion[1].iter().sum::<usize>(), 3);
        assert_eq!(r.overall_accuracy, 4.0 / 6.0);
        assert_eq!(r.per_class_accuracy[0], Some(0.5));
        assert_eq!(r.confusion_csv().lines().count(), 4);
    }

    #[test]
    fn absent_class_reported_as_none() {
        let r = ExperimentReport::from_predictions("t", "grasp", &names(2), &[1, 1], &[1, 1], "h", 0).unwrap();
        assert_eq!(r.per_class_accuracy, vec![None, Some(1.0)]);
        assert!(r.rates_csv().contains("c0,NA,NA"));
    }

    #[test]
    fn spearman_known_values() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0], &[5.0, 5.0]), None);
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}

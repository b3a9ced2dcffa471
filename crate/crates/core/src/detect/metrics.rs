use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerClass {
    pub label: String,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    /// Sorted union of true and predicted labels; indexes the matrix.
    pub labels: Vec<String>,
    /// `confusion[t][p]`: count of true label `t` predicted as `p`.
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub balanced_accuracy: f64,
    pub kappa: f64,
    pub per_class: Vec<PerClass>,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Accuracy, macro P/R/F1, weighted F1, balanced accuracy and Cohen's kappa.
/// Classes with no support are left out of recall-based averages.
pub fn classification_metrics<S: AsRef<str>>(y_true: &[S], y_pred: &[S]) -> Result<ClassReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::InvalidArgument(format!(
            "{} truths but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::EmptyEval);
    }
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for s in y_true.iter().chain(y_pred) {
        index.insert(s.as_ref(), 0);
    }
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let k = index.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (t, p) in y_true.iter().zip(y_pred) {
        confusion[index[t.as_ref()]][index[p.as_ref()]] += 1;
    }
    let n = y_true.len() as f64;
    let support: Vec<usize> = confusion.iter().map(|r| r.iter().sum()).collect();
    let predicted: Vec<usize> = (0..k).map(|j| confusion.iter().map(|r| r[j]).sum()).collect();
    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    let accuracy = correct as f64 / n;

    let labels: Vec<String> = index.keys().map(|s| s.to_string()).collect();
    let per_class: Vec<PerClass> = (0..k)
        .map(|i| {
            let tp = confusion[i][i] as f64;
            let precision = ratio(tp, predicted[i] as f64);
            let recall = ratio(tp, support[i] as f64);
            PerClass {
                label: labels[i].clone(),
                support: support[i],
                precision,
                recall,
                f1: ratio(2.0 * precision * recall, precision + recall),
            }
        })
        .collect();
    let kf = k as f64;
    let supported: Vec<&PerClass> = per_class.iter().filter(|c| c.support > 0).collect();
    let macro_precision = per_class.iter().map(|c| c.precision).sum::<f64>() / kf;
    let macro_recall = per_class.iter().map(|c| c.recall).sum::<f64>() / kf;
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / kf;
    let weighted_f1 = per_class.iter().map(|c| c.f1 * c.support as f64).sum::<f64>() / n;
    let balanced_accuracy = supported.iter().map(|c| c.recall).sum::<f64>() / supported.len() as f64;
    let expected: f64 = (0..k).map(|i| support[i] as f64 * predicted[i] as f64).sum::<f64>() / (n * n);
    let kappa = if (1.0 - expected).abs() < 1e-15 {
        if accuracy == 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (accuracy - expected) / (1.0 - expected)
    };
    Ok(ClassReport {
        labels,
        confusion,
        total: y_true.len(),
        accuracy,
        macro_precision,
        macro_recall,
        macro_f1,
        weighted_f1,
        balanced_accuracy,
        kappa,
        per_class,
    })
}

impl ClassReport {
    /// `metric,value` lines followed by per-class rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        for (name, v) in [
            ("accuracy", self.accuracy),
            ("macro_precision", self.macro_precision),
            ("macro_recall", self.macro_recall),
            ("macro_f1", self.macro_f1),
            ("weighted_f1", self.weighted_f1),
            ("balanced_accuracy", self.balanced_accuracy),
            ("kappa", self.kappa),
        ] {
            s.push_str(&format!("{name},{v:.6}\n"));
        }
        s.push_str("\nlabel,support,precision,recall,f1\n");
        for c in &self.per_class {
            s.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6}\n",
                c.label, c.support, c.precision, c.recall, c.f1
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let y = ["a", "b", "c", "a"];
        let r = classification_metrics(&y, &y).unwrap();
        for v in [r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1, r.weighted_f1, r.balanced_accuracy, r.kappa] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn constant_predictor_on_balanced_pair() {
        let r = classification_metrics(&["a", "a", "b", "b"], &["a", "a", "a", "a"]).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.kappa, 0.0);
    }

    #[test]
    fn hand_computed_three_samples() {
        // confusion: A→A 1, A→B 1, B→B 1
        // A: P 1, R 1/2, F1 2/3; B: P 1/2, R 1, F1 2/3
        let r = classification_metrics(&["A", "A", "B"], &["A", "B", "B"]).unwrap();
        assert!((r.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.macro_f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.confusion, vec![vec![1, 1], vec![0, 1]]);
        assert!((r.balanced_accuracy - 0.75).abs() < 1e-15);
    }

    #[test]
    fn empty_is_an_error() {
        let e: [&str; 0] = [];
        assert!(matches!(classification_metrics(&e, &e), Err(Error::EmptyEval)));
    }

    proptest! {
        #[test]
        fn invariants(pairs in proptest::collection::vec((0u8..4, 0u8..4), 1..60)) {
            let t: Vec<String> = pairs.iter().map(|p| format!("c{}", p.0)).collect();
            let p: Vec<String> = pairs.iter().map(|p| format!("c{}", p.1)).collect();
            let r = classification_metrics(&t, &p).unwrap();
            let trace: usize = (0..r.labels.len()).map(|i| r.confusion[i][i]).sum();
            prop_assert!((r.accuracy - trace as f64 / r.total as f64).abs() < 1e-15);
            for (i, c) in r.per_class.iter().enumerate() {
                prop_assert_eq!(r.confusion[i].iter().sum::<usize>(), c.support);
            }
            // weighted recall equals accuracy
            let wr: f64 = r.per_class.iter().map(|c| c.recall * c.support as f64).sum::<f64>() / r.total as f64;
            prop_assert!((wr - r.accuracy).abs() < 1e-12);
            // relabeling classes leaves macro F1 unchanged
            let rt: Vec<String> = pairs.iter().map(|p| format!("z{}", 3 - p.0)).collect();
            let rp: Vec<String> = pairs.iter().map(|p| format!("z{}", 3 - p.1)).collect();
            let r2 = classification_metrics(&rt, &rp).unwrap();
            prop_assert!((r.macro_f1 - r2.macro_f1).abs() < 1e-12);
        }
    }
}

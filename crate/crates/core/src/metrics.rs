//! Confusion matrices and per-class classification reports.
//!
//! Per-class scores come straight from integer counts:
//! precision `TP/(TP+FP)`, recall `TP/(TP+FN)`, F1 `2TP/(2TP+FP+FN)`.
//! An undefined ratio (zero denominator) is reported as 0.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// `counts[t][p]`: examples of true class `t` predicted as `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if let Some(row) = counts.iter().find(|r| r.len() != c) {
            return Err(Error::ShapeMismatch {
                context: "confusion matrix row",
                expected: c,
                actual: row.len(),
            });
        }
        Ok(Self { counts })
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Examples whose true class is `c`.
    pub fn support(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    /// Examples predicted as `c`.
    pub fn predicted(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }
}

/// Tallies predictions against labels over `num_classes` classes.
pub fn confusion(preds: &[usize], labels: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            context: "confusion inputs",
            expected: labels.len(),
            actual: preds.len(),
        });
    }
    let mut counts = vec![vec![0u64; num_classes]; num_classes];
    for (&p, &t) in preds.iter().zip(labels) {
        if let Some(&index) = [p, t].iter().find(|&&c| c >= num_classes) {
            return Err(Error::ClassOutOfRange { index, num_classes });
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub class_names: Vec<String>,
    pub per_class: Vec<ClassScores>,
    pub macro_avg: AveragedScores,
    pub weighted_avg: AveragedScores,
    pub accuracy: f64,
    pub total_support: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Support-weighted score `support · num / den`, exact whenever `den` equals
/// the support (as it does for recall).
fn weighted(support: u64, num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        (support as f64 * num as f64) / den as f64
    }
}

/// Builds the report for `cm`. `class_names` must have one entry per class.
pub fn report(cm: &ConfusionMatrix, class_names: &[String]) -> Result<ClassificationReport> {
    let c = cm.num_classes();
    if class_names.len() != c {
        return Err(Error::ShapeMismatch {
            context: "class names",
            expected: c,
            actual: class_names.len(),
        });
    }
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyConfusion);
    }

    let mut per_class = Vec::with_capacity(c);
    let (mut macro_p, mut macro_r, mut macro_f) = (0.0, 0.0, 0.0);
    let (mut w_p, mut w_r, mut w_f) = (0.0, 0.0, 0.0);
    for k in 0..c {
        let tp = cm.get(k, k);
        let support = cm.support(k);
        let predicted = cm.predicted(k);
        let f1_den = support + predicted;
        let scores = ClassScores {
            precision: ratio(tp, predicted),
            recall: ratio(tp, support),
            f1: ratio(2 * tp, f1_den),
            support,
        };
        macro_p += scores.precision;
        macro_r += scores.recall;
        macro_f += scores.f1;
        w_p += weighted(support, tp, predicted);
        w_r += weighted(support, tp, support);
        w_f += weighted(support, 2 * tp, f1_den);
        per_class.push(scores);
    }
    let n = c as f64;
    let t = total as f64;
    Ok(ClassificationReport {
        class_names: class_names.to_vec(),
        per_class,
        macro_avg: AveragedScores {
            precision: macro_p / n,
            recall: macro_r / n,
            f1: macro_f / n,
        },
        weighted_avg: AveragedScores {
            precision: w_p / t,
            recall: w_r / t,
            f1: w_f / t,
        },
        accuracy: cm.trace() as f64 / t,
        total_support: total,
    })
}

/// Class names `"0"`, `"1"`, … for reports keyed by class index.
pub fn index_names(num_classes: usize) -> Vec<String> {
    (0..num_classes).map(|i| i.to_string()).collect()
}

/// Fixed-width text table: one row per class, then macro and weighted
/// averages, then overall accuracy.
pub fn format_report(r: &ClassificationReport) -> String {
    let name_width = r
        .class_names
        .iter()
        .map(String::len)
        .chain(["weighted avg".len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>name_width$} {:>9} {:>9} {:>9} {:>9}",
        "", "precision", "recall", "f1-score", "support"
    );
    out.push('\n');
    for (name, s) in r.class_names.iter().zip(&r.per_class) {
        let _ = writeln!(
            out,
            "{name:>name_width$} {:>9.2} {:>9.2} {:>9.2} {:>9}",
            s.precision, s.recall, s.f1, s.support
        );
    }
    out.push('\n');
    for (label, avg) in [
        ("macro avg", &r.macro_avg),
        ("weighted avg", &r.weighted_avg),
    ] {
        let _ = writeln!(
            out,
            "{label:>name_width$} {:>9.2} {:>9.2} {:>9.2} {:>9}",
            avg.precision, avg.recall, avg.f1, r.total_support
        );
    }
    let _ = writeln!(
        out,
        "{:>name_width$} {:>9} {:>9} {:>9.2} {:>9}",
        "accuracy", "", "", r.accuracy, r.total_support
    );
    out
}

/// Flat `key=value` lines, scores rounded to four decimals.
pub fn report_record(r: &ClassificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "accuracy={:.4}", r.accuracy);
    let _ = writeln!(out, "total_support={}", r.total_support);
    for (prefix, avg) in [
        ("macro_avg", &r.macro_avg),
        ("weighted_avg", &r.weighted_avg),
    ] {
        let _ = writeln!(out, "{prefix}.precision={:.4}", avg.precision);
        let _ = writeln!(out, "{prefix}.recall={:.4}", avg.recall);
        let _ = writeln!(out, "{prefix}.f1={:.4}", avg.f1);
    }
    for (name, s) in r.class_names.iter().zip(&r.per_class) {
        let _ = writeln!(out, "class.{name}.precision={:.4}", s.precision);
        let _ = writeln!(out, "class.{name}.recall={:.4}", s.recall);
        let _ = writeln!(out, "class.{name}.f1={:.4}", s.f1);
        let _ = writeln!(out, "class.{name}.support={}", s.support);
    }
    out
}

//! Confusion matrices and the per-class / averaged classification report.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::annotations::ClassMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("{truth} true labels but {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },
    #[error("confusion matrix has no samples")]
    EmptyMatrix,
    #[error("expected {expected} counts, got {actual}")]
    BadCounts { expected: usize, actual: usize },
}

/// `k x k` counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: usize) -> Self {
        Self { classes, counts: vec![0; classes * classes] }
    }

    /// Builds from a row-major count vector.
    pub fn from_counts(classes: usize, counts: Vec<u64>) -> Result<Self, MetricsError> {
        if counts.len() != classes * classes {
            return Err(MetricsError::BadCounts { expected: classes * classes, actual: counts.len() });
        }
        Ok(Self { classes, counts })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes + pred]
    }

    pub fn add(&mut self, truth: usize, pred: usize) {
        self.counts[truth * self.classes + pred] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|c| self.get(c, c)).sum()
    }

    /// Row sum: number of samples whose true class is `c`.
    pub fn support(&self, c: usize) -> u64 {
        (0..self.classes).map(|p| self.get(c, p)).sum()
    }

    /// Column sum: number of samples predicted as `c`.
    pub fn predicted(&self, c: usize) -> u64 {
        (0..self.classes).map(|t| self.get(t, c)).sum()
    }
}

pub fn confusion(truth: &[usize], pred: &[usize], classes: usize) -> Result<ConfusionMatrix, MetricsError> {
    if truth.len() != pred.len() {
        return Err(MetricsError::LengthMismatch { truth: truth.len(), pred: pred.len() });
    }
    let mut cm = ConfusionMatrix::zeros(classes);
    for (&t, &p) in truth.iter().zip(pred) {
        for index in [t, p] {
            if index >= classes {
                return Err(MetricsError::ClassOutOfRange { index, classes });
            }
        }
        cm.add(t, p);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// A ratio whose denominator was zero and was reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroDivision {
    Precision { class: usize },
    Recall { class: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub micro: Averages,
    pub weighted: Averages,
    pub total: u64,
    pub warnings: Vec<ZeroDivision>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else if precision == recall {
        precision
    } else {
        (2.0 * precision * recall / (precision + recall)).clamp(precision.min(recall), precision.max(recall))
    }
}

pub fn report(cm: &ConfusionMatrix) -> Result<MetricsReport, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let mut warnings = Vec::new();
    let mut per_class = Vec::with_capacity(cm.classes());
    for c in 0..cm.classes() {
        let tp = cm.get(c, c);
        let support = cm.support(c);
        let precision = ratio(tp, cm.predicted(c)).unwrap_or_else(|| {
            warnings.push(ZeroDivision::Precision { class: c });
            0.0
        });
        let recall = ratio(tp, support).unwrap_or_else(|| {
            warnings.push(ZeroDivision::Recall { class: c });
            0.0
        });
        per_class.push(ClassMetrics { precision, recall, f1: f1_score(precision, recall), support });
    }

    let trace = cm.trace();
    let accuracy = trace as f64 / total as f64;
    // pooled over classes: sum TP = trace, sum FP = sum FN = total - trace
    let micro_p = trace as f64 / (trace + (total - trace)) as f64;
    let micro_r = micro_p;
    let micro = Averages { precision: micro_p, recall: micro_r, f1: f1_score(micro_p, micro_r) };

    let weigh = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / total as f64
    };
    let weighted = Averages {
        precision: weigh(|m| m.precision),
        // support_c * recall_c is exactly TP_c; sum the counts to avoid rounding
        recall: trace as f64 / total as f64,
        f1: weigh(|m| m.f1),
    };
    Ok(MetricsReport { per_class, accuracy, micro, weighted, total, warnings })
}

fn label_for(classes: &ClassMap, c: usize) -> String {
    classes.label(c).map_or_else(|| format!("class{c}"), String::from)
}

/// Fixed-width text table with two-decimal values.
pub fn render_table(r: &MetricsReport, classes: &ClassMap) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<14}{:>7}{:>11}{:>9}{:>10}{:>9}", "Label", "Number", "precision", "Recall", "F1-score", "Support");
    for (c, m) in r.per_class.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<14}{:>7}{:>11.2}{:>9.2}{:>10.2}{:>9}",
            label_for(classes, c),
            c,
            m.precision,
            m.recall,
            m.f1,
            m.support
        );
    }
    let _ = writeln!(out, "{:<14}{:>7}{:>11}{:>9}{:>10.2}{:>9}", "Accuracy", "", "", "", r.accuracy, r.total);
    for (name, a) in [("Micro Ave", &r.micro), ("Weighted Ave", &r.weighted)] {
        let _ = writeln!(out, "{:<14}{:>7}{:>11.2}{:>9.2}{:>10.2}{:>9}", name, "", a.precision, a.recall, a.f1, r.total);
    }
    out
}

/// `label,precision,recall,f1,support` rows with six decimals, then
/// `accuracy`, `micro_avg` and `weighted_avg` summary rows.
pub fn render_csv(r: &MetricsReport, classes: &ClassMap) -> String {
    let mut out = String::from("label,precision,recall,f1,support\n");
    for (c, m) in r.per_class.iter().enumerate() {
        let _ = writeln!(out, "{},{:.6},{:.6},{:.6},{}", label_for(classes, c), m.precision, m.recall, m.f1, m.support);
    }
    let _ = writeln!(out, "accuracy,,,{:.6},{}", r.accuracy, r.total);
    for (name, a) in [("micro_avg", &r.micro), ("weighted_avg", &r.weighted)] {
        let _ = writeln!(out, "{},{:.6},{:.6},{:.6},{}", name, a.precision, a.recall, a.f1, r.total);
    }
    out
}

//! Per-frame classification metrics for changed / not-changed predictions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

/// Counts indexed `[ground_truth][prediction]`, rows and columns ordered
/// changed, not changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn get(&self, truth: Label, predicted: Label) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, class: Label) -> u64 {
        self.get(class, class)
    }

    /// Frames predicted as `class` whose truth is the other class.
    pub fn false_positives(&self, class: Label) -> u64 {
        let c = class.index();
        self.counts[1 - c][c]
    }

    /// Frames of `class` predicted as the other class.
    pub fn false_negatives(&self, class: Label) -> u64 {
        let c = class.index();
        self.counts[c][1 - c]
    }

    pub fn support(&self, class: Label) -> u64 {
        self.counts[class.index()].iter().sum()
    }

    pub fn transpose(&self) -> Self {
        let c = self.counts;
        Self {
            counts: [[c[0][0], c[1][0]], [c[0][1], c[1][1]]],
        }
    }
}

fn check_lengths(gt: &[Label], pred: &[Label]) -> Result<()> {
    if gt.len() != pred.len() {
        return Err(Error::Data(format!(
            "ground truth has {} frames but prediction has {}",
            gt.len(),
            pred.len()
        )));
    }
    if gt.is_empty() {
        return Err(Error::Data(
            "cannot evaluate an empty label sequence".into(),
        ));
    }
    Ok(())
}

pub fn confusion(gt: &[Label], pred: &[Label]) -> Result<ConfusionMatrix> {
    check_lengths(gt, pred)?;
    let mut m = ConfusionMatrix::default();
    for (&t, &p) in gt.iter().zip(pred) {
        m.counts[t.index()][p.index()] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Precision or recall had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub changed: ClassMetrics,
    pub not_changed: ClassMetrics,
    pub accuracy: f64,
    pub macro_avg: AverageMetrics,
    pub weighted_avg: AverageMetrics,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn class_metrics(m: &ConfusionMatrix, class: Label) -> ClassMetrics {
    let tp = m.true_positives(class);
    let (precision, p_zero) = ratio(tp, tp + m.false_positives(class));
    let (recall, r_zero) = ratio(tp, tp + m.false_negatives(class));
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support: m.support(class),
        zero_division: p_zero || r_zero,
    }
}

impl ClassificationReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let changed = class_metrics(&confusion, Label::Changed);
        let not_changed = class_metrics(&confusion, Label::NotChanged);
        let total = confusion.total();
        let accuracy = (confusion.true_positives(Label::Changed)
            + confusion.true_positives(Label::NotChanged)) as f64
            / total as f64;
        let classes = [changed, not_changed];
        let macro_avg = AverageMetrics {
            precision: classes.iter().map(|c| c.precision).sum::<f64>() / 2.0,
            recall: classes.iter().map(|c| c.recall).sum::<f64>() / 2.0,
            f1: classes.iter().map(|c| c.f1).sum::<f64>() / 2.0,
            support: total,
        };
        let weight = |f: fn(&ClassMetrics) -> f64| {
            classes.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / total as f64
        };
        let weighted_avg = AverageMetrics {
            precision: weight(|c| c.precision),
            recall: weight(|c| c.recall),
            f1: weight(|c| c.f1),
            support: total,
        };
        Self {
            changed,
            not_changed,
            accuracy,
            macro_avg,
            weighted_avg,
            confusion,
        }
    }

    pub fn class(&self, label: Label) -> &ClassMetrics {
        match label {
            Label::Changed => &self.changed,
            Label::NotChanged => &self.not_changed,
        }
    }
}

pub fn report(gt: &[Label], pred: &[Label]) -> Result<ClassificationReport> {
    Ok(ClassificationReport::from_confusion(confusion(gt, pred)?))
}

impl fmt::Display for ClassificationReport {
    /// Aligned table: one row per class, then accuracy and the two averages.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<18}{:>10}{:>10}{:>10}{:>11}",
            "", "precision", "recall", "f1-score", "support"
        )?;
        writeln!(f)?;
        for (name, m) in [
            ("changed", &self.changed),
            ("not changed", &self.not_changed),
        ] {
            writeln!(
                f,
                "{:<18}{:>10.2}{:>10.2}{:>10.2}{:>11}",
                name, m.precision, m.recall, m.f1, m.support
            )?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:<18}{:>10}{:>10}{:>10.2}{:>11}",
            "accuracy",
            "",
            "",
            self.accuracy,
            self.confusion.total()
        )?;
        for (name, m) in [
            ("macro avg", &self.macro_avg),
            ("weighted avg", &self.weighted_avg),
        ] {
            writeln!(
                f,
                "{:<18}{:>10.2}{:>10.2}{:>10.2}{:>11}",
                name, m.precision, m.recall, m.f1, m.support
            )?;
        }
        Ok(())
    }
}

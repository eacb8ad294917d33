//! Temporal-grounding recall and multiple-choice accuracy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{temporal_iou, TimeWindow};

/// Fraction of examples with a top-`k` prediction reaching IoU `m`.
pub fn recall_at(preds: &[Vec<TimeWindow>], gts: &[TimeWindow], k: usize, m: f64) -> Result<f64> {
    if preds.len() != gts.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: gts.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Precondition("recall over zero examples".into()));
    }
    if let Some(i) = preds.iter().position(Vec::is_empty) {
        return Err(Error::Precondition(format!("example {i} has no predictions")));
    }
    let hits = preds
        .iter()
        .zip(gts)
        .filter(|(ranked, gt)| ranked.iter().take(k).any(|p| temporal_iou(p, gt) >= m))
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Mean exact-match rate of choice labels.
pub fn mcq_accuracy(predicted: &[i64], gold: &[i64]) -> Result<f64> {
    if predicted.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::Precondition("accuracy over zero questions".into()));
    }
    if let Some(&bad) = predicted.iter().chain(gold).find(|l| !(0..=4).contains(*l)) {
        return Err(Error::Label(bad));
    }
    let right = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(right as f64 / gold.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallReport {
    #[serde(rename = "r1@0.3")]
    pub r1_03: f64,
    #[serde(rename = "r1@0.5")]
    pub r1_05: f64,
    #[serde(rename = "r5@0.3")]
    pub r5_03: f64,
    #[serde(rename = "r5@0.5")]
    pub r5_05: f64,
    pub n: usize,
}

impl RecallReport {
    pub fn compute(preds: &[Vec<TimeWindow>], gts: &[TimeWindow]) -> Result<Self> {
        Ok(Self {
            r1_03: recall_at(preds, gts, 1, 0.3)?,
            r1_05: recall_at(preds, gts, 1, 0.5)?,
            r5_03: recall_at(preds, gts, 5, 0.3)?,
            r5_05: recall_at(preds, gts, 5, 0.5)?,
            n: gts.len(),
        })
    }
}

/// One NLQ example as written to report.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleResult {
    pub query: String,
    pub gt_window: TimeWindow,
    pub predictions: Vec<TimeWindow>,
    /// IoU of each prediction with the ground truth, in rank order.
    pub ious: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlqReport {
    #[serde(flatten)]
    pub recall: RecallReport,
    pub examples: Vec<ExampleResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McqResult {
    pub question: String,
    pub gold: usize,
    pub predicted: Option<u8>,
    pub final_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McqReport {
    pub accuracy: f64,
    pub n: usize,
    pub results: Vec<McqResult>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(a: f64, b: f64) -> TimeWindow {
        TimeWindow::new(a, b).unwrap()
    }

    #[test]
    fn recall_examples() {
        let gts = vec![w(0.0, 2.0), w(4.0, 6.0)];
        let preds: Vec<Vec<TimeWindow>> = gts.iter().map(|g| vec![*g]).collect();
        assert_eq!(recall_at(&preds, &gts, 1, 0.5).unwrap(), 1.0);
        assert_eq!(recall_at(&[vec![w(10.0, 14.0)]], &[w(12.0, 18.0)], 1, 0.3).unwrap(), 0.0);
        assert_eq!(recall_at(&[vec![w(10.0, 14.0)]], &[w(12.0, 18.0)], 1, 0.25).unwrap(), 1.0);
        assert!(matches!(
            recall_at(&preds, &gts[..1], 1, 0.5),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
        assert!(recall_at(&[vec![]], &[w(0.0, 1.0)], 1, 0.5).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(mcq_accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(mcq_accuracy(&[0, 1, 2, 3, 4], &[0, 1, 2, 0, 0]).unwrap(), 0.6);
        assert!(mcq_accuracy(&[], &[]).is_err());
        assert!(matches!(mcq_accuracy(&[5], &[0]), Err(Error::Label(5))));
    }

    #[test]
    fn report_keys() {
        let r = RecallReport {
            r1_03: 1.0,
            r1_05: 0.5,
            r5_03: 1.0,
            r5_05: 1.0,
            n: 2,
        };
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["r1@0.3"], 1.0);
        assert_eq!(v["n"], 2);
    }
}

//! Detection and segmentation scores, and the energy/performance ratio.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heads::{BinaryMask, DetectionBox};

/// Recall sample points for interpolated precision.
pub const RECALL_POINTS: usize = 101;

/// `0.50, 0.55, ..., 0.95`.
pub fn iou_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

pub fn box_iou(a: &DetectionBox, b: &DetectionBox) -> Result<f64> {
    if !(a.w > 0.0 && a.h > 0.0 && b.w > 0.0 && b.h > 0.0) {
        return Err(Error::InvalidInput("IoU of a zero-area box is undefined".into()));
    }
    let corners = |d: &DetectionBox| {
        let (cx, cy, w, h) = (d.cx as f64, d.cy as f64, d.w as f64, d.h as f64);
        (cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
    };
    let (ax1, ay1, ax2, ay2) = corners(a);
    let (bx1, by1, bx2, by2) = corners(b);
    let iw = (ax2.min(bx2) - ax1.max(bx1)).max(0.0);
    let ih = (ay2.min(by2) - ay1.max(by1)).max(0.0);
    let inter = iw * ih;
    let union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter;
    Ok(inter / union)
}

/// Greedy matching: predictions in descending score order (stable for
/// ties) each claim the unmatched ground truth with the highest IoU, if it
/// reaches `threshold`. Returns the true-positive flag per sorted
/// prediction, and the sort order.
pub fn greedy_match(preds: &[DetectionBox], gts: &[DetectionBox], threshold: f64) -> Result<(Vec<usize>, Vec<bool>)> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].score.total_cmp(&preds[a].score));
    let mut taken = vec![false; gts.len()];
    let mut tp = Vec::with_capacity(preds.len());
    for &pi in &order {
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gts.iter().enumerate() {
            if taken[gi] {
                continue;
            }
            let iou = box_iou(&preds[pi], g)?;
            if iou >= threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        match best {
            Some((gi, _)) => {
                taken[gi] = true;
                tp.push(true);
            }
            None => tp.push(false),
        }
    }
    Ok((order, tp))
}

/// 101-point interpolated precision and final recall for one query at one
/// threshold. `None` when both sets are empty.
pub fn query_ap(preds: &[DetectionBox], gts: &[DetectionBox], threshold: f64) -> Result<Option<(f64, f64)>> {
    if preds.is_empty() && gts.is_empty() {
        return Ok(None);
    }
    if gts.is_empty() || preds.is_empty() {
        return Ok(Some((0.0, 0.0)));
    }
    let (_, tp) = greedy_match(preds, gts, threshold)?;
    let mut precision = Vec::with_capacity(tp.len());
    let mut recall = Vec::with_capacity(tp.len());
    let mut hits = 0usize;
    for (i, &t) in tp.iter().enumerate() {
        hits += t as usize;
        precision.push(hits as f64 / (i + 1) as f64);
        recall.push(hits as f64 / gts.len() as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let mut sum = 0.0;
    for r in 0..RECALL_POINTS {
        let level = r as f64 / (RECALL_POINTS - 1) as f64;
        if let Some(i) = recall.iter().position(|&x| x >= level) {
            sum += precision[i];
        }
    }
    Ok(Some((sum / RECALL_POINTS as f64, *recall.last().unwrap())))
}

/// Box scores on a percentage scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionScores {
    pub ap50: f64,
    pub ap50_95: f64,
    pub ar50_95: f64,
    /// Queries that contributed (not both empty).
    pub queries: usize,
}

/// Per-query AP averaged over queries, at IoU 0.5 and over 0.50:0.95.
/// Queries with neither predictions nor ground truth are skipped.
pub fn average_precision(preds: &[Vec<DetectionBox>], gts: &[Vec<DetectionBox>]) -> Result<DetectionScores> {
    if preds.len() != gts.len() {
        return Err(Error::InvalidInput(format!(
            "{} prediction sets vs {} ground-truth sets",
            preds.len(),
            gts.len()
        )));
    }
    let thresholds = iou_thresholds();
    let mut ap_sum = [0f64; 10];
    let mut ar_sum = [0f64; 10];
    let mut queries = 0usize;
    for (p, g) in preds.iter().zip(gts) {
        let mut counted = false;
        for (t, &thr) in thresholds.iter().enumerate() {
            if let Some((ap, rec)) = query_ap(p, g, thr)? {
                ap_sum[t] += ap;
                ar_sum[t] += rec;
                counted = true;
            }
        }
        queries += counted as usize;
    }
    if queries == 0 {
        return Err(Error::InvalidInput("no query has predictions or ground truth".into()));
    }
    let q = queries as f64;
    let ap: Vec<f64> = ap_sum.iter().map(|s| s / q).collect();
    let ar: Vec<f64> = ar_sum.iter().map(|s| s / q).collect();
    Ok(DetectionScores {
        ap50: 100.0 * ap[0],
        ap50_95: 100.0 * ap.iter().sum::<f64>() / 10.0,
        ar50_95: 100.0 * ar.iter().sum::<f64>() / 10.0,
        queries,
    })
}

/// Mean per-sample IoU of binary masks, percentage scale.
pub fn mask_miou(preds: &[BinaryMask], gts: &[BinaryMask]) -> Result<f64> {
    if preds.len() != gts.len() || preds.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} predicted masks vs {} ground-truth masks",
            preds.len(),
            gts.len()
        )));
    }
    let mut sum = 0.0;
    for (i, (p, g)) in preds.iter().zip(gts).enumerate() {
        if (p.height, p.width) != (g.height, g.width) {
            return Err(Error::InvalidInput(format!(
                "mask {i}: {}x{} vs {}x{}",
                p.height, p.width, g.height, g.width
            )));
        }
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in p.bits.iter().zip(&g.bits) {
            inter += (a & b) as usize;
            union += (a | b) as usize;
        }
        sum += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    }
    Ok(100.0 * sum / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub ap50: f64,
    pub ap50_95: f64,
    pub ar50_95: f64,
    pub miou: f64,
}

pub fn evaluate(
    preds: &[Vec<DetectionBox>],
    gts: &[Vec<DetectionBox>],
    pred_masks: &[BinaryMask],
    gt_masks: &[BinaryMask],
) -> Result<EvalResult> {
    let det = average_precision(preds, gts)?;
    Ok(EvalResult {
        ap50: det.ap50,
        ap50_95: det.ap50_95,
        ar50_95: det.ar50_95,
        miou: mask_miou(pred_masks, gt_masks)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub sample_id: String,
    pub energy_trained: f64,
    pub energy_untrained: f64,
}

/// Per-evaluation energy costs of the trained and untrained model, joules.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    rows: Vec<EnergyRow>,
    tau_evals: usize,
}

impl EnergyTrace {
    /// `tau_evals` defaults to the row count.
    pub fn new(rows: Vec<EnergyRow>, tau_evals: Option<usize>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("energy trace has no rows".into()));
        }
        for r in &rows {
            if !(r.energy_trained >= 0.0 && r.energy_untrained >= 0.0)
                || !r.energy_trained.is_finite()
                || !r.energy_untrained.is_finite()
            {
                return Err(Error::InvalidInput(format!(
                    "sample '{}': energies must be finite and non-negative",
                    r.sample_id
                )));
            }
        }
        let tau_evals = tau_evals.unwrap_or(rows.len());
        if tau_evals == 0 {
            return Err(Error::InvalidParam("tau must be at least 1".into()));
        }
        Ok(Self { rows, tau_evals })
    }

    /// Reads `sample_id,energy_trained,energy_untrained` CSV.
    pub fn from_reader(reader: impl Read, tau_evals: Option<usize>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["sample_id", "energy_trained", "energy_untrained"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse(format!(
                "energy trace header must be '{}', got '{}'",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<EnergyRow>, _>>()?;
        Self::new(rows, tau_evals)
    }

    pub fn load(path: impl AsRef<Path>, tau_evals: Option<usize>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?, tau_evals)
    }

    pub fn write(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn rows(&self) -> &[EnergyRow] {
        &self.rows
    }

    pub fn tau_evals(&self) -> usize {
        self.tau_evals
    }

    /// Every energy multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .map(|r| EnergyRow {
                sample_id: r.sample_id.clone(),
                energy_trained: r.energy_trained * c,
                energy_untrained: r.energy_untrained * c,
            })
            .collect();
        Self::new(rows, Some(self.tau_evals))
    }

    /// `(1/tau) * sum(trained - untrained)`.
    pub fn power_relative(&self) -> f64 {
        let diff: f64 = self.rows.iter().map(|r| r.energy_trained - r.energy_untrained).sum();
        diff / self.tau_evals as f64
    }
}

/// `mean(perf) / power_relative`.
pub fn mept(perf: &[f64], trace: &EnergyTrace) -> Result<f64> {
    if perf.is_empty() {
        return Err(Error::InvalidInput("no performance values".into()));
    }
    let power = trace.power_relative();
    if !(power > 0.0) {
        return Err(Error::InvalidInput(format!(
            "relative power {power} is not positive; the untrained model must consume less energy"
        )));
    }
    let mean = perf.iter().sum::<f64>() / perf.len() as f64;
    Ok(mean / power)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(cx: f32, cy: f32, w: f32, h: f32, s: f32) -> DetectionBox {
        DetectionBox::new(cx, cy, w, h, s)
    }

    #[test]
    fn iou_cases() {
        let a = b(0.5, 0.5, 1.0, 1.0, 1.0);
        assert_eq!(box_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(box_iou(&a, &b(5.0, 5.0, 1.0, 1.0, 1.0)).unwrap(), 0.0);
        assert!((box_iou(&a, &b(1.0, 0.5, 1.0, 1.0, 1.0)).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(box_iou(&a, &b(0.0, 0.0, 0.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn single_match() {
        let gt = b(10.0, 10.0, 10.0, 10.0, 1.0);
        let s = average_precision(&[vec![b(10.0, 10.0, 10.0, 10.0, 0.9)]], &[vec![gt]]).unwrap();
        assert_eq!((s.ap50, s.ap50_95, s.ar50_95), (100.0, 100.0, 100.0));
    }

    #[test]
    fn iou_point_six_counts_three_thresholds() {
        // widths 10 vs 6 share a center: IoU = 60/100
        let gt = b(10.0, 10.0, 10.0, 10.0, 1.0);
        let p = b(10.0, 10.0, 6.0, 10.0, 0.8);
        assert!((box_iou(&p, &gt).unwrap() - 0.6).abs() < 1e-12);
        let s = average_precision(&[vec![p]], &[vec![gt]]).unwrap();
        assert_eq!(s.ap50, 100.0);
        assert!((s.ap50_95 - 30.0).abs() < 1e-9);
    }

    #[test]
    fn empty_queries_skipped() {
        let gt = b(10.0, 10.0, 10.0, 10.0, 1.0);
        let s = average_precision(&[vec![gt], vec![]], &[vec![gt], vec![]]).unwrap();
        assert_eq!((s.ap50, s.queries), (100.0, 1));
        assert!(average_precision(&[vec![]], &[vec![]]).is_err());
        let s = average_precision(&[vec![gt], vec![gt]], &[vec![gt], vec![]]).unwrap();
        assert_eq!(s.ap50, 50.0);
    }

    #[test]
    fn miou_cases() {
        let m = BinaryMask::new(2, 2, vec![1, 0, 1, 0]).unwrap();
        let c = BinaryMask::new(2, 2, vec![0, 1, 0, 1]).unwrap();
        let e = BinaryMask::new(2, 2, vec![0; 4]).unwrap();
        assert_eq!(mask_miou(&[m.clone()], &[m.clone()]).unwrap(), 100.0);
        assert_eq!(mask_miou(&[m], &[c]).unwrap(), 0.0);
        assert_eq!(mask_miou(&[e.clone()], &[e]).unwrap(), 100.0);
    }

    fn hand_trace() -> EnergyTrace {
        let rows = (0..10)
            .map(|i| EnergyRow {
                sample_id: format!("s{i}"),
                energy_trained: 40.0,
                energy_untrained: 12.0,
            })
            .collect();
        EnergyTrace::new(rows, None).unwrap()
    }

    #[test]
    fn mept_hand_case() {
        let t = hand_trace();
        assert_eq!(t.power_relative(), 28.0);
        assert!((mept(&[70.0], &t).unwrap() - 2.5).abs() < 1e-9);
        assert!((mept(&[70.0], &t.scaled(2.0).unwrap()).unwrap() - 1.25).abs() < 1e-9);
    }

    #[test]
    fn mept_rejects_flat_trace() {
        let rows = vec![EnergyRow {
            sample_id: "a".into(),
            energy_trained: 3.0,
            energy_untrained: 3.0,
        }];
        assert!(mept(&[1.0], &EnergyTrace::new(rows, None).unwrap()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = hand_trace();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert!(buf.starts_with(b"sample_id,energy_trained,energy_untrained\n"));
        assert_eq!(EnergyTrace::from_reader(&buf[..], None).unwrap(), t);
        assert!(EnergyTrace::from_reader(&b"id,a,b\nx,1,2\n"[..], None).is_err());
    }
}

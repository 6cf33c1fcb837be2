//! Brute-force peak extraction, matching and scoring.

/// Every cell whose `(value, -index)` pair beats all 3x3 neighbours and is
/// at least `thresh`, sorted by value then index; first `k` kept.
pub fn peaks(heat: &[f64], h: usize, w: usize, thresh: f64, k: usize) -> Vec<(usize, f64)> {
    let key = |i: usize| (heat[i], std::cmp::Reverse(i));
    let mut found = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if heat[i] < thresh {
                continue;
            }
            let mut best = true;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (ny, nx) = (y as i64 + dy, x as i64 + dx);
                    if (dy, dx) == (0, 0) || ny < 0 || nx < 0 || ny >= h as i64 || nx >= w as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if key(j).partial_cmp(&key(i)) == Some(std::cmp::Ordering::Greater) {
                        best = false;
                    }
                }
            }
            if best {
                found.push((i, heat[i]));
            }
        }
    }
    // selection sort keeps the rule explicit
    let mut ordered = Vec::new();
    while !found.is_empty() && ordered.len() < k {
        let mut pick = 0;
        for j in 1..found.len() {
            let (a, b) = (found[j], found[pick]);
            if a.1 > b.1 || (a.1 == b.1 && a.0 < b.0) {
                pick = j;
            }
        }
        ordered.push(found.remove(pick));
    }
    ordered
}

/// `[cx, cy, w, h, score]` per peak, image pixels.
#[allow(clippy::too_many_arguments)]
pub fn decode(
    heat: &[f64],
    wh: &[f64],
    off: &[f64],
    h: usize,
    w: usize,
    r: f64,
    k: usize,
    thresh: f64,
    min_side: f64,
) -> Vec<[f64; 5]> {
    let n = h * w;
    peaks(heat, h, w, thresh, k)
        .into_iter()
        .map(|(i, s)| {
            let (y, x) = ((i / w) as f64, (i % w) as f64);
            [
                (x + off[i]) * r,
                (y + off[n + i]) * r,
                wh[i].max(min_side) * r,
                wh[n + i].max(min_side) * r,
                s,
            ]
        })
        .collect()
}

/// IoU of `[cx, cy, w, h]` boxes.
pub fn iou(a: [f64; 4], b: [f64; 4]) -> f64 {
    let ix = ((a[0] + a[2] / 2.0).min(b[0] + b[2] / 2.0) - (a[0] - a[2] / 2.0).max(b[0] - b[2] / 2.0)).max(0.0);
    let iy = ((a[1] + a[3] / 2.0).min(b[1] + b[3] / 2.0) - (a[1] - a[3] / 2.0).max(b[1] - b[3] / 2.0)).max(0.0);
    let inter = ix * iy;
    inter / (a[2] * a[3] + b[2] * b[3] - inter)
}

/// Greedy matcher: repeatedly take the highest-scoring unvisited
/// prediction (earliest on ties) and give it the best free ground truth at
/// or above `t`. Returns `(score, hit)` in visiting order.
pub fn greedy(preds: &[([f64; 4], f64)], gts: &[[f64; 4]], t: f64) -> Vec<(f64, bool)> {
    let mut visited = vec![false; preds.len()];
    let mut free = vec![true; gts.len()];
    let mut out = Vec::new();
    for _ in 0..preds.len() {
        let mut pick = usize::MAX;
        for i in 0..preds.len() {
            if !visited[i] && (pick == usize::MAX || preds[i].1 > preds[pick].1) {
                pick = i;
            }
        }
        visited[pick] = true;
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            let v = iou(preds[pick].0, *gt);
            if free[g] && v >= t && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            free[g] = false;
        }
        out.push((preds[pick].1, best.is_some()));
    }
    out
}

/// 101-point interpolated AP and final recall for one query: at each
/// recall level, the best precision over all ranks reaching that recall.
pub fn query_ap(preds: &[([f64; 4], f64)], gts: &[[f64; 4]], t: f64) -> Option<(f64, f64)> {
    if preds.is_empty() && gts.is_empty() {
        return None;
    }
    if preds.is_empty() || gts.is_empty() {
        return Some((0.0, 0.0));
    }
    let hits = greedy(preds, gts, t);
    let mut points = Vec::new();
    let mut tp = 0.0;
    for (rank, (_, hit)) in hits.iter().enumerate() {
        if *hit {
            tp += 1.0;
        }
        points.push((tp / gts.len() as f64, tp / (rank + 1) as f64));
    }
    let mut total = 0.0;
    for r in 0..=100 {
        let level = r as f64 / 100.0;
        let best = points
            .iter()
            .filter(|(rec, _)| *rec >= level)
            .map(|(_, p)| *p)
            .fold(0.0, f64::max);
        total += best;
    }
    Some((total / 101.0, points.last().unwrap().0))
}

/// `(AP50, AP50:95, AR50:95)` as percentages, averaged over queries that
/// have predictions or ground truth.
pub fn evaluate(preds: &[Vec<([f64; 4], f64)>], gts: &[Vec<[f64; 4]>]) -> Option<(f64, f64, f64)> {
    let mut per_t = [(0.0, 0.0); 10];
    let mut n = 0;
    for (p, g) in preds.iter().zip(gts) {
        let mut used = false;
        for (ti, slot) in per_t.iter_mut().enumerate() {
            let t = (50 + 5 * ti) as f64 / 100.0;
            if let Some((ap, rec)) = query_ap(p, g, t) {
                slot.0 += ap;
                slot.1 += rec;
                used = true;
            }
        }
        if used {
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    let n = n as f64;
    let ap50 = per_t[0].0 / n;
    let ap = per_t.iter().map(|s| s.0 / n).sum::<f64>() / 10.0;
    let ar = per_t.iter().map(|s| s.1 / n).sum::<f64>() / 10.0;
    Some((100.0 * ap50, 100.0 * ap, 100.0 * ar))
}

/// Thresholds in `0.50:0.05:0.95` that an IoU clears.
pub fn thresholds_cleared(iou: f64) -> usize {
    (0..10).filter(|&i| iou >= (50 + 5 * i) as f64 / 100.0).count()
}

/// Mean per-sample IoU of bitmaps, percentage; empty union scores 1.
pub fn miou(preds: &[Vec<u8>], gts: &[Vec<u8>]) -> f64 {
    let mut s = 0.0;
    for (p, g) in preds.iter().zip(gts) {
        let inter = p.iter().zip(g).filter(|(a, b)| **a == 1 && **b == 1).count();
        let union = p.iter().zip(g).filter(|(a, b)| **a == 1 || **b == 1).count();
        s += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    }
    100.0 * s / preds.len() as f64
}

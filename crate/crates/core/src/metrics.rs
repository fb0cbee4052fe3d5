//! Classification metrics.

/// Fraction of positions where `pred` equals `truth`; 0 for empty input.
pub fn accuracy(truth: &[u32], pred: &[u32]) -> f64 {
    assert_eq!(truth.len(), pred.len());
    if truth.is_empty() {
        return 0.0;
    }
    let hits = truth.iter().zip(pred).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Unweighted mean of per-class F1 over every class that occurs in `truth`
/// or `pred`. A class with no true positives scores 0. Empty input gives 0.
pub fn macro_f1(truth: &[u32], pred: &[u32]) -> f64 {
    assert_eq!(truth.len(), pred.len());
    let classes = truth.iter().chain(pred).map(|&k| k as usize + 1).max().unwrap_or(0);
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fne = vec![0usize; classes];
    for (&t, &p) in truth.iter().zip(pred) {
        if t == p {
            tp[t as usize] += 1;
        } else {
            fp[p as usize] += 1;
            fne[t as usize] += 1;
        }
    }
    let mut sum = 0.0;
    let mut present = 0usize;
    for k in 0..classes {
        if tp[k] + fp[k] + fne[k] == 0 {
            continue;
        }
        present += 1;
        sum += 2.0 * tp[k] as f64 / (2 * tp[k] + fp[k] + fne[k]) as f64;
    }
    if present == 0 {
        0.0
    } else {
        sum / present as f64
    }
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

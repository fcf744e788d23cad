//! Step-size history measures.

use curvstep_core::RunRecord;

/// Accepted step sizes, each tagged with the time the step ended.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DtHistory {
    pub t: Vec<f64>,
    pub dt: Vec<f64>,
}

impl DtHistory {
    pub fn from_record(rec: &RunRecord) -> Self {
        let (t, dt) = rec.dt_history().unzip();
        DtHistory { t, dt }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Size of the step covering `t`, if any.
    pub fn at(&self, t: f64) -> Option<f64> {
        let i = self.t.partition_point(|&x| x < t);
        self.dt.get(i).copied()
    }

    /// Mean accepted step in each sub-interval `(m Δ, (m+1) Δ]` up to `t_end`.
    /// Empty sub-intervals inherit the previous mean.
    pub fn interval_means(&self, dt_dl: f64, t_end: f64) -> Vec<f64> {
        let n = (t_end / dt_dl).ceil().max(1.0) as usize;
        let mut sum = vec![0.0; n];
        let mut count = vec![0u32; n];
        for (&t, &dt) in self.t.iter().zip(&self.dt) {
            let m = ((t / dt_dl).ceil() as usize).saturating_sub(1).min(n - 1);
            sum[m] += dt;
            count[m] += 1;
        }
        let mut out = Vec::with_capacity(n);
        let mut last = f64::NAN;
        for m in 0..n {
            if count[m] > 0 {
                last = sum[m] / f64::from(count[m]);
            }
            out.push(last);
        }
        out
    }
}

/// Indices where `means` falls below `fraction` times the preceding entry.
pub fn drop_onsets(means: &[f64], fraction: f64) -> Vec<usize> {
    means.windows(2).enumerate().filter(|(_, w)| w[1] < fraction * w[0]).map(|(m, _)| m + 1).collect()
}

/// Whether two onset lists pair up one-to-one within `tol` sub-intervals.
pub fn onsets_aligned(a: &[usize], b: &[usize], tol: usize) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.abs_diff(*y) <= tol)
}

/// Fraction of `n` uniformly spaced instants in `(0, t_end)` at which
/// `a.dt / b.dt` lies in `[lo, hi]`.
pub fn ratio_fraction(a: &DtHistory, b: &DtHistory, t_end: f64, n: usize, lo: f64, hi: f64) -> f64 {
    let mut ok = 0usize;
    for i in 0..n {
        let t = t_end * (i as f64 + 0.5) / n as f64;
        if let (Some(x), Some(y)) = (a.at(t), b.at(t)) {
            if (lo..=hi).contains(&(x / y)) {
                ok += 1;
            }
        }
    }
    ok as f64 / n as f64
}

/// At most `max_rows` indices out of `0..n`: the index maximizing `key` in
/// each of `max_rows` equal buckets, plus the first and last index.
pub fn peak_rows<F: Fn(usize) -> f64>(n: usize, max_rows: usize, key: F) -> Vec<usize> {
    if n <= max_rows.max(2) {
        return (0..n).collect();
    }
    let buckets = max_rows.max(2) - 2;
    let mut out = vec![0];
    for b in 0..buckets {
        let (lo, hi) = (1 + b * (n - 2) / buckets, 1 + (b + 1) * (n - 2) / buckets);
        if let Some(best) = (lo..hi).max_by(|&i, &j| key(i).total_cmp(&key(j))) {
            out.push(best);
        }
    }
    out.push(n - 1);
    out
}

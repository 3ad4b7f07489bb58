//! Compensated, block-deterministic summation.
//!
//! `[1, N]` is cut into fixed blocks of [`BLOCK_TERMS`] indices (further split
//! at checkpoints). Each piece is Kahan-summed independently, possibly on a
//! worker thread, and the pieces are then folded in ascending order. The
//! result does not depend on the number of workers.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const BLOCK_TERMS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexKahan {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexKahan {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn total(&self) -> Complex64 {
        Complex64::new(self.re.total(), self.im.total())
    }
}

/// Worker configuration; `workers = 0` uses the global rayon pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SumOptions {
    pub workers: usize,
}

impl SumOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self { workers }
    }
}

pub fn validate_checkpoints(checkpoints: &[u64]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::InvalidParameter("at least one checkpoint is required".into()));
    }
    if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "checkpoints must be positive and strictly increasing: {checkpoints:?}"
        )));
    }
    Ok(())
}

/// Inclusive index ranges covering `[1, n_max]`, cut at block boundaries and
/// after every checkpoint.
fn segments(checkpoints: &[u64]) -> Vec<(u64, u64)> {
    let n_max = *checkpoints.last().expect("validated");
    let mut out = Vec::new();
    let mut cps = checkpoints.iter().peekable();
    let mut lo = 1;
    while lo <= n_max {
        let block_end = ((lo - 1) / BLOCK_TERMS + 1) * BLOCK_TERMS;
        let mut hi = block_end.min(n_max);
        while cps.peek().is_some_and(|&&c| c < lo) {
            cps.next();
        }
        if let Some(&&c) = cps.peek() {
            hi = hi.min(c);
        }
        out.push((lo, hi));
        lo = hi + 1;
    }
    out
}

/// Running means `(1/N) sum_{n=1}^{N} term(n)` at each checkpoint `N`.
pub fn checkpointed_means<F>(term: F, checkpoints: &[u64], opts: &SumOptions) -> Result<Vec<Complex64>>
where
    F: Fn(u64) -> Complex64 + Sync,
{
    let means = checkpointed_segment_means(
        |lo, hi| {
            let mut acc = ComplexKahan::default();
            for n in lo..=hi {
                acc.add(term(n));
            }
            let z = acc.total();
            [z.re, z.im]
        },
        checkpoints,
        opts,
    )?;
    Ok(means.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
}

/// Componentwise running means where `segment(lo, hi)` returns the
/// (compensated) sums over `lo..=hi`; segments never straddle a block
/// boundary or a checkpoint.
pub fn checkpointed_segment_means<F, const K: usize>(
    segment: F,
    checkpoints: &[u64],
    opts: &SumOptions,
) -> Result<Vec<[f64; K]>>
where
    F: Fn(u64, u64) -> [f64; K] + Sync,
{
    validate_checkpoints(checkpoints)?;
    let segs = segments(checkpoints);
    let run = |&(lo, hi): &(u64, u64)| segment(lo, hi);
    let partials: Vec<[f64; K]> = if opts.workers == 0 {
        segs.par_iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| segs.par_iter().map(run).collect())
    };
    let mut totals = [KahanSum::default(); K];
    let mut means = Vec::with_capacity(checkpoints.len());
    let mut cps = checkpoints.iter().peekable();
    for (&(_, hi), part) in segs.iter().zip(partials) {
        for (t, v) in totals.iter_mut().zip(part) {
            t.add(v);
        }
        if cps.peek() == Some(&&hi) {
            cps.next();
            means.push(std::array::from_fn(|i| totals[i].total() / hi as f64));
        }
    }
    debug_assert_eq!(means.len(), checkpoints.len());
    Ok(means)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut k = KahanSum::default();
        k.add(1.0);
        for _ in 0..10_000 {
            k.add(1e-16);
        }
        assert!((k.total() - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn segments_cover_range_and_cut_at_checkpoints() {
        let cps = [10, BLOCK_TERMS, BLOCK_TERMS + 5, 3 * BLOCK_TERMS + 1];
        let segs = segments(&cps);
        assert_eq!(segs[0], (1, 10));
        assert_eq!(segs[1], (11, BLOCK_TERMS));
        assert_eq!(segs[2], (BLOCK_TERMS + 1, BLOCK_TERMS + 5));
        let mut next = 1;
        for &(lo, hi) in &segs {
            assert_eq!(lo, next);
            assert!(hi >= lo && (hi - 1) / BLOCK_TERMS == (lo - 1) / BLOCK_TERMS);
            next = hi + 1;
        }
        assert_eq!(next, 3 * BLOCK_TERMS + 2);
    }

    #[test]
    fn means_are_worker_independent() {
        let term = |n: u64| Complex64::new((n as f64).sin(), (n as f64 * 0.5).cos());
        let cps = [1000, 100_000, 300_001];
        let a = checkpointed_means(term, &cps, &SumOptions::with_workers(1)).unwrap();
        let b = checkpointed_means(term, &cps, &SumOptions::with_workers(3)).unwrap();
        let c = checkpointed_means(term, &cps, &SumOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn constant_mean() {
        let m = checkpointed_means(|_| Complex64::new(1.0, 0.0), &[1, 100], &SumOptions::default()).unwrap();
        assert_eq!(m, vec![Complex64::new(1.0, 0.0); 2]);
    }

    #[test]
    fn rejects_bad_checkpoints() {
        let t = |_| Complex64::new(0.0, 0.0);
        assert!(checkpointed_means(t, &[], &SumOptions::default()).is_err());
        assert!(checkpointed_means(t, &[5, 5], &SumOptions::default()).is_err());
        assert!(checkpointed_means(t, &[0, 5], &SumOptions::default()).is_err());
    }
}

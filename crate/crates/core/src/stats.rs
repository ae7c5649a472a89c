//! Summary statistics and percentile bootstrap intervals.

use rand::Rng;

use crate::rng;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n − 1` denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// True when the two intervals share no point.
    pub fn disjoint(&self, other: &Interval) -> bool {
        self.hi < other.lo || other.hi < self.lo
    }

    /// True when every point of `self` lies strictly below every point of `other`.
    pub fn below(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }
}

pub const DEFAULT_RESAMPLES: usize = 1000;

/// Percentile bootstrap of `statistic` over `n` units. Each resample draws
/// `n` indices with replacement and passes them to `statistic`.
pub fn bootstrap<F>(n: usize, resamples: usize, level: f64, seed: u64, statistic: F) -> Interval
where
    F: Fn(&[usize]) -> f64,
{
    assert!(n > 0 && resamples > 0, "bootstrap needs data and resamples");
    assert!(level > 0.0 && level < 1.0, "confidence level must lie in (0, 1)");
    let all: Vec<usize> = (0..n).collect();
    let estimate = statistic(&all);
    let mut rng = rng::stream(seed, &[rng::label::BOOTSTRAP]);
    let mut idx = vec![0; n];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            idx.iter_mut().for_each(|i| *i = rng.random_range(0..n));
            statistic(&idx)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let pick = |q: f64| stats[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Interval { estimate, lo: pick(tail), hi: pick(1.0 - tail) }
}

/// 95% bootstrap interval of the mean.
pub fn bootstrap_mean(xs: &[f64], seed: u64) -> Interval {
    bootstrap(xs.len(), DEFAULT_RESAMPLES, 0.95, seed, |idx| idx.iter().map(|&i| xs[i]).sum::<f64>() / idx.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_moments() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((std_dev(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
        assert_eq!(std_dev(&[4.0]), 0.0);
    }

    #[test]
    fn constant_data_gives_point_interval() {
        let i = bootstrap_mean(&[0.5; 7], 1);
        assert_eq!((i.lo, i.estimate, i.hi), (0.5, 0.5, 0.5));
    }

    #[test]
    fn interval_brackets_mean_and_is_seeded() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = bootstrap_mean(&xs, 3);
        assert!(a.lo <= a.estimate && a.estimate <= a.hi && a.lo < a.hi);
        assert_eq!(a, bootstrap_mean(&xs, 3));
        let far = Interval { estimate: 10.0, lo: 9.0, hi: 11.0 };
        assert!(a.disjoint(&far) && a.below(&far) && !far.below(&a));
    }
}

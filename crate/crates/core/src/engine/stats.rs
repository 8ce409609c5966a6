//! Interval estimators.

use rand::Rng;

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Combines two accumulators (Chan et al.).
    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Normal-approximation 95% interval for the mean.
    pub fn mean_interval(&self) -> (f64, f64) {
        let half = Z95 * (self.variance() / self.count.max(1) as f64).sqrt();
        (self.mean - half, self.mean + half)
    }
}

/// Interpolated empirical quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile bootstrap over groups: each resample draws `groups.len()`
/// groups with replacement and evaluates `stat` on the resampled groups.
pub fn bootstrap_interval<T, R, F>(groups: &[T], resamples: usize, rng: &mut R, stat: F) -> (f64, f64)
where
    R: Rng + ?Sized,
    F: Fn(&mut dyn Iterator<Item = &T>) -> f64,
{
    if groups.len() < 2 || resamples == 0 {
        let v = stat(&mut groups.iter());
        return (v, v);
    }
    let n = groups.len();
    let mut picks = vec![0usize; n];
    let mut values: Vec<f64> = (0..resamples)
        .map(|_| {
            picks.iter_mut().for_each(|p| *p = rng.random_range(0..n));
            stat(&mut picks.iter().map(|&i| &groups[i]))
        })
        .collect();
    values.sort_by(f64::total_cmp);
    (quantile_sorted(&values, 0.025), quantile_sorted(&values, 0.975))
}

//! Small numerical helpers: compensated summation and finite differences.

/// Neumaier-compensated accumulator.
///
/// Ensemble reductions must be insensitive to member order well below the
/// statistical noise floor; plain summation of 1e5 terms is not.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator of f64 values.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Central difference df/dx at `x` with step `h`.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `count` equally spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2, "linspace needs at least two points");
    let step = (end - start) / (count - 1) as f64;
    (0..count).map(|k| start + step * k as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        // 1 + 1e16 - 1e16 loses the 1 in plain f64 order-dependent summation.
        let values = [1.0, 1e16, -1e16];
        assert_eq!(compensated_sum(values.iter().copied()), 1.0);

        let mut plain = 0.0;
        for v in values {
            plain += v;
        }
        assert_eq!(plain, 0.0);
    }

    #[test]
    fn compensated_sum_is_order_insensitive() {
        let mut values: Vec<f64> = (0..10_000)
            .map(|k| (k as f64 * 0.7).sin() * 1e-3 + 1e6 * ((k % 7) as f64 - 3.0))
            .collect();
        let forward = compensated_sum(values.iter().copied());
        values.reverse();
        let backward = compensated_sum(values.iter().copied());
        assert!((forward - backward).abs() < 1e-12 * forward.abs().max(1.0));
    }

    #[test]
    fn central_difference_matches_derivative() {
        let d = central_difference(|x| x.sin(), 0.7, 1e-5);
        assert!((d - 0.7f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.0, 1.0, 5);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[4], 1.0);
        assert!((g[2] - 0.5).abs() < 1e-15);
    }
}

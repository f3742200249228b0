//! Mean and standard-error accumulation over replicate values.

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    /// Reduces values in slice order; the result is bit-identical for identical input.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        };
        Self { mean, stderr, n }
    }

    /// Proportion with binomial standard error `sqrt(p(1-p)/n)`.
    pub fn proportion(successes: usize, n: usize) -> Self {
        let p = successes as f64 / n as f64;
        Self {
            mean: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }
}

/// Standard error of the difference of two independent estimates.
pub fn pooled_se(a: &Estimate, b: &Estimate) -> f64 {
    (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se() {
        let e = Estimate::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        // sample variance 5/3, se = sqrt(5/3/4)
        assert!((e.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(Estimate::from_values(&[7.0]).stderr, 0.0);
    }

    #[test]
    fn proportion_se() {
        let e = Estimate::proportion(25, 100);
        assert_eq!(e.mean, 0.25);
        assert!((e.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pooled() {
        let a = Estimate { mean: 0.0, stderr: 3.0, n: 1 };
        let b = Estimate { mean: 0.0, stderr: 4.0, n: 1 };
        assert_eq!(pooled_se(&a, &b), 5.0);
    }
}

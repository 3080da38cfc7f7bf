//! Small numerical helpers shared by the analysis modules.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// `ln(exp(a_1) + ... + exp(a_n))` without overflow.
pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + compensated_sum(terms.iter().map(|t| (t - max).exp())).ln()
}

/// Largest `t` in `[lo, hi]` with `pred(t)` true, assuming `pred` is true on
/// a prefix of the interval. Callers check the endpoints themselves.
pub(crate) fn bisect_last_true(mut lo: f64, mut hi: f64, tol: f64, mut pred: impl FnMut(f64) -> bool) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut terms = vec![1.0];
        terms.extend(std::iter::repeat_n(1e-16, 10_000));
        let naive: f64 = terms.iter().sum();
        assert_eq!(naive, 1.0);
        assert!((compensated_sum(terms) - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let terms = [0.1f64.ln(), 0.2f64.ln(), 0.3f64.ln()];
        assert!((log_sum_exp(&terms) - 0.6f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-2000.0, -2000.0]) - (-2000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn bisection_finds_step() {
        let t = bisect_last_true(0.0, 1.0, 1e-9, |x| x <= 0.3);
        assert!((t - 0.3).abs() < 1e-9);
    }
}

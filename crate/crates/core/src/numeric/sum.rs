/// Running sum with Neumaier's compensation term.
///
/// Terms are folded strictly left to right, so the result is a pure
/// function of the input order.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.extend(iter);
    acc.total()
}

/// Mean of the terms; `NaN` for an empty iterator.
pub fn compensated_mean<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = NeumaierSum::new();
    let mut n = 0usize;
    for x in iter {
        acc.add(x);
        n += 1;
    }
    acc.total() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms_lost_by_naive_summation() {
        let terms = [1e16, 1.0, -1e16, 1.0];
        let naive: f64 = terms.iter().sum();
        assert_eq!(naive, 1.0);
        assert_eq!(compensated_sum(terms), 2.0);
    }

    #[test]
    fn mean_of_wide_dynamic_range() {
        let mut v = vec![1e-8; 1000];
        v.push(1e8);
        let m = compensated_mean(v.iter().copied());
        let exact = (1e8 + 1000.0 * 1e-8) / 1001.0;
        assert!((m - exact).abs() <= 1e-15 * exact);
    }
}

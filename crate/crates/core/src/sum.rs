//! Compensated (Neumaier) summation.
//!
//! The fast univariate kernel and the naive reference path both promise
//! agreement to 1e-9 on samples up to n = 1e5, which plain left-to-right
//! accumulation does not reliably deliver. Every reduction that feeds a
//! statistic goes through [`Accumulator`].

/// Running Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    #[inline]
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub(crate) fn sum(values: &[f64]) -> f64 {
    let mut acc = Accumulator::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Compensated dot product; panics if lengths differ.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    let mut acc = Accumulator::new();
    for (&x, &y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.value()
}

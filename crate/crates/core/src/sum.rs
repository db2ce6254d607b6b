//! Compensated summation.
//!
//! All reductions over long series go through [`NeumaierSum`] so results are
//! accurate to well below 1e-9 relative error and independent of how many
//! minutes a year happens to have.

/// Neumaier's variant of Kahan summation.
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
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
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
        for v in iter {
            self.add(v);
        }
    }
}

/// Compensated sum of an iterator of values.
pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = NeumaierSum::new();
    acc.extend(values);
    acc.total()
}

/// Compensated sum over four interleaved lanes, fed in blocks. Every block
/// except the last must have a length divisible by four for the result to
/// match [`sum_slice`] over the concatenation.
#[derive(Debug, Clone, Copy, Default)]
pub struct LaneSum {
    lanes: [NeumaierSum; 4],
}

impl LaneSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, values: &[f64]) {
        let mut chunks = values.chunks_exact(4);
        for c in &mut chunks {
            for (lane, v) in self.lanes.iter_mut().zip(c) {
                lane.add(*v);
            }
        }
        for (lane, v) in self.lanes.iter_mut().zip(chunks.remainder()) {
            lane.add(*v);
        }
    }

    /// Lanes merged in lane order.
    pub fn total(&self) -> f64 {
        let mut total = NeumaierSum::new();
        for lane in self.lanes {
            total.add(lane.sum);
            total.add(lane.compensation);
        }
        total.total()
    }
}

/// Compensated sum of a slice; deterministic for a given slice.
pub fn sum_slice(values: &[f64]) -> f64 {
    let mut acc = LaneSum::new();
    acc.add_block(values);
    acc.total()
}

//! Uniformly sampled time series of angular frequencies.

use crate::error::{Error, Result};

/// A mode (or secular) frequency record sampled on a uniform grid, rad/s.
#[derive(Debug, Clone)]
pub struct FrequencySeries {
    /// Spacing between samples in seconds.
    pub sample_period: f64,
    /// Angular frequency at each sample, rad/s.
    pub values: Vec<f64>,
}

impl FrequencySeries {
    pub fn new(sample_period: f64, values: Vec<f64>) -> Result<Self> {
        if !(sample_period > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sample_period",
                value: sample_period,
            });
        }
        if values.is_empty() {
            return Err(Error::InsufficientData("empty frequency series".into()));
        }
        Ok(Self { sample_period, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total record length in seconds.
    pub fn duration(&self) -> f64 {
        self.sample_period * self.values.len() as f64
    }

    /// Value at time `t`, clamped to the record (nearest sample).
    pub fn at(&self, t: f64) -> f64 {
        let idx = (t / self.sample_period).round() as isize;
        let idx = idx.clamp(0, self.values.len() as isize - 1) as usize;
        self.values[idx]
    }

    /// Mean over the window `[t0, t0 + span)`, resolved to whole samples.
    ///
    /// Used for Ramsey phase accumulation, where the interrogation window
    /// averages the instantaneous frequency. Windows shorter than one sample
    /// return the sample containing `t0`.
    pub fn window_mean(&self, t0: f64, span: f64) -> f64 {
        let n = self.values.len();
        let start = ((t0 / self.sample_period).floor() as isize).clamp(0, n as isize - 1) as usize;
        let end_f = ((t0 + span) / self.sample_period).ceil() as isize;
        let end = end_f.clamp(start as isize + 1, n as isize) as usize;
        let slice = &self.values[start..end];
        slice.iter().sum::<f64>() / slice.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_mean_averages_whole_samples() {
        let s = FrequencySeries::new(1.0, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.window_mean(0.0, 2.0), 1.5);
        assert_eq!(s.window_mean(1.0, 3.0), 3.0);
        // Sub-sample window falls back to the containing sample.
        assert_eq!(s.window_mean(2.2, 0.1), 3.0);
    }

    #[test]
    fn window_mean_clamps_to_record() {
        let s = FrequencySeries::new(0.5, vec![10.0, 20.0]).unwrap();
        assert_eq!(s.window_mean(5.0, 1.0), 20.0);
    }

    #[test]
    fn rejects_empty_series() {
        assert!(FrequencySeries::new(1.0, vec![]).is_err());
    }
}

//! Integer-delay FIFO channels for vector signals.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a line returns before `delay` samples have been pushed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefillPolicy {
    #[default]
    Zeros,
    /// Repeat the first pushed sample.
    HoldInitial,
}

#[derive(Clone, Debug)]
pub struct DelayLine {
    delay: usize,
    width: usize,
    policy: PrefillPolicy,
    buffer: VecDeque<Vec<f64>>,
    primed: bool,
}

impl DelayLine {
    pub fn new(delay: usize, width: usize, policy: PrefillPolicy) -> Self {
        let buffer = match policy {
            PrefillPolicy::Zeros => (0..delay).map(|_| vec![0.0; width]).collect(),
            PrefillPolicy::HoldInitial => VecDeque::with_capacity(delay),
        };
        DelayLine {
            delay,
            width,
            policy,
            buffer,
            primed: policy == PrefillPolicy::Zeros,
        }
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn policy(&self) -> PrefillPolicy {
        self.policy
    }

    /// Stores `sample` and returns the one pushed `delay` calls earlier.
    pub fn push_and_read(&mut self, sample: &[f64]) -> Result<Vec<f64>> {
        if sample.len() != self.width {
            return Err(Error::dim(format!(
                "delay line of width {} fed a sample of width {}",
                self.width,
                sample.len()
            )));
        }
        if self.delay == 0 {
            return Ok(sample.to_vec());
        }
        if !self.primed {
            self.buffer.extend((0..self.delay).map(|_| sample.to_vec()));
            self.primed = true;
        }
        self.buffer.push_back(sample.to_vec());
        Ok(self.buffer.pop_front().expect("buffer holds delay + 1 samples"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_delay_passes_through() {
        let mut l = DelayLine::new(0, 2, PrefillPolicy::Zeros);
        assert_eq!(l.push_and_read(&[1.5, -2.0]).unwrap(), vec![1.5, -2.0]);
    }

    #[test]
    fn shift_with_zero_prefill() {
        let mut l = DelayLine::new(3, 4, PrefillPolicy::Zeros);
        let e = |i: usize| {
            let mut v = vec![0.0; 4];
            v[i] = 1.0;
            v
        };
        let out: Vec<_> = (0..4).map(|i| l.push_and_read(&e(i)).unwrap()).collect();
        assert_eq!(out, vec![vec![0.0; 4], vec![0.0; 4], vec![0.0; 4], e(0)]);
    }

    #[test]
    fn hold_initial_repeats_first_sample() {
        let mut l = DelayLine::new(2, 1, PrefillPolicy::HoldInitial);
        let out: Vec<f64> = [7.0, 8.0, 9.0, 10.0]
            .iter()
            .map(|&v| l.push_and_read(&[v]).unwrap()[0])
            .collect();
        assert_eq!(out, vec![7.0, 7.0, 7.0, 8.0]);
    }

    #[test]
    fn width_mismatch_rejected() {
        let mut l = DelayLine::new(1, 3, PrefillPolicy::Zeros);
        assert!(l.push_and_read(&[1.0]).is_err());
    }
}

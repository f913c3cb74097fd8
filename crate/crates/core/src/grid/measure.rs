//! Product (Bernoulli) measures and reproducible sampling.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`). The 256-bit key
//! holds the seed as a little-endian `u64` in bytes `0..8` and zeros
//! elsewhere; the stream id is the sample index. Cell `k` of a window
//! (row-major) consumes the `k`-th `u64` of the stream. A `u64` `x` maps to a
//! symbol by `(x * q) >> 64` under the uniform measure, and otherwise by the
//! inverse CDF applied to `(x >> 11) / 2^53`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::config::{Boundary, Configuration};
use super::rule::MAX_ALPHABET;
use super::{Coord, Rect};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    weights: Vec<f64>,
    uniform: bool,
}

impl MeasureSpec {
    pub fn uniform(alphabet: u8) -> Result<Self> {
        if !(2..=MAX_ALPHABET).contains(&alphabet) {
            return Err(Error::InvalidMeasure(format!("alphabet size {alphabet} outside 2..={MAX_ALPHABET}")));
        }
        Ok(MeasureSpec { weights: vec![1.0 / alphabet as f64; alphabet as usize], uniform: true })
    }

    /// Product measure with the given marginal. Weights must be nonnegative
    /// and sum to 1 within `1e-12`.
    pub fn bernoulli(weights: &[f64]) -> Result<Self> {
        if !(2..=MAX_ALPHABET as usize).contains(&weights.len()) {
            return Err(Error::InvalidMeasure(format!("{} weights; need 2..={MAX_ALPHABET}", weights.len())));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {sum}, not 1")));
        }
        let q = weights.len() as f64;
        let uniform = weights.iter().all(|&w| w == 1.0 / q);
        Ok(MeasureSpec { weights: weights.to_vec(), uniform })
    }

    pub fn alphabet(&self) -> u8 {
        self.weights.len() as u8
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// `-sum w ln w` in nats.
    pub fn marginal_entropy(&self) -> f64 {
        if self.uniform {
            return (self.weights.len() as f64).ln();
        }
        -self.weights.iter().filter(|&&w| w > 0.0).map(|w| w * w.ln()).sum::<f64>()
    }

    /// `-ln w_s`; infinite for zero-weight symbols.
    pub fn surprisal(&self, symbol: u8) -> f64 {
        if self.uniform {
            (self.weights.len() as f64).ln()
        } else {
            -self.weights[symbol as usize].ln()
        }
    }
}

/// One reproducible stream of symbols.
#[derive(Debug, Clone)]
pub struct SampleStream {
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        SampleStream { rng }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform integer in `0..bound`.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    pub fn symbol(&mut self, measure: &MeasureSpec) -> u8 {
        let x = self.next_u64();
        let w = measure.weights();
        if measure.is_uniform() {
            return ((x as u128 * w.len() as u128) >> 64) as u8;
        }
        let u = (x >> 11) as f64 / (1u64 << 53) as f64;
        let mut acc = 0.0;
        for (s, &p) in w.iter().enumerate() {
            acc += p;
            if s + 1 == w.len() {
                acc = 1.0;
            }
            if u < acc && p > 0.0 {
                return s as u8;
            }
        }
        // Only reachable when trailing weights are zero.
        w.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u8
    }
}

/// i.i.d. window on `[0, width) x [0, height)`, stream 0.
pub fn sample_configuration(measure: &MeasureSpec, width: usize, height: usize, seed: u64) -> Result<Configuration> {
    sample_window(measure, Rect::new(0, 0, width as i64, height as i64), seed, 0, Boundary::Shrink)
}

/// i.i.d. window covering `rect`, drawn from stream `sample`.
pub fn sample_window(
    measure: &MeasureSpec,
    rect: Rect,
    seed: u64,
    sample: u64,
    boundary: Boundary,
) -> Result<Configuration> {
    if rect.is_empty() {
        return Err(Error::InvalidArgument("window dimensions must be positive".into()));
    }
    let (w, h) = (rect.width() as usize, rect.height() as usize);
    let mut c = Configuration::zeros(w, h, measure.alphabet(), Coord::new(rect.i0, rect.j0), boundary)?;
    let mut s = SampleStream::new(seed, sample);
    for row in 0..h {
        for col in 0..w {
            let v = s.symbol(measure);
            if v != 0 {
                c.set_local(col, row, v);
            }
        }
    }
    Ok(c)
}

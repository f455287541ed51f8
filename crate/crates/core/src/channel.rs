//! BPSK over AWGN and channel log-likelihood ratios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Eb/N0 in dB.
    pub ebn0_db: f64,
    /// Code rate R in (0, 1].
    pub rate: f64,
    pub seed: u64,
}

impl ChannelParams {
    pub fn new(ebn0_db: f64, rate: f64, seed: u64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::Config(format!("code rate {rate} outside (0, 1]")));
        }
        if !ebn0_db.is_finite() {
            return Err(Error::Config(format!("Eb/N0 {ebn0_db} dB is not finite")));
        }
        Ok(ChannelParams { ebn0_db, rate, seed })
    }

    /// Noise variance per real dimension for unit-energy BPSK symbols.
    pub fn sigma2(&self) -> f64 {
        1.0 / (2.0 * self.rate * 10f64.powf(self.ebn0_db / 10.0))
    }

    /// Independent generator for frame `frame` of sweep point `point`.
    pub fn frame_rng(&self, point: u64, frame: u64) -> ChaCha8Rng {
        frame_rng(self.seed, point, frame)
    }
}

/// Counter-style stream selection: the key fixes (seed, point) and the
/// ChaCha stream id is the frame index, so frames are reproducible in any
/// execution order.
pub fn frame_rng(seed: u64, point: u64, frame: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..24].copy_from_slice(b"polydec\0");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(frame);
    rng
}

/// Channel LLRs `v`, positive values favouring bit 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector(pub Vec<f64>);

impl LlrVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("LLR {i} is not finite")));
        }
        Ok(LlrVector(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Sign-based hard decision; zero maps to bit 0.
    pub fn hard_decision(&self) -> Vec<u8> {
        self.0.iter().map(|&v| u8::from(v < 0.0)).collect()
    }
}

/// Maps bits to ±1 and adds N(0, sigma2) noise.
pub fn transmit<R: Rng + ?Sized>(bits: &[u8], sigma2: f64, rng: &mut R) -> Vec<f64> {
    let sigma = sigma2.sqrt();
    bits.iter()
        .map(|&b| {
            let n: f64 = rng.sample(StandardNormal);
            (1.0 - 2.0 * f64::from(b & 1)) + sigma * n
        })
        .collect()
}

/// BPSK/AWGN closed form `v_i = 2 y_i / sigma2`.
pub fn llr(y: &[f64], sigma2: f64) -> LlrVector {
    debug_assert!(sigma2 > 0.0);
    let scale = 2.0 / sigma2;
    LlrVector(y.iter().map(|&yi| scale * yi).collect())
}

/// Transmits the all-zero codeword and returns its LLRs.
pub fn all_zero_frame<R: Rng + ?Sized>(n: usize, sigma2: f64, rng: &mut R) -> LlrVector {
    let bits = vec![0u8; n];
    llr(&transmit(&bits, sigma2, rng), sigma2)
}

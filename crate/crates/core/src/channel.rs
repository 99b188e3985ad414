//! Impairments between transmitter and receiver.
//!
//! `y(t) = h·x(t − τ)·exp(j2π·cfo·t) + n(t)`. The SNR is defined per ON OOK
//! sample inside the 132-subcarrier WUS band: an ON block has unit power
//! there, so the noise power seen per WUS-rate sample is `1/snr`. With the
//! interpolating synthesis of [`crate::waveform::OfdmEngine`] that takes a
//! time-domain noise variance of `fft_size / (132·snr)` per sample.

use crate::config::WUS_SUBCARRIERS;
use crate::waveform::IqSignal;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fading {
    None,
    /// One complex Gaussian tap `h ~ CN(0, 1)` per signal.
    RayleighBlock { seed: u64 },
}

impl fmt::Display for Fading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fading::None => write!(f, "none"),
            Fading::RayleighBlock { seed } => write!(f, "rayleigh:{seed}"),
        }
    }
}

impl FromStr for Fading {
    type Err = String;

    /// `none`, `rayleigh` or `rayleigh:<seed>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "none" => Ok(Fading::None),
            None if s == "rayleigh" => Ok(Fading::RayleighBlock { seed: 0 }),
            Some(("rayleigh", seed)) => seed
                .parse()
                .map(|seed| Fading::RayleighBlock { seed })
                .map_err(|_| format!("invalid fading seed {seed:?}")),
            _ => Err(format!("unknown fading model {s:?}, expected none or rayleigh[:seed]")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    /// Per ON-OOK-sample SNR in the WUS band. `+inf` disables noise.
    pub snr_db: f64,
    pub cfo_hz: f64,
    /// Positive values delay the signal.
    pub timing_offset_samples: i64,
    pub fading: Fading,
    pub seed: u64,
}

impl Default for ChannelProfile {
    fn default() -> Self {
        Self {
            snr_db: f64::INFINITY,
            cfo_hz: 0.0,
            timing_offset_samples: 0,
            fading: Fading::None,
            seed: 0,
        }
    }
}

impl ChannelProfile {
    pub fn awgn(snr_db: f64, seed: u64) -> Self {
        Self {
            snr_db,
            seed,
            ..Self::default()
        }
    }

    /// Complex noise variance per time-domain sample, 0 when noise is off.
    pub fn noise_variance(&self, fft_size: usize) -> f64 {
        if self.snr_db == f64::INFINITY {
            return 0.0;
        }
        let snr = 10f64.powf(self.snr_db / 10.0);
        fft_size as f64 / (WUS_SUBCARRIERS as f64 * snr)
    }

    /// Noise variance per WUS-rate sample after band selection.
    pub fn band_noise_variance(&self) -> f64 {
        if self.snr_db == f64::INFINITY {
            0.0
        } else {
            10f64.powf(-self.snr_db / 10.0)
        }
    }
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

/// Passes `sig` through the channel. The symbol layout is kept; a timing
/// offset shifts samples within the same window, zero-filling the gap.
pub fn apply(sig: &IqSignal, prof: &ChannelProfile) -> IqSignal {
    let n = sig.samples.len();
    let tau = prof.timing_offset_samples;
    let h = match prof.fading {
        Fading::None => Complex64::new(1.0, 0.0),
        Fading::RayleighBlock { seed } => complex_normal(&mut ChaCha8Rng::seed_from_u64(seed)),
    };
    let w = TAU * prof.cfo_hz / sig.sample_rate_hz;
    let sigma = prof.noise_variance(sig.fft_size).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(prof.seed);
    let samples = (0..n)
        .map(|i| {
            let src = i as i64 - tau;
            let x = if (0..n as i64).contains(&src) {
                sig.samples[src as usize]
            } else {
                Complex64::new(0.0, 0.0)
            };
            let mut y = h * x;
            if w != 0.0 {
                y *= Complex64::from_polar(1.0, w * i as f64);
            }
            if sigma > 0.0 {
                y += complex_normal(&mut rng) * sigma;
            }
            y
        })
        .collect();
    IqSignal {
        samples,
        ..sig.clone()
    }
}

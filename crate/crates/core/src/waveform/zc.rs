//! Cyclically extended Zadoff-Chu ON-sequences.

use super::WaveformError;
use crate::config::{largest_prime_below, LpWusConfig};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Root sequence `x_q(i) = exp(-jπ q i (i+1) / N_ZC)`, `i = 0..N_ZC`.
///
/// The phase numerator is reduced modulo `2·N_ZC` in integers first so that
/// long sequences keep full precision.
pub fn zadoff_chu(q: u32, n_zc: usize) -> Vec<Complex64> {
    let n = n_zc as u64;
    let q = u64::from(q) % n;
    (0..n)
        .map(|i| {
            let num = (q * ((i * (i + 1)) % (2 * n))) % (2 * n);
            Complex64::from_polar(1.0, -PI * num as f64 / n as f64)
        })
        .collect()
}

/// An ON-sequence of length `M_ZC` built from one ZC root and cyclic shift.
#[derive(Debug, Clone, PartialEq)]
pub struct OnSequence {
    pub samples: Vec<Complex64>,
    pub root: u32,
    pub n_cs: usize,
    pub n_zc: usize,
}

impl OnSequence {
    /// `r(n) = x_q((n + n_cs) mod N_ZC)` for `n = 0..m_zc`; samples past
    /// `N_ZC` repeat the head of the shifted sequence.
    pub fn new(root: u32, n_cs: usize, m_zc: usize) -> Result<Self, WaveformError> {
        let n_zc = largest_prime_below(m_zc);
        if root == 0 || root as usize >= n_zc {
            return Err(WaveformError::InvalidRoot { root, n_zc });
        }
        let x = zadoff_chu(root, n_zc);
        let samples = (0..m_zc).map(|n| x[(n + n_cs) % n_zc]).collect();
        Ok(Self {
            samples,
            root,
            n_cs,
            n_zc,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Root slot and cyclic shift of sequence `c`: roots are split into
/// `P = N_seq / N_root` equally spaced shifts each.
pub fn sequence_params(c: usize, n_seq: usize, n_root: usize, n_zc: usize) -> (usize, usize) {
    let p = (n_seq / n_root.max(1)).max(1);
    (c / p, (c % p) * (n_zc / p))
}

/// ON-sequence `c` of a deployment.
pub fn zc_on_sequence(c: usize, cfg: &LpWusConfig) -> Result<OnSequence, WaveformError> {
    if c >= cfg.n_seq.max(1) {
        return Err(WaveformError::SequenceIndex {
            index: c,
            n_seq: cfg.n_seq,
        });
    }
    let (root_idx, n_cs) = sequence_params(c, cfg.n_seq, cfg.n_root, cfg.n_zc());
    let root = *cfg
        .roots
        .get(root_idx)
        .ok_or(WaveformError::MissingRoot)?;
    OnSequence::new(root, n_cs, cfg.m_zc())
}

/// All configured ON-sequences, indexed by sequence number.
pub fn on_sequence_set(cfg: &LpWusConfig) -> Result<Vec<OnSequence>, WaveformError> {
    (0..cfg.n_seq.max(1)).map(|c| zc_on_sequence(c, cfg)).collect()
}

/// `Σ a[n]·conj(b[n])`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::mo_example;

    #[test]
    fn unit_modulus() {
        for m_zc in [132, 66, 33] {
            let n_zc = largest_prime_below(m_zc);
            for q in 1..n_zc as u32 {
                let s = OnSequence::new(q, 3, m_zc).unwrap();
                assert!(s.samples.iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn shifts_for_four_sequences() {
        let shifts: Vec<usize> = (0..4).map(|c| sequence_params(c, 4, 1, 131).1).collect();
        assert_eq!(shifts, vec![0, 32, 64, 96]);
        let params: Vec<(usize, usize)> = (0..4).map(|c| sequence_params(c, 4, 2, 31)).collect();
        assert_eq!(params, vec![(0, 0), (0, 15), (1, 0), (1, 15)]);
    }

    #[test]
    fn zero_shift_is_extended_root() {
        let s = OnSequence::new(5, 0, 66).unwrap();
        let x = zadoff_chu(5, 61);
        assert_eq!(&s.samples[..61], &x[..]);
        assert_eq!(&s.samples[61..], &x[..5]);
    }

    #[test]
    fn invalid_root_rejected() {
        assert!(matches!(
            OnSequence::new(31, 0, 33),
            Err(WaveformError::InvalidRoot { root: 31, n_zc: 31 })
        ));
        assert!(OnSequence::new(0, 0, 33).is_err());
    }

    #[test]
    fn sequence_index_checked() {
        let (cfg, _) = mo_example();
        assert!(zc_on_sequence(1, &cfg).is_ok());
        assert!(zc_on_sequence(2, &cfg).is_err());
    }

    #[test]
    fn cyclic_autocorrelation_is_ideal() {
        // Brute-force periodic autocorrelation over the prime length.
        let x = zadoff_chu(7, 61);
        for lag in 1..61 {
            let acc: Complex64 = (0..61).map(|n| x[n] * x[(n + lag) % 61].conj()).sum();
            assert!(acc.norm() < 1e-9, "lag {lag}: {}", acc.norm());
        }
    }
}

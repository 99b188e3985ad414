//! Small-block channel code: repetition for one bit, single parity for two,
//! and the (32, K) Reed-Muller code above that.

use super::Payload;
use std::sync::OnceLock;

/// Output length of the (32, K) code.
pub const RM_N: usize = 32;
/// Basis columns shipped in the table.
pub const RM_COLUMNS: usize = 11;

const BASIS_TEXT: &str = include_str!("../../data/rm_basis_32x11.txt");

/// Basis sequences `M(i, k)`, row `i` = output bit, column `k` = input bit.
pub fn rm_basis() -> &'static [[u8; RM_COLUMNS]; RM_N] {
    static BASIS: OnceLock<[[u8; RM_COLUMNS]; RM_N]> = OnceLock::new();
    BASIS.get_or_init(|| parse_basis(BASIS_TEXT))
}

fn parse_basis(text: &str) -> [[u8; RM_COLUMNS]; RM_N] {
    let mut out = [[0u8; RM_COLUMNS]; RM_N];
    let rows: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    assert_eq!(rows.len(), RM_N, "basis table must have {RM_N} rows");
    for (row, line) in out.iter_mut().zip(rows) {
        let vals: Vec<u8> = line
            .split_whitespace()
            .map(|t| match t {
                "0" => 0,
                "1" => 1,
                _ => panic!("bad basis entry {t:?}"),
            })
            .collect();
        assert_eq!(vals.len(), RM_COLUMNS, "basis row must have {RM_COLUMNS} columns");
        row.copy_from_slice(&vals);
    }
    out
}

/// Coded length `N` for a payload of `b` bits.
pub fn coded_len(b: usize) -> usize {
    match b {
        1 => 1,
        2 => 3,
        _ => RM_N,
    }
}

/// Channel-encodes a payload into `N` coded bits.
pub fn channel_encode(payload: &Payload) -> Vec<u8> {
    let b = payload.bits();
    match b.len() {
        1 => vec![b[0]],
        2 => vec![b[0], b[1], (b[0] + b[1]) % 2],
        _ => rm_basis()
            .iter()
            .map(|row| b.iter().zip(row).map(|(x, m)| x & m).fold(0, |acc, v| acc ^ v))
            .collect(),
    }
}

/// Decodes hard rate-matched bits `f̂` back to a `b`-bit payload.
///
/// Repeated positions are combined by summing ±1 votes per coded bit, then
/// the codeword with the largest correlation wins. Ties go to the lowest
/// payload value.
pub fn rm_decode(f_hat: &[u8], b: usize) -> Payload {
    let n = coded_len(b);
    let mut votes = vec![0i64; n];
    for (k, &f) in f_hat.iter().enumerate() {
        votes[k % n] += if f == 0 { 1 } else { -1 };
    }
    let mut best = (i64::MIN, 0u8);
    for value in 0..(1u8 << b) {
        let cw = channel_encode(&Payload::from_value(value, b).expect("b in range"));
        let score: i64 = cw
            .iter()
            .zip(&votes)
            .map(|(&d, &v)| if d == 0 { v } else { -v })
            .sum();
        if score > best.0 {
            best = (score, value);
        }
    }
    Payload::from_value(best.1, b).expect("b in range")
}

//! Manchester line code: `0 -> [1, 0]`, `1 -> [0, 1]`.

pub fn manchester_encode(f: &[u8]) -> Vec<u8> {
    f.iter()
        .flat_map(|&bit| if bit == 0 { [1, 0] } else { [0, 1] })
        .collect()
}

/// Hard decision from paired metrics: `0` iff the first half of a pair is
/// strictly larger, so ties decode as `1`. A trailing odd metric is ignored.
pub fn manchester_hard_decode(metrics: &[f64]) -> Vec<u8> {
    metrics
        .chunks_exact(2)
        .map(|pair| if pair[0] > pair[1] { 0 } else { 1 })
        .collect()
}

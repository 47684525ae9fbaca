//! Small helpers shared across modules.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Platform-independent hash of a sequence of words.
pub fn stable_hash(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x243F_6A88_85A3_08D3, |acc, &w| mix64(acc ^ mix64(w)))
}

/// FNV-1a over bytes, keyed by `seed`.
pub fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ mix64(seed);
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derives an independent child seed for a named stream.
pub fn child_seed(seed: u64, stream: &str, index: u64) -> u64 {
    stable_hash(&[seed, fnv1a(0, stream.as_bytes()), index])
}

/// Percentage change from `old` to `new`; zero when both are (numerically) zero.
pub fn pct_change(old: f64, new: f64) -> f64 {
    if old.abs() < 1e-12 {
        if (new - old).abs() < 1e-12 {
            0.0
        } else {
            100.0 * (new - old).signum()
        }
    } else {
        100.0 * (new - old) / old.abs()
    }
}

/// Sign-preserving log compression used for network features.
#[inline]
pub fn symlog(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation (n-1 denominator); zero for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_are_stable() {
        assert_eq!(stable_hash(&[1, 2, 3]), stable_hash(&[1, 2, 3]));
        assert_ne!(stable_hash(&[1, 2, 3]), stable_hash(&[3, 2, 1]));
        assert_ne!(fnv1a(1, b"ab"), fnv1a(2, b"ab"));
    }

    #[test]
    fn pct_change_handles_zero_base() {
        assert_eq!(pct_change(0.0, 0.0), 0.0);
        assert!((pct_change(2.0, 3.0) - 50.0).abs() < 1e-12);
        assert!((pct_change(-2.0, -1.0) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn sd_of_two_points() {
        assert!((sample_sd(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-12);
    }
}

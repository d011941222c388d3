//! Seed derivation shared by scene generation, collection and experiments.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash a base seed with a path of salts. Distinct paths give distinct seeds
/// with overwhelming probability; equal paths always give equal seeds.
pub fn derive_seed(base: u64, salts: &[u64]) -> u64 {
    salts.iter().fold(mix(base), |acc, &s| mix(acc ^ mix(s)))
}

/// Stable numeric salt for a label such as a scene name.
pub fn salt_of(label: &str) -> u64 {
    // FNV-1a
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn injective_on_small_grid() {
        let mut seen = HashSet::new();
        for cell in 0..12u64 {
            for i in 0..200u64 {
                assert!(seen.insert(derive_seed(7, &[cell, i])));
            }
        }
        assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
        assert_ne!(salt_of("table"), salt_of("chair"));
    }
}

//! Seed derivation. Every random stream in the crate is keyed off a master
//! seed through these functions so runs are reproducible across platforms.

/// The splitmix64 finalizer.
pub const fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive combination of two values into a well-mixed seed.
pub const fn mix(a: u64, b: u64) -> u64 {
    splitmix(splitmix(a) ^ b.rotate_left(17) ^ 0x5851_F42D_4C95_7F2D)
}

/// Derives a sub-seed from a master seed and a list of labels.
pub fn derive(master: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(splitmix(master), |acc, &l| mix(acc, l))
}

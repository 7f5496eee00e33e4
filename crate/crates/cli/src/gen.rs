//! Seeded Gaussian test matrices.
//!
//! The generator is ChaCha20 (`rand_chacha::ChaCha20Rng`), seeded with
//! `seed_from_u64(seed)` and switched to the 64-bit stream `stream_id`.
//! Each pair of standard normal values comes from two consecutive `u64`
//! words through the Box–Muller transform:
//!
//! ```text
//! u1 = (w1 >> 11) · 2⁻⁵³,  u2 = (w2 >> 11) · 2⁻⁵³
//! z1 = √(−2 ln(1 − u1)) · cos(2π u2)
//! z2 = √(−2 ln(1 − u1)) · sin(2π u2)
//! ```
//!
//! Entries are filled in column-major order; an odd trailing value discards
//! its partner. The bit stream is the same on every platform; the normal
//! values can only differ where the platform `ln`/`sin`/`cos` differ.

use std::f64::consts::TAU;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use woodbury_ls::Matrix;

/// `rows × cols` matrix of independent standard normal entries.
///
/// # Panics
///
/// If `rows` or `cols` is zero.
pub fn gen_gaussian(seed: u64, stream_id: u64, rows: usize, cols: usize) -> Matrix {
    assert!(rows > 0 && cols > 0, "gen_gaussian needs a non-empty shape");
    let data = gaussian_vec(seed, stream_id, rows * cols);
    Matrix::from_col_major(rows, cols, data).expect("Box–Muller output is finite")
}

/// The first `len` values of the stream used by [`gen_gaussian`].
pub fn gaussian_vec(seed: u64, stream_id: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    let mut out = Vec::with_capacity(len + 1);
    while out.len() < len {
        let u1 = unit(rng.next_u64());
        let u2 = unit(rng.next_u64());
        let radius = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        out.push(radius * c);
        out.push(radius * s);
    }
    out.truncate(len);
    out
}

#[inline]
fn unit(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

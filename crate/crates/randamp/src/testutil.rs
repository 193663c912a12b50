//! Independent brute-force oracles for the test suites.
//!
//! Everything here evaluates definitions directly — shift-and-XOR for the
//! convolution, an explicit matrix for the seeded hash — and shares no code
//! with the transform-based implementations it checks. Only compiled with
//! the `testutil` feature; never enable it in production builds.

use rand::Rng;

use crate::bitstore::BitString;

/// XORs `src` (holding `src_bits` bits) into `acc` at a bit offset.
fn xor_shifted(acc: &mut [u64], src: &[u64], offset_bits: usize, src_bits: usize) {
    let word_off = offset_bits / 64;
    let shift = offset_bits % 64;
    let n_words = src_bits.div_ceil(64);
    for (w, &v) in src.iter().enumerate().take(n_words) {
        if shift == 0 {
            acc[word_off + w] ^= v;
        } else {
            acc[word_off + w] ^= v << shift;
            if word_off + w + 1 < acc.len() {
                acc[word_off + w + 1] ^= v >> (64 - shift);
            }
        }
    }
}

/// Direct evaluation of `c_k = sum_i a_i b_{(k-i) mod n} (mod 2)`: the linear
/// convolution is accumulated shift by shift and folded back mod `n`.
/// Quadratic in `n`, word-parallel, and entirely transform-free.
pub fn naive_cyclic_convolve(a: &BitString, b: &BitString) -> BitString {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return BitString::zeros(0).unwrap();
    }
    let mut acc = vec![0u64; (2 * n).div_ceil(64) + 1];
    for i in 0..n {
        if a.bit(i) == 1 {
            xor_shifted(&mut acc, b.words(), i, n);
        }
    }
    let linear_bit = |k: usize| (acc[k / 64] >> (k % 64)) & 1;
    let mut out = BitString::zeros(n).unwrap();
    for k in 0..n {
        let mut parity = linear_bit(k);
        if k + n <= 2 * n - 2 {
            parity ^= linear_bit(k + n);
        }
        if parity == 1 {
            out.set_bit_internal(k);
        }
    }
    out
}

/// The explicit `[I | T]` matrix of the seeded extractor, row by row:
/// `T[i][j] = seed[(i - j + m_seed - 1) mod m_seed]`, output
/// `u XOR (T w)` computed as a literal matrix-vector product over GF(2).
pub fn ht_matrix_oracle(source: &BitString, seed: &BitString, m_out: usize) -> BitString {
    let m_seed = source.len() - m_out;
    assert_eq!(seed.len(), m_seed);
    let mut out = BitString::zeros(m_out).unwrap();
    for i in 0..m_out {
        let mut bit = source.bit(i); // the identity block applied to u
        for j in 0..m_seed {
            let d_index = (i + m_seed - 1 - j) % m_seed;
            bit ^= seed.bit(d_index) & source.bit(m_out + j);
        }
        if bit == 1 {
            out.set_bit_internal(i);
        }
    }
    out
}

pub fn random_bitstring(rng: &mut impl Rng, n: usize) -> BitString {
    BitString::from_bits((0..n).map(|_| rng.gen::<u8>() & 1)).unwrap()
}

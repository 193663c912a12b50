//! The randomness extractors and their output-size/security formulas.
//!
//! Two constructions are implemented bit-for-bit:
//!
//! * a two-source extractor over cyclic-shift matrices, realised as the first
//!   `m2` bits of the GF(2) cyclic convolution of the two inputs over an
//!   Artin-prime block length, with output size
//!   `m2 = (1/5)((-log2(p_sv * p_q) - 8 log2(1/eps_sec) + 10 - 4 log2 3) - n)`;
//! * a seeded extractor hashing an `n_S`-bit source with the matrix
//!   `[I | T]`, `T` a Toeplitz block whose diagonals cyclically repeat the
//!   `m2 = n_S - m_S` seed bits, with the output multiple `alpha = m_S/m2`
//!   constrained by `alpha <= floor(1/(1-c))` and security
//!   `eps_sec <= sqrt(alpha-1) * 2^(-m2(1+alpha(c-1))/2)`.
//!
//! A third construction (Raz-style) is sized but deliberately not built: its
//! parameter analysis `m2 = (delta/18.5) * (-log2 p_q)` with
//! `eps_sec <= sqrt(3) * 2^(-1/8) * 2^(-m2/8)` feeds the rate tables, and the
//! bit-level circuit is out of scope.

use serde::{Deserialize, Serialize};

use crate::bitstore::BitString;
use crate::error::{Error, Result};
use crate::ntt::{cyclic_convolve_gf2, is_artin_prime};

/// Against whom the two-source output is secure. A classical-only adversary
/// buys roughly five times the output length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adversary {
    Quantum,
    Classical,
}

/// Sizing of one two-source extraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DodisParams {
    /// Artin-prime block length in bits.
    pub n: u64,
    /// Output length in bits.
    pub m2: u64,
    /// Security parameter of the output string.
    pub eps_sec: f64,
    /// Rate-tradeoff parameter implied by `eps_sec ~ 2^(-xi n / 8)`.
    pub xi: f64,
    pub adversary: Adversary,
}

/// Output size of the two-source extractor, floored and clamped at zero.
///
/// `log2_p_sv` and `log2_p_q` are the log guessing probabilities of the two
/// full input strings; `n` is the (padded) block length in bits. Callers pad
/// with zeros to an Artin prime and pass the padded length here: known
/// constants cannot raise either guessing probability, while the `-n` term
/// must use the true block length.
pub fn dodis_output_size(
    log2_p_sv: f64,
    log2_p_q: f64,
    n: u64,
    eps_sec: f64,
    adversary: Adversary,
) -> Result<u64> {
    if !(eps_sec > 0.0 && eps_sec < 1.0) {
        return Err(Error::invalid("eps_sec", format!("need 0 < eps_sec < 1, got {eps_sec}")));
    }
    if log2_p_sv > 0.0 || log2_p_q > 0.0 {
        return Err(Error::invalid(
            "log2_p",
            format!("log guessing probabilities must be <= 0, got ({log2_p_sv}, {log2_p_q})"),
        ));
    }
    let quantum = (-log2_p_sv - log2_p_q - 8.0 * (1.0 / eps_sec).log2() + 10.0
        - 4.0 * 3.0f64.log2())
        - n as f64;
    let value = match adversary {
        Adversary::Quantum => quantum / 5.0,
        Adversary::Classical => quantum,
    };
    Ok(if value <= 0.0 { 0 } else { value.floor() as u64 })
}

/// Bundles the sizing inputs with the computed output length.
pub fn dodis_params(
    log2_p_sv: f64,
    log2_p_q: f64,
    n: u64,
    eps_sec: f64,
    adversary: Adversary,
) -> Result<DodisParams> {
    let m2 = dodis_output_size(log2_p_sv, log2_p_q, n, eps_sec, adversary)?;
    let xi = 8.0 * (-eps_sec.log2()) / n as f64;
    Ok(DodisParams { n, m2, eps_sec, xi, adversary })
}

/// Two-source extraction: the first `m2` bits of the cyclic convolution of
/// `x` and `y` over GF(2).
///
/// The block length must be an Artin prime; the security argument leans on
/// the cyclic-shift structure that only exists there, so anything else is
/// rejected rather than silently accepted.
pub fn dodis_extract(x: &BitString, y: &BitString, m2: usize) -> Result<BitString> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len() as u64, right: y.len() as u64 });
    }
    let n = x.len();
    if !is_artin_prime(n as u64)? {
        return Err(Error::NotArtinPrime { n: n as u64 });
    }
    if m2 > n {
        return Err(Error::invalid("m2", format!("output size {m2} exceeds block length {n}")));
    }
    cyclic_convolve_gf2(x, y)?.slice(0, m2)
}

/// Sizing of one seeded extraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HtParams {
    /// Effective source length `m_out + m_seed` in bits. When the requested
    /// length is not divisible by `alpha + 1`, the trailing remainder of the
    /// source is left unused and this is the shorter, usable length.
    pub n_source: u64,
    /// Output length `m_out = alpha * m_seed`.
    pub m_out: u64,
    /// Seed length `m_seed = n_source - m_out`.
    pub m_seed: u64,
    /// Output multiple.
    pub alpha: u64,
    /// Per-bit source rate `c`.
    pub source_rate: f64,
    /// `log2` of the security bound `sqrt(alpha-1) * 2^(-m_seed(1+alpha(c-1))/2)`.
    pub log2_eps_bound: f64,
    /// Block-offset constant of the underlying output-size expression; fixed
    /// to the conservative value 0.
    pub d_s: u64,
}

impl HtParams {
    /// The security bound itself; underflows to zero for large seeds, use
    /// `log2_eps_bound` for reporting.
    pub fn eps_bound(&self) -> f64 {
        self.log2_eps_bound.exp2()
    }
}

/// Exponents this close to zero make the security bound vacuous; the
/// construction is refused rather than sized with no security.
const VACUOUS_EXPONENT_TOL: f64 = 1e-9;

/// Sizes a seeded extraction for an `n_source`-bit source of per-bit rate `c`
/// and output multiple `alpha`.
pub fn ht_params(n_source: u64, c: f64, alpha: u64) -> Result<HtParams> {
    if !(c > 0.5 && c < 1.0) {
        return Err(Error::invalid(
            "c",
            format!("the seeded construction needs a source rate in (1/2, 1), got {c}"),
        ));
    }
    if alpha < 2 {
        return Err(Error::invalid("alpha", format!("need alpha >= 2, got {alpha}")));
    }
    let alpha_cap = (1.0 / (1.0 - c)).floor();
    let exponent_rate = 1.0 + alpha as f64 * (c - 1.0);
    if alpha as f64 > alpha_cap || exponent_rate <= VACUOUS_EXPONENT_TOL {
        return Err(Error::invalid(
            "alpha",
            format!(
                "alpha = {alpha} makes the security bound vacuous for c = {c} \
                 (cap floor(1/(1-c)) = {alpha_cap}, exponent rate {exponent_rate:.3e})"
            ),
        ));
    }
    let m_seed = n_source / (alpha + 1);
    if m_seed == 0 {
        return Err(Error::invalid(
            "n_source",
            format!("{n_source} bits cannot be split into alpha+1 = {} parts", alpha + 1),
        ));
    }
    let m_out = alpha * m_seed;
    let log2_eps_bound =
        0.5 * ((alpha - 1) as f64).log2() - (m_seed as f64) * exponent_rate / 2.0;
    Ok(HtParams {
        n_source: m_out + m_seed,
        m_out,
        m_seed,
        alpha,
        source_rate: c,
        log2_eps_bound,
        d_s: 0,
    })
}

/// Seeded extraction with the `[I | T]` matrix family.
///
/// The source splits as `u || w` with `|u| = m_out` and `|w| = m_seed`; the
/// output is `u XOR (T w)` where `T` is the `m_out x m_seed` Toeplitz matrix
/// whose `m_out + m_seed - 1` diagonal parameters repeat the seed cyclically:
/// `T[i][j] = seed[(i - j + m_seed - 1) mod m_seed]`. That periodicity makes
/// `T w` a cyclic convolution of seed and `w`, so the whole hash runs in
/// quasi-linear time through the same transform as the two-source extractor.
pub fn ht_extract(source: &BitString, seed: &BitString, m_out: usize) -> Result<BitString> {
    if m_out > source.len() {
        return Err(Error::invalid(
            "m_out",
            format!("output size {m_out} exceeds source length {}", source.len()),
        ));
    }
    let m_seed = source.len() - m_out;
    if seed.len() != m_seed {
        return Err(Error::LengthMismatch { left: seed.len() as u64, right: m_seed as u64 });
    }
    let u = source.slice(0, m_out)?;
    if m_seed == 0 {
        return Ok(u);
    }
    let w = source.slice(m_out, m_seed)?;
    let conv = cyclic_convolve_gf2(seed, &w)?;
    // (T w)[i] = conv[(i + m_seed - 1) mod m_seed]
    let mut t_w = BitString::zeros(m_out)?;
    for i in 0..m_out {
        if conv.bit((i + m_seed - 1) % m_seed) == 1 {
            t_w.set_bit_internal(i);
        }
    }
    u.xor(&t_w)
}

/// Sizing of the Raz-style two-source extractor (parameter analysis only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RazParams {
    /// Excess of the SV rate above 1/2.
    pub delta: f64,
    /// Output length in bits.
    pub m2: u64,
    /// `log2` of the security bound `sqrt(3) * 2^(-1/8) * 2^(-m2/8)`.
    pub log2_eps_bound: f64,
}

/// Raz-style sizing: `m2 = (delta/18.5) * (-log2 p_q)` for sources with
/// `p_sv <= 2^(-n(1/2+delta))`, zero whenever `delta <= 0`.
pub fn raz_params(c_sv: f64, log2_p_q: f64) -> RazParams {
    let delta = c_sv - 0.5;
    let m2 = if delta <= 0.0 || log2_p_q >= 0.0 {
        0
    } else {
        let value = delta / 18.5 * (-log2_p_q);
        if value <= 0.0 {
            0
        } else {
            value.floor() as u64
        }
    };
    let log2_eps_bound = 0.5 * 3.0f64.log2() - 0.125 - m2 as f64 / 8.0;
    RazParams { delta, m2, log2_eps_bound }
}

//! Packed bit sequences and the binary file formats shared by the whole
//! pipeline.
//!
//! Bit order is fixed once and for all: bit `i` of a string is bit `i % 8` of
//! byte `i / 8` (little-endian within bytes), so extractor outputs and their
//! digests are identical across platforms. Round logs pack one interaction
//! round per byte with the six bits `(x, y, z, a, b, c)` stored from the
//! least-significant bit up.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Magic prefix of raw bit files.
pub const BITS_MAGIC: &[u8; 8] = b"RAPBITS1";
/// Magic prefix of round log files.
pub const LOG_MAGIC: &[u8; 8] = b"RAPLOG01";

/// Longest representable string: lengths are stored as u64 on disk but the
/// in-memory contract caps them at 2^32 bits.
pub const MAX_BITS: u64 = 1 << 32;

const WORD_BITS: usize = 64;

/// An immutable packed sequence of bits.
///
/// Stored as little-endian 64-bit words; all bits at positions `>= len` are
/// kept at zero so that equality, hashing and serialisation are canonical.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    /// The all-zero string of the given length.
    pub fn zeros(len: usize) -> Result<Self> {
        if len as u64 > MAX_BITS {
            return Err(Error::TooLong { len: len as u64 });
        }
        Ok(BitString { len, words: vec![0; len.div_ceil(WORD_BITS)] })
    }

    /// Builds a string from anything yielding bits (values are taken mod 2).
    pub fn from_bits<I: IntoIterator<Item = u8>>(bits: I) -> Result<Self> {
        let mut out = BitString { len: 0, words: Vec::new() };
        for b in bits {
            out.push(b & 1);
        }
        if out.len as u64 > MAX_BITS {
            return Err(Error::TooLong { len: out.len as u64 });
        }
        Ok(out)
    }

    /// Reconstructs a string from packed little-endian bytes.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if len as u64 > MAX_BITS {
            return Err(Error::TooLong { len: len as u64 });
        }
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::invalid(
                "bytes",
                format!("{} bytes cannot hold exactly {} bits", bytes.len(), len),
            ));
        }
        let mut words = vec![0u64; len.div_ceil(WORD_BITS)];
        for (i, &b) in bytes.iter().enumerate() {
            words[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        let mut s = BitString { len, words };
        s.mask_tail();
        // Payload bits past the declared length must be zero.
        let repacked = s.to_bytes();
        if repacked != bytes {
            return Err(Error::invalid("bytes", "nonzero padding bits past the declared length"));
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit at position `i`. Panics if out of bounds; use `len` to stay inside.
    pub fn bit(&self, i: usize) -> u8 {
        assert!(i < self.len, "bit index {i} out of bounds for length {}", self.len);
        ((self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1) as u8
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Appends one bit. Only used while a string is being built; once shared,
    /// a `BitString` is treated as immutable.
    pub fn push(&mut self, bit: u8) {
        let i = self.len;
        if i % WORD_BITS == 0 {
            self.words.push(0);
        }
        self.words[i / WORD_BITS] |= ((bit & 1) as u64) << (i % WORD_BITS);
        self.len += 1;
    }

    /// Elementwise XOR of two equal-length strings.
    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::LengthMismatch { left: self.len as u64, right: other.len as u64 });
        }
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect();
        Ok(BitString { len: self.len, words })
    }

    /// The sub-string of `len` bits starting at `start`.
    pub fn slice(&self, start: usize, len: usize) -> Result<BitString> {
        if start.checked_add(len).is_none_or(|end| end > self.len) {
            return Err(Error::RangeOutOfBounds {
                start: start as u64,
                len: len as u64,
                length: self.len as u64,
            });
        }
        let mut words = vec![0u64; len.div_ceil(WORD_BITS)];
        let shift = start % WORD_BITS;
        let base = start / WORD_BITS;
        for (k, w) in words.iter_mut().enumerate() {
            let lo = self.words[base + k] >> shift;
            let hi = if shift == 0 {
                0
            } else {
                self.words.get(base + k + 1).copied().unwrap_or(0) << (WORD_BITS - shift)
            };
            *w = lo | hi;
        }
        let mut s = BitString { len, words };
        s.mask_tail();
        Ok(s)
    }

    /// Concatenation `self ++ other`.
    pub fn concat(&self, other: &BitString) -> Result<BitString> {
        let total = self.len as u64 + other.len as u64;
        if total > MAX_BITS {
            return Err(Error::TooLong { len: total });
        }
        let mut out = self.clone();
        out.words.reserve(other.words.len());
        for i in 0..other.len {
            out.push(other.bit(i));
        }
        Ok(out)
    }

    /// `self` extended with zero bits up to `len`.
    pub fn zero_pad(&self, len: usize) -> Result<BitString> {
        if len < self.len {
            return Err(Error::invalid("len", "zero_pad target shorter than the string"));
        }
        if len as u64 > MAX_BITS {
            return Err(Error::TooLong { len: len as u64 });
        }
        let mut out = self.clone();
        out.words.resize(len.div_ceil(WORD_BITS), 0);
        out.len = len;
        Ok(out)
    }

    /// Packed little-endian bytes, `ceil(len/8)` of them.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n_bytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(n_bytes);
        for i in 0..n_bytes {
            out.push(((self.words[i / 8] >> (8 * (i % 8))) & 0xff) as u8);
        }
        out
    }

    /// The underlying words; trailing bits past `len` are zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Sets bit `i` to one. Construction-time use only.
    pub(crate) fn set_bit_internal(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
    }

    fn mask_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
        debug_assert_eq!(self.words.len(), self.len.div_ceil(WORD_BITS));
    }

    /// Writes the string: magic, u64-LE bit count, packed payload.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(BITS_MAGIC)?;
        f.write_all(&(self.len as u64).to_le_bytes())?;
        f.write_all(&self.to_bytes())?;
        f.flush()?;
        Ok(())
    }

    /// Reads a string written by [`BitString::write_to`], bit-exact.
    pub fn read_from(path: &Path) -> Result<BitString> {
        let data = fs::read(path)?;
        let mut r = &data[..];
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| Error::corrupt(path, "file shorter than the 8-byte magic"))?;
        if &magic != BITS_MAGIC {
            return Err(Error::corrupt(path, "bad magic, not a raw bit file"));
        }
        let mut len_buf = [0u8; 8];
        r.read_exact(&mut len_buf)
            .map_err(|_| Error::corrupt(path, "truncated header, missing bit count"))?;
        let len = u64::from_le_bytes(len_buf);
        if len > MAX_BITS {
            return Err(Error::corrupt(path, format!("declared bit count {len} exceeds 2^32")));
        }
        let expected = (len as usize).div_ceil(8);
        if r.len() != expected {
            return Err(Error::corrupt(
                path,
                format!("payload holds {} bytes, header declares {} bits ({expected} bytes)", r.len(), len),
            ));
        }
        BitString::from_bytes(r, len as usize)
            .map_err(|_| Error::corrupt(path, "nonzero padding bits past the declared length"))
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "BitString({})", self)
        } else {
            write!(f, "BitString(len={}, ones={})", self.len, self.count_ones())
        }
    }
}

impl fmt::Display for BitString {
    /// Bits in positional order: bit 0 first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", self.bit(i))?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Parses "10110"-style literals, bit 0 first.
    fn from_str(s: &str) -> Result<Self> {
        let mut out = BitString { len: 0, words: Vec::new() };
        for ch in s.chars() {
            match ch {
                '0' => out.push(0),
                '1' => out.push(1),
                _ => return Err(Error::invalid("bits", format!("unexpected character {ch:?}"))),
            }
        }
        Ok(out)
    }
}

/// Inputs and outputs of one interaction round, one bit each.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub x: u8,
    pub y: u8,
    pub z: u8,
    pub a: u8,
    pub b: u8,
    pub c: u8,
}

impl RoundRecord {
    pub fn new(x: u8, y: u8, z: u8, a: u8, b: u8, c: u8) -> Self {
        debug_assert!(x <= 1 && y <= 1 && z <= 1 && a <= 1 && b <= 1 && c <= 1);
        RoundRecord { x: x & 1, y: y & 1, z: z & 1, a: a & 1, b: b & 1, c: c & 1 }
    }

    /// Packs the round as one byte, `(x,y,z,a,b,c)` from the LSB up.
    pub fn to_byte(self) -> u8 {
        self.x | self.y << 1 | self.z << 2 | self.a << 3 | self.b << 4 | self.c << 5
    }

    pub fn from_byte(byte: u8) -> Result<Self> {
        if byte >= 64 {
            return Err(Error::invalid("round byte", format!("{byte:#04x} has bits above the 6 round bits set")));
        }
        Ok(RoundRecord {
            x: byte & 1,
            y: (byte >> 1) & 1,
            z: (byte >> 2) & 1,
            a: (byte >> 3) & 1,
            b: (byte >> 4) & 1,
            c: (byte >> 5) & 1,
        })
    }
}

/// An ordered sequence of interaction rounds.
///
/// The on-disk format carries only the rounds; `run_id` and `source` describe
/// the log in memory and in certificates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundLog {
    pub rounds: Vec<RoundRecord>,
    pub run_id: String,
    pub source: String,
}

impl RoundLog {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// The 2n-bit device outcome string `a_0 b_0 a_1 b_1 ...` consumed by the
    /// two-source extractor. Outcome `c` only ever feeds the behaviour table.
    pub fn device_output_bits(&self) -> BitString {
        let mut s = BitString { len: 0, words: Vec::with_capacity(self.rounds.len() / 32 + 1) };
        for r in &self.rounds {
            s.push(r.a);
            s.push(r.b);
        }
        s
    }

    /// The 3n input bits in generation order `x_0 y_0 z_0 x_1 ...`.
    pub fn input_bits(&self) -> BitString {
        let mut s = BitString { len: 0, words: Vec::with_capacity(self.rounds.len() / 21 + 1) };
        for r in &self.rounds {
            s.push(r.x);
            s.push(r.y);
            s.push(r.z);
        }
        s
    }

    /// Writes the log: magic, u64-LE round count, one byte per round.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(LOG_MAGIC)?;
        f.write_all(&(self.rounds.len() as u64).to_le_bytes())?;
        let bytes: Vec<u8> = self.rounds.iter().map(|r| r.to_byte()).collect();
        f.write_all(&bytes)?;
        f.flush()?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<RoundLog> {
        let data = fs::read(path)?;
        let mut r = &data[..];
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| Error::corrupt(path, "file shorter than the 8-byte magic"))?;
        if &magic != LOG_MAGIC {
            return Err(Error::corrupt(path, "bad magic, not a round log"));
        }
        let mut len_buf = [0u8; 8];
        r.read_exact(&mut len_buf)
            .map_err(|_| Error::corrupt(path, "truncated header, missing round count"))?;
        let count = u64::from_le_bytes(len_buf);
        if r.len() as u64 != count {
            return Err(Error::corrupt(
                path,
                format!("payload holds {} rounds, header declares {count}", r.len()),
            ));
        }
        let mut rounds = Vec::with_capacity(count as usize);
        for (i, &b) in r.iter().enumerate() {
            rounds.push(RoundRecord::from_byte(b).map_err(|_| {
                Error::corrupt(path, format!("round {i} has bits above the 6 round bits set"))
            })?);
        }
        Ok(RoundLog { rounds, run_id: String::new(), source: String::new() })
    }
}

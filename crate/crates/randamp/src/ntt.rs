//! Exact cyclic convolution of bit strings over GF(2) in quasi-linear time,
//! via a number-theoretic transform over the prime field with
//! `q = 2^64 - 2^32 + 1`, plus the Artin-prime block-length search the
//! cyclic-shift extractor depends on.
//!
//! All arithmetic is exact integer arithmetic: convolution coefficients of two
//! 0/1 vectors of length `n <= 2^30` are bounded by `n < q`, so the transform
//! recovers the true integer convolution before the final reduction mod 2.
//! Floating-point FFTs are deliberately not used; rounding there would be an
//! attack surface, not just a numerics bug.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use crate::bitstore::BitString;
use crate::error::{Error, Result};

/// The transform modulus: `q - 1` is divisible by `2^32`, so power-of-two
/// transform lengths up to `2^32` exist.
pub const MODULUS: u64 = 0xffff_ffff_0000_0001;
/// `2^64 - q = 2^32 - 1`, the key constant of the reduction.
const EPSILON: u64 = 0xffff_ffff;
/// 7 generates the full multiplicative group mod `q`.
const GENERATOR: u64 = 7;
/// Largest supported convolution length.
pub const MAX_CONV_BITS: usize = 1 << 30;

// ---------------------------------------------------------------------------
// Field arithmetic mod q = 2^64 - 2^32 + 1
// ---------------------------------------------------------------------------

#[inline(always)]
fn add_mod(a: u64, b: u64) -> u64 {
    debug_assert!(a < MODULUS && b < MODULUS);
    let (mut s, carry) = a.overflowing_add(b);
    if carry {
        s = s.wrapping_add(EPSILON);
    } else if s >= MODULUS {
        s -= MODULUS;
    }
    s
}

#[inline(always)]
fn sub_mod(a: u64, b: u64) -> u64 {
    debug_assert!(a < MODULUS && b < MODULUS);
    let (d, borrow) = a.overflowing_sub(b);
    if borrow {
        d.wrapping_add(MODULUS)
    } else {
        d
    }
}

/// Reduces a 128-bit product using `2^64 ≡ 2^32 - 1` and `2^96 ≡ -1 (mod q)`.
#[inline(always)]
fn reduce128(x: u128) -> u64 {
    let lo = x as u64;
    let hi = (x >> 64) as u64;
    let hi_hi = hi >> 32;
    let hi_lo = hi & EPSILON;
    let (mut t, borrow) = lo.overflowing_sub(hi_hi);
    if borrow {
        t = t.wrapping_sub(EPSILON);
    }
    let mid = (hi_lo << 32).wrapping_sub(hi_lo); // hi_lo * EPSILON, fits u64
    let (mut r, carry) = t.overflowing_add(mid);
    if carry {
        r = r.wrapping_add(EPSILON);
    }
    if r >= MODULUS {
        r -= MODULUS;
    }
    r
}

#[inline(always)]
fn mul_mod(a: u64, b: u64) -> u64 {
    reduce128(a as u128 * b as u128)
}

fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    base %= MODULUS;
    while exp != 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base);
        }
        base = mul_mod(base, base);
        exp >>= 1;
    }
    acc
}

fn inv_mod(a: u64) -> u64 {
    pow_mod(a, MODULUS - 2)
}

// ---------------------------------------------------------------------------
// Primality and Artin primes
// ---------------------------------------------------------------------------

#[inline]
fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp != 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin. The witness set is exact for all `n < 2^64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

const TRIAL_DIVISION_LIMIT: u64 = 1_000_000;
const POLLARD_MAX_ITERS: u64 = 1 << 24;

fn pollard_rho(n: u64) -> Option<u64> {
    // Brent's cycle variant; n must be odd, composite, not a prime power of 2.
    for c in 1..64u64 {
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        let f = |v: u64| add_wrap(mul_mod_u64(v, v, n), c, n);
        let mut iters = 0u64;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
            iters += 1;
            if iters > POLLARD_MAX_ITERS {
                break;
            }
        }
        if d != n && d != 1 {
            return Some(d);
        }
    }
    None
}

#[inline]
fn add_wrap(a: u64, b: u64, m: u64) -> u64 {
    let s = (a as u128 + b as u128) % m as u128;
    s as u64
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Distinct prime factors via trial division up to 10^6 and Pollard rho on the
/// remainder. Fails loudly rather than ever returning a wrong factorisation.
fn distinct_prime_factors(mut n: u64) -> Result<Vec<u64>> {
    let original = n;
    let mut factors = Vec::new();
    let push = |p: u64, factors: &mut Vec<u64>| {
        if !factors.contains(&p) {
            factors.push(p);
        }
    };
    for p in 2..=TRIAL_DIVISION_LIMIT {
        if p * p > n {
            break;
        }
        if n % p == 0 {
            push(p, &mut factors);
            while n % p == 0 {
                n /= p;
            }
        }
    }
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime(m) {
            push(m, &mut factors);
            continue;
        }
        let d = pollard_rho(m).ok_or(Error::FactoringFailed { n: original })?;
        stack.push(d);
        stack.push(m / d);
    }
    factors.sort_unstable();
    Ok(factors)
}

/// A prime block length for which 2 is a primitive root: the structure the
/// cyclic-shift extractor needs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ArtinPrime(u64);

impl ArtinPrime {
    pub fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for ArtinPrime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// True iff `n` is prime and the multiplicative order of 2 mod `n` is `n - 1`,
/// checked as `2^((n-1)/p) != 1 (mod n)` for every prime factor `p` of `n-1`.
pub fn is_artin_prime(n: u64) -> Result<bool> {
    if n < 3 {
        return Err(Error::invalid("n", format!("order test needs n >= 3, got {n}")));
    }
    if !is_prime(n) {
        return Ok(false);
    }
    for p in distinct_prime_factors(n - 1)? {
        if pow_mod_u64(2, (n - 1) / p, n) == 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Width of the search window: Artin primes make up roughly 37% of all primes,
/// so a gap anywhere near this bound below 2^31 would be extraordinary.
pub const ARTIN_SEARCH_WINDOW: u64 = 1 << 22;

/// Smallest Artin prime >= `n_min`.
pub fn next_artin_prime(n_min: u64) -> Result<ArtinPrime> {
    next_artin_prime_with(n_min, None)
}

/// Smallest Artin prime >= `n_min`, consulting and extending `cache` if given.
///
/// The cache file holds previously verified Artin primes, one integer per
/// line. Entries are re-verified on load, so a stale or edited file can slow a
/// lookup down but never corrupt a result.
pub fn next_artin_prime_with(n_min: u64, cache: Option<&ArtinCache>) -> Result<ArtinPrime> {
    if !(3..=1 << 31).contains(&n_min) {
        return Err(Error::invalid("n_min", format!("need 3 <= n_min <= 2^31, got {n_min}")));
    }
    let known: BTreeSet<u64> = match cache {
        Some(c) => c.load()?,
        None => BTreeSet::new(),
    };
    let limit = n_min + ARTIN_SEARCH_WINDOW;
    let mut n = n_min;
    while n < limit {
        // 2 is a quadratic residue mod p for p ≡ ±1 (mod 8) and can then never
        // generate; only 3 or 5 mod 8 are candidates.
        let residue_ok = n == 3 || matches!(n % 8, 3 | 5);
        if residue_ok && (known.contains(&n) || is_artin_prime(n)?) {
            if let Some(c) = cache {
                if !known.contains(&n) {
                    c.append(n)?;
                }
            }
            return Ok(ArtinPrime(n));
        }
        n += 1;
    }
    Err(Error::SearchBoundExceeded { start: n_min, limit })
}

/// On-disk table of verified Artin primes, one integer per line.
#[derive(Clone, Debug)]
pub struct ArtinCache {
    path: PathBuf,
}

impl ArtinCache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        ArtinCache { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn load(&self) -> Result<BTreeSet<u64>> {
        let mut set = BTreeSet::new();
        let text = match fs::read_to_string(&self.path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(set),
            Err(e) => return Err(e.into()),
        };
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Ok(n) = line.parse::<u64>() {
                if n >= 3 && is_artin_prime(n).unwrap_or(false) {
                    set.insert(n);
                }
            }
        }
        Ok(set)
    }

    fn append(&self, n: u64) -> Result<()> {
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        let mut f = fs::OpenOptions::new().create(true).append(true).open(&self.path)?;
        writeln!(f, "{n}")?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Transform plan and convolution
// ---------------------------------------------------------------------------

/// Stages with half-size up to this bound read a dense per-stage twiddle
/// table; larger stages combine a hoisted giant-step factor with a baby-step
/// table of the same size.
const SMALL_STAGE_MAX: usize = 1 << 13;

struct Twiddles {
    /// Dense tables for small stages, laid out so that the table for a stage
    /// of half-size `m` occupies `small[m..2m]`: entry `j` is `g^(j(q-1)/2m)`.
    small: Vec<u64>,
    /// Baby steps `w^e` for `e < SMALL_STAGE_MAX` (only built for large plans).
    lo: Vec<u64>,
    /// Giant steps `w^(SMALL_STAGE_MAX * k)`.
    hi: Vec<u64>,
}

impl Twiddles {
    fn build(root: u64, log_n: u32) -> Twiddles {
        let half = if log_n == 0 { 0 } else { 1usize << (log_n - 1) };
        let small_top = half.min(SMALL_STAGE_MAX);
        let mut small = vec![0u64; 2 * small_top.max(1)];
        let mut m = 1usize;
        while m <= small_top {
            // order-2m root for this stage
            let psi = pow_mod(root, (half / m) as u64);
            let mut acc = 1u64;
            for j in 0..m {
                small[m + j] = acc;
                acc = mul_mod(acc, psi);
            }
            m *= 2;
        }
        let (lo, hi) = if half > SMALL_STAGE_MAX {
            let mut lo = Vec::with_capacity(SMALL_STAGE_MAX);
            let mut acc = 1u64;
            for _ in 0..SMALL_STAGE_MAX {
                lo.push(acc);
                acc = mul_mod(acc, root);
            }
            let giant = pow_mod(root, SMALL_STAGE_MAX as u64);
            let mut hi = Vec::with_capacity(half / SMALL_STAGE_MAX);
            let mut acc = 1u64;
            for _ in 0..half / SMALL_STAGE_MAX {
                hi.push(acc);
                acc = mul_mod(acc, giant);
            }
            (lo, hi)
        } else {
            (Vec::new(), Vec::new())
        };
        Twiddles { small, lo, hi }
    }
}

/// A power-of-two transform plan: the root tables for one length.
pub struct NttPlan {
    n: usize,
    n_inv: u64,
    fwd: Twiddles,
    inv: Twiddles,
}

impl NttPlan {
    /// Plan for transform length `2^log_n`.
    pub fn new(log_n: u32) -> Result<NttPlan> {
        if log_n > 32 {
            return Err(Error::PlanUnavailable {
                n: 1u64.checked_shl(log_n).unwrap_or(u64::MAX),
                reason: "q - 1 is divisible by 2^32 only".into(),
            });
        }
        let n = 1usize << log_n;
        let root = pow_mod(GENERATOR, (MODULUS - 1) >> log_n);
        // Plan validity: root must have exact order n.
        assert_eq!(pow_mod(root, n as u64), 1, "root^N != 1");
        if log_n > 0 {
            assert_eq!(pow_mod(root, (n / 2) as u64), MODULUS - 1, "root^(N/2) != q-1");
        }
        let root_inv = inv_mod(root);
        Ok(NttPlan {
            n,
            n_inv: inv_mod(n as u64),
            fwd: Twiddles::build(root, log_n),
            inv: Twiddles::build(root_inv, log_n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// One Gentleman-Sande stage over the whole array.
    #[inline]
    fn gs_stage(&self, a: &mut [u64], m: usize) {
        if m == 1 {
            // the only twiddle of the last stage is 1
            for pair in a.chunks_exact_mut(2) {
                let u = pair[0];
                let v = pair[1];
                pair[0] = add_mod(u, v);
                pair[1] = sub_mod(u, v);
            }
        } else if m <= SMALL_STAGE_MAX {
            let table = &self.fwd.small[m..2 * m];
            for block in a.chunks_exact_mut(2 * m) {
                let (lo_half, hi_half) = block.split_at_mut(m);
                for ((u, v), &w) in lo_half.iter_mut().zip(hi_half.iter_mut()).zip(table) {
                    let sum = add_mod(*u, *v);
                    let diff = sub_mod(*u, *v);
                    *u = sum;
                    *v = mul_mod(diff, w);
                }
            }
        } else {
            // twiddle exponent e = j*step spans a giant-step window every
            // SMALL_STAGE_MAX values; hoist the window factor
            let step = self.n / (2 * m);
            let lo = &self.fwd.lo[..SMALL_STAGE_MAX];
            if step < SMALL_STAGE_MAX {
                let window = SMALL_STAGE_MAX / step;
                for block in a.chunks_exact_mut(2 * m) {
                    let (lo_half, hi_half) = block.split_at_mut(m);
                    for (widx, (lo_chunk, hi_chunk)) in lo_half
                        .chunks_exact_mut(window)
                        .zip(hi_half.chunks_exact_mut(window))
                        .enumerate()
                    {
                        let giant = self.fwd.hi[widx];
                        let mut e = 0usize;
                        for (u, v) in lo_chunk.iter_mut().zip(hi_chunk.iter_mut()) {
                            let w = mul_mod(giant, lo[e]);
                            e += step;
                            let sum = add_mod(*u, *v);
                            let diff = sub_mod(*u, *v);
                            *u = sum;
                            *v = mul_mod(diff, w);
                        }
                    }
                }
            } else {
                for block in a.chunks_exact_mut(2 * m) {
                    let (lo_half, hi_half) = block.split_at_mut(m);
                    for (j, (u, v)) in lo_half.iter_mut().zip(hi_half.iter_mut()).enumerate() {
                        let e = j * step;
                        let w = mul_mod(self.fwd.hi[e >> 13], lo[e & (SMALL_STAGE_MAX - 1)]);
                        let sum = add_mod(*u, *v);
                        let diff = sub_mod(*u, *v);
                        *u = sum;
                        *v = mul_mod(diff, w);
                    }
                }
            }
        }
    }

    /// One Cooley-Tukey stage over the whole array.
    #[inline]
    fn ct_stage(&self, a: &mut [u64], m: usize) {
        if m == 1 {
            // the only twiddle of the first stage is 1
            for pair in a.chunks_exact_mut(2) {
                let u = pair[0];
                let v = pair[1];
                pair[0] = add_mod(u, v);
                pair[1] = sub_mod(u, v);
            }
        } else if m <= SMALL_STAGE_MAX {
            let table = &self.inv.small[m..2 * m];
            for block in a.chunks_exact_mut(2 * m) {
                let (lo_half, hi_half) = block.split_at_mut(m);
                for ((u, v), &w) in lo_half.iter_mut().zip(hi_half.iter_mut()).zip(table) {
                    let t = mul_mod(*v, w);
                    let sum = add_mod(*u, t);
                    let diff = sub_mod(*u, t);
                    *u = sum;
                    *v = diff;
                }
            }
        } else {
            let step = self.n / (2 * m);
            let lo = &self.inv.lo[..SMALL_STAGE_MAX];
            if step < SMALL_STAGE_MAX {
                let window = SMALL_STAGE_MAX / step;
                for block in a.chunks_exact_mut(2 * m) {
                    let (lo_half, hi_half) = block.split_at_mut(m);
                    for (widx, (lo_chunk, hi_chunk)) in lo_half
                        .chunks_exact_mut(window)
                        .zip(hi_half.chunks_exact_mut(window))
                        .enumerate()
                    {
                        let giant = self.inv.hi[widx];
                        let mut e = 0usize;
                        for (u, v) in lo_chunk.iter_mut().zip(hi_chunk.iter_mut()) {
                            let w = mul_mod(giant, lo[e]);
                            e += step;
                            let t = mul_mod(*v, w);
                            let sum = add_mod(*u, t);
                            let diff = sub_mod(*u, t);
                            *u = sum;
                            *v = diff;
                        }
                    }
                }
            } else {
                for block in a.chunks_exact_mut(2 * m) {
                    let (lo_half, hi_half) = block.split_at_mut(m);
                    for (j, (u, v)) in lo_half.iter_mut().zip(hi_half.iter_mut()).enumerate() {
                        let e = j * step;
                        let w = mul_mod(self.inv.hi[e >> 13], lo[e & (SMALL_STAGE_MAX - 1)]);
                        let t = mul_mod(*v, w);
                        let sum = add_mod(*u, t);
                        let diff = sub_mod(*u, t);
                        *u = sum;
                        *v = diff;
                    }
                }
            }
        }
    }

    /// Forward transform, Gentleman-Sande butterflies: natural order in,
    /// bit-reversed order out.
    pub fn forward(&self, a: &mut [u64]) {
        assert_eq!(a.len(), self.n);
        let mut m = self.n / 2;
        while m >= 1 {
            self.gs_stage(a, m);
            m /= 2;
        }
    }

    /// Forward transform of an array whose upper half is known to be zero,
    /// as produced by zero padding. The first stage then degenerates to
    /// `hi[j] = lo[j] * w^j` with the lower half unchanged.
    pub(crate) fn forward_zero_upper(&self, a: &mut [u64]) {
        assert_eq!(a.len(), self.n);
        let mut m = self.n / 2;
        if m >= 1 {
            debug_assert!(a[m..].iter().all(|&v| v == 0));
            let (lo_half, hi_half) = a.split_at_mut(m);
            if m <= SMALL_STAGE_MAX {
                let table = &self.fwd.small[m..2 * m];
                for ((u, v), &w) in lo_half.iter().zip(hi_half.iter_mut()).zip(table) {
                    *v = mul_mod(*u, w);
                }
            } else {
                let step = 1;
                let window = SMALL_STAGE_MAX / step;
                let lo = &self.fwd.lo[..SMALL_STAGE_MAX];
                for (widx, (lo_chunk, hi_chunk)) in
                    lo_half.chunks_exact(window).zip(hi_half.chunks_exact_mut(window)).enumerate()
                {
                    let giant = self.fwd.hi[widx];
                    for ((u, v), &base) in lo_chunk.iter().zip(hi_chunk.iter_mut()).zip(lo) {
                        *v = mul_mod(*u, mul_mod(giant, base));
                    }
                }
            }
            m /= 2;
        }
        while m >= 1 {
            self.gs_stage(a, m);
            m /= 2;
        }
    }

    /// Inverse transform, Cooley-Tukey butterflies: bit-reversed order in,
    /// natural order out, scaled by `n^-1`.
    pub fn inverse(&self, a: &mut [u64]) {
        assert_eq!(a.len(), self.n);
        let mut m = 1;
        while m < self.n {
            self.ct_stage(a, m);
            m *= 2;
        }
        for v in a.iter_mut() {
            *v = mul_mod(*v, self.n_inv);
        }
    }
}

/// Plans are immutable and shareable; repeated convolutions at one block
/// length (extractor runs, test sweeps) reuse the same root tables. Large
/// plans are not retained: their tables are cheap relative to the transform
/// but their cache entry would pin hundreds of kilobytes per length.
fn cached_plan(log_n: u32) -> Result<Arc<NttPlan>> {
    const CACHE_MAX_LOG_N: u32 = 20;
    if log_n > CACHE_MAX_LOG_N {
        return Ok(Arc::new(NttPlan::new(log_n)?));
    }
    static PLANS: OnceLock<Mutex<BTreeMap<u32, Arc<NttPlan>>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(BTreeMap::new()));
    let mut guard = cache.lock().expect("plan cache poisoned");
    if let Some(plan) = guard.get(&log_n) {
        return Ok(Arc::clone(plan));
    }
    let plan = Arc::new(NttPlan::new(log_n)?);
    guard.insert(log_n, Arc::clone(&plan));
    Ok(plan)
}

fn unpack_bits(s: &BitString, n: usize) -> Vec<u64> {
    let mut out = vec![0u64; n];
    for (wi, &w) in s.words().iter().enumerate() {
        let mut word = w;
        while word != 0 {
            let b = word.trailing_zeros() as usize;
            out[wi * 64 + b] = 1;
            word &= word - 1;
        }
    }
    out
}

/// Exact cyclic convolution of two equal-length bit strings over GF(2):
/// `c_k = sum_i a_i * b_{(k-i) mod n} (mod 2)`.
///
/// The prime-length cyclic convolution is computed as a zero-padded linear
/// convolution under a power-of-two transform of length >= 2n-1, after which
/// indices are folded mod n. Identical to the naive quadratic definition,
/// bit for bit.
pub fn cyclic_convolve_gf2(a: &BitString, b: &BitString) -> Result<BitString> {
    let n = a.len();
    if n != b.len() {
        return Err(Error::LengthMismatch { left: n as u64, right: b.len() as u64 });
    }
    if n == 0 {
        return BitString::zeros(0);
    }
    if n > MAX_CONV_BITS {
        return Err(Error::PlanUnavailable {
            n: n as u64,
            reason: format!("convolution coefficients up to n must stay below q; n <= {MAX_CONV_BITS}"),
        });
    }
    let linear_len = 2 * n - 1;
    let log_n = (linear_len.max(1) as u64).next_power_of_two().trailing_zeros();
    let plan = cached_plan(log_n)?;
    let size = plan.len();

    // padding puts all nonzero input in the lower half of the transform array
    let mut fa = unpack_bits(a, size);
    let mut fb = unpack_bits(b, size);
    plan.forward_zero_upper(&mut fa);
    plan.forward_zero_upper(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = mul_mod(*x, *y);
    }
    drop(fb);
    plan.inverse(&mut fa);

    // fa now holds the exact integer linear convolution (values <= n < q);
    // fold c_k <- l_k + l_{k+n} and keep parity only.
    let mut out = BitString::zeros(n)?;
    for k in 0..n {
        let mut parity = fa[k] & 1;
        if k + n < linear_len {
            parity ^= fa[k + n] & 1;
        }
        if parity == 1 {
            out.set_bit_internal(k);
        }
    }
    Ok(out)
}

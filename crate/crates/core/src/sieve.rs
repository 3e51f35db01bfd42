//! Segmented sieve of Eratosthenes: bit-packed primality tables, exact
//! prime counting and exact prime-pair counting.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Entries per sieve segment. 2^20 bits keeps the working set inside L2.
pub const DEFAULT_SEGMENT: usize = 1 << 20;

/// Resource guard: widest range (in entries) any single call may sieve.
pub const MAX_SIEVE_SPAN: u64 = 1 << 34;

const WORD_BITS: usize = 64;

/// Bit-packed primality table for `[lo, hi)`: bit `i` is set iff `lo + i`
/// is prime. Immutable once built, so it can be shared across threads.
#[derive(Debug, Clone)]
pub struct PrimeSieve {
    lo: u64,
    hi: u64,
    words: Vec<u64>,
}

impl PrimeSieve {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    /// Primality of `n`, which must lie in `[lo, hi)`.
    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        debug_assert!(n >= self.lo && n < self.hi, "{n} outside [{}, {})", self.lo, self.hi);
        let i = (n - self.lo) as usize;
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    /// Number of primes in `[lo, hi)`.
    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Ascending iterator over the primes in `[lo, hi)`.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        let lo = self.lo;
        self.words.iter().enumerate().flat_map(move |(wi, &word)| {
            let base = lo + (wi * WORD_BITS) as u64;
            BitIter { word, base }
        })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

struct BitIter {
    word: u64,
    base: u64,
}

impl Iterator for BitIter {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        if self.word == 0 {
            return None;
        }
        let tz = self.word.trailing_zeros();
        self.word &= self.word - 1;
        Some(self.base + tz as u64)
    }
}

/// Odd primes up to `limit` (inclusive) by a plain sieve; only ever called
/// with `limit <= sqrt(MAX_SIEVE_SPAN + ...)`, so the allocation is small.
fn base_odd_primes(limit: u64) -> Vec<u64> {
    if limit < 3 {
        return Vec::new();
    }
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    let mut p = 3usize;
    while p <= limit {
        if !composite[p] {
            primes.push(p as u64);
            let mut m = p * p;
            while m <= limit {
                composite[m] = true;
                m += 2 * p;
            }
        }
        p += 2;
    }
    primes
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r > 0 && r.checked_mul(r).map_or(true, |sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Writes primality bits for `[seg_lo, seg_lo + seg_len)` into `words`.
/// Marking touches odd candidates only; 2 is patched in afterwards.
fn fill_segment(words: &mut [u64], seg_lo: u64, seg_len: usize, base: &[u64]) {
    let pattern = if seg_lo % 2 == 0 {
        0xAAAA_AAAA_AAAA_AAAAu64
    } else {
        0x5555_5555_5555_5555u64
    };
    for w in words.iter_mut() {
        *w = pattern;
    }
    let tail = seg_len % WORD_BITS;
    if tail != 0 {
        *words.last_mut().unwrap() &= (1u64 << tail) - 1;
    }

    let seg_hi = seg_lo + seg_len as u64;
    let clear = |words: &mut [u64], n: u64| {
        let i = (n - seg_lo) as usize;
        words[i / WORD_BITS] &= !(1u64 << (i % WORD_BITS));
    };

    for &p in base {
        if p * p >= seg_hi {
            break;
        }
        // first odd multiple of p in the segment, at least p^2
        let mut m = (seg_lo + p - 1) / p * p;
        if m < p * p {
            m = p * p;
        }
        if m % 2 == 0 {
            m += p;
        }
        while m < seg_hi {
            clear(words, m);
            m += 2 * p;
        }
    }

    for n in [0u64, 1] {
        if n >= seg_lo && n < seg_hi {
            clear(words, n);
        }
    }
    if seg_lo <= 2 && 2 < seg_hi {
        let i = (2 - seg_lo) as usize;
        words[i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
    }
}

fn check_range(lo: u64, hi: u64) -> Result<u64> {
    if lo >= hi {
        return Err(Error::InvalidRange { lo, hi });
    }
    let span = hi - lo;
    if span > MAX_SIEVE_SPAN {
        return Err(Error::RangeTooLarge {
            requested: span,
            max: MAX_SIEVE_SPAN,
        });
    }
    Ok(span)
}

/// Builds the primality table for `[lo, hi)` with the default segment size.
pub fn build_sieve(lo: u64, hi: u64) -> Result<PrimeSieve> {
    build_sieve_exec(lo, hi, Execution::default())
}

pub fn build_sieve_exec(lo: u64, hi: u64, exec: Execution) -> Result<PrimeSieve> {
    build_sieve_segmented(lo, hi, DEFAULT_SEGMENT, exec)
}

/// Segmented construction with an explicit segment size (entries; rounded up
/// to a multiple of 64 so segments stay word-aligned).
pub fn build_sieve_segmented(
    lo: u64,
    hi: u64,
    segment: usize,
    exec: Execution,
) -> Result<PrimeSieve> {
    let span = check_range(lo, hi)?;
    let segment = segment.max(WORD_BITS).div_ceil(WORD_BITS) * WORD_BITS;
    let base = base_odd_primes(isqrt(hi - 1));
    let n_words = (span as usize).div_ceil(WORD_BITS);
    let mut words = vec![0u64; n_words];
    let span = span as usize;
    exec::for_each_chunk_mut(&mut words, segment / WORD_BITS, exec, |i, chunk| {
        let start = i * segment;
        let seg_len = (span - start).min(segment);
        fill_segment(chunk, lo + start as u64, seg_len, &base);
    });
    Ok(PrimeSieve { lo, hi, words })
}

/// A sieved window, used when streaming over primes without keeping the
/// whole table in memory.
pub(crate) struct SievedSegment {
    lo: u64,
    len: usize,
    words: Vec<u64>,
}

impl SievedSegment {
    pub(crate) fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        let lo = self.lo;
        self.words.iter().enumerate().flat_map(move |(wi, &word)| {
            let base = lo + (wi * WORD_BITS) as u64;
            BitIter { word, base }
        })
    }

    pub(crate) fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    #[allow(dead_code)]
    pub(crate) fn len(&self) -> usize {
        self.len
    }
}

/// Sieves `[0, limit]` in segments and folds each segment through `f`,
/// returning the per-segment values in ascending order.
pub(crate) fn fold_prime_segments<T, F>(limit: u64, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&SievedSegment) -> T + Sync + Send,
{
    let hi = limit.checked_add(1).ok_or(Error::RangeTooLarge {
        requested: limit,
        max: MAX_SIEVE_SPAN,
    })?;
    let span = check_range(0, hi)?;
    let base = base_odd_primes(isqrt(limit));
    let n_segs = exec::chunk_count(span as usize, DEFAULT_SEGMENT);
    Ok(exec::run_indexed(n_segs, exec, |i| {
        let (start, end) = exec::chunk_bounds(span as usize, DEFAULT_SEGMENT, i);
        let seg_len = end - start;
        let mut words = vec![0u64; seg_len.div_ceil(WORD_BITS)];
        fill_segment(&mut words, start as u64, seg_len, &base);
        f(&SievedSegment {
            lo: start as u64,
            len: seg_len,
            words,
        })
    }))
}

/// Exact prime count pi(x), by streaming segmented sieving.
pub fn prime_count(x: u64) -> Result<u64> {
    prime_count_exec(x, Execution::default())
}

pub fn prime_count_exec(x: u64, exec: Execution) -> Result<u64> {
    if x < 2 {
        return Ok(0);
    }
    Ok(fold_prime_segments(x, exec, SievedSegment::count)?
        .into_iter()
        .sum())
}

/// Exact count of primes p <= x such that p + d is also prime, for even
/// gaps d >= 2. Two sieve windows are read from one table over [0, x + d].
pub fn prime_pair_count(x: u64, d: u64) -> Result<u64> {
    prime_pair_count_exec(x, d, Execution::default())
}

pub fn prime_pair_count_exec(x: u64, d: u64, exec: Execution) -> Result<u64> {
    if x < 2 {
        return Err(Error::TooSmall {
            what: "prime_pair_count x",
            value: x,
            min: 2,
        });
    }
    if d < 2 || d % 2 != 0 {
        return Err(Error::EvenRequired {
            what: "prime pair gap",
            value: d,
        });
    }
    let hi = x
        .checked_add(d)
        .and_then(|v| v.checked_add(1))
        .ok_or(Error::RangeTooLarge {
            requested: u64::MAX,
            max: MAX_SIEVE_SPAN,
        })?;
    let sieve = build_sieve_exec(0, hi, exec)?;
    let len = (x - 1) as usize; // candidates 2..=x
    let chunk = 1 << 16;
    let counts = exec::run_indexed(exec::chunk_count(len, chunk), exec, |i| {
        let (start, end) = exec::chunk_bounds(len, chunk, i);
        let mut c = 0u64;
        for off in start..end {
            let p = 2 + off as u64;
            if sieve.is_prime(p) && sieve.is_prime(p + d) {
                c += 1;
            }
        }
        c
    });
    Ok(counts.into_iter().sum())
}

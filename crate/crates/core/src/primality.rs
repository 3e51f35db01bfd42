//! Primality testing for machine-width and extended-precision integers.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default Miller-Rabin round count for extended-precision inputs.
/// The residual error 4^-32 is far below every tolerance used downstream.
pub const DEFAULT_MR_ROUNDS: u32 = 32;

/// Witness set that makes the strong-probable-prime test deterministic for
/// all n < 2^64 (the published 7-base set from Sinclair / Jaeschke-style
/// searches, see <https://miller-rabin.appspot.com/>).
const WITNESSES_U64: [u64; 7] = [2, 325, 9375, 28178, 450775, 9780504, 1795265022];

/// Trial divisors used to short-circuit the witness battery.
const SMALL_PRIMES: [u64; 18] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61,
];

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// base^exp mod m with u128 intermediates; pow_mod(_, _, 1) = 0.
pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc: u64 = 1;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Strong-probable-prime check of odd n > 2 to base a.
fn sprp_u64(n: u64, a: u64) -> bool {
    let a = a % n;
    if a == 0 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    let mut x = pow_mod(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Exact primality for any n < 2^64: trial division by small primes, then
/// the deterministic 7-witness strong-probable-prime battery.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    WITNESSES_U64.iter().all(|&a| sprp_u64(n, a))
}

/// FNV-1a over the little-endian bytes of n; seeds the witness stream so
/// that repeated calls on the same input are reproducible.
fn witness_seed(n: &BigUint) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in n.to_bytes_le() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Miller-Rabin on odd n > 3 with `rounds` witnesses drawn from a stream
/// seeded by n itself.
pub(crate) fn miller_rabin_big(n: &BigUint, rounds: u32) -> bool {
    let one = BigUint::one();
    let two = &one + &one;
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().expect("n is odd and > 3");
    let d = &n_minus_1 >> s;

    let mut rng = ChaCha8Rng::seed_from_u64(witness_seed(n));
    let span = n - &two - &one; // witnesses in [2, n-2]
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_below(&span) + &two;
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

const TRIAL_PRIMES_BIG: usize = 256;

/// Probable-prime test for arbitrary-precision n.
///
/// Inputs below 2^64 are answered exactly via [`is_prime_u64`]. Larger
/// inputs are trial-divided by the first few hundred primes and then run
/// through `rounds` Miller-Rabin rounds with a deterministic witness stream
/// seeded from n, so the answer is stable across runs. A composite passes
/// with probability at most 4^-rounds.
pub fn is_probable_prime_big(n: &BigUint, rounds: u32) -> bool {
    if let Some(v) = n.to_u64() {
        return is_prime_u64(v);
    }
    for &p in crate::arith::small_primes().iter().take(TRIAL_PRIMES_BIG) {
        if (n % p).is_zero() {
            return false;
        }
    }
    miller_rabin_big(n, rounds.max(1))
}

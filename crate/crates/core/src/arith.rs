//! Multiplicative machinery: factorization, the Moebius function,
//! multiplicative orders, the singular-series kernel f(d), the twin prime
//! constant, the Mertens product and the inverse-twin-prime series.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::primality::{is_prime_u64, mul_mod, pow_mod};
use crate::sieve::fold_prime_segments;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Trial division bound used before Pollard rho takes over.
pub const TRIAL_DIVISION_LIMIT: u64 = 1_000_000;

/// Default Pollard rho effort budget (iterations per cofactor).
pub const DEFAULT_RHO_BUDGET: u64 = 10_000_000;

/// Largest bound accepted by [`inverse_c2_series`]; the segmented walk keeps
/// memory flat but the runtime is linear in the bound.
pub const MAX_SERIES_BOUND: u64 = 1 << 27;

static SMALL_PRIMES: OnceLock<Vec<u32>> = OnceLock::new();

/// Primes up to [`TRIAL_DIVISION_LIMIT`], built once.
pub(crate) fn small_primes() -> &'static [u32] {
    SMALL_PRIMES.get_or_init(|| {
        let limit = TRIAL_DIVISION_LIMIT as usize;
        let mut composite = vec![false; limit + 1];
        let mut primes = Vec::with_capacity(80_000);
        for p in 2..=limit {
            if !composite[p] {
                primes.push(p as u32);
                let mut m = p * p;
                while m <= limit {
                    composite[m] = true;
                    m += p;
                }
            }
        }
        primes
    })
}

/// Factorization of a positive integer as (prime, exponent) pairs with
/// strictly increasing primes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorMap {
    factors: Vec<(u64, u32)>,
}

impl FactorMap {
    pub(crate) fn from_pairs(mut factors: Vec<(u64, u32)>) -> Self {
        factors.sort_unstable_by_key(|&(p, _)| p);
        FactorMap { factors }
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn distinct_primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Reconstructs the factored integer.
    pub fn value(&self) -> u64 {
        self.factors
            .iter()
            .fold(1u64, |acc, &(p, e)| acc * p.pow(e))
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    /// Number of distinct prime divisors.
    pub fn omega(&self) -> usize {
        self.factors.len()
    }
}

/// Deterministic Pollard rho with Brent cycle detection. The polynomial is
/// x^2 + c with c stepped 1, 2, 3, ... on failure, so repeated runs walk the
/// same sequence. Returns a nontrivial factor of odd composite `n`.
fn rho_brent(n: u64, budget: u64) -> Result<u64> {
    debug_assert!(n > 3 && n % 2 == 1);
    #[inline]
    fn step(y: u64, c: u64, n: u64) -> u64 {
        ((mul_mod(y, y, n) as u128 + c as u128) % n as u128) as u64
    }
    let mut spent: u64 = 0;
    for c in 1..u64::MAX {
        let mut y: u64 = 2;
        let mut r: u64 = 1;
        let mut q: u64 = 1;
        let mut g: u64 = 1;
        let mut x = y;
        let mut ys = y;
        const BATCH: u64 = 128;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = step(y, c, n);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                let steps = BATCH.min(r - k);
                for _ in 0..steps {
                    y = step(y, c, n);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd_u64(q, n);
                k += steps;
                spent += steps;
                if spent > budget {
                    return Err(Error::FactorizationTimeout {
                        n: n.to_string(),
                        budget,
                    });
                }
            }
            r *= 2;
        }
        if g == n {
            // The batched gcd overshot; replay the last batch one step at a
            // time. If that still fails, move on to the next polynomial.
            g = 1;
            let mut y2 = ys;
            while g == 1 {
                y2 = step(y2, c, n);
                g = gcd_u64(x.abs_diff(y2), n);
                spent += 1;
                if spent > budget {
                    return Err(Error::FactorizationTimeout {
                        n: n.to_string(),
                        budget,
                    });
                }
                if y2 == x {
                    break;
                }
            }
        }
        if g > 1 && g < n {
            return Ok(g);
        }
    }
    unreachable!("rho parameter space exhausted")
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Complete factorization of n >= 1: trial division by the primes up to
/// 10^6, then deterministic Pollard rho on what remains.
pub fn factorize(n: u64) -> Result<FactorMap> {
    factorize_with_budget(n, DEFAULT_RHO_BUDGET)
}

pub fn factorize_with_budget(n: u64, budget: u64) -> Result<FactorMap> {
    if n == 0 {
        return Err(Error::TooSmall {
            what: "factorize n",
            value: 0,
            min: 1,
        });
    }
    let mut rem = n;
    let mut factors: Vec<(u64, u32)> = Vec::new();
    for &p in small_primes() {
        let p = p as u64;
        if p * p > rem {
            break;
        }
        if rem % p == 0 {
            let mut e = 0;
            while rem % p == 0 {
                rem /= p;
                e += 1;
            }
            factors.push((p, e));
        }
    }
    if rem > 1 {
        let mut stack = vec![rem];
        while let Some(m) = stack.pop() {
            if is_prime_u64(m) {
                push_factor(&mut factors, m, 1);
                continue;
            }
            let f = rho_brent(m, budget)?;
            stack.push(f);
            stack.push(m / f);
        }
    }
    Ok(FactorMap::from_pairs(factors))
}

fn push_factor(factors: &mut Vec<(u64, u32)>, p: u64, e: u32) {
    if let Some(entry) = factors.iter_mut().find(|(q, _)| *q == p) {
        entry.1 += e;
    } else {
        factors.push((p, e));
    }
}

/// Moebius function via factorization.
pub fn mobius(n: u64) -> Result<i8> {
    let f = factorize(n)?;
    if !f.is_squarefree() {
        return Ok(0);
    }
    Ok(if f.omega() % 2 == 0 { 1 } else { -1 })
}

/// Carmichael function lambda(m) from the factorization of m.
fn carmichael(m: u64) -> Result<u64> {
    let f = factorize(m)?;
    let mut lambda = 1u64;
    for &(p, e) in f.factors() {
        let l = if p == 2 {
            match e {
                1 => 1,
                2 => 2,
                _ => 1u64 << (e - 2),
            }
        } else {
            p.pow(e - 1) * (p - 1)
        };
        lambda = lambda.lcm(&l);
    }
    Ok(lambda)
}

/// Least t >= 1 with a^t = 1 mod m, for gcd(a, m) = 1. Computed by starting
/// from the Carmichael exponent and descending over its prime factors.
pub fn mult_order(a: u64, m: u64) -> Result<u64> {
    if m < 2 {
        return Err(Error::TooSmall {
            what: "mult_order modulus",
            value: m,
            min: 2,
        });
    }
    if gcd_u64(a, m) != 1 {
        return Err(Error::NotCoprime { a, m });
    }
    let mut order = carmichael(m)?;
    debug_assert_eq!(pow_mod(a, order, m), 1);
    for &(q, _) in factorize(order)?.factors() {
        while order % q == 0 && pow_mod(a, order / q, m) == 1 {
            order /= q;
        }
    }
    Ok(order)
}

/// f(d): the odd-prime kernel of the singular series,
/// the product of (p-1)/(p-2) over odd primes p dividing d.
pub fn f_value(d: u64) -> Result<f64> {
    let f = factorize(d)?;
    Ok(f.distinct_primes()
        .filter(|&p| p > 2)
        .map(|p| (p - 1) as f64 / (p - 2) as f64)
        .product())
}

/// Exact-rational twin of [`f_value`], used by identity checks.
pub fn f_value_exact(d: u64) -> Result<BigRational> {
    let f = factorize(d)?;
    let mut acc = BigRational::one();
    for p in f.distinct_primes().filter(|&p| p > 2) {
        acc *= BigRational::new(BigInt::from(p - 1), BigInt::from(p - 2));
    }
    Ok(acc)
}

/// g: the multiplicative function on odd square-free integers with
/// g(p) = 1/(p-2), evaluated exactly from a list of distinct odd primes.
pub(crate) fn g_exact(primes: &[u64]) -> BigRational {
    let mut acc = BigRational::one();
    for &p in primes {
        debug_assert!(p > 2);
        acc *= BigRational::new(BigInt::one(), BigInt::from(p - 2));
    }
    acc
}

/// A computed constant with a rigorous enclosing interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub truncation: String,
}

/// Singular series for an even gap d: 2 * C2 * f(d).
pub fn singular_series(d: u64, c2: &ConstantEstimate) -> Result<f64> {
    if d < 2 || d % 2 != 0 {
        return Err(Error::EvenRequired {
            what: "singular series gap",
            value: d,
        });
    }
    Ok(2.0 * c2.value * f_value(d)?)
}

/// Twin prime constant C2 as the partial product over odd primes p <= cutoff
/// of (1 - 1/(p-1)^2), with the rigorous tail interval
/// 0 < -log(tail) < sum_{n > cutoff} 1/(n-1)^2 < 1/(cutoff-1).
pub fn twin_prime_constant(cutoff: u64) -> Result<ConstantEstimate> {
    twin_prime_constant_exec(cutoff, Execution::default())
}

pub fn twin_prime_constant_exec(cutoff: u64, exec: Execution) -> Result<ConstantEstimate> {
    if cutoff < 3 {
        return Err(Error::TooSmall {
            what: "twin prime cutoff",
            value: cutoff,
            min: 3,
        });
    }
    let partials = fold_prime_segments(cutoff, exec, |seg| {
        let mut prod = 1.0f64;
        for p in seg.primes().filter(|&p| p > 2) {
            let q = (p - 1) as f64;
            prod *= 1.0 - 1.0 / (q * q);
        }
        prod
    })?;
    let value: f64 = partials.into_iter().product();
    let lower = value * (-1.0 / (cutoff - 1) as f64).exp();
    Ok(ConstantEstimate {
        value,
        lower,
        upper: value,
        truncation: format!(
            "product over odd primes <= {cutoff}; omitted tail factor is in (exp(-1/{}), 1)",
            cutoff - 1
        ),
    })
}

static DEFAULT_C2: OnceLock<ConstantEstimate> = OnceLock::new();

/// Shared C2 estimate at cutoff 10^7 (absolute error below 7e-8), enough for
/// every tolerance used by the reports in this crate.
pub fn default_twin_prime_constant() -> &'static ConstantEstimate {
    DEFAULT_C2.get_or_init(|| {
        twin_prime_constant(10_000_000).expect("cutoff within resource guard")
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MertensReport {
    pub x: u64,
    /// Partial product of (1 - 1/p)^-1 over odd primes p <= x.
    pub product: f64,
    /// (e^gamma / 2) * ln x.
    pub companion: f64,
    pub ratio: f64,
}

/// Mertens product over odd primes up to x, with its asymptotic companion.
pub fn mertens_product(x: u64) -> Result<MertensReport> {
    mertens_product_exec(x, Execution::default())
}

pub fn mertens_product_exec(x: u64, exec: Execution) -> Result<MertensReport> {
    if x < 3 {
        return Err(Error::TooSmall {
            what: "mertens bound",
            value: x,
            min: 3,
        });
    }
    let partials = fold_prime_segments(x, exec, |seg| {
        let mut prod = 1.0f64;
        for p in seg.primes().filter(|&p| p > 2) {
            prod *= 1.0 / (1.0 - 1.0 / p as f64);
        }
        prod
    })?;
    let product: f64 = partials.into_iter().product();
    let companion = EULER_GAMMA.exp() / 2.0 * (x as f64).ln();
    Ok(MertensReport {
        x,
        product,
        companion,
        ratio: product / companion,
    })
}

/// Partial sum of g(eta)/eta over odd square-free eta <= bound. The series
/// converges upward to 1/C2.
pub fn inverse_c2_series(bound: u64) -> Result<f64> {
    inverse_c2_series_exec(bound, Execution::default())
}

pub fn inverse_c2_series_exec(bound: u64, exec: Execution) -> Result<f64> {
    if bound < 1 {
        return Err(Error::TooSmall {
            what: "series bound",
            value: bound,
            min: 1,
        });
    }
    if bound > MAX_SERIES_BOUND {
        return Err(Error::RangeTooLarge {
            requested: bound,
            max: MAX_SERIES_BOUND,
        });
    }
    // Chunked walk over odd eta: factor each chunk by sieving the primes up
    // to sqrt(bound) through it, then finish with the surviving cofactor.
    let root = (bound as f64).sqrt() as u64 + 1;
    let odd_count = ((bound + 1) / 2) as usize; // eta = 1, 3, 5, ...
    const CHUNK: usize = 1 << 16;
    let n_chunks = exec::chunk_count(odd_count, CHUNK);
    let partials = exec::run_indexed(n_chunks, exec, |ci| {
        let (start, end) = exec::chunk_bounds(odd_count, CHUNK, ci);
        let len = end - start;
        let lo = 1 + 2 * start as u64; // first odd eta in this chunk
        let mut rem: Vec<u64> = (0..len).map(|i| lo + 2 * i as u64).collect();
        let mut g: Vec<f64> = vec![1.0; len];
        let mut squarefree = vec![true; len];
        for &p in small_primes() {
            let p = p as u64;
            if p > root {
                break;
            }
            if p == 2 {
                continue;
            }
            // first odd multiple of p at or above lo
            let mut m = (lo + p - 1) / p * p;
            if m % 2 == 0 {
                m += p;
            }
            let hi = lo + 2 * len as u64;
            while m < hi {
                let i = ((m - lo) / 2) as usize;
                let mut e = 0;
                while rem[i] % p == 0 {
                    rem[i] /= p;
                    e += 1;
                }
                if e > 1 {
                    squarefree[i] = false;
                } else {
                    g[i] *= 1.0 / (p - 2) as f64;
                }
                m += 2 * p;
            }
        }
        let mut sum = 0.0f64;
        for i in 0..len {
            if !squarefree[i] {
                continue;
            }
            let eta = lo + 2 * i as u64;
            let mut gi = g[i];
            if rem[i] > 1 {
                gi *= 1.0 / (rem[i] - 2) as f64;
            }
            sum += gi / eta as f64;
        }
        sum
    });
    Ok(partials.into_iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn factorize_small_cases() {
        assert!(factorize(1).unwrap().is_empty());
        assert_eq!(factorize(2).unwrap().factors(), &[(2, 1)]);
        // d(12, 2) in the shifted-pair notation: 2^12 - 12.
        assert_eq!(factorize(4084).unwrap().factors(), &[(2, 2), (1021, 1)]);
        assert!(is_prime_u64(1021));
        assert_eq!(factorize(46).unwrap().factors(), &[(2, 1), (23, 1)]);
        assert_eq!(factorize(360).unwrap().factors(), &[(2, 3), (3, 2), (5, 1)]);
        assert!(matches!(factorize(0), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn factorize_round_trips_and_certifies() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let n: u64 = rng.gen_range(1..=1_000_000_000_000u64);
            let f = factorize(n).unwrap();
            assert_eq!(f.value(), n, "n = {n}");
            for &(p, _) in f.factors() {
                assert!(is_prime_u64(p), "factor {p} of {n}");
            }
        }
    }

    #[test]
    fn factorize_uses_rho_beyond_trial_division() {
        // Semiprime with both factors above the trial-division bound.
        let n = 1_000_003u64 * 1_000_033;
        let f = factorize(n).unwrap();
        assert_eq!(f.factors(), &[(1_000_003, 1), (1_000_033, 1)]);
        // Mersenne-style stress value: 2^59 - 1 = 179951 * 3203431780337.
        let f = factorize((1u64 << 59) - 1).unwrap();
        assert_eq!(f.factors(), &[(179_951, 1), (3_203_431_780_337, 1)]);
    }

    #[test]
    fn factorize_budget_is_enforced() {
        let n = 1_000_003u64 * 1_000_033;
        match factorize_with_budget(n, 1) {
            Err(Error::FactorizationTimeout { budget: 1, .. }) => {}
            other => panic!("expected timeout, got {other:?}"),
        }
    }

    #[test]
    fn mobius_values() {
        assert_eq!(mobius(1).unwrap(), 1);
        assert_eq!(mobius(15).unwrap(), 1);
        assert_eq!(mobius(12).unwrap(), 0);
        assert_eq!(mobius(30).unwrap(), -1);
    }

    #[test]
    fn mult_order_examples() {
        assert_eq!(mult_order(2, 7).unwrap(), 3);
        assert_eq!(mult_order(4, 7).unwrap(), 3);
        assert_eq!(mult_order(4, 3).unwrap(), 1);
        assert_eq!(mult_order(2, 13).unwrap(), 12);
        assert!(matches!(mult_order(6, 9), Err(Error::NotCoprime { .. })));
    }

    #[test]
    fn mult_order_matches_brute_force() {
        let brute = |a: u64, m: u64| -> u64 {
            let mut t = 1;
            let mut x = a % m;
            while x != 1 {
                x = x * a % m;
                t += 1;
            }
            t
        };
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..300 {
            let m: u64 = rng.gen_range(3..5_000);
            let a: u64 = rng.gen_range(2..m);
            if gcd_u64(a, m) != 1 {
                continue;
            }
            let ord = mult_order(a, m).unwrap();
            assert_eq!(ord, brute(a, m), "a = {a}, m = {m}");
            assert_eq!(pow_mod(a, ord, m), 1);
            for &(q, _) in factorize(ord).unwrap().factors() {
                assert_ne!(pow_mod(a, ord / q, m), 1, "a = {a}, m = {m}, q = {q}");
            }
            assert_eq!(carmichael(m).unwrap() % ord, 0);
        }
    }

    #[test]
    fn f_value_examples() {
        assert_eq!(f_value(1).unwrap(), 1.0);
        assert_eq!(f_value(4).unwrap(), 1.0);
        assert!((f_value(15).unwrap() - 8.0 / 3.0).abs() < 1e-15);
        assert!((f_value(46).unwrap() - 22.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn f_is_multiplicative_and_kernel_invariant() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..200 {
            let a: u64 = rng.gen_range(1..1_000_000);
            let b: u64 = rng.gen_range(1..1_000_000);
            if gcd_u64(a, b) != 1 {
                continue;
            }
            let fa = f_value_exact(a).unwrap();
            let fb = f_value_exact(b).unwrap();
            assert_eq!(f_value_exact(a * b).unwrap(), fa * fb, "a = {a}, b = {b}");
        }
        for d in [3u64, 6, 15, 46, 1021] {
            let f = f_value_exact(d).unwrap();
            assert_eq!(f_value_exact(d * 2).unwrap(), f);
            assert_eq!(f_value_exact(d * 4).unwrap(), f);
            assert_eq!(f_value_exact(d * d).unwrap(), f);
        }
    }

    #[test]
    fn singular_series_examples() {
        let c2 = twin_prime_constant(1_000_000).unwrap();
        let s2 = singular_series(2, &c2).unwrap();
        assert!((s2 - 1.320324).abs() < 1e-4, "S(2) = {s2}");
        let s6 = singular_series(6, &c2).unwrap();
        assert!((s6 - 2.0 * s2).abs() < 1e-12);
        assert_eq!(singular_series(4, &c2).unwrap(), s2);
        assert!(matches!(
            singular_series(3, &c2),
            Err(Error::EvenRequired { .. })
        ));
    }

    #[test]
    fn twin_prime_constant_small_cutoffs() {
        let e = twin_prime_constant(3).unwrap();
        assert_eq!(e.value, 0.75);
        assert_eq!(e.upper, 0.75);
        assert!((e.lower - 0.75 * (-0.5f64).exp()).abs() < 1e-15);
        assert!(e.lower <= e.value && e.value <= e.upper);
    }

    #[test]
    fn twin_prime_constant_converges() {
        // Reference digits for C2.
        const C2_REF: f64 = 0.660_161_815_846_869_6;
        let e = twin_prime_constant(1_000_000).unwrap();
        assert!(e.upper - e.lower < 1e-5);
        assert!(e.lower <= C2_REF && C2_REF <= e.upper);
        let seq = twin_prime_constant_exec(1_000_000, Execution::Sequential).unwrap();
        assert_eq!(e.value, seq.value);
    }

    #[test]
    fn mertens_product_values() {
        let r = mertens_product(3).unwrap();
        assert!((r.product - 1.5).abs() < 1e-12);
        let r = mertens_product(5).unwrap();
        assert!((r.product - 1.875).abs() < 1e-12);
        let r = mertens_product(1_000_000).unwrap();
        assert!(r.ratio > 0.99 && r.ratio < 1.01, "ratio = {}", r.ratio);
    }

    #[test]
    fn inverse_c2_series_values() {
        assert_eq!(inverse_c2_series(1).unwrap(), 1.0);
        let b3 = inverse_c2_series(3).unwrap();
        assert!((b3 - 4.0 / 3.0).abs() < 1e-15);
        // Brute force over small eta as an independent check.
        let mut brute = 0.0;
        for eta in (1u64..=1001).step_by(2) {
            let f = factorize(eta).unwrap();
            if !f.is_squarefree() {
                continue;
            }
            let g: f64 = f
                .distinct_primes()
                .map(|p| 1.0 / (p - 2) as f64)
                .product();
            brute += g / eta as f64;
        }
        let series = inverse_c2_series(1001).unwrap();
        assert!((series - brute).abs() < 1e-12, "{series} vs {brute}");
        // Monotone nondecreasing in the bound.
        let mut prev = 0.0;
        for b in [1u64, 3, 10, 100, 1000, 10_000] {
            let v = inverse_c2_series(b).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn inverse_c2_series_approaches_reference() {
        const INV_C2_REF: f64 = 1.514_780_128_137_491;
        let v = inverse_c2_series(1_000_000).unwrap();
        assert!((v - INV_C2_REF).abs() < 1e-3, "v = {v}");
        assert!(v <= INV_C2_REF);
        let seq = inverse_c2_series_exec(1_000_000, Execution::Sequential).unwrap();
        assert_eq!(v, seq);
    }
}

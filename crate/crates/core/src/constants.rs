//! Romanov-type constant with rigorous truncation, the factor table for
//! 2^k - 1, and the explicit constant chains that turn a bound on the
//! singular-series average into a density bound.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::{Arc, RwLock};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{self, factorize_with_budget, ConstantEstimate, DEFAULT_RHO_BUDGET, EULER_GAMMA};
use crate::error::{Error, Result};
use crate::primality::{is_probable_prime_big, pow_mod, DEFAULT_MR_ROUNDS};

/// Largest exponent the factor table accepts by default. Exponents well
/// beyond the reach of trial division plus rho must come from an imported
/// table; everything is re-verified either way.
pub const DEFAULT_MAX_EXPONENT: u32 = 240;

/// Tail-sum coefficient: the series over odd square-free beta with
/// ord_beta(2) > M is bounded by 2.7961 * ln(M)/M.
pub const TAIL_COEFFICIENT: f64 = 2.7961;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorSource {
    Computed,
    Loaded,
}

/// Verified factorization of 2^k - 1.
#[derive(Debug, Clone)]
pub struct MersenneEntry {
    pub exponent: u32,
    /// (prime, multiplicity) with strictly increasing primes.
    pub factors: Vec<(BigUint, u32)>,
    pub source: FactorSource,
}

impl MersenneEntry {
    pub fn distinct_primes(&self) -> impl Iterator<Item = &BigUint> {
        self.factors.iter().map(|(p, _)| p)
    }

    pub fn product(&self) -> BigUint {
        let mut acc = BigUint::one();
        for (p, e) in &self.factors {
            acc *= p.pow(*e);
        }
        acc
    }
}

fn mersenne_number(k: u32) -> BigUint {
    (BigUint::one() << k) - BigUint::one()
}

/// Cache of factorizations of 2^k - 1, fed by computation or by an imported
/// table file. Concurrent readers share entries; writes are serialized.
pub struct FactorTableCache {
    max_exponent: u32,
    entries: RwLock<BTreeMap<u32, Arc<MersenneEntry>>>,
}

impl Default for FactorTableCache {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_EXPONENT)
    }
}

impl FactorTableCache {
    pub fn new(max_exponent: u32) -> Self {
        FactorTableCache {
            max_exponent,
            entries: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exponents(&self) -> Vec<u32> {
        self.entries.read().unwrap().keys().copied().collect()
    }

    fn check_exponent(&self, k: u32) -> Result<()> {
        if k < 1 {
            return Err(Error::TooSmall {
                what: "mersenne exponent",
                value: k as u64,
                min: 1,
            });
        }
        if k > self.max_exponent {
            return Err(Error::ExponentTooLarge {
                k,
                max: self.max_exponent,
            });
        }
        Ok(())
    }

    /// Returns the cached factorization of 2^k - 1, computing it by the
    /// cyclotomic split if absent.
    pub fn get_or_compute(&self, k: u32) -> Result<Arc<MersenneEntry>> {
        self.check_exponent(k)?;
        if let Some(hit) = self.entries.read().unwrap().get(&k) {
            return Ok(Arc::clone(hit));
        }
        let factors = compute_mersenne_factors(k, DEFAULT_RHO_BUDGET)?;
        let entry = Arc::new(MersenneEntry {
            exponent: k,
            factors,
            source: FactorSource::Computed,
        });
        self.entries
            .write()
            .unwrap()
            .insert(k, Arc::clone(&entry));
        Ok(entry)
    }

    /// Inserts an externally supplied factorization after re-verifying it:
    /// the product must equal 2^k - 1 exactly and every factor must pass
    /// primality testing.
    pub fn insert_loaded(&self, k: u32, raw: Vec<(BigUint, u32)>) -> Result<()> {
        self.check_exponent(k)?;
        let mut map: BTreeMap<BigUint, u32> = BTreeMap::new();
        for (p, e) in raw {
            if e == 0 {
                return Err(Error::Domain(format!(
                    "zero exponent on factor {p} of 2^{k}-1"
                )));
            }
            *map.entry(p).or_insert(0) += e;
        }
        let factors: Vec<(BigUint, u32)> = map.into_iter().collect();
        let mut product = BigUint::one();
        for (p, e) in &factors {
            if !is_probable_prime_big(p, DEFAULT_MR_ROUNDS) {
                return Err(Error::Domain(format!(
                    "factor {p} of 2^{k}-1 is not prime"
                )));
            }
            product *= p.pow(*e);
        }
        if product != mersenne_number(k) {
            return Err(Error::Domain(format!(
                "factor product mismatch for 2^{k}-1"
            )));
        }
        self.entries.write().unwrap().insert(
            k,
            Arc::new(MersenneEntry {
                exponent: k,
                factors,
                source: FactorSource::Loaded,
            }),
        );
        Ok(())
    }

    /// Loads a factor table in the line format `k: p1^e1 p2^e2 ...`.
    /// `#` starts a comment; blank lines are skipped. Every line is
    /// validated before it is accepted. Returns the number of entries read.
    pub fn load_reader(&self, reader: impl BufRead) -> Result<usize> {
        let mut added = 0usize;
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let text = line.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let (k_part, rest) = text.split_once(':').ok_or_else(|| Error::FactorTable {
                line: lineno,
                reason: "missing `k:` prefix".into(),
            })?;
            let k: u32 = k_part.trim().parse().map_err(|_| Error::FactorTable {
                line: lineno,
                reason: format!("bad exponent `{}`", k_part.trim()),
            })?;
            let mut factors = Vec::new();
            for token in rest.split_whitespace() {
                let (p_str, e_str) = match token.split_once('^') {
                    Some((p, e)) => (p, e),
                    None => (token, "1"),
                };
                let p = p_str.parse::<BigUint>().map_err(|_| Error::FactorTable {
                    line: lineno,
                    reason: format!("bad factor `{token}`"),
                })?;
                let e: u32 = e_str.parse().map_err(|_| Error::FactorTable {
                    line: lineno,
                    reason: format!("bad exponent in `{token}`"),
                })?;
                factors.push((p, e));
            }
            if factors.is_empty() && k != 1 {
                return Err(Error::FactorTable {
                    line: lineno,
                    reason: "no factors listed".into(),
                });
            }
            self.insert_loaded(k, factors)
                .map_err(|e| Error::FactorTable {
                    line: lineno,
                    reason: e.to_string(),
                })?;
            added += 1;
        }
        Ok(added)
    }

    pub fn load_path(&self, path: &Path) -> Result<usize> {
        let file = std::fs::File::open(path)?;
        self.load_reader(std::io::BufReader::new(file))
    }

    /// Writes every cached entry back out in the table format.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "# factor table for 2^k - 1, one exponent per line")?;
        let entries = self.entries.read().unwrap();
        for (k, entry) in entries.iter() {
            let parts: Vec<String> = entry
                .factors
                .iter()
                .map(|(p, e)| {
                    if *e == 1 {
                        p.to_string()
                    } else {
                        format!("{p}^{e}")
                    }
                })
                .collect();
            writeln!(w, "{k}: {}", parts.join(" "))?;
        }
        Ok(())
    }

    pub fn save_path(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        self.write_to(&mut file)
    }
}

/// Factorization of 2^k - 1 through the cache.
pub fn mersenne_factorization(k: u32, cache: &FactorTableCache) -> Result<Arc<MersenneEntry>> {
    cache.get_or_compute(k)
}

/// The cyclotomic parts of 2^k - 1 in ascending order of the divisor j of k:
/// part(j) = Phi_j(2), obtained by exact division of 2^j - 1 by the parts of
/// the proper divisors of j.
fn cyclotomic_parts(k: u32) -> Vec<(u32, BigUint)> {
    let mut parts: BTreeMap<u32, BigUint> = BTreeMap::new();
    for j in 1..=k {
        if k % j != 0 {
            continue;
        }
        let mut value = mersenne_number(j);
        for (&t, part) in parts.iter() {
            if j % t == 0 {
                value /= part;
            }
        }
        parts.insert(j, value);
    }
    parts.into_iter().collect()
}

fn compute_mersenne_factors(k: u32, budget: u64) -> Result<Vec<(BigUint, u32)>> {
    let mut combined: BTreeMap<BigUint, u32> = BTreeMap::new();
    for (_, part) in cyclotomic_parts(k) {
        if part.is_one() {
            continue;
        }
        for (p, e) in factor_part(part, budget)? {
            *combined.entry(p).or_insert(0) += e;
        }
    }
    let factors: Vec<(BigUint, u32)> = combined.into_iter().collect();
    let product = factors
        .iter()
        .fold(BigUint::one(), |acc, (p, e)| acc * p.pow(*e));
    debug_assert_eq!(product, mersenne_number(k));
    Ok(factors)
}

/// Factors one cyclotomic part: u64 parts go through trial division plus
/// rho; wider parts are stripped of small primes and must then be prime (or
/// shrink into machine width), otherwise the effort budget is declared
/// exceeded rather than returning a partial answer.
fn factor_part(part: BigUint, budget: u64) -> Result<Vec<(BigUint, u32)>> {
    if let Some(v) = part.to_u64() {
        let f = factorize_with_budget(v, budget)?;
        return Ok(f
            .factors()
            .iter()
            .map(|&(p, e)| (BigUint::from(p), e))
            .collect());
    }
    let mut out: Vec<(BigUint, u32)> = Vec::new();
    let mut rem = part;
    for &p in arith::small_primes() {
        let p = p as u64;
        if (&rem % p).is_zero() {
            let big_p = BigUint::from(p);
            let mut e = 0u32;
            while (&rem % p).is_zero() {
                rem /= p;
                e += 1;
            }
            out.push((big_p, e));
            if rem.is_one() {
                break;
            }
        }
    }
    if rem.is_one() {
        return Ok(out);
    }
    if let Some(v) = rem.to_u64() {
        let f = factorize_with_budget(v, budget)?;
        out.extend(f.factors().iter().map(|&(p, e)| (BigUint::from(p), e)));
        return Ok(out);
    }
    if is_probable_prime_big(&rem, DEFAULT_MR_ROUNDS) {
        out.push((rem, 1));
        return Ok(out);
    }
    Err(Error::FactorizationTimeout {
        n: rem.to_string(),
        budget,
    })
}

/// Multiplicative order of 2 modulo p for a prime p dividing 2^k - 1:
/// the smallest divisor t of k with 2^t = 1 mod p.
pub(crate) fn order_of_two_dividing(p: &BigUint, k: u32) -> u32 {
    for t in 1..=k {
        if k % t != 0 {
            continue;
        }
        let hit = if let Some(pv) = p.to_u64() {
            pow_mod(2, t as u64, pv) == 1
        } else {
            BigUint::from(2u32).modpow(&BigUint::from(t), p).is_one()
        };
        if hit {
            return t;
        }
    }
    unreachable!("p divides 2^k - 1, so the order divides k")
}

fn big_g_factor(p: &BigUint) -> BigRational {
    let denom = BigInt::from(p.clone()) - BigInt::from(2);
    BigRational::new(BigInt::one(), denom)
}

/// T(k) = product over distinct primes p | 2^k - 1 of (1 + 1/(p - 2)),
/// evaluated exactly. Equals the sum of g over square-free divisors.
pub(crate) fn t_value_exact(k: u32, cache: &FactorTableCache) -> Result<BigRational> {
    let entry = cache.get_or_compute(k)?;
    let mut acc = BigRational::one();
    for p in entry.distinct_primes() {
        acc *= BigRational::one() + big_g_factor(p);
    }
    Ok(acc)
}

/// T(k) as binary64.
pub fn t_value(k: u32, cache: &FactorTableCache) -> Result<f64> {
    Ok(t_value_exact(k, cache)?.to_f64().unwrap_or(f64::NAN))
}

fn mobius_u32(n: u32) -> i8 {
    arith::mobius(n as u64).expect("small argument factors instantly")
}

/// W(k): the contribution of order exactly k, by Moebius inversion over the
/// divisors of k: W(k) = sum_{j | k} mu(k/j) T(j). Nonnegative, exactly.
pub fn w_value_exact(k: u32, cache: &FactorTableCache) -> Result<BigRational> {
    let mut acc = BigRational::zero();
    for j in 1..=k {
        if k % j != 0 {
            continue;
        }
        match mobius_u32(k / j) {
            0 => {}
            1 => acc += t_value_exact(j, cache)?,
            _ => acc -= t_value_exact(j, cache)?,
        }
    }
    debug_assert!(acc >= BigRational::zero());
    Ok(acc)
}

/// W(k) by direct enumeration: sum of g(beta) over odd square-free
/// beta | 2^k - 1 whose order of 2 is exactly k. The second route of the
/// dual-path check on the Romanov main term.
pub fn w_value_brute(k: u32, cache: &FactorTableCache) -> Result<BigRational> {
    let entry = cache.get_or_compute(k)?;
    let primes: Vec<&BigUint> = entry.distinct_primes().collect();
    if primes.len() > 24 {
        return Err(Error::Domain(format!(
            "2^{k}-1 has {} distinct primes; subset enumeration refused",
            primes.len()
        )));
    }
    let orders: Vec<u32> = primes
        .iter()
        .map(|p| order_of_two_dividing(p, k))
        .collect();
    let mut total = BigRational::zero();
    for mask in 0u32..(1 << primes.len()) {
        let mut lcm = 1u32;
        let mut g = BigRational::one();
        for (i, p) in primes.iter().enumerate() {
            if mask >> i & 1 == 1 {
                lcm = num_integer::lcm(lcm, orders[i]);
                g *= big_g_factor(p);
            }
        }
        // beta = 1 (empty mask) has order 1.
        if lcm == k {
            total += g;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RomanovTerm {
    pub k: u32,
    pub w: f64,
    pub partial_sum: f64,
}

/// Per-k profile of the truncated Romanov sum: terms W(k)/k and the running
/// partial sums, which are nondecreasing because every W(k) >= 0.
pub fn romanov_profile(m: u32, cache: &FactorTableCache) -> Result<Vec<RomanovTerm>> {
    if m < 1 {
        return Err(Error::TooSmall {
            what: "romanov truncation M",
            value: m as u64,
            min: 1,
        });
    }
    let mut terms = Vec::with_capacity(m as usize);
    let mut sum = 0.0f64;
    for k in 1..=m {
        let w = w_value_exact(k, cache)
            .map_err(|e| Error::RomanovTruncated {
                k,
                usable: k - 1,
                cause: e.to_string(),
            })?
            .to_f64()
            .unwrap_or(0.0);
        sum += w / k as f64;
        terms.push(RomanovTerm {
            k,
            w,
            partial_sum: sum,
        });
    }
    Ok(terms)
}

/// Main term of the Romanov-type constant truncated at order M.
pub fn romanov_main(m: u32, cache: &FactorTableCache) -> Result<f64> {
    Ok(romanov_profile(m, cache)?
        .last()
        .map(|t| t.partial_sum)
        .unwrap_or(0.0))
}

/// Tail bound 2.7961 * ln(M)/M for the orders above M.
pub fn romanov_tail_bound(m: u32) -> Result<f64> {
    if m < 2 {
        return Err(Error::TooSmall {
            what: "romanov tail M",
            value: m as u64,
            min: 2,
        });
    }
    Ok(TAIL_COEFFICIENT * (m as f64).ln() / m as f64)
}

/// Romanov-type constant enclosure at truncation M: the main term is a
/// lower bound, main term plus tail bound an upper bound. `value` is set to
/// the upper end, matching its role as an upper-bound constant downstream.
pub fn romanov_constant(m: u32, cache: &FactorTableCache) -> Result<ConstantEstimate> {
    let lower = romanov_main(m, cache)?;
    let tail = romanov_tail_bound(m)?;
    Ok(ConstantEstimate {
        value: lower + tail,
        lower,
        upper: lower + tail,
        truncation: format!(
            "orders grouped up to M = {m}; tail bounded by {TAIL_COEFFICIENT} ln(M)/M = {tail:.6}"
        ),
    })
}

/// How the constant chains round their inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoundingMode {
    /// Full binary64 precision for ln 2 and e^gamma.
    #[default]
    FullPrecision,
    /// The five-digit values commonly quoted alongside these constants
    /// (ln 2 = 0.69315, e^gamma = 1.78107, 1/ln 2 = 1.4427,
    /// 4/ln^2 2 = 8.3255, 1/ln^2 2 = 2.0814), for digit-level comparison
    /// against printed derivations.
    FiveDigit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityChainReport {
    pub c_rom_upper: f64,
    /// c_rom_upper + e^gamma * ln 2.
    pub parenthesis: f64,
    /// Second-moment constant: 1/ln 2 + (4/ln^2 2) * parenthesis.
    pub c_upper: f64,
    /// Density lower bound: (1/ln 2)^2 / c_upper.
    pub delta: f64,
    pub five_digit: bool,
}

/// Unconditional constant chain from an upper bound on the Romanov constant
/// to the density lower bound delta.
pub fn density_chain(c_rom_upper: f64, mode: RoundingMode) -> Result<DensityChainReport> {
    if !c_rom_upper.is_finite() || c_rom_upper < 0.0 {
        return Err(Error::Domain(format!(
            "c_rom_upper must be finite and nonnegative, got {c_rom_upper}"
        )));
    }
    let report = match mode {
        RoundingMode::FullPrecision => {
            let ln2 = std::f64::consts::LN_2;
            let parenthesis = c_rom_upper + EULER_GAMMA.exp() * ln2;
            let c_upper = 1.0 / ln2 + 4.0 / (ln2 * ln2) * parenthesis;
            DensityChainReport {
                c_rom_upper,
                parenthesis,
                c_upper,
                delta: (1.0 / ln2) * (1.0 / ln2) / c_upper,
                five_digit: false,
            }
        }
        RoundingMode::FiveDigit => {
            const LN2: f64 = 0.69315;
            const E_GAMMA: f64 = 1.78107;
            const INV_LN2: f64 = 1.4427;
            const FOUR_OVER_LN2_SQ: f64 = 8.3255;
            const INV_LN2_SQ: f64 = 2.0814;
            let parenthesis = c_rom_upper + E_GAMMA * LN2;
            let c_upper = INV_LN2 + FOUR_OVER_LN2_SQ * parenthesis;
            DensityChainReport {
                c_rom_upper,
                parenthesis,
                c_upper,
                delta: INV_LN2_SQ / c_upper,
                five_digit: true,
            }
        }
    };
    Ok(report)
}

fn check_phi(phi: f64) -> Result<()> {
    if !phi.is_finite() || phi < 0.0 {
        return Err(Error::Domain(format!(
            "phi must be finite and nonnegative, got {phi}"
        )));
    }
    Ok(())
}

/// Density cap under the uniform prime-pairs assumption: 1/(ln 2 + 2 phi).
pub fn conditional_chain(phi: f64) -> Result<f64> {
    check_phi(phi)?;
    Ok(1.0 / (std::f64::consts::LN_2 + 2.0 * phi))
}

/// Unconditional density chain: 1/(ln 2 + 8 phi).
pub fn unconditional_chain(phi: f64) -> Result<f64> {
    check_phi(phi)?;
    Ok(1.0 / (std::f64::consts::LN_2 + 8.0 * phi))
}

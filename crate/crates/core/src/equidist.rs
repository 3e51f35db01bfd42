//! Brute-force verification of the periodic structure of p | d(k2, h):
//! exact solution counting over one fundamental domain, the empirical
//! densities rho_p(K) over the index set, and the truncated-kernel average.

use serde::{Deserialize, Serialize};

use crate::arith::mult_order;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::phi::{enumerate_index_set, pair_difference, PairIndex};
use crate::primality::{is_prime_u64, pow_mod};

/// Counts from one fundamental domain of the congruence
/// 2^k2 (4^j - 1) = 2j mod p, which is periodic in (k2, j) with period
/// (ord_p(2), p * ord_p(4)).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquidistReport {
    pub p: u64,
    pub ord2: u64,
    pub ord4: u64,
    /// ord2 * p * ord4.
    pub domain_size: u64,
    pub solutions: u64,
    /// Closed form ord2 * ord4.
    pub expected: u64,
    /// Solutions with 4^j = 1 mod p (forces p | j, one j per domain).
    pub case_unit: u64,
    /// Solutions with 4^j != 1 and p | j (provably impossible).
    pub case_p_only: u64,
    /// Solutions with 4^j != 1 and p does not divide j.
    pub case_generic: u64,
}

fn check_odd_prime(p: u64) -> Result<()> {
    if p == 2 {
        return Err(Error::EvenRequired {
            what: "equidistribution modulus (odd prime required); rejected",
            value: p,
        });
    }
    if !is_prime_u64(p) || p < 3 {
        return Err(Error::Domain(format!("{p} is not an odd prime")));
    }
    Ok(())
}

/// Exact solution count over the fundamental domain, tallied by the three
/// exhaustive cases of the congruence analysis.
pub fn fundamental_domain_count(p: u64) -> Result<EquidistReport> {
    fundamental_domain_count_exec(p, Execution::default())
}

pub fn fundamental_domain_count_exec(p: u64, exec: Execution) -> Result<EquidistReport> {
    check_odd_prime(p)?;
    let ord2 = mult_order(2, p)?;
    let ord4 = mult_order(4, p)?;
    let j_span = p * ord4;
    let domain = (ord2 as u128) * (j_span as u128);
    if domain > 1 << 32 {
        return Err(Error::RangeTooLarge {
            requested: domain.min(u64::MAX as u128) as u64,
            max: 1 << 32,
        });
    }

    // One row per k2 residue; each row walks the full j range.
    let rows = exec::run_indexed(ord2 as usize, exec, |k2| {
        let t2 = pow_mod(2, k2 as u64, p);
        let mut unit = 0u64;
        let mut p_only = 0u64;
        let mut generic = 0u64;
        let mut pow4 = 1u64; // 4^j mod p, updated incrementally
        for j in 0..j_span {
            let lhs = t2 * ((pow4 + p - 1) % p) % p;
            if lhs == 2 * j % p {
                if pow4 == 1 {
                    unit += 1;
                } else if j % p == 0 {
                    p_only += 1;
                } else {
                    generic += 1;
                }
            }
            pow4 = pow4 * 4 % p;
        }
        (unit, p_only, generic)
    });

    let mut report = EquidistReport {
        p,
        ord2,
        ord4,
        domain_size: ord2 * j_span,
        solutions: 0,
        expected: ord2 * ord4,
        case_unit: 0,
        case_p_only: 0,
        case_generic: 0,
    };
    for (unit, p_only, generic) in rows {
        report.case_unit += unit;
        report.case_p_only += p_only;
        report.case_generic += generic;
    }
    report.solutions = report.case_unit + report.case_p_only + report.case_generic;
    Ok(report)
}

/// Empirical density of p | d(k2, h) over the index set at height K.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RhoPoint {
    pub p: u64,
    pub k: u32,
    pub count: u64,
    pub index_size: u64,
    pub rho: f64,
    /// |rho - 1/p|.
    pub deviation: f64,
}

pub fn rho(p: u64, k: u32) -> Result<RhoPoint> {
    rho_exec(p, k, Execution::default())
}

pub fn rho_exec(p: u64, k: u32, exec: Execution) -> Result<RhoPoint> {
    check_odd_prime(p)?;
    if k < 3 {
        return Err(Error::TooSmall {
            what: "rho K",
            value: k as u64,
            min: 3,
        });
    }
    let pairs = enumerate_index_set(k);
    let count = count_divisible(&pairs, p, exec);
    let index_size = pairs.len() as u64;
    let rho = count as f64 / index_size as f64;
    Ok(RhoPoint {
        p,
        k,
        count,
        index_size,
        rho,
        deviation: (rho - 1.0 / p as f64).abs(),
    })
}

/// p | d(k2, h), decided with modular arithmetic only:
/// 2^k2 (2^h - 1) = h mod p via fast exponentiation.
fn divides_difference(p: u64, idx: PairIndex) -> bool {
    let t = pow_mod(2, idx.h as u64, p);
    let mersenne = if t == 0 { p - 1 } else { t - 1 };
    let lhs = crate::primality::mul_mod(pow_mod(2, idx.k2 as u64, p), mersenne, p);
    lhs == idx.h as u64 % p
}

/// Count of index pairs whose difference is divisible by p.
fn count_divisible(pairs: &[PairIndex], p: u64, exec: Execution) -> u64 {
    const CHUNK: usize = 4096;
    let counts = exec::run_indexed(exec::chunk_count(pairs.len(), CHUNK), exec, |ci| {
        let (start, end) = exec::chunk_bounds(pairs.len(), CHUNK, ci);
        let mut c = 0u64;
        for idx in &pairs[start..end] {
            if divides_difference(p, *idx) {
                c += 1;
            }
        }
        c
    });
    counts.into_iter().sum()
}

/// Average of the truncated kernel f_P over the index set, with the
/// limiting product it approaches as K grows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FpAverageReport {
    pub p_cutoff: u64,
    pub k: u32,
    pub average: f64,
    /// Product over odd primes p <= cutoff of (1 + 1/(p(p-2))).
    pub target: f64,
    pub deviation: f64,
}

pub fn f_p_average(p_cutoff: u64, k: u32) -> Result<FpAverageReport> {
    f_p_average_exec(p_cutoff, k, Execution::default())
}

pub fn f_p_average_exec(p_cutoff: u64, k: u32, exec: Execution) -> Result<FpAverageReport> {
    if p_cutoff < 3 || !is_prime_u64(p_cutoff) {
        return Err(Error::Domain(format!(
            "cutoff must be an odd prime, got {p_cutoff}"
        )));
    }
    if k < 3 {
        return Err(Error::TooSmall {
            what: "f_p_average K",
            value: k as u64,
            min: 3,
        });
    }
    let odd_primes: Vec<u64> = (3..=p_cutoff).filter(|&q| is_prime_u64(q)).collect();
    let pairs = enumerate_index_set(k);

    // f_P(d) depends only on d mod each p <= P, so no factorization is
    // needed: evaluate the residues by modular exponentiation.
    const CHUNK: usize = 4096;
    let sums = exec::run_indexed(exec::chunk_count(pairs.len(), CHUNK), exec, |ci| {
        let (start, end) = exec::chunk_bounds(pairs.len(), CHUNK, ci);
        let mut sum = 0.0f64;
        for idx in &pairs[start..end] {
            let mut f = 1.0;
            for &p in &odd_primes {
                if divides_difference(p, *idx) {
                    f *= (p - 1) as f64 / (p - 2) as f64;
                }
            }
            sum += f;
        }
        sum
    });
    let average = sums.into_iter().sum::<f64>() / pairs.len() as f64;
    let target: f64 = odd_primes
        .iter()
        .map(|&p| 1.0 + 1.0 / (p as f64 * (p - 2) as f64))
        .product();
    Ok(FpAverageReport {
        p_cutoff,
        k,
        average,
        target,
        deviation: (average - target).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fundamental_domain_examples() {
        // p = 3: orders (2, 1), domain 6, solutions 2.
        let r = fundamental_domain_count(3).unwrap();
        assert_eq!((r.ord2, r.ord4, r.domain_size, r.solutions), (2, 1, 6, 2));
        assert_eq!(r.solutions, r.expected);
        // p = 5: orders (4, 2), domain 40, solutions 8.
        let r = fundamental_domain_count(5).unwrap();
        assert_eq!((r.ord2, r.ord4, r.domain_size, r.solutions), (4, 2, 40, 8));
        // p = 7: orders (3, 3), domain 63, solutions 9.
        let r = fundamental_domain_count(7).unwrap();
        assert_eq!((r.ord2, r.ord4, r.domain_size, r.solutions), (3, 3, 63, 9));
        assert_eq!(r.solutions, r.expected);
    }

    #[test]
    fn closed_form_holds_below_fifty_with_case_tallies() {
        for p in (3..50u64).filter(|&p| is_prime_u64(p)) {
            let r = fundamental_domain_count(p).unwrap();
            assert_eq!(r.solutions, r.expected, "p = {p}");
            assert_eq!(r.case_unit, r.ord2, "p = {p}");
            assert_eq!(r.case_p_only, 0, "p = {p}");
            assert_eq!(r.case_generic, (r.ord4 - 1) * r.ord2, "p = {p}");
        }
    }

    #[test]
    fn rejects_two_and_composites() {
        assert!(fundamental_domain_count(2).is_err());
        assert!(fundamental_domain_count(9).is_err());
        assert!(rho(15, 100).is_err());
    }

    #[test]
    fn rho_single_pair() {
        // K = 3: only d(1,2) = 4, and 3 does not divide 4.
        let r = rho(3, 3).unwrap();
        assert_eq!(r.count, 0);
        assert_eq!(r.index_size, 1);
        assert_eq!(r.rho, 0.0);
    }

    #[test]
    fn rho_matches_direct_divisibility() {
        // Cross-oracle: recompute through the full difference values.
        for p in [3u64, 5, 7, 11] {
            for k in [10u32, 25, 40] {
                let direct = enumerate_index_set(k)
                    .into_iter()
                    .filter(|&idx| pair_difference(idx) % p == 0)
                    .count() as u64;
                let fast = rho(p, k).unwrap();
                assert_eq!(fast.count, direct, "p = {p}, K = {k}");
            }
        }
    }

    #[test]
    fn rho_approaches_one_over_p() {
        for p in [3u64, 5, 7] {
            let r = rho(p, 400).unwrap();
            assert!(r.deviation < 0.02, "p = {p}: rho = {}", r.rho);
            let r200 = rho(p, 200).unwrap();
            assert!(r200.deviation < 0.02, "p = {p}: rho = {}", r200.rho);
        }
    }

    #[test]
    fn rho_parallel_matches_sequential() {
        let a = rho_exec(7, 300, Execution::Parallel).unwrap();
        let b = rho_exec(7, 300, Execution::Sequential).unwrap();
        assert_eq!(a.count, b.count);
        assert_eq!(a.rho.to_bits(), b.rho.to_bits());
    }

    #[test]
    fn f_p_average_small_and_large() {
        // Single pair at K = 3: f_3(4) = 1; the limiting product is 4/3.
        let r = f_p_average(3, 3).unwrap();
        assert_eq!(r.average, 1.0);
        assert!((r.target - 4.0 / 3.0).abs() < 1e-15);
        // Large K: the average closes in on the product.
        let r = f_p_average(3, 400).unwrap();
        assert!(r.deviation < 0.02, "P=3: {} vs {}", r.average, r.target);
        let r = f_p_average(7, 400).unwrap();
        assert!((r.target - 1.462857).abs() < 1e-5);
        assert!(r.deviation < 0.05, "P=7: {} vs {}", r.average, r.target);
    }

    #[test]
    fn f_p_average_cross_check_against_factored_kernel() {
        // Independent route: evaluate f_P through actual factorizations.
        let k = 20u32;
        let cutoff = 7u64;
        let mut sum = 0.0;
        let pairs = enumerate_index_set(k);
        for &idx in &pairs {
            let d = pair_difference(idx);
            let mut f = 1.0;
            for p in crate::arith::factorize(d).unwrap().distinct_primes() {
                if p > 2 && p <= cutoff {
                    f *= (p - 1) as f64 / (p - 2) as f64;
                }
            }
            sum += f;
        }
        let direct = sum / pairs.len() as f64;
        let fast = f_p_average(cutoff, k).unwrap();
        assert!((direct - fast.average).abs() < 1e-12);
    }
}

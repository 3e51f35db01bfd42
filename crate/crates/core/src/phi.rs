//! The index set of shifted pairs, the difference d(k2, h), the mean value
//! of the singular series over that set, and the congruence-count
//! diagnostic M_l(h).

use serde::{Deserialize, Serialize};

use crate::arith::{
    default_twin_prime_constant, f_value, mobius, ConstantEstimate, EULER_GAMMA,
};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::primality::pow_mod;

/// One index pair: an even shift gap h and a base exponent k2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairIndex {
    pub k2: u32,
    pub h: u32,
}

/// K(N) = floor(log2 N - 2 log2(ln N)), the truncation height of the shift
/// family. The inner logarithm is natural so that 2^K (ln N)^2 <= N holds;
/// the result is clamped downward if floating-point rounding lands on the
/// wrong side of that inequality.
pub fn capital_k(n: u64) -> Result<u32> {
    if n < 4 {
        return Err(Error::TooSmall {
            what: "capital_k N",
            value: n,
            min: 4,
        });
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let raw = nf.log2() - 2.0 * ln_n.log2();
    let mut k = raw.floor();
    if k < 2.0 {
        return Err(Error::TooSmall {
            what: "capital_k result",
            value: k.max(0.0) as u64,
            min: 2,
        });
    }
    while k >= 2.0 && (k as u32) < 64 && ((1u128 << k as u32) as f64) * ln_n * ln_n > nf {
        k -= 1.0;
    }
    if k < 2.0 {
        return Err(Error::TooSmall {
            what: "capital_k result",
            value: 0,
            min: 2,
        });
    }
    Ok(k as u32)
}

/// d(k2, h) = 2^k2 (2^h - 1) - h. Even for even h, and below 2^(k2 + h).
pub fn pair_difference(idx: PairIndex) -> u64 {
    debug_assert!(idx.k2 >= 1 && idx.h >= 1 && idx.k2 + idx.h <= 63);
    (1u64 << idx.k2) * ((1u64 << idx.h) - 1) - idx.h as u64
}

/// The index pairs with even h in [2, K-1] and k2 in [1, K-h], ordered by
/// ascending h then ascending k2. Empty for K < 3.
pub fn enumerate_index_set(k: u32) -> Vec<PairIndex> {
    let mut out = Vec::with_capacity(index_set_size(k) as usize);
    let mut h = 2;
    while h + 1 <= k {
        for k2 in 1..=(k - h) {
            out.push(PairIndex { k2, h });
        }
        h += 2;
    }
    out
}

/// |I_K| in closed form: (K/2 - 1)(K/2) for even K, ((K-1)/2)^2 for odd K.
pub fn index_set_size(k: u32) -> u64 {
    if k < 3 {
        return 0;
    }
    let k = k as u64;
    if k % 2 == 0 {
        (k / 2 - 1) * (k / 2)
    } else {
        let half = (k - 1) / 2;
        half * half
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiReport {
    pub k: u32,
    /// (1/K^2) * sum of the singular series over the index set.
    pub phi: f64,
    pub index_count: u64,
    pub min_singular: f64,
    pub max_singular: f64,
    /// Pairs whose difference resisted factorization (zero at desk scale).
    pub failures: u64,
}

/// One audit row per index pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiRow {
    pub k2: u32,
    pub h: u32,
    pub d: u64,
    pub f: f64,
    pub singular_series: f64,
}

/// Mean value of the singular series over the index set, as a function of K
/// alone, using the shared twin-prime-constant estimate.
pub fn phi(k: u32) -> Result<PhiReport> {
    phi_exec(k, Execution::default())
}

pub fn phi_exec(k: u32, exec: Execution) -> Result<PhiReport> {
    Ok(phi_with_rows(k, default_twin_prime_constant(), exec)?.0)
}

/// As [`phi`], with the per-pair audit rows and an explicit C2 estimate.
pub fn phi_with_rows(
    k: u32,
    c2: &ConstantEstimate,
    exec: Execution,
) -> Result<(PhiReport, Vec<PhiRow>)> {
    if k < 3 {
        return Err(Error::TooSmall {
            what: "phi K",
            value: k as u64,
            min: 3,
        });
    }
    if k > 62 {
        return Err(Error::RangeTooLarge {
            requested: k as u64,
            max: 62,
        });
    }
    let pairs = enumerate_index_set(k);
    debug_assert_eq!(pairs.len() as u64, index_set_size(k));
    let two_c2 = 2.0 * c2.value;

    struct Chunk {
        sum_f: f64,
        min_s: f64,
        max_s: f64,
        failures: u64,
        rows: Vec<PhiRow>,
    }
    const CHUNK: usize = 64;
    let n_chunks = exec::chunk_count(pairs.len(), CHUNK);
    let chunks = exec::run_indexed(n_chunks, exec, |ci| {
        let (start, end) = exec::chunk_bounds(pairs.len(), CHUNK, ci);
        let mut c = Chunk {
            sum_f: 0.0,
            min_s: f64::INFINITY,
            max_s: f64::NEG_INFINITY,
            failures: 0,
            rows: Vec::with_capacity(end - start),
        };
        for &idx in &pairs[start..end] {
            let d = pair_difference(idx);
            match f_value(d) {
                Ok(f) => {
                    let s = two_c2 * f;
                    c.sum_f += f;
                    c.min_s = c.min_s.min(s);
                    c.max_s = c.max_s.max(s);
                    c.rows.push(PhiRow {
                        k2: idx.k2,
                        h: idx.h,
                        d,
                        f,
                        singular_series: s,
                    });
                }
                Err(_) => c.failures += 1,
            }
        }
        c
    });

    let mut sum_f = 0.0f64;
    let mut min_s = f64::INFINITY;
    let mut max_s = f64::NEG_INFINITY;
    let mut failures = 0u64;
    let mut rows = Vec::with_capacity(pairs.len());
    for c in chunks {
        sum_f += c.sum_f;
        min_s = min_s.min(c.min_s);
        max_s = max_s.max(c.max_s);
        failures += c.failures;
        rows.extend(c.rows);
    }
    if failures > 0 {
        return Err(Error::Domain(format!(
            "phi({k}): {failures} pair difference(s) resisted factorization; \
             refusing to average a biased subset"
        )));
    }
    let report = PhiReport {
        k,
        phi: two_c2 * sum_f / (k as f64 * k as f64),
        index_count: pairs.len() as u64,
        min_singular: min_s,
        max_singular: max_s,
        failures,
    };
    Ok((report, rows))
}

/// M_l(h): how many k2 in [1, K-h] satisfy 2^k2 (2^h - 1) = h mod l, for an
/// odd square-free modulus l.
pub fn m_l_count(l: u64, h: u32, k: u32) -> Result<u64> {
    if l == 0 || l % 2 == 0 {
        return Err(Error::Domain(format!("modulus must be odd, got {l}")));
    }
    if mobius(l)? == 0 {
        return Err(Error::Domain(format!("modulus {l} is not square-free")));
    }
    if h < 2 || h % 2 != 0 {
        return Err(Error::EvenRequired {
            what: "m_l_count h",
            value: h as u64,
        });
    }
    if h + 1 > k {
        return Err(Error::TooSmall {
            what: "m_l_count K",
            value: k as u64,
            min: h as u64 + 1,
        });
    }
    let t = pow_mod(2, h as u64, l);
    let mersenne_mod = if t == 0 { l - 1 } else { t - 1 };
    let target = h as u64 % l;
    let mut count = 0;
    for k2 in 1..=(k - h) as u64 {
        if crate::primality::mul_mod(pow_mod(2, k2, l), mersenne_mod, l) == target {
            count += 1;
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiBoundsReport {
    pub k: u32,
    pub phi: f64,
    /// Asymptotic band floor (1/2).
    pub band_lower: f64,
    /// (c_rom_upper + e^gamma ln 2)/2.
    pub band_upper: f64,
    /// Whether the finite-K value already sits inside the asymptotic band
    /// (informational: the band constrains the limit, not any fixed K).
    pub in_band: bool,
}

/// The finite-K mean value against the asymptotic band derived from an
/// upper bound for the Romanov-type constant.
pub fn phi_bounds_report(k: u32, c_rom: &ConstantEstimate) -> Result<PhiBoundsReport> {
    phi_bounds_report_exec(k, c_rom, Execution::default())
}

pub fn phi_bounds_report_exec(
    k: u32,
    c_rom: &ConstantEstimate,
    exec: Execution,
) -> Result<PhiBoundsReport> {
    let report = phi_exec(k, exec)?;
    let band_upper = (c_rom.upper + EULER_GAMMA.exp() * std::f64::consts::LN_2) / 2.0;
    Ok(PhiBoundsReport {
        k,
        phi: report.phi,
        band_lower: 0.5,
        band_upper,
        in_band: report.phi >= 0.5 && report.phi <= band_upper,
    })
}

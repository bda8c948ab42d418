//! Divisor counts and multiplication-table statistics.
//!
//! All counts are exact integers; floats only appear in the final ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ford's exponent `c = 1 - (1 + log log 2) / log 2`, to six decimal places.
pub const FORD_C: f64 = 0.086071;

/// Largest `n` for the bitset of distinct products.
pub const DISTINCT_PRODUCTS_MAX_N: u64 = 30_000;

/// Largest `n` for routines that store a value per `k <= n^2`.
pub const SIEVE_MAX_N: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorStats {
    pub n: u64,
    pub d: u64,
    /// Ascending.
    pub divisors: Vec<u64>,
}

/// Divisors of `n` by trial division up to `sqrt(n)`.
pub fn divisor_count(n: u64) -> Result<DivisorStats> {
    if n == 0 || n > i64::MAX as u64 {
        return Err(Error::invalid(format!("divisor_count needs 1 <= n < 2^63, got {n}")));
    }
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut l = 1u64;
    while l <= n / l {
        if n % l == 0 {
            small.push(l);
            if l != n / l {
                large.push(n / l);
            }
        }
        l += 1;
    }
    small.extend(large.into_iter().rev());
    Ok(DivisorStats {
        n,
        d: small.len() as u64,
        divisors: small,
    })
}

/// `m(k; n)`: the number of cells `(i, j)` of the `n x n` multiplication
/// table with `ij = k`.
pub fn mult_multiplicity(k: u64, n: u64) -> u64 {
    if k == 0 || n == 0 || k > n.saturating_mul(n) {
        return 0;
    }
    let mut count = 0;
    let mut l = 1u64;
    while l <= k / l {
        if k % l == 0 {
            let other = k / l;
            if l <= n && other <= n {
                count += if l == other { 1 } else { 2 };
            }
        }
        l += 1;
    }
    count
}

/// The set `A_n` of distinct entries of the `n x n` multiplication table,
/// stored as a bitset over `1..=n^2`.
#[derive(Clone, Debug)]
pub struct MultTableStats {
    pub n: u64,
    pub cardinality: u64,
    bits: Vec<u64>,
}

impl MultTableStats {
    pub fn contains(&self, k: u64) -> bool {
        k >= 1 && k <= self.n * self.n && (self.bits[(k / 64) as usize] >> (k % 64)) & 1 == 1
    }

    /// Elements of `A_n` in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let bit = word.trailing_zeros() as u64;
                word &= word - 1;
                Some(w as u64 * 64 + bit)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.iter().collect()
    }

    pub fn multiplicity(&self, k: u64) -> u64 {
        mult_multiplicity(k, self.n)
    }
}

pub fn distinct_products(n: u64) -> Result<MultTableStats> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    Error::check_budget(
        "distinct_products n",
        n as u128,
        DISTINCT_PRODUCTS_MAX_N as u128,
    )?;
    let top = n * n;
    let mut bits = vec![0u64; (top / 64 + 1) as usize];
    for x in 1..=n {
        for y in x..=n {
            let k = x * y;
            bits[(k / 64) as usize] |= 1 << (k % 64);
        }
    }
    let cardinality = bits.iter().map(|w| w.count_ones() as u64).sum();
    Ok(MultTableStats {
        n,
        cardinality,
        bits,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FordRatio {
    pub n: u64,
    pub value: f64,
    pub c: f64,
}

/// `|A_n| (log n)^c (log log n)^{3/2} / n^2`. Only its slow variation in `n`
/// is meaningful, since the implied constants are unknown.
pub fn ford_ratio(n: u64) -> Result<FordRatio> {
    require_at_least_16(n)?;
    let a = distinct_products(n)?.cardinality as f64;
    Ok(FordRatio {
        n,
        value: ford_ratio_from_cardinality(n, a),
        c: FORD_C,
    })
}

pub(crate) fn ford_ratio_from_cardinality(n: u64, cardinality: f64) -> f64 {
    let nf = n as f64;
    let ln = nf.ln();
    cardinality * ln.powf(FORD_C) * ln.ln().powf(1.5) / (nf * nf)
}

fn require_at_least_16(n: u64) -> Result<()> {
    if n < 16 {
        return Err(Error::invalid(format!("n must be at least 16 so that log log n > 0, got {n}")));
    }
    Ok(())
}

fn require_positive_eps(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive and finite, got {eps}")));
    }
    Ok(())
}

/// Divisor counts `d(k)` for all `k <= limit`, from a linear sieve that
/// tracks the exponent of each smallest prime factor.
#[derive(Clone, Debug)]
pub struct DivisorSieve {
    d: Vec<u16>,
}

/// Cell budget of [`DivisorSieve`].
pub const DIVISOR_SIEVE_MAX: u64 = SIEVE_MAX_N * SIEVE_MAX_N;

impl DivisorSieve {
    pub fn new(limit: u64) -> Result<Self> {
        Error::check_budget("divisor sieve cells", limit as u128, DIVISOR_SIEVE_MAX as u128)?;
        let len = limit as usize + 1;
        let mut d = vec![0u16; len];
        let mut exp = vec![0u8; len];
        let mut primes: Vec<u32> = Vec::new();
        if limit >= 1 {
            d[1] = 1;
        }
        for i in 2..len {
            if d[i] == 0 {
                d[i] = 2;
                exp[i] = 1;
                primes.push(i as u32);
            }
            for &p in &primes {
                let m = p as usize * i;
                if m >= len {
                    break;
                }
                if i % p as usize == 0 {
                    let e = exp[i] as u16;
                    d[m] = d[i] / (e + 1) * (e + 2);
                    exp[m] = exp[i] + 1;
                    break;
                }
                d[m] = d[i] * 2;
                exp[m] = 1;
            }
        }
        Ok(DivisorSieve { d })
    }

    pub fn limit(&self) -> u64 {
        self.d.len() as u64 - 1
    }

    /// `d(k)` for `1 <= k <= limit`.
    pub fn d(&self, k: u64) -> u64 {
        self.d[k as usize] as u64
    }

    pub fn max(&self) -> u64 {
        self.d.iter().copied().max().unwrap_or(0) as u64
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.d
    }
}

/// `m(k; n)` for every `k <= n^2`, filled by walking the table.
#[derive(Clone, Debug)]
pub struct MultiplicityTable {
    n: u64,
    counts: Vec<u16>,
}

impl MultiplicityTable {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        Error::check_budget("multiplicity table n", n as u128, SIEVE_MAX_N as u128)?;
        let mut counts = vec![0u16; (n * n + 1) as usize];
        for x in 1..=n {
            for y in 1..=n {
                counts[(x * y) as usize] += 1;
            }
        }
        Ok(MultiplicityTable { n, counts })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn get(&self, k: u64) -> u64 {
        self.counts.get(k as usize).copied().unwrap_or(0) as u64
    }

    /// `max_{k in A_n} m(k; n)`.
    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0) as u64
    }

    /// `|A_n|`.
    pub fn cardinality(&self) -> u64 {
        self.counts.iter().filter(|&&c| c > 0).count() as u64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// `max_{k <= n^2} d(k) |A_n|^{2/(2+eps)} log n / n^2`.
pub fn lem0_ratio(n: u64, eps: f64) -> Result<f64> {
    require_at_least_16(n)?;
    require_positive_eps(eps)?;
    Error::check_budget("lem0_ratio n", n as u128, SIEVE_MAX_N as u128)?;
    let d_max = DivisorSieve::new(n * n)?.max();
    let a = distinct_products(n)?.cardinality;
    Ok(lem0_from_parts(n, eps, d_max, a))
}

pub(crate) fn lem0_from_parts(n: u64, eps: f64, d_max: u64, cardinality: u64) -> f64 {
    let nf = n as f64;
    d_max as f64 * (cardinality as f64).powf(2.0 / (2.0 + eps)) * nf.ln() / (nf * nf)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropMultiCount {
    pub n: u64,
    /// `#{(x, y, z) in [n]^3 : xy / z in [n]}`.
    pub count: u128,
    /// `count / n^3`.
    pub ratio: f64,
}

/// Counts `(x, y, z)` with `xy/z in [n]` as `sum_z sum_k m(kz; n)`.
pub fn prop_multi_count(n: u64) -> Result<PropMultiCount> {
    let table = MultiplicityTable::new(n)?;
    Ok(prop_multi_from_table(&table))
}

pub fn prop_multi_from_table(table: &MultiplicityTable) -> PropMultiCount {
    let n = table.n;
    let mut count = 0u128;
    for z in 1..=n {
        for k in 1..=n {
            count += table.get(k * z) as u128;
        }
    }
    PropMultiCount {
        n,
        count,
        ratio: count as f64 / (n as f64).powi(3),
    }
}

/// One row of the number-theory report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumberTheoryRow {
    pub n: u64,
    pub d_max: u64,
    pub distinct_products: u64,
    pub ford_ratio: f64,
    pub lem0_ratio: f64,
    pub prop_multi_ratio: f64,
}

/// Everything in [`NumberTheoryRow`] from one sieve and one table.
pub fn number_theory_row(n: u64, eps: f64) -> Result<NumberTheoryRow> {
    require_at_least_16(n)?;
    require_positive_eps(eps)?;
    let table = MultiplicityTable::new(n)?;
    let sieve = DivisorSieve::new(n * n)?;
    let d_max = sieve.max();
    let a = table.cardinality();
    Ok(NumberTheoryRow {
        n,
        d_max,
        distinct_products: a,
        ford_ratio: ford_ratio_from_cardinality(n, a as f64),
        lem0_ratio: lem0_from_parts(n, eps, d_max, a),
        prop_multi_ratio: prop_multi_from_table(&table).ratio,
    })
}

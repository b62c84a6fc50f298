//! Exact rational evaluation of two binomial/multinomial averages that
//! bound the expected inverse bin occupancy of uniform allocations.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Result {
    pub m: usize,
    pub n: usize,
    pub lhs1: f64,
    pub lhs2: f64,
    pub bound: f64,
    pub pass_lhs1: bool,
    pub pass_lhs2: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Result {
    pub m: usize,
    pub n: usize,
    /// Value from composition enumeration (`None` when `n` is too large).
    pub lhs_enumeration: Option<f64>,
    pub lhs_reduction: f64,
    pub bound: f64,
    /// Relative difference of the two paths (0 when only one ran).
    pub path_gap: f64,
    pub pass: bool,
}

/// Largest `n` for which [`lemma2_exact`] also enumerates compositions.
pub const ENUMERATION_LIMIT: usize = 14;

fn check(m: usize, n: usize) -> Result<()> {
    if m < 2 || m > n {
        return Err(Error::Domain(format!("need 2 ≤ m ≤ n, got m={m}, n={n}")));
    }
    Ok(())
}

fn binomial_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for k in 0..n {
        let next = &row[k] * BigInt::from(n - k) / BigInt::from(k + 1);
        row.push(next);
    }
    row
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("finite rational")
}

/// `lhs₁ = m^{-n} Σ_{k=1}^n C(n,k)(m-1)^k / k` and
/// `lhs₂ = m^{-n} Σ_{k=0}^{n-1} C(n,k)(m-1)^k / (n-k)`, each compared with
/// `5/n`.
pub fn lemma1_exact(m: usize, n: usize) -> Result<Lemma1Result> {
    check(m, n)?;
    let binom = binomial_row(n);
    let base = BigInt::from(m - 1);
    let mut pow = BigInt::one();
    let mut s1 = BigRational::zero();
    let mut s2 = BigRational::zero();
    for k in 0..=n {
        let term = &binom[k] * &pow;
        if k >= 1 {
            s1 += ratio(term.clone(), BigInt::from(k));
        }
        if k < n {
            s2 += ratio(term, BigInt::from(n - k));
        }
        pow *= &base;
    }
    let mn = BigInt::from(m).pow(n as u32);
    let lhs1 = s1 / BigRational::from_integer(mn.clone());
    let lhs2 = s2 / BigRational::from_integer(mn);
    let bound = BigRational::new(BigInt::from(5), BigInt::from(n));
    let (pass_lhs1, pass_lhs2) = (lhs1 <= bound, lhs2 <= bound);
    Ok(Lemma1Result {
        m,
        n,
        lhs1: to_f64(&lhs1),
        lhs2: to_f64(&lhs2),
        bound: to_f64(&bound),
        pass_lhs1,
        pass_lhs2,
        pass: pass_lhs1 && pass_lhs2,
    })
}

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Sum over compositions `k₁ + ... + k_m = n`, `k_i ≥ 1`, of
/// `n!/(k₁!...k_m!) · Σ_i 1/k_i`.
fn composition_sum(m: usize, n: usize) -> BigRational {
    let fact: Vec<BigInt> = (0..=n).map(factorial).collect();
    let mut total = BigRational::zero();
    let mut parts = vec![0usize; m];
    fn rec(idx: usize, remaining: usize, parts: &mut [usize], fact: &[BigInt], n: usize, total: &mut BigRational) {
        let m = parts.len();
        if idx == m - 1 {
            parts[idx] = remaining;
            let den = parts.iter().fold(BigInt::one(), |acc, &k| acc * &fact[k]);
            let multinomial = &fact[n] / den;
            let inv: BigRational = parts
                .iter()
                .map(|&k| BigRational::new(BigInt::one(), BigInt::from(k)))
                .sum();
            *total += BigRational::from_integer(multinomial) * inv;
            return;
        }
        let slots_after = m - idx - 1;
        for k in 1..=remaining - slots_after {
            parts[idx] = k;
            rec(idx + 1, remaining - k, parts, fact, n, total);
        }
    }
    rec(0, n, &mut parts, &fact, n, &mut total);
    total
}

/// Surjections from an `a`-set onto a `b`-set, by inclusion-exclusion.
fn surjections(a: usize, b: usize) -> BigInt {
    let binom = binomial_row(b);
    let mut total = BigInt::zero();
    for j in 0..=b {
        let term = &binom[j] * BigInt::from(b - j).pow(a as u32);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// Symmetric reduction: every bin contributes equally, so the sum equals
/// `m Σ_{k₁} C(n,k₁)/k₁ · Surj(n-k₁, m-1)`.
fn reduction_sum(m: usize, n: usize) -> BigRational {
    let binom = binomial_row(n);
    let mut total = BigRational::zero();
    for k1 in 1..=n - (m - 1) {
        let count = &binom[k1] * surjections(n - k1, m - 1);
        total += ratio(count, BigInt::from(k1));
    }
    total * BigRational::from_integer(BigInt::from(m))
}

/// `m^{-n} Σ_{compositions} multinomial(n; k) Σ_i 1/k_i` against `5m/n`,
/// by the symmetric reduction and, for `n ≤ 14`, by enumeration.
pub fn lemma2_exact(m: usize, n: usize) -> Result<Lemma2Result> {
    check(m, n)?;
    let mn = BigRational::from_integer(BigInt::from(m).pow(n as u32));
    let reduced = reduction_sum(m, n) / &mn;
    let enumerated = (n <= ENUMERATION_LIMIT).then(|| composition_sum(m, n) / &mn);
    let bound = BigRational::new(BigInt::from(5 * m), BigInt::from(n));
    let lhs_reduction = to_f64(&reduced);
    let lhs_enumeration = enumerated.as_ref().map(to_f64);
    let path_gap = lhs_enumeration.map_or(0.0, |e| {
        (e - lhs_reduction).abs() / lhs_reduction.abs().max(f64::MIN_POSITIVE)
    });
    let pass = reduced <= bound && enumerated.as_ref().is_none_or(|e| *e <= bound) && path_gap <= 1e-12;
    Ok(Lemma2Result {
        m,
        n,
        lhs_enumeration,
        lhs_reduction,
        bound: to_f64(&bound),
        path_gap,
        pass,
    })
}

//! Elementary number-theoretic primitives: deterministic primality testing,
//! Jacobi symbols, square roots modulo odd prime powers, and the validated
//! squarefree-product input type used by every other module.

use rug::ops::{Pow, RemRounding};
use rug::{integer::Order, Integer};
use std::fmt;

/// Largest input for which the fixed Miller-Rabin witness set is proven
/// deterministic (3.317e24; we stay far below it in practice).
const MR_CAP_DIGITS: usize = 25;
const MR_WITNESSES: [u32; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NtError {
    EvenModulus,
    NonPositiveModulus,
    NotPrime(String),
    BadResidueClass(String),
    DuplicatePrimes,
    EmptyInput,
    RangeCap(String),
}

impl fmt::Display for NtError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NtError::EvenModulus => write!(f, "modulus must be odd"),
            NtError::NonPositiveModulus => write!(f, "modulus must be positive"),
            NtError::NotPrime(s) => write!(f, "not prime: {s}"),
            NtError::BadResidueClass(s) => write!(f, "bad residue class: {s}"),
            NtError::DuplicatePrimes => write!(f, "duplicate primes in input"),
            NtError::EmptyInput => write!(f, "empty input"),
            NtError::RangeCap(s) => write!(f, "outside supported range: {s}"),
        }
    }
}

impl std::error::Error for NtError {}

/// Deterministic Miller-Rabin primality test, valid for all inputs below
/// 3.3e24 by the fixed witness set. Inputs above the cap are rejected.
pub fn is_prime(n: &Integer) -> Result<bool, NtError> {
    if *n > Integer::from(10).pow(MR_CAP_DIGITS as u32) {
        return Err(NtError::RangeCap(n.to_string()));
    }
    if *n < 2 {
        return Ok(false);
    }
    for w in MR_WITNESSES {
        if *n == w {
            return Ok(true);
        }
        if n.is_divisible_u(w) {
            return Ok(false);
        }
    }
    // n = d * 2^s + 1 with d odd
    let nm1 = Integer::from(n - 1u32);
    let s = nm1.find_one(0).unwrap_or(0);
    let d = Integer::from(&nm1 >> s);
    'witness: for w in MR_WITNESSES {
        let mut x = Integer::from(w).pow_mod(&d, n).unwrap();
        if x == 1 || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = x.pow_mod(&Integer::from(2), n).unwrap();
            if x == nm1 {
                continue 'witness;
            }
        }
        return Ok(false);
    }
    Ok(true)
}

/// Convenience wrapper for machine-word inputs.
pub fn is_prime_u64(n: u64) -> bool {
    is_prime(&Integer::from(n)).expect("u64 is below the determinism cap")
}

/// Jacobi symbol (a/b) for odd positive b; multiplicative in both arguments,
/// equal to the Legendre symbol when b is prime.
pub fn jacobi(a: &Integer, b: &Integer) -> Result<i32, NtError> {
    if *b <= 0 {
        return Err(NtError::NonPositiveModulus);
    }
    if b.is_even() {
        return Err(NtError::EvenModulus);
    }
    Ok(a.jacobi(b))
}

/// Jacobi symbol on machine words; panics on invalid modulus (internal use
/// on moduli already known to be odd primes).
pub fn jacobi_i64(a: i64, b: i64) -> i32 {
    jacobi(&Integer::from(a), &Integer::from(b)).expect("odd positive modulus")
}

/// The quartic symbol factor 2^((p-1)/4) mod p in {-1,+1}, defined for
/// primes p = 1 mod 8 (where 2 is a quadratic residue).
pub fn quartic_residue_of_two(p: u64) -> Result<i32, NtError> {
    if p % 8 != 1 {
        return Err(NtError::BadResidueClass(format!("{p} is not 1 mod 8")));
    }
    if !is_prime_u64(p) {
        return Err(NtError::NotPrime(p.to_string()));
    }
    let pp = Integer::from(p);
    let r = Integer::from(2)
        .pow_mod(&Integer::from((p - 1) / 4), &pp)
        .unwrap();
    if r == 1 {
        Ok(1)
    } else if r == p - 1 {
        Ok(-1)
    } else {
        unreachable!("2 is a square mod p for p = 1 mod 8")
    }
}

fn tonelli_shanks(a: &Integer, p: &Integer) -> Option<Integer> {
    let a = Integer::from(a % p);
    if a == 0 {
        return Some(Integer::ZERO);
    }
    if a.jacobi(p) != 1 {
        return None;
    }
    if p.mod_u(4) == 3 {
        let e = Integer::from(p + 1u32) >> 2;
        return Some(a.pow_mod(&e, p).unwrap());
    }
    // p = 1 mod 4: full Tonelli-Shanks
    let pm1 = Integer::from(p - 1u32);
    let s = pm1.find_one(0).unwrap();
    let q = Integer::from(&pm1 >> s);
    let mut z = Integer::from(2);
    while z.jacobi(p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = z.pow_mod(&q, p).unwrap();
    let mut t = a.clone().pow_mod(&q, p).unwrap();
    let mut r = a
        .pow_mod(&(Integer::from(&q + 1u32) >> 1), p)
        .unwrap();
    while t != 1 {
        let mut i = 0u32;
        let mut tt = t.clone();
        while tt != 1 {
            tt = tt.pow_mod(&Integer::from(2), p).unwrap();
            i += 1;
            if i == m {
                return None;
            }
        }
        let b = c
            .pow_mod(&(Integer::from(1) << (m - i - 1)), p)
            .unwrap();
        m = i;
        c = Integer::from(&b * &b) % p;
        t = Integer::from(&t * &c) % p;
        r = Integer::from(&r * &b) % p;
    }
    Some(r)
}

/// Square root of a modulo p^e for an odd prime p, or None. Zero divisors
/// are handled by explicit valuation bookkeeping: a = p^v u needs v even
/// (or v >= e) and u a square modulo p^(e-v).
pub fn sqrt_mod(a: &Integer, p: u64, e: u32) -> Option<Integer> {
    assert!(p % 2 == 1 && p > 1 && e >= 1, "odd prime modulus required");
    let pp = Integer::from(p);
    let pe = pp.clone().pow(e);
    let a = Integer::from(a.rem_euc(&pe));
    if a == 0 {
        // r = p^ceil(e/2) squares to p^(2 ceil(e/2)) = 0 mod p^e
        return Some(pp.pow((e + 1) / 2));
    }
    let mut v = 0u32;
    let mut u = a.clone();
    while u.is_divisible(&pp) {
        u /= &pp;
        v += 1;
    }
    if v % 2 != 0 {
        return None;
    }
    let f = e - v;
    // lift a root of u mod p to mod p^f by Hensel's lemma
    let mut r = tonelli_shanks(&u, &pp)?;
    let mut modulus;
    let mut prec = 1u32;
    while prec < f {
        prec = (2 * prec).min(f);
        modulus = pp.clone().pow(prec);
        // r <- r - (r^2 - u) / (2r) mod p^prec
        let num = (Integer::from(&r * &r) - &u).rem_euc(&modulus);
        let inv = Integer::from(2 * &r).invert(&modulus).ok()?;
        r = (r - num * inv).rem_euc(&modulus);
    }
    let root = (Integer::from(&r) * pp.pow(v / 2)).rem_euc(&pe);
    debug_assert_eq!(Integer::from(&root * &root).rem_euc(&pe), a);
    Some(root)
}

/// A validated product n = p0 p1 ... pk of distinct odd primes together with
/// the derived twist index m in {n, 2n} with m = 5, 6, 7 mod 8 (when one
/// exists) and m* = (-1)^((n-1)/2) m.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquarefreeProduct {
    /// p0 first (the unique prime not 1 mod 8 when the family flag is set),
    /// remaining primes ascending.
    pub primes: Vec<u64>,
    pub n: u64,
    pub k: usize,
    pub m: Option<u64>,
    pub m_star: Option<i64>,
    /// Set iff exactly one prime is not 1 mod 8 (placed as p0).
    pub seed_family: bool,
}

impl SquarefreeProduct {
    /// m exists and is 5, 6 or 7 mod 8: the odd-analytic-rank branch.
    pub fn has_twist_index(&self) -> bool {
        self.m.is_some()
    }
}

/// Validate a list of primes and assemble the canonical ordering and the
/// derived m, m*. Missing m is reported via the field, not an error: the
/// object still serves the non-congruent screening path.
pub fn validate_primes(primes: &[u64]) -> Result<SquarefreeProduct, NtError> {
    if primes.is_empty() {
        return Err(NtError::EmptyInput);
    }
    let mut seen = primes.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != primes.len() {
        return Err(NtError::DuplicatePrimes);
    }
    for &p in primes {
        if p == 2 || !is_prime_u64(p) {
            return Err(NtError::NotPrime(p.to_string()));
        }
    }
    let not_one: Vec<u64> = seen.iter().copied().filter(|p| p % 8 != 1).collect();
    let seed_family = not_one.len() == 1;
    let ordered: Vec<u64> = if seed_family {
        let p0 = not_one[0];
        let mut rest: Vec<u64> = seen.iter().copied().filter(|&p| p != p0).collect();
        rest.sort_unstable();
        let mut v = vec![p0];
        v.extend(rest);
        v
    } else {
        seen
    };
    let mut n: u64 = 1;
    for &p in &ordered {
        n = n.checked_mul(p).ok_or_else(|| NtError::RangeCap("product overflow".into()))?;
    }
    let m = match n % 8 {
        5 | 7 => Some(n),
        3 => Some(2 * n),
        _ => None,
    };
    let m_star = m.map(|m| if n % 4 == 1 { m as i64 } else { -(m as i64) });
    Ok(SquarefreeProduct {
        k: ordered.len() - 1,
        primes: ordered,
        n,
        m,
        m_star,
        seed_family,
    })
}

/// Trial-division factorization for scan-sized inputs (cap 1e7); returns the
/// sorted prime list when n is squarefree and odd, None otherwise.
pub fn factor_squarefree_odd(n: u64) -> Option<Vec<u64>> {
    if n == 0 || n > 10_000_000 || n % 2 == 0 {
        return None;
    }
    let mut rem = n;
    let mut out = Vec::new();
    let mut d = 3u64;
    while d * d <= rem {
        if rem % d == 0 {
            rem /= d;
            if rem % d == 0 {
                return None; // square factor
            }
            out.push(d);
        }
        d += 2;
    }
    if rem > 1 {
        out.push(rem);
    }
    Some(out)
}

/// Little-endian digit helper used by certificate serialization.
pub fn integer_from_digits(digits: &[u64]) -> Integer {
    Integer::from_digits(digits, Order::Lsf)
}

//! The ideal class group of Q(sqrt(-2n)) realized as reduced binary
//! quadratic forms of discriminant -8n: enumeration, Gauss composition,
//! genus characters, and the 4-rank quantity driving the main criterion.

use crate::ntheory::{factor_squarefree_odd, jacobi, SquarefreeProduct};
use rug::Integer;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CgError {
    NotSquarefree(u64),
    DiscriminantMismatch,
    NoCoprimeValue,
    BadDivisor,
}

impl fmt::Display for CgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CgError::NotSquarefree(n) => write!(f, "{n} is not an odd squarefree integer"),
            CgError::DiscriminantMismatch => write!(f, "forms have different discriminants"),
            CgError::NoCoprimeValue => {
                write!(f, "no represented value coprime to the modulus in scan range")
            }
            CgError::BadDivisor => write!(f, "argument does not divide n"),
        }
    }
}

impl std::error::Error for CgError {}

/// A primitive positive-definite integral binary quadratic form (a, b, c).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        QuadForm { a, b, c }
    }

    pub fn disc(&self) -> i64 {
        let d = self.b as i128 * self.b as i128 - 4 * self.a as i128 * self.c as i128;
        i64::try_from(d).expect("discriminant fits i64")
    }

    pub fn is_primitive(&self) -> bool {
        gcd(gcd(self.a.abs(), self.b.abs()), self.c.abs()) == 1
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        b.abs() <= a && a <= c && (b >= 0 || (b.abs() != a && a != c))
    }

    /// Value a x^2 + b x y + c y^2.
    pub fn eval(&self, x: i64, y: i64) -> i64 {
        let v = self.a as i128 * (x as i128 * x as i128)
            + self.b as i128 * (x as i128 * y as i128)
            + self.c as i128 * (y as i128 * y as i128);
        i64::try_from(v).expect("form value fits i64")
    }

    /// Reduced representative of the same class.
    pub fn reduce(&self) -> QuadForm {
        let (mut a, mut b, mut c) = (self.a as i128, self.b as i128, self.c as i128);
        loop {
            // normalize b into (-a, a]
            let two_a = 2 * a;
            let mut r = b.rem_euclid(two_a);
            if r > a {
                r -= two_a;
            }
            let q = (b - r) / two_a;
            c -= q * (b + r) / 2;
            b = r;
            if a > c {
                std::mem::swap(&mut a, &mut c);
                b = -b;
                continue;
            }
            break;
        }
        if b < 0 && (a == c || -b == a) {
            b = -b;
        }
        QuadForm {
            a: i64::try_from(a).unwrap(),
            b: i64::try_from(b).unwrap(),
            c: i64::try_from(c).unwrap(),
        }
    }

    /// Reduced inverse class.
    pub fn inverse(&self) -> QuadForm {
        QuadForm::new(self.a, -self.b, self.c).reduce()
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// The 2-structure snapshot of the class group of discriminant -8n.
#[derive(Debug, Clone, Serialize)]
pub struct ClassGroupSnapshot {
    pub n: u64,
    pub discriminant: i64,
    pub reduced_forms: Vec<QuadForm>,
    pub class_number: usize,
    /// Ambiguous classes indexed by positive divisors d | n.
    pub two_torsion: Vec<(u64, QuadForm)>,
    #[serde(skip)]
    index: BTreeMap<QuadForm, usize>,
}

impl ClassGroupSnapshot {
    pub fn principal(&self) -> QuadForm {
        QuadForm::new(1, 0, 2 * self.n as i64).reduce()
    }

    /// Index of a class in the reduced-form list.
    pub fn class_index(&self, f: &QuadForm) -> usize {
        *self
            .index
            .get(&f.reduce())
            .expect("reduced form of matching discriminant")
    }
}

/// Enumerate all reduced primitive forms of discriminant -8n.
pub fn enumerate_reduced_forms(n: u64) -> Result<ClassGroupSnapshot, CgError> {
    if n % 2 == 0 || factor_squarefree_odd(n).is_none() {
        return Err(CgError::NotSquarefree(n));
    }
    let d: i64 = -8 * n as i64;
    let mut forms = Vec::new();
    let a_max = ((-d as f64) / 3.0).sqrt() as i64 + 1;
    for a in 1..=a_max {
        // b even since disc = 0 mod 4
        let mut b = 0i64;
        while b <= a {
            let num = b as i128 * b as i128 - d as i128;
            if num % (4 * a as i128) == 0 {
                let c = i64::try_from(num / (4 * a as i128)).unwrap();
                if c >= a {
                    let f = QuadForm::new(a, b, c);
                    if f.is_primitive() {
                        forms.push(f);
                        if b != 0 && b != a && a != c {
                            forms.push(QuadForm::new(a, -b, c));
                        }
                    }
                }
            }
            b += 2;
        }
    }
    forms.sort_unstable();
    let index: BTreeMap<QuadForm, usize> =
        forms.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let mut two_torsion = Vec::new();
    for dd in divisors(n) {
        let f = QuadForm::new(dd as i64, 0, (2 * n / dd) as i64).reduce();
        two_torsion.push((dd, f));
    }
    Ok(ClassGroupSnapshot {
        n,
        discriminant: d,
        class_number: forms.len(),
        reduced_forms: forms,
        two_torsion,
        index,
    })
}

/// Positive divisors, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for p in factor_squarefree_odd(n).expect("squarefree odd") {
        let mut ext: Vec<u64> = out.iter().map(|d| d * p).collect();
        out.append(&mut ext);
    }
    out.sort_unstable();
    out
}

/// Find coprime (x, y) with gcd(f(x,y), modulus) = 1 by a bounded scan.
fn represent_coprime(f: &QuadForm, modulus: i64) -> Result<(i64, i64), CgError> {
    for bound in [8i64, 40] {
        for x in 0..=bound {
            for sy in -bound..=bound {
                if gcd(x, sy) != 1 {
                    continue;
                }
                let v = f.eval(x, sy);
                if v != 0 && gcd(v, modulus) == 1 {
                    return Ok((x, sy));
                }
            }
        }
    }
    Err(CgError::NoCoprimeValue)
}

/// Apply the unimodular substitution [[x, u], [y, v]] to f.
fn transform(f: &QuadForm, x: i64, u: i64, y: i64, v: i64) -> QuadForm {
    debug_assert_eq!(x as i128 * v as i128 - u as i128 * y as i128, 1);
    let (a, b, c) = (f.a as i128, f.b as i128, f.c as i128);
    let (x, u, y, v) = (x as i128, u as i128, y as i128, v as i128);
    let a2 = a * x * x + b * x * y + c * y * y;
    let b2 = 2 * a * x * u + b * (x * v + u * y) + 2 * c * y * v;
    let c2 = a * u * u + b * u * v + c * v * v;
    QuadForm {
        a: i64::try_from(a2).unwrap(),
        b: i64::try_from(b2).unwrap(),
        c: i64::try_from(c2).unwrap(),
    }
}

/// Extended gcd: returns (g, s, t) with s*a + t*b = g.
fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, s, t) = egcd(b, a.rem_euclid(b));
        (g, t, s - (a.div_euclid(b)) * t)
    }
}

/// Gauss composition via united forms: replace g by an equivalent form whose
/// leading coefficient is coprime to f.a, make the middle coefficients
/// concordant by CRT, and multiply.
pub fn compose(f: &QuadForm, g: &QuadForm) -> Result<QuadForm, CgError> {
    if f.disc() != g.disc() {
        return Err(CgError::DiscriminantMismatch);
    }
    let d = f.disc();
    let (x, y) = represent_coprime(g, f.a)?;
    let (mut gg, mut s, mut t) = egcd(x, y);
    if gg < 0 {
        gg = -gg;
        s = -s;
        t = -t;
    }
    debug_assert_eq!(gg, 1);
    // unimodular completion [[x, -t], [y, s]] has det x*s + t*y = 1
    let g2 = transform(g, x, -t, y, s);
    debug_assert_eq!(gcd(g2.a, f.a), 1);
    let (a1, b1) = (f.a as i128, f.b as i128);
    let (a2, b2) = (g2.a as i128, g2.b as i128);
    // B = b1 mod 2a1, B = b2 mod 2a2 (solvable: b1, b2 both even here)
    let (_, inv, _) = egcd(
        i64::try_from(a1 % a2).unwrap().rem_euclid(g2.a),
        g2.a,
    );
    let tt = ((b2 - b1) / 2 % a2) * inv as i128 % a2;
    let b3 = b1 + 2 * a1 * tt;
    let a3 = a1 * a2;
    debug_assert_eq!((b3 * b3 - d as i128).rem_euclid(4 * a3), 0);
    let c3 = (b3 * b3 - d as i128) / (4 * a3);
    let b3r = b3.rem_euclid(4 * a3); // keep magnitudes sane before reduction
    let c3r = (b3r * b3r - d as i128) / (4 * a3);
    Ok(QuadForm {
        a: i64::try_from(a3).unwrap_or_else(|_| panic!("composition overflow")),
        b: i64::try_from(b3r).unwrap(),
        c: i64::try_from(c3r.max(c3.min(c3r))).unwrap(),
    }
    .reduce())
}

/// Genus-character vector of the class of f: component j is 0 iff the class
/// fixes sqrt(p_j*), read off a represented value coprime to 2n.
pub fn genus_character_vector(
    f: &QuadForm,
    ctx: &SquarefreeProduct,
) -> Result<Vec<u8>, CgError> {
    let two_n = 2 * ctx.n as i64;
    if f.disc() != -4 * two_n {
        return Err(CgError::DiscriminantMismatch);
    }
    let (x, y) = represent_coprime(f, two_n)?;
    let r = Integer::from(f.eval(x, y));
    let mut v = Vec::with_capacity(ctx.primes.len());
    for &p in &ctx.primes {
        let p_star = if p % 4 == 1 { p as i64 } else { -(p as i64) };
        let chi = Integer::from(p_star).kronecker(&r);
        debug_assert!(chi == 1 || chi == -1);
        v.push(if chi == 1 { 0 } else { 1 });
    }
    Ok(v)
}

/// Whether the ambiguous class of divisor d fixes sqrt(p*): the reciprocity
/// rule (d/p) = 1 for p not dividing d, (2n/d / p) = 1 for p | d.
pub fn sigma_pi_d_fixes_sqrt_p_star(
    d: u64,
    p: u64,
    ctx: &SquarefreeProduct,
) -> Result<bool, CgError> {
    if ctx.n % d != 0 || ctx.n % p != 0 || !ctx.primes.contains(&p) {
        return Err(CgError::BadDivisor);
    }
    let pp = Integer::from(p);
    let sym = if d % p != 0 {
        jacobi(&Integer::from(d), &pp).unwrap()
    } else {
        jacobi(&Integer::from(2 * ctx.n / d), &pp).unwrap()
    };
    Ok(sym == 1)
}

/// dim over GF(2) of A[4]/A[2], computed as (k+1) minus the GF(2) rank of
/// the genus-character matrix of the prime ambiguous classes.
pub fn four_rank_defect(ctx: &SquarefreeProduct) -> usize {
    let kp1 = ctx.primes.len();
    // row i = genus vector of the ambiguous class of divisor p_i, by the
    // reciprocity rule (no form arithmetic needed)
    let mut rows: Vec<u64> = Vec::with_capacity(kp1);
    for &d in &ctx.primes {
        let mut row = 0u64;
        for (j, &p) in ctx.primes.iter().enumerate() {
            let fixes = sigma_pi_d_fixes_sqrt_p_star(d, p, ctx).unwrap();
            if !fixes {
                row |= 1 << j;
            }
        }
        rows.push(row);
    }
    kp1 - gf2_rank(&mut rows)
}

/// GF(2) rank of bit-row matrix; consumes the scratch rows.
pub fn gf2_rank(rows: &mut [u64]) -> usize {
    let mut rank = 0;
    for bit in 0..64 {
        let mask = 1u64 << bit;
        if let Some(pos) = (rank..rows.len()).find(|&i| rows[i] & mask != 0) {
            rows.swap(rank, pos);
            let pivot = rows[rank];
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && *row & mask != 0 {
                    *row ^= pivot;
                }
            }
            rank += 1;
        }
    }
    rank
}

/// Condition on dim A[4]/A[2]: must be 0 for n = +-3 mod 8 and 1 otherwise.
pub fn condition_11_holds(ctx: &SquarefreeProduct) -> bool {
    let target = if ctx.n % 8 == 3 || ctx.n % 8 == 5 { 0 } else { 1 };
    four_rank_defect(ctx) == target
}

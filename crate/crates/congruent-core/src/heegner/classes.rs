//! Ideal class representatives of discriminant -8n chosen with odd prime
//! norms, the CM points they define on the modular curve of level 32, and
//! the quadratic characters cutting out subfields of the ring class field.

use super::HeegnerError;
use crate::classgroup::{compose, divisors, enumerate_reduced_forms, ClassGroupSnapshot, QuadForm};
use crate::ntheory::{is_prime_u64, jacobi_i64, sqrt_mod, SquarefreeProduct};
use rug::{Complex, Integer};

/// One ideal class together with a representative integral ideal of odd
/// prime norm: the pair (a, b) with b^2 = -2n mod a, the sign of b fixed by
/// matching the reduced form (a, 2b, *) against the class.
#[derive(Debug, Clone)]
pub struct ClassRep {
    /// Index into the reduced-form list.
    pub index: usize,
    /// Norm of the representative ideal (1 for the principal class).
    pub norm: u64,
    /// Square root of -2n modulo the norm, in [0, norm).
    pub root: u64,
}

/// The class group with a prime-norm representative per class and the
/// subgroup of squares.
#[derive(Debug, Clone)]
pub struct HeegnerClasses {
    pub snap: ClassGroupSnapshot,
    pub reps: Vec<ClassRep>,
    /// Sorted distinct indices of the subgroup 2A.
    pub squares: Vec<usize>,
}

impl HeegnerClasses {
    pub fn build(ctx: &SquarefreeProduct) -> Result<Self, HeegnerError> {
        let snap = enumerate_reduced_forms(ctx.n)
            .map_err(|e| HeegnerError::ClassRep(e.to_string()))?;
        let need_one_mod_four = ctx.n % 4 == 3;
        let mut reps = Vec::with_capacity(snap.class_number);
        for (index, form) in snap.reduced_forms.iter().enumerate() {
            if *form == snap.principal() {
                reps.push(ClassRep { index, norm: 1, root: 0 });
                continue;
            }
            reps.push(find_rep(index, form, ctx, need_one_mod_four)?);
        }
        let mut squares: Vec<usize> = snap
            .reduced_forms
            .iter()
            .map(|f| snap.class_index(&compose(f, f).expect("same discriminant")))
            .collect();
        squares.sort_unstable();
        squares.dedup();
        Ok(HeegnerClasses { snap, reps, squares })
    }

    pub fn identity(&self) -> usize {
        self.snap.class_index(&self.snap.principal())
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        let f = compose(&self.snap.reduced_forms[i], &self.snap.reduced_forms[j])
            .expect("same discriminant");
        self.snap.class_index(&f)
    }

    pub fn inv(&self, i: usize) -> usize {
        self.snap.class_index(&self.snap.reduced_forms[i].inverse())
    }

    /// Class of the ramified prime above 2 (form (2, 0, n)).
    pub fn ramified_two(&self) -> usize {
        self.snap.class_index(&QuadForm::new(2, 0, self.snap.n as i64).reduce())
    }

    /// Ambiguous class attached to a positive divisor d of n.
    pub fn ambiguous(&self, d: u64) -> usize {
        let f = QuadForm::new(d as i64, 0, (2 * self.snap.n / d) as i64).reduce();
        self.snap.class_index(&f)
    }

    /// Genus character of an odd divisor d = 1 mod 4: (norm / d).
    pub fn chi_genus(&self, d: u64, class: usize) -> i32 {
        debug_assert_eq!(d % 4, 1);
        jacobi_i64(self.reps[class].norm as i64, d as i64)
    }

    /// Character of Q(sqrt(-d)) evaluated at the class via its norm:
    /// the Kronecker symbol of the fundamental discriminant.
    pub fn chi_imaginary(&self, d: u64, class: usize) -> i32 {
        let md = -(d as i64);
        let fund = if md.rem_euclid(4) == 1 { md } else { 4 * md };
        Integer::from(fund).kronecker(&Integer::from(self.reps[class].norm))
            .clamp(-1, 1) as i32
    }

    /// CM point in the upper half plane attached to the representative.
    pub fn tau(&self, class: usize, prec: u32) -> Complex {
        let rep = &self.reps[class];
        let n = self.snap.n;
        let a = rep.norm as i64;
        let w = (Complex::with_val(prec, 2 * n) ).sqrt(); // sqrt(2n) real
        let im = Complex::with_val(prec, (0, 1)) * &w;
        if n % 4 == 1 {
            // B = root mod a, B = 0 mod 8
            let b = crt_mod8(rep.root as i64, a, 0);
            (im - b) / (8 * a) as i32
        } else {
            // B = -root mod a, B = 0 mod 8, then shift by 2a
            let b = crt_mod8(-(rep.root as i64), a, 0);
            (im + (b + 2 * a)) / (8 * a) as i32
        }
    }

    /// Smallest upper-half-plane height among all CM points: sqrt(2n) / 8a.
    pub fn min_height(&self) -> f64 {
        let n = self.snap.n as f64;
        let amax = self.reps.iter().map(|r| r.norm).max().unwrap_or(1) as f64;
        (2.0 * n).sqrt() / (8.0 * amax)
    }
}

/// x with x = r mod a (a odd) and x = target mod 8, reduced near zero.
fn crt_mod8(r: i64, a: i64, target: i64) -> i64 {
    let r = r.rem_euclid(a);
    let mut x = r;
    while x.rem_euclid(8) != target.rem_euclid(8) {
        x += a;
    }
    x
}

fn find_rep(
    index: usize,
    form: &QuadForm,
    ctx: &SquarefreeProduct,
    need_one_mod_four: bool,
) -> Result<ClassRep, HeegnerError> {
    let two_n = 2 * ctx.n;
    let mut cands: Vec<u64> = Vec::new();
    for x in 0i64..=60 {
        for y in -60i64..=60 {
            if x == 0 && y <= 0 {
                continue;
            }
            let v = form.eval(x, y);
            if v <= 0 {
                continue;
            }
            let v = v as u64;
            if v % 2 == 1
                && gcd_u64(v, two_n) == 1
                && (!need_one_mod_four || v % 4 == 1)
                && is_prime_u64(v)
            {
                cands.push(v);
            }
        }
    }
    cands.sort_unstable();
    cands.dedup();
    for v in cands {
        let minus_two_n = Integer::from(-(two_n as i64));
        let b0 = match sqrt_mod(&minus_two_n, v, 1) {
            Some(b) => b.to_u64().expect("residue fits"),
            None => continue,
        };
        for b in [b0, v - b0] {
            let c = ((b as i128 * b as i128 + two_n as i128) / v as i128) as i64;
            let cand = QuadForm::new(v as i64, 2 * b as i64, c).reduce();
            if cand == *form {
                return Ok(ClassRep { index, norm: v, root: b });
            }
        }
    }
    Err(HeegnerError::ClassRep(format!(
        "no odd prime norm found for form ({}, {}, {})",
        form.a, form.b, form.c
    )))
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd_u64(b, a % b) }
}

/// Divisors of n that are multiples of the leading prime p0 (the index set
/// of the traces for n = 1 mod 4), ascending.
pub fn trace_divisors_odd(ctx: &SquarefreeProduct) -> Vec<u64> {
    let p0 = ctx.primes[0];
    divisors(ctx.n).into_iter().filter(|d| d % p0 == 0).collect()
}

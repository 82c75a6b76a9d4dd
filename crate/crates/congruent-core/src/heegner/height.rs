//! Canonical height on the quadratic twist Y^2 = X^3 - M^2 X, decomposed
//! place by place: a telescoped archimedean sum over repeated doubling,
//! exact contributions from primes of good reduction read off the
//! denominator, and p-adic doubling at the bad primes dividing 2M.

use super::HeegnerError;
use rug::ops::{Pow, RemRounding};
use rug::{Float, Integer, Rational};

/// Number of doubling steps in the telescoped local sums.
const STEPS: u32 = 64;

/// Canonical height of the rational point (x, y) on Y^2 = X^3 - M^2 X,
/// normalized so that h(P) ~ (1/2) log H(x(P)) for large points.
pub fn canonical_height(
    x: &Rational,
    y: &Rational,
    m: u64,
    digits: u32,
) -> Result<Float, HeegnerError> {
    let prec = digits * 4 + 64;
    if y.cmp0() == std::cmp::Ordering::Equal {
        return Ok(Float::new(prec));
    }
    let mm = Integer::from(m);
    let msq = Rational::from(mm.clone().pow(2));

    // good primes: v_p(den x) = 2 v_p(e) and the local sum collapses to
    // (1/2) v_p(den x) log p; strip the primes dividing 2M first
    let mut den = x.denom().clone();
    let mut bad: Vec<u64> = vec![2];
    for p in prime_factors(m) {
        bad.push(p);
    }
    for &p in &bad {
        let pz = Integer::from(p);
        while den.is_divisible(&pz) {
            den /= &pz;
        }
    }
    let mut total = Float::with_val(prec, &den).ln() / 2u32;

    // bad primes dividing 2M
    for &p in &bad {
        total += local_at_bad_prime(x, y, &msq, p, prec)?;
    }

    // archimedean place
    total += local_archimedean(x, y, &msq, prec);
    Ok(total)
}

/// Telescoped archimedean local sum:
/// sum_{j<N} 4^-(j+1) log|2 y_j| + 4^-N (1/2) log+ |x_N|.
fn local_archimedean(x: &Rational, y: &Rational, msq: &Rational, prec: u32) -> Float {
    let msq_f = Float::with_val(prec, msq);
    let mut xf = Float::with_val(prec, x);
    let mut yf = Float::with_val(prec, y);
    let mut total = Float::new(prec);
    let mut scale = Float::with_val(prec, 0.25);
    for _ in 0..STEPS {
        let two_y = yf.clone() * 2u32;
        total += two_y.clone().abs().ln() * &scale;
        // doubling: lambda = (3x^2 - M^2) / 2y
        let lambda = (xf.clone().square() * 3u32 - &msq_f) / &two_y;
        let x2 = lambda.clone().square() - xf.clone() * 2u32;
        yf = lambda * (xf - &x2) - yf;
        xf = x2;
        scale /= 4u32;
    }
    let absx = xf.abs();
    if absx > 1u32 {
        // scale is 4^-(N+1) here, so this is 4^-N (1/2) log|x_N|
        total += absx.ln() * &scale * 2u32;
    }
    total
}

/// Local sum at a bad prime p | 2M via p-adic doubling. Once the iterate
/// enters the formal group the remaining tail is exactly
/// 4^-j (-v(x_j)/2) log p.
fn local_at_bad_prime(
    x: &Rational,
    y: &Rational,
    msq: &Rational,
    p: u64,
    prec: u32,
) -> Result<Float, HeegnerError> {
    let logp = Float::with_val(prec, p).ln();
    // working p-adic precision in p-digits
    let mut k = (1100.0 / (p as f64).log2()).ceil() as u32;
    'retry: loop {
        let ctx = PadicCtx::new(p, k);
        let msq_p = ctx.from_rational(msq);
        let mut xp = ctx.from_rational(x);
        let mut yp = ctx.from_rational(y);
        let mut total = Float::new(prec);
        let mut scale = Float::with_val(prec, 0.25);
        for j in 0..STEPS {
            if xp.val < 0 {
                // formal group: exact tail, scale here is 4^-(j+1)
                let c = Float::with_val(prec, -xp.val);
                total += c * &logp * scale * 2u32;
                return Ok(total);
            }
            let two_y = ctx.scale(&yp, 2);
            if two_y.is_zero() || two_y.val > (k as i64) / 2 {
                k *= 3;
                if k > 2_000_000 {
                    return Err(HeegnerError::Precision(format!(
                        "p-adic precision exhausted at p = {p} (step {j})"
                    )));
                }
                continue 'retry;
            }
            total += Float::with_val(prec, -two_y.val) * &logp * &scale;
            let num = ctx.sub(&ctx.scale(&ctx.mul(&xp, &xp), 3), &msq_p);
            let lambda = ctx.div(&num, &two_y)?;
            let x2 = ctx.sub(&ctx.mul(&lambda, &lambda), &ctx.scale(&xp, 2));
            yp = ctx.sub(&ctx.mul(&lambda, &ctx.sub(&xp, &x2)), &yp);
            xp = x2;
            scale /= 4u32;
        }
        // never entered the formal group: remaining tail is O(4^-N), and
        // x_N has v >= 0 so the log+ term vanishes
        return Ok(total);
    }
}

/// Truncated p-adic number: p^val * unit with unit known mod p^k.
#[derive(Debug, Clone)]
struct Padic {
    val: i64,
    /// Unit part in [0, p^k); zero means the number is 0 to precision.
    unit: Integer,
}

impl Padic {
    fn is_zero(&self) -> bool {
        self.unit.cmp0() == std::cmp::Ordering::Equal
    }
}

struct PadicCtx {
    p: Integer,
    k: u32,
    modulus: Integer,
}

impl PadicCtx {
    fn new(p: u64, k: u32) -> Self {
        let p = Integer::from(p);
        let modulus = p.clone().pow(k);
        PadicCtx { p, k, modulus }
    }

    fn normalize(&self, mut val: i64, mut unit: Integer) -> Padic {
        unit = unit.rem_euc(&self.modulus);
        if unit.cmp0() == std::cmp::Ordering::Equal {
            return Padic { val: 0, unit };
        }
        while unit.is_divisible(&self.p) {
            unit /= &self.p;
            val += 1;
        }
        Padic { val, unit }
    }

    fn from_integer(&self, z: &Integer) -> Padic {
        self.normalize(0, z.clone())
    }

    fn from_rational(&self, r: &Rational) -> Padic {
        let num = self.from_integer(r.numer());
        let den = self.from_integer(r.denom());
        self.div(&num, &den).expect("nonzero denominator")
    }

    fn mul(&self, a: &Padic, b: &Padic) -> Padic {
        if a.is_zero() || b.is_zero() {
            return Padic { val: 0, unit: Integer::new() };
        }
        self.normalize(a.val + b.val, a.unit.clone() * &b.unit)
    }

    fn div(&self, a: &Padic, b: &Padic) -> Result<Padic, HeegnerError> {
        if b.is_zero() {
            return Err(HeegnerError::Precision("p-adic division by zero".into()));
        }
        if a.is_zero() {
            return Ok(Padic { val: 0, unit: Integer::new() });
        }
        let inv = b
            .unit
            .clone()
            .invert(&self.modulus)
            .map_err(|_| HeegnerError::Precision("p-adic unit not invertible".into()))?;
        Ok(self.normalize(a.val - b.val, a.unit.clone() * inv))
    }

    fn scale(&self, a: &Padic, c: i64) -> Padic {
        if a.is_zero() {
            return a.clone();
        }
        self.normalize(a.val, a.unit.clone() * Integer::from(c))
    }

    fn sub(&self, a: &Padic, b: &Padic) -> Padic {
        if b.is_zero() {
            return a.clone();
        }
        if a.is_zero() {
            return self.scale(b, -1);
        }
        // align to the smaller valuation
        let v = a.val.min(b.val);
        let sa = a.val - v;
        let sb = b.val - v;
        if sa >= self.k as i64 {
            return self.scale(b, -1);
        }
        if sb >= self.k as i64 {
            return a.clone();
        }
        let ua = a.unit.clone() * self.p.clone().pow(sa as u32);
        let ub = b.unit.clone() * self.p.clone().pow(sb as u32);
        self.normalize(v, ua - ub)
    }
}

fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            out.push(p);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

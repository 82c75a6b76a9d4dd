//! Exact arithmetic in real and imaginary quadratic fields Q(sqrt D) and
//! the group law of y^2 = x^3 - x over them, including point halving.

use rug::{Integer, Rational};

/// Element a + b sqrt(D) of Q(sqrt D); the ambient D lives in QuadField.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qq {
    pub a: Rational,
    pub b: Rational,
}

impl Qq {
    pub fn rational(a: Rational) -> Self {
        Qq {
            a,
            b: Rational::new(),
        }
    }

    pub fn from_i64(a: i64) -> Self {
        Qq::rational(Rational::from(a))
    }

    pub fn is_rational(&self) -> bool {
        self.b.cmp0() == std::cmp::Ordering::Equal
    }

    pub fn is_pure(&self) -> bool {
        self.a.cmp0() == std::cmp::Ordering::Equal
    }

    pub fn is_zero(&self) -> bool {
        self.is_rational() && self.a.cmp0() == std::cmp::Ordering::Equal
    }
}

/// The field Q(sqrt D) for a non-square integer D.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadField {
    pub d: i64,
}

impl QuadField {
    pub fn new(d: i64) -> Self {
        assert!(d != 0 && d != 1, "degenerate field");
        QuadField { d }
    }

    pub fn add(&self, p: &Qq, q: &Qq) -> Qq {
        Qq {
            a: Rational::from(&p.a + &q.a),
            b: Rational::from(&p.b + &q.b),
        }
    }

    pub fn sub(&self, p: &Qq, q: &Qq) -> Qq {
        Qq {
            a: Rational::from(&p.a - &q.a),
            b: Rational::from(&p.b - &q.b),
        }
    }

    pub fn neg(&self, p: &Qq) -> Qq {
        Qq {
            a: -p.a.clone(),
            b: -p.b.clone(),
        }
    }

    pub fn mul(&self, p: &Qq, q: &Qq) -> Qq {
        let aa = Rational::from(&p.a * &q.a) + Rational::from(&p.b * &q.b) * self.d;
        let bb = Rational::from(&p.a * &q.b) + Rational::from(&p.b * &q.a);
        Qq { a: aa, b: bb }
    }

    pub fn conj(&self, p: &Qq) -> Qq {
        Qq {
            a: p.a.clone(),
            b: -p.b.clone(),
        }
    }

    /// Field norm a^2 - D b^2.
    pub fn norm(&self, p: &Qq) -> Rational {
        Rational::from(&p.a * &p.a) - Rational::from(&p.b * &p.b) * self.d
    }

    pub fn inv(&self, p: &Qq) -> Qq {
        let n = self.norm(p);
        assert!(n.cmp0() != std::cmp::Ordering::Equal, "inverse of zero");
        Qq {
            a: Rational::from(&p.a / &n),
            b: -Rational::from(&p.b / &n),
        }
    }

    pub fn div(&self, p: &Qq, q: &Qq) -> Qq {
        self.mul(p, &self.inv(q))
    }

    pub fn scale(&self, p: &Qq, s: &Rational) -> Qq {
        Qq {
            a: Rational::from(&p.a * s),
            b: Rational::from(&p.b * s),
        }
    }

    /// Square root in the field, if one exists: solve (s + t sqrt D)^2 = p.
    pub fn sqrt(&self, p: &Qq) -> Option<Qq> {
        if p.is_zero() {
            return Some(Qq::from_i64(0));
        }
        if p.b.cmp0() == std::cmp::Ordering::Equal {
            // sqrt of a rational: either rational or rational * sqrt(D)
            if let Some(s) = rational_sqrt(&p.a) {
                return Some(Qq::rational(s));
            }
            let over_d = Rational::from(&p.a) / Rational::from(self.d);
            if let Some(t) = rational_sqrt(&over_d) {
                return Some(Qq {
                    a: Rational::new(),
                    b: t,
                });
            }
            return None;
        }
        // s^2 + D t^2 = a, 2 s t = b: s^2 is a root of u^2 - a u + D b^2 / 4
        let disc = Rational::from(&p.a * &p.a) - Rational::from(&p.b * &p.b) * self.d;
        let root = rational_sqrt(&disc)?;
        for sign in [1i32, -1] {
            let s2 = (Rational::from(&p.a) + Rational::from(&root) * sign) / 2u32;
            if s2.cmp0() == std::cmp::Ordering::Less {
                continue;
            }
            if let Some(s) = rational_sqrt(&s2) {
                if s.cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                let t = Rational::from(&p.b) / (Rational::from(&s) * 2u32);
                let cand = Qq { a: s, b: t };
                if self.mul(&cand, &cand) == *p {
                    return Some(cand);
                }
            }
        }
        None
    }
}

/// Exact square root of a nonnegative rational, if it is a perfect square.
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if r.cmp0() == std::cmp::Ordering::Less {
        return None;
    }
    let num = r.numer().clone();
    let den = r.denom().clone();
    let sn = num.clone().sqrt();
    let sd = den.clone().sqrt();
    if Integer::from(&sn * &sn) == num && Integer::from(&sd * &sd) == den {
        Some(Rational::from((sn, sd)))
    } else {
        None
    }
}

/// Point of y^2 = x^3 - x over Q(sqrt D).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FPoint {
    Infinity,
    Affine(Qq, Qq),
}

impl FPoint {
    pub fn is_two_torsion(&self) -> bool {
        match self {
            FPoint::Infinity => true,
            FPoint::Affine(_, y) => y.is_zero(),
        }
    }

    /// x rational and y a rational multiple of sqrt(D): the minus part of
    /// E(Q(sqrt D)) under the field involution.
    pub fn in_minus_part(&self) -> bool {
        match self {
            FPoint::Infinity => true,
            FPoint::Affine(x, y) => x.is_rational() && y.is_pure(),
        }
    }
}

/// Rational two-torsion of y^2 = x^3 - x.
pub fn two_torsion() -> Vec<FPoint> {
    vec![
        FPoint::Affine(Qq::from_i64(0), Qq::from_i64(0)),
        FPoint::Affine(Qq::from_i64(1), Qq::from_i64(0)),
        FPoint::Affine(Qq::from_i64(-1), Qq::from_i64(0)),
    ]
}

pub fn on_curve(f: &QuadField, p: &FPoint) -> bool {
    match p {
        FPoint::Infinity => true,
        FPoint::Affine(x, y) => {
            let lhs = f.mul(y, y);
            let rhs = f.sub(&f.mul(&f.mul(x, x), x), x);
            lhs == rhs
        }
    }
}

pub fn ec_neg(f: &QuadField, p: &FPoint) -> FPoint {
    match p {
        FPoint::Infinity => FPoint::Infinity,
        FPoint::Affine(x, y) => FPoint::Affine(x.clone(), f.neg(y)),
    }
}

pub fn ec_add(f: &QuadField, p: &FPoint, q: &FPoint) -> FPoint {
    match (p, q) {
        (FPoint::Infinity, _) => q.clone(),
        (_, FPoint::Infinity) => p.clone(),
        (FPoint::Affine(x1, y1), FPoint::Affine(x2, y2)) => {
            let lambda = if x1 == x2 {
                if f.add(y1, y2).is_zero() {
                    return FPoint::Infinity;
                }
                // tangent slope (3x^2 - 1) / 2y
                let num = f.sub(&f.scale(&f.mul(x1, x1), &Rational::from(3)), &Qq::from_i64(1));
                let den = f.scale(y1, &Rational::from(2));
                f.div(&num, &den)
            } else {
                f.div(&f.sub(y2, y1), &f.sub(x2, x1))
            };
            let x3 = f.sub(&f.sub(&f.mul(&lambda, &lambda), x1), x2);
            let y3 = f.sub(&f.mul(&lambda, &f.sub(x1, &x3)), y1);
            FPoint::Affine(x3, y3)
        }
    }
}

pub fn ec_double(f: &QuadField, p: &FPoint) -> FPoint {
    ec_add(f, p, p)
}

pub fn ec_mul(f: &QuadField, p: &FPoint, n: u32) -> FPoint {
    let mut acc = FPoint::Infinity;
    let mut base = p.clone();
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            acc = ec_add(f, &acc, &base);
        }
        base = ec_double(f, &base);
        k >>= 1;
    }
    acc
}

/// All field-rational points Q with 2Q = P. A half exists iff x, x - 1,
/// x + 1 are all squares in the field; the four sign choices of the roots
/// give the candidate x-coordinates x + r1 r2 + r1 r3 + r2 r3.
pub fn ec_halve(f: &QuadField, p: &FPoint) -> Vec<FPoint> {
    let mut out: Vec<FPoint> = Vec::new();
    let push = |q: FPoint, out: &mut Vec<FPoint>| {
        if !out.contains(&q) {
            out.push(q);
        }
    };
    match p {
        FPoint::Infinity => {
            push(FPoint::Infinity, &mut out);
            for t in two_torsion() {
                push(t, &mut out);
            }
            out
        }
        FPoint::Affine(x, _) => {
            let r1 = match f.sqrt(x) {
                Some(r) => r,
                None => return out,
            };
            let r2 = match f.sqrt(&f.sub(x, &Qq::from_i64(1))) {
                Some(r) => r,
                None => return out,
            };
            let r3 = match f.sqrt(&f.add(x, &Qq::from_i64(1))) {
                Some(r) => r,
                None => return out,
            };
            for s2 in [1i64, -1] {
                for s3 in [1i64, -1] {
                    let b = f.scale(&r2, &Rational::from(s2));
                    let c = f.scale(&r3, &Rational::from(s3));
                    let xq = f.add(
                        x,
                        &f.add(&f.mul(&r1, &b), &f.add(&f.mul(&r1, &c), &f.mul(&b, &c))),
                    );
                    let y2 = f.sub(&f.mul(&f.mul(&xq, &xq), &xq), &xq);
                    if let Some(yq) = f.sqrt(&y2) {
                        for ys in [yq.clone(), f.neg(&yq)] {
                            let cand = FPoint::Affine(xq.clone(), ys);
                            if ec_double(f, &cand) == *p {
                                push(cand, &mut out);
                            }
                        }
                    }
                }
            }
            out
        }
    }
}

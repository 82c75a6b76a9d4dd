//! End-to-end construction of a congruent-number certificate from CM
//! points: trace to the quadratic field, recognize the algebraic point,
//! maximize 2-divisibility, map to the twist Y^2 = X^3 - m^2 X, and read
//! off the rational right triangle of area m.

use super::field::{ec_add, ec_double, ec_halve, two_torsion, FPoint, QuadField, Qq};
use super::height::canonical_height;
use super::points::CMPoints;
use super::HeegnerError;
use crate::ntheory::SquarefreeProduct;
use rug::{Integer, Rational};

/// Exact data of the recognized non-torsion point and its triangle.
#[derive(Debug, Clone)]
pub struct HeegnerPointData {
    /// Largest j with the chi-component in 2^j E(Q(sqrt m*))^- + E[2].
    pub divisibility_index: u32,
    /// A point whose 2^index multiple is the chi-component up to E[2]:
    /// (x, v) with y = v sqrt(m*).
    pub primitive_x: Rational,
    pub primitive_v: Rational,
    /// The same point moved to Y^2 = X^3 - m^2 X.
    pub twist_x: Rational,
    pub twist_y: Rational,
    pub canonical_height: f64,
    /// Right triangle (legs, hypotenuse) with area m.
    pub triangle: (Rational, Rational, Rational),
}

/// Full record of one Heegner-point run.
#[derive(Debug, Clone)]
pub struct HeegnerCertificate {
    pub n: u64,
    pub m: u64,
    pub m_star: i64,
    pub k: usize,
    pub digits: u32,
    pub class_number: usize,
    pub conjugation_residual: f64,
    pub ramified_residual: f64,
    pub distribution_residual: Option<f64>,
    /// The chi-component 4 y_m as (x, v); None when it is the point at
    /// infinity.
    pub chi_point: Option<(Rational, Rational)>,
    /// None when the chi-component is torsion (construction inconclusive).
    pub point: Option<HeegnerPointData>,
}

/// Run the Heegner construction for one n at the given working precision.
pub fn heegner_certificate(
    ctx: &SquarefreeProduct,
    digits: u32,
) -> Result<HeegnerCertificate, HeegnerError> {
    let m = ctx.m.ok_or_else(|| {
        HeegnerError::NotApplicable("no twist index m = 5, 6, 7 mod 8".into())
    })?;
    let m_star = ctx.m_star.expect("m present implies m* present");
    let pts = CMPoints::build(ctx, digits)?;
    let gate = pts.mc.tolerance(digits / 2);

    let conjugation_residual = pts.conjugation_residual();
    let ramified_residual = pts.ramified_residual();
    if conjugation_residual > gate || ramified_residual > gate {
        return Err(HeegnerError::Precision(format!(
            "Galois relation residuals too large at {digits} digits: conj {:e}, ram {:e}",
            conjugation_residual.to_f64(),
            ramified_residual.to_f64()
        )));
    }
    let distribution_residual = if ctx.k >= 1 {
        let r = pts.distribution_residual()?;
        if r > gate {
            return Err(HeegnerError::Precision(format!(
                "distribution residual too large at {digits} digits: {:e}",
                r.to_f64()
            )));
        }
        Some(r.to_f64())
    } else {
        None
    };

    let z4 = pts.chi_log()?;
    let chi_point = pts.recognize(&z4, m_star)?;
    let mut cert = HeegnerCertificate {
        n: ctx.n,
        m,
        m_star,
        k: ctx.k,
        digits,
        class_number: pts.classes.snap.class_number,
        conjugation_residual: conjugation_residual.to_f64(),
        ramified_residual: ramified_residual.to_f64(),
        distribution_residual,
        chi_point: chi_point.clone(),
        point: None,
    };
    let (x, v) = match chi_point {
        None => return Ok(cert),
        Some(p) => p,
    };
    if v.cmp0() == std::cmp::Ordering::Equal {
        return Ok(cert);
    }

    let field = QuadField::new(m_star);
    let p = FPoint::Affine(
        Qq::rational(x),
        Qq {
            a: Rational::new(),
            b: v,
        },
    );
    let max_j = ctx.k as u32 + 2;
    let (index, primitive) = divisibility(&field, &p, max_j)?;
    let (px, pv) = match &primitive {
        FPoint::Affine(x, y) => (x.a.clone(), y.b.clone()),
        FPoint::Infinity => unreachable!("primitive point is affine"),
    };

    // twist map to Y^2 = X^3 - m^2 X
    let twist_x = px.clone() * Rational::from(m_star);
    let twist_y = pv.clone() * Rational::from(m_star) * Rational::from(m_star);
    let triangle = triangle_from_twist(&twist_x, &twist_y, m)?;
    let height = canonical_height(&twist_x, &twist_y, m, digits)?;

    cert.point = Some(HeegnerPointData {
        divisibility_index: index,
        primitive_x: px,
        primitive_v: pv,
        twist_x,
        twist_y,
        canonical_height: height.to_f64(),
        triangle,
    });
    Ok(cert)
}

/// Retry with doubled precision on recognition or precision failures.
pub fn heegner_certificate_escalating(
    ctx: &SquarefreeProduct,
    digits: u32,
    max_digits: u32,
) -> Result<HeegnerCertificate, HeegnerError> {
    let mut d = digits;
    loop {
        match heegner_certificate(ctx, d) {
            Ok(c) => return Ok(c),
            Err(e @ (HeegnerError::Recognition(_) | HeegnerError::Precision(_))) => {
                if d >= max_digits {
                    return Err(e);
                }
                d = (d * 2).min(max_digits);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Find the largest j <= max_j with p in 2^j E^- + E[2], together with a
/// point at that depth, preferring small denominators.
fn divisibility(
    field: &QuadField,
    p: &FPoint,
    max_j: u32,
) -> Result<(u32, FPoint), HeegnerError> {
    let mut layer: Vec<FPoint> = vec![p.clone()];
    for t in two_torsion() {
        layer.push(ec_add(field, p, &t));
    }
    layer.retain(|q| q.in_minus_part() && !q.is_two_torsion());
    if layer.is_empty() {
        return Err(HeegnerError::Torsion(
            "chi-component is torsion after two-torsion translation".into(),
        ));
    }
    let mut index = 0u32;
    let mut best_layer = layer.clone();
    for j in 1..=max_j {
        let mut next: Vec<FPoint> = Vec::new();
        for q in &layer {
            for half in ec_halve(field, q) {
                if half.in_minus_part() && !next.contains(&half) {
                    next.push(half);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        index = j;
        best_layer = next.clone();
        layer = next;
    }
    let primitive = best_layer
        .into_iter()
        .min_by(point_size_order)
        .expect("layer nonempty");
    // sanity: doubling index times lands on p up to E[2]
    let mut check = primitive.clone();
    for _ in 0..index {
        check = ec_double(field, &check);
    }
    let mut ok = check == *p;
    for t in two_torsion() {
        ok = ok || ec_add(field, &check, &t) == *p;
    }
    if !ok {
        return Err(HeegnerError::Torsion(
            "divisibility witness failed verification".into(),
        ));
    }
    Ok((index, primitive))
}

fn point_size_order(a: &FPoint, b: &FPoint) -> std::cmp::Ordering {
    let key = |p: &FPoint| -> (Integer, Integer, Rational) {
        match p {
            FPoint::Infinity => (Integer::new(), Integer::new(), Rational::new()),
            FPoint::Affine(x, y) => (
                x.a.denom().clone(),
                x.a.numer().clone().abs(),
                -y.b.clone(),
            ),
        }
    };
    key(a).cmp(&key(b))
}

/// Right triangle with area m from a non-torsion point (X, Y) on
/// Y^2 = X^3 - m^2 X.
pub fn triangle_from_twist(
    x: &Rational,
    y: &Rational,
    m: u64,
) -> Result<(Rational, Rational, Rational), HeegnerError> {
    if y.cmp0() == std::cmp::Ordering::Equal {
        return Err(HeegnerError::Torsion("two-torsion point has no triangle".into()));
    }
    let ay = y.clone().abs();
    let msq = Rational::from(m) * Rational::from(m);
    let xsq = x.clone() * x;
    let a = (xsq.clone() - &msq).abs() / &ay;
    let b = Rational::from(2 * m) * x.clone().abs() / &ay;
    let c = (xsq + &msq) / &ay;
    debug_assert_eq!(a.clone() * &a + b.clone() * &b, c.clone() * &c);
    debug_assert_eq!(a.clone() * &b, Rational::from(2 * m));
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    Ok((a, b, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ntheory::validate_primes;

    #[test]
    fn m5_end_to_end() {
        let ctx = validate_primes(&[5]).unwrap();
        let cert = heegner_certificate(&ctx, 60).unwrap();
        let data = cert.point.expect("non-torsion point");
        assert_eq!(data.divisibility_index, 1);
        assert_eq!(
            data.triangle,
            (
                Rational::from((3, 2)),
                Rational::from((20, 3)),
                Rational::from((41, 6))
            )
        );
        assert!(data.canonical_height > 0.1);
        assert!(cert.conjugation_residual < 1e-40);
    }

    #[test]
    fn m6_end_to_end() {
        let ctx = validate_primes(&[3]).unwrap();
        let cert = heegner_certificate(&ctx, 60).unwrap();
        let data = cert.point.expect("non-torsion point");
        assert_eq!(data.divisibility_index, 1);
        let (a, b, c) = &data.triangle;
        assert_eq!(a.clone() * b, Rational::from(12));
        assert_eq!(
            a.clone() * a + b.clone() * b,
            c.clone() * c
        );
    }

    #[test]
    fn m7_end_to_end() {
        let ctx = validate_primes(&[7]).unwrap();
        let cert = heegner_certificate(&ctx, 60).unwrap();
        let data = cert.point.expect("non-torsion point");
        assert_eq!(data.divisibility_index, 1);
        let (a, b, _) = &data.triangle;
        assert_eq!(a.clone() * b, Rational::from(14));
    }

    #[test]
    fn triangle_anchor() {
        // (-4, 6) on Y^2 = X^3 - 25X gives the classical area-5 triangle
        let t = triangle_from_twist(&Rational::from(-4), &Rational::from(6), 5).unwrap();
        assert_eq!(
            t,
            (
                Rational::from((3, 2)),
                Rational::from((20, 3)),
                Rational::from((41, 6))
            )
        );
    }
}

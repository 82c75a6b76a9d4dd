//! Certificate schema (version 1): a plain-data, language-neutral record
//! of one certification run. All rationals appear as decimal num/den
//! strings so a congruent verdict re-verifies offline with exact integer
//! arithmetic only.

use crate::classgroup::{condition_11_holds, four_rank_defect};
use crate::criterion::{
    build_graph, condition_11_via_graph, has_proper_even_partition, screen_non_congruent,
    spanning_tree_parity, Parity, ScreenVerdict,
};
use crate::descent::{two_selmer_dim, Place, SelmerReport, TorsorKind};
use crate::heegner::field::{ec_add, ec_double, two_torsion, FPoint, QuadField, Qq};
use crate::heegner::pipeline::{heegner_certificate_escalating, HeegnerCertificate};
use crate::heegner::HeegnerError;
use crate::lfunction::algebraic_part;
use crate::ntheory::{factor_squarefree_odd, validate_primes, SquarefreeProduct};
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use std::fmt;

pub const SCHEMA_VERSION: u32 = 1;

/// Twist index above which the certify path skips the L-value block.
const LVALUE_BOUND: u64 = 5000;

#[derive(Debug, Clone, PartialEq)]
pub enum CertifyError {
    Input(String),
    Internal(String),
}

impl fmt::Display for CertifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertifyError::Input(s) => write!(f, "input: {s}"),
            CertifyError::Internal(s) => write!(f, "internal: {s}"),
        }
    }
}

impl std::error::Error for CertifyError {}

/// Exact rational as decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalStr {
    pub num: String,
    pub den: String,
}

impl RationalStr {
    pub fn from_rational(r: &Rational) -> Self {
        RationalStr {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
        }
    }

    pub fn to_rational(&self) -> Option<Rational> {
        let num = Integer::from_str_radix(&self.num, 10).ok()?;
        let den = Integer::from_str_radix(&self.den, 10).ok()?;
        if den.cmp0() == std::cmp::Ordering::Equal {
            return None;
        }
        Some(Rational::from((num, den)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InputBlock {
    pub primes: Vec<u64>,
    pub n: u64,
    /// The area under test (equals n or 2n on the certify path).
    pub m: u64,
    pub m_star: Option<i64>,
    pub k: usize,
    pub seed_family: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CriterionBlock {
    pub vertices: Vec<u64>,
    pub edges: Vec<(usize, usize)>,
    pub spanning_tree_parity: String,
    pub proper_even_partition: bool,
    pub four_rank_defect: usize,
    pub condition11: bool,
    pub condition11_via_graph: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WitnessEntry {
    pub chart: u8,
    pub z_residue: String,
    pub precision: u32,
    pub valuation: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvidenceEntry {
    pub d: i64,
    /// "isogenous" for the phi-descent torsors, "curve" for psi.
    pub side: String,
    /// "real" or the prime as a decimal string.
    pub place: String,
    pub solvable: bool,
    pub witness: Option<WitnessEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelmerBlock {
    pub m: u64,
    pub phi_dim: usize,
    pub psi_dim: usize,
    pub phi_elements: Vec<i64>,
    pub psi_elements: Vec<i64>,
    pub two_selmer_dim_mod_torsion: usize,
    pub rank_plus_sha2: usize,
    pub exactness_asserted: bool,
    pub evidence: Vec<EvidenceEntry>,
    pub untested_places_note: String,
}

impl SelmerBlock {
    pub fn from_report(r: &SelmerReport) -> Self {
        SelmerBlock {
            m: r.m,
            phi_dim: r.phi_dim,
            psi_dim: r.psi_dim,
            phi_elements: r.phi_elements.clone(),
            psi_elements: r.psi_elements.clone(),
            two_selmer_dim_mod_torsion: r.two_selmer_dim_mod_torsion,
            rank_plus_sha2: r.rank_plus_sha2,
            exactness_asserted: r.exactness_asserted,
            evidence: r
                .evidence
                .iter()
                .map(|e| EvidenceEntry {
                    d: e.d,
                    side: match e.kind {
                        TorsorKind::Cd => "isogenous".into(),
                        TorsorKind::CdPrime => "curve".into(),
                    },
                    place: match e.place {
                        Place::Real => "real".into(),
                        Place::Prime(p) => p.to_string(),
                    },
                    solvable: e.solvable,
                    witness: e.witness.as_ref().map(|w| WitnessEntry {
                        chart: w.chart,
                        z_residue: w.z_residue.clone(),
                        precision: w.precision,
                        valuation: w.valuation,
                    }),
                })
                .collect(),
            untested_places_note: r.untested_places_note.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScreenBlock {
    /// "remark" (some prime not 1 mod 8) or "quartic" (all primes 1 mod 8).
    pub kind: String,
    pub quartic_product: Option<i32>,
    pub non_congruent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PointStr {
    pub x: RationalStr,
    pub y: RationalStr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HeegnerBlock {
    pub digits: u32,
    pub class_number: usize,
    pub conjugation_residual: f64,
    pub ramified_residual: f64,
    pub distribution_residual: Option<f64>,
    /// The chi-component 4 y_m on y^2 = x^3 - x over Q(sqrt m*), written
    /// as (x, v) with y = v sqrt(m*); None when it is the point at infinity.
    pub chi_point: Option<PointStr>,
    pub torsion: bool,
    pub divisibility_index: Option<u32>,
    /// Point whose 2^index multiple is the chi-component up to E[2].
    pub primitive_point: Option<PointStr>,
    /// The primitive point moved to Y^2 = X^3 - m^2 X.
    pub twist_point: Option<PointStr>,
    pub canonical_height: Option<f64>,
    /// Right triangle (leg, leg, hypotenuse) with area m.
    pub triangle: Option<[RationalStr; 3]>,
}

impl HeegnerBlock {
    pub fn from_certificate(c: &HeegnerCertificate) -> Self {
        let chi_point = c.chi_point.as_ref().map(|(x, v)| PointStr {
            x: RationalStr::from_rational(x),
            y: RationalStr::from_rational(v),
        });
        let (index, primitive, twist, height, triangle) = match &c.point {
            None => (None, None, None, None, None),
            Some(p) => (
                Some(p.divisibility_index),
                Some(PointStr {
                    x: RationalStr::from_rational(&p.primitive_x),
                    y: RationalStr::from_rational(&p.primitive_v),
                }),
                Some(PointStr {
                    x: RationalStr::from_rational(&p.twist_x),
                    y: RationalStr::from_rational(&p.twist_y),
                }),
                Some(p.canonical_height),
                Some([
                    RationalStr::from_rational(&p.triangle.0),
                    RationalStr::from_rational(&p.triangle.1),
                    RationalStr::from_rational(&p.triangle.2),
                ]),
            ),
        };
        HeegnerBlock {
            digits: c.digits,
            class_number: c.class_number,
            conjugation_residual: c.conjugation_residual,
            ramified_residual: c.ramified_residual,
            distribution_residual: c.distribution_residual,
            torsion: c.point.is_none(),
            chi_point,
            divisibility_index: index,
            primitive_point: primitive,
            twist_point: twist,
            canonical_height: height,
            triangle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LvalueBlock {
    pub d: u64,
    pub value: String,
    pub period: String,
    pub algebraic_part: Option<RationalStr>,
    pub two_adic_valuation: Option<i32>,
    pub precision_digits: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub schema_version: u32,
    pub input: InputBlock,
    /// "congruent", "nonCongruent" or "inconclusive".
    pub verdict: String,
    pub criterion: Option<CriterionBlock>,
    pub selmer: Option<SelmerBlock>,
    pub screen: Option<ScreenBlock>,
    pub heegner: Option<HeegnerBlock>,
    pub lvalue: Option<LvalueBlock>,
    pub precision_digits: u32,
    /// Excluded from the byte-determinism guarantee; everything else is a
    /// pure function of (input, flags, version).
    pub timing_ms: Option<u64>,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(s: &str) -> Option<Certificate> {
        serde_json::from_str(s).ok()
    }

    /// Copy with the timing field cleared (byte-determinism comparisons).
    pub fn without_timing(&self) -> Certificate {
        let mut c = self.clone();
        c.timing_ms = None;
        c
    }
}

/// Options for the certify path.
#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub digits: u32,
    /// Attempt the Heegner construction when applicable.
    pub heegner: bool,
    /// Include the L-value block (skipped above LVALUE_BOUND regardless).
    pub lvalue: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            digits: 60,
            heegner: true,
            lvalue: true,
        }
    }
}

/// Split the area m into its validated odd structure; m in {1, 2} yields
/// an empty prime list.
pub fn context_for_area(m: u64) -> Result<(Vec<u64>, Option<SquarefreeProduct>), CertifyError> {
    if m == 0 {
        return Err(CertifyError::Input("area must be positive".into()));
    }
    let odd = if m % 2 == 0 { m / 2 } else { m };
    if odd % 2 == 0 {
        return Err(CertifyError::Input(format!("{m} is divisible by 4, not squarefree")));
    }
    if odd == 1 {
        return Ok((Vec::new(), None));
    }
    let primes = factor_squarefree_odd(odd)
        .ok_or_else(|| CertifyError::Input(format!("{m} is not squarefree (or exceeds the factoring cap)")))?;
    let ctx = validate_primes(&primes)
        .map_err(|e| CertifyError::Input(e.to_string()))?;
    Ok((primes, Some(ctx)))
}

/// Full certification run for the area m.
pub fn certify(m: u64, opts: &CertifyOptions) -> Result<Certificate, CertifyError> {
    let start = std::time::Instant::now();
    let (primes, ctx) = context_for_area(m)?;
    let mut notes: Vec<String> = Vec::new();

    let input = InputBlock {
        primes: primes.clone(),
        n: ctx.as_ref().map(|c| c.n).unwrap_or(1),
        m,
        m_star: ctx.as_ref().and_then(|c| c.m_star).filter(|_| {
            ctx.as_ref().map(|c| c.m == Some(m)).unwrap_or(false)
        }),
        k: ctx.as_ref().map(|c| c.k).unwrap_or(0),
        seed_family: ctx.as_ref().map(|c| c.seed_family).unwrap_or(false),
    };

    let criterion = match &ctx {
        Some(c) if c.seed_family => {
            let g = build_graph(c);
            let via_graph = condition_11_via_graph(c)
                .map_err(|e| CertifyError::Internal(e.to_string()))?;
            let cond = condition_11_holds(c);
            if via_graph != cond {
                return Err(CertifyError::Internal(format!(
                    "graph criterion disagrees with class-group 4-rank at n = {}",
                    c.n
                )));
            }
            Some(CriterionBlock {
                vertices: g.vertices.clone(),
                edges: g.edges(),
                spanning_tree_parity: match spanning_tree_parity(&g) {
                    Parity::Odd => "odd".into(),
                    Parity::Even => "even".into(),
                },
                proper_even_partition: has_proper_even_partition(&g),
                four_rank_defect: four_rank_defect(c),
                condition11: cond,
                condition11_via_graph: via_graph,
            })
        }
        Some(c) => {
            let outside = c.primes.iter().filter(|&&p| p % 8 != 1).count();
            notes.push(format!(
                "{outside} primes lie outside 1 mod 8 (need exactly one); the graph criterion does not apply"
            ));
            None
        }
        None => None,
    };

    let report = two_selmer_dim(m).map_err(|e| CertifyError::Input(e.to_string()))?;
    let descent_rank_zero = report.rank_plus_sha2 == 0;
    let selmer = Some(SelmerBlock::from_report(&report));

    let screen = match (&ctx, m % 8) {
        (Some(c), 1 | 2 | 3) => match screen_non_congruent(c, m) {
            Ok(ScreenVerdict::NonCongruentByRemark) => Some(ScreenBlock {
                kind: "remark".into(),
                quartic_product: None,
                non_congruent: true,
            }),
            Ok(ScreenVerdict::QuarticCondition { product, non_congruent }) => Some(ScreenBlock {
                kind: "quartic".into(),
                quartic_product: Some(product),
                non_congruent,
            }),
            Ok(ScreenVerdict::Inapplicable) | Err(_) => None,
        },
        _ => None,
    };
    let screen_non_cong = screen.as_ref().map(|s| s.non_congruent).unwrap_or(false);

    let heegner_applicable = opts.heegner
        && ctx
            .as_ref()
            .map(|c| c.seed_family && c.m == Some(m) && condition_11_holds(c))
            .unwrap_or(false);
    let heegner = if heegner_applicable {
        let c = ctx.as_ref().expect("applicability implies context");
        match heegner_certificate_escalating(c, opts.digits, opts.digits.max(120) * 4) {
            Ok(hc) => Some(HeegnerBlock::from_certificate(&hc)),
            Err(HeegnerError::NotApplicable(s)) => {
                notes.push(format!("Heegner construction not applicable: {s}"));
                None
            }
            Err(e) => return Err(CertifyError::Internal(e.to_string())),
        }
    } else {
        None
    };
    let heegner_point_found = heegner
        .as_ref()
        .map(|h| !h.torsion)
        .unwrap_or(false);
    if let Some(h) = &heegner {
        if h.torsion {
            notes.push("chi-component is torsion; Heegner construction inconclusive".into());
        }
    }

    let lvalue = if opts.lvalue && m <= LVALUE_BOUND {
        match algebraic_part(m, 30) {
            Ok(a) => Some(LvalueBlock {
                d: a.d,
                value: a.value,
                period: a.period,
                algebraic_part: a
                    .algebraic_part
                    .map(|(n, d)| RationalStr { num: n, den: d }),
                two_adic_valuation: a.two_adic_valuation,
                precision_digits: a.precision_digits,
            }),
            Err(e) => {
                notes.push(format!("L-value block skipped: {e}"));
                None
            }
        }
    } else {
        None
    };

    let verdict = if heegner_point_found {
        if descent_rank_zero || screen_non_cong {
            return Err(CertifyError::Internal(format!(
                "contradictory evidence at m = {m}: exact point found but rank-zero certificate holds"
            )));
        }
        "congruent"
    } else if descent_rank_zero || screen_non_cong {
        "nonCongruent"
    } else {
        "inconclusive"
    };

    Ok(Certificate {
        schema_version: SCHEMA_VERSION,
        input,
        verdict: verdict.into(),
        criterion,
        selmer,
        screen,
        heegner,
        lvalue,
        precision_digits: opts.digits,
        timing_ms: Some(start.elapsed().as_millis() as u64),
        notes,
    })
}

/// Offline re-verification of a certificate from its own fields, exact
/// arithmetic only. A congruent verdict re-proves the point and triangle;
/// a non-congruent verdict re-checks the Selmer bound arithmetic.
pub fn verify_offline(cert: &Certificate) -> Result<(), String> {
    match cert.verdict.as_str() {
        "congruent" => verify_congruent(cert),
        "nonCongruent" => {
            let descent_zero = cert
                .selmer
                .as_ref()
                .map(|s| {
                    s.rank_plus_sha2 == s.phi_dim + s.psi_dim - 2 && s.rank_plus_sha2 == 0
                })
                .unwrap_or(false);
            let screen = cert
                .screen
                .as_ref()
                .map(|s| s.non_congruent)
                .unwrap_or(false);
            if descent_zero || screen {
                Ok(())
            } else {
                Err("nonCongruent verdict lacks rank-zero or screen evidence".into())
            }
        }
        "inconclusive" => Ok(()),
        v => Err(format!("unknown verdict {v}")),
    }
}

fn verify_congruent(cert: &Certificate) -> Result<(), String> {
    let h = cert
        .heegner
        .as_ref()
        .ok_or("congruent verdict without a Heegner block")?;
    let m = cert.input.m;
    let m_star = cert
        .input
        .m_star
        .ok_or("congruent verdict without a twist sign m*")?;
    if m_star.unsigned_abs() != m {
        return Err("|m*| differs from m".into());
    }
    let chi = h
        .chi_point
        .as_ref()
        .ok_or("missing chi-point")?;
    let prim = h
        .primitive_point
        .as_ref()
        .ok_or("missing primitive point")?;
    let twist = h.twist_point.as_ref().ok_or("missing twist point")?;
    let tri = h.triangle.as_ref().ok_or("missing triangle")?;
    let index = h.divisibility_index.ok_or("missing divisibility index")?;

    let rat = |r: &RationalStr| r.to_rational().ok_or("malformed rational".to_string());
    let (cx, cv) = (rat(&chi.x)?, rat(&chi.y)?);
    let (px, pv) = (rat(&prim.x)?, rat(&prim.y)?);
    let (tx, ty) = (rat(&twist.x)?, rat(&twist.y)?);
    let (a, b, c) = (rat(&tri[0])?, rat(&tri[1])?, rat(&tri[2])?);
    let ms = Rational::from(m_star);

    // both points satisfy m* v^2 = x^3 - x
    for (x, v) in [(&cx, &cv), (&px, &pv)] {
        if v.clone() * v * &ms != x.clone() * x * x - x {
            return Err("point fails the curve equation".into());
        }
    }
    if cv.cmp0() == std::cmp::Ordering::Equal {
        return Err("chi-point is two-torsion".into());
    }
    // twist point is the image of the primitive point
    if tx != px.clone() * &ms || ty != pv.clone() * &ms * &ms {
        return Err("twist point does not match the primitive point".into());
    }
    let msq = Rational::from(m) * Rational::from(m);
    if ty.clone() * &ty != tx.clone() * &tx * &tx - msq.clone() * &tx {
        return Err("twist point fails its curve equation".into());
    }
    // triangle identities
    if a.clone() * &a + b.clone() * &b != c.clone() * &c {
        return Err("triangle is not right-angled".into());
    }
    if a.clone() * &b != Rational::from(2 * m) {
        return Err("triangle area differs from m".into());
    }
    let ay = ty.clone().abs();
    let txsq = tx.clone() * &tx;
    let mut legs = [
        (txsq.clone() - &msq).abs() / &ay,
        Rational::from(2 * m) * tx.abs() / &ay,
    ];
    legs.sort();
    if legs[0] != a || legs[1] != b || (txsq + &msq) / &ay != c {
        return Err("triangle does not come from the twist point".into());
    }
    // 2^index times the primitive point hits the chi-point up to E[2]
    let field = QuadField::new(m_star);
    let prim_pt = FPoint::Affine(
        Qq::rational(px),
        Qq {
            a: Rational::new(),
            b: pv,
        },
    );
    let chi_pt = FPoint::Affine(
        Qq::rational(cx),
        Qq {
            a: Rational::new(),
            b: cv,
        },
    );
    let mut acc = prim_pt;
    for _ in 0..index {
        acc = ec_double(&field, &acc);
    }
    let mut hit = acc == chi_pt;
    for t in two_torsion() {
        hit = hit || ec_add(&field, &acc, &t) == chi_pt;
    }
    if !hit {
        return Err("divisibility index fails re-verification".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certify_five_is_congruent() {
        let cert = certify(5, &CertifyOptions::default()).unwrap();
        assert_eq!(cert.verdict, "congruent");
        let h = cert.heegner.as_ref().unwrap();
        assert_eq!(h.divisibility_index, Some(1));
        let tri = h.triangle.as_ref().unwrap();
        assert_eq!(tri[0].num, "3");
        assert_eq!(tri[0].den, "2");
        verify_offline(&cert).unwrap();
    }

    #[test]
    fn certify_one_and_two_non_congruent() {
        for m in [1u64, 2] {
            let cert = certify(m, &CertifyOptions::default()).unwrap();
            assert_eq!(cert.verdict, "nonCongruent", "m = {m}");
            verify_offline(&cert).unwrap();
        }
    }

    #[test]
    fn certify_three_non_congruent_with_criterion_block() {
        let cert = certify(3, &CertifyOptions::default()).unwrap();
        assert_eq!(cert.verdict, "nonCongruent");
        assert!(cert.criterion.is_some());
        verify_offline(&cert).unwrap();
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let opts = CertifyOptions::default();
        let a = certify(6, &opts).unwrap();
        let b = certify(6, &opts).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
        assert_eq!(
            a.without_timing().to_json(),
            b.without_timing().to_json()
        );
        let back = Certificate::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.verdict, "congruent");
        verify_offline(&back).unwrap();
    }

    #[test]
    fn tampered_certificate_fails_offline_check() {
        let mut cert = certify(5, &CertifyOptions::default()).unwrap();
        let h = cert.heegner.as_mut().unwrap();
        h.triangle.as_mut().unwrap()[0].num = "4".into();
        assert!(verify_offline(&cert).is_err());
    }

    #[test]
    fn seventeen_non_congruent_by_quartic_screen() {
        let cert = certify(17, &CertifyOptions::default()).unwrap();
        assert_eq!(cert.verdict, "nonCongruent");
        let s = cert.screen.as_ref().unwrap();
        assert_eq!(s.kind, "quartic");
        assert!(s.non_congruent);
    }
}

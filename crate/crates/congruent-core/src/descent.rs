//! 2-isogeny descent on the congruent-number curve m y^2 = x^3 - x: local
//! solvability of the explicit quartic torsors, the two isogeny Selmer
//! groups, and the resulting unconditional bound rank + dim Sha[2].

use crate::classgroup::{condition_11_holds, divisors};
use crate::ntheory::{factor_squarefree_odd, SquarefreeProduct};
use rug::ops::Pow;
use rug::Integer;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DescentError {
    NotSquarefree(u64),
    PrecisionExhausted { d: i64, p: u64 },
}

impl fmt::Display for DescentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DescentError::NotSquarefree(m) => write!(f, "{m} is not squarefree"),
            DescentError::PrecisionExhausted { d, p } => write!(
                f,
                "local solvability for d={d} at p={p} undecided at maximal precision"
            ),
        }
    }
}

impl std::error::Error for DescentError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TorsorKind {
    /// d w^2 = d^2 + 4 m^2 z^4, the isogenous-curve side.
    Cd,
    /// d w^2 = d^2 - m^2 z^4, the curve side.
    CdPrime,
}

/// A descent torsor bound to twist index m and signed squarefree d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Torsor {
    pub m: u64,
    pub d: i64,
    pub kind: TorsorKind,
}

impl Torsor {
    /// The quartic A z^4 + B whose square values (times nothing) detect
    /// points: multiplying d w^2 = rhs by d turns solvability into
    /// "d * rhs(z) is a p-adic square". Chart 1 has z integral; chart 2
    /// swaps A and B (s = 1/z after clearing denominators).
    fn chart(&self, which: u8) -> (Integer, Integer) {
        let m2 = Integer::from(self.m) * self.m;
        let d = Integer::from(self.d);
        let a = match self.kind {
            TorsorKind::Cd => 4 * m2 * &d,
            TorsorKind::CdPrime => -m2 * &d,
        };
        let b = d.pow(3);
        match which {
            1 => (a, b),
            _ => (b, a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Place {
    Real,
    Prime(u64),
}

/// A decided local condition with enough data to re-verify it by hand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalEvidence {
    pub d: i64,
    pub kind: TorsorKind,
    pub place: Place,
    pub solvable: bool,
    /// For a solvable finite place: chart, the decided residue class
    /// z = z0 mod p^prec, and the (even) valuation of the square value.
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub chart: u8,
    pub z_residue: String,
    pub precision: u32,
    pub valuation: u32,
}

enum Decision {
    Yes(Witness),
    No,
}

/// Decide whether A z^4 + B takes a square value (or zero) for some z in
/// Z_p, by refining residue classes until the valuation pattern settles.
fn quartic_has_square_value(
    p: u64,
    a: &Integer,
    b: &Integer,
    chart: u8,
    cap: u32,
) -> Result<Decision, ()> {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        p: &Integer,
        pu: u64,
        a: &Integer,
        b: &Integer,
        strip: u32,
        chart: u8,
        z0: &Integer,
        j: u32,
        cap: u32,
    ) -> Result<Decision, ()> {
        let val = Integer::from(z0.pow(4u32)) * a + b;
        if val == 0 {
            return Ok(Decision::Yes(Witness {
                chart,
                z_residue: z0.to_string(),
                precision: j,
                valuation: 0,
            }));
        }
        let mut unit = val.clone();
        let t = unit.remove_factor_mut(p);
        // f(z) = f(z0) mod p^j on the branch, so for t < j the valuation is
        // exact and the unit is known mod p^(j-t); squareness of a p-adic
        // unit needs 1 digit for odd p and 3 digits for p = 2
        let digits_needed = if pu == 2 { 3 } else { 1 };
        if t < j && j - t >= digits_needed {
            let is_sq = (strip + t) % 2 == 0
                && if pu == 2 {
                    unit.mod_u(8) == 1
                } else {
                    unit.jacobi(p) == 1
                };
            return if is_sq {
                Ok(Decision::Yes(Witness {
                    chart,
                    z_residue: z0.to_string(),
                    precision: j,
                    valuation: strip + t,
                }))
            } else {
                Ok(Decision::No)
            };
        }
        if j >= cap {
            return Err(());
        }
        let step = Integer::from(p.pow(j));
        for i in 0..pu {
            let z = Integer::from(&step * i) + z0;
            if let Decision::Yes(w) = rec(p, pu, a, b, strip, chart, &z, j + 1, cap)? {
                return Ok(Decision::Yes(w));
            }
        }
        Ok(Decision::No)
    }
    // Strip the common p-power first so at least one coefficient is a unit;
    // otherwise f(z) = 0 mod p^g for every z and the refinement scans all
    // p^g residue classes before any branch settles. An even stripped power
    // is a square factor; an odd one flips the required valuation parity.
    let pi = Integer::from(p);
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut strip = 0u32;
    if a != 0 && b != 0 {
        strip = valuation(&a, p).min(valuation(&b, p));
        if strip > 0 {
            let pg = pi.clone().pow(strip);
            a /= &pg;
            b /= &pg;
        }
    }
    rec(&pi, p, &a, &b, strip, chart, &Integer::ZERO, 0, cap)
}

/// Q_p-solvability of the torsor, with a witness residue class on success.
pub fn is_locally_solvable(t: &Torsor, place: Place) -> Result<LocalEvidence, DescentError> {
    let solvable_witness = match place {
        Place::Real => {
            // C_d: d w^2 = d^2 + 4 m^2 z^4 has positive right side, so it
            // needs d > 0 (then z = 0 works); C_d': the right side
            // d^2 - m^2 z^4 takes both signs, so every d works
            let ok = match t.kind {
                TorsorKind::Cd => t.d > 0,
                TorsorKind::CdPrime => true,
            };
            return Ok(LocalEvidence {
                d: t.d,
                kind: t.kind,
                place,
                solvable: ok,
                witness: None,
            });
        }
        Place::Prime(p) => {
            let mut found = None;
            for chart in [1u8, 2] {
                let (a, b) = t.chart(chart);
                // disc(A z^4 + B) = -256 A^3 B^3 up to sign
                let vdisc = (if p == 2 { 8 } else { 0 })
                    + 3 * valuation(&a, p)
                    + 3 * valuation(&b, p);
                let cap = 2 * vdisc + 4;
                let dec = match quartic_has_square_value(p, &a, &b, chart, cap) {
                    Ok(d) => d,
                    Err(()) => quartic_has_square_value(p, &a, &b, chart, 2 * cap)
                        .map_err(|()| DescentError::PrecisionExhausted { d: t.d, p })?,
                };
                if let Decision::Yes(w) = dec {
                    found = Some(w);
                    break;
                }
            }
            found
        }
    };
    Ok(LocalEvidence {
        d: t.d,
        kind: t.kind,
        place,
        solvable: solvable_witness.is_some(),
        witness: solvable_witness,
    })
}

fn valuation(x: &Integer, p: u64) -> u32 {
    if *x == 0 {
        return 0;
    }
    let mut y = x.clone();
    y.remove_factor_mut(&Integer::from(p))
}

/// The places that can obstruct: 2, the odd primes dividing m, infinity.
fn relevant_places(m: u64) -> Vec<Place> {
    let mut places = vec![Place::Real, Place::Prime(2)];
    let odd = if m % 2 == 0 { m / 2 } else { m };
    for p in factor_squarefree_odd(odd).expect("validated squarefree") {
        places.push(Place::Prime(p));
    }
    places
}

/// A GF(2) subgroup of the signed-squarefree-divisor group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelmerGroup {
    pub elements: Vec<i64>,
    pub dim: usize,
}

/// Squarefree product of two signed squarefree integers.
pub fn squarefree_mul(x: i64, y: i64) -> i64 {
    let g = {
        fn gcd(a: i64, b: i64) -> i64 {
            if b == 0 {
                a.abs()
            } else {
                gcd(b, a % b)
            }
        }
        gcd(x, y)
    };
    x / g * (y / g)
}

fn selmer_from_solvable(mut elems: Vec<i64>) -> SelmerGroup {
    elems.sort_unstable();
    let dim = elems.len().trailing_zeros() as usize;
    debug_assert_eq!(1usize << dim, elems.len(), "Selmer set must be a subgroup");
    SelmerGroup {
        elements: elems,
        dim,
    }
}

fn factor_m(m: u64) -> Result<(), DescentError> {
    let odd = if m % 4 == 0 {
        return Err(DescentError::NotSquarefree(m));
    } else if m % 2 == 0 {
        m / 2
    } else {
        m
    };
    factor_squarefree_odd(odd)
        .map(|_| ())
        .ok_or(DescentError::NotSquarefree(m))
}

fn survey(
    m: u64,
    kind: TorsorKind,
    candidates: &[i64],
) -> Result<(Vec<i64>, Vec<LocalEvidence>), DescentError> {
    let places = relevant_places(m);
    let mut solvable = Vec::new();
    let mut evidence = Vec::new();
    for &d in candidates {
        let torsor = Torsor { m, d, kind };
        let mut all = true;
        for &place in &places {
            let ev = is_locally_solvable(&torsor, place)?;
            let ok = ev.solvable;
            evidence.push(ev);
            if !ok {
                all = false;
                break;
            }
        }
        if all {
            solvable.push(d);
        }
    }
    Ok((solvable, evidence))
}

/// Everywhere-locally-solvable C_d classes: positive squarefree d | 2m.
pub fn phi_selmer(m: u64) -> Result<SelmerGroup, DescentError> {
    factor_m(m)?;
    let two_m_rad = if m % 2 == 0 { m } else { 2 * m };
    let candidates: Vec<i64> = divisors_of_even(two_m_rad);
    let (solvable, _) = survey(m, TorsorKind::Cd, &candidates)?;
    Ok(selmer_from_solvable(solvable))
}

/// Everywhere-locally-solvable C_d' classes: signed squarefree d | 2m.
pub fn psi_selmer(m: u64) -> Result<SelmerGroup, DescentError> {
    factor_m(m)?;
    let two_m_rad = if m % 2 == 0 { m } else { 2 * m };
    let mut candidates = divisors_of_even(two_m_rad);
    let negs: Vec<i64> = candidates.iter().map(|d| -d).collect();
    candidates.extend(negs);
    let (solvable, _) = survey(m, TorsorKind::CdPrime, &candidates)?;
    Ok(selmer_from_solvable(solvable))
}

/// Positive squarefree divisors of a squarefree integer (odd or 2 * odd).
fn divisors_of_even(n: u64) -> Vec<i64> {
    let (two, odd) = if n % 2 == 0 { (true, n / 2) } else { (false, n) };
    let mut out: Vec<i64> = divisors(odd).iter().map(|&d| d as i64).collect();
    if two {
        let doubled: Vec<i64> = out.iter().map(|d| 2 * d).collect();
        out.extend(doubled);
    }
    out
}

/// Selmer dimensions and the rank + Sha[2] bound for the twist by m.
#[derive(Debug, Clone, Serialize)]
pub struct SelmerReport {
    pub m: u64,
    pub phi_dim: usize,
    pub psi_dim: usize,
    pub phi_elements: Vec<i64>,
    pub psi_elements: Vec<i64>,
    /// phi_dim + psi_dim - 2; equals dim S^(2)/E[2] when the connecting
    /// sequence is exact, which we assert only under the class-group
    /// condition (recorded in `exactness_asserted`).
    pub two_selmer_dim_mod_torsion: usize,
    pub rank_plus_sha2: usize,
    pub exactness_asserted: bool,
    pub evidence: Vec<LocalEvidence>,
    /// Places of good reduction are omitted: smooth genus-one curves over
    /// Q_p with good reduction always have points.
    pub untested_places_note: String,
}

/// Run both descents and assemble the report.
pub fn two_selmer_dim(m: u64) -> Result<SelmerReport, DescentError> {
    factor_m(m)?;
    let two_m_rad = if m % 2 == 0 { m } else { 2 * m };
    let (phi_solvable, mut evidence) = survey(m, TorsorKind::Cd, &divisors_of_even(two_m_rad))?;
    let mut psi_candidates = divisors_of_even(two_m_rad);
    let negs: Vec<i64> = psi_candidates.iter().map(|d| -d).collect();
    psi_candidates.extend(negs);
    let (psi_solvable, psi_ev) = survey(m, TorsorKind::CdPrime, &psi_candidates)?;
    evidence.extend(psi_ev);
    let phi = selmer_from_solvable(phi_solvable);
    let psi = selmer_from_solvable(psi_solvable);
    let bound = phi.dim + psi.dim - 2;
    let exact = exactness_flag(m);
    Ok(SelmerReport {
        m,
        phi_dim: phi.dim,
        psi_dim: psi.dim,
        phi_elements: phi.elements,
        psi_elements: psi.elements,
        two_selmer_dim_mod_torsion: bound,
        rank_plus_sha2: bound,
        exactness_asserted: exact,
        evidence,
        untested_places_note:
            "odd primes not dividing m give good reduction; torsors are automatically solvable there"
                .to_string(),
    })
}

fn exactness_flag(m: u64) -> bool {
    let odd = if m % 2 == 0 { m / 2 } else { m };
    factor_squarefree_odd(odd)
        .and_then(|primes| crate::ntheory::validate_primes(&primes).ok())
        .map(|ctx| condition_11_holds(&ctx))
        .unwrap_or(false)
}

#[derive(Debug, Clone, Serialize)]
pub enum DescentVerdict {
    /// Rank 0 certified: the Selmer bound rank + dim Sha[2] is zero.
    NonCongruent(SelmerReport),
    Inconclusive(SelmerReport),
}

/// Certify m non-congruent when the descent bound pins the rank at zero.
pub fn certify_non_congruent(m: u64) -> Result<DescentVerdict, DescentError> {
    let report = two_selmer_dim(m)?;
    if report.rank_plus_sha2 == 0 {
        Ok(DescentVerdict::NonCongruent(report))
    } else {
        Ok(DescentVerdict::Inconclusive(report))
    }
}

/// Exhaustive congruence-solvability oracle: does d w^2 = rhs(z) have a
/// solution mod p^e on either chart? (Test oracle; e must comfortably
/// exceed the discriminant valuation.)
pub fn congruence_oracle(t: &Torsor, p: u64, e: u32) -> bool {
    let pe = Integer::from(p).pow(e);
    let pe_u = pe.to_u64().expect("oracle modulus fits u64");
    let pe_i = pe_u as i128;
    let mut squares = std::collections::HashSet::new();
    for w in 0..pe_u {
        let v = (t.d as i128 * (w as i128 * w as i128) % pe_i).rem_euclid(pe_i);
        squares.insert(v as u64);
    }
    let m2 = (t.m as i128 * t.m as i128).rem_euclid(pe_i);
    let d2 = (t.d as i128 * t.d as i128).rem_euclid(pe_i);
    let coeff = match t.kind {
        TorsorKind::Cd => 4 * m2 % pe_i,
        TorsorKind::CdPrime => (-m2).rem_euclid(pe_i),
    };
    for z in 0..pe_u {
        let z2 = (z as i128 * z as i128) % pe_i;
        let z4 = z2 * z2 % pe_i;
        let rhs1 = ((d2 + coeff * z4) % pe_i).rem_euclid(pe_i);
        let rhs2 = ((d2 * z4 + coeff) % pe_i).rem_euclid(pe_i);
        if squares.contains(&(rhs1 as u64)) || squares.contains(&(rhs2 as u64)) {
            return true;
        }
    }
    false
}

/// Descent verdicts within a validated context (convenience wrapper used by
/// certification: picks the twist index m from the context).
pub fn two_selmer_dim_ctx(ctx: &SquarefreeProduct) -> Result<Option<SelmerReport>, DescentError> {
    match ctx.m {
        Some(m) => two_selmer_dim(m).map(Some),
        None => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_torsor_solvable() {
        let t = Torsor {
            m: 5,
            d: 1,
            kind: TorsorKind::Cd,
        };
        for place in relevant_places(5) {
            assert!(is_locally_solvable(&t, place).unwrap().solvable);
        }
    }

    #[test]
    fn real_place_rules() {
        let neg = Torsor {
            m: 5,
            d: -1,
            kind: TorsorKind::CdPrime,
        };
        assert!(is_locally_solvable(&neg, Place::Real).unwrap().solvable);
        let neg_cd = Torsor {
            m: 5,
            d: -1,
            kind: TorsorKind::Cd,
        };
        assert!(!is_locally_solvable(&neg_cd, Place::Real).unwrap().solvable);
    }

    #[test]
    fn phi_selmer_examples() {
        let s = phi_selmer(5).unwrap();
        assert_eq!(s.elements, vec![1, 5]);
        assert_eq!(s.dim, 1);
        // odd twists keep the (1, 2) dimension split
        assert_eq!(phi_selmer(7).unwrap().elements, vec![1, 2]);
        assert_eq!(phi_selmer(85).unwrap().elements, vec![1, 85]);
        // even twists shift a dimension across the pair: every C_d with
        // d != 1 fails at 2 (d odd forces unit d mod 8; d even forces odd
        // valuation), so the phi side collapses and the psi side absorbs it
        assert_eq!(phi_selmer(6).unwrap().dim, 0);
    }

    #[test]
    fn psi_selmer_examples() {
        let s = psi_selmer(5).unwrap();
        assert_eq!(s.elements, vec![-5, -1, 1, 5]);
        assert_eq!(s.dim, 2);
        assert_eq!(psi_selmer(7).unwrap().dim, 2);
        assert_eq!(psi_selmer(85).unwrap().dim, 2);
        // counterpart of the phi collapse for even twists: the rational
        // points of Y^2 = X^3 - 36 X already hit all eight classes
        assert_eq!(psi_selmer(6).unwrap().dim, 3);
    }

    #[test]
    fn two_selmer_examples() {
        assert_eq!(two_selmer_dim(5).unwrap().two_selmer_dim_mod_torsion, 1);
        assert_eq!(two_selmer_dim(1).unwrap().two_selmer_dim_mod_torsion, 0);
        assert_eq!(two_selmer_dim(6).unwrap().two_selmer_dim_mod_torsion, 1);
        assert_eq!(two_selmer_dim(7).unwrap().two_selmer_dim_mod_torsion, 1);
    }

    #[test]
    fn certify_examples() {
        for m in [1u64, 2, 3, 10, 11, 19, 26] {
            match certify_non_congruent(m).unwrap() {
                DescentVerdict::NonCongruent(_) => {}
                DescentVerdict::Inconclusive(r) => {
                    panic!("m={m} should certify, got bound {}", r.rank_plus_sha2)
                }
            }
        }
        // m=17 is non-congruent but has 2-dimensional Sha[2], so the
        // isogeny bound stays at 2; the quartic residue screen covers it
        for m in [5u64, 6, 7, 17, 85] {
            assert!(matches!(
                certify_non_congruent(m).unwrap(),
                DescentVerdict::Inconclusive(_)
            ));
        }
        assert!(certify_non_congruent(12).is_err());
    }

    #[test]
    fn selmer_sets_are_subgroups() {
        for m in [1u64, 2, 5, 6, 7, 10, 85, 105] {
            for s in [phi_selmer(m).unwrap(), psi_selmer(m).unwrap()] {
                for &x in &s.elements {
                    for &y in &s.elements {
                        assert!(
                            s.elements.contains(&squarefree_mul(x, y)),
                            "m={m}: {x}*{y} escapes"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn solver_matches_congruence_oracle() {
        let schedule: &[(u64, u32)] = &[(2, 8), (3, 7), (5, 5), (7, 5), (11, 4), (13, 4)];
        for m in [1u64, 2, 5, 6, 7, 10, 11, 13] {
            let mut torsors = Vec::new();
            let two_m = if m % 2 == 0 { m } else { 2 * m };
            for d in divisors_of_even(two_m) {
                torsors.push(Torsor {
                    m,
                    d,
                    kind: TorsorKind::Cd,
                });
            }
            for d in divisors_of_even(two_m) {
                for sd in [d, -d] {
                    torsors.push(Torsor {
                        m,
                        d: sd,
                        kind: TorsorKind::CdPrime,
                    });
                }
            }
            for t in &torsors {
                for &(p, e) in schedule {
                    if p != 2 && (2 * m) % p != 0 && t.d.unsigned_abs() % p != 0 {
                        continue;
                    }
                    let solver = is_locally_solvable(t, Place::Prime(p)).unwrap().solvable;
                    let oracle = congruence_oracle(t, p, e);
                    assert_eq!(
                        solver, oracle,
                        "m={} d={} kind={:?} p={p}",
                        t.m, t.d, t.kind
                    );
                }
            }
        }
    }

    #[test]
    fn good_reduction_places_solvable() {
        // spot check the proof note: primes away from 2 m d never obstruct
        for t in [
            Torsor {
                m: 5,
                d: 5,
                kind: TorsorKind::Cd,
            },
            Torsor {
                m: 7,
                d: -7,
                kind: TorsorKind::CdPrime,
            },
        ] {
            for p in [3u64, 11, 13, 17, 19, 23] {
                assert!(is_locally_solvable(&t, Place::Prime(p)).unwrap().solvable);
            }
        }
    }

    #[test]
    fn spec_example_c5_at_5() {
        let t = Torsor {
            m: 5,
            d: 5,
            kind: TorsorKind::Cd,
        };
        let solver = is_locally_solvable(&t, Place::Prime(5)).unwrap().solvable;
        assert_eq!(solver, congruence_oracle(&t, 5, 5));
    }

    #[test]
    fn report_shape() {
        let r = two_selmer_dim(5).unwrap();
        assert!(r.exactness_asserted);
        assert_eq!(r.rank_plus_sha2, 1);
        assert!(!r.evidence.is_empty());
        let r = two_selmer_dim(1).unwrap();
        assert!(!r.exactness_asserted); // no twist-family context for m = 1
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("rank_plus_sha2"));
    }
}

//! Subcommand implementations.

use crate::cache;
use congruent_core::certificate::{
    certify, context_for_area, Certificate, CertifyError, CertifyOptions, HeegnerBlock,
    LvalueBlock, RationalStr, SelmerBlock,
};
use congruent_core::criterion::{build_graph, generate_family};
use congruent_core::descent::two_selmer_dim;
use congruent_core::heegner::pipeline::heegner_certificate_escalating;
use congruent_core::lfunction::algebraic_part;
use congruent_core::ntheory::{validate_primes, SquarefreeProduct};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

const EXIT_OK: u8 = 0;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

/// One integer is an area; several are a prime list (area = m, else n).
fn parse_input(input: &[u64]) -> Result<(u64, Option<SquarefreeProduct>), String> {
    if input.len() == 1 {
        context_for_area(input[0])
            .map(|(_, ctx)| (input[0], ctx))
            .map_err(|e| e.to_string())
    } else {
        let ctx = validate_primes(input).map_err(|e| e.to_string())?;
        let area = ctx.m.unwrap_or(ctx.n);
        Ok((area, Some(ctx)))
    }
}

fn print_certificate(cert: &Certificate, json: bool) {
    if json {
        println!("{}", cert.to_json());
        return;
    }
    println!("area {}: {}", cert.input.m, cert.verdict);
    if let Some(c) = &cert.criterion {
        println!(
            "  criterion: condition (1.1) {}, spanning-tree parity {}",
            if c.condition11 { "holds" } else { "fails" },
            c.spanning_tree_parity
        );
    }
    if let Some(s) = &cert.selmer {
        println!(
            "  descent: dim S^phi = {}, dim S^psi = {}, rank + dim Sha[2] <= {}",
            s.phi_dim, s.psi_dim, s.rank_plus_sha2
        );
    }
    if let Some(h) = &cert.heegner {
        if let (Some(idx), Some(tri), Some(height)) =
            (h.divisibility_index, &h.triangle, h.canonical_height)
        {
            println!("  point: divisibility index {idx}, canonical height {height:.6}");
            println!(
                "  triangle: {}/{} x {}/{}, hypotenuse {}/{}",
                tri[0].num, tri[0].den, tri[1].num, tri[1].den, tri[2].num, tri[2].den
            );
        } else {
            println!("  heegner: chi-component is torsion (inconclusive)");
        }
    }
    for note in &cert.notes {
        println!("  note: {note}");
    }
}

fn exit_for(cert: &Certificate) -> u8 {
    if cert.verdict == "inconclusive" {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    }
}

pub fn cmd_certify(input: &[u64], prec: u32, cache_dir: Option<&Path>, json: bool) -> u8 {
    let (area, _ctx) = match parse_input(input) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let opts = CertifyOptions {
        digits: prec,
        heegner: true,
        lvalue: true,
    };
    match certify(area, &opts) {
        Ok(cert) => {
            if let Some(dir) = cache_dir {
                if let Err(e) = cache::store(dir, &cert) {
                    eprintln!("warning: cache write failed: {e}");
                }
            }
            print_certificate(&cert, json);
            exit_for(&cert)
        }
        Err(CertifyError::Input(e)) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
        Err(CertifyError::Internal(e)) => {
            eprintln!("error: {e}");
            EXIT_INTERNAL
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ScanRow {
    n: u64,
    k: usize,
    residue: u64,
    seed_family: bool,
    condition11: Option<bool>,
    /// Condition (1.1) holds and the area has a twist index 5, 6, 7 mod 8:
    /// congruent by the main theorem (run with --heegner for the point).
    flagged: bool,
    verdict: String,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ScanSummary {
    lo: u64,
    hi: u64,
    rows: Vec<ScanRow>,
    congruent: usize,
    non_congruent: usize,
    inconclusive: usize,
    skipped_non_squarefree: usize,
}

pub fn cmd_scan(
    lo: u64,
    hi: u64,
    heegner: bool,
    max_k: usize,
    prec: u32,
    cache_dir: Option<&Path>,
    json: bool,
) -> u8 {
    if lo < 1 || lo > hi || hi > 10_000_000 {
        eprintln!("error: range must satisfy 1 <= lo <= hi <= 10^7");
        return EXIT_INPUT;
    }
    let results: Vec<Result<Option<ScanRow>, String>> = (lo..=hi)
        .into_par_iter()
        .map(|n| scan_one(n, heegner, max_k, prec, cache_dir))
        .collect();
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for r in results {
        match r {
            Ok(Some(row)) => rows.push(row),
            Ok(None) => skipped += 1,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INTERNAL;
            }
        }
    }
    let count = |v: &str| rows.iter().filter(|r| r.verdict == v).count();
    let summary = ScanSummary {
        lo,
        hi,
        congruent: count("congruent"),
        non_congruent: count("nonCongruent"),
        inconclusive: count("inconclusive"),
        skipped_non_squarefree: skipped,
        rows,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("serializes"));
    } else {
        println!("scan {lo}..{hi}");
        for r in &summary.rows {
            println!(
                "  {:>8}  k={} residue={} family={} condition11={:?} flagged={} {}",
                r.n, r.k, r.residue, r.seed_family, r.condition11, r.flagged, r.verdict
            );
        }
        println!(
            "totals: {} congruent, {} nonCongruent, {} inconclusive, {} non-squarefree skipped",
            summary.congruent, summary.non_congruent, summary.inconclusive,
            summary.skipped_non_squarefree
        );
    }
    EXIT_OK
}

fn scan_one(
    n: u64,
    heegner: bool,
    max_k: usize,
    prec: u32,
    cache_dir: Option<&Path>,
) -> Result<Option<ScanRow>, String> {
    let ctx = match context_for_area(n) {
        Ok((_, ctx)) => ctx,
        Err(CertifyError::Input(_)) => return Ok(None),
        Err(CertifyError::Internal(e)) => return Err(e),
    };
    let k = ctx.as_ref().map(|c| c.k).unwrap_or(0);
    let run_heegner = heegner && k <= max_k;
    if let Some(dir) = cache_dir {
        if let Some(cached) = cache::load(dir, n) {
            if cached.verdict != "inconclusive" || !run_heegner {
                return Ok(Some(row_from(&cached, ctx.as_ref())));
            }
        }
    }
    let opts = CertifyOptions {
        digits: prec,
        heegner: run_heegner,
        lvalue: false,
    };
    let cert = certify(n, &opts).map_err(|e| e.to_string())?;
    if let Some(dir) = cache_dir {
        if let Err(e) = cache::store(dir, &cert) {
            return Err(format!("cache write failed: {e}"));
        }
    }
    Ok(Some(row_from(&cert, ctx.as_ref())))
}

fn row_from(cert: &Certificate, ctx: Option<&SquarefreeProduct>) -> ScanRow {
    ScanRow {
        n: cert.input.m,
        k: cert.input.k,
        residue: cert.input.m % 8,
        seed_family: ctx.map(|c| c.seed_family).unwrap_or(false),
        condition11: cert.criterion.as_ref().map(|c| c.condition11),
        flagged: ctx
            .map(|c| {
                c.seed_family
                    && c.m == Some(cert.input.m)
                    && cert
                        .criterion
                        .as_ref()
                        .map(|b| b.condition11)
                        .unwrap_or(false)
            })
            .unwrap_or(false),
        verdict: cert.verdict.clone(),
    }
}

pub fn cmd_family(
    p0: u64,
    count: usize,
    bound: u64,
    max_k: usize,
    prec: u32,
    cache_dir: Option<&Path>,
    json: bool,
) -> u8 {
    let spec = match generate_family(p0, count, bound) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let mut certs = Vec::new();
    for i in 0..=spec.sigma.len() {
        let mut primes = vec![p0];
        primes.extend_from_slice(&spec.sigma[..i]);
        let ctx = match validate_primes(&primes) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INTERNAL;
            }
        };
        let area = match ctx.m {
            Some(m) => m,
            None => continue,
        };
        let opts = CertifyOptions {
            digits: prec,
            heegner: i <= max_k,
            lvalue: false,
        };
        match certify(area, &opts) {
            Ok(cert) => {
                if let Some(dir) = cache_dir {
                    let _ = cache::store(dir, &cert);
                }
                certs.push(cert);
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INTERNAL;
            }
        }
    }
    if json {
        #[derive(Serialize)]
        #[serde(rename_all = "camelCase")]
        struct FamilyOut {
            p0: u64,
            sigma: Vec<u64>,
            certificates: Vec<Certificate>,
        }
        let out = FamilyOut {
            p0: spec.p0,
            sigma: spec.sigma.clone(),
            certificates: certs,
        };
        println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
    } else {
        println!("family p0 = {}, sigma = {:?}", spec.p0, spec.sigma);
        for cert in &certs {
            print_certificate(cert, false);
        }
    }
    EXIT_OK
}

pub fn cmd_heegner(input: &[u64], prec: u32, json: bool) -> u8 {
    let ctx = match parse_input(input) {
        Ok((_, Some(ctx))) if ctx.m.is_some() => ctx,
        Ok(_) => {
            eprintln!("error: no twist index m = 5, 6, 7 mod 8 for this input");
            return EXIT_INPUT;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    match heegner_certificate_escalating(&ctx, prec, prec.max(120) * 4) {
        Ok(hc) => {
            let block = HeegnerBlock::from_certificate(&hc);
            if json {
                println!("{}", serde_json::to_string_pretty(&block).expect("serializes"));
            } else if let (Some(idx), Some(tri)) = (block.divisibility_index, &block.triangle) {
                println!(
                    "m = {}: point found, divisibility index {idx}, triangle {}/{} x {}/{} (hyp {}/{})",
                    hc.m, tri[0].num, tri[0].den, tri[1].num, tri[1].den, tri[2].num, tri[2].den
                );
            } else {
                println!("m = {}: chi-component is torsion", hc.m);
            }
            if block.torsion {
                EXIT_INCONCLUSIVE
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INTERNAL
        }
    }
}

pub fn cmd_selmer(m: u64, json: bool) -> u8 {
    match two_selmer_dim(m) {
        Ok(report) => {
            let block = SelmerBlock::from_report(&report);
            if json {
                println!("{}", serde_json::to_string_pretty(&block).expect("serializes"));
            } else {
                println!(
                    "m = {m}: dim S^phi = {}, dim S^psi = {}, dim S^(2)/E[2] = {}, rank + dim Sha[2] <= {}",
                    block.phi_dim, block.psi_dim, block.two_selmer_dim_mod_torsion,
                    block.rank_plus_sha2
                );
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

pub fn cmd_lvalue(d: u64, prec: u32, json: bool) -> u8 {
    match algebraic_part(d, prec) {
        Ok(a) => {
            let block = LvalueBlock {
                d: a.d,
                value: a.value,
                period: a.period,
                algebraic_part: a
                    .algebraic_part
                    .map(|(n, den)| RationalStr { num: n, den }),
                two_adic_valuation: a.two_adic_valuation,
                precision_digits: a.precision_digits,
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&block).expect("serializes"));
            } else {
                println!("L(E^({d}), 1) = {}", block.value);
                match &block.algebraic_part {
                    Some(r) => println!(
                        "algebraic part {}/{}, 2-adic valuation {:?}",
                        r.num, r.den, block.two_adic_valuation
                    ),
                    None => println!("central value vanishes"),
                }
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

pub fn cmd_graph(input: &[u64]) -> u8 {
    match parse_input(input) {
        Ok((_, Some(ctx))) => {
            println!("{}", build_graph(&ctx).to_dot());
            EXIT_OK
        }
        Ok((_, None)) => {
            eprintln!("error: no odd prime factors to graph");
            EXIT_INPUT
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

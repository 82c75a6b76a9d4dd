//! Graph form of the class-group criterion: the prime graph on p0,...,pk
//! with edges where the quadratic residue symbol is -1, its spanning-tree
//! parity and even-partition tests, a generator for infinite families of
//! congruent numbers, and the residue-class non-congruence pre-screens.

use crate::classgroup::{condition_11_holds, gf2_rank};
use crate::ntheory::{is_prime_u64, jacobi_i64, quartic_residue_of_two, SquarefreeProduct};
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CritError {
    NotSeedFamily,
    BadSeed(u64),
    BoundExhausted { partial: FamilySpec },
    BadTwist(u64),
}

impl fmt::Display for CritError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CritError::NotSeedFamily => {
                write!(f, "input is not of the required one-prime-outside-1-mod-8 shape")
            }
            CritError::BadSeed(p) => write!(f, "{p} is not a prime outside 1 mod 8"),
            CritError::BoundExhausted { partial } => write!(
                f,
                "prime bound exhausted after {} of the requested primes",
                partial.sigma.len()
            ),
            CritError::BadTwist(m) => write!(f, "{m} is not n or 2n or lies outside 1,2,3 mod 8"),
        }
    }
}

impl std::error::Error for CritError {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Graph on the prime factors of n; A[i][j] = 1 iff jacobi(p_i, p_j) = -1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeGraph {
    pub vertices: Vec<u64>,
    /// Symmetric adjacency rows as GF(2) bit masks, zero diagonal.
    pub adjacency: Vec<u64>,
}

impl PrimeGraph {
    pub fn from_edges(nv: usize, edges: &[(usize, usize)]) -> Self {
        assert!(nv <= 64);
        let mut adjacency = vec![0u64; nv];
        for &(i, j) in edges {
            assert!(i != j && i < nv && j < nv);
            adjacency[i] |= 1 << j;
            adjacency[j] |= 1 << i;
        }
        PrimeGraph {
            vertices: (0..nv as u64).collect(),
            adjacency,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i] >> j & 1 == 1
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let nv = self.vertices.len();
        let mut out = Vec::new();
        for i in 0..nv {
            for j in i + 1..nv {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// GF(2) Laplacian rows: adjacency plus degree diagonal.
    fn laplacian(&self) -> Vec<u64> {
        self.adjacency
            .iter()
            .enumerate()
            .map(|(i, &row)| row | (row.count_ones() as u64 % 2) << i)
            .collect()
    }

    /// Graphviz adjacency dump.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph primes {\n");
        for p in &self.vertices {
            s.push_str(&format!("  p{p};\n"));
        }
        for (i, j) in self.edges() {
            s.push_str(&format!("  p{} -- p{};\n", self.vertices[i], self.vertices[j]));
        }
        s.push_str("}\n");
        s
    }
}

/// A seed prime p0 outside 1 mod 8 and generated primes, each 1 mod 8,
/// a non-residue against p0, and a residue against all earlier primes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilySpec {
    pub p0: u64,
    pub sigma: Vec<u64>,
    pub search_bound: u64,
}

/// Graph of the prime factors with the quadratic-residue edge rule.
pub fn build_graph(ctx: &SquarefreeProduct) -> PrimeGraph {
    let nv = ctx.primes.len();
    assert!(nv <= 64);
    let mut adjacency = vec![0u64; nv];
    for i in 0..nv {
        for j in i + 1..nv {
            let s = jacobi_i64(ctx.primes[i] as i64, ctx.primes[j] as i64);
            debug_assert_eq!(
                s,
                jacobi_i64(ctx.primes[j] as i64, ctx.primes[i] as i64),
                "symbol must be symmetric on validated input"
            );
            if s == -1 {
                adjacency[i] |= 1 << j;
                adjacency[j] |= 1 << i;
            }
        }
    }
    PrimeGraph {
        vertices: ctx.primes.clone(),
        adjacency,
    }
}

/// True iff the vertices split into two nonempty parts, each part touching
/// an even number of crossing edges: the GF(2) Laplacian kernel contains a
/// vector other than 0 and all-ones.
pub fn has_proper_even_partition(g: &PrimeGraph) -> bool {
    let nv = g.vertices.len();
    let mut rows = g.laplacian();
    // all-ones is always in the kernel; a proper partition needs nullity >= 2
    nv - gf2_rank(&mut rows) >= 2
}

/// Parity of the number of spanning trees: GF(2) determinant of the
/// Laplacian with one row and column deleted (Matrix-Tree theorem mod 2).
pub fn spanning_tree_parity(g: &PrimeGraph) -> Parity {
    let nv = g.vertices.len();
    if nv == 0 {
        return Parity::Even;
    }
    let lap = g.laplacian();
    let mut reduced: Vec<u64> = lap[1..].iter().map(|row| row >> 1).collect();
    if gf2_rank(&mut reduced) == nv - 1 {
        Parity::Odd
    } else {
        Parity::Even
    }
}

/// The class-group condition read off the graph: odd spanning-tree count.
pub fn condition_11_via_graph(ctx: &SquarefreeProduct) -> Result<bool, CritError> {
    if !ctx.seed_family {
        return Err(CritError::NotSeedFamily);
    }
    Ok(spanning_tree_parity(&build_graph(ctx)) == Parity::Odd)
}

/// Greedily pick `count` primes 1 mod 8 below `bound` that are quadratic
/// non-residues against p0 and residues against every earlier pick, so that
/// every subset product with p0 yields a star graph with one spanning tree.
pub fn generate_family(p0: u64, count: usize, bound: u64) -> Result<FamilySpec, CritError> {
    if !is_prime_u64(p0) || p0 % 8 == 1 || p0 == 2 {
        return Err(CritError::BadSeed(p0));
    }
    let mut sigma: Vec<u64> = Vec::with_capacity(count);
    let mut p = 17u64;
    while sigma.len() < count && p <= bound {
        if p % 8 == 1
            && is_prime_u64(p)
            && jacobi_i64(p as i64, p0 as i64) == -1
            && sigma
                .iter()
                .all(|&q| jacobi_i64(p as i64, q as i64) == 1)
        {
            sigma.push(p);
        }
        p += 8;
    }
    let spec = FamilySpec {
        p0,
        sigma,
        search_bound: bound,
    };
    if spec.sigma.len() < count {
        Err(CritError::BoundExhausted { partial: spec })
    } else {
        Ok(spec)
    }
}

/// Verdict of the residue-class pre-screen for twists m = 1, 2, 3 mod 8.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ScreenVerdict {
    NonCongruentByRemark,
    /// The all-primes-1-mod-8 branch: non-congruent iff the product of
    /// quartic symbols (2/p)_4 * (-1)^((p-1)/8) over all primes is -1.
    QuarticCondition { product: i32, non_congruent: bool },
    Inapplicable,
}

/// Pre-screen for non-congruence of m in {n, 2n} with m = 1, 2, 3 mod 8:
/// immediate when exactly one prime lies outside 1 mod 8, conditional on
/// the quartic product for odd m with every prime 1 mod 8; inapplicable
/// otherwise or when the class-group condition fails.
pub fn screen_non_congruent(ctx: &SquarefreeProduct, m: u64) -> Result<ScreenVerdict, CritError> {
    if (m != ctx.n && m != 2 * ctx.n) || !matches!(m % 8, 1 | 2 | 3) {
        return Err(CritError::BadTwist(m));
    }
    if !condition_11_holds(ctx) {
        return Ok(ScreenVerdict::Inapplicable);
    }
    let outside = ctx.primes.iter().filter(|&&p| p % 8 != 1).count();
    if outside == 1 {
        return Ok(ScreenVerdict::NonCongruentByRemark);
    }
    // The quartic-product condition applies only to odd m with every prime
    // 1 mod 8; other shapes carry no verdict.
    if outside > 0 || m % 2 == 0 {
        return Ok(ScreenVerdict::Inapplicable);
    }
    let mut product = 1i32;
    for &p in &ctx.primes {
        let q4 = quartic_residue_of_two(p).unwrap();
        let sign = if (p - 1) / 8 % 2 == 0 { 1 } else { -1 };
        product *= q4 * sign;
    }
    Ok(ScreenVerdict::QuarticCondition {
        product,
        non_congruent: product == -1,
    })
}

/// Exhaustive spanning-tree count for small graphs (test oracle).
pub fn brute_spanning_tree_count(g: &PrimeGraph) -> u64 {
    let nv = g.vertices.len();
    assert!(nv <= 8, "oracle limited to 8 vertices");
    if nv <= 1 {
        return 1;
    }
    let edges = g.edges();
    let ne = edges.len();
    if ne < nv - 1 {
        return 0;
    }
    let mut count = 0u64;
    // all edge subsets of size nv-1, acyclicity via union-find
    for mask in 0u32..1 << ne {
        if mask.count_ones() as usize != nv - 1 {
            continue;
        }
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut ok = true;
        for (e, &(i, j)) in edges.iter().enumerate() {
            if mask >> e & 1 == 1 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri == rj {
                    ok = false;
                    break;
                }
                parent[ri] = rj;
            }
        }
        if ok {
            count += 1;
        }
    }
    count
}

/// Exhaustive proper-even-partition search (test oracle).
pub fn brute_proper_even_partition(g: &PrimeGraph) -> bool {
    let nv = g.vertices.len();
    assert!(nv <= 20, "oracle limited to 20 vertices");
    // nonempty proper subsets up to complement: fix vertex 0 out of the part
    for part in 1u32..1 << (nv - 1) {
        let part = part << 1; // vertex 0 never in the part; part proper, nonempty
        let mut all_even = true;
        for v in 0..nv {
            let crossing = if part >> v & 1 == 1 {
                g.adjacency[v] & !(part as u64)
            } else {
                g.adjacency[v] & part as u64
            };
            if crossing.count_ones() % 2 == 1 {
                all_even = false;
                break;
            }
        }
        if all_even {
            return true;
        }
    }
    false
}

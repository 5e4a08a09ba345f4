//! Chain groups and differentials of the cube of resolutions.
//!
//! At a vertex with circles `C_1 < … < C_k` (ordered by their first rung) the
//! chain group is the exterior algebra on `a_1, …, a_k`; a dot on `C_s` is the
//! generator `a_s`. A [`DotPattern`] is a mask over the circles, read as the
//! wedge of its generators in increasing order.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{wedge_masks, ScalarConfig};
use crate::homology::{BigradedComplex, SparseMatrix};
use crate::webs::{Resolution, ResolutionCube, RungKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DotPattern(pub u64);

impl DotPattern {
    pub fn dots(self) -> u32 {
        self.0.count_ones()
    }

    pub fn has(self, circle: usize) -> bool {
        self.0 >> circle & 1 == 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexModule {
    pub vertex: u64,
    pub circles: usize,
    pub h: i32,
    pub q_shift: i32,
}

impl VertexModule {
    pub fn rank(&self) -> usize {
        1 << self.circles
    }

    pub fn basis(&self) -> impl Iterator<Item = DotPattern> {
        (0..1u64 << self.circles).map(DotPattern)
    }

    pub fn q_degree(&self, p: DotPattern) -> i32 {
        self.q_shift + self.circles as i32 - 2 * p.dots() as i32
    }

    pub fn parity(&self, p: DotPattern) -> u8 {
        (p.dots() % 2) as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeCase {
    MergeA,
    SplitA,
    MergeB,
    SplitB,
    Birth,
    Death,
}

impl EdgeCase {
    pub fn parity(self) -> u8 {
        match self {
            EdgeCase::MergeA | EdgeCase::SplitB | EdgeCase::Death => 0,
            EdgeCase::SplitA | EdgeCase::MergeB | EdgeCase::Birth => 1,
        }
    }

    pub fn is_merge(self) -> bool {
        matches!(self, EdgeCase::MergeA | EdgeCase::MergeB)
    }

    pub fn is_split(self) -> bool {
        matches!(self, EdgeCase::SplitA | EdgeCase::SplitB)
    }

    fn case_a(self) -> bool {
        matches!(self, EdgeCase::MergeA | EdgeCase::SplitA)
    }

    /// The map in the opposite direction at the same crossing.
    pub fn reverse(self) -> EdgeCase {
        match self {
            EdgeCase::MergeA => EdgeCase::SplitA,
            EdgeCase::SplitA => EdgeCase::MergeA,
            EdgeCase::MergeB => EdgeCase::SplitB,
            EdgeCase::SplitB => EdgeCase::MergeB,
            EdgeCase::Birth => EdgeCase::Death,
            EdgeCase::Death => EdgeCase::Birth,
        }
    }
}

/// Combinatorial input of a Frobenius map.
///
/// `images[s]` is the output circle of input circle `s`. For a merge, `pair`
/// holds the two input circles and both map to the same output; for a split,
/// `pair` holds the two output circles and the split circle maps to the
/// first. For birth and death `pair.0` is the created or removed circle and
/// `images` of a dying circle is ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrobeniusSpec {
    pub case: EdgeCase,
    pub n_in: usize,
    pub n_out: usize,
    pub images: Vec<usize>,
    pub pair: (usize, usize),
    /// Colors of the rungs meeting the first and second circle of `pair`.
    pub colors: (usize, usize),
}

/// Image of a monomial under the algebra map `a_s ↦ c_s a_{images[s]}`.
fn push_forward(mask: u64, images: &[usize], coeff: impl Fn(usize) -> i64) -> Option<(i64, u64)> {
    let (mut sign, mut acc) = (1i64, 0u64);
    let mut m = mask;
    while m != 0 {
        let s = m.trailing_zeros() as usize;
        m &= m - 1;
        let (e, next) = wedge_masks(acc, 1 << images[s])?;
        sign *= e * coeff(s);
        acc = next;
    }
    Some((sign, acc))
}

/// The matrix of a chronological Frobenius map in the dot-pattern bases,
/// together with its parity.
pub fn frobenius_map(spec: &FrobeniusSpec, t: &ScalarConfig) -> Result<(SparseMatrix, u8)> {
    let expected_out = match spec.case {
        c if c.is_merge() => spec.n_in.checked_sub(1),
        c if c.is_split() => Some(spec.n_in + 1),
        EdgeCase::Birth => Some(spec.n_in + 1),
        _ => spec.n_in.checked_sub(1),
    };
    if expected_out != Some(spec.n_out) || spec.images.len() != spec.n_in {
        return Err(Error::EdgeAnomaly(format!(
            "{:?} cannot take {} circles to {}",
            spec.case, spec.n_in, spec.n_out
        )));
    }
    let (cp, cq) = spec.colors;
    let (tpq, tqp) = (t.t(cp, cq), t.t(cq, cp));
    let (p, q) = spec.pair;
    let mut cols = Vec::with_capacity(1 << spec.n_in);
    for mask in 0..1u64 << spec.n_in {
        let mut col: BTreeMap<usize, i64> = BTreeMap::new();
        match spec.case {
            EdgeCase::MergeA | EdgeCase::MergeB => {
                // t values are units, so the quotient is a product.
                let lambda = tpq * tqp;
                if let Some((c, m)) =
                    push_forward(mask, &spec.images, |s| if s == q { lambda } else { 1 })
                {
                    col.insert(m as usize, c);
                }
            }
            EdgeCase::SplitA | EdgeCase::SplitB => {
                let omega = if spec.case.case_a() { [(p, -tpq), (q, tqp)] } else { [(p, -tqp), (q, tpq)] };
                if let Some((c, m)) = push_forward(mask, &spec.images, |_| 1) {
                    for (g, a) in omega {
                        if let Some((e, mm)) = wedge_masks(m, 1 << g) {
                            *col.entry(mm as usize).or_insert(0) += c * e * a;
                        }
                    }
                }
            }
            EdgeCase::Birth => {
                if let Some((c, m)) = push_forward(mask, &spec.images, |_| 1) {
                    col.insert(m as usize, c);
                }
            }
            EdgeCase::Death => {
                if mask >> p & 1 == 1 {
                    let rest = mask & !(1 << p);
                    let (e, _) = wedge_masks(1 << p, rest).expect("disjoint");
                    let (c, m) = push_forward(rest, &spec.images, |_| 1).expect("injective");
                    col.insert(m as usize, e * c);
                }
            }
        }
        col.retain(|_, v| *v != 0);
        cols.push(col);
    }
    Ok((SparseMatrix::from_columns(1 << spec.n_out, cols), spec.case.parity()))
}

/// Geometry of one cube edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeClass {
    pub case: EdgeCase,
    /// Map from the source vertex to the target vertex.
    pub forward: FrobeniusSpec,
    /// Map back from the target vertex at the same crossing.
    pub backward: FrobeniusSpec,
}

/// Merge or split, and case a or b, of the edge leaving `v` along crossing `c`.
pub fn classify_edge(cube: &ResolutionCube, v: u64, c: usize) -> Result<EdgeClass> {
    let w = v | 1 << c;
    let (sv, sw) = (&cube.vertices[v as usize], &cube.vertices[w as usize]);
    let site = &cube.sites[c];
    let (kl, kr) = (RungKey::Cross { site: c, right: false }, RungKey::Cross { site: c, right: true });
    let find = |vx: &crate::webs::CubeVertex, k: RungKey| {
        vx.circle_of(k)
            .ok_or_else(|| Error::EdgeAnomaly(format!("rung {k:?} lies on no circle")))
    };
    let (pv, qv, pw, qw) = (find(sv, kl)?, find(sv, kr)?, find(sw, kl)?, find(sw, kr)?);
    let colors = (site.col + 1, site.col + 2);
    let merge = match (pv == qv, pw == qw) {
        (false, true) => true,
        (true, false) => false,
        _ => {
            return Err(Error::EdgeAnomaly(format!(
                "crossing {c} at vertex {v:#b} neither merges nor splits"
            )))
        }
    };
    // Case from the resolution at the two-circle end.
    let two_side_bit = if merge { v >> c & 1 == 1 } else { w >> c & 1 == 1 };
    let case_a = site.resolution(two_side_bit) == Resolution::RightFirst;
    // Matching of the circles away from the crossing.
    let (two, one, p2, q2, m1) = if merge { (sv, sw, pv, qv, pw) } else { (sw, sv, pw, qw, pv) };
    let mut two_to_one = vec![usize::MAX; two.circles.len()];
    let mut one_to_two = vec![usize::MAX; one.circles.len()];
    for (s, circ) in two.circles.iter().enumerate() {
        if s == p2 || s == q2 {
            two_to_one[s] = m1;
            continue;
        }
        let t = one.circle_of(circ.rungs[0]).filter(|&t| one.circles[t].rungs == circ.rungs).ok_or_else(
            || Error::EdgeAnomaly(format!("circle {s} is not preserved along crossing {c}")),
        )?;
        two_to_one[s] = t;
        one_to_two[t] = s;
    }
    one_to_two[m1] = p2;
    let merge_spec = FrobeniusSpec {
        case: if case_a { EdgeCase::MergeA } else { EdgeCase::MergeB },
        n_in: two.circles.len(),
        n_out: one.circles.len(),
        images: two_to_one,
        pair: (p2, q2),
        colors,
    };
    let split_spec = FrobeniusSpec {
        case: merge_spec.case.reverse(),
        n_in: one.circles.len(),
        n_out: two.circles.len(),
        images: one_to_two,
        pair: (p2, q2),
        colors,
    };
    let (forward, backward) = if merge { (merge_spec, split_spec) } else { (split_spec, merge_spec) };
    Ok(EdgeClass { case: forward.case, forward, backward })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeMap {
    pub source: u64,
    pub crossing: usize,
    pub target: u64,
    pub class: EdgeClass,
    pub matrix: SparseMatrix,
    pub parity: u8,
    /// Crossings are composed in increasing index, bottom to top.
    pub chronology: usize,
    pub sign: i8,
}

impl EdgeMap {
    pub fn case(&self) -> EdgeCase {
        self.class.case
    }
}

/// Unsigned edge maps of every cube edge.
pub fn edge_maps(cube: &ResolutionCube, t: &ScalarConfig) -> Result<Vec<EdgeMap>> {
    cube.edges()
        .into_par_iter()
        .map(|(v, c)| {
            let class = classify_edge(cube, v, c)?;
            let (matrix, parity) = frobenius_map(&class.forward, t)?;
            Ok(EdgeMap { source: v, crossing: c, target: v | 1 << c, class, matrix, parity, chronology: c, sign: 1 })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaceRelation {
    BothZero,
    Commute,
    Anticommute,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceRecord {
    pub base: u64,
    pub crossings: (usize, usize),
    pub relation: FaceRelation,
    /// `p(e_i)·p(e_j)` on the first path; odd predicts anticommutation.
    pub koszul: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignAssignment {
    /// Indexed like the edge list.
    pub signs: Vec<i8>,
    pub faces: Vec<FaceRecord>,
    /// Dimension of the solution space over 𝔽₂.
    pub freedom: usize,
    pub seed: u64,
}

fn edge_index(edges: &[EdgeMap]) -> HashMap<(u64, usize), usize> {
    edges.iter().enumerate().map(|(k, e)| ((e.source, e.crossing), k)).collect()
}

/// Face relations of the unsigned maps.
pub fn face_records(cube: &ResolutionCube, edges: &[EdgeMap]) -> Result<Vec<FaceRecord>> {
    let idx = edge_index(edges);
    cube.faces()
        .into_par_iter()
        .map(|(v, i, j)| {
            let e = |s: u64, c: usize| &edges[idx[&(s, c)]];
            let (a1, a2) = (e(v, i), e(v | 1 << i, j));
            let (b1, b2) = (e(v, j), e(v | 1 << j, i));
            let a = a2.matrix.mul(&a1.matrix)?;
            let b = b2.matrix.mul(&b1.matrix)?;
            let relation = if a.is_zero() && b.is_zero() {
                FaceRelation::BothZero
            } else if a == b {
                FaceRelation::Commute
            } else if a.add(&b, 1).is_zero() {
                FaceRelation::Anticommute
            } else {
                return Err(Error::Invariant(format!(
                    "face at {v:#b} on crossings {i},{j}: composites are not equal up to sign"
                )));
            };
            Ok(FaceRecord { base: v, crossings: (i, j), relation, koszul: a1.parity * a2.parity })
        })
        .collect()
}

/// Signs making every square anticommute.
///
/// With `seed == 0` the lexicographically least solution (free variables
/// zero); otherwise the free variables are drawn from a seeded generator.
pub fn sign_assignment(cube: &ResolutionCube, edges: &[EdgeMap], seed: u64) -> Result<SignAssignment> {
    let faces = face_records(cube, edges)?;
    let idx = edge_index(edges);
    let n = edges.len();
    let words = n.div_ceil(64) + 1; // last word holds the right-hand side bit
    let rhs_word = words - 1;
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for f in &faces {
        let b = match f.relation {
            FaceRelation::BothZero => continue,
            FaceRelation::Commute => 1,
            FaceRelation::Anticommute => 0,
        };
        let (v, i, j) = (f.base, f.crossings.0, f.crossings.1);
        let mut row = vec![0u64; words];
        for k in [idx[&(v, i)], idx[&(v | 1 << i, j)], idx[&(v, j)], idx[&(v | 1 << j, i)]] {
            row[k / 64] ^= 1 << (k % 64);
        }
        row[rhs_word] = b;
        rows.push(row);
    }
    // Reduced row echelon form, pivots taken from the highest column down.
    let bit = |r: &[u64], k: usize| r[k / 64] >> (k % 64) & 1 == 1;
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, column)
    let mut next = 0;
    for col in (0..n).rev() {
        let Some(r) = (next..rows.len()).find(|&r| bit(&rows[r], col)) else { continue };
        rows.swap(next, r);
        let pivot = rows[next].clone();
        for (k, row) in rows.iter_mut().enumerate() {
            if k != next && bit(row, col) {
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x ^= y;
                }
            }
        }
        pivots.push((next, col));
        next += 1;
    }
    if rows[next..].iter().any(|r| r[rhs_word] & 1 == 1) {
        return Err(Error::SignSystemUnsolvable);
    }
    let is_pivot: Vec<bool> = {
        let mut v = vec![false; n];
        for &(_, c) in &pivots {
            v[c] = true;
        }
        v
    };
    let mut x = vec![false; n];
    if seed != 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..n {
            if !is_pivot[k] {
                x[k] = rng.gen();
            }
        }
    }
    for &(r, c) in &pivots {
        let row = &rows[r];
        let mut val = row[rhs_word] & 1 == 1;
        for k in 0..n {
            if k != c && !is_pivot[k] && bit(row, k) && x[k] {
                val = !val;
            }
        }
        x[c] = val;
    }
    let signs = x.iter().map(|&b| if b { -1 } else { 1 }).collect();
    Ok(SignAssignment { signs, faces, freedom: n - pivots.len(), seed })
}

/// The signed, normalized complex of a cube.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeComplex {
    pub modules: Vec<VertexModule>,
    pub edges: Vec<EdgeMap>,
    pub signs: SignAssignment,
    /// Vertex → position of its first basis element in its chain group.
    pub offsets: Vec<usize>,
    pub basepoints: Vec<Option<usize>>,
    pub complex: BigradedComplex,
}

pub fn assemble_complex(cube: &ResolutionCube, t: &ScalarConfig) -> Result<CubeComplex> {
    assemble_complex_seeded(cube, t, 0)
}

pub fn assemble_complex_seeded(cube: &ResolutionCube, t: &ScalarConfig, seed: u64) -> Result<CubeComplex> {
    let modules: Vec<VertexModule> = cube
        .vertices
        .iter()
        .map(|v| VertexModule { vertex: v.bits, circles: v.circles.len(), h: v.h, q_shift: v.q_shift })
        .collect();
    let mut edges = edge_maps(cube, t)?;
    let signs = sign_assignment(cube, &edges, seed)?;
    for (e, &s) in edges.iter_mut().zip(&signs.signs) {
        e.sign = s;
    }
    let mut groups: BTreeMap<i32, Vec<i32>> = BTreeMap::new();
    let mut offsets = vec![0; modules.len()];
    for m in &modules {
        let g = groups.entry(m.h).or_default();
        offsets[m.vertex as usize] = g.len();
        g.extend(m.basis().map(|p| m.q_degree(p)));
    }
    let mut cols: BTreeMap<i32, Vec<BTreeMap<usize, i64>>> =
        groups.iter().map(|(&h, g)| (h, vec![BTreeMap::new(); g.len()])).collect();
    for e in &edges {
        let (src, tgt) = (&modules[e.source as usize], &modules[e.target as usize]);
        if tgt.h != src.h + 1 {
            return Err(Error::Invariant(format!("edge {:#b} does not raise h by one", e.source)));
        }
        let block = cols.get_mut(&src.h).unwrap();
        let (so, to) = (offsets[e.source as usize], offsets[e.target as usize]);
        for (j, col) in e.matrix.cols.iter().enumerate() {
            for &(i, v) in col {
                *block[so + j].entry(to + i).or_insert(0) += e.sign as i64 * v;
            }
        }
    }
    let mut d = BTreeMap::new();
    for (h, c) in cols {
        if let Some(g) = groups.get(&(h + 1)) {
            let m = SparseMatrix::from_columns(g.len(), c);
            if !m.is_zero() {
                d.insert(h, m);
            }
        }
    }
    let complex = BigradedComplex::new(groups, d)?;
    complex.check_d_squared()?;
    let basepoints = (0..modules.len()).map(|v| cube.basepoint_circle(v)).collect();
    Ok(CubeComplex { modules, edges, signs, offsets, basepoints, complex })
}

/// `Δ = a_b ∧ –` and the contraction `X` with `a_b` on one vertex module.
pub fn reduced_operators(module: &VertexModule, basepoint: usize) -> (SparseMatrix, SparseMatrix) {
    let n = module.rank();
    let b = 1u64 << basepoint;
    let mut x = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    for mask in 0..n as u64 {
        delta.push(match wedge_masks(b, mask) {
            Some((s, m)) => vec![(m as usize, s)],
            None => vec![],
        });
        x.push(if mask & b != 0 {
            let rest = mask & !b;
            let (s, _) = wedge_masks(b, rest).expect("disjoint");
            vec![(rest as usize, s)]
        } else {
            vec![]
        });
    }
    (SparseMatrix { rows: n, cols: x }, SparseMatrix { rows: n, cols: delta })
}

/// Block-diagonal operator on each chain group from per-vertex blocks.
fn global_operator(cx: &CubeComplex, block: impl Fn(usize) -> SparseMatrix) -> BTreeMap<i32, SparseMatrix> {
    let mut cols: BTreeMap<i32, Vec<Vec<(usize, i64)>>> =
        cx.complex.groups.iter().map(|(&h, g)| (h, vec![Vec::new(); g.len()])).collect();
    for (v, m) in cx.modules.iter().enumerate() {
        let b = block(v);
        let off = cx.offsets[v];
        let c = cols.get_mut(&m.h).unwrap();
        for (j, col) in b.cols.iter().enumerate() {
            c[off + j] = col.iter().map(|&(i, x)| (off + i, x)).collect();
        }
    }
    cols.into_iter()
        .map(|(h, c)| (h, SparseMatrix { rows: cx.complex.rank(h), cols: c }))
        .collect()
}

fn commutes(cx: &CubeComplex, op: &BTreeMap<i32, SparseMatrix>, anti: bool) -> Result<bool> {
    for (&h, oh) in op {
        let d = cx.complex.differential(h);
        let Some(next) = op.get(&(h + 1)) else { continue };
        let lhs = d.mul(oh)?;
        let rhs = next.mul(&d)?;
        if !lhs.add(&rhs, if anti { 1 } else { -1 }).is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Identities of the structure maps on every vertex module.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub mu_delta: bool,
    pub mu_delta_prime: bool,
    pub delta_squared: bool,
    pub x_delta_identity: bool,
    pub d_commutes_x: bool,
    pub d_commutes_delta: bool,
    /// `dΔ = −Δd`, recorded for diagnosis.
    pub d_anticommutes_delta: bool,
    pub d_anticommutes_x: bool,
}

impl StructureReport {
    pub fn all(&self) -> bool {
        self.mu_delta
            && self.mu_delta_prime
            && self.delta_squared
            && self.x_delta_identity
            && self.d_commutes_x
            && self.d_commutes_delta
    }
}

pub fn structure_checks(cx: &CubeComplex, t: &ScalarConfig) -> Result<StructureReport> {
    let (mut mu_delta, mut mu_delta_prime) = (true, true);
    for e in &cx.edges {
        let (back, _) = frobenius_map(&e.class.backward, t)?;
        // Split first, then merge, on the one-circle end.
        let zero = if e.case().is_split() { back.mul(&e.matrix)? } else { e.matrix.mul(&back)? };
        let ok = zero.is_zero();
        if e.case().case_a() {
            mu_delta &= ok;
        } else {
            mu_delta_prime &= ok;
        }
    }
    let (mut delta_squared, mut x_delta_identity) = (true, true);
    let mut xs = Vec::new();
    let mut deltas = Vec::new();
    for (v, m) in cx.modules.iter().enumerate() {
        let b = cx.basepoints[v].ok_or_else(|| Error::Invariant("vertex without basepoint circle".into()))?;
        let (x, d) = reduced_operators(m, b);
        delta_squared &= d.mul(&d)?.is_zero();
        let anti = x.mul(&d)?.add(&d.mul(&x)?, 1);
        x_delta_identity &= anti == SparseMatrix::identity(m.rank());
        xs.push(x);
        deltas.push(d);
    }
    let x_op = global_operator(cx, |v| xs[v].clone());
    let d_op = global_operator(cx, |v| deltas[v].clone());
    Ok(StructureReport {
        mu_delta,
        mu_delta_prime,
        delta_squared,
        x_delta_identity,
        d_commutes_x: commutes(cx, &x_op, false)?,
        d_commutes_delta: commutes(cx, &d_op, false)?,
        d_anticommutes_delta: commutes(cx, &d_op, true)?,
        d_anticommutes_x: commutes(cx, &x_op, true)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedCertificate {
    /// `d` maps `ker Δ` into itself.
    pub subcomplex: bool,
    /// `ker Δ = im Δ` on every vertex module.
    pub delta_exact: bool,
    /// `gdim 𝔉 = (1 + q²)·gdim ker Δ` in every homological degree.
    pub graded_split: bool,
}

impl ReducedCertificate {
    pub fn holds(&self) -> bool {
        self.subcomplex && self.delta_exact && self.graded_split
    }
}

/// `q·ker Δ` as a complex, spanned by the patterns dotted on the basepoint
/// circle.
pub fn reduced_split(cx: &CubeComplex) -> Result<(BigradedComplex, ReducedCertificate)> {
    // Membership and new index of every basis element.
    let mut keep: BTreeMap<i32, Vec<Option<usize>>> =
        cx.complex.groups.iter().map(|(&h, g)| (h, vec![None; g.len()])).collect();
    let mut groups: BTreeMap<i32, Vec<i32>> = BTreeMap::new();
    let mut delta_exact = true;
    for (v, m) in cx.modules.iter().enumerate() {
        let b = cx.basepoints[v].ok_or_else(|| Error::Invariant("vertex without basepoint circle".into()))?;
        let (_, delta) = reduced_operators(m, b);
        let image = delta.cols.iter().filter(|c| !c.is_empty()).count();
        delta_exact &= 2 * image == m.rank();
        let g = groups.entry(m.h).or_default();
        for p in m.basis().filter(|p| p.has(b)) {
            keep.get_mut(&m.h).unwrap()[cx.offsets[v] + p.0 as usize] = Some(g.len());
            g.push(m.q_degree(p) + 1);
        }
    }
    let mut subcomplex = true;
    let mut d = BTreeMap::new();
    for (&h, m) in &cx.complex.d {
        let (src, tgt) = (&keep[&h], &keep[&(h + 1)]);
        let mut cols = Vec::new();
        for (j, col) in m.cols.iter().enumerate() {
            if src[j].is_none() {
                continue;
            }
            let mut c = Vec::new();
            for &(i, x) in col {
                match tgt[i] {
                    Some(k) => c.push((k, x)),
                    None => subcomplex = false,
                }
            }
            c.sort_unstable();
            cols.push(c);
        }
        d.insert(h, SparseMatrix { rows: groups[&(h + 1)].len(), cols });
    }
    if !subcomplex {
        return Err(Error::Invariant("the differential does not preserve ker Δ".into()));
    }
    let reduced = BigradedComplex::new(groups, d)?;
    let mut predicted: BTreeMap<(i32, i32), usize> = BTreeMap::new();
    for ((h, q), r) in reduced.chain_ranks() {
        // q·K occupies degrees q-1 (as K) and q+1 (as q²K).
        *predicted.entry((h, q - 1)).or_insert(0) += r;
        *predicted.entry((h, q + 1)).or_insert(0) += r;
    }
    let graded_split = predicted == cx.complex.chain_ranks();
    Ok((reduced, ReducedCertificate { subcomplex, delta_exact, graded_split }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{homology, poincare, Coefficients, HomologyGroup, Poly2};
    use crate::webs::{cube_of, Braid, OrientedLinkDiagram};

    fn cube(s: &str) -> ResolutionCube {
        cube_of(&OrientedLinkDiagram::from_braid(Braid::parse(s).unwrap())).unwrap()
    }

    fn ones(n: usize) -> ScalarConfig {
        ScalarConfig::new(n)
    }

    fn spec(case: EdgeCase, n_in: usize, n_out: usize, images: Vec<usize>, pair: (usize, usize)) -> FrobeniusSpec {
        FrobeniusSpec { case, n_in, n_out, images, pair, colors: (1, 2) }
    }

    #[test]
    fn split_formulas() {
        let t = ScalarConfig::new(2).with_t(1, 2, -1).unwrap();
        let (m, p) = frobenius_map(&spec(EdgeCase::SplitA, 1, 2, vec![0], (0, 1)), &t).unwrap();
        assert_eq!(p, 1);
        // δ(1) = −t12 a_1 + t21 a_2
        assert_eq!(m.cols[0], vec![(0b01, 1), (0b10, 1)]);
        // δ(a) = t21 a_1 a_2
        assert_eq!(m.cols[1], vec![(0b11, 1)]);
        let (m, p) = frobenius_map(&spec(EdgeCase::SplitB, 1, 2, vec![0], (0, 1)), &t).unwrap();
        assert_eq!(p, 0);
        assert_eq!(m.cols[0], vec![(0b01, -1), (0b10, -1)]);
        assert_eq!(m.cols[1], vec![(0b11, -1)]);
    }

    #[test]
    fn merge_formulas() {
        let t = ScalarConfig::new(2).with_t(2, 1, -1).unwrap();
        let (m, p) = frobenius_map(&spec(EdgeCase::MergeA, 2, 1, vec![0, 0], (0, 1)), &t).unwrap();
        assert_eq!(p, 0);
        assert_eq!(m.cols[0], vec![(0, 1)]);
        assert_eq!(m.cols[0b01], vec![(1, 1)]);
        // μ(dot on the right) = t12 t21⁻¹ · dotted
        assert_eq!(m.cols[0b10], vec![(1, -1)]);
        assert!(m.cols[0b11].is_empty());
        let (_, p) = frobenius_map(&spec(EdgeCase::MergeB, 2, 1, vec![0, 0], (0, 1)), &t).unwrap();
        assert_eq!(p, 1);
    }

    #[test]
    fn mu_delta_vanishes_for_all_signs() {
        for bits in 0..4 {
            let t = ScalarConfig::from_adjacent_bits(2, bits);
            for (split, merge) in [(EdgeCase::SplitA, EdgeCase::MergeA), (EdgeCase::SplitB, EdgeCase::MergeB)] {
                // A passive circle on either side checks the sign bookkeeping.
                let (d, _) = frobenius_map(&spec(split, 2, 3, vec![1, 0], (1, 2)), &t).unwrap();
                let (m, _) = frobenius_map(&spec(merge, 3, 2, vec![1, 0, 0], (1, 2)), &t).unwrap();
                assert!(m.mul(&d).unwrap().is_zero(), "{split:?} bits {bits}");
            }
        }
    }

    #[test]
    fn birth_and_death() {
        let t = ones(2);
        let (i, p) = frobenius_map(&spec(EdgeCase::Birth, 1, 2, vec![1], (0, 0)), &t).unwrap();
        assert_eq!(p, 1);
        assert_eq!(i.cols, vec![vec![(0, 1)], vec![(0b10, 1)]]);
        let (e, p) = frobenius_map(&spec(EdgeCase::Death, 2, 1, vec![0, 0], (1, 1)), &t).unwrap();
        assert_eq!(p, 0);
        assert_eq!(e.cols, vec![vec![], vec![], vec![(0, 1)], vec![(1, -1)]]);
        assert!(frobenius_map(&spec(EdgeCase::Death, 1, 1, vec![0], (0, 0)), &t).is_err());
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        assert!(frobenius_map(&spec(EdgeCase::MergeA, 2, 2, vec![0, 0], (0, 1)), &ones(2)).is_err());
    }

    #[test]
    fn hopf_edges() {
        let c = cube("2: 1 1");
        let counts = c.circle_counts();
        for (v, k) in c.edges() {
            let class = classify_edge(&c, v, k).unwrap();
            let w = (v | 1 << k) as usize;
            assert_eq!(class.case.is_merge(), counts[v as usize] > counts[w]);
        }
        let v0 = counts.iter().position(|&n| n == 2).unwrap() as u64;
        if v0 == 0 {
            assert!(classify_edge(&c, 0, 0).unwrap().case.is_merge());
        }
    }

    #[test]
    fn one_crossing_signs_are_trivial() {
        let c = cube("2: 1");
        let edges = edge_maps(&c, &ones(1)).unwrap();
        let s = sign_assignment(&c, &edges, 0).unwrap();
        assert!(s.faces.is_empty());
        assert_eq!(s.signs, vec![1]);
    }

    #[test]
    fn hopf_flips_at_most_one_edge() {
        let c = cube("2: 1 1");
        let edges = edge_maps(&c, &ones(1)).unwrap();
        let s = sign_assignment(&c, &edges, 0).unwrap();
        let flips = s.signs.iter().filter(|&&x| x < 0).count();
        match s.faces[0].relation {
            FaceRelation::Commute => assert_eq!(flips, 1),
            _ => assert_eq!(flips, 0),
        }
    }

    #[test]
    fn unknot_module() {
        let c = cube("1:");
        let cx = assemble_complex(&c, &ones(1)).unwrap();
        assert_eq!(cx.complex.groups[&0], vec![1, -1]);
        let (red, cert) = reduced_split(&cx).unwrap();
        assert!(cert.holds());
        assert_eq!(red.groups[&0], vec![0]);
    }

    #[test]
    fn single_circle_operators() {
        let m = VertexModule { vertex: 0, circles: 1, h: 0, q_shift: 0 };
        let (x, d) = reduced_operators(&m, 0);
        assert_eq!(d.cols, vec![vec![(1, 1)], vec![]]);
        assert_eq!(x.cols, vec![vec![], vec![(0, 1)]]);
        let m2 = VertexModule { vertex: 0, circles: 2, h: 0, q_shift: 0 };
        let (x, d) = reduced_operators(&m2, 1);
        let anti = x.mul(&d).unwrap().add(&d.mul(&x).unwrap(), 1);
        assert_eq!(anti, SparseMatrix::identity(4));
    }

    #[test]
    fn left_trefoil() {
        let c = cube("2: -1 -1 -1");
        let cx = assemble_complex(&c, &ones(1)).unwrap();
        let hs: Vec<i32> = cx.complex.groups.keys().copied().collect();
        assert_eq!(hs, vec![-3, -2, -1, 0]);
        let h = homology(&cx.complex).unwrap();
        let free = |hd, q| HomologyGroup { rank: 1, torsion: vec![] } == h.get(hd, q);
        assert!(free(0, -1) && free(0, -3) && free(-3, -7) && free(-3, -9), "{h}");
        let (red, cert) = reduced_split(&cx).unwrap();
        assert!(cert.holds());
        let hr = homology(&red).unwrap();
        assert_eq!(hr.get(0, -2).rank, 1);
        let full = poincare(&h, Coefficients::Q);
        let mut expected = Poly2::default();
        let pr = poincare(&hr, Coefficients::Q);
        for (&(hd, q), &n) in &pr.coeffs {
            expected.add_term(hd, q + 1, n);
            expected.add_term(hd, q - 1, n);
        }
        assert_eq!(full, expected);
    }

    #[test]
    fn trefoil_structure() {
        let c = cube("2: -1 -1 -1");
        let cx = assemble_complex(&c, &ones(1)).unwrap();
        let r = structure_checks(&cx, &ones(1)).unwrap();
        assert!(r.mu_delta && r.mu_delta_prime && r.delta_squared && r.x_delta_identity);
        assert!(r.d_commutes_delta);
    }

    #[test]
    fn seeds_give_valid_complexes() {
        let c = cube("3: 1 -2 1 -2");
        let base = homology(&assemble_complex(&c, &ones(2)).unwrap().complex).unwrap();
        for seed in 1..4 {
            let cx = assemble_complex_seeded(&c, &ones(2), seed).unwrap();
            assert_eq!(homology(&cx.complex).unwrap(), base);
        }
    }
}

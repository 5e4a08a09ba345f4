//! Exterior algebras `P𝒊` attached to colored sequences and the action of the
//! generating diagrams on them.
//!
//! A monomial is a bitmask over the generators of `P𝒊`, listed in the order
//! `x_{1,1}, x_{1,2}, x_{2,1}, …` (the second generator only for thick
//! strands). Strand positions are 0-based in the API.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of linear combinations of monomials.
pub type Lin = BTreeMap<u64, i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Strand {
    pub color: usize,
    /// 1 (simple) or 2 (double).
    pub thick: u8,
}

impl Strand {
    pub fn simple(color: usize) -> Self {
        Strand { color, thick: 1 }
    }

    pub fn double(color: usize) -> Self {
        Strand { color, thick: 2 }
    }
}

impl fmt::Display for Strand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.thick == 2 {
            write!(f, "{}^(2)", self.color)
        } else {
            write!(f, "{}", self.color)
        }
    }
}

/// Symmetric bilinear form of the type A chain.
pub fn cartan(i: usize, j: usize) -> i32 {
    if i == j {
        2
    } else if i.abs_diff(j) == 1 {
        -1
    } else {
        0
    }
}

/// `p_{ij}`: 1 when `i = j` or `i = j + 1`.
pub fn p(i: usize, j: usize) -> u8 {
    u8::from(i == j || i == j + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColoredSequence {
    n: usize,
    entries: Vec<Strand>,
}

impl ColoredSequence {
    pub fn new(n: usize, entries: Vec<Strand>) -> Result<Self> {
        for s in &entries {
            if s.color == 0 || s.color > n {
                return Err(Error::ContextMismatch(format!("color {} outside 1..{n}", s.color)));
            }
            if s.thick != 1 && s.thick != 2 {
                return Err(Error::ContextMismatch(format!("thickness {}", s.thick)));
            }
        }
        let seq = ColoredSequence { n, entries };
        if seq.num_generators() > 63 {
            return Err(Error::ContextMismatch("too many generators".into()));
        }
        Ok(seq)
    }

    /// Parses `"1 2^(2) 3"` (a `^2` suffix is accepted too).
    pub fn parse(n: usize, s: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for tok in s.split_whitespace() {
            let (c, thick) = match tok.split_once('^') {
                Some((c, e)) => {
                    let e = e.trim_start_matches('(').trim_end_matches(')');
                    (c, e.parse::<u8>().map_err(|_| Error::Parse(tok.into()))?)
                }
                None => (tok, 1),
            };
            let color = c.parse::<usize>().map_err(|_| Error::Parse(tok.into()))?;
            entries.push(Strand { color, thick });
        }
        Self::new(n, entries)
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn strands(&self) -> &[Strand] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `ν` as a vector indexed by color - 1.
    pub fn nu(&self) -> Vec<usize> {
        let mut v = vec![0; self.n];
        for s in &self.entries {
            v[s.color - 1] += s.thick as usize;
        }
        v
    }

    pub fn num_generators(&self) -> usize {
        self.entries.iter().map(|s| s.thick as usize).sum()
    }

    /// Index of the first generator of strand `r`.
    pub fn offset(&self, r: usize) -> usize {
        self.entries[..r].iter().map(|s| s.thick as usize).sum()
    }

    /// Linear index of `x_{r,e}`.
    pub fn gen(&self, r: usize, e: u8) -> Result<usize> {
        match self.entries.get(r) {
            Some(s) if e >= 1 && e <= s.thick => Ok(self.offset(r) + e as usize - 1),
            _ => Err(Error::InvalidGenerator(format!("x_{{{},{}}} in {}", r + 1, e, self))),
        }
    }

    /// `(r, e)` of a linear generator index.
    pub fn gen_label(&self, idx: usize) -> (usize, u8) {
        let mut acc = 0;
        for (r, s) in self.entries.iter().enumerate() {
            if idx < acc + s.thick as usize {
                return (r, (idx - acc + 1) as u8);
            }
            acc += s.thick as usize;
        }
        panic!("generator index {idx} out of range")
    }

    /// Constant part of the q-grading on `P𝒊`: pairs `s < s'` with
    /// `i_s = i_{s'} + 1` weighted by thickness, minus the number of thick strands.
    pub fn q_offset(&self) -> i32 {
        let mut off = 0i32;
        for (a, sa) in self.entries.iter().enumerate() {
            if sa.thick == 2 {
                off -= 1;
            }
            for sb in &self.entries[a + 1..] {
                if sa.color == sb.color + 1 {
                    off += (sa.thick * sb.thick) as i32;
                }
            }
        }
        off
    }

    /// Replaces `self[pos..pos+k]` by `block`.
    pub fn splice(&self, pos: usize, k: usize, block: &[Strand]) -> Result<Self> {
        if pos + k > self.len() {
            return Err(Error::InvalidGenerator(format!("position {pos} in {self}")));
        }
        let mut entries = self.entries[..pos].to_vec();
        entries.extend_from_slice(block);
        entries.extend_from_slice(&self.entries[pos + k..]);
        Self::new(self.n, entries)
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Self::new(self.n.max(other.n), entries)
    }
}

impl fmt::Display for ColoredSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarConfig {
    n: usize,
    r: Vec<i8>,
    t: Vec<Vec<i8>>,
}

impl ScalarConfig {
    /// All scalars `+1`.
    pub fn new(n: usize) -> Self {
        ScalarConfig { n, r: vec![1; n], t: vec![vec![1; n]; n] }
    }

    /// Builds from explicit tables (indexed by color - 1).
    pub fn from_tables(r: Vec<i8>, t: Vec<Vec<i8>>) -> Result<Self> {
        let n = r.len();
        if t.len() != n || t.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidScalars("table shape".into()));
        }
        let cfg = ScalarConfig { n, r, t };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        for &v in self.r.iter().chain(self.t.iter().flatten()) {
            if v != 1 && v != -1 {
                return Err(Error::InvalidScalars(format!("{v} is not a unit sign")));
            }
        }
        for i in 0..self.n {
            if self.t[i][i] != 1 {
                return Err(Error::InvalidScalars(format!("t_{{{0}{0}}} must be 1", i + 1)));
            }
            for j in 0..self.n {
                if i.abs_diff(j) != 1 && self.t[i][j] != self.t[j][i] {
                    return Err(Error::InvalidScalars(format!(
                        "t_{{{}{}}} must equal t_{{{}{}}}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn with_r(mut self, i: usize, v: i8) -> Result<Self> {
        self.check_color(i)?;
        self.r[i - 1] = v;
        self.validate()?;
        Ok(self)
    }

    /// Sets `t_{ij}`; for distant colors `t_{ji}` is set as well.
    pub fn with_t(mut self, i: usize, j: usize, v: i8) -> Result<Self> {
        self.check_color(i)?;
        self.check_color(j)?;
        self.t[i - 1][j - 1] = v;
        if i.abs_diff(j) != 1 {
            self.t[j - 1][i - 1] = v;
        }
        self.validate()?;
        Ok(self)
    }

    /// Sign pattern on the adjacent pairs: bit `2(i-1)` sets `t_{i,i+1}`,
    /// bit `2(i-1)+1` sets `t_{i+1,i}`.
    pub fn from_adjacent_bits(n: usize, bits: u64) -> Self {
        let mut cfg = ScalarConfig::new(n);
        for i in 1..n {
            let b = 2 * (i - 1);
            cfg.t[i - 1][i] = if bits >> b & 1 == 1 { -1 } else { 1 };
            cfg.t[i][i - 1] = if bits >> (b + 1) & 1 == 1 { -1 } else { 1 };
        }
        cfg
    }

    fn check_color(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            Err(Error::InvalidScalars(format!("color {i} outside 1..{}", self.n)))
        } else {
            Ok(())
        }
    }

    pub fn r(&self, i: usize) -> i64 {
        self.r.get(i.wrapping_sub(1)).copied().unwrap_or(1) as i64
    }

    pub fn t(&self, i: usize, j: usize) -> i64 {
        if i == 0 || j == 0 || i > self.n || j > self.n {
            return 1;
        }
        self.t[i - 1][j - 1] as i64
    }

    /// `p_{ij}`.
    pub fn p(&self, i: usize, j: usize) -> u8 {
        p(i, j)
    }
}

/// A square-free monomial, i.e. a set of generator indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExteriorMonomial(pub u64);

impl ExteriorMonomial {
    pub const ONE: ExteriorMonomial = ExteriorMonomial(0);

    /// Sorts `factors`; returns the sign of the sorting permutation, or
    /// `None` if a factor repeats.
    pub fn from_factors(factors: &[usize]) -> Option<(i64, ExteriorMonomial)> {
        let mut mask = 0u64;
        let mut sign = 1i64;
        for &g in factors {
            if mask >> g & 1 == 1 {
                return None;
            }
            if (mask >> g).count_ones() % 2 == 1 {
                sign = -sign;
            }
            mask |= 1 << g;
        }
        Some((sign, ExteriorMonomial(mask)))
    }

    pub fn factors(self) -> Vec<usize> {
        (0..64).filter(|&i| self.0 >> i & 1 == 1).collect()
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_one(self) -> bool {
        self.0 == 0
    }
}

/// Sign and mask of `m1 ∧ m2`.
#[inline]
pub fn wedge_masks(m1: u64, m2: u64) -> Option<(i64, u64)> {
    if m1 & m2 != 0 {
        return None;
    }
    let mut inv = 0u32;
    let mut b = m2;
    while b != 0 {
        let g = b.trailing_zeros();
        inv += (m1 >> g).count_ones();
        b &= b - 1;
    }
    Some((if inv.is_multiple_of(2) { 1 } else { -1 }, m1 | m2))
}

#[inline]
fn add_term(acc: &mut Lin, m: u64, c: i64) {
    if c == 0 {
        return;
    }
    let e = acc.entry(m).or_insert(0);
    *e += c;
    if *e == 0 {
        acc.remove(&m);
    }
}

/// Sum of `c·m` into `acc`.
pub fn lin_add(acc: &mut Lin, other: &Lin, c: i64) {
    for (&m, &v) in other {
        add_term(acc, m, c * v);
    }
}

/// `x ∧ f` for a single generator `x`.
fn lin_left_mul_gen(g: usize, f: &Lin) -> Lin {
    let mut out = Lin::new();
    for (&m, &c) in f {
        if m >> g & 1 == 0 {
            let s = if (m & ((1u64 << g) - 1)).count_ones().is_multiple_of(2) { 1 } else { -1 };
            add_term(&mut out, m | 1 << g, s * c);
        }
    }
    out
}

fn lin_mul(a: &Lin, b: &Lin) -> Lin {
    let mut out = Lin::new();
    for (&m1, &c1) in a {
        for (&m2, &c2) in b {
            if let Some((s, m)) = wedge_masks(m1, m2) {
                add_term(&mut out, m, s * c1 * c2);
            }
        }
    }
    out
}

/// Demazure operator on a linear combination; no homogeneity requirement.
pub(crate) fn lin_demazure(u: usize, z: usize, f: &Lin) -> Lin {
    let sel = (1u64 << u) | (1u64 << z);
    let mut out = Lin::new();
    for (&m, &c) in f {
        let mut hits = m & sel;
        while hits != 0 {
            let g = hits.trailing_zeros();
            let below = (m & ((1u64 << g) - 1)).count_ones();
            let s = if below.is_multiple_of(2) { 1 } else { -1 };
            add_term(&mut out, m & !(1u64 << g), s * c);
            hits &= hits - 1;
        }
    }
    out
}

/// Relabels generators by the injective map `map` (old index ↦ new index).
pub(crate) fn lin_relabel(map: &[usize], f: &Lin) -> Lin {
    let mut out = Lin::new();
    for (&m, &c) in f {
        let imgs: Vec<usize> = ExteriorMonomial(m).factors().iter().map(|&g| map[g]).collect();
        let (s, nm) = ExteriorMonomial::from_factors(&imgs).expect("relabeling is injective");
        add_term(&mut out, nm.0, s * c);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExteriorElement {
    terms: Lin,
    context: ColoredSequence,
}

impl ExteriorElement {
    pub fn zero(context: ColoredSequence) -> Self {
        ExteriorElement { terms: Lin::new(), context }
    }

    pub fn one(context: ColoredSequence) -> Self {
        Self::monomial(context, ExteriorMonomial::ONE, 1)
    }

    pub fn monomial(context: ColoredSequence, m: ExteriorMonomial, c: i64) -> Self {
        let mut terms = Lin::new();
        add_term(&mut terms, m.0, c);
        ExteriorElement { terms, context }
    }

    /// `x_{r,e}` (0-based `r`).
    pub fn generator(context: ColoredSequence, r: usize, e: u8) -> Result<Self> {
        let g = context.gen(r, e)?;
        Ok(Self::monomial(context, ExteriorMonomial(1 << g), 1))
    }

    /// The product of the listed generators in the given order.
    pub fn product_of(context: ColoredSequence, factors: &[(usize, u8)]) -> Result<Self> {
        let idx = factors.iter().map(|&(r, e)| context.gen(r, e)).collect::<Result<Vec<_>>>()?;
        Ok(match ExteriorMonomial::from_factors(&idx) {
            Some((s, m)) => Self::monomial(context, m, s),
            None => Self::zero(context),
        })
    }

    pub(crate) fn from_lin(context: ColoredSequence, terms: Lin) -> Self {
        ExteriorElement { terms, context }
    }

    pub fn context(&self) -> &ColoredSequence {
        &self.context
    }

    pub fn terms(&self) -> &Lin {
        &self.terms
    }

    pub fn coefficient(&self, m: ExteriorMonomial) -> i64 {
        self.terms.get(&m.0).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_context(other)?;
        let mut terms = self.terms.clone();
        lin_add(&mut terms, &other.terms, 1);
        Ok(Self::from_lin(self.context.clone(), terms))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, c: i64) -> Self {
        let mut terms = Lin::new();
        lin_add(&mut terms, &self.terms, c);
        Self::from_lin(self.context.clone(), terms)
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.same_context(other)?;
        Ok(Self::from_lin(self.context.clone(), lin_mul(&self.terms, &other.terms)))
    }

    fn same_context(&self, other: &Self) -> Result<()> {
        if self.context != other.context {
            return Err(Error::ContextMismatch(format!("{} vs {}", self.context, other.context)));
        }
        Ok(())
    }

    /// Word length of a homogeneous element (`None` for zero).
    pub fn degree(&self) -> Result<Option<usize>> {
        let mut lens = self.terms.keys().map(|m| m.count_ones() as usize);
        let Some(d) = lens.next() else { return Ok(None) };
        if lens.any(|l| l != d) {
            return Err(Error::Inhomogeneous);
        }
        Ok(Some(d))
    }

    pub fn parity(&self) -> Result<Option<u8>> {
        Ok(self.degree()?.map(|d| (d % 2) as u8))
    }

    /// q-degree: `2·length + q_offset(context)`.
    pub fn q_degree(&self) -> Result<Option<i32>> {
        Ok(self.degree()?.map(|d| 2 * d as i32 + self.context.q_offset()))
    }
}

impl fmt::Display for ExteriorElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&m, &c) in &self.terms {
            let sign = if c < 0 { "-" } else if first { "" } else { "+" };
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{sign}")?;
            let mono: Vec<String> = ExteriorMonomial(m)
                .factors()
                .iter()
                .map(|&g| {
                    let (r, e) = self.context.gen_label(g);
                    format!("x{}{}", r + 1, e)
                })
                .collect();
            match (c.abs(), mono.is_empty()) {
                (a, true) => write!(f, "{a}")?,
                (1, false) => write!(f, "{}", mono.join("^"))?,
                (a, false) => write!(f, "{a}*{}", mono.join("^"))?,
            }
            first = false;
        }
        Ok(())
    }
}

/// `∂_{u,z}` on a homogeneous element.
pub fn demazure(u: usize, z: usize, f: &ExteriorElement) -> Result<ExteriorElement> {
    let ng = f.context.num_generators();
    if u == z || u >= ng || z >= ng {
        return Err(Error::InvalidGenerator(format!("demazure pair ({u}, {z})")));
    }
    f.degree()?;
    Ok(ExteriorElement::from_lin(f.context.clone(), lin_demazure(u, z, &f.terms)))
}

/// Action of a permutation of strand positions: strand `r` moves to `w[r]`,
/// carrying its generators with it.
pub fn permute(w: &[usize], f: &ExteriorElement) -> Result<ExteriorElement> {
    let ctx = &f.context;
    let d = ctx.len();
    let mut seen = vec![false; d];
    if w.len() != d || w.iter().any(|&x| x >= d || std::mem::replace(&mut seen[x], true)) {
        return Err(Error::ContextMismatch(format!("{w:?} is not a permutation of {d} strands")));
    }
    let mut target = vec![ctx.strands()[0]; d];
    for (r, &wr) in w.iter().enumerate() {
        target[wr] = ctx.strands()[r];
    }
    let tctx = ColoredSequence::new(ctx.rank(), target)?;
    let mut map = vec![0; ctx.num_generators()];
    for (r, &wr) in w.iter().enumerate() {
        for e in 1..=ctx.strands()[r].thick {
            map[ctx.gen(r, e)?] = tctx.gen(wr, e)?;
        }
    }
    Ok(ExteriorElement::from_lin(tctx, lin_relabel(&map, &f.terms)))
}

/// Basis of `P𝒊`, ordered by word length then mask.
pub fn basis(seq: &ColoredSequence) -> Vec<ExteriorMonomial> {
    let ng = seq.num_generators();
    let mut v: Vec<u64> = (0..1u64 << ng).collect();
    v.sort_by_key(|&m| (m.count_ones(), m));
    v.into_iter().map(ExteriorMonomial).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GeneratorKind {
    Identity,
    Dot,
    /// `i^(2) → i i`.
    Split,
    /// `i i → i^(2)`.
    Merge,
    Crossing,
}

/// A generating diagram together with the labels at its bottom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Generator {
    pub kind: GeneratorKind,
    pub source: Vec<Strand>,
}

impl Generator {
    pub fn identity(s: Strand) -> Self {
        Generator { kind: GeneratorKind::Identity, source: vec![s] }
    }

    pub fn dot(color: usize) -> Self {
        Generator { kind: GeneratorKind::Dot, source: vec![Strand::simple(color)] }
    }

    pub fn split(color: usize) -> Self {
        Generator { kind: GeneratorKind::Split, source: vec![Strand::double(color)] }
    }

    pub fn merge(color: usize) -> Self {
        Generator { kind: GeneratorKind::Merge, source: vec![Strand::simple(color); 2] }
    }

    pub fn crossing(left: Strand, right: Strand) -> Self {
        Generator { kind: GeneratorKind::Crossing, source: vec![left, right] }
    }

    /// Checks the source shape required by the kind.
    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            GeneratorKind::Identity => self.source.len() == 1,
            GeneratorKind::Dot => self.source.len() == 1 && self.source[0].thick == 1,
            GeneratorKind::Split => self.source.len() == 1 && self.source[0].thick == 2,
            GeneratorKind::Merge => {
                self.source.len() == 2
                    && self.source[0] == self.source[1]
                    && self.source[0].thick == 1
            }
            GeneratorKind::Crossing => self.source.len() == 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGenerator(format!("{:?} on {:?}", self.kind, self.source)))
        }
    }

    pub fn target(&self) -> Vec<Strand> {
        match self.kind {
            GeneratorKind::Identity | GeneratorKind::Dot => self.source.clone(),
            GeneratorKind::Split => vec![Strand::simple(self.source[0].color); 2],
            GeneratorKind::Merge => vec![Strand::double(self.source[0].color)],
            GeneratorKind::Crossing => vec![self.source[1], self.source[0]],
        }
    }

    pub fn degree(&self) -> i32 {
        match self.kind {
            GeneratorKind::Identity => 0,
            GeneratorKind::Dot => 2,
            GeneratorKind::Split | GeneratorKind::Merge => -1,
            GeneratorKind::Crossing => {
                let (a, b) = (self.source[0], self.source[1]);
                -cartan(a.color, b.color) * (a.thick * b.thick) as i32
            }
        }
    }

    pub fn parity(&self) -> u8 {
        match self.kind {
            GeneratorKind::Identity | GeneratorKind::Merge => 0,
            GeneratorKind::Dot | GeneratorKind::Split => 1,
            GeneratorKind::Crossing => {
                let (a, b) = (self.source[0], self.source[1]);
                if a.thick == 1 && b.thick == 1 {
                    p(a.color, b.color)
                } else {
                    0
                }
            }
        }
    }
}

/// Generator-index map of the block swap at `pos` from `src` to `tgt`.
fn swap_map(src: &ColoredSequence, tgt: &ColoredSequence, pos: usize) -> Vec<usize> {
    let ng = src.num_generators();
    let mut map: Vec<usize> = (0..ng).collect();
    let (a, b) = (src.strands()[pos].thick, src.strands()[pos + 1].thick);
    let o = src.offset(pos);
    for e in 0..a as usize {
        map[o + e] = tgt.offset(pos + 1) + e;
    }
    for e in 0..b as usize {
        map[o + a as usize + e] = o + e;
    }
    map
}

/// Applies `g` placed at strand `pos` of `seq` to `f ∈ P(seq)`.
///
/// Returns the target sequence and the image. If the labels of `seq` at
/// `pos` differ from `g.source` the result is the zero element of the
/// target of `g`.
pub fn apply_generator(
    g: &Generator,
    pos: usize,
    seq: &ColoredSequence,
    f: &ExteriorElement,
    scalars: &ScalarConfig,
) -> Result<ExteriorElement> {
    g.validate()?;
    let k = g.source.len();
    if pos + k > seq.len() {
        return Err(Error::InvalidGenerator(format!("{:?} at {pos} in {seq}", g.kind)));
    }
    let target = seq.splice(pos, k, &g.target())?;
    if f.context != *seq {
        return Err(Error::ContextMismatch(format!("{} vs {}", f.context, seq)));
    }
    if seq.strands()[pos..pos + k] != g.source[..] {
        return Ok(ExteriorElement::zero(target));
    }
    let terms = apply_lin(g, pos, seq, &target, &f.terms, scalars);
    Ok(ExteriorElement::from_lin(target, terms))
}

/// Core of [`apply_generator`] on raw coefficients; the labels are assumed to match.
pub(crate) fn apply_lin(
    g: &Generator,
    pos: usize,
    seq: &ColoredSequence,
    target: &ColoredSequence,
    f: &Lin,
    sc: &ScalarConfig,
) -> Lin {
    let o = seq.offset(pos);
    match g.kind {
        GeneratorKind::Identity => f.clone(),
        GeneratorKind::Dot => lin_left_mul_gen(o, f),
        // x_{r,2} of the thick strand becomes x_{r+1,1}; indices are unchanged.
        GeneratorKind::Split => lin_demazure(o, o + 1, f),
        GeneratorKind::Merge => lin_left_mul_gen(o, &lin_demazure(o, o + 1, f)),
        GeneratorKind::Crossing => {
            let (a, b) = (g.source[0], g.source[1]);
            let (ca, cb) = (a.color, b.color);
            let map = swap_map(seq, target, pos);
            match (a.thick, b.thick) {
                (1, 1) => {
                    if ca == cb {
                        let mut out = Lin::new();
                        lin_add(&mut out, &lin_demazure(o, o + 1, f), sc.r(ca));
                        out
                    } else if ca == cb + 1 {
                        let s = lin_relabel(&map, f);
                        let mut lf = Lin::new();
                        add_term(&mut lf, 1 << o, sc.t(cb, ca));
                        add_term(&mut lf, 1 << (o + 1), sc.t(ca, cb));
                        lin_mul(&lf, &s)
                    } else {
                        lin_relabel(&map, f)
                    }
                }
                (2, 2) => {
                    if ca == cb || ca == cb + 1 {
                        Lin::new()
                    } else {
                        lin_relabel(&map, f)
                    }
                }
                (2, 1) => {
                    if ca == cb {
                        Lin::new()
                    } else if ca == cb + 1 {
                        // Source generators: x_{r,1}=o, x_{r,2}=o+1, x_{r+1,1}=o+2.
                        let tt = sc.t(ca, cb) * sc.t(cb, ca);
                        let tb2 = sc.t(cb, ca) * sc.t(cb, ca);
                        let mut poly = Lin::new();
                        add_quadratic(&mut poly, o, o + 2, tt);
                        add_quadratic(&mut poly, o, o + 1, tt);
                        add_quadratic(&mut poly, o + 1, o + 2, tb2);
                        lin_relabel(&map, &lin_mul(&poly, f))
                    } else {
                        lin_relabel(&map, f)
                    }
                }
                _ => {
                    if ca == cb {
                        Lin::new()
                    } else if ca == cb + 1 {
                        // Source generators: x_{r,1}=o, x_{r+1,1}=o+1, x_{r+1,2}=o+2.
                        let ta2 = sc.t(ca, cb) * sc.t(ca, cb);
                        let tt = sc.t(ca, cb) * sc.t(cb, ca);
                        let tb2 = sc.t(cb, ca) * sc.t(cb, ca);
                        let mut poly = Lin::new();
                        add_quadratic(&mut poly, o, o + 2, -ta2);
                        add_quadratic(&mut poly, o + 2, o + 1, tt);
                        add_quadratic(&mut poly, o, o + 1, -tb2);
                        lin_relabel(&map, &lin_mul(&poly, f))
                    } else {
                        lin_relabel(&map, f)
                    }
                }
            }
        }
    }
}

/// Adds `c · x_u x_v` (in this order) to `poly`.
fn add_quadratic(poly: &mut Lin, u: usize, v: usize, c: i64) {
    let (s, m) = wedge_masks(1 << u, 1 << v).expect("distinct generators");
    add_term(poly, m, s * c);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(s: &str) -> ColoredSequence {
        ColoredSequence::parse(4, s).unwrap()
    }

    fn x(ctx: &ColoredSequence, r: usize, e: u8) -> ExteriorElement {
        ExteriorElement::generator(ctx.clone(), r, e).unwrap()
    }

    #[test]
    fn square_free_and_antisymmetric() {
        let c = seq("1 1");
        let x1 = x(&c, 0, 1);
        let x2 = x(&c, 1, 1);
        assert!(x1.multiply(&x1).unwrap().is_zero());
        assert_eq!(x2.multiply(&x1).unwrap(), x1.multiply(&x2).unwrap().scale(-1));
        let s = x1.add(&x2).unwrap();
        assert!(s.multiply(&s).unwrap().is_zero());
    }

    #[test]
    fn context_mismatch_is_rejected() {
        let a = ExteriorElement::one(seq("1"));
        let b = ExteriorElement::one(seq("2"));
        assert!(matches!(a.multiply(&b), Err(Error::ContextMismatch(_))));
    }

    #[test]
    fn demazure_examples() {
        let c = seq("1 1");
        let (u, z) = (0, 1);
        assert_eq!(demazure(u, z, &x(&c, 0, 1)).unwrap(), ExteriorElement::one(c.clone()));
        assert!(demazure(u, z, &ExteriorElement::one(c.clone())).unwrap().is_zero());
        let xz = x(&c, 0, 1).multiply(&x(&c, 1, 1)).unwrap();
        let expect = x(&c, 1, 1).sub(&x(&c, 0, 1)).unwrap();
        assert_eq!(demazure(u, z, &xz).unwrap(), expect);
    }

    #[test]
    fn demazure_rejects_inhomogeneous() {
        let c = seq("1 1");
        let f = ExteriorElement::one(c.clone()).add(&x(&c, 0, 1)).unwrap();
        assert_eq!(demazure(0, 1, &f), Err(Error::Inhomogeneous));
        assert!(f.degree().is_err());
        assert!(f.parity().is_err());
    }

    #[test]
    fn permute_examples() {
        let c = seq("1 1");
        assert_eq!(permute(&[1, 0], &x(&c, 0, 1)).unwrap(), x(&c, 1, 1));
        let f = x(&c, 0, 1).multiply(&x(&c, 1, 1)).unwrap();
        assert_eq!(permute(&[0, 1], &f).unwrap(), f);
        assert_eq!(permute(&[1, 0], &f).unwrap(), f.scale(-1));
    }

    #[test]
    fn permute_moves_second_generator_with_strand() {
        let c = seq("1^(2) 2");
        let f = x(&c, 0, 2);
        let g = permute(&[1, 0], &f).unwrap();
        assert_eq!(g.context(), &seq("2 1^(2)"));
        assert_eq!(g, x(&seq("2 1^(2)"), 1, 2));
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(basis(&seq("1")).len(), 2);
        let b = basis(&seq("1^(2)"));
        assert_eq!(b.iter().map(|m| m.0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!(basis(&seq("1 2^(2) 3")).len(), 16);
    }

    #[test]
    fn generator_examples() {
        let sc = ScalarConfig::new(4);
        let c = seq("2 1");
        let one = ExteriorElement::one(c.clone());
        let d = apply_generator(&Generator::dot(2), 0, &c, &one, &sc).unwrap();
        assert_eq!(d, x(&c, 0, 1));

        let ii = seq("3 3");
        let mg = apply_generator(&Generator::merge(3), 0, &ii, &ExteriorElement::one(ii.clone()), &sc)
            .unwrap();
        assert!(mg.is_zero());
        assert_eq!(mg.context(), &seq("3^(2)"));

        let sc = sc.with_r(3, -1).unwrap();
        let cr = Generator::crossing(Strand::simple(3), Strand::simple(3));
        let img = apply_generator(&cr, 0, &ii, &x(&ii, 0, 1), &sc).unwrap();
        assert_eq!(img, ExteriorElement::one(ii.clone()).scale(-1));
    }

    #[test]
    fn adjacent_crossing_on_one() {
        let sc = ScalarConfig::new(4).with_t(2, 1, -1).unwrap();
        let c = seq("2 1");
        let cr = Generator::crossing(Strand::simple(2), Strand::simple(1));
        let img = apply_generator(&cr, 0, &c, &ExteriorElement::one(c.clone()), &sc).unwrap();
        let t = seq("1 2");
        // t_{12} x_{1,1} + t_{21} x_{2,1}
        let expect = x(&t, 0, 1).add(&x(&t, 1, 1).scale(-1)).unwrap();
        assert_eq!(img, expect);
    }

    #[test]
    fn mismatched_source_gives_zero_of_target() {
        let sc = ScalarConfig::new(4);
        let c = seq("1 2");
        let img =
            apply_generator(&Generator::dot(2), 0, &c, &ExteriorElement::one(c.clone()), &sc).unwrap();
        assert!(img.is_zero());
    }

    #[test]
    fn scalar_constraints() {
        assert!(ScalarConfig::new(3).with_t(1, 3, -1).unwrap().t(3, 1) == -1);
        assert!(ScalarConfig::new(3).with_t(1, 1, -1).is_err());
        let cfg = ScalarConfig::new(3).with_t(1, 2, -1).unwrap();
        assert_eq!((cfg.t(1, 2), cfg.t(2, 1)), (-1, 1));
        assert!(ScalarConfig::from_tables(vec![1, 1], vec![vec![1, 1], vec![-1, 1]]).is_ok());
        assert!(ScalarConfig::from_tables(vec![1, 2], vec![vec![1, 1], vec![1, 1]]).is_err());
        assert_eq!(p(1, 1), 1);
        assert_eq!(p(2, 1), 1);
        assert_eq!(p(1, 2), 0);
    }

    fn simple_seq(d: usize) -> ColoredSequence {
        ColoredSequence::new(4, vec![Strand::simple(1); d]).unwrap()
    }

    fn del(i: usize, f: &Lin) -> Lin {
        lin_demazure(i, i + 1, f)
    }

    fn sum(a: &Lin, b: &Lin) -> Lin {
        let mut out = a.clone();
        lin_add(&mut out, b, 1);
        out
    }

    proptest! {
        #[test]
        fn demazure_relations(d in 3usize..=6, m in 0u64..64, i in 0usize..5, j in 0usize..5) {
            let mask = m & ((1 << d) - 1);
            let f: Lin = [(mask, 1)].into_iter().collect();
            prop_assume!(i + 1 < d && j + 1 < d);
            prop_assert!(del(i, &del(i, &f)).is_empty());
            if i.abs_diff(j) > 1 {
                prop_assert!(sum(&del(i, &del(j, &f)), &del(j, &del(i, &f))).is_empty());
            }
            if i + 2 < d {
                prop_assert_eq!(del(i, &del(i + 1, &del(i, &f))), del(i + 1, &del(i, &del(i + 1, &f))));
            }
        }

        #[test]
        fn leibniz(a in 0u64..64, b in 0u64..64) {
            let (u, z) = (1, 3);
            let fa: Lin = [(a, 1)].into_iter().collect();
            let fb: Lin = [(b, 1)].into_iter().collect();
            let lhs = lin_demazure(u, z, &lin_mul(&fa, &fb));
            let sign = if a.count_ones() % 2 == 0 { 1 } else { -1 };
            let mut rhs = lin_mul(&lin_demazure(u, z, &fa), &fb);
            lin_add(&mut rhs, &lin_mul(&fa, &lin_demazure(u, z, &fb)), sign);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn dot_squares_to_zero(code in proptest::collection::vec((1usize..=4, 1u8..=2), 1..=4), m in 0u64..64, r in 0usize..4) {
            let strands: Vec<Strand> = code.iter().map(|&(c, t)| Strand { color: c, thick: t }).collect();
            let ctx = ColoredSequence::new(4, strands).unwrap();
            prop_assume!(ctx.num_generators() <= 6);
            let r = r % ctx.len();
            prop_assume!(ctx.strands()[r].thick == 1);
            let mask = m & ((1 << ctx.num_generators()) - 1);
            let f = ExteriorElement::monomial(ctx.clone(), ExteriorMonomial(mask), 1);
            let g = Generator::dot(ctx.strands()[r].color);
            let sc = ScalarConfig::new(4);
            let once = apply_generator(&g, r, &ctx, &f, &sc).unwrap();
            prop_assert!(apply_generator(&g, r, &ctx, &once, &sc).unwrap().is_zero());
        }

        #[test]
        fn permutation_composition(d in 1usize..=5, seed in any::<u64>(), m in 0u64..32) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut w: Vec<usize> = (0..d).collect();
            let mut v: Vec<usize> = (0..d).collect();
            w.shuffle(&mut rng);
            v.shuffle(&mut rng);
            let ctx = simple_seq(d);
            let f = ExteriorElement::monomial(ctx, ExteriorMonomial(m & ((1 << d) - 1)), 1);
            let wv: Vec<usize> = (0..d).map(|r| w[v[r]]).collect();
            prop_assert_eq!(permute(&wv, &f).unwrap(), permute(&w, &permute(&v, &f).unwrap()).unwrap());
        }

        #[test]
        fn generator_degree_and_parity(
            code in proptest::collection::vec((1usize..=4, 1u8..=2), 2..=4),
            pos in 0usize..3,
            kind in 0u8..4,
            m in 0u64..64,
            bits in 0u64..64,
        ) {
            let strands: Vec<Strand> = code.iter().map(|&(c, t)| Strand { color: c, thick: t }).collect();
            let ctx = ColoredSequence::new(4, strands.clone()).unwrap();
            prop_assume!(ctx.num_generators() <= 6);
            let pos = pos % ctx.len();
            let g = match kind {
                0 => Generator::dot(strands[pos].color),
                1 => Generator::split(strands[pos].color),
                2 => Generator::merge(strands[pos].color),
                _ => {
                    prop_assume!(pos + 1 < strands.len());
                    Generator::crossing(strands[pos], strands[pos + 1])
                }
            };
            prop_assume!(pos + g.source.len() <= strands.len());
            prop_assume!(strands[pos..pos + g.source.len()] == g.source[..]);
            let sc = ScalarConfig::from_adjacent_bits(4, bits);
            let mask = m & ((1 << ctx.num_generators()) - 1);
            let f = ExteriorElement::monomial(ctx.clone(), ExteriorMonomial(mask), 1);
            let img = apply_generator(&g, pos, &ctx, &f, &sc).unwrap();
            if !img.is_zero() {
                let dq = img.q_degree().unwrap().unwrap() - f.q_degree().unwrap().unwrap();
                prop_assert_eq!(dq, g.degree());
                let dp = (img.parity().unwrap().unwrap() + f.parity().unwrap().unwrap()) % 2;
                prop_assert_eq!(dp, g.parity());
            }
        }
    }
}

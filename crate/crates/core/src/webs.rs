//! Link input, F-form ladder webs and the resolution cube skeleton.
//!
//! A web is a row of columns labelled 0, 1 or 2 together with rungs, read
//! bottom to top. A rung at column `c` moves one (or two, for a thick rung)
//! units from column `c` to column `c + 1`, so every rung points right. The
//! flat tangle of a web is the union of its 1-labelled edges.
//!
//! Braid closures are compiled with nested cups underneath the braid and
//! nested caps above it. Columns are 0-based throughout; the rung at column
//! `c` carries the color `c + 1`.

pub mod links;
pub mod morse;
mod pd;

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pd::{PdCode, PdCrossing};

/// A braid word on `strands` strands. Generator `i > 0` is the positive
/// crossing of positions `i` and `i + 1`, `-i` its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Braid {
    pub strands: usize,
    pub word: Vec<i32>,
}

impl Braid {
    pub fn new(strands: usize, word: Vec<i32>) -> Result<Self> {
        if strands == 0 {
            return Err(Error::Parse("a braid needs at least one strand".into()));
        }
        for &g in &word {
            if g == 0 || g.unsigned_abs() as usize >= strands {
                return Err(Error::Parse(format!(
                    "generator {g} out of range for {strands} strands"
                )));
            }
        }
        Ok(Braid { strands, word })
    }

    /// Parses `"k: a1 a2 ..."`. Parenthesized groups may carry a power, as in
    /// `"3: (1 2)^4"`.
    pub fn parse(s: &str) -> Result<Self> {
        let (head, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected `k: word`, got {s:?}")))?;
        let strands: usize = head
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad strand count {:?}", head.trim())))?;
        let tokens = tokenize(body)?;
        let mut pos = 0;
        let word = parse_group(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Parse("unbalanced `)` in braid word".into()));
        }
        Braid::new(strands, word)
    }

    pub fn writhe(&self) -> i32 {
        self.word.iter().map(|g| g.signum()).sum()
    }

    pub fn crossings(&self) -> usize {
        self.word.len()
    }

    /// Induced permutation: `perm[p]` is the bottom position of the strand
    /// that ends at top position `p`.
    pub fn permutation(&self) -> Vec<usize> {
        let mut at: Vec<usize> = (0..self.strands).collect();
        for &g in &self.word {
            let i = g.unsigned_abs() as usize - 1;
            at.swap(i, i + 1);
        }
        at
    }

    pub fn components(&self) -> usize {
        let perm = self.permutation();
        let mut seen = vec![false; self.strands];
        let mut count = 0;
        for s in 0..self.strands {
            if !seen[s] {
                count += 1;
                let mut x = s;
                while !seen[x] {
                    seen[x] = true;
                    x = perm[x];
                }
            }
        }
        count
    }

    pub fn mirror(&self) -> Braid {
        Braid { strands: self.strands, word: self.word.iter().map(|g| -g).collect() }
    }

    /// PD code of the closure. Edges are numbered from 1; each strand
    /// segment between crossings is one edge.
    pub fn to_pd(&self) -> PdCode {
        let k = self.strands;
        let mut next = 1u32;
        let bottom: Vec<u32> = (0..k)
            .map(|_| {
                next += 1;
                next - 1
            })
            .collect();
        let mut cur = bottom.clone();
        let mut crossings = Vec::with_capacity(self.word.len());
        for &g in &self.word {
            let a = g.unsigned_abs() as usize - 1;
            let (la, lb) = (cur[a], cur[a + 1]);
            let (oa, ob) = (next, next + 1);
            next += 2;
            // The strand from position a ends at a + 1 and vice versa.
            let (over, under) = if g > 0 {
                ([la, ob], [lb, oa])
            } else {
                ([lb, oa], [la, ob])
            };
            crossings.push(PdCrossing { over, under, sign: g.signum() as i8 });
            cur[a] = oa;
            cur[a + 1] = ob;
        }
        // Close up: the top edge at position p is identified with the bottom
        // edge at position p.
        let rename = |e: u32| -> u32 {
            match cur.iter().position(|&c| c == e) {
                Some(p) if cur[p] != bottom[p] => bottom[p],
                _ => e,
            }
        };
        for c in &mut crossings {
            c.over = [rename(c.over[0]), rename(c.over[1])];
            c.under = [rename(c.under[0]), rename(c.under[1])];
        }
        let touched: BTreeSet<usize> = self
            .word
            .iter()
            .flat_map(|g| {
                let a = g.unsigned_abs() as usize - 1;
                [a, a + 1]
            })
            .collect();
        let mut pd = PdCode::new(crossings).compact();
        pd.free_loops = k - touched.len();
        pd
    }
}

impl fmt::Display for Braid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.strands)?;
        for g in &self.word {
            write!(f, " {g}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(i32),
    Open,
    Close(u32),
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    let read_int = |i: &mut usize| -> Option<String> {
        let start = *i;
        if *i < chars.len() && (chars[*i] == '-' || chars[*i] == '+') {
            *i += 1;
        }
        while *i < chars.len() && chars[*i].is_ascii_digit() {
            *i += 1;
        }
        let t: String = chars[start..*i].iter().collect();
        (!t.is_empty() && t != "-" && t != "+").then_some(t)
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() || c == ',' {
            i += 1;
        } else if c == '(' {
            out.push(Token::Open);
            i += 1;
        } else if c == ')' {
            i += 1;
            let mut power = 1;
            if i < chars.len() && chars[i] == '^' {
                i += 1;
                power = read_int(&mut i)
                    .and_then(|t| t.parse::<u32>().ok())
                    .ok_or_else(|| Error::Parse("expected a power after `^`".into()))?;
            }
            out.push(Token::Close(power));
        } else {
            let t = read_int(&mut i)
                .ok_or_else(|| Error::Parse(format!("unexpected character {c:?} in braid word")))?;
            let v = t.parse::<i32>().map_err(|_| Error::Parse(format!("bad generator {t:?}")))?;
            out.push(Token::Num(v));
        }
    }
    Ok(out)
}

fn parse_group(tokens: &[Token], pos: &mut usize) -> Result<Vec<i32>> {
    let mut word = Vec::new();
    while *pos < tokens.len() {
        match tokens[*pos] {
            Token::Num(v) => {
                word.push(v);
                *pos += 1;
            }
            Token::Open => {
                *pos += 1;
                let inner = parse_group(tokens, pos)?;
                match tokens.get(*pos) {
                    Some(Token::Close(n)) => {
                        for _ in 0..*n {
                            word.extend_from_slice(&inner);
                        }
                        *pos += 1;
                    }
                    _ => return Err(Error::Parse("unclosed `(` in braid word".into())),
                }
            }
            Token::Close(_) => return Ok(word),
        }
    }
    Ok(word)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Presentation {
    Braid(Braid),
    Pd(PdCode),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientedLinkDiagram {
    pub presentation: Presentation,
}

impl OrientedLinkDiagram {
    pub fn from_braid(b: Braid) -> Self {
        OrientedLinkDiagram { presentation: Presentation::Braid(b) }
    }

    pub fn from_pd(pd: PdCode) -> Result<Self> {
        pd.validate()?;
        Ok(OrientedLinkDiagram { presentation: Presentation::Pd(pd) })
    }

    pub fn signs(&self) -> Vec<i8> {
        match &self.presentation {
            Presentation::Braid(b) => b.word.iter().map(|g| g.signum() as i8).collect(),
            Presentation::Pd(pd) => pd.crossings.iter().map(|c| c.sign).collect(),
        }
    }

    pub fn n_plus(&self) -> usize {
        self.signs().iter().filter(|&&s| s > 0).count()
    }

    pub fn n_minus(&self) -> usize {
        self.signs().iter().filter(|&&s| s < 0).count()
    }

    pub fn writhe(&self) -> i32 {
        self.n_plus() as i32 - self.n_minus() as i32
    }

    pub fn crossings(&self) -> usize {
        self.signs().len()
    }

    pub fn to_pd(&self) -> PdCode {
        match &self.presentation {
            Presentation::Braid(b) => b.to_pd(),
            Presentation::Pd(pd) => pd.clone(),
        }
    }

    /// The braid word, for diagrams given as braid closures.
    pub fn braid(&self) -> Option<&Braid> {
        match &self.presentation {
            Presentation::Braid(b) => Some(b),
            Presentation::Pd(_) => None,
        }
    }
}

impl fmt::Display for OrientedLinkDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.presentation {
            Presentation::Braid(b) => write!(f, "{b}"),
            Presentation::Pd(pd) => write!(f, "PD[{} crossings]", pd.crossings.len()),
        }
    }
}

/// A rung from column `col` to `col + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rung {
    pub col: usize,
    pub thick: u8,
}

impl Rung {
    pub fn color(&self) -> usize {
        self.col + 1
    }
}

/// The two ways of resolving a crossing on columns `o, o+1, o+2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resolution {
    /// Rung `o + 1` below rung `o`: two parallel strands, `F_o F_{o+1}`.
    RightFirst,
    /// Rung `o` below rung `o + 1`: a cap under a cup, `F_{o+1} F_o`.
    LeftFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slice {
    Rung(Rung),
    Crossing(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingSite {
    /// Position in the slice list.
    pub slice: usize,
    /// Left column of the crossing; it occupies `col .. col + 3`.
    pub col: usize,
    pub sign: i8,
    pub fform_sign: i8,
    /// `(q, homological)` shift applied to the local complex.
    pub compensation: (i32, i32),
}

impl CrossingSite {
    pub fn new(slice: usize, col: usize, sign: i8, fform_sign: i8) -> Self {
        let compensation = match (sign, fform_sign) {
            (s, f) if s == f => (0, 0),
            // Negative local complex realizing a positive crossing.
            (1, _) => (-1, 1),
            _ => (1, -1),
        };
        CrossingSite { slice, col, sign, fform_sign, compensation }
    }

    /// Resolution sitting at cube coordinate `bit`.
    pub fn resolution(&self, bit: bool) -> Resolution {
        match (self.fform_sign > 0, bit) {
            (true, false) | (false, true) => Resolution::RightFirst,
            _ => Resolution::LeftFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalTerm {
    pub h: i32,
    pub q: i32,
    pub resolution: Resolution,
}

/// Two-term complex of a single crossing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalComplex {
    pub source: LocalTerm,
    pub target: LocalTerm,
    /// The connecting crossing, named after the color of its left strand.
    pub tau: String,
}

pub fn crossing_complex(site: &CrossingSite) -> LocalComplex {
    let (dq, dh) = site.compensation;
    let term = |bit: bool| {
        let (h, q) = match (site.fform_sign > 0, bit) {
            (true, false) => (0, -1),
            (true, true) => (1, 0),
            (false, false) => (-1, 0),
            (false, true) => (0, 1),
        };
        LocalTerm { h: h + dh, q: q + dq, resolution: site.resolution(bit) }
    };
    LocalComplex { source: term(false), target: term(true), tau: format!("tau_{}", site.col + 1) }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FFormWeb {
    pub bottom: Vec<u8>,
    pub slices: Vec<Slice>,
    pub top: Vec<u8>,
}

impl FFormWeb {
    pub fn columns(&self) -> usize {
        self.bottom.len()
    }

    /// Rungs of the resolution `bits` (bit `i` for crossing `i`), each with
    /// its resolution-independent key.
    pub fn resolve(&self, sites: &[CrossingSite], bits: u64) -> Vec<(RungKey, Rung)> {
        let mut out = Vec::with_capacity(self.slices.len() + sites.len());
        for (i, s) in self.slices.iter().enumerate() {
            match *s {
                Slice::Rung(r) => out.push((RungKey::Flat(i), r)),
                Slice::Crossing(c) => {
                    let site = &sites[c];
                    let lo = Rung { col: site.col, thick: 1 };
                    let hi = Rung { col: site.col + 1, thick: 1 };
                    let left = (RungKey::Cross { site: c, right: false }, lo);
                    let right = (RungKey::Cross { site: c, right: true }, hi);
                    match site.resolution(bits >> c & 1 == 1) {
                        Resolution::RightFirst => out.extend([right, left]),
                        Resolution::LeftFirst => out.extend([left, right]),
                    }
                }
            }
        }
        out
    }

    /// Checks labels stay in `{0, 1, 2}`, crossings see `(1, 1, 0)` and the
    /// top boundary matches.
    pub fn validate(&self, sites: &[CrossingSite]) -> Result<()> {
        let bottom: u32 = self.bottom.iter().map(|&x| x as u32).sum();
        let top: u32 = self.top.iter().map(|&x| x as u32).sum();
        if bottom != top || self.top.len() != self.bottom.len() {
            return Err(Error::InvalidDiagram("boundary weights differ".into()));
        }
        let mut labels = self.bottom.clone();
        for s in &self.slices {
            match *s {
                Slice::Rung(r) => step(&mut labels, r)?,
                Slice::Crossing(c) => {
                    let o = sites[c].col;
                    if labels.get(o..o + 3) != Some(&[1, 1, 0][..]) {
                        return Err(Error::InvalidDiagram(format!(
                            "crossing {c} does not sit on labels (1,1,0)"
                        )));
                    }
                    labels[o] = 0;
                    labels[o + 2] = 1;
                }
            }
        }
        if labels != self.top {
            return Err(Error::InvalidDiagram("top boundary mismatch".into()));
        }
        Ok(())
    }

    /// The word `F_{i_1} … F_{i_r}` with the rightmost factor applied first,
    /// crossings shown as `X_o`.
    pub fn word(&self, sites: &[CrossingSite]) -> String {
        let parts: Vec<String> = self
            .slices
            .iter()
            .rev()
            .map(|s| match *s {
                Slice::Rung(r) if r.thick == 2 => format!("F{}^(2)", r.color()),
                Slice::Rung(r) => format!("F{}", r.color()),
                Slice::Crossing(c) => format!("X{}", sites[c].col + 1),
            })
            .collect();
        parts.join(" ")
    }
}

fn step(labels: &mut Vec<u8>, r: Rung) -> Result<()> {
    let t = r.thick;
    if t == 0 || t > 2 || r.col + 1 >= labels.len() {
        return Err(Error::InvalidDiagram(format!("rung {r:?} out of range")));
    }
    if labels[r.col] < t || labels[r.col + 1] + t > 2 {
        return Err(Error::WeightOutOfRange(format!(
            "rung at column {} of thickness {t} on labels ({}, {})",
            r.col, labels[r.col], labels[r.col + 1]
        )));
    }
    labels[r.col] -= t;
    labels[r.col + 1] += t;
    Ok(())
}

/// Incremental web builder over a growing row of columns.
struct Builder {
    labels: Vec<u8>,
    slices: Vec<Slice>,
    sites: Vec<CrossingSite>,
}

impl Builder {
    fn rung(&mut self, col: usize, thick: u8) {
        while self.labels.len() < col + 2 {
            self.labels.push(0);
        }
        let r = Rung { col, thick };
        step(&mut self.labels, r).expect("builder produced an invalid rung");
        self.slices.push(Slice::Rung(r));
    }

    fn label(&self, c: usize) -> u8 {
        self.labels.get(c).copied().unwrap_or(0)
    }

    /// Moves the strand at `from` right to `to` through empty columns.
    fn jog(&mut self, from: usize, to: usize) {
        for c in from..to {
            self.rung(c, 1);
        }
    }

    fn crossing(&mut self, col: usize, sign: i8, fform_sign: i8) {
        while self.labels.len() < col + 3 {
            self.labels.push(0);
        }
        debug_assert_eq!(&self.labels[col..col + 3], &[1, 1, 0]);
        self.labels[col] = 0;
        self.labels[col + 2] = 1;
        let idx = self.sites.len();
        self.sites.push(CrossingSite::new(self.slices.len(), col, sign, fform_sign));
        self.slices.push(Slice::Crossing(idx));
    }
}

/// Compiles a link diagram to F-form.
pub fn compile_fform(d: &OrientedLinkDiagram) -> Result<(FFormWeb, Vec<CrossingSite>)> {
    match &d.presentation {
        Presentation::Braid(b) => Ok(compile_braid(b)),
        Presentation::Pd(pd) => Ok(morse::compile(&morse::sweep(pd)?)),
    }
}

fn compile_braid(b: &Braid) -> (FFormWeb, Vec<CrossingSite>) {
    let k = b.strands;
    let mut w = Builder { labels: vec![2; k], slices: Vec::new(), sites: Vec::new() };

    // Nested cups, outermost first. Before cup s the remaining 2s occupy
    // columns 0..k-s and the return strands k-s..k.
    for s in 0..k {
        for c in (k - 1 - s)..(k - 1) {
            w.rung(c, 1);
        }
        w.rung(k - 1, 1);
        w.jog(k, 2 * k - 1 - s);
    }

    let mut pos: Vec<usize> = (k..2 * k).collect();
    for &g in &b.word {
        let a = g.unsigned_abs() as usize - 1;
        let bb = a + 1;
        // Make room to the right of strand a + 1.
        let mut target = pos.clone();
        let mut need = pos[bb] + 2;
        for j in bb + 1..k {
            target[j] = pos[j].max(need);
            need = target[j] + 1;
        }
        for j in (bb + 1..k).rev() {
            w.jog(pos[j], target[j]);
            pos[j] = target[j];
        }
        w.jog(pos[a], pos[bb] - 1);
        pos[a] = pos[bb] - 1;
        w.crossing(pos[a], g.signum() as i8, g.signum() as i8);
        pos[a] += 1;
        pos[bb] += 1;
    }

    // Nested caps, innermost first.
    for s in 0..k {
        let mut r = k - 1 - s;
        let mut bpos = pos[s];
        loop {
            let z = (r + 1..bpos).rev().find(|&z| w.label(z) == 2);
            let Some(z) = z else { break };
            if z + 1 == bpos {
                w.rung(z, 1);
                bpos = z;
            } else {
                w.rung(z, 2);
            }
        }
        w.jog(r, bpos - 1);
        r = bpos - 1;
        w.rung(r, 1);
    }
    // Push the remaining 2s to the right end.
    let width = w.labels.len();
    loop {
        let z = (0..width - 1).find(|&z| w.label(z) == 2 && w.label(z + 1) == 0);
        let Some(z) = z else { break };
        w.rung(z, 2);
    }

    let mut bottom = vec![0u8; width];
    bottom[..k].fill(2);
    let web = FFormWeb { bottom, slices: w.slices, top: w.labels };
    (web, w.sites)
}

/// Canonical word from `Λ = (2^ℓ, ε, 0, …)` to `(0, …, 0, 2^ℓ, ε)`, as rungs
/// from bottom to top. The odd unit travels first, then each 2 in turn
/// starting from the rightmost.
pub fn canonical_word(lambda: &[u8]) -> Result<Vec<Rung>> {
    let k = lambda.len();
    if lambda.iter().any(|&x| x > 2) {
        return Err(Error::WeightOutOfRange(format!("{lambda:?} has a label above 2")));
    }
    if lambda.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::WeightOutOfRange(format!("{lambda:?} is not dominant")));
    }
    let total: usize = lambda.iter().map(|&x| x as usize).sum();
    let (l, eps) = (total / 2, total % 2);
    if l + eps > k {
        return Err(Error::WeightOutOfRange(format!("|λ| = {total} does not fit in {k} columns")));
    }
    let mut rungs = Vec::new();
    if eps == 1 {
        rungs.extend((l..k - 1).map(|col| Rung { col, thick: 1 }));
    }
    for j in (0..l).rev() {
        let dest = k - eps - l + j;
        rungs.extend((j..dest).map(|col| Rung { col, thick: 2 }));
    }
    Ok(rungs)
}

/// Display form of a canonical word, leftmost factor applied last.
pub fn word_string(rungs: &[Rung]) -> String {
    rungs
        .iter()
        .rev()
        .map(|r| if r.thick == 2 { format!("F{}^(2)", r.color()) } else { format!("F{}", r.color()) })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Identity of a rung that survives changing resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RungKey {
    Flat(usize),
    /// `right` is the rung at column `col + 1` of the site.
    Cross { site: usize, right: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circle {
    /// Sorted; the first key names the circle.
    pub rungs: Vec<RungKey>,
    pub columns: BTreeSet<usize>,
    pub segments: usize,
}

/// Closed components of the 1-labelled part of a flat web. Errors when a
/// 1-labelled edge reaches the boundary.
pub fn trace_circles(bottom: &[u8], rungs: &[(RungKey, Rung)]) -> Result<Vec<Circle>> {
    if bottom.contains(&1) {
        return Err(Error::InvalidDiagram("open strands at the bottom boundary".into()));
    }
    let mut labels = bottom.to_vec();
    // Node ids: rungs first, then column segments.
    let mut parent: Vec<usize> = (0..rungs.len()).collect();
    let mut seg_col: Vec<usize> = Vec::new();
    let mut open: Vec<Option<usize>> = vec![None; labels.len()];
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let union = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra] = rb;
        }
    };
    for (i, &(_, r)) in rungs.iter().enumerate() {
        let (a, b) = (labels[r.col], labels[r.col + 1]);
        step(&mut labels, r)?;
        if r.thick == 2 {
            continue;
        }
        let mut new_seg = |p: &mut Vec<usize>, col: usize| {
            let id = p.len();
            p.push(id);
            seg_col.push(col);
            id
        };
        let left = if a == 1 {
            open[r.col].take().expect("label 1 column without an open segment")
        } else {
            let s = new_seg(&mut parent, r.col);
            open[r.col] = Some(s);
            s
        };
        let right = if b == 0 {
            let s = new_seg(&mut parent, r.col + 1);
            open[r.col + 1] = Some(s);
            s
        } else {
            open[r.col + 1].take().expect("label 1 column without an open segment")
        };
        union(&mut parent, left, i);
        union(&mut parent, i, right);
    }
    if labels.contains(&1) {
        return Err(Error::InvalidDiagram("open strands at the top boundary".into()));
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut circles: Vec<Circle> = Vec::new();
    let mut index_of = |p: &mut Vec<usize>, x: usize, circles: &mut Vec<Circle>| {
        let r = find(p, x);
        match roots.iter().position(|&y| y == r) {
            Some(i) => i,
            None => {
                roots.push(r);
                circles.push(Circle { rungs: Vec::new(), columns: BTreeSet::new(), segments: 0 });
                circles.len() - 1
            }
        }
    };
    for (i, &(key, r)) in rungs.iter().enumerate() {
        if r.thick == 1 {
            let ci = index_of(&mut parent, i, &mut circles);
            circles[ci].rungs.push(key);
        }
    }
    for (s, &col) in seg_col.iter().enumerate() {
        let ci = index_of(&mut parent, rungs.len() + s, &mut circles);
        circles[ci].columns.insert(col);
        circles[ci].segments += 1;
    }
    for c in &mut circles {
        c.rungs.sort();
    }
    circles.sort_by(|x, y| x.rungs[0].cmp(&y.rungs[0]));
    Ok(circles)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeVertex {
    pub bits: u64,
    pub circles: Vec<Circle>,
    pub h: i32,
    /// Overall q-shift of the vertex, including the normalization `q^{2w}`.
    pub q_shift: i32,
}

impl CubeVertex {
    pub fn circle_of(&self, key: RungKey) -> Option<usize> {
        self.circles.iter().position(|c| c.rungs.binary_search(&key).is_ok())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionCube {
    pub web: FFormWeb,
    pub sites: Vec<CrossingSite>,
    pub vertices: Vec<CubeVertex>,
    pub writhe: i32,
    /// Rung met by the lowest 1-labelled segment of the leftmost column.
    pub basepoint: Option<RungKey>,
}

impl ResolutionCube {
    pub fn dim(&self) -> usize {
        self.sites.len()
    }

    pub fn circle_counts(&self) -> Vec<usize> {
        self.vertices.iter().map(|v| v.circles.len()).collect()
    }

    /// Edges as `(source vertex, crossing)`, source having the bit unset.
    pub fn edges(&self) -> Vec<(u64, usize)> {
        let n = self.dim();
        let mut out = Vec::new();
        for v in 0..1u64 << n {
            for c in 0..n {
                if v >> c & 1 == 0 {
                    out.push((v, c));
                }
            }
        }
        out
    }

    /// Two-dimensional faces as `(base vertex, i, j)` with `i < j`.
    pub fn faces(&self) -> Vec<(u64, usize, usize)> {
        let n = self.dim();
        let mut out = Vec::new();
        for v in 0..1u64 << n {
            for i in 0..n {
                for j in i + 1..n {
                    if v >> i & 1 == 0 && v >> j & 1 == 0 {
                        out.push((v, i, j));
                    }
                }
            }
        }
        out
    }

    pub fn basepoint_circle(&self, v: usize) -> Option<usize> {
        self.basepoint.and_then(|k| self.vertices[v].circle_of(k))
    }
}

/// The resolution cube of a compiled web.
pub fn build_cube(web: &FFormWeb, sites: &[CrossingSite]) -> Result<ResolutionCube> {
    web.validate(sites)?;
    let n = sites.len();
    if n > 20 {
        return Err(Error::InvalidDiagram(format!("{n} crossings is beyond this tool")));
    }
    let writhe: i32 = sites.iter().map(|s| s.sign as i32).sum();
    let vertices: Result<Vec<CubeVertex>> = (0..1u64 << n)
        .into_par_iter()
        .map(|bits| {
            let rungs = web.resolve(sites, bits);
            let circles = trace_circles(&web.bottom, &rungs)?;
            let (mut h, mut q) = (0, 2 * writhe);
            for (c, site) in sites.iter().enumerate() {
                let lc = crossing_complex(site);
                let t = if bits >> c & 1 == 1 { lc.target } else { lc.source };
                h += t.h;
                q += t.q;
            }
            Ok(CubeVertex { bits, circles, h, q_shift: q })
        })
        .collect();
    let vertices = vertices?;
    let basepoint = basepoint_key(web, sites);
    Ok(ResolutionCube { web: web.clone(), sites: sites.to_vec(), vertices, writhe, basepoint })
}

fn basepoint_key(web: &FFormWeb, sites: &[CrossingSite]) -> Option<RungKey> {
    // Resolution 0 suffices: the key found is a flat rung for every web the
    // compiler produces, and crossing keys are resolution independent too.
    let rungs = web.resolve(sites, 0);
    let mut labels = web.bottom.clone();
    let mut best: Option<(usize, RungKey)> = None;
    for &(key, r) in &rungs {
        let (a, b) = (labels[r.col], labels[r.col + 1]);
        if step(&mut labels, r).is_err() || r.thick == 2 {
            continue;
        }
        let mut consider = |col: usize| {
            if best.is_none_or(|(c, _)| col < c) {
                best = Some((col, key));
            }
        };
        if a == 2 {
            consider(r.col);
        }
        if b == 0 {
            consider(r.col + 1);
        }
    }
    best.map(|(_, k)| k)
}

/// Compiles and builds the cube in one step.
pub fn cube_of(d: &OrientedLinkDiagram) -> Result<ResolutionCube> {
    let (web, sites) = compile_fform(d)?;
    build_cube(&web, &sites)
}

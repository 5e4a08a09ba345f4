//! Diagram words for the super KLR category and their evaluation on the
//! exterior-algebra representation.
//!
//! A word is a bottom-to-top list of layers, each one non-identity generator
//! at a strand position. Horizontal composition puts the left factor's
//! layers first; the opposite chronology differs by `(-1)^{p(f)p(g)}`.

pub mod relations;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{apply_lin, lin_add, ColoredSequence, Generator, GeneratorKind, Lin, ScalarConfig};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Layer {
    pub pos: usize,
    pub gen: Generator,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiagramWord {
    layers: Vec<Layer>,
    /// `seqs[k]` is the sequence below layer `k`; the last entry is the target.
    seqs: Vec<ColoredSequence>,
}

impl DiagramWord {
    pub fn identity(source: ColoredSequence) -> Self {
        DiagramWord { layers: Vec::new(), seqs: vec![source] }
    }

    pub fn new(source: ColoredSequence, layers: Vec<Layer>) -> Result<Self> {
        let mut w = Self::identity(source);
        for l in layers {
            w.push(l)?;
        }
        Ok(w)
    }

    fn push(&mut self, layer: Layer) -> Result<()> {
        layer.gen.validate()?;
        let cur = self.target();
        let k = layer.gen.source.len();
        if layer.pos + k > cur.len() || cur.strands()[layer.pos..layer.pos + k] != layer.gen.source[..] {
            return Err(Error::BoundaryMismatch(format!(
                "{:?} on {:?} at {} does not fit {}",
                layer.gen.kind, layer.gen.source, layer.pos, cur
            )));
        }
        if layer.gen.kind == GeneratorKind::Identity {
            return Ok(());
        }
        let next = cur.splice(layer.pos, k, &layer.gen.target())?;
        self.layers.push(layer);
        self.seqs.push(next);
        Ok(())
    }

    /// Appends a generator of the given kind at `pos`, reading its incident
    /// strands off the current top boundary.
    pub fn then(mut self, kind: GeneratorKind, pos: usize) -> Result<Self> {
        let cur = self.target().clone();
        let k = match kind {
            GeneratorKind::Merge | GeneratorKind::Crossing => 2,
            _ => 1,
        };
        if pos + k > cur.len() {
            return Err(Error::BoundaryMismatch(format!("position {pos} outside {cur}")));
        }
        let gen = Generator { kind, source: cur.strands()[pos..pos + k].to_vec() };
        self.push(Layer { pos, gen })?;
        Ok(self)
    }

    pub fn x(self, pos: usize) -> Result<Self> {
        self.then(GeneratorKind::Crossing, pos)
    }

    pub fn dot(self, pos: usize) -> Result<Self> {
        self.then(GeneratorKind::Dot, pos)
    }

    pub fn split(self, pos: usize) -> Result<Self> {
        self.then(GeneratorKind::Split, pos)
    }

    pub fn merge(self, pos: usize) -> Result<Self> {
        self.then(GeneratorKind::Merge, pos)
    }

    pub fn source(&self) -> &ColoredSequence {
        &self.seqs[0]
    }

    pub fn target(&self) -> &ColoredSequence {
        self.seqs.last().expect("nonempty")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn degree(&self) -> i32 {
        self.layers.iter().map(|l| l.gen.degree()).sum()
    }

    pub fn parity(&self) -> u8 {
        self.layers.iter().map(|l| l.gen.parity()).sum::<u8>() % 2
    }

    /// `top ∘ bottom`.
    pub fn compose_vertical(top: &Self, bottom: &Self) -> Result<Self> {
        if top.source() != bottom.target() {
            return Err(Error::BoundaryMismatch(format!("{} vs {}", top.source(), bottom.target())));
        }
        let mut w = bottom.clone();
        for l in &top.layers {
            w.push(l.clone())?;
        }
        Ok(w)
    }

    /// Juxtaposition with the left factor's layers first.
    pub fn compose_horizontal(left: &Self, right: &Self) -> Result<Self> {
        let mut w = Self::identity(left.source().concat(right.source())?);
        for l in &left.layers {
            w.push(l.clone())?;
        }
        let off = left.target().len();
        for l in &right.layers {
            w.push(Layer { pos: l.pos + off, gen: l.gen.clone() })?;
        }
        Ok(w)
    }

    /// Juxtaposition with the right factor's layers first.
    pub fn compose_horizontal_right_first(left: &Self, right: &Self) -> Result<Self> {
        let mut w = Self::identity(left.source().concat(right.source())?);
        let off = left.source().len();
        for l in &right.layers {
            w.push(Layer { pos: l.pos + off, gen: l.gen.clone() })?;
        }
        for l in &left.layers {
            w.push(l.clone())?;
        }
        Ok(w)
    }

    /// Image of each basis monomial of the source, indexed by mask.
    pub fn evaluate(&self, scalars: &ScalarConfig) -> Operator {
        let n = 1usize << self.source().num_generators();
        let columns = (0..n as u64)
            .map(|m| {
                let mut f: Lin = [(m, 1)].into_iter().collect();
                for (k, l) in self.layers.iter().enumerate() {
                    if f.is_empty() {
                        break;
                    }
                    f = apply_lin(&l.gen, l.pos, &self.seqs[k], &self.seqs[k + 1], &f, scalars);
                }
                f
            })
            .collect();
        Operator { source: self.source().clone(), target: self.target().clone(), columns }
    }
}

impl fmt::Display for DiagramWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.source())?;
        for l in &self.layers {
            let tag = match l.gen.kind {
                GeneratorKind::Identity => "I",
                GeneratorKind::Dot => "D",
                GeneratorKind::Split => "S",
                GeneratorKind::Merge => "M",
                GeneratorKind::Crossing => "X",
            };
            write!(f, " {tag}{}", l.pos + 1)?;
        }
        Ok(())
    }
}

/// A linear operator `P(source) → P(target)` stored by columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operator {
    pub source: ColoredSequence,
    pub target: ColoredSequence,
    pub columns: Vec<Lin>,
}

impl Operator {
    pub fn zero(source: ColoredSequence, target: ColoredSequence) -> Self {
        let n = 1usize << source.num_generators();
        Operator { source, target, columns: vec![Lin::new(); n] }
    }

    pub fn apply(&self, f: &Lin) -> Lin {
        let mut out = Lin::new();
        for (&m, &c) in f {
            lin_add(&mut out, &self.columns[m as usize], c);
        }
        out
    }

    /// `after ∘ self`.
    pub fn then(&self, after: &Operator) -> Result<Operator> {
        if after.source != self.target {
            return Err(Error::BoundaryMismatch(format!("{} vs {}", after.source, self.target)));
        }
        let columns = self.columns.iter().map(|c| after.apply(c)).collect();
        Ok(Operator { source: self.source.clone(), target: after.target.clone(), columns })
    }

    fn add_scaled(&mut self, other: &Operator, c: i64) {
        for (a, b) in self.columns.iter_mut().zip(&other.columns) {
            lin_add(a, b, c);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(|c| c.is_empty())
    }
}

/// Homogeneous integer combination of diagram words with fixed boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearMorphism {
    source: ColoredSequence,
    target: ColoredSequence,
    degree: i32,
    parity: u8,
    terms: BTreeMap<DiagramWord, i64>,
}

impl LinearMorphism {
    pub fn zero(source: ColoredSequence, target: ColoredSequence, degree: i32, parity: u8) -> Self {
        LinearMorphism { source, target, degree, parity: parity % 2, terms: BTreeMap::new() }
    }

    pub fn identity(seq: ColoredSequence) -> Self {
        Self::from_word(DiagramWord::identity(seq))
    }

    pub fn from_word(w: DiagramWord) -> Self {
        Self::scaled_word(w, 1)
    }

    pub fn scaled_word(w: DiagramWord, c: i64) -> Self {
        let mut m = Self::zero(w.source().clone(), w.target().clone(), w.degree(), w.parity());
        if c != 0 {
            m.terms.insert(w, c);
        }
        m
    }

    pub fn source(&self) -> &ColoredSequence {
        &self.source
    }

    pub fn target(&self) -> &ColoredSequence {
        &self.target
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn parity(&self) -> u8 {
        self.parity
    }

    pub fn terms(&self) -> &BTreeMap<DiagramWord, i64> {
        &self.terms
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.source != other.source || self.target != other.target {
            return Err(Error::BoundaryMismatch(format!(
                "{} -> {} vs {} -> {}",
                self.source, self.target, other.source, other.target
            )));
        }
        if self.degree != other.degree || self.parity != other.parity {
            return Err(Error::BoundaryMismatch(format!(
                "(deg {}, parity {}) vs (deg {}, parity {})",
                self.degree, self.parity, other.degree, other.parity
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (w, &c) in &other.terms {
            let e = out.terms.entry(w.clone()).or_insert(0);
            *e += c;
            if *e == 0 {
                out.terms.remove(w);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: i64) -> Self {
        let mut out = self.clone();
        if c == 0 {
            out.terms.clear();
        } else {
            out.terms.values_mut().for_each(|v| *v *= c);
        }
        out
    }

    /// `top ∘ bottom`.
    pub fn compose_vertical(top: &Self, bottom: &Self) -> Result<Self> {
        if top.source != bottom.target {
            return Err(Error::BoundaryMismatch(format!("{} vs {}", top.source, bottom.target)));
        }
        let mut out = Self::zero(
            bottom.source.clone(),
            top.target.clone(),
            top.degree + bottom.degree,
            top.parity + bottom.parity,
        );
        for (wt, &ct) in &top.terms {
            for (wb, &cb) in &bottom.terms {
                let w = DiagramWord::compose_vertical(wt, wb)?;
                *out.terms.entry(w).or_insert(0) += ct * cb;
            }
        }
        out.terms.retain(|_, c| *c != 0);
        Ok(out)
    }

    /// Horizontal juxtaposition in the normal (left-first) chronology.
    pub fn compose_horizontal(left: &Self, right: &Self) -> Result<Self> {
        Self::horizontal_with(left, right, DiagramWord::compose_horizontal)
    }

    /// The same picture drawn with the right factor first, as a raw word.
    pub fn compose_horizontal_right_first(left: &Self, right: &Self) -> Result<Self> {
        Self::horizontal_with(left, right, DiagramWord::compose_horizontal_right_first)
    }

    /// The right-first picture rewritten in the normal chronology.
    pub fn right_first_normalized(left: &Self, right: &Self) -> Result<Self> {
        let sign = interchange_sign(left.parity, right.parity);
        Ok(Self::compose_horizontal(left, right)?.scale(sign))
    }

    fn horizontal_with(
        left: &Self,
        right: &Self,
        join: fn(&DiagramWord, &DiagramWord) -> Result<DiagramWord>,
    ) -> Result<Self> {
        let mut out = Self::zero(
            left.source.concat(&right.source)?,
            left.target.concat(&right.target)?,
            left.degree + right.degree,
            left.parity + right.parity,
        );
        for (wl, &cl) in &left.terms {
            for (wr, &cr) in &right.terms {
                *out.terms.entry(join(wl, wr)?).or_insert(0) += cl * cr;
            }
        }
        out.terms.retain(|_, c| *c != 0);
        Ok(out)
    }

    pub fn evaluate(&self, scalars: &ScalarConfig) -> Operator {
        let mut op = Operator::zero(self.source.clone(), self.target.clone());
        for (w, &c) in &self.terms {
            op.add_scaled(&w.evaluate(scalars), c);
        }
        op
    }
}

/// `(-1)^{p(f)p(g)}`.
pub fn interchange_sign(pf: u8, pg: u8) -> i64 {
    if pf % 2 == 1 && pg % 2 == 1 {
        -1
    } else {
        1
    }
}

/// Equality of the two operators on every basis monomial of the source.
pub fn semantically_equal(a: &LinearMorphism, b: &LinearMorphism, scalars: &ScalarConfig) -> Result<bool> {
    a.check_compatible(b)?;
    Ok(a.evaluate(scalars) == b.evaluate(scalars))
}

/// Checks that every nonzero image of a basis monomial under `m` is
/// homogeneous with q-degree and parity shifted by those of `m`.
pub fn bookkeeping_holds(m: &LinearMorphism, scalars: &ScalarConfig) -> bool {
    let op = m.evaluate(scalars);
    let q0 = m.source.q_offset();
    let q1 = m.target.q_offset();
    op.columns.iter().enumerate().all(|(mask, img)| {
        let qin = 2 * (mask as u64).count_ones() as i32 + q0;
        img.keys().all(|&k| {
            let len = k.count_ones() as i32;
            2 * len + q1 - qin == m.degree
                && ((len - (mask as u64).count_ones() as i32).rem_euclid(2) as u8) == m.parity
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(s: &str) -> ColoredSequence {
        ColoredSequence::parse(4, s).unwrap()
    }

    fn word(s: &str) -> DiagramWord {
        DiagramWord::identity(seq(s))
    }

    #[test]
    fn identity_composes_trivially() {
        let f = LinearMorphism::from_word(word("1 2").x(0).unwrap().dot(1).unwrap());
        let id = LinearMorphism::identity(f.target().clone());
        assert_eq!(LinearMorphism::compose_vertical(&id, &f).unwrap(), f);
    }

    #[test]
    fn double_dot_is_zero() {
        let d = LinearMorphism::from_word(word("3").dot(0).unwrap());
        let dd = LinearMorphism::compose_vertical(&d, &d).unwrap();
        assert_eq!(dd.degree(), 4);
        assert_eq!(dd.parity(), 0);
        assert!(dd.evaluate(&ScalarConfig::new(4)).is_zero());
    }

    #[test]
    fn boundary_mismatch_is_an_error() {
        let a = LinearMorphism::identity(seq("1"));
        let b = LinearMorphism::identity(seq("2"));
        assert!(matches!(LinearMorphism::compose_vertical(&a, &b), Err(Error::BoundaryMismatch(_))));
        assert!(word("1").split(0).is_err());
    }

    #[test]
    fn dot_dot_interchange() {
        let d = LinearMorphism::from_word(word("1").dot(0).unwrap());
        let sc = ScalarConfig::new(4);
        let raw = LinearMorphism::compose_horizontal_right_first(&d, &d).unwrap();
        let normal = LinearMorphism::compose_horizontal(&d, &d).unwrap();
        assert!(semantically_equal(&raw, &normal.scale(-1), &sc).unwrap());
        assert!(semantically_equal(&raw, &LinearMorphism::right_first_normalized(&d, &d).unwrap(), &sc).unwrap());
        let e = LinearMorphism::from_word(word("2 2").x(0).unwrap().x(0).unwrap());
        let mixed = LinearMorphism::compose_horizontal_right_first(&e, &d).unwrap();
        assert!(semantically_equal(&mixed, &LinearMorphism::compose_horizontal(&e, &d).unwrap(), &sc).unwrap());
    }

    #[test]
    fn horizontal_with_identity_pads() {
        let d = LinearMorphism::from_word(word("1").dot(0).unwrap());
        let padded = LinearMorphism::compose_horizontal(&d, &LinearMorphism::identity(seq("2"))).unwrap();
        let w = padded.terms().keys().next().unwrap();
        assert_eq!(w.source(), &seq("1 2"));
        assert_eq!(w.layers().len(), 1);
    }

    #[test]
    fn adjacent_crossing_evaluates_to_linear_form() {
        let sc = ScalarConfig::new(4).with_t(2, 1, -1).unwrap();
        let op = word("2 1").x(0).unwrap().evaluate(&sc);
        // t_{12} x_{1,1} + t_{21} x_{2,1} with t_{12} = 1, t_{21} = -1.
        let expect: Lin = [(1, 1), (2, -1)].into_iter().collect();
        assert_eq!(op.columns[0], expect);
    }

    #[test]
    fn same_color_r2_vanishes() {
        let op = word("1 1").x(0).unwrap().x(0).unwrap().evaluate(&ScalarConfig::new(4));
        assert!(op.is_zero());
    }

    fn random_word(src: &ColoredSequence, choices: &[(u8, usize)]) -> DiagramWord {
        let mut w = DiagramWord::identity(src.clone());
        for &(k, p) in choices {
            let kind = match k {
                0 => GeneratorKind::Dot,
                1 => GeneratorKind::Split,
                2 => GeneratorKind::Merge,
                _ => GeneratorKind::Crossing,
            };
            let len = w.target().len();
            if let Ok(next) = w.clone().then(kind, p % len) {
                w = next;
            }
        }
        w
    }

    proptest! {
        #[test]
        fn evaluation_is_functorial(
            a in proptest::collection::vec((0u8..4, 0usize..4), 0..6),
            b in proptest::collection::vec((0u8..4, 0usize..4), 0..6),
            bits in 0u64..64,
        ) {
            let src = seq("1 2^(2) 1");
            let sc = ScalarConfig::from_adjacent_bits(4, bits);
            let wb = random_word(&src, &b);
            let wa = random_word(wb.target(), &a);
            let composite = DiagramWord::compose_vertical(&wa, &wb).unwrap();
            let lhs = composite.evaluate(&sc);
            let rhs = wb.evaluate(&sc).then(&wa.evaluate(&sc)).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(composite.degree(), wa.degree() + wb.degree());
            prop_assert_eq!(composite.parity(), (wa.parity() + wb.parity()) % 2);
        }

        #[test]
        fn words_respect_bookkeeping(
            a in proptest::collection::vec((0u8..4, 0usize..4), 0..8),
            bits in 0u64..64,
        ) {
            let src = seq("2 1^(2) 3");
            let sc = ScalarConfig::from_adjacent_bits(4, bits);
            let w = LinearMorphism::from_word(random_word(&src, &a));
            prop_assert!(bookkeeping_holds(&w, &sc));
        }
    }
}

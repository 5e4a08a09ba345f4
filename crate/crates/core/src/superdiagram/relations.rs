//! Exhaustive check of the local relations through the representation on `P(ν)`.
//!
//! Every relation is instantiated at all colorings in `1..=n`, optionally
//! padded by one extra strand on either side, and checked for every sign
//! pattern of `t_{ij}, t_{ji}` on the adjacent pairs among its colors. The
//! scalars `r_i` are fixed to `+1`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bookkeeping_holds, interchange_sign, semantically_equal, DiagramWord, LinearMorphism, Operator};
use crate::error::{Error, Result};
use crate::exterior::{ColoredSequence, ScalarConfig, Strand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    Defining,
    Derived,
    ThickDefinition,
    /// Holds only in a cyclotomic quotient; reported, not expected to hold here.
    Cyclotomic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationResult {
    pub relation: String,
    pub kind: RelationKind,
    pub instance: String,
    pub t_choices: usize,
    /// Sign patterns that failed, as `t12=-1 t21=1 …`.
    pub failed_t: Vec<String>,
    /// Degree/parity bookkeeping of both sides; `None` where not applicable.
    pub bookkeeping: Option<bool>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTally {
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationReport {
    pub rank: usize,
    pub size_bound: usize,
    pub results: Vec<RelationResult>,
    pub summary: BTreeMap<String, RelationTally>,
}

impl RelationReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn relation_passes(&self, relation: &str) -> bool {
        self.summary.get(relation).is_some_and(|t| t.failed == 0 && t.passed > 0)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RelationResult> {
        self.results.iter().filter(|r| !r.pass)
    }
}

type Sides = Arc<dyn Fn(&ScalarConfig) -> Result<(LinearMorphism, LinearMorphism)> + Send + Sync>;
type OpPair = Arc<dyn Fn(&ScalarConfig) -> Result<(Operator, Operator)> + Send + Sync>;

#[derive(Clone)]
enum Check {
    Semantic(Sides),
    /// Operators compared column by column after identifying generator masks.
    Masks(OpPair),
}

#[derive(Clone)]
struct Template {
    relation: &'static str,
    kind: RelationKind,
    label: String,
    colors: Vec<usize>,
    size: usize,
    check: Check,
}

fn sm(c: usize) -> Strand {
    Strand::simple(c)
}

fn db(c: usize) -> Strand {
    Strand::double(c)
}

fn adjacent(i: usize, j: usize) -> bool {
    i.abs_diff(j) == 1
}

/// A word from a layer string such as `"X1 D2 S1 M3"` (1-based positions).
fn word(n: usize, strands: &[Strand], layers: &str) -> Result<DiagramWord> {
    let mut w = DiagramWord::identity(ColoredSequence::new(n, strands.to_vec())?);
    for tok in layers.split_whitespace() {
        let (tag, pos) = tok.split_at(1);
        let pos: usize = pos.parse().map_err(|_| Error::Parse(tok.into()))?;
        w = match tag {
            "X" => w.x(pos - 1)?,
            "D" => w.dot(pos - 1)?,
            "S" => w.split(pos - 1)?,
            "M" => w.merge(pos - 1)?,
            _ => return Err(Error::Parse(tok.into())),
        };
    }
    Ok(w)
}

fn mor(n: usize, strands: &[Strand], layers: &str) -> Result<LinearMorphism> {
    Ok(LinearMorphism::from_word(word(n, strands, layers)?))
}

/// `Σ c_k · w_k` over words sharing their boundary.
fn combo(n: usize, strands: &[Strand], parts: &[(i64, &str)]) -> Result<LinearMorphism> {
    let mut acc: Option<LinearMorphism> = None;
    for &(c, layers) in parts {
        let m = LinearMorphism::scaled_word(word(n, strands, layers)?, c);
        acc = Some(match acc {
            None => m,
            Some(a) => a.add(&m)?,
        });
    }
    acc.ok_or_else(|| Error::InvalidDiagram("empty combination".into()))
}

fn zero_like(m: &LinearMorphism) -> LinearMorphism {
    LinearMorphism::zero(m.source().clone(), m.target().clone(), m.degree(), m.parity())
}

fn label(strands: &[Strand]) -> String {
    strands.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

fn semantic(
    relation: &'static str,
    kind: RelationKind,
    strands: Vec<Strand>,
    f: impl Fn(&ScalarConfig) -> Result<(LinearMorphism, LinearMorphism)> + Send + Sync + 'static,
) -> Template {
    let mut colors: Vec<usize> = strands.iter().map(|s| s.color).collect();
    colors.sort_unstable();
    colors.dedup();
    Template {
        relation,
        kind,
        label: label(&strands),
        size: strands.iter().map(|s| s.thick as usize).sum(),
        colors,
        check: Check::Semantic(Arc::new(f)),
    }
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=n).flat_map(move |i| (1..=n).map(move |j| (i, j)))
}

fn triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    pairs(n).flat_map(move |(i, j)| (1..=n).map(move |k| (i, j, k)))
}

fn defining(n: usize) -> Vec<Template> {
    use RelationKind::Defining as K;
    let mut out = Vec::new();

    // Local generators used as the two blocks of the interchange law.
    let mut blocks: Vec<(Vec<Strand>, &'static str)> = Vec::new();
    for i in 1..=n {
        blocks.push((vec![sm(i)], "D1"));
        blocks.push((vec![db(i)], "S1"));
        blocks.push((vec![sm(i), sm(i)], "M1"));
    }
    for (i, j) in pairs(n) {
        blocks.push((vec![sm(i), sm(j)], "X1"));
    }
    for (bf, lf) in &blocks {
        for (bg, lg) in &blocks {
            let (bf, bg, lf, lg) = (bf.clone(), bg.clone(), *lf, *lg);
            let mut all = bf.clone();
            all.extend_from_slice(&bg);
            out.push(semantic("chronology", K, all, move |_| {
                let f = mor(n, &bf, lf)?;
                let g = mor(n, &bg, lg)?;
                let raw = LinearMorphism::compose_horizontal_right_first(&f, &g)?;
                let normal = LinearMorphism::compose_horizontal(&f, &g)?
                    .scale(interchange_sign(f.parity(), g.parity()));
                Ok((raw, normal))
            }));
        }
    }

    for i in 1..=n {
        out.push(semantic("dotnil", K, vec![sm(i)], move |_| {
            let l = mor(n, &[sm(i)], "D1 D1")?;
            Ok((l.clone(), zero_like(&l)))
        }));
    }

    for (i, j) in pairs(n) {
        let st = vec![sm(i), sm(j)];
        out.push(semantic("klrR2", K, st.clone(), move |sc| {
            let l = mor(n, &st, "X1 X1")?;
            let r = if i == j {
                zero_like(&l)
            } else if !adjacent(i, j) {
                LinearMorphism::identity(l.source().clone()).scale(sc.t(i, j))
            } else {
                combo(n, &st, &[(sc.t(i, j), "D1"), (sc.t(j, i), "D2")])?
            };
            Ok((l, r))
        }));
    }

    for (i, j) in pairs(n).filter(|(i, j)| i != j) {
        let st = vec![sm(i), sm(j)];
        let s = if crate::exterior::p(i, j) == 1 { -1 } else { 1 };
        let st2 = st.clone();
        out.push(semantic("dotslides", K, st.clone(), move |_| {
            Ok((mor(n, &st, "X1 D1")?, mor(n, &st, "D2 X1")?.scale(s)))
        }));
        out.push(semantic("dotslides", K, st2.clone(), move |_| {
            Ok((mor(n, &st2, "D1 X1")?, mor(n, &st2, "X1 D2")?.scale(s)))
        }));
    }

    for i in 1..n {
        let st = vec![sm(i + 1), sm(i)];
        out.push(semantic("dotjumpneib", K, st.clone(), move |sc| {
            let l = combo(n, &st, &[(sc.t(i, i + 1), "X1 D1"), (sc.t(i + 1, i), "X1 D2")])?;
            Ok((l.clone(), zero_like(&l)))
        }));
    }

    for i in 1..=n {
        let st = vec![sm(i), sm(i)];
        let st2 = st.clone();
        out.push(semantic("dotslide-nilH", K, st.clone(), move |sc| {
            let l = combo(n, &st, &[(1, "X1 D1"), (1, "D2 X1")])?;
            Ok((l, LinearMorphism::identity(ColoredSequence::new(n, st.clone())?).scale(sc.r(i))))
        }));
        out.push(semantic("dotslide-nilH", K, st2.clone(), move |sc| {
            let l = combo(n, &st2, &[(1, "D1 X1"), (1, "X1 D2")])?;
            Ok((l, LinearMorphism::identity(ColoredSequence::new(n, st2.clone())?).scale(sc.r(i))))
        }));
    }

    for (i, j, k) in triples(n) {
        let st = vec![sm(i), sm(j), sm(k)];
        if i == k && adjacent(i, j) {
            out.push(semantic("R3serre", K, st.clone(), move |sc| {
                let l = combo(n, &st, &[(1, "X1 X2 X1"), (1, "X2 X1 X2")])?;
                let r = LinearMorphism::identity(l.source().clone()).scale(sc.r(i) * sc.t(i, j));
                Ok((l, r))
            }));
        } else {
            let p = crate::exterior::p;
            let e = p(j, k) * p(i, k) + p(j, k) * p(i, j) + p(i, k) * p(i, j);
            let s = if e % 2 == 1 { -1 } else { 1 };
            out.push(semantic("klrR3", K, st.clone(), move |_| {
                Ok((mor(n, &st, "X1 X2 X1")?, mor(n, &st, "X2 X1 X2")?.scale(s)))
            }));
        }
    }

    for j in 1..=n {
        let jj = vec![sm(j), sm(j)];
        out.push(semantic("dumbelXing", K, jj.clone(), move |_| {
            Ok((mor(n, &jj, "M1 S1")?, mor(n, &jj, "X1")?))
        }));
        let j2 = vec![db(j)];
        for dots in ["S1 D1 M1", "S1 D2 M1"] {
            let j2 = j2.clone();
            out.push(semantic("digons", K, j2.clone(), move |_| {
                Ok((mor(n, &j2, dots)?, LinearMorphism::identity(ColoredSequence::new(n, j2.clone())?)))
            }));
        }
        let j2b = j2.clone();
        out.push(semantic("digons", K, j2.clone(), move |_| {
            let l = mor(n, &j2b, "S1 M1")?;
            Ok((l.clone(), zero_like(&l)))
        }));
        let j2c = j2.clone();
        out.push(semantic("zero-pitchforks", K, j2c.clone(), move |_| {
            let l = mor(n, &j2c, "S1 X1")?;
            Ok((l.clone(), zero_like(&l)))
        }));
        let jjb = vec![sm(j), sm(j)];
        out.push(semantic("zero-pitchforks", K, jjb.clone(), move |_| {
            let l = mor(n, &jjb, "X1 M1")?;
            Ok((l.clone(), zero_like(&l)))
        }));
    }

    let pitch: [(&'static str, fn(usize, usize) -> Vec<Strand>, &'static str, &'static str); 6] = [
        ("lpitchforks", |j, k| vec![sm(j), db(k)], "X1 S1", "S2 X1 X2"),
        ("lpitchforks", |j, k| vec![sm(j), sm(k), sm(k)], "M2 X1", "X1 X2 M1"),
        ("rpitchforks", |j, k| vec![sm(k), sm(k), sm(j)], "M1 X1", "X2 X1 M2"),
        ("rpitchforks", |j, k| vec![db(k), sm(j)], "X1 S2", "S1 X2 X1"),
        ("dpitchforks", |j, k| vec![db(j), db(k)], "X1 S1", "S2 X1 X2"),
        ("dpitchforks", |j, k| vec![db(j), sm(k), sm(k)], "M2 X1", "X1 X2 M1"),
    ];
    for (name, shape, lhs, rhs) in pitch {
        for (j, k) in pairs(n) {
            let st = shape(j, k);
            out.push(semantic(name, K, st.clone(), move |_| Ok((mor(n, &st, lhs)?, mor(n, &st, rhs)?))));
        }
    }
    out
}

fn derived(n: usize) -> Vec<Template> {
    use RelationKind::Derived as K;
    let mut out = Vec::new();
    for i in 1..=n {
        let ii = vec![sm(i), sm(i)];
        out.push(semantic("dotjumps", K, ii.clone(), move |_| Ok((mor(n, &ii, "D1")?, mor(n, &ii, "D2")?))));
        let shapes: [(&'static str, Vec<Strand>); 4] = [
            ("threestrands", vec![sm(i), sm(i), sm(i)]),
            ("morethanthreestrands", vec![db(i), sm(i)]),
            ("morethanthreestrands", vec![sm(i), db(i)]),
            ("morethanthreestrands", vec![db(i), db(i)]),
        ];
        for (name, st) in shapes {
            out.push(semantic(name, K, st.clone(), move |_| {
                let id = LinearMorphism::identity(ColoredSequence::new(n, st.clone())?);
                Ok((id.clone(), zero_like(&id)))
            }));
        }
    }
    for (i, j) in pairs(n) {
        if adjacent(i, j) {
            let st = vec![sm(i), db(j), sm(i)];
            out.push(semantic("dotjumpdlb", K, st.clone(), move |_| Ok((mor(n, &st, "D1")?, mor(n, &st, "D3")?))));
            let st = vec![db(i), db(j)];
            out.push(semantic("thickXing22-vanishes", K, st.clone(), move |_| {
                let l = mor(n, &st, "X1")?;
                Ok((l.clone(), zero_like(&l)))
            }));
        }
        let a = vec![db(i), sm(j)];
        out.push(semantic("thick-dotslides", K, a.clone(), move |_| Ok((mor(n, &a, "X1 D1")?, mor(n, &a, "D2 X1")?))));
        let b = vec![sm(i), db(j)];
        out.push(semantic("thick-dotslides", K, b.clone(), move |_| Ok((mor(n, &b, "D1 X1")?, mor(n, &b, "X1 D2")?))));
        let shapes = [(vec![sm(i), db(j)], 2), (vec![db(i), sm(j)], 2), (vec![db(i), db(j)], 4)];
        for (st, pow) in shapes {
            out.push(semantic("thick-R2", K, st.clone(), move |sc| {
                let l = mor(n, &st, "X1 X1")?;
                let r = if i.abs_diff(j) > 1 {
                    LinearMorphism::identity(l.source().clone()).scale(sc.t(i, j).pow(pow))
                } else {
                    zero_like(&l)
                };
                Ok((l, r))
            }));
        }
    }
    for (i, j, k) in triples(n) {
        if i == j || j == k {
            continue;
        }
        for mask in 1u8..8 {
            let th = |b: u8, c: usize| if mask >> b & 1 == 1 { db(c) } else { sm(c) };
            let st = vec![th(0, i), th(1, j), th(2, k)];
            if st.iter().map(|s| s.thick as usize).sum::<usize>() > 6 {
                continue;
            }
            if mask == 0b010 && i == k && adjacent(i, j) {
                out.push(semantic("thick-R3", K, st.clone(), move |sc| {
                    let l = combo(n, &st, &[(1, "X1 X2 X1"), (-1, "X2 X1 X2")])?;
                    let c = sc.r(i) * sc.t(i, j) * sc.t(i, j);
                    Ok((l, combo(n, &st, &[(c, "D1"), (-c, "D3")])?))
                }));
            } else {
                out.push(semantic("thick-R3", K, st.clone(), move |_| {
                    Ok((mor(n, &st, "X1 X2 X1")?, mor(n, &st, "X2 X1 X2")?))
                }));
            }
        }
    }
    if n >= 4 {
        let st = vec![sm(4), db(3), db(2), sm(1), sm(4), sm(3), sm(2)];
        let st2 = st.clone();
        out.push(semantic("dotjumpsover", RelationKind::Cyclotomic, st.clone(), move |_| {
            Ok((mor(n, &st, "D1")?, mor(n, &st, "D5")?))
        }));
        out.push(semantic("dotjumpsover", RelationKind::Cyclotomic, st2.clone(), move |sc| {
            let c = -(sc.t(1, 2) * sc.t(2, 1)) * (sc.t(2, 3) * sc.t(3, 2)) * (sc.t(3, 4) * sc.t(4, 3));
            Ok((mor(n, &st2, "D5")?, mor(n, &st2, "D4")?.scale(c)))
        }));
    }
    out
}

/// Operator of `w` preceded by the idempotents `[X, D]` on the listed positions
/// (0-based, each the left strand of an `i i` pair standing for `i^(2)`).
fn with_idempotents(n: usize, simple: &[Strand], idem: &[usize], layers: &str, sc: &ScalarConfig) -> Result<Operator> {
    let mut w = DiagramWord::identity(ColoredSequence::new(n, simple.to_vec())?);
    for &p in idem {
        w = w.x(p)?.dot(p)?;
    }
    let e = w.evaluate(sc);
    let body = word(n, w.target().strands(), layers)?.evaluate(sc);
    e.then(&body)
}

/// The thick generator applied after the same idempotents, with masks read in
/// the thick sequence.
fn thick_after_idempotents(
    n: usize,
    simple: &[Strand],
    idem: &[usize],
    thick_src: &[Strand],
    layers: &str,
    sc: &ScalarConfig,
) -> Result<Operator> {
    let mut w = DiagramWord::identity(ColoredSequence::new(n, simple.to_vec())?);
    for &p in idem {
        w = w.x(p)?.dot(p)?;
    }
    let e = w.evaluate(sc);
    let g = word(n, thick_src, layers)?.evaluate(sc);
    let columns = e.columns.iter().map(|c| g.apply(c)).collect();
    Ok(Operator { source: e.source, target: g.target, columns })
}

fn masks_template(
    relation: &'static str,
    strands: Vec<Strand>,
    f: impl Fn(&ScalarConfig) -> Result<(Operator, Operator)> + Send + Sync + 'static,
) -> Template {
    let mut colors: Vec<usize> = strands.iter().map(|s| s.color).collect();
    colors.sort_unstable();
    colors.dedup();
    Template {
        relation,
        kind: RelationKind::ThickDefinition,
        label: label(&strands),
        size: strands.iter().map(|s| s.thick as usize).sum(),
        colors,
        check: Check::Masks(Arc::new(f)),
    }
}

fn thick_definitions(n: usize) -> Vec<Template> {
    let mut out = Vec::new();
    for i in 1..=n {
        let ii = vec![sm(i), sm(i)];
        let a = ii.clone();
        out.push(masks_template("thick-identity-idempotent", vec![db(i)], move |sc| {
            let e = word(n, &a, "X1 D1")?.evaluate(sc);
            Ok((e.then(&e)?, e))
        }));
        let a = ii.clone();
        out.push(masks_template("thick-split-definition", vec![db(i)], move |sc| {
            Ok((
                thick_after_idempotents(n, &a, &[0], &[db(i)], "S1", sc)?,
                with_idempotents(n, &a, &[0], "X1", sc)?,
            ))
        }));
        let a = ii.clone();
        out.push(masks_template("thick-merge-definition", ii.clone(), move |sc| {
            let g = word(n, &a, "M1")?.evaluate(sc);
            let c = word(n, &a, "X1 D1")?.evaluate(sc);
            Ok((g, Operator { target: g_target(n, i)?, ..c }))
        }));
    }
    for (i, j) in pairs(n) {
        out.push(masks_template("thick-X12-definition", vec![sm(i), db(j)], move |sc| {
            Ok((
                thick_after_idempotents(n, &[sm(i), sm(j), sm(j)], &[1], &[sm(i), db(j)], "X1", sc)?,
                with_idempotents(n, &[sm(i), sm(j), sm(j)], &[1], "X2 D2 X1 X2 X1 D1", sc)?,
            ))
        }));
        out.push(masks_template("thick-X21-definition", vec![db(i), sm(j)], move |sc| {
            Ok((
                thick_after_idempotents(n, &[sm(i), sm(i), sm(j)], &[0], &[db(i), sm(j)], "X1", sc)?,
                with_idempotents(n, &[sm(i), sm(i), sm(j)], &[0], "X1 D2 X2 X1 X2 D2", sc)?,
            ))
        }));
        out.push(masks_template("thick-X22-definition", vec![db(i), db(j)], move |sc| {
            let simple = [sm(i), sm(i), sm(j), sm(j)];
            Ok((
                thick_after_idempotents(n, &simple, &[0, 2], &[db(i), db(j)], "X1", sc)?,
                with_idempotents(n, &simple, &[0, 2], "X1 X3 D1 X2 X1 X3 X2 D1 X1 D1 X3 D3", sc)?,
            ))
        }));
    }
    out
}

fn g_target(n: usize, i: usize) -> Result<ColoredSequence> {
    ColoredSequence::new(n, vec![db(i)])
}

/// All t sign patterns on the adjacent pairs among `colors`.
fn t_choices(n: usize, colors: &[usize]) -> Vec<(ScalarConfig, String)> {
    let mut slots = Vec::new();
    for i in 1..n {
        if colors.contains(&i) && colors.contains(&(i + 1)) {
            slots.push(2 * (i - 1));
            slots.push(2 * (i - 1) + 1);
        }
    }
    (0u64..1 << slots.len())
        .map(|sel| {
            let mut bits = 0u64;
            for (k, &b) in slots.iter().enumerate() {
                if sel >> k & 1 == 1 {
                    bits |= 1 << b;
                }
            }
            let sc = ScalarConfig::from_adjacent_bits(n, bits);
            let desc = slots
                .iter()
                .map(|&b| {
                    let i = b / 2 + 1;
                    let (x, y) = if b % 2 == 0 { (i, i + 1) } else { (i + 1, i) };
                    format!("t{x}{y}={}", sc.t(x, y))
                })
                .collect::<Vec<_>>()
                .join(" ");
            (sc, desc)
        })
        .collect()
}

fn pad(m: &LinearMorphism, left: Option<Strand>, right: Option<Strand>, n: usize) -> Result<LinearMorphism> {
    let mut out = m.clone();
    if let Some(s) = left {
        let id = LinearMorphism::identity(ColoredSequence::new(n, vec![s])?);
        out = LinearMorphism::compose_horizontal(&id, &out)?;
    }
    if let Some(s) = right {
        let id = LinearMorphism::identity(ColoredSequence::new(n, vec![s])?);
        out = LinearMorphism::compose_horizontal(&out, &id)?;
    }
    Ok(out)
}

fn run_template(t: &Template, n: usize, size_bound: usize) -> Vec<RelationResult> {
    let choices = t_choices(n, &t.colors);
    match &t.check {
        Check::Masks(f) => {
            let failed_t: Vec<String> = choices
                .iter()
                .filter(|(sc, _)| !matches!(f(sc), Ok((a, b)) if a.columns == b.columns))
                .map(|(_, d)| d.clone())
                .collect();
            vec![RelationResult {
                relation: t.relation.into(),
                kind: t.kind,
                instance: t.label.clone(),
                t_choices: choices.len(),
                pass: failed_t.is_empty(),
                failed_t,
                bookkeeping: None,
            }]
        }
        Check::Semantic(f) => {
            let mut pads: Vec<(Option<Strand>, Option<Strand>)> = vec![(None, None)];
            if t.kind != RelationKind::Cyclotomic {
                for c in 1..=n {
                    for th in 1..=2u8 {
                        if t.size + th as usize <= size_bound {
                            let s = Strand { color: c, thick: th };
                            pads.push((Some(s), None));
                            pads.push((None, Some(s)));
                        }
                    }
                }
            }
            pads.into_iter()
                .map(|(l, r)| {
                    let mut inst = t.label.clone();
                    if let Some(s) = l {
                        inst = format!("{s} | {inst}");
                    }
                    if let Some(s) = r {
                        inst = format!("{inst} | {s}");
                    }
                    let mut failed_t = Vec::new();
                    let mut bookkeeping = true;
                    for (k, (sc, desc)) in choices.iter().enumerate() {
                        let ok = f(sc).and_then(|(a, b)| {
                            let (a, b) = (pad(&a, l, r, n)?, pad(&b, l, r, n)?);
                            if k == 0 {
                                bookkeeping = bookkeeping_holds(&a, sc) && bookkeeping_holds(&b, sc);
                            }
                            semantically_equal(&a, &b, sc)
                        });
                        if !matches!(ok, Ok(true)) {
                            failed_t.push(desc.clone());
                        }
                    }
                    RelationResult {
                        relation: t.relation.into(),
                        kind: t.kind,
                        instance: inst,
                        t_choices: choices.len(),
                        pass: failed_t.is_empty() && bookkeeping,
                        failed_t,
                        bookkeeping: Some(bookkeeping),
                    }
                })
                .collect()
        }
    }
}

/// Runs every relation instance with colors in `1..=n` and total size at
/// most `size_bound` (the cyclotomic instances are always included).
pub fn relation_suite(n: usize, size_bound: usize) -> RelationReport {
    let mut templates = defining(n);
    templates.extend(derived(n));
    templates.extend(thick_definitions(n));
    templates.retain(|t| t.kind == RelationKind::Cyclotomic || t.size <= size_bound);
    let results: Vec<RelationResult> =
        templates.par_iter().flat_map_iter(|t| run_template(t, n, size_bound)).collect();
    let mut summary: BTreeMap<String, RelationTally> = BTreeMap::new();
    for r in &results {
        let e = summary.entry(r.relation.clone()).or_default();
        if r.pass {
            e.passed += 1;
        } else {
            e.failed += 1;
        }
    }
    RelationReport { rank: n, size_bound, results, summary }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_parser_reads_layers() {
        let w = word(3, &[sm(1), sm(2)], "X1 D2").unwrap();
        assert_eq!(w.layers().len(), 2);
        assert_eq!(w.target().strands(), &[sm(2), sm(1)]);
        assert!(word(3, &[sm(1)], "Q1").is_err());
    }

    #[test]
    fn t_choices_cover_present_adjacent_pairs() {
        assert_eq!(t_choices(4, &[1, 3]).len(), 1);
        assert_eq!(t_choices(4, &[1, 2]).len(), 4);
        assert_eq!(t_choices(4, &[1, 2, 3, 4]).len(), 64);
    }

    #[test]
    fn distant_r2_is_t() {
        let report = relation_suite(3, 2);
        let r: Vec<_> = report
            .results
            .iter()
            .filter(|r| r.relation == "klrR2" && r.instance == "1 3")
            .collect();
        assert_eq!(r.len(), 1);
        assert!(r[0].pass);
    }
}

//! Bigraded integer chain complexes and their homology.
//!
//! Differentials raise the homological degree `h` by one and preserve the
//! q-degree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column-major sparse integer matrix; each column is sorted by row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: Vec<Vec<(usize, i64)>>,
}

impl SparseMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols: vec![Vec::new(); cols] }
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn from_columns(rows: usize, cols: Vec<BTreeMap<usize, i64>>) -> Self {
        let cols = cols
            .into_iter()
            .map(|c| c.into_iter().filter(|&(_, v)| v != 0).collect())
            .collect();
        SparseMatrix { rows, cols }
    }

    pub fn from_dense(m: &[Vec<i64>]) -> Self {
        let rows = m.len();
        let ncols = m.first().map_or(0, |r| r.len());
        let cols = (0..ncols)
            .map(|j| (0..rows).filter(|&i| m[i][j] != 0).map(|i| (i, m[i][j])).collect())
            .collect();
        SparseMatrix { rows, cols }
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.cols[j]
            .binary_search_by_key(&i, |&(r, _)| r)
            .map_or(0, |k| self.cols[j][k].1)
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(|c| c.is_empty())
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(|c| c.len()).sum()
    }

    /// `self ∘ rhs`.
    pub fn mul(&self, rhs: &SparseMatrix) -> Result<SparseMatrix> {
        if rhs.rows != self.ncols() {
            return Err(Error::Invariant(format!(
                "cannot compose {}x{} after {}x{}",
                self.rows,
                self.ncols(),
                rhs.rows,
                rhs.ncols()
            )));
        }
        let cols = rhs
            .cols
            .iter()
            .map(|c| {
                let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
                for &(k, a) in c {
                    for &(i, b) in &self.cols[k] {
                        *acc.entry(i).or_insert(0) += a * b;
                    }
                }
                acc
            })
            .collect();
        Ok(SparseMatrix::from_columns(self.rows, cols))
    }

    pub fn add(&self, rhs: &SparseMatrix, c: i64) -> SparseMatrix {
        let cols = self
            .cols
            .iter()
            .zip(&rhs.cols)
            .map(|(a, b)| {
                let mut acc: BTreeMap<usize, i64> = a.iter().copied().collect();
                for &(i, v) in b {
                    *acc.entry(i).or_insert(0) += c * v;
                }
                acc
            })
            .collect();
        SparseMatrix::from_columns(self.rows, cols)
    }

    pub fn identity(n: usize) -> SparseMatrix {
        SparseMatrix { rows: n, cols: (0..n).map(|i| vec![(i, 1)]).collect() }
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0; self.ncols()]; self.rows];
        for (j, c) in self.cols.iter().enumerate() {
            for &(i, v) in c {
                m[i][j] = v;
            }
        }
        m
    }
}

/// Free chain groups with a q-degree per basis element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BigradedComplex {
    pub groups: BTreeMap<i32, Vec<i32>>,
    /// `d[h] : C_h → C_{h+1}`; missing entries are zero maps.
    pub d: BTreeMap<i32, SparseMatrix>,
}

impl BigradedComplex {
    pub fn new(groups: BTreeMap<i32, Vec<i32>>, d: BTreeMap<i32, SparseMatrix>) -> Result<Self> {
        let c = BigradedComplex { groups, d };
        c.check_shapes()?;
        Ok(c)
    }

    pub fn rank(&self, h: i32) -> usize {
        self.groups.get(&h).map_or(0, |g| g.len())
    }

    pub fn total_rank(&self) -> usize {
        self.groups.values().map(|g| g.len()).sum()
    }

    /// The differential out of degree `h`, as an explicit (possibly empty)
    /// matrix.
    pub fn differential(&self, h: i32) -> SparseMatrix {
        self.d
            .get(&h)
            .cloned()
            .unwrap_or_else(|| SparseMatrix::zero(self.rank(h + 1), self.rank(h)))
    }

    fn check_shapes(&self) -> Result<()> {
        for (&h, m) in &self.d {
            if m.ncols() != self.rank(h) || m.rows != self.rank(h + 1) {
                return Err(Error::Invariant(format!("differential d_{h} has the wrong shape")));
            }
            let src = &self.groups[&h];
            let tgt = &self.groups[&(h + 1)];
            for (j, c) in m.cols.iter().enumerate() {
                for &(i, _) in c {
                    if src[j] != tgt[i] {
                        return Err(Error::Invariant(format!(
                            "d_{h} does not preserve the q-degree"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Errors with the first degree where `d ∘ d ≠ 0`.
    pub fn check_d_squared(&self) -> Result<()> {
        for (&h, m) in &self.d {
            if let Some(next) = self.d.get(&(h + 1)) {
                if !next.mul(m)?.is_zero() {
                    return Err(Error::DSquaredNonzero(h));
                }
            }
        }
        Ok(())
    }

    /// Graded ranks of the chain groups.
    pub fn chain_ranks(&self) -> BTreeMap<(i32, i32), usize> {
        let mut out = BTreeMap::new();
        for (&h, qs) in &self.groups {
            for &q in qs {
                *out.entry((h, q)).or_insert(0) += 1;
            }
        }
        out
    }

    /// Alternating sum of the chain groups.
    pub fn euler_from_chains(&self) -> LaurentPoly {
        let mut p = LaurentPoly::zero();
        for ((h, q), r) in self.chain_ranks() {
            p.add_term(q, if h % 2 == 0 { r as i64 } else { -(r as i64) });
        }
        p
    }

    /// Shifts every q-degree by `s`.
    pub fn shift_q(&self, s: i32) -> BigradedComplex {
        let groups = self
            .groups
            .iter()
            .map(|(&h, qs)| (h, qs.iter().map(|q| q + s).collect()))
            .collect();
        BigradedComplex { groups, d: self.d.clone() }
    }

    /// Blocks `(q, rows, d restricted)` of `d_h` for each q-degree.
    fn blocks(&self, h: i32) -> BTreeMap<i32, (Vec<usize>, Vec<usize>)> {
        let mut out: BTreeMap<i32, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        if let Some(src) = self.groups.get(&h) {
            for (j, &q) in src.iter().enumerate() {
                out.entry(q).or_default().1.push(j);
            }
        }
        if let Some(tgt) = self.groups.get(&(h + 1)) {
            for (i, &q) in tgt.iter().enumerate() {
                out.entry(q).or_default().0.push(i);
            }
        }
        out
    }

    /// Dense block of `d_h` in q-degree `q` (rows × cols).
    fn dense_block(&self, h: i32, rows: &[usize], cols: &[usize]) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; cols.len()]; rows.len()];
        if let Some(d) = self.d.get(&h) {
            let row_pos: BTreeMap<usize, usize> =
                rows.iter().enumerate().map(|(k, &r)| (r, k)).collect();
            for (cj, &j) in cols.iter().enumerate() {
                for &(i, v) in &d.cols[j] {
                    if let Some(&ri) = row_pos.get(&i) {
                        m[ri][cj] = v;
                    }
                }
            }
        }
        m
    }

    /// Reduction modulo a prime, with homology dimensions.
    pub fn reduce_mod(&self, p: u64) -> Result<FieldHomology> {
        if !is_prime(p) {
            return Err(Error::Parse(format!("{p} is not prime")));
        }
        let degrees: Vec<i32> = self.groups.keys().copied().collect();
        // rank of d_h per q
        let ranks: BTreeMap<(i32, i32), usize> = degrees
            .par_iter()
            .flat_map_iter(|&h| {
                self.blocks(h)
                    .into_iter()
                    .map(move |(q, (rows, cols))| {
                        let m = self.dense_block(h, &rows, &cols);
                        ((h, q), rank_mod_p(&m, p))
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let mut dims = BTreeMap::new();
        for ((h, q), n) in self.chain_ranks() {
            let out = ranks.get(&(h, q)).copied().unwrap_or(0);
            let inc = ranks.get(&(h - 1, q)).copied().unwrap_or(0);
            let dim = n - out - inc;
            if dim > 0 {
                dims.insert((h, q), dim);
            }
        }
        Ok(FieldHomology { p, dims })
    }
}

impl fmt::Display for BigradedComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &h in self.groups.keys() {
            let mut by_q: BTreeMap<i32, usize> = BTreeMap::new();
            for &q in &self.groups[&h] {
                *by_q.entry(q).or_insert(0) += 1;
            }
            let parts: Vec<String> = by_q.iter().map(|(q, r)| format!("{r}q^{q}")).collect();
            writeln!(f, "C_{h}: {}", parts.join(" + "))?;
        }
        Ok(())
    }
}

/// Gaussian elimination along ±1 entries until none remain.
pub fn gaussian_eliminate(c: &BigradedComplex) -> BigradedComplex {
    let degrees: Vec<i32> = c.groups.keys().copied().collect();
    let mut alive: BTreeMap<i32, Vec<bool>> =
        c.groups.iter().map(|(&h, g)| (h, vec![true; g.len()])).collect();
    // Columns and row indices of every differential.
    let mut cols: BTreeMap<i32, Vec<BTreeMap<usize, i64>>> = BTreeMap::new();
    let mut rows: BTreeMap<i32, Vec<BTreeSet<usize>>> = BTreeMap::new();
    for &h in &degrees {
        let m = c.differential(h);
        let mut r = vec![BTreeSet::new(); m.rows];
        let cm: Vec<BTreeMap<usize, i64>> = m
            .cols
            .iter()
            .enumerate()
            .map(|(j, col)| {
                for &(i, _) in col {
                    r[i].insert(j);
                }
                col.iter().copied().collect()
            })
            .collect();
        cols.insert(h, cm);
        rows.insert(h, r);
    }

    for &h in &degrees {
        loop {
            // Pick the unit entry with the smallest fill-in estimate.
            let mut best: Option<(usize, usize, usize, i64)> = None;
            {
                let cm = &cols[&h];
                let rm = &rows[&h];
                for (j, col) in cm.iter().enumerate() {
                    for (&i, &v) in col {
                        if v == 1 || v == -1 {
                            let cost = (col.len() - 1) * (rm[i].len() - 1);
                            if best.is_none_or(|b| cost < b.0) {
                                best = Some((cost, j, i, v));
                            }
                            if cost == 0 {
                                break;
                            }
                        }
                    }
                    if best.is_some_and(|b| b.0 == 0) {
                        break;
                    }
                }
            }
            let Some((_, j, i, u)) = best else { break };
            // Clear row i of d_h using column j.
            let pivot_col: Vec<(usize, i64)> = cols[&h][j].iter().map(|(&r, &v)| (r, v)).collect();
            let others: Vec<usize> = rows[&h][i].iter().copied().filter(|&x| x != j).collect();
            for jj in others {
                let a = cols[&h][jj][&i];
                let f = a * u; // a / u with u = ±1
                for &(r, v) in &pivot_col {
                    let col = cols.get_mut(&h).unwrap().get_mut(jj).unwrap();
                    let e = col.entry(r).or_insert(0);
                    *e -= f * v;
                    if *e == 0 {
                        col.remove(&r);
                        rows.get_mut(&h).unwrap()[r].remove(&jj);
                    } else {
                        rows.get_mut(&h).unwrap()[r].insert(jj);
                    }
                }
            }
            // Drop column j and row i of d_h.
            for &(r, _) in &pivot_col {
                rows.get_mut(&h).unwrap()[r].remove(&j);
            }
            cols.get_mut(&h).unwrap()[j].clear();
            // Row i is now the pivot entry alone, already removed above.
            // Drop row j of d_{h-1}.
            if let Some(rm) = rows.get_mut(&(h - 1)) {
                let srcs: Vec<usize> = std::mem::take(&mut rm[j]).into_iter().collect();
                let cm = cols.get_mut(&(h - 1)).unwrap();
                for s in srcs {
                    cm[s].remove(&j);
                }
            }
            // Drop column i of d_{h+1}.
            if let Some(cm) = cols.get_mut(&(h + 1)) {
                let entries: Vec<usize> = std::mem::take(&mut cm[i]).into_keys().collect();
                let rm = rows.get_mut(&(h + 1)).unwrap();
                for r in entries {
                    rm[r].remove(&i);
                }
            }
            alive.get_mut(&h).unwrap()[j] = false;
            alive.get_mut(&(h + 1)).unwrap()[i] = false;
        }
    }

    // Compact the surviving basis.
    let mut new_index: BTreeMap<i32, Vec<Option<usize>>> = BTreeMap::new();
    let mut groups = BTreeMap::new();
    for (&h, a) in &alive {
        let mut idx = Vec::with_capacity(a.len());
        let mut qs = Vec::new();
        for (k, &live) in a.iter().enumerate() {
            if live {
                idx.push(Some(qs.len()));
                qs.push(c.groups[&h][k]);
            } else {
                idx.push(None);
            }
        }
        new_index.insert(h, idx);
        groups.insert(h, qs);
    }
    let mut d = BTreeMap::new();
    for &h in &degrees {
        if !groups.contains_key(&(h + 1)) {
            continue;
        }
        let src = &new_index[&h];
        let tgt = &new_index[&(h + 1)];
        let mut out = Vec::new();
        for (j, col) in cols[&h].iter().enumerate() {
            if src[j].is_some() {
                out.push(col.iter().filter_map(|(&r, &v)| tgt[r].map(|ri| (ri, v))).collect());
            }
        }
        let m = SparseMatrix { rows: groups[&(h + 1)].len(), cols: out };
        if !m.is_zero() {
            d.insert(h, m);
        }
    }
    groups.retain(|_, g: &mut Vec<i32>| !g.is_empty());
    d.retain(|h, _| groups.contains_key(h) && groups.contains_key(&(h + 1)));
    BigradedComplex { groups, d }
}

/// Free rank and torsion (prime powers, sorted) in one bidegree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyGroup {
    pub rank: usize,
    pub torsion: Vec<u64>,
}

impl HomologyGroup {
    pub fn is_zero(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HomologyTable {
    pub entries: BTreeMap<(i32, i32), HomologyGroup>,
}

/// One row of the serialized table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyRow {
    pub h: i32,
    pub q: i32,
    pub rank: usize,
    pub torsion: Vec<u64>,
}

impl Serialize for HomologyTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HomologyTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<HomologyRow>::deserialize(d)?;
        let mut entries = BTreeMap::new();
        for r in rows {
            let mut torsion = r.torsion;
            torsion.sort_unstable();
            let g = HomologyGroup { rank: r.rank, torsion };
            if !g.is_zero() {
                entries.insert((r.h, r.q), g);
            }
        }
        Ok(HomologyTable { entries })
    }
}

impl HomologyTable {
    pub fn rows(&self) -> Vec<HomologyRow> {
        self.entries
            .iter()
            .map(|(&(h, q), g)| HomologyRow { h, q, rank: g.rank, torsion: g.torsion.clone() })
            .collect()
    }

    pub fn get(&self, h: i32, q: i32) -> HomologyGroup {
        self.entries.get(&(h, q)).cloned().unwrap_or_default()
    }

    pub fn has_torsion(&self) -> bool {
        self.entries.values().any(|g| !g.torsion.is_empty())
    }

    pub fn shift_q(&self, s: i32) -> HomologyTable {
        HomologyTable { entries: self.entries.iter().map(|(&(h, q), g)| ((h, q + s), g.clone())).collect() }
    }
}

impl fmt::Display for HomologyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "0");
        }
        for (&(h, q), g) in &self.entries {
            let mut parts = Vec::new();
            if g.rank > 0 {
                parts.push(if g.rank == 1 { "Z".to_string() } else { format!("Z^{}", g.rank) });
            }
            parts.extend(g.torsion.iter().map(|t| format!("Z/{t}")));
            writeln!(f, "h={h:>3} q={q:>3}: {}", parts.join(" + "))?;
        }
        Ok(())
    }
}

/// Integral homology via Smith normal form of every q-block.
pub fn smith_homology(c: &BigradedComplex) -> Result<HomologyTable> {
    let degrees: Vec<i32> = c.groups.keys().copied().collect();
    let snf: Result<Vec<((i32, i32), Vec<i128>)>> = degrees
        .par_iter()
        .flat_map_iter(|&h| {
            c.blocks(h)
                .into_iter()
                .map(move |(q, (rows, cols))| {
                    let m = c.dense_block(h, &rows, &cols);
                    smith_diagonal(&m).map(|d| ((h, q), d))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let snf: BTreeMap<(i32, i32), Vec<i128>> = snf?.into_iter().collect();
    let mut entries = BTreeMap::new();
    for ((h, q), n) in c.chain_ranks() {
        let out = snf.get(&(h, q)).map_or(0, |d| d.len());
        let inc = snf.get(&(h - 1, q));
        let rank = n - out - inc.map_or(0, |d| d.len());
        let mut torsion = Vec::new();
        for &e in inc.into_iter().flatten() {
            torsion.extend(prime_power_parts(e.unsigned_abs() as u64));
        }
        torsion.sort_unstable();
        let g = HomologyGroup { rank, torsion };
        if !g.is_zero() {
            entries.insert((h, q), g);
        }
    }
    Ok(HomologyTable { entries })
}

/// Nonzero diagonal entries of the Smith normal form, each positive and
/// dividing the next.
pub fn smith_diagonal(m: &[Vec<i64>]) -> Result<Vec<i128>> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // Smallest nonzero entry of the remaining block.
        let mut piv: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if a[i][j] != 0 && piv.is_none_or(|(pi, pj)| a[i][j].abs() < a[pi][pj].abs()) {
                    piv = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = piv else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let p = a[t][t];
            let mut done = true;
            for i in t + 1..rows {
                if a[i][t] != 0 {
                    let f = a[i][t] / p;
                    for j in t..cols {
                        let v = a[t][j].checked_mul(f).ok_or(Error::Overflow("Smith normal form"))?;
                        a[i][j] = a[i][j].checked_sub(v).ok_or(Error::Overflow("Smith normal form"))?;
                    }
                    if a[i][t] != 0 {
                        done = false;
                    }
                }
            }
            for j in t + 1..cols {
                if a[t][j] != 0 {
                    let f = a[t][j] / p;
                    for i in t..rows {
                        let v = a[i][t].checked_mul(f).ok_or(Error::Overflow("Smith normal form"))?;
                        a[i][j] = a[i][j].checked_sub(v).ok_or(Error::Overflow("Smith normal form"))?;
                    }
                    if a[t][j] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                // Divisibility: fold in any row whose entries p does not divide.
                let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a[i][j] % p != 0));
                match bad {
                    Some(i) => {
                        for j in t..cols {
                            a[t][j] = a[t][j].checked_add(a[i][j]).ok_or(Error::Overflow("Smith normal form"))?;
                        }
                    }
                    None => break,
                }
            }
            // Move the smallest entry of row t / column t to the pivot.
            let mut best = (t, t);
            for i in t..rows {
                if a[i][t] != 0 && a[i][t].abs() < a[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..cols {
                if a[t][j] != 0 && a[t][j].abs() < a[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            a.swap(t, best.0);
            for row in a.iter_mut() {
                row.swap(t, best.1);
            }
        }
        diag.push(a[t][t].abs());
        t += 1;
    }
    Ok(diag)
}

fn prime_power_parts(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while n > 1 && p * p <= n {
        if n.is_multiple_of(p) {
            let mut q = 1;
            while n.is_multiple_of(p) {
                n /= p;
                q *= p;
            }
            out.push(q);
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

fn rank_mod_p(m: &[Vec<i64>], p: u64) -> usize {
    let p = p as i64;
    let mut a: Vec<Vec<i64>> = m.iter().map(|r| r.iter().map(|&x| x.rem_euclid(p)).collect()).collect();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for j in 0..cols {
        let Some(pi) = (rank..rows).find(|&i| a[i][j] != 0) else { continue };
        a.swap(rank, pi);
        let inv = mod_inverse(a[rank][j], p);
        for x in a[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..rows {
            if i != rank && a[i][j] != 0 {
                let f = a[i][j];
                for k in j..cols {
                    a[i][k] = (a[i][k] - f * a[rank][k]).rem_euclid(p);
                }
            }
        }
        rank += 1;
    }
    rank
}

fn mod_inverse(a: i64, p: i64) -> i64 {
    let (mut t, mut nt, mut r, mut nr) = (0i64, 1i64, p, a.rem_euclid(p));
    while nr != 0 {
        let q = r / nr;
        (t, nt) = (nt, t - q * nt);
        (r, nr) = (nr, r - q * nr);
    }
    t.rem_euclid(p)
}

/// Homology over 𝔽_p as dimensions per bidegree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldHomology {
    pub p: u64,
    pub dims: BTreeMap<(i32, i32), usize>,
}

/// Coefficients for dimension counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coefficients {
    Z,
    Q,
    Fp(u64),
}

impl FromStr for Coefficients {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Z" | "z" => Ok(Coefficients::Z),
            "Q" | "q" => Ok(Coefficients::Q),
            "F2" | "f2" => Ok(Coefficients::Fp(2)),
            other => {
                let p = other
                    .strip_prefix("Fp:")
                    .or_else(|| other.strip_prefix("F"))
                    .and_then(|t| t.parse::<u64>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown coefficients {other:?}")))?;
                if !is_prime(p) {
                    return Err(Error::Parse(format!("{p} is not prime")));
                }
                Ok(Coefficients::Fp(p))
            }
        }
    }
}

impl fmt::Display for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficients::Z => write!(f, "Z"),
            Coefficients::Q => write!(f, "Q"),
            Coefficients::Fp(p) => write!(f, "F{p}"),
        }
    }
}

/// Dimensions over a field predicted from integral homology by universal
/// coefficients. With `d` raising `h`, torsion in degree `h + 1` contributes
/// to degree `h`.
pub fn field_dims(h: &HomologyTable, coeff: Coefficients) -> BTreeMap<(i32, i32), usize> {
    let mut out: BTreeMap<(i32, i32), usize> = BTreeMap::new();
    for (&(hd, q), g) in &h.entries {
        let (free, tor) = match coeff {
            Coefficients::Z | Coefficients::Q => (g.rank, 0),
            Coefficients::Fp(p) => (g.rank, g.torsion.iter().filter(|&&t| t % p == 0).count()),
        };
        if free + tor > 0 {
            *out.entry((hd, q)).or_insert(0) += free + tor;
        }
        if tor > 0 {
            *out.entry((hd - 1, q)).or_insert(0) += tor;
        }
    }
    out
}

/// Compares the universal-coefficient prediction with a direct computation.
pub fn universal_coefficients_hold(c: &BigradedComplex, h: &HomologyTable, p: u64) -> Result<bool> {
    Ok(c.reduce_mod(p)?.dims == field_dims(h, Coefficients::Fp(p)))
}

/// Laurent polynomial in one variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LaurentPoly {
    pub coeffs: BTreeMap<i32, i64>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly::default()
    }

    pub fn monomial(e: i32, c: i64) -> Self {
        let mut p = LaurentPoly::zero();
        p.add_term(e, c);
        p
    }

    pub fn from_terms(terms: &[(i32, i64)]) -> Self {
        let mut p = LaurentPoly::zero();
        for &(e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, e: i32, c: i64) {
        let v = self.coeffs.entry(e).or_insert(0);
        *v += c;
        if *v == 0 {
            self.coeffs.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut p = self.clone();
        for (&e, &c) in &other.coeffs {
            p.add_term(e, c);
        }
        p
    }

    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut p = LaurentPoly::zero();
        for (&a, &x) in &self.coeffs {
            for (&b, &y) in &other.coeffs {
                p.add_term(a + b, x * y);
            }
        }
        p
    }

    pub fn scale_exponents(&self, k: i32) -> LaurentPoly {
        LaurentPoly { coeffs: self.coeffs.iter().map(|(&e, &c)| (e * k, c)).collect() }
    }

    pub fn shift(&self, s: i32) -> LaurentPoly {
        LaurentPoly { coeffs: self.coeffs.iter().map(|(&e, &c)| (e + s, c)).collect() }
    }

    pub fn eval_sign(&self) -> i64 {
        self.coeffs.values().sum()
    }

    /// Exact division by `q + q^{-1}`; `None` when it does not divide.
    pub fn div_q_plus_qinv(&self) -> Option<LaurentPoly> {
        let Some(&lo) = self.coeffs.keys().next() else { return Some(LaurentPoly::zero()) };
        let mut rem = self.clone();
        let mut out = LaurentPoly::zero();
        while let Some((&top, &c)) = rem.coeffs.iter().next_back() {
            if top < lo + 2 {
                return None;
            }
            out.add_term(top - 1, c);
            rem.add_term(top, -c);
            rem.add_term(top - 2, -c);
        }
        Some(out)
    }
}

impl Serialize for LaurentPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m: BTreeMap<String, i64> = self.coeffs.iter().map(|(e, c)| (e.to_string(), *c)).collect();
        m.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = BTreeMap::<String, i64>::deserialize(d)?;
        let mut p = LaurentPoly::zero();
        for (e, c) in m {
            let e: i32 = e.parse().map_err(serde::de::Error::custom)?;
            p.add_term(e, c);
        }
        Ok(p)
    }
}

fn fmt_term(f: &mut fmt::Formatter<'_>, first: bool, c: i64, mono: &str) -> fmt::Result {
    let sign = if c < 0 { "-" } else { "+" };
    let mag = c.unsigned_abs();
    let body = match (mag, mono.is_empty()) {
        (_, true) => mag.to_string(),
        (1, false) => mono.to_string(),
        (_, false) => format!("{mag}{mono}"),
    };
    if first {
        write!(f, "{}{body}", if c < 0 { "-" } else { "" })
    } else {
        write!(f, " {sign} {body}")
    }
}

fn power(var: &str, e: i32) -> String {
    match e {
        0 => String::new(),
        1 => var.to_string(),
        _ => format!("{var}^{e}"),
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (&e, &c)) in self.coeffs.iter().rev().enumerate() {
            fmt_term(f, k == 0, c, &power("q", e))?;
        }
        Ok(())
    }
}

/// Laurent polynomial in `t` (homological) and `q`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Poly2 {
    pub coeffs: BTreeMap<(i32, i32), i64>,
}

impl Poly2 {
    pub fn add_term(&mut self, h: i32, q: i32, c: i64) {
        let v = self.coeffs.entry((h, q)).or_insert(0);
        *v += c;
        if *v == 0 {
            self.coeffs.remove(&(h, q));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `t^h` as a polynomial in `q`.
    pub fn slice(&self, h: i32) -> LaurentPoly {
        let mut p = LaurentPoly::zero();
        for (&(hh, q), &c) in &self.coeffs {
            if hh == h {
                p.add_term(q, c);
            }
        }
        p
    }

    pub fn degrees(&self) -> BTreeSet<i32> {
        self.coeffs.keys().map(|&(h, _)| h).collect()
    }

    /// Multiplies by a polynomial in `q`.
    pub fn mul_q(&self, p: &LaurentPoly) -> Poly2 {
        let mut out = Poly2::default();
        for (&(h, q), &c) in &self.coeffs {
            for (&e, &d) in &p.coeffs {
                out.add_term(h, q + e, c * d);
            }
        }
        out
    }
}

impl Serialize for Poly2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<(i32, i32, i64)> = self.coeffs.iter().map(|(&(h, q), &c)| (h, q, c)).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poly2 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<(i32, i32, i64)>::deserialize(d)?;
        let mut p = Poly2::default();
        for (h, q, c) in rows {
            p.add_term(h, q, c);
        }
        Ok(p)
    }
}

impl fmt::Display for Poly2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (&(h, q), &c)) in self.coeffs.iter().enumerate() {
            let mono = format!("{}{}", power("t", h), power("q", q));
            fmt_term(f, k == 0, c, &mono)?;
        }
        Ok(())
    }
}

/// Dimension counts over ℚ or 𝔽_p (for `Z` the free ranks are used).
pub fn poincare(h: &HomologyTable, coeff: Coefficients) -> Poly2 {
    let mut p = Poly2::default();
    for ((hd, q), n) in field_dims(h, coeff) {
        p.add_term(hd, q, n as i64);
    }
    p
}

pub fn euler_characteristic(h: &HomologyTable) -> LaurentPoly {
    let mut p = LaurentPoly::zero();
    for (&(hd, q), g) in &h.entries {
        p.add_term(q, if hd % 2 == 0 { g.rank as i64 } else { -(g.rank as i64) });
    }
    p
}

/// Eliminates and then computes integral homology.
pub fn homology(c: &BigradedComplex) -> Result<HomologyTable> {
    smith_homology(&gaussian_eliminate(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn complex(groups: &[(i32, Vec<i32>)], d: &[(i32, Vec<Vec<i64>>)]) -> BigradedComplex {
        let groups = groups.iter().cloned().collect();
        let d = d.iter().map(|(h, m)| (*h, SparseMatrix::from_dense(m))).collect();
        BigradedComplex::new(groups, d).unwrap()
    }

    #[test]
    fn single_generator() {
        let c = complex(&[(0, vec![0])], &[]);
        let h = smith_homology(&c).unwrap();
        assert_eq!(h.get(0, 0), HomologyGroup { rank: 1, torsion: vec![] });
    }

    #[test]
    fn multiplication_by_two() {
        let c = complex(&[(0, vec![0]), (1, vec![0])], &[(0, vec![vec![2]])]);
        let h = smith_homology(&c).unwrap();
        assert_eq!(h.get(0, 0), HomologyGroup::default());
        assert_eq!(h.get(1, 0), HomologyGroup { rank: 0, torsion: vec![2] });
        let f = c.reduce_mod(2).unwrap();
        assert_eq!(f.dims.get(&(0, 0)), Some(&1));
        assert_eq!(f.dims.get(&(1, 0)), Some(&1));
        assert!(universal_coefficients_hold(&c, &h, 2).unwrap());
        assert!(universal_coefficients_hold(&c, &h, 3).unwrap());
    }

    #[test]
    fn identity_block_cancels() {
        let c = complex(
            &[(0, vec![1, 1, 3]), (1, vec![1, 1])],
            &[(0, vec![vec![1, 0, 0], vec![0, -1, 0]])],
        );
        let r = gaussian_eliminate(&c);
        assert_eq!(r.rank(0), 1);
        assert_eq!(r.rank(1), 0);
        assert_eq!(r.groups[&0], vec![3]);
    }

    #[test]
    fn zero_differential_is_untouched() {
        let c = complex(&[(0, vec![1, -1]), (1, vec![1])], &[]);
        assert_eq!(gaussian_eliminate(&c), c);
    }

    #[test]
    fn snf_examples() {
        assert_eq!(smith_diagonal(&[vec![2, 4], vec![6, 8]]).unwrap(), vec![2, 4]);
        assert_eq!(smith_diagonal(&[vec![2, 0], vec![0, 3]]).unwrap(), vec![1, 6]);
        assert_eq!(smith_diagonal(&[vec![0, 0]]).unwrap(), Vec::<i128>::new());
        assert_eq!(prime_power_parts(12), vec![4, 3]);
    }

    #[test]
    fn d_squared_detected() {
        let c = complex(
            &[(0, vec![0]), (1, vec![0]), (2, vec![0])],
            &[(0, vec![vec![1]]), (1, vec![vec![1]])],
        );
        assert_eq!(c.check_d_squared(), Err(Error::DSquaredNonzero(0)));
    }

    #[test]
    fn q_degree_must_be_preserved() {
        let groups = [(0, vec![0]), (1, vec![2])].into_iter().collect();
        let d = [(0, SparseMatrix::from_dense(&[vec![1]]))].into_iter().collect();
        assert!(BigradedComplex::new(groups, d).is_err());
    }

    #[test]
    fn polynomials() {
        let unknot = LaurentPoly::from_terms(&[(1, 1), (-1, 1)]);
        assert_eq!(unknot.to_string(), "q + q^-1");
        assert_eq!(unknot.div_q_plus_qinv(), Some(LaurentPoly::monomial(0, 1)));
        assert_eq!(LaurentPoly::monomial(0, 1).div_q_plus_qinv(), None);
        let sq = unknot.mul(&unknot);
        assert_eq!(sq.div_q_plus_qinv(), Some(unknot.clone()));
        let mut p = Poly2::default();
        p.add_term(0, -1, 1);
        p.add_term(-2, -5, 1);
        assert_eq!(p.to_string(), "t^-2q^-5 + q^-1");
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Poly2>(&json).unwrap(), p);
        assert_eq!(poincare(&HomologyTable::default(), Coefficients::Q), Poly2::default());
    }

    #[test]
    fn coefficient_parsing() {
        assert_eq!("Z".parse::<Coefficients>().unwrap(), Coefficients::Z);
        assert_eq!("F2".parse::<Coefficients>().unwrap(), Coefficients::Fp(2));
        assert_eq!("Fp:7".parse::<Coefficients>().unwrap(), Coefficients::Fp(7));
        assert!("Fp:8".parse::<Coefficients>().is_err());
        assert!("R".parse::<Coefficients>().is_err());
    }

    #[test]
    fn table_json_round_trip() {
        let mut t = HomologyTable::default();
        t.entries.insert((0, 1), HomologyGroup { rank: 1, torsion: vec![] });
        t.entries.insert((-2, -7), HomologyGroup { rank: 0, torsion: vec![2] });
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<HomologyTable>(&s).unwrap(), t);
    }

    /// Random complex: elementary pieces `Z --k--> Z` and free classes,
    /// conjugated by unimodular changes of basis.
    fn random_complex() -> impl Strategy<Value = BigradedComplex> {
        let piece = (0i32..3, -2i32..3, 0i64..4);
        (prop::collection::vec(piece, 1..8), prop::collection::vec((0usize..64, 0usize..64, -2i64..3), 0..12))
            .prop_map(|(pieces, ops)| {
                let mut groups: BTreeMap<i32, Vec<i32>> = (0..4).map(|h| (h, Vec::new())).collect();
                let mut entries: Vec<(i32, usize, usize, i64)> = Vec::new();
                for (h, q, k) in pieces {
                    let j = groups[&h].len();
                    groups.get_mut(&h).unwrap().push(q);
                    if k > 0 {
                        let i = groups[&(h + 1)].len();
                        groups.get_mut(&(h + 1)).unwrap().push(q);
                        entries.push((h, i, j, k));
                    }
                }
                let mut dense: BTreeMap<i32, Vec<Vec<i64>>> = (0..3)
                    .map(|h| (h, vec![vec![0; groups[&h].len()]; groups[&(h + 1)].len()]))
                    .collect();
                for (h, i, j, k) in entries {
                    dense.get_mut(&h).unwrap()[i][j] = k;
                }
                // Basis change in degree 1: e_a += c e_b within one q-degree.
                for (a, b, c) in ops {
                    let n = groups[&1].len();
                    if n < 2 {
                        break;
                    }
                    let (a, b) = (a % n, b % n);
                    if a == b || groups[&1][a] != groups[&1][b] {
                        continue;
                    }
                    // New basis e'_a = e_a + c e_b: columns of d_0 rewrite
                    // rows (row b -= c row a); d_1 gets column a += c col b.
                    let d0 = dense.get_mut(&0).unwrap();
                    for j in 0..d0.first().map_or(0, |r| r.len()) {
                        let v = d0[a][j];
                        d0[b][j] -= c * v;
                    }
                    let d1 = dense.get_mut(&1).unwrap();
                    for row in d1.iter_mut() {
                        let v = row[b];
                        row[a] += c * v;
                    }
                }
                let d = dense
                    .into_iter()
                    .filter(|(_, m)| !m.is_empty() && !m[0].is_empty())
                    .map(|(h, m)| (h, SparseMatrix::from_dense(&m)))
                    .collect();
                BigradedComplex::new(groups, d).unwrap()
            })
    }

    proptest! {
        #[test]
        fn elimination_preserves_homology(c in random_complex()) {
            prop_assert!(c.check_d_squared().is_ok());
            let before = smith_homology(&c).unwrap();
            let reduced = gaussian_eliminate(&c);
            prop_assert!(reduced.total_rank() <= c.total_rank());
            prop_assert!(reduced.check_d_squared().is_ok());
            prop_assert_eq!(smith_homology(&reduced).unwrap(), before.clone());
            prop_assert_eq!(reduced.euler_from_chains(), c.euler_from_chains());
            prop_assert_eq!(euler_characteristic(&before), c.euler_from_chains());
            for p in [2, 3, 5] {
                prop_assert!(universal_coefficients_hold(&c, &before, p).unwrap());
            }
        }
    }
}

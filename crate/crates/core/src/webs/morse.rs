//! Upward Morse embeddings of planar diagrams.
//!
//! A sweep turns a PD code into a sequence of cups, caps and crossings acting
//! on a row of strands. Strand positions count strands only, left to right.
//! Every crossing is drawn with two strands entering from below; its local
//! type records whether the strand from the bottom left passes over.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Builder, CrossingSite, FFormWeb, PdCode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MorseEvent {
    /// New pair of strands inserted before position `p`.
    Cup(usize),
    /// Strands `p` and `p + 1` close up.
    Cap(usize),
    /// Strands `p` and `p + 1` cross. `sign` is the crossing sign of the
    /// oriented link; `over_left` says the strand from the bottom left is on
    /// top.
    Cross { pos: usize, sign: i8, over_left: bool },
}

/// Search nodes allowed before giving up.
const BUDGET: usize = 2_000_000;

struct Sweep<'a> {
    ccw: Vec<[u32; 4]>,
    signs: Vec<i8>,
    ends: &'a BTreeMap<u32, [usize; 2]>,
    budget: usize,
}

#[derive(Clone)]
struct State {
    front: Vec<u32>,
    done: Vec<bool>,
    events: Vec<MorseEvent>,
}

impl State {
    fn closed(&self, ends: &BTreeMap<u32, [usize; 2]>, e: u32) -> bool {
        ends[&e].iter().all(|&x| self.done[x])
    }

    fn cup(&mut self, p: usize, e: u32) {
        self.front.splice(p..p, [e, e]);
        self.events.push(MorseEvent::Cup(p));
    }
}

#[derive(Clone, Copy)]
enum Move {
    Direct { x: usize, j: usize, p: usize },
    /// Cup the bottom-right edge in just right of `p`.
    CupRight { x: usize, j: usize, p: usize },
    /// Cup the bottom-left edge in just left of `p`.
    CupLeft { x: usize, j: usize, p: usize },
    /// Start a new piece of the diagram at the right end.
    Fresh { x: usize, j: usize },
}

impl Sweep<'_> {
    fn fresh(&self, st: &State, e: u32) -> bool {
        !st.front.contains(&e) && self.ends[&e].iter().all(|&x| !st.done[x])
    }

    fn moves(&self, st: &State) -> Vec<Move> {
        let mut direct = Vec::new();
        let mut assisted = Vec::new();
        let mut fresh = Vec::new();
        for x in (0..self.ccw.len()).filter(|&x| !st.done[x]) {
            let c = self.ccw[x];
            for j in 0..4 {
                let (bl, br) = (c[j], c[(j + 1) % 4]);
                for p in 0..st.front.len() {
                    if st.front[p] == bl {
                        if st.front.get(p + 1) == Some(&br) {
                            direct.push(Move::Direct { x, j, p });
                        } else if bl != br && self.fresh(st, br) {
                            assisted.push(Move::CupRight { x, j, p });
                        }
                    }
                    if st.front[p] == br && bl != br && self.fresh(st, bl) {
                        assisted.push(Move::CupLeft { x, j, p });
                    }
                }
                if self.fresh(st, bl) && self.fresh(st, br) {
                    fresh.push(Move::Fresh { x, j });
                }
            }
        }
        if !direct.is_empty() || !assisted.is_empty() {
            direct.extend(assisted);
            direct
        } else {
            fresh
        }
    }

    fn cross(&self, st: &mut State, x: usize, j: usize, p: usize) {
        let c = self.ccw[x];
        st.front.splice(p..p + 2, [c[(j + 3) % 4], c[(j + 2) % 4]]);
        st.done[x] = true;
        // Slots 1 and 3 of a crossing belong to the over strand.
        st.events.push(MorseEvent::Cross { pos: p, sign: self.signs[x], over_left: j % 2 == 1 });
    }

    fn apply(&self, st: &mut State, m: Move) {
        match m {
            Move::Direct { x, j, p } => self.cross(st, x, j, p),
            Move::CupRight { x, j, p } => {
                st.cup(p + 1, self.ccw[x][(j + 1) % 4]);
                self.cross(st, x, j, p);
            }
            Move::CupLeft { x, j, p } => {
                st.cup(p, self.ccw[x][j]);
                self.cross(st, x, j, p + 1);
            }
            Move::Fresh { x, j } => {
                let c = self.ccw[x];
                let n = st.front.len();
                if c[j] == c[(j + 1) % 4] {
                    st.cup(n, c[j]);
                    self.cross(st, x, j, n);
                } else {
                    st.cup(n, c[j]);
                    st.cup(n + 2, c[(j + 1) % 4]);
                    self.cross(st, x, j, n + 1);
                }
            }
        }
    }

    fn close_caps(&self, st: &mut State) {
        while let Some(p) = (0..st.front.len().saturating_sub(1))
            .find(|&p| st.front[p] == st.front[p + 1] && st.closed(self.ends, st.front[p]))
        {
            st.front.drain(p..p + 2);
            st.events.push(MorseEvent::Cap(p));
        }
    }

    fn search(&mut self, mut st: State) -> Option<Vec<MorseEvent>> {
        if self.budget == 0 {
            return None;
        }
        self.budget -= 1;
        self.close_caps(&mut st);
        if st.done.iter().all(|&d| d) {
            return st.front.is_empty().then_some(st.events);
        }
        for m in self.moves(&st) {
            let mut next = st.clone();
            self.apply(&mut next, m);
            if let Some(ev) = self.search(next) {
                return Some(ev);
            }
        }
        None
    }
}

/// Finds an upward Morse embedding of the diagram.
pub fn sweep(pd: &PdCode) -> Result<Vec<MorseEvent>> {
    pd.validate()?;
    let ccw: Vec<[u32; 4]> = pd.crossings.iter().map(|c| c.ccw()).collect();
    let mut ends: BTreeMap<u32, [usize; 2]> = BTreeMap::new();
    let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
    for (x, c) in ccw.iter().enumerate() {
        for &e in c {
            match seen.remove(&e) {
                Some(y) => {
                    ends.insert(e, [y, x]);
                }
                None => {
                    seen.insert(e, x);
                }
            }
        }
    }
    let mut sw = Sweep {
        ccw,
        signs: pd.crossings.iter().map(|c| c.sign).collect(),
        ends: &ends,
        budget: BUDGET,
    };
    let start = State { front: Vec::new(), done: vec![false; pd.crossings.len()], events: Vec::new() };
    let mut events = sw
        .search(start)
        .ok_or_else(|| Error::InvalidDiagram("no upward Morse embedding found".into()))?;
    for _ in 0..pd.free_loops {
        events.extend([MorseEvent::Cup(0), MorseEvent::Cap(0)]);
    }
    if events.is_empty() {
        return Err(Error::InvalidDiagram("empty diagram".into()));
    }
    Ok(events)
}

impl Builder {
    /// Columns holding a single strand, left to right.
    fn strands(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&c| self.labels[c] == 1).collect()
    }

    /// Empties column `col` by pushing its contents to the right.
    fn make_room(&mut self, col: usize) {
        let l = self.label(col);
        if l > 0 {
            self.make_room(col + 1);
            self.rung(col, l);
        }
    }

    /// Moves every 2 between strands `p` and `p + 1` out to the right.
    fn clear_between(&mut self, p: usize) {
        loop {
            let cols = self.strands();
            let (a, b) = (cols[p], cols[p + 1]);
            let Some(z) = (a + 1..b).rev().find(|&z| self.label(z) == 2) else { break };
            self.rung(z, if z + 1 == b { 1 } else { 2 });
        }
    }

    fn morse_cup(&mut self, p: usize) {
        let cols = self.strands();
        let right = cols.get(p).copied().unwrap_or(self.labels.len());
        let mut z = (0..right).rev().find(|&z| self.label(z) == 2).expect("a 2 left of every cup");
        if let Some(&l) = p.checked_sub(1).and_then(|q| cols.get(q)) {
            // Only 0s and 1s lie between z and the gap.
            while z < l {
                self.rung(z, if self.label(z + 1) == 1 { 1 } else { 2 });
                z += 1;
            }
        }
        self.make_room(z + 1);
        self.rung(z, 1);
    }

    fn morse_cap(&mut self, p: usize) {
        self.clear_between(p);
        let cols = self.strands();
        self.jog(cols[p], cols[p + 1] - 1);
        self.rung(cols[p + 1] - 1, 1);
    }

    fn morse_cross(&mut self, p: usize, sign: i8, fform_sign: i8) {
        self.clear_between(p);
        let cols = self.strands();
        self.jog(cols[p], cols[p + 1] - 1);
        self.make_room(cols[p + 1] + 1);
        self.crossing(cols[p + 1] - 1, sign, fform_sign);
    }
}

/// Builds the F-form web of a Morse embedding. All 2s start at the left and
/// end at the right.
pub fn compile(events: &[MorseEvent]) -> (FFormWeb, Vec<CrossingSite>) {
    let k = events.iter().filter(|e| matches!(e, MorseEvent::Cup(_))).count();
    let mut w = Builder { labels: vec![2; k], slices: Vec::new(), sites: Vec::new() };
    for &e in events {
        match e {
            MorseEvent::Cup(p) => w.morse_cup(p),
            MorseEvent::Cap(p) => w.morse_cap(p),
            MorseEvent::Cross { pos, sign, over_left } => {
                w.morse_cross(pos, sign, if over_left { 1 } else { -1 })
            }
        }
    }
    let width = w.labels.len();
    while let Some(z) = (0..width - 1).find(|&z| w.label(z) == 2 && w.label(z + 1) == 0) {
        w.rung(z, 2);
    }
    let mut bottom = vec![0u8; width];
    bottom[..k].fill(2);
    (FFormWeb { bottom, slices: w.slices, top: w.labels }, w.sites)
}

//! Planar diagram codes.
//!
//! Each crossing lists the incoming and outgoing edge of its over and under
//! strand together with its sign. Going counterclockwise from the incoming
//! under edge, a positive crossing reads `under_in, over_out, under_out,
//! over_in` and a negative one `under_in, over_in, under_out, over_out`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdCrossing {
    pub over: [u32; 2],
    pub under: [u32; 2],
    pub sign: i8,
}

impl PdCrossing {
    /// Edges counterclockwise starting from the incoming under edge.
    pub fn ccw(&self) -> [u32; 4] {
        if self.sign > 0 {
            [self.under[0], self.over[1], self.under[1], self.over[0]]
        } else {
            [self.under[0], self.over[0], self.under[1], self.over[1]]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdCode {
    pub crossings: Vec<PdCrossing>,
    /// Components without crossings, which no crossing record can show.
    #[serde(default)]
    pub free_loops: usize,
}

impl PdCode {
    pub fn new(crossings: Vec<PdCrossing>) -> Self {
        PdCode { crossings, free_loops: 0 }
    }

    /// Reads a JSON list of crossing records, or an object with a
    /// `crossings` list.
    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("PD code: {e}")))?;
        let pd = if v.is_array() {
            let crossings: Vec<PdCrossing> =
                serde_json::from_value(v).map_err(|e| Error::Parse(format!("PD code: {e}")))?;
            PdCode::new(crossings)
        } else {
            serde_json::from_value(v).map_err(|e| Error::Parse(format!("PD code: {e}")))?
        };
        pd.validate()?;
        Ok(pd)
    }

    /// Renumbers edges `1, 2, …` in order of first appearance.
    pub fn compact(&self) -> PdCode {
        let mut map = BTreeMap::new();
        let mut next = 1;
        let mut get = |e: u32| {
            *map.entry(e).or_insert_with(|| {
                next += 1;
                next - 1
            })
        };
        let crossings = self
            .crossings
            .iter()
            .map(|c| {
                let under = [get(c.under[0]), get(c.under[1])];
                let over = [get(c.over[0]), get(c.over[1])];
                PdCrossing { over, under, sign: c.sign }
            })
            .collect();
        PdCode { crossings, free_loops: self.free_loops }
    }

    pub fn writhe(&self) -> i32 {
        self.crossings.iter().map(|c| c.sign as i32).sum()
    }

    /// Each edge as `(crossing, slot)` at its tail and head.
    fn endpoints(&self) -> Result<BTreeMap<u32, [(usize, usize); 2]>> {
        let mut tail: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
        let mut head: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
        for (i, c) in self.crossings.iter().enumerate() {
            let (o_in, o_out) = if c.sign > 0 { (3, 1) } else { (1, 3) };
            // Incoming edges end here, outgoing ones start here.
            let ins = [(c.under[0], 0), (c.over[0], o_in)];
            let outs = [(c.under[1], 2), (c.over[1], o_out)];
            for (e, s) in ins {
                if head.insert(e, (i, s)).is_some() {
                    return Err(Error::InvalidDiagram(format!("edge {e} enters twice")));
                }
            }
            for (e, s) in outs {
                if tail.insert(e, (i, s)).is_some() {
                    return Err(Error::InvalidDiagram(format!("edge {e} leaves twice")));
                }
            }
        }
        if tail.len() != head.len() || tail.keys().ne(head.keys()) {
            return Err(Error::InvalidDiagram("every edge must enter and leave once".into()));
        }
        Ok(tail.into_iter().map(|(e, t)| (e, [t, head[&e]])).collect())
    }

    /// Checks signs, edge incidences and planarity (Euler characteristic of
    /// the induced cell decomposition of the sphere).
    pub fn validate(&self) -> Result<()> {
        for c in &self.crossings {
            if c.sign != 1 && c.sign != -1 {
                return Err(Error::InvalidDiagram(format!("crossing sign {} is not ±1", c.sign)));
            }
        }
        let ends = self.endpoints()?;
        let n = self.crossings.len();
        if n == 0 {
            return Ok(());
        }
        // Half-edge (crossing, slot) -> the other end of its edge.
        let mut opposite = BTreeMap::new();
        for [t, h] in ends.values() {
            opposite.insert(*t, *h);
            opposite.insert(*h, *t);
        }
        let mut seen = BTreeMap::new();
        let mut faces = 0;
        for start in opposite.keys() {
            if seen.contains_key(start) {
                continue;
            }
            faces += 1;
            let mut x = *start;
            while seen.insert(x, ()).is_none() {
                let (c, s) = opposite[&x];
                x = (c, (s + 3) % 4);
            }
        }
        let parts = self.diagram_components();
        let expected = n + 2 * parts;
        if faces != expected {
            return Err(Error::InvalidDiagram(format!(
                "non-planar PD code: {faces} faces where {expected} are needed"
            )));
        }
        Ok(())
    }

    /// Connected components of the underlying 4-valent graph.
    fn diagram_components(&self) -> usize {
        let n = self.crossings.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut at: BTreeMap<u32, usize> = BTreeMap::new();
        for (i, c) in self.crossings.iter().enumerate() {
            for e in c.ccw() {
                if let Some(&j) = at.get(&e) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                } else {
                    at.insert(e, i);
                }
            }
        }
        (0..n).filter(|&i| find(&mut parent, i) == i).count()
    }

    /// Link components, counting free loops.
    pub fn components(&self) -> usize {
        let mut next: BTreeMap<u32, u32> = BTreeMap::new();
        for c in &self.crossings {
            next.insert(c.over[0], c.over[1]);
            next.insert(c.under[0], c.under[1]);
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut count = self.free_loops;
        for &e in next.keys() {
            if seen.contains(&e) {
                continue;
            }
            count += 1;
            let mut x = e;
            while seen.insert(x) {
                x = next[&x];
            }
        }
        count
    }

    pub fn mirror(&self) -> PdCode {
        let crossings = self
            .crossings
            .iter()
            .map(|c| PdCrossing { over: c.under, under: c.over, sign: -c.sign })
            .collect();
        PdCode { crossings, free_loops: self.free_loops }
    }
}

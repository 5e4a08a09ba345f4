//! Classical invariants used as independent checks: the Jones polynomial from
//! a Kauffman state sum, and even Khovanov homology on the same cube.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::{classify_edge, frobenius_map, FrobeniusSpec};
use crate::error::{Error, Result};
use crate::exterior::ScalarConfig;
use crate::homology::{
    field_dims, homology, universal_coefficients_hold, BigradedComplex, Coefficients, HomologyTable,
    LaurentPoly, SparseMatrix,
};
use crate::webs::{cube_of, OrientedLinkDiagram, PdCode, ResolutionCube};

/// Unnormalized Jones polynomial in `q`, with the unknot at `q + q^{-1}`.
pub type JonesPoly = LaurentPoly;

/// Kauffman bracket in the variable `A`.
pub fn kauffman_bracket(pd: &PdCode) -> LaurentPoly {
    let n = pd.crossings.len();
    if n == 0 {
        // Each free loop beyond the first contributes −A² − A⁻².
        let mut p = LaurentPoly::monomial(0, 1);
        let loop_value = LaurentPoly::from_terms(&[(2, -1), (-2, -1)]);
        for _ in 1..pd.free_loops.max(1) {
            p = p.mul(&loop_value);
        }
        return p;
    }
    let pd = pd.compact();
    let edges = pd.crossings.iter().flat_map(|c| c.ccw()).max().unwrap_or(0) as usize + 1;
    let counts: BTreeMap<(i32, usize), i64> = (0..1u64 << n)
        .into_par_iter()
        .map(|state| {
            let mut parent: Vec<usize> = (0..edges).collect();
            fn find(p: &mut [usize], mut x: usize) -> usize {
                while p[x] != x {
                    p[x] = p[p[x]];
                    x = p[x];
                }
                x
            }
            let mut join = |a: u32, b: u32| {
                let (x, y) = (find(&mut parent, a as usize), find(&mut parent, b as usize));
                parent[x] = y;
            };
            let mut a_count = 0i32;
            for (k, c) in pd.crossings.iter().enumerate() {
                let [i, j, l, m] = c.ccw();
                if state >> k & 1 == 0 {
                    a_count += 1;
                    join(i, j);
                    join(l, m);
                } else {
                    join(j, l);
                    join(m, i);
                }
            }
            let used: std::collections::BTreeSet<usize> =
                pd.crossings.iter().flat_map(|c| c.ccw()).map(|e| e as usize).collect();
            let loops = used.iter().filter(|&&e| find(&mut parent, e) == e).count() + pd.free_loops;
            (a_count - (n as i32 - a_count), loops)
        })
        .fold(BTreeMap::new, |mut acc, key| {
            *acc.entry(key).or_insert(0) += 1;
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    let loop_value = LaurentPoly::from_terms(&[(2, -1), (-2, -1)]);
    let mut total = LaurentPoly::zero();
    for ((e, loops), c) in counts {
        let mut term = LaurentPoly::monomial(e, c);
        for _ in 1..loops {
            term = term.mul(&loop_value);
        }
        total = total.add(&term);
    }
    total
}

/// State-sum Jones polynomial: `(q + q^{-1})·(−A³)^{−w}⟨D⟩` at `A² = −q^{-1}`.
pub fn kauffman_jones(d: &OrientedLinkDiagram) -> JonesPoly {
    let pd = d.to_pd();
    let bracket = kauffman_bracket(&pd);
    let w = pd.writhe();
    let sign = if w % 2 == 0 { 1 } else { -1 };
    let f = bracket.mul(&LaurentPoly::monomial(-3 * w, sign));
    let mut q_poly = LaurentPoly::zero();
    for (&e, &c) in &f.coeffs {
        debug_assert!(e % 2 == 0);
        // A^e = (A²)^{e/2} = (−1)^{e/2} q^{−e/2}
        let k = e / 2;
        q_poly.add_term(-k, if k % 2 == 0 { c } else { -c });
    }
    q_poly.mul(&LaurentPoly::from_terms(&[(1, 1), (-1, 1)]))
}

/// Unsigned edge matrix of the commutative algebra, `m(x⊗x) = 0`,
/// `Δ(1) = 1⊗x + x⊗1`, `Δ(x) = x⊗x`.
pub fn even_edge_matrix(spec: &FrobeniusSpec) -> Result<SparseMatrix> {
    let mut cols = Vec::with_capacity(1 << spec.n_in);
    for mask in 0..1u64 << spec.n_in {
        let mut col = BTreeMap::new();
        let mut image = 0u64;
        let mut collide = false;
        for s in (0..spec.n_in).filter(|s| mask >> s & 1 == 1) {
            let b = 1 << spec.images[s];
            collide |= image & b != 0;
            image |= b;
        }
        match spec.case {
            c if c.is_merge() => {
                if !collide {
                    col.insert(image as usize, 1);
                }
            }
            c if c.is_split() => {
                for g in [spec.pair.0, spec.pair.1] {
                    if image >> g & 1 == 0 {
                        col.insert((image | 1 << g) as usize, 1);
                    }
                }
            }
            other => return Err(Error::EdgeAnomaly(format!("{other:?} in a closed cube"))),
        }
        cols.push(col);
    }
    Ok(SparseMatrix::from_columns(1 << spec.n_out, cols))
}

/// The commutative Frobenius algebra `ℤ[x]/x²` on the same cube, with the
/// usual sign `(−1)^{#1s before c}` on each edge.
pub fn even_complex(cube: &ResolutionCube) -> Result<BigradedComplex> {
    let mut groups: BTreeMap<i32, Vec<i32>> = BTreeMap::new();
    let mut offsets = vec![0; cube.vertices.len()];
    for v in &cube.vertices {
        let g = groups.entry(v.h).or_default();
        offsets[v.bits as usize] = g.len();
        let k = v.circles.len();
        g.extend((0..1u64 << k).map(|m| v.q_shift + k as i32 - 2 * m.count_ones() as i32));
    }
    let maps: Result<Vec<(u64, u64, SparseMatrix)>> = cube
        .edges()
        .into_par_iter()
        .map(|(v, c)| {
            let class = classify_edge(cube, v, c)?;
            let spec = &class.forward;
            let sign: i64 = if (v & ((1 << c) - 1)).count_ones() % 2 == 0 { 1 } else { -1 };
            let m = even_edge_matrix(spec)?;
            let cols = m.cols.into_iter().map(|c| c.into_iter().map(|(i, x)| (i, sign * x)).collect()).collect();
            Ok((v, v | 1 << c, SparseMatrix { rows: m.rows, cols }))
        })
        .collect();
    let mut cols: BTreeMap<i32, Vec<BTreeMap<usize, i64>>> =
        groups.iter().map(|(&h, g)| (h, vec![BTreeMap::new(); g.len()])).collect();
    for (v, w, m) in maps? {
        let h = cube.vertices[v as usize].h;
        let (so, to) = (offsets[v as usize], offsets[w as usize]);
        let block = cols.get_mut(&h).unwrap();
        for (j, col) in m.cols.iter().enumerate() {
            for &(i, x) in col {
                *block[so + j].entry(to + i).or_insert(0) += x;
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
    let cx = BigradedComplex::new(groups, d)?;
    cx.check_d_squared()?;
    Ok(cx)
}

pub fn even_khovanov(d: &OrientedLinkDiagram) -> Result<HomologyTable> {
    homology(&even_complex(&cube_of(d)?)?)
}

/// With every `t = 1`, each edge map of the main complex agrees with the
/// commutative one modulo 2.
pub fn edge_maps_agree_mod2(cube: &ResolutionCube) -> Result<bool> {
    let t = ScalarConfig::new(cube.web.columns().saturating_sub(1).max(1));
    let reduce = |m: &SparseMatrix| -> Vec<Vec<usize>> {
        m.cols.iter().map(|c| c.iter().filter(|e| e.1 % 2 != 0).map(|e| e.0).collect()).collect()
    };
    for (v, c) in cube.edges() {
        let class = classify_edge(cube, v, c)?;
        let (main, _) = frobenius_map(&class.forward, &t)?;
        if reduce(&main) != reduce(&even_edge_matrix(&class.forward)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffRow {
    pub h: i32,
    pub q: i32,
    pub main: String,
    pub even: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareReport {
    pub equal_z: bool,
    pub equal_q: bool,
    pub equal_f2: bool,
    /// Bidegrees where the integral groups differ.
    pub integral_diffs: Vec<DiffRow>,
    /// Universal coefficients hold for both complexes at p = 2 and 3.
    pub uct_consistent: bool,
}

fn describe(t: &HomologyTable, h: i32, q: i32) -> String {
    let g = t.get(h, q);
    let mut parts = Vec::new();
    if g.rank > 0 {
        parts.push(if g.rank == 1 { "Z".to_string() } else { format!("Z^{}", g.rank) });
    }
    parts.extend(g.torsion.iter().map(|x| format!("Z/{x}")));
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}

pub fn compare(main: &HomologyTable, even: &HomologyTable) -> CompareReport {
    let mut keys: Vec<(i32, i32)> = main.entries.keys().chain(even.entries.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let integral_diffs = keys
        .into_iter()
        .filter(|&(h, q)| main.get(h, q) != even.get(h, q))
        .map(|(h, q)| DiffRow { h, q, main: describe(main, h, q), even: describe(even, h, q) })
        .collect::<Vec<_>>();
    CompareReport {
        equal_z: integral_diffs.is_empty(),
        equal_q: field_dims(main, Coefficients::Q) == field_dims(even, Coefficients::Q),
        equal_f2: field_dims(main, Coefficients::Fp(2)) == field_dims(even, Coefficients::Fp(2)),
        integral_diffs,
        uct_consistent: true,
    }
}

/// Runs both theories on a diagram and cross-checks universal coefficients
/// against direct 𝔽_p computations.
pub fn compare_diagram(d: &OrientedLinkDiagram, t: &ScalarConfig) -> Result<(HomologyTable, HomologyTable, CompareReport)> {
    let cube = cube_of(d)?;
    let main_cx = crate::cube::assemble_complex(&cube, t)?.complex;
    let even_cx = even_complex(&cube)?;
    let main = homology(&main_cx)?;
    let even = homology(&even_cx)?;
    let mut report = compare(&main, &even);
    let mut uct = true;
    for p in [2, 3] {
        uct &= universal_coefficients_hold(&main_cx, &main, p)?;
        uct &= universal_coefficients_hold(&even_cx, &even, p)?;
    }
    report.uct_consistent = uct;
    Ok((main, even, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::euler_characteristic;
    use crate::webs::{Braid, PdCrossing};

    fn diagram(s: &str) -> OrientedLinkDiagram {
        OrientedLinkDiagram::from_braid(Braid::parse(s).unwrap())
    }

    fn poly(terms: &[(i32, i64)]) -> LaurentPoly {
        LaurentPoly::from_terms(terms)
    }

    #[test]
    fn jones_values() {
        assert_eq!(kauffman_jones(&diagram("1:")), poly(&[(1, 1), (-1, 1)]));
        assert_eq!(kauffman_jones(&diagram("2: 1")), poly(&[(1, 1), (-1, 1)]));
        assert_eq!(kauffman_jones(&diagram("2: 1 1 1")), poly(&[(1, 1), (3, 1), (5, 1), (9, -1)]));
        assert_eq!(kauffman_jones(&diagram("2: -1 -1 -1")), poly(&[(-1, 1), (-3, 1), (-5, 1), (-9, -1)]));
        assert_eq!(kauffman_jones(&diagram("3: 1 -2 1 -2")), poly(&[(5, 1), (-5, 1)]));
        assert_eq!(kauffman_jones(&diagram("2: 1 1")), poly(&[(0, 1), (2, 1), (4, 1), (6, 1)]));
        assert_eq!(kauffman_jones(&diagram("2:")), poly(&[(2, 1), (0, 2), (-2, 1)]));
    }

    #[test]
    fn jones_from_pd_kink() {
        let pd = PdCode::new(vec![PdCrossing { over: [1, 2], under: [2, 1], sign: 1 }]);
        let d = OrientedLinkDiagram::from_pd(pd).unwrap();
        assert_eq!(kauffman_jones(&d), poly(&[(1, 1), (-1, 1)]));
    }

    #[test]
    fn even_unknot_and_trefoil() {
        let h = even_khovanov(&diagram("1:")).unwrap();
        assert_eq!(h.get(0, 1).rank, 1);
        assert_eq!(h.get(0, -1).rank, 1);
        let t = even_khovanov(&diagram("2: -1 -1 -1")).unwrap();
        assert_eq!(euler_characteristic(&t), kauffman_jones(&diagram("2: -1 -1 -1")));
        assert!(t.has_torsion());
        assert_eq!(t.get(-2, -7).torsion, vec![2]);
    }

    #[test]
    fn mod_two_agreement_on_edges() {
        for s in ["2: 1 1", "2: -1 -1 -1", "3: 1 -2 1 -2"] {
            let c = cube_of(&diagram(s)).unwrap();
            assert!(edge_maps_agree_mod2(&c).unwrap(), "{s}");
        }
    }

    #[test]
    fn trefoil_comparison() {
        let (_, _, r) = compare_diagram(&diagram("2: -1 -1 -1"), &ScalarConfig::new(1)).unwrap();
        assert!(r.equal_f2);
        assert!(r.uct_consistent);
        assert!(compare(&HomologyTable::default(), &HomologyTable::default()).equal_z);
    }
}

//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL` line and then asserts it.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use superkh::cube::{assemble_complex, assemble_complex_seeded, reduced_split, structure_checks};
use superkh::exterior::ScalarConfig;
use superkh::homology::{homology, poincare, Coefficients, HomologyTable, LaurentPoly};
use superkh::oracles::{compare_diagram, even_complex, kauffman_jones};
use superkh::superdiagram::relations::relation_suite;
use superkh::webs::{cube_of, links, Braid, OrientedLinkDiagram, ResolutionCube};

// Time budgets per criterion.
const RELATIONS_BUDGET: Duration = Duration::from_secs(120);
const UNKNOT_BUDGET: Duration = Duration::from_secs(1);
const REIDEMEISTER_BUDGET: Duration = Duration::from_secs(300);
const TREFOIL_BUDGET: Duration = Duration::from_secs(10);
const TABLE_BUDGET: Duration = Duration::from_secs(300);

// Relation suite bounds.
const RELATION_RANK: usize = 4;
const RELATION_SIZE: usize = 6;

// Sign assignments compared per link.
const SIGN_SAMPLES: usize = 3;
const SEED_ATTEMPTS: u64 = 64;

// The distinctness report covers knots up to this many crossings.
const REPORT_CROSSINGS: usize = 8;

fn diagram(s: &str) -> OrientedLinkDiagram {
    OrientedLinkDiagram::from_braid(Braid::parse(s).unwrap())
}

fn scalars(cube: &ResolutionCube) -> ScalarConfig {
    ScalarConfig::new(cube.web.columns().saturating_sub(1).max(1))
}

fn main_homology(d: &OrientedLinkDiagram) -> HomologyTable {
    let cube = cube_of(d).unwrap();
    homology(&assemble_complex(&cube, &scalars(&cube)).unwrap().complex).unwrap()
}

fn report(n: usize, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    if detail.is_empty() {
        println!("criterion {n}: {status} {name}");
    } else {
        println!("criterion {n}: {status} {name} ({detail})");
    }
}

#[test]
fn criterion_01_relation_suite() {
    let start = Instant::now();
    let r = relation_suite(RELATION_RANK, RELATION_SIZE);
    let elapsed = start.elapsed();
    let failing: Vec<&str> =
        r.summary.iter().filter(|(_, t)| t.failed > 0).map(|(k, _)| k.as_str()).collect();
    let pass = r.all_pass() && elapsed <= RELATIONS_BUDGET;
    let detail = format!("{} instances, failing: [{}], {:.1?}", r.results.len(), failing.join(", "), elapsed);
    report(1, "relation suite", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_02_unknot() {
    let start = Instant::now();
    let h = main_homology(&diagram("1:"));
    let elapsed = start.elapsed();
    let mut expected = HomologyTable::default();
    for q in [1, -1] {
        expected.entries.insert((0, q), superkh::homology::HomologyGroup { rank: 1, torsion: vec![] });
    }
    let pass = h == expected && elapsed <= UNKNOT_BUDGET;
    report(2, "unknot is q + q^-1", pass, &format!("{elapsed:.1?}"));
    assert!(pass, "{h}");
}

/// Pairs of diagrams related by Reidemeister moves and conjugation.
const REIDEMEISTER_PAIRS: [(&str, &str); 20] = [
    // RI, including a kink on the unknot.
    ("1:", "2: 1"),
    ("1:", "2: -1"),
    ("2: 1 1 1", "3: 1 1 1 2"),
    ("2: -1 -1 -1", "3: -1 -1 -1 -2"),
    ("2: -1 -1 -1", "3: -1 -1 -1 2"),
    ("2: 1 1", "3: 1 1 -2"),
    ("1:", "3: 1 2"),
    ("1:", "3: -1 2"),
    // RII.
    ("2: 1 1 1", "2: 1 1 -1 1 1"),
    ("3: 1 -2 1 -2", "3: 1 2 -2 -2 1 -2"),
    ("2:", "2: 1 -1"),
    ("2: -1 -1 -1", "2: -1 1 -1 -1 -1"),
    // RIII.
    ("3: 1 2 1", "3: 2 1 2"),
    ("3: -1 -2 -1", "3: -2 -1 -2"),
    ("3: 1 2 1 2 2", "3: 2 1 2 2 2"),
    ("4: 1 2 1 3", "4: 2 1 2 3"),
    // Conjugation, which is planar isotopy plus RII.
    ("3: 1 -2 1", "3: -2 1 1"),
    ("3: 1 1 -2 1 -2", "3: -2 1 1 -2 1"),
    ("3: 1 2", "3: 2 1"),
    ("3: 1 1 1 2 -1 2", "3: 2 1 1 1 2 -1"),
];

#[test]
fn criterion_03_reidemeister() {
    let start = Instant::now();
    let mut bad = Vec::new();
    for (a, b) in REIDEMEISTER_PAIRS {
        if main_homology(&diagram(a)) != main_homology(&diagram(b)) {
            bad.push(format!("{a} vs {b}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = bad.is_empty() && elapsed <= REIDEMEISTER_BUDGET;
    report(3, "Reidemeister invariance", pass, &format!("{} pairs, differing: {bad:?}, {elapsed:.1?}", REIDEMEISTER_PAIRS.len()));
    assert!(pass);
}

#[test]
fn criterion_04_left_trefoil() {
    let start = Instant::now();
    let h = main_homology(&diagram("2: -1 -1 -1"));
    let elapsed = start.elapsed();
    let slice = |hd: i32| -> Vec<(i32, usize, Vec<u64>)> {
        h.entries.iter().filter(|(k, _)| k.0 == hd).map(|(k, g)| (k.1, g.rank, g.torsion.clone())).collect()
    };
    let pass = slice(0) == vec![(-3, 1, vec![]), (-1, 1, vec![])]
        && slice(-3) == vec![(-9, 1, vec![]), (-7, 1, vec![])]
        && elapsed <= TREFOIL_BUDGET;
    report(4, "left trefoil H_0 and H_-3", pass, &format!("{elapsed:.1?}"));
    assert!(pass, "{h}");
}

#[test]
fn criterion_05_jones() {
    let start = Instant::now();
    let mut bad = Vec::new();
    for e in links::table() {
        let d = OrientedLinkDiagram::from_braid(e.braid());
        let chi = superkh::homology::euler_characteristic(&main_homology(&d));
        if chi != kauffman_jones(&d) {
            bad.push(e.name);
        }
    }
    let elapsed = start.elapsed();
    let pass = bad.is_empty() && elapsed <= TABLE_BUDGET;
    report(5, "Euler characteristic equals Jones", pass, &format!("mismatches: {bad:?}, {elapsed:.1?}"));
    assert!(pass);
}

#[test]
fn criterion_06_reduced_splitting() {
    let start = Instant::now();
    let factor = LaurentPoly::from_terms(&[(1, 1), (-1, 1)]);
    let mut bad = Vec::new();
    for e in links::table() {
        let cube = cube_of(&OrientedLinkDiagram::from_braid(e.braid())).unwrap();
        let cx = assemble_complex(&cube, &scalars(&cube)).unwrap();
        let full = poincare(&homology(&cx.complex).unwrap(), Coefficients::Q);
        let (red_cx, cert) = reduced_split(&cx).unwrap();
        let red = poincare(&homology(&red_cx).unwrap(), Coefficients::Q);
        if !cert.holds() || red.mul_q(&factor) != full {
            bad.push(e.name);
        }
    }
    let elapsed = start.elapsed();
    let pass = bad.is_empty() && elapsed <= TABLE_BUDGET;
    report(6, "P = (q + q^-1) P_red", pass, &format!("failures: {bad:?}, {elapsed:.1?}"));
    assert!(pass);
}

#[test]
fn criterion_07_mod_two() {
    let mut bad = Vec::new();
    for e in links::table() {
        let cube = cube_of(&OrientedLinkDiagram::from_braid(e.braid())).unwrap();
        let main = assemble_complex(&cube, &scalars(&cube)).unwrap().complex.reduce_mod(2).unwrap();
        let even = even_complex(&cube).unwrap().reduce_mod(2).unwrap();
        if main.dims != even.dims {
            bad.push(e.name);
        }
    }
    let pass = bad.is_empty();
    report(7, "agreement with even Khovanov over F2", pass, &format!("mismatches: {bad:?}"));
    assert!(pass);
}

#[test]
fn criterion_08_structure_maps() {
    let names = ["mu_delta", "mu_delta_prime", "delta_squared", "x_delta_identity", "d_commutes_x", "d_commutes_delta"];
    let mut failed: BTreeSet<&str> = BTreeSet::new();
    let mut links_failing = Vec::new();
    for e in links::table() {
        let cube = cube_of(&OrientedLinkDiagram::from_braid(e.braid())).unwrap();
        let t = scalars(&cube);
        let s = structure_checks(&assemble_complex(&cube, &t).unwrap(), &t).unwrap();
        let flags =
            [s.mu_delta, s.mu_delta_prime, s.delta_squared, s.x_delta_identity, s.d_commutes_x, s.d_commutes_delta];
        if !s.all() {
            links_failing.push(e.name);
        }
        for (n, ok) in names.iter().zip(flags) {
            if !ok {
                failed.insert(n);
            }
        }
    }
    let pass = failed.is_empty();
    report(8, "structure-map identities", pass, &format!("failing identities: {failed:?} on {} links", links_failing.len()));
    assert!(pass, "{links_failing:?}");
}

#[test]
fn criterion_09_signs() {
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    for e in links::table() {
        let cube = cube_of(&OrientedLinkDiagram::from_braid(e.braid())).unwrap();
        let t = scalars(&cube);
        let base = assemble_complex_seeded(&cube, &t, 0).unwrap();
        let available = 1u64.checked_shl(base.signs.freedom as u32).unwrap_or(u64::MAX);
        let wanted = (SIGN_SAMPLES as u64).min(available) as usize;
        let mut seen = BTreeSet::new();
        let mut tables = Vec::new();
        for seed in 0..SEED_ATTEMPTS {
            if seen.len() == wanted {
                break;
            }
            let cx = assemble_complex_seeded(&cube, &t, seed).unwrap();
            if seen.insert(cx.signs.signs.clone()) {
                if cx.complex.check_d_squared().is_err() {
                    bad.push(format!("{} seed {seed}: d^2 != 0", e.name));
                }
                tables.push(homology(&cx.complex).unwrap());
            }
        }
        if seen.len() < wanted {
            bad.push(format!("{}: only {} assignments reached", e.name, seen.len()));
        }
        if tables.windows(2).any(|w| w[0] != w[1]) {
            bad.push(format!("{}: homology depends on signs", e.name));
        }
        if wanted < SIGN_SAMPLES {
            notes.push(format!("{} has {} assignment(s)", e.name, available));
        }
    }
    let pass = bad.is_empty();
    report(9, "d^2 = 0 and sign independence", pass, &format!("problems: {bad:?}; {}", notes.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_10_distinctness_report() {
    let mut consistent = true;
    let mut lines = Vec::new();
    for e in links::table().iter().filter(|e| e.knot && e.braid().crossings() <= REPORT_CROSSINGS) {
        let d = OrientedLinkDiagram::from_braid(e.braid());
        let cube = cube_of(&d).unwrap();
        let (_, _, r) = compare_diagram(&d, &scalars(&cube)).unwrap();
        consistent &= r.uct_consistent && r.equal_f2;
        lines.push(format!(
            "  {:<14} Z-equal={} Q-equal={} F2-equal={} differing bidegrees={}",
            e.name,
            r.equal_z,
            r.equal_q,
            r.equal_f2,
            r.integral_diffs.len()
        ));
        for row in &r.integral_diffs {
            lines.push(format!("    h={} q={}: {} vs even {}", row.h, row.q, row.main, row.even));
        }
    }
    println!("distinctness report:\n{}", lines.join("\n"));
    report(10, "distinctness report", consistent, &format!("{} knots", lines.iter().filter(|l| !l.starts_with("    ")).count()));
    assert!(consistent);
}

//! Command-line front end.
//!
//! Positive braid generators are positive crossings, so the left trefoil of
//! the worked example is `--braid "2: -1 -1 -1"`. Exit codes: 0 success, 1
//! usage or parse errors, 2 internal invariant violations.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cube::{assemble_complex_seeded, reduced_split, CubeComplex};
use crate::error::{Error, Result};
use crate::exterior::ScalarConfig;
use crate::homology::{
    euler_characteristic, field_dims, homology, poincare, Coefficients, HomologyGroup, HomologyTable, LaurentPoly,
    Poly2,
};
use crate::oracles::{compare, even_complex, kauffman_jones};
use crate::superdiagram::relations::relation_suite;
use crate::webs::{cube_of, Braid, OrientedLinkDiagram, PdCode, ResolutionCube};

#[derive(Debug, Parser)]
#[command(name = "superkh", version, about = "Bigraded link homology from super KLR webs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Homology table and Poincaré polynomial.
    Homology(LinkArgs),
    /// Euler characteristic against the Kauffman bracket.
    JonesCheck(LinkArgs),
    /// Comparison with even Khovanov homology.
    CompareEven(LinkArgs),
    /// Reduced homology and the splitting certificate.
    Reduce(LinkArgs),
    /// Runs the local relation suite.
    VerifyRelations(RelationArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["braid", "pd"])))]
pub struct LinkArgs {
    /// Braid word `k: a1 a2 ...`; generators in ±1..±(k-1).
    #[arg(long)]
    pub braid: Option<String>,
    /// JSON file with a list of PD crossing records.
    #[arg(long)]
    pub pd: Option<PathBuf>,
    /// Z, Q, F2 or Fp:<p>.
    #[arg(long, default_value = "Z")]
    pub coeff: String,
    /// Signs `i:j=±1`, comma separated; unset entries are +1.
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long)]
    pub json: bool,
    /// Picks among the admissible sign assignments; 0 is the canonical one.
    #[arg(long, default_value_t = 0)]
    pub seed_signs: u64,
}

#[derive(Debug, Args)]
pub struct RelationArgs {
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    #[arg(long, default_value_t = 6)]
    pub max_size: usize,
    #[arg(long)]
    pub json: bool,
}

/// Machine-readable result shared by the link commands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkReport {
    pub link: String,
    pub writhe: i32,
    pub coefficients: Coefficients,
    pub homology: HomologyTable,
    pub poincare: Poly2,
    pub euler: LaurentPoly,
    pub jones: LaurentPoly,
    pub checks: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_invariant_violation() {
        2
    } else {
        1
    }
}

/// Parses `i:j=s` entries into a scalar config of rank at least `n`.
pub fn parse_t(spec: Option<&str>, n: usize) -> Result<ScalarConfig> {
    let mut entries = Vec::new();
    for item in spec.unwrap_or("").split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || Error::Parse(format!("bad t entry {item:?}, expected i:j=±1"));
        let (pair, v) = item.split_once('=').ok_or_else(bad)?;
        let (i, j) = pair.split_once(':').ok_or_else(bad)?;
        let i: usize = i.trim().parse().map_err(|_| bad())?;
        let j: usize = j.trim().parse().map_err(|_| bad())?;
        let v: i8 = v.trim().parse().map_err(|_| bad())?;
        entries.push((i, j, v));
    }
    let m = entries.iter().map(|&(i, j, _)| i.max(j)).max().unwrap_or(0).max(n).max(1);
    let mut cfg = ScalarConfig::new(m);
    for (i, j, v) in entries {
        cfg = cfg.with_t(i, j, v).map_err(|e| Error::Parse(e.to_string()))?;
    }
    Ok(cfg)
}

fn read_diagram(a: &LinkArgs) -> Result<(String, OrientedLinkDiagram)> {
    if let Some(b) = &a.braid {
        return Ok((b.trim().to_string(), OrientedLinkDiagram::from_braid(Braid::parse(b)?)));
    }
    let path = a.pd.as_ref().ok_or_else(|| Error::Parse("no input given".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let pd = PdCode::from_json(&text)?;
    Ok((path.display().to_string(), OrientedLinkDiagram::from_pd(pd)?))
}

struct Pipeline {
    link: String,
    diagram: OrientedLinkDiagram,
    cube: ResolutionCube,
    complex: CubeComplex,
    integral: HomologyTable,
    coeff: Coefficients,
}

fn pipeline(a: &LinkArgs) -> Result<Pipeline> {
    let coeff: Coefficients = a.coeff.parse()?;
    let (link, diagram) = read_diagram(a)?;
    let cube = cube_of(&diagram)?;
    let t = parse_t(a.t.as_deref(), cube.web.columns().saturating_sub(1))?;
    let complex = assemble_complex_seeded(&cube, &t, a.seed_signs)?;
    complex.complex.check_d_squared()?;
    let integral = homology(&complex.complex)?;
    Ok(Pipeline { link, diagram, cube, complex, integral, coeff })
}

/// Table in the chosen coefficients; over a field only dimensions remain.
fn table_over(h: &HomologyTable, coeff: Coefficients) -> HomologyTable {
    if coeff == Coefficients::Z {
        return h.clone();
    }
    let entries = field_dims(h, coeff)
        .into_iter()
        .map(|(k, rank)| (k, HomologyGroup { rank, torsion: Vec::new() }))
        .collect();
    HomologyTable { entries }
}

fn base_report(p: &Pipeline) -> LinkReport {
    let euler = euler_characteristic(&p.integral);
    let jones = kauffman_jones(&p.diagram);
    let mut checks = BTreeMap::new();
    checks.insert("d_squared_zero".to_string(), true);
    checks.insert("euler_equals_jones".to_string(), euler == jones);
    LinkReport {
        link: p.link.clone(),
        writhe: p.diagram.writhe(),
        coefficients: p.coeff,
        homology: table_over(&p.integral, p.coeff),
        poincare: poincare(&p.integral, p.coeff),
        euler,
        jones,
        checks,
        details: None,
    }
}

fn render(r: &LinkReport, json: bool) -> String {
    if json {
        return serde_json::to_string_pretty(r).expect("report serializes") + "\n";
    }
    let mut s = format!("link: {}\nwrithe: {}\ncoefficients: {}\n", r.link, r.writhe, r.coefficients);
    if r.homology.entries.is_empty() {
        s += "0\n";
    }
    for (&(h, q), g) in &r.homology.entries {
        let field = r.coefficients.to_string();
        let mut parts = Vec::new();
        if g.rank > 0 {
            parts.push(if g.rank == 1 { field } else { format!("{field}^{}", g.rank) });
        }
        parts.extend(g.torsion.iter().map(|t| format!("Z/{t}")));
        s += &format!("h={h:>3} q={q:>3}: {}\n", parts.join(" + "));
    }
    s += &format!("poincare: {}\neuler: {}\njones: {}\n", r.poincare, r.euler, r.jones);
    for (k, v) in &r.checks {
        s += &format!("{k}: {}\n", if *v { "pass" } else { "FAIL" });
    }
    s
}

fn link_command(cmd: &Command, a: &LinkArgs) -> Result<String> {
    let p = pipeline(a)?;
    let mut r = base_report(&p);
    match cmd {
        Command::Homology(_) | Command::JonesCheck(_) => {}
        Command::CompareEven(_) => {
            let even_cx = even_complex(&p.cube)?;
            let even = homology(&even_cx)?;
            let mut cmp = compare(&p.integral, &even);
            let mut uct = true;
            for q in [2, 3] {
                uct &= crate::homology::universal_coefficients_hold(&p.complex.complex, &p.integral, q)?;
                uct &= crate::homology::universal_coefficients_hold(&even_cx, &even, q)?;
            }
            cmp.uct_consistent = uct;
            r.checks.insert("equal_f2".into(), cmp.equal_f2);
            r.checks.insert("uct_consistent".into(), cmp.uct_consistent);
            r.details = Some(serde_json::json!({ "even": even, "comparison": cmp }));
        }
        Command::Reduce(_) => {
            let (red_cx, cert) = reduced_split(&p.complex)?;
            let red = homology(&red_cx)?;
            let pq = poincare(&p.integral, Coefficients::Q);
            let pr = poincare(&red, Coefficients::Q);
            let factor = LaurentPoly::from_terms(&[(1, 1), (-1, 1)]);
            r.checks.insert("subcomplex".into(), cert.subcomplex);
            r.checks.insert("delta_exact".into(), cert.delta_exact);
            r.checks.insert("graded_split".into(), cert.graded_split);
            r.checks.insert("factorization".into(), pr.mul_q(&factor) == pq);
            r.details = Some(serde_json::json!({
                "reduced": table_over(&red, p.coeff),
                "reduced_poincare": poincare(&red, p.coeff),
            }));
        }
        Command::VerifyRelations(_) => unreachable!(),
    }
    if matches!(cmd, Command::JonesCheck(_)) && !a.json {
        let ok = r.checks["euler_equals_jones"];
        return Ok(format!(
            "link: {}\neuler: {}\njones: {}\njones-check: {}\n",
            r.link,
            r.euler,
            r.jones,
            if ok { "pass" } else { "FAIL" }
        ));
    }
    let mut out = render(&r, a.json);
    if !a.json {
        if let Some(d) = &r.details {
            if let Some(rp) = d.get("reduced_poincare") {
                let rp: Poly2 = serde_json::from_value(rp.clone()).expect("reduced poincare");
                out += &format!("reduced poincare: {rp}\n");
            }
            if let Some(c) = d.get("comparison") {
                let diffs = c["integral_diffs"].as_array().map_or(0, Vec::len);
                out += &format!("integral differences from even Khovanov: {diffs}\n");
                for row in c["integral_diffs"].as_array().into_iter().flatten() {
                    out += &format!(
                        "  h={} q={}: {} vs {}\n",
                        row["h"], row["q"], row["main"].as_str().unwrap_or(""), row["even"].as_str().unwrap_or("")
                    );
                }
            }
        }
    }
    Ok(out)
}

fn relations_command(a: &RelationArgs) -> Result<String> {
    if a.rank == 0 {
        return Err(Error::Parse("rank must be positive".into()));
    }
    let report = relation_suite(a.rank, a.max_size);
    if a.json {
        let failures: Vec<_> = report.failures().collect();
        let v = serde_json::json!({
            "rank": report.rank,
            "size_bound": report.size_bound,
            "all_pass": report.all_pass(),
            "summary": report.summary,
            "failures": failures,
        });
        return Ok(serde_json::to_string_pretty(&v).expect("report serializes") + "\n");
    }
    let mut s = format!("rank {} size <= {}\n", report.rank, report.size_bound);
    for (name, tally) in &report.summary {
        let status = if tally.failed == 0 { "pass" } else { "FAIL" };
        s += &format!("{name:<24} {status} ({} passed, {} failed)\n", tally.passed, tally.failed);
    }
    s += &format!("all pass: {}\n", report.all_pass());
    Ok(s)
}

/// Runs the command line `args` (program name first).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let res = match &cli.command {
        Command::VerifyRelations(a) => relations_command(a),
        cmd @ (Command::Homology(a) | Command::JonesCheck(a) | Command::CompareEven(a) | Command::Reduce(a)) => {
            link_command(cmd, a)
        }
    };
    match res {
        Ok(stdout) => Outcome { code: 0, stdout, stderr: String::new() },
        Err(e) => Outcome { code: exit_code(&e), stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Outcome {
        run(std::iter::once("superkh").chain(args.iter().copied()))
    }

    #[test]
    fn t_parsing() {
        let t = parse_t(Some("1:2=-1, 3:1=-1"), 2).unwrap();
        assert_eq!(t.rank(), 3);
        assert_eq!(t.t(1, 2), -1);
        assert_eq!(t.t(2, 1), 1);
        assert_eq!(t.t(1, 3), -1);
        assert!(parse_t(Some("1:2"), 2).is_err());
        assert!(parse_t(Some("1:1=-1"), 2).is_err());
        assert!(parse_t(Some("1:2=3"), 2).is_err());
    }

    #[test]
    fn bad_input_exits_one() {
        assert_eq!(run_args(&["homology", "--braid", ""]).code, 1);
        assert_eq!(run_args(&["homology", "--braid", "2: 1 x"]).code, 1);
        assert_eq!(run_args(&["homology"]).code, 1);
        assert_eq!(run_args(&["homology", "--braid", "2: 1", "--coeff", "F4"]).code, 1);
        assert_eq!(run_args(&["frobnicate"]).code, 1);
    }

    #[test]
    fn help_exits_zero() {
        let o = run_args(&["--help"]);
        assert_eq!(o.code, 0);
        assert!(o.stdout.contains("homology"));
    }
}

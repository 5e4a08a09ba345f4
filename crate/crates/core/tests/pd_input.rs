use superkh::cube::assemble_complex;
use superkh::exterior::ScalarConfig;
use superkh::homology::{euler_characteristic, homology, HomologyTable};
use superkh::oracles::kauffman_jones;
use superkh::webs::{compile_fform, cube_of, links, Braid, OrientedLinkDiagram, PdCode, PdCrossing};

fn h(d: &OrientedLinkDiagram) -> HomologyTable {
    let cube = cube_of(d).unwrap();
    let n = cube.web.columns().saturating_sub(1).max(1);
    homology(&assemble_complex(&cube, &ScalarConfig::new(n)).unwrap().complex).unwrap()
}

#[test]
fn pd_and_braid_paths_agree_on_the_table() {
    for e in links::table() {
        let b = e.braid();
        let pd = OrientedLinkDiagram::from_pd(b.to_pd()).unwrap();
        assert_eq!(h(&OrientedLinkDiagram::from_braid(b.clone())), h(&pd), "{}", e.name);
    }
}

#[test]
fn morse_embeddings_use_compensated_crossings() {
    let pd = OrientedLinkDiagram::from_pd(Braid::parse("3: 1 -2 1 -2").unwrap().to_pd()).unwrap();
    let (_, sites) = compile_fform(&pd).unwrap();
    assert!(sites.iter().any(|s| s.sign != s.fform_sign));
    assert_eq!(sites.iter().map(|s| s.sign as i32).sum::<i32>(), 0);
}

#[test]
fn kinks_are_unknots() {
    let unknot = h(&OrientedLinkDiagram::from_braid(Braid::parse("1:").unwrap()));
    for pd in [
        PdCode::new(vec![PdCrossing { over: [1, 2], under: [2, 1], sign: 1 }]),
        PdCode::new(vec![PdCrossing { over: [2, 1], under: [1, 2], sign: -1 }]),
    ] {
        let d = OrientedLinkDiagram::from_pd(pd).unwrap();
        assert_eq!(h(&d), unknot);
        assert_eq!(euler_characteristic(&h(&d)), kauffman_jones(&d));
    }
}

#[test]
fn mirrored_pd_matches_mirrored_braid() {
    for name in ["trefoil-right", "5_2", "whitehead"] {
        let b = links::lookup(name).unwrap().braid();
        let pd = OrientedLinkDiagram::from_pd(b.to_pd().mirror()).unwrap();
        assert_eq!(h(&pd), h(&OrientedLinkDiagram::from_braid(b.mirror())), "{name}");
    }
}

#[test]
fn split_diagrams_and_free_loops() {
    let mut pd = Braid::parse("2: 1 1 1").unwrap().to_pd();
    pd.free_loops = 1;
    let d = OrientedLinkDiagram::from_pd(pd).unwrap();
    assert_eq!(euler_characteristic(&h(&d)), kauffman_jones(&d));
    let two = OrientedLinkDiagram::from_pd(PdCode { crossings: vec![], free_loops: 2 }).unwrap();
    assert_eq!(h(&two), h(&OrientedLinkDiagram::from_braid(Braid::parse("2:").unwrap())));
}

mod random_braids {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn pd_path_matches_braid_path(word in prop::collection::vec(prop_oneof![-2i32..=-1, 1i32..=2], 0..6)) {
            let b = Braid::new(3, word).unwrap();
            let pd = OrientedLinkDiagram::from_pd(b.to_pd()).unwrap();
            prop_assert_eq!(h(&OrientedLinkDiagram::from_braid(b)), h(&pd));
        }
    }
}

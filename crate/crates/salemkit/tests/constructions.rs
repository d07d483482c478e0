use proptest::prelude::*;

use salemkit::analysis::verify_suite;
use salemkit::constructions::{build, ConstructionKind, ConstructionParams, Preset};
use salemkit::measures::measure_to_text;
use salemkit::Error;

const KINDS: [ConstructionKind; 5] = [
    ConstructionKind::Salem,
    ConstructionKind::HeavyCore,
    ConstructionKind::GeoFactorization,
    ConstructionKind::RestrictionGeo,
    ConstructionKind::RestrictionNongeo,
];

#[test]
fn desk_suites_pass_for_every_construction() {
    for kind in KINDS {
        let built = build(&ConstructionParams::desk(kind, 7)).unwrap();
        assert!(built.family().iter().all(|mu| mu.is_probability()), "{kind:?}");
        for r in verify_suite(&built).unwrap() {
            assert!(r.passed(), "{kind:?} {}: {:?}", r.experiment, r.failures());
        }
    }
}

#[test]
fn heavy_core_rejects_large_s() {
    let mut p = ConstructionParams::desk(ConstructionKind::HeavyCore, 1);
    p.s = Some(0.9);
    assert!(matches!(build(&p), Err(Error::InvalidS { .. })));
}

#[test]
fn degenerate_alpha_is_rejected() {
    let mut p = ConstructionParams::desk(ConstructionKind::Salem, 1);
    p.alpha = 1.0;
    assert!(matches!(build(&p), Err(Error::DegenerateAlpha { .. })));
}

#[test]
fn paper_constants_refuse_small_geometric_scales() {
    let p = ConstructionParams::desk(ConstructionKind::GeoFactorization, 3);
    let mut paper = p.clone();
    paper.overrides = Default::default();
    let paper = paper.resolved(Preset::PaperConstants);
    assert!(matches!(build(&paper), Err(Error::DegenerateParameters(_))));
}

#[test]
fn params_json_round_trip() {
    for kind in KINDS {
        let p = ConstructionParams::desk(kind, 9).resolved(Preset::DeskScale);
        let text = serde_json::to_string(&p).unwrap();
        let back: ConstructionParams = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
    let bad = r#"{"construction":"salem","d":1,"r":2,"alpha":0.5,"depth":2,"seed":1,"extra":0}"#;
    assert!(serde_json::from_str::<ConstructionParams>(bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn salem_is_seed_deterministic(seed in any::<u64>()) {
        let p = ConstructionParams::desk(ConstructionKind::Salem, seed);
        let a = build(&p).unwrap();
        let b = build(&p).unwrap();
        let ta: Vec<String> = a.family().iter().map(measure_to_text).collect();
        let tb: Vec<String> = b.family().iter().map(measure_to_text).collect();
        prop_assert_eq!(ta, tb);
        prop_assert!(a.family().iter().all(|mu| mu.is_probability()));
    }

    #[test]
    fn geo_factorization_holds_for_any_seed(seed in any::<u64>()) {
        let built = build(&ConstructionParams::desk(ConstructionKind::GeoFactorization, seed)).unwrap();
        for r in verify_suite(&built).unwrap() {
            prop_assert!(r.passed(), "{}: {:?}", r.experiment, r.failures());
        }
    }
}

use ccrs_core::corpus::DESIGNS;
use ccrs_core::emit::emit;
use ccrs_core::hdl::{elaborate, parse_source};
use ccrs_core::ir::{canonical_form, CcrsDocument};
use ccrs_core::sim::{check_equivalence, EquivOptions, HdlModel, Verdict};
use ccrs_core::templater::lower_module;

fn lower(src: &str, top: &str) -> CcrsDocument {
    let d = elaborate(&parse_source(src).unwrap_or_else(|e| panic!("{e:?}\n{src}"))).unwrap_or_else(|e| panic!("{e:?}\n{src}"));
    lower_module(&d, top).unwrap()
}

fn model(src: &str, top: &str) -> HdlModel {
    HdlModel::new(&elaborate(&parse_source(src).unwrap()).unwrap(), top).unwrap()
}

#[test]
fn corpus_round_trips_to_an_isomorphic_document() {
    for d in DESIGNS {
        let doc = lower(d.source, d.top);
        let text = emit(&doc).unwrap();
        let back = lower(&text, d.top);
        assert_eq!(
            String::from_utf8(canonical_form(&doc)).unwrap(),
            String::from_utf8(canonical_form(&back)).unwrap(),
            "{}:\n{text}",
            d.name
        );
    }
}

#[test]
fn emitted_text_is_equivalent_to_the_source() {
    for d in DESIGNS {
        let text = emit(&lower(d.source, d.top)).unwrap();
        let v = check_equivalence(&model(d.source, d.top), &model(&text, d.top), &EquivOptions::default()).unwrap();
        assert!(matches!(v, Verdict::Equivalent { .. } | Verdict::Inconclusive { .. }), "{}: {v:?}", d.name);
    }
}

#[test]
fn emission_is_a_fixed_point_after_one_round() {
    for d in DESIGNS {
        let once = emit(&lower(d.source, d.top)).unwrap();
        let twice = emit(&lower(&once, d.top)).unwrap();
        assert_eq!(once, twice, "{}", d.name);
    }
}

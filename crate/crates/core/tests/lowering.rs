use ccrs_core::corpus::DESIGNS;
use ccrs_core::hdl::{elaborate, parse_source};
use ccrs_core::ir::validate;
use ccrs_core::templater::lower_module;

#[test]
fn corpus_lowers_and_validates() {
    for d in DESIGNS {
        let ast = parse_source(d.source).unwrap_or_else(|e| panic!("{}: {e:?}", d.name));
        let design = elaborate(&ast).unwrap_or_else(|e| panic!("{}: {e:?}", d.name));
        assert!(design.warnings.is_empty(), "{}: {:?}", d.name, design.warnings);
        let doc = lower_module(&design, d.top).unwrap_or_else(|e| panic!("{}: {e:?}", d.name));
        assert_eq!(validate(&doc), vec![], "{}", d.name);
        assert_eq!(doc.is_sequential(), d.sequential, "{}", d.name);
    }
}

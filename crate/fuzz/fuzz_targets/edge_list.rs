#![no_main]
use addbo_core::graph::{format_edge_list, format_structure, parse_edge_list, parse_structure};
use libfuzzer_sys::fuzz_target;

// Anything that parses must survive a format/parse round trip unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((graph, lengthscales)) = parse_structure(text) {
        let again = match &lengthscales {
            Some(l) => parse_structure(&format_structure(&graph, l)).expect("formatted structure parses"),
            None => (parse_edge_list(&format_edge_list(&graph)).expect("formatted edge list parses"), None),
        };
        assert_eq!(again.0, graph);
        assert_eq!(again.1, lengthscales);
    }
});

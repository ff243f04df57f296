#![no_main]

use libfuzzer_sys::fuzz_target;
use magnn_core::logic::{parse_rule, parse_rules, print_rule};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_rules(text);
    if let Ok(r) = parse_rule(text) {
        let printed = print_rule(&r);
        assert_eq!(parse_rule(&printed).unwrap(), r, "{printed}");
    }
});

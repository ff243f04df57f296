#![no_main]

use libfuzzer_sys::fuzz_target;
use magnn_core::Dataset;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = Dataset::parse(text) {
        // Whatever parses must print back to an equal dataset.
        let again = Dataset::parse(&d.to_text()).expect("printed dataset reparses");
        assert_eq!(d, again);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use magnn_core::Signature;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sig) = Signature::parse(text) {
        assert_eq!(Signature::parse(&sig.to_text()).unwrap(), sig);
    }
});

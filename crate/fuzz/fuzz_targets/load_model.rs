#![no_main]

use libfuzzer_sys::fuzz_target;
use magnn_core::{forward, Dataset, MagnnModel};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(model) = MagnnModel::from_json(text) else { return };
    let _ = model.validate();
    if model.check_evaluable().is_ok() {
        let reloaded = MagnnModel::from_json(&model.to_json()).expect("written model reloads");
        assert_eq!(reloaded, model);
        let _ = forward::apply(&model, &Dataset::default());
    }
});

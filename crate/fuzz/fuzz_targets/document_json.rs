#![no_main]

use libfuzzer_sys::fuzz_target;
use wres_core::document::OutputDocument;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(doc) = OutputDocument::from_json(text) else {
        return;
    };
    assert_eq!(OutputDocument::from_json(&doc.to_json()).unwrap(), doc);
    if let Ok(form) = doc.to_coefficients() {
        let again = OutputDocument::from_coefficients(&form, &doc.meta.pipeline);
        assert_eq!(again.to_coefficients().unwrap(), form);
    }
});

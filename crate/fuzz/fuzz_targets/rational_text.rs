#![no_main]

use libfuzzer_sys::fuzz_target;
use wres_core::rational::{parse_parts, parse_rational, to_fraction_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(value) = parse_rational(text) {
        assert_eq!(parse_rational(&to_fraction_string(&value)).unwrap(), value);
    }
    if let Some((num, den)) = text.split_once('\n') {
        let _ = parse_parts(num, den);
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use wres_core::{Partials, SphereConvention};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(c) = text.parse::<SphereConvention>() {
        assert_eq!(c.name().parse::<SphereConvention>().unwrap(), c);
    }
    if let Ok(p) = text.parse::<Partials>() {
        assert_eq!(p.name().parse::<Partials>().unwrap(), p);
    }
});

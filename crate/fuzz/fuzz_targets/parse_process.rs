#![no_main]

use libfuzzer_sys::fuzz_target;
use symelect::syntax::{alpha_equiv, normal_form, parse};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(p) = parse(text) else { return };
    // whatever parses must print back to something equivalent
    let back = parse(&p.to_string()).expect("printed terms parse");
    assert!(alpha_equiv(&p, &back), "{p} vs {back}");
    let nf = normal_form(&p);
    assert_eq!(normal_form(&nf), nf);
});

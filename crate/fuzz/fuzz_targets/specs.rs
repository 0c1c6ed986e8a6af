#![no_main]

use libfuzzer_sys::fuzz_target;
use symelect::lts::Action;
use symelect::network::Automorphism;
use symelect::protocols::HypergraphSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = text.parse::<Automorphism>() {
        let back: Automorphism = s.to_string().parse().expect("printed automorphisms parse");
        assert_eq!(back.node_map, s.node_map);
    }
    if let Ok(h) = text.parse::<HypergraphSpec>() {
        assert_eq!(h.to_string().parse::<HypergraphSpec>().ok(), Some(h));
    }
    let _ = text.parse::<Action>();
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use symelect::network::Network;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(net) = Network::parse(text) else { return };
    let again = Network::parse(&net.to_string()).expect("printed networks parse");
    assert_eq!(again.len(), net.len());
    let _ = net.state_key();
});

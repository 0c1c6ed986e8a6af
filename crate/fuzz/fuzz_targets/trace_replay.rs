#![no_main]

use libfuzzer_sys::fuzz_target;
use symelect::trace::{read_line, replay};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Some(first) = text.lines().next() {
        let _ = read_line(first, "", 0);
    }
    let _ = replay(text);
});

#![no_main]

use ddlab::tgrid::{format_axis, parse_axis};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(axis) = parse_axis("t", text) {
        let values = axis.values();
        assert_eq!(values.len(), axis.count);
        assert_eq!(parse_axis("t", &format_axis(&axis)).expect("formatted axis parses"), axis);
    }
});

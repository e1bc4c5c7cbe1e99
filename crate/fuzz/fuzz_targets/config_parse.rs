#![no_main]

use ddlab::config::{parse_config, Settings, Subcommand};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(entries) = parse_config(text) else { return };
    let mut settings = Settings::defaults(Subcommand::Compare);
    if settings.apply_entries(&entries).is_ok() && settings.validate().is_ok() {
        // A valid configuration must survive its own echo.
        let mut replay = Settings::defaults(Subcommand::Compare);
        for (k, v) in settings.echo() {
            replay.apply(&k, &v).expect("echoed value parses");
        }
        replay.format = settings.format;
        replay.svg = settings.svg;
        assert_eq!(replay, settings);
    }
});

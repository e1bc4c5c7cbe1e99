#![no_main]

use ddlab::output::{parse_csv, write_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_csv(text) {
        let width = table.table.columns.len();
        assert!(table.table.rows.iter().all(|r| r.len() == width));
        let again = parse_csv(&write_csv(&table)).expect("written table parses");
        assert_eq!(again.table.columns, table.table.columns);
        assert_eq!(again.table.rows.len(), table.table.rows.len());
    }
});

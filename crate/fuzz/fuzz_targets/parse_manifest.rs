#![no_main]

use acoustic_cluster::signal::{parse_manifest, write_manifest};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(entries) = parse_manifest(data, None) else {
        return;
    };
    assert!(!entries.is_empty());
    // anything accepted must survive a write/parse round trip
    let mut buf = Vec::new();
    write_manifest(&entries, &mut buf).unwrap();
    assert_eq!(parse_manifest(buf.as_slice(), None).unwrap(), entries);
});

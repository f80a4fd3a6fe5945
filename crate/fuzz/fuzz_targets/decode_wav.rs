#![no_main]

use acoustic_cluster::signal::decode_wav;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(signal) = decode_wav(data) {
        assert!(!signal.is_empty());
        assert!(signal.sample_rate() > 0);
        assert!(signal.samples().iter().all(|s| s.is_finite()));
    }
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use microbranch::specs::RangeSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = RangeSpec::parse(text) else { return };
    let samples = spec.samples();
    assert_eq!(samples.len(), spec.count);
    assert!(samples.iter().all(|v| v.is_finite() && *v > 0.0));
});

#![no_main]

use libfuzzer_sys::fuzz_target;
use microbranch::specs::GridSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = GridSpec::parse(text) else { return };
    assert!(spec.m >= 2 && spec.k >= 2);
    assert!(spec.m * spec.k <= 1_048_576);
});

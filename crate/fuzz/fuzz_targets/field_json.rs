#![no_main]

use libfuzzer_sys::fuzz_target;
use microbranch::field::MicrostructureField;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(field) = MicrostructureField::from_json(text) else { return };
    // Accepted fields must round-trip bit-exactly and support the cheap
    // exact integrals without panicking.
    let json = field.to_json();
    let back = MicrostructureField::from_json(&json).expect("round trip must parse");
    assert_eq!(field, back, "round trip must be bit-exact");
    let _ = field.surface_tv();
    let _ = field.vertical_projection();
    let _ = field.elastic_martensite();
    let _ = field.eval(-field.depth / 2.0, field.height / 3.0);
    let _ = field.eval_austenite(0.25, field.height / 3.0);
});

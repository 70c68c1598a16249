#![no_main]

use frameless_bell::qstate::StateVector;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(state) = StateVector::from_dump_json(text) else {
        return;
    };
    let again = StateVector::from_dump_json(&state.to_dump_json()).expect("re-encoded dump parses");
    assert_eq!(again.num_qubits(), state.num_qubits());
    assert!(again.distance(&state).unwrap() <= 1e-12 * (1.0 + state.norm()));
});

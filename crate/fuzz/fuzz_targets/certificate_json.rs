#![no_main]

use frameless_bell::lhv::{verify_certificate, FeasibilityCertificate};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cert) = FeasibilityCertificate::from_json(text) else {
        return;
    };
    let _ = verify_certificate(&cert, &cert.constraints().to_vec());
    let again = FeasibilityCertificate::from_json(&cert.to_json()).expect("re-encoded certificate parses");
    assert_eq!(again, cert);
});

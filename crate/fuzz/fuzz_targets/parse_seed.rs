#![no_main]

use frameless_bell::rotations::parse_seed;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(seed) = parse_seed(text) {
            assert_eq!(parse_seed(&seed.to_string()).unwrap(), seed);
            assert_eq!(parse_seed(&format!("{seed:#x}")).unwrap(), seed);
        }
    }
});

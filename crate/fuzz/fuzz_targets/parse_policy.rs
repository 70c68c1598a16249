#![no_main]

use frameless_bell::experiment::SettingPolicy;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = text.parse::<SettingPolicy>() {
            assert_eq!(p.to_string().parse::<SettingPolicy>().unwrap(), p);
        }
    }
});

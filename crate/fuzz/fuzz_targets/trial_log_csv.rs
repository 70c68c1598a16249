#![no_main]

use frameless_bell::experiment::{read_trial_log, write_trial_log};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok((meta, records)) = read_trial_log(data) else {
        return;
    };
    if meta.iter().any(|m| m.contains(['\n', '\r'])) {
        return;
    }
    let mut out = Vec::new();
    write_trial_log(&mut out, &meta, &records).expect("in-memory write");
    let (meta2, records2) = read_trial_log(&out[..]).expect("re-encoded log parses");
    assert_eq!(records2, records);
    assert_eq!(meta2, meta);
});

#![no_main]
use addbo_core::io::{parse_data_csv, write_data_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(obs) = parse_data_csv(text) else { return };
    let mut buf = Vec::new();
    write_data_csv(&obs, &mut buf).expect("writing to memory");
    let again = parse_data_csv(std::str::from_utf8(&buf).unwrap()).expect("written data parses");
    assert_eq!(again, obs);
});

#![no_main]
use addbo_core::bo::BetaSchedule;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(beta) = text.parse::<BetaSchedule>() else { return };
    if beta.validate().is_ok() {
        for t in [1, 2, 100, usize::MAX] {
            let _ = beta.value(t);
        }
        let again: BetaSchedule = beta.to_string().parse().expect("displayed schedule parses");
        assert_eq!(again, beta);
    }
});

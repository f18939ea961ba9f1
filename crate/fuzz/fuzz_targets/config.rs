#![no_main]
use addbo_cli::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(cfg) = parse_config(&text) {
        let _ = cfg.validate();
        let _ = cfg.resolved_dim();
        let _ = cfg.resolved_grid_max();
    }
});

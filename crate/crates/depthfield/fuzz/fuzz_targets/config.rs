#![no_main]

use depthfield::config::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let mut cfg = ExperimentConfig::default();
        if cfg.apply_text(text).is_ok() {
            // accepted configurations echo into a parseable canonical form
            let echo = cfg.echo();
            let mut again = ExperimentConfig::default();
            again.apply_text(&echo).expect("echo must parse");
            assert_eq!(cfg, again);
        }
    }
});

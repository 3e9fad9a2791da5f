#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(scenario) = firstdetect::cli::parse_scenario(text) {
            // Accepted documents must also survive the derived queries.
            let _ = scenario.time_points();
        }
    }
});

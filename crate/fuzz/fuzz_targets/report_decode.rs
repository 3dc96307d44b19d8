#![no_main]

use libfuzzer_sys::fuzz_target;
use tqent::io::{decode_report, render_report, ReportFormat};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = decode_report(text) {
        render_report(&report, ReportFormat::Csv).expect("csv rendering");
        render_report(&report, ReportFormat::Text).expect("text rendering");
    }
});

//! One line per acceptance criterion. Criteria listed in `KNOWN_SHORTFALLS`
//! are reported but do not fail the suite; every other criterion must pass.

use std::process::ExitCode;

use rhythmic::verify::{check, VerifyOptions, KNOWN_SHORTFALLS};

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    let mut unexpected = Vec::new();
    for id in 1..=12u8 {
        match check(id, &opts) {
            Ok(c) => {
                println!("{c}");
                if !c.pass && !KNOWN_SHORTFALLS.contains(&id) {
                    unexpected.push(format!("criterion {id} failed"));
                }
            }
            Err(e) => {
                println!("[FAIL] {id:>2} error: {e:#}");
                unexpected.push(format!("criterion {id} errored: {e:#}"));
            }
        }
    }
    let known: Vec<String> = KNOWN_SHORTFALLS.iter().map(u8::to_string).collect();
    if unexpected.is_empty() {
        println!("acceptance: ok (known shortfalls: {})", known.join(", "));
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {}", unexpected.join("; "));
        ExitCode::FAILURE
    }
}

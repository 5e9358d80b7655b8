//! Runs the oracle suite and prints one line per check.

use csi_predict::verify::{all_passed, run_all, VerifyOptions};

fn main() {
    let checks = run_all(&VerifyOptions::default());
    for c in &checks {
        println!("{c}");
    }
    if !all_passed(&checks) {
        std::process::exit(1);
    }
}

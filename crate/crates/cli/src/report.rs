//! Report plumbing: a human-readable table on standard output plus
//! optional newline-delimited JSON records, and the exit-code bookkeeping.

use std::io::Write;

use hdhi::weights::Verdict;

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit-code contract.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_INDETERMINATE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

pub struct Report {
    out_path: Option<String>,
    records: Vec<serde_json::Value>,
    any_false: bool,
    any_indeterminate: bool,
}

impl Report {
    pub fn new(command: &str, cfg: &RunConfig, out_path: Option<String>) -> Report {
        println!("# hdhi {VERSION} :: {command}");
        println!(
            "# tolerances: quad={:e} sum={:e} verdict_guard={:e}",
            cfg.tol_quad, cfg.tol_sum, cfg.verdict_guard
        );
        println!("# config: {}", cfg.canonical());
        Report {
            out_path,
            records: Vec::new(),
            any_false: false,
            any_indeterminate: false,
        }
    }

    pub fn line(&mut self, text: &str) {
        println!("{text}");
    }

    pub fn record(&mut self, row: serde_json::Value) {
        self.records.push(row);
    }

    pub fn verdict(&mut self, v: Verdict) {
        match v {
            Verdict::True => {}
            Verdict::False => self.any_false = true,
            Verdict::Indeterminate => self.any_indeterminate = true,
        }
    }

    /// Flush NDJSON records and produce the process exit code.
    pub fn finish(self) -> i32 {
        if let Some(path) = &self.out_path {
            match std::fs::File::create(path) {
                Ok(mut f) => {
                    for rec in &self.records {
                        let _ = writeln!(f, "{rec}");
                    }
                }
                Err(e) => {
                    eprintln!("error: cannot write {path}: {e}");
                    return EXIT_CONFIG;
                }
            }
        }
        if self.any_false {
            EXIT_FALSE
        } else if self.any_indeterminate {
            EXIT_INDETERMINATE
        } else {
            EXIT_OK
        }
    }
}

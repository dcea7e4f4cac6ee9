//! PASS/FAIL reporting for the acceptance target.

use std::process::ExitCode;

/// Collects one verdict per checked criterion and prints each as it lands.
#[derive(Debug, Default)]
pub struct Report {
    failures: usize,
    checks: usize,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, criterion: &str, ok: bool, detail: impl AsRef<str>) -> bool {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
        println!(
            "{} criterion {criterion}: {}",
            if ok { "PASS" } else { "FAIL" },
            detail.as_ref()
        );
        ok
    }

    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn finish(self) -> ExitCode {
        println!(
            "acceptance: {} of {} checks passed",
            self.checks - self.failures,
            self.checks
        );
        if self.failures == 0 {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }
    }
}

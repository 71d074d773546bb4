//! `verify`: the randomized lemma suites and the exact unbiasedness check.

use netbandit::analysis::{run_lemma_suites, run_unbiasedness_suite, SuiteOutcome};

use crate::error::CliError;

pub const DEFAULT_VERIFY_SAMPLES: usize = 10_000;
pub const DEFAULT_VERIFY_SEED: u64 = 20_160_101;

/// Runs every suite, printing one count line each. Fails with the first
/// counterexample found.
pub fn cmd_verify(samples: usize, seed: u64, negate_estimator: bool) -> Result<Vec<SuiteOutcome>, CliError> {
    let mut outcomes = vec![run_unbiasedness_suite(samples, seed, negate_estimator)?];
    outcomes.extend(run_lemma_suites(samples, seed)?);
    let mut failed = Vec::new();
    for o in &outcomes {
        println!(
            "{:<24} {:>6} checked {:>6} failed  {}",
            o.name,
            o.checked,
            o.failures,
            if o.passed() { "ok" } else { "FAIL" }
        );
        if !o.passed() {
            let example = o.counterexample.clone().unwrap_or_else(|| "no configurations checked".into());
            println!("  counterexample: {example}");
            failed.push(format!("{}: {example}", o.name));
        }
    }
    if failed.is_empty() {
        Ok(outcomes)
    } else {
        Err(CliError::Verification(failed.join("; ")))
    }
}

//! Runs every identity suite on a handful of seeds and prints the worst
//! residual of each.

use ckn::identities::{run_suite, Suite, SuiteOptions};

fn main() -> ckn::Result<()> {
    let opts = SuiteOptions::default();
    for suite in Suite::ALL {
        let reports = run_suite(suite, 4, &opts)?;
        let worst = reports.iter().map(|r| r.residual).fold(0.0, f64::max);
        let rel = reports.iter().map(|r| r.relative).fold(0.0, f64::max);
        println!("{suite:16} residual {worst:.2e}  relative {rel:.2e}");
    }
    Ok(())
}

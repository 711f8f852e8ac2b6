//! Spectral threshold of the ℓ = 1 mode against 4(d-1)/(p²-4), and the
//! rigidity threshold on the sphere.

use ckn::spectrum::{sphere_bifurcation, threshold_report, zero_mode, ThresholdOptions};

fn main() -> ckn::Result<()> {
    let opts = ThresholdOptions::default();
    for (d, p) in [(3, 4.0), (2, 4.0), (3, 3.0), (4, 3.0)] {
        let r = threshold_report(d, p, &opts)?;
        println!(
            "d={d} p={p}: threshold {:.8}, closed form {:.8}, mismatch {:.1e}",
            r.threshold_lambda, r.closed_form, r.relative_mismatch
        );
    }
    let z = zero_mode(3, 4.0, 1.0)?;
    println!("translation mode: eigenvalue {:.2e}, overlap with φ' {:.8}", z.eigenvalue, z.correlation);
    let s = sphere_bifurcation(3, 4.0)?;
    println!("sphere: d/(p-2) = {}, from λ₁ = {:.12}", s.analytic, s.from_eigenvalue);
    Ok(())
}

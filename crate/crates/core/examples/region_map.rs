//! Classifies a few parameter triples and prints the threshold curve for d = 3.

use ckn::params::{b_fs, derive, CknParams};

fn main() -> ckn::Result<()> {
    for (d, a, b) in [(3, 0.0, 0.0), (3, -1.0, -0.6), (3, -1.0, -0.2), (2, -0.5, -0.4)] {
        let dp = derive(CknParams { d, a, b })?;
        println!(
            "d={d} a={a:5.2} b={b:5.2}  p={:.4} Λ={:.4} Λ_FS={:.4} α={:.4} α_FS={:.4}  {:?}",
            dp.p, dp.lambda, dp.lambda_fs, dp.alpha, dp.alpha_fs, dp.region
        );
    }
    println!("\na      b_FS(a)   (d = 3)");
    for k in 0..8 {
        let a = -3.0 + 0.45 * f64::from(k);
        println!("{a:6.2} {:10.6}", b_fs(3, a)?);
    }
    Ok(())
}

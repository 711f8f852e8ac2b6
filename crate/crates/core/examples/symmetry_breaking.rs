//! Radial against full minimization on a coarse cylinder grid, on both sides
//! of the threshold (d = 3, p = 4).

use ckn::discretization::{CylinderGrid, SphereGrid};
use ckn::minimize::{detect_breaking, MinimizeOptions};
use ckn::params::{from_cylinder, lambda_fs};

fn main() -> ckn::Result<()> {
    let lfs = lambda_fs(3, 4.0)?;
    for factor in [0.5, 1.5] {
        let dp = from_cylinder(3, 4.0, factor * lfs)?;
        let grid = CylinderGrid::new(10.0 / dp.lambda.sqrt(), 301, SphereGrid::two_sphere(6, 12)?)?;
        let r = detect_breaking(&dp, &grid, &MinimizeOptions::default())?;
        println!(
            "Λ = {:.4} ({factor} Λ_FS): radial {:.6}, full {:.6}, gap {:.2e}, broken {}",
            dp.lambda, r.radial_constant, r.full_constant, r.gap, r.broken
        );
    }
    Ok(())
}

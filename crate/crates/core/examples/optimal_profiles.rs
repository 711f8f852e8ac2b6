//! Radial optimizers and their quotient: the soliton on the cylinder, the
//! weighted profile on the half-line, and the Sobolev constant at a = b = 0.

use ckn::discretization::{CylinderGrid, SphereGrid};
use ckn::functionals::{cylinder_quotient, el_residual_cylinder};
use ckn::params::{derive, from_cylinder, CknParams};
use ckn::profiles::{normalized_radial, radial_constant, Soliton};

fn main() -> ckn::Result<()> {
    let sobolev = derive(CknParams { d: 3, a: 0.0, b: 0.0 })?;
    println!("Sobolev constant (d = 3): {:.10}", radial_constant(&sobolev)?);

    let dp = from_cylinder(3, 4.0, 1.0)?;
    let sol = Soliton::from_params(&dp)?;
    let grid = CylinderGrid::new(15.0, 3001, SphereGrid::point(3)?)?;
    let phi = grid.sample(|z, _| sol.eval(z));
    let q = cylinder_quotient(&phi, &grid, dp.lambda, dp.p)?;
    println!("soliton peak {:.6}, rate {:.6}", sol.peak(), sol.rate());
    println!("quotient on the grid {:.10}, by quadrature {:.10}", q.quotient, radial_constant(&dp)?);
    println!("Euler-Lagrange residual {:.3e}", el_residual_cylinder(&phi, &grid, dp.lambda, dp.p)?);

    let prof = normalized_radial(&dp);
    for s in [0.1, 1.0, 10.0] {
        println!("u({s}) = {:.8}", prof.eval(s));
    }
    Ok(())
}

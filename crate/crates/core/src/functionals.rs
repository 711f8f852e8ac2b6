//! Quotients, the pressure functional and Euler–Lagrange residuals.

use serde::{Deserialize, Serialize};

use crate::discretization::{CylinderGrid, Field, WeightedGrid};
use crate::error::{domain, CknError, Result};
use crate::params::DerivedParams;

/// Relative size of the boundary density above which a field is treated as
/// not decaying on the truncated domain.
pub const TAIL_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub numerator: f64,
    pub denominator: f64,
    pub quotient: f64,
    /// `‖·‖₂²`.
    pub l2sq: f64,
    /// `‖·‖_p²`, equal to the denominator.
    pub lpsq: f64,
}

impl QuotientReport {
    fn new(numerator: f64, l2sq: f64, lp_integral: f64, p: f64) -> Result<Self> {
        if !(lp_integral > 0.0) {
            return domain("quotient of a zero field");
        }
        let lpsq = lp_integral.powf(2.0 / p);
        Ok(QuotientReport {
            numerator,
            denominator: lpsq,
            quotient: numerator / lpsq,
            l2sq,
            lpsq,
        })
    }
}

fn pow_pos(x: f64, p: f64) -> f64 {
    if x > 0.0 {
        x.powf(p)
    } else {
        0.0
    }
}

/// Cylinder quotient together with its derivative with respect to every
/// nodal value (the plain Euclidean gradient of the discrete functional).
pub fn cylinder_quotient_with_gradient(
    phi: &Field,
    grid: &CylinderGrid,
    lambda: f64,
    p: f64,
) -> Result<(QuotientReport, Field)> {
    let (rows, cols) = grid.shape();
    if phi.rows != rows || phi.cols != cols {
        return Err(CknError::Grid(format!(
            "field {}x{} on a {rows}x{cols} cylinder grid",
            phi.rows, phi.cols
        )));
    }
    let wz = grid.z.weights();
    let ws = grid.sphere.weights();
    let h = grid.z.h;
    let stag = grid.staggered_op();

    let mut grad = vec![0.0; phi.len()];
    let (mut e_z, mut e_w, mut mass, mut lp) = (0.0, 0.0, 0.0, 0.0);
    let mut col = vec![0.0; rows];
    for j in 0..cols {
        for (i, c) in col.iter_mut().enumerate() {
            *c = phi.values[i * cols + j];
        }
        // ‖∂_zφ‖² by the midpoint rule on staggered differences.
        let mut dz = stag.apply(&col);
        e_z += ws[j] * h * dz.iter().map(|v| v * v).sum::<f64>();
        dz.iter_mut().for_each(|v| *v *= 2.0 * ws[j] * h);
        let back = stag.apply_transpose(&dz);
        for i in 0..rows {
            grad[i * cols + j] += back[i];
        }
    }
    for i in 0..rows {
        let (e, g) = grid.sphere.energy_with_gradient(phi.row(i));
        e_w += wz[i] * e;
        for j in 0..cols {
            grad[i * cols + j] += wz[i] * g[j];
        }
    }
    let mut lp_grad = vec![0.0; phi.len()];
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            let (w, v) = (wz[i] * ws[j], phi.values[k]);
            mass += w * v * v;
            grad[k] += 2.0 * lambda * w * v;
            let vp1 = pow_pos(v, p - 1.0);
            lp += w * vp1 * v.max(0.0);
            lp_grad[k] = w * vp1;
        }
    }
    let report = QuotientReport::new(e_z + e_w + lambda * mass, mass, lp, p)?;
    // Q = N L^{-2/p}: dQ = L^{-2/p} (dN - 2 (N/L) w φ^{p-1}).
    let scale = 1.0 / report.lpsq;
    let ratio = 2.0 * report.numerator / lp;
    let values = grad
        .iter()
        .zip(&lp_grad)
        .map(|(g, l)| scale * (g - ratio * l))
        .collect();
    Ok((report, Field::new(values, rows, cols)?))
}

/// `(‖∂_zφ‖² + ‖∇_ωφ‖² + Λ‖φ‖²)/‖φ‖_p²` with the measure `dz dω`.
pub fn cylinder_quotient(phi: &Field, grid: &CylinderGrid, lambda: f64, p: f64) -> Result<QuotientReport> {
    cylinder_quotient_with_gradient(phi, grid, lambda, p).map(|(r, _)| r)
}

fn check_tail(density: &Field) -> Result<()> {
    let peak = density.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let edge = density
        .row(0)
        .iter()
        .chain(density.row(density.rows - 1))
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if edge > TAIL_THRESHOLD * peak {
        return domain(format!(
            "field does not decay on the truncated domain (boundary/peak density {:.3e})",
            edge / peak
        ));
    }
    Ok(())
}

/// `∫|𝖣u|² dμ / (∫u^p dμ)^{2/p}`. The factor `α^{1-2/p}` linking this to
/// the cylinder quotient is [`weighted_factor`], kept out of the report.
pub fn weighted_quotient(u: &Field, grid: &WeightedGrid, dp: &DerivedParams) -> Result<QuotientReport> {
    let up = u.map(|v| pow_pos(v, dp.p));
    let (rows, _) = grid.shape();
    let s_pow: Vec<f64> = (0..rows).map(|i| grid.radial.s(i).powf(dp.n)).collect();
    let density = Field::new(
        up.values
            .iter()
            .enumerate()
            .map(|(k, v)| v * s_pow[k / u.cols])
            .collect(),
        u.rows,
        u.cols,
    )?;
    check_tail(&density)?;
    let numerator = grid.integrate(&grid.d_sq(u)?)?;
    let l2sq = grid.integrate(&u.map(|v| v * v))?;
    QuotientReport::new(numerator, l2sq, grid.integrate(&up)?, dp.p)
}

/// `α^{1-2/p}`: weighted quotient of `u` over cylinder quotient of its
/// Emden–Fowler image.
pub fn weighted_factor(dp: &DerivedParams) -> f64 {
    dp.alpha.powf(1.0 - 2.0 / dp.p)
}

/// `𝗉 = v^{-1/n}`.
pub fn pressure(v: &Field, n: f64) -> Result<Field> {
    v.require_positive("density")?;
    Ok(v.map(|x| x.powf(-1.0 / n)))
}

/// `J = ∫ v |𝖣𝗉|² dμ`.
pub fn pressure_functional(v: &Field, grid: &WeightedGrid, dp: &DerivedParams) -> Result<f64> {
    let pr = pressure(v, dp.n)?;
    let dsq = grid.d_sq(&pr)?;
    grid.integrate(&dsq.zip_map(v, |a, b| a * b))
}

/// Pointwise `-∂_z²φ - Δ_ωφ + Λφ - φ^{p-1}`.
pub fn cylinder_residual(phi: &Field, grid: &CylinderGrid, lambda: f64, p: f64) -> Result<Field> {
    let zz = grid.d_zz(phi)?;
    let ang = grid.laplace_sphere(phi)?;
    let mut out = zz.zip_map(&ang, |a, b| -a - b);
    for (o, v) in out.values.iter_mut().zip(&phi.values) {
        *o += lambda * v - pow_pos(*v, p - 1.0);
    }
    Ok(out)
}

/// Interior sup of [`cylinder_residual`].
pub fn el_residual_cylinder(phi: &Field, grid: &CylinderGrid, lambda: f64, p: f64) -> Result<f64> {
    Ok(cylinder_residual(phi, grid, lambda, p)?.interior_sup())
}

/// Pointwise `𝓛u + u^{p-1}`.
pub fn weighted_residual(u: &Field, grid: &WeightedGrid, dp: &DerivedParams) -> Result<Field> {
    let lu = grid.op_l(u)?;
    Ok(lu.zip_map(u, |l, v| l + pow_pos(v, dp.p - 1.0)))
}

/// Interior sup of [`weighted_residual`].
pub fn el_residual_weighted(u: &Field, grid: &WeightedGrid, dp: &DerivedParams) -> Result<f64> {
    Ok(weighted_residual(u, grid, dp)?.interior_sup())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{RadialGrid, SphereGrid};
    use crate::params::{derive, CknParams};
    use crate::profiles::{normalized_radial, radial_constant, Soliton};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dp(d: u32, a: f64, b: f64) -> DerivedParams {
        derive(CknParams { d, a, b }).unwrap()
    }

    fn soliton_field(grid: &CylinderGrid, sol: &Soliton) -> Field {
        grid.sample(|z, _| sol.eval(z))
    }

    #[test]
    fn soliton_quotient_matches_quadrature() {
        let dp = dp(3, -0.5, -0.3);
        let sol = Soliton::from_params(&dp).unwrap();
        let grid = CylinderGrid::new(20.0 / dp.lambda.sqrt(), 2001, SphereGrid::point(3).unwrap()).unwrap();
        let q = cylinder_quotient(&soliton_field(&grid, &sol), &grid, dp.lambda, dp.p).unwrap();
        let exact = radial_constant(&dp).unwrap();
        assert!((q.quotient - exact).abs() < 1e-6 * exact, "{} vs {exact}", q.quotient);
        assert_eq!(q.denominator, q.lpsq);
        assert!((q.quotient - q.numerator / q.denominator).abs() < 1e-15 * q.quotient);
    }

    #[test]
    fn cylinder_quotient_invariances() {
        let grid = CylinderGrid::new(20.0, 1001, SphereGrid::two_sphere(8, 16).unwrap()).unwrap();
        let sol = Soliton::new(1.0, 4.0).unwrap();
        let sphere = grid.sphere.as_two_sphere().unwrap().clone();
        let phi = grid.sample(|z, j| {
            let mu = sphere.mu[j / sphere.nphi];
            sol.eval(z) * (1.0 + 0.3 * mu)
        });
        let q = cylinder_quotient(&phi, &grid, 1.0, 4.0).unwrap().quotient;
        let q3 = cylinder_quotient(&phi.scaled(3.7), &grid, 1.0, 4.0).unwrap().quotient;
        assert!((q - q3).abs() < 1e-12 * q);
        let shift = 20;
        let shifted = grid.sample(|z, j| {
            let mu = sphere.mu[j / sphere.nphi];
            sol.eval(z + shift as f64 * grid.z.h) * (1.0 + 0.3 * mu)
        });
        let qs = cylinder_quotient(&shifted, &grid, 1.0, 4.0).unwrap().quotient;
        assert!((q - qs).abs() < 1e-10 * q, "{q} vs {qs}");
        assert!(cylinder_quotient(&grid.sample(|_, _| 0.0), &grid, 1.0, 4.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let grid = CylinderGrid::new(4.0, 21, SphereGrid::two_sphere(4, 8).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise: Vec<f64> = (0..21 * 32).map(|_| rng.gen::<f64>()).collect();
        let base = grid.sample(|z, _| (-(z * z) / 4.0).exp());
        let phi = base.zip_map(&Field::new(noise, 21, 32).unwrap(), |b, r| b * (1.0 + 0.2 * r));
        let (_, g) = cylinder_quotient_with_gradient(&phi, &grid, 0.7, 3.3).unwrap();
        for k in [0, 17, 100, 333, 500] {
            let h = 1e-6;
            let mut a = phi.clone();
            let mut b = phi.clone();
            a.values[k] += h;
            b.values[k] -= h;
            let qa = cylinder_quotient(&a, &grid, 0.7, 3.3).unwrap().quotient;
            let qb = cylinder_quotient(&b, &grid, 0.7, 3.3).unwrap().quotient;
            let num = (qa - qb) / (2.0 * h);
            assert!((num - g.values[k]).abs() < 1e-6 * (1.0 + num.abs()), "{k}: {num} vs {}", g.values[k]);
        }
    }

    #[test]
    fn cylinder_residual_of_constants() {
        let grid = CylinderGrid::new(3.0, 41, SphereGrid::circle(8).unwrap()).unwrap();
        let (lambda, p) = (0.8_f64, 3.5_f64);
        let c = lambda.powf(1.0 / (p - 2.0));
        let r = el_residual_cylinder(&grid.sample(|_, _| c), &grid, lambda, p).unwrap();
        assert!(r < 1e-12);
        let r = el_residual_cylinder(&grid.sample(|_, _| 2.0 * c), &grid, lambda, p).unwrap();
        let expected = (lambda * 2.0 * c - (2.0 * c).powf(p - 1.0)).abs();
        assert!((r - expected).abs() < 1e-10);
    }

    #[test]
    fn soliton_solves_the_cylinder_equation() {
        let sol = Soliton::new(1.0, 4.0).unwrap();
        let grid = CylinderGrid::new(15.0, 6001, SphereGrid::point(3).unwrap()).unwrap();
        let phi = soliton_field(&grid, &sol);
        assert!(el_residual_cylinder(&phi, &grid, 1.0, 4.0).unwrap() < 1e-8);
        let bumped = phi.map(|v| v * 1.01);
        assert!(el_residual_cylinder(&bumped, &grid, 1.0, 4.0).unwrap() > 1e-3);
    }

    /// `u(s, ω) = s^{-(n-2)/2} φ(log s / α, ω)`.
    fn weighted_from_cylinder(
        dp: &DerivedParams,
        s_span: (f64, f64),
        ns: usize,
        sphere: SphereGrid,
        phi: impl Fn(f64, usize) -> f64,
    ) -> (WeightedGrid, Field) {
        let rg = RadialGrid::new(dp.n, dp.alpha, s_span.0, s_span.1, ns).unwrap();
        let g = WeightedGrid::new(rg, sphere);
        let k = (dp.n - 2.0) / 2.0;
        let u = g.sample(|s, j| s.powf(-k) * phi(s.ln() / dp.alpha, j));
        (g, u)
    }

    #[test]
    fn weighted_quotient_matches_cylinder_through_the_chain() {
        let dp = dp(3, -0.5, -0.3);
        let sol = Soliton::from_params(&dp).unwrap();
        let z = 25.0 / dp.lambda.sqrt();
        let span = ((-dp.alpha * z).exp(), (dp.alpha * z).exp());
        let (g, u) = weighted_from_cylinder(&dp, span, 4001, SphereGrid::point(3).unwrap(), |z, _| sol.eval(z));
        let wq = weighted_quotient(&u, &g, &dp).unwrap().quotient;
        let expected = weighted_factor(&dp) * radial_constant(&dp).unwrap();
        assert!((wq - expected).abs() < 1e-8 * expected, "{wq} vs {expected}");
        let wq2 = weighted_quotient(&u.scaled(0.3), &g, &dp).unwrap().quotient;
        assert!((wq - wq2).abs() < 1e-12 * wq);
    }

    #[test]
    fn weighted_quotient_rejects_slow_tails() {
        let dp = dp(3, 0.0, 0.0);
        let rg = RadialGrid::new(dp.n, dp.alpha, 0.1, 10.0, 101).unwrap();
        let g = WeightedGrid::new(rg, SphereGrid::point(3).unwrap());
        let u = g.sample(|_, _| 1.0);
        assert!(weighted_quotient(&u, &g, &dp).is_err());
    }

    #[test]
    fn weighted_residuals() {
        let dp = dp(3, -0.5, -0.3);
        let prof = normalized_radial(&dp);
        let rg = RadialGrid::new(dp.n, dp.alpha, 0.2, 20.0, 1601).unwrap();
        let g = WeightedGrid::new(rg, SphereGrid::two_sphere(4, 8).unwrap());
        let u = g.sample(|s, _| prof.eval(s));
        assert!(el_residual_weighted(&u, &g, &dp).unwrap() < 1e-8);
        assert!(el_residual_weighted(&u.scaled(1.1), &g, &dp).unwrap() > 1e-3);
    }

    #[test]
    fn weighted_residual_is_rescaled_cylinder_residual() {
        // 𝓛u + u^{p-1} = -s^{-(n+2)/2} (cylinder residual) for u = s^{-(n-2)/2} φ(log s / α).
        let dp = dp(3, -0.5, -0.3);
        let sol = Soliton::from_params(&dp).unwrap();
        let phi = |z: f64, _| sol.eval(z) * (1.0 + 0.1 * (-(z * z)).exp());
        let (g, u) = weighted_from_cylinder(&dp, (0.3, 3.0), 2001, SphereGrid::point(3).unwrap(), phi);
        let cyl_grid_h = g.radial.t.h / dp.alpha;
        let nz = g.radial.len();
        let z0 = g.radial.t.start / dp.alpha;
        let cgrid = CylinderGrid::new((nz - 1) as f64 * cyl_grid_h / 2.0, nz, SphereGrid::point(3).unwrap()).unwrap();
        let shift = z0 + cgrid.half_length();
        let pf = cgrid.sample(|z, j| phi(z + shift, j));
        let rc = cylinder_residual(&pf, &cgrid, dp.lambda, dp.p).unwrap();
        let rw = weighted_residual(&u, &g, &dp).unwrap();
        let mut worst = 0.0_f64;
        for i in 3..nz - 3 {
            let s = g.radial.s(i);
            let mapped = -s.powf(-(dp.n + 2.0) / 2.0) * rc.values[i];
            worst = worst.max((mapped - rw.values[i]).abs());
        }
        assert!(worst < 1e-7, "{worst}");
    }

    fn random_positive(g: &WeightedGrid, rng: &mut ChaCha8Rng) -> Field {
        let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let width = rng.gen_range(0.7..1.4);
        let sphere = g.sphere.as_two_sphere().unwrap().clone();
        g.sample(|s, j| {
            let (mu, ph) = (sphere.mu[j / sphere.nphi], sphere.phi(j % sphere.nphi));
            let ang = 1.0 + c[0] * mu + c[1] * (1.0 - mu * mu).sqrt() * ph.cos() + c[2] * mu * mu;
            ang * (-(s * s) / (width * width) + c[3] * s).exp()
        })
    }

    #[test]
    fn pressure_form_equals_dirichlet_energy() {
        let dp = dp(3, -0.5, -0.3);
        let rg = RadialGrid::new(dp.n, dp.alpha, 0.2, 5.0, 2001).unwrap();
        let g = WeightedGrid::new(rg, SphereGrid::two_sphere(12, 24).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let u = random_positive(&g, &mut rng);
            let j = pressure_functional(&u.map(|v| v.powf(dp.p)), &g, &dp).unwrap();
            let energy = g.integrate(&g.d_sq(&u).unwrap()).unwrap();
            let lhs = (dp.n - 2.0).powi(2) / 4.0 * j;
            assert!((lhs - energy).abs() < 1e-8 * energy, "{lhs} vs {energy}");
        }
    }

    #[test]
    fn pressure_of_a_power() {
        let dp = dp(3, -0.5, -0.3);
        let rg = RadialGrid::new(dp.n, dp.alpha, 0.5, 2.0, 201).unwrap();
        let g = WeightedGrid::new(rg, SphereGrid::point(3).unwrap());
        let c = 2.5_f64;
        let v = g.sample(|s, _| c * s.powf(-dp.n));
        let pr = pressure(&v, dp.n).unwrap();
        for i in 0..g.radial.len() {
            let expected = c.powf(-1.0 / dp.n) * g.radial.s(i);
            assert!((pr.values[i] - expected).abs() < 1e-14 * expected);
        }
        let dsq = g.d_sq(&pr).unwrap();
        let expected = dp.alpha.powi(2) * c.powf(-2.0 / dp.n);
        // s is not a polynomial in log s, so the check is to stencil accuracy.
        assert!(dsq.values.iter().all(|v| (v - expected).abs() < 1e-8 * expected));
        assert!(pressure_functional(&v, &g, &dp).unwrap() > 0.0);
        assert!(pressure(&v.scaled(-1.0), dp.n).is_err());
    }
}

//! Parameter space of the weighted inequality.
//!
//! A point is the triple `(d, a, b)`. Everything else (the Lebesgue exponent
//! `p`, the cylinder mass `Λ`, the dilation exponent `α`, the effective
//! dimension `n`) is a function of it. The Felli–Schneider curve
//! `b = b_FS(a)` separates the region where radial optimizers are stable from
//! the region where they are not; [`derive()`] classifies a point relative to it.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Relative width of the band around the curve reported as [`Region::OnCurve`].
pub const CURVE_TOLERANCE: f64 = 1e-12;

/// Admissible input triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CknParams {
    pub d: u32,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// `b > b_FS(a)`: radial optimizers are stable (and global).
    Symmetric,
    /// `b < b_FS(a)`: inside the Felli–Schneider region.
    Breaking,
    OnCurve,
}

/// All quantities derived from a [`CknParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub d: u32,
    pub a: f64,
    pub b: f64,
    pub a_c: f64,
    pub p: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub n: f64,
    pub alpha_fs: f64,
    pub lambda_fs: f64,
    pub b_fs_at_a: f64,
    pub region: Region,
}

impl CknParams {
    pub fn new(d: u32, a: f64, b: f64) -> Result<Self> {
        let params = CknParams { d, a, b };
        params.validate()?;
        Ok(params)
    }

    pub fn a_c(&self) -> f64 {
        critical_a(self.d)
    }

    pub fn validate(&self) -> Result<()> {
        let CknParams { d, a, b } = *self;
        if d < 2 {
            return domain(format!("dimension d = {d} must be at least 2"));
        }
        if !a.is_finite() || !b.is_finite() {
            return domain("a and b must be finite");
        }
        let a_c = critical_a(d);
        if a >= a_c {
            return domain(format!("a = {a} must be below a_c = {a_c}"));
        }
        let gap = b - a;
        if d == 2 && gap <= 0.0 {
            return domain(format!("d = 2 requires a < b (got b - a = {gap})"));
        }
        if gap < 0.0 {
            return domain(format!("b - a = {gap} must be non-negative"));
        }
        // b = a + 1 collapses p to 2 and sends n to infinity.
        if gap >= 1.0 {
            return domain(format!("b - a = {gap} must be below 1"));
        }
        Ok(())
    }
}

/// `a_c = (d - 2) / 2`.
pub fn critical_a(d: u32) -> f64 {
    (f64::from(d) - 2.0) / 2.0
}

/// Critical Sobolev exponent `2* = 2d/(d-2)`, infinite for `d = 2`.
pub fn critical_exponent(d: u32) -> f64 {
    if d <= 2 {
        f64::INFINITY
    } else {
        2.0 * f64::from(d) / (f64::from(d) - 2.0)
    }
}

/// `p = 2d / (d - 2 + 2(b - a))`.
pub fn exponent_p(d: u32, a: f64, b: f64) -> f64 {
    2.0 * f64::from(d) / (f64::from(d) - 2.0 + 2.0 * (b - a))
}

/// Effective dimension `n = 2p/(p - 2)`.
pub fn effective_dimension(p: f64) -> f64 {
    2.0 * p / (p - 2.0)
}

pub fn derive(params: CknParams) -> Result<DerivedParams> {
    params.validate()?;
    let CknParams { d, a, b } = params;
    let df = f64::from(d);
    let a_c = critical_a(d);
    let p = exponent_p(d, a, b);
    let n = effective_dimension(p);
    let lambda = (a - a_c) * (a - a_c);
    let alpha = (1.0 + a - b) * (a_c - a) / (a_c - a + b);
    let alpha_fs = ((df - 1.0) / (n - 1.0)).sqrt();
    // Evaluated directly: at a = b the exponent equals 2* and the checked
    // `lambda_fs` would reject it.
    let lambda_fs = 4.0 * (df - 1.0) / (p * p - 4.0);
    let b_fs_at_a = b_fs_unchecked(d, a);
    let region = classify(b, b_fs_at_a);
    Ok(DerivedParams {
        d,
        a,
        b,
        a_c,
        p,
        lambda,
        alpha,
        n,
        alpha_fs,
        lambda_fs,
        b_fs_at_a,
        region,
    })
}

fn classify(b: f64, b_fs: f64) -> Region {
    let scale = 1.0_f64.max(b.abs()).max(b_fs.abs());
    let diff = b - b_fs;
    if diff.abs() <= CURVE_TOLERANCE * scale {
        Region::OnCurve
    } else if diff > 0.0 {
        Region::Symmetric
    } else {
        Region::Breaking
    }
}

fn b_fs_unchecked(d: u32, a: f64) -> f64 {
    let df = f64::from(d);
    let t = critical_a(d) - a;
    df * t / (2.0 * (t * t + df - 1.0).sqrt()) - t
}

/// The Felli–Schneider curve `b_FS(a)`.
pub fn b_fs(d: u32, a: f64) -> Result<f64> {
    if d < 2 {
        return domain(format!("dimension d = {d} must be at least 2"));
    }
    if !(a < critical_a(d)) {
        return domain(format!("a = {a} must be below a_c = {}", critical_a(d)));
    }
    Ok(b_fs_unchecked(d, a))
}

/// Stability threshold on the cylinder, `Λ_FS = 4(d - 1)/(p² - 4)`.
pub fn lambda_fs(d: u32, p: f64) -> Result<f64> {
    if d < 2 {
        return domain(format!("dimension d = {d} must be at least 2"));
    }
    if !(p > 2.0 && p < critical_exponent(d)) {
        return domain(format!(
            "p = {p} must lie in (2, {})",
            critical_exponent(d)
        ));
    }
    Ok(4.0 * (f64::from(d) - 1.0) / (p * p - 4.0))
}

/// Inverse of `(a, b) ↦ (α, n)` at fixed `d`.
///
/// With `δ = b - a` fixed by `n`, `α` is affine in `a`:
/// `α = (1 - δ)(a_c - a)/(a_c + δ)`.
pub fn to_ab(d: u32, alpha: f64, n: f64) -> Result<(f64, f64)> {
    if d < 2 {
        return domain(format!("dimension d = {d} must be at least 2"));
    }
    if !(n > 2.0) || !n.is_finite() {
        return domain(format!("n = {n} must be finite and above 2"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return domain(format!("alpha = {alpha} must be positive"));
    }
    let df = f64::from(d);
    let a_c = critical_a(d);
    let p = 2.0 * n / (n - 2.0);
    let delta = df / p - a_c;
    if !(delta < 1.0) {
        return domain(format!("n = {n} gives b - a = {delta}, outside [0, 1)"));
    }
    let a = a_c - alpha * (a_c + delta) / (1.0 - delta);
    let b = a + delta;
    CknParams::new(d, a, b)
        .map(|_| (a, b))
        .map_err(|e| crate::CknError::Domain(format!("inverse lands outside the region: {e}")))
}

/// Parameters with prescribed cylinder data: exponent `p` and `Λ > 0`
/// (`a = a_c - √Λ`, `b - a = d/p - a_c`).
pub fn from_cylinder(d: u32, p: f64, lambda: f64) -> Result<DerivedParams> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("Λ = {lambda} must be positive"));
    }
    let a = critical_a(d) - lambda.sqrt();
    let b = a + f64::from(d) / p - critical_a(d);
    derive(CknParams::new(d, a, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol * 1.0_f64.max(y.abs())
    }

    #[test]
    fn sobolev_point() {
        let dp = derive(CknParams { d: 3, a: 0.0, b: 0.0 }).unwrap();
        assert_eq!(dp.p, 6.0);
        assert_eq!(dp.alpha, 1.0);
        assert_eq!(dp.n, 3.0);
        assert_eq!(dp.a_c, 0.5);
        assert_eq!(dp.lambda, 0.25);
    }

    #[test]
    fn on_curve_example() {
        let b = 3.0_f64.sqrt() / 2.0 - 1.0;
        let dp = derive(CknParams { d: 3, a: -0.5, b }).unwrap();
        assert!(close(dp.p, 2.0 * 3.0_f64.sqrt(), 1e-14));
        assert!(close(dp.lambda, 1.0, 1e-15));
        assert!(close(dp.lambda_fs, 1.0, 1e-12));
        assert_eq!(dp.region, Region::OnCurve);
    }

    #[test]
    fn equal_weights_in_four_dimensions() {
        let dp = derive(CknParams { d: 4, a: -1.0, b: -1.0 }).unwrap();
        assert_eq!(dp.p, 4.0);
        assert_eq!(dp.n, 4.0);
        // b = a gives alpha = (a_c - a)/a_c.
        assert!(close(dp.alpha, 2.0, 1e-15));
    }

    #[test]
    fn cylinder_data_round_trip() {
        let dp = from_cylinder(3, 4.0, 1.0).unwrap();
        assert!((dp.p - 4.0).abs() < 1e-14 && (dp.lambda - 1.0).abs() < 1e-14);
        assert_eq!(dp.region, Region::Breaking);
        let dp = from_cylinder(3, 4.0, 1.0 / 3.0).unwrap();
        assert_eq!(dp.region, Region::Symmetric);
        assert!(from_cylinder(3, 4.0, 0.0).is_err());
        assert!(from_cylinder(3, 7.0, 1.0).is_err());
    }

    #[test]
    fn curve_values() {
        assert!(b_fs(4, 0.0).unwrap().abs() < 1e-15);
        assert!(close(b_fs(3, -0.5).unwrap(), 3.0_f64.sqrt() / 2.0 - 1.0, 1e-15));
        let near = b_fs(3, 0.5 - 1e-9).unwrap();
        assert!(near.abs() < 1e-8);
        assert!(b_fs(3, 0.5).is_err());
    }

    #[test]
    fn threshold_values() {
        assert!(close(lambda_fs(3, 4.0).unwrap(), 2.0 / 3.0, 1e-15));
        assert!(close(lambda_fs(4, 3.0).unwrap(), 2.4, 1e-15));
        assert!(close(lambda_fs(2, 4.0).unwrap(), 1.0 / 3.0, 1e-15));
        assert!(lambda_fs(3, 2.0).is_err());
        assert!(lambda_fs(3, 6.0).is_err());
        assert!(lambda_fs(2, 1e6).is_ok());
    }

    #[test]
    fn inverse_examples() {
        let (a, b) = to_ab(3, 1.0, 3.0).unwrap();
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
        let (a, b) = to_ab(4, 1.0, 4.0).unwrap();
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
        let (a, b) = to_ab(3, 2.0, 3.0).unwrap();
        let dp = derive(CknParams { d: 3, a, b }).unwrap();
        assert!(close(dp.alpha, 2.0, 1e-12));
        assert!(close(dp.n, 3.0, 1e-12));
    }

    #[test]
    fn rejects_inadmissible() {
        assert!(derive(CknParams { d: 3, a: 0.5, b: 0.6 }).is_err());
        assert!(derive(CknParams { d: 3, a: 0.0, b: -0.1 }).is_err());
        assert!(derive(CknParams { d: 3, a: 0.0, b: 1.0 }).is_err());
        assert!(derive(CknParams { d: 1, a: -1.0, b: -1.0 }).is_err());
        assert!(derive(CknParams { d: 2, a: -1.0, b: -1.0 }).is_err());
        assert!(derive(CknParams { d: 2, a: -1.0, b: -0.9 }).is_ok());
        // d = 3, n < d would need b - a < 0.
        assert!(to_ab(3, 1.0, 2.5).is_err());
        // alpha so small that a would exceed a_c is impossible; large alpha is fine.
        assert!(to_ab(3, 0.0, 4.0).is_err());
    }

    #[test]
    fn nonnegative_a_is_always_symmetric() {
        for &(d, a) in &[(3u32, 0.1), (4, 0.5), (5, 1.2)] {
            let dp = derive(CknParams { d, a, b: a + 0.3 }).unwrap();
            assert_eq!(dp.region, Region::Symmetric);
        }
    }
}

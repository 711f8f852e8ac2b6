//! Linearization around the soliton, mode by mode, and the stability
//! threshold it produces.
//!
//! The `ℓ`-th spherical-harmonic block of the second variation is
//! `H_ℓ = -∂_z² + Λ + ℓ(ℓ+d-2) - (p-1)φ_Λ^{p-2}`, discretized with
//! fourth-order differences and Dirichlet conditions at `±Z`.

use serde::{Deserialize, Serialize};

use crate::discretization::{Field, LineGrid, RowOp};
use crate::error::{domain, CknError, Result};
use crate::params::critical_exponent;
use crate::profiles::Soliton;
use crate::quadrature::gauss_legendre;

pub const DEFAULT_NZ: usize = 4000;
/// Truncation `Z = Z_SCALE/√Λ`.
pub const Z_SCALE: f64 = 30.0;
/// Eigenfunction size at the truncation boundary, relative to its peak,
/// above which the domain is too short.
pub const TAIL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeOperator {
    pub lambda: f64,
    pub p: f64,
    pub d: u32,
    pub ell: u32,
    pub half_length: f64,
    pub nz: usize,
}

impl ModeOperator {
    pub fn new(d: u32, p: f64, lambda: f64, ell: u32) -> Result<Self> {
        if d < 2 {
            return domain(format!("dimension d = {d} must be at least 2"));
        }
        if !(p > 2.0 && p < critical_exponent(d)) {
            return domain(format!("p = {p} must lie in (2, {})", critical_exponent(d)));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return domain(format!("Λ = {lambda} must be positive"));
        }
        Ok(ModeOperator {
            lambda,
            p,
            d,
            ell,
            half_length: Z_SCALE / lambda.sqrt(),
            nz: DEFAULT_NZ,
        })
    }

    pub fn with_grid(self, half_length: f64, nz: usize) -> Self {
        ModeOperator {
            half_length,
            nz,
            ..self
        }
    }

    /// `ℓ(ℓ + d - 2)`, the eigenvalue of `-Δ` on `S^{d-1}`.
    pub fn angular_shift(&self) -> f64 {
        let l = f64::from(self.ell);
        l * (l + f64::from(self.d) - 2.0)
    }

    /// Bottom of the essential spectrum, `Λ + ℓ(ℓ+d-2)`.
    pub fn edge(&self) -> f64 {
        self.lambda + self.angular_shift()
    }

    pub fn grid(&self) -> Result<LineGrid> {
        LineGrid::symmetric(self.half_length, self.nz)
    }

    pub fn potential(&self, z: f64) -> f64 {
        let sol = Soliton {
            lambda: self.lambda,
            p: self.p,
            z0: 0.0,
        };
        self.edge() - (self.p - 1.0) * sol.eval(z).powf(self.p - 2.0)
    }

    /// Closed form of the lowest eigenvalue on the line (Pöschl–Teller
    /// well): `ℓ(ℓ+d-2) - Λ(p²-4)/4`.
    pub fn exact_lowest(&self) -> f64 {
        self.angular_shift() - self.lambda * (self.p * self.p - 4.0) / 4.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub ell: u32,
    pub lambda: f64,
    pub lowest_eigenvalue: f64,
    pub edge: f64,
    pub threshold_lambda: Option<f64>,
    /// Interior-node eigenfunction with `∫ψ² dz = 1`, positive at its peak.
    #[serde(skip)]
    pub eigenfunction: Option<Field>,
    #[serde(skip)]
    pub z: Vec<f64>,
}

/// `H_ℓ` on the interior nodes (boundary values are zero).
fn interior_rows(grid: &LineGrid) -> RowOp {
    let n = grid.n;
    let d2 = grid.d2();
    let rows = (1..n - 1)
        .map(|i| {
            let (s, c) = d2.row(i);
            let mut coeffs = Vec::with_capacity(c.len());
            let mut start = None;
            for (k, v) in c.iter().enumerate() {
                let col = s + k;
                if col == 0 || col == n - 1 {
                    continue;
                }
                start.get_or_insert(col - 1);
                coeffs.push(-v);
            }
            (start.expect("stencil reaches interior"), coeffs)
        })
        .collect();
    RowOp::from_rows(rows)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigenpair of the discretized `H_ℓ` closest to `shift`, by inverse
/// iteration with a banded LU factorization of `H_ℓ - shift`.
pub fn eigenpair_near(op: &ModeOperator, shift: f64) -> Result<(f64, Vec<f64>, LineGrid)> {
    let grid = op.grid()?;
    let rows = interior_rows(&grid);
    let diag: Vec<f64> = (1..grid.n - 1).map(|i| op.potential(grid.node(i)) - shift).collect();
    let lu = rows.to_band(1.0, &diag).factor()?;
    let mut x: Vec<f64> = (1..grid.n - 1)
        .map(|i| {
            let z = grid.node(i);
            // Even and odd parts, so neither parity class is missed.
            (-(z * z) * op.lambda).exp() * (1.0 + 0.3 * z * op.lambda.sqrt())
        })
        .collect();
    let norm = dot(&x, &x).sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
    let mut estimate = f64::NAN;
    for it in 0..20_000 {
        let y = lu.solve(&x);
        let yy = dot(&y, &y);
        let next = shift + dot(&x, &y) / yy;
        let ny = yy.sqrt();
        x = y.into_iter().map(|v| v / ny).collect();
        let done = (next - estimate).abs() <= 1e-14 * (1.0 + next.abs());
        estimate = next;
        if done && it > 3 {
            let (psi, _) = normalize(&x, &grid)?;
            return Ok((estimate, psi, grid));
        }
    }
    Err(CknError::NoConvergence(format!(
        "inverse iteration near {shift} stalled at {estimate}"
    )))
}

fn normalize(x: &[f64], grid: &LineGrid) -> Result<(Vec<f64>, f64)> {
    let l2 = (dot(x, x) * grid.h).sqrt();
    let peak = x.iter().fold(0.0_f64, |m, v| if v.abs() > m.abs() { *v } else { m });
    let sign = peak.signum() / l2;
    let psi: Vec<f64> = x.iter().map(|v| v * sign).collect();
    let edge = psi[0].abs().max(psi[psi.len() - 1].abs());
    if edge > TAIL_TOLERANCE * peak.abs() / l2 {
        return domain(format!(
            "eigenfunction has not decayed at ±Z (boundary/peak {:.2e}); increase Z",
            edge * l2 / peak.abs()
        ));
    }
    Ok((psi, edge))
}

/// Lowest eigenvalue of `H_ℓ`.
pub fn lowest_eigenvalue(op: &ModeOperator) -> Result<SpectrumResult> {
    // Below min V = Λ + ℓ(ℓ+d-2) - (p-1)pΛ/2, so the factorization is definite.
    let floor = op.edge() - (op.p - 1.0) * op.p * op.lambda / 2.0 - 1.0;
    let (rough, _, _) = eigenpair_near(op, floor)?;
    // Refine with a shift just below the estimate.
    let (value, psi, grid) = eigenpair_near(op, rough - 1e-3 * (1.0 + rough.abs()))?;
    let rows = psi.len();
    Ok(SpectrumResult {
        ell: op.ell,
        lambda: op.lambda,
        lowest_eigenvalue: value,
        edge: op.edge(),
        threshold_lambda: None,
        eigenfunction: Some(Field::new(psi, rows, 1)?),
        z: (1..grid.n - 1).map(|i| grid.node(i)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroModeCheck {
    pub eigenvalue: f64,
    /// `|⟨ψ, φ_Λ'⟩| / (‖ψ‖ ‖φ_Λ'‖)`.
    pub correlation: f64,
}

/// The `ℓ = 0` eigenvalue closest to zero and its alignment with `φ_Λ'`.
pub fn zero_mode(d: u32, p: f64, lambda: f64) -> Result<ZeroModeCheck> {
    let op = ModeOperator::new(d, p, lambda, 0)?;
    let (eigenvalue, psi, grid) = eigenpair_near(&op, -1e-3 * lambda)?;
    let sol = Soliton::new(lambda, p)?;
    let dphi: Vec<f64> = (1..grid.n - 1).map(|i| sol.derivative(grid.node(i))).collect();
    let correlation = dot(&psi, &dphi).abs() / (dot(&psi, &psi) * dot(&dphi, &dphi)).sqrt();
    Ok(ZeroModeCheck {
        eigenvalue,
        correlation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptions {
    /// Relative width at which bisection stops.
    pub rel_tol: f64,
    pub nz: usize,
    /// Initial bracket, expanded geometrically until the sign changes.
    pub bracket: (f64, f64),
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            rel_tol: 1e-6,
            nz: DEFAULT_NZ,
            bracket: (0.1, 1.0),
        }
    }
}

fn lowest_at(d: u32, p: f64, lambda: f64, ell: u32, nz: usize) -> Result<f64> {
    let op = ModeOperator::new(d, p, lambda, ell)?;
    let op = op.with_grid(op.half_length, nz);
    Ok(lowest_eigenvalue(&op)?.lowest_eigenvalue)
}

/// `Λ` at which the lowest eigenvalue of `H_ℓ` changes sign, by bisection.
pub fn threshold_lambda(d: u32, p: f64, ell: u32, opts: &ThresholdOptions) -> Result<f64> {
    let (mut lo, mut hi) = opts.bracket;
    if !(lo > 0.0 && hi > lo) {
        return domain(format!("bad bracket [{lo}, {hi}]"));
    }
    let mut f_lo = lowest_at(d, p, lo, ell, opts.nz)?;
    let mut f_hi = lowest_at(d, p, hi, ell, opts.nz)?;
    let mut expansions = 0;
    while f_lo <= 0.0 || f_hi >= 0.0 {
        expansions += 1;
        if expansions > 40 {
            return Err(CknError::NoConvergence(format!(
                "no sign change of the ℓ = {ell} eigenvalue in [{lo:e}, {hi:e}]"
            )));
        }
        if f_lo <= 0.0 {
            hi = lo;
            f_hi = f_lo;
            lo /= 4.0;
            f_lo = lowest_at(d, p, lo, ell, opts.nz)?;
        } else {
            lo = hi;
            f_lo = f_hi;
            hi *= 4.0;
            f_hi = lowest_at(d, p, hi, ell, opts.nz)?;
        }
    }
    while (hi - lo) > opts.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if lowest_at(d, p, mid, ell, opts.nz)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereBifurcation {
    pub d: u32,
    pub p: f64,
    /// `d/(p - 2)`.
    pub analytic: f64,
    /// `λ₁(S^d)/(p - 2)` with `λ₁` the Rayleigh quotient of `cos θ`.
    pub from_eigenvalue: f64,
    pub first_eigenvalue: f64,
}

/// `λ` at which `-Δu + λu = u^{p-1}` on `S^d` stops being rigid: the
/// linearization `-Δ - (p-2)λ` at the constant loses positivity on `ℓ = 1`.
pub fn sphere_bifurcation(d: u32, p: f64) -> Result<SphereBifurcation> {
    if d < 2 {
        return domain(format!("dimension d = {d} must be at least 2"));
    }
    if !(p > 2.0) || !p.is_finite() {
        return domain(format!("p = {p} must exceed 2"));
    }
    // Rayleigh quotient ∫|∂_θ cos θ|² / ∫cos²θ with weight sin^{d-1}θ,
    // via Gauss–Legendre in θ (polynomial in cos, sin).
    let (x, w) = gauss_legendre(64);
    let half = std::f64::consts::FRAC_PI_2;
    let (mut num, mut den) = (0.0, 0.0);
    for (xi, wi) in x.iter().zip(&w) {
        let t = half * (xi + 1.0);
        let jac = wi * half * t.sin().powi(d as i32 - 1);
        num += jac * t.sin().powi(2);
        den += jac * t.cos().powi(2);
    }
    let first = num / den;
    Ok(SphereBifurcation {
        d,
        p,
        analytic: f64::from(d) / (p - 2.0),
        from_eigenvalue: first / (p - 2.0),
        first_eigenvalue: first,
    })
}

/// Eigenvalue threshold for `ℓ = 1` next to its closed form
/// `4(d-1)/(p²-4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub d: u32,
    pub p: f64,
    pub ell: u32,
    pub threshold_lambda: f64,
    pub closed_form: f64,
    pub relative_mismatch: f64,
}

pub fn threshold_report(d: u32, p: f64, opts: &ThresholdOptions) -> Result<ThresholdReport> {
    let closed_form = crate::params::lambda_fs(d, p)?;
    let t = threshold_lambda(d, p, 1, opts)?;
    Ok(ThresholdReport {
        d,
        p,
        ell: 1,
        threshold_lambda: t,
        closed_form,
        relative_mismatch: (t - closed_form).abs() / closed_form,
    })
}

/// Lowest eigenvalues of `H_0, ..., H_lmax` at one `Λ`.
pub fn mode_spectrum(d: u32, p: f64, lambda: f64, lmax: u32, nz: usize) -> Result<Vec<SpectrumResult>> {
    (0..=lmax)
        .map(|ell| {
            let op = ModeOperator::new(d, p, lambda, ell)?;
            let op = op.with_grid(op.half_length, nz);
            lowest_eigenvalue(&op)
        })
        .collect()
}

//! Closed-form objects: radial optimizers, the cylinder soliton, self-similar
//! solutions of the fast diffusion flow, and the changes of variables that
//! link them.

use serde::{Deserialize, Serialize};

use crate::discretization::{CylinderGrid, Field, RadialGrid, SphereGrid, WeightedGrid};
use crate::error::{domain, CknError, Result};
use crate::params::DerivedParams;
use crate::quadrature::{integrate_adaptive, unit_sphere_volume};

/// `u(s) = (A + B s²)^{-(n-2)/2}`, equivalently
/// `w(x) = (A + B |x|^{2α})^{-(n-2)/2}` with `s = |x|^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub a_coef: f64,
    pub b_coef: f64,
    pub alpha: f64,
    pub n: f64,
}

impl RadialProfile {
    pub fn new(a_coef: f64, b_coef: f64, alpha: f64, n: f64) -> Result<Self> {
        if !(a_coef > 0.0 && b_coef > 0.0 && alpha > 0.0 && n > 2.0) {
            return domain(format!(
                "radial profile needs A, B, alpha > 0 and n > 2 (got {a_coef}, {b_coef}, {alpha}, {n})"
            ));
        }
        Ok(RadialProfile {
            a_coef,
            b_coef,
            alpha,
            n,
        })
    }

    /// The exact solution of `-𝓛u = u^{p-1}` with `A = 1`.
    ///
    /// In effective dimension `n`, `Δ(A + B s²)^{-(n-2)/2} =
    /// -n(n-2) A B (A + B s²)^{-(n+2)/2}` and `u^{p-1} = (A + B s²)^{-(n+2)/2}`,
    /// so the equation holds iff `α² n (n-2) A B = 1`.
    pub fn normalized(dp: &DerivedParams) -> Self {
        RadialProfile {
            a_coef: 1.0,
            b_coef: 1.0 / (dp.alpha * dp.alpha * dp.n * (dp.n - 2.0)),
            alpha: dp.alpha,
            n: dp.n,
        }
    }

    /// Profile whose Emden–Fowler image is a translate of the soliton `φ_Λ`
    /// (requires `4AB = 2/(pΛ)`).
    pub fn cylinder_matched(dp: &DerivedParams, a_coef: f64) -> Result<Self> {
        Self::new(a_coef, 1.0 / (2.0 * dp.p * dp.lambda * a_coef), dp.alpha, dp.n)
    }

    /// Shift `z₀` such that `r^{a_c - a} w(r) = φ_Λ(log r - z₀)` for a
    /// [`cylinder_matched`](Self::cylinder_matched) profile.
    pub fn soliton_shift(&self) -> f64 {
        (self.a_coef / self.b_coef).ln() / (2.0 * self.alpha)
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.a_coef + self.b_coef * s * s).powf(-(self.n - 2.0) / 2.0)
    }

    /// `w` as a function of the original radius `r = |x|`.
    pub fn eval_original(&self, r: f64) -> f64 {
        self.eval(r.powf(self.alpha))
    }

    /// Pressure `𝗉 = u^{-2/(n-2)} = A + B s²`.
    pub fn pressure(&self, s: f64) -> f64 {
        self.a_coef + self.b_coef * s * s
    }
}

pub fn normalized_radial(dp: &DerivedParams) -> RadialProfile {
    RadialProfile::normalized(dp)
}

pub fn eval_radial(profile: &RadialProfile, s: f64) -> f64 {
    profile.eval(s)
}

/// `φ_Λ(z - z₀) = ((2/(pΛ)) cosh²((p-2)/2 · √Λ (z - z₀)))^{-1/(p-2)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Soliton {
    pub lambda: f64,
    pub p: f64,
    pub z0: f64,
}

fn ln_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Soliton {
    pub fn new(lambda: f64, p: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(p > 2.0) {
            return domain(format!("soliton needs Λ > 0 and p > 2 (got {lambda}, {p})"));
        }
        Ok(Soliton { lambda, p, z0: 0.0 })
    }

    pub fn from_params(dp: &DerivedParams) -> Result<Self> {
        Self::new(dp.lambda, dp.p)
    }

    pub fn translated(self, z0: f64) -> Self {
        Soliton { z0, ..self }
    }

    /// `(p - 2)/2 · √Λ`, the decay rate of `log φ_Λ`'s slope.
    pub fn rate(&self) -> f64 {
        (self.p - 2.0) / 2.0 * self.lambda.sqrt()
    }

    pub fn peak(&self) -> f64 {
        (self.p * self.lambda / 2.0).powf(1.0 / (self.p - 2.0))
    }

    pub fn eval(&self, z: f64) -> f64 {
        let m = 2.0 / (self.p - 2.0);
        (self.peak().ln() - m * ln_cosh(self.rate() * (z - self.z0))).exp()
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let m = 2.0 / (self.p - 2.0);
        let c = self.rate();
        -m * c * (c * (z - self.z0)).tanh() * self.eval(z)
    }

    /// Distance from the centre at which `φ/φ(z₀)` drops to `tol`.
    pub fn tail_half_length(&self, tol: f64) -> f64 {
        let m = 2.0 / (self.p - 2.0);
        tol.powf(-1.0 / m).acosh() / self.rate()
    }
}

/// Relative tail at the ends of default truncations.
pub const TAIL: f64 = 1e-10;

/// `z`-step of [`soliton_check_grid`] in units of `1/√Λ`.
pub const CHECK_STEP: f64 = 0.005;

/// Smallest `s` of [`profile_check_grid`]. The `s⁻²` in `𝓛` amplifies
/// roundoff as `ε/(h s)²`; from here on it stays near `1e-9`.
pub const CHECK_S_MIN: f64 = 0.3;

/// Line grid (angular variable dropped) for residuals of `φ_Λ`: truncated
/// where the tail reaches [`TAIL`], step [`CHECK_STEP`]`/√Λ`.
pub fn soliton_check_grid(dp: &DerivedParams) -> Result<CylinderGrid> {
    let sol = Soliton::from_params(dp)?;
    let z = sol.tail_half_length(TAIL);
    let nz = (2.0 * z * dp.lambda.sqrt() / CHECK_STEP).ceil() as usize + 1;
    CylinderGrid::new(z, nz, SphereGrid::point(dp.d)?)
}

/// Radial grid for residuals of the normalized profile: from
/// [`CHECK_S_MIN`] to where `u/u(0)` reaches [`TAIL`], with log-step
/// `min(0.0025, 0.02/(n-2))` since `u ~ s^{-(n-2)}` steepens with `n`.
pub fn profile_check_grid(dp: &DerivedParams) -> Result<WeightedGrid> {
    let prof = normalized_radial(dp);
    let s_max = ((TAIL.powf(-2.0 / (dp.n - 2.0)) - 1.0) / prof.b_coef).sqrt();
    let h = 0.0025f64.min(0.02 / (dp.n - 2.0));
    let ns = ((s_max / CHECK_S_MIN).ln() / h).ceil() as usize + 1;
    let rg = RadialGrid::new(dp.n, dp.alpha, CHECK_S_MIN, s_max, ns)?;
    Ok(WeightedGrid::new(rg, SphereGrid::point(dp.d)?))
}

pub fn eval_soliton(sol: &Soliton, z: f64) -> f64 {
    sol.eval(z)
}

/// `v⋆(t; s) = t^{-n} (c⋆ + s²/(2(n-1)α² t²))^{-n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilar {
    pub c_star: f64,
    pub n: f64,
    pub alpha: f64,
}

impl SelfSimilar {
    pub fn new(c_star: f64, n: f64, alpha: f64) -> Result<Self> {
        if !(c_star > 0.0 && n > 1.0 && alpha > 0.0) {
            return domain(format!(
                "self-similar solution needs c⋆ > 0, n > 1, α > 0 (got {c_star}, {n}, {alpha})"
            ));
        }
        Ok(SelfSimilar { c_star, n, alpha })
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        if !(t > 0.0) {
            return domain(format!("self-similar solution needs t > 0, got {t}"));
        }
        let k = 2.0 * (self.n - 1.0) * self.alpha * self.alpha;
        Ok(t.powf(-self.n) * (self.c_star + s * s / (k * t * t)).powf(-self.n))
    }

    /// `𝗉⋆ = v⋆^{-1/n} = c⋆ t + s²/(2(n-1)α² t)`.
    pub fn pressure(&self, t: f64, s: f64) -> Result<f64> {
        if !(t > 0.0) {
            return domain(format!("self-similar solution needs t > 0, got {t}"));
        }
        let k = 2.0 * (self.n - 1.0) * self.alpha * self.alpha;
        Ok(self.c_star * t + s * s / (k * t))
    }
}

pub fn eval_self_similar(ss: &SelfSimilar, t: f64, s: f64) -> Result<f64> {
    ss.eval(t, s)
}

fn check_radii(radii: &[f64], field: &Field) -> Result<()> {
    if radii.len() != field.rows {
        return Err(CknError::Grid(format!(
            "{} radii for a field with {} rows",
            radii.len(),
            field.rows
        )));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return domain(format!("non-positive radius {r}"));
    }
    Ok(())
}

/// `φ(z, ω) = r^{a_c - a} w(r, ω)` with `z = log r`. Returns the `z` nodes
/// and the transformed field.
pub fn emden_fowler(radii: &[f64], w: &Field, a: f64, a_c: f64) -> Result<(Vec<f64>, Field)> {
    check_radii(radii, w)?;
    let mut phi = w.clone();
    for (i, r) in radii.iter().enumerate() {
        let k = r.powf(a_c - a);
        for j in 0..w.cols {
            phi.values[i * w.cols + j] *= k;
        }
    }
    Ok((radii.iter().map(|r| r.ln()).collect(), phi))
}

/// Inverse of [`emden_fowler`]: `w(r, ω) = r^{a - a_c} φ(log r, ω)`.
pub fn emden_fowler_inverse(z: &[f64], phi: &Field, a: f64, a_c: f64) -> Result<(Vec<f64>, Field)> {
    let radii: Vec<f64> = z.iter().map(|z| z.exp()).collect();
    check_radii(&radii, phi)?;
    let mut w = phi.clone();
    for (i, r) in radii.iter().enumerate() {
        let k = r.powf(a - a_c);
        for j in 0..phi.cols {
            w.values[i * phi.cols + j] *= k;
        }
    }
    Ok((radii, w))
}

/// `u(s, ω) = w(s^{1/α}, ω)`: the values are unchanged, the nodes move to
/// `s_i = r_i^α`.
pub fn dilation_change(radii: &[f64], w: &Field, alpha: f64) -> Result<(Vec<f64>, Field)> {
    check_radii(radii, w)?;
    if !(alpha > 0.0) {
        return domain(format!("alpha = {alpha} must be positive"));
    }
    Ok((radii.iter().map(|r| r.powf(alpha)).collect(), w.clone()))
}

pub fn dilation_change_inverse(s: &[f64], u: &Field, alpha: f64) -> Result<(Vec<f64>, Field)> {
    dilation_change(s, u, 1.0 / alpha)
}

/// Line integrals `(∫φ'², ∫φ², ∫φ^p)` of a soliton over `[z₀ - Z, z₀ + Z]`.
pub fn soliton_integrals(sol: &Soliton, half_length: f64) -> Result<[f64; 3]> {
    let (lo, hi) = (sol.z0 - half_length, sol.z0 + half_length);
    let tol = 1e-14 * sol.peak().powf(sol.p.max(2.0)).max(1.0);
    let panels = 20_000;
    let grad = integrate_adaptive(|z| sol.derivative(z).powi(2), lo, hi, tol, panels)?;
    let mass = integrate_adaptive(|z| sol.eval(z).powi(2), lo, hi, tol, panels)?;
    let lp = integrate_adaptive(|z| sol.eval(z).powf(sol.p), lo, hi, tol, panels)?;
    Ok([grad, mass, lp])
}

/// Cylinder quotient of a soliton on `R × S^{d-1}`:
/// `(‖φ'‖² + Λ‖φ‖²)|S^{d-1}| / (‖φ‖_p² |S^{d-1}|^{2/p})`.
pub fn soliton_quotient(sol: &Soliton, d: u32, half_length: f64) -> Result<f64> {
    let [grad, mass, lp] = soliton_integrals(sol, half_length)?;
    let vol = unit_sphere_volume(d - 1);
    Ok((grad + sol.lambda * mass) * vol.powf(1.0 - 2.0 / sol.p) / lp.powf(2.0 / sol.p))
}

/// Truncation used for soliton quadrature: `Z = 30/√Λ`.
pub fn default_half_length(lambda: f64) -> f64 {
    30.0 / lambda.sqrt()
}

/// Value of the cylinder quotient at `φ_Λ`. Equals the best constant when
/// the parameters are outside the Felli–Schneider region.
pub fn radial_constant(dp: &DerivedParams) -> Result<f64> {
    let sol = Soliton::from_params(dp)?;
    soliton_quotient(&sol, dp.d, default_half_length(dp.lambda))
}

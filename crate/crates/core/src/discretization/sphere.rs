//! Quadrature and calculus on `S^{d-1}`.
//!
//! * `d = 2`: the circle, uniform nodes, Fourier differentiation.
//! * `d = 3`: the two-sphere, Gauss–Legendre nodes in `μ = cos θ` times
//!   uniform azimuth nodes. No node sits at a pole.
//! * any `d`: a single "point" node carrying the full volume, for fields
//!   that are constant on the sphere.
//!
//! Latitude derivatives on `S²` use the parity of each azimuthal Fourier
//! mode: a smooth function's `m`-th mode is `sin^{|m|}θ · P(μ)` with `P` a
//! polynomial, so even modes are differentiated as polynomials in `μ` and
//! odd modes after dividing out one factor of `sin θ`. On band-limited
//! functions this is exact.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{CknError, Result};
use crate::quadrature::{gauss_legendre, unit_sphere_volume};

/// Discretization of `S^{d-1}`.
#[derive(Clone)]
pub enum SphereGrid {
    Point { d: u32 },
    Circle(CircleGrid),
    TwoSphere(TwoSphereGrid),
}

impl std::fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SphereGrid({})", self.describe())
    }
}

impl SphereGrid {
    /// Single node carrying `|S^{d-1}|`, for `ω`-independent fields.
    pub fn point(d: u32) -> Result<Self> {
        if d < 2 {
            return Err(CknError::Grid(format!("d = {d} must be at least 2")));
        }
        Ok(SphereGrid::Point { d })
    }

    pub fn circle(n: usize) -> Result<Self> {
        CircleGrid::new(n).map(SphereGrid::Circle)
    }

    pub fn two_sphere(nmu: usize, nphi: usize) -> Result<Self> {
        TwoSphereGrid::new(nmu, nphi).map(SphereGrid::TwoSphere)
    }

    pub fn d(&self) -> u32 {
        match self {
            SphereGrid::Point { d } => *d,
            SphereGrid::Circle(_) => 2,
            SphereGrid::TwoSphere(_) => 3,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SphereGrid::Point { .. } => 1,
            SphereGrid::Circle(c) => c.n,
            SphereGrid::TwoSphere(s) => s.nmu * s.nphi,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_point(&self) -> bool {
        matches!(self, SphereGrid::Point { .. })
    }

    pub fn volume(&self) -> f64 {
        unit_sphere_volume(self.d() - 1)
    }

    pub fn weights(&self) -> Vec<f64> {
        match self {
            SphereGrid::Point { d } => vec![unit_sphere_volume(d - 1)],
            SphereGrid::Circle(c) => vec![2.0 * PI / c.n as f64; c.n],
            SphereGrid::TwoSphere(s) => s.weights.clone(),
        }
    }

    /// Node position as a unit vector of `R^3` (`R^2` embedded for the
    /// circle). The point sphere reports the north pole.
    pub fn unit_vector(&self, j: usize) -> [f64; 3] {
        match self {
            SphereGrid::Point { .. } => [0.0, 0.0, 1.0],
            SphereGrid::Circle(c) => {
                let t = c.theta(j);
                [t.cos(), t.sin(), 0.0]
            }
            SphereGrid::TwoSphere(s) => {
                let (i, k) = (j / s.nphi, j % s.nphi);
                let st = s.sin[i];
                let ph = s.phi(k);
                [st * ph.cos(), st * ph.sin(), s.mu[i]]
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SphereGrid::Point { d } => format!("point{d}"),
            SphereGrid::Circle(c) => format!("circle{}", c.n),
            SphereGrid::TwoSphere(s) => format!("s2:{}x{}", s.nmu, s.nphi),
        }
    }

    /// Inverse of [`describe`](Self::describe).
    pub fn from_description(desc: &str) -> Result<Self> {
        let bad = || CknError::Parse(format!("unknown sphere descriptor `{desc}`"));
        if let Some(rest) = desc.strip_prefix("point") {
            return SphereGrid::point(rest.parse().map_err(|_| bad())?);
        }
        if let Some(rest) = desc.strip_prefix("circle") {
            return SphereGrid::circle(rest.parse().map_err(|_| bad())?);
        }
        if let Some(rest) = desc.strip_prefix("s2:") {
            let (a, b) = rest.split_once('x').ok_or_else(bad)?;
            return SphereGrid::two_sphere(
                a.parse().map_err(|_| bad())?,
                b.parse().map_err(|_| bad())?,
            );
        }
        Err(bad())
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights().iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Laplace–Beltrami operator `Δ_ω`.
    pub fn laplace(&self, f: &[f64]) -> Vec<f64> {
        match self {
            SphereGrid::Point { .. } => vec![0.0; f.len()],
            SphereGrid::Circle(c) => c.second_derivative(f),
            SphereGrid::TwoSphere(s) => {
                let dv = s.derivatives(f);
                s.laplace_from(&dv)
            }
        }
    }

    /// `∇_ω f · ∇_ω g`.
    pub fn grad_dot(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        match self {
            SphereGrid::Point { .. } => vec![0.0; f.len()],
            SphereGrid::Circle(c) => {
                let ft = c.derivative(f);
                let gt = c.derivative(g);
                ft.iter().zip(&gt).map(|(a, b)| a * b).collect()
            }
            SphereGrid::TwoSphere(s) => {
                let (ft, fp) = s.first_derivatives(f);
                let (gt, gp) = s.first_derivatives(g);
                (0..f.len())
                    .map(|j| {
                        let st = s.sin[j / s.nphi];
                        ft[j] * gt[j] + fp[j] * gp[j] / (st * st)
                    })
                    .collect()
            }
        }
    }

    /// `|∇_ω f|²`.
    pub fn grad_sq(&self, f: &[f64]) -> Vec<f64> {
        match self {
            SphereGrid::Point { .. } => vec![0.0; f.len()],
            SphereGrid::Circle(c) => c.derivative(f).iter().map(|v| v * v).collect(),
            SphereGrid::TwoSphere(s) => {
                let (ft, fp) = s.first_derivatives(f);
                (0..f.len())
                    .map(|j| {
                        let st = s.sin[j / s.nphi];
                        ft[j] * ft[j] + fp[j] * fp[j] / (st * st)
                    })
                    .collect()
            }
        }
    }

    /// Discrete Dirichlet energy `Σ_j w_j |∇_ω f|²_j` and its exact gradient
    /// with respect to the nodal values.
    pub fn energy_with_gradient(&self, f: &[f64]) -> (f64, Vec<f64>) {
        match self {
            SphereGrid::Point { .. } => (0.0, vec![0.0; f.len()]),
            SphereGrid::Circle(c) => {
                // `f·(-f'')` rather than `|f'|²`, so the Nyquist mode keeps
                // its energy.
                let w = 2.0 * PI / c.n as f64;
                let neg: Vec<f64> = c.second_derivative(f).into_iter().map(|v| -v).collect();
                let e = w * f.iter().zip(&neg).map(|(a, b)| a * b).sum::<f64>();
                let g = neg.iter().map(|v| 2.0 * w * v).collect();
                (e, g)
            }
            SphereGrid::TwoSphere(s) => s.energy_with_gradient(f),
        }
    }

    pub fn as_two_sphere(&self) -> Result<&TwoSphereGrid> {
        match self {
            SphereGrid::TwoSphere(s) => Ok(s),
            other => Err(CknError::Unsupported(format!(
                "operation needs the two-sphere (d = 3), got {}",
                other.describe()
            ))),
        }
    }
}

fn planner_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

/// Signed wavenumber of FFT bin `k`, with the Nyquist bin reported as `None`.
fn wavenumber(k: usize, n: usize) -> Option<f64> {
    if 2 * k == n {
        None
    } else if 2 * k < n {
        Some(k as f64)
    } else {
        Some(k as f64 - n as f64)
    }
}

#[derive(Clone)]
pub struct CircleGrid {
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl CircleGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(CknError::Grid(format!("circle needs at least 4 nodes, got {n}")));
        }
        let (fwd, inv) = planner_pair(n);
        Ok(CircleGrid { n, fwd, inv })
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n as f64
    }

    fn spectral(&self, f: &[f64], mult: impl Fn(usize) -> Complex64) -> Vec<f64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            *c *= mult(k);
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        self.spectral(f, |k| match wavenumber(k, n) {
            Some(m) => Complex64::new(0.0, m),
            None => Complex64::new(0.0, 0.0),
        })
    }

    pub fn second_derivative(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        self.spectral(f, |k| {
            let m = wavenumber(k, n).unwrap_or(n as f64 / 2.0);
            Complex64::new(-m * m, 0.0)
        })
    }
}

/// Coordinate derivatives of a scalar on `S²` at the grid nodes.
#[derive(Debug, Clone)]
pub struct S2Derivatives {
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub tt: Vec<f64>,
    pub tp: Vec<f64>,
    pub pp: Vec<f64>,
}

/// Components `(H_θθ, H_θφ, H_φφ)` of a symmetric 2-tensor in the
/// coordinate frame of `S²`, metric `diag(1, sin²θ)`.
#[derive(Debug, Clone)]
pub struct S2Tensor {
    pub tt: Vec<f64>,
    pub tp: Vec<f64>,
    pub pp: Vec<f64>,
}

#[derive(Clone)]
pub struct TwoSphereGrid {
    pub nmu: usize,
    pub nphi: usize,
    /// `cos θ` at the latitude nodes, increasing.
    pub mu: Vec<f64>,
    pub sin: Vec<f64>,
    pub cot: Vec<f64>,
    pub gl_weights: Vec<f64>,
    weights: Vec<f64>,
    /// `∂_θ` on even-parity modes, row-major `nmu × nmu`.
    d_even: Vec<f64>,
    /// `∂_θ` on odd-parity modes.
    d_odd: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl TwoSphereGrid {
    pub fn new(nmu: usize, nphi: usize) -> Result<Self> {
        if nmu < 2 || nphi < 4 {
            return Err(CknError::Grid(format!(
                "two-sphere grid {nmu}x{nphi} too small (need nmu >= 2, nphi >= 4)"
            )));
        }
        let (mu, gl_weights) = gauss_legendre(nmu);
        let sin: Vec<f64> = mu.iter().map(|m| (1.0 - m * m).sqrt()).collect();
        let cot: Vec<f64> = mu.iter().zip(&sin).map(|(m, s)| m / s).collect();
        let dphi = 2.0 * PI / nphi as f64;
        let weights = gl_weights
            .iter()
            .flat_map(|w| std::iter::repeat(w * dphi).take(nphi))
            .collect();

        // Lagrange differentiation in μ at the Gauss nodes (barycentric form).
        let bary: Vec<f64> = (0..nmu)
            .map(|j| {
                1.0 / (0..nmu)
                    .filter(|&k| k != j)
                    .map(|k| mu[j] - mu[k])
                    .product::<f64>()
            })
            .collect();
        let mut dmu = vec![0.0; nmu * nmu];
        for i in 0..nmu {
            let mut diag = 0.0;
            for j in 0..nmu {
                if i != j {
                    let v = bary[j] / bary[i] / (mu[i] - mu[j]);
                    dmu[i * nmu + j] = v;
                    diag -= v;
                }
            }
            dmu[i * nmu + i] = diag;
        }
        // Even modes are polynomials P(μ): ∂_θ P = -sin θ · P'(μ).
        // Odd modes are sin θ · Q(μ): ∂_θ = μ Q - (1 - μ²) Q'(μ), Q = f / sin θ.
        let mut d_even = vec![0.0; nmu * nmu];
        let mut d_odd = vec![0.0; nmu * nmu];
        for i in 0..nmu {
            for j in 0..nmu {
                d_even[i * nmu + j] = -sin[i] * dmu[i * nmu + j];
                let mut v = -(1.0 - mu[i] * mu[i]) * dmu[i * nmu + j];
                if i == j {
                    v += mu[i];
                }
                d_odd[i * nmu + j] = v / sin[j];
            }
        }
        let (fwd, inv) = planner_pair(nphi);
        Ok(TwoSphereGrid {
            nmu,
            nphi,
            mu,
            sin,
            cot,
            gl_weights,
            weights,
            d_even,
            d_odd,
            fwd,
            inv,
        })
    }

    pub fn phi(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.nphi as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.mu[i].acos()
    }

    fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for row in buf.chunks_mut(self.nphi) {
            self.fwd.process(row);
        }
        buf
    }

    fn inverse(&self, mut c: Vec<Complex64>) -> Vec<f64> {
        for row in c.chunks_mut(self.nphi) {
            self.inv.process(row);
        }
        let scale = 1.0 / self.nphi as f64;
        c.iter().map(|z| z.re * scale).collect()
    }

    fn abs_mode(&self, k: usize) -> usize {
        k.min(self.nphi - k)
    }

    /// Applies the latitude derivative mode by mode. `shift = 1` flips the
    /// parity (input is itself a θ-derivative of a scalar).
    fn theta_modes(&self, c: &[Complex64], shift: usize, transpose: bool) -> Vec<Complex64> {
        let (nmu, nphi) = (self.nmu, self.nphi);
        let mut out = vec![Complex64::new(0.0, 0.0); c.len()];
        for k in 0..nphi {
            let m = if (self.abs_mode(k) + shift) % 2 == 0 {
                &self.d_even
            } else {
                &self.d_odd
            };
            for i in 0..nmu {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..nmu {
                    let a = if transpose { m[j * nmu + i] } else { m[i * nmu + j] };
                    acc += c[j * nphi + k] * a;
                }
                out[i * nphi + k] = acc;
            }
        }
        out
    }

    fn phi_modes(&self, c: &[Complex64], order: u32) -> Vec<Complex64> {
        let nphi = self.nphi;
        c.iter()
            .enumerate()
            .map(|(idx, z)| {
                let k = idx % nphi;
                let mult = match (order, wavenumber(k, nphi)) {
                    (1, Some(m)) => Complex64::new(0.0, m),
                    (1, None) => Complex64::new(0.0, 0.0),
                    (_, m) => {
                        let m = m.unwrap_or(nphi as f64 / 2.0);
                        Complex64::new(-m * m, 0.0)
                    }
                };
                z * mult
            })
            .collect()
    }

    pub fn first_derivatives(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c = self.forward(f);
        let ct = self.theta_modes(&c, 0, false);
        let cp = self.phi_modes(&c, 1);
        (self.inverse(ct), self.inverse(cp))
    }

    pub fn derivatives(&self, f: &[f64]) -> S2Derivatives {
        let c = self.forward(f);
        let ct = self.theta_modes(&c, 0, false);
        let ctt = self.theta_modes(&ct, 1, false);
        let ctp = self.phi_modes(&ct, 1);
        let cp = self.phi_modes(&c, 1);
        let cpp = self.phi_modes(&c, 2);
        S2Derivatives {
            t: self.inverse(ct),
            p: self.inverse(cp),
            tt: self.inverse(ctt),
            tp: self.inverse(ctp),
            pp: self.inverse(cpp),
        }
    }

    fn sin_at(&self, j: usize) -> f64 {
        self.sin[j / self.nphi]
    }

    fn cot_at(&self, j: usize) -> f64 {
        self.cot[j / self.nphi]
    }

    pub fn laplace_from(&self, dv: &S2Derivatives) -> Vec<f64> {
        (0..dv.t.len())
            .map(|j| {
                let s = self.sin_at(j);
                dv.tt[j] + self.cot_at(j) * dv.t[j] + dv.pp[j] / (s * s)
            })
            .collect()
    }

    /// Covariant Hessian `∇²f` in coordinate components.
    pub fn hessian_from(&self, dv: &S2Derivatives) -> S2Tensor {
        let n = dv.t.len();
        let mut h = S2Tensor {
            tt: dv.tt.clone(),
            tp: vec![0.0; n],
            pp: vec![0.0; n],
        };
        for j in 0..n {
            let s = self.sin_at(j);
            let c = s * self.cot_at(j);
            h.tp[j] = dv.tp[j] - self.cot_at(j) * dv.p[j];
            h.pp[j] = dv.pp[j] + s * c * dv.t[j];
        }
        h
    }

    pub fn hessian(&self, f: &[f64]) -> S2Tensor {
        self.hessian_from(&self.derivatives(f))
    }

    /// Full contraction `A_{ij} B^{ij}` with the round metric.
    pub fn contract(&self, a: &S2Tensor, b: &S2Tensor) -> Vec<f64> {
        (0..a.tt.len())
            .map(|j| {
                let s2 = self.sin_at(j).powi(2);
                a.tt[j] * b.tt[j] + 2.0 * a.tp[j] * b.tp[j] / s2 + a.pp[j] * b.pp[j] / (s2 * s2)
            })
            .collect()
    }

    /// `sin²θ` at every node, i.e. the `g_φφ` metric component.
    pub fn g_phiphi(&self) -> Vec<f64> {
        (0..self.nmu * self.nphi)
            .map(|j| self.sin_at(j).powi(2))
            .collect()
    }

    fn energy_with_gradient(&self, f: &[f64]) -> (f64, Vec<f64>) {
        let c = self.forward(f);
        let ft = self.inverse(self.theta_modes(&c, 0, false));
        // The φ part is `f·(-∂_φφ f)/sin²θ`, which keeps the Nyquist mode;
        // `|∂_φ f|²` would give it zero energy.
        let fpp = self.inverse(self.phi_modes(&c, 2));
        let mut e = 0.0;
        let mut wt = vec![0.0; f.len()];
        let mut g = vec![0.0; f.len()];
        for j in 0..f.len() {
            let s2 = self.sin_at(j).powi(2);
            let w = self.weights[j];
            e += w * (ft[j] * ft[j] - f[j] * fpp[j] / s2);
            wt[j] = 2.0 * w * ft[j];
            g[j] = -2.0 * w * fpp[j] / s2;
        }
        // ∂_θ^T through the same mode-wise matrices, transposed.
        let gt = self.inverse(self.theta_modes(&self.forward(&wt), 0, true));
        for (gj, t) in g.iter_mut().zip(&gt) {
            *gj += t;
        }
        (e, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s2(nmu: usize, nphi: usize) -> SphereGrid {
        SphereGrid::two_sphere(nmu, nphi).unwrap()
    }

    fn sample(g: &SphereGrid, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..g.len()).map(|j| f(g.unit_vector(j))).collect()
    }

    /// Harmonic homogeneous polynomials of degree ℓ (restricted to S² they
    /// are spherical harmonics).
    fn harmonics() -> Vec<(u32, Box<dyn Fn([f64; 3]) -> f64>)> {
        vec![
            (1, Box::new(|x: [f64; 3]| x[2])),
            (1, Box::new(|x: [f64; 3]| x[0] + 2.0 * x[1])),
            (2, Box::new(|x: [f64; 3]| x[0] * x[1])),
            (2, Box::new(|x: [f64; 3]| 3.0 * x[2] * x[2] - 1.0)),
            (2, Box::new(|x: [f64; 3]| x[1] * x[2])),
            (3, Box::new(|x: [f64; 3]| x[2] * (5.0 * x[2] * x[2] - 3.0))),
            (3, Box::new(|x: [f64; 3]| x[0] * (x[0] * x[0] - 3.0 * x[1] * x[1]))),
            (4, Box::new(|x: [f64; 3]| x[0] * x[1] * (x[0] * x[0] - x[1] * x[1]))),
            (
                4,
                Box::new(|x: [f64; 3]| {
                    35.0 * x[2].powi(4) - 30.0 * x[2] * x[2] + 3.0
                }),
            ),
        ]
    }

    #[test]
    fn two_sphere_eigenfunctions() {
        let g = s2(12, 16);
        for (l, y) in harmonics() {
            let f = sample(&g, &y);
            let lf = g.laplace(&f);
            let ev = -f64::from(l * (l + 1));
            for j in 0..f.len() {
                assert!((lf[j] - ev * f[j]).abs() < 1e-10, "l={l}: {} vs {}", lf[j], ev * f[j]);
            }
        }
    }

    #[test]
    fn circle_eigenfunctions() {
        let g = SphereGrid::circle(32).unwrap();
        let f = sample(&g, |x| 3.0 * x[0] * x[0] * x[1] - x[1].powi(3));
        let lf = g.laplace(&f);
        for j in 0..f.len() {
            assert!((lf[j] + 9.0 * f[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn quadrature_integrates_harmonic_products() {
        let g = s2(10, 20);
        let total: f64 = g.weights().iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-12);
        let hs = harmonics();
        for (la, a) in &hs {
            for (lb, b) in &hs {
                if la + lb > 19 {
                    continue;
                }
                let fa = sample(&g, a);
                let fb = sample(&g, b);
                let prod: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
                let q = g.integrate(&prod);
                if la != lb {
                    assert!(q.abs() < 1e-12, "orthogonality {la} {lb}: {q}");
                }
            }
        }
        // ∫ z² dω = 4π/3
        let f = sample(&g, |x| x[2] * x[2]);
        assert!((g.integrate(&f) - 4.0 * PI / 3.0).abs() < 1e-12);
        let f = sample(&g, |x| x[2]);
        assert!(g.integrate(&f).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_cos_theta() {
        let g = s2(10, 8);
        let f = sample(&g, |x| x[2]);
        let gs = g.grad_sq(&f);
        for j in 0..f.len() {
            let z = g.unit_vector(j)[2];
            assert!((gs[j] - (1.0 - z * z)).abs() < 1e-10);
        }
    }

    #[test]
    fn hessian_of_first_harmonic() {
        let g = s2(10, 8);
        let s = g.as_two_sphere().unwrap();
        let f = sample(&g, |x| x[2]);
        let h = s.hessian(&f);
        let gpp = s.g_phiphi();
        for j in 0..f.len() {
            assert!((h.tt[j] + f[j]).abs() < 1e-10);
            assert!(h.tp[j].abs() < 1e-10);
            assert!((h.pp[j] + f[j] * gpp[j]).abs() < 1e-10);
        }
        // trace equals the Laplacian for a generic band-limited function
        let f = sample(&g, |x| x[0] * x[1] + 0.3 * x[2].powi(3) + x[1]);
        let h = s.hessian(&f);
        let lf = g.laplace(&f);
        for j in 0..f.len() {
            let tr = h.tt[j] + h.pp[j] / gpp[j];
            assert!((tr - lf[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn constants_are_annihilated() {
        for g in [s2(6, 8), SphereGrid::circle(8).unwrap(), SphereGrid::point(5).unwrap()] {
            let f = vec![2.5; g.len()];
            assert!(g.laplace(&f).iter().all(|v| v.abs() < 1e-12));
            assert!(g.grad_sq(&f).iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn energy_gradient_matches_finite_differences() {
        for g in [s2(6, 8), SphereGrid::circle(12).unwrap()] {
            let f = sample(&g, |x| 1.0 + 0.3 * x[0] + 0.2 * x[1] * x[2] + 0.1 * x[2].powi(5));
            let (e, grad) = g.energy_with_gradient(&f);
            let ws = g.weights();
            let e_direct: f64 = g.grad_sq(&f).iter().zip(&ws).map(|(a, w)| a * w).sum();
            assert!((e - e_direct).abs() < 1e-12);
            for j in [0, 3, g.len() / 2, g.len() - 1] {
                let eps = 1e-6;
                let mut fp = f.clone();
                fp[j] += eps;
                let mut fm = f.clone();
                fm[j] -= eps;
                let num = (g.energy_with_gradient(&fp).0 - g.energy_with_gradient(&fm).0) / (2.0 * eps);
                assert!((num - grad[j]).abs() < 1e-6 * (1.0 + num.abs()), "{num} vs {}", grad[j]);
            }
        }
    }

    #[test]
    fn sawtooth_keeps_its_energy() {
        for (g, nyq) in [(s2(6, 12), 6.0), (SphereGrid::circle(10).unwrap(), 5.0)] {
            let nphi = if g.d() == 2 { 10 } else { 12 };
            let f: Vec<f64> = (0..g.len()).map(|j| if (j % nphi) % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let (e, _) = g.energy_with_gradient(&f);
            // Exact on the circle; on the sphere ∫ m²/sin²θ picks up the
            // Gauss weights, still bounded below by m² times the area.
            let norm = g.integrate(&f.iter().map(|v| v * v).collect::<Vec<_>>());
            assert!(e >= nyq * nyq * norm * (1.0 - 1e-12), "{e} vs {}", nyq * nyq * norm);
        }
    }

    #[test]
    fn laplace_is_self_adjoint_on_band_limited_fields() {
        let g = s2(12, 16);
        let f = sample(&g, |x| x[0] * x[1] + x[2].powi(3));
        let h = sample(&g, |x| x[1] + x[0] * x[2] * x[2]);
        let a: f64 = g.integrate(&g.laplace(&f).iter().zip(&h).map(|(a, b)| a * b).collect::<Vec<_>>());
        let b: f64 = g.integrate(&g.laplace(&h).iter().zip(&f).map(|(a, b)| a * b).collect::<Vec<_>>());
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn descriptor_round_trip() {
        for g in [s2(6, 8), SphereGrid::circle(12).unwrap(), SphereGrid::point(4).unwrap()] {
            let back = SphereGrid::from_description(&g.describe()).unwrap();
            assert_eq!(back.describe(), g.describe());
            assert_eq!(back.len(), g.len());
        }
        assert!(SphereGrid::from_description("torus").is_err());
    }
}

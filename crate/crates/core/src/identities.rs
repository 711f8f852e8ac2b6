//! Pointwise and integral identities behind the monotonicity argument:
//! the weighted Hessian decomposition on `R₊ × S^{d-1}`, its angular sum of
//! squares on `S²`, the Bochner formula on spheres, and the Euclidean
//! trace-free Hessian identity.
//!
//! Test fields are band-limited: polynomials of bounded degree in the
//! embedding coordinates of `ω`, so spectral angular derivatives are exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{Field, RadialGrid, S2Tensor, SphereGrid, TwoSphereGrid, WeightedGrid};
use crate::error::{CknError, Result};
use crate::params::DerivedParams;

/// Minimum number of nodes between a sample window and either end of the
/// radial line; composed operators widen the stencil to about this much.
pub const WINDOW_MARGIN: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

impl Term {
    fn new(name: &str, value: f64) -> Self {
        Term {
            name: name.to_string(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: String,
    pub seed: Option<u64>,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs|`, or the sup norm of the pointwise difference.
    pub residual: f64,
    /// `residual` over the size of the two sides (0 when both vanish).
    pub relative: f64,
    pub term_breakdown: Vec<Term>,
}

impl IdentityReport {
    fn new(identity: &str, lhs: f64, rhs: f64, residual: f64, terms: Vec<Term>) -> Self {
        let size = lhs.abs().max(rhs.abs());
        IdentityReport {
            identity: identity.to_string(),
            seed: None,
            lhs,
            rhs,
            residual,
            relative: if size > 0.0 { residual / size } else { 0.0 },
            term_breakdown: terms,
        }
    }

    fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

fn grid_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CknError::Grid(msg.into()))
}

fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn row_map(f: &Field, op: impl Fn(&[f64]) -> Vec<f64>) -> Field {
    let mut values = Vec::with_capacity(f.len());
    for i in 0..f.rows {
        values.extend(op(f.row(i)));
    }
    Field {
        values,
        rows: f.rows,
        cols: f.cols,
    }
}

/// Row indices of the nodes with `s` in `[lo, hi]`.
fn window_rows(radial: &RadialGrid, window: (f64, f64)) -> Result<std::ops::Range<usize>> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi >= lo) {
        return grid_err(format!("sample window [{lo}, {hi}] is not a positive interval"));
    }
    let s = radial.s_nodes();
    let first = s.iter().position(|&x| x >= lo).unwrap_or(s.len());
    let end = s.iter().rposition(|&x| x <= hi).map_or(0, |i| i + 1);
    if first >= end {
        return grid_err(format!("sample window [{lo}, {hi}] contains no nodes"));
    }
    if first < WINDOW_MARGIN || end + WINDOW_MARGIN > s.len() {
        return grid_err(format!(
            "sample window [{lo}, {hi}] is within {WINDOW_MARGIN} nodes of the grid boundary [{}, {}]",
            s[0],
            s[s.len() - 1]
        ));
    }
    Ok(first..end)
}

/// Both sides of the weighted Hessian decomposition,
///
/// `½𝓛|𝖣𝗉|² - 𝖣𝗉·𝖣𝓛𝗉 - (𝓛𝗉)²/n
///   = α⁴ (n-1)/n [𝗉'' - 𝗉'/s - Δ𝗉/(α²(n-1)s²)]²
///   + 2α²/s² |∇𝗉' - ∇𝗉/s|²
///   + s⁻⁴ [½Δ|∇𝗉|² - ∇𝗉·∇Δ𝗉 - (Δ𝗉)²/(n-1) - (n-2)α²|∇𝗉|²]`,
///
/// compared pointwise at the nodes with `s` in `window`. `lhs`/`rhs` are the
/// sup norms of the two sides there.
pub fn lemma_first_residual(
    pr: &Field,
    grid: &WeightedGrid,
    dp: &DerivedParams,
    window: (f64, f64),
) -> Result<IdentityReport> {
    let (n, alpha) = (grid.n(), grid.alpha());
    if (n - dp.n).abs() > 1e-12 * n || (alpha - dp.alpha).abs() > 1e-12 * alpha {
        return grid_err(format!(
            "grid built for n = {n}, α = {alpha}, parameters give n = {}, α = {}",
            dp.n, dp.alpha
        ));
    }
    let rows = window_rows(&grid.radial, window)?;
    pr.require_positive("pressure")?;
    let sph = &grid.sphere;
    let a2 = alpha * alpha;

    let lp = grid.op_l(pr)?;
    let lhs = grid
        .op_l(&grid.d_sq(pr)?)?
        .zip_map(&grid.d_dot(pr, &lp)?, |a, b| 0.5 * a - b)
        .zip_map(&lp, |a, l| a - l * l / n);

    let p1 = grid.d_s(pr)?;
    let p2 = grid.d_s(&p1)?;
    let lap = row_map(pr, |r| sph.laplace(r));
    let grad_sq = row_map(pr, |r| sph.grad_sq(r));
    let lap_grad_sq = row_map(&grad_sq, |r| sph.laplace(r));
    let grad_dot_lap = Field {
        values: (0..pr.rows)
            .flat_map(|i| sph.grad_dot(pr.row(i), lap.row(i)))
            .collect(),
        rows: pr.rows,
        cols: pr.cols,
    };

    let cols = pr.cols;
    let (mut sup_l, mut sup_r, mut res) = (0.0f64, 0.0f64, 0.0f64);
    let (mut t1, mut t2, mut t3) = (0.0f64, 0.0f64, 0.0f64);
    for i in rows {
        let s = grid.radial.s(i);
        let mixed: Vec<f64> = (0..cols)
            .map(|j| p1.at(i, j) - pr.at(i, j) / s)
            .collect();
        let mixed_sq = sph.grad_sq(&mixed);
        for j in 0..cols {
            let k = i * cols + j;
            let br = p2.values[k] - p1.values[k] / s - lap.values[k] / (a2 * (n - 1.0) * s * s);
            let a = a2 * a2 * (n - 1.0) / n * br * br;
            let b = 2.0 * a2 / (s * s) * mixed_sq[j];
            let c = (0.5 * lap_grad_sq.values[k]
                - grad_dot_lap.values[k]
                - lap.values[k].powi(2) / (n - 1.0)
                - (n - 2.0) * a2 * grad_sq.values[k])
                / s.powi(4);
            let r = a + b + c;
            sup_l = sup_l.max(lhs.values[k].abs());
            sup_r = sup_r.max(r.abs());
            res = res.max((lhs.values[k] - r).abs());
            t1 = t1.max(a);
            t2 = t2.max(b);
            t3 = t3.max(c.abs());
        }
    }
    Ok(IdentityReport::new(
        "lemma-first",
        sup_l,
        sup_r,
        res,
        vec![
            Term::new("radial_square", t1),
            Term::new("mixed_square", t2),
            Term::new("angular_bracket", t3),
        ],
    ))
}

/// Pointwise angular quantities of `𝗉` on `S²`.
struct S2Calc<'a> {
    g: &'a TwoSphereGrid,
    pt: Vec<f64>,
    pp: Vec<f64>,
    lap: Vec<f64>,
    hess: S2Tensor,
    grad_sq: Vec<f64>,
    /// `½Δ|∇𝗉|²`.
    half_lap_grad_sq: Vec<f64>,
    /// `∇𝗉·∇Δ𝗉`.
    grad_dot_lap: Vec<f64>,
}

impl<'a> S2Calc<'a> {
    fn new(g: &'a TwoSphereGrid, f: &[f64]) -> Self {
        let dv = g.derivatives(f);
        let lap = g.laplace_from(&dv);
        let hess = g.hessian_from(&dv);
        let s2 = g.g_phiphi();
        let grad_sq: Vec<f64> = (0..f.len()).map(|j| dv.t[j].powi(2) + dv.p[j].powi(2) / s2[j]).collect();
        let lap_grad_sq = g.laplace_from(&g.derivatives(&grad_sq));
        let (lt, lph) = g.first_derivatives(&lap);
        let grad_dot_lap = (0..f.len())
            .map(|j| dv.t[j] * lt[j] + dv.p[j] * lph[j] / s2[j])
            .collect();
        S2Calc {
            g,
            pt: dv.t,
            pp: dv.p,
            lap,
            hess,
            grad_sq,
            half_lap_grad_sq: lap_grad_sq.iter().map(|x| 0.5 * x).collect(),
            grad_dot_lap,
        }
    }

    fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let g = self.g;
        let dphi = 2.0 * std::f64::consts::PI / g.nphi as f64;
        (0..g.nmu * g.nphi).map(|j| g.gl_weights[j / g.nphi] * dphi * f(j)).sum()
    }
}

fn two_sphere<'a>(sphere: &'a SphereGrid, what: &str) -> Result<&'a TwoSphereGrid> {
    sphere.as_two_sphere().map_err(|_| {
        CknError::Grid(format!("{what} needs the two-sphere (d = 3), got {}", sphere.describe()))
    })
}

/// Coefficients of the three squares in the angular sum-of-squares identity
/// on `S^{d-1}`: `(c_L, κ, c_4, c_2)` with the first square
/// `c_L ‖𝖫𝗉 - κ 𝖬𝗉‖²`.
pub fn lemma_second_coefficients(d: f64, n: f64, alpha: f64) -> (f64, f64, f64, f64) {
    let c_l = (n - 2.0) * (d - 1.0) / ((n - 1.0) * (d - 2.0));
    let kappa = 3.0 * (n - 1.0) * (n - d) / (2.0 * (n - 2.0) * (d + 1.0));
    let c_4 = (n - d) / (2.0 * (d + 1.0))
        * ((n + 3.0) / 2.0 + 3.0 * (n - 1.0) * (n + 1.0) * (d - 2.0) / (2.0 * (n - 2.0) * (d + 1.0)));
    let alpha_fs_sq = (d - 1.0) / (n - 1.0);
    let c_2 = (n - 2.0) * (alpha_fs_sq - alpha * alpha);
    (c_l, kappa, c_4, c_2)
}

/// `∫[½Δ|∇𝗉|² - ∇𝗉·∇Δ𝗉 - (Δ𝗉)²/(n-1) - (n-2)α²|∇𝗉|²] 𝗉^{1-n} dω` against the
/// three weighted squares, on `S²`.
pub fn lemma_second_check(pr: &[f64], sphere: &SphereGrid, n: f64, alpha: f64) -> Result<IdentityReport> {
    let g = two_sphere(sphere, "the angular sum of squares")?;
    if pr.len() != sphere.len() {
        return grid_err(format!("field has {} values, sphere has {}", pr.len(), sphere.len()));
    }
    if !(n > 3.0) {
        return Err(CknError::Domain(format!("n = {n} must exceed 3")));
    }
    if let Some(j) = pr.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(CknError::Positivity(format!("pressure: value {} at node {j}", pr[j])));
    }
    let d = 3.0;
    let c = S2Calc::new(g, pr);
    let s2 = g.g_phiphi();
    let w = |j: usize| pr[j].powf(1.0 - n);
    let (c_l, kappa, c_4, c_2) = lemma_second_coefficients(d, n, alpha);

    let lhs = c.integrate(|j| {
        (c.half_lap_grad_sq[j] - c.grad_dot_lap[j] - c.lap[j].powi(2) / (n - 1.0) - (n - 2.0) * alpha * alpha * c.grad_sq[j]) * w(j)
    });

    // 𝖫𝗉 - κ𝖬𝗉 in coordinate components, metric diag(1, sin²θ).
    let len = pr.len();
    let mut t = S2Tensor {
        tt: vec![0.0; len],
        tp: vec![0.0; len],
        pp: vec![0.0; len],
    };
    for j in 0..len {
        let tr = (c.lap[j] - kappa * c.grad_sq[j] / pr[j]) / (d - 1.0);
        t.tt[j] = c.hess.tt[j] - kappa * c.pt[j] * c.pt[j] / pr[j] - tr;
        t.tp[j] = c.hess.tp[j] - kappa * c.pt[j] * c.pp[j] / pr[j];
        t.pp[j] = c.hess.pp[j] - kappa * c.pp[j] * c.pp[j] / pr[j] - tr * s2[j];
    }
    let norm = g.contract(&t, &t);
    let i_l = c.integrate(|j| norm[j] * w(j));
    let i_4 = c.integrate(|j| c.grad_sq[j].powi(2) / pr[j].powi(2) * w(j));
    let i_2 = c.integrate(|j| c.grad_sq[j] * w(j));
    let terms = vec![
        Term::new("trace_free_square", c_l * i_l),
        Term::new("gradient_fourth_power", c_4 * i_4),
        Term::new("gradient_square", c_2 * i_2),
    ];
    let rhs = c_l * i_l + c_4 * i_4 + c_2 * i_2;
    Ok(IdentityReport::new("lemma-second", lhs, rhs, (lhs - rhs).abs(), terms))
}

/// Sup norm of `½Δ|∇f|² - ‖∇²f‖² - ∇f·∇Δf - (d-2)|∇f|²` on the circle or
/// `S²`. The breakdown holds the sup of each right-hand term.
pub fn bochner_residual(f: &[f64], sphere: &SphereGrid) -> Result<IdentityReport> {
    if f.len() != sphere.len() {
        return grid_err(format!("field has {} values, sphere has {}", f.len(), sphere.len()));
    }
    let (lhs, hess_sq, grad_lap, grad_sq) = match sphere {
        SphereGrid::Circle(c) => {
            let f1 = c.derivative(f);
            let f2 = c.second_derivative(f);
            let f3 = c.derivative(&f2);
            let g2: Vec<f64> = f1.iter().map(|x| x * x).collect();
            let lhs: Vec<f64> = c.second_derivative(&g2).iter().map(|x| 0.5 * x).collect();
            let hs: Vec<f64> = f2.iter().map(|x| x * x).collect();
            let gl: Vec<f64> = f1.iter().zip(&f3).map(|(a, b)| a * b).collect();
            (lhs, hs, gl, g2)
        }
        SphereGrid::TwoSphere(g) => {
            let c = S2Calc::new(g, f);
            let hs = g.contract(&c.hess, &c.hess);
            (c.half_lap_grad_sq, hs, c.grad_dot_lap, c.grad_sq)
        }
        SphereGrid::Point { .. } => return grid_err("the Bochner formula needs a sphere of dimension at least 1"),
    };
    let ricci = f64::from(sphere.d()) - 2.0;
    let rhs: Vec<f64> = (0..f.len())
        .map(|j| hess_sq[j] + grad_lap[j] + ricci * grad_sq[j])
        .collect();
    let res = sup(lhs.iter().zip(&rhs).map(|(a, b)| a - b));
    Ok(IdentityReport::new(
        "bochner",
        sup(lhs.iter().copied()),
        sup(rhs.iter().copied()),
        res,
        vec![
            Term::new("hessian_square", sup(hess_sq)),
            Term::new("gradient_dot_gradient_laplacian", sup(grad_lap)),
            Term::new("ricci", sup(grad_sq.iter().map(|x| ricci * x))),
        ],
    ))
}

/// Uniform Cartesian grid on `[-L, L]^d` with fourth-order central
/// differences. Values are stored with the last axis fastest.
#[derive(Debug, Clone)]
pub struct EuclideanBox {
    pub d: usize,
    pub n: usize,
    pub half_width: f64,
}

/// Nodes dropped at each face: two composed 5-point stencils.
const BOX_MARGIN: usize = 4;

impl EuclideanBox {
    pub fn new(d: usize, n: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return grid_err(format!("box grids support d = 1..3, got {d}"));
        }
        if n < 2 * BOX_MARGIN + 3 || !(half_width > 0.0) {
            return grid_err(format!("box grid with {n} nodes per axis on half-width {half_width}"));
        }
        Ok(EuclideanBox { d, n, half_width })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn coords(&self, mut k: usize) -> [usize; 3] {
        let mut c = [0; 3];
        for a in (0..self.d).rev() {
            c[a] = k % self.n;
            k /= self.n;
        }
        c
    }

    fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.d - 1 - axis) as u32)
    }

    pub fn point(&self, k: usize) -> [f64; 3] {
        let c = self.coords(k);
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = -self.half_width + c[a] as f64 * self.h();
        }
        x
    }

    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|k| f(&self.point(k)[..self.d])).collect()
    }

    /// `∂_axis f`, zero within two nodes of that axis' faces.
    pub fn d1(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let (st, h) = (self.stride(axis), self.h());
        (0..f.len())
            .map(|k| {
                let c = self.coords(k)[axis];
                if c < 2 || c + 2 >= self.n {
                    return 0.0;
                }
                (f[k - 2 * st] - 8.0 * f[k - st] + 8.0 * f[k + st] - f[k + 2 * st]) / (12.0 * h)
            })
            .collect()
    }

    /// `∂²_axis f`, zero within two nodes of that axis' faces.
    pub fn d2(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let (st, h) = (self.stride(axis), self.h());
        (0..f.len())
            .map(|k| {
                let c = self.coords(k)[axis];
                if c < 2 || c + 2 >= self.n {
                    return 0.0;
                }
                (-f[k - 2 * st] + 16.0 * f[k - st] - 30.0 * f[k] + 16.0 * f[k + st] - f[k + 2 * st])
                    / (12.0 * h * h)
            })
            .collect()
    }

    pub fn laplace(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for a in 0..self.d {
            for (o, v) in out.iter_mut().zip(self.d2(f, a)) {
                *o += v;
            }
        }
        out
    }

    fn interior(&self, k: usize) -> bool {
        let c = self.coords(k);
        (0..self.d).all(|a| c[a] >= BOX_MARGIN && c[a] + BOX_MARGIN < self.n)
    }
}

/// `∫[½Δ|∇𝗉|² - ∇𝗉·∇Δ𝗉 - (Δ𝗉)²/d] 𝗉^{1-d} dx` against
/// `∫Tr[H - (ΔP/d) Id]² 𝗉^{1-d} dx` on a box. The breakdown carries the
/// trace-free integral and the sup of the pointwise difference.
pub fn sobolev_hessian_decomposition(pr: &[f64], grid: &EuclideanBox) -> Result<IdentityReport> {
    if pr.len() != grid.len() {
        return grid_err(format!("field has {} values, box has {}", pr.len(), grid.len()));
    }
    if let Some(k) = pr.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(CknError::Positivity(format!("pressure: value {} at node {k}", pr[k])));
    }
    let d = grid.d;
    let df = d as f64;
    let grad: Vec<Vec<f64>> = (0..d).map(|a| grid.d1(pr, a)).collect();
    let lap = grid.laplace(pr);
    let grad_sq: Vec<f64> = (0..pr.len()).map(|k| grad.iter().map(|g| g[k] * g[k]).sum()).collect();
    let lap_grad_sq = grid.laplace(&grad_sq);
    let grad_lap: Vec<Vec<f64>> = (0..d).map(|a| grid.d1(&lap, a)).collect();
    let mut hess = vec![vec![Vec::new(); d]; d];
    for a in 0..d {
        hess[a][a] = grid.d2(pr, a);
        for b in a + 1..d {
            hess[a][b] = grid.d1(&grad[a], b);
        }
    }

    let dv = grid.h().powi(d as i32);
    let (mut lhs, mut rhs, mut worst) = (0.0, 0.0, 0.0f64);
    for k in (0..pr.len()).filter(|&k| grid.interior(k)) {
        let l = 0.5 * lap_grad_sq[k]
            - (0..d).map(|a| grad[a][k] * grad_lap[a][k]).sum::<f64>()
            - lap[k] * lap[k] / df;
        let mut r = 0.0;
        for a in 0..d {
            let diag = hess[a][a][k] - lap[k] / df;
            r += diag * diag;
            for b in a + 1..d {
                r += 2.0 * hess[a][b][k].powi(2);
            }
        }
        let w = pr[k].powf(1.0 - df) * dv;
        lhs += l * w;
        rhs += r * w;
        worst = worst.max((l - r).abs());
    }
    Ok(IdentityReport::new(
        "sobolev-hessian",
        lhs,
        rhs,
        (lhs - rhs).abs(),
        vec![Term::new("trace_free_hessian", rhs), Term::new("pointwise_sup", worst)],
    ))
}

/// Random polynomial of degree at most `degree` in the embedding coordinates
/// of the sphere nodes, scaled to sup norm 1 (all zeros on a point sphere).
pub fn sphere_polynomial(rng: &mut impl Rng, sphere: &SphereGrid, degree: u32) -> Vec<f64> {
    let mut monomials = Vec::new();
    let dim = match sphere.d() {
        2 => 2,
        _ => 3,
    };
    for i in 0..=degree {
        for j in 0..=degree - i {
            for k in 0..=degree - i - j {
                if i + j + k > 0 && (dim == 3 || k == 0) {
                    monomials.push([i as i32, j as i32, k as i32]);
                }
            }
        }
    }
    if sphere.is_point() || monomials.is_empty() {
        return vec![0.0; sphere.len()];
    }
    let coef: Vec<f64> = monomials.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    let vals: Vec<f64> = (0..sphere.len())
        .map(|j| {
            let x = sphere.unit_vector(j);
            monomials
                .iter()
                .zip(&coef)
                .map(|(m, c)| c * x[0].powi(m[0]) * x[1].powi(m[1]) * x[2].powi(m[2]))
                .sum()
        })
        .collect();
    let m = sup(vals.iter().copied());
    if m > 0.0 {
        vals.iter().map(|v| v / m).collect()
    } else {
        vals
    }
}

/// Positive band-limited field on the sphere: `1 + amplitude · Y` with `Y` a
/// random polynomial of sup norm 1.
pub fn random_sphere_field(seed: u64, sphere: &SphereGrid, degree: u32, amplitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sphere_polynomial(&mut rng, sphere, degree)
        .iter()
        .map(|y| 1.0 + amplitude * y)
        .collect()
}

/// Positive pressure on `(s, ω)`: `A + B s² + Σ c_k Y_k(ω) g_k(s)` with
/// `g_k(s) = s^{e_k} e^{-β_k s}` scaled to sup 1 on the grid and
/// `Σ|c_k| ≤ A/2`.
pub fn random_pressure(seed: u64, grid: &WeightedGrid, degree: u32, terms: usize) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = rng.gen_range(0.5..2.0);
    let b = rng.gen_range(0.2..1.0);
    let s_nodes = grid.radial.s_nodes();
    let mut parts = Vec::with_capacity(terms);
    let mut budget = 0.5 * a;
    for _ in 0..terms {
        let y = sphere_polynomial(&mut rng, &grid.sphere, degree);
        let e = rng.gen_range(0..=3) as i32;
        let beta = rng.gen_range(0.3..1.0);
        let g: Vec<f64> = s_nodes.iter().map(|s| s.powi(e) * (-beta * s).exp()).collect();
        let gmax = sup(g.iter().copied());
        let c = rng.gen_range(0.2..1.0) * budget / 2.0;
        budget -= c;
        let c = if rng.gen_bool(0.5) { c } else { -c };
        parts.push((y, g.iter().map(|v| c * v / gmax).collect::<Vec<_>>()));
    }
    grid.sample(|s, j| {
        let i = s_nodes.partition_point(|&x| x < s);
        a + b * s * s + parts.iter().map(|(y, g)| y[j] * g[i]).sum::<f64>()
    })
}

/// One of the verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    LemmaFirst,
    LemmaSecond,
    Bochner,
    SobolevHessian,
    Djdt,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::LemmaFirst,
        Suite::LemmaSecond,
        Suite::Bochner,
        Suite::SobolevHessian,
        Suite::Djdt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::LemmaFirst => "lemma-first",
            Suite::LemmaSecond => "lemma-second",
            Suite::Bochner => "bochner",
            Suite::SobolevHessian => "sobolev-hessian",
            Suite::Djdt => "djdt",
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Suite {
    type Err = CknError;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| CknError::Domain(format!("unknown suite '{s}'")))
    }
}

/// Resolutions and field sizes used by [`run_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub base_seed: u64,
    pub ns: usize,
    pub nmu: usize,
    pub nphi: usize,
    pub degree: u32,
    /// Two-sphere resolution for the weighted `(s, ω)` suite, where every
    /// radial row pays for its own transforms.
    pub nmu_radial: usize,
    pub nphi_radial: usize,
    pub box_nodes: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            base_seed: 0,
            ns: 301,
            nmu: 32,
            nphi: 64,
            degree: 4,
            nmu_radial: 16,
            nphi_radial: 32,
            box_nodes: 81,
        }
    }
}

/// Parameters below the symmetry threshold used where the suites need a
/// concrete `(d, a, b)`: `d = 3`, `α = 0.8 < α_FS`.
pub fn suite_params() -> DerivedParams {
    crate::params::derive(crate::params::CknParams { d: 3, a: -0.2, b: 0.0 }).expect("admissible parameters")
}

fn run_one(suite: Suite, seed: u64, opts: &SuiteOptions) -> Result<IdentityReport> {
    let sphere = SphereGrid::two_sphere(opts.nmu, opts.nphi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let report = match suite {
        Suite::LemmaFirst => {
            let dp = suite_params();
            let rg = RadialGrid::new(dp.n, dp.alpha, 0.2, 5.0, opts.ns)?;
            let grid = WeightedGrid::new(rg, SphereGrid::two_sphere(opts.nmu_radial, opts.nphi_radial)?);
            let pr = random_pressure(seed, &grid, opts.degree, 3);
            lemma_first_residual(&pr, &grid, &dp, (0.5, 2.0))?
        }
        Suite::LemmaSecond => {
            let n: f64 = rng.gen_range(3.2..6.0);
            let alpha = rng.gen_range(0.2..1.0) * (2.0 / (n - 1.0)).sqrt();
            let pr = random_sphere_field(seed, &sphere, opts.degree, 0.4);
            lemma_second_check(&pr, &sphere, n, alpha)?
        }
        Suite::Bochner => {
            let f = random_sphere_field(seed, &sphere, opts.degree, 1.0);
            bochner_residual(&f, &sphere)?
        }
        Suite::SobolevHessian => {
            let grid = EuclideanBox::new(3, opts.box_nodes, 2.0)?;
            let (c, amp) = (rng.gen_range(0.5..2.0), rng.gen_range(-0.1..0.1));
            let mut dir: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            dir.iter_mut().for_each(|v| *v /= norm);
            let pr = grid.sample(|x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let t: f64 = x.iter().zip(&dir).map(|(a, b)| a * b).sum();
                1.0 + c * r2 + amp * t.powi(3) * bump(r2.sqrt(), 1.5)
            });
            sobolev_hessian_decomposition(&pr, &grid)?
        }
        Suite::Djdt => {
            let dp = suite_params();
            let rg = RadialGrid::new(dp.n, dp.alpha, 1e-2, 1e2, 1601)?;
            let grid = WeightedGrid::new(rg, SphereGrid::point(3)?);
            let (a, c) = (rng.gen_range(0.5..2.0), rng.gen_range(-0.3..0.3));
            let u = grid.sample(|s, _| (1.0 + a * s * s).powf(-dp.n / 2.0) * (1.0 + c * s * s / (1.0 + s * s)));
            let chk = crate::flow::dj_dt_identity(&u, &grid, &dp)?;
            let mut r = IdentityReport::new(
                "djdt",
                chk.lhs,
                chk.rhs,
                (chk.lhs - chk.rhs).abs(),
                vec![Term::new("scale", chk.scale)],
            );
            r.relative = chk.mismatch;
            r
        }
    };
    Ok(report.with_seed(seed))
}

/// `(1 - (r/R)²)⁸` on `r < R`, zero outside: `C⁷`, enough for fourth-order
/// differences of the composed third derivatives.
pub fn bump(r: f64, radius: f64) -> f64 {
    let x = r / radius;
    if x >= 1.0 {
        0.0
    } else {
        (1.0 - x * x).powi(8)
    }
}

/// Runs `seeds` instances of a suite (seeds `base_seed, base_seed + 1, ...`)
/// in parallel; reports come back in seed order.
pub fn run_suite(suite: Suite, seeds: usize, opts: &SuiteOptions) -> Result<Vec<IdentityReport>> {
    (0..seeds as u64)
        .into_par_iter()
        .map(|i| run_one(suite, opts.base_seed + i, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, CknParams};

    fn s2(nmu: usize, nphi: usize) -> SphereGrid {
        SphereGrid::two_sphere(nmu, nphi).unwrap()
    }

    fn mu(sphere: &SphereGrid, j: usize) -> f64 {
        sphere.unit_vector(j)[2]
    }

    #[test]
    fn lemma_first_on_a_quadratic_pressure() {
        let dp = suite_params();
        let rg = RadialGrid::new(dp.n, dp.alpha, 0.05, 20.0, 801).unwrap();
        let g = WeightedGrid::new(rg, s2(8, 16));
        let pr = g.sample(|s, _| 0.7 + 1.3 * s * s);
        let r = lemma_first_residual(&pr, &g, &dp, (0.5, 2.0)).unwrap();
        assert!(r.residual < 1e-8, "{r:?}");
        assert!(r.term_breakdown[0].value < 1e-8);
    }

    #[test]
    fn lemma_first_on_a_tilted_pressure() {
        let dp = suite_params();
        let rg = RadialGrid::new(dp.n, dp.alpha, 0.05, 20.0, 801).unwrap();
        let sph = s2(12, 24);
        let g = WeightedGrid::new(rg, sph.clone());
        let pr = g.sample(|s, j| s * s * (1.0 + 0.1 * mu(&sph, j)));
        let r = lemma_first_residual(&pr, &g, &dp, (0.5, 2.0)).unwrap();
        assert!(r.residual < 1e-6, "{r:?}");
        assert!(r.lhs > 1e-3);
    }

    #[test]
    fn lemma_first_on_random_pressures() {
        let dp = suite_params();
        let rg = RadialGrid::new(dp.n, dp.alpha, 0.05, 20.0, 801).unwrap();
        let g = WeightedGrid::new(rg, s2(24, 48));
        for seed in 0..3 {
            let pr = random_pressure(seed, &g, 6, 3);
            let r = lemma_first_residual(&pr, &g, &dp, (0.5, 2.0)).unwrap();
            assert!(r.residual < 1e-5, "{r:?}");
        }
    }

    #[test]
    fn lemma_first_holds_on_the_circle_and_above_threshold() {
        let dp = derive(CknParams { d: 2, a: -0.5, b: -0.3 }).unwrap();
        let rg = RadialGrid::new(dp.n, dp.alpha, 0.05, 20.0, 801).unwrap();
        let g = WeightedGrid::new(rg, SphereGrid::circle(32).unwrap());
        let pr = random_pressure(4, &g, 5, 3);
        let r = lemma_first_residual(&pr, &g, &dp, (0.5, 2.0)).unwrap();
        assert!(r.residual < 1e-5, "{r:?}");
    }

    #[test]
    fn lemma_first_window_must_stay_inside() {
        let dp = suite_params();
        let rg = RadialGrid::new(dp.n, dp.alpha, 0.5, 2.0, 101).unwrap();
        let g = WeightedGrid::new(rg, s2(6, 8));
        let pr = g.sample(|s, _| 1.0 + s * s);
        assert!(lemma_first_residual(&pr, &g, &dp, (0.5, 2.0)).is_err());
        let other = derive(CknParams { d: 3, a: 0.0, b: 0.0 }).unwrap();
        assert!(lemma_first_residual(&pr, &g, &other, (0.8, 1.2)).is_err());
    }

    #[test]
    fn lemma_first_converges_at_fourth_order() {
        let dp = suite_params();
        let sph = s2(8, 16);
        let mut res = Vec::new();
        for ns in [101, 201, 401] {
            let rg = RadialGrid::new(dp.n, dp.alpha, 0.05, 20.0, ns).unwrap();
            let g = WeightedGrid::new(rg, sph.clone());
            let pr = g.sample(|s, j| 1.0 + s * s + 0.3 * mu(&sph, j) * s.powi(2) * (-s).exp());
            res.push(lemma_first_residual(&pr, &g, &dp, (0.5, 2.0)).unwrap().residual);
        }
        assert!((res[0] / res[1]).log2() > 3.5, "{res:?}");
        assert!((res[1] / res[2]).log2() > 3.5, "{res:?}");
    }

    #[test]
    fn lemma_second_constant_pressure() {
        let sph = s2(16, 32);
        let r = lemma_second_check(&vec![2.0; sph.len()], &sph, 5.0, 0.5).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn lemma_second_on_a_zonal_pressure() {
        let sph = s2(64, 64);
        let pr: Vec<f64> = (0..sph.len()).map(|j| 1.0 + 0.2 * mu(&sph, j)).collect();
        let r = lemma_second_check(&pr, &sph, 5.0, 0.5).unwrap();
        assert!(r.relative < 1e-4, "{r:?}");
        assert!(r.term_breakdown.iter().all(|t| t.value >= -1e-10));
    }

    #[test]
    fn lemma_second_third_term_vanishes_at_the_threshold() {
        let sph = s2(32, 64);
        let n = 4.5;
        let pr = random_sphere_field(3, &sph, 4, 0.4);
        let r = lemma_second_check(&pr, &sph, n, (2.0 / (n - 1.0)).sqrt()).unwrap();
        assert!(r.term_breakdown[2].value.abs() < 1e-14);
        assert!(r.relative < 1e-4, "{r:?}");
    }

    #[test]
    fn lemma_second_holds_above_threshold_with_a_negative_term() {
        let sph = s2(32, 64);
        let pr = random_sphere_field(7, &sph, 4, 0.4);
        let r = lemma_second_check(&pr, &sph, 4.0, 2.0).unwrap();
        assert!(r.relative < 1e-4, "{r:?}");
        assert!(r.term_breakdown[2].value < 0.0);
    }

    #[test]
    fn lemma_second_needs_the_two_sphere() {
        let c = SphereGrid::circle(16).unwrap();
        assert!(lemma_second_check(&vec![1.0; 16], &c, 5.0, 0.5).is_err());
        let sph = s2(8, 8);
        assert!(lemma_second_check(&vec![1.0; sph.len()], &sph, 3.0, 0.5).is_err());
    }

    #[test]
    fn bochner_for_the_first_harmonic() {
        let sph = s2(16, 32);
        let f: Vec<f64> = (0..sph.len()).map(|j| mu(&sph, j)).collect();
        let r = bochner_residual(&f, &sph).unwrap();
        assert!(r.residual < 1e-8, "{r:?}");
        // ‖H‖² = 2cos²θ for f = cos θ
        let g = sph.as_two_sphere().unwrap();
        let h = g.hessian(&f);
        let hs = g.contract(&h, &h);
        for (j, v) in hs.iter().enumerate() {
            assert!((v - 2.0 * mu(&sph, j).powi(2)).abs() < 1e-10);
        }
        let r = bochner_residual(&vec![3.0; sph.len()], &sph).unwrap();
        assert!(r.lhs < 1e-12 && r.rhs < 1e-12);
    }

    #[test]
    fn bochner_on_random_fields() {
        let sph = s2(24, 48);
        let circle = SphereGrid::circle(48).unwrap();
        for seed in 0..5 {
            let r = bochner_residual(&random_sphere_field(seed, &sph, 8, 1.0), &sph).unwrap();
            assert!(r.residual < 1e-8 * r.lhs.max(1.0), "{r:?}");
            let r = bochner_residual(&random_sphere_field(seed, &circle, 8, 1.0), &circle).unwrap();
            assert!(r.residual < 1e-8 * r.lhs.max(1.0), "{r:?}");
        }
    }

    #[test]
    fn sobolev_decomposition_vanishes_on_quadratics() {
        let grid = EuclideanBox::new(3, 25, 2.0).unwrap();
        let pr = grid.sample(|x| 1.5 + 0.3 * x[0] - 0.2 * x[2] + 0.8 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
        let r = sobolev_hessian_decomposition(&pr, &grid).unwrap();
        assert!(r.lhs.abs() < 1e-10 && r.rhs.abs() < 1e-10, "{r:?}");
        assert!(r.term_breakdown[1].value < 1e-10);
    }

    #[test]
    fn sobolev_decomposition_with_a_bump() {
        let mut res = Vec::new();
        for n in [41, 81] {
            let grid = EuclideanBox::new(3, n, 2.0).unwrap();
            let pr = grid.sample(|x| {
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                1.0 + r2 + 0.1 * x[0].powi(3) * bump(r2.sqrt(), 1.5)
            });
            let r = sobolev_hessian_decomposition(&pr, &grid).unwrap();
            assert!(r.rhs > 1e-4);
            res.push(r);
        }
        assert!(res[1].residual < 1e-5, "{res:?}");
        let order = (res[0].term_breakdown[1].value / res[1].term_breakdown[1].value).log2();
        assert!(order > 3.5, "{res:?}");
    }

    #[test]
    fn affine_terms_do_not_change_the_integrand() {
        let grid = EuclideanBox::new(2, 41, 2.0).unwrap();
        let base = |x: &[f64]| 1.0 + x[0] * x[0] + x[1] * x[1] + 0.1 * x[0].powi(3) * bump((x[0] * x[0] + x[1] * x[1]).sqrt(), 1.5);
        let p0 = grid.sample(base);
        let p1 = grid.sample(|x| base(x) + 0.2 * x[0] - 0.1 * x[1]);
        let h0 = grid.d1(&grid.d1(&p0, 0), 1);
        let h1 = grid.d1(&grid.d1(&p1, 0), 1);
        assert!(h0.iter().zip(&h1).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(sobolev_hessian_decomposition(&p1, &grid).is_ok());
    }

    #[test]
    fn suites_parse_and_run() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
        let opts = SuiteOptions {
            box_nodes: 31,
            ns: 201,
            nmu: 16,
            nphi: 32,
            nmu_radial: 8,
            nphi_radial: 16,
            ..SuiteOptions::default()
        };
        let a = run_suite(Suite::Bochner, 3, &opts).unwrap();
        let b = run_suite(Suite::Bochner, 3, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().map(|r| r.seed.unwrap()).collect::<Vec<_>>(), vec![0, 1, 2]);
    }
}

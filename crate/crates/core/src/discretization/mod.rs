//! Grids, quadrature and differential operators on the truncated cylinder
//! `R × S^{d-1}`, the weighted half-line `(R₊, s^{n-1} ds)` and the sphere.
//!
//! Fields are stored row-major: one row per node of the 1D line (`z` on the
//! cylinder, `t = log s` on the half-line), one column per sphere node.

pub mod banded;
pub mod line;
pub mod snapshot;
pub mod sphere;

pub use banded::{BandLu, BandMatrix};
pub use line::{LineGrid, RowOp};
pub use sphere::{CircleGrid, S2Derivatives, S2Tensor, SphereGrid, TwoSphereGrid};

use crate::error::{CknError, Result};

/// Number of nodes at each end of the line excluded from residual norms.
pub const BOUNDARY_LAYERS: usize = 3;

/// Real-valued grid function, row-major `(rows, cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl Field {
    pub fn new(values: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(CknError::Grid(format!(
                "field has {} values, shape {rows}x{cols}",
                values.len()
            )));
        }
        Ok(Field { values, rows, cols })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Field {
            values: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0 && v.is_finite())
    }

    pub fn require_positive(&self, what: &str) -> Result<()> {
        if self.is_positive() {
            Ok(())
        } else {
            let bad = self
                .values
                .iter()
                .position(|&v| !(v > 0.0 && v.is_finite()))
                .unwrap_or(0);
            Err(CknError::Positivity(format!(
                "{what}: value {} at index {bad}",
                self.values[bad]
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            values: self.values.iter().map(|&v| f(v)).collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.values.len(), other.values.len());
        Field {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    pub fn scaled(&self, k: f64) -> Field {
        self.map(|v| k * v)
    }

    fn same_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rows == rows && self.cols == cols {
            Ok(())
        } else {
            Err(CknError::Grid(format!(
                "field shape {}x{} does not match grid {rows}x{cols}",
                self.rows, self.cols
            )))
        }
    }

    /// Sup norm over rows `BOUNDARY_LAYERS..rows - BOUNDARY_LAYERS`.
    pub fn interior_sup(&self) -> f64 {
        let lo = BOUNDARY_LAYERS.min(self.rows);
        let hi = self.rows.saturating_sub(BOUNDARY_LAYERS).max(lo);
        self.values[lo * self.cols..hi * self.cols]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn apply_rows(op: &RowOp, f: &Field) -> Field {
    let mut out = vec![0.0; f.values.len()];
    for j in 0..f.cols {
        op.apply_strided(&f.values, f.cols, j, &mut out);
    }
    Field {
        values: out,
        rows: f.rows,
        cols: f.cols,
    }
}

fn apply_sphere(sphere: &SphereGrid, f: &Field, op: impl Fn(&SphereGrid, &[f64]) -> Vec<f64>) -> Field {
    let mut values = Vec::with_capacity(f.values.len());
    for i in 0..f.rows {
        values.extend(op(sphere, f.row(i)));
    }
    Field {
        values,
        rows: f.rows,
        cols: f.cols,
    }
}

/// Truncated cylinder `[-Z, Z] × S^{d-1}`.
#[derive(Debug, Clone)]
pub struct CylinderGrid {
    pub z: LineGrid,
    pub sphere: SphereGrid,
    d1: RowOp,
    d2: RowOp,
    stag: RowOp,
}

impl CylinderGrid {
    pub fn new(half_length: f64, nz: usize, sphere: SphereGrid) -> Result<Self> {
        let z = LineGrid::symmetric(half_length, nz)?;
        Ok(CylinderGrid {
            d1: z.d1(),
            d2: z.d2(),
            stag: z.staggered_d1(),
            z,
            sphere,
        })
    }

    pub fn d(&self) -> u32 {
        self.sphere.d()
    }

    pub fn half_length(&self) -> f64 {
        self.z.end()
    }

    pub fn nz(&self) -> usize {
        self.z.n
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.z.n, self.sphere.len())
    }

    pub fn d1_op(&self) -> &RowOp {
        &self.d1
    }

    /// `∂_z` at the midpoints between `z` nodes; used for the Dirichlet energy.
    pub fn staggered_op(&self) -> &RowOp {
        &self.stag
    }

    /// Product weights `w_z ⊗ w_ω`.
    pub fn weights(&self) -> Vec<f64> {
        let wz = self.z.weights();
        let ws = self.sphere.weights();
        wz.iter().flat_map(|a| ws.iter().map(move |b| a * b)).collect()
    }

    /// Evaluates `f(z, node index)` at every node.
    pub fn sample(&self, f: impl Fn(f64, usize) -> f64) -> Field {
        let (rows, cols) = self.shape();
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            let z = self.z.node(i);
            for j in 0..cols {
                values.push(f(z, j));
            }
        }
        Field { values, rows, cols }
    }

    pub fn d_z(&self, f: &Field) -> Result<Field> {
        f.same_shape(self.z.n, self.sphere.len())?;
        Ok(apply_rows(&self.d1, f))
    }

    pub fn d_zz(&self, f: &Field) -> Result<Field> {
        f.same_shape(self.z.n, self.sphere.len())?;
        Ok(apply_rows(&self.d2, f))
    }

    pub fn laplace_sphere(&self, f: &Field) -> Result<Field> {
        f.same_shape(self.z.n, self.sphere.len())?;
        Ok(apply_sphere(&self.sphere, f, |s, r| s.laplace(r)))
    }

    pub fn grad_sphere_sq(&self, f: &Field) -> Result<Field> {
        f.same_shape(self.z.n, self.sphere.len())?;
        Ok(apply_sphere(&self.sphere, f, |s, r| s.grad_sq(r)))
    }

    pub fn integrate(&self, f: &Field) -> Result<f64> {
        f.same_shape(self.z.n, self.sphere.len())?;
        Ok(self.weights().iter().zip(&f.values).map(|(w, v)| w * v).sum())
    }
}

/// Half-line `s ∈ [s_min, s_max]`, uniform in `t = log s`, carrying the
/// measure `s^{n-1} ds` and the operator `α²(∂_s² + (n-1)/s ∂_s)`.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub n: f64,
    pub alpha: f64,
    pub t: LineGrid,
    d1: RowOp,
    radial_l: RowOp,
    radial_mirrored: RowOp,
}

impl RadialGrid {
    pub fn new(n: f64, alpha: f64, s_min: f64, s_max: f64, ns: usize) -> Result<Self> {
        if !(s_min > 0.0) || !(s_max > s_min) {
            return Err(CknError::Grid(format!(
                "radial grid needs 0 < s_min < s_max, got [{s_min}, {s_max}]"
            )));
        }
        let t = LineGrid::new(s_min.ln(), s_max.ln(), ns)?;
        let d1 = t.d1();
        // s^n (L_rad f) = α² (s^{n-2} f_t)_t in t = log s.
        let k = n - 2.0;
        let radial_l = t
            .flux_form(|x| (k * x).exp(), |x| k * (k * x).exp())
            .scale_rows(|i| alpha * alpha * (-n * t.node(i)).exp());
        let radial_mirrored = t
            .flux_form_mirrored(|x| (k * x).exp())
            .scale_rows(|i| alpha * alpha * (-n * t.node(i)).exp());
        Ok(RadialGrid {
            n,
            alpha,
            t,
            d1,
            radial_l,
            radial_mirrored,
        })
    }

    pub fn len(&self) -> usize {
        self.t.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn s(&self, i: usize) -> f64 {
        self.t.node(i).exp()
    }

    pub fn s_nodes(&self) -> Vec<f64> {
        (0..self.t.n).map(|i| self.s(i)).collect()
    }

    pub fn s_min(&self) -> f64 {
        self.s(0)
    }

    pub fn s_max(&self) -> f64 {
        self.s(self.t.n - 1)
    }

    /// Quadrature weights for `∫ f s^{n-1} ds` (`= ∫ f s^n dt`).
    pub fn weights(&self) -> Vec<f64> {
        self.t
            .weights()
            .iter()
            .enumerate()
            .map(|(i, w)| w * (self.n * self.t.node(i)).exp())
            .collect()
    }

    /// `∂_s` as a row operator (`s^{-1} ∂_t`).
    pub fn d_s_op(&self) -> RowOp {
        let t = self.t;
        self.d1.clone().scale_rows(|i| (-t.node(i)).exp())
    }

    /// Radial part of `𝓛` as a row operator.
    pub fn radial_op(&self) -> &RowOp {
        &self.radial_l
    }

    /// Radial part of `𝓛` with zero-slope (mirror) closure at both ends.
    pub fn radial_op_mirrored(&self) -> &RowOp {
        &self.radial_mirrored
    }
}

/// Product grid `[s_min, s_max] × S^{d-1}` with `dμ = s^{n-1} ds dω`.
#[derive(Debug, Clone)]
pub struct WeightedGrid {
    pub radial: RadialGrid,
    pub sphere: SphereGrid,
}

impl WeightedGrid {
    pub fn new(radial: RadialGrid, sphere: SphereGrid) -> Self {
        WeightedGrid { radial, sphere }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.radial.len(), self.sphere.len())
    }

    pub fn alpha(&self) -> f64 {
        self.radial.alpha
    }

    pub fn n(&self) -> f64 {
        self.radial.n
    }

    pub fn weights(&self) -> Vec<f64> {
        let wr = self.radial.weights();
        let ws = self.sphere.weights();
        wr.iter().flat_map(|a| ws.iter().map(move |b| a * b)).collect()
    }

    /// Evaluates `f(s, node index)` at every node.
    pub fn sample(&self, f: impl Fn(f64, usize) -> f64) -> Field {
        let (rows, cols) = self.shape();
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            let s = self.radial.s(i);
            for j in 0..cols {
                values.push(f(s, j));
            }
        }
        Field { values, rows, cols }
    }

    fn check(&self, f: &Field) -> Result<()> {
        let (r, c) = self.shape();
        f.same_shape(r, c)
    }

    pub fn integrate(&self, f: &Field) -> Result<f64> {
        self.check(f)?;
        Ok(self.weights().iter().zip(&f.values).map(|(w, v)| w * v).sum())
    }

    pub fn d_s(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        Ok(apply_rows(&self.radial.d_s_op(), f))
    }

    /// `𝓛u = α²(u_ss + (n-1) u_s / s) + s^{-2} Δ_ω u`.
    pub fn op_l(&self, u: &Field) -> Result<Field> {
        self.check(u)?;
        let mut out = apply_rows(self.radial.radial_op(), u);
        if !self.sphere.is_point() {
            let ang = apply_sphere(&self.sphere, u, |s, r| s.laplace(r));
            for i in 0..u.rows {
                let s2 = self.radial.s(i).powi(2);
                for j in 0..u.cols {
                    out.values[i * u.cols + j] += ang.values[i * u.cols + j] / s2;
                }
            }
        }
        Ok(out)
    }

    /// `𝖣u · 𝖣w = α² u_s w_s + s^{-2} ∇_ω u · ∇_ω w`.
    pub fn d_dot(&self, u: &Field, w: &Field) -> Result<Field> {
        self.check(u)?;
        self.check(w)?;
        let ds = self.radial.d_s_op();
        let us = apply_rows(&ds, u);
        let ws = apply_rows(&ds, w);
        let a2 = self.alpha().powi(2);
        let mut out = us.zip_map(&ws, |a, b| a2 * a * b);
        if !self.sphere.is_point() {
            for i in 0..u.rows {
                let g = self.sphere.grad_dot(u.row(i), w.row(i));
                let s2 = self.radial.s(i).powi(2);
                for j in 0..u.cols {
                    out.values[i * u.cols + j] += g[j] / s2;
                }
            }
        }
        Ok(out)
    }

    /// `|𝖣u|²`.
    pub fn d_sq(&self, u: &Field) -> Result<Field> {
        self.d_dot(u, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cylinder_weights_total() {
        let g = CylinderGrid::new(5.0, 101, SphereGrid::two_sphere(6, 8).unwrap()).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - 10.0 * 4.0 * PI).abs() < 1e-13 * total, "{total}");
        let g = CylinderGrid::new(5.0, 101, SphereGrid::point(5).unwrap()).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - 10.0 * g.sphere.volume()).abs() < 1e-12);
    }

    #[test]
    fn z_derivatives() {
        let g = CylinderGrid::new(3.0, 61, SphereGrid::circle(8).unwrap()).unwrap();
        let c = g.sample(|_, _| 1.7);
        assert!(g.d_z(&c).unwrap().values.iter().all(|v| v.abs() < 1e-12));
        let q = g.sample(|z, _| z * z);
        assert!(g.d_zz(&q).unwrap().values.iter().all(|v| (v - 2.0).abs() < 1e-10));
        assert!(g.d_z(&Field::zeros(3, 3)).is_err());
        assert!(CylinderGrid::new(3.0, 6, SphereGrid::circle(8).unwrap()).is_err());
    }

    #[test]
    fn radial_measure() {
        let n = 4.3;
        let rg = RadialGrid::new(n, 1.0, 1.0, 2.0, 401).unwrap();
        let w = rg.weights();
        let v: f64 = (0..rg.len()).map(|i| w[i] * rg.s(i).powf(1.0 - n)).sum();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn op_l_on_simple_functions() {
        let (n, alpha) = (4.5, 0.7);
        let rg = RadialGrid::new(n, alpha, 0.5, 3.0, 801).unwrap();
        let g = WeightedGrid::new(rg, SphereGrid::two_sphere(6, 8).unwrap());
        let one = g.sample(|_, _| 1.0);
        let l1 = g.op_l(&one).unwrap().interior_sup();
        assert!(l1 < 1e-8, "{l1}");
        let sq = g.sample(|s, _| s * s);
        let lsq = g.op_l(&sq).unwrap();
        let target = 2.0 * n * alpha * alpha;
        let err = lsq.map(|v| v - target).interior_sup();
        assert!(err < 1e-9 * target, "{err}");
    }

    #[test]
    fn op_l_angular_part() {
        let (n, alpha) = (5.0, 0.6);
        let rg = RadialGrid::new(n, alpha, 0.5, 3.0, 801).unwrap();
        let g = WeightedGrid::new(rg, SphereGrid::two_sphere(8, 8).unwrap());
        // u = s^k cos θ: 𝓛u = (α² k (k + n - 2) - 2) s^{k-2} cos θ
        let k = 1.5;
        let u = g.sample(|s, j| s.powf(k) * g.sphere.unit_vector(j)[2]);
        let lu = g.op_l(&u).unwrap();
        let c = alpha * alpha * k * (k + n - 2.0) - 2.0;
        let exact = g.sample(|s, j| c * s.powf(k - 2.0) * g.sphere.unit_vector(j)[2]);
        let err = lu.zip_map(&exact, |a, b| a - b).interior_sup();
        assert!(err < 1e-8, "{err}");
    }
}

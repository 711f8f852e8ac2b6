//! Uniform 1D grids and fourth-order finite-difference operators on them.

use super::banded::BandMatrix;
use crate::error::{CknError, Result};

/// Sparse operator stored as one contiguous run of coefficients per row.
#[derive(Debug, Clone, Default)]
pub struct RowOp {
    rows: Vec<(usize, Vec<f64>)>,
}

impl RowOp {
    pub fn from_rows(rows: Vec<(usize, Vec<f64>)>) -> Self {
        RowOp { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        let (s, c) = &self.rows[i];
        (*s, c)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|(s, c)| c.iter().zip(&x[*s..]).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Applies the operator to column `col` of a row-major `(len, stride)` array.
    pub fn apply_strided(&self, x: &[f64], stride: usize, col: usize, out: &mut [f64]) {
        for (i, (s, c)) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for (k, a) in c.iter().enumerate() {
                acc += a * x[(s + k) * stride + col];
            }
            out[i * stride + col] = acc;
        }
    }

    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let n = self
            .rows
            .iter()
            .map(|(s, c)| s + c.len())
            .max()
            .unwrap_or(0)
            .max(self.rows.len());
        let mut out = vec![0.0; n];
        for ((s, c), yi) in self.rows.iter().zip(y) {
            for (k, a) in c.iter().enumerate() {
                out[s + k] += a * yi;
            }
        }
        out
    }

    /// Scales row `i` by `f(i)`.
    pub fn scale_rows(mut self, f: impl Fn(usize) -> f64) -> Self {
        for (i, (_, c)) in self.rows.iter_mut().enumerate() {
            let k = f(i);
            c.iter_mut().for_each(|v| *v *= k);
        }
        self
    }

    /// Row-wise sum `self + k·other`, merging coefficient runs.
    pub fn add_scaled(&self, other: &RowOp, k: f64) -> RowOp {
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|((s1, c1), (s2, c2))| {
                let start = (*s1).min(*s2);
                let end = (s1 + c1.len()).max(s2 + c2.len());
                let mut c = vec![0.0; end - start];
                for (j, v) in c1.iter().enumerate() {
                    c[s1 + j - start] += v;
                }
                for (j, v) in c2.iter().enumerate() {
                    c[s2 + j - start] += k * v;
                }
                (start, c)
            })
            .collect();
        RowOp { rows }
    }

    /// Widest distance below / above the diagonal over all rows.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for (i, (s, c)) in self.rows.iter().enumerate() {
            if *s < i {
                kl = kl.max(i - s);
            }
            let last = s + c.len() - 1;
            if last > i {
                ku = ku.max(last - i);
            }
        }
        (kl, ku)
    }

    /// `diag + k·self` as a band matrix.
    pub fn to_band(&self, k: f64, diag: &[f64]) -> BandMatrix {
        let (kl, ku) = self.bandwidths();
        let n = self.rows.len();
        let mut m = BandMatrix::zeros(n, kl, ku);
        for (i, (s, c)) in self.rows.iter().enumerate() {
            for (j, v) in c.iter().enumerate() {
                if *v != 0.0 {
                    m.add(i, s + j, k * v);
                }
            }
            m.add(i, i, diag[i]);
        }
        m
    }
}

const D1_INTERIOR: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D1_EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const D1_EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const D2_INTERIOR: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const D2_EDGE0: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
const D2_EDGE1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];

/// Uniform nodes `x_i = start + i·h`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineGrid {
    pub start: f64,
    pub h: f64,
    pub n: usize,
}

impl LineGrid {
    pub fn new(start: f64, end: f64, n: usize) -> Result<Self> {
        if n < 7 {
            return Err(CknError::Grid(format!("need at least 7 nodes, got {n}")));
        }
        if !(end > start) {
            return Err(CknError::Grid(format!("empty interval [{start}, {end}]")));
        }
        Ok(LineGrid {
            start,
            h: (end - start) / (n as f64 - 1.0),
            n,
        })
    }

    /// Symmetric grid on `[-half, half]`.
    pub fn symmetric(half: f64, n: usize) -> Result<Self> {
        Self::new(-half, half, n)
    }

    pub fn end(&self) -> f64 {
        self.start + self.h * (self.n as f64 - 1.0)
    }

    pub fn node(&self, i: usize) -> f64 {
        self.start + self.h * i as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weights with fourth-order Gregory end corrections.
    ///
    /// They sum to the interval length exactly.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.n;
        let mut w = vec![self.h; n];
        if n >= 8 {
            let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
            for (k, e) in ends.iter().enumerate() {
                w[k] = e * self.h;
                w[n - 1 - k] = e * self.h;
            }
        } else {
            w[0] = 0.5 * self.h;
            w[n - 1] = 0.5 * self.h;
        }
        w
    }

    /// First derivative at the `n - 1` midpoints `x_{m+1/2}`: fourth order
    /// inside, two-point differences on the outermost midpoints. Unlike the
    /// centred [`d1`](Self::d1) it has no null vector besides constants.
    pub fn staggered_d1(&self) -> RowOp {
        let n = self.n;
        let k = 1.0 / (24.0 * self.h);
        let rows = (0..n - 1)
            .map(|m| {
                if m >= 1 && m + 2 < n {
                    (m - 1, vec![k, -27.0 * k, 27.0 * k, -k])
                } else {
                    (m, vec![-1.0 / self.h, 1.0 / self.h])
                }
            })
            .collect();
        RowOp { rows }
    }

    /// Fourth-order first derivative; one-sided rows at both ends.
    pub fn d1(&self) -> RowOp {
        let n = self.n;
        let inv = 1.0 / (12.0 * self.h);
        let rows = (0..n)
            .map(|i| {
                let (start, c): (usize, Vec<f64>) = if i == 0 {
                    (0, D1_EDGE0.to_vec())
                } else if i == 1 {
                    (0, D1_EDGE1.to_vec())
                } else if i == n - 1 {
                    (n - 5, D1_EDGE0.iter().rev().map(|v| -v).collect())
                } else if i == n - 2 {
                    (n - 5, D1_EDGE1.iter().rev().map(|v| -v).collect())
                } else {
                    (i - 2, D1_INTERIOR.to_vec())
                };
                (start, c.into_iter().map(|v| v * inv).collect())
            })
            .collect();
        RowOp { rows }
    }

    /// Fourth-order second derivative; one-sided rows at both ends.
    pub fn d2(&self) -> RowOp {
        let n = self.n;
        let inv = 1.0 / (12.0 * self.h * self.h);
        let rows = (0..n)
            .map(|i| {
                let (start, c): (usize, Vec<f64>) = if i == 0 {
                    (0, D2_EDGE0.to_vec())
                } else if i == 1 {
                    (0, D2_EDGE1.to_vec())
                } else if i == n - 1 {
                    (n - 6, D2_EDGE0.iter().rev().copied().collect())
                } else if i == n - 2 {
                    (n - 6, D2_EDGE1.iter().rev().copied().collect())
                } else {
                    (i - 2, D2_INTERIOR.to_vec())
                };
                (start, c.into_iter().map(|v| v * inv).collect())
            })
            .collect();
        RowOp { rows }
    }

    /// Fourth-order flux-form operator `f ↦ (g f')'` for a positive
    /// coefficient `g(x)`.
    ///
    /// Rows `3..n-3` use staggered differences, so `Σ_i h·(row_i · f)`
    /// telescopes to boundary fluxes; the three rows at each end fall back to
    /// `g f'' + g' f'` with one-sided stencils.
    pub fn flux_form(&self, g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64) -> RowOp {
        let n = self.n;
        let h = self.h;
        let d1 = self.d1();
        let d2 = self.d2();
        let stag = [1.0, -27.0, 27.0, -1.0];
        let rows = (0..n)
            .map(|i| {
                if i >= 3 && i + 3 < n {
                    // G_{j+1/2} = g(x_{j+1/2}) Σ stag[k] f_{j-1+k} / (24h)
                    // div_i = Σ_q stag[q] G_{i-2+q+1/2} / (24h)
                    let mut c = vec![0.0; 7];
                    for (q, sq) in stag.iter().enumerate() {
                        let j = i + q - 2; // half-node j + 1/2 with j = i-2+q
                        let x_half = self.node(j) + 0.5 * h;
                        let gj = g(x_half) * sq / (24.0 * h * 24.0 * h);
                        for (k, sk) in stag.iter().enumerate() {
                            // f index j - 1 + k, relative to i - 3
                            c[j + k - 1 + 3 - i] += gj * sk;
                        }
                    }
                    (i - 3, c)
                } else {
                    let x = self.node(i);
                    let (s2, c2) = d2.row(i);
                    let (s1, c1) = d1.row(i);
                    let a = RowOp::from_rows(vec![(s2, c2.iter().map(|v| v * g(x)).collect())]);
                    let b = RowOp::from_rows(vec![(s1, c1.to_vec())]);
                    let merged = a.add_scaled(&b, dg(x));
                    merged.rows.into_iter().next().expect("one row")
                }
            })
            .collect();
        RowOp { rows }
    }
}

impl LineGrid {
    /// Staggered `(g f')'` on every row, with values outside the grid taken
    /// from the mirror image `f_{-k} = f_k`, `f_{n-1+k} = f_{n-1-k}`. This is
    /// the zero-slope (Neumann) version of [`flux_form`](Self::flux_form).
    pub fn flux_form_mirrored(&self, g: impl Fn(f64) -> f64) -> RowOp {
        let n = self.n as isize;
        let h = self.h;
        let stag = [1.0, -27.0, 27.0, -1.0];
        let mirror = |j: isize| -> usize {
            let j = if j < 0 { -j } else { j };
            (if j > n - 1 { 2 * (n - 1) - j } else { j }) as usize
        };
        let rows = (0..n)
            .map(|i| {
                let mut dense = std::collections::BTreeMap::<usize, f64>::new();
                for (q, sq) in stag.iter().enumerate() {
                    let j = i + q as isize - 2;
                    let x_half = self.start + (j as f64 + 0.5) * h;
                    let gj = g(x_half) * sq / (24.0 * h * 24.0 * h);
                    for (k, sk) in stag.iter().enumerate() {
                        *dense.entry(mirror(j + k as isize - 1)).or_insert(0.0) += gj * sk;
                    }
                }
                let start = *dense.keys().next().expect("non-empty stencil");
                let end = *dense.keys().last().expect("non-empty stencil");
                let mut c = vec![0.0; end - start + 1];
                for (k, v) in dense {
                    c[k - start] = v;
                }
                (start, c)
            })
            .collect();
        RowOp { rows }
    }
}

//! Banded LU with partial pivoting, for the 1D operators of this crate.

use crate::error::{CknError, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` stores columns `i - kl ..= i + kl + ku`; the extra `kl` columns
/// hold fill-in created by row interchanges.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off as usize >= self.width || j >= self.n {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Adds `v` to entry `(i, j)`. Panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let lo = i.saturating_sub(self.kl);
        assert!(
            j >= lo && j <= i + self.ku,
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.slot(i, j).expect("entry inside band");
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.kl + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let mut piv = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(CknError::NoConvergence(format!(
                    "singular band matrix at column {k}"
                )));
            }
            pivots[k] = piv;
            let right = (k + self.kl + self.ku).min(n - 1);
            if piv != k {
                for j in k..=right {
                    let a = self.get(k, j);
                    let b = self.get(piv, j);
                    self.put(k, j, b);
                    self.put(piv, j, a);
                }
            }
            let diag = self.get(k, k);
            for r in k + 1..=last {
                let factor = self.get(r, k) / diag;
                if factor == 0.0 {
                    continue;
                }
                self.put(r, k, factor);
                for j in k + 1..=right {
                    let u = self.get(k, j);
                    if u != 0.0 {
                        let v = self.get(r, j) - factor * u;
                        self.put(r, j, v);
                    }
                }
            }
        }
        Ok(BandLu { m: self, pivots })
    }

    fn put(&mut self, i: usize, j: usize, v: f64) {
        match self.slot(i, j) {
            Some(k) => self.data[k] = v,
            None => debug_assert!(v == 0.0, "fill outside storage at ({i}, {j})"),
        }
    }
}

/// Factored band matrix, reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.m.n;
        let kl = self.m.kl;
        let ku = self.m.ku;
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let last = (k + kl).min(n - 1);
            let xk = x[k];
            for r in k + 1..=last {
                x[r] -= self.m.get(r, k) * xk;
            }
        }
        for k in (0..n).rev() {
            let right = (k + kl + ku).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=right {
                s -= self.m.get(k, j) * x[j];
            }
            x[k] = s / self.m.get(k, k);
        }
        x
    }
}

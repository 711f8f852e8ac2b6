//! Descent on the cylinder quotient over radial and general fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{CylinderGrid, Field, SphereGrid};
use crate::error::{domain, CknError, Result};
use crate::functionals::cylinder_quotient_with_gradient;
use crate::params::{DerivedParams, Region};
use crate::profiles::Soliton;

/// Relative gap above which symmetry counts as broken.
pub const BREAKING_GAP: f64 = 1e-3;
/// Amplitude of the `Y₁` seed in [`InitPreset::SolitonY1`].
pub const SEED_AMPLITUDE: f64 = 0.3;
/// Positivity floor for interior nodes.
pub const FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Restriction {
    Radial,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPreset {
    Soliton,
    SolitonY1,
    Gaussian,
}

impl std::str::FromStr for InitPreset {
    type Err = CknError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soliton" => Ok(InitPreset::Soliton),
            "soliton_y1" | "soliton-y1" => Ok(InitPreset::SolitonY1),
            "gaussian" => Ok(InitPreset::Gaussian),
            other => Err(CknError::Parse(format!("unknown init preset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Init {
    Preset(InitPreset),
    Field(Field),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iter: usize,
    /// Stop once the relative decrease over `window` steps drops below this.
    pub tol: f64,
    pub window: usize,
    pub recenter_every: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iter: 20_000,
            tol: 1e-12,
            window: 50,
            recenter_every: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub constant: f64,
    /// Scaled so that it solves `-∂_z²φ - Δ_ωφ + Λφ = φ^{p-1}` at a minimum.
    #[serde(skip)]
    pub minimizer: Option<Field>,
    pub iterations: usize,
    pub converged: bool,
    pub restriction: Restriction,
    /// `L²`-metric norm of the quotient gradient at the normalized minimizer.
    pub grad_norm: f64,
    /// Sup over significant `z` rows of `(max_ω φ - min_ω φ)/mean_ω φ`.
    pub angular_oscillation: f64,
    /// Node index of the `z`-mass median of the returned minimizer.
    pub center_row: usize,
}

/// The `ℓ = 1` harmonic used to seed symmetry breaking.
fn first_harmonic(sphere: &SphereGrid, j: usize) -> f64 {
    match sphere {
        SphereGrid::Point { .. } => 0.0,
        SphereGrid::Circle(_) => sphere.unit_vector(j)[0],
        SphereGrid::TwoSphere(_) => sphere.unit_vector(j)[2],
    }
}

pub fn initial_field(dp: &DerivedParams, grid: &CylinderGrid, preset: InitPreset) -> Result<Field> {
    let sol = Soliton::from_params(dp)?;
    Ok(match preset {
        InitPreset::Soliton => grid.sample(|z, _| sol.eval(z)),
        InitPreset::SolitonY1 => grid.sample(|z, j| {
            sol.eval(z) * (1.0 + SEED_AMPLITUDE * first_harmonic(&grid.sphere, j))
        }),
        InitPreset::Gaussian => {
            let peak = sol.peak();
            grid.sample(|z, _| peak * (-dp.lambda * z * z / 4.0).exp())
        }
    })
}

fn pin_ends(f: &mut Field) {
    let cols = f.cols;
    let last = (f.rows - 1) * cols;
    f.values[..cols].iter_mut().for_each(|v| *v = 0.0);
    f.values[last..].iter_mut().for_each(|v| *v = 0.0);
}

fn z_profile(f: &Field, sphere_w: &[f64]) -> Vec<f64> {
    (0..f.rows)
        .map(|i| f.row(i).iter().zip(sphere_w).map(|(v, w)| w * v * v).sum())
        .collect()
}

fn median_row(f: &Field, sphere_w: &[f64]) -> usize {
    let prof = z_profile(f, sphere_w);
    let total: f64 = prof.iter().sum();
    let mut acc = 0.0;
    for (i, m) in prof.iter().enumerate() {
        acc += m;
        if acc >= 0.5 * total {
            return i;
        }
    }
    f.rows / 2
}

/// Shifts rows by `k` (positive moves content to larger `z`), filling with 0.
fn shift_rows(f: &Field, k: isize) -> Field {
    let mut out = Field::zeros(f.rows, f.cols);
    for i in 0..f.rows as isize {
        let src = i - k;
        if src >= 0 && src < f.rows as isize {
            let (a, b) = (i as usize * f.cols, src as usize * f.cols);
            out.values[a..a + f.cols].copy_from_slice(&f.values[b..b + f.cols]);
        }
    }
    out
}

fn angular_oscillation(f: &Field) -> f64 {
    let peak = f.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0_f64;
    for i in 0..f.rows {
        let row = f.row(i);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        if mean > 1e-6 * peak {
            let (lo, hi) = row
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            worst = worst.max((hi - lo) / mean);
        }
    }
    worst
}

fn w_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum()
}

struct State {
    x: Field,
    q: f64,
    /// `L²`-metric gradient (Euclidean gradient divided by node weights).
    g: Vec<f64>,
}

fn evaluate(x: Field, grid: &CylinderGrid, dp: &DerivedParams, w: &[f64]) -> Result<State> {
    let (rep, grad) = cylinder_quotient_with_gradient(&x, grid, dp.lambda, dp.p)?;
    let cols = x.cols;
    let mut g: Vec<f64> = grad.values.iter().zip(w).map(|(g, w)| g / w).collect();
    let last = (x.rows - 1) * cols;
    g[..cols].iter_mut().for_each(|v| *v = 0.0);
    g[last..].iter_mut().for_each(|v| *v = 0.0);
    // Keep ‖x‖_p = 1 so step sizes stay comparable across iterations.
    let scale = rep.lpsq.sqrt().recip();
    let x = x.scaled(scale);
    let g = g.into_iter().map(|v| v / scale).collect();
    Ok(State { x, q: rep.quotient, g })
}

/// Minimizes the cylinder quotient from `init` on `grid`.
///
/// `Radial` runs on the `z` line (with `grid`'s dimension) and broadcasts the
/// minimizer back to `grid`'s shape.
pub fn minimize_quotient(
    dp: &DerivedParams,
    grid: &CylinderGrid,
    restriction: Restriction,
    init: &Init,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    if grid.d() != dp.d {
        return Err(CknError::Grid(format!(
            "grid dimension {} differs from d = {}",
            grid.d(),
            dp.d
        )));
    }
    let full_init = match init {
        Init::Preset(p) => initial_field(dp, grid, *p)?,
        Init::Field(f) => f.clone(),
    };
    let (rows, cols) = grid.shape();
    if full_init.rows != rows || full_init.cols != cols {
        return Err(CknError::Grid(format!(
            "initial field {}x{} on a {rows}x{cols} grid",
            full_init.rows, full_init.cols
        )));
    }
    if full_init.values.iter().any(|v| !(*v >= 0.0)) || full_init.interior_sup() == 0.0 {
        return domain("initial field must be nonnegative and nonzero");
    }
    if restriction == Restriction::Radial && !grid.sphere.is_point() {
        let line = CylinderGrid::new(grid.half_length(), grid.nz(), SphereGrid::point(dp.d)?)?;
        let sw = grid.sphere.weights();
        let vol = grid.sphere.volume();
        let avg: Vec<f64> = (0..rows)
            .map(|i| full_init.row(i).iter().zip(&sw).map(|(v, w)| v * w).sum::<f64>() / vol)
            .collect();
        let mut res = minimize_quotient(dp, &line, restriction, &Init::Field(Field::new(avg, rows, 1)?), opts)?;
        if let Some(m) = res.minimizer.take() {
            res.minimizer = Some(grid.sample(|_, _| 0.0).zip_map(&Field::new(
                (0..rows * cols).map(|k| m.values[k / cols]).collect(),
                rows,
                cols,
            )?, |_, v| v));
        }
        return Ok(res);
    }
    run_descent(dp, grid, restriction, full_init, opts)
}

fn run_descent(
    dp: &DerivedParams,
    grid: &CylinderGrid,
    restriction: Restriction,
    mut x0: Field,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    let w = grid.weights();
    let sphere_w = grid.sphere.weights();
    let centre = grid.nz() / 2;
    pin_ends(&mut x0);
    let mut st = evaluate(x0, grid, dp, &w)?;
    let mut history = vec![st.q];
    let mut tau = 1e-3;
    let mut prev: Option<(Field, Vec<f64>)> = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        if let Some((px, pg)) = prev.take() {
            let s: Vec<f64> = st.x.values.iter().zip(&px.values).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = st.g.iter().zip(&pg).map(|(a, b)| a - b).collect();
            let sy = w_dot(&s, &y, &w);
            if sy > 0.0 {
                tau = w_dot(&s, &s, &w) / sy;
            } else {
                tau *= 2.0;
            }
        }
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = st
                .x
                .values
                .iter()
                .zip(&st.g)
                .map(|(x, g)| (x - tau * g).max(FLOOR))
                .collect();
            let mut trial = Field::new(trial, st.x.rows, st.x.cols)?;
            pin_ends(&mut trial);
            let cand = evaluate(trial, grid, dp, &w)?;
            if cand.q <= st.q {
                accepted = Some(cand);
                break;
            }
            tau *= 0.5;
        }
        let Some(next) = accepted else {
            // No decrease available at any step size: stationary to roundoff.
            converged = true;
            break;
        };
        prev = Some((st.x.clone(), st.g.clone()));
        st = next;

        if opts.recenter_every > 0 && iterations % opts.recenter_every == 0 {
            let k = centre as isize - median_row(&st.x, &sphere_w) as isize;
            if k != 0 {
                let mut shifted = shift_rows(&st.x, k);
                pin_ends(&mut shifted);
                let cand = evaluate(shifted, grid, dp, &w)?;
                if cand.q <= st.q * (1.0 + 1e-14) {
                    st = cand;
                    prev = None;
                }
            }
        }

        history.push(st.q);
        if history.len() > opts.window {
            let old = history[history.len() - 1 - opts.window];
            if (old - st.q) / st.q < opts.tol {
                converged = true;
                break;
            }
        }
    }

    let grad_norm = w_dot(&st.g, &st.g, &w).sqrt();
    // ‖x‖_p = 1 and x minimizes: -Δx + Λx = Q x^{p-1}, so Q^{1/(p-2)} x solves the
    // unnormalized equation.
    let minimizer = st.x.scaled(st.q.powf(1.0 / (dp.p - 2.0)));
    Ok(MinimizeResult {
        constant: st.q,
        angular_oscillation: angular_oscillation(&minimizer),
        center_row: median_row(&minimizer, &sphere_w),
        minimizer: Some(minimizer),
        iterations,
        converged,
        restriction,
        grad_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakingReport {
    pub d: u32,
    pub p: f64,
    pub lambda: f64,
    pub lambda_fs: f64,
    pub radial_constant: f64,
    pub full_constant: f64,
    pub gap: f64,
    pub broken: bool,
    pub region: Region,
    /// Whether `broken` matches the classification of the parameters.
    pub agrees: bool,
}

/// Compares radial and full minimization on the same grid, the latter
/// seeded with the `ℓ = 1` perturbation of the soliton.
pub fn detect_breaking(dp: &DerivedParams, grid: &CylinderGrid, opts: &MinimizeOptions) -> Result<BreakingReport> {
    let radial = minimize_quotient(dp, grid, Restriction::Radial, &Init::Preset(InitPreset::Soliton), opts)?;
    let full = minimize_quotient(dp, grid, Restriction::Full, &Init::Preset(InitPreset::SolitonY1), opts)?;
    let gap = (radial.constant - full.constant) / radial.constant;
    let broken = gap > BREAKING_GAP;
    Ok(BreakingReport {
        d: dp.d,
        p: dp.p,
        lambda: dp.lambda,
        lambda_fs: dp.lambda_fs,
        radial_constant: radial.constant,
        full_constant: full.constant,
        gap,
        broken,
        region: dp.region,
        agrees: broken == (dp.region == Region::Breaking),
    })
}

/// Runs [`detect_breaking`] for every parameter set concurrently; results
/// keep the input order.
pub fn sweep_breaking(
    points: &[DerivedParams],
    grid_for: impl Fn(&DerivedParams) -> Result<CylinderGrid> + Sync,
    opts: &MinimizeOptions,
) -> Result<Vec<BreakingReport>> {
    points
        .par_iter()
        .map(|dp| detect_breaking(dp, &grid_for(dp)?, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::from_cylinder;
    use crate::profiles::radial_constant;

    fn line(dp: &DerivedParams, nz: usize) -> CylinderGrid {
        CylinderGrid::new(14.0 / dp.lambda.sqrt(), nz, SphereGrid::point(dp.d).unwrap()).unwrap()
    }

    #[test]
    fn radial_minimum_is_the_soliton_value() {
        let dp = from_cylinder(3, 4.0, 1.0).unwrap();
        let grid = line(&dp, 561);
        let res = minimize_quotient(&dp, &grid, Restriction::Radial, &Init::Preset(InitPreset::Gaussian), &MinimizeOptions::default()).unwrap();
        let exact = radial_constant(&dp).unwrap();
        assert!(res.converged);
        assert!((res.constant - exact).abs() < 1e-5 * exact, "{} vs {exact}", res.constant);
    }

    #[test]
    fn descent_is_monotone() {
        let dp = from_cylinder(3, 3.0, 0.5).unwrap();
        let grid = line(&dp, 201);
        let mut last = f64::INFINITY;
        for iters in [1, 5, 20, 80] {
            let opts = MinimizeOptions { max_iter: iters, ..Default::default() };
            let r = minimize_quotient(&dp, &grid, Restriction::Radial, &Init::Preset(InitPreset::Gaussian), &opts).unwrap();
            assert!(r.constant <= last * (1.0 + 1e-14));
            last = r.constant;
        }
    }

    #[test]
    fn shifting_and_centering() {
        let f = Field::new((0..10).map(f64::from).collect(), 5, 2).unwrap();
        let s = shift_rows(&f, 1);
        assert_eq!(s.values, vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let s = shift_rows(&f, -2);
        assert_eq!(&s.values[..4], &[4.0, 5.0, 6.0, 7.0]);
        let g = Field::new(vec![0.0, 0.0, 1.0, 0.0, 0.0], 5, 1).unwrap();
        assert_eq!(median_row(&g, &[1.0]), 2);
    }

    #[test]
    fn rejects_bad_input() {
        let dp = from_cylinder(3, 4.0, 1.0).unwrap();
        let grid = line(&dp, 101);
        let neg = Init::Field(grid.sample(|_, _| -1.0));
        assert!(minimize_quotient(&dp, &grid, Restriction::Radial, &neg, &MinimizeOptions::default()).is_err());
        let other = CylinderGrid::new(5.0, 101, SphereGrid::circle(8).unwrap()).unwrap();
        let init = Init::Preset(InitPreset::Soliton);
        assert!(minimize_quotient(&dp, &other, Restriction::Full, &init, &MinimizeOptions::default()).is_err());
        assert!("banana".parse::<InitPreset>().is_err());
        assert_eq!("soliton_y1".parse::<InitPreset>().unwrap(), InitPreset::SolitonY1);
    }
}

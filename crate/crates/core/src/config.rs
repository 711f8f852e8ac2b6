//! Run configuration: built-in defaults, then `key = value` files, then
//! explicit overrides (command-line flags), each layer winning over the last.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discretization::{CylinderGrid, RadialGrid, SphereGrid, WeightedGrid};
use crate::error::{CknError, Result};
use crate::minimize::MinimizeOptions;
use crate::params::DerivedParams;
use crate::profiles::{Soliton, TAIL};

/// Default cylinder step in units of `1/√Λ`.
pub const Z_STEP: f64 = 0.04;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Nodes on the cylinder axis; by default a step of
    /// [`Z_STEP`]`/√Λ`.
    pub nz: Option<usize>,
    pub nmu: usize,
    pub nphi: usize,
    /// Nodes on the radial half-line.
    pub ns: usize,
    /// Cylinder half-length in units of `1/√Λ`; by default where the
    /// soliton tail drops to [`TAIL`].
    pub z_scale: Option<f64>,
    pub s_min: f64,
    pub s_max: f64,
    /// Relative stopping tolerance of the minimizer.
    pub tol: f64,
    pub max_iter: usize,
    /// Nodes of the eigenvalue grids.
    pub spectrum_nz: usize,
    pub threshold_tol: f64,
    pub dt: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nz: None,
            nmu: 8,
            nphi: 16,
            ns: 701,
            z_scale: None,
            s_min: 1e-3,
            s_max: 1e3,
            tol: 1e-12,
            max_iter: 20_000,
            spectrum_nz: crate::spectrum::DEFAULT_NZ,
            threshold_tol: 1e-6,
            dt: 1e-3,
            seed: 0,
            out: None,
            trace: None,
        }
    }
}

/// `auto` (or an empty value) leaves the setting to be derived.
fn auto<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.is_empty() || value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CknError::Parse(format!("bad value `{value}` for `{key}`")))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "nz" => self.nz = auto(key, value)?,
            "nmu" => self.nmu = parse(key, value)?,
            "nphi" => self.nphi = parse(key, value)?,
            "ns" => self.ns = parse(key, value)?,
            "z_scale" => self.z_scale = auto(key, value)?,
            "s_min" => self.s_min = parse(key, value)?,
            "s_max" => self.s_max = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "max_iter" => self.max_iter = parse(key, value)?,
            "spectrum_nz" => self.spectrum_nz = parse(key, value)?,
            "threshold_tol" => self.threshold_tol = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "trace" => self.trace = Some(PathBuf::from(value)),
            _ => return Err(CknError::Parse(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment, blank lines are
    /// skipped.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CknError::Parse(format!("line {}: expected `key = value`, got `{raw}`", no + 1)))?;
            self.set(k.trim(), v.trim()).map_err(|e| match e {
                CknError::Parse(m) => CknError::Parse(format!("line {}: {m}", no + 1)),
                other => other,
            })?;
        }
        self.validate()
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CknError::Io(format!("{}: {e}", path.display())))?;
        self.apply_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(CknError::Parse(format!("{what} must be positive")));
        if self.nz == Some(0) || self.nmu == 0 || self.nphi == 0 || self.ns == 0 || self.spectrum_nz == 0 {
            return bad("grid resolutions");
        }
        if !(self.tol > 0.0 && self.threshold_tol > 0.0 && self.dt > 0.0) {
            return bad("tolerances and the time step");
        }
        if self.z_scale.is_some_and(|z| !(z > 0.0)) {
            return bad("z_scale");
        }
        if !(self.s_min > 0.0 && self.s_max > self.s_min) {
            return Err(CknError::Parse(format!(
                "need 0 < s_min < s_max, got {}, {}",
                self.s_min, self.s_max
            )));
        }
        if self.max_iter == 0 {
            return bad("max_iter");
        }
        Ok(())
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions {
            max_iter: self.max_iter,
            tol: self.tol,
            ..MinimizeOptions::default()
        }
    }

    /// Cylinder for the parameters; the two-sphere for `d = 3`, the circle
    /// for `d = 2`, and a single node otherwise.
    pub fn cylinder_grid(&self, dp: &DerivedParams) -> Result<CylinderGrid> {
        let sphere = match dp.d {
            2 => SphereGrid::circle(self.nphi)?,
            3 => SphereGrid::two_sphere(self.nmu, self.nphi)?,
            d => SphereGrid::point(d)?,
        };
        let width = dp.lambda.sqrt();
        let z = match self.z_scale {
            Some(k) => k / width,
            None => Soliton::from_params(dp)?.tail_half_length(TAIL),
        };
        let nz = self
            .nz
            .unwrap_or_else(|| (2.0 * z * width / Z_STEP).ceil() as usize + 1);
        CylinderGrid::new(z, nz, sphere)
    }

    /// Radial grid for the flow (angular variable dropped).
    pub fn flow_grid(&self, dp: &DerivedParams) -> Result<WeightedGrid> {
        let rg = RadialGrid::new(dp.n, dp.alpha, self.s_min, self.s_max, self.ns)?;
        Ok(WeightedGrid::new(rg, SphereGrid::point(dp.d)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let mut c = RunConfig::default();
        c.apply_str("# grid\nnz = 301\n\ntol=1e-9  # looser\nout = run/phi.txt\n").unwrap();
        assert_eq!(c.nz, Some(301));
        assert_eq!(c.tol, 1e-9);
        assert_eq!(c.out, Some(PathBuf::from("run/phi.txt")));
        assert_eq!(c.nmu, RunConfig::default().nmu);
    }

    #[test]
    fn rejects_bad_lines() {
        let mut c = RunConfig::default();
        assert!(c.apply_str("nz 30").is_err());
        assert!(c.apply_str("grid = 3").is_err());
        assert!(c.apply_str("nz = -3").is_err());
        assert!(c.apply_str("nz = 0").is_err());
        assert!(c.apply_str("tol = 0").is_err());
        assert!(c.apply_str("s_min = 10").is_err());
    }

    #[test]
    fn grids_follow_the_dimension() {
        let c = RunConfig::default();
        let dp = crate::params::from_cylinder(3, 4.0, 1.0).unwrap();
        let g = c.cylinder_grid(&dp).unwrap();
        assert_eq!(g.sphere.d(), 3);
        let dp = crate::params::from_cylinder(5, 3.0, 1.0).unwrap();
        assert!(c.cylinder_grid(&dp).unwrap().sphere.is_point());
    }

    #[test]
    fn default_truncation_meets_the_tail_criterion() {
        let c = RunConfig::default();
        for (d, p, l) in [(3, 4.0, 1.0), (2, 3.0, 0.2), (3, 5.0, 3.0)] {
            let dp = crate::params::from_cylinder(d, p, l).unwrap();
            let g = c.cylinder_grid(&dp).unwrap();
            let sol = Soliton::from_params(&dp).unwrap();
            assert!(sol.eval(g.half_length()) <= TAIL * sol.peak() * (1.0 + 1e-9));
            let h = 2.0 * g.half_length() / (g.nz() - 1) as f64;
            assert!(h * l.sqrt() <= Z_STEP);
        }
        let mut c = c;
        c.apply_str("z_scale = 12\nnz = 601").unwrap();
        let dp = crate::params::from_cylinder(3, 4.0, 4.0).unwrap();
        let g = c.cylinder_grid(&dp).unwrap();
        assert_eq!((g.half_length(), g.nz()), (6.0, 601));
        c.apply_str("nz = auto").unwrap();
        assert_eq!(c.nz, None);
    }
}

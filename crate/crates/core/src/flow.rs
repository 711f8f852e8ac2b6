//! The fast diffusion flow `∂_t v = 𝓛 v^{1-1/n}` on radial grids, the
//! pressure functional along it, and the identities for its derivative.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::discretization::{BandMatrix, Field, WeightedGrid};
use crate::error::{domain, CknError, Result};
use crate::functionals::{pressure, pressure_functional};
use crate::params::DerivedParams;
use crate::profiles::SelfSimilar;

/// Retries with halved `dt` before a step is declared failed.
pub const MAX_HALVINGS: usize = 20;
/// Relative mass flux through `s_max` per unit time that aborts a run.
pub const FLUX_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub v: Field,
    pub steps: usize,
}

/// Linearly implicit integrator on a radial [`WeightedGrid`] with zero-slope
/// (mirror) closure at `s_min` and `s_max`.
///
/// Pinning `v` at `s_max` instead leaves a boundary layer in `𝗉` whose
/// contribution makes `J` rise slowly; the mirror closure conserves mass and
/// keeps `J` monotone.
#[derive(Debug, Clone)]
pub struct FlowSolver {
    pub grid: WeightedGrid,
    pub dp: DerivedParams,
}

impl FlowSolver {
    pub fn new(grid: WeightedGrid, dp: DerivedParams) -> Result<Self> {
        if !grid.sphere.is_point() {
            return Err(CknError::Unsupported(
                "the implicit flow runs on radial grids only".into(),
            ));
        }
        if (grid.n() - dp.n).abs() > 1e-12 * dp.n || (grid.alpha() - dp.alpha).abs() > 1e-12 * dp.alpha {
            return Err(CknError::Grid("grid (n, α) differ from the parameters".into()));
        }
        Ok(FlowSolver { grid, dp })
    }

    pub fn exponent(&self) -> f64 {
        1.0 - 1.0 / self.dp.n
    }

    pub fn state(&self, v: Field) -> Result<FlowState> {
        v.require_positive("initial density")?;
        let (rows, cols) = self.grid.shape();
        if v.rows != rows || v.cols != cols {
            return Err(CknError::Grid("initial density has the wrong shape".into()));
        }
        Ok(FlowState { t: 0.0, v, steps: 0 })
    }

    pub fn mass(&self, v: &Field) -> Result<f64> {
        self.grid.integrate(v)
    }

    /// `𝓛 v^m`, the right-hand side of the flow, with the solver's closure.
    pub fn rate(&self, v: &Field) -> Result<Field> {
        let m = self.exponent();
        let vm: Vec<f64> = v.values.iter().map(|x| x.powf(m)).collect();
        Field::new(self.grid.radial.radial_op_mirrored().apply(&vm), v.rows, 1)
    }

    fn try_step(&self, v: &Field, dt: f64) -> Result<Option<Field>> {
        let m = self.exponent();
        let n = v.rows;
        let op = self.grid.radial.radial_op_mirrored();
        let coef: Vec<f64> = v.values.iter().map(|x| m * x.powf(m - 1.0)).collect();
        let explicit = op.apply(&v.values.iter().map(|x| (1.0 - m) * x.powf(m)).collect::<Vec<_>>());
        let (kl, ku) = op.bandwidths();
        let mut a = BandMatrix::zeros(n, kl, ku);
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let (s, c) = op.row(i);
            for (k, l) in c.iter().enumerate() {
                if *l != 0.0 {
                    a.add(i, s + k, -dt * l * coef[s + k]);
                }
            }
            a.add(i, i, 1.0);
            rhs[i] = v.values[i] + dt * explicit[i];
        }
        let new = a.factor()?.solve(&rhs);
        if new.iter().all(|x| *x > 0.0 && x.is_finite()) {
            Ok(Some(Field::new(new, n, 1)?))
        } else {
            Ok(None)
        }
    }

    /// One step of size `dt`, taken as `2^k` substeps of `dt/2^k` if
    /// positivity fails.
    pub fn step(&self, state: &FlowState, dt: f64) -> Result<FlowState> {
        if !(dt > 0.0) {
            return domain(format!("time step {dt} must be positive"));
        }
        for k in 0..=MAX_HALVINGS {
            let parts = 1usize << k;
            let h = dt / parts as f64;
            let mut v = state.v.clone();
            let mut ok = true;
            for _ in 0..parts {
                match self.try_step(&v, h)? {
                    Some(next) => v = next,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Ok(FlowState {
                    t: state.t + dt,
                    v,
                    steps: state.steps + parts,
                });
            }
        }
        Err(CknError::Positivity(format!(
            "step at t = {} lost positivity after {MAX_HALVINGS} halvings of dt = {dt}",
            state.t
        )))
    }

    /// Integrates to `t_end`, recording `J` and the mass after every step.
    pub fn run(&self, v0: Field, t_end: f64, dt: f64) -> Result<FlowTrace> {
        if !(t_end > 0.0) {
            return domain(format!("final time {t_end} must be positive"));
        }
        let mut state = self.state(v0)?;
        let j0 = pressure_functional(&state.v, &self.grid, &self.dp)?;
        let m0 = self.mass(&state.v)?;
        let mut trace = FlowTrace {
            times: vec![0.0],
            j: vec![j0],
            mass: vec![m0],
            dj_step: vec![0.0],
            monotone: true,
            final_state: None,
        };
        let steps = (t_end / dt).ceil() as usize;
        let dt = t_end / steps as f64;
        for _ in 0..steps {
            state = self.step(&state, dt)?;
            let j = pressure_functional(&state.v, &self.grid, &self.dp)?;
            let mass = self.mass(&state.v)?;
            let prev_mass = *trace.mass.last().expect("non-empty");
            if ((mass - prev_mass) / m0).abs() > FLUX_TOLERANCE * dt {
                return Err(CknError::Domain(format!(
                    "mass flux through the boundary {:.3e} per unit time exceeds tolerance",
                    ((mass - prev_mass) / m0).abs() / dt
                )));
            }
            let dj = j - trace.j.last().expect("non-empty");
            if dj > 1e-10 * j0.abs() {
                trace.monotone = false;
            }
            trace.times.push(state.t);
            trace.j.push(j);
            trace.mass.push(mass);
            trace.dj_step.push(dj);
        }
        trace.final_state = Some(state.v);
        Ok(trace)
    }
}

impl FlowSolver {
    /// State at `t_end` after uniform steps of about `dt`.
    pub fn advance(&self, v0: Field, t_end: f64, dt: f64) -> Result<Field> {
        if !(t_end > 0.0) {
            return domain(format!("final time {t_end} must be positive"));
        }
        let steps = (t_end / dt).ceil() as usize;
        let dt = t_end / steps as f64;
        let mut state = self.state(v0)?;
        for _ in 0..steps {
            state = self.step(&state, dt)?;
        }
        Ok(state.v)
    }

    /// Richardson combination of runs with `dt`, `dt/2`, `dt/4`:
    /// `(8 v_{dt/4} - 6 v_{dt/2} + v_dt)/3`, third order in time.
    pub fn advance_extrapolated(&self, v0: Field, t_end: f64, dt: f64) -> Result<Field> {
        let steps = (t_end / dt).ceil().max(1.0);
        let dt = t_end / steps;
        let a = self.advance(v0.clone(), t_end, dt)?;
        let b = self.advance(v0.clone(), t_end, dt / 2.0)?;
        let c = self.advance(v0, t_end, dt / 4.0)?;
        let values = (0..a.len())
            .map(|k| (8.0 * c.values[k] - 6.0 * b.values[k] + a.values[k]) / 3.0)
            .collect();
        Field::new(values, a.rows, a.cols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    pub ns: Vec<usize>,
    /// `‖v - v⋆(1 + t)‖₁ / ‖v⋆(1 + t)‖₁` per grid.
    pub errors: Vec<f64>,
    /// `log₂` of successive error ratios.
    pub orders: Vec<f64>,
}

/// Flows `v⋆(1)` for time `t_end` on radial grids over `[s_min, s_max]`
/// with each node count in `ns`, and compares with `v⋆(1 + t_end)`.
///
/// Time is extrapolated ([`FlowSolver::advance_extrapolated`]) so that the
/// errors, and the orders between successive doublings, are spatial.
pub fn self_similar_tracking(
    dp: &DerivedParams,
    range: (f64, f64),
    ns: &[usize],
    t_end: f64,
    dt: f64,
) -> Result<TrackingReport> {
    use crate::discretization::{RadialGrid, SphereGrid};
    let ss = SelfSimilar::new(1.0, dp.n, dp.alpha)?;
    let mut errors = Vec::with_capacity(ns.len());
    for &count in ns {
        let rg = RadialGrid::new(dp.n, dp.alpha, range.0, range.1, count)?;
        let solver = FlowSolver::new(WeightedGrid::new(rg, SphereGrid::point(dp.d)?), *dp)?;
        let v0 = solver.grid.sample(|s, _| ss.eval(1.0, s).unwrap_or(f64::NAN));
        let exact = solver.grid.sample(|s, _| ss.eval(1.0 + t_end, s).unwrap_or(f64::NAN));
        let v = solver.advance_extrapolated(v0, t_end, dt)?;
        let diff = v.zip_map(&exact, |a, b| (a - b).abs());
        errors.push(solver.grid.integrate(&diff)? / solver.grid.integrate(&exact)?);
    }
    let orders = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    Ok(TrackingReport {
        ns: ns.to_vec(),
        errors,
        orders,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub j: Vec<f64>,
    pub mass: Vec<f64>,
    pub dj_step: Vec<f64>,
    /// `J` never rose by more than `1e-10·|J(0)|` in a step.
    pub monotone: bool,
    #[serde(skip)]
    pub final_state: Option<Field>,
}

impl FlowTrace {
    /// Largest relative mass drift per unit time.
    pub fn mass_drift_rate(&self) -> f64 {
        let m0 = self.mass[0];
        let t = *self.times.last().expect("non-empty");
        self.mass.iter().map(|m| ((m - m0) / m0).abs()).fold(0.0, f64::max) / t
    }

    /// `t,J,mass,dJ_step` with LF line endings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,J,mass,dJ_step")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{},{},{},{}",
                crate::json::format_g17(self.times[i]),
                crate::json::format_g17(self.j[i]),
                crate::json::format_g17(self.mass[i]),
                crate::json::format_g17(self.dj_step[i])
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub mismatch: f64,
    /// `(2/p) ∫ |𝓛u| u^{1-p} |𝓛 u^{p(n-1)/n}| dμ`, the size of the terms
    /// that cancel in `rhs`.
    pub scale: f64,
}

/// `d/dt` of `(n-2)²/4 ∫ v|𝖣𝗉|² dμ` at `t = 0` along the flow started from
/// `v = u^p`, against `-(2/p) ∫ (𝓛u) u^{1-p} 𝓛(u^{p(n-1)/n}) dμ`.
///
/// The left side is a central difference over explicit steps `v ± δ 𝓛v^m`.
pub fn dj_dt_identity(u: &Field, grid: &WeightedGrid, dp: &DerivedParams) -> Result<DerivativeCheck> {
    u.require_positive("u")?;
    let p = dp.p;
    let m = 1.0 - 1.0 / dp.n;
    let lu = grid.op_l(u)?;
    let w_pow = grid.op_l(&u.map(|x| x.powf(p * m)))?;
    let mut integrand = Field::zeros(u.rows, u.cols);
    let mut absolute = Field::zeros(u.rows, u.cols);
    for k in 0..u.len() {
        let a = lu.values[k] * u.values[k].powf(1.0 - p);
        integrand.values[k] = a * w_pow.values[k];
        absolute.values[k] = (a * w_pow.values[k]).abs();
    }
    let rhs = -(2.0 / p) * grid.integrate(&integrand)?;
    let scale = (2.0 / p) * grid.integrate(&absolute)?;

    let v = u.map(|x| x.powf(p));
    let rate = grid.op_l(&v.map(|x| x.powf(m)))?;
    let k = (dp.n - 2.0).powi(2) / 4.0;
    let j = k * pressure_functional(&v, grid, dp)?;
    // Characteristic time from the size of the cancelling terms: `rhs`
    // itself is roundoff-sized at a solution.
    let tau = if scale > 0.0 { j / scale } else { 1.0 };
    let delta = 1e-6 * tau;
    let plus = v.zip_map(&rate, |a, b| a + delta * b);
    let minus = v.zip_map(&rate, |a, b| a - delta * b);
    let lhs = k * (pressure_functional(&plus, grid, dp)? - pressure_functional(&minus, grid, dp)?) / (2.0 * delta);
    let mismatch = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(scale);
    Ok(DerivativeCheck {
        lhs,
        rhs,
        mismatch,
        scale,
    })
}

/// Pointwise `(d-1)/d · (𝗉Δ𝗉 - d|∇𝗉|²)`, the pressure velocity in the
/// Euclidean case (`α = 1`, `n = d`).
pub fn pressure_velocity(pr: &Field, grid: &WeightedGrid) -> Result<Field> {
    let d = grid.n();
    let lap = grid.op_l(pr)?;
    let g2 = grid.d_sq(pr)?;
    let mut out = Field::zeros(pr.rows, pr.cols);
    for k in 0..pr.len() {
        out.values[k] = (d - 1.0) / d * (pr.values[k] * lap.values[k] - d * g2.values[k]);
    }
    Ok(out)
}

/// Fraction of the log-radius range dropped at each end when measuring the
/// pressure residual; both closures leave boundary layers there.
pub const PRESSURE_EDGE_FRACTION: f64 = 0.15;

/// `sup |(𝗉(dt) - 𝗉)/dt - (d-1)/d (𝗉Δ𝗉 - d|∇𝗉|²)| / sup |velocity|` over
/// the interior window, after one flow step of `v = 𝗉^{-d}`.
pub fn pressure_evolution_residual(pr: &Field, solver: &FlowSolver, dt: f64) -> Result<f64> {
    let dp = &solver.dp;
    if (dp.alpha - 1.0).abs() > 1e-12 || (dp.n - f64::from(dp.d)).abs() > 1e-12 {
        return domain("the pressure equation holds in the Euclidean case α = 1, n = d");
    }
    pr.require_positive("pressure")?;
    let v = pr.map(|x| x.powf(-dp.n));
    let next = solver.step(&solver.state(v)?, dt)?;
    let pr1 = pressure(&next.v, dp.n)?;
    let vel = pressure_velocity(pr, &solver.grid)?;
    let s = solver.grid.radial.s_nodes();
    let (lo, hi) = (s[0].ln(), s[s.len() - 1].ln());
    let cut = PRESSURE_EDGE_FRACTION * (hi - lo);
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for (i, si) in s.iter().enumerate() {
        let t = si.ln();
        if t < lo + cut || t > hi - cut {
            continue;
        }
        let r = (pr1.values[i] - pr.values[i]) / dt - vel.values[i];
        res = res.max(r.abs());
        scale = scale.max(vel.values[i].abs());
    }
    Ok(res / scale)
}

/// `Tr[(H - (ΔP/d) I)²]` for a radial `𝗉(r)` in `R^d`:
/// `(d-1)/d · (𝗉'' - 𝗉'/r)²`.
pub fn radial_trace_free_hessian_sq(pr: &Field, grid: &WeightedGrid) -> Result<Field> {
    let d = grid.n();
    let ds = grid.d_s(pr)?;
    let dss = grid.d_s(&ds)?;
    let mut out = Field::zeros(pr.rows, pr.cols);
    for i in 0..pr.rows {
        let r = grid.radial.s(i);
        for j in 0..pr.cols {
            let k = i * pr.cols + j;
            out.values[k] = (d - 1.0) / d * (dss.values[k] - ds.values[k] / r).powi(2);
        }
    }
    Ok(out)
}

/// Initial densities for the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowInit {
    /// `v⋆(1)` with `c = 1`.
    SelfSimilar,
    /// `(A + B s²)^{-n} (1 + c e^{-(s-1)²})` with seeded `A, B, c`.
    Perturbed,
}

impl std::str::FromStr for FlowInit {
    type Err = CknError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "self-similar" | "self_similar" => Ok(FlowInit::SelfSimilar),
            "perturbed" => Ok(FlowInit::Perturbed),
            other => Err(CknError::Parse(format!("unknown flow init `{other}`"))),
        }
    }
}

pub fn initial_density(init: FlowInit, grid: &WeightedGrid, dp: &DerivedParams, seed: u64) -> Result<Field> {
    use rand::{Rng, SeedableRng};
    match init {
        FlowInit::SelfSimilar => {
            let ss = SelfSimilar::new(1.0, dp.n, dp.alpha)?;
            let v = grid.sample(|s, _| ss.eval(1.0, s).unwrap_or(f64::NAN));
            v.require_positive("self-similar density")?;
            Ok(v)
        }
        FlowInit::Perturbed => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (a, b, c) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(-0.4..0.4));
            Ok(grid.sample(|s, _| (a + b * s * s).powf(-dp.n) * (1.0 + c * (-(s - 1.0f64).powi(2)).exp())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{RadialGrid, SphereGrid};
    use crate::params::{derive, CknParams};
    use crate::profiles::normalized_radial;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dp(d: u32, a: f64, b: f64) -> DerivedParams {
        derive(CknParams { d, a, b }).unwrap()
    }

    fn solver(dp: &DerivedParams, ns: usize) -> FlowSolver {
        let rg = RadialGrid::new(dp.n, dp.alpha, 1e-3, 1e3, ns).unwrap();
        FlowSolver::new(WeightedGrid::new(rg, SphereGrid::point(dp.d).unwrap()), *dp).unwrap()
    }

    fn self_similar(dp: &DerivedParams) -> SelfSimilar {
        SelfSimilar::new(1.0, dp.n, dp.alpha).unwrap()
    }

    #[test]
    fn one_step_follows_self_similar_solution() {
        let dp = dp(3, -0.5, -0.3);
        let sv = solver(&dp, 1401);
        let ss = self_similar(&dp);
        let v0 = sv.grid.sample(|s, _| ss.eval(1.0, s).unwrap());
        let st = sv.step(&sv.state(v0).unwrap(), 1e-3).unwrap();
        let exact = sv.grid.sample(|s, _| ss.eval(1.001, s).unwrap());
        let diff = st.v.zip_map(&exact, |a, b| (a - b).abs());
        let err = sv.grid.integrate(&diff).unwrap() / sv.grid.integrate(&exact).unwrap();
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn mass_is_conserved() {
        let dp = dp(3, -0.5, -0.3);
        let sv = solver(&dp, 701);
        let ss = self_similar(&dp);
        let v0 = sv.grid.sample(|s, _| ss.eval(1.0, s).unwrap());
        let tr = sv.run(v0, 0.2, 1e-2).unwrap();
        assert!(tr.mass_drift_rate() < 1e-8, "{}", tr.mass_drift_rate());
        // J is constant along the exact solution; compare with it
        let ex = sv.grid.sample(|s, _| ss.eval(1.2, s).unwrap());
        let jex = pressure_functional(&ex, &sv.grid, &dp).unwrap();
        assert!((tr.j.last().unwrap() - jex).abs() < 1e-4 * jex);
    }

    #[test]
    fn pressure_functional_decreases_from_random_data() {
        let dp = dp(3, -0.5, -0.3);
        let sv = solver(&dp, 701);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let (a, b, c) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(-0.4..0.4));
            let v0 = sv.grid.sample(|s, _| (a + b * s * s).powf(-dp.n) * (1.0 + c * (-(s - 1.0).powi(2)).exp()));
            let tr = sv.run(v0, 0.1, 1e-3).unwrap();
            assert!(tr.monotone, "{:?} {:?}", tr.j, tr.dj_step);
            assert!(tr.j.last().unwrap() < &tr.j[0]);
        }
    }

    #[test]
    fn extrapolation_removes_the_time_error() {
        let dp = dp(3, -0.5, -0.3);
        let sv = solver(&dp, 401);
        let ss = self_similar(&dp);
        let v0 = sv.grid.sample(|s, _| ss.eval(1.0, s).unwrap());
        let exact = sv.grid.sample(|s, _| ss.eval(1.05, s).unwrap());
        let l1 = |v: &Field| sv.grid.integrate(&v.zip_map(&exact, |a, b| (a - b).abs())).unwrap();
        let plain = l1(&sv.advance(v0.clone(), 0.05, 2.5e-4).unwrap());
        let rich = l1(&sv.advance_extrapolated(v0, 0.05, 1e-3).unwrap());
        assert!(rich < 0.05 * plain, "{rich} vs {plain}");
    }

    #[test]
    fn tracking_converges_at_fourth_order() {
        let dp = dp(3, -0.5, -0.3);
        let rep = self_similar_tracking(&dp, (1e-3, 1e3), &[201, 401, 801], 0.05, 1e-3).unwrap();
        assert!(rep.orders.iter().all(|o| *o > 3.5), "{rep:?}");
    }

    #[test]
    fn csv_layout() {
        let tr = FlowTrace {
            times: vec![0.0, 0.5],
            j: vec![2.0, 1.5],
            mass: vec![1.0, 1.0],
            dj_step: vec![0.0, -0.5],
            monotone: true,
            final_state: None,
        };
        let mut out = Vec::new();
        tr.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "t,J,mass,dJ_step\n0,2,1,0\n0.5,1.5,1,-0.5\n");
    }

    #[test]
    fn derivative_identity_on_radial_fields() {
        let dp = dp(3, -0.5, -0.3);
        let rg = RadialGrid::new(dp.n, dp.alpha, 1e-2, 1e2, 1601).unwrap();
        let g = WeightedGrid::new(rg, SphereGrid::point(3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..3 {
            let (a, c) = (rng.gen_range(0.5..2.0), rng.gen_range(-0.3..0.3));
            let u = g.sample(|s, _| (1.0 + a * s * s).powf(-dp.n / 2.0) * (1.0 + c * s * s / (1.0 + s * s)));
            let chk = dj_dt_identity(&u, &g, &dp).unwrap();
            assert!(chk.mismatch < 1e-4, "{chk:?}");
            assert!(chk.lhs < 0.0);
        }
    }

    #[test]
    fn derivative_vanishes_at_the_optimizer() {
        let dp = dp(3, -0.5, -0.3);
        let rg = RadialGrid::new(dp.n, dp.alpha, 1e-3, 1e3, 2001).unwrap();
        let g = WeightedGrid::new(rg, SphereGrid::point(3).unwrap());
        let prof = normalized_radial(&dp);
        let u = g.sample(|s, _| prof.eval(s));
        let chk = dj_dt_identity(&u, &g, &dp).unwrap();
        assert!(chk.rhs.abs() < 1e-8 * chk.scale, "{chk:?}");
    }

    #[test]
    fn pressure_equation_in_the_euclidean_case() {
        let dp = dp(3, 0.0, 0.0);
        let sv = solver(&dp, 1401);
        let ss = self_similar(&dp);
        let pr = sv.grid.sample(|s, _| ss.pressure(1.0, s).unwrap());
        let r1 = pressure_evolution_residual(&pr, &sv, 1e-4).unwrap();
        let r2 = pressure_evolution_residual(&pr, &sv, 1e-5).unwrap();
        assert!(r1 < 1e-5 && r2 <= r1, "{r1} {r2}");
        let tf = radial_trace_free_hessian_sq(&sv.grid.sample(|s, _| 0.7 + 2.0 * s * s), &sv.grid).unwrap();
        // relative to (𝗉'')² = 16
        assert!(tf.interior_sup() < 1e-12 * 16.0, "{}", tf.interior_sup());
        let tf = radial_trace_free_hessian_sq(&sv.grid.sample(|s, _| 1.0 + s.powi(4)), &sv.grid).unwrap();
        assert!(tf.interior_sup() > 1.0);
    }

    #[test]
    fn large_steps_are_subdivided_or_rejected() {
        let dp = dp(3, -0.5, -0.3);
        let sv = solver(&dp, 401);
        assert!(sv.step(&sv.state(sv.grid.sample(|_, _| 1.0)).unwrap(), -1.0).is_err());
        assert!(sv.state(sv.grid.sample(|_, _| 0.0)).is_err());
    }
}

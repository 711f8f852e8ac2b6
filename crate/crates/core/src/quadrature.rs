//! One-dimensional quadrature and the special-function constants it feeds.

use statrs::function::gamma::ln_gamma;

use crate::error::{CknError, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS7_WEIGHTS[3] * fc;
    for j in 0..7 {
        let x = h * KRONROD_NODES[j];
        let s = f(c - x) + f(c + x);
        kronrod += KRONROD_WEIGHTS[j] * s;
        if j % 2 == 1 {
            gauss += GAUSS7_WEIGHTS[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Panels are bisected until the summed error estimate drops below
/// `abs_tol`. Fails after `max_panels` panels.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    let (v, e) = kronrod_panel(&f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        if total_err <= abs_tol {
            break;
        }
        if panels.len() >= max_panels {
            return Err(CknError::NoConvergence(format!(
                "adaptive quadrature: error estimate {total_err:e} after {max_panels} panels"
            )));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty panel list");
        let (pa, pb, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        let (v1, e1) = kronrod_panel(&f, pa, mid);
        let (v2, e2) = kronrod_panel(&f, mid, pb);
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
    // Sum small panels first.
    let mut values: Vec<f64> = panels.iter().map(|p| p.2).collect();
    values.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    Ok(values.iter().sum())
}

/// `|S^{k}| = 2π^{(k+1)/2} / Γ((k+1)/2)`, the volume of the unit `k`-sphere.
pub fn unit_sphere_volume(k: u32) -> f64 {
    let m = (f64::from(k) + 1.0) / 2.0;
    (2.0_f64.ln() + m * std::f64::consts::PI.ln() - ln_gamma(m)).exp()
}

/// Best constant of the Sobolev inequality in dimension `d ≥ 3`:
/// `π d (d - 2) (Γ(d/2)/Γ(d))^{2/d}`.
pub fn sobolev_constant(d: u32) -> f64 {
    let df = f64::from(d);
    let ratio = (ln_gamma(df / 2.0) - ln_gamma(df)) * 2.0 / df;
    std::f64::consts::PI * df * (df - 2.0) * ratio.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_is_exact_to_degree() {
        let (x, w) = gauss_legendre(8);
        for k in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {k}: {q} vs {exact}");
        }
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let v = integrate_adaptive(|x| (-x * x).exp(), -30.0, 30.0, 1e-13, 10_000).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sphere_volumes() {
        assert!((unit_sphere_volume(1) - 2.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_volume(2) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn sobolev_constant_three_dimensions() {
        // Γ(3/2)/Γ(3) = √π/4
        let direct = 3.0 * PI * (PI.sqrt() / 4.0).powf(2.0 / 3.0);
        assert!((sobolev_constant(3) - direct).abs() < 1e-12);
        assert!((sobolev_constant(3) - 5.478).abs() < 1e-3);
    }
}

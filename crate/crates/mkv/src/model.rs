//! Problem definition: potentials, diffusion and noise covariance.
//!
//! The environmental potential `V` and interaction potential `F` are finite
//! trigonometric series, which keeps them exactly differentiable and
//! evaluable on any grid. Presets cover the double-well `V = cos 2x` and
//! four-well `V = cos 4x`, both with `F = -cos x`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{grid, SpectralField, SQRT_2PI};

/// A finite real trigonometric series `Σ_n a_n cos(nx) + b_n sin(nx)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigSeries {
    /// Terms `(n, a_n, b_n)` with distinct nonnegative `n`.
    pub terms: Vec<(u32, f64, f64)>,
}

impl TrigSeries {
    pub fn new(terms: Vec<(u32, f64, f64)>) -> Self {
        TrigSeries { terms }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(n, a, b)| {
                let nx = n as f64 * x;
                a * nx.cos() + b * nx.sin()
            })
            .sum()
    }

    /// Termwise derivative.
    pub fn derivative(&self) -> TrigSeries {
        TrigSeries {
            terms: self
                .terms
                .iter()
                .map(|&(n, a, b)| (n, n as f64 * b, -(n as f64) * a))
                .collect(),
        }
    }

    /// Largest harmonic index present.
    pub fn max_harmonic(&self) -> u32 {
        self.terms.iter().map(|t| t.0).max().unwrap_or(0)
    }

    /// Coefficient against the basis `e_k = e^{ikx}/√(2π)`:
    /// `a cos(nx) + b sin(nx) = √(2π)/2 · [(a - ib) e_n + (a + ib) e_{-n}]`.
    pub fn basis_coeff(&self, k: i64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for &(n, a, b) in &self.terms {
            let n = n as i64;
            if k == n && n == 0 {
                acc += Complex64::new(SQRT_2PI * a, 0.0);
            } else if k == n {
                acc += Complex64::new(a, -b) * (SQRT_2PI / 2.0);
            } else if k == -n {
                acc += Complex64::new(a, b) * (SQRT_2PI / 2.0);
            }
        }
        acc
    }
}

/// Per-mode noise amplitudes `λ_k` for `0 ≤ k ≤ J/2`.
///
/// `λ_0 = 0` (mass conservation) and `λ_k = γ / k^s` for `k ≥ 1`, extended
/// symmetrically to negative modes. The Nyquist mode carries no noise since
/// the field representation pins it to zero.
#[derive(Clone, Debug)]
pub struct NoiseSpec {
    lambdas: Vec<f64>,
}

impl NoiseSpec {
    pub fn new(gamma: f64, s: f64, j: usize) -> Self {
        let half = j / 2;
        let mut lambdas = vec![0.0; half + 1];
        for (k, l) in lambdas.iter_mut().enumerate().skip(1) {
            *l = gamma / (k as f64).powf(s);
        }
        lambdas[half] = 0.0;
        NoiseSpec { lambdas }
    }

    /// Amplitude for mode `k` (symmetric in the sign of `k`).
    pub fn lambda(&self, k: i64) -> f64 {
        let k = k.unsigned_abs() as usize;
        if k < self.lambdas.len() {
            self.lambdas[k]
        } else {
            0.0
        }
    }
}

/// Named potential presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `V = cos 2x`, `F = -cos x`.
    DoubleWell,
    /// `V = cos 4x`, `F = -cos x`.
    FourWell,
}

impl Preset {
    /// The `(V, F)` pair of the preset.
    pub fn potentials(&self) -> (TrigSeries, TrigSeries) {
        let v = match self {
            Preset::DoubleWell => TrigSeries::new(vec![(2, 1.0, 0.0)]),
            Preset::FourWell => TrigSeries::new(vec![(4, 1.0, 0.0)]),
        };
        (v, TrigSeries::new(vec![(1, -1.0, 0.0)]))
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double_well" => Ok(Preset::DoubleWell),
            "four_well" => Ok(Preset::FourWell),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

/// The McKean-Vlasov model: diffusion `σ`, potentials `V` and `F`, noise
/// parameters `(γ, s)`, resolved at `J` modes.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    sigma: f64,
    gamma: f64,
    s: f64,
    j: usize,
    v: TrigSeries,
    f: TrigSeries,
    vprime_grid: Vec<f64>,
    fprime_coeffs: SpectralField,
    noise: NoiseSpec,
}

impl ModelSpec {
    pub fn new(
        v: TrigSeries,
        f: TrigSeries,
        sigma: f64,
        gamma: f64,
        s: f64,
        j: usize,
    ) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
        }
        if gamma < 0.0 {
            return Err(Error::Config(format!("gamma must be nonnegative, got {gamma}")));
        }
        if s <= 0.5 {
            return Err(Error::Config(format!(
                "s must exceed 1/2 for well-posedness, got {s}"
            )));
        }
        if j < 4 || j % 2 != 0 {
            return Err(Error::Config(format!("J must be even and >= 4, got {j}")));
        }
        let vprime = v.derivative();
        let vprime_grid = grid(2 * j).into_iter().map(|x| vprime.eval(x)).collect();
        let fprime = f.derivative();
        let mut fprime_coeffs = SpectralField::zeros(j);
        for k in 1..(j as i64) / 2 {
            let c = fprime.basis_coeff(k);
            if c != Complex64::ZERO {
                fprime_coeffs.set_coeff(k, c);
            }
        }
        // F' is the derivative of a periodic function, so its mean vanishes.
        let noise = NoiseSpec::new(gamma, s, j);
        Ok(ModelSpec {
            sigma,
            gamma,
            s,
            j,
            v,
            f,
            vprime_grid,
            fprime_coeffs,
            noise,
        })
    }

    /// Canonical preset models.
    pub fn preset(which: Preset, sigma: f64, gamma: f64, s: f64, j: usize) -> Result<Self> {
        let (v, f) = which.potentials();
        ModelSpec::new(v, f, sigma, gamma, s, j)
    }

    /// Same model resolved at a different mode count.
    pub fn with_modes(&self, j: usize) -> Result<Self> {
        ModelSpec::new(self.v.clone(), self.f.clone(), self.sigma, self.gamma, self.s, j)
    }

    /// Non-fatal validation notes (the uniqueness argument for the invariant
    /// measure needs `1/2 < s < 1`).
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.s >= 1.0 {
            w.push(format!(
                "s = {} is outside (1/2, 1); uniqueness of the invariant measure is not guaranteed",
                self.s
            ));
        }
        w
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn modes(&self) -> usize {
        self.j
    }
    pub fn potential_v(&self) -> &TrigSeries {
        &self.v
    }
    pub fn potential_f(&self) -> &TrigSeries {
        &self.f
    }
    /// `V'` sampled on the `2J` de-aliasing grid.
    pub fn vprime_grid(&self) -> &[f64] {
        &self.vprime_grid
    }
    /// Basis coefficients of `F'`.
    pub fn fprime_coeffs(&self) -> &SpectralField {
        &self.fprime_coeffs
    }
    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    /// Periodic convolution `F' ∗ u` via the convolution theorem:
    /// `(F'∗u)^_k = √(2π) (F')^_k û_k`.
    pub fn convolve_fprime(&self, u: &SpectralField) -> SpectralField {
        assert_eq!(u.modes(), self.j, "mode counts must match");
        let mut out = SpectralField::zeros(self.j);
        for k in 1..(self.j as i64) / 2 {
            let c = SQRT_2PI * self.fprime_coeffs.coeff(k) * u.coeff(k);
            if c != Complex64::ZERO {
                out.set_coeff(k, c);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::trapezoid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn double_well_fprime_coefficient() {
        let m = ModelSpec::preset(Preset::DoubleWell, 0.2, 0.01, 0.75, 32).unwrap();
        // F' = sin x, so the k = +1 coefficient is √(2π)/(2i) = -i√(2π)/2.
        let expect = Complex64::new(0.0, -SQRT_2PI / 2.0);
        assert!((m.fprime_coeffs().coeff(1) - expect).norm() < 1e-14);
        assert_eq!(m.fprime_coeffs().coeff(0), Complex64::ZERO);
    }

    #[test]
    fn four_well_vprime_sample() {
        let m = ModelSpec::preset(Preset::FourWell, 0.4, 0.01, 0.75, 32).unwrap();
        // 2J grid point at x = π/8 is index 2J/16 = 4.
        let x = PI / 8.0;
        let idx = 4;
        assert_abs_diff_eq!(grid(64)[idx], x, epsilon = 1e-15);
        assert_abs_diff_eq!(m.vprime_grid()[idx], -4.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_s_rejected() {
        assert!(ModelSpec::preset(Preset::DoubleWell, 0.2, 0.01, 0.5, 32).is_err());
        assert!(ModelSpec::preset(Preset::DoubleWell, 0.2, 0.01, 0.4, 32).is_err());
    }

    #[test]
    fn s_above_one_warns_but_builds() {
        let m = ModelSpec::preset(Preset::DoubleWell, 0.1, 0.1, 1.0, 32).unwrap();
        assert_eq!(m.warnings().len(), 1);
    }

    #[test]
    fn noise_spec_shape() {
        let n = NoiseSpec::new(0.01, 0.75, 64);
        assert_eq!(n.lambda(0), 0.0);
        assert_eq!(n.lambda(32), 0.0); // Nyquist pinned
        assert_abs_diff_eq!(n.lambda(2), 0.01 / 2f64.powf(0.75), epsilon = 1e-16);
        assert_eq!(n.lambda(3), n.lambda(-3));
    }

    #[test]
    fn convolve_sin_with_sin() {
        // u = sin x, F' = sin x: ∫ sin(x-y) sin y dy = -π cos x.
        let m = ModelSpec::preset(Preset::DoubleWell, 0.2, 0.01, 0.75, 32).unwrap();
        let u = SpectralField::from_fn(32, |x| x.sin());
        let conv = m.convolve_fprime(&u);
        for (x, v) in grid(64).into_iter().zip(conv.to_real(64).unwrap()) {
            assert_abs_diff_eq!(v, -PI * x.cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn convolve_constant_is_zero() {
        let m = ModelSpec::preset(Preset::DoubleWell, 0.2, 0.01, 0.75, 32).unwrap();
        let u = SpectralField::from_fn(32, |_| 1.0 / (2.0 * PI));
        assert_eq!(m.convolve_fprime(&u).l2_norm(), 0.0);
    }

    #[test]
    fn convolve_matches_direct_quadrature() {
        let m = ModelSpec::preset(Preset::DoubleWell, 0.2, 0.01, 0.75, 32).unwrap();
        let u = SpectralField::from_fn(32, |x| {
            0.4 * x.sin() - 0.7 * (3.0 * x).cos() + 0.2 * (5.0 * x).sin()
        });
        let conv = m.convolve_fprime(&u);
        let n = 512;
        let xs = grid(n);
        let u_vals = u.to_real(n).unwrap();
        let approx_vals = conv.to_real(n).unwrap();
        for (i, &x) in xs.iter().enumerate().step_by(17) {
            let integrand: Vec<f64> = xs
                .iter()
                .zip(&u_vals)
                .map(|(&y, &uy)| (x - y).sin() * uy)
                .collect();
            let direct = trapezoid(&integrand);
            assert_abs_diff_eq!(approx_vals[i], direct, epsilon = 1e-8);
        }
    }

    #[test]
    fn convolve_is_linear_and_real() {
        let m = ModelSpec::preset(Preset::DoubleWell, 0.2, 0.01, 0.75, 32).unwrap();
        let a = SpectralField::from_fn(32, |x| x.cos() + 0.3 * (2.0 * x).sin());
        let b = SpectralField::from_fn(32, |x| (4.0 * x).cos());
        let mut sum = SpectralField::zeros(32);
        for k in -15..=15 {
            if k > 0 {
                sum.set_coeff(k, a.coeff(k) + 2.0 * b.coeff(k));
            }
        }
        sum.set_coeff(0, a.coeff(0) + 2.0 * b.coeff(0));
        let lhs = m.convolve_fprime(&sum);
        let ca = m.convolve_fprime(&a);
        let cb = m.convolve_fprime(&b);
        for k in -15..=15i64 {
            let rhs = ca.coeff(k) + 2.0 * cb.coeff(k);
            assert!((lhs.coeff(k) - rhs).norm() < 1e-12);
        }
        assert_eq!(lhs.symmetry_residual(), 0.0);
    }
}

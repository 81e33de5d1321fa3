//! Truncated Fourier representation of real periodic fields on `[0, 2π)`.
//!
//! A field is stored as `J` complex coefficients against the orthonormal
//! basis `e_k(x) = e^{ikx} / √(2π)`, indexed `k = -J/2+1 .. J/2`. Conjugate
//! symmetry `û_{-k} = conj(û_k)` is maintained by every operation so the
//! real-space field is real to rounding. The Nyquist coefficient `k = J/2`
//! has no conjugate partner in the band and is pinned to zero at all times.
//!
//! Quadratic nonlinearities are evaluated on a `2J`-point grid and projected
//! back to `J` modes, which is alias-free for products of two band-limited
//! fields.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};

pub const SQRT_2PI: f64 = 2.5066282746310002; // √(2π)

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| match dir {
        FftDirection::Forward => p.borrow_mut().plan_fft_forward(len),
        FftDirection::Inverse => p.borrow_mut().plan_fft_inverse(len),
    })
}

/// Uniform grid `x_j = 2πj/M`.
pub fn grid(m: usize) -> Vec<f64> {
    (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect()
}

/// A real periodic field as `J` Fourier coefficients with conjugate symmetry.
///
/// Coefficients are kept in FFT bin order: bin `m` holds mode
/// `k = m` for `m ≤ J/2` and `k = m - J` otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    /// The zero field with `j` modes. `j` must be even and ≥ 2.
    pub fn zeros(j: usize) -> Self {
        assert!(j >= 2 && j % 2 == 0, "mode count must be even and >= 2");
        SpectralField {
            coeffs: vec![Complex64::ZERO; j],
        }
    }

    /// Resolved mode count `J`.
    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient `û_k`; zero outside the represented band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let j = self.coeffs.len() as i64;
        if k <= -j / 2 || k > j / 2 {
            Complex64::ZERO
        } else {
            self.coeffs[k.rem_euclid(j) as usize]
        }
    }

    /// Set `û_k` and its conjugate partner `û_{-k}`. Setting `k = 0` keeps
    /// only the real part; the Nyquist mode cannot be set.
    pub fn set_coeff(&mut self, k: i64, value: Complex64) {
        let j = self.coeffs.len() as i64;
        assert!(k.abs() < j / 2, "mode outside the symmetric band");
        if k == 0 {
            self.coeffs[0] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[k.rem_euclid(j) as usize] = value;
            self.coeffs[(-k).rem_euclid(j) as usize] = value.conj();
        }
    }

    /// Raw coefficients in FFT bin order.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Build a field by sampling `f` on the `2J`-point grid and truncating
    /// to `J` modes. Exact for `f` band-limited to `|k| < J/2`.
    pub fn from_fn(j: usize, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = grid(2 * j).iter().map(|&x| f(x)).collect();
        Self::from_real(&samples).project(j)
    }

    /// Transform `M` uniform real samples into an `M`-mode field
    /// (`û_k = √(2π)/M · Σ_j u_j e^{-ikx_j}`). Conjugate symmetry is
    /// enforced exactly; the Nyquist bin is zeroed.
    pub fn from_real(samples: &[f64]) -> Self {
        let m = samples.len();
        assert!(m >= 2 && m % 2 == 0, "sample count must be even and >= 2");
        let mut buf: Vec<Complex64> = samples
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        plan(m, FftDirection::Forward).process(&mut buf);
        let scale = SQRT_2PI / m as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        // Symmetrize bitwise: real input gives symmetry to rounding only.
        buf[0] = Complex64::new(buf[0].re, 0.0);
        buf[m / 2] = Complex64::ZERO;
        for k in 1..m / 2 {
            let avg = 0.5 * (buf[k] + buf[m - k].conj());
            buf[k] = avg;
            buf[m - k] = avg.conj();
        }
        SpectralField { coeffs: buf }
    }

    /// Evaluate on the `M`-point uniform grid, `M ≥ J`.
    pub fn to_real(&self, m: usize) -> Result<Vec<f64>> {
        let j = self.coeffs.len();
        if m < j {
            return Err(Error::Resolution(format!(
                "grid size {m} below mode count {j}"
            )));
        }
        let mut buf = vec![Complex64::ZERO; m];
        for k in -(j as i64) / 2 + 1..=(j as i64) / 2 {
            buf[k.rem_euclid(m as i64) as usize] = self.coeff(k);
        }
        plan(m, FftDirection::Inverse).process(&mut buf);
        let scale = 1.0 / SQRT_2PI;
        debug_assert!(self.symmetry_residual() < 1e-12 * (1.0 + self.l2_norm()));
        Ok(buf.iter().map(|c| c.re * scale).collect())
    }

    /// Coefficients of `∂_x u`: multiply by `ik`.
    pub fn derivative(&self) -> Self {
        let j = self.coeffs.len() as i64;
        let mut out = self.clone();
        for (m, c) in out.coeffs.iter_mut().enumerate() {
            let k = if m as i64 <= j / 2 {
                m as i64
            } else {
                m as i64 - j
            };
            *c *= Complex64::new(0.0, k as f64);
        }
        out.coeffs[(j / 2) as usize] = Complex64::ZERO;
        out
    }

    /// Orthogonal projection onto the `J_target` lowest modes
    /// (`J_target ≤ J`, even). The result carries `J_target` modes.
    pub fn project(&self, j_target: usize) -> Self {
        assert!(j_target % 2 == 0 && j_target <= self.coeffs.len());
        let mut out = SpectralField::zeros(j_target);
        for k in -(j_target as i64) / 2 + 1..(j_target as i64) / 2 {
            let idx = k.rem_euclid(j_target as i64) as usize;
            out.coeffs[idx] = self.coeff(k);
        }
        out.coeffs[0] = Complex64::new(out.coeffs[0].re, 0.0);
        out
    }

    /// Embed into a larger band, `J_target ≥ J`. New modes are zero.
    pub fn pad(&self, j_target: usize) -> Self {
        assert!(j_target % 2 == 0 && j_target >= self.coeffs.len());
        let mut out = SpectralField::zeros(j_target);
        let j = self.coeffs.len() as i64;
        for k in -j / 2 + 1..j / 2 {
            let idx = k.rem_euclid(j_target as i64) as usize;
            out.coeffs[idx] = self.coeff(k);
        }
        out
    }

    /// De-aliased pointwise product: evaluate both factors on the `2J` grid,
    /// multiply, transform back and truncate to `J` modes. Alias-free for
    /// the quadratic nonlinearity.
    pub fn dealiased_product(&self, other: &SpectralField) -> Self {
        assert_eq!(self.modes(), other.modes(), "mode counts must match");
        let m = 2 * self.modes();
        let a = self.to_real(m).expect("grid >= modes");
        let b = other.to_real(m).expect("grid >= modes");
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        SpectralField::from_real(&prod).project(self.modes())
    }

    /// `L²` norm, `(Σ_k |û_k|²)^{1/2}` (Parseval).
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest violation of conjugate symmetry (exactly zero by construction
    /// for fields built through this module).
    pub fn symmetry_residual(&self) -> f64 {
        let j = self.coeffs.len();
        let mut worst = self.coeffs[0].im.abs().max(self.coeffs[j / 2].norm());
        for k in 1..j / 2 {
            worst = worst.max((self.coeffs[k] - self.coeffs[j - k].conj()).norm());
        }
        worst
    }

    /// True if every coefficient is finite.
    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Trapezoid quadrature of periodic samples over `[0, 2π)`:
/// `(2π/M) Σ_j v_j`. Spectrally accurate for smooth periodic integrands.
pub fn trapezoid(samples: &[f64]) -> f64 {
    2.0 * PI * samples.iter().sum::<f64>() / samples.len() as f64
}

//! Linearized stability of stationary states.
//!
//! Around an equilibrium `ρ∞` the dynamics linearize to
//!
//! ```text
//! Lη = σ ∂_xx η + ∂_x [ V'η + (F'∗η) ρ∞ + (F'∗ρ∞) η ],    ∫η dx = 0,
//! ```
//!
//! discretized on the `J`-point collocation grid as
//! `L = σ D₂ + D₁ (diag(V' + F'∗ρ) + diag(ρ) K)`, where `D₁` is the dense
//! Toeplitz periodic spectral differentiation matrix, `D₂` its
//! second-derivative counterpart and `K` the trapezoid discretization of
//! the convolution `η ↦ F'∗η`. Zero eigenvalues whose eigenvectors violate
//! the mean-zero condition are filtered before classification.

use ndarray::{Array1, Array2};
use ndarray_linalg::Eig;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::spectral::grid;
use crate::stationary::{FixedPointResult, Stability, StationaryProblem};

/// Eigenvalues above this magnitude are never treated as spurious
/// zero-modes; the leading eigenvalue is called unstable above it too.
pub const ZERO_TOL: f64 = 1e-8;
/// Mean-component magnitude above which a near-zero eigenvector is deemed
/// to violate the mean-zero constraint.
pub const MEAN_TOL: f64 = 1e-6;

/// Periodic spectral differentiation matrix (first derivative) for even `J`.
pub fn diff_matrix(j: usize) -> Array2<f64> {
    assert!(j % 2 == 0, "collocation size must be even");
    let h = 2.0 * std::f64::consts::PI / j as f64;
    Array2::from_shape_fn((j, j), |(i, l)| {
        if i == l {
            0.0
        } else {
            let d = i as i64 - l as i64;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            0.5 * sign / (0.5 * d as f64 * h).tan()
        }
    })
}

/// Periodic spectral second-derivative matrix for even `J` (eigenvalues
/// `-k²` for `|k| ≤ J/2`, Nyquist included).
pub fn diff2_matrix(j: usize) -> Array2<f64> {
    assert!(j % 2 == 0, "collocation size must be even");
    let h = 2.0 * std::f64::consts::PI / j as f64;
    let pi = std::f64::consts::PI;
    Array2::from_shape_fn((j, j), |(i, l)| {
        if i == l {
            -pi * pi / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let d = i as i64 - l as i64;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            -sign / (2.0 * (0.5 * d as f64 * h).sin().powi(2))
        }
    })
}

/// Trapezoid quadrature matrix of `η ↦ F'∗η`: `K_{il} = F'(x_i - x_l)·2π/J`.
pub fn convolution_matrix(spec: &ModelSpec, j: usize) -> Array2<f64> {
    let fprime = spec.potential_f().derivative();
    let h = 2.0 * std::f64::consts::PI / j as f64;
    let xs = grid(j);
    Array2::from_shape_fn((j, j), |(i, l)| fprime.eval(xs[i] - xs[l]) * h)
}

/// Assemble the collocation matrix of the linearized operator around the
/// grid samples `rho` (length `J`, even).
pub fn build_linearized(rho: &[f64], spec: &ModelSpec, j: usize) -> Result<Array2<f64>> {
    if j % 2 != 0 {
        return Err(Error::Config(format!("collocation size must be even, got {j}")));
    }
    if rho.len() != j {
        return Err(Error::Resolution(format!(
            "rho has {} samples but the collocation grid has {j}",
            rho.len()
        )));
    }
    let d1 = diff_matrix(j);
    let d2 = diff2_matrix(j);
    let k = convolution_matrix(spec, j);
    let vprime = spec.potential_v().derivative();
    let xs = grid(j);
    let rho_v = Array1::from_iter(rho.iter().copied());
    let conv_rho = k.dot(&rho_v);

    // diag(V' + F'∗ρ) + diag(ρ) K
    let mut transport = Array2::<f64>::zeros((j, j));
    for i in 0..j {
        transport[(i, i)] += vprime.eval(xs[i]) + conv_rho[i];
        for l in 0..j {
            transport[(i, l)] += rho[i] * k[(i, l)];
        }
    }
    Ok(d2 * spec.sigma() + d1.dot(&transport))
}

/// Explicit projection `P L P` onto the mean-zero subspace,
/// `P = I - 𝟙𝟙ᵀ/J`. Alternative to eigenvector filtering.
pub fn project_mean_zero(l: &Array2<f64>) -> Array2<f64> {
    let j = l.nrows();
    let p = Array2::from_shape_fn((j, j), |(i, k)| {
        (if i == k { 1.0 } else { 0.0 }) - 1.0 / j as f64
    });
    p.dot(l).dot(&p)
}

/// Spectrum of a linearized operator, zero-modes filtered, sorted by
/// descending real part.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<Complex64>,
    pub leading: Complex64,
    pub label: Stability,
}

/// Dense nonsymmetric eigendecomposition with filtering of eigenvalues
/// `|λ| ≤ 10⁻⁸` whose eigenvectors carry a mean component above `10⁻⁶`
/// (they violate the mean-zero condition of the linearization).
pub fn spectrum(l: &Array2<f64>) -> Result<SpectrumResult> {
    let (vals, vecs) = l
        .eig()
        .map_err(|e| Error::Eig(format!("dgeev failed on {}x{} matrix: {e}", l.nrows(), l.ncols())))?;
    let j = l.nrows();
    let mut kept: Vec<Complex64> = Vec::with_capacity(j);
    for (idx, &lam) in vals.iter().enumerate() {
        if lam.norm() <= ZERO_TOL {
            let col = vecs.column(idx);
            let sum: Complex64 = col.iter().sum();
            let norm: f64 = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let mean_mag = sum.norm() / ((j as f64).sqrt() * norm);
            if mean_mag > MEAN_TOL {
                continue;
            }
        }
        kept.push(lam);
    }
    kept.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let leading = *kept.first().ok_or_else(|| {
        Error::Eig("all eigenvalues were filtered as zero-modes".into())
    })?;
    let label = if leading.re > ZERO_TOL {
        Stability::Unstable
    } else {
        Stability::Stable
    };
    Ok(SpectrumResult {
        eigenvalues: kept,
        leading,
        label,
    })
}

/// Classify one fixed point: re-evaluate its Gibbs density analytically on
/// the `J`-point collocation grid (no interpolation), assemble the operator
/// and take its spectrum.
pub fn classify(
    problem: &StationaryProblem,
    root: &FixedPointResult,
    spec: &ModelSpec,
    j: usize,
) -> Result<SpectrumResult> {
    let xs = grid(j);
    let (rho, _) = problem.rho_on_grid(&root.m, &xs);
    let l = build_linearized(&rho, spec, j)?;
    spectrum(&l)
}

/// Attach stability labels to a list of fixed points.
pub fn label_roots(
    problem: &StationaryProblem,
    roots: &mut [FixedPointResult],
    spec: &ModelSpec,
    j: usize,
) -> Result<Vec<SpectrumResult>> {
    let mut spectra = Vec::with_capacity(roots.len());
    for root in roots.iter_mut() {
        let s = classify(problem, root, spec, j)?;
        root.stability = s.label;
        spectra.push(s);
    }
    Ok(spectra)
}

//! Stationary densities of the deterministic McKean-Vlasov PDE via the
//! reduced finite-dimensional fixed-point problem.
//!
//! Every stationary density has the Gibbs form
//!
//! ```text
//! ρ∞(x) = Z⁻¹ exp(-(1/σ)[V(x) + ∫₀ˣ (F'∗ρ∞)(y) dy])
//! ```
//!
//! When `F'` contains finitely many harmonics the self-consistency closes
//! over the moments `(∫ρ sin kx, ∫ρ cos kx)` of those harmonics: a
//! `2H`-parameter fixed-point problem. For the preset potentials (`F' = sin x`)
//! this is the classic two-parameter problem in `(m₁, m₂)`.
//!
//! Roots are located by damped fixed-point iteration from a multi-start grid
//! and polished by Newton with a finite-difference Jacobian, then
//! deduplicated.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, TrigSeries};
use crate::spectral::{grid, SQRT_2PI};

/// Linear-stability label attached after the spectrum module runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Unknown,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stability::Stable => write!(f, "stable"),
            Stability::Unstable => write!(f, "unstable"),
            Stability::Unknown => write!(f, "unknown"),
        }
    }
}

/// One stationary solution.
#[derive(Clone, Debug)]
pub struct FixedPointResult {
    /// Moment parameters, `(sin, cos)` pair per harmonic of `F'`;
    /// `[m₁, m₂]` for the single-harmonic presets.
    pub m: Vec<f64>,
    /// Normalization constant of the Gibbs density.
    pub z_sigma: f64,
    /// `ρ∞` on the `n_q`-point uniform grid.
    pub rho_grid: Vec<f64>,
    /// `‖self_map(m) - m‖₂` at the returned parameters.
    pub residual: f64,
    pub stability: Stability,
}

impl FixedPointResult {
    pub fn m1(&self) -> f64 {
        self.m.first().copied().unwrap_or(0.0)
    }
    pub fn m2(&self) -> f64 {
        self.m.get(1).copied().unwrap_or(0.0)
    }
}

/// The reduced fixed-point problem for one `(V, F, σ)`.
#[derive(Clone, Debug)]
pub struct StationaryProblem {
    sigma: f64,
    v: TrigSeries,
    /// `(k, (F')^_k)` for the positive harmonics of `F'`.
    harmonics: Vec<(i64, Complex64)>,
}

impl StationaryProblem {
    pub fn new(v: TrigSeries, fprime: &TrigSeries, sigma: f64) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
        }
        let mut harmonics = Vec::new();
        for k in 1..=fprime.max_harmonic() as i64 {
            let c = fprime.basis_coeff(k);
            if c.norm() > 1e-14 {
                harmonics.push((k, c));
            }
        }
        if harmonics.is_empty() {
            return Err(Error::Config(
                "F' has no harmonics; the reduced problem is empty".into(),
            ));
        }
        Ok(StationaryProblem {
            sigma,
            v,
            harmonics,
        })
    }

    pub fn from_model(spec: &ModelSpec) -> Result<Self> {
        StationaryProblem::new(
            spec.potential_v().clone(),
            &spec.potential_f().derivative(),
            spec.sigma(),
        )
    }

    /// Number of scalar parameters (`2 ×` harmonics).
    pub fn dim(&self) -> usize {
        2 * self.harmonics.len()
    }

    /// True when the Gibbs exponent is odd in the sine moments
    /// (`V` and `F` both even), so roots come in `±` pairs.
    fn is_symmetric(&self) -> bool {
        self.v.terms.iter().all(|t| t.2 == 0.0)
            && self.harmonics.iter().all(|(_, c)| c.re.abs() < 1e-14)
    }

    /// Gibbs exponent `W(x)` such that `ρ ∝ e^{-W}`.
    fn exponent(&self, m: &[f64], x: f64) -> f64 {
        let mut w = self.v.eval(x);
        for (idx, &(k, fk)) in self.harmonics.iter().enumerate() {
            let (s, c) = (m[2 * idx], m[2 * idx + 1]);
            let rho_hat = Complex64::new(c, -s) / SQRT_2PI;
            let phase = Complex64::new(0.0, k as f64 * x).exp();
            w += 2.0 * (fk * rho_hat * phase / Complex64::new(0.0, k as f64)).re;
        }
        w / self.sigma
    }

    /// Evaluate the normalized Gibbs density on `xs`; returns `(ρ, Z_σ)`.
    /// The exponent is shifted by its maximum before exponentiation, so
    /// overflow cannot occur.
    pub fn rho_on_grid(&self, m: &[f64], xs: &[f64]) -> (Vec<f64>, f64) {
        assert_eq!(m.len(), self.dim(), "parameter count must be 2 x harmonics");
        let w: Vec<f64> = xs.iter().map(|&x| self.exponent(m, x)).collect();
        let wmin = w.iter().cloned().fold(f64::INFINITY, f64::min);
        let unnorm: Vec<f64> = w.iter().map(|&v| (-(v - wmin)).exp()).collect();
        let h = 2.0 * std::f64::consts::PI / xs.len() as f64;
        let z_shifted: f64 = unnorm.iter().sum::<f64>() * h;
        let rho = unnorm.iter().map(|&v| v / z_shifted).collect();
        // Z_σ for the unshifted exponent.
        let z = z_shifted * (-wmin).exp();
        (rho, z)
    }

    /// Gibbs density for given moments, mass one by construction.
    pub fn rho_from_m(&self, m: &[f64], n_q: usize) -> Result<FixedPointResult> {
        if n_q < 256 {
            return Err(Error::Config(format!("n_q must be >= 256, got {n_q}")));
        }
        let xs = grid(n_q);
        let (rho, z) = self.rho_on_grid(m, &xs);
        let mapped = moments(&self.harmonics, &rho, &xs);
        let residual = norm2_diff(&mapped, m);
        Ok(FixedPointResult {
            m: m.to_vec(),
            z_sigma: z,
            rho_grid: rho,
            residual,
            stability: Stability::Unknown,
        })
    }

    /// The self-consistency map `m ↦ (∫ρ_m sin kx, ∫ρ_m cos kx)_k`.
    pub fn self_map(&self, m: &[f64], n_q: usize) -> Vec<f64> {
        let xs = grid(n_q);
        let (rho, _) = self.rho_on_grid(m, &xs);
        moments(&self.harmonics, &rho, &xs)
    }

    /// Locate all roots from a multi-start grid over `[-2, 2]^d`.
    ///
    /// Each start runs damped fixed-point iteration (damping 0.5, at most
    /// 200 iterations) followed by Newton polish on `G(m) = self_map(m) - m`
    /// until `‖G‖₂ ≤ tol`. Non-convergent starts are dropped and counted.
    pub fn find_fixed_points(&self, tol: f64, n_q: usize) -> Result<FixedPointSearch> {
        if tol <= 0.0 {
            return Err(Error::Config(format!("tol must be positive, got {tol}")));
        }
        let d = self.dim();
        let per_axis = if d <= 2 { 9 } else { 5 };
        let axis: Vec<f64> = (0..per_axis)
            .map(|i| -2.0 + 4.0 * i as f64 / (per_axis - 1) as f64)
            .collect();
        let mut starts: Vec<Vec<f64>> = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            starts.push(idx.iter().map(|&i| axis[i]).collect());
            let mut carry = d;
            for pos in (0..d).rev() {
                idx[pos] += 1;
                if idx[pos] < per_axis {
                    carry = pos;
                    break;
                }
                idx[pos] = 0;
            }
            if carry == d {
                break;
            }
        }

        let symmetric = self.is_symmetric();
        let mut roots: Vec<Vec<f64>> = Vec::new();
        let mut dropped = 0usize;
        for start in &starts {
            // On-axis starts of a symmetric problem stay on the axis, so
            // rounding noise cannot push the iteration off the (unstable)
            // symmetric branch.
            let pin_sines = symmetric && start.iter().step_by(2).all(|&v| v == 0.0);
            match self.polish(start, tol, n_q, pin_sines) {
                Some(root) => {
                    if !roots.iter().any(|r| norm2_diff(r, &root) < 10.0 * tol) {
                        roots.push(root);
                    }
                }
                None => dropped += 1,
            }
        }

        if self.is_symmetric() {
            symmetrize(&mut roots, tol);
        }
        roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));

        let results = roots
            .into_iter()
            .map(|m| self.rho_from_m(&m, n_q))
            .collect::<Result<Vec<_>>>()?;
        Ok(FixedPointSearch { results, dropped })
    }

    fn polish(&self, start: &[f64], tol: f64, n_q: usize, pin_sines: bool) -> Option<Vec<f64>> {
        let d = self.dim();
        let mut m = start.to_vec();
        // Damped iteration: plain iteration can oscillate near the critical
        // diffusion; damping 0.5 keeps it contracting in practice.
        for _ in 0..200 {
            let s = self.self_map(&m, n_q);
            let mut delta = 0.0f64;
            for i in 0..d {
                let step = 0.5 * (s[i] - m[i]);
                m[i] += step;
                delta = delta.max(step.abs());
            }
            if pin_sines {
                for i in (0..d).step_by(2) {
                    m[i] = 0.0;
                }
            }
            if delta < 0.1 * tol {
                break;
            }
        }
        // Newton polish on G(m) = self_map(m) - m.
        let g = |m: &[f64]| -> Vec<f64> {
            let s = self.self_map(m, n_q);
            (0..d).map(|i| s[i] - m[i]).collect()
        };
        for _ in 0..50 {
            let gm = g(&m);
            let gn = gm.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gn <= tol {
                return m.iter().all(|v| v.is_finite()).then_some(m);
            }
            let h = 1e-6;
            let mut jac = vec![vec![0.0; d]; d];
            for col in 0..d {
                let mut plus = m.clone();
                let mut minus = m.clone();
                plus[col] += h;
                minus[col] -= h;
                let gp = g(&plus);
                let gq = g(&minus);
                for row in 0..d {
                    jac[row][col] = (gp[row] - gq[row]) / (2.0 * h);
                }
            }
            let step = solve_dense(&mut jac, &gm)?;
            for i in 0..d {
                m[i] -= step[i];
            }
            if m.iter().any(|v| !v.is_finite() || v.abs() > 10.0) {
                return None;
            }
        }
        let gm = g(&m);
        let gn = gm.iter().map(|v| v * v).sum::<f64>().sqrt();
        (gn <= tol).then_some(m)
    }
}

/// Root list plus the number of dropped (non-convergent) starts.
#[derive(Clone, Debug)]
pub struct FixedPointSearch {
    pub results: Vec<FixedPointResult>,
    pub dropped: usize,
}

fn moments(harmonics: &[(i64, Complex64)], rho: &[f64], xs: &[f64]) -> Vec<f64> {
    let h = 2.0 * std::f64::consts::PI / xs.len() as f64;
    let mut out = Vec::with_capacity(2 * harmonics.len());
    for &(k, _) in harmonics {
        let mut s = 0.0;
        let mut c = 0.0;
        for (&x, &r) in xs.iter().zip(rho) {
            let kx = k as f64 * x;
            s += r * kx.sin();
            c += r * kx.cos();
        }
        out.push(s * h);
        out.push(c * h);
    }
    out
}

fn norm2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// For an even problem, mirror roots in the sine moments pair up exactly:
/// average each `±` pair and zero sine moments that sit at the symmetry axis.
fn symmetrize(roots: &mut [Vec<f64>], tol: f64) {
    let d = roots.first().map_or(0, |r| r.len());
    let mirror = |r: &[f64]| -> Vec<f64> {
        r.iter()
            .enumerate()
            .map(|(i, &v)| if i % 2 == 0 { -v } else { v })
            .collect()
    };
    let n = roots.len();
    let mut done = vec![false; n];
    for a in 0..n {
        if done[a] {
            continue;
        }
        let ma = mirror(&roots[a]);
        if norm2_diff(&ma, &roots[a]) < 10.0 * tol {
            // Self-mirrored root: pin sine moments to zero.
            for i in (0..d).step_by(2) {
                roots[a][i] = 0.0;
            }
            done[a] = true;
            continue;
        }
        if let Some(b) = (a + 1..n).find(|&b| !done[b] && norm2_diff(&ma, &roots[b]) < 10.0 * tol)
        {
            for i in 0..d {
                let avg = 0.5 * (roots[a][i] + mirror(&roots[b])[i]);
                roots[a][i] = avg;
                roots[b][i] = if i % 2 == 0 { -avg } else { avg };
            }
            done[a] = true;
            done[b] = true;
        }
    }
}

/// Solve `A x = b` in place by Gaussian elimination with partial pivoting.
/// `A` is tiny (`2H × 2H`).
fn solve_dense(a: &mut [Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        x.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= a[col][col];
        for row in 0..col {
            x[row] -= a[row][col] * x[col];
        }
    }
    Some(x)
}

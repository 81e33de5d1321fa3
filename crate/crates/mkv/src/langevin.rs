//! Scalar Langevin demo support: multiwell potentials, occupation
//! histograms, and comparison against the Gibbs density `∝ e^{-2U/α}`.

use crate::error::{Error, Result};

/// Built-in scalar potentials for the bistable-diffusion demo.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarPotential {
    /// `U(y) = (y² - 1)²`, symmetric wells at `±1`.
    DoubleWell,
    /// `U(y) = (y² - 1)² + 0.2 y`, right well deeper.
    TiltedDoubleWell,
}

impl ScalarPotential {
    pub fn u(&self, y: f64) -> f64 {
        let base = (y * y - 1.0).powi(2);
        match self {
            ScalarPotential::DoubleWell => base,
            ScalarPotential::TiltedDoubleWell => base + 0.2 * y,
        }
    }

    pub fn u_prime(&self, y: f64) -> f64 {
        let base = 4.0 * y * (y * y - 1.0);
        match self {
            ScalarPotential::DoubleWell => base,
            ScalarPotential::TiltedDoubleWell => base + 0.2,
        }
    }
}

impl std::str::FromStr for ScalarPotential {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double_well" => Ok(ScalarPotential::DoubleWell),
            "tilted_double_well" => Ok(ScalarPotential::TiltedDoubleWell),
            other => Err(Error::Config(format!("unknown scalar potential `{other}`"))),
        }
    }
}

/// Binned occupation measure of a path next to the binned Gibbs target.
#[derive(Clone, Debug)]
pub struct OccupationHistogram {
    pub centers: Vec<f64>,
    pub width: f64,
    /// Empirical probability mass per bin.
    pub mass: Vec<f64>,
    /// Gibbs probability mass per bin (target mass outside the binned range
    /// is accounted for in [`OccupationHistogram::total_variation`]).
    pub target_mass: Vec<f64>,
    target_outside: f64,
}

impl OccupationHistogram {
    /// Total-variation distance between the empirical and Gibbs measures on
    /// the bin partition (plus the unbinned target tail).
    pub fn total_variation(&self) -> f64 {
        let inside: f64 = self
            .mass
            .iter()
            .zip(&self.target_mass)
            .map(|(p, q)| (p - q).abs())
            .sum();
        0.5 * (inside + self.target_outside)
    }

    /// Empirical densities (mass / bin width), for plotting.
    pub fn density(&self) -> Vec<f64> {
        self.mass.iter().map(|m| m / self.width).collect()
    }

    pub fn target_density(&self) -> Vec<f64> {
        self.target_mass.iter().map(|m| m / self.width).collect()
    }
}

/// Bin the post-burn-in path and evaluate the normalized Gibbs target
/// `Z⁻¹ e^{-2U/α}` on the same partition.
pub fn occupation_vs_gibbs(
    path: &[f64],
    burn_in: f64,
    bins: usize,
    potential: ScalarPotential,
    alpha: f64,
) -> Result<OccupationHistogram> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::Config(format!("burn_in must be in [0, 1), got {burn_in}")));
    }
    if bins < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {bins}")));
    }
    if alpha <= 0.0 {
        return Err(Error::Config(
            "the Gibbs comparison needs alpha > 0".into(),
        ));
    }
    let skip = (path.len() as f64 * burn_in).floor() as usize;
    let tail = &path[skip..];
    if tail.len() < bins {
        return Err(Error::Config(format!(
            "only {} post-burn-in samples for {bins} bins",
            tail.len()
        )));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &y in tail {
        lo = lo.min(y);
        hi = hi.max(y);
    }
    let pad = 1e-9 + 1e-3 * (hi - lo).max(1.0);
    let (lo, hi) = (lo - pad, hi + pad);
    let width = (hi - lo) / bins as f64;

    let mut mass = vec![0.0f64; bins];
    let w = 1.0 / tail.len() as f64;
    for &y in tail {
        let i = (((y - lo) / width).floor() as usize).min(bins - 1);
        mass[i] += w;
    }

    // Normalize the target on a range wide enough that the truncated tail
    // is negligible, then integrate it per bin (midpoint rule, refined).
    let (glo, ghi) = (lo.min(-4.0) - 2.0, hi.max(4.0) + 2.0);
    let nq = 200_000usize;
    let gh = (ghi - glo) / nq as f64;
    let z: f64 = (0..nq)
        .map(|i| (-2.0 * potential.u(glo + (i as f64 + 0.5) * gh) / alpha).exp())
        .sum::<f64>()
        * gh;
    let sub = 32usize;
    let mut target_mass = Vec::with_capacity(bins);
    let mut centers = Vec::with_capacity(bins);
    for i in 0..bins {
        let a = lo + i as f64 * width;
        centers.push(a + 0.5 * width);
        let hq = width / sub as f64;
        let m: f64 = (0..sub)
            .map(|q| (-2.0 * potential.u(a + (q as f64 + 0.5) * hq) / alpha).exp())
            .sum::<f64>()
            * hq
            / z;
        target_mass.push(m);
    }
    let target_outside = (1.0 - target_mass.iter().sum::<f64>()).max(0.0);
    Ok(OccupationHistogram {
        centers,
        width,
        mass,
        target_mass,
        target_outside,
    })
}

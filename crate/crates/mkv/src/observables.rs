//! Scalar diagnostics of a trajectory and metastable-mode detection.
//!
//! The first-harmonic functionals
//! `I₁(u) = ∫ u sin x dx` and `I₂(u) = ∫ u cos x dx`
//! collapse to closed forms in the coefficient `û₁`; a long trajectory is
//! summarized by clustering its `(I₁, I₂)` points and counting transitions
//! between clusters.

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, SQRT_2PI};

/// `I₁(u) = ∫ u sin x dx = -√(2π) Im û₁`.
pub fn i1(u: &SpectralField) -> f64 {
    -SQRT_2PI * u.coeff(1).im
}

/// `I₂(u) = ∫ u cos x dx = √(2π) Re û₁`.
pub fn i2(u: &SpectralField) -> f64 {
    SQRT_2PI * u.coeff(1).re
}

/// Total mass `∫ u dx = √(2π) û₀`.
pub fn mass(u: &SpectralField) -> f64 {
    SQRT_2PI * u.coeff(0).re
}

/// Aligned scalar series recorded along a trajectory.
#[derive(Clone, Debug, Default)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub mass: Vec<f64>,
    /// Fraction of grid points where the field is negative (diagnostic only;
    /// the dynamics do not enforce positivity).
    pub neg_fraction: Vec<f64>,
}

impl ObservableSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn push(&mut self, t: f64, u: &SpectralField) {
        let m = 2 * u.modes();
        let vals = u.to_real(m).expect("grid >= modes");
        let neg = vals.iter().filter(|&&v| v < 0.0).count() as f64 / m as f64;
        self.times.push(t);
        self.i1.push(i1(u));
        self.i2.push(i2(u));
        self.mass.push(mass(u));
        self.neg_fraction.push(neg);
    }
}

/// Time × space matrix of real field values.
#[derive(Clone, Debug)]
pub struct HeatMap {
    pub rows: usize,
    pub cols: usize,
    /// Row-major; row `n` is snapshot `n` sampled on the uniform grid.
    pub data: Vec<f64>,
}

/// Render each snapshot on an `m`-point grid; one row per snapshot.
pub fn heatmap(snapshots: &[SpectralField], m: usize) -> Result<HeatMap> {
    if snapshots.is_empty() {
        return Err(Error::Config("heatmap requires a nonempty trajectory".into()));
    }
    let mut data = Vec::with_capacity(snapshots.len() * m);
    for snap in snapshots {
        data.extend(snap.to_real(m)?);
    }
    Ok(HeatMap {
        rows: snapshots.len(),
        cols: m,
        data,
    })
}

/// One detected metastable cluster.
#[derive(Clone, Debug)]
pub struct Cluster {
    pub centroid: (f64, f64),
    pub occupancy: f64,
    /// Index into the supplied fixed-point list, when one matches within 0.15.
    pub fixed_point: Option<usize>,
}

/// Result of mode detection on an `(I₁, I₂)` series.
#[derive(Clone, Debug)]
pub struct ModeReport {
    pub clusters: Vec<Cluster>,
    pub n_modes: usize,
    pub hop_count: usize,
}

/// Tuning knobs for [`count_modes`]. The defaults are deliberately
/// parameter-light: a 64×64 histogram, Gaussian smoothing of two bins,
/// peaks above 5% of the global maximum.
#[derive(Clone, Copy, Debug)]
pub struct ModeDetection {
    pub bins: usize,
    pub smooth_bins: f64,
    pub peak_threshold: f64,
    pub occupancy_threshold: f64,
    pub fixed_point_tol: f64,
}

impl Default for ModeDetection {
    fn default() -> Self {
        ModeDetection {
            bins: 64,
            smooth_bins: 2.0,
            peak_threshold: 0.05,
            occupancy_threshold: 0.02,
            fixed_point_tol: 0.15,
        }
    }
}

/// Cluster the post-burn-in `(I₁, I₂)` points by smoothed 2-D histogram
/// peak detection and count transitions between clusters.
///
/// A transition is registered only when the trajectory enters a ball of
/// radius `0.25 ×` the smallest inter-centroid distance around a different
/// centroid, which suppresses boundary chatter.
pub fn count_modes(
    series: &ObservableSeries,
    burn_in: f64,
    fixed_points: Option<&[(f64, f64)]>,
    params: &ModeDetection,
) -> Result<ModeReport> {
    let skip = (series.len() as f64 * burn_in).floor() as usize;
    let pts: Vec<(f64, f64)> = series.i1[skip..]
        .iter()
        .zip(&series.i2[skip..])
        .map(|(&a, &b)| (a, b))
        .collect();
    if pts.len() < 100 {
        return Err(Error::Config(format!(
            "mode detection needs >= 100 post-burn-in points, got {}",
            pts.len()
        )));
    }

    let (mut lo1, mut hi1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo2, mut hi2) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(a, b) in &pts {
        lo1 = lo1.min(a);
        hi1 = hi1.max(a);
        lo2 = lo2.min(b);
        hi2 = hi2.max(b);
    }
    let span = (hi1 - lo1).max(hi2 - lo2);
    if span < 1e-12 {
        // Degenerate series: every point identical.
        return Ok(ModeReport {
            clusters: vec![Cluster {
                centroid: pts[0],
                occupancy: 1.0,
                fixed_point: match_fixed_point(pts[0], fixed_points, params.fixed_point_tol),
            }],
            n_modes: 1,
            hop_count: 0,
        });
    }
    // Small margin so extreme points land strictly inside the grid.
    let pad1 = 1e-9 + 0.01 * (hi1 - lo1);
    let pad2 = 1e-9 + 0.01 * (hi2 - lo2);
    let (lo1, hi1) = (lo1 - pad1, hi1 + pad1);
    let (lo2, hi2) = (lo2 - pad2, hi2 + pad2);

    // Cap the grid so sparse series keep a few points per occupied bin;
    // otherwise shot noise dominates the histogram.
    let nb = params
        .bins
        .min(((pts.len() as f64 / 4.0).sqrt().floor() as usize).max(8));
    let bin_of = |a: f64, b: f64| -> (usize, usize) {
        let i = (((a - lo1) / (hi1 - lo1)) * nb as f64).floor() as usize;
        let j = (((b - lo2) / (hi2 - lo2)) * nb as f64).floor() as usize;
        (i.min(nb - 1), j.min(nb - 1))
    };
    let mut hist = vec![0.0f64; nb * nb];
    for &(a, b) in &pts {
        let (i, j) = bin_of(a, b);
        hist[i * nb + j] += 1.0;
    }
    let smooth = gaussian_smooth(&hist, nb, params.smooth_bins);

    // Modes are the peaks of the smoothed histogram with topological
    // persistence at least `peak_threshold * max`. A descending watershed
    // with union-find measures each local maximum by the drop to the saddle
    // where its basin merges into a taller one; plateau jitter has tiny
    // persistence and metastable wells keep theirs even when transit paths
    // connect them.
    let global_max = smooth.iter().cloned().fold(0.0, f64::max);
    let cut = params.peak_threshold * global_max;
    let peaks = persistent_peaks(&smooth, nb, cut);
    let mut peaks: Vec<(usize, usize)> = peaks.iter().map(|&b| (b / nb, b % nb)).collect();
    if peaks.is_empty() {
        // Flat smoothed histogram; fall back to the global maximum bin.
        let arg = smooth
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(idx, _)| idx)
            .unwrap_or(0);
        peaks.push((arg / nb, arg % nb));
    }
    let peak_xy: Vec<(f64, f64)> = peaks
        .iter()
        .map(|&(i, j)| {
            (
                lo1 + (i as f64 + 0.5) / nb as f64 * (hi1 - lo1),
                lo2 + (j as f64 + 0.5) / nb as f64 * (hi2 - lo2),
            )
        })
        .collect();

    // Assign points to the nearest peak. Centroids are means over the points
    // near the peak (within the hysteresis radius), not over everything
    // assigned to it: a metastable run spends a sizeable fraction of its time
    // in transit between wells, and those excursion points would otherwise
    // drag the centroid off the well.
    let nearest = |p: (f64, f64), centers: &[(f64, f64)]| -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (idx, c) in centers.iter().enumerate() {
            let d = (p.0 - c.0).powi(2) + (p.1 - c.1).powi(2);
            if d < best_d {
                best_d = d;
                best = idx;
            }
        }
        best
    };
    let mut min_peak_sep = f64::INFINITY;
    for a in 0..peak_xy.len() {
        for b in a + 1..peak_xy.len() {
            let d = ((peak_xy[a].0 - peak_xy[b].0).powi(2)
                + (peak_xy[a].1 - peak_xy[b].1).powi(2))
            .sqrt();
            min_peak_sep = min_peak_sep.min(d);
        }
    }
    let core_radius = 0.25 * min_peak_sep;
    let mut count = vec![0usize; peak_xy.len()];
    let mut core_count = vec![0usize; peak_xy.len()];
    let mut sum = vec![(0.0f64, 0.0f64); peak_xy.len()];
    let mut core_sum = vec![(0.0f64, 0.0f64); peak_xy.len()];
    let labels: Vec<usize> = pts
        .iter()
        .map(|&p| {
            let l = nearest(p, &peak_xy);
            count[l] += 1;
            sum[l].0 += p.0;
            sum[l].1 += p.1;
            let d = ((p.0 - peak_xy[l].0).powi(2) + (p.1 - peak_xy[l].1).powi(2)).sqrt();
            if d <= core_radius {
                core_count[l] += 1;
                core_sum[l].0 += p.0;
                core_sum[l].1 += p.1;
            }
            l
        })
        .collect();
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut centroids: Vec<(f64, f64)> = Vec::new();
    let mut remap: Vec<Option<usize>> = vec![None; peak_xy.len()];
    for (idx, &c) in count.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let centroid = if core_count[idx] > 0 {
            let cc = core_count[idx] as f64;
            (core_sum[idx].0 / cc, core_sum[idx].1 / cc)
        } else {
            (sum[idx].0 / c as f64, sum[idx].1 / c as f64)
        };
        remap[idx] = Some(clusters.len());
        centroids.push(centroid);
        clusters.push(Cluster {
            centroid,
            occupancy: c as f64 / pts.len() as f64,
            fixed_point: match_fixed_point(centroid, fixed_points, params.fixed_point_tol),
        });
    }

    // Hop counting with hysteresis.
    let mut hop_count = 0usize;
    if clusters.len() >= 2 {
        let mut min_sep = f64::INFINITY;
        for a in 0..centroids.len() {
            for b in a + 1..centroids.len() {
                let d = ((centroids[a].0 - centroids[b].0).powi(2)
                    + (centroids[a].1 - centroids[b].1).powi(2))
                .sqrt();
                min_sep = min_sep.min(d);
            }
        }
        let radius = 0.25 * min_sep;
        let mut current: Option<usize> = None;
        for (&p, &raw_label) in pts.iter().zip(&labels) {
            let label = remap[raw_label].expect("assigned labels are nonempty");
            let c = centroids[label];
            let d = ((p.0 - c.0).powi(2) + (p.1 - c.1).powi(2)).sqrt();
            if d <= radius {
                if let Some(prev) = current {
                    if prev != label {
                        hop_count += 1;
                    }
                }
                current = Some(label);
            }
        }
    }

    let n_modes = clusters
        .iter()
        .filter(|c| c.occupancy >= params.occupancy_threshold)
        .count();
    Ok(ModeReport {
        clusters,
        n_modes,
        hop_count,
    })
}

fn match_fixed_point(
    centroid: (f64, f64),
    fixed_points: Option<&[(f64, f64)]>,
    tol: f64,
) -> Option<usize> {
    let fps = fixed_points?;
    let mut best: Option<(usize, f64)> = None;
    for (idx, &(a, b)) in fps.iter().enumerate() {
        let d = ((centroid.0 - a).powi(2) + (centroid.1 - b).powi(2)).sqrt();
        if d <= tol && best.map_or(true, |(_, bd)| d < bd) {
            best = Some((idx, d));
        }
    }
    best.map(|(idx, _)| idx)
}

/// Peaks of a 2-D field (row-major `nb x nb`) whose topological persistence
/// is at least `min_persistence`. Bins are swept in descending order; when a
/// bin bridges two basins, the shorter basin dies at that saddle and its
/// peak is kept only if it stood at least `min_persistence` above it.
fn persistent_peaks(field: &[f64], nb: usize, min_persistence: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..nb * nb).filter(|&b| field[b] > 0.0).collect();
    order.sort_by(|&a, &b| field[b].total_cmp(&field[a]).then(a.cmp(&b)));

    const UNSEEN: usize = usize::MAX;
    let mut parent = vec![UNSEEN; nb * nb];
    // Birth bin (the maximum) of each basin, indexed by root.
    let mut peak_of = vec![UNSEEN; nb * nb];
    let mut out: Vec<usize> = Vec::new();

    fn find(parent: &mut [usize], mut b: usize) -> usize {
        while parent[b] != b {
            parent[b] = parent[parent[b]];
            b = parent[b];
        }
        b
    }

    for &b in &order {
        let (i, j) = (b / nb, b % nb);
        let mut roots: Vec<usize> = Vec::new();
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni >= nb as i64 || nj >= nb as i64 {
                    continue;
                }
                let nbin = ni as usize * nb + nj as usize;
                if parent[nbin] != UNSEEN {
                    let r = find(&mut parent, nbin);
                    if !roots.contains(&r) {
                        roots.push(r);
                    }
                }
            }
        }
        match roots.len() {
            0 => {
                parent[b] = b;
                peak_of[b] = b;
            }
            _ => {
                // Attach to the tallest neighboring basin; any others die
                // here, at their saddle.
                roots.sort_by(|&x, &y| field[peak_of[y]].total_cmp(&field[peak_of[x]]));
                let main = roots[0];
                parent[b] = main;
                for &r in &roots[1..] {
                    if field[peak_of[r]] - field[b] >= min_persistence {
                        out.push(peak_of[r]);
                    }
                    parent[r] = main;
                }
            }
        }
    }
    // Basins that never merged live all the way down; keep the ones that
    // clear the bar on their own height.
    let mut seen_roots: Vec<usize> = Vec::new();
    for &b in &order {
        let r = find(&mut parent, b);
        if !seen_roots.contains(&r) {
            seen_roots.push(r);
            if field[peak_of[r]] >= min_persistence {
                out.push(peak_of[r]);
            }
        }
    }
    out.sort_by(|&a, &b| field[b].total_cmp(&field[a]));
    out
}

fn gaussian_smooth(hist: &[f64], nb: usize, bandwidth: f64) -> Vec<f64> {
    let radius = (3.0 * bandwidth).ceil() as i64;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|d| (-0.5 * (d as f64 / bandwidth).powi(2)).exp())
        .collect();
    let ksum: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.into_iter().map(|v| v / ksum).collect();
    // Separable convolution with zero boundary.
    let mut tmp = vec![0.0; nb * nb];
    for i in 0..nb {
        for j in 0..nb {
            let mut acc = 0.0;
            for (t, &kv) in kernel.iter().enumerate() {
                let jj = j as i64 + t as i64 - radius;
                if jj >= 0 && jj < nb as i64 {
                    acc += kv * hist[i * nb + jj as usize];
                }
            }
            tmp[i * nb + j] = acc;
        }
    }
    let mut out = vec![0.0; nb * nb];
    for i in 0..nb {
        for j in 0..nb {
            let mut acc = 0.0;
            for (t, &kv) in kernel.iter().enumerate() {
                let ii = i as i64 + t as i64 - radius;
                if ii >= 0 && ii < nb as i64 {
                    acc += kv * tmp[ii as usize * nb + j];
                }
            }
            out[i * nb + j] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{grid, trapezoid};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn sin_squared_has_zero_first_harmonic() {
        let u = SpectralField::from_fn(64, |x| x.sin().powi(2) / PI);
        assert_abs_diff_eq!(i1(&u), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(i2(&u), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(mass(&u), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sin_field_first_harmonic() {
        let u = SpectralField::from_fn(64, |x| x.sin());
        assert_abs_diff_eq!(i1(&u), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(i2(&u), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn constant_field_mass() {
        let u = SpectralField::from_fn(16, |_| 0.25);
        assert_abs_diff_eq!(mass(&u), 0.5 * PI, epsilon = 1e-13);
    }

    #[test]
    fn coefficient_formulas_match_quadrature() {
        let u = SpectralField::from_fn(64, |x| {
            0.3 * x.sin() - 0.8 * (2.0 * x).cos() + 0.1 * (5.0 * x).sin() + 0.05
        });
        let n = 1024;
        let xs = grid(n);
        let vals = u.to_real(n).unwrap();
        let q1 = trapezoid(&xs.iter().zip(&vals).map(|(&x, &v)| v * x.sin()).collect::<Vec<_>>());
        let q2 = trapezoid(&xs.iter().zip(&vals).map(|(&x, &v)| v * x.cos()).collect::<Vec<_>>());
        assert_abs_diff_eq!(i1(&u), q1, epsilon = 1e-10);
        assert_abs_diff_eq!(i2(&u), q2, epsilon = 1e-10);
    }

    #[test]
    fn reflection_negates_i1_and_fixes_i2() {
        let u = SpectralField::from_fn(64, |x| {
            0.4 * x.sin() + 0.2 * x.cos() - 0.3 * (3.0 * x).sin()
        });
        let refl = SpectralField::from_fn(64, |x| {
            let y = 2.0 * PI - x;
            0.4 * y.sin() + 0.2 * y.cos() - 0.3 * (3.0 * y).sin()
        });
        assert_abs_diff_eq!(i1(&refl), -i1(&u), epsilon = 1e-12);
        assert_abs_diff_eq!(i2(&refl), i2(&u), epsilon = 1e-12);
    }

    #[test]
    fn heatmap_of_constant_field() {
        let u = SpectralField::from_fn(16, |_| 0.5);
        let hm = heatmap(&[u], 32).unwrap();
        assert_eq!((hm.rows, hm.cols), (1, 32));
        for v in hm.data {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-13);
        }
    }

    #[test]
    fn heatmap_row_mean_is_mass_over_period() {
        let u = SpectralField::from_fn(32, |x| x.sin().powi(2) / PI);
        let hm = heatmap(&[u.clone()], 64).unwrap();
        let row_mean: f64 = hm.data.iter().sum::<f64>() / 64.0;
        assert_abs_diff_eq!(row_mean, mass(&u) / (2.0 * PI), epsilon = 1e-12);
    }

    fn synthetic_series(blocks: &[((f64, f64), usize)], jitter: f64) -> ObservableSeries {
        let mut s = ObservableSeries::default();
        let mut t = 0.0;
        let mut rng = 1u64;
        let mut noise = || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * jitter
        };
        for &((a, b), n) in blocks {
            for _ in 0..n {
                s.times.push(t);
                s.i1.push(a + noise());
                s.i2.push(b + noise());
                s.mass.push(1.0);
                s.neg_fraction.push(0.0);
                t += 1.0;
            }
        }
        s
    }

    #[test]
    fn alternating_blocks_give_two_modes() {
        let blocks = [
            ((0.9, 0.0), 200),
            ((-0.9, 0.0), 200),
            ((0.9, 0.0), 200),
            ((-0.9, 0.0), 200),
        ];
        let s = synthetic_series(&blocks, 0.05);
        let r = count_modes(&s, 0.0, None, &ModeDetection::default()).unwrap();
        assert_eq!(r.n_modes, 2);
        assert_eq!(r.hop_count, 3);
        let occ: f64 = r.clusters.iter().map(|c| c.occupancy).sum();
        assert!((occ - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_blob_gives_one_mode() {
        let s = synthetic_series(&[((0.0, 0.0), 500)], 0.1);
        let r = count_modes(&s, 0.2, None, &ModeDetection::default()).unwrap();
        assert_eq!(r.n_modes, 1);
        assert_eq!(r.hop_count, 0);
    }

    #[test]
    fn degenerate_series_gives_single_cluster() {
        let s = synthetic_series(&[((0.3, 0.1), 150)], 0.0);
        let r = count_modes(&s, 0.0, None, &ModeDetection::default()).unwrap();
        assert_eq!(r.n_modes, 1);
        assert_abs_diff_eq!(r.clusters[0].centroid.0, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn fixed_point_matching() {
        let s = synthetic_series(&[((0.88, 0.02), 300), ((-0.9, 0.0), 300)], 0.04);
        let fps = [(0.0, 0.5), (0.9, 0.0), (-0.9, 0.0)];
        let r = count_modes(&s, 0.0, Some(&fps), &ModeDetection::default()).unwrap();
        let matched: Vec<Option<usize>> = r.clusters.iter().map(|c| c.fixed_point).collect();
        assert!(matched.contains(&Some(1)));
        assert!(matched.contains(&Some(2)));
    }

    #[test]
    fn too_few_points_is_an_error() {
        let s = synthetic_series(&[((0.0, 0.0), 50)], 0.1);
        assert!(count_modes(&s, 0.0, None, &ModeDetection::default()).is_err());
    }
}

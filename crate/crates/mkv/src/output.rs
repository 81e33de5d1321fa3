//! File emission: CSV series/tables, the binary heat-map container, and a
//! P6 PPM raster.
//!
//! Every CSV starts with a `# config_hash=...` comment followed by a header
//! row, so artifacts can always be traced back to the settings that made
//! them. The heat-map container is deliberately primitive — magic `MKVH`,
//! version, dimensions, row-major f64 little-endian — so any language can
//! read it with a dozen lines.

use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::convergence::ConvergenceReport;
use crate::error::{Error, Result};
use crate::observables::{HeatMap, ObservableSeries};
use crate::stationary::FixedPointResult;

pub const HEATMAP_MAGIC: &[u8; 4] = b"MKVH";
pub const HEATMAP_VERSION: u16 = 1;

fn create(path: &Path) -> Result<BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(std::fs::File::create(path)?))
}

pub fn write_series_csv(path: &Path, series: &ObservableSeries, config_hash: u64) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# config_hash={config_hash:016x}")?;
    writeln!(w, "time,i1,i2,mass,neg_fraction")?;
    for i in 0..series.len() {
        writeln!(
            w,
            "{:.6},{:.17e},{:.17e},{:.17e},{:.17e}",
            series.times[i], series.i1[i], series.i2[i], series.mass[i], series.neg_fraction[i]
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_heatmap_bin(path: &Path, map: &HeatMap) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(HEATMAP_MAGIC)?;
    w.write_all(&HEATMAP_VERSION.to_le_bytes())?;
    w.write_all(&(map.rows as u64).to_le_bytes())?;
    w.write_all(&(map.cols as u64).to_le_bytes())?;
    for v in &map.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_heatmap_bin(path: &Path) -> Result<HeatMap> {
    let bytes = std::fs::read(path)?;
    let bad = |m: &str| Error::Config(format!("{}: {m}", path.display()));
    if bytes.len() < 22 || &bytes[0..4] != HEATMAP_MAGIC {
        return Err(bad("not a heat-map file (bad magic)"));
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != HEATMAP_VERSION {
        return Err(bad(&format!("unsupported heat-map version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[6..14].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[14..22].try_into().unwrap()) as usize;
    let need = 22 + rows * cols * 8;
    if bytes.len() != need {
        return Err(bad(&format!(
            "payload is {} bytes, expected {need}",
            bytes.len()
        )));
    }
    let data = bytes[22..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(HeatMap { rows, cols, data })
}

/// Five-anchor approximation of the viridis colormap, linearly interpolated.
fn viridis(t: f64) -> [u8; 3] {
    const STOPS: [[f64; 3]; 5] = [
        [0.267, 0.005, 0.329],
        [0.229, 0.322, 0.546],
        [0.127, 0.566, 0.551],
        [0.369, 0.789, 0.383],
        [0.993, 0.906, 0.144],
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let mut rgb = [0u8; 3];
    for c in 0..3 {
        let v = STOPS[i][c] + f * (STOPS[i + 1][c] - STOPS[i][c]);
        rgb[c] = (v * 255.0).round() as u8;
    }
    rgb
}

/// Render the heat map as a binary PPM (P6), viridis-mapped over the data
/// range. Time runs top to bottom.
pub fn write_heatmap_ppm(path: &Path, map: &HeatMap) -> Result<()> {
    let (lo, hi) = map
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut w = create(path)?;
    write!(w, "P6\n{} {}\n255\n", map.cols, map.rows)?;
    for v in &map.data {
        w.write_all(&viridis((v - lo) / span))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per root per σ.
pub fn write_roots_csv(
    path: &Path,
    rows: &[(f64, FixedPointResult)],
    config_hash: u64,
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# config_hash={config_hash:016x}")?;
    writeln!(w, "sigma,m1,m2,z_sigma,residual,stability")?;
    for (sigma, r) in rows {
        writeln!(
            w,
            "{sigma},{:.17e},{:.17e},{:.17e},{:.3e},{}",
            r.m1(),
            r.m2(),
            r.z_sigma,
            r.residual,
            r.stability
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a roots table back: `(σ, (m₁, m₂))` per row. Comments and the
/// header are skipped; anything else malformed is a configuration error.
pub fn read_roots_csv(path: &Path) -> Result<Vec<(f64, [f64; 2])>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("sigma,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(Error::Config(format!(
                "{}:{}: expected at least sigma,m1,m2",
                path.display(),
                lineno + 1
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| {
                Error::Config(format!(
                    "{}:{}: `{s}` is not a number",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        out.push((parse(fields[0])?, [parse(fields[1])?, parse(fields[2])?]));
    }
    if out.is_empty() {
        return Err(Error::Config(format!(
            "{}: no root rows found",
            path.display()
        )));
    }
    Ok(out)
}

/// Eigenvalue scatter rows, one line per eigenvalue per root.
pub fn write_eigs_csv(
    path: &Path,
    rows: &[(f64, usize, f64, f64, Vec<Complex64>)],
    config_hash: u64,
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# config_hash={config_hash:016x}")?;
    writeln!(w, "sigma,root,m1,m2,eig_re,eig_im")?;
    for (sigma, root, m1, m2, eigs) in rows {
        for e in eigs {
            writeln!(w, "{sigma},{root},{m1:.17e},{m2:.17e},{:.17e},{:.17e}", e.re, e.im)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence_csv(
    path: &Path,
    report: &ConvergenceReport,
    config_hash: u64,
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# config_hash={config_hash:016x}")?;
    writeln!(
        w,
        "# axis={} n_trials={} fitted_slope={:.6}",
        report.axis, report.n_trials, report.fitted_slope
    )?;
    writeln!(w, "parameter,mse,ci_low,ci_high")?;
    for p in &report.points {
        writeln!(
            w,
            "{},{:.17e},{:.17e},{:.17e}",
            p.parameter, p.mse, p.ci_low, p.ci_high
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_langevin_path_csv(
    path: &Path,
    times: &[f64],
    ys: &[f64],
    config_hash: u64,
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# config_hash={config_hash:016x}")?;
    writeln!(w, "time,y")?;
    for (t, y) in times.iter().zip(ys) {
        writeln!(w, "{t:.6},{y:.17e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Histogram rows with the normalized Gibbs target alongside for plotting.
pub fn write_histogram_csv(
    path: &Path,
    centers: &[f64],
    density: &[f64],
    target: &[f64],
    config_hash: u64,
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# config_hash={config_hash:016x}")?;
    writeln!(w, "bin_center,density,target_density")?;
    for i in 0..centers.len() {
        writeln!(w, "{:.17e},{:.17e},{:.17e}", centers[i], density[i], target[i])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_bin_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.bin");
        let map = HeatMap {
            rows: 3,
            cols: 4,
            data: (0..12).map(|i| i as f64 * 0.5 - 1.0).collect(),
        };
        write_heatmap_bin(&path, &map).unwrap();
        let back = read_heatmap_bin(&path).unwrap();
        assert_eq!(back.rows, 3);
        assert_eq!(back.cols, 4);
        assert_eq!(back.data, map.data);

        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"MKVH");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(bytes.len(), 22 + 12 * 8);
    }

    #[test]
    fn heatmap_bin_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(read_heatmap_bin(&path).is_err());
    }

    #[test]
    fn ppm_header_and_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.ppm");
        let map = HeatMap {
            rows: 2,
            cols: 3,
            data: vec![0.0, 0.5, 1.0, 1.0, 0.5, 0.0],
        };
        write_heatmap_ppm(&path, &map).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P6\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 6 * 3);
    }

    #[test]
    fn viridis_endpoints() {
        assert_eq!(viridis(0.0), [68, 1, 84]);
        let hi = viridis(1.0);
        assert!(hi[0] > 220 && hi[1] > 200 && hi[2] < 60, "{hi:?}");
    }

    #[test]
    fn roots_csv_round_trip() {
        use crate::stationary::Stability;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roots.csv");
        let rows = vec![(
            0.2,
            FixedPointResult {
                m: vec![0.95, -0.05],
                z_sigma: 12.5,
                rho_grid: vec![],
                residual: 1e-12,
                stability: Stability::Stable,
            },
        )];
        write_roots_csv(&path, &rows, 0xabcd).unwrap();
        let back = read_roots_csv(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].0, 0.2);
        assert!((back[0].1[0] - 0.95).abs() < 1e-15);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config_hash=000000000000abcd\n"));
        assert!(text.contains("sigma,m1,m2"));
        assert!(text.contains("stable"));
    }

    #[test]
    fn malformed_roots_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roots.csv");
        std::fs::write(&path, "sigma,m1,m2\n0.2,abc,0.1\n").unwrap();
        assert!(read_roots_csv(&path).is_err());
        std::fs::write(&path, "# only comments\n").unwrap();
        assert!(read_roots_csv(&path).is_err());
    }

    #[test]
    fn series_csv_layout() {
        use crate::spectral::SpectralField;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        let mut series = ObservableSeries::default();
        let u = SpectralField::from_fn(16, |x| (1.0 + 0.3 * x.cos()) / (2.0 * std::f64::consts::PI));
        series.push(0.0, &u);
        series.push(0.5, &u);
        write_series_csv(&path, &series, 7).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "time,i1,i2,mass,neg_fraction");
    }
}

//! Command-line surface: `simulate | fixed-points | stability | converge |
//! langevin`, with flag > config-file > default precedence and documented
//! exit codes (0 ok, 2 config, 3 divergence, 4 I/O).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::convergence::{mse_study_dt, mse_study_j};
use crate::error::{Error, Result};
use crate::integrator::{simulate_langevin, try_simulate};
use crate::langevin::{occupation_vs_gibbs, ScalarPotential};
use crate::observables::{count_modes, heatmap};
use crate::output;
use crate::stability::{classify, label_roots};
use crate::stationary::{Stability, StationaryProblem};

#[derive(Parser, Debug)]
#[command(name = "mkv", version, about = "Spectral simulator for noisy mean-field dynamics on the torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by all subcommands; any flag given here overrides the
/// config file, which overrides the built-in defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Diffusion strength σ.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Noise amplitude γ.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Noise spectral decay exponent s.
    #[arg(long)]
    pub s: Option<f64>,
    /// Resolved Fourier modes (even).
    #[arg(long = "J", value_name = "J")]
    pub j: Option<usize>,
    /// Time step Δt.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulation horizon.
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Model preset (double_well | four_well).
    #[arg(long)]
    pub preset: Option<String>,
    /// Monte-Carlo trials for the convergence studies.
    #[arg(long)]
    pub trials: Option<usize>,
}

impl Overrides {
    /// Effective configuration: file (or defaults) with flags applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.simulation.seed = v;
        }
        if let Some(v) = self.sigma {
            cfg.model.sigma = v;
        }
        if let Some(v) = self.gamma {
            cfg.model.gamma = v;
        }
        if let Some(v) = self.s {
            cfg.model.s = v;
        }
        if let Some(v) = self.j {
            cfg.simulation.j = v;
        }
        if let Some(v) = self.dt {
            cfg.simulation.dt = v;
        }
        if let Some(v) = self.t_max {
            cfg.simulation.t_max = v;
        }
        if let Some(v) = &self.out {
            cfg.output.dir = v.display().to_string();
        }
        if let Some(v) = &self.preset {
            cfg.model.preset = v.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate the SPDE and emit series.csv, heatmap.bin, heatmap.ppm
    /// and summary.json.
    Simulate(Overrides),
    /// Solve the stationary self-consistency problem over a σ sweep and
    /// emit roots.csv with stability labels.
    FixedPoints {
        #[command(flatten)]
        common: Overrides,
        /// Comma-separated σ values; defaults to the configured σ.
        #[arg(long, value_delimiter = ',')]
        sigma_list: Vec<f64>,
        /// Root tolerance on the self-consistency residual.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Quadrature points for the moment integrals.
        #[arg(long, default_value_t = 2048)]
        quadrature: usize,
    },
    /// Eigenvalue dump of the linearized operator around the roots in a
    /// roots.csv file.
    Stability {
        #[command(flatten)]
        common: Overrides,
        /// roots.csv produced by `fixed-points`.
        #[arg(long, value_name = "PATH")]
        roots: PathBuf,
    },
    /// Coupled-noise MSE convergence study; emits convergence.csv.
    Converge {
        #[command(flatten)]
        common: Overrides,
        /// Sweep axis: the time step or the mode count.
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Comma-separated sweep values (Δt values or J values).
        #[arg(long, value_delimiter = ',', required = true)]
        sweep: Vec<f64>,
        /// Reference Δt (axis dt) or reference J (axis j).
        #[arg(long)]
        reference: f64,
    },
    /// Scalar Langevin demo; emits path.csv and histogram.csv.
    Langevin {
        #[command(flatten)]
        common: Overrides,
        /// Scalar potential (double_well | tilted_double_well).
        #[arg(long, default_value = "double_well")]
        u_preset: String,
        /// Temperature α of `dY = -U'(Y)dt + √α dW`.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        y0: f64,
        #[arg(long, default_value_t = 64)]
        bins: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum AxisArg {
    Dt,
    J,
}

/// Map library errors onto the documented process exit codes.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Resolution(_) => 2,
        Error::Divergence { .. } | Error::Eig(_) => 3,
        Error::Io(_) => 4,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => cmd_simulate(&common),
        Command::FixedPoints {
            common,
            sigma_list,
            tol,
            quadrature,
        } => cmd_fixed_points(&common, &sigma_list, tol, quadrature),
        Command::Stability { common, roots } => cmd_stability(&common, &roots),
        Command::Converge {
            common,
            axis,
            sweep,
            reference,
        } => cmd_converge(&common, axis, &sweep, reference),
        Command::Langevin {
            common,
            u_preset,
            alpha,
            y0,
            bins,
        } => cmd_langevin(&common, &u_preset, alpha, y0, bins),
    }
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    PathBuf::from(&cfg.output.dir)
}

pub fn cmd_simulate(common: &Overrides) -> Result<()> {
    let cfg = common.resolve()?;
    let spec = cfg.model_spec()?;
    for w in spec.warnings() {
        eprintln!("warning: {w}");
    }
    let sim = cfg.sim_config()?;
    let hash = cfg.hash();
    let dir = out_dir(&cfg);

    let traj = try_simulate(&spec, &sim)?;
    output::write_series_csv(&dir.join("series.csv"), &traj.series, hash)?;

    // Thin the snapshot rows to the configured raster budget.
    let stride = traj.snapshots.len().div_ceil(cfg.output.max_heatmap_rows).max(1);
    let thinned: Vec<_> = traj.snapshots.iter().step_by(stride).cloned().collect();
    let map = heatmap(&thinned, cfg.output.heatmap_cols)?;
    output::write_heatmap_bin(&dir.join("heatmap.bin"), &map)?;
    output::write_heatmap_ppm(&dir.join("heatmap.ppm"), &map)?;

    // Mode report against the stable stationary states, when the series is
    // long enough to cluster.
    let detection = cfg.mode_detection()?;
    let problem = StationaryProblem::from_model(&spec)?;
    let mut fps: Vec<(f64, f64)> = Vec::new();
    if problem.dim() == 2 {
        if let Ok(mut search) = problem.find_fixed_points(1e-9, 1024) {
            let _ = label_roots(&problem, &mut search.results, &spec, spec.modes().min(128));
            fps = search
                .results
                .iter()
                .filter(|r| r.stability == Stability::Stable)
                .map(|r| (r.m1(), r.m2()))
                .collect();
        }
    }
    let report = count_modes(&traj.series, cfg.analysis.burn_in, Some(&fps), &detection).ok();

    let mut summary = serde_json::json!({
        "config_hash": format!("{hash:016x}"),
        "steps": traj.series.len().saturating_sub(1) * sim.snapshot_stride,
        "stored": traj.series.len(),
        "diverged": traj.diverged.map(|(step, time)| serde_json::json!({"step": step, "time": time})),
        "final_mass": traj.series.mass.last(),
    });
    if let Some(r) = &report {
        summary["n_modes"] = serde_json::json!(r.n_modes);
        summary["hop_count"] = serde_json::json!(r.hop_count);
        summary["clusters"] = serde_json::json!(r
            .clusters
            .iter()
            .map(|c| serde_json::json!({
                "i1": c.centroid.0,
                "i2": c.centroid.1,
                "occupancy": c.occupancy,
                "fixed_point": c.fixed_point,
            }))
            .collect::<Vec<_>>());
    }
    output::write_summary_json(&dir.join("summary.json"), &summary)?;

    if let Some((step, time)) = traj.diverged {
        return Err(Error::Divergence { step, time });
    }
    Ok(())
}

pub fn cmd_fixed_points(
    common: &Overrides,
    sigma_list: &[f64],
    tol: f64,
    quadrature: usize,
) -> Result<()> {
    let cfg = common.resolve()?;
    let hash = cfg.hash();
    let dir = out_dir(&cfg);
    let sigmas: Vec<f64> = if sigma_list.is_empty() {
        vec![cfg.model.sigma]
    } else {
        sigma_list.to_vec()
    };

    let mut rows = Vec::new();
    for &sigma in &sigmas {
        let mut cfg_s = cfg.clone();
        cfg_s.model.sigma = sigma;
        let spec = cfg_s.model_spec()?;
        let problem = StationaryProblem::from_model(&spec)?;
        let mut search = problem.find_fixed_points(tol, quadrature)?;
        label_roots(&problem, &mut search.results, &spec, spec.modes())?;
        for r in search.results {
            rows.push((sigma, r));
        }
    }
    output::write_roots_csv(&dir.join("roots.csv"), &rows, hash)
}

pub fn cmd_stability(common: &Overrides, roots_path: &Path) -> Result<()> {
    let cfg = common.resolve()?;
    let hash = cfg.hash();
    let dir = out_dir(&cfg);
    let roots = output::read_roots_csv(roots_path)?;

    let mut rows = Vec::new();
    for (idx, (sigma, m)) in roots.into_iter().enumerate() {
        let mut cfg_s = cfg.clone();
        cfg_s.model.sigma = sigma;
        let spec = cfg_s.model_spec()?;
        let problem = StationaryProblem::from_model(&spec)?;
        if problem.dim() != 2 {
            return Err(Error::Config(
                "stability root files carry (m1, m2); the configured interaction \
                 has more harmonics"
                    .into(),
            ));
        }
        let root = problem.rho_from_m(&[m[0], m[1]], 2048.max(spec.modes()))?;
        let s = classify(&problem, &root, &spec, spec.modes())?;
        rows.push((sigma, idx, m[0], m[1], s.eigenvalues));
    }
    output::write_eigs_csv(&dir.join("eigs.csv"), &rows, hash)
}

pub fn cmd_converge(common: &Overrides, axis: AxisArg, sweep: &[f64], reference: f64) -> Result<()> {
    let cfg = common.resolve()?;
    let spec = cfg.model_spec()?;
    let sim = cfg.sim_config()?;
    let hash = cfg.hash();
    let dir = out_dir(&cfg);
    let trials = common.trials.unwrap_or(256);

    let report = match axis {
        AxisArg::Dt => mse_study_dt(&spec, &sim, sweep, reference, trials)?,
        AxisArg::J => {
            let j_list: Vec<usize> = sweep
                .iter()
                .map(|&v| {
                    if v.fract() != 0.0 || v < 4.0 {
                        Err(Error::Config(format!("J sweep values must be even integers, got {v}")))
                    } else {
                        Ok(v as usize)
                    }
                })
                .collect::<Result<_>>()?;
            if reference.fract() != 0.0 || reference < 4.0 {
                return Err(Error::Config(format!(
                    "reference J must be an even integer, got {reference}"
                )));
            }
            mse_study_j(&spec, &sim, &j_list, reference as usize, trials)?
        }
    };
    output::write_convergence_csv(&dir.join("convergence.csv"), &report, hash)
}

pub fn cmd_langevin(
    common: &Overrides,
    u_preset: &str,
    alpha: f64,
    y0: f64,
    bins: usize,
) -> Result<()> {
    let cfg = common.resolve()?;
    let hash = cfg.hash();
    let dir = out_dir(&cfg);
    let pot: ScalarPotential = u_preset.parse()?;
    if alpha < 0.0 {
        return Err(Error::Config(format!("alpha must be >= 0, got {alpha}")));
    }
    let dt = cfg.simulation.dt;
    let t_max = cfg.simulation.t_max;
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }

    let path = simulate_langevin(|y| pot.u_prime(y), y0, alpha, dt, t_max, cfg.simulation.seed);
    let times: Vec<f64> = (0..path.len()).map(|i| i as f64 * dt).collect();
    // Thin the path dump to the snapshot stride; the histogram uses it all.
    let stride = cfg.simulation.snapshot_stride.max(1);
    let t_thin: Vec<f64> = times.iter().copied().step_by(stride).collect();
    let y_thin: Vec<f64> = path.iter().copied().step_by(stride).collect();
    output::write_langevin_path_csv(&dir.join("path.csv"), &t_thin, &y_thin, hash)?;

    if alpha > 0.0 {
        let hist = occupation_vs_gibbs(&path, 0.1, bins, pot, alpha)?;
        output::write_histogram_csv(
            &dir.join("histogram.csv"),
            &hist.centers,
            &hist.density(),
            &hist.target_density(),
            hash,
        )?;
        eprintln!(
            "total variation against the Gibbs density: {:.4}",
            hist.total_variation()
        );
    }
    Ok(())
}

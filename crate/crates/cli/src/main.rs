use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use membec::config::{ConfigFile, SolverSettings};
use membec::gpe::{self, Grid, ImagOpts};
use membec::linres::{self, ModePair};
use membec::observables;
use membec::variational;
use membec::{Error, ModelParams, Result};

use membec_cli::csvio::{self, fmt_float, CsvDoc};
use membec_cli::figures::{self, FigureCtx, FIGURE_NAMES};
use membec_cli::plot;
use membec_cli::sweep::{self, linspace, Axis, Route, SweepSpec};

/// Mean-field simulator for a membrane-coupled condensate in an optical lattice.
#[derive(Parser)]
#[command(name = "membec", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Config file path (falls back to $MEMBEC_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Named parameter preset used as the base.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Output directory for data files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for sweeps and figures.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Which solver route(s) to run where both apply.
    #[arg(long, global = true, value_enum, default_value_t = RouteArg::Variational)]
    route: RouteArg,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    Variational,
    Gpe,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the steady state at one coupling.
    Steady {
        #[arg(long)]
        lambda: Option<f64>,
        /// Symmetry-broken branch sign above threshold.
        #[arg(long, default_value_t = 1)]
        branch: i8,
    },
    /// Critical coupling of the symmetry-breaking transition.
    Critical {},
    /// Collective-mode sweep; writes (Lambda, branch, omega, gamma).
    Modes {
        #[arg(long, default_value_t = 0.0)]
        lambda_min: f64,
        #[arg(long, default_value_t = 150.0)]
        lambda_max: f64,
        #[arg(long, default_value_t = 301)]
        points: usize,
    },
    /// Ground-state logarithmic negativity sweep (gamma = 0).
    Entanglement {
        #[arg(long, default_value_t = 0.0)]
        lambda_min: f64,
        #[arg(long, default_value_t = 150.0)]
        lambda_max: f64,
        #[arg(long, default_value_t = 121)]
        points: usize,
    },
    /// Imaginary-time GPE ground state; writes the wavefunction.
    GpeGround {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        seed_offset: Option<f64>,
    },
    /// Real-time GPE evolution.
    GpeEvolve {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 5.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        /// Initial displacement of the condensate.
        #[arg(long, default_value_t = 0.05)]
        displacement: f64,
        /// Start from the converged ground state instead of a fresh Gaussian.
        #[arg(long, default_value_t = false)]
        from_ground: bool,
    },
    /// Bogoliubov-de Gennes spectrum around the GPE ground state.
    Bdg {
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Momentum distribution (single site, plus lattice when --sites > 1).
    Momentum {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 1)]
        sites: usize,
    },
    /// Parameter sweep driven by flags or the [sweep] config section.
    Sweep {
        #[arg(long)]
        axis: Option<String>,
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        stop: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        /// Comma-separated observable names.
        #[arg(long)]
        observables: Option<String>,
        /// Refine a window around the critical coupling at 10x resolution.
        #[arg(long, default_value_t = false)]
        refine: bool,
    },
    /// Reproduce one figure pipeline (CSV plus SVG).
    Figure {
        name: String,
        /// Figure-specific overrides, e.g. --set lambda_points=31.
        #[arg(long = "set")]
        sets: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::UnknownPreset { .. } | Error::InvalidInput(_) => {
                    ExitCode::from(1)
                }
                _ => ExitCode::from(3),
            }
        }
    }
}

/// Base parameters: preset flag first, then config-file [model] overrides.
fn resolve(cli: &Cli) -> Result<(ModelParams, SolverSettings, Option<ConfigFile>)> {
    let mut base = match &cli.preset {
        Some(name) => membec::params::from_preset(name)?,
        None => ModelParams::paper_default(),
    };
    let path = cli.config.clone().or_else(ConfigFile::env_path);
    let cfg = match path {
        Some(p) => Some(ConfigFile::from_path(&p)?),
        None => None,
    };
    let mut solver = SolverSettings::default();
    if let Some(cfg) = &cfg {
        base = cfg.apply_model_params(base)?;
        solver = cfg.solver_settings()?;
    }
    Ok((base, solver, cfg))
}

fn with_lambda(base: &ModelParams, lambda: Option<f64>) -> ModelParams {
    match lambda {
        Some(l) => base.with_lambda(l),
        None => *base,
    }
}

fn routes_of(cli: &Cli) -> Vec<Route> {
    match cli.route {
        RouteArg::Variational => vec![Route::Variational],
        RouteArg::Gpe => vec![Route::Gpe],
        RouteArg::Both => vec![Route::Variational, Route::Gpe],
    }
}

fn execute(cli: &Cli) -> Result<ExitCode> {
    let (base, solver, cfg) = resolve(cli)?;
    match &cli.cmd {
        Cmd::Steady { lambda, branch } => {
            let p = with_lambda(&base, *lambda);
            let ss = variational::steady_state(&p, *branch)?;
            let lc = variational::critical_coupling(&p)?;
            println!("Lambda    = {}", p.lambda);
            println!("Lambda_c  = {lc}");
            println!("branch    = {}", ss.branch);
            println!("S0        = {}", ss.s0);
            println!("sigma0    = {}", ss.sigma0);
            println!("zeta0     = {}", ss.zeta0);
            println!("alpha'_0  = {}", ss.alpha_prime0);
            println!("alpha''_0 = {}", ss.alpha_dprime0);
            let e = variational::energy(ss.alpha_prime0, ss.sigma0, ss.s0, &p)?;
            println!("energy    = {e}");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Critical {} => {
            let lc = variational::critical_coupling(&base)?;
            let lcv = base.lambda_cv();
            println!("Lambda_cV = {lcv}");
            println!("Lambda_c  = {lc}");
            println!("ratio     = {}", lc / lcv);
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Modes {
            lambda_min,
            lambda_max,
            points,
        } => {
            let grid = linspace(*lambda_min, *lambda_max, *points);
            let rows = figures::mode_sweep_rows(&base, &grid, cli.workers)?;
            let doc = figures::mode_rows_doc("modes", &base, &rows);
            let path = cli.out.join("modes.csv");
            doc.write(&path)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Entanglement {
            lambda_min,
            lambda_max,
            points,
        } => {
            let p = base.with_gamma(0.0);
            let lc = variational::critical_coupling(&p)?;
            // The covariance has no ground state in a narrow sliver at the
            // transition itself; skip grid points inside it.
            let grid: Vec<f64> = linspace(*lambda_min, *lambda_max, *points)
                .into_iter()
                .filter(|l| (l - lc).abs() > 2e-3 * lc)
                .collect();
            let mut doc = CsvDoc::new("entanglement");
            doc.model_meta(&p);
            doc.columns = vec!["Lambda".into(), "E_N_md".into(), "E_N_mw".into()];
            for &l in &grid {
                let pl = p.with_lambda(l);
                let ss = variational::steady_state(&pl, 1)?;
                let lr = linres::linearize(&pl, &ss)?;
                let c = linres::ground_state_covariance(&lr)?;
                doc.rows.push(vec![
                    fmt_float(l),
                    fmt_float(linres::log_negativity(&c, ModePair::MembraneDisplacement)?),
                    fmt_float(linres::log_negativity(&c, ModePair::MembraneWidth)?),
                ]);
            }
            let path = cli.out.join("entanglement.csv");
            doc.write(&path)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::GpeGround { lambda, seed_offset } => {
            let p = with_lambda(&base, *lambda);
            let grid = Grid::new(solver.grid_points)?;
            let seed = seed_offset.unwrap_or(solver.seed_offset);
            let gs = gpe::ground_state_with(&p, &grid, seed, &ImagOpts::from(&solver))?;
            let (zeta, s) = observables::order_parameter_from_psi(&gs.psi);
            println!("energy     = {}", gs.energy);
            println!("mu         = {}", gs.mu);
            println!("zeta       = {zeta}");
            println!("S          = {s}");
            println!("width      = {}", gs.psi.width());
            println!("alpha      = {} + {} i", gs.alpha.re, gs.alpha.im);
            println!("iterations = {}", gs.iterations);
            let doc = csvio::wavefunction_doc(&gs.psi, &p);
            let path = cli.out.join("wavefunction.csv");
            doc.write(&path)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::GpeEvolve {
            lambda,
            t_end,
            dt,
            displacement,
            from_ground,
        } => {
            let p = with_lambda(&base, *lambda);
            let grid = Grid::new(solver.grid_points)?;
            let (psi0, alpha0) = if *from_ground {
                let gs =
                    gpe::ground_state_with(&p, &grid, solver.seed_offset, &ImagOpts::from(&solver))?;
                (gs.psi, gs.alpha)
            } else {
                let sigma = (p.omega_r / p.lattice_depth).powf(0.25);
                (
                    gpe::Wavefunction::gaussian(&grid, *displacement, sigma)?,
                    Complex64::new(0.0, 0.0),
                )
            };
            let dt = solver.gpe_dt.unwrap_or(*dt);
            let traj = gpe::evolve(&psi0, alpha0, &p, *t_end, dt)?;
            for w in &traj.warnings {
                eprintln!("warning: {w}");
            }
            let mut doc = CsvDoc::new("gpe-trajectory");
            doc.model_meta(&p);
            doc.columns =
                ["t", "norm", "energy", "zeta", "S", "width", "alpha_prime", "alpha_dprime"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
            for s in &traj.samples {
                doc.rows.push(vec![
                    fmt_float(s.t),
                    fmt_float(s.norm),
                    fmt_float(s.energy),
                    fmt_float(s.zeta),
                    fmt_float(s.s),
                    fmt_float(s.width),
                    fmt_float(s.alpha.re),
                    fmt_float(s.alpha.im),
                ]);
            }
            let path = cli.out.join("gpe_trajectory.csv");
            doc.write(&path)?;
            println!("wrote {}", path.display());
            let svg = cli.out.join("gpe_trajectory.svg");
            plot::line_plot(
                &svg,
                "GPE evolution",
                "t [1/w_R]",
                "S",
                &[("S".into(), traj.samples.iter().map(|s| (s.t, s.s)).collect())],
            )?;
            println!("wrote {}", svg.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Bdg { lambda } => {
            let p = with_lambda(&base, *lambda);
            let grid = Grid::new(solver.grid_points)?;
            let gs = gpe::ground_state_with(&p, &grid, solver.seed_offset, &ImagOpts::from(&solver))?;
            let bdg = gpe::bdg_matrix(&gs.psi, gs.alpha, gs.mu, &p)?;
            let modes = gpe::bdg_modes(&bdg)?;
            let mut doc = CsvDoc::new("bdg-spectrum");
            doc.model_meta(&p);
            doc.meta("grid_points", solver.grid_points.to_string());
            // Native convention nu = omega - i gamma_k of the positive branch.
            doc.columns = vec!["index".into(), "re_nu".into(), "im_nu".into(), "branch".into()];
            for (i, (nu, label)) in modes.eigenvalues.iter().zip(&modes.labels).enumerate() {
                doc.rows.push(vec![
                    i.to_string(),
                    fmt_float(nu.im),
                    fmt_float(nu.re),
                    format!("{label:?}").to_lowercase(),
                ]);
            }
            let path = cli.out.join("bdg_spectrum.csv");
            doc.write(&path)?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Momentum { lambda, sites } => {
            let p = with_lambda(&base, *lambda);
            let ss = variational::steady_state(&p, 1)?;
            let ks = observables::default_k_grid();
            let n = observables::momentum_distribution_gaussian(ss.sigma0, ss.zeta0, p.n_atoms, &ks)?;
            let write_dist = |name: &str, kind: &str, dist: &observables::MomentumDistribution| -> Result<PathBuf> {
                let mut doc = CsvDoc::new(kind);
                doc.model_meta(&p);
                doc.meta("m_sites", dist.site_count.to_string());
                doc.columns = vec!["k".into(), "abs_n".into(), "re_n".into(), "im_n".into()];
                for (k, v) in dist.k_values.iter().zip(&dist.values) {
                    doc.rows.push(vec![
                        fmt_float(*k),
                        fmt_float(v.norm()),
                        fmt_float(v.re),
                        fmt_float(v.im),
                    ]);
                }
                let path = cli.out.join(name);
                doc.write(&path)?;
                Ok(path)
            };
            let path = write_dist("momentum.csv", "momentum", &n)?;
            println!("wrote {}", path.display());
            if *sites > 1 {
                let lat = observables::lattice_momentum_distribution(&n, ss.zeta0, *sites);
                let path = write_dist("momentum_lattice.csv", "momentum-lattice", &lat)?;
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sweep {
            axis,
            start,
            stop,
            count,
            observables,
            refine,
        } => {
            let spec = if let Some(axis) = axis {
                let axis = Axis::parse(axis)?;
                let (start, stop, count) = match (start, stop, count) {
                    (Some(a), Some(b), Some(c)) => (*a, *b, *c),
                    _ => {
                        return Err(Error::Config(
                            "--axis requires --start, --stop and --count".into(),
                        ))
                    }
                };
                let observables = observables
                    .as_ref()
                    .map(|o| o.split(',').map(|s| s.trim().to_string()).collect())
                    .unwrap_or_default();
                SweepSpec {
                    axis,
                    grid: linspace(start, stop, count),
                    base,
                    routes: routes_of(cli),
                    observables,
                    refine: *refine,
                    solver,
                }
            } else {
                let cfg = cfg.as_ref().ok_or_else(|| {
                    Error::Config("sweep needs --axis flags or a config with a [sweep] section".into())
                })?;
                sweep::SweepSpec::from_config(cfg, base, solver)?
            };
            let ds = sweep::run_sweep(&spec, cli.workers)?;
            let path = cli.out.join("sweep.csv");
            ds.to_csv_doc().write(&path)?;
            println!("wrote {}", path.display());
            if ds.has_missing() {
                eprintln!("warning: some grid points failed; see the status column");
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Figure { name, sets } => {
            let mut overrides = BTreeMap::new();
            for kv in sets {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{kv}`")))?;
                overrides.insert(k.trim().to_string(), v.trim().to_string());
            }
            if !FIGURE_NAMES.contains(&name.as_str()) {
                return Err(Error::Config(format!(
                    "unknown figure `{name}` (valid names: {})",
                    FIGURE_NAMES.join(", ")
                )));
            }
            let ctx = FigureCtx {
                out_dir: cli.out.clone(),
                workers: cli.workers,
                include_gpe: cli.route != RouteArg::Variational,
                base,
                solver,
                overrides,
            };
            let files = figures::run_figure(name, &ctx)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

//! Figure-reproduction pipelines.
//!
//! Each pipeline runs its computation with the caption parameter set of the
//! corresponding panel, writes one CSV data file (the contract) and a static
//! SVG rendering (best effort).  Grid densities and parameter lists can be
//! overridden with `--set key=value`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use membec::config::SolverSettings;
use membec::gpe::{self, Grid, ImagOpts};
use membec::linres::{self, BranchLabel, ModeSet};
use membec::observables;
use membec::variational;
use membec::{Error, ModelParams, Result};

use crate::csvio::{fmt_float, CsvDoc};
use crate::plot;
use crate::sweep::{linspace, run_sweep, Axis, Route, SweepSpec};

pub const FIGURE_NAMES: [&str; 13] = [
    "fig1a",
    "fig1b",
    "fig1b-inset",
    "fig1c",
    "fig2a",
    "fig2b",
    "fig2c",
    "fig3",
    "fig4a",
    "fig4b",
    "fig4c",
    "figS1",
    "figSint",
];

#[derive(Debug, Clone)]
pub struct FigureCtx {
    pub out_dir: PathBuf,
    pub workers: usize,
    /// Also compute the GPE route where the paper shows dashed curves.
    pub include_gpe: bool,
    pub base: ModelParams,
    pub solver: SolverSettings,
    pub overrides: BTreeMap<String, String>,
}

impl FigureCtx {
    fn count(&self, key: &str, default: usize) -> Result<usize> {
        match self.overrides.get(key) {
            Some(v) => membec::config::parse_count(key, v),
            None => Ok(default),
        }
    }

    fn float(&self, key: &str, default: f64) -> Result<f64> {
        match self.overrides.get(key) {
            Some(v) => membec::config::parse_float(key, v),
            None => Ok(default),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.overrides.get(key) {
            Some(v) => v
                .split(',')
                .map(|x| membec::config::parse_float(key, x.trim()))
                .collect(),
            None => Ok(default.to_vec()),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

pub fn run_figure(name: &str, ctx: &FigureCtx) -> Result<Vec<PathBuf>> {
    match name {
        "fig1a" => fig1a(ctx),
        "fig1b" => fig1b_family(ctx, Panel::OrderParameter),
        "fig1b-inset" => fig1b_family(ctx, Panel::Collapse),
        "fig1c" => fig1b_family(ctx, Panel::Width),
        "fig2a" => fig2a(ctx),
        "fig2b" => mode_figure(ctx, "fig2b", ModePanel::Frequencies),
        "fig2c" => mode_figure(ctx, "fig2c", ModePanel::DecayRates),
        "fig3" => fig3(ctx),
        "fig4a" => fig4a(ctx),
        "fig4b" => fig4b(ctx),
        "fig4c" => fig4c(ctx),
        "figS1" => fig_s1(ctx),
        "figSint" => fig_s_int(ctx),
        other => Err(Error::Config(format!(
            "unknown figure `{other}` (valid names: {})",
            FIGURE_NAMES.join(", ")
        ))),
    }
}

fn write_docs(doc: &CsvDoc, csv: &Path) -> Result<Vec<PathBuf>> {
    doc.write(csv)?;
    Ok(vec![csv.to_path_buf()])
}

fn fig1a(ctx: &FigureCtx) -> Result<Vec<PathBuf>> {
    let p = ctx.base;
    let n_s = ctx.count("s_points", 81)?;
    let n_l = ctx.count("lambda_points", 76)?;
    let l_max = ctx.float("lambda_max", 150.0)?;
    let half = (n_s / 2) as f64;
    let s_grid: Vec<f64> = (0..n_s).map(|i| 0.98 * (i as f64 - half) / half).collect();
    let lambda_grid = linspace(0.0, l_max, n_l);
    let surf = variational::energy_surface(&p, &s_grid, &lambda_grid)?;

    let mut doc = CsvDoc::new("fig1a");
    doc.model_meta(&p);
    doc.meta("figure", "fig1a");
    doc.columns = ["Lambda", "S", "epsilon", "S0"].iter().map(|s| s.to_string()).collect();
    for (i, &lambda) in surf.lambda_values.iter().enumerate() {
        for (j, &s) in surf.s_values.iter().enumerate() {
            doc.rows.push(vec![
                fmt_float(lambda),
                fmt_float(s),
                fmt_float(surf.epsilon[(i, j)]),
                fmt_float(surf.minima[i]),
            ]);
        }
    }
    let csv = ctx.path("fig1a.csv");
    let mut out = write_docs(&doc, &csv)?;

    let values: Vec<Vec<f64>> = (0..surf.lambda_values.len())
        .map(|i| (0..surf.s_values.len()).map(|j| surf.epsilon[(i, j)]).collect())
        .collect();
    let svg = ctx.path("fig1a.svg");
    plot::heatmap(
        &svg,
        "normalized energy surface",
        "S",
        "Lambda [w_R]",
        &surf.s_values,
        &surf.lambda_values,
        &values,
    )?;
    out.push(svg);
    Ok(out)
}

enum Panel {
    OrderParameter,
    Width,
    Collapse,
}

fn fig1b_family(ctx: &FigureCtx, panel: Panel) -> Result<Vec<PathBuf>> {
    let v_list = ctx.list("v_list", &[20.0, 100.0, 200.0])?;
    let n_l = ctx.count("lambda_points", 41)?;
    let name = match panel {
        Panel::OrderParameter => "fig1b",
        Panel::Width => "fig1c",
        Panel::Collapse => "fig1b-inset",
    };

    let mut doc = CsvDoc::new(name);
    doc.model_meta(&ctx.base);
    doc.meta("figure", name);
    doc.meta("v_list", v_list.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
    let axis_col = match panel {
        Panel::Collapse => "Lambda_over_Lambda_c",
        _ => "Lambda",
    };
    doc.columns = vec![
        "V".into(),
        axis_col.into(),
        "route".into(),
        "S0".into(),
        "sigma0".into(),
    ];

    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for &v in &v_list {
        let base = ctx.base.with_lattice_depth(v);
        let lc = variational::critical_coupling(&base)?;
        let mut solver = ctx.solver;
        solver.seed_offset = solver.seed_offset.max(0.05);
        let routes = if ctx.include_gpe {
            vec![Route::Variational, Route::Gpe]
        } else {
            vec![Route::Variational]
        };
        let spec = SweepSpec {
            axis: Axis::Lambda,
            grid: linspace(0.0, 2.0 * lc, n_l),
            base,
            routes,
            observables: vec!["S0".into(), "sigma0".into()],
            refine: false,
            solver,
        };
        let ds = run_sweep(&spec, ctx.workers)?;
        for row in &ds.rows {
            let x = match panel {
                Panel::Collapse => row.axis_value / lc,
                _ => row.axis_value,
            };
            doc.rows.push(vec![
                fmt_float(v),
                fmt_float(x),
                row.route.tag().to_string(),
                row.values[0].map(fmt_float).unwrap_or_else(|| "NA".into()),
                row.values[1].map(fmt_float).unwrap_or_else(|| "NA".into()),
            ]);
        }
        for route in &spec.routes {
            let column = match panel {
                Panel::Width => "sigma0",
                _ => "S0",
            };
            let pts: Vec<(f64, f64)> = ds
                .series(*route, column)
                .into_iter()
                .map(|(x, y)| match panel {
                    Panel::Collapse => (x / lc, y),
                    _ => (x, y),
                })
                .collect();
            series.push((format!("V={v} {}", route.tag()), pts));
        }
    }

    let csv = ctx.path(&format!("{name}.csv"));
    let mut out = write_docs(&doc, &csv)?;
    let svg = ctx.path(&format!("{name}.svg"));
    let (title, ylab) = match panel {
        Panel::OrderParameter => ("order parameter vs coupling", "S0"),
        Panel::Width => ("condensate width vs coupling", "sigma0"),
        Panel::Collapse => ("order-parameter collapse", "S0"),
    };
    plot::line_plot(&svg, title, axis_col, ylab, &series)?;
    out.push(svg);
    Ok(out)
}

fn fig2a(ctx: &FigureCtx) -> Result<Vec<PathBuf>> {
    // Ground-state entanglement is an undamped quantity.
    let base = ctx.base.with_gamma(0.0);
    let lc = variational::critical_coupling(&base)?;
    let n_below = ctx.count("points_below", 80)?;
    let n_above = ctx.count("points_above", 50)?;
    let l_max = ctx.float("lambda_max", 150.0)?;
    let mut grid = linspace(0.0, 0.998 * lc, n_below);
    grid.extend(linspace(1.002 * lc, l_max, n_above));

    let spec = SweepSpec {
        axis: Axis::Lambda,
        grid,
        base,
        routes: vec![Route::Variational],
        observables: vec!["E_N_md".into(), "E_N_mw".into()],
        refine: false,
        solver: ctx.solver,
    };
    let ds = run_sweep(&spec, ctx.workers)?;
    let mut doc = ds.to_csv_doc();
    doc.kind = "fig2a".into();
    doc.meta("figure", "fig2a");
    let csv = ctx.path("fig2a.csv");
    let mut out = write_docs(&doc, &csv)?;

    let svg = ctx.path("fig2a.svg");
    plot::line_plot(
        &svg,
        "logarithmic negativity (gamma = 0)",
        "Lambda [w_R]",
        "E_N",
        &[
            ("membrane-displacement".into(), ds.series(Route::Variational, "E_N_md")),
            ("membrane-width".into(), ds.series(Route::Variational, "E_N_mw")),
        ],
    )?;
    out.push(svg);
    Ok(out)
}

/// Long-format collective-mode dataset `(Lambda, branch, omega, gamma)` of
/// the variational route, with branch labels from eigenvector tracking.
pub fn mode_sweep_rows(
    base: &ModelParams,
    lambdas: &[f64],
    workers: usize,
) -> Result<Vec<(f64, BranchLabel, f64, f64)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let computed: Vec<Result<(ModeSet, [f64; 3])>> = pool.install(|| {
        use rayon::prelude::*;
        lambdas
            .par_iter()
            .map(|&l| {
                let p = base.with_lambda(l);
                let ss = variational::steady_state(&p, 1)?;
                let lr = linres::linearize(&p, &ss)?;
                let set = linres::eigenmodes(&linres::build_m(&lr, p.gamma))?;
                Ok((set, [p.omega_m, lr.omega_zeta, lr.omega_sigma]))
            })
            .collect()
    });
    let mut sets = Vec::with_capacity(lambdas.len());
    let mut seed = None;
    for c in computed {
        let (set, freqs) = c?;
        if seed.is_none() {
            seed = Some(freqs);
        }
        sets.push(set);
    }
    linres::track_modes(&mut sets, seed.expect("nonempty sweep"))?;

    let mut rows = Vec::new();
    for (&lambda, set) in lambdas.iter().zip(&sets) {
        for (nu, label) in set.eigenvalues.iter().zip(&set.labels) {
            if nu.im < 0.0 {
                continue; // conjugate partner
            }
            rows.push((lambda, *label, nu.im, -nu.re));
        }
    }
    Ok(rows)
}

fn label_tag(l: BranchLabel) -> &'static str {
    match l {
        BranchLabel::Membrane => "membrane",
        BranchLabel::Displacement => "displacement",
        BranchLabel::Width => "width",
    }
}

pub fn mode_rows_doc(kind: &str, base: &ModelParams, rows: &[(f64, BranchLabel, f64, f64)]) -> CsvDoc {
    let mut doc = CsvDoc::new(kind);
    doc.model_meta(base);
    doc.columns = ["Lambda", "branch", "omega", "gamma"].iter().map(|s| s.to_string()).collect();
    for &(l, label, omega, gamma) in rows {
        doc.rows.push(vec![
            fmt_float(l),
            label_tag(label).to_string(),
            fmt_float(omega),
            fmt_float(gamma),
        ]);
    }
    doc
}

enum ModePanel {
    Frequencies,
    DecayRates,
}

fn mode_lambda_grid(ctx: &FigureCtx, base: &ModelParams) -> Result<Vec<f64>> {
    let l_max = ctx.float("lambda_max", 150.0)?;
    let n = ctx.count("lambda_points", 151)?;
    let mut grid = linspace(0.0, l_max, n);
    // Resolve the overdamped window around the critical coupling.
    let lc = variational::critical_coupling(base)?;
    let mut x = lc - 0.3;
    while x <= lc + 0.3 {
        grid.push(x);
        x += 0.005;
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(grid)
}

fn mode_figure(ctx: &FigureCtx, name: &str, panel: ModePanel) -> Result<Vec<PathBuf>> {
    let base = ctx.base;
    let grid = mode_lambda_grid(ctx, &base)?;
    let rows = mode_sweep_rows(&base, &grid, ctx.workers)?;
    let mut doc = mode_rows_doc(name, &base, &rows);
    doc.meta("figure", name);
    let csv = ctx.path(&format!("{name}.csv"));
    let mut out = write_docs(&doc, &csv)?;

    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for label in [BranchLabel::Membrane, BranchLabel::Displacement, BranchLabel::Width] {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|(_, l, _, _)| *l == label)
            .map(|&(x, _, omega, gamma)| match panel {
                ModePanel::Frequencies => (x, omega),
                ModePanel::DecayRates => (x, gamma),
            })
            .collect();
        series.push((label_tag(label).to_string(), pts));
    }
    let svg = ctx.path(&format!("{name}.svg"));
    let (title, ylab) = match panel {
        ModePanel::Frequencies => ("collective excitation frequencies", "omega_k [w_R]"),
        ModePanel::DecayRates => ("collective decay rates", "gamma_k [w_R]"),
    };
    plot::line_plot(&svg, title, "Lambda [w_R]", ylab, &series)?;
    out.push(svg);
    Ok(out)
}

fn fig3(ctx: &FigureCtx) -> Result<Vec<PathBuf>> {
    let base = ctx.base;
    let lc = variational::critical_coupling(&base)?;
    let half_width = ctx.float("window", 0.3)?;
    let step = ctx.float("step", 0.002)?;
    let mut grid = Vec::new();
    let mut x = lc - half_width;
    while x <= lc + half_width + 1e-12 {
        grid.push(x);
        x += step;
    }
    let rows = mode_sweep_rows(&base, &grid, ctx.workers)?;
    let mut doc = mode_rows_doc("fig3", &base, &rows);
    doc.meta("figure", "fig3");
    doc.meta("Lambda_c", fmt_float(lc));
    let csv = ctx.path("fig3.csv");
    let mut out = write_docs(&doc, &csv)?;

    for (suffix, panel) in [("freq", ModePanel::Frequencies), ("decay", ModePanel::DecayRates)] {
        let mut series = Vec::new();
        for label in [BranchLabel::Membrane, BranchLabel::Displacement, BranchLabel::Width] {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|(_, l, _, _)| *l == label)
                .map(|&(x, _, omega, gamma)| match panel {
                    ModePanel::Frequencies => (x, omega),
                    ModePanel::DecayRates => (x, gamma),
                })
                .collect();
            series.push((label_tag(label).to_string(), pts));
        }
        let svg = ctx.path(&format!("fig3_{suffix}.svg"));
        plot::line_plot(&svg, "zoom around the critical coupling", "Lambda [w_R]", suffix, &series)?;
        out.push(svg);
    }
    Ok(out)
}

fn fig4a(ctx: &FigureCtx) -> Result<Vec<PathBuf>> {
    let base = ctx.base;
    let l_max = ctx.float("lambda_max", 150.0)?;
    let n = ctx.count("lambda_points", 301)?;
    let grid = linspace(0.0, l_max, n);
    let rows = mode_sweep_rows(&base, &grid, ctx.workers)?;
    let membrane: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(_, l, _, _)| *l == BranchLabel::Membrane)
        .map(|&(x, _, omega, _)| (x, omega))
        .collect();

    let mut doc = CsvDoc::new("fig4a");
    doc.model_meta(&base);
    doc.meta("figure", "fig4a");
    doc.columns = vec!["Lambda".into(), "omega_membrane".into()];
    for &(x, y) in &membrane {
        doc.rows.push(vec![fmt_float(x), fmt_float(y)]);
    }
    let csv = ctx.path("fig4a.csv");
    let mut out = write_docs(&doc, &csv)?;
    let svg = ctx.path("fig4a.svg");
    plot::line_plot(
        &svg,
        "membrane excitation frequency",
        "Lambda [w_R]",
        "omega [w_R]",
        &[("membrane".into(), membrane)],
    )?;
    out.push(svg);
    Ok(out)
}

fn fig4b(ctx: &FigureCtx) -> Result<Vec<PathBuf>> {
    let base = ctx.base;
    let l_max = ctx.float("lambda_max", 150.0)?;
    let n_l = ctx.count("lambda_points", 61)?;
    let n_k = ctx.count("k_points", 201)?;
    let lambdas = linspace(0.0, l_max, n_l);
    let ks = linspace(-10.0, 10.0, n_k);

    let mut doc = CsvDoc::new("fig4b");
    doc.model_meta(&base);
    doc.meta("figure", "fig4b");
    doc.columns = vec!["Lambda".into(), "k".into(), "abs_n".into()];
    let mut values = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let ss = variational::steady_state(&base.with_lambda(lambda), 1)?;
        let n = observables::momentum_distribution_gaussian(ss.sigma0, ss.zeta0, base.n_atoms, &ks)?;
        let mags = n.magnitudes();
        for (&k, &m) in ks.iter().zip(&mags) {
            doc.rows.push(vec![fmt_float(lambda), fmt_float(k), fmt_float(m)]);
        }
        values.push(mags);
    }
    let csv = ctx.path("fig4b.csv");
    let mut out = write_docs(&doc, &csv)?;
    let svg = ctx.path("fig4b.svg");
    plot::heatmap(&svg, "|n(k)|", "k", "Lambda [w_R]", &ks, &lambdas, &values)?;
    out.push(svg);
    Ok(out)
}

fn fig4c(ctx: &FigureCtx) -> Result<Vec<PathBuf>> {
    let base = ctx.base;
    let lc = variational::critical_coupling(&base)?;
    let n = ctx.count("lambda_points", 121)?;
    let spec = SweepSpec {
        axis: Axis::Lambda,
        grid: linspace(0.0, 2.0 * lc, n),
        base,
        routes: vec![Route::Variational],
        observables: vec!["fwhm".into()],
        refine: false,
        solver: ctx.solver,
    };
    let ds = run_sweep(&spec, ctx.workers)?;
    let mut doc = ds.to_csv_doc();
    doc.kind = "fig4c".into();
    doc.meta("figure", "fig4c");
    doc.meta("Lambda_c", fmt_float(lc));
    let csv = ctx.path("fig4c.csv");
    let mut out = write_docs(&doc, &csv)?;
    let svg = ctx.path("fig4c.svg");
    plot::line_plot(
        &svg,
        "momentum distribution width",
        "Lambda [w_R]",
        "FWHM of |n(k)|",
        &[("fwhm".into(), ds.series(Route::Variational, "fwhm"))],
    )?;
    out.push(svg);
    Ok(out)
}

fn fig_s1(ctx: &FigureCtx) -> Result<Vec<PathBuf>> {
    let lambda = ctx.float("lambda", 50.0)?;
    let m_sites = ctx.count("m_sites", 10)?.max(1);
    let n_k = ctx.count("k_points", 2001)?;
    let base = ctx.base.with_lambda(lambda);
    let ss = variational::steady_state(&base, 1)?;
    let ks = linspace(-10.0, 10.0, n_k);
    let n = observables::momentum_distribution_gaussian(ss.sigma0, ss.zeta0, base.n_atoms, &ks)?;
    let lat = observables::lattice_momentum_distribution(&n, ss.zeta0, m_sites);

    let mut doc = CsvDoc::new("figS1");
    doc.model_meta(&base);
    doc.meta("figure", "figS1");
    doc.meta("m_sites", m_sites.to_string());
    doc.columns = vec!["k".into(), "abs_n".into(), "abs_n_lat".into()];
    for ((k, a), b) in ks.iter().zip(n.magnitudes()).zip(lat.magnitudes()) {
        doc.rows.push(vec![fmt_float(*k), fmt_float(a), fmt_float(b)]);
    }
    let csv = ctx.path("figS1.csv");
    let mut out = write_docs(&doc, &csv)?;
    let svg = ctx.path("figS1.svg");
    plot::line_plot(
        &svg,
        "single-site and lattice momentum distributions",
        "k",
        "|n(k)|",
        &[
            ("single site".into(), ks.iter().copied().zip(n.magnitudes()).collect()),
            (format!("lattice M={m_sites}"), ks.iter().copied().zip(lat.magnitudes()).collect()),
        ],
    )?;
    out.push(svg);
    Ok(out)
}

fn fig_s_int(ctx: &FigureCtx) -> Result<Vec<PathBuf>> {
    let v_list = ctx.list("v_list", &[200.0, 20.0])?;
    let gn_list = ctx.list("gn_list", &[0.0, 5.0, 10.0])?;
    let n_l = ctx.count("lambda_points", 21)?;
    let grid_n = ctx.count("grid_points", ctx.solver.grid_points.min(128))?;

    let mut doc = CsvDoc::new("figSint");
    doc.model_meta(&ctx.base);
    doc.meta("figure", "figSint");
    doc.columns = vec!["V".into(), "gN".into(), "Lambda".into(), "S".into()];
    let mut series = Vec::new();
    for &v in &v_list {
        for &gn in &gn_list {
            let base = ctx.base.with_lattice_depth(v).with_g_n(gn);
            let lc = variational::critical_coupling(&base)?;
            let lambdas = linspace(0.0, 2.2 * lc, n_l);
            let grid = Grid::new(grid_n)?;
            let mut opts = ImagOpts::from(&ctx.solver);
            opts.psi_tol = opts.psi_tol.or(Some(1e-11));
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(ctx.workers.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
            let results: Vec<Result<f64>> = pool.install(|| {
                use rayon::prelude::*;
                lambdas
                    .par_iter()
                    .map(|&l| {
                        let p = base.with_lambda(l);
                        let gs = gpe::ground_state_with(&p, &grid, 0.05, &opts)?;
                        let (_, s) = observables::order_parameter_from_psi(&gs.psi);
                        Ok(s)
                    })
                    .collect()
            });
            let mut pts = Vec::new();
            for (&l, r) in lambdas.iter().zip(results) {
                let s = r?;
                doc.rows.push(vec![fmt_float(v), fmt_float(gn), fmt_float(l), fmt_float(s)]);
                pts.push((l, s));
            }
            series.push((format!("V={v} gN={gn}"), pts));
        }
    }
    let csv = ctx.path("figSint.csv");
    let mut out = write_docs(&doc, &csv)?;
    let svg = ctx.path("figSint.svg");
    plot::line_plot(&svg, "order parameter with interactions (GPE)", "Lambda [w_R]", "S", &series)?;
    out.push(svg);
    Ok(out)
}

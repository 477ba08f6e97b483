//! Parallel parameter sweeps over `(Lambda, V, gN, gamma)`.
//!
//! Each grid point is a pure function of the model parameters, so points run
//! independently on a worker pool; mode branches are labeled afterwards in a
//! sequential tracking pass.  Failed points become missing-value rows with a
//! reason code, and the assembled dataset is ordered by grid index, so the
//! output is identical for any worker count.

use std::collections::BTreeMap;

use membec::config::{parse_count, parse_float, ConfigFile, SolverSettings};
use membec::gpe::{self, Grid, ImagOpts};
use membec::linres::{self, BranchLabel, ModePair, ModeSet};
use membec::observables;
use membec::variational;
use membec::{Error, ModelParams, Result};

use crate::csvio::{fmt_float, CsvDoc, NA};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Lambda,
    LatticeDepth,
    Interaction,
    Damping,
}

impl Axis {
    pub fn key(&self) -> &'static str {
        match self {
            Axis::Lambda => "Lambda",
            Axis::LatticeDepth => "V",
            Axis::Interaction => "gN",
            Axis::Damping => "gamma",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "Lambda" => Ok(Axis::Lambda),
            "V" => Ok(Axis::LatticeDepth),
            "gN" => Ok(Axis::Interaction),
            "gamma" => Ok(Axis::Damping),
            other => Err(Error::Config(format!(
                "unknown sweep axis `{other}` (expected Lambda, V, gN or gamma)"
            ))),
        }
    }

    pub fn apply(&self, base: &ModelParams, value: f64) -> ModelParams {
        match self {
            Axis::Lambda => base.with_lambda(value),
            Axis::LatticeDepth => base.with_lattice_depth(value),
            Axis::Interaction => base.with_g_n(value),
            Axis::Damping => base.with_gamma(value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Variational,
    Gpe,
}

impl Route {
    pub fn tag(&self) -> &'static str {
        match self {
            Route::Variational => "variational",
            Route::Gpe => "gpe",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "variational" => Ok(Route::Variational),
            "gpe" => Ok(Route::Gpe),
            other => Err(Error::Config(format!(
                "unknown route `{other}` (expected variational or gpe)"
            ))),
        }
    }
}

/// Observables every route can serve, plus route-specific extras.
const OBSERVABLES_BOTH: [&str; 11] = [
    "S0",
    "sigma0",
    "alpha0",
    "energy",
    "fwhm",
    "omega_membrane",
    "omega_displacement",
    "omega_width",
    "gamma_membrane",
    "gamma_displacement_lo",
    "gamma_displacement_hi",
];
const OBSERVABLES_VARIATIONAL: [&str; 2] = ["E_N_md", "E_N_mw"];
const OBSERVABLES_GPE: [&str; 1] = ["mu"];

pub fn known_observables() -> Vec<&'static str> {
    let mut v = OBSERVABLES_BOTH.to_vec();
    v.extend(OBSERVABLES_VARIATIONAL);
    v.extend(OBSERVABLES_GPE);
    v
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub base: ModelParams,
    pub routes: Vec<Route>,
    pub observables: Vec<String>,
    /// Refine a window of width 0.2 around the detected critical coupling at
    /// ten times the base resolution (Lambda axis only).
    pub refine: bool,
    pub solver: SolverSettings,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.grid.len() < 2 {
            return Err(Error::Config("sweep grid needs at least 2 points".into()));
        }
        if !self.grid.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Config("sweep grid must be strictly increasing".into()));
        }
        if self.routes.is_empty() {
            return Err(Error::Config("no routes selected".into()));
        }
        if self.observables.is_empty() {
            return Err(Error::Config("no observables requested".into()));
        }
        for obs in &self.observables {
            let known = known_observables();
            if !known.contains(&obs.as_str()) {
                return Err(Error::Config(format!(
                    "unknown observable `{obs}` (known: {})",
                    known.join(", ")
                )));
            }
            for route in &self.routes {
                let ok = OBSERVABLES_BOTH.contains(&obs.as_str())
                    || match route {
                        Route::Variational => OBSERVABLES_VARIATIONAL.contains(&obs.as_str()),
                        Route::Gpe => OBSERVABLES_GPE.contains(&obs.as_str()),
                    };
                if !ok {
                    return Err(Error::Config(format!(
                        "observable `{obs}` is not resolvable by the {} route",
                        route.tag()
                    )));
                }
            }
        }
        let wants_entanglement = self.observables.iter().any(|o| o.starts_with("E_N"));
        if wants_entanglement && self.base.gamma != 0.0 {
            return Err(Error::Config(
                "entanglement observables are defined for the undamped ground state; set gamma = 0"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Build from the `[sweep]` config section.
    pub fn from_config(cfg: &ConfigFile, base: ModelParams, solver: SolverSettings) -> Result<Self> {
        let section = cfg
            .section("sweep")
            .ok_or_else(|| Error::Config("config has no [sweep] section".into()))?;
        let axis = Axis::parse(
            section
                .get("axis")
                .ok_or_else(|| Error::Config("[sweep] needs `axis`".into()))?,
        )?;
        let grid = if let Some(list) = section.get("values") {
            list.split(',')
                .map(|v| parse_float("values", v.trim()))
                .collect::<Result<Vec<_>>>()?
        } else {
            let start = parse_float(
                "start",
                section
                    .get("start")
                    .ok_or_else(|| Error::Config("[sweep] needs `start` or `values`".into()))?,
            )?;
            let stop = parse_float(
                "stop",
                section
                    .get("stop")
                    .ok_or_else(|| Error::Config("[sweep] needs `stop`".into()))?,
            )?;
            let count = parse_count(
                "count",
                section
                    .get("count")
                    .ok_or_else(|| Error::Config("[sweep] needs `count`".into()))?,
            )?;
            linspace(start, stop, count)
        };
        let routes = match section.get("routes") {
            Some(list) => list
                .split(',')
                .map(|r| Route::parse(r.trim()))
                .collect::<Result<Vec<_>>>()?,
            None => vec![Route::Variational],
        };
        let observables = section
            .get("observables")
            .map(|list| list.split(',').map(|s| s.trim().to_string()).collect())
            .unwrap_or_default();
        let refine = match section.get("refine") {
            Some(v) => v == "true" || v == "1",
            None => false,
        };
        Ok(SweepSpec {
            axis,
            grid,
            base,
            routes,
            observables,
            refine,
            solver,
        })
    }
}

pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![start];
    }
    (0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis_value: f64,
    pub route: Route,
    pub values: Vec<Option<f64>>,
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct SweepDataset {
    pub axis: Axis,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub meta: Vec<(String, String)>,
}

impl SweepDataset {
    pub fn has_missing(&self) -> bool {
        self.rows.iter().any(|r| r.status != "ok")
    }

    pub fn to_csv_doc(&self) -> CsvDoc {
        let mut doc = CsvDoc::new("sweep");
        doc.meta.clone_from(&self.meta);
        doc.columns = vec![self.axis.key().to_string(), "route".to_string()];
        doc.columns.extend(self.columns.iter().cloned());
        doc.columns.push("status".to_string());
        for row in &self.rows {
            let mut cells = vec![fmt_float(row.axis_value), row.route.tag().to_string()];
            for v in &row.values {
                cells.push(v.map(fmt_float).unwrap_or_else(|| NA.to_string()));
            }
            cells.push(row.status.clone());
            doc.rows.push(cells);
        }
        doc
    }

    /// Column values of one route, in grid order (missing cells skipped).
    pub fn series(&self, route: Route, column: &str) -> Vec<(f64, f64)> {
        let idx = match self.columns.iter().position(|c| c == column) {
            Some(i) => i,
            None => return Vec::new(),
        };
        self.rows
            .iter()
            .filter(|r| r.route == route)
            .filter_map(|r| r.values[idx].map(|v| (r.axis_value, v)))
            .collect()
    }
}

struct Needs {
    modes: bool,
    entanglement: bool,
    fwhm: bool,
}

impl Needs {
    fn from_observables(obs: &[String]) -> Self {
        Needs {
            modes: obs.iter().any(|o| o.starts_with("omega_") || o.starts_with("gamma_")),
            entanglement: obs.iter().any(|o| o.starts_with("E_N")),
            fwhm: obs.iter().any(|o| o == "fwhm"),
        }
    }
}

struct PointResult {
    values: BTreeMap<&'static str, f64>,
    modes: Option<ModeSet>,
    seed_freqs: Option<[f64; 3]>,
}

fn fwhm_from_sigma(sigma0: f64, n_atoms: f64) -> Result<f64> {
    let k = observables::default_k_grid();
    let n = observables::momentum_distribution_gaussian(sigma0, 0.0, n_atoms, &k)?;
    observables::distribution_width(&n)
}

fn eval_variational(p: &ModelParams, needs: &Needs) -> Result<PointResult> {
    let ss = variational::steady_state(p, 1)?;
    let mut values = BTreeMap::new();
    values.insert("S0", ss.s0);
    values.insert("sigma0", ss.sigma0);
    values.insert("alpha0", ss.alpha_prime0);
    values.insert(
        "energy",
        variational::energy(ss.alpha_prime0, ss.sigma0, ss.s0, p)?,
    );
    if needs.fwhm {
        values.insert("fwhm", fwhm_from_sigma(ss.sigma0, p.n_atoms)?);
    }
    let mut modes = None;
    let mut seed_freqs = None;
    if needs.modes || needs.entanglement {
        let lr = linres::linearize(p, &ss)?;
        seed_freqs = Some([p.omega_m, lr.omega_zeta, lr.omega_sigma]);
        if needs.modes {
            modes = Some(linres::eigenmodes(&linres::build_m(&lr, p.gamma))?);
        }
        if needs.entanglement {
            let c = linres::ground_state_covariance(&lr)?;
            values.insert("E_N_md", linres::log_negativity(&c, ModePair::MembraneDisplacement)?);
            values.insert("E_N_mw", linres::log_negativity(&c, ModePair::MembraneWidth)?);
        }
    }
    Ok(PointResult {
        values,
        modes,
        seed_freqs,
    })
}

fn eval_gpe(p: &ModelParams, needs: &Needs, solver: &SolverSettings) -> Result<PointResult> {
    let grid = Grid::new(solver.grid_points)?;
    let opts = ImagOpts::from(solver);
    let gs = gpe::ground_state_with(p, &grid, solver.seed_offset, &opts)?;
    let (_, s) = observables::order_parameter_from_psi(&gs.psi);
    let mut values = BTreeMap::new();
    values.insert("S0", s);
    values.insert("sigma0", gs.psi.width());
    values.insert("alpha0", gs.alpha.re);
    values.insert("energy", gs.energy);
    values.insert("mu", gs.mu);
    if needs.fwhm {
        let k = observables::default_k_grid();
        let n = observables::momentum_distribution_from_psi(&gs.psi, p.n_atoms, &k);
        values.insert("fwhm", observables::distribution_width(&n)?);
    }
    let mut modes = None;
    if needs.modes {
        let bdg = gpe::bdg_matrix(&gs.psi, gs.alpha, gs.mu, p)?;
        modes = Some(gpe::bdg_modes(&bdg)?);
    }
    Ok(PointResult {
        values,
        modes,
        seed_freqs: None,
    })
}

/// Frequency and decay-rate summary of one branch of a labeled mode set.
fn branch_summary(set: &ModeSet, label: BranchLabel) -> (Option<f64>, Option<f64>, Option<f64>) {
    let members: Vec<_> = set
        .eigenvalues
        .iter()
        .zip(&set.labels)
        .filter(|(_, l)| **l == label)
        .map(|(nu, _)| nu)
        .collect();
    if members.is_empty() {
        return (None, None, None);
    }
    let omega = members.iter().map(|nu| nu.im.abs()).fold(0.0f64, f64::max);
    let lo = members.iter().map(|nu| -nu.re).fold(f64::INFINITY, f64::min);
    let hi = members.iter().map(|nu| -nu.re).fold(f64::NEG_INFINITY, f64::max);
    (Some(omega), Some(lo), Some(hi))
}

/// For GPE mode sets: the lowest positive frequency of each labeled branch.
fn gpe_branch_summary(set: &ModeSet, label: BranchLabel) -> (Option<f64>, Option<f64>, Option<f64>) {
    let mut members: Vec<_> = set
        .eigenvalues
        .iter()
        .zip(&set.labels)
        .filter(|(nu, l)| **l == label && nu.im.abs() > 1e-6)
        .map(|(nu, _)| nu)
        .collect();
    members.sort_by(|a, b| a.im.abs().partial_cmp(&b.im.abs()).unwrap());
    match members.first() {
        Some(nu) => (Some(nu.im.abs()), Some(-nu.re), Some(-nu.re)),
        None => (None, None, None),
    }
}

/// Run every grid point of the sweep on `workers` threads.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepDataset> {
    spec.validate()?;
    let needs = Needs::from_observables(&spec.observables);

    let mut grid = spec.grid.clone();
    if spec.refine && spec.axis == Axis::Lambda {
        let lc = variational::critical_coupling(&spec.base)?;
        let mut steps: Vec<f64> = spec.grid.windows(2).map(|w| w[1] - w[0]).collect();
        steps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let base_step = steps[steps.len() / 2];
        let fine = base_step / 10.0;
        let mut x = lc - 0.1;
        while x <= lc + 0.1 + 1e-12 {
            if x > spec.grid[0] && x < spec.grid[spec.grid.len() - 1] {
                grid.push(x);
            }
            x += fine;
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * a.abs().max(1.0));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;

    // (grid index, route index) task list, evaluated in parallel.
    let mut tasks = Vec::new();
    for (gi, &v) in grid.iter().enumerate() {
        for (ri, route) in spec.routes.iter().enumerate() {
            tasks.push((gi, ri, v, *route));
        }
    }
    let results: Vec<(usize, usize, f64, Route, Result<PointResult>)> = pool.install(|| {
        use rayon::prelude::*;
        tasks
            .par_iter()
            .map(|&(gi, ri, v, route)| {
                let p = spec.axis.apply(&spec.base, v);
                let res = match route {
                    Route::Variational => eval_variational(&p, &needs),
                    Route::Gpe => eval_gpe(&p, &needs, &spec.solver),
                };
                (gi, ri, v, route, res)
            })
            .collect()
    });

    // Deterministic order regardless of scheduling.
    let mut results = results;
    results.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

    // Sequential branch-tracking pass over the variational mode sets.
    let mut var_sets: Vec<ModeSet> = Vec::new();
    let mut var_set_owner: Vec<usize> = Vec::new();
    let mut seed = None;
    if needs.modes {
        for (i, (_, _, _, route, res)) in results.iter().enumerate() {
            if *route != Route::Variational {
                continue;
            }
            if let Ok(point) = res {
                if let Some(ms) = &point.modes {
                    var_sets.push(ms.clone());
                    var_set_owner.push(i);
                    if seed.is_none() {
                        seed = point.seed_freqs;
                    }
                }
            }
        }
        if let Some(seed) = seed {
            linres::track_modes(&mut var_sets, seed)?;
        }
    }
    let mut tracked: BTreeMap<usize, ModeSet> = BTreeMap::new();
    for (set, owner) in var_sets.into_iter().zip(var_set_owner) {
        tracked.insert(owner, set);
    }

    let mut rows = Vec::new();
    for (i, (_, _, v, route, res)) in results.iter().enumerate() {
        match res {
            Ok(point) => {
                let mode_source = match route {
                    Route::Variational => tracked.get(&i),
                    Route::Gpe => point.modes.as_ref(),
                };
                let mut values = Vec::with_capacity(spec.observables.len());
                for obs in &spec.observables {
                    let v = match obs.as_str() {
                        "omega_membrane" | "gamma_membrane" | "omega_displacement"
                        | "gamma_displacement_lo" | "gamma_displacement_hi" | "omega_width" => {
                            mode_source.and_then(|set| {
                                let (label, which) = match obs.as_str() {
                                    "omega_membrane" => (BranchLabel::Membrane, 0),
                                    "gamma_membrane" => (BranchLabel::Membrane, 1),
                                    "omega_displacement" => (BranchLabel::Displacement, 0),
                                    "gamma_displacement_lo" => (BranchLabel::Displacement, 1),
                                    "gamma_displacement_hi" => (BranchLabel::Displacement, 2),
                                    _ => (BranchLabel::Width, 0),
                                };
                                let summary = match route {
                                    Route::Variational => branch_summary(set, label),
                                    Route::Gpe => gpe_branch_summary(set, label),
                                };
                                [summary.0, summary.1, summary.2][which]
                            })
                        }
                        name => point.values.get(name).copied(),
                    };
                    values.push(v);
                }
                rows.push(SweepRow {
                    axis_value: *v,
                    route: *route,
                    values,
                    status: "ok".into(),
                });
            }
            Err(e) => {
                rows.push(SweepRow {
                    axis_value: *v,
                    route: *route,
                    values: vec![None; spec.observables.len()],
                    status: format!("error: {e}").replace(',', ";"),
                });
            }
        }
    }

    let mut doc = CsvDoc::new("sweep");
    doc.model_meta(&spec.base).solver_meta(&spec.solver);
    doc.meta("axis", spec.axis.key());
    doc.meta("points", grid.len().to_string());
    doc.meta("routes", spec.routes.iter().map(|r| r.tag()).collect::<Vec<_>>().join("+"));
    doc.meta("refine", spec.refine.to_string());

    Ok(SweepDataset {
        axis: spec.axis,
        columns: spec.observables.clone(),
        rows,
        meta: doc.meta,
    })
}

//! Subcommand bodies: grid orchestration over the core library.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use tjent::analysis::{
    fit_exponential, fit_inverse_linear, freezing_metric, negativity_curve, pooled_fit, select_model, EntanglementCurve, FitModel,
    FitResult, Series,
};
use tjent::basis::ModelParams;
use tjent::eigensolver::SolverConfig;
use tjent::entanglement::{ggm, SplitPolicy};
use tjent::rvb::{enumerate_coverings, rvb_fidelity};

use crate::cache::{GroundStateCache, Solved};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::table::{Cell, Table};

const PROVENANCE: [&str; 8] = [
    "n_sites",
    "boundary",
    "n_electrons",
    "j_over_t",
    "density_term",
    "policy",
    "seed",
    "code_version",
];

/// One `(N_el, J/t)` grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub n_electrons: usize,
    pub j_over_t: f64,
}

pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub cache: GroundStateCache,
    pub solver: SolverConfig,
    pub policy: SplitPolicy,
}

impl Context {
    pub fn new(config: RunConfig, out_dir: PathBuf, cache: GroundStateCache) -> Self {
        let solver = config.solver.to_config();
        let policy = config.policy();
        Self {
            config,
            out_dir,
            cache,
            solver,
            policy,
        }
    }

    /// Grid in `(N_el, J/t)` order.
    pub fn points(&self) -> Vec<Point> {
        let js = &self.config.model.j_over_t;
        self.config
            .electrons()
            .into_iter()
            .flat_map(|e| js.iter().map(move |&j| Point { n_electrons: e, j_over_t: j }))
            .collect()
    }

    pub fn params(&self, p: Point) -> CliResult<ModelParams> {
        let m = &self.config.model;
        Ok(ModelParams::new(m.n_sites, p.n_electrons / 2, p.n_electrons / 2, p.j_over_t, self.config.boundary())?
            .with_density_term(m.density_term))
    }

    fn solve(&self, p: Point) -> CliResult<Solved> {
        self.cache.solve(&self.params(p)?, &self.solver)
    }

    fn provenance(&self, n_electrons: usize, j: Cell) -> Vec<Cell> {
        let m = &self.config.model;
        vec![
            m.n_sites.into(),
            self.config.boundary().to_string().into(),
            n_electrons.into(),
            j,
            m.density_term.into(),
            self.policy.to_string().into(),
            self.solver.seed.into(),
            tjent::VERSION.into(),
        ]
    }

    fn header(extra: &[&str]) -> Table {
        let cols: Vec<&str> = PROVENANCE.iter().copied().chain(extra.iter().copied()).collect();
        Table::new(&cols)
    }

    fn row(&self, p: Point, extra: Vec<Cell>) -> Vec<Cell> {
        let mut r = self.provenance(p.n_electrons, p.j_over_t.into());
        r.extend(extra);
        r
    }

    fn write(&self, table: &Table, stem: &str) -> CliResult<PathBuf> {
        let path = table.write(&self.out_dir, stem, self.config.io.format)?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    fn run<R: Send>(&self, job: impl Fn(Point) -> CliResult<R> + Sync) -> Vec<(Point, CliResult<R>)> {
        self.points().into_par_iter().map(|p| (p, job(p))).collect()
    }

    fn curves(&self) -> Vec<(Point, CliResult<EntanglementCurve<f64>>)> {
        self.run(|p| {
            let s = self.solve(p)?;
            Ok(negativity_curve(&self.params(p)?, &s.state, &s.basis)?)
        })
    }

    fn fit_range(&self, curve: &EntanglementCurve<f64>) -> (usize, usize) {
        self.config.analysis.fit_range.map_or(curve.full_range(), |[a, b]| (a, b))
    }
}

fn status<R>(r: &CliResult<R>) -> Cell {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => format!("error: {e}").into(),
    }
}

fn blanks(n: usize) -> Vec<Cell> {
    vec![Cell::Empty; n]
}

/// Turns per-point failures into the command's overall outcome.
fn settle<R>(results: &[(Point, CliResult<R>)]) -> CliResult<()> {
    let failed: Vec<&CliError> = results.iter().filter_map(|(_, r)| r.as_ref().err()).collect();
    if failed.is_empty() {
        return Ok(());
    }
    for e in &failed {
        log::error!("{e}");
    }
    let capacity = failed.iter().any(|e| matches!(e, CliError::Core(tjent::Error::Capacity { .. })));
    let config = failed.iter().all(|e| e.exit_code() == 2);
    if config && failed.len() == results.len() {
        return Err(CliError::field("model", failed[0].to_string()));
    }
    Err(CliError::PartialFailure {
        failed: failed.len(),
        total: results.len(),
        capacity,
    })
}

fn j_list(js: &[f64]) -> String {
    js.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn cmd_solve(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let results = ctx.run(|p| {
        let start = Instant::now();
        let s = ctx.solve(p)?;
        Ok((s, start.elapsed().as_secs_f64()))
    });
    let mut summary = Context::header(&["n_up", "n_dn", "dim", "energy", "residual_norm", "degenerate", "iterations", "status"]);
    let mut timing = Table::new(&["n_electrons", "j_over_t", "wall_seconds", "cache_hit"]);
    for (p, r) in &results {
        let extra = match r {
            Ok((s, _)) => vec![
                (p.n_electrons / 2).into(),
                (p.n_electrons / 2).into(),
                s.basis.dim().into(),
                s.state.energy.into(),
                s.state.residual_norm.into(),
                s.state.degenerate.into(),
                s.state.iterations.into(),
            ],
            Err(_) => blanks(7),
        };
        let mut extra = extra;
        extra.push(status(r));
        summary.push(ctx.row(*p, extra));
        if let Ok((s, secs)) = r {
            timing.push(vec![p.n_electrons.into(), p.j_over_t.into(), (*secs).into(), s.cache_hit.into()]);
        }
    }
    let hits = results.iter().filter(|(_, r)| matches!(r, Ok((s, _)) if s.cache_hit)).count();
    log::info!("{hits} of {} points served from cache", results.len());
    let paths = vec![ctx.write(&summary, "solve")?, ctx.write(&timing, "solve_timing")?];
    settle(&results)?;
    Ok(paths)
}

pub fn cmd_negativity(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let results = ctx.curves();
    let mut combined = Context::header(&["r", "value", "status"]);
    let mut paths = Vec::new();
    for (p, r) in &results {
        let mut table = Context::header(&["r", "value", "status"]);
        match r {
            Ok(curve) => {
                for &(dist, v) in &curve.points {
                    table.push(ctx.row(*p, vec![dist.into(), v.into(), "ok".into()]));
                }
            }
            Err(_) => table.push(ctx.row(*p, vec![Cell::Empty, Cell::Empty, status(r)])),
        }
        let stem = format!("negativity_N{}_Nel{}_J{}", ctx.config.model.n_sites, p.n_electrons, p.j_over_t);
        paths.push(ctx.write(&table, &stem)?);
        combined.extend(table);
    }
    paths.push(ctx.write(&combined, "negativity")?);
    settle(&results)?;
    Ok(paths)
}

fn fit_cells(fit: &Result<FitResult<f64>, tjent::Error>, selected: Option<FitModel>, inconclusive: bool) -> Vec<Cell> {
    match fit {
        Ok(f) => vec![
            f.params.0.into(),
            f.params.1.into(),
            f.rms_residual.into(),
            f.r_squared.into(),
            f.fit_range.0.into(),
            f.fit_range.1.into(),
            f.excluded.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ").into(),
            (selected == Some(f.model)).into(),
            inconclusive.into(),
            "ok".into(),
        ],
        Err(e) => {
            let mut v = blanks(9);
            v.push(format!("fit failed: {e}").into());
            v
        }
    }
}

pub fn cmd_fit(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let curves = ctx.curves();
    let mut fits = Context::header(&[
        "model",
        "param_1",
        "param_2",
        "rms_residual",
        "r_squared",
        "r_min",
        "r_max",
        "excluded_r",
        "selected",
        "inconclusive",
        "status",
    ]);
    let mut chosen: Vec<(usize, f64, FitResult<f64>)> = Vec::new();
    let mut results: Vec<(Point, CliResult<()>)> = Vec::new();
    for (p, r) in curves {
        let curve = match r {
            Ok(c) => c,
            Err(e) => {
                let mut extra = blanks(10);
                extra.push(format!("error: {e}").into());
                fits.push(ctx.row(p, extra));
                results.push((p, Err(e)));
                continue;
            }
        };
        let range = ctx.fit_range(&curve);
        let selection = select_model(&curve, range);
        let (selected, inconclusive) = match &selection {
            Ok(s) => (Some(s.best.model), s.inconclusive),
            Err(_) => (None, false),
        };
        for (model, fit) in [
            (FitModel::InverseLinear, fit_inverse_linear(&curve, range)),
            (FitModel::Exponential, fit_exponential(&curve, range)),
        ] {
            let mut extra = vec![model.to_string().into()];
            extra.extend(fit_cells(&fit, selected, inconclusive));
            fits.push(ctx.row(p, extra));
        }
        match selection {
            Ok(s) => {
                chosen.push((p.n_electrons, p.j_over_t, s.best));
                results.push((p, Ok(())));
            }
            Err(e) => results.push((p, Err(e.into()))),
        }
    }
    let mut pooled = Context::header(&["model", "n_curves", "mean_1", "mean_2", "spread_1", "spread_2"]);
    for e in ctx.config.electrons() {
        for model in [FitModel::InverseLinear, FitModel::Exponential] {
            let group: Vec<&(usize, f64, FitResult<f64>)> = chosen.iter().filter(|c| c.0 == e && c.2.model == model).collect();
            if group.is_empty() {
                continue;
            }
            let js: Vec<f64> = group.iter().map(|c| c.1).collect();
            let list: Vec<FitResult<f64>> = group.iter().map(|c| c.2.clone()).collect();
            let pf = pooled_fit(&list)?;
            let mut row = ctx.provenance(e, j_list(&js).into());
            row.extend([
                model.to_string().into(),
                pf.n_curves.into(),
                pf.mean.0.into(),
                pf.mean.1.into(),
                pf.spread.0.into(),
                pf.spread.1.into(),
            ]);
            pooled.push(row);
        }
    }
    let paths = vec![ctx.write(&fits, "fit")?, ctx.write(&pooled, "fit_pooled")?];
    settle(&results)?;
    Ok(paths)
}

pub fn cmd_freeze(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let curves = ctx.curves();
    let families = ctx
        .config
        .analysis
        .freeze_families
        .clone()
        .unwrap_or_else(|| vec![ctx.config.model.j_over_t.clone()]);
    let threshold = ctx.config.analysis.be_freeze_threshold;
    let mut table = Context::header(&["max_deviation", "worst_r", "threshold", "frozen", "status"]);
    for e in ctx.config.electrons() {
        for fam in &families {
            let mut series = Vec::new();
            let mut failure = None;
            for &j in fam {
                match curves.iter().find(|(p, _)| p.n_electrons == e && p.j_over_t == j) {
                    Some((_, Ok(c))) => series.push(Series::from_curve(format!("J/t={j}"), c)),
                    Some((_, Err(err))) => failure = Some(err.to_string()),
                    None => failure = Some(format!("J/t={j} is not on the grid")),
                }
            }
            let mut row = ctx.provenance(e, j_list(fam).into());
            match (failure, freezing_metric(&series, threshold)) {
                (None, Ok(rep)) => row.extend([
                    rep.max_deviation.into(),
                    (rep.worst_abscissa as usize).into(),
                    rep.threshold.into(),
                    rep.frozen.into(),
                    "ok".into(),
                ]),
                (Some(msg), _) => {
                    row.extend(blanks(4));
                    row.push(format!("error: {msg}").into());
                }
                (None, Err(err)) => {
                    row.extend(blanks(4));
                    row.push(format!("error: {err}").into());
                }
            }
            table.push(row);
        }
    }
    let path = ctx.write(&table, "freeze")?;
    settle(&curves)?;
    Ok(vec![path])
}

pub fn cmd_ggm(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let n = ctx.config.model.n_sites;
    let results = ctx.run(|p| {
        let s = ctx.solve(p)?;
        Ok((ggm(&s.state, &s.basis, ctx.policy)?, s.state.degenerate))
    });
    let mut table = Context::header(&["density", "ggm", "lambda_max", "argmax_sites", "n_splits", "degenerate", "status"]);
    for (p, r) in &results {
        let density = p.n_electrons as f64 / n as f64;
        let mut extra: Vec<Cell> = vec![density.into()];
        match r {
            Ok((g, deg)) => extra.extend([
                g.value.into(),
                g.lambda_max.into(),
                g.argmax_sites().iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ").into(),
                g.n_splits.into(),
                (*deg).into(),
            ]),
            Err(_) => extra.extend(blanks(5)),
        }
        extra.push(status(r));
        table.push(ctx.row(*p, extra));
    }

    // spread across J/t for each filling
    let threshold = ctx.config.analysis.ggm_freeze_threshold;
    let js = &ctx.config.model.j_over_t;
    let mut freeze = Context::header(&["density", "max_deviation", "threshold", "frozen", "in_freeze_window"]);
    for e in ctx.config.electrons() {
        let vals: Vec<f64> = results
            .iter()
            .filter(|(p, _)| p.n_electrons == e)
            .filter_map(|(_, r)| r.as_ref().ok().map(|(g, _)| g.value))
            .collect();
        if vals.len() != js.len() {
            continue;
        }
        let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let density = e as f64 / n as f64;
        let mut row = ctx.provenance(e, j_list(js).into());
        row.extend([
            density.into(),
            spread.into(),
            threshold.into(),
            (spread <= threshold).into(),
            (density <= ctx.config.analysis.ggm_freeze_max_density).into(),
        ]);
        freeze.push(row);
    }

    let mut peaks = Table::new(&["n_sites", "boundary", "j_over_t", "argmax_n_electrons", "argmax_density", "ggm", "policy", "seed", "code_version"]);
    for &j in js {
        let best = results
            .iter()
            .filter(|(p, _)| p.j_over_t == j)
            .filter_map(|(p, r)| r.as_ref().ok().map(|(g, _)| (p.n_electrons, g.value)))
            .fold(None, |acc: Option<(usize, f64)>, cur| match acc {
                Some(a) if a.1 >= cur.1 => Some(a),
                _ => Some(cur),
            });
        if let Some((e, g)) = best {
            peaks.push(vec![
                n.into(),
                ctx.config.boundary().to_string().into(),
                j.into(),
                e.into(),
                (e as f64 / n as f64).into(),
                g.into(),
                ctx.policy.to_string().into(),
                ctx.solver.seed.into(),
                tjent::VERSION.into(),
            ]);
        }
    }
    let paths = vec![ctx.write(&table, "ggm")?, ctx.write(&freeze, "ggm_freeze")?, ctx.write(&peaks, "ggm_peak")?];
    settle(&results)?;
    Ok(paths)
}

pub fn cmd_rvb(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    let n = ctx.config.model.n_sites;
    let results = ctx.run(|p| {
        let coverings = enumerate_coverings(n, p.n_electrons)?;
        let s = ctx.solve(p)?;
        let fid = rvb_fidelity(&s.state, &coverings, &s.basis)?;
        Ok((coverings, fid, s.state.degenerate))
    });
    let mut table = Context::header(&["n_coverings", "fidelity", "gram_rank", "gram_condition", "degenerate", "status"]);
    let mut weights = Context::header(&["covering", "dimers", "weight"]);
    for (p, r) in &results {
        let mut extra = match r {
            Ok((c, f, deg)) => vec![c.len().into(), f.fidelity.into(), f.gram_rank.into(), f.gram_condition.into(), (*deg).into()],
            Err(_) => blanks(5),
        };
        extra.push(status(r));
        table.push(ctx.row(*p, extra));
        if let Ok((coverings, f, _)) = r {
            for (k, (c, w)) in coverings.iter().zip(&f.weights).enumerate() {
                let dimers = c.dimers.iter().map(|(a, b)| format!("{a}-{b}")).collect::<Vec<_>>().join(" ");
                weights.push(ctx.row(*p, vec![k.into(), dimers.into(), (*w).into()]));
            }
        }
    }
    let paths = vec![ctx.write(&table, "rvb")?, ctx.write(&weights, "rvb_weights")?];
    settle(&results)?;
    Ok(paths)
}

/// Output directory from the command line, else from the config.
pub fn resolve_out_dir(cli: Option<&Path>, config: &RunConfig) -> PathBuf {
    cli.map_or_else(|| config.io.output_dir.clone(), Path::to_path_buf)
}

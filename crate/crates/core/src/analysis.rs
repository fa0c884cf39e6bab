//! Distance-resolved entanglement curves, decay-law fits, freezing metrics
//! and parameter scans.

use std::fmt;

use rayon::prelude::*;

use crate::basis::{Boundary, ModelParams, SectorBasis};
use crate::eigensolver::{global_ground, GroundState, SolverConfig};
use crate::entanglement::{ggm, log_negativity, two_site_rdm, SplitPolicy};
use crate::error::{Error, Result};
use crate::rvb::{enumerate_coverings, rvb_fidelity, RvbFidelityResult};
use crate::scalar::Scalar;

/// Points at or below this value (ebits) are dropped before fitting.
pub const FIT_FLOOR: f64 = 1e-12;

/// Two fits whose `R²` differ by less than this are called inconclusive.
pub const SELECTION_TIE: f64 = 1e-6;

pub const DEFAULT_BE_FREEZE_THRESHOLD: f64 = 1e-2;
pub const DEFAULT_GGM_FREEZE_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceConvention {
    /// `r = min(|i-j|, N-|i-j|)`, averaged over all translates.
    PeriodicMinimum,
    /// `r = |i-j|`, averaged over all pairs at that separation.
    Open,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveMeta {
    pub n_sites: usize,
    pub n_electrons: usize,
    pub j_over_t: f64,
    pub convention: DistanceConvention,
}

/// `ℰ` against lattice distance.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementCurve<T> {
    pub points: Vec<(usize, T)>,
    pub meta: CurveMeta,
}

impl<T: Scalar> EntanglementCurve<T> {
    pub fn from_points(points: Vec<(usize, T)>, meta: CurveMeta) -> Result<Self> {
        if points.windows(2).any(|w| w[0].0 >= w[1].0) || points.first().is_some_and(|p| p.0 == 0) {
            return Err(Error::InvalidInput("curve distances must be positive and strictly increasing".into()));
        }
        Ok(Self { points, meta })
    }

    pub fn max_distance(&self) -> usize {
        self.points.last().map_or(0, |p| p.0)
    }

    /// `[1, r_max]`, the default fit window.
    pub fn full_range(&self) -> (usize, usize) {
        (1, self.max_distance())
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            points: self.points.iter().map(|&(r, v)| (r, v * factor)).collect(),
            meta: self.meta.clone(),
        }
    }
}

/// Translation-averaged logarithmic negativity for every distance.
pub fn negativity_curve<T: Scalar>(params: &ModelParams, gs: &GroundState<T>, basis: &SectorBasis) -> Result<EntanglementCurve<T>> {
    let n = params.n_sites;
    let (convention, r_max) = match params.boundary {
        Boundary::Periodic => (DistanceConvention::PeriodicMinimum, n / 2),
        Boundary::Open => (DistanceConvention::Open, n - 1),
    };
    let mut points = Vec::with_capacity(r_max);
    for r in 1..=r_max {
        let pairs: Vec<(usize, usize)> = match params.boundary {
            Boundary::Periodic => (0..n).map(|k| (k, (k + r) % n)).collect(),
            Boundary::Open => (0..n - r).map(|k| (k, k + r)).collect(),
        };
        let values: Vec<T> = pairs
            .par_iter()
            .map(|&(a, b)| log_negativity(&two_site_rdm(gs, basis, a.min(b), a.max(b))?))
            .collect::<Result<_>>()?;
        let mean = values.iter().copied().sum::<T>() / T::from_usize_lossy(values.len());
        points.push((r, mean));
    }
    EntanglementCurve::from_points(
        points,
        CurveMeta {
            n_sites: n,
            n_electrons: params.n_electrons(),
            j_over_t: params.j_over_t,
            convention,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitModel {
    /// `ℰ = 1 / (A·r + B)`
    InverseLinear,
    /// `ℰ = C · exp(-r / ξ)`
    Exponential,
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitModel::InverseLinear => f.write_str("inverse_linear"),
            FitModel::Exponential => f.write_str("exponential"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub model: FitModel,
    /// `(A, B)` or `(C, ξ)`.
    pub params: (T, T),
    pub rms_residual: T,
    pub r_squared: T,
    pub fit_range: (usize, usize),
    /// Distances dropped for values below [`FIT_FLOOR`].
    pub excluded: Vec<usize>,
}

impl<T: Scalar> FitResult<T> {
    pub fn predict(&self, r: T) -> T {
        match self.model {
            FitModel::InverseLinear => T::one() / (self.params.0 * r + self.params.1),
            FitModel::Exponential => self.params.0 * (-r / self.params.1).exp(),
        }
    }
}

/// Ordinary least squares `y = slope·x + intercept`.
fn linear_fit<T: Scalar>(xs: &[T], ys: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn fit_points<T: Scalar>(curve: &EntanglementCurve<T>, range: (usize, usize)) -> Result<(Vec<(usize, T)>, Vec<usize>)> {
    let floor = T::c(FIT_FLOOR);
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for &(r, v) in curve.points.iter().filter(|p| p.0 >= range.0 && p.0 <= range.1) {
        if v > floor && v.is_finite() {
            kept.push((r, v));
        } else {
            excluded.push(r);
        }
    }
    if kept.len() < 3 {
        return Err(Error::FitFailed(format!(
            "only {} usable points in r ∈ [{}, {}]",
            kept.len(),
            range.0,
            range.1
        )));
    }
    Ok((kept, excluded))
}

fn goodness<T: Scalar>(points: &[(usize, T)], predict: impl Fn(T) -> T) -> (T, T) {
    let n = T::from_usize_lossy(points.len());
    let mean = points.iter().map(|p| p.1).sum::<T>() / n;
    let mut ss_res = T::zero();
    let mut ss_tot = T::zero();
    for &(r, v) in points {
        let e = v - predict(T::from_usize_lossy(r));
        ss_res += e * e;
        ss_tot += (v - mean) * (v - mean);
    }
    let rms = (ss_res / n).sqrt();
    let r2 = if ss_tot > T::zero() {
        T::one() - ss_res / ss_tot
    } else if ss_res <= T::epsilon() {
        T::one()
    } else {
        T::neg_infinity()
    };
    (rms, r2)
}

/// Fits `ℰ = 1/(A·r + B)` by least squares on `1/ℰ`; goodness of fit is
/// measured on `ℰ` itself.
pub fn fit_inverse_linear<T: Scalar>(curve: &EntanglementCurve<T>, range: (usize, usize)) -> Result<FitResult<T>> {
    let (points, excluded) = fit_points(curve, range)?;
    let xs: Vec<T> = points.iter().map(|p| T::from_usize_lossy(p.0)).collect();
    let ys: Vec<T> = points.iter().map(|p| T::one() / p.1).collect();
    let (a, b) = linear_fit(&xs, &ys);
    if xs.iter().any(|&x| a * x + b <= T::zero()) {
        return Err(Error::FitFailed("A·r + B is not positive over the fit range".into()));
    }
    let (rms, r2) = goodness(&points, |r| T::one() / (a * r + b));
    Ok(FitResult {
        model: FitModel::InverseLinear,
        params: (a, b),
        rms_residual: rms,
        r_squared: r2,
        fit_range: range,
        excluded,
    })
}

/// Fits `ℰ = C·exp(-r/ξ)` by least squares on `ln ℰ`.
pub fn fit_exponential<T: Scalar>(curve: &EntanglementCurve<T>, range: (usize, usize)) -> Result<FitResult<T>> {
    let (points, excluded) = fit_points(curve, range)?;
    let xs: Vec<T> = points.iter().map(|p| T::from_usize_lossy(p.0)).collect();
    let ys: Vec<T> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept) = linear_fit(&xs, &ys);
    if !(slope < T::zero()) {
        return Err(Error::FitFailed("curve does not decay; ξ would be non-positive".into()));
    }
    let c = intercept.exp();
    let xi = -T::one() / slope;
    let (rms, r2) = goodness(&points, |r| c * (-r / xi).exp());
    Ok(FitResult {
        model: FitModel::Exponential,
        params: (c, xi),
        rms_residual: rms,
        r_squared: r2,
        fit_range: range,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSelection<T> {
    pub best: FitResult<T>,
    pub other: Option<FitResult<T>>,
    /// `R²` of the two models within [`SELECTION_TIE`].
    pub inconclusive: bool,
}

/// Picks the decay law with the higher `R²` in the original space.
pub fn select_model<T: Scalar>(curve: &EntanglementCurve<T>, range: (usize, usize)) -> Result<ModelSelection<T>> {
    let inv = fit_inverse_linear(curve, range);
    let exp = fit_exponential(curve, range);
    match (inv, exp) {
        (Ok(a), Ok(b)) => {
            let inconclusive = (a.r_squared - b.r_squared).abs() < T::c(SELECTION_TIE);
            let (best, other) = if b.r_squared > a.r_squared { (b, a) } else { (a, b) };
            Ok(ModelSelection {
                best,
                other: Some(other),
                inconclusive,
            })
        }
        (Ok(a), Err(_)) | (Err(_), Ok(a)) => Ok(ModelSelection {
            best: a,
            other: None,
            inconclusive: false,
        }),
        (Err(e1), Err(e2)) => Err(Error::FitFailed(format!("both fits failed: {e1}; {e2}"))),
    }
}

/// Mean and population standard deviation of per-curve fit parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledFit<T> {
    pub model: FitModel,
    pub n_curves: usize,
    pub mean: (T, T),
    pub spread: (T, T),
}

pub fn pooled_fit<T: Scalar>(fits: &[FitResult<T>]) -> Result<PooledFit<T>> {
    let first = fits.first().ok_or_else(|| Error::FitFailed("no fits to pool".into()))?;
    if fits.iter().any(|f| f.model != first.model) {
        return Err(Error::FitFailed("cannot pool fits of different models".into()));
    }
    let n = T::from_usize_lossy(fits.len());
    let m0 = fits.iter().map(|f| f.params.0).sum::<T>() / n;
    let m1 = fits.iter().map(|f| f.params.1).sum::<T>() / n;
    let s0 = (fits.iter().map(|f| (f.params.0 - m0).powi(2)).sum::<T>() / n).sqrt();
    let s1 = (fits.iter().map(|f| (f.params.1 - m1).powi(2)).sum::<T>() / n).sqrt();
    Ok(PooledFit {
        model: first.model,
        n_curves: fits.len(),
        mean: (m0, m1),
        spread: (s0, s1),
    })
}

/// A labelled curve on a discrete abscissa grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    pub label: String,
    pub points: Vec<(f64, T)>,
}

impl<T: Scalar> Series<T> {
    pub fn from_curve(label: impl Into<String>, curve: &EntanglementCurve<T>) -> Self {
        Self {
            label: label.into(),
            points: curve.points.iter().map(|&(r, v)| (r as f64, v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreezeReport<T> {
    pub curves: Vec<String>,
    /// `sup_x (max - min)` across the curves.
    pub max_deviation: T,
    /// Abscissa where the deviation peaks.
    pub worst_abscissa: f64,
    pub threshold: T,
    pub frozen: bool,
}

pub fn freezing_metric<T: Scalar>(curves: &[Series<T>], threshold: T) -> Result<FreezeReport<T>> {
    if curves.len() < 2 {
        return Err(Error::InvalidInput("freezing needs at least two curves".into()));
    }
    let grid: Vec<f64> = curves[0].points.iter().map(|p| p.0).collect();
    for c in &curves[1..] {
        if c.points.len() != grid.len() || c.points.iter().zip(&grid).any(|(p, &x)| p.0 != x) {
            return Err(Error::InvalidInput(format!(
                "curve '{}' is not on the abscissa grid of '{}'",
                c.label, curves[0].label
            )));
        }
    }
    let mut worst = T::zero();
    let mut worst_x = grid.first().copied().unwrap_or(0.0);
    for (k, &x) in grid.iter().enumerate() {
        let vals = curves.iter().map(|c| c.points[k].1);
        let hi = vals.clone().fold(T::neg_infinity(), T::max);
        let lo = vals.fold(T::infinity(), T::min);
        if hi - lo > worst {
            worst = hi - lo;
            worst_x = x;
        }
    }
    Ok(FreezeReport {
        curves: curves.iter().map(|c| c.label.clone()).collect(),
        max_deviation: worst,
        worst_abscissa: worst_x,
        threshold,
        frozen: worst <= threshold,
    })
}

/// One grid point of a GGM scan.
#[derive(Debug, Clone, PartialEq)]
pub struct GgmScanRow<T> {
    pub n_electrons: usize,
    pub density: f64,
    pub j_over_t: f64,
    pub ggm: T,
    pub lambda_max: T,
    pub argmax_split: u64,
    pub degenerate: bool,
}

/// GGM of the ground state on every `(N_el, J/t)` grid point. Rows come back
/// ordered by `N_el`, then `J/t`.
pub fn ggm_scan<T: Scalar>(
    n_sites: usize,
    boundary: Boundary,
    electrons: &[usize],
    j_grid: &[f64],
    policy: SplitPolicy,
    cfg: &SolverConfig,
) -> Result<Vec<GgmScanRow<T>>> {
    if let Some(&odd) = electrons.iter().find(|&&e| e % 2 != 0) {
        return Err(Error::InvalidInput(format!("GGM scans use even electron numbers, got {odd}")));
    }
    let jobs: Vec<(usize, f64)> = electrons.iter().flat_map(|&e| j_grid.iter().map(move |&j| (e, j))).collect();
    jobs.par_iter()
        .map(|&(n_el, j)| {
            let p = ModelParams::new(n_sites, n_el / 2, n_el / 2, j, boundary)?;
            let (basis, gs) = global_ground::<T>(&p, cfg)?;
            let g = ggm(&gs, &basis, policy)?;
            Ok(GgmScanRow {
                n_electrons: n_el,
                density: n_el as f64 / n_sites as f64,
                j_over_t: j,
                ggm: g.value,
                lambda_max: g.lambda_max,
                argmax_split: g.argmax_split,
                degenerate: gs.degenerate,
            })
        })
        .collect()
}

/// Spread of `G` across `J/t` for each electron number, ascending in `N_el`.
pub fn ggm_column_deviations<T: Scalar>(rows: &[GgmScanRow<T>]) -> Vec<(usize, f64, T)> {
    let mut electrons: Vec<usize> = rows.iter().map(|r| r.n_electrons).collect();
    electrons.sort_unstable();
    electrons.dedup();
    electrons
        .into_iter()
        .map(|e| {
            let col = rows.iter().filter(|r| r.n_electrons == e);
            let hi = col.clone().map(|r| r.ggm).fold(T::neg_infinity(), T::max);
            let lo = col.clone().map(|r| r.ggm).fold(T::infinity(), T::min);
            let density = col.clone().next().map_or(0.0, |r| r.density);
            (e, density, hi - lo)
        })
        .collect()
}

/// GGM against density, one series per `J/t`, restricted to `density ≤ max_density`.
pub fn ggm_series<T: Scalar>(rows: &[GgmScanRow<T>], max_density: f64) -> Vec<Series<T>> {
    let mut js: Vec<f64> = rows.iter().map(|r| r.j_over_t).collect();
    js.sort_by(|a, b| a.partial_cmp(b).unwrap());
    js.dedup();
    js.into_iter()
        .map(|j| {
            let mut pts: Vec<(f64, T)> = rows
                .iter()
                .filter(|r| r.j_over_t == j && r.density <= max_density)
                .map(|r| (r.density, r.ggm))
                .collect();
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            Series {
                label: format!("J/t={j}"),
                points: pts,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityPoint<T> {
    pub j_over_t: f64,
    pub result: RvbFidelityResult<T>,
    pub degenerate: bool,
}

/// RVB-gas fidelity along a `J/t` grid in the `(N_el/2, N_el/2)` sector.
pub fn fidelity_scan<T: Scalar>(
    n_sites: usize,
    boundary: Boundary,
    n_electrons: usize,
    j_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<FidelityPoint<T>>> {
    let coverings = enumerate_coverings(n_sites, n_electrons)?;
    j_grid
        .par_iter()
        .map(|&j| {
            let p = ModelParams::new(n_sites, n_electrons / 2, n_electrons / 2, j, boundary)?;
            let (basis, gs) = global_ground::<T>(&p, cfg)?;
            Ok(FidelityPoint {
                j_over_t: j,
                result: rvb_fidelity(&gs, &coverings, &basis)?,
                degenerate: gs.degenerate,
            })
        })
        .collect()
}

/// Midpoint of the grid interval with the largest forward slope.
pub fn steepest_increase<T: Scalar>(points: &[(f64, T)]) -> Option<f64> {
    points
        .windows(2)
        .map(|w| ((w[0].0 + w[1].0) / 2.0, (w[1].1 - w[0].1).to_f64_lossy() / (w[1].0 - w[0].0)))
        .fold(None, |best: Option<(f64, f64)>, cur| match best {
            Some(b) if b.1 >= cur.1 => Some(b),
            _ => Some(cur),
        })
        .map(|b| b.0)
}

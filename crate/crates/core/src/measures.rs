//! Tail dependence measures read off a limit-set boundary.
//!
//! Each measure is the maximum of a piecewise-smooth objective along the
//! boundary. The maxima sit at knots, at stationary points of a coordinate,
//! or where the boundary crosses the line on which the two arguments of a
//! `min` agree, so evaluating those candidates is exact.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{build_spline, BoundaryPoint, GaugeSpline};
use crate::sampler::PosteriorSample;

/// Slack on the cone constraint of `τ` for candidates not built on the line.
const CONE_SLACK: f64 = 1e-12;

/// `ω, δ ∈ {0.01, 0.02, …, 0.99}`.
pub fn default_grid() -> Vec<f64> {
    (1..100).map(|k| k as f64 / 100.0).collect()
}

/// `w ∈ {0, 0.01, …, 1}` for boundary curves.
pub fn angle_grid() -> Vec<f64> {
    (0..=100).map(|k| k as f64 / 100.0).collect()
}

fn candidates(spline: &GaugeSpline, cx: f64, cy: f64) -> impl Iterator<Item = BoundaryPoint> {
    spline
        .coordinate_extrema()
        .into_iter()
        .chain(spline.line_crossings(cx, cy))
}

/// `η = max over the boundary of min(q1, q2)`.
pub fn eta(spline: &GaugeSpline) -> f64 {
    candidates(spline, -1.0, 1.0)
        .map(|q| q.x.min(q.y))
        .fold(0.0, f64::max)
}

/// `λ(ω) = 1 / max over the boundary of min(q1 / ω, q2 / (1 - ω))`.
pub fn lambda(spline: &GaugeSpline, omega: f64) -> f64 {
    if omega <= 0.0 || omega >= 1.0 {
        return 1.0;
    }
    let scale = candidates(spline, -(1.0 - omega), omega)
        .map(|q| (q.x / omega).min(q.y / (1.0 - omega)))
        .fold(0.0, f64::max);
    1.0 / scale
}

/// `τ1(δ) = max{q1 : q on the boundary, q2 ≤ δ q1}`.
pub fn tau1(spline: &GaugeSpline, delta: f64) -> f64 {
    let on_line = spline
        .line_crossings(-delta, 1.0)
        .into_iter()
        .map(|q| q.x);
    let in_cone = spline
        .coordinate_extrema()
        .into_iter()
        .filter(|q| q.y <= delta * q.x + CONE_SLACK)
        .map(|q| q.x);
    on_line.chain(in_cone).fold(0.0, f64::max)
}

/// `τ2(δ) = max{q2 : q on the boundary, q1 ≤ δ q2}`.
pub fn tau2(spline: &GaugeSpline, delta: f64) -> f64 {
    let on_line = spline
        .line_crossings(1.0, -delta)
        .into_iter()
        .map(|q| q.y);
    let in_cone = spline
        .coordinate_extrema()
        .into_iter()
        .filter(|q| q.x <= delta * q.y + CONE_SLACK)
        .map(|q| q.y);
    on_line.chain(in_cone).fold(0.0, f64::max)
}

/// Measures of one boundary on fixed grids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceSummary {
    pub eta: f64,
    pub lambda: Vec<f64>,
    pub tau1: Vec<f64>,
    pub tau2: Vec<f64>,
    pub ad_indicator: bool,
}

pub fn dependence_summary(spline: &GaugeSpline, omega_grid: &[f64], delta_grid: &[f64]) -> DependenceSummary {
    DependenceSummary {
        eta: eta(spline),
        lambda: omega_grid.iter().map(|&o| lambda(spline, o)).collect(),
        tau1: delta_grid.iter().map(|&d| tau1(spline, d)).collect(),
        tau2: delta_grid.iter().map(|&d| tau2(spline, d)).collect(),
        ad_indicator: spline.touches_corner(),
    }
}

/// Lower central order statistic; `None` for an empty slice.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(sorted[(sorted.len() - 1) / 2])
}

/// Order statistic at (1-based) index `⌈q n⌉`, clamped to the sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

/// Posterior aggregates of the dependence measures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub n_draws: usize,
    pub eta_median: f64,
    pub eta_mean: f64,
    /// Equal-tailed 95% credible interval.
    pub eta_interval: (f64, f64),
    /// Fraction of draws whose boundary touches (1, 1).
    pub p_ad: f64,
    pub alpha_median: f64,
    pub omega_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub lambda_median: Vec<f64>,
    pub tau1_median: Vec<f64>,
    pub tau2_median: Vec<f64>,
    pub angle_grid: Vec<f64>,
    /// Pointwise median of the boundary's sum-norm radius per angle.
    pub radius_median: Vec<f64>,
}

/// Per-draw measures together with their aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMeasures {
    pub per_draw: Vec<DependenceSummary>,
    pub summary: PosteriorSummary,
}

fn pointwise_median(rows: &[&[f64]], len: usize) -> Vec<f64> {
    let mut column = Vec::with_capacity(rows.len());
    (0..len)
        .map(|j| {
            column.clear();
            column.extend(rows.iter().map(|r| r[j]));
            lower_median(&column).unwrap_or(f64::NAN)
        })
        .collect()
}

pub fn posterior_measures(
    sample: &PosteriorSample,
    omega_grid: &[f64],
    delta_grid: &[f64],
) -> Result<PosteriorMeasures> {
    if sample.draws.is_empty() {
        return Err(Error::Domain("posterior summary of an empty draw set".into()));
    }
    let angles = angle_grid();
    let evaluated: Vec<(DependenceSummary, Vec<f64>)> = sample
        .draws
        .par_iter()
        .map(|d| {
            let spline = build_spline(d.params)?;
            let radius = angles.iter().map(|&w| spline.boundary_radius(w)).collect();
            Ok((dependence_summary(&spline, omega_grid, delta_grid), radius))
        })
        .collect::<Result<_>>()?;
    let (per_draw, radii): (Vec<_>, Vec<_>) = evaluated.into_iter().unzip();

    let n = per_draw.len();
    let mut etas: Vec<f64> = per_draw.iter().map(|s| s.eta).collect();
    etas.sort_by(f64::total_cmp);
    let alphas: Vec<f64> = sample.draws.iter().map(|d| d.alpha).collect();
    let rows = |f: fn(&DependenceSummary) -> &[f64]| -> Vec<f64> {
        let v: Vec<&[f64]> = per_draw.iter().map(f).collect();
        pointwise_median(&v, v[0].len())
    };
    let radius_rows: Vec<&[f64]> = radii.iter().map(Vec::as_slice).collect();

    let summary = PosteriorSummary {
        n_draws: n,
        eta_median: etas[(n - 1) / 2],
        eta_mean: etas.iter().sum::<f64>() / n as f64,
        eta_interval: (quantile(&etas, 0.025), quantile(&etas, 0.975)),
        p_ad: per_draw.iter().filter(|s| s.ad_indicator).count() as f64 / n as f64,
        alpha_median: lower_median(&alphas).unwrap_or(f64::NAN),
        omega_grid: omega_grid.to_vec(),
        delta_grid: delta_grid.to_vec(),
        lambda_median: rows(|s| &s.lambda),
        tau1_median: rows(|s| &s.tau1),
        tau2_median: rows(|s| &s.tau2),
        radius_median: pointwise_median(&radius_rows, angles.len()),
        angle_grid: angles,
    };
    Ok(PosteriorMeasures { per_draw, summary })
}

/// Aggregates only; see [`posterior_measures`] for the per-draw values.
pub fn posterior_summary(
    sample: &PosteriorSample,
    omega_grid: &[f64],
    delta_grid: &[f64],
) -> Result<PosteriorSummary> {
    posterior_measures(sample, omega_grid, delta_grid).map(|m| m.summary)
}

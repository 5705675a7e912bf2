//! Margins, pseudo-polar coordinates, and threshold exceedances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::likelihood::Exceedances;

/// One observation in pseudo-polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarRecord {
    pub x1: f64,
    pub x2: f64,
    pub r: f64,
    pub w: f64,
    pub r0: f64,
    pub exceed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarSample {
    pub records: Vec<PolarRecord>,
    /// Nominal quantile level of the threshold, if one was applied.
    pub tau: Option<f64>,
    pub n_total: usize,
    pub n_exceed: usize,
}

impl PolarSample {
    /// The exceeding records, ready for the likelihood.
    pub fn exceedances(&self) -> Result<Exceedances> {
        Exceedances::new(
            self.records
                .iter()
                .filter(|rec| rec.exceed)
                .map(|rec| (rec.r, rec.w, rec.r0)),
        )
    }

    fn apply(&mut self, r0: impl Fn(&PolarRecord) -> f64) {
        for rec in &mut self.records {
            rec.r0 = r0(rec);
            rec.exceed = rec.r > rec.r0;
        }
        self.n_exceed = self.records.iter().filter(|rec| rec.exceed).count();
    }
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j share the average rank
        let rank = 0.5 * ((i + 1) + j) as f64;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Rank-transforms each margin to standard exponential with plotting
/// position `k / (n + 1)`.
pub fn to_exponential_margins(data: &[Point]) -> Result<Vec<Point>> {
    let n = data.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "rank transform needs at least 2 observations, got {n}"
        )));
    }
    if data.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::Domain("rank transform needs finite observations".into()));
    }
    let to_exp = |values: Vec<f64>| -> Vec<f64> {
        average_ranks(&values)
            .into_iter()
            .map(|k| -(-k / (n as f64 + 1.0)).ln_1p())
            .collect()
    };
    let x1 = to_exp(data.iter().map(|p| p.x).collect());
    let x2 = to_exp(data.iter().map(|p| p.y).collect());
    Ok(x1.into_iter().zip(x2).map(|(a, b)| Point::new(a, b)).collect())
}

/// `R = X1 + X2`, `W = X1 / R`, without a threshold.
pub fn to_pseudo_polar(points: &[Point]) -> Result<PolarSample> {
    let records = points
        .iter()
        .map(|p| {
            if !(p.x >= 0.0 && p.y >= 0.0 && p.x.is_finite() && p.y.is_finite()) {
                return Err(Error::Domain(format!(
                    "pseudo-polar transform needs finite nonnegative coordinates, got ({}, {})",
                    p.x, p.y
                )));
            }
            let r = p.x + p.y;
            if r == 0.0 {
                return Err(Error::Domain("pseudo-polar transform of the origin".into()));
            }
            Ok(PolarRecord {
                x1: p.x,
                x2: p.y,
                r,
                w: p.x / r,
                r0: f64::INFINITY,
                exceed: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PolarSample {
        n_total: records.len(),
        records,
        tau: None,
        n_exceed: 0,
    })
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("quantile level must lie in (0, 1), got {tau}")))
    }
}

/// Empirical quantile as the order statistic at (1-based) index `⌈τ n⌉`.
pub fn empirical_quantile(values: &[f64], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if values.is_empty() {
        return Err(Error::Domain("quantile of an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((tau * values.len() as f64).ceil() as usize).clamp(1, values.len());
    Ok(sorted[k - 1])
}

/// Radial threshold implied by one marginal quantile per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalThreshold {
    pub q1: f64,
    pub q2: f64,
}

impl MarginalThreshold {
    pub fn from_points(points: &[Point], tau: f64) -> Result<MarginalThreshold> {
        let x1: Vec<f64> = points.iter().map(|p| p.x).collect();
        let x2: Vec<f64> = points.iter().map(|p| p.y).collect();
        for (name, values) in [("X1", &x1), ("X2", &x2)] {
            if values.windows(2).all(|w| w[0] == w[1]) {
                return Err(Error::Domain(format!("margin {name} is degenerate")));
            }
        }
        Ok(MarginalThreshold {
            q1: empirical_quantile(&x1, tau)?,
            q2: empirical_quantile(&x2, tau)?,
        })
    }

    /// Angle at which the two branches meet.
    pub fn breakpoint(&self) -> f64 {
        self.q1 / (self.q1 + self.q2)
    }

    pub fn r0(&self, w: f64) -> f64 {
        if w <= self.breakpoint() {
            self.q2 / (1.0 - w)
        } else {
            self.q1 / w
        }
    }
}

/// Threshold at the `tau` marginal quantiles; a point exceeds when it is
/// above the quantile in at least one margin.
pub fn marginal_threshold(points: &[Point], tau: f64) -> Result<(PolarSample, MarginalThreshold)> {
    check_tau(tau)?;
    let threshold = MarginalThreshold::from_points(points, tau)?;
    let mut sample = to_pseudo_polar(points)?;
    sample.tau = Some(tau);
    sample.apply(|rec| threshold.r0(rec.w));
    Ok((sample, threshold))
}

/// Threshold `C0 / g(w, 1 - w)` from a known gauge, with `C0` chosen so that
/// exactly `n_target` points exceed.
///
/// `C0` sits midway between the `n_target`-th and `(n_target + 1)`-th largest
/// values of `g(x)`, so the strict inequality `r > r0` selects exactly the
/// top `n_target` points when those values are distinct.
pub fn oracle_threshold(
    points: &[Point],
    tau: f64,
    gauge: impl Fn(Point) -> f64,
    n_target: usize,
) -> Result<(PolarSample, f64)> {
    check_tau(tau)?;
    let mut sample = to_pseudo_polar(points)?;
    let n = sample.records.len();
    if n_target < 1 || n_target > n {
        return Err(Error::Domain(format!(
            "oracle threshold target {n_target} outside 1..={n}"
        )));
    }
    let unit_gauge: Vec<f64> = sample
        .records
        .iter()
        .map(|rec| gauge(Point::new(rec.w, 1.0 - rec.w)))
        .collect();
    if unit_gauge.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::Domain("oracle gauge must be positive and finite".into()));
    }
    let mut scores: Vec<f64> = sample
        .records
        .iter()
        .zip(&unit_gauge)
        .map(|(rec, g)| rec.r * g)
        .collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    let c0 = if n_target == n {
        0.5 * scores[n - 1]
    } else {
        0.5 * (scores[n_target - 1] + scores[n_target])
    };
    sample.tau = Some(tau);
    for (rec, g) in sample.records.iter_mut().zip(&unit_gauge) {
        rec.r0 = c0 / g;
        rec.exceed = rec.r > rec.r0;
    }
    sample.n_exceed = sample.records.iter().filter(|rec| rec.exceed).count();
    Ok((sample, c0))
}

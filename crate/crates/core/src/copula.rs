//! The four study copulas in standard exponential margins, with their
//! closed-form gauges and dependence measures.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
    Logistic,
    InvertedLogistic,
    AsymmetricLogistic,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Gaussian,
        Family::Logistic,
        Family::InvertedLogistic,
        Family::AsymmetricLogistic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Logistic => "logistic",
            Family::InvertedLogistic => "inverted-logistic",
            Family::AsymmetricLogistic => "asymmetric-logistic",
        }
    }

    /// Whether the family is asymptotically dependent.
    pub fn is_ad(self) -> bool {
        matches!(self, Family::Logistic | Family::AsymmetricLogistic)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown copula family '{s}'")))
    }
}

pub const DEFAULT_ASYMMETRY: (f64, f64) = (0.5, 0.5);

/// A copula family with its dependence parameter: `ρ ∈ [0, 1)` for the
/// Gaussian, `γ ∈ (0, 1)` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    pub family: Family,
    pub dependence: f64,
    /// Asymmetry weights of the asymmetric logistic; ignored otherwise.
    #[serde(default = "default_asymmetry")]
    pub asymmetry: (f64, f64),
}

fn default_asymmetry() -> (f64, f64) {
    DEFAULT_ASYMMETRY
}

impl CopulaSpec {
    pub fn new(family: Family, dependence: f64) -> Result<CopulaSpec> {
        let spec = CopulaSpec {
            family,
            dependence,
            asymmetry: DEFAULT_ASYMMETRY,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_asymmetry(mut self, theta1: f64, theta2: f64) -> Result<CopulaSpec> {
        self.asymmetry = (theta1, theta2);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dependence;
        let ok = match self.family {
            Family::Gaussian => (0.0..1.0).contains(&d),
            _ => d > 0.0 && d < 1.0,
        };
        if !ok {
            return Err(Error::InvalidSpec(format!(
                "dependence {d} outside the valid range for the {} copula",
                self.family
            )));
        }
        if self.family == Family::AsymmetricLogistic {
            let (a, b) = self.asymmetry;
            if !(a > 0.0 && a <= 1.0 && b > 0.0 && b <= 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "asymmetry weights ({a}, {b}) must lie in (0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Closed-form gauge function.
    pub fn gauge(&self, x: Point) -> f64 {
        let (x1, x2) = (x.x, x.y);
        let d = self.dependence;
        match self.family {
            Family::Gaussian => (x1 + x2 - 2.0 * d * (x1 * x2).sqrt()) / (1.0 - d * d),
            Family::Logistic | Family::AsymmetricLogistic => {
                x1.max(x2) / d + (1.0 - 1.0 / d) * x1.min(x2)
            }
            Family::InvertedLogistic => {
                (x1.powf(1.0 / d) + x2.powf(1.0 / d)).powf(d)
            }
        }
    }

    pub fn eta(&self) -> f64 {
        match self.family {
            Family::Gaussian => 0.5 * (1.0 + self.dependence),
            Family::Logistic | Family::AsymmetricLogistic => 1.0,
            Family::InvertedLogistic => 2f64.powf(-self.dependence),
        }
    }

    pub fn lambda(&self, omega: f64) -> f64 {
        let d = self.dependence;
        let upper = omega.max(1.0 - omega);
        match self.family {
            Family::Gaussian => {
                let t = omega.min(1.0 - omega) / upper;
                if t <= d * d {
                    upper
                } else {
                    (1.0 - 2.0 * d * (omega * (1.0 - omega)).sqrt()) / (1.0 - d * d)
                }
            }
            Family::Logistic | Family::AsymmetricLogistic => upper,
            Family::InvertedLogistic => {
                (omega.powf(1.0 / d) + (1.0 - omega).powf(1.0 / d)).powf(d)
            }
        }
    }

    /// `τ1(δ)`, equal to `τ2(δ)` for all four families.
    ///
    /// For the logistic this is `γ / (1 - δ + γδ)`, the value read off the
    /// piecewise-linear boundary `(1, 1) – (γ, 0)`.
    pub fn tau1(&self, delta: f64) -> f64 {
        let d = self.dependence;
        match self.family {
            Family::Gaussian => {
                if delta >= d * d {
                    1.0
                } else {
                    (1.0 - d * d) / (1.0 + delta - 2.0 * d * delta.sqrt())
                }
            }
            Family::Logistic => d / (1.0 - delta + d * delta),
            Family::InvertedLogistic | Family::AsymmetricLogistic => 1.0,
        }
    }
}

/// Evaluates the closed-form gauge; `x` must be nonnegative and not the origin.
pub fn analytic_gauge(spec: &CopulaSpec, x: Point) -> Result<f64> {
    if !(x.x >= 0.0 && x.y >= 0.0) || x.radius() == 0.0 {
        return Err(Error::Domain(format!(
            "analytic gauge needs a nonnegative non-origin point, got ({}, {})",
            x.x, x.y
        )));
    }
    Ok(spec.gauge(x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticMeasures {
    pub eta: f64,
    pub lambda: Vec<f64>,
    pub tau1: Vec<f64>,
}

pub fn analytic_measures(spec: &CopulaSpec, omega_grid: &[f64], delta_grid: &[f64]) -> AnalyticMeasures {
    AnalyticMeasures {
        eta: spec.eta(),
        lambda: omega_grid.iter().map(|&o| spec.lambda(o)).collect(),
        tau1: delta_grid.iter().map(|&d| spec.tau1(d)).collect(),
    }
}

/// Positive stable variable with Laplace transform `exp(-t^γ)` (Kanter's representation).
fn positive_stable<R: Rng + ?Sized>(rng: &mut R, gamma: f64) -> f64 {
    let u = PI * rng.random::<f64>();
    let e: f64 = rng.sample(Exp1);
    let a = (gamma * u).sin() / u.sin().powf(1.0 / gamma);
    let b = ((1.0 - gamma) * u).sin() / e;
    a * b.powf((1.0 - gamma) / gamma)
}

/// Logistic pair in unit Fréchet margins: `Z_i = (S / E_i)^γ`.
fn logistic_frechet<R: Rng + ?Sized>(rng: &mut R, gamma: f64) -> (f64, f64) {
    let s = positive_stable(rng, gamma);
    let e1: f64 = rng.sample(Exp1);
    let e2: f64 = rng.sample(Exp1);
    ((s / e1).powf(gamma), (s / e2).powf(gamma))
}

fn unit_frechet<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let e: f64 = rng.sample(Exp1);
    1.0 / e
}

/// Unit Fréchet to standard exponential: `-ln(1 - exp(-1/z))`.
#[inline]
fn frechet_to_exp(z: f64) -> f64 {
    -(-(-1.0 / z).exp_m1()).ln()
}

/// Standard normal to standard exponential: `-ln(1 - Φ(z)) = -ln Φ(-z)`.
#[inline]
fn normal_to_exp(z: f64) -> f64 {
    -(0.5 * libm::erfc(z * FRAC_1_SQRT_2)).ln()
}

/// Draws `n` points with standard exponential margins.
pub fn sample(spec: &CopulaSpec, n: usize, seed: u64) -> Result<Vec<Point>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.dependence;
    let draw = |rng: &mut ChaCha8Rng| -> Point {
        match spec.family {
            Family::Gaussian => {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let z2 = d * z1 + (1.0 - d * d).sqrt() * z2;
                Point::new(normal_to_exp(z1), normal_to_exp(z2))
            }
            Family::Logistic => {
                let (z1, z2) = logistic_frechet(rng, d);
                Point::new(frechet_to_exp(z1), frechet_to_exp(z2))
            }
            Family::InvertedLogistic => {
                // 1/Z is standard exponential; reflecting the uniforms inverts the tails.
                let (z1, z2) = logistic_frechet(rng, d);
                Point::new(1.0 / z1, 1.0 / z2)
            }
            Family::AsymmetricLogistic => {
                let (t1, t2) = spec.asymmetry;
                let (y1, y2) = logistic_frechet(rng, d);
                let f1 = unit_frechet(rng);
                let f2 = unit_frechet(rng);
                let z1 = (t1 * y1).max((1.0 - t1) * f1);
                let z2 = (t2 * y2).max((1.0 - t2) * f2);
                Point::new(frechet_to_exp(z1), frechet_to_exp(z2))
            }
        }
    };
    Ok((0..n).map(|_| draw(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: Family, d: f64) -> CopulaSpec {
        CopulaSpec::new(family, d).unwrap()
    }

    #[test]
    fn gauge_table_values() {
        let g = spec(Family::Gaussian, 0.5).gauge(Point::new(1.0, 1.0));
        assert!((g - 4.0 / 3.0).abs() < 1e-15);
        let g = spec(Family::Logistic, 0.5).gauge(Point::new(1.0, 0.5));
        assert!((g - 1.5).abs() < 1e-15);
        let g = spec(Family::InvertedLogistic, 0.5).gauge(Point::new(1.0, 1.0));
        assert!((g - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn measure_table_values() {
        let gauss = spec(Family::Gaussian, 0.5);
        assert_eq!(gauss.eta(), 0.75);
        assert!((gauss.lambda(0.5) - 2.0 / 3.0).abs() < 1e-15);
        assert!((gauss.eta() - 1.0 / (2.0 * gauss.lambda(0.5))).abs() < 1e-15);
        assert_eq!(spec(Family::Logistic, 0.3).lambda(0.4), 0.6);
        assert!((spec(Family::Logistic, 0.5).tau1(0.25) - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(spec(Family::Logistic, 0.5).tau1(1.0), 1.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(CopulaSpec::new(Family::Gaussian, 1.0).is_err());
        assert!(CopulaSpec::new(Family::Gaussian, 0.0).is_ok());
        assert!(CopulaSpec::new(Family::Logistic, 0.0).is_err());
        assert!(CopulaSpec::new(Family::InvertedLogistic, 1.0).is_err());
        assert!(spec(Family::AsymmetricLogistic, 0.5)
            .with_asymmetry(0.0, 0.5)
            .is_err());
        assert!(sample(&spec(Family::Logistic, 0.5), 0, 1).is_err());
    }

    #[test]
    fn family_round_trips_through_name() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("frank".parse::<Family>().is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = spec(Family::AsymmetricLogistic, 0.4);
        assert_eq!(sample(&s, 50, 9).unwrap(), sample(&s, 50, 9).unwrap());
        assert_ne!(sample(&s, 50, 9).unwrap(), sample(&s, 50, 10).unwrap());
    }
}

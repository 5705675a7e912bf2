//! Metropolis sampler over the spline coordinates and the Gamma shape.
//!
//! Priors are mixtures of a Uniform(0, 1) density and point masses at 0
//! and/or 1, so states live on a mixed space. Densities are taken with respect
//! to Lebesgue measure plus Dirac measure at the mass locations, which makes
//! jumps between a mass and the continuum ordinary Metropolis–Hastings moves:
//!
//! * from a continuous value, with probability `jump_probability` propose the
//!   nearest admissible mass, otherwise a Gaussian random walk;
//! * from a mass, with probability `jump_probability` propose a Uniform(0, 1)
//!   value, otherwise stay.
//!
//! The Gamma shape `α` moves by a random walk on `ln α`.
//!
//! Likelihood terms are cached per exceedance. A spline coordinate only moves
//! the segments it controls, and star-shapedness ties each segment to a fixed
//! angular range, so an update recomputes only the points whose angles fall
//! in that range.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_spline, validate, GaugeSpline, Param, SplineParams};
use crate::likelihood::{ln_gamma, Exceedances};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// Padding around affected angular ranges; covers the span padding used by
/// ray location on both sides of a knot.
const RANGE_PADDING: f64 = 4e-12;
const MAX_INIT_ATTEMPTS: usize = 10_000;
const TRACE_EVERY: usize = 100;

/// Number of updated quantities per sweep: `α` followed by the nine coordinates.
pub const N_BLOCKS: usize = 10;

/// Mixture of point masses at 0 and 1 with a Uniform(0, 1) remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixturePrior {
    pub mass_zero: f64,
    pub mass_one: f64,
}

impl MixturePrior {
    pub const UNIFORM: MixturePrior = MixturePrior {
        mass_zero: 0.0,
        mass_one: 0.0,
    };

    pub const fn new(mass_zero: f64, mass_one: f64) -> MixturePrior {
        MixturePrior {
            mass_zero,
            mass_one,
        }
    }

    pub fn continuous(&self) -> f64 {
        1.0 - self.mass_zero - self.mass_one
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorSpec {
    pub alpha_log_mean: f64,
    pub alpha_log_sd: f64,
    pub p02: MixturePrior,
    pub p11: MixturePrior,
    pub p12: MixturePrior,
    pub p21: MixturePrior,
    pub p42: MixturePrior,
    pub p51: MixturePrior,
    pub p52: MixturePrior,
    pub p61: MixturePrior,
    /// Mass of `p31 = 1`, available only when `max(p21, p42) = 1`.
    pub p31_mass_one: f64,
}

impl Default for PriorSpec {
    fn default() -> PriorSpec {
        PriorSpec {
            alpha_log_mean: 1.0,
            alpha_log_sd: 1.0,
            p02: MixturePrior::new(0.1, 0.0),
            p11: MixturePrior::new(0.1, 0.0),
            p12: MixturePrior::UNIFORM,
            p21: MixturePrior::new(0.1, 0.1),
            p42: MixturePrior::new(0.1, 0.1),
            p51: MixturePrior::UNIFORM,
            p52: MixturePrior::new(0.1, 0.0),
            p61: MixturePrior::new(0.1, 0.0),
            p31_mass_one: 0.4,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_log_sd > 0.0 && self.alpha_log_mean.is_finite()) {
            return Err(Error::Config("alpha prior needs a positive log-sd".into()));
        }
        for param in Param::ALL {
            let m = self.mixture(param, true);
            let weights = [m.mass_zero, m.mass_one, m.continuous()];
            if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(Error::Config(format!(
                    "prior weights for {} must lie in [0, 1] and sum to 1",
                    param.name()
                )));
            }
        }
        Ok(())
    }

    /// Mixture for one coordinate. `p31`'s mass at one exists only when
    /// `mass_available`; otherwise its prior is Uniform(0, 1).
    pub fn mixture(&self, param: Param, mass_available: bool) -> MixturePrior {
        match param {
            Param::P02 => self.p02,
            Param::P11 => self.p11,
            Param::P12 => self.p12,
            Param::P21 => self.p21,
            Param::P31 if mass_available => MixturePrior::new(0.0, self.p31_mass_one),
            Param::P31 => MixturePrior::UNIFORM,
            Param::P42 => self.p42,
            Param::P51 => self.p51,
            Param::P52 => self.p52,
            Param::P61 => self.p61,
        }
    }

    fn alpha_log_density(&self, alpha: f64) -> f64 {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let z = (alpha.ln() - self.alpha_log_mean) / self.alpha_log_sd;
        -alpha.ln() - self.alpha_log_sd.ln() - LN_SQRT_2PI - 0.5 * z * z
    }
}

fn p31_mass_available(params: &SplineParams) -> bool {
    params.p21.max(params.p42) == 1.0
}

fn mixture_log_density(m: MixturePrior, v: f64) -> f64 {
    let weight = if v == 0.0 && m.mass_zero > 0.0 {
        m.mass_zero
    } else if v == 1.0 && m.mass_one > 0.0 {
        m.mass_one
    } else if (0.0..=1.0).contains(&v) {
        m.continuous()
    } else {
        0.0
    };
    weight.ln()
}

/// Mixture priors of the coordinates and `α`, without the joint constraints.
fn log_prior_unconstrained(params: &SplineParams, alpha: f64, prior: &PriorSpec) -> f64 {
    let available = p31_mass_available(params);
    if params.p31 == 1.0 && !available {
        return f64::NEG_INFINITY;
    }
    let spline: f64 = Param::ALL
        .iter()
        .map(|&p| mixture_log_density(prior.mixture(p, available), params.get(p)))
        .sum();
    spline + prior.alpha_log_density(alpha)
}

/// Unnormalized log prior with respect to Lebesgue plus Dirac measure.
/// Returns `-∞` when any spline constraint fails.
pub fn log_prior(params: &SplineParams, alpha: f64, prior: &PriorSpec) -> f64 {
    if !validate(&params.control_points()).is_empty() {
        return f64::NEG_INFINITY;
    }
    log_prior_unconstrained(params, alpha, prior)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    /// Total iterations per chain, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub target_acceptance: f64,
    pub jump_probability: f64,
    /// Initial random-walk sd of each spline coordinate.
    pub initial_step: f64,
    /// Initial random-walk sd of `ln α`.
    pub initial_alpha_step: f64,
    /// Robbins–Monro gain `c` in `s ← s·exp(c·(a − target)/iter^0.6)`.
    pub adaptation_gain: f64,
    pub chains: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> ChainConfig {
        ChainConfig {
            iterations: 11_000,
            burn_in: 1_000,
            target_acceptance: 0.4,
            jump_probability: 0.2,
            initial_step: 0.05,
            initial_alpha_step: 0.1,
            adaptation_gain: 1.0,
            chains: 2,
            seed: 1,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::Config("target acceptance must lie in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.jump_probability) {
            return Err(Error::Config("jump probability must lie in [0, 1)".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_alpha_step > 0.0) {
            return Err(Error::Config("initial step sizes must be positive".into()));
        }
        if self.chains == 0 {
            return Err(Error::Config("at least one chain is required".into()));
        }
        Ok(())
    }
}

/// Derives an independent stream seed from a master seed and a stream index.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    // SplitMix64 finaliser over the combined input.
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Draw {
    pub chain: usize,
    pub iteration: usize,
    pub params: SplineParams,
    pub alpha: f64,
    pub log_posterior: f64,
}

/// Move counts for one updated quantity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MoveStats {
    pub walk_proposed: u64,
    pub walk_accepted: u64,
    pub jump_proposed: u64,
    pub jump_accepted: u64,
}

impl MoveStats {
    pub fn walk_rate(&self) -> Option<f64> {
        (self.walk_proposed > 0).then(|| self.walk_accepted as f64 / self.walk_proposed as f64)
    }

    pub fn jump_rate(&self) -> Option<f64> {
        (self.jump_proposed > 0).then(|| self.jump_accepted as f64 / self.jump_proposed as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainDiagnostics {
    pub chain: usize,
    /// Post-burn-in move counts, `α` first then the coordinates in order.
    pub moves: [MoveStats; N_BLOCKS],
    pub final_steps: [f64; N_BLOCKS],
    /// Step sizes every 100 burn-in iterations.
    pub step_trace: Vec<[f64; N_BLOCKS]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    /// Post-burn-in draws, chain by chain, in iteration order.
    pub draws: Vec<Draw>,
    pub diagnostics: Vec<ChainDiagnostics>,
}

impl PosteriorSample {
    pub fn chain_count(&self) -> usize {
        self.diagnostics.len()
    }

    /// Values of a per-draw statistic split by chain.
    pub fn by_chain(&self, stat: impl Fn(&Draw) -> f64) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.chain_count()];
        for d in &self.draws {
            out[d.chain].push(stat(d));
        }
        out
    }
}

/// Split-chain potential scale reduction factor.
pub fn split_rhat(chains: &[Vec<f64>]) -> Option<f64> {
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[c.len() - h..]]
        })
        .collect();
    let n = halves.first()?.len();
    if n < 2 || halves.iter().any(|h| h.len() != n) {
        return None;
    }
    let m = halves.len() as f64;
    let nf = n as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = nf / (m - 1.0) * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>();
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, mu)| h.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return (b == 0.0).then_some(1.0);
    }
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    Some((var_plus / w).sqrt())
}

/// What the chain targets.
#[derive(Clone, Copy)]
enum Target<'a> {
    Posterior(&'a Exceedances),
    /// Likelihood switched off; `constrained` keeps the spline validity indicator.
    Prior { constrained: bool },
}

/// Cached per-point likelihood terms.
struct PointCache<'a> {
    data: &'a Exceedances,
    gauge: Vec<f64>,
    term: Vec<f64>,
    scratch_gauge: Vec<f64>,
    scratch_term: Vec<f64>,
}

fn finite_or_neg_inf(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::NEG_INFINITY
    }
}

impl<'a> PointCache<'a> {
    fn new(data: &'a Exceedances, spline: &GaugeSpline, alpha: f64) -> PointCache<'a> {
        let lga = ln_gamma(alpha);
        let gauge: Vec<f64> = data.w().iter().map(|&w| spline.gauge_at_angle(w)).collect();
        let term = gauge
            .iter()
            .enumerate()
            .map(|(i, &g)| data.point_log_density(i, alpha, lga, g))
            .collect();
        PointCache {
            data,
            gauge,
            term,
            scratch_gauge: Vec::with_capacity(data.len()),
            scratch_term: Vec::with_capacity(data.len()),
        }
    }

    fn total(&self) -> f64 {
        finite_or_neg_inf(self.term.iter().sum())
    }

    /// Log-likelihood with `range` recomputed for a new spline; results stay in scratch.
    fn propose_spline(&mut self, spline: &GaugeSpline, alpha: f64, range: Range<usize>) -> f64 {
        let lga = ln_gamma(alpha);
        self.scratch_gauge.clear();
        self.scratch_term.clear();
        for i in range.clone() {
            let g = spline.gauge_at_angle(self.data.w()[i]);
            self.scratch_gauge.push(g);
            let t = self.data.point_log_density(i, alpha, lga, g);
            if t == f64::NEG_INFINITY || t.is_nan() {
                return f64::NEG_INFINITY;
            }
            self.scratch_term.push(t);
        }
        let total = self.term[..range.start].iter().sum::<f64>();
        let total = self.scratch_term.iter().fold(total, |acc, t| acc + t);
        let total = self.term[range.end..].iter().fold(total, |acc, t| acc + t);
        finite_or_neg_inf(total)
    }

    fn accept_spline(&mut self, range: Range<usize>) {
        self.gauge[range.clone()].copy_from_slice(&self.scratch_gauge);
        self.term[range].copy_from_slice(&self.scratch_term);
    }

    fn propose_alpha(&mut self, alpha: f64) -> f64 {
        let lga = ln_gamma(alpha);
        self.scratch_term.clear();
        for (i, &g) in self.gauge.iter().enumerate() {
            let t = self.data.point_log_density(i, alpha, lga, g);
            if t == f64::NEG_INFINITY || t.is_nan() {
                return f64::NEG_INFINITY;
            }
            self.scratch_term.push(t);
        }
        finite_or_neg_inf(self.scratch_term.iter().sum())
    }

    fn accept_alpha(&mut self) {
        std::mem::swap(&mut self.term, &mut self.scratch_term);
    }
}

struct Chain<'a> {
    prior: &'a PriorSpec,
    config: &'a ChainConfig,
    target: Target<'a>,
    rng: ChaCha8Rng,
    params: SplineParams,
    spline: Option<GaugeSpline>,
    alpha: f64,
    log_prior: f64,
    log_lik: f64,
    cache: Option<PointCache<'a>>,
    log_steps: [f64; N_BLOCKS],
}

/// Result of one proposal, used for adaptation and bookkeeping.
struct Outcome {
    accepted: bool,
    /// Acceptance probability of a random-walk move.
    walk_prob: Option<f64>,
    jump: bool,
}

impl<'a> Chain<'a> {
    fn new(
        target: Target<'a>,
        prior: &'a PriorSpec,
        config: &'a ChainConfig,
        seed: u64,
    ) -> Result<Chain<'a>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = 2.0;
        let mut params = SplineParams::from_array([0.5; 9]);
        let mut attempt = 0;
        loop {
            if let Some(chain) = Self::try_start(target, prior, config, params, alpha) {
                return Ok(Chain { rng, ..chain });
            }
            attempt += 1;
            if attempt >= MAX_INIT_ATTEMPTS {
                return Err(Error::Initialization(MAX_INIT_ATTEMPTS));
            }
            let spread = (attempt as f64 / 100.0).min(1.0);
            let mut v = [0.5; 9];
            for x in &mut v {
                *x = (0.5 + spread * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
            }
            params = SplineParams::from_array(v);
        }
    }

    fn try_start(
        target: Target<'a>,
        prior: &'a PriorSpec,
        config: &'a ChainConfig,
        params: SplineParams,
        alpha: f64,
    ) -> Option<Chain<'a>> {
        let constrained = !matches!(target, Target::Prior { constrained: false });
        let spline = if constrained {
            Some(build_spline(params).ok()?)
        } else {
            None
        };
        let log_prior = log_prior_unconstrained(&params, alpha, prior);
        let (cache, log_lik) = match target {
            Target::Posterior(data) => {
                let cache = PointCache::new(data, spline.as_ref()?, alpha);
                let ll = cache.total();
                (Some(cache), ll)
            }
            Target::Prior { .. } => (None, 0.0),
        };
        if !(log_prior + log_lik).is_finite() {
            return None;
        }
        let mut log_steps = [config.initial_step.ln(); N_BLOCKS];
        log_steps[0] = config.initial_alpha_step.ln();
        Some(Chain {
            prior,
            config,
            target,
            rng: ChaCha8Rng::seed_from_u64(0),
            params,
            spline,
            alpha,
            log_prior,
            log_lik,
            cache,
            log_steps,
        })
    }

    fn log_posterior(&self) -> f64 {
        self.log_prior + self.log_lik
    }

    fn accept(&mut self, log_ratio: f64) -> bool {
        log_ratio >= 0.0 || self.rng.random::<f64>().ln() < log_ratio
    }

    fn update_alpha(&mut self) -> Outcome {
        let step = self.log_steps[0].exp();
        let z: f64 = self.rng.sample(StandardNormal);
        let proposed = self.alpha * (step * z).exp();
        let lp = log_prior_unconstrained(&self.params, proposed, self.prior);
        let ll = match (&mut self.cache, lp.is_finite()) {
            (_, false) => f64::NEG_INFINITY,
            (Some(cache), true) => cache.propose_alpha(proposed),
            (None, true) => 0.0,
        };
        // Jacobian of the log-scale walk.
        let log_ratio = (lp + ll) - self.log_posterior() + (proposed / self.alpha).ln();
        let walk_prob = if log_ratio.is_nan() { 0.0 } else { log_ratio.min(0.0).exp() };
        let accepted = ll > f64::NEG_INFINITY && lp > f64::NEG_INFINITY && self.accept(log_ratio);
        if accepted {
            self.alpha = proposed;
            self.log_prior = lp;
            self.log_lik = ll;
            if let Some(cache) = &mut self.cache {
                cache.accept_alpha();
            }
        }
        Outcome {
            accepted,
            walk_prob: Some(walk_prob),
            jump: false,
        }
    }

    fn update_param(&mut self, param: Param) -> Outcome {
        let current = self.params.get(param);
        let mixture = self
            .prior
            .mixture(param, param == Param::P31 && p31_mass_available(&self.params));
        let at_mass = (current == 0.0 && mixture.mass_zero > 0.0)
            || (current == 1.0 && mixture.mass_one > 0.0);
        let nearest_mass = |v: f64| -> Option<f64> {
            match (mixture.mass_zero > 0.0, mixture.mass_one > 0.0) {
                (true, true) => Some(if v < 0.5 { 0.0 } else { 1.0 }),
                (true, false) => Some(0.0),
                (false, true) => Some(1.0),
                (false, false) => None,
            }
        };
        let jump_p = self.config.jump_probability;
        let u: f64 = self.rng.random();

        let (proposed, jump) = if at_mass {
            if u >= jump_p {
                return Outcome {
                    accepted: false,
                    walk_prob: None,
                    jump: false,
                };
            }
            let v: f64 = self.rng.random();
            // The reverse move only ever targets the nearest mass.
            if nearest_mass(v) != Some(current) {
                return Outcome {
                    accepted: false,
                    walk_prob: None,
                    jump: true,
                };
            }
            (v, true)
        } else {
            match nearest_mass(current) {
                Some(mass) if u < jump_p => (mass, true),
                _ => {
                    let z: f64 = self.rng.sample(StandardNormal);
                    (current + self.log_steps[param.index() + 1].exp() * z, false)
                }
            }
        };

        let reject = |jump: bool| Outcome {
            accepted: false,
            walk_prob: (!jump).then_some(0.0),
            jump,
        };
        if !(0.0..=1.0).contains(&proposed) {
            return reject(jump);
        }
        let candidate = self.params.with(param, proposed);
        let lp = log_prior_unconstrained(&candidate, self.alpha, self.prior);
        if lp == f64::NEG_INFINITY {
            return reject(jump);
        }
        let constrained = !matches!(self.target, Target::Prior { constrained: false });
        let new_spline = if constrained {
            match build_spline(candidate) {
                Ok(s) => Some(s),
                Err(_) => return reject(jump),
            }
        } else {
            None
        };

        let mut range = 0..0;
        let ll = match (&mut self.cache, &new_spline, &self.spline) {
            (Some(cache), Some(new), Some(old)) => {
                let (a0, a1) = old.affected_span(param);
                let (b0, b1) = new.affected_span(param);
                range = cache
                    .data
                    .angle_range(a0.min(b0) - RANGE_PADDING, a1.max(b1) + RANGE_PADDING);
                cache.propose_spline(new, self.alpha, range.clone())
            }
            _ => 0.0,
        };
        if ll == f64::NEG_INFINITY {
            return reject(jump);
        }
        let log_ratio = (lp + ll) - self.log_posterior();
        let walk_prob = (!jump).then(|| log_ratio.min(0.0).exp());
        let accepted = self.accept(log_ratio);
        if accepted {
            self.params = candidate;
            self.spline = new_spline;
            self.log_prior = lp;
            self.log_lik = ll;
            if let Some(cache) = &mut self.cache {
                cache.accept_spline(range);
            }
        }
        Outcome {
            accepted,
            walk_prob,
            jump,
        }
    }

    fn run(mut self, chain: usize) -> (Vec<Draw>, ChainDiagnostics) {
        let config = self.config;
        let mut draws = Vec::with_capacity(config.iterations - config.burn_in);
        let mut moves = [MoveStats::default(); N_BLOCKS];
        let mut step_trace = Vec::new();

        for iter in 1..=config.iterations {
            let burning = iter <= config.burn_in;
            for block in 0..N_BLOCKS {
                let outcome = if block == 0 {
                    self.update_alpha()
                } else {
                    self.update_param(Param::ALL[block - 1])
                };
                if burning {
                    if let Some(a) = outcome.walk_prob {
                        let gain = config.adaptation_gain / (iter as f64).powf(0.6);
                        self.log_steps[block] =
                            (self.log_steps[block] + gain * (a - config.target_acceptance))
                                .clamp(-12.0, 3.0);
                    }
                } else {
                    let stats = &mut moves[block];
                    if outcome.jump {
                        stats.jump_proposed += 1;
                        stats.jump_accepted += outcome.accepted as u64;
                    } else if outcome.walk_prob.is_some() {
                        stats.walk_proposed += 1;
                        stats.walk_accepted += outcome.accepted as u64;
                    }
                }
            }
            if burning && iter % TRACE_EVERY == 0 {
                step_trace.push(self.log_steps.map(f64::exp));
            }
            if !burning {
                debug_assert!(
                    matches!(self.target, Target::Prior { constrained: false })
                        || build_spline(self.params).is_ok()
                );
                draws.push(Draw {
                    chain,
                    iteration: iter,
                    params: self.params,
                    alpha: self.alpha,
                    log_posterior: self.log_posterior(),
                });
            }
        }
        let diagnostics = ChainDiagnostics {
            chain,
            moves,
            final_steps: self.log_steps.map(f64::exp),
            step_trace,
        };
        (draws, diagnostics)
    }
}

fn run_target(target: Target<'_>, prior: &PriorSpec, config: &ChainConfig) -> Result<PosteriorSample> {
    prior.validate()?;
    config.validate()?;
    let results: Vec<Result<(Vec<Draw>, ChainDiagnostics)>> = (0..config.chains)
        .into_par_iter()
        .map(|c| {
            let chain = Chain::new(target, prior, config, derive_seed(config.seed, c as u64))?;
            Ok(chain.run(c))
        })
        .collect();
    let mut sample = PosteriorSample {
        draws: Vec::with_capacity(config.chains * (config.iterations - config.burn_in)),
        diagnostics: Vec::with_capacity(config.chains),
    };
    for r in results {
        let (draws, diag) = r?;
        sample.draws.extend(draws);
        sample.diagnostics.push(diag);
    }
    Ok(sample)
}

/// Runs `config.chains` independent chains on the exceedances.
pub fn run_chain(data: &Exceedances, prior: &PriorSpec, config: &ChainConfig) -> Result<PosteriorSample> {
    if data.is_empty() {
        return Err(Error::Domain("no exceedances to fit".into()));
    }
    run_target(Target::Posterior(data), prior, config)
}

/// Runs the sampler with the likelihood switched off. With `constrained`
/// false the spline validity indicator is dropped as well, so the chain
/// targets the bare product of mixture priors.
pub fn run_prior_chain(prior: &PriorSpec, config: &ChainConfig, constrained: bool) -> Result<PosteriorSample> {
    run_target(Target::Prior { constrained }, prior, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_prior_mass_terms() {
        let prior = PriorSpec::default();
        let params = SplineParams::logistic_shape(0.5);
        let lp = log_prior(&params, 2.0, &prior);
        // p02 0.9, p11 0.9, p12 1, p21 mass 0.1, p31 mass 0.4, p42 mass 0.1,
        // p51 1, p52 0.9, p61 0.9
        let spline = 4.0 * 0.9f64.ln() + 0.1f64.ln() + 0.4f64.ln() + 0.1f64.ln();
        let alpha = prior.alpha_log_density(2.0);
        assert!((lp - spline - alpha).abs() < 1e-13);
    }

    #[test]
    fn log_prior_rejects_invalid_and_unavailable_mass() {
        let prior = PriorSpec::default();
        let bad = SplineParams::logistic_shape(0.5)
            .with(Param::P11, 0.9)
            .with(Param::P21, 0.3);
        assert_eq!(log_prior(&bad, 2.0, &prior), f64::NEG_INFINITY);

        let params = SplineParams {
            p02: 0.5,
            p11: 0.25,
            p12: 0.75,
            p21: 0.5,
            p31: 1.0,
            p42: 0.5,
            p51: 0.75,
            p52: 0.25,
            p61: 0.5,
        };
        assert!(build_spline(params).is_ok());
        assert_eq!(log_prior(&params, 2.0, &prior), f64::NEG_INFINITY);
        assert!(log_prior(&params.with(Param::P31, 0.9), 2.0, &prior).is_finite());
        assert_eq!(
            log_prior(&params.with(Param::P31, 0.9), -1.0, &prior),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn alpha_prior_is_lognormal() {
        let prior = PriorSpec::default();
        // LogNormal(1, 1) density at e: 1 / (e sqrt(2π))
        let want = -(1.0 + LN_SQRT_2PI);
        assert!((prior.alpha_log_density(1f64.exp()) - want).abs() < 1e-14);
    }

    #[test]
    fn config_validation() {
        let bad = ChainConfig {
            burn_in: 20,
            iterations: 20,
            ..ChainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ChainConfig {
            target_acceptance: 1.0,
            ..ChainConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(ChainConfig::default().validate().is_ok());
    }

    #[test]
    fn split_rhat_of_identical_chains_is_near_one() {
        let chain: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let r = split_rhat(&[chain.clone(), chain]).unwrap();
        assert!((r - 1.0).abs() < 0.01, "{r}");
        let shifted = vec![vec![0.0, 1.0, 0.0, 1.0], vec![10.0, 11.0, 10.0, 11.0]];
        assert!(split_rhat(&shifted).unwrap() > 2.0);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(5, 3), derive_seed(5, 3));
    }
}

//! The ℤ-projection of the degenerate walk (A = B = G₀) and its generating
//! functions.
//!
//! When A = B = G₀ the signed t-depth ψ(X_n) is a lazy ±1 walk on ℤ moving up
//! with probability (1−α)p, down with (1−α)(1−p) and holding with α. The
//! generating functions below are those of the non-lazy walk (up p, down
//! 1−p); laziness enters only through [`lazy_green_identity`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{HnnPresentation, Letter, Sign};
use crate::stats::{mean_estimate, EstimateWithCI};
use crate::walk::{replica_rng, Recording, StepSampler, WalkParams, Walker};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZWalkLaw {
    pub p: f64,
    pub alpha: f64,
}

impl ZWalkLaw {
    pub fn new(p: f64, alpha: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) || p == 0.5 {
            return Err(Error::Domain(format!("p = {p} must lie in (0, 1) and differ from 1/2")));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha = {alpha} must lie in [0, 1)")));
        }
        Ok(Self { p, alpha })
    }

    /// Radius of convergence 1/(2√(p(1−p))) of the first-passage series.
    pub fn radius(&self) -> f64 {
        1.0 / (2.0 * (self.p * (1.0 - self.p)).sqrt())
    }

    fn check(&self, z: f64) -> Result<()> {
        if !(z >= 0.0 && z <= self.radius()) {
            return Err(Error::Domain(format!(
                "z = {z} is outside [0, {}] for p = {}",
                self.radius(),
                self.p
            )));
        }
        Ok(())
    }
}

/// F±(z): generating function of the first passage to ±1, the root of
/// F = μ(±1)z + μ(∓1)z F² that is a power series with non-negative
/// coefficients (the smaller root).
pub fn first_passage_gf(law: &ZWalkLaw, direction: Sign, z: f64) -> Result<f64> {
    law.check(z)?;
    let (fwd, back) = match direction {
        Sign::Plus => (law.p, 1.0 - law.p),
        Sign::Minus => (1.0 - law.p, law.p),
    };
    let disc = (1.0 - 4.0 * fwd * back * z * z).max(0.0);
    Ok(2.0 * fwd * z / (1.0 + disc.sqrt()))
}

/// U_ℤ(z) = μ(−1)·z·F₊(z) + μ(+1)·z·F₋(z), the first-return generating function.
pub fn return_gf(law: &ZWalkLaw, z: f64) -> Result<f64> {
    let up = first_passage_gf(law, Sign::Plus, z)?;
    let down = first_passage_gf(law, Sign::Minus, z)?;
    Ok((1.0 - law.p) * z * up + law.p * z * down)
}

/// G_ℤ(z) = 1/(1 − U_ℤ(z)).
pub fn green_gf(law: &ZWalkLaw, z: f64) -> Result<f64> {
    let u = return_gf(law, z)?;
    if u >= 1.0 {
        return Err(Error::Domain(format!("U(z) = {u} >= 1 at z = {z}")));
    }
    Ok(1.0 / (1.0 - u))
}

/// G_ℤ((1−α)z/(1−αz)) / (1−αz): the Green function of the lazy walk at 0,
/// i.e. the generating function of visits of the group walk to G₀.
pub fn lazy_green_identity(law: &ZWalkLaw, z: f64) -> Result<f64> {
    let a = law.alpha;
    if !(z >= 0.0 && a * z < 1.0) {
        return Err(Error::Domain(format!("alpha·z = {} must be < 1", a * z)));
    }
    let w = (1.0 - a) * z / (1.0 - a * z);
    Ok(green_gf(law, w)? / (1.0 - a * z))
}

/// (1−α)|2p−1|, the t-drift of the degenerate walk.
pub fn degenerate_drift(alpha: f64, p: f64) -> f64 {
    (1.0 - alpha) * (2.0 * p - 1.0).abs()
}

/// Weight (z/(1−αz))^k · Π μ(t^{±1}) / (1−α)^k of a prescribed sign pattern
/// for the first k stable-letter steps. At z = 1 this is the probability of
/// the pattern.
pub fn pattern_weight(law: &ZWalkLaw, pattern: &[Sign], z: f64) -> f64 {
    let a = law.alpha;
    let factor = z / (1.0 - a * z);
    pattern
        .iter()
        .map(|s| {
            let mu = match s {
                Sign::Plus => (1.0 - a) * law.p,
                Sign::Minus => (1.0 - a) * (1.0 - law.p),
            };
            factor * mu
        })
        .product()
}

/// Depth beyond which a return to 0 has probability below `eps`.
pub fn return_barrier(p: f64, eps: f64) -> u32 {
    let r = p.min(1.0 - p) / p.max(1.0 - p);
    (eps.ln() / r.ln()).ceil().max(1.0) as u32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMonteCarlo {
    pub trials: u64,
    pub barrier: u32,
    /// Fraction of walks whose projection returns to 0 after first leaving it.
    pub return_frequency: EstimateWithCI,
    /// Mean number of n ≥ 0 with X_n ∈ G₀.
    pub mean_visits: EstimateWithCI,
}

/// Runs `trials` degenerate group walks from the identity until the t-depth
/// reaches the barrier, counting visits to G₀ and returns of ψ to 0.
pub fn simulate_projection(
    pres: &HnnPresentation,
    params: &WalkParams,
    trials: u64,
    seed: u64,
    barrier: u32,
) -> Result<ProjectionMonteCarlo> {
    if !pres.is_degenerate() || params.p() == 0.5 {
        return Err(Error::Regime("the projection check needs A = B = G0 and p != 1/2".into()));
    }
    let sampler = StepSampler::new(params);
    let runs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|r| {
            let mut w = Walker::new(pres, &sampler, replica_rng(seed, r), Recording::Summary);
            let mut visits = 1u64;
            let mut left = false;
            let mut returned = false;
            while w.depth() < barrier {
                w.step();
                if w.depth() == 0 {
                    visits += 1;
                    if left {
                        returned = true;
                    }
                } else {
                    left = true;
                }
            }
            (f64::from(u8::from(returned)), visits as f64)
        })
        .collect();
    let ret: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let vis: Vec<f64> = runs.iter().map(|r| r.1).collect();
    Ok(ProjectionMonteCarlo {
        trials,
        barrier,
        return_frequency: mean_estimate(&ret, "monte_carlo"),
        mean_visits: mean_estimate(&vis, "monte_carlo"),
    })
}

/// Empirical frequency of `pattern` as the signs of the first k stable-letter
/// steps.
pub fn simulate_pattern_frequency(params: &WalkParams, pattern: &[Sign], trials: u64, seed: u64) -> EstimateWithCI {
    let sampler = StepSampler::new(params);
    let hits: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            let mut i = 0;
            while i < pattern.len() {
                let s = match sampler.sample(&mut rng) {
                    Letter::T => Sign::Plus,
                    Letter::TInv => Sign::Minus,
                    Letter::Base(_) => continue,
                };
                if s != pattern[i] {
                    return 0.0;
                }
                i += 1;
            }
            1.0
        })
        .collect();
    mean_estimate(&hits, "monte_carlo")
}

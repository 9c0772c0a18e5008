//! Drift, variance, escape-probability and Greenian-length estimators.

use std::collections::HashMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exits::{empirical_pi, ExitEvent, RegenerationCycle};
use crate::group::{Elem, HnnPresentation, LengthFunction, NormalForm, Sign, Syllable};
use crate::stats::{
    batch_ratio_estimate, excess_kurtosis, ks_normal, mean, mean_estimate, ratio_estimate, skewness, variance,
    EstimateWithCI,
};
use crate::walk::{classify_regime, replica_rng, Recording, Regime, StepSampler, WalkParams, Walker};

/// Mean of per-replica ℓ(X_n)/n with its standard error across replicas.
pub fn drift_direct(per_replica: &[f64]) -> EstimateWithCI {
    mean_estimate(per_replica, "direct")
}

/// (Σ length_gain) / (Σ duration) over i.i.d. cycles.
pub fn drift_regeneration(cycles: &[RegenerationCycle]) -> Result<EstimateWithCI> {
    if cycles.is_empty() {
        return Err(Error::NoRegenerations);
    }
    let ys: Vec<f64> = cycles.iter().map(|c| c.length_gain).collect();
    let xs: Vec<f64> = cycles.iter().map(|c| c.duration as f64).collect();
    Ok(ratio_estimate(&ys, &xs, "regeneration"))
}

/// Stabilised syllables per step over cycles; estimates 1/Λ.
pub fn t_drift_regeneration(cycles: &[RegenerationCycle]) -> Result<EstimateWithCI> {
    if cycles.is_empty() {
        return Err(Error::NoRegenerations);
    }
    let ys: Vec<f64> = cycles.iter().map(|c| c.syllable_count as f64).collect();
    let xs: Vec<f64> = cycles.iter().map(|c| c.duration as f64).collect();
    Ok(ratio_estimate(&ys, &xs, "regeneration_t"))
}

/// Δ̂/Λ̂ with Δ̂ = Σ ℓ(w t)·π̂(w t h, m) and Λ̂ = Σ m·π̂(w t h, m), π̂ the pooled
/// empirical distribution of the (W, i) chains. The standard error treats
/// replicas as clusters, or contiguous batches when there is a single chain.
pub fn drift_pi_formula(pres: &HnnPresentation, chains: &[Vec<ExitEvent>], ell: &LengthFunction) -> Result<EstimateWithCI> {
    let total: usize = chains.iter().map(Vec::len).sum();
    if total < 2 {
        return Err(Error::InsufficientData(format!("{total} exits in total")));
    }
    let gain = |e: &ExitEvent| ell.base(pres, e.w.g) + ell.stable(e.w.sign);
    let used: Vec<&Vec<ExitEvent>> = chains.iter().filter(|c| !c.is_empty()).collect();
    if used.len() >= 2 {
        let ys: Vec<f64> = used.iter().map(|c| c.iter().map(gain).sum()).collect();
        let xs: Vec<f64> = used.iter().map(|c| c.iter().map(|e| e.increment as f64).sum()).collect();
        let mut est = ratio_estimate(&ys, &xs, "pi_formula");
        est.n_samples = total as u64;
        Ok(est)
    } else {
        let c = used[0];
        let ys: Vec<f64> = c.iter().map(gain).collect();
        let xs: Vec<f64> = c.iter().map(|e| e.increment as f64).collect();
        Ok(batch_ratio_estimate(&ys, &xs, 20, "pi_formula"))
    }
}

/// Δ̂/Λ̂ evaluated from an explicit π̂ over (W, i) states.
pub fn pi_formula_point(pres: &HnnPresentation, exits: &[ExitEvent], ell: &LengthFunction) -> Result<f64> {
    let chain = crate::exits::extract_chain(exits)?;
    let pi = empirical_pi(&chain)?;
    let delta: f64 = pi
        .iter()
        .map(|((w, _), q)| q * (ell.base(pres, w.g) + ell.stable(w.sign)))
        .sum();
    let lambda: f64 = pi.iter().map(|((_, m), q)| q * *m as f64).sum();
    Ok(delta / lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sigma2Estimate {
    pub sigma2: EstimateWithCI,
    /// Mean of L̂ᵢ = gainᵢ − λ̂·durationᵢ; its standard error includes the
    /// uncertainty of λ̂.
    pub mean_l: EstimateWithCI,
}

/// σ̂² = mean((gain − λ̂·duration)²) / mean(duration).
pub fn sigma2_regeneration(cycles: &[RegenerationCycle], lambda: &EstimateWithCI) -> Result<Sigma2Estimate> {
    if cycles.is_empty() {
        return Err(Error::NoRegenerations);
    }
    let l: Vec<f64> = cycles
        .iter()
        .map(|c| c.length_gain - lambda.point * c.duration as f64)
        .collect();
    let sq: Vec<f64> = l.iter().map(|x| x * x).collect();
    let dur: Vec<f64> = cycles.iter().map(|c| c.duration as f64).collect();
    let sigma2 = ratio_estimate(&sq, &dur, "regeneration_variance");
    let m = l.len() as f64;
    let se = (variance(&l) / m + (mean(&dur) * lambda.std_error).powi(2)).sqrt();
    let mean_l = EstimateWithCI::new(mean(&l), se, l.len() as u64, "mean_l_hat");
    Ok(Sigma2Estimate { sigma2, mean_l })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltStatistics {
    pub n: u64,
    pub replicas: u64,
    pub lambda_hat: f64,
    pub sigma2_reference: f64,
    pub mean: f64,
    pub variance: f64,
    pub variance_ratio: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_statistic: f64,
}

/// Statistics of (ℓ(X_n) − n·λ̂)/√n across replicas, with λ̂ the replica mean
/// of ℓ(X_n)/n, compared to N(0, σ̂²).
pub fn clt_statistics(final_lengths: &[f64], n: u64, sigma2: f64) -> CltStatistics {
    let nf = n as f64;
    let lambda_hat = mean(final_lengths) / nf;
    let z: Vec<f64> = final_lengths
        .iter()
        .map(|l| (l - nf * lambda_hat) / nf.sqrt())
        .collect();
    let var = variance(&z);
    CltStatistics {
        n,
        replicas: z.len() as u64,
        lambda_hat,
        sigma2_reference: sigma2,
        mean: mean(&z),
        variance: var,
        variance_ratio: var / sigma2,
        skewness: skewness(&z),
        excess_kurtosis: excess_kurtosis(&z),
        ks_statistic: ks_normal(&z, 0.0, sigma2.sqrt()),
    }
}

/// Log-survival slope of cycle durations beyond their median, from a
/// geometric fit to the excesses: slope = ln(1 − 1/m̄) with m̄ the mean
/// excess. Negative with a CI excluding 0 indicates an exponential tail.
pub fn duration_tail_slope(durations: &[u64]) -> Result<EstimateWithCI> {
    if durations.len() < 10 {
        return Err(Error::InsufficientData(format!("{} durations", durations.len())));
    }
    let mut v = durations.to_vec();
    v.sort_unstable();
    let median = v[v.len() / 2];
    let excess: Vec<f64> = v.iter().filter(|&&d| d > median).map(|&d| (d - median) as f64).collect();
    if excess.len() < 5 {
        return Err(Error::InsufficientData("too few durations above the median".into()));
    }
    let m = mean_estimate(&excess, "");
    if m.point <= 1.0 {
        return Ok(EstimateWithCI::new(f64::NEG_INFINITY, 0.0, excess.len() as u64, "geometric_tail"));
    }
    let slope = (1.0 - 1.0 / m.point).ln();
    let se = m.std_error / (m.point * (m.point - 1.0));
    Ok(EstimateWithCI::new(slope, se, excess.len() as u64, "geometric_tail"))
}

/// Horizons H₀, 2H₀, …, 2^K·H₀.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonSchedule {
    pub initial: u64,
    pub max_doublings: u32,
}

impl Default for HorizonSchedule {
    fn default() -> Self {
        Self {
            initial: 64,
            max_doublings: 12,
        }
    }
}

impl FromStr for HorizonSchedule {
    type Err = Error;

    /// Parses `H0,xK`, e.g. `64,x12`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("horizon schedule `{s}` is not of the form H0,xK"));
        let (h, k) = s.split_once(',').ok_or_else(bad)?;
        let initial: u64 = h.trim().parse().map_err(|_| bad())?;
        let max_doublings: u32 = k.trim().strip_prefix('x').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if initial == 0 {
            return Err(bad());
        }
        Ok(Self { initial, max_doublings })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    pub start: String,
    pub estimate: EstimateWithCI,
    /// (horizon, survival fraction) for every horizon visited.
    pub horizons: Vec<(u64, f64)>,
    /// Survival up to a finite horizon bounds ξ from above.
    pub upper_bracket: bool,
    pub converged: bool,
}

/// Monte Carlo ξ(start) = P_start[the walk never re-enters G₀], by the
/// fraction of trials whose t-length stays positive up to a horizon that
/// doubles until the fraction changes by less than `tolerance` (relative).
#[allow(clippy::too_many_arguments)]
pub fn estimate_xi(
    pres: &HnnPresentation,
    params: &WalkParams,
    start: &NormalForm,
    schedule: HorizonSchedule,
    trials: u64,
    seed: u64,
    tolerance: f64,
) -> Result<XiEstimate> {
    if classify_regime(pres, params) == Regime::Recurrent {
        return Err(Error::Regime(
            "xi is only defined for transient walks; A = B = G0 with p = 1/2 is recurrent".into(),
        ));
    }
    if start.t_length() == 0 {
        return Err(Error::InvalidParams("xi needs a start point outside G0".into()));
    }
    let sampler = StepSampler::new(params);
    let mut walkers: Vec<Walker> = (0..trials)
        .map(|r| Walker::from(pres, &sampler, replica_rng(seed, r), start.clone(), Recording::Summary))
        .collect();
    let mut alive = vec![true; walkers.len()];
    let mut horizons = Vec::new();
    let mut elapsed = 0u64;
    let mut horizon = schedule.initial;
    let mut converged = false;
    for round in 0..=schedule.max_doublings {
        let steps = horizon - elapsed;
        walkers
            .par_iter_mut()
            .zip(alive.par_iter_mut())
            .filter(|(_, a)| **a)
            .for_each(|(w, a)| {
                for _ in 0..steps {
                    w.step();
                    if w.depth() == 0 {
                        *a = false;
                        break;
                    }
                }
            });
        elapsed = horizon;
        let frac = alive.iter().filter(|&&a| a).count() as f64 / trials as f64;
        if let Some(&(_, prev)) = horizons.last() {
            let prev: f64 = prev;
            let rel = if prev == 0.0 { 0.0 } else { (prev - frac).abs() / prev };
            horizons.push((horizon, frac));
            if rel < tolerance {
                converged = true;
                break;
            }
        } else {
            horizons.push((horizon, frac));
        }
        if round < schedule.max_doublings {
            horizon *= 2;
        }
    }
    let p = horizons.last().unwrap().1;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    Ok(XiEstimate {
        start: pres.format(start),
        estimate: EstimateWithCI::new(p, se, trials, "survival_fraction"),
        horizons,
        upper_bracket: true,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenianEstimate {
    pub length: LengthFunction,
    /// (target, F̂(e, target)) for every non-identity base element, t and t⁻¹.
    pub hit_probabilities: Vec<(String, f64)>,
}

/// ℓ_G(g) = −log F̂(e, g) for every g ∈ G₀ \ {e₀} and for t, t⁻¹, with
/// ℓ_G(e₀) = 0. F̂ is the fraction of `trials` walks of length `horizon` that
/// visit g; trials stop early once every target has been visited or the
/// t-length reaches `depth_cutoff`. Finite horizons bias F̂ downwards.
pub fn estimate_greenian_length(
    pres: &HnnPresentation,
    params: &WalkParams,
    horizon: u64,
    trials: u64,
    depth_cutoff: u32,
    seed: u64,
) -> Result<GreenianEstimate> {
    let Some(order) = pres.base().order() else {
        return Err(Error::Domain("the Greenian length is only estimated for finite base groups".into()));
    };
    let e0 = pres.identity();
    // slots 0..order for base elements, order for t, order + 1 for t⁻¹
    let t_slot = order;
    let targets = order - 1 + 2;
    let sampler = StepSampler::new(params);
    let hits: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|r| {
            let mut seen = vec![false; order + 2];
            seen[e0.index()] = true;
            let mut found = 0usize;
            let mut w = Walker::new(pres, &sampler, replica_rng(seed, r), Recording::Summary);
            for _ in 0..horizon {
                w.step();
                let x = w.current();
                let slot = match x.t_length() {
                    0 => Some(x.trailing().index()),
                    1 if x.trailing() == e0 => match x.syllables()[0] {
                        Syllable { rep, sign: Sign::Plus } if rep == e0 => Some(t_slot),
                        Syllable { rep, sign: Sign::Minus } if rep == e0 => Some(t_slot + 1),
                        _ => None,
                    },
                    _ => None,
                };
                if let Some(s) = slot {
                    if !seen[s] {
                        seen[s] = true;
                        found += 1;
                        if found == targets {
                            break;
                        }
                    }
                }
                if w.depth() >= depth_cutoff {
                    break;
                }
            }
            seen
        })
        .collect();
    let freq = |slot: usize| hits.iter().filter(|h| h[slot]).count() as f64 / trials as f64;
    let mut values = HashMap::new();
    let mut report = Vec::new();
    for i in 0..order {
        let g = Elem(i as i64);
        if g == e0 {
            continue;
        }
        let f = freq(i);
        report.push((pres.name(g), f));
        values.insert(g, -f.ln());
    }
    let ft = freq(t_slot);
    let ft_inv = freq(t_slot + 1);
    report.push(("t".into(), ft));
    report.push(("t^-1".into(), ft_inv));
    if let Some((name, _)) = report.iter().find(|(_, f)| *f == 0.0) {
        return Err(Error::ZeroHitEstimate(format!(
            "no trial visited `{name}` within horizon {horizon}; raise the horizon or the number of trials"
        )));
    }
    values.insert(e0, 0.0);
    let length = LengthFunction::table(pres, &values, 0.0, -ft.ln(), -ft_inv.ln());
    Ok(GreenianEstimate {
        length,
        hit_probabilities: report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{catalog, validate_presentation};

    fn cycle(gain: f64, duration: u64) -> RegenerationCycle {
        RegenerationCycle {
            index: 0,
            start: 0,
            end: duration,
            duration,
            length_gain: gain,
            syllable_count: 1,
        }
    }

    #[test]
    fn zero_length_gives_zero_drift() {
        let e = drift_direct(&[0.0; 50]);
        assert_eq!((e.point, e.std_error), (0.0, 0.0));
    }

    #[test]
    fn identical_cycles() {
        let cycles = vec![cycle(6.0, 4); 30];
        let e = drift_regeneration(&cycles).unwrap();
        assert_eq!((e.point, e.std_error), (1.5, 0.0));
        let s = sigma2_regeneration(&cycles, &e).unwrap();
        assert_eq!(s.sigma2.point, 0.0);
        assert_eq!(s.mean_l.point, 0.0);
        assert!(drift_regeneration(&[]).is_err());
    }

    #[test]
    fn pi_formula_on_a_single_state_chain() {
        let p = validate_presentation(&catalog::example_klein_four(), &[]).unwrap();
        let e0 = p.identity();
        let exits: Vec<ExitEvent> = (1..=20)
            .map(|k| ExitEvent {
                level: k,
                exit_time: k as u64,
                increment: 1,
                w: crate::exits::WRecord { g: e0, sign: Sign::Plus, h: e0 },
                confirmed: true,
            })
            .collect();
        let ell = LengthFunction::t_only();
        let e = drift_pi_formula(&p, std::slice::from_ref(&exits), &ell).unwrap();
        assert_eq!(e.point, 1.0);
        assert_eq!(pi_formula_point(&p, &exits, &ell).unwrap(), 1.0);
    }

    #[test]
    fn horizon_schedule_parsing() {
        let s: HorizonSchedule = "100,x8".parse().unwrap();
        assert_eq!(s, HorizonSchedule { initial: 100, max_doublings: 8 });
        assert!("100".parse::<HorizonSchedule>().is_err());
        assert!("0,x3".parse::<HorizonSchedule>().is_err());
        assert!("5,3".parse::<HorizonSchedule>().is_err());
    }

    #[test]
    fn geometric_tail_slope() {
        // durations 10 + Geometric(q = 0.25): slope ln(0.75)
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let d: Vec<u64> = (0..20000)
            .map(|_| {
                let mut k = 1;
                while !rng.gen_bool(0.25) {
                    k += 1;
                }
                10 + k
            })
            .collect();
        let s = duration_tail_slope(&d).unwrap();
        assert!(s.within(0.75f64.ln(), 4.0), "{s:?}");
        assert!(s.excludes_zero());
    }

    #[test]
    fn xi_rejects_recurrent_walks() {
        let d = validate_presentation(&catalog::degenerate_klein_four(), &[]).unwrap();
        let mu = vec![(Elem(1), 0.5), (Elem(2), 0.5)];
        let params = WalkParams::new(&d, mu, 0.5, 0.5).unwrap();
        let start = d.normalize_str("t").unwrap();
        let r = estimate_xi(&d, &params, &start, HorizonSchedule::default(), 10, 0, 1e-3);
        assert!(matches!(r, Err(Error::Regime(_))));
    }

    #[test]
    fn xi_in_the_degenerate_regime() {
        let d = validate_presentation(&catalog::degenerate_klein_four(), &[]).unwrap();
        let mu = vec![(Elem(1), 0.5), (Elem(2), 0.5)];
        let params = WalkParams::new(&d, mu, 0.5, 0.8).unwrap();
        let up = estimate_xi(&d, &params, &d.normalize_str("t b").unwrap(), HorizonSchedule::default(), 20000, 1, 1e-3).unwrap();
        // from depth 1 the lazy walk with up/down ratio 4 never returns w.p. 1 - 1/4
        assert!(up.estimate.within(0.75, 4.0), "{:?}", up.estimate);
        let down = estimate_xi(&d, &params, &d.normalize_str("t^-1 a").unwrap(), HorizonSchedule::default(), 20000, 2, 1e-3).unwrap();
        assert!(down.estimate.point < 0.01);
        assert!(down.upper_bracket);
    }

    #[test]
    fn greenian_lower_bound_from_one_step() {
        let p = validate_presentation(&catalog::example_klein_four(), &["a".into(), "b".into()]).unwrap();
        let mu = vec![(Elem(1), 0.3), (Elem(2), 0.7)];
        let params = WalkParams::new(&p, mu, 0.5, 0.5).unwrap();
        let g = estimate_greenian_length(&p, &params, 400, 4000, 30, 3).unwrap();
        for (name, m) in [("a", 0.3), ("b", 0.7)] {
            let l = g.length.base(&p, p.base().lookup(name).unwrap());
            assert!(l > 0.0 && l.is_finite());
            assert!(l <= -(0.5f64 * m).ln() + 0.05, "{name}: {l}");
        }
        assert!(g.length.t > 0.0 && g.length.t_inv > 0.0);
        assert!(g.length.validate(&p).is_ok());
    }
}

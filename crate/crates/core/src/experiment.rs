//! End-to-end pipelines behind the CLI subcommands.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{derive_seed, ExperimentConfig, LengthSpec, Setup};
use crate::error::{Error, Result};
use crate::estimators::{
    clt_statistics, drift_direct, drift_regeneration, duration_tail_slope, estimate_xi, sigma2_regeneration,
    t_drift_regeneration, CltStatistics, GreenianEstimate, HorizonSchedule, Sigma2Estimate, XiEstimate,
};
use crate::exits::{
    anchor_sign, exits_from_live, extract_chain, extract_regenerations, is_anchor, ExitOptions, RegenerationCycle,
};
use crate::group::{HnnPresentation, LengthFunction, Letter, Sign};
use crate::stats::{lag1_correlation, mean_estimate, ratio_estimate, EstimateWithCI, Thresholds};
use crate::walk::{replica_rng, Direction, Recording, Regime, StepSampler, WalkParams, Walker};
use crate::zproj::{
    degenerate_drift, first_passage_gf, green_gf, lazy_green_identity, return_barrier, return_gf, simulate_projection,
    ProjectionMonteCarlo, ZWalkLaw,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const PI_BATCHES: usize = 20;

/// Output envelope shared by every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub command: String,
    pub version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &str, config: &ExperimentConfig, result: T) -> Self {
        Self {
            command: command.to_string(),
            version: VERSION,
            config_hash: config.hash(),
            seed: config.seed,
            config: config.clone(),
            result,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

pub fn recurrent_error(what: &str) -> Error {
    Error::Regime(format!(
        "{what} needs a transient walk, but A = B = G0 with p = 1/2 is recurrent: the t-depth is a lazy \
         symmetric walk on Z, so l(X_n)/n -> 0 and no regeneration times exist"
    ))
}

/// Exit-derived quantities of one replica under one set of exit options.
#[derive(Debug, Clone, Default)]
pub struct ExitSummary {
    pub confirmed: u32,
    pub anchors: u64,
    pub forbidden: u64,
    /// Σ ℓ(g t^ε) and Σ increment over confirmed exits.
    pub pi_gain: f64,
    pub pi_time: f64,
    /// The same sums over contiguous batches of exits.
    pub pi_batches: Vec<(f64, f64)>,
    pub cycles: Vec<RegenerationCycle>,
}

#[derive(Debug, Clone)]
pub struct ReplicaResult {
    pub replica: u64,
    pub steps: u64,
    pub ell: f64,
    pub word_length: f64,
    pub t_length: f64,
    pub final_depth: u32,
    pub primary: ExitSummary,
    /// Under twice the safety margin.
    pub doubled: ExitSummary,
}

fn summarise_exits(
    pres: &HnnPresentation,
    live: &[crate::walk::LiveLevel],
    ell: &LengthFunction,
    opts: &ExitOptions,
    anchor: Sign,
) -> ExitSummary {
    let exits = exits_from_live(live, opts);
    let e0 = pres.identity();
    let gains: Vec<f64> = exits
        .iter()
        .map(|e| ell.base(pres, e.w.g) + ell.stable(e.w.sign))
        .collect();
    let n = exits.len();
    let b = PI_BATCHES.min(n);
    let pi_batches = (0..b)
        .map(|i| {
            let (lo, hi) = (i * n / b, (i + 1) * n / b);
            (
                gains[lo..hi].iter().sum(),
                exits[lo..hi].iter().map(|e| e.increment as f64).sum(),
            )
        })
        .collect();
    let forbidden = extract_chain(&exits)
        .map(|c| c.forbidden_transitions(e0).len() as u64)
        .unwrap_or(0);
    ExitSummary {
        confirmed: n as u32,
        anchors: exits.iter().filter(|e| is_anchor(e, e0, anchor)).count() as u64,
        forbidden,
        pi_gain: gains.iter().sum(),
        pi_time: exits.iter().map(|e| e.increment as f64).sum(),
        pi_batches,
        cycles: extract_regenerations(pres, &exits, ell, anchor).unwrap_or_default(),
    }
}

fn doubled(opts: &ExitOptions) -> ExitOptions {
    ExitOptions {
        safety_margin: opts.safety_margin * 2,
        ..*opts
    }
}

/// Runs `replicas` independent walks of `steps` steps. Replica r uses stream r
/// of `seed`; results come back in replica order whatever the thread count.
#[allow(clippy::too_many_arguments)]
pub fn run_replicas(
    pres: &HnnPresentation,
    params: &WalkParams,
    regime: Regime,
    ell: &LengthFunction,
    steps: u64,
    replicas: u64,
    seed: u64,
    opts: &ExitOptions,
) -> Vec<ReplicaResult> {
    let sampler = StepSampler::new(params);
    let anchor = anchor_sign(regime);
    let opts2 = doubled(opts);
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut w = Walker::new(pres, &sampler, replica_rng(seed, r), Recording::Summary);
            w.run(steps);
            let st = w.into_state();
            ReplicaResult {
                replica: r,
                steps,
                ell: ell.eval(pres, &st.current),
                word_length: st.current.word_length(pres.identity()) as f64,
                t_length: st.current.t_length() as f64,
                final_depth: st.depth(),
                primary: summarise_exits(pres, &st.live, ell, opts, anchor),
                doubled: summarise_exits(pres, &st.live, ell, &opts2, anchor),
            }
        })
        .collect()
}

fn pooled_cycles(results: &[ReplicaResult], pick: impl Fn(&ReplicaResult) -> &ExitSummary) -> Vec<RegenerationCycle> {
    results.iter().flat_map(|r| pick(r).cycles.iter().copied()).collect()
}

fn pi_estimate(results: &[ReplicaResult], pick: impl Fn(&ReplicaResult) -> &ExitSummary) -> Result<EstimateWithCI> {
    let used: Vec<&ExitSummary> = results.iter().map(&pick).filter(|s| s.confirmed > 0).collect();
    let total: u64 = used.iter().map(|s| u64::from(s.confirmed)).sum();
    if total < 2 {
        return Err(Error::InsufficientData(format!("{total} confirmed exits in total")));
    }
    let (ys, xs): (Vec<f64>, Vec<f64>) = if used.len() >= 2 {
        used.iter().map(|s| (s.pi_gain, s.pi_time)).unzip()
    } else {
        used[0].pi_batches.iter().copied().unzip()
    };
    let mut est = ratio_estimate(&ys, &xs, "pi_formula");
    est.n_samples = total;
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub safety_margin: u32,
    pub lambda_regen: Option<EstimateWithCI>,
    pub lambda_pi: Option<EstimateWithCI>,
    pub sigma2: Option<EstimateWithCI>,
    /// Every doubled-margin estimate moves by less than the primary CI half-width.
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftDiagnostics {
    pub regime: String,
    pub replicas: u64,
    pub steps: u64,
    pub cycles: u64,
    pub mean_confirmed_levels: f64,
    pub anchor_frequency: EstimateWithCI,
    pub duration_tail_slope: Option<EstimateWithCI>,
    pub lag1_duration: f64,
    pub lag1_gain: f64,
    /// 3/√cycles, the scale below which lag-1 correlations are negligible.
    pub lag1_bound: f64,
    pub forbidden_transitions: u64,
    pub sensitivity: Sensitivity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub lambda_direct: EstimateWithCI,
    pub lambda_regen: EstimateWithCI,
    pub lambda_pi: EstimateWithCI,
    pub t_drift: EstimateWithCI,
    pub wl_drift: EstimateWithCI,
    pub wl_t_ratio: f64,
    pub sigma2: EstimateWithCI,
    pub mean_l_hat: EstimateWithCI,
    /// The three drift estimates agree pairwise within sigma_k standard errors.
    pub cross_consistent: bool,
    pub diagnostics: DriftDiagnostics,
    pub greenian: Option<Vec<(String, f64)>>,
}

/// Builds a drift report from finished replicas.
pub fn drift_from_replicas(
    results: &[ReplicaResult],
    regime: Regime,
    opts: &ExitOptions,
    th: &Thresholds,
) -> Result<DriftReport> {
    let steps = results.first().map_or(0, |r| r.steps);
    let nf = steps as f64;
    let per: Vec<f64> = results.iter().map(|r| r.ell / nf).collect();
    let lambda_direct = drift_direct(&per);
    let wl: Vec<f64> = results.iter().map(|r| r.word_length / nf).collect();
    let wl_drift = mean_estimate(&wl, "direct_word_length");
    let cycles = pooled_cycles(results, |r| &r.primary);
    let lambda_regen = drift_regeneration(&cycles)?;
    let t_drift = t_drift_regeneration(&cycles)?;
    let lambda_pi = pi_estimate(results, |r| &r.primary)?;
    let Sigma2Estimate { sigma2, mean_l } = sigma2_regeneration(&cycles, &lambda_direct)?;
    let k = th.sigma_k;
    let cross_consistent = lambda_direct.agrees_with(&lambda_regen, k)
        && lambda_direct.agrees_with(&lambda_pi, k)
        && lambda_regen.agrees_with(&lambda_pi, k);

    let cycles2 = pooled_cycles(results, |r| &r.doubled);
    let regen2 = drift_regeneration(&cycles2).ok();
    let pi2 = pi_estimate(results, |r| &r.doubled).ok();
    let moved_less = |e: &Option<EstimateWithCI>, base: &EstimateWithCI| {
        e.as_ref().is_some_and(|e| (e.point - base.point).abs() < base.half_width())
    };
    let sigma2_2 = sigma2_regeneration(&cycles2, &lambda_direct).ok().map(|s| s.sigma2);
    let stable =
        moved_less(&regen2, &lambda_regen) && moved_less(&pi2, &lambda_pi) && moved_less(&sigma2_2, &sigma2);
    let anchors: Vec<f64> = results.iter().map(|r| r.primary.anchors as f64).collect();
    let levels: Vec<f64> = results.iter().map(|r| f64::from(r.primary.confirmed)).collect();
    let anchor_frequency = if results.len() > 1 {
        ratio_estimate(&anchors, &levels, "anchor_frequency")
    } else {
        EstimateWithCI::new(anchors[0] / levels[0], f64::NAN, 1, "anchor_frequency")
    };
    let durations: Vec<u64> = cycles.iter().map(|c| c.duration).collect();
    let dur_f: Vec<f64> = durations.iter().map(|&d| d as f64).collect();
    let gains: Vec<f64> = cycles.iter().map(|c| c.length_gain).collect();
    let diagnostics = DriftDiagnostics {
        regime: regime.tag().to_string(),
        replicas: results.len() as u64,
        steps,
        cycles: cycles.len() as u64,
        mean_confirmed_levels: crate::stats::mean(&levels),
        anchor_frequency,
        duration_tail_slope: duration_tail_slope(&durations).ok(),
        lag1_duration: lag1_correlation(&dur_f),
        lag1_gain: lag1_correlation(&gains),
        lag1_bound: 3.0 / (cycles.len() as f64).sqrt(),
        forbidden_transitions: results.iter().map(|r| r.primary.forbidden).sum(),
        sensitivity: Sensitivity {
            safety_margin: doubled(opts).safety_margin,
            lambda_regen: regen2,
            lambda_pi: pi2,
            sigma2: sigma2_2,
            stable,
        },
    };
    Ok(DriftReport {
        wl_t_ratio: wl_drift.point / t_drift.point,
        lambda_direct,
        lambda_regen,
        lambda_pi,
        t_drift,
        wl_drift,
        sigma2,
        mean_l_hat: mean_l,
        cross_consistent,
        diagnostics,
        greenian: None,
    })
}

/// Drift pipeline with explicit overrides for steps, replicas and seed.
pub fn run_drift_with(setup: &Setup, steps: u64, replicas: u64, seed: u64) -> Result<(DriftReport, Vec<ReplicaResult>)> {
    if setup.regime == Regime::Recurrent {
        return Err(recurrent_error("drift"));
    }
    let (ell, green) = setup.length()?;
    let opts = setup.config.exit_options();
    let results = run_replicas(&setup.pres, &setup.params, setup.regime, &ell, steps, replicas, seed, &opts);
    let mut report = drift_from_replicas(&results, setup.regime, &opts, &setup.config.thresholds)?;
    report.greenian = green.map(|g: GreenianEstimate| g.hit_probabilities);
    Ok((report, results))
}

pub fn run_drift(setup: &Setup) -> Result<DriftReport> {
    let c = &setup.config;
    run_drift_with(setup, c.steps, c.replicas, c.seed).map(|r| r.0)
}

/// One row of the simulate CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRow {
    pub replica: u64,
    pub n: u64,
    pub t_length: u64,
    pub word_length: u64,
    pub ell_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRow {
    pub replica: u64,
    pub i: u32,
    pub duration: u64,
    pub length_gain: f64,
    pub syllable_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub regime: String,
    pub steps: u64,
    pub replicas: u64,
    pub record_every: u64,
    pub rows: u64,
    pub cycles: Option<u64>,
    pub mean_final_ell: f64,
}

pub struct SimulateOutput {
    pub summary: SimulateSummary,
    pub paths: Vec<PathRow>,
    pub cycles: Option<Vec<CycleRow>>,
}

/// Records (n, t_length, word_length, ℓ) every `record_every` steps and at the
/// end; optionally extracts regeneration cycles.
pub fn simulate(setup: &Setup, steps: u64, replicas: u64, seed: u64, record_every: u64, emit_cycles: bool) -> Result<SimulateOutput> {
    if emit_cycles && setup.regime == Regime::Recurrent {
        return Err(recurrent_error("--emit-cycles"));
    }
    let (ell, _) = setup.length()?;
    let pres = &setup.pres;
    let e0 = pres.identity();
    let sampler = StepSampler::new(&setup.params);
    let stride = record_every.max(1);
    let opts = setup.config.exit_options();
    let anchor = anchor_sign(setup.regime);
    let per: Vec<(Vec<PathRow>, Vec<CycleRow>)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut w = Walker::new(pres, &sampler, replica_rng(seed, r), Recording::Summary);
            let row = |w: &Walker, n| PathRow {
                replica: r,
                n,
                t_length: w.current().t_length() as u64,
                word_length: w.current().word_length(e0) as u64,
                ell_value: ell.eval(pres, w.current()),
            };
            let mut rows = vec![row(&w, 0)];
            let mut n = 0;
            while n < steps {
                let k = stride.min(steps - n);
                w.run(k);
                n += k;
                rows.push(row(&w, n));
            }
            let cycles = if emit_cycles {
                let exits = exits_from_live(&w.state().live, &opts);
                extract_regenerations(pres, &exits, &ell, anchor)
                    .unwrap_or_default()
                    .into_iter()
                    .map(|c| CycleRow {
                        replica: r,
                        i: c.index,
                        duration: c.duration,
                        length_gain: c.length_gain,
                        syllable_count: c.syllable_count,
                    })
                    .collect()
            } else {
                Vec::new()
            };
            (rows, cycles)
        })
        .collect();
    let mut paths = Vec::new();
    let mut cycles = Vec::new();
    let mut finals = Vec::new();
    for (rows, cs) in per {
        finals.push(rows.last().unwrap().ell_value);
        paths.extend(rows);
        cycles.extend(cs);
    }
    Ok(SimulateOutput {
        summary: SimulateSummary {
            regime: setup.regime.tag().to_string(),
            steps,
            replicas,
            record_every: stride,
            rows: paths.len() as u64,
            cycles: emit_cycles.then_some(cycles.len() as u64),
            mean_final_ell: crate::stats::mean(&finals),
        },
        paths,
        cycles: emit_cycles.then_some(cycles),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub statistics: CltStatistics,
    pub lambda_direct: EstimateWithCI,
    /// None when no regeneration cycle completed.
    pub sigma2: Option<EstimateWithCI>,
    pub mean_l_hat: Option<EstimateWithCI>,
    /// (1−α)(1 − (1−α)(2p−1)²) when A = B = G₀.
    pub sigma2_closed_form: Option<f64>,
    pub variance_within_band: Option<bool>,
    pub skewness_ok: Option<bool>,
    pub mean_l_contains_zero: Option<bool>,
    /// None when there are too few cycles to judge.
    pub passed: Option<bool>,
}

/// CLT statistics against σ̂² from regeneration cycles. With no cycle at all
/// (very short runs) the degenerate closed form is used as reference and no
/// verdict is given.
pub fn clt_from_replicas(results: &[ReplicaResult], setup: &Setup) -> Result<CltReport> {
    let th = &setup.config.thresholds;
    let steps = results.first().map_or(0, |r| r.steps);
    let per: Vec<f64> = results.iter().map(|r| r.ell / steps as f64).collect();
    let lambda = drift_direct(&per);
    let cycles = pooled_cycles(results, |r| &r.primary);
    let sigma2_closed_form = setup.pres.is_degenerate().then(|| {
        let (a, p) = (setup.params.alpha(), setup.params.p());
        (1.0 - a) * (1.0 - (1.0 - a) * (2.0 * p - 1.0).powi(2))
    });
    let s = match sigma2_regeneration(&cycles, &lambda) {
        Ok(s) => Some(s),
        Err(Error::NoRegenerations) if sigma2_closed_form.is_some() => None,
        Err(e) => return Err(e),
    };
    let reference = s
        .as_ref()
        .map_or_else(|| sigma2_closed_form.unwrap_or(f64::NAN), |s| s.sigma2.point);
    let finals: Vec<f64> = results.iter().map(|r| r.ell).collect();
    let statistics = clt_statistics(&finals, steps, reference);
    let (variance_within_band, skewness_ok, mean_l_contains_zero) = match &s {
        Some(s) => (
            Some((statistics.variance_ratio - 1.0).abs() <= th.variance_band),
            Some(statistics.skewness.abs() < th.skewness_max),
            Some(s.mean_l.contains(0.0)),
        ),
        None => (None, None, None),
    };
    let passed = s
        .as_ref()
        .map(|_| variance_within_band == Some(true) && skewness_ok == Some(true) && mean_l_contains_zero == Some(true));
    Ok(CltReport {
        statistics,
        lambda_direct: lambda,
        sigma2: s.as_ref().map(|s| s.sigma2.clone()),
        mean_l_hat: s.map(|s| s.mean_l),
        sigma2_closed_form,
        variance_within_band,
        skewness_ok,
        mean_l_contains_zero,
        passed,
    })
}

pub fn run_clt(setup: &Setup, steps: u64, replicas: u64, seed: u64) -> Result<CltReport> {
    if setup.regime == Regime::Recurrent {
        return Err(recurrent_error("clt"));
    }
    if replicas < 2 {
        return Err(Error::InsufficientData("clt needs at least two replicas".into()));
    }
    let (ell, _) = setup.length()?;
    let opts = setup.config.exit_options();
    let results = run_replicas(&setup.pres, &setup.params, setup.regime, &ell, steps, replicas, seed, &opts);
    clt_from_replicas(&results, setup)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiEntry {
    #[serde(flatten)]
    pub estimate: XiEstimate,
    /// Exact value when A = B = G₀: 1 − min(p,1−p)/max(p,1−p) in the drift
    /// direction, 0 against it.
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiReport {
    pub regime: String,
    pub schedule: HorizonSchedule,
    pub trials: u64,
    pub entries: Vec<XiEntry>,
}

/// ξ(t·b) for b ∈ B and ξ(t⁻¹·a) for a ∈ A.
pub fn run_xi(setup: &Setup, schedule: HorizonSchedule, trials: u64, seed: u64) -> Result<XiReport> {
    if setup.regime == Regime::Recurrent {
        return Err(recurrent_error("xi"));
    }
    let pres = &setup.pres;
    let tol = setup.config.thresholds.horizon_tolerance;
    let mut starts = Vec::new();
    for &b in pres.subgroup_b() {
        starts.push((Sign::Plus, pres.normalize(&[Letter::T, Letter::Base(b)])));
    }
    for &a in pres.subgroup_a() {
        starts.push((Sign::Minus, pres.normalize(&[Letter::TInv, Letter::Base(a)])));
    }
    let p = setup.params.p();
    let mut entries = Vec::new();
    for (i, (sign, nf)) in starts.iter().enumerate() {
        let estimate = estimate_xi(pres, &setup.params, nf, schedule, trials, derive_seed(seed, "xi", i as f64), tol)?;
        let exact = match setup.regime {
            Regime::TransientDegenerate(dir) => {
                let with = matches!((dir, sign), (Direction::Up, Sign::Plus) | (Direction::Down, Sign::Minus));
                Some(if with { 1.0 - p.min(1.0 - p) / p.max(1.0 - p) } else { 0.0 })
            }
            _ => None,
        };
        entries.push(XiEntry { estimate, exact });
    }
    Ok(XiReport {
        regime: setup.regime.tag().to_string(),
        schedule,
        trials,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZCheckSimulation {
    pub monte_carlo: ProjectionMonteCarlo,
    /// U(1) = 2·min(p, 1−p).
    pub return_probability: f64,
    /// Expected visits of the lazy walk to 0: 1/((1−α)(1 − U(1))).
    pub expected_visits: f64,
    pub return_agrees: bool,
    pub visits_agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZCheckReport {
    pub alpha: f64,
    pub p: f64,
    pub z: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    pub u: f64,
    pub green: f64,
    pub lazy_green: f64,
    pub degenerate_drift: f64,
    pub simulation: Option<ZCheckSimulation>,
}

pub fn zcheck_values(alpha: f64, p: f64, z: f64) -> Result<ZCheckReport> {
    let law = ZWalkLaw::new(p, alpha)?;
    Ok(ZCheckReport {
        alpha,
        p,
        z,
        f_plus: first_passage_gf(&law, Sign::Plus, z)?,
        f_minus: first_passage_gf(&law, Sign::Minus, z)?,
        u: return_gf(&law, z)?,
        green: green_gf(&law, z)?,
        lazy_green: lazy_green_identity(&law, z)?,
        degenerate_drift: degenerate_drift(alpha, p),
        simulation: None,
    })
}

/// Compares the group walk's t-depth with the ℤ walk by Monte Carlo.
pub fn zcheck_simulate(setup: &Setup, trials: u64, seed: u64) -> Result<ZCheckSimulation> {
    let (alpha, p) = (setup.params.alpha(), setup.params.p());
    let barrier = return_barrier(p, 1e-9);
    let mc = simulate_projection(&setup.pres, &setup.params, trials, seed, barrier)?;
    let u1 = 2.0 * p.min(1.0 - p);
    let visits = 1.0 / ((1.0 - alpha) * (1.0 - u1));
    let k = setup.config.thresholds.sigma_k;
    Ok(ZCheckSimulation {
        return_agrees: mc.return_frequency.within(u1, k),
        visits_agree: mc.mean_visits.within(visits, k),
        monte_carlo: mc,
        return_probability: u1,
        expected_visits: visits,
    })
}

/// What a sweep varies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    P,
    Alpha,
    Mu0(String),
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p" => Ok(Self::P),
            "alpha" => Ok(Self::Alpha),
            _ => match s.strip_prefix("mu0:") {
                Some(name) if !name.is_empty() => Ok(Self::Mu0(name.to_string())),
                _ => Err(Error::Grid(format!("unknown sweep parameter `{s}`; use p, alpha or mu0:NAME"))),
            },
        }
    }
}

impl SweepParam {
    pub fn label(&self) -> String {
        match self {
            Self::P => "p".into(),
            Self::Alpha => "alpha".into(),
            Self::Mu0(n) => format!("mu0:{n}"),
        }
    }
}

/// Parses `LO:HI:STEP` into the points LO, LO+STEP, … ≤ HI.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Grid(format!("grid `{s}`: {why}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected LO:HI:STEP"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|x| x.trim().parse::<f64>().map_err(|_| bad("not a number")))
        .collect::<Result<_>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
        return Err(bad("bounds must be finite"));
    }
    if step <= 0.0 {
        return Err(bad("STEP must be positive"));
    }
    if hi < lo {
        return Err(bad("HI is below LO"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as u64 + 1;
    if count > 10_000 {
        return Err(bad("more than 10000 points"));
    }
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

/// The config with one parameter replaced. Changing μ₀(NAME) rescales the
/// other masses proportionally so the total stays 1.
pub fn with_param(cfg: &ExperimentConfig, param: &SweepParam, value: f64) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    match param {
        SweepParam::P => c.p = value,
        SweepParam::Alpha => c.alpha = value,
        SweepParam::Mu0(name) => {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::Grid(format!("mu0:{name} = {value} must lie in (0, 1)")));
            }
            let old = *c
                .mu0
                .get(name)
                .ok_or_else(|| Error::Grid(format!("mu0 has no element `{name}`")))?;
            let rest = 1.0 - old;
            if c.mu0.len() < 2 || rest <= 0.0 {
                return Err(Error::Grid(format!("cannot renormalise mu0 around `{name}`")));
            }
            for (k, v) in c.mu0.iter_mut() {
                *v = if k == name { value } else { *v * (1.0 - value) / rest };
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub segment: u32,
    pub value: f64,
    pub seed: u64,
    pub regime: String,
    pub lambda: EstimateWithCI,
    pub sigma2: Option<EstimateWithCI>,
    /// λ(v−h) − 2λ(v) + λ(v+h) within the segment, with its standard error.
    pub second_difference: Option<(f64, f64)>,
    /// λ(v+2h) − 3λ(v+h) + 3λ(v) − λ(v−h), the residual of a local quadratic;
    /// a jump between grid points makes it large.
    pub third_difference: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub param: String,
    pub grid: Vec<f64>,
    /// Grid values skipped because they are recurrent (p = 1/2 with A = B = G₀).
    pub excluded: Vec<f64>,
    pub points: Vec<SweepPoint>,
}

/// Runs the drift pipeline over a grid. In the degenerate regime the grid is
/// cut at p = 1/2, which is never evaluated, and second differences stay
/// within a segment.
pub fn run_sweep(cfg: &ExperimentConfig, param: &SweepParam, grid: &[f64]) -> Result<SweepReport> {
    let degenerate = cfg.build()?.pres.is_degenerate();
    let mut excluded = Vec::new();
    let mut points: Vec<SweepPoint> = Vec::new();
    let mut segment = 0u32;
    let mut last_side: Option<bool> = None;
    for &v in grid {
        let c = with_param(cfg, param, v).map_err(|e| match e {
            Error::Grid(m) => Error::Grid(m),
            other => Error::Grid(other.to_string()),
        })?;
        if degenerate && (c.p - 0.5).abs() < 1e-12 {
            excluded.push(v);
            segment += u32::from(last_side.is_some());
            last_side = None;
            continue;
        }
        let side = c.p > 0.5;
        if degenerate && last_side.is_some_and(|s| s != side) {
            segment += 1;
        }
        last_side = Some(side);
        let setup = c.build().map_err(|e| Error::Grid(format!("{} = {v}: {e}", param.label())))?;
        let seed = derive_seed(cfg.seed, &param.label(), v);
        let (ell, _) = setup.length()?;
        let opts = c.exit_options();
        let results = run_replicas(&setup.pres, &setup.params, setup.regime, &ell, c.steps, c.replicas, seed, &opts);
        let per: Vec<f64> = results.iter().map(|r| r.ell / c.steps as f64).collect();
        let lambda = drift_direct(&per);
        let cycles = pooled_cycles(&results, |r| &r.primary);
        let sigma2 = sigma2_regeneration(&cycles, &lambda).ok().map(|s| s.sigma2);
        points.push(SweepPoint {
            segment,
            value: v,
            seed,
            regime: setup.regime.tag().to_string(),
            lambda,
            sigma2,
            second_difference: None,
            third_difference: None,
        });
    }
    for i in 1..points.len().saturating_sub(1) {
        let (a, b, c) = (&points[i - 1], &points[i], &points[i + 1]);
        if a.segment == b.segment && b.segment == c.segment {
            let d = a.lambda.point - 2.0 * b.lambda.point + c.lambda.point;
            let se = (a.lambda.std_error.powi(2) + 4.0 * b.lambda.std_error.powi(2) + c.lambda.std_error.powi(2)).sqrt();
            points[i].second_difference = Some((d, se));
        }
    }
    for i in 1..points.len().saturating_sub(2) {
        let w = &points[i - 1..=i + 2];
        if w.iter().all(|p| p.segment == w[0].segment) {
            let coef = [-1.0, 3.0, -3.0, 1.0];
            let d: f64 = w.iter().zip(coef).map(|(p, c)| c * p.lambda.point).sum();
            let se = w
                .iter()
                .zip(coef)
                .map(|(p, c)| (c * p.lambda.std_error).powi(2))
                .sum::<f64>()
                .sqrt();
            points[i].third_difference = Some((d, se));
        }
    }
    Ok(SweepReport {
        param: param.label(),
        grid: grid.to_vec(),
        excluded,
        points,
    })
}

/// The degenerate drift (1−α)|2p−1| of a config, when A = B = G₀ and ℓ counts
/// stable letters only.
pub fn degenerate_reference(setup: &Setup) -> Option<f64> {
    (setup.pres.is_degenerate() && setup.config.length == LengthSpec::TOnly)
        .then(|| degenerate_drift(setup.params.alpha(), setup.params.p()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::catalog;

    fn cfg(degenerate: bool, p: f64) -> ExperimentConfig {
        let group = if degenerate {
            catalog::degenerate_klein_four()
        } else {
            catalog::example_klein_four()
        };
        let mut v = serde_json::to_value(&group).unwrap();
        let o = v.as_object_mut().unwrap();
        o.insert("mu0".into(), serde_json::json!({"a": 0.5, "b": 0.5}));
        o.insert("alpha".into(), 0.5.into());
        o.insert("p".into(), p.into());
        o.insert("steps".into(), 4000.into());
        o.insert("replicas".into(), 8.into());
        ExperimentConfig::from_json(&v.to_string()).unwrap()
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap().len(), 3);
        assert_eq!(parse_grid("1:1:0.5").unwrap(), vec![1.0]);
        for bad in ["0.1:0.3", "a:b:c", "0:1:0", "0:1:-1", "1:0:0.1", "0:1e9:1e-9"] {
            assert!(matches!(parse_grid(bad), Err(Error::Grid(_))), "{bad}");
        }
    }

    #[test]
    fn mu0_renormalises() {
        let c = with_param(&cfg(false, 0.5), &SweepParam::Mu0("a".into()), 0.8).unwrap();
        assert_eq!(c.mu0["a"], 0.8);
        assert!((c.mu0["b"] - 0.2).abs() < 1e-15);
        assert!(matches!(
            with_param(&c, &SweepParam::Mu0("zz".into()), 0.5),
            Err(Error::Grid(_))
        ));
    }

    #[test]
    fn drift_rejects_recurrent() {
        let s = cfg(true, 0.5).build().unwrap();
        let e = run_drift(&s).unwrap_err();
        assert!(matches!(e, Error::Regime(ref m) if m.contains("recurrent")));
    }

    #[test]
    fn drift_is_reproducible_and_thread_independent() {
        let s = cfg(false, 0.6).build().unwrap();
        let a = run_drift(&s).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_drift(&s).unwrap());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.lambda_direct.point > 0.0);
    }

    #[test]
    fn degenerate_sweep_skips_half() {
        let mut c = cfg(true, 0.7);
        c.length = LengthSpec::TOnly;
        c.steps = 1000;
        c.replicas = 4;
        let grid = parse_grid("0.4:0.6:0.05").unwrap();
        let r = run_sweep(&c, &SweepParam::P, &grid).unwrap();
        assert_eq!(r.excluded.len(), 1);
        assert_eq!(r.points.len(), 4);
        assert_eq!(r.points[0].segment, r.points[1].segment);
        assert_ne!(r.points[1].segment, r.points[2].segment);
        assert!(r.points.iter().all(|p| p.second_difference.is_none()));
    }

    #[test]
    fn one_step_degenerate_clt_gives_a_report_without_verdict() {
        let mut c = cfg(true, 0.8);
        c.length = LengthSpec::TOnly;
        let s = c.build().unwrap();
        let r = run_clt(&s, 1, 50, 1).unwrap();
        assert_eq!(r.passed, None);
        assert!(r.sigma2.is_none());
        assert!((r.sigma2_closed_form.unwrap() - 0.41).abs() < 1e-12);
    }

    #[test]
    fn zcheck_table_at_one() {
        let r = zcheck_values(0.5, 0.8, 1.0).unwrap();
        assert!((r.u - 0.4).abs() < 1e-12);
        assert!((r.lazy_green - 10.0 / 3.0).abs() < 1e-9);
    }
}

//! Sampling the right random walk X_n = ζ₁…ζ_n and tracking its normal form.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{BaseGroup, Elem, HnnPresentation, Letter, NormalForm, PushEffect, Sign, Syllable};

/// The step law μ: α·μ₀ on G₀, (1−α)p on t, (1−α)(1−p) on t⁻¹.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkParams {
    mu0: Vec<(Elem, f64)>,
    alpha: f64,
    p: f64,
}

fn semigroup_spans(base: &BaseGroup, support: &[Elem]) -> bool {
    match base {
        BaseGroup::Finite(g) => {
            let n = g.order();
            let mut seen = vec![false; n];
            let mut stack = vec![g.identity()];
            seen[g.identity().index()] = true;
            while let Some(x) = stack.pop() {
                for &s in support {
                    let y = g.mul(x, s);
                    if !seen[y.index()] {
                        seen[y.index()] = true;
                        stack.push(y);
                    }
                }
            }
            seen.into_iter().all(|b| b)
        }
        BaseGroup::Integers => {
            let gcd = support.iter().fold(0i64, |a, s| num_gcd(a, s.0.abs()));
            support.iter().any(|s| s.0 > 0) && support.iter().any(|s| s.0 < 0) && gcd == 1
        }
    }
}

fn num_gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        num_gcd(b, a % b)
    }
}

impl WalkParams {
    pub fn new(pres: &HnnPresentation, mu0: Vec<(Elem, f64)>, alpha: f64, p: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParams(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParams(format!("p = {p} must lie in (0, 1)")));
        }
        if mu0.is_empty() {
            return Err(Error::InvalidParams("mu0 is empty".into()));
        }
        let mut mu0 = mu0;
        mu0.sort_by_key(|&(g, _)| g);
        for w in mu0.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParams(format!("mu0 lists `{}` twice", pres.name(w[0].0))));
            }
        }
        for &(g, m) in &mu0 {
            if !pres.base().contains(g) {
                return Err(Error::InvalidParams(format!("mu0 element {g} is not in G0")));
            }
            if m.is_nan() || m <= 0.0 {
                return Err(Error::InvalidParams(format!("mu0(`{}`) = {m} must be > 0", pres.name(g))));
            }
        }
        let total: f64 = mu0.iter().map(|&(_, m)| m).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("mu0 sums to {total}, not 1")));
        }
        let support: Vec<Elem> = mu0.iter().map(|&(g, _)| g).collect();
        if !semigroup_spans(pres.base(), &support) {
            return Err(Error::InvalidParams("supp(mu0) does not generate G0 as a semigroup".into()));
        }
        Ok(Self { mu0, alpha, p })
    }

    pub fn mu0(&self) -> &[(Elem, f64)] {
        &self.mu0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn support(&self) -> Vec<Elem> {
        self.mu0.iter().map(|&(g, _)| g).collect()
    }

    /// The derived step law as (letter, mass) pairs.
    pub fn step_law(&self) -> Vec<(Letter, f64)> {
        let mut out: Vec<(Letter, f64)> = self
            .mu0
            .iter()
            .map(|&(g, m)| (Letter::Base(g), self.alpha * m))
            .collect();
        out.push((Letter::T, (1.0 - self.alpha) * self.p));
        out.push((Letter::TInv, (1.0 - self.alpha) * (1.0 - self.p)));
        out
    }

    pub fn mass(&self, x: Letter) -> f64 {
        self.step_law()
            .into_iter()
            .filter(|&(y, _)| y == x)
            .map(|(_, m)| m)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Recurrent,
    TransientDegenerate(Direction),
    TransientGeneral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

impl Regime {
    pub fn is_transient(self) -> bool {
        !matches!(self, Regime::Recurrent)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Regime::Recurrent => "recurrent",
            Regime::TransientDegenerate(Direction::Up) => "transient_degenerate_up",
            Regime::TransientDegenerate(Direction::Down) => "transient_degenerate_down",
            Regime::TransientGeneral => "transient_general",
        }
    }
}

/// Recurrent iff A = B = G₀ and p = 1/2.
pub fn classify_regime(pres: &HnnPresentation, params: &WalkParams) -> Regime {
    if !pres.is_degenerate() {
        Regime::TransientGeneral
    } else if params.p == 0.5 {
        Regime::Recurrent
    } else if params.p > 0.5 {
        Regime::TransientDegenerate(Direction::Up)
    } else {
        Regime::TransientDegenerate(Direction::Down)
    }
}

/// Draws letters from the step law.
#[derive(Debug, Clone)]
pub struct StepSampler {
    letters: Vec<Letter>,
    index: WeightedIndex<f64>,
}

impl StepSampler {
    pub fn new(params: &WalkParams) -> Self {
        let law = params.step_law();
        let letters = law.iter().map(|&(x, _)| x).collect();
        let index = WeightedIndex::new(law.iter().map(|&(_, m)| m)).expect("step law has positive mass");
        Self { letters, index }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Letter {
        self.letters[self.index.sample(rng)]
    }
}

/// Replica `r` of a run seeded with `master` draws from its own ChaCha stream,
/// so results do not depend on how replicas are scheduled.
pub fn replica_rng(master: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(replica);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Created,
    Destroyed,
}

/// A syllable appearing at or disappearing from `level`. For creations `h` is
/// the trailing element right after the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelEvent {
    pub time: u64,
    pub level: u32,
    pub syllable: Syllable,
    pub h: Elem,
    pub kind: EventKind,
}

/// The most recent creation of a level that is still alive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiveLevel {
    pub created_at: u64,
    pub syllable: Syllable,
    pub h: Elem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recording {
    /// Keep only the live-level stack: O(depth) memory.
    Summary,
    /// Also keep per-step depth deltas and the full event log.
    Full,
}

#[derive(Debug, Clone)]
pub struct TrajectoryState {
    pub current: NormalForm,
    pub step_count: u64,
    pub initial_depth: u32,
    /// One entry per live syllable of `current`, bottom first.
    pub live: Vec<LiveLevel>,
    pub depth_deltas: Vec<i8>,
    pub events: Vec<LevelEvent>,
    pub recording: Recording,
}

impl TrajectoryState {
    fn new(start: NormalForm, recording: Recording) -> Self {
        let live = start
            .syllables()
            .iter()
            .map(|&s| LiveLevel {
                created_at: 0,
                syllable: s,
                h: start.trailing(),
            })
            .collect();
        Self {
            initial_depth: start.t_length() as u32,
            current: start,
            step_count: 0,
            live,
            depth_deltas: Vec::new(),
            events: Vec::new(),
            recording,
        }
    }

    pub fn depth(&self) -> u32 {
        self.current.t_length() as u32
    }

    /// t_length(X_n) for n = 0..=step_count. Full recording only.
    pub fn depth_log(&self) -> Option<Vec<u32>> {
        if self.recording != Recording::Full {
            return None;
        }
        let mut out = Vec::with_capacity(self.depth_deltas.len() + 1);
        let mut d = self.initial_depth as i64;
        out.push(d as u32);
        for &x in &self.depth_deltas {
            d += x as i64;
            out.push(d as u32);
        }
        Some(out)
    }

    /// Rebuilds the depth log from the event log alone.
    pub fn depth_log_from_events(&self) -> Option<Vec<u32>> {
        if self.recording != Recording::Full {
            return None;
        }
        let mut out = vec![self.initial_depth; self.step_count as usize + 1];
        let mut d = self.initial_depth;
        let mut next = 1usize;
        for ev in &self.events {
            let t = ev.time as usize;
            while next < t {
                out[next] = d;
                next += 1;
            }
            d = match ev.kind {
                EventKind::Created => d + 1,
                EventKind::Destroyed => d - 1,
            };
            out[t] = d;
            next = t + 1;
        }
        while next < out.len() {
            out[next] = d;
            next += 1;
        }
        Some(out)
    }
}

/// A walk in progress.
pub struct Walker<'a> {
    pres: &'a HnnPresentation,
    sampler: &'a StepSampler,
    rng: ChaCha8Rng,
    state: TrajectoryState,
}

impl<'a> Walker<'a> {
    pub fn new(pres: &'a HnnPresentation, sampler: &'a StepSampler, rng: ChaCha8Rng, recording: Recording) -> Self {
        Self::from(pres, sampler, rng, pres.empty_word(), recording)
    }

    pub fn from(
        pres: &'a HnnPresentation,
        sampler: &'a StepSampler,
        rng: ChaCha8Rng,
        start: NormalForm,
        recording: Recording,
    ) -> Self {
        Self {
            pres,
            sampler,
            rng,
            state: TrajectoryState::new(start, recording),
        }
    }

    /// Multiplies the current position by `x` on the right, recording the step.
    #[inline]
    pub fn apply(&mut self, x: Letter) -> PushEffect {
        let st = &mut self.state;
        let effect = self.pres.push(&mut st.current, x);
        st.step_count += 1;
        let full = st.recording == Recording::Full;
        match effect {
            PushEffect::Base => {
                if full {
                    st.depth_deltas.push(0);
                }
            }
            PushEffect::Created(s) => {
                let h = st.current.trailing();
                st.live.push(LiveLevel {
                    created_at: st.step_count,
                    syllable: s,
                    h,
                });
                if full {
                    st.depth_deltas.push(1);
                    st.events.push(LevelEvent {
                        time: st.step_count,
                        level: st.live.len() as u32,
                        syllable: s,
                        h,
                        kind: EventKind::Created,
                    });
                }
            }
            PushEffect::Destroyed(s) => {
                let level = st.live.len() as u32;
                st.live.pop();
                if full {
                    st.depth_deltas.push(-1);
                    st.events.push(LevelEvent {
                        time: st.step_count,
                        level,
                        syllable: s,
                        h: st.current.trailing(),
                        kind: EventKind::Destroyed,
                    });
                }
            }
        }
        effect
    }

    #[inline]
    pub fn step(&mut self) -> (Letter, PushEffect) {
        let x = self.sampler.sample(&mut self.rng);
        (x, self.apply(x))
    }

    pub fn run(&mut self, n: u64) {
        for _ in 0..n {
            self.step();
        }
    }

    pub fn state(&self) -> &TrajectoryState {
        &self.state
    }

    pub fn into_state(self) -> TrajectoryState {
        self.state
    }

    pub fn current(&self) -> &NormalForm {
        &self.state.current
    }

    pub fn depth(&self) -> u32 {
        self.state.depth()
    }

    pub fn last_sign(&self) -> Option<Sign> {
        self.state.current.last_sign()
    }
}

/// Runs `n_steps` of the walk from the identity with full recording.
pub fn run_trajectory(pres: &HnnPresentation, params: &WalkParams, n_steps: u64, seed: u64) -> TrajectoryState {
    let sampler = StepSampler::new(params);
    let mut w = Walker::new(pres, &sampler, replica_rng(seed, 0), Recording::Full);
    w.run(n_steps);
    w.into_state()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{catalog, validate_presentation};
    use proptest::prelude::*;

    fn klein() -> HnnPresentation {
        validate_presentation(&catalog::example_klein_four(), &["a".into(), "b".into()]).unwrap()
    }

    fn uniform_mu0(p: &HnnPresentation, names: &[&str]) -> Vec<(Elem, f64)> {
        let m = 1.0 / names.len() as f64;
        names.iter().map(|n| (p.base().lookup(n).unwrap(), m)).collect()
    }

    #[test]
    fn params_validation() {
        let p = klein();
        let mu = uniform_mu0(&p, &["a", "b"]);
        assert!(WalkParams::new(&p, mu.clone(), 0.5, 0.5).is_ok());
        assert!(WalkParams::new(&p, mu.clone(), 1.0, 0.5).is_err());
        assert!(WalkParams::new(&p, mu.clone(), 0.5, 0.0).is_err());
        assert!(WalkParams::new(&p, uniform_mu0(&p, &["a"]), 0.5, 0.5).is_err());
        let skewed = vec![(mu[0].0, 0.5), (mu[1].0, 0.5 + 1e-9)];
        assert!(WalkParams::new(&p, skewed, 0.5, 0.5).is_err());
        let law: f64 = WalkParams::new(&p, mu, 0.3, 0.7).unwrap().step_law().iter().map(|x| x.1).sum();
        assert!((law - 1.0).abs() < 1e-15);
    }

    #[test]
    fn regimes() {
        let p = klein();
        let mu = uniform_mu0(&p, &["a", "b"]);
        for (alpha, pp) in [(0.5, 0.5), (0.2, 0.9), (0.7, 0.1)] {
            let params = WalkParams::new(&p, mu.clone(), alpha, pp).unwrap();
            assert_eq!(classify_regime(&p, &params), Regime::TransientGeneral);
        }
        let d = validate_presentation(&catalog::degenerate_klein_four(), &[]).unwrap();
        let mu = uniform_mu0(&d, &["a", "b"]);
        let at = |pp| classify_regime(&d, &WalkParams::new(&d, mu.clone(), 0.5, pp).unwrap());
        assert_eq!(at(0.5), Regime::Recurrent);
        assert_eq!(at(0.8), Regime::TransientDegenerate(Direction::Up));
        assert_eq!(at(0.2), Regime::TransientDegenerate(Direction::Down));
    }

    #[test]
    fn step_frequencies_match_the_law() {
        let p = klein();
        let params = WalkParams::new(&p, vec![(Elem(1), 0.25), (Elem(2), 0.75)], 0.5, 0.5).unwrap();
        let s = StepSampler::new(&params);
        let mut rng = replica_rng(11, 0);
        let n = 1_000_000u64;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            *counts.entry(s.sample(&mut rng)).or_insert(0u64) += 1;
        }
        for (x, m) in params.step_law() {
            let f = counts[&x] as f64 / n as f64;
            let se = (m * (1.0 - m) / n as f64).sqrt();
            assert!((f - m).abs() < 3.0 * se, "{x:?}: {f} vs {m}");
        }
    }

    #[test]
    fn zero_steps_and_determinism() {
        let p = klein();
        let params = WalkParams::new(&p, uniform_mu0(&p, &["a", "b"]), 0.5, 0.6).unwrap();
        let st = run_trajectory(&p, &params, 0, 3);
        assert_eq!(st.current, p.empty_word());
        assert!(st.events.is_empty() && st.depth_deltas.is_empty());
        let a = run_trajectory(&p, &params, 5000, 3);
        let b = run_trajectory(&p, &params, 5000, 3);
        assert_eq!(a.events, b.events);
        assert_eq!(a.depth_deltas, b.depth_deltas);
    }

    #[test]
    fn depth_projection_in_degenerate_regime_is_a_lazy_walk() {
        let d = validate_presentation(&catalog::degenerate_klein_four(), &[]).unwrap();
        let params = WalkParams::new(&d, uniform_mu0(&d, &["a", "b"]), 0.5, 0.8).unwrap();
        let sampler = StepSampler::new(&params);
        let mut w = Walker::new(&d, &sampler, replica_rng(5, 0), Recording::Summary);
        let n = 400_000u64;
        let (mut up, mut down) = (0u64, 0u64);
        let mut prev = 0i64;
        for _ in 0..n {
            w.step();
            let psi = w.current().signed_depth().unwrap();
            match psi - prev {
                1 => up += 1,
                -1 => down += 1,
                0 => {}
                _ => panic!("jump"),
            }
            prev = psi;
        }
        for (count, m) in [(up, 0.5 * 0.8), (down, 0.5 * 0.2)] {
            let f = count as f64 / n as f64;
            assert!((f - m).abs() < 3.0 * (m * (1.0 - m) / n as f64).sqrt(), "{f} vs {m}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn logs_are_consistent(seed in any::<u64>(), n in 0u64..3000, pp in 0.05f64..0.95) {
            let p = klein();
            let params = WalkParams::new(&p, uniform_mu0(&p, &["a", "b", "ab"]), 0.4, pp).unwrap();
            let sampler = StepSampler::new(&params);
            let mut w = Walker::new(&p, &sampler, replica_rng(seed, 0), Recording::Full);
            let mut letters = Vec::new();
            for _ in 0..n {
                letters.push(w.step().0);
            }
            let st = w.into_state();
            prop_assert_eq!(&st.current, &p.normalize(&letters));
            let log = st.depth_log().unwrap();
            prop_assert_eq!(log.len() as u64, n + 1);
            prop_assert_eq!(*log.last().unwrap() as usize, st.current.t_length());
            prop_assert_eq!(&log, &st.depth_log_from_events().unwrap());
            // creations and destructions alternate at every level
            let mut last = std::collections::HashMap::new();
            for ev in &st.events {
                if let Some(prev) = last.insert(ev.level, ev.kind) {
                    prop_assert_ne!(prev, ev.kind);
                }
            }
            prop_assert_eq!(st.live.len(), st.current.t_length());
        }
    }
}

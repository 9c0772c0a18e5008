//! Exit times, the (W_k, i_k) chain and regeneration cycles.
//!
//! An exit time e_k is the last time the walk creates a syllable at level k.
//! Because it depends on the whole future, a finished trajectory only tells us
//! e_k for levels that are still alive at the end. Levels close to the final
//! depth may still be destroyed later, so they are excluded through a safety
//! margin and a tail discard.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Elem, HnnPresentation, LengthFunction, Sign};
use crate::walk::{Direction, LiveLevel, Regime, TrajectoryState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitOptions {
    /// Levels within this many syllables of the final depth are unconfirmed.
    pub safety_margin: u32,
    /// Fraction of the confirmed levels dropped from the top.
    pub tail_discard: f64,
    /// Also return unconfirmed levels (flagged as such).
    pub include_unconfirmed: bool,
}

impl Default for ExitOptions {
    fn default() -> Self {
        Self {
            safety_margin: 10,
            tail_discard: 0.05,
            include_unconfirmed: false,
        }
    }
}

/// W = g t^{±1} h.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WRecord {
    pub g: Elem,
    pub sign: Sign,
    pub h: Elem,
}

impl WRecord {
    pub fn format(&self, pres: &HnnPresentation) -> String {
        let t = match self.sign {
            Sign::Plus => "t",
            Sign::Minus => "t^-1",
        };
        format!("{} {} {}", pres.name(self.g), t, pres.name(self.h))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitEvent {
    pub level: u32,
    pub exit_time: u64,
    pub increment: u64,
    pub w: WRecord,
    pub confirmed: bool,
}

/// Number of confirmed levels kept after the margin and the tail discard.
pub fn confirmed_count(final_depth: u32, opts: &ExitOptions) -> u32 {
    let k = final_depth.saturating_sub(opts.safety_margin);
    let drop = (opts.tail_discard * k as f64).floor() as u32;
    k - drop.min(k)
}

/// Exit events from the live-level stack of a finished walk started at the
/// identity.
pub fn exits_from_live(live: &[LiveLevel], opts: &ExitOptions) -> Vec<ExitEvent> {
    let keep = confirmed_count(live.len() as u32, opts) as usize;
    let n = if opts.include_unconfirmed { live.len() } else { keep };
    let mut out = Vec::with_capacity(n);
    let mut prev = 0u64;
    for (i, lv) in live.iter().take(n).enumerate() {
        out.push(ExitEvent {
            level: i as u32 + 1,
            exit_time: lv.created_at,
            increment: lv.created_at - prev,
            w: WRecord {
                g: lv.syllable.rep,
                sign: lv.syllable.sign,
                h: lv.h,
            },
            confirmed: i < keep,
        });
        prev = lv.created_at;
    }
    out
}

pub fn extract_exits(traj: &TrajectoryState, opts: &ExitOptions) -> Vec<ExitEvent> {
    exits_from_live(&traj.live, opts)
}

pub type ChainState = (WRecord, u64);

/// The (W_k, i_k) sequence of one trajectory with its transition counts.
#[derive(Debug, Clone, Default)]
pub struct Chain {
    pub states: Vec<ChainState>,
    pub transitions: BTreeMap<(ChainState, ChainState), u64>,
}

pub fn extract_chain(exits: &[ExitEvent]) -> Result<Chain> {
    if exits.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} confirmed exits, need at least 2",
            exits.len()
        )));
    }
    let states: Vec<ChainState> = exits.iter().map(|e| (e.w, e.increment)).collect();
    let mut transitions = BTreeMap::new();
    for w in states.windows(2) {
        *transitions.entry((w[0], w[1])).or_insert(0) += 1;
    }
    Ok(Chain { states, transitions })
}

impl Chain {
    /// Observed transitions with t₁ w₂ t₂ = e, which the chain must never make.
    pub fn forbidden_transitions(&self, e0: Elem) -> Vec<(ChainState, ChainState)> {
        self.transitions
            .keys()
            .filter(|((w1, _), (w2, _))| w2.g == e0 && w2.sign == w1.sign.flip())
            .copied()
            .collect()
    }

    /// Every observed W value reaches every other within at most two steps of
    /// the empirical transition graph projected to W (transitions do not
    /// depend on the increment of the source state).
    pub fn two_step_reachable(&self) -> Result<(), (WRecord, WRecord)> {
        let mut succ: BTreeMap<WRecord, BTreeSet<WRecord>> = BTreeMap::new();
        for ((a, _), (b, _)) in self.transitions.keys() {
            succ.entry(*a).or_default().insert(*b);
        }
        let nodes: BTreeSet<WRecord> = self.states.iter().map(|s| s.0).collect();
        for &u in &nodes {
            let one = succ.get(&u).cloned().unwrap_or_default();
            let mut reach = one.clone();
            for v in &one {
                if let Some(s) = succ.get(v) {
                    reach.extend(s.iter().copied());
                }
            }
            if let Some(&v) = nodes.iter().find(|v| !reach.contains(v)) {
                return Err((u, v));
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Chain) {
        self.states.extend_from_slice(&other.states);
        for (k, v) in &other.transitions {
            *self.transitions.entry(*k).or_insert(0) += v;
        }
    }
}

/// Normalised visit frequencies of the chain states.
pub fn empirical_pi(chain: &Chain) -> Result<BTreeMap<ChainState, f64>> {
    if chain.states.is_empty() {
        return Err(Error::InsufficientData("empty chain".into()));
    }
    let mut counts: BTreeMap<ChainState, u64> = BTreeMap::new();
    for s in &chain.states {
        *counts.entry(*s).or_insert(0) += 1;
    }
    let n = chain.states.len() as f64;
    Ok(counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect())
}

/// ‖π̂·Q̂ − π̂‖₁ with Q̂ the row-normalised empirical transition matrix.
pub fn stationarity_residual(chain: &Chain, pi: &BTreeMap<ChainState, f64>) -> f64 {
    let mut out_total: BTreeMap<ChainState, u64> = BTreeMap::new();
    for ((a, _), c) in &chain.transitions {
        *out_total.entry(*a).or_insert(0) += c;
    }
    let mut pushed: BTreeMap<ChainState, f64> = BTreeMap::new();
    for ((a, b), c) in &chain.transitions {
        let q = *c as f64 / out_total[a] as f64;
        *pushed.entry(*b).or_insert(0.0) += pi.get(a).copied().unwrap_or(0.0) * q;
    }
    let keys: BTreeSet<ChainState> = pi.keys().chain(pushed.keys()).copied().collect();
    keys.iter()
        .map(|k| (pushed.get(k).copied().unwrap_or(0.0) - pi.get(k).copied().unwrap_or(0.0)).abs())
        .sum()
}

/// The anchor stable-letter sign: (e₀ t e₀, 1), or its mirror when the
/// degenerate walk drifts downwards.
pub fn anchor_sign(regime: Regime) -> Sign {
    match regime {
        Regime::TransientDegenerate(Direction::Down) => Sign::Minus,
        _ => Sign::Plus,
    }
}

pub fn is_anchor(e: &ExitEvent, e0: Elem, sign: Sign) -> bool {
    e.increment == 1 && e.w.g == e0 && e.w.h == e0 && e.w.sign == sign
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegenerationCycle {
    pub index: u32,
    pub start: u64,
    pub end: u64,
    pub duration: u64,
    pub length_gain: f64,
    pub syllable_count: u64,
}

/// Cycles between consecutive anchor visits among `exits`. Gains are
/// ℓ([X_{T_i}]) − ℓ([X_{T_{i−1}}]), the ℓ-mass of the syllables stabilised
/// during the cycle.
pub fn extract_regenerations(
    pres: &HnnPresentation,
    exits: &[ExitEvent],
    ell: &LengthFunction,
    anchor: Sign,
) -> Result<Vec<RegenerationCycle>> {
    let e0 = pres.identity();
    let anchors: Vec<usize> = exits
        .iter()
        .enumerate()
        .filter(|(_, e)| is_anchor(e, e0, anchor))
        .map(|(i, _)| i)
        .collect();
    if anchors.is_empty() {
        return Err(Error::NoRegenerations);
    }
    let mut out = Vec::with_capacity(anchors.len().saturating_sub(1));
    for (i, w) in anchors.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let gain: f64 = exits[a + 1..=b]
            .iter()
            .map(|e| ell.base(pres, e.w.g) + ell.stable(e.w.sign))
            .sum();
        let (start, end) = (exits[a].exit_time, exits[b].exit_time);
        out.push(RegenerationCycle {
            index: i as u32 + 1,
            start,
            end,
            duration: end - start,
            length_gain: gain,
            syllable_count: (b - a) as u64,
        });
    }
    Ok(out)
}

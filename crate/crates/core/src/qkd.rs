//! Key distribution over flavor-entangled pairs.
//!
//! Alice and Bob sit at equal distances from the source on two baselines, `t1 < t2`. The
//! intact pair never produces the same flavor on both sides at equal times, so `{e, μ}`
//! anti-correlated coincidences become key bits and any same-flavor coincidence raises the
//! alarm. An intercept-resend eavesdropper measures both particles at `t_e` and forwards the
//! observed flavors as a product state; that state gives same-flavor coincidences everywhere
//! except at the zeros of a periodic function of the remaining flight time.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::bell::linspace;
use crate::error::{Error, Result};
use crate::oscillation::{
    coincidence_table, osc_probability, Flavor, MixingMatrix, OscillationParams,
};
use crate::sampling::{bernoulli, pick_weighted, substream};

pub const DEFAULT_PERIOD_CUTOFF: f64 = 10.0;
pub const PERIOD_TOLERANCE: f64 = 1e-9;
pub const DETECTABILITY_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveConfig {
    /// Interception time on both particles, before either detector.
    pub t_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QkdConfig {
    pub t1: f64,
    pub t2: f64,
    pub n_pairs: u64,
    /// Per-detector efficiency η.
    pub efficiency: f64,
    pub eve: Option<EveConfig>,
    pub seed: u64,
    /// Alarm when the same-flavor count exceeds this.
    pub alarm_threshold: u64,
    /// Probability that a pair is routed to baseline 1.
    pub baseline1_fraction: f64,
}

impl Default for QkdConfig {
    fn default() -> Self {
        QkdConfig {
            t1: 0.15,
            t2: 0.45,
            n_pairs: 100_000,
            efficiency: 1.0,
            eve: None,
            seed: 0x5eed_2007,
            alarm_threshold: 0,
            baseline1_fraction: 0.5,
        }
    }
}

impl QkdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t1 >= 0.0 && self.t1 < self.t2 && self.t2.is_finite()) {
            return Err(Error::config(format!(
                "baselines need 0 <= t1 < t2 (got {}, {})",
                self.t1, self.t2
            )));
        }
        if self.n_pairs == 0 {
            return Err(Error::config("n_pairs must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::config("efficiency must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.baseline1_fraction) {
            return Err(Error::config("baseline1_fraction must lie in [0, 1]"));
        }
        if let Some(eve) = self.eve {
            if !(eve.t_e >= 0.0 && eve.t_e < self.t1) {
                return Err(Error::config(format!(
                    "Eve needs 0 <= t_e < t1 (got {})",
                    eve.t_e
                )));
            }
        }
        Ok(())
    }
}

/// Key bit carried by a flavor on Alice's side; Bob's raw bit is the complement.
pub fn flavor_bit(f: Flavor) -> Option<u8> {
    match f {
        Flavor::E => Some(0),
        Flavor::Mu => Some(1),
        Flavor::Tau => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairEvent {
    pub pair_index: u64,
    pub baseline: u8,
    pub alice_flavor: Flavor,
    pub bob_flavor: Flavor,
    pub detected: bool,
    /// Alice's key bit for sifted events.
    pub sifted_bit: Option<u8>,
}

fn bits_as_string<S: Serializer>(bits: &[u8], s: S) -> std::result::Result<S::Ok, S::Error> {
    let text: String = bits
        .iter()
        .map(|b| if *b == 0 { '0' } else { '1' })
        .collect();
    s.serialize_str(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    pub baseline: u8,
    pub time: f64,
    pub pairs: u64,
    pub detected: u64,
    pub undetected: u64,
    /// `[alice][bob]` counts over detected pairs.
    pub coincidences: [[u64; 3]; 3],
    pub same_flavor_count: u64,
    /// Detected coincidences with a ν_τ on either side.
    pub tau_count: u64,
    /// Same-flavor count over detected pairs; `None` when nothing was detected.
    pub same_flavor_rate: Option<f64>,
}

impl BaselineReport {
    fn new(baseline: u8, time: f64) -> Self {
        BaselineReport {
            baseline,
            time,
            pairs: 0,
            detected: 0,
            undetected: 0,
            coincidences: [[0; 3]; 3],
            same_flavor_count: 0,
            tau_count: 0,
            same_flavor_rate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QkdReport {
    pub config: QkdConfig,
    pub baselines: [BaselineReport; 2],
    pub detected: u64,
    pub undetected: u64,
    pub same_flavor_count: u64,
    pub tau_discarded: u64,
    pub sifted_key_bits: usize,
    #[serde(serialize_with = "bits_as_string")]
    pub alice_bits: Vec<u8>,
    /// Bob's raw bits before inversion.
    #[serde(serialize_with = "bits_as_string")]
    pub bob_bits: Vec<u8>,
    pub alarm: bool,
}

struct Channel {
    /// Per baseline: joint outcome weights (no Eve) or per-resent-flavor transition rows.
    joint: [[f64; 9]; 2],
    eve_joint: [f64; 9],
    /// `[baseline][from][to]`
    transit: [[[f64; 3]; 3]; 2],
}

impl Channel {
    fn new(cfg: &QkdConfig, p: &OscillationParams, m: &MixingMatrix) -> Self {
        let flat = |t: f64| {
            let tab = coincidence_table(t, t, p, m);
            let mut w = [0.0; 9];
            for (k, x) in tab.p.iter().flatten().enumerate() {
                w[k] = x.max(0.0);
            }
            w
        };
        let joint = [flat(cfg.t1), flat(cfg.t2)];
        let (eve_joint, transit) = match cfg.eve {
            Some(eve) => {
                let mut transit = [[[0.0; 3]; 3]; 2];
                for (b, tb) in [cfg.t1, cfg.t2].into_iter().enumerate() {
                    for a in Flavor::ALL {
                        for x in Flavor::ALL {
                            transit[b][a.index()][x.index()] =
                                osc_probability(a, x, tb - eve.t_e, p, m).max(0.0);
                        }
                    }
                }
                (flat(eve.t_e), transit)
            }
            None => ([0.0; 9], [[[0.0; 3]; 3]; 2]),
        };
        Channel {
            joint,
            eve_joint,
            transit,
        }
    }
}

fn simulate_pair(cfg: &QkdConfig, ch: &Channel, index: u64) -> PairEvent {
    let mut rng = substream(cfg.seed, index);
    let baseline: u8 = if bernoulli(&mut rng, cfg.baseline1_fraction) {
        1
    } else {
        2
    };
    let b = usize::from(baseline - 1);
    let (alice, bob) = if cfg.eve.is_some() {
        let k = pick_weighted(&mut rng, &ch.eve_joint);
        let (ea, eb) = (k / 3, k % 3);
        let a = pick_weighted(&mut rng, &ch.transit[b][ea]);
        let o = pick_weighted(&mut rng, &ch.transit[b][eb]);
        (a, o)
    } else {
        let k = pick_weighted(&mut rng, &ch.joint[b]);
        (k / 3, k % 3)
    };
    let alice = Flavor::ALL[alice];
    let bob = Flavor::ALL[bob];
    let detected = bernoulli(&mut rng, cfg.efficiency) & bernoulli(&mut rng, cfg.efficiency);
    let sifted_bit = match (detected, flavor_bit(alice), flavor_bit(bob)) {
        (true, Some(x), Some(y)) if x != y => Some(x),
        _ => None,
    };
    PairEvent {
        pair_index: index,
        baseline,
        alice_flavor: alice,
        bob_flavor: bob,
        detected,
        sifted_bit,
    }
}

/// Per-pair outcomes; pair `i` uses its own random stream, so the list is independent of the
/// thread count.
pub fn simulate_events(
    cfg: &QkdConfig,
    p: &OscillationParams,
    m: &MixingMatrix,
) -> Result<Vec<PairEvent>> {
    cfg.validate()?;
    let ch = Channel::new(cfg, p, m);
    Ok((0..cfg.n_pairs)
        .into_par_iter()
        .map(|i| simulate_pair(cfg, &ch, i))
        .collect())
}

pub fn summarize(cfg: &QkdConfig, events: &[PairEvent]) -> QkdReport {
    let mut baselines = [
        BaselineReport::new(1, cfg.t1),
        BaselineReport::new(2, cfg.t2),
    ];
    let mut alice_bits = Vec::new();
    let mut bob_bits = Vec::new();
    for ev in events {
        let rep = &mut baselines[usize::from(ev.baseline - 1)];
        rep.pairs += 1;
        if !ev.detected {
            rep.undetected += 1;
            continue;
        }
        rep.detected += 1;
        rep.coincidences[ev.alice_flavor.index()][ev.bob_flavor.index()] += 1;
        if ev.alice_flavor == ev.bob_flavor {
            rep.same_flavor_count += 1;
        }
        if ev.alice_flavor == Flavor::Tau || ev.bob_flavor == Flavor::Tau {
            rep.tau_count += 1;
        }
        if let (Some(a), Some(b)) = (ev.sifted_bit, flavor_bit(ev.bob_flavor)) {
            alice_bits.push(a);
            bob_bits.push(b);
        }
    }
    for rep in &mut baselines {
        rep.same_flavor_rate =
            (rep.detected > 0).then(|| rep.same_flavor_count as f64 / rep.detected as f64);
    }
    let same_flavor_count = baselines.iter().map(|b| b.same_flavor_count).sum();
    QkdReport {
        config: *cfg,
        detected: baselines.iter().map(|b| b.detected).sum(),
        undetected: baselines.iter().map(|b| b.undetected).sum(),
        same_flavor_count,
        tau_discarded: baselines.iter().map(|b| b.tau_count).sum(),
        sifted_key_bits: alice_bits.len(),
        alice_bits,
        bob_bits,
        alarm: same_flavor_count > cfg.alarm_threshold,
        baselines,
    }
}

pub fn run_protocol(cfg: &QkdConfig, p: &OscillationParams, m: &MixingMatrix) -> Result<QkdReport> {
    let events = simulate_events(cfg, p, m)?;
    Ok(summarize(cfg, &events))
}

/// `pair_index,baseline,alice_flavor,bob_flavor,detected,sifted_bit`
pub fn write_events_csv<W: Write>(events: &[PairEvent], mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "pair_index,baseline,alice_flavor,bob_flavor,detected,sifted_bit"
    )?;
    for ev in events {
        let bit = ev.sifted_bit.map(|b| b.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            ev.pair_index, ev.baseline, ev.alice_flavor, ev.bob_flavor, ev.detected, bit
        )?;
    }
    Ok(())
}

/// Same-flavor probability for a product state `(a, b)` after both particles fly for `tau`.
pub fn product_same_flavor_prob(
    resent: (Flavor, Flavor),
    tau: f64,
    p: &OscillationParams,
    m: &MixingMatrix,
) -> f64 {
    Flavor::ALL
        .iter()
        .map(|&x| osc_probability(resent.0, x, tau, p, m) * osc_probability(resent.1, x, tau, p, m))
        .sum()
}

/// Expected same-flavor rate at a baseline `t_b` when Eve intercepts at `t_e`, averaged over
/// her equal-time measurement outcomes.
pub fn eve_same_flavor_prob(t_e: f64, t_b: f64, p: &OscillationParams, m: &MixingMatrix) -> f64 {
    let tab = coincidence_table(t_e, t_e, p, m);
    let mut total = 0.0;
    for a in Flavor::ALL {
        for b in Flavor::ALL {
            total += tab.get(a, b) * product_same_flavor_prob((a, b), t_b - t_e, p, m);
        }
    }
    total
}

/// Deviation of the flavor-basis propagator at `t` from a pure global phase.
fn recurrence_defect(t: f64, p: &OscillationParams, m: &MixingMatrix) -> f64 {
    let w = p.omegas();
    let u = m.rows();
    let mut prop = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (a, row) in prop.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            for i in 0..3 {
                *cell += Complex64::from_polar(u[a][i] * u[b][i], -w[i] * t);
            }
        }
    }
    let g = prop[0][0] / prop[0][0].norm().max(f64::MIN_POSITIVE);
    let mut worst = 0.0_f64;
    for (a, row) in prop.iter().enumerate() {
        for (b, cell) in row.iter().enumerate() {
            let target = if a == b { g } else { Complex64::new(0.0, 0.0) };
            worst = worst.max((cell - target).norm());
        }
    }
    worst
}

/// Smallest `T ≤ cutoff` after which single-particle evolution returns to a global phase,
/// or `None` when the phase rates are incommensurate on that scale.
///
/// Any period is a multiple of `2π/Δω` for the slowest rate difference `Δω`, so those are the
/// only candidates tested.
pub fn same_flavor_zero_period(
    p: &OscillationParams,
    m: &MixingMatrix,
    cutoff: f64,
) -> Option<f64> {
    let w = p.omegas();
    let slowest = [w[1] - w[0], w[2] - w[1], w[2] - w[0]]
        .into_iter()
        .map(f64::abs)
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !slowest.is_finite() {
        return None;
    }
    let base = std::f64::consts::TAU / slowest;
    (1..)
        .map(|k| base * k as f64)
        .take_while(|t| *t <= cutoff)
        .find(|&t| recurrence_defect(t, p, m) <= PERIOD_TOLERANCE)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detectability {
    /// Smallest worst-baseline same-flavor rate Eve can achieve.
    pub min_max: f64,
    /// Interception time achieving it.
    pub t_e: f64,
}

/// Eve's best hiding spot: minimum over `t_e ∈ [0, t1]` of the larger of the two baselines'
/// expected same-flavor rates, with `t2 = t1 + spacing`. A positive value means Eve cannot
/// intercept anywhere without raising the alarm.
pub fn eve_detectability(
    t1: f64,
    spacing: f64,
    p: &OscillationParams,
    m: &MixingMatrix,
) -> Result<Detectability> {
    if !(spacing > 0.0 && t1 >= 0.0 && t1.is_finite() && spacing.is_finite()) {
        return Err(Error::config(
            "eve_detectability needs t1 >= 0 and spacing > 0",
        ));
    }
    let t2 = t1 + spacing;
    let values: Vec<(f64, f64)> = linspace(0.0, t1, DETECTABILITY_GRID + 1)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|t_e| {
            let worst =
                eve_same_flavor_prob(t_e, t1, p, m).max(eve_same_flavor_prob(t_e, t2, p, m));
            (t_e, worst)
        })
        .collect();
    let (t_e, min_max) =
        values.into_iter().fold(
            (0.0, f64::INFINITY),
            |acc, v| if v.1 < acc.1 { v } else { acc },
        );
    Ok(Detectability { min_max, t_e })
}

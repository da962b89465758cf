//! Clauser–Horne combination and the Hardy-type ratio over four detection times.
//!
//! With left times `l1, l2` and right times `r1, r2` the six probabilities are
//!
//! ```text
//! CH = P(l2=e, r2=μ) − P(l2=e, r1=e) + P(l1=μ, r2=μ) + P(l1=μ, r1=e) − P(·, r2=μ) − P(l1=μ, ·)
//! H  = P(l1=μ, r2=μ) / [P(·, r2=μ) − P(l2=e, r2=μ) + P(l1=μ, ·) − P(l1=μ, r1=e) + P(l2=e, r1=e)]
//! ```
//!
//! so `CH = numerator − denominator`, local models obey `CH ≤ 0` and `H ≤ 1`.

use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscillation::{
    coincidence_table, marginal_probability, Flavor, MixingMatrix, OscillationParams, Side,
};

/// `h` is reported only when the denominator exceeds this.
pub const DENOMINATOR_GUARD: f64 = 1e-9;

pub const DEFAULT_SCAN_RESOLUTION: usize = 400;

const CONTAMINATION_SCAN_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellTimes {
    pub t_l1: f64,
    pub t_l2: f64,
    pub t_r1: f64,
    pub t_r2: f64,
}

impl BellTimes {
    /// The largest-violation configuration quoted for the default physics, `H ≈ 1.71`.
    pub const REFERENCE_OPTIMUM: BellTimes = BellTimes {
        t_l1: 0.579497,
        t_l2: 0.0579214,
        t_r1: 0.0001,
        t_r2: 0.180264,
    };

    pub fn new(t_l1: f64, t_l2: f64, t_r1: f64, t_r2: f64) -> Result<Self> {
        let bt = BellTimes {
            t_l1,
            t_l2,
            t_r1,
            t_r2,
        };
        bt.validate()?;
        Ok(bt)
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().all(|t| t.is_finite() && *t >= 0.0) {
            Ok(())
        } else {
            Err(Error::config(format!(
                "detection times must be finite and nonnegative: {self:?}"
            )))
        }
    }

    /// Order `[l1, l2, r1, r2]`.
    pub fn to_array(&self) -> [f64; 4] {
        [self.t_l1, self.t_l2, self.t_r1, self.t_r2]
    }

    pub fn from_array(t: [f64; 4]) -> Self {
        BellTimes {
            t_l1: t[0],
            t_l2: t[1],
            t_r1: t[2],
            t_r2: t[3],
        }
    }

    pub fn get(&self, slot: TimeSlot) -> f64 {
        self.to_array()[slot.index()]
    }

    pub fn with(mut self, slot: TimeSlot, value: f64) -> Self {
        match slot {
            TimeSlot::L1 => self.t_l1 = value,
            TimeSlot::L2 => self.t_l2 = value,
            TimeSlot::R1 => self.t_r1 = value,
            TimeSlot::R2 => self.t_r2 = value,
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeSlot {
    L1,
    L2,
    R1,
    R2,
}

impl TimeSlot {
    pub fn index(self) -> usize {
        match self {
            TimeSlot::L1 => 0,
            TimeSlot::L2 => 1,
            TimeSlot::R1 => 2,
            TimeSlot::R2 => 3,
        }
    }
}

impl FromStr for TimeSlot {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(TimeSlot::L1),
            "l2" => Ok(TimeSlot::L2),
            "r1" => Ok(TimeSlot::R1),
            "r2" => Ok(TimeSlot::R2),
            other => Err(format!(
                "unknown time slot `{other}` (expected l1, l2, r1 or r2)"
            )),
        }
    }
}

/// The six probabilities entering both inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellTerms {
    /// P(l2 = e, r2 = μ)
    pub p_l2e_r2mu: f64,
    /// P(l2 = e, r1 = e)
    pub p_l2e_r1e: f64,
    /// P(l1 = μ, r2 = μ)
    pub p_l1mu_r2mu: f64,
    /// P(l1 = μ, r1 = e)
    pub p_l1mu_r1e: f64,
    /// P(any, r2 = μ)
    pub p_any_r2mu: f64,
    /// P(l1 = μ, any)
    pub p_l1mu_any: f64,
}

impl BellTerms {
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.p_l2e_r2mu,
            self.p_l2e_r1e,
            self.p_l1mu_r2mu,
            self.p_l1mu_r1e,
            self.p_any_r2mu,
            self.p_l1mu_any,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        BellTerms {
            p_l2e_r2mu: a[0],
            p_l2e_r1e: a[1],
            p_l1mu_r2mu: a[2],
            p_l1mu_r1e: a[3],
            p_any_r2mu: a[4],
            p_l1mu_any: a[5],
        }
    }

    pub fn ch(&self) -> f64 {
        self.p_l2e_r2mu - self.p_l2e_r1e + self.p_l1mu_r2mu + self.p_l1mu_r1e
            - self.p_any_r2mu
            - self.p_l1mu_any
    }

    pub fn h_numerator(&self) -> f64 {
        self.p_l1mu_r2mu
    }

    pub fn h_denominator(&self) -> f64 {
        self.p_any_r2mu - self.p_l2e_r2mu + self.p_l1mu_any - self.p_l1mu_r1e + self.p_l2e_r1e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellResult {
    pub terms: BellTerms,
    pub ch: f64,
    pub h_numerator: f64,
    pub h_denominator: f64,
    /// `None` when the denominator does not exceed [`DENOMINATOR_GUARD`].
    pub h: Option<f64>,
}

impl BellResult {
    pub fn from_terms(terms: BellTerms) -> Self {
        let h_numerator = terms.h_numerator();
        let h_denominator = terms.h_denominator();
        let h = (h_denominator > DENOMINATOR_GUARD).then(|| h_numerator / h_denominator);
        BellResult {
            terms,
            ch: terms.ch(),
            h_numerator,
            h_denominator,
            h,
        }
    }

    pub fn violates(&self) -> bool {
        self.h.is_some_and(|h| h > 1.0)
    }

    /// Fails with [`Error::NonPositiveDenominator`] when `h` is undefined.
    pub fn into_defined(self) -> Result<Self> {
        if self.h.is_some() {
            Ok(self)
        } else {
            Err(Error::NonPositiveDenominator(Box::new(self)))
        }
    }
}

pub fn bell_terms(bt: &BellTimes, p: &OscillationParams, m: &MixingMatrix) -> BellTerms {
    let l2r2 = coincidence_table(bt.t_l2, bt.t_r2, p, m);
    let l2r1 = coincidence_table(bt.t_l2, bt.t_r1, p, m);
    let l1r2 = coincidence_table(bt.t_l1, bt.t_r2, p, m);
    let l1r1 = coincidence_table(bt.t_l1, bt.t_r1, p, m);
    BellTerms {
        p_l2e_r2mu: l2r2.get(Flavor::E, Flavor::Mu),
        p_l2e_r1e: l2r1.get(Flavor::E, Flavor::E),
        p_l1mu_r2mu: l1r2.get(Flavor::Mu, Flavor::Mu),
        p_l1mu_r1e: l1r1.get(Flavor::Mu, Flavor::E),
        p_any_r2mu: marginal_probability(Side::Right, Flavor::Mu, bt.t_r2, p, m),
        p_l1mu_any: marginal_probability(Side::Left, Flavor::Mu, bt.t_l1, p, m),
    }
}

/// Full result regardless of whether `h` is defined.
pub fn evaluate(bt: &BellTimes, p: &OscillationParams, m: &MixingMatrix) -> BellResult {
    BellResult::from_terms(bell_terms(bt, p, m))
}

pub fn ch_value(bt: &BellTimes, p: &OscillationParams, m: &MixingMatrix) -> f64 {
    bell_terms(bt, p, m).ch()
}

pub fn h_value(bt: &BellTimes, p: &OscillationParams, m: &MixingMatrix) -> Result<BellResult> {
    evaluate(bt, p, m).into_defined()
}

/// Two of the four times swept over a rectangle, the other two held at `base`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridScanSpec {
    pub axes: (TimeSlot, TimeSlot),
    pub base: BellTimes,
    pub range1: (f64, f64),
    pub range2: (f64, f64),
    pub resolution: (usize, usize),
}

impl GridScanSpec {
    /// Near-site detectors: `(l2, r1)` over `[0, 0.25]²`.
    pub fn near_site() -> Self {
        GridScanSpec {
            axes: (TimeSlot::L2, TimeSlot::R1),
            base: BellTimes::REFERENCE_OPTIMUM,
            range1: (0.0, 0.25),
            range2: (0.0, 0.25),
            resolution: (DEFAULT_SCAN_RESOLUTION, DEFAULT_SCAN_RESOLUTION),
        }
    }

    /// Far-site detectors: `(l1, r2)` over `[0, 0.6] × [0, 0.3]`.
    pub fn far_site() -> Self {
        GridScanSpec {
            axes: (TimeSlot::L1, TimeSlot::R2),
            base: BellTimes::REFERENCE_OPTIMUM,
            range1: (0.0, 0.6),
            range2: (0.0, 0.3),
            resolution: (DEFAULT_SCAN_RESOLUTION, DEFAULT_SCAN_RESOLUTION),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.0 == self.axes.1 {
            return Err(Error::config("scan axes must be two different time slots"));
        }
        for (lo, hi) in [self.range1, self.range2] {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
                return Err(Error::config(format!(
                    "scan range [{lo}, {hi}] needs 0 <= lo < hi"
                )));
            }
        }
        if self.resolution.0 < 2 || self.resolution.1 < 2 {
            return Err(Error::config("scan resolution must be at least 2 per axis"));
        }
        self.base.validate()
    }
}

/// `n` evenly spaced points from `lo` to `hi`, both included.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    let step = if n > 1 {
        (hi - lo) / (n - 1) as f64
    } else {
        0.0
    };
    (0..n).map(move |k| {
        if k + 1 == n && n > 1 {
            hi
        } else {
            lo + step * k as f64
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub axis1: f64,
    pub axis2: f64,
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridScan {
    pub spec: GridScanSpec,
    /// Row-major: `axis1` outer, `axis2` inner.
    pub cells: Vec<GridCell>,
    pub max: Option<f64>,
    pub argmax: Option<(f64, f64)>,
}

impl GridScan {
    pub fn violating_cells(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.h.is_some_and(|h| h > 1.0))
            .count()
    }

    /// `axis1,axis2,h,defined`; undefined cells leave `h` empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "axis1,axis2,h,defined")?;
        for c in &self.cells {
            match c.h {
                Some(h) => writeln!(out, "{},{},{},true", c.axis1, c.axis2, h)?,
                None => writeln!(out, "{},{},,false", c.axis1, c.axis2)?,
            }
        }
        Ok(())
    }
}

pub fn scan_h(spec: &GridScanSpec, p: &OscillationParams, m: &MixingMatrix) -> Result<GridScan> {
    spec.validate()?;
    let axis1: Vec<f64> = linspace(spec.range1.0, spec.range1.1, spec.resolution.0).collect();
    let axis2: Vec<f64> = linspace(spec.range2.0, spec.range2.1, spec.resolution.1).collect();
    let (slot1, slot2) = spec.axes;

    let rows: Vec<Vec<GridCell>> = axis1
        .par_iter()
        .map(|&a1| {
            axis2
                .iter()
                .map(|&a2| {
                    let bt = spec.base.with(slot1, a1).with(slot2, a2);
                    GridCell {
                        axis1: a1,
                        axis2: a2,
                        h: evaluate(&bt, p, m).h,
                    }
                })
                .collect()
        })
        .collect();
    let cells: Vec<GridCell> = rows.into_iter().flatten().collect();

    let mut max: Option<f64> = None;
    let mut argmax = None;
    for c in &cells {
        if let Some(h) = c.h {
            if max.is_none_or(|best| h > best) {
                max = Some(h);
                argmax = Some((c.axis1, c.axis2));
            }
        }
    }
    Ok(GridScan {
        spec: *spec,
        cells,
        max,
        argmax,
    })
}

/// Probability of `fixed_flavor` at `fixed_time` on `side` together with ν_τ at `t` on the
/// opposite side.
pub fn tau_contamination(
    side: Side,
    fixed_time: f64,
    fixed_flavor: Flavor,
    t: f64,
    p: &OscillationParams,
    m: &MixingMatrix,
) -> f64 {
    match side {
        Side::Left => coincidence_table(fixed_time, t, p, m).get(fixed_flavor, Flavor::Tau),
        Side::Right => coincidence_table(t, fixed_time, p, m).get(Flavor::Tau, fixed_flavor),
    }
}

/// Global minimum of [`tau_contamination`] over `range`: dense scan, then golden-section
/// refinement inside the bracketing cells. Returns `(t*, value)`.
pub fn find_contamination_minimum(
    side: Side,
    fixed_time: f64,
    fixed_flavor: Flavor,
    range: (f64, f64),
    p: &OscillationParams,
    m: &MixingMatrix,
) -> Result<(f64, f64)> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::EmptyRange { lo, hi });
    }
    let f = |t: f64| tau_contamination(side, fixed_time, fixed_flavor, t, p, m);
    if lo == hi {
        return Ok((lo, f(lo)));
    }

    let grid: Vec<f64> = linspace(lo, hi, CONTAMINATION_SCAN_POINTS).collect();
    let (k, best) =
        grid.iter()
            .map(|&t| f(t))
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (k, v)| if v < acc.1 { (k, v) } else { acc },
            );

    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(grid.len() - 1)];
    let (t_ref, v_ref) = golden_section_min(f, a, b, 1e-13, 200);
    if v_ref < best {
        Ok((t_ref, v_ref))
    } else {
        Ok((grid[k], best))
    }
}

/// Minimizes a unimodal `f` on `[a, b]`.
pub(crate) fn golden_section_min<F: Fn(f64) -> f64>(
    f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

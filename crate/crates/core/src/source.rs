//! Tau-decay pair source: energy spectrum, distance conversions and energy smearing.
//!
//! For a collinear antineutrino pair with mean energy `E` and half-difference `ε` the rate is
//! `dΓ ∝ (m_μ − E/2)(m_τ − 2E)² E⁴ dE dε`; it does not depend on `ε`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{golden_section_min, linspace, BellResult, BellTerms, BellTimes};
use crate::error::{Error, Result};
use crate::oscillation::{MixingMatrix, OscillationParams};

/// `L[km] = s · E[GeV] · KM_PER_S_GEV`.
pub const KM_PER_S_GEV: f64 = 1e5 / 2.54;

/// Energy at which the quoted optimal detector distances come out exactly.
pub const DISTANCE_TABLE_ENERGY_GEV: f64 = 0.106;

/// Working energy just above the muon production threshold.
pub const WORKING_ENERGY_GEV: f64 = 0.107;

pub const DEFAULT_QUADRATURE_POINTS: usize = 129;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    /// GeV
    pub m_tau: f64,
    /// GeV
    pub m_mu: f64,
    /// GeV⁻²; only enters the overall rate prefactor.
    pub g_fermi: f64,
    /// `[E_min, E_max]` in GeV.
    pub e_window: (f64, f64),
    /// GeV
    pub eps_halfwidth: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            m_tau: 1.77686,
            m_mu: 0.10566,
            g_fermi: 1.16637e-5,
            e_window: (0.095, 0.12),
            eps_halfwidth: 0.005,
        }
    }
}

impl SourceConfig {
    /// Upper end of the interval on which the spectral shape is nonnegative.
    pub fn positivity_limit(&self) -> f64 {
        (2.0 * self.m_mu).min(0.5 * self.m_tau)
    }

    /// `6 G_F² / (π⁵ m_μ⁴)`, the factor dropped from [`spectral_density`].
    pub fn width_prefactor(&self) -> f64 {
        6.0 * self.g_fermi.powi(2) / (std::f64::consts::PI.powi(5) * self.m_mu.powi(4))
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.e_window;
        if !(self.m_mu > 0.0 && self.m_tau > 0.0) {
            return Err(Error::config("masses must be positive"));
        }
        if !(lo > 0.0 && lo < hi && hi < self.positivity_limit()) {
            return Err(Error::config(format!(
                "energy window [{lo}, {hi}] must satisfy 0 < E_min < E_max < {}",
                self.positivity_limit()
            )));
        }
        if !(self.eps_halfwidth >= 0.0 && self.eps_halfwidth.is_finite()) {
            return Err(Error::config(
                "eps_halfwidth must be finite and nonnegative",
            ));
        }
        Ok(())
    }
}

/// Unnormalized pair spectrum `(m_μ − E/2)(m_τ − 2E)² E⁴`.
pub fn spectral_density(energy: f64, cfg: &SourceConfig) -> Result<f64> {
    let limit = cfg.positivity_limit();
    if !(0.0..=limit).contains(&energy) {
        return Err(Error::OutOfDomain { energy, limit });
    }
    Ok(shape(energy, cfg).max(0.0))
}

fn shape(e: f64, cfg: &SourceConfig) -> f64 {
    (cfg.m_mu - 0.5 * e) * (cfg.m_tau - 2.0 * e).powi(2) * e.powi(4)
}

fn max_on(cfg: &SourceConfig, lo: f64, hi: f64) -> (f64, f64) {
    let neg = |e: f64| -shape(e, cfg);
    let n = 2001;
    let grid: Vec<f64> = linspace(lo, hi, n).collect();
    let k = (0..n)
        .min_by(|&a, &b| neg(grid[a]).total_cmp(&neg(grid[b])))
        .unwrap_or(0);
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(n - 1)];
    let (x, fx) = golden_section_min(neg, a, b, 1e-14, 200);
    if -fx >= shape(grid[k], cfg) {
        (x, -fx)
    } else {
        (grid[k], shape(grid[k], cfg))
    }
}

/// Location of the spectral maximum over the whole positivity domain.
pub fn spectral_mode(cfg: &SourceConfig) -> f64 {
    max_on(cfg, 0.0, cfg.positivity_limit()).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    /// GeV
    pub e_mean: f64,
    /// GeV
    pub eps: f64,
}

/// Rejection sampler over the configured energy window.
#[derive(Debug, Clone)]
pub struct EnergySampler {
    cfg: SourceConfig,
    envelope: f64,
}

impl EnergySampler {
    pub fn new(cfg: &SourceConfig) -> Result<Self> {
        cfg.validate()?;
        let (_, peak) = max_on(cfg, cfg.e_window.0, cfg.e_window.1);
        // the flat envelope must not dip below the density anywhere in the window
        Ok(EnergySampler {
            cfg: *cfg,
            envelope: peak * (1.0 + 1e-9),
        })
    }

    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> EnergySample {
        let (lo, hi) = self.cfg.e_window;
        let e_mean = loop {
            let e = lo + rng.random::<f64>() * (hi - lo);
            if rng.random::<f64>() * self.envelope < shape(e, &self.cfg) {
                break e;
            }
        };
        let h = self.cfg.eps_halfwidth;
        let eps = if h > 0.0 {
            rng.random_range(-h..=h)
        } else {
            0.0
        };
        EnergySample { e_mean, eps }
    }
}

/// One draw; build an [`EnergySampler`] once when drawing many.
pub fn sample_pair_energy<R: Rng + ?Sized>(
    cfg: &SourceConfig,
    rng: &mut R,
) -> Result<EnergySample> {
    Ok(EnergySampler::new(cfg)?.sample(rng))
}

pub fn s_to_distance(s: f64, energy_gev: f64) -> f64 {
    s * energy_gev * KM_PER_S_GEV
}

pub fn distance_to_s(distance_km: f64, energy_gev: f64) -> Result<f64> {
    if energy_gev == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    Ok(distance_km / (energy_gev * KM_PER_S_GEV))
}

/// Detector distances in km for `[l1, l2, r1, r2]`.
pub fn times_to_distances(bt: &BellTimes, energy_gev: f64) -> [f64; 4] {
    bt.to_array().map(|s| s_to_distance(s, energy_gev))
}

/// Composite Simpson weights on `n` (odd) equally spaced nodes, normalized to sum to one.
fn simpson_weights(n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 || k + 1 == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            }
        })
        .collect();
    let total = 3.0 * (n - 1) as f64;
    for x in &mut w {
        *x /= total;
    }
    w
}

/// Averages every inequality term over a uniform energy band of relative width `spread`
/// around `e_center` with the detector distances held fixed, then forms `CH` and `H` from the
/// averaged terms.
pub fn smeared_terms(
    distances_km: [f64; 4],
    e_center: f64,
    spread: f64,
    n_points: usize,
    p: &OscillationParams,
    m: &MixingMatrix,
) -> Result<BellTerms> {
    if !(0.0..2.0).contains(&spread) {
        return Err(Error::config(format!(
            "relative spread {spread} must lie in [0, 2)"
        )));
    }
    if !(e_center > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    if n_points < 3 || n_points.is_multiple_of(2) {
        return Err(Error::config(
            "quadrature needs an odd number of points >= 3",
        ));
    }
    let terms_at = |e: f64| -> Result<[f64; 6]> {
        let mut s = [0.0; 4];
        for (si, &l) in s.iter_mut().zip(&distances_km) {
            *si = distance_to_s(l, e)?;
        }
        Ok(crate::bell::bell_terms(&BellTimes::from_array(s), p, m).to_array())
    };
    if spread == 0.0 {
        return Ok(BellTerms::from_array(terms_at(e_center)?));
    }
    let lo = e_center * (1.0 - 0.5 * spread);
    let hi = e_center * (1.0 + 0.5 * spread);
    let mut acc = [0.0; 6];
    for (e, w) in linspace(lo, hi, n_points).zip(simpson_weights(n_points)) {
        for (a, t) in acc.iter_mut().zip(terms_at(e)?) {
            *a += w * t;
        }
    }
    Ok(BellTerms::from_array(acc))
}

pub fn smeared_bell(
    distances_km: [f64; 4],
    e_center: f64,
    spread: f64,
    n_points: usize,
    p: &OscillationParams,
    m: &MixingMatrix,
) -> Result<BellResult> {
    BellResult::from_terms(smeared_terms(
        distances_km,
        e_center,
        spread,
        n_points,
        p,
        m,
    )?)
    .into_defined()
}

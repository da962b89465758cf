//! Mixing matrix, pair state, two-time evolution and the flavor probabilities built on them.
//!
//! Neutrino and antineutrino labels are interchangeable here: the mixing matrix is real, so
//! both species pick up identical phases.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radians of oscillation phase per eV² of mass splitting per unit of `s`.
pub const PHASE_PER_EV2: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    E,
    Mu,
    Tau,
}

impl Flavor {
    pub const ALL: [Flavor; 3] = [Flavor::E, Flavor::Mu, Flavor::Tau];

    pub fn index(self) -> usize {
        match self {
            Flavor::E => 0,
            Flavor::Mu => 1,
            Flavor::Tau => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Flavor> {
        Flavor::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::E => "e",
            Flavor::Mu => "mu",
            Flavor::Tau => "tau",
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Flavor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "e" | "nu_e" => Ok(Flavor::E),
            "mu" | "nu_mu" => Ok(Flavor::Mu),
            "tau" | "nu_tau" => Ok(Flavor::Tau),
            other => Err(format!("unknown flavor `{other}` (expected e, mu or tau)")),
        }
    }
}

/// Detector side of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            other => Err(format!("unknown side `{other}` (expected left or right)")),
        }
    }
}

/// Real orthogonal flavor ↔ mass change of basis. Rows are flavors, columns mass states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingMatrix {
    u: [[f64; 3]; 3],
}

impl MixingMatrix {
    /// Rejects matrices that are not orthogonal to within `1e-12`.
    pub fn from_rows(u: [[f64; 3]; 3]) -> Result<Self> {
        let m = MixingMatrix { u };
        let dev = m.orthogonality_defect();
        if !(dev <= 1e-12) {
            return Err(Error::config(format!(
                "mixing matrix is not orthogonal (max |U·Uᵀ − I| = {dev:e})"
            )));
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        MixingMatrix {
            u: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.u
    }

    /// `U[flavor][mass]`.
    #[inline]
    pub fn get(&self, flavor: Flavor, mass: usize) -> f64 {
        self.u[flavor.index()][mass]
    }

    /// Mass-basis coefficients of a flavor state.
    pub fn flavor_to_mass(&self, flavor: Flavor) -> [f64; 3] {
        self.u[flavor.index()]
    }

    /// Largest entry of `|U·Uᵀ − I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = (0..3).map(|i| self.u[a][i] * self.u[b][i]).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

impl Default for MixingMatrix {
    fn default() -> Self {
        tribimaximal_matrix()
    }
}

pub fn tribimaximal_matrix() -> MixingMatrix {
    let a = 1.0 / 6f64.sqrt();
    let b = 1.0 / 3f64.sqrt();
    let c = std::f64::consts::FRAC_1_SQRT_2;
    MixingMatrix {
        u: [[2.0 * a, b, 0.0], [-a, b, c], [-a, b, -c]],
    }
}

/// Mass-squared splittings in eV². `dm2_13` is derived so the three splittings sum to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillationParams {
    pub dm2_21: f64,
    pub dm2_32: f64,
}

impl Default for OscillationParams {
    fn default() -> Self {
        OscillationParams {
            dm2_21: 8e-5,
            dm2_32: 2.4e-3,
        }
    }
}

impl OscillationParams {
    pub fn new(dm2_21: f64, dm2_32: f64) -> Self {
        OscillationParams { dm2_21, dm2_32 }
    }

    pub fn dm2_13(&self) -> f64 {
        -(self.dm2_21 + self.dm2_32)
    }

    /// Phase rates per unit `s`, measured relative to the lightest state (`ω₁ = 0`).
    pub fn omegas(&self) -> [f64; 3] {
        [
            0.0,
            PHASE_PER_EV2 * self.dm2_21,
            PHASE_PER_EV2 * (self.dm2_21 + self.dm2_32),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dm2_21.is_finite() && self.dm2_32.is_finite()) {
            return Err(Error::config("mass splittings must be finite"));
        }
        if self.dm2_21 <= 0.0 || self.dm2_32 <= 0.0 {
            return Err(Error::config("mass splittings must be positive"));
        }
        Ok(())
    }
}

/// Two-particle amplitude matrix in the mass basis: `|Ψ⟩ = Σ A[i][j] |ν_i⟩⊗|ν_j⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairState {
    amp: [[Complex64; 3]; 3],
}

impl PairState {
    pub fn from_amplitudes(amp: [[Complex64; 3]; 3]) -> Self {
        PairState { amp }
    }

    pub fn amplitudes(&self) -> &[[Complex64; 3]; 3] {
        &self.amp
    }

    #[inline]
    pub fn amplitude(&self, i: usize, j: usize) -> Complex64 {
        self.amp[i][j]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().flatten().map(|a| a.norm_sqr()).sum()
    }

    /// Largest `|A + Aᵀ|` entry; zero for an antisymmetric state.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.amp[i][j] + self.amp[j][i]).norm());
            }
        }
        worst
    }
}

/// `(|e μ⟩ − |μ e⟩)/√2` written in the mass basis of `m`.
pub fn initial_pair_state(m: &MixingMatrix) -> PairState {
    let e = m.flavor_to_mass(Flavor::E);
    let mu = m.flavor_to_mass(Flavor::Mu);
    let mut amp = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            amp[i][j] = Complex64::new(
                (e[i] * mu[j] - mu[i] * e[j]) * std::f64::consts::FRAC_1_SQRT_2,
                0.0,
            );
        }
    }
    PairState { amp }
}

/// Left particle evolved for `t_l`, right particle for `t_r`.
pub fn evolve_pair(state: &PairState, t_l: f64, t_r: f64, p: &OscillationParams) -> PairState {
    let w = p.omegas();
    let left = w.map(|wi| Complex64::from_polar(1.0, -wi * t_l));
    let right = w.map(|wj| Complex64::from_polar(1.0, -wj * t_r));
    let mut amp = state.amp;
    for i in 0..3 {
        for j in 0..3 {
            amp[i][j] *= left[i] * right[j];
        }
    }
    PairState { amp }
}

/// `|⟨a b|Ψ⟩|²`.
pub fn coincidence_probability(st: &PairState, a: Flavor, b: Flavor, m: &MixingMatrix) -> f64 {
    let ua = m.flavor_to_mass(a);
    let ub = m.flavor_to_mass(b);
    let mut sum = Complex64::new(0.0, 0.0);
    for (row, ui) in st.amp.iter().zip(ua) {
        for (amp, uj) in row.iter().zip(ub) {
            sum += amp * (ui * uj);
        }
    }
    sum.norm_sqr()
}

/// Joint flavor probabilities at fixed detection times; `p[left][right]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoincidenceTable {
    pub t_l: f64,
    pub t_r: f64,
    pub p: [[f64; 3]; 3],
}

impl CoincidenceTable {
    #[inline]
    pub fn get(&self, left: Flavor, right: Flavor) -> f64 {
        self.p[left.index()][right.index()]
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    pub fn left_marginal(&self, f: Flavor) -> f64 {
        self.p[f.index()].iter().sum()
    }

    pub fn right_marginal(&self, f: Flavor) -> f64 {
        self.p.iter().map(|row| row[f.index()]).sum()
    }
}

pub fn coincidence_table(
    t_l: f64,
    t_r: f64,
    p: &OscillationParams,
    m: &MixingMatrix,
) -> CoincidenceTable {
    let st = evolve_pair(&initial_pair_state(m), t_l, t_r, p);
    let mut table = [[0.0; 3]; 3];
    for a in Flavor::ALL {
        for b in Flavor::ALL {
            table[a.index()][b.index()] = coincidence_probability(&st, a, b, m);
        }
    }
    CoincidenceTable { t_l, t_r, p: table }
}

/// Single-particle vacuum transition probability `P(a → b)` after `s`.
pub fn osc_probability(
    a: Flavor,
    b: Flavor,
    s: f64,
    p: &OscillationParams,
    m: &MixingMatrix,
) -> f64 {
    let w = p.omegas();
    let mut prob = if a == b { 1.0 } else { 0.0 };
    for i in 0..3 {
        for j in (i + 1)..3 {
            let coeff = m.get(a, i) * m.get(b, i) * m.get(a, j) * m.get(b, j);
            let half_phase = 0.5 * (w[j] - w[i]) * s;
            prob -= 4.0 * coeff * half_phase.sin().powi(2);
        }
    }
    prob
}

/// Probability of flavor `f` on one side with the other side's detector accepting any flavor.
///
/// Evaluated by summing the coincidence table with the other side held at `s = 0`; the result
/// does not depend on that choice.
pub fn marginal_probability(
    side: Side,
    f: Flavor,
    t: f64,
    p: &OscillationParams,
    m: &MixingMatrix,
) -> f64 {
    match side {
        Side::Left => coincidence_table(t, 0.0, p, m).left_marginal(f),
        Side::Right => coincidence_table(0.0, t, p, m).right_marginal(f),
    }
}

//! Reference evaluations that avoid the mass-basis pair amplitudes used by the library.
//!
//! The pair is kept in the flavor basis, `ψ[e][μ] = 1/√2`, `ψ[μ][e] = −1/√2`, and each side is
//! propagated with its own flavor-space matrix `S(t) = U · diag(e^{−iω t}) · Uᵀ`.

#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

use num_complex::Complex64;

pub const OMEGA_DEFAULT: [f64; 3] = [0.0, 8.0, 248.0];

pub fn tbm() -> [[f64; 3]; 3] {
    let r6 = 6f64.sqrt();
    let r3 = 3f64.sqrt();
    let r2 = 2f64.sqrt();
    [
        [2.0 / r6, 1.0 / r3, 0.0],
        [-1.0 / r6, 1.0 / r3, 1.0 / r2],
        [-1.0 / r6, 1.0 / r3, -1.0 / r2],
    ]
}

/// `S[to][from]`
pub fn propagator(t: f64, omega: [f64; 3]) -> [[Complex64; 3]; 3] {
    let u = tbm();
    let mut s = [[Complex64::new(0.0, 0.0); 3]; 3];
    for to in 0..3 {
        for from in 0..3 {
            for i in 0..3 {
                s[to][from] += Complex64::from_polar(1.0, -omega[i] * t) * (u[to][i] * u[from][i]);
            }
        }
    }
    s
}

pub fn joint(t_l: f64, t_r: f64, omega: [f64; 3]) -> [[f64; 3]; 3] {
    let sl = propagator(t_l, omega);
    let sr = propagator(t_r, omega);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            // ψ = h·|e μ⟩ − h·|μ e⟩
            let amp = sl[a][0] * sr[b][1] * h - sl[a][1] * sr[b][0] * h;
            out[a][b] = amp.norm_sqr();
        }
    }
    out
}

pub fn transition(from: usize, to: usize, t: f64, omega: [f64; 3]) -> f64 {
    propagator(t, omega)[to][from].norm_sqr()
}

/// Hardy terms `[l2e_r2mu, l2e_r1e, l1mu_r2mu, l1mu_r1e, any_r2mu, l1mu_any]`.
pub fn hardy_terms(t: [f64; 4], omega: [f64; 3]) -> [f64; 6] {
    let [l1, l2, r1, r2] = t;
    let right_mu: f64 = joint(0.31, r2, omega).iter().map(|row| row[1]).sum();
    let left_mu: f64 = joint(l1, 0.47, omega)[1].iter().sum();
    [
        joint(l2, r2, omega)[0][1],
        joint(l2, r1, omega)[0][0],
        joint(l1, r2, omega)[1][1],
        joint(l1, r1, omega)[1][0],
        right_mu,
        left_mu,
    ]
}

pub fn hardy_ratio(terms: [f64; 6]) -> f64 {
    let [a, b, c, d, r, l] = terms;
    c / (r - a + l - d + b)
}

/// Expected same-flavor rate at `t_b` after an equal-time flavor measurement at `t_e`.
pub fn eve_rate(t_e: f64, t_b: f64, omega: [f64; 3]) -> f64 {
    let eve = joint(t_e, t_e, omega);
    let tau = t_b - t_e;
    let mut total = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            let same: f64 = (0..3)
                .map(|x| transition(a, x, tau, omega) * transition(b, x, tau, omega))
                .sum();
            total += eve[a][b] * same;
        }
    }
    total
}

/// High-resolution composite Simpson average of `f` over `[a, b]`.
pub fn simpson_mean<F: Fn(f64) -> [f64; 6]>(f: F, a: f64, b: f64, intervals: usize) -> [f64; 6] {
    assert!(intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    let mut acc = [0.0; 6];
    for k in 0..=intervals {
        let w = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let v = f(a + h * k as f64);
        for (x, y) in acc.iter_mut().zip(v) {
            *x += w * y;
        }
    }
    acc.map(|x| x * h / 3.0 / (b - a))
}

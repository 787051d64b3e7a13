//! Gamma function and the explicit constants of the pointwise formulas.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Euler--Mascheroni constant, gamma = -int_0^infty e^{-r} log r dr.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Lanczos g parameter (607/128) for the 15-term coefficient set below.
const LANCZOS_G: f64 = 4.742_187_5;

/// Godfrey's 15-term Lanczos coefficients for g = 607/128; relative error
/// below 1e-14 on the right half line in double precision.
const LANCZOS_COEF: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_746,
    -0.491_913_816_097_620_2,
    3.399_464_998_481_188_9e-5,
    4.652_362_892_704_857_5e-5,
    -9.837_447_530_487_956e-5,
    1.580_887_032_249_124_9e-4,
    -2.102_644_417_241_048_8e-4,
    2.174_396_181_152_126_4e-4,
    -1.643_181_065_367_639e-4,
    8.441_822_398_385_274e-5,
    -2.619_083_840_158_141e-5,
    3.689_918_265_953_162e-6,
];

fn lanczos_gamma(x: f64) -> f64 {
    // valid for x >= 0.5
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

/// Gamma function on the real line, poles excluded.
///
/// Uses the Lanczos approximation for x >= 0.5 and the reflection formula
/// Gamma(x) Gamma(1-x) = pi / sin(pi x) for x < 0.5.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("gamma argument {x}")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::GammaPole { x });
    }
    if x >= 0.5 {
        Ok(lanczos_gamma(x))
    } else {
        // sin(pi x) via the fractional part keeps the reflection accurate
        // for large negative arguments.
        let frac = x - x.floor();
        let sin_pi = if frac > 0.5 {
            (std::f64::consts::PI * (1.0 - frac)).sin()
        } else {
            (std::f64::consts::PI * frac).sin()
        };
        let parity = if (x.floor() as i64).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        Ok(std::f64::consts::PI / (parity * sin_pi * lanczos_gamma(1.0 - x)))
    }
}

/// ln Gamma(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::InvalidOrder {
            msg: format!("ln_gamma requires x > 0, got {x}"),
        });
    }
    if x >= 0.5 {
        let z = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (z + k as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        Ok(0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln())
    } else {
        Ok(gamma(x)?.ln())
    }
}

/// The exponent s of the operator (-Delta)^s together with the derived
/// extension weight a = 1 - 2s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracOrder {
    s: f64,
    a: f64,
}

impl FracOrder {
    /// Order for the forward operator; requires 0 < s < 1.
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidOrder {
                msg: format!("s must lie in (0, 1), got {s}"),
            });
        }
        Ok(Self { s, a: 1.0 - 2.0 * s })
    }

    /// Order for inverse kernels; requires 0 < s <= n/2.
    pub fn new_inverse(s: f64, n: usize) -> Result<Self> {
        if !(s > 0.0 && s <= n as f64 / 2.0) {
            return Err(Error::InvalidOrder {
                msg: format!("inverse order needs 0 < s <= n/2 = {}, got {s}", n as f64 / 2.0),
            });
        }
        Ok(Self { s, a: 1.0 - 2.0 * s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Extension weight a = 1 - 2s.
    pub fn a(&self) -> f64 {
        self.a
    }
}

/// c_{n,s} = 4^s Gamma(n/2+s) / (|Gamma(-s)| pi^{n/2}), the constant of the
/// pointwise singular-integral formula.
pub fn c_ns(n: usize, s: FracOrder) -> Result<f64> {
    let s = s.s();
    let half_n = n as f64 / 2.0;
    let g_neg = gamma(-s)?;
    Ok(4f64.powf(s) * gamma(half_n + s)? / (g_neg.abs() * std::f64::consts::PI.powf(half_n)))
}

/// Same constant through the pole-free Gamma(2-s) form,
/// s(1-s) 4^s Gamma(n/2+s) / (|Gamma(2-s)| pi^{n/2}).
pub fn c_ns_alt(n: usize, s: FracOrder) -> Result<f64> {
    let s = s.s();
    let half_n = n as f64 / 2.0;
    Ok(s * (1.0 - s) * 4f64.powf(s) * gamma(half_n + s)?
        / (gamma(2.0 - s)?.abs() * std::f64::consts::PI.powf(half_n)))
}

/// c_{n,-s} = Gamma(n/2-s) / (4^s Gamma(s) pi^{n/2}), the Riesz potential
/// constant, valid for 0 < s < n/2.
pub fn c_n_negs(n: usize, s: f64) -> Result<f64> {
    let half_n = n as f64 / 2.0;
    if !(s > 0.0 && s < half_n) {
        return Err(Error::InvalidOrder {
            msg: format!("c_n_negs needs 0 < s < n/2 = {half_n}, got {s}"),
        });
    }
    Ok(gamma(half_n - s)? / (4f64.powf(s) * gamma(s)? * std::f64::consts::PI.powf(half_n)))
}

/// Constant of the weighted Neumann trace, Gamma(1-s) / (4^{s-1/2} Gamma(s)).
pub fn cs_neumann(s: FracOrder) -> Result<f64> {
    let s = s.s();
    Ok(gamma(1.0 - s)? / (4f64.powf(s - 0.5) * gamma(s)?))
}

/// Constant of the boundary quotient, Gamma(1-s) / (4^s Gamma(1+s)).
pub fn cs_quotient(s: FracOrder) -> Result<f64> {
    let s = s.s();
    Ok(gamma(1.0 - s)? / (4f64.powf(s) * gamma(1.0 + s)?))
}

/// Bundle of the explicit constants for a given (n, s).
#[derive(Debug, Clone, Copy)]
pub struct PaperConstants {
    /// c_{n,s} of the forward pointwise formula.
    pub c_pos: f64,
    /// c_{n,-s} of the Riesz kernel (defined only for s < n/2).
    pub c_neg: Option<f64>,
    /// Neumann-limit constant Gamma(1-s)/(4^{s-1/2} Gamma(s)).
    pub cs_neumann: f64,
    /// Quotient-limit constant Gamma(1-s)/(4^s Gamma(1+s)).
    pub cs_quotient: f64,
    /// Euler--Mascheroni constant.
    pub euler_gamma: f64,
}

impl PaperConstants {
    pub fn new(n: usize, s: FracOrder) -> Result<Self> {
        let c_neg = if s.s() < n as f64 / 2.0 {
            Some(c_n_negs(n, s.s())?)
        } else {
            None
        };
        Ok(Self {
            c_pos: c_ns(n, s)?,
            c_neg,
            cs_neumann: cs_neumann(s)?,
            cs_quotient: cs_quotient(s)?,
            euler_gamma: EULER_GAMMA,
        })
    }
}

/// Surface area of the unit sphere S^{n-1}: 2, 2 pi, 4 pi for n = 1, 2, 3.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => {
            // 2 pi^{n/2} / Gamma(n/2)
            let half_n = n as f64 / 2.0;
            2.0 * std::f64::consts::PI.powf(half_n) / lanczos_gamma(half_n)
        }
    }
}

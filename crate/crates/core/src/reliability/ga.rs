//! Gaussian approximation of bit-channel LLR means for BPSK over AWGN.
//!
//! The LLR of each bit channel is modelled as `N(m, 2m)`. A 1 in the
//! expansion doubles the mean; a 0 maps it through
//! `m -> phi^-1(1 - (1 - phi(m))^2)`.
//!
//! `phi` is the usual piecewise approximation: `exp(-0.4527 x^0.86 + 0.0218)`
//! in the middle, `sqrt(pi/x) exp(-x/4) (1 - 10/(7x))` for large `x`, and
//! `exp(0.0564 x^2 - 0.4856 x)` near zero, where the middle piece exceeds 1.
//! Each switch sits where neighbouring pieces intersect, so `phi` is
//! continuous and strictly decreasing.
//!
//! The recursion runs on `ln m`. Means below about `1e-100` follow the
//! asymptote `m -> 0.4856 m^2` exactly, and large means never touch an
//! underflowing `phi`, so no two channels collapse onto a clamp.

use std::f64::consts::{LN_2, PI};

use crate::par;

/// Smallest mean reported by [`ga_awgn_means`].
pub const DEFAULT_MEAN_FLOOR: f64 = 1e-300;

/// Intersection of the small-`x` and middle pieces.
pub const SMALL_SWITCH: f64 = 0.867_861_239_085_134_5;
/// Intersection of the middle and large-`x` pieces above 10.
pub const LARGE_SWITCH: f64 = 14.394_352_942_168_545;

const SMALL_LINEAR: f64 = 0.4856;
const SMALL_QUADRATIC: f64 = 0.0564;
const INVERSE_REL_TOL: f64 = 1e-10;
/// `ln(1e-100)`: below this the degraded mean is `0.4856 m^2` to machine precision.
const DEEP_LN_MEAN: f64 = -230.258_509_299_404_56;

fn ln_phi_small(x: f64) -> f64 {
    x * (SMALL_QUADRATIC * x - SMALL_LINEAR)
}

fn ln_phi_middle(x: f64) -> f64 {
    -0.4527 * x.powf(0.86) + 0.0218
}

fn ln_phi_large(x: f64) -> f64 {
    0.5 * (PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln()
}

/// `ln phi(x)` for `x >= 0`.
pub fn ln_phi(x: f64) -> f64 {
    if x < SMALL_SWITCH {
        ln_phi_small(x)
    } else if x <= LARGE_SWITCH {
        ln_phi_middle(x)
    } else {
        ln_phi_large(x)
    }
}

pub fn phi(x: f64) -> f64 {
    ln_phi(x).exp()
}

/// Solves `ln phi(x) = target` for `x >= 0`. Closed form on the small
/// piece, bisection to a relative tolerance of 1e-10 elsewhere.
pub fn phi_inverse_ln(target: f64) -> f64 {
    if target >= 0.0 {
        return 0.0;
    }
    if target >= ln_phi_small(SMALL_SWITCH) {
        // c x^2 - a x - L = 0, smaller root in cancellation-free form
        let disc = SMALL_LINEAR * SMALL_LINEAR + 4.0 * SMALL_QUADRATIC * target;
        return -2.0 * target / (SMALL_LINEAR + disc.sqrt());
    }
    let mut lo = SMALL_SWITCH;
    let mut hi = 2.0 * SMALL_SWITCH;
    while ln_phi(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > INVERSE_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if ln_phi(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn phi_inverse(y: f64) -> f64 {
    phi_inverse_ln(y.ln())
}

/// `ln` of the degraded (bit 0) mean, given `ln m`.
pub fn degraded_ln_mean(ln_mean: f64) -> f64 {
    if ln_mean < DEEP_LN_MEAN {
        return SMALL_LINEAR.ln() + 2.0 * ln_mean;
    }
    let lp = ln_phi(ln_mean.exp());
    let p = lp.exp();
    // ln(1 - (1 - p)^2), evaluated in whichever form keeps precision
    let target = if p < 0.5 {
        lp + (2.0 - p).ln()
    } else {
        let q = -lp.exp_m1();
        (-q * q).ln_1p()
    };
    phi_inverse_ln(target).ln()
}

/// `ln` of the upgraded (bit 1) mean, given `ln m`.
pub fn upgraded_ln_mean(ln_mean: f64) -> f64 {
    ln_mean + LN_2
}

pub fn degraded_mean(m: f64) -> f64 {
    degraded_ln_mean(m.ln()).exp()
}

/// Initial LLR mean `2 / sigma^2 = 4 Es/N0` for unit-energy BPSK.
pub fn channel_mean(snr_db: f64) -> f64 {
    4.0 * 10f64.powf(snr_db / 10.0)
}

fn ln_mean_of(raw: u32, levels: u32, start: f64) -> f64 {
    (0..levels).rev().fold(start, |l, t| {
        if (raw >> t) & 1 == 1 {
            upgraded_ln_mean(l)
        } else {
            degraded_ln_mean(l)
        }
    })
}

/// `ln m` for every bit channel of `N = 2^n` at `snr_db` (Es/N0).
pub fn ga_awgn_ln_means(n: u32, snr_db: f64) -> Vec<f64> {
    let start = channel_mean(snr_db).ln();
    par::map_range(0..1u32 << n, |raw| ln_mean_of(raw, n, start))
}

/// LLR mean of every bit channel for `N = 2^n` at `snr_db` (Es/N0).
pub fn ga_awgn_means(n: u32, snr_db: f64) -> Vec<f64> {
    ga_awgn_means_with_floor(n, snr_db, DEFAULT_MEAN_FLOOR)
}

/// Like [`ga_awgn_means`], clamping reported means to `[floor, f64::MAX]`.
pub fn ga_awgn_means_with_floor(n: u32, snr_db: f64, floor: f64) -> Vec<f64> {
    ga_awgn_ln_means(n, snr_db)
        .into_iter()
        .map(|l| l.exp().clamp(floor, f64::MAX))
        .collect()
}

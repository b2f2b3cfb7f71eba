//! Exact Bhattacharyya parameters of the bit channels of a BEC.

use crate::par;

/// Bhattacharyya parameter of one bit channel together with its complement,
/// both carried with full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ErasurePair {
    /// `Z`
    pub z: f64,
    /// `1 - Z`
    pub w: f64,
}

/// Walks the expansion of `raw = i - 1` from the most significant bit: a 0
/// takes `z -> 2z - z^2`, a 1 takes `z -> z^2`. The complement obeys the dual
/// maps, so neither side loses precision near 0 or 1.
pub(crate) fn erasure_pair(raw: u32, levels: u32, erasure: f64) -> ErasurePair {
    let mut z = erasure;
    let mut w = 1.0 - erasure;
    for t in (0..levels).rev() {
        let (next_z, next_w) = if (raw >> t) & 1 == 1 {
            (z * z, w * (2.0 - w))
        } else {
            (z * (2.0 - z), w * w)
        };
        debug_assert!(z * z <= z && z <= z * (2.0 - z), "z^2 <= z <= 2z - z^2 violated at z = {z}");
        z = next_z;
        w = next_w;
    }
    ErasurePair { z, w }
}

/// `Z` for each of the `2^n` bit channels of a BEC with erasure probability
/// `erasure`, indexed by channel (`result[i - 1]`).
pub fn bec_bhattacharyya(n: u32, erasure: f64) -> Vec<f64> {
    par::map_range(0..1u32 << n, |raw| erasure_pair(raw, n, erasure).z)
}

/// Log-odds `ln((1 - Z) / Z)` for each bit channel; larger is better. This is
/// a strictly decreasing function of `Z` that stays resolvable when `Z`
/// rounds to 0 or 1. Infinite values are clamped to `±f64::MAX`.
pub fn bec_log_odds(n: u32, erasure: f64) -> Vec<f64> {
    par::map_range(0..1u32 << n, |raw| {
        let p = erasure_pair(raw, n, erasure);
        (p.w.ln() - p.z.ln()).clamp(-f64::MAX, f64::MAX)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_blocks() {
        assert_eq!(bec_bhattacharyya(1, 0.5), vec![0.75, 0.25]);
        assert_eq!(
            bec_bhattacharyya(2, 0.5),
            vec![0.9375, 0.5625, 0.4375, 0.0625]
        );
    }

    #[test]
    fn fixed_points() {
        for n in 1..=8 {
            assert!(bec_bhattacharyya(n, 0.0).iter().all(|&z| z == 0.0));
            assert!(bec_bhattacharyya(n, 1.0).iter().all(|&z| z == 1.0));
        }
    }

    #[test]
    fn sum_is_conserved() {
        for n in 1..=12 {
            for k in 1..10 {
                let eps = k as f64 / 10.0;
                let total: f64 = bec_bhattacharyya(n, eps).iter().sum();
                let expected = (1u64 << n) as f64 * eps;
                assert!(
                    ((total - expected) / expected).abs() < 1e-9,
                    "n={n} eps={eps} total={total}"
                );
            }
        }
    }

    #[test]
    fn complement_tracks_z() {
        for raw in 0..64 {
            let p = erasure_pair(raw, 6, 0.3);
            assert!((p.z + p.w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn log_odds_orders_like_z() {
        let z = bec_bhattacharyya(6, 0.4);
        let lo = bec_log_odds(6, 0.4);
        for a in 0..64 {
            for b in 0..64 {
                if z[a] < z[b] - 1e-12 {
                    assert!(lo[a] > lo[b]);
                }
            }
        }
        assert!(bec_log_odds(3, 0.0).iter().all(|&x| x == f64::MAX));
        assert!(bec_log_odds(3, 1.0).iter().all(|&x| x == -f64::MAX));
    }
}

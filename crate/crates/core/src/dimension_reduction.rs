//! Dimension reduction: lifting a channel-specific order at a shorter block
//! length into new relations at the full length.
//!
//! Split every expansion into its top `n_u` bits (the upper channel at
//! `N_u = 2^n_u`) and bottom `n_l` bits (the lower channel at `N_l`). If the
//! upper channel of `i` is better than that of `j` for the given channel and
//! the lower channel of `i` is not worse than that of `j` under the
//! channel-independent order, then `i` is better than `j`.

use thiserror::Error;

use crate::index::join;
use crate::order::{combined_leq_raw, transitive_closure, OrderError, RelationMatrix, Source};
use crate::par;
use crate::reliability::ReliabilityRanking;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DrError {
    #[error("upper levels {upper} must satisfy 1 <= n_u < n = {n}")]
    UpperLevels { n: u32, upper: u32 },
    #[error("ranking covers n_u = {ranking}, configuration expects n_u = {expected}")]
    RankingLevels { ranking: u32, expected: u32 },
    #[error("matrix has n = {matrix}, configuration expects n = {expected}")]
    MatrixLevels { matrix: u32, expected: u32 },
    #[error(
        "ranking contradicts the partial order at n_u = {levels}: channel {ranked_above} is ranked \
         above channel {po_better}, which the partial order proves better"
    )]
    Contradiction {
        levels: u32,
        po_better: u32,
        ranked_above: u32,
    },
    #[error("relation between channels {better} and {worse} is already determined the other way")]
    Conflict { better: u32, worse: u32 },
    #[error(transparent)]
    Order(#[from] OrderError),
}

/// Default upper part size, `n - 3`; `None` when that leaves nothing to split.
pub fn default_upper_levels(n: u32) -> Option<u32> {
    (n > 3).then(|| n - 3)
}

#[derive(Debug, Clone)]
pub struct DrConfig {
    levels: u32,
    upper_levels: u32,
    ranking: ReliabilityRanking,
    apply_closure: bool,
}

impl DrConfig {
    /// Configuration for block length `2^n`, taking `n_u` from the ranking.
    pub fn new(n: u32, ranking: ReliabilityRanking) -> Result<Self, DrError> {
        let upper = ranking.levels();
        if upper == 0 || upper >= n {
            return Err(DrError::UpperLevels { n, upper });
        }
        Ok(Self {
            levels: n,
            upper_levels: upper,
            ranking,
            apply_closure: false,
        })
    }

    /// Also run a transitive closure pass after lifting.
    pub fn with_closure(mut self, apply: bool) -> Self {
        self.apply_closure = apply;
        self
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn upper_levels(&self) -> u32 {
        self.upper_levels
    }

    pub fn lower_levels(&self) -> u32 {
        self.levels - self.upper_levels
    }

    pub fn ranking(&self) -> &ReliabilityRanking {
        &self.ranking
    }

    pub fn apply_closure(&self) -> bool {
        self.apply_closure
    }
}

/// Counts of relations added by [`dr_update`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DrStats {
    pub lifted: u64,
    pub closure: u64,
}

/// Checks every partial-order-comparable upper pair against the ranking.
fn check_ranking(ranking: &ReliabilityRanking) -> Result<(), DrError> {
    let levels = ranking.levels();
    let size = ranking.block_length();
    let bad = par::map_range(1..size + 1, |b| {
        (1..=size).find_map(|a| {
            (a != b
                && combined_leq_raw(a - 1, b - 1, levels)
                && ranking.strictly_better(a, b))
            .then_some((b, a))
        })
    });
    match bad.into_iter().flatten().next() {
        Some((po_better, ranked_above)) => Err(DrError::Contradiction {
            levels,
            po_better,
            ranked_above,
        }),
        None => Ok(()),
    }
}

/// Adds the relations implied by the ranking at `n_u` to `matrix`.
///
/// Only upper pairs that the partial order leaves open are used: composites
/// of comparable upper pairs are already determined. Ties in the ranking give
/// nothing. Existing entries are never overwritten.
pub fn dr_update(matrix: &mut RelationMatrix, cfg: &DrConfig) -> Result<DrStats, DrError> {
    if matrix.levels() != cfg.levels {
        return Err(DrError::MatrixLevels {
            matrix: matrix.levels(),
            expected: cfg.levels,
        });
    }
    let ranking = &cfg.ranking;
    if ranking.levels() != cfg.upper_levels {
        return Err(DrError::RankingLevels {
            ranking: ranking.levels(),
            expected: cfg.upper_levels,
        });
    }
    check_ranking(ranking)?;

    let upper = cfg.upper_levels;
    let lower = cfg.lower_levels();
    let lower_size = 1u32 << lower;
    // (better, worse) lower pairs, reflexive ones included
    let lower_pairs: Vec<(u32, u32)> = (1..=lower_size)
        .flat_map(|il| (1..=lower_size).map(move |jl| (il, jl)))
        .filter(|&(il, jl)| combined_leq_raw(jl - 1, il - 1, lower))
        .collect();

    let upper_size = ranking.block_length();
    let lifted = par::map_range(1..upper_size + 1, |iu| {
        let mut out = Vec::new();
        for ju in 1..=upper_size {
            if iu == ju
                || !ranking.strictly_better(iu, ju)
                || combined_leq_raw(iu - 1, ju - 1, upper)
                || combined_leq_raw(ju - 1, iu - 1, upper)
            {
                continue;
            }
            for &(il, jl) in &lower_pairs {
                let i = join(iu, il, lower).expect("lower index in range");
                let j = join(ju, jl, lower).expect("lower index in range");
                out.push((i, j));
            }
        }
        out
    });

    let mut stats = DrStats::default();
    for (better, worse) in lifted.into_iter().flatten() {
        if matrix.is_better(better, worse) {
            continue;
        }
        if matrix.is_better(worse, better) {
            return Err(DrError::Conflict { better, worse });
        }
        matrix.set_better(better, worse, Source::Dr);
        stats.lifted += 1;
    }

    if cfg.apply_closure {
        let before = matrix.determined_count();
        *matrix = transitive_closure(matrix)?;
        stats.closure = matrix.determined_count() - before;
    }
    Ok(stats)
}

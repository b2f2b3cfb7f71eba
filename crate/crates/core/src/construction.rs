//! Classification of bit channels into information, frozen and undetermined
//! sets, and the end-to-end construction pipeline.

use serde::Serialize;
use thiserror::Error;

use crate::dimension_reduction::{default_upper_levels, dr_update, DrConfig, DrError};
use crate::order::{
    counting_channels, counting_channels_from, po_relation_matrix, DegreeVectors, OrderError,
    RelationMatrix, Source,
};
use crate::par;
use crate::reliability::{rank_channels, ChannelModel, ReliabilityError, ReliabilityRanking};

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("code rate {0} outside (0, 1)")]
    Rate(f64),
    #[error("{0} requires a channel model")]
    MissingChannel(&'static str),
    #[error("full-length ranking covers n = {ranking}, construction has n = {expected}")]
    RankingLevels { ranking: u32, expected: u32 },
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error(transparent)]
    Dr(#[from] DrError),
    #[error(transparent)]
    Reliability(#[from] ReliabilityError),
    #[error(transparent)]
    Inputs(Box<dyn std::error::Error + Send + Sync>),
}

/// How a channel ended up in its set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    /// Classified from partial-order relations alone.
    #[serde(rename = "PO")]
    Po,
    /// Classification needed relations from dimension reduction.
    #[serde(rename = "DR")]
    Dr,
    /// Placed by the full-length reliability metric.
    #[serde(rename = "resolved")]
    Resolved,
    #[serde(rename = "undetermined")]
    Undetermined,
}

/// A (possibly partial) code construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Construction {
    pub n: u32,
    #[serde(rename = "N")]
    pub block_length: u32,
    #[serde(rename = "K")]
    pub info_size: u32,
    #[serde(rename = "I")]
    pub information: Vec<u32>,
    #[serde(rename = "F")]
    pub frozen: Vec<u32>,
    #[serde(rename = "U")]
    pub undetermined: Vec<u32>,
    pub gamma: f64,
    pub provenance: Vec<Provenance>,
    /// Adjacent pairs of the resolution order whose metrics tied; the
    /// lower index was preferred.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub resolution_ties: Vec<[u32; 2]>,
}

impl Construction {
    /// Fraction of channels whose set is known, `1 - gamma`.
    pub fn determined_fraction(&self) -> f64 {
        1.0 - self.gamma
    }

    pub fn is_complete(&self) -> bool {
        self.undetermined.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string(self).expect("construction serializes");
        out.push('\n');
        out
    }
}

/// `K = floor(N R)`.
pub fn info_size(block_length: u32, rate: f64) -> u32 {
    (block_length as f64 * rate).floor() as u32
}

/// Sorts channels into `I = {i : s_i >= N - K}`, `F = {i : f_i >= K}` and the
/// rest. Every classified channel is tagged [`Provenance::Po`].
pub fn classify(degrees: &DegreeVectors, k: u32) -> Construction {
    let size = degrees.block_length();
    assert!(k <= size, "K = {k} exceeds N = {size}");
    let mut c = Construction {
        n: size.trailing_zeros(),
        block_length: size,
        info_size: k,
        information: Vec::new(),
        frozen: Vec::new(),
        undetermined: Vec::new(),
        gamma: 0.0,
        provenance: Vec::with_capacity(size as usize),
        resolution_ties: Vec::new(),
    };
    for i in 1..=size {
        if degrees.worse_than(i) >= size - k {
            c.information.push(i);
            c.provenance.push(Provenance::Po);
        } else if degrees.better_than(i) >= k {
            c.frozen.push(i);
            c.provenance.push(Provenance::Po);
        } else {
            c.undetermined.push(i);
            c.provenance.push(Provenance::Undetermined);
        }
    }
    c.gamma = c.undetermined.len() as f64 / size as f64;
    c
}

/// Classifies from a PO+DR matrix, tagging channels whose classification
/// needed DR relations.
pub fn classify_matrix(matrix: &RelationMatrix, k: u32) -> Construction {
    let mut c = classify(&counting_channels(matrix), k);
    if matrix.count_by_source(Source::Dr) > 0 {
        let po_only = classify(&counting_channels_from(matrix, Source::Po), k);
        for (slot, before) in c.provenance.iter_mut().zip(&po_only.provenance) {
            if *slot == Provenance::Po && *before == Provenance::Undetermined {
                *slot = Provenance::Dr;
            }
        }
    }
    c
}

/// Moves the best `K - |I|` undetermined channels (by `ranking`, a
/// full-length ranking) into `I` and the rest into `F`.
pub fn resolve(c: &mut Construction, ranking: &ReliabilityRanking) -> Result<(), ConstructionError> {
    if ranking.block_length() != c.block_length {
        return Err(ConstructionError::RankingLevels {
            ranking: ranking.levels(),
            expected: c.n,
        });
    }
    let mut pending = std::mem::take(&mut c.undetermined);
    pending.sort_by_key(|&i| ranking.position(i));
    let take = (c.info_size as usize).saturating_sub(c.information.len());
    for (rank, &i) in pending.iter().enumerate() {
        if rank < take {
            c.information.push(i);
        } else {
            c.frozen.push(i);
        }
        c.provenance[i as usize - 1] = Provenance::Resolved;
    }
    let in_pending: std::collections::HashSet<u32> = pending.iter().copied().collect();
    c.resolution_ties = ranking
        .ties()
        .iter()
        .filter(|[a, b]| in_pending.contains(a) && in_pending.contains(b))
        .copied()
        .collect();
    c.information.sort_unstable();
    c.frozen.sort_unstable();
    c.gamma = 0.0;
    Ok(())
}

/// Options of [`construct`].
#[derive(Debug, Clone, Default)]
pub struct ConstructOptions {
    pub use_dr: bool,
    /// Upper part size for DR; `n - 3` when unset.
    pub upper_levels: Option<u32>,
    pub closure: bool,
    pub resolve: bool,
    /// Replaces the built-in evaluator at `n_u`.
    pub upper_ranking: Option<ReliabilityRanking>,
    /// Replaces the built-in evaluator at full length during resolution.
    pub full_ranking: Option<ReliabilityRanking>,
}

/// Source of channel-independent and channel-specific inputs, so callers can
/// substitute cached copies.
pub trait Inputs {
    fn po_matrix(&mut self, n: u32) -> Result<RelationMatrix, ConstructionError>;
    fn ranking(&mut self, model: ChannelModel, levels: u32)
        -> Result<ReliabilityRanking, ConstructionError>;
}

/// Computes every input from scratch.
#[derive(Debug, Default, Clone, Copy)]
pub struct Fresh;

impl Inputs for Fresh {
    fn po_matrix(&mut self, n: u32) -> Result<RelationMatrix, ConstructionError> {
        Ok(po_relation_matrix(n)?)
    }

    fn ranking(
        &mut self,
        model: ChannelModel,
        levels: u32,
    ) -> Result<ReliabilityRanking, ConstructionError> {
        Ok(rank_channels(model, levels)?)
    }
}

/// The relation matrix the construction classifies from: PO, plus DR when
/// requested. DR is skipped for `n <= 3` unless `upper_levels` is given.
pub fn relation_matrix<I: Inputs>(
    inputs: &mut I,
    n: u32,
    model: Option<ChannelModel>,
    options: &ConstructOptions,
) -> Result<RelationMatrix, ConstructionError> {
    let mut matrix = inputs.po_matrix(n)?;
    if !options.use_dr {
        return Ok(matrix);
    }
    let ranking = match &options.upper_ranking {
        Some(r) => Some(r.clone()),
        None => {
            let model = model.ok_or(ConstructionError::MissingChannel("dimension reduction"))?;
            match options.upper_levels.or_else(|| default_upper_levels(n)) {
                Some(upper) if upper >= 1 && upper < n => Some(inputs.ranking(model, upper)?),
                Some(upper) => return Err(DrError::UpperLevels { n, upper }.into()),
                None => None,
            }
        }
    };
    if let Some(ranking) = ranking {
        if let Some(upper) = options.upper_levels {
            if ranking.levels() != upper {
                return Err(DrError::RankingLevels {
                    ranking: ranking.levels(),
                    expected: upper,
                }
                .into());
            }
        }
        let cfg = DrConfig::new(n, ranking)?.with_closure(options.closure);
        dr_update(&mut matrix, &cfg)?;
    }
    Ok(matrix)
}

/// Full pipeline: partial orders, optional dimension reduction, counting,
/// classification and optional resolution of the undetermined set.
pub fn construct_with<I: Inputs>(
    inputs: &mut I,
    n: u32,
    rate: f64,
    model: Option<ChannelModel>,
    options: &ConstructOptions,
) -> Result<Construction, ConstructionError> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(ConstructionError::Rate(rate));
    }
    let matrix = relation_matrix(inputs, n, model, options)?;
    let mut c = classify_matrix(&matrix, info_size(matrix.block_length(), rate));
    if options.resolve {
        let ranking = match &options.full_ranking {
            Some(r) => r.clone(),
            None => {
                let model = model.ok_or(ConstructionError::MissingChannel("resolution"))?;
                inputs.ranking(model, n)?
            }
        };
        resolve(&mut c, &ranking)?;
    }
    Ok(c)
}

pub fn construct(
    n: u32,
    rate: f64,
    model: Option<ChannelModel>,
    options: &ConstructOptions,
) -> Result<Construction, ConstructionError> {
    construct_with(&mut Fresh, n, rate, model, options)
}

/// One sweep point: `gamma` with partial orders alone and, when a channel
/// was given, with dimension reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub x: f64,
    pub gamma_po: f64,
    pub gamma_po_dr: Option<f64>,
}

/// `gamma` over a list of rates at a fixed block length. The relation
/// matrices do not depend on the rate and are built once.
pub fn gamma_sweep_rate_with<I: Inputs>(
    inputs: &mut I,
    n: u32,
    model: Option<ChannelModel>,
    options: &ConstructOptions,
    rates: &[f64],
) -> Result<Vec<SweepPoint>, ConstructionError> {
    if let Some(&r) = rates.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        return Err(ConstructionError::Rate(r));
    }
    let po_opts = ConstructOptions {
        use_dr: false,
        ..options.clone()
    };
    let po = counting_channels(&relation_matrix(inputs, n, model, &po_opts)?);
    let with_dr = match model {
        Some(_) => {
            let dr_opts = ConstructOptions {
                use_dr: true,
                ..options.clone()
            };
            Some(counting_channels(&relation_matrix(inputs, n, model, &dr_opts)?))
        }
        None => None,
    };
    let size = po.block_length();
    Ok(par::map_slice(rates, |&rate| {
        let k = info_size(size, rate);
        SweepPoint {
            x: rate,
            gamma_po: classify(&po, k).gamma,
            gamma_po_dr: with_dr.as_ref().map(|d| classify(d, k).gamma),
        }
    }))
}

pub fn gamma_sweep_rate(
    n: u32,
    model: Option<ChannelModel>,
    use_dr: bool,
    rates: &[f64],
) -> Result<Vec<(f64, f64)>, ConstructionError> {
    let model = if use_dr {
        Some(model.ok_or(ConstructionError::MissingChannel("dimension reduction"))?)
    } else {
        None
    };
    let points = gamma_sweep_rate_with(&mut Fresh, n, model, &ConstructOptions::default(), rates)?;
    Ok(points
        .into_iter()
        .map(|p| (p.x, p.gamma_po_dr.unwrap_or(p.gamma_po)))
        .collect())
}

/// `gamma` over block lengths at a fixed rate.
pub fn gamma_sweep_n_with<I: Inputs>(
    inputs: &mut I,
    ns: &[u32],
    rate: f64,
    model: Option<ChannelModel>,
    options: &ConstructOptions,
) -> Result<Vec<SweepPoint>, ConstructionError> {
    ns.iter()
        .map(|&n| {
            let p = gamma_sweep_rate_with(inputs, n, model, options, &[rate])?[0];
            Ok(SweepPoint { x: n as f64, ..p })
        })
        .collect()
}

pub fn gamma_sweep_n(
    ns: &[u32],
    rate: f64,
    model: Option<ChannelModel>,
    use_dr: bool,
) -> Result<Vec<(u32, f64)>, ConstructionError> {
    let model = if use_dr {
        Some(model.ok_or(ConstructionError::MissingChannel("dimension reduction"))?)
    } else {
        None
    };
    let points = gamma_sweep_n_with(&mut Fresh, ns, rate, model, &ConstructOptions::default())?;
    Ok(points
        .into_iter()
        .map(|p| (p.x as u32, p.gamma_po_dr.unwrap_or(p.gamma_po)))
        .collect())
}

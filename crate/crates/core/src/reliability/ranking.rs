use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{ChannelModel, ReliabilityError, MAX_RANKING_LEVELS};

pub const RANKING_FORMAT_VERSION: u32 = 1;

/// A best-first total order of the `2^n_u` bit channels at one block length.
///
/// Channels whose metrics tie are kept in ascending index order and the tie
/// is recorded; tied channels are never treated as strictly ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityRanking {
    levels: u32,
    model: ChannelModel,
    evaluator: String,
    metric: Vec<f64>,
    order: Vec<u32>,
    ties: Vec<[u32; 2]>,
    // derived
    group: Vec<u32>,
    position: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RankingFile {
    version: u32,
    n_u: u32,
    channel: String,
    evaluator: String,
    metric: Vec<f64>,
    order: Vec<u32>,
    ties: Vec<[u32; 2]>,
}

fn format_err(msg: impl Into<String>) -> ReliabilityError {
    ReliabilityError::Format(msg.into())
}

impl ReliabilityRanking {
    /// Sorts channels by `metric` (indexed by channel, larger is better),
    /// breaking ties toward the lower index.
    pub fn from_metric(
        model: ChannelModel,
        levels: u32,
        evaluator: impl Into<String>,
        metric: Vec<f64>,
    ) -> Result<Self, ReliabilityError> {
        if levels == 0 || levels > MAX_RANKING_LEVELS {
            return Err(ReliabilityError::Levels(levels));
        }
        if metric.len() != 1usize << levels {
            return Err(format_err(format!(
                "expected {} metric values, got {}",
                1usize << levels,
                metric.len()
            )));
        }
        let mut order: Vec<u32> = (1..=metric.len() as u32).collect();
        order.sort_by(|&a, &b| {
            metric[b as usize - 1]
                .total_cmp(&metric[a as usize - 1])
                .then(a.cmp(&b))
        });
        let ties = order
            .windows(2)
            .filter(|w| metric[w[0] as usize - 1] == metric[w[1] as usize - 1])
            .map(|w| [w[0], w[1]])
            .collect();
        Self::from_parts(model, levels, evaluator.into(), metric, order, ties)
    }

    fn from_parts(
        model: ChannelModel,
        levels: u32,
        evaluator: String,
        metric: Vec<f64>,
        order: Vec<u32>,
        ties: Vec<[u32; 2]>,
    ) -> Result<Self, ReliabilityError> {
        if levels == 0 || levels > MAX_RANKING_LEVELS {
            return Err(ReliabilityError::Levels(levels));
        }
        let size = 1usize << levels;
        if metric.len() != size || order.len() != size {
            return Err(format_err(format!(
                "expected {size} entries, got {} metric values and {} order entries",
                metric.len(),
                order.len()
            )));
        }
        if let Some(x) = metric.iter().find(|x| !x.is_finite()) {
            return Err(format_err(format!("non-finite metric value {x}")));
        }
        let mut position = vec![u32::MAX; size];
        for (k, &c) in order.iter().enumerate() {
            if c == 0 || c as usize > size {
                return Err(format_err(format!("order entry {c} outside 1..={size}")));
            }
            if position[c as usize - 1] != u32::MAX {
                return Err(format_err(format!("channel {c} appears twice in order")));
            }
            position[c as usize - 1] = k as u32;
        }
        for w in order.windows(2) {
            if metric[w[0] as usize - 1] < metric[w[1] as usize - 1] {
                return Err(format_err(format!(
                    "metric increases from channel {} to channel {}",
                    w[0], w[1]
                )));
            }
        }
        let mut tie_after = vec![false; size];
        for &[a, b] in &ties {
            let (pa, pb) = match (a, b) {
                (1.., 1..) if a as usize <= size && b as usize <= size => {
                    (position[a as usize - 1], position[b as usize - 1])
                }
                _ => return Err(format_err(format!("tie [{a}, {b}] names an unknown channel"))),
            };
            if pb != pa + 1 || metric[a as usize - 1] != metric[b as usize - 1] {
                return Err(format_err(format!(
                    "tie [{a}, {b}] is not an adjacent pair with equal metric"
                )));
            }
            tie_after[pa as usize] = true;
        }
        let mut group = vec![0u32; size];
        let mut g = 0u32;
        for (k, &c) in order.iter().enumerate() {
            if k > 0 && !tie_after[k - 1] {
                g += 1;
            }
            group[c as usize - 1] = g;
        }
        Ok(Self {
            levels,
            model,
            evaluator,
            metric,
            order,
            ties,
            group,
            position,
        })
    }

    /// `n_u`: the ranking covers `2^n_u` channels.
    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn block_length(&self) -> u32 {
        1 << self.levels
    }

    pub fn model(&self) -> ChannelModel {
        self.model
    }

    pub fn evaluator(&self) -> &str {
        &self.evaluator
    }

    /// Quality per channel (`metric()[i - 1]`), larger is better.
    pub fn metric(&self) -> &[f64] {
        &self.metric
    }

    /// Channels best first.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn ties(&self) -> &[[u32; 2]] {
        &self.ties
    }

    /// Zero-based rank of channel `i` (0 = best).
    pub fn position(&self, i: u32) -> u32 {
        self.position[i as usize - 1]
    }

    /// Whether channel `a` is ranked above `b` and not tied with it.
    pub fn strictly_better(&self, a: u32, b: u32) -> bool {
        self.group[a as usize - 1] < self.group[b as usize - 1]
    }

    /// The `k` best channels.
    pub fn best(&self, k: usize) -> &[u32] {
        &self.order[..k.min(self.order.len())]
    }

    pub fn to_json(&self) -> String {
        let file = RankingFile {
            version: RANKING_FORMAT_VERSION,
            n_u: self.levels,
            channel: self.model.to_string(),
            evaluator: self.evaluator.clone(),
            metric: self.metric.clone(),
            order: self.order.clone(),
            ties: self.ties.clone(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("ranking serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, ReliabilityError> {
        let file: RankingFile = serde_json::from_str(text)?;
        if file.version != RANKING_FORMAT_VERSION {
            return Err(format_err(format!(
                "unsupported ranking format version {} (expected {RANKING_FORMAT_VERSION})",
                file.version
            )));
        }
        let model = file.channel.parse()?;
        Self::from_parts(
            model,
            file.n_u,
            file.evaluator,
            file.metric,
            file.order,
            file.ties,
        )
    }
}

/// Ranks the `2^n_u` channels with the built-in evaluator for `model`.
pub fn rank_channels(model: ChannelModel, n_u: u32) -> Result<ReliabilityRanking, ReliabilityError> {
    if n_u == 0 || n_u > MAX_RANKING_LEVELS {
        return Err(ReliabilityError::Levels(n_u));
    }
    ReliabilityRanking::from_metric(model, n_u, model.evaluator(), model.metric(n_u))
}

/// Reads and validates a ranking in the JSON exchange format.
pub fn import_ranking<R: Read>(mut reader: R) -> Result<ReliabilityRanking, ReliabilityError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| format_err(format!("read failed: {e}")))?;
    ReliabilityRanking::from_json(&text)
}

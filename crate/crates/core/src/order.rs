//! Channel-independent partial orders between bit channels and the packed
//! pairwise relation matrix built from them.
//!
//! Two orders are combined. The first relates channels of equal Hamming
//! weight: moving a 1 of the expansion to a higher position gives a better
//! channel. The second is bitwise domination: turning a 0 into a 1 gives a
//! better channel. Their transitive closure is decided without any graph
//! search by a single scan over the digit difference of the two expansions.

use std::fmt;

use thiserror::Error;

use crate::index::{BitIndex, IndexError};
use crate::par;

/// Largest number of levels for which a full relation matrix is built.
/// At `n = 13` the three bit planes take about 50 MiB.
pub const MAX_MATRIX_LEVELS: u32 = 13;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("relation matrix for n = {n} exceeds the supported bound n <= {MAX_MATRIX_LEVELS}")]
    TooLarge { n: u32 },
    #[error("relation matrices differ in size (n = {left} vs n = {right})")]
    SizeMismatch { left: u32, right: u32 },
    #[error("inconsistent relations: channel {better} is both better and worse than channel {worse}")]
    Cycle { better: u32, worse: u32 },
}

/// `j ↗ i`: the expansions differ in exactly two positions `l < l'`, where
/// `j` has its 1 at `l` and `i` has it at `l'`.
pub fn po1_swap_cover(j: BitIndex, i: BitIndex) -> bool {
    debug_assert_eq!(j.levels(), i.levels());
    swap_cover_raw(j.raw(), i.raw())
}

/// Bitwise domination: every 1 of `j - 1` is also a 1 of `i - 1`.
pub fn po2_leq(j: BitIndex, i: BitIndex) -> bool {
    debug_assert_eq!(j.levels(), i.levels());
    j.raw() & !i.raw() == 0
}

/// Combined order: `j` is degraded with respect to `i` (reflexive).
///
/// Scanning from the most significant position down, a counter is raised for
/// every position where only `i` has a 1 and lowered where only `j` has one.
/// `j ⪯ i` iff the counter never drops below zero.
pub fn combined_leq(j: BitIndex, i: BitIndex) -> bool {
    debug_assert_eq!(j.levels(), i.levels());
    combined_leq_raw(j.raw(), i.raw(), i.levels())
}

pub(crate) fn swap_cover_raw(j: u32, i: u32) -> bool {
    let diff = j ^ i;
    if diff.count_ones() != 2 {
        return false;
    }
    let low = diff & diff.wrapping_neg();
    let high = diff ^ low;
    j & low != 0 && i & high != 0
}

pub(crate) fn combined_leq_raw(j: u32, i: u32, levels: u32) -> bool {
    let mut balance = 0i32;
    for t in (0..levels).rev() {
        balance += ((i >> t) & 1) as i32 - ((j >> t) & 1) as i32;
        if balance < 0 {
            return false;
        }
    }
    true
}

/// Relation of the higher-indexed channel of a pair to the lower-indexed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Unknown,
    BetterHighLow,
    WorseHighLow,
}

/// Which stage of the construction determined a relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Po,
    Dr,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Po => "PO",
            Source::Dr => "DR",
        })
    }
}

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

#[inline]
fn test_bit(words: &[u64], k: usize) -> bool {
    words[k >> 6] >> (k & 63) & 1 == 1
}

#[inline]
fn set_bit(words: &mut [u64], k: usize, value: bool) {
    let mask = 1u64 << (k & 63);
    if value {
        words[k >> 6] |= mask;
    } else {
        words[k >> 6] &= !mask;
    }
}

/// Strict lower triangle of pairwise relations, stored as three bit planes
/// (`better`, `worse`, DR source) with every row starting on a word boundary.
///
/// Entry `(i, j)` with `1 <= j < i <= N` lives in row `i` at bit `j - 1`.
#[derive(Clone, PartialEq, Eq)]
pub struct RelationMatrix {
    levels: u32,
    row_start: Vec<usize>,
    better: Vec<u64>,
    worse: Vec<u64>,
    dr: Vec<u64>,
}

impl fmt::Debug for RelationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RelationMatrix")
            .field("levels", &self.levels)
            .field("determined", &self.determined_count())
            .field("pairs", &self.pair_count())
            .finish()
    }
}

impl RelationMatrix {
    /// All-unknown matrix for `N = 2^n` channels.
    pub fn empty(n: u32) -> Result<Self, OrderError> {
        if n == 0 {
            return Err(IndexError::Levels(n).into());
        }
        if n > MAX_MATRIX_LEVELS {
            return Err(OrderError::TooLarge { n });
        }
        let size = 1usize << n;
        // row_start[i] for i in 0..=N+1; rows 0 and 1 are empty.
        let mut row_start = Vec::with_capacity(size + 2);
        let mut offset = 0usize;
        row_start.push(0);
        for i in 1..=size {
            row_start.push(offset);
            offset += words_for(i - 1);
        }
        row_start.push(offset);
        Ok(Self {
            levels: n,
            row_start,
            better: vec![0; offset],
            worse: vec![0; offset],
            dr: vec![0; offset],
        })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Number of channels `N`.
    pub fn block_length(&self) -> u32 {
        1 << self.levels
    }

    /// Number of stored pairs, `N (N - 1) / 2`.
    pub fn pair_count(&self) -> u64 {
        let n = self.block_length() as u64;
        n * (n - 1) / 2
    }

    fn row(&self, i: u32) -> std::ops::Range<usize> {
        self.row_start[i as usize]..self.row_start[i as usize + 1]
    }

    fn locate(&self, i: u32, j: u32) -> (usize, usize) {
        assert!(
            j >= 1 && j < i && i <= self.block_length(),
            "pair ({i}, {j}) is not in the strict lower triangle"
        );
        (self.row_start[i as usize], (j - 1) as usize)
    }

    /// Relation stored for the pair `i > j`.
    pub fn get(&self, i: u32, j: u32) -> Relation {
        let (start, k) = self.locate(i, j);
        let words = start..self.row_start[i as usize + 1];
        if test_bit(&self.better[words.clone()], k) {
            Relation::BetterHighLow
        } else if test_bit(&self.worse[words], k) {
            Relation::WorseHighLow
        } else {
            Relation::Unknown
        }
    }

    /// Source of a determined pair `i > j`; `None` while unknown.
    pub fn source(&self, i: u32, j: u32) -> Option<Source> {
        if self.get(i, j) == Relation::Unknown {
            return None;
        }
        let (start, k) = self.locate(i, j);
        Some(if test_bit(&self.dr[start..], k) {
            Source::Dr
        } else {
            Source::Po
        })
    }

    pub fn set(&mut self, i: u32, j: u32, relation: Relation, source: Source) {
        let (start, k) = self.locate(i, j);
        let end = self.row_start[i as usize + 1];
        set_bit(
            &mut self.better[start..end],
            k,
            relation == Relation::BetterHighLow,
        );
        set_bit(
            &mut self.worse[start..end],
            k,
            relation == Relation::WorseHighLow,
        );
        set_bit(
            &mut self.dr[start..end],
            k,
            relation != Relation::Unknown && source == Source::Dr,
        );
    }

    /// Records "`better` is better than `worse`" in whichever orientation the
    /// pair is stored.
    pub fn set_better(&mut self, better: u32, worse: u32, source: Source) {
        if better > worse {
            self.set(better, worse, Relation::BetterHighLow, source);
        } else {
            self.set(worse, better, Relation::WorseHighLow, source);
        }
    }

    /// Whether channel `a` is known to be strictly better than channel `b`.
    pub fn is_better(&self, a: u32, b: u32) -> bool {
        match a.cmp(&b) {
            std::cmp::Ordering::Equal => false,
            std::cmp::Ordering::Greater => self.get(a, b) == Relation::BetterHighLow,
            std::cmp::Ordering::Less => self.get(b, a) == Relation::WorseHighLow,
        }
    }

    pub fn is_determined(&self, a: u32, b: u32) -> bool {
        a != b && (self.is_better(a, b) || self.is_better(b, a))
    }

    pub fn determined_count(&self) -> u64 {
        self.better
            .iter()
            .chain(&self.worse)
            .map(|w| w.count_ones() as u64)
            .sum()
    }

    pub fn count_by_source(&self, source: Source) -> u64 {
        let dr: u64 = self.dr.iter().map(|w| w.count_ones() as u64).sum();
        match source {
            Source::Dr => dr,
            Source::Po => self.determined_count() - dr,
        }
    }

    /// Fraction of pairs with a known relation.
    pub fn density(&self) -> f64 {
        self.determined_count() as f64 / self.pair_count() as f64
    }

    /// All determined pairs as `(better, worse, source)`, row-major.
    pub fn determined(&self) -> impl Iterator<Item = (u32, u32, Source)> + '_ {
        (2..=self.block_length()).flat_map(move |i| {
            (1..i).filter_map(move |j| match self.get(i, j) {
                Relation::Unknown => None,
                Relation::BetterHighLow => Some((i, j, self.source(i, j).unwrap())),
                Relation::WorseHighLow => Some((j, i, self.source(i, j).unwrap())),
            })
        })
    }

    pub(crate) fn row_planes(&self, i: u32) -> (&[u64], &[u64], &[u64]) {
        let r = self.row(i);
        (&self.better[r.clone()], &self.worse[r.clone()], &self.dr[r])
    }

    /// Checks that the strict-better digraph has no directed cycle.
    pub fn check_acyclic(&self) -> Result<(), OrderError> {
        let size = self.block_length() as usize;
        let mut indegree = vec![0u32; size + 1];
        let mut out: Vec<Vec<u32>> = vec![Vec::new(); size + 1];
        for (better, worse, _) in self.determined() {
            out[better as usize].push(worse);
            indegree[worse as usize] += 1;
        }
        let mut stack: Vec<u32> = (1..=size as u32)
            .filter(|&v| indegree[v as usize] == 0)
            .collect();
        let mut visited = 0usize;
        while let Some(v) = stack.pop() {
            visited += 1;
            for &w in &out[v as usize] {
                indegree[w as usize] -= 1;
                if indegree[w as usize] == 0 {
                    stack.push(w);
                }
            }
        }
        if visited == size {
            return Ok(());
        }
        // Some edge between two vertices left on the cycle residue.
        for (better, worse, _) in self.determined() {
            if indegree[better as usize] > 0 && indegree[worse as usize] > 0 {
                return Err(OrderError::Cycle { better, worse });
            }
        }
        unreachable!("topological sort stalled without a residual edge")
    }
}

/// Relation matrix of everything the combined order determines for `N = 2^n`.
///
/// Since the combined order never ranks a lower index above a higher one,
/// every determined entry is `BetterHighLow`.
pub fn po_relation_matrix(n: u32) -> Result<RelationMatrix, OrderError> {
    let mut matrix = RelationMatrix::empty(n)?;
    let size = matrix.block_length();
    let rows = par::map_range(2..size + 1, |i| {
        let mut words = vec![0u64; words_for(i as usize - 1)];
        for j in 1..i {
            if combined_leq_raw(j - 1, i - 1, n) {
                set_bit(&mut words, (j - 1) as usize, true);
            }
        }
        words
    });
    for (i, words) in (2..=size).zip(rows) {
        let r = matrix.row(i);
        matrix.better[r].copy_from_slice(&words);
    }
    Ok(matrix)
}

/// Per-channel counts of provably worse (`worse_count`) and provably better
/// (`better_count`) channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVectors {
    pub worse_count: Vec<u32>,
    pub better_count: Vec<u32>,
}

impl DegreeVectors {
    pub fn block_length(&self) -> u32 {
        self.worse_count.len() as u32
    }

    /// Count of channels worse than channel `i` (1-based).
    pub fn worse_than(&self, i: u32) -> u32 {
        self.worse_count[i as usize - 1]
    }

    /// Count of channels better than channel `i` (1-based).
    pub fn better_than(&self, i: u32) -> u32 {
        self.better_count[i as usize - 1]
    }
}

/// Counts, for every channel, how many channels it provably beats and how
/// many provably beat it, reading both orientations of the stored entries.
pub fn counting_channels(matrix: &RelationMatrix) -> DegreeVectors {
    counting_channels_filtered(matrix, None)
}

/// Like [`counting_channels`], restricted to entries from one source.
pub fn counting_channels_from(matrix: &RelationMatrix, source: Source) -> DegreeVectors {
    counting_channels_filtered(matrix, Some(source))
}

fn counting_channels_filtered(matrix: &RelationMatrix, only: Option<Source>) -> DegreeVectors {
    let size = matrix.block_length();
    let keep = |dr_bit: bool| match only {
        None => true,
        Some(Source::Dr) => dr_bit,
        Some(Source::Po) => !dr_bit,
    };
    let counts = par::map_range(1..size + 1, |c| {
        // Row part: entries (c, j) with j < c.
        let (mut worse_than_c, mut better_than_c) = (0u32, 0u32);
        if c >= 2 {
            let (better, worse, dr) = matrix.row_planes(c);
            for k in 0..(c - 1) as usize {
                let d = test_bit(dr, k);
                if test_bit(better, k) && keep(d) {
                    worse_than_c += 1;
                } else if test_bit(worse, k) && keep(d) {
                    better_than_c += 1;
                }
            }
        }
        // Column part: entries (i, c) with i > c.
        let k = (c - 1) as usize;
        for i in c + 1..=size {
            let (better, worse, dr) = matrix.row_planes(i);
            let d = test_bit(dr, k);
            if test_bit(better, k) && keep(d) {
                better_than_c += 1;
            } else if test_bit(worse, k) && keep(d) {
                worse_than_c += 1;
            }
        }
        (worse_than_c, better_than_c)
    });
    let (worse_count, better_count) = counts.into_iter().unzip();
    DegreeVectors {
        worse_count,
        better_count,
    }
}

/// Adds every relation implied by transitivity. New entries are tagged
/// [`Source::Dr`]; an inconsistent input is reported as a cycle.
pub fn transitive_closure(matrix: &RelationMatrix) -> Result<RelationMatrix, OrderError> {
    matrix.check_acyclic()?;
    let size = matrix.block_length() as usize;
    let width = words_for(size);
    // reach[a] holds every channel that `a` is better than (0-based bits).
    let mut reach = vec![vec![0u64; width]; size];
    for (better, worse, _) in matrix.determined() {
        set_bit(&mut reach[better as usize - 1], worse as usize - 1, true);
    }
    for k in 0..size {
        let pivot = reach[k].clone();
        if pivot.iter().all(|&w| w == 0) {
            continue;
        }
        par::for_each_mut(&mut reach, |_, row| {
            if test_bit(row, k) {
                for (dst, src) in row.iter_mut().zip(&pivot) {
                    *dst |= src;
                }
            }
        });
    }
    let mut closed = matrix.clone();
    for (a, row) in reach.iter().enumerate() {
        let better = a as u32 + 1;
        for (w, &word) in row.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let worse = (w * 64 + bits.trailing_zeros() as usize) as u32 + 1;
                bits &= bits - 1;
                if !matrix.is_determined(better, worse) {
                    closed.set_better(better, worse, Source::Dr);
                }
            }
        }
    }
    Ok(closed)
}

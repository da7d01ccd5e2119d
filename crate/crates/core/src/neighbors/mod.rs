//! Exact k-nearest-neighbor graphs.
//!
//! Neighbor ranks are 1-based throughout: rank 1 is the nearest point other
//! than the query itself. Ties in distance are broken by ascending point
//! index, so graphs are fully deterministic.

mod kernel;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

pub use kernel::{euclidean, squared_euclidean};

use crate::dataset::Dataset;
use crate::error::{out_of_range, Error, Result};

/// Per-point neighbor lists sorted by ascending distance.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    n: usize,
    k_max: usize,
    indices: Vec<u32>,
    distances: Vec<f64>,
    origin: Option<Vec<usize>>,
}

/// Anything that can report the distance from point `i` to its neighbor of
/// a given rank. Implemented by the full graph and by rank-subset views.
pub trait RankDistances {
    fn n_points(&self) -> usize;
    fn has_rank(&self, rank: usize) -> bool;
    /// Distance from `i` to its `rank`-th neighbor; panics if the rank is
    /// not stored.
    fn rank_distance(&self, i: usize, rank: usize) -> f64;
}

impl NeighborGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Neighbor ids of `i`, nearest first.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.indices[i * self.k_max..(i + 1) * self.k_max]
    }

    /// Neighbor distances of `i`, non-decreasing.
    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k_max..(i + 1) * self.k_max]
    }

    /// Id of the `rank`-th neighbor of `i` (1-based rank).
    pub fn neighbor(&self, i: usize, rank: usize) -> usize {
        self.indices[i * self.k_max + rank - 1] as usize
    }

    /// Distance to the `rank`-th neighbor of `i` (1-based rank).
    pub fn distance(&self, i: usize, rank: usize) -> f64 {
        self.distances[i * self.k_max + rank - 1]
    }

    /// For graphs built on a subset: the original row id of each point.
    pub fn origin(&self) -> Option<&[usize]> {
        self.origin.as_deref()
    }

    /// Keeps only the ranks that are powers of two (1, 2, 4, ...), which is
    /// all a doubling scan needs: `N·log2(k)` storage instead of `N·k`.
    pub fn power_of_two_ranks(&self) -> RankSubset {
        let ranks: Vec<usize> = std::iter::successors(Some(1usize), |r| Some(r * 2))
            .take_while(|&r| r <= self.k_max)
            .collect();
        self.rank_subset(&ranks)
    }

    pub fn rank_subset(&self, ranks: &[usize]) -> RankSubset {
        let mut ranks = ranks.to_vec();
        ranks.sort_unstable();
        ranks.dedup();
        ranks.retain(|&r| r >= 1 && r <= self.k_max);
        let mut distances = Vec::with_capacity(self.n * ranks.len());
        for i in 0..self.n {
            distances.extend(ranks.iter().map(|&r| self.distance(i, r)));
        }
        RankSubset {
            n: self.n,
            ranks,
            distances,
        }
    }

    /// Dumps the graph as `b"MSG1" | u32 N | u32 k_max | N*k i32 | N*k f64`
    /// (little-endian).
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&self.encode())?;
        out.flush()?;
        Ok(())
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let mut buf = Vec::new();
        File::open(path)?.read_to_end(&mut buf)?;
        Self::decode(&buf)
    }

    fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(12 + self.indices.len() * 12);
        buf.extend_from_slice(b"MSG1");
        buf.extend_from_slice(&(self.n as u32).to_le_bytes());
        buf.extend_from_slice(&(self.k_max as u32).to_le_bytes());
        for &i in &self.indices {
            buf.extend_from_slice(&(i as i32).to_le_bytes());
        }
        for d in &self.distances {
            buf.extend_from_slice(&d.to_le_bytes());
        }
        buf
    }

    fn decode(buf: &[u8]) -> Result<Self> {
        if buf.len() < 12 || &buf[..4] != b"MSG1" {
            return Err(Error::Format("missing MSG1 magic".into()));
        }
        let n = u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize;
        let k_max = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
        let len = n * k_max;
        if buf.len() != 12 + len * 12 {
            return Err(Error::Format(format!("bad MSG1 length for {n}x{k_max}")));
        }
        let indices: Vec<u32> = buf[12..12 + 4 * len]
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
            .map(|v| u32::try_from(v).map_err(|_| Error::Format("negative neighbor id".into())))
            .collect::<Result<_>>()?;
        if indices.iter().any(|&v| v as usize >= n) {
            return Err(Error::Format("neighbor id out of range".into()));
        }
        let distances = buf[12 + 4 * len..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            n,
            k_max,
            indices,
            distances,
            origin: None,
        })
    }
}

impl RankDistances for NeighborGraph {
    fn n_points(&self) -> usize {
        self.n
    }

    fn has_rank(&self, rank: usize) -> bool {
        rank >= 1 && rank <= self.k_max
    }

    fn rank_distance(&self, i: usize, rank: usize) -> f64 {
        self.distance(i, rank)
    }
}

/// Distances at a chosen set of ranks only.
#[derive(Debug, Clone, PartialEq)]
pub struct RankSubset {
    n: usize,
    ranks: Vec<usize>,
    distances: Vec<f64>,
}

impl RankSubset {
    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }
}

impl RankDistances for RankSubset {
    fn n_points(&self) -> usize {
        self.n
    }

    fn has_rank(&self, rank: usize) -> bool {
        self.ranks.binary_search(&rank).is_ok()
    }

    fn rank_distance(&self, i: usize, rank: usize) -> f64 {
        let slot = self
            .ranks
            .binary_search(&rank)
            .unwrap_or_else(|_| panic!("rank {rank} not stored"));
        self.distances[i * self.ranks.len() + slot]
    }
}

/// Exact Euclidean kNN graph of all points.
pub fn build_knn(data: &Dataset, k_max: usize) -> Result<NeighborGraph> {
    let members: Vec<usize> = (0..data.n()).collect();
    build(data, &members, k_max, None)
}

/// kNN graph among `subset` only. Point `p` of the returned graph is
/// `subset[p]`; neighbor ids are positions in `subset`.
pub fn subsample_graph(data: &Dataset, subset: &[usize], k_max: usize) -> Result<NeighborGraph> {
    let mut seen = HashSet::with_capacity(subset.len());
    for &i in subset {
        if i >= data.n() {
            return Err(out_of_range(format!("subset index {i} >= {}", data.n())));
        }
        if !seen.insert(i) {
            return Err(Error::InvalidData(format!("duplicate subset index {i}")));
        }
    }
    build(data, subset, k_max, Some(subset.to_vec()))
}

fn build(data: &Dataset, members: &[usize], k_max: usize, origin: Option<Vec<usize>>) -> Result<NeighborGraph> {
    let m = members.len();
    if k_max == 0 || k_max >= m {
        return Err(out_of_range(format!(
            "k_max must be in [1, {}] for {m} points, got {k_max}",
            m.saturating_sub(1)
        )));
    }
    if m > u32::MAX as usize {
        return Err(out_of_range("too many points"));
    }
    let (indices, distances) = kernel::knn_among(data.points(), data.dim(), members, k_max);
    Ok(NeighborGraph {
        n: m,
        k_max,
        indices,
        distances,
        origin,
    })
}

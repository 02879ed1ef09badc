//! Grid and hypercube index arithmetic.
//!
//! Coordinates are stored 0-based and shown 1-based. Every public function
//! that takes or returns coordinates, chain positions, pages, levels or
//! sections says which convention it uses; the default at the API surface is
//! 1-based.
//!
//! Vertex rank is reversed-lexicographic: `x1` varies fastest and `xk` is the
//! most significant digit. With that order the i-pages are contiguous rank
//! blocks of length `a1*...*ai`.

use crate::error::{out_of_range, Error, Result};

/// Default vertex cap for anything that materializes per-vertex data.
pub const DEFAULT_CAP: u64 = 1 << 26;

/// `ceil(log2(p))` for `p >= 1`, by bit length.
pub fn ceil_log2(p: u128) -> u32 {
    assert!(p >= 1, "ceil_log2 of zero");
    if p == 1 {
        0
    } else {
        128 - (p - 1).leading_zeros()
    }
}

/// Exponents `e0..=ek` with `e_i = ceil(log2(a1*...*ai))` and `e0 = 0`.
pub fn compute_exponents(dims: &[u64]) -> Result<Vec<u32>> {
    if dims.is_empty() {
        return Err(Error::InvalidGrid("no side lengths given".into()));
    }
    let mut out = Vec::with_capacity(dims.len() + 1);
    out.push(0);
    let mut prod: u128 = 1;
    for (idx, &a) in dims.iter().enumerate() {
        if a < 2 {
            return Err(Error::InvalidGrid(format!(
                "side length a{} = {} is below 2",
                idx + 1,
                a
            )));
        }
        prod = prod
            .checked_mul(a as u128)
            .ok_or_else(|| Error::InvalidGrid("product of side lengths overflows".into()))?;
        out.push(ceil_log2(prod));
    }
    Ok(out)
}

/// A grid `[a1 x ... x ak]` with its derived exponents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    dims: Vec<u64>,
    exps: Vec<u32>,
    // prefix[i] = a1*...*ai, prefix[0] = 1
    prefix: Vec<u64>,
    total: u64,
}

impl GridSpec {
    /// Builds a spec under the default vertex cap.
    pub fn new(dims: &[u64]) -> Result<Self> {
        Self::with_cap(dims, DEFAULT_CAP)
    }

    pub fn with_cap(dims: &[u64], cap: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 dimensions, got {}",
                dims.len()
            )));
        }
        let exps = compute_exponents(dims)?;
        let mut prefix = vec![1u64];
        let mut prod: u128 = 1;
        for &a in dims {
            prod *= a as u128;
            if prod > cap as u128 {
                let total = dims.iter().map(|&a| a as u128).product();
                return Err(Error::TooLarge { total, cap });
            }
            prefix.push(prod as u64);
        }
        Ok(GridSpec {
            dims: dims.to_vec(),
            exps,
            total: prod as u64,
            prefix,
        })
    }

    /// Number of dimensions `k`.
    pub fn k(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    /// Side length `a_i`, 1-based.
    pub fn a(&self, i: usize) -> u64 {
        self.dims[i - 1]
    }

    /// `e0..=ek`.
    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn e(&self, i: usize) -> u32 {
        self.exps[i]
    }

    /// Width `e_j - e_{j-1}` of hypercube block `j` (1-based).
    pub fn block_width(&self, j: usize) -> u32 {
        self.exps[j] - self.exps[j - 1]
    }

    /// Dimension of the optimal hypercube, `ceil(log2 |G|)`.
    pub fn opt_dim(&self) -> u32 {
        self.exps[self.k()]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `a1*...*ai`; `prefix_product(0) = 1`.
    pub fn prefix_product(&self, i: usize) -> u64 {
        self.prefix[i]
    }

    /// `P_i = a_{i+1}*...*a_k`, the number of i-pages.
    pub fn page_count(&self, i: usize) -> u64 {
        self.total / self.prefix[i]
    }

    /// `u_i = ceil(|G| / 2^{e_{i-1}})`, defined for `2 <= i <= k`.
    pub fn level_budget(&self, i: usize) -> Result<u64> {
        if i < 2 || i > self.k() {
            return Err(out_of_range("stage", i as i64, 2, self.k() as i64));
        }
        Ok(self.total.div_ceil(1u64 << self.exps[i - 1]))
    }

    /// `l(i,r) = ceil(r * a1*...*a_{i-1} / 2^{e_{i-1}})`.
    pub fn l(&self, i: usize, r: u64) -> u64 {
        (r * self.prefix[i - 1]).div_ceil(1u64 << self.exps[i - 1])
    }

    /// `l'(i,r) = ceil(r * a1*...*a_i / 2^{e_{i-1}})`.
    pub fn l_prime(&self, i: usize, r: u64) -> u64 {
        (r * self.prefix[i]).div_ceil(1u64 << self.exps[i - 1])
    }

    /// Rank of a 0-based coordinate tuple.
    pub fn rank0(&self, coords: &[u32]) -> u64 {
        debug_assert_eq!(coords.len(), self.k());
        coords
            .iter()
            .zip(&self.prefix)
            .map(|(&x, &w)| x as u64 * w)
            .sum()
    }

    /// 0-based coordinates of the vertex with the given rank.
    pub fn unrank0(&self, mut rank: u64) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.k());
        for &a in &self.dims {
            out.push((rank % a) as u32);
            rank /= a;
        }
        out
    }

    /// 1-based page number of the vertex with this rank among the i-pages,
    /// for `1 <= i <= k`.
    pub fn page_of_rank(&self, rank: u64, i: usize) -> u64 {
        rank / self.prefix[i] + 1
    }

    /// Vertex ranks adjacent to `rank` along dimension `d` (1-based), in the
    /// positive direction only.
    pub fn forward_neighbor(&self, rank: u64, d: usize) -> Option<u64> {
        let x = (rank / self.prefix[d - 1]) % self.dims[d - 1];
        (x + 1 < self.dims[d - 1]).then(|| rank + self.prefix[d - 1])
    }
}

/// A grid vertex, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridVertex {
    coords: Vec<u32>,
}

impl GridVertex {
    /// From 1-based coordinates.
    pub fn new(spec: &GridSpec, one_based: &[u32]) -> Result<Self> {
        if one_based.len() != spec.k() {
            return Err(Error::Dimension(format!(
                "vertex has {} coordinates, grid has {}",
                one_based.len(),
                spec.k()
            )));
        }
        let mut coords = Vec::with_capacity(one_based.len());
        for (&x, &a) in one_based.iter().zip(spec.dims()) {
            if x < 1 || x as u64 > a {
                return Err(out_of_range("coordinate", x as i64, 1, a as i64));
            }
            coords.push(x - 1);
        }
        Ok(GridVertex { coords })
    }

    pub fn from_rank(spec: &GridSpec, rank: u64) -> Self {
        GridVertex {
            coords: spec.unrank0(rank),
        }
    }

    pub fn rank(&self, spec: &GridSpec) -> u64 {
        spec.rank0(&self.coords)
    }

    pub fn coords0(&self) -> &[u32] {
        &self.coords
    }

    pub fn one_based(&self) -> Vec<u32> {
        self.coords.iter().map(|&x| x + 1).collect()
    }
}

/// A level `c >= 1` of stage `i`, split into its section and offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelAddress {
    pub stage: usize,
    pub level: u64,
    pub section: u64,
    pub offset: u64,
}

impl LevelAddress {
    pub fn new(spec: &GridSpec, stage: usize, level: u64) -> Result<Self> {
        if stage < 2 || stage > spec.k() {
            return Err(out_of_range("stage", stage as i64, 2, spec.k() as i64));
        }
        if level < 1 {
            return Err(out_of_range("level", level as i64, 1, i64::MAX));
        }
        let n = 1u64 << spec.block_width(stage);
        Ok(LevelAddress {
            stage,
            level,
            section: (level - 1) / n + 1,
            offset: (level - 1) % n + 1,
        })
    }
}

/// Chain identification: `(x1, y)` with
/// `y = (xk-1)W_{k-1} + ... + (x3-1)W_2 + x2`, both 1-based.
pub fn kappa(v: &GridVertex, spec: &GridSpec) -> (u32, u64) {
    let rank = v.rank(spec);
    (v.coords[0] + 1, rank / spec.a(1) + 1)
}

/// `W_i = a2*...*ai`.
pub fn w(spec: &GridSpec, i: usize) -> u64 {
    spec.prefix_product(i) / spec.a(1)
}

/// 1-based index `r` with `v` in the i-page `D_i^r`, for `2 <= i <= k-1`.
pub fn page_index(v: &GridVertex, spec: &GridSpec, i: usize) -> Result<u64> {
    if i < 2 || i + 1 > spec.k() {
        return Err(out_of_range("stage", i as i64, 2, spec.k() as i64 - 1));
    }
    Ok(spec.page_of_rank(v.rank(spec), i))
}

/// `u_i` for the given spec.
pub fn level_budget(spec: &GridSpec, i: usize) -> Result<u64> {
    spec.level_budget(i)
}

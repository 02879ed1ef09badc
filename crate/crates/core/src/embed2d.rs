//! The base map of the chain grid `G(a1)` into `Y2`, and its restriction
//! `f2` to a grid. Chains, chain positions, rows and columns are 1-based.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{ceil_log2, kappa, GridSpec, GridVertex};
use crate::report::Report;

/// The circulant 0/1 matrix with `a1` rows whose first column spreads the
/// `2^e1 - a1` surplus rows evenly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CirculantR {
    a1: u64,
    e1: u32,
    first: Vec<u8>,
}

impl CirculantR {
    pub fn a1(&self) -> u64 {
        self.a1
    }

    pub fn e1(&self) -> u32 {
        self.e1
    }

    pub fn first_column(&self) -> &[u8] {
        &self.first
    }

    /// `R(i,j)` for `1 <= i <= a1` and any `j >= 1`.
    pub fn get(&self, i: u64, j: u64) -> u8 {
        let a = self.a1 as i64;
        let idx = (i as i64 - j as i64).rem_euclid(a);
        self.first[idx as usize]
    }

    /// `S_t = floor(t (2^e1 - a1) / a1)`.
    pub fn s(&self, t: u64) -> u64 {
        (t as u128 * self.surplus() as u128 / self.a1 as u128) as u64
    }

    pub fn surplus(&self) -> u64 {
        (1u64 << self.e1) - self.a1
    }

    /// True when every cyclic run of `t` consecutive entries of a row or a
    /// column sums to `S_t` or `S_t + 1`.
    pub fn consecutive_sum(&self, t: u64) -> bool {
        let s = self.s(t);
        let a = self.a1;
        // by circulance, runs in row 1 and column 1 cover every case
        (1..=a).all(|start| {
            let col: u64 = (0..t).map(|d| self.get((start - 1 + d) % a + 1, 1) as u64).sum();
            let row: u64 = (0..t).map(|d| self.get(1, start + d) as u64).sum();
            (s..=s + 1).contains(&col) && (s..=s + 1).contains(&row)
        })
    }
}

/// Builds `R` for `a1` rows; `e1` must equal `ceil(log2 a1)`.
pub fn build_r(a1: u64, e1: u32) -> Result<CirculantR> {
    if a1 < 2 || e1 >= 63 || ceil_log2(a1 as u128) != e1 {
        return Err(Error::Params(format!("e1 = {e1} is not ceil(log2 {a1})")));
    }
    let surplus = (1u64 << e1) - a1;
    let fl = |i: u64| (i as u128 * surplus as u128 / a1 as u128) as u64;
    let first = (1..=a1).map(|i| (fl(i) - fl(i - 1)) as u8).collect::<Vec<_>>();
    let r = CirculantR { a1, e1, first };
    debug_assert_eq!(r.first.iter().map(|&b| b as u64).sum::<u64>(), surplus);
    Ok(r)
}

/// The column-filling map on the first `m` columns of `Y2`.
#[derive(Debug, Clone)]
pub struct Embedding2D {
    r: CirculantR,
    m: u64,
    height: u64,
    // n[i-1][j] = N_{ij}, points of chain i in columns 1..j
    n: Vec<Vec<u32>>,
    // images[i-1][p-1] = (row, col)
    images: Vec<Vec<(u32, u32)>>,
    // cells[(col-1)*height + row-1] = (chain, pos)
    cells: Vec<(u32, u32)>,
}

/// Occupancy of one chain in one column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnProfile {
    /// `(position, row)` in increasing position.
    pub points: Vec<(u32, u32)>,
}

impl ColumnProfile {
    pub fn count(&self) -> usize {
        self.points.len()
    }

    /// True when the rows form one run of consecutive integers.
    pub fn consecutive(&self) -> bool {
        let mut rows: Vec<u32> = self.points.iter().map(|p| p.1).collect();
        rows.sort_unstable();
        rows.windows(2).all(|w| w[1] == w[0] + 1)
    }
}

impl Embedding2D {
    /// Runs the construction for `m` columns.
    pub fn build(a1: u64, m: u64) -> Result<Self> {
        if m < 1 {
            return Err(Error::Params("need at least one column".into()));
        }
        let e1 = ceil_log2(a1 as u128);
        let r = build_r(a1, e1)?;
        let height = 1u64 << e1;
        let a = a1 as usize;
        let mut images: Vec<Vec<(u32, u32)>> = vec![Vec::new(); a];
        let mut n = vec![vec![0u32; m as usize + 1]; a];
        let mut cells = vec![(0u32, 0u32); (height * m) as usize];
        for col in 1..=m {
            let mut c: u32 = 0;
            for i in 1..=a1 {
                let chain = &mut images[i as usize - 1];
                let mut place = |row: u32, chain: &mut Vec<(u32, u32)>| {
                    chain.push((row, col as u32));
                    let cell = &mut cells[((col - 1) * height + row as u64 - 1) as usize];
                    assert_eq!(*cell, (0, 0), "cell ({row},{col}) filled twice");
                    *cell = (i as u32, chain.len() as u32);
                };
                if r.get(i, col) == 0 {
                    place(c + 1, chain);
                    c += 1;
                } else {
                    // an even column takes the lower point second
                    let (first, second) = if col % 2 == 0 { (c + 2, c + 1) } else { (c + 1, c + 2) };
                    place(first, chain);
                    place(second, chain);
                    c += 2;
                }
                n[i as usize - 1][col as usize] = chain.len() as u32;
            }
            assert_eq!(c as u64, height, "column {col} not filled");
        }
        Ok(Embedding2D { r, m, height, n, images, cells })
    }

    /// Builds for a grid with `m >= u2` columns.
    pub fn for_grid(spec: &GridSpec, m: u64) -> Result<Self> {
        let u2 = spec.level_budget(2)?;
        if m < u2 {
            return Err(Error::Params(format!("m = {m} is below u2 = {u2}")));
        }
        Self::build(spec.a(1), m)
    }

    pub fn r(&self) -> &CirculantR {
        &self.r
    }

    pub fn a1(&self) -> u64 {
        self.r.a1
    }

    pub fn columns(&self) -> u64 {
        self.m
    }

    /// `2^e1`, the column height.
    pub fn height(&self) -> u64 {
        self.height
    }

    /// `N_{ij}` for `0 <= j <= m`.
    pub fn n(&self, i: u64, j: u64) -> u64 {
        self.n[i as usize - 1][j as usize] as u64
    }

    /// Number of mapped points on chain `i` (`N_{i,m}`).
    pub fn chain_len(&self, i: u64) -> u64 {
        self.images[i as usize - 1].len() as u64
    }

    /// `f(i,p) = (row, col)`, if position `p` lies in the first `m` columns.
    pub fn image(&self, i: u64, p: u64) -> Option<(u32, u32)> {
        self.images.get(i as usize - 1)?.get((p as usize).checked_sub(1)?).copied()
    }

    pub fn chain_images(&self, i: u64) -> &[(u32, u32)] {
        &self.images[i as usize - 1]
    }

    /// Preimage `(chain, pos)` of a cell.
    pub fn preimage(&self, row: u64, col: u64) -> (u32, u32) {
        self.cells[((col - 1) * self.height + row - 1) as usize]
    }

    /// `|L_r(j)|`: rows of column `j` taken by chains `1..=r`.
    pub fn l_len(&self, r: u64, j: u64) -> u64 {
        (1..=r).map(|i| 1 + self.r.get(i, j) as u64).sum()
    }

    /// `f2(v)` through the chain identification.
    pub fn f2(&self, spec: &GridSpec, v: &GridVertex) -> Result<(u32, u32)> {
        let (x1, y) = kappa(v, spec);
        self.image(x1 as u64, y).ok_or_else(|| {
            Error::Params(format!("chain position ({x1},{y}) lies beyond column {}", self.m))
        })
    }

    /// `f2` of every vertex, indexed by rank.
    pub fn f2_all(&self, spec: &GridSpec) -> Result<Vec<(u32, u32)>> {
        let a1 = spec.a(1);
        (0..spec.total())
            .map(|rank| {
                let (x1, y) = (rank % a1 + 1, rank / a1 + 1);
                self.image(x1, y)
                    .ok_or_else(|| Error::Params(format!("chain position ({x1},{y}) lies beyond column {}", self.m)))
            })
            .collect()
    }

    /// Points chain `i` places in column `j`.
    pub fn f2_column_profile(&self, i: u64, j: u64) -> ColumnProfile {
        let lo = self.n(i, j - 1);
        let hi = self.n(i, j);
        let imgs = self.chain_images(i);
        ColumnProfile {
            points: (lo + 1..=hi).map(|p| (p as u32, imgs[p as usize - 1].0)).collect(),
        }
    }

    /// Per-column listing `col j: (chain, pos)...` in row order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for col in 1..=self.m {
            let _ = write!(out, "col {col}:");
            for row in 1..=self.height {
                let (c, p) = self.preimage(row, col);
                let _ = write!(out, " ({c},{p})");
            }
            out.push('\n');
        }
        out
    }
}

fn spread<I: IntoIterator<Item = i64>>(it: I) -> i64 {
    let (lo, hi) = it
        .into_iter()
        .fold((i64::MAX, i64::MIN), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if lo > hi {
        0
    } else {
        hi - lo
    }
}

/// The structural battery on the chain map: occupancy, initial segments,
/// window counts, balance, coverage, cross-chain and along-chain bounds.
pub fn theorem_battery(emb: &Embedding2D) -> Report {
    let mut rep = Report::new();
    let a1 = emb.a1();
    let m = emb.columns();
    let r = emb.r();

    // (a) occupancy and monotone columns
    let mut bad = Vec::new();
    for i in 1..=a1 {
        for j in 1..=m {
            let prof = emb.f2_column_profile(i, j);
            if prof.count() != 1 + r.get(i, j) as usize || !prof.consecutive() {
                bad.push(format!("chain {i} column {j}: {:?}", prof.points));
            }
        }
        for w in emb.chain_images(i).windows(2) {
            if !(w[0].1 <= w[1].1 && w[1].1 <= w[0].1 + 1) {
                bad.push(format!("chain {i}: columns {} then {}", w[0].1, w[1].1));
            }
        }
    }
    rep.check("occupancy", bad, true);

    // (b) initial segments
    let mut bad = Vec::new();
    for j in 1..=m {
        let mut below = 0u64;
        for i in 1..=a1 {
            let l = emb.l_len(i, j);
            let prof = emb.f2_column_profile(i, j);
            if prof.points.iter().any(|&(_, row)| (row as u64) <= below || row as u64 > l) {
                bad.push(format!("chain {i} column {j} outside rows {}..={l}", below + 1));
            }
            below = l;
        }
        if below != emb.height() {
            bad.push(format!("column {j} holds {below} points"));
        }
    }
    rep.check("initial_segments", bad, true);

    // (c) window counts
    let mut bad = Vec::new();
    for i in 1..=a1 {
        for j in 1..=m {
            let direct = emb.chain_images(i).iter().filter(|x| (x.1 as u64) <= j).count() as u64;
            if direct != emb.n(i, j) {
                bad.push(format!("pi({i},1->{j}) = {direct}, N = {}", emb.n(i, j)));
            }
        }
        for width in 0..m {
            let s = r.s(width + 1);
            for start in 1..=m - width {
                let pi = emb.n(i, start + width) - emb.n(i, start - 1);
                if pi != width + 1 + s && pi != width + 2 + s {
                    bad.push(format!("pi({i},{start}->{}) = {pi}", start + width));
                }
            }
        }
    }
    rep.check("window_counts", bad, true);

    // (d) balance of N and L
    let mut bad = Vec::new();
    let mut literal = Vec::new();
    for j in 1..=m {
        if spread((1..=a1).map(|i| emb.n(i, j) as i64)) > 1 {
            bad.push(format!("N spread in column {j}"));
        }
    }
    for rr in 1..=a1 {
        let lr: Vec<i64> = (1..=m).map(|j| emb.l_len(rr, j) as i64).collect();
        if spread(lr.iter().copied()) > 1 {
            bad.push(format!("|L_{rr}| spread"));
        }
        if rr < a1 {
            let ln: Vec<i64> = (1..=m).map(|j| emb.l_len(rr + 1, j) as i64).collect();
            let hi = ln.iter().max().unwrap() - lr.iter().min().unwrap();
            let lo = ln.iter().min().unwrap() - lr.iter().max().unwrap();
            // spread 1 plus a step of 1 + R gives 3; a gap of 3 does occur
            if hi > 3 || lo < -3 {
                bad.push(format!("|L_{}| vs |L_{rr}| differ by more than 3", rr + 1));
            }
            if hi > 2 || lo < -2 {
                literal.push(format!("|L_{}| vs |L_{rr}|", rr + 1));
            }
        }
    }
    rep.check("balance", bad, true);
    rep.check("successive_chain_gap_2", literal, false);

    // (e) exact cover of the first m columns
    let mut bad = Vec::new();
    let total: u64 = (1..=a1).map(|i| emb.chain_len(i)).sum();
    if total != m * emb.height() {
        bad.push(format!("{total} points for {} cells", m * emb.height()));
    }
    for col in 1..=m {
        for row in 1..=emb.height() {
            let (c, p) = emb.preimage(row, col);
            if c == 0 || emb.image(c as u64, p as u64) != Some((row as u32, col as u32)) {
                bad.push(format!("cell ({row},{col}) not covered"));
            }
        }
    }
    rep.check("cover", bad, true);

    // (f) for every restriction length m' <= m and every chain length P
    // with u2 = m', the grid fits and its image contains the first m'-1 columns
    let mut bad = Vec::new();
    let h = emb.height();
    for mp in 1..=m {
        let lo = ((mp - 1) * h) / a1 + 1;
        let hi = (mp * h) / a1;
        let min_full = (1..=a1).map(|i| emb.n(i, mp)).min().unwrap();
        let max_prev = (1..=a1).map(|i| emb.n(i, mp - 1)).max().unwrap();
        for p in lo..=hi {
            debug_assert_eq!((a1 * p).div_ceil(h), mp);
            if p > min_full || max_prev > p {
                bad.push(format!("chain length {p} with {mp} columns"));
            }
        }
    }
    rep.check("restriction", bad, true);

    // (g) equal positions lie in columns within 1
    let mut bad = Vec::new();
    let common = (1..=a1).map(|i| emb.chain_len(i)).min().unwrap();
    for p in 1..=common {
        if spread((1..=a1).map(|i| emb.image(i, p).unwrap().1 as i64)) > 1 {
            bad.push(format!("position {p}"));
        }
    }
    rep.check("cross_chain_columns", bad, true);

    // (h) each chain stays within 3 rows
    let mut bad = Vec::new();
    for i in 1..=a1 {
        if spread(emb.chain_images(i).iter().map(|x| x.0 as i64)) > 2 {
            bad.push(format!("chain {i}"));
        }
    }
    rep.check("chain_rows", bad, true);

    // (i) shift monotonicity after a double
    let mut bad = Vec::new();
    for rr in 1..=a1 {
        for j in 1..=m {
            if r.get(rr, j) == 1 {
                if j < m && emb.l_len(rr, j) < emb.l_len(rr, j + 1) {
                    bad.push(format!("|L_{rr}({j})| < |L_{rr}({})|", j + 1));
                }
                if rr < a1 && emb.n(rr, j) < emb.n(rr + 1, j) {
                    bad.push(format!("N_{rr},{j} < N_{},{j}", rr + 1));
                }
            }
        }
    }
    rep.check("shift_monotone", bad, true);
    rep
}

/// Edge, segment and page-prefix properties of `f2`, read on the chain map.
/// Page prefixes are tested for every second side length in `a2s`.
pub fn corollary_battery(emb: &Embedding2D, a2s: &[u64]) -> Report {
    let mut rep = Report::new();
    let a1 = emb.a1();
    let h = emb.height();
    let common = (1..=a1).map(|i| emb.chain_len(i)).min().unwrap();

    // (a) and (b) over chain-adjacent and cross-chain pairs
    let mut bad = Vec::new();
    let mut worst_sum = 0i64;
    let mut edge = |x: (u32, u32), y: (u32, u32), what: String, bad: &mut Vec<String>| {
        let dr = (x.0 as i64 - y.0 as i64).abs();
        let dc = (x.1 as i64 - y.1 as i64).abs();
        if dr > 3 || dc > 1 {
            bad.push(format!("{what}: drow {dr}, dcol {dc}"));
        }
        worst_sum = worst_sum.max(dr + dc);
    };
    for i in 1..=a1 {
        for w in emb.chain_images(i).windows(2) {
            edge(w[0], w[1], format!("chain {i}"), &mut bad);
        }
        if i < a1 {
            for p in 1..=common {
                edge(emb.image(i, p).unwrap(), emb.image(i + 1, p).unwrap(), format!("chains {i},{} at {p}", i + 1), &mut bad);
            }
        }
    }
    rep.check("edge_bounds", bad, true);
    rep.reported("edge_l1_max", worst_sum);

    // (d) segments of equal length span column counts within 1
    let mut bad = Vec::new();
    for len in 1..=common {
        let mut lo = u32::MAX;
        let mut hi = 0;
        for i in 1..=a1 {
            let imgs = emb.chain_images(i);
            for s in 0..=(imgs.len() - len as usize) {
                let span = imgs[s + len as usize - 1].1 - imgs[s].1 + 1;
                lo = lo.min(span);
                hi = hi.max(span);
            }
        }
        if hi - lo > 1 {
            bad.push(format!("length {len}: spans {lo}..{hi}"));
        }
    }
    rep.check("segment_spans", bad, true);

    // (e) page prefixes fill whole columns except the last
    let mut bad = Vec::new();
    for &a2 in a2s {
        let mut r = 1u64;
        while r * a2 <= common {
            let y = r * a2;
            let rp = (1..=a1).map(|i| emb.image(i, y).unwrap().1 as u64).max().unwrap();
            for i in 1..=a1 {
                if emb.n(i, rp - 1) > y {
                    bad.push(format!("a2={a2}, r={r}: chain {i} spills below column {rp}"));
                }
            }
            if rp * h - y * a1 >= h {
                bad.push(format!("a2={a2}, r={r}: {} empty cells", rp * h - y * a1));
            }
            r += 1;
        }
    }
    rep.check("page_prefix", bad, true);
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_first_columns() {
        assert_eq!(build_r(5, 3).unwrap().first_column(), &[0, 1, 0, 1, 1]);
        assert_eq!(build_r(4, 2).unwrap().first_column(), &[0, 0, 0, 0]);
        assert_eq!(build_r(3, 2).unwrap().first_column().iter().sum::<u8>(), 1);
        assert!(build_r(5, 4).is_err());
    }

    #[test]
    fn first_image() {
        for a1 in 2..20 {
            let e = Embedding2D::build(a1, 4).unwrap();
            assert_eq!(e.image(1, 1), Some((1, 1)));
        }
    }

    #[test]
    fn grid_needs_enough_columns() {
        let g = GridSpec::new(&[3, 7, 4]).unwrap();
        assert!(Embedding2D::for_grid(&g, 20).is_err());
        let e = Embedding2D::for_grid(&g, 21).unwrap();
        assert_eq!(e.f2_all(&g).unwrap().len(), 84);
    }
}

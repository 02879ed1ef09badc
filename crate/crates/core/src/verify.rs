//! The hypercube embedding `H^k`: per-block labelings applied to `f_k`,
//! coordinate-difference and dilation measurement, a tiny brute-force
//! dilation oracle, and the `GRIDCUBE` file format.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::cubelabel::{labeling_for, CubeLabeling};
use crate::embed2d::{corollary_battery, theorem_battery};
use crate::error::{Error, Result};
use crate::grid::{ceil_log2, GridSpec};
use crate::pipeline::{self, Pipeline, Stage};
use crate::report::Report;

const KEEP: usize = 5;

/// Labels of every grid vertex in `Q_n`, with block `j` stored at bit
/// offset `e_{j-1}`.
#[derive(Debug, Clone)]
pub struct HypercubeEmbedding {
    spec: GridSpec,
    labelings: Vec<CubeLabeling>,
    labels: Vec<u64>,
    // decoded f_k, k entries per rank
    coords: Vec<u32>,
}

/// One labeling per block, `windows[j]` selecting `0` (Gray), `3` or `5`.
/// `None` uses the default choice per block width.
pub fn labelings_for(spec: &GridSpec, windows: Option<&[u32]>) -> Result<Vec<CubeLabeling>> {
    if let Some(w) = windows {
        if w.len() != spec.k() {
            return Err(Error::Dimension(format!("{} windows for {} dimensions", w.len(), spec.k())));
        }
    }
    (1..=spec.k())
        .map(|j| labeling_for(spec.block_width(j), windows.map(|w| w[j - 1])))
        .collect()
}

fn check_labelings(spec: &GridSpec, labelings: &[CubeLabeling]) -> Result<()> {
    if labelings.len() != spec.k() {
        return Err(Error::Dimension(format!("{} labelings for {} dimensions", labelings.len(), spec.k())));
    }
    for (j, lab) in labelings.iter().enumerate() {
        if lab.t() != spec.block_width(j + 1) {
            return Err(Error::Dimension(format!(
                "block {} has width {} but its labeling has dimension {}",
                j + 1,
                spec.block_width(j + 1),
                lab.t()
            )));
        }
    }
    Ok(())
}

/// Encodes block `j` of every vertex as the cube vertex whose label is
/// `f_k(x)_j`.
pub fn assemble_hk(spec: &GridSpec, fk: &Stage, labelings: Vec<CubeLabeling>) -> Result<HypercubeEmbedding> {
    check_labelings(spec, &labelings)?;
    let k = spec.k();
    if fk.index() != k || fk.len() as u64 != spec.total() {
        return Err(Error::Dimension("stage is not the final stage of this grid".into()));
    }
    let mut labels = Vec::with_capacity(fk.len());
    let mut coords = Vec::with_capacity(fk.len() * k);
    for rank in 0..spec.total() {
        let pt = fk.point(rank);
        let mut h = 0u64;
        for (j, &c) in pt.iter().enumerate() {
            let lab = &labelings[j];
            if c == 0 || c as u64 > 1u64 << lab.t() {
                return Err(Error::Dimension(format!("coordinate {c} of block {} outside its labeling", j + 1)));
            }
            h |= (lab.vertex(c) as u64) << spec.e(j);
        }
        labels.push(h);
        coords.extend_from_slice(pt);
    }
    Ok(HypercubeEmbedding { spec: spec.clone(), labelings, labels, coords })
}

impl HypercubeEmbedding {
    /// Rebuilds from raw labels, decoding every block.
    pub fn from_labels(spec: &GridSpec, labelings: Vec<CubeLabeling>, labels: Vec<u64>) -> Result<Self> {
        check_labelings(spec, &labelings)?;
        if labels.len() as u64 != spec.total() {
            return Err(Error::Dimension(format!("{} labels for {} vertices", labels.len(), spec.total())));
        }
        let mut emb = HypercubeEmbedding { spec: spec.clone(), labelings, labels, coords: Vec::new() };
        let mut coords = Vec::with_capacity(emb.labels.len() * spec.k());
        for &h in &emb.labels {
            if spec.opt_dim() < 64 && h >> spec.opt_dim() != 0 {
                return Err(Error::Dimension(format!("label {h} exceeds {} bits", spec.opt_dim())));
            }
            coords.extend(emb.decode(h));
        }
        emb.coords = coords;
        Ok(emb)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn labelings(&self) -> &[CubeLabeling] {
        &self.labelings
    }

    /// Dimension `n` of the host cube.
    pub fn n(&self) -> u32 {
        self.spec.opt_dim()
    }

    pub fn label(&self, rank: u64) -> u64 {
        self.labels[rank as usize]
    }

    /// `f_k` of the vertex, as decoded from its label.
    pub fn coords(&self, rank: u64) -> &[u32] {
        let k = self.spec.k();
        &self.coords[rank as usize * k..(rank as usize + 1) * k]
    }

    pub fn block(&self, h: u64, j: usize) -> u32 {
        ((h >> self.spec.e(j - 1)) & ((1u64 << self.spec.block_width(j)) - 1)) as u32
    }

    /// Inverse of the block encoding: the per-block labels.
    pub fn decode(&self, h: u64) -> Vec<u32> {
        (1..=self.spec.k()).map(|j| self.labelings[j - 1].label(self.block(h, j))).collect()
    }

    /// Label as an `n`-bit string, block 1 first, each block most
    /// significant bit first.
    pub fn bit_string(&self, h: u64) -> String {
        let mut s = String::with_capacity(self.n() as usize);
        for j in 1..=self.spec.k() {
            let w = self.spec.block_width(j) as usize;
            let _ = write!(s, "{:0w$b}", self.block(h, j));
        }
        s
    }

    pub fn is_injective(&self) -> bool {
        let mut v = self.labels.clone();
        v.sort_unstable();
        v.windows(2).all(|p| p[0] != p[1])
    }
}

/// Cyclic distance between two coordinates of a block of width `w`.
pub fn cyclic_diff(a: u32, b: u32, w: u32) -> u32 {
    let m = 1u64 << w;
    let d = (a as i64 - b as i64).unsigned_abs() % m;
    d.min(m - d) as u32
}

/// Intermediate bound on `|f(x)_j - f(y)_j|` for an edge along dimension
/// `i0`, both 1-based.
pub fn case_bound(j: usize, i0: usize) -> u32 {
    match (j, i0) {
        (1, 1) => 3,
        (1, _) => 2,
        (2, 1 | 2) => 4,
        (2, _) => 8,
        _ if j > i0 => 6,
        _ if j == i0 => 8,
        _ => 10,
    }
}

/// Overall coordinate bound that makes window-17 labelings sufficient.
pub const COORD_BOUND: u32 = 17;

/// Maxima of cyclic coordinate differences over grid edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordDiffs {
    /// `max[j-1]`: largest difference in coordinate `j`.
    pub max: Vec<u32>,
    /// `case[j-1][i0-1]`: largest difference in coordinate `j` over edges
    /// along dimension `i0`.
    pub case: Vec<Vec<u32>>,
}

fn for_each_edge<T: Send>(
    spec: &GridSpec,
    init: impl Fn() -> T + Sync + Send,
    visit: impl Fn(&mut T, u64, u64, usize) + Sync + Send,
    merge: impl Fn(T, T) -> T + Sync + Send,
) -> T {
    (0..spec.total())
        .into_par_iter()
        .fold(&init, |mut acc, x| {
            for d in 1..=spec.k() {
                if let Some(y) = spec.forward_neighbor(x, d) {
                    visit(&mut acc, x, y, d);
                }
            }
            acc
        })
        .reduce(&init, merge)
}

/// Cyclic coordinate differences of `f_k` over every grid edge, read off
/// the decoded embedding.
pub fn coordinate_diffs(emb: &HypercubeEmbedding) -> CoordDiffs {
    coordinate_diffs_with(&emb.spec, |r| emb.coords(r))
}

/// Same as [`coordinate_diffs`], straight from the final stage.
pub fn stage_coordinate_diffs(spec: &GridSpec, fk: &Stage) -> CoordDiffs {
    coordinate_diffs_with(spec, |r| fk.point(r))
}

fn coordinate_diffs_with<'a>(spec: &GridSpec, pt: impl Fn(u64) -> &'a [u32] + Sync + Send) -> CoordDiffs {
    let k = spec.k();
    let init = || CoordDiffs { max: vec![0; k], case: vec![vec![0; k]; k] };
    for_each_edge(
        spec,
        init,
        |acc, x, y, i0| {
            let (px, py) = (pt(x), pt(y));
            for j in 1..=k {
                let d = cyclic_diff(px[j - 1], py[j - 1], spec.block_width(j));
                acc.max[j - 1] = acc.max[j - 1].max(d);
                acc.case[j - 1][i0 - 1] = acc.case[j - 1][i0 - 1].max(d);
            }
        },
        |mut a, b| {
            for j in 0..k {
                a.max[j] = a.max[j].max(b.max[j]);
                for i in 0..k {
                    a.case[j][i] = a.case[j][i].max(b.case[j][i]);
                }
            }
            a
        },
    )
}

/// Bound checks on coordinate differences; asserted when every side
/// length is at least 8.
pub fn check_coordinate_diffs(spec: &GridSpec, diffs: &CoordDiffs) -> Report {
    let k = spec.k();
    let asserted = spec.dims().iter().all(|&a| a >= 8);
    let mut rep = Report::new();
    let over: Vec<String> = (1..=k)
        .filter(|&j| diffs.max[j - 1] > COORD_BOUND)
        .map(|j| format!("coordinate {j}: {}", diffs.max[j - 1]))
        .collect();
    rep.check("coord_diff_bound", over, asserted);
    let mut case = Vec::new();
    for j in 1..=k {
        for i0 in 1..=k {
            let v = diffs.case[j - 1][i0 - 1];
            if v > case_bound(j, i0) {
                case.push(format!("coordinate {j} along {i0}: {v} > {}", case_bound(j, i0)));
            }
        }
    }
    rep.check("coord_diff_cases", case, asserted);
    let maxima: Vec<String> = diffs.max.iter().map(u32::to_string).collect();
    rep.reported("coord_diff_max", maxima.join(","));
    rep
}

/// Edge-distance statistics of `H^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DilationReport {
    /// Largest Hamming distance over grid edges.
    pub dilation: u32,
    /// `histogram[d]`: number of edges at distance `d`.
    pub histogram: Vec<u64>,
    /// Largest per-edge bound implied by the labelings.
    pub implied: u32,
    /// Every block is caterpillar-labeled and every edge difference is
    /// inside its block's window.
    pub within_windows: bool,
    /// Edges whose block distance exceeds what the labeling implies.
    pub unsound: Vec<String>,
    pub unsound_count: u64,
}

struct EdgeAcc {
    dilation: u32,
    hist: Vec<u64>,
    implied: u32,
    within: bool,
    unsound: Vec<String>,
    unsound_count: u64,
}

/// Exact dilation of `H^k` with the bound implied by the labelings.
pub fn dilation(emb: &HypercubeEmbedding) -> DilationReport {
    let spec = &emb.spec;
    let k = spec.k();
    let n = emb.n() as usize;
    let all_cat = emb.labelings.iter().all(|l| !l.is_gray());
    let init = || EdgeAcc {
        dilation: 0,
        hist: vec![0; n + 1],
        implied: 0,
        within: all_cat,
        unsound: Vec::new(),
        unsound_count: 0,
    };
    let acc = for_each_edge(
        spec,
        init,
        |acc, x, y, _| {
            let (hx, hy) = (emb.label(x), emb.label(y));
            let dist = (hx ^ hy).count_ones();
            acc.dilation = acc.dilation.max(dist);
            acc.hist[dist as usize] += 1;
            let (cx, cy) = (emb.coords(x), emb.coords(y));
            let mut implied = 0;
            for j in 1..=k {
                let lab = &emb.labelings[j - 1];
                let delta = cyclic_diff(cx[j - 1], cy[j - 1], lab.t());
                let bound = lab.implied_distance(delta);
                implied += bound;
                if !lab.is_gray() && delta > lab.window() {
                    acc.within = false;
                }
                let real = (emb.block(hx, j) ^ emb.block(hy, j)).count_ones();
                if real > bound {
                    acc.unsound_count += 1;
                    if acc.unsound.len() < KEEP {
                        acc.unsound.push(format!("edge {x}-{y} block {j}: distance {real} > {bound}"));
                    }
                }
            }
            acc.implied = acc.implied.max(implied);
        },
        |mut a, b| {
            a.dilation = a.dilation.max(b.dilation);
            a.hist.iter_mut().zip(&b.hist).for_each(|(p, q)| *p += q);
            a.implied = a.implied.max(b.implied);
            a.within &= b.within;
            a.unsound_count += b.unsound_count;
            a.unsound.extend(b.unsound);
            a.unsound.truncate(KEEP);
            a
        },
    );
    DilationReport {
        dilation: acc.dilation,
        histogram: acc.hist,
        implied: acc.implied,
        within_windows: acc.within,
        unsound: acc.unsound,
        unsound_count: acc.unsound_count,
    }
}

/// Checks on the embedding alone: injectivity, host dimension, decoding,
/// coordinate bounds and dilation.
pub fn audit_embedding(emb: &HypercubeEmbedding) -> Report {
    let spec = &emb.spec;
    let mut rep = Report::new();
    let inj = if emb.is_injective() { vec![] } else { vec!["repeated label".to_string()] };
    rep.check("hk_injective", inj, true);
    let dim = if emb.n() == ceil_log2(spec.total() as u128) {
        vec![]
    } else {
        vec![format!("n = {}", emb.n())]
    };
    rep.check("opt_dimension", dim, true);
    let bad_decode: Vec<String> = (0..spec.total())
        .filter(|&r| emb.decode(emb.label(r)) != emb.coords(r))
        .take(KEEP)
        .map(|r| format!("rank {r}"))
        .collect();
    rep.check("decode_round_trip", bad_decode, true);
    let ranges: Vec<String> = (0..spec.total())
        .filter(|&r| {
            emb.coords(r)
                .iter()
                .enumerate()
                .any(|(j, &c)| c == 0 || c as u64 > 1u64 << spec.block_width(j + 1))
        })
        .take(KEEP)
        .map(|r| format!("rank {r}"))
        .collect();
    rep.check("coord_ranges", ranges, true);

    rep.extend(check_coordinate_diffs(spec, &coordinate_diffs(emb)));

    let d = dilation(emb);
    let windows: Vec<String> = emb.labelings.iter().map(|l| l.window().to_string()).collect();
    rep.reported("labeling_windows", windows.join(","));
    rep.check("window_soundness", d.unsound.clone(), true);
    let excess = if d.dilation > d.implied {
        vec![format!("dilation {} > implied {}", d.dilation, d.implied)]
    } else {
        vec![]
    };
    rep.check("dilation_within_implied", excess, true);
    let three_k = 3 * spec.k() as u32;
    if d.within_windows {
        let v = if d.dilation > three_k { vec![format!("dilation {}", d.dilation)] } else { vec![] };
        rep.check("dilation_at_most_3k", v, true);
    } else {
        rep.reported("dilation_at_most_3k", format!("premise unmet, implied bound {}", d.implied));
    }
    rep.reported("dilation", d.dilation);
    let hist: Vec<String> = d.histogram.iter().map(u64::to_string).collect();
    rep.reported("distance_histogram", hist.join(","));
    rep
}

/// The full battery: base map, every stage, and the hypercube embedding.
pub fn audit(p: &Pipeline, emb: &HypercubeEmbedding) -> Report {
    let spec = p.spec();
    let mut rep = Report::new();
    rep.extend_prefixed("base", theorem_battery(p.base()));
    rep.extend_prefixed("base", corollary_battery(p.base(), &[spec.a(2)]));
    rep.extend(pipeline::audit(p));
    rep.extend_prefixed("cube", audit_embedding(emb));
    rep
}

/// Decides whether the grid embeds into `Q_n` (`n = ceil(log2 |G|)`) with
/// dilation at most `d`, by exhaustive branch and bound.
pub fn brute_force_dilation(spec: &GridSpec, d: u32) -> Result<bool> {
    let total = spec.total();
    let n = spec.opt_dim();
    if total > 12 || n > 4 {
        return Err(Error::TooLarge { total: total as u128, cap: 12 });
    }
    let k = spec.k();
    let nbrs: Vec<Vec<usize>> = (0..total)
        .map(|x| {
            let mut v = Vec::new();
            for dd in 1..=k {
                if let Some(y) = spec.forward_neighbor(x, dd) {
                    v.push(y as usize);
                }
                let pp = spec.prefix_product(dd - 1);
                if !(x / pp).is_multiple_of(spec.a(dd)) {
                    v.push((x - pp) as usize);
                }
            }
            v
        })
        .collect();
    let mut order: Vec<usize> = (0..total as usize).collect();
    order.sort_by_key(|&x| std::cmp::Reverse(nbrs[x].len()));
    let mut images: Vec<u32> = (0..1u32 << n).collect();
    images.sort_by_key(|&v| (v.count_ones(), v));

    fn place(
        depth: usize,
        order: &[usize],
        images: &[u32],
        nbrs: &[Vec<usize>],
        d: u32,
        img: &mut [Option<u32>],
        used: &mut [bool],
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let x = order[depth];
        for &v in images {
            if used[v as usize] {
                continue;
            }
            let ok = nbrs[x].iter().all(|&y| img[y].is_none_or(|w| (w ^ v).count_ones() <= d));
            if !ok {
                continue;
            }
            img[x] = Some(v);
            used[v as usize] = true;
            if place(depth + 1, order, images, nbrs, d, img, used) {
                return true;
            }
            img[x] = None;
            used[v as usize] = false;
        }
        false
    }

    let mut img = vec![None; total as usize];
    let mut used = vec![false; 1usize << n];
    Ok(place(0, &order, &images, &nbrs, d, &mut img, &mut used))
}

/// Writes the `GRIDCUBE 1` file: header lines then one line per vertex in
/// rank order, `x1 .. xk <label bits>`, coordinates 1-based.
pub fn write_gridcube(emb: &HypercubeEmbedding) -> String {
    let spec = &emb.spec;
    let join = |v: Vec<String>| v.join(" ");
    let mut out = String::new();
    out.push_str("GRIDCUBE 1\n");
    let _ = writeln!(out, "dims {}", join(spec.dims().iter().map(u64::to_string).collect()));
    let _ = writeln!(
        out,
        "{} {}",
        spec.opt_dim(),
        join(spec.exponents()[1..].iter().map(u32::to_string).collect())
    );
    let _ = writeln!(
        out,
        "labelings {}",
        join(emb.labelings.iter().map(|l| l.window().to_string()).collect())
    );
    for rank in 0..spec.total() {
        let x = crate::grid::GridVertex::from_rank(spec, rank).one_based();
        let xs: Vec<String> = x.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{} {}", xs.join(" "), emb.bit_string(emb.label(rank)));
    }
    out
}

/// Parses a `GRIDCUBE 1` file back into an embedding. `cap` bounds the
/// vertex count.
pub fn parse_gridcube(text: &str, cap: u64) -> Result<HypercubeEmbedding> {
    let mut lines = text.lines().enumerate();
    let perr = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.into() };
    let mut next = |what: &str| lines.next().ok_or_else(|| perr(0, &format!("missing {what}")));
    let (ln, l) = next("header")?;
    if l.trim() != "GRIDCUBE 1" {
        return Err(perr(ln, "expected GRIDCUBE 1"));
    }
    let nums = |ln: usize, s: &str| -> Result<Vec<u64>> {
        s.split_whitespace().map(|t| t.parse().map_err(|_| perr(ln, "bad number"))).collect()
    };
    let (ln, l) = next("dims")?;
    let dims = nums(ln, l.strip_prefix("dims").ok_or_else(|| perr(ln, "expected dims"))?)?;
    let spec = GridSpec::with_cap(&dims, cap)?;
    let (ln, l) = next("exponent line")?;
    let ex = nums(ln, l)?;
    let want: Vec<u64> = std::iter::once(spec.opt_dim() as u64)
        .chain(spec.exponents()[1..].iter().map(|&e| e as u64))
        .collect();
    if ex != want {
        return Err(perr(ln, "exponents do not match dims"));
    }
    let (ln, l) = next("labelings")?;
    let ws = nums(ln, l.strip_prefix("labelings").ok_or_else(|| perr(ln, "expected labelings"))?)?;
    let ws: Vec<u32> = ws.into_iter().map(|w| w as u32).collect();
    let labelings = labelings_for(&spec, Some(&ws))?;
    let n = spec.opt_dim() as usize;
    let k = spec.k();
    let mut labels = vec![None; spec.total() as usize];
    for (ln, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != k + 1 {
            return Err(perr(ln, "expected k coordinates and a label"));
        }
        let xs = nums(ln, &parts[..k].join(" "))?;
        let x: Vec<u32> = xs.iter().map(|&v| v as u32).collect();
        let v = crate::grid::GridVertex::new(&spec, &x).map_err(|_| perr(ln, "vertex outside the grid"))?;
        let bits = parts[k];
        if bits.len() != n || !bits.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(perr(ln, "label has the wrong width"));
        }
        let mut h = 0u64;
        let mut pos = 0;
        for j in 1..=k {
            let w = spec.block_width(j) as usize;
            let b = u64::from_str_radix(&bits[pos..pos + w], 2).map_err(|_| perr(ln, "bad label"))?;
            h |= b << spec.e(j - 1);
            pos += w;
        }
        let slot = &mut labels[v.rank(&spec) as usize];
        if slot.replace(h).is_some() {
            return Err(perr(ln, "vertex listed twice"));
        }
    }
    let labels: Option<Vec<u64>> = labels.into_iter().collect();
    let labels = labels.ok_or_else(|| perr(0, "some vertices are missing"))?;
    HypercubeEmbedding::from_labels(&spec, labelings, labels)
}

//! The inductive lift `f_{i+1} = sigma_i . I_i . f_i` from `f2` up to `f_k`.
//!
//! Stages, sections, pages, levels and coordinates are 1-based. A stage-`i`
//! point is an `i`-tuple whose last entry is its level.

use std::fmt::Write as _;

use crate::embed2d::Embedding2D;
use crate::error::{out_of_range, Error, Result};
use crate::grid::GridSpec;
use crate::report::Report;
use crate::rounding::{build_fx, check_balance, BinaryMatrix, RoundingSpec, ZeroTable};

/// Blank-level counts per section for stage `i`, `2 <= i <= k-1`.
pub fn s_sequence(spec: &GridSpec, i: usize) -> Result<Vec<u32>> {
    if i < 2 || i + 1 > spec.k() {
        return Err(out_of_range("stage", i as i64, 2, spec.k() as i64 - 1));
    }
    let d = 1u128 << spec.e(i - 1);
    let a = spec.prefix_product(i) as u128;
    let n = 1u128 << spec.block_width(i);
    let c = a.div_ceil(d);
    // phi = (c d - a) / d, evaluated as an exact fraction
    let phi_num = c * d - a;
    let fl = |j: u128| j * phi_num / d;
    let p = spec.page_count(i) as u128;
    let s: Vec<u32> = (1..=p).map(|j| (n - c + fl(j) - fl(j - 1)) as u32).collect();

    let lo = (n - c) as u32;
    let mut sum = 0u64;
    for (j, &sj) in s.iter().enumerate() {
        let r = j as u64 + 1;
        sum += sj as u64;
        assert_eq!(spec.l_prime(i, r) + sum, r * n as u64, "blank budget broken at section {r}");
        assert!(sj == lo || sj == lo + 1, "blank count {sj} out of range");
        assert!(2 * sj as u128 <= n, "more than half the levels blank");
    }
    Ok(s)
}

/// Which levels of each section are blank, and where the nonblank ones sit.
#[derive(Debug, Clone)]
pub struct BlankPlan {
    stage: usize,
    n: u32,
    s: Vec<u32>,
    f: BinaryMatrix,
    zeros: ZeroTable,
    // levels[z-1] = (section, b, column) of the z-th nonblank level
    levels: Vec<(u32, u32, u32)>,
    // zero_prefix[r*n + c-1] = zeros of column c in rows 1..=r
    zero_prefix: Vec<u32>,
}

impl BlankPlan {
    /// Wraps a designation matrix after checking its shape and row sums.
    pub fn from_matrix(spec: &GridSpec, i: usize, f: BinaryMatrix) -> Result<Self> {
        let s = s_sequence(spec, i)?;
        let n = 1u32 << spec.block_width(i);
        if f.rows() != s.len() || f.cols() != n as usize {
            return Err(Error::Matrix(format!(
                "stage {i} needs a {}x{} matrix, got {}x{}",
                s.len(),
                n,
                f.rows(),
                f.cols()
            )));
        }
        for (r, &sr) in s.iter().enumerate() {
            if f.row_ones(r) != sr {
                return Err(Error::Matrix(format!(
                    "stage {i} row {} has {} blanks, expected {sr}",
                    r + 1,
                    f.row_ones(r)
                )));
            }
        }
        let zeros = ZeroTable::new(&f)?;
        let mut levels = Vec::new();
        let mut zero_prefix = vec![0u32; (s.len() + 1) * n as usize];
        for r in 0..s.len() {
            let mut b = 0;
            for c in 0..n as usize {
                let z = (f.get(r, c) == 0) as u32;
                zero_prefix[(r + 1) * n as usize + c] = zero_prefix[r * n as usize + c] + z;
                if z == 1 {
                    b += 1;
                    levels.push((r as u32 + 1, b, c as u32 + 1));
                }
            }
        }
        Ok(BlankPlan { stage: i, n, s, f, zeros, levels, zero_prefix })
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    /// Section length `2^(e_i - e_{i-1})`.
    pub fn section_len(&self) -> u32 {
        self.n
    }

    pub fn s(&self) -> &[u32] {
        &self.s
    }

    pub fn matrix(&self) -> &BinaryMatrix {
        &self.f
    }

    pub fn zeros(&self) -> &ZeroTable {
        &self.zeros
    }

    pub fn sections(&self) -> usize {
        self.s.len()
    }

    pub fn nonblank_levels(&self) -> usize {
        self.levels.len()
    }

    /// Nonblank levels `m_r` of section `r`.
    pub fn section_nonblank(&self, r: usize) -> u32 {
        self.n - self.s[r - 1]
    }

    /// `(section, b, N_r(b))` of the `z`-th nonblank level.
    pub fn level(&self, z: u64) -> Result<(u32, u32, u32)> {
        match (z as usize).checked_sub(1).and_then(|k| self.levels.get(k)) {
            Some(&t) => Ok(t),
            None => Err(Error::Params(format!(
                "level {z} exceeds the {} nonblank levels of stage {}",
                self.levels.len(),
                self.stage
            ))),
        }
    }

    /// Nonblank levels at column `c` among sections `1..=r`.
    pub fn capacity(&self, c: u32, r: usize) -> u32 {
        self.zero_prefix[r * self.n as usize + c as usize - 1]
    }
}

/// The plan for stage `i` from a balanced rounding.
pub fn build_blank_plan(spec: &GridSpec, i: usize) -> Result<BlankPlan> {
    let s = s_sequence(spec, i)?;
    let rs = RoundingSpec::new(s, 1usize << spec.block_width(i))?;
    let f = build_fx(&rs)?;
    BlankPlan::from_matrix(spec, i, f)
}

/// Per-vertex result of inflating stage `i`.
#[derive(Debug, Clone)]
pub struct Inflation {
    stage: usize,
    n: u32,
    level: Vec<u32>,
    section: Vec<u32>,
    nu: Vec<u32>,
}

impl Inflation {
    pub fn stage(&self) -> usize {
        self.stage
    }

    /// Inflated level `(r-1) 2^(e_i - e_{i-1}) + N_r(b)`.
    pub fn level(&self, rank: u64) -> u32 {
        self.level[rank as usize]
    }

    pub fn section(&self, rank: u64) -> u32 {
        self.section[rank as usize]
    }

    /// Index of the point's level among the nonblank levels of its section.
    pub fn nu(&self, rank: u64) -> u32 {
        self.nu[rank as usize]
    }

    /// Column `N_r(b)` within the section.
    pub fn column(&self, rank: u64) -> u32 {
        (self.level[rank as usize] - 1) % self.n + 1
    }
}

/// Images of every vertex at one stage.
#[derive(Debug, Clone)]
pub struct Stage {
    i: usize,
    coords: Vec<u32>,
}

impl Stage {
    pub fn index(&self) -> usize {
        self.i
    }

    pub fn point(&self, rank: u64) -> &[u32] {
        let i = self.i;
        &self.coords[rank as usize * i..(rank as usize + 1) * i]
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.i
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Index of a coordinate prefix `(y1..yt)` in the box with radices
/// `2^e1, 2^(e2-e1), ...`.
pub fn address(spec: &GridSpec, prefix: &[u32]) -> usize {
    prefix
        .iter()
        .enumerate()
        .map(|(j, &y)| (y as usize - 1) << spec.e(j))
        .sum()
}

/// Every stage of the construction for one grid.
#[derive(Debug, Clone)]
pub struct Pipeline {
    spec: GridSpec,
    base: Embedding2D,
    stages: Vec<Stage>,
    plans: Vec<BlankPlan>,
    inflations: Vec<Inflation>,
}

impl Pipeline {
    pub fn build(spec: &GridSpec) -> Result<Self> {
        Self::build_seeded(spec, &[])
    }

    /// `seeds[t]` replaces the generated designation matrix of stage `t+2`.
    pub fn build_seeded(spec: &GridSpec, seeds: &[BinaryMatrix]) -> Result<Self> {
        let k = spec.k();
        if seeds.len() > k.saturating_sub(2) {
            return Err(Error::Params(format!("{} seed matrices for {} stages", seeds.len(), k - 2)));
        }
        if spec.total() > u32::MAX as u64 / 2 {
            return Err(Error::TooLarge { total: spec.total() as u128, cap: u32::MAX as u64 / 2 });
        }
        let base = Embedding2D::for_grid(spec, spec.level_budget(2)?)?;
        let f2 = base.f2_all(spec)?;
        let mut stages = vec![Stage { i: 2, coords: f2.iter().flat_map(|&(r, c)| [r, c]).collect() }];
        let mut plans = Vec::new();
        let mut inflations = Vec::new();
        for i in 2..k {
            let plan = match seeds.get(i - 2) {
                Some(m) => BlankPlan::from_matrix(spec, i, m.clone())?,
                None => build_blank_plan(spec, i)?,
            };
            let (infl, next) = lift(spec, stages.last().unwrap(), &plan)?;
            plans.push(plan);
            inflations.push(infl);
            stages.push(next);
        }
        Ok(Pipeline { spec: spec.clone(), base, stages, plans, inflations })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn base(&self) -> &Embedding2D {
        &self.base
    }

    /// Stage `i`, `2 <= i <= k`.
    pub fn stage(&self, i: usize) -> &Stage {
        &self.stages[i - 2]
    }

    pub fn fk(&self) -> &Stage {
        self.stages.last().unwrap()
    }

    /// Plan of stage `i`, `2 <= i <= k-1`.
    pub fn plan(&self, i: usize) -> &BlankPlan {
        &self.plans[i - 2]
    }

    pub fn inflation(&self, i: usize) -> &Inflation {
        &self.inflations[i - 2]
    }

    /// Stacks of stage `i`, `3 <= i <= k`.
    pub fn stacks(&self, i: usize) -> StackTable {
        StackTable::new(self, i)
    }

    /// `|Stack_i(x, r)|` for every address `x`, counting sections `1..=r`
    /// of stage `i-1`; `1 <= r <= P_{i-1}`.
    pub fn stack_heights(&self, i: usize, r: usize) -> Result<Vec<u32>> {
        if i < 3 || i > self.spec.k() {
            return Err(out_of_range("stage", i as i64, 3, self.spec.k() as i64));
        }
        let p = self.spec.page_count(i - 1) as usize;
        if r < 1 || r > p {
            return Err(out_of_range("section prefix", r as i64, 1, p as i64));
        }
        let infl = self.inflation(i - 1);
        let mut h = vec![0u32; 1 << self.spec.e(i - 1)];
        let st = self.stage(i);
        for rank in 0..self.spec.total() {
            if infl.section(rank) as usize <= r {
                h[address(&self.spec, &st.point(rank)[..i - 1])] += 1;
            }
        }
        Ok(h)
    }

    /// Slots available to each address of stage `i` from sections `1..=r`.
    pub fn stack_capacity(&self, i: usize, r: usize) -> Vec<u32> {
        let plan = self.plan(i - 1);
        let inner = 1usize << self.spec.e(i - 2);
        (0..1usize << self.spec.e(i - 1))
            .map(|x| plan.capacity((x / inner) as u32 + 1, r))
            .collect()
    }

    /// Header `STAGE i u_i`, then `rank: (c1,...,ci)` per vertex.
    pub fn dump_stage(&self, i: usize) -> Result<String> {
        if i < 2 || i > self.spec.k() {
            return Err(out_of_range("stage", i as i64, 2, self.spec.k() as i64));
        }
        let st = self.stage(i);
        let mut out = format!("STAGE {i} {}\n", self.spec.level_budget(i)?);
        for rank in 0..self.spec.total() {
            let c: Vec<String> = st.point(rank).iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "{rank}: ({})", c.join(","));
        }
        Ok(out)
    }
}

// Inflation then stacking of stage i.
fn lift(spec: &GridSpec, prev: &Stage, plan: &BlankPlan) -> Result<(Inflation, Stage)> {
    let i = prev.i;
    let total = spec.total() as usize;
    let n = plan.n;
    let mut infl = Inflation {
        stage: i,
        n,
        level: vec![0; total],
        section: vec![0; total],
        nu: vec![0; total],
    };
    for rank in 0..total {
        let z = prev.coords[rank * i + i - 1];
        let (sec, b, col) = plan.level(z as u64)?;
        infl.level[rank] = (sec - 1) * n + col;
        infl.section[rank] = sec;
        infl.nu[rank] = b;
    }
    let order = bucket_by(&infl.section, plan.sections());
    let mut count = vec![0u32; 1 << spec.e(i)];
    let mut coords = vec![0u32; total * (i + 1)];
    let addr = |rank: usize| {
        let p = &prev.coords[rank * i..rank * i + i - 1];
        address(spec, p) + ((infl.column(rank as u64) as usize - 1) << spec.e(i - 1))
    };
    for r in 1..=plan.sections() {
        let members = &order.1[order.0[r - 1]..order.0[r]];
        for &v in members {
            count[addr(v as usize)] += 1;
        }
        for &v in members {
            let v = v as usize;
            let out = &mut coords[v * (i + 1)..(v + 1) * (i + 1)];
            out[..i - 1].copy_from_slice(&prev.coords[v * i..v * i + i - 1]);
            out[i - 1] = infl.column(v as u64);
            out[i] = count[addr(v)];
        }
    }
    Ok((infl, Stage { i: i + 1, coords }))
}

// Counting sort of ranks by a 1-based key; returns (starts, ranks).
fn bucket_by(key: &[u32], buckets: usize) -> (Vec<usize>, Vec<u32>) {
    let mut start = vec![0usize; buckets + 1];
    for &k in key {
        start[k as usize] += 1;
    }
    for b in 1..=buckets {
        start[b] += start[b - 1];
    }
    let mut fill = start.clone();
    let mut out = vec![0u32; key.len()];
    for (rank, &k) in key.iter().enumerate() {
        out[fill[k as usize - 1]] = rank as u32;
        fill[k as usize - 1] += 1;
    }
    (start, out)
}

/// Stacks of stage `i` (`3 <= i <= k`): per address of the first `i-1`
/// coordinates, the ranks in order of height.
#[derive(Debug, Clone)]
pub struct StackTable {
    offsets: Vec<u32>,
    ranks: Vec<u32>,
    /// Points whose height is outside `1..=stack size` or collides.
    pub defects: Vec<String>,
}

impl StackTable {
    fn new(p: &Pipeline, i: usize) -> Self {
        let spec = &p.spec;
        let st = p.stage(i);
        let addrs = 1usize << spec.e(i - 1);
        let total = spec.total();
        let mut offsets = vec![0u32; addrs + 1];
        for rank in 0..total {
            offsets[address(spec, &st.point(rank)[..i - 1]) + 1] += 1;
        }
        for a in 0..addrs {
            offsets[a + 1] += offsets[a];
        }
        let mut ranks = vec![u32::MAX; total as usize];
        let mut defects = Vec::new();
        for rank in 0..total {
            let pt = st.point(rank);
            let a = address(spec, &pt[..i - 1]);
            let size = offsets[a + 1] - offsets[a];
            let h = pt[i - 1];
            if h == 0 || h > size {
                defects.push(format!("rank {rank} at height {h} in a stack of {size}"));
                continue;
            }
            let slot = &mut ranks[(offsets[a] + h - 1) as usize];
            if *slot != u32::MAX {
                defects.push(format!("ranks {} and {rank} share a point", *slot));
            } else {
                *slot = rank as u32;
            }
        }
        StackTable { offsets, ranks, defects }
    }

    pub fn addresses(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Ranks at address `x` (0-based), bottom first.
    pub fn stack(&self, x: usize) -> &[u32] {
        &self.ranks[self.offsets[x] as usize..self.offsets[x + 1] as usize]
    }
}

/// `||nu'' - nu'||` with wraparound into neighboring sections.
pub fn nu_distance(nu1: u32, m1: u32, nu2: u32, m2: u32) -> u32 {
    let (a, b) = (nu1 as i64, nu2 as i64);
    let d = (b - a).abs();
    d.min(m1 as i64 - a + b).min(m2 as i64 - b + a).max(0) as u32
}

// Running histogram of per-address heights, tracking min and max.
struct Heights {
    h: Vec<u32>,
    hist: Vec<u32>,
    lo: u32,
    hi: u32,
}

impl Heights {
    fn new(addrs: usize, cap: usize) -> Self {
        let mut hist = vec![0u32; cap + 2];
        hist[0] = addrs as u32;
        Heights { h: vec![0; addrs], hist, lo: 0, hi: 0 }
    }

    fn bump(&mut self, a: usize) {
        let old = self.h[a] as usize;
        if old + 1 >= self.hist.len() {
            self.hist.resize(old + 2, 0);
        }
        self.hist[old] -= 1;
        self.hist[old + 1] += 1;
        self.h[a] += 1;
        self.hi = self.hi.max(self.h[a]);
        while self.hist[self.lo as usize] == 0 {
            self.lo += 1;
        }
    }

    fn at(&self, h: u32) -> u32 {
        self.hist.get(h as usize).copied().unwrap_or(0)
    }
}

/// The stage battery. Checks whose proofs lean on large side lengths are
/// asserted only when every side length is at least 5, and reported
/// otherwise.
pub fn audit(p: &Pipeline) -> Report {
    let spec = &p.spec;
    let k = spec.k();
    let total = spec.total();
    let gated = spec.dims().iter().all(|&a| a >= 5);
    let mut rep = Report::new();

    // budget identity and blank plan balance
    let mut bad = Vec::new();
    let mut bal = Vec::new();
    for i in 2..k {
        let plan = p.plan(i);
        let n = plan.section_len() as u64;
        let mut sum = 0u64;
        let mut nonblank = 0u64;
        for r in 1..=plan.sections() {
            sum += plan.s()[r - 1] as u64;
            nonblank += plan.section_nonblank(r) as u64;
            if spec.l_prime(i, r as u64) + sum != r as u64 * n || nonblank != spec.l_prime(i, r as u64) {
                bad.push(format!("stage {i} section {r}"));
            }
        }
        bal.extend(check_balance(plan.matrix(), plan.s()).into_iter().map(|v| format!("stage {i}: {v}")));
    }
    rep.check("budget_identity", bad, true);
    rep.check("blank_balance", bal, true);

    for i in 2..=k {
        let pre = format!("stage{i}");
        let st = p.stage(i);
        let u = spec.level_budget(i).unwrap();

        // injectivity and coordinate ranges
        let mut seen = std::collections::HashSet::with_capacity(total as usize);
        let mut dup = Vec::new();
        let mut range = Vec::new();
        for rank in 0..total {
            let pt = st.point(rank);
            if !seen.insert(pt) {
                dup.push(format!("rank {rank} repeats {pt:?}"));
            }
            let ok = pt.iter().enumerate().all(|(j, &y)| {
                let hi = if j + 1 == i { u } else { 1u64 << spec.block_width(j + 1) };
                y >= 1 && y as u64 <= hi
            });
            if !ok {
                range.push(format!("rank {rank} at {pt:?}"));
            }
        }
        rep.check(format!("{pre}.injective"), dup, true);
        rep.check(format!("{pre}.within_budget"), range, true);

        if i < k {
            let next = p.stage(i + 1);
            let mut bad = Vec::new();
            for rank in 0..total {
                if st.point(rank)[..i - 1] != next.point(rank)[..i - 1] {
                    bad.push(format!("rank {rank}"));
                }
            }
            rep.check(format!("{pre}.prefix_stable"), bad, true);
            let infl = p.inflation(i);
            let fk = p.fk();
            let bad = (0..total)
                .filter(|&r| fk.point(r)[i - 1] != infl.column(r))
                .map(|r| format!("rank {r}"))
                .collect();
            rep.check(format!("{pre}.final_column"), bad, true);
            inflation_checks(p, i, gated, &mut rep);
        }
        if i >= 3 {
            stack_checks(p, i, gated, &mut rep);
        }
    }
    rep
}

fn inflation_checks(p: &Pipeline, i: usize, gated: bool, rep: &mut Report) {
    let spec = &p.spec;
    let total = spec.total();
    let plan = p.plan(i);
    let infl = p.inflation(i);
    let next = p.stage(i + 1);
    let pre = format!("stage{i}");
    let sections = plan.sections();

    // one point per stack address within a section
    let addrs = 1usize << spec.e(i);
    let mut stamp = vec![0u32; addrs];
    let mut bad = Vec::new();
    let order = bucket_by(&infl.section, sections);
    for r in 1..=sections {
        for &v in &order.1[order.0[r - 1]..order.0[r]] {
            let a = address(spec, &next.point(v as u64)[..i]);
            if stamp[a] == r as u32 {
                bad.push(format!("section {r} address {a}"));
            }
            stamp[a] = r as u32;
        }
    }
    rep.check(format!("{pre}.section_injective"), bad, true);

    // every nonblank level before the last section is full
    let per_level = 1u64 << spec.e(i - 1);
    let mut fill = vec![0u64; sections * plan.section_len() as usize + 1];
    for rank in 0..total {
        fill[infl.level(rank) as usize] += 1;
    }
    let mut bad = Vec::new();
    for z in 1..=plan.nonblank_levels() as u64 {
        let (sec, _, col) = plan.level(z).unwrap();
        let lvl = (sec - 1) * plan.section_len() + col;
        if (sec as usize) < sections && fill[lvl as usize] != per_level {
            bad.push(format!("level {lvl} holds {}", fill[lvl as usize]));
        }
    }
    rep.check(format!("{pre}.full_sections"), bad, gated);

    // sections follow pages: page - 1 <= section <= page
    let bad = (0..total)
        .filter(|&r| {
            let pg = spec.page_of_rank(r, i);
            let s = infl.section(r) as u64;
            !(s <= pg && pg <= s + 1)
        })
        .map(|r| format!("rank {r}"))
        .collect();
    rep.check(format!("{pre}.section_page_offset"), bad, gated);

    // corresponding subpages sit on nearby nonblank levels
    let ai = spec.a(i);
    let mut by_q: Vec<Vec<(u32, u32)>> = vec![Vec::new(); ai as usize];
    for rank in 0..total {
        let q = (spec.page_of_rank(rank, i - 1) - 1) % ai;
        let sec = infl.section(rank) as usize;
        let key = (infl.nu(rank), plan.section_nonblank(sec));
        if !by_q[q as usize].contains(&key) {
            by_q[q as usize].push(key);
        }
    }
    let mut bad = Vec::new();
    for (q, keys) in by_q.iter().enumerate() {
        if keys.len() > 64 {
            bad.push(format!("subpage {}: {} distinct levels", q + 1, keys.len()));
            continue;
        }
        for x in keys {
            for y in keys {
                if nu_distance(x.0, x.1, y.0, y.1) > 3 {
                    bad.push(format!("subpage {}: levels {:?} and {:?}", q + 1, x, y));
                }
            }
        }
    }
    rep.check(format!("{pre}.subpage_levels_close"), bad, gated && i >= 3);

    // heights within one section or page, and across neighbors
    let spread_check = |key: &dyn Fn(u64) -> usize, buckets: usize, same: u32, adj: u32| {
        let mut lo = vec![u32::MAX; buckets + 1];
        let mut hi = vec![0u32; buckets + 1];
        for rank in 0..total {
            let b = key(rank);
            let h = next.point(rank)[i];
            lo[b] = lo[b].min(h);
            hi[b] = hi[b].max(h);
        }
        let mut bad = Vec::new();
        for b in 1..=buckets {
            if lo[b] != u32::MAX && hi[b] - lo[b] > same {
                bad.push(format!("bucket {b}: heights {}..{}", lo[b], hi[b]));
            }
            if b < buckets && lo[b] != u32::MAX && lo[b + 1] != u32::MAX {
                let span = hi[b].max(hi[b + 1]) - lo[b].min(lo[b + 1]);
                if span > adj {
                    bad.push(format!("buckets {b},{}: span {span}", b + 1));
                }
            }
        }
        bad
    };
    let bad = spread_check(&|r| infl.section(r) as usize, sections, 1, 2);
    rep.check(format!("{pre}.section_height_spread"), bad, gated);
    let pages = spec.page_count(i) as usize;
    let bad = spread_check(&|r| spec.page_of_rank(r, i) as usize, pages, 2, 3);
    rep.check(format!("{pre}.page_height_spread"), bad, gated);
}

fn stack_checks(p: &Pipeline, i: usize, gated: bool, rep: &mut Report) {
    let spec = &p.spec;
    let total = spec.total();
    let st = p.stage(i);
    let infl = p.inflation(i - 1);
    let plan = p.plan(i - 1);
    let pre = format!("stage{i}");
    let np = spec.page_count(i - 1) as usize;
    let addrs = 1usize << spec.e(i - 1);
    let unit = 1u64 << spec.e(i - 1);
    let cap = spec.level_budget(i).unwrap() as usize;
    let table = p.stacks(i);
    let addr = |rank: u64| address(spec, &st.point(rank)[..i - 1]);

    // sweep by section: max heights and the two-value property
    let order = bucket_by(&infl.section, np);
    let mut hs = Heights::new(addrs, cap);
    let mut top = vec![0u32; np + 1];
    let mut two = Vec::new();
    let mut by_col = Vec::new();
    let ncol = plan.section_len() as usize;
    let per_col = 1u32 << spec.e(i - 2);
    for t in 1..=np {
        let members = &order.1[order.0[t - 1]..order.0[t]];
        let mut cnt = vec![0u32; ncol + 1];
        for &v in members {
            hs.bump(addr(v as u64));
            cnt[infl.column(v as u64) as usize] += 1;
        }
        top[t] = hs.hi;
        if t < np {
            if hs.lo + 1 < hs.hi {
                two.push(format!("after section {t}: heights {}..{}", hs.lo, hs.hi));
            }
            for (c, &x) in cnt.iter().enumerate().skip(1) {
                if x != 0 && x != per_col {
                    by_col.push(format!("section {t} column {c}: {x} of {per_col}"));
                }
            }
        }
    }
    rep.check(format!("{pre}.stack_two_heights"), two, gated);
    rep.check(format!("{pre}.stack_heights_by_column"), by_col, gated);
    let mut bad = Vec::new();
    for r in 1..=np {
        let l = spec.l(i, r as u64);
        if top[r] as u64 != l {
            bad.push(format!("r={r}: max height {} vs {l}", top[r]));
        }
        if l * unit - r as u64 * spec.prefix_product(i - 1) >= unit {
            bad.push(format!("r={r}: slack too large"));
        }
    }
    rep.check(format!("{pre}.max_height_formula"), bad, gated);

    // page-prefix images stay under the level formulas
    let bad = (0..total)
        .filter(|&r| {
            let h = st.point(r)[i - 1] as u64;
            h > spec.l(i, spec.page_of_rank(r, i - 1))
                || (i < spec.k() && h > spec.l_prime(i, spec.page_of_rank(r, i)))
        })
        .map(|r| format!("rank {r}"))
        .collect();
    rep.check(format!("{pre}.page_prefix_levels"), bad, gated);

    // stack order: sections strictly and pages weakly increasing upward
    let mut mono = table.defects.clone();
    let mut page_mono = Vec::new();
    let mut share = Vec::new();
    let mut successive = Vec::new();
    for x in 0..table.addresses() {
        let s = table.stack(x);
        if s.contains(&u32::MAX) {
            continue;
        }
        for w in s.windows(2) {
            if infl.section(w[0] as u64) >= infl.section(w[1] as u64) {
                mono.push(format!("address {x}: sections out of order"));
            }
            if spec.page_of_rank(w[0] as u64, i - 1) > spec.page_of_rank(w[1] as u64, i - 1) {
                page_mono.push(format!("address {x}: pages out of order"));
            }
        }
        let mut pages: Vec<(u64, usize)> = s
            .iter()
            .enumerate()
            .map(|(h, &r)| (spec.page_of_rank(r as u64, i - 1), h))
            .collect();
        pages.sort_unstable();
        for run in pages.chunk_by(|a, b| a.0 == b.0) {
            if run.len() > 2 {
                share.push(format!("address {x}: page {} has {} points", run[0].0, run.len()));
            } else if run.len() == 2 && run[1].1 - run[0].1 > 1 {
                successive.push(format!("address {x}: page {} not at successive heights", run[0].0));
            }
        }
    }
    rep.check(format!("{pre}.stack_monotone"), mono, true);
    rep.check(format!("{pre}.page_monotone"), page_mono, gated);
    rep.check(format!("{pre}.page_share_per_stack"), share, gated);
    rep.check(format!("{pre}.page_share_successive"), successive, gated);

    let bad = (0..total)
        .filter(|&r| {
            let t = top[spec.page_of_rank(r, i - 1) as usize] as i64;
            let h = st.point(r)[i - 1] as i64;
            h < t - 2 || h > t
        })
        .map(|r| format!("rank {r}"))
        .collect();
    rep.check(format!("{pre}.page_heights_near_max"), bad, gated);

    // sweep by page: page-prefix stacks and the top two levels
    let block = spec.prefix_product(i - 1);
    let mut hp = Heights::new(addrs, cap);
    let mut range = Vec::new();
    let mut dense = Vec::new();
    for r in 1..=np {
        for rank in (r as u64 - 1) * block..r as u64 * block {
            hp.bump(addr(rank));
        }
        let t = top[r];
        if (hp.lo as i64) < t as i64 - 2 || hp.hi > t {
            range.push(format!("r={r}: page stacks {}..{} vs max {t}", hp.lo, hp.hi));
        }
        if t >= 2 {
            let v = hp.at(t - 1) as u64 + 2 * hp.at(t) as u64;
            if v <= unit {
                dense.push(format!("r={r}: {v} points in the top two levels"));
            }
        }
    }
    rep.check(format!("{pre}.page_stack_range"), range, gated);
    rep.check(format!("{pre}.top_levels_dense"), dense, gated);
}

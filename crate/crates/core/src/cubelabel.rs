//! Spanning cyclic caterpillars of hypercubes and the labelings they
//! induce. Hypercube vertices are integers `0..2^t`; labels are `1..=2^t`.

use std::collections::HashSet;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::FlowNet;

/// A spanning cyclic caterpillar of `Q_t` with `2r+1` leaves per spine
/// vertex. Leaves are kept in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caterpillar {
    t: u32,
    r: u32,
    spine: Vec<u32>,
    leaves: Vec<Vec<u32>>,
}

fn adjacent(x: u32, y: u32) -> bool {
    (x ^ y).count_ones() == 1
}

fn check_params(t: u32, leaf_degree: u32) -> Result<u32> {
    if leaf_degree.is_multiple_of(2) || !leaf_degree.div_ceil(2).is_power_of_two() {
        return Err(Error::Params(format!("leaf degree {leaf_degree} is not 2^(i+1) - 1")));
    }
    if !(1..=30).contains(&t) {
        return Err(Error::Params(format!("dimension {t} out of range")));
    }
    let size = 1u64 << t;
    let per = leaf_degree as u64 + 1;
    if !size.is_multiple_of(per) || size / per < 3 {
        return Err(Error::Params(format!("Q_{t} cannot carry a spine with {leaf_degree} leaves per vertex")));
    }
    Ok((leaf_degree - 1) / 2)
}

impl Caterpillar {
    /// Validates and normalizes (sorted leaves).
    pub fn new(t: u32, r: u32, spine: Vec<u32>, mut leaves: Vec<Vec<u32>>) -> Result<Self> {
        check_params(t, 2 * r + 1)?;
        let bad = |m: String| Err(Error::Params(m));
        let e = spine.len();
        if e as u64 * (2 * r as u64 + 2) != 1u64 << t {
            return bad(format!("spine of length {e} does not fit Q_{t}"));
        }
        if leaves.len() != e {
            return bad("one leaf list per spine vertex required".into());
        }
        let mut seen = vec![false; 1usize << t];
        for (idx, &s) in spine.iter().enumerate() {
            let next = spine[(idx + 1) % e];
            if !adjacent(s, next) {
                return bad(format!("spine vertices {s} and {next} are not adjacent"));
            }
            leaves[idx].sort_unstable();
            if leaves[idx].len() != 2 * r as usize + 1 {
                return bad(format!("spine vertex {s} has {} leaves", leaves[idx].len()));
            }
            for &v in std::iter::once(&s).chain(&leaves[idx]) {
                if v >> t != 0 || std::mem::replace(&mut seen[v as usize], true) {
                    return bad(format!("vertex {v} repeated or out of range"));
                }
            }
            if let Some(&l) = leaves[idx].iter().find(|&&l| !adjacent(l, s)) {
                return bad(format!("leaf {l} is not adjacent to {s}"));
            }
        }
        Ok(Caterpillar { t, r, spine, leaves })
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    /// Leaf count per spine vertex is `2r+1`.
    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn leaf_degree(&self) -> u32 {
        2 * self.r + 1
    }

    pub fn spine(&self) -> &[u32] {
        &self.spine
    }

    pub fn leaves(&self, idx: usize) -> &[u32] {
        &self.leaves[idx]
    }

    /// Label window `2r+3` guaranteed by the labeling.
    pub fn window(&self) -> u32 {
        2 * self.r + 3
    }

    /// Cache format: `CAT t r e`, spine vertices one per line, then one line
    /// of leaves per spine vertex. Vertices are written as t-bit strings.
    pub fn to_cache(&self) -> String {
        let w = self.t as usize;
        let mut out = format!("CAT {} {} {}\n", self.t, self.r, self.spine.len());
        for s in &self.spine {
            out.push_str(&format!("{s:0w$b}\n"));
        }
        for ls in &self.leaves {
            let l: Vec<String> = ls.iter().map(|v| format!("{v:0w$b}")).collect();
            out.push_str(&l.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_cache(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let perr = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.into() };
        let (ln, head) = lines.next().ok_or_else(|| perr(0, "empty caterpillar file"))?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "CAT" {
            return Err(perr(ln, "expected header CAT t r e"));
        }
        let num = |s: &str| s.parse::<u32>().map_err(|_| perr(ln, "bad header number"));
        let (t, r, e) = (num(parts[1])?, num(parts[2])?, num(parts[3])?);
        let bits = |ln: usize, s: &str| -> Result<u32> {
            if s.len() != t as usize {
                return Err(perr(ln, "vertex has the wrong width"));
            }
            u32::from_str_radix(s, 2).map_err(|_| perr(ln, "bad vertex"))
        };
        let mut spine = Vec::with_capacity(e as usize);
        for _ in 0..e {
            let (ln, l) = lines.next().ok_or_else(|| perr(ln, "spine truncated"))?;
            spine.push(bits(ln, l.trim())?);
        }
        let mut leaves = Vec::with_capacity(e as usize);
        for _ in 0..e {
            let (ln, l) = lines.next().ok_or_else(|| perr(ln, "leaves truncated"))?;
            leaves.push(l.split_whitespace().map(|s| bits(ln, s)).collect::<Result<Vec<_>>>()?);
        }
        Caterpillar::new(t, r, spine, leaves)
    }
}

/// Backtracking search for a spanning cyclic caterpillar with the given
/// leaf degree. Only small dimensions are searched (`t <= 8`).
pub fn search_caterpillar(t: u32, leaf_degree: u32) -> Result<Caterpillar> {
    search_caterpillar_by(t, leaf_degree, &|_| true)
}

/// First caterpillar in search order that satisfies `accept`.
pub fn search_caterpillar_by(t: u32, leaf_degree: u32, accept: &dyn Fn(&Caterpillar) -> bool) -> Result<Caterpillar> {
    let r = check_params(t, leaf_degree)?;
    if t > 8 {
        return Err(Error::Params(format!("search limited to t <= 8, got {t}")));
    }
    let n = 1usize << t;
    let e = n / (leaf_degree as usize + 1);
    let spare = t as i64 - 2 - leaf_degree as i64;
    if spare < 0 {
        return Err(Error::NoCaterpillar { t, leaf_degree });
    }
    let mut s = Search {
        t,
        r,
        accept,
        found: None,
        e,
        leaf_degree,
        spare: spare as u32,
        on: vec![false; n],
        dom: vec![0u32; n],
        undominated: n,
        path: Vec::with_capacity(e),
        chords: vec![0u32; n],
        extras: Vec::new(),
    };
    s.push(0);
    if s.grow() {
        return Ok(s.found.take().expect("set on success"));
    }
    Err(Error::NoCaterpillar { t, leaf_degree })
}

struct Search<'a> {
    t: u32,
    r: u32,
    accept: &'a dyn Fn(&Caterpillar) -> bool,
    found: Option<Caterpillar>,
    e: usize,
    leaf_degree: u32,
    spare: u32,
    on: Vec<bool>,
    // number of spine vertices at distance <= 1
    dom: Vec<u32>,
    undominated: usize,
    path: Vec<u32>,
    // spine neighbors beyond the two cycle neighbors
    chords: Vec<u32>,
    extras: Vec<Vec<u32>>,
}

impl Search<'_> {
    fn nbrs(&self, v: u32) -> impl Iterator<Item = u32> {
        (0..self.t).map(move |b| v ^ (1 << b))
    }

    fn mark(&mut self, v: u32, delta: i32) {
        let t = self.t;
        for u in std::iter::once(v).chain((0..t).map(|b| v ^ (1 << b))) {
            let d = &mut self.dom[u as usize];
            if delta > 0 {
                if *d == 0 {
                    self.undominated -= 1;
                }
                *d += 1;
            } else {
                *d -= 1;
                if *d == 0 {
                    self.undominated += 1;
                }
            }
        }
    }

    // Adds v; returns false (and adds nothing) when a chord limit breaks.
    fn try_push(&mut self, v: u32) -> bool {
        let prev = *self.path.last().unwrap();
        let first = self.path[0];
        let closing = self.path.len() + 1 == self.e;
        let mut extra = Vec::new();
        for u in self.nbrs(v) {
            if self.on[u as usize] && u != prev && !(closing && u == first) {
                extra.push(u);
            }
        }
        if extra.len() as u32 > self.spare || extra.iter().any(|&u| self.chords[u as usize] >= self.spare) {
            return false;
        }
        for &u in &extra {
            self.chords[u as usize] += 1;
        }
        self.chords[v as usize] = extra.len() as u32;
        self.extras.push(extra);
        self.push(v);
        true
    }

    fn push(&mut self, v: u32) {
        self.on[v as usize] = true;
        self.path.push(v);
        self.mark(v, 1);
    }

    fn pop(&mut self) {
        let v = self.path.pop().unwrap();
        self.on[v as usize] = false;
        self.mark(v, -1);
        for u in self.extras.pop().unwrap() {
            self.chords[u as usize] -= 1;
        }
        self.chords[v as usize] = 0;
    }

    fn grow(&mut self) -> bool {
        let len = self.path.len();
        let remaining = self.e - len;
        if self.undominated > remaining * self.t as usize {
            return false;
        }
        let last = *self.path.last().unwrap();
        if remaining == 0 {
            if !adjacent(last, self.path[0]) || self.undominated != 0 {
                return false;
            }
            let Some(leaves) = assign_leaves(self.t, &self.path, self.leaf_degree) else {
                return false;
            };
            let cat = Caterpillar::new(self.t, self.r, self.path.clone(), leaves).expect("search output is valid");
            if (self.accept)(&cat) {
                self.found = Some(cat);
                return true;
            }
            return false;
        }
        // symmetry: the first step is along bit 0, and new bits appear in order
        let used_bits = self.path.iter().fold(0u32, |a, &v| a | v);
        let next_bit = 32 - used_bits.leading_zeros();
        for b in 0..self.t {
            if b > next_bit || (len == 1 && b != 0) {
                break;
            }
            let v = last ^ (1 << b);
            if self.on[v as usize] {
                continue;
            }
            if remaining == 1 && !adjacent(v, self.path[0]) {
                continue;
            }
            if self.try_push(v) {
                if self.grow() {
                    return true;
                }
                self.pop();
            }
        }
        false
    }
}

// Assigns every non-spine vertex to an adjacent spine vertex, exactly
// `leaf_degree` per spine vertex, by max flow.
fn assign_leaves(t: u32, spine: &[u32], leaf_degree: u32) -> Option<Vec<Vec<u32>>> {
    let n = 1usize << t;
    let on: HashSet<u32> = spine.iter().copied().collect();
    let e = spine.len();
    let (src, snk) = (0, 1);
    let mut net = FlowNet::new(2 + e + n);
    let mut arcs = Vec::new();
    for (idx, &s) in spine.iter().enumerate() {
        net.add(src, 2 + idx, leaf_degree as i64);
        for b in 0..t {
            let u = s ^ (1 << b);
            if !on.contains(&u) {
                arcs.push((idx, u, net.add(2 + idx, 2 + e + u as usize, 1)));
            }
        }
    }
    for v in 0..n as u32 {
        if !on.contains(&v) {
            net.add(2 + e + v as usize, snk, 1);
        }
    }
    if net.max_flow(src, snk) != (e as i64) * leaf_degree as i64 {
        return None;
    }
    let mut leaves = vec![Vec::new(); e];
    for (idx, u, a) in arcs {
        if net.flow_on(a) == 1 {
            leaves[idx].push(u);
        }
    }
    Some(leaves)
}

/// Lifts a caterpillar of `Q_t` to `Q_{t+1}`: the spine runs forward through
/// the copy with the new bit clear and backward through the copy with it set.
pub fn double_caterpillar(cat: &Caterpillar) -> Result<Caterpillar> {
    let bit = 1u32 << cat.t;
    let e = cat.spine.len();
    let mut spine = cat.spine.clone();
    let mut leaves = cat.leaves.clone();
    for idx in (0..e).rev() {
        spine.push(cat.spine[idx] | bit);
        leaves.push(cat.leaves[idx].iter().map(|&l| l | bit).collect());
    }
    Caterpillar::new(cat.t + 1, cat.r, spine, leaves)
}

/// A bijection `Q_t -> 1..=2^t` with the recorded window (`0` for Gray).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeLabeling {
    t: u32,
    window: u32,
    label: Vec<u32>,
    inverse: Vec<u32>,
}

impl CubeLabeling {
    fn from_inverse(t: u32, window: u32, inverse: Vec<u32>) -> Self {
        let mut label = vec![0u32; inverse.len()];
        for (idx, &v) in inverse.iter().enumerate() {
            label[v as usize] = idx as u32 + 1;
        }
        CubeLabeling { t, window, label, inverse }
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    /// Label window with distance bound 3; `0` marks a Gray labeling.
    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn is_gray(&self) -> bool {
        self.window == 0
    }

    pub fn label(&self, v: u32) -> u32 {
        self.label[v as usize]
    }

    /// Vertex carrying label `l` (`1 <= l <= 2^t`).
    pub fn vertex(&self, l: u32) -> u32 {
        self.inverse[l as usize - 1]
    }

    pub fn is_bijection(&self) -> bool {
        let n = 1usize << self.t;
        let mut seen = vec![false; n];
        self.inverse.len() == n
            && self.inverse.iter().all(|&v| (v as usize) < n && !std::mem::replace(&mut seen[v as usize], true))
            && self.label.iter().enumerate().all(|(v, &l)| self.inverse[l as usize - 1] == v as u32)
    }

    /// Upper bound on the hypercube distance between vertices whose labels
    /// are `delta` apart cyclically.
    pub fn implied_distance(&self, delta: u32) -> u32 {
        let bound = if delta == 0 {
            0
        } else if self.window == 0 {
            delta
        } else {
            3 * delta.div_ceil(self.window)
        };
        bound.min(self.t)
    }
}

/// Labels spine vertex `i` with `(2r+2) i` and its `j`-th leaf with
/// `(2r+2)(i-1) + j`.
pub fn label_from_caterpillar(cat: &Caterpillar) -> CubeLabeling {
    let mut inverse = Vec::with_capacity(1usize << cat.t);
    for (idx, &s) in cat.spine.iter().enumerate() {
        inverse.extend_from_slice(&cat.leaves[idx]);
        inverse.push(s);
    }
    CubeLabeling::from_inverse(cat.t, cat.window(), inverse)
}

/// Reflected binary code order.
pub fn gray_label(t: u32) -> CubeLabeling {
    let inverse = (0..1u32 << t).map(|k| k ^ (k >> 1)).collect();
    CubeLabeling::from_inverse(t, 0, inverse)
}

/// First pair `(x, y)` (by label of `x`) whose labels are at most `w` apart
/// cyclically but whose distance exceeds `dbound`.
pub fn verify_window(lab: &CubeLabeling, w: u32, dbound: u32) -> Option<(u32, u32)> {
    let n = 1u64 << lab.t;
    let w = (w as u64).min(n - 1);
    (0..n).into_par_iter().find_map_first(|l0| {
        let x = lab.inverse[l0 as usize];
        (1..=w).find_map(|d| {
            let y = lab.inverse[((l0 + d) % n) as usize];
            ((x ^ y).count_ones() > dbound).then_some((x, y))
        })
    })
}

fn base(r: u32) -> &'static Caterpillar {
    static R0: OnceLock<Caterpillar> = OnceLock::new();
    static R1: OnceLock<Caterpillar> = OnceLock::new();
    match r {
        0 => R0.get_or_init(|| search_caterpillar(3, 1).expect("Q3 carries a cyclic caterpillar")),
        _ => R1.get_or_init(|| search_caterpillar(6, 3).expect("Q6 carries a cyclic caterpillar")),
    }
}

/// Caterpillar of `Q_t` with `2r+1` leaves (`r` in `{0, 1}`), from the
/// searched base by doubling.
pub fn caterpillar_for(t: u32, r: u32) -> Result<Caterpillar> {
    let b = match r {
        0 | 1 => base(r),
        _ => return Err(Error::Params(format!("no base caterpillar for r = {r}"))),
    };
    if t < b.t {
        return Err(Error::NoCaterpillar { t, leaf_degree: 2 * r + 1 });
    }
    let mut c = b.clone();
    while c.t < t {
        c = double_caterpillar(&c)?;
    }
    Ok(c)
}

/// Labeling for a block of width `t` with the requested window: `0` Gray,
/// `3` or `5` caterpillar. `None` picks window 5 when `t >= 6`, else Gray.
pub fn labeling_for(t: u32, window: Option<u32>) -> Result<CubeLabeling> {
    let w = window.unwrap_or(if t >= 6 { 5 } else { 0 });
    match w {
        0 => Ok(gray_label(t)),
        3 | 5 => Ok(label_from_caterpillar(&caterpillar_for(t, (w - 3) / 2)?)),
        _ => Err(Error::Params(format!("unsupported window {w}; use 0, 3 or 5"))),
    }
}

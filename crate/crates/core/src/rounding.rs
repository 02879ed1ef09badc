//! Consistent roundings.
//!
//! Rows, columns and zero ordinals are 1-based in the public functions
//! (`zero_index`, `check_forward`); `BinaryMatrix::get` and friends are
//! 0-based. Permutations are 0-based index vectors.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::flow::FlowNet;

pub type Rational = Ratio<i64>;

/// An m x n matrix of bits with cached row counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    m: usize,
    n: usize,
    bits: Vec<u8>,
    row_ones: Vec<u32>,
}

impl BinaryMatrix {
    pub fn zeros(m: usize, n: usize) -> Self {
        BinaryMatrix {
            m,
            n,
            bits: vec![0; m * n],
            row_ones: vec![0; m],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        let mut out = BinaryMatrix::zeros(m, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Matrix(format!("row {} has length {}, expected {}", i + 1, row.len(), n)));
            }
            for (j, &b) in row.iter().enumerate() {
                if b > 1 {
                    return Err(Error::Matrix(format!("entry ({},{}) is {}", i + 1, j + 1, b)));
                }
                out.set(i, j, b);
            }
        }
        Ok(out)
    }

    /// Rows given as strings of '0'/'1'.
    pub fn from_strs(rows: &[&str]) -> Result<Self> {
        let rows: Vec<Vec<u8>> = rows
            .iter()
            .map(|r| r.trim().bytes().map(|c| c.wrapping_sub(b'0')).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.bits[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, b: u8) {
        let old = self.bits[i * self.n + j];
        self.bits[i * self.n + j] = b;
        self.row_ones[i] = self.row_ones[i] + b as u32 - old as u32;
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.bits[i * self.n..(i + 1) * self.n]
    }

    pub fn row_ones(&self, i: usize) -> u32 {
        self.row_ones[i]
    }

    pub fn row_zeros(&self, i: usize) -> u32 {
        self.n as u32 - self.row_ones[i]
    }

    /// Recounts every row and compares with the cache.
    pub fn counts_consistent(&self) -> bool {
        (0..self.m).all(|i| self.row(i).iter().map(|&b| b as u32).sum::<u32>() == self.row_ones[i])
    }

    pub fn total_ones(&self) -> u64 {
        self.row_ones.iter().map(|&c| c as u64).sum()
    }

    /// Dump format: header "m n", then one row of '0'/'1' per line.
    pub fn dump(&self) -> String {
        self.to_string()
    }

    /// Parses one matrix in dump format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut all = parse_matrices(text)?;
        match all.len() {
            1 => Ok(all.pop().unwrap()),
            c => Err(Error::Parse { line: 1, msg: format!("expected one matrix, found {c}") }),
        }
    }
}

impl fmt::Display for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.m, self.n)?;
        for i in 0..self.m {
            let s: String = self.row(i).iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Parses a sequence of matrices in dump format. Blank lines and lines
/// starting with '#' are ignored.
pub fn parse_matrices(text: &str) -> Result<Vec<BinaryMatrix>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut out = Vec::new();
    while let Some((ln, header)) = lines.next() {
        let parts: Vec<&str> = header.split_whitespace().collect();
        let bad = || Error::Parse { line: ln, msg: format!("bad matrix header {header:?}") };
        if parts.len() != 2 {
            return Err(bad());
        }
        let m: usize = parts[0].parse().map_err(|_| bad())?;
        let n: usize = parts[1].parse().map_err(|_| bad())?;
        let mut rows = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, row) = lines.next().ok_or(Error::Parse { line: ln, msg: "matrix truncated".into() })?;
            if row.len() != n || !row.bytes().all(|c| c == b'0' || c == b'1') {
                return Err(Error::Parse { line: ln, msg: format!("bad matrix row {row:?}") });
            }
            rows.push(row.bytes().map(|c| c - b'0').collect());
        }
        let mut mat = BinaryMatrix::from_rows(&rows)?;
        if m == 0 {
            mat.n = n;
        }
        out.push(mat);
    }
    Ok(out)
}

// Shared denominator view of a rational list: numerators over `den`.
struct Scaled {
    num: Vec<i128>,
    den: i128,
}

fn scale(values: &[Rational]) -> Result<Scaled> {
    let mut den: i128 = 1;
    for v in values {
        den = den.lcm(&(*v.denom() as i128));
        if den > (1i128 << 62) {
            return Err(Error::Rounding("common denominator too large".into()));
        }
    }
    let num = values
        .iter()
        .map(|v| *v.numer() as i128 * (den / *v.denom() as i128))
        .collect();
    Ok(Scaled { num, den })
}

/// True when every prefix sum of `rounded`, read in `order`, lies between
/// the floor and ceiling of the matching prefix sum of `values`, and every
/// entry is a floor or ceiling of its value.
pub fn is_consistent(values: &[Rational], rounded: &[i64], order: &[usize]) -> bool {
    if values.len() != rounded.len() || order.len() != values.len() {
        return false;
    }
    let mut s = Rational::from_integer(0);
    let mut sb = 0i64;
    for &idx in order {
        let v = values[idx];
        let r = rounded[idx];
        if r < v.floor().to_integer() || r > v.ceil().to_integer() {
            return false;
        }
        s += v;
        sb += r;
        if sb < s.floor().to_integer() || sb > s.ceil().to_integer() {
            return false;
        }
    }
    true
}

/// A rounding of `values` consistent in the original order and in the order
/// `perm` (0-based indices, `perm[k]` is the k-th element visited).
///
/// Panics if the flow comes up short, which would contradict the existence
/// theorem and so indicates a bug.
pub fn two_way_round(values: &[Rational], perm: &[usize]) -> Result<Vec<i64>> {
    let len = values.len();
    let mut seen = vec![false; len];
    if perm.len() != len || perm.iter().any(|&p| p >= len || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::Rounding("second order is not a permutation".into()));
    }
    let sc = scale(values)?;
    let den = sc.den;
    let floors: Vec<i128> = sc.num.iter().map(|&x| Integer::div_floor(&x, &den)).collect();
    // fractional parts in units of 1/den; zero parts drop out
    let mut frac: Vec<i128> = sc.num.iter().zip(&floors).map(|(&x, &f)| x - f * den).collect();
    let total: i128 = frac.iter().sum();
    let pad = (den - total.rem_euclid(den)) % den;
    let dummy = len;
    frac.push(pad);
    let order1: Vec<usize> = (0..=len).collect();
    let mut order2: Vec<usize> = perm.to_vec();
    order2.push(dummy);
    let windows_total = ((total + pad) / den) as usize;

    // windows[t] = elements whose interval meets (t, t+1) in units of den
    let windows = |order: &[usize]| -> Vec<Vec<usize>> {
        let mut w = vec![Vec::new(); windows_total];
        let mut s: i128 = 0;
        for &e in order {
            let x = frac[e];
            if x > 0 {
                let lo = Integer::div_floor(&s, &den);
                let hi = Integer::div_floor(&(s + x + den - 1), &den);
                for t in lo..hi {
                    w[t as usize].push(e);
                }
            }
            s += x;
        }
        w
    };
    let w1 = windows(&order1);
    let w2 = windows(&order2);

    // source, sink, w1 windows, element in/out, w2 windows
    let src = 0;
    let snk = 1;
    let base_w1 = 2;
    let base_in = base_w1 + windows_total;
    let base_out = base_in + len + 1;
    let base_w2 = base_out + len + 1;
    let mut net = FlowNet::new(base_w2 + windows_total);
    for (t, ws) in w1.iter().enumerate() {
        net.add(src, base_w1 + t, 1);
        for &e in ws {
            net.add(base_w1 + t, base_in + e, 1);
        }
    }
    let mut through = vec![usize::MAX; len + 1];
    for e in 0..=len {
        if frac[e] > 0 {
            through[e] = net.add(base_in + e, base_out + e, 1);
        }
    }
    for (t, ws) in w2.iter().enumerate() {
        for &e in ws {
            net.add(base_out + e, base_w2 + t, 1);
        }
        net.add(base_w2 + t, snk, 1);
    }
    let got = net.max_flow(src, snk);
    assert_eq!(got as usize, windows_total, "two-way rounding flow is short");

    Ok((0..len)
        .map(|e| {
            let up = through[e] != usize::MAX && net.flow_on(through[e]) == 1;
            (floors[e] + up as i128) as i64
        })
        .collect())
}

/// A rational matrix as a list of rows.
pub type RationalMatrix = Vec<Vec<Rational>>;

/// Rounds `t` so that all initial row sums, all initial column sums and the
/// grand total move by strictly less than 1.
pub fn round_matrix(t: &[Vec<Rational>]) -> Result<BinaryMatrix> {
    let m = t.len();
    let n = t.first().map_or(0, |r| r.len());
    let zero = Rational::from_integer(0);
    let one = Rational::from_integer(1);
    for (i, row) in t.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Matrix(format!("row {} has length {}, expected {}", i + 1, row.len(), n)));
        }
        if let Some(j) = row.iter().position(|v| *v < zero || *v > one) {
            return Err(Error::Rounding(format!("entry ({},{}) = {} outside [0,1]", i + 1, j + 1, row[j])));
        }
    }
    if m == 0 || n == 0 {
        return Ok(BinaryMatrix::zeros(m, n));
    }
    // (m+1) x (n+1) matrix with integral row and column sums
    let (mm, nn) = (m + 1, n + 1);
    let mut y = vec![zero; mm * nn];
    let mut total = zero;
    for i in 0..m {
        let mut rs = zero;
        for j in 0..n {
            y[i * nn + j] = t[i][j];
            rs += t[i][j];
        }
        y[i * nn + n] = rs.ceil() - rs;
        total += rs;
    }
    for j in 0..n {
        let cs: Rational = (0..m).map(|i| t[i][j]).sum();
        y[m * nn + j] = cs.ceil() - cs;
    }
    y[m * nn + n] = total;
    let col_major: Vec<usize> = (0..nn).flat_map(|j| (0..mm).map(move |i| i * nn + j)).collect();
    let yb = two_way_round(&y, &col_major)?;
    let mut f = BinaryMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            f.set(i, j, yb[i * nn + j] as u8);
        }
    }
    Ok(f)
}

/// Violations of the three discrepancy contracts, with strict `< 1`.
pub fn check_matrix_rounding(t: &[Vec<Rational>], f: &BinaryMatrix) -> Vec<String> {
    let mut bad = Vec::new();
    let m = t.len();
    let n = t.first().map_or(0, |r| r.len());
    if f.rows() != m || f.cols() != n {
        bad.push(format!("shape {}x{} vs {}x{}", f.rows(), f.cols(), m, n));
        return bad;
    }
    let diff = |i: usize, j: usize| t[i][j] - Rational::from_integer(f.get(i, j) as i64);
    for i in 0..m {
        let mut s = Rational::from_integer(0);
        for j in 0..n {
            if t[i][j].floor().to_integer() > f.get(i, j) as i64 || t[i][j].ceil().to_integer() < f.get(i, j) as i64 {
                bad.push(format!("entry ({},{}) is not a rounding", i + 1, j + 1));
            }
            s += diff(i, j);
            if !within_one(s) {
                bad.push(format!("row {} prefix {} discrepancy {}", i + 1, j + 1, s));
            }
        }
    }
    for j in 0..n {
        let mut s = Rational::from_integer(0);
        for i in 0..m {
            s += diff(i, j);
            if !within_one(s) {
                bad.push(format!("column {} prefix {} discrepancy {}", j + 1, i + 1, s));
            }
        }
    }
    let tot: Rational = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| diff(i, j)).sum();
    if !within_one(tot) {
        bad.push(format!("total discrepancy {tot}"));
    }
    bad
}

/// Row targets `s_i`, all equal to `kappa` or `kappa + 1`, over `n` columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundingSpec {
    x: Vec<u32>,
    n: usize,
    kappa: u32,
}

impl RoundingSpec {
    pub fn new(x: Vec<u32>, n: usize) -> Result<Self> {
        let kappa = x.iter().copied().min().unwrap_or(0);
        if x.iter().any(|&s| s > kappa + 1) {
            return Err(Error::Params("row targets span more than two consecutive values".into()));
        }
        if kappa as usize + 1 > n {
            return Err(Error::Params(format!("kappa+1 = {} exceeds n = {}", kappa + 1, n)));
        }
        Ok(RoundingSpec { x, n, kappa })
    }

    pub fn targets(&self) -> &[u32] {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    /// `c = (kappa+1)/n`.
    pub fn c(&self) -> Rational {
        Rational::new(self.kappa as i64 + 1, self.n as i64)
    }

    /// Whether the zero-position bounds apply (`kappa+1 <= n/2`).
    pub fn half_dense(&self) -> bool {
        2 * (self.kappa as usize + 1) <= self.n
    }

    /// The constant-row source matrix `T^X`.
    pub fn source(&self) -> RationalMatrix {
        self.x
            .iter()
            .map(|&s| vec![Rational::new(s as i64, self.n as i64); self.n])
            .collect()
    }
}

/// Balanced rounding `F^X` of `T^X`.
pub fn build_fx(spec: &RoundingSpec) -> Result<BinaryMatrix> {
    let m = spec.x.len();
    if spec.x.iter().all(|&s| s == 0) {
        return Ok(BinaryMatrix::zeros(m, spec.n));
    }
    let f = round_matrix(&spec.source())?;
    let bad = check_balance(&f, &spec.x);
    assert!(bad.is_empty(), "balance contracts failed: {bad:?}");
    Ok(f)
}

/// Violations of the balance contracts for a designation matrix:
/// exact row sums, initial column sums of equal depth within 1, initial row
/// sums of equal width within 2.
pub fn check_balance(f: &BinaryMatrix, x: &[u32]) -> Vec<String> {
    let mut bad = Vec::new();
    let (m, n) = (f.rows(), f.cols());
    if x.len() != m {
        bad.push(format!("{} row targets for {} rows", x.len(), m));
        return bad;
    }
    for i in 0..m {
        if f.row_ones(i) != x[i] {
            bad.push(format!("row {} sums to {}, target {}", i + 1, f.row_ones(i), x[i]));
        }
    }
    let mut col = vec![0u32; n];
    for b in 0..m {
        for (j, c) in col.iter_mut().enumerate() {
            *c += f.get(b, j) as u32;
        }
        let (lo, hi) = min_max(&col);
        if hi - lo > 1 {
            bad.push(format!("initial column sums at depth {} spread {}", b + 1, hi - lo));
        }
    }
    let mut row = vec![0u32; m];
    for b in 0..n {
        for (i, r) in row.iter_mut().enumerate() {
            *r += f.get(i, b) as u32;
        }
        let (lo, hi) = min_max(&row);
        if hi - lo > 2 {
            bad.push(format!("initial row sums at width {} spread {}", b + 1, hi - lo));
        }
    }
    bad
}

fn within_one(x: Rational) -> bool {
    x > Rational::from_integer(-1) && x < Rational::from_integer(1)
}

fn min_max(v: &[u32]) -> (u32, u32) {
    v.iter().fold((u32::MAX, 0), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Zero positions of every row, for repeated `N_r(d)` queries.
#[derive(Debug, Clone)]
pub struct ZeroTable {
    n: usize,
    zeros: Vec<Vec<u32>>,
}

impl ZeroTable {
    pub fn new(f: &BinaryMatrix) -> Result<Self> {
        if f.rows() == 0 || (0..f.rows()).all(|i| f.row_zeros(i) == 0) {
            return Err(Error::Matrix("matrix has no zero entry".into()));
        }
        let zeros = (0..f.rows())
            .map(|i| (0..f.cols()).filter(|&j| f.get(i, j) == 0).map(|j| j as u32 + 1).collect())
            .collect();
        Ok(ZeroTable { n: f.cols(), zeros })
    }

    pub fn row_zeros(&self, r: usize) -> usize {
        self.zeros[r - 1].len()
    }

    /// `N_r(d)` with row-cyclic wraparound, as `(row, column)`, 1-based.
    pub fn locate(&self, r: usize, d: i64) -> (usize, u32) {
        let (row, col, _) = self.locate_unrolled(r, d);
        (row, col)
    }

    /// Like `locate`, also returning the column measured from the start of
    /// row `r` (negative or beyond `n` after wrapping).
    pub fn locate_unrolled(&self, r: usize, mut d: i64) -> (usize, u32, i64) {
        let m = self.zeros.len();
        let mut row = r - 1;
        let mut shift: i64 = 0;
        while d > self.zeros[row].len() as i64 {
            d -= self.zeros[row].len() as i64;
            row = (row + 1) % m;
            shift += 1;
        }
        while d <= 0 {
            row = (row + m - 1) % m;
            shift -= 1;
            d += self.zeros[row].len() as i64;
        }
        let col = self.zeros[row][(d - 1) as usize];
        (row + 1, col, col as i64 + shift * self.n as i64)
    }

    /// In-row value `N_r(d)` for `1 <= d <= zeros(r)`.
    pub fn n(&self, r: usize, d: usize) -> u32 {
        self.zeros[r - 1][d - 1]
    }
}

/// `N_r(d)`: the column of the d-th zero of row `r`, wrapping into later
/// rows for `d` past the row's zeros and into earlier rows for `d <= 0`.
/// Returns the 1-based column within the row where the count lands.
pub fn zero_index(f: &BinaryMatrix, r: usize, d: i64) -> Result<u32> {
    if r < 1 || r > f.rows() {
        return Err(crate::error::out_of_range("row", r as i64, 1, f.rows() as i64));
    }
    Ok(ZeroTable::new(f)?.locate(r, d).1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Classifies entry `(r, h)` (1-based) of `f` as a rounding of `t`.
pub fn check_forward(f: &BinaryMatrix, t: &[Vec<Rational>], r: usize, h: usize) -> Result<Direction> {
    let fs: i64 = f.row(r - 1)[..h].iter().map(|&b| b as i64).sum();
    let ts: Rational = t[r - 1][..h].iter().sum();
    let c = ts.ceil().to_integer();
    if fs == c {
        Ok(Direction::Forward)
    } else if fs == c - 1 {
        Ok(Direction::Backward)
    } else {
        Err(Error::Rounding(format!("prefix ({r},{h}) sums to {fs}, source prefix {ts}")))
    }
}

/// Violations of the zero-position bounds on `F^X` with `kappa+1 <= n/2`.
/// Only in-row index pairs are tested.
pub fn check_zero_bounds(f: &BinaryMatrix, spec: &RoundingSpec) -> Vec<String> {
    let mut bad = Vec::new();
    if !spec.half_dense() || f.total_ones() as usize == f.rows() * f.cols() {
        return bad;
    }
    let t = spec.source();
    let zt = ZeroTable::new(f).expect("has zeros");
    let (m, n) = (f.rows(), f.cols());
    for i in 1..=m {
        let row = f.row(i - 1);
        let mut pre = vec![0i64; n + 1];
        for j in 0..n {
            pre[j + 1] = pre[j] + row[j] as i64;
        }
        let dirs: Vec<Direction> = (1..=n)
            .map(|h| check_forward(f, &t, i, h).expect("valid rounding"))
            .collect();
        for h in 1..=n {
            let slack = match dirs[h - 1] {
                Direction::Forward => 0,
                Direction::Backward => 1,
            };
            let mut e = 1;
            while h + 2 * e <= n {
                let ones = pre[h + 2 * e] - pre[h];
                if ones > e as i64 + slack {
                    bad.push(format!("row {i}: {ones} ones after column {h} over width {}", 2 * e));
                }
                e += 1;
            }
        }
        let q = zt.row_zeros(i);
        for d in 1..=q {
            let nd = zt.n(i, d) as i64;
            let slack = match dirs[nd as usize - 1] {
                Direction::Forward => 0,
                Direction::Backward => 2,
            };
            for e in 1..=(q - d) {
                let gap = zt.n(i, d + e) as i64 - nd;
                if gap > 2 * e as i64 + slack {
                    bad.push(format!("row {i}: N({}) - N({}) = {} too large", d + e, d, gap));
                }
            }
        }
    }
    // N_r(d+e) - N_s(d) <= 2e+4 via suffix maxima of N_r(d') - 2d'
    let suffix: Vec<Vec<i64>> = (1..=m)
        .map(|r| {
            let q = zt.row_zeros(r);
            let mut s = vec![i64::MIN; q + 2];
            for d in (1..=q).rev() {
                s[d] = s[d + 1].max(zt.n(r, d) as i64 - 2 * d as i64);
            }
            s
        })
        .collect();
    for r in 1..=m {
        for s in 1..=m {
            let qs = zt.row_zeros(s);
            let qr = zt.row_zeros(r);
            for d in 1..=qs.min(qr) {
                let best = suffix[r - 1][d] + 2 * d as i64;
                if best - zt.n(s, d) as i64 > 4 {
                    bad.push(format!("rows {r},{s}: N_r(d+e) - N_s({d}) exceeds 2e+4"));
                }
            }
        }
    }
    bad
}

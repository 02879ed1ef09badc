//! The ten acceptance criteria. Each prints one `criterion N: PASS|FAIL`
//! line; the test fails if any criterion fails.

use std::io::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gridcube::cubelabel::{
    double_caterpillar, label_from_caterpillar, search_caterpillar, search_caterpillar_by, verify_window, Caterpillar,
};
use gridcube::embed2d::{corollary_battery, theorem_battery, Embedding2D};
use gridcube::grid::GridSpec;
use gridcube::pipeline::{self, address, s_sequence, BlankPlan, Pipeline};
use gridcube::report::{Outcome, Report};
use gridcube::rounding::{
    build_fx, check_balance, check_matrix_rounding, check_zero_bounds, parse_matrices, round_matrix, BinaryMatrix,
    Rational, RoundingSpec,
};
use gridcube::verify::{assemble_hk, check_coordinate_diffs, coordinate_diffs, dilation, labelings_for, brute_force_dilation};

type Outcome2 = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn table(name: &str) -> Vec<BinaryMatrix> {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_matrices(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn spec(d: &[u64]) -> GridSpec {
    GridSpec::new(d).unwrap()
}

fn failures(rep: &Report) -> Vec<String> {
    rep.failures().map(|c| c.key.clone()).collect()
}

fn golden_sequences() -> Outcome2 {
    let s = spec(&[3, 7, 4]);
    ensure(s_sequence(&s, 2).unwrap() == [2, 3, 3, 3], "s_2 of [3,7,4]")?;
    ensure(s.exponents() == [0, 2, 5, 7], "exponents of [3,7,4]")?;
    let s = spec(&[3, 7, 4, 3]);
    ensure(s_sequence(&s, 2).unwrap() == [2, 3, 3, 3, 2, 3, 3, 3, 2, 3, 3, 3], "s_2 of [3,7,4,3]")?;
    ensure(s_sequence(&s, 3).unwrap() == [1, 1, 2], "s_3 of [3,7,4,3]")?;
    let u: Vec<u64> = (2..=4).map(|i| s.level_budget(i).unwrap()).collect();
    ensure(u == [63, 8, 2], format!("budgets {u:?}"))?;
    Ok("sequences, exponents and budgets exact".into())
}

// Row sums, balanced initial column and row sums, the column budget
// identity, and the zero-position bounds.
fn validate_plan(s: &GridSpec, i: usize, f: &BinaryMatrix) -> Result<(), String> {
    let sv = s_sequence(s, i).map_err(|e| e.to_string())?;
    let bal = check_balance(f, &sv);
    ensure(bal.is_empty(), format!("stage {i}: {bal:?}"))?;
    let n = 1u64 << s.block_width(i);
    let mut blanks = 0u64;
    for r in 1..=f.rows() {
        blanks += f.row_ones(r - 1) as u64;
        ensure(s.l_prime(i, r as u64) + blanks == r as u64 * n, format!("stage {i}: budget identity at {r}"))?;
    }
    let rs = RoundingSpec::new(sv, n as usize).map_err(|e| e.to_string())?;
    let zb = check_zero_bounds(f, &rs);
    ensure(zb.is_empty(), format!("stage {i}: {zb:?}"))?;
    BlankPlan::from_matrix(s, i, f.clone()).map_err(|e| e.to_string())?;
    Ok(())
}

fn golden_matrices() -> Outcome2 {
    let a = spec(&[3, 7, 4]);
    let b = spec(&[3, 7, 4, 3]);
    let t1a = table("table1a.txt");
    let t1b = table("table1b.txt");
    let t1c = table("table1c.txt");
    validate_plan(&a, 2, &t1a[0])?;
    validate_plan(&b, 2, &t1b[0])?;
    validate_plan(&b, 3, &t1c[0])?;
    for (s, i) in [(&a, 2), (&b, 2), (&b, 3)] {
        let f = pipeline::build_blank_plan(s, i).map_err(|e| e.to_string())?;
        validate_plan(s, i, f.matrix())?;
    }
    Ok("printed and generated designation matrices validate".into())
}

fn golden_stacks() -> Outcome2 {
    let s = spec(&[3, 7, 4, 3]);
    let p = Pipeline::build_seeded(&s, &table("table1bc.txt")).map_err(|e| e.to_string())?;
    let h = p.stack_heights(3, 12).map_err(|e| e.to_string())?;
    for x in 1..=4 {
        ensure(h[address(&s, &[x, 2])] == 7, format!("stack ({x},2) height {}", h[address(&s, &[x, 2])]))?;
        ensure(h[address(&s, &[x, 5])] == 8, format!("stack ({x},5) height {}", h[address(&s, &[x, 5])]))?;
    }
    let cap = p.stack_capacity(4, 3);
    ensure(cap.len() == 128 && cap.iter().all(|&c| c == 2), "stage 4 stack capacity")?;
    let occupied = p.stack_heights(4, 3).map_err(|e| e.to_string())?;
    let s3 = spec(&[3, 7, 4]);
    let p3 = Pipeline::build(&s3).map_err(|e| e.to_string())?;
    let top = p3.stack_heights(3, 4).map_err(|e| e.to_string())?.into_iter().max().unwrap_or(0);
    ensure(top as u64 == s3.level_budget(3).unwrap(), format!("max height {top}"))?;
    let full = occupied.iter().filter(|&&x| x == 2).count();
    Ok(format!("heights 7/8, 128 stacks of capacity 2 ({full} filled to 2), max height 3"))
}

fn chain_battery() -> Outcome2 {
    let a2s: Vec<u64> = (2..=16).collect();
    for a1 in 3..=64u64 {
        let e = Embedding2D::build(a1, 256).map_err(|e| e.to_string())?;
        let mut rep = theorem_battery(&e);
        rep.extend(corollary_battery(&e, &a2s));
        ensure(rep.passed(), format!("a1 = {a1}: {:?}", failures(&rep)))?;
    }
    Ok("a1 = 3..64, 256 columns".into())
}

fn rounding_contracts() -> Outcome2 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for trial in 0..200 {
        let (m, n) = (rng.gen_range(1..=16), rng.gen_range(1..=16));
        let t: Vec<Vec<Rational>> = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let d = rng.gen_range(1..=12i64);
                        Rational::new(rng.gen_range(0..=d), d)
                    })
                    .collect()
            })
            .collect();
        let f = round_matrix(&t).map_err(|e| e.to_string())?;
        let bad = check_matrix_rounding(&t, &f);
        ensure(bad.is_empty(), format!("matrix {trial}: {bad:?}"))?;
    }
    for trial in 0..200 {
        let n = rng.gen_range(2..=64usize);
        let kappa = rng.gen_range(0..n as u32 / 2);
        let m = rng.gen_range(1..=64usize);
        let x: Vec<u32> = (0..m).map(|_| kappa + rng.gen_range(0..=1u32)).collect();
        let rs = RoundingSpec::new(x.clone(), n).map_err(|e| e.to_string())?;
        let f = build_fx(&rs).map_err(|e| e.to_string())?;
        let mut bad = check_balance(&f, &x);
        bad.extend(check_zero_bounds(&f, &rs));
        ensure(bad.is_empty(), format!("spec {trial}: {bad:?}"))?;
    }
    Ok("200 matrices, 200 designation specs".into())
}

struct Built {
    dims: Vec<u64>,
    p: Pipeline,
}

fn spec_matrix() -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    for k in 2..=5usize {
        for a in [5u64, 6, 7, 8, 9, 12] {
            let d = vec![a; k];
            if d.iter().product::<u64>() <= 1 << 20 {
                out.push(d);
            }
        }
    }
    out.extend([
        vec![5, 12],
        vec![12, 5],
        vec![6, 9, 7],
        vec![9, 5, 12],
        vec![8, 12, 9],
        vec![8, 12, 6, 5],
        vec![7, 7, 8, 9],
        vec![9, 8, 12, 8],
        vec![5, 6, 7, 8, 9],
        vec![12, 9, 8, 7, 6],
    ]);
    out
}

fn pipeline_battery(built: &[Built]) -> Outcome2 {
    for b in built {
        let rep = pipeline::audit(&b.p);
        ensure(rep.passed(), format!("{:?}: {:?}", b.dims, failures(&rep)))?;
        let reported = rep.checks().iter().filter(|c| matches!(c.outcome, Outcome::Reported(_))).count();
        ensure(reported == 0, format!("{:?}: {reported} checks only reported", b.dims))?;
    }
    // side lengths below 5: gated checks downgrade, nothing fails
    for d in [[3u64, 7, 4, 3], [4, 4, 4, 4], [3, 3, 3, 3]] {
        let p = Pipeline::build(&spec(&d)).map_err(|e| e.to_string())?;
        let rep = pipeline::audit(&p);
        ensure(rep.passed(), format!("{d:?}: {:?}", failures(&rep)))?;
    }
    Ok(format!("{} grids", built.len()))
}

fn coordinate_bound(built: &[Built]) -> Outcome2 {
    let mut asserted = 0;
    let mut worst = 0;
    for b in built {
        let s = b.p.spec();
        let emb = assemble_hk(s, b.p.fk(), labelings_for(s, None).unwrap()).map_err(|e| e.to_string())?;
        let diffs = coordinate_diffs(&emb);
        let rep = check_coordinate_diffs(s, &diffs);
        if s.dims().iter().all(|&a| a >= 8) {
            asserted += 1;
            worst = worst.max(*diffs.max.iter().max().unwrap());
            ensure(
                rep.get("coord_diff_bound") == Some(&Outcome::Pass) && rep.get("coord_diff_cases") == Some(&Outcome::Pass),
                format!("{:?}: {:?}", b.dims, diffs.case),
            )?;
        } else {
            ensure(rep.passed(), format!("{:?}", b.dims))?;
        }
    }
    Ok(format!("{asserted} grids asserted, largest difference {worst}"))
}

fn labeling() -> Outcome2 {
    let c41 = search_caterpillar(3, 1).map_err(|e| e.to_string())?;
    let c163 = search_caterpillar(6, 3).map_err(|e| e.to_string())?;
    ensure(c41.spine().len() == 4 && c163.spine().len() == 16, "base spine lengths")?;
    let mut cats: Vec<Caterpillar> = vec![c41.clone(), c163.clone()];
    cats.push(double_caterpillar(&c41).map_err(|e| e.to_string())?);
    let mut c = c163.clone();
    for _ in 0..2 {
        c = double_caterpillar(&c).map_err(|e| e.to_string())?;
        // re-validated from its own cache text
        Caterpillar::from_cache(&c.to_cache()).map_err(|e| e.to_string())?;
        cats.push(c.clone());
    }
    for c in &cats {
        let lab = label_from_caterpillar(c);
        ensure(lab.is_bijection(), format!("Q_{} labeling not bijective", c.t()))?;
        ensure(verify_window(&lab, c.window(), 3).is_none(), format!("Q_{} window {}", c.t(), c.window()))?;
    }
    // tightness: the window cannot grow by one
    let lab = label_from_caterpillar(&c163);
    ensure(verify_window(&lab, 6, 3).is_some(), "window 6 holds in Q6")?;
    let c81 = search_caterpillar_by(4, 1, &|c| verify_window(&label_from_caterpillar(c), 4, 3).is_some())
        .map_err(|e| format!("no window-4 counterexample in Q4: {e}"))?;
    ensure(verify_window(&label_from_caterpillar(&c81), 3, 3).is_none(), "tight Q4 caterpillar loses window 3")?;
    Ok("Q3, Q4, Q6, Q7, Q8; windows 3 and 5 exact".into())
}

fn conditional_3k(built: &[Built]) -> Outcome2 {
    let mut cases: Vec<(Vec<u64>, Option<Vec<u32>>)> = built.iter().map(|b| (b.dims.clone(), None)).collect();
    cases.extend([
        (vec![40, 70], Some(vec![5, 5])),
        (vec![100, 100], None),
        (vec![70, 70, 70], None),
        (vec![12, 12], Some(vec![3, 3])),
        (vec![9, 9, 9], Some(vec![3, 3, 3])),
        (vec![16, 20], Some(vec![3, 3])),
    ]);
    let mut premise = 0;
    for (dims, windows) in cases {
        let s = spec(&dims);
        let p = match built.iter().find(|b| b.dims == dims) {
            Some(b) => b.p.clone(),
            None => Pipeline::build(&s).map_err(|e| e.to_string())?,
        };
        let emb = assemble_hk(&s, p.fk(), labelings_for(&s, windows.as_deref()).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let d = dilation(&emb);
        ensure(d.unsound.is_empty(), format!("{dims:?}: {:?}", d.unsound))?;
        ensure(d.dilation <= d.implied, format!("{dims:?}: dilation {} above implied {}", d.dilation, d.implied))?;
        if d.within_windows {
            premise += 1;
            ensure(d.dilation <= 3 * dims.len() as u32, format!("{dims:?}: dilation {}", d.dilation))?;
        }
    }
    ensure(premise > 0, "no instance met the window premise")?;
    Ok(format!("{premise} instances met the premise"))
}

fn oracle() -> Outcome2 {
    let g23 = spec(&[2, 3]);
    ensure(brute_force_dilation(&g23, 1).unwrap() && !brute_force_dilation(&g23, 0).unwrap(), "[2,3] into Q3")?;
    ensure(brute_force_dilation(&spec(&[3, 3]), 2).unwrap(), "[3,3] into Q4")?;
    Ok("B([2,3]) = 1, B([3,3]) <= 2".into())
}

#[test]
fn acceptance() {
    let t0 = Instant::now();
    let built: Vec<Built> = spec_matrix()
        .into_iter()
        .map(|dims| Built { p: Pipeline::build(&spec(&dims)).unwrap(), dims })
        .collect();
    let build_time = t0.elapsed();

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome2 + '_>)> = vec![
        ("golden sequences", Box::new(golden_sequences)),
        ("golden matrices", Box::new(golden_matrices)),
        ("golden stack heights", Box::new(golden_stacks)),
        ("two-dimensional battery", Box::new(chain_battery)),
        ("rounding contracts", Box::new(rounding_contracts)),
        ("pipeline battery", Box::new(|| pipeline_battery(&built))),
        ("coordinate-difference bound", Box::new(|| coordinate_bound(&built))),
        ("labeling", Box::new(labeling)),
        ("conditional 3k", Box::new(|| conditional_3k(&built))),
        ("brute-force oracle", Box::new(oracle)),
    ];
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "\nacceptance: built {} grids in {:.1?}", built.len(), build_time);
    let mut failed = Vec::new();
    for (n, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = f();
        let el = t.elapsed();
        match &res {
            Ok(detail) => {
                let _ = writeln!(out, "criterion {}: PASS  {name}: {detail} [{el:.1?}]", n + 1);
            }
            Err(why) => {
                let _ = writeln!(out, "criterion {}: FAIL  {name}: {why} [{el:.1?}]", n + 1);
                failed.push(n + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

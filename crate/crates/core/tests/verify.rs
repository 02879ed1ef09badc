use gridcube::cubelabel::gray_label;
use gridcube::grid::{GridSpec, GridVertex};
use gridcube::pipeline::Pipeline;
use gridcube::report::Outcome;
use gridcube::verify::{
    assemble_hk, audit, audit_embedding, brute_force_dilation, case_bound, coordinate_diffs, dilation,
    labelings_for, parse_gridcube, stage_coordinate_diffs, write_gridcube, HypercubeEmbedding,
};
use gridcube::Error;
use proptest::prelude::*;

fn embed(dims: &[u64], windows: Option<&[u32]>) -> (Pipeline, HypercubeEmbedding) {
    let s = GridSpec::new(dims).unwrap();
    let p = Pipeline::build(&s).unwrap();
    let e = assemble_hk(&s, p.fk(), labelings_for(&s, windows).unwrap()).unwrap();
    (p, e)
}

// Dilation by scanning all vertex pairs at coordinate L1 distance 1.
fn dilation_oracle(e: &HypercubeEmbedding) -> u32 {
    let s = e.spec();
    let verts: Vec<Vec<u32>> = (0..s.total()).map(|r| GridVertex::from_rank(s, r).one_based()).collect();
    let mut best = 0;
    for a in 0..verts.len() {
        for b in a + 1..verts.len() {
            let l1: u32 = verts[a].iter().zip(&verts[b]).map(|(x, y)| x.abs_diff(*y)).sum();
            if l1 == 1 {
                best = best.max((e.label(a as u64) ^ e.label(b as u64)).count_ones());
            }
        }
    }
    best
}

#[test]
fn two_by_two_is_a_square() {
    let (_, e) = embed(&[2, 2], Some(&[0, 0]));
    assert_eq!(e.n(), 2);
    assert!(e.is_injective());
    let d = dilation(&e);
    assert_eq!(d.dilation, 1);
    assert_eq!(d.histogram, vec![0, 4, 0]);
}

#[test]
fn small_grid_fills_optimal_cube() {
    let (p, e) = embed(&[3, 7, 4], None);
    assert_eq!(e.n(), 7);
    assert!(e.is_injective());
    for r in 0..84 {
        assert_eq!(e.decode(e.label(r)), p.fk().point(r));
        assert_eq!(e.coords(r), p.fk().point(r));
        assert_eq!(e.bit_string(e.label(r)).len(), 7);
    }
    assert!(audit(&p, &e).passed());
}

#[test]
fn wrong_labelings_rejected() {
    let s = GridSpec::new(&[3, 7, 4]).unwrap();
    let p = Pipeline::build(&s).unwrap();
    let bad = vec![gray_label(2), gray_label(2), gray_label(2)];
    assert!(matches!(assemble_hk(&s, p.fk(), bad), Err(Error::Dimension(_))));
    assert!(labelings_for(&s, Some(&[0, 0])).is_err());
}

#[test]
fn two_dimensional_coordinate_steps() {
    for dims in [[5u64, 9], [12, 7], [40, 70], [9, 33]] {
        let s = GridSpec::new(&dims).unwrap();
        let p = Pipeline::build(&s).unwrap();
        let d = stage_coordinate_diffs(&s, p.fk());
        assert!(d.max[0] <= 3 && d.max[1] <= 1, "{dims:?}: {:?}", d.max);
    }
}

#[test]
fn case_table() {
    assert_eq!(case_bound(1, 1), 3);
    assert_eq!(case_bound(1, 4), 2);
    assert_eq!(case_bound(2, 2), 4);
    assert_eq!(case_bound(2, 3), 8);
    assert_eq!(case_bound(4, 3), 6);
    assert_eq!(case_bound(4, 4), 8);
    assert_eq!(case_bound(3, 5), 10);
}

#[test]
fn brute_force_oracle() {
    let g = |d: &[u64]| GridSpec::new(d).unwrap();
    assert!(brute_force_dilation(&g(&[2, 3]), 1).unwrap());
    assert!(!brute_force_dilation(&g(&[2, 3]), 0).unwrap());
    assert!(brute_force_dilation(&g(&[3, 3]), 2).unwrap());
    assert!(!brute_force_dilation(&g(&[2, 2]), 0).unwrap());
    assert!(brute_force_dilation(&g(&[2, 2, 2]), 1).unwrap());
    assert!(matches!(brute_force_dilation(&g(&[3, 5]), 2), Err(Error::TooLarge { .. })));
}

#[test]
fn file_round_trip() {
    let (_, e) = embed(&[5, 6, 7], None);
    let text = write_gridcube(&e);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("GRIDCUBE 1"));
    assert_eq!(lines.next(), Some("dims 5 6 7"));
    assert_eq!(lines.next(), Some("8 3 5 8"));
    assert_eq!(lines.next(), Some("labelings 0 0 0"));
    assert_eq!(text.lines().count(), 4 + 210);
    let back = parse_gridcube(&text, 1 << 20).unwrap();
    for r in 0..210 {
        assert_eq!(back.label(r), e.label(r));
        assert_eq!(back.coords(r), e.coords(r));
    }
    assert_eq!(write_gridcube(&back), text);
    assert!(audit_embedding(&back).passed());
}

#[test]
fn damaged_files_rejected() {
    let (_, e) = embed(&[3, 4], None);
    let text = write_gridcube(&e);
    let lines: Vec<&str> = text.lines().collect();
    let without_last = lines[..lines.len() - 1].join("\n");
    assert!(matches!(parse_gridcube(&without_last, 100), Err(Error::Parse { .. })));
    let twice = format!("{text}{}\n", lines[4]);
    assert!(matches!(parse_gridcube(&twice, 100), Err(Error::Parse { .. })));
    assert!(parse_gridcube(&text.replace("GRIDCUBE 1", "GRIDCUBE 2"), 100).is_err());
    assert!(parse_gridcube(&text.replace("4 2 4", "4 2 3"), 100).is_err());
    // a duplicated label parses but fails the injectivity check
    let mut dup: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
    let first_bits = lines[4].rsplit(' ').next().unwrap();
    let (head, _) = lines[5].rsplit_once(' ').unwrap();
    dup[5] = format!("{head} {first_bits}");
    let dup = dup.join("\n");
    let emb = parse_gridcube(&dup, 100).unwrap();
    assert!(matches!(audit_embedding(&emb).get("hk_injective"), Some(Outcome::Fail(_))));
}

#[test]
fn window_five_premise_gives_three_per_dimension() {
    let (_, e) = embed(&[40, 70], Some(&[5, 5]));
    let d = dilation(&e);
    assert!(d.within_windows);
    assert!(d.dilation <= 6);
    assert!(d.unsound.is_empty());
    let rep = audit_embedding(&e);
    assert_eq!(rep.get("dilation_at_most_3k"), Some(&Outcome::Pass));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dilation_agrees_with_pair_scan(dims in prop::collection::vec(2u64..7, 2..4)) {
        let (_, e) = embed(&dims, None);
        let d = dilation(&e);
        prop_assert_eq!(d.dilation, dilation_oracle(&e));
        prop_assert!(d.dilation <= d.implied);
        let diffs = coordinate_diffs(&e);
        // Gray blocks: total distance is at most the summed coordinate steps
        prop_assert!(d.dilation <= diffs.max.iter().sum::<u32>());
        let edges: u64 = (0..dims.len())
            .map(|j| (dims[j] - 1) * dims.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &a)| a).product::<u64>())
            .sum();
        prop_assert_eq!(d.histogram.iter().sum::<u64>(), edges);
    }

    #[test]
    fn embeddings_are_injective(dims in prop::collection::vec(2u64..12, 2..5)
        .prop_filter("size", |d| d.iter().product::<u64>() <= 20000)) {
        let (_, e) = embed(&dims, None);
        prop_assert!(e.is_injective());
        let rep = audit_embedding(&e);
        prop_assert!(rep.passed(), "{rep}");
    }
}

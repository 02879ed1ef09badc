use gridcube::embed2d::{build_r, corollary_battery, theorem_battery, Embedding2D};
use gridcube::grid::{ceil_log2, GridSpec, GridVertex};
use proptest::prelude::*;

// R_{ij} from the first column by downward cyclic shift, the first column
// from floor differences of i * (2^e1 - a1) / a1.
fn r_oracle(a1: u64, i: u64, j: u64) -> u64 {
    let s = (1u64 << ceil_log2(a1 as u128)) - a1;
    let row = (i + a1 * j - (j - 1) - 1) % a1 + 1;
    row * s / a1 - (row - 1) * s / a1
}

// Image of chain position (i, p) computed column by column from the row
// counts alone.
fn image_oracle(a1: u64, i: u64, p: u64) -> (u64, u64) {
    let mut seen = 0;
    let mut j = 0;
    loop {
        j += 1;
        let here = 1 + r_oracle(a1, i, j);
        if seen + here >= p {
            let below: u64 = (1..i).map(|r| 1 + r_oracle(a1, r, j)).sum();
            let mut k = p - seen;
            if here == 2 && j % 2 == 0 {
                k = 3 - k;
            }
            return (below + k, j);
        }
        seen += here;
    }
}

#[test]
fn first_column_of_r() {
    let r = build_r(5, 3).unwrap();
    assert_eq!(r.first_column(), &[0, 1, 0, 1, 1]);
    assert!(build_r(5, 4).is_err());
    let r = build_r(8, 3).unwrap();
    assert!(r.first_column().iter().all(|&b| b == 0));
}

#[test]
fn power_of_two_is_row_per_chain() {
    let e = Embedding2D::build(8, 12).unwrap();
    for i in 1..=8u64 {
        for p in 1..=12u64 {
            assert_eq!(e.image(i, p), Some((i as u32, p as u32)));
        }
    }
}

#[test]
fn grid_f2_uses_chains() {
    let spec = GridSpec::new(&[3, 7, 4]).unwrap();
    let e = Embedding2D::for_grid(&spec, 21).unwrap();
    let v = GridVertex::new(&spec, &[1, 1, 1]).unwrap();
    assert_eq!(e.f2(&spec, &v).unwrap(), (1, 1));
    assert!(Embedding2D::for_grid(&spec, 20).is_err());
    let all = e.f2_all(&spec).unwrap();
    let mut sorted = all.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), all.len());
}

#[test]
fn batteries_pass_on_small_chains() {
    for a1 in 3..=20u64 {
        let e = Embedding2D::build(a1, 40).unwrap();
        let rep = theorem_battery(&e);
        assert!(rep.passed(), "a1 = {a1}\n{rep}");
        let rep = corollary_battery(&e, &[2, 3, 5, 8]);
        assert!(rep.passed(), "a1 = {a1}\n{rep}");
    }
}

proptest! {
    #[test]
    fn images_match_closed_form(a1 in 2u64..48, m in 1u64..40) {
        let e = Embedding2D::build(a1, m).unwrap();
        for i in 1..=a1 {
            for p in 1..=e.chain_len(i) {
                let (row, col) = e.image(i, p).unwrap();
                prop_assert_eq!((row as u64, col as u64), image_oracle(a1, i, p));
            }
        }
    }

    #[test]
    fn columns_are_exactly_filled(a1 in 2u64..64, m in 1u64..30) {
        let e = Embedding2D::build(a1, m).unwrap();
        let total: u64 = (1..=a1).map(|i| e.chain_len(i)).sum();
        prop_assert_eq!(total, m * e.height());
        for col in 1..=m {
            for row in 1..=e.height() {
                let (c, p) = e.preimage(row, col);
                prop_assert_eq!(e.image(c as u64, p as u64), Some((row as u32, col as u32)));
            }
        }
    }
}

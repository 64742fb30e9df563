use latop::{
    basis_of, characteristic_of, kernel_of, max_antichain, property_report, realize, reconstruct, Basis,
    BooleanFunctionTable, Interval, ParamPoint, PartialOrderLeq, Subset, Window,
};
use proptest::prelude::*;

/// Enumerates every interval of the window, keeps those inside the kernel,
/// then drops any that sits strictly below another.
fn brute_force_basis(f: &BooleanFunctionTable) -> Vec<(u32, u32)> {
    let n = f.window().len();
    let full = (1u32 << n) - 1;
    let mut inside = Vec::new();
    for upper in 0..=full {
        // lower ranges over subsets of upper
        let mut lower = upper;
        loop {
            let free = upper & !lower;
            let mut all_one = true;
            let mut x = free;
            loop {
                if !f.value(lower | x) {
                    all_one = false;
                    break;
                }
                if x == 0 {
                    break;
                }
                x = (x - 1) & free;
            }
            if all_one {
                inside.push((lower, upper));
            }
            if lower == 0 {
                break;
            }
            lower = (lower - 1) & upper;
        }
    }
    let below = |(a, b): (u32, u32), (c, d): (u32, u32)| c & !a == 0 && b & !d == 0 && (a, b) != (c, d);
    let mut out: Vec<(u32, u32)> = inside
        .iter()
        .copied()
        .filter(|&i| !inside.iter().any(|&j| below(i, j)))
        .collect();
    out.sort_unstable();
    out
}

fn masks(b: &Basis) -> Vec<(u32, u32)> {
    b.intervals().iter().map(Interval::bits).collect()
}

fn line(n: usize) -> Window {
    Window::new((0..n as i32).map(|c| (0, c - n as i32 / 2))).unwrap()
}

fn table_from_bits(w: &Window, bits: u64) -> BooleanFunctionTable {
    BooleanFunctionTable::from_fn(w, 20, |x| bits >> x & 1 == 1).unwrap()
}

#[test]
fn brute_force_counts_intervals() {
    // f ≡ 1 on 2 points: all 3^2 = 9 intervals are inside, one is maximal.
    let w = line(2);
    let one = BooleanFunctionTable::constant(&w, 20, true).unwrap();
    assert_eq!(brute_force_basis(&one), vec![(0, 3)]);
}

#[test]
fn two_point_example_matches_oracle() {
    let w = Window::new([(0, 0), (0, 1)]).unwrap();
    let f = BooleanFunctionTable::from_fn(&w, 20, |x| x & 1 == 1).unwrap();
    assert_eq!(brute_force_basis(&f), vec![(1, 3)]);
    assert_eq!(masks(&basis_of(&f, 16).unwrap()), vec![(1, 3)]);
}

#[test]
fn every_three_point_function_round_trips() {
    let w = line(3);
    for bits in 0u64..256 {
        let f = table_from_bits(&w, bits);
        let b = basis_of(&f, 16).unwrap();
        assert_eq!(reconstruct(&b, 20).unwrap(), f, "function {bits:#010b}");
        assert_eq!(masks(&b), brute_force_basis(&f), "function {bits:#010b}");
    }
}

#[test]
fn basis_is_idempotent_on_canonical_bases() {
    let w = line(4);
    for bits in (0u64..65536).step_by(97) {
        let b = basis_of(&table_from_bits(&w, bits), 16).unwrap();
        let again = basis_of(&reconstruct(&b, 20).unwrap(), 16).unwrap();
        assert_eq!(again, b);
    }
}

#[test]
fn kernel_lies_in_basis_union() {
    let w = line(4);
    for bits in (1u64..65536).step_by(131) {
        let f = table_from_bits(&w, bits);
        let b = basis_of(&f, 16).unwrap();
        for x in kernel_of(&f).members {
            assert!(b.intervals().iter().any(|i| i.contains_mask(x.bits())));
        }
        for i in b.intervals() {
            let (a, u) = i.bits();
            for x in 0..16u32 {
                if x & a == a && x & !u == 0 {
                    assert!(f.value(x));
                }
            }
        }
        for (i, p) in b.intervals().iter().enumerate() {
            for q in &b.intervals()[i + 1..] {
                assert!(!p.leq(q).unwrap() && !q.leq(p).unwrap());
            }
        }
    }
}

#[test]
fn sup_of_erosions_basis_is_increasing() {
    let w = Window::centered_rect(2, 3).unwrap();
    let full = Subset::full(&w);
    let a = Subset::from_offsets(&w, &[(0, -1), (0, 0)]).unwrap();
    let b = Subset::from_offsets(&w, &[(0, 1), (1, 1)]).unwrap();
    let theta = ParamPoint::erosion_sup(&w, &[a.clone(), b.clone()]).unwrap();
    let f = characteristic_of(&realize(&theta), &w, 20).unwrap();
    let basis = basis_of(&f, 16).unwrap();
    assert!(basis.intervals().iter().all(|i| i.upper() == &full));
    assert!(property_report(&basis).is_increasing);
    assert_eq!(basis.len(), 2);
}

prop_compose! {
    fn small_table()(n in 1usize..=6)(n in Just(n), seed in any::<u64>()) -> BooleanFunctionTable {
        let w = line(n);
        BooleanFunctionTable::from_fn(&w, 20, |x| {
            let mut s = (seed ^ u64::from(x)).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            s ^= s >> 31;
            s.wrapping_mul(0xbf58_476d_1ce4_e5b9) >> 63 == 1
        })
        .unwrap()
    }
}

proptest! {
    #[test]
    fn random_tables_round_trip(f in small_table()) {
        let b = basis_of(&f, 16).unwrap();
        prop_assert_eq!(reconstruct(&b, 20).unwrap(), f.clone());
        if f.window().len() <= 5 {
            prop_assert_eq!(masks(&b), brute_force_basis(&f));
        }
    }

    #[test]
    fn max_antichain_laws(raw in proptest::collection::vec((0u32..16, 0u32..16), 0..12)) {
        let w = line(4);
        let items: Vec<Interval> = raw
            .iter()
            .map(|&(a, b)| Interval::from_bits(&w, a & b, b).unwrap())
            .collect();
        let out = max_antichain(&items).unwrap();
        for (i, p) in out.iter().enumerate() {
            for q in &out[i + 1..] {
                prop_assert!(!p.leq(q).unwrap() && !q.leq(p).unwrap());
            }
        }
        prop_assert_eq!(max_antichain(&out).unwrap(), out.clone());
        for it in &items {
            prop_assert!(out.iter().any(|o| it.leq(o).unwrap()));
        }
    }
}

#[test]
fn leq_is_a_partial_order_on_small_windows() {
    let w = line(3);
    let subsets: Vec<Subset> = (0..8).map(|b| Subset::new(&w, b).unwrap()).collect();
    let intervals: Vec<Interval> = (0..8u32)
        .flat_map(|u| (0..8u32).filter(move |l| l & !u == 0).map(move |l| (l, u)))
        .map(|(l, u)| Interval::from_bits(&w, l, u).unwrap())
        .collect();
    fn check<T: PartialOrderLeq + PartialEq + std::fmt::Debug>(xs: &[T]) {
        for a in xs {
            assert!(a.leq(a).unwrap());
            for b in xs {
                if a.leq(b).unwrap() && b.leq(a).unwrap() {
                    assert_eq!(a, b);
                }
                for c in xs {
                    if a.leq(b).unwrap() && b.leq(c).unwrap() {
                        assert!(a.leq(c).unwrap());
                    }
                }
            }
        }
    }
    check(&subsets);
    check(&intervals);
    for s in &subsets {
        for n in latop::hamming_neighbors(s) {
            assert!(latop::hamming_neighbors(&n).contains(s));
        }
    }
}

//! Randomized structural invariants.

use gaom::{blade_wedge, build_btr, comb_rank, comb_unrank, BasisBladeId, SparseMultivector};
use proptest::prelude::*;

fn multivector(max_dim: u32) -> impl Strategy<Value = SparseMultivector> {
    (1..=max_dim).prop_flat_map(|n| {
        proptest::collection::vec((0..(1u32 << n), -1.0..1.0f64), 0..=32).prop_map(move |terms| {
            SparseMultivector::new(n, terms.into_iter().map(|(id, c)| (BasisBladeId(id), c)))
                .expect("ids drawn below 2^n")
        })
    })
}

proptest! {
    #[test]
    fn btr_round_trip_is_identity(mv in multivector(12)) {
        let tree = build_btr(&mv);
        prop_assert_eq!(tree.to_terms().unwrap(), mv);
    }

    #[test]
    fn normalization_is_idempotent(mv in multivector(10)) {
        let again = SparseMultivector::new(mv.dim(), mv.terms().to_vec()).unwrap();
        prop_assert_eq!(again, mv);
    }

    #[test]
    fn rank_unrank_inverse(n in 1..=16u32, id in 0u32..u32::MAX) {
        let id = BasisBladeId(id & ((1 << n) - 1));
        let rank = comb_rank(id);
        prop_assert_eq!(comb_unrank(n, id.grade(), rank).unwrap(), id);
    }

    #[test]
    fn wedge_graded_anticommutativity(n in 1..=8u32, a in 0u32..u32::MAX, b in 0u32..u32::MAX) {
        let mask = (1u32 << n) - 1;
        let (a, b) = (BasisBladeId(a & mask), BasisBladeId(b & mask));
        let (s_ab, id_ab) = blade_wedge(a, b);
        let (s_ba, id_ba) = blade_wedge(b, a);
        prop_assert_eq!(id_ab, id_ba);
        let flip = if (a.grade() * b.grade()) % 2 == 0 { 1 } else { -1 };
        prop_assert_eq!(i32::from(s_ab), flip * i32::from(s_ba));
    }
}

use bisim::{parse_aut, to_aut_string};
use bisim_core::LtsBuilder;
use proptest::prelude::*;

proptest! {
    #[test]
    fn write_then_parse_is_a_fixpoint(
        n in 1usize..12,
        edges in prop::collection::vec((0u64..12, "[a-z ,\"()]{0,6}", 0u64..12), 0..30),
        initial in 0u64..12,
    ) {
        let mut b = LtsBuilder::new(n);
        for (s, label, t) in &edges {
            b.add(s % n as u64, label, t % n as u64).unwrap();
        }
        b.set_initial(initial % n as u64).unwrap();
        let lts = b.build();

        let text = to_aut_string(&lts);
        let parsed = parse_aut(&text).unwrap();
        prop_assert_eq!(to_aut_string(&parsed), text);
        prop_assert_eq!(parsed.num_states(), lts.num_states());
        prop_assert_eq!(parsed.initial(), lts.initial());
        let mut a: Vec<_> = lts.transitions().iter().map(|t| (t.src, lts.label_text(t.label), t.dst)).collect();
        let mut b: Vec<_> = parsed.transitions().iter().map(|t| (t.src, parsed.label_text(t.label), t.dst)).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }
}

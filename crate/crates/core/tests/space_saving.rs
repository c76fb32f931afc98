use std::collections::HashMap;

use hhq_core::heavy_hitters::{SpaceSaving, Touch};
use hhq_core::ItemId;
use proptest::prelude::*;

/// Skewed ids: small ids are far more common.
fn skewed_stream() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec((0u64..1000, 0u32..4), 1..4000)
        .prop_map(|v| v.into_iter().map(|(x, shift)| x >> (shift * 3)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn space_saving_guarantees(stream in skewed_stream(), capacity in prop::sample::select(vec![1usize, 4, 16, 64])) {
        let mut ss = SpaceSaving::<u64>::new(capacity);
        let mut freq: HashMap<u64, u64> = HashMap::new();
        // Inherited count at adoption, tracked through the payload.
        for &id in &stream {
            *freq.entry(id).or_default() += 1;
            let (touch, entry) = ss.touch(ItemId(id), || 0);
            match touch {
                Touch::Existing => {}
                Touch::Fresh => prop_assert_eq!(entry.count(), 1),
                Touch::Evicted { old_id } => {
                    prop_assert_ne!(old_id, ItemId(id));
                    entry.payload = entry.count() - 1;
                }
            }
            if matches!(touch, Touch::Fresh) {
                entry.payload = 0;
            }
            prop_assert_eq!(ss.iter().map(|e| e.count()).sum::<u64>(), ss.total());
        }
        let n = stream.len() as u64;
        prop_assert_eq!(ss.total(), n);
        prop_assert!(ss.len() <= capacity);
        if ss.is_full() {
            prop_assert!(ss.min_count() * capacity as u64 <= n);
        }
        for (&id, &f) in &freq {
            match ss.get(ItemId(id)) {
                Some(e) => {
                    prop_assert!(e.count() >= f);
                    prop_assert!(e.count() - f <= e.payload);
                    prop_assert!((e.count() - f) * capacity as u64 <= n);
                }
                None => prop_assert!(f * capacity as u64 <= n, "id {} with f={} unmonitored", id, f),
            }
        }
    }
}

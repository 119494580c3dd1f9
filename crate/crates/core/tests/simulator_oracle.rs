mod common;

use cachedse::cache_sim::{simulate, CacheConfig, Prefetch, Replacement, WritePolicy};
use cachedse::trace::{AccessKind, AccessRecord};
use common::{rec, ref_simulate};
use proptest::prelude::*;

fn icfg(total: u64, line: u64, ways: u64, r: Replacement, p: Prefetch) -> CacheConfig {
    CacheConfig {
        total_size: total,
        line_size: line,
        ways,
        replacement: r,
        prefetch: p,
        write_policy: None,
    }
}

fn dcfg(
    total: u64,
    line: u64,
    ways: u64,
    r: Replacement,
    p: Prefetch,
    w: WritePolicy,
) -> CacheConfig {
    CacheConfig {
        write_policy: Some(w),
        ..icfg(total, line, ways, r, p)
    }
}

fn arb_pair() -> impl Strategy<Value = (CacheConfig, CacheConfig)> {
    let one = || {
        (
            0u32..4,
            0u32..5,
            0u32..5,
            prop::sample::select(Replacement::ALL.to_vec()),
            prop::sample::select(Prefetch::ALL.to_vec()),
        )
            .prop_map(|(l, w, extra, r, p)| {
                let line = 8u64 << l;
                let ways = 1u64 << w;
                icfg((line * ways) << extra, line, ways, r, p)
            })
    };
    (
        one(),
        one(),
        prop::sample::select(WritePolicy::ALL.to_vec()),
    )
        .prop_map(|(i, d, w)| {
            (
                i,
                CacheConfig {
                    write_policy: Some(w),
                    ..d
                },
            )
        })
}

fn arb_trace() -> impl Strategy<Value = Vec<AccessRecord>> {
    prop::collection::vec(
        (0u8..3, prop_oneof![0u64..2048, (u64::MAX - 256)..=u64::MAX]),
        0..400,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|(k, a)| rec(AccessKind::from_label(k).unwrap(), a))
            .collect()
    })
}

proptest! {
    #[test]
    fn matches_reference((i, d) in arb_pair(), trace in arb_trace(), seed in any::<u64>()) {
        prop_assert_eq!(simulate(&trace, &i, &d, seed).unwrap(), ref_simulate(&trace, &i, &d, seed));
    }

    #[test]
    fn lru_more_ways_same_sets_never_misses_more(
        addrs in prop::collection::vec(0u64..1024, 0..200),
        sets_log in 0u32..4,
        ways_log in 0u32..5,
    ) {
        let trace: Vec<_> = addrs.iter().map(|&a| rec(AccessKind::DataRead, a)).collect();
        let sets = 1u64 << sets_log;
        let small = 1u64 << ways_log;
        let misses = |ways: u64| {
            let d = dcfg(8 * sets * ways, 8, ways, Replacement::Lru, Prefetch::OnDemand, WritePolicy::CopyBack);
            ref_simulate(&trace, &icfg(64, 8, 1, Replacement::Lru, Prefetch::OnDemand), &d, 0).dcache.demand_misses
        };
        prop_assert!(misses(small * 2) <= misses(small));
    }

    #[test]
    fn fully_associative_lru_is_monotone_in_size(
        addrs in prop::collection::vec(0u64..1024, 0..200),
        ways_log in 0u32..6,
    ) {
        let trace: Vec<_> = addrs.iter().map(|&a| rec(AccessKind::DataRead, a)).collect();
        let misses = |ways: u64| {
            let d = dcfg(8 * ways, 8, ways, Replacement::Lru, Prefetch::OnDemand, WritePolicy::CopyBack);
            simulate(&trace, &icfg(64, 8, 1, Replacement::Lru, Prefetch::OnDemand), &d, 0).unwrap().dcache.demand_misses
        };
        let w = 1u64 << ways_log;
        prop_assert!(misses(w * 2) <= misses(w));
    }
}

/// At a fixed total size, trading sets for ways can add misses.
#[test]
fn more_ways_at_fixed_size_can_miss_more() {
    let trace: Vec<_> = [8u64, 0, 16, 8]
        .iter()
        .map(|&a| rec(AccessKind::DataRead, a))
        .collect();
    let i = icfg(64, 8, 1, Replacement::Lru, Prefetch::OnDemand);
    let direct = dcfg(
        16,
        8,
        1,
        Replacement::Lru,
        Prefetch::OnDemand,
        WritePolicy::CopyBack,
    );
    let two_way = dcfg(
        16,
        8,
        2,
        Replacement::Lru,
        Prefetch::OnDemand,
        WritePolicy::CopyBack,
    );
    let a = simulate(&trace, &i, &direct, 0)
        .unwrap()
        .dcache
        .demand_misses;
    let b = simulate(&trace, &i, &two_way, 0)
        .unwrap()
        .dcache
        .demand_misses;
    assert_eq!((a, b), (3, 4));
    assert_eq!(ref_simulate(&trace, &i, &direct, 0).dcache.demand_misses, 3);
    assert_eq!(
        ref_simulate(&trace, &i, &two_way, 0).dcache.demand_misses,
        4
    );
}

#[test]
fn reference_agrees_on_hand_examples() {
    let i = icfg(64, 8, 1, Replacement::Lru, Prefetch::OnDemand);
    let reads: Vec<_> = [0x00u64, 0x04, 0x10, 0x00]
        .iter()
        .map(|&a| rec(AccessKind::DataRead, a))
        .collect();
    let on_demand = dcfg(
        16,
        8,
        1,
        Replacement::Lru,
        Prefetch::OnDemand,
        WritePolicy::CopyBack,
    );
    let r = ref_simulate(&reads, &i, &on_demand, 0).dcache;
    assert_eq!((r.accesses, r.demand_misses, r.prefetch_fetches), (4, 3, 0));
    let always = CacheConfig {
        prefetch: Prefetch::Always,
        ..on_demand
    };
    let r = ref_simulate(&reads, &i, &always, 0).dcache;
    assert_eq!((r.accesses, r.demand_misses, r.prefetch_fetches), (4, 3, 3));
    assert_eq!(simulate(&reads, &i, &always, 0).unwrap().dcache, r);
}

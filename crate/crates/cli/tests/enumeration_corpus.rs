//! The shipped enumeration corpus agrees with the engine's enumerator, and
//! the dynamical-system propositions hold on every entry.

use std::collections::BTreeSet;

use serde::Deserialize;
use sectorlab_core::dynsys::{self, AbelianDynamicalSystem, CovariantSystem};
use sectorlab_core::groups::FiniteAbelianGroup;
use sectorlab_core::Config;

#[derive(Deserialize)]
struct Entry {
    group: Vec<usize>,
    atoms: usize,
    generators: Vec<Vec<usize>>,
}

fn corpus() -> Vec<Entry> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/enumeration.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn systems() -> Vec<AbelianDynamicalSystem> {
    corpus()
        .iter()
        .map(|e| {
            let g = FiniteAbelianGroup::new(e.group.clone()).unwrap();
            AbelianDynamicalSystem::from_generators(&g, e.atoms, &e.generators).unwrap()
        })
        .collect()
}

#[test]
fn corpus_matches_the_engine_enumerator() {
    let entries = corpus();
    for orders in [vec![2], vec![3], vec![4], vec![2, 2]] {
        let g = FiniteAbelianGroup::new(orders.clone()).unwrap();
        for atoms in 1..=4 {
            let shipped: BTreeSet<Vec<Vec<usize>>> = entries
                .iter()
                .filter(|e| e.group == orders && e.atoms == atoms)
                .map(|e| e.generators.clone())
                .collect();
            let engine: BTreeSet<Vec<Vec<usize>>> =
                dynsys::enumerate_actions(&g, atoms).iter().map(|s| s.generator_perms()).collect();
            assert_eq!(shipped, engine, "group {orders:?} on {atoms} atoms");
        }
    }
    assert_eq!(entries.len(), 121);
}

#[test]
fn proposition2_holds_on_every_corpus_system() {
    let cfg = Config::default();
    let mut failures = Vec::new();
    for sys in systems() {
        let r = dynsys::proposition2_check(&sys, &cfg).unwrap();
        if !r.passed() {
            failures.push(sys.generator_perms());
        }
        if dynsys::is_ergodic(&sys) {
            assert_eq!(dynsys::is_free(&sys), dynsys::is_faithful(&sys));
        }
    }
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
fn proposition3_holds_on_centrally_free_corpus_systems() {
    let cfg = Config::default();
    let mut checked = 0;
    for sys in systems().into_iter().filter(dynsys::is_free) {
        let r = dynsys::proposition3_check(&CovariantSystem::abelian(sys.clone()), &cfg).unwrap();
        assert!(r.covered_by_hypothesis && r.passed(), "{:?}", sys.generator_perms());
        checked += 1;
    }
    assert!(checked > 0);
}

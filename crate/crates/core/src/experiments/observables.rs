//! Observables of a reactor snapshot.

use crate::chemistry::{Chemistry, Reaction, Species};
use crate::engine::{propensity, Entity, KineticParams, ReactorState, Transition};

/// Bricks in every species and complex, buffered species included.
pub fn total_mass(state: &ReactorState) -> u64 {
    state.counts.iter().map(|(e, &n)| n * e.len() as u64).sum()
}

/// Longest species with a positive count; complexes do not count.
pub fn max_species_length(state: &ReactorState) -> usize {
    state
        .counts
        .iter()
        .filter_map(|(e, &n)| match e {
            Entity::Species(s) if n > 0 => Some(s.len()),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// Number of entity kinds with a positive count.
pub fn richness(state: &ReactorState) -> usize {
    state.counts.values().filter(|&&n| n > 0).count()
}

/// Catalysts stuck behind the membrane that the system no longer makes:
/// present, longer than `l_perm`, catalyzing at least one stored reaction,
/// and with no production channel (release of it as a product, cleavage
/// yielding it, or influx) at positive propensity in `state`.
pub fn trapped_catalyst_pool(
    state: &ReactorState,
    chem: &Chemistry,
    kinetics: &KineticParams,
    l_perm: usize,
) -> Vec<Species> {
    let mut pool = Vec::new();
    for (e, &n) in &state.counts {
        let Entity::Species(s) = e else { continue };
        if n == 0 || s.len() <= l_perm {
            continue;
        }
        let Some(id) = chem.id_of(s) else { continue };
        if !chem.catalyses().iter().any(|c| c.catalyst == id) {
            continue;
        }
        if !is_produced(state, chem, kinetics, s) {
            pool.push(s.clone());
        }
    }
    pool
}

fn is_produced(state: &ReactorState, chem: &Chemistry, k: &KineticParams, s: &Species) -> bool {
    let influx = Transition::Influx { species: s.clone() };
    if propensity(state, &influx, k) > 0.0 {
        return true;
    }
    chem.catalyses().iter().any(|c| {
        let catalyst = chem.species(c.catalyst).clone();
        let tr = match c.reaction {
            Reaction::Condensation {
                first,
                second,
                product,
            } if chem.species(product) == s => Transition::ProductRelease {
                catalyst,
                first: chem.species(first).clone(),
                second: chem.species(second).clone(),
            },
            Reaction::Cleavage {
                substrate,
                left,
                right,
            } if chem.species(left) == s || chem.species(right) == s => Transition::Cleavage {
                catalyst,
                substrate: chem.species(substrate).clone(),
                cut: chem.len_of(left),
            },
            _ => return false,
        };
        propensity(state, &tr, k) > 0.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemistry::{ChemistryParams, ReactionTemplate};
    use crate::engine::ReactorConfig;
    use std::collections::BTreeMap;

    fn state(counts: &[(&str, u64)]) -> ReactorState {
        let mut st = ReactorState::new(ReactorConfig::protocell(3, 0.1, BTreeMap::new()));
        for (name, n) in counts {
            st.set(name.parse().unwrap(), *n);
        }
        st
    }

    #[test]
    fn mass_and_length() {
        assert_eq!(total_mass(&state(&[("A", 2), ("AB", 3)])), 8);
        assert_eq!(total_mass(&state(&[("BB:A", 1)])), 3);
        assert_eq!(total_mass(&state(&[])), 0);
        assert_eq!(max_species_length(&state(&[("A", 1), ("BAB", 2)])), 3);
        assert_eq!(max_species_length(&state(&[("BBBB:AAAA", 2)])), 0);
        assert_eq!(max_species_length(&state(&[])), 0);
        assert_eq!(richness(&state(&[("A", 1), ("BB:A", 2)])), 2);
    }

    /// A chemistry holding exactly the given catalyses; p = 1 makes every
    /// pair a valid draw.
    fn chem_with(registry: &[&str], catalyses: &[(ReactionTemplate, &str)]) -> Chemistry {
        let params = ChemistryParams::new(1.0, 0);
        let registry: Vec<Species> = registry.iter().map(|s| Species::new(*s)).collect();
        let cats: Vec<(ReactionTemplate, Species)> = catalyses
            .iter()
            .map(|(t, c)| (t.clone(), Species::new(*c)))
            .collect();
        Chemistry::from_parts(params, &registry, &cats).unwrap()
    }

    #[test]
    fn trapped_pool_membership() {
        let k = KineticParams::default();
        let long = Species::new("AABBA");
        let make = ReactionTemplate::condensation(&Species::new("AAB"), &Species::new("BA"));
        let cut = ReactionTemplate::cleavage(&Species::new("AB"), 1);
        let chem = chem_with(
            &["AABBA", "AAB", "BA", "AB", "BB", "AA"],
            &[(make, "BB"), (cut, "AABBA"), (cut_of("BB"), "AA")],
        );
        // Catalyst of a cleavage; its producing reaction lacks substrates.
        let st = state(&[("AABBA", 2), ("BB", 4)]);
        assert_eq!(trapped_catalyst_pool(&st, &chem, &k, 3), vec![long.clone()]);
        // Producible: complex BB:AAB and BA are present.
        let st = state(&[("AABBA", 2), ("BB:AAB", 1), ("BA", 1)]);
        assert!(trapped_catalyst_pool(&st, &chem, &k, 3).is_empty());
        // Short catalyst: not trapped.
        let st = state(&[("AA", 2)]);
        assert!(trapped_catalyst_pool(&st, &chem, &k, 3).is_empty());
        assert_eq!(
            trapped_catalyst_pool(&st, &chem, &k, 1),
            vec![Species::new("AA")]
        );
        // Long but catalyzes nothing.
        let st = state(&[("AAB", 5)]);
        assert!(trapped_catalyst_pool(&st, &chem, &k, 2).is_empty());
    }

    fn cut_of(s: &str) -> ReactionTemplate {
        ReactionTemplate::cleavage(&Species::new(s), 1)
    }
}

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::config::{KineticParams, ReactorConfig};
use crate::chemistry::{Chemistry, Complex, Species};
use crate::error::{Error, Result};

/// Anything that can be counted in the reactor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entity {
    Species(Species),
    Complex(Complex),
}

impl Entity {
    /// Brick count; complexes count both partners.
    pub fn len(&self) -> usize {
        match self {
            Entity::Species(s) => s.len(),
            Entity::Complex(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn species(s: &str) -> Self {
        Entity::Species(Species::new(s))
    }

    pub fn complex(catalyst: &str, bound: &str) -> Self {
        Entity::Complex(Complex {
            catalyst: Species::new(catalyst),
            bound: Species::new(bound),
        })
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Species(s) => s.fmt(f),
            Entity::Complex(c) => c.fmt(f),
        }
    }
}

impl FromStr for Entity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let nonempty = |part: &str| {
            if part.is_empty() {
                Err(Error::Input(format!("malformed entity name {s:?}")))
            } else {
                Ok(Species::new(part))
            }
        };
        match s.split_once(':') {
            None => Ok(Entity::Species(nonempty(s)?)),
            Some((cat, bound)) => Ok(Entity::Complex(Complex {
                catalyst: nonempty(cat)?,
                bound: nonempty(bound)?,
            })),
        }
    }
}

impl Serialize for Entity {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Entity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Snapshot of a reactor: time, positive entity counts, and the transport
/// regime. Absent entities have count zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactorState {
    pub t: f64,
    pub counts: BTreeMap<Entity, u64>,
    pub reactor: ReactorConfig,
}

impl ReactorState {
    pub fn new(reactor: ReactorConfig) -> Self {
        ReactorState {
            t: 0.0,
            counts: BTreeMap::new(),
            reactor,
        }
    }

    pub fn count(&self, e: &Entity) -> u64 {
        self.counts.get(e).copied().unwrap_or(0)
    }

    pub fn species_count(&self, s: &Species) -> u64 {
        self.count(&Entity::Species(s.clone()))
    }

    /// Sets a count, dropping the entry when it reaches zero.
    pub fn set(&mut self, e: Entity, n: u64) {
        if n == 0 {
            self.counts.remove(&e);
        } else {
            self.counts.insert(e, n);
        }
    }

    fn change(&mut self, e: &Entity, delta: i64) -> Result<()> {
        if let Entity::Species(s) = e {
            if self.reactor.is_buffered(s) {
                return Ok(());
            }
        }
        let n = self.count(e);
        let updated = n.checked_add_signed(delta).ok_or_else(|| {
            Error::Consistency(format!("count of {e} would drop below zero ({n}{delta:+})"))
        })?;
        self.set(e.clone(), updated);
        Ok(())
    }

    /// Forces buffered species to their configured levels.
    pub fn clamp_buffered(&mut self) {
        let levels: Vec<(Species, u64)> = self
            .reactor
            .buffered()
            .map(|(s, n)| (s.clone(), n))
            .collect();
        for (s, n) in levels {
            self.set(Entity::Species(s), n);
        }
    }
}

/// One elementary stochastic transition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transition {
    ComplexFormation {
        catalyst: Species,
        first: Species,
    },
    ProductRelease {
        catalyst: Species,
        first: Species,
        second: Species,
    },
    ComplexDissociation {
        catalyst: Species,
        first: Species,
    },
    Cleavage {
        catalyst: Species,
        substrate: Species,
        cut: usize,
    },
    Influx {
        species: Species,
    },
    Efflux {
        entity: Entity,
    },
}

/// Event kinds; each corresponds to one family of propensity channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ComplexFormation,
    ProductRelease,
    ComplexDissociation,
    Cleavage,
    Influx,
    Efflux,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::ComplexFormation,
        EventKind::ProductRelease,
        EventKind::ComplexDissociation,
        EventKind::Cleavage,
        EventKind::Influx,
        EventKind::Efflux,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl Transition {
    pub fn kind(&self) -> EventKind {
        match self {
            Transition::ComplexFormation { .. } => EventKind::ComplexFormation,
            Transition::ProductRelease { .. } => EventKind::ProductRelease,
            Transition::ComplexDissociation { .. } => EventKind::ComplexDissociation,
            Transition::Cleavage { .. } => EventKind::Cleavage,
            Transition::Influx { .. } => EventKind::Influx,
            Transition::Efflux { .. } => EventKind::Efflux,
        }
    }

    /// Count changes as (entity, delta), before buffering is applied.
    pub fn stoichiometry(&self) -> Vec<(Entity, i64)> {
        let sp = |s: &Species| Entity::Species(s.clone());
        let cx = |c: &Species, b: &Species| {
            Entity::Complex(Complex {
                catalyst: c.clone(),
                bound: b.clone(),
            })
        };
        match self {
            Transition::ComplexFormation { catalyst, first } => {
                vec![
                    (sp(catalyst), -1),
                    (sp(first), -1),
                    (cx(catalyst, first), 1),
                ]
            }
            Transition::ProductRelease {
                catalyst,
                first,
                second,
            } => vec![
                (cx(catalyst, first), -1),
                (sp(second), -1),
                (Entity::Species(first.concat(second)), 1),
                (sp(catalyst), 1),
            ],
            Transition::ComplexDissociation { catalyst, first } => {
                vec![(cx(catalyst, first), -1), (sp(catalyst), 1), (sp(first), 1)]
            }
            Transition::Cleavage { substrate, cut, .. } => {
                let (l, r) = substrate.split_at(*cut);
                vec![(sp(substrate), -1), (sp(&l), 1), (sp(&r), 1)]
            }
            Transition::Influx { species } => vec![(sp(species), 1)],
            Transition::Efflux { entity } => vec![(entity.clone(), -1)],
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transition::ComplexFormation { catalyst, first } => {
                write!(f, "{catalyst} + {first} -> {catalyst}:{first}")
            }
            Transition::ProductRelease {
                catalyst,
                first,
                second,
            } => write!(
                f,
                "{catalyst}:{first} + {second} -> {} + {catalyst}",
                first.concat(second)
            ),
            Transition::ComplexDissociation { catalyst, first } => {
                write!(f, "{catalyst}:{first} -> {catalyst} + {first}")
            }
            Transition::Cleavage {
                catalyst,
                substrate,
                cut,
            } => {
                let (l, r) = substrate.split_at(*cut);
                write!(f, "{substrate} -> {l} + {r} [{catalyst}]")
            }
            Transition::Influx { species } => write!(f, "-> {species}"),
            Transition::Efflux { entity } => write!(f, "{entity} ->"),
        }
    }
}

/// Mass-action propensity for a bimolecular step. When both reactants are
/// the same species, only distinct ordered pairs of molecules react.
#[inline]
pub fn mass_action(rate: f64, n_a: u64, n_b: u64, same_species: bool) -> f64 {
    if same_species {
        rate * n_a as f64 * n_a.saturating_sub(1) as f64
    } else {
        rate * n_a as f64 * n_b as f64
    }
}

/// Propensity of a transition in the given state. Transport transitions
/// follow the reactor's rules; disallowed ones have propensity zero.
pub fn propensity(state: &ReactorState, transition: &Transition, k: &KineticParams) -> f64 {
    let n = |s: &Species| state.species_count(s);
    let nx = |c: &Species, b: &Species| {
        state.count(&Entity::Complex(Complex {
            catalyst: c.clone(),
            bound: b.clone(),
        }))
    };
    match transition {
        Transition::ComplexFormation { catalyst, first } => {
            mass_action(k.k_complex, n(catalyst), n(first), catalyst == first)
        }
        Transition::ProductRelease {
            catalyst,
            first,
            second,
        } => k.k_release * nx(catalyst, first) as f64 * n(second) as f64,
        Transition::ComplexDissociation { catalyst, first } => {
            k.k_diss * nx(catalyst, first) as f64
        }
        Transition::Cleavage {
            catalyst,
            substrate,
            ..
        } => mass_action(k.k_cleave, n(catalyst), n(substrate), catalyst == substrate),
        Transition::Influx { species } => state.reactor.influx_propensity(species).unwrap_or(0.0),
        Transition::Efflux { entity } => match entity {
            Entity::Species(s) if state.reactor.is_buffered(s) => 0.0,
            _ => state
                .reactor
                .efflux_rate(entity.len())
                .map_or(0.0, |rate| rate * state.count(entity) as f64),
        },
    }
}

/// Propensity of a catalyzed reaction step. Alias of [`propensity`] kept for
/// call sites that only deal with reaction channels.
pub fn reaction_propensity(state: &ReactorState, step: &Transition, k: &KineticParams) -> f64 {
    propensity(state, step, k)
}

/// Transport channels of a state: influx channels (only when influx is
/// stochastic) followed by an efflux channel for every present entity that
/// can cross the boundary. Buffered species have no transport channels.
pub fn transport_propensities(state: &ReactorState) -> Vec<(Transition, f64)> {
    let reactor = &state.reactor;
    let mut out = Vec::new();
    for s in reactor.supply().keys() {
        if let Some(a) = reactor.influx_propensity(s) {
            out.push((Transition::Influx { species: s.clone() }, a));
        }
    }
    for (e, &n) in &state.counts {
        if let Entity::Species(s) = e {
            if reactor.is_buffered(s) {
                continue;
            }
        }
        if let Some(rate) = reactor.efflux_rate(e.len()) {
            if n > 0 {
                out.push((Transition::Efflux { entity: e.clone() }, rate * n as f64));
            }
        }
    }
    out
}

/// Applies a transition to a snapshot. Returns species whose count rose from
/// zero and which the chemistry has not yet registered.
pub fn apply_event(
    state: &mut ReactorState,
    transition: &Transition,
    chem: &Chemistry,
) -> Result<Vec<Species>> {
    let mut changes: BTreeMap<Entity, i64> = BTreeMap::new();
    for (e, delta) in transition.stoichiometry() {
        *changes.entry(e).or_default() += delta;
    }
    for (e, delta) in &changes {
        let buffered = matches!(e, Entity::Species(s) if state.reactor.is_buffered(s));
        if *delta < 0 && !buffered && state.count(e) < delta.unsigned_abs() {
            return Err(Error::Consistency(format!(
                "{transition} applied with {e} at count {}",
                state.count(e)
            )));
        }
    }
    let mut created = Vec::new();
    for (e, delta) in &changes {
        let before = state.count(e);
        state.change(e, *delta)?;
        if let Entity::Species(s) = e {
            let registered = chem.id_of(s).is_some_and(|id| chem.is_registered(id));
            if before == 0 && state.count(e) > 0 && !registered {
                created.push(s.clone());
            }
        }
    }
    state.clamp_buffered();
    Ok(created)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemistry::{Chemistry, ChemistryParams};

    fn sp(s: &str) -> Species {
        Species::new(s)
    }

    fn state(reactor: ReactorConfig, counts: &[(&str, u64)]) -> ReactorState {
        let mut st = ReactorState::new(reactor);
        for (name, n) in counts {
            st.set(name.parse().unwrap(), *n);
        }
        st
    }

    fn unit_k() -> KineticParams {
        KineticParams {
            k_complex: 1.0,
            k_release: 1.0,
            k_cleave: 1.0,
            k_diss: 1.0,
        }
    }

    #[test]
    fn cleavage_propensities() {
        let st = state(ReactorConfig::closed(), &[("AB", 3), ("BB", 2)]);
        let t = Transition::Cleavage {
            catalyst: sp("BB"),
            substrate: sp("AB"),
            cut: 1,
        };
        assert_eq!(reaction_propensity(&st, &t, &unit_k()), 6.0);

        let own = Transition::Cleavage {
            catalyst: sp("AB"),
            substrate: sp("AB"),
            cut: 1,
        };
        // Distinct ordered pairs among 3 molecules: 3 * 2.
        let pairs = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .filter(|(i, j)| i != j);
        assert_eq!(
            reaction_propensity(&st, &own, &unit_k()),
            pairs.count() as f64
        );

        let absent = Transition::Cleavage {
            catalyst: sp("AA"),
            substrate: sp("AB"),
            cut: 1,
        };
        assert_eq!(reaction_propensity(&st, &absent, &unit_k()), 0.0);
    }

    #[test]
    fn release_has_no_self_correction() {
        let st = state(ReactorConfig::closed(), &[("B", 4), ("B:B", 2)]);
        let t = Transition::ProductRelease {
            catalyst: sp("B"),
            first: sp("B"),
            second: sp("B"),
        };
        assert_eq!(propensity(&st, &t, &unit_k()), 8.0);
    }

    #[test]
    fn protocell_transport_rules() {
        let reactor = ReactorConfig::protocell(3, 0.5, BTreeMap::new());
        let st = state(reactor.clone(), &[("AABBA", 7)]);
        assert!(transport_propensities(&st).is_empty());
        let st = state(reactor, &[("AB", 4)]);
        assert_eq!(
            transport_propensities(&st),
            vec![(
                Transition::Efflux {
                    entity: Entity::species("AB")
                },
                2.0
            )]
        );
    }

    #[test]
    fn cstr_drains_everything() {
        let reactor = ReactorConfig::cstr(1.0, BTreeMap::new());
        let st = state(reactor, &[("A", 2), ("AB", 3), ("B:A", 1)]);
        let mut rates: Vec<f64> = transport_propensities(&st)
            .into_iter()
            .map(|(_, a)| a)
            .collect();
        rates.sort_by(f64::total_cmp);
        assert_eq!(rates, vec![1.0, 2.0, 3.0]);
    }

    fn chem() -> Chemistry {
        Chemistry::generate(ChemistryParams::new(0.5, 3)).unwrap()
    }

    #[test]
    fn cleavage_conserves_bricks() {
        let mut st = state(ReactorConfig::closed(), &[("AB", 1), ("BB", 1)]);
        let t = Transition::Cleavage {
            catalyst: sp("BB"),
            substrate: sp("AB"),
            cut: 1,
        };
        apply_event(&mut st, &t, &chem()).unwrap();
        assert_eq!(st.species_count(&sp("AB")), 0);
        assert_eq!(st.species_count(&sp("A")), 1);
        assert_eq!(st.species_count(&sp("B")), 1);
        assert_eq!(st.species_count(&sp("BB")), 1);
    }

    #[test]
    fn condensation_cycle_restores_catalyst() {
        let mut st = state(ReactorConfig::closed(), &[("BB", 2), ("A", 1), ("B", 1)]);
        let c = chem();
        let form = Transition::ComplexFormation {
            catalyst: sp("BB"),
            first: sp("A"),
        };
        apply_event(&mut st, &form, &c).unwrap();
        assert_eq!(st.species_count(&sp("BB")), 1);
        assert_eq!(st.species_count(&sp("A")), 0);
        assert_eq!(st.count(&Entity::complex("BB", "A")), 1);

        let release = Transition::ProductRelease {
            catalyst: sp("BB"),
            first: sp("A"),
            second: sp("B"),
        };
        apply_event(&mut st, &release, &c).unwrap();
        assert_eq!(st.species_count(&sp("AB")), 1);
        assert_eq!(st.species_count(&sp("BB")), 2);
        assert_eq!(st.species_count(&sp("B")), 0);
        assert_eq!(st.count(&Entity::complex("BB", "A")), 0);
    }

    #[test]
    fn reports_unregistered_products() {
        let mut st = state(ReactorConfig::closed(), &[("AB:AB", 1), ("BA", 1)]);
        let t = Transition::ProductRelease {
            catalyst: sp("AB"),
            first: sp("AB"),
            second: sp("BA"),
        };
        let created = apply_event(&mut st, &t, &chem()).unwrap();
        // ABBA is new; AB (the freed catalyst) is already registered.
        assert_eq!(created, vec![sp("ABBA")]);
    }

    #[test]
    fn zero_count_is_fatal() {
        let mut st = state(ReactorConfig::closed(), &[("BB", 1)]);
        let t = Transition::Cleavage {
            catalyst: sp("BB"),
            substrate: sp("AB"),
            cut: 1,
        };
        assert!(matches!(
            apply_event(&mut st, &t, &chem()),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn buffered_species_stay_clamped() {
        let feed = [(sp("A"), 5)].into_iter().collect();
        let mut st = state(ReactorConfig::cstr(0.1, feed), &[("A", 5), ("BB", 1)]);
        let t = Transition::ComplexFormation {
            catalyst: sp("BB"),
            first: sp("A"),
        };
        apply_event(&mut st, &t, &chem()).unwrap();
        assert_eq!(st.species_count(&sp("A")), 5);
        assert_eq!(st.count(&Entity::complex("BB", "A")), 1);
    }

    #[test]
    fn entity_names_round_trip() {
        for name in ["A", "ABBA", "BB:A"] {
            let e: Entity = name.parse().unwrap();
            assert_eq!(e.to_string(), name);
        }
        assert!(":A".parse::<Entity>().is_err());
        assert_eq!("BB:A".parse::<Entity>().unwrap().len(), 3);
    }
}

//! Incremental direct-method simulator with on-the-fly chemistry expansion.
//!
//! Channels are grouped by a pivot entity whose count multiplies every
//! member of the group; within a group each member carries an integer
//! factor (the partner count, `n - 1` for self-pairs, or a constant). A
//! family of channels shares one rate constant, so its total propensity is
//! that constant times an exact integer sum. A count change touches the
//! groups the entity pivots plus one leaf per group it is a partner in,
//! instead of every channel it appears in.

use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{KineticParams, ReactorConfig};
use super::ssa::{open_unit, WeightTree};
use super::state::{Entity, EventKind, ReactorState, Transition};
use crate::chemistry::{Catalysis, Chemistry, Complex, Reaction, Species, SpeciesId};
use crate::error::{Error, Result};

const FAMILIES: [EventKind; 6] = [
    EventKind::ComplexFormation,
    EventKind::ProductRelease,
    EventKind::Cleavage,
    EventKind::ComplexDissociation,
    EventKind::Efflux,
    EventKind::Influx,
];
const FORMATION: usize = 0;
const RELEASE: usize = 1;
const CLEAVAGE: usize = 2;
const DISSOCIATION: usize = 3;
const EFFLUX: usize = 4;
const INFLUX: usize = 5;
const NO_PIVOT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
enum Factor {
    Unit,
    Level(u64),
    Partner(u32),
    /// Partner is the pivot itself: distinct ordered pairs, `n - 1`.
    SelfPair,
}

/// What a channel does, over entity indices.
#[derive(Clone, Copy, Debug)]
enum Action {
    Formation {
        catalyst: u32,
        first: u32,
        complex: u32,
    },
    Release {
        complex: u32,
        second: u32,
        product: u32,
        catalyst: u32,
    },
    Dissociation {
        complex: u32,
        catalyst: u32,
        bound: u32,
    },
    Cleavage {
        catalyst: u32,
        substrate: u32,
        left: u32,
        right: u32,
    },
    Influx {
        species: u32,
    },
    Efflux {
        entity: u32,
    },
}

#[derive(Clone, Copy, Debug)]
struct Member {
    factor: Factor,
    action: Action,
}

#[derive(Clone, Debug)]
struct Group {
    family: usize,
    pivot: u32,
    slot: usize,
    members: Vec<Member>,
    /// Sum of constant factors.
    fixed: u64,
    /// Sum of partner counts over `Partner` members.
    partners: u64,
    self_pairs: u64,
}

impl Group {
    /// Sum of member factors given the pivot count.
    #[inline]
    fn factor_sum(&self, pivot_count: u64) -> u64 {
        self.fixed + self.partners + self.self_pairs * pivot_count.saturating_sub(1)
    }
}

#[derive(Clone, Copy, Debug)]
enum EntityKind {
    Species(SpeciesId),
    Complex {
        catalyst: SpeciesId,
        bound: SpeciesId,
    },
}

#[derive(Clone, Debug)]
struct EntitySlot {
    kind: EntityKind,
    len: usize,
    count: u64,
    buffered: bool,
    /// Groups this entity pivots.
    pivots: Vec<u32>,
    /// Groups with a member whose factor is this entity's count, once per
    /// such member.
    partners: Vec<u32>,
}

/// Observables sampled on the observation grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    /// Bricks in all species and complexes, buffered species included.
    pub total_mass: u64,
    /// Number of entity kinds with a positive count.
    pub richness: usize,
    /// Longest species present; complexes are not species.
    pub max_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<BTreeMap<Entity, u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub transition: Transition,
}

/// Per-kind event totals, kept even when the full ledger is off.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventStats {
    pub total: u64,
    pub by_kind: BTreeMap<EventKind, u64>,
    /// Longest entity that ever left the reactor (0 if none did).
    pub max_efflux_len: usize,
}

/// Output of [`run_simulation`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub observations: Vec<Observation>,
    pub events: Option<Vec<EventRecord>>,
    pub stats: EventStats,
    pub final_state: ReactorState,
    /// The chemistry as expanded during this run.
    pub chemistry: Chemistry,
    pub kinetics: KineticParams,
    pub sim_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    pub dt_obs: f64,
    pub sim_seed: u64,
    pub record_events: bool,
    pub record_counts: bool,
    /// Recompute every propensity from scratch every this many events and
    /// fail on any disagreement with the incrementally maintained table.
    pub audit_every: Option<u64>,
}

impl RunOptions {
    pub fn new(t_end: f64, dt_obs: f64, sim_seed: u64) -> Self {
        RunOptions {
            t_end,
            dt_obs,
            sim_seed,
            record_events: false,
            record_counts: false,
            audit_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::config(
                "t_end",
                format!("{} must be positive", self.t_end),
            ));
        }
        if !(self.dt_obs.is_finite() && self.dt_obs > 0.0) {
            return Err(Error::config(
                "dt_obs",
                format!("{} must be positive", self.dt_obs),
            ));
        }
        Ok(())
    }

    /// Number of grid points `0, dt_obs, ..., <= t_end`.
    pub fn sample_count(&self) -> usize {
        (self.t_end / self.dt_obs + 1e-9).floor() as usize + 1
    }

    pub fn sample_time(&self, k: usize) -> f64 {
        k as f64 * self.dt_obs
    }
}

/// Mutable reactor driven one event at a time.
pub struct Simulator {
    chem: Chemistry,
    reactor: ReactorConfig,
    kinetics: KineticParams,
    rates: [f64; 6],
    t: f64,
    entities: Vec<EntitySlot>,
    species_entity: Vec<u32>,
    complex_index: HashMap<(SpeciesId, SpeciesId), u32>,
    groups: Vec<Group>,
    group_index: HashMap<(usize, u32), u32>,
    families: [WeightTree; 6],
    family_groups: [Vec<u32>; 6],
    channels: usize,
    mass: u64,
    richness: usize,
    len_hist: Vec<usize>,
    rng: ChaCha8Rng,
    stats: EventStats,
    created: Vec<SpeciesId>,
}

impl Simulator {
    /// Sets up channels for every catalysis of `chem`, places the initial
    /// counts, and registers any initial or supplied species the chemistry
    /// has not seen yet.
    pub fn new(
        chem: Chemistry,
        reactor: ReactorConfig,
        kinetics: KineticParams,
        init: &BTreeMap<Species, u64>,
        sim_seed: u64,
    ) -> Result<Self> {
        kinetics.validate()?;
        reactor.validate(&chem.params().alphabet, "reactor")?;
        for s in init.keys() {
            chem.params()
                .alphabet
                .parse(s.as_str())
                .map_err(|e| Error::config("initial_counts", e.to_string()))?;
        }
        let (efflux, influx) = match &reactor.mode {
            super::config::ReactorMode::Cstr { k_in, k_out, .. } => (*k_out, *k_in),
            super::config::ReactorMode::Protocell { k_mem, .. } => (*k_mem, *k_mem),
        };
        let rates = [
            kinetics.k_complex,
            kinetics.k_release,
            kinetics.k_cleave,
            kinetics.k_diss,
            efflux,
            influx,
        ];
        let mut sim = Simulator {
            chem,
            reactor,
            kinetics,
            rates,
            t: 0.0,
            entities: Vec::new(),
            species_entity: Vec::new(),
            complex_index: HashMap::new(),
            groups: Vec::new(),
            group_index: HashMap::new(),
            families: Default::default(),
            family_groups: Default::default(),
            channels: 0,
            mass: 0,
            richness: 0,
            len_hist: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(sim_seed),
            stats: EventStats::default(),
            created: Vec::new(),
        };

        let mut placed: Vec<(SpeciesId, u64)> = Vec::new();
        for (s, &n) in init {
            placed.push((sim.chem.intern(s), n));
        }
        let supply: Vec<(Species, u64)> = sim
            .reactor
            .supply()
            .iter()
            .map(|(s, &n)| (s.clone(), n))
            .collect();
        let mut supplied = Vec::new();
        for (s, n) in &supply {
            let id = sim.chem.intern(s);
            supplied.push(id);
            if sim.reactor.hybrid_buffered {
                placed.push((id, *n));
            }
        }
        sim.sync_tables();
        for (id, n) in placed {
            let e = sim.species_entity[id.index()];
            let old = sim.entities[e as usize].count;
            sim.entities[e as usize].count = n;
            sim.account(e, old, n);
        }

        let existing = sim.chem.registered().to_vec();
        for &id in &existing {
            sim.add_species_transport(id);
        }
        let catalyses = sim.chem.catalyses().to_vec();
        for c in &catalyses {
            sim.add_catalysis(c);
        }
        let mut pending: Vec<SpeciesId> = init
            .keys()
            .filter_map(|s| sim.chem.id_of(s))
            .chain(supplied)
            .collect();
        pending.sort_by(|a, b| sim.chem.species(*a).cmp(sim.chem.species(*b)));
        pending.dedup();
        for id in pending {
            sim.register(id);
        }
        sim.flush();
        sim.family_propensities()?;
        Ok(sim)
    }

    /// Gives every interned species an entity slot.
    fn sync_tables(&mut self) {
        let n = self.chem.interned_count();
        while self.species_entity.len() < n {
            let id = SpeciesId::from_index(self.species_entity.len());
            let s = self.chem.species(id);
            let len = s.len();
            let buffered = self.reactor.is_buffered(s);
            let e = self.push_entity(EntityKind::Species(id), len, buffered);
            self.species_entity.push(e);
            if self.len_hist.len() <= len {
                self.len_hist.resize(len + 1, 0);
            }
        }
    }

    fn push_entity(&mut self, kind: EntityKind, len: usize, buffered: bool) -> u32 {
        let e = u32::try_from(self.entities.len()).expect("entity table overflow");
        self.entities.push(EntitySlot {
            kind,
            len,
            count: 0,
            buffered,
            pivots: Vec::new(),
            partners: Vec::new(),
        });
        e
    }

    #[inline]
    fn ent(&self, id: SpeciesId) -> u32 {
        self.species_entity[id.index()]
    }

    /// Running observables for a count change of entity `e`.
    #[inline]
    fn account(&mut self, e: u32, old: u64, new: u64) {
        let slot = &self.entities[e as usize];
        let len = slot.len;
        let is_species = matches!(slot.kind, EntityKind::Species(_));
        self.mass = self.mass + new * len as u64 - old * len as u64;
        match (old, new) {
            (0, n) if n > 0 => {
                self.richness += 1;
                if is_species {
                    self.len_hist[len] += 1;
                }
            }
            (o, 0) if o > 0 => {
                self.richness -= 1;
                if is_species {
                    self.len_hist[len] -= 1;
                }
            }
            _ => {}
        }
    }

    fn register(&mut self, id: SpeciesId) {
        if self.chem.is_registered(id) {
            return;
        }
        let added = self.chem.expand_id(id);
        self.sync_tables();
        self.add_species_transport(id);
        for c in &added {
            self.add_catalysis(c);
        }
    }

    fn add_species_transport(&mut self, id: SpeciesId) {
        let e = self.ent(id);
        let s = self.chem.species(id);
        if let Some(level) = self.influx_level(s) {
            let action = Action::Influx { species: e };
            self.add_member(INFLUX, NO_PIVOT, Factor::Level(level), action);
        }
        if self.entities[e as usize].buffered {
            return;
        }
        if self.allows_efflux(self.entities[e as usize].len) {
            self.add_member(EFFLUX, e, Factor::Unit, Action::Efflux { entity: e });
        }
    }

    fn influx_level(&self, s: &Species) -> Option<u64> {
        if self.reactor.hybrid_buffered {
            return None;
        }
        self.reactor.supply().get(s).copied()
    }

    fn allows_efflux(&self, len: usize) -> bool {
        self.reactor.efflux_rate(len).is_some_and(|r| r > 0.0)
    }

    fn add_catalysis(&mut self, c: &Catalysis) {
        self.sync_tables();
        let catalyst = self.ent(c.catalyst);
        match c.reaction {
            Reaction::Cleavage {
                substrate,
                left,
                right,
            } => {
                let substrate = self.ent(substrate);
                let action = Action::Cleavage {
                    catalyst,
                    substrate,
                    left: self.ent(left),
                    right: self.ent(right),
                };
                let factor = if catalyst == substrate {
                    Factor::SelfPair
                } else {
                    Factor::Partner(substrate)
                };
                self.add_member(CLEAVAGE, catalyst, factor, action);
            }
            Reaction::Condensation {
                first,
                second,
                product,
            } => {
                let complex = self.complex_for(c.catalyst, first);
                let action = Action::Release {
                    complex,
                    second: self.ent(second),
                    product: self.ent(product),
                    catalyst,
                };
                self.add_member(RELEASE, complex, Factor::Partner(self.ent(second)), action);
            }
        }
    }

    /// Complex entity for (catalyst, bound), created together with its
    /// formation, dissociation, and efflux channels on first use.
    fn complex_for(&mut self, catalyst: SpeciesId, bound: SpeciesId) -> u32 {
        if let Some(&x) = self.complex_index.get(&(catalyst, bound)) {
            return x;
        }
        let len = self.chem.len_of(catalyst) + self.chem.len_of(bound);
        let x = self.push_entity(EntityKind::Complex { catalyst, bound }, len, false);
        self.complex_index.insert((catalyst, bound), x);
        let (cat, first) = (self.ent(catalyst), self.ent(bound));
        let factor = if cat == first {
            Factor::SelfPair
        } else {
            Factor::Partner(first)
        };
        let formation = Action::Formation {
            catalyst: cat,
            first,
            complex: x,
        };
        self.add_member(FORMATION, cat, factor, formation);
        if self.kinetics.k_diss > 0.0 {
            let action = Action::Dissociation {
                complex: x,
                catalyst: cat,
                bound: first,
            };
            self.add_member(DISSOCIATION, x, Factor::Unit, action);
        }
        if self.allows_efflux(len) {
            self.add_member(EFFLUX, x, Factor::Unit, Action::Efflux { entity: x });
        }
        x
    }

    fn add_member(&mut self, family: usize, pivot: u32, factor: Factor, action: Action) {
        let g = match self.group_index.get(&(family, pivot)) {
            Some(&g) => g,
            None => {
                let g = u32::try_from(self.groups.len()).expect("group table overflow");
                let slot = self.families[family].push(0);
                self.family_groups[family].push(g);
                self.groups.push(Group {
                    family,
                    pivot,
                    slot,
                    members: Vec::new(),
                    fixed: 0,
                    partners: 0,
                    self_pairs: 0,
                });
                self.group_index.insert((family, pivot), g);
                if pivot != NO_PIVOT {
                    self.entities[pivot as usize].pivots.push(g);
                }
                g
            }
        };
        let value = self.factor_value(pivot, factor);
        let group = &mut self.groups[g as usize];
        group.members.push(Member { factor, action });
        match factor {
            Factor::SelfPair => group.self_pairs += 1,
            Factor::Partner(p) => {
                group.partners += value;
                self.entities[p as usize].partners.push(g);
            }
            Factor::Unit | Factor::Level(_) => group.fixed += value,
        }
        self.channels += 1;
        self.refresh_group(g);
    }

    #[inline]
    fn factor_value(&self, pivot: u32, factor: Factor) -> u64 {
        match factor {
            Factor::Unit => 1,
            Factor::Level(n) => n,
            Factor::Partner(p) => self.entities[p as usize].count,
            Factor::SelfPair => self.entities[pivot as usize].count.saturating_sub(1),
        }
    }

    #[inline]
    fn multiplier(&self, pivot: u32) -> u64 {
        if pivot == NO_PIVOT {
            1
        } else {
            self.entities[pivot as usize].count
        }
    }

    #[inline]
    fn group_weight(&self, g: &Group) -> u128 {
        let n = self.multiplier(g.pivot);
        n as u128 * g.factor_sum(n) as u128
    }

    #[inline]
    fn refresh_group(&mut self, g: u32) {
        let group = &self.groups[g as usize];
        let w = self.group_weight(group);
        let (family, slot) = (group.family, group.slot);
        self.families[family].set_deferred(slot, w);
    }

    fn flush(&mut self) {
        for tree in &mut self.families {
            tree.flush();
        }
    }

    /// Propagates a unit count change of entity `e` into the weight trees.
    fn on_count_change(&mut self, e: u32, up: bool) {
        for k in 0..self.entities[e as usize].pivots.len() {
            let g = self.entities[e as usize].pivots[k];
            self.refresh_group(g);
        }
        for k in 0..self.entities[e as usize].partners.len() {
            let g = self.entities[e as usize].partners[k];
            let group = &mut self.groups[g as usize];
            if up {
                group.partners += 1;
            } else {
                group.partners -= 1;
            }
            self.refresh_group(g);
        }
    }

    #[inline]
    fn inc(&mut self, e: u32) {
        let slot = &mut self.entities[e as usize];
        if slot.buffered {
            return;
        }
        let old = slot.count;
        slot.count = old + 1;
        if old == 0 {
            if let EntityKind::Species(id) = slot.kind {
                if !self.chem.is_registered(id) {
                    self.created.push(id);
                }
            }
        }
        self.account(e, old, old + 1);
        self.on_count_change(e, true);
    }

    #[inline]
    fn dec(&mut self, e: u32) -> Result<()> {
        let slot = &mut self.entities[e as usize];
        if slot.buffered {
            return Ok(());
        }
        let old = slot.count;
        if old == 0 {
            return Err(Error::Consistency(format!(
                "event consumed {} at count 0",
                self.entity(e)
            )));
        }
        slot.count = old - 1;
        self.account(e, old, old - 1);
        self.on_count_change(e, false);
        Ok(())
    }

    fn entity(&self, e: u32) -> Entity {
        match self.entities[e as usize].kind {
            EntityKind::Species(id) => Entity::Species(self.chem.species(id).clone()),
            EntityKind::Complex { catalyst, bound } => Entity::Complex(Complex {
                catalyst: self.chem.species(catalyst).clone(),
                bound: self.chem.species(bound).clone(),
            }),
        }
    }

    fn species_of(&self, e: u32) -> Species {
        match self.entities[e as usize].kind {
            EntityKind::Species(id) => self.chem.species(id).clone(),
            EntityKind::Complex { .. } => unreachable!("entity {e} is a complex"),
        }
    }

    /// The transition a channel performs, in snapshot terms.
    fn describe(&self, action: Action) -> Transition {
        let sp = |e: u32| self.species_of(e);
        match action {
            Action::Formation {
                catalyst, first, ..
            } => Transition::ComplexFormation {
                catalyst: sp(catalyst),
                first: sp(first),
            },
            Action::Release {
                complex, second, ..
            } => match self.entity(complex) {
                Entity::Complex(c) => Transition::ProductRelease {
                    catalyst: c.catalyst,
                    first: c.bound,
                    second: sp(second),
                },
                Entity::Species(_) => unreachable!(),
            },
            Action::Dissociation {
                catalyst, bound, ..
            } => Transition::ComplexDissociation {
                catalyst: sp(catalyst),
                first: sp(bound),
            },
            Action::Cleavage {
                catalyst,
                substrate,
                left,
                ..
            } => Transition::Cleavage {
                catalyst: sp(catalyst),
                substrate: sp(substrate),
                cut: self.entities[left as usize].len,
            },
            Action::Influx { species } => Transition::Influx {
                species: sp(species),
            },
            Action::Efflux { entity } => Transition::Efflux {
                entity: self.entity(entity),
            },
        }
    }

    /// Applies a channel's action and registers any species it created.
    fn fire(&mut self, family: usize, action: Action) -> Result<()> {
        self.created.clear();
        match action {
            Action::Formation {
                catalyst,
                first,
                complex,
            } => {
                self.dec(catalyst)?;
                self.dec(first)?;
                self.inc(complex);
            }
            Action::Release {
                complex,
                second,
                product,
                catalyst,
            } => {
                self.dec(complex)?;
                self.dec(second)?;
                self.inc(product);
                self.inc(catalyst);
            }
            Action::Dissociation {
                complex,
                catalyst,
                bound,
            } => {
                self.dec(complex)?;
                self.inc(catalyst);
                self.inc(bound);
            }
            Action::Cleavage {
                substrate,
                left,
                right,
                ..
            } => {
                self.dec(substrate)?;
                self.inc(left);
                self.inc(right);
            }
            Action::Influx { species } => self.inc(species),
            Action::Efflux { entity } => {
                self.dec(entity)?;
                let len = self.entities[entity as usize].len;
                self.stats.max_efflux_len = self.stats.max_efflux_len.max(len);
            }
        }
        self.stats.total += 1;
        *self.stats.by_kind.entry(FAMILIES[family]).or_default() += 1;

        let created = std::mem::take(&mut self.created);
        for &s in &created {
            self.register(s);
        }
        self.created = created;
        self.flush();
        Ok(())
    }

    /// Rate constant times integer weight, per family.
    fn family_propensities(&self) -> Result<[f64; 6]> {
        let mut out = [0.0; 6];
        for (f, a) in out.iter_mut().enumerate() {
            let w = self.families[f].total();
            *a = if w == 0 {
                0.0
            } else {
                self.rates[f] * w as f64
            };
            if !a.is_finite() {
                return Err(Error::Numeric {
                    channel: format!("{:?} channels", FAMILIES[f]),
                    value: *a,
                });
            }
        }
        Ok(out)
    }

    /// Draws the waiting time to the next event, or `None` when quiescent.
    fn draw_tau(&mut self) -> Result<Option<f64>> {
        let a0: f64 = self.family_propensities()?.iter().sum();
        if a0 <= 0.0 {
            return Ok(None);
        }
        Ok(Some(-open_unit(&mut self.rng).ln() / a0))
    }

    /// Selects the channel whose cumulative propensity first reaches
    /// `u * a0`, ordered by family, group, and member.
    fn choose(&mut self) -> Result<(usize, Action)> {
        let props = self.family_propensities()?;
        let a0: f64 = props.iter().sum();
        let mut target = open_unit(&mut self.rng) * a0;
        let mut chosen = None;
        for (f, &a) in props.iter().enumerate() {
            if a <= 0.0 {
                continue;
            }
            chosen = Some((f, target / self.rates[f]));
            if target <= a {
                break;
            }
            target -= a;
        }
        let (f, units) = chosen.expect("a0 > 0 implies a positive family");
        let total = self.families[f].total();
        let r = if units.is_finite() && units > 0.0 {
            (units.ceil() as u128).clamp(1, total)
        } else {
            1
        };
        let (slot, rest) = self.families[f].select(r);
        let group = &self.groups[self.family_groups[f][slot] as usize];
        let mult = self.multiplier(group.pivot);
        // Member weights are mult * factor; find the first member whose
        // cumulative factor reaches ceil(rest / mult).
        let goal = rest.div_ceil(mult as u128) as u64;
        let mut acc = 0;
        for member in &group.members {
            acc += self.factor_value(group.pivot, member.factor);
            if acc >= goal {
                return Ok((f, member.action));
            }
        }
        Err(Error::Consistency(format!(
            "{:?} group weights do not cover the selected offset",
            FAMILIES[f]
        )))
    }

    /// Advances by one event. Returns the transition that fired, or `None`
    /// when the system is quiescent.
    pub fn step(&mut self) -> Result<Option<Transition>> {
        let Some(tau) = self.draw_tau()? else {
            return Ok(None);
        };
        self.t += tau;
        let (f, action) = self.choose()?;
        let tr = self.describe(action);
        self.fire(f, action)?;
        Ok(Some(tr))
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn chemistry(&self) -> &Chemistry {
        &self.chem
    }

    pub fn reactor(&self) -> &ReactorConfig {
        &self.reactor
    }

    pub fn total_mass(&self) -> u64 {
        self.mass
    }

    pub fn richness(&self) -> usize {
        self.richness
    }

    pub fn max_len(&self) -> usize {
        self.len_hist.iter().rposition(|&n| n > 0).unwrap_or(0)
    }

    pub fn total_propensity(&self) -> f64 {
        self.family_propensities()
            .map_or(f64::NAN, |p| p.iter().sum())
    }

    pub fn stats(&self) -> &EventStats {
        &self.stats
    }

    pub fn channel_count(&self) -> usize {
        self.channels
    }

    pub fn counts(&self) -> BTreeMap<Entity, u64> {
        self.entities
            .iter()
            .enumerate()
            .filter(|(_, slot)| slot.count > 0)
            .map(|(e, slot)| (self.entity(e as u32), slot.count))
            .collect()
    }

    pub fn snapshot(&self) -> ReactorState {
        ReactorState {
            t: self.t,
            counts: self.counts(),
            reactor: self.reactor.clone(),
        }
    }

    /// Every channel with its currently maintained propensity, in selection
    /// order.
    pub fn propensity_table(&self) -> Vec<(Transition, f64)> {
        let mut out = Vec::with_capacity(self.channels);
        for f in 0..FAMILIES.len() {
            for &g in &self.family_groups[f] {
                let group = &self.groups[g as usize];
                let mult = self.multiplier(group.pivot);
                for member in &group.members {
                    let w = mult as u128 * self.factor_value(group.pivot, member.factor) as u128;
                    let a = if w == 0 {
                        0.0
                    } else {
                        self.rates[f] * w as f64
                    };
                    out.push((self.describe(member.action), a));
                }
            }
        }
        out
    }

    fn observe(&self, t: f64, record_counts: bool) -> Observation {
        Observation {
            t,
            total_mass: self.mass,
            richness: self.richness,
            max_len: self.max_len(),
            counts: record_counts.then(|| self.counts()),
        }
    }

    /// Recomputes every channel weight and the running observables from the
    /// counts, failing on any mismatch with the maintained values.
    pub fn audit(&self) -> Result<()> {
        let stale = |what: String| Err(Error::Consistency(format!("stale weight on {what}")));
        for (f, kind) in FAMILIES.iter().enumerate() {
            let mut family_total = 0u128;
            for &g in &self.family_groups[f] {
                let group = &self.groups[g as usize];
                let n = self.multiplier(group.pivot);
                let sum: u64 = group
                    .members
                    .iter()
                    .map(|m| self.factor_value(group.pivot, m.factor))
                    .sum();
                if sum != group.factor_sum(n) {
                    let first = group.members[0].action;
                    return stale(format!("group of {}", self.describe(first)));
                }
                let w = n as u128 * sum as u128;
                if w != self.families[f].get(group.slot) {
                    return stale(format!("{kind:?} group weight"));
                }
                family_total += w;
            }
            if family_total != self.families[f].total() {
                return stale(format!("{kind:?} family total"));
            }
        }
        let mut mass = 0u64;
        let mut richness = 0usize;
        for slot in &self.entities {
            mass += slot.count * slot.len as u64;
            richness += usize::from(slot.count > 0);
        }
        if mass != self.mass || richness != self.richness {
            return Err(Error::Consistency(format!(
                "running observables drifted: mass {} vs {mass}, richness {} vs {richness}",
                self.mass, self.richness
            )));
        }
        Ok(())
    }

    /// Runs to `opts.t_end`, sampling on the observation grid.
    pub fn run(mut self, opts: &RunOptions) -> Result<Trajectory> {
        opts.validate()?;
        let samples = opts.sample_count();
        let mut observations = Vec::with_capacity(samples);
        let mut events = opts.record_events.then(Vec::new);
        let mut next = 0;
        while next < samples {
            let Some(tau) = self.draw_tau()? else {
                // Quiescent: nothing will change before t_end.
                while next < samples {
                    observations.push(self.observe(opts.sample_time(next), opts.record_counts));
                    next += 1;
                }
                break;
            };
            let t_next = self.t + tau;
            while next < samples && opts.sample_time(next) < t_next {
                observations.push(self.observe(opts.sample_time(next), opts.record_counts));
                next += 1;
            }
            if next == samples {
                break;
            }
            self.t = t_next;
            let (f, action) = self.choose()?;
            if let Some(ev) = events.as_mut() {
                ev.push(EventRecord {
                    t: t_next,
                    transition: self.describe(action),
                });
            }
            self.fire(f, action)?;
            if let Some(every) = opts.audit_every {
                if self.stats.total.is_multiple_of(every.max(1)) {
                    self.audit()?;
                }
            }
        }
        self.t = opts.sample_time(samples - 1);
        let final_state = self.snapshot();
        Ok(Trajectory {
            observations,
            events,
            stats: self.stats,
            final_state,
            chemistry: self.chem,
            kinetics: self.kinetics,
            sim_seed: opts.sim_seed,
        })
    }
}

/// Builds a simulator and runs it to the horizon.
pub fn run_simulation(
    chem: &Chemistry,
    reactor: &ReactorConfig,
    kinetics: &KineticParams,
    init: &BTreeMap<Species, u64>,
    opts: &RunOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    Simulator::new(
        chem.clone(),
        reactor.clone(),
        kinetics.clone(),
        init,
        opts.sim_seed,
    )?
    .run(opts)
}

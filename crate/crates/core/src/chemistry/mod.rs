//! Species, reaction templates, and the randomly generated catalytic
//! chemistry that grows as new species appear.

mod draw;
mod species;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use draw::{canonical_encode, catalysis_draw, template_prefix, unit_interval, Fnv1a64};
pub use species::{Alphabet, Complex, ReactionTemplate, Species, RESERVED_CHARS};

use crate::error::{Error, Result};

/// Parameters fixing one "artificial world".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChemistryParams {
    pub p: f64,
    pub chem_seed: u64,
    #[serde(default)]
    pub alphabet: Alphabet,
    #[serde(default = "default_l_max_product")]
    pub l_max_product: usize,
    #[serde(default = "default_initial_max_len")]
    pub initial_max_len: usize,
}

pub(crate) fn default_l_max_product() -> usize {
    16
}

pub(crate) fn default_initial_max_len() -> usize {
    2
}

impl ChemistryParams {
    pub fn new(p: f64, chem_seed: u64) -> Self {
        ChemistryParams {
            p,
            chem_seed,
            alphabet: Alphabet::default(),
            l_max_product: default_l_max_product(),
            initial_max_len: default_initial_max_len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::config(
                "p",
                format!("{} is not a probability", self.p),
            ));
        }
        if self.initial_max_len == 0 {
            return Err(Error::config("initial_max_len", "must be at least 1"));
        }
        if self.l_max_product < self.initial_max_len {
            return Err(Error::config(
                "l_max_product",
                format!(
                    "{} is below initial_max_len {}",
                    self.l_max_product, self.initial_max_len
                ),
            ));
        }
        Ok(())
    }
}

/// Index of an interned species.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpeciesId(u32);

impl SpeciesId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(i: usize) -> Self {
        SpeciesId(u32::try_from(i).expect("species table overflow"))
    }
}

/// A reaction template over interned species.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reaction {
    Cleavage {
        substrate: SpeciesId,
        left: SpeciesId,
        right: SpeciesId,
    },
    Condensation {
        first: SpeciesId,
        second: SpeciesId,
        product: SpeciesId,
    },
}

/// A reaction together with the species that catalyzes it. Reactions exist
/// in a chemistry only in this form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Catalysis {
    pub reaction: Reaction,
    pub catalyst: SpeciesId,
}

#[derive(Clone, Debug)]
struct Entry {
    species: Species,
    len: usize,
    registered: bool,
}

/// Catalysis found during enumeration, before its parts are interned.
enum Hit {
    Cleavage {
        substrate: SpeciesId,
        cut: usize,
        catalyst: SpeciesId,
    },
    Condensation {
        first: SpeciesId,
        second: SpeciesId,
        catalyst: SpeciesId,
    },
}

/// Registry of species and realized catalyses.
///
/// Species are *interned* as soon as any catalysis mentions them (as a
/// product or cleavage fragment) and *registered* once they have actually
/// been present. Only registered species act as substrates and catalysts
/// when conceivable reactions are enumerated.
#[derive(Clone, Debug)]
pub struct Chemistry {
    params: ChemistryParams,
    entries: Vec<Entry>,
    index: HashMap<Species, SpeciesId>,
    registered: Vec<SpeciesId>,
    catalyses: Vec<Catalysis>,
    seed_hash: Fnv1a64,
}

impl Chemistry {
    fn empty(params: ChemistryParams) -> Result<Self> {
        params.validate()?;
        let seed_hash = Fnv1a64::seeded(params.chem_seed);
        Ok(Chemistry {
            params,
            entries: Vec::new(),
            index: HashMap::new(),
            registered: Vec::new(),
            catalyses: Vec::new(),
            seed_hash,
        })
    }

    /// Registers every species up to `initial_max_len` and draws catalysis for
    /// every conceivable (reaction, catalyst) pair among them.
    pub fn generate(params: ChemistryParams) -> Result<Self> {
        let initial = params.alphabet.all_up_to(params.initial_max_len);
        Self::with_registry(params, &initial)
    }

    /// Builds the chemistry over an explicit registry in one pass.
    pub fn with_registry(params: ChemistryParams, registry: &[Species]) -> Result<Self> {
        let mut chem = Self::empty(params)?;
        for s in registry {
            chem.check_alphabet(s)?;
            let id = chem.intern(s);
            if !chem.entries[id.index()].registered {
                chem.entries[id.index()].registered = true;
                chem.registered.push(id);
            }
        }
        let all = chem.registered.clone();
        let mut hits = Vec::new();
        for &x in &all {
            for cut in 1..chem.len_of(x) {
                chem.draw_cleavage(x, cut, &all, &mut hits);
            }
            for &y in &all {
                chem.draw_condensation(x, y, &all, &mut hits);
            }
        }
        chem.resolve(hits);
        Ok(chem)
    }

    /// Reassembles a chemistry from stored parts. Every catalysis is checked
    /// for template soundness, registry membership, and agreement with the
    /// draw rule.
    pub fn from_parts(
        params: ChemistryParams,
        registry: &[Species],
        catalyses: &[(ReactionTemplate, Species)],
    ) -> Result<Self> {
        let mut chem = Self::empty(params)?;
        for s in registry {
            chem.check_alphabet(s)?;
            let id = chem.intern(s);
            if chem.entries[id.index()].registered {
                return Err(Error::ChemistryFormat(format!("species {s} listed twice")));
            }
            chem.entries[id.index()].registered = true;
            chem.registered.push(id);
        }
        let mut seen = BTreeSet::new();
        for (pos, (template, catalyst)) in catalyses.iter().enumerate() {
            let at = |msg: String| Error::ChemistryFormat(format!("catalyses[{pos}]: {msg}"));
            if !template.is_sound() {
                return Err(at(format!("unsound template {template}")));
            }
            let substrates: Vec<&Species> = match template {
                ReactionTemplate::Cleavage { substrate, .. } => vec![substrate, catalyst],
                ReactionTemplate::Condensation { first, second, .. } => {
                    vec![first, second, catalyst]
                }
            };
            for s in substrates {
                if !chem.id_of(s).is_some_and(|id| chem.is_registered(id)) {
                    return Err(at(format!("species {s} is not registered")));
                }
            }
            if let ReactionTemplate::Condensation { product, .. } = template {
                if product.len() > chem.params.l_max_product {
                    return Err(at(format!(
                        "product {product} exceeds l_max_product {}",
                        chem.params.l_max_product
                    )));
                }
            }
            if !catalysis_draw(chem.params.chem_seed, template, catalyst, chem.params.p) {
                return Err(at(format!(
                    "{template} catalyzed by {catalyst} is not drawn for this seed and p"
                )));
            }
            if !seen.insert(canonical_encode(template, catalyst)) {
                return Err(at("duplicate catalysis".into()));
            }
            let catalyst = chem.intern(catalyst);
            let reaction = chem.intern_template(template);
            chem.catalyses.push(Catalysis { reaction, catalyst });
        }
        Ok(chem)
    }

    /// Registers `new` and adds every catalysis that its arrival makes
    /// conceivable: its own reactions against all catalysts, and all earlier
    /// reactions with `new` as catalyst. Returns the added catalyses; a
    /// species that is already registered yields an empty list.
    pub fn expand(&mut self, new: &Species) -> Result<Vec<Catalysis>> {
        self.check_alphabet(new)?;
        let id = self.intern(new);
        Ok(self.expand_id(id))
    }

    /// As [`Chemistry::expand`] for an already interned species.
    pub fn expand_id(&mut self, new: SpeciesId) -> Vec<Catalysis> {
        if self.entries[new.index()].registered {
            return Vec::new();
        }
        let old = self.registered.clone();
        self.entries[new.index()].registered = true;
        self.registered.push(new);
        let all = self.registered.clone();

        let mut hits = Vec::new();
        for cut in 1..self.len_of(new) {
            self.draw_cleavage(new, cut, &all, &mut hits);
        }
        for &x in &all {
            self.draw_condensation(new, x, &all, &mut hits);
            if x != new {
                self.draw_condensation(x, new, &all, &mut hits);
            }
        }
        let only_new = [new];
        for &x in &old {
            for cut in 1..self.len_of(x) {
                self.draw_cleavage(x, cut, &only_new, &mut hits);
            }
            for &y in &old {
                self.draw_condensation(x, y, &only_new, &mut hits);
            }
        }
        let start = self.catalyses.len();
        self.resolve(hits);
        self.catalyses[start..].to_vec()
    }

    fn draw_cleavage(
        &self,
        substrate: SpeciesId,
        cut: usize,
        catalysts: &[SpeciesId],
        hits: &mut Vec<Hit>,
    ) {
        let seq = self.entries[substrate.index()].species.as_str();
        let byte = seq.char_indices().nth(cut).map(|(i, _)| i).unwrap();
        let prefix = self
            .seed_hash
            .with(b"X|")
            .with(seq.as_bytes())
            .with(b"|")
            .with(&seq.as_bytes()[..byte])
            .with(b"|")
            .with(&seq.as_bytes()[byte..])
            .with(b"|");
        for &c in catalysts {
            if self.hit(prefix, c) {
                hits.push(Hit::Cleavage {
                    substrate,
                    cut,
                    catalyst: c,
                });
            }
        }
    }

    fn draw_condensation(
        &self,
        first: SpeciesId,
        second: SpeciesId,
        catalysts: &[SpeciesId],
        hits: &mut Vec<Hit>,
    ) {
        if self.len_of(first) + self.len_of(second) > self.params.l_max_product {
            return;
        }
        let a = self.entries[first.index()].species.as_str().as_bytes();
        let b = self.entries[second.index()].species.as_str().as_bytes();
        let prefix = self
            .seed_hash
            .with(b"C|")
            .with(a)
            .with(b"|")
            .with(b)
            .with(b"|")
            .with(a)
            .with(b)
            .with(b"|");
        for &c in catalysts {
            if self.hit(prefix, c) {
                hits.push(Hit::Condensation {
                    first,
                    second,
                    catalyst: c,
                });
            }
        }
    }

    #[inline]
    fn hit(&self, prefix: Fnv1a64, catalyst: SpeciesId) -> bool {
        let h = prefix
            .with(self.entries[catalyst.index()].species.as_str().as_bytes())
            .finish();
        unit_interval(h) < self.params.p
    }

    fn resolve(&mut self, hits: Vec<Hit>) {
        for hit in hits {
            let catalysis = match hit {
                Hit::Cleavage {
                    substrate,
                    cut,
                    catalyst,
                } => {
                    let (l, r) = self.entries[substrate.index()].species.split_at(cut);
                    Catalysis {
                        reaction: Reaction::Cleavage {
                            substrate,
                            left: self.intern(&l),
                            right: self.intern(&r),
                        },
                        catalyst,
                    }
                }
                Hit::Condensation {
                    first,
                    second,
                    catalyst,
                } => {
                    let product = self.entries[first.index()]
                        .species
                        .concat(&self.entries[second.index()].species);
                    Catalysis {
                        reaction: Reaction::Condensation {
                            first,
                            second,
                            product: self.intern(&product),
                        },
                        catalyst,
                    }
                }
            };
            debug_assert!(self.template(&catalysis.reaction).is_sound());
            self.catalyses.push(catalysis);
        }
    }

    fn check_alphabet(&self, s: &Species) -> Result<()> {
        self.params.alphabet.parse(s.as_str()).map(|_| ())
    }

    fn intern_template(&mut self, template: &ReactionTemplate) -> Reaction {
        match template {
            ReactionTemplate::Cleavage {
                substrate,
                left,
                right,
                ..
            } => Reaction::Cleavage {
                substrate: self.intern(substrate),
                left: self.intern(left),
                right: self.intern(right),
            },
            ReactionTemplate::Condensation {
                first,
                second,
                product,
            } => Reaction::Condensation {
                first: self.intern(first),
                second: self.intern(second),
                product: self.intern(product),
            },
        }
    }

    /// Returns the id of `s`, interning it (unregistered) if unseen.
    pub fn intern(&mut self, s: &Species) -> SpeciesId {
        if let Some(&id) = self.index.get(s) {
            return id;
        }
        let id = SpeciesId(u32::try_from(self.entries.len()).expect("species table overflow"));
        self.entries.push(Entry {
            species: s.clone(),
            len: s.len(),
            registered: false,
        });
        self.index.insert(s.clone(), id);
        id
    }

    pub fn params(&self) -> &ChemistryParams {
        &self.params
    }

    pub fn id_of(&self, s: &Species) -> Option<SpeciesId> {
        self.index.get(s).copied()
    }

    pub fn species(&self, id: SpeciesId) -> &Species {
        &self.entries[id.index()].species
    }

    pub fn len_of(&self, id: SpeciesId) -> usize {
        self.entries[id.index()].len
    }

    pub fn is_registered(&self, id: SpeciesId) -> bool {
        self.entries[id.index()].registered
    }

    /// Number of interned species, registered or not.
    pub fn interned_count(&self) -> usize {
        self.entries.len()
    }

    /// Registered species in registration order.
    pub fn registered(&self) -> &[SpeciesId] {
        &self.registered
    }

    pub fn catalyses(&self) -> &[Catalysis] {
        &self.catalyses
    }

    pub fn template(&self, reaction: &Reaction) -> ReactionTemplate {
        match *reaction {
            Reaction::Cleavage {
                substrate,
                left,
                right,
            } => ReactionTemplate::Cleavage {
                substrate: self.species(substrate).clone(),
                cut: self.len_of(left),
                left: self.species(left).clone(),
                right: self.species(right).clone(),
            },
            Reaction::Condensation {
                first,
                second,
                product,
            } => ReactionTemplate::Condensation {
                first: self.species(first).clone(),
                second: self.species(second).clone(),
                product: self.species(product).clone(),
            },
        }
    }

    pub fn canonical_key(&self, catalysis: &Catalysis) -> Vec<u8> {
        canonical_encode(
            &self.template(&catalysis.reaction),
            self.species(catalysis.catalyst),
        )
    }

    /// Catalyses as (template, catalyst) pairs sorted by canonical encoding.
    pub fn sorted_catalyses(&self) -> Vec<(ReactionTemplate, Species)> {
        let mut keyed: Vec<_> = self
            .catalyses
            .iter()
            .map(|c| {
                let t = self.template(&c.reaction);
                let cat = self.species(c.catalyst).clone();
                (canonical_encode(&t, &cat), t, cat)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.into_iter().map(|(_, t, c)| (t, c)).collect()
    }

    /// Set of canonical catalysis keys, independent of interning order.
    pub fn catalysis_keys(&self) -> BTreeSet<Vec<u8>> {
        self.catalyses
            .iter()
            .map(|c| self.canonical_key(c))
            .collect()
    }

    /// Registered species sorted by sequence.
    pub fn sorted_registry(&self) -> Vec<Species> {
        let mut v: Vec<Species> = self
            .registered
            .iter()
            .map(|&id| self.species(id).clone())
            .collect();
        v.sort();
        v
    }
}

impl PartialEq for Chemistry {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.sorted_registry() == other.sorted_registry()
            && self.catalysis_keys() == other.catalysis_keys()
    }
}

/// One template per internal cut point, ascending.
pub fn enumerate_cleavages(s: &Species) -> Vec<ReactionTemplate> {
    (1..s.len())
        .map(|cut| ReactionTemplate::cleavage(s, cut))
        .collect()
}

/// Ordered pairs over `known` involving `new` at least once, with product
/// length capped at `l_max_product`, sorted by canonical encoding.
pub fn enumerate_condensations(
    new: &Species,
    known: &[Species],
    l_max_product: usize,
) -> Vec<ReactionTemplate> {
    let mut out = Vec::new();
    let fits = |a: &Species, b: &Species| a.len() + b.len() <= l_max_product;
    if fits(new, new) {
        out.push(ReactionTemplate::condensation(new, new));
    }
    for x in known.iter().filter(|x| *x != new) {
        if fits(new, x) {
            out.push(ReactionTemplate::condensation(new, x));
            out.push(ReactionTemplate::condensation(x, new));
        }
    }
    out.sort_by_cached_key(template_prefix);
    out
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Characters that may not appear in an alphabet. `|` separates fields in
/// canonical encodings, `:` joins complex names, and the rest would break CSV
/// headers.
pub const RESERVED_CHARS: &[char] = &['|', ':', ',', '"'];

/// Ordered set of distinct brick symbols.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(Error::config("alphabet", "needs at least one symbol"));
        }
        for (i, c) in symbols.iter().enumerate() {
            if RESERVED_CHARS.contains(c) || c.is_whitespace() || c.is_control() {
                return Err(Error::config(
                    "alphabet",
                    format!("symbol {c:?} is reserved"),
                ));
            }
            if symbols[..i].contains(c) {
                return Err(Error::config(
                    "alphabet",
                    format!("symbol {c:?} appears twice"),
                ));
            }
        }
        Ok(Alphabet { symbols })
    }

    pub fn binary() -> Self {
        Alphabet {
            symbols: vec!['A', 'B'],
        }
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, c: char) -> bool {
        self.symbols.contains(&c)
    }

    /// Parses a sequence, rejecting empty strings and foreign symbols.
    pub fn parse(&self, seq: &str) -> Result<Species> {
        if seq.is_empty() {
            return Err(Error::Input("species must have at least one brick".into()));
        }
        if let Some(c) = seq.chars().find(|c| !self.contains(*c)) {
            return Err(Error::Input(format!(
                "species {seq:?} uses symbol {c:?} outside the alphabet"
            )));
        }
        Ok(Species(seq.to_owned()))
    }

    /// Every species of length `1..=max_len`, shortest first, then in
    /// alphabet order.
    pub fn all_up_to(&self, max_len: usize) -> Vec<Species> {
        let mut out = Vec::new();
        let mut layer = vec![String::new()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(layer.len() * self.symbols.len());
            for prefix in &layer {
                for &c in &self.symbols {
                    let mut s = prefix.clone();
                    s.push(c);
                    next.push(s);
                }
            }
            out.extend(next.iter().cloned().map(Species));
            layer = next;
        }
        out
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet::binary()
    }
}

impl TryFrom<String> for Alphabet {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Alphabet::new(value.chars())
    }
}

impl From<Alphabet> for String {
    fn from(value: Alphabet) -> Self {
        value.symbols.into_iter().collect()
    }
}

/// A polymer: a non-empty string of bricks. Identity is the sequence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Species(String);

impl Species {
    /// Builds a species without alphabet validation. Panics on an empty string.
    pub fn new(seq: impl Into<String>) -> Self {
        let seq = seq.into();
        assert!(!seq.is_empty(), "species must have at least one brick");
        Species(seq)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Number of bricks.
    pub fn len(&self) -> usize {
        self.0.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn concat(&self, other: &Species) -> Species {
        let mut s = String::with_capacity(self.0.len() + other.0.len());
        s.push_str(&self.0);
        s.push_str(&other.0);
        Species(s)
    }

    /// Splits after `cut` bricks. `cut` must lie in `1..len`.
    pub fn split_at(&self, cut: usize) -> (Species, Species) {
        let byte = self
            .0
            .char_indices()
            .nth(cut)
            .map(|(i, _)| i)
            .expect("cut inside the species");
        (
            Species(self.0[..byte].to_owned()),
            Species(self.0[byte..].to_owned()),
        )
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Species {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// A reaction before a catalyst is attached.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReactionTemplate {
    Cleavage {
        substrate: Species,
        cut: usize,
        left: Species,
        right: Species,
    },
    Condensation {
        first: Species,
        second: Species,
        product: Species,
    },
}

impl ReactionTemplate {
    pub fn cleavage(substrate: &Species, cut: usize) -> Self {
        let (left, right) = substrate.split_at(cut);
        ReactionTemplate::Cleavage {
            substrate: substrate.clone(),
            cut,
            left,
            right,
        }
    }

    pub fn condensation(first: &Species, second: &Species) -> Self {
        ReactionTemplate::Condensation {
            first: first.clone(),
            second: second.clone(),
            product: first.concat(second),
        }
    }

    /// Checks that the stored product or parts agree with the concatenation rule.
    pub fn is_sound(&self) -> bool {
        match self {
            ReactionTemplate::Cleavage {
                substrate,
                cut,
                left,
                right,
            } => *cut == left.len() && left.concat(right) == *substrate,
            ReactionTemplate::Condensation {
                first,
                second,
                product,
            } => first.concat(second) == *product,
        }
    }
}

impl fmt::Display for ReactionTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReactionTemplate::Cleavage {
                substrate,
                left,
                right,
                ..
            } => write!(f, "{substrate} -> {left} + {right}"),
            ReactionTemplate::Condensation {
                first,
                second,
                product,
            } => write!(f, "{first} + {second} -> {product}"),
        }
    }
}

/// Temporary catalyst-substrate complex formed in the first step of a
/// condensation. Not a species: it never takes part in a template.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Complex {
    pub catalyst: Species,
    pub bound: Species,
}

impl Complex {
    pub fn len(&self) -> usize {
        self.catalyst.len() + self.bound.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.catalyst, self.bound)
    }
}

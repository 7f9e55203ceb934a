//! Word lists and the feature layout shared by the encoder, the parser and the
//! neural modules.
//!
//! The feature vector of a grid cell has one slot per noun followed by one slot
//! per adjective, so a noun's feature index is its list position and an
//! adjective's feature index is `nouns.len() + position`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VerbClass {
    PickLike,
    PutLike,
}

/// A spatial preposition with the displacement it denotes on cell indices.
///
/// A cell `t` stands in the relation to a referent cell `r` when
/// `t = r + k * direction` for some integer `1 <= k <= range` (unbounded when
/// `range` is `None`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preposition {
    pub name: String,
    pub surface: String,
    pub direction: [i32; 3],
    #[serde(default)]
    pub range: Option<u32>,
}

impl Preposition {
    pub fn new(name: &str, surface: &str, direction: [i32; 3]) -> Self {
        Preposition {
            name: name.to_string(),
            surface: surface.to_string(),
            direction,
            range: None,
        }
    }

    /// Whether `target` relates to `referent` through this preposition.
    pub fn relates(&self, referent: [usize; 3], target: [usize; 3]) -> bool {
        let mut steps: Option<i64> = None;
        for axis in 0..3 {
            let delta = target[axis] as i64 - referent[axis] as i64;
            let dir = self.direction[axis] as i64;
            if dir == 0 {
                if delta != 0 {
                    return false;
                }
                continue;
            }
            if delta % dir != 0 {
                return false;
            }
            let k = delta / dir;
            match steps {
                Some(prev) if prev != k => return false,
                _ => steps = Some(k),
            }
        }
        match steps {
            Some(k) if k >= 1 => self.range.is_none_or(|r| k <= r as i64),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    nouns: Vec<String>,
    adjectives: Vec<String>,
    prepositions: Vec<Preposition>,
    verbs: BTreeMap<String, VerbClass>,
    index: BTreeMap<String, usize>,
    prep_index: BTreeMap<String, usize>,
}

pub const DETERMINERS: [&str; 3] = ["the", "a", "an"];
pub const PRONOUNS: [&str; 1] = ["it"];

const PICK_VERBS: [&str; 4] = ["pick up", "grab", "fetch", "take"];
const PUT_VERBS: [&str; 3] = ["put", "place", "drop"];

const FULL_NOUNS: [&str; 102] = [
    "apple",
    "pear",
    "banana",
    "melon",
    "lemon",
    "lime",
    "peach",
    "plum",
    "grape",
    "cherry",
    "strawberry",
    "tomato",
    "potato",
    "onion",
    "carrot",
    "cucumber",
    "pepper",
    "broccoli",
    "corn",
    "mushroom",
    "ball",
    "can",
    "mug",
    "pot",
    "cup",
    "box",
    "book",
    "bowl",
    "bottle",
    "plate",
    "fork",
    "knife",
    "spoon",
    "spatula",
    "ladle",
    "whisk",
    "pan",
    "kettle",
    "teapot",
    "jar",
    "glass",
    "pitcher",
    "tray",
    "napkin",
    "sponge",
    "towel",
    "brush",
    "scissors",
    "tape",
    "stapler",
    "pen",
    "pencil",
    "marker",
    "eraser",
    "notebook",
    "folder",
    "envelope",
    "phone",
    "remote",
    "keyboard",
    "mouse",
    "laptop",
    "tablet",
    "camera",
    "clock",
    "lamp",
    "candle",
    "vase",
    "flower",
    "plant",
    "toy",
    "block",
    "cube",
    "cylinder",
    "cone",
    "pyramid",
    "puzzle",
    "doll",
    "car",
    "truck",
    "bear",
    "duck",
    "frog",
    "dinosaur",
    "robot",
    "hammer",
    "wrench",
    "screwdriver",
    "drill",
    "battery",
    "bag",
    "wallet",
    "key",
    "coin",
    "hat",
    "glove",
    "sock",
    "shoe",
    "bread",
    "cake",
    "cookie",
    "cereal",
];

const FULL_ADJECTIVES: [&str; 26] = [
    "red", "green", "blue", "yellow", "black", "white", "orange", "purple", "pink", "brown",
    "gray", "small", "big", "large", "tiny", "tall", "short", "round", "square", "flat", "long",
    "thin", "wide", "shiny", "soft", "striped",
];

const FULL_PREPOSITIONS: [(&str, [i32; 3]); 27] = [
    ("to the right of", [1, 0, 0]),
    ("right of", [1, 0, 0]),
    ("on the right of", [1, 0, 0]),
    ("on the right side of", [1, 0, 0]),
    ("at the right of", [1, 0, 0]),
    ("to the left of", [-1, 0, 0]),
    ("left of", [-1, 0, 0]),
    ("on the left of", [-1, 0, 0]),
    ("on the left side of", [-1, 0, 0]),
    ("at the left of", [-1, 0, 0]),
    ("in front of", [0, -1, 0]),
    ("before", [0, -1, 0]),
    ("ahead of", [0, -1, 0]),
    ("at the front of", [0, -1, 0]),
    ("behind", [0, 1, 0]),
    ("in back of", [0, 1, 0]),
    ("at the back of", [0, 1, 0]),
    ("beyond", [0, 1, 0]),
    ("on", [0, 0, 1]),
    ("on top of", [0, 0, 1]),
    ("above", [0, 0, 1]),
    ("over", [0, 0, 1]),
    ("upon", [0, 0, 1]),
    ("atop", [0, 0, 1]),
    ("under", [0, 0, -1]),
    ("below", [0, 0, -1]),
    ("beneath", [0, 0, -1]),
];

const DESK_NOUNS: [&str; 12] = [
    "apple", "pear", "ball", "can", "mug", "pot", "cup", "box", "book", "bowl", "banana", "bottle",
];
const DESK_ADJECTIVES: [&str; 6] = ["red", "green", "blue", "black", "white", "yellow"];
const DESK_PREPOSITIONS: [(&str, &str, [i32; 3]); 6] = [
    ("right-of", "to the right of", [1, 0, 0]),
    ("left-of", "to the left of", [-1, 0, 0]),
    ("in-front-of", "in front of", [0, -1, 0]),
    ("behind", "behind", [0, 1, 0]),
    ("on", "on", [0, 0, 1]),
    ("under", "under", [0, 0, -1]),
];

fn slug(surface: &str) -> String {
    surface.replace(' ', "-")
}

fn default_verbs() -> BTreeMap<String, VerbClass> {
    PICK_VERBS
        .iter()
        .map(|v| (v.to_string(), VerbClass::PickLike))
        .chain(
            PUT_VERBS
                .iter()
                .map(|v| (v.to_string(), VerbClass::PutLike)),
        )
        .collect()
}

impl Default for Vocabulary {
    /// The deployment-size vocabulary: 102 nouns, 26 adjectives, 27 prepositions.
    fn default() -> Self {
        Vocabulary::new(
            FULL_NOUNS.iter().map(|s| s.to_string()).collect(),
            FULL_ADJECTIVES.iter().map(|s| s.to_string()).collect(),
            FULL_PREPOSITIONS
                .iter()
                .map(|(surface, dir)| Preposition::new(&slug(surface), surface, *dir))
                .collect(),
            default_verbs(),
        )
        .expect("built-in vocabulary is valid")
    }
}

impl Vocabulary {
    pub fn new(
        nouns: Vec<String>,
        adjectives: Vec<String>,
        prepositions: Vec<Preposition>,
        verbs: BTreeMap<String, VerbClass>,
    ) -> Result<Self> {
        let mut vocab = Vocabulary {
            nouns,
            adjectives,
            prepositions,
            verbs,
            index: BTreeMap::new(),
            prep_index: BTreeMap::new(),
        };
        vocab.rebuild_index()?;
        Ok(vocab)
    }

    /// The reduced vocabulary used for desk-scale experiments (12 nouns,
    /// 6 adjectives, 6 prepositions).
    pub fn desk() -> Self {
        Vocabulary::new(
            DESK_NOUNS.iter().map(|s| s.to_string()).collect(),
            DESK_ADJECTIVES.iter().map(|s| s.to_string()).collect(),
            DESK_PREPOSITIONS
                .iter()
                .map(|(name, surface, dir)| Preposition::new(name, surface, *dir))
                .collect(),
            default_verbs(),
        )
        .expect("built-in vocabulary is valid")
    }

    /// Builds the symbol maps and checks that every surface form is claimed by
    /// a single category.
    fn rebuild_index(&mut self) -> Result<()> {
        let mut index = BTreeMap::new();
        for (i, w) in self.nouns.iter().chain(self.adjectives.iter()).enumerate() {
            if w.is_empty() || w.contains(char::is_whitespace) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "noun/adjective `{w}` must be a single word"
                )));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::DuplicateSymbol(w.clone()));
            }
        }
        let mut prep_index = BTreeMap::new();
        let mut surfaces: BTreeMap<&str, ()> = BTreeMap::new();
        for (i, p) in self.prepositions.iter().enumerate() {
            if prep_index.insert(p.name.clone(), i).is_some() {
                return Err(Error::DuplicateSymbol(p.name.clone()));
            }
            if p.direction == [0, 0, 0] {
                return Err(Error::InvalidConfig(alloc::format!(
                    "preposition `{}` has a zero direction",
                    p.name
                )));
            }
            if surfaces.insert(p.surface.as_str(), ()).is_some() {
                return Err(Error::DuplicateSymbol(p.surface.clone()));
            }
        }
        for surface in self.verbs.keys() {
            if surfaces.insert(surface.as_str(), ()).is_some() {
                return Err(Error::DuplicateSymbol(surface.clone()));
            }
        }
        for surface in DETERMINERS.iter().chain(PRONOUNS.iter()) {
            if surfaces.insert(surface, ()).is_some() {
                return Err(Error::DuplicateSymbol(surface.to_string()));
            }
        }
        for w in index.keys() {
            if surfaces.contains_key(w.as_str()) {
                return Err(Error::DuplicateSymbol(w.clone()));
            }
        }
        self.index = index;
        self.prep_index = prep_index;
        Ok(())
    }

    pub fn nouns(&self) -> &[String] {
        &self.nouns
    }

    pub fn adjectives(&self) -> &[String] {
        &self.adjectives
    }

    pub fn prepositions(&self) -> &[Preposition] {
        &self.prepositions
    }

    pub fn verbs(&self) -> &BTreeMap<String, VerbClass> {
        &self.verbs
    }

    pub fn verbs_of(&self, class: VerbClass) -> impl Iterator<Item = &str> {
        self.verbs
            .iter()
            .filter(move |(_, c)| **c == class)
            .map(|(v, _)| v.as_str())
    }

    /// Length `C` of the per-cell feature vector.
    pub fn feature_width(&self) -> usize {
        self.nouns.len() + self.adjectives.len()
    }

    pub fn noun_index(&self, noun: &str) -> Option<usize> {
        self.index
            .get(noun)
            .copied()
            .filter(|&i| i < self.nouns.len())
    }

    /// Feature index of an adjective (offset past the nouns).
    pub fn adjective_index(&self, adjective: &str) -> Option<usize> {
        self.index
            .get(adjective)
            .copied()
            .filter(|&i| i >= self.nouns.len())
    }

    pub fn feature_index(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Word at a feature index.
    pub fn word(&self, feature: usize) -> &str {
        if feature < self.nouns.len() {
            &self.nouns[feature]
        } else {
            &self.adjectives[feature - self.nouns.len()]
        }
    }

    pub fn is_noun(&self, feature: usize) -> bool {
        feature < self.nouns.len()
    }

    pub fn preposition(&self, index: usize) -> &Preposition {
        &self.prepositions[index]
    }

    pub fn preposition_index(&self, name: &str) -> Option<usize> {
        self.prep_index.get(name).copied()
    }

    pub fn verb_class(&self, surface: &str) -> Option<VerbClass> {
        self.verbs.get(surface).copied()
    }

    /// 64-bit FNV-1a digest over every symbol list, in order.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                hash ^= *b as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
            hash ^= 0xff;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        };
        feed(b"nouns");
        for n in &self.nouns {
            feed(n.as_bytes());
        }
        feed(b"adjectives");
        for a in &self.adjectives {
            feed(a.as_bytes());
        }
        feed(b"prepositions");
        for p in &self.prepositions {
            feed(p.name.as_bytes());
            feed(p.surface.as_bytes());
            for d in p.direction {
                feed(&d.to_le_bytes());
            }
            feed(&p.range.unwrap_or(0).to_le_bytes());
        }
        hash
    }
}

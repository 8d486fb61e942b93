use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LocationTerm, RelationKind};
use crate::error::Result;
use crate::scene::Category;

/// Instruction frame around the object phrase, e.g. `"Hand {} to me"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prefix(pub String);

impl Prefix {
    /// Text before and after the `{}` slot.
    pub fn split(&self) -> (&str, &str) {
        match self.0.split_once("{}") {
            Some((lead, trail)) => (lead.trim(), trail.trim()),
            None => (self.0.trim(), ""),
        }
    }

    /// Whether the frame already supplies an article for the object phrase.
    pub fn ends_with_article(&self, lex: &Lexicon) -> bool {
        let (lead, _) = self.split();
        lead.split_whitespace()
            .last()
            .is_some_and(|w| lex.is_article(&w.to_lowercase()))
    }
}

/// Closed vocabulary for the instruction grammar.
///
/// The first entry of each phrase list is the surface form the generator
/// emits; all entries are accepted by the parser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub categories: BTreeMap<Category, Vec<String>>,
    pub colors: Vec<String>,
    pub relations: BTreeMap<RelationKind, Vec<String>>,
    pub locations: BTreeMap<LocationTerm, Vec<String>>,
    pub prefixes: Vec<Prefix>,
    pub articles: Vec<String>,
    /// Function words that end a pre-nominal modifier run.
    pub stopwords: Vec<String>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for Lexicon {
    fn default() -> Self {
        let categories = BTreeMap::from([
            (Category::Bottle, strings(&["bottle", "flask"])),
            (Category::Bowl, strings(&["bowl", "dish"])),
            (Category::Can, strings(&["can", "tin"])),
            (Category::Mug, strings(&["mug", "cup"])),
            (Category::Laptop, strings(&["laptop", "notebook", "computer"])),
            (Category::Camera, strings(&["camera"])),
        ]);
        let relations = BTreeMap::from([
            (
                RelationKind::LeftOf,
                strings(&["to the left of", "on the left of", "left of"]),
            ),
            (
                RelationKind::RightOf,
                strings(&["to the right of", "on the right of", "right of"]),
            ),
            (RelationKind::Behind, strings(&["behind", "in back of"])),
            (
                RelationKind::FrontOf,
                strings(&["in front of", "before"]),
            ),
        ]);
        let locations = BTreeMap::from([
            (LocationTerm::Left, strings(&["on the left", "at the left", "leftmost"])),
            (LocationTerm::Right, strings(&["on the right", "at the right", "rightmost"])),
            (LocationTerm::Front, strings(&["in the front", "at the front", "nearest"])),
            (
                LocationTerm::BehindArea,
                strings(&["in the back", "at the back", "farthest"]),
            ),
        ]);
        Self {
            categories,
            colors: strings(&["red", "green", "blue", "yellow"]),
            relations,
            locations,
            prefixes: [
                "Please give me a {}",
                "Hand {} to me",
                "Grasp {}",
                "Pick {} to me",
                "Pass me {}",
                "Give me {}",
            ]
            .into_iter()
            .map(|s| Prefix(s.to_string()))
            .collect(),
            articles: strings(&["a", "an", "the"]),
            stopwords: strings(&[
                "me", "you", "us", "it", "to", "please", "give", "hand", "grasp", "pick", "pass",
                "get", "bring", "fetch", "grab", "take", "could", "would", "will", "can", "up",
                "and", "i", "want", "need", "that", "which", "is", "one", "of", "on", "in", "at",
            ]),
        }
    }
}

impl Lexicon {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn is_article(&self, token: &str) -> bool {
        self.articles.iter().any(|a| a == token)
    }

    pub fn category_of(&self, token: &str) -> Option<Category> {
        self.categories
            .iter()
            .find(|(_, words)| words.iter().any(|w| w == token))
            .map(|(c, _)| *c)
    }

    pub fn category_word(&self, c: Category) -> &str {
        self.categories
            .get(&c)
            .and_then(|w| w.first())
            .map(String::as_str)
            .unwrap_or_else(|| c.name())
    }

    pub fn relation_phrase(&self, kind: RelationKind) -> String {
        self.relations
            .get(&kind)
            .and_then(|w| w.first())
            .cloned()
            .unwrap_or_else(|| format!("{kind:?}"))
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.iter().any(|s| s == token)
    }
}

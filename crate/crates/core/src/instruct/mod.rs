//! Instruction generation from ground truth and rule-based parsing of
//! free-form instructions into structured queries.

mod generate;
mod lexicon;
mod parse;

pub use generate::{Description, DescriptionKind, Describer};
pub use lexicon::{Lexicon, Prefix};
pub use parse::parse;

use serde::{Deserialize, Serialize};

use crate::scene::Category;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    LeftOf,
    RightOf,
    Behind,
    FrontOf,
}

impl RelationKind {
    pub const ALL: [RelationKind; 4] = [
        RelationKind::LeftOf,
        RelationKind::RightOf,
        RelationKind::Behind,
        RelationKind::FrontOf,
    ];

    /// Absolute-position reading used when a relation phrase has no anchor.
    pub fn as_location(&self) -> LocationTerm {
        match self {
            RelationKind::LeftOf => LocationTerm::Left,
            RelationKind::RightOf => LocationTerm::Right,
            RelationKind::Behind => LocationTerm::BehindArea,
            RelationKind::FrontOf => LocationTerm::Front,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationTerm {
    Left,
    Right,
    Front,
    BehindArea,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub kind: RelationKind,
    pub anchor: StructuredQuery,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructuredQuery {
    pub category: Category,
    /// Pre-nominal modifiers; known colors score against the color histogram,
    /// anything else scores zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub location_terms: Vec<LocationTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<Box<Relation>>,
}

impl StructuredQuery {
    pub fn new(category: Category) -> Self {
        Self {
            category,
            attributes: Vec::new(),
            location_terms: Vec::new(),
            relation: None,
        }
    }

    pub fn with_attribute(mut self, attr: impl Into<String>) -> Self {
        self.attributes.push(attr.into());
        self
    }

    pub fn with_location(mut self, term: LocationTerm) -> Self {
        self.location_terms.push(term);
        self
    }

    pub fn with_relation(mut self, kind: RelationKind, anchor: StructuredQuery) -> Self {
        self.relation = Some(Box::new(Relation { kind, anchor }));
        self
    }

    /// Anchors never carry their own relation.
    pub fn depth_ok(&self) -> bool {
        self.relation
            .as_ref()
            .is_none_or(|r| r.anchor.relation.is_none())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_target_id: Option<u32>,
}

impl Instruction {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            gt_target_id: None,
        }
    }
}

use super::{Instruction, Lexicon, LocationTerm, RelationKind, StructuredQuery};
use crate::error::{Error, Result};
use crate::scene::Category;

/// Lowercases, splits on anything that is not alphanumeric, drops articles.
fn tokenize(text: &str, lex: &Lexicon) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !lex.is_article(t))
        .map(str::to_string)
        .collect()
}

/// Phrase table sorted longest first so the longest match wins.
fn phrase_table<K: Copy>(entries: impl Iterator<Item = (K, String)>, lex: &Lexicon) -> Vec<(K, Vec<String>)> {
    let mut table: Vec<(K, Vec<String>)> = entries
        .map(|(k, p)| (k, tokenize(&p, lex)))
        .filter(|(_, t)| !t.is_empty())
        .collect();
    table.sort_by(|a, b| b.1.len().cmp(&a.1.len()));
    table
}

fn match_at<K: Copy>(tokens: &[String], i: usize, table: &[(K, Vec<String>)]) -> Option<(K, usize)> {
    table
        .iter()
        .find(|(_, p)| tokens[i..].starts_with(p))
        .map(|(k, p)| (*k, p.len()))
}

fn strip_frame(mut tokens: Vec<String>, lex: &Lexicon) -> Vec<String> {
    let mut frames: Vec<(Vec<String>, Vec<String>)> = lex
        .prefixes
        .iter()
        .map(|p| {
            let (lead, trail) = p.split();
            (tokenize(lead, lex), tokenize(trail, lex))
        })
        .collect();
    frames.sort_by(|a, b| b.0.len().cmp(&a.0.len()));
    let lead = frames
        .iter()
        .find(|(lead, _)| !lead.is_empty() && tokens.starts_with(lead));
    if let Some((lead, _)) = lead {
        tokens.drain(..lead.len());
    }
    let trail = frames
        .iter()
        .filter(|(_, trail)| !trail.is_empty() && tokens.len() > trail.len())
        .find(|(_, trail)| tokens.ends_with(trail));
    if let Some((_, trail)) = trail {
        tokens.truncate(tokens.len() - trail.len());
    }
    tokens
}

struct Segment {
    category: Category,
    attributes: Vec<String>,
    locations: Vec<LocationTerm>,
}

fn parse_segment(tokens: &[String], lex: &Lexicon, locations: &[(LocationTerm, Vec<String>)]) -> Option<Segment> {
    let mut rest = Vec::with_capacity(tokens.len());
    let mut found = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if let Some((term, len)) = match_at(tokens, i, locations) {
            found.push(term);
            i += len;
        } else {
            rest.push(tokens[i].clone());
            i += 1;
        }
    }
    let head = rest.iter().rposition(|t| lex.category_of(t).is_some())?;
    let category = lex.category_of(&rest[head])?;
    let mut start = head;
    while start > 0 {
        let t = &rest[start - 1];
        if lex.is_stopword(t) || lex.category_of(t).is_some() {
            break;
        }
        start -= 1;
    }
    Some(Segment {
        category,
        attributes: rest[start..head].to_vec(),
        locations: found,
    })
}

/// Parses a free-form instruction against the closed lexicon.
///
/// Known prefix frames are stripped; the first relation phrase splits the
/// utterance into target and anchor; the last category word before it is the
/// head noun and the modifiers right before the head become attributes. A
/// relation phrase with no anchor noun reads as an absolute location.
pub fn parse(instr: &Instruction, lex: &Lexicon) -> Result<StructuredQuery> {
    let unparseable = |reason: &str| Error::Unparseable {
        text: instr.text.clone(),
        reason: reason.to_string(),
    };
    let tokens = strip_frame(tokenize(&instr.text, lex), lex);
    if tokens.is_empty() {
        return Err(unparseable("no content after the instruction frame"));
    }
    let relations = phrase_table(
        lex.relations
            .iter()
            .flat_map(|(k, ps)| ps.iter().map(move |p| (*k, p.clone()))),
        lex,
    );
    let locations = phrase_table(
        lex.locations
            .iter()
            .flat_map(|(k, ps)| ps.iter().map(move |p| (*k, p.clone()))),
        lex,
    );

    let split = (0..tokens.len()).find_map(|i| match_at(&tokens, i, &relations).map(|(k, len)| (i, k, len)));
    let (target_tokens, relation) = match split {
        Some((i, kind, len)) => {
            let after = &tokens[i + len..];
            // anchors are depth one: ignore anything past a second relation
            let end = (0..after.len())
                .find(|j| match_at(after, *j, &relations).is_some())
                .unwrap_or(after.len());
            (&tokens[..i], Some((kind, &after[..end])))
        }
        None => (&tokens[..], None),
    };

    let target = parse_segment(target_tokens, lex, &locations).ok_or_else(|| unparseable("no category word"))?;
    let mut query = StructuredQuery {
        category: target.category,
        attributes: target.attributes,
        location_terms: target.locations,
        relation: None,
    };
    if let Some((kind, anchor_tokens)) = relation {
        match parse_segment(anchor_tokens, lex, &locations) {
            Some(anchor) => {
                let anchor_query = StructuredQuery {
                    category: anchor.category,
                    attributes: anchor.attributes,
                    location_terms: anchor.locations,
                    relation: None,
                };
                query = query.with_relation(kind, anchor_query);
            }
            None => query.location_terms.push(RelationKind::as_location(&kind)),
        }
    }
    Ok(query)
}

//! Lexical variety and density of comments.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Universal POS tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl Upos {
    pub const ALL: [Upos; 17] = [
        Upos::Adj,
        Upos::Adp,
        Upos::Adv,
        Upos::Aux,
        Upos::Cconj,
        Upos::Det,
        Upos::Intj,
        Upos::Noun,
        Upos::Num,
        Upos::Part,
        Upos::Pron,
        Upos::Propn,
        Upos::Punct,
        Upos::Sconj,
        Upos::Sym,
        Upos::Verb,
        Upos::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::Adj => "ADJ",
            Upos::Adp => "ADP",
            Upos::Adv => "ADV",
            Upos::Aux => "AUX",
            Upos::Cconj => "CCONJ",
            Upos::Det => "DET",
            Upos::Intj => "INTJ",
            Upos::Noun => "NOUN",
            Upos::Num => "NUM",
            Upos::Part => "PART",
            Upos::Pron => "PRON",
            Upos::Propn => "PROPN",
            Upos::Punct => "PUNCT",
            Upos::Sconj => "SCONJ",
            Upos::Sym => "SYM",
            Upos::Verb => "VERB",
            Upos::X => "X",
        }
    }

    /// Nouns, verbs, adjectives and adverbs.
    pub fn is_content(self) -> bool {
        matches!(self, Upos::Noun | Upos::Verb | Upos::Adj | Upos::Adv)
    }
}

impl std::str::FromStr for Upos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.to_ascii_uppercase();
        Upos::ALL
            .into_iter()
            .find(|p| p.as_str() == up)
            .ok_or_else(|| Error::validation(format!("unknown POS tag '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedToken {
    pub surface: String,
    pub lemma: Option<String>,
    pub pos: Upos,
}

/// One token of a POS annotation file, keyed by session and image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosRow {
    pub session_id: String,
    pub image_id: String,
    pub token_index: usize,
    pub surface: String,
    pub lemma: String,
    pub pos: Upos,
}

/// Tokens per `session_id:image_id`, in token order.
pub fn pos_by_comment(rows: &[PosRow]) -> BTreeMap<String, Vec<AnnotatedToken>> {
    let mut sorted: Vec<&PosRow> = rows.iter().collect();
    sorted
        .sort_by(|a, b| (&a.session_id, &a.image_id, a.token_index).cmp(&(&b.session_id, &b.image_id, b.token_index)));
    let mut out: BTreeMap<String, Vec<AnnotatedToken>> = BTreeMap::new();
    for r in sorted {
        out.entry(format!("{}:{}", r.session_id, r.image_id))
            .or_default()
            .push(AnnotatedToken {
                surface: r.surface.clone(),
                lemma: Some(r.lemma.clone()),
                pos: r.pos,
            });
    }
    out
}

/// Whitespace split, non-alphanumeric characters trimmed from both ends,
/// lowercased; tokens left empty are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Distinct case-folded words over word count.
pub fn type_token_ratio<S: AsRef<str>>(words: &[S]) -> Result<f64> {
    if words.is_empty() {
        return Err(Error::InsufficientData("type/token ratio of an empty text".into()));
    }
    let types: HashSet<String> = words.iter().map(|w| w.as_ref().to_lowercase()).collect();
    Ok(types.len() as f64 / words.len() as f64)
}

pub fn token_ttr(tokens: &[AnnotatedToken]) -> Result<f64> {
    let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
    type_token_ratio(&surfaces)
}

/// Share of content words among all tokens.
pub fn lexical_density(tokens: &[AnnotatedToken]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::InsufficientData("lexical density of an empty text".into()));
    }
    Ok(tokens.iter().filter(|t| t.pos.is_content()).count() as f64 / tokens.len() as f64)
}

/// Case-folded counts, most frequent first, ties alphabetical.
pub fn word_frequencies<S: AsRef<str>>(texts: &[S], top_k: Option<usize>) -> Vec<(String, usize)> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for t in texts {
        for w in tokenize(t.as_ref()) {
            *counts.entry(w).or_default() += 1;
        }
    }
    let mut v: Vec<(String, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if let Some(k) = top_k {
        v.truncate(k);
    }
    v
}

/// One comment with its POS annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedComment {
    pub respondent_id: String,
    pub text: String,
    pub tokens: Vec<AnnotatedToken>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalProfile {
    pub respondent_id: String,
    pub comments: usize,
    pub ttr: f64,
    pub lexical_density: f64,
}

/// Comments of at most one character (after trimming) carry no lexical
/// information and are left out.
pub fn is_scorable(text: &str) -> bool {
    text.trim().chars().count() > 1
}

/// Per-respondent mean TTR and lexical density over scorable comments.
/// Respondents with no scorable comment are absent from the result.
pub fn respondent_profiles(comments: &[AnnotatedComment]) -> Vec<LexicalProfile> {
    let mut by: BTreeMap<&str, (usize, f64, f64)> = BTreeMap::new();
    for c in comments {
        if !is_scorable(&c.text) {
            continue;
        }
        let (Ok(t), Ok(d)) = (token_ttr(&c.tokens), lexical_density(&c.tokens)) else {
            continue;
        };
        let e = by.entry(&c.respondent_id).or_default();
        e.0 += 1;
        e.1 += t;
        e.2 += d;
    }
    by.into_iter()
        .map(|(id, (n, t, d))| LexicalProfile {
            respondent_id: id.to_string(),
            comments: n,
            ttr: t / n as f64,
            lexical_density: d / n as f64,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(pos: &[Upos]) -> Vec<AnnotatedToken> {
        pos.iter()
            .enumerate()
            .map(|(i, &p)| AnnotatedToken {
                surface: format!("w{i}"),
                lemma: None,
                pos: p,
            })
            .collect()
    }

    #[test]
    fn ttr_examples() {
        assert_eq!(type_token_ratio(&tokenize("a b c")).unwrap(), 1.0);
        assert_eq!(type_token_ratio(&tokenize("the cat and the dog")).unwrap(), 0.8);
        assert_eq!(type_token_ratio(&tokenize("The the")).unwrap(), 0.5);
        assert!(type_token_ratio::<&str>(&[]).is_err());
    }

    #[test]
    fn density_examples() {
        use Upos::*;
        assert_eq!(lexical_density(&toks(&[Noun, Det, Verb, Adp, Noun])).unwrap(), 0.6);
        assert_eq!(lexical_density(&toks(&[Noun, Noun])).unwrap(), 1.0);
        assert_eq!(lexical_density(&toks(&[Det])).unwrap(), 0.0);
    }

    #[test]
    fn frequencies() {
        assert_eq!(
            word_frequencies(&["a a b"], None),
            vec![("a".into(), 2), ("b".into(), 1)]
        );
        assert_eq!(word_frequencies(&["y x y x x y"], None)[0].0, "x");
        assert!(word_frequencies::<&str>(&[], None).is_empty());
    }

    #[test]
    fn tokenizer_strips_punctuation() {
        assert_eq!(tokenize("  Hello, World!  (ok) "), vec!["hello", "world", "ok"]);
        assert!(tokenize("... --").is_empty());
    }

    #[test]
    fn single_character_comments_skipped() {
        let c = |id: &str, text: &str| AnnotatedComment {
            respondent_id: id.into(),
            text: text.into(),
            tokens: toks(&[Upos::Noun]),
        };
        let p = respondent_profiles(&[c("a", "x"), c("a", "ok then"), c("b", ".")]);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].comments, 1);
    }
}

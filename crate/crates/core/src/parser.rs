//! Deterministic instruction grammar.
//!
//! ```text
//! INSTR := PICKVERB NP
//!        | PUTVERB (PRONOUN | NP0) PREP NP
//! NP    := DET? ADJ* NOUN (PREP NP)?
//! NP0   := DET? ADJ* NOUN
//! ```
//!
//! Prepositional phrases attach to the nearest preceding noun. The direct
//! object of a put-like verb takes no prepositional phrase, so its first
//! following preposition always belongs to the verb.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{Instruction, NounPhrase};
use crate::graph::ProgramGraph;
use crate::vocab::{VerbClass, Vocabulary, DETERMINERS, PRONOUNS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Verb(VerbClass),
    Determiner,
    Adjective,
    Noun,
    Preposition,
    Pronoun,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
    /// Feature index for nouns and adjectives, preposition index for
    /// prepositions.
    pub symbol: Option<usize>,
}

struct Entry {
    words: Vec<String>,
    kind: TokenKind,
    symbol: Option<usize>,
}

fn lexicon(vocab: &Vocabulary) -> Vec<Entry> {
    let entry = |surface: &str, kind, symbol| Entry {
        words: surface.split_whitespace().map(String::from).collect(),
        kind,
        symbol,
    };
    let mut entries = Vec::new();
    for (surface, class) in vocab.verbs() {
        entries.push(entry(surface, TokenKind::Verb(*class), None));
    }
    for (i, p) in vocab.prepositions().iter().enumerate() {
        entries.push(entry(&p.surface, TokenKind::Preposition, Some(i)));
    }
    for d in DETERMINERS {
        entries.push(entry(d, TokenKind::Determiner, None));
    }
    for p in PRONOUNS {
        entries.push(entry(p, TokenKind::Pronoun, None));
    }
    for (i, n) in vocab.nouns().iter().enumerate() {
        entries.push(entry(n, TokenKind::Noun, Some(i)));
    }
    for a in vocab.adjectives() {
        entries.push(entry(a, TokenKind::Adjective, vocab.adjective_index(a)));
    }
    entries
}

/// Lowercases, strips punctuation and segments the text with longest match
/// over the lexicon, so multiword verbs and prepositions become one token.
pub fn tokenize(text: &str, vocab: &Vocabulary) -> Vec<Token> {
    let cleaned: String = text
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '-' || c == '\'' {
                c.to_lowercase().next().unwrap_or(c)
            } else {
                ' '
            }
        })
        .collect();
    let words: Vec<&str> = cleaned.split_whitespace().collect();
    let entries = lexicon(vocab);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let best = entries
            .iter()
            .filter(|e| {
                e.words.len() <= words.len() - i
                    && e.words.iter().zip(&words[i..]).all(|(a, b)| a == b)
            })
            .max_by_key(|e| e.words.len());
        match best {
            Some(e) => {
                tokens.push(Token {
                    surface: e.words.join(" "),
                    kind: e.kind,
                    symbol: e.symbol,
                });
                i += e.words.len();
            }
            None => {
                tokens.push(Token {
                    surface: words[i].to_string(),
                    kind: TokenKind::Unknown,
                    symbol: None,
                });
                i += 1;
            }
        }
    }
    tokens
}

struct Cursor<'a> {
    tokens: &'a [Token],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.at)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.at);
        self.at += 1;
        t
    }

    fn expect_end(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(unexpected(t)),
        }
    }
}

fn unexpected(t: &Token) -> Error {
    match t.kind {
        TokenKind::Unknown => Error::UnknownWord(t.surface.clone()),
        TokenKind::Verb(_) => Error::MalformedPhrase(format!("second verb `{}`", t.surface)),
        _ => Error::MalformedPhrase(format!("unexpected `{}`", t.surface)),
    }
}

fn noun_phrase(cur: &mut Cursor<'_>, allow_relation: bool) -> Result<NounPhrase> {
    let determiner = match cur.peek() {
        Some(t) if t.kind == TokenKind::Determiner => cur.next(),
        _ => None,
    };
    let mut adjectives = Vec::new();
    while let Some(t) = cur.peek() {
        if t.kind != TokenKind::Adjective {
            break;
        }
        adjectives.push(t.symbol.expect("adjective symbol"));
        cur.next();
    }
    let noun = match cur.next() {
        Some(t) if t.kind == TokenKind::Noun => t.symbol.expect("noun symbol"),
        Some(t) => {
            return Err(match t.kind {
                TokenKind::Unknown => Error::UnknownWord(t.surface.clone()),
                _ => Error::MalformedPhrase(format!("expected a noun, found `{}`", t.surface)),
            })
        }
        None if determiner.is_some() && adjectives.is_empty() => {
            return Err(Error::MalformedPhrase("dangling determiner".into()))
        }
        None => return Err(Error::MalformedPhrase("expected a noun".into())),
    };
    let mut np = NounPhrase::bare(noun).with_adjectives(adjectives);
    if allow_relation {
        if let Some(t) = cur.peek() {
            if t.kind == TokenKind::Preposition {
                cur.next();
                if cur.peek().is_none() {
                    return Err(Error::MalformedPhrase(format!(
                        "preposition `{}` without object",
                        t.surface
                    )));
                }
                let referent = noun_phrase(cur, true)?;
                np = np.related(t.symbol.expect("preposition symbol"), referent);
            }
        }
    }
    Ok(np)
}

/// Parses an instruction into its expression tree.
pub fn parse_instruction(text: &str, vocab: &Vocabulary) -> Result<Instruction> {
    let tokens = tokenize(text, vocab);
    let verb_at = tokens
        .iter()
        .position(|t| matches!(t.kind, TokenKind::Verb(_)))
        .ok_or(Error::NoVerb)?;
    let TokenKind::Verb(class) = tokens[verb_at].kind else {
        unreachable!()
    };
    let mut cur = Cursor {
        tokens: &tokens[verb_at + 1..],
        at: 0,
    };
    let instruction = match class {
        VerbClass::PickLike => Instruction::Pick(noun_phrase(&mut cur, true)?),
        VerbClass::PutLike => {
            let source = match cur.peek() {
                Some(t) if t.kind == TokenKind::Pronoun => {
                    cur.next();
                    None
                }
                _ => Some(noun_phrase(&mut cur, false)?),
            };
            let prep = match cur.next() {
                Some(t) if t.kind == TokenKind::Preposition => {
                    t.symbol.expect("preposition symbol")
                }
                Some(t) => return Err(unexpected(t)),
                None => {
                    return Err(Error::MalformedPhrase(
                        "placement needs a preposition".into(),
                    ))
                }
            };
            if cur.peek().is_none() {
                return Err(Error::MalformedPhrase("preposition without object".into()));
            }
            let referent = noun_phrase(&mut cur, true)?;
            Instruction::Put {
                source,
                prep,
                referent,
            }
        }
    };
    cur.expect_end()?;
    Ok(instruction)
}

/// Compiles an instruction into its program graph.
pub fn parse(text: &str, vocab: &Vocabulary) -> Result<ProgramGraph> {
    parse_instruction(text, vocab).map(|i| i.compile())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<(TokenKind, String)> {
        tokenize(text, &Vocabulary::desk())
            .into_iter()
            .map(|t| (t.kind, t.surface))
            .collect()
    }

    #[test]
    fn tokenize_examples() {
        use TokenKind::*;
        assert_eq!(
            kinds("Pick up the apple."),
            vec![
                (Verb(VerbClass::PickLike), "pick up".into()),
                (Determiner, "the".into()),
                (Noun, "apple".into())
            ]
        );
        assert_eq!(
            kinds("drop it in front of the mug"),
            vec![
                (Verb(VerbClass::PutLike), "drop".into()),
                (Pronoun, "it".into()),
                (Preposition, "in front of".into()),
                (Determiner, "the".into()),
                (Noun, "mug".into())
            ]
        );
        assert_eq!(kinds("pick up the blorp")[2], (Unknown, "blorp".into()));
    }

    #[test]
    fn longest_match_prefers_multiword_prepositions() {
        let v = Vocabulary::default();
        let t = tokenize("put it on the right side of the cup", &v);
        assert_eq!(t[2].surface, "on the right side of");
        let t = tokenize("put it on top of the cup", &v);
        assert_eq!(t[2].surface, "on top of");
        let t = tokenize("put it on the cup", &v);
        assert_eq!(t[2].surface, "on");
    }

    #[test]
    fn parse_examples() {
        let v = Vocabulary::desk();
        assert_eq!(
            parse("pick up the apple to the right of the black mug", &v).unwrap().to_text(&v),
            "detect(apple); detect(black); detect(mug); and(1,2); shift(right-of,3); and(0,4); locate(5)"
        );
        assert_eq!(
            parse("pick up the apple", &v).unwrap().to_text(&v),
            "detect(apple); locate(0)"
        );
        assert_eq!(
            parse("put the ball on the box behind the red cup", &v)
                .unwrap()
                .to_text(&v),
            "detect(ball); locate(0); detect(box); detect(red); detect(cup); and(3,4); \
             shift(behind,5); and(2,6); position(on,1,7)"
        );
        assert_eq!(
            parse("drop it in front of the mug", &v)
                .unwrap()
                .to_text(&v),
            "detect(mug); position(in-front-of,held,0)"
        );
    }

    #[test]
    fn parse_errors() {
        let v = Vocabulary::desk();
        assert_eq!(parse("the apple", &v).unwrap_err(), Error::NoVerb);
        assert_eq!(
            parse("pick up the blorp", &v).unwrap_err(),
            Error::UnknownWord("blorp".into())
        );
        assert!(matches!(
            parse("pick up the", &v),
            Err(Error::MalformedPhrase(_))
        ));
        assert!(matches!(
            parse("pick up the apple behind", &v),
            Err(Error::MalformedPhrase(_))
        ));
        assert!(matches!(
            parse("put it", &v),
            Err(Error::MalformedPhrase(_))
        ));
        assert!(matches!(
            parse("put it behind", &v),
            Err(Error::MalformedPhrase(_))
        ));
        assert!(matches!(
            parse("pick up it", &v),
            Err(Error::MalformedPhrase(_))
        ));
        assert!(matches!(
            parse("pick up the red", &v),
            Err(Error::MalformedPhrase(_))
        ));
        assert_eq!(
            parse("pick up the apple quickly", &v).unwrap_err(),
            Error::UnknownWord("quickly".into())
        );
        assert!(matches!(
            parse("pick up the apple and grab the mug", &v),
            Err(Error::UnknownWord(_)) | Err(Error::MalformedPhrase(_))
        ));
    }

    #[test]
    fn chains_attach_right() {
        let v = Vocabulary::desk();
        let g = parse("grab the cup on the box to the left of the green bowl", &v).unwrap();
        assert_eq!(
            g.to_text(&v),
            "detect(cup); detect(box); detect(green); detect(bowl); and(2,3); shift(left-of,4); \
             and(1,5); shift(on,6); and(0,7); locate(8)"
        );
    }
}

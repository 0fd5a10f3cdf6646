//! Comment cleaning, per-token script tagging and code-mixing typology.
//!
//! Cleaning replaces links with the literal `URL`, spells emoji out as their
//! lowercase names, drops characters that are neither letters, digits,
//! whitespace nor sentence punctuation, and collapses whitespace.
//!
//! The typology assigns each text one of six code-mixing types. It is a
//! heuristic over script tags and an English lexicon lookup for Latin-script
//! tokens; see [`codemix_type`] for the rules.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;

use crate::corpus::{Comment, Dataset};
use crate::features;
use crate::{Error, Result};

const DEFAULT_EMOJI_TSV: &str = include_str!("../data/emoji_names.tsv");
const DEFAULT_LEXICON: &str = include_str!("../data/english_lexicon.txt");
const DEFAULT_NEUTRAL: &str = include_str!("../data/neutral_terms.txt");

/// Emoji sequence to name table.
#[derive(Debug, Clone)]
pub struct EmojiMap {
    names: HashMap<String, String>,
    max_chars: usize,
}

impl Default for EmojiMap {
    fn default() -> Self {
        EmojiMap::parse_tsv(DEFAULT_EMOJI_TSV).expect("bundled emoji table parses")
    }
}

impl EmojiMap {
    /// Parses `codepoint-sequence \t name` lines, where the sequence is
    /// space-separated hex (`1F44D 1F3FD`). Blank lines and `#` comments are
    /// skipped. Names are lowercased and reduced to letters, digits and
    /// single spaces.
    pub fn parse_tsv(tsv: &str) -> Result<Self> {
        let mut names = HashMap::new();
        let mut max_chars = 1;
        for (lineno, line) in tsv.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: &str| Error::MalformedRow {
                row: lineno as u64 + 1,
                message: m.to_string(),
            };
            let (seq, name) = line.split_once('\t').ok_or_else(|| bad("expected a tab"))?;
            let key = seq
                .split_whitespace()
                .map(|hex| {
                    u32::from_str_radix(hex.trim_start_matches("U+"), 16)
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or_else(|| bad("bad codepoint"))
                })
                .collect::<Result<String>>()?;
            if key.is_empty() {
                return Err(bad("empty codepoint sequence"));
            }
            let name = normalize_name(name);
            if name.is_empty() {
                return Err(bad("empty name"));
            }
            max_chars = max_chars.max(key.chars().count());
            names.insert(key, name);
        }
        Ok(EmojiMap { names, max_chars })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, seq: &str) -> Option<&str> {
        self.names.get(seq).map(String::as_str)
    }

    /// Longest table entry starting at `chars[0]`, as `(name, chars consumed)`.
    fn longest_match(&self, chars: &[char]) -> Option<(&str, usize)> {
        let mut key = String::new();
        let mut best = None;
        for (i, &c) in chars.iter().take(self.max_chars).enumerate() {
            key.push(c);
            if let Some(name) = self.names.get(&key) {
                best = Some((name.as_str(), i + 1));
            }
        }
        best
    }
}

fn normalize_name(name: &str) -> String {
    name.to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Pictographic emoji, dingbats and emoji modifiers/joiners.
pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF | 0x2600..=0x27BF | 0x2B00..=0x2BFF | 0x2300..=0x23FF
        | 0xFE0F | 0x200D | 0x20E3 | 0xE0020..=0xE007F)
}

fn is_kannada(c: char) -> bool {
    ('\u{0C80}'..='\u{0CFF}').contains(&c)
}

fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || (matches!(c as u32, 0xC0..=0x24F | 0x1E00..=0x1EFF) && c.is_alphabetic())
}

fn is_kept_punctuation(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | ',' | '।')
}

fn is_kept_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c) || is_kept_punctuation(c) || c.is_whitespace()
}

fn looks_like_url(token: &str) -> bool {
    let t = token.trim_start_matches(|c: char| !c.is_alphanumeric());
    let lower = t.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

fn replace_urls(text: &str) -> String {
    text.split_whitespace()
        .map(|t| if looks_like_url(t) { "URL" } else { t })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Cleans a comment.
///
/// ```
/// use kanhope::preprocess::{clean, EmojiMap};
///
/// let emoji = EmojiMap::default();
/// assert_eq!(clean("see https://t.co/abc now", &emoji), "see URL now");
/// assert_eq!(clean("a   b\t\tc", &emoji), "a b c");
/// assert_eq!(clean("great 😂", &emoji), "great face with tears of joy");
/// ```
pub fn clean(text: &str, emoji: &EmojiMap) -> String {
    let text = replace_urls(text);

    let chars: Vec<char> = text.chars().collect();
    let mut spelled = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if let Some((name, used)) = emoji.longest_match(&chars[i..]) {
            spelled.push(' ');
            spelled.push_str(name);
            spelled.push(' ');
            i += used;
        } else {
            if !is_emoji(chars[i]) && is_kept_char(chars[i]) {
                spelled.push(chars[i]);
            }
            i += 1;
        }
    }
    // removing characters can expose a `www.` prefix
    replace_urls(&spelled)
}

/// Cleans the text of every comment. A comment whose cleaned text would be
/// empty keeps its original text, since datasets hold no empty comments.
pub fn clean_dataset(d: &Dataset, emoji: &EmojiMap) -> Result<Dataset> {
    let comments = d
        .comments()
        .iter()
        .map(|c| {
            let text = clean(&c.text, emoji);
            Comment {
                text: if text.is_empty() { c.text.clone() } else { text },
                ..c.clone()
            }
        })
        .collect();
    Dataset::new(d.name.clone(), comments)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScriptTag {
    Kannada,
    Latin,
    Digit,
    Emoji,
    Other,
}

fn char_class(c: char) -> Option<ScriptTag> {
    if c.is_numeric() {
        Some(ScriptTag::Digit)
    } else if is_kannada(c) {
        Some(ScriptTag::Kannada)
    } else if is_latin_letter(c) {
        Some(ScriptTag::Latin)
    } else if is_emoji(c) {
        Some(ScriptTag::Emoji)
    } else if c.is_alphabetic() {
        Some(ScriptTag::Other)
    } else {
        // punctuation and symbols do not vote
        None
    }
}

/// Script of a single token: the majority character class, `Other` on ties
/// or when no character votes.
pub fn token_script(token: &str) -> ScriptTag {
    let mut counts: [usize; 5] = [0; 5];
    for c in token.chars().filter_map(char_class) {
        counts[c as usize] += 1;
    }
    let max = *counts.iter().max().unwrap_or(&0);
    if max == 0 {
        return ScriptTag::Other;
    }
    let mut winners = counts.iter().enumerate().filter(|&(_, &n)| n == max);
    let first = winners.next().map(|(i, _)| i);
    if winners.next().is_some() {
        return ScriptTag::Other;
    }
    [
        ScriptTag::Kannada,
        ScriptTag::Latin,
        ScriptTag::Digit,
        ScriptTag::Emoji,
        ScriptTag::Other,
    ][first.unwrap_or(4)]
}

/// One tag per whitespace-separated token.
///
/// ```
/// use kanhope::preprocess::{script_profile, ScriptTag};
/// assert_eq!(
///     script_profile("ನಮ್ಮ desh"),
///     [("ನಮ್ಮ".to_string(), ScriptTag::Kannada), ("desh".to_string(), ScriptTag::Latin)]
/// );
/// ```
pub fn script_profile(text: &str) -> Vec<(String, ScriptTag)> {
    text.split_whitespace()
        .map(|t| (t.to_string(), token_script(t)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MixType {
    /// No code-mixing: one script, one language.
    Type1,
    /// Inter-sentential: several sentences, Kannada in its own script,
    /// English inserted in Latin script.
    Type2,
    /// Kannada written only in Latin script.
    Type3,
    /// Both scripts inside one sentence, or inside one word.
    Type4,
    /// Intra-sentential: Latin script only, English and romanized Kannada
    /// interleaved.
    Type5,
    /// Inter- and intra-sentential evidence together.
    Type6,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenTag {
    pub token: String,
    pub script: ScriptTag,
    /// Language guess for Latin tokens: `Some(true)` for English lexicon
    /// hits, `Some(false)` for romanized Kannada, `None` for non-Latin tokens
    /// and language-neutral address terms.
    pub is_english: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeMixProfile {
    pub token_tags: Vec<TokenTag>,
    /// Dominant script of each sentence.
    pub sentence_scripts: Vec<ScriptTag>,
    pub mix_type: MixType,
}

/// Lexicon and thresholds used by [`codemix_type`].
#[derive(Debug, Clone)]
pub struct CodeMixConfig {
    english: HashSet<String>,
    neutral: HashSet<String>,
    /// A Latin-script run counts as English/Kannada interleaving when at
    /// least this share of its language-bearing tokens are English (and not
    /// all of them are).
    pub min_english_share: f64,
}

impl Default for CodeMixConfig {
    fn default() -> Self {
        CodeMixConfig {
            english: parse_word_list(DEFAULT_LEXICON),
            neutral: parse_word_list(DEFAULT_NEUTRAL),
            min_english_share: 0.10,
        }
    }
}

fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

impl CodeMixConfig {
    pub fn with_lexicon(mut self, lexicon: &str) -> Self {
        self.english = parse_word_list(lexicon);
        self
    }

    pub fn load_lexicon(self, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(self.with_lexicon(&text))
    }

    pub fn lexicon_len(&self) -> usize {
        self.english.len()
    }

    /// `None` for language-neutral address terms (sir, bro, ...).
    pub fn is_english(&self, token: &str) -> Option<bool> {
        let word: String = token
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        if word.is_empty() || self.neutral.contains(&word) {
            None
        } else {
            Some(self.english.contains(&word))
        }
    }

    /// Whether a sequence of language guesses interleaves English with
    /// romanized Kannada.
    fn interleaves(&self, guesses: impl Iterator<Item = bool>) -> bool {
        let (mut english, mut total) = (0usize, 0usize);
        for g in guesses {
            total += 1;
            english += usize::from(g);
        }
        english > 0 && english < total && english as f64 >= self.min_english_share * total as f64
    }
}

fn dominant_script(tokens: &[(String, ScriptTag)]) -> ScriptTag {
    let kn = tokens.iter().filter(|t| t.1 == ScriptTag::Kannada).count();
    let lat = tokens.iter().filter(|t| t.1 == ScriptTag::Latin).count();
    match kn.cmp(&lat) {
        std::cmp::Ordering::Greater => ScriptTag::Kannada,
        std::cmp::Ordering::Less => ScriptTag::Latin,
        std::cmp::Ordering::Equal if kn == 0 => {
            tokens.first().map_or(ScriptTag::Other, |t| t.1)
        }
        std::cmp::Ordering::Equal => ScriptTag::Other,
    }
}

/// Profiles a text and assigns its code-mixing type.
///
/// Rules, over alphabetic (Kannada or Latin) tokens:
///
/// * Kannada script only: `Type1`.
/// * Latin script only: `Type1` if every language-bearing token is English,
///   `Type5` if English and romanized Kannada interleave with an English share
///   of at least [`CodeMixConfig::min_english_share`], else `Type3`.
/// * Both scripts: `Type4` if a single token mixes the two scripts or the
///   text is one sentence; otherwise `Type6` when the Latin tokens themselves
///   interleave English and romanized Kannada, else `Type2`.
/// * No alphabetic tokens: `Unknown`.
pub fn codemix_type(text: &str, config: &CodeMixConfig) -> CodeMixProfile {
    let tags = script_profile(text);
    let token_tags: Vec<TokenTag> = tags
        .iter()
        .map(|(token, script)| TokenTag {
            token: token.clone(),
            script: *script,
            is_english: (*script == ScriptTag::Latin)
                .then(|| config.is_english(token))
                .flatten(),
        })
        .collect();
    let sentence_scripts: Vec<ScriptTag> = features::sentences(text)
        .into_iter()
        .map(|s| dominant_script(&script_profile(s)))
        .collect();

    let has_kannada = tags.iter().any(|t| t.1 == ScriptTag::Kannada);
    let has_latin = tags.iter().any(|t| t.1 == ScriptTag::Latin);
    let token_internal_mix = text
        .split_whitespace()
        .any(|t| t.chars().any(is_kannada) && t.chars().any(is_latin_letter));
    let latin_guesses = || {
        token_tags
            .iter()
            .filter(|t| t.script == ScriptTag::Latin)
            .filter_map(|t| t.is_english)
    };

    let mix_type = match (has_kannada, has_latin) {
        (false, false) => MixType::Unknown,
        (true, false) => MixType::Type1,
        (false, true) => {
            let guesses: Vec<bool> = latin_guesses().collect();
            if guesses.is_empty() || guesses.iter().all(|&g| !g) {
                MixType::Type3
            } else if guesses.iter().all(|&g| g) {
                MixType::Type1
            } else if config.interleaves(guesses.into_iter()) {
                MixType::Type5
            } else {
                MixType::Type3
            }
        }
        (true, true) => {
            if token_internal_mix || sentence_scripts.len() < 2 {
                MixType::Type4
            } else if config.interleaves(latin_guesses()) {
                MixType::Type6
            } else {
                MixType::Type2
            }
        }
    };

    CodeMixProfile {
        token_tags,
        sentence_scripts,
        mix_type,
    }
}

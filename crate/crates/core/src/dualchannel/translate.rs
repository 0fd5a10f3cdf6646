use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Where translations come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslationMode {
    /// Exact-match lookups in a cache file; misses return the input.
    FileCache,
    /// Every text translates to itself.
    Identity,
    /// Cache first, then `POST {"q": text, "target": "en"}` to `url`,
    /// expecting `{"translatedText": ...}`.
    Http { url: String },
}

/// Translation source with an in-memory cache mirrored to an optional TSV
/// file of `source \t english` lines. Tabs, newlines, carriage returns and
/// backslashes inside fields are written as `\t`, `\n`, `\r` and `\\`.
#[derive(Debug, Clone)]
pub struct TranslationProvider {
    mode: TranslationMode,
    cache: HashMap<String, String>,
    cache_path: Option<PathBuf>,
    requests: usize,
    timeout: Duration,
}

pub fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

pub fn unescape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn parse_cache(text: &str) -> Result<HashMap<String, String>> {
    let mut cache = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (src, en) = line.split_once('\t').ok_or_else(|| Error::MalformedRow {
            row: n as u64 + 1,
            message: "expected `source<TAB>english`".into(),
        })?;
        cache.insert(unescape_field(src), unescape_field(en));
    }
    Ok(cache)
}

impl TranslationProvider {
    pub fn identity() -> Self {
        TranslationProvider {
            mode: TranslationMode::Identity,
            cache: HashMap::new(),
            cache_path: None,
            requests: 0,
            timeout: Duration::from_secs(10),
        }
    }

    pub fn from_map(cache: HashMap<String, String>) -> Self {
        TranslationProvider {
            mode: TranslationMode::FileCache,
            cache,
            ..Self::identity()
        }
    }

    pub fn file_cache(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(TranslationProvider {
            cache_path: Some(path.to_path_buf()),
            ..Self::from_map(parse_cache(&text)?)
        })
    }

    /// HTTP mode. An existing cache file is loaded; new translations are
    /// appended to it.
    pub fn http(url: impl Into<String>, cache_path: Option<PathBuf>) -> Result<Self> {
        let cache = match &cache_path {
            Some(p) if p.exists() => {
                parse_cache(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?
            }
            _ => HashMap::new(),
        };
        Ok(TranslationProvider {
            mode: TranslationMode::Http { url: url.into() },
            cache,
            cache_path,
            ..Self::identity()
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn mode(&self) -> &TranslationMode {
        &self.mode
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    /// HTTP requests sent so far.
    pub fn requests(&self) -> usize {
        self.requests
    }

    /// English text and whether it was served from the cache.
    pub fn translate(&mut self, text: &str) -> (String, bool) {
        let (english, from_cache, _) = self.lookup(text);
        (english, from_cache)
    }

    /// English text and whether it is an actual translation rather than the
    /// input echoed back.
    pub fn translate_flagged(&mut self, text: &str) -> (String, bool) {
        let (english, _, translated) = self.lookup(text);
        (english, translated)
    }

    fn lookup(&mut self, text: &str) -> (String, bool, bool) {
        if let Some(hit) = self.cache.get(text) {
            return (hit.clone(), true, true);
        }
        let TranslationMode::Http { url } = &self.mode else {
            return (text.to_string(), false, false);
        };
        let url = url.clone();
        self.requests += 1;
        match self.request(&url, text) {
            Ok(english) => {
                if let Err(e) = self.remember(text, &english) {
                    log::warn!("could not append to translation cache: {e}");
                }
                (english, false, true)
            }
            Err(e) => {
                log::warn!("translation request failed ({e}); using the source text");
                (text.to_string(), false, false)
            }
        }
    }

    fn request(&self, url: &str, text: &str) -> std::result::Result<String, String> {
        #[derive(Deserialize)]
        struct Reply {
            #[serde(rename = "translatedText")]
            translated_text: String,
        }
        let reply: Reply = ureq::post(url)
            .timeout(self.timeout)
            .send_json(serde_json::json!({ "q": text, "target": "en" }))
            .map_err(|e| e.to_string())?
            .into_json()
            .map_err(|e| e.to_string())?;
        Ok(reply.translated_text)
    }

    fn remember(&mut self, src: &str, english: &str) -> Result<()> {
        self.cache.insert(src.to_string(), english.to_string());
        if let Some(path) = &self.cache_path {
            let mut f = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            writeln!(f, "{}\t{}", escape_field(src), escape_field(english)).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

use std::collections::HashSet;

use kanhope::preprocess::{clean, codemix_type, script_profile, CodeMixConfig, EmojiMap, MixType};
use proptest::prelude::*;

const SAMPLES: &str = include_str!("fixtures/codemix_samples.tsv");

fn emoji() -> EmojiMap {
    EmojiMap::parse_tsv("1F60A\tsmiling face\n1F44D\tthumbs up\n1F44D 1F3FD\tthumbs up medium skin tone\n2764 FE0F\tred heart\n")
        .unwrap()
}

/// Text built from pieces that exercise every cleaning rule.
fn messy_text() -> impl Strategy<Value = String> {
    let piece = prop::sample::select(vec![
        "ನಮ್ಮ", "ದೇಶ", "namma", "Desh", "support", "2021", "3.5", " ", "  ", "\t", "\n", ".", "!", "?", ",",
        "।", "#", "@", "*", "(", ")", "😊", "👍", "🏽", "\u{200D}", "❤️", "🫠", "http://t.co/x", "https://a.b/c?d=1",
        "www.x.org", "w", "ww", "é", "ß", "ñ", "\u{0CCD}", "-", "_", "'", "\"",
    ]);
    prop::collection::vec(piece, 0..24).prop_map(|ps| ps.concat())
}

fn english_or_kannada() -> impl Strategy<Value = String> {
    let word = prop::sample::select(vec![
        "ನಮ್ಮ", "ದೇಶ", "ಸರಿ", "namma", "deshanu", "thara", "border", "support", "sir", "best", "wishes", "tiktok",
        "ಗೆ", "ok", "...", ".", "!", "12", "😊",
    ]);
    prop::collection::vec(word, 0..16).prop_map(|ws| ws.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn clean_is_idempotent(text in messy_text()) {
        let e = emoji();
        let once = clean(&text, &e);
        prop_assert_eq!(clean(&once, &e), once);
    }

    #[test]
    fn clean_only_uses_input_characters_urls_and_emoji_names(text in messy_text()) {
        let e = emoji();
        let out = clean(&text, &e);
        let mut allowed: HashSet<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        allowed.extend("URL".chars());
        allowed.extend("smiling face thumbs up medium skin tone red heart".chars());
        for c in out.chars() {
            prop_assert!(allowed.contains(&c), "{:?} introduced {:?}", text, c);
        }
        prop_assert!(!out.contains("  ") && out.trim() == out);
        prop_assert!(!out.chars().any(|c| c.is_whitespace() && c != ' '));
    }

    #[test]
    fn every_token_gets_one_script_tag(text in english_or_kannada()) {
        let profile = script_profile(&text);
        let tokens: Vec<&str> = text.split_whitespace().collect();
        prop_assert_eq!(profile.len(), tokens.len());
        for ((tok, _), want) in profile.iter().zip(tokens) {
            prop_assert_eq!(tok.as_str(), want);
        }
    }

    #[test]
    fn whitespace_padding_changes_no_profile(text in english_or_kannada(), left in "[ \t\n]{0,4}", right in "[ \t\n]{0,4}") {
        let cfg = CodeMixConfig::default();
        let padded = format!("{left}{text}{right}");
        prop_assert_eq!(script_profile(&padded), script_profile(&text));
        prop_assert_eq!(codemix_type(&padded, &cfg), codemix_type(&text, &cfg));
    }
}

#[test]
fn reference_samples_get_their_mix_type() {
    let cfg = CodeMixConfig::default();
    let mut seen = 0;
    for line in SAMPLES.lines() {
        let (want, text) = line.split_once('\t').unwrap();
        let got = codemix_type(text, &cfg).mix_type;
        assert_eq!(format!("{got:?}"), want, "{text}");
        seen += 1;
    }
    assert_eq!(seen, 6);
    assert_ne!(codemix_type("Namma deshanu", &cfg).mix_type, MixType::Unknown);
}

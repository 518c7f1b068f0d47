#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use igtkit::IgtRecord;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// NFC-stable characters from several scripts, plus the characters the
/// interleaved codec has to escape.
const LETTERS: &[char] = &[
    'a', 'k', 'q', 'ž', 'ē', 'ɔ', 'ɛ', 'ũ', 'ʔ', 'ŋ', 'ø', 'ß', 'λ', 'ж', 'ש', 'ب', 'क', 'ひ', '語', 'ᐃ', '0', '7',
];
const MARKS: &[char] = &['(', ')', '\\', '.', '\''];

/// A morpheme with at least one letter, so it is never read as punctuation.
pub fn morpheme(rng: &mut StdRng) -> String {
    let len = rng.gen_range(1..=4);
    let mut s: String = (0..len).map(|_| *LETTERS.choose(rng).unwrap()).collect();
    if rng.gen_bool(0.2) {
        let at = rng.gen_range(0..=s.chars().count());
        let mark = *MARKS.choose(rng).unwrap();
        let idx = s.char_indices().nth(at).map_or(s.len(), |(i, _)| i);
        s.insert(idx, mark);
    }
    s
}

/// Word shapes: one boundary character (`""`, `"-"` or `"="`) per morpheme,
/// the first always `""`.
pub fn shape(rng: &mut StdRng, max_words: usize) -> Vec<Vec<&'static str>> {
    let words = rng.gen_range(1..=max_words);
    (0..words)
        .map(|_| {
            let n = rng.gen_range(1..=4);
            (0..n)
                .map(|i| {
                    if i == 0 {
                        ""
                    } else if rng.gen_bool(0.7) {
                        "-"
                    } else {
                        "="
                    }
                })
                .collect()
        })
        .collect()
}

pub fn fill(rng: &mut StdRng, shape: &[Vec<&str>]) -> String {
    shape
        .iter()
        .map(|w| w.iter().map(|b| format!("{b}{}", morpheme(rng))).collect::<String>())
        .collect::<Vec<_>>()
        .join(" ")
}

/// A segmentation and gloss line with identical structure.
pub fn aligned_pair(rng: &mut StdRng, max_words: usize) -> (String, String) {
    let s = shape(rng, max_words);
    (fill(rng, &s), fill(rng, &s))
}

/// Plain ASCII gloss-like line, for metric tests.
pub fn ascii_line(rng: &mut StdRng, max_words: usize) -> String {
    const POOL: &[&str] = &["DET", "PL", "1SG", "cat", "run", "PST", "ERG", "be", "3SG", "NEG"];
    let words = rng.gen_range(1..=max_words);
    (0..words)
        .map(|_| {
            let n = rng.gen_range(1..=3);
            let mut w = String::new();
            for i in 0..n {
                if i > 0 {
                    w.push(if rng.gen_bool(0.8) { '-' } else { '=' });
                }
                w.push_str(POOL.choose(rng).unwrap());
            }
            w
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn tokens(rng: &mut StdRng, max_len: usize) -> Vec<u8> {
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| rng.gen_range(0..4)).collect()
}

pub fn record(id: &str, transcription: &str, seg: Option<&str>, glosses: &str) -> IgtRecord {
    let mut r = IgtRecord::new(id, transcription, glosses);
    r.segmentation = seg.map(str::to_string);
    r
}

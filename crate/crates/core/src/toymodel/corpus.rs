// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded byte corpora with era-specific marker bytes.
//!
//! Each era owns a disjoint four-byte alphabet; its planted n-grams are the
//! sixteen bigrams over that alphabet. Documents interleave era words (runs
//! of 2 to 4 marker bytes) with language filler that contains no marker
//! bytes.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::acts::{EraLabel, Language};
use crate::error::{Error, Result};

pub const DOC_LEN: usize = 64;
/// Probability that the next segment of a document is an era word.
pub const ERA_WORD_RATE: f64 = 0.5;

const EN_FILLER: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
const ZH_FILLER: &[char] = &[
    '的', '一', '是', '在', '不', '了', '有', '和', '人', '这', '中', '大', '为', '上', '个', '国',
];

/// Marker bytes of an era.
pub fn era_alphabet(era: EraLabel) -> &'static [u8; 4] {
    match era {
        EraLabel::Old => b"QJXZ",
        EraLabel::Middle => b"KVWY",
        EraLabel::EarlyModern => b"BFGP",
        EraLabel::Modern => b"DHMT",
    }
}

pub fn planted_ngrams(era: EraLabel) -> Vec<[u8; 2]> {
    let a = era_alphabet(era);
    a.iter()
        .flat_map(|&x| a.iter().map(move |&y| [x, y]))
        .collect()
}

/// Overlapping occurrences of `era`'s planted bigrams in `tokens`.
pub fn planted_ngram_count(tokens: &[u8], era: EraLabel) -> usize {
    let a = era_alphabet(era);
    tokens
        .windows(2)
        .filter(|w| a.contains(&w[0]) && a.contains(&w[1]))
        .count()
}

fn stream_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9) + 1)
}

fn language_index(language: Language) -> u64 {
    match language {
        Language::Zh => 0,
        Language::En => 1,
    }
}

fn push_filler(doc: &mut Vec<u8>, language: Language, rng: &mut Xoshiro256PlusPlus) {
    match language {
        Language::En => {
            for _ in 0..rng.random_range(2..=5) {
                doc.push(EN_FILLER[rng.random_range(0..EN_FILLER.len())]);
            }
            doc.push(b' ');
        }
        Language::Zh => {
            let mut buf = [0u8; 4];
            for _ in 0..rng.random_range(1..=3) {
                let c = ZH_FILLER[rng.random_range(0..ZH_FILLER.len())];
                doc.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            }
        }
    }
}

/// `n_docs` documents of [`DOC_LEN`] bytes for one (era, language).
pub fn synth_corpus(
    era: EraLabel,
    language: Language,
    n_docs: usize,
    seed: u64,
) -> Result<Vec<Vec<u8>>> {
    if n_docs == 0 {
        return Err(Error::InvalidArgument(
            "synth_corpus needs n_docs >= 1".into(),
        ));
    }
    let stream = 2 * era.index() as u64 + language_index(language);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(stream_seed(seed, stream));
    let alphabet = era_alphabet(era);
    Ok((0..n_docs)
        .map(|_| {
            let mut doc = Vec::with_capacity(DOC_LEN + 12);
            while doc.len() < DOC_LEN {
                if rng.random_bool(ERA_WORD_RATE) {
                    for _ in 0..rng.random_range(2..=4) {
                        doc.push(alphabet[rng.random_range(0..4)]);
                    }
                    doc.push(b' ');
                } else {
                    push_filler(&mut doc, language, &mut rng);
                }
            }
            doc.truncate(DOC_LEN);
            doc
        })
        .collect())
}

/// Era-free prompts made of filler only, each `len` bytes.
pub fn neutral_prompts(language: Language, n: usize, len: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng =
        Xoshiro256PlusPlus::seed_from_u64(stream_seed(seed, 100 + language_index(language)));
    (0..n)
        .map(|_| {
            let mut p = Vec::with_capacity(len + 12);
            while p.len() < len {
                push_filler(&mut p, language, &mut rng);
            }
            p.truncate(len);
            p
        })
        .collect()
}

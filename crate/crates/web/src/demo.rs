//! Built-in vocabulary for the demo page.
//!
//! Capitals and languages are their country's vector plus a shared offset,
//! so the analogy arithmetic has something to find. Claim words cluster
//! around a per-topic centroid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vsim_core::EmbeddingModel;

pub const DIM: usize = 48;

pub const COUNTRIES: &[(&str, &str, &str)] = &[
    ("france", "paris", "french"),
    ("spain", "madrid", "spanish"),
    ("italy", "rome", "italian"),
    ("germany", "berlin", "german"),
    ("portugal", "lisbon", "portuguese"),
    ("japan", "tokyo", "japanese"),
    ("greece", "athens", "greek"),
    ("poland", "warsaw", "polish"),
    ("russia", "moscow", "russian"),
    ("china", "beijing", "chinese"),
    ("brazil", "brasilia", "brazilian"),
    ("sweden", "stockholm", "swedish"),
];

pub const TOPICS: &[&[&str]] = &[
    &["vaccine", "vaccines", "autism", "doctors", "children", "shots", "injection"],
    &["covid", "virus", "bleach", "cure", "cures", "masks", "pandemic"],
    &["moon", "landing", "nasa", "astronauts", "staged", "hoax", "apollo"],
    &["5g", "towers", "radiation", "phones", "signal", "antennas"],
    &["election", "votes", "ballots", "rigged", "stolen", "fraud", "machines"],
    &["climate", "warming", "temperatures", "ice", "carbon", "scientists"],
];

pub const FILLER: &[&str] = &[
    "the", "a", "was", "is", "are", "of", "in", "on", "by", "cause", "causes", "spread", "spreads", "never", "really",
    "happened", "fake", "all", "were", "do", "not", "being",
];

pub const CLAIMS: &[(&str, &str)] = &[
    ("fc-001", "Vaccines cause autism in children"),
    ("fc-002", "Drinking bleach cures covid"),
    ("fc-003", "The moon landing was staged by NASA"),
    ("fc-004", "5G towers spread the virus"),
    ("fc-005", "The election was rigged by voting machines"),
    ("fc-006", "Climate scientists fake the temperatures"),
    ("fc-007", "Masks cause radiation"),
];

fn random_vector(rng: &mut ChaCha8Rng) -> Vec<f32> {
    (0..DIM).map(|_| rng.random_range(-1.0f32..1.0)).collect()
}

fn mix(parts: &[(&[f32], f32)]) -> Vec<f32> {
    (0..DIM).map(|i| parts.iter().map(|(v, w)| v[i] * w).sum()).collect()
}

pub fn model() -> EmbeddingModel {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut words = Vec::new();
    let mut vectors = Vec::new();
    let mut push = |word: &str, v: Vec<f32>| {
        words.push(word.to_owned());
        vectors.extend(v);
    };

    let capital_of = random_vector(&mut rng);
    let language_of = random_vector(&mut rng);
    for (country, capital, language) in COUNTRIES {
        let base = random_vector(&mut rng);
        let (n1, n2) = (random_vector(&mut rng), random_vector(&mut rng));
        push(capital, mix(&[(&base, 1.0), (&capital_of, 1.0), (&n1, 0.15)]));
        push(language, mix(&[(&base, 1.0), (&language_of, 1.0), (&n2, 0.15)]));
        push(country, base);
    }
    for topic in TOPICS {
        let centroid = random_vector(&mut rng);
        for word in *topic {
            let own = random_vector(&mut rng);
            push(word, mix(&[(&centroid, 0.8), (&own, 0.6)]));
        }
    }
    for word in FILLER {
        let v = random_vector(&mut rng);
        push(word, mix(&[(&v, 0.5)]));
    }
    EmbeddingModel::from_rows(words, vectors, DIM).expect("demo rows are valid")
}

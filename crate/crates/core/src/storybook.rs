//! Synthetic children's-story generator, an offline stand-in for a corpus of
//! public-domain books, plus a cue-word cloze set for testing
//! self-supervised training in isolation.
//!
//! Each story has a small cast whose members appear with Zipf-like
//! frequencies, so a story has main and minor characters. Within a story every character owns a
//! signature action (`Then Tom carried the lamp.`), so a query repeating
//! the action is answerable from a matching context window. Every name has
//! a fixed species across the whole corpus (`the fox Tom`), knowledge that
//! per-question anonymization removes. Two characters of a story share a
//! species and two share a way of moving, so a query naming both
//! (`the fox XXXXX climbed over the hill`) often needs two context windows
//! combined. Movement sentences draw their
//! preposition from a fixed random table indexed by (verb, place), which a
//! 5-gram model can memorise but a bag of words cannot express.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cbt::{Question, BLANK, CONTEXT_SENTENCES, NUM_CANDIDATES};
use crate::corpus::{Book, Lexicon, SegmentConfig, Split, WordClass};
use crate::error::{Error, Result};
use crate::util::derive_seed;

pub const SIGNATURE_VERBS: &[&str] = &[
    "carried", "opened", "closed", "pulled", "pushed", "watched", "touched", "picked", "dropped",
    "washed", "cooked", "filled", "followed", "kissed", "saved", "hunted", "reached", "showed",
];

pub const OBJECTS: &[&str] = &[
    "table", "chair", "box", "basket", "bag", "key", "book", "letter", "ball", "doll", "bottle",
    "cup", "plate", "spoon", "knife", "sword", "stick", "rope", "bell", "clock", "candle", "lamp",
    "picture", "mirror", "egg", "coat", "hat", "cap", "ring", "coin", "feather", "cake",
];

pub const MOTION_VERBS: &[&str] = &[
    "walked", "hurried", "rushed", "jumped", "climbed", "danced", "looked", "peeped", "moved",
    "passed",
];

pub const PLACES: &[&str] = &[
    "garden", "tree", "forest", "field", "hill", "river", "lake", "pond", "stream", "road",
    "village", "castle", "tower", "cottage", "church", "mill", "bridge", "gate", "fence", "meadow",
];

pub const MOTION_PREPOSITIONS: &[&str] = &[
    "into", "over", "under", "across", "along", "behind", "beside", "past", "through", "toward",
    "beyond", "around",
];

pub const SPECIES: &[&str] = &[
    "wolf", "fox", "bear", "rabbit", "cat", "dog", "bird", "mouse", "horse", "cow", "pig",
    "sheep", "goat", "hen", "duck", "goose", "frog", "owl", "lion", "tiger", "monkey", "donkey",
    "squirrel", "elephant",
];

pub const IDLE_VERBS: &[&str] = &[
    "laughed", "smiled", "sighed", "nodded", "waited", "listened", "wondered", "dreamed",
];

const OPENERS: &[&str] = &["Then", "Soon", "Later", "Next", "Afterwards", "Suddenly", "Meanwhile"];
const ADJECTIVES: &[&str] = &["quiet", "dark", "cold", "bright", "green", "still", "wet", "warm"];

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
const CODAS: &[&str] = &["", "n", "m", "l", "r", "k", "t", "x"];

/// Seed of the corpus-wide tables (names, species, preposition table).
const WORLD_SEED: u64 = 0x5709_b00c;

#[derive(Debug, Clone, PartialEq)]
pub struct StorybookConfig {
    pub books: usize,
    pub stories_per_book: usize,
    pub sentences_per_story: usize,
    pub characters_per_story: usize,
    pub name_pool: usize,
    /// Probability that a movement sentence gets a second destination.
    pub second_destination: f64,
    pub seed: u64,
}

impl Default for StorybookConfig {
    fn default() -> Self {
        StorybookConfig {
            books: 10,
            stories_per_book: 24,
            sentences_per_story: 60,
            characters_per_story: 6,
            name_pool: 60,
            second_destination: 0.4,
            seed: 1,
        }
    }
}

impl StorybookConfig {
    pub fn validate(&self) -> Result<()> {
        if self.books == 0 || self.stories_per_book == 0 || self.sentences_per_story == 0 {
            return Err(Error::Config("books, stories and sentences must be >= 1".into()));
        }
        let cast = self.characters_per_story;
        let max_cast = SIGNATURE_VERBS.len().min(2 * MOTION_VERBS.len());
        if cast < 4 || cast % 2 == 1 || cast > max_cast {
            return Err(Error::Config(format!(
                "characters_per_story must be even and within 4..={max_cast}, got {cast}"
            )));
        }
        // Every species needs two names for casts to pair up.
        let species_with_pairs = (self.name_pool / 2).min(SPECIES.len());
        if self.name_pool < 2 * SPECIES.len() && species_with_pairs < cast / 2 {
            return Err(Error::Config("name_pool too small for the cast".into()));
        }
        if !(0.0..=1.0).contains(&self.second_destination) {
            return Err(Error::Config("second_destination must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Raw text of one generated book.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedBook {
    pub id: String,
    pub split: Split,
    pub text: String,
}

/// Last book is test, the one before valid, the rest train. One or two
/// books are all train.
pub fn split_for(index: usize, books: usize) -> Split {
    if books < 3 || index + 2 < books {
        Split::Train
    } else if index + 2 == books {
        Split::Valid
    } else {
        Split::Test
    }
}

/// Corpus-wide facts shared by every book.
#[derive(Debug, Clone)]
pub struct World {
    pub names: Vec<String>,
    /// Species index per name.
    pub species: Vec<usize>,
    /// Preposition index per (motion verb, place).
    pub preposition_table: Vec<Vec<usize>>,
}

impl World {
    pub fn new(name_pool: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(WORLD_SEED);
        let lex = Lexicon::default();
        let mut names = Vec::with_capacity(name_pool);
        let mut seen = std::collections::HashSet::new();
        while names.len() < name_pool {
            let syllables = rng.gen_range(2..=3);
            let mut s = String::new();
            for _ in 0..syllables {
                s.push_str(ONSETS.choose(&mut rng).unwrap());
                s.push_str(VOWELS.choose(&mut rng).unwrap());
            }
            s.push_str(CODAS.choose(&mut rng).unwrap());
            let known = lex.is_stopword(&s)
                || lex.verbs.contains(&s)
                || lex.common_nouns.contains(&s)
                || lex.prepositions.contains(&s);
            if !known && seen.insert(s.clone()) {
                let mut chars = s.chars();
                let first = chars.next().unwrap().to_uppercase().collect::<String>();
                names.push(first + chars.as_str());
            }
        }
        let mut species: Vec<usize> = (0..name_pool).map(|i| i % SPECIES.len()).collect();
        species.shuffle(&mut rng);
        let preposition_table = (0..MOTION_VERBS.len())
            .map(|_| {
                (0..PLACES.len())
                    .map(|_| rng.gen_range(0..MOTION_PREPOSITIONS.len()))
                    .collect()
            })
            .collect();
        World {
            names,
            species,
            preposition_table,
        }
    }

    pub fn preposition(&self, verb: usize, place: usize) -> &'static str {
        MOTION_PREPOSITIONS[self.preposition_table[verb][place]]
    }
}

struct Character {
    name: usize,
    species: usize,
    verb: usize,
    object: usize,
    motion: usize,
}

/// Characters come in pairs sharing a species; consecutive pairs share a
/// way of moving, so species and motion together single out one character.
fn cast<R: Rng>(world: &World, size: usize, rng: &mut R) -> Vec<Character> {
    let pairs = size / 2;
    let mut by_species: Vec<Vec<usize>> = vec![Vec::new(); SPECIES.len()];
    for (n, &s) in world.species.iter().enumerate() {
        by_species[s].push(n);
    }
    let eligible: Vec<usize> = (0..SPECIES.len()).filter(|&s| by_species[s].len() >= 2).collect();
    let species: Vec<usize> = eligible.choose_multiple(rng, pairs).copied().collect();
    let names: Vec<(usize, usize)> = species
        .iter()
        .flat_map(|&s| {
            by_species[s]
                .choose_multiple(rng, 2)
                .map(move |&n| (n, s))
                .collect::<Vec<_>>()
        })
        .collect();
    let verbs = rand::seq::index::sample(rng, SIGNATURE_VERBS.len(), size).into_vec();
    let objects = rand::seq::index::sample(rng, OBJECTS.len(), size).into_vec();
    let motions = rand::seq::index::sample(rng, MOTION_VERBS.len(), pairs).into_vec();
    let mut cast: Vec<Character> = names
        .into_iter()
        .enumerate()
        .map(|(i, (name, species))| Character {
            name,
            species,
            verb: verbs[i],
            object: objects[i],
            motion: motions[(i / 2 + i % 2) % pairs],
        })
        .collect();
    // Position in the cast sets prominence.
    cast.shuffle(rng);
    cast
}

/// Picks a character with probability proportional to 1 / (rank + 1).
fn pick<'a, R: Rng>(cast: &'a [Character], rng: &mut R) -> &'a Character {
    let total: f64 = (1..=cast.len()).map(|r| 1.0 / r as f64).sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, c) in cast.iter().enumerate() {
        x -= 1.0 / (i + 1) as f64;
        if x <= 0.0 {
            return c;
        }
    }
    cast.last().unwrap()
}

fn movement<R: Rng>(world: &World, motion: usize, cfg: &StorybookConfig, rng: &mut R) -> String {
    let p = rng.gen_range(0..PLACES.len());
    let mut s = format!("{} {} the {}", MOTION_VERBS[motion], world.preposition(motion, p), PLACES[p]);
    if rng.gen_bool(cfg.second_destination) {
        let p2 = rng.gen_range(0..PLACES.len());
        s.push_str(&format!(" and {} the {}", world.preposition(motion, p2), PLACES[p2]));
    }
    s
}

fn sentence<R: Rng>(world: &World, cast: &[Character], cfg: &StorybookConfig, rng: &mut R) -> String {
    let opener = *OPENERS.choose(rng).unwrap();
    let c = pick(cast, rng);
    let name = &world.names[c.name];
    let species = SPECIES[c.species];
    let roll: f64 = rng.gen();
    if roll < 0.22 {
        format!("{opener} {name} {} the {}.", SIGNATURE_VERBS[c.verb], OBJECTS[c.object])
    } else if roll < 0.34 {
        let idle = IDLE_VERBS.choose(rng).unwrap();
        format!("{opener} the {species} {name} {idle}.")
    } else if roll < 0.58 {
        format!("{opener} {name} {}.", movement(world, c.motion, cfg, rng))
    } else if roll < 0.74 {
        format!("{opener} the {species} {name} {}.", movement(world, c.motion, cfg, rng))
    } else if roll < 0.88 {
        let other = &world.names[pick(cast, rng).name];
        let idle = IDLE_VERBS.choose(rng).unwrap();
        format!("{opener} {name} and {other} {idle} together.")
    } else {
        let place = PLACES.choose(rng).unwrap();
        let a = ADJECTIVES.choose(rng).unwrap();
        let b = ADJECTIVES.choose(rng).unwrap();
        format!("The {place} was {a} and {b}.")
    }
}

/// Generates `cfg.books` books. Output depends only on `cfg`.
pub fn generate(cfg: &StorybookConfig) -> Result<Vec<GeneratedBook>> {
    cfg.validate()?;
    let world = World::new(cfg.name_pool);
    Ok((0..cfg.books)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, b as u64));
            let stories: Vec<String> = (0..cfg.stories_per_book)
                .map(|_| {
                    let cast = cast(&world, cfg.characters_per_story, &mut rng);
                    (0..cfg.sentences_per_story)
                        .map(|_| sentence(&world, &cast, cfg, &mut rng))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
            GeneratedBook {
                id: format!("story{:02}", b + 1),
                split: split_for(b, cfg.books),
                text: stories.join("\n\n") + "\n",
            }
        })
        .collect())
}

/// Runs generated text through segmentation and tagging.
pub fn to_books(generated: &[GeneratedBook], lexicon: &Lexicon, seg: &SegmentConfig) -> Vec<Book> {
    generated
        .iter()
        .map(|g| Book::from_text(g.id.clone(), &g.text, g.split, lexicon, seg))
        .collect()
}

/// Writes `<id>.txt` per book and a `splits.txt` manifest.
pub fn write_dir(generated: &[GeneratedBook], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for g in generated {
        let path = dir.join(format!("{}.txt", g.id));
        std::fs::write(&path, &g.text).map_err(|e| Error::io(&path, e))?;
        manifest.push_str(&format!("{}\t{}\n", g.id, g.split));
    }
    let path = dir.join("splits.txt");
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
}

/// The marker placed before the answer's context mention and before the
/// blank in the query.
pub const CUE: &str = "cue";

/// Cloze questions over filler words `w*` and entities `e*` where the
/// answer is the only candidate whose mention follows [`CUE`].
pub fn cue_word_questions(n: usize, seed: u64) -> Vec<Question> {
    const FILLERS: usize = 300;
    const ENTITIES: usize = 60;
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
            let filler = |rng: &mut ChaCha8Rng| format!("w{}", rng.gen_range(0..FILLERS));
            let mut context: Vec<Vec<String>> = (0..CONTEXT_SENTENCES)
                .map(|_| (0..rng.gen_range(5..10)).map(|_| filler(&mut rng)).collect())
                .collect();
            let candidates: Vec<String> = rand::seq::index::sample(&mut rng, ENTITIES, NUM_CANDIDATES)
                .into_iter()
                .map(|k| format!("e{k}"))
                .collect();
            let answer = candidates[rng.gen_range(0..NUM_CANDIDATES)].clone();
            for c in &candidates {
                let extra = rng.gen_range(0..=2) + usize::from(*c != answer);
                for _ in 0..extra {
                    let s = rng.gen_range(0..CONTEXT_SENTENCES);
                    let pos = rng.gen_range(0..=context[s].len());
                    context[s].insert(pos, c.clone());
                }
            }
            // The cued mention goes in last so nothing separates the pair.
            let s = rng.gen_range(0..CONTEXT_SENTENCES);
            let pos = rng.gen_range(0..=context[s].len());
            context[s].splice(pos..pos, [CUE.to_string(), answer.clone()]);
            let mut query: Vec<String> = (0..6).map(|_| filler(&mut rng)).collect();
            let pos = rng.gen_range(0..=query.len());
            query.splice(pos..pos, [CUE.to_string(), BLANK.to_string()]);
            let mut candidates = candidates;
            candidates.sort();
            Question {
                context,
                query,
                candidates,
                answer,
                word_class: WordClass::NamedEntity,
                book_id: "cue".into(),
                passage_index: i,
            }
        })
        .collect()
}

//! Synthetic Overnight-style corpus for self-contained experiments.
//!
//! Eight small domain schemas drive everything: the logical forms, the demo
//! template grammar, the entity lexicon, paraphrased utterances and
//! simulated generator beams with a controlled gold placement.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::beam::BeamCandidate;
use crate::dataset::{Beams, DatasetExample};
use crate::lf::{parse, Formalism, Utterance};
use crate::pairgen::{PairExample, PairSource};
use crate::preprocess::{EntityLexicon, Resources, TemplateGrammar};

struct Numeric {
    token: &'static str,
    phrase: &'static str,
    values: &'static [&'static str],
}

struct Relation {
    token: &'static str,
    phrase: &'static str,
    entities: &'static [(&'static str, &'static str)],
}

struct Schema {
    domain: &'static str,
    types: &'static [(&'static str, &'static str)],
    numeric: &'static [Numeric],
    relations: &'static [Relation],
}

const SCHEMAS: [Schema; 8] = [
    Schema {
        domain: "basketball",
        types: &[("type.player", "player")],
        numeric: &[
            Numeric { token: "numRebounds", phrase: "number of rebounds", values: &["3", "10", "15"] },
            Numeric { token: "numPoints", phrase: "number of points", values: &["10", "20", "30"] },
            Numeric { token: "numAssists", phrase: "number of assists", values: &["2", "5", "8"] },
        ],
        relations: &[
            Relation {
                token: "playerTeam",
                phrase: "team",
                entities: &[("en.team.lakers", "lakers"), ("en.team.celtics", "celtics"), ("en.team.bulls", "bulls")],
            },
            Relation {
                token: "playerPosition",
                phrase: "position",
                entities: &[("en.position.forward", "forward"), ("en.position.point_guard", "point guard")],
            },
        ],
    },
    Schema {
        domain: "blocks",
        types: &[("type.block", "block")],
        numeric: &[
            Numeric { token: "blockLength", phrase: "length", values: &["2", "3", "6"] },
            Numeric { token: "blockWidth", phrase: "width", values: &["1", "4", "5"] },
            Numeric { token: "blockHeight", phrase: "height", values: &["2", "7", "9"] },
        ],
        relations: &[
            Relation {
                token: "blockShape",
                phrase: "shape",
                entities: &[("en.shape.pyramid", "pyramid"), ("en.shape.cube", "cube")],
            },
            Relation {
                token: "blockColor",
                phrase: "color",
                entities: &[("en.color.red", "red"), ("en.color.green", "green"), ("en.color.blue", "blue")],
            },
        ],
    },
    Schema {
        domain: "calendar",
        types: &[("type.meeting", "meeting")],
        numeric: &[
            Numeric { token: "meetingLength", phrase: "length in hours", values: &["1", "2", "3"] },
            Numeric { token: "meetingEndTime", phrase: "end time", values: &["10", "13", "17"] },
        ],
        relations: &[
            Relation {
                token: "meetingLocation",
                phrase: "location",
                entities: &[
                    ("en.location.greenberg_cafe", "greenberg cafe"),
                    ("en.location.central_office", "central office"),
                ],
            },
            Relation {
                token: "meetingAttendee",
                phrase: "attendee",
                entities: &[("en.person.alice", "alice"), ("en.person.bob", "bob")],
            },
        ],
    },
    Schema {
        domain: "housing",
        types: &[("type.housing_unit", "housing unit")],
        numeric: &[
            Numeric { token: "monthlyRent", phrase: "monthly rent", values: &["1500", "2000", "3000"] },
            Numeric { token: "unitSize", phrase: "size in square feet", values: &["500", "800", "1000"] },
        ],
        relations: &[
            Relation {
                token: "unitNeighborhood",
                phrase: "neighborhood",
                entities: &[("en.neighborhood.midtown_west", "midtown west"), ("en.neighborhood.chelsea", "chelsea")],
            },
            Relation {
                token: "housingType",
                phrase: "housing type",
                entities: &[("en.housing.apartment", "apartment"), ("en.housing.condo", "condo")],
            },
        ],
    },
    Schema {
        domain: "publications",
        types: &[("type.article", "article")],
        numeric: &[
            Numeric { token: "publicationYear", phrase: "publication year", values: &["2004", "2010", "2015"] },
            Numeric { token: "numCitations", phrase: "number of citations", values: &["5", "50", "100"] },
        ],
        relations: &[
            Relation {
                token: "articleAuthor",
                phrase: "author",
                entities: &[("en.person.efron", "efron"), ("en.person.lakoff", "lakoff")],
            },
            Relation {
                token: "articleVenue",
                phrase: "venue",
                entities: &[("en.venue.acl", "acl"), ("en.venue.emnlp", "emnlp")],
            },
        ],
    },
    Schema {
        domain: "recipes",
        types: &[("type.recipe", "recipe")],
        numeric: &[
            Numeric { token: "preparationTime", phrase: "preparation time", values: &["10", "30", "60"] },
            Numeric { token: "cookingTime", phrase: "cooking time", values: &["15", "45", "90"] },
        ],
        relations: &[
            Relation {
                token: "recipeCuisine",
                phrase: "cuisine",
                entities: &[("en.cuisine.chinese", "chinese"), ("en.cuisine.italian", "italian")],
            },
            Relation {
                token: "recipeIngredient",
                phrase: "ingredient",
                entities: &[("en.food.rice", "rice"), ("en.food.milk", "milk"), ("en.food.spinach", "spinach")],
            },
        ],
    },
    Schema {
        domain: "restaurants",
        types: &[("type.restaurant", "restaurant")],
        numeric: &[
            Numeric { token: "starRating", phrase: "star rating", values: &["2", "3", "4"] },
            Numeric { token: "priceRating", phrase: "price rating", values: &["1", "2", "3"] },
            Numeric { token: "numReviews", phrase: "number of reviews", values: &["30", "40", "100"] },
        ],
        relations: &[
            Relation {
                token: "restaurantCuisine",
                phrase: "cuisine type",
                entities: &[("en.cuisine.thai", "thai"), ("en.cuisine.french", "french")],
            },
            Relation {
                token: "restaurantLocation",
                phrase: "address",
                entities: &[
                    ("en.location.greenberg_cafe", "greenberg cafe"),
                    ("en.location.pier_street", "pier street"),
                ],
            },
        ],
    },
    Schema {
        domain: "social",
        types: &[("type.person", "person")],
        numeric: &[
            Numeric { token: "personHeight", phrase: "height in cm", values: &["160", "175", "190"] },
            Numeric { token: "birthYear", phrase: "birth year", values: &["1980", "1990", "2000"] },
            Numeric { token: "numFriends", phrase: "number of friends", values: &["10", "100", "500"] },
        ],
        relations: &[
            Relation {
                token: "personEmployer",
                phrase: "employer",
                entities: &[("en.company.mckinsey", "mckinsey"), ("en.company.toyota", "toyota")],
            },
            Relation {
                token: "personEducation",
                phrase: "university",
                entities: &[("en.university.brown", "brown"), ("en.university.ucla", "ucla")],
            },
        ],
    },
];

/// The eight Overnight domains, in report order.
pub const DOMAINS: [&str; 8] =
    ["basketball", "blocks", "calendar", "housing", "publications", "recipes", "restaurants", "social"];

const COMPARATORS: [(&str, &str); 3] = [(">", "larger than"), ("<", "smaller than"), ("=", "")];

/// The demo template grammar in rule-file syntax.
pub fn demo_grammar_text() -> String {
    let mut out = String::from(
        "# Demo grammar for the synthetic Overnight-style domains.\n\
         arg max($1, $2) => $1 that has the largest $2\n\
         arg min($1, $2) => $1 that has the smallest $2\n\
         count($1) => number of $1\n\
         and($1, $2) => $1 whose $2\n\
         >($1:lit) => larger than $1\n\
         <($1:lit) => smaller than $1\n\
         =($1:lit) => $1\n",
    );
    let mut seen = HashSet::new();
    for s in &SCHEMAS {
        out.push_str(&format!("\n# {}\n", s.domain));
        for (token, phrase) in s.types {
            out.push_str(&format!("{token} => {phrase}\n"));
        }
        for n in s.numeric {
            out.push_str(&format!("{} => {}\n", n.token, n.phrase));
            out.push_str(&format!("{}.($1) => {} is $1\n", n.token, n.phrase));
        }
        for r in s.relations {
            out.push_str(&format!("{}.($1) => {} is $1\n", r.token, r.phrase));
            for (token, phrase) in r.entities {
                if seen.insert(*token) {
                    out.push_str(&format!("{token} => {phrase}\n"));
                }
            }
        }
    }
    out
}

/// Entity and type names for the entity-name method, as TSV.
pub fn demo_lexicon_tsv() -> String {
    let mut rows = std::collections::BTreeMap::new();
    for s in &SCHEMAS {
        for (token, phrase) in s.types {
            rows.insert(*token, *phrase);
        }
        for r in s.relations {
            for (token, phrase) in r.entities {
                rows.insert(*token, *phrase);
            }
        }
    }
    rows.into_iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
}

pub fn demo_resources() -> Resources {
    Resources {
        lexicon: Some(EntityLexicon::from_tsv(&demo_lexicon_tsv()).expect("demo lexicon is valid")),
        grammar: Some(TemplateGrammar::parse(&demo_grammar_text()).expect("demo grammar is valid")),
    }
}

/// Every form of a domain in Overnight infix syntax.
fn domain_forms(s: &Schema) -> Vec<String> {
    let mut out = Vec::new();
    for (ty, _) in s.types {
        out.push(ty.to_string());
        for n in s.numeric {
            for (cmp, _) in COMPARATORS {
                for v in n.values {
                    out.push(format!("{ty} ⊓ {}. {cmp} {v}", n.token));
                }
            }
            out.push(format!("arg max({ty}, {})", n.token));
            out.push(format!("arg min({ty}, {})", n.token));
        }
        for r in s.relations {
            for (e, _) in r.entities {
                out.push(format!("{ty} ⊓ {}. {e}", r.token));
                out.push(format!("count({ty} ⊓ {}. {e})", r.token));
            }
        }
    }
    out
}

const PREFIXES: [&str; 5] = ["", "show me ", "find ", "which ", "list every "];

const REWRITES: [(&str, &[&str]); 7] = [
    ("that has the largest", &["with the most", "with the highest"]),
    ("that has the smallest", &["with the least", "with the lowest"]),
    ("larger than", &["more than", "over", "above"]),
    ("smaller than", &["less than", "under", "below"]),
    ("number of", &["count of", "how many"]),
    ("whose", &["with", "where the"]),
    (" is ", &[" equals ", " of "]),
];

/// A noisy paraphrase of a canonical utterance.
fn paraphrase(canonical: &str, rng: &mut ChaCha8Rng) -> String {
    let mut text = canonical.to_string();
    for (from, tos) in REWRITES {
        if text.contains(from) && rng.gen_bool(0.6) {
            text = text.replacen(from, tos.choose(rng).unwrap(), 1);
        }
    }
    let mut words: Vec<&str> = text.split_whitespace().collect();
    if words.len() > 3 && rng.gen_bool(0.2) {
        words.remove(rng.gen_range(1..words.len()));
    }
    format!("{}{}", PREFIXES.choose(rng).unwrap(), words.join(" "))
}

fn similarity(a: &str, b: &str) -> f64 {
    let ta: HashSet<&str> = a.split(|c: char| c.is_whitespace() || c == '(' || c == ')' || c == ',').collect();
    let tb: HashSet<&str> = b.split(|c: char| c.is_whitespace() || c == '(' || c == ')' || c == ',').collect();
    ta.intersection(&tb).count() as f64 / ta.union(&tb).count().max(1) as f64
}

#[derive(Debug, Error)]
#[error("invalid synthetic corpus configuration: {0}")]
pub struct SynthError(String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub examples: usize,
    pub beam_size: usize,
    /// Examples whose gold form is the generator's rank-1 candidate.
    pub gold_at_top: usize,
    /// Examples whose gold form is anywhere in the beam (includes
    /// `gold_at_top`).
    pub gold_in_beam: usize,
    pub seed: u64,
    pub id_prefix: String,
}

impl Default for SynthConfig {
    /// 200 examples, beam size 10, gold at rank 1 for 70% and in the beam
    /// for 95%.
    fn default() -> Self {
        SynthConfig {
            examples: 200,
            beam_size: 10,
            gold_at_top: 140,
            gold_in_beam: 190,
            seed: 7,
            id_prefix: "ex".to_string(),
        }
    }
}

impl SynthConfig {
    /// Same proportions with twice the examples, on a different seed; used to
    /// train the critic.
    pub fn training() -> Self {
        SynthConfig {
            examples: 400,
            gold_at_top: 280,
            gold_in_beam: 380,
            seed: 1007,
            id_prefix: "train".to_string(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub dataset: Vec<DatasetExample>,
    pub beams: Beams,
}

/// Where the gold form sits in a generated beam.
#[derive(Clone, Copy)]
enum Placement {
    Top,
    Lower,
    Absent,
}

pub fn generate_corpus(config: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    let c = config;
    if c.beam_size == 0 {
        return Err(SynthError("beam size must be at least 1".into()));
    }
    if c.gold_at_top > c.gold_in_beam || c.gold_in_beam > c.examples {
        return Err(SynthError("need gold_at_top <= gold_in_beam <= examples".into()));
    }
    if c.gold_in_beam > c.gold_at_top && c.beam_size < 2 {
        return Err(SynthError("gold below rank 1 needs a beam of at least 2".into()));
    }
    let forms: Vec<Vec<String>> = SCHEMAS.iter().map(domain_forms).collect();
    if forms.iter().any(|f| f.len() <= c.beam_size) {
        return Err(SynthError(format!("beam size {} exceeds a domain's form inventory", c.beam_size)));
    }
    let grammar = TemplateGrammar::parse(&demo_grammar_text()).expect("demo grammar is valid");
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);

    let mut placements = Vec::with_capacity(c.examples);
    placements.extend(std::iter::repeat_n(Placement::Top, c.gold_at_top));
    placements.extend(std::iter::repeat_n(Placement::Lower, c.gold_in_beam - c.gold_at_top));
    placements.extend(std::iter::repeat_n(Placement::Absent, c.examples - c.gold_in_beam));
    placements.shuffle(&mut rng);

    let mut dataset = Vec::with_capacity(c.examples);
    let mut beams = Beams::new();
    for (i, placement) in placements.into_iter().enumerate() {
        let d = i % SCHEMAS.len();
        let domain = SCHEMAS[d].domain;
        let pool = &forms[d];
        let gold = pool.choose(&mut rng).unwrap().clone();

        // Simulated generator: near misses of the gold form, best first.
        let mut others: Vec<(f64, &String)> =
            pool.iter().filter(|f| **f != gold).map(|f| (similarity(f, &gold) + rng.gen_range(0.0..0.35), f)).collect();
        others.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        let mut beam: Vec<&String> = others.iter().map(|(_, f)| *f).collect();
        match placement {
            Placement::Top => {
                beam.truncate(c.beam_size - 1);
                beam.insert(0, &gold);
            }
            Placement::Lower => {
                beam.truncate(c.beam_size - 1);
                beam.insert(rng.gen_range(1..c.beam_size), &gold);
            }
            Placement::Absent => beam.truncate(c.beam_size),
        }

        let gold_lf = parse(&gold, Formalism::Overnight).expect("synthetic form parses");
        let canonical = grammar.expand(&gold_lf).expect("demo grammar covers synthetic forms");
        let id = format!("{}-{domain}-{i:04}", c.id_prefix);
        let text = paraphrase(&canonical, &mut rng);
        let utterance = Utterance::new(&id, &text, domain).expect("paraphrase is non-empty");
        let candidates = beam
            .iter()
            .enumerate()
            .map(|(r, f)| {
                let mut cand =
                    BeamCandidate::new(parse(f, Formalism::Overnight).expect("synthetic form parses"), r + 1);
                cand.generator_score = Some(-0.25 * r as f64);
                cand
            })
            .collect();
        beams.insert(id, candidates);
        dataset.push(DatasetExample { utterance, gold_lf });
    }
    Ok(SynthCorpus { dataset, beams })
}

fn vocabulary() -> Vec<String> {
    const SYL: [&str; 20] = [
        "ka", "lo", "mi", "ne", "su", "ta", "ri", "po", "de", "fu", "ga", "hi", "jo", "ku", "me", "no", "pa", "sa",
        "ve", "zu",
    ];
    SYL.iter().flat_map(|a| SYL.iter().map(move |b| format!("{a}{b}"))).collect()
}

/// Labeled pairs built to be separable by token overlap: both sides have
/// ten distinct words, positives share 8 or 9 of them and negatives at most
/// 2. Half the pairs are positive.
pub fn separable_pairs(n: usize, seed: u64) -> Vec<PairExample> {
    let vocab = vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let words: Vec<&String> = vocab.choose_multiple(&mut rng, 20).collect();
        let (a, fresh) = words.split_at(10);
        let positive = i % 2 == 0;
        let keep = if positive { rng.gen_range(8..=9) } else { rng.gen_range(0..=2) };
        let mut b: Vec<&String> = a.choose_multiple(&mut rng, keep).copied().collect();
        b.extend(fresh.iter().take(10 - keep).copied());
        b.shuffle(&mut rng);
        let join = |ws: &[&String]| ws.iter().map(|w| w.as_str()).collect::<Vec<_>>().join(" ");
        out.push(PairExample {
            text_a: join(a),
            text_b: join(&b),
            label: u8::from(positive),
            source: if positive { PairSource::GoldPositive } else { PairSource::BeamNegative },
        });
    }
    out
}

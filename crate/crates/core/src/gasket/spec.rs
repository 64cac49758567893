//! Gasket specifications: dimension, level set `T`, labelling rule and
//! measure, with the JSON form used on disk.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::word::Word;
use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, rational_from_f64, Rational};
use crate::subdivision::cell_count;

/// Rule assigning a level `L_w ∈ T` to every word.
#[derive(Clone, Debug, PartialEq)]
pub enum Labeling {
    Explicit {
        entries: HashMap<Word, u32>,
        default: u32,
    },
    /// Split-mix hash of the word's text encoding and the seed, mapped to a
    /// level by cumulative weights over the levels in ascending order.
    Seeded {
        seed: u64,
        weights: BTreeMap<u32, f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureSpec {
    /// `μ(K_w) = Π_j N(l_j)^{-1}`.
    Natural,
    /// Per-letter weights: for each level, one weight per cell, summing to 1.
    LetterWeights(BTreeMap<u32, Vec<Rational>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GasketSpec {
    pub dimension: usize,
    pub levels: BTreeSet<u32>,
    pub labeling: Labeling,
    pub measure: MeasureSpec,
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Running hash over the bytes of a word's text encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabelHash(u64);

impl LabelHash {
    pub fn start(seed: u64) -> Self {
        LabelHash(splitmix64(seed))
    }

    pub fn feed(self, bytes: &[u8]) -> Self {
        LabelHash(bytes.iter().fold(self.0, |h, &b| splitmix64(h ^ b as u64)))
    }

    /// State of the child word `w.letter` given the state of `w`.
    pub fn extend(self, parent_is_root: bool, letter_text: &str) -> Self {
        let h = if parent_is_root { self } else { self.feed(b".") };
        h.feed(letter_text.as_bytes())
    }

    pub fn unit(self) -> f64 {
        (self.0 >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl GasketSpec {
    /// Homogeneous level-`l` gasket in dimension `d`.
    pub fn homogeneous(d: usize, l: u32) -> Result<Self> {
        let spec = GasketSpec {
            dimension: d,
            levels: [l].into_iter().collect(),
            labeling: Labeling::Explicit {
                entries: HashMap::new(),
                default: l,
            },
            measure: MeasureSpec::Natural,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn seeded(d: usize, weights: &[(u32, f64)], seed: u64) -> Result<Self> {
        let spec = GasketSpec {
            dimension: d,
            levels: weights.iter().map(|&(l, _)| l).collect(),
            labeling: Labeling::Seeded {
                seed,
                weights: weights.iter().copied().collect(),
            },
            measure: MeasureSpec::Natural,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(Error::Semantic(format!(
                "dimension must be >= 2, got {}",
                self.dimension
            )));
        }
        if self.levels.is_empty() {
            return Err(Error::Semantic("level set must be nonempty".into()));
        }
        if let Some(&l) = self.levels.iter().find(|&&l| l < 2) {
            return Err(Error::Semantic(format!("levels must be >= 2, got {l}")));
        }
        let in_t = |l: u32, what: &str| {
            if self.levels.contains(&l) {
                Ok(())
            } else {
                Err(Error::Semantic(format!("{what} label {l} is not in the level set")))
            }
        };
        match &self.labeling {
            Labeling::Explicit { entries, default } => {
                in_t(*default, "default")?;
                for (word, &label) in entries {
                    in_t(label, &format!("entry `{word}`"))?;
                    for letter in word.letters() {
                        in_t(letter.level, &format!("letter level in `{word}`"))?;
                        let n = cell_count(self.dimension, letter.level as usize)?;
                        if letter.cell as u128 > n {
                            return Err(Error::Semantic(format!(
                                "cell {} exceeds N({}) = {n} in `{word}`",
                                letter.cell, letter.level
                            )));
                        }
                    }
                }
            }
            Labeling::Seeded { weights, .. } => {
                for (&l, &w) in weights {
                    in_t(l, "weighted")?;
                    if !(w.is_finite() && w >= 0.0) {
                        return Err(Error::Semantic(format!("weight for level {l} must be >= 0")));
                    }
                }
                if weights.values().sum::<f64>() <= 0.0 {
                    return Err(Error::Semantic("seeded weights must not all be zero".into()));
                }
            }
        }
        if let MeasureSpec::LetterWeights(map) = &self.measure {
            for &l in &self.levels {
                let ws = map.get(&l).ok_or_else(|| {
                    Error::Semantic(format!("measure weights missing for level {l}"))
                })?;
                let n = cell_count(self.dimension, l as usize)? as usize;
                if ws.len() != n {
                    return Err(Error::Semantic(format!(
                        "level {l} needs {n} measure weights, got {}",
                        ws.len()
                    )));
                }
                if ws.iter().any(|w| *w <= Rational::from_integer(0.into())) {
                    return Err(Error::Semantic("measure weights must be positive".into()));
                }
                if ws.iter().sum::<Rational>() != Rational::from_integer(1.into()) {
                    return Err(Error::Semantic(format!(
                        "measure weights for level {l} must sum to 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `L_w`. `hash` must be the running label hash of `w` when the labeling
    /// is seeded (see [`LabelHash`]); it is ignored otherwise.
    pub fn label_with_hash(&self, word: &Word, hash: Option<LabelHash>) -> u32 {
        match &self.labeling {
            Labeling::Explicit { entries, default } => {
                if entries.is_empty() {
                    *default
                } else {
                    entries.get(word).copied().unwrap_or(*default)
                }
            }
            Labeling::Seeded { weights, seed } => {
                let h = hash.unwrap_or_else(|| LabelHash::start(*seed).feed(word.encode().as_bytes()));
                pick_weighted(weights, h.unit())
            }
        }
    }

    pub fn label(&self, word: &Word) -> u32 {
        self.label_with_hash(word, None)
    }

    pub fn seed(&self) -> Option<u64> {
        match &self.labeling {
            Labeling::Seeded { seed, .. } => Some(*seed),
            Labeling::Explicit { .. } => None,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.levels.len() == 1
    }

    /// Canonical JSON (sorted keys and entries).
    pub fn to_json(&self) -> Value {
        let labeling = match &self.labeling {
            Labeling::Explicit { entries, default } => {
                let mut rows: Vec<(String, u32)> =
                    entries.iter().map(|(w, &l)| (w.encode(), l)).collect();
                rows.sort();
                json!({
                    "type": "explicit",
                    "default": default,
                    "entries": rows.into_iter().map(|(w, l)| json!({"label": l, "word": w})).collect::<Vec<_>>(),
                })
            }
            Labeling::Seeded { seed, weights } => json!({
                "type": "seeded",
                "seed": seed,
                "weights": weights.iter().map(|(l, w)| (l.to_string(), json!(w))).collect::<serde_json::Map<_, _>>(),
            }),
        };
        let measure = match &self.measure {
            MeasureSpec::Natural => json!("natural"),
            MeasureSpec::LetterWeights(map) => json!({
                "weights": map.iter().map(|(l, ws)| (l.to_string(), json!(ws.iter().map(format_rational).collect::<Vec<_>>()))).collect::<serde_json::Map<_, _>>()
            }),
        };
        json!({
            "dimension": self.dimension,
            "labeling": labeling,
            "levels": self.levels.iter().collect::<Vec<_>>(),
            "measure": measure,
        })
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(&self.to_json()).expect("spec serialises");
        let hash = Sha256::digest(text.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        raw.into_spec()
    }
}

fn pick_weighted(weights: &BTreeMap<u32, f64>, u: f64) -> u32 {
    let total: f64 = weights.values().sum();
    let mut acc = 0.0;
    let mut last = *weights.keys().next().expect("validated nonempty");
    for (&l, &w) in weights {
        if w <= 0.0 {
            continue;
        }
        acc += w / total;
        last = l;
        if u < acc {
            return l;
        }
    }
    last
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    dimension: usize,
    levels: Vec<u32>,
    #[serde(default)]
    labeling: Option<RawLabeling>,
    #[serde(default)]
    measure: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabeling {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    entries: Vec<RawEntry>,
    #[serde(default)]
    default: Option<u32>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    weights: Option<BTreeMap<String, f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    word: String,
    label: u32,
}

impl RawSpec {
    fn into_spec(self) -> Result<GasketSpec> {
        let levels: BTreeSet<u32> = self.levels.iter().copied().collect();
        let min_level = levels
            .iter()
            .next()
            .copied()
            .ok_or_else(|| Error::Semantic("level set must be nonempty".into()))?;
        let labeling = match self.labeling {
            None => Labeling::Explicit {
                entries: HashMap::new(),
                default: min_level,
            },
            Some(raw) => match raw.kind.as_str() {
                "explicit" => {
                    let mut entries = HashMap::new();
                    for e in raw.entries {
                        let w: Word = e.word.parse()?;
                        if entries.insert(w, e.label).is_some() {
                            return Err(Error::Semantic(format!("duplicate entry `{}`", e.word)));
                        }
                    }
                    Labeling::Explicit {
                        entries,
                        default: raw.default.unwrap_or(min_level),
                    }
                }
                "seeded" => {
                    let seed = raw
                        .seed
                        .ok_or_else(|| Error::Semantic("seeded labeling needs a seed".into()))?;
                    let weights = match raw.weights {
                        None => levels.iter().map(|&l| (l, 1.0)).collect(),
                        Some(map) => map
                            .into_iter()
                            .map(|(k, w)| {
                                k.parse::<u32>()
                                    .map(|l| (l, w))
                                    .map_err(|_| Error::Parse(format!("weight key `{k}` is not a level")))
                            })
                            .collect::<Result<BTreeMap<_, _>>>()?,
                    };
                    Labeling::Seeded { seed, weights }
                }
                other => {
                    return Err(Error::Parse(format!("unknown labeling type `{other}`")));
                }
            },
        };
        let measure = match self.measure {
            None => MeasureSpec::Natural,
            Some(Value::String(s)) if s == "natural" => MeasureSpec::Natural,
            Some(Value::Object(obj)) => {
                let weights = obj
                    .get("weights")
                    .and_then(Value::as_object)
                    .ok_or_else(|| Error::Parse("measure object needs `weights`".into()))?;
                let mut map = BTreeMap::new();
                for (k, arr) in weights {
                    let l: u32 = k
                        .parse()
                        .map_err(|_| Error::Parse(format!("measure key `{k}` is not a level")))?;
                    let ws = arr
                        .as_array()
                        .ok_or_else(|| Error::Parse("measure weights must be arrays".into()))?
                        .iter()
                        .map(|v| match v {
                            Value::String(s) => parse_rational(s),
                            Value::Number(n) => n.as_f64().and_then(rational_from_f64),
                            _ => None,
                        }
                        .ok_or_else(|| Error::Parse(format!("bad measure weight {v}"))))
                        .collect::<Result<Vec<_>>>()?;
                    map.insert(l, ws);
                }
                MeasureSpec::LetterWeights(map)
            }
            Some(other) => return Err(Error::Parse(format!("unknown measure {other}"))),
        };
        let spec = GasketSpec {
            dimension: self.dimension,
            levels,
            labeling,
            measure,
        };
        spec.validate()?;
        Ok(spec)
    }
}

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::CurationError;

/// Category axes used for caption scoring. Scores within one axis sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionTaxonomy {
    /// Car/not-car gate; the first entry is the car category.
    pub gate: Vec<String>,
    pub axes: Vec<Vec<String>>,
    pub high_quality: String,
}

impl Default for CaptionTaxonomy {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>();
        CaptionTaxonomy {
            gate: s(&["car", "not car"]),
            axes: vec![
                s(&[
                    "detailed car model",
                    "simplistic car model",
                    "partial car model",
                ]),
                s(&["realistic car model", "toy car", "fictional car"]),
                s(&["high quality car", "low quality car"]),
            ],
            high_quality: "high quality car".into(),
        }
    }
}

impl CaptionTaxonomy {
    pub fn car(&self) -> &str {
        &self.gate[0]
    }

    /// Gate first, then the remaining axes.
    pub fn all_axes(&self) -> impl Iterator<Item = &[String]> {
        std::iter::once(self.gate.as_slice()).chain(self.axes.iter().map(|a| a.as_slice()))
    }

    pub fn axis_of(&self, category: &str) -> Option<&[String]> {
        self.all_axes().find(|a| a.iter().any(|c| c == category))
    }

    pub fn validate(&self) -> Result<(), CurationError> {
        let mut seen = BTreeSet::new();
        if self.gate.len() < 2 {
            return Err(CurationError::Taxonomy(
                "gate needs a car and a not-car category".into(),
            ));
        }
        for axis in self.all_axes() {
            if axis.is_empty() {
                return Err(CurationError::Taxonomy("empty axis".into()));
            }
            for c in axis {
                if !seen.insert(c.as_str()) {
                    return Err(CurationError::Taxonomy(format!("category {c:?} repeated")));
                }
            }
        }
        if !seen.contains(self.high_quality.as_str()) {
            return Err(CurationError::Taxonomy(format!(
                "{:?} is not a category",
                self.high_quality
            )));
        }
        Ok(())
    }
}

/// Lowercase alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn keywords(category: &str) -> &'static [&'static str] {
    match category {
        "car" => &[
            "car",
            "cars",
            "vehicle",
            "automobile",
            "sedan",
            "suv",
            "truck",
            "coupe",
            "convertible",
            "hatchback",
            "pickup",
            "van",
            "jeep",
            "taxi",
            "limousine",
            "wagon",
            "supercar",
            "racecar",
            "sports car",
        ],
        "not car" => &[
            "chair",
            "table",
            "plane",
            "airplane",
            "aircraft",
            "helicopter",
            "building",
            "house",
            "tree",
            "person",
            "character",
            "animal",
            "boat",
            "ship",
            "furniture",
            "weapon",
            "gun",
            "sword",
            "bottle",
            "lamp",
            "robot",
            "motorcycle",
            "bicycle",
            "train",
            "rock",
            "plant",
            "cup",
            "shoe",
            "sofa",
            "bench",
        ],
        "detailed car model" => &[
            "detailed",
            "intricate",
            "high detail",
            "highly detailed",
            "complex",
        ],
        "simplistic car model" => &[
            "simple",
            "simplistic",
            "basic",
            "low poly",
            "lowpoly",
            "blocky",
            "minimal",
        ],
        "partial car model" => &[
            "partial",
            "incomplete",
            "part of",
            "car part",
            "engine",
            "tire",
            "tyre",
            "rim",
            "steering wheel",
            "chassis",
            "interior",
            "seat",
            "bumper",
            "dashboard",
        ],
        "realistic car model" => &["realistic", "photorealistic", "lifelike", "real"],
        "toy car" => &["toy", "lego", "plastic", "miniature"],
        "fictional car" => &[
            "fictional",
            "futuristic",
            "sci fi",
            "scifi",
            "fantasy",
            "cartoon",
            "concept",
            "cyberpunk",
        ],
        "high quality car" => &[
            "high quality",
            "detailed",
            "realistic",
            "photorealistic",
            "sports car",
            "luxury",
            "textured",
            "polished",
        ],
        "low quality car" => &[
            "low quality",
            "low poly",
            "simple",
            "rough",
            "broken",
            "blocky",
            "crude",
            "untextured",
        ],
        _ => &[],
    }
}

/// Occurrences of each phrase of `category` as a contiguous token run.
pub fn keyword_hits(tokens: &[String], category: &str) -> usize {
    keywords(category)
        .iter()
        .map(|phrase| {
            let words: Vec<&str> = phrase.split(' ').collect();
            tokens
                .windows(words.len())
                .filter(|w| w.iter().zip(&words).all(|(a, b)| a == b))
                .count()
        })
        .sum()
}

/// Per-axis category scores. External scores take precedence and are only
/// renormalized per axis; otherwise keyword hits with add-one smoothing.
/// Keyword lists exist for the default category names only.
pub fn caption_classify(
    caption: Option<&str>,
    taxonomy: &CaptionTaxonomy,
    external: Option<&BTreeMap<String, f64>>,
) -> Result<BTreeMap<String, f64>, CurationError> {
    if let Some(ext) = external {
        return renormalize(ext, taxonomy);
    }
    let caption = caption
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .ok_or(CurationError::EmptyCaption)?;
    let tokens = tokenize(caption);
    let mut out = BTreeMap::new();
    let car_hits = keyword_hits(&tokens, taxonomy.car());
    for (axis_index, axis) in taxonomy.all_axes().enumerate() {
        let is_gate = axis_index == 0;
        let counts: Vec<f64> = axis
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut n = keyword_hits(&tokens, c) as f64 + 1.0;
                // A caption that never mentions a car leans towards not-car.
                if is_gate && i > 0 && car_hits == 0 {
                    n += 1.0;
                }
                n
            })
            .collect();
        let total: f64 = counts.iter().sum();
        for (c, n) in axis.iter().zip(counts) {
            out.insert(c.clone(), n / total);
        }
    }
    Ok(out)
}

fn renormalize(
    ext: &BTreeMap<String, f64>,
    taxonomy: &CaptionTaxonomy,
) -> Result<BTreeMap<String, f64>, CurationError> {
    if let Some((k, _)) = ext.iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(CurationError::Score(k.clone()));
    }
    let mut out = ext.clone();
    for axis in taxonomy.all_axes() {
        let total: f64 = axis.iter().filter_map(|c| ext.get(c)).sum();
        if total > 0.0 {
            for c in axis {
                if let Some(v) = ext.get(c) {
                    out.insert(c.clone(), v / total);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argmax<'a>(s: &BTreeMap<String, f64>, axis: &'a [String]) -> &'a str {
        let mut best = &axis[0];
        for c in axis {
            if s[c] > s[best] {
                best = c;
            }
        }
        best
    }

    #[test]
    fn sports_car_trace() {
        let t = CaptionTaxonomy::default();
        let s = caption_classify(Some("A detailed, realistic sports car"), &t, None).unwrap();
        // car: "car" + "sports car" = 2 hits -> 3/4
        assert!((s["car"] - 0.75).abs() < 1e-12);
        assert!(s["car"] > s["not car"]);
        assert_eq!(argmax(&s, &t.axes[1]), "realistic car model");
        assert_eq!(argmax(&s, &t.axes[0]), "detailed car model");
        // high quality: detailed + realistic + sports car = 3 hits -> 4/5
        assert!((s["high quality car"] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn chair_trace() {
        let t = CaptionTaxonomy::default();
        let s = caption_classify(Some("a wooden chair"), &t, None).unwrap();
        assert!((s["not car"] - 0.75).abs() < 1e-12);
        assert_eq!(argmax(&s, &t.gate), "not car");
    }

    #[test]
    fn word_boundaries() {
        let toks = tokenize("Scar on a CART, car-like");
        assert_eq!(keyword_hits(&toks, "car"), 1);
        assert_eq!(
            keyword_hits(&tokenize("low-poly truck"), "simplistic car model"),
            1
        );
    }

    #[test]
    fn axes_sum_to_one() {
        let t = CaptionTaxonomy::default();
        let s = caption_classify(Some("toy car"), &t, None).unwrap();
        for axis in t.all_axes() {
            let sum: f64 = axis.iter().map(|c| s[c]).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn external_scores_pass_through() {
        let t = CaptionTaxonomy::default();
        let ext: BTreeMap<String, f64> = [
            ("car", 0.6),
            ("not car", 0.2),
            ("high quality car", 0.9),
            ("low quality car", 0.1),
            ("aux", 3.0),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let s = caption_classify(None, &t, Some(&ext)).unwrap();
        assert!((s["car"] - 0.75).abs() < 1e-12);
        assert!((s["high quality car"] - 0.9).abs() < 1e-12);
        assert_eq!(s["aux"], 3.0);
        let mut bad = ext.clone();
        bad.insert("car".into(), f64::NAN);
        assert!(caption_classify(None, &t, Some(&bad)).is_err());
    }

    #[test]
    fn empty_caption_is_an_error() {
        let t = CaptionTaxonomy::default();
        assert!(matches!(
            caption_classify(Some("  "), &t, None),
            Err(CurationError::EmptyCaption)
        ));
        assert!(matches!(
            caption_classify(None, &t, None),
            Err(CurationError::EmptyCaption)
        ));
    }

    #[test]
    fn taxonomy_validation() {
        assert!(CaptionTaxonomy::default().validate().is_ok());
        let mut t = CaptionTaxonomy::default();
        t.axes[1].push("car".into());
        assert!(t.validate().is_err());
        let mut t = CaptionTaxonomy::default();
        t.axes.push(vec![]);
        assert!(t.validate().is_err());
    }
}

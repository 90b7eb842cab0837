//! Substitutions (nonerasing monoid endomorphisms of `{1,…,d}*`), their
//! incidence matrices, composition and the built-in families.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::matrix::IntMatrix;
use crate::words::{abelianize, Alphabet, Letter, Word};
use crate::{Error, Result};

/// A nonerasing substitution on the alphabet `{1, …, d}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Substitution {
    images: Vec<Word>,
    name: Option<String>,
}

impl Substitution {
    /// Creates a substitution from the images of `1, …, d`.
    ///
    /// Every image must be nonempty and use only letters of the alphabet.
    pub fn new(images: Vec<Word>) -> Result<Self> {
        let alphabet = Alphabet::new(images.len())?;
        for (i, img) in images.iter().enumerate() {
            if img.is_empty() {
                return Err(Error::ErasingImage(i as u8 + 1));
            }
            alphabet.check(img.letters())?;
        }
        Ok(Substitution { images, name: None })
    }

    /// Builds a substitution from image strings such as `["12", "13", "1"]`.
    pub fn from_strs(images: &[&str]) -> Result<Self> {
        Self::new(
            images
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<Word>>>()?,
        )
    }

    /// Attaches a display label.
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// The identity substitution on `d` letters.
    pub fn identity(d: usize) -> Result<Self> {
        Alphabet::new(d)?;
        Ok(Substitution {
            images: (0..d)
                .map(|i| Word::new(vec![Letter::from_index(i)]))
                .collect(),
            name: Some("id".into()),
        })
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.images.len()).expect("validated at construction")
    }

    pub fn size(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, letter: Letter) -> &Word {
        &self.images[letter.index()]
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    /// `σ(w) = σ(w₀)σ(w₁)…`.
    pub fn apply(&self, w: &[Letter]) -> Result<Word> {
        self.alphabet().check(w)?;
        let mut out = Vec::with_capacity(w.iter().map(|&l| self.image(l).len()).sum());
        for &l in w {
            out.extend_from_slice(self.image(l).letters());
        }
        Ok(Word::new(out))
    }

    /// The first `limit` letters of `σ(w)` (stops applying once enough
    /// letters are produced).
    pub fn apply_truncated(&self, w: &[Letter], limit: usize) -> Result<Word> {
        self.alphabet().check(w)?;
        let mut out = Vec::with_capacity(limit.min(1 << 20));
        for &l in w {
            if out.len() >= limit {
                break;
            }
            out.extend_from_slice(self.image(l).letters());
        }
        out.truncate(limit);
        Ok(Word::new(out))
    }

    /// Incidence matrix `m_ij = |σ(j)|_i`.
    pub fn incidence(&self) -> IntMatrix {
        let d = self.size();
        let alphabet = self.alphabet();
        let mut m = IntMatrix::zeros(d);
        for (j, img) in self.images.iter().enumerate() {
            let counts = abelianize(img.letters(), alphabet).expect("images lie in the alphabet");
            for (i, &c) in counts.counts().iter().enumerate() {
                m.set(i, j, BigInt::from(c));
            }
        }
        m
    }

    /// True iff `|det M_σ| = 1`.
    pub fn is_unimodular(&self) -> bool {
        self.incidence().determinant().abs() == BigInt::from(1)
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Substitution) -> Result<Substitution> {
        if self.size() != other.size() {
            return Err(Error::AlphabetMismatch {
                expected: self.size(),
                found: other.size(),
            });
        }
        let images = other
            .images
            .iter()
            .map(|img| self.apply(img.letters()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Substitution { images, name: None })
    }

    /// `σ^k` (the identity for `k = 0`).
    pub fn power(&self, k: usize) -> Substitution {
        let mut out = Substitution::identity(self.size()).expect("valid alphabet");
        for _ in 0..k {
            out = self.compose(&out).expect("same alphabet");
        }
        out
    }

    /// Composition `σ₀ ∘ σ₁ ∘ ⋯ ∘ σ_{k−1}` of a nonempty list.
    pub fn compose_all(list: &[Substitution]) -> Result<Substitution> {
        let (last, rest) = list.split_last().ok_or(Error::EmptyDirective)?;
        rest.iter()
            .rev()
            .try_fold(last.clone(), |acc, s| s.compose(&acc))
    }
}

impl fmt::Display for Substitution {
    /// Text form `1->12,2->13,3->1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .images
            .iter()
            .enumerate()
            .map(|(i, w)| format!("{}->{}", Letter::from_index(i), w))
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Substitution {
    type Err = Error;

    /// Parses `1->12,2->13,3->1`; rules may appear in any order but must
    /// cover `1..d` exactly once.
    fn from_str(s: &str) -> Result<Self> {
        let mut rules: Vec<Option<Word>> = Vec::new();
        let mut offset = 0;
        for part in s.split(',') {
            let (lhs, rhs) = part.split_once("->").ok_or_else(|| Error::Parse {
                position: offset,
                message: format!("expected `letter->image`, found `{part}`"),
            })?;
            let mut chars = lhs.trim().chars();
            let letter = match (chars.next().and_then(Letter::from_glyph), chars.next()) {
                (Some(l), None) => l,
                _ => {
                    return Err(Error::Parse {
                        position: offset,
                        message: format!("bad letter `{}`", lhs.trim()),
                    })
                }
            };
            let image: Word = rhs.trim().parse().map_err(|e| match e {
                Error::Parse { position, message } => Error::Parse {
                    position: offset + position,
                    message,
                },
                other => other,
            })?;
            if rules.len() <= letter.index() {
                rules.resize(letter.index() + 1, None);
            }
            if rules[letter.index()].replace(image).is_some() {
                return Err(Error::Parse {
                    position: offset,
                    message: format!("letter {letter} defined twice"),
                });
            }
            offset += part.len() + 1;
        }
        let images = rules
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                w.ok_or_else(|| Error::Parse {
                    position: 0,
                    message: format!("no rule for letter {}", i + 1),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Substitution::new(images)
    }
}

impl Serialize for Substitution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Substitution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// The built-in substitution families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `σ₁: 1↦1, 2↦21`; `σ₂: 1↦12, 2↦2`.
    Sturmian,
    /// `σ_i: i↦i, j↦ij (j≠i)` on `d` letters.
    ArnouxRauzy(u8),
    /// The three Brun substitutions on three letters.
    Brun,
    /// The single substitution `1↦12, 2↦13, 3↦1`.
    Tribonacci,
}

impl Family {
    /// Parses a family name: `sturmian`, `ar`/`arnoux_rauzy` (optionally with
    /// a letter count, e.g. `ar4`), `brun`, `tribonacci`.
    pub fn parse(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "sturmian" => Ok(Family::Sturmian),
            "ar" | "arnoux_rauzy" | "arnoux-rauzy" => Ok(Family::ArnouxRauzy(3)),
            "brun" => Ok(Family::Brun),
            "tribonacci" => Ok(Family::Tribonacci),
            other => {
                let digits = other
                    .strip_prefix("arnoux_rauzy")
                    .or_else(|| other.strip_prefix("ar"))
                    .and_then(|rest| rest.parse::<u8>().ok())
                    .filter(|&d| (2..=35).contains(&d));
                digits
                    .map(Family::ArnouxRauzy)
                    .ok_or_else(|| Error::UnknownFamily(name.to_string()))
            }
        }
    }

    /// Canonical name as accepted by [`Family::parse`].
    pub fn name(self) -> String {
        match self {
            Family::Sturmian => "sturmian".into(),
            Family::ArnouxRauzy(3) => "ar".into(),
            Family::ArnouxRauzy(d) => format!("ar{d}"),
            Family::Brun => "brun".into(),
            Family::Tribonacci => "tribonacci".into(),
        }
    }

    pub fn alphabet_size(self) -> usize {
        match self {
            Family::Sturmian => 2,
            Family::ArnouxRauzy(d) => usize::from(d),
            Family::Brun | Family::Tribonacci => 3,
        }
    }

    /// The substitutions of the family, indexed from 1 in their names.
    pub fn substitutions(self) -> Vec<Substitution> {
        let build = |imgs: &[&str], name: String| {
            Substitution::from_strs(imgs)
                .expect("built-in")
                .with_name(name)
        };
        match self {
            Family::Sturmian => {
                vec![
                    build(&["1", "21"], "σ1".into()),
                    build(&["12", "2"], "σ2".into()),
                ]
            }
            Family::ArnouxRauzy(d) => (0..usize::from(d))
                .map(|i| {
                    let a = Letter::from_index(i);
                    let images = (0..usize::from(d))
                        .map(|j| {
                            let b = Letter::from_index(j);
                            if i == j {
                                Word::new(vec![a])
                            } else {
                                Word::new(vec![a, b])
                            }
                        })
                        .collect();
                    Substitution::new(images)
                        .expect("built-in")
                        .with_name(format!("σ{}", i + 1))
                })
                .collect(),
            Family::Brun => vec![
                build(&["3", "1", "23"], "σ1".into()),
                build(&["1", "3", "23"], "σ2".into()),
                build(&["1", "23", "3"], "σ3".into()),
            ],
            Family::Tribonacci => vec![build(&["12", "13", "1"], "σ".into())],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Looks up a built-in family by name.
pub fn builtin_family(name: &str) -> Result<Vec<Substitution>> {
    Ok(Family::parse(name)?.substitutions())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::AbelianVector;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn rows(m: &IntMatrix) -> Vec<Vec<i64>> {
        m.to_i64_rows().unwrap()
    }

    #[test]
    fn apply_examples() {
        let t = &Family::Tribonacci.substitutions()[0];
        let mut x = w("1");
        for _ in 0..3 {
            x = t.apply(x.letters()).unwrap();
        }
        assert_eq!(x.to_string(), "1213121");
        assert!(t.apply(&[]).unwrap().is_empty());
        let brun = Family::Brun.substitutions();
        assert_eq!(brun[2].apply(w("23").letters()).unwrap().to_string(), "233");
        assert!(t.apply(w("4").letters()).is_err());
        assert_eq!(
            t.apply_truncated(w("1213").letters(), 5)
                .unwrap()
                .to_string(),
            "12131"
        );
    }

    #[test]
    fn incidence_examples() {
        let t = &Family::Tribonacci.substitutions()[0];
        assert_eq!(
            rows(&t.incidence()),
            vec![vec![1, 1, 1], vec![1, 0, 0], vec![0, 1, 0]]
        );
        assert_eq!(
            Substitution::identity(4).unwrap().incidence(),
            IntMatrix::identity(4)
        );
        let brun = Family::Brun.substitutions();
        assert_eq!(
            rows(&brun[0].incidence()),
            vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 1]]
        );
        assert_eq!(
            rows(&brun[1].incidence()),
            vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 1]]
        );
        assert_eq!(
            rows(&brun[2].incidence()),
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 1, 1]]
        );
    }

    #[test]
    fn compose_examples() {
        let s = Family::Sturmian.substitutions();
        let c = s[0].compose(&s[1]).unwrap();
        assert_eq!(c.to_string(), "1->121,2->21");
        let id = Substitution::identity(2).unwrap();
        assert_eq!(s[0].compose(&id).unwrap().images(), s[0].images());
        let ar = Family::ArnouxRauzy(3).substitutions();
        let prod = Substitution::compose_all(&ar).unwrap();
        assert!(prod.incidence().is_positive());
        assert!(s[0].compose(&ar[0]).is_err());
    }

    #[test]
    fn family_images() {
        assert_eq!(
            Family::ArnouxRauzy(3).substitutions()[0].to_string(),
            "1->1,2->12,3->13"
        );
        assert_eq!(
            Family::ArnouxRauzy(3).substitutions()[2].to_string(),
            "1->31,2->32,3->3"
        );
        assert_eq!(
            Family::Sturmian.substitutions()[0].to_string(),
            "1->1,2->21"
        );
        assert!(builtin_family("nope").is_err());
        assert_eq!(builtin_family("ar4").unwrap().len(), 4);
    }

    #[test]
    fn builtin_families_are_unimodular_and_compose_multiplicatively() {
        for fam in [
            Family::Sturmian,
            Family::ArnouxRauzy(3),
            Family::ArnouxRauzy(4),
            Family::Brun,
            Family::Tribonacci,
        ] {
            let subs = fam.substitutions();
            for a in &subs {
                assert!(a.is_unimodular(), "{fam} {a}");
                for b in &subs {
                    let c = a.compose(b).unwrap();
                    assert_eq!(c.incidence(), a.incidence().mul(&b.incidence()));
                }
            }
        }
    }

    #[test]
    fn text_format() {
        let s: Substitution = "1->12,2->13,3->1".parse().unwrap();
        assert_eq!(s.images(), Family::Tribonacci.substitutions()[0].images());
        assert_eq!(s.to_string(), "1->12,2->13,3->1");
        assert!("1->,2->1".parse::<Substitution>().is_err());
        assert!("1->12,1->2".parse::<Substitution>().is_err());
        assert!("1->12,3->1".parse::<Substitution>().is_err());
        assert!("1->14,2->1".parse::<Substitution>().is_err());
    }

    fn arb_word(d: u8, max: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec(1..=d, 0..max).prop_map(|v| Word::from_values(&v).unwrap())
    }

    proptest! {
        #[test]
        fn abelianization_commutes(idx in 0usize..3, word in arb_word(3, 60)) {
            let sigma = &Family::Brun.substitutions()[idx];
            let alphabet = sigma.alphabet();
            let lhs = abelianize(sigma.apply(word.letters()).unwrap().letters(), alphabet).unwrap();
            let v: Vec<BigInt> = abelianize(word.letters(), alphabet).unwrap().counts().iter().map(|&c| BigInt::from(c)).collect();
            let rhs: Vec<u64> = sigma.incidence().mul_vec(&v).iter().map(|x| u64::try_from(x.clone()).unwrap()).collect();
            prop_assert_eq!(lhs, AbelianVector::from_counts(rhs));
        }

        #[test]
        fn compose_matches_sequential_application(a in 0usize..3, b in 0usize..3, word in arb_word(3, 30)) {
            let ar = Family::ArnouxRauzy(3).substitutions();
            let direct = ar[a].compose(&ar[b]).unwrap().apply(word.letters()).unwrap();
            let seq = ar[a].apply(ar[b].apply(word.letters()).unwrap().letters()).unwrap();
            prop_assert_eq!(direct, seq);
        }
    }
}

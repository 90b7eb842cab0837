//! Finite and infinite words over the alphabet `{1, …, d}`.
//!
//! Letters are 1-based, as in the mathematical literature; they render as
//! the glyphs `'1'..'9'` followed by `'a'..'z'`, so alphabets of up to 35
//! letters have a compact textual form.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported alphabet size (limited by the glyph table).
pub const MAX_LETTERS: usize = 35;

/// A letter of the alphabet `{1, …, d}`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Letter(u8);

impl Letter {
    /// Creates a letter from its 1-based value.
    pub fn new(value: u8) -> Result<Self> {
        if value == 0 || usize::from(value) > MAX_LETTERS {
            return Err(Error::InvalidLetter(u32::from(value)));
        }
        Ok(Letter(value))
    }

    /// Creates the letter whose 0-based index is `index`.
    ///
    /// # Panics
    /// Panics if `index >= MAX_LETTERS`.
    pub fn from_index(index: usize) -> Self {
        assert!(index < MAX_LETTERS, "letter index {index} out of range");
        Letter(index as u8 + 1)
    }

    /// The 1-based value of the letter.
    pub fn get(self) -> u8 {
        self.0
    }

    /// The 0-based index of the letter (`1 ↦ 0`).
    pub fn index(self) -> usize {
        usize::from(self.0) - 1
    }

    /// Rendering glyph: `'1'..'9'`, then `'a'..'z'`.
    pub fn glyph(self) -> char {
        match self.0 {
            1..=9 => char::from(b'0' + self.0),
            v => char::from(b'a' + (v - 10)),
        }
    }

    /// Inverse of [`Letter::glyph`].
    pub fn from_glyph(c: char) -> Option<Self> {
        match c {
            '1'..='9' => Some(Letter(c as u8 - b'0')),
            'a'..='z' => Some(Letter(c as u8 - b'a' + 10)),
            _ => None,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.glyph())
    }
}

/// The alphabet `{1, …, d}`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alphabet(u8);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || size > MAX_LETTERS {
            return Err(Error::InvalidAlphabet(size));
        }
        Ok(Alphabet(size as u8))
    }

    pub fn size(self) -> usize {
        usize::from(self.0)
    }

    pub fn contains(self, letter: Letter) -> bool {
        letter.0 <= self.0
    }

    /// Letters in increasing order.
    pub fn letters(self) -> impl Iterator<Item = Letter> {
        (1..=self.0).map(Letter)
    }

    /// Fails with [`Error::LetterOutOfAlphabet`] on the first foreign letter.
    pub fn check(self, letters: &[Letter]) -> Result<()> {
        match letters.iter().find(|l| !self.contains(**l)) {
            Some(l) => Err(Error::LetterOutOfAlphabet {
                letter: l.0,
                size: self.0,
            }),
            None => Ok(()),
        }
    }
}

/// A finite word. The empty word is allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word from 1-based letter values.
    pub fn from_values(values: &[u8]) -> Result<Self> {
        values
            .iter()
            .map(|&v| Letter::new(v))
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn push(&mut self, letter: Letter) {
        self.0.push(letter);
    }

    /// Largest letter occurring in the word, if any.
    pub fn max_letter(&self) -> Option<Letter> {
        self.0.iter().copied().max()
    }

    /// Number of occurrences of `letter`.
    pub fn count(&self, letter: Letter) -> usize {
        self.0.iter().filter(|&&l| l == letter).count()
    }
}

impl From<Vec<Letter>> for Word {
    fn from(v: Vec<Letter>) -> Self {
        Word(v)
    }
}

impl From<&[Letter]> for Word {
    fn from(v: &[Letter]) -> Self {
        Word(v.to_vec())
    }
}

impl AsRef<[Letter]> for Word {
    fn as_ref(&self) -> &[Letter] {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|l| l.glyph()).collect();
        f.write_str(&s)
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(position, c)| {
                Letter::from_glyph(c).ok_or_else(|| Error::Parse {
                    position,
                    message: format!("`{c}` is not a letter glyph"),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Renders a slice of letters with the standard glyphs.
pub fn render(letters: &[Letter]) -> String {
    letters.iter().map(|l| l.glyph()).collect()
}

/// Letter counts `(|w|_1, …, |w|_d)` of a word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbelianVector(Vec<u64>);

impl AbelianVector {
    pub fn zero(alphabet: Alphabet) -> Self {
        AbelianVector(vec![0; alphabet.size()])
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        AbelianVector(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, letter: Letter) -> u64 {
        self.0[letter.index()]
    }

    /// Sum of all counts, i.e. the word length.
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl fmt::Display for AbelianVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for AbelianVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut offset = 0;
        let mut counts = Vec::new();
        for part in s.split(',') {
            let value = part.trim().parse::<u64>().map_err(|e| Error::Parse {
                position: offset,
                message: e.to_string(),
            })?;
            counts.push(value);
            offset += part.len() + 1;
        }
        Ok(AbelianVector(counts))
    }
}

/// The abelianization `l(w) = (|w|_1, …, |w|_d)`.
pub fn abelianize(w: &[Letter], alphabet: Alphabet) -> Result<AbelianVector> {
    let mut counts = vec![0u64; alphabet.size()];
    for &l in w {
        if !alphabet.contains(l) {
            return Err(Error::LetterOutOfAlphabet {
                letter: l.get(),
                size: alphabet.size() as u8,
            });
        }
        counts[l.index()] += 1;
    }
    Ok(AbelianVector(counts))
}

fn ensure_available(prefix: &[Letter], n: usize) -> Result<()> {
    if n > prefix.len() {
        return Err(Error::InsufficientData {
            needed: n,
            available: prefix.len(),
        });
    }
    Ok(())
}

/// All distinct factors of length `n` of `prefix`, in lexicographic order.
pub fn factors(prefix: &[Letter], n: usize) -> Result<BTreeSet<Word>> {
    ensure_available(prefix, n)?;
    if n == 0 {
        return Ok(std::iter::once(Word::empty()).collect());
    }
    let set: HashSet<&[Letter]> = prefix.windows(n).collect();
    Ok(set.into_iter().map(Word::from).collect())
}

/// Number of distinct factors of length `n` of `prefix`.
pub fn factor_count(prefix: &[Letter], n: usize) -> Result<usize> {
    ensure_available(prefix, n)?;
    if n == 0 {
        return Ok(1);
    }
    Ok(prefix.windows(n).collect::<HashSet<_>>().len())
}

/// An observed value of the factor complexity on a finite horizon.
///
/// The true complexity of an infinite word can only be larger; the horizon is
/// recorded so the figure is never mistaken for an exact value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityObservation {
    pub n: usize,
    pub count: usize,
    pub horizon: usize,
}

/// Observed complexity `p_w(n)` on the first `horizon` letters of a stream.
pub fn complexity(
    w: &InfiniteWordStream,
    n: usize,
    horizon: usize,
) -> Result<ComplexityObservation> {
    let prefix = w.prefix(horizon)?;
    observed_complexity(prefix.letters(), n)
}

/// Observed complexity `p_w(n)` on an explicit prefix.
pub fn observed_complexity(prefix: &[Letter], n: usize) -> Result<ComplexityObservation> {
    Ok(ComplexityObservation {
        n,
        count: factor_count(prefix, n)?,
        horizon: prefix.len(),
    })
}

/// Two equal-length factors whose counts of `letter` differ by `imbalance`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceWitness {
    pub u: Word,
    pub v: Word,
    pub letter: Letter,
    pub imbalance: u64,
}

/// Outcome of [`balance_check`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BalanceVerdict {
    /// No pair of factors of the prefix violates `C`-balance.
    BalancedUpToHorizon { c: u64, horizon: usize },
    /// A violating pair was found.
    Witness(BalanceWitness),
}

impl BalanceVerdict {
    pub fn is_balanced(&self) -> bool {
        matches!(self, BalanceVerdict::BalancedUpToHorizon { .. })
    }

    pub fn witness(&self) -> Option<&BalanceWitness> {
        match self {
            BalanceVerdict::Witness(w) => Some(w),
            BalanceVerdict::BalancedUpToHorizon { .. } => None,
        }
    }
}

/// Exhaustive search for a `C`-balance violation among the factors of
/// `prefix`: two factors `u`, `v` of equal length and a letter `i` with
/// `||u|_i − |v|_i| > C`.
///
/// Every factor length and every letter is examined (with prefix sums), so a
/// "balanced" verdict is exact for the given prefix. The witness returned is
/// the one with the shortest length, then the smallest letter; `u` is the
/// first factor attaining the maximal count and `v` the first attaining the
/// minimal one.
pub fn balance_check(prefix: &[Letter], c: u64) -> BalanceVerdict {
    let n_total = prefix.len();
    let d = prefix.iter().map(|l| l.index() + 1).max().unwrap_or(0);
    // Prefix sums per letter; i32 keeps the inner loops vectorisable.
    let sums: Vec<Vec<i32>> = (0..d)
        .map(|i| {
            let mut s = Vec::with_capacity(n_total + 1);
            let mut acc = 0i32;
            s.push(0);
            for l in prefix {
                if l.index() == i {
                    acc += 1;
                }
                s.push(acc);
            }
            s
        })
        .collect();
    // On two letters the counts of the second letter are determined by the first.
    let letters_to_check = if d == 2 { 1 } else { d };
    let limit = i64::try_from(c).unwrap_or(i64::MAX);

    let found = (1..=n_total).into_par_iter().find_map_first(|len| {
        for (i, s) in sums.iter().enumerate().take(letters_to_check) {
            let (mut lo, mut hi) = (i32::MAX, i32::MIN);
            for (a, b) in s[len..].iter().zip(&s[..=n_total - len]) {
                let v = a - b;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if i64::from(hi - lo) > limit {
                let pos_hi = (0..=n_total - len)
                    .find(|&k| s[k + len] - s[k] == hi)
                    .unwrap_or(0);
                let pos_lo = (0..=n_total - len)
                    .find(|&k| s[k + len] - s[k] == lo)
                    .unwrap_or(0);
                return Some(BalanceWitness {
                    u: Word::from(&prefix[pos_hi..pos_hi + len]),
                    v: Word::from(&prefix[pos_lo..pos_lo + len]),
                    letter: Letter::from_index(i),
                    imbalance: (hi - lo) as u64,
                });
            }
        }
        None
    });
    match found {
        Some(w) => BalanceVerdict::Witness(w),
        None => BalanceVerdict::BalancedUpToHorizon {
            c,
            horizon: n_total,
        },
    }
}

/// Imbalance `max_i ||u|_i − |v|_i|` of two words of equal length.
pub fn imbalance(u: &[Letter], v: &[Letter]) -> (u64, Letter) {
    let d = u.iter().chain(v).map(|l| l.index() + 1).max().unwrap_or(1);
    let mut best = (0u64, Letter::from_index(0));
    for i in 0..d {
        let l = Letter::from_index(i);
        let cu = u.iter().filter(|&&x| x == l).count() as i64;
        let cv = v.iter().filter(|&&x| x == l).count() as i64;
        let diff = (cu - cv).unsigned_abs();
        if diff > best.0 {
            best = (diff, l);
        }
    }
    best
}

/// Source of letters for an [`InfiniteWordStream`].
///
/// `produce(min_len)` must return a prefix of the infinite word of length at
/// least `min_len`; successive calls must be consistent with each other.
pub trait PrefixProducer: Send {
    fn produce(&mut self, min_len: usize) -> Result<Vec<Letter>>;
}

impl<F> PrefixProducer for F
where
    F: FnMut(usize) -> Result<Vec<Letter>> + Send,
{
    fn produce(&mut self, min_len: usize) -> Result<Vec<Letter>> {
        self(min_len)
    }
}

struct StreamState {
    cache: Vec<Letter>,
    producer: Box<dyn PrefixProducer>,
}

/// A right-infinite word that is materialised lazily and cached.
///
/// Extension happens under an internal lock, so a stream can be shared across
/// threads; letters that were produced once are never changed. The cache
/// holds the whole produced prefix, so memory grows with the largest request.
pub struct InfiniteWordStream {
    state: Mutex<StreamState>,
}

impl fmt::Debug for InfiniteWordStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InfiniteWordStream")
            .field("cached", &self.cached_len())
            .finish()
    }
}

impl InfiniteWordStream {
    pub fn new(producer: impl PrefixProducer + 'static) -> Self {
        InfiniteWordStream {
            state: Mutex::new(StreamState {
                cache: Vec::new(),
                producer: Box::new(producer),
            }),
        }
    }

    /// The periodic word `block block block …`.
    pub fn periodic(block: Word) -> Result<Self> {
        if block.is_empty() {
            return Err(Error::InvalidArgument(
                "periodic block must be nonempty".into(),
            ));
        }
        let block = block.into_letters();
        Ok(Self::new(move |n: usize| {
            Ok(block.iter().copied().cycle().take(n).collect())
        }))
    }

    /// Number of letters currently cached.
    pub fn cached_len(&self) -> usize {
        self.lock().cache.len()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, StreamState> {
        // A panic while extending leaves the cache untouched, so recovering
        // from poisoning is sound.
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn ensure(&self, n: usize) -> Result<std::sync::MutexGuard<'_, StreamState>> {
        let mut st = self.lock();
        if st.cache.len() < n {
            let produced = st.producer.produce(n)?;
            if produced.len() < n {
                return Err(Error::InsufficientData {
                    needed: n,
                    available: produced.len(),
                });
            }
            let old = st.cache.len();
            if produced[..old] != st.cache[..] {
                return Err(Error::InvalidArgument(
                    "stream producer returned a prefix inconsistent with the cached letters".into(),
                ));
            }
            st.cache.extend_from_slice(&produced[old..]);
        }
        Ok(st)
    }

    /// The first `n` letters.
    pub fn prefix(&self, n: usize) -> Result<Word> {
        let st = self.ensure(n)?;
        Ok(Word::from(&st.cache[..n]))
    }

    /// The letter at 0-based position `k`.
    pub fn letter(&self, k: usize) -> Result<Letter> {
        let st = self.ensure(k + 1)?;
        Ok(st.cache[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn fib_variant(n: usize) -> Word {
        // Independent oracle: iterate 1 ↦ 121, 2 ↦ 21 on the letter 2.
        let mut cur = vec![2u8];
        while cur.len() < n {
            cur = cur
                .iter()
                .flat_map(|&c| if c == 1 { vec![1, 2, 1] } else { vec![2, 1] })
                .collect();
        }
        Word::from_values(&cur[..n]).unwrap()
    }

    fn tribonacci(n: usize) -> Word {
        let mut cur = vec![1u8];
        while cur.len() < n {
            cur = cur
                .iter()
                .flat_map(|&c| match c {
                    1 => vec![1, 2],
                    2 => vec![1, 3],
                    _ => vec![1],
                })
                .collect();
        }
        Word::from_values(&cur[..n]).unwrap()
    }

    #[test]
    fn glyphs_round_trip() {
        for v in 1..=35u8 {
            let l = Letter::new(v).unwrap();
            assert_eq!(Letter::from_glyph(l.glyph()), Some(l));
        }
        assert_eq!(Letter::new(10).unwrap().glyph(), 'a');
        assert!(Letter::new(0).is_err());
    }

    #[test]
    fn abelianize_examples() {
        let a3 = Alphabet::new(3).unwrap();
        assert_eq!(abelianize(&[], a3).unwrap().to_string(), "0,0,0");
        assert_eq!(
            abelianize(w("1213121").letters(), a3).unwrap().to_string(),
            "4,2,1"
        );
        let a2 = Alphabet::new(2).unwrap();
        assert_eq!(
            abelianize(w("121").letters(), a2).unwrap().counts(),
            &[2, 1]
        );
        assert!(abelianize(w("13").letters(), a2).is_err());
    }

    #[test]
    fn abelian_vector_text_round_trip() {
        let v: AbelianVector = "4,2,1".parse().unwrap();
        assert_eq!(v.counts(), &[4, 2, 1]);
        assert_eq!(v.to_string(), "4,2,1");
        assert!("4,x".parse::<AbelianVector>().is_err());
    }

    #[test]
    fn factors_examples() {
        let f = factors(w("12131").letters(), 2).unwrap();
        let expected: BTreeSet<Word> = ["12", "21", "13", "31"].iter().map(|s| w(s)).collect();
        assert_eq!(f, expected);
        assert_eq!(factors(w("12131").letters(), 0).unwrap().len(), 1);
        assert!(matches!(
            factors(w("12").letters(), 3),
            Err(Error::InsufficientData {
                needed: 3,
                available: 2
            })
        ));
        assert_eq!(factors(fib_variant(10_000).letters(), 5).unwrap().len(), 6);
    }

    #[test]
    fn complexity_examples() {
        let fib = InfiniteWordStream::new(|n: usize| Ok(fib_variant(n).into_letters()));
        assert_eq!(complexity(&fib, 7, 5000).unwrap().count, 8);
        let tri = InfiniteWordStream::new(|n: usize| Ok(tribonacci(n).into_letters()));
        assert_eq!(complexity(&tri, 4, 5000).unwrap().count, 9);
        let ones = InfiniteWordStream::periodic(w("1")).unwrap();
        let obs = complexity(&ones, 3, 100).unwrap();
        assert_eq!((obs.count, obs.horizon), (1, 100));
    }

    #[test]
    fn balance_examples() {
        assert!(balance_check(fib_variant(3000).letters(), 1).is_balanced());
        let verdict = balance_check(w("212131").letters(), 1);
        let wit = verdict.witness().expect("imbalanced");
        assert_eq!(
            (wit.u.to_string(), wit.v.to_string()),
            ("212".into(), "131".into())
        );
        assert_eq!(wit.letter, Letter::new(2).unwrap());
        let verdict = balance_check(w("12121212").letters(), 0);
        let wit = verdict.witness().unwrap();
        assert_eq!(wit.u.len(), 1);
        assert_eq!(wit.imbalance, 1);
    }

    #[test]
    fn balance_brute_force_oracle() {
        // Compare against a naive pairwise search on small words.
        let words = [
            "1121211",
            "13121312",
            "3331111",
            "1213121121312",
            "21122112",
        ];
        for s in words {
            let p = w(s);
            for c in 0..3u64 {
                let mut naive = false;
                for len in 1..=p.len() {
                    for a in 0..=p.len() - len {
                        for b in 0..=p.len() - len {
                            let (imb, _) =
                                imbalance(&p.letters()[a..a + len], &p.letters()[b..b + len]);
                            naive |= imb > c;
                        }
                    }
                }
                assert_eq!(
                    !balance_check(p.letters(), c).is_balanced(),
                    naive,
                    "{s} C={c}"
                );
            }
        }
    }

    #[test]
    fn stream_caches_and_never_changes() {
        let s = InfiniteWordStream::new(|n: usize| Ok(tribonacci(n + 7).into_letters()));
        let a = s.prefix(10).unwrap();
        assert!(s.cached_len() >= 10);
        let b = s.prefix(50).unwrap();
        assert_eq!(&b.letters()[..10], a.letters());
        assert_eq!(s.letter(0).unwrap(), Letter::new(1).unwrap());
        let bad = InfiniteWordStream::new(|n: usize| Ok(vec![Letter::new(1).unwrap(); n / 2]));
        assert!(bad.prefix(4).is_err());
    }

    fn arb_word(d: u8, max_len: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec(1..=d, 0..max_len).prop_map(|v| Word::from_values(&v).unwrap())
    }

    proptest! {
        #[test]
        fn counts_sum_to_length(word in arb_word(4, 60)) {
            let v = abelianize(word.letters(), Alphabet::new(4).unwrap()).unwrap();
            prop_assert_eq!(v.total() as usize, word.len());
        }

        #[test]
        fn factor_language_is_extendable(word in arb_word(3, 40), n in 0usize..8) {
            prop_assume!(n < word.len());
            let longer = factors(word.letters(), n + 1).unwrap();
            let shorter = factors(word.letters(), n).unwrap();
            for f in &longer {
                prop_assert!(shorter.contains(&Word::from(&f.letters()[..n])));
                prop_assert!(shorter.contains(&Word::from(&f.letters()[1..])));
            }
        }

        #[test]
        fn balance_is_monotone_in_c(word in arb_word(3, 40), c in 0u64..4) {
            if balance_check(word.letters(), c).is_balanced() {
                prop_assert!(balance_check(word.letters(), c + 1).is_balanced());
            }
        }

        #[test]
        fn witnesses_are_genuine(word in arb_word(3, 40), c in 0u64..3) {
            if let BalanceVerdict::Witness(wit) = balance_check(word.letters(), c) {
                prop_assert_eq!(wit.u.len(), wit.v.len());
                let cu = wit.u.count(wit.letter) as i64;
                let cv = wit.v.count(wit.letter) as i64;
                prop_assert!((cu - cv).unsigned_abs() > c);
            }
        }

        #[test]
        fn complexity_of_periodic_words_stabilises(block in arb_word(3, 6), n in 1usize..12) {
            prop_assume!(!block.is_empty());
            let s = InfiniteWordStream::periodic(block.clone()).unwrap();
            let a = complexity(&s, n, 200).unwrap().count;
            let b = complexity(&s, n + 1, 200).unwrap().count;
            prop_assert!(b >= a);
            prop_assert!(b <= block.len());
        }

        #[test]
        fn word_text_round_trip(word in arb_word(35, 30)) {
            let text = word.to_string();
            prop_assert_eq!(text.parse::<Word>().unwrap(), word);
        }
    }
}

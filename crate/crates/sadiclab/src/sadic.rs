//! Directive sequences, limit sequences, languages and the checkable
//! hypotheses (primitivity, recurrence, algebraic irreducibility, balance).

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::IntMatrix;
use crate::poly::{irreducibility_over_q, Irreducibility};
use crate::substitution::{Family, Substitution};
use crate::words::{balance_check, factors, BalanceVerdict, InfiniteWordStream, Letter, Word};
use crate::{Error, Result};

/// Rule used by generated directive sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationRule {
    /// Independent uniform choice at each position.
    Uniform,
    /// Uniform choice among the indices different from the previous one.
    Markov,
}

/// How the positions of a directive sequence are determined (0-based
/// substitution indices).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirectiveKind {
    Periodic {
        block: Vec<usize>,
    },
    EventuallyPeriodic {
        prefix: Vec<usize>,
        block: Vec<usize>,
    },
    Generated {
        seed: u64,
        rule: GenerationRule,
    },
    /// A finite sequence; positions past its end are unavailable.
    Finite {
        indices: Vec<usize>,
    },
}

#[derive(Debug)]
struct GeneratorState {
    rng: ChaCha8Rng,
    produced: Vec<usize>,
}

/// A sequence `(σ_n)` of substitutions drawn from a finite set.
///
/// Every accessor is deterministic: generated sequences are driven by a
/// seeded ChaCha stream whose output is cached, so `window(m, n)` returns the
/// same substitutions on every call.
#[derive(Clone)]
pub struct DirectiveSequence {
    family_name: String,
    family: Option<Family>,
    subs: Vec<Substitution>,
    kind: DirectiveKind,
    offset: usize,
    generator: Option<Arc<Mutex<GeneratorState>>>,
}

impl fmt::Debug for DirectiveSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirectiveSequence")
            .field("family", &self.family_name)
            .field("kind", &self.kind)
            .field("offset", &self.offset)
            .finish()
    }
}

impl PartialEq for DirectiveSequence {
    fn eq(&self, other: &Self) -> bool {
        self.family_name == other.family_name
            && self.subs == other.subs
            && self.kind == other.kind
            && self.offset == other.offset
    }
}

impl DirectiveSequence {
    /// A directive sequence over an explicit list of substitutions.
    pub fn custom(
        name: impl Into<String>,
        subs: Vec<Substitution>,
        kind: DirectiveKind,
    ) -> Result<Self> {
        let first = subs.first().ok_or(Error::EmptyDirective)?;
        if let Some(bad) = subs.iter().find(|s| s.size() != first.size()) {
            return Err(Error::AlphabetMismatch {
                expected: first.size(),
                found: bad.size(),
            });
        }
        let count = subs.len();
        let check = |v: &[usize]| -> Result<()> {
            match v.iter().find(|&&i| i >= count) {
                Some(&index) => Err(Error::FamilyIndex {
                    index: index + 1,
                    size: count,
                }),
                None => Ok(()),
            }
        };
        match &kind {
            DirectiveKind::Periodic { block } => {
                if block.is_empty() {
                    return Err(Error::EmptyDirective);
                }
                check(block)?;
            }
            DirectiveKind::EventuallyPeriodic { prefix, block } => {
                if block.is_empty() {
                    return Err(Error::EmptyDirective);
                }
                check(prefix)?;
                check(block)?;
            }
            DirectiveKind::Finite { indices } => check(indices)?,
            DirectiveKind::Generated {
                rule: GenerationRule::Markov,
                ..
            } if count < 2 => {
                return Err(Error::InvalidArgument(
                    "markov rule needs at least two substitutions".into(),
                ))
            }
            DirectiveKind::Generated { .. } => {}
        }
        let generator = match &kind {
            DirectiveKind::Generated { seed, .. } => Some(Arc::new(Mutex::new(GeneratorState {
                rng: ChaCha8Rng::seed_from_u64(*seed),
                produced: Vec::new(),
            }))),
            _ => None,
        };
        Ok(DirectiveSequence {
            family_name: name.into(),
            family: None,
            subs,
            kind,
            offset: 0,
            generator,
        })
    }

    /// A directive sequence drawing from a built-in family.
    pub fn new(family: Family, kind: DirectiveKind) -> Result<Self> {
        let mut d = Self::custom(family.name(), family.substitutions(), kind)?;
        d.family = Some(family);
        Ok(d)
    }

    /// The constant sequence `(σ, σ, …)`.
    pub fn constant(sigma: Substitution) -> Result<Self> {
        Self::custom(
            "custom",
            vec![sigma],
            DirectiveKind::Periodic { block: vec![0] },
        )
    }

    /// `(block)^ω` with 0-based indices into the family.
    pub fn periodic(family: Family, block: Vec<usize>) -> Result<Self> {
        Self::new(family, DirectiveKind::Periodic { block })
    }

    /// A finite directive (e.g. the expansion of a rational point).
    pub fn finite(family: Family, indices: Vec<usize>) -> Result<Self> {
        Self::new(family, DirectiveKind::Finite { indices })
    }

    pub fn family(&self) -> Option<Family> {
        self.family
    }

    pub fn family_name(&self) -> &str {
        &self.family_name
    }

    pub fn substitutions(&self) -> &[Substitution] {
        &self.subs
    }

    pub fn kind(&self) -> &DirectiveKind {
        &self.kind
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn alphabet_size(&self) -> usize {
        self.subs[0].size()
    }

    /// The shifted sequence `(σ_{n+k})_n`.
    pub fn shifted(&self, k: usize) -> Self {
        let mut s = self.clone();
        s.offset += k;
        s
    }

    /// Number of available positions (`None` when infinite).
    pub fn len(&self) -> Option<usize> {
        match &self.kind {
            DirectiveKind::Finite { indices } => Some(indices.len().saturating_sub(self.offset)),
            _ => None,
        }
    }

    /// Period of the tail, when the sequence is eventually periodic.
    pub fn period(&self) -> Option<usize> {
        match &self.kind {
            DirectiveKind::Periodic { block } | DirectiveKind::EventuallyPeriodic { block, .. } => {
                Some(block.len())
            }
            _ => None,
        }
    }

    /// 0-based family index of `σ_n`.
    pub fn index(&self, n: usize) -> Result<usize> {
        let pos = n + self.offset;
        match &self.kind {
            DirectiveKind::Periodic { block } => Ok(block[pos % block.len()]),
            DirectiveKind::EventuallyPeriodic { prefix, block } => Ok(if pos < prefix.len() {
                prefix[pos]
            } else {
                block[(pos - prefix.len()) % block.len()]
            }),
            DirectiveKind::Finite { indices } => indices
                .get(pos)
                .copied()
                .ok_or(Error::DirectiveExhausted(n)),
            DirectiveKind::Generated { rule, .. } => {
                let generator = self
                    .generator
                    .as_ref()
                    .expect("generated directives carry a generator");
                let mut st = generator.lock().unwrap_or_else(|e| e.into_inner());
                let count = self.subs.len();
                while st.produced.len() <= pos {
                    let next = match (rule, st.produced.last()) {
                        (GenerationRule::Markov, Some(&prev)) => {
                            let r = st.rng.gen_range(0..count - 1);
                            if r >= prev {
                                r + 1
                            } else {
                                r
                            }
                        }
                        _ => st.rng.gen_range(0..count),
                    };
                    st.produced.push(next);
                }
                Ok(st.produced[pos])
            }
        }
    }

    /// `σ_n`.
    pub fn get(&self, n: usize) -> Result<&Substitution> {
        Ok(&self.subs[self.index(n)?])
    }

    /// Indices of `σ_m, …, σ_{n−1}`.
    pub fn indices(&self, m: usize, n: usize) -> Result<Vec<usize>> {
        (m..n).map(|k| self.index(k)).collect()
    }

    /// `σ_m, …, σ_{n−1}`.
    pub fn window(&self, m: usize, n: usize) -> Result<Vec<Substitution>> {
        (m..n).map(|k| self.get(k).cloned()).collect()
    }

    /// `σ_{[m,n)} = σ_m ∘ ⋯ ∘ σ_{n−1}` (identity when `m = n`).
    pub fn composite(&self, m: usize, n: usize) -> Result<Substitution> {
        if m >= n {
            return Substitution::identity(self.alphabet_size());
        }
        Substitution::compose_all(&self.window(m, n)?)
    }

    /// `M_{[m,n)} = M_m ⋯ M_{n−1}`.
    pub fn incidence_product(&self, m: usize, n: usize) -> Result<IntMatrix> {
        let mut p = IntMatrix::identity(self.alphabet_size());
        for k in m..n {
            p = p.mul(&self.get(k)?.incidence());
        }
        Ok(p)
    }

    /// Parses the directive grammar:
    ///
    /// * `family` — every substitution of the family in order, repeated;
    /// * `family:(1,2)^ω` (also `^w`, `^omega`) — a periodic block;
    /// * `family:3,1,(1,2)^ω` — an eventually periodic sequence;
    /// * `family:1,2,3` — a periodic block written without parentheses;
    /// * `family:[1,2,3]` — a finite sequence;
    /// * `family:seed=42:markov` / `family:seed=42:uniform` — generated;
    /// * `sturmian:a0,a1,…` — partial quotients: `σ1^{a0} σ2^{a1} σ1^{a2} …`,
    ///   cycled (the period is doubled when the list has odd length so that
    ///   the alternation of letters is preserved).
    ///
    /// Indices are 1-based in the text form.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (fam_text, rest) = match text.split_once(':') {
            Some((f, r)) => (f, Some(r.trim())),
            None => (text, None),
        };
        let family = Family::parse(fam_text)?;
        let count = family.substitutions().len();
        let Some(rest) = rest else {
            return Self::periodic(family, (0..count).collect());
        };
        if let Some(seed_text) = rest.strip_prefix("seed=") {
            let (seed_str, rule_str) = seed_text.split_once(':').unwrap_or((seed_text, "uniform"));
            let seed: u64 = seed_str.trim().parse().map_err(|_| Error::Parse {
                position: fam_text.len() + 6,
                message: format!("bad seed `{seed_str}`"),
            })?;
            let rule = match rule_str.trim() {
                "uniform" => GenerationRule::Uniform,
                "markov" => GenerationRule::Markov,
                other => {
                    return Err(Error::Parse {
                        position: 0,
                        message: format!("unknown generation rule `{other}`"),
                    })
                }
            };
            return Self::new(family, DirectiveKind::Generated { seed, rule });
        }
        if let Some(inner) = rest.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or_else(|| Error::Parse {
                position: text.len(),
                message: "missing `]`".into(),
            })?;
            return Self::finite(family, parse_indices(inner)?);
        }
        if let Some(open) = rest.find('(') {
            let prefix_text = rest[..open].trim().trim_end_matches(',');
            let tail = &rest[open + 1..];
            let close = tail.find(')').ok_or_else(|| Error::Parse {
                position: text.len(),
                message: "missing `)`".into(),
            })?;
            let block = parse_indices(&tail[..close])?;
            let suffix = tail[close + 1..].trim();
            if !matches!(suffix, "^ω" | "^w" | "^omega" | "") {
                return Err(Error::Parse {
                    position: text.len(),
                    message: format!("unexpected `{suffix}`"),
                });
            }
            let prefix = parse_indices(prefix_text)?;
            return if prefix.is_empty() {
                Self::periodic(family, block)
            } else {
                Self::new(family, DirectiveKind::EventuallyPeriodic { prefix, block })
            };
        }
        let values = parse_indices(rest)?;
        if family == Family::Sturmian {
            let digits: Vec<usize> = values.iter().map(|&v| v + 1).collect();
            return Self::periodic(family, sturmian_block(&digits)?);
        }
        Self::periodic(family, values)
    }
}

/// Parses a comma-separated list of 1-based indices into 0-based ones.
fn parse_indices(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|t| {
            let v: usize = t.trim().parse().map_err(|_| Error::Parse {
                position: 0,
                message: format!("bad index `{}`", t.trim()),
            })?;
            v.checked_sub(1).ok_or_else(|| Error::Parse {
                position: 0,
                message: "indices are 1-based".into(),
            })
        })
        .collect()
}

/// Expands partial quotients into the alternating block
/// `σ1^{a0} σ2^{a1} σ1^{a2} …` (0-based indices).
pub fn sturmian_block(digits: &[usize]) -> Result<Vec<usize>> {
    if digits.is_empty() || digits.contains(&0) {
        return Err(Error::InvalidArgument(
            "partial quotients must be positive".into(),
        ));
    }
    let cycles = if digits.len() % 2 == 1 { 2 } else { 1 };
    let mut block = Vec::new();
    for (k, &a) in digits
        .iter()
        .cycle()
        .take(digits.len() * cycles)
        .enumerate()
    {
        block.extend(std::iter::repeat(k % 2).take(a));
    }
    Ok(block)
}

impl fmt::Display for DirectiveSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[usize]| {
            v.iter()
                .map(|i| (i + 1).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "{}:", self.family_name)?;
        match &self.kind {
            DirectiveKind::Periodic { block } => write!(f, "({})^ω", list(block))?,
            DirectiveKind::EventuallyPeriodic { prefix, block } => {
                write!(f, "{},({})^ω", list(prefix), list(block))?
            }
            DirectiveKind::Finite { indices } => write!(f, "[{}]", list(indices))?,
            DirectiveKind::Generated { seed, rule } => write!(
                f,
                "seed={seed}:{}",
                if *rule == GenerationRule::Markov {
                    "markov"
                } else {
                    "uniform"
                }
            )?,
        }
        if self.offset > 0 {
            write!(f, " (shifted by {})", self.offset)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for DirectiveSequence {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

// ---------------------------------------------------------------------------
// Primitivity, recurrence, irreducibility

/// Zero pattern of a nonnegative matrix.
#[derive(Clone, PartialEq, Eq)]
struct Pattern {
    n: usize,
    bits: Vec<bool>,
}

impl Pattern {
    fn identity(n: usize) -> Self {
        let mut bits = vec![false; n * n];
        for i in 0..n {
            bits[i * n + i] = true;
        }
        Pattern { n, bits }
    }

    fn of(sigma: &Substitution) -> Self {
        let n = sigma.size();
        let mut bits = vec![false; n * n];
        for (j, img) in sigma.images().iter().enumerate() {
            for l in img.letters() {
                bits[l.index() * n + j] = true;
            }
        }
        Pattern { n, bits }
    }

    fn mul(&self, o: &Pattern) -> Pattern {
        let n = self.n;
        let mut bits = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if self.bits[i * n + k] {
                    for j in 0..n {
                        bits[i * n + j] |= o.bits[k * n + j];
                    }
                }
            }
        }
        Pattern { n, bits }
    }

    fn positive(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }
}

/// Least `n > m` with `M_{[m,n)}` positive and `n − m ≤ cap`.
pub fn positivity_witness(
    sigma: &DirectiveSequence,
    m: usize,
    cap: usize,
) -> Result<Option<usize>> {
    let mut p = Pattern::identity(sigma.alphabet_size());
    for n in m..m + cap {
        p = p.mul(&Pattern::of(sigma.get(n)?));
        if p.positive() {
            return Ok(Some(n + 1));
        }
    }
    Ok(None)
}

/// Result of [`primitivity_check`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitivityReport {
    /// Pairs `(m, n)`: `M_{[m,n)}` is positive, with `n` least.
    pub witnesses: Vec<(usize, usize)>,
    /// First `m` for which no witness was found within the cap.
    pub failed_at: Option<usize>,
    /// Maximal block length searched.
    pub cap: usize,
}

impl PrimitivityReport {
    /// True iff every `m` up to the horizon has a positive block.
    pub fn holds(&self) -> bool {
        self.failed_at.is_none()
    }
}

/// For each `m ≤ horizon` the least `n` with `M_{[m,n)}` positive, searching
/// blocks of length at most `cap`.
pub fn primitivity_check(
    sigma: &DirectiveSequence,
    horizon: usize,
    cap: usize,
) -> Result<PrimitivityReport> {
    let mut witnesses = Vec::new();
    for m in 0..=horizon {
        match positivity_witness(sigma, m, cap)? {
            Some(n) => witnesses.push((m, n)),
            None => {
                return Ok(PrimitivityReport {
                    witnesses,
                    failed_at: Some(m),
                    cap,
                })
            }
        }
    }
    Ok(PrimitivityReport {
        witnesses,
        failed_at: None,
        cap,
    })
}

/// Least `n` in `1..=horizon` with `(σ_n, …, σ_{n+ℓ−1}) = (σ_0, …, σ_{ℓ−1})`.
pub fn recurrence_check(
    sigma: &DirectiveSequence,
    ell: usize,
    horizon: usize,
) -> Result<Option<usize>> {
    if ell == 0 {
        return Err(Error::InvalidArgument(
            "block length must be at least 1".into(),
        ));
    }
    let head = sigma.indices(0, ell)?;
    for n in 1..=horizon {
        let mut matches = true;
        for (k, &h) in head.iter().enumerate() {
            match sigma.index(n + k) {
                Ok(i) if i == h => {}
                Ok(_) => {
                    matches = false;
                    break;
                }
                Err(Error::DirectiveExhausted(_)) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        if matches {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Irreducibility verdict for one window `M_{[m,ℓ)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowIrreducibility {
    pub m: usize,
    pub ell: usize,
    pub char_poly: String,
    pub verdict: Irreducibility,
}

/// Exact irreducibility of the characteristic polynomials of `M_{[m,ℓ)}` for
/// `ℓ = m+1, …, m+span`.
pub fn algebraic_irreducibility_check(
    sigma: &DirectiveSequence,
    m: usize,
    span: usize,
) -> Result<Vec<WindowIrreducibility>> {
    let mut p = IntMatrix::identity(sigma.alphabet_size());
    let mut out = Vec::with_capacity(span);
    for ell in m + 1..=m + span {
        p = p.mul(&sigma.get(ell - 1)?.incidence());
        let cp = p.char_poly();
        out.push(WindowIrreducibility {
            m,
            ell,
            char_poly: cp.to_string(),
            verdict: irreducibility_over_q(&cp),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Generalized right eigenvector

/// Hilbert projective diameter of a set of positive vectors:
/// `max_{x,y} log(max_i x_i/y_i · max_j y_j/x_j)`. Infinite when some vector
/// has a zero entry.
pub fn hilbert_diameter(vectors: &[Vec<f64>]) -> f64 {
    let mut diam = 0.0f64;
    for (a, x) in vectors.iter().enumerate() {
        for y in &vectors[a + 1..] {
            let mut hi = f64::MIN;
            let mut lo = f64::MAX;
            for (xi, yi) in x.iter().zip(y) {
                if *xi <= 0.0 || *yi <= 0.0 {
                    return f64::INFINITY;
                }
                let r = (xi / yi).ln();
                hi = hi.max(r);
                lo = lo.min(r);
            }
            diam = diam.max(hi - lo);
        }
    }
    diam
}

/// Columns of a row-major `n × n` matrix.
fn columns(p: &[f64], n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|j| (0..n).map(|i| p[i * n + j]).collect())
        .collect()
}

/// Output of [`generalized_right_eigenvector`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorEstimate {
    /// Direction of the nested cones, normalised to `‖u‖₁ = 1`.
    pub u: Vec<f64>,
    /// Number of matrices used.
    pub steps: usize,
    /// Hilbert diameter of the column images after each step (infinite while
    /// the product still has zero entries).
    pub diameters: Vec<f64>,
}

/// Direction `u` of `⋂ M_{[0,n)} ℝ^d_{≥0}`, found once the Hilbert diameter of
/// the columns of `M_{[0,n)}` drops below `tolerance`.
///
/// While the entries of the product fit in 52 bits it is computed exactly;
/// afterwards a column-normalised floating-point product is carried on.
pub fn generalized_right_eigenvector(
    sigma: &DirectiveSequence,
    tolerance: f64,
    cap: usize,
) -> Result<EigenvectorEstimate> {
    let d = sigma.alphabet_size();
    if d == 1 {
        return Ok(EigenvectorEstimate {
            u: vec![1.0],
            steps: 0,
            diameters: Vec::new(),
        });
    }
    let limit = num_bigint::BigInt::from(1u64 << 52);
    let mut exact = Some(IntMatrix::identity(d));
    let mut p: Vec<f64> = crate::matrix::dense::from_rows(&IntMatrix::identity(d).to_f64_rows());
    let mut diameters = Vec::new();
    for n in 0..cap {
        let m = sigma.get(n)?.incidence();
        if let Some(e) = exact.take() {
            let next = e.mul(&m);
            let fits = next.rows().iter().flatten().all(|x| *x < limit);
            p = crate::matrix::dense::from_rows(&next.to_f64_rows());
            if fits {
                exact = Some(next);
            }
        } else {
            p = crate::matrix::dense::mul(
                &p,
                &crate::matrix::dense::from_rows(&m.to_f64_rows()),
                d,
            );
        }
        // Normalise columns to unit l1 norm (does not change directions).
        for j in 0..d {
            let s: f64 = (0..d).map(|i| p[i * d + j]).sum();
            if s > 0.0 {
                for i in 0..d {
                    p[i * d + j] /= s;
                }
            }
        }
        let cols = columns(&p, d);
        let diam = hilbert_diameter(&cols);
        diameters.push(diam);
        if diam < tolerance {
            let mut u = vec![0.0; d];
            for c in &cols {
                for (ui, ci) in u.iter_mut().zip(c) {
                    *ui += ci;
                }
            }
            let s: f64 = u.iter().sum();
            u.iter_mut().for_each(|x| *x /= s);
            return Ok(EigenvectorEstimate {
                u,
                steps: n + 1,
                diameters,
            });
        }
    }
    Err(Error::EigenvectorUnavailable {
        steps: cap,
        diameter: diameters.last().copied().unwrap_or(f64::INFINITY),
    })
}

// ---------------------------------------------------------------------------
// Limit sequences

/// Number of levels looked ahead when deciding which letters at a level are
/// the bottom of an (arbitrarily long) chain of first letters.
const LOOKAHEAD: usize = 32;
/// Maximal number of levels a stream may climb.
const MAX_LEVELS: usize = 1 << 16;

fn first_letter(sigma: &Substitution, b: Letter) -> Letter {
    sigma.image(b).first().expect("nonerasing")
}

/// Descends a chain of first letters from `top` at level `from` to level `to`.
fn descend(sigma: &DirectiveSequence, top: Letter, from: usize, to: usize) -> Result<Letter> {
    let mut a = top;
    for n in (to..from).rev() {
        a = first_letter(sigma.get(n)?, a);
    }
    Ok(a)
}

/// Letters at `level` reached from some letter at `level + LOOKAHEAD`.
fn admissible_letters(sigma: &DirectiveSequence, level: usize) -> Result<Vec<Letter>> {
    let d = sigma.alphabet_size();
    let mut set = BTreeSet::new();
    for i in 0..d {
        match descend(sigma, Letter::from_index(i), level + LOOKAHEAD, level) {
            Ok(a) => {
                set.insert(a);
            }
            // Finite directives: every letter at the last level is admissible.
            Err(Error::DirectiveExhausted(_)) => {
                return Ok((0..d).map(Letter::from_index).collect())
            }
            Err(e) => return Err(e),
        }
    }
    Ok(set.into_iter().collect())
}

/// The first `limit` letters of `σ_{[0,level)}(top)`.
fn truncated_expansion(
    sigma: &DirectiveSequence,
    top: Letter,
    level: usize,
    limit: usize,
) -> Result<Vec<Letter>> {
    let mut w = vec![top];
    for k in (0..level).rev() {
        w = sigma.get(k)?.apply_truncated(&w, limit)?.into_letters();
    }
    w.truncate(limit);
    Ok(w)
}

/// Saturating lengths `|σ_{[0,n+1)}(b)|` from `|σ_{[0,n)}(·)|`.
fn next_lengths(sigma_n: &Substitution, lengths: &[u64]) -> Vec<u64> {
    sigma_n
        .images()
        .iter()
        .map(|img| {
            img.letters()
                .iter()
                .fold(0u64, |acc, c| acc.saturating_add(lengths[c.index()]))
        })
        .collect()
}

struct ChainProducer {
    sigma: DirectiveSequence,
    level: usize,
    top: Letter,
    lengths: Vec<u64>,
}

impl ChainProducer {
    fn climb(&mut self) -> Result<()> {
        let target = self.level + 1;
        // The new top letter at `target` is the one lying on the chain of the
        // smallest letter, LOOKAHEAD levels higher, that descends to `top`.
        let d = self.sigma.alphabet_size();
        let mut chosen = None;
        for i in 0..d {
            let far = Letter::from_index(i);
            let at_target = match descend(&self.sigma, far, target + LOOKAHEAD, target) {
                Ok(a) => a,
                Err(Error::DirectiveExhausted(_)) => far,
                Err(e) => return Err(e),
            };
            if first_letter(self.sigma.get(self.level)?, at_target) == self.top {
                chosen = Some(at_target);
                break;
            }
        }
        let next = chosen.ok_or(Error::ChainDied(self.level))?;
        self.lengths = next_lengths(self.sigma.get(self.level)?, &self.lengths);
        self.level = target;
        self.top = next;
        Ok(())
    }

    fn produce(&mut self, min_len: usize) -> Result<Vec<Letter>> {
        let start = self.level;
        while self.lengths[self.top.index()] < min_len as u64 {
            if self.level >= start + MAX_LEVELS {
                return Err(Error::NotPrimitive(self.level));
            }
            match self.climb() {
                Err(Error::DirectiveExhausted(_)) => {
                    return Err(Error::InsufficientData {
                        needed: min_len,
                        available: self.lengths[self.top.index()] as usize,
                    })
                }
                other => other?,
            }
        }
        truncated_expansion(&self.sigma, self.top, self.level, min_len)
    }
}

/// A limit sequence `w = lim σ_{[0,n)}(a_n)` of a directive sequence.
#[derive(Clone, Debug)]
pub struct LimitSequence {
    directive: DirectiveSequence,
    first_letters: Vec<Letter>,
    stream: Arc<InfiniteWordStream>,
}

impl LimitSequence {
    pub fn directive(&self) -> &DirectiveSequence {
        &self.directive
    }

    /// The chain `a_0, a_1, …, a_D` of first letters fixed at construction.
    pub fn first_letters(&self) -> &[Letter] {
        &self.first_letters
    }

    pub fn stream(&self) -> &InfiniteWordStream {
        &self.stream
    }

    pub fn prefix(&self, n: usize) -> Result<Word> {
        self.stream.prefix(n)
    }

    pub fn letter(&self, k: usize) -> Result<Letter> {
        self.stream.letter(k)
    }

    /// `σ_{[0,n)}(a_n)` for `n` within the constructed chain.
    pub fn level_word(&self, n: usize) -> Result<Word> {
        let a = *self.first_letters.get(n).ok_or(Error::InsufficientData {
            needed: n + 1,
            available: self.first_letters.len(),
        })?;
        Ok(self.directive.composite(0, n)?.apply(&[a])?)
    }
}

/// All limit sequences of `sigma` distinguishable at the given depth, ordered
/// by first letter.
///
/// `M_{[0,n)}` must be positive for some `n ≤ depth`. Chains of first letters
/// are enumerated from the admissible letters at level `depth`; chains whose
/// expansions agree up to the shortest expansion length are merged.
pub fn limit_sequences(sigma: &DirectiveSequence, depth: usize) -> Result<Vec<LimitSequence>> {
    let level = positivity_witness(sigma, 0, depth)?.ok_or(Error::NotPrimitive(depth))?;
    let depth = depth.max(level);
    let tops = admissible_letters(sigma, depth)?;
    let mut lengths = vec![1u64; sigma.alphabet_size()];
    for n in 0..depth {
        lengths = next_lengths(sigma.get(n)?, &lengths);
    }
    let compare_len = tops
        .iter()
        .map(|t| lengths[t.index()])
        .min()
        .unwrap_or(1)
        .min(4096) as usize;
    let mut seen: Vec<(Vec<Letter>, Letter)> = Vec::new();
    for &top in &tops {
        let word = truncated_expansion(sigma, top, depth, compare_len)?;
        if !seen.iter().any(|(w, _)| *w == word) {
            seen.push((word, top));
        }
    }
    let mut out = Vec::new();
    for (_, top) in seen {
        let mut chain = vec![top];
        for n in (0..depth).rev() {
            let next = first_letter(sigma.get(n)?, *chain.last().expect("nonempty"));
            chain.push(next);
        }
        chain.reverse();
        let mut producer = ChainProducer {
            sigma: sigma.clone(),
            level: depth,
            top,
            lengths: lengths.clone(),
        };
        let stream = InfiniteWordStream::new(move |n: usize| producer.produce(n));
        out.push(LimitSequence {
            directive: sigma.clone(),
            first_letters: chain,
            stream: Arc::new(stream),
        });
    }
    out.sort_by_key(|l| l.first_letters[0]);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Language

/// Result of [`language`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageReport {
    /// All words of length `≤ L` found (including the empty word).
    pub words: BTreeSet<Word>,
    /// Whether the set stopped growing for two consecutive horizons.
    pub stabilized: bool,
    /// Last horizon `n` used (the images `σ_{[m,n)}(a)` were examined).
    pub horizon: usize,
}

const LANGUAGE_IMAGE_CAP: usize = 1 << 22;

/// Factors of length `≤ max_len` of the words `σ_{[m,n)}(a)`, for growing `n`
/// until the set is unchanged for two consecutive horizons.
pub fn language(sigma: &DirectiveSequence, m: usize, max_len: usize) -> Result<LanguageReport> {
    let mut words: BTreeSet<Word> = BTreeSet::from([Word::empty()]);
    if max_len == 0 {
        return Ok(LanguageReport {
            words,
            stabilized: true,
            horizon: m,
        });
    }
    let d = sigma.alphabet_size();
    let mut images: Vec<Vec<Letter>> = (0..d).map(|i| vec![Letter::from_index(i)]).collect();
    let mut unchanged = 0;
    let mut n = m;
    loop {
        let before = words.len();
        for img in &images {
            for len in 1..=max_len.min(img.len()) {
                words.extend(factors(img, len)?);
            }
        }
        if words.len() == before && n > m {
            unchanged += 1;
            if unchanged >= 2 {
                return Ok(LanguageReport {
                    words,
                    stabilized: true,
                    horizon: n,
                });
            }
        } else {
            unchanged = 0;
        }
        // Next horizon: σ_{[m,n+1)}(a) = σ_{[m,n)}(σ_n(a)).
        let composite = sigma.composite(m, n + 1);
        let composite = match composite {
            Ok(c) => c,
            Err(Error::DirectiveExhausted(_)) => {
                return Ok(LanguageReport {
                    words,
                    stabilized: false,
                    horizon: n,
                })
            }
            Err(e) => return Err(e),
        };
        if composite
            .images()
            .iter()
            .any(|w| w.len() > LANGUAGE_IMAGE_CAP)
        {
            return Ok(LanguageReport {
                words,
                stabilized: false,
                horizon: n,
            });
        }
        images = composite
            .images()
            .iter()
            .map(|w| w.letters().to_vec())
            .collect();
        n += 1;
    }
}

// ---------------------------------------------------------------------------
// Frequencies

/// Output of [`letter_frequencies`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub frequencies: Vec<f64>,
    pub horizon: usize,
    /// Window length used for the uniformity estimate.
    pub window: usize,
    /// `max` over windows and letters of `|count/window − frequency|`.
    pub max_window_deviation: f64,
}

/// Empirical letter frequencies on a prefix and the worst deviation over all
/// windows of length `horizon / 10`.
pub fn letter_frequencies(w: &LimitSequence, horizon: usize) -> Result<FrequencyReport> {
    let d = w.directive().alphabet_size();
    frequencies_of(w.prefix(horizon)?.letters(), d)
}

/// [`letter_frequencies`] on an explicit prefix.
pub fn frequencies_of(prefix: &[Letter], d: usize) -> Result<FrequencyReport> {
    let horizon = prefix.len();
    if horizon == 0 {
        return Err(Error::InsufficientData {
            needed: 1,
            available: 0,
        });
    }
    let mut counts = vec![0usize; d];
    for l in prefix {
        counts[l.index()] += 1;
    }
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / horizon as f64).collect();
    let window = (horizon / 10).max(1);
    let mut deviation = 0.0f64;
    let mut win = vec![0usize; d];
    for l in &prefix[..window] {
        win[l.index()] += 1;
    }
    for start in 0..=horizon - window {
        if start > 0 {
            win[prefix[start - 1].index()] -= 1;
            win[prefix[start + window - 1].index()] += 1;
        }
        for (c, f) in win.iter().zip(&frequencies) {
            deviation = deviation.max((*c as f64 / window as f64 - f).abs());
        }
    }
    Ok(FrequencyReport {
        frequencies,
        horizon,
        window,
        max_window_deviation: deviation,
    })
}

// ---------------------------------------------------------------------------
// Imbalanced Arnoux–Rauzy blocks

/// A finite Arnoux–Rauzy composition whose images are not `C`-balanced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImbalancedBlock {
    /// `C` requested.
    pub c: u64,
    /// 0-based AR indices `i_0, …, i_{k−1}` with `σ = σ_{i_0} ∘ ⋯ ∘ σ_{i_{k−1}}`.
    pub indices: Vec<usize>,
    pub substitution: Substitution,
    /// Two equal-length words, factors of `σ(w)` for every AR word `w`.
    pub u: Word,
    pub v: Word,
    pub letter: Letter,
    pub imbalance: u64,
}

/// `σ_{(a,+)}(x) = σ_a(x)·a`.
fn ar_plus(a: usize, x: &[Letter]) -> Vec<Letter> {
    let mut out = ar_apply(a, x);
    out.push(Letter::from_index(a));
    out
}

/// `σ_{(a,−)}(x) = a^{-1}·σ_a(x)` (every `σ_a`-image starts with `a`).
fn ar_minus(a: usize, x: &[Letter]) -> Vec<Letter> {
    let mut out = ar_apply(a, x);
    out.remove(0);
    out
}

fn ar_apply(a: usize, x: &[Letter]) -> Vec<Letter> {
    let la = Letter::from_index(a);
    let mut out = Vec::with_capacity(2 * x.len());
    for &l in x {
        if l != la {
            out.push(la);
        }
        out.push(l);
    }
    out
}

/// Builds an Arnoux–Rauzy composition `σ` and two factors of its images with
/// imbalance `C + 1`, by the standard induction:
/// starting from `σ = σ_1 σ_2`, `u = 212`, `v = 131` and `(i, j, k) = (1, 2, 3)`,
/// each round sets
/// `u ← σ_{(k,−)}^n σ_{(i,+)}^n (v)`, `v ← σ_{(k,+)}^n σ_{(i,−)}^n (u)`,
/// `σ ← σ_k^n ∘ σ_i^n ∘ σ` and rotates `(i, j, k) ← (k, i, j)`.
pub fn imbalanced_ar_block(c: u64) -> Result<ImbalancedBlock> {
    if c == 0 {
        return Err(Error::InvalidArgument("C must be at least 1".into()));
    }
    let target = usize::try_from(c).map_err(|_| Error::Overflow("imbalance level"))? + 1;
    let ar = Family::ArnouxRauzy(3).substitutions();
    let mut indices = vec![0usize, 1];
    let mut u = Word::from_values(&[2, 1, 2])?.into_letters();
    let mut v = Word::from_values(&[1, 3, 1])?.into_letters();
    let (mut i, mut j, mut k) = (0usize, 1usize, 2usize);
    for n in 2..target {
        let mut nu = v.clone();
        for _ in 0..n {
            nu = ar_plus(i, &nu);
        }
        for _ in 0..n {
            nu = ar_minus(k, &nu);
        }
        let mut nv = u.clone();
        for _ in 0..n {
            nv = ar_minus(i, &nv);
        }
        for _ in 0..n {
            nv = ar_plus(k, &nv);
        }
        let mut next = vec![k; n];
        next.extend(std::iter::repeat(i).take(n));
        next.extend(indices);
        indices = next;
        u = nu;
        v = nv;
        (i, j, k) = (k, i, j);
    }
    let _ = j;
    let substitution =
        Substitution::compose_all(&indices.iter().map(|&x| ar[x].clone()).collect::<Vec<_>>())?;
    let (imbalance, letter) = crate::words::imbalance(&u, &v);
    Ok(ImbalancedBlock {
        c,
        indices,
        substitution,
        u: Word::new(u),
        v: Word::new(v),
        letter,
        imbalance,
    })
}

// ---------------------------------------------------------------------------
// Hypothesis report

/// Options for [`hypothesis_report`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisOptions {
    /// Positions `m` checked for primitivity.
    pub primitivity_horizon: usize,
    /// Maximal positive-block length searched.
    pub primitivity_cap: usize,
    /// Block lengths checked for recurrence.
    pub recurrence_lengths: Vec<usize>,
    /// Search horizon for returns of a block.
    pub recurrence_horizon: usize,
    /// Window start and span for the irreducibility check.
    pub irreducibility_start: usize,
    pub irreducibility_span: usize,
    /// Balance constant and horizon (prefix length of the first limit sequence).
    pub balance_c: u64,
    pub balance_horizon: usize,
    /// Depth for the limit sequence construction.
    pub depth: usize,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        HypothesisOptions {
            primitivity_horizon: 32,
            primitivity_cap: 64,
            recurrence_lengths: vec![1, 2, 4, 8],
            recurrence_horizon: 10_000,
            irreducibility_start: 0,
            irreducibility_span: 6,
            balance_c: 2,
            balance_horizon: 10_000,
            depth: 48,
        }
    }
}

/// A returning block: `(σ_0..σ_{ℓ−1})` reappears at position `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrenceWitness {
    pub block_length: usize,
    pub return_index: Option<usize>,
}

/// Balance verdict on a prefix of the first limit sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub c: u64,
    pub horizon: usize,
    pub verdict: BalanceVerdict,
}

/// Finite-horizon evidence for the hypotheses of the convergence and
/// tiling results: every positive claim is accompanied by its witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub directive: String,
    pub primitivity: PrimitivityReport,
    pub recurrence: Vec<RecurrenceWitness>,
    pub irreducibility: Vec<WindowIrreducibility>,
    pub balance: Option<BalanceReport>,
    /// Summary labels; combinations of finite-horizon evidence are only ever
    /// reported as "witnessed up to horizon".
    pub notes: Vec<String>,
}

impl HypothesisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Collects primitivity, recurrence, irreducibility and balance evidence.
pub fn hypothesis_report(
    sigma: &DirectiveSequence,
    opts: &HypothesisOptions,
) -> Result<HypothesisReport> {
    let primitivity = primitivity_check(sigma, opts.primitivity_horizon, opts.primitivity_cap)?;
    let recurrence = opts
        .recurrence_lengths
        .iter()
        .map(|&ell| {
            Ok(RecurrenceWitness {
                block_length: ell,
                return_index: recurrence_check(sigma, ell, opts.recurrence_horizon)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let irreducibility =
        algebraic_irreducibility_check(sigma, opts.irreducibility_start, opts.irreducibility_span)?;
    let mut notes = Vec::new();
    let balance = if primitivity.holds() {
        let seqs = limit_sequences(sigma, opts.depth)?;
        let prefix = seqs[0].prefix(opts.balance_horizon)?;
        let verdict = balance_check(prefix.letters(), opts.balance_c);
        Some(BalanceReport {
            c: opts.balance_c,
            horizon: opts.balance_horizon,
            verdict,
        })
    } else {
        notes.push("primitivity not witnessed: limit sequences and balance not evaluated".into());
        None
    };
    if primitivity.holds() {
        notes.push(format!(
            "primitive: witnessed up to horizon {} (minimality and unique ergodicity follow when primitivity holds for all m)",
            opts.primitivity_horizon
        ));
    }
    let recurrent = recurrence.iter().all(|r| r.return_index.is_some());
    if recurrent {
        notes.push(format!(
            "recurrent: witnessed up to horizon {} for the listed block lengths",
            opts.recurrence_horizon
        ));
    }
    if irreducibility.iter().any(|w| w.verdict.is_irreducible()) {
        notes.push("algebraic irreducibility: witnessed on the listed windows only".into());
    }
    if let Some(b) = &balance {
        if b.verdict.is_balanced() && recurrent {
            notes.push(format!(
                "recurrence and {}-balance: witnessed up to horizon {} (not a certificate for the whole language)",
                b.c, b.horizon
            ));
        }
    }
    Ok(HypothesisReport {
        directive: sigma.to_string(),
        primitivity,
        recurrence,
        irreducibility,
        balance,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn tribonacci() -> DirectiveSequence {
        DirectiveSequence::parse("tribonacci").unwrap()
    }

    fn fib_variant() -> DirectiveSequence {
        DirectiveSequence::parse("sturmian:(1,2)^ω").unwrap()
    }

    /// Independent oracle: iterate a substitution given as a closure.
    fn iterate(start: u8, n: usize, rule: impl Fn(u8) -> Vec<u8>) -> String {
        let mut cur = vec![start];
        while cur.len() < n {
            cur = cur.iter().flat_map(|&c| rule(c)).collect();
        }
        cur[..n].iter().map(|c| char::from(b'0' + c)).collect()
    }

    #[test]
    fn parse_grammar() {
        let d = DirectiveSequence::parse("brun:(1,2,1,2)^ω").unwrap();
        assert_eq!(d.indices(0, 6).unwrap(), vec![0, 1, 0, 1, 0, 1]);
        let e = DirectiveSequence::parse("ar:3,(1,2)^w").unwrap();
        assert_eq!(e.indices(0, 5).unwrap(), vec![2, 0, 1, 0, 1]);
        let f = DirectiveSequence::parse("brun:[1,3]").unwrap();
        assert!(matches!(f.index(2), Err(Error::DirectiveExhausted(2))));
        let s = DirectiveSequence::parse("sturmian:1,2").unwrap();
        assert_eq!(s.indices(0, 6).unwrap(), vec![0, 1, 1, 0, 1, 1]);
        let odd = DirectiveSequence::parse("sturmian:2").unwrap();
        assert_eq!(odd.indices(0, 4).unwrap(), vec![0, 0, 1, 1]);
        assert!(DirectiveSequence::parse("brun:(4)^ω").is_err());
        assert!(DirectiveSequence::parse("nope").is_err());
        assert_eq!(d.to_string(), "brun:(1,2,1,2)^ω");
        assert_eq!(DirectiveSequence::parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn generated_sequences_are_repeatable() {
        let a = DirectiveSequence::parse("ar:seed=42:markov").unwrap();
        let b = DirectiveSequence::parse("ar:seed=42:markov").unwrap();
        let wa = a.indices(0, 200).unwrap();
        assert_eq!(wa, b.indices(0, 200).unwrap());
        assert_eq!(wa, a.indices(0, 200).unwrap());
        assert!(wa.windows(2).all(|p| p[0] != p[1]));
        assert_eq!(a.shifted(5).indices(0, 10).unwrap(), wa[5..15].to_vec());
        let u = DirectiveSequence::parse("brun:seed=7").unwrap();
        assert!(u.indices(0, 300).unwrap().iter().all(|&i| i < 3));
    }

    #[test]
    fn tribonacci_limit_word() {
        let seqs = limit_sequences(&tribonacci(), 24).unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(
            seqs[0].prefix(31).unwrap().to_string(),
            "1213121121312121312112131213121"
        );
        let oracle = iterate(1, 5000, |c| match c {
            1 => vec![1, 2],
            2 => vec![1, 3],
            _ => vec![1],
        });
        assert_eq!(seqs[0].prefix(5000).unwrap().to_string(), oracle);
    }

    #[test]
    fn fibonacci_variant_limit_words() {
        let seqs = limit_sequences(&fib_variant(), 24).unwrap();
        assert_eq!(seqs.len(), 2);
        assert_eq!(
            seqs[1].prefix(29).unwrap().to_string(),
            "21121121211211212112121121121"
        );
        let oracle = iterate(2, 3000, |c| if c == 1 { vec![1, 2, 1] } else { vec![2, 1] });
        assert_eq!(seqs[1].prefix(3000).unwrap().to_string(), oracle);
        // The two limit sequences differ only in their first two letters.
        let a = seqs[0].prefix(3000).unwrap();
        let b = seqs[1].prefix(3000).unwrap();
        assert_eq!(a.letters()[2..], b.letters()[2..]);
    }

    #[test]
    fn constant_ar_is_not_primitive() {
        let d = DirectiveSequence::parse("ar:(1)^ω").unwrap();
        assert!(matches!(
            limit_sequences(&d, 30),
            Err(Error::NotPrimitive(30))
        ));
    }

    #[test]
    fn ar_random_limit_word_is_arnoux_rauzy() {
        let d = DirectiveSequence::parse("ar:seed=3:markov").unwrap();
        let seqs = limit_sequences(&d, 30).unwrap();
        assert_eq!(seqs.len(), 1);
        let p = seqs[0].prefix(20_000).unwrap();
        for n in 1..=12 {
            assert_eq!(
                crate::words::factor_count(p.letters(), n).unwrap(),
                2 * n + 1,
                "n = {n}"
            );
        }
    }

    #[test]
    fn nested_prefixes_and_desubstitution() {
        for d in [
            tribonacci(),
            fib_variant(),
            DirectiveSequence::parse("brun:(1,2,3,1,2)^ω").unwrap(),
        ] {
            for seq in limit_sequences(&d, 20).unwrap() {
                let long = seq.prefix(4000).unwrap();
                for n in 0..12 {
                    let lw = seq.level_word(n).unwrap();
                    let k = lw.len().min(4000);
                    assert_eq!(&long.letters()[..k], &lw.letters()[..k], "{d} level {n}");
                }
                // σ_{[0,n)} applied to a prefix of the desubstituted sequence.
                let n = 4;
                let shifted = limit_sequences(&d.shifted(n), 20).unwrap();
                let inner = shifted
                    .iter()
                    .find(|s| s.first_letters()[0] == seq.first_letters()[n])
                    .unwrap();
                let image = d
                    .composite(0, n)
                    .unwrap()
                    .apply(inner.prefix(200).unwrap().letters())
                    .unwrap();
                let k = image.len().min(4000);
                assert_eq!(&image.letters()[..k], &long.letters()[..k]);
            }
        }
    }

    #[test]
    fn languages() {
        let l = language(&fib_variant(), 0, 2).unwrap();
        let two: Vec<String> = l
            .words
            .iter()
            .filter(|w| w.len() == 2)
            .map(|w| w.to_string())
            .collect();
        assert_eq!(two, vec!["11", "12", "21"]);
        assert!(l.stabilized);
        let l0 = language(&tribonacci(), 0, 0).unwrap();
        assert_eq!(l0.words.len(), 1);
        let lt = language(&tribonacci(), 0, 2).unwrap();
        assert_eq!(lt.words.iter().filter(|w| w.len() == 2).count(), 5);
    }

    #[test]
    fn primitivity_examples() {
        let brun = DirectiveSequence::parse("brun:3,3,(1,2,1,2)^ω").unwrap();
        let r = primitivity_check(&brun, 4, 16).unwrap();
        assert!(r.holds());
        let block = DirectiveSequence::parse("brun:(1,2,1,2)^ω").unwrap();
        assert_eq!(positivity_witness(&block, 0, 4).unwrap(), Some(4));
        let ar1 = DirectiveSequence::parse("ar:(1)^ω").unwrap();
        assert!(!primitivity_check(&ar1, 0, 50).unwrap().holds());
        assert_eq!(positivity_witness(&tribonacci(), 0, 10).unwrap(), Some(3));
    }

    #[test]
    fn recurrence_examples() {
        let p = DirectiveSequence::parse("brun:(1,2,3)^ω").unwrap();
        assert_eq!(recurrence_check(&p, 3, 100).unwrap(), Some(3));
        let e = DirectiveSequence::parse("brun:3,(1,2)^ω").unwrap();
        assert_eq!(recurrence_check(&e, 1, 1000).unwrap(), None);
        assert_eq!(recurrence_check(&tribonacci(), 4, 10).unwrap(), Some(1));
    }

    #[test]
    fn irreducibility_examples() {
        let t = algebraic_irreducibility_check(&tribonacci(), 0, 1).unwrap();
        assert_eq!(t[0].char_poly, "x^3 - x^2 - x - 1");
        assert!(t[0].verdict.is_irreducible());
        let b3 = DirectiveSequence::parse("brun:(3)^ω").unwrap();
        for v in algebraic_irreducibility_check(&b3, 0, 4).unwrap() {
            assert!(v.verdict.is_reducible(), "{}", v.char_poly);
        }
    }

    #[test]
    fn eigenvectors() {
        let e = generalized_right_eigenvector(&tribonacci(), 1e-12, 200).unwrap();
        // Oracle: Perron vector (β², β, 1) with β the real root of x³ − x² − x − 1.
        let mut beta = 1.8f64;
        for _ in 0..60 {
            beta -=
                (beta.powi(3) - beta * beta - beta - 1.0) / (3.0 * beta * beta - 2.0 * beta - 1.0);
        }
        let s = beta * beta + beta + 1.0;
        for (x, y) in e.u.iter().zip([beta * beta / s, beta / s, 1.0 / s]) {
            assert!((x - y).abs() < 1e-10);
        }
        let f = generalized_right_eigenvector(&fib_variant(), 1e-12, 400).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((f.u[0] - phi / (1.0 + phi)).abs() < 1e-10);
        let diam: Vec<f64> = f
            .diameters
            .iter()
            .copied()
            .filter(|d| d.is_finite())
            .collect();
        assert!(diam.windows(2).all(|p| p[1] <= p[0] + 1e-12));
        let ar1 = DirectiveSequence::parse("ar:(1)^ω").unwrap();
        assert!(generalized_right_eigenvector(&ar1, 1e-12, 50).is_err());
    }

    #[test]
    fn frequencies() {
        let seqs = limit_sequences(&fib_variant(), 24).unwrap();
        let r = letter_frequencies(&seqs[1], 100_000).unwrap();
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        assert!((r.frequencies[0] - inv_phi).abs() < 1e-3);
        let constant = frequencies_of(w("1111").letters(), 2).unwrap();
        assert_eq!(constant.frequencies, vec![1.0, 0.0]);
    }

    #[test]
    fn imbalanced_blocks() {
        let b1 = imbalanced_ar_block(1).unwrap();
        assert_eq!(b1.indices, vec![0, 1]);
        assert_eq!(
            (b1.u.to_string().as_str(), b1.v.to_string().as_str()),
            ("212", "131")
        );
        assert_eq!(b1.imbalance, 2);
        let b2 = imbalanced_ar_block(2).unwrap();
        assert_eq!(b2.indices, vec![2, 2, 0, 0, 0, 1]);
        assert_eq!(b2.imbalance, 3);
        assert_eq!(b2.u.len(), b2.v.len());
        for c in 1..=4u64 {
            let b = imbalanced_ar_block(c).unwrap();
            assert!(b.imbalance > c);
            assert_eq!(b.u.len(), b.v.len());
            // Both words are factors of σ(w) for an AR word w.
            let d = DirectiveSequence::parse("ar:seed=11:markov").unwrap();
            let seq = &limit_sequences(&d, 30).unwrap()[0];
            let image = b
                .substitution
                .apply(seq.prefix(300).unwrap().letters())
                .unwrap();
            let text = image.to_string();
            assert!(
                text.contains(&b.u.to_string()) && text.contains(&b.v.to_string()),
                "C = {c}"
            );
            assert!(!balance_check(image.letters(), c).is_balanced());
        }
    }

    #[test]
    fn report_json() {
        let r = hypothesis_report(&tribonacci(), &HypothesisOptions::default()).unwrap();
        assert!(r.primitivity.holds());
        assert!(r.balance.as_ref().unwrap().verdict.is_balanced());
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["directive"], "tribonacci:(1)^ω");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_ar_words_nested_and_balanced_frequencies(seed in 0u64..1000) {
            let d = DirectiveSequence::parse(&format!("ar:seed={seed}:markov")).unwrap();
            let seqs = limit_sequences(&d, 30).unwrap();
            prop_assert_eq!(seqs.len(), 1);
            let p = seqs[0].prefix(3000).unwrap();
            for n in 0..10 {
                let lw = seqs[0].level_word(n).unwrap();
                let k = lw.len().min(3000);
                prop_assert_eq!(&p.letters()[..k], &lw.letters()[..k]);
            }
        }
    }
}

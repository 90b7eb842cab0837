//! Faces `[x,i]`, discrete hyperplanes `Γ(w)`, patches, the dual
//! substitution `E₁*(σ)` and the combinatorial checks built on them
//! (hyperplane transport, coincidence conditions, minimal combinatorial
//! radius).
//!
//! A face `[x,i]` is realised geometrically as the unit hypercube
//! `x + Σ_{j≠i} λ_j e_j` (`λ_j ∈ [0,1]`), i.e. the face of the unit cube at
//! `x` orthogonal to `e_i`. Balls of a discrete hyperplane are measured with
//! the sup-norm of the translate `x`.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::IntMatrix;
use crate::sadic::{generalized_right_eigenvector, DirectiveSequence};
use crate::substitution::Substitution;
use crate::words::{abelianize, Letter, Word};
use crate::{Error, Result};

/// Default upper bound on the number of faces of an iterated patch.
pub const DEFAULT_PATCH_BUDGET: usize = 1_000_000;

/// Patches smaller than this are mapped sequentially.
const PARALLEL_THRESHOLD: usize = 4096;

/// A face `[x, i]` with integer translate `x` and type `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    pub x: Vec<i64>,
    pub i: Letter,
}

impl Face {
    pub fn new(x: Vec<i64>, i: Letter) -> Self {
        Face { x, i }
    }

    /// `[0, i]` in dimension `d`.
    pub fn origin(d: usize, i: Letter) -> Self {
        Face { x: vec![0; d], i }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Closed axis-parallel box `[lo_c, hi_c]` per coordinate.
    fn bounds(&self, c: usize) -> (i64, i64) {
        if c == self.i.index() {
            (self.x[c], self.x[c])
        } else {
            (self.x[c], self.x[c] + 1)
        }
    }

    /// True iff the closed hypercubes of the two faces intersect.
    pub fn touches(&self, other: &Face) -> bool {
        (0..self.dim()).all(|c| {
            let (a0, a1) = self.bounds(c);
            let (b0, b1) = other.bounds(c);
            a0.max(b0) <= a1.min(b1)
        })
    }

    /// The `(d−2)`-dimensional facets of the face, each keyed by its base
    /// point and the (sorted) pair of coordinates it is constant in.
    fn facets(&self) -> Vec<(Vec<i64>, usize, usize)> {
        let i = self.i.index();
        let mut out = Vec::with_capacity(2 * (self.dim() - 1));
        for c in (0..self.dim()).filter(|&c| c != i) {
            for s in 0..2 {
                let mut p = self.x.clone();
                p[c] += s;
                out.push((p, i.min(c), i.max(c)));
            }
        }
        out
    }
}

impl fmt::Display for Face {
    /// `[x1 x2 … xd, i]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let xs: Vec<String> = self.x.iter().map(|v| v.to_string()).collect();
        write!(f, "[({}), {}]", xs.join(","), self.i)
    }
}

/// A finite, duplicate-free set of faces.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    faces: BTreeSet<Face>,
}

impl Patch {
    pub fn new() -> Self {
        Self::default()
    }

    /// `𝒰 = {[0,1], …, [0,d]}`.
    pub fn unit_seed(d: usize) -> Self {
        (0..d)
            .map(|i| Face::origin(d, Letter::from_index(i)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn contains(&self, f: &Face) -> bool {
        self.faces.contains(f)
    }

    pub fn insert(&mut self, f: Face) -> bool {
        self.faces.insert(f)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter()
    }

    pub fn is_subset(&self, other: &Patch) -> bool {
        self.faces.is_subset(&other.faces)
    }

    /// The translate `v + P`.
    pub fn translated(&self, v: &[i64]) -> Patch {
        self.faces
            .iter()
            .map(|f| Face::new(f.x.iter().zip(v).map(|(a, b)| a + b).collect(), f.i))
            .collect()
    }

    /// One line `x1 x2 … xd i` per face, in sorted order.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for f in &self.faces {
            for v in &f.x {
                out.push_str(&v.to_string());
                out.push(' ');
            }
            out.push_str(&f.i.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the output of [`Patch::to_lines`]; blank lines are skipped.
    pub fn from_lines(text: &str) -> Result<Patch> {
        let mut patch = Patch::new();
        let mut dim = None;
        let mut offset = 0;
        for line in text.lines() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                let bad = |message: String| Error::Parse {
                    position: offset,
                    message,
                };
                let nums = fields
                    .iter()
                    .map(|s| s.parse::<i64>().map_err(|e| bad(format!("`{s}`: {e}"))))
                    .collect::<Result<Vec<i64>>>()?;
                let (last, x) = nums.split_last().expect("nonempty");
                if *dim.get_or_insert(x.len()) != x.len() || x.is_empty() {
                    return Err(bad("inconsistent face dimension".into()));
                }
                let i = u8::try_from(*last).map_err(|_| bad(format!("bad face type {last}")))?;
                let letter = Letter::new(i)?;
                if letter.index() >= x.len() {
                    return Err(bad(format!("face type {i} exceeds dimension {}", x.len())));
                }
                patch.insert(Face::new(x.to_vec(), letter));
            }
            offset += line.len() + 1;
        }
        Ok(patch)
    }
}

impl FromIterator<Face> for Patch {
    fn from_iter<T: IntoIterator<Item = Face>>(iter: T) -> Self {
        Patch {
            faces: iter.into_iter().collect(),
        }
    }
}

impl IntoIterator for Patch {
    type Item = Face;
    type IntoIter = std::collections::btree_set::IntoIter<Face>;
    fn into_iter(self) -> Self::IntoIter {
        self.faces.into_iter()
    }
}

impl<'a> IntoIterator for &'a Patch {
    type Item = &'a Face;
    type IntoIter = std::collections::btree_set::Iter<'a, Face>;
    fn into_iter(self) -> Self::IntoIter {
        self.faces.iter()
    }
}

/// Normal vector `w` of a discrete hyperplane `Γ(w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "normal", rename_all = "snake_case")]
pub enum HyperplaneSpec {
    /// Exact integer normal; membership is decided exactly.
    Integer(Vec<i64>),
    /// Real normal; membership is evaluated in floating point.
    Real(Vec<f64>),
}

impl HyperplaneSpec {
    /// Nonnegative, nonzero integer normal.
    pub fn integer(w: Vec<i64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|&v| v < 0) || w.iter().all(|&v| v == 0) {
            return Err(Error::InvalidArgument(format!(
                "normal {w:?} must be nonnegative and nonzero"
            )));
        }
        Ok(HyperplaneSpec::Integer(w))
    }

    /// Nonnegative, nonzero real normal.
    pub fn real(w: Vec<f64>) -> Result<Self> {
        if w.is_empty()
            || w.iter().any(|&v| !(v >= 0.0) || !v.is_finite())
            || w.iter().all(|&v| v == 0.0)
        {
            return Err(Error::InvalidArgument(format!(
                "normal {w:?} must be nonnegative and nonzero"
            )));
        }
        Ok(HyperplaneSpec::Real(w))
    }

    /// The all-ones normal `𝟏` in dimension `d`.
    pub fn ones(d: usize) -> Self {
        HyperplaneSpec::Integer(vec![1; d])
    }

    pub fn from_big(w: &[BigInt]) -> Result<Self> {
        Self::integer(
            w.iter()
                .map(|v| v.to_i64().ok_or(Error::Overflow("hyperplane normal")))
                .collect::<Result<_>>()?,
        )
    }

    pub fn dim(&self) -> usize {
        match self {
            HyperplaneSpec::Integer(w) => w.len(),
            HyperplaneSpec::Real(w) => w.len(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, HyperplaneSpec::Integer(_))
    }

    fn as_f64(&self) -> Vec<f64> {
        match self {
            HyperplaneSpec::Integer(w) => w.iter().map(|&v| v as f64).collect(),
            HyperplaneSpec::Real(w) => w.clone(),
        }
    }

    /// `Mᵗ w` for an integer normal; the normal of the image hyperplane under
    /// `E₁*(σ)` when `M = M_σ`.
    pub fn transported(&self, m: &IntMatrix) -> Result<Self> {
        match self {
            HyperplaneSpec::Integer(w) => Self::from_big(&m.transpose().mul_vec_i64(w)),
            HyperplaneSpec::Real(w) => {
                let rows = m.to_f64_rows();
                let d = w.len();
                Self::real(
                    (0..d)
                        .map(|j| (0..d).map(|i| rows[i][j] * w[i]).sum())
                        .collect(),
                )
            }
        }
    }
}

impl fmt::Display for HyperplaneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperplaneSpec::Integer(w) => write!(f, "{w:?}"),
            HyperplaneSpec::Real(w) => write!(f, "{w:?}"),
        }
    }
}

/// True iff `0 ≤ ⟨x,w⟩ < ⟨e_i,w⟩`.
pub fn gamma_membership(w: &HyperplaneSpec, f: &Face) -> bool {
    match w {
        HyperplaneSpec::Integer(w) => {
            let s: i128 =
                f.x.iter()
                    .zip(w)
                    .map(|(&a, &b)| i128::from(a) * i128::from(b))
                    .sum();
            0 <= s && s < i128::from(w[f.i.index()])
        }
        HyperplaneSpec::Real(w) => {
            let s: f64 = f.x.iter().zip(w).map(|(&a, &b)| a as f64 * b).sum();
            0.0 <= s && s < w[f.i.index()]
        }
    }
}

/// All faces of `Γ(w)` whose translate satisfies `‖x − center‖_∞ ≤ r`.
fn gamma_box(w: &HyperplaneSpec, center: &[i64], r: i64) -> Vec<Face> {
    let d = w.dim();
    let wf = w.as_f64();
    // Solve for the coordinate with the largest weight; enumerate the rest.
    let c = (0..d)
        .max_by(|&a, &b| wf[a].total_cmp(&wf[b]))
        .expect("nonempty normal");
    let others: Vec<usize> = (0..d).filter(|&k| k != c).collect();
    let mut out = Vec::new();
    let mut x: Vec<i64> = center.iter().map(|v| v - r).collect();
    loop {
        let s: f64 = others.iter().map(|&k| x[k] as f64 * wf[k]).sum();
        for i in 0..d {
            let letter = Letter::from_index(i);
            let lo = ((-s / wf[c]).ceil() as i64 - 1).max(center[c] - r);
            let hi = (((wf[i] - s) / wf[c]).ceil() as i64).min(center[c] + r);
            for v in lo..=hi {
                x[c] = v;
                let f = Face::new(x.clone(), letter);
                if gamma_membership(w, &f) {
                    out.push(f);
                }
            }
        }
        // Odometer over the remaining coordinates.
        let mut advanced = false;
        for &k in &others {
            if x[k] < center[k] + r {
                x[k] += 1;
                advanced = true;
                break;
            }
            x[k] = center[k] - r;
        }
        if !advanced {
            return out;
        }
    }
}

/// All faces of `Γ(w)` with `‖x‖_∞ ≤ r`.
pub fn gamma_patch(w: &HyperplaneSpec, r: u32) -> Patch {
    gamma_box(w, &vec![0; w.dim()], i64::from(r))
        .into_iter()
        .collect()
}

/// The reference patch of the periodic stepped plane `Γ(𝟏)` in dimension 3:
/// all faces with `‖x‖_∞ ≤ 5`. Its minimal combinatorial radius is 6.
pub fn reference_stepped_patch() -> Patch {
    gamma_patch(&HyperplaneSpec::ones(3), 5)
}

/// Precomputed action of `E₁*(σ)`: for each type `i`, the list of pairs
/// `(M_σ⁻¹ 𝐥(p), j)` over all ways of writing a prefix `p·i` of `σ(j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualSubstitution {
    inverse: Vec<Vec<i64>>,
    table: Vec<Vec<(Vec<i64>, Letter)>>,
}

impl DualSubstitution {
    /// Errors with [`Error::NotUnimodular`] unless `|det M_σ| = 1`.
    pub fn new(sigma: &Substitution) -> Result<Self> {
        let inv = sigma.incidence().inverse_unimodular()?;
        let alphabet = sigma.alphabet();
        let d = sigma.size();
        let mut table = vec![Vec::new(); d];
        for j in alphabet.letters() {
            let img = sigma.image(j).letters();
            for (k, &i) in img.iter().enumerate() {
                let p = abelianize(&img[..k], alphabet)?;
                let lp: Vec<i64> = p.counts().iter().map(|&c| c as i64).collect();
                let off = to_i64_vec(&inv.mul_vec_i64(&lp))?;
                table[i.index()].push((off, j));
            }
        }
        Self::from_parts(inv, table)
    }

    /// Builds a dual map from an explicit inverse matrix and table (used to
    /// study modified tables, e.g. as negative controls).
    pub fn from_parts(inverse: IntMatrix, table: Vec<Vec<(Vec<i64>, Letter)>>) -> Result<Self> {
        let d = inverse.dim();
        if table.len() != d
            || table
                .iter()
                .flatten()
                .any(|(v, j)| v.len() != d || j.index() >= d)
        {
            return Err(Error::InvalidArgument(
                "dual table does not match the matrix dimension".into(),
            ));
        }
        let inverse = inverse
            .to_i64_rows()
            .ok_or(Error::Overflow("inverse incidence matrix"))?;
        Ok(DualSubstitution { inverse, table })
    }

    pub fn dim(&self) -> usize {
        self.inverse.len()
    }

    /// Per face type `i`, the pairs `(M_σ⁻¹𝐥(p), j)`.
    pub fn table(&self) -> &[Vec<(Vec<i64>, Letter)>] {
        &self.table
    }

    /// `E₁*(σ)[x,i]` as a list (no duplicates arise for a genuine dual map).
    pub fn image(&self, f: &Face) -> Result<Vec<Face>> {
        let d = self.dim();
        if f.dim() != d || f.i.index() >= d {
            return Err(Error::AlphabetMismatch {
                expected: d,
                found: f.dim(),
            });
        }
        let mut base = vec![0i64; d];
        for (r, row) in self.inverse.iter().enumerate() {
            let mut acc: i64 = 0;
            for (a, b) in row.iter().zip(&f.x) {
                acc = a
                    .checked_mul(*b)
                    .and_then(|t| acc.checked_add(t))
                    .ok_or(Error::Overflow("face translate"))?;
            }
            base[r] = acc;
        }
        self.table[f.i.index()]
            .iter()
            .map(|(off, j)| {
                let x = base
                    .iter()
                    .zip(off)
                    .map(|(a, b)| a.checked_add(*b).ok_or(Error::Overflow("face translate")))
                    .collect::<Result<Vec<i64>>>()?;
                Ok(Face::new(x, *j))
            })
            .collect()
    }

    /// `E₁*(σ)P = ⋃_{f∈P} E₁*(σ)f`.
    pub fn apply(&self, patch: &Patch) -> Result<Patch> {
        let faces: Vec<&Face> = patch.iter().collect();
        let images: Vec<Vec<Face>> = if faces.len() >= PARALLEL_THRESHOLD {
            faces
                .par_iter()
                .map(|f| self.image(f))
                .collect::<Result<_>>()?
        } else {
            faces.iter().map(|f| self.image(f)).collect::<Result<_>>()?
        };
        Ok(images.into_iter().flatten().collect())
    }
}

fn to_i64_vec(v: &[BigInt]) -> Result<Vec<i64>> {
    v.iter()
        .map(|x| x.to_i64().ok_or(Error::Overflow("face translate")))
        .collect()
}

/// `E₁*(σ)[x,i] = {[M_σ⁻¹(x + 𝐥(p)), j] : p·i prefix of σ(j)}`.
pub fn e1_star(sigma: &Substitution, f: &Face) -> Result<Patch> {
    Ok(DualSubstitution::new(sigma)?
        .image(f)?
        .into_iter()
        .collect())
}

/// `E₁*(σ)P`.
pub fn e1_star_patch(sigma: &Substitution, patch: &Patch) -> Result<Patch> {
    DualSubstitution::new(sigma)?.apply(patch)
}

/// Applies `E₁*(block[0])`, then `E₁*(block[1])`, … (cycling through the
/// block) for `steps` steps. By contravariance the result equals
/// `E₁*(block[0] ∘ ⋯ ∘ block[steps−1]) seed`.
pub fn e1_star_iterate(
    block: &[Substitution],
    seed: &Patch,
    steps: usize,
    budget: usize,
) -> Result<Patch> {
    if block.is_empty() {
        return if steps == 0 {
            Ok(seed.clone())
        } else {
            Err(Error::EmptyDirective)
        };
    }
    let duals = block
        .iter()
        .map(DualSubstitution::new)
        .collect::<Result<Vec<_>>>()?;
    iterate_duals(seed, steps, budget, |k| &duals[k % duals.len()])
}

/// `P_{[0,n)} = E₁*(σ_{[0,n)}) seed = E₁*(σ_{n−1}) ⋯ E₁*(σ_0) seed`.
pub fn e1_star_directive(
    sigma: &DirectiveSequence,
    seed: &Patch,
    n: usize,
    budget: usize,
) -> Result<Patch> {
    let duals = sigma
        .substitutions()
        .iter()
        .map(DualSubstitution::new)
        .collect::<Result<Vec<_>>>()?;
    let idx = sigma.indices(0, n)?;
    iterate_duals(seed, n, budget, |k| &duals[idx[k]])
}

fn iterate_duals<'a>(
    seed: &Patch,
    steps: usize,
    budget: usize,
    dual: impl Fn(usize) -> &'a DualSubstitution,
) -> Result<Patch> {
    let mut patch = seed.clone();
    for k in 0..steps {
        patch = dual(k).apply(&patch)?;
        if patch.len() > budget {
            return Err(Error::PatchBudget(budget));
        }
    }
    Ok(patch)
}

/// Findings of [`fernique_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerniqueReport {
    /// Normal of the target hyperplane `Mᵗw`.
    pub target: HyperplaneSpec,
    /// Number of source faces (`Γ(w)`, `‖x‖_∞ ≤ radius`).
    pub source_faces: usize,
    /// Total number of image faces, counted with multiplicity.
    pub image_faces: usize,
    /// Image faces outside `Γ(Mᵗw)`.
    pub outside: Vec<Face>,
    /// Image faces produced by more than one source face.
    pub overlaps: Vec<Face>,
    /// Radius of the ball of `Γ(Mᵗw)` whose coverage was tested; `None` when
    /// the source patch is too small to guarantee any coverage.
    pub coverage_radius: Option<u32>,
    /// Faces of that ball missing from the image.
    pub uncovered: Vec<Face>,
}

impl FerniqueReport {
    pub fn passed(&self) -> bool {
        self.outside.is_empty() && self.overlaps.is_empty() && self.uncovered.is_empty()
    }
}

/// Checks, on the ball of radius `radius` of `Γ(w)`, that `E₁*(σ)` with
/// `σ = block[0] ∘ ⋯ ∘ block[n−1]` maps faces into `Γ(Mᵗw)`, that images of
/// distinct faces are disjoint, and that the images cover a smaller ball of
/// `Γ(Mᵗw)` (of radius `⌊(radius − max|σ(j)|)/‖M‖_∞⌋`, outside of which
/// preimages may have been trimmed away).
pub fn fernique_check(
    block: &[Substitution],
    w: &HyperplaneSpec,
    radius: u32,
) -> Result<FerniqueReport> {
    let sigma = Substitution::compose_all(block)?;
    fernique_check_with(&DualSubstitution::new(&sigma)?, &sigma, w, radius)
}

/// [`fernique_check`] with an explicitly supplied dual map for `σ`.
pub fn fernique_check_with(
    dual: &DualSubstitution,
    sigma: &Substitution,
    w: &HyperplaneSpec,
    radius: u32,
) -> Result<FerniqueReport> {
    let d = sigma.size();
    if w.dim() != d || dual.dim() != d {
        return Err(Error::AlphabetMismatch {
            expected: d,
            found: w.dim(),
        });
    }
    let m = sigma.incidence();
    let target = w.transported(&m)?;
    let source = gamma_patch(w, radius);
    let mut hits: HashMap<Face, usize> = HashMap::new();
    let mut image_faces = 0;
    for f in &source {
        for g in dual.image(f)? {
            image_faces += 1;
            *hits.entry(g).or_insert(0) += 1;
        }
    }
    let mut outside: Vec<Face> = hits
        .keys()
        .filter(|g| !gamma_membership(&target, g))
        .cloned()
        .collect();
    let mut overlaps: Vec<Face> = hits
        .iter()
        .filter(|(_, &c)| c > 1)
        .map(|(g, _)| g.clone())
        .collect();
    outside.sort();
    overlaps.sort();

    let max_len = sigma.images().iter().map(Word::len).max().unwrap_or(0) as i64;
    let norm: i64 = m
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| v.to_i64().unwrap_or(i64::MAX))
                .fold(0i64, i64::saturating_add)
        })
        .max()
        .unwrap_or(1)
        .max(1);
    let slack = i64::from(radius) - max_len;
    let coverage_radius = (slack >= 0).then(|| (slack / norm) as u32);
    let uncovered = match coverage_radius {
        Some(r) => gamma_patch(&target, r)
            .into_iter()
            .filter(|g| !hits.contains_key(g))
            .collect(),
        None => Vec::new(),
    };
    Ok(FerniqueReport {
        target,
        source_faces: source.len(),
        image_faces,
        outside,
        overlaps,
        coverage_radius,
        uncovered,
    })
}

/// A witness of the coincidence for one pair of letters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceWitness {
    pub j1: Letter,
    pub j2: Letter,
    pub i: Letter,
    /// Prefix `p₁` with `p₁·i` a prefix of `σ(j₁)`.
    pub p1: Word,
    /// Prefix `p₂` with `p₂·i` a prefix of `σ(j₂)` and `𝐥(p₂) = 𝐥(p₁)`.
    pub p2: Word,
}

/// Result of [`strong_coincidence_check`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrongCoincidenceReport {
    /// Length of the composed block.
    pub ell: usize,
    pub witnesses: Vec<CoincidenceWitness>,
    /// Pairs for which no witness exists at this length.
    pub failed_pairs: Vec<(Letter, Letter)>,
}

impl StrongCoincidenceReport {
    pub fn holds(&self) -> bool {
        self.failed_pairs.is_empty()
    }
}

/// Looks, for every pair `j₁ < j₂`, for a letter `i` and prefixes `p₁`, `p₂`
/// with `𝐥(p₁) = 𝐥(p₂)` such that `p₁·i` starts `σ(j₁)` and `p₂·i` starts
/// `σ(j₂)`, where `σ = block[0] ∘ ⋯ ∘ block[ℓ−1]`.
pub fn strong_coincidence_check(block: &[Substitution]) -> Result<StrongCoincidenceReport> {
    let sigma = Substitution::compose_all(block)?;
    let alphabet = sigma.alphabet();
    // For each letter j: map (abelian vector of p, next letter i) -> length of p.
    let mut keyed: Vec<HashMap<(Vec<u64>, Letter), usize>> = Vec::new();
    for j in alphabet.letters() {
        let img = sigma.image(j).letters();
        let mut map = HashMap::new();
        let mut counts = vec![0u64; alphabet.size()];
        for (k, &i) in img.iter().enumerate() {
            map.entry((counts.clone(), i)).or_insert(k);
            counts[i.index()] += 1;
        }
        keyed.push(map);
    }
    let mut witnesses = Vec::new();
    let mut failed_pairs = Vec::new();
    for a in 0..alphabet.size() {
        for b in a + 1..alphabet.size() {
            let (j1, j2) = (Letter::from_index(a), Letter::from_index(b));
            let best = keyed[a]
                .iter()
                .filter_map(|(key, &k1)| keyed[b].get(key).map(|&k2| (k1 + k2, k1, k2, key.1)))
                .min();
            match best {
                Some((_, k1, k2, i)) => witnesses.push(CoincidenceWitness {
                    j1,
                    j2,
                    i,
                    p1: Word::new(sigma.image(j1).letters()[..k1].to_vec()),
                    p2: Word::new(sigma.image(j2).letters()[..k2].to_vec()),
                }),
                None => failed_pairs.push((j1, j2)),
            }
        }
    }
    Ok(StrongCoincidenceReport {
        ell: block.len(),
        witnesses,
        failed_pairs,
    })
}

/// Runs [`strong_coincidence_check`] on `σ_{[0,ℓ)}` for `ℓ = 1, …, max_ell`
/// and returns the first report that holds, or the last one tried.
pub fn strong_coincidence_search(
    sigma: &DirectiveSequence,
    max_ell: usize,
) -> Result<StrongCoincidenceReport> {
    let mut last = None;
    for ell in 1..=max_ell {
        let report = strong_coincidence_check(&sigma.window(0, ell)?)?;
        if report.holds() {
            return Ok(report);
        }
        last = Some(report);
    }
    last.ok_or(Error::InvalidArgument("max_ell must be positive".into()))
}

/// A successful instance of the effective geometric coincidence condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricWitness {
    pub n: usize,
    pub i: Letter,
    /// Centre `z` (a face translate of the patch).
    pub z: Vec<i64>,
    /// Number of faces of `Γ((M_{[0,n)})ᵗ𝟏)` in the projected ball, all of
    /// which lie in `E₁*(σ_{[0,n)})[0,i]`.
    pub ball_faces: usize,
}

/// Result of [`geometric_coincidence_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricCoincidenceReport {
    pub balance_bound: f64,
    pub max_n: usize,
    /// How the projection direction was obtained.
    pub projection: String,
    /// Sizes of the patches `E₁*(σ_{[0,n)})[0,i]`, indexed `[n−1][i]`.
    pub patch_sizes: Vec<Vec<usize>>,
    pub witness: Option<GeometricWitness>,
}

impl GeometricCoincidenceReport {
    pub fn holds(&self) -> bool {
        self.witness.is_some()
    }
}

/// Searches `n ≤ max_n`, `i` and a centre `z` among the face translates of
/// `E₁*(σ_{[0,n)})[0,i]` such that every face `[y,j]` of `Γ((M_{[0,n)})ᵗ𝟏)`
/// with `‖π(y − z)‖₂ ≤ c` lies in `E₁*(σ_{[0,n)})[0,i]`; `π` projects onto
/// `𝟏^⊥` along `(M_{[0,n)})⁻¹u`, with `u` the generalized right eigenvector
/// (the orthogonal projection is used when `u` cannot be determined).
pub fn geometric_coincidence_check(
    sigma: &DirectiveSequence,
    max_n: usize,
    c: f64,
    budget: usize,
) -> Result<GeometricCoincidenceReport> {
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "balance bound {c} must be nonnegative"
        )));
    }
    let d = sigma.alphabet_size();
    let duals = sigma
        .substitutions()
        .iter()
        .map(DualSubstitution::new)
        .collect::<Result<Vec<_>>>()?;
    let mut patches: Vec<Patch> = (0..d)
        .map(|i| {
            Patch::unit_seed(d)
                .into_iter()
                .filter(|f| f.i.index() == i)
                .collect()
        })
        .collect();
    let (u, projection) = match generalized_right_eigenvector(sigma, 1e-9, 2000) {
        Ok(est) => (Some(est.u), "generalized right eigenvector".to_string()),
        Err(Error::EigenvectorUnavailable { .. }) => {
            (None, "orthogonal (no eigenvector)".to_string())
        }
        Err(e) => return Err(e),
    };
    let mut m = IntMatrix::identity(d);
    let mut patch_sizes = Vec::new();
    for n in 1..=max_n {
        let k = sigma.index(n - 1)?;
        m = m.mul(&sigma.substitutions()[k].incidence());
        for p in patches.iter_mut() {
            *p = duals[k].apply(p)?;
            if p.len() > budget {
                return Err(Error::PatchBudget(budget));
            }
        }
        patch_sizes.push(patches.iter().map(Patch::len).collect());
        let w = HyperplaneSpec::ones(d).transported(&m)?;
        let v = match &u {
            Some(u) => {
                let inv = m.inverse_unimodular()?.to_f64_rows();
                let v: Vec<f64> = inv
                    .iter()
                    .map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum())
                    .collect();
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect()
            }
            None => vec![1.0 / d as f64; d],
        };
        for (i, p) in patches.iter().enumerate() {
            if let Some((z, ball_faces)) = find_ball_centre(p, &w, &v, c) {
                return Ok(GeometricCoincidenceReport {
                    balance_bound: c,
                    max_n,
                    projection,
                    patch_sizes,
                    witness: Some(GeometricWitness {
                        n,
                        i: Letter::from_index(i),
                        z,
                        ball_faces,
                    }),
                });
            }
        }
    }
    Ok(GeometricCoincidenceReport {
        balance_bound: c,
        max_n,
        projection,
        patch_sizes,
        witness: None,
    })
}

/// `π_{v,𝟏}(y) = y − (⟨y,𝟏⟩/⟨v,𝟏⟩) v` (with `⟨v,𝟏⟩ = 1`), Euclidean norm.
fn projected_distance(y: &[i64], z: &[i64], v: &[f64]) -> f64 {
    let diff: Vec<f64> = y.iter().zip(z).map(|(a, b)| (a - b) as f64).collect();
    let t: f64 = diff.iter().sum();
    diff.iter()
        .zip(v)
        .map(|(a, b)| (a - t * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn find_ball_centre(
    patch: &Patch,
    w: &HyperplaneSpec,
    v: &[f64],
    c: f64,
) -> Option<(Vec<i64>, usize)> {
    let HyperplaneSpec::Integer(wi) = w else {
        return None;
    };
    let wf: Vec<f64> = wi.iter().map(|&x| x as f64).collect();
    // For y, z ∈ Γ(w): y − z = π(y − z) + t·v with |⟨y − z, w⟩| ≤ 2 max w,
    // which bounds t and hence ‖y − z‖_∞.
    let vw: f64 = v.iter().zip(&wf).map(|(a, b)| a * b).sum();
    let wmax = wf.iter().cloned().fold(0.0, f64::max);
    let wnorm = wf.iter().map(|x| x * x).sum::<f64>().sqrt();
    let vmax = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let t = (2.0 * wmax + c * wnorm) / vw.abs().max(f64::MIN_POSITIVE);
    let r = (c * 2.0 + t * vmax).ceil() as i64 + 1;
    // Try centres in order of distance to the patch's centre of mass.
    let centroid: Vec<f64> = (0..v.len())
        .map(|k| patch.iter().map(|f| f.x[k] as f64).sum::<f64>() / patch.len() as f64)
        .collect();
    let mut centres: Vec<&Vec<i64>> = patch
        .iter()
        .map(|f| &f.x)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    centres.sort_by(|a, b| {
        let da: f64 = a
            .iter()
            .zip(&centroid)
            .map(|(x, m)| (*x as f64 - m).powi(2))
            .sum();
        let db: f64 = b
            .iter()
            .zip(&centroid)
            .map(|(x, m)| (*x as f64 - m).powi(2))
            .sum();
        da.total_cmp(&db)
    });
    centres.into_iter().find_map(|z| {
        let mut count = 0;
        for f in gamma_box(w, z, r) {
            if projected_distance(&f.x, z, v) <= c {
                if !patch.contains(&f) {
                    return None;
                }
                count += 1;
            }
        }
        Some((z.clone(), count))
    })
}

/// Minimal combinatorial radius of `patch` around `seed`: the number of
/// faces in a shortest chain of pairwise touching faces that starts in
/// `seed` and ends at a face containing part of the patch boundary (a
/// `(d−2)`-facet shared with no other face of the patch).
pub fn minimal_combinatorial_radius(patch: &Patch, seed: &Patch) -> Result<usize> {
    if seed.is_empty() || !seed.is_subset(patch) {
        return Err(Error::SeedNotInPatch);
    }
    let mut facet_count: HashMap<(Vec<i64>, usize, usize), u32> = HashMap::new();
    for f in patch {
        for e in f.facets() {
            *facet_count.entry(e).or_insert(0) += 1;
        }
    }
    let on_boundary = |f: &Face| f.facets().into_iter().any(|e| facet_count[&e] == 1);
    let mut by_translate: HashMap<&[i64], Vec<&Face>> = HashMap::new();
    for f in patch {
        by_translate.entry(&f.x).or_default().push(f);
    }
    let d = seed.iter().next().expect("nonempty").dim();
    let mut dist: HashMap<&Face, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for f in seed {
        let f = patch.faces.get(f).expect("seed is a subset");
        dist.insert(f, 1);
        queue.push_back(f);
    }
    let shifts = neighbour_shifts(d);
    let mut probe = vec![0i64; d];
    while let Some(f) = queue.pop_front() {
        let df = dist[f];
        if on_boundary(f) {
            return Ok(df);
        }
        for s in &shifts {
            for (k, p) in probe.iter_mut().enumerate() {
                *p = f.x[k] + s[k];
            }
            if let Some(list) = by_translate.get(probe.as_slice()) {
                for &g in list {
                    if !dist.contains_key(g) && f.touches(g) {
                        dist.insert(g, df + 1);
                        queue.push_back(g);
                    }
                }
            }
        }
    }
    Err(Error::DisconnectedPatch)
}

fn neighbour_shifts(d: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|v| (-1..=1).map(move |s| [v.clone(), vec![s]].concat()))
            .collect();
    }
    out
}

/// One step of a radius-growth run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadiusStep {
    pub n: usize,
    pub faces: usize,
    pub radius: usize,
}

/// Minimal combinatorial radius of `P_{[0,n)} = E₁*(σ_{[0,n)})𝒰` for
/// `n = 1, …, steps`, stopping early when the patch budget is exceeded.
pub fn radius_growth(
    sigma: &DirectiveSequence,
    steps: usize,
    budget: usize,
) -> Result<Vec<RadiusStep>> {
    let d = sigma.alphabet_size();
    let seed = Patch::unit_seed(d);
    let duals = sigma
        .substitutions()
        .iter()
        .map(DualSubstitution::new)
        .collect::<Result<Vec<_>>>()?;
    let mut patch = seed.clone();
    let mut out = Vec::new();
    for n in 1..=steps {
        let next = duals[sigma.index(n - 1)?].apply(&patch)?;
        if next.len() > budget {
            break;
        }
        patch = next;
        if !seed.is_subset(&patch) {
            return Err(Error::SeedNotInPatch);
        }
        out.push(RadiusStep {
            n,
            faces: patch.len(),
            radius: minimal_combinatorial_radius(&patch, &seed)?,
        });
    }
    Ok(out)
}

/// Set of faces as a hash set (convenience for membership-heavy callers).
pub fn face_set(patch: &Patch) -> HashSet<Face> {
    patch.iter().cloned().collect()
}

//! Point-cloud approximations of S-adic Rauzy fractals and their subtiles,
//! together with numerical diagnostics: the set equation, shrinking of
//! subdivisions, tiling multiplicity, the domain exchange, the representation
//! map and natural codings of rotations.
//!
//! A cloud consists of the projections `π_{u,w} 𝐥(p)` of the prefixes `p` of
//! a limit sequence, each labelled by the letter following `p`. Points are
//! stored in coordinates with respect to an orthonormal basis of `w^⊥`.
//! Membership of a point in a subtile is decided up to a tolerance `ε`
//! (by default three times the median nearest-neighbour distance of the
//! cloud), and every verdict reports the `ε` that was used.

use std::collections::HashMap;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete_geometry::{gamma_patch, DualSubstitution, Face, HyperplaneSpec};
use crate::quadratic::QuadIrr;
use crate::sadic::{
    generalized_right_eigenvector, limit_sequences, DirectiveSequence, LimitSequence,
};
use crate::words::Letter;
use crate::{Error, Result};

/// Tolerance used when computing generalized right eigenvectors.
const EIGEN_TOLERANCE: f64 = 1e-13;
/// Maximal number of matrices used for a generalized right eigenvector.
const EIGEN_CAP: usize = 5000;
/// Depth used to enumerate limit sequences.
pub const LIMIT_DEPTH: usize = 32;
/// Distances below this (relative to the point's size) count as exact hits.
const EXACT_HIT: f64 = 1e-9;

/// The projection `π_{u,w}` along `u` onto `w^⊥`, with an orthonormal basis
/// of `w^⊥` for coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionFrame {
    u: Vec<f64>,
    w: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl ProjectionFrame {
    /// Frame for direction `u` and normal `w`; requires `⟨u,w⟩ ≠ 0`.
    ///
    /// The basis is the Gram–Schmidt orthonormalisation of
    /// `w_k e_p − w_p e_k` (`k ≠ p`), where `p` is the largest coordinate of
    /// `w`; for `w = 𝟏` these are the vectors `e_1 − e_k`.
    pub fn new(u: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let d = u.len();
        if d == 0 || w.len() != d {
            return Err(Error::InvalidArgument(
                "direction and normal must have equal positive length".into(),
            ));
        }
        let uw = dot(&u, &w);
        if !uw.is_finite() || uw.abs() < 1e-300 {
            return Err(Error::InvalidArgument(
                "direction is parallel to the hyperplane".into(),
            ));
        }
        let s: f64 = u.iter().sum();
        let u: Vec<f64> = if s != 0.0 {
            u.iter().map(|x| x / s).collect()
        } else {
            u
        };
        let p = (0..d)
            .rev()
            .max_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()))
            .expect("nonempty");
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for k in (0..d).filter(|&k| k != p) {
            let mut v = vec![0.0; d];
            v[p] = w[k];
            v[k] = -w[p];
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let n = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
        Ok(ProjectionFrame { u, w, basis })
    }

    /// Frame `π_{u,w}` of a directive sequence (`w = 𝟏` by default).
    pub fn for_directive(sigma: &DirectiveSequence, w: Option<Vec<f64>>) -> Result<Self> {
        let d = sigma.alphabet_size();
        let u = generalized_right_eigenvector(sigma, EIGEN_TOLERANCE, EIGEN_CAP)?.u;
        Self::new(u, w.unwrap_or_else(|| vec![1.0; d]))
    }

    /// The level-`k` frame `π^{(k)}`: direction `u^{(k)} ∝ (M_{[0,k)})⁻¹u`
    /// (the eigenvector of the shifted sequence) and normal
    /// `w^{(k)} = (M_{[0,k)})ᵗ w`.
    pub fn at_level(sigma: &DirectiveSequence, k: usize, w: Option<Vec<f64>>) -> Result<Self> {
        let d = sigma.alphabet_size();
        let w = w.unwrap_or_else(|| vec![1.0; d]);
        let m = sigma.incidence_product(0, k)?.to_f64_rows();
        let wk: Vec<f64> = (0..d)
            .map(|j| (0..d).map(|i| m[i][j] * w[i]).sum())
            .collect();
        let u = generalized_right_eigenvector(&sigma.shifted(k), EIGEN_TOLERANCE, EIGEN_CAP)?.u;
        Self::new(u, wk)
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// `π_{u,w} x = x − (⟨x,w⟩/⟨u,w⟩) u` in ambient coordinates.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let t = dot(x, &self.w) / dot(&self.u, &self.w);
        x.iter().zip(&self.u).map(|(a, b)| a - t * b).collect()
    }

    /// Coordinates of `π_{u,w} x` in the basis of `w^⊥`.
    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        let p = self.project(x);
        self.basis.iter().map(|b| dot(&p, b)).collect()
    }

    /// [`ProjectionFrame::coords`] of an integer vector.
    pub fn coords_int(&self, x: &[i64]) -> Vec<f64> {
        self.coords(&x.iter().map(|&v| v as f64).collect::<Vec<_>>())
    }

    /// The ambient point of `w^⊥` with the given coordinates.
    pub fn lift(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (c, b) in coords.iter().zip(&self.basis) {
            out.iter_mut().zip(b).for_each(|(o, x)| *o += c * x);
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// One point of a cloud: `π 𝐥(p)` for a prefix `p` of length `plen`
/// followed by `label`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub coords: Vec<f64>,
    pub label: Letter,
    pub plen: usize,
}

/// A labelled point cloud approximating a Rauzy fractal and its subtiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub frame: ProjectionFrame,
    pub points: Vec<CloudPoint>,
    /// Text form of the directive sequence.
    pub directive: String,
    /// Number of prefixes used per limit sequence.
    pub depth: usize,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Coordinates of the points with the given label (all points for `None`).
    pub fn coords(&self, label: Option<Letter>) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .filter(|p| label.is_none_or(|l| p.label == l))
            .map(|p| p.coords.clone())
            .collect()
    }

    /// Median distance from a point to its nearest distinct neighbour.
    pub fn nn_median(&self) -> f64 {
        nn_median(&self.coords(None))
    }

    /// Largest sup-norm of the ambient points `π 𝐥(p)`.
    pub fn max_sup_norm(&self) -> f64 {
        self.points
            .iter()
            .map(|p| {
                self.frame
                    .lift(&p.coords)
                    .iter()
                    .fold(0.0f64, |m, x| m.max(x.abs()))
            })
            .fold(0.0, f64::max)
    }

    /// Largest Euclidean distance between two points (exact for ≤ 4000
    /// points, otherwise twice the radius about the centroid as an upper
    /// bound).
    pub fn diameter(&self) -> f64 {
        let pts = self.coords(None);
        if pts.len() <= 4000 {
            pts.par_iter()
                .map(|a| pts.iter().map(|b| dist(a, b)).fold(0.0, f64::max))
                .reduce(|| 0.0, f64::max)
        } else {
            2.0 * radius_about(&pts, &centroid(&pts))
        }
    }

    /// One line `x y [z …] label plen` per point.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 40);
        for p in &self.points {
            for c in &p.coords {
                out.push_str(&format!("{c:.12} "));
            }
            out.push_str(&format!("{} {}\n", p.label, p.plen));
        }
        out
    }
}

/// Cloud of one limit sequence: the projections of its first `n` prefixes.
pub fn rauzy_cloud_of(
    seq: &LimitSequence,
    frame: &ProjectionFrame,
    n: usize,
) -> Result<PointCloud> {
    let d = frame.dim();
    let word = seq.prefix(n)?;
    let mut counts = vec![0i64; d];
    let mut points = Vec::with_capacity(n);
    for (plen, &label) in word.letters().iter().enumerate() {
        points.push(CloudPoint {
            coords: frame.coords_int(&counts),
            label,
            plen,
        });
        counts[label.index()] += 1;
    }
    Ok(PointCloud {
        frame: frame.clone(),
        points,
        directive: seq.directive().to_string(),
        depth: n,
    })
}

/// Cloud of all limit sequences of `sigma` (first `n` prefixes of each).
pub fn rauzy_cloud(
    sigma: &DirectiveSequence,
    frame: &ProjectionFrame,
    n: usize,
) -> Result<PointCloud> {
    if frame.dim() != sigma.alphabet_size() {
        return Err(Error::AlphabetMismatch {
            expected: sigma.alphabet_size(),
            found: frame.dim(),
        });
    }
    let mut points = Vec::new();
    for seq in limit_sequences(sigma, LIMIT_DEPTH)? {
        points.extend(rauzy_cloud_of(&seq, frame, n)?.points);
    }
    Ok(PointCloud {
        frame: frame.clone(),
        points,
        directive: sigma.to_string(),
        depth: n,
    })
}

/// Uniform-grid spatial index for nearest-neighbour queries.
#[derive(Clone, Debug)]
pub struct SpatialGrid {
    cell: f64,
    points: Vec<Vec<f64>>,
    cells: HashMap<Vec<i64>, Vec<usize>>,
    /// Bounding box of the occupied cell keys.
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl SpatialGrid {
    /// Indexes `points` with cubical cells of side `cell` (chosen from the
    /// bounding box when `None`).
    pub fn new(points: Vec<Vec<f64>>, cell: Option<f64>) -> Self {
        let k = points.first().map_or(0, Vec::len);
        let cell = cell
            .filter(|c| *c > 0.0 && c.is_finite())
            .unwrap_or_else(|| auto_cell(&points, k));
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        let mut lo = vec![i64::MAX; k];
        let mut hi = vec![i64::MIN; k];
        for (idx, p) in points.iter().enumerate() {
            let key = Self::key(p, cell);
            for c in 0..k {
                lo[c] = lo[c].min(key[c]);
                hi[c] = hi[c].max(key[c]);
            }
            cells.entry(key).or_default().push(idx);
        }
        SpatialGrid {
            cell,
            points,
            cells,
            lo,
            hi,
        }
    }

    fn key(p: &[f64], cell: f64) -> Vec<i64> {
        p.iter().map(|x| (x / cell).floor() as i64).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Nearest indexed point to `q` other than `exclude`, with its distance.
    pub fn nearest_excluding(&self, q: &[f64], exclude: Option<usize>) -> Option<(usize, f64)> {
        if self.points.len() <= usize::from(exclude.is_some()) {
            return None;
        }
        let centre = Self::key(q, self.cell);
        let k = centre.len();
        // Rings closer than the bounding box are empty; rings beyond the
        // farthest corner contain nothing new.
        let first = (0..k)
            .map(|c| (self.lo[c] - centre[c]).max(centre[c] - self.hi[c]).max(0))
            .max()
            .unwrap_or(0);
        let last = (0..k)
            .map(|c| {
                (centre[c] - self.lo[c])
                    .abs()
                    .max((self.hi[c] - centre[c]).abs())
            })
            .max()
            .unwrap_or(0);
        let mut best: Option<(usize, f64)> = None;
        let mut key = vec![0i64; k];
        for ring in first..=last {
            self.for_ring_cells(&centre, ring, &mut key, &mut |list| {
                for &idx in list {
                    if Some(idx) != exclude {
                        let dd = dist(q, &self.points[idx]);
                        if best.is_none_or(|(_, b)| dd < b) {
                            best = Some((idx, dd));
                        }
                    }
                }
            });
            // Cells outside ring `r` are at distance ≥ r·cell from q.
            if let Some((_, b)) = best {
                if b <= ring as f64 * self.cell {
                    break;
                }
            }
        }
        best
    }

    /// Visits the occupied cells at Chebyshev distance exactly `r` from
    /// `centre`, clipped to the bounding box.
    fn for_ring_cells(
        &self,
        centre: &[i64],
        r: i64,
        key: &mut [i64],
        visit: &mut impl FnMut(&[usize]),
    ) {
        let k = centre.len();
        if k == 0 {
            if let Some(list) = self.cells.get(&Vec::new()) {
                visit(list);
            }
            return;
        }
        // Face of the ring with axis `a` fixed at ±r; axes before `a` are
        // restricted to |offset| < r so that each cell is visited once.
        for a in 0..k {
            let sides: &[i64] = if r == 0 { &[0] } else { &[-1, 1] };
            for &s in sides {
                let fixed = centre[a] + s * r;
                if fixed < self.lo[a] || fixed > self.hi[a] {
                    continue;
                }
                let mut ranges = Vec::with_capacity(k);
                let mut empty = false;
                for b in 0..k {
                    let (mut from, mut to) = if b == a {
                        (fixed, fixed)
                    } else if b < a {
                        (centre[b] - r + 1, centre[b] + r - 1)
                    } else {
                        (centre[b] - r, centre[b] + r)
                    };
                    from = from.max(self.lo[b]);
                    to = to.min(self.hi[b]);
                    empty |= from > to;
                    ranges.push((from, to));
                }
                if empty {
                    continue;
                }
                for (c, &(from, _)) in ranges.iter().enumerate() {
                    key[c] = from;
                }
                loop {
                    if let Some(list) = self.cells.get(&key[..]) {
                        visit(list);
                    }
                    let mut c = 0;
                    while c < k {
                        if key[c] < ranges[c].1 {
                            key[c] += 1;
                            break;
                        }
                        key[c] = ranges[c].0;
                        c += 1;
                    }
                    if c == k {
                        break;
                    }
                }
                if r == 0 {
                    return;
                }
            }
        }
    }

    pub fn nearest(&self, q: &[f64]) -> Option<(usize, f64)> {
        self.nearest_excluding(q, None)
    }

    /// Distance from `q` to the indexed set (infinite when empty).
    pub fn distance(&self, q: &[f64]) -> f64 {
        self.nearest(q).map_or(f64::INFINITY, |(_, d)| d)
    }
}

fn auto_cell(points: &[Vec<f64>], k: usize) -> f64 {
    if points.len() < 2 || k == 0 {
        return 1.0;
    }
    let mut volume = 1.0;
    for c in 0..k {
        let lo = points.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min);
        let hi = points
            .iter()
            .map(|p| p[c])
            .fold(f64::NEG_INFINITY, f64::max);
        volume *= (hi - lo).max(1e-9);
    }
    let cell = (volume / points.len() as f64).powf(1.0 / k as f64) * 2.0;
    if cell.is_finite() && cell > 0.0 {
        cell
    } else {
        1.0
    }
}

/// Median nearest-neighbour distance (ignoring exact duplicates).
pub fn nn_median(points: &[Vec<f64>]) -> f64 {
    let mut uniq: Vec<Vec<f64>> = points.to_vec();
    uniq.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    uniq.dedup();
    if uniq.len() < 2 {
        return 0.0;
    }
    let grid = SpatialGrid::new(uniq, None);
    let mut ds: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .filter_map(|i| {
            grid.nearest_excluding(&grid.points[i], Some(i))
                .map(|x| x.1)
        })
        .collect();
    ds.sort_by(f64::total_cmp);
    ds[ds.len() / 2]
}

/// Directed Hausdorff distance `sup_{a∈A} d(a, B)`.
pub fn directed_hausdorff(a: &[Vec<f64>], b: &SpatialGrid) -> f64 {
    a.par_iter().map(|p| b.distance(p)).reduce(|| 0.0, f64::max)
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let ga = SpatialGrid::new(a.to_vec(), None);
    let gb = SpatialGrid::new(b.to_vec(), None);
    directed_hausdorff(a, &gb).max(directed_hausdorff(b, &ga))
}

fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let k = points.first().map_or(0, Vec::len);
    let mut c = vec![0.0; k];
    for p in points {
        c.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    c.iter_mut().for_each(|a| *a /= points.len().max(1) as f64);
    c
}

fn radius_about(points: &[Vec<f64>], c: &[f64]) -> f64 {
    points.iter().map(|p| dist(p, c)).fold(0.0, f64::max)
}

/// Comparison of one subtile with its subdivision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetEquationEntry {
    /// The face `[0,i]` whose subtile is examined.
    pub i: Letter,
    pub parent_points: usize,
    /// Number of level-`ℓ` subtiles in the union.
    pub children: usize,
    pub child_points: usize,
    pub hausdorff: f64,
    /// Median nearest-neighbour distance of the parent cloud.
    pub nn_median: f64,
    pub passed: bool,
}

/// Result of [`set_equation_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetEquationReport {
    pub k: usize,
    pub ell: usize,
    pub depth: usize,
    /// A subtile passes when the Hausdorff distance is at most this multiple
    /// of its nearest-neighbour median.
    pub tolerance_factor: f64,
    pub entries: Vec<SetEquationEntry>,
}

impl SetEquationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

/// Compares, for every `[0,i]`, the level-`k` subtile cloud
/// `π^{(k)} 𝐥(p)` (`p·i` a prefix of the level-`k` limit sequence, `|p| < n`)
/// with the union over `[y,j] ∈ E₁*(σ_{[k,ℓ)})[0,i]` of the mapped level-`ℓ`
/// subtile clouds `π^{(k)} M_{[k,ℓ)}(y + 𝐥(p'))` (`p'·j` a prefix of the
/// level-`ℓ` limit sequence, `|p'| < n`), in the representation space `𝟏^⊥`.
pub fn set_equation_check(
    sigma: &DirectiveSequence,
    k: usize,
    ell: usize,
    n: usize,
    tolerance_factor: f64,
) -> Result<SetEquationReport> {
    if k >= ell {
        return Err(Error::InvalidArgument(format!(
            "set equation needs k < ℓ (got k={k}, ℓ={ell})"
        )));
    }
    let d = sigma.alphabet_size();
    let frame = ProjectionFrame::at_level(sigma, k, None)?;
    let upper = sigma.shifted(k);
    let lower = sigma.shifted(ell);
    let parent_seq = limit_sequences(&upper, LIMIT_DEPTH)?.remove(0);
    let child_seq = limit_sequences(&lower, LIMIT_DEPTH)?.remove(0);
    let parent = rauzy_cloud_of(&parent_seq, &frame, n)?;
    let block = upper.composite(0, ell - k)?;
    let dual = DualSubstitution::new(&block)?;
    let m = block
        .incidence()
        .to_i64_rows()
        .ok_or(Error::Overflow("block incidence matrix"))?;
    // Prefix vectors of the level-ℓ sequence, grouped by the following letter.
    let child_word = child_seq.prefix(n)?;
    let mut by_letter: Vec<Vec<Vec<i64>>> = vec![Vec::new(); d];
    let mut counts = vec![0i64; d];
    for &j in child_word.letters() {
        by_letter[j.index()].push(counts.clone());
        counts[j.index()] += 1;
    }
    let mut entries = Vec::new();
    for i in 0..d {
        let letter = Letter::from_index(i);
        let parent_pts = parent.coords(Some(letter));
        let faces = dual.image(&Face::origin(d, letter))?;
        let mut child_pts = Vec::new();
        for f in &faces {
            for lp in &by_letter[f.i.index()] {
                let v: Vec<i64> = f.x.iter().zip(lp).map(|(a, b)| a + b).collect();
                let mapped: Vec<f64> = m
                    .iter()
                    .map(|row| row.iter().zip(&v).map(|(a, b)| (a * b) as f64).sum())
                    .collect();
                child_pts.push(frame.coords(&mapped));
            }
        }
        let med = nn_median(&parent_pts);
        let h = if parent_pts.is_empty() || child_pts.is_empty() {
            f64::INFINITY
        } else {
            hausdorff(&parent_pts, &child_pts)
        };
        entries.push(SetEquationEntry {
            i: letter,
            parent_points: parent_pts.len(),
            children: faces.len(),
            child_points: child_pts.len(),
            hausdorff: h,
            nn_median: med,
            passed: h <= tolerance_factor * med,
        });
    }
    Ok(SetEquationReport {
        k,
        ell,
        depth: n,
        tolerance_factor,
        entries,
    })
}

/// `max ‖M_{[0,n)} x‖` over the level-`n` cloud, for one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkEntry {
    pub n: usize,
    pub max_norm: f64,
}

/// Size of `M_{[0,n)} 𝓡^{(n)}` for `n = 0, …, n_max`, using `points` prefixes
/// of a level-`n` limit sequence. The identity
/// `M_{[0,n)} π^{(n)} 𝐥(p) = π_{u,𝟏} M_{[0,n)} 𝐥(p)` lets the product be
/// evaluated exactly before projecting.
pub fn subtile_shrink_check(
    sigma: &DirectiveSequence,
    n_max: usize,
    points: usize,
) -> Result<Vec<ShrinkEntry>> {
    let frame = ProjectionFrame::for_directive(sigma, None)?;
    let d = sigma.alphabet_size();
    let mut out = Vec::new();
    for n in 0..=n_max {
        let m = sigma.incidence_product(0, n)?;
        let seq = limit_sequences(&sigma.shifted(n), LIMIT_DEPTH)?.remove(0);
        let word = seq.prefix(points)?;
        let mut counts = vec![0i64; d];
        let mut max_norm = 0.0f64;
        for &l in word.letters() {
            let y: Vec<f64> = m
                .mul_vec_i64(&counts)
                .iter()
                .map(|v| v.to_f64().unwrap_or(f64::NAN))
                .collect();
            max_norm = max_norm.max(norm(&frame.project(&y)));
            counts[l.index()] += 1;
        }
        out.push(ShrinkEntry { n, max_norm });
    }
    Ok(out)
}

/// Histogram produced by [`tiling_multiplicity_sample`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub epsilon: f64,
    pub samples: usize,
    /// `histogram[m]` = number of samples covered by exactly `m` tiles.
    pub histogram: Vec<usize>,
    /// Most frequent multiplicity.
    pub mode: usize,
    /// This is a sampling heuristic, not a proof of a tiling.
    pub note: String,
}

/// Samples points `z` uniformly in the bounding box of the cloud and counts
/// the translated subtiles `π x + 𝓡(i)` (`[x,i] ∈ Γ(w)`, `‖x‖_∞ ≤ radius`)
/// whose cloud approximation comes within `ε` of `z`. Each tile is counted
/// `copies` times (`copies = 2` is a doubled-collection control).
pub fn tiling_multiplicity_sample(
    cloud: &PointCloud,
    radius: u32,
    samples: usize,
    epsilon_factor: f64,
    seed: u64,
    copies: usize,
) -> Result<MultiplicityReport> {
    let frame = &cloud.frame;
    let d = frame.dim();
    let eps = epsilon_factor * cloud.nn_median();
    let w = HyperplaneSpec::real(frame.w().to_vec())?;
    let grids: Vec<SpatialGrid> = (0..d)
        .map(|i| SpatialGrid::new(cloud.coords(Some(Letter::from_index(i))), None))
        .collect();
    let all = cloud.coords(None);
    let k = frame.basis().len();
    let lo: Vec<f64> = (0..k)
        .map(|c| all.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..k)
        .map(|c| all.iter().map(|p| p[c]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let tile_radius: Vec<f64> = grids
        .iter()
        .map(|g| {
            if g.is_empty() {
                0.0
            } else {
                radius_about(g.points(), &vec![0.0; k])
            }
        })
        .collect();
    let tiles: Vec<(Vec<f64>, usize)> = gamma_patch(&w, radius)
        .iter()
        .map(|f| (frame.coords_int(&f.x), f.i.index()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zs: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            (0..k)
                .map(|c| rng.gen_range(lo[c]..=hi[c].max(lo[c])))
                .collect()
        })
        .collect();
    let counts: Vec<usize> = zs
        .par_iter()
        .map(|z| {
            let mut m = 0;
            for (offset, i) in &tiles {
                let local: Vec<f64> = z.iter().zip(offset).map(|(a, b)| a - b).collect();
                if norm(&local) <= tile_radius[*i] + eps && grids[*i].distance(&local) <= eps {
                    m += copies;
                }
            }
            m
        })
        .collect();
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0; max + 1];
    for c in counts {
        histogram[c] += 1;
    }
    let mode = (0..histogram.len())
        .max_by_key(|&m| (histogram[m], std::cmp::Reverse(m)))
        .unwrap_or(0);
    Ok(MultiplicityReport {
        epsilon: eps,
        samples,
        histogram,
        mode,
        note: "sampling diagnostic: concentration at 1 suggests, but does not prove, a tiling"
            .into(),
    })
}

/// The domain exchange `x ↦ x + π_{u,𝟏} e_i` on `x ∈ 𝓡(i)`, evaluated on a
/// subtile cloud.
#[derive(Clone, Debug)]
pub struct DomainExchange {
    cloud: PointCloud,
    translations: Vec<Vec<f64>>,
    grids: Vec<SpatialGrid>,
    epsilon: f64,
}

/// Result of iterating the domain exchange or a coded rotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeOrbit {
    pub labels: Vec<Letter>,
    pub epsilon: f64,
    /// Steps where several subtiles were within `ε` and an exact hit on a
    /// cloud point decided the label.
    pub exact_resolutions: usize,
}

impl DomainExchange {
    /// Uses `ε = epsilon_factor ×` the cloud's nearest-neighbour median.
    pub fn new(cloud: PointCloud, epsilon_factor: f64) -> Result<Self> {
        let d = cloud.frame.dim();
        if cloud.is_empty() {
            return Err(Error::InsufficientData {
                needed: 1,
                available: 0,
            });
        }
        let translations = (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                cloud.frame.coords(&e)
            })
            .collect();
        let grids = (0..d)
            .map(|i| SpatialGrid::new(cloud.coords(Some(Letter::from_index(i))), None))
            .collect();
        let epsilon = epsilon_factor * cloud.nn_median();
        Ok(DomainExchange {
            cloud,
            translations,
            grids,
            epsilon,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    /// Translation `t_i = π_{u,𝟏} e_i` in cloud coordinates.
    pub fn translation(&self, i: Letter) -> &[f64] {
        &self.translations[i.index()]
    }

    /// Subtile containing `x` (within `ε`); `Ok((label, exact))` where
    /// `exact` says that an exact hit resolved an ambiguity.
    pub fn classify(&self, x: &[f64], step: usize) -> Result<(Letter, bool)> {
        resolve(&self.candidates(x), step)
    }

    /// Labels whose subtile cloud lies within `ε` of `x`, each with its
    /// distance and whether the distance is an exact hit.
    pub fn candidates(&self, x: &[f64]) -> Vec<(Letter, bool)> {
        let tol = EXACT_HIT * (1.0 + norm(x));
        self.grids
            .iter()
            .enumerate()
            .filter_map(|(i, g)| {
                let dd = g.distance(x);
                (dd <= self.epsilon).then(|| (Letter::from_index(i), dd <= tol))
            })
            .collect()
    }

    /// Labels of `x, E x, E² x, …` (`steps` labels).
    pub fn orbit(&self, start: &[f64], steps: usize) -> Result<ExchangeOrbit> {
        let mut x = start.to_vec();
        let mut labels = Vec::with_capacity(steps);
        let mut exact_resolutions = 0;
        for step in 0..steps {
            let (l, exact) = self.classify(&x, step)?;
            exact_resolutions += usize::from(exact);
            labels.push(l);
            x.iter_mut()
                .zip(&self.translations[l.index()])
                .for_each(|(a, b)| *a += b);
        }
        Ok(ExchangeOrbit {
            labels,
            epsilon: self.epsilon,
            exact_resolutions,
        })
    }
}

/// Decides a label from candidates: a unique candidate label wins; otherwise
/// a unique label with an exact hit wins (reported as `true`); otherwise the
/// membership is ambiguous.
fn resolve(cands: &[(Letter, bool)], step: usize) -> Result<(Letter, bool)> {
    let mut labels: Vec<Letter> = cands.iter().map(|c| c.0).collect();
    labels.sort_unstable();
    labels.dedup();
    match labels.as_slice() {
        [] => Err(Error::OutsideCloud { step }),
        [l] => Ok((*l, false)),
        many => {
            let mut exact: Vec<Letter> = cands.iter().filter(|c| c.1).map(|c| c.0).collect();
            exact.sort_unstable();
            exact.dedup();
            match exact.as_slice() {
                [l] => Ok((*l, true)),
                _ => Err(Error::AmbiguousMembership {
                    step,
                    labels: many.iter().map(|l| l.get()).collect(),
                }),
            }
        }
    }
}

/// Iterates the domain exchange of `state` from `start` for `steps` steps.
pub fn domain_exchange_orbit(
    state: &DomainExchange,
    start: &[f64],
    steps: usize,
) -> Result<ExchangeOrbit> {
    state.orbit(start, steps)
}

/// One level of [`representation_point`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationLevel {
    pub n: usize,
    /// Number of cloud points in `𝓡(v₀⋯v_{n−1})`.
    pub points: usize,
    pub centroid: Vec<f64>,
    pub radius: f64,
}

/// Nested approximations of `φ(v) = ⋂_n 𝓡(v₀⋯v_{n−1})`, where
/// `𝓡(v₀⋯v_{n−1})` is approximated by the cloud points `π 𝐥(p)` such that
/// `p v₀⋯v_{n−1}` is a prefix of the limit sequence (within its first
/// `horizon` letters). Level 0 is the whole cloud. Fails with
/// [`Error::NotInLanguage`] when some `v₀⋯v_{n−1}` has no occurrence.
pub fn representation_point(
    seq: &LimitSequence,
    v: &[Letter],
    frame: &ProjectionFrame,
    horizon: usize,
) -> Result<Vec<RepresentationLevel>> {
    let d = frame.dim();
    let word = seq.prefix(horizon + v.len())?;
    let letters = word.letters();
    let mut prefix_points = Vec::with_capacity(horizon);
    let mut counts = vec![0i64; d];
    for &l in &letters[..horizon] {
        prefix_points.push(frame.coords_int(&counts));
        counts[l.index()] += 1;
    }
    let mut alive: Vec<usize> = (0..horizon).collect();
    let mut out = Vec::new();
    for n in 0..=v.len() {
        if n > 0 {
            alive.retain(|&k| letters[k + n - 1] == v[n - 1]);
        }
        if alive.is_empty() {
            return Err(Error::NotInLanguage(n));
        }
        let pts: Vec<Vec<f64>> = alive.iter().map(|&k| prefix_points[k].clone()).collect();
        let c = centroid(&pts);
        out.push(RepresentationLevel {
            n,
            points: pts.len(),
            radius: radius_about(&pts, &c),
            centroid: c,
        });
    }
    Ok(out)
}

/// Agreement between a rotation coding and a limit sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodingAgreement {
    pub steps: usize,
    /// Length of the common prefix.
    pub agreed: usize,
    pub first_disagreement: Option<usize>,
    /// False when the rotation is rational (outside the scope of the
    /// natural-coding results).
    pub in_scope: bool,
    pub epsilon: Option<f64>,
    pub exact_resolutions: usize,
}

fn agreement(a: &[Letter], b: &[Letter]) -> (usize, Option<usize>) {
    match a.iter().zip(b).position(|(x, y)| x != y) {
        Some(p) => (p, Some(p)),
        None => (a.len().min(b.len()), None),
    }
}

/// Exact coding of the rotation `x ↦ {x + α}` on `[0,1)` started at `start`,
/// with letter 1 on `[0, cut)` and letter 2 on `[cut, 1)`.
pub fn rotation_coding_exact(
    alpha: &QuadIrr,
    start: &QuadIrr,
    cut: &QuadIrr,
    steps: usize,
) -> Vec<Letter> {
    let one = Letter::from_index(0);
    let two = Letter::from_index(1);
    let mut x = start.fract();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        out.push(if &x < cut { one } else { two });
        x = (&x + alpha).fract();
    }
    out
}

/// Compares [`rotation_coding_exact`] with the first `steps` letters of a
/// two-letter limit sequence.
pub fn natural_coding_crosscheck_interval(
    seq: &LimitSequence,
    alpha: &QuadIrr,
    start: &QuadIrr,
    cut: &QuadIrr,
    steps: usize,
) -> Result<CodingAgreement> {
    if seq.directive().alphabet_size() != 2 {
        return Err(Error::AlphabetMismatch {
            expected: 2,
            found: seq.directive().alphabet_size(),
        });
    }
    let coding = rotation_coding_exact(alpha, start, cut, steps);
    let word = seq.prefix(steps)?;
    let (agreed, first_disagreement) = agreement(&coding, word.letters());
    Ok(CodingAgreement {
        steps,
        agreed,
        first_disagreement,
        in_scope: !alpha.is_rational(),
        epsilon: None,
        exact_resolutions: 0,
    })
}

/// Codes the torus rotation `x ↦ x + π_{u,𝟏} e₁` on `𝟏^⊥ / Λ`,
/// `Λ = ⟨e₁ − e_k⟩`, by reducing each orbit point modulo `Λ` into the cloud
/// and reading off its subtile; compares with the cloud's limit sequence.
pub fn natural_coding_crosscheck_torus(
    seq: &LimitSequence,
    cloud: &PointCloud,
    steps: usize,
    epsilon_factor: f64,
) -> Result<CodingAgreement> {
    let frame = &cloud.frame;
    let d = frame.dim();
    if frame.w().iter().any(|&x| (x - frame.w()[0]).abs() > 1e-12) {
        return Err(Error::InvalidArgument(
            "torus coding needs the representation space 1^⊥".into(),
        ));
    }
    let exchange = DomainExchange::new(cloud.clone(), epsilon_factor)?;
    let lattice: Vec<Vec<f64>> = (1..d)
        .map(|k| {
            let mut v = vec![0.0; d];
            v[0] = 1.0;
            v[k] = -1.0;
            frame.coords(&v)
        })
        .collect();
    let shifts = small_combinations(d - 1, 2);
    let t = exchange.translation(Letter::from_index(0)).to_vec();
    let mut x = vec![0.0; frame.basis().len()];
    let mut labels = Vec::with_capacity(steps);
    let mut exact_resolutions = 0;
    for step in 0..steps {
        // Candidate representatives x − λ within ε of the cloud.
        let mut cands = Vec::new();
        let mut reps: Vec<(Letter, bool, Vec<f64>)> = Vec::new();
        for s in &shifts {
            let mut y = x.clone();
            for (c, b) in s.iter().zip(&lattice) {
                y.iter_mut().zip(b).for_each(|(a, v)| *a -= *c as f64 * v);
            }
            for (l, exact) in exchange.candidates(&y) {
                cands.push((l, exact));
                reps.push((l, exact, y.clone()));
            }
        }
        let (l, exact) = resolve(&cands, step)?;
        let y = reps
            .into_iter()
            .find(|(m, e, _)| *m == l && (*e || !exact))
            .map(|r| r.2)
            .expect("resolved label has a representative");
        exact_resolutions += usize::from(exact);
        labels.push(l);
        x = y.iter().zip(&t).map(|(a, b)| a + b).collect();
    }
    let word = seq.prefix(steps)?;
    let (agreed, first_disagreement) = agreement(&labels, word.letters());
    Ok(CodingAgreement {
        steps,
        agreed,
        first_disagreement,
        in_scope: true,
        epsilon: Some(exchange.epsilon()),
        exact_resolutions,
    })
}

fn small_combinations(k: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| (-r..=r).map(move |s| [v.clone(), vec![s]].concat()))
            .collect();
    }
    out.sort_by_key(|v| v.iter().map(|x| x.abs()).sum::<i64>());
    out
}

/// Discrepancy `max_{n ≤ N} |#{k < n : hit_k} − γ n|` with `γ` the overall
/// hit frequency, plus its running maximum at powers of ten.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub frequency: f64,
    pub max_discrepancy: f64,
    /// `(n, max discrepancy up to n)` for `n = 10, 100, …`.
    pub checkpoints: Vec<(usize, f64)>,
    pub note: String,
}

fn discrepancy(hits: impl ExactSizeIterator<Item = bool> + Clone) -> DiscrepancyReport {
    let n = hits.len();
    let total = hits.clone().filter(|&h| h).count();
    let gamma = total as f64 / n.max(1) as f64;
    let mut count = 0usize;
    let mut worst = 0.0f64;
    let mut checkpoints = Vec::new();
    let mut next = 10;
    for (k, h) in hits.enumerate() {
        count += usize::from(h);
        worst = worst.max((count as f64 - gamma * (k + 1) as f64).abs());
        if k + 1 == next {
            checkpoints.push((next, worst));
            next *= 10;
        }
    }
    DiscrepancyReport {
        frequency: gamma,
        max_discrepancy: worst,
        checkpoints,
        note: "bounded growth is suggested by the checkpoints, not proved".into(),
    }
}

/// Discrepancy of visits of a coded orbit (e.g. the domain exchange labels)
/// to subtile `subtile` (`None` = the whole fractal).
pub fn bounded_remainder_probe(labels: &[Letter], subtile: Option<Letter>) -> DiscrepancyReport {
    discrepancy(labels.iter().map(|&l| subtile.is_none_or(|s| s == l)))
}

/// Discrepancy of visits of the rotation `x ↦ {x + α}` (from `start`) to
/// `[0, beta)`, for `n` steps (a classical comparison case).
pub fn interval_remainder_probe(alpha: f64, start: f64, beta: f64, n: usize) -> DiscrepancyReport {
    let mut x = start.rem_euclid(1.0);
    let hits: Vec<bool> = (0..n)
        .map(|_| {
            let h = x < beta;
            x = (x + alpha).rem_euclid(1.0);
            h
        })
        .collect();
    discrepancy(hits.into_iter())
}

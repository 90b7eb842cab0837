//! Monte-Carlo estimation of the first two Lyapunov exponents of a
//! substitution cocycle.
//!
//! A cocycle run draws a random directive sequence from a finite family of
//! substitutions, according to a Bernoulli or Markov measure, and multiplies
//! the incidence matrices. `θ₁` comes from the growth of the sup-norm of the
//! product. `θ₁ + θ₂` comes from the growth of its second exterior power,
//! which is tracked as a separate product of 2×2-minor matrices.
//!
//! Both products are renormalised every [`RENORMALIZE_EVERY`] steps. The
//! product is divided by its current sup-norm and the logarithm of that norm
//! is accumulated, so no bignums are needed. Replicas are independent, run
//! in parallel, and are deterministic given `(seed, replica index)`.

use std::fmt;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::{dense, IntMatrix};
use crate::substitution::{Family, Substitution};
use crate::{Error, Result};

/// Number of steps between two renormalisations of the running products.
pub const RENORMALIZE_EVERY: usize = 32;

/// Default length of a run.
pub const DEFAULT_LENGTH: usize = 100_000;

/// Default number of independent replicas.
pub const DEFAULT_REPLICAS: usize = 32;

/// The probability measure driving the choice of substitutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Independent choices with the given (positive, unnormalised) weights.
    Bernoulli(Vec<f64>),
    /// A Markov chain with the given row-stochastic transition matrix
    /// (rows are normalised on use). The chain starts from its stationary
    /// distribution.
    Markov(Vec<Vec<f64>>),
}

impl Measure {
    /// The uniform Bernoulli measure on `k` symbols.
    pub fn uniform(k: usize) -> Self {
        Measure::Bernoulli(vec![1.0; k])
    }

    /// Checks that the measure is usable with a family of `k` substitutions:
    /// the shapes must match and every weight must be positive and finite.
    pub fn validate(&self, k: usize) -> Result<()> {
        let ok = |w: &[f64]| w.len() == k && w.iter().all(|x| x.is_finite() && *x > 0.0);
        let valid = match self {
            Measure::Bernoulli(w) => ok(w),
            Measure::Markov(rows) => rows.len() == k && rows.iter().all(|r| ok(r)),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "measure must have {k} positive weights per row for a family of {k} substitutions"
            )))
        }
    }

    /// Stationary distribution of the chain (the normalised weights for a
    /// Bernoulli measure).
    pub fn stationary(&self) -> Vec<f64> {
        match self {
            Measure::Bernoulli(w) => normalized(w),
            Measure::Markov(rows) => {
                let k = rows.len();
                let p: Vec<Vec<f64>> = rows.iter().map(|r| normalized(r)).collect();
                let mut pi = vec![1.0 / k as f64; k];
                for _ in 0..10_000 {
                    let next: Vec<f64> = (0..k)
                        .map(|j| (0..k).map(|i| pi[i] * p[i][j]).sum())
                        .collect();
                    let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
                    pi = next;
                    if delta < 1e-15 {
                        break;
                    }
                }
                pi
            }
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |w: &[f64]| {
            w.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            Measure::Bernoulli(w) => write!(f, "bernoulli({})", list(w)),
            Measure::Markov(rows) => {
                write!(
                    f,
                    "markov({})",
                    rows.iter()
                        .map(|r| format!("[{}]", list(r)))
                        .collect::<Vec<_>>()
                        .join(",")
                )
            }
        }
    }
}

fn normalized(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Everything needed to reproduce a cocycle run: the family, the measure,
/// the seed and the length.
#[derive(Clone, Debug)]
pub struct CocycleSpec {
    family: String,
    matrices: Vec<IntMatrix>,
    measure: Measure,
    seed: u64,
    n: usize,
}

impl CocycleSpec {
    /// A cocycle over an explicit list of substitutions. `family` is the name
    /// used in reports.
    pub fn new(
        family: impl Into<String>,
        subs: &[Substitution],
        measure: Measure,
        seed: u64,
        n: usize,
    ) -> Result<Self> {
        Self::from_matrices(
            family,
            subs.iter().map(Substitution::incidence).collect(),
            measure,
            seed,
            n,
        )
    }

    /// A cocycle over a built-in family.
    pub fn from_family(family: Family, measure: Measure, seed: u64, n: usize) -> Result<Self> {
        Self::new(family.name(), &family.substitutions(), measure, seed, n)
    }

    /// A cocycle over explicit square matrices of a common dimension `d ≥ 2`.
    pub fn from_matrices(
        family: impl Into<String>,
        matrices: Vec<IntMatrix>,
        measure: Measure,
        seed: u64,
        n: usize,
    ) -> Result<Self> {
        let d = matrices.first().ok_or(Error::EmptyDirective)?.dim();
        if d < 2 {
            return Err(Error::InvalidArgument(
                "the second exponent needs dimension at least 2".into(),
            ));
        }
        if let Some(m) = matrices.iter().find(|m| m.dim() != d) {
            return Err(Error::AlphabetMismatch {
                expected: d,
                found: m.dim(),
            });
        }
        if n == 0 {
            return Err(Error::InvalidArgument("run length must be positive".into()));
        }
        measure.validate(matrices.len())?;
        Ok(CocycleSpec {
            family: family.into(),
            matrices,
            measure,
            seed,
            n,
        })
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    /// Same spec with a different length.
    pub fn with_len(mut self, n: usize) -> Self {
        self.n = n.max(1);
        self
    }

    /// Same spec with a different seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Which product is accumulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `M₀ M₁ ⋯ M_{n−1}`, multiplied on the right.
    Forward,
    /// `M_{n−1}ᵗ ⋯ M₁ᵗ M₀ᵗ`, multiplied on the left. This is the cocycle
    /// `A = M₀ᵗ` iterated along the shift.
    Transposed,
}

/// The outcome of one replica: accumulated log-norms of the product and of
/// its second exterior power.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CocycleRun {
    pub replica: u64,
    pub n: usize,
    pub orientation: Orientation,
    /// `log ‖P‖∞` for the full product `P`.
    pub log_norm1: f64,
    /// `log ‖⋀² P‖∞`.
    pub log_norm2: f64,
    /// `(m, (1/m) log ‖P_m‖∞)` at the lengths `m = 2^j · 32` and at `n`.
    pub checkpoints: Vec<(usize, f64)>,
    /// Indices of the drawn substitutions, 0-based (kept only for short runs).
    pub choices: Option<Vec<usize>>,
}

impl CocycleRun {
    pub fn theta1(&self) -> f64 {
        self.log_norm1 / self.n as f64
    }

    pub fn theta2(&self) -> f64 {
        (self.log_norm2 - self.log_norm1) / self.n as f64
    }
}

/// Runs above this length do not record their choices.
const RECORD_CHOICES_UP_TO: usize = 4096;

/// A renormalised running product of dense `f64` matrices.
struct RunningProduct {
    n: usize,
    p: Vec<f64>,
    scratch: Vec<f64>,
    log_scale: f64,
}

impl RunningProduct {
    fn identity(n: usize) -> Self {
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            p[i * n + i] = 1.0;
        }
        RunningProduct {
            n,
            p,
            scratch: vec![0.0; n * n],
            log_scale: 0.0,
        }
    }

    /// `P ← P·M` (`right`) or `P ← M·P`.
    fn multiply(&mut self, m: &[f64], right: bool) {
        let n = self.n;
        let (a, b): (&[f64], &[f64]) = if right {
            (&self.p, m)
        } else {
            (m, &self.p[..])
        };
        self.scratch.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            for k in 0..n {
                let x = a[i * n + k];
                if x == 0.0 {
                    continue;
                }
                for j in 0..n {
                    self.scratch[i * n + j] += x * b[k * n + j];
                }
            }
        }
        std::mem::swap(&mut self.p, &mut self.scratch);
    }

    fn renormalize(&mut self) {
        let s = dense::sup_norm(&self.p, self.n);
        if s > 0.0 && s.is_finite() {
            self.p.iter_mut().for_each(|x| *x /= s);
            self.log_scale += s.ln();
        }
    }

    fn log_norm(&self) -> f64 {
        self.log_scale + dense::sup_norm(&self.p, self.n).ln()
    }
}

fn dense_of(m: &IntMatrix) -> Vec<f64> {
    dense::from_rows(&m.to_f64_rows())
}

/// Runs one replica. The random stream is ChaCha8 seeded with `spec.seed`
/// on stream `replica`, so results depend only on `(seed, replica)`.
pub fn run_cocycle(spec: &CocycleSpec, replica: u64, orientation: Orientation) -> CocycleRun {
    let d = spec.dim();
    let d2 = d * (d - 1) / 2;
    let prepare = |m: &IntMatrix| match orientation {
        Orientation::Forward => m.clone(),
        Orientation::Transposed => m.transpose(),
    };
    let first: Vec<Vec<f64>> = spec
        .matrices
        .iter()
        .map(|m| dense_of(&prepare(m)))
        .collect();
    let second: Vec<Vec<f64>> = spec
        .matrices
        .iter()
        .map(|m| dense_of(&prepare(m).wedge2()))
        .collect();
    let right = orientation == Orientation::Forward;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(replica);
    let mut sampler = Sampler::new(&spec.measure);

    let mut p1 = RunningProduct::identity(d);
    let mut p2 = RunningProduct::identity(d2);
    let mut checkpoints = Vec::new();
    let mut next_checkpoint = RENORMALIZE_EVERY;
    let mut choices = (spec.n <= RECORD_CHOICES_UP_TO).then(|| Vec::with_capacity(spec.n));
    for step in 1..=spec.n {
        let k = sampler.draw(&mut rng);
        if let Some(c) = choices.as_mut() {
            c.push(k);
        }
        p1.multiply(&first[k], right);
        p2.multiply(&second[k], right);
        if step % RENORMALIZE_EVERY == 0 {
            p1.renormalize();
            p2.renormalize();
        }
        if step == next_checkpoint && step < spec.n {
            checkpoints.push((step, p1.log_norm() / step as f64));
            next_checkpoint *= 2;
        }
    }
    let log_norm1 = p1.log_norm();
    checkpoints.push((spec.n, log_norm1 / spec.n as f64));
    CocycleRun {
        replica,
        n: spec.n,
        orientation,
        log_norm1,
        log_norm2: p2.log_norm(),
        checkpoints,
        choices,
    }
}

/// Draws substitution indices according to a [`Measure`].
struct Sampler {
    initial: WeightedIndex<f64>,
    rows: Option<Vec<WeightedIndex<f64>>>,
    state: Option<usize>,
}

impl Sampler {
    fn new(measure: &Measure) -> Self {
        // Weights were validated positive, so the constructions cannot fail.
        let initial = WeightedIndex::new(measure.stationary()).expect("validated weights");
        let rows = match measure {
            Measure::Bernoulli(_) => None,
            Measure::Markov(rows) => Some(
                rows.iter()
                    .map(|r| WeightedIndex::new(r).expect("validated weights"))
                    .collect(),
            ),
        };
        Sampler {
            initial,
            rows,
            state: None,
        }
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng) -> usize {
        let k = match (&self.rows, self.state) {
            (Some(rows), Some(s)) => rows[s].sample(rng),
            _ => self.initial.sample(rng),
        };
        self.state = Some(k);
        k
    }
}

/// Exponent estimates with their standard errors across replicas.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub theta1: f64,
    pub theta2: f64,
    pub stderr1: f64,
    pub stderr2: f64,
    pub replicas: usize,
    pub n: usize,
    pub orientation: Orientation,
    /// Set when every replica produced the same product (for example a
    /// single-matrix family). The standard errors are then exactly zero and
    /// reflect determinism, not precision.
    pub degenerate: bool,
    /// Replica-averaged `(m, (1/m) log ‖P_m‖∞)`.
    pub mean_checkpoints: Vec<(usize, f64)>,
}

/// Estimates `θ₁` and `θ₂` from `replicas` independent forward runs.
pub fn estimate_exponents(spec: &CocycleSpec, replicas: usize) -> Result<ExponentEstimate> {
    estimate_exponents_oriented(spec, replicas, Orientation::Forward)
}

/// As [`estimate_exponents`], accumulating the chosen product.
pub fn estimate_exponents_oriented(
    spec: &CocycleSpec,
    replicas: usize,
    orientation: Orientation,
) -> Result<ExponentEstimate> {
    if replicas == 0 {
        return Err(Error::InvalidArgument(
            "at least one replica is required".into(),
        ));
    }
    let runs: Vec<CocycleRun> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| run_cocycle(spec, r, orientation))
        .collect();
    let t1: Vec<f64> = runs.iter().map(CocycleRun::theta1).collect();
    let t2: Vec<f64> = runs.iter().map(CocycleRun::theta2).collect();
    let degenerate = spec.matrices.len() == 1
        || runs.len() > 1
            && runs
                .windows(2)
                .all(|w| w[0].choices.is_some() && w[0].choices == w[1].choices);
    let (theta1, s1) = mean_stderr(&t1);
    let (theta2, s2) = mean_stderr(&t2);
    let (stderr1, stderr2) = if degenerate { (0.0, 0.0) } else { (s1, s2) };
    let mean_checkpoints = runs[0]
        .checkpoints
        .iter()
        .enumerate()
        .map(|(i, &(m, _))| {
            (
                m,
                runs.iter().map(|r| r.checkpoints[i].1).sum::<f64>() / runs.len() as f64,
            )
        })
        .collect();
    Ok(ExponentEstimate {
        theta1,
        theta2,
        stderr1,
        stderr2,
        replicas,
        n: spec.n,
        orientation,
        degenerate,
        mean_checkpoints,
    })
}

/// Sample mean and standard error of the mean. A single sample has an
/// infinite standard error.
fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Outcome of the sign test `θ₁ > 0 > θ₂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PisotVerdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl fmt::Display for PisotVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PisotVerdict::Satisfied => "satisfied",
            PisotVerdict::Violated => "violated",
            PisotVerdict::Inconclusive => "inconclusive",
        })
    }
}

/// Decides `θ₁ > 0 > θ₂` from estimates with two-standard-error intervals.
///
/// * `Satisfied` when `θ₁ − 2s₁ > 0` and `θ₂ + 2s₂ < 0`.
/// * `Violated` when one of the intervals lies entirely on the wrong side
///   of zero (zero included): `θ₁ + 2s₁ ≤ 0` or `θ₂ − 2s₂ ≥ 0`.
/// * `Inconclusive` otherwise, when an interval straddles zero.
pub fn pisot_verdict(theta1: f64, theta2: f64, stderr1: f64, stderr2: f64) -> PisotVerdict {
    if theta1 - 2.0 * stderr1 > 0.0 && theta2 + 2.0 * stderr2 < 0.0 {
        PisotVerdict::Satisfied
    } else if theta1 + 2.0 * stderr1 <= 0.0 || theta2 - 2.0 * stderr2 >= 0.0 {
        PisotVerdict::Violated
    } else {
        PisotVerdict::Inconclusive
    }
}

impl ExponentEstimate {
    pub fn verdict(&self) -> PisotVerdict {
        pisot_verdict(self.theta1, self.theta2, self.stderr1, self.stderr2)
    }
}

/// Machine-readable summary of an estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub family: String,
    pub measure: Measure,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub theta1: f64,
    pub theta2: f64,
    pub stderr1: f64,
    pub stderr2: f64,
    pub degenerate: bool,
    pub verdict: PisotVerdict,
}

impl LyapunovReport {
    pub fn new(spec: &CocycleSpec, est: &ExponentEstimate) -> Self {
        LyapunovReport {
            family: spec.family.clone(),
            measure: spec.measure.clone(),
            n: spec.n,
            replicas: est.replicas,
            seed: spec.seed,
            theta1: est.theta1,
            theta2: est.theta2,
            stderr1: est.stderr1,
            stderr2: est.stderr2,
            degenerate: est.degenerate,
            verdict: est.verdict(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// All complex roots of a monic cubic `x³ + a x² + b x + c`, found from
    /// the real root (bisection) and the deflated quadratic.
    fn cubic_root_moduli(a: f64, b: f64, c: f64) -> Vec<f64> {
        let f = |x: f64| ((x + a) * x + b) * x + c;
        let bound = 1.0 + a.abs().max(b.abs()).max(c.abs());
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo).signum() == f(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        // x² + (a + r) x + (b + r(a + r))
        let p = a + r;
        let q = b + r * p;
        let disc = p * p - 4.0 * q;
        let mut moduli = vec![r.abs()];
        if disc >= 0.0 {
            moduli.push(((-p + disc.sqrt()) / 2.0).abs());
            moduli.push(((-p - disc.sqrt()) / 2.0).abs());
        } else {
            moduli.push(q.sqrt());
            moduli.push(q.sqrt());
        }
        moduli.sort_by(|x, y| y.partial_cmp(x).unwrap());
        moduli
    }

    fn single(m: IntMatrix, n: usize) -> ExponentEstimate {
        let spec =
            CocycleSpec::from_matrices("single", vec![m], Measure::uniform(1), 1, n).unwrap();
        estimate_exponents(&spec, 4).unwrap()
    }

    #[test]
    fn tribonacci_matches_char_poly_roots() {
        let m = Family::Tribonacci.substitutions()[0].incidence();
        let cp = m.char_poly();
        let c: Vec<f64> = cp
            .coeffs()
            .iter()
            .map(|x| x.to_string().parse().unwrap())
            .collect();
        // coefficients are stored lowest degree first
        let roots = cubic_root_moduli(c[2], c[1], c[0]);
        let est = single(m, 100_000);
        assert!(est.degenerate);
        assert!(
            (est.theta1 - roots[0].ln()).abs() < 1e-3,
            "{est:?} vs {roots:?}"
        );
        assert!(
            (est.theta2 - roots[1].ln()).abs() < 1e-3,
            "{est:?} vs {roots:?}"
        );
        assert_eq!(est.verdict(), PisotVerdict::Satisfied);
    }

    #[test]
    fn single_matrix_oracle_for_primitive_composites() {
        let ar = Substitution::compose_all(&Family::ArnouxRauzy(3).substitutions()).unwrap();
        let brun = {
            let s = Family::Brun.substitutions();
            Substitution::compose_all(&[s[0].clone(), s[1].clone(), s[0].clone(), s[1].clone()])
                .unwrap()
        };
        for sub in [ar, brun] {
            let m = sub.incidence();
            assert!(m.mul(&m).mul(&m).is_positive());
            let c: Vec<f64> = m
                .char_poly()
                .coeffs()
                .iter()
                .map(|x| x.to_string().parse().unwrap())
                .collect();
            let roots = cubic_root_moduli(c[2], c[1], c[0]);
            let est = single(m, 20_000);
            assert!(
                (est.theta1 - roots[0].ln()).abs() < 1e-3,
                "{est:?} vs {roots:?}"
            );
            assert!(
                (est.theta2 - roots[1].ln()).abs() < 1e-3,
                "{est:?} vs {roots:?}"
            );
        }
    }

    #[test]
    fn identity_and_permutation_families_are_violated() {
        let id = single(IntMatrix::identity(3), 1000);
        assert_eq!((id.theta1, id.theta2), (0.0, 0.0));
        assert_eq!(id.verdict(), PisotVerdict::Violated);
        let perm = IntMatrix::from_rows(&[vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
        let swap = IntMatrix::from_rows(&[vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 1]]).unwrap();
        let spec =
            CocycleSpec::from_matrices("perm", vec![perm, swap], Measure::uniform(2), 3, 1000)
                .unwrap();
        let est = estimate_exponents(&spec, 8).unwrap();
        assert!(!est.degenerate);
        assert_eq!(est.theta1, 0.0);
        assert_eq!(est.verdict(), PisotVerdict::Violated);
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(
            pisot_verdict(0.3, -0.1, 0.01, 0.01),
            PisotVerdict::Satisfied
        );
        assert_eq!(
            pisot_verdict(0.3, -0.1, 0.5, 0.5),
            PisotVerdict::Inconclusive
        );
        assert_eq!(pisot_verdict(0.3, 0.2, 0.01, 0.01), PisotVerdict::Violated);
        assert_eq!(
            pisot_verdict(0.3, -0.1, f64::INFINITY, f64::INFINITY),
            PisotVerdict::Inconclusive
        );
    }

    #[test]
    fn tiny_runs_are_inconclusive() {
        let spec = CocycleSpec::from_family(Family::Brun, Measure::uniform(3), 11, 3).unwrap();
        let est = estimate_exponents(&spec, 1).unwrap();
        assert_eq!(est.verdict(), PisotVerdict::Inconclusive);
    }

    #[test]
    fn brun_uniform_sign_pattern() {
        for seed in [1, 2] {
            let spec =
                CocycleSpec::from_family(Family::Brun, Measure::uniform(3), seed, 20_000).unwrap();
            let est = estimate_exponents(&spec, 8).unwrap();
            assert!(est.theta1 > 0.0 && est.theta2 < 0.0, "{est:?}");
            assert_eq!(est.verdict(), PisotVerdict::Satisfied, "{est:?}");
        }
    }

    #[test]
    fn deterministic_per_seed_and_replica() {
        let spec = CocycleSpec::from_family(Family::Brun, Measure::uniform(3), 5, 2000).unwrap();
        let a = run_cocycle(&spec, 3, Orientation::Forward);
        let b = run_cocycle(&spec, 3, Orientation::Forward);
        let c = run_cocycle(&spec, 4, Orientation::Forward);
        assert_eq!(a, b);
        assert_ne!(a.choices, c.choices);
    }

    #[test]
    fn transpose_orientation_agrees() {
        let spec = CocycleSpec::from_family(Family::ArnouxRauzy(3), Measure::uniform(3), 9, 20_000)
            .unwrap();
        let f = estimate_exponents_oriented(&spec, 8, Orientation::Forward).unwrap();
        let t = estimate_exponents_oriented(&spec, 8, Orientation::Transposed).unwrap();
        // Same drawn sequences: the products are transposes of each other.
        assert!(
            (f.theta1 - t.theta1).abs() <= 2.0 * (f.stderr1 + t.stderr1) + 1e-3,
            "{f:?} {t:?}"
        );
        assert!(
            (f.theta2 - t.theta2).abs() <= 2.0 * (f.stderr2 + t.stderr2) + 1e-3,
            "{f:?} {t:?}"
        );
    }

    #[test]
    fn markov_measure_runs() {
        let measure = Measure::Markov(vec![
            vec![1.0, 2.0, 1.0],
            vec![1.0, 1.0, 1.0],
            vec![3.0, 1.0, 1.0],
        ]);
        let pi = measure.stationary();
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let spec = CocycleSpec::from_family(Family::Brun, measure, 2, 5000).unwrap();
        let est = estimate_exponents(&spec, 4).unwrap();
        assert!(est.theta1 > 0.0);
        assert!(CocycleSpec::from_family(
            Family::Brun,
            Measure::Bernoulli(vec![1.0, 0.0, 1.0]),
            0,
            10
        )
        .is_err());
        assert!(CocycleSpec::from_family(Family::Brun, Measure::uniform(2), 0, 10).is_err());
    }

    #[test]
    fn checkpoint_sequence_is_eventually_nonincreasing() {
        let spec = CocycleSpec::from_family(Family::Brun, Measure::uniform(3), 4, 32_768).unwrap();
        let est = estimate_exponents(&spec, 16).unwrap();
        let tail: Vec<f64> = est
            .mean_checkpoints
            .iter()
            .filter(|(m, _)| *m >= 1024)
            .map(|c| c.1)
            .collect();
        assert!(tail.len() >= 4);
        for w in tail.windows(2) {
            assert!(
                w[1] <= w[0] + 4.0 * est.stderr1,
                "{:?}",
                est.mean_checkpoints
            );
        }
    }

    #[test]
    fn report_json_has_all_fields() {
        let spec =
            CocycleSpec::from_family(Family::Tribonacci, Measure::uniform(1), 0, 1000).unwrap();
        let est = estimate_exponents(&spec, 2).unwrap();
        let json: serde_json::Value =
            serde_json::from_str(&LyapunovReport::new(&spec, &est).to_json()).unwrap();
        for key in [
            "family", "measure", "n", "replicas", "theta1", "theta2", "stderr1", "stderr2",
            "verdict",
        ] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["verdict"], "satisfied");
    }
}

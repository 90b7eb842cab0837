//! Run configuration: every input that influences a command's output.
//!
//! A configuration round-trips through a plain `key = value` text format.
//! Figures embed that text verbatim, so a run can be reproduced from the
//! file it produced.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::CliError;

/// Figure encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    /// SVG, switching to PPM above [`crate::render::SVG_POINT_LIMIT`] points.
    Auto,
    Svg,
    Ppm,
}

impl Format {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(Format::Auto),
            "svg" => Some(Format::Svg),
            "ppm" => Some(Format::Ppm),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Format::Auto => "auto",
            Format::Svg => "svg",
            Format::Ppm => "ppm",
        }
    }
}

/// A fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    /// Directive sequence in the library's text grammar.
    pub directive: String,
    /// Main size parameter: letters, points, steps or word length, depending
    /// on the command. `None` selects the command's default.
    pub n: Option<usize>,
    /// Depth of the limit-sequence construction, or of a continued fraction
    /// expansion.
    pub depth: usize,
    /// Horizon of the finite-horizon hypothesis checks.
    pub horizon: usize,
    /// Iteration count for dual-substitution checks.
    pub steps: usize,
    /// First directive index for `language`.
    pub start: usize,
    /// `ones`, or a comma-separated normal vector for the projection frame.
    pub frame: String,
    /// Restricts output to the limit sequence starting with this letter.
    pub letter: Option<u8>,
    pub output: Option<PathBuf>,
    pub points: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub replicas: usize,
    /// `uniform`, `bernoulli:w1,w2,…` or `markov:r1;r2;…` (rows of commas).
    pub measure: String,
    /// Input vector for `expand`, comma separated (integers and `p/q` are
    /// exact, anything else is read as floating point).
    pub input: Option<String>,
    pub algorithm: String,
    /// Number of cloud points for `code`, `exchange` and the tiling check.
    pub cloud_points: usize,
    /// Membership radius as a multiple of the cloud's nearest-neighbour median.
    pub eps_factor: f64,
    /// Balance constant used by the unbounded-cloud guard and the checks.
    pub balance_c: u64,
    /// Patch size budget for dual-substitution iterations.
    pub budget: usize,
    /// Skip the unbounded-cloud guard.
    pub force: bool,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        RunConfig {
            command: command.to_string(),
            directive: "tribonacci".into(),
            n: None,
            depth: sadiclab::rauzy::LIMIT_DEPTH,
            horizon: 10_000,
            steps: 8,
            start: 0,
            frame: "ones".into(),
            letter: None,
            output: None,
            points: None,
            format: Format::Auto,
            seed: 0,
            replicas: sadiclab::lyapunov::DEFAULT_REPLICAS,
            measure: "uniform".into(),
            input: None,
            algorithm: "brun".into(),
            cloud_points: 20_000,
            eps_factor: 3.0,
            balance_c: 2,
            budget: sadiclab::discrete_geometry::DEFAULT_PATCH_BUDGET,
            force: false,
        }
    }

    /// `n`, or the given default.
    pub fn n_or(&self, default: usize) -> usize {
        self.n.unwrap_or(default)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse()
                .map_err(|_| format!("invalid value `{v}` for `{key}`"))
        }
        let opt_path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "command" => self.command = value.to_string(),
            "directive" => self.directive = value.to_string(),
            "n" => self.n = Some(num(key, value)?),
            "depth" => self.depth = num(key, value)?,
            "horizon" => self.horizon = num(key, value)?,
            "steps" => self.steps = num(key, value)?,
            "start" => self.start = num(key, value)?,
            "frame" => self.frame = value.to_string(),
            "letter" => self.letter = Some(num(key, value)?),
            "output" => self.output = opt_path(value),
            "points" => self.points = opt_path(value),
            "format" => {
                self.format = Format::parse(value)
                    .ok_or_else(|| format!("invalid value `{value}` for `format`"))?
            }
            "seed" => self.seed = num(key, value)?,
            "replicas" => self.replicas = num(key, value)?,
            "measure" => self.measure = value.to_string(),
            "input" => self.input = Some(value.to_string()),
            "algorithm" => self.algorithm = value.to_string(),
            "cloud_points" => self.cloud_points = num(key, value)?,
            "eps_factor" => self.eps_factor = num(key, value)?,
            "balance_c" => self.balance_c = num(key, value)?,
            "budget" => self.budget = num(key, value)?,
            "force" => self.force = num(key, value)?,
            other => return Err(format!("unknown configuration key `{other}`")),
        }
        Ok(())
    }

    /// Applies a `key = value` document. Blank lines and lines starting with
    /// `#` are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Config {
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|message| CliError::Config {
                    line: i + 1,
                    message,
                })?;
        }
        Ok(())
    }

    /// Parses a complete configuration document.
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::new("");
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// The `key = value` form, one key per line in a fixed order. Unset
    /// optional keys are omitted.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("command", &self.command);
        put("directive", &self.directive);
        if let Some(n) = self.n {
            put("n", &n);
        }
        put("depth", &self.depth);
        put("horizon", &self.horizon);
        put("steps", &self.steps);
        put("start", &self.start);
        put("frame", &self.frame);
        if let Some(l) = self.letter {
            put("letter", &l);
        }
        if let Some(p) = &self.output {
            put("output", &p.display());
        }
        if let Some(p) = &self.points {
            put("points", &p.display());
        }
        put("format", &self.format.name());
        put("seed", &self.seed);
        put("replicas", &self.replicas);
        put("measure", &self.measure);
        if let Some(x) = &self.input {
            put("input", x);
        }
        put("algorithm", &self.algorithm);
        put("cloud_points", &self.cloud_points);
        put("eps_factor", &self.eps_factor);
        put("balance_c", &self.balance_c);
        put("budget", &self.budget);
        put("force", &self.force);
        s
    }
}

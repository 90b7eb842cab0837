use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sadiclab_cli::{CliError, RunConfig};

/// Explore S-adic sequences, their continued fraction algorithms, Rauzy
/// fractals and dual substitutions.
///
/// Directives use the library grammar, for example `tribonacci`,
/// `brun:(1,2,1,2)^ω`, `ar:(1,2,3)^w` or `sturmian:1,1,1` (partial quotients).
/// Options can also be read from a `key = value` file given with --config;
/// flags on the command line take precedence. Set SADICLAB_THREADS to limit
/// the worker thread count.
#[derive(Parser, Debug)]
#[command(name = "sadiclab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Print prefixes of length --n of the limit sequences, one per line.
    Limitword,
    /// List the factors of length ≤ --n of the language (JSON).
    Language,
    /// Continued fraction expansion of --input with --algorithm (JSON).
    Expand,
    /// Draw the Rauzy fractal from --n prefix points (SVG or PPM).
    Fractal,
    /// Draw the patch E1*(σ_[0,n))(U) of a three-letter directive (SVG).
    Dualplane,
    /// Run every diagnostic and print one JSON document.
    Check,
    /// Estimate the first two Lyapunov exponents (JSON).
    Lyapunov,
    /// Compare a limit sequence with the coding of the toral translation.
    Code,
    /// Iterate the domain exchange on the Rauzy fractal.
    Exchange,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Limitword => "limitword",
            Command::Language => "language",
            Command::Expand => "expand",
            Command::Fractal => "fractal",
            Command::Dualplane => "dualplane",
            Command::Check => "check",
            Command::Lyapunov => "lyapunov",
            Command::Code => "code",
            Command::Exchange => "exchange",
        }
    }
}

#[derive(Args, Debug)]
struct Options {
    /// Read options from a `key = value` file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directive sequence [default: tribonacci].
    #[arg(long, global = true)]
    directive: Option<String>,
    /// Size parameter: letters, points, steps or word length.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Depth of the limit-sequence construction or of an expansion [default: 32].
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Horizon of finite-horizon checks [default: 10000].
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Iterations for dual-substitution checks [default: 8].
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// First directive index for `language` [default: 0].
    #[arg(long, global = true)]
    start: Option<usize>,
    /// Projection frame: `ones` or a comma-separated normal vector.
    #[arg(long, global = true)]
    frame: Option<String>,
    /// Use only the limit sequence starting with this letter.
    #[arg(long, global = true)]
    letter: Option<u8>,
    /// Figure output path (standard output if absent).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Point or face list output path.
    #[arg(long, global = true)]
    points: Option<PathBuf>,
    /// Figure format: auto, svg or ppm.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Random seed [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo replicas [default: 32].
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Measure: uniform, bernoulli:w1,w2,… or markov:row;row;…
    #[arg(long, global = true)]
    measure: Option<String>,
    /// Comma-separated input vector for `expand`.
    #[arg(long, global = true)]
    input: Option<String>,
    /// Continued fraction algorithm: brun or classical [default: brun].
    #[arg(long, global = true)]
    algorithm: Option<String>,
    /// Cloud size for code, exchange and the tiling check [default: 20000].
    #[arg(long, global = true)]
    cloud_points: Option<usize>,
    /// Membership radius in nearest-neighbour medians [default: 3].
    #[arg(long, global = true)]
    eps_factor: Option<f64>,
    /// Balance constant for the cloud guard and checks [default: 2].
    #[arg(long, global = true)]
    balance_c: Option<u64>,
    /// Patch size budget [default: 1000000].
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Draw even when the unbounded-cloud guard trips.
    #[arg(long, global = true)]
    force: bool,
}

impl Options {
    /// Flags given on the command line, as configuration key/value pairs.
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut put = |k: &'static str, x: Option<String>| {
            if let Some(x) = x {
                v.push((k, x));
            }
        };
        let s = |x: &Option<String>| x.clone();
        put("directive", s(&self.directive));
        put("n", self.n.map(|x| x.to_string()));
        put("depth", self.depth.map(|x| x.to_string()));
        put("horizon", self.horizon.map(|x| x.to_string()));
        put("steps", self.steps.map(|x| x.to_string()));
        put("start", self.start.map(|x| x.to_string()));
        put("frame", s(&self.frame));
        put("letter", self.letter.map(|x| x.to_string()));
        put(
            "output",
            self.output.as_ref().map(|p| p.display().to_string()),
        );
        put(
            "points",
            self.points.as_ref().map(|p| p.display().to_string()),
        );
        put("format", s(&self.format));
        put("seed", self.seed.map(|x| x.to_string()));
        put("replicas", self.replicas.map(|x| x.to_string()));
        put("measure", s(&self.measure));
        put("input", s(&self.input));
        put("algorithm", s(&self.algorithm));
        put("cloud_points", self.cloud_points.map(|x| x.to_string()));
        put("eps_factor", self.eps_factor.map(|x| x.to_string()));
        put("balance_c", self.balance_c.map(|x| x.to_string()));
        put("budget", self.budget.map(|x| x.to_string()));
        put("force", self.force.then(|| "true".to_string()));
        v
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::new(cli.command.name());
    if let Some(path) = &cli.opts.config {
        cfg.apply_text(&std::fs::read_to_string(path)?)?;
        cfg.command = cli.command.name().to_string();
    }
    for (k, v) in cli.opts.pairs() {
        cfg.set(k, &v).map_err(CliError::Usage)?;
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(value) = std::env::var("SADICLAB_THREADS") {
        let n: usize = value.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "SADICLAB_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads()
        .and_then(|()| resolve(&cli))
        .and_then(|cfg| {
            let stdout = std::io::stdout();
            let stderr = std::io::stderr();
            let mut out = stdout.lock();
            let code = sadiclab_cli::run(&cfg, &mut out, &mut stderr.lock())?;
            out.flush()?;
            Ok(code)
        });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        // A closed downstream pipe (`sadiclab … | head`) is not a failure.
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

//! Subcommand implementations. Each command reads a [`RunConfig`] and
//! writes its result to the given streams. Files named in the configuration
//! are written directly.
//!
//! Mathematical negative outcomes (an imbalance witness, a failed
//! coincidence check, …) are reported as findings and still exit with 0.
//! Only operational errors are returned as `Err`.

use std::io::Write;
use std::str::FromStr;

use num_rational::BigRational;
use serde_json::{json, Value};

use sadiclab::cfalgo::{self, Algorithm};
use sadiclab::discrete_geometry::{self as dg, Patch};
use sadiclab::lyapunov::{self, CocycleSpec, LyapunovReport, Measure};
use sadiclab::rauzy::{self, DomainExchange, PointCloud, ProjectionFrame};
use sadiclab::sadic::{self, DirectiveSequence, HypothesisOptions, LimitSequence};
use sadiclab::words::{self, render};

use crate::config::{Format, RunConfig};
use crate::render::{self as fig, SVG_POINT_LIMIT};
use crate::CliError;

/// Names of the available subcommands.
pub const COMMANDS: [&str; 9] = [
    "limitword",
    "language",
    "expand",
    "fractal",
    "dualplane",
    "check",
    "lyapunov",
    "code",
    "exchange",
];

/// Runs the command named in `cfg.command`. Returns the process exit code.
pub fn run(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let done = |r: Result<(), CliError>| r.map(|()| 0);
    match cfg.command.as_str() {
        "limitword" => done(limitword(cfg, out, err)),
        "language" => done(language(cfg, out)),
        "expand" => done(expand(cfg, out)),
        "fractal" => done(fractal(cfg, out, err)),
        "dualplane" => done(dualplane(cfg, out, err)),
        "check" => check(cfg, out),
        "lyapunov" => done(lyapunov_cmd(cfg, out)),
        "code" => done(code(cfg, out)),
        "exchange" => done(exchange(cfg, out)),
        other => Err(CliError::Usage(format!(
            "unknown command `{other}` (expected one of {})",
            COMMANDS.join(", ")
        ))),
    }
}

fn directive(cfg: &RunConfig) -> Result<DirectiveSequence, CliError> {
    Ok(DirectiveSequence::parse(&cfg.directive)?)
}

fn frame_normal(cfg: &RunConfig) -> Result<Option<Vec<f64>>, CliError> {
    if cfg.frame.trim() == "ones" {
        return Ok(None);
    }
    cfg.frame
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("invalid frame component `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn limit_sequence_for(
    seqs: &[LimitSequence],
    letter: Option<u8>,
) -> Result<&LimitSequence, CliError> {
    match letter {
        None => Ok(&seqs[0]),
        Some(l) => seqs
            .iter()
            .find(|s| s.first_letters()[0].get() == l)
            .ok_or_else(|| CliError::Usage(format!("no limit sequence starts with letter {l}"))),
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("values serialise")
}

/// `limitword`: prefixes of length `n` of the limit sequences, one per line.
/// A short hypothesis header goes to the error stream.
fn limitword(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let sigma = directive(cfg)?;
    let n = cfg.n_or(100);
    let primitivity = sadic::primitivity_check(&sigma, 8, 64)?;
    let seqs = sadic::limit_sequences(&sigma, cfg.depth)?;
    let header = match primitivity.witnesses.first() {
        Some(&(m, end)) if primitivity.holds() => format!(
            "# directive {sigma}: primitive (positive block M_[{m},{end}), witnessed for m ≤ 8); {} limit sequence(s)",
            seqs.len()
        ),
        _ => format!("# directive {sigma}: primitivity not witnessed for m ≤ 8; {} limit sequence(s)", seqs.len()),
    };
    writeln!(err, "{header}")?;
    let chosen: Vec<&LimitSequence> = match cfg.letter {
        Some(_) => vec![limit_sequence_for(&seqs, cfg.letter)?],
        None => seqs.iter().collect(),
    };
    if n == 0 {
        return Ok(());
    }
    for s in chosen {
        writeln!(out, "{}", render(s.prefix(n)?.letters()))?;
    }
    Ok(())
}

/// `language`: the factors of length at most `n` of the images
/// `σ_[start,k)(a)`, with per-length counts.
fn language(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let sigma = directive(cfg)?;
    let max_len = cfg.n_or(6);
    let report = sadic::language(&sigma, cfg.start, max_len)?;
    let mut counts = vec![0usize; max_len + 1];
    for w in &report.words {
        counts[w.len()] += 1;
    }
    let words: Vec<String> = report
        .words
        .iter()
        .filter(|w| !w.is_empty())
        .map(ToString::to_string)
        .collect();
    let v = json!({
        "directive": sigma.to_string(),
        "start": cfg.start,
        "max_len": max_len,
        "stabilized": report.stabilized,
        "horizon": report.horizon,
        "counts": counts,
        "words": words,
    });
    writeln!(out, "{}", pretty(&v))?;
    Ok(())
}

/// `expand`: continued fraction expansion of the input vector. Integer and
/// `p/q` components are expanded exactly.
fn expand(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let alg = Algorithm::parse(&cfg.algorithm)?;
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("`expand` needs --input".into()))?;
    let parts: Vec<&str> = input.split(',').map(str::trim).collect();
    let depth = cfg.n_or(30);
    let exact: Option<Vec<BigRational>> = parts
        .iter()
        .map(|p| BigRational::from_str(p).ok())
        .collect();
    let v = match exact {
        Some(x) => cfalgo::expand(alg, &x, depth)?.to_json(true),
        None => {
            let x = parts
                .iter()
                .map(|p| {
                    p.parse::<f64>()
                        .map_err(|_| CliError::Usage(format!("invalid number `{p}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            cfalgo::expand(alg, &x, depth)?.to_json(true)
        }
    };
    writeln!(out, "{}", pretty(&v))?;
    Ok(())
}

/// Refuses clouds of sequences with a visible imbalance, since their
/// projections need not stay bounded.
fn cloud_guard(cfg: &RunConfig, sigma: &DirectiveSequence) -> Result<(), CliError> {
    if cfg.force {
        return Ok(());
    }
    let seqs = sadic::limit_sequences(sigma, cfg.depth)?;
    let prefix = seqs[0].prefix(cfg.horizon.min(cfg.n_or(20_000).max(1_000)))?;
    if let Some(w) = words::balance_check(prefix.letters(), cfg.balance_c).witness() {
        return Err(CliError::Guard(format!(
            "imbalance witness for C = {} ({}); the cloud may be unbounded (use --force to draw it anyway)",
            cfg.balance_c,
            pretty(w).replace('\n', " ")
        )));
    }
    Ok(())
}

fn build_cloud(
    cfg: &RunConfig,
    sigma: &DirectiveSequence,
    n: usize,
) -> Result<PointCloud, CliError> {
    let frame = ProjectionFrame::for_directive(sigma, frame_normal(cfg)?)?;
    Ok(rauzy::rauzy_cloud(sigma, &frame, n)?)
}

fn write_figure(
    cfg: &RunConfig,
    svg: impl FnOnce() -> String,
    ppm: impl FnOnce() -> Vec<u8>,
    large: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let use_ppm = match cfg.format {
        Format::Ppm => true,
        Format::Svg => false,
        Format::Auto => large,
    };
    let bytes = if use_ppm { ppm() } else { svg().into_bytes() };
    match &cfg.output {
        Some(path) => std::fs::write(path, bytes)?,
        None => out.write_all(&bytes)?,
    }
    Ok(())
}

/// `fractal`: labelled Rauzy fractal cloud as a figure and optional point file.
fn fractal(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let sigma = directive(cfg)?;
    cloud_guard(cfg, &sigma)?;
    let cloud = build_cloud(cfg, &sigma, cfg.n_or(20_000))?;
    let text = cfg.to_text();
    if let Some(p) = &cfg.points {
        std::fs::write(p, cloud.to_text())?;
    }
    write_figure(
        cfg,
        || fig::cloud_svg(&cloud, &text),
        || fig::cloud_ppm(&cloud, &text),
        cloud.len() > SVG_POINT_LIMIT,
        out,
    )?;
    writeln!(
        err,
        "# {} points, max sup-norm {:.4}, diameter {:.4}",
        cloud.len(),
        cloud.max_sup_norm(),
        cloud.diameter()
    )?;
    Ok(())
}

/// `dualplane`: the patch `E1*(σ_[0,n))(U)` as a figure and optional face list.
fn dualplane(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let sigma = directive(cfg)?;
    let d = sigma.alphabet_size();
    let n = cfg.n_or(6);
    let patch = dg::e1_star_directive(&sigma, &Patch::unit_seed(d), n, cfg.budget)?;
    if let Some(p) = &cfg.points {
        std::fs::write(p, patch.to_lines())?;
    }
    let radius = dg::minimal_combinatorial_radius(&patch, &Patch::unit_seed(d))?;
    let title = format!("E1* iterate of {sigma}, n = {n}");
    let svg = fig::patch_svg(&patch, &title, &cfg.to_text()).ok_or_else(|| {
        CliError::Usage("dualplane figures are drawn for three letters only".into())
    })?;
    match &cfg.output {
        Some(path) => std::fs::write(path, svg)?,
        None => out.write_all(svg.as_bytes())?,
    }
    writeln!(
        err,
        "# {} faces, minimal combinatorial radius {radius}",
        patch.len()
    )?;
    Ok(())
}

fn measure(cfg: &RunConfig, k: usize) -> Result<Measure, CliError> {
    let spec = cfg.measure.trim();
    let list = |s: &str| -> Result<Vec<f64>, CliError> {
        s.split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("invalid weight `{x}`")))
            })
            .collect()
    };
    if spec == "uniform" {
        Ok(Measure::uniform(k))
    } else if let Some(rest) = spec.strip_prefix("bernoulli:") {
        Ok(Measure::Bernoulli(list(rest)?))
    } else if let Some(rest) = spec.strip_prefix("markov:") {
        Ok(Measure::Markov(
            rest.split(';').map(list).collect::<Result<_, _>>()?,
        ))
    } else {
        Err(CliError::Usage(format!(
            "unknown measure `{spec}` (uniform, bernoulli:…, markov:…)"
        )))
    }
}

fn cocycle_spec(
    cfg: &RunConfig,
    sigma: &DirectiveSequence,
    n: usize,
) -> Result<CocycleSpec, CliError> {
    let subs = sigma.substitutions();
    Ok(CocycleSpec::new(
        sigma.family_name(),
        subs,
        measure(cfg, subs.len())?,
        cfg.seed,
        n,
    )?)
}

/// `lyapunov`: exponent estimates for the directive's substitution set.
fn lyapunov_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let sigma = directive(cfg)?;
    let spec = cocycle_spec(cfg, &sigma, cfg.n_or(lyapunov::DEFAULT_LENGTH))?;
    let est = lyapunov::estimate_exponents(&spec, cfg.replicas)?;
    writeln!(out, "{}", LyapunovReport::new(&spec, &est).to_json())?;
    Ok(())
}

/// `code`: compares a limit sequence with the coding of the toral
/// translation read off the Rauzy fractal.
fn code(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let sigma = directive(cfg)?;
    let seqs = sadic::limit_sequences(&sigma, cfg.depth)?;
    let seq = limit_sequence_for(&seqs, cfg.letter)?;
    let cloud = build_cloud(cfg, &sigma, cfg.cloud_points)?;
    let report =
        rauzy::natural_coding_crosscheck_torus(seq, &cloud, cfg.n_or(1000), cfg.eps_factor)?;
    let v = json!({
        "directive": sigma.to_string(),
        "first_letter": seq.first_letters()[0].get(),
        "cloud_points": cloud.len(),
        "agreement": report,
    });
    writeln!(out, "{}", pretty(&v))?;
    Ok(())
}

/// `exchange`: orbit of the origin under the domain exchange of the fractal.
fn exchange(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let sigma = directive(cfg)?;
    let cloud = build_cloud(cfg, &sigma, cfg.cloud_points)?;
    let start = vec![0.0; cloud.frame.dim() - 1];
    let ex = DomainExchange::new(cloud, cfg.eps_factor)?;
    let steps = cfg.n_or(1000);
    let orbit = rauzy::domain_exchange_orbit(&ex, &start, steps)?;
    let seqs = sadic::limit_sequences(&sigma, cfg.depth)?;
    let labels = render(&orbit.labels);
    let matches: Vec<u8> = seqs
        .iter()
        .filter(|s| {
            s.prefix(steps)
                .map(|p| render(p.letters()) == labels)
                .unwrap_or(false)
        })
        .map(|s| s.first_letters()[0].get())
        .collect();
    let v = json!({
        "directive": sigma.to_string(),
        "steps": steps,
        "epsilon": orbit.epsilon,
        "exact_resolutions": orbit.exact_resolutions,
        "labels": labels,
        "matches_limit_sequences_starting_with": matches,
    });
    writeln!(out, "{}", pretty(&v))?;
    Ok(())
}

/// Runs one diagnostic, turning an error into an `{"error": …}` entry.
fn guarded(errors: &mut usize, f: impl FnOnce() -> Result<Value, CliError>) -> Value {
    match f() {
        Ok(v) => v,
        Err(e) => {
            *errors += 1;
            json!({ "error": e.to_string() })
        }
    }
}

fn to_value(v: &impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("values serialise")
}

/// `check`: one JSON document aggregating every diagnostic. The process
/// exits with 0 iff no individual check raised an error.
fn check(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let sigma = directive(cfg)?;
    let d = sigma.alphabet_size();
    let mut errors = 0usize;
    let opts = HypothesisOptions {
        recurrence_horizon: cfg.horizon,
        balance_c: cfg.balance_c,
        balance_horizon: cfg.horizon,
        depth: cfg.depth,
        ..HypothesisOptions::default()
    };
    let hypotheses = sadic::hypothesis_report(&sigma, &opts);
    let primitive = matches!(&hypotheses, Ok(h) if h.primitivity.holds());
    let hyp = guarded(&mut errors, || Ok(to_value(&hypotheses?)));
    let unimodular = sigma.substitutions().iter().all(|s| s.is_unimodular());

    let strong = guarded(&mut errors, || {
        if !unimodular {
            return Ok(json!({ "skipped": "non-unimodular substitutions" }));
        }
        Ok(to_value(&dg::strong_coincidence_search(&sigma, cfg.steps)?))
    });
    let radius = guarded(&mut errors, || {
        if !unimodular {
            return Ok(json!({ "skipped": "non-unimodular substitutions" }));
        }
        Ok(to_value(&dg::radius_growth(&sigma, cfg.steps, cfg.budget)?))
    });
    let geometric = guarded(&mut errors, || {
        if !unimodular || !primitive {
            return Ok(
                json!({ "skipped": "needs unimodular substitutions and a primitive directive" }),
            );
        }
        let report = dg::geometric_coincidence_check(
            &sigma,
            2 * cfg.steps,
            cfg.balance_c as f64,
            cfg.budget,
        )?;
        Ok(json!({ "holds": report.holds(), "report": report }))
    });
    let tiling = guarded(&mut errors, || {
        if !primitive || d < 2 {
            return Ok(json!({ "skipped": "needs a primitive directive" }));
        }
        let cloud = build_cloud(cfg, &sigma, cfg.cloud_points)?;
        let report = rauzy::tiling_multiplicity_sample(&cloud, 4, 400, 1.0, cfg.seed, 1)?;
        Ok(json!({ "points": cloud.len(), "radius": 4, "epsilon_factor": 1.0, "report": report }))
    });
    let lyap = guarded(&mut errors, || {
        let spec = cocycle_spec(cfg, &sigma, 10_000)?;
        let est = lyapunov::estimate_exponents(&spec, 8)?;
        Ok(to_value(&LyapunovReport::new(&spec, &est)))
    });
    let v = json!({
        "directive": sigma.to_string(),
        "checks": {
            "hypotheses": hyp,
            "strong_coincidence": strong,
            "geometric_finiteness_radius": radius,
            "geometric_coincidence": geometric,
            "tiling_multiplicity": tiling,
            "lyapunov": lyap,
        },
        "errors": errors,
    });
    writeln!(out, "{}", pretty(&v))?;
    Ok(if errors == 0 { 0 } else { 1 })
}

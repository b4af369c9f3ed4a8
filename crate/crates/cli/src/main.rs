mod out;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use srip_core::dictionaries::{
    self, build_extended_oscillator_dict, build_heisenberg_dict, build_oscillator_dict, coherence_report,
    sampled_coherence, DictKind, Dictionary, TranslationSubsample,
};
use srip_core::ffield::Prime;
use srip_core::paths::{
    class_rows, dyck_decode, dyck_encode, fundamental_estimate_table, trajectory_trend, tree_classes, DyckWord,
    NPolicy, PathClass, MAX_CLASS_LENGTH,
};
use srip_core::spectra::{catalan, spectral_campaign, SpectralConfig};
use srip_core::{Error, VERSION};

use out::{write_bytes, write_csv, write_json, Envelope};

const EXIT_VALIDATION: u8 = 2;
const EXIT_CONTRACT: u8 = 3;

#[derive(Parser)]
#[command(name = "srip", version, about = "Incoherent dictionaries over prime fields and their Gram spectra")]
struct Cli {
    /// Worker threads (default: SRIP_THREADS, else available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a dictionary and save it.
    Build(BuildArgs),
    /// Exhaustive (or sampled) cross-basis coherence scan.
    Coherence(CoherenceArgs),
    /// Full spectral campaign: tails, moments, eigenvalue pool.
    Spectrum(SpectrumArgs),
    /// Tail frequencies of ||G - I||.
    Srip(SripArgs),
    /// Moment table of E.
    Moments(MomentArgs),
    /// Path-class enumeration, tree/Dyck bijection and estimate table.
    PathsVerify(PathsArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Kind {
    Heisenberg,
    Oscillator,
    ExtendedOscillator,
}

impl From<Kind> for DictKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Heisenberg => DictKind::Heisenberg,
            Kind::Oscillator => DictKind::Oscillator,
            Kind::ExtendedOscillator => DictKind::ExtendedOscillator,
        }
    }
}

/// Where a dictionary comes from: a saved file, or built in place.
#[derive(Args, Serialize)]
struct DictSource {
    /// Saved dictionary file.
    #[arg(long = "in", conflicts_with_all = ["kind", "p"])]
    input: Option<PathBuf>,
    #[arg(long, value_enum, requires = "p")]
    kind: Option<Kind>,
    #[arg(long, requires = "kind")]
    p: Option<u64>,
    /// Keep this many translations per torus (extended oscillator only).
    #[arg(long)]
    translations: Option<usize>,
    #[arg(long, default_value_t = 0)]
    translation_seed: u64,
    /// Allow the full extended oscillator dictionary above p = 5.
    #[arg(long)]
    full: bool,
}

#[derive(Args, Serialize)]
struct BuildArgs {
    #[command(flatten)]
    source: DictSource,
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON coherence report of the built dictionary.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CoherenceArgs {
    #[command(flatten)]
    source: DictSource,
    /// Sample this many cross pairs instead of scanning all of them.
    #[arg(long)]
    sample_pairs: Option<u64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Serialize, Clone)]
struct Campaign {
    #[arg(long, default_value_t = 0.3)]
    eps: f64,
    /// Support size; defaults to floor(p^(1-eps)).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct SpectrumArgs {
    #[command(flatten)]
    source: DictSource,
    #[command(flatten)]
    campaign: Campaign,
    #[arg(long, default_value_t = 6)]
    kmax: u32,
    /// Exponent e of an (n/p)^(1/(2+e)) threshold; repeatable.
    #[arg(long = "ratio-exponent", default_values_t = [1.0])]
    ratio_exponents: Vec<f64>,
    /// Extra fixed threshold; repeatable.
    #[arg(long = "threshold")]
    thresholds: Vec<f64>,
    #[arg(long, default_value_t = 48)]
    bins: usize,
    #[arg(long)]
    json: Option<PathBuf>,
    /// Pooled eigenvalues of E, one per line.
    #[arg(long)]
    eigenvalues_csv: Option<PathBuf>,
    #[arg(long)]
    moments_csv: Option<PathBuf>,
    #[arg(long)]
    srip_csv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SripArgs {
    #[command(flatten)]
    source: DictSource,
    #[command(flatten)]
    campaign: Campaign,
    #[arg(long = "ratio-exponent", default_values_t = [1.0])]
    ratio_exponents: Vec<f64>,
    #[arg(long = "threshold")]
    thresholds: Vec<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct MomentArgs {
    #[command(flatten)]
    source: DictSource,
    #[command(flatten)]
    campaign: Campaign,
    #[arg(long, default_value_t = 6)]
    kmax: u32,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct PathsArgs {
    /// Path length (number of edges).
    #[arg(long)]
    k: usize,
    #[arg(long)]
    classes_csv: Option<PathBuf>,
    /// Primes for the n(tau)·E w table (needs --estimate-csv or --json).
    #[arg(long, value_delimiter = ',')]
    primes: Vec<u64>,
    #[arg(long, value_enum, default_value_t = Kind::Heisenberg)]
    kind: Kind,
    #[arg(long, default_value_t = 0.3)]
    eps: f64,
    /// Fixed support size for the estimate table instead of floor(p^(1-eps)).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    estimate_csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

/// A failed run: message plus exit status.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn validation(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            msg: msg.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::validation(format!("{}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CoherenceViolation { .. }
            | Error::NotOrthonormal(_)
            | Error::IntegrityFailure(_)
            | Error::CountMismatch { .. }
            | Error::DegenerateSpectrum { .. }
            | Error::NotHermitian(_) => EXIT_CONTRACT,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads(cli.threads) {
        eprintln!("srip: {e}");
        return ExitCode::from(e.code);
    }
    let res = match &cli.command {
        Command::Build(a) => build(a),
        Command::Coherence(a) => coherence(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Srip(a) => srip(a),
        Command::Moments(a) => moments(a),
        Command::PathsVerify(a) => paths_verify(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("srip: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn init_threads(flag: Option<usize>) -> Outcome {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("SRIP_THREADS") {
            Ok(s) => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Failure::validation(format!("SRIP_THREADS={s:?} is not a count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Failure::validation("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::validation(e.to_string()))?;
    }
    Ok(())
}

impl DictSource {
    /// Checks everything that can be checked before building.
    fn validate(&self) -> Result<(), Failure> {
        match (&self.input, self.kind, self.p) {
            (Some(path), _, _) => {
                if self.translations.is_some() || self.full {
                    return Err(Failure::validation("--translations/--full only apply when building"));
                }
                if !path.is_file() {
                    return Err(Failure::validation(format!("{}: no such file", path.display())));
                }
            }
            (None, Some(kind), Some(p)) => {
                let p = Prime::new(p)?;
                let extended = matches!(kind, Kind::ExtendedOscillator);
                if !extended && (self.translations.is_some() || self.full) {
                    return Err(Failure::validation(
                        "--translations/--full apply to the extended oscillator only",
                    ));
                }
                if extended && self.translations.is_some() && self.full {
                    return Err(Failure::validation("--translations and --full are exclusive"));
                }
                if extended && self.translations.is_none() && !self.full && p.get() > 5 {
                    return Err(Failure::validation(format!(
                        "full extended oscillator at p = {} has {} atoms; pass --full or --translations",
                        p.get(),
                        p.get().pow(4) * (p.get() - 1) / 2
                    )));
                }
            }
            _ => return Err(Failure::validation("give either --in FILE or --kind K --p P")),
        }
        Ok(())
    }

    fn load(&self) -> Result<Dictionary, Failure> {
        if let Some(path) = &self.input {
            let bytes = std::fs::read(path).map_err(|e| Failure::io(path, e))?;
            return Ok(dictionaries::decode(&bytes)?);
        }
        let p = Prime::new(self.p.expect("validated"))?;
        let d = match self.kind.expect("validated") {
            Kind::Heisenberg => build_heisenberg_dict(p)?,
            Kind::Oscillator => build_oscillator_dict(p)?,
            Kind::ExtendedOscillator => {
                let sub = self.translations.map(|count| TranslationSubsample {
                    count,
                    seed: self.translation_seed,
                });
                build_extended_oscillator_dict(p, sub)?
            }
        };
        Ok(d)
    }
}

fn validate_outputs(paths: &[&Option<PathBuf>], inputs: &[&Option<PathBuf>]) -> Outcome {
    let outs: Vec<&PathBuf> = paths.iter().filter_map(|p| p.as_ref()).collect();
    for (i, o) in outs.iter().enumerate() {
        if let Some(dir) = o.parent().filter(|d| !d.as_os_str().is_empty()) {
            if !dir.is_dir() {
                return Err(Failure::validation(format!("{}: directory does not exist", dir.display())));
            }
        }
        if outs[i + 1..].contains(o) {
            return Err(Failure::validation(format!("{} given for two outputs", o.display())));
        }
        if inputs.iter().filter_map(|p| p.as_ref()).any(|inp| inp == *o) {
            return Err(Failure::validation(format!("refusing to overwrite input {}", o.display())));
        }
    }
    Ok(())
}

fn validate_campaign(c: &Campaign) -> Outcome {
    if !(c.eps > 0.0 && c.eps < 1.0) {
        return Err(Failure::validation(format!("--eps {} must lie in (0, 1)", c.eps)));
    }
    if c.trials == 0 {
        return Err(Failure::validation("--trials must be at least 1"));
    }
    if c.n == Some(0) {
        return Err(Failure::validation("--n must be at least 1"));
    }
    Ok(())
}

fn envelope_json<C: Serialize, R: Serialize>(
    path: &Option<PathBuf>,
    command: &str,
    seed: Option<u64>,
    config: &C,
    result: &R,
    start: Instant,
) -> Outcome {
    if let Some(path) = path {
        let env = Envelope {
            schema: 1,
            command,
            version: VERSION,
            seed,
            config,
            result,
            duration_secs: start.elapsed().as_secs_f64(),
        };
        write_json(path, &env)?;
    }
    Ok(())
}

fn build(a: &BuildArgs) -> Outcome {
    let start = Instant::now();
    a.source.validate()?;
    validate_outputs(&[&Some(a.out.clone()), &a.report], &[&a.source.input])?;
    let d = a.source.load()?;
    let report = coherence_report(&d);
    if !report.pass {
        return Err(Error::CoherenceViolation {
            observed: report.cross_max,
            mu: report.mu,
        }
        .into());
    }
    write_bytes(&a.out, &dictionaries::encode(&d))?;
    envelope_json(&a.report, "build", None, a, &report, start)?;
    println!(
        "built {} p={} bases={} atoms={} -> {}",
        d.kind(),
        d.p().get(),
        d.basis_count(),
        d.atom_count(),
        a.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
#[serde(untagged)]
enum CoherenceResult {
    Exhaustive(srip_core::dictionaries::CoherenceReport),
    Sampled(srip_core::dictionaries::SampledCoherence),
}

fn coherence(a: &CoherenceArgs) -> Outcome {
    let start = Instant::now();
    a.source.validate()?;
    validate_outputs(&[&a.json], &[&a.source.input])?;
    if a.sample_pairs == Some(0) {
        return Err(Failure::validation("--sample-pairs must be at least 1"));
    }
    let d = a.source.load()?;
    let (max, pass, result) = match a.sample_pairs {
        None => {
            let r = coherence_report(&d);
            (r.cross_max, r.pass, CoherenceResult::Exhaustive(r))
        }
        Some(pairs) => {
            let s = sampled_coherence(&d, pairs, a.seed)?;
            let pass = s.max <= d.mu() + srip_core::dictionaries::COHERENCE_TOL;
            (s.max, pass, CoherenceResult::Sampled(s))
        }
    };
    let seed = a.sample_pairs.map(|_| a.seed);
    envelope_json(&a.json, "coherence", seed, a, &result, start)?;
    println!("kind: {}", d.kind());
    println!("p: {}", d.p().get());
    println!("mu: {}", d.mu());
    println!("max: {max:.6}");
    println!("pass: {pass}");
    if !pass {
        return Err(Error::CoherenceViolation { observed: max, mu: d.mu() }.into());
    }
    Ok(())
}

fn spectral_config(c: &Campaign, kmax: u32, ratio: &[f64], fixed: &[f64], bins: usize) -> SpectralConfig {
    SpectralConfig {
        epsilon: c.eps,
        n: c.n,
        kmax,
        trials: c.trials,
        seed: c.seed,
        ratio_exponents: ratio.to_vec(),
        fixed_thresholds: fixed.to_vec(),
        histogram_bins: bins,
    }
}

fn tail_csv(path: &Option<PathBuf>, rows: &[srip_core::spectra::TailRow]) -> Outcome {
    if let Some(path) = path {
        write_csv(
            path,
            &["threshold_kind", "threshold", "frequency"],
            rows.iter()
                .map(|r| vec![r.threshold_kind.name(), r.threshold.to_string(), r.frequency.to_string()]),
        )?;
    }
    Ok(())
}

fn moment_csv(path: &Option<PathBuf>, rows: &[srip_core::spectra::MomentRow]) -> Outcome {
    if let Some(path) = path {
        write_csv(
            path,
            &["k", "mean", "variance", "semicircle_moment"],
            rows.iter().map(|r| {
                vec![
                    r.k.to_string(),
                    r.mean.to_string(),
                    r.variance.to_string(),
                    r.semicircle.to_string(),
                ]
            }),
        )?;
    }
    Ok(())
}

fn spectrum(a: &SpectrumArgs) -> Outcome {
    let start = Instant::now();
    a.source.validate()?;
    validate_campaign(&a.campaign)?;
    if a.kmax == 0 || a.bins == 0 {
        return Err(Failure::validation("--kmax and --bins must be at least 1"));
    }
    validate_outputs(
        &[&a.json, &a.eigenvalues_csv, &a.moments_csv, &a.srip_csv],
        &[&a.source.input],
    )?;
    let d = a.source.load()?;
    let cfg = spectral_config(&a.campaign, a.kmax, &a.ratio_exponents, &a.thresholds, a.bins);
    let (report, outcomes) = spectral_campaign(&d, &cfg)?;
    if let Some(path) = &a.eigenvalues_csv {
        write_csv(
            path,
            &["lambda"],
            outcomes.iter().flat_map(|o| o.eigenvalues_e.iter().map(|x| vec![x.to_string()])),
        )?;
    }
    moment_csv(&a.moments_csv, &report.moments)?;
    tail_csv(&a.srip_csv, &report.srip)?;
    envelope_json(&a.json, "spectrum", Some(a.campaign.seed), a, &report, start)?;
    println!("p: {} n: {} trials: {}", report.p, report.n, report.trials);
    for r in &report.moments {
        println!("m{}: {:.6} (semicircle {})", r.k, r.mean, r.semicircle);
    }
    println!("ks_pooled: {:.6}", report.ks_pooled);
    Ok(())
}

fn srip(a: &SripArgs) -> Outcome {
    let start = Instant::now();
    a.source.validate()?;
    validate_campaign(&a.campaign)?;
    validate_outputs(&[&a.json, &a.csv], &[&a.source.input])?;
    let d = a.source.load()?;
    let cfg = spectral_config(&a.campaign, 1, &a.ratio_exponents, &a.thresholds, 1);
    let (report, _) = spectral_campaign(&d, &cfg)?;
    #[derive(Serialize)]
    struct SripOut<'a> {
        p: u64,
        n: usize,
        rows: &'a [srip_core::spectra::TailRow],
    }
    let result = SripOut {
        p: report.p,
        n: report.n,
        rows: &report.srip,
    };
    tail_csv(&a.csv, &report.srip)?;
    envelope_json(&a.json, "srip", Some(a.campaign.seed), a, &result, start)?;
    println!("p: {} n: {} trials: {}", report.p, report.n, report.trials);
    for r in &report.srip {
        println!("{} {:.6}: {}", r.threshold_kind.name(), r.threshold, r.frequency);
    }
    Ok(())
}

fn moments(a: &MomentArgs) -> Outcome {
    let start = Instant::now();
    a.source.validate()?;
    validate_campaign(&a.campaign)?;
    if a.kmax == 0 {
        return Err(Failure::validation("--kmax must be at least 1"));
    }
    validate_outputs(&[&a.json, &a.csv], &[&a.source.input])?;
    let d = a.source.load()?;
    let cfg = spectral_config(&a.campaign, a.kmax, &[], &[], 1);
    let (report, _) = spectral_campaign(&d, &cfg)?;
    #[derive(Serialize)]
    struct MomentOut<'a> {
        p: u64,
        n: usize,
        moments: &'a [srip_core::spectra::MomentRow],
    }
    let result = MomentOut {
        p: report.p,
        n: report.n,
        moments: &report.moments,
    };
    moment_csv(&a.csv, &report.moments)?;
    envelope_json(&a.json, "moments", Some(a.campaign.seed), a, &result, start)?;
    println!("p: {} n: {} trials: {}", report.p, report.n, report.trials);
    for r in &report.moments {
        println!("m{}: {:.6} +- {:.6} (semicircle {})", r.k, r.mean, r.std_error, r.semicircle);
    }
    Ok(())
}

#[derive(Serialize)]
struct PathsResult {
    k: usize,
    class_count: usize,
    tree_count: usize,
    catalan: Option<u64>,
    dyck_bijection: bool,
    estimates: Vec<srip_core::paths::EstimateRow>,
    trends: Vec<(String, bool)>,
}

fn paths_verify(a: &PathsArgs) -> Outcome {
    let start = Instant::now();
    if a.k == 0 || a.k > MAX_CLASS_LENGTH {
        return Err(Failure::validation(format!("--k must lie in 1..={MAX_CLASS_LENGTH}")));
    }
    let primes = a.primes.iter().map(|&p| Prime::new(p)).collect::<Result<Vec<_>, _>>()?;
    if !(a.eps > 0.0 && a.eps < 1.0) {
        return Err(Failure::validation(format!("--eps {} must lie in (0, 1)", a.eps)));
    }
    if a.estimate_csv.is_some() && primes.is_empty() {
        return Err(Failure::validation("--estimate-csv needs --primes"));
    }
    validate_outputs(&[&a.classes_csv, &a.estimate_csv, &a.json], &[])?;

    let rows = class_rows(a.k)?;
    let trees = tree_classes(a.k)?;
    let catalan_k = if a.k % 2 == 0 { Some(catalan((a.k / 2) as u32)?) } else { None };
    // trees -> words -> trees must be the identity, and hit every word
    let mut bijection = trees.iter().all(|t| dyck_encode(t).map(|w| dyck_decode(&w) == *t).unwrap_or(false));
    if a.k % 2 == 0 {
        let words = DyckWord::all(a.k / 2);
        bijection &= words.len() == trees.len();
        bijection &= words.iter().all(|w| trees.contains(&dyck_decode(w)));
    }

    let mut estimates = Vec::new();
    let mut trends = Vec::new();
    if !primes.is_empty() {
        let classes: Vec<PathClass> = rows.iter().map(|r| r.class.parse()).collect::<Result<_, _>>()?;
        let policy = match a.n {
            Some(n) => NPolicy::Fixed(n),
            None => NPolicy::Epsilon(a.eps),
        };
        let kind = a.kind;
        estimates = fundamental_estimate_table(&classes, &primes, policy, |p| match kind {
            Kind::Heisenberg => build_heisenberg_dict(p),
            Kind::Oscillator => build_oscillator_dict(p),
            Kind::ExtendedOscillator => build_extended_oscillator_dict(p, None),
        })?;
        for c in &classes {
            let name = c.to_string();
            let traj: Vec<_> = estimates.iter().filter(|r| r.class == name).cloned().collect();
            trends.push((name, trajectory_trend(&traj)));
        }
    }

    if let Some(path) = &a.classes_csv {
        write_csv(
            path,
            &["class", "k", "vertex_count", "is_tree", "dyck"],
            rows.iter().map(|r| {
                vec![
                    r.class.clone(),
                    r.k.to_string(),
                    r.vertex_count.to_string(),
                    r.is_tree.to_string(),
                    r.dyck.clone(),
                ]
            }),
        )?;
    }
    if let Some(path) = &a.estimate_csv {
        write_csv(
            path,
            &["class", "p", "n", "n_tau_Ew_real", "n_tau_Ew_imag"],
            estimates.iter().map(|r| {
                vec![
                    r.class.clone(),
                    r.p.to_string(),
                    r.n.to_string(),
                    r.n_tau_ew_re.to_string(),
                    r.n_tau_ew_im.to_string(),
                ]
            }),
        )?;
    }
    let result = PathsResult {
        k: a.k,
        class_count: rows.len(),
        tree_count: trees.len(),
        catalan: catalan_k,
        dyck_bijection: bijection,
        estimates,
        trends,
    };
    envelope_json(&a.json, "paths-verify", None, a, &result, start)?;

    println!("k: {}", a.k);
    println!("classes: {}", result.class_count);
    println!("trees: {}", result.tree_count);
    if let Some(c) = catalan_k {
        println!("catalan: {c}");
    }
    println!("dyck bijection: {bijection}");
    for (c, ok) in &result.trends {
        println!("trend {c}: {ok}");
    }
    let counts_ok = catalan_k.map_or(result.tree_count == 0, |c| c as usize == result.tree_count);
    if !bijection || !counts_ok {
        return Err(Failure {
            code: EXIT_CONTRACT,
            msg: "tree count or Dyck bijection check failed".into(),
        });
    }
    Ok(())
}

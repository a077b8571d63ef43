use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use geodist::corpus::{
    build_vocabulary, collect_documents, format_document, read_corpus, read_tagged_corpus, CorpusFormat, Document,
    ReadMode, RegionId, Tagset, TokenizerConfig, Vocabulary, DEFAULT_MIN_COUNT, MAIN_REGION,
};
use geodist::embed::{nearest_neighbors, region_embedding, train, EmbeddingModel, LrSchedule, TrainingConfig};
use geodist::freqdist::{frequency_ranking, write_frequency_tsv, Smoothing};
use geodist::plots::{self, LabelledVector, PlotKind};
use geodist::scoring::{score_table, write_score_tsv};
use geodist::semdist::{distance_series, write_series_csv, write_trajectory_csv};
use geodist::significance::{
    analyze, analyze_with_model, read_null_tsv, read_report_tsv, write_null_histogram, write_null_tsv,
    write_report_tsv, Analysis, BetaRule, SignificanceConfig, Verdict,
};
use geodist::syndist::{syntactic_ranking, write_pos_bars, write_syntactic_tsv, PosCounts};
use geodist::synthgen::{generate, truth, write_truth_tsv, SyntheticSpec};
use geodist::{Error, Result};

use crate::settings::{FilePath, List, Pair, Settings};
use crate::{Command, CorpusArgs, TestArgs, TrainArgs};

pub fn run(command: Command, config: Option<&Path>) -> Result<()> {
    match command {
        Command::Vocab { corpus, out } => vocab(Settings::new("vocab", config)?, corpus, out),
        Command::Freq {
            corpus,
            pair,
            smoothing,
            top_k,
            out,
        } => freq(Settings::new("freq", config)?, corpus, pair, smoothing, top_k, out),
        Command::Syntax {
            corpus,
            pair,
            min_support,
            top_k,
            out,
        } => syntax(Settings::new("syntax", config)?, corpus, pair, min_support, top_k, out),
        Command::Train {
            corpus,
            regions,
            training,
            out,
        } => train_cmd(Settings::new("train", config)?, corpus, regions, training, out),
        Command::Score {
            model,
            pair,
            score_min_count,
            out,
        } => score(Settings::new("score", config)?, model, pair, score_min_count, out),
        Command::Significance {
            corpus,
            model,
            pair,
            training,
            test,
            out,
        } => significance(Settings::new("significance", config)?, corpus, model, pair, training, test, out),
        Command::Semdist {
            corpus,
            pair,
            slices,
            training,
            test,
            out,
        } => semdist(Settings::new("semdist", config)?, corpus, pair, slices, training, test, out),
        Command::Neighbors {
            model,
            word,
            region,
            k,
            out,
        } => neighbors(Settings::new("neighbors", config)?, model, word, region, k, out),
        Command::Synth {
            vocab_size,
            exponent,
            block_size,
            planted,
            effects,
            ambient,
            pairs,
            regions,
            seed,
            out,
        } => {
            let mut s = Settings::new("synth", config)?;
            let spec = SynthArgs {
                vocab_size: s.get("vocab-size", vocab_size, 100)?,
                exponent: s.get("exponent", exponent, 1.01)?,
                block_size: s.get("block-size", block_size, 10)?,
                planted: s.get("planted", planted, 10)?,
                effects: s.get("effects", parse("effects", effects)?, List(vec!["0.9".into()]))?,
                ambient: s.get("ambient", ambient, 0.0)?,
                pairs: s.get("pairs", pairs, 100_000)?,
                regions: s.get("regions", parse("regions", regions)?, List(vec!["A".into(), "B".into()]))?,
                seed: s.get("seed", seed, 0)?,
            };
            let out = s.require::<FilePath>("out", parse("out", out)?)?;
            synth(s, spec, &out.0)
        }
        Command::ExportPlots {
            artifacts,
            kind,
            pair,
            words,
            k,
            slice,
            smoothing,
            out,
        } => {
            let mut s = Settings::new("export-plots", config)?;
            let args = ExportArgs {
                artifacts: s.require::<FilePath>("artifacts", parse("artifacts", artifacts)?)?.0,
                kind: s.require("kind", parse("kind", kind)?)?,
                pair: s.optional("pair", parse("pair", pair)?)?,
                words: s.optional("words", parse("words", words)?)?,
                k: s.get("k", k, 0)?,
                slice: s.optional("slice", slice)?,
                smoothing: s.get("smoothing", parse("smoothing", smoothing)?, SmoothingArg::default())?,
            };
            let out = s.require::<FilePath>("out", parse("out", out)?)?;
            export_plots(s, args, &out.0)
        }
    }
}

/// Parses a string flag with the same error style as config values.
fn parse<T>(key: &str, flag: Option<String>) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: Display,
{
    flag.map(|raw| {
        raw.parse::<T>()
            .map_err(|e| Error::InvalidArgument(format!("--{key}: {e}")))
    })
    .transpose()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn finish_file(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

/// `<path>.conf`, the echo location for commands with a single output file.
fn echo_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".conf");
    PathBuf::from(s)
}

fn open_artifact(path: &Path) -> Result<BufReader<File>> {
    if !path.is_file() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    Ok(BufReader::new(File::open(path)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Plain(CorpusFormat),
    Tagged,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tagged" => Ok(Format::Tagged),
            other => Ok(Format::Plain(other.parse()?)),
        }
    }
}

impl Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Plain(CorpusFormat::Tweets) => "tweets",
            Format::Plain(CorpusFormat::Ngrams) => "ngrams",
            Format::Tagged => "tagged",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct SmoothingArg(Smoothing);

impl FromStr for SmoothingArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "add-one" {
            return Ok(SmoothingArg(Smoothing::AddOneFloor));
        }
        match s.parse::<f64>() {
            Ok(eps) if eps > 0.0 && eps.is_finite() => Ok(SmoothingArg(Smoothing::Fixed(eps))),
            _ => Err(Error::InvalidArgument(format!(
                "smoothing must be add-one or a positive floor, got {s:?}"
            ))),
        }
    }
}

impl Display for SmoothingArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Smoothing::AddOneFloor => f.write_str("add-one"),
            Smoothing::Fixed(eps) => write!(f, "{eps}"),
        }
    }
}

struct Corpus {
    docs: Vec<Document>,
    tagset: Option<Tagset>,
}

fn read_docs(s: &mut Settings, c: CorpusArgs, default_format: Format) -> Result<Corpus> {
    let input = s.require::<FilePath>("input", parse("input", c.input)?)?;
    let format = s.get("format", parse("format", c.format)?, default_format)?;
    let strict = s.get("strict", c.strict, false)?;
    let defaults = TokenizerConfig::default();
    let tokenizer = TokenizerConfig {
        lowercase: s.get("lowercase", c.lowercase, defaults.lowercase)?,
        strip_punctuation: s.get("strip-punctuation", c.strip_punctuation, defaults.strip_punctuation)?,
        ..defaults
    };
    let mode = if strict { ReadMode::Strict } else { ReadMode::Lenient };
    let (docs, summary, tagset) = match format {
        Format::Plain(f) => {
            let (d, sum) = collect_documents(read_corpus(&input.0, f, &tokenizer)?, mode)?;
            (d, sum, None)
        }
        Format::Tagged => {
            let name: String = s.get("tagset", c.tagset, "penn".to_string())?;
            let tagset = Tagset::by_name(&name)?;
            let (d, sum) = collect_documents(read_tagged_corpus(&input.0, &tagset, &tokenizer)?, mode)?;
            (d, sum, Some(tagset))
        }
    };
    if summary.skipped > 0 {
        log::warn!("skipped {} malformed line(s)", summary.skipped);
        for e in &summary.first_errors {
            log::warn!("  {e}");
        }
    }
    log::info!("read {} documents from {}", summary.documents, input);
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(Corpus { docs, tagset })
}

fn training_config(s: &mut Settings, t: TrainArgs) -> Result<TrainingConfig> {
    let d = TrainingConfig::default();
    let config = TrainingConfig {
        dim: s.get("dim", t.dim, d.dim)?,
        window: s.get("window", t.window, d.window)?,
        lr: s.get("lr", t.lr, d.lr)?,
        lr_schedule: s.get::<LrSchedule>("lr-schedule", parse("lr-schedule", t.lr_schedule)?, d.lr_schedule)?,
        epochs: s.get("epochs", t.epochs, d.epochs)?,
        seed: s.get("seed", t.seed, d.seed)?,
        threads: s.get("threads", t.threads, d.threads)?,
    };
    config.validate()?;
    Ok(config)
}

fn significance_config(s: &mut Settings, t: TestArgs, training: TrainingConfig, vocab_min: u64) -> Result<SignificanceConfig> {
    let d = SignificanceConfig::default();
    let config = SignificanceConfig {
        bootstrap: s.get("bootstrap", t.bootstrap, d.bootstrap)?,
        alpha: s.get("alpha", t.alpha, d.alpha)?,
        beta: s.get::<BetaRule>("beta", parse("beta", t.beta)?, d.beta)?,
        min_count: s.get("score-min-count", t.score_min_count, d.min_count)?,
        vocab_min_count: vocab_min,
        training,
    };
    if config.bootstrap == 0 {
        return Err(Error::InvalidArgument("bootstrap must be at least 1".into()));
    }
    if !(0.5..1.0).contains(&config.alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0.5, 1), got {}", config.alpha)));
    }
    Ok(config)
}

fn vocab(mut s: Settings, c: CorpusArgs, out: Option<String>) -> Result<()> {
    let min_count = s.get("min-count", c.min_count, DEFAULT_MIN_COUNT)?;
    let corpus = read_docs(&mut s, c, Format::Plain(CorpusFormat::Tweets))?;
    let out = s.require::<FilePath>("out", parse("out", out)?)?;
    s.finish()?;
    let vocab = build_vocabulary(&corpus.docs, min_count)?;
    log::info!("{} words over {} regions", vocab.len(), vocab.regions().len());
    let mut w = create(&out.0)?;
    vocab.write_tsv(&mut w)?;
    finish_file(w)?;
    s.write_echo(&echo_path(&out.0))
}

fn freq(
    mut s: Settings,
    c: CorpusArgs,
    pair: Option<String>,
    smoothing: Option<String>,
    top_k: Option<usize>,
    out: Option<String>,
) -> Result<()> {
    let min_count = s.get("min-count", c.min_count, DEFAULT_MIN_COUNT)?;
    let corpus = read_docs(&mut s, c, Format::Plain(CorpusFormat::Tweets))?;
    let pair = s.require::<Pair>("pair", parse("pair", pair)?)?;
    let smoothing = s.get("smoothing", parse("smoothing", smoothing)?, SmoothingArg::default())?;
    let top_k = s.get("top-k", top_k, 0)?;
    let out = s.require::<FilePath>("out", parse("out", out)?)?;
    s.finish()?;
    let vocab = build_vocabulary(&corpus.docs, min_count)?;
    let k = if top_k == 0 { usize::MAX } else { top_k };
    let scores = frequency_ranking(&vocab, &pair.0, &pair.1, smoothing.0, k)?;
    let mut w = create(&out.0)?;
    write_frequency_tsv(&mut w, &scores)?;
    finish_file(w)?;
    s.write_echo(&echo_path(&out.0))
}

fn syntax(
    mut s: Settings,
    c: CorpusArgs,
    pair: Option<String>,
    min_support: Option<u64>,
    top_k: Option<usize>,
    out: Option<String>,
) -> Result<()> {
    let corpus = read_docs(&mut s, c, Format::Tagged)?;
    let tagset = corpus
        .tagset
        .ok_or_else(|| Error::InvalidArgument("syntax needs a tagged corpus (format = tagged)".into()))?;
    let pair = s.require::<Pair>("pair", parse("pair", pair)?)?;
    let min_support = s.get("min-support", min_support, 1)?;
    let top_k = s.get("top-k", top_k, 0)?;
    let out = s.require::<FilePath>("out", parse("out", out)?)?;
    s.finish()?;
    let counts = PosCounts::from_documents(&corpus.docs, &tagset)?;
    let mut ranking = syntactic_ranking(&counts, &pair.0, &pair.1, min_support)?;
    if top_k > 0 {
        ranking.truncate(top_k);
    }
    fs::create_dir_all(&out.0)?;
    let mut w = create(&out.0.join("syntax.tsv"))?;
    write_syntactic_tsv(&mut w, &ranking)?;
    finish_file(w)?;
    let dists: Vec<_> = ranking
        .iter()
        .flat_map(|r| [counts.distribution(&r.word, &pair.0), counts.distribution(&r.word, &pair.1)])
        .collect();
    let mut w = create(&out.0.join("pos.tsv"))?;
    write_pos_bars(&mut w, &tagset, &dists)?;
    finish_file(w)?;
    s.write_echo(&out.0.join("syntax.conf"))
}

fn train_cmd(
    mut s: Settings,
    c: CorpusArgs,
    regions: Option<String>,
    t: TrainArgs,
    out: Option<String>,
) -> Result<()> {
    let min_count = s.get("min-count", c.min_count, DEFAULT_MIN_COUNT)?;
    let corpus = read_docs(&mut s, c, Format::Plain(CorpusFormat::Tweets))?;
    let regions = s.optional::<List>("regions", parse("regions", regions)?)?;
    let config = training_config(&mut s, t)?;
    let out = s.require::<FilePath>("out", parse("out", out)?)?;
    s.finish()?;
    let docs = match regions {
        Some(List(keep)) => {
            for r in &keep {
                RegionId::new(r.as_str())?;
                if !corpus.docs.iter().any(|d| d.region.as_str() == r) {
                    return Err(Error::UnknownRegion(r.clone()));
                }
            }
            corpus
                .docs
                .into_iter()
                .filter(|d| keep.iter().any(|r| d.region.as_str() == r))
                .collect()
        }
        None => corpus.docs,
    };
    let vocab = Arc::new(build_vocabulary(&docs, min_count)?);
    log::info!(
        "training d={} window={} epochs={} on {} words, {} regions",
        config.dim,
        config.window,
        config.epochs,
        vocab.len(),
        vocab.regions().len()
    );
    let model = train(&docs, vocab, config)?;
    if let Some(parent) = out.0.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    model.save(&out.0)?;
    s.write_echo(&echo_path(&out.0))
}

fn score(
    mut s: Settings,
    model: Option<String>,
    pair: Option<String>,
    min_count: Option<u64>,
    out: Option<String>,
) -> Result<()> {
    let model_path = s.require::<FilePath>("model", parse("model", model)?)?;
    let pair = s.require::<Pair>("pair", parse("pair", pair)?)?;
    let min_count = s.get("score-min-count", min_count, 1)?;
    let out = s.require::<FilePath>("out", parse("out", out)?)?;
    s.finish()?;
    let model = load_model(&model_path.0)?;
    let table = score_table(&model, &pair.0, &pair.1, min_count)?;
    log::info!(
        "{} words, {} scorable; mean {:.6}, std {:.6}",
        table.len(),
        table.scorable().count(),
        table.mean,
        table.std
    );
    let mut w = create(&out.0)?;
    write_score_tsv(&mut w, &table)?;
    finish_file(w)?;
    s.write_echo(&echo_path(&out.0))
}

fn load_model(path: &Path) -> Result<EmbeddingModel> {
    if !path.is_file() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    EmbeddingModel::load(path)
}

/// `dir/stem.null.tsv` for `dir/stem.tsv`.
fn null_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    report.with_file_name(format!("{stem}.null.tsv"))
}

fn write_analysis(analysis: &Analysis, report_path: &Path) -> Result<()> {
    let mut w = create(report_path)?;
    write_report_tsv(&mut w, &analysis.report)?;
    finish_file(w)?;
    let mut w = create(&null_path(report_path))?;
    write_null_tsv(&mut w, &analysis.null)?;
    finish_file(w)
}

fn log_report(analysis: &Analysis) {
    let r = &analysis.report;
    let flagged = r.significant().count();
    log::info!(
        "beta {} = {:.4}; {} of {} words significant",
        r.beta_rule,
        r.beta,
        flagged,
        r.rows.len()
    );
}

#[allow(clippy::too_many_arguments)]
fn significance(
    mut s: Settings,
    c: CorpusArgs,
    model: Option<String>,
    pair: Option<String>,
    t: TrainArgs,
    test: TestArgs,
    out: Option<String>,
) -> Result<()> {
    let min_count = s.get("min-count", c.min_count, DEFAULT_MIN_COUNT)?;
    let corpus = read_docs(&mut s, c, Format::Plain(CorpusFormat::Tweets))?;
    let model_path = s.optional::<FilePath>("model", parse("model", model)?)?;
    let pair = s.require::<Pair>("pair", parse("pair", pair)?)?;
    let training = if model_path.is_some() {
        TrainingConfig::default()
    } else {
        training_config(&mut s, t)?
    };
    let config = significance_config(&mut s, test, training, min_count)?;
    let out = s.require::<FilePath>("out", parse("out", out)?)?;
    s.finish()?;
    let analysis = match model_path {
        Some(p) => {
            let model = load_model(&p.0)?;
            s.note("seed (from model)", model.config().seed);
            analyze_with_model(model, &corpus.docs, (&pair.0, &pair.1), &config)?
        }
        None => analyze(&corpus.docs, (&pair.0, &pair.1), &config)?,
    };
    s.note(
        "null seeds",
        analysis.null.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
    );
    log_report(&analysis);
    write_analysis(&analysis, &out.0)?;
    s.write_echo(&echo_path(&out.0))
}

/// File-name-safe form of a slice label.
fn slice_file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn semdist(
    mut s: Settings,
    c: CorpusArgs,
    pair: Option<String>,
    slices: Option<String>,
    t: TrainArgs,
    test: TestArgs,
    out: Option<String>,
) -> Result<()> {
    let min_count = s.get("min-count", c.min_count, DEFAULT_MIN_COUNT)?;
    let corpus = read_docs(&mut s, c, Format::Plain(CorpusFormat::Ngrams))?;
    let pair = s.require::<Pair>("pair", parse("pair", pair)?)?;
    let order = s.optional::<List>("slices", parse("slices", slices)?)?;
    let training = training_config(&mut s, t)?;
    let config = significance_config(&mut s, test, training, min_count)?;
    let out = s.require::<FilePath>("out", parse("out", out)?)?;
    s.finish()?;
    let series = distance_series(
        &corpus.docs,
        (&pair.0, &pair.1),
        &config,
        order.as_ref().map(|l| l.0.as_slice()),
    )?;
    fs::create_dir_all(&out.0)?;
    for sl in &series.slices {
        log::info!("slice {}:", sl.slice);
        log_report(&sl.analysis);
        let name = format!("report_{}.tsv", slice_file_label(&sl.slice));
        write_analysis(&sl.analysis, &out.0.join(name))?;
    }
    log::info!("{} stable changed word(s)", series.stable.len());
    let mut w = create(&out.0.join("series.csv"))?;
    write_series_csv(&mut w, &series)?;
    finish_file(w)?;
    let mut w = create(&out.0.join("trajectory.csv"))?;
    write_trajectory_csv(&mut w, &series)?;
    finish_file(w)?;
    s.write_echo(&out.0.join("semdist.conf"))
}

fn neighbors(
    mut s: Settings,
    model: Option<String>,
    word: Option<String>,
    region: Option<String>,
    k: Option<usize>,
    out: Option<String>,
) -> Result<()> {
    let model_path = s.require::<FilePath>("model", parse("model", model)?)?;
    let word: String = s.require("word", word)?;
    let region: Option<String> = s.optional("region", region)?;
    let k = s.get("k", k, 10)?;
    let out = s.require::<FilePath>("out", parse("out", out)?)?;
    s.finish()?;
    let model = load_model(&model_path.0)?;
    let regions: Vec<String> = match region {
        Some(r) => vec![r],
        None => std::iter::once(MAIN_REGION.to_string())
            .chain(model.regions().iter().map(|r| r.to_string()))
            .collect(),
    };
    let mut w = create(&out.0)?;
    writeln!(
        w,
        "# geodist {}: word\tregion\trank\tneighbor\tsimilarity",
        geodist::VERSION
    )?;
    for r in &regions {
        for (rank, (n, sim)) in nearest_neighbors(&model, &word, r, k)?.into_iter().enumerate() {
            writeln!(w, "{word}\t{r}\t{}\t{n}\t{sim}", rank + 1)?;
        }
    }
    finish_file(w)?;
    s.write_echo(&echo_path(&out.0))
}

struct SynthArgs {
    vocab_size: usize,
    exponent: f64,
    block_size: usize,
    planted: usize,
    effects: List,
    ambient: f64,
    pairs: usize,
    regions: List,
    seed: u64,
}

/// Seed offsets of the synthetic generator.
const PLANTING_OFFSET: u64 = 1;
const AMBIENT_OFFSET: u64 = 2;
const SLICE_OFFSET: u64 = 10;

fn synth(mut s: Settings, a: SynthArgs, out: &Path) -> Result<()> {
    s.finish()?;
    let effects = a
        .effects
        .0
        .iter()
        .map(|e| {
            e.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("effect {e:?} is not a number")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let regions = a
        .regions
        .0
        .iter()
        .map(|r| RegionId::new(r.as_str()))
        .collect::<Result<Vec<_>>>()?;
    let base = SyntheticSpec {
        vocab_size: a.vocab_size,
        exponent: a.exponent,
        block_size: a.block_size,
        pairs_per_region: a.pairs,
        regions,
        seed: a.seed,
        ..SyntheticSpec::default()
    };
    let planting_seed = a.seed + PLANTING_OFFSET;
    let ambient_seed = a.seed + AMBIENT_OFFSET;
    s.note("planting seed", planting_seed);
    let mut base = base.plant(a.planted, effects[0], planting_seed)?;
    if a.ambient > 0.0 {
        s.note("ambient seed", ambient_seed);
        base = base.with_ambient(a.ambient, ambient_seed)?;
    }
    fs::create_dir_all(out)?;
    let mut w = create(&out.join("corpus.tsv"))?;
    if effects.len() == 1 {
        base.validate()?;
        for d in generate(&base)? {
            writeln!(w, "{}", format_document(&d, CorpusFormat::Tweets))?;
        }
        let mut tw = create(&out.join("truth.tsv"))?;
        write_truth_tsv(&mut tw, &truth(&base))?;
        finish_file(tw)?;
    } else {
        for (t, &e) in effects.iter().enumerate() {
            let label = format!("t{}", t + 1);
            let seed = a.seed + SLICE_OFFSET + t as u64;
            s.note(&format!("slice {label} seed"), seed);
            let spec = SyntheticSpec {
                seed,
                slice: Some(label.clone()),
                ..base.clone().with_effect(e)
            };
            spec.validate()?;
            for d in generate(&spec)? {
                writeln!(w, "{}", format_document(&d, CorpusFormat::Ngrams))?;
            }
            let mut tw = create(&out.join(format!("truth_{label}.tsv")))?;
            write_truth_tsv(&mut tw, &truth(&spec))?;
            finish_file(tw)?;
        }
    }
    finish_file(w)?;
    log::info!(
        "{} planted word(s), {} pairs per region, {} slice(s)",
        a.planted,
        a.pairs,
        effects.len()
    );
    s.write_echo(&out.join("synth.conf"))
}

struct ExportArgs {
    artifacts: PathBuf,
    kind: PlotKind,
    pair: Option<Pair>,
    words: Option<List>,
    k: usize,
    slice: Option<String>,
    smoothing: SmoothingArg,
}

fn export_plots(s: Settings, a: ExportArgs, out: &Path) -> Result<()> {
    s.finish()?;
    let dir = &a.artifacts;
    let need_pair = || {
        a.pair
            .clone()
            .ok_or_else(|| Error::InvalidArgument(format!("{} needs --pair", a.kind)))
    };
    let need_words = || {
        a.words
            .clone()
            .map(|l| l.0)
            .ok_or_else(|| Error::InvalidArgument(format!("{} needs --words", a.kind)))
    };
    fs::create_dir_all(out)?;
    match a.kind {
        PlotKind::FreqScatter => {
            let pair = need_pair()?;
            let vocab = Vocabulary::read_tsv(open_artifact(&dir.join("vocab.tsv"))?)?;
            let mut w = create(&out.join("freq_scatter.csv"))?;
            plots::write_freq_scatter(&mut w, &vocab, &pair.0, &pair.1, a.smoothing.0)?;
            finish_file(w)?;
        }
        PlotKind::PosBars => {
            let input = open_artifact(&dir.join("pos.tsv"))?;
            let keep: Option<BTreeSet<String>> = a.words.clone().map(|l| l.0.into_iter().collect());
            let mut w = create(&out.join("pos_bars.tsv"))?;
            for line in input.lines() {
                let line = line?;
                let word = line.split('\t').next().unwrap_or("");
                if line.starts_with('#') || keep.as_ref().is_none_or(|k| k.contains(word)) {
                    writeln!(w, "{line}")?;
                }
            }
            finish_file(w)?;
        }
        PlotKind::NullHist => {
            let name = match &a.slice {
                Some(sl) => format!("report_{}.tsv", slice_file_label(sl)),
                None => "report.tsv".to_string(),
            };
            let report_path = dir.join(name);
            let report = read_report_tsv(open_artifact(&report_path)?)?;
            let null = read_null_tsv(
                open_artifact(&null_path(&report_path))?,
                (&report.region_i, &report.region_j),
            )?;
            let words = match &a.words {
                Some(l) => l.0.clone(),
                None => report
                    .rows
                    .iter()
                    .filter(|r| r.verdict == Verdict::Significant)
                    .map(|r| r.word.clone())
                    .collect(),
            };
            if words.is_empty() {
                log::warn!("no words to export; pass --words");
            }
            for word in &words {
                let mut w = create(&out.join(format!("null_hist_{}.csv", slice_file_label(word))))?;
                write_null_histogram(&mut w, word, &null, &report)?;
                finish_file(w)?;
            }
        }
        PlotKind::SemdistSeries => {
            let input = open_artifact(&dir.join("series.csv"))?;
            let mut w = create(&out.join("semdist_series.csv"))?;
            writeln!(w, "# geodist {}: slice,sem,stable_words", geodist::VERSION)?;
            for (n, line) in input.lines().enumerate() {
                let line = line?;
                if line.starts_with('#') || line.trim().is_empty() {
                    continue;
                }
                if line.split(',').count() != 3 {
                    return Err(Error::Format(format!("series.csv line {}: expected 3 columns", n + 1)));
                }
                writeln!(w, "{line}")?;
            }
            finish_file(w)?;
        }
        PlotKind::Neighbors2d => {
            let words = need_words()?;
            let model = load_model(&dir.join("model.bin"))?;
            let regions: Vec<String> = match &a.pair {
                Some(p) => vec![p.0.clone(), p.1.clone()],
                None => model.regions().iter().map(|r| r.to_string()).collect(),
            };
            let mut seen = BTreeSet::new();
            let mut points = Vec::new();
            let mut push = |word: &str, region: &str| -> Result<()> {
                if seen.insert((word.to_string(), region.to_string())) {
                    points.push(LabelledVector {
                        word: word.to_string(),
                        region: region.to_string(),
                        vector: region_embedding(&model, word, region)?,
                    });
                }
                Ok(())
            };
            for word in &words {
                for r in &regions {
                    push(word, r)?;
                    if a.k > 0 {
                        for (n, _) in nearest_neighbors(&model, word, r, a.k)? {
                            push(&n, r)?;
                        }
                    }
                }
            }
            let mut w = create(&out.join("neighbors_2d.csv"))?;
            let proj = plots::write_neighbors_2d(&mut w, &points)?;
            finish_file(w)?;
            log::info!(
                "{} points; axis variances {:.4}, {:.4}",
                points.len(),
                proj.variance[0],
                proj.variance[1]
            );
        }
    }
    s.write_echo(&out.join(format!("export-plots-{}.conf", a.kind)))
}

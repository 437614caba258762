use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pointillist::connector::{AlternateFloor, ConnectError, Connection, Connector, ConnectorConfig, KindChoice};
use pointillist::eval::{self, EvalReport};
use pointillist::gram::{Eligibility, Gram};
use pointillist::ingest::{self, IngestConfig, InputFormat};
use pointillist::root::{self, RootConfig};
use pointillist::selector::{self, SelectorModel, TrainParams};
use pointillist::store::GramStore;
use pointillist::synth::{self, Background, BurstPlan};
use pointillist::time::{self, DayWindow};
use pointillist::timeseries::{self, Similarity, VectorKind};
use pointillist::trends::{self, Baseline, HitOutcome, TrendConfig};

#[derive(Parser, Debug)]
#[command(name = "pointillist", version, about = "Reconstruct phrases from correlated trigram trends")]
struct Cli {
    /// Print every effective parameter and exit.
    #[arg(long, global = true)]
    print_config: bool,

    /// Worker threads for ingest, trend scans and batch connects.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic post corpus with injected bursts.
    Synth(SynthArgs),
    /// Count posts into an hourly store file.
    Ingest(IngestArgs),
    /// Count posts into a daily count table.
    Count(CountArgs),
    /// Check whether a trigram may serve as a root.
    ValidateRoot(ValidateArgs),
    /// Cosine similarity between two grams' trend vectors.
    Sim(SimArgs),
    /// Train the vector-kind selector from labelled roots.
    TrainSelector(TrainArgs),
    /// Reconstruct phrases from a root trigram.
    Connect(ConnectArgs),
    /// Scan for trigrams with a sharp rise in frequency.
    Trends(TrendArgs),
    /// Compute LCP and UP for a batch of results.
    Eval(EvalArgs),
}

#[derive(Args, Debug, Clone)]
struct StoreArg {
    /// Count file (hourly or daily rows).
    #[arg(long, env = "POINTILLIST_STORE")]
    store: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Posts file; `-` reads standard input.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "jsonl")]
    format: InputFormat,
    /// Comma-separated gram sizes.
    #[arg(long, default_value = "3", value_delimiter = ',')]
    ngrams: Vec<usize>,
    #[arg(long, default_value = "cjk")]
    eligible: Eligibility,
    /// Minutes added to timestamps before bucketing.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    tz_offset: i64,
    /// Abort on the first malformed line.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Injection specs, one JSON object per line.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Without --spec, inject this many random phrases.
    #[arg(long, default_value_t = 50)]
    random: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 15)]
    days: usize,
    #[arg(long, default_value = "2011-10-26")]
    start: String,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to `<out>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    bg_grams: usize,
    #[arg(long, default_value_t = 4_000)]
    bg_words_per_day: usize,
    #[arg(long, default_value_t = 1.1)]
    zipf: f64,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Store file to write; defaults to $POINTILLIST_STORE.
    #[arg(long, env = "POINTILLIST_STORE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
    /// Write hourly rows instead of daily totals.
    #[arg(long)]
    hourly: bool,
}

#[derive(Args, Debug, Clone)]
struct WindowArgs {
    /// First day, YYYY-MM-DD.
    #[arg(long)]
    from: String,
    #[arg(long)]
    days: usize,
}

impl WindowArgs {
    fn window(&self) -> Result<DayWindow> {
        Ok(DayWindow::new(time::parse_day(&self.from)?, self.days))
    }
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    store: StoreArg,
    #[arg(long)]
    gram: String,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, default_value_t = 0.98)]
    flatness: f64,
    #[arg(long, default_value_t = 0.5)]
    max_zero_fraction: f64,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[command(flatten)]
    store: StoreArg,
    #[arg(long)]
    gram_a: String,
    #[arg(long)]
    gram_b: String,
    #[arg(long, default_value = "ft")]
    kind: VectorKind,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    store: StoreArg,
    /// `gram<TAB>from<TAB>days<TAB>FT|DFT|CFT` lines.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
}

#[derive(Args, Debug, Clone)]
struct ConnectorArgs {
    #[arg(long, default_value = "auto")]
    kind: KindChoice,
    #[arg(long, default_value_t = 5)]
    width: usize,
    /// Wall-clock budget per root, e.g. 60s, 500ms, or `none`.
    #[arg(long, default_value = "60s")]
    budget: Budget,
    #[arg(long, default_value_t = 32)]
    max_chars: usize,
    /// Report alternates as well as the best phrase.
    #[arg(long)]
    alternates: bool,
    /// Alternate floor when --alternates is set.
    #[arg(long, default_value = "length-fair")]
    floor: AlternateFloor,
    /// Also extend phrases to the left.
    #[arg(long)]
    bidirectional: bool,
    /// Connect even if the root fails validation.
    #[arg(long)]
    force: bool,
    /// Trained selector model for `--kind auto`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.98)]
    flatness: f64,
    #[arg(long, default_value_t = 0.5)]
    max_zero_fraction: f64,
    /// Print per-step scores.
    #[arg(long)]
    trace: bool,
}

impl ConnectorArgs {
    fn config(&self, window: DayWindow, sim_threshold: f64) -> ConnectorConfig {
        ConnectorConfig {
            sim_threshold,
            branch_width: self.width,
            time_budget: self.budget.0,
            max_phrase_chars: self.max_chars,
            window,
            vector_kind: self.kind,
            epsilon: self.epsilon,
            alternates: if self.alternates { self.floor } else { AlternateFloor::None },
            root: RootConfig { flatness_threshold: self.flatness, max_zero_fraction: self.max_zero_fraction },
            bidirectional: self.bidirectional,
            force: self.force,
        }
    }

    fn load_model(&self) -> Result<Option<SelectorModel>> {
        self.model
            .as_ref()
            .map(|p| {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(SelectorModel::from_text(&text)?)
            })
            .transpose()
    }
}

#[derive(Args, Debug)]
struct ConnectArgs {
    #[command(flatten)]
    store: StoreArg,
    #[arg(long, required_unless_present = "batch")]
    root: Option<String>,
    /// File of roots, one per line; prints `root<TAB>result<TAB>peak<TAB>sim_path`.
    #[arg(long, conflicts_with = "root")]
    batch: Option<PathBuf>,
    #[command(flatten)]
    window: WindowArgs,
    /// Minimum similarity score for an extension.
    #[arg(long, default_value_t = 0.97)]
    threshold: f64,
    #[command(flatten)]
    connector: ConnectorArgs,
}

#[derive(Args, Debug)]
struct TrendArgs {
    #[command(flatten)]
    store: StoreArg,
    #[arg(long)]
    from: String,
    /// Last day, inclusive.
    #[arg(long)]
    to: String,
    #[arg(long, default_value_t = 100.0)]
    threshold: f64,
    #[arg(long, default_value = "prev")]
    baseline: Baseline,
    /// Connect every hit over its 11-day window.
    #[arg(long)]
    connect: bool,
    /// Minimum similarity score for an extension when connecting.
    #[arg(long, default_value_t = 0.97)]
    sim_threshold: f64,
    #[command(flatten)]
    connector: ConnectorArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// `root<TAB>result[<TAB>peak]` lines.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
    #[arg(long)]
    judgments: Option<PathBuf>,
    /// Strictly decreasing peak thresholds, e.g. 99,29,4.
    #[arg(long, value_delimiter = ',')]
    strata: Vec<u64>,
    /// `table` or `jsonl`.
    #[arg(long, default_value = "table")]
    output: String,
}

/// Wall-clock budget; `None` means unlimited.
#[derive(Debug, Clone, Copy)]
struct Budget(Option<Duration>);

impl std::str::FromStr for Budget {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_budget(s).map(Budget)
    }
}

fn parse_budget(s: &str) -> Result<Option<Duration>, String> {
    let s = s.trim();
    if matches!(s, "none" | "inf" | "off") {
        return Ok(None);
    }
    let (num, unit) = match s.find(|c: char| !c.is_ascii_digit() && c != '.') {
        Some(i) => s.split_at(i),
        None => (s, "s"),
    };
    let v: f64 = num.parse().map_err(|_| format!("bad budget `{s}`"))?;
    let secs = match unit {
        "s" => v,
        "ms" => v / 1000.0,
        "m" | "min" => v * 60.0,
        _ => return Err(format!("bad budget unit `{unit}` (expected s, ms or m)")),
    };
    if !secs.is_finite() || secs < 0.0 {
        return Err(format!("bad budget `{s}`"));
    }
    Ok(Some(Duration::from_secs_f64(secs)))
}

fn format_budget(b: Option<Duration>) -> String {
    match b {
        None => "none".into(),
        Some(d) if d.subsec_nanos() == 0 => format!("{}s", d.as_secs()),
        Some(d) => format!("{}ms", d.as_millis()),
    }
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

fn create_output(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load_store(arg: &StoreArg) -> Result<GramStore> {
    GramStore::load(&arg.store).with_context(|| format!("loading store {}", arg.store.display()))
}

fn parse_gram(s: &str) -> Result<Gram> {
    Gram::new(s).with_context(|| format!("bad gram `{s}`"))
}

/// Every effective parameter as `key = value` lines.
fn config_lines(cli: &Cli) -> Vec<(String, String)> {
    let mut kv: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| kv.push((k.to_owned(), v));
    let defaults_conn = ConnectorConfig::new(DayWindow::new(0, 0));
    let trend = TrendConfig::default();
    put("threads", cli.threads.to_string());
    let conn: Option<(&ConnectorArgs, f64, Option<&WindowArgs>)> = match &cli.command {
        Some(Command::Connect(a)) => Some((&a.connector, a.threshold, Some(&a.window))),
        Some(Command::Trends(a)) => Some((&a.connector, a.sim_threshold, None)),
        _ => None,
    };
    match conn {
        Some((c, threshold, w)) => {
            put("sim_threshold", threshold.to_string());
            put("flatness_threshold", c.flatness.to_string());
            put("max_zero_fraction", c.max_zero_fraction.to_string());
            put("branch_width", c.width.to_string());
            put("time_budget", format_budget(c.budget.0));
            put("max_phrase_chars", c.max_chars.to_string());
            put("vector_kind", c.kind.to_string());
            put("epsilon", c.epsilon.to_string());
            put("alternates", c.alternates.to_string());
            put("alternate_floor", c.floor.to_string());
            put("bidirectional", c.bidirectional.to_string());
            put("force", c.force.to_string());
            put("model", c.model.as_ref().map_or("none".into(), |p| p.display().to_string()));
            if let Some(w) = w {
                put("from", w.from.clone());
                put("days", w.days.to_string());
            }
        }
        None => {
            put("sim_threshold", defaults_conn.sim_threshold.to_string());
            put("flatness_threshold", defaults_conn.root.flatness_threshold.to_string());
            put("max_zero_fraction", defaults_conn.root.max_zero_fraction.to_string());
            put("branch_width", defaults_conn.branch_width.to_string());
            put("time_budget", format_budget(defaults_conn.time_budget));
            put("max_phrase_chars", defaults_conn.max_phrase_chars.to_string());
            put("vector_kind", defaults_conn.vector_kind.to_string());
            put("epsilon", defaults_conn.epsilon.to_string());
        }
    }
    match &cli.command {
        Some(Command::Trends(a)) => {
            put("trend_threshold", a.threshold.to_string());
            put("baseline", a.baseline.to_string());
            put("from", a.from.clone());
            put("to", a.to.clone());
            put("connect", a.connect.to_string());
        }
        _ => {
            put("trend_threshold", trend.threshold.to_string());
            put("baseline", trend.baseline.to_string());
        }
    }
    let input = match &cli.command {
        Some(Command::Ingest(a)) => Some(&a.input),
        Some(Command::Count(a)) => Some(&a.input),
        _ => None,
    };
    let dflt = IngestConfig::default();
    match input {
        Some(i) => {
            put("input", i.input.display().to_string());
            put("format", i.format.to_string());
            put("ngrams", i.ngrams.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
            put("eligible", i.eligibility_name());
            put("tz_offset", i.tz_offset.to_string());
            put("strict", i.strict.to_string());
        }
        None => {
            put("format", InputFormat::default().to_string());
            put("ngrams", dflt.ngrams.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
            put("eligible", dflt.eligibility.to_string());
            put("tz_offset", dflt.tz_offset_minutes.to_string());
            put("strict", "false".into());
        }
    }
    let store = match &cli.command {
        Some(Command::ValidateRoot(a)) => Some(a.store.store.clone()),
        Some(Command::Sim(a)) => Some(a.store.store.clone()),
        Some(Command::TrainSelector(a)) => Some(a.store.store.clone()),
        Some(Command::Connect(a)) => Some(a.store.store.clone()),
        Some(Command::Trends(a)) => Some(a.store.store.clone()),
        Some(Command::Ingest(a)) => Some(a.out.clone()),
        _ => std::env::var_os("POINTILLIST_STORE").map(PathBuf::from),
    };
    put("store", store.map_or("none".into(), |p| p.display().to_string()));
    kv
}

impl InputArgs {
    fn eligibility_name(&self) -> String {
        self.eligible.to_string()
    }

    fn config(&self) -> IngestConfig {
        IngestConfig { ngrams: self.ngrams.clone(), eligibility: self.eligible, tz_offset_minutes: self.tz_offset }
    }

    fn read_posts(&self) -> Result<ingest::ParsedPosts> {
        Ok(ingest::parse_posts(open_input(&self.input)?, self.format, self.strict)?)
    }
}

fn write_candidates(out: &mut impl Write, conn: &Connection, trace: bool, indent: &str) -> io::Result<()> {
    for c in &conn.candidates {
        writeln!(out, "{indent}{:.6}\t{}", c.sim_path, c.chars)?;
        if trace {
            for s in &c.per_step_scores {
                writeln!(
                    out,
                    "{indent}\tstep\t{}\troot={:.6}\tparent={:.6}\tstem={:.6}\tscore={:.6}",
                    s.candidate, s.sim_root, s.sim_parent, s.sim_stem, s.sim_score
                )?;
            }
            writeln!(out, "{indent}\tstem\t{}", c.stem)?;
        }
    }
    Ok(())
}

fn run_synth(a: &SynthArgs) -> Result<()> {
    let start = time::parse_day(&a.start)?;
    let specs = match &a.spec {
        Some(p) => synth::read_specs(open_input(p)?)?,
        None => synth::random_specs(&BurstPlan { count: a.random, days: a.days, ..Default::default() }, a.seed),
    };
    let background = Background {
        num_grams: a.bg_grams,
        words_per_day: a.bg_words_per_day,
        zipf_exponent: a.zipf,
        ..Default::default()
    };
    let (posts, manifest) = synth::generate(specs, background, a.seed, start, a.days)?;
    synth::write_posts(&posts, create_output(&a.out)?)?;
    let manifest_path = a.manifest.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".manifest.json");
        PathBuf::from(p)
    });
    let mut m = create_output(&manifest_path)?;
    serde_json::to_writer_pretty(&mut m, &manifest)?;
    m.write_all(b"\n")?;
    m.flush()?;
    let mut out = io::stdout().lock();
    writeln!(out, "posts\t{}", posts.len())?;
    writeln!(out, "phrases\t{}", manifest.specs.len())?;
    Ok(())
}

fn run_ingest(a: &IngestArgs, threads: usize) -> Result<()> {
    let parsed = a.input.read_posts()?;
    let store = ingest::ingest_parallel(&parsed.posts, &a.input.config(), threads)?;
    store.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let mut out = io::stdout().lock();
    writeln!(out, "posts\t{}", parsed.posts.len())?;
    writeln!(out, "rejected\t{}", parsed.rejected)?;
    writeln!(out, "grams\t{}", store.num_grams())?;
    if let Some((lo, hi)) = store.day_span() {
        writeln!(out, "first_day\t{}", time::format_day(lo))?;
        writeln!(out, "last_day\t{}", time::format_day(hi))?;
    }
    Ok(())
}

fn run_count(a: &CountArgs, threads: usize) -> Result<()> {
    let parsed = a.input.read_posts()?;
    let store = ingest::ingest_parallel(&parsed.posts, &a.input.config(), threads)?;
    let out = create_output(&a.out)?;
    if a.hourly {
        store.write_hourly(out)?;
    } else {
        store.write_daily(out)?;
    }
    if parsed.rejected > 0 {
        eprintln!("skipped {} malformed line(s)", parsed.rejected);
    }
    Ok(())
}

fn run_validate(a: &ValidateArgs) -> Result<()> {
    let store = load_store(&a.store)?;
    let gram = parse_gram(&a.gram)?;
    let w = a.window.window()?;
    let series = store.daily_series(&gram, w.start, w.days);
    let cfg = RootConfig { flatness_threshold: a.flatness, max_zero_fraction: a.max_zero_fraction };
    let v = root::is_valid_root(&series, &cfg);
    println!("{gram}\t{}\tflatness={:.6}\tzero_fraction={:.6}", v.reason, v.flatness, v.zero_fraction);
    Ok(())
}

fn run_sim(a: &SimArgs) -> Result<()> {
    let store = load_store(&a.store)?;
    let w = a.window.window()?;
    let va =
        timeseries::trend_vector(&store.daily_series(&parse_gram(&a.gram_a)?, w.start, w.days), a.kind, a.epsilon)?;
    let vb =
        timeseries::trend_vector(&store.daily_series(&parse_gram(&a.gram_b)?, w.start, w.days), a.kind, a.epsilon)?;
    match timeseries::cosine(&va, &vb)? {
        Similarity::Defined(v) => println!("{v:.6}"),
        Similarity::Undefined => {
            eprintln!("similarity undefined: a vector has zero norm");
            println!("{:.6}", 0.0);
        }
    }
    Ok(())
}

fn run_train(a: &TrainArgs) -> Result<()> {
    let store = load_store(&a.store)?;
    let examples = selector::read_labels(open_input(&a.labels)?, &store, a.epsilon)?;
    let params = TrainParams { c: a.c, seed: a.seed, ..Default::default() };
    let model = selector::train(&examples, &params)?;
    let correct = examples.iter().filter(|(f, k)| model.predict(f) == *k).count();
    std::fs::write(&a.out, model.to_text()).with_context(|| format!("writing {}", a.out.display()))?;
    println!("examples\t{}", examples.len());
    println!("training_accuracy\t{:.6}", correct as f64 / examples.len() as f64);
    Ok(())
}

fn run_connect(a: &ConnectArgs, threads: usize) -> Result<()> {
    let store = load_store(&a.store)?;
    let config = a.connector.config(a.window.window()?, a.threshold);
    let connector = Connector::new(&store, a.connector.load_model()?);
    let mut out = io::stdout().lock();
    if let Some(batch) = &a.batch {
        let roots: Vec<Gram> = open_input(batch)?
            .lines()
            .map(|l| l.map_err(anyhow::Error::from))
            .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
            .map(|l| parse_gram(l?.trim()))
            .collect::<Result<_>>()?;
        let jobs: Vec<_> = roots.iter().map(|r| (r.clone(), config.clone())).collect();
        for (root, res) in roots.iter().zip(connector.connect_many(&jobs, threads)) {
            let peak = store.daily_series(root, config.window.start, config.window.days).peak();
            match res {
                Ok(c) => writeln!(out, "{root}\t{}\t{peak}\t{:.6}", c.best().chars, c.best().sim_path)?,
                Err(ConnectError::InvalidRoot { .. }) => writeln!(out, "{root}\t{}\t{peak}\t", eval::INVALID_ROOT)?,
                Err(e) => return Err(e.into()),
            }
        }
        return Ok(());
    }
    let root = parse_gram(a.root.as_deref().expect("clap requires --root without --batch"))?;
    let conn = connector.connect(&root, &config)?;
    if conn.timed_out {
        eprintln!("time budget exhausted; results are partial");
    }
    write_candidates(&mut out, &conn, a.connector.trace, "")?;
    Ok(())
}

fn run_trends(a: &TrendArgs, threads: usize) -> Result<()> {
    let store = load_store(&a.store)?;
    let (from, to) = (time::parse_day(&a.from)?, time::parse_day(&a.to)?);
    if to < from {
        bail!("--to is before --from");
    }
    let range = DayWindow::new(from, (to - from + 1) as usize);
    let cfg = TrendConfig { threshold: a.threshold, epsilon: a.connector.epsilon, baseline: a.baseline };
    let hits = trends::scan(&store, range, &cfg, threads)?;
    let mut out = io::stdout().lock();
    if !a.connect {
        for h in &hits {
            writeln!(out, "{}\t{}\t{:.6}", h.gram, time::format_day(h.spike_day), h.change_rate)?;
        }
        return Ok(());
    }
    let connector = Connector::new(&store, a.connector.load_model()?);
    let base = a.connector.config(range, a.sim_threshold);
    for (h, outcome) in trends::trends_to_phrases(&hits, &connector, &base, threads) {
        writeln!(out, "{}\t{}\t{:.6}", h.gram, time::format_day(h.spike_day), h.change_rate)?;
        match outcome {
            HitOutcome::Connected(c) => write_candidates(&mut out, &c, a.connector.trace, "\t")?,
            HitOutcome::Skipped(v) => writeln!(out, "\tskipped\t{}", v.reason)?,
            HitOutcome::Failed(e) => writeln!(out, "\tfailed\t{e}")?,
        }
    }
    Ok(())
}

fn report_row(label: &str, r: &EvalReport) -> String {
    format!(
        "{label:<10} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7.3} {:>7.3}",
        r.valid_roots, r.invalid_roots, r.lexicon_matches, r.human_correct_extra, r.wrong, r.lcp, r.up
    )
}

fn run_eval(a: &EvalArgs) -> Result<()> {
    let runs = eval::read_runs(open_input(&a.results)?)?;
    let lexicon = eval::read_lexicon(open_input(&a.lexicon)?)?;
    let judgments = match &a.judgments {
        Some(p) => eval::read_judgments(open_input(p)?)?,
        None => Default::default(),
    };
    let strata = eval::stratify(&runs, &a.strata, &lexicon, &judgments)?;
    let mut out = io::stdout().lock();
    match a.output.as_str() {
        "table" => {
            writeln!(
                out,
                "{:<10} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
                "stratum", "valid", "invalid", "match", "correct", "wrong", "LCP", "UP"
            )?;
            for s in &strata {
                let label = s.threshold.map_or("all".to_owned(), |t| format!("freq>{t}"));
                match &s.report {
                    Some(r) => writeln!(out, "{}", report_row(&label, r))?,
                    None => writeln!(out, "{label:<10} {:>7}", 0)?,
                }
            }
        }
        "jsonl" => {
            for s in &strata {
                let rec = serde_json::json!({
                    "threshold": s.threshold,
                    "valid_roots": s.report.as_ref().map_or(0, |r| r.valid_roots),
                    "invalid_roots": s.report.as_ref().map(|r| r.invalid_roots),
                    "lexicon_matches": s.report.as_ref().map(|r| r.lexicon_matches),
                    "human_correct_extra": s.report.as_ref().map(|r| r.human_correct_extra),
                    "lcp": s.report.as_ref().map(|r| r.lcp),
                    "up": s.report.as_ref().map(|r| r.up),
                });
                writeln!(out, "{rec}")?;
            }
            if let Some(Some(r)) = strata.first().map(|s| s.report.as_ref()) {
                for e in &r.ledger {
                    let rec = serde_json::json!({ "root": e.root, "result": e.result, "verdict": e.verdict });
                    writeln!(out, "{rec}")?;
                }
            }
        }
        other => bail!("unknown output `{other}` (expected table|jsonl)"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let threads = cli.threads.max(1);
    match &cli.command {
        None => bail!("no subcommand given (see --help)"),
        Some(Command::Synth(a)) => run_synth(a),
        Some(Command::Ingest(a)) => run_ingest(a, threads),
        Some(Command::Count(a)) => run_count(a, threads),
        Some(Command::ValidateRoot(a)) => run_validate(a),
        Some(Command::Sim(a)) => run_sim(a),
        Some(Command::TrainSelector(a)) => run_train(a),
        Some(Command::Connect(a)) => run_connect(a, threads),
        Some(Command::Trends(a)) => run_trends(a, threads),
        Some(Command::Eval(a)) => run_eval(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_config {
        let mut out = io::stdout().lock();
        for (k, v) in config_lines(&cli) {
            let _ = writeln!(out, "{k} = {v}");
        }
        return ExitCode::SUCCESS;
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

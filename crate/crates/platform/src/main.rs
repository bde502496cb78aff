use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use sit_core::iat::IatConfig;
use sit_core::psychometrics::reliability::{HalfDemeaning, ReliabilityMode};
use sit_core::psychometrics::IndexScoring;
use sit_core::scores::ScoreOptions;
use sit_core::sit::{RatingMatrix, Subset};
use sit_core::survey::Protocol;
use sit_core::synth::{calibrate_to_targets, generate_cohort, CohortSpec, DemographicTargets};
use sit_core::text::tags::{Characteristic, DEFAULT_THRESHOLD};
use sit_platform::commands::{self, ReliabilityRun};
use sit_platform::dataset::{self, DataDir};
use sit_platform::error::{PlatformError, Result};
use sit_platform::events::Journal;
use sit_platform::report::{build_report, ReportOptions};
use sit_platform::{api, files, modelspec};

#[derive(Parser)]
#[command(
    name = "sitlab",
    version,
    about = "Stereotype Identification Test: administration and analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where rating data comes from: a data directory or a ratings CSV.
#[derive(clap::Args)]
struct RatingSource {
    /// Data directory (manifest.csv, ratings.csv).
    #[arg(long, env = "SITLAB_DATA_DIR")]
    data: Option<PathBuf>,
    /// Ratings CSV, `-` for stdin. Overrides the data directory.
    #[arg(long)]
    ratings: Option<String>,
    /// Pool manifest giving the Gender-STEM flags.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SubsetArg {
    All,
    Gender,
}

impl From<SubsetArg> for Subset {
    fn from(s: SubsetArg) -> Self {
        match s {
            SubsetArg::All => Subset::All,
            SubsetArg::Gender => Subset::GenderStemOnly,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    SplitHalf,
    TestRetest,
}

#[derive(Clone, Copy, ValueEnum)]
enum DemeaningArg {
    WithinHalf,
    FullRun,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScoringArg {
    Standardized,
    Raw,
}

impl From<ScoringArg> for IndexScoring {
    fn from(s: ScoringArg) -> Self {
        match s {
            ScoringArg::Standardized => IndexScoring::Standardized,
            ScoringArg::Raw => IndexScoring::Raw,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort. Without --out the ratings CSV goes to stdout.
    Simulate {
        #[arg(long, default_value_t = 614)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Revelation effect on the standardized SIT score.
        #[arg(long)]
        iat_effect: Option<f64>,
        /// Loading of ratings on the latent sensitivity.
        #[arg(long)]
        loading: Option<f64>,
        /// Output data directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SIT and Gender-SIT scores from a ratings CSV.
    ScoreSit {
        /// Ratings CSV, `-` for stdin.
        #[arg(default_value = "-")]
        ratings: String,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// IAT D scores from a trials CSV.
    ScoreIat {
        #[arg(default_value = "-")]
        trials: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay the event log of a data directory and write scores.csv.
    Score {
        #[arg(long, env = "SITLAB_DATA_DIR")]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "standardized")]
        scoring: ScoringArg,
        /// Skip the alternative SIT variants.
        #[arg(long)]
        no_robustness: bool,
        /// Defaults to scores.csv inside the data directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The six trait indices from a questionnaire CSV.
    Indices {
        #[arg(default_value = "-")]
        questionnaire: String,
        #[arg(long, value_enum, default_value = "standardized")]
        scoring: ScoringArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write item loadings here.
        #[arg(long)]
        loadings: Option<PathBuf>,
    },
    /// Split-half or test-retest reliability of the SIT.
    Reliability {
        #[command(flatten)]
        source: RatingSource,
        #[arg(long, value_enum, default_value = "split-half")]
        mode: ModeArg,
        #[arg(long, default_value_t = 9999)]
        draws: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, default_value = "all")]
        subset: SubsetArg,
        #[arg(long, value_enum, default_value = "within-half")]
        demeaning: DemeaningArg,
        /// Per-draw coefficients CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Cronbach's alpha of an item matrix or of the demeaned ratings.
    Alpha {
        /// Wide numeric CSV, one column per item.
        #[arg(long, conflicts_with_all = ["data", "ratings"])]
        items: Option<PathBuf>,
        #[command(flatten)]
        source: RatingSource,
        #[arg(long, value_enum, default_value = "all")]
        subset: SubsetArg,
    },
    /// Single-factor solution of an item matrix.
    Factor {
        items: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit regression models on a scores CSV.
    Regress {
        /// Built-in model or group name, or a .toml spec file.
        #[arg(long, default_value = "table2")]
        spec: String,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, env = "SITLAB_DATA_DIR")]
        data: Option<PathBuf>,
        /// Coefficient CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lexical profiles, word counts and stance summaries of comments.
    Textmetrics {
        #[arg(long, env = "SITLAB_DATA_DIR")]
        data: Option<PathBuf>,
        #[arg(long)]
        comments: Option<PathBuf>,
        #[arg(long)]
        pos: Option<PathBuf>,
        #[arg(long)]
        stance: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        top: usize,
        /// Per-respondent profiles CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Protected-characteristic coverage of image tags.
    Tagstats {
        #[arg(long, env = "SITLAB_DATA_DIR")]
        data: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        probs: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Manual classification, `tag=characteristic` or `tag=none`. Repeatable.
        #[arg(long = "override")]
        overrides: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the analysis report of a data directory.
    Report {
        #[arg(long, env = "SITLAB_DATA_DIR")]
        data: PathBuf,
        /// Directory for the report and its CSV series.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 9999)]
        draws: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Serve the respondent API over HTTP.
    Serve {
        #[arg(long, env = "SITLAB_DATA_DIR")]
        data: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

fn input(arg: &str) -> Result<Box<dyn Read>> {
    if arg == "-" {
        return Ok(Box::new(std::io::stdin().lock()));
    }
    Ok(Box::new(files::open(Path::new(arg))?))
}

/// Runs `f` against the file at `path`, or stdout.
fn output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = files::create(p)?;
            f(&mut w)?;
            w.flush().map_err(|e| PlatformError::io(p, e))
        }
        None => {
            let mut w = std::io::stdout().lock();
            f(&mut w)?;
            w.flush().map_err(|e| PlatformError::io("<stdout>", e))
        }
    }
}

fn name_of(arg: &str) -> &str {
    if arg == "-" {
        "<stdin>"
    } else {
        arg
    }
}

fn read_manifest(path: &Path) -> Result<Vec<sit_core::survey::pool::ImageCard>> {
    files::read_manifest(files::open(path)?, &path.display().to_string())
}

/// Picks an explicit path, else `name` inside the data directory.
fn locate(explicit: Option<PathBuf>, data: Option<&Path>, name: &str) -> Result<PathBuf> {
    explicit
        .or_else(|| data.map(|d| d.join(name)))
        .ok_or_else(|| PlatformError::format(name, "no file given and no data directory set"))
}

fn rating_matrix(src: RatingSource) -> Result<RatingMatrix> {
    let data = src.data.as_deref();
    let ratings_arg = match (&src.ratings, data) {
        (Some(r), _) => r.clone(),
        (None, Some(d)) => d.join("ratings.csv").display().to_string(),
        (None, None) => return Err(PlatformError::format("ratings", "give --ratings or --data")),
    };
    let manifest = src
        .manifest
        .or_else(|| data.map(|d| d.join(dataset::MANIFEST)).filter(|p| p.exists()));
    let ratings = files::read_ratings(input(&ratings_arg)?, name_of(&ratings_arg))?;
    let cards = manifest.as_deref().map(read_manifest).transpose()?;
    commands::rating_matrix(&ratings, cards.as_deref(), None)
}

fn parse_override(s: &str) -> Result<(String, Option<Characteristic>)> {
    let (tag, class) = s
        .split_once('=')
        .ok_or_else(|| PlatformError::format("--override", format!("'{s}' is not tag=characteristic")))?;
    let class = match class {
        "none" | "" => None,
        c => Some(c.parse::<Characteristic>()?),
    };
    Ok((tag.to_string(), class))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            n,
            seed,
            iat_effect,
            loading,
            out,
        } => {
            let mut spec = calibrate_to_targets(&DemographicTargets::default())?;
            spec = CohortSpec {
                n_respondents: n,
                seed,
                iat_effect: iat_effect.unwrap_or(spec.iat_effect),
                latent_sensitivity_loading: loading.unwrap_or(spec.latent_sensitivity_loading),
                ..spec
            };
            let cohort = generate_cohort(&spec)?;
            match out {
                Some(dir) => {
                    let dir = DataDir::create(dir)?;
                    dataset::write_cohort(&dir, &cohort)?;
                    eprintln!("wrote {} sessions to {}", cohort.sessions.len(), dir.root().display());
                    Ok(())
                }
                None => output(None, |w| files::write_ratings(w, &cohort.sessions)),
            }
        }
        Command::ScoreSit { ratings, manifest, out } => {
            let rows = files::read_ratings(input(&ratings)?, name_of(&ratings))?;
            let cards = manifest.as_deref().map(read_manifest).transpose()?;
            let m = commands::rating_matrix(&rows, cards.as_deref(), None)?;
            output(out.as_deref(), |w| commands::score_sit(&m, w))
        }
        Command::ScoreIat { trials, out } => {
            let rows = files::read_iat_trials(input(&trials)?, name_of(&trials))?;
            output(out.as_deref(), |w| commands::score_iat(&rows, &IatConfig::default(), w))
        }
        Command::Score {
            data,
            scoring,
            no_robustness,
            out,
        } => {
            let dir = DataDir::new(data);
            let opts = ScoreOptions {
                index_scoring: scoring.into(),
                robustness: !no_robustness,
            };
            let scores = dataset::score_dir(&dir, opts)?;
            let path = out.unwrap_or_else(|| dir.path(dataset::SCORES));
            output(Some(&path), |w| files::write_scores(w, &scores))?;
            eprintln!(
                "scored {} sessions ({} incomplete, {} excluded by the IAT rule)",
                scores.rows.len(),
                scores.incomplete.len(),
                scores.iat_excluded.len()
            );
            Ok(())
        }
        Command::Indices {
            questionnaire,
            scoring,
            out,
            loadings,
        } => {
            let rows = files::read_questionnaire(input(&questionnaire)?, name_of(&questionnaire))?;
            let (sessions, idx) = commands::indices(&rows, scoring.into())?;
            if let Some(p) = loadings {
                output(Some(&p), |w| commands::write_loadings(&idx, w))?;
            }
            output(out.as_deref(), |w| commands::write_indices(&sessions, &idx, w))
        }
        Command::Reliability {
            source,
            mode,
            draws,
            seed,
            subset,
            demeaning,
            out,
            summary,
        } => {
            let m = rating_matrix(source)?;
            let run = ReliabilityRun {
                mode: match mode {
                    ModeArg::SplitHalf => ReliabilityMode::SplitHalf,
                    ModeArg::TestRetest => ReliabilityMode::TestRetest,
                },
                subset: subset.into(),
                draws,
                seed,
                demeaning: match demeaning {
                    DemeaningArg::WithinHalf => HalfDemeaning::WithinHalf,
                    DemeaningArg::FullRun => HalfDemeaning::FullRun,
                },
            };
            let (report, alpha) = commands::run_reliability(&m, &run)?;
            output(out.as_deref(), |w| commands::write_draws(&report, w))?;
            let s = commands::reliability_summary(&report, &run, alpha);
            let json = serde_json::to_string_pretty(&s).expect("summary serializes") + "\n";
            match summary {
                Some(p) => std::fs::write(&p, json).map_err(|e| PlatformError::io(&p, e)),
                None => {
                    eprint!("{json}");
                    Ok(())
                }
            }
        }
        Command::Alpha { items, source, subset } => {
            let a = match items {
                Some(p) => {
                    let (_, rows) = commands::read_items(files::open(&p)?, &p.display().to_string())?;
                    commands::alpha_items(&rows)?
                }
                None => commands::alpha_ratings(&rating_matrix(source)?, subset.into())?,
            };
            println!("{}", files::fmt_f64(a));
            Ok(())
        }
        Command::Factor { items, out } => {
            let (names, rows) = commands::read_items(files::open(&items)?, &items.display().to_string())?;
            let s = commands::factor(&rows)?;
            output(out.as_deref(), |w| commands::write_factor(&names, &s, w))
        }
        Command::Regress {
            spec,
            scores,
            data,
            out,
        } => {
            let specs = modelspec::resolve(&spec)?;
            let path = locate(scores, data.as_deref(), dataset::SCORES)?;
            let name = path.display().to_string();
            let table = files::read_scores(files::open(&path)?, &name)?.to_table(&name)?;
            let fits = commands::regress(&table, &specs)?;
            print!("{}", commands::render_fits(&spec, &fits));
            if let Some(p) = out {
                output(Some(&p), |w| commands::write_coefficients(&fits, w))?;
            }
            Ok(())
        }
        Command::Textmetrics {
            data,
            comments,
            pos,
            stance,
            top,
            out,
        } => {
            let d = data.as_deref();
            let cpath = locate(comments, d, "comments.csv")?;
            let ppath = locate(pos, d, dataset::POS)?;
            let comments = files::read_comments(files::open(&cpath)?, &cpath.display().to_string())?;
            let pos_rows = files::read_pos(files::open(&ppath)?, &ppath.display().to_string())?;
            let pos = sit_core::text::metrics::pos_by_comment(&pos_rows);
            let spath = stance.or_else(|| d.map(|d| d.join(dataset::STANCE)).filter(|p| p.exists()));
            let stance = match &spath {
                Some(p) => Some(files::read_stance(files::open(p)?, &p.display().to_string())?),
                None => None,
            };
            let ratings = match (d, &stance) {
                (Some(d), Some(_)) => {
                    let p = d.join("ratings.csv");
                    files::read_ratings(files::open(&p)?, &p.display().to_string())?
                }
                _ => Vec::new(),
            };
            let report = commands::textmetrics(&comments, &pos, &ratings, stance.as_deref(), top)?;
            if let Some(p) = out {
                std::fs::write(&p, &report.profiles_csv).map_err(|e| PlatformError::io(&p, e))?;
            }
            print!("{}", report.summary);
            Ok(())
        }
        Command::Tagstats {
            data,
            manifest,
            probs,
            threshold,
            overrides,
            out,
        } => {
            let d = data.as_deref();
            let mpath = locate(manifest, d, dataset::MANIFEST)?;
            let ppath = locate(probs, d, dataset::TAG_PROBS)?;
            let cards = read_manifest(&mpath)?;
            let probs = files::read_tag_probs(files::open(&ppath)?, &ppath.display().to_string())?;
            let overrides = overrides
                .iter()
                .map(|s| parse_override(s))
                .collect::<Result<Vec<_>>>()?;
            let stats = commands::tagstats(&cards, &probs, threshold, &overrides)?;
            if let Some(p) = out {
                output(Some(&p), |w| commands::write_tagstats(&stats, w))?;
            }
            print!("{}", commands::render_tag_summary(&stats));
            Ok(())
        }
        Command::Report { data, out, draws, seed } => {
            let report = build_report(&DataDir::new(data), &ReportOptions { draws, seed })?;
            let out = DataDir::create(out)?;
            for (name, bytes) in &report.files {
                std::fs::write(out.path(name), bytes).map_err(|e| PlatformError::io(out.path(name), e))?;
            }
            std::fs::write(out.path("report.txt"), &report.text)
                .map_err(|e| PlatformError::io(out.path("report.txt"), e))?;
            print!("{}", report.text);
            Ok(())
        }
        Command::Serve { data, addr } => {
            let dir = DataDir::create(data)?;
            let pool = dir.pool()?;
            let journal = Journal::open(&dir.path(dataset::EVENTS), Arc::new(Protocol::default()))?;
            let state = api::AppState::new(pool, journal);
            let rt = tokio::runtime::Runtime::new().map_err(|e| PlatformError::io("runtime", e))?;
            eprintln!("listening on http://{addr}");
            rt.block_on(api::serve(addr, state))
                .map_err(|e| PlatformError::io(addr.to_string(), e))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed downstream pipe (`| head`) is not a failure.
        Err(PlatformError::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

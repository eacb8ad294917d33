//! The `vidmem` command line. Exit codes: 0 success, 1 runtime error, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use crate::agent::{Agent, TaskKind};
use crate::config::{keys_help, BackendMode, Config};
use crate::error::Error;
use crate::eval::{self, gen_world, world_media, SyntheticWorld, WorldParams};
use crate::replay::{ReplayCase, ReplayScript};
use crate::store::{write_atomic, MemoryBundle};
use crate::backends::{SyntheticBackend, VideoSource};

#[derive(Debug, Parser)]
#[command(name = "vidmem", version, about = "Build and query temporal and object memories of videos")]
struct Cli {
    /// JSON config file with flat keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable. Applied after --config.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Generate a seeded synthetic world.
    GenWorld {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 44)]
        segments: usize,
        #[arg(long, default_value_t = 6)]
        objects: usize,
        #[arg(long, default_value_t = 10)]
        nlq: usize,
        #[arg(long, default_value_t = 3)]
        mcq: usize,
        /// Put every object in this category.
        #[arg(long)]
        category: Option<String>,
        /// Write a shipped replay world (case1, case4) instead.
        #[arg(long, conflicts_with_all = ["seed", "segments", "objects", "category"])]
        case: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Build temporal and object memory and save it to a directory.
    BuildMemory {
        /// Synthetic world to build from.
        #[arg(long)]
        world: Option<PathBuf>,
        /// Video URI, remote backend only.
        #[arg(long, requires = "duration_s")]
        video: Option<String>,
        #[arg(long)]
        duration_s: Option<f64>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Rank segments against a description.
    Localize {
        #[arg(long)]
        mem: PathBuf,
        #[arg(long)]
        query: String,
        /// VIDEO:TEXT ensemble ratio, overrides ensemble_ratio.
        #[arg(long)]
        ratio: Option<String>,
        #[arg(long)]
        top_k: Option<usize>,
        /// Widen each returned window by this many seconds per side.
        #[arg(long, default_value_t = 0.0)]
        expand_s: f64,
    },
    /// Run the agent once on a question.
    Ask {
        #[arg(long)]
        mem: PathBuf,
        #[arg(long)]
        world: Option<PathBuf>,
        /// Question text, options included for MCQ.
        #[arg(long, required_unless_present = "mcq")]
        question: Option<String>,
        /// Index of a multiple-choice question stored in the world.
        #[arg(long, requires = "world", conflicts_with = "question")]
        mcq: Option<usize>,
        #[arg(long, default_value = "mcq")]
        task: String,
        /// Replay chat replies from this script file.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Write the transcript JSON here.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Run a SQL query against the object memory.
    Objects {
        #[arg(long)]
        mem: PathBuf,
        #[arg(long)]
        sql: String,
        #[arg(long)]
        json: bool,
    },
    /// Score the memory on a world's labelled examples.
    Eval {
        #[command(subcommand)]
        which: EvalCmd,
    },
    /// Run a shipped replay case and write its transcript.
    ExportTranscript {
        /// case1 or case4.
        #[arg(long)]
        case: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Also write the case's chat script.
        #[arg(long)]
        script_out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum EvalCmd {
    /// Recall at IoU thresholds for the world's NLQ examples.
    Nlq {
        #[arg(long)]
        mem: PathBuf,
        /// World file holding the examples.
        #[arg(long)]
        examples: PathBuf,
        #[arg(long)]
        ratio: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        expand_s: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Accuracy on the world's multiple-choice questions.
    Mcq {
        #[arg(long)]
        mem: PathBuf,
        #[arg(long)]
        world: PathBuf,
        /// JSON array of scripts, one per question. Built-in count scripts otherwise.
        #[arg(long)]
        scripts: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) => Failure::Usage(msg),
            other => Failure::Runtime(other),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

fn command() -> clap::Command {
    Cli::command()
        .after_help("Run with --help to list every config key and its default.")
        .after_long_help(keys_help())
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let code = run(std::env::args_os(), &mut stdout.lock());
    ExitCode::from(code as u8)
}

/// Parses `args` (program name first), runs, and returns the exit code.
/// Results go to `out`; diagnostics go to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match command()
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(cli: &Cli) -> CliResult<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    for s in &cli.set {
        cfg.set(s)?;
    }
    Ok(cfg)
}

fn read_world(path: &Path) -> CliResult<SyntheticWorld> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(Error::Precondition(format!("{}: {e}", path.display()))))?;
    Ok(SyntheticWorld::from_json(&text).map_err(Failure::Runtime)?)
}

fn read_script(path: &Path) -> CliResult<ReplayScript> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(Error::Precondition(format!("{}: {e}", path.display()))))?;
    Ok(ReplayScript::from_json(&text)?)
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(Failure::Runtime),
        None => writeln!(out, "{text}")
            .map_err(|e| Failure::Runtime(Error::Precondition(format!("stdout: {e}")))),
    }
}

/// Synthetic suites need the world; text-only commands can do with a stand-in.
fn suite_for(cfg: &Config, world: Option<&SyntheticWorld>, n_segments: usize) -> CliResult<crate::backends::BackendSuite> {
    if cfg.backend == BackendMode::Synthetic && world.is_none() {
        let stand_in = gen_world(
            0,
            &WorldParams {
                n_segments: n_segments.max(1),
                n_objects: 0,
                n_nlq: 0,
                n_mcq: 0,
                ..WorldParams::default()
            },
        )?;
        return Ok(cfg.suite(Some(&stand_in))?);
    }
    Ok(cfg.suite(world)?)
}

#[derive(Serialize)]
struct LocalizeRow {
    segment: usize,
    start_s: f64,
    end_s: f64,
    score: f64,
    text_score: f64,
    video_score: f64,
}

fn execute(cli: Cli, out: &mut dyn Write) -> CliResult {
    let mut cfg = load_config(&cli)?;
    match cli.cmd {
        Cmd::GenWorld {
            seed,
            segments,
            objects,
            nlq,
            mcq,
            category,
            case,
            out: path,
        } => {
            let world = match case {
                Some(name) => match ReplayCase::by_name(&name) {
                    Some(c) => c.world,
                    None => return usage(format!("unknown case {name:?}; expected case1 or case4")),
                },
                None => {
                    if segments == 0 {
                        return usage("--segments must be positive");
                    }
                    let params = WorldParams {
                        n_segments: segments,
                        n_objects: objects,
                        n_nlq: nlq,
                        n_mcq: mcq,
                        category,
                        ..WorldParams::default()
                    };
                    gen_world(seed, &params)?
                }
            };
            emit(out, path.as_deref(), &world.to_json())
        }

        Cmd::BuildMemory {
            world,
            video,
            duration_s,
            out: dir,
        } => {
            let (media, source, world) = match (world, video) {
                (Some(p), None) => {
                    let w = read_world(&p)?;
                    let source = SyntheticBackend::new(std::sync::Arc::new(w.clone()), cfg.synthetic()).video_source();
                    (world_media(&w), source, Some(w))
                }
                (None, Some(uri)) => {
                    if cfg.backend != BackendMode::Remote {
                        return usage("--video needs backend=remote");
                    }
                    let duration_s = duration_s.unwrap_or_default();
                    let media = eval::media_for_video(&uri, duration_s, cfg.segment_duration_s, cfg.fps)?;
                    let source = VideoSource {
                        uri,
                        duration_s,
                        fps: cfg.fps,
                    };
                    (media, source, None)
                }
                _ => return usage("give exactly one of --world or --video"),
            };
            let suite = cfg.suite(world.as_ref())?;
            let (bundle, build) = MemoryBundle::build(&media, &source, &suite, &cfg.reid())?;
            bundle.save(&dir)?;
            eprintln!(
                "{} segments, {} tracks, {} objects -> {}",
                bundle.temporal.len(),
                build.tracks.len(),
                bundle.objects.len(),
                dir.display()
            );
            Ok(())
        }

        Cmd::Localize {
            mem,
            query,
            ratio,
            top_k,
            expand_s,
        } => {
            if let Some(r) = ratio {
                cfg.set(&format!("ensemble_ratio={r}"))?;
            }
            let bundle = MemoryBundle::load(&mem)?;
            let suite = suite_for(&cfg, None, bundle.temporal.len())?;
            let hits = bundle.temporal.segment_localization(
                &query,
                &cfg.weights()?,
                &suite,
                top_k.unwrap_or(cfg.top_k),
            )?;
            let rows: Vec<LocalizeRow> = hits
                .iter()
                .map(|h| {
                    let w = h.window.expand(expand_s);
                    LocalizeRow {
                        segment: h.segment.index,
                        start_s: w.start_s,
                        end_s: w.end_s,
                        score: h.score,
                        text_score: h.text_score,
                        video_score: h.video_score,
                    }
                })
                .collect();
            emit(out, None, &serde_json::to_string_pretty(&rows).expect("rows serialize"))
        }

        Cmd::Ask {
            mem,
            world,
            question,
            mcq,
            task,
            script,
            transcript,
        } => {
            let task = TaskKind::parse(&task)?;
            let world = world.as_deref().map(read_world).transpose()?;
            if cfg.backend == BackendMode::Synthetic && world.is_none() {
                return usage("the synthetic backend needs --world");
            }
            let input = match (question, mcq) {
                (Some(q), _) => q,
                (None, Some(i)) => match world.as_ref().and_then(|w| w.mcq_examples.get(i)) {
                    Some(m) => m.render(),
                    None => return usage(format!("the world has no question {i}")),
                },
                (None, None) => return usage("give --question or --mcq"),
            };
            let bundle = MemoryBundle::load(&mem)?;
            let mut suite = cfg.suite(world.as_ref())?;
            if let Some(p) = script {
                suite = read_script(&p)?.install(suite);
            }
            let answer = Agent::new(&bundle, &suite, cfg.agent_settings(task)?)
                .with_templates(cfg.template(task)?, cfg.memory_template()?)
                .with_video_uri(world.as_ref().map(|w| w.video_uri()).unwrap_or_default())
                .run(&input)?;
            if let Some(p) = transcript {
                write_atomic(&p, answer.transcript_json().as_bytes())?;
            }
            let line = match answer.choice_label {
                Some(c) => format!("{} (choice {c})", answer.final_text),
                None => answer.final_text.clone(),
            };
            emit(out, None, &line)
        }

        Cmd::Objects { mem, sql, json } => {
            let bundle = MemoryBundle::load(&mem)?;
            let result = bundle.objects.execute_query(&sql)?;
            let text = if json {
                serde_json::to_string_pretty(&result).expect("result serializes")
            } else {
                result.render()
            };
            emit(out, None, &text)
        }

        Cmd::Eval {
            which:
                EvalCmd::Nlq {
                    mem,
                    examples,
                    ratio,
                    expand_s,
                    out: path,
                },
        } => {
            if let Some(r) = ratio {
                cfg.set(&format!("ensemble_ratio={r}"))?;
            }
            let world = read_world(&examples)?;
            let bundle = MemoryBundle::load(&mem)?;
            let suite = suite_for(&cfg, Some(&world), world.n_segments)?;
            let report = eval::eval_nlq(
                &bundle,
                &suite,
                &world.nlq_examples,
                &cfg.weights()?,
                cfg.top_k,
                expand_s,
            )?;
            emit(out, path.as_deref(), &serde_json::to_string_pretty(&report).expect("report serializes"))
        }

        Cmd::Eval {
            which:
                EvalCmd::Mcq {
                    mem,
                    world,
                    scripts,
                    out: path,
                },
        } => {
            let world = read_world(&world)?;
            let bundle = MemoryBundle::load(&mem)?;
            let suite = cfg.suite(Some(&world))?;
            let scripts: Option<Vec<ReplayScript>> = match scripts {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| {
                        Failure::Runtime(Error::Precondition(format!("{}: {e}", p.display())))
                    })?;
                    Some(serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?)
                }
                None => None,
            };
            let report = eval::eval_mcq(
                &bundle,
                &suite,
                &world,
                &world.mcq_examples,
                scripts.as_deref(),
                &cfg.agent_settings(TaskKind::Mcq)?,
                (&cfg.template(TaskKind::Mcq)?, &cfg.memory_template()?),
            )?;
            emit(out, path.as_deref(), &serde_json::to_string_pretty(&report).expect("report serializes"))
        }

        Cmd::ExportTranscript {
            case,
            out: path,
            script_out,
        } => {
            let Some(case) = ReplayCase::by_name(&case) else {
                return usage(format!("unknown case {case:?}; expected case1 or case4"));
            };
            let answer = case.run()?;
            if let Some(p) = script_out {
                write_atomic(&p, case.script.to_json().as_bytes())?;
            }
            emit(out, path.as_deref(), &answer.transcript_json())
        }
    }
}

//! Command-line front end.
//!
//! Settings resolve as command-line flag, then `--config` TOML file, then
//! built-in default. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | usage error |
//! | 3 | configuration, data or I/O error |
//! | 4 | plausibility failure (generation or sweep) |
//! | 5 | validation failure |
//! | 6 | no inputs found |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::export::{parse_urdf, sha256_hex, ParsedUrdf};
use crate::metrics::corpus_stats;
use crate::pipeline::{default_data_dir, generate_batch, write_object, CategoryData, GenConfig, PipelineError, DEFAULT_SAMPLES_PER_JOINT};
use crate::plausibility::motion_sweep_check;
use crate::tree::{validate_tree, GrowthGrammar};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IMPLAUSIBLE: i32 = 4;
pub const EXIT_INVALID: i32 = 5;
pub const EXIT_NO_INPUT: i32 = 6;

#[derive(Parser, Debug)]
#[command(name = "artigen", version, about = "Procedural articulated-object generator")]
pub struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate URDF bundles.
    Generate(GenerateArgs),
    /// Check bundles with the strict parser, manifest checksums and grammar.
    Validate(DirArgs),
    /// Corpus metrics over every URDF under a directory.
    Stats(StatsArgs),
    /// Motion-sweep check of every URDF under a directory.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub category: Option<String>,
    #[arg(long)]
    pub count: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory with `<category>.grammar`, `.layout`, `.joints` and `assets/`.
    #[arg(long)]
    pub grammar_dir: Option<PathBuf>,
    #[arg(long)]
    pub samples_per_joint: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Run on one thread and report seconds per object.
    #[arg(long)]
    pub single_thread_timing: bool,
}

#[derive(Args, Debug)]
pub struct DirArgs {
    pub dir: PathBuf,
    #[arg(long)]
    pub grammar_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    pub dir: PathBuf,
    /// Also write the metrics as JSON to this file.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub dir: PathBuf,
    #[arg(long)]
    pub samples_per_joint: Option<usize>,
}

/// Keys accepted in the `--config` file.
#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub category: Option<String>,
    pub count: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub grammar_dir: Option<PathBuf>,
    pub samples_per_joint: Option<usize>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Resolved generation settings plus the output directory.
pub fn resolve_generate(args: &GenerateArgs, file: &FileConfig) -> (GenConfig, PathBuf) {
    let d = GenConfig::default();
    let config = GenConfig {
        category: args.category.clone().or_else(|| file.category.clone()).unwrap_or(d.category),
        count: args.count.or(file.count).unwrap_or(d.count),
        seed: args.seed.or(file.seed).unwrap_or(d.seed),
        data_dir: args.grammar_dir.clone().or_else(|| file.grammar_dir.clone()).unwrap_or(d.data_dir),
        samples_per_joint: args.samples_per_joint.or(file.samples_per_joint).unwrap_or(d.samples_per_joint),
        threads: if args.single_thread_timing { Some(1) } else { args.threads.or(file.threads) },
    };
    let out = args.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    (config, out)
}

fn exit_code_for(e: &PipelineError) -> i32 {
    match e {
        PipelineError::Plausibility(_) => EXIT_IMPLAUSIBLE,
        _ => EXIT_CONFIG,
    }
}

fn cmd_generate(args: &GenerateArgs, file: &FileConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (config, out_dir) = resolve_generate(args, file);
    if config.samples_per_joint < 2 {
        let _ = writeln!(err, "error: --samples-per-joint must be at least 2");
        return EXIT_USAGE;
    }
    let data = match CategoryData::load(&config.data_dir, &config.category) {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let start = Instant::now();
    let results = match generate_batch(&data, config.seed, config.count, config.samples_per_joint, config.threads) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut code = EXIT_OK;
    for (i, result) in results.into_iter().enumerate() {
        match result {
            Ok(obj) if obj.sweep.passed() => {
                if let Err(e) = write_object(&obj, config.seed, &out_dir) {
                    let _ = writeln!(err, "error: {}_{i}: {e}", config.category);
                    code = code.max(EXIT_CONFIG);
                    continue;
                }
                let _ = writeln!(out, "{}", obj.log_line());
            }
            Ok(obj) => {
                let _ = writeln!(out, "{}", obj.log_line());
                let _ = write!(err, "{}", obj.sweep.to_text(&obj.tree));
                code = code.max(EXIT_IMPLAUSIBLE);
            }
            Err(e) => {
                let _ = writeln!(err, "error: {}_{i}: {e}", config.category);
                code = code.max(exit_code_for(&e));
            }
        }
    }
    if args.single_thread_timing {
        let total = start.elapsed().as_secs_f64();
        let _ = writeln!(
            out,
            "timing objects={} total_seconds={total:.3} seconds_per_object={:.4} single_threaded=true",
            config.count,
            total / config.count.max(1) as f64
        );
    }
    code
}

/// Every `*.urdf` under `dir`, sorted.
pub fn find_urdfs(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&d) else { continue };
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "urdf") {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

fn display_name(dir: &Path, path: &Path) -> String {
    path.strip_prefix(dir).unwrap_or(path).display().to_string()
}

/// Problems with a bundle's `manifest.json`, if there is one.
fn manifest_problems(urdf: &Path) -> Vec<String> {
    let Some(bundle) = urdf.parent() else { return Vec::new() };
    let path = bundle.join("manifest.json");
    let Ok(text) = std::fs::read_to_string(&path) else { return Vec::new() };
    let json: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return vec![format!("manifest.json: {e}")],
    };
    let mut problems = Vec::new();
    for f in json["files"].as_array().into_iter().flatten() {
        let (Some(rel), Some(want)) = (f["path"].as_str(), f["sha256"].as_str()) else {
            problems.push("manifest.json: malformed file entry".into());
            continue;
        };
        match std::fs::read(bundle.join(rel)) {
            Ok(bytes) if sha256_hex(&bytes) == want => {}
            Ok(_) => problems.push(format!("{rel}: checksum mismatch")),
            Err(e) => problems.push(format!("{rel}: {e}")),
        }
    }
    problems
}

fn cmd_validate(args: &DirArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let files = find_urdfs(&args.dir);
    if files.is_empty() {
        let _ = writeln!(err, "error: no URDF files under {}", args.dir.display());
        return EXIT_NO_INPUT;
    }
    let data_dir = args.grammar_dir.clone().unwrap_or_else(default_data_dir);
    let mut failed = 0;
    for path in &files {
        let name = display_name(&args.dir, path);
        let mut problems = Vec::new();
        match parse_urdf(path) {
            Ok(ParsedUrdf { tree, warnings, .. }) => {
                problems.extend(warnings.into_iter().map(|w| format!("warning: {w}")));
                problems.extend(manifest_problems(path));
                let grammar_path = data_dir.join(format!("{}.grammar", tree.category));
                if let Ok(grammar) = GrowthGrammar::load(&grammar_path) {
                    let report = validate_tree(&tree, &grammar);
                    problems.extend(report.violations.iter().map(ToString::to_string));
                }
            }
            Err(e) => problems.push(e.to_string()),
        }
        if problems.is_empty() {
            let _ = writeln!(out, "{name} ok");
        } else {
            failed += 1;
            let _ = writeln!(out, "{name} FAIL");
            for p in problems {
                let _ = writeln!(out, "  {p}");
            }
        }
    }
    let _ = writeln!(out, "validated={} failed={failed}", files.len());
    if failed > 0 {
        EXIT_INVALID
    } else {
        EXIT_OK
    }
}

fn cmd_stats(args: &StatsArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let files = find_urdfs(&args.dir);
    let mut trees = Vec::new();
    for path in &files {
        match parse_urdf(path) {
            Ok(p) => trees.push(p.tree),
            Err(e) => {
                let _ = writeln!(err, "warning: skipping {}: {e}", display_name(&args.dir, path));
            }
        }
    }
    if trees.is_empty() {
        let _ = writeln!(err, "error: no parseable URDF files under {}", args.dir.display());
        return EXIT_NO_INPUT;
    }
    let metrics = match corpus_stats(&trees, None) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let _ = write!(out, "{}", metrics.to_text());
    if let Some(path) = &args.json {
        if let Err(e) = std::fs::write(path, metrics.to_json() + "\n") {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    }
    EXIT_OK
}

fn cmd_sweep(args: &SweepArgs, file: &FileConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let samples = args
        .samples_per_joint
        .or(file.samples_per_joint)
        .unwrap_or(DEFAULT_SAMPLES_PER_JOINT);
    let files = find_urdfs(&args.dir);
    if files.is_empty() {
        let _ = writeln!(err, "error: no URDF files under {}", args.dir.display());
        return EXIT_NO_INPUT;
    }
    let mut code = EXIT_OK;
    let mut failed = 0;
    for path in &files {
        let name = display_name(&args.dir, path);
        let tree = match parse_urdf(path) {
            Ok(p) => p.tree,
            Err(e) => {
                let _ = writeln!(out, "{name} ERROR {e}");
                code = code.max(EXIT_INVALID);
                failed += 1;
                continue;
            }
        };
        match motion_sweep_check(&tree, samples) {
            Ok(report) if report.passed() => {
                let _ = writeln!(out, "{name} pass configs={}", report.configs_checked);
            }
            Ok(report) => {
                failed += 1;
                code = code.max(EXIT_IMPLAUSIBLE);
                let _ = writeln!(out, "{name} FAIL configs={} violations={}", report.configs_checked, report.violations.len());
                for line in report.to_text(&tree).lines() {
                    let _ = writeln!(out, "  {line}");
                }
            }
            Err(e) => {
                failed += 1;
                code = code.max(EXIT_INVALID);
                let _ = writeln!(out, "{name} ERROR {e}");
            }
        }
    }
    let _ = writeln!(out, "swept={} failed={failed}", files.len());
    code
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let file = match &cli.config {
        Some(p) => match FileConfig::load(p) {
            Ok(f) => f,
            Err(e) => {
                let _ = writeln!(err, "error: config {e}");
                return EXIT_CONFIG;
            }
        },
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Generate(a) => cmd_generate(a, &file, out, err),
        Command::Validate(a) => cmd_validate(a, out, err),
        Command::Stats(a) => cmd_stats(a, out, err),
        Command::Sweep(a) => cmd_sweep(a, &file, out, err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let cli = Cli::try_parse_from(["artigen", "generate", "--seed", "9"]).unwrap();
        let Command::Generate(args) = cli.command else { panic!() };
        let file: FileConfig = toml::from_str("seed = 3\ncount = 4\n").unwrap();
        let (c, out) = resolve_generate(&args, &file);
        assert_eq!((c.seed, c.count, c.category.as_str()), (9, 4, "cabinet"));
        assert_eq!(out, PathBuf::from("out"));
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        assert!(toml::from_str::<FileConfig>("colour = 1\n").is_err());
    }

    #[test]
    fn usage_errors() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["artigen", "generate", "--count", "x"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run(["artigen"], &mut o, &mut e), EXIT_USAGE);
        assert_eq!(run(["artigen", "--help"], &mut o, &mut e), EXIT_OK);
    }
}

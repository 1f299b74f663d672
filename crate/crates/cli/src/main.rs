use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use tomtom_artifacts::carver::{ScanConfig, DEFAULT_CHUNK_SIZE, MIN_OVERLAP};
use tomtom_artifacts::detect::{classify_tree, expected_artifacts, render_checklist};
use ttforensic::carve::{carve_image, emit_carve_json};
use ttforensic::config::Config;
use ttforensic::decode::{classify_entries, decode_inputs, walk_inputs, DecodeOptions};
use ttforensic::fixture::{generate, write_fixture, FixtureSpec, DEFAULT_RECORDS};
use ttforensic::{parse_size, Format};

#[derive(Parser)]
#[command(name = "ttforensic", version, about = "Decode, carve and classify TomTom navigation artifacts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode an evidence tree into JSON, GPX or CSV reports.
    Decode {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output formats; repeat or comma-separate.
        #[arg(long, value_delimiter = ',', default_value = "json")]
        format: Vec<Format>,
        /// Directory for report.<ext> files; stdout when omitted (single format only).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fail on the first malformed entry instead of skipping it.
        #[arg(long)]
        strict: bool,
        /// TOML file with device profiles.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Include recovered passwords in the report.
        #[arg(long)]
        reveal_credentials: bool,
        /// Record the wall-clock run time in the report metadata.
        #[arg(long)]
        stamp_run_time: bool,
    },
    /// Carve ov2 records and settings fragments from a raw image.
    Carve {
        image: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
        chunk_size: usize,
        #[arg(long, default_value_t = MIN_OVERLAP)]
        overlap: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also run the published favourite-file seek pattern.
        #[arg(long)]
        paper_regex: bool,
        /// One JSON status line per chunk on stderr.
        #[arg(long)]
        progress: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a tree (or a newline-delimited path listing) and print the
    /// artifact checklist.
    Detect {
        tree: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic evidence tree with its manifest.
    Fixture {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RECORDS)]
        records: usize,
        /// Size of a noise image with planted records, e.g. 16M.
        #[arg(long, value_parser = parse_size)]
        noise_image: Option<u64>,
        /// Records planted in the noise image (default: --records).
        #[arg(long)]
        planted: Option<usize>,
    },
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing stdout"),
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Decode {
            inputs,
            mut format,
            out,
            strict,
            config,
            reveal_credentials,
            stamp_run_time,
        } => {
            format.sort();
            format.dedup();
            if out.is_none() && format.len() > 1 {
                anyhow::bail!("several formats need --out");
            }
            let opts = DecodeOptions {
                strict,
                reveal_credentials,
                stamp_run_time,
                config: config.as_deref().map(Config::load).transpose()?.unwrap_or_default(),
            };
            let decoded = decode_inputs(&inputs, &opts)?;
            for m in &decoded.report.malformed {
                eprintln!("malformed entry at {}: {}", m.source.render(), m.record.reason);
            }
            match &out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)
                        .with_context(|| format!("creating {}", dir.display()))?;
                    for f in &format {
                        let path = dir.join(format!("report.{}", f.extension()));
                        write_output(Some(&path), &f.render(&decoded.report))?;
                    }
                }
                None => write_output(None, &format[0].render(&decoded.report))?,
            }
            Ok(decoded.outcome.exit_code() as u8)
        }
        Command::Carve {
            image,
            chunk_size,
            overlap,
            jobs,
            paper_regex,
            progress,
            out,
        } => {
            let cfg = ScanConfig {
                chunk_size,
                overlap,
                jobs: jobs.max(1),
                ..ScanConfig::default()
            };
            let report = carve_image(&image, &cfg, paper_regex, |p| {
                if progress {
                    if let Ok(line) = serde_json::to_string(p) {
                        eprintln!("{line}");
                    }
                }
            })?;
            write_output(out.as_deref(), &emit_carve_json(&report))?;
            Ok(0)
        }
        Command::Detect { tree, json } => {
            let source = if tree.is_file() {
                let listing = std::fs::read_to_string(&tree)
                    .with_context(|| format!("reading listing {}", tree.display()))?;
                let paths: Vec<&str> = listing.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
                classify_tree(&paths)
            } else {
                classify_entries(&walk_inputs(&[tree])?)
            };
            let rows = expected_artifacts(&source);
            if json {
                let value = serde_json::json!({
                    "source": source,
                    "checklist": rows.as_ref().ok(),
                });
                let mut text = serde_json::to_string_pretty(&value)?;
                text.push('\n');
                write_output(None, &text)?;
            } else {
                match &rows {
                    Ok(rows) => write_output(None, &render_checklist(&source, rows))?,
                    Err(e) => {
                        write_output(None, &render_checklist(&source, &[]))?;
                        eprintln!("{e}");
                    }
                }
            }
            Ok(0)
        }
        Command::Fixture {
            seed,
            out,
            records,
            noise_image,
            planted,
        } => {
            let fixture = generate(FixtureSpec {
                seed,
                records,
                noise_size: noise_image,
                planted,
            });
            write_fixture(&fixture, &out).with_context(|| format!("writing {}", out.display()))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

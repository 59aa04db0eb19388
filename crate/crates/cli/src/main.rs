use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use v2x_reality::calibrate::{grid_search, ParamSpace};
use v2x_reality::compare::{build_report, write_exports};
use v2x_reality::ingest::{self, BssidMap, RawCapture, DEFAULT_MAX_SKEW_MS};
use v2x_reality::records::{load_records, save_records, ReceptionRecord, RecordFormat, Source};
use v2x_reality::sim::{run_simulation, synthesize_field_data, SynthModel};
use v2x_reality::trace::{load_trace, trace_deviation, TraceFormat};
use v2x_reality::{load_scenario, Error};

#[derive(Parser)]
#[command(
    name = "v2xr",
    version,
    about = "Trace-driven V2X link simulation and field-data comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Jsonl,
    Csv,
}

impl From<Format> for RecordFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Jsonl => RecordFormat::Jsonl,
            Format::Csv => RecordFormat::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Replay a scenario and write the received beacons.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the output file extension, then JSONL.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Turn radiotap captures or a pre-extracted CSV log into field records.
    Ingest {
        #[arg(long, num_args = 1.., required_unless_present = "csv", conflicts_with = "csv")]
        pcap: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        csv: Vec<PathBuf>,
        /// Vehicle GPS trace; required with --pcap.
        #[arg(long, required_unless_present = "csv")]
        trace: Option<PathBuf>,
        /// Lines of `aa:bb:cc:dd:ee:ff station_id`.
        #[arg(long)]
        bssid_map: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_SKEW_MS)]
        max_skew_ms: i64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare simulated and field records.
    Compare {
        #[arg(long)]
        sim: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        export_dir: Option<PathBuf>,
        /// Field vehicle trace; adds deviation.csv to the exports.
        #[arg(long, requires = "export_dir")]
        field_trace: Option<PathBuf>,
    },
    /// Grid-search channel parameters against field records.
    Calibrate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic field records from a scenario.
    Synth {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        extra_loss: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        drop: f64,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_usage() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

/// Failure to write an output file.
fn output(e: Error) -> Failure {
    Failure {
        code: 3,
        message: e.to_string(),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    })
}

fn record_format(explicit: Option<Format>, path: &Path) -> RecordFormat {
    explicit
        .map(RecordFormat::from)
        .or_else(|| RecordFormat::from_path(path))
        .unwrap_or(RecordFormat::Jsonl)
}

fn save(path: &Path, records: &[ReceptionRecord], format: RecordFormat) -> Result<(), Failure> {
    save_records(path, records, format).map_err(output)
}

fn fixed2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Simulate {
            scenario,
            out,
            format,
        } => {
            let s = load_scenario(&scenario)?;
            let records = run_simulation(&s)?;
            info!("{} records", records.len());
            save(&out, &records, record_format(format, &out))?;
            println!("records={}", records.len());
        }
        Command::Ingest {
            pcap,
            csv,
            trace,
            bssid_map,
            max_skew_ms,
            out,
        } => {
            let records = if !csv.is_empty() {
                let mut records = Vec::new();
                for path in &csv {
                    records.extend(ingest::parse_field_csv(path)?);
                }
                records.sort_by_key(|r| (r.t_ms, r.station_id));
                println!("records={}", records.len());
                records
            } else {
                let trace_path = trace.expect("clap requires --trace with --pcap");
                let trace = load_trace(
                    &trace_path,
                    TraceFormat::from_path(&trace_path).unwrap_or(TraceFormat::Csv),
                )?;
                let map = bssid_map.as_deref().map(BssidMap::load).transpose()?;
                let mut captures: Vec<RawCapture> = Vec::new();
                let (mut packets, mut no_signal, mut implausible) = (0, 0, 0);
                for path in &pcap {
                    let scan = ingest::parse_pcap(path)?;
                    packets += scan.packets;
                    no_signal += scan.skipped_no_signal;
                    implausible += scan.rejected_implausible;
                    captures.extend(scan.captures);
                }
                captures.sort_by_key(|c| c.t_ms);
                let joined = ingest::correlate_gps(&captures, &trace, max_skew_ms, map.as_ref())?;
                println!(
                    "packets={packets} skipped_no_signal={no_signal} rejected_implausible={implausible} \
                     dropped_out_of_span={} records={}",
                    joined.dropped_out_of_span,
                    joined.records.len()
                );
                joined.records
            };
            save(&out, &records, record_format(None, &out))?;
        }
        Command::Compare {
            sim,
            field,
            scenario,
            report,
            export_dir,
            field_trace,
        } => {
            let s = load_scenario(&scenario)?;
            let sim_records = load_records(&sim, Source::Sim)?;
            let field_records = load_records(&field, Source::Field)?;
            let rep = build_report(&sim_records, &field_records, &s.rsus)?;
            write_text(&report, &rep.to_json())?;
            if let Some(dir) = export_dir {
                let deviation = match field_trace {
                    Some(p) => {
                        let other =
                            load_trace(&p, TraceFormat::from_path(&p).unwrap_or(TraceFormat::Csv))?;
                        Some(trace_deviation(&s.trace, &other)?)
                    }
                    None => None,
                };
                let written = write_exports(
                    &dir,
                    &rep,
                    &sim_records,
                    &field_records,
                    &s.rsus,
                    deviation.as_ref(),
                )
                .map_err(|e| match e {
                    Error::Io { .. } => output(e),
                    other => other.into(),
                })?;
                info!("wrote {} export files", written.len());
            }
            println!(
                "msg_delta_pct={} mean_rssi_delta_db={}",
                fixed2(rep.total_msg_delta_pct),
                fixed2(rep.mean_rssi_delta_db)
            );
        }
        Command::Calibrate {
            scenario,
            field,
            space,
            out,
        } => {
            let s = load_scenario(&scenario)?;
            let space = ParamSpace::load(&space)?;
            let field_records = load_records(&field, Source::Field)?;
            let res = grid_search(&space, &field_records, &s)?;
            write_text(&out, &res.to_json())?;
            let p = res.best_params;
            println!(
                "tx_power_dbm={} extra_loss_db={} sensitivity_dbm={} min_snr_db={} score={:.6} evaluations={}",
                p.tx_power_dbm, p.extra_loss_db, p.sensitivity_dbm, p.min_snr_db, res.best_score, res.evaluations
            );
        }
        Command::Synth {
            scenario,
            extra_loss,
            sigma,
            drop,
            seed,
            out,
            format,
        } => {
            let model = SynthModel {
                extra_loss_db: extra_loss,
                shadowing_sigma_db: sigma,
                drop_prob: drop,
            };
            model.validate().map_err(|e| Failure {
                code: 1,
                message: e.to_string(),
            })?;
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let records = synthesize_field_data(&s, &model)?;
            save(&out, &records, record_format(format, &out))?;
            println!("records={}", records.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

//! CSV and JSON artifacts of a run.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::run::{EpisodeSummary, StepTrace};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const RUN_FILE: &str = "run.json";

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn new(config: RunConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.to_path_buf(), source }
}

/// Streaming CSV writer that always emits a header row, even with no records.
pub struct CsvSink<T> {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
    _row: std::marker::PhantomData<fn(&T)>,
}

impl<T: Serialize> CsvSink<T> {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(BufWriter::new(file));
        writer.write_record(header).map_err(csv_err(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
            _row: std::marker::PhantomData,
        })
    }

    pub fn write(&mut self, row: &T) -> Result<()> {
        self.writer.serialize(row).map_err(csv_err(&self.path))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(io_err(&self.path))
    }
}

pub fn trace_sink(dir: &Path) -> Result<CsvSink<StepTrace>> {
    CsvSink::create(&dir.join(TRACE_FILE), &StepTrace::HEADER)
}

pub fn summary_sink(dir: &Path) -> Result<CsvSink<EpisodeSummary>> {
    CsvSink::create(&dir.join(SUMMARY_FILE), &EpisodeSummary::HEADER)
}

pub fn write_manifest(dir: &Path, config: &RunConfig) -> Result<()> {
    let path = dir.join(RUN_FILE);
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &RunManifest::new(config.clone()))
        .map_err(|source| HarnessError::Json { path: path.clone(), source })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_err(&path))
}

/// Writes `summary.csv`, `run.json`, and `trace.csv` when `traces` is given.
pub fn write_outputs(
    dir: &Path,
    config: &RunConfig,
    summaries: &[EpisodeSummary],
    traces: Option<&[StepTrace]>,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut s = summary_sink(dir)?;
    for row in summaries {
        s.write(row)?;
    }
    s.finish()?;
    if let Some(traces) = traces {
        let mut t = trace_sink(dir)?;
        for row in traces {
            t.write(row)?;
        }
        t.finish()?;
    }
    write_manifest(dir, config)
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(csv_err(path))
}

pub fn read_summaries(path: &Path) -> Result<Vec<EpisodeSummary>> {
    read_csv(path)
}

pub fn read_traces(path: &Path) -> Result<Vec<StepTrace>> {
    read_csv(path)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AgentKind, TraceDetail};
    use crate::run::run_experiment;
    use frost_core::coagent::CoAgentKind;

    fn cfg() -> RunConfig {
        RunConfig {
            coagent: CoAgentKind::pavlovian(
                frost_core::repr::ReprConfig::tct(14, 0.3),
                frost_core::gvf::GvfSpec::countdown(),
            ),
            agent: AgentKind::Control(Default::default()),
            episodes: 2,
            seeds: 2,
            trace_detail: TraceDetail::Full,
            ..RunConfig::default()
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg();
        let out = run_experiment(&cfg).unwrap();
        write_outputs(dir.path(), &cfg, &out.summaries, Some(&out.traces)).unwrap();
        assert_eq!(read_summaries(&dir.path().join(SUMMARY_FILE)).unwrap(), out.summaries);
        assert_eq!(read_traces(&dir.path().join(TRACE_FILE)).unwrap(), out.traces);
        let m = read_manifest(&dir.path().join(RUN_FILE)).unwrap();
        assert_eq!(m.config, cfg);
        assert_eq!(m.version, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn empty_trace_has_header_only() {
        let dir = tempfile::tempdir().unwrap();
        write_outputs(dir.path(), &cfg(), &[], Some(&[])).unwrap();
        let text = fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap();
        assert_eq!(text, format!("{}\n", StepTrace::HEADER.join(",")));
        let text = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn trace_csv_format() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg();
        let out = run_experiment(&cfg).unwrap();
        write_outputs(dir.path(), &cfg, &out.summaries, Some(&out.traces)).unwrap();
        let text = fs::read_to_string(dir.path().join(TRACE_FILE)).unwrap();
        let first = text.lines().nth(1).unwrap();
        let fields: Vec<_> = first.split(',').collect();
        assert_eq!(fields.len(), 13);
        assert!(fields[3] == "true" || fields[3] == "false");
        assert!(["-1", "0", "1"].contains(&fields[5]));
    }

    #[test]
    fn io_errors_carry_path() {
        let e = read_summaries(Path::new("/nonexistent/dir/summary.csv")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/dir/summary.csv"), "{e}");
    }
}

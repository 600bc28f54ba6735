use std::fs;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use frost_core::gvf::{forward_view_return, forward_view_return_periodic, GvfKind, GvfSpec};
use frost_core::repr::ReprKind;
use frost_harness::config::AgentKind;
use frost_harness::output::{self, RUN_FILE, SUMMARY_FILE, TRACE_FILE};
use frost_harness::{metrics, run_experiment, run_seed, sweep, RunConfig, TraceDetail};
use frost_service::ServerContext;
use tracing::info;

use crate::{OracleArgs, RunArgs, ServeArgs};

const REPORT_TAIL: u32 = 200;

/// Runs `cfg` and writes its artifacts to `dir`. Full traces are streamed
/// to disk seed by seed instead of being held in memory.
fn execute(cfg: &RunConfig, dir: &Path) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let summaries = if cfg.trace_detail == TraceDetail::Full {
        let mut sink = output::trace_sink(dir)?;
        let mut failed = None;
        let mut summaries = Vec::new();
        for seed in 0..cfg.seeds {
            let mut write = |row| {
                if failed.is_none() {
                    if let Err(e) = sink.write(&row) {
                        failed = Some(e);
                    }
                }
            };
            summaries.extend(run_seed(cfg, seed, Some(&mut write))?);
            if let Some(e) = failed.take() {
                return Err(e.into());
            }
        }
        sink.finish()?;
        summaries
    } else {
        run_experiment(cfg)?.summaries
    };
    let mut sink = output::summary_sink(dir)?;
    for s in &summaries {
        sink.write(s)?;
    }
    sink.finish()?;
    output::write_manifest(dir, cfg)?;

    let tail = REPORT_TAIL.min(cfg.episodes);
    let td: f64 = summaries.iter().map(|s| s.mean_abs_td_gvf).sum::<f64>() / summaries.len() as f64;
    println!(
        "{}: reward/episode over last {tail} = {:.3}, mean |td_gvf| = {:.4}",
        dir.display(),
        metrics::asymptote(&summaries, tail),
        td
    );
    Ok(())
}

pub fn nexting(args: &RunArgs, all_reprs: bool) -> Result<()> {
    let base = RunConfig {
        agent: AgentKind::Stay,
        episodes: 10,
        trace_detail: TraceDetail::Full,
        ..RunConfig::default()
    };
    let mut ov = args.overrides()?;
    ov.coagent.kind.get_or_insert_with(|| "pavlovian".into());
    if all_reprs {
        ensure!(ov.repr.kind.is_none(), "--all-reprs cannot be combined with a representation choice");
        for kind in ReprKind::ALL {
            let mut per = ov.clone();
            per.repr.kind = Some(kind.as_str().into());
            execute(&per.apply(&base)?, &args.out.join(kind.as_str()))?;
        }
        return Ok(());
    }
    ov.repr.kind.get_or_insert_with(|| ReprKind::BitCascade.as_str().into());
    execute(&ov.apply(&base)?, &args.out)
}

pub fn control(args: &RunArgs, grid: bool) -> Result<()> {
    let cfg = args.overrides()?.apply(&RunConfig::default())?;
    if !grid {
        return execute(&cfg, &args.out);
    }
    let points = sweep::default_grid(&cfg);
    info!(points = points.len(), "running sweep grid");
    for (i, p) in points.iter().enumerate() {
        info!("[{}/{}] {}", i + 1, points.len(), p.name);
        execute(&p.config, &args.out.join(&p.name))?;
    }
    Ok(())
}

fn parse_presence(field: &str) -> Option<bool> {
    match field.trim() {
        "1" | "true" | "True" | "TRUE" => Some(true),
        "0" | "false" | "False" | "FALSE" => Some(false),
        _ => None,
    }
}

fn read_presence(path: &Path) -> Result<Vec<bool>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == "presence")
        .with_context(|| format!("{} has no `presence` column", path.display()))?;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let field = rec.get(col).unwrap_or("");
            parse_presence(field)
                .with_context(|| format!("{} row {}: bad presence value `{field}`", path.display(), i + 1))
        })
        .collect()
}

pub fn oracle_return(args: &OracleArgs) -> Result<()> {
    let spec = GvfSpec::of_kind(args.gvf.parse::<GvfKind>()?);
    let rows: Vec<(bool, Option<f64>)> = match &args.input {
        Some(path) => {
            let presence = read_presence(path)?;
            (0..presence.len())
                .map(|t| (presence[t], forward_view_return(&presence, t, &spec).ok()))
                .collect()
        }
        None => {
            ensure!(
                args.stim_len >= 1 && args.stim_len < args.isi,
                "need 1 <= stim_len < isi (got stim_len {}, isi {})",
                args.stim_len,
                args.isi
            );
            let cycle: Vec<bool> = (0..args.isi).map(|p| p < args.stim_len).collect();
            (0..cycle.len())
                .map(|t| Ok((cycle[t], Some(forward_view_return_periodic(&cycle, t, &spec)?))))
                .collect::<Result<_>>()?
        }
    };

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["t", "presence", "return", "token"])?;
    for (t, (presence, g)) in rows.iter().enumerate() {
        let (g, token) = match g {
            Some(g) => (g.to_string(), spec.tokenize(*g).to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([t.to_string(), presence.to_string(), g, token])?;
    }
    w.flush()?;
    Ok(())
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    let ctx = ServerContext::new(&args.trace_dir)
        .with_context(|| format!("creating {}", args.trace_dir.display()))?;
    let ws = match (args.tcp, args.ws) {
        (None, None) => Some("127.0.0.1:8080".parse()?),
        (_, ws) => ws,
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let mut tasks = tokio::task::JoinSet::new();
        if let Some(addr) = args.tcp {
            let listener = tokio::net::TcpListener::bind(addr)
                .await
                .with_context(|| format!("binding {addr}"))?;
            info!("tcp sessions on {}", listener.local_addr()?);
            tasks.spawn(frost_service::serve_tcp(listener, ctx.clone()));
        }
        if let Some(addr) = ws {
            let listener = tokio::net::TcpListener::bind(addr)
                .await
                .with_context(|| format!("binding {addr}"))?;
            info!("websocket sessions on ws://{}/ws", listener.local_addr()?);
            tasks.spawn(frost_service::serve_ws(listener, ctx.clone()));
        }
        info!("session traces in {}", args.trace_dir.display());
        while let Some(res) = tasks.join_next().await {
            res??;
        }
        Ok(())
    })
}

pub fn replay(dir: &Path) -> Result<()> {
    let manifest = output::read_manifest(&dir.join(RUN_FILE))?;
    let recorded = output::read_summaries(&dir.join(SUMMARY_FILE))?;
    let trace_path = dir.join(TRACE_FILE);
    let has_trace = trace_path.exists();
    let mut cfg = manifest.config;
    if !has_trace {
        cfg.trace_detail = TraceDetail::Summary;
    }
    let out = run_experiment(&cfg)?;

    ensure!(
        out.summaries.len() == recorded.len(),
        "summary.csv has {} rows but the replay produced {}",
        recorded.len(),
        out.summaries.len()
    );
    if let Some(i) = (0..recorded.len()).find(|&i| out.summaries[i] != recorded[i]) {
        bail!(
            "summary mismatch at row {}: recorded {:?}, replayed {:?}",
            i + 1,
            recorded[i],
            out.summaries[i]
        );
    }
    println!("summaries match: {} episodes", recorded.len());
    if has_trace {
        let traces = output::read_traces(&trace_path)?;
        ensure!(
            traces.len() == out.traces.len(),
            "trace.csv has {} rows but the replay produced {}",
            traces.len(),
            out.traces.len()
        );
        if let Some(i) = (0..traces.len()).find(|&i| out.traces[i] != traces[i]) {
            bail!("trace mismatch at row {}: recorded {:?}, replayed {:?}", i + 1, traces[i], out.traces[i]);
        }
        println!("traces match: {} steps", traces.len());
    }
    Ok(())
}

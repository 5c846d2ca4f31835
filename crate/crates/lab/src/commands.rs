//! Subcommands. Each reads its settings from a [`KvConfig`], writes its
//! files into the output directory and returns their names.
//!
//! | subcommand   | files |
//! |--------------|-------|
//! | `sample`     | `field.csv` or `field.bin` |
//! | `geodesic`   | `path.csv`, `query.json` |
//! | `restricted` | `path.csv` (when reachable), `query.json` |
//! | `blackcube`  | `blackcube.csv` (`l1,..,ld,black`), `blackcube.json` |
//! | `shortcut`   | `shortcut.csv` (`role,index,x1,..,xd`), `shortcut.json` |
//! | `game`       | `game.json`; batch mode `game_batch.csv` |
//! | `experiment` | `results.csv`, `extras.csv`, `summary.csv`, `replicas.csv` |
//!
//! Every run also writes `metadata.json`; failures write `error.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fpp_core::game::{
    build_escape_plan, check_trace_timing, find_escape_positions, run_pursuit, verify_escape_certificate,
    CapturePhase, GameOutcome, GameTrace,
};
use fpp_core::geodesic::{extract_geodesic, restricted_geodesic, shortest_time};
use fpp_core::renorm::{cubes_with_enlarged_box_inside, is_black, BlackCubeOracle, CubeParams, OutOfBox};
use fpp_core::shortcut::{build_shortcut, check_invariants, event_f_holds, shortcut_is_successful, ShortcutProposal};
use fpp_core::{EdgeField, Vertex};
use serde_json::json;

use crate::config::{
    BlackcubeSettings, ExperimentSettings, FieldFormat, FieldSettings, GameSettings, KvConfig, QuerySettings,
    SampleSettings, ShortcutSettings,
};
use crate::error::{LabError, LabResult};
use crate::formats;
use crate::meta::{write_json, ErrorRecord, Metadata, ERROR_FILE, METADATA_FILE};
use crate::runner::Runner;
use crate::text::{fmt_num, fmt_spec, fmt_vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Sample,
    Geodesic,
    Restricted,
    Blackcube,
    Shortcut,
    Game,
    Experiment,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Geodesic => "geodesic",
            Command::Restricted => "restricted",
            Command::Blackcube => "blackcube",
            Command::Shortcut => "shortcut",
            Command::Game => "game",
            Command::Experiment => "experiment",
        }
    }
}

/// Everything a run needs besides the configuration text.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub command: Command,
    pub config: KvConfig,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub threads: usize,
    pub quiet: bool,
}

struct Ctx<'a> {
    out: &'a Path,
    runner: &'a Runner,
    quiet: bool,
    files: Vec<String>,
}

impl Ctx<'_> {
    fn create(&mut self, name: &str) -> LabResult<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn json(&mut self, name: &str, value: &impl serde::Serialize) -> LabResult<()> {
        self.files.push(name.to_string());
        write_json(&self.out.join(name), value)
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

/// Runs one subcommand. The seed override replaces the configured seed
/// before anything else, so the metadata echo reproduces the run.
///
/// On failure an error record is written (when the output directory can
/// be created) and the error is returned.
pub fn dispatch(inv: &Invocation) -> LabResult<Vec<String>> {
    let mut config = inv.config.clone();
    if let Some(seed) = inv.seed {
        config.set("seed", seed.to_string());
    }
    let outcome = std::fs::create_dir_all(&inv.out).map_err(LabError::from).and_then(|_| run(inv, &config));
    match outcome {
        Ok(files) => Ok(files),
        Err(e) => {
            let _ = write_json(&inv.out.join(ERROR_FILE), &ErrorRecord::from(&e));
            Err(e)
        }
    }
}

fn run(inv: &Invocation, config: &KvConfig) -> LabResult<Vec<String>> {
    let runner = Runner::new(inv.threads)?;
    let seed = match config.get("seed") {
        None => 0,
        Some(s) => s.parse().map_err(|_| LabError::config(format!("seed: not an unsigned integer: {s:?}")))?,
    };
    let mut meta = Metadata::new(inv.command.name(), config, seed, inv.seed.is_some(), runner.threads());
    let mut ctx = Ctx { out: &inv.out, runner: &runner, quiet: inv.quiet, files: Vec::new() };
    let result = match inv.command {
        Command::Sample => sample(&mut ctx, &SampleSettings::from_config(config)?),
        Command::Geodesic => query(&mut ctx, &QuerySettings::from_config(config, false)?),
        Command::Restricted => query(&mut ctx, &QuerySettings::from_config(config, true)?),
        Command::Blackcube => blackcube(&mut ctx, &BlackcubeSettings::from_config(config)?),
        Command::Shortcut => shortcut(&mut ctx, &ShortcutSettings::from_config(config)?),
        Command::Game => game(&mut ctx, &GameSettings::from_config(config)?),
        Command::Experiment => experiment(&mut ctx, &ExperimentSettings::from_config(config)?),
    };
    meta.outputs = ctx.files.clone();
    write_json(&inv.out.join(METADATA_FILE), &meta)?;
    result?;
    let mut files = ctx.files;
    files.push(METADATA_FILE.into());
    Ok(files)
}

fn field_of(ctx: &Ctx<'_>, s: &FieldSettings) -> LabResult<EdgeField> {
    ctx.runner.sample_field(&s.bx, &s.spec, s.seed)
}

fn sample(ctx: &mut Ctx<'_>, s: &SampleSettings) -> LabResult<()> {
    let field = field_of(ctx, &s.field)?;
    match s.format {
        FieldFormat::Csv => {
            let mut w = ctx.create("field.csv")?;
            formats::write_field_csv(&field, &mut w)?;
            w.flush()?;
        }
        FieldFormat::Binary => {
            let mut w = ctx.create("field.bin")?;
            formats::write_field_binary(&field, &mut w)?;
            w.flush()?;
        }
    }
    ctx.say(format!(
        "sampled {} edges of {} with seed {}",
        field.lattice_box().edge_count(),
        fmt_spec(&s.field.spec),
        s.field.seed
    ));
    Ok(())
}

fn query(ctx: &mut Ctx<'_>, s: &QuerySettings) -> LabResult<()> {
    let field = field_of(ctx, &s.field)?;
    let (path, time, unique) = match s.m {
        None => {
            let g = extract_geodesic(&field, &s.from, &s.to)?;
            (Some(g.path), g.time, g.unique)
        }
        Some(m) => match restricted_geodesic(&field, m, &s.from, &s.to)? {
            Some(g) => (Some(g.path), g.time, g.unique),
            None => (None, f64::INFINITY, true),
        },
    };
    if let Some(p) = &path {
        let mut w = ctx.create("path.csv")?;
        formats::write_path_csv(p.vertices(), &mut w)?;
        w.flush()?;
    }
    let unrestricted = shortest_time(&field, &s.from, &s.to)?;
    let record = json!({
        "from": fmt_vertex(&s.from),
        "to": fmt_vertex(&s.to),
        "m": s.m.map(fmt_num),
        "time": fmt_num(time),
        "unrestricted_time": fmt_num(unrestricted),
        "reachable": path.is_some(),
        "unique": unique,
        "edges": path.as_ref().map(|p| p.len()),
    });
    ctx.json("query.json", &record)?;
    ctx.say(format!("time {} -> {}: {}", fmt_vertex(&s.from), fmt_vertex(&s.to), fmt_num(time)));
    Ok(())
}

fn blackcube(ctx: &mut Ctx<'_>, s: &BlackcubeSettings) -> LabResult<()> {
    let field = field_of(ctx, &s.field)?;
    let c = &s.cube;
    let cubes = cubes_with_enlarged_box_inside(field.lattice_box(), c.n);
    let flags = ctx
        .runner
        .map(cubes.clone(), |cube| is_black(&field, &cube, c.m, c.r, c.delta))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let d = field.lattice_box().dim();
    let mut w = ctx.create("blackcube.csv")?;
    let header: Vec<String> = (1..=d).map(|i| format!("l{i}")).collect();
    writeln!(w, "{},black", header.join(","))?;
    for (cube, black) in cubes.iter().zip(&flags) {
        writeln!(w, "{},{}", fmt_vertex(&cube.l), *black as u8)?;
    }
    w.flush()?;
    let black = flags.iter().filter(|b| **b).count();
    let fraction = if cubes.is_empty() { f64::NAN } else { black as f64 / cubes.len() as f64 };
    ctx.json(
        "blackcube.json",
        &json!({
            "n": c.n, "m": fmt_num(c.m), "r": fmt_num(c.r), "delta": fmt_num(c.delta),
            "cubes": cubes.len(), "black": black, "fraction": fmt_num(fraction),
        }),
    )?;
    ctx.say(format!("{black} of {} cubes black", cubes.len()));
    Ok(())
}

fn first_proposal(
    field: &EdgeField,
    s: &ShortcutSettings,
) -> LabResult<Option<(fpp_core::PathRecord, ShortcutProposal, usize)>> {
    let c = &s.cube;
    let g = if s.restricted {
        match restricted_geodesic(field, c.m, &s.from, &s.to)? {
            Some(g) => g,
            None => return Ok(None),
        }
    } else {
        extract_geodesic(field, &s.from, &s.to)?
    };
    let params = CubeParams { n: c.n, m: c.m, r: c.r, delta: c.delta };
    let stretches = BlackCubeOracle::new(field, params, OutOfBox::Skip)?.shortcutable_stretches(&g.path)?;
    let count = stretches.len();
    for st in &stretches {
        match build_shortcut(field, &g.path, st, c.n / 4) {
            Ok(p) => return Ok(Some((g.path, p, count))),
            Err(fpp_core::Error::ConstructionBlocked(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(None)
}

fn shortcut(ctx: &mut Ctx<'_>, s: &ShortcutSettings) -> LabResult<()> {
    let field = field_of(ctx, &s.field)?;
    let c = &s.cube;
    let d = field.lattice_box().dim();
    let Some((path, p, stretches)) = first_proposal(&field, s)? else {
        ctx.json("shortcut.json", &json!({ "found": false }))?;
        ctx.say("no shortcutable stretch with a buildable detour");
        return Ok(());
    };
    check_invariants(&path, &p)?;
    let success = shortcut_is_successful(&field, &p, c.m)?;
    let event = event_f_holds(&field, &p, c.m, c.r, c.delta, d)?;
    let mut w = ctx.create("shortcut.csv")?;
    let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    writeln!(w, "role,index,{}", header.join(","))?;
    for (role, vs) in [("path", path.vertices()), ("substituted", p.substituted.vertices()), ("detour", p.detour.vertices())] {
        for (i, v) in vs.iter().enumerate() {
            writeln!(w, "{role},{i},{}", fmt_vertex(v))?;
        }
    }
    w.flush()?;
    ctx.json(
        "shortcut.json",
        &json!({
            "found": true,
            "stretches": stretches,
            "success": success,
            "event_f": event,
            "proposal": p,
        }),
    )?;
    ctx.say(format!("case {:?} shortcut from {} to {}; successful: {success}", p.case, fmt_vertex(&p.z), fmt_vertex(&p.w)));
    Ok(())
}

/// Nearest escape position (ℓ1, then lexicographic), or the configured one.
fn sigma_start(field: &EdgeField, s: &GameSettings) -> LabResult<Option<Vertex>> {
    if let Some(x) = s.x_sigma {
        return Ok(Some(x));
    }
    Ok(find_escape_positions(field, &s.x_lambda, s.m, s.direction, s.horizon)?
        .into_iter()
        .min_by_key(|v| (v.l1(&s.x_lambda), *v)))
}

struct GameRun {
    x_sigma: Option<Vertex>,
    plan: Option<fpp_core::game::EscapePlan>,
    certified: bool,
    degenerate: bool,
    trace: Option<GameTrace>,
}

fn play(field: &EdgeField, s: &GameSettings) -> LabResult<GameRun> {
    let mut run = GameRun { x_sigma: sigma_start(field, s)?, plan: None, certified: false, degenerate: false, trace: None };
    let Some(xs) = run.x_sigma else { return Ok(run) };
    let Some(plan) = build_escape_plan(field, &s.x_lambda, &xs, s.m, s.direction, s.horizon)? else { return Ok(run) };
    let check = verify_escape_certificate(field, &plan)?;
    let trace = run_pursuit(field, &plan, s.policy, s.t_max)?;
    check_trace_timing(field, &trace)?;
    run.certified = check.certified;
    run.degenerate = check.degenerate;
    run.plan = Some(plan);
    run.trace = Some(trace);
    Ok(run)
}

fn outcome_columns(trace: Option<&GameTrace>) -> (&'static str, &'static str) {
    match trace.map(|t| &t.outcome) {
        None => ("none", ""),
        Some(GameOutcome::Survived { .. }) => ("survived", ""),
        Some(GameOutcome::Caught { phase: CapturePhase::Approach, .. }) => ("caught", "approach"),
        Some(GameOutcome::Caught { phase: CapturePhase::Tail, .. }) => ("caught", "tail"),
    }
}

fn game(ctx: &mut Ctx<'_>, s: &GameSettings) -> LabResult<()> {
    if let Some(batch) = s.batch {
        let seeds: Vec<u64> = (0..batch).map(|i| s.field.seed.wrapping_add(i)).collect();
        let rows = ctx
            .runner
            .map(seeds, |seed| -> LabResult<(u64, GameRun)> {
                let mut si = s.clone();
                si.field.seed = seed;
                if let fpp_core::game::PursuerPolicy::RandomWalk { .. } = si.policy {
                    si.policy = fpp_core::game::PursuerPolicy::RandomWalk { seed };
                }
                let field = fpp_core::sample_edge_field(&si.field.bx, &si.field.spec, seed)?;
                Ok((seed, play(&field, &si)?))
            })
            .into_iter()
            .collect::<LabResult<Vec<_>>>()?;
        let mut w = ctx.create("game_batch.csv")?;
        writeln!(w, "seed,plan_found,certified,outcome,capture_phase")?;
        let mut tail = 0;
        for (seed, run) in &rows {
            let (outcome, phase) = outcome_columns(run.trace.as_ref());
            tail += (phase == "tail") as usize;
            writeln!(w, "{seed},{},{},{outcome},{phase}", run.plan.is_some() as u8, run.certified as u8)?;
        }
        w.flush()?;
        ctx.say(format!("{} games, {tail} tail captures", rows.len()));
        return Ok(());
    }
    let field = field_of(ctx, &s.field)?;
    let run = play(&field, s)?;
    let (outcome, phase) = outcome_columns(run.trace.as_ref());
    ctx.json(
        "game.json",
        &json!({
            "x_lambda": s.x_lambda,
            "x_sigma": run.x_sigma,
            "policy": s.policy.name(),
            "plan_found": run.plan.is_some(),
            "certified": run.certified,
            "degenerate": run.degenerate,
            "outcome": outcome,
            "capture_phase": phase,
            "plan": run.plan,
            "trace": run.trace,
        }),
    )?;
    ctx.say(format!("plan found: {}, outcome: {outcome} {phase}", run.plan.is_some()));
    Ok(())
}

fn experiment(ctx: &mut Ctx<'_>, s: &ExperimentSettings) -> LabResult<()> {
    let run = ctx.runner.run_experiment(s)?;
    let res = &run.result;
    let mut w = ctx.create("results.csv")?;
    formats::write_results_csv(res, &mut w)?;
    w.flush()?;
    let mut w = ctx.create("extras.csv")?;
    formats::write_extras_csv(res, &mut w)?;
    w.flush()?;
    let mut w = ctx.create("summary.csv")?;
    formats::write_summary_csv(res, &mut w)?;
    w.flush()?;
    let mut w = ctx.create("replicas.csv")?;
    formats::write_replicas_csv(&run.outcomes, &mut w)?;
    w.flush()?;
    for r in &res.rows {
        ctx.say(format!("{} n={} estimate={} stderr={}", res.kind.name(), r.n, fmt_num(r.estimate), fmt_num(r.stderr)));
    }
    if let Some(note) = &res.fit_note {
        ctx.say(format!("no rate fit: {note}"));
    }
    Ok(())
}

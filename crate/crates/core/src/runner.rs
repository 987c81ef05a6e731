//! Runs configured experiments and writes their artifacts.
//!
//! Every run writes into one output directory and finishes with
//! `manifest.json`, which lists the produced files, the seeding scheme, the
//! fully resolved configuration and its hash. Replicas are simulated on the
//! replica farm; all files are written afterwards from the calling thread,
//! except the optional event CSV of replica 0 which is streamed by the
//! worker that owns it.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{
    validate, ExperimentConfig, ExperimentKind, LatticeExperiment, LimitExperiment, OuExperiment,
    Params, QueueExperiment,
};
use crate::ensemble::run_replicas;
use crate::error::{Error, Result};
use crate::kmc::{Event, EventKind, EventSink, ExitTimes, Kmc, KmcParams, Termination};
use crate::lattice::{Configuration, Labels, LatticeGeometry};
use crate::observables::{aggregate, current_from_exits, log_grid, ExitProfile, SnapshotRecorder};
use crate::queue::{limit_report, simulate_queue, stationary_distribution};
use crate::sde::{ou_ensemble, ou_stationary_moments, summarize, write_summary_csv};
use crate::stats::mean_se;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "RAPSIM_OUTPUT_ROOT";

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub description: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub master_seed: u64,
    pub replicas: usize,
    pub seed_scheme: &'static str,
    pub config: serde_json::Value,
    pub files: Vec<FileEntry>,
    pub notes: Vec<String>,
}

pub const SEED_SCHEME: &str =
    "replica r draws from ChaCha8 seeded with the master seed on stream r + 1";

/// Output directory: explicit config value, else `$RAPSIM_OUTPUT_ROOT/<kind>`,
/// else `output/<kind>`.
pub fn output_dir(config: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = &config.output {
        return dir.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("output"));
    root.join(config.kind.name())
}

struct Writer {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl Writer {
    fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Writer {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn create(&mut self, rel: &str, description: impl Into<String>) -> Result<(PathBuf, File)> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            description: description.into(),
        });
        Ok((path, file))
    }

    fn write<F>(&mut self, rel: &str, description: impl Into<String>, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let (path, file) = self.create(rel, description)?;
        let mut out = BufWriter::new(file);
        body(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(&path, e))
    }
}

/// Validates, runs and writes one experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Manifest> {
    let violations = validate(config);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let dir = output_dir(config);
    let mut writer = Writer::new(&dir)?;
    let mut notes = Vec::new();
    match &config.params {
        Params::Lattice(p) => run_lattice(config, p, &mut writer, &mut notes)?,
        Params::Ou(p) => run_ou(config, p, &mut writer, &mut notes)?,
        Params::Queue(p) => run_queue(config, p, &mut writer)?,
        Params::Limit(p) => run_limit(config, p, &mut writer, &mut notes)?,
    }
    let manifest = Manifest {
        kind: config.kind,
        config_hash: config.hash(),
        master_seed: config.seed,
        replicas: config.replicas,
        seed_scheme: SEED_SCHEME,
        config: serde_json::to_value(config).expect("config serializes"),
        files: writer.files.clone(),
        notes,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Streams events as CSV rows.
struct EventCsv {
    out: BufWriter<File>,
    geometry: LatticeGeometry,
    labels: Labels,
    error: Option<std::io::Error>,
}

impl EventCsv {
    fn new(file: File, geometry: &LatticeGeometry, labels: Labels) -> Self {
        let mut out = BufWriter::new(file);
        let error = writeln!(
            out,
            "t,particle_id,species,kind,from_row,from_col,to_row,to_col"
        )
        .err();
        EventCsv {
            out,
            geometry: geometry.clone(),
            labels,
            error,
        }
    }

    fn finish(mut self) -> std::io::Result<()> {
        match self.error.take() {
            Some(e) => Err(e),
            None => self.out.flush(),
        }
    }
}

impl EventSink for EventCsv {
    fn record(&mut self, e: &Event) {
        if self.error.is_some() {
            return;
        }
        let from = self.geometry.site(e.from);
        let (to_row, to_col) = e.to.map_or((-1, -1), |to| {
            let s = self.geometry.site(to);
            (s.row as i64, s.col as i64)
        });
        let kind = match e.kind {
            EventKind::Hop => "hop",
            EventKind::Exit => "exit",
        };
        if let Err(err) = writeln!(
            self.out,
            "{},{},{},{},{},{},{},{}",
            e.time,
            e.particle,
            e.species.label(self.labels),
            kind,
            from.row,
            from.col,
            to_row,
            to_col
        ) {
            self.error = Some(err);
        }
    }
}

/// One lattice parameter combination.
#[derive(Debug, Clone, Serialize)]
struct LatticeSet {
    name: String,
    epsilon: f64,
    door_width: usize,
    active: usize,
    passive: usize,
}

fn lattice_sets(p: &LatticeExperiment) -> Vec<LatticeSet> {
    let mut sets = Vec::new();
    for &epsilon in &p.epsilons {
        for &door_width in &p.door_widths {
            for &[active, passive] in &p.populations {
                let mut variants = vec![passive];
                if p.passive_free_twin && passive > 0 {
                    variants.push(0);
                }
                for passive in variants {
                    sets.push(LatticeSet {
                        name: format!("eps{epsilon}_w{door_width}_na{active}_np{passive}"),
                        epsilon,
                        door_width,
                        active,
                        passive,
                    });
                }
            }
        }
    }
    sets
}

struct ReplicaOutcome {
    exits: ExitTimes,
    termination: Termination,
    final_time: f64,
    events: u64,
    snapshots: Vec<(f64, Configuration)>,
    event_csv: Option<std::io::Result<()>>,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    master_seed: u64,
    replica: usize,
    seed_scheme: &'static str,
    set: &'a LatticeSet,
    params: &'a KmcParams,
    side: usize,
    door_columns: [usize; 2],
    odd_side: bool,
    termination: Termination,
    final_time: f64,
    events: u64,
    exits: usize,
}

fn run_lattice(
    config: &ExperimentConfig,
    p: &LatticeExperiment,
    writer: &mut Writer,
    notes: &mut Vec<String>,
) -> Result<()> {
    if p.side.is_multiple_of(2) {
        notes.push(format!("side length L = {} is even", p.side));
    }
    let mut summary = Vec::new();
    for set in lattice_sets(p) {
        let geometry = if p.strict_parity {
            LatticeGeometry::new(p.side, set.door_width)?
        } else {
            LatticeGeometry::new_relaxed(p.side, set.door_width)?
        };
        let params = KmcParams {
            epsilon: set.epsilon,
            rate_unit: p.rate_unit,
            horizon: p.horizon,
            stop: p.stop,
            drift: Default::default(),
            exits_enabled: true,
        };
        params.validate()?;
        let events_rel = format!("{}/events.csv", set.name);
        let event_file = if p.event_log {
            Some(writer.create(&events_rel, "event log of replica 0")?.1)
        } else {
            None
        };
        let event_file = std::sync::Mutex::new(event_file);

        let outcomes = run_replicas(config.seed, config.replicas, |r, rng| {
            let initial = Configuration::random(&geometry, set.active, set.passive, rng)
                .expect("validated population fits");
            let mut kmc = Kmc::new(initial.clone(), &params).expect("validated params");
            let mut exits = ExitTimes::default();
            if r != 0 {
                let termination = kmc.run(rng, &mut exits);
                return ReplicaOutcome {
                    exits,
                    termination,
                    final_time: kmc.time(),
                    events: kmc.events(),
                    snapshots: Vec::new(),
                    event_csv: None,
                };
            }
            let recorder =
                (!p.snapshots.is_empty()).then(|| SnapshotRecorder::new(&initial, &p.snapshots));
            let csv = event_file
                .lock()
                .expect("event file lock")
                .take()
                .map(|f| EventCsv::new(f, &geometry, p.labels));
            let mut sink = (exits, (recorder, csv));
            let termination = kmc.run(rng, &mut sink);
            let (exits, (recorder, csv)) = sink;
            ReplicaOutcome {
                exits,
                termination,
                final_time: kmc.time(),
                events: kmc.events(),
                snapshots: recorder.map_or_else(Vec::new, |r| r.finish(kmc.time())),
                event_csv: csv.map(EventCsv::finish),
            }
        });

        if let Some(Err(e)) = &outcomes[0].event_csv {
            return Err(Error::io(
                writer.root.join(&events_rel),
                std::io::Error::new(e.kind(), e.to_string()),
            ));
        }
        let grid_end = match p.stop {
            crate::kmc::StopRule::AtTime => p.horizon,
            crate::kmc::StopRule::AllActiveExited => outcomes
                .iter()
                .map(|o| o.final_time)
                .fold(0.0, f64::max)
                .max(p.t_min * 10.0),
        };
        let grid = log_grid(p.t_min, grid_end, p.per_decade)?;
        let series = outcomes
            .iter()
            .map(|o| {
                let times: Vec<f64> = o.exits.0.iter().map(|e| e.0).collect();
                current_from_exits(&times, &grid)
            })
            .collect::<Result<Vec<_>>>()?;
        let agg = aggregate(&series)?;
        writer.write(
            &format!("{}/current.csv", set.name),
            format!("mean active current over {} replicas", config.replicas),
            |w| agg.write_csv(w),
        )?;

        let first = &outcomes[0];
        let profile = ExitProfile::from_exits(&first.exits, set.active);
        writer.write(
            &format!("{}/exits.csv", set.name),
            "residence times of replica 0",
            |w| profile.write_exits_csv(w),
        )?;
        writer.write(
            &format!("{}/remaining.csv", set.name),
            "remaining active count of replica 0",
            |w| profile.write_remaining_csv(w),
        )?;
        writer.write(
            &format!("{}/replicas.csv", set.name),
            "per-replica termination, final time and exits",
            |w| {
                writeln!(
                    w,
                    "replica,termination,final_time,events,exits,mean_residence"
                )?;
                for (r, o) in outcomes.iter().enumerate() {
                    let prof = ExitProfile::from_exits(&o.exits, set.active);
                    let mean = prof
                        .mean_residence()
                        .map_or(String::new(), |m| m.to_string());
                    writeln!(
                        w,
                        "{r},{},{},{},{},{mean}",
                        termination_name(o.termination),
                        o.final_time,
                        o.events,
                        o.exits.0.len()
                    )?;
                }
                Ok(())
            },
        )?;
        for (k, (t, snap)) in first.snapshots.iter().enumerate() {
            let text = snap.snapshot(*t);
            writer.write(
                &format!("{}/snapshots/snap_{k:03}.txt", set.name),
                format!("replica 0 at t = {t}"),
                |w| w.write_all(text.as_bytes()),
            )?;
        }
        let skipped = p
            .snapshots
            .iter()
            .filter(|&&t| t > first.final_time)
            .count();
        if skipped > 0 {
            notes.push(format!(
                "{}: {skipped} snapshot time(s) after the end of replica 0 (t = {})",
                set.name, first.final_time
            ));
        }
        let cols = geometry.door_columns();
        let meta = RunMetadata {
            master_seed: config.seed,
            replica: 0,
            seed_scheme: SEED_SCHEME,
            set: &set,
            params: &params,
            side: geometry.side(),
            door_columns: [*cols.start(), *cols.end()],
            odd_side: geometry.is_odd(),
            termination: first.termination,
            final_time: first.final_time,
            events: first.events,
            exits: first.exits.0.len(),
        };
        let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        writer.write(
            &format!("{}/run.json", set.name),
            "run metadata of replica 0",
            |w| writeln!(w, "{json}"),
        )?;
        let late = agg.times.len() - 1;
        summary.push((set.clone(), agg.mean[late], agg.se[late], agg.times[late]));
    }
    writer.write("sets.csv", "one row per parameter set", |w| {
        writeln!(
            w,
            "set,epsilon,door_width,active,passive,t_last,current_last,se_last"
        )?;
        for (s, m, se, t) in &summary {
            writeln!(
                w,
                "{},{},{},{},{},{t},{m},{se}",
                s.name, s.epsilon, s.door_width, s.active, s.passive
            )?;
        }
        Ok(())
    })
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Horizon => "horizon",
        Termination::AllActiveExited => "all-active-exited",
        Termination::Frozen => "frozen",
    }
}

fn run_ou(
    config: &ExperimentConfig,
    p: &OuExperiment,
    writer: &mut Writer,
    notes: &mut Vec<String>,
) -> Result<()> {
    let params = p.ou_params();
    let steps = p.steps();
    let paths = ou_ensemble(&params, p.dt, steps, config.replicas, config.seed)?;
    let rows = summarize(&paths, p.stride)?;
    writer.write("summary.csv", "ensemble statistics per time", |w| {
        write_summary_csv(w, &rows)
    })?;
    for (i, path) in paths.iter().take(p.write_paths).enumerate() {
        writer.write(
            &format!("paths/path_{i:04}.csv"),
            format!("path {i}"),
            |w| path.write_csv(w, p.stride),
        )?;
    }
    let (mean, var) = ou_stationary_moments(&params);
    notes.push(format!(
        "free stationary mean μγ = {mean}, variance σ²γ/2 = {var}"
    ));
    if params.boundary.is_some() {
        let touched = paths
            .iter()
            .filter(|q| q.local_time.last().is_some_and(|&l| l > 0.0))
            .count();
        notes.push(format!(
            "{touched} of {} paths reflected at least once",
            paths.len()
        ));
        if p.twin_free {
            let free = ou_ensemble(
                &params.unreflected(),
                p.dt,
                steps,
                config.replicas,
                config.seed,
            )?;
            let rows = summarize(&free, p.stride)?;
            writer.write("summary_free.csv", "unreflected twin ensemble", |w| {
                write_summary_csv(w, &rows)
            })?;
            for (i, path) in free.iter().take(p.write_paths).enumerate() {
                writer.write(
                    &format!("paths/free_{i:04}.csv"),
                    format!("unreflected twin of path {i}"),
                    |w| path.write_csv(w, p.stride),
                )?;
            }
        }
    }
    Ok(())
}

fn run_queue(config: &ExperimentConfig, p: &QueueExperiment, writer: &mut Writer) -> Result<()> {
    let params = p.queue_params();
    let traces = run_replicas(config.seed, config.replicas, |_, rng| {
        simulate_queue(&params, rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    writer.write("trace.csv", "jump trace of replica 0", |w| {
        traces[0].write_csv(w)
    })?;
    let pi = stationary_distribution(&params)?;
    let fractions: Vec<Vec<f64>> = traces
        .iter()
        .map(|t| t.time_fractions(params.capacity))
        .collect();
    writer.write(
        "occupancy.csv",
        "time-averaged occupancy vs stationary law",
        |w| {
            writeln!(w, "n,empirical,se,stationary")?;
            for n in 0..=params.capacity {
                let column: Vec<f64> = fractions.iter().map(|f| f[n]).collect();
                let (m, se) = mean_se(&column);
                writeln!(w, "{n},{m},{se},{}", pi[n])?;
            }
            Ok(())
        },
    )
}

fn run_limit(
    config: &ExperimentConfig,
    p: &LimitExperiment,
    writer: &mut Writer,
    notes: &mut Vec<String>,
) -> Result<()> {
    let report = limit_report(&p.alphas, p.t, config.replicas, config.seed)?;
    writer.write(
        "limit_report.csv",
        "KS distance to |N(0, t)| per scale",
        |w| report.write_csv(w),
    )?;
    notes.push(format!(
        "KS distance strictly decreasing in alpha: {}",
        report.decreasing
    ));
    Ok(())
}

//! Currents, exit profiles and snapshots computed from KMC runs.

use crate::error::{Error, Result};
use crate::kmc::{EventKind, EventLog, ExitTimes};
use crate::lattice::{Configuration, Species};

/// Log-spaced grid from `t_min` to `t_max` with `per_decade` points per
/// decade; both ends are included.
pub fn log_grid(t_min: f64, t_max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) || per_decade == 0 {
        return Err(Error::Grid(format!(
            "need 0 < t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    let decades = (t_max / t_min).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    let mut grid: Vec<f64> = (0..n)
        .map(|i| t_min * 10f64.powf(i as f64 / per_decade as f64))
        .take_while(|&t| t < t_max)
        .collect();
    grid.push(t_max);
    Ok(grid)
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Grid("empty sample grid".into()));
    }
    if samples[0] <= 0.0 || samples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid(
            "sample times must be positive and increasing".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentSeries {
    pub species: Species,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Outgoing current `(# exits in (0, t]) / t` from sorted exit times.
pub fn current_from_exits(exit_times: &[f64], samples: &[f64]) -> Result<CurrentSeries> {
    check_samples(samples)?;
    debug_assert!(exit_times.windows(2).all(|w| w[0] <= w[1]));
    let mut k = 0;
    let values = samples
        .iter()
        .map(|&t| {
            while k < exit_times.len() && exit_times[k] <= t {
                k += 1;
            }
            k as f64 / t
        })
        .collect();
    Ok(CurrentSeries {
        species: Species::Active,
        times: samples.to_vec(),
        values,
    })
}

pub fn current(log: &EventLog, samples: &[f64]) -> Result<CurrentSeries> {
    let exits: Vec<f64> = log
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Exit)
        .map(|e| e.time)
        .collect();
    current_from_exits(&exits, samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitProfile {
    /// `(particle id, residence time)` in exit order.
    pub residence: Vec<(u32, f64)>,
    /// Remaining active count, starting with `(0, N_A)` and stepping down at
    /// every exit.
    pub remaining: Vec<(f64, usize)>,
    /// Time of the last exit if every active particle left.
    pub evacuation_time: Option<f64>,
}

impl ExitProfile {
    pub fn from_exits(exits: &ExitTimes, initial_active: usize) -> Self {
        let residence = exits.0.iter().map(|&(t, id)| (id, t)).collect::<Vec<_>>();
        let mut remaining = Vec::with_capacity(residence.len() + 1);
        remaining.push((0.0, initial_active));
        for (k, &(t, _)) in exits.0.iter().enumerate() {
            remaining.push((t, initial_active - k - 1));
        }
        let evacuation_time = if initial_active > 0 && residence.len() == initial_active {
            residence.last().map(|r| r.1)
        } else {
            None
        };
        ExitProfile {
            residence,
            remaining,
            evacuation_time,
        }
    }

    /// Remaining active count at time `t` (right-continuous).
    pub fn remaining_at(&self, t: f64) -> usize {
        let k = self.remaining.partition_point(|&(s, _)| s <= t);
        self.remaining[k.saturating_sub(1)].1
    }

    pub fn mean_residence(&self) -> Option<f64> {
        if self.residence.is_empty() {
            None
        } else {
            Some(self.residence.iter().map(|r| r.1).sum::<f64>() / self.residence.len() as f64)
        }
    }

    pub fn write_exits_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "particle_id,residence_time")?;
        for (id, t) in &self.residence {
            writeln!(out, "{id},{t}")?;
        }
        Ok(())
    }

    pub fn write_remaining_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "t,count")?;
        for (t, n) in &self.remaining {
            writeln!(out, "{t},{n}")?;
        }
        Ok(())
    }
}

pub fn exit_profile(log: &EventLog) -> ExitProfile {
    let exits = ExitTimes(
        log.events
            .iter()
            .filter(|e| e.kind == EventKind::Exit)
            .map(|e| (e.time, e.particle))
            .collect(),
    );
    ExitProfile::from_exits(&exits, log.initial.counts().0)
}

/// Pointwise mean, standard error and replica count over a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub n: usize,
}

impl Aggregate {
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "t,mean,se,n")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{},{},{},{}",
                self.times[i], self.mean[i], self.se[i], self.n
            )?;
        }
        Ok(())
    }

    /// Index of the grid point closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        (0..self.times.len())
            .min_by(|&a, &b| {
                (self.times[a] - t)
                    .abs()
                    .total_cmp(&(self.times[b] - t).abs())
            })
            .unwrap_or(0)
    }
}

pub fn aggregate(series: &[CurrentSeries]) -> Result<Aggregate> {
    let Some(first) = series.first() else {
        return Err(Error::Grid("no replicas to aggregate".into()));
    };
    if series.iter().any(|s| s.times != first.times) {
        return Err(Error::Grid("replica sample grids differ".into()));
    }
    let n = series.len();
    let mut mean = Vec::with_capacity(first.times.len());
    let mut se = Vec::with_capacity(first.times.len());
    let mut column = vec![0.0; n];
    for i in 0..first.times.len() {
        for (c, s) in column.iter_mut().zip(series) {
            *c = s.values[i];
        }
        // Sorting makes the sums independent of replica order.
        column.sort_by(f64::total_cmp);
        let (m, e) = crate::stats::mean_se(&column);
        mean.push(m);
        se.push(e);
    }
    Ok(Aggregate {
        times: first.times.clone(),
        mean,
        se,
        n,
    })
}

/// Configurations at each dump time, reconstructed by replaying the log.
pub fn snapshot_series(log: &EventLog, dump_times: &[f64]) -> Result<Vec<Configuration>> {
    if let Some(&bad) = dump_times
        .iter()
        .find(|&&t| !(0.0..=log.final_time).contains(&t))
    {
        return Err(Error::Grid(format!(
            "dump time {bad} outside [0, {}]",
            log.final_time
        )));
    }
    let mut order: Vec<usize> = (0..dump_times.len()).collect();
    order.sort_by(|&a, &b| dump_times[a].total_cmp(&dump_times[b]));
    let mut out = vec![None; dump_times.len()];
    let mut config = log.initial.clone();
    let mut events = log.events.iter().peekable();
    for i in order {
        while let Some(e) = events.next_if(|e| e.time <= dump_times[i]) {
            apply_event(&mut config, e);
        }
        out[i] = Some(config.clone());
    }
    Ok(out
        .into_iter()
        .map(|c| c.expect("every dump filled"))
        .collect())
}

/// Final configuration obtained by replaying every event.
pub fn replay(log: &EventLog) -> Configuration {
    let mut config = log.initial.clone();
    for e in &log.events {
        apply_event(&mut config, e);
    }
    config
}

fn apply_event(config: &mut Configuration, e: &crate::kmc::Event) {
    match e.to {
        Some(to) => config.hop(e.particle, to),
        None => config.remove(e.particle),
    }
}

/// Captures configurations at dump times while a run is in progress, so
/// snapshots do not require keeping the whole event log.
#[derive(Debug, Clone)]
pub struct SnapshotRecorder {
    config: Configuration,
    dumps: Vec<f64>,
    next: usize,
    taken: Vec<(f64, Configuration)>,
}

impl SnapshotRecorder {
    pub fn new(initial: &Configuration, dump_times: &[f64]) -> Self {
        let mut dumps = dump_times.to_vec();
        dumps.sort_by(f64::total_cmp);
        SnapshotRecorder {
            config: initial.clone(),
            dumps,
            next: 0,
            taken: Vec::new(),
        }
    }

    /// Snapshots in increasing time; dump times past `final_time` are dropped.
    pub fn finish(mut self, final_time: f64) -> Vec<(f64, Configuration)> {
        while self.next < self.dumps.len() && self.dumps[self.next] <= final_time {
            self.taken
                .push((self.dumps[self.next], self.config.clone()));
            self.next += 1;
        }
        self.taken
    }
}

impl crate::kmc::EventSink for SnapshotRecorder {
    fn record(&mut self, event: &crate::kmc::Event) {
        while self.next < self.dumps.len() && self.dumps[self.next] < event.time {
            self.taken
                .push((self.dumps[self.next], self.config.clone()));
            self.next += 1;
        }
        apply_event(&mut self.config, event);
    }
}

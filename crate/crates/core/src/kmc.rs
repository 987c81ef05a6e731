//! Exact kinetic Monte Carlo for the two-species exclusion room.
//!
//! Rates (in units of `rate_unit`): a passive particle hops to each empty
//! nearest neighbour at rate 1. An active particle hops left/right at rate 1,
//! up at `1 + ε`, down at `1 − ε`, and from a door site leaves the room at
//! rate `1 + ε`. Walls and occupied sites block moves.
//!
//! The move table keeps the five move rates of every particle plus a binary
//! sum tree over per-particle totals. After an event only the mover and the
//! occupants of the sites adjacent to its source and destination are
//! recomputed, so one step costs `O(log N)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Configuration, Direction, LatticeGeometry, Site, Species, NONE};
use crate::rng::exponential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    AtTime,
    AllActiveExited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Drift {
    /// Drift points straight up, towards the door row.
    #[default]
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmcParams {
    pub epsilon: f64,
    pub rate_unit: f64,
    pub horizon: f64,
    pub stop: StopRule,
    pub drift: Drift,
    /// When false the door is closed: active particles never leave.
    pub exits_enabled: bool,
}

impl KmcParams {
    pub fn new(epsilon: f64, horizon: f64, stop: StopRule) -> Result<Self> {
        let p = KmcParams {
            epsilon,
            rate_unit: 1.0,
            horizon,
            stop,
            drift: Drift::Vertical,
            exits_enabled: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Param(format!(
                "drift ε = {} must lie in [0, 1]",
                self.epsilon
            )));
        }
        if !(self.rate_unit > 0.0 && self.rate_unit.is_finite()) {
            return Err(Error::Param(format!(
                "rate unit {} must be positive",
                self.rate_unit
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Param(format!(
                "horizon {} must be positive",
                self.horizon
            )));
        }
        Ok(())
    }
}

/// Rates of the five moves (`Up, Down, Left, Right, Exit`) of one particle.
fn slot_rates(config: &Configuration, params: &KmcParams, id: u32) -> [f64; 5] {
    let Some(p) = config.particle(id) else {
        return [0.0; 5];
    };
    let geometry = config.geometry();
    let unit = params.rate_unit;
    let open = |dir| {
        let n = geometry.step(p.site, dir);
        n != NONE && config.eta_at(n) == 0
    };
    let mut r = [0.0; 5];
    match p.species {
        Species::Passive => {
            for d in Direction::HOPS {
                if open(d) {
                    r[d.slot()] = unit;
                }
            }
        }
        Species::Active => {
            let eps = params.epsilon;
            let Drift::Vertical = params.drift;
            if open(Direction::Up) {
                r[0] = unit * (1.0 + eps);
            }
            if open(Direction::Down) {
                r[1] = unit * (1.0 - eps);
            }
            if open(Direction::Left) {
                r[2] = unit;
            }
            if open(Direction::Right) {
                r[3] = unit;
            }
            if params.exits_enabled && geometry.is_door_index(p.site) {
                r[4] = unit * (1.0 + eps);
            }
        }
    }
    r
}

/// Admissible moves of one particle with their rates; zero-rate moves are
/// omitted.
pub fn move_rates(
    config: &Configuration,
    params: &KmcParams,
    particle: u32,
) -> Result<Vec<(Direction, f64)>> {
    if config.particle(particle).is_none() {
        return Err(Error::UnknownParticle(particle));
    }
    let r = slot_rates(config, params, particle);
    Ok(Direction::ALL
        .iter()
        .filter(|d| r[d.slot()] > 0.0)
        .map(|&d| (d, r[d.slot()]))
        .collect())
}

/// Binary sum tree over non-negative weights; internal nodes are always
/// recomputed as `left + right`, so an incrementally updated tree is
/// bit-identical to one built from the same leaves.
#[derive(Debug, Clone, PartialEq)]
struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(weights: &[f64]) -> Self {
        let leaves = weights.len().next_power_of_two().max(1);
        let mut nodes = vec![0.0; 2 * leaves];
        nodes[leaves..leaves + weights.len()].copy_from_slice(weights);
        for i in (1..leaves).rev() {
            nodes[i] = nodes[2 * i] + nodes[2 * i + 1];
        }
        SumTree { leaves, nodes }
    }

    #[inline]
    fn total(&self) -> f64 {
        self.nodes[1]
    }

    #[inline]
    fn update(&mut self, i: usize, w: f64) {
        let mut k = self.leaves + i;
        self.nodes[k] = w;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Leaf whose cumulative interval contains `u ∈ [0, total)`, plus the
    /// residual offset inside that leaf.
    #[inline]
    fn find(&self, mut u: f64) -> (usize, f64) {
        let mut k = 1;
        while k < self.leaves {
            let left = self.nodes[2 * k];
            if u < left || self.nodes[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        (k - self.leaves, u)
    }
}

/// Per-particle move rates and their running total.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveTable {
    params: KmcParams,
    rates: Vec<[f64; 5]>,
    tree: SumTree,
}

impl MoveTable {
    pub fn build(config: &Configuration, params: &KmcParams) -> Self {
        let rates: Vec<[f64; 5]> = (0..config.id_count() as u32)
            .map(|id| slot_rates(config, params, id))
            .collect();
        let totals: Vec<f64> = rates.iter().map(|r| r.iter().sum()).collect();
        MoveTable {
            params: params.clone(),
            tree: SumTree::new(&totals),
            rates,
        }
    }

    pub fn params(&self) -> &KmcParams {
        &self.params
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    /// Every admissible move as `(particle, direction, rate)`.
    pub fn moves(&self) -> impl Iterator<Item = (u32, Direction, f64)> + '_ {
        self.rates.iter().enumerate().flat_map(|(id, r)| {
            Direction::ALL
                .iter()
                .filter(move |d| r[d.slot()] > 0.0)
                .map(move |&d| (id as u32, d, r[d.slot()]))
        })
    }

    /// Sum of the listed rates, recomputed from scratch.
    pub fn recomputed_total(&self) -> f64 {
        self.rates.iter().flat_map(|r| r.iter()).sum()
    }

    fn refresh(&mut self, config: &Configuration, id: u32) {
        let r = slot_rates(config, &self.params, id);
        self.rates[id as usize] = r;
        self.tree.update(id as usize, r.iter().sum());
    }

    fn refresh_around(&mut self, config: &Configuration, site: u32) {
        let geometry = config.geometry();
        for d in Direction::HOPS {
            let n = geometry.step(site, d);
            if n != NONE {
                if let Some(id) = occupant_index(config, n) {
                    self.refresh(config, id);
                }
            }
        }
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, Direction) {
        let total = self.tree.total();
        let (id, mut u) = self.tree.find(rng.gen::<f64>() * total);
        let r = &self.rates[id];
        let mut last = None;
        for d in Direction::ALL {
            let w = r[d.slot()];
            if w > 0.0 {
                if u < w {
                    return (id as u32, d);
                }
                u -= w;
                last = Some(d);
            }
        }
        // Rounding pushed u past the last positive rate of this particle.
        (id as u32, last.expect("selected particle has a move"))
    }
}

#[inline]
fn occupant_index(config: &Configuration, index: u32) -> Option<u32> {
    let site = config.geometry().site(index);
    config.occupant(site).ok().flatten()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Hop,
    Exit,
}

/// One KMC event. `to` is `None` for exits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub particle: u32,
    pub species: Species,
    pub kind: EventKind,
    pub from: u32,
    pub to: Option<u32>,
}

/// Performs one KMC step: draws the waiting time and the move, applies it to
/// `config` and refreshes the affected table entries. `time` is the current
/// clock; the returned event carries `time + τ`.
pub fn kmc_step<R: Rng + ?Sized>(
    config: &mut Configuration,
    table: &mut MoveTable,
    time: f64,
    rng: &mut R,
) -> Result<(Event, f64)> {
    let tau = draw_waiting_time(table, rng)?;
    let (id, dir) = table.pick(rng);
    Ok((apply(config, table, id, dir, time + tau), tau))
}

fn draw_waiting_time<R: Rng + ?Sized>(table: &MoveTable, rng: &mut R) -> Result<f64> {
    let total = table.total_rate();
    if !(total > 0.0) {
        return Err(Error::Frozen);
    }
    Ok(exponential(rng, total))
}

fn apply(
    config: &mut Configuration,
    table: &mut MoveTable,
    id: u32,
    dir: Direction,
    time: f64,
) -> Event {
    let p = config
        .particle(id)
        .expect("table only lists present particles");
    let to = match dir {
        Direction::Exit => {
            config.remove(id);
            None
        }
        hop => {
            let to = config.geometry().step(p.site, hop);
            config.hop(id, to);
            Some(to)
        }
    };
    table.refresh(config, id);
    table.refresh_around(config, p.site);
    if let Some(to) = to {
        table.refresh_around(config, to);
    }
    Event {
        time,
        particle: id,
        species: p.species,
        kind: if to.is_some() {
            EventKind::Hop
        } else {
            EventKind::Exit
        },
        from: p.site,
        to,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Horizon,
    AllActiveExited,
    Frozen,
}

/// Receives events as the simulation produces them.
pub trait EventSink {
    fn record(&mut self, event: &Event);
}

/// Keeps only exit events as `(time, particle)`.
#[derive(Debug, Clone, Default)]
pub struct ExitTimes(pub Vec<(f64, u32)>);

impl EventSink for ExitTimes {
    fn record(&mut self, event: &Event) {
        if event.kind == EventKind::Exit {
            self.0.push((event.time, event.particle));
        }
    }
}

impl<A: EventSink, B: EventSink> EventSink for (A, B) {
    fn record(&mut self, event: &Event) {
        self.0.record(event);
        self.1.record(event);
    }
}

impl<S: EventSink> EventSink for Option<S> {
    fn record(&mut self, event: &Event) {
        if let Some(s) = self {
            s.record(event);
        }
    }
}

impl EventSink for Vec<Event> {
    fn record(&mut self, event: &Event) {
        self.push(*event);
    }
}

/// A running simulation: configuration, move table and clock.
#[derive(Debug, Clone)]
pub struct Kmc {
    config: Configuration,
    table: MoveTable,
    time: f64,
    initial_active: usize,
    initial_passive: usize,
    exits: usize,
    events: u64,
}

impl Kmc {
    pub fn new(initial: Configuration, params: &KmcParams) -> Result<Self> {
        params.validate()?;
        let (a, p) = initial.counts();
        Ok(Kmc {
            table: MoveTable::build(&initial, params),
            config: initial,
            time: 0.0,
            initial_active: a,
            initial_passive: p,
            exits: 0,
            events: 0,
        })
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn table(&self) -> &MoveTable {
        &self.table
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn exits(&self) -> usize {
        self.exits
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// Advances by one event unless it would land beyond the horizon, in
    /// which case the clock is set to the horizon and `None` is returned.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<Event>> {
        let tau = draw_waiting_time(&self.table, rng)?;
        let horizon = self.table.params.horizon;
        if self.time + tau > horizon {
            self.time = horizon;
            return Ok(None);
        }
        let (id, dir) = self.table.pick(rng);
        let event = apply(&mut self.config, &mut self.table, id, dir, self.time + tau);
        debug_assert!(event.time > self.time, "event times must increase");
        self.time = event.time;
        self.events += 1;
        if event.kind == EventKind::Exit {
            self.exits += 1;
        }
        debug_assert_eq!(
            self.config.counts(),
            (self.initial_active - self.exits, self.initial_passive),
            "conservation violated"
        );
        Ok(Some(event))
    }

    /// Checks exclusion, conservation and incremental-vs-rebuild equality of
    /// the move table.
    pub fn audit(&self) -> std::result::Result<(), String> {
        self.config.check()?;
        let (a, p) = self.config.counts();
        if a + self.exits != self.initial_active || p != self.initial_passive {
            return Err(format!(
                "conservation: n_A={a} exits={} N_A={} n_P={p} N_P={}",
                self.exits, self.initial_active, self.initial_passive
            ));
        }
        let rebuilt = MoveTable::build(&self.config, &self.table.params);
        if rebuilt != self.table {
            return Err("incremental move table differs from rebuild".into());
        }
        Ok(())
    }

    /// Runs until the stop rule, the horizon, or a frozen state.
    pub fn run<R: Rng + ?Sized, S: EventSink>(&mut self, rng: &mut R, sink: &mut S) -> Termination {
        let stop = self.table.params.stop;
        loop {
            if stop == StopRule::AllActiveExited && self.config.counts().0 == 0 {
                return Termination::AllActiveExited;
            }
            match self.step(rng) {
                Ok(Some(event)) => sink.record(&event),
                Ok(None) => return Termination::Horizon,
                Err(_) => return Termination::Frozen,
            }
        }
    }
}

/// Complete record of one run.
#[derive(Debug, Clone)]
pub struct EventLog {
    pub initial: Configuration,
    pub final_state: Configuration,
    pub events: Vec<Event>,
    pub final_time: f64,
    pub termination: Termination,
    pub params: KmcParams,
    pub seed: Option<u64>,
}

impl EventLog {
    pub fn geometry(&self) -> &LatticeGeometry {
        self.initial.geometry()
    }

    /// Writes `t,particle_id,species,kind,from_row,from_col,to_row,to_col`;
    /// exits carry `-1` in both `to_*` columns.
    pub fn write_csv<W: std::io::Write>(
        &self,
        out: &mut W,
        labels: crate::lattice::Labels,
    ) -> std::io::Result<()> {
        writeln!(
            out,
            "t,particle_id,species,kind,from_row,from_col,to_row,to_col"
        )?;
        let g = self.geometry();
        for e in &self.events {
            let from: Site = g.site(e.from);
            let (to_row, to_col) = match e.to {
                Some(to) => {
                    let s = g.site(to);
                    (s.row as i64, s.col as i64)
                }
                None => (-1, -1),
            };
            let kind = match e.kind {
                EventKind::Hop => "hop",
                EventKind::Exit => "exit",
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                e.time,
                e.particle,
                e.species.label(labels),
                kind,
                from.row,
                from.col,
                to_row,
                to_col
            )?;
        }
        Ok(())
    }
}

/// Runs the KMC chain from `initial` until the stop rule fires, the horizon
/// is reached or no move is left.
pub fn simulate<R: Rng + ?Sized>(
    initial: &Configuration,
    params: &KmcParams,
    rng: &mut R,
) -> Result<EventLog> {
    let mut kmc = Kmc::new(initial.clone(), params)?;
    let mut events = Vec::new();
    let termination = kmc.run(rng, &mut events);
    Ok(EventLog {
        initial: initial.clone(),
        final_time: kmc.time(),
        final_state: kmc.config,
        events,
        termination,
        params: params.clone(),
        seed: None,
    })
}

/// Runs the chain keeping only exit times; returns them with the termination
/// status and the final clock.
pub fn simulate_exits<R: Rng + ?Sized>(
    initial: Configuration,
    params: &KmcParams,
    rng: &mut R,
) -> Result<(ExitTimes, Termination, f64)> {
    let mut kmc = Kmc::new(initial, params)?;
    let mut exits = ExitTimes::default();
    let termination = kmc.run(rng, &mut exits);
    Ok((exits, termination, kmc.time()))
}

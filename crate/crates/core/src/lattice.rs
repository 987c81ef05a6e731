//! Square room with a single door on the top row, and exclusion configurations.
//!
//! Sites are addressed as 1-based `(row, col)` with row `L` the door row.
//! Internally a site is the dense index `(row − 1)·L + (col − 1)`.

use std::fmt;
use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub row: usize,
    pub col: usize,
}

impl Site {
    pub const fn new(row: usize, col: usize) -> Self {
        Site { row, col }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
    Exit,
}

impl Direction {
    pub const ALL: [Direction; 5] = [
        Direction::Up,
        Direction::Down,
        Direction::Left,
        Direction::Right,
        Direction::Exit,
    ];
    pub const HOPS: [Direction; 4] = [
        Direction::Up,
        Direction::Down,
        Direction::Left,
        Direction::Right,
    ];

    pub(crate) const fn slot(self) -> usize {
        match self {
            Direction::Up => 0,
            Direction::Down => 1,
            Direction::Left => 2,
            Direction::Right => 3,
            Direction::Exit => 4,
        }
    }
}

/// Particle species. `Active` particles drift towards the door and may leave;
/// `Passive` ones diffuse symmetrically and stay in the room forever.
///
/// The ion-channel reading relabels them as Na+ and Cl−; the labels are for
/// display only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    Active,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Labels {
    #[default]
    Crowd,
    Ions,
}

impl Species {
    pub const fn eta(self) -> i8 {
        match self {
            Species::Active => 1,
            Species::Passive => -1,
        }
    }

    pub fn from_eta(eta: i8) -> Option<Species> {
        match eta {
            1 => Some(Species::Active),
            -1 => Some(Species::Passive),
            _ => None,
        }
    }

    pub const fn label(self, labels: Labels) -> &'static str {
        match (self, labels) {
            (Species::Active, Labels::Crowd) => "active",
            (Species::Passive, Labels::Crowd) => "passive",
            (Species::Active, Labels::Ions) => "Na+",
            (Species::Passive, Labels::Ions) => "Cl-",
        }
    }

    pub fn from_label(label: &str) -> Option<Species> {
        match label {
            "active" | "Na+" => Some(Species::Active),
            "passive" | "Cl-" => Some(Species::Passive),
            _ => None,
        }
    }

    const fn glyph(self) -> char {
        match self {
            Species::Active => 'A',
            Species::Passive => 'P',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    side: usize,
    door_width: usize,
    door_first: usize,
}

impl LatticeGeometry {
    /// Builds an `L×L` room with a centred door of `door_width` sites on the
    /// top row. `L` must be odd.
    pub fn new(side: usize, door_width: usize) -> Result<Self> {
        if side.is_multiple_of(2) {
            return Err(Error::Geometry(format!("side length {side} must be odd")));
        }
        Self::new_relaxed(side, door_width)
    }

    /// Same as [`LatticeGeometry::new`] but accepts even side lengths.
    pub fn new_relaxed(side: usize, door_width: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::Geometry("side length must be positive".into()));
        }
        if side > (1 << 15) {
            return Err(Error::Geometry(format!("side length {side} is too large")));
        }
        if door_width == 0 || door_width > side {
            return Err(Error::Geometry(format!(
                "door width {door_width} must lie in [1, {side}]"
            )));
        }
        // Left margin takes the extra site when the margins cannot be equal.
        let left_margin = (side - door_width).div_ceil(2);
        Ok(LatticeGeometry {
            side,
            door_width,
            door_first: left_margin + 1,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn door_width(&self) -> usize {
        self.door_width
    }

    pub fn is_odd(&self) -> bool {
        self.side % 2 == 1
    }

    pub fn sites(&self) -> usize {
        self.side * self.side
    }

    /// Inclusive column range of the door.
    pub fn door_columns(&self) -> std::ops::RangeInclusive<usize> {
        self.door_first..=self.door_first + self.door_width - 1
    }

    pub fn contains(&self, site: Site) -> bool {
        (1..=self.side).contains(&site.row) && (1..=self.side).contains(&site.col)
    }

    pub fn is_door(&self, site: Site) -> bool {
        site.row == self.side && self.door_columns().contains(&site.col)
    }

    pub fn index(&self, site: Site) -> Result<u32> {
        if !self.contains(site) {
            return Err(Error::SiteOutside {
                row: site.row as i64,
                col: site.col as i64,
                side: self.side,
            });
        }
        Ok(((site.row - 1) * self.side + site.col - 1) as u32)
    }

    pub fn site(&self, index: u32) -> Site {
        let i = index as usize;
        Site::new(i / self.side + 1, i % self.side + 1)
    }

    pub(crate) fn is_door_index(&self, index: u32) -> bool {
        let i = index as usize;
        i / self.side + 1 == self.side && self.door_columns().contains(&(i % self.side + 1))
    }

    /// Neighbour of `index` in `dir`, or [`NONE`] across a wall (or for `Exit`).
    #[inline]
    pub(crate) fn step(&self, index: u32, dir: Direction) -> u32 {
        let i = index as usize;
        let (row, col) = (i / self.side, i % self.side);
        match dir {
            Direction::Up if row + 1 < self.side => index + self.side as u32,
            Direction::Down if row > 0 => index - self.side as u32,
            Direction::Left if col > 0 => index - 1,
            Direction::Right if col + 1 < self.side => index + 1,
            _ => NONE,
        }
    }

    /// All in-lattice sites at Manhattan distance one.
    pub fn neighbors(&self, site: Site) -> Result<Vec<Site>> {
        let index = self.index(site)?;
        Ok(Direction::HOPS
            .iter()
            .map(|&d| self.step(index, d))
            .filter(|&n| n != NONE)
            .map(|n| self.site(n))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Particle {
    pub site: u32,
    pub species: Species,
}

/// Occupancy field `η ∈ {−1, 0, +1}^Λ` together with the particle registry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    geometry: LatticeGeometry,
    eta: Vec<i8>,
    occupant: Vec<u32>,
    particles: Vec<Option<Particle>>,
    n_active: usize,
    n_passive: usize,
}

impl Configuration {
    pub fn empty(geometry: &LatticeGeometry) -> Self {
        let n = geometry.sites();
        Configuration {
            geometry: geometry.clone(),
            eta: vec![0; n],
            occupant: vec![NONE; n],
            particles: Vec::new(),
            n_active: 0,
            n_passive: 0,
        }
    }

    /// Places `n_active + n_passive` particles on distinct uniformly chosen
    /// sites. Ids `0..n_active` are active, the rest passive.
    pub fn random<R: Rng + ?Sized>(
        geometry: &LatticeGeometry,
        n_active: usize,
        n_passive: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let total = n_active + n_passive;
        if total > geometry.sites() {
            return Err(Error::Overfull {
                requested: total,
                sites: geometry.sites(),
            });
        }
        let mut config = Configuration::empty(geometry);
        let chosen = index::sample(rng, geometry.sites(), total);
        for (k, site) in chosen.into_iter().enumerate() {
            let species = if k < n_active {
                Species::Active
            } else {
                Species::Passive
            };
            config.insert(site as u32, species);
        }
        Ok(config)
    }

    /// Builds a configuration from explicit site lists; ids follow the order
    /// actives first, then passives.
    pub fn from_sites(
        geometry: &LatticeGeometry,
        actives: &[Site],
        passives: &[Site],
    ) -> Result<Self> {
        let mut config = Configuration::empty(geometry);
        for (sites, species) in [(actives, Species::Active), (passives, Species::Passive)] {
            for &site in sites {
                let index = geometry.index(site)?;
                if config.eta[index as usize] != 0 {
                    return Err(Error::Geometry(format!("site {site} occupied twice")));
                }
                config.insert(index, species);
            }
        }
        Ok(config)
    }

    fn insert(&mut self, site: u32, species: Species) {
        let id = self.particles.len() as u32;
        self.eta[site as usize] = species.eta();
        self.occupant[site as usize] = id;
        self.particles.push(Some(Particle { site, species }));
        match species {
            Species::Active => self.n_active += 1,
            Species::Passive => self.n_passive += 1,
        }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    /// Incrementally maintained `(n_A, n_P)`.
    pub fn counts(&self) -> (usize, usize) {
        (self.n_active, self.n_passive)
    }

    /// `(Σ δ(1, η_x), Σ δ(−1, η_x))` recomputed from the occupancy field.
    pub fn recount(&self) -> (usize, usize) {
        self.eta.iter().fold((0, 0), |(a, p), &e| match e {
            1 => (a + 1, p),
            -1 => (a, p + 1),
            _ => (a, p),
        })
    }

    pub fn eta(&self, site: Site) -> Result<i8> {
        Ok(self.eta[self.geometry.index(site)? as usize])
    }

    #[inline]
    pub(crate) fn eta_at(&self, index: u32) -> i8 {
        self.eta[index as usize]
    }

    pub fn occupancy(&self) -> &[i8] {
        &self.eta
    }

    /// Number of ids ever issued (including exited particles).
    pub fn id_count(&self) -> usize {
        self.particles.len()
    }

    pub fn particle(&self, id: u32) -> Option<Particle> {
        self.particles.get(id as usize).copied().flatten()
    }

    pub fn occupant(&self, site: Site) -> Result<Option<u32>> {
        let o = self.occupant[self.geometry.index(site)? as usize];
        Ok((o != NONE).then_some(o))
    }

    /// Present particles as `(id, particle)`.
    pub fn particles(&self) -> impl Iterator<Item = (u32, Particle)> + '_ {
        self.particles
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (i as u32, p)))
    }

    pub(crate) fn hop(&mut self, id: u32, to: u32) {
        let p = self.particles[id as usize]
            .as_mut()
            .expect("present particle");
        let from = p.site;
        debug_assert_eq!(self.eta[to as usize], 0, "hop into occupied site");
        self.eta[to as usize] = self.eta[from as usize];
        self.eta[from as usize] = 0;
        self.occupant[to as usize] = id;
        self.occupant[from as usize] = NONE;
        p.site = to;
    }

    pub(crate) fn remove(&mut self, id: u32) {
        let p = self.particles[id as usize]
            .take()
            .expect("present particle");
        self.eta[p.site as usize] = 0;
        self.occupant[p.site as usize] = NONE;
        match p.species {
            Species::Active => self.n_active -= 1,
            Species::Passive => self.n_passive -= 1,
        }
    }

    /// Checks exclusion and registry/field agreement.
    pub fn check(&self) -> std::result::Result<(), String> {
        let mut seen = vec![false; self.eta.len()];
        for (id, p) in self.particles() {
            let s = p.site as usize;
            if seen[s] {
                return Err(format!(
                    "site {} holds two particles",
                    self.geometry.site(p.site)
                ));
            }
            seen[s] = true;
            if self.eta[s] != p.species.eta() || self.occupant[s] != id {
                return Err(format!("registry disagrees with field at particle {id}"));
            }
        }
        for (s, &e) in self.eta.iter().enumerate() {
            if !(-1..=1).contains(&e) {
                return Err(format!("invalid occupation {e}"));
            }
            if (e != 0) != seen[s] {
                return Err(format!(
                    "field entry at {} has no particle",
                    self.geometry.site(s as u32)
                ));
            }
        }
        if self.recount() != self.counts() {
            return Err(format!(
                "counts {:?} disagree with recount {:?}",
                self.counts(),
                self.recount()
            ));
        }
        Ok(())
    }

    /// Text snapshot: header `# t=<time> L=<L> omega=<ω>`, then the door row
    /// first, one character per site (`A`, `P` or `.`).
    pub fn snapshot(&self, time: f64) -> String {
        let l = self.geometry.side;
        let mut out = String::with_capacity((l + 1) * (l + 2) + 32);
        let _ = writeln!(
            out,
            "# t={} L={} omega={}",
            time, l, self.geometry.door_width
        );
        for row in (0..l).rev() {
            for col in 0..l {
                out.push(match Species::from_eta(self.eta[row * l + col]) {
                    Some(s) => s.glyph(),
                    None => '.',
                });
            }
            out.push('\n');
        }
        out
    }

    /// Parses a snapshot back into `(time, configuration)`. Ids are assigned
    /// in site-index order, so only the occupancy field round-trips.
    pub fn parse_snapshot(text: &str) -> Result<(f64, Configuration)> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty snapshot".into()))?;
        let mut time = None;
        let mut side = None;
        let mut omega = None;
        for field in header.trim_start_matches('#').split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field {field:?}")))?;
            let bad = |_| Error::Parse(format!("bad header value {field:?}"));
            match k {
                "t" => time = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "L" => side = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "omega" => omega = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                _ => {}
            }
        }
        let (Some(time), Some(side), Some(omega)) = (time, side, omega) else {
            return Err(Error::Parse("snapshot header needs t, L and omega".into()));
        };
        let geometry = LatticeGeometry::new_relaxed(side, omega)?;
        let rows: Vec<&str> = lines.collect();
        if rows.len() != side || rows.iter().any(|r| r.chars().count() != side) {
            return Err(Error::Parse(format!("snapshot body is not {side}x{side}")));
        }
        let mut config = Configuration::empty(&geometry);
        let mut cells = vec![0i8; side * side];
        for (k, line) in rows.iter().enumerate() {
            let row = side - 1 - k;
            for (col, c) in line.chars().enumerate() {
                cells[row * side + col] = match c {
                    'A' => 1,
                    'P' => -1,
                    '.' => 0,
                    other => return Err(Error::Parse(format!("unexpected glyph {other:?}"))),
                };
            }
        }
        for (i, &e) in cells.iter().enumerate() {
            if let Some(s) = Species::from_eta(e) {
                config.insert(i as u32, s);
            }
        }
        Ok((time, config))
    }
}

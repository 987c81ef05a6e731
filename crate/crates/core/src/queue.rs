//! M/M/ω/N birth–death queue and the diffusion scaling of arrival streams.
//!
//! The queue itself is simulated event by event; its stationary law has the
//! usual product form. The scaling harness centres a Poisson arrival count
//! of intensity `α`, regulates it at zero with the discrete Skorokhod map and
//! rescales by `√α`, which should approach reflected Brownian motion as
//! `α → ∞`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::run_replicas;
use crate::error::{Error, Result};
use crate::rng::exponential;
use crate::sde::skorokhod_map;
use crate::stats::{half_normal_cdf, ks_distance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    /// Arrival intensity λ.
    pub lambda: f64,
    /// Per-server service intensity μ_s.
    pub mu: f64,
    /// Number of servers ω.
    pub servers: usize,
    /// System capacity N.
    pub capacity: usize,
    pub horizon: f64,
    #[serde(default)]
    pub initial: usize,
}

impl QueueParams {
    pub fn new(
        lambda: f64,
        mu: f64,
        servers: usize,
        capacity: usize,
        horizon: f64,
    ) -> Result<Self> {
        let p = QueueParams {
            lambda,
            mu,
            servers,
            capacity,
            horizon,
            initial: 0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            bad.push(format!("λ = {} must be positive", self.lambda));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            bad.push(format!("μ_s = {} must be positive", self.mu));
        }
        if self.servers == 0 || self.servers > self.capacity {
            bad.push(format!(
                "servers ω = {} must lie in [1, N = {}]",
                self.servers, self.capacity
            ));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            bad.push(format!("horizon {} must be positive", self.horizon));
        }
        if self.initial > self.capacity {
            bad.push(format!("initial occupancy {} exceeds N", self.initial));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(bad))
        }
    }

    fn departure_rate(&self, n: usize) -> f64 {
        self.mu * n.min(self.servers) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueueEvent {
    Arrival,
    Departure,
    Blocked,
}

impl QueueEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            QueueEvent::Arrival => "arrival",
            QueueEvent::Departure => "departure",
            QueueEvent::Blocked => "blocked",
        }
    }
}

/// Jump times with the occupancy right after each jump.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueTrace {
    pub initial: usize,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub occupancy: Vec<usize>,
    pub kinds: Vec<QueueEvent>,
}

impl QueueTrace {
    /// Fraction of `[0, horizon]` spent in each state `0..=capacity`.
    pub fn time_fractions(&self, capacity: usize) -> Vec<f64> {
        let mut acc = vec![0.0; capacity + 1];
        let mut n = self.initial;
        let mut last = 0.0;
        for (&t, &m) in self.times.iter().zip(&self.occupancy) {
            acc[n] += t - last;
            last = t;
            n = m;
        }
        acc[n] += self.horizon - last;
        acc.iter().map(|a| a / self.horizon).collect()
    }

    /// Time-averaged occupancy over `[0, horizon]`.
    pub fn mean_occupancy(&self, capacity: usize) -> f64 {
        self.time_fractions(capacity)
            .iter()
            .enumerate()
            .map(|(n, f)| n as f64 * f)
            .sum()
    }

    /// Checks `|Δn| = 1` for arrivals and departures, `n ∈ [0, N]`, and that
    /// blocking only happens at `n = N`.
    pub fn check(&self, capacity: usize) -> std::result::Result<(), String> {
        let mut n = self.initial;
        let mut last = 0.0;
        for (i, ((&t, &m), &kind)) in self
            .times
            .iter()
            .zip(&self.occupancy)
            .zip(&self.kinds)
            .enumerate()
        {
            if t <= last && i > 0 {
                return Err(format!("jump {i} is not after its predecessor"));
            }
            let ok = match kind {
                QueueEvent::Arrival => m == n + 1 && m <= capacity,
                QueueEvent::Departure => n > 0 && m + 1 == n,
                QueueEvent::Blocked => n == capacity && m == n,
            };
            if !ok {
                return Err(format!("invalid {kind:?} at jump {i}: {n} -> {m}"));
            }
            n = m;
            last = t;
        }
        Ok(())
    }

    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "t,n,kind")?;
        for ((t, n), k) in self.times.iter().zip(&self.occupancy).zip(&self.kinds) {
            writeln!(out, "{},{},{}", t, n, k.as_str())?;
        }
        Ok(())
    }
}

/// Event-driven simulation on `[0, horizon]`. Arrivals come at rate λ in every
/// state; in state `N` they are recorded as `Blocked` and leave `n` unchanged.
pub fn simulate_queue<R: Rng + ?Sized>(params: &QueueParams, rng: &mut R) -> Result<QueueTrace> {
    params.validate()?;
    let mut trace = QueueTrace {
        initial: params.initial,
        horizon: params.horizon,
        times: Vec::new(),
        occupancy: Vec::new(),
        kinds: Vec::new(),
    };
    let mut n = params.initial;
    let mut t = 0.0;
    loop {
        let down = params.departure_rate(n);
        let total = params.lambda + down;
        t += exponential(rng, total);
        if t > params.horizon {
            break;
        }
        let kind = if rng.gen::<f64>() * total < params.lambda {
            if n < params.capacity {
                n += 1;
                QueueEvent::Arrival
            } else {
                QueueEvent::Blocked
            }
        } else {
            n -= 1;
            QueueEvent::Departure
        };
        trace.times.push(t);
        trace.occupancy.push(n);
        trace.kinds.push(kind);
    }
    Ok(trace)
}

/// Stationary law `π_n ∝ Π_{k=1}^{n} λ / (μ_s·min(k, ω))` on `0..=N`.
pub fn stationary_distribution(params: &QueueParams) -> Result<Vec<f64>> {
    params.validate()?;
    // Log weights keep heavy-traffic cases finite.
    let mut logw = Vec::with_capacity(params.capacity + 1);
    let mut acc = 0.0_f64;
    logw.push(acc);
    for k in 1..=params.capacity {
        acc += (params.lambda / params.departure_rate(k)).ln();
        logw.push(acc);
    }
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// Mean of a probability vector over `0..len`.
pub fn distribution_mean(pi: &[f64]) -> f64 {
    pi.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    /// `(Y(t) − αt)/√α`.
    ArrivalClt,
    /// `(X(t)/√α, Φ(t)/√α)` with `(X, Φ)` the Skorokhod pair of `Y(t) − αt`.
    SkorokhodPair,
}

/// A scaled arrival path resolved at every jump (left limit and jump value)
/// and at every requested grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPath {
    pub alpha: f64,
    pub mode: ScaleMode,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Scaled regulator `Φ/√α`; all zeros in CLT mode.
    pub regulator: Vec<f64>,
    /// Positions of the requested grid times inside `times`.
    pub grid: Vec<usize>,
}

impl ScaledPath {
    pub fn grid_values(&self) -> Vec<f64> {
        self.grid.iter().map(|&i| self.values[i]).collect()
    }

    pub fn grid_regulator(&self) -> Vec<f64> {
        self.grid.iter().map(|&i| self.regulator[i]).collect()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Param(format!("scale α = {alpha} must be positive")))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Grid("empty time grid".into()));
    }
    if grid[0] < 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid(
            "grid must be non-negative and increasing".into(),
        ));
    }
    Ok(())
}

/// Unscaled centred count `Y(t) − αt` at `t = 0`, every jump's left limit
/// and value, and every grid time. Returns `(times, values, grid positions)`.
fn centred_arrivals<R: Rng + ?Sized>(
    alpha: f64,
    grid: &[f64],
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let end = *grid.last().expect("non-empty grid");
    let cap = (2.0 * alpha * end) as usize + 2 * grid.len() + 2;
    let mut times = Vec::with_capacity(cap);
    let mut values = Vec::with_capacity(cap);
    let mut marks = Vec::with_capacity(grid.len());
    times.push(0.0);
    values.push(0.0);
    let mut count = 0.0_f64;
    let mut next_grid = 0;
    if grid[0] == 0.0 {
        marks.push(0);
        next_grid = 1;
    }
    let mut t = 0.0;
    loop {
        t += exponential(rng, alpha);
        while next_grid < grid.len() && grid[next_grid] < t {
            let g = grid[next_grid];
            times.push(g);
            values.push(count - alpha * g);
            marks.push(times.len() - 1);
            next_grid += 1;
        }
        if t > end {
            break;
        }
        // Left limit, then the jump.
        times.push(t);
        values.push(count - alpha * t);
        count += 1.0;
        times.push(t);
        values.push(count - alpha * t);
    }
    (times, values, marks)
}

/// Centred, `√α`-scaled Poisson arrival path sampled on `grid`.
pub fn clt_scaled_arrivals<R: Rng + ?Sized>(
    alpha: f64,
    grid: &[f64],
    rng: &mut R,
) -> Result<ScaledPath> {
    check_alpha(alpha)?;
    check_grid(grid)?;
    let (times, values, marks) = centred_arrivals(alpha, grid, rng);
    let scale = alpha.sqrt();
    Ok(ScaledPath {
        alpha,
        mode: ScaleMode::ArrivalClt,
        regulator: vec![0.0; times.len()],
        values: values.into_iter().map(|v| v / scale).collect(),
        times,
        grid: marks,
    })
}

/// Reflected version: the centred arrival path is regulated at 0 by the
/// Skorokhod map, then both components are divided by `√α`. The running
/// infimum of the piecewise-linear path is attained at jump left limits, so
/// the regulator is exact in continuous time at every resolved point.
pub fn reflected_walk_scaled<R: Rng + ?Sized>(
    alpha: f64,
    grid: &[f64],
    rng: &mut R,
) -> Result<ScaledPath> {
    check_alpha(alpha)?;
    check_grid(grid)?;
    let (times, values, marks) = centred_arrivals(alpha, grid, rng);
    let (x, phi) = skorokhod_map(&values, 0.0)?;
    let scale = alpha.sqrt();
    Ok(ScaledPath {
        alpha,
        mode: ScaleMode::SkorokhodPair,
        values: x.into_iter().map(|v| v / scale).collect(),
        regulator: phi.into_iter().map(|v| v / scale).collect(),
        times,
        grid: marks,
    })
}

/// Reflected scaled marginals at time `t` for `replicas` independent paths.
pub fn reflected_marginals(alpha: f64, t: f64, replicas: usize, seed: u64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    run_replicas(seed, replicas, |_, rng| {
        reflected_walk_scaled(alpha, &[t], rng).map(|p| p.grid_values()[0])
    })
    .into_iter()
    .collect()
}

/// Unreflected scaled marginals at time `t`.
pub fn clt_marginals(alpha: f64, t: f64, replicas: usize, seed: u64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    run_replicas(seed, replicas, |_, rng| {
        clt_scaled_arrivals(alpha, &[t], rng).map(|p| p.grid_values()[0])
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    pub alpha: f64,
    pub t: f64,
    pub ks: f64,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    /// Rows in increasing `α`.
    pub rows: Vec<LimitRow>,
    /// KS distance strictly decreasing in `α`.
    pub decreasing: bool,
}

impl LimitReport {
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "alpha,t,ks,replicas")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.alpha, r.t, r.ks, r.replicas)?;
        }
        Ok(())
    }
}

pub const MIN_LIMIT_REPLICAS: usize = 100;

/// KS distance between the reflected scaled marginal at `t` and the law of
/// `|N(0, t)|`, for each `α`. Scale `i` in increasing order uses master seed
/// `seed + i`.
pub fn limit_report(alphas: &[f64], t: f64, replicas: usize, seed: u64) -> Result<LimitReport> {
    if alphas.len() < 2 {
        return Err(Error::Param(
            "limit report needs at least two scales".into(),
        ));
    }
    if replicas < MIN_LIMIT_REPLICAS {
        return Err(Error::Param(format!(
            "limit report needs at least {MIN_LIMIT_REPLICAS} replicas, got {replicas}"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Param(format!("time {t} must be positive")));
    }
    let mut sorted = alphas.to_vec();
    for &a in &sorted {
        check_alpha(a)?;
    }
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Param("duplicate scale values".into()));
    }
    let sd = t.sqrt();
    let rows = sorted
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let xs = reflected_marginals(alpha, t, replicas, seed.wrapping_add(i as u64))?;
            Ok(LimitRow {
                alpha,
                t,
                ks: ks_distance(&xs, |x| half_normal_cdf(x, sd)),
                replicas,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let decreasing = rows.windows(2).all(|w| w[1].ks < w[0].ks);
    Ok(LimitReport { rows, decreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;

    #[test]
    fn starved_queue_has_no_events() {
        let p = QueueParams::new(1e-9, 1.0, 1, 1, 1.0).unwrap();
        let trace = simulate_queue(&p, &mut replica_rng(0, 0)).unwrap();
        assert!(trace.times.is_empty());
        assert_eq!(trace.time_fractions(1), vec![1.0, 0.0]);
    }

    #[test]
    fn params_are_validated() {
        assert!(QueueParams::new(0.0, 1.0, 1, 1, 1.0).is_err());
        assert!(QueueParams::new(1.0, -1.0, 1, 1, 1.0).is_err());
        assert!(QueueParams::new(1.0, 1.0, 0, 1, 1.0).is_err());
        assert!(QueueParams::new(1.0, 1.0, 3, 2, 1.0).is_err());
        assert!(QueueParams::new(1.0, 1.0, 1, 2, 0.0).is_err());
    }

    #[test]
    fn symmetric_two_state_chain() {
        let p = QueueParams::new(2.0, 2.0, 1, 1, 1.0).unwrap();
        assert_eq!(stationary_distribution(&p).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn erlang_loss_shape() {
        let (lambda, mu, n) = (3.0_f64, 1.5_f64, 6);
        let p = QueueParams::new(lambda, mu, n, n, 1.0).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        let rho = lambda / mu;
        let mut w = vec![1.0];
        for k in 1..=n {
            w.push(w[k - 1] * rho / k as f64);
        }
        let z: f64 = w.iter().sum();
        for k in 0..=n {
            assert!((pi[k] - w[k] / z).abs() < 1e-14);
        }
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_server_one_place_busy_fraction() {
        let (lambda, mu) = (0.7, 1.3);
        let p = QueueParams::new(lambda, mu, 1, 1, 1e5).unwrap();
        let trace = simulate_queue(&p, &mut replica_rng(3, 0)).unwrap();
        trace.check(1).unwrap();
        let busy = trace.time_fractions(1)[1];
        let expected = lambda / (lambda + mu);
        // Batch means over 20 equal slices estimate the standard error.
        let slices = 20;
        let width = p.horizon / slices as f64;
        let mut fracs = Vec::new();
        for s in 0..slices {
            let (a, b) = (s as f64 * width, (s + 1) as f64 * width);
            let mut n = 0;
            let mut last = 0.0_f64;
            let mut on = 0.0;
            for (&t, &m) in trace.times.iter().zip(&trace.occupancy) {
                let (lo, hi) = (last.max(a), t.min(b));
                if n == 1 && hi > lo {
                    on += hi - lo;
                }
                last = t;
                n = m;
            }
            if n == 1 && b > last.max(a) {
                on += b - last.max(a);
            }
            fracs.push(on / width);
        }
        let (_, se) = crate::stats::mean_se(&fracs);
        assert!(
            (busy - expected).abs() < 3.0 * se,
            "{busy} vs {expected} (se {se})"
        );
    }

    #[test]
    fn blocked_arrivals_only_when_full() {
        let p = QueueParams::new(5.0, 1.0, 1, 3, 200.0).unwrap();
        let trace = simulate_queue(&p, &mut replica_rng(1, 0)).unwrap();
        trace.check(3).unwrap();
        assert!(trace.kinds.contains(&QueueEvent::Blocked));
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,n,kind\n"));
    }

    #[test]
    fn scaled_paths_validate_input() {
        let mut rng = replica_rng(0, 0);
        assert!(clt_scaled_arrivals(0.0, &[1.0], &mut rng).is_err());
        assert!(clt_scaled_arrivals(1.0, &[], &mut rng).is_err());
        assert!(reflected_walk_scaled(1.0, &[1.0, 0.5], &mut rng).is_err());
    }

    #[test]
    fn grid_positions_carry_grid_times() {
        let grid = [0.0, 0.25, 0.5, 1.0];
        let p = reflected_walk_scaled(50.0, &grid, &mut replica_rng(2, 0)).unwrap();
        let at: Vec<f64> = p.grid.iter().map(|&i| p.times[i]).collect();
        assert_eq!(at, grid);
        assert_eq!(p.grid_values()[0], 0.0);
    }

    #[test]
    fn reflected_pair_satisfies_skorokhod_conditions() {
        for seed in 0..50 {
            let p = reflected_walk_scaled(200.0, &[0.5, 1.0], &mut replica_rng(seed, 0)).unwrap();
            assert!(p.values.iter().all(|&x| x >= 0.0));
            assert_eq!(p.regulator[0], 0.0);
            assert!(p.regulator.windows(2).all(|w| w[1] >= w[0]));
            let comp: f64 = (1..p.values.len())
                .map(|k| p.values[k] * (p.regulator[k] - p.regulator[k - 1]))
                .sum();
            assert_eq!(comp, 0.0);
        }
    }

    #[test]
    fn reflection_inactive_on_nonnegative_path() {
        // A tiny scale with a huge time step between grid points is not
        // needed: check the map directly on the regulated values instead.
        let p = reflected_walk_scaled(30.0, &[1.0], &mut replica_rng(4, 0)).unwrap();
        let (x, phi) = skorokhod_map(&p.values, 0.0).unwrap();
        assert_eq!(x, p.values);
        assert!(phi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn limit_report_rejects_degenerate_input() {
        assert!(limit_report(&[10.0], 1.0, 1000, 0).is_err());
        assert!(limit_report(&[10.0, 10.0], 1.0, 1000, 0).is_err());
        assert!(limit_report(&[10.0, 100.0], 1.0, 99, 0).is_err());
    }

    #[test]
    fn limit_report_csv() {
        let rep = limit_report(&[100.0, 5.0], 1.0, 200, 3).unwrap();
        assert_eq!(rep.rows[0].alpha, 5.0);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("alpha,t,ks,replicas\n5,1,"));
    }
}

//! One-dimensional reflected stochastic calculus.
//!
//! [`skorokhod_map`] regulates a discrete path at a lower boundary with the
//! minimal non-decreasing push. The Ornstein–Uhlenbeck integrators use plain
//! Euler–Maruyama for the free process and the projection scheme
//! `V ← max(r, V*)` for the reflected one, accumulating the push as the
//! local time `L`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::run_replicas;
use crate::error::{Error, Result};

/// Values on the uniform grid `t_k = k·dt` with the cumulative reflection.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub dt: f64,
    pub values: Vec<f64>,
    pub local_time: Vec<f64>,
    pub boundary: Option<f64>,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Checks `V ≥ r`, `L_0 = 0`, `L` non-decreasing and increasing only at
    /// steps that end on the boundary. Exact comparisons.
    pub fn check_reflection(&self) -> std::result::Result<(), String> {
        let Some(r) = self.boundary else {
            return Ok(());
        };
        if self.local_time.first() != Some(&0.0) {
            return Err("local time must start at 0".into());
        }
        for k in 0..self.values.len() {
            if self.values[k] < r {
                return Err(format!("V_{k} = {} below boundary {r}", self.values[k]));
            }
            if k > 0 {
                let dl = self.local_time[k] - self.local_time[k - 1];
                if dl < 0.0 {
                    return Err(format!("local time decreases at step {k}"));
                }
                if dl > 0.0 && self.values[k] != r {
                    return Err(format!("local time grows off the boundary at step {k}"));
                }
            }
        }
        Ok(())
    }

    /// Path CSV `k,t,V,L`, keeping every `stride`-th step.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W, stride: usize) -> std::io::Result<()> {
        writeln!(out, "k,t,V,L")?;
        for k in (0..self.len()).step_by(stride.max(1)) {
            writeln!(
                out,
                "{},{},{},{}",
                k,
                self.time(k),
                self.values[k],
                self.local_time[k]
            )?;
        }
        Ok(())
    }
}

/// Solves the discrete Skorokhod problem for `y` at the lower boundary `r`.
///
/// Returns `(x, φ)` with `φ_k = max(0, max_{j≤k}(r − y_j))` and `x = y + φ`.
/// At steps where `φ` grows, `x` is set to `r` exactly so the complementarity
/// sum vanishes in floating point as well.
pub fn skorokhod_map(y: &[f64], r: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let Some(&y0) = y.first() else {
        return Ok((Vec::new(), Vec::new()));
    };
    if y0 < r {
        return Err(Error::BelowBoundary {
            value: y0,
            boundary: r,
        });
    }
    let mut x = Vec::with_capacity(y.len());
    let mut phi = Vec::with_capacity(y.len());
    let mut push = 0.0_f64;
    for &yk in y {
        let deficit = r - yk;
        if deficit > push {
            push = deficit;
            x.push(r);
        } else {
            x.push((yk + push).max(r));
        }
        phi.push(push);
    }
    Ok((x, phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub mu: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub boundary: Option<f64>,
    pub v0: f64,
}

impl OuParams {
    pub fn free(mu: f64, gamma: f64, sigma: f64, v0: f64) -> Self {
        OuParams {
            mu,
            gamma,
            sigma,
            boundary: None,
            v0,
        }
    }

    pub fn reflected(mu: f64, gamma: f64, sigma: f64, r: f64, v0: f64) -> Self {
        OuParams {
            boundary: Some(r),
            ..Self::free(mu, gamma, sigma, v0)
        }
    }

    /// The same dynamics with the boundary removed.
    pub fn unreflected(&self) -> Self {
        OuParams {
            boundary: None,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::Param(format!("γ = {} must be positive", self.gamma)));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Param(format!(
                "σ = {} must be non-negative",
                self.sigma
            )));
        }
        if !self.mu.is_finite() || !self.v0.is_finite() {
            return Err(Error::Param("μ and V0 must be finite".into()));
        }
        if let Some(r) = self.boundary {
            if self.v0 < r {
                return Err(Error::BelowBoundary {
                    value: self.v0,
                    boundary: r,
                });
            }
        }
        Ok(())
    }

    #[inline]
    fn drift(&self, v: f64) -> f64 {
        self.mu - v / self.gamma
    }
}

/// Stationary `(mean, variance)` of the free process: `(μγ, σ²γ/2)`.
pub fn ou_stationary_moments(params: &OuParams) -> (f64, f64) {
    (
        params.mu * params.gamma,
        params.sigma * params.sigma * params.gamma / 2.0,
    )
}

fn check_step(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Param(format!("time step {dt} must be positive")))
    }
}

/// Free Euler–Maruyama path `V_{k+1} = V_k + (μ − V_k/γ)dt + σ√dt·Z_k`.
///
/// The params must not carry a boundary; use [`reflected_ou`] for that.
pub fn euler_maruyama_ou<R: Rng + ?Sized>(
    params: &OuParams,
    dt: f64,
    n_steps: usize,
    rng: &mut R,
) -> Result<SamplePath> {
    if params.boundary.is_some() {
        return Err(Error::Param(
            "free path requested with a reflecting boundary".into(),
        ));
    }
    params.validate()?;
    check_step(dt)?;
    let noise = params.sigma * dt.sqrt();
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut v = params.v0;
    values.push(v);
    for _ in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        v = v + params.drift(v) * dt + noise * z;
        values.push(v);
    }
    Ok(SamplePath {
        dt,
        local_time: vec![0.0; values.len()],
        values,
        boundary: None,
    })
}

/// Reflected Euler–Maruyama by projection: the proposal
/// `V* = V_k + (μ − V_k/γ)dt + σ√dt·Z_k` is kept when `V* ≥ r`, otherwise
/// `V_{k+1} = r` and the local time grows by `r − V*`.
///
/// Draws the same normals in the same order as [`euler_maruyama_ou`], so
/// matched seeds give twin paths.
pub fn reflected_ou<R: Rng + ?Sized>(
    params: &OuParams,
    dt: f64,
    n_steps: usize,
    rng: &mut R,
) -> Result<SamplePath> {
    let Some(r) = params.boundary else {
        return Err(Error::Param("reflected path needs a boundary".into()));
    };
    params.validate()?;
    check_step(dt)?;
    let noise = params.sigma * dt.sqrt();
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut local_time = Vec::with_capacity(n_steps + 1);
    let mut v = params.v0;
    let mut l = 0.0;
    values.push(v);
    local_time.push(l);
    for _ in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        let proposal = v + params.drift(v) * dt + noise * z;
        if proposal >= r {
            v = proposal;
        } else {
            l += r - proposal;
            v = r;
        }
        values.push(v);
        local_time.push(l);
    }
    Ok(SamplePath {
        dt,
        values,
        local_time,
        boundary: Some(r),
    })
}

/// Free or reflected path depending on whether the params carry a boundary.
pub fn ou_path<R: Rng + ?Sized>(
    params: &OuParams,
    dt: f64,
    n_steps: usize,
    rng: &mut R,
) -> Result<SamplePath> {
    if params.boundary.is_some() {
        reflected_ou(params, dt, n_steps, rng)
    } else {
        euler_maruyama_ou(params, dt, n_steps, rng)
    }
}

/// `paths` seeded paths; path `i` uses replica stream `i` of `master_seed`.
pub fn ou_ensemble(
    params: &OuParams,
    dt: f64,
    n_steps: usize,
    paths: usize,
    master_seed: u64,
) -> Result<Vec<SamplePath>> {
    params.validate()?;
    check_step(dt)?;
    run_replicas(master_seed, paths, |_, rng| {
        ou_path(params, dt, n_steps, rng)
    })
    .into_iter()
    .collect()
}

/// One row of the ensemble summary CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleRow {
    pub t: f64,
    pub mean: f64,
    pub var: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

/// Cross-path statistics at every `stride`-th grid point. Paths must share
/// the grid.
pub fn summarize(paths: &[SamplePath], stride: usize) -> Result<Vec<EnsembleRow>> {
    let Some(first) = paths.first() else {
        return Err(Error::Grid("empty ensemble".into()));
    };
    if paths
        .iter()
        .any(|p| p.len() != first.len() || p.dt != first.dt)
    {
        return Err(Error::Grid("paths do not share a time grid".into()));
    }
    let n = paths.len();
    Ok((0..first.len())
        .step_by(stride.max(1))
        .map(|k| {
            let xs: Vec<f64> = paths.iter().map(|p| p.values[k]).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = if n > 1 {
                crate::stats::variance(&xs)
            } else {
                0.0
            };
            EnsembleRow {
                t: first.time(k),
                mean,
                var,
                min: xs.iter().copied().fold(f64::INFINITY, f64::min),
                max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                n,
            }
        })
        .collect())
}

pub fn write_summary_csv<W: std::io::Write>(
    out: &mut W,
    rows: &[EnsembleRow],
) -> std::io::Result<()> {
    writeln!(out, "t,mean,var,min,max,n")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.t, r.mean, r.var, r.min, r.max, r.n
        )?;
    }
    Ok(())
}

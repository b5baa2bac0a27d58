//! Experiments on top of the solver: the stationary power laws ω₁, ω₂, their
//! fixed-point residuals, semigroup-gap and solution-gap asymptotics,
//! positivity in physical space, and the decay-based equivalence of data.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::picard_solver::{picard_solve, DuhamelOperator, SolveOptions, TimeGrid, Trajectory};
use crate::potential_catalog::{threshold_report, PotentialSpec};
use crate::radial_convolution::RadialKernel;
use crate::special_functions::{homogeneous_ft_constant, lambda_star};
use crate::spectral_field::{RadialGrid, SpectralField};

/// ω₁ = |x|^{−(n−2)/2 + l}, ω₂ = |x|^{−(n−2)/2 − l}, l = √(λ* − λ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPair {
    pub n: usize,
    pub lambda: f64,
    pub l: f64,
    /// Physical-space exponents of ω₁, ω₂.
    pub exponents: [f64; 2],
    /// k₁ = (n+2)/2 + l, k₂ = (n+2)/2 − l.
    pub indices: [f64; 2],
    /// ω̂_i = amplitude · ρ^{−k_i}; absent when k_i ∉ (0, n).
    pub fourier_amplitudes: [Option<f64>; 2],
}

impl StationaryPair {
    pub fn new(lambda: f64, n: usize) -> Result<Self> {
        let ls = lambda_star(n)?;
        if !(lambda.abs() < ls) {
            return domain(format!("stationary pair needs |lambda| < {ls}, got {lambda}"));
        }
        let l = (ls - lambda).sqrt();
        let half = 0.5 * (n as f64 - 2.0);
        let centre = 0.5 * (n as f64 + 2.0);
        let indices = [centre + l, centre - l];
        let amp = |k: f64| {
            if k > 0.0 && k < n as f64 {
                homogeneous_ft_constant(0, k, n).ok().map(|g| g.re)
            } else {
                None
            }
        };
        Ok(Self {
            n,
            lambda,
            l,
            exponents: [-half + l, -half - l],
            indices,
            fourier_amplitudes: [amp(indices[0]), amp(indices[1])],
        })
    }

    /// k_i for `which` ∈ {1, 2}.
    pub fn index(&self, which: usize) -> Result<f64> {
        match which {
            1 | 2 => Ok(self.indices[which - 1]),
            _ => domain(format!("stationary solutions are numbered 1 and 2, got {which}")),
        }
    }
}

/// sup over (t, ρ) of |H(ω) − ω| / ‖ω‖ with H(ω) = G(t)ω + L_V(ω), for the
/// power law ω̂ = ρ^{−k} and V = λ/|x|².
pub fn power_law_residual(lambda: f64, n: usize, k: f64, grid: RadialGrid, times: &TimeGrid) -> Result<f64> {
    let omega = SpectralField::power_law(n, k, 1.0, grid)?;
    let kernel = RadialKernel::hardy(n, lambda)?;
    let op = DuhamelOperator::new(kernel, &omega, times)?;
    let constant = Trajectory::new(times.clone(), vec![omega.clone(); times.len()])?;
    let image = Trajectory::heat_flow(&omega, times)?.add(&op.apply(&constant)?)?;
    Ok(image.sub(&constant)?.sup_norm() / omega.pm_norm())
}

/// [`power_law_residual`] at k = k_i. Zero in exact arithmetic.
pub fn stationarity_residual(pair: &StationaryPair, which: usize, grid: RadialGrid, times: &TimeGrid) -> Result<f64> {
    let k = pair.index(which)?;
    if !(2.0 < k && k < pair.n as f64) {
        return domain(format!("k_{which} = {k} lies outside (2, {})", pair.n));
    }
    power_law_residual(pair.lambda, pair.n, k, grid, times)
}

/// Norms of a difference over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSeries {
    pub times: Vec<f64>,
    pub gap_norms: Vec<f64>,
    /// Least-squares slope of ln norm against ln t over the last decade.
    pub fitted_slope: Option<f64>,
}

impl AsymptoticSeries {
    pub fn new(times: Vec<f64>, gap_norms: Vec<f64>) -> Self {
        let fitted_slope = loglog_tail_slope(&times, &gap_norms);
        Self { times, gap_norms, fitted_slope }
    }

    /// norm(t_last) / norm at the node nearest (in ln t) to t_last / 10.
    pub fn decade_ratio(&self) -> Option<f64> {
        let last = *self.times.last()?;
        let target = (last / 10.0).ln();
        let (i, _) = self
            .times
            .iter()
            .enumerate()
            .filter(|(_, t)| **t > 0.0)
            .min_by(|a, b| (a.1.ln() - target).abs().total_cmp(&(b.1.ln() - target).abs()))?;
        let start = self.gap_norms[i];
        let end = *self.gap_norms.last()?;
        if start == 0.0 {
            return if end == 0.0 { Some(0.0) } else { None };
        }
        Some(end / start)
    }

    /// CSV with header `t,norm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,norm\n");
        for (t, v) in self.times.iter().zip(&self.gap_norms) {
            let _ = writeln!(out, "{t:.16e},{v:.16e}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn loglog_tail_slope(times: &[f64], norms: &[f64]) -> Option<f64> {
    let last = *times.last()?;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(norms)
        .filter(|(t, v)| **t >= last / 10.0 && **t > 0.0 && **v > 0.0)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// ‖G(t)ψ‖_{PM^k} at the given times.
pub fn semigroup_gap(psi: &SpectralField, times: &[f64]) -> Result<AsymptoticSeries> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("times must be increasing");
    }
    let norms = times
        .iter()
        .map(|&t| Ok(psi.apply_heat_semigroup(t)?.pm_norm()))
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticSeries::new(times.to_vec(), norms))
}

/// Solves with u₀ and v₀ under the same potential; returns ‖u(t) − v(t)‖.
pub fn convergence_experiment(
    potential: &PotentialSpec,
    u0: &SpectralField,
    v0: &SpectralField,
    times: &TimeGrid,
    opts: &SolveOptions,
) -> Result<AsymptoticSeries> {
    let u = picard_solve(potential, u0, times, opts)?;
    let v = picard_solve(potential, v0, times, opts)?;
    let gap = u.trajectory.sub(&v.trajectory)?;
    Ok(AsymptoticSeries::new(times.nodes.clone(), gap.norms()))
}

/// Sign check of a trajectory in physical space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub min: f64,
    pub max: f64,
    pub passes: bool,
    /// Some inverse transform flagged its truncated tail.
    pub quadrature_warning: bool,
}

/// Reconstructs u(r, t) at the sampled radii and time indices and requires
/// min ≥ −1e−3 · max.
pub fn positivity_check(solution: &Trajectory, radii: &[f64], time_indices: &[usize]) -> Result<PositivityReport> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut warning = false;
    for &i in time_indices {
        let field = solution
            .fields
            .get(i)
            .ok_or_else(|| crate::Error::Shape(format!("time index {i} out of range")))?;
        let inv = field.inverse_radial_transform(radii)?;
        warning |= inv.warning;
        for v in inv.values {
            min = min.min(v);
            max = max.max(v);
        }
    }
    if !min.is_finite() {
        return domain("positivity check needs at least one radius and one time");
    }
    Ok(PositivityReport { min, max, passes: min >= -1e-3 * max.abs(), quadrature_warning: warning })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equivalence {
    Equivalent,
    NotEquivalent,
    Undecided,
}

/// Outcome and evidence of [`equivalence_probe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub verdict: Equivalence,
    pub ratio: f64,
    pub series: AsymptoticSeries,
}

/// Classifies (u₀, v₀) by whether ‖G(t)(u₀ − v₀)‖ decays over [1, horizon]:
/// decade ratio below 0.3 is equivalent, above 0.9 is not, else undecided.
pub fn equivalence_probe(u0: &SpectralField, v0: &SpectralField, horizon: f64) -> Result<EquivalenceReport> {
    if !(horizon >= 10.0) {
        return domain(format!("horizon must be at least 10, got {horizon}"));
    }
    let psi = u0.sub(v0)?;
    let steps = 24;
    let times: Vec<f64> = (0..=steps).map(|i| horizon.powf(i as f64 / steps as f64)).collect();
    let series = semigroup_gap(&psi, &times)?;
    let ratio = series.decade_ratio().unwrap_or(f64::NAN);
    let verdict = if series.gap_norms.iter().all(|&v| v == 0.0) || ratio < 0.3 {
        Equivalence::Equivalent
    } else if ratio > 0.9 {
        Equivalence::NotEquivalent
    } else {
        Equivalence::Undecided
    };
    Ok(EquivalenceReport { verdict, ratio, series })
}

/// τ at (V, n, k) with the threshold check the experiments require.
pub fn require_subcritical(potential: &PotentialSpec, n: usize, k: f64) -> Result<f64> {
    let r = threshold_report(potential, n, k)?;
    if !r.passes {
        return Err(crate::Error::Refused { tau: r.tau });
    }
    Ok(r.tau)
}

//! Whole-trajectory Picard iteration for the mild equation
//! u = G(t)u₀ + L_V(u), with L_V(u)(t) = ∫₀^t G(t−s)(V̂ ∗ û(s)) ds.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::potential_catalog::{threshold_report, PotentialSpec};
use crate::radial_convolution::{ConvolutionPlan, RadialKernel};
use crate::special_functions::riesz_composition_constant;
use crate::spectral_field::SpectralField;

/// Time nodes 0 = t₀ < t₁ < … < t_end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub nodes: Vec<f64>,
}

const LINEAR_NODES: usize = 8;

impl Default for TimeGrid {
    fn default() -> Self {
        Self::standard(4.0, 64).expect("default time grid is valid")
    }
}

impl TimeGrid {
    /// Eight equispaced nodes on [0, t_end/100], then geometric to t_end.
    pub fn standard(t_end: f64, count: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return domain(format!("t_end must be positive, got {t_end}"));
        }
        if count < LINEAR_NODES {
            return domain(format!("time grid needs at least {LINEAR_NODES} nodes, got {count}"));
        }
        if count == LINEAR_NODES {
            let h = t_end / (count - 1) as f64;
            return Self::from_nodes((0..count).map(|i| i as f64 * h).collect());
        }
        let t_lin = 0.01 * t_end;
        let h = t_lin / (LINEAR_NODES - 1) as f64;
        let mut nodes: Vec<f64> = (0..LINEAR_NODES).map(|i| i as f64 * h).collect();
        let rest = count - LINEAR_NODES;
        for i in 1..=rest {
            nodes.push(if i == rest { t_end } else { t_lin * 100f64.powf(i as f64 / rest as f64) });
        }
        Self::from_nodes(nodes)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return domain("time grid must start at 0 and have at least two nodes");
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || !nodes.iter().all(|t| t.is_finite()) {
            return domain("time nodes must be finite and strictly increasing");
        }
        Ok(Self { nodes })
    }

    /// Every node multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return domain(format!("scale factor must be positive, got {factor}"));
        }
        Self::from_nodes(self.nodes.iter().map(|t| t * factor).collect())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.nodes.last().expect("non-empty")
    }
}

/// One field per time node, all sharing (n, k, grid).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: TimeGrid,
    pub fields: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(times: TimeGrid, fields: Vec<SpectralField>) -> Result<Self> {
        if fields.len() != times.len() {
            return Err(Error::Shape(format!(
                "{} fields for {} time nodes",
                fields.len(),
                times.len()
            )));
        }
        let first = &fields[0];
        if fields
            .iter()
            .any(|f| f.n != first.n || f.k != first.k || f.grid != first.grid)
        {
            return Err(Error::Shape("trajectory fields must share n, k and grid".into()));
        }
        Ok(Self { times, fields })
    }

    /// t ↦ G(t)u₀.
    pub fn heat_flow(u0: &SpectralField, times: &TimeGrid) -> Result<Self> {
        let fields = times
            .nodes
            .par_iter()
            .map(|&t| u0.apply_heat_semigroup(t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(times.clone(), fields)
    }

    pub fn zero_like(&self) -> Self {
        Self {
            times: self.times.clone(),
            fields: self.fields.iter().map(|f| f.scale(0.0)).collect(),
        }
    }

    /// ‖u‖_{X_k} on the grid: sup over time of the PM^k norm.
    pub fn sup_norm(&self) -> f64 {
        self.fields.iter().map(|f| f.pm_norm()).fold(0.0, f64::max)
    }

    pub fn norms(&self) -> Vec<f64> {
        self.fields.iter().map(|f| f.pm_norm()).collect()
    }

    fn zip_with(&self, other: &Self, op: impl Fn(&SpectralField, &SpectralField) -> Result<SpectralField>) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::Shape("trajectories live on different time grids".into()));
        }
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| op(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { times: self.times.clone(), fields })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            times: self.times.clone(),
            fields: self.fields.iter().map(|f| f.scale(c)).collect(),
        }
    }

    /// Long-format CSV `t,rho,h`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,rho,h\n");
        for (t, f) in self.times.nodes.iter().zip(&self.fields) {
            for (j, h) in f.profile.iter().enumerate() {
                let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", t, f.grid.node(j), h);
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

// (1 − e^{−x}(1 + x)) / x²
fn phi2(x: f64) -> f64 {
    if x < 0.1 {
        let mut term = 0.5;
        let mut sum = 0.5;
        for j in 3..20 {
            let jf = j as f64;
            // ratio of (−1)^j (j−1) x^{j−2} / j! to its predecessor
            term *= -x * (jf - 1.0) / ((jf - 2.0) * jf);
            sum += term;
        }
        sum
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    }
}

// (1 − e^{−x}) / x
fn phi1(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// The Duhamel map u ↦ L_V(u) for a fixed kernel, weight, radial grid and
/// time grid. The convolution V̂ ∗ û is assumed piecewise linear in s between
/// time nodes and integrated exactly against e^{−4π²ρ²(t−s)}.
#[derive(Debug, Clone)]
pub struct DuhamelOperator {
    pub kernel: RadialKernel,
    pub times: TimeGrid,
    plan: ConvolutionPlan,
    // per step m ≥ 1 and node j: (e^{−aΔt}, weight of F_{m−1}, weight of F_m)
    steps: Vec<Vec<(f64, f64, f64)>>,
    lift: Vec<f64>,
}

impl DuhamelOperator {
    pub fn new(kernel: RadialKernel, template: &SpectralField, times: &TimeGrid) -> Result<Self> {
        let n = kernel.n;
        if template.n != n {
            return Err(Error::Shape(format!(
                "kernel dimension {n} differs from field dimension {}",
                template.n
            )));
        }
        if (kernel.exponent - (n as f64 - 2.0)).abs() > 1e-12 {
            return domain("the Duhamel map needs a kernel of exponent n - 2");
        }
        let k = template.k;
        if !(2.0 < k && k < n as f64) {
            return domain(format!("solution index must satisfy 2 < k < n, got k = {k}"));
        }
        let plan = ConvolutionPlan::new(kernel, k, template.grid)?;
        let rho = template.grid.nodes();
        let steps = times
            .nodes
            .windows(2)
            .map(|w| {
                let dt = w[1] - w[0];
                rho.iter()
                    .map(|r| {
                        let x = 4.0 * PI * PI * r * r * dt;
                        let g1 = phi1(x);
                        let g2 = phi2(x);
                        ((-x).exp(), dt * g2, dt * (g1 - g2))
                    })
                    .collect()
            })
            .collect();
        let lift = rho.iter().map(|r| r.powf(k - plan.k_out)).collect();
        Ok(Self { kernel, times: times.clone(), plan, steps, lift })
    }

    /// Largest extrapolated-tail share seen by the last convolution batch.
    pub fn apply_with_diagnostics(&self, traj: &Trajectory) -> Result<(Trajectory, f64)> {
        if traj.times != self.times {
            return Err(Error::Shape("trajectory time grid differs from the operator's".into()));
        }
        let conv = traj
            .fields
            .par_iter()
            .map(|f| self.plan.apply(f))
            .collect::<Result<Vec<_>>>()?;
        let tail = conv.iter().map(|c| c.tail_fraction).fold(0.0, f64::max);
        let count = traj.fields[0].grid.count;
        let template = &traj.fields[0];
        let mut ell = vec![0.0; count];
        let mut out = Vec::with_capacity(traj.fields.len());
        out.push(template.scale(0.0));
        for (m, step) in self.steps.iter().enumerate() {
            let prev = &conv[m].field.profile;
            let cur = &conv[m + 1].field.profile;
            for j in 0..count {
                let (decay, w1, w2) = step[j];
                ell[j] = decay * ell[j] + w1 * prev[j] + w2 * cur[j];
            }
            let profile = ell.iter().zip(&self.lift).map(|(l, s)| l * s).collect();
            let mut f = SpectralField::from_profile(template.n, template.k, template.grid, profile)?;
            f.homogeneous = false;
            out.push(f);
        }
        Ok((Trajectory { times: traj.times.clone(), fields: out }, tail))
    }

    pub fn apply(&self, traj: &Trajectory) -> Result<Trajectory> {
        Ok(self.apply_with_diagnostics(traj)?.0)
    }

    /// τ = |c| K(2, n−k, n) / (4π²), the operator norm bound on X_k.
    pub fn contraction_bound(&self) -> Result<f64> {
        contraction_factor_kernel(&self.kernel, self.plan.k)
    }
}

/// L_V applied to a trajectory.
pub fn duhamel_apply(kernel: &RadialKernel, traj: &Trajectory) -> Result<Trajectory> {
    DuhamelOperator::new(*kernel, &traj.fields[0], &traj.times)?.apply(traj)
}

/// τ for a radial potential: C_{n−2,k} · ‖V‖_{PM^{n−2}}.
pub fn contraction_factor(potential: &PotentialSpec, n: usize, k: f64) -> Result<f64> {
    Ok(threshold_report(potential, n, k)?.tau)
}

pub fn contraction_factor_kernel(kernel: &RadialKernel, k: f64) -> Result<f64> {
    let n = kernel.n;
    Ok(kernel.coefficient.abs() * riesz_composition_constant(2.0, n as f64 - k, n)? / (4.0 * PI * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// Start from u₁ = G(t)u₀.
    #[default]
    HeatFlow,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub allow_supercritical: bool,
    pub initial_guess: InitialGuess,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, allow_supercritical: false, initial_guess: InitialGuess::HeatFlow }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub trajectory: Trajectory,
    pub iterations: usize,
    pub diffs: Vec<f64>,
    pub measured_rate: Option<f64>,
    pub tau: f64,
    pub converged: bool,
    /// Largest share of a convolution value taken from extrapolated data
    /// more than a decade outside the grid.
    pub tail_fraction: f64,
}

/// Serializable part of a [`SolveReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub n: usize,
    pub k: f64,
    pub iterations: usize,
    pub diffs: Vec<f64>,
    pub measured_rate: Option<f64>,
    pub tau: f64,
    pub converged: bool,
    pub tail_fraction: f64,
    pub extrapolation_warning: bool,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub sup_norm: f64,
}

impl SolveReport {
    pub fn summary(&self) -> SolveSummary {
        let f = &self.trajectory.fields[0];
        SolveSummary {
            n: f.n,
            k: f.k,
            iterations: self.iterations,
            diffs: self.diffs.clone(),
            measured_rate: self.measured_rate,
            tau: self.tau,
            converged: self.converged,
            tail_fraction: self.tail_fraction,
            extrapolation_warning: self.tail_fraction > 1e-3,
            times: self.trajectory.times.nodes.clone(),
            norms: self.trajectory.norms(),
            sup_norm: self.trajectory.sup_norm(),
        }
    }
}

/// Geometric rate fitted to the trailing half of the successive differences.
/// Early ratios are smaller than the asymptotic one while the iterates spread
/// out in ln ρ, so they are left out.
pub fn fit_rate(diffs: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = diffs
        .iter()
        .enumerate()
        .skip((diffs.len() / 2).max(1))
        .filter(|(_, d)| **d > 0.0)
        .map(|(i, d)| (i as f64, d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some((sxy / sxx).exp())
}

/// Picard iteration u^{(b+1)} = G(·)u₀ + L(u^{(b)}) for a radial kernel of
/// exponent n − 2.
pub fn picard_solve_kernel(
    kernel: &RadialKernel,
    u0: &SpectralField,
    times: &TimeGrid,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if !(opts.tol > 0.0) {
        return domain(format!("tolerance must be positive, got {}", opts.tol));
    }
    let op = DuhamelOperator::new(*kernel, u0, times)?;
    let tau = op.contraction_bound()?;
    if tau >= 1.0 && !opts.allow_supercritical {
        return Err(Error::Refused { tau });
    }
    let base = Trajectory::heat_flow(u0, times)?;
    let mut current = match opts.initial_guess {
        InitialGuess::HeatFlow => base.clone(),
        InitialGuess::Zero => base.zero_like(),
    };
    let mut diffs = Vec::new();
    let mut tail_fraction: f64 = 0.0;
    for _ in 0..opts.max_iter {
        let (l, tail) = op.apply_with_diagnostics(&current)?;
        tail_fraction = tail_fraction.max(tail);
        let next = base.add(&l)?;
        let diff = next.sub(&current)?.sup_norm();
        diffs.push(diff);
        current = next;
        if diff <= opts.tol {
            return Ok(SolveReport {
                trajectory: current,
                iterations: diffs.len(),
                measured_rate: fit_rate(&diffs),
                diffs,
                tau,
                converged: true,
                tail_fraction,
            });
        }
        if !diff.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: diffs.len(),
        last: diffs.last().copied().unwrap_or(f64::NAN),
        diffs,
    })
}

/// Picard iteration for a radial potential. τ comes from the potential's
/// PM^{n−2} bound.
pub fn picard_solve(
    potential: &PotentialSpec,
    u0: &SpectralField,
    times: &TimeGrid,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let tau = contraction_factor(potential, u0.n, u0.k)?;
    if tau >= 1.0 && !opts.allow_supercritical {
        return Err(Error::Refused { tau });
    }
    let kernel = RadialKernel::from_potential(potential, u0.n)?;
    let mut report = picard_solve_kernel(
        &kernel,
        u0,
        times,
        &SolveOptions { allow_supercritical: true, ..*opts },
    )?;
    report.tau = tau;
    Ok(report)
}

/// ‖u − (G u₀ + L u)‖_{X_k}.
pub fn fixed_point_residual(kernel: &RadialKernel, u0: &SpectralField, traj: &Trajectory) -> Result<f64> {
    let base = Trajectory::heat_flow(u0, &traj.times)?;
    let image = base.add(&duhamel_apply(kernel, traj)?)?;
    Ok(image.sub(traj)?.sup_norm())
}

/// Outcome of [`continuous_dependence_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependenceCheck {
    pub difference: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Solves with (u₀, V) and (v₀, W) and compares ‖u − v‖_{X_k} with
/// (‖u₀ − v₀‖ + C‖v₀‖‖V − W‖ / (1 − C‖W‖)) / (1 − C‖V‖).
pub fn continuous_dependence_check(
    u0: &SpectralField,
    v0: &SpectralField,
    v_pot: &PotentialSpec,
    w_pot: &PotentialSpec,
    times: &TimeGrid,
    opts: &SolveOptions,
) -> Result<DependenceCheck> {
    let (n, k) = (u0.n, u0.k);
    let rv = threshold_report(v_pot, n, k)?;
    let rw = threshold_report(w_pot, n, k)?;
    if !rv.passes || !rw.passes {
        return Err(Error::Refused { tau: rv.tau.max(rw.tau) });
    }
    let kv = RadialKernel::from_potential(v_pot, n)?;
    let kw = RadialKernel::from_potential(w_pot, n)?;
    let u = picard_solve(v_pot, u0, times, opts)?;
    let v = picard_solve(w_pot, v0, times, opts)?;
    let difference = u.trajectory.sub(&v.trajectory)?.sup_norm();
    // both kernels are c|ξ|^{−(n−2)}, so ‖V − W‖ = |c_V − c_W|
    let vw = (kv.coefficient - kw.coefficient).abs();
    let c = rv.constant;
    let bound = (u0.sub(v0)?.pm_norm() + c * v0.pm_norm() * vw / (1.0 - rw.tau)) / (1.0 - rv.tau);
    Ok(DependenceCheck { difference, bound, holds: difference <= bound * 1.05 })
}

/// Grid-shift self-similarity check for homogeneous data. With λ = r^m the
/// rescaled solution satisfies h(ρ_{j+m}, t) = h(ρ_j, λ²t); returns the
/// largest deviation over overlapping nodes relative to ‖u₀‖.
pub fn self_similarity_residual(
    kernel: &RadialKernel,
    u0: &SpectralField,
    times: &TimeGrid,
    shift: usize,
    opts: &SolveOptions,
) -> Result<f64> {
    if !u0.homogeneous {
        return domain("self-similarity needs homogeneous initial data");
    }
    let count = u0.grid.count;
    if shift == 0 || shift >= count {
        return domain(format!("shift must lie in 1..{count}"));
    }
    let lambda = u0.grid.ratio().powi(shift as i32);
    let first = picard_solve_kernel(kernel, u0, times, opts)?;
    let second = picard_solve_kernel(kernel, u0, &times.scaled(lambda * lambda)?, opts)?;
    let norm = u0.pm_norm();
    let mut worst: f64 = 0.0;
    for (a, b) in first.trajectory.fields.iter().zip(&second.trajectory.fields) {
        for j in 0..count - shift {
            worst = worst.max((b.profile[j] - a.profile[j + shift]).abs());
        }
    }
    Ok(if norm > 0.0 { worst / norm } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::RadialGrid;

    fn small_grid() -> RadialGrid {
        RadialGrid::new(1e-3, 1e2, 160).unwrap()
    }

    #[test]
    fn phi_functions_match_closed_forms() {
        for &x in &[1e-8f64, 1e-3, 0.05, 0.0999, 0.1, 0.5, 3.0] {
            let closed = (1.0 - (-x).exp() * (1.0 + x)) / (x * x);
            if x > 1e-3 {
                assert!((phi2(x) - closed).abs() < 1e-12 * closed, "{x}");
            }
            assert!(phi2(x) > 0.0 && phi2(x) <= 0.5);
        }
        assert!((phi1(1e-12) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn time_grid_layout() {
        let tg = TimeGrid::default();
        assert_eq!(tg.len(), 64);
        assert_eq!(tg.nodes[0], 0.0);
        assert!((tg.nodes[7] - 0.04).abs() < 1e-15);
        assert_eq!(tg.t_end(), 4.0);
        assert!(tg.nodes.windows(2).all(|w| w[1] > w[0]));
        assert!(TimeGrid::standard(1.0, 4).is_err());
        assert!(TimeGrid::from_nodes(vec![0.0, 1.0, 1.0]).is_err());
        assert_eq!(TimeGrid::standard(2.0, 8).unwrap().t_end(), 2.0);
    }

    #[test]
    fn zero_trajectory_maps_to_zero() {
        let grid = small_grid();
        let u0 = SpectralField::zero(4, 3.0, grid).unwrap();
        let tg = TimeGrid::standard(1.0, 16).unwrap();
        let traj = Trajectory::heat_flow(&u0, &tg).unwrap();
        let out = duhamel_apply(&RadialKernel::hardy(4, 0.5).unwrap(), &traj).unwrap();
        assert_eq!(out.sup_norm(), 0.0);
    }

    #[test]
    fn constant_in_time_source_is_integrated_exactly() {
        // ω̂ = ρ^{−k}: L(ω)(t) = τ (1 − e^{−4π²ρ²t}) ω̂ for a Hardy kernel
        let grid = small_grid();
        let (n, k, lambda) = (4, 3.0, 0.5);
        let kernel = RadialKernel::hardy(n, lambda).unwrap();
        let tau = contraction_factor_kernel(&kernel, k).unwrap();
        assert!((tau - 0.5).abs() < 1e-12);
        let w = SpectralField::power_law(n, k, 1.0, grid).unwrap();
        let tg = TimeGrid::standard(2.0, 24).unwrap();
        let traj = Trajectory::new(tg.clone(), vec![w.clone(); tg.len()]).unwrap();
        let out = duhamel_apply(&kernel, &traj).unwrap();
        for (t, f) in tg.nodes.iter().zip(&out.fields) {
            for (j, h) in f.profile.iter().enumerate() {
                let r = grid.node(j);
                let expect = tau * -(-4.0 * PI * PI * r * r * t).exp_m1();
                assert!((h - expect).abs() <= 1e-6 * expect.max(1e-300), "t={t} j={j}: {h} {expect}");
            }
        }
    }

    #[test]
    fn free_heat_flow_converges_in_one_iteration() {
        let grid = small_grid();
        let u0 = SpectralField::gaussian(3, 2.5, grid).unwrap();
        let tg = TimeGrid::standard(1.0, 16).unwrap();
        let rep = picard_solve(&PotentialSpec::hardy(0.0), &u0, &tg, &SolveOptions::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.tau, 0.0);
        let heat = Trajectory::heat_flow(&u0, &tg).unwrap();
        assert_eq!(rep.trajectory, heat);
        assert!(rep.trajectory.norms().iter().all(|&v| v <= u0.pm_norm()));
    }

    #[test]
    fn refuses_supercritical_potential() {
        let grid = small_grid();
        let u0 = SpectralField::power_law(4, 3.0, 1.0, grid).unwrap();
        let tg = TimeGrid::standard(1.0, 12).unwrap();
        let err = picard_solve(&PotentialSpec::hardy(1.2), &u0, &tg, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Refused { tau } if (tau - 1.2).abs() < 1e-12));
        let err = picard_solve(
            &PotentialSpec::hardy(1.2),
            &u0,
            &tg,
            &SolveOptions { allow_supercritical: true, max_iter: 5, ..Default::default() },
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 5, .. }));
    }

    #[test]
    fn contraction_factor_examples() {
        assert!((contraction_factor(&PotentialSpec::hardy(0.5), 4, 3.0).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(contraction_factor(&PotentialSpec::hardy(0.0), 4, 3.0).unwrap(), 0.0);
        // at k = k_i the factor is exactly one
        let (n, lambda) = (4usize, 0.75);
        let l = (1.0f64 - lambda).sqrt();
        for k in [3.0 + l, 3.0 - l] {
            let tau = contraction_factor(&PotentialSpec::hardy(lambda), n, k).unwrap();
            assert!((tau - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_converges_at_predicted_rate_with_small_residual() {
        let grid = small_grid();
        let u0 = SpectralField::gaussian(4, 3.0, grid).unwrap();
        let tg = TimeGrid::standard(2.0, 24).unwrap();
        let pot = PotentialSpec::hardy(0.4);
        let opts = SolveOptions { tol: 1e-10, ..Default::default() };
        let rep = picard_solve(&pot, &u0, &tg, &opts).unwrap();
        assert!(rep.converged);
        for w in rep.diffs[1..].windows(2) {
            assert!(w[1] <= rep.tau * 1.05 * w[0], "{:?}", rep.diffs);
        }
        let kernel = RadialKernel::from_potential(&pot, 4).unwrap();
        let res = fixed_point_residual(&kernel, &u0, &rep.trajectory).unwrap();
        assert!(res <= opts.tol / (1.0 - rep.tau) * 1.05, "{res}");
        let zero_start = picard_solve(&pot, &u0, &tg, &SolveOptions { initial_guess: InitialGuess::Zero, ..opts }).unwrap();
        let gap = zero_start.trajectory.sub(&rep.trajectory).unwrap().sup_norm();
        assert!(gap <= 2.0 * opts.tol / (1.0 - rep.tau));
    }

    #[test]
    fn summary_serializes() {
        let grid = small_grid();
        let u0 = SpectralField::gaussian(3, 2.5, grid).unwrap();
        let tg = TimeGrid::standard(1.0, 10).unwrap();
        let rep = picard_solve(&PotentialSpec::hardy(0.1), &u0, &tg, &SolveOptions::default()).unwrap();
        let json = serde_json::to_string(&rep.summary()).unwrap();
        assert!(json.contains("\"diffs\""));
        let csv = rep.trajectory.to_csv();
        assert!(csv.starts_with("t,rho,h\n"));
        assert_eq!(csv.lines().count(), 1 + 10 * 160);
    }

    #[test]
    fn fit_rate_recovers_geometric_sequence() {
        let d: Vec<f64> = (0..10).map(|i| 3.0 * 0.37f64.powi(i)).collect();
        assert!((fit_rate(&d).unwrap() - 0.37).abs() < 1e-12);
        assert!(fit_rate(&[1.0]).is_none());
        assert!(fit_rate(&[1.0, 0.5]).is_none());
        assert!((fit_rate(&[1.0, 0.5, 0.25]).unwrap() - 0.5).abs() < 1e-12);
    }
}

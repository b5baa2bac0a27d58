use std::f64::consts::PI;
use std::path::PathBuf;

use clap::ValueEnum;
use pmheat::cartesian_backend::CrossCheckConfig;
use pmheat::picard_solver::{SolveOptions, TimeGrid};
use pmheat::potential_catalog::PotentialSpec;
use pmheat::spectral_field::{RadialGrid, SpectralField};
use pmheat::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Threshold,
    Solve,
    Verify,
    Asymptotics,
    Crosscheck,
}

/// Initial data, given by its Fourier transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// û = amplitude · ρ^{−k}
    PowerLaw { k: f64, amplitude: f64 },
    /// power law plus bump_amplitude · e^{−π|x|²/s²}, s = bump_scale
    PowerLawPlusGaussian { k: f64, amplitude: f64, bump_amplitude: f64, bump_scale: f64 },
    /// e^{−π|x|²/s²}, s = scale
    Gaussian { scale: f64 },
}

impl InitialData {
    pub fn field(&self, n: usize, k: f64, grid: RadialGrid) -> Result<SpectralField> {
        let gauss = |a: f64, s: f64| move |r: f64| a * s.powi(n as i32) * (-PI * s * s * r * r).exp();
        match *self {
            InitialData::PowerLaw { k: kd, amplitude } => power_law(n, k, kd, amplitude, grid),
            InitialData::PowerLawPlusGaussian { k: kd, amplitude, bump_amplitude, bump_scale } => {
                positive("bump_scale", bump_scale)?;
                let bump = SpectralField::from_uhat(n, k, grid, gauss(bump_amplitude, bump_scale))?;
                power_law(n, k, kd, amplitude, grid)?.add(&bump)
            }
            InitialData::Gaussian { scale } => {
                positive("scale", scale)?;
                SpectralField::from_uhat(n, k, grid, gauss(1.0, scale))
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

fn power_law(n: usize, k: f64, kd: f64, amplitude: f64, grid: RadialGrid) -> Result<SpectralField> {
    if kd == k {
        SpectralField::power_law(n, k, amplitude, grid)
    } else {
        SpectralField::from_uhat(n, k, grid, |r| amplitude * r.powf(-kd))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeParams {
    pub t_end: f64,
    pub count: usize,
}

impl Default for TimeParams {
    fn default() -> Self {
        Self { t_end: 4.0, count: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsParams {
    /// Data compared against; absent means zero.
    pub reference: Option<InitialData>,
    pub horizon: f64,
    /// Also solve both problems with the potential and record the solution gap.
    pub solve: bool,
}

impl Default for AsymptoticsParams {
    fn default() -> Self {
        Self { reference: None, horizon: 1e3, solve: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub n: usize,
    pub k: f64,
    pub potential: PotentialSpec,
    pub initial_data: InitialData,
    pub grid: RadialGrid,
    pub time: TimeParams,
    pub tol: f64,
    pub max_iter: usize,
    pub allow_supercritical: bool,
    pub output_dir: Option<PathBuf>,
    pub asymptotics: AsymptoticsParams,
    pub crosscheck: CrossCheckConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let opts = SolveOptions::default();
        Self {
            command: None,
            n: 3,
            k: 2.5,
            potential: PotentialSpec::hardy(0.1),
            initial_data: InitialData::Gaussian { scale: 1.0 },
            grid: RadialGrid::default(),
            time: TimeParams::default(),
            tol: opts.tol,
            max_iter: opts.max_iter,
            allow_supercritical: false,
            output_dir: None,
            asymptotics: AsymptoticsParams::default(),
            crosscheck: CrossCheckConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let nf = self.n as f64;
        if self.n < 3 {
            return Err(Error::Domain(format!("dimension must be at least 3, got {}", self.n)));
        }
        if !(self.k > 0.0 && self.k < nf) {
            return Err(Error::Domain(format!("k must lie in (0, {nf}), got {}", self.k)));
        }
        self.potential.validate(self.n)?;
        self.grid.validate()?;
        positive("tol", self.tol)?;
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        positive("time.t_end", self.time.t_end)?;
        Ok(())
    }

    pub fn times(&self) -> Result<TimeGrid> {
        TimeGrid::standard(self.time.t_end, self.time.count)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            allow_supercritical: self.allow_supercritical,
            ..Default::default()
        }
    }

    pub fn initial_field(&self) -> Result<SpectralField> {
        self.initial_data.field(self.n, self.k, self.grid)
    }
}

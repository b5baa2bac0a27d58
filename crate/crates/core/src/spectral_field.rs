//! Radial Fourier-side profiles on a logarithmic grid.
//!
//! A field stores the weighted profile h(ρ) = ρ^k û(ρ), so power-law data are
//! constant profiles and the PM^k norm is a plain maximum over the nodes.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::gl16;
use crate::special_functions::bochner_kernel;

// Lagrange stencil width for the inverse transform's interpolant in ln ρ.
const STENCIL: usize = 6;

/// Logarithmic grid ρ_j = rho_min · r^j, j = 0..count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub rho_min: f64,
    pub rho_max: f64,
    pub count: usize,
}

impl Default for RadialGrid {
    fn default() -> Self {
        Self { rho_min: 1e-4, rho_max: 1e3, count: 512 }
    }
}

impl RadialGrid {
    pub fn new(rho_min: f64, rho_max: f64, count: usize) -> Result<Self> {
        let g = Self { rho_min, rho_max, count };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_min > 0.0 && self.rho_max.is_finite() && self.rho_min < self.rho_max) {
            return domain(format!(
                "grid needs 0 < rho_min < rho_max, got [{}, {}]",
                self.rho_min, self.rho_max
            ));
        }
        if self.count < 16 {
            return domain(format!("grid needs at least 16 nodes, got {}", self.count));
        }
        Ok(())
    }

    /// Node spacing in s = ln ρ.
    pub fn log_step(&self) -> f64 {
        (self.rho_max / self.rho_min).ln() / (self.count - 1) as f64
    }

    pub fn ratio(&self) -> f64 {
        self.log_step().exp()
    }

    pub fn node(&self, j: usize) -> f64 {
        if j + 1 == self.count {
            self.rho_max
        } else {
            self.rho_min * (j as f64 * self.log_step()).exp()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.node(j)).collect()
    }

    /// Same grid with every node multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.rho_min * factor, self.rho_max * factor, self.count)
    }

    fn matches(&self, other: &Self) -> bool {
        self.count == other.count
            && (self.rho_min / other.rho_min - 1.0).abs() < 1e-12
            && (self.rho_max / other.rho_max - 1.0).abs() < 1e-12
    }
}

/// A radial Fourier-side profile û(ρ) stored as h = ρ^k û.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub n: usize,
    pub k: f64,
    pub grid: RadialGrid,
    pub profile: Vec<f64>,
    /// û = c ρ^{−k} exactly.
    pub homogeneous: bool,
}

/// PM^k norm together with where it was attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub index: usize,
    /// Maximum sits on the first or last node of a non-homogeneous field, so
    /// the true supremum may lie outside the grid.
    pub edge_warning: bool,
}

/// Physical-space values from [`SpectralField::inverse_radial_transform`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseTransform {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Estimated truncation tails, per radius.
    pub tails: Vec<f64>,
    /// Some tail exceeded 1e−3 of the value it corrects.
    pub warning: bool,
}

impl SpectralField {
    pub fn from_profile(n: usize, k: f64, grid: RadialGrid, profile: Vec<f64>) -> Result<Self> {
        if n < 1 {
            return domain("dimension must be positive");
        }
        if !k.is_finite() {
            return domain("weight exponent must be finite");
        }
        grid.validate()?;
        if profile.len() != grid.count {
            return Err(Error::Shape(format!(
                "profile has {} entries, grid has {}",
                profile.len(),
                grid.count
            )));
        }
        if let Some(j) = profile.iter().position(|h| !h.is_finite()) {
            return domain(format!("profile is not finite at node {j}"));
        }
        Ok(Self { n, k, grid, profile, homogeneous: false })
    }

    /// û = amplitude · ρ^{−k}.
    pub fn power_law(n: usize, k: f64, amplitude: f64, grid: RadialGrid) -> Result<Self> {
        if !(2.0 < k && k < n as f64) {
            return domain(format!("power-law data need 2 < k < n, got k = {k}, n = {n}"));
        }
        if !amplitude.is_finite() {
            return domain("amplitude must be finite");
        }
        let mut f = Self::from_profile(n, k, grid, vec![amplitude; grid.count])?;
        f.homogeneous = true;
        Ok(f)
    }

    pub fn zero(n: usize, k: f64, grid: RadialGrid) -> Result<Self> {
        Self::from_profile(n, k, grid, vec![0.0; grid.count])
    }

    /// Samples û at the nodes.
    pub fn from_uhat(n: usize, k: f64, grid: RadialGrid, uhat: impl Fn(f64) -> f64) -> Result<Self> {
        let profile = grid.nodes().into_iter().map(|r| r.powf(k) * uhat(r)).collect();
        Self::from_profile(n, k, grid, profile)
    }

    /// û = e^{−πρ²}, the transform of e^{−π|x|²}.
    pub fn gaussian(n: usize, k: f64, grid: RadialGrid) -> Result<Self> {
        Self::from_uhat(n, k, grid, |r| (-PI * r * r).exp())
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    /// û at node j.
    pub fn uhat(&self, j: usize) -> f64 {
        self.profile[j] * self.grid.node(j).powf(-self.k)
    }

    /// h at ρ, linear in ln ρ between nodes; `None` outside the grid.
    pub fn interpolate(&self, rho: f64) -> Option<f64> {
        let g = &self.grid;
        if !(rho >= g.rho_min * (1.0 - 1e-12) && rho <= g.rho_max * (1.0 + 1e-12)) {
            return None;
        }
        let x = ((rho / g.rho_min).ln() / g.log_step()).clamp(0.0, (g.count - 1) as f64);
        let j = (x.floor() as usize).min(g.count - 2);
        let u = x - j as f64;
        Some((1.0 - u) * self.profile[j] + u * self.profile[j + 1])
    }

    pub fn pm_norm(&self) -> f64 {
        self.pm_norm_report().value
    }

    pub fn pm_norm_report(&self) -> NormReport {
        let (index, value) = self
            .profile
            .iter()
            .map(|h| h.abs())
            .enumerate()
            .fold((0, 0.0), |best, (j, v)| if v > best.1 { (j, v) } else { best });
        let edge = index == 0 || index + 1 == self.grid.count;
        NormReport {
            value,
            index,
            edge_warning: edge && value > 0.0 && !self.homogeneous,
        }
    }

    /// G(t): multiplies by e^{−4π²ρ²t}.
    pub fn apply_heat_semigroup(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("semigroup time must be non-negative, got {t}"));
        }
        if t == 0.0 {
            return Ok(self.clone());
        }
        let profile = self
            .profile
            .iter()
            .enumerate()
            .map(|(j, h)| {
                let r = self.grid.node(j);
                h * (-4.0 * PI * PI * r * r * t).exp()
            })
            .collect();
        Ok(Self { profile, homogeneous: false, ..self.clone() })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.k != other.k || !self.grid.matches(&other.grid) {
            return Err(Error::Shape(format!(
                "fields differ: (n={}, k={}, {:?}) vs (n={}, k={}, {:?})",
                self.n, self.k, self.grid, other.n, other.k, other.grid
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let profile = self.profile.iter().zip(&other.profile).map(|(a, b)| a + b).collect();
        Ok(Self {
            profile,
            homogeneous: self.homogeneous && other.homogeneous,
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let profile = self.profile.iter().zip(&other.profile).map(|(a, b)| a - b).collect();
        Ok(Self {
            profile,
            homogeneous: self.homogeneous && other.homogeneous,
            ..self.clone()
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            profile: self.profile.iter().map(|h| c * h).collect(),
            ..self.clone()
        }
    }

    /// u(r) = ∫₀^∞ û(ρ) ρ^{n−1} Ω_n(2πρr) dρ.
    ///
    /// Inside the grid h is interpolated by local quintics in ln ρ. Below rho_min
    /// h is frozen at its first value; above rho_max the leading term of the
    /// oscillatory tail is added and compared against the result.
    pub fn inverse_radial_transform(&self, radii: &[f64]) -> Result<InverseTransform> {
        let nf = self.n as f64;
        if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return domain(format!("radii must be positive, got {r}"));
        }
        if self.k >= nf && self.profile[0] != 0.0 {
            return domain(format!(
                "inverse transform diverges at the origin for k = {} >= n = {}",
                self.k, self.n
            ));
        }
        let results: Vec<(f64, f64, bool)> =
            radii.par_iter().map(|&r| self.inverse_at(r)).collect();
        Ok(InverseTransform {
            radii: radii.to_vec(),
            values: results.iter().map(|x| x.0).collect(),
            tails: results.iter().map(|x| x.1).collect(),
            warning: results.iter().any(|x| x.2),
        })
    }

    fn cubic_h(&self, s: f64) -> f64 {
        let g = &self.grid;
        let ds = g.log_step();
        let x = (s - g.rho_min.ln()) / ds;
        let last = g.count - 1;
        let j = (x.floor().max(0.0) as usize).min(last - 1);
        let start = j.saturating_sub(STENCIL / 2 - 1).min(last + 1 - STENCIL);
        let mut sum = 0.0;
        for a in start..start + STENCIL {
            let mut w = 1.0;
            for b in start..start + STENCIL {
                if b != a {
                    w *= (x - b as f64) / (a as f64 - b as f64);
                }
            }
            sum += w * self.profile[a];
        }
        sum
    }

    fn inverse_at(&self, r: f64) -> (f64, f64, bool) {
        let n = self.n;
        let nf = n as f64;
        let g = &self.grid;
        let ds = g.log_step();
        let s0 = g.rho_min.ln();
        let rule = gl16();
        let mut total = 0.0;
        for j in 0..g.count - 1 {
            let (lo, hi) = (g.node(j), g.node(j + 1));
            let pieces = 1 + (2.0 * r * (hi - lo)).floor() as usize;
            let width = ds / pieces as f64;
            for p in 0..pieces {
                let a = s0 + j as f64 * ds + p as f64 * width;
                total += rule.integrate(a, a + width, |s| {
                    let rho = s.exp();
                    self.cubic_h(s) * rho.powf(nf - self.k) * bochner_kernel(n, 2.0 * PI * rho * r)
                });
            }
        }
        // ρ < rho_min: Ω_n is at its small-argument value.
        let low = if self.profile[0] == 0.0 {
            0.0
        } else {
            let z = 2.0 * PI * g.rho_min * r;
            let omega0 = bochner_kernel(n, 0.0);
            let correction = 1.0 - z * z * (nf - self.k) / (2.0 * nf * (nf - self.k + 2.0));
            self.profile[0] * omega0 * g.rho_min.powf(nf - self.k) / (nf - self.k) * correction
        };
        // ρ > rho_max: integrate the large-argument form of Ω_n by parts once.
        let high = {
            let p = g.rho_max;
            let z = 2.0 * PI * p * r;
            let nu = 0.5 * nf - 1.0;
            let amp = self.profile[g.count - 1]
                * p.powf(nf - 1.0 - self.k)
                * (2.0 * PI).powf(0.5 * nf)
                * z.powf(1.0 - 0.5 * nf)
                * (2.0 / (PI * z)).sqrt();
            let phase = z - 0.5 * nu * PI - 0.25 * PI;
            -amp * phase.sin() / (2.0 * PI * r)
        };
        let value = total + low + high;
        let tail_diverges = self.profile[g.count - 1] != 0.0 && self.k <= 0.5 * (nf - 1.0);
        let warning = tail_diverges || high.abs() > 1e-3 * value.abs();
        (value, high, warning)
    }

    /// CSV with header `rho,h,uhat`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,h,uhat\n");
        for j in 0..self.grid.count {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", self.grid.node(j), self.profile[j], self.uhat(j));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

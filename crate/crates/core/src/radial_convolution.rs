//! Fourier-side convolution of a radial kernel c|η|^{−b} with a radial field.
//!
//! Writing r = ρe^s turns the convolution into a log-convolution of the
//! weighted profile,
//!
//!   h_out(ρ) = ∫ h(ρe^s) κ(s) ds,   κ(s) = c · e^{(n−k)s} · A(e^s),
//!
//! where A(t) = ∫_{S^{n−1}} |e₁ − tω|^{−b} dσ(ω) and the output carries weight
//! k_out = b + k − n. With h piecewise linear in s the integral becomes a
//! discrete convolution with precomputed cell weights.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::potential_catalog::PotentialSpec;
use crate::quadrature::{adaptive, gl12};
use crate::special_functions::{homogeneous_ft_constant, riesz_composition_constant, sphere_area};
use crate::spectral_field::{RadialGrid, SpectralField};

/// The kernel coefficient · |η|^{−exponent} in dimension n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialKernel {
    pub n: usize,
    pub exponent: f64,
    pub coefficient: f64,
}

impl RadialKernel {
    pub fn new(n: usize, exponent: f64, coefficient: f64) -> Result<Self> {
        if n < 2 {
            return domain(format!("kernel dimension must be at least 2, got {n}"));
        }
        if !(exponent > 0.0 && exponent < n as f64) {
            return domain(format!("kernel exponent must lie in (0, {n}), got {exponent}"));
        }
        if !coefficient.is_finite() {
            return domain("kernel coefficient must be finite");
        }
        Ok(Self { n, exponent, coefficient })
    }

    /// Fourier symbol of λ/|x|²: λ γ_{0,n−2} |ξ|^{−(n−2)}.
    pub fn hardy(n: usize, lambda: f64) -> Result<Self> {
        if n < 3 {
            return domain(format!("Hardy kernel needs n >= 3, got {n}"));
        }
        let g = homogeneous_ft_constant(0, n as f64 - 2.0, n)?.re;
        Self::new(n, n as f64 - 2.0, lambda * g)
    }

    /// Radial potentials only: Hardy, or isotropic poles all at the origin.
    pub fn from_potential(spec: &PotentialSpec, n: usize) -> Result<Self> {
        spec.validate(n)?;
        match spec {
            PotentialSpec::Hardy { lambda } => Self::hardy(n, *lambda),
            PotentialSpec::IsotropicMultipolar { poles } if spec.is_radial() => {
                Self::hardy(n, poles.iter().map(|p| p.lambda).sum())
            }
            _ => domain(
                "only radially symmetric potentials can be convolved on the radial grid; \
                 use the Cartesian backend",
            ),
        }
    }
}

/// (|x|^{θ₁−n} ∗ |x|^{θ₂−n})(ρ) = K(θ₁, θ₂, n) ρ^{θ₁+θ₂−n}.
pub fn power_law_convolution_oracle(theta1: f64, theta2: f64, n: usize, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return domain(format!("rho must be positive, got {rho}"));
    }
    Ok(riesz_composition_constant(theta1, theta2, n)? * rho.powf(theta1 + theta2 - n as f64))
}

/// A(t) = ∫_{S^{n−1}} |e₁ − tω|^{−b} dσ(ω).
pub fn shell_integral(n: usize, b: f64, t: f64) -> f64 {
    let nf = n as f64;
    let area = sphere_area(n);
    let big = t.max(1.0);
    let x = t.min(1.0 / t);
    if (b - (nf - 2.0)).abs() < 1e-14 {
        // Newton's theorem
        return area * big.powf(-b);
    }
    if n == 3 {
        let q = 2.0 - b;
        let diff = if x == 1.0 {
            if q > 0.0 { 2f64.powf(q) / q } else { f64::INFINITY }
        } else if q == 0.0 {
            2.0 * x.atanh()
        } else {
            (1.0 - x).powf(q) * (2.0 * q * x.atanh()).exp_m1() / q
        };
        return 2.0 * PI / t * big.powf(q) * diff;
    }
    let z = x * x;
    let inner = if z <= 0.81 {
        hypergeometric_2f1(0.5 * b, 0.5 * b - 0.5 * nf + 1.0, 0.5 * nf, z)
    } else {
        let w = sphere_area(n - 1) / area;
        let gap = (1.0 - x) * (1.0 - x);
        let f = |theta: f64| {
            let h = (0.5 * theta).sin();
            (gap + 4.0 * x * h * h).powf(-0.5 * b) * theta.sin().powi(n as i32 - 2)
        };
        // peak of width ~(1 − x) at θ = 0
        let split = (8.0 * (1.0 - x)).min(PI);
        let a = adaptive(f, 0.0, split, 1e-300, 1e-13);
        let rest = adaptive(f, split, PI, 1e-300, 1e-13);
        w * (a.value + rest.value)
    };
    area * big.powf(-b) * inner
}

fn hypergeometric_2f1(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 0..4000 {
        let jf = j as f64;
        term *= (a + jf) * (b + jf) / ((c + jf) * (jf + 1.0)) * z;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

// Cells of the log-kernel are precomputed out to |s| = TAIL_SPAN.
const TAIL_SPAN: f64 = 18.0;
const GRADED_LEVELS: usize = 40;
const GRADING: f64 = 0.6;

/// Precomputed weights for convolving one kernel with fields of a given
/// weight exponent on a given grid.
#[derive(Debug, Clone)]
pub struct ConvolutionPlan {
    pub kernel: RadialKernel,
    pub k: f64,
    pub k_out: f64,
    pub grid: RadialGrid,
    delta: f64,
    m: usize,
    // cell m ↔ index m + M, m ∈ [−M, M−1]
    p: Vec<f64>,
    q: Vec<f64>,
    // fine nodes per cell: (u ∈ [0,1], Δ·w·κ)
    fine: Vec<Vec<(f64, f64)>>,
    // κ(s) ≈ hi_amp e^{hi_rate s} for s ≫ 1 and lo_amp e^{lo_rate s} for s ≪ −1
    hi_amp: f64,
    hi_rate: f64,
    lo_amp: f64,
    lo_rate: f64,
}

/// Output of a convolution with its extrapolation diagnostics.
#[derive(Debug, Clone)]
pub struct Convolution {
    pub field: SpectralField,
    /// Largest share of an output value that came from data more than one
    /// decade outside the grid.
    pub tail_fraction: f64,
    pub warning: bool,
}

fn cell_nodes(m: i64) -> Vec<(f64, f64)> {
    let rule = gl12();
    let mut out = Vec::new();
    if m == 0 || m == -1 {
        // grade toward s = 0
        let mut hi = 1.0;
        for _ in 0..GRADED_LEVELS {
            let lo = hi * GRADING;
            out.extend(rule.mapped(lo, hi));
            hi = lo;
        }
        out.extend(rule.mapped(0.0, hi));
        if m == -1 {
            for node in &mut out {
                node.0 = 1.0 - node.0;
            }
        }
    } else {
        out.extend(rule.mapped(0.0, 1.0));
    }
    out
}

impl ConvolutionPlan {
    pub fn new(kernel: RadialKernel, k: f64, grid: RadialGrid) -> Result<Self> {
        grid.validate()?;
        let n = kernel.n;
        let nf = n as f64;
        let b = kernel.exponent;
        if !(k > 0.0 && k < nf) {
            return domain(format!("field exponent must lie in (0, {n}), got {k}"));
        }
        if !(b + k > nf) {
            return domain(format!(
                "convolution diverges at infinity: exponents {b} + {k} must exceed n = {n}"
            ));
        }
        let delta = grid.log_step();
        let m = (grid.count - 1).max((TAIL_SPAN / delta).ceil() as usize);
        let cells: Vec<i64> = (-(m as i64)..m as i64).collect();
        let fine: Vec<Vec<(f64, f64)>> = cells
            .par_iter()
            .map(|&c| {
                cell_nodes(c)
                    .into_iter()
                    .map(|(u, w)| {
                        let s = (c as f64 + u) * delta;
                        let kappa = kernel.coefficient * ((nf - k) * s).exp() * shell_integral(n, b, s.exp());
                        (u, w * delta * kappa)
                    })
                    .collect()
            })
            .collect();
        let p = fine.iter().map(|c| c.iter().map(|(u, w)| (1.0 - u) * w).sum()).collect();
        let q = fine.iter().map(|c| c.iter().map(|(u, w)| u * w).sum()).collect();
        let area = sphere_area(n);
        Ok(Self {
            kernel,
            k,
            k_out: b + k - nf,
            grid,
            delta,
            m,
            p,
            q,
            fine,
            hi_amp: area * kernel.coefficient,
            hi_rate: nf - k - b,
            lo_amp: area * kernel.coefficient,
            lo_rate: nf - k,
        })
    }

    /// ∫ κ over the whole line; equals c·K(n−b, n−k, n).
    pub fn kernel_mass(&self) -> f64 {
        let md = self.m as f64 * self.delta;
        let inner: f64 = self.p.iter().zip(&self.q).map(|(a, b)| a + b).sum();
        inner + self.hi_amp * (self.hi_rate * md).exp() / -self.hi_rate
            + self.lo_amp * (-self.lo_rate * md).exp() / self.lo_rate
    }

    fn cell(&self, m: i64) -> usize {
        (m + self.m as i64) as usize
    }

    /// E(D) = ∫_{DΔ}^∞ e^{p(s−DΔ)} κ(s) ds for D = 0..=M (upper tail), or
    /// ∫_{−∞}^{−DΔ} e^{p(s+DΔ)} κ(s) ds (lower tail).
    fn tail_table(&self, slope: f64, upper: bool) -> Vec<f64> {
        let m = self.m;
        let md = m as f64 * self.delta;
        let mut table = vec![0.0; m + 1];
        table[m] = if upper {
            self.hi_amp * (self.hi_rate * md).exp() / -(slope + self.hi_rate)
        } else {
            self.lo_amp * (-self.lo_rate * md).exp() / (slope + self.lo_rate)
        };
        let step = (if upper { slope } else { -slope } * self.delta).exp();
        for d in (0..m).rev() {
            let cell_integral: f64 = if upper {
                self.fine[self.cell(d as i64)]
                    .iter()
                    .map(|(u, w)| (slope * u * self.delta).exp() * w)
                    .sum()
            } else {
                self.fine[self.cell(-(d as i64) - 1)]
                    .iter()
                    .map(|(u, w)| (slope * (u - 1.0) * self.delta).exp() * w)
                    .sum()
            };
            table[d] = cell_integral + step * table[d + 1];
        }
        table
    }

    fn tail_at(&self, table: &[f64], slope: f64, d: usize, upper: bool) -> f64 {
        if d <= self.m {
            return table[d];
        }
        let sd = d as f64 * self.delta;
        if upper {
            self.hi_amp * (self.hi_rate * sd).exp() / -(slope + self.hi_rate)
        } else {
            self.lo_amp * (-self.lo_rate * sd).exp() / (slope + self.lo_rate)
        }
    }

    pub fn apply(&self, field: &SpectralField) -> Result<Convolution> {
        if field.n != self.kernel.n || field.k != self.k || field.grid != self.grid {
            return Err(Error::Shape(format!(
                "plan built for (n={}, k={}, {:?}), field has (n={}, k={}, {:?})",
                self.kernel.n, self.k, self.grid, field.n, field.k, field.grid
            )));
        }
        let h = &field.profile;
        let count = h.len();
        let delta = self.delta;
        let slope = |a: f64, b: f64| -> Option<f64> {
            if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
                None
            } else {
                Some((b / a).ln() / delta)
            }
        };
        let p_hi = slope(h[count - 2], h[count - 1]).map(|p| p.min(0.0));
        let p_lo = slope(h[0], h[1]).map(|p| p.clamp(0.0, 50.0));
        let hi_table = p_hi.map(|p| self.tail_table(p, true));
        let lo_table = p_lo.map(|p| self.tail_table(p, false));
        let decade = (10f64.ln() / delta).ceil() as usize;
        let m = self.m as i64;

        let rows: Vec<(f64, f64)> = (0..count)
            .into_par_iter()
            .map(|j| {
                let mut acc = 0.0;
                for i in 0..count - 1 {
                    let c = (i as i64 - j as i64 + m) as usize;
                    acc += h[i] * self.p[c] + h[i + 1] * self.q[c];
                }
                let mut far = 0.0;
                if let (Some(p), Some(t)) = (p_hi, &hi_table) {
                    let d = count - 1 - j;
                    acc += h[count - 1] * t[d];
                    far += (h[count - 1] * (p * decade as f64 * delta).exp()
                        * self.tail_at(t, p, d + decade, true))
                    .abs();
                }
                if let (Some(p), Some(t)) = (p_lo, &lo_table) {
                    acc += h[0] * t[j];
                    far += (h[0] * (-p * decade as f64 * delta).exp()
                        * self.tail_at(t, p, j + decade, false))
                    .abs();
                }
                (acc, far)
            })
            .collect();

        let tail_fraction = rows
            .iter()
            .map(|(v, far)| if *far == 0.0 { 0.0 } else { far / v.abs() })
            .fold(0.0, f64::max);
        let mut out = SpectralField::from_profile(
            field.n,
            self.k_out,
            self.grid,
            rows.iter().map(|r| r.0).collect(),
        )?;
        out.homogeneous = field.homogeneous;
        Ok(Convolution {
            field: out,
            tail_fraction,
            warning: !field.homogeneous && tail_fraction > 1e-3,
        })
    }
}

/// One-shot convolution; build a [`ConvolutionPlan`] when applying repeatedly.
pub fn convolve_radial(kernel: &RadialKernel, field: &SpectralField) -> Result<Convolution> {
    if kernel.n != field.n {
        return Err(Error::Shape(format!(
            "kernel dimension {} differs from field dimension {}",
            kernel.n, field.n
        )));
    }
    ConvolutionPlan::new(*kernel, field.k, field.grid)?.apply(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::hardy_constant;
    use proptest::prelude::*;

    // Direct angular quadrature of A(t), independent of the closed forms.
    fn shell_by_quadrature(n: usize, b: f64, t: f64) -> f64 {
        let w = sphere_area(n - 1);
        let f = |th: f64| (1.0 + t * t - 2.0 * t * th.cos()).powf(-0.5 * b) * th.sin().powi(n as i32 - 2);
        let pts = [0.0, 1e-3, 1e-2, 0.1, 0.5, PI];
        w * pts
            .windows(2)
            .map(|p| adaptive(f, p[0], p[1], 1e-300, 1e-12).value)
            .sum::<f64>()
    }

    #[test]
    fn shell_integral_routes_agree_with_quadrature() {
        for &(n, b) in &[(3, 1.0), (3, 2.0), (3, 1.5), (3, 2.5), (4, 2.0), (4, 2.5), (5, 3.7), (6, 4.0), (6, 3.0)] {
            for &t in &[0.01, 0.3, 0.8, 0.95, 0.999, 1.001, 1.3, 5.0, 100.0] {
                let a = shell_integral(n, b, t);
                let e = shell_by_quadrature(n, b, t);
                assert!(((a - e) / e).abs() < 1e-8, "n={n} b={b} t={t}: {a} vs {e}");
            }
        }
    }

    #[test]
    fn shell_integral_is_continuous_through_t_equal_one() {
        for &(n, b) in &[(3, 0.6), (3, 1.5), (4, 0.8), (5, 2.5), (6, 1.0)] {
            let at = shell_integral(n, b, 1.0);
            for &t in &[1.0 - 1e-12, 1.0 + 1e-12] {
                let near = shell_integral(n, b, t);
                assert!(at.is_finite() && ((near - at) / at).abs() < 1e-5, "n={n} b={b} t={t}: {near} vs {at}");
            }
        }
    }

    #[test]
    fn oracle_examples() {
        let v = power_law_convolution_oracle(2.0, 1.0, 4, 1.0).unwrap();
        assert!((v - 4.0 * PI * PI).abs() < 1e-12);
        let v = power_law_convolution_oracle(2.0, 1.0, 4, 2.0).unwrap();
        assert!((v - 2.0 * PI * PI).abs() < 1e-12);
        let a = power_law_convolution_oracle(1.3, 2.1, 5, 0.7).unwrap();
        let b = power_law_convolution_oracle(2.1, 1.3, 5, 0.7).unwrap();
        assert!((a - b).abs() < 1e-13 * a);
        assert!(power_law_convolution_oracle(2.0, 2.0, 4, 1.0).is_err());
    }

    #[test]
    fn power_law_example_matches_closed_form() {
        let grid = RadialGrid::default();
        let kernel = RadialKernel::new(4, 2.0, 1.0).unwrap();
        let f = SpectralField::power_law(4, 3.0, 1.0, grid).unwrap();
        let out = convolve_radial(&kernel, &f).unwrap();
        assert_eq!(out.field.k, 1.0);
        assert!(!out.warning);
        for h in &out.field.profile {
            assert!((h / (4.0 * PI * PI) - 1.0).abs() < 1e-8, "{h}");
        }
    }

    #[test]
    fn kernel_mass_is_the_riesz_constant() {
        let grid = RadialGrid::default();
        for &(n, b, k) in &[(3, 2.0, 1.5), (4, 2.0, 3.0), (4, 2.0, 2.5), (6, 4.0, 3.0), (5, 3.0, 3.5)] {
            let plan = ConvolutionPlan::new(RadialKernel::new(n, b, 1.0).unwrap(), k, grid).unwrap();
            let expect = riesz_composition_constant(n as f64 - b, n as f64 - k, n).unwrap();
            assert!((plan.kernel_mass() / expect - 1.0).abs() < 1e-9, "{n} {b} {k}");
        }
    }

    #[test]
    fn hardy_kernel_reproduces_hardy_constant() {
        // ρ^{k−2}(V̂ ∗ ρ^{−k}) / (4π²) = ‖V‖ C_{n−2,k}
        let grid = RadialGrid::default();
        for &(n, k) in &[(3, 2.5), (4, 3.0), (5, 3.2)] {
            let plan = ConvolutionPlan::new(RadialKernel::hardy(n, 1.0).unwrap(), k, grid).unwrap();
            let norm = crate::special_functions::inverse_square_norm(n).unwrap();
            let c = plan.kernel_mass() / (4.0 * PI * PI * norm);
            assert!((c / hardy_constant(n, k).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_and_linearity() {
        let grid = RadialGrid::default();
        let kernel = RadialKernel::hardy(3, 0.2).unwrap();
        let z = SpectralField::zero(3, 2.5, grid).unwrap();
        assert!(convolve_radial(&kernel, &z).unwrap().field.profile.iter().all(|&h| h == 0.0));
        let f = SpectralField::gaussian(3, 2.5, grid).unwrap();
        let a = convolve_radial(&kernel, &f.scale(-2.5)).unwrap().field;
        let b = convolve_radial(&kernel, &f).unwrap().field.scale(-2.5);
        for (x, y) in a.profile.iter().zip(&b.profile) {
            assert!((x - y).abs() <= 1e-14 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        let grid = RadialGrid::default();
        assert!(RadialKernel::new(3, 3.0, 1.0).is_err());
        assert!(ConvolutionPlan::new(RadialKernel::new(4, 2.0, 1.0).unwrap(), 1.5, grid).is_err());
        let dip = PotentialSpec::Dipole { d: vec![1.0, 0.0, 0.0] };
        assert!(RadialKernel::from_potential(&dip, 3).is_err());
    }

    #[test]
    fn gaussian_matches_direct_quadrature() {
        // (|η|^{−2} ∗ e^{−π|η|²})(ρ) in R⁴ by radial quadrature of the Newton form:
        // |S³| ∫ e^{−πr²} max(ρ, r)^{−2} r³ dr
        let grid = RadialGrid::default();
        let kernel = RadialKernel::new(4, 2.0, 1.0).unwrap();
        let f = SpectralField::gaussian(4, 3.0, grid).unwrap();
        let out = convolve_radial(&kernel, &f).unwrap().field;
        let area = sphere_area(4);
        for j in (40..480).step_by(37) {
            let rho = grid.node(j);
            let g = |r: f64| (-PI * r * r).exp() * r.powi(3) * rho.max(r).powi(-2);
            let direct = area
                * (adaptive(g, 0.0, rho, 1e-300, 1e-12).value
                    + adaptive(g, rho, rho + 20.0, 1e-300, 1e-12).value);
            let got = out.profile[j] * rho.powf(-out.k);
            assert!((got / direct - 1.0).abs() < 1e-4, "rho={rho}: {got} vs {direct}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn output_bounded_by_constant_times_norm(
            a in 0.2f64..3.0, w in 0.1f64..5.0, phase in 0.0f64..6.0, k in 2.2f64..2.9,
        ) {
            let grid = RadialGrid::new(1e-3, 1e2, 200).unwrap();
            let kernel = RadialKernel::hardy(3, 1.0).unwrap();
            let f = SpectralField::from_profile(
                3, k, grid,
                grid.nodes().iter().map(|r| a * (w * r.ln() + phase).sin() / (1.0 + r)).collect(),
            ).unwrap();
            let plan = ConvolutionPlan::new(kernel, k, grid).unwrap();
            let out = plan.apply(&f).unwrap();
            prop_assert!(out.field.pm_norm() <= plan.kernel_mass() * f.pm_norm() * (1.0 + 1e-9));
        }
    }
}

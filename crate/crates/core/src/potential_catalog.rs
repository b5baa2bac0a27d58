//! The inverse-square potential families: Hardy, isotropic multipolar, dipole
//! and anisotropic multipolar. Each can be evaluated pointwise, on the Fourier
//! side, bounded in PM^{n−2}, and checked against the smallness condition
//! ‖V‖_{PM^{n−2}} < 1/C_{n−2,k}.
//!
//! Dipole strengths |d| are measured in the sum (ℓ¹) norm throughout. The
//! PM^{n−2} bounds and parameter thresholds depend on this choice.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special_functions::{
    beta_fn, dipole_norm_factor, hardy_constant, homogeneous_ft_constant, inverse_square_norm,
    optimal_k,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub center: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipolePole {
    pub center: Vec<f64>,
    pub d: Vec<f64>,
}

/// A singular potential. JSON form: `{"type": "hardy", "lambda": 0.5}`,
/// `{"type": "isotropic_multipolar", "poles": [{"center": [..], "lambda": ..}]}`,
/// `{"type": "dipole", "d": [..]}`,
/// `{"type": "anisotropic_multipolar", "dpoles": [{"center": [..], "d": [..]}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// λ/|x|²
    Hardy { lambda: f64 },
    /// Σ λ_j / |x − x^j|²
    IsotropicMultipolar { poles: Vec<Pole> },
    /// d·x / |x|³
    Dipole { d: Vec<f64> },
    /// Σ (x − x^j)·d^j / |x − x^j|³
    AnisotropicMultipolar { dpoles: Vec<DipolePole> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Hardy,
    IsotropicMultipolar,
    Dipole,
    AnisotropicMultipolar,
}

fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_vector(v: &[f64], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::Shape(format!("{what} has length {}, expected {n}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return domain(format!("{what} has non-finite entries"));
    }
    Ok(())
}

impl PotentialSpec {
    pub fn hardy(lambda: f64) -> Self {
        Self::Hardy { lambda }
    }

    pub fn kind(&self) -> PotentialKind {
        match self {
            Self::Hardy { .. } => PotentialKind::Hardy,
            Self::IsotropicMultipolar { .. } => PotentialKind::IsotropicMultipolar,
            Self::Dipole { .. } => PotentialKind::Dipole,
            Self::AnisotropicMultipolar { .. } => PotentialKind::AnisotropicMultipolar,
        }
    }

    /// Checks construction invariants for dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 3 {
            return domain(format!("dimension must be at least 3, got {n}"));
        }
        match self {
            Self::Hardy { lambda } => {
                if !lambda.is_finite() {
                    return domain("lambda must be finite");
                }
            }
            Self::IsotropicMultipolar { poles } => {
                if poles.is_empty() {
                    return domain("isotropic multipolar potential needs at least one pole");
                }
                for p in poles {
                    check_vector(&p.center, n, "pole center")?;
                    if !p.lambda.is_finite() {
                        return domain("pole strength must be finite");
                    }
                }
            }
            Self::Dipole { d } => {
                check_vector(d, n, "dipole vector")?;
                if norm1(d) == 0.0 {
                    return domain("dipole vector must be non-zero");
                }
            }
            Self::AnisotropicMultipolar { dpoles } => {
                if dpoles.is_empty() {
                    return domain("anisotropic multipolar potential needs at least one pole");
                }
                for p in dpoles {
                    check_vector(&p.center, n, "pole center")?;
                    check_vector(&p.d, n, "pole direction")?;
                }
            }
        }
        Ok(())
    }

    /// Size of the parameters that enter the smallness condition: |λ|, Σ|λ_j|,
    /// |d| or Σ|d^j| (sum norms).
    pub fn parameter_size(&self) -> f64 {
        match self {
            Self::Hardy { lambda } => lambda.abs(),
            Self::IsotropicMultipolar { poles } => poles.iter().map(|p| p.lambda.abs()).sum(),
            Self::Dipole { d } => norm1(d),
            Self::AnisotropicMultipolar { dpoles } => dpoles.iter().map(|p| norm1(&p.d)).sum(),
        }
    }

    /// Whether the potential is radially symmetric about the origin.
    pub fn is_radial(&self) -> bool {
        match self {
            Self::Hardy { .. } => true,
            Self::IsotropicMultipolar { poles } => {
                poles.iter().all(|p| p.center.iter().all(|&c| c == 0.0))
            }
            _ => false,
        }
    }
}

/// V(x). `x` must not coincide with a pole.
pub fn physical_value(spec: &PotentialSpec, x: &[f64]) -> Result<f64> {
    let n = x.len();
    spec.validate(n)?;
    let at_pole = || Error::Singularity(format!("V evaluated at a pole, x = {x:?}"));
    match spec {
        PotentialSpec::Hardy { lambda } => {
            let r2 = dot(x, x);
            if r2 == 0.0 {
                return Err(at_pole());
            }
            Ok(lambda / r2)
        }
        PotentialSpec::IsotropicMultipolar { poles } => {
            let mut v = 0.0;
            for p in poles {
                let r2: f64 = x.iter().zip(&p.center).map(|(a, c)| (a - c) * (a - c)).sum();
                if r2 == 0.0 {
                    return Err(at_pole());
                }
                v += p.lambda / r2;
            }
            Ok(v)
        }
        PotentialSpec::Dipole { d } => {
            let r = norm2(x);
            if r == 0.0 {
                return Err(at_pole());
            }
            Ok(dot(d, x) / (r * r * r))
        }
        PotentialSpec::AnisotropicMultipolar { dpoles } => {
            let mut v = 0.0;
            for p in dpoles {
                let y: Vec<f64> = x.iter().zip(&p.center).map(|(a, c)| a - c).collect();
                let r = norm2(&y);
                if r == 0.0 {
                    return Err(at_pole());
                }
                v += dot(&p.d, &y) / (r * r * r);
            }
            Ok(v)
        }
    }
}

/// V̂(ξ) with f̂(ξ) = ∫ f(x) e^{−2πiξ·x} dx.
pub fn fourier_symbol(spec: &PotentialSpec, xi: &[f64]) -> Result<Complex64> {
    let n = xi.len();
    spec.validate(n)?;
    let rho = norm2(xi);
    if rho == 0.0 {
        return Err(Error::Singularity("V̂ is singular at ξ = 0".into()));
    }
    let phase = |center: &[f64]| Complex64::from_polar(1.0, -2.0 * PI * dot(center, xi));
    match spec {
        PotentialSpec::Hardy { lambda } => {
            let g = homogeneous_ft_constant(0, n as f64 - 2.0, n)?;
            Ok(g * (lambda * rho.powf(2.0 - n as f64)))
        }
        PotentialSpec::IsotropicMultipolar { poles } => {
            let g = homogeneous_ft_constant(0, n as f64 - 2.0, n)?;
            let radial = rho.powf(2.0 - n as f64);
            Ok(poles
                .iter()
                .map(|p| phase(&p.center) * (p.lambda * radial))
                .sum::<Complex64>()
                * g)
        }
        PotentialSpec::Dipole { d } => {
            let g = homogeneous_ft_constant(1, n as f64 - 2.0, n)?;
            Ok(g * (dot(d, xi) / rho.powf(n as f64 - 1.0)))
        }
        PotentialSpec::AnisotropicMultipolar { dpoles } => {
            let g = homogeneous_ft_constant(1, n as f64 - 2.0, n)?;
            let scale = rho.powf(1.0 - n as f64);
            Ok(dpoles
                .iter()
                .map(|p| phase(&p.center) * (dot(&p.d, xi) * scale))
                .sum::<Complex64>()
                * g)
        }
    }
}

/// A PM^{n−2} norm value, exact or a triangle-inequality upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBound {
    pub value: f64,
    pub exact: bool,
}

/// ‖V‖_{PM^{n−2}}, exact when the bound is attained (Hardy, one isotropic pole,
/// one dipole whose direction has a single non-zero component).
pub fn pm_norm_bound(spec: &PotentialSpec, n: usize) -> Result<NormBound> {
    spec.validate(n)?;
    let single_axis = |d: &[f64]| d.iter().filter(|&&c| c != 0.0).count() <= 1;
    Ok(match spec {
        PotentialSpec::Hardy { lambda } => NormBound {
            value: lambda.abs() * inverse_square_norm(n)?,
            exact: true,
        },
        PotentialSpec::IsotropicMultipolar { poles } => NormBound {
            value: spec.parameter_size() * inverse_square_norm(n)?,
            exact: poles.len() == 1,
        },
        PotentialSpec::Dipole { d } => NormBound {
            value: norm1(d) * dipole_norm_factor(n)?,
            exact: single_axis(d),
        },
        PotentialSpec::AnisotropicMultipolar { dpoles } => NormBound {
            value: spec.parameter_size() * dipole_norm_factor(n)?,
            exact: dpoles.len() == 1 && single_axis(&dpoles[0].d),
        },
    })
}

/// Largest admissible parameter size at index k: (k−2)(n−k) for the
/// inverse-square families and π(k−2)(n−k) / ((n−2) β(1/2, (n−1)/2)) for the
/// dipole families.
pub fn parameter_threshold(kind: PotentialKind, n: usize, k: f64) -> Result<f64> {
    // validates (n, k)
    hardy_constant(n, k)?;
    let nf = n as f64;
    let window = (k - 2.0) * (nf - k);
    Ok(match kind {
        PotentialKind::Hardy | PotentialKind::IsotropicMultipolar => window,
        PotentialKind::Dipole | PotentialKind::AnisotropicMultipolar => {
            PI * window / ((nf - 2.0) * beta_fn(0.5, 0.5 * (nf - 1.0))?)
        }
    })
}

/// Smallness-condition report for one (V, n, k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub kind: PotentialKind,
    pub n: usize,
    pub k: f64,
    pub norm_bound: NormBound,
    /// C_{n−2,k}
    pub constant: f64,
    /// τ = C_{n−2,k} · ‖V‖ (bound)
    pub tau: f64,
    /// 1 / C_{n−2,k}
    pub bound_rhs: f64,
    pub passes: bool,
    /// bound_rhs − ‖V‖
    pub margin: f64,
    /// |λ|, Σ|λ_j|, |d| or Σ|d^j|
    pub parameter: f64,
    /// Admissible bound on `parameter` at this k.
    pub parameter_bound: f64,
    pub k_opt: f64,
    pub tau_at_k_opt: f64,
}

pub fn threshold_report(spec: &PotentialSpec, n: usize, k: f64) -> Result<ThresholdReport> {
    let constant = hardy_constant(n, k)?;
    let norm_bound = pm_norm_bound(spec, n)?;
    let tau = constant * norm_bound.value;
    let bound_rhs = 1.0 / constant;
    let k_opt = optimal_k(n)?;
    let parameter = spec.parameter_size();
    let parameter_bound = parameter_threshold(spec.kind(), n, k)?;
    Ok(ThresholdReport {
        kind: spec.kind(),
        n,
        k,
        norm_bound,
        constant,
        tau,
        bound_rhs,
        // same inequality as ‖V‖ < 1/C, without the rounding of the product
        passes: parameter < parameter_bound,
        margin: bound_rhs - norm_bound.value,
        parameter,
        parameter_bound,
        k_opt,
        tau_at_k_opt: hardy_constant(n, k_opt)? * norm_bound.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    fn two_poles() -> PotentialSpec {
        PotentialSpec::IsotropicMultipolar {
            poles: vec![
                Pole { center: vec![0.0; 3], lambda: 1.0 },
                Pole { center: e(3, 0), lambda: 1.0 },
            ],
        }
    }

    #[test]
    fn physical_values() {
        let v = physical_value(&PotentialSpec::hardy(1.0), &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(v, 1.0);
        let dip = PotentialSpec::Dipole { d: e(3, 0) };
        assert!((physical_value(&dip, &[2.0, 0.0, 0.0]).unwrap() - 0.25).abs() < 1e-15);
        assert!((physical_value(&two_poles(), &[2.0, 0.0, 0.0]).unwrap() - 1.25).abs() < 1e-15);
        assert!(matches!(
            physical_value(&two_poles(), &[1.0, 0.0, 0.0]),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn fourier_symbols() {
        let v = fourier_symbol(&PotentialSpec::hardy(1.0), &[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((v.re - 0.25).abs() < 1e-15 && v.im == 0.0);
        let v = fourier_symbol(&PotentialSpec::Dipole { d: e(3, 0) }, &e(3, 0)).unwrap();
        assert!(v.re.abs() < 1e-15 && (v.im + 2.0).abs() < 1e-14);
        let pair = PotentialSpec::IsotropicMultipolar {
            poles: vec![
                Pole { center: e(4, 0), lambda: 1.0 },
                Pole { center: e(4, 0).iter().map(|x| -x).collect(), lambda: 1.0 },
            ],
        };
        let xi = [3.0, 0.5, 0.0, 0.0];
        let v = fourier_symbol(&pair, &xi).unwrap();
        let rho2 = 9.25;
        assert!((v.re - 2.0 / rho2).abs() < 1e-13 && v.im.abs() < 1e-13);
        assert!(matches!(
            fourier_symbol(&pair, &[0.0; 4]),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn norm_bounds() {
        let b = pm_norm_bound(&PotentialSpec::hardy(1.0), 4).unwrap();
        assert!((b.value - 1.0).abs() < 1e-15 && b.exact);
        let b = pm_norm_bound(&PotentialSpec::Dipole { d: vec![0.5, 0.5, 0.0] }, 3).unwrap();
        assert!((b.value - 2.0).abs() < 1e-14 && !b.exact);
        let iso = PotentialSpec::IsotropicMultipolar {
            poles: vec![
                Pole { center: vec![0.0; 4], lambda: 0.3 },
                Pole { center: e(4, 1), lambda: -0.4 },
            ],
        };
        let b = pm_norm_bound(&iso, 4).unwrap();
        assert!((b.value - 0.7).abs() < 1e-15 && !b.exact);
    }

    #[test]
    fn threshold_examples() {
        let r = threshold_report(&PotentialSpec::hardy(0.5), 4, 3.0).unwrap();
        assert!((r.tau - 0.5).abs() < 1e-14 && r.passes && (r.margin - 0.5).abs() < 1e-14);
        let r = threshold_report(&PotentialSpec::hardy(1.2), 4, 3.0).unwrap();
        assert!((r.tau - 1.2).abs() < 1e-14 && !r.passes);
        let r = threshold_report(&PotentialSpec::Dipole { d: e(3, 2) }, 3, 2.5).unwrap();
        assert!((r.parameter_bound - PI / 8.0).abs() < 1e-14);
        assert!(threshold_report(&PotentialSpec::hardy(0.1), 4, 4.0).is_err());
    }

    #[test]
    fn parameter_bound_is_equivalent_to_tau_below_one() {
        let specs = [
            PotentialSpec::hardy(0.3),
            two_poles(),
            PotentialSpec::Dipole { d: vec![0.1, -0.05, 0.02] },
            PotentialSpec::AnisotropicMultipolar {
                dpoles: vec![
                    DipolePole { center: e(3, 1), d: vec![0.1, 0.0, 0.0] },
                    DipolePole { center: e(3, 2), d: vec![0.0, 0.05, 0.1] },
                ],
            },
        ];
        for spec in &specs {
            for i in 1..40 {
                let k = 2.0 + i as f64 / 40.0;
                let r = threshold_report(spec, 3, k).unwrap();
                // τ = parameter / parameter_bound
                assert!((r.tau - r.parameter / r.parameter_bound).abs() < 1e-12 * r.tau.max(1.0));
                assert!(r.tau_at_k_opt <= r.tau * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn json_field_names() {
        let spec = PotentialSpec::AnisotropicMultipolar {
            dpoles: vec![DipolePole { center: vec![0.0; 3], d: e(3, 0) }],
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"type\":\"anisotropic_multipolar\""));
        assert!(text.contains("\"dpoles\""));
        let parsed: PotentialSpec =
            serde_json::from_str(r#"{"type":"isotropic_multipolar","poles":[{"center":[0,0,0],"lambda":0.2}]}"#)
                .unwrap();
        assert_eq!(parsed.parameter_size(), 0.2);
        let hardy: PotentialSpec = serde_json::from_str(r#"{"type":"hardy","lambda":0.5}"#).unwrap();
        assert_eq!(hardy, PotentialSpec::hardy(0.5));
    }

    #[test]
    fn validation() {
        assert!(PotentialSpec::Dipole { d: vec![0.0; 3] }.validate(3).is_err());
        assert!(PotentialSpec::IsotropicMultipolar { poles: vec![] }.validate(3).is_err());
        assert!(matches!(
            PotentialSpec::Dipole { d: vec![1.0, 0.0] }.validate(3),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn symbol_magnitude_respects_norm_bound() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let specs = [
            (PotentialSpec::hardy(-0.7), 5),
            (two_poles(), 3),
            (PotentialSpec::Dipole { d: vec![0.3, -0.2, 0.6, 0.1] }, 4),
            (
                PotentialSpec::AnisotropicMultipolar {
                    dpoles: vec![
                        DipolePole { center: vec![0.2, 0.0, -1.0], d: vec![0.1, 0.4, 0.0] },
                        DipolePole { center: vec![0.0, 1.5, 0.0], d: vec![-0.3, 0.0, 0.2] },
                    ],
                },
                3,
            ),
        ];
        for (spec, n) in &specs {
            let bound = pm_norm_bound(spec, *n).unwrap().value;
            for _ in 0..1000 {
                let xi: Vec<f64> = (0..*n).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let rho = norm2(&xi);
                let v = fourier_symbol(spec, &xi).unwrap();
                assert!(v.norm() * rho.powf(*n as f64 - 2.0) <= bound * (1.0 + 1e-12));
            }
        }
    }

    proptest! {
        #[test]
        fn conjugate_symmetry(
            xi in proptest::collection::vec(-3.0f64..3.0, 3),
            c in proptest::collection::vec(-2.0f64..2.0, 3),
            lam in -1.0f64..1.0,
        ) {
            prop_assume!(norm2(&xi) > 1e-3);
            let specs = [
                PotentialSpec::IsotropicMultipolar { poles: vec![
                    Pole { center: c.clone(), lambda: lam },
                    Pole { center: vec![0.0; 3], lambda: 0.5 },
                ]},
                PotentialSpec::AnisotropicMultipolar { dpoles: vec![
                    DipolePole { center: c.clone(), d: vec![lam, 0.2, -0.1] },
                ]},
            ];
            let minus: Vec<f64> = xi.iter().map(|x| -x).collect();
            for spec in &specs {
                let a = fourier_symbol(spec, &xi).unwrap();
                let b = fourier_symbol(spec, &minus).unwrap();
                prop_assert!((a - b.conj()).norm() < 1e-12 * (1.0 + a.norm()));
            }
        }

        #[test]
        fn tau_is_minimised_at_optimal_k(n in 3usize..7, size in 0.01f64..2.0) {
            let spec = PotentialSpec::hardy(size);
            let best = threshold_report(&spec, n, optimal_k(n).unwrap()).unwrap().tau;
            for i in 1..50 {
                let k = 2.0 + (n as f64 - 2.0) * i as f64 / 50.0;
                let tau = threshold_report(&spec, n, k).unwrap().tau;
                prop_assert!(tau >= best * (1.0 - 1e-9));
            }
        }
    }
}

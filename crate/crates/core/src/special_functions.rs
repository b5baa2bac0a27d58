//! Closed-form constants behind the well-posedness theory: Gamma and Beta,
//! the Riesz normalisation ν_θ, the Riesz composition constant K(θ₁,θ₂,n),
//! the Fourier constant of homogeneous kernels γ_{l,α}, the bilinear constant
//! C_{b₁,b₂} and its Hardy specialisation C_{n−2,k}, plus the Bessel-type
//! kernels used by radial Fourier transforms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_COEFFS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_76e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];

/// ln Γ(x) for x > 0 (Lanczos, g = 607/128, evaluated in log space).
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("log_gamma requires a positive finite argument, got {x}"));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum away from its pole.
        return Ok(lanczos_ln(x + 1.0) - x.ln());
    }
    Ok(lanczos_ln(x))
}

fn lanczos_ln(x: f64) -> f64 {
    let z = x - 1.0;
    let mut sum = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
}

/// Γ(x) for x > 0.
pub fn gamma(x: f64) -> Result<f64> {
    Ok(log_gamma(x)?.exp())
}

/// Beta function Γ(a)Γ(b)/Γ(a+b).
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return domain(format!("beta requires positive arguments, got ({a}, {b})"));
    }
    Ok((log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?).exp())
}

fn log_nu(theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return domain(format!("nu requires theta > 0, got {theta}"));
    }
    Ok(-0.5 * theta * PI.ln() + log_gamma(0.5 * theta)?)
}

/// ν_θ = π^{−θ/2} Γ(θ/2).
pub fn nu(theta: f64) -> Result<f64> {
    Ok(log_nu(theta)?.exp())
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 3 {
        return domain(format!("dimension must be at least 3, got {n}"));
    }
    Ok(())
}

/// K(θ₁,θ₂,n) with (|x|^{θ₁−n} ∗ |x|^{θ₂−n})(y) = K |y|^{θ₁+θ₂−n}.
pub fn riesz_composition_constant(theta1: f64, theta2: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    if n == 0 || !(theta1 > 0.0 && theta1 < nf && theta2 > 0.0 && theta2 < nf && theta1 + theta2 < nf) {
        return domain(format!(
            "Riesz composition needs 0 < theta1, theta2 and theta1 + theta2 < n; got ({theta1}, {theta2}, {n})"
        ));
    }
    let ln_k = log_nu(theta1)? + log_nu(theta2)? + log_nu(nf - theta1 - theta2)?
        - log_nu(theta1 + theta2)?
        - log_nu(nf - theta1)?
        - log_nu(nf - theta2)?;
    Ok(ln_k.exp())
}

/// γ_{l,α}: the Fourier transform of P_l(x)/|x|^{n+l−α} is γ_{l,α} P_l(ξ)/|ξ|^{l+α}
/// under f̂(ξ) = ∫ f(x) e^{−2πiξ·x} dx. Only l ∈ {0, 1} is supported.
pub fn homogeneous_ft_constant(l: u32, alpha: f64, n: usize) -> Result<Complex64> {
    let nf = n as f64;
    if l > 1 {
        return domain(format!("only the l = 0 and l = 1 channels are supported, got l = {l}"));
    }
    if !(alpha > 0.0 && alpha < nf) {
        return domain(format!("alpha must lie in (0, n) = (0, {n}), got {alpha}"));
    }
    let lf = l as f64;
    let magnitude = ((0.5 * nf - alpha) * PI.ln() + log_gamma(0.5 * (lf + alpha))?
        - log_gamma(0.5 * (nf + lf - alpha))?)
    .exp();
    // i^{-l}
    let phase = if l == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, -1.0)
    };
    Ok(phase * magnitude)
}

/// C_{b₁,b₂} = K(n−b₁, n−b₂, n) / (4π²).
pub fn bilinear_constant(b1: f64, b2: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    if !(b1 > 0.0 && b1 < nf && b2 > 0.0 && b2 < nf && b1 + b2 > nf) {
        return domain(format!(
            "bilinear bound needs 0 < b1, b2 < n < b1 + b2; got ({b1}, {b2}, {n})"
        ));
    }
    Ok(riesz_composition_constant(nf - b1, nf - b2, n)? / (4.0 * PI * PI))
}

fn check_index(n: usize, k: f64) -> Result<()> {
    check_dimension(n)?;
    if !(k > 2.0 && k < n as f64) {
        return domain(format!("index k must lie in (2, n) = (2, {n}), got {k}"));
    }
    Ok(())
}

/// C_{n−2,k} in closed form: π^{n/2}(n−2) / (2π² Γ(n/2) (k−2)(n−k)).
pub fn hardy_constant(n: usize, k: f64) -> Result<f64> {
    check_index(n, k)?;
    let nf = n as f64;
    let ln_num = 0.5 * nf * PI.ln() + (nf - 2.0).ln();
    let ln_den = (2.0 * PI * PI).ln() + log_gamma(0.5 * nf)? + ((k - 2.0) * (nf - k)).ln();
    Ok((ln_num - ln_den).exp())
}

/// C_{n−2,k} through the Riesz constant, K(2, n−k, n)/(4π²).
pub fn hardy_constant_via_riesz(n: usize, k: f64) -> Result<f64> {
    check_index(n, k)?;
    Ok(riesz_composition_constant(2.0, n as f64 - k, n)? / (4.0 * PI * PI))
}

/// λ* = (n−2)²/4.
pub fn lambda_star(n: usize) -> Result<f64> {
    check_dimension(n)?;
    let m = n as f64 - 2.0;
    Ok(0.25 * m * m)
}

/// k* = (n+2)/2, the index maximising (k−2)(n−k).
pub fn optimal_k(n: usize) -> Result<f64> {
    check_dimension(n)?;
    Ok(0.5 * (n as f64 + 2.0))
}

/// |S^{n−1}| = 2π^{n/2}/Γ(n/2).
pub fn sphere_area(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    2.0 * (h * PI.ln() - log_gamma(h).expect("n >= 1")).exp()
}

/// π^{2−n/2} Γ((n−2)/2): the PM^{n−2} norm of 1/|x|².
pub fn inverse_square_norm(n: usize) -> Result<f64> {
    check_dimension(n)?;
    let nf = n as f64;
    Ok(((2.0 - 0.5 * nf) * PI.ln() + log_gamma(0.5 * (nf - 2.0))?).exp())
}

/// 2π^{(3−n)/2} Γ((n−1)/2): the dipole constant |γ_{1,n−2}|.
pub fn dipole_norm_factor(n: usize) -> Result<f64> {
    check_dimension(n)?;
    let nf = n as f64;
    Ok(2.0 * ((0.5 * (3.0 - nf)) * PI.ln() + log_gamma(0.5 * (nf - 1.0))?).exp())
}

/// Every constant for one (n, k) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantBundle {
    pub n: usize,
    pub k: f64,
    /// K(2, n−k, n)
    pub riesz: f64,
    /// C_{n−2,k}
    pub hardy: f64,
    pub lambda_star: f64,
    pub k_opt: f64,
}

impl ConstantBundle {
    pub fn new(n: usize, k: f64) -> Result<Self> {
        check_index(n, k)?;
        Ok(Self {
            n,
            k,
            riesz: riesz_composition_constant(2.0, n as f64 - k, n)?,
            hardy: hardy_constant(n, k)?,
            lambda_star: lambda_star(n)?,
            k_opt: optimal_k(n)?,
        })
    }
}

/// J_m(x) for integer order m ≥ 0 and x ≥ 0.
pub fn bessel_j_int(m: u32, x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if x > 30.0 + (m * m) as f64 {
        return bessel_hankel_asymptotic(m as f64, x);
    }
    // Trapezoid rule on the Bessel integral; the integrand is periodic and
    // analytic so the rule converges geometrically once N exceeds x + m.
    let mf = m as f64;
    let steps = (x.ceil() as usize + m as usize + 40).max(48);
    let h = PI / steps as f64;
    let f = |t: f64| (mf * t - x * t.sin()).cos();
    let mut sum = 0.5 * (f(0.0) + f(PI));
    for j in 1..steps {
        sum += f(j as f64 * h);
    }
    sum / steps as f64
}

fn bessel_hankel_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..40 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * x);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Spherical Bessel function j_l(x) for x ≥ 0.
pub fn spherical_bessel_j(l: u32, x: f64) -> f64 {
    let x = x.abs();
    let lf = l as f64;
    if x < 2.0 + lf {
        // j_l(x) = x^l / (2l+1)!! Σ_k (−x²/2)^k / (k! (2l+3)(2l+5)…(2l+2k+1))
        let mut prefactor = 1.0;
        for i in 0..l {
            prefactor *= x / (2.0 * i as f64 + 3.0);
        }
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            term *= -0.5 * x * x / (kf * (2.0 * lf + 2.0 * kf + 1.0));
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return prefactor * sum;
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    if l == 0 {
        return j0;
    }
    let mut jm = j0;
    let mut j = s / (x * x) - c / x;
    for i in 1..l {
        let next = (2.0 * i as f64 + 1.0) / x * j - jm;
        jm = j;
        j = next;
    }
    j
}

/// Ω_n(z) = ∫_{S^{n−1}} e^{i z ω₁} dσ(ω) = (2π)^{n/2} z^{1−n/2} J_{n/2−1}(z).
///
/// With this kernel the radial Fourier inversion reads
/// u(r) = ∫₀^∞ û(ρ) ρ^{n−1} Ω_n(2πρr) dρ.
pub fn bochner_kernel(n: usize, z: f64) -> f64 {
    let z = z.abs();
    let nf = n as f64;
    if z < 2.0 {
        let h = 0.5 * nf;
        let q = 0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..40 {
            let jf = j as f64;
            term *= -q / (jf * (jf - 1.0 + h));
            sum += term;
            if term.abs() < 1e-17 {
                break;
            }
        }
        return sphere_area(n) * sum;
    }
    let scale = (2.0 * PI).powf(0.5 * nf);
    if n % 2 == 0 {
        let m = (n / 2 - 1) as u32;
        scale * bessel_j_int(m, z) / z.powi(m as i32)
    } else {
        let l = ((n - 3) / 2) as u32;
        scale * (2.0 / PI).sqrt() * spherical_bessel_j(l, z) / z.powi(l as i32)
    }
}

//! Acceptance criteria AC1-AC9. Runs as a plain binary so that each
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use pmheat::analysis::{convergence_experiment, power_law_residual, semigroup_gap, stationarity_residual, StationaryPair};
use pmheat::cartesian_backend::{crosscheck, evolve, l2_norm, parity_parts, BoxGrid, CrossCheckConfig};
use pmheat::picard_solver::{continuous_dependence_check, picard_solve, self_similarity_residual, SolveOptions, TimeGrid};
use pmheat::potential_catalog::{threshold_report, PotentialSpec};
use pmheat::radial_convolution::{convolve_radial, power_law_convolution_oracle, RadialKernel};
use pmheat::special_functions::{beta_fn, hardy_constant, homogeneous_ft_constant, lambda_star, riesz_composition_constant};
use pmheat::spectral_field::{RadialGrid, SpectralField};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

// Largest entry; NaN counts as infinitely bad.
fn worst(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) })
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// Gauss-Legendre nodes on [-1, 1] by Newton iteration on P_m.
fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (1..=m)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=m {
                    let jf = j as f64;
                    (p0, p1) = (p1, ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf);
                }
                let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    let w = 2.0 / ((1.0 - x * x) * dp * dp);
                    return (x, w);
                }
            }
        })
        .collect()
}

// Composite rule on breakpoints graded geometrically toward both ends of [a, b].
fn graded(f: &dyn Fn(f64) -> f64, a: f64, b: f64, gl: &[(f64, f64)]) -> f64 {
    let mut pts = vec![a, b];
    let mid = 0.5 * (a + b);
    for j in 1..45 {
        let d = 0.5 * (b - a) * 0.6f64.powi(j);
        pts.push(a + d);
        pts.push(b - d);
    }
    pts.push(mid);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.windows(2)
        .map(|w| {
            let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            gl.iter().map(|(x, wt)| wt * f(c + h * x)).sum::<f64>() * h
        })
        .sum()
}

// (|x|^{θ1−n} ∗ |x|^{θ2−n}) at a unit vector, by nested quadrature in polar
// coordinates. The part |y| > 1 is folded onto (0, 1) by y ↦ y/|y|².
fn riesz_brute_force(t1: f64, t2: f64, n: usize) -> f64 {
    let gl = gauss_legendre(20);
    let nf = n as f64;
    let sphere = match n {
        3 => 2.0 * PI,
        4 => 4.0 * PI,
        6 => 8.0 * PI * PI / 3.0,
        _ => unimplemented!(),
    };
    let inner = |r: f64| {
        let g = |phi: f64| phi.sin().powi(n as i32 - 2) * ((1.0 - r).powi(2) + 4.0 * r * (0.5 * phi).sin().powi(2)).powf(0.5 * (t1 - nf));
        graded(&g, 0.0, PI, &gl)
    };
    let outer = |r: f64| (r.powf(t2 - 1.0) + r.powf(nf - t1 - t2 - 1.0)) * inner(r);
    sphere * graded(&outer, 0.0, 1.0, &gl)
}

fn ac1() -> Outcome {
    let errs = [
        rel(hardy_constant(4, 3.0).unwrap(), 1.0),
        rel(lambda_star(3).unwrap(), 0.25),
        rel(lambda_star(4).unwrap(), 1.0),
        rel(lambda_star(6).unwrap(), 4.0),
        rel(beta_fn(0.5, 1.0).unwrap(), 2.0),
        rel(homogeneous_ft_constant(0, 2.0, 4).unwrap().re, 1.0),
    ];
    let max_err = worst(errs);
    let mut quad = Vec::new();
    for (t1, t2, n) in [(2.0, 1.0, 4), (2.0, 2.0, 6), (1.5, 1.0, 3)] {
        let k = riesz_composition_constant(t1, t2, n).unwrap();
        quad.push(rel(k, riesz_brute_force(t1, t2, n)));
    }
    let qworst = worst(quad.iter().copied());
    check(
        max_err <= 1e-9 && qworst <= 1e-3,
        format!("constants max rel err {max_err:.2e}; Riesz vs quadrature {}", sci(&quad)),
    )
}

fn ac2() -> Outcome {
    let mut disagreements = 0;
    for n in 3..=5usize {
        let nf = n as f64;
        let ls = lambda_star(n).unwrap();
        for i in 0..20 {
            let k = 2.0 + (nf - 2.0) * (i as f64 + 0.5) / 20.0;
            for j in 0..20 {
                let lambda = -1.5 * ls + 3.0 * ls * (j as f64 + 0.25) / 20.0;
                let passes = threshold_report(&PotentialSpec::hardy(lambda), n, k).unwrap().passes;
                if passes != (lambda.abs() < (k - 2.0) * (nf - k)) {
                    disagreements += 1;
                }
            }
        }
    }
    check(disagreements == 0, format!("{disagreements} disagreements on 1200 (n, k, lambda) points"))
}

fn ac3() -> Outcome {
    let grid = RadialGrid::default();
    let mut errs = Vec::new();
    for &(n, b, k) in &[(3usize, 2.0, 1.5), (4, 2.0, 3.0), (4, 2.0, 2.5), (6, 4.0, 3.0)] {
        let nf = n as f64;
        let field = SpectralField::from_profile(n, k, grid, vec![1.0; grid.count]).unwrap();
        let out = convolve_radial(&RadialKernel::new(n, b, 1.0).unwrap(), &field).unwrap().field;
        errs.push(worst((grid.count / 10..grid.count - grid.count / 10).map(|j| {
            let rho = grid.node(j);
            let expect = power_law_convolution_oracle(nf - b, nf - k, n, rho).unwrap() * rho.powf(out.k);
            rel(out.profile[j], expect)
        })));
    }
    check(worst(errs.iter().copied()) <= 1e-3, format!("interior relative errors {}", sci(&errs)))
}

fn ac4() -> Outcome {
    let u0 = SpectralField::power_law(4, 3.0, 1.0, RadialGrid::default()).unwrap();
    let rep = picard_solve(&PotentialSpec::hardy(0.5), &u0, &TimeGrid::default(), &SolveOptions::default()).unwrap();
    let ratio = worst(rep.diffs.windows(2).map(|w| w[1] / w[0]));
    let rate = rep.measured_rate.unwrap_or(f64::NAN);
    check(
        ratio <= 0.5 * 1.05 && (0.45..=0.55).contains(&rate) && rep.converged && rep.iterations <= 40,
        format!(
            "tau {:.3}, max diff ratio {ratio:.4}, measured rate {rate:.4}, {} iterations",
            rep.tau, rep.iterations
        ),
    )
}

fn ac5() -> Outcome {
    let grid = RadialGrid::new(1e-3, 1e2, 160).unwrap();
    let tg = TimeGrid::standard(2.0, 16).unwrap();
    let pair = StationaryPair::new(0.75, 4).unwrap();
    let r = stationarity_residual(&pair, 2, grid, &tg).unwrap();
    let d = power_law_residual(0.75, 4, 3.0, grid, &tg).unwrap();
    check(
        pair.indices[1] == 2.5 && r <= 2e-3 && d >= 0.1,
        format!("k2 = {}, residual {r:.2e}, detuned (k = 3) {d:.3}", pair.indices[1]),
    )
}

fn ac6() -> Outcome {
    let u0 = SpectralField::power_law(4, 3.0, 1.0, RadialGrid::default()).unwrap();
    let kernel = RadialKernel::hardy(4, 0.5).unwrap();
    let opts = SolveOptions { tol: 1e-12, ..Default::default() };
    let tg = TimeGrid::default();
    let r5 = self_similarity_residual(&kernel, &u0, &tg, 5, &opts).unwrap();
    let r20 = self_similarity_residual(&kernel, &u0, &tg, 20, &opts).unwrap();
    check(r5 <= 1e-6 && r20 <= 1e-6, format!("grid-shift residuals {r5:.2e} (m = 5), {r20:.2e} (m = 20)"))
}

fn ac7() -> Outcome {
    let g = RadialGrid::default();
    let (n, k) = (4, 3.0);
    let times: Vec<f64> = (0..=16).map(|i| 10f64.powf(1.0 + i as f64 / 8.0)).collect();
    let slope = semigroup_gap(&SpectralField::gaussian(n, k, g).unwrap(), &times).unwrap().fitted_slope.unwrap();
    let slope_ok = rel(slope, -0.5 * k) <= 0.05;

    let a = 0.7;
    let hom = semigroup_gap(&SpectralField::power_law(n, k, a, g).unwrap(), &times).unwrap();
    let floor = a * (-4.0 * PI * PI * g.rho_min * g.rho_min * times[times.len() - 1]).exp();
    let hom_ok = hom.gap_norms.iter().all(|&v| v <= a * (1.0 + 1e-14) && v >= floor * (1.0 - 1e-14));

    let pot = PotentialSpec::hardy(0.5);
    let tg = TimeGrid::standard(1000.0, 64).unwrap();
    let opts = SolveOptions::default();
    let f = SpectralField::power_law(n, k, 1.0, g).unwrap();
    let fb = f.add(&SpectralField::gaussian(n, k, g).unwrap()).unwrap();
    let eq = convergence_experiment(&pot, &fb, &f, &tg, &opts).unwrap().decade_ratio().unwrap();
    let noneq = convergence_experiment(&pot, &f.scale(1.2), &f, &tg, &opts).unwrap();
    let ratio = noneq.decade_ratio().unwrap();
    check(
        slope_ok && hom_ok && eq <= 0.1 && (ratio - 1.0).abs() <= 0.1,
        format!(
            "Gaussian gap slope {slope:.4} (target {}); homogeneous gap constant: {hom_ok}; \
             decade ratio {eq:.3} (equivalent), {ratio:.4} (homogeneous)",
            -0.5 * k
        ),
    )
}

fn ac8() -> Outcome {
    let grid = RadialGrid::new(1e-3, 1e2, 160).unwrap();
    let tg = TimeGrid::standard(2.0, 24).unwrap();
    let opts = SolveOptions { tol: 1e-10, ..Default::default() };
    let gauss = SpectralField::gaussian(4, 3.0, grid).unwrap();
    let pl = SpectralField::power_law(4, 3.0, 0.3, grid).unwrap();
    let v = PotentialSpec::hardy(0.5);
    let w = PotentialSpec::hardy(0.4);
    let scenarios = [
        ("data", gauss.clone(), gauss.scale(1.1), v.clone(), v.clone()),
        ("potential", gauss.clone(), gauss.clone(), v.clone(), w.clone()),
        ("both", gauss.add(&pl).unwrap(), gauss.clone(), v, PotentialSpec::hardy(-0.3)),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, u0, v0, vp, wp) in scenarios {
        let c = continuous_dependence_check(&u0, &v0, &vp, &wp, &tg, &opts).unwrap();
        ok &= c.holds;
        parts.push(format!("{name}: {:.3e} <= {:.3e}", c.difference, c.bound));
    }
    check(ok, parts.join("; "))
}

fn ac9() -> Outcome {
    let report = crosscheck(&CrossCheckConfig::default()).unwrap();

    let grid = BoxGrid { dt: 2e-3, ..BoxGrid::default() };
    let odd0 = grid.sample(|x| x[0] * (-PI * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
    let snaps = evolve(&PotentialSpec::hardy(0.5), &odd0, &grid, &[0.1]).unwrap();
    let (even, odd) = parity_parts(&snaps[0].data, &grid);
    let parity = l2_norm(&even) / l2_norm(&odd);

    let even0 = grid.sample(|x| (-PI * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
    let radial = evolve(&PotentialSpec::hardy(0.5), &even0, &grid, &[0.1]).unwrap();
    let dipole = evolve(&PotentialSpec::Dipole { d: vec![0.5, 0.0, 0.0] }, &even0, &grid, &[0.1]).unwrap();
    let odd_fraction = |data: &[f64]| l2_norm(&parity_parts(data, &grid).1) / l2_norm(data);
    let (dip, rad) = (odd_fraction(&dipole[0].data), odd_fraction(&radial[0].data));
    let positive = radial[0].data.iter().copied().fold(f64::INFINITY, f64::min)
        >= -1e-3 * radial[0].data.iter().copied().fold(0.0, f64::max);

    check(
        report.passes && positive && parity <= 1e-10 && dip > 1e-3 && rad <= 1e-10,
        format!(
            "profile errors {:.4?} (raw {:.4?}); positivity: {} / {positive}; parity leak {parity:.1e}; \
             odd fraction dipole {dip:.2e} vs radial {rad:.1e}",
            report.profile_errors, report.raw_errors, report.positive
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("AC1 constants", ac1),
        ("AC2 threshold equivalence", ac2),
        ("AC3 convolution oracle", ac3),
        ("AC4 contraction certificate", ac4),
        ("AC5 stationary fixed point", ac5),
        ("AC6 self-similarity", ac6),
        ("AC7 asymptotics", ac7),
        ("AC8 continuous dependence", ac8),
        ("AC9 cross-check", ac9),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let (tag, msg) = match f() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("[{tag}] {name}: {msg} ({:.1}s)", start.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

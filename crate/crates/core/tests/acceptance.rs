//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary so every criterion reports even when an earlier one
//! fails. Set `RK_ACCEPTANCE_STRICT=1` to exit non-zero on any failure.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use libm::erf;

use rk_core::dynamics::{run, SimConfig};
use rk_core::geometry::{binary_collision, min_image_displacement, predict_contact, scatter};
use rk_core::laws::random_direction;
use rk_core::sampling::{reject_overlap, sample_background, stream_rng, zeta};
use rk_core::solver::gain::{gain_carleman, gain_sphere, CarlemanRule, SphereGainRule};
use rk_core::solver::{duhamel_solve, loss_rate, tree_density_p, JumpSampler};
use rk_core::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn uniform_in_ball<R: Rng>(rng: &mut R, radius: f64) -> Vec3 {
    random_direction(rng) * (radius * rng.random::<f64>().cbrt())
}

fn uniform_torus_vec<R: Rng>(rng: &mut R) -> Vec3 {
    Vec3::new(rng.random(), rng.random(), rng.random())
}

/// First time step at which the minimal-image distance drops to `eps`.
fn stepped_contact(p: Vec3, w: Vec3, eps: f64, horizon: f64, dt: f64) -> Option<f64> {
    let steps = (horizon / dt).round() as usize;
    (1..=steps).map(|k| k as f64 * dt).find(|&t| min_image_displacement(p + w * t).norm() <= eps)
}

fn c1_geometry() -> Verdict {
    let mut rng = stream_rng(101, 0);
    let (dt, horizon) = (1e-5, 1.0);
    let (mut worst, mut mismatched, mut hits) = (0.0f64, 0, 0);
    for _ in 0..1000 {
        let eps = 0.02 + 0.18 * rng.random::<f64>();
        let p = loop {
            let p = uniform_torus_vec(&mut rng);
            if min_image_displacement(p).norm() > eps {
                break p;
            }
        };
        let w = uniform_in_ball(&mut rng, 10.0);
        let predicted = predict_contact(p, w, eps, horizon).expect("valid pair");
        match (predicted, stepped_contact(p, w, eps, horizon, dt)) {
            (Some(a), Some(b)) => {
                hits += 1;
                worst = worst.max((a - b).abs());
            }
            (None, None) => {}
            _ => mismatched += 1,
        }
    }
    let mut algebra = 0.0f64;
    for _ in 0..100_000 {
        let (v, w) = (uniform_in_ball(&mut rng, 10.0), uniform_in_ball(&mut rng, 10.0));
        let nu = random_direction(&mut rng);
        let after = scatter(v, w, nu).unwrap();
        let normal = nu.dot(after - w).abs();
        let moved = after - v;
        let tangential = (moved - nu * nu.dot(moved)).norm();
        let (v1, w1) = binary_collision(v, w, nu).unwrap();
        let (v2, w2) = binary_collision(v1, w1, nu).unwrap();
        let involution = (v2 - v).norm().max((w2 - w).norm());
        let idempotent = (scatter(after, w, nu).unwrap() - after).norm();
        algebra = algebra.max(normal).max(tangential).max(involution).max(idempotent).max((v1 - after).norm());
    }
    verdict(
        mismatched == 0 && worst <= 1e-4 && algebra <= 1e-12,
        format!("{hits} contacts, max |Δt| {worst:.2e} (tol 1e-4), {mismatched} hit/miss disagreements, collision algebra max error {algebra:.1e} (tol 1e-12)"),
    )
}

fn c2_loss_only() -> Verdict {
    let g0 = BackgroundLaw::maxwellian(1.0);
    let f0 = InitialLaw::uniform_with_velocity(Vec3::ZERO);
    let lambda = loss_rate(Vec3::ZERO, &g0).unwrap();
    let closed_form = (8.0 * PI).sqrt();
    let expected = (-lambda).exp();
    let cfg = SimConfig::boltzmann_grad(0.05, 1.0, 202).unwrap().with_gain(false);
    let runs = 10_000;
    let survived = (0..runs)
        .filter(|&i| {
            let out = run(&cfg, &f0, &g0, &mut stream_rng(202, i)).unwrap();
            out.completed() && out.tree.n() == 0
        })
        .count();
    let p = survived as f64 / runs as f64;
    let sigma = (expected * (1.0 - expected) / runs as f64).sqrt();
    let tol = 3.0 * sigma + 0.15 * expected;
    verdict(
        (p - expected).abs() <= tol && (lambda - closed_form).abs() < 1e-9 * closed_form,
        format!("P(no collision) {p:.4e} vs exp(-λ(0)) {expected:.4e}, |Δ| {:.2e} (tol {tol:.2e}); λ(0) {lambda:.10} vs √(8π) {closed_form:.10}", (p - expected).abs()),
    )
}

fn c3_zeta() -> Verdict {
    let (eps, n, trials) = (0.1, 100, 100_000u64);
    let g0 = BackgroundLaw::maxwellian(1.0);
    let mut rng = stream_rng(303, 0);
    let accepted = (0..trials)
        .filter(|_| {
            let x0 = geometry::wrap(uniform_torus_vec(&mut rng)).unwrap();
            reject_overlap(x0, &sample_background(&g0, n, &mut rng), eps)
        })
        .count();
    let empirical = accepted as f64 / trials as f64;
    let formula = (1.0 - 4.0 / 3.0 * PI * 1e-3f64).powi(100);
    let z = zeta(eps, n).unwrap();
    let sigma = (z * (1.0 - z) / trials as f64).sqrt();
    verdict(
        (empirical - z).abs() <= 3.0 * sigma && (z - formula).abs() < 1e-14 && (z - 0.657).abs() < 5e-4,
        format!("acceptance {empirical:.5} vs ζ {z:.5}, |Δ| {:.2e} (tol 3σ = {:.2e})", (empirical - z).abs(), 3.0 * sigma),
    )
}

fn c4_carleman() -> Verdict {
    let mut rng = stream_rng(404, 0);
    let grid = VelocityGrid::new(16, 3.0).unwrap();
    let (mut worst, mut truncated) = (0.0f64, 0);
    for _ in 0..20 {
        // smooth random density: a mixture of two or three Gaussian bumps
        let bumps: Vec<(f64, Vec3, f64)> = (0..rng.random_range(2..=3))
            .map(|_| (0.2 + rng.random::<f64>(), uniform_in_ball(&mut rng, 0.8), 0.4 + 0.3 * rng.random::<f64>()))
            .collect();
        let f = KineticDensity::from_fn(grid, |v| {
            bumps.iter().map(|&(a, c, s)| a * (-(v - c).norm_squared() / (2.0 * s * s)).exp()).sum()
        });
        let g0 = BackgroundLaw::maxwellian(0.4 + 0.6 * rng.random::<f64>());
        let v = uniform_in_ball(&mut rng, 1.0);
        let a = gain_sphere(&f, v, &g0, &SphereGainRule::default()).unwrap();
        let b = gain_carleman(&f, v, &g0, &CarlemanRule::default()).unwrap();
        truncated += a.truncated as usize;
        worst = worst.max((a.value - b).abs() / b.abs());
    }
    verdict(worst <= 1e-3, format!("max relative difference {worst:.2e} over 20 densities (tol 1e-3), {truncated} truncation flags"))
}

/// Exact cell masses of an isotropic Gaussian on `grid`, overflow included.
fn maxwellian_histogram(grid: VelocityGrid, sigma: f64) -> Histogram {
    let normal = Normal::new(0.0, sigma).unwrap();
    let edge = |i: usize| -grid.v_max + i as f64 * grid.width();
    let axis: Vec<f64> = (0..grid.n_bins).map(|i| normal.cdf(edge(i + 1)) - normal.cdf(edge(i))).collect();
    let mut h = Histogram::new(grid);
    for i in 0..grid.len() {
        let [x, y, z] = grid.coords(i);
        h.weights[i] = axis[x] * axis[y] * axis[z];
    }
    h.overflow = 1.0 - axis.iter().sum::<f64>().powi(3);
    h
}

fn c5_equilibrium() -> Verdict {
    let g0 = BackgroundLaw::maxwellian(1.0);
    let f0 = InitialLaw { spatial: SpatialLaw::Uniform, velocity: VelocityLaw::Maxwellian { sigma: 1.0 } };
    let grid = VelocityGrid::new(20, 6.0).unwrap();
    let sampler = JumpSampler::new(&f0, &g0, 2.0).unwrap();
    let samples = 100_000;
    let mut jumps = Histogram::new(grid);
    let mut direct = Histogram::new(grid);
    let mut rng = stream_rng(505, 1);
    for i in 0..samples {
        jumps.add(sampler.sample(&mut stream_rng(505, 2 << 32 | i)).unwrap().final_state().v);
        direct.add(g0.sample(&mut rng));
    }
    let exact = maxwellian_histogram(grid, 1.0);
    let tv = estimate_tv(&jumps, &exact).unwrap();
    let err = bootstrap_tv(&jumps, &exact, 200, &mut rng).unwrap();
    let floor = estimate_tv(&direct, &exact).unwrap();
    verdict(
        tv <= 0.02,
        format!("TV {tv:.4} ± {err:.4} (tol 0.02); exact Maxwellian samples give {floor:.4} on the same grid"),
    )
}

fn c6_triangle() -> Verdict {
    let g0 = BackgroundLaw::maxwellian(0.5);
    let law = VelocityLaw::Maxwellian { sigma: 1.0 };
    // fine solve grid whose cells nest into the comparison grid
    let solve_grid = VelocityGrid::new(24, 3.6).unwrap();
    let tv_grid = VelocityGrid::new(20, 6.0).unwrap();
    let f = KineticDensity::from_velocity_law(solve_grid, &law).unwrap();
    let sol = duhamel_solve(&f, &g0, 1.0, 12).unwrap();
    let deficit = 1.0 - sol.density.mass();
    let f0 = InitialLaw { spatial: SpatialLaw::Uniform, velocity: law };
    let sampler = JumpSampler::new(&f0, &g0, 1.0).unwrap();
    let mut jumps = Histogram::new(tv_grid);
    for i in 0..100_000 {
        jumps.add(sampler.sample(&mut stream_rng(606, i)).unwrap().final_state().v);
    }
    let solved = Histogram::from_density(&sol.density, &tv_grid, 1.0).unwrap();
    let tv = estimate_tv(&jumps, &solved).unwrap();
    let err = bootstrap_tv(&jumps, &solved, 200, &mut stream_rng(606, 1 << 40)).unwrap();
    verdict(
        tv <= 0.03 && deficit <= 1e-2,
        format!(
            "TV {tv:.4} ± {err:.4} (tol 0.03), mass deficit {deficit:.2e} (tol 1e-2), series remainder {:.2e}",
            sol.remainder
        ),
    )
}

fn c7_c8_sweep() -> (Verdict, Verdict, String) {
    let cfg = ExperimentConfig::from_json(include_str!("../../../configs/sweep.json")).unwrap();
    let out = run_experiment(&cfg, None).unwrap();
    let rows: Vec<&ExperimentRow> = out.report.rows.iter().filter(|r| r.t == 1.0).collect();
    let z = 2.0;
    let mut monotone = true;
    let mut tv_text = Vec::new();
    for (k, r) in rows.iter().enumerate() {
        tv_text.push(format!("ε={} TV {:.4}±{:.4}", r.epsilon, r.tv_empirical_vs_ideal, r.tv_mc_error));
        if k > 0 {
            let prev = rows[k - 1];
            let bar = z * (prev.tv_mc_error.powi(2) + r.tv_mc_error.powi(2)).sqrt();
            monotone &= r.tv_empirical_vs_ideal <= prev.tv_empirical_vs_ideal + bar;
        }
    }
    let fractions: Vec<f64> = rows.iter().map(|r| r.good_tree_fraction).collect();
    let nondecreasing = fractions.windows(2).all(|w| w[1] >= w[0]);
    let last = *fractions.last().unwrap();
    let c7 = verdict(monotone, format!("{} (rises allowed up to {z} combined σ)", tv_text.join(", ")));
    let c8 = verdict(
        nondecreasing && last > 0.95 && rows.last().unwrap().epsilon == 0.05,
        format!("good fractions {fractions:?}, {last:.4} at ε=0.05 (needs > 0.95)"),
    );
    let mut diag: Vec<String> = out
        .per_epsilon
        .iter()
        .map(|e| format!("ε={} aborts {:.2}% repeated-partner runs {}", e.epsilon, 100.0 * e.abort_fraction, e.repeated_partner_runs))
        .collect();
    diag.extend(out.loss_only.iter().filter(|l| l.t == 1.0).map(|l| {
        format!("loss-only ε={} TV {:.4}±{:.4} {}", l.epsilon, l.tv, l.tv_mc_error, if l.passed { "ok" } else { "off" })
    }));
    diag.push(format!("experiment valid: {} {:?}", out.valid, out.messages));
    (c7, c8, diag.join("; "))
}

/// `λ(v) = π E|v - V|` for `V ~ N(0, σ² I)`, from the folded-normal mean.
fn maxwellian_rate(v: Vec3, sigma: f64) -> f64 {
    let u = v.norm();
    if u == 0.0 {
        return PI * 2.0 * sigma * (2.0 / PI).sqrt();
    }
    let r = u / sigma;
    PI * sigma * ((2.0 / PI).sqrt() * (-r * r / 2.0).exp() + (r + 1.0 / r) * erf(r / 2f64.sqrt()))
}

fn c9_tree_density() -> Verdict {
    let mut rng = stream_rng(909, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let sigma = 0.5 + rng.random::<f64>();
        let g0 = BackgroundLaw::maxwellian(sigma);
        let f0 = InitialLaw { spatial: SpatialLaw::Uniform, velocity: VelocityLaw::Maxwellian { sigma: 1.0 } };
        let x0 = geometry::wrap(uniform_torus_vec(&mut rng)).unwrap();
        let v0 = uniform_in_ball(&mut rng, 3.0);
        let t = 2.0 * rng.random::<f64>();
        let got = tree_density_p(&CollisionTree::root(x0, v0), t, &f0, &g0).unwrap();
        let want = (-t * maxwellian_rate(v0, sigma)).exp() * f0.density(x0, v0);
        worst = worst.max((got - want).abs() / want);
    }
    let g0 = BackgroundLaw::maxwellian(1.0);
    let f0 = InitialLaw::default();
    let x0 = geometry::wrap(Vec3::new(0.3, 0.3, 0.3)).unwrap();
    let mut tree = CollisionTree::root(x0, Vec3::ZERO);
    tree.append(CollisionMarker { t: 0.5, nu: Vec3::new(-1.0, 0.0, 0.0), v: Vec3::new(1.0, 0.0, 0.0) }).unwrap();
    let before = tree_density_p(&tree, 0.4, &f0, &g0).unwrap();
    let mut grazing = CollisionTree::root(x0, Vec3::ZERO);
    grazing.append(CollisionMarker { t: 0.5, nu: Vec3::new(0.0, 0.0, 1.0), v: Vec3::new(1.0, 0.0, 0.0) }).unwrap();
    let graze = tree_density_p(&grazing, 1.0, &f0, &g0).unwrap();
    verdict(
        worst <= 1e-9 && before == 0.0 && graze == 0.0,
        format!("n=0 max relative error {worst:.1e} (tol 1e-9), t<τ gives {before}, grazing marker gives {graze}"),
    )
}

/// Abort-rate target that pinch cascades break; reported, not gated.
fn abort_diagnostic() -> String {
    let g0 = BackgroundLaw::maxwellian(1.0);
    let f0 = InitialLaw::uniform_with_velocity(Vec3::ZERO);
    let cfg = SimConfig::boltzmann_grad(0.1, 1.0, 707).unwrap();
    let runs = 10_000;
    let aborted = (0..runs).filter(|&i| !run(&cfg, &f0, &g0, &mut stream_rng(707, i)).unwrap().completed()).count();
    format!(
        "abort fraction at ε=0.1, g0=Maxwellian(1), v0=0: {:.4} over {runs} runs (target < 1e-3; two-partner pinch cascades)",
        aborted as f64 / runs as f64
    )
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn main() {
    let mut failures = 0;
    let mut report = |id: &str, name: &str, budget: f64, (v, secs): (Verdict, f64)| {
        let pass = v.pass && secs <= budget;
        failures += !pass as usize;
        println!("{} {id} {name}: {} [{secs:.1}s, budget {budget}s]", if pass { "PASS" } else { "FAIL" }, v.detail);
    };
    report("1", "geometry oracle", 60.0, timed(c1_geometry));
    report("2", "loss-only law", 300.0, timed(c2_loss_only));
    report("3", "zeta agreement", 60.0, timed(c3_zeta));
    report("4", "Carleman equivalence", 120.0, timed(c4_carleman));
    report("5", "equilibrium invariance", 300.0, timed(c5_equilibrium));
    report("6", "oracle triangle", 600.0, timed(c6_triangle));
    // both sweep criteria share one run and its time budget
    let ((c7, c8, diag), secs) = timed(c7_c8_sweep);
    report("7", "main convergence", 1800.0, (c7, secs));
    report("8", "good trees", 1800.0, (c8, secs));
    report("9", "tree density consistency", 1.0, timed(c9_tree_density));
    println!("DIAG sweep: {diag}");
    println!("DIAG {}", abort_diagnostic());
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures > 0 && std::env::var("RK_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

//! Acceptance gate. Runs every criterion, prints one line per criterion
//! and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lbmoments::config::SimulationConfig;
use lbmoments::equilibrium::{discrete_equilibrium, target_moment, EquilibriumKernel, MacroState};
use lbmoments::lbm::{collide, macro_fields, Grid, Simulation};
use lbmoments::moment_conditions::{generate_conditions, MultiIndex};
use lbmoments::riemann::{solve, PrimitiveState};
use lbmoments::shock_tube::{reference_solution, ShockTube, END_MARGIN_CELLS};
use lbmoments::stencil::{
    condition_residual, expand_orbit, solve_model, verify_model, SolveOptions, VelocityModel, PUBLISHED_TOLERANCE,
};
use lbmoments::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let t = start.elapsed();
    check(t <= budget, format!("took {t:?}, budget {budget:?}"))
}

/// Equation counts 9 (D=2) and 11 (D=3) at order 4.
fn ac1_equation_counts() -> Outcome {
    let start = Instant::now();
    let n2 = generate_conditions(2, 4).map_err(|e| e.to_string())?.len();
    let n3 = generate_conditions(3, 4).map_err(|e| e.to_string())?.len();
    check(n2 == 9 && n3 == 11, format!("got {n2} and {n3}"))?;
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("D=2: {n2}, D=3: {n3}"))
}

/// Published tables satisfy every order-4 condition within 5e-5.
fn ac2_table_verification() -> Outcome {
    let start = Instant::now();
    let mut worst = Vec::new();
    for model in [VelocityModel::d2q33_table(), VelocityModel::d3q95_table()] {
        let r = verify_model(&model, 4, PUBLISHED_TOLERANCE).map_err(|e| e.to_string())?;
        check(r.pass(), format!("{} fails:\n{r}", model.name))?;
        worst.push(format!("{} max |res| {:.2e}", model.name, r.max_abs_residual));
    }
    let m = VelocityModel::d2q33_table();
    let c20 = generate_conditions(2, 4).unwrap().conditions[1].clone();
    let value = condition_residual(&m, &c20).unwrap() + c20.rhs;
    check((value - 0.5).abs() <= PUBLISHED_TOLERANCE, format!("(2,0) sums to {value}"))?;
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!("{}; (2,0) sums to {value:.7}", worst.join(", ")))
}

/// solve_model recovers both published tables from their directions.
fn ac3_model_rederivation() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for (table, interval) in [
        (VelocityModel::d2q33_table(), (0.5, 1.2)),
        (VelocityModel::d3q95_table(), (0.2, 0.8)),
    ] {
        let conds = generate_conditions(table.dim, 4).unwrap();
        let sol = solve_model(&table.directions(), &conds, interval, &SolveOptions::default())
            .map_err(|e| format!("{}: {e}", table.name))?;
        let dc = (sol.model.c - table.c).abs();
        check(dc <= 1e-4, format!("{}: c = {} vs {}", table.name, sol.model.c, table.c))?;
        let dw = sol
            .model
            .groups
            .iter()
            .zip(&table.groups)
            .map(|(a, b)| (a.weight - b.weight).abs())
            .fold(0.0, f64::max);
        check(dw <= 1e-4, format!("{}: weight deviation {dw:e}", table.name))?;
        notes.push(format!("{} c = {:.7} (|Δc| {dc:.1e}, max |Δw| {dw:.1e})", table.name, sol.model.c));
    }
    within_budget(start, Duration::from_secs(30))?;
    Ok(notes.join(", "))
}

/// Orbit sizes equal the published multiplicity columns.
fn ac4_orbit_audit() -> Outcome {
    let start = Instant::now();
    let expected: [(&str, VelocityModel, Vec<usize>, usize); 2] = [
        ("D2Q33", VelocityModel::d2q33_table(), vec![1, 4, 4, 4, 4, 4, 8, 4], 33),
        ("D3Q95", VelocityModel::d3q95_table(), vec![1, 6, 12, 8, 6, 12, 8, 24, 12, 6], 95),
    ];
    for (name, model, mult, total) in expected {
        let sizes: Vec<usize> = model.groups.iter().map(|g| expand_orbit(&g.representative).len()).collect();
        check(sizes == mult, format!("{name}: {sizes:?}"))?;
        let sum: usize = sizes.iter().sum();
        check(sum == total && model.lattice().q() == total, format!("{name}: total {sum}"))?;
    }
    within_budget(start, Duration::from_secs(1))?;
    Ok("33 and 95 velocities, every group matches".into())
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> MacroState {
    let speed = 0.4 * rng.gen::<f64>().sqrt();
    let mut dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    dir.iter_mut().for_each(|x| *x *= speed / norm);
    MacroState::new(rng.gen_range(0.2..5.0), dir, rng.gen_range(0.7..1.3)).unwrap()
}

/// Discrete equilibrium moments of order ≤ 4 match the Maxwell–Boltzmann
/// moments to 1e-12 relative over 200 sampled states per model.
fn ac5_moment_matching() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut states = 0;
    for model in [VelocityModel::d2q33(), VelocityModel::d3q95()] {
        let lat = model.lattice();
        let basis = MultiIndex::all_up_to(model.dim, 4);
        for _ in 0..200 {
            let s = random_state(&mut rng, model.dim);
            let f = discrete_equilibrium(&model, &s).map_err(|e| e.to_string())?;
            for a in &basis {
                let m = lat.moment(&f, a);
                let t = target_moment(a, &s).unwrap();
                let rel = (m - t).abs() / t.abs().max(1.0);
                worst = worst.max(rel);
                check(rel <= 1e-12, format!("{} {a} at {s:?}: {m} vs {t}", model.name))?;
            }
            states += 1;
        }
    }
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!("{states} states, worst relative error {worst:.2e}"))
}

/// Collision conserves per-node moments to 1e-13; a periodic run
/// conserves totals to 1e-12 over 1000 steps.
fn ac6_conservation() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_node: f64 = 0.0;
    for model in [VelocityModel::d2q33(), VelocityModel::d3q95()] {
        let lat = model.lattice();
        let kernel = EquilibriumKernel::new(&lat);
        for _ in 0..50 {
            let s = random_state(&mut rng, model.dim);
            let mut f = kernel.equilibrium(&s);
            for x in f.iter_mut() {
                *x *= 1.0 + rng.gen_range(-0.05..0.05);
            }
            let pre = macro_fields(&f, &lat).map_err(|e| e.to_string())?;
            let post = collide(&f, &pre, 1.5, &kernel);
            let moments = |g: &[f64]| {
                let mut out = vec![g.iter().sum::<f64>()];
                for a in 0..model.dim {
                    out.push((0..lat.q()).map(|i| lat.velocity(i)[a] * g[i]).sum());
                }
                out.push((0..lat.q()).map(|i| lat.velocity(i).iter().map(|v| v * v).sum::<f64>() * g[i]).sum());
                out
            };
            let (a, b) = (moments(&f), moments(&post));
            let scale = a[0].max(a[model.dim + 1]);
            for (x, y) in a.iter().zip(&b) {
                let rel = (x - y).abs() / scale;
                worst_node = worst_node.max(rel);
                check(rel <= 1e-13, format!("{}: collision changed a moment by {rel:e}", model.name))?;
            }
        }
    }

    let model = VelocityModel::d3q95();
    let grid = Grid::periodic(vec![4, 4, 6]).unwrap();
    let mut sim = Simulation::new(&model, grid, 1.5, Execution::default()).map_err(|e| e.to_string())?;
    sim.initialize(|x| {
        let phase = (x[0] + 2 * x[1] + 3 * x[2]) as f64;
        MacroState::new(
            1.0 + 0.1 * phase.sin(),
            vec![0.1 + 0.05 * phase.cos(), -0.05, 0.02 * (0.5 * phase).sin()],
            1.0 + 0.05 * (0.3 * phase).cos(),
        )
        .unwrap()
    })
    .map_err(|e| e.to_string())?;
    let t0 = sim.totals();
    sim.run(1000, |_| Ok(())).map_err(|e| e.to_string())?;
    let t1 = sim.totals();
    let mom_scale = t0.momentum.iter().map(|p| p * p).sum::<f64>().sqrt();
    let dm = (t1.mass - t0.mass).abs() / t0.mass;
    let dp = t0
        .momentum
        .iter()
        .zip(&t1.momentum)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / mom_scale;
    let de = (t1.energy - t0.energy).abs() / t0.energy;
    check(dm <= 1e-12 && dp <= 1e-12 && de <= 1e-12, format!("drift mass {dm:e} momentum {dp:e} energy {de:e}"))?;
    within_budget(start, Duration::from_secs(60))?;
    Ok(format!(
        "per-node worst {worst_node:.1e}; 1000-step drift mass {dm:.1e} momentum {dp:.1e} energy {de:.1e}"
    ))
}

/// D3Q95 shock tube against the exact Riemann solution on the plateaus.
fn ac7_shock_tube() -> Outcome {
    let start = Instant::now();
    let cfg = SimulationConfig::default();
    check(cfg.dims == vec![2, 2, 800] && cfg.omega == 1.5, "unexpected default config".into())?;
    let mut tube = ShockTube::new(cfg, Execution::default()).map_err(|e| e.to_string())?;
    tube.run(|_| Ok(())).map_err(|e| e.to_string())?;
    let report = tube.compare(0.015).map_err(|e| e.to_string())?;
    check(
        report.end_distance_cells >= END_MARGIN_CELLS as f64,
        format!("front only {:.1} cells from an end", report.end_distance_cells),
    )?;
    let sol = reference_solution(tube.config()).unwrap();
    check(report.entries.len() == 4, format!("{report}"))?;
    check(report.pass(), format!("\n{report}"))?;
    within_budget(start, Duration::from_secs(300))?;
    let summary: Vec<String> = report
        .entries
        .iter()
        .map(|e| format!("{} {} {:+.2e}", e.region, e.field, e.rel_error))
        .collect();
    Ok(format!(
        "{} steps, p* = {:.6}; {}",
        tube.steps(),
        sol.p_star,
        summary.join(", ")
    ))
}

/// Bisection reference for the star pressure, independent of the solver.
fn bisection_star_pressure(l: &PrimitiveState, r: &PrimitiveState, g: f64) -> f64 {
    let fk = |p: f64, s: &PrimitiveState| {
        if p > s.pressure {
            (p - s.pressure) * (2.0 / ((g + 1.0) * s.rho) / (p + (g - 1.0) / (g + 1.0) * s.pressure)).sqrt()
        } else {
            2.0 * s.sound_speed(g) / (g - 1.0) * ((p / s.pressure).powf((g - 1.0) / (2.0 * g)) - 1.0)
        }
    };
    let f = |p: f64| fk(p, l) + fk(p, r) + r.velocity - l.velocity;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Rankine–Hugoniot balance and star-pressure convergence on 1000 pairs.
fn ac8_riemann_self_consistency() -> Outcome {
    let start = Instant::now();
    let g = 5.0 / 3.0;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut pairs, mut shocks) = (0, 0);
    let (mut worst_rh, mut worst_p): (f64, f64) = (0.0, 0.0);
    while pairs < 1000 {
        let mut st = || {
            PrimitiveState::new(rng.gen_range(0.1..10.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.05..10.0)).unwrap()
        };
        let (l, r) = (st(), st());
        let critical = 2.0 * (l.sound_speed(g) + r.sound_speed(g)) / (g - 1.0);
        if r.velocity - l.velocity >= critical {
            continue;
        }
        pairs += 1;
        let sol = solve(l, r, g).map_err(|e| e.to_string())?;
        let oracle = bisection_star_pressure(&l, &r, g);
        let dp = (sol.p_star - oracle).abs() / oracle;
        worst_p = worst_p.max(dp);
        check(dp <= 1e-12, format!("p* {} vs bisection {oracle}", sol.p_star))?;
        for imb in sol.shock_flux_imbalance() {
            shocks += 1;
            let m = imb.iter().copied().fold(0.0, f64::max);
            worst_rh = worst_rh.max(m);
            check(m <= 1e-10, format!("flux imbalance {imb:?}"))?;
        }
    }
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!(
        "{pairs} pairs, {shocks} shocks; worst |Δp*|/p* {worst_p:.1e}, worst flux imbalance {worst_rh:.1e}"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("AC1 equation counts", ac1_equation_counts),
        ("AC2 published table verification", ac2_table_verification),
        ("AC3 model re-derivation", ac3_model_rederivation),
        ("AC4 orbit/multiplicity audit", ac4_orbit_audit),
        ("AC5 equilibrium moment matching", ac5_moment_matching),
        ("AC6 conservation", ac6_conservation),
        ("AC7 shock tube vs exact Riemann", ac7_shock_tube),
        ("AC8 Riemann oracle self-consistency", ac8_riemann_self_consistency),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        match run() {
            Ok(detail) => println!("[PASS] {name} ({:.2?}): {detail}", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name} ({:.2?}): {why}", start.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

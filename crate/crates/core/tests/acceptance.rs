//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints its own pass/fail line; exits non-zero if any
//! criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use delaysync::cli::bundle::{CERTIFICATE, ERRORS, TRAJECTORIES};
use delaysync::cli::file::ScenarioFile;
use delaysync::cli::{cmd_run, RunOverrides};
use delaysync::engine::random::{random_tree, randomize_delays, zero_delays};
use delaysync::engine::{
    certificate_sweep, delayed_sync_errors, simulate, transformed_matrix, transformed_state,
    uniform_grid, GainSpec, Scenario,
};
use delaysync::numerics::{spectral_radius, RealMatrix};
use delaysync::plant::{check_contract, AgentModel, Exosystem};
use delaysync::presets::{
    heterogeneous, homogeneous, homogeneous_agent, homogeneous_exosystem, homogeneous_gains, with_seed,
    Case,
};
use delaysync::protocol::{Gains, Variant};
use delaysync::topology::{derive, validate_and_reorder};

const TOL: f64 = 1e-4;
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Outcome {
    passed: bool,
    detail: String,
}

fn pass_if(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{}.toml", name))
}

fn shipped(name: &str) -> Scenario {
    let path = scenario_path(name);
    ScenarioFile::read(&path).unwrap().to_scenario(&path.display().to_string()).unwrap()
}

fn six() -> Vec<String> {
    let mut v = Vec::new();
    for ex in ["example1", "example2"] {
        for c in Case::ALL {
            v.push(format!("{}_{}", ex, c.tag()));
        }
    }
    v
}

/// Regulated error at the last recorded step (k = horizon - 1).
fn final_error(s: &Scenario) -> Result<f64, String> {
    let p = s.prepare().map_err(|e| e.to_string())?;
    let r = simulate(&p).map_err(|e| e.to_string())?;
    Ok(delayed_sync_errors(&r, &p.network).final_max())
}

fn gain_fixtures() -> Outcome {
    let agent = homogeneous_agent();
    let g = homogeneous_gains();
    let h = g.h.as_ref().unwrap();
    let rk = spectral_radius(&(&agent.a - &(&agent.b * &g.k))).unwrap();
    let rh = spectral_radius(&(&agent.a - &(h * &agent.c))).unwrap();
    pass_if(
        rk < 1.0 - 1e-3 && rh < 1.0 - 1e-3,
        format!("radius(A - BK) = {:.6}, radius(A - HC) = {:.6}", rk, rh),
    )
}

fn convergence(build: fn(Case) -> Scenario) -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for case in Case::ALL {
        for seed in SEEDS {
            let s = with_seed(build(case), seed);
            assert_eq!(s.run.horizon, 2001);
            match final_error(&s) {
                Ok(e) => {
                    worst = worst.max(e);
                    if !(e < TOL) {
                        failures.push(format!("{} seed {}: {:.3e}", s.name, seed, e));
                    }
                }
                Err(e) => failures.push(format!("{} seed {}: {}", s.name, seed, e)),
            }
        }
    }
    pass_if(
        failures.is_empty(),
        format!(
            "15 runs, worst error at k = 2000: {:.3e}, {:.2} s{}",
            worst,
            start.elapsed().as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
        ),
    )
}

fn delay_robustness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut runs = 0;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for build in [homogeneous as fn(Case) -> Scenario, heterogeneous] {
        for case in Case::ALL {
            for trial in 0..20 {
                let mut s = build(case);
                s.topology = randomize_delays(&mut rng, &s.topology, 1, 20);
                runs += 1;
                match final_error(&s) {
                    Ok(e) => {
                        worst = worst.max(e);
                        if !(e < TOL) {
                            failures.push(format!("{} trial {}: {:.3e}", s.name, trial, e));
                        }
                    }
                    Err(e) => failures.push(format!("{} trial {}: {}", s.name, trial, e)),
                }
            }
        }
    }
    pass_if(
        failures.is_empty(),
        format!(
            "{} of {} runs converged, worst error {:.3e}, {:.2} s{}",
            runs - failures.len(),
            runs,
            worst,
            start.elapsed().as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
        ),
    )
}

fn network_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_identity: f64 = 0.0;
    let mut worst_row: f64 = 0.0;
    let mut worst_radius: f64 = 0.0;
    let mut ok = true;
    for _ in 0..200 {
        let n = rng.gen_range(1..=25);
        let weighted = rng.gen_bool(0.5);
        let t = random_tree(&mut rng, n, weighted);
        let d = derive(&validate_and_reorder(&t).unwrap()).unwrap();
        let mut lhs = d.laplacian.clone();
        for i in 0..n {
            let scale = 1.0 + d.in_degree[(i, i)];
            for j in 0..n {
                lhs[(i, j)] /= scale;
            }
        }
        let gap = (&(&lhs + &d.row_stochastic) - &RealMatrix::identity(n)).max_abs();
        worst_identity = worst_identity.max(gap);
        for i in 0..n {
            let row: f64 = d.row_stochastic.row_slice(i).iter().sum();
            worst_row = worst_row.max((row - 1.0).abs());
            let bar: f64 = d.contraction.row_slice(i).iter().sum();
            ok &= bar <= 1.0 + 1e-12;
            ok &= d.contraction.row_slice(i).iter().all(|&v| v >= 0.0);
        }
        let radius = spectral_radius(&d.contraction).unwrap();
        worst_radius = worst_radius.max(radius);
        ok &= radius < 1.0;
    }
    ok &= worst_identity <= 1e-12 && worst_row <= 1e-12;
    pass_if(
        ok,
        format!(
            "200 trees: row-sum error {:.1e}, identity error {:.1e}, largest contraction radius {:.4}",
            worst_row, worst_identity, worst_radius
        ),
    )
}

fn full_state_scenario() -> Scenario {
    let base = homogeneous_agent();
    let agent = AgentModel::new(base.a.clone(), base.b, RealMatrix::identity(3)).unwrap();
    let mut s = homogeneous(Case::Five);
    s.variant = Variant::FullState;
    s.agents = vec![agent; 5];
    s.exosystem = Exosystem::new(base.a, RealMatrix::identity(3), homogeneous_exosystem().x0).unwrap();
    s.gains = GainSpec::Explicit(Gains {
        k: homogeneous_gains().k,
        h: None,
    });
    s
}

fn transformed_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    let mut errors = Vec::new();
    let builders: [(&str, fn() -> Scenario); 3] = [
        ("full state", full_state_scenario),
        ("partial state", || homogeneous(Case::Five)),
        ("heterogeneous", || heterogeneous(Case::Five)),
    ];
    for (label, build) in builders {
        for _ in 0..10 {
            let mut s = build();
            let tree = random_tree(&mut rng, 5, true);
            s.topology = zero_delays(&tree);
            s.run.horizon = 51;
            s.run.seed = rng.gen();
            let result = (|| -> delaysync::Result<f64> {
                let p = s.prepare()?;
                let r = simulate(&p)?;
                let m = transformed_matrix(&p)?;
                let mut stacked = transformed_state(&p, &r, 0)?;
                let mut gap: f64 = 0.0;
                for k in 1..=50 {
                    stacked = m.matvec(&stacked)?;
                    let agentwise = transformed_state(&p, &r, k)?;
                    let scale = 1.0 + agentwise.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    for (a, b) in stacked.iter().zip(&agentwise) {
                        gap = gap.max((a - b).abs() / scale);
                    }
                }
                Ok(gap)
            })();
            match result {
                Ok(g) => worst = worst.max(g),
                Err(e) => errors.push(format!("{}: {}", label, e)),
            }
        }
    }
    pass_if(
        errors.is_empty() && worst < 1e-10,
        format!(
            "30 trials x 50 steps, largest relative gap {:.2e}{}",
            worst,
            if errors.is_empty() { String::new() } else { format!("; errors: {}", errors.join(", ")) }
        ),
    )
}

fn certificates() -> Outcome {
    let grid = uniform_grid(256);
    let mut lines = Vec::new();
    let mut ok = true;
    let mut closest = f64::INFINITY;
    for name in six() {
        let p = shipped(&name).prepare().unwrap();
        let report = certificate_sweep(&p, &grid, 1e-3).unwrap();
        closest = closest.min(report.min_distance);
        if !report.passed {
            ok = false;
            lines.push(format!("{} failed", name));
        }
    }
    let p = shipped("sabotaged_zero_gain").prepare().unwrap();
    let report = certificate_sweep(&p, &grid, 1e-3).unwrap();
    let sabotage_at_zero = !report.passed && report.first_failure().map(|f| f.omega) == Some(0.0);
    ok &= sabotage_at_zero;
    pass_if(
        ok,
        format!(
            "6 scenarios pass (closest distance {:.4}); zero-gain scenario fails at omega = 0: {}{}",
            closest,
            sabotage_at_zero,
            if lines.is_empty() { String::new() } else { format!("; {}", lines.join(", ")) }
        ),
    )
}

fn homogenization_contract() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut ok = true;
    for case in Case::ALL {
        let name = format!("example2_{}", case.tag());
        let p = shipped(&name).prepare().unwrap();
        let target = p.target.as_ref().unwrap();
        for (agent, pre) in p.agents.iter().zip(&p.precompensators) {
            for seed in 0..20u64 {
                let report = check_contract(agent, target, pre, 1, 500, seed).unwrap();
                worst = worst.max(report.final_output_error);
                ok &= report.passed(1e-8);
                checked += 1;
            }
        }
    }
    pass_if(
        ok,
        format!("{} agent/seed pairs, worst output gap after 500 steps {:.2e}", checked, worst),
    )
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut differing = Vec::new();
    for name in six() {
        let a = dir.path().join(format!("{}_a", name));
        let b = dir.path().join(format!("{}_b", name));
        let path = scenario_path(&name);
        cmd_run(&path, &a, &RunOverrides::default()).unwrap();
        cmd_run(&path, &b, &RunOverrides::default()).unwrap();
        for f in [TRAJECTORIES, ERRORS, CERTIFICATE] {
            if fs::read(a.join(f)).unwrap() != fs::read(b.join(f)).unwrap() {
                ok = false;
                differing.push(format!("{}/{}", name, f));
            }
        }
    }
    pass_if(
        ok,
        if ok {
            "6 scenarios run twice, all CSVs byte-identical".to_string()
        } else {
            format!("differing files: {}", differing.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("gain fixtures are Schur stable", gain_fixtures),
        ("homogeneous networks converge (3 cases x 5 seeds)", || convergence(homogeneous)),
        ("heterogeneous networks converge (3 cases x 5 seeds)", || convergence(heterogeneous)),
        ("convergence under random delays in 1..=20", delay_robustness),
        ("network algebra on random trees", network_algebra),
        ("transformed coordinates follow the stacked error system", transformed_oracle),
        ("frequency-sweep certificate", certificates),
        ("pre-compensator homogenization contract", homogenization_contract),
        ("command-line runs are deterministic", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        if !outcome.passed {
            failed += 1;
        }
        println!(
            "criterion {} [{}] {}: {}",
            i + 1,
            if outcome.passed { "PASS" } else { "FAIL" },
            name,
            outcome.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

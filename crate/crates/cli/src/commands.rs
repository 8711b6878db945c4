use std::fs;
use std::path::{Path, PathBuf};

use quorate::detect::{build_exact_tree, build_grid_chain_with, fixed_time_value, DetectionInstance, Horizon};
use quorate::equilibrium::{
    certify_equilibrium, expected_payoffs, solve_finite, solve_infinite, CertificationReport, DeviationSearch,
    EquilibriumSolution, StrategyProfile,
};
use quorate::sim::{self, PlayerStats, RunConfig, RunOutput};
use serde::Serialize;

use crate::failure::Failure;
use crate::scenario::{self, Backend, Diagnostic, Resolved};
use crate::solution::SolutionFile;
use crate::{Options, TOOL, VERSION};

/// Gains at or below this count as no profitable deviation.
pub const CERTIFY_TOL: f64 = 1e-9;

struct Context {
    resolved: Resolved,
    out: PathBuf,
    quiet: bool,
}

impl Context {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn solution_path(&self, opts: &Options) -> PathBuf {
        opts.solution.clone().unwrap_or_else(|| self.out.join("solution.json"))
    }

    fn sensor_ids(&self) -> Vec<u32> {
        self.resolved.scenario.sensors.iter().map(|s| s.id).collect()
    }

    fn run_config(&self) -> RunConfig {
        let s = &self.resolved.scenario.simulation;
        RunConfig {
            samples: s.samples,
            seed: s.seed,
            max_steps: s.max_steps,
        }
    }
}

fn config_path(opts: &Options) -> Result<&Path, Failure> {
    opts.config
        .as_deref()
        .ok_or_else(|| Failure::input("--config PATH is required"))
}

/// Applies command-line overrides, then checks the scenario. Semantic
/// problems go to stderr as a JSON diagnostic list.
fn prepare(opts: &Options) -> Result<Context, Failure> {
    let path = config_path(opts)?;
    let mut s = scenario::load(path)?;
    if let Some(seed) = opts.seed {
        s.simulation.seed = seed;
    }
    if let Some(samples) = opts.samples {
        s.simulation.samples = samples;
    }
    if let Some(backend) = opts.backend {
        s.solver.backend = backend;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let out = match (&opts.out, &s.output.dir) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => base.join(dir),
        (None, None) => PathBuf::from("."),
    };
    let resolved = scenario::resolve(s).map_err(|d| {
        eprintln!("{}", diagnostics_json(&d));
        Failure::semantic(format!("scenario has {} problem(s)", d.len()))
    })?;
    Ok(Context {
        resolved,
        out,
        quiet: opts.quiet,
    })
}

fn diagnostics_json(d: &[Diagnostic]) -> String {
    serde_json::to_string(&serde_json::json!({ "valid": false, "diagnostics": d })).expect("diagnostics serialize")
}

fn write_json<T: Serialize>(path: &Path, value: &T, pretty: bool) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .map_err(|e| Failure::semantic(format!("cannot encode {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(|e| Failure::semantic(format!("cannot write {}: {e}", path.display())))
}

fn csv_err(e: csv::Error) -> Failure {
    Failure::semantic(format!("csv: {e}"))
}

fn build(resolved: &Resolved) -> Result<DetectionInstance, Failure> {
    let solver = &resolved.scenario.solver;
    Ok(match solver.backend {
        Backend::Exact => {
            let n = resolved
                .horizon
                .finite()
                .ok_or_else(|| Failure::semantic("the exact backend needs a finite horizon"))?;
            DetectionInstance::Tree(build_exact_tree(&resolved.models, n, solver.tree_cap_bits)?)
        }
        Backend::Grid => DetectionInstance::Grid(build_grid_chain_with(
            &resolved.models,
            solver.bins,
            resolved.horizon,
            solver.grid_cap,
            solver.projection(),
        )?),
    })
}

fn solve(resolved: &Resolved, built: &DetectionInstance) -> Result<EquilibriumSolution, Failure> {
    let inst = built.instance();
    Ok(match resolved.horizon {
        Horizon::Finite(_) => solve_finite(inst, &resolved.game)?,
        Horizon::Infinite => solve_infinite(inst, &resolved.game, resolved.scenario.solver.infinite_options())?,
    })
}

/// Loads a solution and checks that it belongs to this scenario.
fn load_solution(ctx: &Context, opts: &Options, built: &DetectionInstance) -> Result<SolutionFile, Failure> {
    let path = ctx.solution_path(opts);
    let file = SolutionFile::read(&path)?;
    if file.fingerprint != ctx.resolved.fingerprint {
        return Err(Failure::semantic(format!(
            "fingerprint mismatch: solution {} was produced for scenario {}, not {}",
            path.display(),
            file.fingerprint,
            ctx.resolved.fingerprint
        )));
    }
    if file.states != built.instance().states() || file.sensor_ids.len() != ctx.resolved.models.len() {
        return Err(Failure::semantic(format!(
            "solution covers {} states and {} sensors; the scenario has {} and {}",
            file.states,
            file.sensor_ids.len(),
            built.instance().states(),
            ctx.resolved.models.len()
        )));
    }
    Ok(file)
}

pub fn validate(opts: &Options) -> Result<(), Failure> {
    let path = config_path(opts)?;
    let s = scenario::load(path)?;
    match scenario::resolve(s) {
        Ok(r) => {
            if !opts.quiet {
                let report = serde_json::json!({
                    "valid": true,
                    "fingerprint": r.fingerprint,
                    "sensors": r.models.len(),
                    "winning_coalitions": r.game.winning_coalitions().len(),
                });
                println!("{report}");
            }
            Ok(())
        }
        Err(d) => {
            println!("{}", diagnostics_json(&d));
            Err(Failure::semantic(format!("{} problem(s) found", d.len())))
        }
    }
}

pub fn solve_cmd(opts: &Options) -> Result<(), Failure> {
    let ctx = prepare(opts)?;
    let r = &ctx.resolved;
    let built = build(r)?;
    let sol = solve(r, &built)?;
    let file = SolutionFile::from_solution(
        &r.fingerprint,
        r.scenario.solver.backend,
        r.scenario.horizon,
        ctx.sensor_ids(),
        built.instance().keys(),
        built.root(),
        &sol,
    );
    let path = ctx.out.join("solution.json");
    write_json(&path, &file, false)?;
    ctx.say(format!(
        "solved {} states; root values {:?}; converged {}; wrote {}",
        file.states,
        file.root_values,
        file.diagnostics.converged,
        path.display()
    ));
    if !sol.diagnostics.converged {
        return Err(Failure::semantic(format!(
            "fixed-point iteration did not converge (residual {:e} after {} iterations)",
            sol.diagnostics.residual, sol.diagnostics.iterations
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct PlayerRow<'a> {
    sensor_id: u32,
    expected_success: f64,
    #[serde(flatten)]
    stats: &'a PlayerStats,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    policy: &'a str,
    samples: u64,
    seed: u64,
    max_steps: usize,
    players: Vec<PlayerRow<'a>>,
    alarm_histogram: &'a [u64],
    no_alarm: u64,
}

fn summarize<'a>(policy: &'a str, ids: &[u32], expected: &[f64], out: &'a sim::RunReport) -> RunSummary<'a> {
    RunSummary {
        policy,
        samples: out.samples,
        seed: out.seed,
        max_steps: out.max_steps,
        players: ids
            .iter()
            .zip(expected)
            .zip(&out.players)
            .map(|((&sensor_id, &expected_success), stats)| PlayerRow {
                sensor_id,
                expected_success,
                stats,
            })
            .collect(),
        alarm_histogram: &out.alarm_histogram,
        no_alarm: out.no_alarm,
    }
}

fn write_trajectories(path: &Path, ids: &[u32], out: &RunOutput, fingerprint: &str) -> Result<(), Failure> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["trajectory_id".to_string()];
    header.extend(ids.iter().map(|id| format!("theta_{id}")));
    header.push("alarm_time".into());
    header.extend(ids.iter().map(|id| format!("outcome_{id}")));
    header.extend(["fingerprint".into(), "tool_version".into()]);
    w.write_record(&header).map_err(csv_err)?;
    for t in &out.trajectories {
        let mut row = vec![t.id.to_string()];
        row.extend(t.thetas.iter().map(usize::to_string));
        row.push(t.alarm.map_or(String::new(), |a| a.to_string()));
        row.extend(t.outcomes.iter().map(|o| o.as_str().to_string()));
        row.extend([fingerprint.to_string(), VERSION.to_string()]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate(opts: &Options) -> Result<(), Failure> {
    let ctx = prepare(opts)?;
    let r = &ctx.resolved;
    let built = build(r)?;
    let file = load_solution(&ctx, opts, &built)?;
    let profile = file.profile()?;
    let config = ctx.run_config();
    let out = sim::run(&r.models, &r.game, &built, &profile, config)?;
    let exact = expected_payoffs(built.instance(), &r.game, &profile)?;
    let root = built.root();
    let expected: Vec<f64> = exact.iter().map(|v| v[root]).collect();
    let ids = ctx.sensor_ids();

    #[derive(Serialize)]
    struct Report<'a> {
        tool: &'a str,
        version: &'a str,
        fingerprint: &'a str,
        #[serde(flatten)]
        run: RunSummary<'a>,
    }
    let report = Report {
        tool: TOOL,
        version: VERSION,
        fingerprint: &r.fingerprint,
        run: summarize("solution", &ids, &expected, &out.report),
    };
    write_json(&ctx.out.join("report.json"), &report, true)?;
    write_trajectories(&ctx.out.join("trajectories.csv"), &ids, &out, &r.fingerprint)?;
    for row in &report.run.players {
        ctx.say(format!(
            "sensor {}: success {:.4} ± {:.4} (expected {:.4})",
            row.sensor_id, row.stats.success_rate, row.stats.success_se, row.expected_success
        ));
    }
    Ok(())
}

/// Random deviations per player in sampled mode unless `--samples` is given.
const CERTIFY_SAMPLES: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertifyMode {
    Exhaustive,
    Sampled,
    BestResponse,
}

pub fn certify(opts: &Options, mode: CertifyMode) -> Result<(), Failure> {
    let ctx = prepare(opts)?;
    let r = &ctx.resolved;
    let built = build(r)?;
    let file = load_solution(&ctx, opts, &built)?;
    let profile = file.profile()?;
    let search = match mode {
        CertifyMode::Sampled => DeviationSearch::Sampled {
            samples: opts.samples.unwrap_or(CERTIFY_SAMPLES).min(100_000) as usize,
            seed: r.scenario.simulation.seed,
        },
        CertifyMode::Exhaustive => DeviationSearch::Exhaustive {
            cap_bits: r.scenario.solver.certify_cap_bits,
        },
        CertifyMode::BestResponse => DeviationSearch::BestResponse,
    };
    let rep: CertificationReport = certify_equilibrium(built.instance(), &r.game, &profile, search).map_err(|e| match e {
        quorate::Error::SizeCap { .. } => Failure::semantic(format!("{e}; rerun with --best-response for an exact dynamic-programming check or --sampled for a random search")),
        other => other.into(),
    })?;
    let max_gain = rep.max_gain();
    let certified = max_gain <= CERTIFY_TOL;

    #[derive(Serialize)]
    struct Gain {
        sensor_id: u32,
        gain: f64,
        free_bits: usize,
    }
    #[derive(Serialize)]
    struct Certificate<'a> {
        tool: &'a str,
        version: &'a str,
        fingerprint: &'a str,
        mode: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        caveat: Option<&'a str>,
        tolerance: f64,
        certified: bool,
        max_gain: f64,
        deviations_checked: u64,
        players: Vec<Gain>,
    }
    let cert = Certificate {
        tool: TOOL,
        version: VERSION,
        fingerprint: &r.fingerprint,
        mode: rep.mode,
        caveat: (mode == CertifyMode::Sampled).then_some("sampled: random and greedy deviations only; a zero gain is not a proof of equilibrium"),
        tolerance: CERTIFY_TOL,
        certified,
        max_gain,
        deviations_checked: rep.deviations_checked,
        players: ctx
            .sensor_ids()
            .into_iter()
            .zip(&rep.gains)
            .zip(&rep.free_bits)
            .map(|((sensor_id, &gain), &free_bits)| Gain {
                sensor_id,
                gain,
                free_bits,
            })
            .collect(),
    };
    write_json(&ctx.out.join("certificate.json"), &cert, true)?;
    ctx.say(format!("{} check: max gain {max_gain:e} over {} deviations", rep.mode, rep.deviations_checked));
    if certified {
        Ok(())
    } else {
        Err(Failure::semantic(format!("profitable deviation found: gain {max_gain:e}")))
    }
}

pub fn compare(opts: &Options) -> Result<(), Failure> {
    let ctx = prepare(opts)?;
    let r = &ctx.resolved;
    let built = build(r)?;
    let inst = built.instance();
    let players = r.models.len();
    let states = inst.states();

    let equilibrium = if opts.solution.is_some() {
        load_solution(&ctx, opts, &built)?.profile()?
    } else {
        solve(r, &built)?.profile
    };
    // Best common fixed alarm time under the priors alone.
    let last = r.horizon.finite().unwrap_or(r.scenario.simulation.max_steps).max(1);
    let best_n = (1..=last)
        .map(|n| (n, r.models.iter().map(|m| fixed_time_value(m, n)).sum::<f64>()))
        .fold((1, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0;
    let policies: Vec<(String, StrategyProfile)> = vec![
        ("equilibrium".into(), equilibrium),
        (format!("fixed_time_{best_n}"), StrategyProfile::fixed_time(players, states, best_n)),
        ("never_stop".into(), StrategyProfile::never_stop(players, states, r.horizon.finite())),
    ];
    let reports = sim::compare_policies(&r.models, &r.game, &built, &policies, ctx.run_config())?;
    let ids = ctx.sensor_ids();
    let root = built.root();
    let expected: Vec<Vec<f64>> = policies
        .iter()
        .map(|(_, p)| Ok(expected_payoffs(inst, &r.game, p)?.iter().map(|v| v[root]).collect()))
        .collect::<Result<_, quorate::Error>>()?;

    let rows: Vec<RunSummary> = reports
        .iter()
        .zip(&expected)
        .map(|((name, rep), exp)| summarize(name, &ids, exp, rep))
        .collect();

    #[derive(Serialize)]
    struct Comparison<'a> {
        tool: &'a str,
        version: &'a str,
        fingerprint: &'a str,
        policies: &'a [RunSummary<'a>],
    }
    write_json(
        &ctx.out.join("compare.json"),
        &Comparison {
            tool: TOOL,
            version: VERSION,
            fingerprint: &r.fingerprint,
            policies: &rows,
        },
        true,
    )?;

    let mut w = csv_writer(&ctx.out.join("compare.csv"))?;
    w.write_record([
        "policy",
        "sensor_id",
        "expected_success",
        "success_rate",
        "success_se",
        "false_alarm_rate",
        "late_rate",
        "no_alarm_rate",
        "fingerprint",
        "tool_version",
    ])
    .map_err(csv_err)?;
    for row in &rows {
        for p in &row.players {
            w.write_record([
                row.policy.to_string(),
                p.sensor_id.to_string(),
                p.expected_success.to_string(),
                p.stats.success_rate.to_string(),
                p.stats.success_se.to_string(),
                p.stats.false_alarm_rate.to_string(),
                p.stats.late_rate.to_string(),
                p.stats.no_alarm_rate.to_string(),
                r.fingerprint.clone(),
                VERSION.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let mean: f64 = row.players.iter().map(|p| p.stats.success_rate).sum::<f64>() / row.players.len() as f64;
        ctx.say(format!("{:<16} mean success {mean:.4}", row.policy));
    }
    w.flush()?;
    Ok(())
}

use std::path::{Path, PathBuf};
use std::str::FromStr;

use quadtune::config::{ExperimentConfig, Preset};
use quadtune::env::ACTION_DIM;
use quadtune::metrics::{
    self, describe, evaluate_checkpoint, run_trials, write_json, write_summary_csv,
    write_trajectory_csv, write_trials_csv, BatchSummary, HoverController,
    RandomController, SummaryOptions, Trial, TrialOptions, TrialReport, CHANNELS,
};
use quadtune::nn::Checkpoint;
use quadtune::ppo::{IterationLog, Trainer};
use quadtune::{Error, Result};

use crate::plot::{box_panels, grid, Band, BoxChart, BoxGroup, Chart, Line, PALETTE};
use crate::{BuiltinController, CompareArgs, ConfigArgs, EvaluateArgs, RolloutArgs, TrainArgs};

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// `<out>/<label>` when an output root is given, else the config's own directory.
fn run_dir(out: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    match out {
        Some(root) => root.join(config.name()),
        None => config.output_dir.clone(),
    }
}

fn load_config(source: &ConfigArgs) -> Result<Option<ExperimentConfig>> {
    match (&source.config, &source.preset) {
        (Some(path), _) => ExperimentConfig::load(path).map(Some),
        (None, Some(name)) => Ok(Some(Preset::from_str(name)?.config())),
        (None, None) => Ok(None),
    }
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::config("seeds", format!("expected a count or a comma-separated list, got `{spec}`"));
    if spec.contains(',') {
        spec.split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|_| bad()))
            .collect()
    } else {
        let n: u64 = spec.trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Ok((0..n).collect())
    }
}

pub fn train(args: TrainArgs) -> Result<()> {
    let mut config = load_config(&args.source)?
        .ok_or_else(|| Error::Usage("train needs --config or --preset".into()))?;
    if let Some(t) = args.timesteps {
        config.ppo.total_timesteps = t;
    }
    if let Some(s) = args.seed {
        config.seeds = vec![s];
    } else if let Some(spec) = &args.seeds {
        config.seeds = parse_seeds(spec)?;
    }
    config.validate()?;
    if args.resume.is_some() && config.seeds.len() != 1 {
        return Err(Error::Usage("--resume needs exactly one seed".into()));
    }

    let run_dir = run_dir(args.out.as_deref(), &config);
    create_dir(&run_dir)?;
    config.save(&run_dir.join("config.toml"))?;

    let mut curves: Vec<(u64, Vec<IterationLog>)> = Vec::new();
    for &seed in &config.seeds {
        let seed_dir = run_dir.join(format!("seed_{seed}"));
        create_dir(&seed_dir)?;
        let _ = std::fs::remove_file(seed_dir.join("FAILED"));
        let mut trainer = match &args.resume {
            Some(path) => Trainer::resume(&config, Checkpoint::load(path)?, seed)?,
            None => Trainer::new(&config, seed)?,
        };
        let total = trainer.total_iterations();
        let label = config.name();
        let quiet = args.quiet;
        let result = trainer.run(Some(&seed_dir), |log| {
            if !quiet {
                eprintln!(
                    "[{label} seed {seed}] iteration {}/{total} steps {} episode reward {} length {} kl {:.4} clip {:.3}",
                    log.iteration,
                    log.timesteps,
                    fmt_opt(log.episode_mean_reward),
                    fmt_opt(log.episode_mean_length),
                    log.approx_kl,
                    log.clip_fraction,
                );
            }
        });
        match result {
            Ok(history) => {
                println!("{}", seed_dir.join("final.ckpt").display());
                curves.push((seed, history));
            }
            Err(e) => {
                write_file(
                    &seed_dir.join("FAILED"),
                    &format!("{e}\nlast good checkpoint: latest.ckpt\n"),
                )?;
                return Err(e);
            }
        }
    }
    write_file(&run_dir.join("learning_curves.svg"), &learning_curve_svg(&config.name(), &curves))?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

fn learning_curve_svg(label: &str, curves: &[(u64, Vec<IterationLog>)]) -> String {
    let mut chart = Chart {
        title: format!("{label}: rollout episode mean reward"),
        x_label: "timesteps".into(),
        y_label: "episode mean reward".into(),
        legend: true,
        ..Chart::default()
    };
    for (i, (seed, history)) in curves.iter().enumerate() {
        let points = history
            .iter()
            .filter_map(|l| l.episode_mean_reward.map(|r| (l.timesteps as f64, r)))
            .collect();
        let mut line = Line::new(format!("seed {seed}"), PALETTE[(i + 1) % PALETTE.len()], points);
        line.width = 1.0;
        line.opacity = 0.5;
        chart.lines.push(line);
    }
    // Mean and range over seeds at iterations where every seed has a value.
    let n_iter = curves.iter().map(|(_, h)| h.len()).min().unwrap_or(0);
    let (mut x, mut lo, mut hi, mut mean) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..n_iter {
        let vals: Option<Vec<f64>> = curves.iter().map(|(_, h)| h[i].episode_mean_reward).collect();
        if let Some(v) = vals {
            x.push(curves[0].1[i].timesteps as f64);
            lo.push(v.iter().copied().fold(f64::INFINITY, f64::min));
            hi.push(v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            mean.push(v.iter().sum::<f64>() / v.len() as f64);
        }
    }
    if curves.len() > 1 && !x.is_empty() {
        chart.bands.push(Band {
            color: PALETTE[0].into(),
            x: x.clone(),
            lower: lo,
            upper: hi,
        });
        let mut line = Line::new("mean", PALETTE[0], x.into_iter().zip(mean).collect());
        line.width = 2.5;
        chart.lines.push(line);
    }
    chart.to_svg(720.0, 440.0)
}

fn trial_options(trials: usize, horizon: f64, seed: u64, band: f64, window: f64) -> TrialOptions {
    TrialOptions {
        n_trials: trials,
        horizon,
        seed,
        band_fraction: band,
        steady_window: window,
    }
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let options = trial_options(args.trials, args.horizon, args.seed, args.band, args.window);
    let (config, trials) = evaluate_checkpoint(&checkpoint, args.preset.as_deref(), &options)?;
    let dir = run_dir(args.out.as_deref(), &config).join("evaluation");
    create_dir(&dir)?;

    let mut reports: Vec<TrialReport> = trials.iter().map(|t| t.report.clone()).collect();
    if !args.no_trajectories {
        let traj_dir = dir.join("trajectories");
        create_dir(&traj_dir)?;
        for (t, r) in trials.iter().zip(reports.iter_mut()) {
            let name = format!("trial_{:03}.csv", t.report.trial);
            write_trajectory_csv(&traj_dir.join(&name), Some(&t.start), &t.records, None)?;
            r.trajectory = Some(format!("trajectories/{name}"));
        }
    }
    let summary = metrics::summarize(
        &reports,
        &SummaryOptions {
            horizon: args.horizon,
            steady_state_band: 100.0 * args.band,
            zero_overshoot_tolerance: args.zero_overshoot_tolerance,
        },
    )?;
    write_json(&dir.join("reports.json"), &reports)?;
    write_json(&dir.join("summary.json"), &summary)?;
    write_summary_csv(&dir.join("summary.csv"), &summary)?;
    write_trials_csv(&dir.join("trials.csv"), &reports)?;
    write_boxplots(&dir, &checkpoint.label, &reports, &summary)?;
    print_summary(&checkpoint.label, &summary);
    println!("{}", dir.display());
    Ok(())
}

fn print_summary(label: &str, s: &BatchSummary) {
    println!("{label}: {} trials, success {:.0}%", s.trials, 100.0 * s.success_fraction);
    println!(
        "{:<6} {:>12} {:>12} {:>12} {:>10} {:>10}",
        "chan", "settle med s", "over med %", "sse med %", "in band", "no over"
    );
    for c in &s.channels {
        println!(
            "{:<6} {:>12.3} {:>12.3} {:>12.3} {:>9.0}% {:>9.0}%",
            c.channel,
            c.settling_time.median,
            c.overshoot.median,
            c.steady_state_error.median,
            100.0 * c.within_band_fraction,
            100.0 * c.zero_overshoot_fraction
        );
    }
}

fn write_boxplots(dir: &Path, label: &str, reports: &[TrialReport], summary: &BatchSummary) -> Result<()> {
    type Pick = fn(&metrics::ChannelSummary) -> &metrics::BoxStats;
    let panels: [(&str, &str, &str, Pick); 3] = [
        ("settling_time", "Settling time", "s", |c| &c.settling_time),
        ("overshoot", "Overshoot", "% of step", |c| &c.overshoot),
        ("steady_state_error", "Steady-state error", "% of step", |c| &c.steady_state_error),
    ];
    let mut charts = Vec::new();
    for (file, title, unit, pick) in panels {
        let groups = summary
            .channels
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let values: Vec<f64> = reports
                    .iter()
                    .map(|r| {
                        let m = r.channel(&c.channel);
                        match file {
                            "settling_time" => m.settling_time.unwrap_or(summary.options.horizon),
                            "overshoot" => m.overshoot,
                            _ => m.steady_state_error,
                        }
                    })
                    .collect();
                let stats = pick(c).clone();
                BoxGroup {
                    label: c.channel.clone(),
                    color: PALETTE[i % PALETTE.len()].into(),
                    whiskers: stats.whiskers(&values),
                    stats,
                }
            })
            .collect();
        let chart = BoxChart {
            title: format!("{label}: {title}"),
            y_label: unit.into(),
            groups,
        };
        write_file(&dir.join(format!("{file}.svg")), &box_panels(std::slice::from_ref(&chart), 420.0, 360.0))?;
        charts.push(chart);
    }
    write_file(&dir.join("boxplots.svg"), &box_panels(&charts, 420.0, 360.0))
}

pub fn compare(args: CompareArgs) -> Result<()> {
    if args.checkpoints.len() < 2 {
        return Err(Error::Usage("compare needs at least two checkpoints".into()));
    }
    let checkpoints = args
        .checkpoints
        .iter()
        .map(|p| Checkpoint::load(p))
        .collect::<Result<Vec<_>>>()?;
    for (path, ck) in args.checkpoints.iter().zip(&checkpoints).skip(1) {
        if !ck.policy.same_architecture(&checkpoints[0].policy) {
            return Err(Error::Checkpoint(format!(
                "{} is incompatible with {}: network shapes differ",
                path.display(),
                args.checkpoints[0].display()
            )));
        }
    }
    let labels: Vec<String> = checkpoints
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if checkpoints.iter().filter(|o| o.label == c.label).count() > 1 {
                format!("{} #{}", c.label, i + 1)
            } else {
                c.label.clone()
            }
        })
        .collect();

    let options = trial_options(args.tests, args.horizon, args.seed, 0.02, 1.0);
    let mut runs: Vec<Vec<Trial>> = Vec::new();
    for ck in &checkpoints {
        runs.push(evaluate_checkpoint(ck, None, &options)?.1);
    }

    let root = args.out.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let dir = root.join("compare");
    create_dir(&dir)?;

    let channel_value = |s: &quadtune::dynamics::QuadrotorState, ch: &str| match ch {
        "x" => s.position.x,
        "y" => s.position.y,
        "z" => s.position.z,
        _ => s.attitude.to_euler().2,
    };
    let mut response_charts = Vec::new();
    for ch in CHANNELS {
        let mut chart = Chart {
            title: format!("{ch} response"),
            x_label: "t [s]".into(),
            y_label: if ch == "yaw" { "rad".into() } else { "m".into() },
            legend: true,
            ..Chart::default()
        };
        for (p, trials) in runs.iter().enumerate() {
            for t in trials {
                let points = std::iter::once((0.0, channel_value(&t.start, ch)))
                    .chain(t.records.iter().map(|r| (r.time, channel_value(&r.state, ch))))
                    .collect();
                chart.lines.push(Line::new(labels[p].clone(), PALETTE[p % PALETTE.len()], points));
            }
        }
        response_charts.push(chart);
    }
    write_file(&dir.join("responses.svg"), &grid(&response_charts, 2, 520.0, 340.0))?;

    let mut rpm_charts = Vec::new();
    for motor in 0..ACTION_DIM {
        let mut chart = Chart {
            title: format!("motor {} mean RPM", motor + 1),
            x_label: "t [s]".into(),
            y_label: "RPM".into(),
            legend: true,
            ..Chart::default()
        };
        for (p, trials) in runs.iter().enumerate() {
            chart.lines.push(Line::new(labels[p].clone(), PALETTE[p % PALETTE.len()], mean_rpm(trials, motor)));
        }
        rpm_charts.push(chart);
    }
    write_file(&dir.join("rpm.svg"), &grid(&rpm_charts, 2, 520.0, 340.0))?;

    let mut table = csv::Writer::from_path(dir.join("compare.csv"))?;
    table.write_record(["policy", "test", "status", "channel", "settling_time_s", "overshoot_pct", "steady_state_error_pct"])?;
    for (p, trials) in runs.iter().enumerate() {
        for t in trials {
            for (ch, m) in t.report.channels() {
                table.write_record([
                    labels[p].clone(),
                    t.report.trial.to_string(),
                    t.report.status.to_string(),
                    ch.to_string(),
                    m.settling_time.map(|v| v.to_string()).unwrap_or_default(),
                    m.overshoot.to_string(),
                    m.steady_state_error.to_string(),
                ])?;
            }
        }
    }
    table.flush().map_err(|e| Error::io(dir.join("compare.csv"), e))?;
    for (p, trials) in runs.iter().enumerate() {
        let reports: Vec<f64> = trials.iter().map(|t| t.report.total_reward).collect();
        let s = describe(&reports)?;
        println!("{}: median episode reward {:.3}", labels[p], s.median);
    }
    println!("{}", dir.display());
    Ok(())
}

/// Mean speed of one motor across the tests still running at each step.
fn mean_rpm(trials: &[Trial], motor: usize) -> Vec<(f64, f64)> {
    let longest = trials.iter().map(|t| t.records.len()).max().unwrap_or(0);
    (0..longest)
        .map(|k| {
            let live: Vec<f64> = trials
                .iter()
                .filter_map(|t| t.records.get(k).map(|r| r.rpm[motor]))
                .collect();
            let time = trials.iter().find_map(|t| t.records.get(k).map(|r| r.time)).unwrap_or(0.0);
            (time, live.iter().sum::<f64>() / live.len() as f64)
        })
        .collect()
}

pub fn rollout(args: RolloutArgs) -> Result<()> {
    let options = trial_options(1, args.duration, args.seed, 0.02, 1.0);
    if !(args.duration.is_finite() && args.duration >= 0.0) {
        return Err(Error::Usage(format!("invalid duration {}", args.duration)));
    }
    let (config, trial, source) = match (&args.checkpoint, args.controller) {
        (Some(path), _) => {
            let ck = Checkpoint::load(path)?;
            let (config, mut trials) = evaluate_checkpoint(&ck, None, &options)?;
            (config, trials.remove(0), ck.label.clone())
        }
        (None, controller) => {
            let config = load_config(&args.source)?.unwrap_or_else(|| Preset::Baseline.config());
            let env = config.env_config()?;
            let (mut trials, name) = match controller.unwrap_or(BuiltinController::Hover) {
                BuiltinController::Hover => (run_trials(&env, &options, |_| HoverController)?, "hover"),
                BuiltinController::Random => (
                    run_trials(&env, &options, |_| RandomController::new(args.seed))?,
                    "random",
                ),
            };
            (config, trials.remove(0), name.to_string())
        }
    };
    let root = args.out.clone().unwrap_or_else(|| config.output_dir.clone());
    create_dir(&root)?;
    let path = root.join(format!("rollout_{source}.csv"));
    if args.duration > 0.0 {
        write_trajectory_csv(&path, Some(&trial.start), &trial.records, Some(trial.report.status))?;
    } else {
        write_trajectory_csv(&path, None, &[], None)?;
    }
    eprintln!(
        "{source}: {} after {:.2} s, return {:.3}",
        trial.report.status, trial.report.duration, trial.report.total_reward
    );
    println!("{}", path.display());
    Ok(())
}

//! Closed-loop scenario execution, CSV reporting, sweeps and replay.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::controllers::{Channel, ChannelController, ControllerKind, FixedSni, FuzzyQlSni, FuzzySni, Pid};
use crate::disturbances::{apply_bias, body_z_axis, one_minus_cos, wind_to_disturbance, DrydenGust};
use crate::error::{Error, Result};
use crate::fb_lin::{Linearizer, VirtualInput};
use crate::harness::config::ScenarioConfig;
use crate::harness::metrics::{default_band, rmse, settle_time, steady_offset, Settle};
use crate::plant::{self, Disturbance, QuadState};

pub const TRAJECTORY_SCHEMA: &str = "# fqlsni trajectory v1";
pub const METRICS_SCHEMA: &str = "# fqlsni metrics v1";
pub const QTABLE_SCHEMA: &str = "# fqlsni qtables v1";
pub const SWEEP_SCHEMA: &str = "# fqlsni sweep v1";

/// Mixed into the run seed for the turbulence generator, so it never shares
/// a stream with the learning agents.
const DRYDEN_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// One logged sample. Arrays are in channel order roll, pitch, yaw, z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub reference: [f64; 4],
    pub output: [f64; 4],
    pub error: [f64; 4],
    /// Control moments U1..U4 actually applied.
    pub u: [f64; 4],
    pub v: [f64; 4],
    /// NaN on channels without SNI gains.
    pub gamma: [f64; 4],
    pub tau: [f64; 4],
    pub wind: [f64; 3],
    pub reward: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTableSnapshot {
    pub time: f64,
    pub channel: Channel,
    /// "gamma" or "tau".
    pub output: &'static str,
    pub rows: Vec<Vec<f64>>,
}

/// Everything recorded during one run.
#[derive(Debug, Clone, Default)]
pub struct SimLog {
    pub samples: Vec<Sample>,
    pub qtables: Vec<QTableSnapshot>,
    pub kinds: Vec<ControllerKind>,
    pub returns: [Option<(f64, f64)>; 4],
}

impl SimLog {
    pub fn errors(&self, ch: Channel) -> Vec<f64> {
        self.samples.iter().map(|s| s.error[ch.index()]).collect()
    }

    pub fn outputs(&self, ch: Channel) -> Vec<f64> {
        self.samples.iter().map(|s| s.output[ch.index()]).collect()
    }
}

/// Result of [`simulate`]: the log up to the last completed sample and, when
/// the run aborted, the reason.
#[derive(Debug)]
pub struct SimOutcome {
    pub log: SimLog,
    pub error: Option<Error>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMetrics {
    pub channel: Channel,
    pub kind: ControllerKind,
    pub rmse: f64,
    /// NaN when the run has 500 samples or fewer.
    pub so: f64,
    pub settle: Settle,
    /// Discounted returns of the (gamma, tau) agents.
    pub returns: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub trajectory: PathBuf,
    pub metrics: PathBuf,
    pub qtables: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub channels: [ChannelMetrics; 4],
    pub files: Option<OutputFiles>,
}

impl RunMetrics {
    pub fn channel(&self, ch: Channel) -> &ChannelMetrics {
        &self.channels[ch.index()]
    }
}

fn build_controllers(cfg: &ScenarioConfig) -> Result<Vec<ChannelController>> {
    let rules = cfg.rule_base()?;
    let hp = cfg.fql.hyper_params(cfg.run.seed);
    Channel::ALL
        .iter()
        .map(|&ch| {
            let sni = *cfg.sni.get(ch);
            Ok(match cfg.controllers.get(ch) {
                ControllerKind::Pid => ChannelController::Pid(Pid::new(*cfg.pid.get(ch))?),
                ControllerKind::Sni => ChannelController::Sni(FixedSni::new(sni)?),
                ControllerKind::FuzzySni => {
                    ChannelController::FuzzySni(FuzzySni::new(sni, rules.clone(), &cfg.expert, cfg.bounds)?)
                }
                ControllerKind::FuzzyQlSni => ChannelController::FuzzyQlSni(Box::new(FuzzyQlSni::new(
                    sni,
                    rules.clone(),
                    &cfg.actions,
                    hp,
                    cfg.bounds,
                    ch.index() as u64,
                )?)),
            })
        })
        .collect()
}

fn output_of(state: &QuadState, ch: Channel) -> f64 {
    match ch {
        Channel::Roll => state.roll,
        Channel::Pitch => state.pitch,
        Channel::Yaw => state.yaw,
        Channel::Z => state.z,
    }
}

fn snapshot(log: &mut SimLog, controllers: &[ChannelController], t: f64) {
    for (ch, c) in Channel::ALL.iter().zip(controllers) {
        if let Some(tables) = c.q_tables() {
            for (output, table, _) in tables {
                log.qtables.push(QTableSnapshot {
                    time: t,
                    channel: *ch,
                    output: if output == "gamma" { "gamma" } else { "tau" },
                    rows: table.rows().to_vec(),
                });
            }
        }
    }
}

/// Run the closed loop without touching the filesystem.
///
/// Per sample: references, errors, controller step, linearization with the
/// nominal model, optional saturation, wind, plant step with the biased model.
pub fn simulate(cfg: &ScenarioConfig) -> SimOutcome {
    let mut log = SimLog::default();
    match simulate_into(cfg, &mut log) {
        Ok(()) => SimOutcome { log, error: None },
        Err(e) => SimOutcome { log, error: Some(e) },
    }
}

fn simulate_into(cfg: &ScenarioConfig, log: &mut SimLog) -> Result<()> {
    cfg.validate()?;
    let dt = cfg.run.dt;
    let n = cfg.steps();
    let mut controllers = build_controllers(cfg)?;
    log.kinds = controllers.iter().map(|c| c.kind()).collect();
    log.samples.reserve(n);

    let linearizer = Linearizer::new(cfg.plant);
    let true_params = match &cfg.bias {
        Some(b) => apply_bias(&cfg.plant, b),
        None => cfg.plant,
    };
    let mut dryden = match &cfg.dryden {
        Some(d) => {
            let mut d = *d;
            d.seed ^= cfg.run.seed.wrapping_mul(DRYDEN_SEED_SALT);
            Some(DrydenGust::new(&d, dt)?)
        }
        None => None,
    };
    let snapshot_every = if cfg.run.qtable_interval > 0.0 {
        Some(((cfg.run.qtable_interval / dt).round() as usize).max(1))
    } else {
        None
    };

    let mut state = QuadState::default();
    for k in 0..n {
        let t = k as f64 * dt;
        let mut reference = [0.0; 4];
        let mut output = [0.0; 4];
        let mut error = [0.0; 4];
        let mut vch = [0.0; 4];
        for ch in Channel::ALL {
            let i = ch.index();
            reference[i] = cfg.references.get(ch).sample(t);
            output[i] = output_of(&state, ch);
            error[i] = reference[i] - output[i];
            vch[i] = controllers[i].step(error[i], t, dt)?;
        }
        let v = VirtualInput {
            v1: vch[Channel::Z.index()],
            v2: vch[Channel::Roll.index()],
            v3: vch[Channel::Pitch.index()],
            v4: vch[Channel::Yaw.index()],
        };
        let mut u = linearizer.linearize(&v, &state).map_err(|e| match e {
            Error::Singularity { cos_product } => Error::Diverged {
                time: t,
                reason: format!("linearization singular, cos(roll)cos(pitch) = {cos_product:e}"),
            },
            other => other,
        })?;
        if let Some(limits) = &cfg.limits {
            u = u.saturate(limits);
        }
        if !u.is_finite() || !vch.iter().all(|x| x.is_finite()) {
            return Err(Error::Diverged {
                time: t,
                reason: "non-finite control input".into(),
            });
        }

        let mut wind = match dryden.as_mut() {
            Some(g) => g.step(),
            None => [0.0; 3],
        };
        for g in &cfg.gust {
            wind[g.axis.index()] += one_minus_cos(t, g);
        }
        let (force, torque) = wind_to_disturbance(wind, cfg.wind.drag, body_z_axis(&state), cfg.wind.kappa);

        let mut gamma = [f64::NAN; 4];
        let mut tau = [f64::NAN; 4];
        let mut reward = [0.0; 4];
        for (i, c) in controllers.iter().enumerate() {
            if let Some(g) = c.sni_gains() {
                gamma[i] = g.gamma;
                tau[i] = g.tau;
            }
            reward[i] = c.last_reward();
        }
        log.samples.push(Sample {
            time: t,
            reference,
            output,
            error,
            u: u.to_array(),
            v: vch,
            gamma,
            tau,
            wind,
            reward,
        });
        if snapshot_every.is_some_and(|m| k % m == 0) {
            snapshot(log, &controllers, t);
        }

        state = plant::step(&state, &u, &true_params, &Disturbance { force, torque }, dt).map_err(|e| match e {
            Error::Diverged { reason, .. } => Error::Diverged { time: t, reason },
            other => other,
        })?;
    }
    snapshot(log, &controllers, n as f64 * dt);
    for (i, c) in controllers.iter().enumerate() {
        log.returns[i] = c.discounted_returns();
    }
    Ok(())
}

/// Metrics of every channel from a complete log.
pub fn compute_metrics(cfg: &ScenarioConfig, log: &SimLog) -> Result<[ChannelMetrics; 4]> {
    let dt = cfg.run.dt;
    let duration = log.samples.len() as f64 * dt;
    let mut out = Vec::with_capacity(4);
    for ch in Channel::ALL {
        let e = log.errors(ch);
        let (from, to, size) = cfg.references.get(ch).first_segment(duration);
        let lo = ((from / dt).round() as usize).min(e.len());
        let hi = ((to / dt).round() as usize).clamp(lo, e.len());
        out.push(ChannelMetrics {
            channel: ch,
            kind: log.kinds.get(ch.index()).copied().unwrap_or(*cfg.controllers.get(ch)),
            rmse: rmse(&e),
            so: steady_offset(&e).unwrap_or(f64::NAN),
            settle: settle_time(&e[lo..hi], default_band(size), dt),
            returns: log.returns[ch.index()],
        });
    }
    Ok([out[0], out[1], out[2], out[3]])
}

fn fmt_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(',');
        }
        first = false;
        // Shortest representation that round-trips exactly.
        let _ = write!(out, "{v:?}");
    }
    out.push('\n');
}

pub fn trajectory_csv(log: &SimLog) -> String {
    let mut s = String::with_capacity(log.samples.len() * 512);
    s.push_str(TRAJECTORY_SCHEMA);
    s.push('\n');
    let names: Vec<&str> = Channel::ALL.iter().map(|c| c.name()).collect();
    let mut header = vec!["time".to_string()];
    for prefix in ["ref", "out", "err"] {
        header.extend(names.iter().map(|n| format!("{prefix}_{n}")));
    }
    header.extend((1..=4).map(|i| format!("u{i}")));
    header.extend(names.iter().map(|n| format!("v_{n}")));
    header.extend(names.iter().map(|n| format!("gamma_{n}")));
    header.extend(names.iter().map(|n| format!("tau_{n}")));
    header.extend(["wind_x", "wind_y", "wind_z"].map(String::from));
    header.extend(names.iter().map(|n| format!("reward_{n}")));
    s.push_str(&header.join(","));
    s.push('\n');
    for r in &log.samples {
        fmt_row(
            &mut s,
            std::iter::once(r.time)
                .chain(r.reference)
                .chain(r.output)
                .chain(r.error)
                .chain(r.u)
                .chain(r.v)
                .chain(r.gamma)
                .chain(r.tau)
                .chain(r.wind)
                .chain(r.reward),
        );
    }
    s
}

pub fn qtables_csv(log: &SimLog) -> String {
    let mut s = String::new();
    s.push_str(QTABLE_SCHEMA);
    s.push('\n');
    let width = log.qtables.first().map_or(0, |q| q.rows.first().map_or(0, Vec::len));
    let mut header = vec!["time".to_string(), "channel".into(), "output".into(), "rule".into()];
    header.extend((0..width).map(|a| format!("a{a}")));
    s.push_str(&header.join(","));
    s.push('\n');
    for snap in &log.qtables {
        for (rule, row) in snap.rows.iter().enumerate() {
            let _ = write!(s, "{:?},{},{},{rule},", snap.time, snap.channel.name(), snap.output);
            fmt_row(&mut s, row.iter().copied());
        }
    }
    s
}

pub fn metrics_csv(metrics: &[ChannelMetrics; 4]) -> String {
    let mut s = String::new();
    s.push_str(METRICS_SCHEMA);
    s.push('\n');
    s.push_str("channel,controller,rmse,so,settle_time,settled,return_gamma,return_tau\n");
    for m in metrics {
        let (jg, jt) = m.returns.unwrap_or((f64::NAN, f64::NAN));
        let _ = writeln!(
            s,
            "{},{},{:?},{:?},{:?},{},{:?},{:?}",
            m.channel.name(),
            m.kind.name(),
            m.rmse,
            m.so,
            m.settle.time,
            m.settle.settled,
            jg,
            jt
        );
    }
    s
}

fn write_outputs(dir: &Path, log: &SimLog, metrics: Option<&[ChannelMetrics; 4]>) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir)?;
    let files = OutputFiles {
        trajectory: dir.join("trajectory.csv"),
        metrics: dir.join("metrics.csv"),
        qtables: dir.join("qtables.csv"),
    };
    std::fs::write(&files.trajectory, trajectory_csv(log))?;
    std::fs::write(&files.qtables, qtables_csv(log))?;
    if let Some(m) = metrics {
        std::fs::write(&files.metrics, metrics_csv(m))?;
    }
    Ok(files)
}

/// Run a scenario, write CSVs when `run.output_dir` is set, and return its metrics.
///
/// On divergence the partial trajectory is still written before the error is returned.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunMetrics> {
    let outcome = simulate(cfg);
    if let Some(err) = outcome.error {
        if let Some(dir) = &cfg.run.output_dir {
            if !outcome.log.samples.is_empty() {
                write_outputs(dir, &outcome.log, None)?;
            }
        }
        return Err(err);
    }
    let channels = compute_metrics(cfg, &outcome.log)?;
    let files = match &cfg.run.output_dir {
        Some(dir) => Some(write_outputs(dir, &outcome.log, Some(&channels))?),
        None => None,
    };
    Ok(RunMetrics { channels, files })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Eta,
    Sigma,
    ExploreDuration,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::Eta => "eta",
            Self::Sigma => "sigma",
            Self::ExploreDuration => "explore_duration",
        }
    }

    pub fn apply(self, cfg: &mut ScenarioConfig, value: f64) {
        match self {
            Self::Eta => cfg.fql.eta = value,
            Self::Sigma => cfg.fql.sigma = value,
            Self::ExploreDuration => cfg.fql.explore_duration = value,
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(Self::Eta),
            "sigma" => Ok(Self::Sigma),
            "explore_duration" | "explore-duration" => Ok(Self::ExploreDuration),
            other => Err(Error::Config(format!("unknown sweep parameter '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// Mean RMSE per channel over the seeds that completed; NaN if none did.
    pub rmse: [f64; 4],
    /// Seeds whose run aborted on divergence.
    pub diverged: usize,
}

/// Config of a single sweep point.
pub fn sweep_point(cfg: &ScenarioConfig, param: SweepParam, value: f64, seed: u64) -> ScenarioConfig {
    let mut c = cfg.clone();
    param.apply(&mut c, value);
    c.run.seed = seed;
    c.run.output_dir = None;
    c
}

/// One row per value, averaging RMSE over `seeds`. Points run in parallel.
///
/// Diverged runs are counted in the row rather than failing the sweep; any
/// other error aborts it.
pub fn sweep(cfg: &ScenarioConfig, param: SweepParam, values: &[f64], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    if seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let jobs: Vec<(usize, u64)> = (0..values.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<(usize, Option<[f64; 4]>)> = jobs
        .par_iter()
        .map(|&(i, seed)| match run_scenario(&sweep_point(cfg, param, values[i], seed)) {
            Ok(m) => Ok((i, Some(m.channels.map(|c| c.rmse)))),
            Err(Error::Diverged { .. }) => Ok((i, None)),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let mut sums = vec![([0.0; 4], 0usize, 0usize); values.len()];
    for (i, r) in results {
        match r {
            Some(r) => {
                for (acc, x) in sums[i].0.iter_mut().zip(r) {
                    *acc += x;
                }
                sums[i].1 += 1;
            }
            None => sums[i].2 += 1,
        }
    }
    Ok(values
        .iter()
        .zip(sums)
        .map(|(&value, (sum, ok, diverged))| SweepRow {
            value,
            rmse: sum.map(|s| if ok > 0 { s / ok as f64 } else { f64::NAN }),
            diverged,
        })
        .collect())
}

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut s = String::new();
    s.push_str(SWEEP_SCHEMA);
    s.push('\n');
    let _ = writeln!(s, "{},rmse_roll,rmse_pitch,rmse_yaw,rmse_z,diverged", param.name());
    for r in rows {
        let _ = write!(s, "{:?},", r.value);
        for x in r.rmse {
            let _ = write!(s, "{x:?},");
        }
        let _ = writeln!(s, "{}", r.diverged);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub identical: bool,
    /// First differing trajectory line (1-based, counting header lines), if any.
    pub first_difference: Option<usize>,
}

/// Run the scenario twice in memory and compare the serialized outputs byte for byte.
///
/// A diverging scenario is compared up to the abort, including the reported reason.
pub fn replay(cfg: &ScenarioConfig) -> Result<ReplayReport> {
    cfg.validate()?;
    let render = |cfg: &ScenarioConfig| -> (String, String, String) {
        let out = simulate(cfg);
        let tail = match out.error {
            Some(e) => format!("aborted: {e:?}"),
            None => compute_metrics(cfg, &out.log).map_or_else(|e| format!("metrics: {e:?}"), |m| metrics_csv(&m)),
        };
        (trajectory_csv(&out.log), qtables_csv(&out.log), tail)
    };
    let a = render(cfg);
    let b = render(cfg);
    let first_difference = a.0.lines().zip(b.0.lines()).position(|(x, y)| x != y).map(|i| i + 1);
    Ok(ReplayReport {
        identical: a == b,
        first_difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::reference::ReferenceProfile;

    fn short(kind: ControllerKind) -> ScenarioConfig {
        let mut c = ScenarioConfig::nominal().with_controller(kind);
        c.run.duration = 6.0;
        c
    }

    #[test]
    fn zero_references_stay_at_rest() {
        for kind in [
            ControllerKind::Pid,
            ControllerKind::Sni,
            ControllerKind::FuzzySni,
            ControllerKind::FuzzyQlSni,
        ] {
            let mut c = short(kind);
            c.references = crate::harness::config::PerChannel::splat(ReferenceProfile::zero());
            let m = run_scenario(&c).unwrap();
            for ch in &m.channels {
                assert!(ch.rmse < 1e-12, "{kind:?} {:?} {}", ch.channel, ch.rmse);
            }
        }
    }

    #[test]
    fn csv_shape() {
        let c = short(ControllerKind::FuzzyQlSni);
        let out = simulate(&c);
        assert!(out.error.is_none());
        let csv = trajectory_csv(&out.log);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TRAJECTORY_SCHEMA));
        assert_eq!(lines.next().unwrap().split(',').count(), 36);
        assert_eq!(lines.count(), c.steps());
        let q = qtables_csv(&out.log);
        // snapshots at 0..=5 s plus the final one, 4 channels x 2 agents x 5 rules
        assert_eq!(q.lines().count(), 2 + 7 * 40);
    }

    #[test]
    fn divergence_reports_time_and_flushes() {
        let dir = tempfile::tempdir().unwrap();
        // proportional gain far beyond what the sampled loop tolerates
        let mut c = short(ControllerKind::Pid);
        c.pid.roll.kp = 1e4;
        c.references.roll = ReferenceProfile::step(0.1, 0.5);
        c.run.output_dir = Some(dir.path().to_path_buf());
        match run_scenario(&c) {
            Err(Error::Diverged { time, .. }) => assert!((0.5..6.0).contains(&time)),
            other => panic!("expected divergence, got {other:?}"),
        }
        let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        assert!(traj.lines().count() > 50);
    }

    #[test]
    fn sweep_rows() {
        let c = short(ControllerKind::FuzzyQlSni);
        let rows = sweep(&c, SweepParam::Eta, &[0.05, 0.1], &[1, 2]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].value, 0.1);
        assert!(rows.iter().all(|r| r.rmse.iter().all(|x| x.is_finite() && *x >= 0.0)));
        assert_eq!(sweep_csv(SweepParam::Eta, &rows).lines().count(), 4);
    }
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::fault::{schedule_faults, FaultError, FaultLogEntry, FaultMode, FaultSpec, Injector};
use crate::latency::{stats, CouplingMode, LatencyModel, LatencySample, LatencyStats};
use crate::metrics::{
    classify_mission, orientation_error, orientation_error_raw, position_error, DetectionPair, MissionGoal,
    MissionOutcome, Pose2, TraceStep,
};
use crate::pipeline::{manifest, ControlCommand, Gains, Pipeline, PERCEPTION_EVERY};
use crate::rng::{stream_rng, Stream};
use crate::scenario::{FaultDecl, FlipTarget, ResolvedConfig};
use crate::sensor::{
    apply_temporal_fault, perturb_extrinsics, sample_frame, to_ego_frame, Extrinsics, SensorConfig, SpatialFaultSpec,
    TemporalFaultSpec,
};
use crate::world::{
    step_behaviors, step_vehicle, wrap_pi, EventKind, RoadModel, WorldState, ACCEL_LIMIT, DT, STEER_LIMIT,
};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialOptions {
    pub gains: Gains,
    pub sensor: SensorConfig,
    pub latency: LatencyModel,
    /// Replaces the scenario's compute faults when set.
    pub fault_override: Option<Vec<FaultSpec>>,
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub config_id: usize,
    pub trial_index: u64,
    pub seed: u64,
    pub outcome: MissionOutcome,
    pub e_p: Option<f64>,
    pub e_theta: Option<f64>,
    pub e_theta_raw: Option<f64>,
    pub latency: Option<LatencyStats>,
    pub fault_log: Vec<FaultLogEntry>,
    pub ticks: u64,
    pub frames: u64,
    pub frames_dropped: u64,
    /// Actuator commands that were non-finite or outside the vehicle limits.
    pub commands_clamped: u64,
    pub final_progress: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tick: u64,
    pub time: f64,
    pub ego_x: f64,
    pub ego_y: f64,
    pub ego_yaw: f64,
    pub ego_speed: f64,
    pub progress: f64,
    pub lateral: f64,
    pub steer: f64,
    pub accel: f64,
    pub perception_ran: bool,
    pub frame_dropped: bool,
    pub n_detections: usize,
    pub n_tracks: usize,
    pub plan_valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub record: TrialRecord,
    pub latency_samples: Vec<LatencySample>,
    pub trace: Vec<TraceRow>,
    /// Per tick, the (x, y, yaw, speed) of every agent. Filled only when tracing.
    pub agent_trace: Vec<Vec<[f64; 4]>>,
    pub events: Vec<crate::world::WorldEvent>,
}

impl TrialRun {
    /// CSV of the trace, one row per tick.
    pub fn trace_csv(&self, agent_names: &[String]) -> String {
        let mut out = String::from(
            "tick,time,ego_x,ego_y,ego_yaw,ego_speed,progress,lateral,steer,accel,perception_ran,frame_dropped,n_detections,n_tracks,plan_valid",
        );
        for n in agent_names {
            let _ = write!(out, ",{n}_x,{n}_y,{n}_yaw,{n}_speed");
        }
        out.push('\n');
        for (i, r) in self.trace.iter().enumerate() {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.tick,
                r.time,
                r.ego_x,
                r.ego_y,
                r.ego_yaw,
                r.ego_speed,
                r.progress,
                r.lateral,
                r.steer,
                r.accel,
                r.perception_ran as u8,
                r.frame_dropped as u8,
                r.n_detections,
                r.n_tracks,
                r.plan_valid as u8
            );
            if let Some(agents) = self.agent_trace.get(i) {
                for a in agents {
                    let _ = write!(out, ",{},{},{},{}", a[0], a[1], a[2], a[3]);
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn latency_csv(&self) -> String {
        let mut out = String::from("tick,n_obj,perception,planning,control,e2e,violated\n");
        for s in &self.latency_samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.tick, s.n_obj, s.perception, s.planning, s.control, s.e2e, s.violated as u8
            );
        }
        out
    }
}

struct SensorFaults {
    temporal: TemporalFaultSpec,
    spatial: SpatialFaultSpec,
    position_sigma: f64,
    yaw_sigma: f64,
}

fn sensor_faults(config: &ResolvedConfig) -> SensorFaults {
    let mut out = SensorFaults {
        temporal: TemporalFaultSpec::default(),
        spatial: SpatialFaultSpec::default(),
        position_sigma: 0.0,
        yaw_sigma: 0.0,
    };
    for f in &config.scenario.faults {
        match f {
            FaultDecl::SensorDrop { rate, delay_sigma } => {
                out.temporal = TemporalFaultSpec { drop_rate: rate.value(), delay_sigma: delay_sigma.value() };
            }
            FaultDecl::SensorShift { x, y, z, yaw, pitch, roll, translation_sigma, rotation_sigma } => {
                let s = &mut out.spatial;
                for (acc, v) in s.translation.iter_mut().zip([x, y, z]) {
                    *acc += v.value();
                }
                for (acc, v) in s.rotation.iter_mut().zip([yaw, pitch, roll]) {
                    *acc += v.value();
                }
                s.translation_sigma = s.translation_sigma.hypot(translation_sigma.value());
                s.rotation_sigma = s.rotation_sigma.hypot(rotation_sigma.value());
            }
            FaultDecl::SensorNoise { position_sigma, yaw_sigma } => {
                out.position_sigma = out.position_sigma.hypot(position_sigma.value());
                out.yaw_sigma = out.yaw_sigma.hypot(yaw_sigma.value());
            }
            FaultDecl::ComputeBitflip { .. } | FaultDecl::ComputeStuck { .. } => {}
        }
    }
    out
}

/// Expands the scenario's compute-fault declarations into concrete faults.
/// Random flips draw from the fault stream at sequence = declaration index.
pub fn compute_faults(config: &ResolvedConfig, seed: u64) -> Result<Vec<FaultSpec>, FaultError> {
    let mut out = Vec::new();
    for (i, f) in config.scenario.faults.iter().enumerate() {
        match f {
            FaultDecl::ComputeBitflip { node, target: FlipTarget::Random { count, tick_lo, tick_hi } } => {
                let mut rng = stream_rng(seed, Stream::Faults, i as u64);
                out.extend(schedule_faults(
                    node.value(),
                    count.value(),
                    (tick_lo.value(), tick_hi.value()),
                    &mut rng,
                    manifest(),
                )?);
            }
            FaultDecl::ComputeBitflip { node, target: FlipTarget::Fixed { index, bit, tick } } => out.push(FaultSpec {
                node: node.value(),
                state_index: index.value(),
                bit: bit.value(),
                trigger_tick: tick.value(),
                mode: FaultMode::Flip,
            }),
            FaultDecl::ComputeStuck { node, index, value, tick } => out.push(FaultSpec {
                node: node.value(),
                state_index: index.value(),
                bit: 0,
                trigger_tick: tick.value(),
                mode: FaultMode::Stuck { value: value.value() },
            }),
            _ => {}
        }
    }
    Ok(out)
}

fn sanitize(value: f64, limit: f64, clamped: &mut u64) -> f64 {
    if !value.is_finite() {
        *clamped += 1;
        return 0.0;
    }
    if value.abs() > limit {
        *clamped += 1;
    }
    value.clamp(-limit, limit)
}

fn empty_record(config_id: usize, trial_index: u64, seed: u64) -> TrialRecord {
    TrialRecord {
        config_id,
        trial_index,
        seed,
        outcome: MissionOutcome::aborted(0.0),
        e_p: None,
        e_theta: None,
        e_theta_raw: None,
        latency: None,
        fault_log: Vec::new(),
        ticks: 0,
        frames: 0,
        frames_dropped: 0,
        commands_clamped: 0,
        final_progress: 0.0,
        error: None,
    }
}

fn aborted(config_id: usize, trial_index: u64, seed: u64, error: String) -> TrialRun {
    let mut record = empty_record(config_id, trial_index, seed);
    record.error = Some(error);
    TrialRun { record, latency_samples: Vec::new(), trace: Vec::new(), agent_trace: Vec::new(), events: Vec::new() }
}

/// Runs one closed-loop trial at `DT` until the first terminal event, the
/// mission target, or the timeout. A panic inside the trial yields an
/// aborted record carrying the panic message.
pub fn run_trial(
    config: &ResolvedConfig,
    config_id: usize,
    trial_index: u64,
    seed: u64,
    opts: &TrialOptions,
) -> TrialRun {
    let body = std::panic::AssertUnwindSafe(|| simulate(config, config_id, trial_index, seed, opts));
    std::panic::catch_unwind(body).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "trial panicked".into());
        aborted(config_id, trial_index, seed, format!("panic: {msg}"))
    })
}

fn simulate(config: &ResolvedConfig, config_id: usize, trial_index: u64, seed: u64, opts: &TrialOptions) -> TrialRun {
    let spec = &config.scenario;
    let road = match RoadModel::from_decl(&spec.road) {
        Ok(r) => r,
        Err(e) => return aborted(config_id, trial_index, seed, e.to_string()),
    };
    let sf = sensor_faults(config);
    let sensor = SensorConfig { position_noise_sigma: sf.position_sigma, yaw_noise_sigma: sf.yaw_sigma, ..opts.sensor };
    let nominal = Extrinsics::identity();
    let actual = perturb_extrinsics(&nominal, &sf.spatial, &mut stream_rng(seed, Stream::Spatial, 0));

    let faults = match &opts.fault_override {
        Some(f) => Ok(f.clone()),
        None => compute_faults(config, seed),
    };
    let mut world = WorldState::from_scenario(spec, &road);
    let mut pipeline = Pipeline::new(&opts.gains, road.clone(), spec.mission.kind, &world.ego, &nominal, DT);
    let mut injector = match faults.and_then(|f| Injector::new(f, &pipeline.banks)) {
        Ok(i) => i,
        Err(e) => return aborted(config_id, trial_index, seed, e.to_string()),
    };

    let goal = MissionGoal { target_s: spec.mission.target_s.value(), timeout: spec.mission.timeout.value() };
    let max_ticks = (goal.timeout / DT).round() as u64;
    let mut record = empty_record(config_id, trial_index, seed);
    let mut steps = Vec::with_capacity(max_ticks as usize);
    let mut samples = Vec::new();
    let mut pairs = Vec::new();
    let mut trace = Vec::new();
    let mut agent_trace = Vec::new();
    let mut prev_cmd = ControlCommand { steer: 0.0, accel: 0.0, tick: 0 };

    for tick in 0..max_ticks {
        let frame = if tick % PERCEPTION_EVERY == 0 {
            let seq = tick / PERCEPTION_EVERY;
            let raw = sample_frame(&world, &actual, &sensor, seq, &mut stream_rng(seed, Stream::Noise, seq));
            let frame = apply_temporal_fault(&raw, &sf.temporal, &sensor, &mut stream_rng(seed, Stream::Drop, seq));
            record.frames += 1;
            if frame.dropped {
                record.frames_dropped += 1;
            }
            if let Ok(dets) = to_ego_frame(&frame, &nominal) {
                collect_pairs(&world, &dets, &mut pairs);
            }
            Some(frame)
        } else {
            None
        };

        let out = pipeline.tick(tick, frame.as_ref(), &world.ego, &mut injector);
        let mut cmd = out.command;
        if out.perception_ran {
            let seq = tick / PERCEPTION_EVERY;
            let s = opts.latency.sample_cycle(tick, out.n_tracks, &mut stream_rng(seed, Stream::Latency, seq));
            if s.violated && opts.latency.coupling == CouplingMode::DelayCommand {
                cmd = prev_cmd;
            }
            samples.push(s);
        }
        prev_cmd = out.command;

        let steer = sanitize(cmd.steer, STEER_LIMIT, &mut record.commands_clamped);
        let accel = sanitize(cmd.accel, ACCEL_LIMIT, &mut record.commands_clamped);
        world.ego = step_vehicle(&world.ego, steer, accel, DT);
        world = step_behaviors(&world, &road, DT);
        let events = world.record_events(&road);
        let f = road.project(world.ego.x, world.ego.y);
        steps.push(TraceStep {
            time: world.time,
            progress: f.s,
            collision: events.iter().any(|e| matches!(e.kind, EventKind::Collision { .. })),
            off_lane: events.iter().any(|e| e.kind == EventKind::OffLane),
        });
        record.ticks = tick + 1;
        record.final_progress = f.s;
        if opts.trace {
            let e = &world.ego;
            trace.push(TraceRow {
                tick,
                time: world.time,
                ego_x: e.x,
                ego_y: e.y,
                ego_yaw: e.yaw,
                ego_speed: e.speed,
                progress: f.s,
                lateral: f.d,
                steer,
                accel,
                perception_ran: out.perception_ran,
                frame_dropped: out.frame_dropped,
                n_detections: out.n_detections,
                n_tracks: out.n_tracks,
                plan_valid: pipeline.banks.node(crate::pipeline::NodeId::Planning)[crate::pipeline::plan::VALID] == 1.0,
            });
            agent_trace.push(world.agents.iter().map(|a| [a.state.x, a.state.y, a.state.yaw, a.state.speed]).collect());
        }
        if !events.is_empty() || f.s >= goal.target_s {
            break;
        }
    }

    record.outcome = classify_mission(&steps, &goal);
    record.e_p = position_error(&pairs).ok();
    record.e_theta = orientation_error(&pairs).ok();
    record.e_theta_raw = orientation_error_raw(&pairs).ok();
    let e2e: Vec<f64> = samples.iter().map(|s| s.e2e).collect();
    record.latency = stats(&e2e, opts.latency.deadline_ms).ok();
    record.fault_log = injector.log;
    TrialRun { record, latency_samples: samples, trace, agent_trace, events: world.events }
}

/// Pairs each surviving detection with its object's true pose, both in the
/// ego frame.
fn collect_pairs(world: &WorldState, dets: &[crate::sensor::Detection], pairs: &mut Vec<DetectionPair>) {
    let ego = &world.ego;
    let (s, c) = ego.yaw.sin_cos();
    for d in dets {
        let Some(agent) = world.agents.iter().find(|a| a.id == d.object_id) else { continue };
        let (dx, dy) = (agent.state.x - ego.x, agent.state.y - ego.y);
        let gt = Pose2::new(c * dx + s * dy, -s * dx + c * dy, wrap_pi(agent.state.yaw - ego.yaw));
        pairs.push(DetectionPair { detected: Pose2::new(d.x, d.y, wrap_pi(d.yaw)), ground_truth: gt });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Param, ScenarioSpec};

    #[test]
    fn panicking_trial_is_recorded_as_aborted() {
        let mut spec = ScenarioSpec::minimal("p");
        spec.ego.speed = Param::Var("v".into());
        let config = ResolvedConfig { scenario: spec, binding: Vec::new() };
        let run = run_trial(&config, 2, 5, 9, &TrialOptions::default());
        assert_eq!(run.record.outcome.kind, crate::metrics::OutcomeKind::Aborted);
        assert_eq!((run.record.config_id, run.record.trial_index, run.record.seed), (2, 5, 9));
        assert!(run.record.error.as_deref().unwrap().starts_with("panic: "));
    }

    #[test]
    fn sanitize_counts_replacements() {
        let mut n = 0;
        assert_eq!(sanitize(f64::NAN, 0.6, &mut n), 0.0);
        assert_eq!(sanitize(1.0, 0.6, &mut n), 0.6);
        assert_eq!(sanitize(0.1, 0.6, &mut n), 0.1);
        assert_eq!(n, 2);
    }
}

//! Single-trial stepping for the interactive, ghost and isolated setups.
//!
//! Each step both agents first sense the partner's state as of the start of
//! the step (previous-step emission and position), so the two-agent update
//! is symmetric and order-independent. The signal then flows through the
//! controller (sensors, one CTRNN Euler step, actuators) and the body moves.
//! A collision detected at step start exchanges the bodies' velocity vectors
//! for that step's translation; headings stay motor-driven.

use super::{
    AgentTrace, ConditionKind, ExperimentError, Playback, TrialSpec, TrialTrace,
};
use crate::genome::AgentParams;
use crate::neural::{
    actuator_outputs, ctrnn_step, motors_to_velocities, neuron_outputs, sensor_output,
    NeuralState, EMITTER, MOTOR_LEFT, MOTOR_RIGHT, NEURONS, SENSORS,
};
use crate::physics::{self, BodyPose, PlateauReference, Vec2};

/// Initial poses for one trial: the live agent at the origin, the partner at
/// the trial's distance and bearing, both with the trial's initial heading.
pub fn place_agents(spec: &TrialSpec) -> (BodyPose, BodyPose) {
    let live = BodyPose::at(Vec2::ZERO, spec.initial_heading);
    let partner = BodyPose::at(
        Vec2::polar(spec.initial_distance, spec.relative_angle),
        spec.initial_heading,
    );
    (live, partner)
}

/// Controller outputs of one step.
struct StepCommand {
    outputs: [f64; NEURONS],
    emission: f64,
    linear_v: f64,
    angular_v: f64,
}

/// One live agent: parameters plus evolving body and controller state.
struct AgentRunner {
    params: AgentParams,
    pose: BodyPose,
    neural: NeuralState,
    last_emission: f64,
}

impl AgentRunner {
    fn new(params: &AgentParams, pose: BodyPose) -> Self {
        AgentRunner {
            params: *params,
            pose,
            neural: NeuralState::default(),
            last_emission: 0.0,
        }
    }

    /// Sensor inputs from a signal of `strength` emitted at `source`.
    fn sense(&self, source: Vec2, strength: f64, plateau: PlateauReference) -> [f64; SENSORS] {
        let sensors = physics::sensor_positions(&self.pose);
        [
            physics::sensory_input_with(plateau, source, strength, sensors.left, &self.pose),
            physics::sensory_input_with(plateau, source, strength, sensors.right, &self.pose),
        ]
    }

    /// Forward pass: sensor nodes, CTRNN Euler step, actuator nodes.
    fn drive(&mut self, inputs: [f64; SENSORS], dt: f64) -> StepCommand {
        let sensor_out = [
            sensor_output(inputs[0], &self.params.sensor),
            sensor_output(inputs[1], &self.params.sensor),
        ];
        self.neural = ctrnn_step(&self.neural, sensor_out, &self.params.ctrnn, dt);
        let outputs = neuron_outputs(&self.neural, &self.params.ctrnn);
        let actuators = actuator_outputs(outputs, &self.params.actuator);
        let (linear_v, angular_v) = motors_to_velocities(
            actuators[MOTOR_LEFT],
            actuators[MOTOR_RIGHT],
            self.pose.radius,
        );
        StepCommand {
            outputs,
            emission: actuators[EMITTER],
            linear_v,
            angular_v,
        }
    }

    fn record(&mut self, trace: &mut AgentTrace, command: &StepCommand) {
        trace.positions.push(self.pose.center);
        trace.headings.push(self.pose.heading);
        trace.velocities.push(self.pose.velocity);
        trace.neuron_outputs.push(command.outputs);
        trace.emissions.push(command.emission);
        self.last_emission = command.emission;
    }

    fn check_finite(&self, step: usize, agent: usize) -> Result<(), ExperimentError> {
        if self.neural.is_finite() && self.pose.center.is_finite() {
            Ok(())
        } else {
            Err(ExperimentError::NonFinite { step, agent })
        }
    }
}

/// Run one trial of two mutually coupled agents.
pub fn run_trial_interactive(
    first: &AgentParams,
    second: &AgentParams,
    spec: &TrialSpec,
    plateau: PlateauReference,
) -> Result<TrialTrace, ExperimentError> {
    let (pose_a, pose_b) = place_agents(spec);
    let mut a = AgentRunner::new(first, pose_a);
    let mut b = AgentRunner::new(second, pose_b);
    let mut trace_a = AgentTrace::with_capacity(spec.duration_steps, false);
    let mut trace_b = AgentTrace::with_capacity(spec.duration_steps, false);

    for step in 0..spec.duration_steps {
        let snap_a = (a.pose, a.last_emission);
        let snap_b = (b.pose, b.last_emission);

        let inputs_a = a.sense(snap_b.0.center, snap_b.1, plateau);
        let inputs_b = b.sense(snap_a.0.center, snap_a.1, plateau);
        let cmd_a = a.drive(inputs_a, spec.dt);
        let cmd_b = b.drive(inputs_b, spec.dt);

        if physics::overlapping(&snap_a.0, &snap_b.0) {
            let (hit_a, hit_b) = physics::resolve_collision(&snap_a.0, &snap_b.0);
            a.pose = physics::coast(&hit_a, cmd_a.angular_v, spec.dt);
            b.pose = physics::coast(&hit_b, cmd_b.angular_v, spec.dt);
        } else {
            a.pose = physics::step_motion(&snap_a.0, cmd_a.linear_v, cmd_a.angular_v, spec.dt);
            b.pose = physics::step_motion(&snap_b.0, cmd_b.linear_v, cmd_b.angular_v, spec.dt);
        }

        a.record(&mut trace_a, &cmd_a);
        b.record(&mut trace_b, &cmd_b);
        a.check_finite(step, 0)?;
        b.check_finite(step, 1)?;
    }

    Ok(TrialTrace {
        condition: ConditionKind::Interactive,
        spec: *spec,
        agents: vec![trace_a, trace_b],
    })
}

/// Run one trial of a live agent against a replayed ghost.
///
/// The ghost follows the recording verbatim and never senses. When the live
/// body overlaps the ghost at step start, the live agent takes the ghost's
/// recorded velocity for that step's translation (the recording itself is
/// never altered). Replayed with the original recording's trial settings and
/// angle this regenerates the recorded partner's trajectory bit-exactly.
pub fn run_trial_ghost(
    live_params: &AgentParams,
    ghost: &Playback,
    trial_index: usize,
    spec: &TrialSpec,
    plateau: PlateauReference,
) -> Result<TrialTrace, ExperimentError> {
    let recording = ghost
        .trials
        .get(trial_index)
        .ok_or(ExperimentError::PlaybackTrialCount {
            got: ghost.trials.len(),
            expected: trial_index + 1,
        })?;
    for length in [
        recording.positions.len(),
        recording.headings.len(),
        recording.velocities.len(),
        recording.emissions.len(),
    ] {
        if length != spec.duration_steps {
            return Err(ExperimentError::PlaybackLength {
                trial: trial_index,
                got: length,
                expected: spec.duration_steps,
            });
        }
    }

    // Live agent placed so the ghost's recorded start sits at the trial's
    // bearing and distance. With the recording's own angle this reproduces
    // the original placement exactly.
    let live_center =
        recording.initial_position - Vec2::polar(spec.initial_distance, spec.relative_angle);
    let mut live = AgentRunner::new(live_params, BodyPose::at(live_center, spec.initial_heading));
    let mut trace_live = AgentTrace::with_capacity(spec.duration_steps, false);

    for step in 0..spec.duration_steps {
        // Ghost state as of the start of this step.
        let (ghost_center, ghost_emission, ghost_velocity) = if step == 0 {
            (recording.initial_position, 0.0, Vec2::ZERO)
        } else {
            (
                recording.positions[step - 1],
                recording.emissions[step - 1],
                recording.velocities[step - 1],
            )
        };

        let inputs = live.sense(ghost_center, ghost_emission, plateau);
        let cmd = live.drive(inputs, spec.dt);

        let ghost_pose = BodyPose::at(ghost_center, 0.0);
        if physics::overlapping(&live.pose, &ghost_pose) {
            let mut exchanged = live.pose;
            exchanged.velocity = ghost_velocity;
            live.pose = physics::coast(&exchanged, cmd.angular_v, spec.dt);
        } else {
            live.pose = physics::step_motion(&live.pose, cmd.linear_v, cmd.angular_v, spec.dt);
        }

        live.record(&mut trace_live, &cmd);
        live.check_finite(step, 0)?;
    }

    let trace_ghost = AgentTrace {
        is_ghost: true,
        positions: recording.positions.clone(),
        headings: recording.headings.clone(),
        velocities: recording.velocities.clone(),
        neuron_outputs: Vec::new(),
        emissions: recording.emissions.clone(),
    };

    Ok(TrialTrace {
        condition: ConditionKind::GhostTest,
        spec: *spec,
        agents: vec![trace_live, trace_ghost],
    })
}

/// Run one trial of a single agent receiving zero sensory input. The sensor
/// nodes still fire at their bias point.
pub fn run_trial_isolated(
    params: &AgentParams,
    spec: &TrialSpec,
) -> Result<TrialTrace, ExperimentError> {
    let (pose, _) = place_agents(spec);
    let mut agent = AgentRunner::new(params, pose);
    let mut trace = AgentTrace::with_capacity(spec.duration_steps, false);

    for step in 0..spec.duration_steps {
        let cmd = agent.drive([0.0; SENSORS], spec.dt);
        agent.pose = physics::step_motion(&agent.pose, cmd.linear_v, cmd.angular_v, spec.dt);
        agent.record(&mut trace, &cmd);
        agent.check_finite(step, 0)?;
    }

    Ok(TrialTrace {
        condition: ConditionKind::Isolated,
        spec: *spec,
        agents: vec![trace],
    })
}

//! Three-layer controller: sigmoidal sensor nodes feeding a small fully
//! recurrent CTRNN, whose outputs drive sigmoidal actuator nodes (two
//! motors and one signal emitter).

use serde::{Deserialize, Serialize};

/// Internal neurons in the recurrent layer (compile-time; the gene layout
/// and histogram dimensionality derive from it).
pub const NEURONS: usize = 3;
/// Acoustic sensors per agent.
pub const SENSORS: usize = 2;
/// Actuator nodes: left motor, right motor, emitter.
pub const ACTUATORS: usize = 3;

pub const MOTOR_LEFT: usize = 0;
pub const MOTOR_RIGHT: usize = 1;
pub const EMITTER: usize = 2;

/// Logistic function 1/(1+e^-x).
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Gain and bias shared by both sensor nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorLayerParams {
    pub gain: f64,
    pub bias: f64,
}

/// Recurrent layer parameters. All neurons share one time constant and one
/// bias; `weights[i][j]` connects neuron `j` into neuron `i`, and
/// `sensor_weights[i][s]` connects sensor `s` into neuron `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtrnnParams {
    pub time_constant: f64,
    pub bias: f64,
    pub weights: [[f64; NEURONS]; NEURONS],
    pub sensor_weights: [[f64; SENSORS]; NEURONS],
}

/// Actuator layer parameters; `weights[a][n]` connects neuron `n` into
/// actuator `a`. All actuator nodes share one gain and one bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorParams {
    pub gain: f64,
    pub bias: f64,
    pub weights: [[f64; NEURONS]; ACTUATORS],
}

/// Internal neuron potentials (unbounded reals).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NeuralState {
    pub potentials: [f64; NEURONS],
}

impl NeuralState {
    pub fn is_finite(&self) -> bool {
        self.potentials.iter().all(|v| v.is_finite())
    }
}

/// Sensor node output: gain-scaled sigmoid of input plus bias.
pub fn sensor_output(input: f64, p: &SensorLayerParams) -> f64 {
    p.gain * sigmoid(input + p.bias)
}

/// One explicit Euler step of the leaky-integrator dynamics. The drive is
/// evaluated on the pre-step state for every neuron (synchronous update).
pub fn ctrnn_step(
    state: &NeuralState,
    sensor_outputs: [f64; SENSORS],
    p: &CtrnnParams,
    dt: f64,
) -> NeuralState {
    let mut outputs = [0.0; NEURONS];
    for (out, potential) in outputs.iter_mut().zip(state.potentials) {
        *out = sigmoid(potential + p.bias);
    }
    let mut next = *state;
    for i in 0..NEURONS {
        let mut drive = -state.potentials[i];
        for (weight, output) in p.weights[i].iter().zip(outputs) {
            drive += weight * output;
        }
        for (weight, output) in p.sensor_weights[i].iter().zip(sensor_outputs) {
            drive += weight * output;
        }
        next.potentials[i] += dt / p.time_constant * drive;
    }
    next
}

/// Sigmoidal firing rate of each neuron, strictly inside (0, 1).
pub fn neuron_outputs(state: &NeuralState, p: &CtrnnParams) -> [f64; NEURONS] {
    let mut out = [0.0; NEURONS];
    for (o, potential) in out.iter_mut().zip(state.potentials) {
        *o = sigmoid(potential + p.bias);
    }
    out
}

/// Actuator node outputs ordered (left motor, right motor, emitter).
pub fn actuator_outputs(neuron_out: [f64; NEURONS], p: &ActuatorParams) -> [f64; ACTUATORS] {
    let mut out = [0.0; ACTUATORS];
    for (a, row) in p.weights.iter().enumerate() {
        let mut sum = p.bias;
        for (w, o) in row.iter().zip(neuron_out) {
            sum += w * o;
        }
        out[a] = p.gain * sigmoid(sum);
    }
    out
}

/// Differential-drive mapping: linear speed is the motor average, angular
/// speed the right-minus-left difference over the body radius (positive =
/// counterclockwise).
pub fn motors_to_velocities(m_left: f64, m_right: f64, radius: f64) -> (f64, f64) {
    ((m_left + m_right) / 2.0, (m_right - m_left) / radius)
}

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{ActuatorCommand, Controller, ControllerFault, SensorReading};

/// ambient, motion, signal, current light.
pub const N_INPUTS: usize = 4;
/// light, broadcast, listen.
pub const N_OUTPUTS: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("genome has {actual} genes, network needs {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("genome contains a non-finite gene at index {0}")]
    NonFinite(usize),
    #[error("unsupported network document: {0}")]
    Unsupported(String),
}

/// Fully connected 4-input, one-hidden-layer, 3-output network with bias
/// units and logistic activations on both layers.
///
/// Gene layout: for each hidden unit its 4 input weights then its bias;
/// after that, for each output unit its `n_hidden` weights then its bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub n_hidden: usize,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self { n_hidden: 6 }
    }
}

impl NetworkSpec {
    pub fn genome_length(&self) -> usize {
        (N_INPUTS + 1) * self.n_hidden + (self.n_hidden + 1) * N_OUTPUTS
    }

    pub fn check(&self, genes: &[f64]) -> Result<(), NetworkError> {
        if genes.len() != self.genome_length() {
            return Err(NetworkError::LengthMismatch {
                expected: self.genome_length(),
                actual: genes.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub genes: Vec<f64>,
    pub fitness: Option<f64>,
}

impl Genome {
    pub fn new(genes: Vec<f64>) -> Self {
        Self {
            genes,
            fitness: None,
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn network_inputs(s: &SensorReading) -> [f64; N_INPUTS] {
    [
        s.ambient,
        if s.motion { 1.0 } else { 0.0 },
        s.signal,
        s.current_light,
    ]
}

/// Raw output activations. Callers must have checked the gene count.
pub fn activate(spec: &NetworkSpec, genes: &[f64], inputs: &[f64; N_INPUTS]) -> [f64; N_OUTPUTS] {
    let h = spec.n_hidden;
    let mut hidden = Vec::with_capacity(h);
    for unit in genes[..(N_INPUTS + 1) * h].chunks_exact(N_INPUTS + 1) {
        let sum: f64 = unit[..N_INPUTS].iter().zip(inputs).map(|(w, x)| w * x).sum();
        hidden.push(sigmoid(sum + unit[N_INPUTS]));
    }
    let mut out = [0.0; N_OUTPUTS];
    for (k, unit) in genes[(N_INPUTS + 1) * h..].chunks_exact(h + 1).enumerate() {
        let sum: f64 = unit[..h].iter().zip(&hidden).map(|(w, x)| w * x).sum();
        out[k] = sigmoid(sum + unit[h]);
    }
    out
}

pub fn forward(spec: &NetworkSpec, genome: &Genome, s: &SensorReading) -> Result<ActuatorCommand, NetworkError> {
    spec.check(&genome.genes)?;
    let [light, broadcast, listen] = activate(spec, &genome.genes, &network_inputs(s));
    Ok(ActuatorCommand {
        light,
        listen: listen >= 0.5,
        broadcast,
    })
}

/// Stateless neural controller; all poles may share one genome.
#[derive(Debug, Clone)]
pub struct NeuralController {
    spec: NetworkSpec,
    genome: Arc<Genome>,
}

impl NeuralController {
    pub fn new(spec: NetworkSpec, genome: Arc<Genome>) -> Result<Self, NetworkError> {
        spec.check(&genome.genes)?;
        Ok(Self { spec, genome })
    }
}

impl Controller for NeuralController {
    fn decide(&mut self, reading: &SensorReading) -> Result<ActuatorCommand, ControllerFault> {
        forward(&self.spec, &self.genome, reading).map_err(|e| ControllerFault(e.to_string()))
    }
}

/// On-disk form of a genome: the network shape followed by the flat weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenomeDocument {
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub n_outputs: usize,
    pub activation: String,
    pub genes: Vec<f64>,
}

impl GenomeDocument {
    pub fn new(spec: &NetworkSpec, genes: &[f64]) -> Self {
        Self {
            n_inputs: N_INPUTS,
            n_hidden: spec.n_hidden,
            n_outputs: N_OUTPUTS,
            activation: "sigmoid".into(),
            genes: genes.to_vec(),
        }
    }

    pub fn into_parts(self) -> Result<(NetworkSpec, Genome), NetworkError> {
        if self.n_inputs != N_INPUTS || self.n_outputs != N_OUTPUTS || self.activation != "sigmoid" {
            return Err(NetworkError::Unsupported(format!(
                "{}-{}-{} {} network",
                self.n_inputs, self.n_hidden, self.n_outputs, self.activation
            )));
        }
        if self.n_hidden == 0 {
            return Err(NetworkError::Unsupported("zero hidden units".into()));
        }
        let spec = NetworkSpec {
            n_hidden: self.n_hidden,
        };
        spec.check(&self.genes)?;
        if let Some(i) = self.genes.iter().position(|g| !g.is_finite()) {
            return Err(NetworkError::NonFinite(i));
        }
        Ok((spec, Genome::new(self.genes)))
    }
}

//! K-node tandem of M/G/1 queues with Bernoulli feedback.
//!
//! Node `i` receives Poisson external arrivals at rate `lambda_i`. After service
//! a customer leaves with probability `p_i`, otherwise joins node `i + 1`
//! (node `K` feeds node 1). Service at node `i` lasts
//! `U * (1/R_i + |theta_i - target_i|^2)` with `U ~ Uniform(0, 1)`, drawn when
//! service starts.
//!
//! One observation ends at the next service completion anywhere in the
//! network. Its cost is the summed system sojourn time (`clock - entry`) of
//! every customer present just before the completing customer departs.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::optimizer::{BoxConstraint, Simulator};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QueueNetworkConfig {
    /// External Poisson arrival rate per node.
    pub lambda: Vec<f64>,
    /// Probability of leaving the system after service, per node.
    pub p_leave: Vec<f64>,
    /// Service constants `R_i > 0`.
    pub service_const: Vec<f64>,
    /// Parameter dimension of each node.
    pub dims: Vec<usize>,
    /// Concatenated optimal parameter.
    pub theta_target: Vec<f64>,
}

impl QueueNetworkConfig {
    pub fn nodes(&self) -> usize {
        self.lambda.len()
    }

    /// Total parameter dimension `sum N_i`.
    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.nodes();
        if k == 0 {
            return Err(Error::Config("network needs at least one node".into()));
        }
        for (name, len) in [
            ("p_leave", self.p_leave.len()),
            ("service_const", self.service_const.len()),
            ("dims", self.dims.len()),
        ] {
            if len != k {
                return Err(Error::Config(format!(
                    "{name} has {len} entries, expected {k}"
                )));
            }
        }
        if self.lambda.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::Config(
                "arrival rates must be finite and non-negative".into(),
            ));
        }
        if !self.lambda.iter().any(|l| *l > 0.0) {
            return Err(Error::Config(
                "at least one arrival rate must be positive".into(),
            ));
        }
        if self.p_leave.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config(
                "departure probabilities must lie in [0, 1]".into(),
            ));
        }
        if self
            .service_const
            .iter()
            .any(|r| !(*r > 0.0) || !r.is_finite())
        {
            return Err(Error::Config("service constants must be positive".into()));
        }
        if self.dims.contains(&0) {
            return Err(Error::Config(
                "every node needs at least one parameter".into(),
            ));
        }
        if self.theta_target.len() != self.total_dim() {
            return Err(Error::Config(format!(
                "theta_target has {} entries, expected {}",
                self.theta_target.len(),
                self.total_dim()
            )));
        }
        Ok(())
    }

    /// Start offset of each node's parameter block.
    fn offsets(&self) -> Vec<usize> {
        self.dims
            .iter()
            .scan(0, |acc, d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect()
    }

    fn target_block(&self, node: usize) -> &[f64] {
        let start: usize = self.dims[..node].iter().sum();
        &self.theta_target[start..start + self.dims[node]]
    }
}

/// A named benchmark system: network plus box, start point and step exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub network: QueueNetworkConfig,
    pub bounds: BoxConstraint,
    pub theta0: Vec<f64>,
    pub gamma: f64,
}

impl Preset {
    /// Two nodes, 4 parameters: `lambda = (0.2, 0.1)`, `p = (0, 0.4)`, `R = (10, 20)`.
    pub fn tandem_4dim() -> Self {
        Self {
            name: "tandem4",
            network: QueueNetworkConfig {
                lambda: vec![0.2, 0.1],
                p_leave: vec![0.0, 0.4],
                service_const: vec![10.0, 20.0],
                dims: vec![2, 2],
                theta_target: vec![0.3; 4],
            },
            bounds: BoxConstraint::cube(4, 0.1, 0.6).expect("valid box"),
            theta0: vec![0.1, 0.1, 0.6, 0.6],
            gamma: 0.75,
        }
    }

    /// Four nodes, 20 parameters: `lambda_i = 0.2`, `p_i = 0.2`, `R_i = 10`.
    pub fn tandem_20dim() -> Self {
        Self {
            name: "tandem20",
            network: QueueNetworkConfig {
                lambda: vec![0.2; 4],
                p_leave: vec![0.2; 4],
                service_const: vec![10.0; 4],
                dims: vec![5; 4],
                theta_target: vec![0.3; 20],
            },
            bounds: BoxConstraint::cube(20, 0.1, 0.6).expect("valid box"),
            theta0: vec![0.6; 20],
            gamma: 0.85,
        }
    }

    pub fn names() -> &'static [&'static str] {
        &["tandem4", "tandem20"]
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "tandem4" | "4dim" => Some(Self::tandem_4dim()),
            "tandem20" | "20dim" => Some(Self::tandem_20dim()),
            _ => None,
        }
    }
}

/// Service time `U * (1/R_i + |theta_i - target_i|^2)` at `node`.
pub fn service_time(
    node: usize,
    theta_i: &[f64],
    config: &QueueNetworkConfig,
    stream: &mut RngStream,
) -> f64 {
    let target = config.target_block(node);
    let dist_sq: f64 = theta_i
        .iter()
        .zip(target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    stream.uniform01() * (1.0 / config.service_const[node] + dist_sq)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Customer {
    pub id: u64,
    /// Time the customer entered the network.
    pub entry: f64,
    /// Position in the arrival order of the node it currently queues at.
    pub node_seq: u64,
}

/// Record of one service start, kept only when logging is enabled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceStart {
    pub node: usize,
    pub customer: u64,
    pub node_seq: u64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    pub clock: f64,
    /// FIFO per node; the front customer is in service when `completion` is set.
    pub queues: Vec<VecDeque<Customer>>,
    pub completion: Vec<Option<f64>>,
    pub next_arrival: Vec<f64>,
    pub node_counters: Vec<u64>,
    pub arrivals: u64,
    pub departures: u64,
}

impl QueueState {
    pub fn customers_present(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }
}

/// Per-node random sources, each on its own substream.
///
/// Keeping arrivals, service draws and routing decisions on separate streams
/// means two networks built from the same base stream see identical exogenous
/// randomness (common random numbers) even when their parameters differ.
#[derive(Debug, Clone)]
struct NodeStreams {
    arrivals: RngStream,
    service: RngStream,
    routing: RngStream,
}

const ARRIVAL_STREAM: u64 = 0xA1;
const SERVICE_STREAM: u64 = 0x5E;
const ROUTING_STREAM: u64 = 0x40;

/// Discrete-event simulation of a [`QueueNetworkConfig`].
#[derive(Debug, Clone)]
pub struct QueueNetwork {
    config: QueueNetworkConfig,
    offsets: Vec<usize>,
    state: QueueState,
    streams: Vec<NodeStreams>,
    log: Option<Vec<ServiceStart>>,
}

impl QueueNetwork {
    /// A fresh, empty network at clock 0.
    pub fn new(config: QueueNetworkConfig, stream: RngStream) -> Result<Self> {
        config.validate()?;
        let k = config.nodes();
        let mut streams: Vec<NodeStreams> = (0..k as u64)
            .map(|i| NodeStreams {
                arrivals: stream.substream(&[ARRIVAL_STREAM, i]),
                service: stream.substream(&[SERVICE_STREAM, i]),
                routing: stream.substream(&[ROUTING_STREAM, i]),
            })
            .collect();
        let next_arrival = config
            .lambda
            .iter()
            .zip(streams.iter_mut())
            .map(|(&l, s)| {
                if l > 0.0 {
                    s.arrivals.exponential(l)
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        Ok(Self {
            offsets: config.offsets(),
            state: QueueState {
                clock: 0.0,
                queues: vec![VecDeque::new(); k],
                completion: vec![None; k],
                next_arrival,
                node_counters: vec![0; k],
                arrivals: 0,
                departures: 0,
            },
            config,
            streams,
            log: None,
        })
    }

    /// Keeps a log of service starts (for tests and diagnostics).
    pub fn with_service_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn service_log(&self) -> Option<&[ServiceStart]> {
        self.log.as_deref()
    }

    pub fn state(&self) -> &QueueState {
        &self.state
    }

    pub fn config(&self) -> &QueueNetworkConfig {
        &self.config
    }

    fn enqueue(&mut self, node: usize, id: u64, entry: f64, control: &[f64]) {
        let seq = self.state.node_counters[node];
        self.state.node_counters[node] += 1;
        self.state.queues[node].push_back(Customer {
            id,
            entry,
            node_seq: seq,
        });
        if self.state.completion[node].is_none() {
            self.start_service(node, control);
        }
    }

    fn start_service(&mut self, node: usize, control: &[f64]) {
        let Some(front) = self.state.queues[node].front().copied() else {
            return;
        };
        let o = self.offsets[node];
        let theta_i = &control[o..o + self.config.dims[node]];
        let s = service_time(node, theta_i, &self.config, &mut self.streams[node].service);
        self.state.completion[node] = Some(self.state.clock + s);
        if let Some(log) = &mut self.log {
            log.push(ServiceStart {
                node,
                customer: front.id,
                node_seq: front.node_seq,
                time: self.state.clock,
            });
        }
    }

    /// Runs events until the next service completion and returns its cost.
    pub fn advance_one_observation(&mut self, control: &[f64]) -> Result<f64> {
        if control.len() != self.config.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.config.total_dim(),
                got: control.len(),
            });
        }
        let k = self.config.nodes();
        loop {
            let (mut when, mut node, mut is_arrival) = (f64::INFINITY, 0, true);
            for i in 0..k {
                if self.state.next_arrival[i] < when {
                    (when, node, is_arrival) = (self.state.next_arrival[i], i, true);
                }
            }
            for i in 0..k {
                if let Some(t) = self.state.completion[i] {
                    if t < when {
                        (when, node, is_arrival) = (t, i, false);
                    }
                }
            }
            self.state.clock = when;

            if is_arrival {
                let id = self.state.arrivals;
                self.state.arrivals += 1;
                self.state.next_arrival[node] = when
                    + self.streams[node]
                        .arrivals
                        .exponential(self.config.lambda[node]);
                self.enqueue(node, id, when, control);
                continue;
            }

            let clock = self.state.clock;
            let cost: f64 = self
                .state
                .queues
                .iter()
                .flatten()
                .map(|c| clock - c.entry)
                .sum();
            let done = self.state.queues[node]
                .pop_front()
                .expect("completion scheduled for an empty node");
            self.state.completion[node] = None;
            let leaves = self.streams[node]
                .routing
                .bernoulli(self.config.p_leave[node]);
            self.start_service(node, control);
            if leaves {
                self.state.departures += 1;
            } else {
                self.enqueue((node + 1) % k, done.id, done.entry, control);
            }
            return Ok(cost);
        }
    }
}

impl Simulator for QueueNetwork {
    fn step(&mut self, control: &[f64]) -> Result<f64> {
        self.advance_one_observation(control)
    }
}

/// A simulator handle with fresh empty state.
pub fn make_simulator(config: &QueueNetworkConfig, stream: RngStream) -> Result<QueueNetwork> {
    QueueNetwork::new(config.clone(), stream)
}

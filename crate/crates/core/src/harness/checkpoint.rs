//! Learner checkpoints: one JSON line echoing the run config, then every
//! network's parameters in [`Learner::networks`] order.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::agents::Learner;
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::net::{read_params_for, write_params, ActionBounds};
use crate::scalar::Real;

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    config: Vec<(String, String)>,
    networks: usize,
}

pub fn save_checkpoint<T: Real, W: Write>(w: &mut W, cfg: &RunConfig, learner: &Learner<T>) -> Result<()> {
    let nets = learner.networks();
    let header = CheckpointHeader {
        config: cfg.pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        networks: nets.len(),
    };
    serde_json::to_writer(&mut *w, &header).map_err(|e| Error::Io(e.into()))?;
    w.write_all(b"\n")?;
    for net in nets {
        write_params(w, &net.shape, &net.params)?;
    }
    Ok(())
}

pub fn load_checkpoint<T: Real, R: BufRead>(r: &mut R) -> Result<(RunConfig, Learner<T>)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: CheckpointHeader =
        serde_json::from_str(&line).map_err(|e| Error::Parse { line: 1, msg: format!("bad checkpoint header: {e}") })?;
    let mut cfg = RunConfig::default();
    for (k, v) in &header.config {
        cfg.set(k, v)?;
    }
    let spec = EnvSpec::by_name(&cfg.env)?;
    let bounds = ActionBounds::new(
        spec.action_low.iter().map(|&x| T::of(x)).collect(),
        spec.action_high.iter().map(|&x| T::of(x)).collect(),
    );
    let mut learner = Learner::new(&cfg.agent, spec.obs_dim, bounds, 0)?;
    let mut nets = learner.networks_mut();
    if nets.len() != header.networks {
        return Err(Error::Input(format!(
            "checkpoint holds {} networks, {} expects {}",
            header.networks,
            cfg.agent.algo,
            nets.len()
        )));
    }
    for net in nets.iter_mut() {
        net.params = read_params_for(r, &net.shape)?;
    }
    Ok((cfg, learner))
}

//! `MOESAC1` checkpoint format.
//!
//! Line-oriented text. Every float is written as the 16 hex digits of its IEEE
//! bit pattern, so a save/load round trip is bit-exact.
//!
//! ```text
//! MOESAC1
//! state_dim 153
//! num_actions 30
//! hidden 128 128
//! gamma 3fefae147ae147ae
//! ...                       (remaining hyperparameters)
//! log_alpha 0000000000000000
//! net actor
//! layer 153 128
//! weights <in*out hex words>
//! bias <out hex words>
//! ...                       (critic1, critic2, target1, target2)
//! end
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::agent::{SacAgent, SacConfig};
use super::mlp::{Dense, Mlp};
use super::optim::OptimizerKind;
use crate::{Error, Result};

pub const MAGIC: &str = "MOESAC1";
const NET_NAMES: [&str; 5] = ["actor", "critic1", "critic2", "target1", "target2"];

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn unhex(word: &str) -> Result<f64> {
    u64::from_str_radix(word, 16)
        .map(f64::from_bits)
        .map_err(|_| Error::Checkpoint(format!("bad float word `{word}`")))
}

impl SacAgent {
    pub fn to_checkpoint(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "state_dim {}", self.state_dim);
        let _ = writeln!(out, "num_actions {}", self.num_actions);
        let hidden: Vec<String> = c.hidden.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "hidden {}", hidden.join(" "));
        for (key, v) in [
            ("gamma", c.gamma),
            ("tau", c.tau),
            ("actor_lr", c.actor_lr),
            ("critic_lr", c.critic_lr),
            ("alpha_lr", c.alpha_lr),
            ("target_entropy_ratio", c.target_entropy_ratio),
            ("initial_alpha", c.initial_alpha),
        ] {
            let _ = writeln!(out, "{key} {}", hex(v));
        }
        let _ = writeln!(out, "batch_size {}", c.batch_size);
        let _ = writeln!(out, "buffer_capacity {}", c.buffer_capacity);
        let _ = writeln!(out, "optimizer {}", c.optimizer.as_str());
        let _ = writeln!(out, "log_alpha {}", hex(self.log_alpha));
        let nets = [&self.actor, &self.critic1, &self.critic2, &self.target1, &self.target2];
        for (name, net) in NET_NAMES.iter().zip(nets) {
            let _ = writeln!(out, "net {name}");
            for layer in net.layers() {
                let _ = writeln!(out, "layer {} {}", layer.in_dim, layer.out_dim);
                out.push_str("weights");
                for &w in &layer.weights {
                    out.push(' ');
                    out.push_str(&hex(w));
                }
                out.push_str("\nbias");
                for &b in &layer.bias {
                    out.push(' ');
                    out.push_str(&hex(b));
                }
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().peekable();
        let mut next = |expect: &str| -> Result<Vec<&str>> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| Error::Checkpoint(format!("unexpected end of file, wanted `{expect}`")))?;
            let words: Vec<&str> = line.split_ascii_whitespace().collect();
            if words.first() != Some(&expect) {
                return Err(Error::Checkpoint(format!("line {}: expected `{expect}`, found `{line}`", no + 1)));
            }
            Ok(words[1..].to_vec())
        };
        next(MAGIC)?;
        let int = |words: Vec<&str>, key: &str| -> Result<usize> {
            match words.as_slice() {
                [w] => w.parse().map_err(|_| Error::Checkpoint(format!("bad integer for {key}"))),
                _ => Err(Error::Checkpoint(format!("{key} takes one value"))),
            }
        };
        let float = |words: Vec<&str>, key: &str| -> Result<f64> {
            match words.as_slice() {
                [w] => unhex(w),
                _ => Err(Error::Checkpoint(format!("{key} takes one value"))),
            }
        };
        let state_dim = int(next("state_dim")?, "state_dim")?;
        let num_actions = int(next("num_actions")?, "num_actions")?;
        let hidden = next("hidden")?
            .iter()
            .map(|w| w.parse().map_err(|_| Error::Checkpoint("bad hidden width".into())))
            .collect::<Result<Vec<usize>>>()?;
        let gamma = float(next("gamma")?, "gamma")?;
        let tau = float(next("tau")?, "tau")?;
        let actor_lr = float(next("actor_lr")?, "actor_lr")?;
        let critic_lr = float(next("critic_lr")?, "critic_lr")?;
        let alpha_lr = float(next("alpha_lr")?, "alpha_lr")?;
        let target_entropy_ratio = float(next("target_entropy_ratio")?, "target_entropy_ratio")?;
        let initial_alpha = float(next("initial_alpha")?, "initial_alpha")?;
        let batch_size = int(next("batch_size")?, "batch_size")?;
        let buffer_capacity = int(next("buffer_capacity")?, "buffer_capacity")?;
        let optimizer = match next("optimizer")?.as_slice() {
            [w] => OptimizerKind::parse(w).ok_or_else(|| Error::Checkpoint(format!("unknown optimizer `{w}`")))?,
            _ => return Err(Error::Checkpoint("optimizer takes one value".into())),
        };
        let log_alpha = float(next("log_alpha")?, "log_alpha")?;
        let config = SacConfig {
            hidden,
            gamma,
            tau,
            actor_lr,
            critic_lr,
            alpha_lr,
            batch_size,
            buffer_capacity,
            target_entropy_ratio,
            initial_alpha,
            optimizer,
        };
        let sizes = config.layer_sizes(state_dim, num_actions);
        let mut nets = Vec::with_capacity(5);
        for name in NET_NAMES {
            if next("net")? != [name] {
                return Err(Error::Checkpoint(format!("expected net `{name}`")));
            }
            let mut layers = Vec::new();
            for pair in sizes.windows(2) {
                let dims = next("layer")?;
                let (in_dim, out_dim) = match dims.as_slice() {
                    [i, o] => (
                        i.parse::<usize>().map_err(|_| Error::Checkpoint("bad layer dims".into()))?,
                        o.parse::<usize>().map_err(|_| Error::Checkpoint("bad layer dims".into()))?,
                    ),
                    _ => return Err(Error::Checkpoint("layer takes two values".into())),
                };
                if (in_dim, out_dim) != (pair[0], pair[1]) {
                    return Err(Error::Checkpoint(format!(
                        "{name}: layer {in_dim}x{out_dim} does not match declared sizes {sizes:?}"
                    )));
                }
                let weights = next("weights")?.into_iter().map(unhex).collect::<Result<Vec<_>>>()?;
                let bias = next("bias")?.into_iter().map(unhex).collect::<Result<Vec<_>>>()?;
                layers.push(Dense {
                    in_dim,
                    out_dim,
                    weights,
                    bias,
                });
            }
            nets.push(Mlp::from_layers(layers)?);
        }
        next("end")?;
        let nets: [Mlp; 5] = nets.try_into().expect("five networks");
        Ok(SacAgent::assemble(config, state_dim, num_actions, nets, log_alpha))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&text)
    }
}

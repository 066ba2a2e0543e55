use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context as _;
use cardylab::rng::{seed_split, stream, SimRng};
use serde::Serialize;
use serde_json::{json, Map, Value};

pub struct Context {
    pub seed: u64,
    pub threads: Option<usize>,
    pub envelope: Option<PathBuf>,
}

/// One command invocation: records derived streams and normalization
/// constants, and holds output files until the command has succeeded.
pub struct Run {
    command: &'static str,
    ctx: Context,
    config: Value,
    streams: Vec<String>,
    normalization: Map<String, Value>,
    files: Vec<(PathBuf, Vec<u8>)>,
    start: Instant,
}

impl Run {
    pub fn new<C: Serialize>(command: &'static str, ctx: Context, config: &C) -> anyhow::Result<Self> {
        Ok(Run {
            command,
            config: serde_json::to_value(config)?,
            ctx,
            streams: Vec::new(),
            normalization: Map::new(),
            files: Vec::new(),
            start: Instant::now(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.ctx.seed
    }

    pub fn note_stream(&mut self, id: impl Into<String>) {
        let id = id.into();
        if !self.streams.contains(&id) {
            self.streams.push(id);
        }
    }

    pub fn stream(&mut self, id: &str) -> SimRng {
        self.note_stream(id);
        stream(self.ctx.seed, id)
    }

    pub fn child_seed(&mut self, id: &str) -> u64 {
        self.note_stream(id);
        seed_split(self.ctx.seed, id)
    }

    pub fn normalization(&mut self, key: &str, value: Value) {
        self.normalization.insert(key.into(), value);
    }

    pub fn file(&mut self, path: &Path, bytes: impl Into<Vec<u8>>) {
        self.files.push((path.to_path_buf(), bytes.into()));
    }

    /// Writes pending files, then the envelope: to `out` when the command's
    /// primary output is the envelope, else to --envelope, else next to the
    /// first data file, else to stdout.
    pub fn finish(mut self, payload: Value, out: Option<&Path>) -> anyhow::Result<()> {
        let target = match out {
            Some(p) => Some(p.to_path_buf()),
            None => self.ctx.envelope.clone().or_else(|| {
                self.files.first().map(|(p, _)| {
                    let mut s = p.clone().into_os_string();
                    s.push(".envelope.json");
                    PathBuf::from(s)
                })
            }),
        };
        let env = json!({
            "metadata": {
                "library": "cardylab",
                "version": env!("CARGO_PKG_VERSION"),
                "command": self.command,
                "config": self.config,
                "master_seed": self.ctx.seed,
                "streams": self.streams,
                "normalization": self.normalization,
                "threads": self.ctx.threads.unwrap_or_else(rayon::current_num_threads),
                "wall_time_s": self.start.elapsed().as_secs_f64(),
            },
            "payload": payload,
        });
        let text = serde_json::to_string_pretty(&env)? + "\n";
        for (p, bytes) in std::mem::take(&mut self.files) {
            fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        }
        match target {
            Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

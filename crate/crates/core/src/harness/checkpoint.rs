//! Binary checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "MSOCCKPT"
//! version      u32
//! dims         u32 local, u32 entity, u32 encoder_out,
//!              u32 n + n×u32 encoder_hidden, u32 n + n×u32 head_hidden
//! blocks       u32 count, then per block: u16 name length, name, u32 rows, u32 cols
//! params       f32 per entry, blocks in table order, each row-major
//! dense_active u8
//! resume       u8 flag; when 1:
//!              u64 adam step, adam m and v (f32, same block order),
//!              u32 snapshot count, per snapshot: u64 id, f32 params,
//!              u64 length + JSON trainer state
//! ```

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Result, SoccerError};
use crate::neural::{ActorCritic, Adam, InputDims, NetworkConfig, NetworkLayout};
use crate::rules::GameResult;
use crate::trainer::{AdversaryId, CurriculumState, EnvLevels, EnvSlot, SelfPlayBuffer, Snapshot, Trainer, WinRateTracker};

pub const MAGIC: &[u8; 8] = b"MSOCCKPT";
pub const FORMAT_VERSION: u32 = 1;

/// Everything besides the parameters that a bit-exact resume needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    pub config: Config,
    pub epoch: u64,
    pub levels: Vec<EnvLevels>,
    pub winrates: Vec<(AdversaryId, Vec<GameResult>)>,
    pub milestone_reached: bool,
    pub next_snapshot_id: u64,
    pub envs: Vec<EnvSlot>,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResumeState {
    pub adam_step: u64,
    pub adam_m: Vec<f32>,
    pub adam_v: Vec<f32>,
    pub snapshots: Vec<(u64, Vec<f32>)>,
    pub state: TrainerState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub net: ActorCritic<f32>,
    pub dense_active: bool,
    pub resume: Option<ResumeState>,
}

impl Checkpoint {
    pub fn policy_only(net: ActorCritic<f32>, dense_active: bool) -> Self {
        Self { net, dense_active, resume: None }
    }

    pub fn from_trainer(t: &Trainer) -> Self {
        let c = &t.curriculum;
        let state = TrainerState {
            config: t.cfg.clone(),
            epoch: t.epoch,
            levels: c.levels.clone(),
            winrates: c.winrates.windows.iter().map(|(k, v)| (*k, v.iter().copied().collect())).collect(),
            milestone_reached: c.milestone_reached,
            next_snapshot_id: c.selfplay.next_id,
            envs: t.envs.clone(),
            rng: t.rng.clone(),
        };
        Self {
            net: t.net.clone(),
            dense_active: c.dense_active,
            resume: Some(ResumeState {
                adam_step: t.adam.step,
                adam_m: t.adam.m.clone(),
                adam_v: t.adam.v.clone(),
                snapshots: c.selfplay.snapshots.iter().map(|s| (s.id, s.params.as_ref().clone())).collect(),
                state,
            }),
        }
    }

    /// Rebuilds the trainer exactly as it was when saved.
    pub fn into_trainer(self) -> Result<Trainer> {
        let resume = self.resume.ok_or_else(|| SoccerError::Config("checkpoint has no training state to resume".into()))?;
        let s = resume.state;
        let curriculum = CurriculumState {
            levels: s.levels,
            selfplay: SelfPlayBuffer {
                snapshots: resume
                    .snapshots
                    .into_iter()
                    .map(|(id, p)| Snapshot { id, params: Arc::new(p) })
                    .collect::<VecDeque<_>>(),
                next_id: s.next_snapshot_id,
            },
            dense_active: self.dense_active,
            winrates: WinRateTracker { windows: s.winrates.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect() },
            milestone_reached: s.milestone_reached,
        };
        let adam = Adam { m: resume.adam_m, v: resume.adam_v, step: resume.adam_step };
        Ok(Trainer { cfg: s.config, net: self.net, adam, curriculum, envs: s.envs, rng: s.rng, epoch: s.epoch })
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let layout = &self.net.layout;
        w.write_all(MAGIC)?;
        put_u32(w, FORMAT_VERSION)?;
        put_u32(w, layout.inputs.local as u32)?;
        put_u32(w, layout.inputs.entity as u32)?;
        put_u32(w, layout.config.encoder_out as u32)?;
        for list in [&layout.config.encoder_hidden, &layout.config.head_hidden] {
            put_u32(w, list.len() as u32)?;
            for &n in list {
                put_u32(w, n as u32)?;
            }
        }
        let blocks = layout.blocks();
        put_u32(w, blocks.len() as u32)?;
        for b in &blocks {
            w.write_all(&(b.name.len() as u16).to_le_bytes())?;
            w.write_all(b.name.as_bytes())?;
            put_u32(w, b.rows as u32)?;
            put_u32(w, b.cols as u32)?;
        }
        write_blocks(w, layout, &self.net.params)?;
        w.write_all(&[u8::from(self.dense_active)])?;
        match &self.resume {
            None => w.write_all(&[0]),
            Some(r) => {
                w.write_all(&[1])?;
                w.write_all(&r.adam_step.to_le_bytes())?;
                write_blocks(w, layout, &r.adam_m)?;
                write_blocks(w, layout, &r.adam_v)?;
                put_u32(w, r.snapshots.len() as u32)?;
                for (id, p) in &r.snapshots {
                    w.write_all(&id.to_le_bytes())?;
                    write_blocks(w, layout, p)?;
                }
                let json = serde_json::to_vec(&r.state).map_err(std::io::Error::other)?;
                w.write_all(&(json.len() as u64).to_le_bytes())?;
                w.write_all(&json)
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let fail = |e: std::io::Error| SoccerError::Checkpoint { path: path.to_path_buf(), reason: e.to_string() };
        let tmp = path.with_extension("tmp");
        let file = std::fs::File::create(&tmp).map_err(fail)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w).map_err(fail)?;
        w.flush().map_err(fail)?;
        drop(w);
        std::fs::rename(&tmp, path).map_err(fail)
    }

    pub fn read_from<R: Read>(r: &mut R, path: &Path) -> Result<Self> {
        let mut rd = Reader { inner: r, path: path.to_path_buf(), what: "" };
        let mut magic = [0u8; 8];
        rd.fill(&mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(rd.fail(format!("not a checkpoint: magic {:?}, expected {:?}", String::from_utf8_lossy(&magic), "MSOCCKPT")));
        }
        let version = rd.u32("format version")?;
        if version != FORMAT_VERSION {
            return Err(rd.fail(format!("format version {version} is not supported (this build reads version {FORMAT_VERSION})")));
        }
        let local = rd.u32("dimension table")? as usize;
        let entity = rd.u32("dimension table")? as usize;
        let encoder_out = rd.u32("dimension table")? as usize;
        let mut lists = [Vec::new(), Vec::new()];
        for list in lists.iter_mut() {
            let n = rd.u32("dimension table")? as usize;
            if n > 64 {
                return Err(rd.fail(format!("implausible layer count {n} in dimension table")));
            }
            for _ in 0..n {
                list.push(rd.u32("dimension table")? as usize);
            }
        }
        let [encoder_hidden, head_hidden] = lists;
        let layout = NetworkLayout::new(InputDims { local, entity }, &NetworkConfig { encoder_hidden, encoder_out, head_hidden });
        let expected = layout.blocks();
        let count = rd.u32("block table")? as usize;
        if count != expected.len() {
            return Err(rd.fail(format!("block table lists {count} blocks, dimensions imply {}", expected.len())));
        }
        for b in &expected {
            let mut len = [0u8; 2];
            rd.fill(&mut len, "block table")?;
            let mut name = vec![0u8; u16::from_le_bytes(len) as usize];
            rd.fill(&mut name, "block table")?;
            let rows = rd.u32("block table")? as usize;
            let cols = rd.u32("block table")? as usize;
            if name != b.name.as_bytes() || rows != b.rows || cols != b.cols {
                return Err(rd.fail(format!(
                    "block {} is {rows}x{cols}, expected {} {}x{}",
                    String::from_utf8_lossy(&name),
                    b.name,
                    b.rows,
                    b.cols
                )));
            }
        }
        let params = rd.blocks(&layout, "parameters")?;
        let dense_active = rd.u8("dense flag")? != 0;
        let resume = match rd.u8("resume flag")? {
            0 => None,
            1 => {
                let mut step = [0u8; 8];
                rd.fill(&mut step, "optimiser state")?;
                let adam_m = rd.blocks(&layout, "optimiser state")?;
                let adam_v = rd.blocks(&layout, "optimiser state")?;
                let n = rd.u32("snapshots")? as usize;
                let mut snapshots = Vec::with_capacity(n.min(64));
                for _ in 0..n {
                    let mut id = [0u8; 8];
                    rd.fill(&mut id, "snapshots")?;
                    snapshots.push((u64::from_le_bytes(id), rd.blocks(&layout, "snapshots")?));
                }
                let mut len = [0u8; 8];
                rd.fill(&mut len, "trainer state")?;
                let mut json = Vec::new();
                let read = rd.inner.by_ref().take(u64::from_le_bytes(len)).read_to_end(&mut json);
                read.map_err(|e| rd.fail(e.to_string()))?;
                if json.len() as u64 != u64::from_le_bytes(len) {
                    return Err(rd.fail("truncated in trainer state".into()));
                }
                let state: TrainerState = serde_json::from_slice(&json).map_err(|e| rd.fail(format!("trainer state: {e}")))?;
                Some(ResumeState { adam_step: u64::from_le_bytes(step), adam_m, adam_v, snapshots, state })
            }
            f => return Err(rd.fail(format!("bad resume flag {f}"))),
        };
        let net = ActorCritic::from_params(layout, params)?;
        Ok(Self { net, dense_active, resume })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| SoccerError::Checkpoint { path: path.to_path_buf(), reason: e.to_string() })?;
        Self::read_from(&mut std::io::BufReader::new(file), path)
    }
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_blocks<W: Write>(w: &mut W, layout: &NetworkLayout, values: &[f32]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for b in layout.blocks() {
        for v in &values[b.offset..b.offset + b.rows * b.cols] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)
}

struct Reader<'a, R> {
    inner: &'a mut R,
    path: PathBuf,
    what: &'static str,
}

impl<R: Read> Reader<'_, R> {
    fn fail(&self, reason: String) -> SoccerError {
        SoccerError::Checkpoint { path: self.path.clone(), reason }
    }

    fn fill(&mut self, buf: &mut [u8], what: &'static str) -> Result<()> {
        self.what = what;
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                self.fail(format!("truncated in {}", self.what))
            } else {
                self.fail(e.to_string())
            }
        })
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        let mut b = [0u8; 1];
        self.fill(&mut b, what)?;
        Ok(b[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }

    fn blocks(&mut self, layout: &NetworkLayout, what: &'static str) -> Result<Vec<f32>> {
        let mut out = vec![0f32; layout.n_params];
        for b in layout.blocks() {
            let n = b.rows * b.cols;
            let mut bytes = vec![0u8; n * 4];
            self.fill(&mut bytes, what)?;
            for (dst, src) in out[b.offset..b.offset + n].iter_mut().zip(bytes.chunks_exact(4)) {
                *dst = f32::from_le_bytes([src[0], src[1], src[2], src[3]]);
            }
        }
        Ok(out)
    }
}

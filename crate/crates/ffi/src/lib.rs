//! C interface to the soccer simulator and trained policies.
//!
//! All objects are opaque handles created and destroyed through this API.
//! Every function returns a [`SoccerStatus`]; on failure a message is
//! available from [`soccer_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use soccer_core::controller::Controller;
use soccer_core::game::{instance_rng, GameInstance};
use soccer_core::harness::Checkpoint;
use soccer_core::neural::ActorCritic;
use soccer_core::opponents::bot_act;
use soccer_core::perception::{ObservationBundle, Role};
use soccer_core::rules::{BallBand, SpawnSpec};
use soccer_core::sim::{remap_unit_disk, ActionCommand, Outcome, Team};
use soccer_core::{Config, SoccerError};

/// Result code of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoccerStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Checkpoint = 4,
    Io = 5,
    BufferTooSmall = 6,
    Simulation = 7,
    Panic = 8,
}

/// Observation sizes. A flat observation is `local` values, then
/// `n_max * entity` teammate values, `n_max * entity` opponent values,
/// `n_max` teammate mask flags and `n_max` opponent mask flags (0 or 1).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SoccerObsDims {
    pub local: u32,
    pub entity: u32,
    pub n_max: u32,
    pub total: u32,
}

/// Outcome of one control step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SoccerStepResult {
    /// 1 once the episode has ended.
    pub done: c_int,
    /// 0 running, 1 blue won, 2 red won, 3 time limit.
    pub outcome: c_int,
    /// 1 if a goal was scored this step.
    pub goal: c_int,
    /// 1 if the ball left the field (outside the goals) this step.
    pub ball_out: c_int,
}

/// One game instance with its configuration.
pub struct SoccerEnv {
    cfg: Config,
    spec: SpawnSpec,
    inst: GameInstance,
}

/// A trained network loaded from a checkpoint.
pub struct SoccerPolicy {
    net: std::sync::Arc<ActorCritic<f32>>,
}

/// Values per agent command.
pub const SOCCER_ACTION_DIM: u32 = 5;
const _: () = assert!(SOCCER_ACTION_DIM as usize == ActionCommand::DIM);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn status_of(err: &SoccerError) -> SoccerStatus {
    match err {
        SoccerError::Config(_) | SoccerError::Toml(_) | SoccerError::SpawnFailed { .. } => SoccerStatus::Config,
        SoccerError::Checkpoint { .. } => SoccerStatus::Checkpoint,
        SoccerError::Io(_) | SoccerError::Json(_) | SoccerError::Csv(_) => SoccerStatus::Io,
        SoccerError::ActionCountMismatch { .. } | SoccerError::LengthMismatch(_) => SoccerStatus::InvalidArgument,
        _ => SoccerStatus::Simulation,
    }
}

struct Fail(SoccerStatus, String);

impl From<SoccerError> for Fail {
    fn from(e: SoccerError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SoccerStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SoccerStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SoccerStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(SoccerStatus::NullPointer, "null pointer argument".into())
}

unsafe fn as_ref<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

unsafe fn as_mut<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, need: usize) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return Err(null());
    }
    if len < need {
        return Err(Fail(SoccerStatus::BufferTooSmall, format!("buffer holds {len} values, {need} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

fn agent_index(env: &SoccerEnv, agent: u32) -> Result<usize, Fail> {
    let id = agent as usize;
    match env.inst.world.agents.get(id) {
        Some(a) if a.active => Ok(id),
        _ => Err(Fail(SoccerStatus::InvalidArgument, format!("agent {agent} does not exist or is inactive"))),
    }
}

fn dims(cfg: &Config) -> SoccerObsDims {
    let o = &cfg.observation;
    let (local, entity, n_max) = (o.local_dim(), o.entity_dim(), o.n_max_neighbors);
    SoccerObsDims {
        local: local as u32,
        entity: entity as u32,
        n_max: n_max as u32,
        total: (local + 2 * n_max * entity + 2 * n_max) as u32,
    }
}

fn flatten(obs: &ObservationBundle, out: &mut [f64]) {
    let mask = |m: &[bool]| m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
    let values = obs
        .local
        .iter()
        .chain(&obs.teammates)
        .chain(&obs.opponents)
        .copied()
        .chain(mask(&obs.teammate_mask))
        .chain(mask(&obs.opponent_mask));
    for (o, v) in out.iter_mut().zip(values) {
        *o = v;
    }
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn soccer_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates an environment. `config_toml` may be null for the default
/// configuration; otherwise it is the configuration file's text.
///
/// # Safety
/// `config_toml` must be null or a valid NUL-terminated string; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn soccer_env_create(
    config_toml: *const c_char,
    seed: u64,
    n_blue: u32,
    n_red: u32,
    out: *mut *mut SoccerEnv,
) -> SoccerStatus {
    guard(|| {
        let out = as_mut(out)?;
        *out = ptr::null_mut();
        let mut cfg = if config_toml.is_null() {
            Config::default()
        } else {
            let text = CStr::from_ptr(config_toml)
                .to_str()
                .map_err(|_| Fail(SoccerStatus::InvalidArgument, "configuration is not UTF-8".into()))?;
            Config::from_toml_str(text)?
        };
        cfg.seed = seed;
        if n_blue == 0 || n_red == 0 {
            return Err(Fail(SoccerStatus::Config, "each team needs at least one agent".into()));
        }
        let spec = SpawnSpec {
            field: cfg.field,
            n_blue: n_blue as usize,
            n_red: n_red as usize,
            ball_band: BallBand::FULL,
            curriculum_level: 0,
            rng_stream: 0,
        };
        let inst = GameInstance::spawn(&spec, &cfg, instance_rng(seed, 0))?;
        *out = Box::into_raw(Box::new(SoccerEnv { cfg, spec, inst }));
        Ok(())
    })
}

/// Destroys an environment. Null is ignored.
///
/// # Safety
/// `env` must be null or a handle from [`soccer_env_create`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn soccer_env_free(env: *mut SoccerEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Starts a new episode drawn from `seed`.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn soccer_env_reset(env: *mut SoccerEnv, seed: u64) -> SoccerStatus {
    guard(|| {
        let env = as_mut(env)?;
        env.inst = GameInstance::spawn(&env.spec, &env.cfg, instance_rng(seed, 0))?;
        Ok(())
    })
}

/// Number of agents; blue agents come first.
///
/// # Safety
/// `env` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn soccer_env_num_agents(env: *const SoccerEnv, out: *mut u32) -> SoccerStatus {
    guard(|| {
        *as_mut(out)? = as_ref(env)?.inst.world.agents.len() as u32;
        Ok(())
    })
}

/// Observation sizes for this environment's configuration.
///
/// # Safety
/// `env` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn soccer_env_obs_dims(env: *const SoccerEnv, out: *mut SoccerObsDims) -> SoccerStatus {
    guard(|| {
        *as_mut(out)? = dims(&as_ref(env)?.cfg);
        Ok(())
    })
}

/// Writes the flat observation of `agent` (see [`SoccerObsDims`]). Actor
/// observations carry sensor noise; critic observations (`critic != 0`) do
/// not.
///
/// # Safety
/// `env` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn soccer_env_observe(
    env: *mut SoccerEnv,
    agent: u32,
    critic: c_int,
    out: *mut f64,
    len: usize,
) -> SoccerStatus {
    guard(|| {
        let env = as_mut(env)?;
        let id = agent_index(env, agent)?;
        let out = out_slice(out, len, dims(&env.cfg).total as usize)?;
        let role = if critic != 0 { Role::Critic } else { Role::Actor };
        let obs = env.inst.observe(id, role, &env.cfg);
        flatten(&obs, out);
        Ok(())
    })
}

/// Advances one control step. `actions` holds `5 * num_agents` values in
/// agent order, each in [-1, 1]. `rewards` may be null; otherwise it
/// receives one reward per blue agent.
///
/// # Safety
/// `env` must be a live handle; `actions` must hold `n_actions` doubles;
/// `rewards` must be null or hold `rewards_len` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn soccer_env_step(
    env: *mut SoccerEnv,
    actions: *const f64,
    n_actions: usize,
    rewards: *mut f64,
    rewards_len: usize,
    out: *mut SoccerStepResult,
) -> SoccerStatus {
    guard(|| {
        let env = as_mut(env)?;
        let out = as_mut(out)?;
        if actions.is_null() {
            return Err(null());
        }
        let n = env.inst.world.agents.len();
        if n_actions != n * ActionCommand::DIM {
            return Err(Fail(
                SoccerStatus::InvalidArgument,
                format!("expected {} action values, got {n_actions}", n * ActionCommand::DIM),
            ));
        }
        let raw = std::slice::from_raw_parts(actions, n_actions);
        if raw.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Fail(SoccerStatus::InvalidArgument, "action values must lie in [-1, 1]".into()));
        }
        let cmds: Vec<ActionCommand> = raw.chunks_exact(ActionCommand::DIM).map(ActionCommand::from_slice).collect();
        let report = env.inst.step(&cmds, &env.cfg, &env.cfg.reward)?;
        if !rewards.is_null() {
            let r = out_slice(rewards, rewards_len, report.rewards.len())?;
            for (slot, (_, terms)) in r.iter_mut().zip(&report.rewards) {
                *slot = terms.total();
            }
        }
        *out = SoccerStepResult {
            done: c_int::from(report.outcome.is_some()),
            outcome: match report.outcome {
                None => 0,
                Some(Outcome::BlueWin) => 1,
                Some(Outcome::RedWin) => 2,
                Some(Outcome::Timeout) => 3,
            },
            goal: c_int::from(report.physics.goal.is_some()),
            ball_out: c_int::from(report.physics.ball_out),
        };
        Ok(())
    })
}

/// Number of values written by [`soccer_env_state`].
///
/// # Safety
/// `env` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn soccer_env_state_len(env: *const SoccerEnv, out: *mut usize) -> SoccerStatus {
    guard(|| {
        *as_mut(out)? = 5 + 7 * as_ref(env)?.inst.world.agents.len();
        Ok(())
    })
}

/// World snapshot: sim time, ball x, y, vx, vy, then per agent x, y,
/// heading, vx, vy, angular velocity and team (0 blue, 1 red).
///
/// # Safety
/// `env` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn soccer_env_state(env: *const SoccerEnv, out: *mut f64, len: usize) -> SoccerStatus {
    guard(|| {
        let w = &as_ref(env)?.inst.world;
        let out = out_slice(out, len, 5 + 7 * w.agents.len())?;
        out[..5].copy_from_slice(&[w.sim_time, w.ball.position.x, w.ball.position.y, w.ball.velocity.x, w.ball.velocity.y]);
        for (chunk, a) in out[5..].chunks_exact_mut(7).zip(&w.agents) {
            let team = if a.team == Team::Blue { 0.0 } else { 1.0 };
            chunk.copy_from_slice(&[
                a.position.x,
                a.position.y,
                a.heading,
                a.linear_velocity.x,
                a.linear_velocity.y,
                a.angular_velocity,
                team,
            ]);
        }
        Ok(())
    })
}

/// Command the scripted bot would give `agent`.
///
/// # Safety
/// `env` must be a live handle; `out` must hold 5 doubles.
#[no_mangle]
pub unsafe extern "C" fn soccer_env_bot_action(env: *const SoccerEnv, agent: u32, out: *mut f64) -> SoccerStatus {
    guard(|| {
        let env = as_ref(env)?;
        let id = agent_index(env, agent)?;
        let out = out_slice(out, ActionCommand::DIM, ActionCommand::DIM)?;
        out.copy_from_slice(&bot_act(&env.inst.world, id, &env.cfg.physics, &env.cfg.bot).to_array());
        Ok(())
    })
}

/// Loads a policy from a checkpoint file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn soccer_policy_load(path: *const c_char, out: *mut *mut SoccerPolicy) -> SoccerStatus {
    guard(|| {
        let out = as_mut(out)?;
        *out = ptr::null_mut();
        if path.is_null() {
            return Err(null());
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(SoccerStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let ckpt = Checkpoint::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(SoccerPolicy { net: std::sync::Arc::new(ckpt.net) }));
        Ok(())
    })
}

/// Destroys a policy. Null is ignored.
///
/// # Safety
/// `policy` must be null or a handle from [`soccer_policy_load`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn soccer_policy_free(policy: *mut SoccerPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Policy command for `agent` in `env`: the distribution mode when
/// `deterministic != 0`, otherwise a sample from the environment's stream.
///
/// # Safety
/// Handles must be live; `out` must hold 5 doubles.
#[no_mangle]
pub unsafe extern "C" fn soccer_policy_act(
    policy: *const SoccerPolicy,
    env: *mut SoccerEnv,
    agent: u32,
    deterministic: c_int,
    out: *mut f64,
) -> SoccerStatus {
    guard(|| {
        let policy = as_ref(policy)?;
        let env = as_mut(env)?;
        check_layout(policy, env)?;
        let id = agent_index(env, agent)?;
        let out = out_slice(out, ActionCommand::DIM, ActionCommand::DIM)?;
        let ctrl = Controller::policy(policy.net.clone(), deterministic != 0);
        out.copy_from_slice(&ctrl.act(&mut env.inst, id, &env.cfg).to_array());
        Ok(())
    })
}

/// Critic value of `agent`'s current (noise-free) observation.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn soccer_policy_value(
    policy: *const SoccerPolicy,
    env: *mut SoccerEnv,
    agent: u32,
    out: *mut f64,
) -> SoccerStatus {
    guard(|| {
        let policy = as_ref(policy)?;
        let env = as_mut(env)?;
        check_layout(policy, env)?;
        let out = as_mut(out)?;
        let id = agent_index(env, agent)?;
        let obs = env.inst.observe(id, Role::Critic, &env.cfg);
        *out = policy.net.value_forward(&obs);
        Ok(())
    })
}

fn check_layout(policy: &SoccerPolicy, env: &SoccerEnv) -> Result<(), Fail> {
    let d = dims(&env.cfg);
    let inputs = policy.net.layout.inputs;
    if inputs.local != d.local as usize || inputs.entity != d.entity as usize {
        return Err(Fail(
            SoccerStatus::InvalidArgument,
            format!(
                "policy expects observations of {}+{} values, environment produces {}+{}",
                inputs.local, inputs.entity, d.local, d.entity
            ),
        ));
    }
    Ok(())
}

/// Square-to-disc remapping applied to base and kick commands.
///
/// # Safety
/// `out_x` and `out_y` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn soccer_remap(x: f64, y: f64, out_x: *mut f64, out_y: *mut f64) -> SoccerStatus {
    guard(|| {
        if !(-1.0..=1.0).contains(&x) || !(-1.0..=1.0).contains(&y) {
            return Err(Fail(SoccerStatus::InvalidArgument, "remap inputs must lie in [-1, 1]".into()));
        }
        let (a, b) = remap_unit_disk(x, y);
        *as_mut(out_x)? = a;
        *as_mut(out_y)? = b;
        Ok(())
    })
}

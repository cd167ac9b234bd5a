use std::ffi::{CStr, CString};
use std::ptr;

use soccer_core::game::instance_rng;
use soccer_core::harness::Checkpoint;
use soccer_core::neural::ActorCritic;
use soccer_core::perception::Role;
use soccer_core::sim::remap_unit_disk;
use soccer_core::trainer::layout_for;
use soccer_core::Config;
use soccer_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(soccer_last_error()) }.to_string_lossy().into_owned()
}

fn make_env(seed: u64, blue: u32, red: u32) -> *mut SoccerEnv {
    let mut env = ptr::null_mut();
    let st = unsafe { soccer_env_create(ptr::null(), seed, blue, red, &mut env) };
    assert_eq!(st, SoccerStatus::Ok, "{}", last_error());
    assert!(!env.is_null());
    env
}

fn state(env: *const SoccerEnv) -> Vec<f64> {
    let mut len = 0usize;
    unsafe {
        assert_eq!(soccer_env_state_len(env, &mut len), SoccerStatus::Ok);
        let mut buf = vec![0.0; len];
        assert_eq!(soccer_env_state(env, buf.as_mut_ptr(), len), SoccerStatus::Ok);
        buf
    }
}

fn bot_actions(env: *const SoccerEnv) -> Vec<f64> {
    let mut n = 0u32;
    unsafe { soccer_env_num_agents(env, &mut n) };
    let mut actions = vec![0.0; n as usize * SOCCER_ACTION_DIM as usize];
    for (i, chunk) in actions.chunks_exact_mut(5).enumerate() {
        assert_eq!(unsafe { soccer_env_bot_action(env, i as u32, chunk.as_mut_ptr()) }, SoccerStatus::Ok);
    }
    actions
}

#[test]
fn bot_match_runs_to_completion_and_is_seed_deterministic() {
    let run = |seed| {
        let env = make_env(seed, 2, 2);
        let mut trace = state(env);
        let mut rewards = [0.0; 2];
        let mut res = SoccerStepResult::default();
        let mut steps = 0;
        while res.done == 0 {
            let a = bot_actions(env);
            let st = unsafe { soccer_env_step(env, a.as_ptr(), a.len(), rewards.as_mut_ptr(), 2, &mut res) };
            assert_eq!(st, SoccerStatus::Ok, "{}", last_error());
            assert!(rewards.iter().all(|r| r.is_finite()));
            trace.extend(state(env));
            steps += 1;
            assert!(steps < 100_000);
        }
        assert!((1..=3).contains(&res.outcome));
        unsafe { soccer_env_free(env) };
        trace
    };
    let a = run(11);
    assert_eq!(a, run(11));
    assert_ne!(a, run(12));
}

#[test]
fn observation_layout_matches_core() {
    let env = make_env(3, 3, 2);
    let mut dims = SoccerObsDims::default();
    unsafe { assert_eq!(soccer_env_obs_dims(env, &mut dims), SoccerStatus::Ok) };
    let cfg = Config::default();
    assert_eq!(dims.local as usize, cfg.observation.local_dim());
    assert_eq!(dims.entity as usize, cfg.observation.entity_dim());
    assert_eq!(dims.total, dims.local + 2 * dims.n_max * dims.entity + 2 * dims.n_max);

    let mut buf = vec![f64::NAN; dims.total as usize];
    let st = unsafe { soccer_env_observe(env, 0, 1, buf.as_mut_ptr(), buf.len()) };
    assert_eq!(st, SoccerStatus::Ok);
    assert!(buf.iter().all(|v| v.is_finite()));
    let masks = &buf[buf.len() - 2 * dims.n_max as usize..];
    // Agent 0 is blue with two teammates and two opponents.
    let tm: f64 = masks[..dims.n_max as usize].iter().sum();
    let op: f64 = masks[dims.n_max as usize..].iter().sum();
    assert_eq!((tm, op), (2.0, 2.0));
    unsafe { soccer_env_free(env) };
}

#[test]
fn invalid_arguments_report_status_and_message() {
    let env = make_env(0, 1, 1);
    let mut res = SoccerStepResult::default();
    unsafe {
        let a = [0.0; 5];
        assert_eq!(soccer_env_step(env, a.as_ptr(), 5, ptr::null_mut(), 0, &mut res), SoccerStatus::InvalidArgument);
        assert!(last_error().contains("expected 10"), "{}", last_error());

        let a = [2.0; 10];
        assert_eq!(soccer_env_step(env, a.as_ptr(), 10, ptr::null_mut(), 0, &mut res), SoccerStatus::InvalidArgument);

        let mut small = [0.0; 3];
        assert_eq!(soccer_env_state(env, small.as_mut_ptr(), 3), SoccerStatus::BufferTooSmall);
        assert_eq!(soccer_env_observe(env, 9, 0, small.as_mut_ptr(), 3), SoccerStatus::InvalidArgument);
        assert_eq!(soccer_env_step(env, ptr::null(), 10, ptr::null_mut(), 0, &mut res), SoccerStatus::NullPointer);
        assert_eq!(soccer_env_reset(ptr::null_mut(), 0), SoccerStatus::NullPointer);

        let mut other = ptr::null_mut();
        assert_eq!(soccer_env_create(ptr::null(), 0, 0, 1, &mut other), SoccerStatus::Config);
        assert!(other.is_null());
        let bad = CString::new("seed = \"x\"").unwrap();
        assert_eq!(soccer_env_create(bad.as_ptr(), 0, 1, 1, &mut other), SoccerStatus::Config);
        assert!(!last_error().is_empty());

        let missing = CString::new("/nonexistent/policy.ckpt").unwrap();
        let mut pol = ptr::null_mut();
        assert_ne!(soccer_policy_load(missing.as_ptr(), &mut pol), SoccerStatus::Ok);
        assert!(pol.is_null());

        soccer_env_free(env);
        soccer_env_free(ptr::null_mut());
        soccer_policy_free(ptr::null_mut());
    }
}

#[test]
fn reset_is_reproducible() {
    let env = make_env(5, 2, 1);
    unsafe {
        assert_eq!(soccer_env_reset(env, 77), SoccerStatus::Ok);
        let a = state(env);
        assert_eq!(soccer_env_reset(env, 78), SoccerStatus::Ok);
        assert_ne!(a, state(env));
        assert_eq!(soccer_env_reset(env, 77), SoccerStatus::Ok);
        assert_eq!(a, state(env));
        soccer_env_free(env);
    }
}

#[test]
fn policy_from_checkpoint_acts_and_matches_core_value() {
    let cfg = Config::default();
    let net = ActorCritic::<f32>::new(layout_for(&cfg), &mut instance_rng(1, 2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.ckpt");
    Checkpoint::policy_only(net.clone(), true).save(&path).unwrap();

    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut pol = ptr::null_mut();
    unsafe {
        assert_eq!(soccer_policy_load(cpath.as_ptr(), &mut pol), SoccerStatus::Ok, "{}", last_error());
        let env = make_env(9, 1, 1);
        let mut out = [f64::NAN; 5];
        assert_eq!(soccer_policy_act(pol, env, 0, 1, out.as_mut_ptr()), SoccerStatus::Ok);
        assert!(out.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(soccer_policy_act(pol, env, 1, 0, out.as_mut_ptr()), SoccerStatus::Ok);
        assert!(out.iter().all(|v| (-1.0..=1.0).contains(v)));

        let mut v = f64::NAN;
        assert_eq!(soccer_policy_value(pol, env, 0, &mut v), SoccerStatus::Ok);
        // Same world through the core API.
        let mut inst = soccer_core::game::GameInstance::spawn(
            &soccer_core::rules::SpawnSpec {
                field: cfg.field,
                n_blue: 1,
                n_red: 1,
                ball_band: soccer_core::rules::BallBand::FULL,
                curriculum_level: 0,
                rng_stream: 0,
            },
            &cfg,
            instance_rng(9, 0),
        )
        .unwrap();
        let expected = net.value_forward(&inst.observe(0, Role::Critic, &cfg));
        // The env advanced its rng through the stochastic act, which does not
        // touch critic observations.
        assert_eq!(v, expected);

        soccer_policy_free(pol);
        soccer_env_free(env);
    }
}

#[test]
fn remap_matches_core() {
    for &(x, y) in &[(0.0, 0.0), (1.0, 1.0), (-0.3, 0.8), (1.0, -1.0)] {
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(unsafe { soccer_remap(x, y, &mut a, &mut b) }, SoccerStatus::Ok);
        assert_eq!((a, b), remap_unit_disk(x, y));
    }
    let (mut a, mut b) = (0.0, 0.0);
    assert_eq!(unsafe { soccer_remap(1.5, 0.0, &mut a, &mut b) }, SoccerStatus::InvalidArgument);
}

#[test]
fn header_declares_the_api_and_parses_as_c() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/soccer.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "soccer_last_error",
        "soccer_env_create",
        "soccer_env_step",
        "soccer_env_observe",
        "soccer_policy_load",
        "soccer_policy_act",
        "SOCCER_STATUS_BUFFER_TOO_SMALL",
        "SOCCER_ACTION_DIM",
        "typedef struct SoccerEnv SoccerEnv",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
    // Syntax check with the system C compiler when one is installed.
    if let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99", "-Wall", "-Werror"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

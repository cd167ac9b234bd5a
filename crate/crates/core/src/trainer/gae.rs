use crate::error::{Result, SoccerError};

/// Generalised advantage estimation over one sequence.
///
/// `values` has one more entry than `rewards`: `values[t + 1]` is the value
/// of the state reached by transition `t`. For a time-limit termination this
/// is the terminal state's value, which is bootstrapped when
/// `bootstraps[t]` is set; for other terminations it is ignored.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstraps: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n + 1 || dones.len() != n || bootstraps.len() != n {
        return Err(SoccerError::LengthMismatch(format!(
            "rewards {n}, values {} (want {}), dones {}, bootstraps {}",
            values.len(),
            n + 1,
            dones.len(),
            bootstraps.len()
        )));
    }
    let mut adv = vec![0.0; n];
    let mut next = 0.0;
    for t in (0..n).rev() {
        let keep_value = if !dones[t] || bootstraps[t] { 1.0 } else { 0.0 };
        let keep_trace = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * keep_value - values[t];
        next = delta + gamma * lambda * keep_trace * next;
        adv[t] = next;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

/// Shifts and scales to zero mean and unit (population) standard deviation.
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len();
    if n < 2 {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n as f64;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if std < 1e-12 {
        adv.iter_mut().for_each(|a| *a -= mean);
        return;
    }
    adv.iter_mut().for_each(|a| *a = (*a - mean) / std);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_terminal_step() {
        let (a, r) = compute_gae(&[1.0], &[0.0, 5.0], &[true], &[false], 0.99, 0.95).unwrap();
        assert_eq!(a, vec![1.0]);
        assert_eq!(r, vec![1.0]);
    }

    #[test]
    fn all_zero() {
        let (a, _) = compute_gae(&[0.0; 4], &[0.0; 5], &[false; 4], &[false; 4], 0.9, 0.9).unwrap();
        assert!(a.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bootstrap_changes_timeout_advantage() {
        let r = [0.0, 0.0, 1.0];
        let v = [0.5, 0.5, 0.5, 2.0];
        let d = [false, false, true];
        let (with, _) = compute_gae(&r, &v, &d, &[false, false, true], 0.9, 0.95).unwrap();
        let (without, _) = compute_gae(&r, &v, &d, &[false, false, false], 0.9, 0.95).unwrap();
        assert!((with[2] - (1.0 + 0.9 * 2.0 - 0.5)).abs() < 1e-12);
        assert!((without[2] - 0.5).abs() < 1e-12);
        assert!(with[0] > without[0]);
    }

    #[test]
    fn length_mismatch_errors() {
        assert!(compute_gae(&[1.0, 2.0], &[0.0; 2], &[false; 2], &[false; 2], 0.9, 0.9).is_err());
    }

    #[test]
    fn normalization_moments() {
        let mut a: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).sin() * 3.0 + 1.0).collect();
        let argmax = |v: &[f64]| v.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).unwrap().0;
        let before = argmax(&a);
        normalize_advantages(&mut a);
        let mean = a.iter().sum::<f64>() / 50.0;
        let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 50.0).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-6);
        assert_eq!(argmax(&a), before);
    }
}

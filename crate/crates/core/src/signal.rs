//! Stateless transforms on reward and trajectory signals.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Added to the standard deviation before dividing.
pub const SCALE_EPS: f64 = 1e-8;

/// Z-score with the population (biased) standard deviation.
///
/// Constant input maps to all zeros.
pub fn scale(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let denom = var.sqrt() + SCALE_EPS;
    x.iter().map(|v| (v - mean) / denom).collect()
}

/// Zero every reward strictly after the first termination in its row.
///
/// Rows are population members (or environments), columns are time steps.
/// The reward at the terminating step itself is kept.
pub fn filter_rewards(rewards: &Array2<f64>, dones: &Array2<bool>) -> Result<Array2<f64>> {
    if rewards.dim() != dones.dim() {
        return Err(Error::invalid(format!(
            "rewards shape {:?} does not match dones shape {:?}",
            rewards.dim(),
            dones.dim()
        )));
    }
    let mut out = rewards.clone();
    for (mut row, done_row) in out.rows_mut().into_iter().zip(dones.rows()) {
        if let Some(first) = done_row.iter().position(|&d| d) {
            row.slice_mut(ndarray::s![first + 1..]).fill(0.0);
        }
    }
    Ok(out)
}

/// `G_t = sum_{k >= t} discount^(k - t) * r_k`.
pub fn discounted_returns(rewards: &[f64], discount: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (t, r) in rewards.iter().enumerate().rev() {
        acc = r + discount * acc;
        out[t] = acc;
    }
    out
}

/// Generalized advantage estimates.
///
/// `values` holds one more entry than `rewards`: the bootstrap value of the
/// state reached after the last step. A done step cuts both the bootstrap
/// and the trace.
pub fn gae(rewards: &[f64], values: &[f64], dones: &[bool], discount: f64, lam: f64) -> Result<Vec<f64>> {
    let t_len = rewards.len();
    if values.len() != t_len + 1 {
        return Err(Error::invalid(format!(
            "values must have length {} (rewards + 1), got {}",
            t_len + 1,
            values.len()
        )));
    }
    if dones.len() != t_len {
        return Err(Error::invalid(format!(
            "dones must have length {t_len}, got {}",
            dones.len()
        )));
    }
    if !(0.0..=1.0).contains(&discount) || !(0.0..=1.0).contains(&lam) {
        return Err(Error::invalid("discount and lambda must lie in [0, 1]"));
    }
    let mut adv = vec![0.0; t_len];
    let mut next = 0.0;
    for t in (0..t_len).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + discount * live * values[t + 1] - values[t];
        next = delta + discount * lam * live * next;
        adv[t] = next;
    }
    Ok(adv)
}

/// The three sample KL(p || q) estimators, from samples drawn from `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlEstimates {
    /// Unbiased, can be negative.
    pub k1: f64,
    /// Biased, low variance.
    pub k2: f64,
    /// Unbiased and nonnegative.
    pub k3: f64,
}

pub fn kl_sample_estimators(logp: &[f64], logq: &[f64]) -> Result<KlEstimates> {
    if logp.len() != logq.len() {
        return Err(Error::invalid(format!(
            "log-prob lengths differ: {} vs {}",
            logp.len(),
            logq.len()
        )));
    }
    if logp.is_empty() {
        return Err(Error::invalid("need at least one sample"));
    }
    let n = logp.len() as f64;
    let (mut k1, mut k2, mut k3) = (0.0, 0.0, 0.0);
    for (lp, lq) in logp.iter().zip(logq) {
        let log_ratio = lq - lp;
        k1 -= log_ratio;
        k2 += 0.5 * log_ratio * log_ratio;
        // exp_m1 keeps the difference accurate for small ratios.
        k3 += log_ratio.exp_m1() - log_ratio;
    }
    Ok(KlEstimates {
        k1: k1 / n,
        k2: k2 / n,
        k3: k3 / n,
    })
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    #[test]
    fn scale_hand_values() {
        let s = scale(&[1.0, 2.0, 3.0]);
        let expect = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((s[0] + expect).abs() < 1e-7 && s[1].abs() < 1e-15 && (s[2] - expect).abs() < 1e-7);
        assert!((s[2] - 1.224_744_871).abs() < 1e-6);
        assert_eq!(scale(&[5.0, 5.0, 5.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(scale(&[3.5]), vec![0.0]);
    }

    #[test]
    fn filter_rewards_cases() {
        let r = array![[1.0, 1.0, 1.0], [2.0, 3.0, 4.0], [5.0, 6.0, 7.0]];
        let d = array![[false, true, false], [false, false, false], [true, false, false]];
        let f = filter_rewards(&r, &d).unwrap();
        assert_eq!(f, array![[1.0, 1.0, 0.0], [2.0, 3.0, 4.0], [5.0, 0.0, 0.0]]);
        assert_eq!(filter_rewards(&f, &d).unwrap(), f);
        assert!(filter_rewards(&r, &array![[true]]).is_err());
    }

    #[test]
    fn discounted_returns_cases() {
        assert_eq!(discounted_returns(&[1.0, 1.0, 1.0], 0.5), vec![1.75, 1.5, 1.0]);
        assert_eq!(discounted_returns(&[3.0, -1.0], 0.0), vec![3.0, -1.0]);
        assert_eq!(discounted_returns(&[0.0; 4], 0.9), vec![0.0; 4]);
    }

    #[test]
    fn gae_cases() {
        let a = gae(&[1.0], &[0.5, 0.25], &[false], 1.0, 0.95).unwrap();
        assert!((a[0] - 0.75).abs() < 1e-15);
        let r = [1.0, -2.0, 0.5];
        let v = [0.1, 0.2, 0.3, 0.4];
        let d = [false, true, false];
        let a0 = gae(&r, &v, &d, 0.9, 0.0).unwrap();
        for t in 0..3 {
            let live = if d[t] { 0.0 } else { 1.0 };
            let delta = r[t] + 0.9 * live * v[t + 1] - v[t];
            assert!((a0[t] - delta).abs() < 1e-15);
        }
        assert!(gae(&r, &v[..3], &d, 0.9, 0.9).is_err());
        assert!(gae(&r, &v, &d[..2], 0.9, 0.9).is_err());
        assert!(gae(&r, &v, &d, 1.5, 0.9).is_err());
    }

    #[test]
    fn kl_estimator_cases() {
        let same = kl_sample_estimators(&[-1.0, -2.0], &[-1.0, -2.0]).unwrap();
        assert_eq!((same.k1, same.k2, same.k3), (0.0, 0.0, 0.0));
        let ln2 = 2f64.ln();
        let k = kl_sample_estimators(&[0.0], &[ln2]).unwrap();
        assert!((k.k1 + std::f64::consts::LN_2).abs() < 1e-8);
        assert!((k.k2 - 0.240_226_51).abs() < 1e-8);
        assert!((k.k3 - 0.306_852_82).abs() < 1e-8);
        assert!(kl_sample_estimators(&[0.0], &[0.0, 1.0]).is_err());
    }
}

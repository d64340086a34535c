//! Noise schedules, the forward corruption process, the diffusion-kernel
//! clean-data estimate, and the deterministic reverse (DDIM) step.
//!
//! Timesteps run `0..=T` with `t = 0` the clean end. The stored
//! `alphas_bar[i]` is the cumulative product through step `i`; the clean
//! boundary `alpha_bar(0) = 1` is implicit, which makes the final reverse
//! step land exactly on the clean-data estimate.

use crate::error::{Error, Result};
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;
use alloc::format;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Linear,
    Cosine,
}

/// The diffusion clock: per-step betas and their running products.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    kind: ScheduleKind,
    beta_min: f64,
    beta_max: f64,
    betas: Vec<f64>,
    alphas_bar: Vec<f64>,
}

/// A latent vector paired with its position on the diffusion clock.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub z: Tensor,
    pub t: usize,
}

impl NoiseSchedule {
    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn beta_min(&self) -> f64 {
        self.beta_min
    }

    pub fn beta_max(&self) -> f64 {
        self.beta_max
    }

    /// Number of diffusion steps `T`.
    pub fn timesteps(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alphas_bar(&self) -> &[f64] {
        &self.alphas_bar
    }

    /// Cumulative signal fraction at timestep `t` in `0..=T`, with the clean
    /// boundary `alpha_bar(0) = 1`.
    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        let t_max = self.timesteps();
        if t > t_max {
            return Err(Error::InvalidArgument(format!(
                "timestep {t} out of range 0..={t_max}"
            )));
        }
        Ok(if t == 0 { 1.0 } else { self.alphas_bar[t - 1] })
    }

    /// Rebuilds a schedule from stored arrays (checkpoint loading).
    pub fn from_parts(
        kind: ScheduleKind,
        beta_min: f64,
        beta_max: f64,
        betas: Vec<f64>,
        alphas_bar: Vec<f64>,
    ) -> Result<NoiseSchedule> {
        if betas.len() != alphas_bar.len() || betas.len() < 2 {
            return Err(Error::InvalidArgument(
                "schedule arrays must have equal length T >= 2".into(),
            ));
        }
        let s = NoiseSchedule {
            kind,
            beta_min,
            beta_max,
            betas,
            alphas_bar,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let mut prev = 1.0;
        for (i, (&b, &ab)) in self.betas.iter().zip(&self.alphas_bar).enumerate() {
            if !(0.0 < b && b < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "beta[{i}] = {b} outside (0, 1)"
                )));
            }
            if ab >= prev {
                return Err(Error::InvalidArgument(format!(
                    "alpha_bar not strictly decreasing at step {i}"
                )));
            }
            prev = ab;
        }
        Ok(())
    }
}

/// Builds a noise schedule of the given kind.
///
/// Linear interpolates beta from `beta_min` to `beta_max`. Cosine follows the
/// squared-cosine cumulative profile, converting to betas clipped to
/// `(1e-6, 0.999)`; the beta bounds are validated but only used by the linear
/// kind. Either way the cumulative products are recomputed by a running
/// product over the final betas.
pub fn make_schedule(
    kind: ScheduleKind,
    t_max: usize,
    beta_min: f64,
    beta_max: f64,
) -> Result<NoiseSchedule> {
    if t_max < 2 {
        return Err(Error::InvalidArgument(format!("T must be >= 2, got {t_max}")));
    }
    if !(0.0 < beta_min && beta_min <= beta_max && beta_max < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < beta_min <= beta_max < 1, got ({beta_min}, {beta_max})"
        )));
    }
    let betas: Vec<f64> = match kind {
        ScheduleKind::Linear => (0..t_max)
            .map(|t| beta_min + (beta_max - beta_min) * t as f64 / (t_max - 1) as f64)
            .collect(),
        ScheduleKind::Cosine => {
            let f = |u: f64| {
                let c = libm::cos((u + 0.008) / 1.008 * core::f64::consts::FRAC_PI_2);
                c * c
            };
            (0..t_max)
                .map(|t| {
                    let hi = f((t + 1) as f64 / t_max as f64);
                    let lo = f(t as f64 / t_max as f64);
                    (1.0 - hi / lo).clamp(1e-6, 0.999)
                })
                .collect()
        }
    };
    let mut alphas_bar = Vec::with_capacity(t_max);
    let mut prod = 1.0;
    for &b in &betas {
        prod *= 1.0 - b;
        alphas_bar.push(prod);
    }
    NoiseSchedule::from_parts(kind, beta_min, beta_max, betas, alphas_bar)
}

/// Corrupts clean data to timestep `t`: `sqrt(ab)*z0 + sqrt(1-ab)*eps`.
pub fn forward_sample(z0: &Tensor, t: usize, eps: &Tensor, sched: &NoiseSchedule) -> Result<Tensor> {
    if z0.shape() != eps.shape() {
        return Err(Error::ShapeMismatch {
            op: "forward_sample",
            left: z0.shape().to_vec(),
            right: eps.shape().to_vec(),
        });
    }
    let ab = sched.alpha_bar(t)?;
    let scaled_eps = eps.scale(libm::sqrt(1.0 - ab))?;
    z0.scale(libm::sqrt(ab))?.add(&scaled_eps)
}

/// Diffusion-kernel estimate of the clean data from a noisy state and a
/// noise prediction: `(z_t - sqrt(1-ab)*eps_hat) / sqrt(ab)`.
pub fn predict_z0(
    z_t: &Tensor,
    eps_hat: &Tensor,
    t: usize,
    sched: &NoiseSchedule,
) -> Result<Tensor> {
    if z_t.shape() != eps_hat.shape() {
        return Err(Error::ShapeMismatch {
            op: "predict_z0",
            left: z_t.shape().to_vec(),
            right: eps_hat.shape().to_vec(),
        });
    }
    let ab = sched.alpha_bar(t)?;
    if ab <= 0.0 {
        return Err(Error::InvalidArgument(
            "predict_z0: alpha_bar must be positive".into(),
        ));
    }
    let scaled_eps = eps_hat.scale(libm::sqrt(1.0 - ab))?;
    z_t.sub(&scaled_eps)?.scale(1.0 / libm::sqrt(ab))
}

/// Taped version of [`predict_z0`]; same arithmetic, so values are
/// bit-identical to the plain path.
pub fn predict_z0_on_tape(
    tape: &mut Tape,
    z_t: NodeId,
    eps_hat: NodeId,
    t: usize,
    sched: &NoiseSchedule,
) -> Result<NodeId> {
    let ab = sched.alpha_bar(t)?;
    if ab <= 0.0 {
        return Err(Error::InvalidArgument(
            "predict_z0: alpha_bar must be positive".into(),
        ));
    }
    let scaled_eps = tape.scale(eps_hat, libm::sqrt(1.0 - ab))?;
    let diff = tape.sub(z_t, scaled_eps)?;
    tape.scale(diff, 1.0 / libm::sqrt(ab))
}

/// One deterministic reverse step from `t` to `t-1`.
pub fn ddim_step(
    z_t: &Tensor,
    eps_hat: &Tensor,
    t: usize,
    sched: &NoiseSchedule,
) -> Result<LatentState> {
    if t == 0 {
        return Err(Error::InvalidArgument(
            "ddim_step: t = 0 has no predecessor".into(),
        ));
    }
    let z0_hat = predict_z0(z_t, eps_hat, t, sched)?;
    let ab_prev = sched.alpha_bar(t - 1)?;
    let z = z0_hat
        .scale(libm::sqrt(ab_prev))?
        .add(&eps_hat.scale(libm::sqrt(1.0 - ab_prev))?)?;
    Ok(LatentState { z, t: t - 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_sample, RngStream};

    fn linear_default() -> NoiseSchedule {
        make_schedule(ScheduleKind::Linear, 100, 1e-4, 0.02).unwrap()
    }

    #[test]
    fn linear_two_step_products() {
        let s = make_schedule(ScheduleKind::Linear, 2, 0.1, 0.2).unwrap();
        assert_eq!(s.betas(), &[0.1, 0.2]);
        assert!((s.alphas_bar()[0] - 0.9).abs() < 1e-15);
        assert!((s.alphas_bar()[1] - 0.72).abs() < 1e-15);
        assert_eq!(s.alpha_bar(0).unwrap(), 1.0);
    }

    #[test]
    fn alphas_strictly_decreasing() {
        for kind in [ScheduleKind::Linear, ScheduleKind::Cosine] {
            let s = make_schedule(kind, 100, 1e-4, 0.02).unwrap();
            let mut prev = 1.0;
            for &ab in s.alphas_bar() {
                assert!(ab < prev);
                prev = ab;
            }
        }
    }

    #[test]
    fn linear_matches_product_oracle() {
        let s = linear_default();
        let mut prod = 1.0;
        for t in 0..100 {
            let beta = 1e-4 + (0.02 - 1e-4) * t as f64 / 99.0;
            prod *= 1.0 - beta;
        }
        assert!((s.alphas_bar()[99] - prod).abs() < 1e-15);
    }

    #[test]
    fn invalid_bounds_rejected() {
        assert!(make_schedule(ScheduleKind::Linear, 1, 0.1, 0.2).is_err());
        assert!(make_schedule(ScheduleKind::Linear, 10, 0.0, 0.2).is_err());
        assert!(make_schedule(ScheduleKind::Linear, 10, 0.3, 0.2).is_err());
        assert!(make_schedule(ScheduleKind::Linear, 10, 0.3, 1.0).is_err());
    }

    #[test]
    fn forward_at_clean_end_is_identity() {
        let s = linear_default();
        let z0 = Tensor::vector(vec![1.0, -2.0, 0.5]).unwrap();
        let eps = Tensor::vector(vec![3.0, 3.0, 3.0]).unwrap();
        let out = forward_sample(&z0, 0, &eps, &s).unwrap();
        assert_eq!(out.data(), z0.data());
    }

    #[test]
    fn forward_direct_evaluation() {
        // alpha_bar(1) = 0.25 via beta_0 = 0.75
        let s = make_schedule(ScheduleKind::Linear, 2, 0.75, 0.75).unwrap();
        let z0 = Tensor::vector(vec![1.0]).unwrap();
        let eps = Tensor::vector(vec![2.0]).unwrap();
        let out = forward_sample(&z0, 1, &eps, &s).unwrap();
        let expect = 0.5 + (0.75f64).sqrt() * 2.0;
        assert!((out.data()[0] - expect).abs() < 1e-12);
        assert!((expect - 2.23205).abs() < 1e-5);
    }

    #[test]
    fn forward_moments_match_kernel() {
        // 1e4 draws at a fixed t: mean ~ sqrt(ab)*z0, var ~ 1-ab, within 3
        // sigma of the Monte Carlo estimators.
        let s = linear_default();
        let t = 60;
        let ab = s.alpha_bar(t).unwrap();
        let z0 = Tensor::vector(vec![1.5]).unwrap();
        let mut rng = RngStream::new(99);
        let n = 10_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let eps = gaussian_sample(&[1], &mut rng).unwrap();
            let v = forward_sample(&z0, t, &eps, &s).unwrap().data()[0];
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let expect_mean = ab.sqrt() * 1.5;
        let expect_var = 1.0 - ab;
        let mean_tol = 3.0 * (expect_var / n as f64).sqrt();
        let var_tol = 3.0 * expect_var * (2.0 / n as f64).sqrt();
        assert!((mean - expect_mean).abs() < mean_tol, "mean {mean}");
        assert!((var - expect_var).abs() < var_tol, "var {var}");
    }

    #[test]
    fn predict_inverts_forward() {
        let s = linear_default();
        let mut rng = RngStream::new(5);
        for t in [1usize, 17, 50, 99, 100] {
            let z0 = gaussian_sample(&[8], &mut rng).unwrap();
            let eps = gaussian_sample(&[8], &mut rng).unwrap();
            let z_t = forward_sample(&z0, t, &eps, &s).unwrap();
            let back = predict_z0(&z_t, &eps, t, &s).unwrap();
            for (a, b) in back.data().iter().zip(z0.data()) {
                assert!((a - b).abs() < 1e-12, "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn predict_with_zero_eps() {
        let s = linear_default();
        let z_t = Tensor::vector(vec![2.0, -4.0]).unwrap();
        let eps = Tensor::zeros(&[2]);
        let t = 40;
        let ab = s.alpha_bar(t).unwrap();
        let out = predict_z0(&z_t, &eps, t, &s).unwrap();
        for (o, z) in out.data().iter().zip(z_t.data()) {
            assert!((o - z / ab.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn predict_matches_second_derivation() {
        // Independent rearrangement: z_t/sqrt(ab) - sqrt(1/ab - 1)*eps_hat.
        let s = linear_default();
        let mut rng = RngStream::new(6);
        let z_t = gaussian_sample(&[16], &mut rng).unwrap();
        let eps = gaussian_sample(&[16], &mut rng).unwrap();
        for t in [1usize, 33, 100] {
            let ab = s.alpha_bar(t).unwrap();
            let reference: Vec<f64> = z_t
                .data()
                .iter()
                .zip(eps.data())
                .map(|(&z, &e)| z / ab.sqrt() - (1.0 / ab - 1.0).sqrt() * e)
                .collect();
            let out = predict_z0(&z_t, &eps, t, &s).unwrap();
            for (a, b) in out.data().iter().zip(&reference) {
                assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn taped_predict_matches_plain_bitwise() {
        let s = linear_default();
        let mut rng = RngStream::new(8);
        let z_t = gaussian_sample(&[8], &mut rng).unwrap();
        let eps = gaussian_sample(&[8], &mut rng).unwrap();
        let plain = predict_z0(&z_t, &eps, 42, &s).unwrap();
        let mut tape = Tape::new();
        let z_id = tape.var(z_t);
        let e_id = tape.constant(eps);
        let out = predict_z0_on_tape(&mut tape, z_id, e_id, 42, &s).unwrap();
        assert_eq!(tape.value(out).data(), plain.data());
    }

    #[test]
    fn ddim_final_step_returns_estimate() {
        let s = linear_default();
        let mut rng = RngStream::new(11);
        let z = gaussian_sample(&[4], &mut rng).unwrap();
        let eps = gaussian_sample(&[4], &mut rng).unwrap();
        let state = ddim_step(&z, &eps, 1, &s).unwrap();
        let estimate = predict_z0(&z, &eps, 1, &s).unwrap();
        assert_eq!(state.t, 0);
        assert_eq!(state.z.data(), estimate.data());
    }

    #[test]
    fn ddim_at_zero_is_error() {
        let s = linear_default();
        let z = Tensor::vector(vec![1.0]).unwrap();
        assert!(ddim_step(&z, &z, 0, &s).is_err());
    }

    #[test]
    fn ddim_with_true_noise_walks_forward_trajectory() {
        let s = linear_default();
        let mut rng = RngStream::new(13);
        let z0 = gaussian_sample(&[6], &mut rng).unwrap();
        let eps = gaussian_sample(&[6], &mut rng).unwrap();
        for t in [2usize, 50, 100] {
            let z_t = forward_sample(&z0, t, &eps, &s).unwrap();
            let stepped = ddim_step(&z_t, &eps, t, &s).unwrap();
            let direct = forward_sample(&z0, t - 1, &eps, &s).unwrap();
            for (a, b) in stepped.z.data().iter().zip(direct.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_denoiser_rollout_recovers_z0() {
        // Full T-step reverse loop feeding the exact noise consistent with
        // each state; must land on z0 to 1e-10.
        let s = linear_default();
        let t_max = s.timesteps();
        let mut rng = RngStream::new(21);
        let z0 = gaussian_sample(&[8], &mut rng).unwrap();
        let eps = gaussian_sample(&[8], &mut rng).unwrap();
        let mut state = LatentState {
            z: forward_sample(&z0, t_max, &eps, &s).unwrap(),
            t: t_max,
        };
        while state.t > 0 {
            let ab = s.alpha_bar(state.t).unwrap();
            let oracle_eps: Vec<f64> = state
                .z
                .data()
                .iter()
                .zip(z0.data())
                .map(|(&zt, &z)| (zt - ab.sqrt() * z) / (1.0 - ab).sqrt())
                .collect();
            let oracle_eps = Tensor::vector(oracle_eps).unwrap();
            state = ddim_step(&state.z, &oracle_eps, state.t, &s).unwrap();
        }
        for (a, b) in state.z.data().iter().zip(z0.data()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

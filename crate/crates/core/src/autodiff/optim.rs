use crate::error::{Error, Result};

use super::{ParamStore, Scalar};

/// RMSprop with classical momentum applied to the preconditioned step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmsProp {
    pub momentum: f64,
    pub rho: f64,
    pub eps: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        Self {
            momentum: 0.6,
            rho: 0.9,
            eps: 1e-6,
        }
    }
}

impl RmsProp {
    pub fn new(momentum: f64) -> Self {
        Self {
            momentum,
            ..Self::default()
        }
    }

    /// Apply one update to every trainable parameter.
    ///
    /// Non-finite gradients abort the whole step before any value changes.
    pub fn step<T: Scalar>(&self, params: &mut ParamStore<T>, lr: f64) -> Result<()> {
        if let Some(bad) = params
            .iter()
            .filter(|p| p.trainable)
            .find(|p| !p.grad.all_finite())
        {
            return Err(Error::NonFiniteGradient(bad.name.clone()));
        }
        let rho = T::from_f64(self.rho);
        let one_minus_rho = T::from_f64(1.0 - self.rho);
        let eps = T::from_f64(self.eps);
        let mu = T::from_f64(self.momentum);
        let lr = T::from_f64(lr);
        for p in params.iter_mut().filter(|p| p.trainable) {
            let grad = p.grad.data();
            let rms = p.rms_cache.data_mut();
            for (r, &g) in rms.iter_mut().zip(grad) {
                *r = rho * *r + one_minus_rho * g * g;
            }
            let rms = p.rms_cache.data();
            let mom = p.momentum_cache.data_mut();
            for ((m, &g), &r) in mom.iter_mut().zip(grad).zip(rms) {
                *m = mu * *m + lr * g / (r + eps).sqrt();
            }
            let mom = p.momentum_cache.data();
            for (v, &s) in p.value.data_mut().iter_mut().zip(mom) {
                *v = *v - s;
            }
        }
        Ok(())
    }
}

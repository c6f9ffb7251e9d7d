use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest spatial dimension any field in the crate can be evaluated in.
///
/// Grids and the evolution solver stop at three dimensions; the fourth is
/// only used by the stationary families in the summability analysis.
pub const MAX_DIM: usize = 4;

/// The exponent `p` and spatial dimension `n` of the slow-diffusion equation
/// `v_t = div(|grad v|^{p-2} grad v)`, together with the Barenblatt exponent
/// `lambda = n(p-2) + p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MediumParams {
    p: f64,
    n: usize,
    lambda: f64,
}

impl MediumParams {
    pub fn new(p: f64, n: usize) -> Result<Self> {
        if !(p > 2.0) || !p.is_finite() {
            return Err(Error::NotSlowDiffusion(p));
        }
        if n == 0 || n > MAX_DIM {
            return Err(Error::UnsupportedDimension(n));
        }
        Ok(Self {
            p,
            n,
            lambda: n as f64 * (p - 2.0) + p,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Time exponent `1/(p-2)` of the separable blow-up.
    pub fn blowup_exponent(&self) -> f64 {
        1.0 / (self.p - 2.0)
    }

    /// Upper end `p - 1 + p/n` of the void gap.
    pub fn class_b_exponent(&self) -> f64 {
        self.p - 1.0 + self.p / self.n as f64
    }

    /// Lower end `p - 2` of the void gap.
    pub fn class_m_exponent(&self) -> f64 {
        self.p - 2.0
    }

    /// Critical gradient exponent `p - 1 + 1/(n+1)` for class B functions.
    pub fn gradient_exponent(&self) -> f64 {
        self.p - 1.0 + 1.0 / (self.n as f64 + 1.0)
    }
}

#[derive(Deserialize)]
struct RawParams {
    p: f64,
    n: usize,
}

impl<'de> Deserialize<'de> for MediumParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawParams::deserialize(d)?;
        MediumParams::new(raw.p, raw.n).map_err(serde::de::Error::custom)
    }
}

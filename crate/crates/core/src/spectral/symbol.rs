use std::fmt;
use std::str::FromStr;

use super::SpectralError;

/// Cubic smoothstep `t²(3 - 2t)` clamped to `[0, 1]`.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Transition profile of the multiplier symbol on `1 < r < 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Blend {
    /// `log m(r) = w(r - 1)·(s - 1)·log r` with `w` the cubic smoothstep.
    #[default]
    LogSmoothstep,
}

impl Blend {
    pub fn identifier(&self) -> &'static str {
        match self {
            Blend::LogSmoothstep => "log-smoothstep-c1",
        }
    }
}

impl fmt::Display for Blend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.identifier())
    }
}

impl FromStr for Blend {
    type Err = SpectralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log-smoothstep-c1" => Ok(Blend::LogSmoothstep),
            other => Err(SpectralError::InvalidMultiplier(format!("unknown blend '{other}'"))),
        }
    }
}

/// Parameters of the smoothing operator `I_N`, whose symbol is `m(ξ/N)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplierSpec {
    s: f64,
    cutoff: f64,
    blend: Blend,
}

impl MultiplierSpec {
    pub fn new(s: f64, cutoff: f64) -> Result<Self, SpectralError> {
        Self::with_blend(s, cutoff, Blend::default())
    }

    pub fn with_blend(s: f64, cutoff: f64, blend: Blend) -> Result<Self, SpectralError> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(SpectralError::InvalidMultiplier(format!("regularity {s} not in (0, 1]")));
        }
        if !(cutoff.is_finite() && cutoff >= 1.0) {
            return Err(SpectralError::InvalidMultiplier(format!("cutoff {cutoff} must be >= 1")));
        }
        Ok(Self { s, cutoff, blend })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn blend(&self) -> Blend {
        self.blend
    }

    /// The radial profile `m(r)`: 1 for `r ≤ 1`, `r^{s-1}` for `r ≥ 2`.
    pub fn profile(&self, r: f64) -> f64 {
        if r <= 1.0 {
            return 1.0;
        }
        let exponent = self.s - 1.0;
        if r >= 2.0 {
            return r.powf(exponent);
        }
        match self.blend {
            Blend::LogSmoothstep => (smoothstep(r - 1.0) * exponent * r.ln()).exp(),
        }
    }

    /// Symbol of `I_N` at frequency magnitude `|ξ|`.
    pub fn symbol(&self, xi_norm: f64) -> f64 {
        self.profile(xi_norm / self.cutoff)
    }
}

/// Low-pass symbol for the smooth frequency split at `cutoff`:
/// 1 on `|ξ| ≤ cutoff/2`, 0 on `|ξ| ≥ cutoff`.
pub fn low_pass_symbol(xi_norm: f64, cutoff: f64) -> f64 {
    let half = 0.5 * cutoff;
    if xi_norm <= half {
        1.0
    } else if xi_norm >= cutoff {
        0.0
    } else {
        1.0 - smoothstep((xi_norm - half) / half)
    }
}

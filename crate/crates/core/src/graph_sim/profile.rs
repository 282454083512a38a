use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Initial datum on one edge, as a function of the distance `x ≥ 0` from the vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    /// `A·e^{−((x−c)/w)²}·e^{ikx}`.
    Gaussian {
        #[serde(default = "unit_amplitude")]
        amplitude: [f64; 2],
        center: f64,
        width: f64,
        #[serde(default)]
        wavenumber: f64,
    },
    /// `A·x⁴e^{−x²}`, whose first four derivatives vanish at the vertex.
    QuarticGaussian {
        #[serde(default = "unit_amplitude")]
        amplitude: [f64; 2],
    },
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

impl Profile {
    pub fn gaussian(center: f64, width: f64) -> Self {
        Profile::Gaussian {
            amplitude: unit_amplitude(),
            center,
            width,
            wavenumber: 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        match *self {
            Profile::Zero => C64::new(0.0, 0.0),
            Profile::Gaussian {
                amplitude,
                center,
                width,
                wavenumber,
            } => {
                let s = (x - center) / width;
                C64::new(amplitude[0], amplitude[1]) * C64::from_polar((-s * s).exp(), wavenumber * x)
            }
            Profile::QuarticGaussian { amplitude } => {
                C64::new(amplitude[0], amplitude[1]) * (x.powi(4) * (-x * x).exp())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Profile::Zero => true,
            Profile::Gaussian {
                amplitude,
                center,
                width,
                wavenumber,
            } => {
                amplitude.iter().chain([center, wavenumber].iter()).all(|v| v.is_finite())
                    && width.is_finite()
                    && width > 0.0
            }
            Profile::QuarticGaussian { amplitude } => amplitude.iter().all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("profile {self:?}")))
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Profile::Zero => true,
            Profile::Gaussian { amplitude, .. } | Profile::QuarticGaussian { amplitude } => {
                amplitude == [0.0, 0.0]
            }
        }
    }
}

use super::NoiseSpec;
use crate::error::{Result, VfmError};

/// Noise standard deviation and its partial derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEval {
    pub std: f64,
    /// `dg/dz`.
    pub d_z: f64,
    /// `dg/dpsi_1`, `dg/dpsi_2` (unused entries are zero).
    pub d_psi: [f64; 2],
}

impl NoiseEval {
    /// Unchecked evaluation; `psi` must have the length the spec requires.
    #[inline]
    pub(crate) fn eval(z: f64, psi: &[f64], spec: &NoiseSpec) -> NoiseEval {
        match *spec {
            NoiseSpec::FixedHomoscedastic { sigma } => NoiseEval {
                std: sigma,
                d_z: 0.0,
                d_psi: [0.0, 0.0],
            },
            NoiseSpec::LearnedHomoscedastic => {
                let s = psi[0].exp();
                NoiseEval {
                    std: s,
                    d_z: 0.0,
                    d_psi: [s, 0.0],
                }
            }
            NoiseSpec::LearnedHeteroscedastic { offset } => {
                let floor = psi[0].exp();
                let slope = psi[1].exp();
                let shifted = z + offset;
                // Subgradient of |.| at zero is taken as zero.
                let sign = if shifted > 0.0 {
                    1.0
                } else if shifted < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                NoiseEval {
                    std: slope * shifted.abs() + floor,
                    d_z: slope * sign,
                    d_psi: [floor, slope * shifted.abs()],
                }
            }
        }
    }
}

/// Noise standard deviation `g(z, psi)`.
pub fn noise_std(z: f64, psi: &[f64], spec: &NoiseSpec) -> Result<f64> {
    if psi.len() != spec.num_params() {
        return Err(VfmError::dim("noise parameters", spec.num_params(), psi.len()));
    }
    if psi.iter().any(|p| !p.is_finite()) || !z.is_finite() {
        return Err(VfmError::NonFiniteInput("noise_std"));
    }
    spec.validate()?;
    Ok(NoiseEval::eval(z, psi, spec).std)
}

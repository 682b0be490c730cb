use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Propagation {
    /// Deterministic reception within `range` metres.
    UnitDisk { range: f64 },
    /// Nakagami-m fading around a power-law mean, calibrated so the mean
    /// received power equals the reception threshold exactly at `range`.
    Nakagami {
        m: f64,
        range: f64,
        path_loss_exponent: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub propagation: Propagation,
    /// Bits per second.
    pub data_rate: f64,
}

impl ChannelModel {
    pub fn unit_disk(range: f64) -> Self {
        ChannelModel {
            propagation: Propagation::UnitDisk { range },
            data_rate: 2_000_000.0,
        }
    }

    pub fn nakagami(m: f64, range: f64) -> Self {
        ChannelModel {
            propagation: Propagation::Nakagami {
                m,
                range,
                path_loss_exponent: 2.0,
            },
            data_rate: 2_000_000.0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.data_rate > 0.0) {
            return Err(ConfigError::new("data_rate", "must be strictly positive"));
        }
        match self.propagation {
            Propagation::UnitDisk { range } if !(range > 0.0) => {
                Err(ConfigError::new("range", "must be strictly positive"))
            }
            Propagation::Nakagami { m, range, path_loss_exponent } => {
                if !(m >= 0.5) {
                    Err(ConfigError::new("nakagami_m", "shape must be at least 0.5"))
                } else if !(range > 0.0) {
                    Err(ConfigError::new("range", "must be strictly positive"))
                } else if !(path_loss_exponent > 0.0) {
                    Err(ConfigError::new("path_loss_exponent", "must be strictly positive"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Range used for carrier sensing and interference.
    pub fn nominal_range(&self) -> f64 {
        match self.propagation {
            Propagation::UnitDisk { range } | Propagation::Nakagami { range, .. } => range,
        }
    }

    /// Distance beyond which reception probability is treated as zero.
    pub fn max_reach(&self) -> f64 {
        match self.propagation {
            Propagation::UnitDisk { range } => range,
            Propagation::Nakagami { range, .. } => {
                // Q(m, ·) is decreasing; bisect for the 1e-9 tail.
                let (mut lo, mut hi) = (range, range * 2.0);
                while reception_probability(hi, self) > 1e-9 {
                    lo = hi;
                    hi *= 2.0;
                }
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if reception_probability(mid, self) > 1e-9 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }
}

/// Probability that a frame sent over `distance` metres is received.
///
/// Nakagami: received power is Gamma(m, mean/m) distributed, so the chance of
/// clearing the threshold is the regularised upper incomplete gamma
/// `Q(m, m·(d/R)^α)`.
pub fn reception_probability(distance: f64, channel: &ChannelModel) -> f64 {
    match channel.propagation {
        Propagation::UnitDisk { range } => {
            if distance <= range {
                1.0
            } else {
                0.0
            }
        }
        Propagation::Nakagami {
            m,
            range,
            path_loss_exponent,
        } => {
            if distance <= 0.0 {
                return 1.0;
            }
            let r = distance / range;
            let x = if path_loss_exponent == 2.0 {
                m * r * r
            } else {
                m * r.powf(path_loss_exponent)
            };
            upper_regularized_gamma(m, x)
        }
    }
}

fn upper_regularized_gamma(a: f64, x: f64) -> f64 {
    // Integer shapes have a short closed form; it is also much cheaper than
    // the general series and is the common case (m = 1, m = 3).
    if a.fract() == 0.0 && a <= 64.0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..a as u32 {
            term *= x / f64::from(k);
            sum += term;
        }
        return ((-x).exp() * sum).clamp(0.0, 1.0);
    }
    gamma_ur(a, x).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_disk_is_a_step() {
        let c = ChannelModel::unit_disk(250.0);
        assert_eq!(reception_probability(100.0, &c), 1.0);
        assert_eq!(reception_probability(250.0, &c), 1.0);
        assert_eq!(reception_probability(251.0, &c), 0.0);
    }

    #[test]
    fn rayleigh_case_at_nominal_range() {
        let c = ChannelModel::nakagami(1.0, 250.0);
        assert_abs_diff_eq!(reception_probability(250.0, &c), (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn integer_closed_form_agrees_with_general_gamma() {
        for m in [1.0, 2.0, 3.0, 7.0] {
            for x in [0.01, 0.5, 1.0, 3.0, 10.0] {
                assert_abs_diff_eq!(upper_regularized_gamma(m, x), gamma_ur(m, x), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn large_shape_approaches_step() {
        // With α = 2 the m = 50 curve is still soft (0.918 at 0.9R, 0.075 at
        // 1.1R); the 0.99 / 0.01 band is reached at α = 4, or at m = 200.
        let steep = ChannelModel {
            propagation: Propagation::Nakagami {
                m: 50.0,
                range: 250.0,
                path_loss_exponent: 4.0,
            },
            ..ChannelModel::nakagami(50.0, 250.0)
        };
        assert!(reception_probability(0.9 * 250.0, &steep) > 0.99);
        assert!(reception_probability(1.1 * 250.0, &steep) < 0.01);

        let c = ChannelModel::nakagami(50.0, 250.0);
        assert_abs_diff_eq!(reception_probability(0.9 * 250.0, &c), 0.917_966_774_461, epsilon = 1e-9);
        assert_abs_diff_eq!(reception_probability(1.1 * 250.0, &c), 0.075_146_601_008, epsilon = 1e-9);
        let c = ChannelModel::nakagami(200.0, 250.0);
        assert!(reception_probability(0.9 * 250.0, &c) > 0.99);
        assert!(reception_probability(1.1 * 250.0, &c) < 0.01);
    }

    #[test]
    fn validation() {
        assert!(ChannelModel::nakagami(0.4, 250.0).validate().is_err());
        assert!(ChannelModel::nakagami(0.5, 250.0).validate().is_ok());
        assert!(ChannelModel::unit_disk(0.0).validate().is_err());
    }

    #[test]
    fn reach_bounds_the_tail() {
        let c = ChannelModel::nakagami(1.0, 250.0);
        let r = c.max_reach();
        assert!(reception_probability(r, &c) <= 1e-9);
        assert!(reception_probability(r * 0.99, &c) > 1e-9);
        assert_eq!(ChannelModel::unit_disk(250.0).max_reach(), 250.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn non_increasing_in_distance(m in 0.5f64..20.0, d in 0.0f64..1000.0, step in 0.0f64..200.0) {
                let c = ChannelModel::nakagami(m, 250.0);
                let near = reception_probability(d, &c);
                let far = reception_probability(d + step, &c);
                prop_assert!((0.0..=1.0).contains(&near));
                prop_assert!(far <= near + 1e-12);
            }
        }
    }
}

//! Modulation classes and symbol alphabets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// The five-class problem: analog AM plus four linear digital formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModClass {
    Am,
    Psk2,
    Psk4,
    Psk8,
    Qam16,
}

impl ModClass {
    /// Confusion-matrix row order C1..C5.
    pub const ALL: [ModClass; 5] = [
        ModClass::Psk2,
        ModClass::Psk4,
        ModClass::Psk8,
        ModClass::Qam16,
        ModClass::Am,
    ];

    pub fn is_digital(&self) -> bool {
        !matches!(self, ModClass::Am)
    }

    /// Row/column index in the C1..C5 ordering.
    pub fn matrix_index(&self) -> usize {
        match self {
            ModClass::Psk2 => 0,
            ModClass::Psk4 => 1,
            ModClass::Psk8 => 2,
            ModClass::Qam16 => 3,
            ModClass::Am => 4,
        }
    }
}

impl fmt::Display for ModClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModClass::Am => "AM",
            ModClass::Psk2 => "2-PSK",
            ModClass::Psk4 => "4-PSK",
            ModClass::Psk8 => "8-PSK",
            ModClass::Qam16 => "16-QAM",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for ModClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "am" => Ok(ModClass::Am),
            "psk2" | "2psk" | "2-psk" | "bpsk" => Ok(ModClass::Psk2),
            "psk4" | "4psk" | "4-psk" | "qpsk" => Ok(ModClass::Psk4),
            "psk8" | "8psk" | "8-psk" => Ok(ModClass::Psk8),
            "qam16" | "16qam" | "16-qam" => Ok(ModClass::Qam16),
            other => Err(Error::InvalidParameter(format!(
                "unknown modulation class '{other}'"
            ))),
        }
    }
}

/// A unit-power, zero-mean symbol alphabet.
#[derive(Debug, Clone)]
pub struct Constellation {
    pub points: Vec<Complex64>,
    pub class: ModClass,
}

/// Build the standard alphabet for a digital class: M-PSK points
/// `exp(j 2 pi k / M)` and the 16-QAM square grid `{±1, ±3}^2 / sqrt(10)`.
pub fn make_constellation(class: ModClass) -> Result<Constellation> {
    let points = match class {
        ModClass::Am => return Err(Error::NoConstellation),
        ModClass::Psk2 => psk_points(2),
        ModClass::Psk4 => psk_points(4),
        ModClass::Psk8 => psk_points(8),
        ModClass::Qam16 => {
            let levels = [-3.0, -1.0, 1.0, 3.0];
            let scale = 10.0_f64.sqrt();
            levels
                .iter()
                .flat_map(|&re| {
                    levels
                        .iter()
                        .map(move |&im| Complex64::new(re / scale, im / scale))
                })
                .collect()
        }
    };
    Ok(Constellation { points, class })
}

fn psk_points(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64))
        .collect()
}

impl Constellation {
    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// Exhaustive alphabet average of `f`.
    pub fn expect<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Complex64 {
        let sum: Complex64 = self.points.iter().map(|&p| f(p)).sum();
        sum / self.points.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn am_has_no_constellation() {
        assert!(matches!(
            make_constellation(ModClass::Am),
            Err(Error::NoConstellation)
        ));
    }

    #[test]
    fn psk2_is_antipodal_pair() {
        let c = make_constellation(ModClass::Psk2).unwrap();
        assert_eq!(c.order(), 2);
        assert!((c.points[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((c.points[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn all_digital_alphabets_unit_power_zero_mean() {
        for class in [ModClass::Psk2, ModClass::Psk4, ModClass::Psk8, ModClass::Qam16] {
            let c = make_constellation(class).unwrap();
            let mean = c.expect(|p| p);
            let power = c.expect(|p| Complex64::new(p.norm_sqr(), 0.0));
            assert!(mean.norm() < 1e-14, "{class}: mean {mean}");
            assert!((power.re - 1.0).abs() < 1e-14, "{class}: power {power}");
        }
    }

    #[test]
    fn qam16_fourth_moment() {
        // Exhaustive average over the 16 points of the {±1,±3}/sqrt(10) grid.
        let c = make_constellation(ModClass::Qam16).unwrap();
        let e4 = c.expect(|p| p.powi(4));
        assert!((e4.re - (-0.68)).abs() < 1e-12, "E[p^4] = {e4}");
        assert!(e4.im.abs() < 1e-12);
    }

    #[test]
    fn psk8_vanishing_moments() {
        // Exhaustive sums of powers of the 8th roots of unity.
        let c = make_constellation(ModClass::Psk8).unwrap();
        assert!(c.expect(|p| p.powi(2)).norm() < 1e-14);
        assert!(c.expect(|p| p.powi(4)).norm() < 1e-14);
    }
}

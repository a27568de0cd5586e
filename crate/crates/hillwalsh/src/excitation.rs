//! The Hill problem and its periodic excitation p(t): built-in families plus
//! sampled-data tables, all defined on the normalized phase s in [0,1) and
//! evaluated as p(tau * s). Step-valued excitations are right-continuous.

use std::f64::consts::TAU as TWO_PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HillError, Result};

/// Periodic excitation on normalized phase [0,1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Excitation {
    /// cos(2 pi s); with tau = 2 pi this is cos(t).
    Cosine,
    /// Sum of a_i cos(2 pi n_i s) over (amplitude, harmonic) pairs.
    CosineSum(Vec<(f64, u32)>),
    /// hi on [0, duty), lo on [duty, 1).
    SquareWave { hi: f64, lo: f64, duty: f64 },
    /// Zero-order hold over a power-of-two number of uniform cells.
    SampledTable(Vec<f64>),
}

impl Excitation {
    /// Value at normalized phase s in [0,1); right-continuous steps.
    pub fn eval_phase(&self, s: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&s), "phase {s} out of range");
        match self {
            Excitation::Cosine => (TWO_PI * s).cos(),
            Excitation::CosineSum(terms) => terms
                .iter()
                .map(|&(a, n)| a * (TWO_PI * n as f64 * s).cos())
                .sum(),
            Excitation::SquareWave { hi, lo, duty } => {
                if s < *duty {
                    *hi
                } else {
                    *lo
                }
            }
            Excitation::SampledTable(vals) => {
                let cell = ((s * vals.len() as f64) as usize).min(vals.len() - 1);
                vals[cell]
            }
        }
    }

    /// Left limit at normalized phase s in (0,1]; used by the integrator so a
    /// stage landing exactly on a step boundary sees the segment it closes.
    pub fn eval_phase_left(&self, s: f64) -> f64 {
        match self {
            Excitation::Cosine | Excitation::CosineSum(_) => {
                self.eval_phase(if s >= 1.0 { 0.0 } else { s })
            }
            Excitation::SquareWave { hi, lo, duty } => {
                if s <= *duty {
                    *hi
                } else {
                    *lo
                }
            }
            Excitation::SampledTable(vals) => {
                let scaled = s * vals.len() as f64;
                let mut cell = scaled.ceil() as usize;
                if cell == 0 {
                    cell = 1;
                }
                vals[(cell - 1).min(vals.len() - 1)]
            }
        }
    }

    /// Interior discontinuity phases in (0,1), in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Excitation::Cosine | Excitation::CosineSum(_) => Vec::new(),
            Excitation::SquareWave { duty, .. } => {
                if *duty > 0.0 && *duty < 1.0 {
                    vec![*duty]
                } else {
                    Vec::new()
                }
            }
            Excitation::SampledTable(vals) => (1..vals.len())
                .map(|i| i as f64 / vals.len() as f64)
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Excitation::Cosine => Ok(()),
            Excitation::CosineSum(terms) => {
                if terms.is_empty() {
                    return Err(HillError::Domain("cosine sum with no terms".into()));
                }
                if terms.iter().any(|(a, _)| !a.is_finite()) {
                    return Err(HillError::Domain("non-finite cosine amplitude".into()));
                }
                Ok(())
            }
            Excitation::SquareWave { hi, lo, duty } => {
                if !hi.is_finite() || !lo.is_finite() {
                    return Err(HillError::Domain("non-finite square wave level".into()));
                }
                if !(0.0..=1.0).contains(duty) {
                    return Err(HillError::Domain(format!(
                        "square wave duty {duty} outside [0,1]"
                    )));
                }
                Ok(())
            }
            Excitation::SampledTable(vals) => {
                if vals.is_empty() || !vals.len().is_power_of_two() {
                    return Err(HillError::Size(format!(
                        "sampled table length {} is not a power of two",
                        vals.len()
                    )));
                }
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(HillError::Domain("non-finite table value".into()));
                }
                Ok(())
            }
        }
    }

    /// Loads a table from a plain-text file, one decimal value per line;
    /// blank lines are ignored. The count must be a power of two.
    pub fn table_from_file(path: &Path) -> Result<Excitation> {
        let text = std::fs::read_to_string(path)?;
        let mut vals = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                HillError::Domain(format!(
                    "{}:{}: not a decimal value: {line:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            vals.push(v);
        }
        let exc = Excitation::SampledTable(vals);
        exc.validate()?;
        Ok(exc)
    }
}

/// The equation x'' + (alpha + beta p(t)) x = 0 with tau-periodic p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillProblem {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub excitation: Excitation,
}

impl HillProblem {
    pub fn new(alpha: f64, beta: f64, tau: f64, excitation: Excitation) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(HillError::Domain(format!("tau must be positive, got {tau}")));
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(HillError::Domain("alpha and beta must be finite".into()));
        }
        excitation.validate()?;
        Ok(HillProblem {
            alpha,
            beta,
            tau,
            excitation,
        })
    }

    /// q(t) = alpha + beta p(t).
    pub fn q(&self, t: f64) -> f64 {
        self.alpha + self.beta * eval_p(self, t)
    }
}

/// p(t) for any real t, by periodic extension.
pub fn eval_p(problem: &HillProblem, t: f64) -> f64 {
    let mut s = (t / problem.tau).rem_euclid(1.0);
    if s >= 1.0 {
        s = 0.0; // rem_euclid can return exactly 1.0 for tiny negative t
    }
    problem.excitation.eval_phase(s)
}

/// Right-endpoint samples p_n = p(n tau / 2^k) for n = 1..2^k; the last
/// sample wraps to p(0). Phases are formed as exact dyadic fractions so step
/// excitations align bit-exactly with the grid.
pub fn sample_p(problem: &HillProblem, k: u32) -> Result<Vec<f64>> {
    if !(1..=20).contains(&k) {
        return Err(HillError::Size(format!(
            "sample order exponent k={k} outside supported range 1..=20"
        )));
    }
    let n = 1usize << k;
    let scale = 1.0 / n as f64;
    let samples = (1..=n)
        .map(|i| {
            let s = if i == n { 0.0 } else { i as f64 * scale };
            problem.excitation.eval_phase(s)
        })
        .collect();
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mathieu(alpha: f64, beta: f64) -> HillProblem {
        HillProblem::new(alpha, beta, TWO_PI, Excitation::Cosine).unwrap()
    }

    #[test]
    fn eval_examples() {
        let p = mathieu(0.0, 1.0);
        assert_eq!(eval_p(&p, 0.0), 1.0);

        let l = HillProblem::new(
            0.0,
            1.0,
            TWO_PI,
            Excitation::CosineSum(vec![(1.0, 1), (1.0, 2)]),
        )
        .unwrap();
        assert_eq!(eval_p(&l, 0.0), 2.0);
        // cos(t) + cos(2t) at t = pi
        assert!((eval_p(&l, std::f64::consts::PI) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_samples_exact() {
        let p = mathieu(0.0, 1.0);
        let s = sample_p(&p, 2).unwrap();
        // p(pi/2), p(pi), p(3 pi/2), p(2 pi)
        assert!((s[0] - 0.0).abs() < 1e-15);
        assert!((s[1] + 1.0).abs() < 1e-15);
        assert!((s[2] - 0.0).abs() < 1e-15);
        assert_eq!(s[3], 1.0);
    }

    #[test]
    fn constant_excitation_samples() {
        let p = HillProblem::new(
            0.0,
            1.0,
            3.0,
            Excitation::SquareWave {
                hi: 2.5,
                lo: 2.5,
                duty: 0.5,
            },
        )
        .unwrap();
        assert!(sample_p(&p, 4).unwrap().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn table_samples_are_table_values_at_right_endpoint_cells() {
        let vals = vec![10.0, 11.0, 12.0, 13.0];
        let p = HillProblem::new(0.0, 1.0, 1.0, Excitation::SampledTable(vals.clone())).unwrap();
        let s = sample_p(&p, 2).unwrap();
        // right endpoint n/4 lands in cell n (mod 4)
        assert_eq!(s, vec![11.0, 12.0, 13.0, 10.0]);
    }

    #[test]
    fn square_wave_right_continuous() {
        let exc = Excitation::SquareWave {
            hi: 1.0,
            lo: -1.0,
            duty: 0.5,
        };
        assert_eq!(exc.eval_phase(0.5), -1.0);
        assert_eq!(exc.eval_phase_left(0.5), 1.0);
        assert_eq!(exc.eval_phase(0.499999), 1.0);
        assert_eq!(exc.eval_phase_left(1.0), -1.0);
    }

    #[test]
    fn sample_nesting() {
        for exc in [
            Excitation::Cosine,
            Excitation::CosineSum(vec![(1.0, 1), (0.5, 3)]),
            Excitation::SquareWave {
                hi: 1.0,
                lo: -2.0,
                duty: 0.25,
            },
            Excitation::SampledTable((0..8).map(|i| i as f64).collect()),
        ] {
            let p = HillProblem::new(0.0, 1.0, 2.0, exc).unwrap();
            for k in 2..=6u32 {
                let coarse = sample_p(&p, k).unwrap();
                let fine = sample_p(&p, k + 1).unwrap();
                for (m, &c) in coarse.iter().enumerate() {
                    // p_{2(m+1)} at order k+1 equals p_{m+1} at order k
                    assert_eq!(fine[2 * (m + 1) - 1], c, "k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn table_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.txt");
        std::fs::write(&path, "1.0\n-0.5\n0.25\n2\n").unwrap();
        let exc = Excitation::table_from_file(&path).unwrap();
        assert_eq!(exc, Excitation::SampledTable(vec![1.0, -0.5, 0.25, 2.0]));

        std::fs::write(&path, "1.0\n2.0\n3.0\n").unwrap();
        assert!(Excitation::table_from_file(&path).is_err());

        std::fs::write(&path, "1.0\nnot-a-number\n").unwrap();
        assert!(Excitation::table_from_file(&path).is_err());
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(HillProblem::new(0.0, 0.0, 0.0, Excitation::Cosine).is_err());
        assert!(HillProblem::new(0.0, 0.0, -1.0, Excitation::Cosine).is_err());
        assert!(HillProblem::new(f64::NAN, 0.0, 1.0, Excitation::Cosine).is_err());
        assert!(Excitation::SampledTable(vec![1.0, 2.0, 3.0]).validate().is_err());
        assert!(Excitation::SquareWave {
            hi: 1.0,
            lo: 0.0,
            duty: 1.5
        }
        .validate()
        .is_err());
        assert!(sample_p(&mathieu(0.0, 0.0), 0).is_err());
        assert!(sample_p(&mathieu(0.0, 0.0), 21).is_err());
    }

    proptest! {
        #[test]
        fn periodic_extension(t in -50.0f64..50.0, m in -3i32..=3) {
            let p = mathieu(0.0, 1.0);
            let shifted = t + m as f64 * p.tau;
            prop_assert!((eval_p(&p, t) - eval_p(&p, shifted)).abs() < 1e-9);
        }

        #[test]
        fn square_wave_phase_wrap(t in -20.0f64..20.0) {
            let p = HillProblem::new(
                0.0,
                1.0,
                1.5,
                Excitation::SquareWave { hi: 3.0, lo: -1.0, duty: 0.3 },
            ).unwrap();
            let v = eval_p(&p, t);
            prop_assert!(v == 3.0 || v == -1.0);
            prop_assert_eq!(v, eval_p(&p, t + 3.0));
        }
    }
}

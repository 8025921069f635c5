use crate::{Error, Result, Vec2};

/// Vector-valued deviation sampled on a uniform arclength grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationSamples {
    pub components: Vec<Vec<f64>>,
    /// Grid spacing in arclength.
    pub spacing: f64,
    /// Periodic samples wrap around; open samples use interior stencils only.
    pub periodic: bool,
}

impl DeviationSamples {
    pub fn scalar(values: Vec<f64>, spacing: f64, periodic: bool) -> Self {
        Self { components: vec![values], spacing, periodic }
    }

    pub fn vector(values: &[Vec2], spacing: f64, periodic: bool) -> Self {
        Self {
            components: vec![values.iter().map(|v| v.x).collect(), values.iter().map(|v| v.y).collect()],
            spacing,
            periodic,
        }
    }

    pub fn len(&self) -> usize {
        self.components.first().map_or(0, |c| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Centred difference of order `j` at sample `i`, or `None` when the stencil
/// leaves an open grid.
fn difference(f: &[f64], i: usize, j: usize, h: f64, periodic: bool) -> Option<f64> {
    let n = f.len() as isize;
    let at = |k: isize| -> Option<f64> {
        let idx = i as isize + k;
        if periodic {
            Some(f[idx.rem_euclid(n) as usize])
        } else if (0..n).contains(&idx) {
            Some(f[idx as usize])
        } else {
            None
        }
    };
    Some(match j {
        0 => at(0)?,
        1 => (at(1)? - at(-1)?) / (2.0 * h),
        2 => (at(1)? - 2.0 * at(0)? + at(-1)?) / (h * h),
        3 => (at(2)? - 2.0 * at(1)? + 2.0 * at(-1)? - at(-2)?) / (2.0 * h * h * h),
        _ => unreachable!(),
    })
}

/// Discrete H^k norm: square root of the sum over orders `0..=k` and over
/// components of `h * sum_i (D^j f)_i^2`, with centred differences `D^j`.
pub fn discrete_sobolev_norm(dev: &DeviationSamples, k: usize) -> Result<f64> {
    if k > 3 {
        return Err(Error::InvalidInput(format!("sobolev order {k} exceeds 3")));
    }
    let n = dev.len();
    if n < 2 * k + 1 {
        return Err(Error::InvalidInput(format!("order {k} needs at least {} samples, got {n}", 2 * k + 1)));
    }
    if !(dev.spacing > 0.0) {
        return Err(Error::InvalidInput("sample spacing must be positive".into()));
    }
    if dev.components.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidInput("components have different lengths".into()));
    }
    let h = dev.spacing;
    let mut sum = 0.0;
    for f in &dev.components {
        for j in 0..=k {
            for i in 0..n {
                if let Some(d) = difference(f, i, j, h, dev.periodic) {
                    sum += h * d * d;
                }
            }
        }
    }
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(m: usize, n: usize, scale: f64) -> DeviationSamples {
        let h = 2.0 * PI / n as f64;
        DeviationSamples::scalar((0..n).map(|i| scale * (m as f64 * i as f64 * h).sin()).collect(), h, true)
    }

    #[test]
    fn zero_and_constant() {
        let z = DeviationSamples::scalar(vec![0.0; 64], 0.1, true);
        assert_eq!(discrete_sobolev_norm(&z, 3).unwrap(), 0.0);
        let c = DeviationSamples::scalar(vec![0.7; 64], 0.1, true);
        let expected = 0.7 * (64.0f64 * 0.1).sqrt();
        assert!((discrete_sobolev_norm(&c, 3).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn scaled_sine_matches_analytic_norm() {
        // |sin(m.)/m^3|_{H^3}^2 = pi (1 + m^2 + m^4 + m^6) / m^6 on the unit circle
        for m in 1..=8usize {
            let got = discrete_sobolev_norm(&sine(m, 512, 1.0 / (m as f64).powi(3)), 3).unwrap();
            let mf = m as f64;
            let oracle = (PI * (1.0 + mf.powi(2) + mf.powi(4) + mf.powi(6))).sqrt() / mf.powi(3);
            assert!((got / oracle - 1.0).abs() < 0.01, "m={m}: {got} vs {oracle}");
        }
    }

    #[test]
    fn scaled_sine_close_to_plain_l2_for_higher_modes() {
        for m in 4..=8usize {
            let h3 = discrete_sobolev_norm(&sine(m, 512, 1.0 / (m as f64).powi(3)), 3).unwrap();
            let l2 = discrete_sobolev_norm(&sine(m, 512, 1.0), 0).unwrap();
            assert!((h3 / l2 - 1.0).abs() < 0.05, "m={m}: ratio {}", h3 / l2);
        }
    }

    #[test]
    fn too_few_samples_rejected() {
        let d = DeviationSamples::scalar(vec![1.0; 6], 0.1, false);
        assert!(discrete_sobolev_norm(&d, 3).is_err());
        assert!(discrete_sobolev_norm(&d, 2).is_ok());
    }
}

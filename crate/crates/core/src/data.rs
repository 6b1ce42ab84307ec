use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

impl Sample {
    pub fn new(input: Vec<f64>, target: Vec<f64>) -> Self {
        Sample { input, target }
    }
}

/// Training pairs `{(x^m, y^m)}` with uniform input and target widths.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    input_width: usize,
    target_width: usize,
}

impl Dataset {
    /// Builds a non-empty dataset; widths are taken from the first sample.
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let (input_width, target_width) = (first.input.len(), first.target.len());
        if let Some(i) = samples
            .iter()
            .position(|s| s.input.len() != input_width || s.target.len() != target_width)
        {
            return Err(Error::invalid(alloc::format!(
                "sample {i} has widths ({}, {}), expected ({input_width}, {target_width})",
                samples[i].input.len(),
                samples[i].target.len()
            )));
        }
        if samples
            .iter()
            .any(|s| s.input.iter().chain(&s.target).any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite("Dataset::new"));
        }
        Ok(Dataset {
            samples,
            input_width,
            target_width,
        })
    }

    pub fn empty(input_width: usize, target_width: usize) -> Self {
        Dataset {
            samples: Vec::new(),
            input_width,
            target_width,
        }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn target_width(&self) -> usize {
        self.target_width
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Sample> {
        self.samples.iter()
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Sample;
    type IntoIter = core::slice::Iter<'a, Sample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

/// The XOR truth table, rows in the order (0,0), (0,1), (1,0), (1,1).
pub fn xor_dataset() -> Dataset {
    let rows = [
        ([0.0, 0.0], 0.0),
        ([0.0, 1.0], 1.0),
        ([1.0, 0.0], 1.0),
        ([1.0, 1.0], 0.0),
    ];
    Dataset::new(rows.iter().map(|(x, y)| Sample::new(x.to_vec(), vec![*y])).collect()).expect("static table")
}

/// `count` points evenly spaced on `[-π/2, π/2]`, endpoints included.
pub fn linspace_half_pi(count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::invalid("sine dataset needs at least 2 points"));
    }
    let step = (2.0 * FRAC_PI_2) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                FRAC_PI_2
            } else {
                -FRAC_PI_2 + step * i as f64
            }
        })
        .collect())
}

/// `(x, sin x)` on an even grid over `[-π/2, π/2]`.
pub fn sine_dataset(count: usize) -> Result<Dataset> {
    let xs = linspace_half_pi(count)?;
    Dataset::new(
        xs.into_iter()
            .map(|x| Sample::new(vec![x], vec![libm::sin(x)]))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn xor_table() {
        let d = xor_dataset();
        let rows: Vec<(Vec<f64>, Vec<f64>)> = d.iter().map(|s| (s.input.clone(), s.target.clone())).collect();
        assert_eq!(
            rows,
            vec![
                (vec![0.0, 0.0], vec![0.0]),
                (vec![0.0, 1.0], vec![1.0]),
                (vec![1.0, 0.0], vec![1.0]),
                (vec![1.0, 1.0], vec![0.0]),
            ]
        );
        assert_eq!(xor_dataset(), d);
    }

    #[test]
    fn sine_endpoints_and_midpoint() {
        let two = sine_dataset(2).unwrap();
        assert_eq!(two.samples()[0].input, vec![-FRAC_PI_2]);
        assert_eq!(two.samples()[0].target, vec![-1.0]);
        assert_eq!(two.samples()[1].input, vec![FRAC_PI_2]);
        assert_eq!(two.samples()[1].target, vec![1.0]);

        let three = sine_dataset(3).unwrap();
        assert_eq!(three.samples()[1].input, vec![0.0]);
        assert_eq!(three.samples()[1].target, vec![0.0]);

        assert!(sine_dataset(1).is_err());
        assert!(sine_dataset(0).is_err());
    }

    #[test]
    fn sine_spacing_and_values() {
        let d = sine_dataset(100).unwrap();
        let xs: Vec<f64> = d.iter().map(|s| s.input[0]).collect();
        for w in xs.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0] - PI / 99.0).abs() < 1e-14);
        }
        for s in &d {
            assert!((s.target[0] - s.input[0].sin()).abs() <= 1e-15);
        }
    }

    #[test]
    fn ragged_samples_rejected() {
        let err = Dataset::new(vec![
            Sample::new(vec![1.0], vec![1.0]),
            Sample::new(vec![1.0, 2.0], vec![1.0]),
        ]);
        assert!(err.is_err());
        assert_eq!(Dataset::new(vec![]), Err(Error::EmptyDataset));
        assert!(Dataset::empty(2, 1).is_empty());
    }
}

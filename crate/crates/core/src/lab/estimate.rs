/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n_paths: usize,
    /// Fraction of paths that left the space box at some substep.
    pub excursion_fraction: f64,
}

#[derive(Clone, Copy)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    out: f64,
}

impl Moments {
    fn merge(a: Self, b: Self) -> Self {
        let n = a.n + b.n;
        let delta = b.mean - a.mean;
        Self {
            n,
            mean: a.mean + delta * (b.n / n),
            m2: a.m2 + b.m2 + delta * delta * (a.n * b.n / n),
            out: a.out + b.out,
        }
    }
}

fn tree(samples: &[(f64, bool)]) -> Moments {
    match samples.len() {
        1 => Moments {
            n: 1.0,
            mean: samples[0].0,
            m2: 0.0,
            out: samples[0].1 as u8 as f64,
        },
        len => {
            let (l, r) = samples.split_at(len / 2);
            Moments::merge(tree(l), tree(r))
        }
    }
}

impl McEstimate {
    /// Pairwise-tree reduction over samples in index order; `se` uses the
    /// unbiased variance.
    pub fn from_samples(samples: &[(f64, bool)]) -> Self {
        assert!(!samples.is_empty(), "no samples");
        let m = tree(samples);
        let se = if samples.len() > 1 {
            (m.m2 / (m.n - 1.0) / m.n).sqrt()
        } else {
            0.0
        };
        Self {
            mean: m.mean,
            se,
            n_paths: samples.len(),
            excursion_fraction: m.out / m.n,
        }
    }

    pub fn from_values(values: &[f64]) -> Self {
        let s: Vec<(f64, bool)> = values.iter().map(|&v| (v, false)).collect();
        Self::from_samples(&s)
    }

    /// `|mean − target| ≤ confidence·se + slack`.
    pub fn agrees_with(&self, target: f64, confidence: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= confidence * self.se + slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_error() {
        let e = McEstimate::from_values(&[2.5; 37]);
        assert_eq!((e.mean, e.se, e.n_paths), (2.5, 0.0, 37));
    }

    #[test]
    fn matches_textbook_formulas() {
        let v = [1.0, 4.0, 2.0, 8.0, 5.0];
        let e = McEstimate::from_values(&v);
        let mean = 4.0;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 4.0;
        assert!((e.mean - mean).abs() < 1e-15);
        assert!((e.se - (var / 5.0).sqrt()).abs() < 1e-15);
        assert_eq!(McEstimate::from_values(&[3.0]).se, 0.0);
    }
}

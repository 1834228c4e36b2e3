//! Gray-labelled PAM and Eb/N0 calibration.

use std::io::Write;

use crate::{Error, Result};

/// Unit-energy `Q`-ary PAM with Gray labels.
///
/// Levels are sorted ascending; level `i` is `(2i - Q + 1) / sqrt((Q² - 1) / 3)`
/// and carries the label `i ^ (i >> 1)`, most significant bit first.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<f64>,
    labels: Vec<u32>,
    // Reciprocal of the half spacing between adjacent levels.
    inv_half_step: f64,
}

pub fn make_pam(order: usize) -> Result<Constellation> {
    if !matches!(order, 2 | 4 | 8 | 16) {
        return Err(Error::Parameter(format!(
            "unsupported PAM order {order}; expected 2, 4, 8 or 16"
        )));
    }
    let q = order as f64;
    let norm = ((q * q - 1.0) / 3.0).sqrt();
    let points = (0..order)
        .map(|i| (2.0 * i as f64 - q + 1.0) / norm)
        .collect();
    let labels = (0..order as u32).map(|i| i ^ (i >> 1)).collect();
    Ok(Constellation {
        order,
        bits_per_symbol: order.trailing_zeros() as usize,
        points,
        labels,
        inv_half_step: norm,
    })
}

impl Constellation {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn point(&self, index: usize) -> f64 {
        self.points[index]
    }

    pub fn min_distance(&self) -> f64 {
        2.0 / self.inv_half_step
    }

    /// Index of the level carrying `label`.
    pub fn index_of_label(&self, label: u32) -> usize {
        // Inverse Gray code.
        let mut i = label;
        let mut shift = label >> 1;
        while shift != 0 {
            i ^= shift;
            shift >>= 1;
        }
        i as usize
    }

    /// Nearest level to `value`; an exact midpoint resolves to the lower level.
    pub fn slice(&self, value: f64) -> usize {
        let last = self.order - 1;
        let pos = (value * self.inv_half_step + last as f64) / 2.0;
        let guess = if pos.is_nan() {
            0
        } else {
            (pos.round().max(0.0) as usize).min(last)
        };
        // The arithmetic guess can land one level off near a boundary.
        let mut best = guess.saturating_sub(1);
        for i in guess.saturating_sub(1) + 1..=(guess + 1).min(last) {
            if (value - self.points[i]).abs() < (value - self.points[best]).abs() {
                best = i;
            }
        }
        best
    }

    /// Number of differing label bits between two level indices.
    pub fn bit_distance(&self, a: usize, b: usize) -> u32 {
        (self.labels[a] ^ self.labels[b]).count_ones()
    }

    fn push_label_bits(&self, index: usize, out: &mut Vec<bool>) {
        let label = self.labels[index];
        for b in (0..self.bits_per_symbol).rev() {
            out.push((label >> b) & 1 == 1);
        }
    }

    /// Bits of the level indices, in order.
    pub fn indices_to_bits(&self, indices: &[usize]) -> Vec<bool> {
        let mut bits = Vec::with_capacity(indices.len() * self.bits_per_symbol);
        for &i in indices {
            self.push_label_bits(i, &mut bits);
        }
        bits
    }

    /// Level indices for a bit string, `log2 Q` bits per level.
    pub fn bits_to_indices(&self, bits: &[bool]) -> Result<Vec<usize>> {
        if !bits.len().is_multiple_of(self.bits_per_symbol) {
            return Err(Error::Framing {
                len: bits.len(),
                bits_per_symbol: self.bits_per_symbol,
            });
        }
        Ok(bits
            .chunks(self.bits_per_symbol)
            .map(|group| {
                let label = group.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
                self.index_of_label(label)
            })
            .collect())
    }
}

pub fn modulate(bits: &[bool], c: &Constellation) -> Result<Vec<f64>> {
    Ok(c.bits_to_indices(bits)?
        .into_iter()
        .map(|i| c.points[i])
        .collect())
}

pub fn demodulate_hard(values: &[f64], c: &Constellation) -> Vec<bool> {
    let indices: Vec<usize> = values.iter().map(|&v| c.slice(v)).collect();
    c.indices_to_bits(&indices)
}

/// Complex noise variance per vapor cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma2: f64,
}

impl NoiseSpec {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 >= 0.0) || sigma2.is_infinite() {
            return Err(Error::Parameter(format!("noise variance must be >= 0, got {sigma2}")));
        }
        Ok(NoiseSpec { sigma2 })
    }

    pub fn noiseless() -> Self {
        NoiseSpec { sigma2: 0.0 }
    }
}

/// `σ² = 1 / (log2 Q · 10^{Eb/N0 / 10})`, i.e. `N0 = σ²` against unit
/// symbol energy per user.
pub fn noise_sigma(eb_n0_db: f64, order: usize) -> Result<NoiseSpec> {
    let c = make_pam(order)?;
    let ebn0 = 10f64.powf(eb_n0_db / 10.0);
    NoiseSpec::new(1.0 / (c.bits_per_symbol as f64 * ebn0))
}

/// Dumps `index,level,label` rows.
pub fn write_constellation_csv<W: Write>(mut w: W, c: &Constellation) -> std::io::Result<()> {
    writeln!(w, "index,level,label")?;
    for (i, (p, l)) in c.points.iter().zip(&c.labels).enumerate() {
        writeln!(w, "{i},{p},{l:0width$b}", width = c.bits_per_symbol)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ORDERS: [usize; 4] = [2, 4, 8, 16];

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn small_orders() {
        assert_eq!(make_pam(2).unwrap().points(), &[-1.0, 1.0]);
        let s5 = 5f64.sqrt();
        let p4 = make_pam(4).unwrap();
        for (p, e) in p4.points().iter().zip([-3.0 / s5, -1.0 / s5, 1.0 / s5, 3.0 / s5]) {
            assert!((p - e).abs() < 1e-15);
        }
    }

    #[test]
    fn energy_and_mean() {
        for q in ORDERS {
            let c = make_pam(q).unwrap();
            let n = q as f64;
            let mean = c.points().iter().sum::<f64>() / n;
            let energy = c.points().iter().map(|p| p * p).sum::<f64>() / n;
            assert!(mean.abs() < 1e-12);
            assert!((energy - 1.0).abs() < 1e-12, "Q={q} energy {energy}");
        }
    }

    #[test]
    fn gray_adjacency() {
        for q in ORDERS {
            let c = make_pam(q).unwrap();
            for i in 1..q {
                assert_eq!(c.bit_distance(i - 1, i), 1);
            }
        }
    }

    #[test]
    fn unsupported_orders() {
        for q in [0, 1, 3, 6, 32] {
            assert!(matches!(make_pam(q), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn modulate_basic() {
        let c2 = make_pam(2).unwrap();
        assert!(modulate(&[], &c2).unwrap().is_empty());
        assert_eq!(modulate(&bits("01"), &c2).unwrap(), vec![-1.0, 1.0]);
        let c4 = make_pam(4).unwrap();
        assert!(matches!(
            modulate(&bits("011"), &c4),
            Err(Error::Framing { len: 3, bits_per_symbol: 2 })
        ));
    }

    #[test]
    fn round_trip_all_labels() {
        let c = make_pam(16).unwrap();
        for label in 0u32..16 {
            let b: Vec<bool> = (0..4).rev().map(|i| (label >> i) & 1 == 1).collect();
            let v = modulate(&b, &c).unwrap();
            assert_eq!(demodulate_hard(&v, &c), b);
        }
    }

    #[test]
    fn midpoint_goes_to_lower_level() {
        for q in ORDERS {
            let c = make_pam(q).unwrap();
            for i in 1..q {
                let mid = (c.point(i - 1) + c.point(i)) / 2.0;
                let lo = (mid - c.point(i - 1)).abs();
                let hi = (c.point(i) - mid).abs();
                // Only exact float ties exercise the rule.
                if lo == hi {
                    assert_eq!(c.slice(mid), i - 1, "Q={q} boundary {i}");
                } else {
                    let expect = if lo < hi { i - 1 } else { i };
                    assert_eq!(c.slice(mid), expect);
                }
            }
        }
        let c4 = make_pam(4).unwrap();
        assert_eq!(c4.slice(0.0), 1);
        assert_eq!(demodulate_hard(&[0.0], &c4), bits("01"));
    }

    #[test]
    fn perturbation_sweep() {
        for q in [4, 8, 16] {
            let c = make_pam(q).unwrap();
            let half = c.min_distance() / 2.0;
            for i in 0..q {
                for step in -99..=99 {
                    let v = c.point(i) + half * step as f64 / 100.0;
                    assert_eq!(c.slice(v), i);
                }
            }
        }
    }

    #[test]
    fn noise_calibration() {
        assert!((noise_sigma(0.0, 4).unwrap().sigma2 - 0.5).abs() < 1e-15);
        assert!((noise_sigma(10.0, 2).unwrap().sigma2 - 0.1).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for step in 0..200 {
            let s = noise_sigma(-20.0 + step as f64, 16).unwrap().sigma2;
            assert!(s < prev && s > 0.0);
            prev = s;
        }
        assert!(noise_sigma(400.0, 16).unwrap().sigma2 < 1e-40);
    }

    #[test]
    fn constellation_csv() {
        let mut buf = Vec::new();
        write_constellation_csv(&mut buf, &make_pam(4).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,level,label");
        assert!(lines[3].ends_with(",11"));
        assert!(lines[4].ends_with(",10"));
    }

    proptest! {
        #[test]
        fn slicing_is_nearest_neighbour(v in -3.0f64..3.0, qi in 0usize..4) {
            let c = make_pam(ORDERS[qi]).unwrap();
            let got = c.slice(v);
            let best = c.points().iter().map(|p| (v - p).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(((v - c.point(got)).abs() - best).abs() < 1e-15);
        }

        #[test]
        fn bits_round_trip(raw in proptest::collection::vec(any::<bool>(), 0..64), qi in 0usize..4) {
            let c = make_pam(ORDERS[qi]).unwrap();
            let n = raw.len() / c.bits_per_symbol() * c.bits_per_symbol();
            let b = &raw[..n];
            prop_assert_eq!(demodulate_hard(&modulate(b, &c).unwrap(), &c), b.to_vec());
        }
    }
}

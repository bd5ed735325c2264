//! Average received mean power (ARMP), the random-precoder baseline and
//! achievable rate.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::channel::ChannelMatrix;
use crate::csv_out::{fmt_f64, Table};
use crate::geometry::SampleGrid;
use crate::precoder::{correlation_matrix, objective, random_precoder, PrecodingMatrix};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Receiver noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    delta_sq: f64,
}

impl NoiseModel {
    pub fn new(delta_sq: f64) -> Result<Self> {
        if !(delta_sq.is_finite() && delta_sq > 0.0) {
            return Err(Error::invalid(format!("noise variance must be positive, got {delta_sq}")));
        }
        Ok(Self { delta_sq })
    }

    pub fn variance(&self) -> f64 {
        self.delta_sq
    }

    pub fn std_dev(&self) -> f64 {
        self.delta_sq.sqrt()
    }
}

fn check_compatible(h: &ChannelMatrix, p: &PrecodingMatrix) -> Result<()> {
    if h.n_leds() != p.n_leds() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} LEDs, precoder has {} rows",
            h.n_leds(),
            p.n_leds()
        )));
    }
    Ok(())
}

/// `1/(N_s M_t) sum_j ||h_j^T P||^2`.
pub fn armp(h: &ChannelMatrix, p: &PrecodingMatrix) -> Result<f64> {
    check_compatible(h, p)?;
    let received = h.matrix() * p.matrix();
    Ok(received.norm_squared() / (h.n_points() * h.n_leds()) as f64)
}

/// ARMP evaluated through the correlation matrix `R = H^T H`.
pub fn armp_from_correlation(r: &DMatrix<f64>, n_points: usize, p: &PrecodingMatrix) -> f64 {
    objective(p.matrix(), r) / (n_points * p.n_leds()) as f64
}

/// Mean ARMP over `n_draws` random precoders (the classical baseline).
///
/// Draw `i` uses seed `derive_seed(seed, &[i])`; draws are evaluated in
/// parallel and summed in draw order.
pub fn classical_armp(h: &ChannelMatrix, q: usize, n_draws: usize, seed: u64) -> Result<f64> {
    if n_draws == 0 {
        return Err(Error::invalid("classical baseline needs at least one draw"));
    }
    let r = correlation_matrix(h);
    let values = (0..n_draws as u64)
        .into_par_iter()
        .map(|i| {
            let p = random_precoder(h.n_leds(), q, derive_seed(seed, &[i]))?;
            Ok(armp_from_correlation(&r, h.n_points(), &p))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(values.iter().sum::<f64>() / n_draws as f64)
}

/// Received mean power `||h^T P||^2` at one location.
pub fn received_power(h: &DVector<f64>, p: &PrecodingMatrix) -> Result<f64> {
    if h.len() != p.n_leds() {
        return Err(Error::DimensionMismatch(format!(
            "channel vector has {} entries, precoder has {} rows",
            h.len(),
            p.n_leds()
        )));
    }
    Ok((p.matrix().tr_mul(h)).norm_squared())
}

/// `log2(1 + ||h^T P||^2 / delta^2)`, in bits per channel use.
pub fn achievable_rate(h: &DVector<f64>, p: &PrecodingMatrix, noise: &NoiseModel) -> Result<f64> {
    let snr = received_power(h, p)? / noise.variance();
    Ok(snr.ln_1p() / std::f64::consts::LN_2)
}

/// Received mean power at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMap {
    pub xy: Vec<(f64, f64)>,
    pub values: Vec<f64>,
    pub armp: f64,
}

impl PowerMap {
    /// `x,y,power` rows followed by `# armp=<value>`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["x", "y", "power"]);
        for (&(x, y), &v) in self.xy.iter().zip(&self.values) {
            t.push_row(vec![x, y, v]);
        }
        t.push_trailer(format!("armp={}", fmt_f64(self.armp)));
        t
    }
}

pub fn power_map(h: &ChannelMatrix, p: &PrecodingMatrix, grid: &SampleGrid) -> Result<PowerMap> {
    check_compatible(h, p)?;
    if grid.len() != h.n_points() {
        return Err(Error::DimensionMismatch(format!(
            "grid has {} points, channel matrix has {} rows",
            grid.len(),
            h.n_points()
        )));
    }
    let received = h.matrix() * p.matrix();
    let values: Vec<f64> = received.row_iter().map(|r| r.norm_squared()).collect();
    let total: f64 = values.iter().sum();
    Ok(PowerMap {
        xy: grid.points().iter().map(|pt| (pt.x, pt.y)).collect(),
        armp: total / (h.n_points() * h.n_leds()) as f64,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_matrix, ChannelParams};
    use crate::geometry::{led_positions, sample_work_plane, LedArray, RoomScenario};
    use crate::precoder::{optimize, OptimizerConfig};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_h(rows: usize, cols: usize, seed: u64) -> ChannelMatrix {
        let mut rng = rng_from_seed(seed);
        ChannelMatrix::from_matrix(DMatrix::from_fn(rows, cols, |_, _| rng.random_range(0.0..1.0))).unwrap()
    }

    fn one() -> PrecodingMatrix {
        PrecodingMatrix::from_matrix(DMatrix::from_element(1, 1, 1.0)).unwrap()
    }

    #[test]
    fn single_led_reduces_to_mean_square_gain() {
        let h = ChannelMatrix::from_matrix(DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0])).unwrap();
        assert!((armp(&h, &one()).unwrap() - 14.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_channel_zero_armp() {
        let h = ChannelMatrix::from_matrix(DMatrix::zeros(4, 3)).unwrap();
        assert_eq!(armp(&h, &random_precoder(3, 2, 0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn armp_matches_direct_loop() {
        let h = random_h(13, 6, 4);
        let p = random_precoder(6, 4, 5).unwrap();
        let mut total = 0.0;
        for j in 0..13 {
            for t in 0..4 {
                let s: f64 = (0..6).map(|m| h.matrix()[(j, m)] * p.matrix()[(m, t)]).sum();
                total += s * s;
            }
        }
        let brute = total / (13.0 * 6.0);
        let got = armp(&h, &p).unwrap();
        assert!((got - brute).abs() <= 1e-12 * brute);
        let via_r = armp_from_correlation(&correlation_matrix(&h), 13, &p);
        assert!((via_r - brute).abs() <= 1e-12 * brute);
    }

    #[test]
    fn dimension_mismatch() {
        let h = random_h(3, 4, 0);
        assert!(matches!(armp(&h, &random_precoder(5, 2, 0).unwrap()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn classical_single_draw_equals_that_draw() {
        let h = random_h(20, 5, 1);
        let p = random_precoder(5, 3, derive_seed(99, &[0])).unwrap();
        let expect = armp(&h, &p).unwrap();
        let got = classical_armp(&h, 3, 1, 99).unwrap();
        assert!((got - expect).abs() <= 1e-12 * expect);
        assert!(classical_armp(&h, 3, 0, 99).is_err());
        assert_eq!(classical_armp(&h, 3, 50, 7).unwrap(), classical_armp(&h, 3, 50, 7).unwrap());
    }

    #[test]
    fn classical_matches_expectation() {
        // E[P P^T] = I, so the expected ARMP is ||H||_F^2 / (N_s M_t).
        let h = random_h(25, 7, 2);
        let expect = h.matrix().norm_squared() / (25.0 * 7.0);
        let got = classical_armp(&h, 4, 10_000, 3).unwrap();
        assert!((got / expect - 1.0).abs() < 0.02, "{got} vs {expect}");
    }

    #[test]
    fn rate_cases() {
        let p = one();
        let noise = NoiseModel::new(1.0).unwrap();
        assert_eq!(achievable_rate(&DVector::from_element(1, 0.0), &p, &noise).unwrap(), 0.0);
        assert!((achievable_rate(&DVector::from_element(1, 1.0), &p, &noise).unwrap() - 1.0).abs() < 1e-15);
        let q = random_precoder(4, 3, 1).unwrap();
        let h = DVector::from_vec(vec![0.3, 0.1, 0.7, 0.2]);
        let h2 = &h * 2.0;
        assert!((received_power(&h2, &q).unwrap() / received_power(&h, &q).unwrap() - 4.0).abs() < 1e-12);
        assert!(achievable_rate(&h2, &q, &noise).unwrap() > achievable_rate(&h, &q, &noise).unwrap());
        assert!(NoiseModel::new(0.0).is_err());
    }

    #[test]
    fn power_map_properties() {
        let room = RoomScenario::new(5.0, 6.0, 3.0, 0.8).unwrap();
        let leds = led_positions(&LedArray::square(3, 0.3).unwrap(), &room);
        let grid = sample_work_plane(&room, 0.25).unwrap();
        let h = channel_matrix(&leds, &grid, &ChannelParams::default()).unwrap();
        let (p, _) = optimize(&h, 4, &OptimizerConfig::default()).unwrap();
        let map = power_map(&h, &p, &grid).unwrap();
        assert!((map.armp - armp(&h, &p).unwrap()).abs() <= 1e-14 * map.armp);
        assert!(map.values.iter().all(|&v| v >= 0.0));

        // Mirror x -> width - x maps LED (i, j) to (2 - i, j); a precoder
        // with matching rows gives a mirror-symmetric map.
        let mut sym = random_precoder(9, 4, 3).unwrap().into_matrix();
        for j in 0..3 {
            let src = sym.row(j).clone_owned();
            sym.set_row(6 + j, &src);
        }
        let sym = PrecodingMatrix::from_matrix(sym).unwrap();
        let map = power_map(&h, &sym, &grid).unwrap();
        let index: std::collections::HashMap<(i64, i64), f64> = map
            .xy
            .iter()
            .zip(&map.values)
            .map(|(&(x, y), &v)| (((x * 100.0).round() as i64, (y * 100.0).round() as i64), v))
            .collect();
        let scale = map.values.iter().cloned().fold(0.0, f64::max);
        for (&(x, y), &v) in map.xy.iter().zip(&map.values) {
            let mirror = index[&(((5.0 - x) * 100.0).round() as i64, (y * 100.0).round() as i64)];
            assert!((v - mirror).abs() <= 1e-10 * scale);
        }

        let table = map.to_table().to_csv_string();
        assert!(table.starts_with("x,y,power\n"));
        assert!(table.trim_end().lines().last().unwrap().starts_with("# armp="));
    }

    #[test]
    fn single_led_map_is_squared_gain() {
        let room = RoomScenario::new(5.0, 6.0, 3.0, 0.0).unwrap();
        let leds = led_positions(&LedArray::square(1, 0.0).unwrap(), &room);
        let grid = sample_work_plane(&room, 0.5).unwrap();
        let h = channel_matrix(&leds, &grid, &ChannelParams::default()).unwrap();
        let map = power_map(&h, &one(), &grid).unwrap();
        for (j, v) in map.values.iter().enumerate() {
            assert!((v - h.matrix()[(j, 0)].powi(2)).abs() <= 1e-15 * v);
        }
    }

    proptest! {
        #[test]
        fn armp_row_permutation_invariant(seed in 0u64..1000, n in 2usize..20) {
            let h = random_h(n, 4, seed);
            let p = random_precoder(4, 3, seed).unwrap();
            let mut rows: Vec<usize> = (0..n).collect();
            rows.reverse();
            rows.rotate_left((seed as usize) % n);
            let permuted = ChannelMatrix::from_matrix(h.matrix().select_rows(rows.iter())).unwrap();
            let a = armp(&h, &p).unwrap();
            let b = armp(&permuted, &p).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn armp_scales_quadratically(seed in 0u64..1000, c in 1e-6f64..1e3) {
            let h = random_h(6, 5, seed);
            let p = random_precoder(5, 2, seed).unwrap();
            let scaled = ChannelMatrix::from_matrix(h.matrix() * c).unwrap();
            let a = armp(&h, &p).unwrap();
            let b = armp(&scaled, &p).unwrap();
            prop_assert!((b / (c * c * a) - 1.0).abs() < 1e-12);
        }
    }
}

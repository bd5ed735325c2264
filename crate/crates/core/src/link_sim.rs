//! Monte Carlo on-off keying link simulation.
//!
//! Transmission scheme: slot `t` drives the LEDs with precoder column
//! `t mod q` scaled by the slot's symbol, so a receiver with channel `h`
//! sees the scalar gain `g_{t mod q}` where `g = P^T h`. A pilot block of
//! `q` unit symbols (one per column) lets each user estimate `g`, after
//! which payload bits are sent as amplitudes `{0, 1}` and detected with the
//! maximum-likelihood rule for Gaussian noise.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::ChannelMatrix;
use crate::csv_out::Table;
use crate::geometry::{Point3, RoomScenario};
use crate::metrics::NoiseModel;
use crate::precoder::PrecodingMatrix;
use crate::rng::{derive_seed, rng_from_seed, stream, SimRng};
use crate::{Error, Result};

/// Standard normal upper-tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Analytic BER with perfect channel knowledge, averaged over columns:
/// `(1/q) sum_t Q(|g_t| / (2 delta))`.
pub fn known_channel_ber(g: &DVector<f64>, noise: &NoiseModel) -> f64 {
    let two_sigma = 2.0 * noise.std_dev();
    g.iter().map(|&gt| q_function(gt.abs() / two_sigma)).sum::<f64>() / g.len() as f64
}

/// Pilot block followed by OOK payload, with column cycling.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitFrame {
    q: usize,
    pub pilot_symbols: Vec<f64>,
    pub payload_bits: Vec<bool>,
}

impl TransmitFrame {
    pub fn new(q: usize, payload_bits: Vec<bool>) -> Result<Self> {
        if q == 0 {
            return Err(Error::invalid("frame needs at least one stream"));
        }
        Ok(Self {
            q,
            pilot_symbols: vec![1.0; q],
            payload_bits,
        })
    }

    pub fn random(q: usize, n_bits: usize, rng: &mut SimRng) -> Result<Self> {
        Self::new(q, (0..n_bits).map(|_| rng.random::<bool>()).collect())
    }

    /// Precoder column used by payload slot `t`.
    pub fn column_for_slot(&self, t: usize) -> usize {
        t % self.q
    }

    /// LED drive vector of pilot slot `t`.
    pub fn pilot_vector(&self, p: &PrecodingMatrix, t: usize) -> DVector<f64> {
        p.matrix().column(t).into_owned() * self.pilot_symbols[t]
    }

    /// LED drive vector of payload slot `t`.
    pub fn payload_vector(&self, p: &PrecodingMatrix, t: usize) -> DVector<f64> {
        let amplitude = if self.payload_bits[t] { 1.0 } else { 0.0 };
        p.matrix().column(self.column_for_slot(t)).into_owned() * amplitude
    }
}

/// How the receiver learns its effective channel `g = P^T h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKnowledge {
    /// Noisy pilot block, repeated and averaged `repetitions` times.
    Pilot { repetitions: usize },
    /// Exact `g`, for checking the detector against theory.
    Perfect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerConfig {
    pub n_users: usize,
    /// Payload bits per user, noise point and trial.
    pub n_bits: usize,
    pub noise_sweep: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub knowledge: ChannelKnowledge,
}

impl BerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_bits == 0 || self.trials == 0 {
            return Err(Error::invalid("n_users, n_bits and trials must all be at least 1"));
        }
        if self.noise_sweep.is_empty() {
            return Err(Error::invalid("noise sweep must not be empty"));
        }
        for &d in &self.noise_sweep {
            NoiseModel::new(d)?;
        }
        if let ChannelKnowledge::Pilot { repetitions: 0 } = self.knowledge {
            return Err(Error::invalid("pilot repetitions must be at least 1"));
        }
        Ok(())
    }
}

/// `n` values evenly spaced in log10 between `lo` and `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n).map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64)).collect()
        }
    }
}

/// Effective channel `g = P^T h` seen by a user.
pub fn effective_channel(h: &DVector<f64>, p: &PrecodingMatrix) -> Result<DVector<f64>> {
    if h.len() != p.n_leds() {
        return Err(Error::DimensionMismatch(format!(
            "channel vector has {} entries, precoder has {} rows",
            h.len(),
            p.n_leds()
        )));
    }
    Ok(p.matrix().tr_mul(h))
}

fn estimate_from_pilots(g: &DVector<f64>, noise: &NoiseModel, repetitions: usize, rng: &mut SimRng) -> DVector<f64> {
    let sigma = noise.std_dev();
    let mut acc = DVector::zeros(g.len());
    for _ in 0..repetitions {
        for (a, &gt) in acc.iter_mut().zip(g.iter()) {
            *a += gt + sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    acc / repetitions as f64
}

/// Single pilot block: `g_hat_t = g_t + n_t`, `n_t ~ N(0, delta^2)`.
pub fn estimate_effective_channel(h: &DVector<f64>, p: &PrecodingMatrix, noise: &NoiseModel, seed: u64) -> Result<DVector<f64>> {
    let g = effective_channel(h, p)?;
    Ok(estimate_from_pilots(&g, noise, 1, &mut rng_from_seed(seed)))
}

/// ML decision for OOK amplitudes `{0, g}`: choose 1 iff `g r > g^2 / 2`.
fn detect(g_hat: f64, r: f64) -> bool {
    g_hat * r > 0.5 * g_hat * g_hat
}

/// Bit errors and bits sent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCount {
    pub errors: u64,
    pub bits: u64,
}

impl ErrorCount {
    pub fn ber(&self) -> f64 {
        self.errors as f64 / self.bits as f64
    }
}

/// Simulate one user at one noise level. `stream_seed` identifies the
/// random stream; trial `k` draws from `stream(stream_seed, [k])`.
pub fn simulate_errors(
    h: &DVector<f64>,
    p: &PrecodingMatrix,
    cfg: &BerConfig,
    noise: &NoiseModel,
    stream_seed: u64,
) -> Result<ErrorCount> {
    let g = effective_channel(h, p)?;
    if g.iter().all(|&v| v == 0.0) {
        return Err(Error::UncoverableUser);
    }
    let sigma = noise.std_dev();
    let mut count = ErrorCount::default();
    for trial in 0..cfg.trials as u64 {
        let mut rng = stream(stream_seed, &[trial]);
        let g_hat = match cfg.knowledge {
            ChannelKnowledge::Perfect => g.clone(),
            ChannelKnowledge::Pilot { repetitions } => estimate_from_pilots(&g, noise, repetitions, &mut rng),
        };
        let frame = TransmitFrame::random(p.n_streams(), cfg.n_bits, &mut rng)?;
        for (t, &bit) in frame.payload_bits.iter().enumerate() {
            let col = frame.column_for_slot(t);
            let amplitude = if bit { g[col] } else { 0.0 };
            let r = amplitude + sigma * rng.sample::<f64, _>(StandardNormal);
            if detect(g_hat[col], r) != bit {
                count.errors += 1;
            }
        }
        count.bits += cfg.n_bits as u64;
    }
    Ok(count)
}

/// Bit error rate of one user at one noise level.
pub fn simulate_ber(h: &DVector<f64>, p: &PrecodingMatrix, cfg: &BerConfig, noise: &NoiseModel, stream_seed: u64) -> Result<f64> {
    simulate_errors(h, p, cfg, noise, stream_seed).map(|c| c.ber())
}

/// Users placed uniformly at random on the work plane.
pub fn draw_user_positions(room: &RoomScenario, n_users: usize, seed: u64) -> Vec<Point3> {
    let mut rng = rng_from_seed(derive_seed(seed, &[u64::MAX]));
    (0..n_users)
        .map(|_| {
            let x = rng.random_range(0.0..=room.width());
            let y = rng.random_range(0.0..=room.length());
            Point3::new(x, y, room.work_plane_height())
        })
        .collect()
}

/// BER curve of one precoder.
#[derive(Debug, Clone, PartialEq)]
pub struct BerResult {
    pub delta_sq: Vec<f64>,
    /// Mean over coverable users, per noise point.
    pub mean_ber: Vec<f64>,
    /// `per_user[u][k]`; `None` for a user with no signal.
    pub per_user: Vec<Vec<Option<f64>>>,
}

/// Proposed and classical curves measured with common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct BerComparison {
    pub proposed: BerResult,
    pub classical: BerResult,
}

impl BerComparison {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["delta_sq", "ber_proposed", "ber_classical"]);
        for (k, &d) in self.proposed.delta_sq.iter().enumerate() {
            t.push_row(vec![d, self.proposed.mean_ber[k], self.classical.mean_ber[k]]);
        }
        t
    }

    /// One row per user and noise point; uncoverable users read `NaN`.
    pub fn per_user_table(&self) -> Table {
        let mut t = Table::new(["user", "delta_sq", "ber_proposed", "ber_classical"]);
        for (u, (pu, cu)) in self.proposed.per_user.iter().zip(&self.classical.per_user).enumerate() {
            for (k, &d) in self.proposed.delta_sq.iter().enumerate() {
                t.push_row(vec![u as f64, d, pu[k].unwrap_or(f64::NAN), cu[k].unwrap_or(f64::NAN)]);
            }
        }
        t
    }
}

fn ber_curve(h_users: &ChannelMatrix, p: &PrecodingMatrix, cfg: &BerConfig) -> Result<BerResult> {
    let n_noise = cfg.noise_sweep.len();
    let cells: Vec<(usize, usize)> = (0..h_users.n_points())
        .flat_map(|u| (0..n_noise).map(move |k| (u, k)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(u, k)| {
            let noise = NoiseModel::new(cfg.noise_sweep[k])?;
            let seed = derive_seed(cfg.seed, &[u as u64, k as u64]);
            match simulate_ber(&h_users.row_vector(u), p, cfg, &noise, seed) {
                Ok(v) => Ok(Some(v)),
                Err(Error::UncoverableUser) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let per_user: Vec<Vec<Option<f64>>> = values.chunks(n_noise).map(<[_]>::to_vec).collect();
    let mut mean_ber = Vec::with_capacity(n_noise);
    for k in 0..n_noise {
        let covered: Vec<f64> = per_user.iter().filter_map(|row| row[k]).collect();
        if covered.is_empty() {
            return Err(Error::UncoverableUser);
        }
        mean_ber.push(covered.iter().sum::<f64>() / covered.len() as f64);
    }
    Ok(BerResult {
        delta_sq: cfg.noise_sweep.clone(),
        mean_ber,
        per_user,
    })
}

/// Run both precoders over every user and noise level. User `u` at noise
/// point `k` uses the same random stream in both arms.
pub fn ber_experiment(
    h_users: &ChannelMatrix,
    proposed: &PrecodingMatrix,
    classical: &PrecodingMatrix,
    cfg: &BerConfig,
) -> Result<BerComparison> {
    cfg.validate()?;
    if h_users.n_points() != cfg.n_users {
        return Err(Error::DimensionMismatch(format!(
            "{} user channels for n_users = {}",
            h_users.n_points(),
            cfg.n_users
        )));
    }
    Ok(BerComparison {
        proposed: ber_curve(h_users, proposed, cfg)?,
        classical: ber_curve(h_users, classical, cfg)?,
    })
}

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{square_side, ExperimentConfig, ExperimentKind};
use crate::channel::{channel_matrix, channel_matrix_for_points, ChannelMatrix};
use crate::csv_out::Table;
use crate::geometry::{led_positions, sample_work_plane, LedArray, RoomScenario, SampleGrid};
use crate::link_sim::{ber_experiment, draw_user_positions, BerConfig, ChannelKnowledge};
use crate::metrics::{armp, classical_armp, power_map};
use crate::precoder::{optimize, random_precoder, PrecodingMatrix};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Seed streams derived from the experiment seed.
const BASELINE_STREAM: u64 = 1;
const USER_STREAM: u64 = 2;
const LINK_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub kind: &'static str,
    pub seed: u64,
    pub tool_version: &'static str,
    /// Units of achievable-rate values (base-2 logarithm).
    pub rate_units: &'static str,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    /// Main output table.
    pub table: Table,
    /// Designed precoder, for runs that produce a single one.
    pub precoder: Option<PrecodingMatrix>,
    /// Per-user BER breakdown of `ber` runs.
    pub per_user: Option<Table>,
    pub metadata: Metadata,
}

/// `dir/name.csv` -> `dir/name<suffix>`.
pub fn sibling_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

impl ExperimentResult {
    /// Write the main table to `out`, plus `<stem>_precoder.csv`,
    /// `<stem>_users.csv` and `<stem>.meta.json` next to it. Returns every
    /// path written.
    pub fn write(&self, out: &Path) -> Result<Vec<PathBuf>> {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut written = vec![out.to_path_buf()];
        self.table.write(out)?;
        if let Some(p) = &self.precoder {
            let path = sibling_path(out, "_precoder.csv");
            p.to_table().write(&path)?;
            written.push(path);
        }
        if let Some(t) = &self.per_user {
            let path = sibling_path(out, "_users.csv");
            t.write(&path)?;
            written.push(path);
        }
        let path = sibling_path(out, ".meta.json");
        let mut meta = serde_json::to_string_pretty(&self.metadata).expect("metadata serializes");
        meta.push('\n');
        std::fs::write(&path, meta)?;
        written.push(path);
        Ok(written)
    }
}

fn metadata(cfg: &ExperimentConfig) -> Metadata {
    Metadata {
        kind: cfg.kind.name(),
        seed: cfg.seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        rate_units: "bits",
        config: serde_json::to_value(cfg.document()).expect("config document serializes"),
    }
}

fn expect_kind(cfg: &ExperimentConfig, ok: bool, wanted: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::ConfigValidation {
            field: "kind".into(),
            reason: format!("is `{}` but this command runs {wanted}", cfg.kind.name()),
        })
    }
}

struct Scenario {
    grid: SampleGrid,
    h: ChannelMatrix,
}

fn build_scenario(cfg: &ExperimentConfig, room: &RoomScenario, array: &LedArray) -> Result<Scenario> {
    let leds = led_positions(array, room);
    let grid = sample_work_plane(room, cfg.grid_spacing)?;
    let h = channel_matrix(&leds, &grid, &cfg.channel)?;
    Ok(Scenario { grid, h })
}

/// Per-iteration objective of one design run, plus the final precoder.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(cfg, cfg.kind == ExperimentKind::Convergence, "convergence")?;
    let sc = build_scenario(cfg, &cfg.room, &cfg.array)?;
    let (p, trace) = optimize(&sc.h, cfg.q, &cfg.optimizer)?;

    let mut table = Table::new(["iteration", "objective"]);
    for (k, &g) in trace.objective_history.iter().enumerate() {
        table.push_row(vec![k as f64, g]);
    }
    table.push_trailer(format!("converged={}", trace.converged));
    table.push_trailer(format!("iterations={}", trace.iterations_run));

    Ok(ExperimentResult {
        kind: cfg.kind,
        table,
        precoder: Some(p),
        per_user: None,
        metadata: metadata(cfg),
    })
}

struct SweepPoint {
    m_t: usize,
    value: f64,
    room: RoomScenario,
    array: LedArray,
}

fn sweep_points(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let series: Vec<LedArray> = if cfg.led_counts.is_empty() {
        vec![cfg.array]
    } else {
        cfg.led_counts
            .iter()
            .map(|&m| {
                let side = square_side(m).expect("validated perfect square");
                LedArray::new(side, side, cfg.array.d_x(), cfg.array.d_y())
            })
            .collect::<Result<_>>()?
    };

    let mut points = Vec::new();
    match cfg.kind {
        ExperimentKind::SweepLedCount => {
            for &v in &cfg.sweep {
                let side = square_side(v as usize).expect("validated perfect square");
                let array = LedArray::new(side, side, cfg.array.d_x(), cfg.array.d_y())?;
                points.push(SweepPoint { m_t: array.m_t(), value: v, room: cfg.room, array });
            }
        }
        ExperimentKind::SweepSpacing => {
            for base in &series {
                for &v in &cfg.sweep {
                    let array = LedArray::new(base.m_x(), base.m_y(), v, v)?;
                    points.push(SweepPoint { m_t: array.m_t(), value: v, room: cfg.room, array });
                }
            }
        }
        ExperimentKind::SweepHeight => {
            for base in &series {
                for &v in &cfg.sweep {
                    let room = cfg.room.with_work_plane_height(v)?;
                    points.push(SweepPoint { m_t: base.m_t(), value: v, room, array: *base });
                }
            }
        }
        _ => unreachable!("caller checked the kind"),
    }
    Ok(points)
}

/// ARMP of the designed and classical precoders at every sweep point.
///
/// Every point uses the same seeds, so neighbouring points share their
/// random initializations and baseline draws. Rows follow the configured
/// order (series first, then sweep values).
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(cfg, cfg.kind.is_sweep(), "a sweep")?;
    let points = sweep_points(cfg)?;
    let baseline_seed = derive_seed(cfg.seed, &[BASELINE_STREAM]);

    let rows = points
        .par_iter()
        .map(|pt| {
            let sc = build_scenario(cfg, &pt.room, &pt.array)?;
            let (p, trace) = optimize(&sc.h, cfg.q, &cfg.optimizer)?;
            let proposed = armp(&sc.h, &p)?;
            let classical = classical_armp(&sc.h, cfg.q, cfg.baseline_draws, baseline_seed)?;
            Ok(vec![
                pt.m_t as f64,
                pt.value,
                proposed,
                classical,
                trace.iterations_run as f64,
                if trace.converged { 1.0 } else { 0.0 },
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(["m_t", "value", "armp_proposed", "armp_classical", "iterations", "converged"]);
    for row in rows {
        table.push_row(row);
    }
    Ok(ExperimentResult {
        kind: cfg.kind,
        table,
        precoder: None,
        per_user: None,
        metadata: metadata(cfg),
    })
}

/// BER of the designed precoder against the random precoder it was
/// initialized from, for users placed at random on the work plane.
pub fn run_ber(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(cfg, cfg.kind == ExperimentKind::Ber, "ber")?;
    let sc = build_scenario(cfg, &cfg.room, &cfg.array)?;
    let (proposed, _) = optimize(&sc.h, cfg.q, &cfg.optimizer)?;
    let classical = random_precoder(cfg.array.m_t(), cfg.q, cfg.optimizer.seed)?;

    let users = draw_user_positions(&cfg.room, cfg.ber.n_users, derive_seed(cfg.seed, &[USER_STREAM]));
    let leds = led_positions(&cfg.array, &cfg.room);
    let h_users = channel_matrix_for_points(&leds, &users, &cfg.channel)?;
    let ber_cfg = BerConfig {
        n_users: cfg.ber.n_users,
        n_bits: cfg.ber.n_bits,
        noise_sweep: cfg.ber.noise_sweep.clone(),
        trials: cfg.ber.trials,
        seed: derive_seed(cfg.seed, &[LINK_STREAM]),
        knowledge: if cfg.ber.known_channel {
            ChannelKnowledge::Perfect
        } else {
            ChannelKnowledge::Pilot {
                repetitions: cfg.ber.pilot_repetitions,
            }
        },
    };
    let cmp = ber_experiment(&h_users, &proposed, &classical, &ber_cfg)?;

    let mut per_user = cmp.per_user_table();
    per_user.header.splice(1..1, ["x".to_string(), "y".to_string()]);
    let n_noise = ber_cfg.noise_sweep.len();
    for (i, row) in per_user.rows.iter_mut().enumerate() {
        let u = &users[i / n_noise];
        row.splice(1..1, [u.x, u.y]);
    }

    Ok(ExperimentResult {
        kind: cfg.kind,
        table: cmp.to_table(),
        precoder: Some(proposed),
        per_user: Some(per_user),
        metadata: metadata(cfg),
    })
}

/// Received power at every grid point under the designed precoder.
pub fn run_power_map(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    expect_kind(cfg, cfg.kind == ExperimentKind::PowerMap, "power_map")?;
    let sc = build_scenario(cfg, &cfg.room, &cfg.array)?;
    let (p, _) = optimize(&sc.h, cfg.q, &cfg.optimizer)?;
    let map = power_map(&sc.h, &p, &sc.grid)?;
    Ok(ExperimentResult {
        kind: cfg.kind,
        table: map.to_table(),
        precoder: Some(p),
        per_user: None,
        metadata: metadata(cfg),
    })
}

/// Dispatch on the configured kind.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    match cfg.kind {
        ExperimentKind::Convergence => run_convergence(cfg),
        ExperimentKind::Ber => run_ber(cfg),
        ExperimentKind::PowerMap => run_power_map(cfg),
        _ => run_sweep(cfg),
    }
}

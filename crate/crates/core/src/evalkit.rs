//! Episode records, summary metrics, beta-posterior rate estimation,
//! infraction rates and file exports.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::simworld::{Measures, ObstacleKind};
use crate::state::{Action, StateVector};

/// Default per-step overlap threshold for the offroad/otherlane metrics.
pub const DEFAULT_THRESHOLD: f64 = 0.20;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no episode records")]
    NoRecords,
    #[error("episode {0} has no steps")]
    EmptyEpisode(usize),
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// Reached the goal line in time.
    Success,
    /// Ran out of decision steps.
    Timeout,
    /// Hit an obstacle.
    Collision,
    /// Strayed outside the road corridor.
    OffroadTerminal,
}

/// One decision step of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStep {
    pub state: StateVector,
    pub action: Action,
    pub reward: f64,
    pub measures: Measures,
    pub td_error: f64,
    pub n_components: usize,
}

/// Per-episode log feeding the evaluation metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub steps: Vec<EpisodeStep>,
    pub outcome: Outcome,
    pub total_distance: f64,
}

/// Aggregate metrics over a set of episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    /// Fraction of decision steps with off-road overlap above threshold.
    pub offroad: f64,
    /// Fraction of decision steps with opposite-lane overlap above threshold.
    pub otherlane: f64,
    /// Fraction of decision steps with either overlap above threshold.
    pub either: f64,
    /// Fraction of episodes that reached the goal.
    pub success: f64,
    /// Fraction of episodes without a collision.
    pub no_collision: f64,
    /// ((1 - either) + success + no_collision) / 3.
    pub score: f64,
    /// Total distance driven, meters.
    pub dist: f64,
}

/// Score aggregation used for the summary table.
pub fn score_of(either: f64, success: f64, no_collision: f64) -> f64 {
    ((1.0 - either) + success + no_collision) / 3.0
}

/// Computes the summary metrics at a per-step overlap threshold.
pub fn summarize(records: &[EpisodeRecord], threshold: f64) -> Result<MetricSummary, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoRecords);
    }
    let mut steps = 0usize;
    let mut offroad = 0usize;
    let mut otherlane = 0usize;
    let mut either = 0usize;
    let mut success = 0usize;
    let mut no_collision = 0usize;
    let mut dist = 0.0;
    for (i, rec) in records.iter().enumerate() {
        if rec.steps.is_empty() {
            return Err(EvalError::EmptyEpisode(i));
        }
        for step in &rec.steps {
            steps += 1;
            let off = step.measures.offroad_fraction > threshold;
            let other = step.measures.otherlane_fraction > threshold;
            if off {
                offroad += 1;
            }
            if other {
                otherlane += 1;
            }
            if off || other {
                either += 1;
            }
        }
        if rec.outcome == Outcome::Success {
            success += 1;
        }
        if !rec.steps.iter().any(|s| s.measures.collision) {
            no_collision += 1;
        }
        dist += rec.total_distance;
    }
    let n_steps = steps as f64;
    let n_eps = records.len() as f64;
    let either = either as f64 / n_steps;
    let success = success as f64 / n_eps;
    let no_collision = no_collision as f64 / n_eps;
    Ok(MetricSummary {
        offroad: offroad as f64 / n_steps,
        otherlane: otherlane as f64 / n_steps,
        either,
        success,
        no_collision,
        score: score_of(either, success, no_collision),
        dist,
    })
}

/// Beta posterior over a success rate under the Jeffreys prior
/// Beta(0.5, 0.5).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPosterior {
    pub alpha: f64,
    pub beta: f64,
}

/// Posterior parameters after `successes` and `failures` observations.
pub fn beta_posterior(successes: u64, failures: u64) -> BetaPosterior {
    BetaPosterior {
        alpha: successes as f64 + 0.5,
        beta: failures as f64 + 0.5,
    }
}

impl BetaPosterior {
    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Density `x^(a-1) (1-x)^(b-1) / B(a, b)` for x in (0, 1).
    pub fn pdf(&self, x: f64) -> f64 {
        assert!(x > 0.0 && x < 1.0, "pdf domain is (0, 1)");
        let ln_beta = ln_gamma(self.alpha) + ln_gamma(self.beta) - ln_gamma(self.alpha + self.beta);
        ((self.alpha - 1.0) * x.ln() + (self.beta - 1.0) * (1.0 - x).ln() - ln_beta).exp()
    }
}

/// km between events of one infraction class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfractionRate {
    pub events: usize,
    /// Total km / events; equals total km when no event occurred.
    pub km_between: f64,
    /// Set when no event occurred, so `km_between` is only a lower bound.
    pub unbounded: bool,
}

fn infraction_rate(total_km: f64, events: usize) -> InfractionRate {
    if events == 0 {
        InfractionRate {
            events,
            km_between: total_km,
            unbounded: true,
        }
    } else {
        InfractionRate {
            events,
            km_between: total_km / events as f64,
            unbounded: false,
        }
    }
}

/// Average kilometers driven between infractions, per class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfractionReport {
    pub total_km: f64,
    pub opposite_lane: InfractionRate,
    pub offroad: InfractionRate,
    pub collision_static: InfractionRate,
    pub collision_dynamic: InfractionRate,
}

/// Counts infraction events (rising edges of each condition within an
/// episode) and divides the total distance by each count.
pub fn infractions_per_km(
    records: &[EpisodeRecord],
    threshold: f64,
) -> Result<InfractionReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoRecords);
    }
    let mut total_km = 0.0;
    let mut opposite = 0usize;
    let mut offroad = 0usize;
    let mut coll_static = 0usize;
    let mut coll_dynamic = 0usize;
    for rec in records {
        total_km += rec.total_distance / 1000.0;
        let mut prev_other = false;
        let mut prev_off = false;
        let mut prev_coll = false;
        for step in &rec.steps {
            let m = &step.measures;
            let other = m.otherlane_fraction > threshold;
            let off = m.offroad_fraction > threshold;
            if other && !prev_other {
                opposite += 1;
            }
            if off && !prev_off {
                offroad += 1;
            }
            if m.collision && !prev_coll {
                match m.collision_kind {
                    Some(ObstacleKind::Dynamic) => coll_dynamic += 1,
                    _ => coll_static += 1,
                }
            }
            prev_other = other;
            prev_off = off;
            prev_coll = m.collision;
        }
    }
    Ok(InfractionReport {
        total_km,
        opposite_lane: infraction_rate(total_km, opposite),
        offroad: infraction_rate(total_km, offroad),
        collision_static: infraction_rate(total_km, coll_static),
        collision_dynamic: infraction_rate(total_km, coll_dynamic),
    })
}

/// One row of the per-step CSV export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: u64,
    pub episode: usize,
    pub r_o: f64,
    pub r_l: f64,
    pub reward: f64,
    pub td_error: f64,
    pub action: Action,
    pub n_components: usize,
}

/// Flattens episode records into export rows with a global step index.
pub fn step_logs(records: &[EpisodeRecord]) -> Vec<StepLog> {
    let mut rows = Vec::new();
    let mut step = 0u64;
    for (episode, rec) in records.iter().enumerate() {
        for s in &rec.steps {
            rows.push(StepLog {
                step,
                episode,
                r_o: s.measures.offroad_fraction,
                r_l: s.measures.otherlane_fraction,
                reward: s.reward,
                td_error: s.td_error,
                action: s.action,
                n_components: s.n_components,
            });
            step += 1;
        }
    }
    rows
}

/// CSV header of the per-step export.
pub const STEPS_CSV_HEADER: &str = "step,episode,r_o,r_l,reward,td_error,action,n_components";

/// Renders step logs as CSV. Floats print in shortest round-trip form, so
/// identical inputs always produce identical bytes.
pub fn steps_csv(rows: &[StepLog]) -> String {
    let mut out = String::from(STEPS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.step, r.episode, r.r_o, r.r_l, r.reward, r.td_error, r.action, r.n_components
        ));
    }
    out
}

/// Evaluation bundle serialized alongside the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryExport {
    pub summary: MetricSummary,
    pub success_posterior: BetaPosterior,
    pub no_collision_posterior: BetaPosterior,
    pub infractions: InfractionReport,
}

impl SummaryExport {
    /// Builds the full bundle from records.
    pub fn from_records(
        records: &[EpisodeRecord],
        threshold: f64,
    ) -> Result<SummaryExport, EvalError> {
        let summary = summarize(records, threshold)?;
        let n = records.len() as u64;
        let successes = records
            .iter()
            .filter(|r| r.outcome == Outcome::Success)
            .count() as u64;
        let collisions = records
            .iter()
            .filter(|r| r.steps.iter().any(|s| s.measures.collision))
            .count() as u64;
        Ok(SummaryExport {
            summary,
            success_posterior: beta_posterior(successes, n - successes),
            no_collision_posterior: beta_posterior(n - collisions, collisions),
            infractions: infractions_per_km(records, threshold)?,
        })
    }
}

/// Paths produced by [`export`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExportPaths {
    pub steps_csv: PathBuf,
    pub summary_json: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<(), EvalError> {
    std::fs::write(path, contents).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `steps.csv` and `summary.json` under `dir`. Byte-stable for
/// identical inputs.
pub fn export(
    records: &[EpisodeRecord],
    summary: &SummaryExport,
    dir: &Path,
) -> Result<ExportPaths, EvalError> {
    std::fs::create_dir_all(dir).map_err(|source| EvalError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let paths = ExportPaths {
        steps_csv: dir.join("steps.csv"),
        summary_json: dir.join("summary.json"),
    };
    write_file(&paths.steps_csv, &steps_csv(&step_logs(records)))?;
    let json = serde_json::to_string_pretty(summary).expect("summary serializes");
    write_file(&paths.summary_json, &json)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::STATE_DIM;

    fn step_with(m: Measures, reward: f64) -> EpisodeStep {
        EpisodeStep {
            state: StateVector::new([1.0 / STATE_DIM as f64; STATE_DIM]).unwrap(),
            action: Action::Forward,
            reward,
            measures: m,
            td_error: 0.25,
            n_components: 3,
        }
    }

    fn measures(r_o: f64, r_l: f64, collision: bool) -> Measures {
        Measures {
            collision,
            collision_kind: collision.then_some(ObstacleKind::Static),
            offroad_fraction: r_o,
            otherlane_fraction: r_l,
            speed: 5.0,
            distance_delta: 10.0,
        }
    }

    fn episode(steps: Vec<EpisodeStep>, outcome: Outcome) -> EpisodeRecord {
        let total_distance = steps.iter().map(|s| s.measures.distance_delta).sum();
        EpisodeRecord {
            steps,
            outcome,
            total_distance,
        }
    }

    /// 1000 single-step episodes with controlled rates.
    fn synthetic_records(either_steps: usize, successes: usize, collisions: usize) -> Vec<EpisodeRecord> {
        (0..1000)
            .map(|i| {
                let m = measures(0.0, if i < either_steps { 0.5 } else { 0.0 }, i < collisions);
                let outcome = if i < successes {
                    Outcome::Success
                } else {
                    Outcome::Timeout
                };
                episode(vec![step_with(m, 0.1)], outcome)
            })
            .collect()
    }

    #[test]
    fn summarize_reproduces_reference_average_row() {
        // Either 11.1%, success 96.8%, no collision 84.1% -> score 0.90.
        let records = synthetic_records(111, 968, 159);
        let s = summarize(&records, DEFAULT_THRESHOLD).unwrap();
        assert!((s.either - 0.111).abs() < 1e-12);
        assert!((s.success - 0.968).abs() < 1e-12);
        assert!((s.no_collision - 0.841).abs() < 1e-12);
        assert!((s.score - 0.90).abs() < 0.005, "score {}", s.score);
    }

    #[test]
    fn summarize_reproduces_reference_best_row() {
        // Either 2.4%, success 100%, no collision 100% -> score 0.99.
        let records = synthetic_records(24, 1000, 0);
        let s = summarize(&records, DEFAULT_THRESHOLD).unwrap();
        assert!((s.score - 0.99).abs() < 0.005, "score {}", s.score);
    }

    #[test]
    fn perfect_records_score_one() {
        let records = synthetic_records(0, 1000, 0);
        let s = summarize(&records, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(s.score, 1.0);
        assert_eq!(s.offroad, 0.0);
        assert_eq!(s.otherlane, 0.0);
        // Dist sums every step's delta.
        assert!((s.dist - 10_000.0).abs() < 1e-9);
    }

    #[test]
    fn score_matches_invariant_for_mixed_records() {
        let records = synthetic_records(300, 500, 250);
        let s = summarize(&records, DEFAULT_THRESHOLD).unwrap();
        let expected = ((1.0 - s.either) + s.success + s.no_collision) / 3.0;
        assert!((s.score - expected).abs() < 1e-15);
        assert!(s.either >= s.offroad.max(s.otherlane));
    }

    #[test]
    fn summarize_rejects_empty_input() {
        assert!(matches!(
            summarize(&[], DEFAULT_THRESHOLD),
            Err(EvalError::NoRecords)
        ));
    }

    #[test]
    fn beta_posterior_parameters_and_mean() {
        let p = beta_posterior(0, 0);
        assert_eq!((p.alpha, p.beta), (0.5, 0.5));
        assert!((p.mean() - 0.5).abs() < 1e-15);

        let p = beta_posterior(9, 1);
        assert_eq!((p.alpha, p.beta), (9.5, 1.5));
        assert!((p.mean() - 9.5 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn jeffreys_density_at_half_is_two_over_pi() {
        let p = beta_posterior(0, 0);
        let want = 2.0 / std::f64::consts::PI;
        assert!((p.pdf(0.5) - want).abs() < 1e-9);
    }

    #[test]
    fn beta_density_integrates_to_one() {
        // Substitute x = sin^2(theta) to remove the endpoint singularities,
        // then integrate with Simpson.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let s = rng.gen_range(0..=50u64);
            let f = rng.gen_range(0..=50u64);
            let p = beta_posterior(s, f);
            let g = |theta: f64| -> f64 {
                let sin = theta.sin();
                let x = (sin * sin).clamp(1e-300, 1.0 - 1e-16);
                p.pdf(x) * (2.0 * theta).sin()
            };
            let (a, b, n) = (0.0_f64, std::f64::consts::FRAC_PI_2, 4000usize);
            let h = (b - a) / n as f64;
            let mut acc = g(a + 1e-12) + g(b - 1e-12);
            for i in 1..n {
                let w = if i % 2 == 0 { 2.0 } else { 4.0 };
                acc += w * g(a + i as f64 * h);
            }
            let integral = acc * h / 3.0;
            assert!(
                (integral - 1.0).abs() < 1e-6,
                "s={s} f={f}: integral {integral}"
            );
        }
    }

    #[test]
    fn infraction_rates_divide_distance() {
        // One 10 km episode with two separate opposite-lane excursions.
        let mut steps = Vec::new();
        for i in 0..1000 {
            let in_other = (100..110).contains(&i) || (500..505).contains(&i);
            steps.push(step_with(measures(0.0, if in_other { 0.5 } else { 0.0 }, false), 0.0));
        }
        let records = vec![episode(steps, Outcome::Success)];
        let report = infractions_per_km(&records, DEFAULT_THRESHOLD).unwrap();
        assert!((report.total_km - 10.0).abs() < 1e-12);
        assert_eq!(report.opposite_lane.events, 2);
        assert!((report.opposite_lane.km_between - 5.0).abs() < 1e-12);
        assert!(!report.opposite_lane.unbounded);

        // Zero collisions: unbounded, reported as total km.
        assert_eq!(report.collision_static.events, 0);
        assert!(report.collision_static.unbounded);
        assert!((report.collision_static.km_between - 10.0).abs() < 1e-12);
    }

    #[test]
    fn infraction_classes_count_independently() {
        let mut steps = Vec::new();
        steps.push(step_with(measures(0.5, 0.5, false), 0.0));
        steps.push(step_with(measures(0.0, 0.0, false), 0.0));
        let mut m = measures(0.0, 0.0, true);
        m.collision_kind = Some(ObstacleKind::Dynamic);
        steps.push(step_with(m, 0.0));
        let records = vec![episode(steps, Outcome::Collision)];
        let report = infractions_per_km(&records, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(report.opposite_lane.events, 1);
        assert_eq!(report.offroad.events, 1);
        assert_eq!(report.collision_dynamic.events, 1);
        assert_eq!(report.collision_static.events, 0);
    }

    #[test]
    fn empty_records_export_header_only() {
        let csv = steps_csv(&step_logs(&[]));
        assert_eq!(csv, format!("{STEPS_CSV_HEADER}\n"));
    }

    #[test]
    fn csv_round_trips_numeric_fields() {
        let records = vec![episode(
            vec![
                step_with(measures(0.125, 1.0 / 3.0, false), -0.7312519),
                step_with(measures(0.0, 0.0, true), 49.25000001),
            ],
            Outcome::Collision,
        )];
        let rows = step_logs(&records);
        let csv = steps_csv(&rows);
        for (line, row) in csv.lines().skip(1).zip(rows.iter()) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 8);
            assert_eq!(fields[0].parse::<u64>().unwrap(), row.step);
            assert_eq!(fields[1].parse::<usize>().unwrap(), row.episode);
            assert_eq!(fields[2].parse::<f64>().unwrap(), row.r_o);
            assert_eq!(fields[3].parse::<f64>().unwrap(), row.r_l);
            assert_eq!(fields[4].parse::<f64>().unwrap(), row.reward);
            assert_eq!(fields[5].parse::<f64>().unwrap(), row.td_error);
            assert_eq!(fields[6].parse::<Action>().unwrap(), row.action);
            assert_eq!(fields[7].parse::<usize>().unwrap(), row.n_components);
        }
    }

    #[test]
    fn exports_are_byte_identical() {
        let records = synthetic_records(10, 900, 20);
        let summary = SummaryExport::from_records(&records, DEFAULT_THRESHOLD).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = export(&records, &summary, &dir.path().join("a")).unwrap();
        let b = export(&records, &summary, &dir.path().join("b")).unwrap();
        assert_eq!(
            std::fs::read(&a.steps_csv).unwrap(),
            std::fs::read(&b.steps_csv).unwrap()
        );
        assert_eq!(
            std::fs::read(&a.summary_json).unwrap(),
            std::fs::read(&b.summary_json).unwrap()
        );
    }
}

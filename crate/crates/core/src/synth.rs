//! Synthetic AIS fleets with known ground-truth motion.
//!
//! Each vessel gets one motion regime for its whole life and sails a chain
//! of legs toward random waypoints inside the operating region. Motion is
//! integrated at one-second resolution on the sphere using unit position
//! and heading vectors; reports are emitted at irregular integer-second
//! gaps, carry the true instantaneous speed and course, and have isotropic
//! Gaussian noise added to the reported position only.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::geo::{normalize_lon, EarthModel, GeoPoint, KM_PER_NAUTICAL_MILE};
use crate::ingest::{AisRecord, BoundingBox, Mmsi, MAX_ENCODABLE_SOG};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("fleet config is empty: {0}")]
    EmptyConfig(&'static str),
    #[error("invalid fleet config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Motion {
    ConstantVelocity,
    /// Positive rates turn to starboard (course increasing).
    ConstantTurn { rate_deg_per_min: f64 },
    /// Speed starts each leg at one end of the regime's speed band and ramps
    /// toward the other, holding once it gets there.
    SpeedRamp { rate_knots_per_min: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub weight: f64,
    pub motion: Motion,
    /// Inclusive speed band in knots.
    pub speed_knots: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FleetConfig {
    pub n_vessels: usize,
    pub duration_min: u32,
    /// Inclusive report-gap range in whole seconds.
    pub emission_interval_s: [u32; 2],
    pub regimes: Vec<Regime>,
    pub position_noise_m: f64,
    pub seed: u64,
    pub start: DateTime<Utc>,
    /// Operating region; vessels start and steer toward waypoints inside it.
    pub region: BoundingBox,
    /// Inclusive leg-duration range in whole minutes.
    pub leg_minutes: [u32; 2],
    pub first_mmsi: u32,
}

impl Default for FleetConfig {
    fn default() -> Self {
        FleetConfig {
            n_vessels: 20,
            duration_min: 24 * 60,
            emission_interval_s: [3, 30],
            regimes: vec![Regime { weight: 1.0, motion: Motion::ConstantVelocity, speed_knots: [8.0, 16.0] }],
            position_noise_m: 0.0,
            seed: 20141101,
            start: Utc.with_ymd_and_hms(2014, 11, 1, 0, 0, 0).unwrap(),
            region: BoundingBox::aegean(),
            leg_minutes: [60, 180],
            first_mmsi: 237_000_000,
        }
    }
}

impl FleetConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_vessels == 0 {
            return Err(SynthError::EmptyConfig("zero vessels"));
        }
        if self.duration_min == 0 {
            return Err(SynthError::EmptyConfig("zero duration"));
        }
        let bad = |msg: String| Err(SynthError::InvalidConfig(msg));
        let [lo, hi] = self.emission_interval_s;
        if lo < 3 || lo > hi {
            return bad(format!("emission interval [{lo}, {hi}] s must satisfy 3 <= min <= max"));
        }
        let [leg_lo, leg_hi] = self.leg_minutes;
        if leg_lo == 0 || leg_lo > leg_hi {
            return bad(format!("leg duration [{leg_lo}, {leg_hi}] min must satisfy 1 <= min <= max"));
        }
        if self.regimes.is_empty() {
            return bad("no motion regimes".into());
        }
        if self.regimes.iter().any(|r| !r.weight.is_finite() || r.weight < 0.0)
            || self.regimes.iter().map(|r| r.weight).sum::<f64>() <= 0.0
        {
            return bad("regime weights must be >= 0 with a positive sum".into());
        }
        for r in &self.regimes {
            let [s_lo, s_hi] = r.speed_knots;
            if !(0.0..=MAX_ENCODABLE_SOG).contains(&s_lo) || !(s_lo..=MAX_ENCODABLE_SOG).contains(&s_hi) {
                return bad(format!("speed band [{s_lo}, {s_hi}] kn is not ordered within AIS range"));
            }
            let rate = match r.motion {
                Motion::ConstantVelocity => 0.0,
                Motion::ConstantTurn { rate_deg_per_min } => rate_deg_per_min,
                Motion::SpeedRamp { rate_knots_per_min } => rate_knots_per_min,
            };
            if !rate.is_finite() {
                return bad("regime rate must be finite".into());
            }
        }
        if !self.position_noise_m.is_finite() || self.position_noise_m < 0.0 {
            return bad(format!("position noise {} m must be >= 0", self.position_noise_m));
        }
        if !self.region.is_valid() {
            return bad("region box must have min < max on both axes".into());
        }
        let last = self.first_mmsi as u64 + self.n_vessels as u64 - 1;
        if !Mmsi(self.first_mmsi).is_valid() || last > 999_999_999 {
            return bad("vessel identities would leave the 9-digit MMSI range".into());
        }
        Ok(())
    }

    /// Largest-remainder apportionment of vessels to regimes.
    pub fn regime_counts(&self) -> Vec<usize> {
        let total: f64 = self.regimes.iter().map(|r| r.weight).sum();
        let quotas: Vec<f64> = self.regimes.iter().map(|r| r.weight / total * self.n_vessels as f64).collect();
        let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
        let assigned: usize = counts.iter().sum();
        for &i in order.iter().take(self.n_vessels - assigned) {
            counts[i] += 1;
        }
        counts
    }

    /// Regime index for each vessel, shuffled deterministically from the seed.
    pub fn regime_assignment(&self) -> Vec<usize> {
        let mut labels: Vec<usize> =
            self.regime_counts().iter().enumerate().flat_map(|(i, &n)| std::iter::repeat_n(i, n)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        labels.shuffle(&mut rng);
        labels
    }
}

/// One emitted report alongside the noise-free position it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthReport {
    pub record: AisRecord,
    pub true_position: GeoPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VesselTrack {
    pub mmsi: Mmsi,
    pub regime: usize,
    pub reports: Vec<TruthReport>,
}

type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn lin(a: Vec3, ka: f64, b: Vec3, kb: f64) -> Vec3 {
    [a[0] * ka + b[0] * kb, a[1] * ka + b[1] * kb, a[2] * ka + b[2] * kb]
}

fn unit(a: Vec3) -> Vec3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn local_frame(lat_deg: f64, lon_deg: f64) -> (Vec3, Vec3, Vec3) {
    let (sp, cp) = lat_deg.to_radians().sin_cos();
    let (sl, cl) = lon_deg.to_radians().sin_cos();
    let position = [cp * cl, cp * sl, sp];
    let north = [-sp * cl, -sp * sl, cp];
    let east = [-sl, cl, 0.0];
    (position, north, east)
}

/// Position on the unit sphere plus unit heading tangent to it.
#[derive(Debug, Clone, Copy)]
struct ShipState {
    p: Vec3,
    u: Vec3,
}

impl ShipState {
    fn new(at: GeoPoint, course_deg: f64) -> Self {
        let (p, n, e) = local_frame(at.lat_deg, at.lon_deg);
        let (s, c) = course_deg.to_radians().sin_cos();
        ShipState { p, u: lin(n, c, e, s) }
    }

    fn position(&self) -> GeoPoint {
        let [x, y, z] = self.p;
        let lat = z.atan2((x * x + y * y).sqrt()).to_degrees();
        let lon = normalize_lon(y.atan2(x).to_degrees()).expect("finite state");
        GeoPoint { lat_deg: lat, lon_deg: lon }
    }

    fn course_deg(&self) -> f64 {
        let at = self.position();
        let (_, n, e) = local_frame(at.lat_deg, at.lon_deg);
        let c = dot(self.u, e).atan2(dot(self.u, n)).to_degrees().rem_euclid(360.0);
        if c >= 360.0 {
            0.0
        } else {
            c
        }
    }

    /// Great-circle move by `delta` radians of arc.
    fn advance(&mut self, delta: f64) {
        let (s, c) = delta.sin_cos();
        let p = lin(self.p, c, self.u, s);
        let u = lin(self.u, c, self.p, -s);
        self.p = unit(p);
        self.u = unit(lin(u, 1.0, self.p, -dot(u, self.p)));
    }

    /// Rotates the heading clockwise (seen from above) by `angle` radians.
    fn turn(&mut self, angle: f64) {
        let (s, c) = angle.sin_cos();
        self.u = unit(lin(self.u, c, cross(self.u, self.p), s));
    }
}

struct Leg {
    end_s: u64,
    start_s: u64,
    start_speed: f64,
}

fn ramp_speed(regime: &Regime, leg: &Leg, t_s: u64) -> f64 {
    let [lo, hi] = regime.speed_knots;
    match regime.motion {
        Motion::SpeedRamp { rate_knots_per_min } => {
            let minutes = (t_s - leg.start_s) as f64 / 60.0;
            (leg.start_speed + rate_knots_per_min * minutes).clamp(lo, hi)
        }
        _ => leg.start_speed,
    }
}

fn sample_in(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

fn initial_bearing_deg(from: GeoPoint, to: GeoPoint) -> f64 {
    let (l1, l2) = (from.lat_deg.to_radians(), to.lat_deg.to_radians());
    let dlon = (to.lon_deg - from.lon_deg).to_radians();
    let y = dlon.sin() * l2.cos();
    let x = l1.cos() * l2.sin() - l1.sin() * l2.cos() * dlon.cos();
    y.atan2(x).to_degrees().rem_euclid(360.0)
}

fn random_point(rng: &mut ChaCha8Rng, region: &BoundingBox) -> GeoPoint {
    GeoPoint {
        lat_deg: rng.random_range(region.min_lat..=region.max_lat),
        lon_deg: rng.random_range(region.min_lon..=region.max_lon),
    }
}

/// Simulates one vessel, returning its reports together with true positions.
pub fn simulate_vessel(config: &FleetConfig, index: usize, regime_index: usize) -> VesselTrack {
    let regime = config.regimes[regime_index];
    let mut motion_rng = ChaCha8Rng::seed_from_u64(config.seed);
    motion_rng.set_stream(2 * index as u64 + 1);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
    noise_rng.set_stream(2 * index as u64 + 2);

    let earth_m = EarthModel::default().radius_km() * 1000.0;
    let noise = Normal::new(0.0, config.position_noise_m).expect("validated noise");
    let mmsi = Mmsi(config.first_mmsi + index as u32);
    let horizon_s = config.duration_min as u64 * 60;
    let [gap_lo, gap_hi] = config.emission_interval_s;
    let [leg_lo, leg_hi] = config.leg_minutes;

    let start = random_point(&mut motion_rng, &config.region);
    let mut state = ShipState::new(start, motion_rng.random_range(0.0..360.0));
    let new_leg = |rng: &mut ChaCha8Rng, state: &mut ShipState, t_s: u64| -> Leg {
        let waypoint = random_point(rng, &config.region);
        let here = state.position();
        if here != waypoint {
            *state = ShipState::new(here, initial_bearing_deg(here, waypoint));
        }
        let start_speed = match regime.motion {
            Motion::SpeedRamp { rate_knots_per_min } if rate_knots_per_min >= 0.0 => regime.speed_knots[0],
            Motion::SpeedRamp { .. } => regime.speed_knots[1],
            _ => sample_in(rng, regime.speed_knots),
        };
        let minutes = rng.random_range(leg_lo..=leg_hi) as u64;
        Leg { start_s: t_s, end_s: t_s + minutes * 60, start_speed }
    };
    let mut leg = new_leg(&mut motion_rng, &mut state, 0);

    let turn_per_s = match regime.motion {
        Motion::ConstantTurn { rate_deg_per_min } => (rate_deg_per_min / 60.0).to_radians(),
        _ => 0.0,
    };
    let km_per_knot_second = KM_PER_NAUTICAL_MILE / 3600.0;
    let radius_km = EarthModel::default().radius_km();

    let mut reports = Vec::new();
    let mut next_emit = motion_rng.random_range(0..gap_hi) as u64;
    let mut t = 0u64;
    while next_emit < horizon_s {
        while t < next_emit {
            if t == leg.end_s {
                leg = new_leg(&mut motion_rng, &mut state, t);
            }
            let v0 = ramp_speed(&regime, &leg, t);
            let v1 = ramp_speed(&regime, &leg, t + 1);
            let delta = 0.5 * (v0 + v1) * km_per_knot_second / radius_km;
            state.turn(0.5 * turn_per_s);
            state.advance(delta);
            state.turn(0.5 * turn_per_s);
            t += 1;
        }
        if t == leg.end_s {
            leg = new_leg(&mut motion_rng, &mut state, t);
        }
        let truth = state.position();
        let (dn, de): (f64, f64) = (noise.sample(&mut noise_rng), noise.sample(&mut noise_rng));
        let lat = (truth.lat_deg + (dn / earth_m).to_degrees()).clamp(-90.0, 90.0);
        let lon = truth.lon_deg + (de / (earth_m * truth.lat_deg.to_radians().cos())).to_degrees();
        let reported = GeoPoint { lat_deg: lat, lon_deg: normalize_lon(lon).expect("finite noise") };
        let record = AisRecord {
            mmsi,
            timestamp: config.start + Duration::seconds(t as i64),
            position: reported,
            sog_knots: ramp_speed(&regime, &leg, t),
            cog_deg: state.course_deg(),
        };
        reports.push(TruthReport { record, true_position: truth });
        next_emit += motion_rng.random_range(gap_lo..=gap_hi) as u64;
    }
    VesselTrack { mmsi, regime: regime_index, reports }
}

/// Simulates the whole fleet, one track per vessel, in vessel order.
pub fn simulate_fleet(config: &FleetConfig, exec: Execution) -> Result<Vec<VesselTrack>, SynthError> {
    config.validate()?;
    let assignment = config.regime_assignment();
    Ok(exec.map_range(config.n_vessels, |i| simulate_vessel(config, i, assignment[i])))
}

/// Generates the fleet's reports merged by (timestamp, mmsi).
pub fn generate_fleet(config: &FleetConfig, exec: Execution) -> Result<Vec<AisRecord>, SynthError> {
    let tracks = simulate_fleet(config, exec)?;
    let mut records: Vec<AisRecord> = tracks.iter().flat_map(|t| t.reports.iter().map(|r| r.record)).collect();
    records.sort_by_key(|r| (r.timestamp, r.mmsi));
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{dead_reckon, haversine_km};

    fn straight_config() -> FleetConfig {
        FleetConfig {
            n_vessels: 1,
            duration_min: 60,
            emission_interval_s: [3, 40],
            regimes: vec![Regime { weight: 1.0, motion: Motion::ConstantVelocity, speed_knots: [10.0, 10.0] }],
            leg_minutes: [600, 600],
            ..FleetConfig::default()
        }
    }

    #[test]
    fn noise_free_straight_runs_are_dead_reckoning() {
        let earth = EarthModel::default();
        let records = generate_fleet(&straight_config(), Execution::Sequential).unwrap();
        assert!(records.len() > 60);
        for pair in records.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            assert_eq!(a.sog_knots, 10.0);
            let minutes = (b.timestamp - a.timestamp).num_seconds() as f64 / 60.0;
            let predicted = dead_reckon(a.position, a.sog_knots, a.cog_deg, minutes, earth).unwrap();
            let residual = haversine_km(predicted, b.position, earth).unwrap();
            assert!(residual <= 1e-6, "residual {residual} km");
        }
    }

    #[test]
    fn a_single_leg_keeps_its_initial_course_near_constant() {
        let records = generate_fleet(&straight_config(), Execution::Sequential).unwrap();
        let first = records[0].cog_deg;
        // Great circles drift slowly in course; over 60 min at 10 kn it stays small.
        assert!(records.iter().all(|r| (r.cog_deg - first).abs() < 0.2 || (r.cog_deg - first).abs() > 359.8));
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let cfg = FleetConfig { n_vessels: 4, duration_min: 90, position_noise_m: 20.0, ..FleetConfig::default() };
        let a = generate_fleet(&cfg, Execution::Sequential).unwrap();
        let b = generate_fleet(&cfg, Execution::Parallel).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        crate::ingest::write_ais_csv(&mut ca, &a).unwrap();
        crate::ingest::write_ais_csv(&mut cb, &b).unwrap();
        assert_eq!(ca, cb);
        let other = generate_fleet(&FleetConfig { seed: 1, ..cfg }, Execution::Sequential).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn emission_gaps_respect_the_configured_range() {
        let cfg = FleetConfig { n_vessels: 3, duration_min: 120, emission_interval_s: [7, 19], ..FleetConfig::default() };
        for track in simulate_fleet(&cfg, Execution::Sequential).unwrap() {
            for w in track.reports.windows(2) {
                let gap = (w[1].record.timestamp - w[0].record.timestamp).num_seconds();
                assert!((7..=19).contains(&gap), "{gap}");
            }
        }
    }

    #[test]
    fn noise_moves_only_the_reported_position() {
        let cfg = FleetConfig { n_vessels: 2, duration_min: 60, position_noise_m: 20.0, ..FleetConfig::default() };
        let clean = FleetConfig { position_noise_m: 0.0, ..cfg.clone() };
        let noisy = simulate_fleet(&cfg, Execution::Sequential).unwrap();
        let truth = simulate_fleet(&clean, Execution::Sequential).unwrap();
        let earth = EarthModel::default();
        let mut offsets = Vec::new();
        for (n, t) in noisy.iter().zip(&truth) {
            for (a, b) in n.reports.iter().zip(&t.reports) {
                assert_eq!(a.true_position, b.record.position);
                assert_eq!((a.record.sog_knots, a.record.cog_deg), (b.record.sog_knots, b.record.cog_deg));
                offsets.push(haversine_km(a.record.position, a.true_position, earth).unwrap() * 1000.0);
            }
        }
        // Rayleigh mean for sigma = 20 m per axis is 20 * sqrt(pi/2) ~ 25 m.
        let mean = offsets.iter().sum::<f64>() / offsets.len() as f64;
        assert!((20.0..30.0).contains(&mean), "{mean}");
    }

    #[test]
    fn constant_turn_matches_the_circular_arc_and_defeats_dead_reckoning() {
        let rate = 3.0;
        let speed = 8.0;
        let cfg = FleetConfig {
            n_vessels: 1,
            duration_min: 60,
            emission_interval_s: [60, 60],
            regimes: vec![Regime {
                weight: 1.0,
                motion: Motion::ConstantTurn { rate_deg_per_min: rate },
                speed_knots: [speed, speed],
            }],
            leg_minutes: [600, 600],
            ..FleetConfig::default()
        };
        let earth = EarthModel::default();
        let track = &simulate_fleet(&cfg, Execution::Sequential).unwrap()[0];
        let reports: Vec<_> = track.reports.iter().map(|r| r.record).collect();
        let step = reports.iter().position(|r| r.timestamp == reports[0].timestamp + Duration::minutes(10)).unwrap();
        for i in 0..reports.len() - step {
            let (a, b) = (reports[i], reports[i + step]);
            // Course advances by rate * minutes.
            let turned = (b.cog_deg - a.cog_deg).rem_euclid(360.0);
            // Meridian convergence adds a small drift on top of the commanded turn.
            assert!((turned - rate * 10.0).abs() < 0.05, "{turned}");

            // Analytic arc on the local tangent plane: chord 2R sin(wT/2)
            // along the mean heading.
            let omega = rate.to_radians();
            let radius_km = speed * KM_PER_NAUTICAL_MILE / 60.0 / omega;
            let chord = 2.0 * radius_km * (omega * 10.0 / 2.0).sin();
            let heading = a.cog_deg + rate * 10.0 / 2.0;
            let arc_end = dead_reckon(a.position, chord / KM_PER_NAUTICAL_MILE * 60.0 / 10.0, heading.rem_euclid(360.0), 10.0, earth).unwrap();
            assert!(haversine_km(arc_end, b.position, earth).unwrap() < 1e-3);

            let straight = dead_reckon(a.position, a.sog_knots, a.cog_deg, 10.0, earth).unwrap();
            let miss = haversine_km(straight, b.position, earth).unwrap();
            let arc_miss = haversine_km(straight, arc_end, earth).unwrap();
            assert!(miss > 0.0);
            assert!((miss - arc_miss).abs() < 1e-3, "{miss} vs {arc_miss}");
        }
    }

    #[test]
    fn speed_ramp_accelerates_then_holds() {
        let cfg = FleetConfig {
            n_vessels: 1,
            duration_min: 60,
            emission_interval_s: [60, 60],
            regimes: vec![Regime {
                weight: 1.0,
                motion: Motion::SpeedRamp { rate_knots_per_min: 0.5 },
                speed_knots: [5.0, 15.0],
            }],
            leg_minutes: [600, 600],
            ..FleetConfig::default()
        };
        let records = generate_fleet(&cfg, Execution::Sequential).unwrap();
        let t0 = cfg.start;
        for r in &records {
            let minutes = (r.timestamp - t0).num_seconds() as f64 / 60.0;
            assert!((r.sog_knots - (5.0 + 0.5 * minutes).min(15.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn apportionment_is_exact() {
        let cfg = FleetConfig {
            n_vessels: 50,
            regimes: vec![
                Regime { weight: 0.4, motion: Motion::ConstantVelocity, speed_knots: [10.0, 18.0] },
                Regime { weight: 0.4, motion: Motion::ConstantTurn { rate_deg_per_min: 3.0 }, speed_knots: [4.0, 8.0] },
                Regime { weight: 0.2, motion: Motion::SpeedRamp { rate_knots_per_min: 0.25 }, speed_knots: [20.0, 30.0] },
            ],
            ..FleetConfig::default()
        };
        assert_eq!(cfg.regime_counts(), vec![20, 20, 10]);
        let labels = cfg.regime_assignment();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 20);
        let three = FleetConfig { n_vessels: 3, regimes: vec![cfg.regimes[0], cfg.regimes[1]], ..cfg.clone() };
        assert_eq!(three.regime_counts().iter().sum::<usize>(), 3);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = FleetConfig::default();
        assert_eq!(
            generate_fleet(&FleetConfig { n_vessels: 0, ..base.clone() }, Execution::Sequential),
            Err(SynthError::EmptyConfig("zero vessels"))
        );
        assert!(matches!(
            generate_fleet(&FleetConfig { duration_min: 0, ..base.clone() }, Execution::Sequential),
            Err(SynthError::EmptyConfig(_))
        ));
        assert!(FleetConfig { emission_interval_s: [2, 30], ..base.clone() }.validate().is_err());
        assert!(FleetConfig { emission_interval_s: [30, 10], ..base.clone() }.validate().is_err());
        let mut zero_weights = base.clone();
        zero_weights.regimes[0].weight = 0.0;
        assert!(zero_weights.validate().is_err());
    }
}

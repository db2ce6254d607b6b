//! Deterministic synthetic scenarios in the ingest file format.
//!
//! Each agent commutes at most once a day and charges at home in the
//! cheapest minutes before its next departure. Prices share a night trough,
//! so charging clusters and the transformer overloads. With
//! `inject_dst_bug` the charging scheduler keeps standard time all year and
//! loses the minutes it planned past the real departure during summer time.
//!
//! Every agent draws from its own ChaCha stream, so results do not depend on
//! evaluation order.

mod schedule;
mod write;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, Duration, NaiveDate, TimeZone, Timelike, Utc, Weekday};
use chrono_tz::{OffsetComponents, Tz};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};
use thiserror::Error;

use crate::ingest::ScenarioManifest;
use crate::store::{AgentMatrix, AgentMeta, EventKind, EventRecord, ScenarioStore, StoreParts, SystemSeries};
use crate::time::{local_midnight, TimeIndex};

pub use schedule::{allocate_power, apply_dst_bug, minutes_needed, smart_charge_schedule};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("infeasible configuration: {0}")]
    InfeasibleConfig(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvModel {
    pub name: String,
    pub battery_kwh: f64,
    pub charger_kw: f64,
    pub consumption_kwh_per_km: f64,
}

impl EvModel {
    fn new(name: &str, battery_kwh: f64, charger_kw: f64, consumption_kwh_per_km: f64) -> Self {
        Self { name: name.into(), battery_kwh, charger_kw, consumption_kwh_per_km }
    }
}

pub fn default_ev_catalog() -> Vec<EvModel> {
    vec![
        EvModel::new("compact", 40.0, 3.7, 0.15),
        EvModel::new("midsize", 60.0, 7.4, 0.17),
        EvModel::new("large", 77.0, 11.0, 0.19),
    ]
}

/// Spot price, network tariff and CO₂ intensity; DKK/kWh and kg/kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceModel {
    pub spot_base: f64,
    pub spot_amplitude: f64,
    /// Local hour of the daily spot minimum.
    pub trough_hour: f64,
    /// Hourly AR(1) noise on the spot price.
    pub noise_std: f64,
    pub noise_correlation: f64,
    /// Time-of-use tariff by local hour, April to September.
    pub tariff_summer: [f64; 24],
    pub tariff_winter: [f64; 24],
    pub co2_base: f64,
    pub co2_amplitude: f64,
    pub co2_peak_hour: f64,
    pub co2_noise_std: f64,
}

fn tariff_schedule(low: f64, high: f64, peak: f64) -> [f64; 24] {
    std::array::from_fn(|h| match h {
        0..=5 => low,
        17..=20 => peak,
        _ => high,
    })
}

impl Default for PriceModel {
    fn default() -> Self {
        Self {
            spot_base: 0.75,
            spot_amplitude: 0.35,
            trough_hour: 3.0,
            noise_std: 0.12,
            noise_correlation: 0.85,
            tariff_summer: tariff_schedule(0.13, 0.20, 0.52),
            tariff_winter: tariff_schedule(0.13, 0.39, 1.03),
            co2_base: 0.13,
            co2_amplitude: 0.05,
            co2_peak_hour: 18.0,
            co2_noise_std: 0.015,
        }
    }
}

/// Daily commute. Times are minutes after local midnight.
#[derive(Debug, Clone, PartialEq)]
pub struct TripModel {
    pub departure_mean_min: f64,
    pub departure_std_min: f64,
    pub departure_earliest_min: u32,
    pub departure_latest_min: u32,
    pub arrival_mean_min: f64,
    pub arrival_std_min: f64,
    pub arrival_latest_min: u32,
    pub min_trip_min: u32,
    /// Log-normal parameters of the round-trip distance in km.
    pub distance_mu: f64,
    pub distance_sigma: f64,
    pub weekend_stay_home_prob: f64,
    /// Trip energy is capped at this many hours of charging.
    pub max_charge_hours: f64,
}

impl Default for TripModel {
    fn default() -> Self {
        Self {
            departure_mean_min: 450.0,
            departure_std_min: 45.0,
            departure_earliest_min: 300,
            departure_latest_min: 600,
            arrival_mean_min: 1020.0,
            arrival_std_min: 60.0,
            arrival_latest_min: 1260,
            min_trip_min: 60,
            distance_mu: 30f64.ln(),
            distance_sigma: 0.5,
            weekend_stay_home_prob: 0.4,
            max_charge_hours: 6.0,
        }
    }
}

/// Household demand: a floor plus morning and evening Gaussian bumps, scaled
/// per agent, with multiplicative minute noise.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseloadModel {
    pub floor_kw: f64,
    pub morning_kw: f64,
    pub morning_hour: f64,
    pub morning_width_h: f64,
    pub evening_kw: f64,
    pub evening_hour: f64,
    pub evening_width_h: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub noise: f64,
}

impl Default for BaseloadModel {
    fn default() -> Self {
        Self {
            floor_kw: 0.25,
            morning_kw: 0.5,
            morning_hour: 7.5,
            morning_width_h: 1.2,
            evening_kw: 1.0,
            evening_hour: 18.5,
            evening_width_h: 1.8,
            scale_min: 0.6,
            scale_max: 1.6,
            noise: 0.15,
        }
    }
}

impl BaseloadModel {
    fn profile(&self, hour: f64) -> f64 {
        let bump = |h0: f64, w: f64| (-0.5 * ((hour - h0) / w).powi(2)).exp();
        self.floor_kw
            + self.morning_kw * bump(self.morning_hour, self.morning_width_h)
            + self.evening_kw * bump(self.evening_hour, self.evening_width_h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    /// Defaults to `seed-<seed>`.
    pub scenario_id: Option<String>,
    pub n_agents: usize,
    pub start_date: NaiveDate,
    /// Exclusive.
    pub end_date: NaiveDate,
    pub timezone: Tz,
    pub transformer_capacity_kw: f64,
    pub soc_target_pct: f64,
    pub prices: PriceModel,
    pub trips: TripModel,
    pub ev_catalog: Vec<EvModel>,
    pub baseload: BaseloadModel,
    pub inject_dst_bug: bool,
}

pub const DEFAULT_CAPACITY_KW: f64 = 400.0;

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            scenario_id: None,
            n_agents: 126,
            start_date: NaiveDate::from_ymd_opt(2025, 1, 1).expect("valid date"),
            end_date: NaiveDate::from_ymd_opt(2026, 1, 1).expect("valid date"),
            timezone: chrono_tz::Europe::Copenhagen,
            transformer_capacity_kw: DEFAULT_CAPACITY_KW,
            soc_target_pct: 90.0,
            prices: PriceModel::default(),
            trips: TripModel::default(),
            ev_catalog: default_ev_catalog(),
            baseload: BaseloadModel::default(),
            inject_dst_bug: false,
        }
    }
}

impl GenConfig {
    pub fn scenario_id(&self) -> String {
        self.scenario_id.clone().unwrap_or_else(|| format!("seed-{}", self.seed))
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let fail = |m: String| Err(GenError::InfeasibleConfig(m));
        if self.end_date <= self.start_date {
            return fail("end date must be after start date".into());
        }
        if self.n_agents == 0 {
            return fail("at least one agent is required".into());
        }
        if !(self.transformer_capacity_kw.is_finite() && self.transformer_capacity_kw > 0.0) {
            return fail("transformer capacity must be positive".into());
        }
        if !(self.soc_target_pct > 10.0 && self.soc_target_pct <= 100.0) {
            return fail("SoC target must lie in (10, 100]".into());
        }
        if self.ev_catalog.is_empty() {
            return fail("EV catalog is empty".into());
        }
        for m in &self.ev_catalog {
            if !(m.battery_kwh > 0.0 && m.charger_kw > 0.0 && m.consumption_kwh_per_km > 0.0) {
                return fail(format!("EV model {:?} needs positive battery, charger and consumption", m.name));
            }
        }
        let t = &self.trips;
        let p = &self.prices;
        let b = &self.baseload;
        for (name, v) in [
            ("departure std", t.departure_std_min),
            ("arrival std", t.arrival_std_min),
            ("distance sigma", t.distance_sigma),
            ("spot noise", p.noise_std),
            ("co2 noise", p.co2_noise_std),
            ("baseload noise", b.noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be a non-negative number"));
            }
        }
        if !(0.0..=1.0).contains(&t.weekend_stay_home_prob) {
            return fail("weekend stay-home probability must lie in [0, 1]".into());
        }
        if !(0.0..1.0).contains(&p.noise_correlation) {
            return fail("noise correlation must lie in [0, 1)".into());
        }
        if !(b.scale_min > 0.0 && b.scale_min <= b.scale_max) {
            return fail("baseload scale range is invalid".into());
        }
        if t.departure_earliest_min > t.departure_latest_min
            || t.departure_latest_min + t.min_trip_min > t.arrival_latest_min
            || t.arrival_latest_min > 1440
        {
            return fail("trip time bounds are inconsistent".into());
        }
        // Shortest night: latest arrival to earliest departure, minus a
        // possible spring-forward hour.
        let shortest_night = 1440 - t.arrival_latest_min + t.departure_earliest_min - 60;
        if t.max_charge_hours <= 0.0 || t.max_charge_hours * 60.0 > f64::from(shortest_night) {
            return fail(format!(
                "{} h of charging does not fit the shortest overnight window of {shortest_night} min",
                t.max_charge_hours
            ));
        }
        Ok(())
    }
}

/// Minute-level calendar facts shared by all agents.
struct Calendar {
    start: DateTime<Utc>,
    n: usize,
    minute_of_day: Vec<u16>,
    /// Summer-time offset in minutes.
    dst_shift: Vec<u16>,
    /// Local dates with their first grid index.
    days: Vec<(NaiveDate, usize)>,
}

impl Calendar {
    fn new(config: &GenConfig) -> Self {
        let tz = config.timezone;
        let start = local_midnight(config.start_date, tz);
        let end = local_midnight(config.end_date, tz);
        let n = (end - start).num_minutes() as usize;
        let mut minute_of_day = Vec::with_capacity(n);
        let mut dst_shift = Vec::with_capacity(n);
        for t in 0..n {
            let local = (start + Duration::minutes(t as i64)).with_timezone(&tz);
            minute_of_day.push((local.hour() * 60 + local.minute()) as u16);
            dst_shift.push(local.offset().dst_offset().num_minutes().max(0) as u16);
        }
        let days = config
            .start_date
            .iter_days()
            .take_while(|d| *d < config.end_date)
            .map(|d| (d, (local_midnight(d, tz) - start).num_minutes() as usize))
            .collect();
        Self { start, n, minute_of_day, dst_shift, days }
    }

    /// Grid index of local wall time `minute` on `date`, if it exists.
    fn index_at(&self, tz: Tz, date: NaiveDate, minute: u32) -> Option<usize> {
        let naive = date.and_hms_opt(minute / 60, minute % 60, 0)?;
        let t = tz.from_local_datetime(&naive).earliest()?.with_timezone(&Utc);
        let i = (t - self.start).num_minutes();
        (0..self.n as i64).contains(&i).then_some(i as usize)
    }
}

fn quantize(x: f64, scale: f64) -> i64 {
    (x * scale).round() as i64
}

/// Spot, tariff and CO₂ in 1e-4 units.
struct SystemColumns {
    spot: Vec<i64>,
    tariff: Vec<i64>,
    co2: Vec<i64>,
}

fn system_columns(config: &GenConfig, cal: &Calendar) -> SystemColumns {
    let p = &config.prices;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0);
    let hours = cal.n.div_ceil(60);
    let ar = |rng: &mut ChaCha8Rng| {
        let mut z = 0.0f64;
        let k = (1.0 - p.noise_correlation * p.noise_correlation).sqrt();
        (0..hours)
            .map(|_| {
                let e: f64 = StandardNormal.sample(rng);
                z = p.noise_correlation * z + k * e;
                z
            })
            .collect::<Vec<f64>>()
    };
    let spot_noise = ar(&mut rng);
    let co2_noise = ar(&mut rng);
    let months: Vec<u32> = {
        let mut m = vec![0u32; cal.n];
        for (i, &(date, first)) in cal.days.iter().enumerate() {
            let last = cal.days.get(i + 1).map_or(cal.n, |d| d.1);
            m[first..last].fill(date.month());
        }
        m
    };
    let mut out = SystemColumns { spot: Vec::with_capacity(cal.n), tariff: Vec::with_capacity(cal.n), co2: Vec::with_capacity(cal.n) };
    for t in 0..cal.n {
        let hour = u32::from(cal.minute_of_day[t] / 60);
        let h = f64::from(hour);
        let spot = p.spot_base - p.spot_amplitude * (2.0 * PI * (h - p.trough_hour) / 24.0).cos()
            + p.noise_std * spot_noise[t / 60];
        let tariff = if (4..=9).contains(&months[t]) { p.tariff_summer } else { p.tariff_winter }[hour as usize];
        let co2 = (p.co2_base + p.co2_amplitude * (2.0 * PI * (h - p.co2_peak_hour) / 24.0).cos()
            + p.co2_noise_std * co2_noise[t / 60])
            .max(0.01);
        out.spot.push(quantize(spot, 1e4));
        out.tariff.push(quantize(tariff, 1e4));
        out.co2.push(quantize(co2, 1e4));
    }
    out
}

/// Integer-coded output of one agent.
struct AgentTrace {
    meta: AgentMeta,
    /// milli-kW
    baseload: Vec<u32>,
    /// micro-kW
    ev: Vec<u32>,
    /// micro-percent
    soc: Vec<u32>,
    events: Vec<GenEvent>,
}

#[derive(Debug, Clone, Copy)]
struct GenEvent {
    t: usize,
    agent: usize,
    kind: EventKind,
    /// micro-percent
    soc: u32,
    /// metres
    distance: Option<u64>,
}

struct Trip {
    departure: usize,
    arrival: usize,
    distance_km: f64,
}

fn micro(x: f64) -> u32 {
    (x * 1e6).round().max(0.0) as u32
}

fn simulate_agent(config: &GenConfig, cal: &Calendar, total_price: &[f64], a: usize) -> AgentTrace {
    let tz = config.timezone;
    let trips_model = &config.trips;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(a as u64 + 1);

    let model = &config.ev_catalog[rng.random_range(0..config.ev_catalog.len())];
    let lat_micro = 55_540_000 + rng.random_range(-12_000i64..=12_000);
    let lon_micro = 9_770_000 + rng.random_range(-20_000i64..=20_000);
    let scale = rng.random_range(config.baseload.scale_min..=config.baseload.scale_max);
    let meta = AgentMeta {
        agent_id: format!("agent_{:03}", a + 1),
        latitude: lat_micro as f64 / 1e6,
        longitude: lon_micro as f64 / 1e6,
        battery_capacity_kwh: model.battery_kwh,
        charger_power_kw: model.charger_kw,
        consumption_kwh_per_km: model.consumption_kwh_per_km,
        soc_target_pct: config.soc_target_pct,
    };

    let dep_dist = Normal::new(trips_model.departure_mean_min, trips_model.departure_std_min).expect("validated std");
    let arr_dist = Normal::new(trips_model.arrival_mean_min, trips_model.arrival_std_min).expect("validated std");
    let km_dist = LogNormal::new(trips_model.distance_mu, trips_model.distance_sigma).expect("validated sigma");
    let mut trips = Vec::new();
    for &(date, _) in &cal.days {
        let stay: f64 = rng.random();
        let dep: f64 = dep_dist.sample(&mut rng);
        let arr: f64 = arr_dist.sample(&mut rng);
        let km: f64 = km_dist.sample(&mut rng);
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        if weekend && stay < trips_model.weekend_stay_home_prob {
            continue;
        }
        let dep_min = (dep.round() as i64)
            .clamp(i64::from(trips_model.departure_earliest_min), i64::from(trips_model.departure_latest_min)) as u32;
        let arr_min = (arr.round() as i64)
            .clamp(i64::from(dep_min + trips_model.min_trip_min), i64::from(trips_model.arrival_latest_min))
            as u32;
        if let (Some(departure), Some(arrival)) = (cal.index_at(tz, date, dep_min), cal.index_at(tz, date, arr_min)) {
            if departure < arrival {
                trips.push(Trip { departure, arrival, distance_km: km });
            }
        }
    }

    let noise = config.baseload.noise;
    let baseload: Vec<u32> = (0..cal.n)
        .map(|t| {
            let hour = f64::from(cal.minute_of_day[t]) / 60.0;
            let z: f64 = StandardNormal.sample(&mut rng);
            let kw = (scale * config.baseload.profile(hour) * (1.0 + noise * z)).max(0.02);
            (kw * 1e3).round() as u32
        })
        .collect();

    let battery = model.battery_kwh;
    let kw = model.charger_kw;
    let target = config.soc_target_pct;
    let mut ev = vec![0u32; cal.n];
    let mut soc = vec![0u32; cal.n];
    let mut events = Vec::with_capacity(2 * trips.len());

    // Charge over [from, until) from `soc_start`, write the SoC trace and
    // return the SoC at the end of the window.
    let home = |from: usize, until: usize, deadline: usize, soc_start: f64, ev: &mut [u32], soc: &mut [u32]| -> f64 {
        let need = ((target - soc_start) / 100.0 * battery).max(0.0);
        let mut plan = smart_charge_schedule(from..deadline.min(cal.n), need, kw, total_price);
        if deadline > until {
            plan = apply_dst_bug(&plan, until);
        }
        for (t, p) in allocate_power(&plan, need, kw) {
            ev[t] = micro(p);
        }
        let mut s = soc_start;
        for t in from..until {
            s = (s + f64::from(ev[t]) / 1e6 / 60.0 / battery * 100.0).min(100.0);
            soc[t] = micro(s);
        }
        s
    };

    let mut home_from = 0usize;
    let mut soc_start = target;
    for trip in &trips {
        let deadline = if config.inject_dst_bug {
            trip.departure + usize::from(cal.dst_shift[trip.departure])
        } else {
            trip.departure
        };
        let soc_dep = home(home_from, trip.departure, deadline, soc_start, &mut ev, &mut soc);

        let cap_kwh = (kw * trips_model.max_charge_hours)
            .min(battery * (target - 10.0) / 100.0)
            .min(battery * (soc_dep - 1.0).max(0.0) / 100.0);
        let metres = ((trip.distance_km * model.consumption_kwh_per_km).min(cap_kwh) / model.consumption_kwh_per_km
            * 1000.0)
            .floor() as u64;
        let drop = (metres as f64 / 1000.0) * model.consumption_kwh_per_km / battery * 100.0;
        let soc_arr = (soc_dep - drop).max(0.0);
        soc[trip.departure..trip.arrival].fill(micro(soc_dep));
        events.push(GenEvent { t: trip.departure, agent: a, kind: EventKind::Departure, soc: micro(soc_dep), distance: None });
        events.push(GenEvent { t: trip.arrival, agent: a, kind: EventKind::Arrival, soc: micro(soc_arr), distance: Some(metres) });
        home_from = trip.arrival;
        soc_start = soc_arr;
    }
    home(home_from, cal.n, cal.n, soc_start, &mut ev, &mut soc);

    AgentTrace { meta, baseload, ev, soc, events }
}

/// A generated scenario held in its exact integer encoding.
pub struct Simulation {
    scenario_id: String,
    timezone: Tz,
    capacity_kw: f64,
    start: DateTime<Utc>,
    n: usize,
    agents: Vec<AgentMeta>,
    system: SystemColumns,
    /// agent-major, milli-kW
    baseload: Vec<u32>,
    /// agent-major, micro-kW
    ev: Vec<u32>,
    /// agent-major, micro-percent
    soc: Vec<u32>,
    events: Vec<GenEvent>,
}

pub fn simulate(config: &GenConfig) -> Result<Simulation, GenError> {
    config.validate()?;
    let cal = Calendar::new(config);
    let system = system_columns(config, &cal);
    let total_price: Vec<f64> = system.spot.iter().zip(&system.tariff).map(|(s, t)| (s + t) as f64).collect();

    let n = cal.n;
    let mut sim = Simulation {
        scenario_id: config.scenario_id(),
        timezone: config.timezone,
        capacity_kw: config.transformer_capacity_kw,
        start: cal.start,
        n,
        agents: Vec::with_capacity(config.n_agents),
        system,
        baseload: Vec::with_capacity(n * config.n_agents),
        ev: Vec::with_capacity(n * config.n_agents),
        soc: Vec::with_capacity(n * config.n_agents),
        events: Vec::new(),
    };
    for a in 0..config.n_agents {
        let trace = simulate_agent(config, &cal, &total_price, a);
        sim.agents.push(trace.meta);
        sim.baseload.extend_from_slice(&trace.baseload);
        sim.ev.extend_from_slice(&trace.ev);
        sim.soc.extend_from_slice(&trace.soc);
        sim.events.extend(trace.events);
    }
    sim.events.sort_by_key(|e| (e.t, e.agent));
    Ok(sim)
}

impl Simulation {
    pub fn scenario_id(&self) -> &str {
        &self.scenario_id
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn agents(&self) -> &[AgentMeta] {
        &self.agents
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    /// The store ingest produces from the written files, built directly.
    pub fn to_store(&self, root: &Path) -> ScenarioStore {
        let scaled = |v: &[u32], s: f64| v.iter().map(|&x| f64::from(x) / s).collect::<Vec<f64>>();
        let signed = |v: &[i64]| v.iter().map(|&x| x as f64 / 1e4).collect::<Vec<f64>>();
        let events = self
            .events
            .iter()
            .map(|e| EventRecord {
                agent_id: self.agents[e.agent].agent_id.clone(),
                timestamp: self.start + Duration::minutes(e.t as i64),
                kind: e.kind,
                soc_pct: f64::from(e.soc) / 1e6,
                trip_distance_km: e.distance.map(|m| m as f64 / 1000.0),
            })
            .collect();
        ScenarioStore::from_parts(StoreParts {
            manifest: ScenarioManifest::in_dir(self.scenario_id.clone(), root, self.timezone),
            time_index: TimeIndex::new(self.start, self.n).expect("non-empty grid"),
            agents: self.agents.clone(),
            baseload: AgentMatrix::new(self.n, scaled(&self.baseload, 1e3)),
            ev_load: AgentMatrix::new(self.n, scaled(&self.ev, 1e6)),
            soc: AgentMatrix::new(self.n, scaled(&self.soc, 1e6)),
            system: SystemSeries {
                spot_price: signed(&self.system.spot),
                dso_tariff: signed(&self.system.tariff),
                co2_intensity: signed(&self.system.co2),
                transformer_capacity: vec![self.capacity_kw; self.n],
            },
            events,
        })
        .expect("generated data is valid")
    }

    /// Write the CSV file set and `scenario.toml` into `dir`; returns the
    /// manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, GenError> {
        write::write_all(self, dir)
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedScenario {
    pub manifest_path: PathBuf,
    pub scenario_id: String,
    pub agents: usize,
    pub steps: usize,
    pub events: usize,
}

pub fn generate(config: &GenConfig, out_dir: &Path) -> Result<GeneratedScenario, GenError> {
    let sim = simulate(config)?;
    let manifest_path = sim.write(out_dir)?;
    Ok(GeneratedScenario {
        manifest_path,
        scenario_id: sim.scenario_id.clone(),
        agents: sim.agents.len(),
        steps: sim.n,
        events: sim.events.len(),
    })
}

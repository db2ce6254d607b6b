//! Uniform minute grid and timezone helpers.
//!
//! Instants are held in UTC. Anything that is "per day" (heatmaps, daily
//! driving distance, dissatisfaction days) is evaluated against the
//! scenario's IANA zone, so daylight-saving days have 1380 or 1500 minutes.

use chrono::{DateTime, Duration, FixedOffset, LocalResult, NaiveDate, SecondsFormat, TimeZone, Timelike, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

/// Grid step in seconds.
pub const STEP_SECONDS: i64 = 60;

/// Hours per grid step.
pub const STEP_HOURS: f64 = 1.0 / 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeIndex {
    start: DateTime<Utc>,
    count: usize,
}

impl TimeIndex {
    /// `start` must sit on a whole minute and `count` must be at least one.
    pub fn new(start: DateTime<Utc>, count: usize) -> Option<Self> {
        if count == 0 || !is_whole_minute(start) {
            return None;
        }
        Some(Self { start, count })
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    /// Exclusive end of the covered range.
    pub fn end(&self) -> DateTime<Utc> {
        self.start + Duration::seconds(STEP_SECONDS * self.count as i64)
    }

    pub fn step(&self) -> Duration {
        Duration::seconds(STEP_SECONDS)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn at(&self, i: usize) -> DateTime<Utc> {
        self.start + Duration::seconds(STEP_SECONDS * i as i64)
    }

    /// Position of `t` on the grid, or `None` if it is off-grid or outside
    /// the covered range.
    pub fn index_of(&self, t: DateTime<Utc>) -> Option<usize> {
        let secs = (t - self.start).num_seconds();
        if secs < 0 || secs % STEP_SECONDS != 0 || t.timestamp_subsec_nanos() != 0 {
            return None;
        }
        let i = (secs / STEP_SECONDS) as usize;
        (i < self.count).then_some(i)
    }

    /// Like [`index_of`](Self::index_of) but also accepts the exclusive end.
    pub fn boundary_of(&self, t: DateTime<Utc>) -> Option<usize> {
        if t == self.end() {
            return Some(self.count);
        }
        self.index_of(t)
    }

    /// Clamp `[from, to)` to the grid and return the covered index range.
    pub fn clamp_range(&self, from: DateTime<Utc>, to: DateTime<Utc>) -> std::ops::Range<usize> {
        let lo = self.minutes_from_start_ceil(from).clamp(0, self.count as i64) as usize;
        let hi = self.minutes_from_start_ceil(to).clamp(0, self.count as i64) as usize;
        lo..hi.max(lo)
    }

    fn minutes_from_start_ceil(&self, t: DateTime<Utc>) -> i64 {
        let secs = (t - self.start).num_seconds();
        secs.div_euclid(STEP_SECONDS) + i64::from(secs.rem_euclid(STEP_SECONDS) != 0)
    }
}

pub fn is_whole_minute(t: DateTime<Utc>) -> bool {
    t.second() == 0 && t.timestamp_subsec_nanos() == 0
}

/// Parse an ISO-8601 timestamp that carries an explicit UTC offset.
pub fn parse_timestamp(text: &str) -> Option<DateTime<Utc>> {
    DateTime::<FixedOffset>::parse_from_rfc3339(text.trim())
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

/// Render `t` in `tz` as `YYYY-MM-DDTHH:MM:SS+HH:MM`, the form used in every
/// file and on the wire.
pub fn format_timestamp(t: DateTime<Utc>, tz: Tz) -> String {
    t.with_timezone(&tz).to_rfc3339_opts(SecondsFormat::Secs, false)
}

pub fn parse_timezone(name: &str) -> Option<Tz> {
    name.parse::<Tz>().ok()
}

pub fn local_date(t: DateTime<Utc>, tz: Tz) -> NaiveDate {
    t.with_timezone(&tz).date_naive()
}

/// First instant of local `date` in `tz`.
pub fn local_midnight(date: NaiveDate, tz: Tz) -> DateTime<Utc> {
    let naive = date.and_hms_opt(0, 0, 0).expect("midnight is valid");
    match tz.from_local_datetime(&naive) {
        LocalResult::Single(t) => t.with_timezone(&Utc),
        LocalResult::Ambiguous(earliest, _) => earliest.with_timezone(&Utc),
        // Zones that skip midnight start the day at the first valid minute.
        LocalResult::None => {
            let mut probe = naive;
            loop {
                probe += Duration::minutes(1);
                if let LocalResult::Single(t) | LocalResult::Ambiguous(t, _) = tz.from_local_datetime(&probe) {
                    break t.with_timezone(&Utc);
                }
            }
        }
    }
}

/// `[start, end)` of local `date` in UTC.
pub fn local_day_bounds(date: NaiveDate, tz: Tz) -> (DateTime<Utc>, DateTime<Utc>) {
    let next = date.succ_opt().expect("date in range");
    (local_midnight(date, tz), local_midnight(next, tz))
}

/// Minutes in local `date`.
pub fn local_day_minutes(date: NaiveDate, tz: Tz) -> i64 {
    let (a, b) = local_day_bounds(date, tz);
    (b - a).num_minutes()
}

/// UTC offset of `t` in `tz`, in seconds.
pub fn utc_offset_seconds(t: DateTime<Utc>, tz: Tz) -> i32 {
    use chrono::Offset;
    t.with_timezone(&tz).offset().fix().local_minus_utc()
}

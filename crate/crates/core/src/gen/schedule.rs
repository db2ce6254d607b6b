//! Cheapest-minute charging and the daylight-saving scheduling fault.

use std::ops::Range;

/// Slack for floating-point noise when converting energy to minutes.
const MINUTE_EPSILON: f64 = 1e-9;

/// Whole minutes at `charger_kw` needed to deliver `need_kwh`.
pub fn minutes_needed(need_kwh: f64, charger_kw: f64) -> usize {
    if need_kwh <= 0.0 {
        return 0;
    }
    (need_kwh / (charger_kw / 60.0) - MINUTE_EPSILON).ceil().max(0.0) as usize
}

/// The cheapest minutes of `window` able to deliver `need_kwh`, ascending.
/// Equal prices go to the earlier minute. A window that is too short is used
/// in full.
pub fn smart_charge_schedule(window: Range<usize>, need_kwh: f64, charger_kw: f64, prices: &[f64]) -> Vec<usize> {
    let k = minutes_needed(need_kwh, charger_kw);
    if k == 0 || window.is_empty() {
        return Vec::new();
    }
    let mut minutes: Vec<usize> = window.collect();
    if k < minutes.len() {
        minutes.sort_by(|&a, &b| prices[a].total_cmp(&prices[b]).then(a.cmp(&b)));
        minutes.truncate(k);
        minutes.sort_unstable();
    }
    minutes
}

/// A scheduler that keeps its clock on standard time believes the car
/// leaves `dst_shift` minutes later than it does during summer time. Minutes
/// it planned at or after the real departure never happen.
pub fn apply_dst_bug(schedule: &[usize], actual_departure: usize) -> Vec<usize> {
    schedule.iter().copied().filter(|&t| t < actual_departure).collect()
}

/// Charging power per scheduled minute: full power everywhere except the
/// chronologically last minute, which delivers the remainder.
pub fn allocate_power(schedule: &[usize], need_kwh: f64, charger_kw: f64) -> Vec<(usize, f64)> {
    let per_minute = charger_kw / 60.0;
    let mut remaining = need_kwh;
    let mut out = Vec::with_capacity(schedule.len());
    for &t in schedule {
        if remaining <= MINUTE_EPSILON * per_minute {
            break;
        }
        let kw = if remaining >= per_minute { charger_kw } else { remaining * 60.0 };
        out.push((t, kw));
        remaining -= kw / 60.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_cheapest_minutes_earliest_first() {
        // [5, 1, 1, 5, 1, 1, ...] over 20 minutes
        let prices: Vec<f64> = (0..20).map(|i| if i % 3 == 0 { 5.0 } else { 1.0 }).collect();
        let got = smart_charge_schedule(0..20, 1.0, 6.0, &prices);
        assert_eq!(got, vec![1, 2, 4, 5, 7, 8, 10, 11, 13, 14]);
        assert!(got.iter().all(|&t| prices[t] == 1.0));
    }

    #[test]
    fn zero_need_is_empty() {
        assert!(smart_charge_schedule(0..20, 0.0, 6.0, &[1.0; 20]).is_empty());
    }

    #[test]
    fn short_window_is_used_in_full() {
        let got = smart_charge_schedule(3..8, 10.0, 6.0, &[1.0; 20]);
        assert_eq!(got, vec![3, 4, 5, 6, 7]);
        let kw: f64 = allocate_power(&got, 10.0, 6.0).iter().map(|(_, kw)| kw / 60.0).sum();
        assert!(kw < 10.0);
    }

    #[test]
    fn exact_multiple_does_not_round_up() {
        assert_eq!(minutes_needed(1.0, 6.0), 10);
        assert_eq!(minutes_needed(0.1 * 3.0, 6.0), 3);
        assert_eq!(minutes_needed(1.05, 6.0), 11);
    }

    #[test]
    fn last_minute_is_partial() {
        let plan = allocate_power(&[2, 5, 9], 0.25, 6.0);
        assert_eq!(plan.len(), 3);
        assert_eq!(plan[0], (2, 6.0));
        assert_eq!(plan[1], (5, 6.0));
        assert!((plan[2].1 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bug_drops_minutes_past_departure() {
        assert_eq!(apply_dst_bug(&[1, 5, 9, 10, 12], 10), vec![1, 5, 9]);
        assert_eq!(apply_dst_bug(&[1, 5], 10), vec![1, 5]);
    }
}

//! C ABI over the gridlens engine.
//!
//! Stores are opaque handles created by [`gridlens_store_load`] and released
//! with [`gridlens_store_free`]. Every fallible function returns a
//! [`GridlensStatus`]; on failure [`gridlens_last_error`] describes the
//! problem for the calling thread. Strings returned through out-parameters
//! are owned by the caller and released with [`gridlens_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use chrono::NaiveDate;
use gridlens::compare::diff_kpis;
use gridlens::gen::{generate, GenConfig, GenError};
use gridlens::metrics::{classify_ratio, coincidence_factor, load_factor, OverloadCategory};
use gridlens::query::{series_window, Scope, SeriesVariable};
use gridlens::report::kpi_json_text;
use gridlens::time::parse_timestamp;
use gridlens::{kpi_report, load_any, write_cache, IngestError, ScenarioStore};

/// Opaque scenario handle.
pub struct GridlensStore(ScenarioStore);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridlensStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Input data failed validation.
    Validation = 3,
    Io = 4,
    /// Bad query parameters or an undefined result.
    Query = 5,
    /// Output buffer too small; the required length was written.
    BufferTooSmall = 6,
    InvalidConfig = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridlensOverloadCategory {
    None = 0,
    NormalCyclic = 1,
    LongTimeEmergency = 2,
    ShortTimeEmergency = 3,
    Critical = 4,
}

impl From<OverloadCategory> for GridlensOverloadCategory {
    fn from(c: OverloadCategory) -> Self {
        match c {
            OverloadCategory::None => Self::None,
            OverloadCategory::NormalCyclic => Self::NormalCyclic,
            OverloadCategory::LongTimeEmergency => Self::LongTimeEmergency,
            OverloadCategory::ShortTimeEmergency => Self::ShortTimeEmergency,
            OverloadCategory::Critical => Self::Critical,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(text).expect("no interior nul")));
}

struct Failure(GridlensStatus, String);

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let status = if e.is_validation() { GridlensStatus::Validation } else { GridlensStatus::Io };
        Failure(status, e.to_string())
    }
}

fn query_failure(e: impl std::fmt::Display) -> Failure {
    Failure(GridlensStatus::Query, e.to_string())
}

/// Run `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GridlensStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GridlensStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GridlensStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(GridlensStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(GridlensStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn optional_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn store<'a>(p: *const GridlensStore) -> Result<&'a ScenarioStore, Failure> {
    p.as_ref().map(|s| &s.0).ok_or_else(|| Failure(GridlensStatus::NullArgument, "store is null".into()))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(GridlensStatus::NullArgument, "output pointer is null".into()))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul").into_raw()
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn gridlens_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn gridlens_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Load a scenario from a manifest or cache file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out_store` writable.
#[no_mangle]
pub unsafe extern "C" fn gridlens_store_load(path: *const c_char, out_store: *mut *mut GridlensStore) -> GridlensStatus {
    guard(|| {
        let slot = out(out_store)?;
        *slot = std::ptr::null_mut();
        let s = load_any(Path::new(text(path, "path")?))?;
        *slot = Box::into_raw(Box::new(GridlensStore(s)));
        Ok(())
    })
}

/// Release a store. Null is ignored.
///
/// # Safety
/// `store` must come from [`gridlens_store_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gridlens_store_free(store: *mut GridlensStore) {
    if !store.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(store))));
    }
}

/// Write the binary cache of a store.
///
/// # Safety
/// `store` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gridlens_store_write_cache(store: *const GridlensStore, path: *const c_char) -> GridlensStatus {
    guard(|| Ok(write_cache(self::store(store)?, Path::new(text(path, "path")?))?))
}

/// # Safety
/// `store` must be a live handle and `out_count` writable.
#[no_mangle]
pub unsafe extern "C" fn gridlens_store_agent_count(store: *const GridlensStore, out_count: *mut usize) -> GridlensStatus {
    guard(|| {
        *out(out_count)? = self::store(store)?.agents().len();
        Ok(())
    })
}

/// # Safety
/// `store` must be a live handle and `out_count` writable.
#[no_mangle]
pub unsafe extern "C" fn gridlens_store_step_count(store: *const GridlensStore, out_count: *mut usize) -> GridlensStatus {
    guard(|| {
        *out(out_count)? = self::store(store)?.time_index().count();
        Ok(())
    })
}

/// Copy the per-minute total load (kW) into `buffer`. With a null buffer or
/// one shorter than the step count, only `out_len` is set.
///
/// # Safety
/// `buffer` must hold `capacity` doubles when non-null; `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn gridlens_store_total_load(
    store: *const GridlensStore,
    buffer: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> GridlensStatus {
    guard(|| {
        let series = self::store(store)?.total_load();
        *out(out_len)? = series.len();
        if buffer.is_null() || capacity < series.len() {
            return Err(Failure(GridlensStatus::BufferTooSmall, format!("{} values needed", series.len())));
        }
        std::slice::from_raw_parts_mut(buffer, series.len()).copy_from_slice(series);
        Ok(())
    })
}

/// KPI report as JSON; with a non-null `reference`, includes the comparison.
///
/// # Safety
/// Handles must be live (or `reference` null) and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn gridlens_kpi_json(
    store: *const GridlensStore,
    reference: *const GridlensStore,
    out_json: *mut *mut c_char,
) -> GridlensStatus {
    guard(|| {
        let slot = out(out_json)?;
        *slot = std::ptr::null_mut();
        let test = self::store(store)?;
        let report = kpi_report(test);
        let json = match reference.as_ref() {
            Some(r) => {
                let diffs = diff_kpis(&report, &kpi_report(&r.0)).map_err(query_failure)?;
                kpi_json_text(&report, Some((r.0.scenario_id(), &diffs)))
            }
            None => kpi_json_text(&report, None),
        };
        *slot = owned_string(json);
        Ok(())
    })
}

/// Downsampled series as JSON. `scope` is `"aggregate"`, an agent id or
/// null; null bounds mean the scenario start or end.
///
/// # Safety
/// Strings must be nul-terminated or null where allowed; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn gridlens_series_json(
    store: *const GridlensStore,
    variable: *const c_char,
    scope: *const c_char,
    from: *const c_char,
    to: *const c_char,
    buckets: usize,
    out_json: *mut *mut c_char,
) -> GridlensStatus {
    guard(|| {
        let slot = out(out_json)?;
        *slot = std::ptr::null_mut();
        let s = self::store(store)?;
        let (variable, agent) = SeriesVariable::parse_scoped(text(variable, "variable")?).map_err(query_failure)?;
        let scope = match agent {
            Some(a) => Scope::Agent(a),
            None => Scope::parse(optional_text(scope, "scope")?),
        };
        let instant = |p, what| -> Result<_, Failure> {
            optional_text(p, what)?
                .map(|t| parse_timestamp(t).ok_or_else(|| query_failure(format!("{what}: bad timestamp {t:?}"))))
                .transpose()
        };
        let from = instant(from, "from")?.unwrap_or_else(|| s.time_index().start());
        let to = instant(to, "to")?.unwrap_or_else(|| s.time_index().end());
        let series = series_window(s, variable, &scope, from, to, buckets).map_err(query_failure)?;
        *slot = owned_string(serde_json::to_string(&series).expect("series serializes"));
        Ok(())
    })
}

/// Load factor of the store's total load.
///
/// # Safety
/// `store` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn gridlens_store_load_factor(store: *const GridlensStore, out_value: *mut f64) -> GridlensStatus {
    guard(|| {
        *out(out_value)? = load_factor(self::store(store)?.total_load()).map_err(query_failure)?;
        Ok(())
    })
}

/// Coincidence factor of the store.
///
/// # Safety
/// `store` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn gridlens_store_coincidence_factor(store: *const GridlensStore, out_value: *mut f64) -> GridlensStatus {
    guard(|| {
        *out(out_value)? = coincidence_factor(self::store(store)?).map_err(query_failure)?;
        Ok(())
    })
}

/// Load factor of an arbitrary series.
///
/// # Safety
/// `values` must hold `len` doubles; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn gridlens_load_factor(values: *const f64, len: usize, out_value: *mut f64) -> GridlensStatus {
    guard(|| {
        if values.is_null() {
            return Err(Failure(GridlensStatus::NullArgument, "values is null".into()));
        }
        *out(out_value)? = load_factor(std::slice::from_raw_parts(values, len)).map_err(query_failure)?;
        Ok(())
    })
}

/// Overload band of a load-to-capacity ratio.
///
/// # Safety
/// `out_category` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gridlens_classify_ratio(ratio: f64, out_category: *mut GridlensOverloadCategory) -> GridlensStatus {
    guard(|| {
        *out(out_category)? = classify_ratio(ratio).map_err(query_failure)?.into();
        Ok(())
    })
}

/// Generate a synthetic scenario into `out_dir` and return its manifest path.
/// Dates are `YYYY-MM-DD`; `end_date` is exclusive.
///
/// # Safety
/// Strings must be nul-terminated and `out_manifest` writable.
#[no_mangle]
pub unsafe extern "C" fn gridlens_generate(
    seed: u64,
    n_agents: usize,
    start_date: *const c_char,
    end_date: *const c_char,
    capacity_kw: f64,
    inject_dst_bug: bool,
    out_dir: *const c_char,
    out_manifest: *mut *mut c_char,
) -> GridlensStatus {
    guard(|| {
        let slot = out(out_manifest)?;
        *slot = std::ptr::null_mut();
        let date = |p, what| -> Result<NaiveDate, Failure> {
            let t = text(p, what)?;
            NaiveDate::parse_from_str(t, "%Y-%m-%d")
                .map_err(|_| Failure(GridlensStatus::InvalidConfig, format!("{what}: expected YYYY-MM-DD, got {t:?}")))
        };
        let config = GenConfig {
            seed,
            n_agents,
            start_date: date(start_date, "start_date")?,
            end_date: date(end_date, "end_date")?,
            transformer_capacity_kw: capacity_kw,
            inject_dst_bug,
            ..GenConfig::default()
        };
        let g = generate(&config, Path::new(text(out_dir, "out_dir")?)).map_err(|e| match e {
            GenError::InfeasibleConfig(_) => Failure(GridlensStatus::InvalidConfig, e.to_string()),
            GenError::Io { .. } => Failure(GridlensStatus::Io, e.to_string()),
        })?;
        *slot = owned_string(g.manifest_path.display().to_string());
        Ok(())
    })
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gridlens_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

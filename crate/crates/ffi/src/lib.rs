//! C ABI over the keyrace sampler.
//!
//! Every function returns a [`KrStatus`]; results come back through out
//! pointers. Handles are opaque and owned by the caller until passed to the
//! matching `_free`. On failure the thread's last error message is set and can
//! be read with [`kr_last_error_message`].
//!
//! Strings are NUL-terminated UTF-8. Functions that return a string take a
//! buffer and its capacity; `needed` always receives the length including the
//! terminator, so a call with a null buffer and capacity 0 queries the size.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use keyrace::baselines::{SearchStrategy, WeightTable};
use keyrace::dynamic::{DynamicTable, UpdateCase};
use keyrace::sampler::{check_unique, derive_uniform, sample, GroupWinner};
use keyrace::stats::chi_square_sf;
use keyrace::{Error, Family, ModelSpec, Row, SeedContext, WinnerMap};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    DegenerateWeight = 3,
    NotFound = 4,
    DuplicateRow = 5,
    InvalidUtf8 = 6,
    BufferTooSmall = 7,
    InvalidArgument = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrFamily {
    Canonical = 0,
    Gumbel1 = 1,
    Frechet2 = 2,
    NegExp = 3,
    ExpMin = 4,
}

impl From<KrFamily> for Family {
    fn from(f: KrFamily) -> Self {
        match f {
            KrFamily::Canonical => Family::Canonical,
            KrFamily::Gumbel1 => Family::Gumbel1,
            KrFamily::Frechet2 => Family::Frechet2,
            KrFamily::NegExp => Family::NegExp,
            KrFamily::ExpMin => Family::ExpMin,
        }
    }
}

/// Which maintenance path an update took.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrUpdateCase {
    NewWinner = 0,
    Unchanged = 1,
    WinnerRefreshed = 2,
    WinnerRescanned = 3,
    DeletedNonWinner = 4,
    DeletedWinner = 5,
    GroupRemoved = 6,
}

impl From<UpdateCase> for KrUpdateCase {
    fn from(c: UpdateCase) -> Self {
        match c {
            UpdateCase::NewWinner => KrUpdateCase::NewWinner,
            UpdateCase::Unchanged => KrUpdateCase::Unchanged,
            UpdateCase::WinnerRefreshed => KrUpdateCase::WinnerRefreshed,
            UpdateCase::WinnerRescanned => KrUpdateCase::WinnerRescanned,
            UpdateCase::DeletedNonWinner => KrUpdateCase::DeletedNonWinner,
            UpdateCase::DeletedWinner => KrUpdateCase::DeletedWinner,
            UpdateCase::GroupRemoved => KrUpdateCase::GroupRemoved,
        }
    }
}

/// Batch sampler: collect rows, then draw one winner per group.
pub struct KrSampler {
    spec: ModelSpec,
    rows: Vec<Row>,
    winners: WinnerMap,
}

/// Winners maintained under upserts and deletes.
pub struct KrDynamic {
    table: DynamicTable,
}

/// Alias and cumulative tables over a fixed weight vector.
pub struct KrWeightTable {
    table: WeightTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> KrStatus {
    match err {
        Error::Domain { .. } => KrStatus::Domain,
        Error::DegenerateWeight { .. } => KrStatus::DegenerateWeight,
        Error::Row { source, .. } => status_of(source),
        Error::NotFound { .. } => KrStatus::NotFound,
        Error::DuplicateRow { .. } => KrStatus::DuplicateRow,
        _ => KrStatus::InvalidArgument,
    }
}

fn fail(status: KrStatus, message: impl Into<String>) -> KrStatus {
    set_last_error(message.into());
    status
}

fn from_error(err: Error) -> KrStatus {
    fail(status_of(&err), err.to_string())
}

/// Runs `body`, turning panics into [`KrStatus::Panic`].
fn guard(body: impl FnOnce() -> Result<(), KrStatus>) -> KrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => KrStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(KrStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, KrStatus> {
    if p.is_null() {
        return Err(fail(KrStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(KrStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, KrStatus> {
    p.as_mut().ok_or_else(|| fail(KrStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, KrStatus> {
    p.as_ref().ok_or_else(|| fail(KrStatus::NullPointer, "handle is null"))
}

unsafe fn handle_mut<'a, T>(p: *mut T) -> Result<&'a mut T, KrStatus> {
    p.as_mut().ok_or_else(|| fail(KrStatus::NullPointer, "handle is null"))
}

fn model(family: KrFamily, scale_c: f64, offset_d: f64) -> Result<ModelSpec, KrStatus> {
    ModelSpec::new(family.into(), scale_c, offset_d).map_err(from_error)
}

/// Copies `s` plus a terminator into `buf` if it fits.
unsafe fn write_str(s: &str, buf: *mut c_char, capacity: usize, needed: *mut usize) -> Result<(), KrStatus> {
    let len = s.len() + 1;
    if !needed.is_null() {
        *needed = len;
    }
    if buf.is_null() || capacity < len {
        return Err(fail(
            KrStatus::BufferTooSmall,
            format!("buffer holds {capacity} bytes, need {len}"),
        ));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

unsafe fn write_winner(
    w: &GroupWinner,
    label: *mut c_char,
    capacity: usize,
    needed: *mut usize,
    key: *mut f64,
) -> Result<(), KrStatus> {
    if !key.is_null() {
        *key = w.key.value();
    }
    write_str(&w.label, label, capacity, needed)
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Key for `strength` and uniform `u` under the given family parameters.
///
/// # Safety
/// `out` must be null or point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn kr_key(
    family: KrFamily,
    scale_c: f64,
    offset_d: f64,
    strength: f64,
    u: f64,
    out: *mut f64,
) -> KrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let spec = model(family, scale_c, offset_d)?;
        *out = spec.key(strength, u).map_err(from_error)?.value();
        Ok(())
    })
}

/// The uniform assigned to row `(group_id, label)` under `(seed, replicate)`.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn kr_derive_uniform(
    seed: u64,
    replicate: u64,
    group_id: *const c_char,
    label: *const c_char,
    out: *mut f64,
) -> KrStatus {
    guard(|| {
        let g = str_arg(group_id, "group_id")?;
        let l = str_arg(label, "label")?;
        *out_arg(out, "out")? = derive_uniform(SeedContext::new(seed, replicate), g, l);
        Ok(())
    })
}

/// Upper-tail chi-square probability of `statistic` with `df` degrees of freedom.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn kr_chi_square_p_value(statistic: f64, df: u32, out: *mut f64) -> KrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if df == 0 || !(statistic >= 0.0) {
            return Err(fail(
                KrStatus::InvalidArgument,
                format!("need df > 0 and statistic >= 0, got df={df} statistic={statistic}"),
            ));
        }
        *out = chi_square_sf(statistic, u64::from(df));
        Ok(())
    })
}

/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn kr_sampler_new(
    family: KrFamily,
    scale_c: f64,
    offset_d: f64,
    out: *mut *mut KrSampler,
) -> KrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let sampler = KrSampler {
            spec: model(family, scale_c, offset_d)?,
            rows: Vec::new(),
            winners: WinnerMap::new(),
        };
        *out = Box::into_raw(Box::new(sampler));
        Ok(())
    })
}

/// # Safety
/// `sampler` must be null or a handle from [`kr_sampler_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kr_sampler_free(sampler: *mut KrSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

/// Adds a row. The strength is checked against the family immediately.
///
/// # Safety
/// `sampler` must be a live handle; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn kr_sampler_add_row(
    sampler: *mut KrSampler,
    group_id: *const c_char,
    label: *const c_char,
    strength: f64,
) -> KrStatus {
    guard(|| {
        let s = handle_mut(sampler)?;
        let g = str_arg(group_id, "group_id")?;
        let l = str_arg(label, "label")?;
        s.spec.check_strength(strength).map_err(from_error)?;
        s.rows.push(Row::new(g, l, strength));
        Ok(())
    })
}

/// Draws one winner per group for `(seed, replicate)`, replacing the previous
/// draw. `groups` receives the number of groups. Fails on duplicate rows.
///
/// # Safety
/// `sampler` must be a live handle; `groups` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kr_sampler_run(
    sampler: *mut KrSampler,
    seed: u64,
    replicate: u64,
    groups: *mut usize,
) -> KrStatus {
    guard(|| {
        let s = handle_mut(sampler)?;
        check_unique(&s.rows).map_err(from_error)?;
        s.winners = sample(&s.rows, &s.spec, SeedContext::new(seed, replicate)).map_err(from_error)?;
        if !groups.is_null() {
            *groups = s.winners.len();
        }
        Ok(())
    })
}

/// Winning label and key of `group_id` from the last run.
///
/// # Safety
/// `sampler` must be a live handle; `label` must hold `capacity` bytes;
/// `needed` and `key` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kr_sampler_winner(
    sampler: *const KrSampler,
    group_id: *const c_char,
    label: *mut c_char,
    capacity: usize,
    needed: *mut usize,
    key: *mut f64,
) -> KrStatus {
    guard(|| {
        let s = handle(sampler)?;
        let g = str_arg(group_id, "group_id")?;
        let w = s
            .winners
            .get(g)
            .ok_or_else(|| fail(KrStatus::NotFound, format!("no winner for group {g}")))?;
        write_winner(w, label, capacity, needed, key)
    })
}

/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn kr_dynamic_new(
    family: KrFamily,
    scale_c: f64,
    offset_d: f64,
    seed: u64,
    out: *mut *mut KrDynamic,
) -> KrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let table = DynamicTable::new(model(family, scale_c, offset_d)?, SeedContext::new(seed, 0));
        *out = Box::into_raw(Box::new(KrDynamic { table }));
        Ok(())
    })
}

/// # Safety
/// `table` must be null or a handle from [`kr_dynamic_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kr_dynamic_free(table: *mut KrDynamic) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Inserts or rewrites a row. On error the table is unchanged.
///
/// # Safety
/// `table` must be a live handle; strings NUL-terminated; `case_out` null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn kr_dynamic_upsert(
    table: *mut KrDynamic,
    group_id: *const c_char,
    label: *const c_char,
    strength: f64,
    case_out: *mut KrUpdateCase,
) -> KrStatus {
    guard(|| {
        let t = handle_mut(table)?;
        let g = str_arg(group_id, "group_id")?;
        let l = str_arg(label, "label")?;
        let report = t.table.upsert(g, l, strength).map_err(from_error)?;
        if !case_out.is_null() {
            *case_out = report.case.into();
        }
        Ok(())
    })
}

/// # Safety
/// As for [`kr_dynamic_upsert`].
#[no_mangle]
pub unsafe extern "C" fn kr_dynamic_delete(
    table: *mut KrDynamic,
    group_id: *const c_char,
    label: *const c_char,
    case_out: *mut KrUpdateCase,
) -> KrStatus {
    guard(|| {
        let t = handle_mut(table)?;
        let g = str_arg(group_id, "group_id")?;
        let l = str_arg(label, "label")?;
        let report = t.table.delete(g, l).map_err(from_error)?;
        if !case_out.is_null() {
            *case_out = report.case.into();
        }
        Ok(())
    })
}

/// Current winner of `group_id`.
///
/// # Safety
/// As for [`kr_sampler_winner`].
#[no_mangle]
pub unsafe extern "C" fn kr_dynamic_winner(
    table: *const KrDynamic,
    group_id: *const c_char,
    label: *mut c_char,
    capacity: usize,
    needed: *mut usize,
    key: *mut f64,
) -> KrStatus {
    guard(|| {
        let t = handle(table)?;
        let g = str_arg(group_id, "group_id")?;
        let w = t
            .table
            .winner(g)
            .ok_or_else(|| fail(KrStatus::NotFound, format!("group {g} is empty")))?;
        write_winner(w, label, capacity, needed, key)
    })
}

/// # Safety
/// `table` must be a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kr_dynamic_group_count(table: *const KrDynamic, out: *mut usize) -> KrStatus {
    guard(|| {
        let t = handle(table)?;
        *out_arg(out, "out")? = t.table.group_count();
        Ok(())
    })
}

/// Builds alias and cumulative tables over `n` labelled positive weights.
///
/// # Safety
/// `labels` must point to `n` NUL-terminated strings and `weights` to `n`
/// doubles; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kr_weight_table_new(
    labels: *const *const c_char,
    weights: *const f64,
    n: usize,
    out: *mut *mut KrWeightTable,
) -> KrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if labels.is_null() || weights.is_null() {
            return Err(fail(KrStatus::NullPointer, "labels or weights is null"));
        }
        let names = std::slice::from_raw_parts(labels, n)
            .iter()
            .map(|&p| str_arg(p, "label"))
            .collect::<Result<Vec<&str>, _>>()?;
        let w = std::slice::from_raw_parts(weights, n);
        let table = WeightTable::build(&names, w).map_err(from_error)?;
        *out = Box::into_raw(Box::new(KrWeightTable { table }));
        Ok(())
    })
}

/// # Safety
/// `table` must be null or a handle from [`kr_weight_table_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kr_weight_table_free(table: *mut KrWeightTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

fn check_unit(u: f64) -> Result<(), KrStatus> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(fail(KrStatus::Domain, format!("uniform {u} is outside (0, 1)")))
    }
}

/// Alias-method draw from two uniforms; `index` receives the label position.
///
/// # Safety
/// `table` must be a live handle; `index` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kr_weight_table_alias(
    table: *const KrWeightTable,
    u1: f64,
    u2: f64,
    index: *mut usize,
) -> KrStatus {
    guard(|| {
        let t = handle(table)?;
        let index = out_arg(index, "index")?;
        check_unit(u1)?;
        check_unit(u2)?;
        *index = t.table.alias_index_of(u1, u2);
        Ok(())
    })
}

/// Inverse-CDF draw; `bisection` selects binary rather than linear search.
///
/// # Safety
/// `table` must be a live handle; `index` null or writable.
#[no_mangle]
pub unsafe extern "C" fn kr_weight_table_inverse(
    table: *const KrWeightTable,
    u: f64,
    bisection: bool,
    index: *mut usize,
) -> KrStatus {
    guard(|| {
        let t = handle(table)?;
        let index = out_arg(index, "index")?;
        check_unit(u)?;
        let strategy = if bisection { SearchStrategy::Bisection } else { SearchStrategy::Linear };
        *index = t.table.inverse_index_of(u, strategy);
        Ok(())
    })
}

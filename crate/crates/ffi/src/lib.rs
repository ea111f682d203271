//! C interface to `mcfill`. Models and families are opaque handles created
//! from JSON and released with their `_free` functions. Every call returns a
//! [`McfStatus`]; on failure `mcf_last_error` describes the problem.
//! Strings handed out by the library are freed with `mcf_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mcfill::family::Family;
use mcfill::io::{FamilySpec, ModelSpec};
use mcfill::mcfilling::{check_mc_filling, check_mc_filling_covers, McOptions};
use mcfill::measure::GroundModel;
use mcfill::{Error, Rational};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidInput = 4,
    Precondition = 5,
    ResourceLimit = 6,
    Invariant = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

impl From<&Error> for McfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) | Error::Json(_) => McfStatus::Parse,
            Error::Precondition(_) => McfStatus::Precondition,
            Error::ResourceLimit { .. } => McfStatus::ResourceLimit,
            Error::Invariant(_) => McfStatus::Invariant,
            _ => McfStatus::InvalidInput,
        }
    }
}

/// A block model.
pub struct McfModel(GroundModel);

/// A hereditary family, either on its own ground set or on a model's points.
pub struct McfFamily(Family);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(McfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(McfStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> McfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => McfStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            McfStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(McfStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(McfStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(McfStatus::NullPointer, format!("{what} is null")))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn mcf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn mcf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a model file such as `{"blocks":[{"measure":"1/2","points":["a"]}]}`.
///
/// # Safety
/// `json` must be a nul-terminated string and `model` writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_model_from_json(json: *const c_char, model: *mut *mut McfModel) -> McfStatus {
    guard(|| {
        let slot = out(model, "model")?;
        let spec: ModelSpec = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        *slot = Box::into_raw(Box::new(McfModel(spec.build()?)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `mcf_model_from_json`, or be null.
#[no_mangle]
pub unsafe extern "C" fn mcf_model_free(model: *mut McfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_model_point_count(model: *const McfModel, count: *mut usize) -> McfStatus {
    guard(|| {
        let m = model
            .as_ref()
            .ok_or_else(|| Fail(McfStatus::NullPointer, "model is null".into()))?;
        *out(count, "count")? = m.0.point_count();
        Ok(())
    })
}

/// Parses a family file. With a model the elements are its point names and
/// membership is asked in point ids; with a null model the family lives on
/// naturals or leaves.
///
/// # Safety
/// `json` must be a nul-terminated string, `model` a live handle or null,
/// and `family` writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_family_from_json(
    json: *const c_char,
    model: *const McfModel,
    family: *mut *mut McfFamily,
) -> McfStatus {
    guard(|| {
        let slot = out(family, "family")?;
        let spec: FamilySpec = serde_json::from_str(text(json, "json")?).map_err(Error::from)?;
        let f = match model.as_ref() {
            Some(m) => spec.build_on(&m.0)?,
            None => spec.build()?,
        };
        *slot = Box::into_raw(Box::new(McfFamily(f)));
        Ok(())
    })
}

/// # Safety
/// `family` must come from `mcf_family_from_json`, or be null.
#[no_mangle]
pub unsafe extern "C" fn mcf_family_free(family: *mut McfFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// # Safety
/// `family` must be a live handle, `elements` must point to `len` values
/// (or be null when `len` is 0) and `member` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_family_contains(
    family: *const McfFamily,
    elements: *const u64,
    len: usize,
    member: *mut bool,
) -> McfStatus {
    guard(|| {
        let f = family
            .as_ref()
            .ok_or_else(|| Fail(McfStatus::NullPointer, "family is null".into()))?;
        let set = if len == 0 {
            &[][..]
        } else if elements.is_null() {
            return Err(Fail(McfStatus::NullPointer, "elements is null".into()));
        } else {
            std::slice::from_raw_parts(elements, len)
        };
        *out(member, "member")? = f.0.contains(set);
        Ok(())
    })
}

/// Writes the upper half of the `len` naturals at `set` to `result` (room
/// for `capacity` values) and its size to `result_len`.
///
/// # Safety
/// `set` must point to `len` values, `result` to `capacity` writable values,
/// and `result_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_schreier_extract(
    set: *const u64,
    len: usize,
    result: *mut u64,
    capacity: usize,
    result_len: *mut usize,
) -> McfStatus {
    guard(|| {
        let h = if len == 0 {
            &[][..]
        } else if set.is_null() {
            return Err(Fail(McfStatus::NullPointer, "set is null".into()));
        } else {
            std::slice::from_raw_parts(set, len)
        };
        let member = mcfill::dyadic::schreier_extract(h);
        *out(result_len, "result_len")? = member.len();
        if member.len() > capacity {
            return Err(Fail(
                McfStatus::BufferTooSmall,
                format!("result needs {} values, capacity is {capacity}", member.len()),
            ));
        }
        if !member.is_empty() {
            if result.is_null() {
                return Err(Fail(McfStatus::NullPointer, "result is null".into()));
            }
            std::slice::from_raw_parts_mut(result, member.len()).copy_from_slice(&member);
        }
        Ok(())
    })
}

/// Decides MC-filling of `family` (built on `model`) at `epsilon` ("p/q").
/// `holds` receives the decision and `verdict_json` a verdict with its
/// certificate, to be released with `mcf_string_free`. `covers` non-zero
/// lets the adversary choose covers too.
///
/// # Safety
/// Handles must be live, `epsilon` nul-terminated, outputs writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_check_mcfilling(
    model: *const McfModel,
    family: *const McfFamily,
    epsilon: *const c_char,
    covers: c_int,
    max_points: usize,
    holds: *mut bool,
    verdict_json: *mut *mut c_char,
) -> McfStatus {
    guard(|| {
        let m = model
            .as_ref()
            .ok_or_else(|| Fail(McfStatus::NullPointer, "model is null".into()))?;
        let f = family
            .as_ref()
            .ok_or_else(|| Fail(McfStatus::NullPointer, "family is null".into()))?;
        let eps: Rational = text(epsilon, "epsilon")?.parse()?;
        let holds = out(holds, "holds")?;
        let json_out = out(verdict_json, "verdict_json")?;
        let opts = McOptions {
            max_points,
            ..McOptions::default()
        };
        let v = if covers != 0 {
            check_mc_filling_covers(&m.0, &f.0, &eps, &opts)?
        } else {
            check_mc_filling(&m.0, &f.0, &eps, &opts)?
        };
        *holds = v.holds;
        *json_out = owned_string(serde_json::to_string(&v).map_err(Error::from)?);
        Ok(())
    })
}

/// Runs the command line with `argc` arguments (the first is the program
/// name). The report or error object is returned in `report_json`; the
/// function returns the command's exit status (0, 1 or 2), or -1 when the
/// arguments cannot be read.
///
/// # Safety
/// `argv` must hold `argc` nul-terminated strings; `report_json` writable.
#[no_mangle]
pub unsafe extern "C" fn mcf_run_cli(argc: c_int, argv: *const *const c_char, report_json: *mut *mut c_char) -> c_int {
    let mut code = -1;
    let status = guard(|| {
        let slot = out(report_json, "report_json")?;
        if argv.is_null() || argc < 0 {
            return Err(Fail(McfStatus::NullPointer, "argv is null".into()));
        }
        let args = std::slice::from_raw_parts(argv, argc as usize)
            .iter()
            .map(|&a| text(a, "argument").map(str::to_owned))
            .collect::<Result<Vec<_>, _>>()?;
        let mut buf = Vec::new();
        code = mcfill::cli::run(args, &mut buf);
        *slot = owned_string(String::from_utf8_lossy(&buf).into_owned());
        Ok(())
    });
    if status == McfStatus::Ok {
        code
    } else {
        -1
    }
}

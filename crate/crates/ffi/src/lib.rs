//! C ABI over the dictionary, codec and rate-distortion solver.
//!
//! Every function returns a [`VflStatus`]. On failure the message is kept
//! per thread and can be copied out with [`vfl_last_error_message`].
//! Dictionaries are opaque handles released with [`vfl_dictionary_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vflossy::codec::{Parser, SymbolReader};
use vflossy::dictionary::{self, BuildConfig, Builder, Dictionary};
use vflossy::error::Error;
use vflossy::rd::{rate_distortion, DistortionSpec, Pmf, DEFAULT_TOL};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VflStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Integrity = 4,
    Io = 5,
    StreamExhausted = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque dictionary handle.
pub struct VflDictionary {
    inner: Dictionary,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VflDictionaryInfo {
    /// Codewords stored.
    pub size: u64,
    /// Budget `M` the dictionary was built for.
    pub budget: u64,
    /// Bits per emitted index.
    pub index_width: u32,
    /// Longest segment.
    pub max_len: u32,
    pub source_size: u32,
    pub reproduction_size: u32,
    pub gamma: f64,
    pub level: f64,
    pub crc32: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> VflStatus {
    match e {
        Error::StreamExhausted { .. } => VflStatus::StreamExhausted,
        Error::Io { .. } | Error::IoPlain(_) => VflStatus::Io,
        _ => match e.exit_code() {
            2 => VflStatus::Numerical,
            3 => VflStatus::Integrity,
            _ => VflStatus::InvalidArgument,
        },
    }
}

fn guard<F: FnOnce() -> Result<(), (VflStatus, String)>>(f: F) -> VflStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VflStatus::Ok,
        Ok(Err((s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            VflStatus::Panic
        }
    }
}

fn fail(e: Error) -> (VflStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (VflStatus, String) {
    (VflStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `ptr` must be null or point to `len` readable values.
unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], (VflStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// # Safety
/// `d` must be null or a handle from this library that has not been freed.
unsafe fn dict<'a>(d: *const VflDictionary) -> Result<&'a Dictionary, (VflStatus, String)> {
    d.as_ref().map(|h| &h.inner).ok_or_else(|| null("dictionary"))
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, (VflStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (VflStatus::InvalidArgument, "path is not UTF-8".into()))
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn vfl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let m = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = m.len().min(len - 1);
            ptr::copy_nonoverlapping(m.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        m.len()
    })
}

/// Rate-distortion function in bits of a source with `rows` letters under a
/// row-major `rows x cols` distortion matrix at `level`.
///
/// # Safety
/// `probs` must hold `rows` values, `matrix` `rows * cols` values, and
/// `out_rate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vfl_rate_distortion(
    probs: *const f64,
    rows: usize,
    matrix: *const f64,
    cols: usize,
    level: f64,
    out_rate: *mut f64,
) -> VflStatus {
    guard(|| {
        if out_rate.is_null() {
            return Err(null("out_rate"));
        }
        let p = slice(probs, rows, "probs")?;
        let m = slice(matrix, rows.saturating_mul(cols), "matrix")?;
        let source = Pmf::new(p.to_vec()).map_err(fail)?;
        let spec = DistortionSpec::from_flat(m.to_vec(), rows, cols, level).map_err(fail)?;
        let r = rate_distortion(&source, &spec, DEFAULT_TOL).map_err(fail)?;
        if !r.converged {
            return Err((VflStatus::Numerical, "solver did not converge".into()));
        }
        *out_rate = r.rate;
        Ok(())
    })
}

/// Build a dictionary of at most `budget` codewords for the row-major
/// `rows x cols` distortion matrix at `level`, choosing the largest
/// threshold that fits.
///
/// # Safety
/// `matrix` must hold `rows * cols` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vfl_dictionary_build(
    matrix: *const f64,
    rows: usize,
    cols: usize,
    level: f64,
    budget: u64,
    seed: u64,
    out: *mut *mut VflDictionary,
) -> VflStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = slice(matrix, rows.saturating_mul(cols), "matrix")?;
        let spec = DistortionSpec::from_flat(m.to_vec(), rows, cols, level).map_err(fail)?;
        let cfg = BuildConfig {
            seed,
            ..BuildConfig::default()
        };
        let b = Builder::new(&spec, cfg).map_err(fail)?;
        let choice = b.choose_gamma(budget).map_err(fail)?;
        let d = b.build(choice.gamma, budget).map_err(fail)?;
        *out = Box::into_raw(Box::new(VflDictionary { inner: d }));
        Ok(())
    })
}

/// Load a dictionary file.
///
/// # Safety
/// `file` must be a NUL-terminated path and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vfl_dictionary_load(file: *const c_char, out: *mut *mut VflDictionary) -> VflStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let d = dictionary::load(path(file)?).map_err(fail)?;
        *out = Box::into_raw(Box::new(VflDictionary { inner: d }));
        Ok(())
    })
}

/// Write a dictionary file.
///
/// # Safety
/// `d` must be a live handle and `file` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn vfl_dictionary_save(d: *const VflDictionary, file: *const c_char) -> VflStatus {
    guard(|| dictionary::save(dict(d)?, path(file)?).map_err(fail))
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `d` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn vfl_dictionary_free(d: *mut VflDictionary) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vfl_dictionary_info(d: *const VflDictionary, out: *mut VflDictionaryInfo) -> VflStatus {
    guard(|| {
        let d = dict(d)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = VflDictionaryInfo {
            size: d.len(),
            budget: d.budget(),
            index_width: d.index_width(),
            max_len: d.max_len() as u32,
            source_size: d.spec().source_size() as u32,
            reproduction_size: d.spec().reproduction_size() as u32,
            gamma: d.gamma(),
            level: d.spec().level(),
            crc32: d.checksum(),
        };
        Ok(())
    })
}

/// Parse `symbols` into codeword indices, writing at most `capacity` of
/// them. `out_count` receives the segments parsed and `out_consumed` the
/// symbols they cover; symbols after that do not complete a segment.
///
/// # Safety
/// `symbols` must hold `len` bytes, `indices` `capacity` slots, and the
/// output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn vfl_encode(
    d: *const VflDictionary,
    symbols: *const u8,
    len: usize,
    indices: *mut u64,
    capacity: usize,
    out_count: *mut usize,
    out_consumed: *mut usize,
) -> VflStatus {
    guard(|| {
        let d = dict(d)?;
        let x = slice(symbols, len, "symbols")?;
        if out_count.is_null() || out_consumed.is_null() {
            return Err(null("output count"));
        }
        if capacity > 0 && indices.is_null() {
            return Err(null("indices"));
        }
        let mut r = SymbolReader::from_slice(x);
        let mut p = Parser::new(d);
        let mut count = 0usize;
        let mut consumed = 0usize;
        while !r.is_exhausted() {
            let res = match p.parse(&mut r) {
                Ok(res) => res,
                Err(Error::StreamExhausted { .. }) => break,
                Err(e) => return Err(fail(e)),
            };
            if count == capacity {
                *out_count = count;
                *out_consumed = consumed;
                return Err((VflStatus::BufferTooSmall, format!("more than {capacity} segments")));
            }
            *indices.add(count) = res.codeword_index;
            count += 1;
            consumed = r.consumed() as usize;
        }
        *out_count = count;
        *out_consumed = consumed;
        Ok(())
    })
}

/// Copy codeword `index` into `buf`; `out_len` receives its length.
///
/// # Safety
/// `buf` must hold `capacity` bytes and `out_len` be writable.
#[no_mangle]
pub unsafe extern "C" fn vfl_decode_index(
    d: *const VflDictionary,
    index: u64,
    buf: *mut u8,
    capacity: usize,
    out_len: *mut usize,
) -> VflStatus {
    guard(|| {
        let d = dict(d)?;
        let out_len = out_len.as_mut().ok_or_else(|| null("out_len"))?;
        let c = d.codeword(index).map_err(fail)?;
        *out_len = c.len();
        if c.len() > capacity {
            return Err((VflStatus::BufferTooSmall, format!("codeword has {} symbols", c.len())));
        }
        if !c.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(c.as_ptr(), buf, c.len());
        }
        Ok(())
    })
}

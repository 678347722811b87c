use std::ffi::CString;
use std::ptr;

use vflossy_ffi::*;

const HAMMING2: [f64; 4] = [0.0, 1.0, 1.0, 0.0];

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    let n = unsafe { vfl_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn h2(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn build(level: f64, budget: u64) -> *mut VflDictionary {
    let mut d = ptr::null_mut();
    let s = unsafe { vfl_dictionary_build(HAMMING2.as_ptr(), 2, 2, level, budget, 7, &mut d) };
    assert_eq!(s, VflStatus::Ok, "{}", last_error());
    assert!(!d.is_null());
    d
}

#[test]
fn binary_rate_matches_closed_form() {
    let p = [0.3, 0.7];
    let mut r = 0.0;
    let s = unsafe { vfl_rate_distortion(p.as_ptr(), 2, HAMMING2.as_ptr(), 2, 0.1, &mut r) };
    assert_eq!(s, VflStatus::Ok);
    assert!((r - (h2(0.3) - h2(0.1))).abs() < 1e-7);
}

#[test]
fn bad_pmf_sets_message() {
    let p = [0.3, 0.3];
    let mut r = 0.0;
    let s = unsafe { vfl_rate_distortion(p.as_ptr(), 2, HAMMING2.as_ptr(), 2, 0.1, &mut r) };
    assert_eq!(s, VflStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_reported() {
    let mut r = 0.0;
    let s = unsafe { vfl_rate_distortion(ptr::null(), 2, HAMMING2.as_ptr(), 2, 0.1, &mut r) };
    assert_eq!(s, VflStatus::NullPointer);
    let mut info = VflDictionaryInfo::default();
    assert_eq!(unsafe { vfl_dictionary_info(ptr::null(), &mut info) }, VflStatus::NullPointer);
    unsafe { vfl_dictionary_free(ptr::null_mut()) };
}

#[test]
fn error_message_truncates() {
    let mut r = 0.0;
    unsafe { vfl_rate_distortion(ptr::null(), 2, HAMMING2.as_ptr(), 2, 0.1, &mut r) };
    let mut buf = [1 as std::ffi::c_char; 4];
    let n = unsafe { vfl_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 3);
    assert_eq!(buf[3], 0);
}

#[test]
fn encode_decode_save_load() {
    let d = build(0.2, 64);
    let mut info = VflDictionaryInfo::default();
    assert_eq!(unsafe { vfl_dictionary_info(d, &mut info) }, VflStatus::Ok);
    assert!(info.size >= 1 && info.size <= 64);
    assert_eq!(info.index_width, 6);
    assert_eq!(info.source_size, 2);

    let x: Vec<u8> = (0..500u32).map(|i| ((i * 7919) % 3 == 0) as u8).collect();
    let mut idx = vec![0u64; x.len()];
    let (mut count, mut consumed) = (0usize, 0usize);
    let s = unsafe { vfl_encode(d, x.as_ptr(), x.len(), idx.as_mut_ptr(), idx.len(), &mut count, &mut consumed) };
    assert_eq!(s, VflStatus::Ok, "{}", last_error());
    assert!(count > 0 && consumed <= x.len());

    let mut y = Vec::new();
    let mut buf = vec![0u8; info.max_len as usize];
    for &i in &idx[..count] {
        let mut len = 0;
        let s = unsafe { vfl_decode_index(d, i, buf.as_mut_ptr(), buf.len(), &mut len) };
        assert_eq!(s, VflStatus::Ok);
        y.extend_from_slice(&buf[..len]);
    }
    assert_eq!(y.len(), consumed);

    let small = unsafe { vfl_encode(d, x.as_ptr(), x.len(), idx.as_mut_ptr(), 1, &mut count, &mut consumed) };
    assert_eq!(small, VflStatus::BufferTooSmall);
    assert_eq!(count, 1);

    let mut len = 0;
    let s = unsafe { vfl_decode_index(d, info.size, buf.as_mut_ptr(), buf.len(), &mut len) };
    assert_eq!(s, VflStatus::Integrity);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("d.vfd").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { vfl_dictionary_save(d, path.as_ptr()) }, VflStatus::Ok);
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { vfl_dictionary_load(path.as_ptr(), &mut e) }, VflStatus::Ok);
    let mut info2 = VflDictionaryInfo::default();
    unsafe { vfl_dictionary_info(e, &mut info2) };
    assert_eq!(info2.crc32, info.crc32);
    unsafe {
        vfl_dictionary_free(e);
        vfl_dictionary_free(d);
    }
}

#[test]
fn missing_file_is_io() {
    let path = CString::new("/nonexistent/dict.vfd").unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { vfl_dictionary_load(path.as_ptr(), &mut d) }, VflStatus::Io);
    assert!(d.is_null());
}

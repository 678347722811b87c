use std::sync::OnceLock;

use proptest::prelude::*;

use vflossy::analysis::{epsilon_rate_from, TrialRecord};
use vflossy::codec::{decode, encode_all, pack_indices, read_stream, unpack_indices, write_stream};
use vflossy::dictionary::{from_bytes, to_bytes, BuildConfig, Builder, Dictionary};
use vflossy::rational::Rational;
use vflossy::rd::{rate_distortion, DistortionSpec, Pmf};
use vflossy::types::{enumerate_types, is_transitional, rank, type_count, unrank, TypeClass};
use vflossy::Error;

fn small(k: usize, level: f64, budget: u64) -> Dictionary {
    let spec = DistortionSpec::hamming(k, level).unwrap();
    let b = Builder::new(&spec, BuildConfig::default()).unwrap();
    let g = b.choose_gamma(budget).unwrap();
    b.build(g.gamma, budget).unwrap()
}

fn binary_dict() -> &'static Dictionary {
    static D: OnceLock<Dictionary> = OnceLock::new();
    D.get_or_init(|| small(2, 0.2, 128))
}

fn ternary_dict() -> &'static Dictionary {
    static D: OnceLock<Dictionary> = OnceLock::new();
    D.get_or_init(|| small(3, 0.25, 64))
}

fn counts_of(x: &[u8], k: usize) -> Vec<u32> {
    let mut c = vec![0u32; k];
    x.iter().for_each(|&s| c[s as usize] += 1);
    c
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

fn semifaithful(d: &Dictionary, x: &[u8]) {
    let (enc, tail) = encode_all(x, d).unwrap();
    let segments = decode(&enc.indices, d).unwrap();
    let grid = d.grid();
    let mut pos = 0;
    for y in &segments {
        let seg = &x[pos..pos + y.len()];
        let flips = seg.iter().zip(y).filter(|(a, b)| a != b).count() as u64;
        // exact: flips / n <= num / den
        assert!(flips * grid.level.den <= grid.level.num * y.len() as u64, "segment at {pos} exceeds D");
        pos += y.len();
    }
    assert_eq!(pos + tail, x.len());
    assert!(tail <= d.max_len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank_unrank_round_trip(x in prop::collection::vec(0u8..3, 1..40)) {
        let c = counts_of(&x, 3);
        let r = rank(&x, &c);
        prop_assert!(r < TypeClass::new(c.clone()).unwrap().size().unwrap());
        prop_assert_eq!(unrank(r, &c), x);
    }

    #[test]
    fn binary_parses_are_semifaithful(x in prop::collection::vec(0u8..2, 0..600)) {
        semifaithful(binary_dict(), &x);
    }

    #[test]
    fn ternary_parses_are_semifaithful(x in prop::collection::vec(0u8..3, 0..300)) {
        semifaithful(ternary_dict(), &x);
    }

    #[test]
    fn parses_stop_at_transitional_or_capped_types(x in prop::collection::vec(0u8..2, 0..400)) {
        let d = binary_dict();
        let (enc, _) = encode_all(&x, d).unwrap();
        let mut pos = 0;
        for y in decode(&enc.indices, d).unwrap() {
            let t = TypeClass::of_sequence(&x[pos..pos + y.len()], 2).unwrap();
            pos += y.len();
            let g = d.group_for(&t).expect("segment type has a covering");
            prop_assert!(g.capped || is_transitional(&t, d.gamma(), d.spec()).unwrap());
        }
    }

    #[test]
    fn index_packing_round_trips(width in 1u32..=40, raw in prop::collection::vec(any::<u64>(), 0..64)) {
        let idx: Vec<u64> = raw.iter().map(|v| v & ((1u64 << width) - 1)).collect();
        let bits = pack_indices(&idx, width);
        prop_assert_eq!(bits.len() as u64, (idx.len() as u64 * width as u64).div_ceil(8));
        prop_assert_eq!(unpack_indices(&bits, idx.len() as u64 * width as u64, width).unwrap(), idx);
    }

    #[test]
    fn stream_round_trips(x in prop::collection::vec(0u8..2, 0..400)) {
        let d = binary_dict();
        let (enc, _) = encode_all(&x, d).unwrap();
        let mut buf = Vec::new();
        write_stream(&mut buf, d, &enc.indices).unwrap();
        prop_assert_eq!(read_stream(&mut buf.as_slice(), d).unwrap(), enc.indices);
    }

    #[test]
    fn epsilon_rate_is_monotone(lengths in prop::collection::vec(1usize..60, 1..300), e1 in 0.01f64..0.98, de in 0.0f64..0.5) {
        let e2 = (e1 + de).min(0.99);
        let recs: Vec<TrialRecord> = lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| TrialRecord { seed: i as u64, length: l, rate_sample: 8.0 / l as f64, distortion: 0.0 })
            .collect();
        let a = epsilon_rate_from(&recs, 8, e1, 3).unwrap();
        let b = epsilon_rate_from(&recs, 8, e2, 3).unwrap();
        prop_assert!(b.rate <= a.rate);
        prop_assert!(a.ci_lo <= a.ci_hi);
        // at most a fraction eps of samples strictly exceed the rate
        let over = recs.iter().filter(|r| r.rate_sample > a.rate).count();
        prop_assert!(over as f64 <= e1 * recs.len() as f64);
    }

    #[test]
    fn rate_is_monotone_and_bounded(p in 0.02f64..0.98, d1 in 0.0f64..0.5, d2 in 0.0f64..0.5) {
        let src = Pmf::new(vec![p, 1.0 - p]).unwrap();
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let r_lo = rate_distortion(&src, &DistortionSpec::hamming(2, lo).unwrap(), 1e-10).unwrap().rate;
        let r_hi = rate_distortion(&src, &DistortionSpec::hamming(2, hi).unwrap(), 1e-10).unwrap().rate;
        prop_assert!(r_hi <= r_lo + 1e-9);
        prop_assert!(r_hi >= 0.0 && r_lo <= src.entropy() + 1e-9);
    }

    #[test]
    fn rationals_recover_small_fractions(num in 0u64..1000, den in 1u64..1000) {
        let r = Rational::approximate(num as f64 / den as f64, 1_000_000).unwrap();
        prop_assert_eq!(r.num * den, num * r.den);
    }
}

#[test]
fn type_counts_match_stars_and_bars() {
    for k in 2..=4usize {
        for n in 1..=12usize {
            let want = binomial((n + k - 1) as u64, (k - 1) as u64);
            assert_eq!(type_count(n, k).unwrap(), want);
            let types = enumerate_types(n, k).unwrap();
            assert_eq!(types.len() as u64, want);
            let total: u64 = types.iter().map(|t| t.size().unwrap()).sum();
            assert_eq!(total, (k as u64).pow(n as u32));
        }
    }
}

#[test]
fn dictionary_bytes_round_trip_and_detect_corruption() {
    let d = binary_dict();
    let bytes = to_bytes(d);
    let e = from_bytes(&bytes).unwrap();
    assert_eq!(to_bytes(&e), bytes);
    assert_eq!(e.len(), d.len());
    for i in 0..d.len() {
        assert_eq!(e.codeword(i).unwrap(), d.codeword(i).unwrap());
    }
    for pos in [8, bytes.len() / 2, bytes.len() - 5] {
        let mut bad = bytes.clone();
        bad[pos] ^= 0x40;
        let err = from_bytes(&bad).unwrap_err();
        assert_eq!(err.exit_code(), 3, "byte {pos}: {err}");
    }
    assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
}

#[test]
fn stream_from_another_dictionary_is_rejected() {
    let d = binary_dict();
    let other = small(2, 0.2, 64);
    let mut buf = Vec::new();
    write_stream(&mut buf, &other, &[0, 1, 2]).unwrap();
    assert!(matches!(read_stream(&mut buf.as_slice(), d), Err(Error::Integrity(_))));
}

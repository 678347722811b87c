use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};

use vflossy::analysis::stats::{normal_quantile, q_inv, wilson, Z95};
use vflossy::analysis::{theorem_bound, type_deviation_mass, BoundInputs};
use vflossy::rd::{rate_distortion, rd_sensitivity, DistortionSpec, Pmf};

fn h2(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

#[test]
fn normal_quantile_matches_reference() {
    let n = Normal::new(0.0, 1.0).unwrap();
    for p in [1e-6, 0.001, 0.025, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.975, 0.999999] {
        let want = n.inverse_cdf(p);
        assert!((normal_quantile(p) - want).abs() < 1e-8 * want.abs().max(1.0), "p={p}");
        assert!((q_inv(p) + want).abs() < 1e-8 * want.abs().max(1.0), "p={p}");
    }
}

#[test]
fn wilson_interval_brackets_and_shrinks() {
    let (lo, hi) = wilson(30, 100, Z95);
    assert!(lo < 0.3 && 0.3 < hi);
    // closed form
    let (p, n, z) = (0.3f64, 100.0f64, Z95);
    let c = (p + z * z / (2.0 * n)) / (1.0 + z * z / n);
    let h = z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    assert!((lo - (c - h)).abs() < 1e-12 && (hi - (c + h)).abs() < 1e-12);
    let (lo2, hi2) = wilson(3000, 10000, Z95);
    assert!(hi2 - lo2 < hi - lo);
}

#[test]
fn ternary_uniform_hamming_closed_form() {
    // R(D) = log2 k - h2(D) - D log2(k - 1) below 1 - 1/k
    for k in [3usize, 4] {
        for d in [0.05, 0.2, 0.4] {
            let spec = DistortionSpec::hamming(k, d).unwrap();
            let r = rate_distortion(&Pmf::uniform(k), &spec, 1e-11).unwrap();
            let want = (k as f64).log2() - h2(d) - d * ((k - 1) as f64).log2();
            assert!((r.rate - want).abs() < 1e-7, "k={k} D={d}: {} vs {want}", r.rate);
        }
    }
}

#[test]
fn binary_slope_matches_derivative() {
    // |dR/dD| = log2((1 - D) / D)
    let src = Pmf::new(vec![0.3, 0.7]).unwrap();
    for d in [0.05, 0.1, 0.2] {
        let r = rate_distortion(&src, &DistortionSpec::hamming(2, d).unwrap(), 1e-11).unwrap();
        assert!((r.slope.abs() - ((1.0 - d) / d).log2()).abs() < 1e-5, "D={d}");
        assert!((r.distortion - d).abs() < 1e-6);
    }
}

#[test]
fn binary_mass_matches_binomial_tail() {
    // |P_hat - p| in the Euclidean norm is sqrt(2) |k/n - p| for a binary source
    for n in [50u64, 100, 200] {
        for a in [1.0, 2.0, 6f64.sqrt()] {
            let m = type_deviation_mass(&Pmf::uniform(2), n as usize, a, 0).unwrap();
            let radius = a * ((n as f64).ln() / n as f64).sqrt();
            let b = Binomial::new(0.5, n).unwrap();
            let mut want = 0.0;
            for k in 0..=n {
                if 2f64.sqrt() * (k as f64 / n as f64 - 0.5).abs() > radius {
                    want += b.cdf(k) - if k == 0 { 0.0 } else { b.cdf(k - 1) };
                }
            }
            assert!((m.mass - want).abs() < 1e-12 + 1e-9 * want, "n={n} a={a}: {} vs {want}", m.mass);
        }
    }
}

#[test]
fn bound_terms_add_up() {
    let src = Pmf::new(vec![0.3, 0.7]).unwrap();
    let spec = DistortionSpec::hamming(2, 0.1).unwrap();
    let b = theorem_bound(&BoundInputs {
        source: src.clone(),
        spec: spec.clone(),
        budget: 1 << 12,
        epsilon: 0.1,
        upsilon: 4.0,
        c_h: 1.0,
        slack: 0.0,
    })
    .unwrap();
    assert!((b.rate - (h2(0.3) - h2(0.1))).abs() < 1e-8);
    let s = rd_sensitivity(&src, &spec, 1e-4).unwrap();
    assert!((b.sigma - s.dispersion.sqrt()).abs() < 1e-9);
    assert!((b.value - (b.rate + b.second_order + b.third_order + b.slack_term)).abs() < 1e-12);
}

use proptest::prelude::*;

use hdr_percept::dataset::{split_dataset, SplitSpec};
use hdr_percept::degrade::{add_camera_noise, NoiseParams};
use hdr_percept::imageio::{decode_pfm, encode_pfm};
use hdr_percept::loss::{loss_l1, smape_values};
use hdr_percept::metrics::{pu_psnr, pu_ssim};
use hdr_percept::stats::{maximal_runs, paired_ttest, student_t_cdf};
use hdr_percept::transfer::encode_image;
use hdr_percept::{DisplayModel, EncodingKind, LinearImage};

const NONLINEAR: [EncodingKind; 3] = [EncodingKind::MuLaw { mu: 5000.0 }, EncodingKind::Pq, EncodingKind::Pu21];

/// A value inside the native domain of `kind`, log-uniform where the domain allows.
fn in_domain(kind: EncodingKind, u: f64) -> f64 {
    match kind {
        EncodingKind::Pq | EncodingKind::Pu21 => 10f64.powf(-2.3 + u * 6.3),
        _ => 10f64.powf(-6.0 + u * 6.0),
    }
}

fn image(w: usize, h: usize) -> impl Strategy<Value = LinearImage> {
    prop::collection::vec(0.0f32..1.0, w * h * 3).prop_map(move |d| LinearImage::new(w, h, d).unwrap())
}

fn brute_force_runs(n: usize, same: &dyn Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let valid = |i: usize, j: usize| (i..=j).all(|a| (a + 1..=j).all(|b| same(a, b)));
    let all: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .filter(|&(i, j)| valid(i, j))
        .collect();
    all.iter()
        .copied()
        .filter(|&(i, j)| !all.iter().any(|&(a, b)| a <= i && j <= b && (a, b) != (i, j)))
        .collect()
}

proptest! {
    #[test]
    fn encodings_strictly_increasing(u in 0.0f64..1.0, v in 0.0f64..1.0) {
        prop_assume!((u - v).abs() > 1e-9);
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        for kind in NONLINEAR {
            let (a, b) = (in_domain(kind, lo), in_domain(kind, hi));
            prop_assert!(kind.encode(a).unwrap() < kind.encode(b).unwrap(), "{kind} at {a} {b}");
            prop_assert!(kind.derivative(a).unwrap() > 0.0);
        }
    }

    #[test]
    fn encodings_round_trip(u in 0.0f64..1.0) {
        for kind in NONLINEAR {
            let x = in_domain(kind, u);
            let back = kind.decode(kind.encode(x).unwrap()).unwrap();
            prop_assert!((back - x).abs() <= 1e-9 * x, "{kind}: {x} -> {back}");
        }
    }

    #[test]
    fn encoded_images_stay_in_unit_range(img in image(4, 3), scale in 0.1f64..10.0) {
        let display = DisplayModel::default();
        let img = img.scaled(scale);
        for kind in [EncodingKind::Linear, EncodingKind::mulaw(), EncodingKind::Pq, EncodingKind::Pu21] {
            let e = encode_image(&img, kind, &display).unwrap();
            prop_assert!(e.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn losses_symmetric_and_zero_on_identity(a in prop::collection::vec(0.0f32..1.0, 12), b in prop::collection::vec(0.0f32..1.0, 12)) {
        prop_assert_eq!(loss_l1(&a, &b).unwrap(), loss_l1(&b, &a).unwrap());
        prop_assert_eq!(loss_l1(&a, &a).unwrap(), 0.0);
        let s = smape_values(&a, &b, 1e-3).unwrap();
        prop_assert_eq!(s, smape_values(&b, &a, 1e-3).unwrap());
        prop_assert!((0.0..1.0).contains(&s));
        prop_assert_eq!(smape_values(&a, &a, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn metrics_symmetric(a in image(12, 12), b in image(12, 12)) {
        let d = DisplayModel::default();
        prop_assert_eq!(pu_psnr(&a, &b, &d).unwrap(), pu_psnr(&b, &a, &d).unwrap());
        let s = pu_ssim(&a, &b, &d).unwrap();
        prop_assert!((s - pu_ssim(&b, &a, &d).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn ttest_swap_and_pairing_invariance(
        pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..20),
        rot in 0usize..20,
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let r = paired_ttest(&a, &b).unwrap();
        let swapped = paired_ttest(&b, &a).unwrap();
        prop_assert!((r.t + swapped.t).abs() < 1e-9 * r.t.abs().max(1.0));
        prop_assert!((r.p - swapped.p).abs() < 1e-12);
        // Reordering the pairs jointly does not change the test.
        let k = rot % pairs.len();
        let mut a2 = a.clone();
        let mut b2 = b.clone();
        a2.rotate_left(k);
        b2.rotate_left(k);
        let r2 = paired_ttest(&a2, &b2).unwrap();
        prop_assert!((r.t - r2.t).abs() < 1e-9 * r.t.abs().max(1.0));
        prop_assert!((r.p - r2.p).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&r.p));
    }

    #[test]
    fn t_cdf_symmetric_and_monotone(t in 0.0f64..10.0, dt in 0.01f64..1.0, df in 1u32..300) {
        let df = df as f64;
        let c = student_t_cdf(t, df);
        prop_assert!((c + student_t_cdf(-t, df) - 1.0).abs() < 1e-12);
        prop_assert!(student_t_cdf(t + dt, df) >= c);
    }

    #[test]
    fn runs_match_brute_force(n in 1usize..8, bits in any::<u64>()) {
        // Random symmetric relation encoded in the upper triangle.
        let same = move |i: usize, j: usize| {
            let (i, j) = if i < j { (i, j) } else { (j, i) };
            (bits >> (i * 8 + j)) & 1 == 1
        };
        prop_assert_eq!(maximal_runs(n, same), brute_force_runs(n, &same));
    }

    #[test]
    fn pfm_round_trip_is_bitwise(w in 1usize..9, h in 1usize..9, seed in any::<u64>()) {
        let data: Vec<f32> = (0..w * h * 3)
            .map(|i| f32::from_bits((seed.wrapping_mul(i as u64 + 1) >> 33) as u32 & 0x7f7f_ffff))
            .collect();
        let bytes = encode_pfm(w, h, &data);
        let back = decode_pfm(&bytes, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!((back.width, back.height), (w, h));
        prop_assert!(back.rgb.iter().zip(&data).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn split_is_a_deterministic_partition(n in 5usize..60, seed in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("img{i}")).collect();
        let spec = SplitSpec { seed, ..SplitSpec::default() };
        let s = split_dataset(&ids, &spec).unwrap();
        let mut all: Vec<String> = s.train.iter().chain(&s.val).chain(&s.test).cloned().collect();
        all.sort();
        let mut want = ids.clone();
        want.sort();
        prop_assert_eq!(all, want);
        prop_assert_eq!(split_dataset(&ids, &spec).unwrap(), s);
    }

    #[test]
    fn noise_is_deterministic_and_non_negative(img in image(5, 4), seed in any::<u64>()) {
        let p = NoiseParams { seed, ..NoiseParams::default() };
        let a = add_camera_noise(&img, &p).unwrap();
        prop_assert_eq!(&a, &add_camera_noise(&img, &p).unwrap());
        prop_assert!(a.data().iter().all(|&v| v >= 0.0));
    }
}

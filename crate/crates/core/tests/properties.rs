use ambc::bd::{
    frame_from_u32, manchester_encode, parse_payload_hex, payload_hex, sync_chips, u32_from_bits, BdWaveform,
    FRAME_CHIPS, SYNC_CHIPS,
};
use ambc::csi::CirTransform;
use ambc::harness::{job_seed, link_budget, LinkBudget};
use ambc::lte::{build_grid_at, ofdm_demodulate, ofdm_modulate, CellConfig};
use ambc::rx::{receive, RxConfig, TapPowerSeries};
use ambc::IqStream;
use num_complex::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #[test]
    fn manchester_is_dc_balanced(bits in prop::collection::vec(0u8..2, 1..64)) {
        let chips = manchester_encode(&bits);
        prop_assert_eq!(chips.len(), 2 * bits.len());
        prop_assert_eq!(chips.iter().map(|&c| c as usize).sum::<usize>(), bits.len());
        for (pair, &b) in chips.chunks(2).zip(&bits) {
            prop_assert_ne!(pair[0], pair[1]);
            prop_assert_eq!(pair[0], b);
        }
    }

    #[test]
    fn frame_layout_and_payload_roundtrip(v in any::<u32>()) {
        let frame = frame_from_u32(v);
        let chips = frame.chips();
        prop_assert_eq!(chips.len(), FRAME_CHIPS);
        prop_assert_eq!(&chips[..SYNC_CHIPS], &sync_chips()[..]);
        let bits: Vec<u8> = chips[SYNC_CHIPS..].chunks(2).map(|p| p[0]).collect();
        prop_assert_eq!(u32_from_bits(&bits).unwrap(), v);
        prop_assert_eq!(frame.payload_u32(), v);
    }

    #[test]
    fn payload_hex_roundtrip(v in any::<u32>()) {
        let s = payload_hex(v);
        prop_assert_eq!(s.len(), 8);
        prop_assert_eq!(parse_payload_hex(&s).unwrap(), v);
        prop_assert_eq!(parse_payload_hex(&s.to_uppercase()).unwrap(), v);
    }

    #[test]
    fn cf32_roundtrip(values in prop::collection::vec((any::<f32>(), any::<f32>()), 0..200)) {
        prop_assume!(values.iter().all(|(a, b)| a.is_finite() && b.is_finite()));
        let iq = IqStream::new(
            values.iter().map(|&(a, b)| Complex64::new(a as f64, b as f64)).collect(),
            1e6,
        );
        let mut bytes = Vec::new();
        iq.write_cf32(&mut bytes).unwrap();
        prop_assert_eq!(bytes.len(), 8 * values.len());
        let back = IqStream::from_cf32_bytes(&bytes, 1e6).unwrap();
        prop_assert_eq!(back.samples, iq.samples);
    }

    #[test]
    fn job_seed_is_a_pure_function(master in any::<u64>(), point in 0usize..64, capture in 0usize..4096, stream in 0u64..4) {
        let s = job_seed(master, point, capture, stream);
        prop_assert_eq!(s, job_seed(master, point, capture, stream));
        prop_assert_ne!(s, job_seed(master, point, capture, stream + 4));
        prop_assert_ne!(s, job_seed(master, point + 1, capture, stream));
    }

    #[test]
    fn cir_transform_preserves_energy(pilots in prop::collection::vec(complex(), 50), offset in 0usize..6) {
        let config = CellConfig::default();
        let taps = CirTransform::new(&config).apply(&pilots, offset);
        let time: f64 = taps.iter().map(|v| v.norm_sqr()).sum();
        let freq: f64 = pilots.iter().map(|v| v.norm_sqr()).sum::<f64>() / pilots.len() as f64;
        prop_assert!((time - freq).abs() <= 1e-12 * freq.max(1e-12));
    }

    #[test]
    fn link_budget_falls_with_distance(d in 0.5f64..50.0, k in 1.01f64..10.0) {
        let near = LinkBudget { d_bd_rx: d, d_tx_rx: d, ..LinkBudget::default() };
        let far = LinkBudget { d_bd_rx: d * k, d_tx_rx: d * k, ..LinkBudget::default() };
        let (a, b) = (link_budget(&near).unwrap(), link_budget(&far).unwrap());
        prop_assert!(b.backscatter_dbm < a.backscatter_dbm);
        prop_assert!(b.direct_dbm < a.direct_dbm);
        prop_assert!((a.backscatter_dbm - b.backscatter_dbm - 20.0 * k.log10()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ofdm_roundtrip(pci in 0u16..504, first in 0usize..10, seed in any::<u64>()) {
        let config = CellConfig { traffic_seed: seed, ..CellConfig::with_pci(pci) };
        let grid = build_grid_at(&config, first, 2).unwrap();
        let back = ofdm_demodulate(&ofdm_modulate(&grid), 0, &config).unwrap();
        prop_assert!(grid.relative_error(&back) < 1e-12);
    }

    #[test]
    fn chip_domain_loopback(
        v in any::<u32>(),
        alpha in 0.2f64..2.0,
        beta in 0.02f64..0.5,
        inverted in any::<bool>(),
        offset in 300usize..3000,
    ) {
        let rate = 14_000.0;
        let beta = if inverted { -beta } else { beta };
        let mut w = BdWaveform::empty(0.01, rate, 0).unwrap();
        w.add_burst(offset, frame_from_u32(v).chips()).unwrap();
        w.len += 6000;
        let power = TapPowerSeries::new(w.samples().iter().map(|x| alpha + beta * x).collect(), rate);
        let found = receive(&power, &RxConfig::new(0.01, rate).unwrap()).unwrap();
        prop_assert_eq!(found.len(), 1);
        prop_assert!(found[0].frame_start.abs_diff(offset) <= 1);
        prop_assert_eq!(found[0].phase_sign, beta.signum());
        prop_assert_eq!(found[0].payload(), v);
    }
}

//! Analyzer counts against what the operators actually do.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdconv::analyzer::{count_macs, Method, Schedule, SparsityMode};
use sdconv::reference::{deconv2d_oracle_counted, nzp_deconv2d_counted, nzp_expand};
use sdconv::sim::{simulate, Arch, SimConfig};
use sdconv::split::sd_deconv2d_counted;
use sdconv::{FilterBank, LayerSpec, Tensor3};

fn random_layer(rng: &mut ChaCha8Rng) -> LayerSpec {
    LayerSpec::deconv(
        (rng.gen_range(1..=5), rng.gen_range(1..=5), rng.gen_range(1..=3)),
        (rng.gen_range(1..=5), rng.gen_range(1..=5)),
        rng.gen_range(1..=3),
        rng.gen_range(1..=4),
    )
    .unwrap()
}

#[test]
fn instrumented_multiplies_equal_dense_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let l = random_layer(&mut rng);
        let x = Tensor3::from_fn(l.in_h, l.in_w, l.in_c, |_, _, _| 1.0).unwrap();
        let w = FilterBank::from_fn(l.kh, l.kw, l.in_c, l.out_c, |_, _, _, _| 1.0).unwrap();
        let (mut d, mut n, mut s) = (0, 0, 0);
        deconv2d_oracle_counted(&x, &w, l.stride, &mut d).unwrap();
        nzp_deconv2d_counted(&x, &w, l.stride, &mut n).unwrap();
        sd_deconv2d_counted(&x, &w, l.stride, &mut s).unwrap();
        assert_eq!(d, count_macs(&l, Method::Deconv, SparsityMode::Dense).unwrap(), "{l:?}");
        assert_eq!(n, count_macs(&l, Method::Nzp, SparsityMode::Dense).unwrap(), "{l:?}");
        assert_eq!(s, count_macs(&l, Method::Sd, SparsityMode::Dense).unwrap(), "{l:?}");
    }
}

#[test]
fn nzp_activation_mask_matches_expanded_input() {
    // With an all-ones input, the expanded map is 1 exactly where the analyzer
    // believes an activation is live.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..40 {
        let l = random_layer(&mut rng);
        let ones = Tensor3::from_fn(l.in_h, l.in_w, 1, |_, _, _| 1.0).unwrap();
        let e = nzp_expand(&ones, l.kh, l.kw, l.stride).unwrap();
        let pass = &Schedule::new(&l, Method::Nzp).unwrap().passes[0];
        for oy in 0..pass.out_h {
            for ox in 0..pass.out_w {
                let mut live = 0;
                for dy in 0..l.kh {
                    for dx in 0..l.kw {
                        live += e.at(oy + dy, ox + dx, 0) as u32;
                    }
                }
                assert_eq!(pass.taps[oy * pass.out_w + ox].act, live, "{l:?} at ({oy},{ox})");
            }
        }
    }
}

#[test]
fn cycle_reports_respect_peak_and_mode_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for cfg in [SimConfig::default(), SimConfig::line_skip()] {
        for _ in 0..30 {
            let l = random_layer(&mut rng);
            for arch in [Arch::DotArray, Arch::Grid2D] {
                for method in [Method::Nzp, Method::Sd] {
                    let run = |m| simulate(&l, arch, method, m, &cfg).unwrap();
                    let dense = run(SparsityMode::Dense);
                    let a = run(SparsityMode::Asparse);
                    assert!(dense.cycles >= a.cycles);
                    for r in [&dense, &a] {
                        assert!(r.cycles * r.peak_macs_per_cycle >= r.effective_macs);
                        let u = r.effective_macs as f64 / (r.cycles * r.peak_macs_per_cycle) as f64;
                        assert_eq!(r.utilization, u);
                    }
                    if arch == Arch::Grid2D {
                        let w = run(SparsityMode::Wsparse);
                        let aw = run(SparsityMode::AWsparse);
                        assert!(dense.cycles >= w.cycles && a.cycles >= aw.cycles && w.cycles >= aw.cycles);
                    }
                    assert_eq!(run(SparsityMode::Dense), dense);
                }
            }
        }
    }
}

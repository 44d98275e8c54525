//! Randomized invariants.

use proptest::prelude::*;
use sdconv::analyzer::{count_deconv_macs, count_macs, count_weight_params, Method, SparsityMode};
use sdconv::reference::{conv2d, deconv2d_oracle, nzp_deconv2d, ConvParams};
use sdconv::split::{sd_deconv2d, SplitPlan};
use sdconv::{FilterBank, LayerSpec, Tensor3};

fn tensor(h: usize, w: usize, c: usize) -> impl Strategy<Value = Tensor3> {
    proptest::collection::vec(-10.0f64..10.0, h * w * c).prop_map(move |v| Tensor3::new(h, w, c, v).unwrap())
}

fn filters(kh: usize, kw: usize, ic: usize, oc: usize) -> impl Strategy<Value = FilterBank> {
    proptest::collection::vec(-10.0f64..10.0, kh * kw * ic * oc)
        .prop_map(move |v| FilterBank::new(kh, kw, ic, oc, v).unwrap())
}

/// (input A, input B, filters, stride, alpha, beta)
fn linear_case() -> impl Strategy<Value = (Tensor3, Tensor3, FilterBank, usize, f64, f64)> {
    (1usize..=4, 1usize..=4, 1usize..=5, 1usize..=5, 1usize..=3, 1usize..=3, 1usize..=4).prop_flat_map(
        |(ih, iw, kh, kw, ic, oc, s)| {
            (tensor(ih, iw, ic), tensor(ih, iw, ic), filters(kh, kw, ic, oc), Just(s), -3.0f64..3.0, -3.0f64..3.0)
        },
    )
}

fn combine(a: &Tensor3, b: &Tensor3, alpha: f64, beta: f64) -> Tensor3 {
    let (h, w, c) = a.dims();
    Tensor3::from_fn(h, w, c, |y, x, ch| alpha * a.at(y, x, ch) + beta * b.at(y, x, ch)).unwrap()
}

fn close(lhs: &Tensor3, rhs: &Tensor3) -> bool {
    lhs.dims() == rhs.dims()
        && lhs.data().iter().zip(rhs.data()).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0))
}

fn small_layer() -> impl Strategy<Value = LayerSpec> {
    (1usize..=5, 1usize..=5, 1usize..=3, 1usize..=5, 1usize..=5, 1usize..=3, 1usize..=3)
        .prop_map(|(ih, iw, ic, kh, kw, oc, s)| LayerSpec::deconv((ih, iw, ic), (kh, kw), oc, s).unwrap())
}

proptest! {
    #[test]
    fn oracle_is_linear((a, b, w, s, alpha, beta) in linear_case()) {
        let lhs = deconv2d_oracle(&combine(&a, &b, alpha, beta), &w, s).unwrap();
        let rhs = combine(&deconv2d_oracle(&a, &w, s).unwrap(), &deconv2d_oracle(&b, &w, s).unwrap(), alpha, beta);
        prop_assert!(close(&lhs, &rhs));
    }

    #[test]
    fn sd_is_linear((a, b, w, s, alpha, beta) in linear_case()) {
        let lhs = sd_deconv2d(&combine(&a, &b, alpha, beta), &w, s).unwrap();
        let rhs = combine(&sd_deconv2d(&a, &w, s).unwrap(), &sd_deconv2d(&b, &w, s).unwrap(), alpha, beta);
        prop_assert!(close(&lhs, &rhs));
    }

    #[test]
    fn sd_and_nzp_track_oracle_on_real_values((a, _b, w, s, _, _) in linear_case()) {
        let oracle = deconv2d_oracle(&a, &w, s).unwrap();
        prop_assert!(close(&sd_deconv2d(&a, &w, s).unwrap(), &oracle));
        prop_assert!(close(&nzp_deconv2d(&a, &w, s).unwrap(), &oracle));
    }

    #[test]
    fn split_conserves_weights(w in (1usize..=6, 1usize..=6, 1usize..=3, 1usize..=3).prop_flat_map(|(a, b, c, d)| filters(a, b, c, d)), s in 1usize..=4) {
        let plan = SplitPlan::new(&w, s).unwrap();
        let nonzero: usize = plan.sub_filters.iter().map(FilterBank::nonzero_count).sum();
        prop_assert_eq!(nonzero, w.nonzero_count());
        let total: f64 = plan.sub_filters.iter().flat_map(|f| f.data().iter()).sum();
        let orig: f64 = w.data().iter().sum();
        prop_assert!((total - orig).abs() <= 1e-9 * orig.abs().max(1.0));
        prop_assert_eq!(plan.sub_filters.len(), s * s);
    }

    #[test]
    fn conv_output_shape(ih in 1usize..=9, iw in 1usize..=9, k in 1usize..=5, stride in 1usize..=3, pad in 0usize..=2) {
        let params = ConvParams::new(stride, pad);
        let x = Tensor3::zeros(ih, iw, 1).unwrap();
        let w = FilterBank::zeros(k, k, 1, 2).unwrap();
        match (params.out_len(ih, k), params.out_len(iw, k)) {
            (Some(oh), Some(ow)) => {
                prop_assert_eq!(oh, (ih + 2 * pad - k) / stride + 1);
                prop_assert_eq!(conv2d(&x, &w, params).unwrap().dims(), (oh, ow, 2));
            }
            _ => prop_assert!(conv2d(&x, &w, params).is_err()),
        }
    }

    #[test]
    fn pairing_identity(layer in small_layer()) {
        let deconv = count_deconv_macs(&layer).unwrap();
        prop_assert_eq!(count_macs(&layer, Method::Nzp, SparsityMode::Asparse).unwrap(), deconv);
        prop_assert_eq!(count_macs(&layer, Method::Sd, SparsityMode::AWsparse).unwrap(), deconv);
    }

    #[test]
    fn sparsity_never_adds_macs(layer in small_layer()) {
        for method in [Method::Nzp, Method::Sd] {
            let c = |m| count_macs(&layer, method, m).unwrap();
            let (d, a, w, aw) = (c(SparsityMode::Dense), c(SparsityMode::Asparse), c(SparsityMode::Wsparse), c(SparsityMode::AWsparse));
            prop_assert!(d >= a && d >= w && a >= aw && w >= aw);
        }
        for method in [Method::Deconv, Method::Nzp, Method::Sd] {
            for compressed in [false, true] {
                let (params, nonzeros) = count_weight_params(&layer, method, compressed).unwrap();
                prop_assert!(nonzeros <= params);
            }
        }
    }
}

use ddsrnet::data::{group_bands, pad_bands, pad_target, ungroup, HyperCube, DatasetSpec, make_splits};
use ddsrnet::tensor::{ops, Shape, Tensor};
use ddsrnet::wavelet::{dwt2_haar, idwt2_haar};
use proptest::prelude::*;

fn tensor(shape: Shape, values: &[f64]) -> Tensor<f64> {
    Tensor::from_fn(shape, |[b, c, y, x]| values[(((b * 7 + c) * 13 + y) * 17 + x) % values.len()])
}

fn even_shape() -> impl Strategy<Value = Shape> {
    (1usize..3, 1usize..4, 1usize..6, 1usize..6).prop_map(|(b, c, h, w)| Shape::new(b, c, 2 * h, 2 * w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn haar_round_trip_and_energy(shape in even_shape(), values in prop::collection::vec(-10.0f64..10.0, 64)) {
        let x = tensor(shape, &values);
        let p = dwt2_haar(&x).unwrap();
        let back = idwt2_haar(&p).unwrap();
        prop_assert!(back.max_abs_diff(&x) < 1e-12);
        let e = x.sum_sq();
        prop_assert!((p.energy() - e).abs() <= 1e-12 * e.max(1.0));
    }

    #[test]
    fn haar_is_linear(shape in even_shape(), a in prop::collection::vec(-1.0f64..1.0, 32), b in prop::collection::vec(-1.0f64..1.0, 32), k in -3.0f64..3.0) {
        let (x, y) = (tensor(shape, &a), tensor(shape, &b));
        let lhs = dwt2_haar(&x.add(&y.scale(k)).unwrap()).unwrap();
        let (px, py) = (dwt2_haar(&x).unwrap(), dwt2_haar(&y).unwrap());
        let rhs = px.ll.add(&py.ll.scale(k)).unwrap();
        prop_assert!(lhs.ll.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn upsample_backward_is_adjoint(shape in (1usize..3, 1usize..5, 1usize..5).prop_map(|(c, h, w)| Shape::new(1, c, h, w)),
                                    s in 1usize..4,
                                    a in prop::collection::vec(-1.0f64..1.0, 40),
                                    b in prop::collection::vec(-1.0f64..1.0, 40)) {
        let x = tensor(shape, &a);
        let up = ops::bilinear_upsample(&x, s).unwrap();
        let g = tensor(up.shape(), &b);
        let lhs: f64 = up.data().iter().zip(g.data()).map(|(p, q)| p * q).sum();
        let back = ops::bilinear_upsample_backward(shape, s, &g).unwrap();
        let rhs: f64 = x.data().iter().zip(back.data()).map(|(p, q)| p * q).sum();
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn conv_is_linear_in_input(c in 1usize..4, h in 1usize..6, w in 1usize..6,
                               a in prop::collection::vec(-1.0f64..1.0, 30),
                               b in prop::collection::vec(-1.0f64..1.0, 30),
                               wv in prop::collection::vec(-1.0f64..1.0, 30)) {
        let shape = Shape::new(1, c, h, w);
        let (x, y) = (tensor(shape, &a), tensor(shape, &b));
        let weight = tensor(Shape::new(2, c, 3, 3), &wv);
        let bias = Tensor::zeros(Shape::new(1, 2, 1, 1));
        let sum = ops::conv2d(&x.add(&y).unwrap(), &weight, &bias).unwrap();
        let parts = ops::conv2d(&x, &weight, &bias).unwrap().add(&ops::conv2d(&y, &weight, &bias).unwrap()).unwrap();
        prop_assert!(sum.max_abs_diff(&parts) < 1e-12);
    }

    #[test]
    fn huber_is_nonnegative_and_symmetric(a in prop::collection::vec(-5.0f64..5.0, 1..20), d in 0.1f64..3.0) {
        let n = a.len();
        let p = Tensor::from_vec(Shape::new(1, 1, 1, n), a.clone()).unwrap();
        let z = Tensor::zeros(Shape::new(1, 1, 1, n));
        let l = ops::huber(&p, &z, d).unwrap();
        prop_assert!(l >= 0.0);
        prop_assert_eq!(l, ops::huber(&z, &p, d).unwrap());
    }

    #[test]
    fn padding_then_grouping_round_trips(bands in 1usize..150, group in 1usize..40) {
        let cube = HyperCube::from_fn("p", bands, 2, 3, |b, y, x| (b * 6 + y * 3 + x) as f32);
        let target = pad_target(bands, group);
        prop_assert!(target >= bands && target - bands < group && target % group == 0);
        let padded = pad_bands(&cube, target, group).unwrap();
        for b in bands..target {
            prop_assert_eq!(padded.band(b), cube.band(bands - 1));
        }
        let groups = group_bands(&padded, group).unwrap();
        prop_assert_eq!(groups.len(), target / group);
        let joined = ungroup(&groups, bands).unwrap();
        prop_assert_eq!(joined.values(), cube.values());
    }

    #[test]
    fn hsr1_round_trip(bands in 1usize..6, h in 1usize..7, w in 1usize..7, v in prop::collection::vec(-1e3f32..1e3, 1..50)) {
        let cube = HyperCube::from_fn("c", bands, h, w, |b, y, x| v[(b * 31 + y * 7 + x) % v.len()]);
        let back = HyperCube::from_bytes("c", &cube.to_bytes()).unwrap();
        prop_assert_eq!(back, cube);
    }

    #[test]
    fn splits_never_leak_test_pixels(rows in 1usize..6, cols in 1usize..6, stride_div in 1usize..4, seed in any::<u64>()) {
        let p = 16;
        let mut spec = DatasetSpec::new(p, 2);
        spec.stride = p / (1 << (stride_div - 1));
        let s = make_splits(rows * p, cols * p, &spec, seed).unwrap();
        prop_assert_eq!(s.test_overlap_pixels(p), 0);
        for o in s.train.iter().chain(&s.val) {
            prop_assert_eq!(o.overlap(&s.test[0], p), 0);
        }
        prop_assert_eq!(s, make_splits(rows * p, cols * p, &spec, seed).unwrap());
    }
}

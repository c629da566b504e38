//! Values frozen from independent high-precision computations: matrix
//! exponentials, root finding on the boundary relation, direct quadrature of
//! the defining integrals and Fourier inversion of the resolvent.

use halfline::{
    e_function, find_boundary_pole, fourier_fundamental, laplace_fundamental, EFunctionArgs,
    ModelParams,
};
use num_complex::Complex64;

fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * b.abs() + abs
}

#[test]
fn fourier_fundamental_matches_matrix_exponential() {
    // (xi, t, c, nu) -> entries (re, im) in row order.
    let cases: [((f64, f64, f64, f64), [(f64, f64); 4]); 3] = [
        (
            (0.7, 1.3, 1.0, 1.0),
            [
                (0.68320507604715048195, 0.0),
                (0.0, -0.58450087937363594661),
                (0.0, -0.58450087937363594661),
                (0.27405446048560534528, 0.0),
            ],
        ),
        (
            (3.0, 0.5, 1.5, 0.8),
            [
                (0.25124954357034601885, 0.0),
                (0.0, -0.1792066514006444412),
                (0.0, -0.4032149656514499927),
                (-0.1788464197912006639, 0.0),
            ],
        ),
        (
            (0.2, 4.0, 1.0, 2.0),
            [
                (0.72630093577323508635, 0.0),
                (0.0, -0.61402079742476882766),
                (0.0, -0.61402079742476882766),
                (0.48069261680332754165, 0.0),
            ],
        ),
    ];
    for ((xi, t, c, nu), want) in cases {
        let p = ModelParams::new(c, nu, -1.0, 1.0).unwrap();
        let f = fourier_fundamental(xi, t, &p).unwrap();
        for (k, (re, im)) in want.iter().enumerate() {
            let v = f.get(k / 2, k % 2);
            assert!(
                close(v.re, *re, 1e-13, 1e-15),
                "xi {xi} t {t} entry {k}: {v}"
            );
            assert!(
                close(v.im, *im, 1e-13, 1e-15),
                "xi {xi} t {t} entry {k}: {v}"
            );
        }
    }
}

#[test]
fn boundary_pole_matches_root_finding() {
    for ((a1, a2, c, nu), s) in [
        ((1.0, 1.0, 1.0, 1.0), 1.618033988749894848205),
        ((1.0, 2.0, 1.0, 1.0), 4.828427124746190097603),
        ((0.5, 1.5, 2.0, 0.7), 9.926614198845910102953),
        ((-1.0, -3.0, 1.0, 0.5), 6.0),
    ] {
        let p = ModelParams::new(c, nu, a1, a2).unwrap();
        let got = find_boundary_pole(&p).unwrap();
        assert!(
            close(got.re, s, 1e-14, 0.0) && got.im == 0.0,
            "{a1} {a2}: {got}"
        );
    }
    for (a1, a2) in [(-1.0, 1.0), (0.0, 1.0), (1.0, 0.0), (2.0, -0.5)] {
        let p = ModelParams::new(1.0, 1.0, a1, a2).unwrap();
        assert!(find_boundary_pole(&p).is_none());
    }
}

#[test]
fn e_function_matches_direct_quadrature() {
    for ((x, t, lambda, d0, gamma), want) in [
        ((0.0, 1.0, 1.0, 2.0, 1.0), 0.760173450533140402806),
        ((3.0, 5.0, 1.0, 2.0, 1.0), 0.8303677144293016545872),
        ((-4.0, 2.0, 0.5, 1.0, 2.0), 0.0008397450057795821811809),
        ((10.0, 0.5, 2.0, 4.0, 0.5), 2.683269466369999646275e-19),
        ((-30.0, 10.0, 1.0, 1.0, 1.0), 2.90089403475038040459e-16),
    ] {
        let e = e_function(&EFunctionArgs::new(x, t, lambda, d0, gamma).unwrap()).unwrap();
        assert!(
            close(e, want, 1e-13, 0.0),
            "E({x}, {t}) = {e:e}, want {want:e}"
        );
    }
}

#[test]
fn laplace_fundamental_matches_fourier_inversion() {
    // Smooth part only; the (1,1) entry also carries delta(x) / (s + c^2/nu).
    for ((x, s, c, nu), want) in [
        (
            (1.5, 0.8, 1.0, 1.0),
            [
                0.084647951620908478527,
                0.11356714438827892132,
                0.11356714438827892132,
                0.15236631291763526511,
            ],
        ),
        (
            (-2.0, 2.0, 1.0, 1.0),
            [
                0.0095571406645687655835,
                -0.016553453206115687051,
                -0.016553453206115687051,
                0.02867142199370629675,
            ],
        ),
        (
            (0.7, 0.3, 1.5, 0.5),
            [
                0.26421965705328500294,
                0.18192325893475695432,
                0.40932733260320314722,
                0.28183430085683733581,
            ],
        ),
    ] {
        let p = ModelParams::new(c, nu, -1.0, 1.0).unwrap();
        let g = laplace_fundamental(x, Complex64::new(s, 0.0), &p).unwrap();
        assert_eq!(g.delta_weight, Complex64::new(0.0, 0.0));
        let at0 = laplace_fundamental(0.0, Complex64::new(s, 0.0), &p).unwrap();
        assert!(close(
            at0.delta_weight.re,
            1.0 / (s + c * c / nu),
            1e-14,
            0.0
        ));
        for (k, w) in want.iter().enumerate() {
            let v = g.value.get(k / 2, k % 2);
            assert!(
                close(v.re, *w, 1e-12, 1e-16) && v.im.abs() < 1e-15,
                "x {x} s {s} entry {k}: {v}"
            );
        }
    }
}

use proptest::prelude::*;
use xcu_core::functionals::*;
use xcu_core::grid::PointFeatures;

const REFERENCE: &str = include_str!("oracle/reference_values.txt");

/// `name(args) = value` lines of the frozen oracle file.
fn reference(call: &str) -> f64 {
    REFERENCE
        .lines()
        .find_map(|l| {
            let (lhs, rhs) = l.split_once(" = ")?;
            (lhs.trim() == call).then(|| rhs.trim().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no oracle value for {call}"))
}

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1e-300)
}

#[test]
fn slater_matches_oracle() {
    let want = reference("slater(0.5,0.5)");
    let got = slater_exchange_density(0.5, 0.5).unwrap();
    assert!(close(got, want, 1e-13), "{got} vs {want}");
    assert!((got + 0.738559).abs() < 1e-6);
}

#[test]
fn vwn_matches_oracle() {
    for (ru, rd) in [(0.5, 0.5), (0.3, 0.1), (0.7, 0.0), (0.001, 0.002), (12.0, 9.0)] {
        for (variant, name) in [(VwnVariant::Vwn5, "vwn5"), (VwnVariant::VwnRpa, "vwn_rpa")] {
            let want = reference(&format!("{name}({ru:?},{rd:?})"));
            let got = vwn_correlation_density(ru, rd, variant).unwrap();
            assert!(close(got, want, 1e-12), "{name}({ru},{rd}): {got} vs {want}");
        }
    }
}

#[test]
fn b88_matches_oracle() {
    for (r, g) in [(0.3, 0.05), (0.01, 0.0001), (2.0, 3.5)] {
        let want = reference(&format!("b88({r:?},{g:?})"));
        let got = b88_exchange_density(r, g).unwrap();
        assert!(close(got, want, 1e-12), "b88({r},{g}): {got} vs {want}");
    }
}

#[test]
fn lyp_matches_oracle() {
    let cases = [
        [0.5, 0.5, 0.1, 0.1, 0.4],
        [0.3, 0.2, 0.05, 0.02, 0.12],
        [0.02, 0.01, 0.001, 0.0004, 0.0025],
        [1.7, 0.9, 2.0, 0.8, 5.1],
    ];
    for c in cases {
        let call = format!("lyp({:?}, {:?}, {:?}, {:?}, {:?})", c[0], c[1], c[2], c[3], c[4]);
        let want = reference(&call);
        let got = lyp_correlation_density(c[0], c[1], c[2], c[3], c[4]).unwrap();
        assert!(close(got, want, 1e-11), "{call}: {got} vs {want}");
    }
}

fn features() -> impl Strategy<Value = PointFeatures> {
    (
        (0.0..3.0f64, 0.0..3.0f64, 0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64),
        (0.0..2.0f64, 0.0..2.0f64),
        (-2.0..0.0f64, -2.0..0.0f64, -2.0..0.0f64, -2.0..0.0f64),
    )
        .prop_map(|((ru, rd, gu, gd, extra), (tu, td), (h1u, h1d, h2u, h2d))| PointFeatures {
            rho_up: ru,
            rho_down: rd,
            grad_sq_up: gu,
            grad_sq_down: gd,
            // |grad rho|^2 <= 2 (|grad rho_up|^2 + |grad rho_down|^2)
            grad_sq_total: (gu + gd) * extra,
            tau_up: tu,
            tau_down: td,
            e_hf_w1_up: h1u,
            e_hf_w1_down: h1d,
            e_hf_w2_up: h2u,
            e_hf_w2_down: h2d,
        })
}

proptest! {
    #[test]
    fn slater_and_vwn_are_spin_symmetric(a in 0.0..5.0f64, b in 0.0..5.0f64) {
        prop_assert_eq!(slater_exchange_density(a, b).unwrap(), slater_exchange_density(b, a).unwrap());
        for v in [VwnVariant::Vwn5, VwnVariant::VwnRpa] {
            let (x, y) = (vwn_correlation_density(a, b, v).unwrap(), vwn_correlation_density(b, a, v).unwrap());
            prop_assert!(close(x, y, 1e-13), "{} vs {}", x, y);
        }
    }

    #[test]
    fn slater_scales_as_four_thirds(a in 1e-3..5.0f64, b in 0.0..5.0f64, lambda in 0.05..20.0f64) {
        let scaled = slater_exchange_density(lambda * a, lambda * b).unwrap();
        let want = lambda.powf(4.0 / 3.0) * slater_exchange_density(a, b).unwrap();
        prop_assert!(close(scaled, want, 1e-12));
    }

    #[test]
    fn hybrids_are_symmetric_under_spin_swap(f in features(), a1 in -1.0..2.0f64, a2 in -1.0..2.0f64, a3 in -1.0..2.0f64) {
        let c = B3lypCoefficients::default();
        let swapped = f.spin_swapped();
        let x = b3lyp_density(&f, &c, VwnVariant::Vwn5).unwrap();
        let y = b3lyp_density(&swapped, &c, VwnVariant::Vwn5).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        let x = dm21_form_density(&f, [a1, a2, a3], VwnVariant::Vwn5).unwrap();
        let y = dm21_form_density(&swapped, [a1, a2, a3], VwnVariant::Vwn5).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn b3lyp_is_affine_in_coefficients(f in features(), p in prop::array::uniform3(-1.0..1.0f64), q in prop::array::uniform3(-1.0..1.0f64), t in -2.0..3.0f64) {
        let at = |k: [f64; 3]| b3lyp_density(&f, &B3lypCoefficients { a: k[0], b: k[1], c: k[2] }, VwnVariant::Vwn5).unwrap();
        let mix = [0, 1, 2].map(|i| p[i] + t * (q[i] - p[i]));
        let (fp, fq, fm) = (at(p), at(q), at(mix));
        let scale = fp.abs().max(fq.abs()).max(1.0) * (1.0 + t.abs());
        prop_assert!((fm - (fp + t * (fq - fp))).abs() <= 1e-12 * scale);
    }

    #[test]
    fn dm21_form_is_the_hand_combination(f in features()) {
        let got = dm21_form_density(&f, [0.7, 0.2, 0.1], VwnVariant::Vwn5).unwrap();
        let lda = slater_exchange_density(f.rho_up, f.rho_down).unwrap()
            + vwn_correlation_density(f.rho_up, f.rho_down, VwnVariant::Vwn5).unwrap();
        let want = 0.7 * lda + 0.2 * (f.e_hf_w2_up + f.e_hf_w2_down) + 0.1 * (f.e_hf_w1_up + f.e_hf_w1_down);
        prop_assert!((got - want).abs() <= 1e-14 * want.abs().max(1.0));
    }

    #[test]
    fn components_vanish_at_zero_density(g in 0.0..3.0f64) {
        let mut f = PointFeatures::from_array([0.0; 11]);
        f.grad_sq_up = g;
        f.grad_sq_total = g;
        let k = XcComponents::evaluate(&f, VwnVariant::Vwn5).unwrap();
        prop_assert_eq!((k.x_lda, k.c_lda, k.x_hf, k.x_gga, k.c_gga), (0.0, 0.0, 0.0, 0.0, 0.0));
    }
}

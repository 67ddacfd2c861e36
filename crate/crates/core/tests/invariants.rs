use pdolab::estimator::{op_norm_estimate, NormMethod, NormOptions};
use pdolab::lp::{bracket, sobolev_norm};
use pdolab::paradiff::{decompose, reduce_order, DEFAULT_M0};
use pdolab::quantizer::read_binary;
use pdolab::suites::elementary_partition;
use pdolab::sweep::{fit_points, parse_eps_grid, SweepMeta};
use pdolab::symbol::{mollify_symbol, SymbolJson};
use pdolab::{
    apply, dsl::symbol_from_text, fit_rate, lp_norm, make_grid, make_partition, quantize, random_band_limited, regularize, transpose, CutoffProfile,
    GridFunction, Mollifier, SampledSymbol, SweepReport, C64,
};
use proptest::prelude::*;

fn grid_size() -> impl Strategy<Value = usize> {
    (4u32..=10).prop_map(|k| 1usize << k)
}

fn dot(a: &GridFunction, b: &GridFunction) -> C64 {
    a.samples().iter().zip(b.samples()).map(|(u, v)| u * v).sum()
}

const SYMBOLS: [(&str, f64); 4] = [("weier(0.5, x)*jb(xi)^0.5", 0.5), ("cos(x)*xi + sin(2*x)", 1.0), ("exp(sin(x))*chi(xi/8)", 0.0), ("(2 + cos(3*x))*jb(xi)^-1", -1.0)];

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn partition_sums_to_one(n in grid_size(), erf in any::<bool>()) {
        let g = make_grid(n).unwrap();
        let part = make_partition(&g, if erf { CutoffProfile::SmoothedErf } else { CutoffProfile::PolynomialSpline });
        for i in 0..n {
            let total: f64 = (0..=part.levels()).map(|j| part.block(j)[i]).sum();
            prop_assert!((total - 1.0).abs() < 1e-14);
            let k = g.frequency(i).unsigned_abs() as f64;
            for j in 1..=part.levels() {
                let v = part.block(j)[i];
                prop_assert!(v >= 0.0);
                if v != 0.0 {
                    prop_assert!(k >= (j as f64 - 1.0).exp2() && k <= (j as f64 + 1.0).exp2());
                }
            }
        }
    }

    #[test]
    fn grid_function_json_round_trips_bitwise(n in grid_size(), seed in any::<u64>()) {
        let g = make_grid(n).unwrap();
        let f = random_band_limited(&g, (n / 2 - 1) as i64, seed).unwrap();
        let text = serde_json::to_string(&f.to_json()).unwrap();
        let back = GridFunction::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        for (u, v) in f.samples().iter().zip(back.samples()) {
            prop_assert_eq!(u.re.to_bits(), v.re.to_bits());
            prop_assert_eq!(u.im.to_bits(), v.im.to_bits());
        }
    }

    #[test]
    fn symbol_json_round_trips(log_n in 4u32..=6, which in 0usize..4) {
        let g = make_grid(1 << log_n).unwrap();
        let (text, m) = SYMBOLS[which];
        let a = symbol_from_text(text, &g, m).unwrap();
        let json: SymbolJson = serde_json::from_str(&serde_json::to_string(&a.to_json()).unwrap()).unwrap();
        let b = SampledSymbol::from_json(&json).unwrap();
        prop_assert_eq!(a.max_abs_diff(&b), 0.0);
        prop_assert_eq!(b.order(), m);
    }

    #[test]
    fn dyadic_eps_ranges(a in 0u32..12, len in 1u32..12) {
        let text = format!("2^-{a}..2^-{}", a + len);
        let eps = parse_eps_grid(&text).unwrap();
        prop_assert_eq!(eps.len() as u32, len + 1);
        for (i, e) in eps.iter().enumerate() {
            prop_assert_eq!(*e, (-((a + i as u32) as f64)).exp2());
        }
        let listed = eps.iter().map(|e| format!("{e}")).collect::<Vec<_>>().join(",");
        prop_assert_eq!(parse_eps_grid(&listed).unwrap(), eps);
    }

    #[test]
    fn power_laws_are_recovered(c in 0.1f64..10.0, h in -2.0f64..3.0, len in 3usize..10) {
        let eps: Vec<f64> = (0..len).map(|i| (-(3.0 + i as f64)).exp2()).collect();
        let values: Vec<f64> = eps.iter().map(|e| c * e.powf(-h)).collect();
        let fit = fit_points(&eps, &values).unwrap();
        prop_assert!((fit.slope().unwrap() - h).abs() < 1e-9);
        let rep = SweepReport::new(eps, values, SweepMeta::labelled("power")).unwrap();
        prop_assert!((fit_rate(&rep, 3).unwrap().slope().unwrap() - h).abs() < 1e-9);
    }

    #[test]
    fn quantization_is_linear_and_transposes(log_n in 4u32..=7, which in 0usize..4, seed in any::<u64>()) {
        let g = make_grid(1 << log_n).unwrap();
        let (text, m) = SYMBOLS[which];
        let a = symbol_from_text(text, &g, m).unwrap();
        let op = quantize(&a);
        let f = random_band_limited(&g, g.max_frequency() - 1, seed).unwrap();
        let h = random_band_limited(&g, 5, seed ^ 1).unwrap();
        let lam = C64::new(0.3, -1.2);
        let lhs = apply(&op, &f.scale(lam).add(&h).unwrap()).unwrap();
        let rhs = apply(&op, &f).unwrap().scale(lam).add(&apply(&op, &h).unwrap()).unwrap();
        let scale = 1.0 + pdolab::sup_norm(&rhs);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12 * scale);
        // ⟨Tf, h⟩ = ⟨f, ᵗT h⟩ for the bilinear pairing.
        let left = dot(&apply(&op, &f).unwrap(), &h);
        let right = dot(&f, &apply(&transpose(&op), &h).unwrap());
        prop_assert!((left - right).norm() < 1e-10 * (1.0 + left.norm()));
    }

    #[test]
    fn x_independent_symbols_are_fourier_multipliers(log_n in 4u32..=9, t in -2.0f64..2.0, seed in any::<u64>()) {
        let g = make_grid(1 << log_n).unwrap();
        let a = symbol_from_text(&format!("jb(xi)^{t}"), &g, t.max(0.0)).unwrap();
        let f = random_band_limited(&g, g.max_frequency(), seed).unwrap();
        let out = apply(&quantize(&a), &f).unwrap();
        let want = f.map_spectrum(|k| C64::new(bracket(k as f64).powf(t), 0.0));
        prop_assert!(out.max_abs_diff(&want) < 1e-12 * (1.0 + pdolab::sup_norm(&want)));
        // ‖⟨D⟩^t f‖_{H^s} = ‖f‖_{H^{s+t}}.
        let lhs = sobolev_norm(&out, 0.5, 2.0).unwrap();
        let rhs = sobolev_norm(&f, 0.5 + t, 2.0).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }

    #[test]
    fn probe_estimates_never_exceed_exact(log_n in 4u32..=6, which in 0usize..4, s in -1.0f64..2.0, seed in any::<u64>()) {
        let g = make_grid(1 << log_n).unwrap();
        let (text, m) = SYMBOLS[which];
        let op = quantize(&symbol_from_text(text, &g, m).unwrap());
        let opts = NormOptions { seed, ..NormOptions::default() };
        let exact = op_norm_estimate(&op, s + m, s, 2.0, NormMethod::Exact2, &opts).unwrap().value;
        let probe = op_norm_estimate(&op, s + m, s, 2.0, NormMethod::Probe, &opts).unwrap().value;
        let boyd = op_norm_estimate(&op, s + m, s, 2.0, NormMethod::Boyd, &opts).unwrap().value;
        prop_assert!(probe <= exact * (1.0 + 1e-9));
        prop_assert!(boyd <= exact * (1.0 + 1e-9));
    }

    #[test]
    fn mollification_preserves_mean_and_contracts(log_n in 4u32..=10, seed in any::<u64>(), k in 1u32..8) {
        let g = make_grid(1 << log_n).unwrap();
        let f = random_band_limited(&g, g.max_frequency(), seed).unwrap();
        let e = (-(k as f64)).exp2();
        let u = regularize(&f, &Mollifier::gaussian(), e).unwrap();
        prop_assert!((u.coefficient(0) - f.coefficient(0)).norm() < 1e-15);
        // ρ̂ ≤ 1 for the Gaussian, so L² norms cannot grow.
        prop_assert!(lp_norm(&u, 2.0).unwrap() <= lp_norm(&f, 2.0).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn order_reduction_then_decomposition(log_n in 5u32..=7, which in 0usize..4, v in 1usize..6) {
        let g = make_grid(1 << log_n).unwrap();
        let (text, m) = SYMBOLS[which];
        let a = reduce_order(&symbol_from_text(text, &g, m).unwrap(), m).unwrap();
        prop_assert!(a.fitted_order() <= 0.1);
        let dec = decompose(&a, 0.5, v, DEFAULT_M0, &elementary_partition(&g)).unwrap();
        prop_assert!(dec.residual.is_finite());
        prop_assert_eq!(dec.c_nu.len(), 2 * v + 1);
        for (i, c) in dec.c_nu.iter().enumerate() {
            let nu = i as f64 - v as f64;
            prop_assert!((c - (1.0 + nu * nu).powf(-2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn operator_binary_round_trip(log_n in 4u32..=6, which in 0usize..4) {
        let g = make_grid(1 << log_n).unwrap();
        let (text, m) = SYMBOLS[which];
        let op = quantize(&symbol_from_text(text, &g, m).unwrap());
        let mut bytes = Vec::new();
        op.export_binary(&mut bytes).unwrap();
        prop_assert_eq!(&bytes[..8], b"PDOLABOP");
        let (n, matrix) = read_binary(&mut bytes.as_slice()).unwrap();
        prop_assert_eq!(n, g.size());
        let reference = op.sample_matrix();
        prop_assert_eq!(matrix.len(), reference.len());
        for (u, v) in matrix.iter().zip(&reference) {
            prop_assert_eq!(u, v);
        }
    }
}

#[test]
fn mollified_symbols_keep_the_grid_and_order() {
    let g = make_grid(64).unwrap();
    let a = symbol_from_text("weier(0.5, x)*jb(xi)", &g, 1.0).unwrap();
    let b = mollify_symbol(&a, &Mollifier::moment_vanishing(), 0.1).unwrap();
    assert_eq!(b.grid().size(), 64);
    assert_eq!(b.order(), 1.0);
    assert!(b.max_abs_diff(&a) > 0.0);
}

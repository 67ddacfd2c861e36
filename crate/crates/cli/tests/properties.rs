use std::path::PathBuf;

use pdolab_cli::args::*;
use pdolab_cli::{execute_config, Manifest, RunConfig};
use proptest::prelude::*;
use tempfile::TempDir;

/// `(expression, order, regularity)`.
const SYMBOLS: [(&str, f64, f64); 4] = [
    ("weier(0.5, x)", 0.0, 0.5),
    ("cos(x) * chi(xi/8) + 0.5", 0.0, 1.0),
    ("weier(0.7, x) * jb(xi)^0.5", 0.5, 0.7),
    ("sin(2*x) * xi * jb(xi)^-2", -1.0, 1.0),
];

fn source(i: usize) -> SymbolSource {
    SymbolSource { symbol: Some(SYMBOLS[i].0.to_string()), symbol_file: None }
}

fn eps_text(a: u32, len: u32) -> String {
    format!("2^-{a}..2^-{}", a + len)
}

fn input_file(dir: &TempDir, n: usize, seed: u64) -> PathBuf {
    let grid = pdolab::make_grid(n).unwrap();
    let f = pdolab::random_band_limited(&grid, (n / 4) as i64, seed).unwrap();
    let path = dir.path().join("f.json");
    std::fs::write(&path, serde_json::to_string(&f.to_json()).unwrap()).unwrap();
    path
}

fn command() -> impl Strategy<Value = (usize, u64, u32, u32, usize, usize, f64, f64)> {
    (6u32..=10, any::<u64>(), 2u32..=4, 2u32..=4, 0usize..4, 0usize..8, 0.1f64..1.5, 1.2f64..4.0)
        .prop_map(|(log_n, seed, a, len, sym, kind, s, p)| (1usize << log_n, seed, a, len, sym, kind, s, p))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn valid_configs_run_to_completion((n, seed, a, len, sym, kind, s, p) in command()) {
        let dir = TempDir::new().unwrap();
        let (text, m, r) = SYMBOLS[sym];
        let eps = eps_text(a, len);
        let command = match kind {
            0 => Command::Norm(NormArgs {
                input: input_file(&dir, n, seed),
                kind: [NormKind::Sup, NormKind::Lp, NormKind::Besov, NormKind::Zygmund, NormKind::Sobolev, NormKind::Sqfn][(seed % 6) as usize],
                s,
                p,
                samples_per_octave: 4,
                profile: if seed % 2 == 0 { ProfileArg::Spline } else { ProfileArg::Erf },
            }),
            1 => Command::Regularize(RegularizeArgs {
                input: input_file(&dir, n, seed),
                mollifier: if seed % 2 == 0 { MollifierArg::Gaussian } else { MollifierArg::Momvan },
                eps: (-(a as f64)).exp2(),
            }),
            2 => Command::Quantize(QuantizeArgs { source: source(sym), input: input_file(&dir, n, seed), m, export_op: None }),
            3 => Command::Decompose(DecomposeArgs { source: source(sym), r, nu_max: 1 + (seed % 6) as usize, m0: 4, m, n, profile: ProfileArg::Erf }),
            4 => Command::Sweep(SweepArgs {
                source: source(sym),
                r: Some(r),
                s,
                p: 2.0,
                m,
                mollifier: MollifierArg::Gaussian,
                eps,
                method: Some(MethodArg::Exact2),
                n,
            }),
            5 => Command::Sweep(SweepArgs {
                source: source(sym),
                r: None,
                s: -s,
                p,
                m,
                mollifier: MollifierArg::Momvan,
                eps,
                method: Some(MethodArg::Probe),
                n,
            }),
            6 => Command::SweepZygmund(SweepZygmundArgs {
                probe: ["weierstrass:0.5", "lacunary_flat", "cos(3*x)"][(seed % 3) as usize].to_string(),
                s,
                r: s + 0.5,
                n,
                eps,
                mollifier: MollifierArg::Gaussian,
                profile: ProfileArg::Spline,
            }),
            _ => Command::ThreePart(ThreePartArgs {
                source: source(sym),
                r,
                h: 1.0,
                s,
                p: 2.0,
                m,
                nu_max: 2,
                m0: 4,
                n: n.min(256),
                eps,
                mollifier: MollifierArg::Gaussian,
                profile: ProfileArg::Erf,
            }),
        };
        let config = RunConfig { command, seed };
        let out = execute_config(&config, "prop", dir.path(), Some(1));
        let out = match out {
            Ok(o) => o,
            Err(e) => return Err(TestCaseError::fail(format!("{text}: {e}"))),
        };
        prop_assert!(out.pass);
        let manifest = Manifest::read(&out.manifest).unwrap();
        prop_assert_eq!(&manifest.config, &config);
        prop_assert!(!out.result.contains("NaN"));
        for f in &out.files {
            prop_assert!(f.exists());
        }
    }
}

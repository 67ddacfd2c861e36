//! Subcommand implementations.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use pdolab::estimator::{blowup_sweep, NormMethod, NormOptions};
use pdolab::lp::{sobolev_norm, square_function_norm, zygmund_continuous_norm};
use pdolab::mollifier::zygmund_blowup_sweep;
use pdolab::paradiff::{decompose, reduce_order, three_part_sweep_decomposition};
use pdolab::suites::{run_suite, Suite, SuiteConfig};
use pdolab::symbol::SymbolJson;
use pdolab::sweep::{fit_rate, DEFAULT_TAIL, MIN_FIT_POINTS};
use pdolab::{
    apply, besov_norm, builtin, lp_norm, make_grid, make_mollifier, make_partition, parse_eps_grid, quantize, regularize, sup_norm, Builtin,
    GridFunction, PeriodicGrid, Rate, SampledSymbol, SweepReport,
};
use serde_json::json;

use crate::args::*;
use crate::report::report;
use crate::{fmt_f64, read_file, CliError, CliResult, Product, RunConfig};

/// Largest `--nu-max` accepted, as a multiple of `N`.
const NU_MAX_PER_POINT: usize = 2;

pub(crate) fn dispatch(config: &RunConfig) -> CliResult<Product> {
    let opts = NormOptions { seed: config.seed, ..NormOptions::default() };
    match &config.command {
        Command::Norm(a) => norm(a),
        Command::Regularize(a) => regularize_cmd(a),
        Command::Quantize(a) => quantize_cmd(a),
        Command::Decompose(a) => decompose_cmd(a),
        Command::ThreePart(a) => three_part(a, &opts),
        Command::Sweep(a) => sweep(a, &opts),
        Command::SweepZygmund(a) => sweep_zygmund(a),
        Command::Check(a) => check(a, config.seed),
        Command::Report(a) => report(&a.manifests),
        Command::Replay(_) => Err(CliError::Invalid("a manifest cannot hold a replay".into())),
    }
}

fn load_function(path: &Path) -> CliResult<GridFunction> {
    let text = read_file(path)?;
    let json = serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })?;
    Ok(GridFunction::from_json(&json)?)
}

fn grid_of(n: usize) -> CliResult<PeriodicGrid> {
    Ok(make_grid(n)?)
}

/// A builtin name, else DSL text.
fn symbol_from_str(text: &str, grid: &PeriodicGrid, m: f64) -> CliResult<SampledSymbol> {
    match text.parse::<Builtin>() {
        Ok(b) => Ok(builtin(&b, grid)?),
        Err(pdolab::Error::UnknownName(_)) => Ok(pdolab::dsl::symbol_from_text(text, grid, m)?),
        Err(e) => Err(e.into()),
    }
}

fn load_symbol(src: &SymbolSource, grid: &PeriodicGrid, m: f64) -> CliResult<SampledSymbol> {
    match (&src.symbol, &src.symbol_file) {
        (Some(text), None) => symbol_from_str(text, grid, m),
        (None, Some(path)) => {
            let text = read_file(path)?;
            match serde_json::from_str::<SymbolJson>(&text) {
                Ok(json) => {
                    let a = SampledSymbol::from_json(&json)?;
                    grid.check_same(a.grid())?;
                    Ok(a)
                }
                Err(_) => symbol_from_str(text.trim(), grid, m),
            }
        }
        _ => Err(CliError::Invalid("exactly one of --symbol and --symbol-file is required".into())),
    }
}

fn eps_grid(text: &str) -> CliResult<Vec<f64>> {
    let eps = parse_eps_grid(text)?;
    if eps.len() < MIN_FIT_POINTS {
        return Err(CliError::Invalid(format!("eps grid `{text}` has {} points; a rate needs at least {MIN_FIT_POINTS}", eps.len())));
    }
    Ok(eps)
}

fn validate_finite(what: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("{what} must be finite, got {v}")))
    }
}

fn fit(rep: &SweepReport) -> CliResult<Rate> {
    Ok(fit_rate(rep, DEFAULT_TAIL.min(rep.eps.len()))?)
}

fn sweep_csv(header: &str, rep: &SweepReport) -> String {
    let mut out = format!("{header}\n");
    for (e, v) in rep.eps.iter().zip(&rep.values) {
        out.push_str(&format!("{},{}\n", fmt_f64(*e), fmt_f64(*v)));
    }
    out
}

fn norm(a: &NormArgs) -> CliResult<Product> {
    validate_finite("s", a.s)?;
    let f = load_function(&a.input)?;
    let part = make_partition(f.grid(), a.profile.into());
    let value = match a.kind {
        NormKind::Sup => sup_norm(&f),
        NormKind::Lp => lp_norm(&f, a.p)?,
        NormKind::Besov => besov_norm(&f, a.s, &part)?,
        NormKind::Zygmund => zygmund_continuous_norm(&f, a.s, a.samples_per_octave, &part)?,
        NormKind::Sobolev => sobolev_norm(&f, a.s, a.p)?,
        NormKind::Sqfn => square_function_norm(&f, a.s, a.p, &part)?,
    };
    Ok(Product::json(json!({ "value": value })))
}

fn regularize_cmd(a: &RegularizeArgs) -> CliResult<Product> {
    let f = load_function(&a.input)?;
    let mol = make_mollifier(a.mollifier.into())?;
    let g = regularize(&f, &mol, a.eps)?;
    Ok(Product::json(serde_json::to_value(g.to_json()).expect("grid function serialises")))
}

fn quantize_cmd(a: &QuantizeArgs) -> CliResult<Product> {
    validate_finite("m", a.m)?;
    let f = load_function(&a.input)?;
    let sym = load_symbol(&a.source, f.grid(), a.m)?;
    let op = quantize(&sym);
    let g = apply(&op, &f)?;
    let mut product = Product::json(serde_json::to_value(g.to_json()).expect("grid function serialises"));
    if let Some(path) = &a.export_op {
        let file = File::create(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        op.export_binary(&mut BufWriter::new(file))?;
        product.extra_files.push(path.clone());
    }
    Ok(product)
}

fn order_zero(src: &SymbolSource, grid: &PeriodicGrid, m: f64) -> CliResult<SampledSymbol> {
    validate_finite("m", m)?;
    let a = load_symbol(src, grid, m)?;
    Ok(if m != 0.0 { reduce_order(&a, m)? } else { a })
}

fn validate_nu_max(v: usize, n: usize) -> CliResult<()> {
    if v > NU_MAX_PER_POINT * n {
        return Err(CliError::Invalid(format!("--nu-max must be at most {} for N = {n}, got {v}", NU_MAX_PER_POINT * n)));
    }
    Ok(())
}

fn decompose_cmd(a: &DecomposeArgs) -> CliResult<Product> {
    let grid = grid_of(a.n)?;
    validate_nu_max(a.nu_max, a.n)?;
    let sym = order_zero(&a.source, &grid, a.m)?;
    let part = make_partition(&grid, a.profile.into());
    let dec = decompose(&sym, a.r, a.nu_max, a.m0, &part)?;
    Ok(Product::json(json!({
        "n": a.n,
        "r": a.r,
        "nu_max": dec.v,
        "m0": dec.m0,
        "residual": dec.residual,
        "c_nu": dec.c_nu,
        "sup_akv": dec.sup_akv,
    })))
}

fn three_part(a: &ThreePartArgs, opts: &NormOptions) -> CliResult<Product> {
    let grid = grid_of(a.n)?;
    let eps = eps_grid(&a.eps)?;
    validate_nu_max(a.nu_max, a.n)?;
    validate_finite("h", a.h)?;
    let sym = order_zero(&a.source, &grid, a.m)?;
    let part = make_partition(&grid, a.profile.into());
    let mol = make_mollifier(a.mollifier.into())?;
    let dec = decompose(&sym, a.r, a.nu_max, a.m0, &part)?;
    let rep = three_part_sweep_decomposition(&dec, &mol, a.s, a.p, a.h, &eps, &part, opts)?;
    let names = ["low", "diagonal", "high"];
    let mut csv = String::from("eps,part,norm\n");
    for (name, r) in names.iter().zip(&rep.reports) {
        for (e, v) in r.eps.iter().zip(&r.values) {
            csv.push_str(&format!("{},{name},{}\n", fmt_f64(*e), fmt_f64(*v)));
        }
    }
    let slopes: Vec<Option<f64>> = rep.rates.iter().map(|r| r.slope_or_zero()).collect();
    let result = json!({
        "schema": 1,
        "command": "three-part",
        "residual": dec.residual,
        "slopes": { "low": slopes[0], "diagonal": slopes[1], "high": slopes[2] },
        "rates": rep.rates,
        "sweeps": rep.reports,
    });
    Ok(Product { result, csv: Some(csv), extra_files: Vec::new(), pass: true })
}

fn sweep(a: &SweepArgs, opts: &NormOptions) -> CliResult<Product> {
    let grid = grid_of(a.n)?;
    let eps = eps_grid(&a.eps)?;
    validate_finite("s", a.s)?;
    validate_finite("m", a.m)?;
    let mut sym = load_symbol(&a.source, &grid, a.m)?;
    if let Some(r) = a.r {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CliError::Invalid(format!("r must be positive, got {r}")));
        }
        sym = sym.with_regularity(r);
    }
    let mol = make_mollifier(a.mollifier.into())?;
    let method = a.method.map(NormMethod::from).unwrap_or_else(|| NormMethod::for_exponent(a.p));
    let rep = blowup_sweep(&sym, &mol, a.s, a.p, a.m, &eps, method, opts)?;
    let rate = fit(&rep)?;
    let csv = sweep_csv("eps,value", &rep);
    let result = json!({ "schema": 1, "command": "sweep", "rate": rate, "sweeps": [rep] });
    Ok(Product { result, csv: Some(csv), extra_files: Vec::new(), pass: true })
}

fn sweep_zygmund(a: &SweepZygmundArgs) -> CliResult<Product> {
    let grid = grid_of(a.n)?;
    let eps = eps_grid(&a.eps)?;
    validate_finite("s", a.s)?;
    let sym = symbol_from_str(&a.probe, &grid, 0.0)?;
    let f = sym.column_function(0);
    let n = grid.size();
    let varies = (1..n).any(|i| sym.column_at(i).iter().zip(f.samples()).any(|(u, v)| (u - v).norm() > 1e-12 * (1.0 + v.norm())));
    if varies {
        return Err(CliError::Invalid(format!("probe `{}` depends on xi", a.probe)));
    }
    let part = make_partition(&grid, a.profile.into());
    let mol = make_mollifier(a.mollifier.into())?;
    let rep = zygmund_blowup_sweep(&f, &mol, a.s, a.r, &eps, &part)?;
    let rate = fit(&rep)?;
    let csv = sweep_csv("eps,norm", &rep);
    let result = json!({ "schema": 1, "command": "sweep-zygmund", "rate": rate, "sweeps": [rep] });
    Ok(Product { result, csv: Some(csv), extra_files: Vec::new(), pass: true })
}

fn check(a: &CheckArgs, seed: u64) -> CliResult<Product> {
    let cfg = SuiteConfig::new(a.n, seed)?;
    let suite: Suite = a.suite.into();
    let verdicts = run_suite(suite, &cfg)?;
    let pass = verdicts.iter().all(|v| v.pass);
    let result = json!({
        "schema": 1,
        "command": "check",
        "suite": suite,
        "n": a.n,
        "seed": seed,
        "pass": pass,
        "verdicts": verdicts,
    });
    Ok(Product { result, csv: None, extra_files: Vec::new(), pass })
}

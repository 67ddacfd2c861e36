//! ε-grids, sweep reports and log-log rate fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parses `2^-A..2^-B` (dyadic, step factor 1/2) or a comma list whose entries
/// are decimal numbers or `2^-A` powers.
pub fn parse_eps_grid(text: &str) -> Result<Vec<f64>> {
    let mut p = EpsParser { text, pos: 0 };
    p.skip_ws();
    let first_at = p.pos;
    let first = p.term()?;
    p.skip_ws();
    let eps = if p.rest().starts_with("..") {
        p.pos += 2;
        p.skip_ws();
        let second_at = p.pos;
        let second = p.term()?;
        p.skip_ws();
        p.end()?;
        let (Term::Pow(a), Term::Pow(b)) = (first, second) else {
            let at = if matches!(first, Term::Pow(_)) { second_at } else { first_at };
            return Err(Error::EpsSyntax { offset: at, expected: "a power of two `2^-A`".into() });
        };
        if b <= a {
            return Err(Error::EpsSyntax { offset: second_at, expected: format!("an exponent below -{a}") });
        }
        (a..=b).map(|e| (-(e as f64)).exp2()).collect()
    } else {
        let mut values = vec![first.value()];
        while p.rest().starts_with(',') {
            p.pos += 1;
            p.skip_ws();
            values.push(p.term()?.value());
            p.skip_ws();
        }
        p.end()?;
        values
    };
    validate_eps_grid(&eps)?;
    Ok(eps)
}

/// Strictly decreasing values in `(0, 1]`.
pub fn validate_eps_grid(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::Invalid("empty eps grid".into()));
    }
    for &e in eps {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::OutOfRange { what: "eps", value: e });
        }
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("eps grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// `2^{-a}, …, 2^{-b}`.
pub fn dyadic_eps(a: u32, b: u32) -> Vec<f64> {
    (a..=b).map(|e| (-(e as f64)).exp2()).collect()
}

/// Default sweep grid `2^{-3}, …, 2^{-10}`.
pub fn default_eps_grid() -> Vec<f64> {
    dyadic_eps(3, 10)
}

pub const DEFAULT_TAIL: usize = 6;

#[derive(Clone, Copy, Debug)]
enum Term {
    Pow(u32),
    Num(f64),
}

impl Term {
    fn value(self) -> f64 {
        match self {
            Term::Pow(a) => (-(a as f64)).exp2(),
            Term::Num(v) => v,
        }
    }
}

struct EpsParser<'a> {
    text: &'a str,
    pos: usize,
}

impl EpsParser<'_> {
    fn rest(&self) -> &str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(char::is_whitespace) {
            self.pos += self.rest().chars().next().map_or(1, char::len_utf8);
        }
    }

    fn end(&self) -> Result<()> {
        if self.pos < self.text.len() {
            return Err(Error::EpsSyntax { offset: self.pos, expected: "end of input".into() });
        }
        Ok(())
    }

    fn digits(&mut self) -> &str {
        let start = self.pos;
        while self.rest().starts_with(|c: char| c.is_ascii_digit()) {
            self.pos += 1;
        }
        &self.text[start..self.pos]
    }

    fn term(&mut self) -> Result<Term> {
        if self.rest().starts_with("2^") {
            self.pos += 2;
            if !self.rest().starts_with('-') {
                return Err(Error::EpsSyntax { offset: self.pos, expected: "`-`".into() });
            }
            self.pos += 1;
            let at = self.pos;
            let d = self.digits();
            if d.is_empty() {
                return Err(Error::EpsSyntax { offset: at, expected: "an integer exponent".into() });
            }
            return d
                .parse()
                .map(Term::Pow)
                .map_err(|_| Error::EpsSyntax { offset: at, expected: "a small integer exponent".into() });
        }
        let start = self.pos;
        self.digits();
        if self.rest().starts_with('.') {
            self.pos += 1;
            self.digits();
        }
        if self.rest().starts_with(['e', 'E']) {
            self.pos += 1;
            if self.rest().starts_with(['+', '-']) {
                self.pos += 1;
            }
            self.digits();
        }
        let lit = &self.text[start..self.pos];
        lit.parse::<f64>().map(Term::Num).map_err(|_| {
            self.pos = start;
            Error::EpsSyntax { offset: start, expected: "a number or `2^-A`".into() }
        })
    }
}

/// Parameters attached to a sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mollifier: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SweepMeta {
    pub fn labelled(label: impl Into<String>) -> Self {
        Self { label: label.into(), ..Self::default() }
    }
}

/// Measured quantity per ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: SweepMeta,
}

impl SweepReport {
    pub fn new(eps: Vec<f64>, values: Vec<f64>, meta: SweepMeta) -> Result<Self> {
        if eps.len() != values.len() {
            return Err(Error::LengthMismatch { expected: eps.len(), got: values.len() });
        }
        validate_eps_grid(&eps)?;
        Ok(Self { eps, values, meta })
    }

    pub fn fit(&self, tail_points: usize) -> Result<Rate> {
        fit_rate(self, tail_points)
    }
}

/// Least-squares fit `log Q = intercept + slope · log(1/ε)`, i.e. `Q ∝ ε^{-slope}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub points_used: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Degenerate {
    AllZero,
    NonPositive,
}

/// A fitted rate, or a marker when the data cannot be fitted in log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rate {
    Fit(RateFit),
    Degenerate(Degenerate),
}

impl Rate {
    pub fn slope(&self) -> Option<f64> {
        match self {
            Rate::Fit(f) => Some(f.slope),
            Rate::Degenerate(_) => None,
        }
    }

    pub fn is_all_zero(&self) -> bool {
        matches!(self, Rate::Degenerate(Degenerate::AllZero))
    }

    /// Slope, with an identically vanishing quantity read as rate 0.
    pub fn slope_or_zero(&self) -> Option<f64> {
        match self {
            Rate::Fit(f) => Some(f.slope),
            Rate::Degenerate(Degenerate::AllZero) => Some(0.0),
            Rate::Degenerate(Degenerate::NonPositive) => None,
        }
    }
}

/// Fewest points a rate is fitted to.
pub const MIN_FIT_POINTS: usize = 3;

/// Fits the last `tail_points` entries (the smallest ε).
pub fn fit_rate(rep: &SweepReport, tail_points: usize) -> Result<Rate> {
    if tail_points < MIN_FIT_POINTS {
        return Err(Error::OutOfRange { what: "tail_points", value: tail_points as f64 });
    }
    if tail_points > rep.eps.len() {
        return Err(Error::OutOfRange { what: "tail_points", value: tail_points as f64 });
    }
    let start = rep.eps.len() - tail_points;
    fit_points(&rep.eps[start..], &rep.values[start..])
}

pub fn fit_points(eps: &[f64], values: &[f64]) -> Result<Rate> {
    if eps.len() != values.len() {
        return Err(Error::LengthMismatch { expected: eps.len(), got: values.len() });
    }
    if eps.len() < MIN_FIT_POINTS {
        return Err(Error::OutOfRange { what: "points", value: eps.len() as f64 });
    }
    if values.iter().all(|&v| v == 0.0) {
        return Ok(Rate::Degenerate(Degenerate::AllZero));
    }
    if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Ok(Rate::Degenerate(Degenerate::NonPositive));
    }
    let xs: Vec<f64> = eps.iter().map(|e| -e.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(Rate::Fit(RateFit { slope, intercept, residual: (rss / n).sqrt(), points_used: xs.len() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn report(eps: &[f64], q: impl Fn(f64) -> f64) -> SweepReport {
        SweepReport::new(eps.to_vec(), eps.iter().map(|&e| q(e)).collect(), SweepMeta::labelled("t")).unwrap()
    }

    #[test]
    fn exact_power_law() {
        let eps = default_eps_grid();
        let Rate::Fit(f) = fit_rate(&report(&eps, |e| e.powf(-1.5)), 6).unwrap() else { panic!() };
        assert!((f.slope - 1.5).abs() < 1e-12 && f.residual < 1e-12);
        assert_eq!(f.points_used, 6);
        let Rate::Fit(f) = fit_rate(&report(&eps, |_| 3.0), 6).unwrap() else { panic!() };
        assert!(f.slope.abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let eps = default_eps_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise: Vec<f64> = eps.iter().map(|_| rng.gen_range(-0.01..0.01)).collect();
        let rep = SweepReport::new(eps.clone(), eps.iter().zip(&noise).map(|(e, n)| (1.0 + n) / e).collect(), SweepMeta::default()).unwrap();
        let Rate::Fit(f) = fit_rate(&rep, 8).unwrap() else { panic!() };
        assert!((0.95..=1.05).contains(&f.slope) && f.residual < 0.02);
    }

    #[test]
    fn degenerate_markers() {
        let eps = default_eps_grid();
        assert!(fit_rate(&report(&eps, |_| 0.0), 6).unwrap().is_all_zero());
        assert_eq!(fit_rate(&report(&eps, |e| e - 0.01), 6).unwrap(), Rate::Degenerate(Degenerate::NonPositive));
        assert!(fit_rate(&report(&eps, |_| 1.0), 2).is_err());
    }

    #[test]
    fn affine_equivariance() {
        let eps = default_eps_grid();
        let base = report(&eps, |e| e.powf(-0.7) * (1.0 + e.sin()));
        let scaled = report(&eps, |e| 42.0 * e.powf(-0.7) * (1.0 + e.sin()));
        let (Rate::Fit(a), Rate::Fit(b)) = (fit_rate(&base, 6).unwrap(), fit_rate(&scaled, 6).unwrap()) else { panic!() };
        assert!((a.slope - b.slope).abs() < 1e-12);
        assert!((b.intercept - a.intercept - 42f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn eps_syntax() {
        let g = parse_eps_grid("2^-3..2^-10").unwrap();
        assert_eq!(g, default_eps_grid());
        assert_eq!(parse_eps_grid("0.5, 0.25,2^-4").unwrap(), vec![0.5, 0.25, 0.0625]);
        match parse_eps_grid("2^-3..") {
            Err(Error::EpsSyntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_eps_grid("2^3"), Err(Error::EpsSyntax { offset: 2, .. })));
        assert!(parse_eps_grid("0.25,0.5").is_err());
        assert!(parse_eps_grid("2^-5..2^-3").is_err());
        assert!(parse_eps_grid("1.5").is_err());
    }
}

//! Lexicon sentiment scoring, time-binned trends, composition fractions and
//! trend alignment.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    pub name: String,
    weights: HashMap<String, f64>,
}

impl Lexicon {
    pub fn new(name: impl Into<String>) -> Self {
        Lexicon {
            name: name.into(),
            weights: HashMap::new(),
        }
    }

    /// Tokens are lowercased; weights must lie in [-1, 1].
    pub fn insert(&mut self, token: &str, weight: f64) -> Result<()> {
        if !(-1.0..=1.0).contains(&weight) {
            return Err(Error::arg(format!("weight {weight} for {token:?} outside [-1, 1]")));
        }
        self.weights.insert(token.to_lowercase(), weight);
        Ok(())
    }

    pub fn from_pairs<'a>(name: &str, pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self> {
        let mut lex = Lexicon::new(name);
        for (t, w) in pairs {
            lex.insert(t, w)?;
        }
        Ok(lex)
    }

    pub fn weight(&self, token: &str) -> Option<f64> {
        self.weights.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.weights.values().fold(0.0, |m, w| m.max(w.abs()))
    }

    /// One `token weight` pair per line, separated by whitespace or a tab.
    /// Blank lines and `#` comments are skipped.
    pub fn read<R: BufRead>(name: &str, r: R) -> Result<Self> {
        let mut lex = Lexicon::new(name);
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let loc = format!("lexicon line {}", i + 1);
            let (tok, w) = t
                .rsplit_once(|c: char| c.is_whitespace())
                .ok_or_else(|| Error::parse(&loc, "expected `token weight`"))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| Error::parse(&loc, format!("bad weight {w:?}")))?;
            lex.insert(tok.trim(), w)
                .map_err(|e| Error::parse(&loc, e.to_string()))?;
        }
        Ok(lex)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub relative: f64,
    pub absolute: f64,
    pub discrete: i8,
}

impl SentimentScore {
    pub const NEUTRAL: SentimentScore = SentimentScore {
        relative: 0.0,
        absolute: 0.0,
        discrete: 0,
    };
}

/// Denominator for the summed weights.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    TotalTokens,
    MatchedTokens,
}

pub fn discretize(relative: f64) -> i8 {
    if relative > 0.0 {
        1
    } else if relative < 0.0 {
        -1
    } else {
        0
    }
}

pub fn score_tokens(tokens: &[String], lex: &Lexicon, norm: Normalization) -> SentimentScore {
    // Summed in sorted order so the score depends only on the token multiset;
    // otherwise cancelling weights can leave a residue whose sign follows word order.
    let mut weights: Vec<f64> = tokens.iter().filter_map(|t| lex.weight(t)).collect();
    weights.sort_by(f64::total_cmp);
    let sum: f64 = weights.iter().sum();
    let abs: f64 = weights.iter().map(|w| w.abs()).sum();
    // Anything within the summation error bound is a cancellation, not a sign.
    let sum = if sum.abs() <= weights.len() as f64 * f64::EPSILON * abs {
        0.0
    } else {
        sum
    };
    let denom = match norm {
        Normalization::TotalTokens => tokens.len(),
        Normalization::MatchedTokens => weights.len(),
    };
    if denom == 0 {
        return SentimentScore::NEUTRAL;
    }
    let relative = sum / denom as f64;
    SentimentScore {
        relative,
        absolute: abs / denom as f64,
        discrete: discretize(relative),
    }
}

/// Summed matched weights over the total token count.
pub fn score_message(text: &str, lex: &Lexicon) -> SentimentScore {
    score_tokens(&tokenize(text), lex, Normalization::TotalTokens)
}

pub fn score_message_with(text: &str, lex: &Lexicon, norm: Normalization) -> SentimentScore {
    score_tokens(&tokenize(text), lex, norm)
}

pub fn score_all(texts: &[&str], lex: &Lexicon, norm: Normalization) -> Vec<SentimentScore> {
    texts.par_iter().map(|t| score_message_with(t, lex, norm)).collect()
}

/// Two-category polarity: `posemo - 1.5 * negemo`.
pub fn combine_polarity(posemo: f64, negemo: f64) -> Result<f64> {
    if !(posemo >= 0.0) || !(negemo >= 0.0) {
        return Err(Error::arg("category rates must be nonnegative"));
    }
    Ok(posemo - 1.5 * negemo)
}

// ---------------------------------------------------------------------------
// Trends

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub bin_h: f64,
    pub bin_start: Vec<f64>,
    pub value: Vec<Option<f64>>,
    pub count: Vec<u64>,
}

impl TrendSeries {
    pub fn len(&self) -> usize {
        self.bin_start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bin_start.is_empty()
    }
}

fn check_bin(bin_h: f64) -> Result<()> {
    if bin_h > 0.0 && bin_h.is_finite() {
        Ok(())
    } else {
        Err(Error::arg("bin width must be positive"))
    }
}

/// Contiguous bin indices covering every point.
fn bin_range(points: impl Iterator<Item = f64>, bin_h: f64) -> Option<(i64, i64)> {
    points
        .map(|t| (t / bin_h).floor() as i64)
        .fold(None, |acc, b| match acc {
            None => Some((b, b)),
            Some((lo, hi)) => Some((lo.min(b), hi.max(b))),
        })
}

/// Mean relative score per bin. Bins are `[k*bin_h, (k+1)*bin_h)`.
pub fn trend(points: &[(f64, f64)], bin_h: f64) -> Result<TrendSeries> {
    check_bin(bin_h)?;
    let Some((lo, hi)) = bin_range(points.iter().map(|p| p.0), bin_h) else {
        return Ok(TrendSeries {
            bin_h,
            bin_start: vec![],
            value: vec![],
            count: vec![],
        });
    };
    let n = (hi - lo + 1) as usize;
    let mut sum = vec![0.0; n];
    let mut count = vec![0u64; n];
    for &(t, v) in points {
        let i = ((t / bin_h).floor() as i64 - lo) as usize;
        sum[i] += v;
        count[i] += 1;
    }
    Ok(TrendSeries {
        bin_h,
        bin_start: (0..n).map(|i| (lo + i as i64) as f64 * bin_h).collect(),
        value: sum
            .iter()
            .zip(&count)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect(),
        count,
    })
}

/// Three-point running mean over non-missing neighbours. Missing values stay
/// missing and are skipped.
pub fn smooth3(s: &TrendSeries) -> TrendSeries {
    let v = &s.value;
    let value = (0..v.len())
        .map(|i| {
            v[i]?;
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(v.len() - 1);
            let present: Vec<f64> = v[lo..=hi].iter().flatten().copied().collect();
            Some(present.iter().sum::<f64>() / present.len() as f64)
        })
        .collect();
    TrendSeries { value, ..s.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    pub positive: f64,
    pub negative: f64,
    pub neutral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionSeries {
    pub bin_h: f64,
    pub bin_start: Vec<f64>,
    pub fractions: Vec<Option<Composition>>,
    pub count: Vec<u64>,
}

/// Per-bin fractions of positive, negative and neutral messages.
pub fn composition(points: &[(f64, i8)], bin_h: f64) -> Result<CompositionSeries> {
    check_bin(bin_h)?;
    let Some((lo, hi)) = bin_range(points.iter().map(|p| p.0), bin_h) else {
        return Ok(CompositionSeries {
            bin_h,
            bin_start: vec![],
            fractions: vec![],
            count: vec![],
        });
    };
    let n = (hi - lo + 1) as usize;
    let mut tally = vec![[0u64; 3]; n];
    for &(t, c) in points {
        let i = ((t / bin_h).floor() as i64 - lo) as usize;
        tally[i][match c.signum() {
            1 => 0,
            -1 => 1,
            _ => 2,
        }] += 1;
    }
    let count: Vec<u64> = tally.iter().map(|t| t.iter().sum()).collect();
    let fractions = tally
        .iter()
        .zip(&count)
        .map(|(t, &c)| {
            (c > 0).then(|| {
                let c = c as f64;
                let positive = t[0] as f64 / c;
                let negative = t[1] as f64 / c;
                Composition {
                    positive,
                    negative,
                    neutral: t[2] as f64 / c,
                }
            })
        })
        .collect();
    Ok(CompositionSeries {
        bin_h,
        bin_start: (0..n).map(|i| (lo + i as i64) as f64 * bin_h).collect(),
        fractions,
        count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub scale: f64,
    pub offset: f64,
    /// Root-mean-square error of the fit.
    pub residual: f64,
}

fn bin_key(start: f64, bin_h: f64) -> i64 {
    (start / bin_h).round() as i64
}

/// Least-squares fit `b ~ scale * a + offset` over bins present in both series.
pub fn align_trends(a: &TrendSeries, b: &TrendSeries) -> Result<Alignment> {
    if (a.bin_h - b.bin_h).abs() > 1e-9 * a.bin_h.abs().max(1.0) {
        return Err(Error::arg("series have different bin widths"));
    }
    let b_vals: HashMap<i64, f64> = b
        .bin_start
        .iter()
        .zip(&b.value)
        .filter_map(|(&s, v)| v.map(|v| (bin_key(s, b.bin_h), v)))
        .collect();
    let pairs: Vec<(f64, f64)> = a
        .bin_start
        .iter()
        .zip(&a.value)
        .filter_map(|(&s, v)| Some((v.as_ref().copied()?, *b_vals.get(&bin_key(s, a.bin_h))?)))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::arg("need at least 2 overlapping non-missing bins"));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= f64::EPSILON * n * mx.abs().max(1.0) {
        return Err(Error::DegenerateFit("first series has zero variance".into()));
    }
    let scale = sxy / sxx;
    let offset = my - scale * mx;
    let residual = (pairs.iter().map(|p| (p.1 - scale * p.0 - offset).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Alignment {
        scale,
        offset,
        residual,
    })
}

pub fn write_trend<W: Write>(mut w: W, s: &TrendSeries) -> std::io::Result<()> {
    writeln!(w, "bin_start_h,value,count")?;
    for i in 0..s.len() {
        match s.value[i] {
            Some(v) => writeln!(w, "{},{:.6},{}", s.bin_start[i], v, s.count[i])?,
            None => writeln!(w, "{},,{}", s.bin_start[i], s.count[i])?,
        }
    }
    Ok(())
}

pub fn write_composition<W: Write>(mut w: W, s: &CompositionSeries) -> std::io::Result<()> {
    writeln!(w, "bin_start_h,positive,negative,neutral,count")?;
    for i in 0..s.bin_start.len() {
        match s.fractions[i] {
            Some(c) => writeln!(
                w,
                "{},{:.6},{:.6},{:.6},{}",
                s.bin_start[i], c.positive, c.negative, c.neutral, s.count[i]
            )?,
            None => writeln!(w, "{},,,,{}", s.bin_start[i], s.count[i])?,
        }
    }
    Ok(())
}

/// Pearson autocorrelation of the present pairs at `lag`.
pub fn autocorrelation(s: &TrendSeries, lag: usize) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = (0..s.len().saturating_sub(lag))
        .filter_map(|i| Some((s.value[i]?, s.value[i + lag]?)))
        .collect();
    if pairs.len() < 3 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    let d = (sxx * syy).sqrt();
    (d > 0.0).then(|| sxy / d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> Lexicon {
        Lexicon::from_pairs("t", [("good", 1.0), ("bad", -1.0)]).unwrap()
    }

    #[test]
    fn cancelling_weights_score_identically_in_any_order() {
        let lex = Lexicon::from_pairs("t", [("a", 0.1), ("b", 0.2), ("c", -0.3)]).unwrap();
        let orders = ["a b c", "a c b", "b a c", "b c a", "c a b", "c b a"];
        let first = score_message(orders[0], &lex);
        for o in orders {
            assert_eq!(score_message(o, &lex), first, "{o}");
        }
        assert_eq!(first.relative, 0.0);
        assert_eq!(first.discrete, 0);
    }

    fn series(values: &[Option<f64>]) -> TrendSeries {
        TrendSeries {
            bin_h: 1.0,
            bin_start: (0..values.len()).map(|i| i as f64).collect(),
            value: values.to_vec(),
            count: values.iter().map(|v| v.is_some() as u64).collect(),
        }
    }

    #[test]
    fn worked_score() {
        let s = score_message("good good bad day", &lex());
        assert_eq!(
            s,
            SentimentScore {
                relative: 0.25,
                absolute: 0.75,
                discrete: 1
            }
        );
        assert_eq!(score_message("nothing here", &lex()), SentimentScore::NEUTRAL);
        assert_eq!(score_message("", &lex()), SentimentScore::NEUTRAL);
    }

    #[test]
    fn matched_normalization() {
        let s = score_message_with("good good bad day", &lex(), Normalization::MatchedTokens);
        assert!((s.relative - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.absolute, 1.0);
    }

    #[test]
    fn lexicon_file() {
        let text = "# comment\ngood 0.5\nvery bad\t-0.75\n\n";
        let lex = Lexicon::read("x", text.as_bytes()).unwrap();
        assert_eq!(lex.weight("good"), Some(0.5));
        assert_eq!(lex.weight("very bad"), Some(-0.75));
        assert!(Lexicon::read("x", "good 1.5".as_bytes()).is_err());
        assert!(Lexicon::read("x", "good".as_bytes()).is_err());
    }

    #[test]
    fn polarity() {
        assert_eq!(combine_polarity(2.0, 1.0).unwrap(), 0.5);
        assert_eq!(combine_polarity(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(combine_polarity(3.0, 2.0).unwrap(), 0.0);
        assert!(combine_polarity(-0.1, 0.0).is_err());
        assert!(combine_polarity(0.0, f64::NAN).is_err());
    }

    #[test]
    fn trend_bins() {
        let t = trend(&[(0.1, 1.0), (0.2, -1.0), (2.5, 0.5)], 1.0).unwrap();
        assert_eq!(t.bin_start, vec![0.0, 1.0, 2.0]);
        assert_eq!(t.value, vec![Some(0.0), None, Some(0.5)]);
        assert_eq!(t.count, vec![2, 0, 1]);
        assert!(trend(&[], 1.0).unwrap().is_empty());
        assert!(trend(&[], 0.0).is_err());
    }

    #[test]
    fn negative_offsets_bin_by_floor() {
        let t = trend(&[(-0.5, 1.0), (0.5, 3.0)], 1.0).unwrap();
        assert_eq!(t.bin_start, vec![-1.0, 0.0]);
    }

    #[test]
    fn smoothing() {
        let s = smooth3(&series(&[Some(1.0), Some(2.0), Some(3.0)]));
        assert_eq!(s.value, vec![Some(1.5), Some(2.0), Some(2.5)]);
        let c = smooth3(&series(&[Some(0.3); 5]));
        assert!(c.value.iter().all(|v| (v.unwrap() - 0.3).abs() < 1e-15));
        let gap = smooth3(&series(&[Some(1.0), None, Some(3.0), Some(5.0)]));
        assert_eq!(gap.value, vec![Some(1.0), None, Some(4.0), Some(4.0)]);
    }

    #[test]
    fn composition_fractions() {
        let c = composition(&[(0.0, 1), (0.1, -1), (0.2, 0), (0.3, 0), (2.0, 1)], 1.0).unwrap();
        assert_eq!(
            c.fractions[0],
            Some(Composition {
                positive: 0.25,
                negative: 0.25,
                neutral: 0.5
            })
        );
        assert_eq!(c.fractions[1], None);
        assert_eq!(c.count, vec![4, 0, 1]);
    }

    #[test]
    fn exact_alignment() {
        let a = series(&[Some(0.1), Some(-0.2), Some(0.4), None]);
        let b = TrendSeries {
            value: a.value.iter().map(|v| v.map(|x| 2.0 * x + 0.1)).collect(),
            ..a.clone()
        };
        let fit = align_trends(&a, &b).unwrap();
        assert!((fit.scale - 2.0).abs() < 1e-12);
        assert!((fit.offset - 0.1).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        let id = align_trends(&a, &a).unwrap();
        assert!((id.scale - 1.0).abs() < 1e-12 && id.offset.abs() < 1e-12);
    }

    #[test]
    fn alignment_errors() {
        let a = series(&[Some(0.1), None]);
        assert!(matches!(align_trends(&a, &a), Err(Error::Argument(_))));
        let flat = series(&[Some(0.1), Some(0.1), Some(0.1)]);
        let b = series(&[Some(0.1), Some(0.2), Some(0.3)]);
        assert!(matches!(align_trends(&flat, &b), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn autocorrelation_of_periodic_series() {
        let v: Vec<Option<f64>> = (0..24 * 8)
            .map(|h| Some((2.0 * std::f64::consts::PI * h as f64 / 24.0).sin()))
            .collect();
        let s = series(&v);
        let best = (12..=36).max_by(|&a, &b| {
            autocorrelation(&s, a)
                .unwrap()
                .total_cmp(&autocorrelation(&s, b).unwrap())
        });
        assert_eq!(best, Some(24));
    }
}

//! Finitary recoding of the uniform four-symbol Bernoulli shift into the
//! `(1/2, 1/8, 1/8, 1/8, 1/8)` shift.
//!
//! Each source symbol is a direction and a label. The directions form a
//! degree-one arrow configuration that is paired stepwise. A right-pointing
//! position emits `r`; a left-pointing one emits `(l, x, y)` with `x` its own
//! label and `y` the label of the right-pointing position it is paired with.
//! Positions whose partner falls outside the window emit `?`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrows::{ArrowConfiguration, Direction};
use crate::sprd::sprd_pair;
use crate::stats::Observation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeshalkinError {
    #[error("position {0} is censored; decode needs a fully resolved span")]
    CensoredSpan(usize),
    #[error("position {0}: pairing of the reconstructed directions contradicts the code")]
    Inconsistent(usize),
    #[error("unknown symbol {0:?}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    A,
    B,
}

impl Label {
    fn as_char(self) -> char {
        match self {
            Label::A => 'a',
            Label::B => 'b',
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c {
            'a' => Some(Label::A),
            'b' => Some(Label::B),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSymbol {
    pub direction: Direction,
    pub label: Label,
}

impl SourceSymbol {
    pub const ALL: [SourceSymbol; 4] = [
        SourceSymbol { direction: Direction::Right, label: Label::A },
        SourceSymbol { direction: Direction::Right, label: Label::B },
        SourceSymbol { direction: Direction::Left, label: Label::A },
        SourceSymbol { direction: Direction::Left, label: Label::B },
    ];

    pub fn r(label: Label) -> Self {
        Self { direction: Direction::Right, label }
    }

    pub fn l(label: Label) -> Self {
        Self { direction: Direction::Left, label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CodedSymbol {
    R,
    L { own: Label, partner: Label },
    Censored,
}

impl CodedSymbol {
    /// The five uncensored values in text order `r laa lab lba lbb`.
    pub const ALPHABET: [CodedSymbol; 5] = [
        CodedSymbol::R,
        CodedSymbol::L { own: Label::A, partner: Label::A },
        CodedSymbol::L { own: Label::A, partner: Label::B },
        CodedSymbol::L { own: Label::B, partner: Label::A },
        CodedSymbol::L { own: Label::B, partner: Label::B },
    ];

    /// Target law of [`CodedSymbol::ALPHABET`].
    pub const TARGET: [f64; 5] = [0.5, 0.125, 0.125, 0.125, 0.125];
}

impl fmt::Display for SourceSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.direction {
            Direction::Right => 'r',
            Direction::Left => 'l',
        };
        write!(f, "{d}{}", self.label.as_char())
    }
}

impl FromStr for SourceSymbol {
    type Err = MeshalkinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let parsed = match (chars.next(), chars.next().and_then(Label::from_char), chars.next()) {
            (Some('r'), Some(label), None) => Some(SourceSymbol::r(label)),
            (Some('l'), Some(label), None) => Some(SourceSymbol::l(label)),
            _ => None,
        };
        parsed.ok_or_else(|| MeshalkinError::Parse(s.to_string()))
    }
}

impl fmt::Display for CodedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodedSymbol::R => write!(f, "r"),
            CodedSymbol::L { own, partner } => write!(f, "l{}{}", own.as_char(), partner.as_char()),
            CodedSymbol::Censored => write!(f, "?"),
        }
    }
}

impl FromStr for CodedSymbol {
    type Err = MeshalkinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || MeshalkinError::Parse(s.to_string());
        match s {
            "r" => Ok(CodedSymbol::R),
            "?" => Ok(CodedSymbol::Censored),
            _ => {
                let mut chars = s.chars();
                if chars.next() != Some('l') {
                    return Err(err());
                }
                let own = chars.next().and_then(Label::from_char).ok_or_else(err)?;
                let partner = chars.next().and_then(Label::from_char).ok_or_else(err)?;
                if chars.next().is_some() {
                    return Err(err());
                }
                Ok(CodedSymbol::L { own, partner })
            }
        }
    }
}

/// Parse whitespace-separated symbols.
pub fn parse_symbols<S: FromStr<Err = MeshalkinError>>(text: &str) -> Result<Vec<S>, MeshalkinError> {
    text.split_whitespace().map(str::parse).collect()
}

/// Space-separated text form.
pub fn format_symbols<S: fmt::Display>(symbols: &[S]) -> String {
    symbols.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn random_source<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<SourceSymbol> {
    (0..len).map(|_| SourceSymbol::ALL[rng.gen_range(0..4)]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub coded: Vec<CodedSymbol>,
    /// Distance to the paired position; censored positions carry the distance
    /// to the window edge they point past.
    pub radii: Vec<Observation>,
}

/// Partner offset of every position under the full-window stepwise pairing of
/// `directions`; `None` entries (holes) carry no stub.
fn partners(directions: &[Option<Direction>]) -> Vec<Option<usize>> {
    let right: Vec<u32> = directions.iter().map(|d| u32::from(*d == Some(Direction::Right))).collect();
    let left: Vec<u32> = directions.iter().map(|d| u32::from(*d == Some(Direction::Left))).collect();
    let cfg = ArrowConfiguration::from_counts(0, left, right).expect("equal lengths");
    let mut out = vec![None; directions.len()];
    for e in sprd_pair(&cfg, directions.len() as u64).edges() {
        out[e.left as usize] = Some(e.right as usize);
        out[e.right as usize] = Some(e.left as usize);
    }
    out
}

pub fn meshalkin_encode(source: &[SourceSymbol]) -> Encoding {
    let dirs: Vec<Option<Direction>> = source.iter().map(|s| Some(s.direction)).collect();
    let partner = partners(&dirs);
    let n = source.len();
    let mut coded = Vec::with_capacity(n);
    let mut radii = Vec::with_capacity(n);
    for (i, s) in source.iter().enumerate() {
        match partner[i] {
            Some(j) => {
                coded.push(match s.direction {
                    Direction::Right => CodedSymbol::R,
                    Direction::Left => CodedSymbol::L {
                        own: s.label,
                        partner: source[j].label,
                    },
                });
                radii.push(Observation::Exact(i.abs_diff(j) as u64));
            }
            None => {
                coded.push(CodedSymbol::Censored);
                let above = match s.direction {
                    Direction::Right => n - 1 - i,
                    Direction::Left => i,
                };
                radii.push(Observation::Censored { above: above as u64 });
            }
        }
    }
    Encoding { coded, radii }
}

/// Invert a fully resolved code.
pub fn meshalkin_decode(coded: &[CodedSymbol]) -> Result<Vec<SourceSymbol>, MeshalkinError> {
    if let Some(i) = coded.iter().position(|c| *c == CodedSymbol::Censored) {
        return Err(MeshalkinError::CensoredSpan(i));
    }
    decode_window(coded).map(|v| v.into_iter().map(|s| s.expect("no censored positions")).collect())
}

/// Decode every resolved position of a window, leaving `None` at `?`.
///
/// An unmatched stub never sits between the endpoints of a matched pair in a
/// crossing-free matching, so dropping the censored positions leaves the
/// pairing of the others unchanged.
pub fn decode_window(coded: &[CodedSymbol]) -> Result<Vec<Option<SourceSymbol>>, MeshalkinError> {
    let dirs: Vec<Option<Direction>> = coded
        .iter()
        .map(|c| match c {
            CodedSymbol::R => Some(Direction::Right),
            CodedSymbol::L { .. } => Some(Direction::Left),
            CodedSymbol::Censored => None,
        })
        .collect();
    let partner = partners(&dirs);
    let mut out: Vec<Option<SourceSymbol>> = vec![None; coded.len()];
    for (i, c) in coded.iter().enumerate() {
        if let CodedSymbol::L { own, partner: y } = *c {
            let j = partner[i].ok_or(MeshalkinError::Inconsistent(i))?;
            out[i] = Some(SourceSymbol::l(own));
            out[j] = Some(SourceSymbol::r(y));
        }
    }
    if let Some(i) = (0..coded.len()).find(|&i| coded[i] == CodedSymbol::R && out[i].is_none()) {
        return Err(MeshalkinError::Inconsistent(i));
    }
    Ok(out)
}

/// Empirical law of the uncensored output over [`CodedSymbol::ALPHABET`].
pub fn coded_marginals(coded: &[CodedSymbol]) -> [f64; 5] {
    let mut counts = [0usize; 5];
    for c in coded {
        if let Some(k) = CodedSymbol::ALPHABET.iter().position(|a| a == c) {
            counts[k] += 1;
        }
    }
    let total = counts.iter().sum::<usize>().max(1) as f64;
    counts.map(|c| c as f64 / total)
}

pub fn tv_to_target(marginals: &[f64; 5]) -> f64 {
    marginals
        .iter()
        .zip(CodedSymbol::TARGET)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / 2.0
}

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    /// Class index used by classifiers: male 0, female 1.
    pub fn class(self) -> usize {
        match self {
            Gender::Male => 0,
            Gender::Female => 1,
        }
    }

    pub fn from_class(i: usize) -> Self {
        if i == 0 {
            Gender::Male
        } else {
            Gender::Female
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub fn as_str(self) -> &'static str {
        match self {
            Hand::Left => "left",
            Hand::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Dorsal,
    Palmar,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Dorsal => "dorsal",
            Side::Palmar => "palmar",
        }
    }

    /// Single-letter tag used in report headers.
    pub fn letter(self) -> char {
        match self {
            Side::Dorsal => 'D',
            Side::Palmar => 'P',
        }
    }
}

macro_rules! display_and_parse {
    ($ty:ty, $what:literal, $($text:literal => $value:expr),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok($value),)+
                    other => Err(format!("unknown {} {other:?}", $what)),
                }
            }
        }
    };
}

display_and_parse!(Gender, "gender", "male" => Gender::Male, "m" => Gender::Male, "female" => Gender::Female, "f" => Gender::Female);
display_and_parse!(Hand, "hand", "left" => Hand::Left, "right" => Hand::Right);
display_and_parse!(Side, "side", "dorsal" => Side::Dorsal, "palmar" => Side::Palmar);

/// Metadata of one hand image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandRecord {
    pub image_path: PathBuf,
    pub subject_id: u32,
    pub gender: Gender,
    pub age: u32,
    pub skin_color: String,
    pub hand: Hand,
    pub side: Side,
    pub accessories: bool,
    pub nail_polish: bool,
    pub irregularities: bool,
}

/// Splits an aspect value such as `"Palmar left"` or `"right dorsal"`
/// into its side and hand.
pub fn parse_aspect(value: &str) -> Result<(Side, Hand), String> {
    let words: Vec<&str> = value.split_whitespace().collect();
    if words.len() != 2 {
        return Err(format!("aspect {value:?} is not \"<side> <hand>\""));
    }
    let (mut side, mut hand) = (None, None);
    for w in words {
        if let Ok(s) = w.parse::<Side>() {
            side = side.or(Some(s));
        } else if let Ok(h) = w.parse::<Hand>() {
            hand = hand.or(Some(h));
        } else {
            return Err(format!("aspect {value:?} has unknown word {w:?}"));
        }
    }
    match (side, hand) {
        (Some(s), Some(h)) => Ok((s, h)),
        _ => Err(format!("aspect {value:?} needs one side and one hand")),
    }
}

/// Accepts `0/1`, `true/false`, `yes/no`.
pub fn parse_flag(value: &str) -> Result<bool, String> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Ok(true),
        "0" | "false" | "no" | "n" => Ok(false),
        other => Err(format!("flag value {other:?} is not 0/1")),
    }
}

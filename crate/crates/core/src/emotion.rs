//! The fixed set of 32 emotion categories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

pub const NUM_EMOTIONS: usize = 32;

/// Category names, in id order.
pub const EMOTION_LABELS: [&str; NUM_EMOTIONS] = [
    "afraid",
    "angry",
    "annoyed",
    "anticipating",
    "anxious",
    "apprehensive",
    "ashamed",
    "caring",
    "confident",
    "content",
    "devastated",
    "disappointed",
    "disgusted",
    "embarrassed",
    "excited",
    "faithful",
    "furious",
    "grateful",
    "guilty",
    "hopeful",
    "impressed",
    "jealous",
    "joyful",
    "lonely",
    "nostalgic",
    "prepared",
    "proud",
    "sad",
    "sentimental",
    "surprised",
    "terrified",
    "trusting",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Emotion(u8);

impl Emotion {
    pub fn from_id(id: usize) -> Option<Self> {
        (id < NUM_EMOTIONS).then_some(Emotion(id as u8))
    }

    pub fn id(self) -> usize {
        self.0 as usize
    }

    pub fn label(self) -> &'static str {
        EMOTION_LABELS[self.id()]
    }

    pub fn all() -> impl Iterator<Item = Emotion> {
        (0..NUM_EMOTIONS).map(|i| Emotion(i as u8))
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EMOTION_LABELS
            .iter()
            .position(|l| *l == s)
            .map(|i| Emotion(i as u8))
            .ok_or_else(|| Error::Validation(format!("unknown emotion label {s:?}")))
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Emotion {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Emotion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

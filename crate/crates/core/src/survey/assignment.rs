use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::survey::pool::ImagePool;

pub const INFO_TEXT: &str = "Stereotypes are cognitive shortcuts used by the brain to generate expectations about one's own or others' behaviour. Everyone has them and they don\u{2019}t always know it.";

pub const INFO_GUILT_TEXT: &str = "Many studies show that school environments suffer from stereotypes of various kinds. Being exposed to negative stereotypes about one's group has an effect on self-confidence and performance.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FramingArm {
    Info,
    InfoGuilt,
    NoFrame,
}

impl FramingArm {
    pub const ALL: [FramingArm; 3] = [FramingArm::Info, FramingArm::InfoGuilt, FramingArm::NoFrame];

    pub fn text(self) -> &'static str {
        match self {
            FramingArm::Info => INFO_TEXT,
            FramingArm::InfoGuilt => INFO_GUILT_TEXT,
            FramingArm::NoFrame => "",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FramingArm::Info => "Info",
            FramingArm::InfoGuilt => "InfoGuilt",
            FramingArm::NoFrame => "NoFrame",
        }
    }
}

impl std::str::FromStr for FramingArm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FramingArm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown framing arm '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionAssignment {
    pub session_id: String,
    pub framing: FramingArm,
    pub iat_first: bool,
    pub image_sequence: Vec<String>,
    pub seed: u64,
}

impl SessionAssignment {
    /// Seed for this session's IAT block schedule, independent of the draws
    /// used for the assignment itself.
    pub fn iat_seed(&self) -> u64 {
        SeededRng::with_stream(self.seed, 0x1a7).derive_seed()
    }
}

pub fn session_id_for(seed: u64) -> String {
    format!("S{seed:016x}")
}

/// Draw order from one generator seeded with `seed`: framing arm
/// (`below(3)`), IAT-first coin, 14 non-Gender-STEM images without
/// replacement (from the pool order), then a full shuffle of the Gender-STEM
/// images followed by the sampled ones.
pub fn create_session(pool: &ImagePool, seed: u64) -> SessionAssignment {
    let layout = pool.layout();
    let mut rng = SeededRng::new(seed);
    let framing = FramingArm::ALL[rng.below(3) as usize];
    let iat_first = rng.coin();
    let others: Vec<&str> = pool.other_ids().collect();
    let sampled = rng.sample(&others, layout.sampled_per_session());
    let mut sequence: Vec<String> = pool.gender_stem_ids().map(str::to_string).collect();
    sequence.extend(sampled.into_iter().map(str::to_string));
    rng.shuffle(&mut sequence);
    SessionAssignment {
        session_id: session_id_for(seed),
        framing,
        iat_first,
        image_sequence: sequence,
        seed,
    }
}

//! Operation-mode combinatorics.
//!
//! An actuator has two pneumatic ports: the skeleton (inner, pouch) chamber
//! and the skin (outer) envelope. Each port can be driven one of five ways,
//! the two actions can be sequenced three ways, and the two chambers can be
//! kept independent or connected to each other — 5 × 5 × 3 × 2 = 150 modes.
//!
//! A mode code reads `I<glyph><digit>-O<glyph><digit>-<N|C>`:
//! `I…` is the inner/skeleton token, `O…` the outer/skin token; the glyph is
//! the airflow option, the digit the position in the actuation sequence
//! (1 = first, 2 = second, 0 = simultaneous), and the trailing letter marks
//! the chambers as i**N**dependent or **C**onnected.

use serde::{Deserialize, Serialize};

use crate::types::{Error, Result};

// ============================================================================
// Components
// ============================================================================

/// Airflow option applied to one chamber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Airflow {
    /// Hold on a positive-pressure supply (`P`).
    Pressurize,
    /// Pressurize, then seal the chamber (`PC`).
    PressurizeClose,
    /// Hold on a vacuum supply (`V`).
    Vacuum,
    /// Evacuate, then seal the chamber (`VC`).
    VacuumClose,
    /// Leave open to the atmosphere (`O`).
    Open,
}

impl Airflow {
    /// All options in glyph-alphabetical enumeration order.
    pub const ALL: [Airflow; 5] = [
        Airflow::Pressurize,
        Airflow::PressurizeClose,
        Airflow::Vacuum,
        Airflow::VacuumClose,
        Airflow::Open,
    ];

    /// Code glyph.
    pub fn glyph(&self) -> &'static str {
        match self {
            Airflow::Pressurize => "P",
            Airflow::PressurizeClose => "PC",
            Airflow::Vacuum => "V",
            Airflow::VacuumClose => "VC",
            Airflow::Open => "O",
        }
    }

    fn from_glyph(s: &str) -> Option<Self> {
        match s {
            "P" => Some(Airflow::Pressurize),
            "PC" => Some(Airflow::PressurizeClose),
            "V" => Some(Airflow::Vacuum),
            "VC" => Some(Airflow::VacuumClose),
            "O" => Some(Airflow::Open),
            _ => None,
        }
    }

    /// Whether this option feeds pressure into the chamber.
    pub fn is_pressurizing(&self) -> bool {
        matches!(self, Airflow::Pressurize | Airflow::PressurizeClose)
    }

    /// Whether this option extracts air from the chamber.
    pub fn is_evacuating(&self) -> bool {
        matches!(self, Airflow::Vacuum | Airflow::VacuumClose)
    }

    fn describe(&self) -> &'static str {
        match self {
            Airflow::Pressurize => "held on the pressure supply",
            Airflow::PressurizeClose => "pressurized and then sealed",
            Airflow::Vacuum => "held on the vacuum supply",
            Airflow::VacuumClose => "evacuated and then sealed",
            Airflow::Open => "left open to the atmosphere",
        }
    }
}

/// Relative order of the two chamber actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sequence {
    /// Skeleton acts first, skin second (digits 1, 2).
    SkeletonFirst,
    /// Skin acts first, skeleton second (digits 2, 1).
    SkinFirst,
    /// Both act at once (digits 0, 0).
    Simultaneous,
}

impl Sequence {
    /// All sequencing options.
    pub const ALL: [Sequence; 3] =
        [Sequence::SkeletonFirst, Sequence::SkinFirst, Sequence::Simultaneous];

    /// `(skeleton digit, skin digit)` as they appear in the code.
    pub fn digits(&self) -> (u8, u8) {
        match self {
            Sequence::SkeletonFirst => (1, 2),
            Sequence::SkinFirst => (2, 1),
            Sequence::Simultaneous => (0, 0),
        }
    }

    fn from_digits(d: (u8, u8)) -> Option<Self> {
        match d {
            (1, 2) => Some(Sequence::SkeletonFirst),
            (2, 1) => Some(Sequence::SkinFirst),
            (0, 0) => Some(Sequence::Simultaneous),
            _ => None,
        }
    }
}

/// Whether the two chambers share air.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connectivity {
    /// Chambers plumbed separately (`N`).
    Independent,
    /// Chambers connected to each other (`C`).
    Connected,
}

impl Connectivity {
    /// Both options.
    pub const ALL: [Connectivity; 2] = [Connectivity::Independent, Connectivity::Connected];

    fn letter(&self) -> &'static str {
        match self {
            Connectivity::Independent => "N",
            Connectivity::Connected => "C",
        }
    }
}

/// Classification of a mode against the experimental record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeClass {
    /// Demonstrated experimentally.
    Studied,
    /// Physically pointless: the actuator cannot produce useful motion.
    NonFunctional,
    /// Plausible but not yet characterized.
    Untested,
}

impl std::fmt::Display for ModeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModeClass::Studied => "studied",
            ModeClass::NonFunctional => "non-functional",
            ModeClass::Untested => "untested",
        })
    }
}

// ============================================================================
// Mode
// ============================================================================

/// The six experimentally demonstrated mode codes.
pub const STUDIED_MODES: [&str; 6] = [
    "IP0-OV0-C",
    "IP0-OV0-N",
    "IP1-OO2-N",
    "IP1-OV2-N",
    "IPC1-OO2-N",
    "IPC1-OV2-N",
];

/// One complete operation mode of the two-chamber actuator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OperationMode {
    /// Airflow applied to the skeleton (inner) chamber.
    pub skeleton: Airflow,
    /// Airflow applied to the skin (outer) envelope.
    pub skin: Airflow,
    /// Relative order of the two actions.
    pub sequence: Sequence,
    /// Chamber plumbing.
    pub connectivity: Connectivity,
}

impl OperationMode {
    /// Render the canonical code, e.g. `IPC1-OV2-N`.
    pub fn code(&self) -> String {
        let (d1, d2) = self.sequence.digits();
        format!(
            "I{}{}-O{}{}-{}",
            self.skeleton.glyph(),
            d1,
            self.skin.glyph(),
            d2,
            self.connectivity.letter()
        )
    }

    /// Parse a canonical code. Errors carry the offending token.
    pub fn parse(code: &str) -> Result<Self> {
        let malformed = |reason: &str| Error::MalformedCode {
            code: code.to_string(),
            reason: reason.to_string(),
        };
        let mut parts = code.split('-');
        let (inner, outer, conn) = match (parts.next(), parts.next(), parts.next(), parts.next())
        {
            (Some(i), Some(o), Some(c), None) => (i, o, c),
            _ => return Err(malformed("expected three dash-separated tokens")),
        };

        fn split_token(tok: &str, prefix: char) -> Option<(Airflow, u8)> {
            let rest = tok.strip_prefix(prefix)?;
            let digit_at = rest.find(|c: char| c.is_ascii_digit())?;
            let (glyph, digits) = rest.split_at(digit_at);
            if digits.len() != 1 {
                return None;
            }
            Some((Airflow::from_glyph(glyph)?, digits.as_bytes()[0] - b'0'))
        }

        let (skeleton, d1) =
            split_token(inner, 'I').ok_or_else(|| malformed("bad inner/skeleton token"))?;
        let (skin, d2) =
            split_token(outer, 'O').ok_or_else(|| malformed("bad outer/skin token"))?;
        let sequence = Sequence::from_digits((d1, d2))
            .ok_or_else(|| malformed("sequence digits must be 1-2, 2-1 or 0-0"))?;
        let connectivity = match conn {
            "N" => Connectivity::Independent,
            "C" => Connectivity::Connected,
            _ => return Err(malformed("connectivity must be N or C")),
        };
        Ok(OperationMode { skeleton, skin, sequence, connectivity })
    }

    /// Classify against the experimental record.
    ///
    /// Non-functional patterns, for every sequencing/connectivity choice:
    /// evacuating the skeleton while pressurizing the skin inflates only the
    /// outer envelope (an airbag), and evacuating both chambers flattens the
    /// actuator entirely.
    pub fn classify(&self) -> ModeClass {
        let code = self.code();
        if STUDIED_MODES.contains(&code.as_str()) {
            return ModeClass::Studied;
        }
        if self.skeleton.is_evacuating() && (self.skin.is_pressurizing() || self.skin.is_evacuating())
        {
            return ModeClass::NonFunctional;
        }
        ModeClass::Untested
    }

    /// Human-readable description of the mode.
    pub fn describe(&self) -> String {
        let order = match self.sequence {
            Sequence::SkeletonFirst => "skeleton first, then skin",
            Sequence::SkinFirst => "skin first, then skeleton",
            Sequence::Simultaneous => "both chambers at once",
        };
        let plumbing = match self.connectivity {
            Connectivity::Independent => "chambers plumbed independently",
            Connectivity::Connected => "chambers connected to each other",
        };
        format!(
            "skeleton {}; skin {}; order: {}; {} ({})",
            self.skeleton.describe(),
            self.skin.describe(),
            order,
            plumbing,
            self.classify()
        )
    }
}

/// Enumerate all 150 modes, sorted lexicographically by code.
pub fn enumerate_modes() -> Vec<OperationMode> {
    let mut modes = Vec::with_capacity(150);
    for skeleton in Airflow::ALL {
        for skin in Airflow::ALL {
            for sequence in Sequence::ALL {
                for connectivity in Connectivity::ALL {
                    modes.push(OperationMode { skeleton, skin, sequence, connectivity });
                }
            }
        }
    }
    modes.sort_by_key(|m| m.code());
    modes
}

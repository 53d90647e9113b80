use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModScheme {
    Bpsk,
    Qpsk,
    Psk8,
    Pam4,
    Qam16,
    Qam64,
    Gfsk,
    Cpfsk,
    Wbfm,
    AmDsb,
}

impl ModScheme {
    pub const ALL: [ModScheme; 10] = [
        ModScheme::Bpsk,
        ModScheme::Qpsk,
        ModScheme::Psk8,
        ModScheme::Pam4,
        ModScheme::Qam16,
        ModScheme::Qam64,
        ModScheme::Gfsk,
        ModScheme::Cpfsk,
        ModScheme::Wbfm,
        ModScheme::AmDsb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModScheme::Bpsk => "BPSK",
            ModScheme::Qpsk => "QPSK",
            ModScheme::Psk8 => "8PSK",
            ModScheme::Pam4 => "PAM4",
            ModScheme::Qam16 => "QAM16",
            ModScheme::Qam64 => "QAM64",
            ModScheme::Gfsk => "GFSK",
            ModScheme::Cpfsk => "CPFSK",
            ModScheme::Wbfm => "WBFM",
            ModScheme::AmDsb => "AM-DSB",
        }
    }

    pub fn is_analog(self) -> bool {
        matches!(self, ModScheme::Wbfm | ModScheme::AmDsb)
    }

    /// Continuous-phase schemes integrate frequency instead of pulse shaping.
    pub fn is_continuous_phase(self) -> bool {
        matches!(self, ModScheme::Gfsk | ModScheme::Cpfsk)
    }

    /// Alphabet size of a digital scheme; `None` for analog schemes.
    pub fn alphabet_size(self) -> Option<usize> {
        Some(match self {
            ModScheme::Bpsk | ModScheme::Gfsk | ModScheme::Cpfsk => 2,
            ModScheme::Qpsk | ModScheme::Pam4 => 4,
            ModScheme::Psk8 => 8,
            ModScheme::Qam16 => 16,
            ModScheme::Qam64 => 64,
            ModScheme::Wbfm | ModScheme::AmDsb => return None,
        })
    }
}

impl fmt::Display for ModScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_uppercase();
        Ok(match norm.as_str() {
            "BPSK" => ModScheme::Bpsk,
            "QPSK" => ModScheme::Qpsk,
            "8PSK" | "PSK8" => ModScheme::Psk8,
            "PAM4" => ModScheme::Pam4,
            "QAM16" | "16QAM" => ModScheme::Qam16,
            "QAM64" | "64QAM" => ModScheme::Qam64,
            "GFSK" => ModScheme::Gfsk,
            "CPFSK" => ModScheme::Cpfsk,
            "WBFM" => ModScheme::Wbfm,
            "AMDSB" => ModScheme::AmDsb,
            _ => return Err(Error::Scheme(format!("unknown modulation scheme {s:?}"))),
        })
    }
}

impl TryFrom<String> for ModScheme {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<ModScheme> for String {
    fn from(m: ModScheme) -> String {
        m.name().to_string()
    }
}

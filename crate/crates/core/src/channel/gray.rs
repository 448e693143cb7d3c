use std::fmt;

use crate::error::{Error, Result};

pub const GRAY_BITS: u32 = 5;
pub const GRAY_STATES: u32 = 1 << GRAY_BITS;

/// One 5-bit word latched from the oscillator's LUT outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GrayWord(u8);

impl GrayWord {
    pub fn new(bits: u8) -> Result<Self> {
        if u32::from(bits) >= GRAY_STATES {
            return Err(Error::InvalidCode(format!("word {bits:#b} wider than {GRAY_BITS} bits")));
        }
        Ok(Self(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }
}

impl fmt::Display for GrayWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:05b}", self.0)
    }
}

/// Reflected-binary label of oscillator state `index`.
pub fn gray_encode(index: u32) -> Result<GrayWord> {
    if index >= GRAY_STATES {
        return Err(Error::StateOutOfRange(index));
    }
    let b = index as u8;
    Ok(GrayWord(b ^ (b >> 1)))
}

pub fn gray_decode(word: GrayWord) -> u32 {
    let mut value = word.0;
    let mut shift = value >> 1;
    while shift != 0 {
        value ^= shift;
        shift >>= 1;
    }
    u32::from(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_words() {
        assert_eq!(gray_encode(0).unwrap().bits(), 0b00000);
        assert_eq!(gray_encode(1).unwrap().bits(), 0b00001);
        assert_eq!(gray_encode(2).unwrap().bits(), 0b00011);
        assert_eq!(gray_decode(GrayWord::new(0b00000).unwrap()), 0);
        assert_eq!(gray_decode(GrayWord::new(0b00011).unwrap()), 2);
        assert_eq!(gray_encode(2).unwrap().to_string(), "00011");
    }

    #[test]
    fn out_of_range() {
        assert!(matches!(gray_encode(32), Err(Error::StateOutOfRange(32))));
        assert!(GrayWord::new(0b100000).is_err());
    }

    #[test]
    fn every_word_decodes() {
        for bits in 0..32u8 {
            let w = GrayWord::new(bits).unwrap();
            assert_eq!(gray_encode(gray_decode(w)).unwrap(), w);
        }
    }
}

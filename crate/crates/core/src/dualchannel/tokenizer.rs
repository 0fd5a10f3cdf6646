use serde::{Deserialize, Serialize};

use crate::features::tokenize;
use crate::hashing::fnv1a64;
use crate::{Error, Result};

/// Maps tokens to ids by FNV-1a 64-bit hashing of their UTF-8 bytes, keeping
/// the low `log2(vocab_size)` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerHash {
    pub vocab_size: usize,
    pub max_length: usize,
}

impl Default for TokenizerHash {
    fn default() -> Self {
        TokenizerHash {
            vocab_size: 1 << 15,
            max_length: 128,
        }
    }
}

impl TokenizerHash {
    pub fn new(vocab_size: usize, max_length: usize) -> Result<Self> {
        if !vocab_size.is_power_of_two() || vocab_size > 1 << 32 {
            return Err(Error::InvalidArgument(format!(
                "vocabulary size must be a power of two up to 2^32, got {vocab_size}"
            )));
        }
        Ok(TokenizerHash { vocab_size, max_length })
    }

    pub fn token_id(&self, token: &str) -> u32 {
        (fnv1a64(token.as_bytes()) & (self.vocab_size as u64 - 1)) as u32
    }

    /// Ids of the first `max_length` tokens of `text`.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        tokenize(text)
            .iter()
            .take(self.max_length)
            .map(|t| self.token_id(t))
            .collect()
    }
}

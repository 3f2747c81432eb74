//! Positionally disentangled speaker with an episode-randomised vocabulary.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::AgentError;
use crate::domain::{LatentStructure, LatentVector};

pub type Token = u32;

/// End-of-message token.
pub const EOS: Token = 0;

/// One bijection over the non-EoS tokens per message position.
///
/// `perms[i][l]` is the token emitted at position `i` for value index `l`,
/// i.e. the image of the offset-1 token `l + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeCode {
    pub vocab_size: Token,
    pub perms: Vec<Vec<Token>>,
}

impl EpisodeCode {
    /// Code whose permutations are all the identity.
    pub fn identity(vocab_size: Token, n_dim: usize) -> Self {
        Self {
            vocab_size,
            perms: vec![(1..vocab_size).collect(); n_dim],
        }
    }

    pub fn n_positions(&self) -> usize {
        self.perms.len()
    }

    /// Value index the speaker encodes with `token` at `position`.
    pub fn decode_token(&self, position: usize, token: Token) -> Option<usize> {
        self.perms.get(position)?.iter().position(|&t| t == token)
    }

    pub fn decode(&self, message: &Message) -> Option<LatentVector> {
        message
            .tokens()
            .iter()
            .enumerate()
            .map(|(i, &t)| self.decode_token(i, t))
            .collect::<Option<Vec<_>>>()
            .map(LatentVector)
    }

    /// Short content hash, stable across platforms.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.vocab_size.to_le_bytes());
        for perm in &self.perms {
            hasher.update((perm.len() as u64).to_le_bytes());
            for t in perm {
                hasher.update(t.to_le_bytes());
            }
        }
        hex::encode(&hasher.finalize()[..8])
    }
}

/// A speaker message. Tokens after the first EoS are regularised to EoS.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<Token>", into = "Vec<Token>")]
pub struct Message(Vec<Token>);

impl Message {
    pub fn new(mut tokens: Vec<Token>) -> Self {
        if let Some(first) = tokens.iter().position(|&t| t == EOS) {
            tokens[first..].iter_mut().for_each(|t| *t = EOS);
        }
        Self(tokens)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<Token>> for Message {
    fn from(tokens: Vec<Token>) -> Self {
        Self::new(tokens)
    }
}

impl From<Message> for Vec<Token> {
    fn from(m: Message) -> Self {
        m.0
    }
}

/// Draw an independent uniform permutation of `1..vocab_size` per position.
pub fn sample_episode_code<R: Rng + ?Sized>(
    vocab_size: Token,
    structure: &LatentStructure,
    rng: &mut R,
) -> Result<EpisodeCode, AgentError> {
    let needed = structure.max_d();
    if vocab_size < 2 || (vocab_size as usize - 1) < needed {
        return Err(AgentError::VocabTooSmall {
            vocab_size,
            max_values: needed,
        });
    }
    let perms = (0..structure.n_dim())
        .map(|_| {
            let mut perm: Vec<Token> = (1..vocab_size).collect();
            perm.shuffle(rng);
            perm
        })
        .collect();
    Ok(EpisodeCode { vocab_size, perms })
}

/// Token `i` is the permuted image of `target[i] + 1`.
pub fn speaker_encode(
    structure: &LatentStructure,
    target: &LatentVector,
    code: &EpisodeCode,
) -> Result<Message, AgentError> {
    structure.validate(target)?;
    if code.n_positions() != structure.n_dim() {
        return Err(AgentError::LengthMismatch {
            expected: structure.n_dim(),
            got: code.n_positions(),
        });
    }
    let tokens = target
        .values()
        .iter()
        .zip(&code.perms)
        .map(|(&l, perm)| {
            perm.get(l).copied().ok_or(AgentError::VocabTooSmall {
                vocab_size: code.vocab_size,
                max_values: l + 1,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Message::new(tokens))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::enumerate_latent_vectors;
    use crate::rng::stream;
    use std::collections::BTreeSet;

    #[test]
    fn identity_code_is_offset_one() {
        let s = LatentStructure::from_sizes(&[3, 3, 3]).unwrap();
        let code = EpisodeCode::identity(16, 3);
        let m = speaker_encode(&s, &LatentVector(vec![2, 1, 0]), &code).unwrap();
        assert_eq!(m.tokens(), [3, 2, 1]);
    }

    #[test]
    fn code_has_one_permutation_per_position() {
        let s = LatentStructure::from_sizes(&[3, 5, 3]).unwrap();
        let code = sample_episode_code(16, &s, &mut stream(1, "code")).unwrap();
        assert_eq!(code.perms.len(), 3);
        for perm in &code.perms {
            let set: BTreeSet<Token> = perm.iter().copied().collect();
            assert_eq!(set, (1..16).collect());
        }
        let again = sample_episode_code(16, &s, &mut stream(1, "code")).unwrap();
        assert_eq!(code, again);
        assert_eq!(code.fingerprint(), again.fingerprint());
    }

    #[test]
    fn vocab_too_small() {
        let s = LatentStructure::from_sizes(&[3, 2]).unwrap();
        assert!(matches!(
            sample_episode_code(2, &s, &mut stream(1, "code")),
            Err(AgentError::VocabTooSmall { .. })
        ));
        assert!(sample_episode_code(4, &s, &mut stream(1, "code")).is_ok());
    }

    #[test]
    fn appendix_style_code() {
        // piano, swimming, eggplant at value index 0 on each dimension
        let s = LatentStructure::from_sizes(&[3, 3, 3]).unwrap();
        let mut code = EpisodeCode::identity(16, 3);
        code.perms[0].swap(0, 7); // 1 <-> 8
        code.perms[1].swap(0, 4); // 1 <-> 5
        code.perms[2].swap(0, 5); // 1 <-> 6
        let m = speaker_encode(&s, &LatentVector(vec![0, 0, 0]), &code).unwrap();
        assert_eq!(m.tokens(), [8, 5, 6]);
    }

    #[test]
    fn encoding_is_injective_and_decodable() {
        let s = LatentStructure::from_sizes(&[3, 3]).unwrap();
        let code = sample_episode_code(16, &s, &mut stream(9, "code")).unwrap();
        let lattice = enumerate_latent_vectors(&s);
        let messages: BTreeSet<Vec<Token>> = lattice
            .iter()
            .map(|v| speaker_encode(&s, v, &code).unwrap().tokens().to_vec())
            .collect();
        assert_eq!(messages.len(), 9);
        for v in &lattice {
            let m = speaker_encode(&s, v, &code).unwrap();
            assert!(m.tokens().iter().all(|&t| t != EOS));
            assert_eq!(code.decode(&m).as_ref(), Some(v));
        }
    }

    #[test]
    fn eos_regularises_tail() {
        assert_eq!(Message::new(vec![4, 0, 7]).tokens(), [4, 0, 0]);
        assert_eq!(Message::new(vec![0, 3, 2]).tokens(), [0, 0, 0]);
        let m: Message = serde_json::from_str("[5,0,9]").unwrap();
        assert_eq!(m.tokens(), [5, 0, 0]);
    }
}

//! Per-block byte codec. Codec 0 (identity) is mandatory and used by
//! tests; codec 1 is DEFLATE, the default for real datasets.

use std::io::{Read, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Codec {
    Identity,
    Deflate,
}

impl Codec {
    pub fn id(self) -> u8 {
        match self {
            Codec::Identity => 0,
            Codec::Deflate => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Codec> {
        match id {
            0 => Some(Codec::Identity),
            1 => Some(Codec::Deflate),
            _ => None,
        }
    }

    pub fn compress(self, payload: &[u8]) -> Vec<u8> {
        match self {
            Codec::Identity => payload.to_vec(),
            Codec::Deflate => {
                let mut enc =
                    flate2::write::DeflateEncoder::new(Vec::new(), flate2::Compression::new(6));
                enc.write_all(payload).expect("in-memory deflate cannot fail");
                enc.finish().expect("in-memory deflate cannot fail")
            }
        }
    }

    pub fn decompress(self, stored: &[u8]) -> Result<Vec<u8>, String> {
        match self {
            Codec::Identity => Ok(stored.to_vec()),
            Codec::Deflate => {
                let mut out = Vec::new();
                flate2::read::DeflateDecoder::new(stored)
                    .read_to_end(&mut out)
                    .map_err(|e| format!("deflate: {e}"))?;
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_codecs_round_trip() {
        let payload: Vec<u8> = (0..10_000u32).map(|i| (i % 251) as u8).collect();
        for codec in [Codec::Identity, Codec::Deflate] {
            let stored = codec.compress(&payload);
            assert_eq!(codec.decompress(&stored).unwrap(), payload, "{codec:?}");
        }
    }

    #[test]
    fn deflate_shrinks_redundant_payloads() {
        let payload = vec![42u8; 64 * 1024];
        assert!(Codec::Deflate.compress(&payload).len() < payload.len() / 50);
    }

    #[test]
    fn garbage_deflate_input_is_an_error() {
        assert!(Codec::Deflate.decompress(&[0xde, 0xad, 0xbe, 0xef]).is_err());
    }
}

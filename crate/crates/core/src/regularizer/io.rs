//! FWTS weight files.
//!
//! Layout: magic `FWTS`, one version byte, the layer count as `u32`, then per
//! layer `out_ch, in_ch, kh, kw` as `u32` followed by the kernel and bias
//! values as `f64`, and finally the leaky slope as `f64`. All little-endian.
//! Version 1 places activations between convolutions only; version 2 also
//! places one before the first convolution.

use std::path::Path;

use super::conv::ConvLayer;
use super::network::{ActivationPlacement, NetworkWeights};
use crate::error::{Error, Result};
use crate::numerics::io::{read_f64, read_u32, write_atomic};

pub const WEIGHTS_MAGIC: [u8; 4] = *b"FWTS";

fn version_of(placement: ActivationPlacement) -> u8 {
    match placement {
        ActivationPlacement::Interior => 1,
        ActivationPlacement::EveryConv => 2,
    }
}

pub fn encode_weights(net: &NetworkWeights) -> Vec<u8> {
    let mut buf = Vec::with_capacity(17 + 8 * net.parameter_count() + 16 * net.n_res_layers());
    buf.extend_from_slice(&WEIGHTS_MAGIC);
    buf.push(version_of(net.placement()));
    buf.extend_from_slice(&(net.n_res_layers() as u32).to_le_bytes());
    for layer in net.layers() {
        for dim in [layer.out_ch, layer.in_ch, layer.kh, layer.kw] {
            buf.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        for v in layer.kernel.iter().chain(&layer.bias) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf.extend_from_slice(&net.slope().to_le_bytes());
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Truncated {
                expected: self.pos.saturating_add(n),
                found: self.bytes.len(),
            }),
        }
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(read_u32(self.take(4)?) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let len = n.checked_mul(8).ok_or_else(|| Error::Malformed("size overflow".into()))?;
        Ok(self.take(len)?.chunks_exact(8).map(read_f64).collect())
    }
}

pub fn decode_weights(bytes: &[u8]) -> Result<NetworkWeights> {
    if bytes.len() >= 4 && bytes[..4] != WEIGHTS_MAGIC {
        let mut found = [0u8; 4];
        found.copy_from_slice(&bytes[..4]);
        return Err(Error::BadMagic {
            expected: WEIGHTS_MAGIC,
            found,
        });
    }
    let mut cur = Cursor { bytes, pos: 0 };
    cur.take(4)?;
    let placement = match cur.take(1)?[0] {
        1 => ActivationPlacement::Interior,
        2 => ActivationPlacement::EveryConv,
        v => return Err(Error::UnsupportedVersion(v)),
    };
    let n_layers = cur.u32()?;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        let (out_ch, in_ch, kh, kw) = (cur.u32()?, cur.u32()?, cur.u32()?, cur.u32()?);
        let n_kernel = out_ch
            .checked_mul(in_ch)
            .and_then(|v| v.checked_mul(kh))
            .and_then(|v| v.checked_mul(kw))
            .ok_or_else(|| Error::Malformed("layer size overflow".into()))?;
        let kernel = cur.f64s(n_kernel)?;
        let bias = cur.f64s(out_ch)?;
        layers.push(ConvLayer::new(out_ch, in_ch, kh, kw, kernel, bias)?);
    }
    let slope = read_f64(cur.take(8)?);
    if cur.pos != bytes.len() {
        return Err(Error::Malformed(format!(
            "{} trailing bytes after weights",
            bytes.len() - cur.pos
        )));
    }
    NetworkWeights::new(layers, slope, placement)
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<NetworkWeights> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes)
}

pub fn write_weights(path: impl AsRef<Path>, net: &NetworkWeights) -> Result<()> {
    write_atomic(path, &encode_weights(net))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Prng;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = NetworkWeights::desk_default(&mut Prng::new(4));
        let bytes = encode_weights(&net);
        assert_eq!(&bytes[..4], b"FWTS");
        assert_eq!(bytes[4], 1);
        let back = decode_weights(&bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(encode_weights(&back), bytes);
    }

    #[test]
    fn placement_survives_round_trip() {
        let net = NetworkWeights::init(3, 2, 3, 0.2, &mut Prng::new(1))
            .unwrap()
            .with_placement(ActivationPlacement::EveryConv);
        let bytes = encode_weights(&net);
        assert_eq!(bytes[4], 2);
        assert_eq!(decode_weights(&bytes).unwrap().placement(), ActivationPlacement::EveryConv);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.fwts");
        let net = NetworkWeights::desk_default(&mut Prng::new(8));
        write_weights(&path, &net).unwrap();
        assert_eq!(read_weights(&path).unwrap(), net);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let net = NetworkWeights::init(2, 2, 3, 0.1, &mut Prng::new(2)).unwrap();
        let bytes = encode_weights(&net);
        let mut wrong = bytes.clone();
        wrong[..4].copy_from_slice(b"FIMG");
        assert!(matches!(decode_weights(&wrong), Err(Error::BadMagic { .. })));
        let mut version = bytes.clone();
        version[4] = 9;
        assert!(matches!(decode_weights(&version), Err(Error::UnsupportedVersion(9))));
        assert!(matches!(
            decode_weights(&bytes[..bytes.len() - 3]),
            Err(Error::Truncated { .. })
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode_weights(&extra), Err(Error::Malformed(_))));
        let mut nan = bytes;
        let at = 4 + 1 + 4 + 16;
        nan[at..at + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(decode_weights(&nan), Err(Error::NonFinite { .. })));
    }
}

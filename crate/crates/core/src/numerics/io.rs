//! FIMG image files and atomic file writes.
//!
//! FIMG layout: the ASCII magic `FIMG`, then height and width as
//! little-endian `u32`, then `height * width` little-endian `f64` values in
//! row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: [u8; 4] = *b"FIMG";

pub fn encode_image(image: &Image) -> Vec<u8> {
    let mut buf = Vec::with_capacity(12 + 8 * image.len());
    buf.extend_from_slice(&IMAGE_MAGIC);
    buf.extend_from_slice(&(image.height() as u32).to_le_bytes());
    buf.extend_from_slice(&(image.width() as u32).to_le_bytes());
    for v in image.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 12 {
        if bytes.len() >= 4 && bytes[..4] != IMAGE_MAGIC {
            return Err(bad_magic(bytes));
        }
        return Err(Error::Truncated {
            expected: 12,
            found: bytes.len(),
        });
    }
    if bytes[..4] != IMAGE_MAGIC {
        return Err(bad_magic(bytes));
    }
    let height = read_u32(&bytes[4..8]) as usize;
    let width = read_u32(&bytes[8..12]) as usize;
    let expected = 12 + 8 * height * width;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    let data = bytes[12..]
        .chunks_exact(8)
        .map(read_f64)
        .collect::<Vec<_>>();
    Image::new(height, width, data)
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

pub fn write_image(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    write_atomic(path, &encode_image(image))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn bad_magic(bytes: &[u8]) -> Error {
    let mut found = [0u8; 4];
    found.copy_from_slice(&bytes[..4]);
    Error::BadMagic {
        expected: IMAGE_MAGIC,
        found,
    }
}

pub(crate) fn read_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes(b.try_into().expect("4 bytes"))
}

pub(crate) fn read_f64(b: &[u8]) -> f64 {
    f64::from_le_bytes(b.try_into().expect("8 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Prng;
    use proptest::prelude::*;

    #[test]
    fn zeros_round_trip() {
        let img = Image::zeros(2, 3);
        assert_eq!(decode_image(&encode_image(&img)).unwrap(), img);
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = encode_image(&Image::zeros(2, 3));
        bytes[..4].copy_from_slice(b"XIMG");
        assert!(matches!(decode_image(&bytes), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn truncated_rejected() {
        let bytes = encode_image(&Image::zeros(2, 3));
        assert!(matches!(
            decode_image(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(decode_image(&bytes[..6]), Err(Error::Truncated { .. })));
    }

    #[test]
    fn non_finite_rejected() {
        let mut bytes = encode_image(&Image::zeros(1, 2));
        bytes[12..20].copy_from_slice(&f64::INFINITY.to_le_bytes());
        assert!(matches!(decode_image(&bytes), Err(Error::NonFinite { index: 0 })));
    }

    #[test]
    fn large_random_round_trip_through_file() {
        let mut rng = Prng::new(128);
        let data: Vec<f64> = (0..128 * 128).map(|_| rng.gaussian()).collect();
        let img = Image::new(128, 128, data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.fimg");
        write_image(&path, &img).unwrap();
        let back = read_image(&path).unwrap();
        assert!(img
            .data()
            .iter()
            .zip(back.data())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    proptest! {
        #[test]
        fn round_trip_is_bitwise(h in 1usize..6, w in 1usize..6, seed in any::<u64>()) {
            let mut rng = Prng::new(seed);
            let data: Vec<f64> = (0..h * w).map(|_| rng.gaussian() * 1e3).collect();
            let img = Image::new(h, w, data).unwrap();
            let back = decode_image(&encode_image(&img)).unwrap();
            prop_assert_eq!(back, img);
        }
    }
}

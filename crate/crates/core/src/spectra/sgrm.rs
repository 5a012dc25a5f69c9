//! SGRM container: `"SGRM"`, u32 version, u32 rows, u32 cols, then
//! `rows * cols` little-endian f32 pixels in row-major order.

use std::path::Path;

use crate::error::{Error, Result};

use super::ImageGrid;

pub const SGRM_MAGIC: &[u8; 4] = b"SGRM";
pub const SGRM_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub fn encode_sgrm(img: &ImageGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * img.pixels().len());
    out.extend_from_slice(SGRM_MAGIC);
    out.extend_from_slice(&SGRM_VERSION.to_le_bytes());
    out.extend_from_slice(&(img.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(img.cols() as u32).to_le_bytes());
    for p in img.pixels() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

/// Decode an SGRM buffer; `path` is only used to label errors.
pub fn decode_sgrm(bytes: &[u8], path: &Path) -> Result<ImageGrid> {
    let truncated = |expected| Error::Truncated {
        path: path.to_path_buf(),
        expected,
        found: bytes.len(),
    };
    if bytes.len() < 4 || &bytes[..4] != SGRM_MAGIC {
        return Err(Error::BadMagic { path: path.to_path_buf(), expected: "SGRM" });
    }
    if bytes.len() < HEADER_LEN {
        return Err(truncated(HEADER_LEN));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != SGRM_VERSION {
        return Err(Error::UnsupportedVersion { path: path.to_path_buf(), found: version });
    }
    let (rows, cols) = (word(8) as usize, word(12) as usize);
    let expected = HEADER_LEN + 4 * rows * cols;
    if bytes.len() < expected {
        return Err(truncated(expected));
    }
    let mut pixels = Vec::with_capacity(rows * cols);
    for (index, chunk) in bytes[HEADER_LEN..expected].chunks_exact(4).enumerate() {
        let p = f32::from_le_bytes(chunk.try_into().unwrap());
        if p.is_nan() {
            return Err(Error::NanPixel { path: path.to_path_buf(), index });
        }
        pixels.push(p);
    }
    ImageGrid::new(rows, cols, pixels)
}

pub fn save_sgram(img: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_sgrm(img))?;
    Ok(())
}

pub fn load_sgram(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    decode_sgrm(&std::fs::read(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn file_size_for_100x100() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.sgrm");
        save_sgram(&ImageGrid::filled(100, 100, 0.25).unwrap(), &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 16 + 4 * 100 * 100);
    }

    #[test]
    fn distinct_load_errors() {
        let img = ImageGrid::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let good = encode_sgrm(&img);
        let p = Path::new("mem");

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_sgrm(&bad, p), Err(Error::BadMagic { .. })));
        assert!(decode_sgrm(&bad, p).unwrap_err().to_string().contains("bad magic"));

        assert!(matches!(decode_sgrm(&good[..good.len() - 1], p), Err(Error::Truncated { .. })));
        assert!(matches!(decode_sgrm(&good[..10], p), Err(Error::Truncated { .. })));

        let mut nan = good.clone();
        nan[20..24].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_sgrm(&nan, p), Err(Error::NanPixel { index: 1, .. })));

        let mut ver = good;
        ver[4] = 9;
        assert!(matches!(decode_sgrm(&ver, p), Err(Error::UnsupportedVersion { found: 9, .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn round_trip_is_identity(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
            let mut s = seed;
            let px: Vec<f32> = (0..rows * cols).map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 40) as f32 / (1u64 << 24) as f32
            }).collect();
            let img = ImageGrid::new(rows, cols, px).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("r.sgrm");
            save_sgram(&img, &path).unwrap();
            let back = load_sgram(&path).unwrap();
            prop_assert_eq!(encode_sgrm(&back), encode_sgrm(&img));
            prop_assert_eq!(back, img);
        }
    }
}

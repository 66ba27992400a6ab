//! Binary dictionary files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! header   magic "WTASEP01" | version u32 | section count u32
//! section  tag [u8; 4] | payload length u64 | payload | CRC-32 of payload u32
//! ```
//!
//! Sections appear in the order `META`, `FEAT`, `MASK` and, when the
//! dictionary carries hash codes, `CODE`:
//!
//! * `META`: sample rate u32, window length u32, hop u32, window kind u8
//!   (0 = periodic Hann), feature kind u8 (0 = magnitude, 1 = mel), mel
//!   bands u32, mel f_min f64, mel f_max f64 (NaN = Nyquist), rows `T` u64,
//!   feature dim `D` u32, bins `F` u32, has codes u8.
//! * `FEAT`: `T * D` f32 features, row-major.
//! * `MASK`: `T * ceil(F / 64)` u64 words, one bit per bin, LSB first.
//! * `CODE`: `L` u32, `M` u32, `D` u32, seed u64, bits per code u8, layout
//!   version u8, rows u64, words per row u32, then the packed u64 words.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{DictionaryCodes, SeparationDictionary};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMatrix, MelSpec};
use crate::mask::IbmMatrix;
use crate::stft::{StftConfig, WindowKind};
use crate::wta::{generate_permutations, CodeLayout, HashCodes};

pub const MAGIC: &[u8; 8] = b"WTASEP01";
pub const VERSION: u32 = 1;

const TAG_META: &[u8; 4] = b"META";
const TAG_FEAT: &[u8; 4] = b"FEAT";
const TAG_MASK: &[u8; 4] = b"MASK";
const TAG_CODE: &[u8; 4] = b"CODE";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic: not a dictionary file")]
    BadMagic,
    #[error("unsupported dictionary version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated section {0}")]
    Truncated(&'static str),
    #[error("checksum failure in section {0}")]
    Checksum(&'static str),
    #[error("unexpected section tag {found:?}, expected {expected}")]
    UnexpectedSection {
        expected: &'static str,
        found: String,
    },
    #[error("malformed {section} section: {reason}")]
    Malformed {
        section: &'static str,
        reason: String,
    },
}

fn malformed(section: &'static str, reason: impl Into<String>) -> Error {
    FormatError::Malformed {
        section,
        reason: reason.into(),
    }
    .into()
}

fn tag_name(tag: &[u8; 4]) -> &'static str {
    match tag {
        TAG_META => "META",
        TAG_FEAT => "FEAT",
        TAG_MASK => "MASK",
        TAG_CODE => "CODE",
        _ => "header",
    }
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

fn write_section(out: &mut Vec<u8>, tag: &[u8; 4], payload: &[u8]) {
    out.extend_from_slice(tag);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    section: &'static str,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], section: &'static str) -> Self {
        Self {
            buf,
            pos: 0,
            section,
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or(FormatError::Truncated(self.section))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(malformed(
                self.section,
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }

    /// Next section with the expected tag; returns its verified payload.
    fn section(&mut self, expected: &[u8; 4]) -> Result<&'a [u8]> {
        let name = tag_name(expected);
        self.section = name;
        let tag = self.take(4)?;
        if tag != expected {
            return Err(FormatError::UnexpectedSection {
                expected: name,
                found: String::from_utf8_lossy(tag).into_owned(),
            }
            .into());
        }
        let len = usize::try_from(self.u64()?).map_err(|_| FormatError::Truncated(name))?;
        let payload = self.take(len)?;
        let crc = self.u32()?;
        if crc32fast::hash(payload) != crc {
            return Err(FormatError::Checksum(name).into());
        }
        Ok(payload)
    }
}

fn as_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidParameter(format!("{what} {v} exceeds u32")))
}

impl SeparationDictionary {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut meta = Writer::default();
        meta.u32(self.sample_rate);
        meta.u32(as_u32(self.stft.window_len, "window length")?);
        meta.u32(as_u32(self.stft.hop, "hop")?);
        meta.u8(match self.stft.window {
            WindowKind::Hann => 0,
        });
        match self.features.kind() {
            FeatureKind::Magnitude => {
                meta.u8(0);
                meta.u32(0);
                meta.f64(0.0);
                meta.f64(0.0);
            }
            FeatureKind::Mel(spec) => {
                meta.u8(1);
                meta.u32(as_u32(spec.bands, "mel bands")?);
                meta.f64(spec.f_min);
                meta.f64(spec.f_max.unwrap_or(f64::NAN));
            }
        }
        meta.u64(self.len() as u64);
        meta.u32(as_u32(self.dim(), "feature dim")?);
        meta.u32(as_u32(self.n_bins(), "bins")?);
        meta.u8(self.codes.is_some() as u8);

        let mut feat = Vec::with_capacity(self.features.as_slice().len() * 4);
        for v in self.features.as_slice() {
            feat.extend_from_slice(&v.to_le_bytes());
        }
        let mut mask = Vec::with_capacity(self.ibm.words().len() * 8);
        for w in self.ibm.words() {
            mask.extend_from_slice(&w.to_le_bytes());
        }

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(3 + self.codes.is_some() as u32).to_le_bytes());
        write_section(&mut out, TAG_META, &meta.0);
        write_section(&mut out, TAG_FEAT, &feat);
        write_section(&mut out, TAG_MASK, &mask);
        if let Some(c) = &self.codes {
            let layout = c.codes.layout();
            let mut code = Writer::default();
            code.u32(as_u32(layout.l(), "L")?);
            code.u32(as_u32(layout.m(), "M")?);
            code.u32(as_u32(self.dim(), "D")?);
            code.u64(c.seed);
            code.u8(layout.bits_per_code() as u8);
            code.u8(CodeLayout::VERSION);
            code.u64(c.codes.len() as u64);
            code.u32(as_u32(layout.words_per_row(), "words per row")?);
            for w in c.codes.words() {
                code.u64(*w);
            }
            write_section(&mut out, TAG_CODE, &code.0);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "header");
        let magic = r.take(8).map_err(|_| FormatError::BadMagic)?;
        if magic != MAGIC {
            return Err(FormatError::BadMagic.into());
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion(version).into());
        }
        let sections = r.u32()?;
        if !(3..=4).contains(&sections) {
            return Err(malformed("header", format!("{sections} sections")));
        }

        let mut meta = Reader::new(r.section(TAG_META)?, "META");
        let sample_rate = meta.u32()?;
        let window_len = meta.u32()? as usize;
        let hop = meta.u32()? as usize;
        let window = match meta.u8()? {
            0 => WindowKind::Hann,
            k => return Err(malformed("META", format!("window kind {k}"))),
        };
        let kind_tag = meta.u8()?;
        let bands = meta.u32()? as usize;
        let f_min = meta.f64()?;
        let f_max = meta.f64()?;
        let kind = match kind_tag {
            0 => FeatureKind::Magnitude,
            1 => FeatureKind::Mel(MelSpec {
                bands,
                f_min,
                f_max: (!f_max.is_nan()).then_some(f_max),
            }),
            k => return Err(malformed("META", format!("feature kind {k}"))),
        };
        let rows = usize::try_from(meta.u64()?).map_err(|_| malformed("META", "row count"))?;
        let dim = meta.u32()? as usize;
        let bins = meta.u32()? as usize;
        let has_codes = match meta.u8()? {
            0 => false,
            1 => true,
            v => return Err(malformed("META", format!("code flag {v}"))),
        };
        meta.finish()?;
        if has_codes as u32 + 3 != sections {
            return Err(malformed("header", "section count disagrees with META"));
        }
        let stft = StftConfig {
            window_len,
            hop,
            window,
        };
        stft.validate()
            .map_err(|e| malformed("META", e.to_string()))?;
        if stft.n_bins() != bins {
            return Err(malformed("META", "bin count disagrees with window length"));
        }

        let feat = r.section(TAG_FEAT)?;
        let expected = rows
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| malformed("FEAT", "size overflow"))?;
        if feat.len() != expected {
            return Err(malformed(
                "FEAT",
                format!("{} bytes, expected {expected}", feat.len()),
            ));
        }
        let values = feat
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let features = FeatureMatrix::new(rows, dim, values, kind)
            .map_err(|e| malformed("FEAT", e.to_string()))?;

        let mask = r.section(TAG_MASK)?;
        if !mask.len().is_multiple_of(8) {
            return Err(malformed("MASK", "length not a multiple of 8"));
        }
        let words: Vec<u64> = mask
            .chunks_exact(8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let ibm = IbmMatrix::from_words(rows, bins, words)
            .map_err(|e| malformed("MASK", e.to_string()))?;

        let mut dict = SeparationDictionary::new(sample_rate, stft, features, ibm)
            .map_err(|e| malformed("META", e.to_string()))?;

        if has_codes {
            let mut code = Reader::new(r.section(TAG_CODE)?, "CODE");
            let l = code.u32()? as usize;
            let m = code.u32()? as usize;
            let d = code.u32()? as usize;
            let seed = code.u64()?;
            let bits = code.u8()?;
            let layout_version = code.u8()?;
            let n = usize::try_from(code.u64()?).map_err(|_| malformed("CODE", "row count"))?;
            let wpr = code.u32()? as usize;
            let layout = CodeLayout::new(l, m).map_err(|e| malformed("CODE", e.to_string()))?;
            if layout_version != CodeLayout::VERSION {
                return Err(malformed(
                    "CODE",
                    format!("layout version {layout_version}"),
                ));
            }
            if bits as u32 != layout.bits_per_code() || wpr != layout.words_per_row() {
                return Err(malformed("CODE", "layout fields disagree with L and M"));
            }
            if d != dim || n != rows {
                return Err(malformed("CODE", "shape disagrees with META"));
            }
            generate_permutations(seed, l, m, d).map_err(|e| malformed("CODE", e.to_string()))?;
            let count = n
                .checked_mul(wpr)
                .ok_or_else(|| malformed("CODE", "size overflow"))?;
            let mut words = Vec::with_capacity(count);
            for _ in 0..count {
                words.push(code.u64()?);
            }
            code.finish()?;
            let codes = HashCodes::from_packed(layout, n, words)
                .map_err(|e| malformed("CODE", e.to_string()))?;
            dict.set_codes(Some(DictionaryCodes { seed, codes }))?;
        }
        r.section = "trailer";
        r.finish()?;
        Ok(dict)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

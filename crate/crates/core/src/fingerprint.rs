use core::fmt;

use sha2::{Digest, Sha256};

/// Short content hash used to tie artifacts to the normalization statistics
/// and frontend settings they were produced with.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Fingerprint(pub [u8; 8]);

impl Fingerprint {
    pub fn builder() -> FingerprintBuilder {
        FingerprintBuilder(Sha256::new())
    }

    pub fn to_hex(&self) -> alloc::string::String {
        use fmt::Write;
        let mut s = alloc::string::String::with_capacity(16);
        for b in self.0 {
            let _ = write!(s, "{b:02x}");
        }
        s
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        if s.len() != 16 || !s.is_ascii() {
            return None;
        }
        let mut out = [0u8; 8];
        for (i, o) in out.iter_mut().enumerate() {
            *o = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
        }
        Some(Self(out))
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({self})")
    }
}

pub struct FingerprintBuilder(Sha256);

impl FingerprintBuilder {
    pub fn bytes(mut self, b: &[u8]) -> Self {
        self.0.update((b.len() as u64).to_le_bytes());
        self.0.update(b);
        self
    }

    pub fn u64(mut self, v: u64) -> Self {
        self.0.update(v.to_le_bytes());
        self
    }

    pub fn f64s(mut self, vs: &[f64]) -> Self {
        self.0.update((vs.len() as u64).to_le_bytes());
        for v in vs {
            self.0.update(v.to_bits().to_le_bytes());
        }
        self
    }

    pub fn finish(self) -> Fingerprint {
        let digest = self.0.finalize();
        let mut out = [0u8; 8];
        out.copy_from_slice(&digest[..8]);
        Fingerprint(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip() {
        let fp = Fingerprint::builder().u64(7).f64s(&[1.0, -2.5]).finish();
        assert_eq!(Fingerprint::from_hex(&fp.to_hex()), Some(fp));
        assert_ne!(fp, Fingerprint::builder().u64(8).f64s(&[1.0, -2.5]).finish());
    }
}

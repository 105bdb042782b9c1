//! Binary checkpoint format.
//!
//! ```text
//! "GMF1"
//! kind            u8   0 energy/user, 1 energy/item, 2 binary/user, 3 binary/item
//! n_cond n_profile k width   u64 LE each (width = coding or hidden units)
//! then per matrix: row-major f64 LE data, CRC32 (u32 LE) of those bytes
//! energy order: sigma, v, w_enc, b_enc, w_dec, b_dec
//! binary order: sigma, v, w_hidden, b_hidden, w_out, b_out
//! ```

use std::path::Path;

use super::{BinaryDiscParams, Discriminator, DiscriminatorParams, GeneratorParams, Mode};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

const MAGIC: &[u8; 4] = b"GMF1";

/// A trained model: generator, its discriminator and the training mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub mode: Mode,
    pub generator: GeneratorParams,
    pub discriminator: Discriminator,
}

impl Checkpoint {
    fn kind_byte(&self) -> u8 {
        let bin = matches!(self.discriminator, Discriminator::Binary(_));
        match (bin, self.mode) {
            (false, Mode::User) => 0,
            (false, Mode::Item) => 1,
            (true, Mode::User) => 2,
            (true, Mode::Item) => 3,
        }
    }

    /// `ganmf-u`, `binganmf-i` and so on.
    pub fn mode_label(&self) -> String {
        let prefix = match self.discriminator {
            Discriminator::Energy(_) => "ganmf",
            Discriminator::Binary(_) => "binganmf",
        };
        let suffix = match self.mode {
            Mode::User => "u",
            Mode::Item => "i",
        };
        format!("{prefix}-{suffix}")
    }

    fn matrices(&self) -> Vec<&DenseMatrix> {
        let mut out = vec![&self.generator.sigma, &self.generator.v];
        match &self.discriminator {
            Discriminator::Energy(d) => out.extend([&d.w_enc, &d.b_enc, &d.w_dec, &d.b_dec]),
            Discriminator::Binary(d) => out.extend([&d.w_hidden, &d.b_hidden, &d.w_out, &d.b_out]),
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(self.kind_byte());
        let width = match &self.discriminator {
            Discriminator::Energy(d) => d.coding_dim(),
            Discriminator::Binary(d) => d.hidden_dim(),
        };
        for dim in [self.generator.n_cond(), self.generator.n_profile(), self.generator.k(), width] {
            out.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for m in self.matrices() {
            let start = out.len();
            for v in m.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            let crc = crc32fast::hash(&out[start..]);
            out.extend_from_slice(&crc.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |m: &str| Error::Format(format!("checkpoint: {m}"));
        if bytes.len() < 5 + 32 || &bytes[..4] != MAGIC {
            return Err(fail("missing GMF1 header"));
        }
        let kind = bytes[4];
        let (binary, mode) = match kind {
            0 => (false, Mode::User),
            1 => (false, Mode::Item),
            2 => (true, Mode::User),
            3 => (true, Mode::Item),
            k => return Err(fail(&format!("unknown model kind {k}"))),
        };
        let dim = |i: usize| u64::from_le_bytes(bytes[5 + 8 * i..13 + 8 * i].try_into().unwrap()) as usize;
        let (n_cond, n_profile, k, width) = (dim(0), dim(1), dim(2), dim(3));
        let shapes = if binary {
            [(n_cond, k), (n_profile, k), (width, n_profile), (1, width), (1, width), (1, 1)]
        } else {
            [(n_cond, k), (n_profile, k), (width, n_profile), (1, width), (n_profile, width), (1, n_profile)]
        };
        let mut pos = 37;
        let mut mats = Vec::with_capacity(6);
        for (idx, (r, c)) in shapes.into_iter().enumerate() {
            let len = r.checked_mul(c).and_then(|n| n.checked_mul(8)).ok_or_else(|| fail("dimension overflow"))?;
            let end = pos + len;
            if end + 4 > bytes.len() {
                return Err(fail("truncated"));
            }
            let payload = &bytes[pos..end];
            let stored = u32::from_le_bytes(bytes[end..end + 4].try_into().unwrap());
            if crc32fast::hash(payload) != stored {
                return Err(fail(&format!("CRC mismatch in matrix {idx}")));
            }
            let data = payload.chunks_exact(8).map(|ch| f64::from_le_bytes(ch.try_into().unwrap())).collect();
            mats.push(DenseMatrix::from_vec(r, c, data)?);
            pos = end + 4;
        }
        if pos != bytes.len() {
            return Err(fail("trailing bytes"));
        }
        let mut it = mats.into_iter();
        let mut next = || it.next().unwrap();
        let generator = GeneratorParams::new(next(), next())?;
        let discriminator = if binary {
            Discriminator::Binary(BinaryDiscParams::new(next(), next(), next(), next())?)
        } else {
            Discriminator::Energy(DiscriminatorParams::new(next(), next(), next(), next())?)
        };
        Ok(Self {
            mode,
            generator,
            discriminator,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_bytes(&bytes)
    }
}

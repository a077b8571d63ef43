use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::huffman::HuffmanTree;
use super::model::EmbeddingModel;
use super::train::{LrSchedule, TrainingConfig};
use crate::corpus::{RegionId, Vocabulary, MAIN_REGION};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GEODIST\0";
pub const FORMAT_VERSION: u32 = 1;

fn write_str<W: Write>(out: &mut W, s: &str) -> Result<()> {
    out.write_u32::<LittleEndian>(s.len() as u32)?;
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(input: &mut R) -> Result<String> {
    let n = input.read_u32::<LittleEndian>()? as usize;
    let mut buf = vec![0; n];
    input.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Format("string is not utf-8".into()))
}

fn write_block<W: Write>(out: &mut W, xs: &[f64]) -> Result<()> {
    for &x in xs {
        out.write_f32::<LittleEndian>(x as f32)?;
    }
    Ok(())
}

fn read_block<R: Read>(input: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut raw = vec![0f32; n];
    input.read_f32_into::<LittleEndian>(&mut raw)?;
    Ok(raw.into_iter().map(f64::from).collect())
}

impl EmbeddingModel {
    /// Writes the versioned binary model. Parameters are stored as
    /// little-endian `f32`.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.vocab.len();
        out.write_all(MAGIC)?;
        out.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        out.write_u32::<LittleEndian>(n as u32)?;
        out.write_u32::<LittleEndian>(self.dim as u32)?;
        out.write_u32::<LittleEndian>(self.regions.len() as u32)?;
        for r in &self.regions {
            write_str(&mut out, r.as_str())?;
        }
        let c = &self.config;
        out.write_u32::<LittleEndian>(c.window as u32)?;
        out.write_f64::<LittleEndian>(c.lr)?;
        out.write_u32::<LittleEndian>(c.epochs as u32)?;
        out.write_u64::<LittleEndian>(c.seed)?;
        out.write_u8(match c.lr_schedule {
            LrSchedule::Fixed => 0,
            LrSchedule::LinearDecay => 1,
        })?;
        out.write_u32::<LittleEndian>(c.threads as u32)?;

        let mut vocab = Vec::new();
        self.vocab.write_tsv(&mut vocab)?;
        out.write_u64::<LittleEndian>(vocab.len() as u64)?;
        out.write_all(&vocab)?;

        write_block(&mut out, &self.main)?;
        for d in &self.deltas {
            write_block(&mut out, d)?;
        }
        for w in 0..n {
            let code = self.tree.code(w);
            out.write_u32::<LittleEndian>(code.len() as u32)?;
            out.write_all(code)?;
            for &k in self.tree.path(w) {
                out.write_u32::<LittleEndian>(k)?;
            }
        }
        write_block(&mut out, &self.nodes)?;
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a geodist model file".into()));
        }
        let version = input.read_u32::<LittleEndian>()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let n = input.read_u32::<LittleEndian>()? as usize;
        let dim = input.read_u32::<LittleEndian>()? as usize;
        let nr = input.read_u32::<LittleEndian>()? as usize;
        let regions = (0..nr)
            .map(|_| RegionId::new(read_str(&mut input)?))
            .collect::<Result<Vec<_>>>()?;
        let window = input.read_u32::<LittleEndian>()? as usize;
        let lr = input.read_f64::<LittleEndian>()?;
        let epochs = input.read_u32::<LittleEndian>()? as usize;
        let seed = input.read_u64::<LittleEndian>()?;
        let lr_schedule = match input.read_u8()? {
            0 => LrSchedule::Fixed,
            1 => LrSchedule::LinearDecay,
            b => return Err(Error::Format(format!("unknown lr schedule tag {b}"))),
        };
        let threads = input.read_u32::<LittleEndian>()? as usize;
        let config = TrainingConfig {
            dim,
            window,
            lr,
            epochs,
            seed,
            lr_schedule,
            threads,
        };
        config.validate()?;

        let vlen = input.read_u64::<LittleEndian>()? as usize;
        let mut vbytes = vec![0; vlen];
        input.read_exact(&mut vbytes)?;
        let vocab = Vocabulary::read_tsv(&vbytes[..])?;
        if vocab.len() != n || vocab.regions() != &regions[..] {
            return Err(Error::Format("vocabulary block disagrees with header".into()));
        }

        let main = read_block(&mut input, n * dim)?;
        let deltas = (0..nr)
            .map(|_| read_block(&mut input, n * dim))
            .collect::<Result<Vec<_>>>()?;
        let mut codes = Vec::with_capacity(n);
        let mut paths = Vec::with_capacity(n);
        for _ in 0..n {
            let len = input.read_u32::<LittleEndian>()? as usize;
            if len > n {
                return Err(Error::Format("huffman code longer than vocabulary".into()));
            }
            let mut code = vec![0u8; len];
            input.read_exact(&mut code)?;
            let mut path = vec![0u32; len];
            input.read_u32_into::<LittleEndian>(&mut path)?;
            codes.push(code);
            paths.push(path);
        }
        let tree = HuffmanTree::from_parts(codes, paths)?;
        let nodes = read_block(&mut input, (n - 1) * dim)?;
        Ok(EmbeddingModel {
            vocab: Arc::new(vocab),
            regions,
            dim,
            main,
            deltas,
            tree,
            nodes,
            config,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    /// Text export, one row per (word, region): `word region v1 ... vd`.
    /// `MAIN` rows hold the global vectors, other rows the composed ones.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for w in 0..self.vocab.len() {
            let word = self.vocab.word(w);
            write!(out, "{word} {MAIN_REGION}")?;
            for x in self.global(w) {
                write!(out, " {}", *x as f32)?;
            }
            writeln!(out)?;
            for (r, region) in self.regions.iter().enumerate() {
                write!(out, "{word} {region}")?;
                for x in self.embedding(w, r) {
                    write!(out, " {}", x as f32)?;
                }
                writeln!(out)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, Document};
    use crate::embed::train;

    fn model() -> EmbeddingModel {
        let docs: Vec<Document> = [("US", "a b c a"), ("UK", "c b a b"), ("US", "a c d")]
            .iter()
            .map(|(r, t)| {
                Document::new(RegionId::new(*r).unwrap(), t.split_whitespace().map(String::from).collect())
            })
            .collect();
        let vocab = Arc::new(build_vocabulary(&docs, 1).unwrap());
        train(&docs, vocab, TrainingConfig { dim: 6, epochs: 2, seed: 3, ..Default::default() }).unwrap()
    }

    #[test]
    fn round_trip_is_f32_exact() {
        let m = model();
        let mut bytes = Vec::new();
        m.write_to(&mut bytes).unwrap();
        let back = EmbeddingModel::read_from(&bytes[..]).unwrap();
        assert_eq!(back.config, m.config);
        assert_eq!(back.tree, m.tree);
        assert_eq!(back.vocab.words(), m.vocab.words());
        for (a, b) in back.main.iter().zip(&m.main) {
            assert_eq!(*a, *b as f32 as f64);
        }
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(EmbeddingModel::read_from(&b"NOTAMODELFILE..."[..]), Err(Error::Format(_))));
        let mut bytes = Vec::new();
        model().write_to(&mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(EmbeddingModel::read_from(&bytes[..]).is_err());
    }

    #[test]
    fn text_export_rows() {
        let m = model();
        let mut out = Vec::new();
        m.write_text(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), m.vocab.len() * 3);
        let first: Vec<&str> = text.lines().next().unwrap().split(' ').collect();
        assert_eq!(first[1], "MAIN");
        assert_eq!(first.len(), 2 + 6);
    }
}

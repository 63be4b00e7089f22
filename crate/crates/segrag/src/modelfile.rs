//! Binary boundary-model file.
//!
//! Little-endian layout:
//!
//! ```text
//! "SEGRAGBM"  8 bytes magic
//! u16         version (1)
//! u8          variant (0 = psc, 1 = mfc)
//! u32         dimension d
//! d*d x f32   W, row-major
//! d x f32     c
//! mfc only:   3 x f32 fusion weights, f32 fusion bias
//! ```

use std::path::Path;

use segrag_core::boundary::{BoundaryModel, Fusion, Variant};

use crate::error::{Error, Result};
use crate::io::write_atomic;

pub const MAGIC: &[u8; 8] = b"SEGRAGBM";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 8 + 2 + 1 + 4;

pub fn encode(model: &BoundaryModel) -> Vec<u8> {
    let d = model.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * (d * d + d + 4));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(model.variant().code());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    let mut put = |x: f32| out.extend_from_slice(&x.to_le_bytes());
    model.weight().iter().for_each(|&x| put(x));
    model.bias().iter().for_each(|&x| put(x));
    if let Some(f) = model.fusion() {
        f.weights.iter().for_each(|&x| put(x));
        put(f.bias);
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<BoundaryModel> {
    let format = |message: String| Error::Format { path: path.into(), message };
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(format("not a boundary model (bad magic)".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Corruption { path: path.into(), message: "header truncated".into() });
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != VERSION {
        return Err(format(format!("unsupported model version {version}")));
    }
    let variant = Variant::from_code(bytes[10]).ok_or_else(|| format(format!("unknown variant code {}", bytes[10])))?;
    let d = u32::from_le_bytes(bytes[11..15].try_into().unwrap()) as usize;
    let floats = d * d + d + if variant == Variant::Mfc { 4 } else { 0 };
    let body = &bytes[HEADER_LEN..];
    if body.len() != 4 * floats {
        return Err(Error::Corruption {
            path: path.into(),
            message: format!("{variant} model of dimension {d} needs {} bytes, found {}", 4 * floats, body.len()),
        });
    }
    let vals: Vec<f32> = body.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
    let (weight, rest) = vals.split_at(d * d);
    let (bias, rest) = rest.split_at(d);
    let fusion = (variant == Variant::Mfc).then(|| Fusion { weights: [rest[0], rest[1], rest[2]], bias: rest[3] });
    BoundaryModel::from_parts(variant, d, weight.to_vec(), bias.to_vec(), fusion)
        .map_err(|e| Error::Corruption { path: path.into(), message: e.to_string() })
}

pub fn save_model(model: &BoundaryModel, path: &Path) -> Result<()> {
    write_atomic(path, &encode(model))
}

/// Loads a model; with `expected` set, a file of the other variant is an error.
pub fn load_model(path: &Path, expected: Option<Variant>) -> Result<BoundaryModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let model = decode(&bytes, path)?;
    match expected {
        Some(v) if v != model.variant() => Err(Error::Format {
            path: path.into(),
            message: format!("expected a {v} model, file holds a {} model", model.variant()),
        }),
        _ => Ok(model),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use segrag_core::boundary::Parameters;

    #[test]
    fn round_trip_both_variants() {
        let dir = tempfile::tempdir().unwrap();
        for v in [Variant::Psc, Variant::Mfc] {
            let m = Parameters::init(v, 6, 9).to_model();
            let p = dir.path().join(format!("{v}.bin"));
            save_model(&m, &p).unwrap();
            assert_eq!(load_model(&p, Some(v)).unwrap(), m);
            assert_eq!(load_model(&p, None).unwrap(), m);
            let len = std::fs::metadata(&p).unwrap().len() as usize;
            assert_eq!(len, 15 + 4 * (36 + 6 + if v == Variant::Mfc { 4 } else { 0 }));
        }
    }

    #[test]
    fn wrong_variant_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("psc.bin");
        save_model(&BoundaryModel::identity(Variant::Psc, 3), &p).unwrap();
        match load_model(&p, Some(Variant::Mfc)) {
            Err(Error::Format { message, .. }) => assert!(message.contains("mfc"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn damaged_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let good = encode(&BoundaryModel::identity(Variant::Mfc, 4));
        std::fs::write(&p, &good[..good.len() - 3]).unwrap();
        assert!(matches!(load_model(&p, None), Err(Error::Corruption { .. })));
        let mut bad = good.clone();
        bad[10] = 7;
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(load_model(&p, None), Err(Error::Format { .. })));
        let mut bad = good.clone();
        let at = bad.len() - 4;
        bad[at..].copy_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(load_model(&p, None), Err(Error::Corruption { .. })));
    }
}

//! `OGNN` model files.
//!
//! ```text
//! magic "OGNN", version u8 = 1, layer count u8
//! per layer:
//!   kind u8        0 conv1d, 1 fully connected, 2 batch norm, 3 relu, 4 softmax
//!   ndims u8, dims u32 LE x ndims
//!     conv1d          [in_width, in_depth, kernel, stride, out_depth]
//!     fully connected [outputs, inputs]
//!     batch norm      [features]
//!     relu / softmax  [n]
//!   parameters, f32 LE, row-major
//!     conv1d / fc     weight, bias
//!     batch norm      scale, shift, running mean, running variance, epsilon
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::layers::{BatchNorm, Conv1d, Dense};
use super::network::{Layer, Network};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"OGNN";
pub const VERSION: u8 = 1;

const KIND_CONV: u8 = 0;
const KIND_FC: u8 = 1;
const KIND_BN: u8 = 2;
const KIND_RELU: u8 = 3;
const KIND_SOFTMAX: u8 = 4;

fn write_dims<W: Write>(w: &mut W, dims: &[usize]) -> Result<()> {
    w.write_all(&[dims.len() as u8])?;
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| Error::Model(format!("dimension {d} too large")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    Ok(())
}

fn write_f32s<W: Write>(w: &mut W, values: &[f32]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn encode<W: Write>(net: &Network<f32>, mut w: W) -> Result<()> {
    let count = u8::try_from(net.layers().len())
        .map_err(|_| Error::Model("more than 255 layers".into()))?;
    w.write_all(&MAGIC)?;
    w.write_all(&[VERSION, count])?;
    for layer in net.layers() {
        match layer {
            Layer::Conv1d(c) => {
                w.write_all(&[KIND_CONV])?;
                write_dims(
                    &mut w,
                    &[c.in_width, c.in_depth, c.kernel, c.stride, c.out_depth],
                )?;
                write_f32s(&mut w, &c.weight)?;
                write_f32s(&mut w, &c.bias)?;
            }
            Layer::Dense(d) => {
                w.write_all(&[KIND_FC])?;
                write_dims(&mut w, &[d.outputs, d.inputs])?;
                write_f32s(&mut w, &d.weight)?;
                write_f32s(&mut w, &d.bias)?;
            }
            Layer::BatchNorm(b) => {
                w.write_all(&[KIND_BN])?;
                write_dims(&mut w, &[b.features])?;
                write_f32s(&mut w, &b.scale)?;
                write_f32s(&mut w, &b.shift)?;
                write_f32s(&mut w, &b.running_mean)?;
                write_f32s(&mut w, &b.running_var)?;
                write_f32s(&mut w, &[b.epsilon])?;
            }
            Layer::Relu(n) => {
                w.write_all(&[KIND_RELU])?;
                write_dims(&mut w, &[*n])?;
            }
            Layer::Softmax(k) => {
                w.write_all(&[KIND_SOFTMAX])?;
                write_dims(&mut w, &[*k])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

struct Decoder<R> {
    r: R,
    layer: usize,
}

impl<R: Read> Decoder<R> {
    fn fail(&self, what: &str) -> Error {
        Error::Model(format!("layer {}: {what}", self.layer))
    }

    fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.r
            .read_exact(&mut b)
            .map_err(|_| self.fail("unexpected end of file"))?;
        Ok(b[0])
    }

    fn dims(&mut self, want: usize) -> Result<Vec<usize>> {
        let n = self.u8()? as usize;
        if n != want {
            return Err(self.fail(&format!("expected {want} dims, found {n}")));
        }
        (0..n)
            .map(|_| {
                let mut b = [0u8; 4];
                self.r
                    .read_exact(&mut b)
                    .map_err(|_| self.fail("truncated dims"))?;
                Ok(u32::from_le_bytes(b) as usize)
            })
            .collect()
    }

    fn f32s(&mut self, out: &mut [f32]) -> Result<()> {
        let mut b = [0u8; 4];
        for v in out.iter_mut() {
            self.r
                .read_exact(&mut b)
                .map_err(|_| self.fail("truncated parameters"))?;
            *v = f32::from_le_bytes(b);
            if !v.is_finite() {
                return Err(self.fail("non-finite parameter"));
            }
        }
        Ok(())
    }
}

pub fn decode<R: Read>(r: R) -> Result<Network<f32>> {
    let mut d = Decoder { r, layer: 0 };
    let mut magic = [0u8; 4];
    d.r.read_exact(&mut magic)
        .map_err(|_| Error::Model("truncated header".into()))?;
    if magic != MAGIC {
        return Err(Error::BadMagic {
            what: "model",
            found: magic,
        });
    }
    let version = d.u8()?;
    if version != VERSION {
        return Err(Error::BadVersion {
            what: "model",
            found: version,
        });
    }
    let count = d.u8()? as usize;
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        d.layer = i;
        let layer = match d.u8()? {
            KIND_CONV => {
                let dims = d.dims(5)?;
                let mut c = Conv1d::new(dims[0], dims[1], dims[2], dims[3], dims[4])?;
                d.f32s(&mut c.weight)?;
                d.f32s(&mut c.bias)?;
                Layer::Conv1d(c)
            }
            KIND_FC => {
                let dims = d.dims(2)?;
                let mut fc = Dense::new(dims[1], dims[0])?;
                d.f32s(&mut fc.weight)?;
                d.f32s(&mut fc.bias)?;
                Layer::Dense(fc)
            }
            KIND_BN => {
                let dims = d.dims(1)?;
                let mut bn = BatchNorm::new(dims[0])?;
                d.f32s(&mut bn.scale)?;
                d.f32s(&mut bn.shift)?;
                d.f32s(&mut bn.running_mean)?;
                d.f32s(&mut bn.running_var)?;
                let mut eps = [0f32];
                d.f32s(&mut eps)?;
                bn.epsilon = eps[0];
                if bn.running_var.iter().any(|v| *v < 0.0) || eps[0] < 0.0 {
                    return Err(d.fail("negative variance or epsilon"));
                }
                Layer::BatchNorm(bn)
            }
            KIND_RELU => Layer::Relu(d.dims(1)?[0]),
            KIND_SOFTMAX => Layer::Softmax(d.dims(1)?[0]),
            k => return Err(d.fail(&format!("unknown layer kind {k}"))),
        };
        layers.push(layer);
    }
    let mut trailing = [0u8; 1];
    if d.r.read(&mut trailing)? != 0 {
        return Err(Error::Model("trailing bytes after last layer".into()));
    }
    Network::new(layers)
}

pub fn save_model(net: &Network<f32>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(Error::at_path(path))?;
    encode(net, BufWriter::new(file))
}

pub fn load_model(path: &Path) -> Result<Network<f32>> {
    let file = File::open(path).map_err(Error::at_path(path))?;
    decode(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn sample_net() -> Network<f32> {
        let mut n = Network::new(vec![
            Layer::Conv1d(Conv1d::new(8, 1, 4, 4, 3).unwrap()),
            Layer::Relu(6),
            Layer::BatchNorm(BatchNorm::new(6).unwrap()),
            Layer::Dense(Dense::new(6, 2).unwrap()),
            Layer::Softmax(2),
        ])
        .unwrap();
        n.init_weights(&mut ChaCha8Rng::seed_from_u64(3));
        if let Layer::BatchNorm(b) = &mut n.layers_mut()[2] {
            b.running_var[1] = 2.5;
            b.running_mean[0] = -0.25;
        }
        n
    }

    #[test]
    fn round_trip_is_exact() {
        let n = sample_net();
        let mut buf = Vec::new();
        encode(&n, &mut buf).unwrap();
        assert_eq!(&buf[..6], b"OGNN\x01\x05");
        // conv layer header: kind 0, 5 dims
        assert_eq!(buf[6], 0);
        assert_eq!(buf[7], 5);
        assert_eq!(&buf[8..12], &8u32.to_le_bytes());
        assert_eq!(decode(&buf[..]).unwrap(), n);
    }

    #[test]
    fn rejects_corruption() {
        let mut buf = Vec::new();
        encode(&sample_net(), &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[3] = b'X';
        assert!(matches!(decode(&bad[..]), Err(Error::BadMagic { .. })));
        let mut bad = buf.clone();
        bad[4] = 7;
        assert!(matches!(decode(&bad[..]), Err(Error::BadVersion { .. })));
        assert!(decode(&buf[..buf.len() - 3]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(decode(&long[..]).is_err());
    }
}

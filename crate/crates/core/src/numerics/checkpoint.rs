//! Keyed tensor container.
//!
//! Layout:
//!
//! ```text
//! SYNGCN1<TAB><tensor count>\n
//! <name><TAB><dtype><TAB><dim1>,<dim2>,...\n     (one line per tensor)
//! <raw little-endian values, tensor by tensor in header order>
//! ```

use std::io::{Read, Write};

use indexmap::IndexMap;

use super::params::ParamStore;
use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "SYNGCN1";

pub fn write_tensors<'a, T, W, I>(out: &mut W, tensors: I) -> Result<()>
where
    T: Scalar,
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a Tensor<T>)>,
{
    let tensors: Vec<_> = tensors.into_iter().collect();
    let mut header = format!("{FORMAT_VERSION}\t{}\n", tensors.len());
    for (name, t) in &tensors {
        if name.contains(['\t', '\n']) || name.is_empty() {
            return Err(Error::contract(format!("invalid tensor name {name:?}")));
        }
        let dims: Vec<String> = t.shape().iter().map(usize::to_string).collect();
        header.push_str(&format!("{name}\t{}\t{}\n", T::DTYPE, dims.join(",")));
    }
    out.write_all(header.as_bytes())?;
    let mut buf = Vec::new();
    for (_, t) in &tensors {
        buf.clear();
        for &x in t.data() {
            x.write_le(&mut buf);
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_tensors<T: Scalar, R: Read>(input: &mut R) -> Result<IndexMap<String, Tensor<T>>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut pos = 0;
    let mut next_line = |line_no: usize| -> Result<String> {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::format(line_no, "truncated header"))?;
        let line = std::str::from_utf8(&bytes[pos..pos + end])
            .map_err(|_| Error::format(line_no, "header is not UTF-8"))?
            .to_string();
        pos += end + 1;
        Ok(line)
    };

    let manifest = next_line(1)?;
    let (version, count) = manifest
        .split_once('\t')
        .ok_or_else(|| Error::format(1, "malformed manifest line"))?;
    if version != FORMAT_VERSION {
        return Err(Error::format(1, format!("unsupported format version `{version}`")));
    }
    let count: usize = count
        .parse()
        .map_err(|_| Error::format(1, format!("bad tensor count `{count}`")))?;

    let mut headers = Vec::with_capacity(count);
    for i in 0..count {
        let line_no = i + 2;
        let line = next_line(line_no)?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::format(line_no, "expected name<TAB>dtype<TAB>dims"));
        }
        if fields[1] != T::DTYPE {
            return Err(Error::format(
                line_no,
                format!("dtype `{}` does not match requested `{}`", fields[1], T::DTYPE),
            ));
        }
        let shape = fields[2]
            .split(',')
            .map(|d| d.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::format(line_no, format!("bad dims `{}`", fields[2])))?;
        headers.push((fields[0].to_string(), shape));
    }

    let mut out = IndexMap::with_capacity(count);
    for (name, shape) in headers {
        let n: usize = shape.iter().product();
        let end = pos + n * T::BYTES;
        if end > bytes.len() {
            return Err(Error::format(0, format!("payload truncated in tensor `{name}`")));
        }
        let data = bytes[pos..end].chunks_exact(T::BYTES).map(T::read_le).collect();
        pos = end;
        out.insert(name, Tensor::new(shape, data)?);
    }
    if pos != bytes.len() {
        return Err(Error::format(0, "trailing bytes after last tensor"));
    }
    Ok(out)
}

pub fn save_params<T: Scalar, W: Write>(out: &mut W, params: &ParamStore<T>) -> Result<()> {
    write_tensors(out, params.iter().map(|(k, p)| (k, p.value.as_ref())))
}

pub fn load_params<T: Scalar, R: Read>(input: &mut R, params: &mut ParamStore<T>) -> Result<()> {
    params.load_values(read_tensors(input)?)
}

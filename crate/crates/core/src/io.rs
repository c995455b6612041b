// Copyright 2026 The diracsim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Binary snapshots for fields, spinor states and Weyl symbols.
//!
//! Layout (all little-endian): magic, version `u32`, `d u32`, per-axis
//! `N u32` and `L f64`, kind tag `u32`, kind parameter `u32`, mass `f64`,
//! then node-major interleaved `re f64, im f64` pairs.

use num_complex::Complex64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::clifford::build_dirac_matrices;
use crate::error::{Error, Result};
use crate::lattice::{Axis, Field, Lattice, SpinorField, ValueKind};
use crate::weyl::WeylSymbol;

const FIELD_MAGIC: &[u8; 4] = b"DRSF";
const SYMBOL_MAGIC: &[u8; 4] = b"DRSY";
const VERSION: u32 = 1;

fn kind_tag(kind: ValueKind) -> (u32, u32) {
    match kind {
        ValueKind::Scalar => (0, 0),
        ValueKind::Vector(n) => (1, n as u32),
        ValueKind::Matrix(n) => (2, n as u32),
    }
}

fn kind_from_tag(tag: u32, param: u32) -> Result<ValueKind> {
    match tag {
        0 => Ok(ValueKind::Scalar),
        1 => Ok(ValueKind::Vector(param as usize)),
        2 => Ok(ValueKind::Matrix(param as usize)),
        t => Err(Error::SnapshotFormat(format!("unknown value-kind tag {t}"))),
    }
}

fn write_header(
    w: &mut impl Write,
    magic: &[u8; 4],
    lattice: &Lattice,
    kind: ValueKind,
    mass: f64,
) -> Result<()> {
    w.write_all(magic)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(lattice.d() as u32).to_le_bytes())?;
    for ax in lattice.axes() {
        w.write_all(&(ax.n as u32).to_le_bytes())?;
        w.write_all(&ax.period.to_le_bytes())?;
    }
    let (tag, param) = kind_tag(kind);
    w.write_all(&tag.to_le_bytes())?;
    w.write_all(&param.to_le_bytes())?;
    w.write_all(&mass.to_le_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_header(r: &mut impl Read, magic: &[u8; 4]) -> Result<(Lattice, ValueKind, f64)> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got)?;
    if &got != magic {
        return Err(Error::SnapshotFormat(format!("bad magic {got:?}")));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::SnapshotFormat(format!("unsupported version {version}")));
    }
    let d = read_u32(r)? as usize;
    if d == 0 || d > 8 {
        return Err(Error::SnapshotFormat(format!("implausible dimension {d}")));
    }
    let mut axes = Vec::with_capacity(d);
    for _ in 0..d {
        let n = read_u32(r)? as usize;
        let period = read_f64(r)?;
        axes.push(Axis { n, period });
    }
    let lattice = Lattice::new(axes)?;
    let kind = kind_from_tag(read_u32(r)?, read_u32(r)?)?;
    let mass = read_f64(r)?;
    Ok((lattice, kind, mass))
}

fn write_values(w: &mut impl Write, values: &[Complex64]) -> Result<()> {
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_values(r: &mut impl Read, count: usize) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        out.push(Complex64::new(re, im));
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::SnapshotFormat("trailing bytes after payload".into()));
    }
    Ok(out)
}

/// Write a space-domain field; `mass` travels alongside so spinor states can
/// rebuild their Dirac matrices on load (use 0.0 for plain fields).
pub fn write_field(path: &Path, field: &Field, mass: f64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, FIELD_MAGIC, &field.lattice, field.kind, mass)?;
    write_values(&mut w, &field.values)?;
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(Field, f64)> {
    let mut r = BufReader::new(File::open(path)?);
    let (lattice, kind, mass) = read_header(&mut r, FIELD_MAGIC)?;
    let count = lattice.node_count() * kind.dims();
    let values = read_values(&mut r, count)?;
    let mut field = Field::zeros(lattice, kind);
    field.values = values;
    Ok((field, mass))
}

pub fn write_spinor(path: &Path, psi: &SpinorField) -> Result<()> {
    write_field(path, &psi.field, psi.dirac.m)
}

pub fn read_spinor(path: &Path) -> Result<SpinorField> {
    let (field, mass) = read_field(path)?;
    let d = field.lattice.d();
    let dirac = Arc::new(build_dirac_matrices(d, mass)?);
    SpinorField::new(field, dirac)
}

/// Weyl symbols are stored over the refined grid of a self-dual base lattice
/// (`N = L^2`), so the doubled grid is uniform in both variables.
pub fn write_symbol(path: &Path, symbol: &WeylSymbol) -> Result<()> {
    if !symbol.self_dual() {
        return Err(Error::SnapshotFormat(
            "symbol snapshots need a self-dual base lattice (N = L^2)".into(),
        ));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, SYMBOL_MAGIC, &symbol.base, symbol.kind, 0.0)?;
    write_values(&mut w, &symbol.values)?;
    w.flush()?;
    Ok(())
}

pub fn read_symbol(path: &Path) -> Result<WeylSymbol> {
    let mut r = BufReader::new(File::open(path)?);
    let (base, kind, _) = read_header(&mut r, SYMBOL_MAGIC)?;
    let (x_nodes, xi_nodes) = WeylSymbol::refined_nodes(&base)?;
    let count = x_nodes.len() * xi_nodes.len() * kind.dims();
    let values = read_values(&mut r, count)?;
    let symbol = WeylSymbol { base, kind, x_nodes, xi_nodes, values };
    if !symbol.self_dual() {
        return Err(Error::SnapshotFormat(
            "symbol snapshots need a self-dual base lattice (N = L^2)".into(),
        ));
    }
    Ok(symbol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Domain;
    use crate::tfa;
    use std::f64::consts::PI;

    fn tmp(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("diracsim-io-{}-{name}", std::process::id()))
    }

    #[test]
    fn field_roundtrip_is_exact() {
        let lat = Lattice::uniform(2, 16, 4.0).unwrap();
        let f = &tfa::random_corpus(&lat, ValueKind::Vector(3), 1, 91)[0];
        let path = tmp("field.bin");
        write_field(&path, f, 0.0).unwrap();
        let (g, mass) = read_field(&path).unwrap();
        assert_eq!(mass, 0.0);
        assert_eq!(g.lattice, f.lattice);
        assert_eq!(g.kind, f.kind);
        assert_eq!(g.domain, Domain::Space);
        assert_eq!(g.values, f.values);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn spinor_roundtrip_rebuilds_dirac_set() {
        let lat = Lattice::uniform(1, 32, 8.0).unwrap();
        let dirac = Arc::new(crate::clifford::build_dirac_matrices(1, 0.5).unwrap());
        let psi = SpinorField::from_fn(lat, dirac, |x, out| {
            let g = (-PI * x[0] * x[0]).exp();
            out[0] = Complex64::new(g, 0.1);
            out[1] = Complex64::new(0.0, g);
        });
        let path = tmp("spinor.bin");
        write_spinor(&path, &psi).unwrap();
        let back = read_spinor(&path).unwrap();
        assert_eq!(back.dirac.m, 0.5);
        assert_eq!(back.dirac.n, 2);
        assert_eq!(back.field.values, psi.field.values);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn symbol_roundtrip_and_self_dual_guard() {
        let lat = Lattice::uniform(1, 16, 4.0).unwrap();
        let sym = WeylSymbol::scalar_from_fn(&lat, |x, xi| Complex64::new(x, xi)).unwrap();
        let path = tmp("symbol.bin");
        write_symbol(&path, &sym).unwrap();
        let back = read_symbol(&path).unwrap();
        assert_eq!(back.values, sym.values);
        assert_eq!(back.x_nodes, sym.x_nodes);
        std::fs::remove_file(&path).ok();

        let skew = Lattice::uniform(1, 16, 8.0).unwrap();
        let bad = WeylSymbol::scalar_from_fn(&skew, |_, _| Complex64::default()).unwrap();
        assert!(matches!(write_symbol(&tmp("bad.bin"), &bad), Err(Error::SnapshotFormat(_))));
    }

    #[test]
    fn corrupted_snapshots_are_rejected() {
        let lat = Lattice::uniform(1, 16, 4.0).unwrap();
        let f = Field::zeros(lat, ValueKind::Scalar);
        let path = tmp("corrupt.bin");
        write_field(&path, &f, 0.0).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_field(&path), Err(Error::SnapshotFormat(_))));
        // truncated payload
        write_field(&path, &f, 0.0).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(read_field(&path).is_err());
        // trailing garbage
        write_field(&path, &f, 0.0).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.push(0);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_field(&path), Err(Error::SnapshotFormat(_))));
        std::fs::remove_file(&path).ok();
    }
}

//! Field export: CSV for inspection, a small binary cache for re-runs.

use std::io::{Read, Write};
use std::sync::Arc;

use super::field::PhaseField;
use super::grid::{ExtensionPolicy, PhaseGrid};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"BZLF";
const VERSION: u32 = 1;

/// Writes `x₀.., v₀.., value` rows for every node.
pub fn write_field_csv<const N: usize, W: Write>(field: &PhaseField<N>, mut out: W) -> Result<()> {
    let grid = &field.grid;
    let mut header: Vec<String> = (0..N).map(|k| format!("x{k}")).collect();
    header.extend((0..N).map(|k| format!("v{k}")));
    header.push("value".into());
    writeln!(out, "{}", header.join(","))?;
    for (ix, x) in grid.x_nodes.iter().enumerate() {
        for (iv, v) in grid.v_nodes.iter().enumerate() {
            let mut line = String::new();
            for k in 0..N {
                line.push_str(&format!("{:.12e},", x[k]));
            }
            for k in 0..N {
                line.push_str(&format!("{:.12e},", v[k]));
            }
            line.push_str(&format!("{:.17e}", field.node(ix, iv)));
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// Binary layout (little endian): magic, version `u32`, dimension `u32`,
/// spatial and velocity node counts `u32`, value count `u64`, values `f64`.
pub fn write_field_cache<const N: usize, W: Write>(field: &PhaseField<N>, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(N as u32).to_le_bytes())?;
    out.write_all(&(field.grid.space.count as u32).to_le_bytes())?;
    out.write_all(&(field.grid.velocity.count as u32).to_le_bytes())?;
    out.write_all(&(field.values.len() as u64).to_le_bytes())?;
    for v in &field.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a cache written by [`write_field_cache`] onto a compatible grid.
pub fn read_field_cache<const N: usize, R: Read>(grid: Arc<PhaseGrid<N>>, policy: ExtensionPolicy, mut input: R) -> Result<PhaseField<N>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config("not a field cache".into()));
    }
    let mut word = [0u8; 4];
    let mut read_u32 = |input: &mut R| -> Result<u32> {
        input.read_exact(&mut word)?;
        Ok(u32::from_le_bytes(word))
    };
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(Error::Config(format!("field cache version {version} is not supported")));
    }
    let dim = read_u32(&mut input)? as usize;
    let ns = read_u32(&mut input)? as usize;
    let nvel = read_u32(&mut input)? as usize;
    if dim != N || ns != grid.space.count || nvel != grid.velocity.count {
        return Err(Error::Config("field cache does not match the grid".into()));
    }
    let mut long = [0u8; 8];
    input.read_exact(&mut long)?;
    let len = u64::from_le_bytes(long) as usize;
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        input.read_exact(&mut long)?;
        values.push(f64::from_le_bytes(long));
    }
    PhaseField::new(grid, values, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::solver::grid::GridSpec;

    #[test]
    fn cache_round_trip_is_bitwise() {
        let grid = Arc::new(PhaseGrid::<2>::new(&Domain::unit_ball(), GridSpec { spatial: 4, velocity: 4, ..Default::default() }).unwrap());
        let f = PhaseField::from_fn(grid.clone(), ExtensionPolicy::Zero, |x, v| (x[0] * v[1]).exp() / 3.0).unwrap();
        let mut buf = Vec::new();
        write_field_cache(&f, &mut buf).unwrap();
        let g = read_field_cache(grid.clone(), ExtensionPolicy::Zero, buf.as_slice()).unwrap();
        assert_eq!(f.values, g.values);
        buf[4] = 9;
        assert!(read_field_cache(grid, ExtensionPolicy::Zero, buf.as_slice()).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let grid = Arc::new(PhaseGrid::<2>::new(&Domain::unit_ball(), GridSpec { spatial: 3, velocity: 2, ..Default::default() }).unwrap());
        let f = PhaseField::from_fn(grid, ExtensionPolicy::Zero, |_, _| 1.0).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x0,x1,v0,v1,value\n"));
        assert_eq!(text.lines().count(), 1 + 9 * 4);
    }
}

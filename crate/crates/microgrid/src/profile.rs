//! Per-slot profile CSV: `slot,ghi_kw_m2,t_out_c,price_usd_kwh,misc_kw`.

use std::io::{Read, Write};
use std::path::Path;

use microgrid_core::domain::Profile;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const COLUMNS: [&str; 5] = ["slot", "ghi_kw_m2", "t_out_c", "price_usd_kwh", "misc_kw"];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    slot: usize,
    ghi_kw_m2: f64,
    t_out_c: f64,
    price_usd_kwh: f64,
    misc_kw: f64,
}

/// Parses a profile. `origin` names the source in errors.
pub fn read_profile(reader: impl Read, origin: &Path) -> Result<Profile> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::input(origin, e))?.clone();
    for col in COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::input(origin, format!("missing column `{col}`")));
        }
    }
    let mut p = Profile::default();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        let row = rec.map_err(|e| Error::input(origin, format!("row {}: {e}", i + 1)))?;
        if row.slot != i {
            return Err(Error::input(origin, format!("row {}: expected slot {i}, found {}", i + 1, row.slot)));
        }
        p.ghi.push(row.ghi_kw_m2);
        p.t_out.push(row.t_out_c);
        p.energy_price.push(row.price_usd_kwh);
        p.misc_load.push(row.misc_kw);
    }
    if p.is_empty() {
        return Err(Error::input(origin, "profile has no rows"));
    }
    Ok(p)
}

pub fn load_profile(path: &Path) -> Result<Profile> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_profile(file, path)
}

pub fn write_profile(p: &Profile, writer: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for slot in 0..p.len() {
        w.serialize(Row {
            slot,
            ghi_kw_m2: p.ghi[slot],
            t_out_c: p.t_out[slot],
            price_usd_kwh: p.energy_price[slot],
            misc_kw: p.misc_load[slot],
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Profile> {
        read_profile(text.as_bytes(), Path::new("p.csv"))
    }

    #[test]
    fn round_trip() {
        let p = parse("slot,ghi_kw_m2,t_out_c,price_usd_kwh,misc_kw\n0,0.5,30,0.22,20\n1, 0.25 ,31,0.41,20\n").unwrap();
        assert_eq!(p.ghi, vec![0.5, 0.25]);
        let mut out = Vec::new();
        write_profile(&p, &mut out).unwrap();
        assert_eq!(parse(std::str::from_utf8(&out).unwrap()).unwrap(), p);
    }

    #[test]
    fn missing_column_named() {
        let err = parse("slot,ghi_kw_m2,t_out_c,misc_kw\n0,0.5,30,20\n").unwrap_err();
        assert!(err.to_string().contains("price_usd_kwh"), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn bad_rows() {
        assert!(parse("slot,ghi_kw_m2,t_out_c,price_usd_kwh,misc_kw\n1,0.5,30,0.2,20\n").is_err());
        assert!(parse("slot,ghi_kw_m2,t_out_c,price_usd_kwh,misc_kw\n0,x,30,0.2,20\n").is_err());
        assert!(parse("slot,ghi_kw_m2,t_out_c,price_usd_kwh,misc_kw\n").is_err());
    }
}

//! Binary checkpoints: magic, version, a JSON header with the parameters and
//! ledger, then the spectrum as little-endian `f64` pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::EnergyLedger;
use crate::error::{Error, Result};
use crate::evolution::{DimensionlessParams, SimState};
use crate::spectral::PeriodicSpectrum;

const MAGIC: &[u8; 8] = b"MUSKATCK";
const VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    params: DimensionlessParams,
    t: f64,
    integral4_mu: f64,
    ledger: EnergyLedger,
}

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub params: DimensionlessParams,
    pub state: SimState,
    pub integral4_mu: f64,
    pub ledger: EnergyLedger,
}

pub fn write_checkpoint_to<W: Write>(
    w: &mut W,
    params: &DimensionlessParams,
    state: &SimState,
    integral4_mu: f64,
    ledger: &EnergyLedger,
) -> Result<()> {
    let header = Header { params: params.clone(), t: state.t, integral4_mu, ledger: ledger.clone() };
    let json = serde_json::to_vec(&header)?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    state.h.write_binary(w)?;
    Ok(())
}

/// Writes next to the target and renames, so a crash never leaves a torn file.
pub fn write_checkpoint(
    path: &Path,
    params: &DimensionlessParams,
    state: &SimState,
    integral4_mu: f64,
    ledger: &EnergyLedger,
) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write_checkpoint_to(&mut w, params, state, integral4_mu, ledger)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_checkpoint_from<R: Read>(r: &mut R) -> Result<Checkpoint> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io("not a checkpoint file".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Io(format!("unsupported checkpoint version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let mut json = vec![0u8; u64::from_le_bytes(b8) as usize];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    let h = PeriodicSpectrum::read_binary(r)?;
    Ok(Checkpoint {
        params: header.params,
        state: SimState { t: header.t, h },
        integral4_mu: header.integral4_mu,
        ledger: header.ledger,
    })
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_checkpoint_from(&mut BufReader::new(File::open(path)?))
}

//! JSON codecs and seeded generation of generic pairs.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::genericity::GENERICITY_TOL;
use crate::pair::{Mode, Pair};
use crate::space::{random_isometry_with, Field, HMatrix, HermitianSpace};
use crate::spectral::{diagonal_element, SpectralParams};

/// Minimum distance between eigenvalue classes, in (real part, modulus).
pub const CLASS_SEPARATION: f64 = 1e-3;
/// Angles keep at least this distance from each other and from `0`, `pi`.
const ANGLE_FLOOR: f64 = 0.05;
const MAX_ATTEMPTS: usize = 200;
/// Entry bound for sampled conjugating isometries; keeps generated elements
/// well enough conditioned for tight invariance checks.
pub const CONJUGATOR_BOUND: f64 = 4.0;

/// Pretty JSON. Floats use the shortest representation that parses back
/// to the same bits.
pub fn to_json<T: Serialize>(x: &T) -> Result<String> {
    serde_json::to_string_pretty(x).map_err(|e| Error::Io(e.to_string()))
}

pub fn from_json<T: DeserializeOwned>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    from_json(&text)
}

pub fn write_json<T: Serialize>(path: &Path, x: &T) -> Result<()> {
    let mut text = to_json(x)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// One step of splitmix64.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` under a master seed.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

fn separated(values: &[f64], floor: f64) -> bool {
    values.iter().enumerate().all(|(i, x)| values[i + 1..].iter().all(|y| (x - y).abs() >= floor))
}

/// Random regular loxodromic spectrum. Complex spectra have determinant 1.
pub fn random_spectral_params<R: Rng>(rng: &mut R, n: usize, field: Field) -> Result<SpectralParams> {
    for _ in 0..MAX_ATTEMPTS {
        let r = rng.random_range(0.2..0.9);
        let (theta, phi) = match field {
            Field::Quaternion => {
                let theta = rng.random_range(ANGLE_FLOOR..PI - ANGLE_FLOOR);
                let phi: Vec<f64> = (0..n - 1).map(|_| rng.random_range(ANGLE_FLOOR..PI - ANGLE_FLOOR)).collect();
                (theta, phi)
            }
            Field::Complex => {
                let theta = rng.random_range(-PI..PI);
                let mut phi: Vec<f64> = (0..n - 2).map(|_| rng.random_range(-PI..PI)).collect();
                let total = 2.0 * theta + phi.iter().sum::<f64>();
                phi.push((-total + PI).rem_euclid(2.0 * PI) - PI);
                (theta, phi)
            }
        };
        let mut sorted = phi.clone();
        sorted.sort_by(f64::total_cmp);
        let spaced = match field {
            // classes are determined by the angle in [0, pi]
            Field::Quaternion => separated(&[&[0.0, PI][..], &sorted].concat(), ANGLE_FLOOR),
            Field::Complex => {
                let wrapped: Vec<f64> = sorted.iter().chain(sorted.first().map(|x| x + 2.0 * PI).iter()).copied().collect();
                wrapped.windows(2).all(|w| w[1] - w[0] >= ANGLE_FLOOR)
            }
        };
        let res: Vec<f64> = phi.iter().map(|p| p.cos()).collect();
        if spaced && separated(&res, CLASS_SEPARATION) {
            let params = SpectralParams { r, theta, phi };
            params.validate()?;
            return Ok(params);
        }
    }
    Err(Error::GenerationExhausted(MAX_ATTEMPTS))
}

fn random_element<R: Rng>(rng: &mut R, space: &HermitianSpace) -> Result<HMatrix> {
    let params = random_spectral_params(rng, space.n, space.field)?;
    let q = bounded_isometry(space, rng)?;
    Ok(q.mul(&diagonal_element(&params)).mul(&q.isometry_inverse()))
}

/// Pair of conjugates of random regular diagonal elements, resampled until
/// the genericity requirement of `mode` holds.
pub fn generate_pair(space: &HermitianSpace, seed: u64, mode: Mode) -> Result<Pair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let pair = Pair::new(*space, random_element(&mut rng, space)?, random_element(&mut rng, space)?)?;
        match pair.analyze(GENERICITY_TOL) {
            Ok(analysis) if analysis.satisfies(mode) => return Ok(pair),
            _ => continue,
        }
    }
    Err(Error::GenerationExhausted(MAX_ATTEMPTS))
}

/// Random isometry with entries at most [`CONJUGATOR_BOUND`].
pub fn bounded_isometry<R: Rng>(space: &HermitianSpace, rng: &mut R) -> Result<HMatrix> {
    for _ in 0..MAX_ATTEMPTS {
        let q = random_isometry_with(space, rng)?;
        if q.max_abs() <= CONJUGATOR_BOUND {
            return Ok(q);
        }
    }
    Err(Error::GenerationExhausted(MAX_ATTEMPTS))
}

/// Random isometry for conjugating test pairs.
pub fn random_conjugator(space: &HermitianSpace, seed: u64) -> Result<HMatrix> {
    bounded_isometry(space, &mut ChaCha8Rng::seed_from_u64(seed))
}

//! Smallest-prime-factor tables and the standard multiplicative functions.
//!
//! The von Mangoldt function here is supported on primes only: prime powers
//! get weight zero. Every sum in the crate that involves `Λ` uses this
//! convention.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Default cap on the number of table entries (about 4 GiB of `u32`).
pub const DEFAULT_ENTRY_CAP: u64 = 1 << 30;

const CACHE_MAGIC: [u8; 4] = *b"SPF1";
const CACHE_VERSION: u32 = 1;

/// Smallest prime factor of every `n` in `2..=limit`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorTable {
    limit: u64,
    spf: Vec<u32>,
}

impl FactorTable {
    pub fn new(limit: u64) -> Result<Self> {
        Self::with_cap(limit, DEFAULT_ENTRY_CAP)
    }

    /// Linear sieve. `cap` bounds the number of entries allocated.
    pub fn with_cap(limit: u64, cap: u64) -> Result<Self> {
        if limit < 2 {
            return invalid(format!("factor table limit must be at least 2, got {limit}"));
        }
        if limit > u32::MAX as u64 {
            return Err(Error::OutOfRange { value: limit, limit: u32::MAX as u64 });
        }
        if limit + 1 > cap {
            return Err(Error::Capacity { requested: limit + 1, cap });
        }
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes: Vec<u32> = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                if p > si {
                    break;
                }
                let j = i * p as usize;
                if j > n {
                    break;
                }
                spf[j] = p;
            }
        }
        Ok(FactorTable { limit, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Smallest prime factor of `n` (0 for `n < 2`).
    #[inline]
    pub fn spf(&self, n: u64) -> u32 {
        self.spf[n as usize]
    }

    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.limit && self.spf[n as usize] as u64 == n
    }

    fn check(&self, n: u64) -> Result<()> {
        if n == 0 || n > self.limit {
            Err(Error::OutOfRange { value: n, limit: self.limit })
        } else {
            Ok(())
        }
    }

    /// Prime factorisation with strictly increasing primes. `factorize(1)` is empty.
    pub fn factorize(&self, n: u64) -> Result<Vec<(u64, u32)>> {
        self.check(n)?;
        Ok(self.factorize_unchecked(n))
    }

    pub(crate) fn factorize_unchecked(&self, mut n: u64) -> Vec<(u64, u32)> {
        let mut out: Vec<(u64, u32)> = Vec::with_capacity(8);
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        out
    }

    /// Distinct prime divisors, increasing.
    pub fn prime_divisors(&self, n: u64) -> Result<Vec<u64>> {
        Ok(self.factorize(n)?.into_iter().map(|(p, _)| p).collect())
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..=self.limit).filter(move |&n| self.is_prime(n))
    }

    pub fn mult_fn(&self, f: MultFn, n: u64) -> Result<f64> {
        self.check(n)?;
        Ok(f.eval(&self.factorize_unchecked(n)))
    }

    /// Number of prime factors with multiplicity, without allocating.
    #[inline]
    pub fn big_omega(&self, mut n: u64) -> u32 {
        let mut k = 0;
        while n > 1 {
            n /= self.spf[n as usize] as u64;
            k += 1;
        }
        k
    }

    pub fn mu(&self, n: u64) -> i32 {
        MultFn::Mu.eval(&self.factorize_unchecked(n)) as i32
    }

    pub fn phi(&self, n: u64) -> u64 {
        phi_of(&self.factorize_unchecked(n))
    }

    pub fn tau(&self, n: u64) -> u64 {
        self.factorize_unchecked(n).iter().map(|&(_, e)| e as u64 + 1).product()
    }

    /// `log n` at primes, 0 elsewhere.
    #[inline]
    pub fn von_mangoldt(&self, n: u64) -> f64 {
        if self.is_prime(n) {
            (n as f64).ln()
        } else {
            0.0
        }
    }

    pub fn is_squarefree(&self, n: u64) -> bool {
        self.factorize_unchecked(n).iter().all(|&(_, e)| e == 1)
    }

    pub fn radical(&self, n: u64) -> u64 {
        self.factorize_unchecked(n).iter().map(|&(p, _)| p).product()
    }

    /// Write the table to `path`: 16-byte header (magic, version, limit, all
    /// little-endian) followed by the raw `u32` entries for `0..=limit`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&self.limit.to_le_bytes())?;
        for &s in &self.spf {
            w.write_all(&s.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if header[0..4] != CACHE_MAGIC {
            return Err(Error::Format("bad factor-table magic".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(Error::Format(format!("unsupported factor-table version {version}")));
        }
        let limit = u64::from_le_bytes(header[8..16].try_into().unwrap());
        if !(2..=u32::MAX as u64).contains(&limit) {
            return Err(Error::Format(format!("bad factor-table limit {limit}")));
        }
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() as u64 != 4 * (limit + 1) {
            return Err(Error::Format("factor-table payload length mismatch".into()));
        }
        let spf = bytes.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(FactorTable { limit, spf })
    }

    /// Load from `path` if it holds a table covering `limit`, otherwise build and save.
    pub fn load_or_build(path: &Path, limit: u64) -> Result<Self> {
        if let Ok(t) = Self::load(path) {
            if t.limit >= limit {
                return Ok(t);
            }
        }
        let t = Self::new(limit)?;
        t.save(path)?;
        Ok(t)
    }
}

/// The multiplicative (and additive) functions exposed by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultFn {
    Phi,
    Mu,
    Tau,
    BigOmega,
    SmallOmega,
    VonMangoldt,
}

impl MultFn {
    pub fn eval(self, fac: &[(u64, u32)]) -> f64 {
        match self {
            MultFn::Phi => phi_of(fac) as f64,
            MultFn::Mu => {
                if fac.iter().any(|&(_, e)| e > 1) {
                    0.0
                } else if fac.len() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            MultFn::Tau => fac.iter().map(|&(_, e)| e as f64 + 1.0).product(),
            MultFn::BigOmega => fac.iter().map(|&(_, e)| e as f64).sum(),
            MultFn::SmallOmega => fac.len() as f64,
            MultFn::VonMangoldt => match fac {
                [(p, 1)] => (*p as f64).ln(),
                _ => 0.0,
            },
        }
    }
}

impl FromStr for MultFn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "phi" => MultFn::Phi,
            "mu" => MultFn::Mu,
            "tau" => MultFn::Tau,
            "bigomega" => MultFn::BigOmega,
            "smallomega" => MultFn::SmallOmega,
            "vonmangoldt" => MultFn::VonMangoldt,
            other => return Err(Error::UnknownName(other.to_string())),
        })
    }
}

pub fn mult_fn(name: &str, n: u64, t: &FactorTable) -> Result<f64> {
    t.mult_fn(name.parse()?, n)
}

fn phi_of(fac: &[(u64, u32)]) -> u64 {
    fac.iter().map(|&(p, e)| (p - 1) * p.pow(e - 1)).product()
}

/// Trial-division factorisation, for moduli and other small inputs that may
/// exceed any table at hand.
pub fn trial_factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

pub fn phi(n: u64) -> u64 {
    phi_of(&trial_factor(n))
}

pub fn mobius(n: u64) -> i64 {
    MultFn::Mu.eval(&trial_factor(n)) as i64
}

/// All positive divisors of `n`, unsorted, from its factorisation.
pub fn divisors_of(fac: &[(u64, u32)]) -> Vec<u64> {
    let mut ds = vec![1u64];
    for &(p, e) in fac {
        let len = ds.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                ds.push(ds[i] * pk);
            }
        }
    }
    ds
}

/// Primes `p` with `lo <= p < hi` by a plain Eratosthenes sieve.
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    if hi <= 2 {
        return Vec::new();
    }
    let n = hi as usize;
    let mut comp = vec![false; n];
    let mut out = Vec::new();
    for i in 2..n {
        if !comp[i] {
            if i as u64 >= lo {
                out.push(i as u64);
            }
            let mut j = i * i;
            while j < n {
                comp[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Primes `p` with `lo <= p < hi` where the bounds are real numbers.
pub fn primes_in_real(lo: f64, hi: f64) -> Vec<u64> {
    if hi <= 2.0 {
        return Vec::new();
    }
    let top = hi.ceil() as u64 + 1;
    primes_in(0, top).into_iter().filter(|&p| (p as f64) >= lo && (p as f64) < hi).collect()
}

/// Modular exponentiation with 128-bit intermediates.
pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u128;
    let mut bb = (b % m) as u128;
    let mm = m as u128;
    while e > 0 {
        if e & 1 == 1 {
            r = r * bb % mm;
        }
        bb = bb * bb % mm;
        e >>= 1;
    }
    b = r as u64;
    b
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return if m == 1 { Some(0) } else { None };
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}
